//! Graph families: lattice tori, complete graphs, and random geometric graphs
//! (symmetric k-nearest-neighbor and epsilon graphs) over uniform points in
//! the unit cube.

use alloc::vec::Vec;
use core::cmp::Ordering;

use rand::Rng;

use crate::error::{invalid, Result};
use crate::graph::Graph;

/// Points in `[0,1]^dim`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    dim: usize,
    coords: Vec<f64>,
}

impl PointCloud {
    pub fn uniform<R: Rng + ?Sized>(n: usize, dim: usize, rng: &mut R) -> Self {
        let coords = (0..n * dim).map(|_| rng.random::<f64>()).collect();
        PointCloud { dim, coords }
    }

    pub fn from_coords(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 || !coords.len().is_multiple_of(dim) {
            return Err(invalid!(
                "{} coordinates do not split into points of dimension {dim}",
                coords.len()
            ));
        }
        Ok(PointCloud { dim, coords })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        libm::sqrt(self.squared_distance(i, j))
    }

    fn squared_distance(&self, i: usize, j: usize) -> f64 {
        self.point(i)
            .iter()
            .zip(self.point(j))
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }
}

/// A graph generated from a point cloud; vertex `i` sits at `points.point(i)`.
#[derive(Debug, Clone)]
pub struct GeometricGraph {
    pub graph: Graph,
    pub points: PointCloud,
}

/// The `dims`-dimensional torus with `side` vertices per axis.
///
/// Vertex indices are mixed-radix with axis 0 fastest.
pub fn torus(side: usize, dims: usize) -> Result<Graph> {
    if side < 3 {
        return Err(invalid!("torus side must be at least 3, got {side}"));
    }
    if dims == 0 {
        return Err(invalid!("torus needs at least one dimension"));
    }
    let n = side
        .checked_pow(dims as u32)
        .ok_or_else(|| invalid!("torus {side}^{dims} is too large"))?;
    let mut edges = Vec::with_capacity(n * dims);
    for v in 0..n {
        let mut stride = 1;
        for _ in 0..dims {
            let coord = (v / stride) % side;
            let next = if coord + 1 == side {
                v - coord * stride
            } else {
                v + stride
            };
            edges.push((v, next));
            stride *= side;
        }
    }
    Graph::new(n, &edges)
}

pub fn complete(n: usize) -> Result<Graph> {
    if n < 2 {
        return Err(invalid!("complete graph needs n >= 2, got {n}"));
    }
    let mut edges = Vec::with_capacity(n * (n - 1) / 2);
    for u in 0..n {
        for v in u + 1..n {
            edges.push((u, v));
        }
    }
    Ok(Graph::from_canonical(n, edges))
}

/// Symmetric kNN graph: `i ~ j` when either is among the other's `k` nearest
/// points. Distance ties go to the smaller vertex index.
pub fn knn<R: Rng + ?Sized>(n: usize, k: usize, dim: usize, rng: &mut R) -> Result<GeometricGraph> {
    if k == 0 || k >= n {
        return Err(invalid!("kNN needs 1 <= k < n, got k={k}, n={n}"));
    }
    if dim == 0 {
        return Err(invalid!("point dimension must be positive"));
    }
    let points = PointCloud::uniform(n, dim, rng);
    knn_from_points(points, k)
}

pub fn knn_from_points(points: PointCloud, k: usize) -> Result<GeometricGraph> {
    let n = points.len();
    if k == 0 || k >= n {
        return Err(invalid!("kNN needs 1 <= k < n, got k={k}, n={n}"));
    }
    let mut edges = Vec::with_capacity(n * k);
    let mut order: Vec<(f64, usize)> = Vec::with_capacity(n);
    for i in 0..n {
        order.clear();
        order.extend((0..n).filter(|&j| j != i).map(|j| (points.squared_distance(i, j), j)));
        order.sort_unstable_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal).then(a.1.cmp(&b.1)));
        for &(_, j) in &order[..k] {
            edges.push((i.min(j), i.max(j)));
        }
    }
    edges.sort_unstable();
    edges.dedup();
    Ok(GeometricGraph {
        graph: Graph::from_canonical(n, edges),
        points,
    })
}

/// Epsilon graph: `i ~ j` iff `|z_i - z_j| <= eps`. May be disconnected.
pub fn epsilon<R: Rng + ?Sized>(n: usize, eps: f64, dim: usize, rng: &mut R) -> Result<GeometricGraph> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(invalid!("epsilon must be a positive finite radius, got {eps}"));
    }
    if dim == 0 {
        return Err(invalid!("point dimension must be positive"));
    }
    let points = PointCloud::uniform(n, dim, rng);
    epsilon_from_points(points, eps)
}

pub fn epsilon_from_points(points: PointCloud, eps: f64) -> Result<GeometricGraph> {
    if !(eps > 0.0) {
        return Err(invalid!("epsilon must be positive, got {eps}"));
    }
    let n = points.len();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if points.distance(i, j) <= eps {
                edges.push((i, j));
            }
        }
    }
    Ok(GeometricGraph {
        graph: Graph::from_canonical(n, edges),
        points,
    })
}
