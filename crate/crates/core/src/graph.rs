//! Immutable undirected simple graphs, signals over their vertices, and the
//! edge-incidence operator.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};

/// Absolute tolerance under which two vertex values count as equal.
pub const CUT_TOLERANCE: f64 = 1e-9;

/// An undirected simple graph on vertices `0..n`.
///
/// Edges are stored once as `(min, max)` pairs in lexicographic order. That
/// order is the row order of the incidence operator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    degrees: Vec<usize>,
    adjacency: Vec<Vec<usize>>,
}

impl Graph {
    /// Builds a graph from an arbitrary list of vertex pairs.
    ///
    /// Pairs may be given in either orientation and any order, but each
    /// unordered pair may appear only once.
    pub fn new(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut canonical = Vec::with_capacity(edges.len());
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(invalid!("edge ({u}, {v}) has an endpoint outside 0..{n}"));
            }
            if u == v {
                return Err(invalid!("self-loop at vertex {u}"));
            }
            canonical.push((u.min(v), u.max(v)));
        }
        canonical.sort_unstable();
        if let Some(w) = canonical.windows(2).find(|w| w[0] == w[1]) {
            return Err(invalid!("duplicate edge ({}, {})", w[0].0, w[0].1));
        }
        Ok(Self::from_canonical(n, canonical))
    }

    /// Builds from edges already known to be canonical, sorted and unique.
    pub(crate) fn from_canonical(n: usize, edges: Vec<(usize, usize)>) -> Self {
        debug_assert!(edges.windows(2).all(|w| w[0] < w[1]));
        let mut adjacency = vec![Vec::new(); n];
        for &(u, v) in &edges {
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        let degrees = adjacency.iter().map(Vec::len).collect();
        Graph {
            n,
            edges,
            degrees,
            adjacency,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn degree(&self, v: usize) -> usize {
        self.degrees[v]
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    pub fn max_degree(&self) -> usize {
        self.degrees.iter().copied().max().unwrap_or(0)
    }

    /// Neighbors of `v` in increasing index order.
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    /// Position of edge `{u, v}` in canonical order.
    pub fn edge_index(&self, u: usize, v: usize) -> Option<usize> {
        let key = (u.min(v), u.max(v));
        self.edges.binary_search(&key).ok()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.edge_index(u, v).is_some()
    }

    /// Connected components via BFS, each sorted, listed by smallest vertex.
    pub fn connected_components(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.n];
        let mut components = Vec::new();
        let mut queue = VecDeque::new();
        for start in 0..self.n {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            queue.push_back(start);
            let mut component = Vec::new();
            while let Some(v) = queue.pop_front() {
                component.push(v);
                for &w in &self.adjacency[v] {
                    if !seen[w] {
                        seen[w] = true;
                        queue.push_back(w);
                    }
                }
            }
            component.sort_unstable();
            components.push(component);
        }
        components
    }

    pub fn is_connected(&self) -> bool {
        self.n <= 1 || self.connected_components().len() == 1
    }

    /// Returns `Err(Disconnected)` listing component sizes unless connected.
    pub fn require_connected(&self) -> Result<()> {
        let components = self.connected_components();
        if components.len() <= 1 {
            Ok(())
        } else {
            Err(Error::Disconnected {
                component_sizes: components.iter().map(Vec::len).collect(),
            })
        }
    }

    /// Applies the edge-incidence operator: entry `e = (u, v)` is `x_u - x_v`
    /// with `u < v`, in canonical edge order.
    pub fn incidence_apply(&self, x: &Signal) -> Result<Vec<f64>> {
        self.check_len(x)?;
        let values = x.values();
        Ok(self
            .edges
            .iter()
            .map(|&(u, v)| values[u] - values[v])
            .collect())
    }

    /// Number of edges whose endpoint values differ by more than
    /// [`CUT_TOLERANCE`].
    pub fn cut_size(&self, x: &Signal) -> Result<usize> {
        self.check_len(x)?;
        Ok(cut_count(&self.edges, x.values()))
    }

    /// Canonical indices of the edges cut by `x`.
    pub fn cut_edges(&self, x: &Signal) -> Result<Vec<usize>> {
        self.check_len(x)?;
        let values = x.values();
        Ok(self
            .edges
            .iter()
            .enumerate()
            .filter(|(_, &(u, v))| differs(values[u], values[v]))
            .map(|(i, _)| i)
            .collect())
    }

    pub(crate) fn check_len(&self, x: &Signal) -> Result<()> {
        if x.len() != self.n {
            return Err(invalid!(
                "signal has length {} but graph has {} vertices",
                x.len(),
                self.n
            ));
        }
        Ok(())
    }
}

#[inline]
pub(crate) fn differs(a: f64, b: f64) -> bool {
    libm::fabs(a - b) > CUT_TOLERANCE
}

pub(crate) fn cut_count(edges: &[(usize, usize)], values: &[f64]) -> usize {
    edges
        .iter()
        .filter(|&&(u, v)| differs(values[u], values[v]))
        .count()
}

/// A real-valued signal over the vertices of a graph.
///
/// `rho` and `mu` record the cut budget and energy a generator targeted; they
/// are metadata and are not enforced.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    values: Vec<f64>,
    pub rho: Option<usize>,
    pub mu: Option<f64>,
}

impl Signal {
    pub fn new(values: Vec<f64>) -> Self {
        Signal {
            values,
            rho: None,
            mu: None,
        }
    }

    pub fn zeros(n: usize) -> Self {
        Signal::new(vec![0.0; n])
    }

    pub fn constant(n: usize, c: f64) -> Self {
        Signal::new(vec![c; n])
    }

    /// `1_S` scaled by `level`.
    pub fn indicator(n: usize, support: &[usize], level: f64) -> Self {
        let mut values = vec![0.0; n];
        for &v in support {
            values[v] = level;
        }
        Signal::new(values)
    }

    pub fn with_targets(mut self, rho: usize, mu: f64) -> Self {
        self.rho = Some(rho);
        self.mu = Some(mu);
        self
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn norm(&self) -> f64 {
        libm::sqrt(self.values.iter().map(|v| v * v).sum())
    }

    pub fn mean(&self) -> f64 {
        if self.values.is_empty() {
            0.0
        } else {
            self.values.iter().sum::<f64>() / self.values.len() as f64
        }
    }

    /// Returns `self * scale`, keeping metadata.
    pub fn scaled(&self, scale: f64) -> Signal {
        Signal {
            values: self.values.iter().map(|v| v * scale).collect(),
            rho: self.rho,
            mu: self.mu.map(|mu| mu * libm::fabs(scale)),
        }
    }
}

impl From<Vec<f64>> for Signal {
    fn from(values: Vec<f64>) -> Self {
        Signal::new(values)
    }
}
