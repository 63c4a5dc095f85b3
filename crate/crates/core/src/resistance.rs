//! Effective resistance through the Laplacian pseudoinverse, plus the
//! random-walk commute-time estimator and the uniform-spanning-tree edge
//! frequency check.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::graph::{differs, Graph, Signal};
use crate::tree::sample_ust;

/// Hard cap on random-walk steps per commute-time trial.
pub const MAX_WALK_STEPS: u64 = 100_000_000;

/// Combinatorial Laplacian `D - A`.
pub fn laplacian(g: &Graph) -> DMatrix<f64> {
    let n = g.n();
    let mut l = DMatrix::zeros(n, n);
    for v in 0..n {
        l[(v, v)] = g.degree(v) as f64;
    }
    for &(u, v) in g.edges() {
        l[(u, v)] = -1.0;
        l[(v, u)] = -1.0;
    }
    l
}

/// Moore-Penrose pseudoinverse of a connected graph's Laplacian.
///
/// With `J` the all-ones matrix and `a > 0`, `L + aJ/n` is positive definite
/// and shares eigenvectors with `L`, so `L^+ = (L + aJ/n)^{-1} - J/(an)`.
/// Taking `a` as the average degree keeps the constant direction inside the
/// spectrum of `L` (for `K_n` the shifted matrix is `nI`). A Laplacian of rank
/// below `n - 1` makes the Cholesky factorization break down.
pub fn pseudoinverse(laplacian: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = laplacian.nrows();
    if n != laplacian.ncols() {
        return Err(invalid!("Laplacian must be square"));
    }
    if n == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    let a = (laplacian.trace() / n as f64).max(1.0);
    let shifted = laplacian.add_scalar(a / n as f64);
    let scale = laplacian.diagonal().max().max(1.0);
    let rank_deficient =
        || Error::Precondition(format!("Laplacian has rank below n - 1 = {}; graph is disconnected", n - 1));
    let chol = shifted.cholesky().ok_or_else(rank_deficient)?;
    let l = chol.l_dirty();
    // Pivots are bounded below by the smallest eigenvalue of L + aJ/n.
    if (0..n).any(|i| l[(i, i)] * l[(i, i)] < 1e-9 * scale) {
        return Err(rank_deficient());
    }
    let inverse = chol.inverse();
    let mut pinv = inverse.add_scalar(-1.0 / (a * n as f64));
    pinv.fill_lower_triangle_with_upper_triangle();
    Ok(pinv)
}

/// Per-edge effective resistances of a connected graph, with the
/// pseudoinverse kept for arbitrary vertex pairs.
#[derive(Debug, Clone)]
pub struct ResistanceProfile {
    edges: Vec<(usize, usize)>,
    edge_resistances: Vec<f64>,
    pinv: DMatrix<f64>,
}

impl ResistanceProfile {
    pub fn new(g: &Graph) -> Result<Self> {
        g.require_connected()?;
        let pinv = pseudoinverse(&laplacian(g))?;
        let edge_resistances = g
            .edges()
            .iter()
            .map(|&(u, v)| pair_resistance(&pinv, u, v))
            .collect();
        Ok(ResistanceProfile {
            edges: g.edges().to_vec(),
            edge_resistances,
            pinv,
        })
    }

    pub fn n(&self) -> usize {
        self.pinv.nrows()
    }

    /// `r_e` in canonical edge order.
    pub fn edge_resistances(&self) -> &[f64] {
        &self.edge_resistances
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn pseudoinverse(&self) -> &DMatrix<f64> {
        &self.pinv
    }

    /// `sum_e r_e`, which equals `n - 1` for a connected graph.
    /// `sum_e r_e`, with compensated summation since dense graphs have many
    /// small terms.
    pub fn total(&self) -> f64 {
        compensated_sum(self.edge_resistances.iter().copied())
    }

    pub fn max_edge_resistance(&self) -> f64 {
        self.edge_resistances.iter().copied().fold(0.0, f64::max)
    }

    /// `(d_v - d_w)^T L^+ (d_v - d_w)`.
    pub fn resistance(&self, v: usize, w: usize) -> Result<f64> {
        let n = self.n();
        if v >= n || w >= n {
            return Err(invalid!("vertex pair ({v}, {w}) outside 0..{n}"));
        }
        if v == w {
            return Err(invalid!("effective resistance needs two distinct vertices"));
        }
        Ok(pair_resistance(&self.pinv, v, w))
    }

    /// Total resistance of the edges cut by `x`.
    pub fn cut_resistance(&self, x: &Signal) -> Result<f64> {
        if x.len() != self.n() {
            return Err(invalid!(
                "signal has length {} but graph has {} vertices",
                x.len(),
                self.n()
            ));
        }
        let values = x.values();
        Ok(self
            .edges
            .iter()
            .zip(&self.edge_resistances)
            .filter(|(&(u, v), _)| differs(values[u], values[v]))
            .map(|(_, r)| r)
            .sum())
    }

    /// Sum of `r_e` over the given canonical edge indices.
    pub fn edge_set_resistance(&self, edge_ids: &[usize]) -> f64 {
        compensated_sum(edge_ids.iter().map(|&e| self.edge_resistances[e]))
    }
}

/// Neumaier's variant of Kahan summation.
fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut carry) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        carry += if libm::fabs(sum) >= libm::fabs(v) {
            (sum - t) + v
        } else {
            (v - t) + sum
        };
        sum = t;
    }
    sum + carry
}

fn pair_resistance(pinv: &DMatrix<f64>, v: usize, w: usize) -> f64 {
    pinv[(v, v)] + pinv[(w, w)] - 2.0 * pinv[(v, w)]
}

/// Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
}

impl Estimate {
    pub fn from_samples(samples: &[f64]) -> Self {
        let k = samples.len();
        let mean = samples.iter().sum::<f64>() / k as f64;
        let std_error = if k > 1 {
            let var = samples.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / (k - 1) as f64;
            libm::sqrt(var / k as f64)
        } else {
            0.0
        };
        Estimate {
            mean,
            std_error,
            samples: k,
        }
    }
}

/// Estimates `r_vw = (H(v,w) + H(w,v)) / 2m` from simulated commute times.
pub fn estimate_commute_resistance<R: Rng + ?Sized>(
    g: &Graph,
    v: usize,
    w: usize,
    trials: usize,
    rng: &mut R,
) -> Result<Estimate> {
    let n = g.n();
    if v >= n || w >= n || v == w {
        return Err(invalid!("need two distinct vertices in 0..{n}, got ({v}, {w})"));
    }
    if trials == 0 {
        return Err(invalid!("at least one trial is required"));
    }
    g.require_connected()?;
    let two_m = 2.0 * g.m() as f64;
    let mut samples = Vec::with_capacity(trials);
    for _ in 0..trials {
        let there = hitting_time(g, v, w, rng)?;
        let back = hitting_time(g, w, v, rng)?;
        samples.push((there + back) as f64 / two_m);
    }
    Ok(Estimate::from_samples(&samples))
}

fn hitting_time<R: Rng + ?Sized>(g: &Graph, from: usize, to: usize, rng: &mut R) -> Result<u64> {
    let mut at = from;
    let mut steps = 0u64;
    loop {
        let nb = g.neighbors(at);
        at = nb[rng.random_range(0..nb.len())];
        steps += 1;
        if at == to {
            return Ok(steps);
        }
        if steps >= MAX_WALK_STEPS {
            return Err(Error::WalkLimit(MAX_WALK_STEPS));
        }
    }
}

/// Empirical frequency with which each edge (canonical order) appears in
/// `samples` uniform spanning trees.
pub fn ust_edge_frequencies<R: Rng + ?Sized>(g: &Graph, samples: usize, rng: &mut R) -> Result<Vec<f64>> {
    if samples == 0 {
        return Err(invalid!("at least one sample is required"));
    }
    let mut counts = vec![0usize; g.m()];
    for _ in 0..samples {
        let t = sample_ust(g, rng)?;
        for &(u, v) in t.edges() {
            counts[g.edge_index(u, v).expect("tree edge belongs to graph")] += 1;
        }
    }
    Ok(counts.into_iter().map(|c| c as f64 / samples as f64).collect())
}

/// Per-edge comparison of UST inclusion frequency against `r_e`.
#[derive(Debug, Clone, PartialEq)]
pub struct InclusionCheck {
    pub edge: (usize, usize),
    pub resistance: f64,
    pub frequency: f64,
    /// `|frequency - r_e|` in binomial standard errors of `r_e`.
    pub z: f64,
}

pub fn check_inclusion_probabilities<R: Rng + ?Sized>(
    g: &Graph,
    profile: &ResistanceProfile,
    samples: usize,
    rng: &mut R,
) -> Result<Vec<InclusionCheck>> {
    let freq = ust_edge_frequencies(g, samples, rng)?;
    Ok(g.edges()
        .iter()
        .zip(profile.edge_resistances())
        .zip(freq)
        .map(|((&edge, &r), f)| {
            let se = libm::sqrt(r * (1.0 - r) / samples as f64);
            let z = if se > 0.0 {
                libm::fabs(f - r) / se
            } else if differs(f, r) {
                f64::INFINITY
            } else {
                0.0
            };
            InclusionCheck {
                edge,
                resistance: r,
                frequency: f,
                z,
            }
        })
        .collect())
}
