//! Basis sparsity of bounded-cut signals against `rho ceil(log2 d) ceil(log2 n)`.

use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::{Graph, Signal};
use crate::signal::SignalKind;
use crate::stats::{fit_line, LinearFit};
use crate::tree::{sample_ust, SpanningTree};
use crate::wavelet::{activation_bound, build_basis, WaveletBasis};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SparsityPoint {
    pub n: usize,
    /// Max degree of the tree.
    pub max_degree: usize,
    /// Cut size of the signal in the graph.
    pub graph_cut: usize,
    /// Cut size of the signal in the tree.
    pub tree_cut: usize,
    /// `graph_cut * ceil(log2 d) * ceil(log2 n)`.
    pub bound: usize,
    /// `||Bx||_0`.
    pub sparsity: usize,
    pub mean_zero: bool,
}

impl SparsityPoint {
    pub fn measure(g: &Graph, tree: &SpanningTree, basis: &WaveletBasis, x: &Signal) -> Result<Self> {
        let graph_cut = g.cut_size(x)?;
        let factor = activation_bound(tree.max_degree(), g.n());
        Ok(SparsityPoint {
            n: g.n(),
            max_degree: tree.max_degree(),
            graph_cut,
            tree_cut: tree.cut_size(x)?,
            bound: graph_cut * factor,
            sparsity: basis.sparsity(x)?,
            mean_zero: libm::fabs(x.mean()) <= 1e-12 * (1.0 + x.norm()),
        })
    }

    /// `||Bx||_0 <= tree_cut * factor`, plus one for the constant element
    /// when the signal has nonzero mean.
    pub fn within_tree_bound(&self) -> bool {
        let factor = activation_bound(self.max_degree, self.n);
        self.sparsity <= self.tree_cut * factor + usize::from(!self.mean_zero)
    }

    /// Same, with the graph cut in place of the tree cut.
    pub fn within_graph_bound(&self) -> bool {
        self.sparsity <= self.bound + usize::from(!self.mean_zero)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparsityConfig {
    pub signals: usize,
    pub rho_min: usize,
    pub rho_max: usize,
    pub kind: SignalKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparsityReport {
    pub points: Vec<SparsityPoint>,
    /// Draws skipped because no signal fit the sampled cut budget.
    pub infeasible: usize,
    pub fit: Result<LinearFit>,
}

/// For each signal: a cut budget uniform in `rho_min..=rho_max`, a signal
/// from `config.kind`, and a fresh uniform spanning tree.
pub fn sparsity_experiment<R: Rng + ?Sized>(
    g: &Graph,
    config: &SparsityConfig,
    rng: &mut R,
) -> Result<SparsityReport> {
    if config.signals < 2 {
        return Err(Error::InvalidInput("sparsity experiment needs at least two signals".into()));
    }
    if config.rho_min > config.rho_max {
        return Err(Error::InvalidInput("rho_min exceeds rho_max".into()));
    }
    g.require_connected()?;
    let mut points = Vec::with_capacity(config.signals);
    let mut infeasible = 0;
    for _ in 0..config.signals {
        let rho = rng.random_range(config.rho_min..=config.rho_max);
        let x = match config.kind.sample(g, rho, 1.0, rng) {
            Ok(x) => x,
            Err(Error::InfeasibleSignal(_)) => {
                infeasible += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        let tree = sample_ust(g, rng)?;
        let basis = build_basis(&tree);
        points.push(SparsityPoint::measure(g, &tree, &basis, &x)?);
    }
    let xs: Vec<f64> = points.iter().map(|p| p.bound as f64).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.sparsity as f64).collect();
    let fit = fit_line(&xs, &ys);
    Ok(SparsityReport {
        points,
        infeasible,
        fit,
    })
}
