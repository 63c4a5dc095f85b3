//! The max-coefficient detection test and single Monte Carlo trials.

use alloc::vec::Vec;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Result};
use crate::graph::{Graph, Signal};
use crate::tree::{bfs_spanning_tree, sample_ust, SpanningTree};
use crate::wavelet::{build_basis, ceil_log2, WaveletBasis};

/// `sigma * sqrt(2 ln(n / delta))`.
pub fn threshold(sigma: f64, n: usize, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid!("level delta must lie in (0, 1), got {delta}"));
    }
    if n == 0 {
        return Err(invalid!("threshold needs n >= 1"));
    }
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(invalid!("sigma must be finite and nonnegative, got {sigma}"));
    }
    Ok(sigma * libm::sqrt(2.0 * libm::log(n as f64 / delta)))
}

/// Known Gaussian noise level and the master seed of its random stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    sigma: f64,
    pub seed: u64,
}

impl NoiseModel {
    /// `sigma = 0` is accepted for noiseless checks.
    pub fn new(sigma: f64, seed: u64) -> Result<Self> {
        if !(sigma >= 0.0) || !sigma.is_finite() {
            return Err(invalid!("sigma must be finite and nonnegative, got {sigma}"));
        }
        Ok(NoiseModel { sigma, seed })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

/// A level-`delta` test on `n` coefficients with noise `sigma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionTest {
    pub delta: f64,
    pub sigma: f64,
    pub n: usize,
    pub tau: f64,
}

impl DetectionTest {
    pub fn new(sigma: f64, n: usize, delta: f64) -> Result<Self> {
        Ok(DetectionTest {
            delta,
            sigma,
            n,
            tau: threshold(sigma, n, delta)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decision {
    pub reject: bool,
    /// `||By||_inf`.
    pub statistic: f64,
    /// Index of the element attaining the statistic.
    pub argmax: usize,
}

/// Rejects the null when `||By||_inf > tau`.
pub fn detect(basis: &WaveletBasis, y: &Signal, tau: f64) -> Result<Decision> {
    let coefficients = basis.apply(y)?;
    let (argmax, statistic) = coefficients
        .iter()
        .map(|c| libm::fabs(*c))
        .enumerate()
        .fold((0, 0.0), |best, (i, c)| if c > best.1 { (i, c) } else { best });
    Ok(Decision {
        reject: statistic > tau,
        statistic,
        argmax,
    })
}

/// Right-hand side of the sufficient signal-to-noise condition for a fixed
/// tree: `sqrt(2 rho ceil(log2 d) ceil(log2 n)) (sqrt(ln(1/delta)) + sqrt(ln(n/delta)))`.
pub fn remark1_snr(rho: usize, max_degree: usize, n: usize, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(invalid!("level delta must lie in (0, 1], got {delta}"));
    }
    let factor = (2 * rho * ceil_log2(max_degree.max(2)) * ceil_log2(n)) as f64;
    let tails = libm::sqrt(libm::log(1.0 / delta)) + libm::sqrt(libm::log(n as f64 / delta));
    Ok(libm::sqrt(factor) * tails)
}

/// Growth scale `sqrt(r_max log2 d) log2 n` that the uniform-spanning-tree
/// detector needs `mu / sigma` to dominate. Constants are unspecified, so
/// this is a guide value only.
pub fn theorem3_snr_scale(r_max: f64, max_degree: usize, n: usize) -> f64 {
    let d = max_degree.max(2) as f64;
    libm::sqrt(r_max * libm::log2(d)) * libm::log2(n as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SnrRule {
    Remark1 { rho: usize, max_degree: usize, n: usize, delta: f64 },
    Theorem3 { r_max: f64, max_degree: usize, n: usize },
}

pub fn snr_condition(rule: SnrRule) -> Result<f64> {
    match rule {
        SnrRule::Remark1 {
            rho,
            max_degree,
            n,
            delta,
        } => remark1_snr(rho, max_degree, n, delta),
        SnrRule::Theorem3 { r_max, max_degree, n } => Ok(theorem3_snr_scale(r_max, max_degree, n)),
    }
}

/// Where the basis of a trial comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum TreeSource {
    /// A fresh uniform spanning tree per trial.
    Ust,
    /// The breadth-first tree from `root`.
    Bfs { root: usize },
    Fixed(SpanningTree),
}

/// Random stream of trial `index` under `master_seed`. Each trial owns its
/// stream, so results do not depend on scheduling.
pub fn trial_rng(master_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

/// Outcome of one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub trial: u64,
    pub seed: u64,
    /// Seed of the uniform spanning tree, when one was drawn.
    pub tree_seed: Option<u64>,
    pub n: usize,
    pub rho: Option<usize>,
    pub mu: f64,
    pub statistic: f64,
    pub tau: f64,
    pub reject: bool,
    /// Whether a signal was present.
    pub truth: bool,
}

/// Graph plus tree source, with the basis prebuilt when the tree is fixed.
#[derive(Debug, Clone)]
pub struct TrialContext<'g> {
    graph: &'g Graph,
    source: TreeSource,
    fixed_basis: Option<WaveletBasis>,
}

impl<'g> TrialContext<'g> {
    pub fn new(graph: &'g Graph, source: TreeSource) -> Result<Self> {
        graph.require_connected()?;
        let fixed = match &source {
            TreeSource::Ust => None,
            TreeSource::Bfs { root } => Some(bfs_spanning_tree(graph, *root)?),
            TreeSource::Fixed(t) => {
                if t.n() != graph.n() || t.edges().iter().any(|&(u, v)| !graph.has_edge(u, v)) {
                    return Err(invalid!("fixed tree is not a spanning tree of the graph"));
                }
                Some(t.clone())
            }
        };
        Ok(TrialContext {
            graph,
            source,
            fixed_basis: fixed.as_ref().map(build_basis),
        })
    }

    pub fn graph(&self) -> &Graph {
        self.graph
    }

    pub fn source(&self) -> &TreeSource {
        &self.source
    }

    /// Draws the tree (if random), then the noise, from `rng` and tests
    /// `y = x + sigma z` at level `tau`.
    pub fn run_with(
        &self,
        rng: &mut ChaCha8Rng,
        signal: Option<&Signal>,
        sigma: f64,
        tau: f64,
    ) -> Result<(Decision, Option<u64>)> {
        let (mut decisions, tree_seed) = match signal {
            Some(x) => self.run_scaled(rng, x, &[1.0], sigma, tau)?,
            None => self.run_scaled(rng, &Signal::zeros(self.graph.n()), &[0.0], sigma, tau)?,
        };
        Ok((decisions.pop().unwrap(), tree_seed))
    }

    /// Like [`run_with`](Self::run_with) for each signal `scale * x`, all
    /// sharing one tree and one noise draw.
    pub fn run_scaled(
        &self,
        rng: &mut ChaCha8Rng,
        x: &Signal,
        scales: &[f64],
        sigma: f64,
        tau: f64,
    ) -> Result<(Vec<Decision>, Option<u64>)> {
        let n = self.graph.n();
        self.graph.check_len(x)?;
        let (drawn, tree_seed) = match &self.fixed_basis {
            Some(_) => (None, None),
            None => {
                let tree_seed = rng.next_u64();
                let tree = sample_ust(self.graph, &mut ChaCha8Rng::seed_from_u64(tree_seed))?;
                (Some(build_basis(&tree)), Some(tree_seed))
            }
        };
        let basis = drawn.as_ref().or(self.fixed_basis.as_ref()).unwrap();
        let noise: Vec<f64> = (0..n)
            .map(|_| sigma * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng))
            .collect();
        let decisions = scales
            .iter()
            .map(|&scale| {
                let y = noise.iter().zip(x.values()).map(|(z, xi)| z + scale * xi).collect();
                detect(basis, &Signal::new(y), tau)
            })
            .collect::<Result<_>>()?;
        Ok((decisions, tree_seed))
    }
}

/// One trial: tree (if random), basis, noise and decision at
/// `threshold(sigma, n, delta)`, all from stream `trial` of `noise.seed`.
pub fn run_trial(
    context: &TrialContext<'_>,
    signal: Option<&Signal>,
    noise: &NoiseModel,
    delta: f64,
    trial: u64,
) -> Result<TrialRecord> {
    let n = context.graph().n();
    let tau = threshold(noise.sigma(), n, delta)?;
    let mut rng = trial_rng(noise.seed, trial);
    let (decision, tree_seed) = context.run_with(&mut rng, signal, noise.sigma(), tau)?;
    Ok(TrialRecord {
        trial,
        seed: noise.seed,
        tree_seed,
        n,
        rho: signal.and_then(|x| x.rho),
        mu: signal.map_or(0.0, Signal::norm),
        statistic: decision.statistic,
        tau,
        reject: decision.reject,
        truth: signal.is_some(),
    })
}
