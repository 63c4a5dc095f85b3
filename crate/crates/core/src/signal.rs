//! Samplers for piecewise-constant signals with a bounded cut.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::{Graph, Signal};

/// Support of a BFS ball with boundary cut at most `rho` and at most `n/2`
/// vertices.
///
/// The ball is grown from a uniformly random seed vertex one BFS layer at a
/// time and the largest qualifying ball is kept. If no ball around that seed
/// fits the budget, the remaining vertices are tried in random order.
pub fn cluster_support<R: Rng + ?Sized>(g: &Graph, rho: usize, rng: &mut R) -> Result<Vec<usize>> {
    let n = g.n();
    if n < 2 {
        return Err(Error::InfeasibleSignal("graph needs at least two vertices".into()));
    }
    let first = rng.random_range(0..n);
    if let Some(s) = largest_ball(g, first, rho) {
        return Ok(s);
    }
    let mut others: Vec<usize> = (0..n).filter(|&v| v != first).collect();
    others.shuffle(rng);
    others
        .into_iter()
        .find_map(|seed| largest_ball(g, seed, rho))
        .ok_or_else(|| {
            Error::InfeasibleSignal(alloc::format!(
                "no BFS ball of at most {} vertices has cut <= {rho}",
                n / 2
            ))
        })
}

fn largest_ball(g: &Graph, seed: usize, rho: usize) -> Option<Vec<usize>> {
    let n = g.n();
    let cap = n / 2;
    let mut depth = vec![usize::MAX; n];
    let mut inside = vec![false; n];
    let mut order = Vec::new();
    let mut queue = VecDeque::from([seed]);
    depth[seed] = 0;
    let mut cut: isize = 0;
    let mut best = None;
    while let Some(v) = queue.pop_front() {
        // Adding v turns its edges into S moves internal and the rest into cut.
        let internal = g.neighbors(v).iter().filter(|&&w| inside[w]).count() as isize;
        cut += g.degree(v) as isize - 2 * internal;
        inside[v] = true;
        order.push(v);
        if order.len() > cap {
            break;
        }
        for &w in g.neighbors(v) {
            if depth[w] == usize::MAX {
                depth[w] = depth[v] + 1;
                queue.push_back(w);
            }
        }
        let layer_done = queue.front().is_none_or(|&next| depth[next] > depth[v]);
        if layer_done && cut <= rho as isize {
            best = Some(order.len());
        }
    }
    best.map(|len| {
        let mut s = order[..len].to_vec();
        s.sort_unstable();
        s
    })
}

/// `x = c 1_S` on a BFS-ball support with `||x||_2 = mu`.
pub fn cluster_signal<R: Rng + ?Sized>(g: &Graph, rho: usize, mu: f64, rng: &mut R) -> Result<Signal> {
    check_mu(mu)?;
    let support = cluster_support(g, rho, rng)?;
    let level = mu / libm::sqrt(support.len() as f64);
    let x = Signal::indicator(g.n(), &support, level).with_targets(rho, mu);
    debug_assert!(g.cut_size(&x).is_ok_and(|c| c <= rho));
    Ok(x)
}

/// Mean-zero two-level signal on a BFS-ball support: `a` on `S`, `-b` off it,
/// with `a|S| = b|S^c|` and `||x||_2 = mu`.
pub fn two_level_signal<R: Rng + ?Sized>(g: &Graph, rho: usize, mu: f64, rng: &mut R) -> Result<Signal> {
    check_mu(mu)?;
    let support = cluster_support(g, rho, rng)?;
    Ok(two_level_on(g.n(), &support, mu).with_targets(rho, mu))
}

/// The mean-zero two-level signal for a given support `S` (`0 < |S| < n`).
pub fn two_level_on(n: usize, support: &[usize], mu: f64) -> Signal {
    let s = support.len() as f64;
    let t = n as f64 - s;
    let high = mu * libm::sqrt(t / (s * n as f64));
    let low = -high * s / t;
    let mut values = vec![low; n];
    for &v in support {
        values[v] = high;
    }
    Signal::new(values)
}

/// Size of the random support used by [`prior_signal`]:
/// `floor(min(rho / d_max, sqrt(n)))`.
pub fn prior_support_size(rho: usize, max_degree: usize, n: usize) -> usize {
    rho.checked_div(max_degree).unwrap_or(usize::MAX).min(n.isqrt())
}

/// `x = (mu / sqrt(p)) 1_S` with `S` uniform among `p`-subsets, `p` from
/// [`prior_support_size`]. Any such `S` cuts at most `p * d_max <= rho` edges.
pub fn prior_signal<R: Rng + ?Sized>(g: &Graph, rho: usize, mu: f64, rng: &mut R) -> Result<Signal> {
    check_mu(mu)?;
    let p = prior_support_size(rho, g.max_degree(), g.n());
    if p < 1 {
        return Err(Error::InfeasibleSignal(alloc::format!(
            "rho = {rho} is below the max degree {}",
            g.max_degree()
        )));
    }
    let support = rand::seq::index::sample(rng, g.n(), p).into_vec();
    let level = mu / libm::sqrt(p as f64);
    Ok(Signal::indicator(g.n(), &support, level).with_targets(rho, mu))
}

fn check_mu(mu: f64) -> Result<()> {
    if !(mu >= 0.0) || !mu.is_finite() {
        return Err(Error::InvalidInput(alloc::format!("signal energy must be finite and nonnegative, got {mu}")));
    }
    Ok(())
}

/// Which sampler produces alternative signals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SignalKind {
    /// Indicator of a BFS ball.
    Cluster,
    /// Mean-zero two-level signal on a BFS ball.
    TwoLevel,
    /// Uniform random support of the lower-bound construction.
    Prior,
}

impl SignalKind {
    pub fn sample<R: Rng + ?Sized>(self, g: &Graph, rho: usize, mu: f64, rng: &mut R) -> Result<Signal> {
        match self {
            SignalKind::Cluster => cluster_signal(g, rho, mu, rng),
            SignalKind::TwoLevel => two_level_signal(g, rho, mu, rng),
            SignalKind::Prior => prior_signal(g, rho, mu, rng),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SignalKind::Cluster => "cluster",
            SignalKind::TwoLevel => "two-level",
            SignalKind::Prior => "prior",
        }
    }
}
