//! Small statistics helpers for the Monte Carlo harness: binomial errors,
//! least-squares lines, monotonicity checks and trial aggregation.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::detect::TrialRecord;
use crate::error::{Error, Result};

/// Standard error of a proportion `p` estimated from `trials` draws.
pub fn binomial_std_error(p: f64, trials: usize) -> f64 {
    if trials == 0 {
        return 0.0;
    }
    let p = p.clamp(0.0, 1.0);
    libm::sqrt(p * (1.0 - p) / trials as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares `y ~ slope * x + intercept`.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    if xs.len() != ys.len() {
        return Err(Error::InvalidInput("x and y lengths differ".into()));
    }
    if xs.len() < 2 {
        return Err(Error::FitUndefined("need at least two points".into()));
    }
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx <= f64::EPSILON * k * (mx * mx).max(1.0) {
        return Err(Error::FitUndefined("all x values are equal".into()));
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(LinearFit {
        slope,
        intercept: my - slope * mx,
        r_squared,
    })
}

/// Counts adjacent pairs where a proportion drops by more than `sigmas`
/// standard errors of the difference. `rates` must be ordered by the
/// parameter they should increase with.
pub fn isotonic_violations(rates: &[f64], trials: usize, sigmas: f64) -> usize {
    rates
        .windows(2)
        .filter(|w| {
            let (a, b) = (binomial_std_error(w[0], trials), binomial_std_error(w[1], trials));
            let se = libm::sqrt(a * a + b * b);
            w[0] - w[1] > sigmas * se.max(1.0 / trials.max(1) as f64)
        })
        .count()
}

/// Aggregate over the trials sharing `(n, rho, mu)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub n: usize,
    pub rho: Option<usize>,
    pub mu: f64,
    pub trials: usize,
    /// Rejection rate of the signal trials.
    pub power: f64,
    /// Rejection rate of the null trials with the same `n`.
    pub type_i: f64,
    pub null_trials: usize,
    /// `type_i + (1 - power)`.
    pub risk: f64,
}

/// Per-trial rows of an experiment together with their aggregates.
///
/// Risk replaces the supremum over the signal class by the sampled signals,
/// so it is a lower estimate of the true risk.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExperimentResult {
    pub rows: Vec<TrialRecord>,
}

impl ExperimentResult {
    pub fn new(rows: Vec<TrialRecord>) -> Self {
        ExperimentResult { rows }
    }

    /// Null rejection rate and trial count per `n`.
    pub fn type_i_rates(&self) -> BTreeMap<usize, (f64, usize)> {
        let mut acc: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
        for r in self.rows.iter().filter(|r| !r.truth) {
            let e = acc.entry(r.n).or_default();
            e.0 += usize::from(r.reject);
            e.1 += 1;
        }
        acc.into_iter()
            .map(|(n, (rej, tot))| (n, (rej as f64 / tot as f64, tot)))
            .collect()
    }

    /// One summary per `(n, rho, mu)` among signal trials, in key order.
    pub fn cells(&self) -> Vec<CellSummary> {
        let nulls = self.type_i_rates();
        let mut acc: BTreeMap<(usize, Option<usize>, u64), (usize, usize)> = BTreeMap::new();
        for r in self.rows.iter().filter(|r| r.truth) {
            let e = acc.entry((r.n, r.rho, r.mu.to_bits())).or_default();
            e.0 += usize::from(r.reject);
            e.1 += 1;
        }
        let mut cells: Vec<CellSummary> = acc
            .into_iter()
            .map(|((n, rho, mu), (rej, tot))| {
                let (type_i, null_trials) = nulls.get(&n).copied().unwrap_or((0.0, 0));
                let power = rej as f64 / tot as f64;
                CellSummary {
                    n,
                    rho,
                    mu: f64::from_bits(mu),
                    trials: tot,
                    power,
                    type_i,
                    null_trials,
                    risk: type_i + (1.0 - power),
                }
            })
            .collect();
        cells.sort_by(|a, b| (a.n, a.rho).cmp(&(b.n, b.rho)).then(a.mu.total_cmp(&b.mu)));
        cells
    }
}
