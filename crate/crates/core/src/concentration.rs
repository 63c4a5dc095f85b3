//! Upper-tail concentration of `|T ∩ B|` for uniform spanning trees `T` and
//! a fixed edge set `B`, against the Chernoff-type bound driven by the total
//! effective resistance of `B`.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{invalid, Result};
use crate::graph::Graph;
use crate::resistance::ResistanceProfile;
use crate::stats::binomial_std_error;
use crate::tree::sample_ust;

/// `(e^s / (1+s)^(1+s))^mean`, evaluated in log space.
pub fn chernoff_tail_bound(slack: f64, mean: f64) -> f64 {
    libm::exp(mean * (slack - (1.0 + slack) * libm::log1p(slack)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConcentrationRow {
    pub slack: f64,
    /// `(1 + slack) * sum_{e in B} r_e`.
    pub cutoff: f64,
    /// Fraction of trees with `|T ∩ B| >= cutoff`.
    pub empirical: f64,
    pub bound: f64,
    /// Binomial standard error at the bound.
    pub std_error: f64,
    /// `empirical <= bound + 3 std_error`.
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConcentrationReport {
    pub resistance_sum: f64,
    pub mean_overlap: f64,
    pub samples: usize,
    pub rows: Vec<ConcentrationRow>,
}

impl ConcentrationReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }
}

/// Samples `samples` uniform spanning trees and tabulates the tail of
/// `|T ∩ B|` at each slack.
pub fn ust_concentration_check<R: Rng + ?Sized>(
    g: &Graph,
    subset: &[(usize, usize)],
    samples: usize,
    slacks: &[f64],
    rng: &mut R,
) -> Result<ConcentrationReport> {
    if samples == 0 {
        return Err(invalid!("at least one sample is required"));
    }
    if let Some(s) = slacks.iter().find(|s| !(**s > 0.0)) {
        return Err(invalid!("slack values must be positive, got {s}"));
    }
    let mut in_subset = vec![false; g.m()];
    for &(u, v) in subset {
        let e = g
            .edge_index(u, v)
            .ok_or_else(|| invalid!("({u}, {v}) is not an edge of the graph"))?;
        if core::mem::replace(&mut in_subset[e], true) {
            return Err(invalid!("edge ({u}, {v}) listed twice"));
        }
    }
    let profile = ResistanceProfile::new(g)?;
    let ids: Vec<usize> = (0..g.m()).filter(|&e| in_subset[e]).collect();
    let resistance_sum = profile.edge_set_resistance(&ids);

    let mut overlaps = Vec::with_capacity(samples);
    for _ in 0..samples {
        let t = sample_ust(g, rng)?;
        let hits = t
            .edges()
            .iter()
            .filter(|&&(u, v)| in_subset[g.edge_index(u, v).unwrap()])
            .count();
        overlaps.push(hits);
    }
    let mean_overlap = overlaps.iter().sum::<usize>() as f64 / samples as f64;
    let rows = slacks
        .iter()
        .map(|&slack| {
            let cutoff = (1.0 + slack) * resistance_sum;
            let exceed = overlaps.iter().filter(|&&h| h as f64 >= cutoff).count();
            let empirical = exceed as f64 / samples as f64;
            let bound = chernoff_tail_bound(slack, resistance_sum);
            let std_error = binomial_std_error(bound.min(1.0), samples);
            ConcentrationRow {
                slack,
                cutoff,
                empirical,
                bound,
                std_error,
                pass: empirical <= bound + 3.0 * std_error,
            }
        })
        .collect();
    Ok(ConcentrationReport {
        resistance_sum,
        mean_overlap,
        samples,
        rows,
    })
}
