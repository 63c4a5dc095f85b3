//! Serializable descriptions of the graph families.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use stwave_core::generators::{self, PointCloud};
use stwave_core::Graph;

use crate::error::{Error, Result};

/// Attempts made by [`GraphSpec::build_connected`] before giving up.
pub const CONNECT_ATTEMPTS: u64 = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum GraphSpec {
    Torus { side: usize, dims: usize },
    Complete { n: usize },
    Knn { n: usize, k: usize, dim: usize },
    Epsilon { n: usize, eps: f64, dim: usize },
}

/// A generated graph and, for geometric families, its points.
#[derive(Debug, Clone)]
pub struct Built {
    pub graph: Graph,
    pub points: Option<PointCloud>,
    /// Seed actually used (differs from the requested one after reseeding).
    pub seed: u64,
}

impl GraphSpec {
    pub fn family(&self) -> &'static str {
        match self {
            GraphSpec::Torus { .. } => "torus",
            GraphSpec::Complete { .. } => "complete",
            GraphSpec::Knn { .. } => "knn",
            GraphSpec::Epsilon { .. } => "epsilon",
        }
    }

    pub fn n(&self) -> usize {
        match *self {
            GraphSpec::Torus { side, dims } => side.pow(dims as u32),
            GraphSpec::Complete { n } | GraphSpec::Knn { n, .. } | GraphSpec::Epsilon { n, .. } => n,
        }
    }

    pub fn is_random(&self) -> bool {
        matches!(self, GraphSpec::Knn { .. } | GraphSpec::Epsilon { .. })
    }

    pub fn build(&self, seed: u64) -> Result<Built> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (graph, points) = match *self {
            GraphSpec::Torus { side, dims } => (generators::torus(side, dims)?, None),
            GraphSpec::Complete { n } => (generators::complete(n)?, None),
            GraphSpec::Knn { n, k, dim } => {
                let g = generators::knn(n, k, dim, &mut rng)?;
                (g.graph, Some(g.points))
            }
            GraphSpec::Epsilon { n, eps, dim } => {
                let g = generators::epsilon(n, eps, dim, &mut rng)?;
                (g.graph, Some(g.points))
            }
        };
        Ok(Built { graph, points, seed })
    }

    /// Builds with `seed`, `seed + 1`, ... until the graph is connected.
    pub fn build_connected(&self, seed: u64) -> Result<Built> {
        for attempt in 0..CONNECT_ATTEMPTS {
            let built = self.build(seed.wrapping_add(attempt))?;
            if built.graph.is_connected() {
                return Ok(built);
            }
            if !self.is_random() {
                break;
            }
        }
        Err(Error::Config(format!(
            "{self:?} produced no connected graph in {CONNECT_ATTEMPTS} seeds from {seed}"
        )))
    }
}

/// Cut budget as a function of `n`: `max(1, round(scale * n^exponent))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RhoRule {
    pub exponent: f64,
    #[serde(default = "one")]
    pub scale: f64,
}

fn one() -> f64 {
    1.0
}

impl RhoRule {
    pub fn rho(&self, n: usize) -> usize {
        ((self.scale * (n as f64).powf(self.exponent)).round() as usize).max(1)
    }
}
