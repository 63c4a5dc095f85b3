//! Experiment configuration files and the built-in presets.

use serde::{Deserialize, Serialize};

use stwave_core::signal::SignalKind;

use crate::error::{Error, Result};
use crate::family::{GraphSpec, RhoRule};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Master seed. May be left out of the file and given on the command line.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    #[serde(default)]
    pub sparsity: Vec<SparsitySection>,
    #[serde(default)]
    pub power: Vec<PowerSection>,
    #[serde(default)]
    pub concentration: Vec<ConcentrationSection>,
}

fn default_delta() -> f64 {
    0.05
}

fn default_sigma() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignalChoice {
    Cluster,
    TwoLevel,
    Prior,
}

impl From<SignalChoice> for SignalKind {
    fn from(c: SignalChoice) -> Self {
        match c {
            SignalChoice::Cluster => SignalKind::Cluster,
            SignalChoice::TwoLevel => SignalKind::TwoLevel,
            SignalChoice::Prior => SignalKind::Prior,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TreeChoice {
    Ust,
    /// Breadth-first tree from vertex 0.
    Bfs,
}

/// Scatter of basis sparsity against the cut bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SparsitySection {
    pub name: String,
    pub graphs: Vec<GraphSpec>,
    /// Signals per graph.
    pub signals: usize,
    pub rho_min: RhoRule,
    pub rho_max: RhoRule,
    pub signal: SignalChoice,
}

/// Power as a function of `mu` for graphs of growing size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerSection {
    pub name: String,
    pub graphs: Vec<GraphSpec>,
    pub rho: RhoRule,
    pub mu: Vec<f64>,
    pub trials: usize,
    pub tree: TreeChoice,
    pub signal: SignalChoice,
}

/// Tail of `|T ∩ B|` for a random edge subset `B`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConcentrationSection {
    pub name: String,
    pub graph: GraphSpec,
    pub edges: usize,
    pub samples: usize,
    pub slacks: Vec<f64>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad(format!("delta must lie in (0, 1), got {}", self.delta));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return bad(format!("sigma must be finite and nonnegative, got {}", self.sigma));
        }
        let mut names = std::collections::BTreeSet::new();
        let all = self
            .sparsity
            .iter()
            .map(|s| &s.name)
            .chain(self.power.iter().map(|s| &s.name))
            .chain(self.concentration.iter().map(|s| &s.name));
        for name in all {
            if name.is_empty() || name.contains([',', '"', '\n']) {
                return bad(format!("section name {name:?} must be nonempty plain text"));
            }
            if !names.insert(name) {
                return bad(format!("duplicate section name {name:?}"));
            }
        }
        for s in &self.sparsity {
            if s.signals < 2 {
                return bad(format!("{}: need at least two signals per graph", s.name));
            }
            if s.graphs.is_empty() {
                return bad(format!("{}: no graphs", s.name));
            }
        }
        for s in &self.power {
            if s.trials < 1 || s.graphs.is_empty() || s.mu.is_empty() {
                return bad(format!("{}: need trials, graphs and a mu grid", s.name));
            }
            if s.mu.iter().any(|m| !(*m >= 0.0 && m.is_finite())) {
                return bad(format!("{}: mu values must be finite and nonnegative", s.name));
            }
            if s.mu.windows(2).any(|w| w[0] >= w[1]) {
                return bad(format!("{}: mu grid must be strictly increasing", s.name));
            }
        }
        for s in &self.concentration {
            if s.samples < 1 || s.edges < 1 || s.slacks.is_empty() {
                return bad(format!("{}: need samples, edges and slacks", s.name));
            }
        }
        Ok(())
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "paper-fig1" => Some(fig1()),
            "paper-fig2" => Some(fig2()),
            _ => None,
        }
    }
}

pub const PRESETS: [&str; 2] = ["paper-fig1", "paper-fig2"];

fn rule(exponent: f64, scale: f64) -> RhoRule {
    RhoRule { exponent, scale }
}

fn tori(sides: &[usize]) -> Vec<GraphSpec> {
    sides.iter().map(|&side| GraphSpec::Torus { side, dims: 2 }).collect()
}

fn fig1() -> ExperimentConfig {
    let section = |name: &str, graphs, rho_min, rho_max, signal| SparsitySection {
        name: name.into(),
        graphs,
        signals: 100,
        rho_min,
        rho_max,
        signal,
    };
    ExperimentConfig {
        seed: None,
        delta: default_delta(),
        sigma: default_sigma(),
        sparsity: vec![
            section("torus", tori(&[8, 16, 32]), rule(0.0, 4.0), rule(0.5, 2.0), SignalChoice::Cluster),
            section(
                "complete",
                [64, 128, 256].map(|n| GraphSpec::Complete { n }).to_vec(),
                rule(1.0, 1.0),
                rule(1.5, 1.0),
                SignalChoice::Prior,
            ),
            section(
                "knn",
                [128, 256, 512].map(|n| GraphSpec::Knn { n, k: 8, dim: 2 }).to_vec(),
                rule(0.0, 8.0),
                rule(2.0 / 3.0, 2.0),
                SignalChoice::Cluster,
            ),
            section(
                "epsilon",
                [(128, 0.2), (256, 0.15), (512, 0.11)]
                    .map(|(n, eps)| GraphSpec::Epsilon { n, eps, dim: 2 })
                    .to_vec(),
                rule(0.0, 8.0),
                rule(0.8, 2.0),
                SignalChoice::Cluster,
            ),
        ],
        power: vec![],
        concentration: vec![],
    }
}

fn fig2() -> ExperimentConfig {
    let mu: Vec<f64> = (0..=28).map(|i| f64::from(i) * 0.5).collect();
    let section = |name: &str, graphs, rho| PowerSection {
        name: name.into(),
        graphs,
        rho,
        mu: mu.clone(),
        trials: 400,
        tree: TreeChoice::Ust,
        signal: SignalChoice::Cluster,
    };
    ExperimentConfig {
        seed: None,
        delta: default_delta(),
        sigma: default_sigma(),
        sparsity: vec![],
        power: vec![
            section("torus", tori(&[8, 16, 32]), rule(0.5, 1.0)),
            section(
                "complete",
                [16, 64, 256].map(|n| GraphSpec::Complete { n }).to_vec(),
                rule(1.0, 1.0),
            ),
            section(
                "knn",
                [128, 256, 512].map(|n| GraphSpec::Knn { n, k: 8, dim: 2 }).to_vec(),
                rule(2.0 / 3.0, 1.0),
            ),
            section(
                "epsilon",
                [(128, 0.2), (256, 0.15), (512, 0.11)]
                    .map(|(n, eps)| GraphSpec::Epsilon { n, eps, dim: 2 })
                    .to_vec(),
                rule(0.8, 1.0),
            ),
        ],
        concentration: vec![
            ConcentrationSection {
                name: "torus-8x8".into(),
                graph: GraphSpec::Torus { side: 8, dims: 2 },
                edges: 20,
                samples: 20_000,
                slacks: vec![0.25, 0.5, 1.0, 2.0],
            },
            ConcentrationSection {
                name: "knn-200".into(),
                graph: GraphSpec::Knn { n: 200, k: 6, dim: 2 },
                edges: 20,
                samples: 20_000,
                slacks: vec![0.25, 0.5, 1.0, 2.0],
            },
        ],
    }
}
