//! Parallel experiment runner and its CSV tables.
//!
//! Every random draw comes from its own stream of the master seed, keyed by
//! (purpose, section, graph, index), so outputs do not depend on the number
//! of threads.

use rand::seq::index;
use rand::{Rng, RngCore};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use stwave_core::detect::{threshold, Decision, trial_rng, TrialContext, TrialRecord, TreeSource};
use stwave_core::stats::{fit_line, ExperimentResult, LinearFit};
use stwave_core::concentration::{ust_concentration_check, ConcentrationReport};
use stwave_core::signal::SignalKind;
use stwave_core::sparsity::SparsityPoint;
use stwave_core::{build_basis, sample_ust, Graph, Signal};

use crate::config::{ConcentrationSection, ExperimentConfig, PowerSection, SparsitySection, TreeChoice};
use crate::error::{Error, Result};
use crate::family::GraphSpec;

#[derive(Clone, Copy)]
#[repr(u64)]
enum Purpose {
    Graph = 1,
    Sparsity = 2,
    Signal = 3,
    Trial = 4,
    Null = 5,
    Concentration = 6,
}

fn stream(seed: u64, purpose: Purpose, section: usize, graph: usize, index: u64) -> ChaCha8Rng {
    debug_assert!(section < 1 << 12 && graph < 1 << 8 && index < 1 << 40);
    let id = (purpose as u64) << 60 | (section as u64) << 48 | (graph as u64) << 40 | index;
    trial_rng(seed, id)
}

fn build_graph(spec: &GraphSpec, seed: u64, section: usize, graph: usize) -> Result<(Graph, u64)> {
    let requested = stream(seed, Purpose::Graph, section, graph, 0).next_u64();
    let built = spec.build_connected(requested)?;
    Ok((built.graph, built.seed))
}

/// Identifies the graph a row belongs to.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphTag {
    pub section: String,
    pub family: &'static str,
    pub n: usize,
    pub graph_seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparsityRow {
    pub tag: GraphTag,
    pub signal: usize,
    pub rho: usize,
    /// `None` when no signal met the sampled cut budget.
    pub point: Option<SparsityPoint>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparsityFit {
    pub section: String,
    pub points: usize,
    pub infeasible: usize,
    pub fit: std::result::Result<LinearFit, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerTrial {
    pub tag: GraphTag,
    pub record: TrialRecord,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerCell {
    pub tag: GraphTag,
    pub rho: usize,
    pub mu: f64,
    pub tau: f64,
    /// `None` for infeasible cells.
    pub summary: Option<CellStats>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellStats {
    pub trials: usize,
    pub power: f64,
    pub type_i: f64,
    pub null_trials: usize,
    pub risk: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mu50 {
    pub tag: GraphTag,
    pub rho: usize,
    /// Smallest `mu` reaching 50% power, interpolated on the grid.
    pub mu50: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConcentrationOutput {
    pub tag: GraphTag,
    pub edges: usize,
    pub report: ConcentrationReport,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExperimentOutput {
    pub sparsity: Vec<SparsityRow>,
    pub sparsity_fits: Vec<SparsityFit>,
    pub power_trials: Vec<PowerTrial>,
    pub power_cells: Vec<PowerCell>,
    pub mu50: Vec<Mu50>,
    pub concentration: Vec<ConcentrationOutput>,
}

/// Runs every section of `config` with master seed `seed` on the current
/// rayon pool.
pub fn run(config: &ExperimentConfig, seed: u64) -> Result<ExperimentOutput> {
    config.validate()?;
    let mut out = ExperimentOutput::default();
    for (s, section) in config.sparsity.iter().enumerate() {
        let rows = sparsity_section(section, seed, s)?;
        out.sparsity_fits.push(fit_section(&section.name, &rows));
        out.sparsity.extend(rows);
    }
    let offset = config.sparsity.len();
    for (s, section) in config.power.iter().enumerate() {
        let (trials, cells, mu50) = power_section(section, config, seed, offset + s)?;
        out.power_trials.extend(trials);
        out.power_cells.extend(cells);
        out.mu50.extend(mu50);
    }
    let offset = offset + config.power.len();
    out.concentration = config
        .concentration
        .par_iter()
        .enumerate()
        .map(|(s, section)| concentration_section(section, seed, offset + s))
        .collect::<Result<_>>()?;
    Ok(out)
}

fn tag(section: &str, spec: &GraphSpec, g: &Graph, graph_seed: u64) -> GraphTag {
    GraphTag {
        section: section.to_owned(),
        family: spec.family(),
        n: g.n(),
        graph_seed,
    }
}

fn sparsity_section(section: &SparsitySection, seed: u64, s: usize) -> Result<Vec<SparsityRow>> {
    let kind = SignalKind::from(section.signal);
    let mut rows = Vec::new();
    for (gi, spec) in section.graphs.iter().enumerate() {
        let (g, graph_seed) = build_graph(spec, seed, s, gi)?;
        let (lo, hi) = (section.rho_min.rho(g.n()), section.rho_max.rho(g.n()));
        if lo > hi {
            return Err(Error::Config(format!("{}: rho_min {lo} exceeds rho_max {hi} at n = {}", section.name, g.n())));
        }
        let graph_tag = tag(&section.name, spec, &g, graph_seed);
        let part = (0..section.signals)
            .into_par_iter()
            .map(|i| {
                let mut rng = stream(seed, Purpose::Sparsity, s, gi, i as u64);
                let rho = rng.random_range(lo..=hi);
                let point = match kind.sample(&g, rho, 1.0, &mut rng) {
                    Ok(x) => {
                        let tree = sample_ust(&g, &mut rng)?;
                        Some(SparsityPoint::measure(&g, &tree, &build_basis(&tree), &x)?)
                    }
                    Err(stwave_core::Error::InfeasibleSignal(_)) => None,
                    Err(e) => return Err(e.into()),
                };
                Ok(SparsityRow {
                    tag: graph_tag.clone(),
                    signal: i,
                    rho,
                    point,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.extend(part);
    }
    Ok(rows)
}

fn fit_section(name: &str, rows: &[SparsityRow]) -> SparsityFit {
    let points: Vec<&SparsityPoint> = rows.iter().filter_map(|r| r.point.as_ref()).collect();
    let xs: Vec<f64> = points.iter().map(|p| p.bound as f64).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.sparsity as f64).collect();
    SparsityFit {
        section: name.to_owned(),
        points: points.len(),
        infeasible: rows.len() - points.len(),
        fit: fit_line(&xs, &ys).map_err(|e| e.to_string()),
    }
}

type PowerParts = (Vec<PowerTrial>, Vec<PowerCell>, Vec<Mu50>);

fn power_section(section: &PowerSection, config: &ExperimentConfig, seed: u64, s: usize) -> Result<PowerParts> {
    let kind = SignalKind::from(section.signal);
    let (mut trials, mut cells, mut mu50) = (Vec::new(), Vec::new(), Vec::new());
    for (gi, spec) in section.graphs.iter().enumerate() {
        let (g, graph_seed) = build_graph(spec, seed, s, gi)?;
        let n = g.n();
        let rho = section.rho.rho(n);
        let tau = threshold(config.sigma, n, config.delta)?;
        let graph_tag = tag(&section.name, spec, &g, graph_seed);
        let source = match section.tree {
            TreeChoice::Ust => TreeSource::Ust,
            TreeChoice::Bfs => TreeSource::Bfs { root: 0 },
        };
        let ctx = TrialContext::new(&g, source)?;

        let units = (0..section.trials)
            .into_par_iter()
            .map(|t| {
                let mut rng = stream(seed, Purpose::Signal, s, gi, t as u64);
                match kind.sample(&g, rho, 1.0, &mut rng) {
                    Ok(x) => Ok(Some(x)),
                    Err(stwave_core::Error::InfeasibleSignal(_)) => Ok(None),
                    Err(e) => Err(Error::from(e)),
                }
            })
            .collect::<Result<Vec<Option<Signal>>>>()?;
        if units.iter().any(Option::is_none) {
            cells.extend(section.mu.iter().map(|&mu| PowerCell {
                tag: graph_tag.clone(),
                rho,
                mu,
                tau,
                summary: None,
            }));
            mu50.push(Mu50 {
                tag: graph_tag,
                rho,
                mu50: None,
            });
            continue;
        }
        let units: Vec<Signal> = units.into_iter().flatten().collect();

        let record = |trial: usize, mu: f64, tree_seed: Option<u64>, d: Decision, truth: bool| TrialRecord {
            trial: trial as u64,
            seed,
            tree_seed,
            n,
            rho: truth.then_some(rho),
            mu,
            statistic: d.statistic,
            tau,
            reject: d.reject,
            truth,
        };
        // One tree and noise draw per trial, shared by every mu.
        let signal_rows = units
            .par_iter()
            .enumerate()
            .map(|(t, x)| {
                let mut rng = stream(seed, Purpose::Trial, s, gi, t as u64);
                let (decisions, tree_seed) = ctx.run_scaled(&mut rng, x, &section.mu, config.sigma, tau)?;
                Ok(section
                    .mu
                    .iter()
                    .zip(decisions)
                    .map(|(&mu, d)| record(t, mu, tree_seed, d, true))
                    .collect::<Vec<_>>())
            })
            .collect::<Result<Vec<_>>>()?;
        let null_rows = (0..section.trials)
            .into_par_iter()
            .map(|t| {
                let mut rng = stream(seed, Purpose::Null, s, gi, t as u64);
                let (d, tree_seed) = ctx.run_with(&mut rng, None, config.sigma, tau)?;
                Ok(record(t, 0.0, tree_seed, d, false))
            })
            .collect::<Result<Vec<_>>>()?;

        // Raw rows are listed mu-major, trial-minor, nulls last.
        let mut rows = Vec::with_capacity((section.mu.len() + 1) * section.trials);
        for m in 0..section.mu.len() {
            rows.extend(signal_rows.iter().map(|r| r[m].clone()));
        }
        rows.extend(null_rows);
        let result = ExperimentResult::new(rows);
        let summaries = result.cells();
        let mut powers = Vec::with_capacity(section.mu.len());
        for (&mu, c) in section.mu.iter().zip(&summaries) {
            debug_assert_eq!(c.mu, mu);
            powers.push(c.power);
            cells.push(PowerCell {
                tag: graph_tag.clone(),
                rho,
                mu,
                tau,
                summary: Some(CellStats {
                    trials: c.trials,
                    power: c.power,
                    type_i: c.type_i,
                    null_trials: c.null_trials,
                    risk: c.risk,
                }),
            });
        }
        mu50.push(Mu50 {
            tag: graph_tag.clone(),
            rho,
            mu50: crossing(&section.mu, &powers, 0.5),
        });
        trials.extend(result.rows.into_iter().map(|record| PowerTrial {
            tag: graph_tag.clone(),
            record,
        }));
    }
    Ok((trials, cells, mu50))
}

/// First `x` where the piecewise-linear curve through `(xs, ys)` reaches
/// `level`.
pub fn crossing(xs: &[f64], ys: &[f64], level: f64) -> Option<f64> {
    let i = ys.iter().position(|&y| y >= level)?;
    if i == 0 {
        return Some(xs[0]);
    }
    let (x0, x1, y0, y1) = (xs[i - 1], xs[i], ys[i - 1], ys[i]);
    Some(x0 + (x1 - x0) * (level - y0) / (y1 - y0))
}

fn concentration_section(section: &ConcentrationSection, seed: u64, s: usize) -> Result<ConcentrationOutput> {
    let (g, graph_seed) = build_graph(&section.graph, seed, s, 0)?;
    if section.edges > g.m() {
        return Err(Error::Config(format!(
            "{}: asked for {} edges, graph has {}",
            section.name,
            section.edges,
            g.m()
        )));
    }
    let mut rng = stream(seed, Purpose::Concentration, s, 0, 0);
    let mut ids = index::sample(&mut rng, g.m(), section.edges).into_vec();
    ids.sort_unstable();
    let subset: Vec<_> = ids.iter().map(|&e| g.edges()[e]).collect();
    let report = ust_concentration_check(&g, &subset, section.samples, &section.slacks, &mut rng)?;
    Ok(ConcentrationOutput {
        tag: tag(&section.name, &section.graph, &g, graph_seed),
        edges: section.edges,
        report,
    })
}

/// Column documentation written next to the tables.
pub const SCHEMA: &str = "\
sparsity.csv: one row per sampled signal
  section, family, n, graph_seed: graph the signal lives on
  signal: index of the draw within its graph
  rho: sampled cut budget
  status: ok, or infeasible when no signal met the budget (remaining columns empty)
  max_degree: max degree of the spanning tree
  graph_cut, tree_cut: cut size of the signal in the graph and in the tree
  bound: graph_cut * ceil(log2 max_degree) * ceil(log2 n)
  sparsity: number of nonzero basis coefficients
  mean_zero: whether the signal sums to zero
  within_bound: sparsity <= bound (+1 for signals with nonzero mean)

sparsity_fit.csv: least-squares line sparsity ~ slope * bound + intercept per section
  section, points, infeasible, status (ok or the reason the fit is undefined), slope, intercept, r_squared

power_trials.csv: one row per trial
  section, family, n, graph_seed
  truth: 1 for signal trials, 0 for null trials
  rho, mu: cut budget and signal energy (rho empty for null trials)
  trial: trial index; signal trials with equal index share tree and noise across mu
  tree_seed: seed of the uniform spanning tree (empty for fixed trees)
  statistic: max absolute basis coefficient
  tau: rejection threshold
  reject: 1 when statistic > tau

power.csv: one row per (graph, mu)
  section, family, n, graph_seed, rho, mu, tau
  status: ok or infeasible
  trials, power: signal trials and their rejection rate
  null_trials, type_i: null trials and their rejection rate
  risk: type_i + 1 - power; a lower estimate since the worst case is taken over sampled signals only

power_mu50.csv: one row per graph
  section, family, n, graph_seed, rho
  mu50: smallest mu on the grid (linearly interpolated) with power >= 0.5, empty if never reached

concentration.csv: one row per (section, slack)
  section, family, n, graph_seed, edges: size of the random edge subset B
  resistance_sum: sum of effective resistances over B
  mean_overlap: average |T ∩ B| over the sampled trees
  samples, slack
  cutoff: (1 + slack) * resistance_sum
  empirical: fraction of trees with |T ∩ B| >= cutoff
  bound: (e^slack / (1 + slack)^(1 + slack))^resistance_sum
  std_error: binomial standard error at the bound
  pass: empirical <= bound + 3 std_error
";

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(String::new, |v| v.to_string())
}

fn flag(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<Vec<u8>> {
    w.into_inner().map_err(|e| Error::io("<csv>", e.into_error()))
}

fn tag_fields(t: &GraphTag) -> [String; 4] {
    [t.section.clone(), t.family.to_owned(), t.n.to_string(), t.graph_seed.to_string()]
}

impl ExperimentOutput {
    /// `(file name, contents)` for every table that has rows.
    pub fn tables(&self) -> Result<Vec<(&'static str, Vec<u8>)>> {
        let mut out = Vec::new();
        if !self.sparsity.is_empty() {
            out.push(("sparsity.csv", self.sparsity_csv()?));
            out.push(("sparsity_fit.csv", self.sparsity_fit_csv()?));
        }
        if !self.power_cells.is_empty() {
            out.push(("power_trials.csv", self.power_trials_csv()?));
            out.push(("power.csv", self.power_csv()?));
            out.push(("power_mu50.csv", self.mu50_csv()?));
        }
        if !self.concentration.is_empty() {
            out.push(("concentration.csv", self.concentration_csv()?));
        }
        Ok(out)
    }

    pub fn sparsity_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "section", "family", "n", "graph_seed", "signal", "rho", "status", "max_degree", "graph_cut",
            "tree_cut", "bound", "sparsity", "mean_zero", "within_bound",
        ])?;
        for r in &self.sparsity {
            let mut row = tag_fields(&r.tag).to_vec();
            row.extend([r.signal.to_string(), r.rho.to_string()]);
            match &r.point {
                Some(p) => row.extend([
                    "ok".to_owned(),
                    p.max_degree.to_string(),
                    p.graph_cut.to_string(),
                    p.tree_cut.to_string(),
                    p.bound.to_string(),
                    p.sparsity.to_string(),
                    flag(p.mean_zero).to_owned(),
                    flag(p.within_graph_bound()).to_owned(),
                ]),
                None => {
                    row.push("infeasible".to_owned());
                    row.extend(std::iter::repeat_n(String::new(), 7));
                }
            }
            w.write_record(&row)?;
        }
        finish(w)
    }

    pub fn sparsity_fit_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["section", "points", "infeasible", "status", "slope", "intercept", "r_squared"])?;
        for f in &self.sparsity_fits {
            let head = [f.section.clone(), f.points.to_string(), f.infeasible.to_string()];
            let tail = match &f.fit {
                Ok(l) => ["ok".to_owned(), l.slope.to_string(), l.intercept.to_string(), l.r_squared.to_string()],
                Err(e) => [e.clone(), String::new(), String::new(), String::new()],
            };
            w.write_record(head.iter().chain(&tail))?;
        }
        finish(w)
    }

    pub fn power_trials_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "section", "family", "n", "graph_seed", "truth", "rho", "mu", "trial", "tree_seed", "statistic", "tau",
            "reject",
        ])?;
        for p in &self.power_trials {
            let r = &p.record;
            let mut row = tag_fields(&p.tag).to_vec();
            row.extend([
                flag(r.truth).to_owned(),
                opt(r.rho),
                r.mu.to_string(),
                r.trial.to_string(),
                opt(r.tree_seed),
                r.statistic.to_string(),
                r.tau.to_string(),
                flag(r.reject).to_owned(),
            ]);
            w.write_record(&row)?;
        }
        finish(w)
    }

    pub fn power_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "section", "family", "n", "graph_seed", "rho", "mu", "tau", "status", "trials", "power", "null_trials",
            "type_i", "risk",
        ])?;
        for c in &self.power_cells {
            let mut row = tag_fields(&c.tag).to_vec();
            row.extend([c.rho.to_string(), c.mu.to_string(), c.tau.to_string()]);
            match &c.summary {
                Some(s) => row.extend([
                    "ok".to_owned(),
                    s.trials.to_string(),
                    s.power.to_string(),
                    s.null_trials.to_string(),
                    s.type_i.to_string(),
                    s.risk.to_string(),
                ]),
                None => {
                    row.push("infeasible".to_owned());
                    row.extend(std::iter::repeat_n(String::new(), 5));
                }
            }
            w.write_record(&row)?;
        }
        finish(w)
    }

    pub fn mu50_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["section", "family", "n", "graph_seed", "rho", "mu50"])?;
        for m in &self.mu50 {
            let mut row = tag_fields(&m.tag).to_vec();
            row.extend([m.rho.to_string(), opt(m.mu50)]);
            w.write_record(&row)?;
        }
        finish(w)
    }

    pub fn concentration_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "section", "family", "n", "graph_seed", "edges", "resistance_sum", "mean_overlap", "samples", "slack",
            "cutoff", "empirical", "bound", "std_error", "pass",
        ])?;
        for c in &self.concentration {
            for r in &c.report.rows {
                let mut row = tag_fields(&c.tag).to_vec();
                row.extend([
                    c.edges.to_string(),
                    c.report.resistance_sum.to_string(),
                    c.report.mean_overlap.to_string(),
                    c.report.samples.to_string(),
                    r.slack.to_string(),
                    r.cutoff.to_string(),
                    r.empirical.to_string(),
                    r.bound.to_string(),
                    r.std_error.to_string(),
                    flag(r.pass).to_owned(),
                ]);
                w.write_record(&row)?;
            }
        }
        finish(w)
    }

    /// Human-readable digest of the run.
    pub fn summary(&self) -> String {
        use std::fmt::Write as _;
        let mut s = String::new();
        for f in &self.sparsity_fits {
            match &f.fit {
                Ok(l) => writeln!(
                    s,
                    "sparsity {}: {} points, slope {:.4}, R^2 {:.3}, {} infeasible",
                    f.section, f.points, l.slope, l.r_squared, f.infeasible
                ),
                Err(e) => writeln!(s, "sparsity {}: {} points, no fit ({e})", f.section, f.points),
            }
            .unwrap();
        }
        let violations = self
            .sparsity
            .iter()
            .filter(|r| r.point.is_some_and(|p| !p.within_graph_bound()))
            .count();
        if !self.sparsity.is_empty() {
            writeln!(s, "sparsity bound violations: {violations}").unwrap();
        }
        for m in &self.mu50 {
            writeln!(
                s,
                "power {} n={} rho={}: mu50 {}",
                m.tag.section,
                m.tag.n,
                m.rho,
                m.mu50.map_or("not reached".to_owned(), |v| format!("{v:.3}"))
            )
            .unwrap();
        }
        for c in &self.concentration {
            let worst = c.report.rows.iter().map(|r| r.empirical - r.bound).fold(f64::NEG_INFINITY, f64::max);
            writeln!(
                s,
                "concentration {}: sum r_e {:.3}, max(empirical - bound) {:.4}, {}",
                c.tag.section,
                c.report.resistance_sum,
                worst,
                if c.report.passed() { "pass" } else { "FAIL" }
            )
            .unwrap();
        }
        s
    }
}
