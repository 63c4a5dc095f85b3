//! The invariant suite behind `stwave validate`.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use stwave_core::detect::{run_trial, NoiseModel, TrialContext, TreeSource};
use stwave_core::generators::{complete, epsilon, knn, torus};
use stwave_core::resistance::{check_inclusion_probabilities, ResistanceProfile};
use stwave_core::signal::{prior_signal, prior_support_size, two_level_signal};
use stwave_core::stats::binomial_std_error;
use stwave_core::tree::random_tree;
use stwave_core::wavelet::activation_bound;
use stwave_core::{build_basis, sample_ust, Graph, Signal, SpanningTree};

use crate::error::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, pass: bool, detail: String) -> Self {
        Check {
            name: name.into(),
            pass,
            detail,
        }
    }
}

impl std::fmt::Display for Check {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let status = if self.pass { "pass" } else { "FAIL" };
        write!(f, "{status}  {}: {}", self.name, self.detail)
    }
}

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    stwave_core::detect::trial_rng(seed, stream)
}

/// Connected graphs from every family, drawn with `seed`.
fn sample_graphs(seed: u64) -> Result<Vec<(String, Graph)>> {
    let mut r = rng(seed, 0);
    let mut out = vec![
        ("torus 8x8".to_owned(), torus(8, 2)?),
        ("torus 4x4x4".to_owned(), torus(4, 3)?),
        ("complete 40".to_owned(), complete(40)?),
    ];
    while out.len() < 5 {
        let g = knn(120, 5, 2, &mut r)?.graph;
        if g.is_connected() {
            out.push(("knn 120/5".to_owned(), g));
        }
    }
    while out.len() < 6 {
        let g = epsilon(120, 0.2, 2, &mut r)?.graph;
        if g.is_connected() {
            out.push(("epsilon 120/0.2".to_owned(), g));
        }
    }
    Ok(out)
}

fn graph_checks(label: &str, g: &Graph, seed: u64) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let degree_sum: usize = g.degrees().iter().sum();
    let symmetric = (0..g.n()).all(|v| g.neighbors(v).iter().all(|&w| g.neighbors(w).binary_search(&v).is_ok()));
    checks.push(Check::new(
        format!("{label}: graph invariants"),
        degree_sum == 2 * g.m() && symmetric,
        format!("n {}, m {}, degree sum {degree_sum}, symmetric {symmetric}", g.n(), g.m()),
    ));

    let profile = ResistanceProfile::new(g)?;
    let foster = (profile.total() - (g.n() - 1) as f64).abs();
    checks.push(Check::new(
        format!("{label}: resistance sum"),
        foster < 1e-8,
        format!("sum {:.9}, n-1 = {}, error {foster:.2e}", profile.total(), g.n() - 1),
    ));

    let mut r = rng(seed, 1);
    let (mut gram, mut parseval, mut max_act, mut bound, mut violations) = (0.0f64, 0.0f64, 0, 0, 0);
    for _ in 0..3 {
        let tree = sample_ust(g, &mut r)?;
        let basis = build_basis(&tree);
        gram = gram.max(basis.gram_residual());
        for _ in 0..10 {
            let y = Signal::new((0..g.n()).map(|_| StandardNormal.sample(&mut r)).collect());
            let c = basis.apply(&y)?;
            let norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
            parseval = parseval.max((norm - y.norm()).abs());
        }
        let factor = activation_bound(tree.max_degree(), g.n());
        let acts = basis.edge_activations(&tree)?;
        max_act = max_act.max(acts.iter().copied().max().unwrap_or(0));
        bound = bound.max(factor);
        violations += acts.iter().filter(|&&a| a > factor).count();
        for _ in 0..10 {
            let rho = r.random_range(1..=g.max_degree() * 4);
            let Ok(x) = two_level_signal(g, rho, 1.0, &mut r) else { continue };
            let s = basis.sparsity(&x)?;
            if s > tree.cut_size(&x)? * factor {
                violations += 1;
            }
        }
    }
    checks.push(Check::new(
        format!("{label}: orthonormal basis"),
        gram < 1e-10 && parseval < 1e-8,
        format!("gram residual {gram:.2e}, Parseval residual {parseval:.2e}"),
    ));
    checks.push(Check::new(
        format!("{label}: activation and sparsity bounds"),
        violations == 0,
        format!("max activation {max_act} <= {bound}, {violations} violations"),
    ));
    Ok(checks)
}

fn balance_check(seed: u64) -> Check {
    let mut r = rng(seed, 2);
    let (mut bad, mut worst_moves) = (0, 0);
    for _ in 0..2_000 {
        let n = r.random_range(1..=300);
        let t = SpanningTree::of_tree_graph(&random_tree(n, &mut r)).expect("random tree");
        let b = t.find_balance(&(0..n).collect::<Vec<_>>()).expect("nonempty");
        worst_moves = worst_moves.max(b.moves);
        if b.largest_component > n.div_ceil(2) || b.moves > n {
            bad += 1;
        }
    }
    Check::new(
        "balancing vertex on 2000 random trees",
        bad == 0,
        format!("{bad} failures, longest walk {worst_moves}"),
    )
}

fn inclusion_check(seed: u64) -> Result<Check> {
    let mut r = rng(seed, 3);
    let graphs = [torus(3, 2)?, complete(6)?, torus(4, 2)?];
    let (mut within, mut total) = (0, 0);
    for g in &graphs {
        for c in check_inclusion_probabilities(g, &ResistanceProfile::new(g)?, 5_000, &mut r)? {
            total += 1;
            within += usize::from(c.z.abs() <= 3.0);
        }
    }
    let pass = within as f64 >= 0.99 * total as f64;
    Ok(Check::new(
        "tree edge frequencies match resistances",
        pass,
        format!("{within}/{total} edges within 3 standard errors"),
    ))
}

fn calibration_check(seed: u64) -> Result<Check> {
    let g = torus(8, 2)?;
    let ctx = TrialContext::new(&g, TreeSource::Ust)?;
    let noise = NoiseModel::new(1.0, seed)?;
    let trials = 2_000u64;
    let rejects = (0..trials)
        .into_par_iter()
        .map(|t| run_trial(&ctx, None, &noise, 0.05, t).map(|r| usize::from(r.reject)))
        .sum::<stwave_core::Result<usize>>()?;
    let rate = rejects as f64 / trials as f64;
    let limit = 0.05 + 3.0 * binomial_std_error(0.05, trials as usize);
    Ok(Check::new(
        "null rejection rate at level 0.05",
        rate <= limit,
        format!("{rejects}/{trials} = {rate:.4} <= {limit:.4}"),
    ))
}

fn prior_check(seed: u64) -> Result<Check> {
    let mut r = rng(seed, 4);
    let g = torus(10, 2)?;
    let mut bad = 0;
    for _ in 0..500 {
        let rho = r.random_range(4..=60);
        let mu = r.random_range(0.5..20.0);
        let x = prior_signal(&g, rho, mu, &mut r)?;
        let p = prior_support_size(rho, 4, 100);
        let nnz = x.values().iter().filter(|v| **v != 0.0).count();
        if nnz != p || g.cut_size(&x)? > rho || (x.norm() - mu).abs() > 1e-9 * mu {
            bad += 1;
        }
    }
    Ok(Check::new("prior signals meet cut and energy", bad == 0, format!("{bad} of 500 failed")))
}

/// Runs the suite. `extra` adds graph checks for a user-supplied graph.
pub fn suite(seed: u64, extra: Option<(&str, &Graph)>) -> Result<Vec<Check>> {
    let mut graphs = sample_graphs(seed)?;
    if let Some((label, g)) = extra {
        g.require_connected()?;
        graphs.insert(0, (label.to_owned(), g.clone()));
    }
    let per_graph = graphs
        .par_iter()
        .enumerate()
        .map(|(i, (label, g))| graph_checks(label, g, seed.wrapping_add(i as u64)))
        .collect::<Result<Vec<_>>>()?;
    let mut checks: Vec<Check> = per_graph.into_iter().flatten().collect();
    checks.push(balance_check(seed));
    checks.push(inclusion_check(seed)?);
    checks.push(calibration_check(seed)?);
    checks.push(prior_check(seed)?);
    Ok(checks)
}
