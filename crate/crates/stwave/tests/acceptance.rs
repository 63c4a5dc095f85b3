//! Acceptance suite. Prints one pass/fail line per criterion and exits
//! nonzero if any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use stwave::config::ExperimentConfig;
use stwave::experiment::{self, crossing};
use stwave::family::GraphSpec;
use stwave_core::concentration::ust_concentration_check;
use stwave_core::detect::{remark1_snr, run_trial, threshold, trial_rng, NoiseModel, TrialContext, TreeSource};
use stwave_core::resistance::{check_inclusion_probabilities, ResistanceProfile};
use stwave_core::signal::{cluster_signal, prior_signal, prior_support_size, two_level_signal};
use stwave_core::stats::{binomial_std_error, isotonic_violations};
use stwave_core::tree::random_tree;
use stwave_core::wavelet::activation_bound;
use stwave_core::{bfs_spanning_tree, build_basis, sample_ust, Graph, Signal, SpanningTree};

const SEED: u64 = 20240611;

type Outcome = Result<String, String>;

fn rng(stream: u64) -> ChaCha8Rng {
    trial_rng(SEED, stream)
}

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// A connected member of `family` with about `n` vertices.
fn family_graph(family: usize, n: usize, seed: u64) -> Graph {
    let spec = match family {
        0 => GraphSpec::Torus {
            side: n.isqrt(),
            dims: 2,
        },
        1 => GraphSpec::Complete { n },
        2 => GraphSpec::Knn { n, k: 6, dim: 2 },
        _ => GraphSpec::Epsilon {
            n,
            eps: 1.6 * ((n as f64).ln() / (std::f64::consts::PI * n as f64)).sqrt(),
            dim: 2,
        },
    };
    spec.build_connected(seed).expect("connected graph").graph
}

fn gaussian(n: usize, r: &mut ChaCha8Rng) -> Signal {
    Signal::new((0..n).map(|_| StandardNormal.sample(r)).collect())
}

fn orthonormality() -> Outcome {
    let results: Vec<(f64, f64)> = (0..50u64)
        .into_par_iter()
        .map(|i| {
            let n = [16, 64, 256][(i as usize / 4) % 3];
            let g = family_graph(i as usize % 4, n, SEED + i);
            let mut r = rng(100 + i);
            let (mut gram, mut parseval) = (0.0f64, 0.0f64);
            for _ in 0..3 {
                let basis = build_basis(&sample_ust(&g, &mut r).unwrap());
                gram = gram.max(basis.gram_residual());
                for _ in 0..100 {
                    let y = gaussian(g.n(), &mut r);
                    let c = basis.apply(&y).unwrap();
                    let energy: f64 = c.iter().map(|v| v * v).sum();
                    parseval = parseval.max((energy.sqrt() - y.norm()).abs());
                }
            }
            (gram, parseval)
        })
        .collect();
    let gram = results.iter().map(|r| r.0).fold(0.0, f64::max);
    let parseval = results.iter().map(|r| r.1).fold(0.0, f64::max);
    verdict(
        gram < 1e-10 && parseval < 1e-8,
        format!("50 graphs x 3 trees: max Gram residual {gram:.2e}, max Parseval residual {parseval:.2e}"),
    )
}

/// Random piecewise-constant signal: cut `cuts` tree edges and give each
/// piece its own level.
fn piecewise(t: &SpanningTree, cuts: usize, r: &mut ChaCha8Rng) -> Signal {
    let mut kept = t.edges().to_vec();
    for _ in 0..cuts.min(kept.len()) {
        let i = r.random_range(0..kept.len());
        kept.swap_remove(i);
    }
    let mut x = vec![0.0; t.n()];
    for piece in Graph::new(t.n(), &kept).unwrap().connected_components() {
        let level: f64 = r.random_range(-4.0..4.0);
        for v in piece {
            x[v] = level;
        }
    }
    Signal::new(x)
}

fn centered(x: &Signal) -> Signal {
    let m = x.mean();
    Signal::new(x.values().iter().map(|v| v - m).collect())
}

fn sparsity_bound() -> Outcome {
    // (pairs, violations) for mean-zero and general-mean signals.
    let counts: Vec<[usize; 4]> = (0..60u64)
        .into_par_iter()
        .map(|i| {
            let n = [16, 64, 256][(i as usize / 4) % 3];
            let g = family_graph(i as usize % 4, n, SEED + 1000 + i);
            let mut r = rng(200 + i);
            let mut c = [0usize; 4];
            for _ in 0..5 {
                let t = sample_ust(&g, &mut r).unwrap();
                let b = build_basis(&t);
                let factor = activation_bound(t.max_degree(), g.n());
                for s in 0..20 {
                    let rho = r.random_range(1..=4 * g.max_degree());
                    let general = match s % 2 {
                        0 => cluster_signal(&g, rho, 1.0, &mut r).ok(),
                        _ => Some(piecewise(&t, r.random_range(0..8), &mut r)),
                    };
                    let Some(general) = general else { continue };
                    let zero = match s % 4 {
                        0 => two_level_signal(&g, rho, 1.0, &mut r).unwrap_or_else(|_| centered(&general)),
                        _ => centered(&general),
                    };
                    let tz = t.cut_size(&zero).unwrap();
                    c[0] += 1;
                    c[1] += usize::from(b.sparsity(&zero).unwrap() > tz * factor);
                    let tg = t.cut_size(&general).unwrap();
                    c[2] += 1;
                    c[3] += usize::from(b.sparsity(&general).unwrap() > tg * factor + 1);
                }
            }
            c
        })
        .collect();
    let total = counts.iter().fold([0; 4], |a, c| [a[0] + c[0], a[1] + c[1], a[2] + c[2], a[3] + c[3]]);
    verdict(
        total[0] >= 5000 && total[1] == 0 && total[3] == 0,
        format!(
            "{} mean-zero pairs with {} violations, {} general-mean pairs with {} violations of bound + 1",
            total[0], total[1], total[2], total[3]
        ),
    )
}

fn balance() -> Outcome {
    let mut r = rng(300);
    let (mut bad, mut longest) = (0, 0);
    for _ in 0..10_000 {
        let n = r.random_range(1..=500);
        let t = SpanningTree::of_tree_graph(&random_tree(n, &mut r)).unwrap();
        let b = t.find_balance(&(0..n).collect::<Vec<_>>()).unwrap();
        longest = longest.max(b.moves);
        if b.largest_component > n.div_ceil(2) || b.moves > n {
            bad += 1;
        }
    }
    verdict(
        bad == 0,
        format!("10000 random trees: {bad} failures, longest walk {longest} moves"),
    )
}

fn foster() -> Outcome {
    let specs = [
        GraphSpec::Torus { side: 31, dims: 2 },
        GraphSpec::Torus { side: 10, dims: 3 },
        GraphSpec::Complete { n: 1000 },
        GraphSpec::Knn { n: 1000, k: 8, dim: 2 },
        GraphSpec::Epsilon { n: 1000, eps: 0.08, dim: 2 },
        GraphSpec::Knn { n: 300, k: 4, dim: 3 },
        GraphSpec::Torus { side: 3, dims: 1 },
    ];
    let errors: Vec<(usize, f64)> = specs
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let g = s.build_connected(SEED + i as u64).unwrap().graph;
            let p = ResistanceProfile::new(&g).unwrap();
            (g.n(), (p.total() - (g.n() - 1) as f64).abs())
        })
        .collect();
    let worst = errors.iter().map(|e| e.1).fold(0.0, f64::max);
    let largest = errors.iter().map(|e| e.0).max().unwrap();
    verdict(
        worst < 1e-8,
        format!("{} graphs up to n = {largest}: max |sum r_e - (n-1)| = {worst:.2e}", errors.len()),
    )
}

fn matrix_tree() -> Outcome {
    let (within, total): (usize, usize) = (0..10u64)
        .into_par_iter()
        .map(|i| {
            let g = match i {
                0 => GraphSpec::Torus { side: 3, dims: 2 }.build(0).unwrap().graph,
                1 => GraphSpec::Torus { side: 5, dims: 2 }.build(0).unwrap().graph,
                2 => GraphSpec::Complete { n: 8 }.build(0).unwrap().graph,
                3 => Graph::new(3, &[(0, 1), (1, 2), (0, 2)]).unwrap(),
                _ => family_graph(2 + i as usize % 2, 20 + 5 * i as usize, SEED + 2000 + i),
            };
            let p = ResistanceProfile::new(&g).unwrap();
            let checks = check_inclusion_probabilities(&g, &p, 10_000, &mut rng(400 + i)).unwrap();
            (checks.iter().filter(|c| c.z <= 3.0).count(), checks.len())
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    let share = within as f64 / total as f64;
    verdict(
        share >= 0.99,
        format!("10 graphs, 10000 trees each: {within}/{total} edges ({:.2}%) within 3 standard errors", 100.0 * share),
    )
}

fn concentration() -> Outcome {
    let graphs = [
        ("torus 8x8", GraphSpec::Torus { side: 8, dims: 2 }),
        ("knn 200/6", GraphSpec::Knn { n: 200, k: 6, dim: 2 }),
    ];
    let reports: Vec<_> = graphs
        .par_iter()
        .enumerate()
        .map(|(i, (name, spec))| {
            let g = spec.build_connected(SEED + 3000).unwrap().graph;
            let mut r = rng(500 + i as u64);
            let mut ids = rand::seq::index::sample(&mut r, g.m(), 20).into_vec();
            ids.sort_unstable();
            let subset: Vec<_> = ids.iter().map(|&e| g.edges()[e]).collect();
            let rep = ust_concentration_check(&g, &subset, 20_000, &[0.25, 0.5, 1.0, 2.0], &mut r).unwrap();
            (*name, rep)
        })
        .collect();
    let ok = reports.iter().all(|(_, r)| r.passed());
    let detail = reports
        .iter()
        .map(|(name, r)| {
            let cells: Vec<String> = r.rows.iter().map(|row| format!("{:.4}<={:.4}", row.empirical, row.bound)).collect();
            format!("{name} (sum r_e {:.2}): {}", r.resistance_sum, cells.join(" "))
        })
        .collect::<Vec<_>>()
        .join("; ");
    verdict(ok, detail)
}

fn calibration() -> Outcome {
    let g = GraphSpec::Torus { side: 16, dims: 2 }.build(0).unwrap().graph;
    let n = g.n();
    let ust = TrialContext::new(&g, TreeSource::Ust).unwrap();
    let noise = NoiseModel::new(1.0, SEED).unwrap();
    let trials = 10_000u64;
    let rejects: usize = (0..trials)
        .into_par_iter()
        .map(|t| usize::from(run_trial(&ust, None, &noise, 0.05, t).unwrap().reject))
        .sum();
    let type_i = rejects as f64 / trials as f64;
    let type_i_limit = 0.05 + 3.0 * binomial_std_error(0.05, trials as usize);

    let tree = bfs_spanning_tree(&g, 0).unwrap();
    let fixed = TrialContext::new(&g, TreeSource::Fixed(tree.clone())).unwrap();
    let tau = threshold(1.0, n, 0.05).unwrap();
    let power_trials = 2_000u64;
    let hits: usize = (0..power_trials)
        .into_par_iter()
        .map(|t| {
            let mut r = rng(600_000 + t);
            let rho = r.random_range(4..=32);
            let unit = two_level_signal(&g, rho, 1.0, &mut r).unwrap();
            let cut = g.cut_size(&unit).unwrap();
            let mu = 2.0 * remark1_snr(cut, tree.max_degree(), n, 0.05).unwrap();
            let x = unit.scaled(mu);
            let mut stream = rng(700_000 + t);
            usize::from(fixed.run_with(&mut stream, Some(&x), 1.0, tau).unwrap().0.reject)
        })
        .sum();
    let power = hits as f64 / power_trials as f64;
    let power_limit = 0.95 - 3.0 * binomial_std_error(0.95, power_trials as usize);
    verdict(
        type_i <= type_i_limit && power >= power_limit,
        format!(
            "torus 16x16: type I {type_i:.4} <= {type_i_limit:.4} over {trials} null trials; power {power:.4} >= {power_limit:.4} over {power_trials} trials at 2x the sufficient SNR"
        ),
    )
}

fn figure1() -> Outcome {
    let cfg = ExperimentConfig::preset("paper-fig1").unwrap();
    let out = experiment::run(&cfg, SEED).map_err(|e| e.to_string())?;
    let slope = |name: &str| {
        out.sparsity_fits
            .iter()
            .find(|f| f.section == name)
            .and_then(|f| f.fit.clone().ok())
            .expect("fit")
    };
    let torus = slope("torus");
    let complete = slope("complete");
    let points = out.sparsity.iter().filter_map(|r| r.point).collect::<Vec<_>>();
    let violations = points.iter().filter(|p| !p.within_graph_bound()).count();
    let ok = violations == 0
        && (0.02..=0.5).contains(&torus.slope)
        && torus.r_squared >= 0.5
        && complete.slope * 10.0 <= torus.slope;
    let others: Vec<String> = out
        .sparsity_fits
        .iter()
        .filter_map(|f| f.fit.as_ref().ok().map(|l| format!("{} {:.4}/{:.2}", f.section, l.slope, l.r_squared)))
        .collect();
    verdict(
        ok,
        format!(
            "{} points, {violations} above the bound; slope/R^2: {}",
            points.len(),
            others.join(", ")
        ),
    )
}

fn figure2() -> Outcome {
    let mut cfg = ExperimentConfig::preset("paper-fig2").unwrap();
    cfg.concentration.clear();
    let out = experiment::run(&cfg, SEED).map_err(|e| e.to_string())?;
    let mut problems = Vec::new();
    let mut summary = Vec::new();
    for section in &cfg.power {
        let mut mu50s = Vec::new();
        for m in out.mu50.iter().filter(|m| m.tag.section == section.name) {
            let cells: Vec<_> = out
                .power_cells
                .iter()
                .filter(|c| c.tag.section == section.name && c.tag.n == m.tag.n)
                .map(|c| c.summary.expect("feasible cell"))
                .collect();
            let powers: Vec<f64> = cells.iter().map(|c| c.power).collect();
            let bad = isotonic_violations(&powers, section.trials, 2.0);
            if bad > 0 {
                problems.push(format!("{} n={} has {bad} isotonic violations", section.name, m.tag.n));
            }
            assert_eq!(crossing(&section.mu, &powers, 0.5), m.mu50);
            mu50s.push(m.mu50.unwrap_or(f64::INFINITY));
        }
        if mu50s.windows(2).any(|w| w[1] < w[0]) {
            problems.push(format!("{} mu50 decreases: {mu50s:?}", section.name));
        }
        let shown: Vec<String> = mu50s.iter().map(|v| format!("{v:.2}")).collect();
        summary.push(format!("{} mu50 {}", section.name, shown.join(" < ")));
    }
    let detail = summary.join("; ");
    if problems.is_empty() {
        Ok(detail)
    } else {
        Err(format!("{detail}; {}", problems.join("; ")))
    }
}

fn resistance_scaling() -> Outcome {
    let knn: Vec<(usize, usize, f64)> = [(200, 6), (400, 8), (800, 11)]
        .par_iter()
        .map(|&(n, k)| {
            let g = GraphSpec::Knn { n, k, dim: 2 }.build_connected(SEED + 4000).unwrap().graph;
            (n, k, ResistanceProfile::new(&g).unwrap().max_edge_resistance())
        })
        .collect();
    let decreasing = knn.windows(2).all(|w| w[1].2 < w[0].2);
    let below = knn.iter().all(|&(_, k, r)| r <= 4.0 / k as f64);
    let eps: Vec<(usize, f64, f64)> = [200usize, 400, 800]
        .par_iter()
        .map(|&n| {
            let eps = 1.6 * ((n as f64).ln() / (std::f64::consts::PI * n as f64)).sqrt();
            let g = GraphSpec::Epsilon { n, eps, dim: 2 }.build_connected(SEED + 5000).unwrap().graph;
            let r = ResistanceProfile::new(&g).unwrap().max_edge_resistance();
            (n, eps, r * n as f64 * eps * eps)
        })
        .collect();
    let cs: Vec<f64> = eps.iter().map(|e| e.2).collect();
    let spread = cs.iter().copied().fold(0.0, f64::max) / cs.iter().copied().fold(f64::INFINITY, f64::min);
    let knn_text: Vec<String> = knn.iter().map(|(n, k, r)| format!("({n},{k}) {r:.4}<={:.4}", 4.0 / *k as f64)).collect();
    let eps_text: Vec<String> = eps.iter().map(|(n, e, c)| format!("n={n} eps={e:.3} C={c:.3}")).collect();
    verdict(
        decreasing && below && spread <= 3.0,
        format!(
            "knn max r_e {}; epsilon {} (spread {spread:.2})",
            knn_text.join(", "),
            eps_text.join(", ")
        ),
    )
}

fn prior_signals() -> Outcome {
    let (mut draws, mut bad) = (0, 0);
    for (i, family) in (0..4).cycle().take(12).enumerate() {
        let n = [16, 64, 256][i / 4];
        let g = family_graph(family, n, SEED + 6000 + i as u64);
        let dmax = g.max_degree();
        let mut r = rng(800 + i as u64);
        for _ in 0..200 {
            let rho = r.random_range(dmax..=dmax * 40);
            let mu = r.random_range(0.1..50.0);
            let x = prior_signal(&g, rho, mu, &mut r).unwrap();
            let oracle = (rho as f64 / dmax as f64).min((n as f64).sqrt()).floor() as usize;
            let p = prior_support_size(rho, dmax, n);
            let nnz = x.values().iter().filter(|v| **v != 0.0).count();
            draws += 1;
            if p != oracle || nnz != p || g.cut_size(&x).unwrap() > rho || (x.norm() - mu).abs() > 1e-12 * mu {
                bad += 1;
            }
        }
        if prior_signal(&g, dmax - 1, 1.0, &mut r).is_ok() {
            bad += 1;
        }
    }
    verdict(
        bad == 0,
        format!("{draws} prior signals on 12 graphs: {bad} failures of cut, energy or support size"),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("orthonormality and completeness", orthonormality),
        ("sparsity bound", sparsity_bound),
        ("balancing vertex", balance),
        ("resistance sum", foster),
        ("tree edge frequencies", matrix_tree),
        ("tree overlap concentration", concentration),
        ("type I and power", calibration),
        ("sparsity scatter", figure1),
        ("power curves", figure2),
        ("resistance scaling", resistance_scaling),
        ("prior signals", prior_signals),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name} [{secs:.1}s]: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name} [{secs:.1}s]: {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
