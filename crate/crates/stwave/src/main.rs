use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use stwave::config::ExperimentConfig;
use stwave::experiment::{self, SCHEMA};
use stwave::family::GraphSpec;
use stwave::io;
use stwave::manifest::{manifest_path, FileDigest, RunManifest};
use stwave::validate;
use stwave::{Error, Result};
use stwave_core::resistance::{check_inclusion_probabilities, ResistanceProfile};
use stwave_core::wavelet::activation_bound;
use stwave_core::{bfs_spanning_tree, build_basis, sample_ust, Graph};

/// Spanning-tree wavelet bases, detection experiments and validation.
#[derive(Parser)]
#[command(name = "stwave", version)]
struct Cli {
    /// Worker threads for Monte Carlo trials (0 = one per core).
    #[arg(long, global = true, env = "STWAVE_THREADS", default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a graph as an edge list.
    Gen(GenArgs),
    /// Build the wavelet basis of a spanning tree and check it.
    Basis(BasisArgs),
    /// Effective resistances of every edge.
    Resistance(ResistanceArgs),
    /// Run a configured experiment.
    Experiment(ExperimentArgs),
    /// Run the invariant suite.
    Validate(ValidateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Torus,
    Complete,
    Knn,
    Epsilon,
}

#[derive(Args)]
struct GenArgs {
    family: Family,
    #[arg(long)]
    side: Option<usize>,
    #[arg(long, default_value_t = 2)]
    dims: usize,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    eps: Option<f64>,
    /// Dimension of the unit cube for geometric families.
    #[arg(long, default_value_t = 2)]
    dim: usize,
    /// Required for random families.
    #[arg(long)]
    seed: Option<u64>,
    /// Edge-list path; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Point coordinates CSV (default `<out>.points.csv`).
    #[arg(long)]
    points: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum, serde::Serialize)]
#[serde(rename_all = "lowercase")]
enum TreeKind {
    Ust,
    Bfs,
    File,
}

#[derive(Args)]
struct BasisArgs {
    graph: PathBuf,
    #[arg(long, value_enum, default_value_t = TreeKind::Ust)]
    tree: TreeKind,
    /// Seed of the uniform spanning tree.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 0)]
    root: usize,
    /// Tree file for `--tree file`.
    #[arg(long)]
    tree_file: Option<PathBuf>,
    /// Basis CSV path.
    #[arg(long)]
    out: PathBuf,
    /// Where to save the tree.
    #[arg(long)]
    tree_out: Option<PathBuf>,
}

#[derive(Args)]
struct ResistanceArgs {
    graph: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Check that resistances sum to n - 1.
    #[arg(long)]
    validate_foster: bool,
    /// Compare edge frequencies of this many uniform spanning trees with resistances.
    #[arg(long, value_name = "SAMPLES")]
    validate_mtt: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
#[group(id = "source", required = true, multiple = false)]
struct Source {
    /// TOML experiment file.
    #[arg(long, group = "source")]
    config: Option<PathBuf>,
    /// Built-in configuration (paper-fig1, paper-fig2).
    #[arg(long, group = "source")]
    preset: Option<String>,
    /// Replay the run recorded in a manifest and compare its outputs.
    #[arg(long, group = "source")]
    manifest: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    #[command(flatten)]
    source: Source,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Master seed; overrides the seed in the configuration.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct ValidateArgs {
    /// Also check this graph.
    #[arg(long)]
    graph: Option<PathBuf>,
    #[arg(long)]
    seed: u64,
}

/// What a command found, when it ran to completion.
enum Outcome {
    Ok,
    Failed,
}

fn usage(message: impl Into<String>) -> Error {
    Error::Config(message.into())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    let result = match cli.command {
        Command::Gen(a) => gen(a),
        Command::Basis(a) => basis(a),
        Command::Resistance(a) => resistance(a),
        Command::Experiment(a) => run_experiment(a),
        Command::Validate(a) => run_validate(a),
    };
    match result {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::Failed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn gen(a: GenArgs) -> Result<Outcome> {
    let need = |v: Option<usize>, flag: &str| v.ok_or_else(|| usage(format!("--{flag} is required for this family")));
    let spec = match a.family {
        Family::Torus => GraphSpec::Torus {
            side: need(a.side, "side")?,
            dims: a.dims,
        },
        Family::Complete => GraphSpec::Complete { n: need(a.n, "n")? },
        Family::Knn => GraphSpec::Knn {
            n: need(a.n, "n")?,
            k: need(a.k, "k")?,
            dim: a.dim,
        },
        Family::Epsilon => GraphSpec::Epsilon {
            n: need(a.n, "n")?,
            eps: a.eps.ok_or_else(|| usage("--eps is required for this family"))?,
            dim: a.dim,
        },
    };
    if spec.is_random() && a.seed.is_none() {
        return Err(usage(format!("--seed is required for the {} family", spec.family())));
    }
    let mut manifest = RunManifest::new("gen", serde_json::to_value(&spec).unwrap(), a.seed);
    let mpath = a.out.as_deref().map(manifest_path);
    if let Some(p) = &mpath {
        manifest.save(p)?;
    }
    let built = spec.build(a.seed.unwrap_or(0))?;
    let text = io::edge_list(&built.graph);
    let components = built.graph.connected_components();
    if components.len() > 1 {
        eprintln!("warning: graph has {} components", components.len());
    }
    match &a.out {
        None => print!("{text}"),
        Some(out) => {
            manifest.output(out, text.as_bytes())?;
            if let Some(points) = &built.points {
                let path = a.points.clone().unwrap_or_else(|| {
                    let mut s = out.as_os_str().to_owned();
                    s.push(".points.csv");
                    PathBuf::from(s)
                });
                manifest.output(&path, &io::points_csv(points)?)?;
            }
            eprintln!("wrote {} (n {}, m {})", out.display(), built.graph.n(), built.graph.m());
        }
    }
    if let Some(p) = &mpath {
        manifest.save(p)?;
    }
    Ok(Outcome::Ok)
}

fn load_connected(manifest: &mut RunManifest, path: &Path) -> Result<Graph> {
    let text = manifest.input(path)?;
    let g = io::parse_graph(&text, path)?;
    g.require_connected()?;
    Ok(g)
}

fn basis(a: BasisArgs) -> Result<Outcome> {
    let config = serde_json::json!({"tree": a.tree, "root": a.root});
    let mut manifest = RunManifest::new("basis", config, a.seed);
    let mpath = manifest_path(&a.out);
    manifest.save(&mpath)?;
    let g = load_connected(&mut manifest, &a.graph)?;
    let tree = match a.tree {
        TreeKind::Ust => {
            let seed = a.seed.ok_or_else(|| usage("--seed is required with --tree ust"))?;
            sample_ust(&g, &mut ChaCha8Rng::seed_from_u64(seed))?
        }
        TreeKind::Bfs => bfs_spanning_tree(&g, a.root)?,
        TreeKind::File => {
            let path = a.tree_file.as_ref().ok_or_else(|| usage("--tree-file is required with --tree file"))?;
            let text = manifest.input(path)?;
            io::parse_tree(&text, path, &g)?
        }
    };
    let basis = build_basis(&tree);
    manifest.output(&a.out, &io::basis_csv(&basis)?)?;
    if let Some(path) = &a.tree_out {
        manifest.output(path, io::tree_file(&tree, &g).as_bytes())?;
    }
    manifest.save(&mpath)?;

    let residual = basis.gram_residual();
    let activations = basis.edge_activations(&tree)?;
    let max_act = activations.iter().copied().max().unwrap_or(0);
    let bound = activation_bound(tree.max_degree(), g.n());
    let ok = residual < 1e-10 && max_act <= bound;
    println!("elements: {}", basis.len());
    println!("tree max degree: {}", tree.max_degree());
    println!("orthonormality residual: {residual:e}");
    println!("max edge activation: {max_act} (bound {bound})");
    println!("{}", if ok { "pass" } else { "FAIL" });
    Ok(if ok { Outcome::Ok } else { Outcome::Failed })
}

fn resistance(a: ResistanceArgs) -> Result<Outcome> {
    let config = serde_json::json!({"validate_foster": a.validate_foster, "validate_mtt": a.validate_mtt});
    let mut manifest = RunManifest::new("resistance", config, a.seed);
    let mpath = manifest_path(&a.out);
    manifest.save(&mpath)?;
    let g = load_connected(&mut manifest, &a.graph)?;
    let profile = ResistanceProfile::new(&g)?;
    manifest.output(&a.out, &io::resistance_csv(&profile)?)?;
    manifest.save(&mpath)?;

    let mut ok = true;
    if a.validate_foster {
        let sum = profile.total();
        let pass = (sum - (g.n() - 1) as f64).abs() < 1e-8;
        println!("resistance sum {sum:.6} (n - 1 = {}): {}", g.n() - 1, verdict(pass));
        ok &= pass;
    }
    if let Some(samples) = a.validate_mtt {
        let seed = a.seed.ok_or_else(|| usage("--seed is required with --validate-mtt"))?;
        if samples == 0 {
            return Err(usage("--validate-mtt needs at least one sample"));
        }
        let checks = check_inclusion_probabilities(&g, &profile, samples, &mut ChaCha8Rng::seed_from_u64(seed))?;
        let within = checks.iter().filter(|c| c.z.abs() <= 3.0).count();
        for c in checks.iter().take(20) {
            println!(
                "edge ({}, {}): r_e {:.6}, frequency {:.6}, z {:+.2}",
                c.edge.0, c.edge.1, c.resistance, c.frequency, c.z
            );
        }
        if checks.len() > 20 {
            println!("... {} more edges", checks.len() - 20);
        }
        let pass = within as f64 >= 0.99 * checks.len() as f64;
        println!("{within}/{} edges within 3 standard errors: {}", checks.len(), verdict(pass));
        ok &= pass;
    }
    Ok(if ok { Outcome::Ok } else { Outcome::Failed })
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "pass"
    } else {
        "FAIL"
    }
}

fn run_experiment(a: ExperimentArgs) -> Result<Outcome> {
    let mut inputs = Vec::new();
    let (mut config, recorded) = if let Some(path) = &a.source.config {
        let text = io::read_file(path)?;
        inputs.push(FileDigest::of(path, text.as_bytes()));
        (ExperimentConfig::from_toml(&text)?, None)
    } else if let Some(name) = &a.source.preset {
        let cfg = ExperimentConfig::preset(name)
            .ok_or_else(|| usage(format!("unknown preset {name:?}; try one of {:?}", stwave::config::PRESETS)))?;
        (cfg, None)
    } else {
        let path = a.source.manifest.as_ref().expect("clap enforces one source");
        let m = RunManifest::load(path)?;
        if m.command != "experiment" {
            return Err(usage(format!("{} records a `{}` run", path.display(), m.command)));
        }
        let cfg: ExperimentConfig = serde_json::from_value(m.config.clone()).map_err(|e| usage(e.to_string()))?;
        (cfg, Some(m.outputs))
    };
    if a.seed.is_some() {
        config.seed = a.seed;
    }
    let seed = config.seed.ok_or_else(|| usage("a master seed is required (--seed or `seed` in the config)"))?;
    config.validate()?;

    let mut manifest = RunManifest::new("experiment", serde_json::to_value(&config).unwrap(), Some(seed));
    manifest.inputs = inputs;
    let mpath = a.out.join("manifest.json");
    manifest.save(&mpath)?;

    let out = experiment::run(&config, seed)?;
    for (name, bytes) in out.tables()? {
        io::write_file(&a.out.join(name), &bytes)?;
        manifest.outputs.push(FileDigest::of(Path::new(name), &bytes));
    }
    io::write_file(&a.out.join("schema.txt"), SCHEMA.as_bytes())?;
    manifest.save(&mpath)?;
    print!("{}", out.summary());

    if let Some(expected) = recorded {
        let same = expected == manifest.outputs;
        println!("replay {}", if same { "matches the recorded outputs" } else { "DIFFERS from the recorded outputs" });
        if !same {
            return Ok(Outcome::Failed);
        }
    }
    Ok(Outcome::Ok)
}

fn run_validate(a: ValidateArgs) -> Result<Outcome> {
    let extra = match &a.graph {
        Some(path) => Some((path.display().to_string(), io::read_graph(path)?)),
        None => None,
    };
    let checks = validate::suite(a.seed, extra.as_ref().map(|(l, g)| (l.as_str(), g)))?;
    for c in &checks {
        println!("{c}");
    }
    let failed = checks.iter().filter(|c| !c.pass).count();
    println!("{} checks, {failed} failed", checks.len());
    Ok(if failed == 0 { Outcome::Ok } else { Outcome::Failed })
}
