use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn stwave(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stwave"))
        .args(args)
        .env_remove("STWAVE_THREADS")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn gen_families() {
    let dir = tempfile::tempdir().unwrap();
    let torus = dir.path().join("torus.txt");
    let o = stwave(&["gen", "torus", "--side", "16", "--dims", "2", "--out", p(&torus)]);
    assert_eq!(code(&o), 0, "{}", text(&o.stderr));
    let body = fs::read_to_string(&torus).unwrap();
    assert!(body.starts_with("256 512\n"));
    assert!(dir.path().join("torus.txt.manifest.json").exists());

    let knn = dir.path().join("knn.txt");
    let o = stwave(&["gen", "knn", "--n", "500", "--k", "8", "--dim", "2", "--seed", "7", "--out", p(&knn)]);
    assert_eq!(code(&o), 0);
    let points = fs::read_to_string(dir.path().join("knn.txt.points.csv")).unwrap();
    assert_eq!(points.lines().count(), 501);
    assert!(points.starts_with("vertex,x0,x1\n"));

    let o = stwave(&["gen", "complete", "--n", "5"]);
    assert_eq!(code(&o), 0);
    assert_eq!(text(&o.stdout).lines().next(), Some("5 10"));
}

#[test]
fn gen_usage_errors() {
    assert_eq!(code(&stwave(&["gen", "torus", "--side", "2"])), 2);
    assert_eq!(code(&stwave(&["gen", "knn", "--n", "50", "--k", "4"])), 2);
    assert_eq!(code(&stwave(&["gen", "epsilon", "--n", "50", "--seed", "1"])), 2);
    assert_eq!(code(&stwave(&["gen", "star", "--n", "5"])), 2);
    assert_eq!(code(&stwave(&["frobnicate"])), 2);
}

#[test]
fn basis_command() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("t.txt");
    stwave(&["gen", "torus", "--side", "4", "--out", p(&g)]);
    let out = dir.path().join("basis.csv");
    let tree = dir.path().join("tree.txt");
    let o = stwave(&["basis", p(&g), "--tree", "ust", "--seed", "1", "--out", p(&out), "--tree-out", p(&tree)]);
    assert_eq!(code(&o), 0, "{}", text(&o.stderr));
    let stdout = text(&o.stdout);
    assert!(stdout.contains("max edge activation"), "{stdout}");
    assert!(stdout.trim_end().ends_with("pass"));
    let first = fs::read(&out).unwrap();
    assert!(fs::read_to_string(&tree).unwrap().starts_with("# tree-of: "));

    // The saved tree reproduces the same basis.
    let again = dir.path().join("again.csv");
    let o = stwave(&["basis", p(&g), "--tree", "file", "--tree-file", p(&tree), "--out", p(&again)]);
    assert_eq!(code(&o), 0, "{}", text(&o.stderr));
    assert_eq!(fs::read(&again).unwrap(), first);

    assert_eq!(code(&stwave(&["basis", p(&g), "--tree", "ust", "--out", p(&out)])), 2);
    let o = stwave(&["basis", p(&g), "--tree", "bfs", "--root", "3", "--out", p(&out)]);
    assert_eq!(code(&o), 0);
}

#[test]
fn basis_of_two_vertices_and_disconnected_input() {
    let dir = tempfile::tempdir().unwrap();
    let pair = dir.path().join("pair.txt");
    fs::write(&pair, "2 1\n0 1\n").unwrap();
    let out = dir.path().join("b.csv");
    let o = stwave(&["basis", p(&pair), "--tree", "bfs", "--out", p(&out)]);
    assert_eq!(code(&o), 0);
    let rows: Vec<String> = fs::read_to_string(&out).unwrap().lines().skip(1).map(str::to_owned).collect();
    let elements: std::collections::BTreeSet<_> = rows.iter().map(|r| r.split(',').next().unwrap().to_owned()).collect();
    assert_eq!(elements.len(), 2);

    let split = dir.path().join("split.txt");
    fs::write(&split, "5 3\n0 1\n1 2\n3 4\n").unwrap();
    let o = stwave(&["basis", p(&split), "--tree", "bfs", "--out", p(&out)]);
    assert_eq!(code(&o), 2);
    assert!(text(&o.stderr).contains("[3, 2]"), "{}", text(&o.stderr));

    let broken = dir.path().join("broken.txt");
    fs::write(&broken, "3 2\n0 1\n").unwrap();
    let o = stwave(&["basis", p(&broken), "--tree", "bfs", "--out", p(&out)]);
    assert_eq!(code(&o), 2);
}

#[test]
fn resistance_command() {
    let dir = tempfile::tempdir().unwrap();
    let k5 = dir.path().join("k5.txt");
    stwave(&["gen", "complete", "--n", "5", "--out", p(&k5)]);
    let out = dir.path().join("r.csv");
    let o = stwave(&["resistance", p(&k5), "--out", p(&out), "--validate-foster"]);
    assert_eq!(code(&o), 0);
    assert!(text(&o.stdout).contains("resistance sum 4.000000"), "{}", text(&o.stdout));
    let csv = fs::read_to_string(&out).unwrap();
    assert_eq!(csv.lines().next(), Some("u,v,r_e"));
    assert!(csv.lines().skip(1).all(|l| (l.rsplit(',').next().unwrap().parse::<f64>().unwrap() - 0.4).abs() < 1e-12));

    let tri = dir.path().join("tri.txt");
    fs::write(&tri, "3 3\n0 1\n1 2\n0 2\n").unwrap();
    let o = stwave(&["resistance", p(&tri), "--out", p(&out), "--validate-mtt", "10000", "--seed", "3"]);
    assert_eq!(code(&o), 0, "{}", text(&o.stdout));
    assert!(text(&o.stdout).contains("3/3 edges within 3 standard errors: pass"));
    assert_eq!(code(&stwave(&["resistance", p(&tri), "--out", p(&out), "--validate-mtt", "100"])), 2);

    let path = dir.path().join("path.txt");
    fs::write(&path, "4 3\n0 1\n1 2\n2 3\n").unwrap();
    assert_eq!(code(&stwave(&["resistance", p(&path), "--out", p(&out)])), 0);
    let csv = fs::read_to_string(&out).unwrap();
    assert!(csv.lines().skip(1).all(|l| l.ends_with(",1")), "{csv}");
}

const SMALL: &str = r#"
delta = 0.05

[[sparsity]]
name = "s"
graphs = [{ family = "torus", side = 6, dims = 2 }, { family = "epsilon", n = 60, eps = 0.3, dim = 2 }]
signals = 10
rho_min = { exponent = 0.0, scale = 4.0 }
rho_max = { exponent = 0.5, scale = 2.0 }
signal = "cluster"

[[power]]
name = "p"
graphs = [{ family = "knn", n = 40, k = 5, dim = 2 }]
rho = { exponent = 0.5 }
mu = [0.0, 4.0, 8.0]
trials = 15
tree = "ust"
signal = "cluster"

[[power]]
name = "impossible"
graphs = [{ family = "complete", n = 12 }]
rho = { exponent = 0.0, scale = 3.0 }
mu = [1.0]
trials = 3
tree = "bfs"
signal = "prior"

[[concentration]]
name = "c"
graph = { family = "torus", side = 4, dims = 2 }
edges = 6
samples = 300
slacks = [0.5, 1.0]
"#;

#[test]
fn experiment_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    fs::write(&cfg, SMALL).unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let o = stwave(&["experiment", "--config", p(&cfg), "--seed", "9", "--out", p(&a), "--threads", "1"]);
    assert_eq!(code(&o), 0, "{}", text(&o.stderr));
    let o = stwave(&["--threads", "3", "experiment", "--config", p(&cfg), "--seed", "9", "--out", p(&b)]);
    assert_eq!(code(&o), 0);
    let names = [
        "sparsity.csv",
        "sparsity_fit.csv",
        "power_trials.csv",
        "power.csv",
        "power_mu50.csv",
        "concentration.csv",
        "schema.txt",
        "manifest.json",
    ];
    for name in names {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
    let power = fs::read_to_string(a.join("power.csv")).unwrap();
    assert!(power.lines().any(|l| l.starts_with("impossible,") && l.contains(",infeasible,")));

    // Replaying the manifest reproduces every output.
    let c = dir.path().join("c");
    let o = stwave(&["experiment", "--manifest", p(&a.join("manifest.json")), "--out", p(&c)]);
    assert_eq!(code(&o), 0, "{}", text(&o.stdout));
    assert!(text(&o.stdout).contains("replay matches"));
    // The replayed manifest has no config file input, so only the tables are compared.
    for name in &names[..7] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(c.join(name)).unwrap(), "{name}");
    }

    // A tampered manifest no longer matches.
    let manifest = fs::read_to_string(a.join("manifest.json")).unwrap();
    let tampered = dir.path().join("tampered.json");
    fs::write(&tampered, manifest.replace("\"seed\": 9", "\"seed\": 10")).unwrap();
    let o = stwave(&["experiment", "--manifest", p(&tampered), "--out", p(&dir.path().join("d"))]);
    assert_eq!(code(&o), 1);
}

#[test]
fn experiment_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    fs::write(&cfg, SMALL).unwrap();
    let out = dir.path().join("o");
    // No seed anywhere.
    assert_eq!(code(&stwave(&["experiment", "--config", p(&cfg), "--out", p(&out)])), 2);
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "delta = \"high\"").unwrap();
    assert_eq!(code(&stwave(&["experiment", "--config", p(&bad), "--seed", "1", "--out", p(&out)])), 2);
    assert_eq!(code(&stwave(&["experiment", "--preset", "nope", "--seed", "1", "--out", p(&out)])), 2);
    assert_eq!(
        code(&stwave(&["experiment", "--preset", "paper-fig1", "--config", p(&cfg), "--out", p(&out)])),
        2
    );
    let o = Command::new(env!("CARGO_BIN_EXE_stwave"))
        .args(["experiment", "--config", p(&cfg), "--seed", "1", "--out", p(&out)])
        .env("STWAVE_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
}

#[test]
fn validate_command() {
    let o = stwave(&["validate", "--seed", "5"]);
    assert_eq!(code(&o), 0, "{}", text(&o.stdout));
    assert!(text(&o.stdout).contains("0 failed"));
    assert_eq!(code(&stwave(&["validate"])), 2);

    let dir = tempfile::tempdir().unwrap();
    let split = dir.path().join("split.txt");
    fs::write(&split, "4 2\n0 1\n2 3\n").unwrap();
    assert_eq!(code(&stwave(&["validate", "--seed", "1", "--graph", p(&split)])), 2);
}
