//! Text formats: edge lists, tree files, point clouds and CSV dumps.
//!
//! Edge lists start with a header line `n m` followed by `m` lines `u v`
//! (0-based). Lines starting with `#` are comments. Writers emit edges in
//! canonical order; readers accept any order.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use stwave_core::generators::PointCloud;
use stwave_core::resistance::ResistanceProfile;
use stwave_core::{Graph, SpanningTree, WaveletBasis};

use crate::error::{Error, Result};

pub fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Canonical edge-list text without comments.
pub fn edge_list(g: &Graph) -> String {
    let mut out = String::with_capacity(16 + 12 * g.m());
    writeln!(out, "{} {}", g.n(), g.m()).unwrap();
    for &(u, v) in g.edges() {
        writeln!(out, "{u} {v}").unwrap();
    }
    out
}

/// First 16 hex digits of the SHA-256 of [`edge_list`].
pub fn graph_hash(g: &Graph) -> String {
    sha256_hex(edge_list(g).as_bytes())[..16].to_owned()
}

struct Parsed {
    n: usize,
    edges: Vec<(usize, usize)>,
    comments: Vec<String>,
}

fn parse_edge_list(text: &str, path: &Path) -> Result<Parsed> {
    let err = |line: usize, message: String| Error::Parse {
        path: path.to_owned(),
        line,
        message,
    };
    let mut header: Option<(usize, usize)> = None;
    let mut edges = Vec::new();
    let mut comments = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(c) = line.strip_prefix('#') {
            comments.push(c.trim().to_owned());
            continue;
        }
        let mut fields = line.split_whitespace();
        let a = fields.next().unwrap();
        let b = fields
            .next()
            .ok_or_else(|| err(i + 1, format!("expected two integers, got {line:?}")))?;
        if fields.next().is_some() {
            return Err(err(i + 1, format!("expected two integers, got {line:?}")));
        }
        let parse = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| err(i + 1, format!("{s:?} is not a nonnegative integer")))
        };
        let pair = (parse(a)?, parse(b)?);
        if header.is_none() {
            header = Some(pair);
        } else {
            edges.push(pair);
        }
    }
    let (n, m) = header.ok_or_else(|| err(1, "missing `n m` header".into()))?;
    if edges.len() != m {
        return Err(err(0, format!("header promises {m} edges, found {}", edges.len())));
    }
    Ok(Parsed { n, edges, comments })
}

pub fn parse_graph(text: &str, path: &Path) -> Result<Graph> {
    let p = parse_edge_list(text, path)?;
    Ok(Graph::new(p.n, &p.edges)?)
}

pub fn read_graph(path: &Path) -> Result<Graph> {
    parse_graph(&read_file(path)?, path)
}

/// Tree file: an edge list carrying a `# tree-of: <graph-hash>` comment.
pub fn tree_file(tree: &SpanningTree, parent: &Graph) -> String {
    let mut out = format!("# tree-of: {}\n", graph_hash(parent));
    out.push_str(&edge_list(&tree.to_graph()));
    out
}

/// Parses a tree file and checks it spans `parent`. A `tree-of` hash, when
/// present, must match the parent graph.
pub fn parse_tree(text: &str, path: &Path, parent: &Graph) -> Result<SpanningTree> {
    let p = parse_edge_list(text, path)?;
    let expected = graph_hash(parent);
    for c in &p.comments {
        if let Some(h) = c.strip_prefix("tree-of:") {
            if h.trim() != expected {
                return Err(Error::Parse {
                    path: path.to_owned(),
                    line: 0,
                    message: format!("tree belongs to graph {}, not {expected}", h.trim()),
                });
            }
        }
    }
    if p.n != parent.n() {
        return Err(Error::Parse {
            path: path.to_owned(),
            line: 1,
            message: format!("tree has {} vertices, graph has {}", p.n, parent.n()),
        });
    }
    Ok(SpanningTree::from_edges(parent, &p.edges)?)
}

/// CSV `vertex,x0,...,x{dim-1}`.
pub fn points_csv(points: &PointCloud) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["vertex".to_owned()];
    header.extend((0..points.dim()).map(|d| format!("x{d}")));
    w.write_record(&header)?;
    for i in 0..points.len() {
        let mut row = vec![i.to_string()];
        row.extend(points.point(i).iter().map(|c| c.to_string()));
        w.write_record(&row)?;
    }
    w.into_inner().map_err(|e| Error::io("<points>", e.into_error()))
}

pub fn parse_points(text: &str, path: &Path) -> Result<PointCloud> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let dim = r.headers()?.len().saturating_sub(1);
    let mut coords = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let bad = |message: String| Error::Parse {
            path: path.to_owned(),
            line: i + 2,
            message,
        };
        if rec.get(0).and_then(|v| v.parse::<usize>().ok()) != Some(i) {
            return Err(bad("vertices must be listed as 0, 1, 2, ...".into()));
        }
        for field in rec.iter().skip(1) {
            coords.push(field.parse::<f64>().map_err(|_| bad(format!("bad coordinate {field:?}")))?);
        }
    }
    Ok(PointCloud::from_coords(dim, coords)?)
}

/// CSV `element,vertex,value,depth`, one row per support vertex.
pub fn basis_csv(basis: &WaveletBasis) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["element", "vertex", "value", "depth"])?;
    for (i, b) in basis.elements().iter().enumerate() {
        let mut rows: Vec<(usize, f64)> = b.iter().collect();
        rows.sort_unstable_by_key(|r| r.0);
        for (v, value) in rows {
            w.write_record([i.to_string(), v.to_string(), value.to_string(), b.depth.to_string()])?;
        }
    }
    w.into_inner().map_err(|e| Error::io("<basis>", e.into_error()))
}

/// CSV `u,v,r_e` in canonical edge order.
pub fn resistance_csv(profile: &ResistanceProfile) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["u", "v", "r_e"])?;
    for (&(u, v), r) in profile.edges().iter().zip(profile.edge_resistances()) {
        w.write_record([u.to_string(), v.to_string(), r.to_string()])?;
    }
    w.into_inner().map_err(|e| Error::io("<resistance>", e.into_error()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use stwave_core::generators::knn;
    use stwave_core::{build_basis, sample_ust};

    #[test]
    fn edge_list_round_trip_and_comments() {
        let text = "# a triangle\n3 3\n2 1\n\n0 2\n# trailing\n1 0\n";
        let g = parse_graph(text, Path::new("t")).unwrap();
        assert_eq!(g.edges(), &[(0, 1), (0, 2), (1, 2)]);
        assert_eq!(edge_list(&g), "3 3\n0 1\n0 2\n1 2\n");
        assert_eq!(parse_graph(&edge_list(&g), Path::new("t")).unwrap(), g);
    }

    #[test]
    fn edge_list_errors() {
        for bad in ["", "3 2\n0 1\n", "3 1\n0 x\n", "3 1\n0 1 2\n", "3 1\n0 3\n"] {
            assert!(parse_graph(bad, Path::new("bad")).is_err(), "{bad:?}");
        }
    }

    #[test]
    fn tree_file_checks_parent() {
        let g = stwave_core::generators::torus(4, 2).unwrap();
        let t = sample_ust(&g, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let text = tree_file(&t, &g);
        assert!(text.starts_with(&format!("# tree-of: {}", graph_hash(&g))));
        assert_eq!(parse_tree(&text, Path::new("t"), &g).unwrap(), t);
        let other = stwave_core::generators::complete(16).unwrap();
        assert!(parse_tree(&text, Path::new("t"), &other).is_err());
    }

    #[test]
    fn points_round_trip() {
        let g = knn(20, 3, 3, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        let bytes = points_csv(&g.points).unwrap();
        let text = String::from_utf8(bytes).unwrap();
        assert!(text.starts_with("vertex,x0,x1,x2\n"));
        assert_eq!(parse_points(&text, Path::new("p")).unwrap(), g.points);
    }

    #[test]
    fn basis_dump_of_two_vertices() {
        let g = Graph::new(2, &[(0, 1)]).unwrap();
        let t = SpanningTree::of_tree_graph(&g).unwrap();
        let text = String::from_utf8(basis_csv(&build_basis(&t)).unwrap()).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines.len(), 5);
        assert_eq!(lines[0], "element,vertex,value,depth");
        assert!(lines[4].starts_with("1,1,-0.7071067811865"));
    }
}
