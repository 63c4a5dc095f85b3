//! Spanning trees: validation, uniform sampling by the Aldous-Broder random
//! walk, deterministic BFS trees, and the balancing-vertex walk used by the
//! wavelet construction.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{invalid, Result};
use crate::graph::{cut_count, Graph, Signal};

const NONE: usize = usize::MAX;

/// A spanning tree of some parent graph, stored as its own edge list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpanningTree {
    n: usize,
    edges: Vec<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
    max_degree: usize,
}

impl SpanningTree {
    /// Validates `edges` as a spanning tree of `g`.
    pub fn from_edges(g: &Graph, edges: &[(usize, usize)]) -> Result<Self> {
        let n = g.n();
        if n == 0 {
            return Err(invalid!("cannot span an empty graph"));
        }
        if edges.len() + 1 != n {
            return Err(invalid!(
                "a spanning tree of {n} vertices has {} edges, got {}",
                n - 1,
                edges.len()
            ));
        }
        let mut canonical = Vec::with_capacity(edges.len());
        for &(u, v) in edges {
            if !g.has_edge(u, v) {
                return Err(invalid!("({u}, {v}) is not an edge of the graph"));
            }
            canonical.push((u.min(v), u.max(v)));
        }
        canonical.sort_unstable();
        if canonical.windows(2).any(|w| w[0] == w[1]) {
            return Err(invalid!("tree edge list contains a duplicate"));
        }
        let tree = Self::from_canonical(n, canonical);
        if !tree.is_connected() {
            return Err(invalid!("edge set is not connected, so it is not a tree"));
        }
        Ok(tree)
    }

    /// The unique spanning tree of a graph that is itself a tree.
    pub fn of_tree_graph(g: &Graph) -> Result<Self> {
        Self::from_edges(g, g.edges())
    }

    fn from_canonical(n: usize, edges: Vec<(usize, usize)>) -> Self {
        let mut adjacency = vec![Vec::new(); n];
        for &(u, v) in &edges {
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        let max_degree = adjacency.iter().map(Vec::len).max().unwrap_or(0);
        SpanningTree {
            n,
            edges,
            adjacency,
            max_degree,
        }
    }

    fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.n];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &w in &self.adjacency[v] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == self.n
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Tree edges as `(min, max)` pairs in lexicographic order.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub(crate) fn adjacency(&self) -> &[Vec<usize>] {
        &self.adjacency
    }

    /// Maximum vertex degree within the tree.
    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    /// Number of tree edges cut by `x`, i.e. `|supp(grad_T x)|`.
    pub fn cut_size(&self, x: &Signal) -> Result<usize> {
        if x.len() != self.n {
            return Err(invalid!(
                "signal has length {} but tree has {} vertices",
                x.len(),
                self.n
            ));
        }
        Ok(cut_count(&self.edges, x.values()))
    }

    /// Stable 64-bit FNV-1a digest of the edge list.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |x: u64| {
            for b in x.to_le_bytes() {
                h ^= u64::from(b);
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        };
        eat(self.n as u64);
        for &(u, v) in &self.edges {
            eat(u as u64);
            eat(v as u64);
        }
        h
    }

    /// The tree viewed as a graph in its own right.
    pub fn to_graph(&self) -> Graph {
        Graph::from_canonical(self.n, self.edges.clone())
    }

    /// Finds a balancing vertex of the subtree induced by `vertices`.
    ///
    /// The walk starts at the smallest vertex in `vertices`.
    pub fn find_balance(&self, vertices: &[usize]) -> Result<Balance> {
        if vertices.is_empty() {
            return Err(invalid!("cannot balance an empty subtree"));
        }
        let mut member = vec![false; self.n];
        for &v in vertices {
            if v >= self.n {
                return Err(invalid!("vertex {v} is outside the tree"));
            }
            if core::mem::replace(&mut member[v], true) {
                return Err(invalid!("vertex {v} listed twice"));
            }
        }
        let start = *vertices.iter().min().unwrap();
        let mut scratch = BalanceScratch::new(self.n);
        let balance = find_balance_in(&self.adjacency, |w| member[w], start, &mut scratch);
        if scratch.order.len() != vertices.len() {
            return Err(invalid!("vertices do not induce a connected subtree"));
        }
        Ok(balance)
    }
}

/// Outcome of the balancing walk.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Balance {
    pub vertex: usize,
    /// Number of moves the walk made before stopping.
    pub moves: usize,
    /// Size of the largest component left after removing `vertex`.
    pub largest_component: usize,
}

pub(crate) struct BalanceScratch {
    parent: Vec<usize>,
    size: Vec<usize>,
    pub(crate) order: Vec<usize>,
    stack: Vec<usize>,
}

impl BalanceScratch {
    pub(crate) fn new(n: usize) -> Self {
        BalanceScratch {
            parent: vec![NONE; n],
            size: vec![0; n],
            order: Vec::with_capacity(n),
            stack: Vec::new(),
        }
    }
}

/// Walks from `start` toward the largest component of `T \ v` until the next
/// step would not shrink that component.
///
/// Subtree sizes rooted at `start` are computed once, so each step costs the
/// degree of the current vertex and the whole walk is linear. The walk only
/// ever moves away from `start`: having arrived at `v` from its parent, the
/// parent-side component is already smaller than the one we left.
pub(crate) fn find_balance_in<F: Fn(usize) -> bool>(
    adjacency: &[Vec<usize>],
    member: F,
    start: usize,
    scratch: &mut BalanceScratch,
) -> Balance {
    let BalanceScratch {
        parent,
        size,
        order,
        stack,
    } = scratch;
    order.clear();
    stack.clear();
    parent[start] = NONE;
    stack.push(start);
    while let Some(v) = stack.pop() {
        order.push(v);
        size[v] = 1;
        for &w in &adjacency[v] {
            if w != parent[v] && member(w) {
                parent[w] = v;
                stack.push(w);
            }
        }
    }
    for &v in order.iter().rev() {
        if parent[v] != NONE {
            size[parent[v]] += size[v];
        }
    }
    let total = order.len();

    // Largest component of T \ v and the neighbor leading into it; ties go to
    // the smaller neighbor index.
    let largest = |v: usize| -> (usize, usize) {
        let mut best = if parent[v] == NONE {
            (0, NONE)
        } else {
            (total - size[v], parent[v])
        };
        for &w in &adjacency[v] {
            if w != parent[v] && member(w) {
                let s = size[w];
                if s > best.0 || (s == best.0 && w < best.1) {
                    best = (s, w);
                }
            }
        }
        best
    };

    let mut v = start;
    let mut moves = 0;
    loop {
        let (objective, toward) = largest(v);
        if toward == NONE || toward == parent[v] {
            return Balance {
                vertex: v,
                moves,
                largest_component: objective,
            };
        }
        let (next_objective, _) = largest(toward);
        if next_objective < objective {
            v = toward;
            moves += 1;
        } else {
            return Balance {
                vertex: v,
                moves,
                largest_component: objective,
            };
        }
    }
}

/// Draws a uniform spanning tree with the Aldous-Broder walk started at
/// vertex 0: each vertex joins the tree through the edge on which the walk
/// first enters it.
pub fn sample_ust<R: Rng + ?Sized>(g: &Graph, rng: &mut R) -> Result<SpanningTree> {
    g.require_connected()?;
    let n = g.n();
    if n == 0 {
        return Err(invalid!("cannot span an empty graph"));
    }
    let mut visited = vec![false; n];
    visited[0] = true;
    let mut remaining = n - 1;
    let mut edges = Vec::with_capacity(n - 1);
    let mut current = 0;
    while remaining > 0 {
        let neighbors = g.neighbors(current);
        let next = neighbors[rng.random_range(0..neighbors.len())];
        if !visited[next] {
            visited[next] = true;
            remaining -= 1;
            edges.push((current.min(next), current.max(next)));
        }
        current = next;
    }
    edges.sort_unstable();
    Ok(SpanningTree::from_canonical(n, edges))
}

/// Breadth-first spanning tree from `root`, visiting neighbors in index order.
pub fn bfs_spanning_tree(g: &Graph, root: usize) -> Result<SpanningTree> {
    let n = g.n();
    if root >= n {
        return Err(invalid!("root {root} is outside 0..{n}"));
    }
    g.require_connected()?;
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([root]);
    seen[root] = true;
    let mut edges = Vec::with_capacity(n.saturating_sub(1));
    while let Some(v) = queue.pop_front() {
        for &w in g.neighbors(v) {
            if !seen[w] {
                seen[w] = true;
                edges.push((v.min(w), v.max(w)));
                queue.push_back(w);
            }
        }
    }
    edges.sort_unstable();
    Ok(SpanningTree::from_canonical(n, edges))
}

/// A uniformly random labeled tree on `n` vertices (Prüfer decoding).
pub fn random_tree<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Graph {
    if n <= 1 {
        return Graph::from_canonical(n, Vec::new());
    }
    if n == 2 {
        return Graph::from_canonical(2, vec![(0, 1)]);
    }
    let code: Vec<usize> = (0..n - 2).map(|_| rng.random_range(0..n)).collect();
    let mut degree = vec![1usize; n];
    for &c in &code {
        degree[c] += 1;
    }
    let mut leaves: alloc::collections::BinaryHeap<core::cmp::Reverse<usize>> = (0..n)
        .filter(|&v| degree[v] == 1)
        .map(core::cmp::Reverse)
        .collect();
    let mut edges = Vec::with_capacity(n - 1);
    for &c in &code {
        let core::cmp::Reverse(leaf) = leaves.pop().unwrap();
        edges.push((leaf.min(c), leaf.max(c)));
        degree[c] -= 1;
        if degree[c] == 1 {
            leaves.push(core::cmp::Reverse(c));
        }
    }
    let core::cmp::Reverse(a) = leaves.pop().unwrap();
    let core::cmp::Reverse(b) = leaves.pop().unwrap();
    edges.push((a.min(b), a.max(b)));
    edges.sort_unstable();
    Graph::from_canonical(n, edges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn path(n: usize) -> Graph {
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        Graph::new(n, &edges).unwrap()
    }

    fn largest_after_removal(t: &SpanningTree, v: usize) -> usize {
        let g = t.to_graph();
        let rest: Vec<_> = g
            .edges()
            .iter()
            .copied()
            .filter(|&(a, b)| a != v && b != v)
            .collect();
        let h = Graph::new(g.n(), &rest).unwrap();
        h.connected_components()
            .iter()
            .filter(|c| c != &&vec![v])
            .map(Vec::len)
            .max()
            .unwrap_or(0)
    }

    #[test]
    fn balance_on_path_is_middle() {
        let t = SpanningTree::of_tree_graph(&path(5)).unwrap();
        let all: Vec<_> = (0..5).collect();
        // Oracle: exhaustive minimizer of the largest remaining component.
        let objectives: Vec<_> = all.iter().map(|&v| largest_after_removal(&t, v)).collect();
        assert_eq!(objectives, vec![4, 3, 2, 3, 4]);
        let b = t.find_balance(&all).unwrap();
        assert_eq!(b.vertex, 2);
        assert_eq!(b.largest_component, 2);
        assert_eq!(b.moves, 2);
    }

    #[test]
    fn balance_on_star_and_singletons() {
        let star = Graph::new(7, &(1..7).map(|i| (0, i)).collect::<Vec<_>>()).unwrap();
        let t = SpanningTree::of_tree_graph(&star).unwrap();
        assert_eq!(t.find_balance(&(0..7).collect::<Vec<_>>()).unwrap().vertex, 0);
        // Starting from a leaf.
        assert_eq!(t.find_balance(&[3, 0, 4]).unwrap().vertex, 0);
        assert_eq!(t.find_balance(&[5]).unwrap().vertex, 5);
        assert!(t.find_balance(&[]).is_err());
        assert!(t.find_balance(&[1, 2]).is_err());
    }

    #[test]
    fn balance_two_vertices_returns_smaller() {
        let t = SpanningTree::of_tree_graph(&path(2)).unwrap();
        assert_eq!(t.find_balance(&[1, 0]).unwrap().vertex, 0);
    }

    #[test]
    fn balance_tie_stops_at_first_centroid() {
        let t = SpanningTree::of_tree_graph(&path(4)).unwrap();
        let b = t.find_balance(&[0, 1, 2, 3]).unwrap();
        assert_eq!((b.vertex, b.largest_component), (1, 2));
    }

    #[test]
    fn tree_validation() {
        let tri = Graph::new(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        assert!(SpanningTree::from_edges(&tri, &[(0, 1), (1, 2)]).is_ok());
        assert!(SpanningTree::from_edges(&tri, &[(0, 1)]).is_err());
        let sq = Graph::new(4, &[(0, 1), (1, 2), (2, 0), (2, 3)]).unwrap();
        // Right edge count, but contains a cycle and misses vertex 3.
        assert!(SpanningTree::from_edges(&sq, &[(0, 1), (1, 2), (0, 2)]).is_err());
        assert!(SpanningTree::from_edges(&sq, &[(0, 1), (1, 2), (1, 3)]).is_err());
    }

    #[test]
    fn bfs_examples() {
        let k4 = crate::generators::complete(4).unwrap();
        assert_eq!(bfs_spanning_tree(&k4, 0).unwrap().edges(), &[(0, 1), (0, 2), (0, 3)]);
        let p = path(6);
        assert_eq!(bfs_spanning_tree(&p, 3).unwrap().edges(), p.edges());
        let c4 = Graph::new(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap();
        assert_eq!(bfs_spanning_tree(&c4, 0).unwrap().edges(), &[(0, 1), (0, 3), (1, 2)]);
        let split = Graph::new(4, &[(0, 1), (2, 3)]).unwrap();
        assert!(matches!(bfs_spanning_tree(&split, 0), Err(Error::Disconnected { .. })));
    }

    #[test]
    fn ust_of_tree_is_tree() {
        let p = path(10);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..10 {
            assert_eq!(sample_ust(&p, &mut rng).unwrap().edges(), p.edges());
        }
        let split = Graph::new(4, &[(0, 1), (2, 3)]).unwrap();
        assert!(sample_ust(&split, &mut rng).is_err());
    }

    #[test]
    fn ust_triangle_is_uniform() {
        // Oracle: C3 has exactly three spanning trees, one per omitted edge.
        let tri = Graph::new(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let draws = 30_000;
        let mut counts = [0usize; 3];
        for _ in 0..draws {
            let t = sample_ust(&tri, &mut rng).unwrap();
            let missing = tri.edges().iter().position(|e| !t.edges().contains(e)).unwrap();
            counts[missing] += 1;
        }
        let p = 1.0 / 3.0;
        let se = libm::sqrt(p * (1.0 - p) / draws as f64);
        for c in counts {
            assert!(libm::fabs(c as f64 / draws as f64 - p) <= 3.0 * se, "{counts:?}");
        }
    }

    #[test]
    fn tree_cut_examples() {
        let t = SpanningTree::of_tree_graph(&path(3)).unwrap();
        assert_eq!(t.cut_size(&Signal::new(vec![5.0, 5.0, 7.0])).unwrap(), 1);
        assert_eq!(t.cut_size(&Signal::constant(3, 1.0)).unwrap(), 0);
        assert!(t.cut_size(&Signal::zeros(2)).is_err());
    }

    #[test]
    fn prufer_trees_are_trees() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 1..40 {
            let g = random_tree(n, &mut rng);
            assert_eq!(g.m(), n.saturating_sub(1));
            assert!(g.is_connected());
        }
    }
}
