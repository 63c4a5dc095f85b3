//! Orthonormal Haar-style wavelet bases over a spanning tree.
//!
//! The tree is split at a balancing vertex, the pieces are treated as a chain
//! and given a Haar system, and each piece is split again until only pairs
//! and singletons remain. Every wavelet takes two values: one on a group
//! `C1` and one on a disjoint group `C2`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Result};
use crate::graph::Signal;
use crate::tree::{find_balance_in, BalanceScratch, SpanningTree};

/// Coefficients with magnitude at or below this count as zero.
pub const COEFFICIENT_TOLERANCE: f64 = 1e-9;

/// `ceil(log2(x))` for `x >= 1`; zero for `x <= 1`.
pub fn ceil_log2(x: usize) -> usize {
    if x <= 1 {
        0
    } else {
        (usize::BITS - (x - 1).leading_zeros()) as usize
    }
}

/// `ceil(log2 d) * ceil(log2 n)`: the most wavelets any tree edge can be
/// activated by, for a tree of max degree `d` on `n` vertices.
///
/// A two-vertex tree has `d = 1` but still needs one wavelet across its edge,
/// so `d` is clamped to at least 2.
pub fn activation_bound(max_degree: usize, n: usize) -> usize {
    ceil_log2(max_degree.max(2)) * ceil_log2(n)
}

/// One basis vector, piecewise constant on two vertex groups.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletElement {
    /// `C1` (sorted) followed by `C2` (sorted).
    vertices: Vec<usize>,
    split: usize,
    first_value: f64,
    second_value: f64,
    /// Recursion depth of the subtree that produced this element.
    pub depth: usize,
    /// Id of the producing subtree; 0 is the whole tree.
    pub subtree: usize,
}

impl WaveletElement {
    /// The unit-norm Haar element `sqrt(|C1||C2|/(|C1|+|C2|)) (1_C1/|C1| - 1_C2/|C2|)`.
    fn haar(mut first: Vec<usize>, mut second: Vec<usize>, depth: usize, subtree: usize) -> Self {
        first.sort_unstable();
        second.sort_unstable();
        let a = first.len() as f64;
        let b = second.len() as f64;
        let scale = libm::sqrt(a * b / (a + b));
        let split = first.len();
        first.extend(second);
        WaveletElement {
            vertices: first,
            split,
            first_value: scale / a,
            second_value: -scale / b,
            depth,
            subtree,
        }
    }

    fn constant(n: usize) -> Self {
        WaveletElement {
            vertices: (0..n).collect(),
            split: n,
            first_value: 1.0 / libm::sqrt(n as f64),
            second_value: 0.0,
            depth: 0,
            subtree: 0,
        }
    }

    pub fn first_group(&self) -> &[usize] {
        &self.vertices[..self.split]
    }

    pub fn second_group(&self) -> &[usize] {
        &self.vertices[self.split..]
    }

    /// Values taken on the first and second group.
    pub fn levels(&self) -> (f64, f64) {
        (self.first_value, self.second_value)
    }

    /// All support vertices (first group, then second group).
    pub fn support(&self) -> &[usize] {
        &self.vertices
    }

    /// `(vertex, value)` over the support.
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (a, b) = (self.first_value, self.second_value);
        self.vertices
            .iter()
            .enumerate()
            .map(move |(i, &v)| (v, if i < self.split { a } else { b }))
    }

    pub fn dot(&self, y: &[f64]) -> f64 {
        let first: f64 = self.first_group().iter().map(|&v| y[v]).sum();
        let second: f64 = self.second_group().iter().map(|&v| y[v]).sum();
        first * self.first_value + second * self.second_value
    }

    pub fn to_dense(&self, n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n];
        for (v, value) in self.iter() {
            out[v] = value;
        }
        out
    }

    /// True for the normalized constant vector.
    pub fn is_constant(&self) -> bool {
        self.second_group().is_empty()
    }
}

/// Builds the Haar system over an ordered chain of disjoint vertex groups.
///
/// The chain is halved with the first `ceil(p/2)` groups on the positive
/// side, and each half is treated the same way, so `p` groups yield `p - 1`
/// elements in preorder.
pub fn form_wavelets(components: &[Vec<usize>]) -> Result<Vec<WaveletElement>> {
    if components.iter().any(Vec::is_empty) {
        return Err(invalid!("components must be nonempty"));
    }
    let max_vertex = components.iter().flatten().copied().max().unwrap_or(0);
    let mut seen = vec![false; max_vertex + 1];
    for &v in components.iter().flatten() {
        if core::mem::replace(&mut seen[v], true) {
            return Err(invalid!("vertex {v} appears in two components"));
        }
    }
    let refs: Vec<&[usize]> = components.iter().map(Vec::as_slice).collect();
    let mut out = Vec::with_capacity(components.len().saturating_sub(1));
    haar_chain(&refs, 0, 0, &mut out);
    Ok(out)
}

fn haar_chain(chain: &[&[usize]], depth: usize, subtree: usize, out: &mut Vec<WaveletElement>) {
    if chain.len() < 2 {
        return;
    }
    let half = chain.len().div_ceil(2);
    let (left, right) = chain.split_at(half);
    out.push(WaveletElement::haar(
        left.concat(),
        right.concat(),
        depth,
        subtree,
    ));
    haar_chain(left, depth, subtree, out);
    haar_chain(right, depth, subtree, out);
}

/// A complete orthonormal basis of `R^V`: the normalized constant first,
/// then the tree wavelets in depth-first construction order.
#[derive(Debug, Clone)]
pub struct WaveletBasis {
    n: usize,
    elements: Vec<WaveletElement>,
    tree_fingerprint: u64,
}

impl WaveletBasis {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn elements(&self) -> &[WaveletElement] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Fingerprint of the tree this basis was built from.
    pub fn tree_fingerprint(&self) -> u64 {
        self.tree_fingerprint
    }

    fn check_len(&self, y: &Signal) -> Result<()> {
        if y.len() != self.n {
            return Err(invalid!(
                "signal has length {} but basis spans {} vertices",
                y.len(),
                self.n
            ));
        }
        Ok(())
    }

    /// Coefficients `By`: entry `i` is `<b_i, y>`.
    pub fn apply(&self, y: &Signal) -> Result<Vec<f64>> {
        self.check_len(y)?;
        Ok(self.elements.iter().map(|b| b.dot(y.values())).collect())
    }

    /// Adjoint map `B^T c`, which inverts [`apply`](Self::apply).
    pub fn synthesize(&self, coefficients: &[f64]) -> Result<Signal> {
        if coefficients.len() != self.elements.len() {
            return Err(invalid!(
                "{} coefficients for a basis of {} elements",
                coefficients.len(),
                self.elements.len()
            ));
        }
        let mut out = vec![0.0; self.n];
        for (b, &c) in self.elements.iter().zip(coefficients) {
            if c != 0.0 {
                for (v, value) in b.iter() {
                    out[v] += c * value;
                }
            }
        }
        Ok(Signal::new(out))
    }

    /// `||Bx||_0` under [`COEFFICIENT_TOLERANCE`].
    pub fn sparsity(&self, x: &Signal) -> Result<usize> {
        Ok(self
            .apply(x)?
            .iter()
            .filter(|c| libm::fabs(**c) > COEFFICIENT_TOLERANCE)
            .count())
    }

    /// `max_ij |<b_i, b_j> - [i == j]|`.
    pub fn gram_residual(&self) -> f64 {
        let mut dense = vec![0.0; self.n];
        let mut worst: f64 = 0.0;
        for (i, bi) in self.elements.iter().enumerate() {
            for (v, value) in bi.iter() {
                dense[v] = value;
            }
            for (j, bj) in self.elements.iter().enumerate().skip(i) {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max(libm::fabs(bj.dot(&dense) - target));
            }
            for &v in bi.support() {
                dense[v] = 0.0;
            }
        }
        worst
    }

    /// Per tree edge (in the tree's canonical order), the number of wavelets
    /// that activate it.
    ///
    /// A wavelet activates edge `e` when its support has vertices on both
    /// sides of `e`, i.e. `e` lies in the smallest subtree spanning the
    /// support. For a zero-sum element, `<b, x> != 0` forces `x` to vary on
    /// the support, hence to cut some activated edge; this is what bounds
    /// `||Bx||_0` by the activation counts over the cut. The constant element
    /// has zero tree gradient and activates nothing.
    pub fn edge_activations(&self, tree: &SpanningTree) -> Result<Vec<usize>> {
        if tree.n() != self.n || tree.fingerprint() != self.tree_fingerprint {
            return Err(invalid!("basis was not built from this tree"));
        }
        let n = self.n;
        let mut counts = vec![0usize; tree.edges().len()];
        if n < 2 {
            return Ok(counts);
        }
        // Root at 0; `edge_of[c]` is the index of the edge from c to its parent.
        let mut parent = vec![usize::MAX; n];
        let mut order = Vec::with_capacity(n);
        let mut stack = vec![0];
        parent[0] = 0;
        while let Some(v) = stack.pop() {
            order.push(v);
            for &w in tree.neighbors(v) {
                if parent[w] == usize::MAX {
                    parent[w] = v;
                    stack.push(w);
                }
            }
        }
        let edge_of: Vec<usize> = (0..n)
            .map(|c| {
                if c == 0 {
                    usize::MAX
                } else {
                    let key = (c.min(parent[c]), c.max(parent[c]));
                    tree.edges().binary_search(&key).unwrap()
                }
            })
            .collect();
        let mut inside = vec![0usize; n];
        for b in self.elements.iter().filter(|b| !b.is_constant()) {
            for &v in b.support() {
                inside[v] = 1;
            }
            let total = b.support().len();
            for &c in order.iter().rev().filter(|&&c| c != 0) {
                let below = inside[c];
                if below > 0 && below < total {
                    counts[edge_of[c]] += 1;
                }
                inside[parent[c]] += below;
            }
            inside.iter_mut().for_each(|x| *x = 0);
        }
        Ok(counts)
    }
}

/// Builds the spanning-tree wavelet basis of `tree`.
pub fn build_basis(tree: &SpanningTree) -> WaveletBasis {
    let n = tree.n();
    let mut builder = Builder {
        tree,
        owner: vec![0; n],
        next_id: 1,
        scratch: BalanceScratch::new(n),
        elements: Vec::with_capacity(n),
    };
    builder.elements.push(WaveletElement::constant(n));
    builder.split((0..n).collect(), 0, 0);
    debug_assert_eq!(builder.elements.len(), n);
    WaveletBasis {
        n,
        elements: builder.elements,
        tree_fingerprint: tree.fingerprint(),
    }
}

struct Builder<'a> {
    tree: &'a SpanningTree,
    /// Id of the subtree each vertex currently belongs to.
    owner: Vec<usize>,
    next_id: usize,
    scratch: BalanceScratch,
    elements: Vec<WaveletElement>,
}

const DETACHED: usize = usize::MAX;

impl Builder<'_> {
    /// Emits the wavelets of subtree `id` (sorted `vertices`) and recurses.
    fn split(&mut self, vertices: Vec<usize>, id: usize, depth: usize) {
        match vertices.len() {
            0 | 1 => return,
            2 => {
                self.elements.push(WaveletElement::haar(
                    vec![vertices[0]],
                    vec![vertices[1]],
                    depth,
                    id,
                ));
                return;
            }
            _ => {}
        }
        let tree = self.tree;
        let adjacency = tree.adjacency();
        let owner = &self.owner;
        let center = find_balance_in(adjacency, |w| owner[w] == id, vertices[0], &mut self.scratch).vertex;

        // Pieces of the subtree with the center removed, each relabeled.
        self.owner[center] = DETACHED;
        let mut pieces: Vec<(usize, Vec<usize>)> = Vec::new();
        for &start in &adjacency[center] {
            if self.owner[start] != id {
                continue;
            }
            let piece_id = self.next_id;
            self.next_id += 1;
            self.owner[start] = piece_id;
            let mut piece = vec![start];
            let mut cursor = 0;
            while cursor < piece.len() {
                let v = piece[cursor];
                cursor += 1;
                for &w in &adjacency[v] {
                    if self.owner[w] == id {
                        self.owner[w] = piece_id;
                        piece.push(w);
                    }
                }
            }
            piece.sort_unstable();
            pieces.push((piece_id, piece));
        }
        debug_assert!(pieces.len() >= 2, "a centroid of 3+ vertices has degree >= 2");

        // The center joins the smallest piece; ties go to the piece with the
        // smallest vertex.
        pieces.sort_unstable_by_key(|(_, piece)| piece[0]);
        let smallest = (0..pieces.len())
            .min_by_key(|&i| pieces[i].1.len())
            .unwrap();
        let (smallest_id, piece) = &mut pieces[smallest];
        let at = piece.binary_search(&center).unwrap_err();
        piece.insert(at, center);
        self.owner[center] = *smallest_id;
        pieces.sort_unstable_by_key(|(_, piece)| piece[0]);

        let chain: Vec<&[usize]> = pieces.iter().map(|(_, p)| p.as_slice()).collect();
        haar_chain(&chain, depth, id, &mut self.elements);

        for (piece_id, piece) in pieces {
            self.split(piece, piece_id, depth + 1);
        }
    }
}
