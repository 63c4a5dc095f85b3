//! Spanning-tree wavelet bases for detecting piecewise-constant activations
//! on graphs under Gaussian noise.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the CLI and
//! parallel experiment drivers live in the `stwave` crate.

#![no_std]
// `!(x > 0.0)` style guards are kept because they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod concentration;
pub mod detect;
pub mod error;
pub mod generators;
pub mod graph;
pub mod resistance;
pub mod signal;
pub mod sparsity;
pub mod stats;
pub mod tree;
pub mod wavelet;

pub use detect::{detect, run_trial, threshold, DetectionTest, NoiseModel, TreeSource, TrialContext, TrialRecord};
pub use error::{Error, Result};
pub use graph::{Graph, Signal};
pub use resistance::ResistanceProfile;
pub use stats::ExperimentResult;
pub use tree::{bfs_spanning_tree, sample_ust, SpanningTree};
pub use wavelet::{build_basis, form_wavelets, WaveletBasis, WaveletElement};
