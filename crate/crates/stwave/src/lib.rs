//! File formats, experiment harness and command-line support for
//! spanning-tree wavelet detection. The algorithms live in `stwave-core`.

pub mod config;
pub mod error;
pub mod experiment;
pub mod family;
pub mod io;
pub mod manifest;
pub mod validate;

pub use error::{Error, Result};
