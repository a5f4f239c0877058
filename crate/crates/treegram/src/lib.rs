//! Treebank grammar training and context-aware parsing: file formats,
//! cross-validation harness and the `treegram` command-line tool.
//!
//! The algorithms live in `treegram-core` and are re-exported here module by
//! module; this crate adds everything that needs the standard library.

pub mod eval;
pub mod formats;

pub use treegram_core::{grammar, index, parser, rng, sexpr, transform, tree};
