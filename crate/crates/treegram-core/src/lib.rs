//! Core algorithms for learning probabilistic tree grammars from treebanks
//! and parsing ambiguous token sequences into ranked parse trees.
//!
//! The pipeline is: read trees in s-expression notation ([`sexpr`], [`tree`]),
//! optionally normalize raw higher-order-logic terms into trainable trees
//! ([`transform`]), extract grammar rules of bounded depth with
//! relative-frequency probabilities ([`grammar`]), index the deep rules in a
//! discrimination tree ([`index`]), and run the chart parser with per-cell
//! probability recomputation from those deep rules ([`parser`]).
//!
//! The crate is `no_std` (with `alloc`); file formats, the evaluation harness
//! and the command-line frontend live in the companion `treegram` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod grammar;
pub mod index;
pub mod parser;
pub mod rng;
pub mod sexpr;
pub mod transform;
pub mod tree;
