//! Multi-level semantic feature extraction and transmission planning for
//! knowledge-base-assisted zero-shot recognition over a rate-limited link.
//!
//! The crate is `no_std` and needs only `alloc`. Everything here is pure
//! computation; file formats, configuration and the experiment harness live in
//! the `skbmlfx` companion crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod extractor;
pub mod channel;
pub mod data;
pub mod linalg;
pub mod lossmodel;
pub mod planner;
pub mod rng;
pub mod skb;

pub use extractor::{ClassId, ExtractorModel, SemanticPrototypes, TrainingSet};
pub use linalg::{LinalgError, Matrix};
