//! Hierarchical decoding of the rotated surface code under circuit-level noise.
//!
//! A small 3D conv-net corrects local error chains across syndrome rounds,
//! the remaining syndrome is sparsified and a global matcher finishes the job.

pub mod codec;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod homology;
pub mod latency;
pub mod matching;
pub mod nn;
pub mod noise;
pub mod persist;
pub mod pipeline;
pub mod rng;
pub mod sparsify;

pub use error::{Error, Result};
