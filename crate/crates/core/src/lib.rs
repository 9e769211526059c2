//! Post-processing, evaluation and data-generation tools for one-dimensional
//! sound event detection.
//!
//! Detection heads emit, per frame, an onset probability, a duration and class
//! logits. This crate turns such frame series into event boxes
//! ([`decode`]), supplies the training targets and loss gradients that
//! produce them ([`loss`]), scores boxes against annotations ([`eval`]),
//! generates overlap-controlled synthetic recordings ([`synth`]) and computes
//! expected overlap statistics ([`stats`]).

// `!(x > 0.0)` style checks are how NaN inputs get rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod decode;
pub mod error;
pub mod eval;
pub mod interval;
pub mod io;
pub mod loss;
pub mod rng;
pub mod stats;
pub mod synth;
pub mod types;

pub use error::{Error, Result};
pub use interval::{count_pairwise_overlaps, iou};
pub use rng::Rng;
pub use types::{ClassVocab, Direction, EventBox, EventSet, FramePredictions};
