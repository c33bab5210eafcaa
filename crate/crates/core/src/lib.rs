//! Concentrated margin maximization (CMM) for adaptive-threshold multi-label
//! classification.
//!
//! Each example is scored as a row of `|R| + 1` logits whose first entry is a
//! learned threshold (TH) logit; a relation is predicted when its logit
//! exceeds TH. The crate provides:
//!
//! - [`loss`]: the plain margin loss, the CMM loss with analytic gradients,
//!   an adaptive-thresholding baseline, and a pluggable [`loss::MarginLoss`] trait.
//! - [`gradcheck`]: finite-difference verification of those gradients.
//! - [`encoder`]: a small trainable encoder and an AdamW training loop.
//! - [`synthdata`]: imbalanced synthetic datasets with injected false negatives.
//! - [`eval`]: decoding, micro-F1 / Ign-F1, and plot tables.
//! - [`cli`]: JSON-config experiment commands behind the `cmm` binary.

pub mod cli;
pub mod encoder;
pub mod error;
pub mod eval;
pub mod gradcheck;
pub mod loss;
pub mod schema;
pub mod synthdata;

pub use error::{Error, Result};
