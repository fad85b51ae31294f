//! Joint-typicality support recovery for noisy sparse signals.
//!
//! The crate is `no_std` (it needs `alloc`). Everything here is a pure
//! function of its inputs and an explicit seed; IO, configuration and
//! parallel scheduling live in the `jtsupport` harness crate.
//!
//! Layout:
//! - [`linalg`]: Householder QR residuals and numerical rank.
//! - [`ensembles`]: measurement-matrix laws and their empirical checks.
//! - [`signal`]: sparse signals, the noisy channel and the recovery metrics.
//! - [`decoder`]: the δ-typicality test and exhaustive subset decoder.
//! - [`bounds`]: achievability (union) and converse bounds.
//! - [`concentration`]: the V statistic and its tail / moment checks.
//! - [`experiment`]: one Monte Carlo trial and per-point aggregation.
#![no_std]
// `!(x > 0.0)` is the NaN-rejecting form used throughout the validators.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod bounds;
pub mod concentration;
pub mod decoder;
pub mod ensembles;
mod error;
pub mod experiment;
pub mod linalg;
pub mod seed;
pub mod signal;

pub use error::{Error, Result};
