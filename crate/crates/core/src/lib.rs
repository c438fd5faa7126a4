//! Wavelet coherence co-movement analysis for pairs of financial time series.

// `!(x > y)` is used on purpose so NaN falls into the rejecting branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod coherence;
pub mod comovement;
pub mod cwt;
pub mod dcc;
pub mod error;
pub mod matrix;
pub mod metadata;
pub mod render;
pub mod significance;
pub mod timeseries;

pub use error::{Error, Result};
