//! Multilabel imbalance analysis and rebalancing for molecular drug-effect
//! datasets, plus a hybrid graph/fingerprint network to measure the effect
//! of rebalancing on downstream prediction.

pub mod cooccur;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod metrics;
pub mod net;
pub mod resample;
pub mod synth;

pub use error::{Error, Result};
