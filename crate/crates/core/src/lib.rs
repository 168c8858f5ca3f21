//! Behaviour-gated telemetry for bio-loggers.
//!
//! The pipeline runs from labelled 50 Hz IMU bursts ([`datamodel`]) through
//! per-second features ([`features`]) to depth-bounded decision trees
//! ([`cart`]), which are scored and ranked over feature subsets
//! ([`evaluation`]) and emitted as freestanding C headers ([`codegen`]).
//! [`energy`] prices the transmission strategies the classifier enables.

pub mod cart;
pub mod codegen;
pub mod datamodel;
pub mod energy;
pub mod error;
pub mod evaluation;
pub mod features;

pub use error::{Error, Result};
