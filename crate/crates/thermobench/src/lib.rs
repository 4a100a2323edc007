//! From-scratch machine-learning library and benchmark harness for
//! infrared-thermography oral-temperature regression.
//!
//! The crate covers the full pipeline: CSV ingestion with schema-driven
//! column roles, preprocessing (round averaging, standardization,
//! categorical encoding), heuristic feature engineering (polynomial terms,
//! feature replication), feature selection (correlation ranking, exhaustive
//! subset search, sequential backward selection, PCA), eight classical
//! regression families behind one estimator contract, a minimal 1-D CNN
//! engine with Adam, nested cross-validation, and report generation.
//!
//! All fitting is deterministic given explicit seeds; trained models are
//! immutable and safe to share across threads for prediction.

pub mod data;
pub mod error;
pub mod estimators;
pub mod eval;
pub mod nn;
pub mod report;
pub mod selection;
pub mod synth;
pub mod transform;

pub mod bench;

pub use error::{Error, Result};
