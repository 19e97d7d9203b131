//! Long-term citation count forecasting.
//!
//! The crate is organized around a small dense numeric kernel (`nn`) that
//! implements a two-layer LSTM with a softmax readout over count bins,
//! trained by exact backpropagation through time. Around it sit:
//!
//! - `data`: citation-graph ingestion, cohort construction, featurization,
//!   and deterministic train/validation/test splits;
//! - `models`: the LSTM forecaster plus linear-regression and regression-tree
//!   baselines behind one prediction interface;
//! - `eval`: MAPE/ACC metrics and report emitters;
//! - `synthgen`: a seeded generator of synthetic citation corpora with known
//!   ground-truth fitness, used as an end-to-end oracle.
//!
//! Everything is 64-bit, seeded, and deterministic: identical inputs and
//! configuration produce bit-identical outputs.

pub mod data;
pub mod eval;
pub mod linalg;
pub mod models;
pub mod nn;
pub mod synthgen;

pub use linalg::Matrix;
