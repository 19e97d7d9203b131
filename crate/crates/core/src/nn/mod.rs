//! Dense numeric kernel: a two-layer LSTM with a softmax readout over count
//! bins, cross-entropy loss, exact gradients via backpropagation through
//! time, and an Adam optimizer step.
//!
//! The kernel is a set of pure functions over explicit parameter and cache
//! structs. No hidden state, no entropy sources: identical inputs give
//! bit-identical outputs.

mod backward;
mod bins;
mod forward;
mod gradcheck;
mod loss;
mod optimizer;
mod params;

pub use backward::backward;
pub use bins::{bin_index, bin_representatives, expected_count, BinningConfig};
pub use forward::{
    lstm_cell_forward, sigmoid, sigmoid_scalar, softmax, stacked_forward, CellStepCache,
    ForwardCache, LstmState, StackStepCache,
};
pub use gradcheck::{grad_check, max_rel_error_vs_fd};
pub use loss::{log_sum_exp, loss};
pub use optimizer::{optimizer_step, AdamHyper, AdamState};
pub use params::{GradientSet, LstmCellParams, ReadoutParams, StackedModelParams};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum NnError {
    #[error("dimension mismatch in {tensor}: expected {expected}, got {got}")]
    DimMismatch { tensor: &'static str, expected: usize, got: usize },
    #[error("input sequence is empty")]
    EmptySequence,
    #[error("mask selects no supervised steps")]
    EmptyMask,
    #[error("target bin {target} out of range for {num_bins} bins at step {step}")]
    TargetOutOfRange { step: usize, target: usize, num_bins: usize },
    #[error("forward cache does not match model: {0}")]
    CacheMismatch(String),
    #[error("non-finite gradient entries at optimizer step {step}")]
    NonFiniteGradient { step: u64 },
    #[error("invalid model: {0}")]
    InvalidModel(String),
}
