//! Citation data pipeline: raw paper records in, per-paper citation
//! sequences, experiment cohorts, feature vectors, and deterministic splits
//! out.

mod cohort;
mod features;
mod ingest;
mod records;
mod split;

pub use cohort::{filter_cohort, CitationSequence, Cohort, CohortConfig};
pub use features::{featurize, featurize_values, FeatureConfig};
pub use ingest::{ingest, AnomalyReport, IngestOutput};
pub use records::{read_records, write_records, PaperRecord};
pub use split::{split, DataSplit, SequenceExample, SplitFractions};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("io error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("parse error at line {line}: {source}")]
    Parse { line: usize, source: serde_json::Error },
    #[error("duplicate paper id {id} with conflicting years {year_a} and {year_b}")]
    ConflictingYears { id: String, year_a: i32, year_b: i32 },
    #[error("invalid record {id}: {reason}")]
    InvalidRecord { id: String, reason: String },
    #[error("year offset {t} out of range for sequence of length {len}")]
    OffsetOutOfRange { t: usize, len: usize },
    #[error("split fractions sum to {sum}, which exceeds 1")]
    BadFractions { sum: f64 },
    #[error("sequence {paper_id} too short: need {needed} years, have {have}")]
    SequenceTooShort { paper_id: String, needed: usize, have: usize },
}
