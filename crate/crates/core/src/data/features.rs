use serde::{Deserialize, Serialize};

use crate::data::cohort::CitationSequence;
use crate::data::DataError;

/// Which per-year signals enter the model input. The resulting feature
/// dimension is the number of enabled flags, in the fixed order
/// new-citations, cumulative, age.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FeatureConfig {
    /// log(1 + new citations this year)
    pub new_citations: bool,
    /// log(1 + citations so far)
    pub cumulative: bool,
    /// years since publication, normalized by the training window
    pub age: bool,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig { new_citations: true, cumulative: true, age: true }
    }
}

impl FeatureConfig {
    pub fn dim(&self) -> usize {
        self.new_citations as usize + self.cumulative as usize + self.age as usize
    }
}

/// Feature vector at year offset `t` of a citation sequence.
pub fn featurize(
    seq: &CitationSequence,
    t: usize,
    train_years: usize,
    config: &FeatureConfig,
) -> Result<Vec<f64>, DataError> {
    if t >= seq.len() {
        return Err(DataError::OffsetOutOfRange { t, len: seq.len() });
    }
    Ok(featurize_values(seq.yearly_new[t] as f64, seq.cumulative[t] as f64, t as f64, train_years, config))
}

/// The same featurization from raw values, used at inference when the model
/// feeds its own predictions back as the next year's input.
pub fn featurize_values(
    new_citations: f64,
    cumulative: f64,
    t: f64,
    train_years: usize,
    config: &FeatureConfig,
) -> Vec<f64> {
    let mut out = Vec::with_capacity(config.dim());
    if config.new_citations {
        out.push((1.0 + new_citations.max(0.0)).ln());
    }
    if config.cumulative {
        out.push((1.0 + cumulative.max(0.0)).ln());
    }
    if config.age {
        out.push(t / train_years as f64);
    }
    out
}
