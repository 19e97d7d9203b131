use serde::{Deserialize, Serialize};

use crate::data::features::FeatureConfig;

/// Per-paper citation history anchored at the publication year: new
/// citations per year offset and their running totals.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "SequenceRepr", into = "SequenceRepr")]
pub struct CitationSequence {
    pub paper_id: String,
    pub pub_year: i32,
    pub yearly_new: Vec<u32>,
    /// `cumulative[t]` is the citation count through offset `t`; it is
    /// non-decreasing by construction.
    pub cumulative: Vec<u64>,
}

/// On-disk form: one line of the cohort file. Cumulative counts are derived,
/// not stored.
#[derive(Serialize, Deserialize)]
struct SequenceRepr {
    paper_id: String,
    pub_year: i32,
    yearly_new: Vec<u32>,
}

impl From<SequenceRepr> for CitationSequence {
    fn from(r: SequenceRepr) -> Self {
        CitationSequence::from_yearly(r.paper_id, r.pub_year, r.yearly_new)
    }
}

impl From<CitationSequence> for SequenceRepr {
    fn from(s: CitationSequence) -> Self {
        SequenceRepr { paper_id: s.paper_id, pub_year: s.pub_year, yearly_new: s.yearly_new }
    }
}

impl CitationSequence {
    pub fn from_yearly(paper_id: String, pub_year: i32, yearly_new: Vec<u32>) -> Self {
        let mut cumulative = Vec::with_capacity(yearly_new.len());
        let mut total = 0u64;
        for &n in &yearly_new {
            total += n as u64;
            cumulative.push(total);
        }
        CitationSequence { paper_id, pub_year, yearly_new, cumulative }
    }

    /// Number of observed year offsets (T + 1).
    pub fn len(&self) -> usize {
        self.yearly_new.len()
    }

    pub fn is_empty(&self) -> bool {
        self.yearly_new.is_empty()
    }

    pub fn final_count(&self) -> u64 {
        self.cumulative.last().copied().unwrap_or(0)
    }

    /// Internal consistency: cumulative is the running sum of yearly counts
    /// (and therefore non-decreasing).
    pub fn is_consistent(&self) -> bool {
        if self.cumulative.len() != self.yearly_new.len() {
            return false;
        }
        let mut total = 0u64;
        for (&n, &c) in self.yearly_new.iter().zip(&self.cumulative) {
            total += n as u64;
            if c != total {
                return false;
            }
        }
        true
    }
}

/// Selection rule for the experiment cohort.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CohortConfig {
    /// Citation threshold applied at `cumulative[train_years]`.
    pub min_citations: u64,
    /// Strict comparison (`>`) when true, `>=` otherwise.
    pub strict_threshold: bool,
    /// Observed window length in years.
    pub train_years: usize,
    /// Forecast horizon in years; members must have ground truth this far.
    pub horizon: usize,
}

impl Default for CohortConfig {
    fn default() -> Self {
        CohortConfig { min_citations: 5, strict_threshold: true, train_years: 5, horizon: 5 }
    }
}

/// The filtered paper set used for experiments, plus the protocol parameters
/// it was built with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cohort {
    pub sequences: Vec<CitationSequence>,
    pub train_years: usize,
    pub horizon: usize,
    pub features: FeatureConfig,
}

impl Cohort {
    pub fn len(&self) -> usize {
        self.sequences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }

    pub fn feature_dim(&self) -> usize {
        self.features.dim()
    }
}

/// Keeps papers that cleared the citation threshold within the observed
/// window and have at least `train_years + horizon` years of history, so
/// every member carries full ground truth. Output is sorted by paper id.
///
/// An empty result is a legitimate outcome, not an error.
pub fn filter_cohort(
    sequences: impl IntoIterator<Item = CitationSequence>,
    config: &CohortConfig,
    features: FeatureConfig,
) -> Cohort {
    let needed_len = config.train_years + config.horizon + 1;
    let mut kept: Vec<CitationSequence> = sequences
        .into_iter()
        .filter(|seq| {
            if seq.len() < needed_len {
                return false;
            }
            let early = seq.cumulative[config.train_years];
            if config.strict_threshold {
                early > config.min_citations
            } else {
                early >= config.min_citations
            }
        })
        .collect();
    kept.sort_by(|a, b| a.paper_id.cmp(&b.paper_id));
    Cohort { sequences: kept, train_years: config.train_years, horizon: config.horizon, features }
}
