use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::cohort::Cohort;
use crate::data::features::featurize;
use crate::data::DataError;

/// Train/validation/test proportions. Train and validation take their floor
/// share of papers; test receives the remainder.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SplitFractions {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        SplitFractions { train: 0.7, validation: 0.1, test: 0.2 }
    }
}

/// One paper prepared for the forecaster.
///
/// `inputs` covers year offsets `0 .. train_years + horizon - 1`: the
/// observed window plus the ground-truth horizon features used for
/// teacher-forced training. The readout after consuming `inputs[t]` is
/// supervised against the cumulative count at offset `t + 1`, for
/// `t >= supervised_from`.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceExample {
    pub paper_id: String,
    pub inputs: Vec<Vec<f64>>,
    /// First supervised step; equals the training window length.
    pub supervised_from: usize,
    /// Cumulative counts at offsets `train_years + 1 ..= train_years + horizon`.
    pub targets: Vec<u64>,
    /// Cumulative count at the end of the observed window.
    pub last_observed: u64,
}

impl SequenceExample {
    /// Steps whose readout is supervised (the horizon steps).
    pub fn mask(&self) -> Vec<bool> {
        (0..self.inputs.len()).map(|t| t >= self.supervised_from).collect()
    }

    /// Inputs available at inference time: offsets `0 ..= train_years`.
    pub fn observed_inputs(&self) -> &[Vec<f64>] {
        &self.inputs[..self.supervised_from + 1]
    }
}

#[derive(Debug, Clone, Default)]
pub struct DataSplit {
    pub train: Vec<SequenceExample>,
    pub validation: Vec<SequenceExample>,
    pub test: Vec<SequenceExample>,
}

impl DataSplit {
    pub fn total(&self) -> usize {
        self.train.len() + self.validation.len() + self.test.len()
    }
}

/// Featurizes every cohort member and partitions papers by a seeded shuffle.
/// The same cohort, fractions, and seed always produce the same partition.
pub fn split(cohort: &Cohort, fractions: &SplitFractions, seed: u64) -> Result<DataSplit, DataError> {
    let sum = fractions.train + fractions.validation + fractions.test;
    if !(fractions.train >= 0.0 && fractions.validation >= 0.0 && fractions.test >= 0.0)
        || sum > 1.0 + 1e-9
    {
        return Err(DataError::BadFractions { sum });
    }

    let steps = cohort.train_years + cohort.horizon;
    let mut examples = Vec::with_capacity(cohort.len());
    for seq in &cohort.sequences {
        if seq.len() < steps + 1 {
            return Err(DataError::SequenceTooShort {
                paper_id: seq.paper_id.clone(),
                needed: steps + 1,
                have: seq.len(),
            });
        }
        let mut inputs = Vec::with_capacity(steps);
        for t in 0..steps {
            inputs.push(featurize(seq, t, cohort.train_years, &cohort.features)?);
        }
        let targets: Vec<u64> = (1..=cohort.horizon)
            .map(|k| seq.cumulative[cohort.train_years + k])
            .collect();
        examples.push(SequenceExample {
            paper_id: seq.paper_id.clone(),
            inputs,
            supervised_from: cohort.train_years,
            targets,
            last_observed: seq.cumulative[cohort.train_years],
        });
    }

    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);

    let n = examples.len();
    let n_train = (n as f64 * fractions.train).floor() as usize;
    let n_val = (n as f64 * fractions.validation).floor() as usize;

    let mut slots: Vec<Option<SequenceExample>> = examples.into_iter().map(Some).collect();
    let take = |slots: &mut Vec<Option<SequenceExample>>, idxs: &[usize]| {
        idxs.iter().map(|&i| slots[i].take().unwrap()).collect::<Vec<_>>()
    };
    Ok(DataSplit {
        train: take(&mut slots, &order[..n_train]),
        validation: take(&mut slots, &order[n_train..n_train + n_val]),
        test: take(&mut slots, &order[n_train + n_val..]),
    })
}
