use serde::{Deserialize, Serialize};

use crate::nn::NnError;

/// Count-bin layout for the softmax readout. Citation counts are
/// heavy-tailed, so edges are logarithmically spaced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BinningConfig {
    pub num_bins: usize,
    pub min_edge: f64,
    pub max_edge: f64,
}

impl Default for BinningConfig {
    fn default() -> Self {
        BinningConfig { num_bins: 64, min_edge: 1.0, max_edge: 1e5 }
    }
}

impl BinningConfig {
    /// `num_bins - 1` strictly increasing edges, log-spaced from `min_edge`
    /// to `max_edge` inclusive.
    pub fn edges(&self) -> Result<Vec<f64>, NnError> {
        if self.num_bins < 2 {
            return Err(NnError::InvalidModel("num_bins must be at least 2".into()));
        }
        if !(self.min_edge > 0.0 && self.max_edge > self.min_edge) {
            return Err(NnError::InvalidModel(format!(
                "bin edge range [{}, {}] must be positive and increasing",
                self.min_edge, self.max_edge
            )));
        }
        let n = self.num_bins - 1;
        if n == 1 {
            return Ok(vec![self.min_edge]);
        }
        let (lo, hi) = (self.min_edge.ln(), self.max_edge.ln());
        let edges: Vec<f64> = (0..n)
            .map(|i| (lo + (hi - lo) * i as f64 / (n - 1) as f64).exp())
            .collect();
        if !edges.windows(2).all(|w| w[0] < w[1]) {
            return Err(NnError::InvalidModel("bin edges collapsed; too many bins for range".into()));
        }
        Ok(edges)
    }
}

/// Index of the bin holding `value`: bin 0 is `[0, e_0)`, interior bin `i` is
/// `[e_{i-1}, e_i)`, the last bin is `[e_last, inf)`.
pub fn bin_index(edges: &[f64], value: f64) -> usize {
    edges.partition_point(|&e| e <= value)
}

/// A representative count per bin, used to reduce a bin distribution to a
/// point estimate: geometric mean of the bin's edges, half the first edge for
/// the leading bin, and 1.5x the lower edge for the open-ended last bin.
pub fn bin_representatives(edges: &[f64]) -> Vec<f64> {
    let mut reps = Vec::with_capacity(edges.len() + 1);
    reps.push(edges[0] / 2.0);
    for w in edges.windows(2) {
        reps.push((w[0] * w[1]).sqrt());
    }
    reps.push(edges[edges.len() - 1] * 1.5);
    reps
}

/// Probability-weighted mean of bin representatives.
pub fn expected_count(probs: &[f64], representatives: &[f64]) -> f64 {
    debug_assert_eq!(probs.len(), representatives.len());
    probs.iter().zip(representatives).map(|(p, r)| p * r).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_layout() {
        let cfg = BinningConfig::default();
        let edges = cfg.edges().unwrap();
        assert_eq!(edges.len(), 63);
        assert_eq!(edges[0], 1.0);
        assert!((edges[62] - 1e5).abs() < 1e-9);
        assert!(edges.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn indexing_covers_the_line() {
        let edges = vec![1.0, 10.0, 100.0];
        assert_eq!(bin_index(&edges, 0.0), 0);
        assert_eq!(bin_index(&edges, 0.9), 0);
        assert_eq!(bin_index(&edges, 1.0), 1);
        assert_eq!(bin_index(&edges, 9.99), 1);
        assert_eq!(bin_index(&edges, 10.0), 2);
        assert_eq!(bin_index(&edges, 99.0), 2);
        assert_eq!(bin_index(&edges, 100.0), 3);
        assert_eq!(bin_index(&edges, 1e9), 3);
    }

    #[test]
    fn representatives_sit_inside_their_bins() {
        let edges = vec![1.0, 10.0, 100.0];
        let reps = bin_representatives(&edges);
        assert_eq!(reps.len(), 4);
        assert_eq!(reps[0], 0.5);
        assert!((reps[1] - (10.0f64).sqrt()).abs() < 1e-12);
        assert!((reps[2] - (1000.0f64).sqrt()).abs() < 1e-12);
        assert_eq!(reps[3], 150.0);
        for (i, &r) in reps.iter().enumerate() {
            assert_eq!(bin_index(&edges, r), i, "representative {r} escaped bin {i}");
        }
    }

    #[test]
    fn expected_count_is_a_convex_combination() {
        let edges = vec![1.0, 10.0, 100.0];
        let reps = bin_representatives(&edges);
        let certain = expected_count(&[0.0, 1.0, 0.0, 0.0], &reps);
        assert_eq!(certain, reps[1]);
        let mixed = expected_count(&[0.25, 0.25, 0.25, 0.25], &reps);
        assert!(mixed > reps[0] && mixed < reps[3]);
    }

    #[test]
    fn bad_configs_are_rejected() {
        assert!(BinningConfig { num_bins: 1, ..Default::default() }.edges().is_err());
        assert!(BinningConfig { min_edge: 0.0, ..Default::default() }.edges().is_err());
        assert!(BinningConfig { min_edge: 10.0, max_edge: 5.0, ..Default::default() }
            .edges()
            .is_err());
    }
}
