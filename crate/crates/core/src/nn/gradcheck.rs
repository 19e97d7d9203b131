use crate::nn::backward::backward;
use crate::nn::forward::stacked_forward;
use crate::nn::loss::loss;
use crate::nn::params::{GradientSet, StackedModelParams};
use crate::nn::NnError;

/// Compares analytic BPTT gradients against central finite differences and
/// returns the worst relative error over all parameters:
/// `|analytic - numeric| / max(|analytic|, |numeric|, 1e-8)`.
///
/// Intended for small models; the numeric side costs two forward passes per
/// parameter.
pub fn grad_check(
    model: &StackedModelParams,
    seq: &[Vec<f64>],
    targets: &[usize],
    mask: &[bool],
    fd_step: f64,
) -> Result<f64, NnError> {
    let cache = stacked_forward(model, seq)?;
    let analytic = backward(model, &cache, targets, mask)?;
    max_rel_error_vs_fd(model, seq, targets, mask, fd_step, &analytic)
}

/// The comparison half of [`grad_check`], taking the candidate gradients as
/// an argument so a deliberately corrupted gradient can be checked too.
pub fn max_rel_error_vs_fd(
    model: &StackedModelParams,
    seq: &[Vec<f64>],
    targets: &[usize],
    mask: &[bool],
    fd_step: f64,
    candidate: &GradientSet,
) -> Result<f64, NnError> {
    let analytic = candidate.flatten();
    let base = model.flatten();
    let mut probe = model.clone();
    let mut worst = 0.0f64;

    for i in 0..base.len() {
        let mut flat = base.clone();
        flat[i] = base[i] + fd_step;
        probe.set_flat(&flat);
        let plus = loss(&stacked_forward(&probe, seq)?, targets, mask)?;
        flat[i] = base[i] - fd_step;
        probe.set_flat(&flat);
        let minus = loss(&stacked_forward(&probe, seq)?, targets, mask)?;
        let numeric = (plus - minus) / (2.0 * fd_step);

        let denom = analytic[i].abs().max(numeric.abs()).max(1e-8);
        worst = worst.max((analytic[i] - numeric).abs() / denom);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Check fixture: strong activations (init and inputs scaled up) and a
    /// single supervised step keep every gradient component well above the
    /// finite-difference noise floor of a 64-bit central difference.
    fn fixture(seed: u64) -> (StackedModelParams, Vec<Vec<f64>>, Vec<usize>, Vec<bool>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let edges: Vec<f64> = (0..7).map(|i| 3.0f64.powi(i)).collect();
        let mut model = StackedModelParams::init(&mut rng, 3, 8, edges, true).unwrap();
        let mut flat = model.flatten();
        for v in &mut flat {
            *v *= 3.0;
        }
        model.set_flat(&flat);
        let steps = 6;
        let seq: Vec<Vec<f64>> = (0..steps)
            .map(|_| (0..3).map(|_| (rng.gen::<f64>() * 2.0 - 1.0) * 3.0).collect())
            .collect();
        let targets: Vec<usize> = (0..steps).map(|_| rng.gen_range(0..8)).collect();
        let mut mask = vec![false; steps];
        mask[steps - 1] = true;
        (model, seq, targets, mask)
    }

    #[test]
    fn analytic_gradients_match_finite_differences() {
        for seed in 0..3 {
            let (model, seq, targets, mask) = fixture(seed);
            let err = grad_check(&model, &seq, &targets, &mask, 1e-5).unwrap();
            assert!(err < 1e-4, "seed {seed}: max relative error {err}");
        }
    }

    #[test]
    fn identity_readout_gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5678);
        let mut model =
            StackedModelParams::init(&mut rng, 2, 4, vec![1.0, 10.0, 100.0], false).unwrap();
        let mut flat = model.flatten();
        for v in &mut flat {
            *v *= 3.0;
        }
        model.set_flat(&flat);
        let seq: Vec<Vec<f64>> =
            (0..5).map(|_| (0..2).map(|_| (rng.gen::<f64>() - 0.5) * 6.0).collect()).collect();
        let targets = vec![0, 1, 2, 3, 0];
        let mask = vec![false, false, false, false, true];
        let err = grad_check(&model, &seq, &targets, &mask, 1e-5).unwrap();
        assert!(err < 1e-4, "max relative error {err}");
    }

    #[test]
    fn corrupted_gradient_is_detected() {
        let (model, seq, targets, mask) = fixture(99);
        let cache = stacked_forward(&model, &seq).unwrap();
        let mut grads = backward(&model, &cache, &targets, &mask).unwrap();

        // Perturb the largest-magnitude gradient component by 10%.
        let flat = grads.flatten();
        let (argmax, best) = flat
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .unwrap();
        assert!(best.abs() > 0.0);
        let mut corrupted = flat;
        corrupted[argmax] *= 1.1;
        // Rebuild a GradientSet with the corrupted flat vector.
        let mut shaped = model.clone();
        shaped.set_flat(&corrupted);
        grads.layers = shaped.layers;
        grads.readout = shaped.readout;

        let err = max_rel_error_vs_fd(&model, &seq, &targets, &mask, 1e-5, &grads).unwrap();
        assert!(err > 1e-2, "corruption must be visible, got {err}");
    }

    #[test]
    fn smaller_step_does_not_blow_up_error() {
        let (model, seq, targets, mask) = fixture(7);
        let coarse = grad_check(&model, &seq, &targets, &mask, 1e-4).unwrap();
        let fine = grad_check(&model, &seq, &targets, &mask, 1e-5).unwrap();
        assert!(fine <= coarse * 10.0 + 1e-9, "coarse {coarse}, fine {fine}");
    }
}
