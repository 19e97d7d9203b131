use serde::{Deserialize, Serialize};

use crate::nn::params::{GradientSet, StackedModelParams};
use crate::nn::NnError;

/// Adam hyperparameters plus a global gradient-norm clip.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdamHyper {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Gradients are rescaled when their global L2 norm exceeds this.
    pub clip_norm: f64,
}

impl Default for AdamHyper {
    fn default() -> Self {
        AdamHyper { learning_rate: 1e-3, beta1: 0.9, beta2: 0.999, epsilon: 1e-8, clip_norm: 5.0 }
    }
}

impl AdamHyper {
    pub fn with_learning_rate(learning_rate: f64) -> Self {
        AdamHyper { learning_rate, ..Default::default() }
    }
}

/// First/second moment accumulators, aligned with the model's flat layout.
#[derive(Debug, Clone)]
pub struct AdamState {
    step: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl AdamState {
    pub fn new(param_count: usize) -> Self {
        AdamState { step: 0, m: vec![0.0; param_count], v: vec![0.0; param_count] }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }
}

/// One Adam update in place. Deterministic: identical inputs produce
/// bit-identical parameters. Rejects non-finite gradients before touching the
/// model, so parameters stay finite after every step.
pub fn optimizer_step(
    model: &mut StackedModelParams,
    grads: &GradientSet,
    state: &mut AdamState,
    hyper: &AdamHyper,
) -> Result<(), NnError> {
    let mut g = grads.flatten();
    if g.len() != state.m.len() {
        return Err(NnError::CacheMismatch(format!(
            "gradient length {} vs optimizer state {}",
            g.len(),
            state.m.len()
        )));
    }
    if g.iter().any(|v| !v.is_finite()) {
        return Err(NnError::NonFiniteGradient { step: state.step + 1 });
    }

    let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > hyper.clip_norm {
        let scale = hyper.clip_norm / norm;
        for v in &mut g {
            *v *= scale;
        }
    }

    state.step += 1;
    let t = state.step as i32;
    let bc1 = 1.0 - hyper.beta1.powi(t);
    let bc2 = 1.0 - hyper.beta2.powi(t);

    let mut flat = model.flatten();
    for i in 0..flat.len() {
        state.m[i] = hyper.beta1 * state.m[i] + (1.0 - hyper.beta1) * g[i];
        state.v[i] = hyper.beta2 * state.v[i] + (1.0 - hyper.beta2) * g[i] * g[i];
        let m_hat = state.m[i] / bc1;
        let v_hat = state.v[i] / bc2;
        flat[i] -= hyper.learning_rate * m_hat / (v_hat.sqrt() + hyper.epsilon);
    }
    model.set_flat(&flat);
    debug_assert!(model.is_finite());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small_model(seed: u64) -> StackedModelParams {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        StackedModelParams::init(&mut rng, 2, 3, vec![1.0, 10.0], true).unwrap()
    }

    #[test]
    fn zero_gradients_leave_parameters_unchanged() {
        let mut model = small_model(4);
        let before = model.flatten();
        let grads = GradientSet::zeros_like(&model);
        let mut state = AdamState::new(model.param_count());
        optimizer_step(&mut model, &grads, &mut state, &AdamHyper::default()).unwrap();
        assert_eq!(model.flatten(), before);
        assert_eq!(state.step_count(), 1);
    }

    #[test]
    fn single_nonzero_gradient_matches_closed_form() {
        let mut model = small_model(4);
        let before = model.flatten();
        let mut grads = GradientSet::zeros_like(&model);
        let g = 0.25;
        grads.layers[0].w_f.set(0, 0, g);
        let hyper = AdamHyper::default();
        let mut state = AdamState::new(model.param_count());
        optimizer_step(&mut model, &grads, &mut state, &hyper).unwrap();

        // First Adam step by hand: m-hat = g, v-hat = g^2.
        let m_hat = g;
        let v_hat = g * g;
        let expected = before[0] - hyper.learning_rate * m_hat / (v_hat.sqrt() + hyper.epsilon);
        let after = model.flatten();
        assert!((after[0] - expected).abs() < 1e-15);
        // Every other parameter is untouched.
        for (i, (a, b)) in after.iter().zip(&before).enumerate().skip(1) {
            assert_eq!(a, b, "parameter {i} moved without gradient");
        }
    }

    #[test]
    fn clipping_rescales_the_global_norm() {
        let mut model = small_model(4);
        let before = model.flatten();
        let mut grads = GradientSet::zeros_like(&model);
        grads.layers[0].w_f.set(0, 0, 30.0);
        grads.layers[0].w_f.set(0, 1, 40.0); // norm 50, clipped to 5
        let hyper = AdamHyper::default();
        let mut state = AdamState::new(model.param_count());
        optimizer_step(&mut model, &grads, &mut state, &hyper).unwrap();
        let after = model.flatten();
        let g0 = 3.0;
        let expected = before[0] - hyper.learning_rate * g0 / ((g0 * g0).sqrt() + hyper.epsilon);
        assert!((after[0] - expected).abs() < 1e-15);
    }

    #[test]
    fn non_finite_gradient_is_rejected_with_step_index() {
        let mut model = small_model(4);
        let before = model.flatten();
        let mut grads = GradientSet::zeros_like(&model);
        grads.layers[0].b_u[0] = f64::NAN;
        let mut state = AdamState::new(model.param_count());
        state.step = 41;
        match optimizer_step(&mut model, &grads, &mut state, &AdamHyper::default()) {
            Err(NnError::NonFiniteGradient { step }) => assert_eq!(step, 42),
            other => panic!("expected non-finite gradient error, got {other:?}"),
        }
        assert_eq!(model.flatten(), before, "failed step must not mutate the model");
    }

    #[test]
    fn repeated_runs_are_bit_identical() {
        let run = || {
            let mut model = small_model(9);
            let mut state = AdamState::new(model.param_count());
            let hyper = AdamHyper::default();
            for k in 0..100 {
                let mut grads = GradientSet::zeros_like(&model);
                // Deterministic synthetic gradient pattern.
                grads.layers[0].b_c[0] = (k as f64 * 0.1).sin();
                grads.layers[1].b_f[1] = 0.01 * k as f64;
                optimizer_step(&mut model, &grads, &mut state, &hyper).unwrap();
            }
            model.flatten()
        };
        assert_eq!(run(), run());
    }
}
