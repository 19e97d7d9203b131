use crate::nn::forward::{CellStepCache, ForwardCache};
use crate::nn::params::{GradientSet, LstmCellParams, StackedModelParams};
use crate::nn::NnError;

/// Exact gradients of [`loss`](crate::nn::loss) with respect to every model
/// tensor, unrolled through all timesteps and both layers.
///
/// `cache` must come from `stacked_forward` on the same model; a shape
/// disagreement is reported as a cache mismatch rather than silently
/// producing wrong gradients.
pub fn backward(
    model: &StackedModelParams,
    cache: &ForwardCache,
    targets: &[usize],
    mask: &[bool],
) -> Result<GradientSet, NnError> {
    check_congruent(model, cache)?;
    let steps = cache.len();
    if targets.len() != steps {
        return Err(NnError::DimMismatch { tensor: "targets", expected: steps, got: targets.len() });
    }
    if mask.len() != steps {
        return Err(NnError::DimMismatch { tensor: "mask", expected: steps, got: mask.len() });
    }
    let supervised = mask.iter().filter(|&&m| m).count();
    if supervised == 0 {
        return Err(NnError::EmptyMask);
    }
    for (step, (&target, &on)) in targets.iter().zip(mask).enumerate() {
        if on && target >= cache.num_bins {
            return Err(NnError::TargetOutOfRange { step, target, num_bins: cache.num_bins });
        }
    }

    let mut grads = GradientSet::zeros_like(model);
    let num_layers = model.layers.len();
    // Gradients flowing into each layer's h and c from the following timestep.
    let mut dh_next: Vec<Vec<f64>> = model.hidden_dims().iter().map(|&d| vec![0.0; d]).collect();
    let mut dc_next: Vec<Vec<f64>> = model.hidden_dims().iter().map(|&d| vec![0.0; d]).collect();

    for t in (0..steps).rev() {
        let step = &cache.steps[t];

        // Readout: d(mean masked NLL)/d(logits) = (p - onehot)/supervised.
        let mut dh_top = dh_next[num_layers - 1].clone();
        if mask[t] {
            let mut dlogits = step.probs.clone();
            dlogits[targets[t]] -= 1.0;
            let scale = 1.0 / supervised as f64;
            for v in &mut dlogits {
                *v *= scale;
            }
            let h_top = &step.layers[num_layers - 1].hidden;
            match (&model.readout, &mut grads.readout) {
                (Some(r), Some(g)) => {
                    g.w.add_outer(&dlogits, h_top);
                    for (gb, dl) in g.b.iter_mut().zip(&dlogits) {
                        *gb += dl;
                    }
                    r.w.tr_matvec_acc(&dlogits, &mut dh_top);
                }
                (None, None) => {
                    for (dh, dl) in dh_top.iter_mut().zip(&dlogits) {
                        *dh += dl;
                    }
                }
                _ => unreachable!("gradient layout built from the same model"),
            }
        }

        // Top layer consumes its readout + recurrent gradient; its input
        // gradient feeds the layer below, chained down the stack.
        let top = cell_backward(
            &model.layers[num_layers - 1],
            &step.layers[num_layers - 1],
            &dh_top,
            &dc_next[num_layers - 1],
            &mut grads.layers[num_layers - 1],
        );
        dh_next[num_layers - 1] = top.dh_prev;
        dc_next[num_layers - 1] = top.dc_prev;
        let mut dx = top.dx;
        for layer in (0..num_layers - 1).rev() {
            let mut dh = dh_next[layer].clone();
            for (a, b) in dh.iter_mut().zip(&dx) {
                *a += b;
            }
            let flows = cell_backward(
                &model.layers[layer],
                &step.layers[layer],
                &dh,
                &dc_next[layer],
                &mut grads.layers[layer],
            );
            dh_next[layer] = flows.dh_prev;
            dc_next[layer] = flows.dc_prev;
            dx = flows.dx;
        }
    }

    Ok(grads)
}

/// Gradients leaving one cell step: into the previous step's state and into
/// this step's input.
struct CellFlows {
    dh_prev: Vec<f64>,
    dc_prev: Vec<f64>,
    dx: Vec<f64>,
}

/// Backward through one cell step. `dh` is the total gradient on this step's
/// working memory, `dc_in` the gradient flowing into this step's cell from
/// the next one.
fn cell_backward(
    params: &LstmCellParams,
    cache: &CellStepCache,
    dh: &[f64],
    dc_in: &[f64],
    grads: &mut LstmCellParams,
) -> CellFlows {
    let hidden = params.hidden_dim();
    let input = params.input_dim();

    let mut dz_f = vec![0.0; hidden];
    let mut dz_u = vec![0.0; hidden];
    let mut dz_c = vec![0.0; hidden];
    let mut dz_r = vec![0.0; hidden];
    let mut dc = vec![0.0; hidden];

    for i in 0..hidden {
        let r = cache.read[i];
        let tc = cache.cell_tanh[i];
        dz_r[i] = dh[i] * tc * r * (1.0 - r);
        dc[i] = dh[i] * r * (1.0 - tc * tc) + dc_in[i];

        let f = cache.forget[i];
        let u = cache.update[i];
        let g = cache.candidate[i];
        dz_f[i] = dc[i] * cache.c_prev[i] * f * (1.0 - f);
        dz_u[i] = dc[i] * g * u * (1.0 - u);
        dz_c[i] = dc[i] * u * (1.0 - g * g);
    }

    grads.w_f.add_outer(&dz_f, &cache.concat);
    grads.w_u.add_outer(&dz_u, &cache.concat);
    grads.w_c.add_outer(&dz_c, &cache.concat);
    grads.w_r.add_outer(&dz_r, &cache.concat);
    for i in 0..hidden {
        grads.b_f[i] += dz_f[i];
        grads.b_u[i] += dz_u[i];
        grads.b_c[i] += dz_c[i];
        grads.b_r[i] += dz_r[i];
    }

    let mut dconcat = vec![0.0; hidden + input];
    params.w_f.tr_matvec_acc(&dz_f, &mut dconcat);
    params.w_u.tr_matvec_acc(&dz_u, &mut dconcat);
    params.w_c.tr_matvec_acc(&dz_c, &mut dconcat);
    params.w_r.tr_matvec_acc(&dz_r, &mut dconcat);

    let mut dc_prev = vec![0.0; hidden];
    for i in 0..hidden {
        dc_prev[i] = dc[i] * cache.forget[i];
    }
    let dx = dconcat.split_off(hidden);
    CellFlows { dh_prev: dconcat, dc_prev, dx }
}

fn check_congruent(model: &StackedModelParams, cache: &ForwardCache) -> Result<(), NnError> {
    if cache.is_empty() {
        return Err(NnError::EmptySequence);
    }
    if cache.input_dim != model.input_dim() {
        return Err(NnError::CacheMismatch(format!(
            "cache input dim {} vs model {}",
            cache.input_dim,
            model.input_dim()
        )));
    }
    if cache.hidden_dims != model.hidden_dims() {
        return Err(NnError::CacheMismatch(format!(
            "cache hidden dims {:?} vs model {:?}",
            cache.hidden_dims,
            model.hidden_dims()
        )));
    }
    if cache.num_bins != model.num_bins() {
        return Err(NnError::CacheMismatch(format!(
            "cache bins {} vs model {}",
            cache.num_bins,
            model.num_bins()
        )));
    }
    Ok(())
}
