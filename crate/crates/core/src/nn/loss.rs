use crate::nn::forward::ForwardCache;
use crate::nn::NnError;

/// log(sum(exp(xs))) without overflow.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max.is_infinite() {
        return max;
    }
    let sum: f64 = xs.iter().map(|&x| (x - max).exp()).sum();
    max + sum.ln()
}

/// Mean negative log-likelihood of the target bin over masked steps.
///
/// Computed from logits through log-sum-exp, so a near-one probability gives
/// a near-zero loss instead of `-ln(1 - tiny)` rounding noise, and a
/// near-zero probability cannot produce `-ln(0)`.
pub fn loss(cache: &ForwardCache, targets: &[usize], mask: &[bool]) -> Result<f64, NnError> {
    if targets.len() != cache.len() {
        return Err(NnError::DimMismatch {
            tensor: "targets",
            expected: cache.len(),
            got: targets.len(),
        });
    }
    if mask.len() != cache.len() {
        return Err(NnError::DimMismatch { tensor: "mask", expected: cache.len(), got: mask.len() });
    }
    let mut total = 0.0;
    let mut count = 0usize;
    for (step, ((cached, &target), &on)) in cache.steps.iter().zip(targets).zip(mask).enumerate() {
        if !on {
            continue;
        }
        if target >= cache.num_bins {
            return Err(NnError::TargetOutOfRange { step, target, num_bins: cache.num_bins });
        }
        total += log_sum_exp(&cached.logits) - cached.logits[target];
        count += 1;
    }
    if count == 0 {
        return Err(NnError::EmptyMask);
    }
    Ok(total / count as f64)
}
