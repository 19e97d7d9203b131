use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::linalg::Matrix;
use crate::nn::NnError;

/// Parameters of one LSTM cell.
///
/// Each weight matrix has shape `(hidden_dim, hidden_dim + input_dim)` and is
/// applied to the concatenation `[h_prev, x]`; each bias has length
/// `hidden_dim`. `w_f`/`b_f` drive the forget gate, `w_u`/`b_u` the update
/// gate, `w_c`/`b_c` the cell candidate, and `w_r`/`b_r` the read gate that
/// exposes cell memory as working memory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmCellParams {
    pub w_f: Matrix,
    pub w_u: Matrix,
    pub w_c: Matrix,
    pub w_r: Matrix,
    pub b_f: Vec<f64>,
    pub b_u: Vec<f64>,
    pub b_c: Vec<f64>,
    pub b_r: Vec<f64>,
}

impl LstmCellParams {
    pub fn zeros(hidden_dim: usize, input_dim: usize) -> Self {
        let w = || Matrix::zeros(hidden_dim, hidden_dim + input_dim);
        let b = || vec![0.0; hidden_dim];
        LstmCellParams {
            w_f: w(),
            w_u: w(),
            w_c: w(),
            w_r: w(),
            b_f: b(),
            b_u: b(),
            b_c: b(),
            b_r: b(),
        }
    }

    /// Seeded init: weights uniform in `±1/sqrt(fan_in)`, biases zero except
    /// the forget bias, which starts at `forget_bias` so early training keeps
    /// accumulated memory.
    pub fn init(rng: &mut ChaCha8Rng, hidden_dim: usize, input_dim: usize, forget_bias: f64) -> Self {
        let mut cell = Self::zeros(hidden_dim, input_dim);
        let bound = 1.0 / ((hidden_dim + input_dim) as f64).sqrt();
        for w in [&mut cell.w_f, &mut cell.w_u, &mut cell.w_c, &mut cell.w_r] {
            for v in w.as_mut_slice() {
                *v = (rng.gen::<f64>() * 2.0 - 1.0) * bound;
            }
        }
        for v in &mut cell.b_f {
            *v = forget_bias;
        }
        cell
    }

    pub fn hidden_dim(&self) -> usize {
        self.w_f.rows()
    }

    pub fn input_dim(&self) -> usize {
        self.w_f.cols() - self.w_f.rows()
    }

    pub fn validate(&self) -> Result<(), NnError> {
        let (r, c) = (self.w_f.rows(), self.w_f.cols());
        if c <= r {
            return Err(NnError::InvalidModel(format!(
                "cell weight matrices must be hidden x (hidden + input); got {r}x{c}"
            )));
        }
        for (name, w) in [("w_u", &self.w_u), ("w_c", &self.w_c), ("w_r", &self.w_r)] {
            if w.rows() != r || w.cols() != c {
                return Err(NnError::InvalidModel(format!(
                    "{name} shape {}x{} differs from w_f {r}x{c}",
                    w.rows(),
                    w.cols()
                )));
            }
        }
        for (name, b) in [("b_f", &self.b_f), ("b_u", &self.b_u), ("b_c", &self.b_c), ("b_r", &self.b_r)] {
            if b.len() != r {
                return Err(NnError::InvalidModel(format!(
                    "{name} length {} differs from hidden dim {r}",
                    b.len()
                )));
            }
        }
        if !self.is_finite() {
            return Err(NnError::InvalidModel("non-finite cell parameter".into()));
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|w| w.is_finite())
            && self.biases().iter().all(|b| b.iter().all(|v| v.is_finite()))
    }

    fn tensors(&self) -> [&Matrix; 4] {
        [&self.w_f, &self.w_u, &self.w_c, &self.w_r]
    }

    fn biases(&self) -> [&Vec<f64>; 4] {
        [&self.b_f, &self.b_u, &self.b_c, &self.b_r]
    }

    pub fn param_count(&self) -> usize {
        4 * (self.w_f.rows() * self.w_f.cols() + self.b_f.len())
    }

    fn flatten_into(&self, out: &mut Vec<f64>) {
        for (w, b) in [
            (&self.w_f, &self.b_f),
            (&self.w_u, &self.b_u),
            (&self.w_c, &self.b_c),
            (&self.w_r, &self.b_r),
        ] {
            out.extend_from_slice(w.as_slice());
            out.extend_from_slice(b);
        }
    }

    fn unflatten_from(&mut self, flat: &[f64], pos: &mut usize) {
        for (w, b) in [
            (&mut self.w_f, &mut self.b_f),
            (&mut self.w_u, &mut self.b_u),
            (&mut self.w_c, &mut self.b_c),
            (&mut self.w_r, &mut self.b_r),
        ] {
            let n = w.as_slice().len();
            w.as_mut_slice().copy_from_slice(&flat[*pos..*pos + n]);
            *pos += n;
            let nb = b.len();
            b.copy_from_slice(&flat[*pos..*pos + nb]);
            *pos += nb;
        }
    }
}

/// Affine map from the top layer's working memory to bin logits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReadoutParams {
    pub w: Matrix,
    pub b: Vec<f64>,
}

/// The full stacked model: exactly two LSTM layers, an optional affine
/// readout, and the count-bin edges the softmax distribution ranges over.
///
/// When `readout` is `None` the top layer's working memory is passed to the
/// softmax directly, which requires the top hidden dim to equal the number of
/// bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StackedModelParams {
    pub layers: Vec<LstmCellParams>,
    pub readout: Option<ReadoutParams>,
    pub bin_edges: Vec<f64>,
}

impl StackedModelParams {
    /// Seeded construction. Layer 1 consumes `input_dim` features; both
    /// layers use `hidden_dim` units. `affine_readout: false` is only valid
    /// when `hidden_dim == bin_edges.len() + 1`.
    pub fn init(
        rng: &mut ChaCha8Rng,
        input_dim: usize,
        hidden_dim: usize,
        bin_edges: Vec<f64>,
        affine_readout: bool,
    ) -> Result<Self, NnError> {
        let num_bins = bin_edges.len() + 1;
        let layers = vec![
            LstmCellParams::init(rng, hidden_dim, input_dim, 1.0),
            LstmCellParams::init(rng, hidden_dim, hidden_dim, 1.0),
        ];
        let readout = if affine_readout {
            let bound = 1.0 / (hidden_dim as f64).sqrt();
            let w = Matrix::from_fn(num_bins, hidden_dim, |_, _| (rng.gen::<f64>() * 2.0 - 1.0) * bound);
            Some(ReadoutParams { w, b: vec![0.0; num_bins] })
        } else {
            None
        };
        let model = StackedModelParams { layers, readout, bin_edges };
        model.validate()?;
        Ok(model)
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim()
    }

    pub fn hidden_dims(&self) -> Vec<usize> {
        self.layers.iter().map(LstmCellParams::hidden_dim).collect()
    }

    pub fn num_bins(&self) -> usize {
        self.bin_edges.len() + 1
    }

    pub fn validate(&self) -> Result<(), NnError> {
        if self.layers.len() != 2 {
            return Err(NnError::InvalidModel(format!(
                "model must have exactly 2 layers, got {}",
                self.layers.len()
            )));
        }
        for layer in &self.layers {
            layer.validate()?;
        }
        if self.layers[1].input_dim() != self.layers[0].hidden_dim() {
            return Err(NnError::InvalidModel(format!(
                "layer 2 input dim {} does not compose with layer 1 hidden dim {}",
                self.layers[1].input_dim(),
                self.layers[0].hidden_dim()
            )));
        }
        if self.bin_edges.is_empty() {
            return Err(NnError::InvalidModel("bin_edges must be nonempty".into()));
        }
        if !self.bin_edges.windows(2).all(|w| w[0] < w[1]) {
            return Err(NnError::InvalidModel("bin_edges must be strictly increasing".into()));
        }
        let top_hidden = self.layers[1].hidden_dim();
        match &self.readout {
            Some(r) => {
                if r.w.rows() != self.num_bins() || r.w.cols() != top_hidden {
                    return Err(NnError::InvalidModel(format!(
                        "readout shape {}x{} does not match {} bins x hidden {top_hidden}",
                        r.w.rows(),
                        r.w.cols(),
                        self.num_bins()
                    )));
                }
                if r.b.len() != self.num_bins() {
                    return Err(NnError::InvalidModel("readout bias length mismatch".into()));
                }
                if !r.w.is_finite() || !r.b.iter().all(|v| v.is_finite()) {
                    return Err(NnError::InvalidModel("non-finite readout parameter".into()));
                }
            }
            None => {
                if top_hidden != self.num_bins() {
                    return Err(NnError::InvalidModel(format!(
                        "identity readout requires hidden dim {top_hidden} == num_bins {}",
                        self.num_bins()
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(LstmCellParams::is_finite)
            && self.readout.as_ref().map_or(true, |r| {
                r.w.is_finite() && r.b.iter().all(|v| v.is_finite())
            })
    }

    /// Number of trainable parameters (bin edges are metadata, not weights).
    pub fn param_count(&self) -> usize {
        let cells: usize = self.layers.iter().map(LstmCellParams::param_count).sum();
        let readout = self
            .readout
            .as_ref()
            .map_or(0, |r| r.w.as_slice().len() + r.b.len());
        cells + readout
    }

    /// All trainable parameters as one flat row-major vector. The layout is
    /// fixed: per layer `w_f, b_f, w_u, b_u, w_c, b_c, w_r, b_r`, then the
    /// readout weights and bias.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for layer in &self.layers {
            layer.flatten_into(&mut out);
        }
        if let Some(r) = &self.readout {
            out.extend_from_slice(r.w.as_slice());
            out.extend_from_slice(&r.b);
        }
        out
    }

    /// Inverse of [`flatten`](Self::flatten); panics if the length disagrees.
    pub fn set_flat(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.param_count(), "flat parameter length mismatch");
        let mut pos = 0;
        for layer in &mut self.layers {
            layer.unflatten_from(flat, &mut pos);
        }
        if let Some(r) = &mut self.readout {
            let n = r.w.as_slice().len();
            r.w.as_mut_slice().copy_from_slice(&flat[pos..pos + n]);
            pos += n;
            let nb = r.b.len();
            r.b.copy_from_slice(&flat[pos..pos + nb]);
        }
    }
}

/// Gradients of the loss with respect to every tensor in
/// [`StackedModelParams`], in the same shapes. Bin edges carry no gradient.
#[derive(Debug, Clone)]
pub struct GradientSet {
    pub layers: Vec<LstmCellParams>,
    pub readout: Option<ReadoutParams>,
}

impl GradientSet {
    pub fn zeros_like(model: &StackedModelParams) -> Self {
        GradientSet {
            layers: model
                .layers
                .iter()
                .map(|l| LstmCellParams::zeros(l.hidden_dim(), l.input_dim()))
                .collect(),
            readout: model.readout.as_ref().map(|r| ReadoutParams {
                w: Matrix::zeros(r.w.rows(), r.w.cols()),
                b: vec![0.0; r.b.len()],
            }),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(LstmCellParams::is_finite)
            && self.readout.as_ref().map_or(true, |r| {
                r.w.is_finite() && r.b.iter().all(|v| v.is_finite())
            })
    }

    /// Same flat layout as [`StackedModelParams::flatten`].
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for layer in &self.layers {
            layer.flatten_into(&mut out);
        }
        if let Some(r) = &self.readout {
            out.extend_from_slice(r.w.as_slice());
            out.extend_from_slice(&r.b);
        }
        out
    }

    /// Elementwise `self += other`, for accumulating per-sequence gradients
    /// into a batch gradient.
    pub fn add_assign(&mut self, other: &GradientSet) {
        assert_eq!(self.layers.len(), other.layers.len());
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            for (wa, wb) in [
                (&mut a.w_f, &b.w_f),
                (&mut a.w_u, &b.w_u),
                (&mut a.w_c, &b.w_c),
                (&mut a.w_r, &b.w_r),
            ] {
                for (x, y) in wa.as_mut_slice().iter_mut().zip(wb.as_slice()) {
                    *x += y;
                }
            }
            for (ba, bb) in [
                (&mut a.b_f, &b.b_f),
                (&mut a.b_u, &b.b_u),
                (&mut a.b_c, &b.b_c),
                (&mut a.b_r, &b.b_r),
            ] {
                for (x, y) in ba.iter_mut().zip(bb) {
                    *x += y;
                }
            }
        }
        match (&mut self.readout, &other.readout) {
            (Some(a), Some(b)) => {
                for (x, y) in a.w.as_mut_slice().iter_mut().zip(b.w.as_slice()) {
                    *x += y;
                }
                for (x, y) in a.b.iter_mut().zip(&b.b) {
                    *x += y;
                }
            }
            (None, None) => {}
            _ => panic!("gradient readout presence mismatch"),
        }
    }

    /// Elementwise scaling, for turning a summed batch gradient into a mean.
    pub fn scale(&mut self, factor: f64) {
        for layer in &mut self.layers {
            for w in [&mut layer.w_f, &mut layer.w_u, &mut layer.w_c, &mut layer.w_r] {
                for x in w.as_mut_slice() {
                    *x *= factor;
                }
            }
            for b in [&mut layer.b_f, &mut layer.b_u, &mut layer.b_c, &mut layer.b_r] {
                for x in b {
                    *x *= factor;
                }
            }
        }
        if let Some(r) = &mut self.readout {
            for x in r.w.as_mut_slice() {
                *x *= factor;
            }
            for x in &mut r.b {
                *x *= factor;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn edges() -> Vec<f64> {
        vec![1.0, 10.0, 100.0]
    }

    #[test]
    fn init_produces_valid_model() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let model = StackedModelParams::init(&mut rng, 3, 8, edges(), true).unwrap();
        assert_eq!(model.input_dim(), 3);
        assert_eq!(model.hidden_dims(), vec![8, 8]);
        assert_eq!(model.num_bins(), 4);
        assert!(model.is_finite());
        // forget bias starts high
        assert!(model.layers[0].b_f.iter().all(|&v| v == 1.0));
        assert!(model.layers[0].b_u.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn identity_readout_requires_matching_dims() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        assert!(StackedModelParams::init(&mut rng, 3, 8, edges(), false).is_err());
        let model = StackedModelParams::init(&mut rng, 3, 4, edges(), false).unwrap();
        assert!(model.readout.is_none());
        assert_eq!(model.num_bins(), 4);
    }

    #[test]
    fn flatten_roundtrip_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let model = StackedModelParams::init(&mut rng, 3, 5, edges(), true).unwrap();
        let flat = model.flatten();
        assert_eq!(flat.len(), model.param_count());
        let mut other = StackedModelParams::init(&mut rng, 3, 5, edges(), true).unwrap();
        other.set_flat(&flat);
        assert_eq!(model, other);
    }

    #[test]
    fn validate_rejects_bad_shapes() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut model = StackedModelParams::init(&mut rng, 3, 4, edges(), true).unwrap();
        model.layers[1].b_f.push(0.0);
        assert!(model.validate().is_err());

        let mut model = StackedModelParams::init(&mut rng, 3, 4, edges(), true).unwrap();
        model.bin_edges = vec![1.0, 1.0, 2.0];
        assert!(model.validate().is_err());

        let mut model = StackedModelParams::init(&mut rng, 3, 4, edges(), true).unwrap();
        model.layers.pop();
        assert!(model.validate().is_err());
    }

    #[test]
    fn gradient_accumulation_matches_manual_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let model = StackedModelParams::init(&mut rng, 2, 3, edges(), true).unwrap();
        let mut acc = GradientSet::zeros_like(&model);
        let mut unit = GradientSet::zeros_like(&model);
        unit.layers[0].w_f.set(0, 0, 2.0);
        unit.readout.as_mut().unwrap().b[1] = -1.0;
        acc.add_assign(&unit);
        acc.add_assign(&unit);
        acc.scale(0.5);
        assert_eq!(acc.layers[0].w_f.get(0, 0), 2.0);
        assert_eq!(acc.readout.as_ref().unwrap().b[1], -1.0);
    }
}
