//! Minimal dense linear algebra over `f64`.
//!
//! The model tensors here are tiny (tens of rows), so a row-major `Vec<f64>`
//! matrix with the handful of operations the kernel needs beats pulling in a
//! BLAS-backed dependency. Row-major layout is also the on-disk layout of
//! checkpoints.

use serde::{Deserialize, Serialize};

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixRepr", into = "MatrixRepr")]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

/// Serialized form; validated on deserialization.
#[derive(Serialize, Deserialize)]
struct MatrixRepr {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl TryFrom<MatrixRepr> for Matrix {
    type Error = String;

    fn try_from(r: MatrixRepr) -> Result<Self, String> {
        if r.data.len() != r.rows * r.cols {
            return Err(format!(
                "matrix data length {} does not match {}x{}",
                r.data.len(),
                r.rows,
                r.cols
            ));
        }
        Ok(Matrix { rows: r.rows, cols: r.cols, data: r.data })
    }
}

impl From<Matrix> for MatrixRepr {
    fn from(m: Matrix) -> Self {
        MatrixRepr { rows: m.rows, cols: m.cols, data: m.data }
    }
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            data.extend_from_slice(row);
        }
        Matrix { rows: r, cols: c, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Flat row-major view of all entries.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// `y = A x`. Panics on dimension mismatch; callers validate shapes first.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols, "matvec dimension mismatch");
        let mut y = vec![0.0; self.rows];
        for i in 0..self.rows {
            let row = self.row(i);
            let mut acc = 0.0;
            for (a, b) in row.iter().zip(x) {
                acc += a * b;
            }
            y[i] = acc;
        }
        y
    }

    /// `y += A^T v`, accumulating into `y`.
    pub fn tr_matvec_acc(&self, v: &[f64], y: &mut [f64]) {
        assert_eq!(v.len(), self.rows, "tr_matvec dimension mismatch");
        assert_eq!(y.len(), self.cols, "tr_matvec output mismatch");
        for i in 0..self.rows {
            let vi = v[i];
            if vi == 0.0 {
                continue;
            }
            let row = self.row(i);
            for (yj, a) in y.iter_mut().zip(row) {
                *yj += vi * a;
            }
        }
    }

    /// Rank-1 accumulation `A += u v^T`.
    pub fn add_outer(&mut self, u: &[f64], v: &[f64]) {
        assert_eq!(u.len(), self.rows, "outer product row mismatch");
        assert_eq!(v.len(), self.cols, "outer product col mismatch");
        for i in 0..self.rows {
            let ui = u[i];
            if ui == 0.0 {
                continue;
            }
            let base = i * self.cols;
            for (j, vj) in v.iter().enumerate() {
                self.data[base + j] += ui * vj;
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Solves the ridge-damped normal equations `(X^T X + damp I) beta = X^T y`
/// for a design matrix with rows `xs` and targets `ys`.
///
/// Gaussian elimination with partial pivoting on the (small) Gram matrix.
/// The damping keeps rank-deficient designs solvable.
pub fn ridge_solve(xs: &[Vec<f64>], ys: &[f64], damp: f64) -> Vec<f64> {
    assert_eq!(xs.len(), ys.len());
    assert!(!xs.is_empty(), "empty design matrix");
    let p = xs[0].len();
    let mut gram = vec![vec![0.0; p]; p];
    let mut rhs = vec![0.0; p];
    for (x, &y) in xs.iter().zip(ys) {
        assert_eq!(x.len(), p, "ragged design matrix");
        for i in 0..p {
            rhs[i] += x[i] * y;
            for j in 0..p {
                gram[i][j] += x[i] * x[j];
            }
        }
    }
    for (i, row) in gram.iter_mut().enumerate() {
        row[i] += damp;
    }
    solve_dense(&mut gram, &mut rhs);
    rhs
}

/// In-place Gaussian elimination with partial pivoting; solution ends in `b`.
fn solve_dense(a: &mut [Vec<f64>], b: &mut [f64]) {
    let n = b.len();
    for col in 0..n {
        let mut pivot = col;
        for r in col + 1..n {
            if a[r][col].abs() > a[pivot][col].abs() {
                pivot = r;
            }
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        let diag = a[col][col];
        assert!(diag != 0.0, "singular system even after damping");
        for r in col + 1..n {
            let factor = a[r][col] / diag;
            if factor == 0.0 {
                continue;
            }
            for c in col..n {
                let v = a[col][c];
                a[r][c] -= factor * v;
            }
            b[r] -= factor * b[col];
        }
    }
    for col in (0..n).rev() {
        let mut acc = b[col];
        for c in col + 1..n {
            acc -= a[col][c] * b[c];
        }
        b[col] = acc / a[col][col];
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matvec_small() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]);
        assert_eq!(a.matvec(&[1.0, 1.0]), vec![3.0, 7.0]);
    }

    #[test]
    fn tr_matvec_matches_transpose() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]);
        let mut y = vec![0.0; 3];
        a.tr_matvec_acc(&[1.0, -1.0], &mut y);
        assert_eq!(y, vec![-3.0, -3.0, -3.0]);
    }

    #[test]
    fn outer_accumulates() {
        let mut a = Matrix::zeros(2, 2);
        a.add_outer(&[1.0, 2.0], &[3.0, 4.0]);
        a.add_outer(&[1.0, 0.0], &[1.0, 0.0]);
        assert_eq!(a.as_slice(), &[4.0, 4.0, 6.0, 8.0]);
    }

    #[test]
    fn ridge_recovers_exact_linear_map() {
        // y = 2*x0 - x1 + 0.5, recoverable through an intercept column.
        let xs: Vec<Vec<f64>> = vec![
            vec![1.0, 0.0, 1.0],
            vec![0.0, 1.0, 1.0],
            vec![2.0, 1.0, 1.0],
            vec![-1.0, 3.0, 1.0],
        ];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x[0] - x[1] + 0.5).collect();
        let beta = ridge_solve(&xs, &ys, 1e-10);
        assert!((beta[0] - 2.0).abs() < 1e-6);
        assert!((beta[1] + 1.0).abs() < 1e-6);
        assert!((beta[2] - 0.5).abs() < 1e-6);
    }

    #[test]
    fn ridge_survives_rank_deficiency() {
        // Duplicate column: unregularized normal equations would be singular.
        let xs = vec![vec![1.0, 1.0], vec![2.0, 2.0], vec![3.0, 3.0]];
        let ys = vec![2.0, 4.0, 6.0];
        let beta = ridge_solve(&xs, &ys, 1e-8);
        let pred: f64 = beta[0] + beta[1];
        assert!((pred - 2.0).abs() < 1e-5);
    }

    #[test]
    fn serde_roundtrip_rejects_bad_shape() {
        let m = Matrix::from_rows(&[vec![1.5, -2.5]]);
        let json = serde_json::to_string(&m).unwrap();
        let back: Matrix = serde_json::from_str(&json).unwrap();
        assert_eq!(m, back);
        let bad = r#"{"rows":2,"cols":2,"data":[1.0]}"#;
        assert!(serde_json::from_str::<Matrix>(bad).is_err());
    }
}
