//! Dense row-major f64 matrices and the similarity kernels built on them.
//!
//! This is deliberately not a general tensor library: embeddings are dense
//! 2-D batches, so the surface is a handful of products, row kernels, and
//! reductions. All reductions run in a fixed order, and the rayon paths
//! split work by output row only, so results are bit-identical regardless
//! of thread count.

use rayon::prelude::*;

use super::rng::Rng;
use crate::error::{Error, Result};

/// Row norms below this are treated as zero rows.
pub const ZERO_ROW_EPS: f64 = 1e-30;

/// Work threshold (multiply-adds) above which products go through rayon.
const PAR_FLOP_THRESHOLD: usize = 1 << 15;

/// Dense row-major matrix of f64.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Builds from row-major data, validating length and finiteness.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                context: "matrix data length",
                left: format!("{rows}x{cols}"),
                right: data.len().to_string(),
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParam(format!(
                "non-finite entry at flat index {pos}"
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    /// Convenience constructor from row slices (used heavily in tests).
    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(Error::DimensionMismatch {
                    context: "ragged rows",
                    left: c.to_string(),
                    right: row.len().to_string(),
                });
            }
            data.extend_from_slice(row);
        }
        Matrix::from_vec(r, c, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn same_shape(&self, other: &Matrix) -> bool {
        self.rows == other.rows && self.cols == other.cols
    }

    fn check_same_shape(&self, other: &Matrix, context: &'static str) -> Result<()> {
        if !self.same_shape(other) {
            return Err(Error::DimensionMismatch {
                context,
                left: format!("{}x{}", self.rows, self.cols),
                right: format!("{}x{}", other.rows, other.cols),
            });
        }
        Ok(())
    }

    /// `self * other`, (m x k)(k x n).
    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                context: "matmul inner dims",
                left: format!("{}x{}", self.rows, self.cols),
                right: format!("{}x{}", other.rows, other.cols),
            });
        }
        let (m, k, n) = (self.rows, self.cols, other.cols);
        let mut out = Matrix::zeros(m, n);
        let body = |(i, out_row): (usize, &mut [f64])| {
            let a_row = self.row(i);
            for (p, &a) in a_row.iter().enumerate() {
                let b_row = &other.data[p * n..(p + 1) * n];
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        };
        if m * k * n >= PAR_FLOP_THRESHOLD {
            out.data.par_chunks_mut(n).enumerate().for_each(body);
        } else {
            out.data.chunks_mut(n).enumerate().for_each(body);
        }
        Ok(out)
    }

    /// `self * other^T`, (m x k)(n x k)^T.
    pub fn matmul_bt(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.cols {
            return Err(Error::DimensionMismatch {
                context: "matmul_bt inner dims",
                left: format!("{}x{}", self.rows, self.cols),
                right: format!("{}x{}", other.rows, other.cols),
            });
        }
        let (m, k, n) = (self.rows, self.cols, other.rows);
        let mut out = Matrix::zeros(m, n);
        let body = |(i, out_row): (usize, &mut [f64])| {
            let a_row = self.row(i);
            for (j, o) in out_row.iter_mut().enumerate() {
                let b_row = other.row(j);
                let mut acc = 0.0;
                for (&a, &b) in a_row.iter().zip(b_row) {
                    acc += a * b;
                }
                *o = acc;
            }
        };
        if m * k * n >= PAR_FLOP_THRESHOLD {
            out.data.par_chunks_mut(n).enumerate().for_each(body);
        } else {
            out.data.chunks_mut(n).enumerate().for_each(body);
        }
        Ok(out)
    }

    /// `self^T * other`, (k x m)^T (k x n).
    pub fn matmul_at(&self, other: &Matrix) -> Result<Matrix> {
        if self.rows != other.rows {
            return Err(Error::DimensionMismatch {
                context: "matmul_at inner dims",
                left: format!("{}x{}", self.rows, self.cols),
                right: format!("{}x{}", other.rows, other.cols),
            });
        }
        let (k, m, n) = (self.rows, self.cols, other.cols);
        let mut out = Matrix::zeros(m, n);
        let body = |(i, out_row): (usize, &mut [f64])| {
            for p in 0..k {
                let a = self.data[p * m + i];
                if a == 0.0 {
                    continue;
                }
                let b_row = &other.data[p * n..(p + 1) * n];
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        };
        if m * k * n >= PAR_FLOP_THRESHOLD {
            out.data.par_chunks_mut(n).enumerate().for_each(body);
        } else {
            out.data.chunks_mut(n).enumerate().for_each(body);
        }
        Ok(out)
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        out
    }

    pub fn add(&self, other: &Matrix) -> Result<Matrix> {
        self.check_same_shape(other, "add")?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b)
            .collect();
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix> {
        self.check_same_shape(other, "sub")?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn add_assign(&mut self, other: &Matrix) -> Result<()> {
        self.check_same_shape(other, "add_assign")?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += *b;
        }
        Ok(())
    }

    pub fn scale(&self, factor: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Per-column sums (fixed iteration order).
    pub fn col_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.cols];
        for row in self.data.chunks(self.cols) {
            for (s, &v) in sums.iter_mut().zip(row) {
                *s += v;
            }
        }
        sums
    }

    /// Squared Frobenius norm.
    pub fn frob_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    /// Euclidean norms of each row.
    pub fn row_norms(&self) -> Vec<f64> {
        self.data
            .chunks(self.cols)
            .map(|row| row.iter().map(|v| v * v).sum::<f64>().sqrt())
            .collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Matrix of i.i.d. standard normal draws; advances `rng` deterministically
/// in row-major order.
pub fn gaussian_matrix(rng: &mut Rng, rows: usize, cols: usize) -> Matrix {
    let mut m = Matrix::zeros(rows, cols);
    rng.fill_normal(m.data_mut());
    m
}

/// Rescales every row to unit Euclidean norm. Errors on rows with norm
/// below [`ZERO_ROW_EPS`].
pub fn row_l2_normalize(m: &Matrix) -> Result<Matrix> {
    Ok(row_l2_normalize_with_norms(m)?.0)
}

/// As [`row_l2_normalize`] but also returns the original row norms
/// (needed by gradients through the normalization).
pub fn row_l2_normalize_with_norms(m: &Matrix) -> Result<(Matrix, Vec<f64>)> {
    let norms = m.row_norms();
    if let Some(row) = norms.iter().position(|&n| n < ZERO_ROW_EPS) {
        return Err(Error::ZeroRow {
            row,
            norm: norms[row],
        });
    }
    let mut out = m.clone();
    for (i, &n) in norms.iter().enumerate() {
        let inv = 1.0 / n;
        for v in out.row_mut(i) {
            *v *= inv;
        }
    }
    Ok((out, norms))
}

/// Pairwise cosine similarities: `out[i][j] = cos(a_i, b_j)`, shape
/// a.rows x b.rows. Errors on mismatched dims or zero rows.
pub fn cosine_matrix(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.cols() != b.cols() {
        return Err(Error::DimensionMismatch {
            context: "cosine_matrix embedding dims",
            left: a.cols().to_string(),
            right: b.cols().to_string(),
        });
    }
    let an = row_l2_normalize(a)?;
    let bn = row_l2_normalize(b)?;
    an.matmul_bt(&bn)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn gaussian_matrix_deterministic() {
        let a = gaussian_matrix(&mut Rng::new(7), 4, 4);
        let b = gaussian_matrix(&mut Rng::new(7), 4, 4);
        assert_eq!(a, b);
    }

    #[test]
    fn gaussian_matrix_moments() {
        // 100 x 512 = 51,200 draws; bounds are 3-sigma for this count.
        let m = gaussian_matrix(&mut Rng::new(11), 100, 512);
        let n = m.data().len() as f64;
        let mean = m.data().iter().sum::<f64>() / n;
        let var = m.data().iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        assert!(mean.abs() < 0.02, "mean {mean}");
        assert!((0.97..1.03).contains(&var), "var {var}");
    }

    #[test]
    fn gaussian_matrix_single_entry() {
        let m = gaussian_matrix(&mut Rng::new(1), 1, 1);
        assert!(m.get(0, 0).is_finite());
    }

    #[test]
    fn normalize_345_row() {
        let m = Matrix::from_rows(&[&[3.0, 4.0]]).unwrap();
        let n = row_l2_normalize(&m).unwrap();
        assert_close(n.get(0, 0), 0.6, 1e-15);
        assert_close(n.get(0, 1), 0.8, 1e-15);
    }

    #[test]
    fn normalize_zero_row_errors() {
        let m = Matrix::from_rows(&[&[0.0, 0.0]]).unwrap();
        assert!(matches!(
            row_l2_normalize(&m),
            Err(Error::ZeroRow { row: 0, .. })
        ));
    }

    #[test]
    fn cosine_orthonormal_identity() {
        let eye = Matrix::from_rows(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]])
            .unwrap();
        let c = cosine_matrix(&eye, &eye).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_close(c.get(i, j), if i == j { 1.0 } else { 0.0 }, 1e-15);
            }
        }
    }

    #[test]
    fn cosine_hand_value() {
        // cos((1,0), (1,1)) = 1/sqrt(2)
        let a = Matrix::from_rows(&[&[1.0, 0.0]]).unwrap();
        let b = Matrix::from_rows(&[&[1.0, 1.0]]).unwrap();
        let c = cosine_matrix(&a, &b).unwrap();
        assert_close(c.get(0, 0), std::f64::consts::FRAC_1_SQRT_2, 1e-15);
    }

    #[test]
    fn cosine_dim_mismatch() {
        let a = Matrix::from_rows(&[&[1.0, 0.0]]).unwrap();
        let b = Matrix::from_rows(&[&[1.0, 0.0, 0.0]]).unwrap();
        assert!(matches!(
            cosine_matrix(&a, &b),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn matmul_variants_agree() {
        let mut rng = Rng::new(5);
        let a = gaussian_matrix(&mut rng, 7, 4);
        let b = gaussian_matrix(&mut rng, 4, 6);
        let c = a.matmul(&b).unwrap();
        let c_bt = a.matmul_bt(&b.transpose()).unwrap();
        let c_at = a.transpose().matmul_at(&b).unwrap();
        for (x, y) in c.data().iter().zip(c_bt.data()) {
            assert_close(*x, *y, 1e-12);
        }
        for (x, y) in c.data().iter().zip(c_at.data()) {
            assert_close(*x, *y, 1e-12);
        }
    }

    #[test]
    fn matmul_parallel_matches_serial() {
        // Big enough to cross the rayon threshold; must be bit-identical
        // to a hand-rolled serial product.
        let mut rng = Rng::new(13);
        let a = gaussian_matrix(&mut rng, 64, 48);
        let b = gaussian_matrix(&mut rng, 48, 32);
        let c = a.matmul(&b).unwrap();
        for i in 0..a.rows() {
            for j in 0..b.cols() {
                let mut acc = 0.0;
                for p in 0..a.cols() {
                    acc += a.get(i, p) * b.get(p, j);
                }
                assert_eq!(c.get(i, j).to_bits(), acc.to_bits(), "({i},{j})");
            }
        }
    }

    proptest! {
        #[test]
        fn normalize_is_idempotent(rows in 1usize..5, cols in 1usize..6, seed in 0u64..1000) {
            let mut rng = Rng::new(seed);
            let m = gaussian_matrix(&mut rng, rows, cols);
            prop_assume!(m.row_norms().iter().all(|&n| n > 1e-6));
            let once = row_l2_normalize(&m).unwrap();
            let twice = row_l2_normalize(&once).unwrap();
            for (a, b) in once.data().iter().zip(twice.data()) {
                prop_assert!((a - b).abs() < 1e-12);
            }
            for n in once.row_norms() {
                prop_assert!((n - 1.0).abs() < 1e-12);
            }
        }

        #[test]
        fn cosine_self_symmetric_unit_diag(rows in 2usize..6, seed in 0u64..1000) {
            let mut rng = Rng::new(seed);
            let m = gaussian_matrix(&mut rng, rows, 5);
            prop_assume!(m.row_norms().iter().all(|&n| n > 1e-6));
            let c = cosine_matrix(&m, &m).unwrap();
            for i in 0..rows {
                prop_assert!((c.get(i, i) - 1.0).abs() < 1e-12);
                for j in 0..rows {
                    prop_assert!((c.get(i, j) - c.get(j, i)).abs() < 1e-12);
                    prop_assert!(c.get(i, j) <= 1.0 + 1e-12 && c.get(i, j) >= -1.0 - 1e-12);
                }
            }
        }
    }
}
