//! Dense real linear algebra.
//!
//! [`Mat`] is a row-major `f64` matrix: `data[i * cols + j]` holds entry
//! `(i, j)`. Vectorization follows the same row-major convention
//! ([`vec_row`]), which is what makes `vec_row(L X Rᵀ) = (L ⊗ R) vec_row(X)`
//! hold with the Kronecker product in its natural order.

mod kernels;
mod pinv;
mod svd;

pub use pinv::{numerical_rank, pinv, rank_threshold, retained_count, TruncationRate};
pub use svd::{svd, SvdFactors, MAX_QR_SWEEPS_PER_ROW};

pub(crate) use kernels::dot;

use crate::error::{Error, Result};
use kernels::axpy;

/// Dense matrix with row-major storage and finite entries.
#[derive(Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl std::fmt::Debug for Mat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Mat {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows.min(8) {
            write!(f, "\n  {:?}", &self.row(i)[..self.cols.min(8)])?;
        }
        if self.rows > 8 || self.cols > 8 {
            write!(f, "\n  ...")?;
        }
        write!(f, "\n]")
    }
}

impl Mat {
    /// Builds a matrix from row-major data, checking shape and finiteness.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Dimension(format!("matrix must be non-empty, got {rows}x{cols}")));
        }
        let expected = rows
            .checked_mul(cols)
            .ok_or_else(|| Error::Size(format!("{rows}x{cols} overflows usize")))?;
        if data.len() != expected {
            return Err(Error::Dimension(format!(
                "{rows}x{cols} matrix needs {expected} values, got {}",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Invariant(format!(
                "non-finite entry {} at ({}, {})",
                data[pos],
                pos / cols,
                pos % cols
            )));
        }
        Ok(Self { rows, cols, data })
    }

    /// Internal constructor for results of operations on valid matrices.
    pub(crate) fn from_parts(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        debug_assert!(rows > 0 && cols > 0);
        debug_assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    /// # Panics
    /// Panics if either dimension is zero.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix must be non-empty");
        Self::from_parts(rows, cols, vec![0.0; rows * cols])
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, d) in diag.iter().enumerate() {
            m.data[i * n + i] = *d;
        }
        m
    }

    /// Builds a matrix from row slices.
    ///
    /// # Panics
    /// Panics on ragged or empty input, or non-finite values.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        assert!(!rows.is_empty(), "need at least one row");
        let cols = rows[0].as_ref().len();
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            assert_eq!(r.len(), cols, "row {i} has {} entries, expected {cols}", r.len());
            data.extend_from_slice(r);
        }
        Self::new(rows.len(), cols, data).expect("valid rows")
    }

    /// Builds a matrix by evaluating `f(i, j)` for every entry.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.data[i * cols + j] = f(i, j);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn frobenius_norm(&self) -> f64 {
        kernels::norm2(&self.data)
    }

    pub fn scaled(&self, factor: f64) -> Mat {
        Mat::from_parts(self.rows, self.cols, self.data.iter().map(|v| v * factor).collect())
    }

    /// Element-wise `self - other`.
    pub fn sub(&self, other: &Mat) -> Result<Mat> {
        self.zip_with(other, |a, b| a - b)
    }

    /// Element-wise `self + other`.
    pub fn add(&self, other: &Mat) -> Result<Mat> {
        self.zip_with(other, |a, b| a + b)
    }

    fn zip_with(&self, other: &Mat, f: impl Fn(f64, f64) -> f64) -> Result<Mat> {
        if self.shape() != other.shape() {
            return Err(Error::Dimension(format!(
                "element-wise operation on {}x{} and {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let data = self.data.iter().zip(&other.data).map(|(a, b)| f(*a, *b)).collect();
        Ok(Mat::from_parts(self.rows, self.cols, data))
    }

    /// Largest absolute entry-wise difference. Shapes must agree.
    pub fn max_abs_diff(&self, other: &Mat) -> Result<f64> {
        Ok(self.sub(other)?.data.iter().fold(0.0, |m, v| m.max(v.abs())))
    }
}

/// `‖a − b‖_F / ‖b‖_F`, or the absolute error when `b` is zero.
pub fn relative_error(a: &Mat, b: &Mat) -> Result<f64> {
    let diff = a.sub(b)?.frobenius_norm();
    let scale = b.frobenius_norm();
    Ok(if scale == 0.0 { diff } else { diff / scale })
}

/// Standard matrix product.
pub fn matmul(a: &Mat, b: &Mat) -> Result<Mat> {
    if a.cols != b.rows {
        return Err(Error::Dimension(format!(
            "cannot multiply {}x{} by {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    #[cfg(target_arch = "x86_64")]
    if std::arch::is_x86_feature_detected!("avx2") {
        // SAFETY: AVX2 support was just detected.
        return Ok(unsafe { matmul_avx2(a, b) });
    }
    Ok(matmul_impl(a, b))
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2")]
unsafe fn matmul_avx2(a: &Mat, b: &Mat) -> Mat {
    matmul_impl(a, b)
}

#[inline(always)]
fn matmul_impl(a: &Mat, b: &Mat) -> Mat {
    let (m, inner, n) = (a.rows, a.cols, b.cols);
    let mut out = vec![0.0; m * n];
    if n == 1 {
        for (i, o) in out.iter_mut().enumerate() {
            *o = dot(a.row(i), &b.data);
        }
        return Mat::from_parts(m, 1, out);
    }
    // Panels of B rows stay cache-resident while every output row is swept.
    // Each output entry still accumulates over k in ascending order.
    let panel = (1 << 17) / (n * 8).max(1);
    let panel = panel.clamp(1, inner);
    let mut k0 = 0;
    while k0 < inner {
        let k1 = (k0 + panel).min(inner);
        for (i, out_row) in out.chunks_exact_mut(n).enumerate() {
            let a_row = &a.data[i * inner..(i + 1) * inner];
            for (k, &aik) in a_row.iter().enumerate().take(k1).skip(k0) {
                // Skipping exact zeros leaves every sum bit-identical.
                if aik != 0.0 {
                    axpy(out_row, aik, &b.data[k * n..(k + 1) * n]);
                }
            }
        }
        k0 = k1;
    }
    Mat::from_parts(m, n, out)
}

pub fn transpose(a: &Mat) -> Mat {
    let (m, n) = a.shape();
    let mut out = vec![0.0; m * n];
    const B: usize = 32;
    for i0 in (0..m).step_by(B) {
        for j0 in (0..n).step_by(B) {
            for i in i0..(i0 + B).min(m) {
                for j in j0..(j0 + B).min(n) {
                    out[j * m + i] = a.data[i * n + j];
                }
            }
        }
    }
    Mat::from_parts(n, m, out)
}

/// Kronecker product: block `(i, j)` of the result is `a[i][j] * b`.
pub fn kron(a: &Mat, b: &Mat) -> Result<Mat> {
    let overflow = || {
        Error::Size(format!(
            "kron of {}x{} and {}x{} overflows the index type",
            a.rows, a.cols, b.rows, b.cols
        ))
    };
    let rows = a.rows.checked_mul(b.rows).ok_or_else(overflow)?;
    let cols = a.cols.checked_mul(b.cols).ok_or_else(overflow)?;
    let len = rows.checked_mul(cols).ok_or_else(overflow)?;
    if len.checked_mul(std::mem::size_of::<f64>()).is_none_or(|bytes| bytes > isize::MAX as usize) {
        return Err(overflow());
    }
    let mut out = vec![0.0; len];
    for ia in 0..a.rows {
        for ib in 0..b.rows {
            let out_row = &mut out[(ia * b.rows + ib) * cols..(ia * b.rows + ib + 1) * cols];
            let b_row = b.row(ib);
            for (ja, chunk) in out_row.chunks_exact_mut(b.cols).enumerate() {
                let s = a.get(ia, ja);
                for (o, v) in chunk.iter_mut().zip(b_row) {
                    *o = s * v;
                }
            }
        }
    }
    Ok(Mat::from_parts(rows, cols, out))
}

/// Stacks the rows of `x` into a single column.
pub fn vec_row(x: &Mat) -> Mat {
    Mat::from_parts(x.rows * x.cols, 1, x.data.clone())
}

/// Inverse of [`vec_row`].
pub fn unvec_row(v: &Mat, rows: usize, cols: usize) -> Result<Mat> {
    if v.cols != 1 || Some(v.rows) != rows.checked_mul(cols) || rows == 0 || cols == 0 {
        return Err(Error::Dimension(format!(
            "cannot reshape {}x{} into {rows}x{cols}",
            v.rows, v.cols
        )));
    }
    Ok(Mat::from_parts(rows, cols, v.data.clone()))
}
