//! Image recovery from bucket signals.
//!
//! Every function returns the raw, unclamped estimate; turning it into an
//! [`ImageGray`](crate::forward::ImageGray) is left to the caller.

use crate::error::{Error, Result};
use crate::forward::Ciphertext;
use crate::linalg::{matmul, pinv, transpose, Mat, TruncationRate};

fn column_for(a: &Mat, y: &Mat) -> Result<()> {
    if y.cols() != 1 || a.rows() != y.rows() {
        return Err(Error::Dimension(format!(
            "need a {}x1 signal for a {}x{} matrix, got {}x{}",
            a.rows(),
            a.rows(),
            a.cols(),
            y.rows(),
            y.cols()
        )));
    }
    Ok(())
}

/// Correlation estimate `Aᵀ · y`, unnormalized.
pub fn reconstruct_correlation(a: &Mat, y: &Mat) -> Result<Mat> {
    column_for(a, y)?;
    matmul(&transpose(a), y)
}

/// `Lᵀ · Y · R`, the exact inverse of the forward model when L and R are
/// orthogonal.
pub fn reconstruct_orthogonal(l: &Mat, y: &Ciphertext, r: &Mat) -> Result<Mat> {
    matmul(&matmul(&transpose(l), y.mat())?, r)
}

/// `pinv(L, r1) · Y · pinv(R, r2)ᵀ`.
pub fn reconstruct_factored(
    l: &Mat,
    y: &Ciphertext,
    r: &Mat,
    r1: TruncationRate,
    r2: TruncationRate,
) -> Result<Mat> {
    let y = y.mat();
    if l.rows() != y.rows() || r.rows() != y.cols() {
        return Err(Error::Dimension(format!(
            "Y is {}x{} but L has {} rows and R has {}",
            y.rows(),
            y.cols(),
            l.rows(),
            r.rows()
        )));
    }
    let pl = pinv(l, r1)?;
    let pr = pinv(r, r2)?;
    apply_factored(&pl, y, &pr)
}

/// `pl · Y · prᵀ` for precomputed factor pseudo-inverses.
pub fn apply_factored(pl: &Mat, y: &Mat, pr: &Mat) -> Result<Mat> {
    matmul(&matmul(pl, y)?, &transpose(pr))
}

/// `pinv(A, r) · y` with the full measurement matrix.
pub fn reconstruct_full(a: &Mat, y: &Mat, r: TruncationRate) -> Result<Mat> {
    column_for(a, y)?;
    matmul(&pinv(a, r)?, y)
}
