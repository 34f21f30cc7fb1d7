//! Truncated Moore–Penrose pseudo-inverse.

use super::{matmul, svd, Mat};
use crate::error::{Error, Result};

/// Fraction of the numerically nonzero singular values kept when forming a
/// truncated pseudo-inverse. Always in `(0, 1]`; `1` keeps all of them.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct TruncationRate(f64);

impl TruncationRate {
    pub const FULL: TruncationRate = TruncationRate(1.0);

    pub fn new(r: f64) -> Result<Self> {
        if r > 0.0 && r <= 1.0 {
            Ok(Self(r))
        } else {
            Err(Error::Invariant(format!("truncation rate must lie in (0, 1], got {r}")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl Default for TruncationRate {
    fn default() -> Self {
        Self::FULL
    }
}

/// Singular values at or below this are treated as zero:
/// `ε · σ_max · max(rows, cols)`.
pub fn rank_threshold(sigma_max: f64, rows: usize, cols: usize) -> f64 {
    f64::EPSILON * sigma_max * rows.max(cols) as f64
}

/// How many of `sigma` (sorted non-increasing) a truncated pseudo-inverse keeps:
/// `max(1, round(r · k_eff))`, where `k_eff` counts the values above
/// [`rank_threshold`]. Zero only for the zero matrix.
pub fn retained_count(sigma: &[f64], rows: usize, cols: usize, rate: TruncationRate) -> usize {
    let k_eff = effective_rank(sigma, rows, cols);
    if k_eff == 0 {
        return 0;
    }
    ((rate.0 * k_eff as f64).round() as usize).clamp(1, k_eff)
}

fn effective_rank(sigma: &[f64], rows: usize, cols: usize) -> usize {
    let Some(&top) = sigma.first() else { return 0 };
    let threshold = rank_threshold(top, rows, cols);
    sigma.iter().take_while(|s| **s > threshold).count()
}

/// Number of singular values above [`rank_threshold`].
pub fn numerical_rank(m: &Mat) -> Result<usize> {
    let f = svd(m)?;
    Ok(effective_rank(&f.sigma, m.rows(), m.cols()))
}

/// Truncated pseudo-inverse `V_k · diag(1/σ_k) · U_kᵀ`.
///
/// The `k` largest singular values are kept, with `k` given by
/// [`retained_count`]. With `rate = 1` this is the exact Moore–Penrose
/// inverse. The zero matrix maps to the zero matrix of transposed shape.
pub fn pinv(m: &Mat, rate: TruncationRate) -> Result<Mat> {
    let (rows, cols) = m.shape();
    let f = svd(m)?;
    let keep = retained_count(&f.sigma, rows, cols, rate);
    if keep == 0 {
        return Ok(Mat::zeros(cols, rows));
    }
    let scaled_v = Mat::from_fn(cols, keep, |i, j| f.v.get(i, j) / f.sigma[j]);
    let u_t = Mat::from_fn(keep, rows, |i, j| f.u.get(j, i));
    let out = matmul(&scaled_v, &u_t)?;
    if out.data().iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("pseudo-inverse overflowed".into()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{relative_error, transpose};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn close(a: &Mat, b: &Mat, tol: f64) -> bool {
        a.max_abs_diff(b).unwrap() <= tol
    }

    #[test]
    fn rate_validation() {
        assert!(TruncationRate::new(0.0).is_err());
        assert!(TruncationRate::new(1.0001).is_err());
        assert!(TruncationRate::new(f64::NAN).is_err());
        assert!(TruncationRate::new(-0.5).is_err());
        assert_eq!(TruncationRate::new(1.0).unwrap(), TruncationRate::FULL);
        assert!(TruncationRate::new(1e-9).is_ok());
    }

    #[test]
    fn trivial_pseudo_inverses() {
        let full = TruncationRate::FULL;
        assert!(close(&pinv(&Mat::identity(4), full).unwrap(), &Mat::identity(4), 1e-15));
        let d = pinv(&Mat::from_diag(&[2.0, 0.0]), full).unwrap();
        assert!(close(&d, &Mat::from_diag(&[0.5, 0.0]), 1e-15));
        let ones = Mat::from_fn(2, 2, |_, _| 1.0);
        assert!(close(&pinv(&ones, full).unwrap(), &ones.scaled(0.25), 1e-15));
    }

    #[test]
    fn zero_matrix_maps_to_transposed_zero() {
        let p = pinv(&Mat::zeros(3, 5), TruncationRate::FULL).unwrap();
        assert_eq!(p, Mat::zeros(5, 3));
    }

    #[test]
    fn retained_count_rounds_and_floors_at_one() {
        let sigma = [10.0, 5.0, 3.0, 1.0, 0.0];
        let r = |x| TruncationRate::new(x).unwrap();
        assert_eq!(retained_count(&sigma, 5, 5, r(1.0)), 4);
        assert_eq!(retained_count(&sigma, 5, 5, r(0.5)), 2);
        assert_eq!(retained_count(&sigma, 5, 5, r(0.6)), 2); // 2.4 rounds down
        assert_eq!(retained_count(&sigma, 5, 5, r(0.625)), 3); // 2.5 rounds away from zero
        assert_eq!(retained_count(&sigma, 5, 5, r(0.01)), 1);
        assert_eq!(retained_count(&[0.0, 0.0], 2, 2, r(1.0)), 0);
        // 32 x 32 at 0.9 keeps round(28.8) = 29.
        let s32: Vec<f64> = (0..32).map(|i| 32.0 - i as f64).collect();
        assert_eq!(retained_count(&s32, 32, 32, r(0.9)), 29);
    }

    #[test]
    fn truncated_inverse_drops_smallest_directions() {
        let m = Mat::from_diag(&[4.0, 2.0, 1.0, 0.5]);
        let p = pinv(&m, TruncationRate::new(0.5).unwrap()).unwrap();
        assert!(close(&p, &Mat::from_diag(&[0.25, 0.5, 0.0, 0.0]), 1e-15));
    }

    #[test]
    fn penrose_conditions_random_6x4() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = Mat::from_fn(6, 4, |_, _| rng.gen_range(-1.0..1.0));
        let p = pinv(&m, TruncationRate::FULL).unwrap();
        let mpm = matmul(&matmul(&m, &p).unwrap(), &m).unwrap();
        let pmp = matmul(&matmul(&p, &m).unwrap(), &p).unwrap();
        let mp = matmul(&m, &p).unwrap();
        let pm = matmul(&p, &m).unwrap();
        assert!(relative_error(&mpm, &m).unwrap() <= 1e-9);
        assert!(relative_error(&pmp, &p).unwrap() <= 1e-9);
        assert!(close(&mp, &transpose(&mp), 1e-9));
        assert!(close(&pm, &transpose(&pm), 1e-9));
    }
}
