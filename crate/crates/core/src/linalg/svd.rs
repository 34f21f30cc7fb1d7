//! Singular value decomposition.
//!
//! Golub–Kahan: Householder bidiagonalization followed by implicit-shift QR
//! on the bidiagonal. The QR sweeps only touch the two bidiagonal vectors;
//! every plane rotation they produce is appended to a log and replayed onto
//! the singular-vector matrices afterwards, one narrow column strip at a
//! time. Replaying strip by strip performs the same floating-point
//! operations in the same order as rotating whole rows, so results do not
//! depend on the strip width, but each strip stays in cache for the whole
//! replay.
//!
//! Everything is single-threaded and deterministic: identical input bits
//! give identical factors.

use super::kernels::{axpy, dot, norm2, two_rows};
use super::{transpose, Mat};
use crate::error::{Error, Result};

/// Iteration cap for the bidiagonal QR phase, per row of the bidiagonal.
///
/// A decomposition of an `n`-column bidiagonal gives up with
/// [`Error::Numerical`] after `MAX_QR_SWEEPS_PER_ROW * n` implicit QR sweeps.
/// Typical inputs need about two sweeps per singular value.
pub const MAX_QR_SWEEPS_PER_ROW: usize = 40;

/// Thin SVD factors `m = u · diag(sigma) · vᵀ`.
///
/// For an `m × n` input, `u` is `m × k`, `v` is `n × k` and `sigma` has
/// `k = min(m, n)` entries, sorted non-increasing. The first nonzero entry
/// of every column of `u` is positive.
#[derive(Debug, Clone, PartialEq)]
pub struct SvdFactors {
    pub u: Mat,
    pub sigma: Vec<f64>,
    pub v: Mat,
}

impl SvdFactors {
    /// Multiplies the factors back together.
    pub fn reconstruct(&self) -> Mat {
        let (m, k) = self.u.shape();
        let us = Mat::from_fn(m, k, |i, j| self.u.get(i, j) * self.sigma[j]);
        super::matmul(&us, &transpose(&self.v)).expect("conforming factors")
    }
}

pub fn svd(m: &Mat) -> Result<SvdFactors> {
    let (rows, cols) = m.shape();
    // Work on the tall orientation; a wide matrix is decomposed via its transpose.
    let (mut ut, sigma, mut vt) = if rows >= cols {
        let d = tall_svd(rows, cols, m.data().to_vec())?;
        (d.ut, d.sigma, d.vt)
    } else {
        let d = tall_svd(cols, rows, transpose(m).into_data())?;
        (d.vt, d.sigma, d.ut)
    };
    let k = sigma.len();

    for i in 0..k {
        let first = ut[i * rows..(i + 1) * rows].iter().find(|v| **v != 0.0).copied();
        if first.is_some_and(|v| v < 0.0) {
            ut[i * rows..(i + 1) * rows].iter_mut().for_each(|v| *v = -*v);
            vt[i * cols..(i + 1) * cols].iter_mut().for_each(|v| *v = -*v);
        }
    }

    Ok(SvdFactors {
        u: transpose(&Mat::from_parts(k, rows, ut)),
        sigma,
        v: transpose(&Mat::from_parts(k, cols, vt)),
    })
}

/// Factors of an `m × n` matrix with `m >= n`, singular vectors stored as rows.
struct RowFactors {
    /// `n × m`, row `i` is the left singular vector for `sigma[i]`.
    ut: Vec<f64>,
    sigma: Vec<f64>,
    /// `n × n`, row `i` is the right singular vector for `sigma[i]`.
    vt: Vec<f64>,
}

struct Reflector {
    tau: f64,
    /// Householder vector with implicit leading 1 stored explicitly.
    v: Vec<f64>,
}

/// Returns `(reflector, beta)` with `(I − τ v vᵀ) x = beta · e₁`.
fn householder(x: &[f64]) -> (Reflector, f64) {
    let alpha = x[0];
    let xnorm = norm2(&x[1..]);
    let mut v = vec![0.0; x.len()];
    v[0] = 1.0;
    if xnorm == 0.0 {
        return (Reflector { tau: 0.0, v }, alpha);
    }
    let mag = norm2(&[alpha, xnorm]);
    let beta = if alpha >= 0.0 { -mag } else { mag };
    let tau = (beta - alpha) / beta;
    let scale = 1.0 / (alpha - beta);
    for (vi, xi) in v[1..].iter_mut().zip(&x[1..]) {
        *vi = xi * scale;
    }
    (Reflector { tau, v }, beta)
}

fn tall_svd(m: usize, n: usize, a: Vec<f64>) -> Result<RowFactors> {
    #[cfg(target_arch = "x86_64")]
    if std::arch::is_x86_feature_detected!("avx2") {
        // SAFETY: the CPU supports AVX2, checked just above.
        return unsafe { tall_svd_avx2(m, n, a) };
    }
    tall_svd_impl(m, n, a)
}

/// Same code compiled with AVX2 enabled. Rust never fuses multiply-add on
/// its own, so both builds produce identical bits.
#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2")]
unsafe fn tall_svd_avx2(m: usize, n: usize, a: Vec<f64>) -> Result<RowFactors> {
    tall_svd_impl(m, n, a)
}

#[inline(always)]
fn tall_svd_impl(m: usize, n: usize, mut a: Vec<f64>) -> Result<RowFactors> {
    debug_assert!(m >= n && n >= 1);
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n.saturating_sub(1)];
    let mut left = Vec::with_capacity(n);
    let mut right = Vec::with_capacity(n.saturating_sub(1));
    let mut work = vec![0.0; n];

    // Bidiagonalize: A = Q B Pᵀ. For each j the left reflector's rank-one
    // update and the right reflector are applied in a single pass over the
    // trailing rows; the right reflector only needs row j, which is updated first.
    for j in 0..n {
        let col: Vec<f64> = (j..m).map(|i| a[i * n + j]).collect();
        let (h, beta) = householder(&col);
        d[j] = beta;
        if j + 1 == n {
            left.push(h);
            break;
        }
        let w = &mut work[j + 1..n];
        if h.tau != 0.0 {
            // w = vᵀ A[j.., j+1..]
            w.fill(0.0);
            for (r, vr) in h.v.iter().enumerate() {
                axpy(w, *vr, &a[(j + r) * n + j + 1..(j + r + 1) * n]);
            }
            axpy(&mut a[j * n + j + 1..(j + 1) * n], -h.tau * h.v[0], w);
        }
        let (g, beta) = householder(&a[j * n + j + 1..(j + 1) * n]);
        e[j] = beta;
        for r in 1..m - j {
            let row = &mut a[(j + r) * n + j + 1..(j + r + 1) * n];
            if h.tau != 0.0 {
                axpy(row, -h.tau * h.v[r], w);
            }
            if g.tau != 0.0 {
                let s = dot(row, &g.v);
                if s != 0.0 {
                    axpy(row, -g.tau * s, &g.v);
                }
            }
        }
        left.push(h);
        right.push(g);
    }
    drop(a);

    // Ut = first n rows of Qᵀ = [I 0] H_{n−1} ⋯ H_0. Rows before j are still
    // unit vectors when H_j is applied, so only rows j.. are touched.
    let mut ut = vec![0.0; n * m];
    for i in 0..n {
        ut[i * m + i] = 1.0;
    }
    for (j, h) in left.iter().enumerate().rev() {
        if h.tau == 0.0 {
            continue;
        }
        for i in j..n {
            let row = &mut ut[i * m + j..(i + 1) * m];
            let s = dot(row, &h.v);
            if s != 0.0 {
                axpy(row, -h.tau * s, &h.v);
            }
        }
    }
    // Vt = Pᵀ = G_{n−2} ⋯ G_0, with G_j acting on coordinates j+1..
    let mut vt = vec![0.0; n * n];
    for i in 0..n {
        vt[i * n + i] = 1.0;
    }
    for (j, h) in right.iter().enumerate().rev() {
        if h.tau == 0.0 {
            continue;
        }
        for i in j + 1..n {
            let row = &mut vt[i * n + j + 1..(i + 1) * n];
            let s = dot(row, &h.v);
            if s != 0.0 {
                axpy(row, -h.tau * s, &h.v);
            }
        }
    }

    let mut left_log = RotationLog::new(m);
    let mut right_log = RotationLog::new(n);
    bidiagonal_qr(&mut d, &mut e, &mut ut, &mut left_log, &mut vt, &mut right_log)?;
    left_log.flush(&mut ut);
    right_log.flush(&mut vt);

    for (i, di) in d.iter_mut().enumerate() {
        if *di < 0.0 {
            *di = -*di;
            vt[i * n..(i + 1) * n].iter_mut().for_each(|v| *v = -*v);
        }
    }

    // Stable descending sort keeps equal values in their original order.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| d[y].total_cmp(&d[x]));
    let sigma = order.iter().map(|&i| d[i]).collect();
    let mut ut_sorted = Vec::with_capacity(n * m);
    let mut vt_sorted = Vec::with_capacity(n * n);
    for &i in &order {
        ut_sorted.extend_from_slice(&ut[i * m..(i + 1) * m]);
        vt_sorted.extend_from_slice(&vt[i * n..(i + 1) * n]);
    }
    Ok(RowFactors { ut: ut_sorted, sigma, vt: vt_sorted })
}

/// Buffered plane rotations on the rows of a row-major matrix.
///
/// Entry `(a, b, c, s)` means `row_a ← c·row_a + s·row_b`,
/// `row_b ← c·row_b − s·row_a`.
struct RotationLog {
    width: usize,
    strip: usize,
    entries: Vec<(u32, u32, f64, f64)>,
}

impl RotationLog {
    const CAPACITY: usize = 1 << 18;
    /// Columns per replay strip; 64 doubles keep a 2048-row strip at 1 MiB.
    const STRIP: usize = 64;

    fn new(width: usize) -> Self {
        Self { width, strip: Self::STRIP, entries: Vec::new() }
    }

    #[inline(always)]
    fn push(&mut self, target: &mut [f64], a: usize, b: usize, c: f64, s: f64) {
        self.entries.push((a as u32, b as u32, c, s));
        if self.entries.len() >= Self::CAPACITY {
            self.flush(target);
        }
    }

    #[inline(always)]
    fn flush(&mut self, target: &mut [f64]) {
        let w = self.width;
        let mut carry = vec![0.0; self.strip];
        let mut c0 = 0;
        while c0 < w {
            let c1 = (c0 + self.strip).min(w);
            replay_strip(&self.entries, target, w, c0..c1, &mut carry[..c1 - c0]);
            c0 = c1;
        }
        self.entries.clear();
    }
}

/// Applies `entries` in order to columns `cols` of every row.
///
/// QR sweeps emit chains `(k, k+1), (k+1, k+2), …` where each rotation's
/// second row is the next one's first; the shared row is kept in `carry`
/// instead of being written back and reloaded.
#[inline(always)]
fn replay_strip(
    entries: &[(u32, u32, f64, f64)],
    target: &mut [f64],
    width: usize,
    cols: std::ops::Range<usize>,
    carry: &mut [f64],
) {
    let mut idx = 0;
    while idx < entries.len() {
        let (first, _, _, _) = entries[idx];
        let start = first as usize * width;
        carry.copy_from_slice(&target[start + cols.start..start + cols.end]);
        loop {
            let (a, b, c, s) = entries[idx];
            let (row_a, row_b) = two_rows(target, width, a as usize, b as usize);
            let (out_a, y) = (&mut row_a[cols.clone()], &mut row_b[cols.clone()]);
            for ((o, x), yi) in out_a.iter_mut().zip(carry.iter_mut()).zip(y.iter()) {
                let t = *x;
                *o = c * t + s * *yi;
                *x = c * *yi - s * t;
            }
            idx += 1;
            if idx == entries.len() || entries[idx].0 != b {
                y.copy_from_slice(carry);
                break;
            }
        }
    }
}

/// `(c, s, r)` with `c·y + s·z = r` and `c·z − s·y = 0`.
#[inline]
fn givens(y: f64, z: f64) -> (f64, f64, f64) {
    if z == 0.0 {
        return (1.0, 0.0, y);
    }
    let r = y.hypot(z);
    (y / r, z / r, r)
}

/// Diagonalizes the upper bidiagonal `(d, e)` in place, logging the left
/// rotations against `ut` and the right ones against `vt`.
#[inline(always)]
fn bidiagonal_qr(
    d: &mut [f64],
    e: &mut [f64],
    ut: &mut [f64],
    left: &mut RotationLog,
    vt: &mut [f64],
    right: &mut RotationLog,
) -> Result<()> {
    let n = d.len();
    if n < 2 {
        return Ok(());
    }
    let eps = f64::EPSILON;
    let anorm = (0..n).fold(0.0f64, |acc, i| {
        acc.max(d[i].abs() + if i + 1 < n { e[i].abs() } else { 0.0 })
    });
    if anorm == 0.0 {
        return Ok(());
    }
    let tiny = eps * anorm;
    let max_sweeps = MAX_QR_SWEEPS_PER_ROW * n;
    let mut sweeps = 0;
    let mut hi = n - 1;

    loop {
        for i in 0..hi {
            if e[i].abs() <= eps * (d[i].abs() + d[i + 1].abs()) {
                e[i] = 0.0;
            }
        }
        while hi > 0 && e[hi - 1] == 0.0 {
            hi -= 1;
        }
        if hi == 0 {
            return Ok(());
        }
        let mut lo = hi - 1;
        while lo > 0 && e[lo - 1] != 0.0 {
            lo -= 1;
        }

        // A negligible diagonal entry decouples the block after one chase.
        if let Some(i) = (lo..hi).find(|&i| d[i].abs() <= tiny) {
            d[i] = 0.0;
            let mut f = e[i];
            e[i] = 0.0;
            for j in i + 1..=hi {
                let (c, s, r) = givens(d[j], f);
                d[j] = r;
                left.push(ut, j, i, c, s);
                if j < hi {
                    f = -s * e[j];
                    e[j] *= c;
                }
            }
            continue;
        }
        if d[hi].abs() <= tiny {
            d[hi] = 0.0;
            let mut f = e[hi - 1];
            e[hi - 1] = 0.0;
            for j in (lo..hi).rev() {
                let (c, s, r) = givens(d[j], f);
                d[j] = r;
                right.push(vt, j, hi, c, s);
                if j > lo {
                    f = -s * e[j - 1];
                    e[j - 1] *= c;
                }
            }
            continue;
        }

        sweeps += 1;
        if sweeps > max_sweeps {
            return Err(Error::Numerical(format!(
                "bidiagonal QR did not converge within {max_sweeps} sweeps"
            )));
        }

        // Wilkinson shift from the trailing 2x2 of BᵀB.
        let (dm, dn, em) = (d[hi - 1], d[hi], e[hi - 1]);
        let ep = if hi - 1 > lo { e[hi - 2] } else { 0.0 };
        let t11 = dm * dm + ep * ep;
        let t12 = dm * em;
        let t22 = dn * dn + em * em;
        let delta = 0.5 * (t11 - t22);
        let denom = delta + delta.signum() * delta.hypot(t12);
        let shift = if denom == 0.0 { t22 } else { t22 - t12 * t12 / denom };

        let mut y = d[lo] * d[lo] - shift;
        let mut z = d[lo] * e[lo];
        for k in lo..hi {
            let (c, s, r) = givens(y, z);
            if k > lo {
                e[k - 1] = r;
            }
            let (dk, ek, dk1) = (d[k], e[k], d[k + 1]);
            d[k] = c * dk + s * ek;
            e[k] = c * ek - s * dk;
            let bulge = s * dk1;
            d[k + 1] = c * dk1;
            right.push(vt, k, k + 1, c, s);

            let (c, s, r) = givens(d[k], bulge);
            d[k] = r;
            let (ek, dk1) = (e[k], d[k + 1]);
            e[k] = c * ek + s * dk1;
            d[k + 1] = c * dk1 - s * ek;
            left.push(ut, k, k + 1, c, s);
            if k + 1 < hi {
                y = e[k];
                z = s * e[k + 1];
                e[k + 1] *= c;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{matmul, relative_error};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rows: usize, cols: usize, seed: u64) -> Mat {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Mat::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0))
    }

    fn orthonormality_error(q: &Mat) -> f64 {
        let g = matmul(&transpose(q), q).unwrap();
        g.sub(&Mat::identity(q.cols())).unwrap().frobenius_norm()
    }

    fn check(m: &Mat) {
        let f = svd(m).unwrap();
        let k = m.rows().min(m.cols());
        assert_eq!(f.sigma.len(), k);
        assert_eq!(f.u.shape(), (m.rows(), k));
        assert_eq!(f.v.shape(), (m.cols(), k));
        assert!(f.sigma.windows(2).all(|w| w[0] >= w[1]));
        assert!(f.sigma.iter().all(|s| *s >= 0.0));
        assert!(orthonormality_error(&f.u) <= 1e-10, "u not orthonormal");
        assert!(orthonormality_error(&f.v) <= 1e-10, "v not orthonormal");
        assert!(relative_error(&f.reconstruct(), m).unwrap() <= 1e-10);
        for j in 0..k {
            let first = (0..m.rows()).map(|i| f.u.get(i, j)).find(|v| *v != 0.0);
            assert!(first.is_none_or(|v| v > 0.0));
        }
    }

    #[test]
    fn diagonal_and_permuted_diagonal() {
        let f = svd(&Mat::from_diag(&[3.0, 2.0])).unwrap();
        assert_eq!(f.sigma, vec![3.0, 2.0]);
        let f = svd(&Mat::from_rows(&[[0.0, 2.0], [1.0, 0.0]])).unwrap();
        assert!((f.sigma[0] - 2.0).abs() < 1e-15 && (f.sigma[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn random_shapes_reconstruct() {
        check(&random(8, 5, 1));
        check(&random(5, 8, 2));
        check(&random(1, 1, 3));
        check(&random(1, 6, 4));
        check(&random(6, 1, 5));
        check(&random(40, 40, 6));
        check(&random(33, 17, 7));
    }

    #[test]
    fn rank_deficient_and_degenerate_inputs() {
        check(&Mat::zeros(4, 3));
        check(&Mat::from_fn(5, 5, |_, _| 1.0));
        check(&Mat::from_diag(&[0.0, 1.0, 0.0, 2.0]));
        // Outer product: rank one.
        let a = random(6, 1, 8);
        let b = random(1, 4, 9);
        check(&matmul(&a, &b).unwrap());
        // Binary matrix with duplicated rows.
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let base = Mat::from_fn(3, 7, |_, _| if rng.gen_bool(0.3) { 1.0 } else { 0.0 });
        check(&Mat::from_fn(9, 7, |i, j| base.get(i % 3, j)));
    }

    #[test]
    fn graded_singular_values() {
        let q1 = svd(&random(6, 6, 11)).unwrap().u;
        let q2 = svd(&random(6, 6, 12)).unwrap().v;
        let s = Mat::from_diag(&[1e6, 1e3, 1.0, 1e-3, 1e-6, 1e-9]);
        let m = matmul(&matmul(&q1, &s).unwrap(), &transpose(&q2)).unwrap();
        let f = svd(&m).unwrap();
        for (got, want) in f.sigma.iter().zip([1e6, 1e3, 1.0, 1e-3, 1e-6]) {
            assert!((got - want).abs() <= 1e-9 * 1e6, "{got} vs {want}");
        }
        check(&m);
    }

    #[test]
    fn deterministic_bits() {
        let m = random(20, 13, 13);
        assert_eq!(svd(&m).unwrap(), svd(&m).unwrap());
    }

    #[test]
    fn strip_width_does_not_change_bits() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let width = 150;
        let base: Vec<f64> = (0..10 * width).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let rots: Vec<(usize, usize, f64)> = (0..500)
            .map(|_| {
                let a = rng.gen_range(0..10);
                let b = (a + rng.gen_range(1..10)) % 10;
                (a, b, rng.gen_range(0.0..std::f64::consts::TAU))
            })
            .collect();
        let replay = |strip: usize| {
            let mut target = base.clone();
            let mut log = RotationLog::new(width);
            log.strip = strip;
            for &(a, b, t) in &rots {
                log.push(&mut target, a, b, t.cos(), t.sin());
            }
            log.flush(&mut target);
            target
        };
        assert_eq!(replay(3), replay(width));
        assert_eq!(replay(64), replay(1));
    }

    #[test]
    fn wide_matrix_exercises_multiple_strips() {
        check(&random(150, 70, 15));
        check(&random(70, 150, 16));
    }
}
