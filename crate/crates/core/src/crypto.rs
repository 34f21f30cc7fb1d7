//! Permutation encryption on top of the two-sided forward model.
//!
//! The variant decides whether P1 goes before or after L, and whether P2
//! goes before or after Rᵀ. Writing the ciphertext as `Y = Lv · X · Rvᵀ`:
//!
//! | variant | Lv | Rv |
//! |---|---|---|
//! | 1 | P1·L | R·P2ᵀ |
//! | 2 | P1·L | P2ᵀ·R |
//! | 3 | L·P1 | R·P2ᵀ |
//! | 4 | L·P1 | P2ᵀ·R |
//!
//! The equivalent vectorized measurement matrix is `Lv ⊗ Rv`.

use crate::error::{Error, Result};
use crate::forward::{bucket_forward, Ciphertext};
use crate::keys::{perm_to_matrix, KeyBundle, Variant};
use crate::linalg::{kron, matmul, pinv, transpose, Mat, TruncationRate};
use crate::reconstruct::apply_factored;

/// `(Lv, Rv)` for the key's variant.
fn effective_factors(key: &KeyBundle) -> Result<(Mat, Mat)> {
    let v = key.variant();
    let p1 = perm_to_matrix(key.p1());
    let p2t = transpose(&perm_to_matrix(key.p2()));
    let lv = if v.p1_inner() { matmul(key.l(), &p1)? } else { matmul(&p1, key.l())? };
    let rv = if v.p2_outer() { matmul(&p2t, key.r())? } else { matmul(key.r(), &p2t)? };
    Ok((lv, rv))
}

fn check_image(x: &Mat, key: &KeyBundle) -> Result<()> {
    let (h, w) = key.image_shape();
    if x.shape() != (h, w) {
        return Err(Error::Dimension(format!(
            "key expects a {h}x{w} image, got {}x{}",
            x.rows(),
            x.cols()
        )));
    }
    Ok(())
}

/// Ciphertext for the key's variant.
pub fn encrypt(x: &Mat, key: &KeyBundle) -> Result<Ciphertext> {
    check_image(x, key)?;
    let (lv, rv) = effective_factors(key)?;
    bucket_forward(&lv, x, &rv)
}

/// Full `(m1·m2) x (m1·m2)` measurement matrix of the key's variant.
pub fn measurement_matrix(key: &KeyBundle) -> Result<Mat> {
    let (lv, rv) = effective_factors(key)?;
    kron(&lv, &rv)
}

/// Undoes [`encrypt`] with truncated pseudo-inverses of L and R. The
/// permutations are removed in the order the key's variant prescribes.
/// A key with the wrong variant yields scrambled output, not an error.
pub fn decrypt(ct: &Ciphertext, key: &KeyBundle, r1: TruncationRate, r2: TruncationRate) -> Result<Mat> {
    check_image(ct.mat(), key)?;
    let pl = pinv(key.l(), r1)?;
    let pr = pinv(key.r(), r2)?;
    decrypt_with(ct, key, key.variant(), &pl, &pr)
}

fn decrypt_with(ct: &Ciphertext, key: &KeyBundle, v: Variant, pl: &Mat, pr: &Mat) -> Result<Mat> {
    let p1t = transpose(&perm_to_matrix(key.p1()));
    let p2t = transpose(&perm_to_matrix(key.p2()));
    let prt = transpose(pr);
    let left = if v.p1_inner() { matmul(&p1t, pl)? } else { matmul(pl, &p1t)? };
    let right = if v.p2_outer() { matmul(&p2t, &prt)? } else { matmul(&prt, &p2t)? };
    matmul(&matmul(&left, ct.mat())?, &right)
}

/// The plain factored reconstruction followed by the decryptions under
/// variants 1 to 4, in that order. Exactly one of the last four is correct
/// when the ciphertext came from this key's factors.
pub fn decrypt_grid(
    ct: &Ciphertext,
    key: &KeyBundle,
    r1: TruncationRate,
    r2: TruncationRate,
) -> Result<Vec<Mat>> {
    check_image(ct.mat(), key)?;
    let pl = pinv(key.l(), r1)?;
    let pr = pinv(key.r(), r2)?;
    let mut out = Vec::with_capacity(5);
    out.push(apply_factored(&pl, ct.mat(), &pr)?);
    for v in Variant::ALL {
        out.push(decrypt_with(ct, key, v, &pl, &pr)?);
    }
    Ok(out)
}
