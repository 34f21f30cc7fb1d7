//! Random speckle factors, permutations, and the secret key bundle.
//!
//! All randomness comes from [`ChaCha8Rng`] seeded through
//! `SeedableRng::seed_from_u64`. `keygen` feeds four consecutive seeds to
//! independent generators: `seed` for L, `seed + 1` for R, `seed + 2` for
//! P1 and `seed + 3` for P2 (wrapping on overflow).

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{numerical_rank, Mat};

/// How many times `keygen` re-draws a factor that is numerically singular.
pub const MAX_FULL_RANK_DRAWS: usize = 100;

/// A permutation of `0..n`. `pi[i] = j` puts a 1 at row `i`, column `j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PermutationVec {
    pi: Vec<usize>,
}

impl PermutationVec {
    pub fn new(pi: Vec<usize>) -> Result<Self> {
        let n = pi.len();
        if n == 0 {
            return Err(Error::Invariant("permutation must be non-empty".into()));
        }
        let mut seen = vec![false; n];
        for &j in &pi {
            if j >= n {
                return Err(Error::Invariant(format!("permutation index {j} out of range 0..{n}")));
            }
            if std::mem::replace(&mut seen[j], true) {
                return Err(Error::Invariant(format!("permutation index {j} repeated")));
            }
        }
        Ok(Self { pi })
    }

    pub fn identity(n: usize) -> Self {
        Self { pi: (0..n).collect() }
    }

    pub fn len(&self) -> usize {
        self.pi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pi.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.pi
    }
}

/// Encryption variant, i.e. where the permutations sit relative to L, X and Rᵀ.
///
/// | variant | ciphertext |
/// |---|---|
/// | 1 | P1·L·X·P2·Rᵀ |
/// | 2 | P1·L·X·Rᵀ·P2 |
/// | 3 | L·P1·X·P2·Rᵀ |
/// | 4 | L·P1·X·Rᵀ·P2 |
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    V1,
    V2,
    V3,
    V4,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::V1, Variant::V2, Variant::V3, Variant::V4];

    pub fn number(self) -> u8 {
        match self {
            Variant::V1 => 1,
            Variant::V2 => 2,
            Variant::V3 => 3,
            Variant::V4 => 4,
        }
    }

    /// P1 multiplies X directly (`L·P1·X`) rather than `L·X`.
    pub(crate) fn p1_inner(self) -> bool {
        matches!(self, Variant::V3 | Variant::V4)
    }

    /// P2 sits to the right of Rᵀ (`Rᵀ·P2`) rather than to its left.
    pub(crate) fn p2_outer(self) -> bool {
        matches!(self, Variant::V2 | Variant::V4)
    }
}

impl TryFrom<i64> for Variant {
    type Error = Error;

    fn try_from(v: i64) -> Result<Self> {
        match v {
            1 => Ok(Variant::V1),
            2 => Ok(Variant::V2),
            3 => Ok(Variant::V3),
            4 => Ok(Variant::V4),
            other => Err(Error::InvalidVariant(other)),
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.number())
    }
}

/// Everything needed to encrypt and decrypt: both binary speckle factors,
/// both permutations and the variant.
#[derive(Debug, Clone, PartialEq)]
pub struct KeyBundle {
    l: Mat,
    r: Mat,
    p1: PermutationVec,
    p2: PermutationVec,
    variant: Variant,
    seed: u64,
}

impl KeyBundle {
    /// Validates shapes and binary entries. Rank is not checked here, so
    /// hand-built keys may carry singular factors.
    pub fn new(
        l: Mat,
        r: Mat,
        p1: PermutationVec,
        p2: PermutationVec,
        variant: Variant,
        seed: u64,
    ) -> Result<Self> {
        for (name, m) in [("L", &l), ("R", &r)] {
            if !m.is_square() {
                return Err(Error::Invariant(format!(
                    "{name} must be square, got {}x{}",
                    m.rows(),
                    m.cols()
                )));
            }
            if !is_binary(m) {
                return Err(Error::Invariant(format!("{name} has entries other than 0 and 1")));
            }
        }
        if p1.len() != l.rows() {
            return Err(Error::Invariant(format!(
                "P1 has length {} but L has {} rows",
                p1.len(),
                l.rows()
            )));
        }
        if p2.len() != r.rows() {
            return Err(Error::Invariant(format!(
                "P2 has length {} but R has {} rows",
                p2.len(),
                r.rows()
            )));
        }
        Ok(Self { l, r, p1, p2, variant, seed })
    }

    pub fn l(&self) -> &Mat {
        &self.l
    }

    pub fn r(&self) -> &Mat {
        &self.r
    }

    pub fn p1(&self) -> &PermutationVec {
        &self.p1
    }

    pub fn p2(&self) -> &PermutationVec {
        &self.p2
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Same factors and permutations, different variant.
    pub fn with_variant(&self, variant: Variant) -> Self {
        Self { variant, ..self.clone() }
    }

    /// (m1, m2): the image height and width this key accepts.
    pub fn image_shape(&self) -> (usize, usize) {
        (self.l.rows(), self.r.rows())
    }
}

fn is_binary(m: &Mat) -> bool {
    m.data().iter().all(|&v| v == 0.0 || v == 1.0)
}

/// Each entry is independently 1 with probability `p`, else 0.
pub fn bernoulli_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, p: f64, rng: &mut R) -> Result<Mat> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Invariant(format!("probability must lie in [0, 1], got {p}")));
    }
    // gen_bool panics only outside [0, 1], which is excluded above.
    let data = (0..rows * cols).map(|_| if rng.gen_bool(p) { 1.0 } else { 0.0 }).collect();
    Mat::new(rows, cols, data)
}

/// Uniform permutation by Fisher–Yates.
pub fn random_permutation<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<PermutationVec> {
    let mut pi: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        pi.swap(i, j);
    }
    PermutationVec::new(pi)
}

pub fn perm_to_matrix(p: &PermutationVec) -> Mat {
    let n = p.len();
    let mut data = vec![0.0; n * n];
    for (i, &j) in p.as_slice().iter().enumerate() {
        data[i * n + j] = 1.0;
    }
    Mat::from_parts(n, n, data)
}

fn full_rank_factor(size: usize, p: f64, seed: u64) -> Result<Mat> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MAX_FULL_RANK_DRAWS {
        let m = bernoulli_matrix(size, size, p, &mut rng)?;
        if numerical_rank(&m)? == size {
            return Ok(m);
        }
    }
    Err(Error::FullRank { size, p, attempts: MAX_FULL_RANK_DRAWS })
}

/// Draws a complete key. L is `m1 x m1`, R is `m2 x m2`, both binary with
/// ones at rate `p` and of full numerical rank.
pub fn keygen(m1: usize, m2: usize, p: f64, variant: Variant, seed: u64) -> Result<KeyBundle> {
    if m1 < 2 || m2 < 2 {
        return Err(Error::Invariant(format!("factor sizes must be at least 2, got {m1} and {m2}")));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Invariant(format!("probability must lie in [0, 1], got {p}")));
    }
    let l = full_rank_factor(m1, p, seed)?;
    let r = full_rank_factor(m2, p, seed.wrapping_add(1))?;
    let p1 = random_permutation(m1, &mut ChaCha8Rng::seed_from_u64(seed.wrapping_add(2)))?;
    let p2 = random_permutation(m2, &mut ChaCha8Rng::seed_from_u64(seed.wrapping_add(3)))?;
    KeyBundle::new(l, r, p1, p2, variant, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{matmul, svd, transpose};

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn bernoulli_extremes() {
        assert_eq!(bernoulli_matrix(3, 4, 0.0, &mut rng(1)).unwrap(), Mat::zeros(3, 4));
        let ones = bernoulli_matrix(3, 4, 1.0, &mut rng(1)).unwrap();
        assert!(ones.data().iter().all(|&v| v == 1.0));
        assert!(bernoulli_matrix(2, 2, 1.5, &mut rng(1)).is_err());
    }

    #[test]
    fn bernoulli_fraction_near_nominal() {
        for seed in 0..50 {
            let m = bernoulli_matrix(32, 32, 0.2, &mut rng(seed)).unwrap();
            assert!(is_binary(&m));
            let ones = m.data().iter().filter(|&&v| v == 1.0).count();
            let frac = ones as f64 / 1024.0;
            assert!((0.1..=0.3).contains(&frac), "seed {seed}: {frac}");
        }
    }

    #[test]
    fn permutation_validation() {
        assert!(PermutationVec::new(vec![1, 0, 2]).is_ok());
        assert!(matches!(PermutationVec::new(vec![0, 0]), Err(Error::Invariant(_))));
        assert!(matches!(PermutationVec::new(vec![0, 2]), Err(Error::Invariant(_))));
        assert!(PermutationVec::new(vec![]).is_err());
    }

    #[test]
    fn fisher_yates_is_a_bijection_and_covers_all_positions() {
        assert_eq!(random_permutation(1, &mut rng(0)).unwrap().as_slice(), &[0]);
        for n in 2..=64 {
            let p = random_permutation(n, &mut rng(n as u64)).unwrap();
            let mut sorted = p.as_slice().to_vec();
            sorted.sort_unstable();
            assert_eq!(sorted, (0..n).collect::<Vec<_>>());
        }
        // Where does element 0 land? Every slot of 4 should be hit over 4000 draws.
        let mut hist = [0usize; 4];
        let mut g = rng(9);
        for _ in 0..4000 {
            let p = random_permutation(4, &mut g).unwrap();
            hist[p.as_slice().iter().position(|&v| v == 0).unwrap()] += 1;
        }
        assert!(hist.iter().all(|&c| (850..=1150).contains(&c)), "{hist:?}");
    }

    #[test]
    fn perm_matrix_cases() {
        assert_eq!(perm_to_matrix(&PermutationVec::identity(3)), Mat::identity(3));
        let swap = perm_to_matrix(&PermutationVec::new(vec![1, 0]).unwrap());
        assert_eq!(swap, Mat::from_rows(&[[0.0, 1.0], [1.0, 0.0]]));
    }

    #[test]
    fn perm_matrix_matches_index_shuffle() {
        let p = random_permutation(10, &mut rng(4)).unwrap();
        let v: Vec<f64> = (0..10).map(|i| (i * i) as f64 + 0.5).collect();
        let pv = matmul(&perm_to_matrix(&p), &Mat::new(10, 1, v.clone()).unwrap()).unwrap();
        let shuffled: Vec<f64> = p.as_slice().iter().map(|&j| v[j]).collect();
        assert_eq!(pv.data(), &shuffled[..]);
    }

    #[test]
    fn perm_matrix_is_orthogonal_exactly() {
        for n in [1, 5, 32] {
            let pm = perm_to_matrix(&random_permutation(n, &mut rng(n as u64)).unwrap());
            assert_eq!(matmul(&pm, &transpose(&pm)).unwrap(), Mat::identity(n));
            assert_eq!(matmul(&transpose(&pm), &pm).unwrap(), Mat::identity(n));
        }
    }

    #[test]
    fn variant_parsing() {
        assert_eq!(Variant::try_from(3).unwrap(), Variant::V3);
        assert!(matches!(Variant::try_from(0), Err(Error::InvalidVariant(0))));
        assert!(matches!(Variant::try_from(5), Err(Error::InvalidVariant(5))));
    }

    #[test]
    fn keygen_is_deterministic_and_paper_sized() {
        let a = keygen(32, 64, 0.2, Variant::V1, 11).unwrap();
        let b = keygen(32, 64, 0.2, Variant::V1, 11).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.l().shape(), (32, 32));
        assert_eq!(a.r().shape(), (64, 64));
        assert_eq!(a.image_shape(), (32, 64));
        assert!(is_binary(a.l()) && is_binary(a.r()));
        assert_ne!(keygen(32, 64, 0.2, Variant::V1, 12).unwrap(), a);
    }

    #[test]
    fn keygen_factors_are_full_rank() {
        for seed in 0..50 {
            let k = keygen(32, 64, 0.2, Variant::V2, seed).unwrap();
            for m in [k.l(), k.r()] {
                let f = svd(m).unwrap();
                let smallest = *f.sigma.last().unwrap();
                let thr = crate::linalg::rank_threshold(f.sigma[0], m.rows(), m.cols());
                assert!(smallest > thr, "seed {seed}");
            }
        }
    }

    #[test]
    fn keygen_rejects_impossible_requests() {
        assert!(matches!(
            keygen(4, 4, 0.0, Variant::V1, 0),
            Err(Error::FullRank { size: 4, attempts: MAX_FULL_RANK_DRAWS, .. })
        ));
        assert!(matches!(keygen(1, 4, 0.2, Variant::V1, 0), Err(Error::Invariant(_))));
    }

    #[test]
    fn bundle_rejects_bad_parts() {
        let k = keygen(3, 4, 0.5, Variant::V1, 5).unwrap();
        let bad_l = Mat::from_fn(3, 3, |i, j| if i == j { 2.0 } else { 0.0 });
        assert!(KeyBundle::new(bad_l, k.r().clone(), k.p1().clone(), k.p2().clone(), Variant::V1, 0).is_err());
        assert!(KeyBundle::new(
            k.l().clone(),
            k.r().clone(),
            k.p2().clone(),
            k.p1().clone(),
            Variant::V1,
            0
        )
        .is_err());
    }
}
