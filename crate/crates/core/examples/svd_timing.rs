use ghost_kron::linalg::{pinv, svd, Mat, TruncationRate};
use rand::{Rng, SeedableRng};
use std::time::Instant;

fn main() {
    let n: usize = std::env::args().nth(1).map_or(512, |s| s.parse().unwrap());
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
    let m = Mat::from_fn(n, n, |_, _| if rng.gen_bool(0.2) { 1.0 } else { 0.0 });
    let t = Instant::now();
    let f = svd(&m).unwrap();
    println!("svd {n}: {:?} (sigma_max {:.4}, sigma_min {:.3e})", t.elapsed(), f.sigma[0], f.sigma[n - 1]);
    let t = Instant::now();
    let _p = pinv(&m, TruncationRate::FULL).unwrap();
    println!("pinv {n}: {:?}", t.elapsed());
}
