//! Wall-clock comparison of the factored and full pseudo-inverse paths.

use std::hint::black_box;
use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::forward::{bucket_forward, ImageGray};
use crate::keys::{keygen, Variant};
use crate::linalg::{kron, matmul, pinv, relative_error, vec_row, Mat, TruncationRate};
use crate::reconstruct::apply_factored;

/// Factored and full outputs must agree this closely (relative Frobenius)
/// for a report to be produced.
pub const AGREEMENT_TOLERANCE: f64 = 1e-6;

pub const MIN_REPEATS: usize = 3;

/// Fast operations are re-run until one sample spans at least this long, and
/// the per-call time is the average over that sample.
const MIN_SAMPLE: Duration = Duration::from_millis(2);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchOptions {
    pub m1: usize,
    pub m2: usize,
    pub p: f64,
    pub repeats: usize,
    pub seed: u64,
    /// Also time the two factor pseudo-inverses computed on two threads.
    pub parallel: bool,
}

impl Default for BenchOptions {
    fn default() -> Self {
        Self { m1: 32, m2: 64, p: 0.2, repeats: 5, seed: 0, parallel: false }
    }
}

/// Median timings in seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub m1: usize,
    pub m2: usize,
    pub repeats: usize,
    pub t_pinv_factored_s: f64,
    pub t_pinv_full_s: f64,
    pub t_recon_factored_s: f64,
    pub t_recon_full_s: f64,
    pub pinv_speedup: f64,
    pub recon_speedup: f64,
    /// Largest relative difference seen between the two paths.
    pub agreement: f64,
    pub t_pinv_factored_parallel_s: Option<f64>,
}

impl BenchReport {
    pub const CSV_HEADER: &'static str = "m1,m2,repeats,t_pinv_factored_s,t_pinv_full_s,t_recon_factored_s,\
t_recon_full_s,pinv_speedup,recon_speedup,agreement,t_pinv_factored_parallel_s";

    pub fn csv_row(&self) -> String {
        let par = self.t_pinv_factored_parallel_s.map(|t| format!("{t:e}")).unwrap_or_default();
        format!(
            "{},{},{},{:e},{:e},{:e},{:e},{:.3},{:.3},{:e},{}",
            self.m1,
            self.m2,
            self.repeats,
            self.t_pinv_factored_s,
            self.t_pinv_full_s,
            self.t_recon_factored_s,
            self.t_recon_full_s,
            self.pinv_speedup,
            self.recon_speedup,
            self.agreement,
            par
        )
    }

    pub fn table(&self) -> String {
        let mut s = format!(
            "sizes {}x{} (A is {n}x{n}), median of {} runs\n",
            self.m1,
            self.m2,
            self.repeats,
            n = self.m1 * self.m2
        );
        s += &format!("{:<16}{:>14}{:>14}{:>12}\n", "", "factored (s)", "full (s)", "speedup");
        s += &format!(
            "{:<16}{:>14.3e}{:>14.3e}{:>12.1}\n",
            "pseudo-inverse", self.t_pinv_factored_s, self.t_pinv_full_s, self.pinv_speedup
        );
        s += &format!(
            "{:<16}{:>14.3e}{:>14.3e}{:>12.1}\n",
            "reconstruction", self.t_recon_factored_s, self.t_recon_full_s, self.recon_speedup
        );
        if let Some(t) = self.t_pinv_factored_parallel_s {
            s += &format!("{:<16}{:>14.3e}   (two threads)\n", "pinv parallel", t);
        }
        s += &format!("max relative difference between paths: {:.3e}", self.agreement);
        s
    }
}

/// Per-call time of `f`, batching calls that finish faster than [`MIN_SAMPLE`].
fn time_once<T>(mut f: impl FnMut() -> Result<T>) -> Result<(f64, T)> {
    let start = Instant::now();
    let mut out = f()?;
    let mut calls = 1u32;
    while start.elapsed() < MIN_SAMPLE {
        out = black_box(f()?);
        calls += 1;
    }
    Ok((start.elapsed().as_secs_f64() / f64::from(calls), out))
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn timed<T>(repeats: usize, mut f: impl FnMut() -> Result<T>) -> Result<(f64, T)> {
    let mut times = Vec::with_capacity(repeats);
    let mut last = None;
    for _ in 0..repeats {
        let (t, out) = time_once(&mut f)?;
        times.push(t);
        last = Some(out);
    }
    Ok((median(times), last.expect("repeats >= 1")))
}

/// `pinv(l)` and `pinv(r)` on two threads. Each thread runs the same serial
/// code, so the results are bit-identical to the sequential ones.
pub fn factor_pinvs_parallel(l: &Mat, r: &Mat, r1: TruncationRate, r2: TruncationRate) -> Result<(Mat, Mat)> {
    std::thread::scope(|s| {
        let right = s.spawn(|| pinv(r, r2));
        let left = pinv(l, r1);
        let right = right.join().expect("pinv thread panicked");
        Ok((left?, right?))
    })
}

/// Shorthand for [`run_bench`] with sequential timing only.
pub fn bench_pipeline(m1: usize, m2: usize, p: f64, repeats: usize, seed: u64) -> Result<BenchReport> {
    run_bench(&BenchOptions { m1, m2, p, repeats, seed, parallel: false })
}

/// Times both paths on a key drawn with `keygen` and the built-in test chart.
///
/// Pseudo-inverse timings include the SVD on both sides. Reconstruction
/// timings use the precomputed pseudo-inverses.
pub fn run_bench(opts: &BenchOptions) -> Result<BenchReport> {
    if opts.repeats < MIN_REPEATS {
        return Err(Error::Invariant(format!(
            "benchmark needs at least {MIN_REPEATS} repeats, got {}",
            opts.repeats
        )));
    }
    let full = TruncationRate::FULL;
    let key = keygen(opts.m1, opts.m2, opts.p, Variant::V1, opts.seed)?;
    let (l, r) = (key.l(), key.r());
    let x = ImageGray::test_chart(opts.m1, opts.m2)?.to_mat();
    let y = bucket_forward(l, &x, r)?;
    let y_vec = vec_row(y.mat());
    let a = kron(l, r)?;

    let (t_pinv_factored, (pl, pr)) = timed(opts.repeats, || Ok((pinv(l, full)?, pinv(r, full)?)))?;
    let (t_pinv_full, pa) = timed(opts.repeats, || pinv(&a, full))?;
    let (t_recon_factored, x_factored) = timed(opts.repeats, || apply_factored(&pl, y.mat(), &pr))?;
    let (t_recon_full, x_full) = timed(opts.repeats, || matmul(&pa, &y_vec))?;

    let pinv_gap = relative_error(&kron(&pl, &pr)?, &pa)?;
    let recon_gap = relative_error(&vec_row(&x_factored), &x_full)?;
    let agreement = pinv_gap.max(recon_gap);
    if agreement.is_nan() || agreement > AGREEMENT_TOLERANCE {
        return Err(Error::Agreement(agreement));
    }

    let t_pinv_factored_parallel_s = if opts.parallel {
        let (t, (pl2, pr2)) = timed(opts.repeats, || factor_pinvs_parallel(l, r, full, full))?;
        debug_assert!(pl2 == pl && pr2 == pr);
        Some(t)
    } else {
        None
    };

    Ok(BenchReport {
        m1: opts.m1,
        m2: opts.m2,
        repeats: opts.repeats,
        t_pinv_factored_s: t_pinv_factored,
        t_pinv_full_s: t_pinv_full,
        t_recon_factored_s: t_recon_factored,
        t_recon_full_s: t_recon_full,
        pinv_speedup: t_pinv_full / t_pinv_factored,
        recon_speedup: t_recon_full / t_recon_factored,
        agreement,
        t_pinv_factored_parallel_s,
    })
}
