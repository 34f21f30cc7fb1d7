//! MSE, PSNR and SSIM with a dynamic range of 1.

use crate::error::{Error, Result};
use crate::forward::ImageGray;
use crate::linalg::Mat;

/// Side length of the SSIM window.
pub const SSIM_WINDOW: usize = 11;
/// Standard deviation of the Gaussian SSIM weights, in pixels.
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;

/// Anything laid out as a row-major grid of samples.
pub trait Raster {
    fn height(&self) -> usize;
    fn width(&self) -> usize;
    fn samples(&self) -> &[f64];
}

impl Raster for ImageGray {
    fn height(&self) -> usize {
        ImageGray::height(self)
    }
    fn width(&self) -> usize {
        ImageGray::width(self)
    }
    fn samples(&self) -> &[f64] {
        self.pixels()
    }
}

impl Raster for Mat {
    fn height(&self) -> usize {
        self.rows()
    }
    fn width(&self) -> usize {
        self.cols()
    }
    fn samples(&self) -> &[f64] {
        self.data()
    }
}

fn same_shape(a: &(impl Raster + ?Sized), b: &(impl Raster + ?Sized)) -> Result<()> {
    if (a.height(), a.width()) != (b.height(), b.width()) {
        return Err(Error::Dimension(format!(
            "images differ in size: {}x{} vs {}x{}",
            a.height(),
            a.width(),
            b.height(),
            b.width()
        )));
    }
    Ok(())
}

pub fn mse(reference: &impl Raster, test: &impl Raster) -> Result<f64> {
    same_shape(reference, test)?;
    let (a, b) = (reference.samples(), test.samples());
    let sum: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    Ok(sum / a.len() as f64)
}

fn psnr_from_mse(mse: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        // Adding +0.0 turns the -0.0 from mse = 1 into 0.0.
        -10.0 * mse.log10() + 0.0
    }
}

/// `10 · log10(1 / mse)` in dB; infinite for identical inputs.
pub fn psnr(reference: &impl Raster, test: &impl Raster) -> Result<f64> {
    Ok(psnr_from_mse(mse(reference, test)?))
}

fn gaussian_weights() -> [f64; SSIM_WINDOW] {
    let c = (SSIM_WINDOW / 2) as f64;
    let mut w = [0.0; SSIM_WINDOW];
    for (i, v) in w.iter_mut().enumerate() {
        let d = i as f64 - c;
        *v = (-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
    }
    let total: f64 = w.iter().sum();
    w.map(|v| v / total)
}

/// Valid-mode separable filter: output is `(h - 10) x (w - 10)`.
fn filter_valid(src: &[f64], h: usize, w: usize, k: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let (oh, ow) = (h + 1 - SSIM_WINDOW, w + 1 - SSIM_WINDOW);
    let mut horiz = vec![0.0; h * ow];
    for i in 0..h {
        let row = &src[i * w..(i + 1) * w];
        for j in 0..ow {
            horiz[i * ow + j] = k.iter().zip(&row[j..j + SSIM_WINDOW]).map(|(a, b)| a * b).sum();
        }
    }
    let mut out = vec![0.0; oh * ow];
    for i in 0..oh {
        for j in 0..ow {
            out[i * ow + j] = k.iter().enumerate().map(|(t, a)| a * horiz[(i + t) * ow + j]).sum();
        }
    }
    out
}

fn ssim_term(mx: f64, my: f64, sxx: f64, syy: f64, sxy: f64) -> f64 {
    let c1 = SSIM_K1 * SSIM_K1;
    let c2 = SSIM_K2 * SSIM_K2;
    let vx = sxx - mx * mx;
    let vy = syy - my * my;
    let cov = sxy - mx * my;
    ((2.0 * mx * my + c1) * (2.0 * cov + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2))
}

/// Mean SSIM over all fully contained 11x11 Gaussian windows. Images smaller
/// than the window in either direction are scored with one uniformly
/// weighted window covering the whole image.
pub fn ssim(reference: &impl Raster, test: &impl Raster) -> Result<f64> {
    same_shape(reference, test)?;
    let (h, w) = (reference.height(), reference.width());
    let (x, y) = (reference.samples(), test.samples());
    if h < SSIM_WINDOW || w < SSIM_WINDOW {
        let n = x.len() as f64;
        let mean = |f: &dyn Fn(usize) -> f64| (0..x.len()).map(f).sum::<f64>() / n;
        return Ok(ssim_term(
            mean(&|i| x[i]),
            mean(&|i| y[i]),
            mean(&|i| x[i] * x[i]),
            mean(&|i| y[i] * y[i]),
            mean(&|i| x[i] * y[i]),
        ));
    }
    let k = gaussian_weights();
    let products = |f: fn(f64, f64) -> f64| -> Vec<f64> { x.iter().zip(y).map(|(a, b)| f(*a, *b)).collect() };
    let mx = filter_valid(x, h, w, &k);
    let my = filter_valid(y, h, w, &k);
    let sxx = filter_valid(&products(|a, _| a * a), h, w, &k);
    let syy = filter_valid(&products(|_, b| b * b), h, w, &k);
    let sxy = filter_valid(&products(|a, b| a * b), h, w, &k);
    let total: f64 = (0..mx.len()).map(|i| ssim_term(mx[i], my[i], sxx[i], syy[i], sxy[i])).sum();
    Ok(total / mx.len() as f64)
}

/// Scores of one reconstruction against its reference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsReport {
    pub mse: f64,
    /// `f64::INFINITY` when `mse == 0`.
    pub psnr_db: f64,
    pub ssim: f64,
}

impl MetricsReport {
    pub fn compute(reference: &impl Raster, test: &impl Raster) -> Result<Self> {
        let mse = mse(reference, test)?;
        Ok(Self { mse, psnr_db: psnr_from_mse(mse), ssim: ssim(reference, test)? })
    }
}

impl std::fmt::Display for MetricsReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        // {:?} keeps a trailing ".0" on whole numbers and prints "inf".
        writeln!(f, "mse: {:?}", self.mse)?;
        writeln!(f, "psnr: {:?}", self.psnr_db)?;
        write!(f, "ssim: {:?}", self.ssim)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(h: usize, w: usize, seed: u64) -> Mat {
        let mut g = ChaCha8Rng::seed_from_u64(seed);
        Mat::from_fn(h, w, |_, _| g.gen_range(0.0..1.0))
    }

    fn constant(h: usize, w: usize, v: f64) -> Mat {
        Mat::from_fn(h, w, |_, _| v)
    }

    #[test]
    fn mse_cases() {
        let a = random(5, 7, 1);
        assert_eq!(mse(&a, &a).unwrap(), 0.0);
        assert_eq!(mse(&constant(3, 3, 0.0), &constant(3, 3, 1.0)).unwrap(), 1.0);
        let b = random(5, 7, 2);
        let mut oracle = 0.0;
        for i in 0..5 {
            for j in 0..7 {
                oracle += (a.get(i, j) - b.get(i, j)).powi(2);
            }
        }
        assert!((mse(&a, &b).unwrap() - oracle / 35.0).abs() <= 1e-14);
        assert!(matches!(mse(&a, &random(7, 5, 3)), Err(Error::Dimension(_))));
    }

    #[test]
    fn psnr_analytic() {
        let z = constant(4, 4, 0.0);
        assert!((psnr(&z, &constant(4, 4, 0.1)).unwrap() - 20.0).abs() <= 1e-12);
        assert_eq!(psnr(&z, &constant(4, 4, 1.0)).unwrap().to_bits(), 0.0f64.to_bits());
        assert_eq!(psnr(&z, &z).unwrap(), f64::INFINITY);
    }

    #[test]
    fn ssim_identical_is_exactly_one() {
        for (h, w) in [(32, 64), (11, 11), (5, 40), (1, 1)] {
            let a = random(h, w, 4);
            assert_eq!(ssim(&a, &a).unwrap(), 1.0, "{h}x{w}");
        }
    }

    #[test]
    fn ssim_constant_closed_form() {
        let c1 = SSIM_K1 * SSIM_K1;
        let expected = (2.0 * 0.3 + c1) / (0.61 + c1);
        for (h, w) in [(16, 16), (4, 4)] {
            let got = ssim(&constant(h, w, 0.5), &constant(h, w, 0.6)).unwrap();
            assert!((got - expected).abs() <= 1e-12, "{h}x{w}: {got}");
        }
    }

    #[test]
    fn ssim_inverted_binary_is_negative() {
        let img = ImageGray::test_chart(32, 64).unwrap();
        let inv = Mat::from_fn(32, 64, |i, j| 1.0 - img.get(i, j));
        assert!(ssim(&img.to_mat(), &inv).unwrap() < 0.0);
    }

    #[test]
    fn ssim_windows_match_direct_sum() {
        let (a, b) = (random(13, 12, 5), random(13, 12, 6));
        let k = gaussian_weights();
        let mut total = 0.0;
        let mut count = 0;
        for i in 0..=13 - SSIM_WINDOW {
            for j in 0..=12 - SSIM_WINDOW {
                let mut s = [0.0; 5];
                for u in 0..SSIM_WINDOW {
                    for v in 0..SSIM_WINDOW {
                        let wt = k[u] * k[v];
                        let (x, y) = (a.get(i + u, j + v), b.get(i + u, j + v));
                        s[0] += wt * x;
                        s[1] += wt * y;
                        s[2] += wt * x * x;
                        s[3] += wt * y * y;
                        s[4] += wt * x * y;
                    }
                }
                total += ssim_term(s[0], s[1], s[2], s[3], s[4]);
                count += 1;
            }
        }
        assert_eq!(count, 6);
        assert!((ssim(&a, &b).unwrap() - total / 6.0).abs() <= 1e-12);
    }

    #[test]
    fn symmetric_and_bounded() {
        for seed in 0..10 {
            let (a, b) = (random(20, 24, seed), random(20, 24, seed + 100));
            assert!((psnr(&a, &b).unwrap() - psnr(&b, &a).unwrap()).abs() <= 1e-12);
            let s = ssim(&a, &b).unwrap();
            assert!((s - ssim(&b, &a).unwrap()).abs() <= 1e-12);
            assert!((-1.0..=1.0).contains(&s));
        }
    }

    #[test]
    fn more_noise_never_raises_psnr() {
        let img = ImageGray::test_chart(32, 64).unwrap().to_mat();
        let mut last = f64::INFINITY;
        for step in 1..=8 {
            let sigma = 0.02 * step as f64;
            let mut g = ChaCha8Rng::seed_from_u64(77);
            let normal = rand_distr::Normal::new(0.0, sigma).unwrap();
            let noisy = Mat::from_fn(32, 64, |i, j| img.get(i, j) + rand_distr::Distribution::sample(&normal, &mut g));
            let p = psnr(&img, &noisy).unwrap();
            assert!(p <= last);
            last = p;
        }
    }

    #[test]
    fn report_formatting() {
        let a = random(12, 12, 8);
        let r = MetricsReport::compute(&a, &a).unwrap();
        assert_eq!(r.to_string(), "mse: 0.0\npsnr: inf\nssim: 1.0");
    }
}
