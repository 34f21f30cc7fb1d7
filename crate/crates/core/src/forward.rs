//! Simulated acquisition: bucket signals and detector noise.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::linalg::{matmul, transpose, Mat};

/// Grayscale image with pixels in `[0, 1]`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageGray {
    height: usize,
    width: usize,
    pixels: Vec<f64>,
}

impl ImageGray {
    pub fn new(height: usize, width: usize, pixels: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::Dimension(format!("image must be non-empty, got {height}x{width}")));
        }
        if height.checked_mul(width) != Some(pixels.len()) {
            return Err(Error::Dimension(format!(
                "{height}x{width} image needs {} pixels, got {}",
                height * width,
                pixels.len()
            )));
        }
        if let Some(bad) = pixels.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::Invariant(format!("pixel value {bad} outside [0, 1]")));
        }
        Ok(Self { height, width, pixels })
    }

    /// Two filled rectangles on a black background: a wide bar in the upper
    /// left and a tall block in the lower right.
    pub fn test_chart(height: usize, width: usize) -> Result<Self> {
        let inside = |i: usize, j: usize, top: f64, left: f64, bottom: f64, right: f64| {
            let (y, x) = (i as f64 / height as f64, j as f64 / width as f64);
            y >= top && y < bottom && x >= left && x < right
        };
        let pixels = (0..height * width)
            .map(|k| {
                let (i, j) = (k / width, k % width);
                let hit = inside(i, j, 0.125, 0.125, 0.375, 0.625) || inside(i, j, 0.5, 0.6875, 0.875, 0.875);
                if hit { 1.0 } else { 0.0 }
            })
            .collect();
        Self::new(height, width, pixels)
    }

    /// Clips every entry of `m` into `[0, 1]`.
    pub fn from_mat_clamped(m: &Mat) -> Self {
        let pixels = m.data().iter().map(|v| v.clamp(0.0, 1.0)).collect();
        Self { height: m.rows(), width: m.cols(), pixels }
    }

    /// Maps `[min, max]` of `m` affinely onto `[0, 1]`. A constant matrix
    /// becomes all zeros.
    pub fn from_mat_rescaled(m: &Mat) -> Self {
        let (lo, hi) = m
            .data()
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        let span = hi - lo;
        let pixels = m
            .data()
            .iter()
            .map(|&v| if span > 0.0 { ((v - lo) / span).clamp(0.0, 1.0) } else { 0.0 })
            .collect();
        Self { height: m.rows(), width: m.cols(), pixels }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.pixels[i * self.width + j]
    }

    pub fn to_mat(&self) -> Mat {
        Mat::from_parts(self.height, self.width, self.pixels.clone())
    }

    /// The `w x h` sub-image whose top-left pixel is `(x, y)`.
    pub fn crop(&self, x: usize, y: usize, w: usize, h: usize) -> Result<Self> {
        let fits = w > 0 && h > 0 && x.checked_add(w).is_some_and(|e| e <= self.width)
            && y.checked_add(h).is_some_and(|e| e <= self.height);
        if !fits {
            return Err(Error::Dimension(format!(
                "crop {x},{y},{w},{h} does not fit a {}x{} image",
                self.width, self.height
            )));
        }
        let pixels = (y..y + h)
            .flat_map(|i| self.pixels[i * self.width + x..i * self.width + x + w].iter().copied())
            .collect();
        Ok(Self { height: h, width: w, pixels })
    }
}

/// Bucket signals in two-dimensional form.
#[derive(Debug, Clone, PartialEq)]
pub struct Ciphertext(pub Mat);

impl Ciphertext {
    pub fn mat(&self) -> &Mat {
        &self.0
    }
}

/// `Y = L · X · Rᵀ`.
pub fn bucket_forward(l: &Mat, x: &Mat, r: &Mat) -> Result<Ciphertext> {
    if l.cols() != x.rows() || r.cols() != x.cols() {
        return Err(Error::Dimension(format!(
            "L is {}x{}, X is {}x{}, R is {}x{}",
            l.rows(),
            l.cols(),
            x.rows(),
            x.cols(),
            r.rows(),
            r.cols()
        )));
    }
    Ok(Ciphertext(matmul(&matmul(l, x)?, &transpose(r))?))
}

/// `y = A · x` for a column vector `x`.
pub fn bucket_forward_vec(a: &Mat, x_vec: &Mat) -> Result<Mat> {
    if x_vec.cols() != 1 {
        return Err(Error::Dimension(format!("x must be a column vector, got {} columns", x_vec.cols())));
    }
    matmul(a, x_vec)
}

/// Adds i.i.d. Gaussian noise with standard deviation `sigma · mean(|y|)`.
pub fn add_noise<R: Rng + ?Sized>(y: &Ciphertext, sigma: f64, rng: &mut R) -> Result<Ciphertext> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::Invariant(format!("noise sigma must be finite and non-negative, got {sigma}")));
    }
    if sigma == 0.0 {
        return Ok(y.clone());
    }
    let data = y.0.data();
    let mean_abs = data.iter().map(|v| v.abs()).sum::<f64>() / data.len() as f64;
    let std = sigma * mean_abs;
    if std == 0.0 {
        return Ok(y.clone());
    }
    let normal = Normal::new(0.0, std).map_err(|e| Error::Numerical(e.to_string()))?;
    let noisy = data.iter().map(|v| v + normal.sample(rng)).collect();
    Ok(Ciphertext(Mat::new(y.0.rows(), y.0.cols(), noisy)?))
}
