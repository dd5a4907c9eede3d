//! Image and kernel containers plus periodic convolution.
//!
//! Every operator in this crate assumes periodic boundaries: pixel `(i, j)`
//! has neighbours `((i ± a) mod m, (j ± b) mod n)`. That is what makes the
//! blur and gradient operators diagonal in the Fourier basis.

use std::ops::{Add, Mul, Sub};

use ndarray::{Array2, Zip};
use rustfft::num_complex::Complex64;

use crate::error::{dim_err, param_err, Result};
use crate::fft::{Fft2, FreqField};

/// A grayscale or RGB image stored as one `f64` plane per channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageField {
    planes: Vec<Array2<f64>>,
}

impl ImageField {
    pub fn gray(plane: Array2<f64>) -> Self {
        assert!(plane.nrows() >= 1 && plane.ncols() >= 1, "empty image");
        ImageField { planes: vec![plane] }
    }

    /// Builds an image from 1 or 3 equally sized planes.
    pub fn from_planes(planes: Vec<Array2<f64>>) -> Result<Self> {
        if planes.len() != 1 && planes.len() != 3 {
            return Err(param_err(format!("expected 1 or 3 channels, got {}", planes.len())));
        }
        let dim = planes[0].dim();
        if dim.0 == 0 || dim.1 == 0 {
            return Err(dim_err("image has a zero-length side"));
        }
        if planes.iter().any(|p| p.dim() != dim) {
            return Err(dim_err("channel planes differ in shape"));
        }
        Ok(ImageField { planes })
    }

    pub fn zeros(rows: usize, cols: usize, channels: usize) -> Self {
        Self::filled(rows, cols, channels, 0.0)
    }

    pub fn filled(rows: usize, cols: usize, channels: usize, value: f64) -> Self {
        assert!(channels == 1 || channels == 3, "channels must be 1 or 3");
        ImageField {
            planes: (0..channels).map(|_| Array2::from_elem((rows, cols), value)).collect(),
        }
    }

    pub fn zeros_like(&self) -> Self {
        let (m, n) = self.dim();
        Self::zeros(m, n, self.channels())
    }

    /// `(rows, cols)` of each plane.
    pub fn dim(&self) -> (usize, usize) {
        self.planes[0].dim()
    }

    pub fn channels(&self) -> usize {
        self.planes.len()
    }

    pub fn len(&self) -> usize {
        let (m, n) = self.dim();
        m * n * self.channels()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn planes(&self) -> &[Array2<f64>] {
        &self.planes
    }

    pub fn planes_mut(&mut self) -> &mut [Array2<f64>] {
        &mut self.planes
    }

    pub fn plane(&self, c: usize) -> &Array2<f64> {
        &self.planes[c]
    }

    pub fn into_planes(self) -> Vec<Array2<f64>> {
        self.planes
    }

    pub fn same_shape(&self, other: &ImageField) -> bool {
        self.dim() == other.dim() && self.channels() == other.channels()
    }

    pub fn check_same_shape(&self, other: &ImageField, what: &str) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(dim_err(format!(
                "{what}: {:?}x{} vs {:?}x{}",
                self.dim(),
                self.channels(),
                other.dim(),
                other.channels()
            )))
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.planes.iter().flat_map(|p| p.iter())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ImageField {
        ImageField { planes: self.planes.iter().map(|p| p.mapv(&f)).collect() }
    }

    pub fn map_inplace(&mut self, f: impl Fn(f64) -> f64) {
        for p in &mut self.planes {
            p.mapv_inplace(&f);
        }
    }

    /// Elementwise combination of two equally shaped images.
    pub fn zip_map(&self, other: &ImageField, f: impl Fn(f64, f64) -> f64) -> ImageField {
        assert!(self.same_shape(other), "zip_map shape mismatch");
        let planes = self
            .planes
            .iter()
            .zip(&other.planes)
            .map(|(a, b)| Zip::from(a).and(b).map_collect(|&x, &y| f(x, y)))
            .collect();
        ImageField { planes }
    }

    /// Applies `f` to each channel plane.
    pub fn map_planes(&self, mut f: impl FnMut(&Array2<f64>) -> Array2<f64>) -> ImageField {
        ImageField { planes: self.planes.iter().map(|p| f(p)).collect() }
    }

    pub fn max(&self) -> f64 {
        self.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn sum(&self) -> f64 {
        self.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.sum() / self.len() as f64
    }

    pub fn dot(&self, other: &ImageField) -> f64 {
        assert!(self.same_shape(other), "dot shape mismatch");
        self.iter().zip(other.iter()).map(|(a, b)| a * b).sum()
    }

    pub fn norm_fro(&self) -> f64 {
        self.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.iter().all(|v| v.is_finite())
    }

    /// Projection onto the non-negative orthant.
    pub fn clip_nonneg(&self) -> ImageField {
        self.map(|v| v.max(0.0))
    }
}

impl Add for &ImageField {
    type Output = ImageField;
    fn add(self, rhs: &ImageField) -> ImageField {
        self.zip_map(rhs, |a, b| a + b)
    }
}

impl Sub for &ImageField {
    type Output = ImageField;
    fn sub(self, rhs: &ImageField) -> ImageField {
        self.zip_map(rhs, |a, b| a - b)
    }
}

impl Mul<f64> for &ImageField {
    type Output = ImageField;
    fn mul(self, rhs: f64) -> ImageField {
        self.map(|a| a * rhs)
    }
}

/// Tolerance on the unit-sum constraint of a [`Kernel`].
pub const KERNEL_SUM_TOL: f64 = 1e-12;

/// A non-negative blur kernel whose entries sum to one.
///
/// The anchor (the entry that lands on the output pixel) sits at
/// `(rows / 2, cols / 2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    data: Array2<f64>,
}

impl Kernel {
    /// Validates an already-normalized kernel.
    pub fn new(data: Array2<f64>) -> Result<Self> {
        if data.is_empty() {
            return Err(dim_err("empty kernel"));
        }
        if data.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(param_err("kernel entries must be finite and non-negative"));
        }
        let sum = data.sum();
        if (sum - 1.0).abs() > KERNEL_SUM_TOL {
            return Err(param_err(format!("kernel sums to {sum}, expected 1")));
        }
        Ok(Kernel { data })
    }

    /// Clips negatives to zero and rescales to unit sum.
    pub fn normalized(data: Array2<f64>) -> Result<Self> {
        if data.is_empty() {
            return Err(dim_err("empty kernel"));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(param_err("kernel entries must be finite"));
        }
        let clipped = data.mapv(|v| v.max(0.0));
        let sum = clipped.sum();
        if sum <= 0.0 {
            return Err(crate::Error::DegenerateKernel);
        }
        Ok(Kernel { data: clipped / sum })
    }

    pub fn delta() -> Self {
        Kernel { data: Array2::ones((1, 1)) }
    }

    pub fn uniform(rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(param_err("kernel size must be positive"));
        }
        Ok(Kernel { data: Array2::from_elem((rows, cols), 1.0 / (rows * cols) as f64) })
    }

    pub fn data(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn into_data(self) -> Array2<f64> {
        self.data
    }

    pub fn dim(&self) -> (usize, usize) {
        self.data.dim()
    }

    pub fn anchor(&self) -> (usize, usize) {
        let (l, s) = self.dim();
        (l / 2, s / 2)
    }

    fn check_fits(&self, shape: (usize, usize)) -> Result<()> {
        let (l, s) = self.dim();
        if l > shape.0 || s > shape.1 {
            return Err(dim_err(format!("kernel {l}x{s} larger than image {}x{}", shape.0, shape.1)));
        }
        Ok(())
    }
}

/// Zero-pads `k` to `shape`, rolls its anchor to `(0, 0)`, and transforms.
pub fn psf2otf(k: &Kernel, shape: (usize, usize)) -> Result<FreqField> {
    k.check_fits(shape)?;
    let fft = Fft2::new(shape.0, shape.1);
    Ok(fft.forward(&pad_to_origin(k, shape)))
}

/// Circularly shifted, zero-padded copy of the kernel with its anchor at the origin.
pub(crate) fn pad_to_origin(k: &Kernel, shape: (usize, usize)) -> Array2<f64> {
    let (m, n) = shape;
    let (ca, cb) = k.anchor();
    let mut padded = Array2::zeros(shape);
    for ((a, b), &v) in k.data().indexed_iter() {
        let i = (a + m - ca % m) % m;
        let j = (b + n - cb % n) % n;
        padded[[i, j]] += v;
    }
    padded
}

/// Periodic blur operator with its frequency symbol cached for one image shape.
#[derive(Debug, Clone)]
pub struct BlurOperator {
    fft: Fft2,
    otf: FreqField,
}

impl BlurOperator {
    pub fn new(k: &Kernel, shape: (usize, usize)) -> Result<Self> {
        k.check_fits(shape)?;
        let fft = Fft2::new(shape.0, shape.1);
        let otf = fft.forward(&pad_to_origin(k, shape));
        Ok(BlurOperator { fft, otf })
    }

    pub fn otf(&self) -> &FreqField {
        &self.otf
    }

    pub fn fft(&self) -> &Fft2 {
        &self.fft
    }

    pub fn apply_plane(&self, plane: &Array2<f64>) -> Array2<f64> {
        let spec = self.fft.forward(plane) * &self.otf;
        self.fft.inverse_real(&spec)
    }

    pub fn adjoint_plane(&self, plane: &Array2<f64>) -> Array2<f64> {
        let mut spec = self.fft.forward(plane);
        Zip::from(&mut spec).and(&self.otf).for_each(|s, o| *s *= o.conj());
        self.fft.inverse_real(&spec)
    }

    pub fn apply(&self, img: &ImageField) -> ImageField {
        img.map_planes(|p| self.apply_plane(p))
    }

    pub fn adjoint(&self, img: &ImageField) -> ImageField {
        img.map_planes(|p| self.adjoint_plane(p))
    }
}

/// Circular convolution of every channel with `k`.
pub fn conv2_periodic(img: &ImageField, k: &Kernel) -> Result<ImageField> {
    Ok(BlurOperator::new(k, img.dim())?.apply(img))
}

/// Adjoint of [`conv2_periodic`]: circular correlation with `k`.
pub fn conv2_periodic_adjoint(img: &ImageField, k: &Kernel) -> Result<ImageField> {
    Ok(BlurOperator::new(k, img.dim())?.adjoint(img))
}

/// Squared magnitude of a frequency symbol.
pub(crate) fn abs2(field: &FreqField) -> Array2<f64> {
    field.mapv(|c: Complex64| c.norm_sqr())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Brute-force circular convolution, independent of the FFT path.
    fn circular_sum(img: &Array2<f64>, k: &Array2<f64>) -> Array2<f64> {
        let (m, n) = img.dim();
        let (l, s) = k.dim();
        let (ca, cb) = (l / 2, s / 2);
        Array2::from_shape_fn((m, n), |(i, j)| {
            let mut acc = 0.0;
            for a in 0..l {
                for b in 0..s {
                    let si = (i as isize - (a as isize - ca as isize)).rem_euclid(m as isize) as usize;
                    let sj = (j as isize - (b as isize - cb as isize)).rem_euclid(n as isize) as usize;
                    acc += k[[a, b]] * img[[si, sj]];
                }
            }
            acc
        })
    }

    fn random_plane(rng: &mut ChaCha8Rng, m: usize, n: usize) -> Array2<f64> {
        Array2::from_shape_fn((m, n), |_| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn identity_kernel_leaves_image() {
        let img = ImageField::gray(Array2::from_shape_fn((5, 7), |(i, j)| (i * j) as f64));
        let out = conv2_periodic(&img, &Kernel::delta()).unwrap();
        for (a, b) in img.iter().zip(out.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn constant_image_is_preserved() {
        let img = ImageField::filled(9, 8, 1, 3.25);
        let k = Kernel::normalized(Array2::from_shape_fn((3, 5), |(i, j)| (1 + i + j) as f64)).unwrap();
        let out = conv2_periodic(&img, &k).unwrap();
        assert!(out.iter().all(|v| (v - 3.25).abs() < 1e-12));
    }

    #[test]
    fn ramp_matches_circular_sum() {
        let ramp = Array2::from_shape_fn((4, 4), |(i, j)| (4 * i + j) as f64);
        let k = Kernel::uniform(3, 3).unwrap();
        let out = conv2_periodic(&ImageField::gray(ramp.clone()), &k).unwrap();
        let oracle = circular_sum(&ramp, k.data());
        for (a, b) in out.plane(0).iter().zip(oracle.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-10 * b.abs().max(1.0));
        }
        // Frozen from the oracle: (0,0) averages rows {3,0,1} and cols {3,0,1}.
        assert_abs_diff_eq!(out.plane(0)[[0, 0]], 6.666666666666667, epsilon = 1e-12);
    }

    #[test]
    fn random_kernel_matches_circular_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let img = random_plane(&mut rng, 9, 12);
        let k = Kernel::normalized(Array2::from_shape_fn((4, 5), |_| rng.random_range(0.0..1.0))).unwrap();
        let out = conv2_periodic(&ImageField::gray(img.clone()), &k).unwrap();
        let oracle = circular_sum(&img, k.data());
        for (a, b) in out.plane(0).iter().zip(oracle.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-10);
        }
    }

    #[test]
    fn oversized_kernel_is_rejected() {
        let img = ImageField::zeros(3, 3, 1);
        let k = Kernel::uniform(5, 1).unwrap();
        assert!(matches!(conv2_periodic(&img, &k), Err(crate::Error::Dimension(_))));
        assert!(psf2otf(&k, (4, 4)).is_err());
    }

    #[test]
    fn otf_of_delta_is_ones() {
        let otf = psf2otf(&Kernel::delta(), (6, 5)).unwrap();
        for c in otf.iter() {
            assert_abs_diff_eq!(c.re, 1.0, epsilon = 1e-14);
            assert_abs_diff_eq!(c.im, 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn symmetric_kernel_has_real_otf() {
        let k = Kernel::normalized(Array2::from_shape_fn((5, 5), |(i, j)| {
            let (di, dj) = (i as f64 - 2.0, j as f64 - 2.0);
            (-(di * di + dj * dj) / 3.0).exp()
        }))
        .unwrap();
        let otf = psf2otf(&k, (16, 12)).unwrap();
        assert!(otf.iter().all(|c| c.im.abs() < 1e-12));
    }

    #[test]
    fn otf_dc_equals_kernel_sum() {
        let otf = psf2otf(&Kernel::uniform(3, 3).unwrap(), (8, 8)).unwrap();
        assert_abs_diff_eq!(otf[[0, 0]].re, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn rgb_channels_convolve_independently() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let planes: Vec<_> = (0..3).map(|_| random_plane(&mut rng, 6, 6)).collect();
        let img = ImageField::from_planes(planes.clone()).unwrap();
        let k = Kernel::uniform(3, 1).unwrap();
        let out = conv2_periodic(&img, &k).unwrap();
        for c in 0..3 {
            let single = conv2_periodic(&ImageField::gray(planes[c].clone()), &k).unwrap();
            assert_eq!(out.plane(c), single.plane(0));
        }
    }

    #[test]
    fn kernel_validation() {
        assert!(Kernel::new(Array2::from_elem((2, 2), 0.3)).is_err());
        assert!(Kernel::new(Array2::from_elem((2, 2), 0.25)).is_ok());
        assert!(matches!(Kernel::normalized(Array2::from_elem((2, 2), -1.0)), Err(crate::Error::DegenerateKernel)));
        assert_eq!(Kernel::uniform(4, 5).unwrap().anchor(), (2, 2));
    }
}
