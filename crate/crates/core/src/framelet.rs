//! Piecewise-linear B-spline tight framelets and the local-minimal priors built on them.
//!
//! One decomposition level with the 1-D filters
//!
//! ```text
//! h0 = [1, 2, 1] / 4    h1 = sqrt(2)/4 * [1, 0, -1]    h2 = [-1, 2, -1] / 4
//! ```
//!
//! gives nine separable bands; band `(i, j)` filters with `h_i` along rows
//! (axis 0) and `h_j` along columns (axis 1). Since
//! `|H0|^2 + |H1|^2 + |H2|^2 = 1` at every frequency, the analysis operator `W`
//! satisfies `W^T W = I`.
//!
//! On top of `W` sit two priors: FPMP, the minimum of each band over
//! non-overlapping `r x r` patches (and over colour channels), and FDC, the
//! same minimum over a sliding centred window.

use ndarray::{s, Array2};

use crate::error::{dim_err, param_err, Result};
use crate::image::ImageField;

pub const H0: [f64; 3] = [0.25, 0.5, 0.25];
pub const H1: [f64; 3] = [
    std::f64::consts::SQRT_2 / 4.0,
    0.0,
    -std::f64::consts::SQRT_2 / 4.0,
];
pub const H2: [f64; 3] = [-0.25, 0.5, -0.25];

pub const FILTERS: [[f64; 3]; 3] = [H0, H1, H2];

/// Number of bands in a single-level 2-D decomposition.
pub const NUM_BANDS: usize = 9;

/// Band index for the filter pair `(row filter, column filter)`.
pub const fn band_index(i: usize, j: usize) -> usize {
    3 * i + j
}

/// Framelet coefficients: `bands[channel][band]`, each the size of the image.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameletCoeffs {
    bands: Vec<Vec<Array2<f64>>>,
}

impl FrameletCoeffs {
    pub fn from_bands(bands: Vec<Vec<Array2<f64>>>) -> Result<Self> {
        if bands.is_empty() || bands.iter().any(|b| b.len() != NUM_BANDS) {
            return Err(dim_err("framelet coefficients need 9 bands per channel"));
        }
        let dim = bands[0][0].dim();
        if bands.iter().flatten().any(|b| b.dim() != dim) {
            return Err(dim_err("framelet bands differ in shape"));
        }
        Ok(FrameletCoeffs { bands })
    }

    pub fn zeros(rows: usize, cols: usize, channels: usize) -> Self {
        FrameletCoeffs {
            bands: (0..channels)
                .map(|_| (0..NUM_BANDS).map(|_| Array2::zeros((rows, cols))).collect())
                .collect(),
        }
    }

    pub fn dim(&self) -> (usize, usize) {
        self.bands[0][0].dim()
    }

    pub fn channels(&self) -> usize {
        self.bands.len()
    }

    pub fn band(&self, channel: usize, band: usize) -> &Array2<f64> {
        &self.bands[channel][band]
    }

    pub fn band_mut(&mut self, channel: usize, band: usize) -> &mut Array2<f64> {
        &mut self.bands[channel][band]
    }

    pub fn energy(&self) -> f64 {
        self.bands.iter().flatten().flat_map(|b| b.iter()).map(|v| v * v).sum()
    }

    /// Keeps coefficients where `keep(mask bit)` holds, zeroing the rest.
    fn masked(&self, mask: &MinMask, keep: bool) -> FrameletCoeffs {
        let bands = self
            .bands
            .iter()
            .zip(&mask.bits)
            .map(|(cb, mb)| {
                cb.iter()
                    .zip(mb)
                    .map(|(b, m)| {
                        ndarray::Zip::from(b)
                            .and(m)
                            .map_collect(|&v, &bit| if bit == keep { v } else { 0.0 })
                    })
                    .collect()
            })
            .collect();
        FrameletCoeffs { bands }
    }
}

/// Periodic correlation along one axis with a centred 3-tap filter:
/// `out[p] = sum_a h[a + 1] * x[p + a]`.
fn filter_axis(x: &Array2<f64>, h: &[f64; 3], axis0: bool) -> Array2<f64> {
    let (m, n) = x.dim();
    Array2::from_shape_fn((m, n), |(i, j)| {
        if axis0 {
            let up = x[[(i + m - 1) % m, j]];
            let dn = x[[(i + 1) % m, j]];
            h[0] * up + h[1] * x[[i, j]] + h[2] * dn
        } else {
            let lf = x[[i, (j + n - 1) % n]];
            let rt = x[[i, (j + 1) % n]];
            h[0] * lf + h[1] * x[[i, j]] + h[2] * rt
        }
    })
}

/// Adjoint of [`filter_axis`]: `out[p] = sum_a h[a + 1] * x[p - a]`.
fn filter_axis_adjoint(x: &Array2<f64>, h: &[f64; 3], axis0: bool) -> Array2<f64> {
    let flipped = [h[2], h[1], h[0]];
    filter_axis(x, &flipped, axis0)
}

fn analyze_plane(plane: &Array2<f64>) -> Vec<Array2<f64>> {
    let mut bands = Vec::with_capacity(NUM_BANDS);
    for hi in &FILTERS {
        let rows = filter_axis(plane, hi, true);
        for hj in &FILTERS {
            bands.push(filter_axis(&rows, hj, false));
        }
    }
    bands
}

fn synthesize_plane(bands: &[Array2<f64>]) -> Array2<f64> {
    let mut out = Array2::zeros(bands[0].dim());
    for (i, hi) in FILTERS.iter().enumerate() {
        let mut cols = Array2::zeros(bands[0].dim());
        for (j, hj) in FILTERS.iter().enumerate() {
            cols += &filter_axis_adjoint(&bands[band_index(i, j)], hj, false);
        }
        out += &filter_axis_adjoint(&cols, hi, true);
    }
    out
}

/// Applies `W` to every channel.
pub fn framelet_analysis(img: &ImageField) -> FrameletCoeffs {
    FrameletCoeffs { bands: img.planes().iter().map(analyze_plane).collect() }
}

/// Applies `W^T`; inverts [`framelet_analysis`].
pub fn framelet_synthesis(c: &FrameletCoeffs) -> Result<ImageField> {
    let dim = c.dim();
    if c.bands.iter().flatten().any(|b| b.dim() != dim) {
        return Err(dim_err("framelet bands differ in shape"));
    }
    ImageField::from_planes(c.bands.iter().map(|b| synthesize_plane(b)).collect())
}

/// Location of one FPMP entry: which band and which patch of the patch grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PatchIndex {
    pub band: usize,
    pub patch_row: usize,
    pub patch_col: usize,
}

/// Patch-wise minima of the framelet bands, ordered band-major then row-major over patches.
#[derive(Debug, Clone, PartialEq)]
pub struct FpmpVector {
    pub values: Vec<f64>,
    pub patch_index: Vec<PatchIndex>,
}

impl FpmpVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn with_values(&self, values: Vec<f64>) -> FpmpVector {
        assert_eq!(values.len(), self.values.len());
        FpmpVector { values, patch_index: self.patch_index.clone() }
    }
}

/// Binary selector of the coefficient that attains each patch minimum.
#[derive(Debug, Clone, PartialEq)]
pub struct MinMask {
    patch: usize,
    /// `bits[channel][band]`
    bits: Vec<Vec<Array2<bool>>>,
    /// `(channel, row, col)` of each entry, aligned with [`FpmpVector`] order.
    positions: Vec<(usize, usize, usize)>,
}

impl MinMask {
    pub fn patch_size(&self) -> usize {
        self.patch
    }

    pub fn dim(&self) -> (usize, usize) {
        self.bits[0][0].dim()
    }

    pub fn channels(&self) -> usize {
        self.bits.len()
    }

    pub fn bit(&self, channel: usize, band: usize, row: usize, col: usize) -> bool {
        self.bits[channel][band][[row, col]]
    }

    pub fn count_set(&self) -> usize {
        self.bits.iter().flatten().map(|b| b.iter().filter(|&&v| v).count()).sum()
    }

    pub fn positions(&self) -> &[(usize, usize, usize)] {
        &self.positions
    }

    /// A mask with every coefficient selected (or none).
    ///
    /// Such masks do not correspond to an FPMP extraction; they are only
    /// meaningful for [`split_by_mask`].
    pub fn uniform(rows: usize, cols: usize, channels: usize, value: bool) -> MinMask {
        MinMask {
            patch: 0,
            bits: (0..channels)
                .map(|_| (0..NUM_BANDS).map(|_| Array2::from_elem((rows, cols), value)).collect())
                .collect(),
            positions: Vec::new(),
        }
    }
}

/// Number of patches along a side of length `len` for patch size `r` (edge patches are ragged).
pub fn patch_count(len: usize, r: usize) -> usize {
    len.div_ceil(r)
}

/// FPMP over precomputed coefficients.
pub fn fpmp_coeffs(c: &FrameletCoeffs, r: usize) -> Result<(FpmpVector, MinMask)> {
    if r < 1 {
        return Err(param_err("patch size must be at least 1"));
    }
    let (m, n) = c.dim();
    let (pr, pc) = (patch_count(m, r), patch_count(n, r));
    let total = NUM_BANDS * pr * pc;
    let mut values = Vec::with_capacity(total);
    let mut patch_index = Vec::with_capacity(total);
    let mut positions = Vec::with_capacity(total);
    let mut bits: Vec<Vec<Array2<bool>>> = (0..c.channels())
        .map(|_| (0..NUM_BANDS).map(|_| Array2::from_elem((m, n), false)).collect())
        .collect();

    for band in 0..NUM_BANDS {
        for prow in 0..pr {
            for pcol in 0..pc {
                let mut best = f64::INFINITY;
                let mut at = (0, prow * r, pcol * r);
                for i in prow * r..((prow + 1) * r).min(m) {
                    for j in pcol * r..((pcol + 1) * r).min(n) {
                        for ch in 0..c.channels() {
                            let v = c.bands[ch][band][[i, j]];
                            if v < best {
                                best = v;
                                at = (ch, i, j);
                            }
                        }
                    }
                }
                bits[at.0][band][[at.1, at.2]] = true;
                values.push(best);
                patch_index.push(PatchIndex { band, patch_row: prow, patch_col: pcol });
                positions.push(at);
            }
        }
    }
    Ok((FpmpVector { values, patch_index }, MinMask { patch: r, bits, positions }))
}

/// Framelet patch-wise minimal pixels of `img` and the mask of their positions.
///
/// Ties resolve to the first coefficient in row-major order (channels scanned
/// innermost).
pub fn fpmp(img: &ImageField, r: usize) -> Result<(FpmpVector, MinMask)> {
    fpmp_coeffs(&framelet_analysis(img), r)
}

/// Centred sliding-window minimum, with the window clipped at image borders.
fn sliding_min(planes: &[&Array2<f64>], r: usize) -> Array2<f64> {
    let (m, n) = planes[0].dim();
    let half = r / 2;
    // Separable: min over rows then over columns.
    let chan_min = Array2::from_shape_fn((m, n), |(i, j)| {
        planes.iter().map(|p| p[[i, j]]).fold(f64::INFINITY, f64::min)
    });
    let rows = Array2::from_shape_fn((m, n), |(i, j)| {
        let lo = i.saturating_sub(half);
        let hi = (i + half).min(m - 1);
        chan_min.slice(s![lo..=hi, j]).fold(f64::INFINITY, |a, &b| a.min(b))
    });
    Array2::from_shape_fn((m, n), |(i, j)| {
        let lo = j.saturating_sub(half);
        let hi = (j + half).min(n - 1);
        rows.slice(s![i, lo..=hi]).fold(f64::INFINITY, |a, &b| a.min(b))
    })
}

/// Framelet dark channel: sliding-window minima of each band, tiled into a `3m x 3n` map
/// with band `(i, j)` at tile row `i`, tile column `j`.
pub fn fdc(img: &ImageField, r: usize) -> Result<ImageField> {
    if r % 2 == 0 {
        return Err(param_err(format!("FDC window must be odd, got {r}")));
    }
    let c = framelet_analysis(img);
    let (m, n) = c.dim();
    let mut tiled = Array2::zeros((3 * m, 3 * n));
    for i in 0..3 {
        for j in 0..3 {
            let b = band_index(i, j);
            let planes: Vec<&Array2<f64>> = (0..c.channels()).map(|ch| c.band(ch, b)).collect();
            tiled
                .slice_mut(s![i * m..(i + 1) * m, j * n..(j + 1) * n])
                .assign(&sliding_min(&planes, r));
        }
    }
    Ok(ImageField::gray(tiled))
}

/// Patch minima of raw pixels (the non-framelet counterpart of FPMP).
pub fn pmp(img: &ImageField, r: usize) -> Result<Vec<f64>> {
    if r < 1 {
        return Err(param_err("patch size must be at least 1"));
    }
    let (m, n) = img.dim();
    let mut out = Vec::with_capacity(patch_count(m, r) * patch_count(n, r));
    for prow in 0..patch_count(m, r) {
        for pcol in 0..patch_count(n, r) {
            let mut best = f64::INFINITY;
            for p in img.planes() {
                let patch = p.slice(s![prow * r..((prow + 1) * r).min(m), pcol * r..((pcol + 1) * r).min(n)]);
                best = patch.fold(best, |a, &b| a.min(b));
            }
            out.push(best);
        }
    }
    Ok(out)
}

/// Sliding-window minimum of raw pixels over channels (the classical dark channel).
pub fn dark_channel(img: &ImageField, r: usize) -> Result<ImageField> {
    if r % 2 == 0 {
        return Err(param_err(format!("dark-channel window must be odd, got {r}")));
    }
    let planes: Vec<&Array2<f64>> = img.planes().iter().collect();
    Ok(ImageField::gray(sliding_min(&planes, r)))
}

fn check_mask(img_dim: (usize, usize), channels: usize, mask: &MinMask) -> Result<()> {
    if mask.dim() != img_dim || mask.channels() != channels {
        return Err(dim_err(format!(
            "mask {:?}x{} does not match image {:?}x{}",
            mask.dim(),
            mask.channels(),
            img_dim,
            channels
        )));
    }
    Ok(())
}

/// Splits `img` into the synthesis of its masked and unmasked coefficients.
/// The two parts sum back to `img`.
pub fn split_by_mask(img: &ImageField, mask: &MinMask) -> Result<(ImageField, ImageField)> {
    check_mask(img.dim(), img.channels(), mask)?;
    split_coeffs(&framelet_analysis(img), mask)
}

pub(crate) fn split_coeffs(c: &FrameletCoeffs, mask: &MinMask) -> Result<(ImageField, ImageField)> {
    check_mask(c.dim(), c.channels(), mask)?;
    Ok((framelet_synthesis(&c.masked(mask, true))?, framelet_synthesis(&c.masked(mask, false))?))
}

/// Places each entry of `n` at its masked coefficient and synthesizes (`W^T P^T n`).
pub fn scatter_minima(n: &FpmpVector, mask: &MinMask) -> Result<ImageField> {
    if n.len() != mask.positions.len() {
        return Err(dim_err(format!(
            "FPMP vector has {} entries, mask selects {}",
            n.len(),
            mask.positions.len()
        )));
    }
    let (m, cols) = mask.dim();
    let mut c = FrameletCoeffs::zeros(m, cols, mask.channels());
    for ((&v, idx), &(ch, i, j)) in n.values.iter().zip(&n.patch_index).zip(&mask.positions) {
        c.bands[ch][idx.band][[i, j]] += v;
    }
    framelet_synthesis(&c)
}
