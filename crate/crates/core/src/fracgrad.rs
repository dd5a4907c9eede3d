//! Grünwald–Letnikov fractional gradients with periodic wrap.
//!
//! For order `alpha` and truncation length `L`, the vertical-shift component is
//!
//! ```text
//! grad_h u(i, j) = sum_{l < L} w_l * u(i - l, j)
//! w_0 = 1,  w_l = w_{l-1} * (l - 1 - alpha) / l
//! ```
//!
//! and the horizontal-shift component shifts `j` instead. The weights are the
//! signed generalized binomial coefficients `(-1)^l C(alpha, l)`; for
//! `alpha = 1` they collapse to the backward difference `[1, -1, 0, ...]`.

use ndarray::{Array2, Zip};

use crate::error::{dim_err, param_err, Result};
use crate::fft::{Fft2, FreqField};
use crate::image::{abs2, ImageField};

/// Default truncation length of the G-L sum.
pub const DEFAULT_GL_LEN: usize = 12;

/// Truncated Grünwald–Letnikov weights for one order.
#[derive(Debug, Clone, PartialEq)]
pub struct GlCoeffs {
    alpha: f64,
    weights: Vec<f64>,
}

impl GlCoeffs {
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    fn check_fits(&self, (m, n): (usize, usize)) -> Result<()> {
        if self.len() > m.min(n) {
            return Err(dim_err(format!(
                "G-L length {} exceeds smallest image side {}",
                self.len(),
                m.min(n)
            )));
        }
        Ok(())
    }
}

/// Computes `len` weights by the product recurrence (no Gamma evaluations).
pub fn gl_coeffs(alpha: f64, len: usize) -> Result<GlCoeffs> {
    if len < 1 {
        return Err(param_err("G-L length must be at least 1"));
    }
    if !alpha.is_finite() {
        return Err(param_err("fractional order must be finite"));
    }
    let mut weights = Vec::with_capacity(len);
    weights.push(1.0);
    for l in 1..len {
        let prev = weights[l - 1];
        weights.push(prev * ((l as f64 - 1.0 - alpha) / l as f64));
    }
    Ok(GlCoeffs { alpha, weights })
}

/// The two components of a fractional gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct GradPair {
    pub h: ImageField,
    pub v: ImageField,
}

impl GradPair {
    pub fn zeros_like(img: &ImageField) -> Self {
        GradPair { h: img.zeros_like(), v: img.zeros_like() }
    }

    pub fn zip_map(&self, other: &GradPair, f: impl Fn(f64, f64) -> f64 + Copy) -> GradPair {
        GradPair { h: self.h.zip_map(&other.h, f), v: self.v.zip_map(&other.v, f) }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64 + Copy) -> GradPair {
        GradPair { h: self.h.map(f), v: self.v.map(f) }
    }

    pub fn dot(&self, other: &GradPair) -> f64 {
        self.h.dot(&other.h) + self.v.dot(&other.v)
    }

    pub fn is_finite(&self) -> bool {
        self.h.is_finite() && self.v.is_finite()
    }

    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.h.iter().chain(self.v.iter())
    }
}

fn shift_sum(plane: &Array2<f64>, weights: &[f64], axis0: bool, sign: isize) -> Array2<f64> {
    let (m, n) = plane.dim();
    let mut out = Array2::zeros((m, n));
    for (l, &w) in weights.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let off = sign * l as isize;
        for ((i, j), o) in out.indexed_iter_mut() {
            let (si, sj) = if axis0 {
                ((i as isize - off).rem_euclid(m as isize) as usize, j)
            } else {
                (i, (j as isize - off).rem_euclid(n as isize) as usize)
            };
            *o += w * plane[[si, sj]];
        }
    }
    out
}

/// Spatial fractional gradient of every channel.
pub fn frac_grad(img: &ImageField, c: &GlCoeffs) -> Result<GradPair> {
    c.check_fits(img.dim())?;
    Ok(GradPair {
        h: img.map_planes(|p| shift_sum(p, &c.weights, true, 1)),
        v: img.map_planes(|p| shift_sum(p, &c.weights, false, 1)),
    })
}

/// Exact adjoint of [`frac_grad`]: `sum_l w_l (g_h(i + l, j) + g_v(i, j + l))`.
pub fn frac_grad_adjoint(g: &GradPair, c: &GlCoeffs) -> Result<ImageField> {
    g.h.check_same_shape(&g.v, "gradient components")?;
    c.check_fits(g.h.dim())?;
    let h = g.h.map_planes(|p| shift_sum(p, &c.weights, true, -1));
    let v = g.v.map_planes(|p| shift_sum(p, &c.weights, false, -1));
    Ok(&h + &v)
}

/// Fourier symbols of the two gradient components and their combined energy.
#[derive(Debug, Clone)]
pub struct FracSymbol {
    pub h: FreqField,
    pub v: FreqField,
    /// `|F(grad_h)|^2 + |F(grad_v)|^2`, real by construction.
    pub energy: Array2<f64>,
}

pub fn frac_symbol(c: &GlCoeffs, shape: (usize, usize)) -> Result<FracSymbol> {
    c.check_fits(shape)?;
    let (m, n) = shape;
    let fft = Fft2::new(m, n);
    let mut stencil_h = Array2::zeros(shape);
    let mut stencil_v = Array2::zeros(shape);
    for (l, &w) in c.weights.iter().enumerate() {
        stencil_h[[l % m, 0]] += w;
        stencil_v[[0, l % n]] += w;
    }
    let h = fft.forward(&stencil_h);
    let v = fft.forward(&stencil_v);
    let energy = abs2(&h) + abs2(&v);
    Ok(FracSymbol { h, v, energy })
}

impl FracSymbol {
    /// Applies the gradient through the spectrum of one plane.
    pub fn apply_plane(&self, fft: &Fft2, plane: &Array2<f64>) -> (Array2<f64>, Array2<f64>) {
        let spec = fft.forward(plane);
        (fft.inverse_real(&(&spec * &self.h)), fft.inverse_real(&(&spec * &self.v)))
    }

    /// Spectrum of the adjoint applied to a gradient pair plane.
    pub fn adjoint_spectrum(&self, fft: &Fft2, gh: &Array2<f64>, gv: &Array2<f64>) -> FreqField {
        let mut sh = fft.forward(gh);
        let sv = fft.forward(gv);
        Zip::from(&mut sh)
            .and(&sv)
            .and(&self.h)
            .and(&self.v)
            .for_each(|a, &b, &dh, &dv| *a = *a * dh.conj() + b * dv.conj());
        sh
    }
}
