//! Non-blind ADMM solver for Poissonian deblurring with the FPMP prior.
//!
//! The model is
//!
//! ```text
//! min_{x >= 0}  mu <1, kx - y log(kx)> + lambda ||P_w(x)||_0 + ||grad^alpha x||_l
//! ```
//!
//! with `l` either 0 or 1. Splitting `v = kx`, `z = grad^alpha x`, `m = x`
//! gives closed-form updates for `v` (positive quadratic root), `z` (soft or
//! hard threshold) and `m` (projection). The `x` update introduces the FPMP
//! proxy `n` and splits `x` through the minimal-pixel mask `M` into
//! `x_p = W^T (M . Wx)` and `x_hat = W^T ((1 - M) . Wx)`; both halves are
//! solved exactly in the Fourier domain, alternating once per outer
//! iteration by default.

use std::io::Write;

use ndarray::{Array2, Zip};
use rustfft::num_complex::Complex64;

use crate::error::{param_err, Error, Result};
use crate::fft::{Fft2, FreqField};
use crate::fracgrad::{frac_grad, frac_symbol, gl_coeffs, FracSymbol, GlCoeffs, GradPair, DEFAULT_GL_LEN};
use crate::framelet::{fpmp, framelet_analysis, fpmp_coeffs, scatter_minima, split_coeffs, FpmpVector, MinMask};
use crate::image::{abs2, BlurOperator, ImageField, Kernel};
use crate::metrics::{psnr, rel_change, ssim};

/// Clamp applied to `kx` inside the logarithm of the data term.
pub const LOG_EPS: f64 = 1e-12;
/// Magnitude below which an entry counts as zero for `||.||_0`.
pub const L0_EPS: f64 = 1e-10;

/// Which norm regularizes the fractional gradient.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Norm {
    L0,
    L1,
}

impl std::str::FromStr for Norm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "l0" => Ok(Norm::L0),
            "l1" => Ok(Norm::L1),
            other => Err(Error::Parse(format!("unknown norm '{other}', expected l0 or l1"))),
        }
    }
}

impl std::fmt::Display for Norm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Norm::L0 => "l0",
            Norm::L1 => "l1",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Weight of the Poisson data term.
    pub mu: f64,
    /// Weight of the FPMP sparsity term.
    pub lambda: f64,
    /// Penalty on `v = kx`.
    pub gamma: f64,
    /// Penalty on `m = x`.
    pub eta: f64,
    /// Penalty on `z = grad^alpha x`.
    pub beta: f64,
    /// Penalty tying `n` to the FPMP of `x`.
    pub rho: f64,
    /// Fractional order.
    pub alpha: f64,
    /// Grünwald–Letnikov truncation length.
    pub gl_len: usize,
    /// FPMP patch size.
    pub patch: usize,
    pub norm: Norm,
    /// Stop when the relative change of `x` drops to this value.
    pub tol: f64,
    pub max_iter: usize,
    /// Alternations between the `x_hat` and `x_p` solves per outer iteration.
    pub sweeps: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            mu: 100.0,
            lambda: 1.0,
            gamma: 0.01,
            eta: 1.0,
            beta: 0.01,
            rho: 1.0,
            alpha: 0.5,
            gl_len: DEFAULT_GL_LEN,
            patch: 15,
            norm: Norm::L1,
            tol: 1e-4,
            max_iter: 300,
            sweeps: 1,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("mu", self.mu),
            ("gamma", self.gamma),
            ("eta", self.eta),
            ("beta", self.beta),
            ("rho", self.rho),
            ("tol", self.tol),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(param_err(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(param_err("lambda must be non-negative"));
        }
        if !self.alpha.is_finite() {
            return Err(param_err("alpha must be finite"));
        }
        if self.gl_len == 0 || self.patch == 0 || self.max_iter == 0 || self.sweeps == 0 {
            return Err(param_err("gl_len, patch, max_iter and sweeps must be at least 1"));
        }
        Ok(())
    }
}

/// Blur and fractional-gradient operators prepared for one image shape.
#[derive(Debug, Clone)]
pub struct Operators {
    blur: BlurOperator,
    gl: GlCoeffs,
    sym: FracSymbol,
    k_abs2: Array2<f64>,
}

impl Operators {
    pub fn new(k: &Kernel, shape: (usize, usize), alpha: f64, gl_len: usize) -> Result<Self> {
        let blur = BlurOperator::new(k, shape)?;
        let gl = gl_coeffs(alpha, gl_len)?;
        let sym = frac_symbol(&gl, shape)?;
        let k_abs2 = abs2(blur.otf());
        Ok(Operators { blur, gl, sym, k_abs2 })
    }

    pub fn for_config(k: &Kernel, shape: (usize, usize), cfg: &SolverConfig) -> Result<Self> {
        Self::new(k, shape, cfg.alpha, cfg.gl_len)
    }

    pub fn blur(&self) -> &BlurOperator {
        &self.blur
    }

    pub fn gl(&self) -> &GlCoeffs {
        &self.gl
    }

    pub fn symbol(&self) -> &FracSymbol {
        &self.sym
    }

    fn fft(&self) -> &Fft2 {
        self.blur.fft()
    }

    pub fn grad(&self, x: &ImageField) -> GradPair {
        frac_grad(x, &self.gl).expect("operator shape checked at construction")
    }
}

/// One row of the convergence history.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterRecord {
    pub iter: usize,
    pub energy: f64,
    pub rel_change: f64,
    pub psnr: Option<f64>,
    pub ssim: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct History {
    pub records: Vec<IterRecord>,
    /// Whether the relative-change tolerance was reached.
    pub converged: bool,
}

impl History {
    pub const CSV_HEADER: &'static str = "iter,energy,rel_change,psnr,ssim";

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&IterRecord> {
        self.records.last()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{}", Self::CSV_HEADER)?;
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
        for r in &self.records {
            writeln!(
                w,
                "{},{:.9e},{:.9e},{},{}",
                r.iter,
                r.energy,
                r.rel_change,
                opt(r.psnr.map(crate::metrics::capped_psnr)),
                opt(r.ssim)
            )?;
        }
        Ok(())
    }
}

/// All ADMM iterates.
#[derive(Debug, Clone)]
pub struct AdmmState {
    pub x: ImageField,
    pub v: ImageField,
    pub m: ImageField,
    pub z: GradPair,
    pub n: FpmpVector,
    pub mask: MinMask,
    pub p1: ImageField,
    pub p2: ImageField,
    pub p3: GradPair,
    pub iter: usize,
    pub history: History,
}

impl AdmmState {
    /// `x = y`, `n` and the mask from the FPMP of `y`, `z = grad^alpha y`, everything else zero.
    pub fn init(y: &ImageField, ops: &Operators, cfg: &SolverConfig) -> Result<Self> {
        let (n, mask) = fpmp(y, cfg.patch)?;
        Ok(AdmmState {
            x: y.clone(),
            v: y.zeros_like(),
            m: y.zeros_like(),
            z: ops.grad(y),
            n,
            mask,
            p1: y.zeros_like(),
            p2: y.zeros_like(),
            p3: GradPair::zeros_like(y),
            iter: 0,
            history: History::default(),
        })
    }
}

/// Positive root of `gamma v^2 + (mu - gamma kx - p1) v - mu y = 0`, elementwise.
pub fn update_v(kx: &ImageField, p1: &ImageField, y: &ImageField, mu: f64, gamma: f64) -> ImageField {
    let mut out = kx.zeros_like();
    for c in 0..kx.channels() {
        Zip::from(&mut out.planes_mut()[c])
            .and(kx.plane(c))
            .and(p1.plane(c))
            .and(y.plane(c))
            .for_each(|o, &k, &p, &yy| *o = v_root(k, p, yy, mu, gamma));
    }
    out
}

fn v_root(kx: f64, p1: f64, y: f64, mu: f64, gamma: f64) -> f64 {
    let a = gamma * kx + p1 - mu;
    let c = 4.0 * mu * gamma * y;
    let disc = (a * a + c).sqrt();
    if a >= 0.0 {
        (a + disc) / (2.0 * gamma)
    } else if c > 0.0 {
        // Same root, rearranged to avoid cancellation when a < 0.
        2.0 * mu * y / (disc - a)
    } else {
        0.0
    }
}

/// Hard threshold of the FPMP entries: keep `p` when `p^2 >= 2 lambda / rho`.
pub fn update_n(px: &FpmpVector, lambda: f64, rho: f64) -> FpmpVector {
    let thresh = 2.0 * lambda / rho;
    px.with_values(px.values.iter().map(|&p| if p * p >= thresh { p } else { 0.0 }).collect())
}

pub fn shrink(a: f64, b: f64) -> f64 {
    a.signum() * (a.abs() - b).max(0.0)
}

/// Proximal step for `z` on `w = grad + p3 / beta`.
pub fn update_z(grad: &GradPair, p3: &GradPair, beta: f64, norm: Norm) -> GradPair {
    let inv = 1.0 / beta;
    let hard = 2.0 / beta;
    grad.zip_map(p3, move |g, p| {
        let w = g + p * inv;
        match norm {
            Norm::L1 => shrink(w, inv),
            Norm::L0 => {
                if w * w >= hard {
                    w
                } else {
                    0.0
                }
            }
        }
    })
}

/// Projection `max(x + p2 / eta, 0)`.
pub fn update_m(x: &ImageField, p2: &ImageField, eta: f64) -> ImageField {
    x.zip_map(p2, |a, p| (a + p / eta).max(0.0))
}

/// Dual ascent on the three constraints, evaluated at the state's current `x`, `v`, `m`, `z`.
pub fn update_multipliers(state: &AdmmState, ops: &Operators, cfg: &SolverConfig) -> (ImageField, ImageField, GradPair) {
    let kx = ops.blur.apply(&state.x);
    let gx = ops.grad(&state.x);
    multipliers_from(state, &kx, &gx, cfg)
}

fn multipliers_from(
    state: &AdmmState,
    kx: &ImageField,
    gx: &GradPair,
    cfg: &SolverConfig,
) -> (ImageField, ImageField, GradPair) {
    let (g, e, b) = (cfg.gamma, cfg.eta, cfg.beta);
    let r1 = kx - &state.v;
    let r2 = &state.x - &state.m;
    let p1 = state.p1.zip_map(&r1, |p, r| p + g * r);
    let p2 = state.p2.zip_map(&r2, |p, r| p + e * r);
    let r3 = gx.zip_map(&state.z, |a, z| a - z);
    let p3 = state.p3.zip_map(&r3, |p, r| p + b * r);
    (p1, p2, p3)
}

/// Result of the `x` step, with the two mask-split halves kept for inspection.
#[derive(Debug, Clone)]
pub struct XUpdate {
    pub x: ImageField,
    pub x_p: ImageField,
    pub x_hat: ImageField,
}

/// Right-hand-side ingredients of the `x` step for one channel, in the Fourier domain.
struct ChannelSpectra {
    xi1: FreqField,
    xi2: FreqField,
    xi3h: FreqField,
    xi3v: FreqField,
    xi7: FreqField,
}

/// Solves the two mask-split normal equations by FFT.
///
/// With `xi1 = v - p1/gamma`, `xi2 = m - p2/eta`, `xi3 = z - p3/beta`,
/// `xi7 = W^T P^T n`:
///
/// ```text
/// (gamma K^T K + eta I + beta D^T D) x_hat = gamma K^T (xi1 - K x_p) + eta (xi2 - x_p) + beta D^T (xi3 - D x_p)
/// (gamma K^T K + (eta + rho) I + beta D^T D) x_p = gamma K^T (xi1 - K x_hat) + eta (xi2 - x_hat)
///                                                 + beta D^T (xi3 - D x_hat) + rho xi7
/// ```
///
/// starting from the masked part of the current `x`.
pub fn update_x(state: &AdmmState, ops: &Operators, cfg: &SolverConfig) -> Result<XUpdate> {
    let coeffs = framelet_analysis(&state.x);
    let (x_p0, _) = split_coeffs(&coeffs, &state.mask)?;
    let xi7 = scatter_minima(&state.n, &state.mask)?;
    let fft = ops.fft();
    let (g, e, b, r) = (cfg.gamma, cfg.eta, cfg.beta, cfg.rho);

    let mut x_p = state.x.zeros_like();
    let mut x_hat = state.x.zeros_like();
    for c in 0..state.x.channels() {
        let xi1 = Zip::from(state.v.plane(c)).and(state.p1.plane(c)).map_collect(|&v, &p| v - p / g);
        let xi2 = Zip::from(state.m.plane(c)).and(state.p2.plane(c)).map_collect(|&m, &p| m - p / e);
        let xi3h = Zip::from(state.z.h.plane(c)).and(state.p3.h.plane(c)).map_collect(|&z, &p| z - p / b);
        let xi3v = Zip::from(state.z.v.plane(c)).and(state.p3.v.plane(c)).map_collect(|&z, &p| z - p / b);
        let spectra = ChannelSpectra {
            xi1: fft.forward(&xi1),
            xi2: fft.forward(&xi2),
            xi3h: fft.forward(&xi3h),
            xi3v: fft.forward(&xi3v),
            xi7: fft.forward(xi7.plane(c)),
        };
        let mut xp_hat = fft.forward(x_p0.plane(c));
        let mut xh_hat = FreqField::zeros(xp_hat.dim());
        for _ in 0..cfg.sweeps {
            xh_hat = solve_spectrum(ops, &spectra, &xp_hat, g, e, b, None);
            xp_hat = solve_spectrum(ops, &spectra, &xh_hat, g, e, b, Some(r));
        }
        x_p.planes_mut()[c] = fft.inverse_real(&xp_hat);
        x_hat.planes_mut()[c] = fft.inverse_real(&xh_hat);
    }
    let x = &x_p + &x_hat;
    Ok(XUpdate { x, x_p, x_hat })
}

/// Pointwise Fourier solve of one half given the spectrum of the other half.
fn solve_spectrum(
    ops: &Operators,
    s: &ChannelSpectra,
    other: &FreqField,
    gamma: f64,
    eta: f64,
    beta: f64,
    rho: Option<f64>,
) -> FreqField {
    let k = ops.blur.otf();
    let (dh, dv) = (&ops.sym.h, &ops.sym.v);
    let rho_v = rho.unwrap_or(0.0);
    let mut out = FreqField::zeros(other.dim());
    Zip::indexed(&mut out).for_each(|idx, o| {
        let oth = other[idx];
        let kk = k[idx];
        let (h, v) = (dh[idx], dv[idx]);
        let mut num: Complex64 = gamma * kk.conj() * (s.xi1[idx] - kk * oth)
            + eta * (s.xi2[idx] - oth)
            + beta * (h.conj() * (s.xi3h[idx] - h * oth) + v.conj() * (s.xi3v[idx] - v * oth));
        if rho.is_some() {
            num += rho_v * s.xi7[idx];
        }
        let den = gamma * ops.k_abs2[idx] + eta + rho_v + beta * ops.sym.energy[idx];
        *o = num / den;
    });
    out
}

/// Value of the model objective at `x`; `+inf` when `x` has a negative entry.
pub fn objective_energy(x: &ImageField, y: &ImageField, k: &Kernel, cfg: &SolverConfig) -> Result<f64> {
    x.check_same_shape(y, "objective")?;
    let ops = Operators::for_config(k, x.dim(), cfg)?;
    energy_with(x, y, &ops, cfg)
}

fn energy_with(x: &ImageField, y: &ImageField, ops: &Operators, cfg: &SolverConfig) -> Result<f64> {
    if x.iter().any(|&v| v < 0.0) {
        return Ok(f64::INFINITY);
    }
    let kx = ops.blur.apply(x);
    let data: f64 = kx
        .iter()
        .zip(y.iter())
        .map(|(&k, &yy)| if yy == 0.0 { k } else { k - yy * k.max(LOG_EPS).ln() })
        .sum();
    let (px, _) = fpmp(x, cfg.patch)?;
    let prior = px.values.iter().filter(|v| v.abs() > L0_EPS).count() as f64;
    let g = ops.grad(x);
    let reg = match cfg.norm {
        Norm::L1 => g.iter().map(|v| v.abs()).sum::<f64>(),
        Norm::L0 => g.iter().filter(|v| v.abs() > L0_EPS).count() as f64,
    };
    Ok(cfg.mu * data + cfg.lambda * prior + reg)
}

/// Reference image used to annotate the history with PSNR and SSIM.
#[derive(Debug, Clone, Copy)]
pub struct Tracking<'a> {
    pub reference: &'a ImageField,
    pub peak: f64,
}

impl<'a> Tracking<'a> {
    /// Uses the reference maximum as PSNR peak.
    pub fn new(reference: &'a ImageField) -> Self {
        Tracking { reference, peak: reference.max().max(f64::MIN_POSITIVE) }
    }
}

/// Performs one full ADMM iteration in place and returns the relative change of `x`.
pub fn step(
    state: &mut AdmmState,
    y: &ImageField,
    ops: &Operators,
    cfg: &SolverConfig,
    tracking: Option<Tracking<'_>>,
) -> Result<f64> {
    let iter = state.iter + 1;
    let finite = |ok: bool, what: &'static str| if ok { Ok(()) } else { Err(Error::NonFinite { iter, what }) };

    let kx = ops.blur.apply(&state.x);
    state.v = update_v(&kx, &state.p1, y, cfg.mu, cfg.gamma);
    finite(state.v.is_finite(), "v")?;

    let XUpdate { x, .. } = update_x(state, ops, cfg)?;
    finite(x.is_finite(), "x")?;

    // FPMP of the new iterate feeds both n and next iteration's mask.
    let (px, mask) = fpmp_coeffs(&framelet_analysis(&x), cfg.patch)?;
    state.n = update_n(&px, cfg.lambda, cfg.rho);
    state.mask = mask;

    let gx = ops.grad(&x);
    state.z = update_z(&gx, &state.p3, cfg.beta, cfg.norm);
    state.m = update_m(&x, &state.p2, cfg.eta);

    let x_old = std::mem::replace(&mut state.x, x);
    let kx_new = ops.blur.apply(&state.x);
    let (p1, p2, p3) = multipliers_from(state, &kx_new, &gx, cfg);
    state.p1 = p1;
    state.p2 = p2;
    state.p3 = p3;
    finite(state.p1.is_finite() && state.p2.is_finite() && state.p3.is_finite(), "multipliers")?;

    let change = rel_change(&state.x, &x_old).unwrap_or(f64::INFINITY);
    let projected = state.x.clip_nonneg();
    let energy = energy_with(&projected, y, ops, cfg)?;
    let (psnr_v, ssim_v) = match tracking {
        Some(t) => (Some(psnr(&projected, t.reference, t.peak)?), Some(ssim(&projected, t.reference, t.peak)?)),
        None => (None, None),
    };
    state.iter = iter;
    state.history.records.push(IterRecord { iter, energy, rel_change: change, psnr: psnr_v, ssim: ssim_v });
    Ok(change)
}

/// Runs up to `max_iter` iterations from the given state; returns whether `tol` was reached.
pub fn run(
    state: &mut AdmmState,
    y: &ImageField,
    ops: &Operators,
    cfg: &SolverConfig,
    max_iter: usize,
    tracking: Option<Tracking<'_>>,
) -> Result<bool> {
    for _ in 0..max_iter {
        if step(state, y, ops, cfg, tracking)? <= cfg.tol {
            state.history.converged = true;
            return Ok(true);
        }
    }
    Ok(false)
}

fn check_inputs(y: &ImageField, cfg: &SolverConfig) -> Result<()> {
    cfg.validate()?;
    if y.iter().any(|&v| v < 0.0 || !v.is_finite()) {
        return Err(param_err("observation must be finite and non-negative"));
    }
    Ok(())
}

/// Restores `y` blurred by `k`; returns the non-negative estimate and its history.
pub fn solve_nonblind(y: &ImageField, k: &Kernel, cfg: &SolverConfig) -> Result<(ImageField, History)> {
    solve_nonblind_tracked(y, k, cfg, None)
}

/// [`solve_nonblind`] with PSNR/SSIM against a reference recorded per iteration.
pub fn solve_nonblind_tracked(
    y: &ImageField,
    k: &Kernel,
    cfg: &SolverConfig,
    tracking: Option<Tracking<'_>>,
) -> Result<(ImageField, History)> {
    check_inputs(y, cfg)?;
    if let Some(t) = tracking {
        y.check_same_shape(t.reference, "reference")?;
    }
    let ops = Operators::for_config(k, y.dim(), cfg)?;
    let mut state = AdmmState::init(y, &ops, cfg)?;
    run(&mut state, y, &ops, cfg, cfg.max_iter, tracking)?;
    Ok((state.x.clip_nonneg(), state.history))
}

/// Outcome of [`grid_search`].
#[derive(Debug, Clone)]
pub struct GridResult {
    pub config: SolverConfig,
    pub psnr: f64,
    pub image: ImageField,
    pub history: History,
}

/// Solves with every candidate configuration and keeps the highest PSNR against `reference`.
pub fn grid_search<I>(y: &ImageField, k: &Kernel, reference: &ImageField, candidates: I) -> Result<GridResult>
where
    I: IntoIterator<Item = SolverConfig>,
{
    let peak = reference.max();
    let mut best: Option<GridResult> = None;
    for cfg in candidates {
        let (image, history) = solve_nonblind(y, k, &cfg)?;
        let score = psnr(&image, reference, peak)?;
        if best.as_ref().is_none_or(|b| score > b.psnr) {
            best = Some(GridResult { config: cfg, psnr: score, image, history });
        }
    }
    best.ok_or_else(|| param_err("grid search needs at least one candidate"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::framelet::MinMask;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn scalar(v: f64) -> ImageField {
        ImageField::filled(1, 1, 1, v)
    }

    #[test]
    fn v_fixed_point_when_data_matches() {
        let kx = ImageField::gray(Array2::from_shape_fn((3, 3), |(i, j)| 1.0 + (i * 3 + j) as f64));
        let v = update_v(&kx, &kx.zeros_like(), &kx, 7.0, 0.3);
        for (a, b) in v.iter().zip(kx.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn v_without_data_weight_is_projection() {
        for (kx, p1) in [(2.0, 0.5), (-3.0, 1.0), (0.5, -2.0)] {
            let v = update_v(&scalar(kx), &scalar(p1), &scalar(4.0), 0.0, 0.5);
            assert_abs_diff_eq!(v.plane(0)[[0, 0]], (kx + p1 / 0.5f64).max(0.0), epsilon = 1e-14);
        }
    }

    #[test]
    fn v_scalar_root() {
        let v = update_v(&scalar(0.0), &scalar(0.0), &scalar(1.0), 1.0, 1.0);
        // gamma v^2 + mu v - mu y = 0  =>  v^2 + v - 1 = 0.
        assert_abs_diff_eq!(v.plane(0)[[0, 0]], (5f64.sqrt() - 1.0) / 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(v.plane(0)[[0, 0]], 0.618034, epsilon = 1e-6);
    }

    #[test]
    fn n_hard_threshold() {
        let px = FpmpVector { values: vec![2.0, 1.0, -2.0], patch_index: vec![] };
        let px = FpmpVector {
            patch_index: vec![crate::framelet::PatchIndex { band: 0, patch_row: 0, patch_col: 0 }; 3],
            ..px
        };
        assert_eq!(update_n(&px, 1.0, 1.0).values, vec![2.0, 0.0, -2.0]);
        // lambda = 2: threshold 4, boundary kept.
        assert_eq!(update_n(&px, 2.0, 1.0).values, vec![2.0, 0.0, -2.0]);
        assert_eq!(update_n(&px, 2.01, 1.0).values, vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn shrink_examples() {
        assert_eq!(shrink(2.0, 1.0), 1.0);
        assert_eq!(shrink(-0.5, 1.0), 0.0);
        assert_eq!(shrink(-3.0, 1.0), -2.0);
    }

    #[test]
    fn z_l0_boundary() {
        let g = GradPair { h: scalar(2.0), v: scalar(1.0) };
        let z = update_z(&g, &GradPair::zeros_like(&scalar(0.0)), 0.5, Norm::L0);
        assert_eq!(z.h.plane(0)[[0, 0]], 2.0);
        assert_eq!(z.v.plane(0)[[0, 0]], 0.0);
    }

    #[test]
    fn z_includes_multiplier() {
        let g = GradPair { h: scalar(1.0), v: scalar(0.0) };
        let p3 = GradPair { h: scalar(2.0), v: scalar(-6.0) };
        let z = update_z(&g, &p3, 2.0, Norm::L1);
        // w = g + p3 / beta = (2, -3), threshold 0.5.
        assert_eq!(z.h.plane(0)[[0, 0]], 1.5);
        assert_eq!(z.v.plane(0)[[0, 0]], -2.5);
    }

    #[test]
    fn m_projection() {
        let x = ImageField::gray(Array2::from_shape_vec((1, 3), vec![-1.0, 0.0, 2.0]).unwrap());
        assert_eq!(update_m(&x, &x.zeros_like(), 1.0).plane(0).as_slice().unwrap(), &[0.0, 0.0, 2.0]);
        let x5 = scalar(1.0);
        assert_eq!(update_m(&x5, &scalar(8.0), 2.0).plane(0)[[0, 0]], 5.0);
        assert_eq!(update_m(&x5, &scalar(-8.0), 2.0).plane(0)[[0, 0]], 0.0);
    }

    fn small_state(seed: u64, m: usize, n: usize) -> (ImageField, Operators, SolverConfig, AdmmState) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let y = ImageField::gray(Array2::from_shape_fn((m, n), |_| rng.random_range(0.0..50.0_f64).round()));
        let cfg = SolverConfig { patch: 3, gl_len: 4, alpha: 0.7, ..SolverConfig::default() };
        let k = Kernel::uniform(3, 3).unwrap();
        let ops = Operators::for_config(&k, (m, n), &cfg).unwrap();
        let state = AdmmState::init(&y, &ops, &cfg).unwrap();
        (y, ops, cfg, state)
    }

    #[test]
    fn multipliers_unchanged_when_feasible() {
        let (_, ops, cfg, mut state) = small_state(1, 6, 6);
        state.v = ops.blur().apply(&state.x);
        state.m = state.x.clone();
        state.z = ops.grad(&state.x);
        state.p1 = state.x.map(|v| v * 0.1);
        let (p1, p2, p3) = update_multipliers(&state, &ops, &cfg);
        for (a, b) in p1.iter().zip(state.p1.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
        assert!(p2.iter().all(|v| v.abs() < 1e-12));
        assert!(p3.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn multipliers_take_penalty_steps() {
        let (_, ops, cfg, mut state) = small_state(2, 6, 6);
        state.x = ImageField::filled(6, 6, 1, 1.0);
        // kx = 1, grad of a constant = sum(w) * 1.
        state.v = ImageField::zeros(6, 6, 1);
        state.m = ImageField::zeros(6, 6, 1);
        let wsum: f64 = ops.gl().weights().iter().sum();
        state.z = GradPair::zeros_like(&state.x).map(|_| wsum - 1.0);
        let (p1, p2, p3) = update_multipliers(&state, &ops, &cfg);
        assert!(p1.iter().all(|v| (v - cfg.gamma).abs() < 1e-12));
        assert!(p2.iter().all(|v| (v - cfg.eta).abs() < 1e-12));
        assert!(p3.iter().all(|v| (v - cfg.beta).abs() < 1e-12));

        state.p1 = p1;
        state.p2 = p2;
        state.p3 = p3;
        let (q1, q2, _) = update_multipliers(&state, &ops, &cfg);
        assert!(q1.iter().all(|v| (v - 2.0 * cfg.gamma).abs() < 1e-12));
        assert!(q2.iter().all(|v| (v - 2.0 * cfg.eta).abs() < 1e-12));
    }

    #[test]
    fn x_update_reduces_to_eta_term() {
        let (_, _, _, mut state) = small_state(3, 8, 8);
        let cfg = SolverConfig { gamma: 1e-12, beta: 1e-12, patch: 3, gl_len: 4, ..SolverConfig::default() };
        let ops = Operators::for_config(&Kernel::delta(), (8, 8), &cfg).unwrap();
        state.mask = MinMask::uniform(8, 8, 1, false);
        state.n = FpmpVector { values: vec![], patch_index: vec![] };
        state.m = state.x.map(|v| v * 0.5 + 1.0);
        state.p2 = state.x.map(|v| v * 0.25);
        let xi2 = state.m.zip_map(&state.p2, |m, p| m - p / cfg.eta);
        let up = update_x(&state, &ops, &cfg).unwrap();
        for (a, b) in up.x.iter().zip(xi2.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-8);
        }
    }

    #[test]
    fn objective_simple_cases() {
        let cfg = SolverConfig { lambda: 0.0, norm: Norm::L1, patch: 2, gl_len: 2, ..SolverConfig::default() };
        let zero = ImageField::zeros(4, 4, 1);
        assert_eq!(objective_energy(&zero, &zero, &Kernel::delta(), &cfg).unwrap(), 0.0);

        let y = ImageField::filled(4, 4, 1, 3.0);
        let e = objective_energy(&y, &y, &Kernel::delta(), &cfg).unwrap();
        let data = cfg.mu * 16.0 * (3.0 - 3.0 * 3f64.ln());
        // Constant image: grad = (sum of weights) * 3 on each component.
        let wsum: f64 = gl_coeffs(cfg.alpha, 2).unwrap().weights().iter().sum();
        assert_abs_diff_eq!(e, data + 2.0 * 16.0 * (wsum * 3.0).abs(), epsilon = 1e-9);

        let neg = y.map(|v| v - 4.0);
        assert_eq!(objective_energy(&neg, &y, &Kernel::delta(), &cfg).unwrap(), f64::INFINITY);
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::default().validate().is_ok());
        assert!(SolverConfig { gamma: 0.0, ..Default::default() }.validate().is_err());
        assert!(SolverConfig { tol: -1.0, ..Default::default() }.validate().is_err());
        assert!(SolverConfig { lambda: -1.0, ..Default::default() }.validate().is_err());
        assert!(SolverConfig { patch: 0, ..Default::default() }.validate().is_err());
        assert_eq!("L1".parse::<Norm>().unwrap(), Norm::L1);
        assert!("l2".parse::<Norm>().is_err());
    }

    #[test]
    fn negative_observation_rejected() {
        let y = ImageField::filled(8, 8, 1, -1.0);
        assert!(solve_nonblind(&y, &Kernel::delta(), &SolverConfig { patch: 2, ..Default::default() }).is_err());
    }

    #[test]
    fn history_csv_layout() {
        let h = History {
            records: vec![IterRecord { iter: 1, energy: -3.0, rel_change: 0.5, psnr: Some(20.0), ssim: None }],
            converged: false,
        };
        let mut buf = Vec::new();
        h.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], History::CSV_HEADER);
        assert!(lines[1].starts_with("1,"));
        assert!(lines[1].ends_with(",20.000000,"));
    }
}
