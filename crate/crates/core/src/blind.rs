//! Blind deconvolution: alternate the non-blind solver with a
//! multiplicative, TV-regularized kernel update.
//!
//! The kernel step is a Richardson–Lucy correction divided by a curvature
//! term,
//!
//! ```text
//! k_t = k / max(1 - (varrho/mu) div(grad k / |grad k|), 1e-8) . Corr(x, y / (x * k))
//! k   = max(k_t, 0) / sum(max(k_t, 0))
//! ```
//!
//! Before the loop the observation gets an edge taper so that the periodic
//! model fits the image borders better.

use ndarray::{s, Array2, Zip};

use crate::error::{param_err, Error, Result};
use crate::image::{conv2_periodic, BlurOperator, ImageField, Kernel};
use crate::metrics::rel_change;
use crate::solver::{run, AdmmState, Operators, SolverConfig};

/// Regularization of `|grad k|` and of the RL ratio denominator.
pub const KERNEL_EPS: f64 = 1e-8;
/// Lower clamp of the curvature denominator.
pub const DENOM_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct BlindConfig {
    /// Settings of the inner non-blind solver; its `tol` applies inside each outer step.
    pub inner: SolverConfig,
    pub varrho_over_mu: f64,
    /// Kernel size `(l, s)`, both odd.
    pub kernel_size: (usize, usize),
    pub outer_tol: f64,
    pub outer_max_iter: usize,
    /// Inner iterations per outer step (warm-started).
    pub inner_iter: usize,
    /// Apply [`boundary_preprocess`] once before the loop.
    pub boundary_prep: bool,
}

impl Default for BlindConfig {
    fn default() -> Self {
        BlindConfig {
            inner: SolverConfig::default(),
            varrho_over_mu: 1.0,
            kernel_size: (9, 9),
            outer_tol: 1e-3,
            outer_max_iter: 50,
            inner_iter: 30,
            boundary_prep: true,
        }
    }
}

impl BlindConfig {
    pub fn validate(&self) -> Result<()> {
        self.inner.validate()?;
        let (l, s) = self.kernel_size;
        if l % 2 == 0 || s % 2 == 0 {
            return Err(param_err(format!("kernel size must be odd, got {l}x{s}")));
        }
        if !(self.outer_tol > 0.0) {
            return Err(param_err("outer_tol must be positive"));
        }
        if !(self.varrho_over_mu >= 0.0) || !self.varrho_over_mu.is_finite() {
            return Err(param_err("varrho/mu must be non-negative"));
        }
        if self.outer_max_iter == 0 || self.inner_iter == 0 {
            return Err(param_err("iteration counts must be at least 1"));
        }
        Ok(())
    }
}

/// `div(grad k / |grad k|)` with forward differences (Neumann) and the matching backward divergence.
pub fn kernel_tv_divergence(k: &Kernel) -> Array2<f64> {
    let d = k.data();
    let (l, s) = d.dim();
    let mut px = Array2::zeros((l, s));
    let mut py = Array2::zeros((l, s));
    for i in 0..l {
        for j in 0..s {
            let gx = if j + 1 < s { d[[i, j + 1]] - d[[i, j]] } else { 0.0 };
            let gy = if i + 1 < l { d[[i + 1, j]] - d[[i, j]] } else { 0.0 };
            let mag = (gx * gx + gy * gy + KERNEL_EPS * KERNEL_EPS).sqrt();
            px[[i, j]] = gx / mag;
            py[[i, j]] = gy / mag;
        }
    }
    Array2::from_shape_fn((l, s), |(i, j)| {
        let dx = px[[i, j]] - if j > 0 { px[[i, j - 1]] } else { 0.0 };
        let dy = py[[i, j]] - if i > 0 { py[[i - 1, j]] } else { 0.0 };
        dx + dy
    })
}

/// Anisotropic TV `sum |forward differences|` of the kernel.
pub fn kernel_tv(k: &Kernel) -> f64 {
    let d = k.data();
    let dx = &d.slice(s![.., 1..]) - &d.slice(s![.., ..-1]);
    let dy = &d.slice(s![1.., ..]) - &d.slice(s![..-1, ..]);
    dx.iter().chain(dy.iter()).map(|v| v.abs()).sum()
}

/// One multiplicative kernel step; the result lies on the simplex.
pub fn update_kernel(k_prev: &Kernel, x: &ImageField, y: &ImageField, varrho_over_mu: f64) -> Result<Kernel> {
    x.check_same_shape(y, "kernel update")?;
    if x.iter().chain(y.iter()).any(|&v| v < 0.0) {
        return Err(param_err("kernel update needs non-negative x and y"));
    }
    let shape = x.dim();
    let op = BlurOperator::new(k_prev, shape)?;
    let fft = op.fft();
    let (l, s) = k_prev.dim();
    let (ar, ac) = k_prev.anchor();
    let (m, n) = shape;

    // Corr[d] = sum_p x[p] r[p + d], summed over channels.
    let mut corr = Array2::<f64>::zeros(shape);
    for c in 0..x.channels() {
        let kx = op.apply_plane(x.plane(c));
        let ratio = Zip::from(y.plane(c)).and(&kx).map_collect(|&yy, &b| yy / b.max(KERNEL_EPS));
        let mut spec = fft.forward(&ratio);
        let xs = fft.forward(x.plane(c));
        Zip::from(&mut spec).and(&xs).for_each(|r, &xv| *r *= xv.conj());
        corr += &fft.inverse_real(&spec);
    }

    let div = kernel_tv_divergence(k_prev);
    let kd = k_prev.data();
    let kt = Array2::from_shape_fn((l, s), |(i, j)| {
        let den = (1.0 - varrho_over_mu * div[[i, j]]).max(DENOM_FLOOR);
        let di = (i as isize - ar as isize).rem_euclid(m as isize) as usize;
        let dj = (j as isize - ac as isize).rem_euclid(n as isize) as usize;
        kd[[i, j]] / den * corr[[di, dj]]
    });
    if kt.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { iter: 0, what: "kernel" });
    }
    Kernel::normalized(kt)
}

/// Raised-cosine weight for distance `d` from the border; exactly 1 from `band` inward.
fn taper(d: usize, band: usize) -> f64 {
    if d >= band {
        1.0
    } else {
        0.5 * (1.0 - (std::f64::consts::PI * (d as f64 + 0.5) / band as f64).cos())
    }
}

/// Edge taper: blends a border band of width `max(l, s)` with its periodic blur by `k`.
pub fn boundary_preprocess(y: &ImageField, k: &Kernel) -> Result<ImageField> {
    let blurred = conv2_periodic(y, k)?;
    let (m, n) = y.dim();
    let band = k.dim().0.max(k.dim().1);
    let wr: Vec<f64> = (0..m).map(|i| taper(i.min(m - 1 - i), band)).collect();
    let wc: Vec<f64> = (0..n).map(|j| taper(j.min(n - 1 - j), band)).collect();
    let mut out = y.clone();
    for (c, plane) in out.planes_mut().iter_mut().enumerate() {
        let b = blurred.plane(c);
        for ((i, j), v) in plane.indexed_iter_mut() {
            let w = wr[i] * wc[j];
            if w < 1.0 {
                *v = w * *v + (1.0 - w) * b[[i, j]];
            }
        }
    }
    Ok(out)
}

/// Per-outer-iteration summary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuterRecord {
    pub outer: usize,
    pub rel_change: f64,
    /// `||k_new - k_old||_1`.
    pub kernel_change: f64,
    /// Blind objective after the kernel update.
    pub energy: f64,
    pub inner_iters: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BlindHistory {
    pub outer: Vec<OuterRecord>,
    pub converged: bool,
}

impl BlindHistory {
    pub const CSV_HEADER: &'static str = "outer,energy,rel_change,kernel_change,inner_iters";

    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{}", Self::CSV_HEADER)?;
        for r in &self.outer {
            writeln!(w, "{},{:.9e},{:.9e},{:.9e},{}", r.outer, r.energy, r.rel_change, r.kernel_change, r.inner_iters)?;
        }
        Ok(())
    }
}

/// Non-blind objective plus `varrho ||grad k||_1`.
pub fn blind_energy(x: &ImageField, y: &ImageField, k: &Kernel, cfg: &BlindConfig) -> Result<f64> {
    let e = crate::solver::objective_energy(x, y, k, &cfg.inner)?;
    Ok(e + cfg.varrho_over_mu * cfg.inner.mu * kernel_tv(k))
}

/// Estimates image and kernel from `y` alone.
pub fn solve_blind(y: &ImageField, cfg: &BlindConfig) -> Result<(ImageField, Kernel, BlindHistory)> {
    cfg.validate()?;
    if y.iter().any(|&v| v < 0.0 || !v.is_finite()) {
        return Err(param_err("observation must be finite and non-negative"));
    }
    let (l, s) = cfg.kernel_size;
    let mut k = Kernel::uniform(l, s)?;
    let y = if cfg.boundary_prep { boundary_preprocess(y, &k)? } else { y.clone() };

    let inner = &cfg.inner;
    let mut ops = Operators::for_config(&k, y.dim(), inner)?;
    let mut state = AdmmState::init(&y, &ops, inner)?;
    let mut history = BlindHistory::default();
    for outer in 1..=cfg.outer_max_iter {
        let wrap = |e: Error| Error::Outer { outer, source: Box::new(e) };
        let x_prev = state.x.clone();
        let before = state.iter;
        run(&mut state, &y, &ops, inner, cfg.inner_iter, None).map_err(wrap)?;
        let x = state.x.clip_nonneg();
        let k_new = update_kernel(&k, &x, &y, cfg.varrho_over_mu).map_err(wrap)?;
        let kernel_change = (k_new.data() - k.data()).iter().map(|v| v.abs()).sum();
        k = k_new;
        ops = Operators::for_config(&k, y.dim(), inner).map_err(wrap)?;
        let change = rel_change(&state.x, &x_prev).unwrap_or(f64::INFINITY);
        history.outer.push(OuterRecord {
            outer,
            rel_change: change,
            kernel_change,
            energy: blind_energy(&x, &y, &k, cfg)?,
            inner_iters: state.iter - before,
        });
        if change <= cfg.outer_tol {
            history.converged = true;
            break;
        }
    }
    Ok((state.x.clip_nonneg(), k, history))
}

/// Best Pearson correlation of two kernels over integer shifts of `estimate`.
///
/// Both kernels are zero-padded to a common odd size and centred on their anchors.
pub fn kernel_correlation(estimate: &Kernel, truth: &Kernel, max_shift: usize) -> f64 {
    let size = estimate.dim().0.max(estimate.dim().1).max(truth.dim().0).max(truth.dim().1) + 2 * max_shift;
    let size = size | 1;
    let embed = |k: &Kernel| {
        let mut a = Array2::<f64>::zeros((size, size));
        let (ar, ac) = k.anchor();
        let c = size / 2;
        for ((i, j), &v) in k.data().indexed_iter() {
            a[[c + i - ar, c + j - ac]] = v;
        }
        a
    };
    let t = embed(truth);
    let e = embed(estimate);
    let ms = max_shift as isize;
    let mut best = f64::NEG_INFINITY;
    for di in -ms..=ms {
        for dj in -ms..=ms {
            let shifted = Array2::from_shape_fn((size, size), |(i, j)| {
                let (si, sj) = (i as isize - di, j as isize - dj);
                if si >= 0 && sj >= 0 && (si as usize) < size && (sj as usize) < size {
                    e[[si as usize, sj as usize]]
                } else {
                    0.0
                }
            });
            best = best.max(pearson(&shifted, &t));
        }
    }
    best
}

fn pearson(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.sum() / n, b.sum() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    Zip::from(a).and(b).for_each(|&x, &y| {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    });
    if saa == 0.0 || sbb == 0.0 {
        return 0.0;
    }
    sab / (saa * sbb).sqrt()
}
