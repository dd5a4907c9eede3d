//! Value sets of the four local-minimum priors and their histograms.

use crate::error::{param_err, Result};
use crate::framelet::{dark_channel, fdc, fpmp, pmp};
use crate::image::ImageField;

/// Magnitude below which a prior entry counts as zero.
pub const ZERO_EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PriorKind {
    Fpmp,
    Fdc,
    Pmp,
    Dc,
}

impl PriorKind {
    pub const ALL: [PriorKind; 4] = [PriorKind::Fpmp, PriorKind::Fdc, PriorKind::Pmp, PriorKind::Dc];

    pub fn name(self) -> &'static str {
        match self {
            PriorKind::Fpmp => "fpmp",
            PriorKind::Fdc => "fdc",
            PriorKind::Pmp => "pmp",
            PriorKind::Dc => "dc",
        }
    }
}

/// Flattened values of every prior for one image.
#[derive(Debug, Clone)]
pub struct PriorSet {
    pub fpmp: Vec<f64>,
    pub fdc: Vec<f64>,
    pub pmp: Vec<f64>,
    pub dc: Vec<f64>,
}

impl PriorSet {
    /// `r` must be odd because the sliding-window variants need a centred window.
    pub fn compute(img: &ImageField, r: usize) -> Result<Self> {
        Ok(PriorSet {
            fpmp: fpmp(img, r)?.0.values,
            fdc: fdc(img, r)?.plane(0).iter().copied().collect(),
            pmp: pmp(img, r)?,
            dc: dark_channel(img, r)?.plane(0).iter().copied().collect(),
        })
    }

    pub fn get(&self, kind: PriorKind) -> &[f64] {
        match kind {
            PriorKind::Fpmp => &self.fpmp,
            PriorKind::Fdc => &self.fdc,
            PriorKind::Pmp => &self.pmp,
            PriorKind::Dc => &self.dc,
        }
    }
}

pub fn zero_count(values: &[f64], eps: f64) -> usize {
    values.iter().filter(|v| v.abs() < eps).count()
}

/// Equal-width histogram over `[lo, hi]`; the last bin is closed.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<usize>,
}

impl Histogram {
    pub fn new(values: &[f64], lo: f64, hi: f64, bins: usize) -> Result<Self> {
        if bins == 0 || !(hi >= lo) {
            return Err(param_err("histogram needs bins >= 1 and hi >= lo"));
        }
        let width = (hi - lo) / bins as f64;
        let mut counts = vec![0; bins];
        for &v in values {
            if v < lo || v > hi {
                continue;
            }
            let b = if width > 0.0 { (((v - lo) / width) as usize).min(bins - 1) } else { 0 };
            counts[b] += 1;
        }
        Ok(Histogram { lo, hi, counts })
    }

    pub fn to_csv(&self) -> String {
        let width = (self.hi - self.lo) / self.counts.len() as f64;
        let mut out = String::from("bin_lo,bin_hi,count\n");
        for (i, c) in self.counts.iter().enumerate() {
            let a = self.lo + width * i as f64;
            out.push_str(&format!("{:.6},{:.6},{}\n", a, a + width, c));
        }
        out
    }
}

/// Range covering both value sets, so paired histograms share bins.
pub fn joint_range(a: &[f64], b: &[f64]) -> (f64, f64) {
    let lo = a.iter().chain(b).cloned().fold(f64::INFINITY, f64::min);
    let hi = a.iter().chain(b).cloned().fold(f64::NEG_INFINITY, f64::max);
    if lo.is_finite() {
        (lo, hi)
    } else {
        (0.0, 0.0)
    }
}
