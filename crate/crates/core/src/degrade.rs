//! Synthetic blur kernels and peak-scaled Poisson corruption.

use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{param_err, Error, Result};
use crate::image::{conv2_periodic, ImageField, Kernel};

/// Point spread function families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PsfSpec {
    /// `size x size` sampled Gaussian.
    Gaussian { size: usize, sigma: f64 },
    /// Line segment of `length` pixels at `angle` degrees, counter-clockwise from +x.
    Motion { length: f64, angle: f64 },
    /// `size x size` box.
    Average { size: usize },
    /// Anti-aliased disc of the given radius.
    Disk { radius: f64 },
}

impl FromStr for PsfSpec {
    type Err = Error;

    /// Parses `gaussian:SIZE:SIGMA`, `motion:LEN:ANGLE`, `average:SIZE` or `disk:RADIUS`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |i: usize| -> Result<f64> {
            parts
                .get(i)
                .ok_or_else(|| Error::Parse(format!("PSF '{s}' is missing field {i}")))?
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("PSF '{s}': {e}")))
        };
        let size = |i: usize| -> Result<usize> {
            let v = num(i)?;
            if v.fract() != 0.0 || v < 1.0 {
                return Err(Error::Parse(format!("PSF '{s}': size must be a positive integer")));
            }
            Ok(v as usize)
        };
        let expect = |n: usize| -> Result<()> {
            if parts.len() != n {
                return Err(Error::Parse(format!("PSF '{s}' expects {} fields", n - 1)));
            }
            Ok(())
        };
        match parts[0].trim().to_ascii_lowercase().as_str() {
            "gaussian" => {
                expect(3)?;
                Ok(PsfSpec::Gaussian { size: size(1)?, sigma: num(2)? })
            }
            "motion" => {
                expect(3)?;
                Ok(PsfSpec::Motion { length: num(1)?, angle: num(2)? })
            }
            "average" => {
                expect(2)?;
                Ok(PsfSpec::Average { size: size(1)? })
            }
            "disk" => {
                expect(2)?;
                Ok(PsfSpec::Disk { radius: num(1)? })
            }
            other => Err(Error::Parse(format!("unknown PSF kind '{other}'"))),
        }
    }
}

impl fmt::Display for PsfSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PsfSpec::Gaussian { size, sigma } => write!(f, "gaussian:{size}:{sigma}"),
            PsfSpec::Motion { length, angle } => write!(f, "motion:{length}:{angle}"),
            PsfSpec::Average { size } => write!(f, "average:{size}"),
            PsfSpec::Disk { radius } => write!(f, "disk:{radius}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub peak: f64,
    pub seed: u64,
}

pub fn make_psf(spec: &PsfSpec) -> Result<Kernel> {
    match *spec {
        PsfSpec::Gaussian { size, sigma } => {
            if size == 0 || !(sigma > 0.0) {
                return Err(param_err("gaussian PSF needs size >= 1 and sigma > 0"));
            }
            let c = (size as f64 - 1.0) / 2.0;
            Kernel::normalized(Array2::from_shape_fn((size, size), |(i, j)| {
                let (di, dj) = (i as f64 - c, j as f64 - c);
                (-(di * di + dj * dj) / (2.0 * sigma * sigma)).exp()
            }))
        }
        PsfSpec::Average { size } => {
            if size == 0 {
                return Err(param_err("average PSF needs size >= 1"));
            }
            Kernel::uniform(size, size)
        }
        PsfSpec::Motion { length, angle } => motion_psf(length, angle),
        PsfSpec::Disk { radius } => disk_psf(radius),
    }
}

/// Weights each pixel by `1 - distance` to a centred segment of `length - 1` pixels.
fn motion_psf(length: f64, angle: f64) -> Result<Kernel> {
    if !(length > 0.0) || !angle.is_finite() {
        return Err(param_err("motion PSF needs length > 0 and a finite angle"));
    }
    let half_len = (length - 1.0).max(0.0) / 2.0;
    let half = half_len.ceil() as usize;
    let size = 2 * half + 1;
    let theta = angle.to_radians();
    // Direction in (row, col); rows grow downwards so a positive angle moves up.
    let (ur, uc) = (-theta.sin(), theta.cos());
    let k = Array2::from_shape_fn((size, size), |(i, j)| {
        let (di, dj) = (i as f64 - half as f64, j as f64 - half as f64);
        let t = di * ur + dj * uc;
        let p = (di * uc - dj * ur).abs();
        let over = (t.abs() - half_len).max(0.0);
        (1.0 - (over * over + p * p).sqrt()).max(0.0)
    });
    Kernel::normalized(k)
}

/// Area of each pixel covered by the disc, estimated on a 16x16 sub-grid.
fn disk_psf(radius: f64) -> Result<Kernel> {
    if !(radius > 0.0) {
        return Err(param_err("disk PSF needs radius > 0"));
    }
    const SUB: usize = 16;
    let half = radius.ceil() as usize;
    let size = 2 * half + 1;
    let r2 = radius * radius;
    let k = Array2::from_shape_fn((size, size), |(i, j)| {
        let mut inside = 0usize;
        for a in 0..SUB {
            for b in 0..SUB {
                let y = i as f64 - half as f64 - 0.5 + (a as f64 + 0.5) / SUB as f64;
                let x = j as f64 - half as f64 - 0.5 + (b as f64 + 0.5) / SUB as f64;
                if x * x + y * y <= r2 {
                    inside += 1;
                }
            }
        }
        inside as f64
    });
    Kernel::normalized(k)
}

/// Factor that maps the image maximum onto `peak`.
pub fn peak_scale(img: &ImageField, peak: f64) -> Result<f64> {
    if !(peak > 0.0) {
        return Err(param_err("peak must be positive"));
    }
    if img.iter().any(|v| *v < 0.0 || !v.is_finite()) {
        return Err(param_err("image must be finite and non-negative"));
    }
    let max = img.max();
    if max <= 0.0 {
        return Err(param_err("cannot peak-scale an all-zero image"));
    }
    Ok(peak / max)
}

/// Scales `img` so its maximum equals `noise.peak`, then replaces every pixel by a
/// Poisson draw with that mean. Output stays in photon-count units.
pub fn poisson_corrupt(img: &ImageField, noise: &NoiseSpec) -> Result<ImageField> {
    let scale = peak_scale(img, noise.peak)?;
    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
    let mut out = img.zeros_like();
    for (src, dst) in img.planes().iter().zip(out.planes_mut()) {
        for (s, d) in src.iter().zip(dst.iter_mut()) {
            let mean = s * scale;
            *d = if mean > 0.0 {
                Poisson::new(mean).map_err(|e| param_err(e.to_string()))?.sample(&mut rng)
            } else {
                0.0
            };
        }
    }
    Ok(out)
}

/// A complete synthetic problem: blurred, noisy counts plus the matching clean reference.
#[derive(Debug, Clone)]
pub struct Degraded {
    pub observed: ImageField,
    /// Clean image in the same count units as `observed`.
    pub reference: ImageField,
    pub kernel: Kernel,
    pub scale: f64,
}

/// Periodic blur with `psf` followed by [`poisson_corrupt`].
pub fn degrade(clean: &ImageField, psf: &PsfSpec, noise: &NoiseSpec) -> Result<Degraded> {
    let kernel = make_psf(psf)?;
    let blurred = conv2_periodic(clean, &kernel)?.clip_nonneg();
    let scale = peak_scale(&blurred, noise.peak)?;
    let observed = poisson_corrupt(&blurred, noise)?;
    Ok(Degraded { observed, reference: clean * scale, kernel, scale })
}
