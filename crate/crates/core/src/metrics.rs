//! Image quality and convergence metrics.

use crate::error::{dim_err, param_err, Result};
use crate::image::ImageField;

/// PSNR reported for identical images in text output.
pub const PSNR_CAP: f64 = 99.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QualityReport {
    pub psnr: f64,
    pub ssim: f64,
    pub mse: f64,
}

impl QualityReport {
    pub const CSV_HEADER: &'static str = "psnr,ssim,mse";

    /// One CSV row; an infinite PSNR is written as [`PSNR_CAP`].
    pub fn csv_row(&self) -> String {
        format!("{:.6},{:.6},{:.6}", capped_psnr(self.psnr), self.ssim, self.mse)
    }
}

pub fn capped_psnr(psnr: f64) -> f64 {
    if psnr.is_finite() {
        psnr.min(PSNR_CAP)
    } else {
        PSNR_CAP
    }
}

pub fn mse(u: &ImageField, reference: &ImageField) -> Result<f64> {
    u.check_same_shape(reference, "mse")?;
    Ok(u.iter().zip(reference.iter()).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / u.len() as f64)
}

/// `10 log10(peak^2 / MSE)`; `+inf` for identical images.
pub fn psnr(u: &ImageField, reference: &ImageField, peak: f64) -> Result<f64> {
    if peak <= 0.0 {
        return Err(param_err("PSNR peak must be positive"));
    }
    let e = mse(u, reference)?;
    if e == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (peak * peak / e).log10())
}

/// Whole-image SSIM with `C1 = (0.01 peak)^2` and `C2 = (0.03 peak)^2`.
///
/// ```text
/// (2 mu_o mu_r + C1)(2 cov + C2) / ((mu_o^2 + mu_r^2 + C1)(var_o + var_r + C2))
/// ```
pub fn ssim(u: &ImageField, reference: &ImageField, peak: f64) -> Result<f64> {
    u.check_same_shape(reference, "ssim")?;
    let c1 = (0.01 * peak).powi(2);
    let c2 = (0.03 * peak).powi(2);
    let n = u.len() as f64;
    let mu_o = u.sum() / n;
    let mu_r = reference.sum() / n;
    let (mut var_o, mut var_r, mut cov) = (0.0, 0.0, 0.0);
    for (a, b) in u.iter().zip(reference.iter()) {
        let (da, db) = (a - mu_o, b - mu_r);
        var_o += da * da;
        var_r += db * db;
        cov += da * db;
    }
    var_o /= n;
    var_r /= n;
    cov /= n;
    Ok(((2.0 * mu_o * mu_r + c1) * (2.0 * cov + c2))
        / ((mu_o * mu_o + mu_r * mu_r + c1) * (var_o + var_r + c2)))
}

pub fn quality(u: &ImageField, reference: &ImageField, peak: f64) -> Result<QualityReport> {
    Ok(QualityReport {
        psnr: psnr(u, reference, peak)?,
        ssim: ssim(u, reference, peak)?,
        mse: mse(u, reference)?,
    })
}

/// `||new - old||_F / ||old||_F`.
pub fn rel_change(new: &ImageField, old: &ImageField) -> Result<f64> {
    new.check_same_shape(old, "rel_change")?;
    let denom = old.norm_fro();
    if denom == 0.0 {
        return Err(dim_err("relative change undefined: previous iterate is zero"));
    }
    let num = new.iter().zip(old.iter()).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    Ok(num / denom)
}
