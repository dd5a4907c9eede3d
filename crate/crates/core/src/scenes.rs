//! Procedural grayscale test images in `[0, 255]`.
//!
//! They stand in for the usual photographs: piecewise-smooth regions with
//! sharp edges and a little texture, so blur visibly destroys detail.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::image::ImageField;

fn smoothstep(edge: f64, width: f64, v: f64) -> f64 {
    let t = ((v - edge) / width + 0.5).clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

/// Bright sky gradient, dark standing figure with a tripod, textured ground.
pub fn cameraman(size: usize) -> ImageField {
    let s = size as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let grain: Vec<f64> = (0..size * size).map(|_| rng.random_range(-1.0..1.0)).collect();
    let img = Array2::from_shape_fn((size, size), |(i, j)| {
        let (y, x) = (i as f64 / s, j as f64 / s);
        let sky = 200.0 - 40.0 * y + 10.0 * (6.0 * x).sin();
        let horizon = 0.62 + 0.04 * (9.0 * x).sin();
        let ground = 120.0 + 25.0 * (40.0 * x + 13.0 * y).sin() * (23.0 * y).cos() + 18.0 * grain[i * size + j];
        let mut v = if y > horizon { ground } else { sky };
        // Distant building blocks on the horizon.
        if y > horizon - 0.12 && y <= horizon && ((0.70..0.78).contains(&x) || (0.82..0.86).contains(&x)) {
            v = 150.0;
        }
        // Figure: head, coat, legs.
        let head = ((x - 0.38).powi(2) + (y - 0.20).powi(2)).sqrt();
        let coat = (0.28..0.50).contains(&x) && (0.27..0.68).contains(&y) && (x - 0.39).abs() < 0.06 + 0.18 * (y - 0.27);
        let legs = (0.68..0.92).contains(&y) && ((0.31..0.35).contains(&x) || (0.42..0.46).contains(&x));
        if head < 0.065 || coat || legs {
            v = 20.0 + 10.0 * (30.0 * y).sin();
        }
        // Camera on a tripod.
        if (0.50..0.60).contains(&x) && (0.25..0.33).contains(&y) {
            v = 35.0;
        }
        for (x0, slope) in [(0.55, -0.25), (0.55, 0.0), (0.55, 0.25)] {
            let xl = x0 + slope * (y - 0.33);
            if (0.33..0.93).contains(&y) && (x - xl).abs() < 0.008 {
                v = 30.0;
            }
        }
        v.clamp(0.0, 255.0)
    });
    ImageField::gray(img)
}

/// Dark sky with a bright satellite: body, solar panels with ribs, antenna.
pub fn satellite(size: usize) -> ImageField {
    let s = size as f64;
    let img = Array2::from_shape_fn((size, size), |(i, j)| {
        let (y, x) = (i as f64 / s - 0.5, j as f64 / s - 0.5);
        // Rotate the frame a little so edges are not axis aligned.
        let (c, sn) = (0.35f64.cos(), 0.35f64.sin());
        let (u, w) = (c * x + sn * y, -sn * x + c * y);
        let mut v = 5.0;
        if u.abs() < 0.10 && w.abs() < 0.13 {
            v = 220.0 - 300.0 * w.abs() * u.abs();
        }
        if (0.14..0.42).contains(&u.abs()) && w.abs() < 0.07 {
            let rib = ((u.abs() - 0.14) * 40.0).fract() < 0.2;
            v = if rib { 90.0 } else { 160.0 };
        }
        if (u - 0.0).abs() < 0.012 && (-0.30..-0.13).contains(&w) {
            v = 200.0;
        }
        let dish = ((u).powi(2) + (w + 0.31).powi(2)).sqrt();
        if dish < 0.04 {
            v = 240.0 * smoothstep(0.04, 0.02, 0.06 - dish).max(0.6);
        }
        v
    });
    ImageField::gray(img)
}

/// High-contrast blocks that touch every border, to provoke wrap-around ringing.
pub fn sharp_border(size: usize) -> ImageField {
    let img = Array2::from_shape_fn((size, size), |(i, j)| {
        let band = size / 4;
        let top = i < band;
        let left = j < band;
        let base = match (top, left) {
            (true, true) => 240.0,
            (true, false) => 30.0,
            (false, true) => 60.0,
            (false, false) => 180.0,
        };
        let stripes = if j > size / 2 && ((i / 6) % 2 == 0) { 40.0 } else { 0.0 };
        f64::min(base + stripes, 255.0)
    });
    ImageField::gray(img)
}
