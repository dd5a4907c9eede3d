//! Two-dimensional FFT helpers over `ndarray` planes.
//!
//! The forward transform is unnormalized; the inverse divides by `m * n`, so
//! `inverse(forward(x)) == x`.

use std::sync::Arc;

use ndarray::{Array2, Axis};
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Frequency-domain plane with the same shape as its spatial source.
pub type FreqField = Array2<Complex64>;

/// Cached row/column plans for one image shape.
#[derive(Clone)]
pub struct Fft2 {
    rows: usize,
    cols: usize,
    fwd_rows: Arc<dyn Fft<f64>>,
    fwd_cols: Arc<dyn Fft<f64>>,
    inv_rows: Arc<dyn Fft<f64>>,
    inv_cols: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Fft2 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft2")
            .field("rows", &self.rows)
            .field("cols", &self.cols)
            .finish()
    }
}

impl Fft2 {
    pub fn new(rows: usize, cols: usize) -> Self {
        let mut planner = FftPlanner::new();
        Fft2 {
            rows,
            cols,
            // Row transforms run along the column index, so their length is `cols`.
            fwd_rows: planner.plan_fft_forward(cols),
            fwd_cols: planner.plan_fft_forward(rows),
            inv_rows: planner.plan_fft_inverse(cols),
            inv_cols: planner.plan_fft_inverse(rows),
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn forward(&self, plane: &Array2<f64>) -> FreqField {
        assert_eq!(plane.dim(), (self.rows, self.cols), "fft shape mismatch");
        let mut buf = plane.mapv(|v| Complex64::new(v, 0.0));
        self.transform(&mut buf, &self.fwd_rows, &self.fwd_cols);
        buf
    }

    pub fn forward_complex(&self, plane: &FreqField) -> FreqField {
        assert_eq!(plane.dim(), (self.rows, self.cols), "fft shape mismatch");
        let mut buf = plane.clone();
        self.transform(&mut buf, &self.fwd_rows, &self.fwd_cols);
        buf
    }

    /// Inverse transform, normalized, returning the real part.
    pub fn inverse_real(&self, spectrum: &FreqField) -> Array2<f64> {
        self.inverse(spectrum).mapv(|c| c.re)
    }

    pub fn inverse(&self, spectrum: &FreqField) -> FreqField {
        assert_eq!(spectrum.dim(), (self.rows, self.cols), "fft shape mismatch");
        let mut buf = spectrum.clone();
        self.transform(&mut buf, &self.inv_rows, &self.inv_cols);
        let scale = 1.0 / (self.rows * self.cols) as f64;
        buf.mapv_inplace(|c| c * scale);
        buf
    }

    fn transform(&self, buf: &mut FreqField, rows: &Arc<dyn Fft<f64>>, cols: &Arc<dyn Fft<f64>>) {
        let mut scratch = vec![Complex64::default(); rows.get_inplace_scratch_len()];
        for mut row in buf.axis_iter_mut(Axis(0)) {
            match row.as_slice_mut() {
                Some(slice) => rows.process_with_scratch(slice, &mut scratch),
                None => {
                    let mut tmp = row.to_vec();
                    rows.process_with_scratch(&mut tmp, &mut scratch);
                    row.iter_mut().zip(tmp).for_each(|(d, s)| *d = s);
                }
            }
        }
        scratch.resize(cols.get_inplace_scratch_len(), Complex64::default());
        let mut column = vec![Complex64::default(); self.rows];
        for mut col in buf.axis_iter_mut(Axis(1)) {
            column.iter_mut().zip(col.iter()).for_each(|(d, s)| *d = *s);
            cols.process_with_scratch(&mut column, &mut scratch);
            col.iter_mut().zip(column.iter()).for_each(|(d, s)| *d = *s);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_is_identity() {
        let plane = Array2::from_shape_fn((6, 10), |(i, j)| (i * 7 + j * 3) as f64 % 5.0 - 1.5);
        let fft = Fft2::new(6, 10);
        let back = fft.inverse_real(&fft.forward(&plane));
        for (a, b) in plane.iter().zip(back.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn dc_term_is_sum() {
        let plane = Array2::from_shape_fn((5, 3), |(i, j)| (i + j) as f64);
        let spec = Fft2::new(5, 3).forward(&plane);
        assert!((spec[[0, 0]].re - plane.sum()).abs() < 1e-12);
        assert!(spec[[0, 0]].im.abs() < 1e-12);
    }
}
