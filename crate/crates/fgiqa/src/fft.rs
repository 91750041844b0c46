//! Thin 2-D FFT layer over `rustfft`.
//!
//! Transforms run over the full image with periodic boundary (no padding,
//! no windowing), which keeps frequency-domain filtering exactly diagonal.
//! The forward pass is unnormalized; the inverse divides by `width * height`.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftDirection, FftPlanner};

use crate::plane::Plane;

/// Planned row/column transforms for one image size, shareable across threads.
pub(crate) struct Fft2d {
    width: usize,
    height: usize,
    row_fwd: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

impl Fft2d {
    pub(crate) fn new(width: usize, height: usize) -> Self {
        let mut planner = FftPlanner::new();
        Fft2d {
            width,
            height,
            row_fwd: planner.plan_fft(width, FftDirection::Forward),
            col_fwd: planner.plan_fft(height, FftDirection::Forward),
            row_inv: planner.plan_fft(width, FftDirection::Inverse),
            col_inv: planner.plan_fft(height, FftDirection::Inverse),
        }
    }

    pub(crate) fn forward(&self, plane: &Plane) -> Vec<Complex<f64>> {
        assert_eq!(plane.width(), self.width);
        assert_eq!(plane.height(), self.height);
        let mut buf: Vec<Complex<f64>> = plane
            .values()
            .iter()
            .map(|&v| Complex::new(v, 0.0))
            .collect();
        self.process(&mut buf, &self.row_fwd, &self.col_fwd);
        buf
    }

    /// Inverse transform of `spectrum`; returns the normalized complex
    /// modulus per pixel.
    pub(crate) fn inverse_modulus(&self, mut spectrum: Vec<Complex<f64>>) -> Plane {
        self.process(&mut spectrum, &self.row_inv, &self.col_inv);
        let norm = 1.0 / (self.width * self.height) as f64;
        let data = spectrum.iter().map(|c| c.norm() * norm).collect();
        Plane::from_vec(self.width, self.height, data).expect("spectrum length matches plane")
    }

    fn process(&self, buf: &mut [Complex<f64>], row: &Arc<dyn Fft<f64>>, col: &Arc<dyn Fft<f64>>) {
        let mut scratch = vec![Complex::default(); row.get_inplace_scratch_len()];
        for r in buf.chunks_exact_mut(self.width) {
            row.process_with_scratch(r, &mut scratch);
        }

        let mut transposed = transpose(self.width, self.height, buf);
        scratch.resize(col.get_inplace_scratch_len(), Complex::default());
        for c in transposed.chunks_exact_mut(self.height) {
            col.process_with_scratch(c, &mut scratch);
        }
        transpose_into(self.height, self.width, &transposed, buf);
    }
}

fn transpose(width: usize, height: usize, matrix: &[Complex<f64>]) -> Vec<Complex<f64>> {
    let mut out = vec![Complex::default(); matrix.len()];
    transpose_into(width, height, matrix, &mut out);
    out
}

fn transpose_into(width: usize, height: usize, src: &[Complex<f64>], dst: &mut [Complex<f64>]) {
    for y in 0..height {
        for x in 0..width {
            dst[x * height + y] = src[y * width + x];
        }
    }
}
