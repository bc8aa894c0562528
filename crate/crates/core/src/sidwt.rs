//! Undecimated (shift-invariant) 2D wavelet frame.
//!
//! A-trous separable transform with periodic boundaries. Each 1D filter is
//! scaled by `1/√2` so that every level satisfies `HᴴH + GᴴG = I`, which makes
//! the whole redundant transform a tight frame.

use crate::error::{Error, Result};
use crate::frame::{FrameCoefficients, TightFrame};
use crate::image::Image;
use crate::scalar::{czero, Cx, Real};

/// Orthonormal 4-tap Daubechies low-pass filter.
pub fn daubechies4_lowpass<T: Real>() -> [T; 4] {
    let s3 = T::lit(3.0).sqrt();
    let norm = T::lit(4.0) * T::SQRT_2();
    let one = T::one();
    let three = T::lit(3.0);
    [
        (one + s3) / norm,
        (three + s3) / norm,
        (three - s3) / norm,
        (one - s3) / norm,
    ]
}

/// Quadrature-mirror high-pass `g[k] = (−1)^k h[L−1−k]`.
pub fn quadrature_mirror<T: Real>(h: &[T]) -> Vec<T> {
    let l = h.len();
    (0..l)
        .map(|k| {
            if k % 2 == 0 {
                h[l - 1 - k]
            } else {
                -h[l - 1 - k]
            }
        })
        .collect()
}

pub struct SidwtFrame<T: Real> {
    rows: usize,
    cols: usize,
    levels: usize,
    lo: Vec<T>,
    hi: Vec<T>,
}

impl<T: Real> SidwtFrame<T> {
    pub fn new(rows: usize, cols: usize, levels: usize) -> Result<Self> {
        Self::with_filter(rows, cols, levels, &daubechies4_lowpass::<T>())
    }

    /// `lowpass` must be an orthonormal scaling filter.
    pub fn with_filter(rows: usize, cols: usize, levels: usize, lowpass: &[T]) -> Result<Self> {
        if levels == 0 || rows == 0 || cols == 0 || lowpass.is_empty() {
            return Err(Error::InvalidConfig(format!(
                "SIDWT needs positive dimensions and levels, got {rows}x{cols}, {levels} levels"
            )));
        }
        let s = T::FRAC_1_SQRT_2();
        Ok(Self {
            rows,
            cols,
            levels,
            lo: lowpass.iter().map(|&v| v * s).collect(),
            hi: quadrature_mirror(lowpass)
                .into_iter()
                .map(|v| v * s)
                .collect(),
        })
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    /// Subband images: three detail bands per level plus the final approximation.
    pub fn subbands(&self) -> usize {
        3 * self.levels + 1
    }
}

/// Circular filtering along one axis with taps spaced by `step`.
/// `adjoint` switches to the transposed (correlation) form.
#[allow(clippy::too_many_arguments)]
fn filter_axis<T: Real>(
    src: &[Cx<T>],
    dst: &mut [Cx<T>],
    rows: usize,
    cols: usize,
    taps: &[T],
    step: usize,
    along_rows: bool,
    adjoint: bool,
) {
    let len = if along_rows { cols } else { rows };
    let offsets: Vec<usize> = (0..taps.len()).map(|m| (m * step) % len).collect();
    for r in 0..rows {
        for c in 0..cols {
            let pos = if along_rows { c } else { r };
            let mut acc = czero::<T>();
            for (&t, &off) in taps.iter().zip(&offsets) {
                let p = if adjoint {
                    (pos + off) % len
                } else {
                    (pos + len - off) % len
                };
                let v = if along_rows {
                    src[r * cols + p]
                } else {
                    src[p * cols + c]
                };
                acc += v * t;
            }
            dst[r * cols + c] = acc;
        }
    }
}

impl<T: Real> TightFrame<T> for SidwtFrame<T> {
    fn image_dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    fn coefficient_len(&self) -> usize {
        self.subbands() * self.rows * self.cols
    }

    fn analyze(&self, x: &Image<T>) -> Result<FrameCoefficients<T>> {
        x.check_dims((self.rows, self.cols))?;
        let (rows, cols) = (self.rows, self.cols);
        let size = rows * cols;
        let mut out = Vec::with_capacity(self.coefficient_len());
        let mut approx = x.data().to_vec();
        let mut row_lo = vec![czero(); size];
        let mut row_hi = vec![czero(); size];
        let mut band = vec![czero(); size];
        for level in 0..self.levels {
            let step = 1 << level;
            filter_axis(
                &approx,
                &mut row_lo,
                rows,
                cols,
                &self.lo,
                step,
                true,
                false,
            );
            filter_axis(
                &approx,
                &mut row_hi,
                rows,
                cols,
                &self.hi,
                step,
                true,
                false,
            );
            // LH, HL, HH
            filter_axis(&row_lo, &mut band, rows, cols, &self.hi, step, false, false);
            out.extend_from_slice(&band);
            filter_axis(&row_hi, &mut band, rows, cols, &self.lo, step, false, false);
            out.extend_from_slice(&band);
            filter_axis(&row_hi, &mut band, rows, cols, &self.hi, step, false, false);
            out.extend_from_slice(&band);
            filter_axis(
                &row_lo,
                &mut approx,
                rows,
                cols,
                &self.lo,
                step,
                false,
                false,
            );
        }
        out.extend_from_slice(&approx);
        FrameCoefficients::new(out, size)
    }

    fn synthesize(&self, a: &FrameCoefficients<T>) -> Result<Image<T>> {
        if a.len() != self.coefficient_len() {
            return Err(Error::InvalidInput(format!(
                "expected {} SIDWT coefficients, got {}",
                self.coefficient_len(),
                a.len()
            )));
        }
        let (rows, cols) = (self.rows, self.cols);
        let size = rows * cols;
        let band = |k: usize| &a.data()[k * size..(k + 1) * size];
        let mut approx = band(3 * self.levels).to_vec();
        let mut row_lo = vec![czero(); size];
        let mut row_hi = vec![czero(); size];
        let mut tmp = vec![czero(); size];
        for level in (0..self.levels).rev() {
            let step = 1 << level;
            let base = 3 * level;
            filter_axis(
                &approx,
                &mut row_lo,
                rows,
                cols,
                &self.lo,
                step,
                false,
                true,
            );
            filter_axis(
                band(base),
                &mut tmp,
                rows,
                cols,
                &self.hi,
                step,
                false,
                true,
            );
            add_into(&mut row_lo, &tmp);
            filter_axis(
                band(base + 1),
                &mut row_hi,
                rows,
                cols,
                &self.lo,
                step,
                false,
                true,
            );
            filter_axis(
                band(base + 2),
                &mut tmp,
                rows,
                cols,
                &self.hi,
                step,
                false,
                true,
            );
            add_into(&mut row_hi, &tmp);
            filter_axis(&row_lo, &mut approx, rows, cols, &self.lo, step, true, true);
            filter_axis(&row_hi, &mut tmp, rows, cols, &self.hi, step, true, true);
            add_into(&mut approx, &tmp);
        }
        Ok(Image::from_raw(rows, cols, approx))
    }
}

fn add_into<T: Real>(dst: &mut [Cx<T>], src: &[Cx<T>]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}
