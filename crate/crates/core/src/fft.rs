//! Unitary 2D DFT with DC-centred k-space layout.

use std::sync::Arc;

use rustfft::{Fft, FftDirection, FftPlanner};

use crate::scalar::{czero, Cx, Real};

/// Cached row/column plans for one grid size.
pub struct Fft2<T: Real> {
    rows: usize,
    cols: usize,
    row_fwd: Arc<dyn Fft<T>>,
    row_inv: Arc<dyn Fft<T>>,
    col_fwd: Arc<dyn Fft<T>>,
    col_inv: Arc<dyn Fft<T>>,
    scale: T,
}

impl<T: Real> Fft2<T> {
    pub fn new(rows: usize, cols: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            rows,
            cols,
            row_fwd: planner.plan_fft(cols, FftDirection::Forward),
            row_inv: planner.plan_fft(cols, FftDirection::Inverse),
            col_fwd: planner.plan_fft(rows, FftDirection::Forward),
            col_inv: planner.plan_fft(rows, FftDirection::Inverse),
            scale: T::one() / T::from_usize_lossy(rows * cols).sqrt(),
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    fn transform(&self, data: &mut [Cx<T>], forward: bool) {
        assert_eq!(data.len(), self.rows * self.cols);
        let (row_plan, col_plan) = if forward {
            (&self.row_fwd, &self.col_fwd)
        } else {
            (&self.row_inv, &self.col_inv)
        };
        row_plan.process(data);
        let mut column = vec![czero::<T>(); self.rows];
        let mut scratch = vec![czero::<T>(); col_plan.get_inplace_scratch_len()];
        for c in 0..self.cols {
            for r in 0..self.rows {
                column[r] = data[r * self.cols + c];
            }
            col_plan.process_with_scratch(&mut column, &mut scratch);
            for r in 0..self.rows {
                data[r * self.cols + c] = column[r];
            }
        }
        for v in data.iter_mut() {
            *v *= self.scale;
        }
    }

    /// Unitary forward DFT, output DC-centred (DC at `(rows/2, cols/2)`).
    pub fn forward_centered(&self, image: &[Cx<T>]) -> Vec<Cx<T>> {
        let mut buf = image.to_vec();
        self.transform(&mut buf, true);
        shift(&buf, self.rows, self.cols, self.rows / 2, self.cols / 2)
    }

    /// Unitary inverse DFT of DC-centred k-space.
    pub fn inverse_centered(&self, kspace: &[Cx<T>]) -> Vec<Cx<T>> {
        let mut buf = shift(
            kspace,
            self.rows,
            self.cols,
            self.rows - self.rows / 2,
            self.cols - self.cols / 2,
        );
        self.transform(&mut buf, false);
        buf
    }
}

/// Circular shift moving index `(r, c)` to `((r + dr) % rows, (c + dc) % cols)`.
fn shift<T: Real>(data: &[Cx<T>], rows: usize, cols: usize, dr: usize, dc: usize) -> Vec<Cx<T>> {
    let mut out = vec![czero(); data.len()];
    for r in 0..rows {
        let rr = (r + dr) % rows;
        for c in 0..cols {
            out[rr * cols + (c + dc) % cols] = data[r * cols + c];
        }
    }
    out
}

/// Index of the DC sample in the centred layout.
pub fn dc_index(rows: usize, cols: usize) -> (usize, usize) {
    (rows / 2, cols / 2)
}
