//! Reconstruction quality metrics: RLNE and SSIM.

use crate::error::{Error, Result};
use crate::image::Image;
use crate::scalar::Real;

pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;
/// Side of the sliding SSIM window.
pub const SSIM_WINDOW: usize = 8;

/// `‖x̂ − x‖₂ / ‖x‖₂` on complex samples.
pub fn rlne<T: Real>(xhat: &Image<T>, x: &Image<T>) -> Result<f64> {
    xhat.check_dims(x.dims())?;
    let denom = x.norm().as_f64();
    if denom == 0.0 {
        return Err(Error::UndefinedMetric(
            "RLNE against an all-zero ground truth".into(),
        ));
    }
    Ok(crate::scalar::distance(xhat.data(), x.data()).as_f64() / denom)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SsimMode {
    /// One evaluation with whole-image statistics.
    Global,
    /// Mean over all 8×8 windows at stride 1.
    #[default]
    Windowed,
}

/// SSIM of the magnitude images with dynamic range `L = max |x|`.
pub fn ssim<T: Real>(xhat: &Image<T>, x: &Image<T>, mode: SsimMode) -> Result<f64> {
    let range = x.peak().as_f64();
    ssim_with_range(xhat, x, mode, if range > 0.0 { range } else { 1.0 })
}

/// SSIM with an explicit dynamic range.
pub fn ssim_with_range<T: Real>(
    xhat: &Image<T>,
    x: &Image<T>,
    mode: SsimMode,
    range: f64,
) -> Result<f64> {
    xhat.check_dims(x.dims())?;
    if !(range.is_finite() && range > 0.0) {
        return Err(Error::InvalidInput(format!(
            "SSIM dynamic range must be positive, got {range}"
        )));
    }
    let a: Vec<f64> = xhat.data().iter().map(|c| c.norm().as_f64()).collect();
    let b: Vec<f64> = x.data().iter().map(|c| c.norm().as_f64()).collect();
    let c1 = (SSIM_K1 * range).powi(2);
    let c2 = (SSIM_K2 * range).powi(2);
    let (rows, cols) = x.dims();
    let w = SSIM_WINDOW;
    if mode == SsimMode::Global || rows < w || cols < w {
        let idx: Vec<usize> = (0..a.len()).collect();
        return Ok(ssim_block(&a, &b, &idx, c1, c2));
    }
    let mut idx = Vec::with_capacity(w * w);
    let mut total = 0.0;
    let mut count = 0usize;
    for r0 in 0..=rows - w {
        for c0 in 0..=cols - w {
            idx.clear();
            for r in r0..r0 + w {
                idx.extend((c0..c0 + w).map(|c| r * cols + c));
            }
            total += ssim_block(&a, &b, &idx, c1, c2);
            count += 1;
        }
    }
    Ok(total / count as f64)
}

/// SSIM over the pixels `idx`, with population statistics.
fn ssim_block(a: &[f64], b: &[f64], idx: &[usize], c1: f64, c2: f64) -> f64 {
    let n = idx.len() as f64;
    let mu_a = idx.iter().map(|&i| a[i]).sum::<f64>() / n;
    let mu_b = idx.iter().map(|&i| b[i]).sum::<f64>() / n;
    let (mut var_a, mut var_b, mut cov) = (0.0, 0.0, 0.0);
    for &i in idx {
        let (da, db) = (a[i] - mu_a, b[i] - mu_b);
        var_a += da * da;
        var_b += db * db;
        cov += da * db;
    }
    var_a /= n;
    var_b /= n;
    cov /= n;
    ((2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2))
        / ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2))
}

pub const METRIC_CSV_HEADER: &str = "case,pattern,rate,method,penalty,rlne,ssim";

/// Quality figures for one reconstruction.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricReport {
    pub case: String,
    pub pattern: String,
    pub rate: f64,
    pub method: String,
    pub penalty: String,
    pub rlne: f64,
    pub ssim_global: f64,
    pub ssim_windowed: f64,
}

impl MetricReport {
    pub fn evaluate<T: Real>(
        xhat: &Image<T>,
        truth: &Image<T>,
        case: &str,
        pattern: &str,
        rate: f64,
        method: &str,
        penalty: &str,
    ) -> Result<Self> {
        Ok(Self {
            case: case.into(),
            pattern: pattern.into(),
            rate,
            method: method.into(),
            penalty: penalty.into(),
            rlne: rlne(xhat, truth)?,
            ssim_global: ssim(xhat, truth, SsimMode::Global)?,
            ssim_windowed: ssim(xhat, truth, SsimMode::Windowed)?,
        })
    }

    /// CSV row matching [`METRIC_CSV_HEADER`]; the `ssim` column is the windowed value.
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.case,
            self.pattern,
            self.rate,
            self.method,
            self.penalty,
            self.rlne,
            self.ssim_windowed
        )
    }
}
