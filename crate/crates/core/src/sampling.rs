//! Undersampling masks and the undersampled Fourier encoding `F_U`.
//!
//! Masks and k-space grids are stored DC-centred: the DC sample sits at
//! `(rows/2, cols/2)`. The DFT is unitary in both directions.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{dims_mismatch, Error, Result};
use crate::fft::{dc_index, Fft2};
use crate::image::Image;
use crate::scalar::{czero, Cx, Real};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SamplingMask {
    rows: usize,
    cols: usize,
    kept: Vec<bool>,
}

impl SamplingMask {
    pub fn new(rows: usize, cols: usize, kept: Vec<bool>) -> Result<Self> {
        if rows == 0 || cols == 0 || kept.len() != rows * cols {
            return Err(Error::InvalidInput(format!(
                "mask of {} entries does not fit {rows}x{cols}",
                kept.len()
            )));
        }
        if !kept.iter().any(|&k| k) {
            return Err(Error::InvalidInput("mask keeps no samples".into()));
        }
        Ok(Self { rows, cols, kept })
    }

    pub fn full(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            kept: vec![true; rows * cols],
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn kept(&self) -> &[bool] {
        &self.kept
    }

    #[inline]
    pub fn is_kept(&self, row: usize, col: usize) -> bool {
        self.kept[row * self.cols + col]
    }

    /// Number of sampled locations `M`.
    pub fn count(&self) -> usize {
        self.kept.iter().filter(|&&k| k).count()
    }

    pub fn rate(&self) -> f64 {
        self.count() as f64 / self.kept.len() as f64
    }

    pub fn is_full(&self) -> bool {
        self.kept.iter().all(|&k| k)
    }

    pub fn transpose(&self) -> Self {
        let mut kept = vec![false; self.kept.len()];
        for r in 0..self.rows {
            for c in 0..self.cols {
                kept[c * self.rows + r] = self.kept[r * self.cols + c];
            }
        }
        Self {
            rows: self.cols,
            cols: self.rows,
            kept,
        }
    }

    /// Mask as a 0/1 real image.
    pub fn to_image<T: Real>(&self) -> Image<T> {
        let data = self
            .kept
            .iter()
            .map(|&k| Cx::new(if k { T::one() } else { T::zero() }, T::zero()))
            .collect();
        Image::from_raw(self.rows, self.cols, data)
    }

    /// Inverse of [`SamplingMask::to_image`]; every sample must be exactly 0 or 1.
    pub fn from_image<T: Real>(image: &Image<T>) -> Result<Self> {
        let mut kept = Vec::with_capacity(image.len());
        for (i, v) in image.data().iter().enumerate() {
            if v.im != T::zero() || (v.re != T::zero() && v.re != T::one()) {
                return Err(Error::InvalidInput(format!(
                    "mask sample {i} is neither 0 nor 1"
                )));
            }
            kept.push(v.re == T::one());
        }
        Self::new(image.rows(), image.cols(), kept)
    }
}

/// Radially decaying sampling density `(1 + d/d_max)^(-power)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensityProfile {
    pub power: f64,
}

impl Default for DensityProfile {
    fn default() -> Self {
        Self { power: 2.0 }
    }
}

impl DensityProfile {
    fn weight(&self, d: f64, d_max: f64) -> f64 {
        let rel = if d_max > 0.0 { d / d_max } else { 0.0 };
        (1.0 + rel).powf(-self.power)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SamplingPattern {
    Cartesian,
    Random2d,
    Radial,
}

impl fmt::Display for SamplingPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SamplingPattern::Cartesian => "cartesian",
            SamplingPattern::Random2d => "random2d",
            SamplingPattern::Radial => "radial",
        })
    }
}

impl FromStr for SamplingPattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cartesian" => Ok(Self::Cartesian),
            "random2d" => Ok(Self::Random2d),
            "radial" => Ok(Self::Radial),
            other => Err(Error::InvalidConfig(format!(
                "unknown sampling pattern `{other}`"
            ))),
        }
    }
}

fn check_rate(rate: f64) -> Result<()> {
    if !(rate > 0.0 && rate <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "sampling rate must lie in (0, 1], got {rate}"
        )));
    }
    Ok(())
}

/// Weighted sampling without replacement (exponential-key method): returns the
/// `k` candidates with the largest `ln(u)/w` keys, in candidate order.
fn weighted_pick(weights: &[f64], k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut keyed: Vec<(f64, usize)> = weights
        .iter()
        .enumerate()
        .map(|(i, &w)| {
            let u: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
            (u.ln() / w, i)
        })
        .collect();
    keyed.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut picked: Vec<usize> = keyed.into_iter().take(k).map(|(_, i)| i).collect();
    picked.sort_unstable();
    picked
}

/// Cartesian sampling with random phase encoding: whole rows are kept.
pub fn make_cartesian_mask(
    rows: usize,
    cols: usize,
    rate: f64,
    center_fraction: f64,
    seed: u64,
) -> Result<SamplingMask> {
    make_cartesian_mask_with(
        rows,
        cols,
        rate,
        center_fraction,
        seed,
        DensityProfile::default(),
    )
}

pub fn make_cartesian_mask_with(
    rows: usize,
    cols: usize,
    rate: f64,
    center_fraction: f64,
    seed: u64,
    density: DensityProfile,
) -> Result<SamplingMask> {
    check_rate(rate)?;
    if !(center_fraction >= 0.0 && center_fraction < rate) {
        return Err(Error::InvalidConfig(format!(
            "centre fraction must lie in [0, rate), got {center_fraction}"
        )));
    }
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidConfig(
            "mask dimensions must be positive".into(),
        ));
    }
    let target = ((rate * rows as f64).round() as usize).clamp(1, rows);
    let centre_rows = ((center_fraction * rows as f64).ceil() as usize).min(target);
    let (dc_row, _) = dc_index(rows, cols);

    let mut row_kept = vec![false; rows];
    let start = dc_row
        .saturating_sub(centre_rows / 2)
        .min(rows - centre_rows);
    for r in row_kept.iter_mut().skip(start).take(centre_rows) {
        *r = true;
    }

    let d_max = dc_row.max(rows - 1 - dc_row) as f64;
    let candidates: Vec<usize> = (0..rows).filter(|&r| !row_kept[r]).collect();
    let weights: Vec<f64> = candidates
        .iter()
        .map(|&r| density.weight((r as f64 - dc_row as f64).abs(), d_max))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in weighted_pick(&weights, target - centre_rows, &mut rng) {
        row_kept[candidates[i]] = true;
    }

    let kept = (0..rows)
        .flat_map(|r| std::iter::repeat_n(row_kept[r], cols))
        .collect();
    SamplingMask::new(rows, cols, kept)
}

/// 2D random sampling with a radially decaying density; DC is always kept.
pub fn make_random2d_mask(rows: usize, cols: usize, rate: f64, seed: u64) -> Result<SamplingMask> {
    make_random2d_mask_with(rows, cols, rate, seed, DensityProfile::default())
}

pub fn make_random2d_mask_with(
    rows: usize,
    cols: usize,
    rate: f64,
    seed: u64,
    density: DensityProfile,
) -> Result<SamplingMask> {
    check_rate(rate)?;
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidConfig(
            "mask dimensions must be positive".into(),
        ));
    }
    let total = rows * cols;
    let target = ((rate * total as f64).round() as usize).clamp(1, total);
    let (dr, dc) = dc_index(rows, cols);
    let dc_flat = dr * cols + dc;
    let dist = |i: usize| {
        let r = (i / cols) as f64 - dr as f64;
        let c = (i % cols) as f64 - dc as f64;
        (r * r + c * c).sqrt()
    };
    let d_max = (0..total).map(dist).fold(0.0, f64::max);

    let mut kept = vec![false; total];
    kept[dc_flat] = true;
    let candidates: Vec<usize> = (0..total).filter(|&i| i != dc_flat).collect();
    let weights: Vec<f64> = candidates
        .iter()
        .map(|&i| density.weight(dist(i), d_max))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in weighted_pick(&weights, target - 1, &mut rng) {
        kept[candidates[i]] = true;
    }
    SamplingMask::new(rows, cols, kept)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RadialSpec {
    Spokes(usize),
    /// Add spokes until the achieved rate reaches the target.
    Rate(f64),
}

/// Grid points nearest to the line through the k-space centre at `angle`
/// (radians from the column axis towards increasing row index).
pub fn rasterize_spoke(rows: usize, cols: usize, angle: f64, kept: &mut [bool]) {
    let (cr, cc) = dc_index(rows, cols);
    let (s, c) = angle.sin_cos();
    if c.abs() >= s.abs() {
        let slope = s / c;
        for j in 0..cols {
            let r = (cr as f64 + (j as f64 - cc as f64) * slope).round();
            if r >= 0.0 && (r as usize) < rows {
                kept[r as usize * cols + j] = true;
            }
        }
    } else {
        let slope = c / s;
        for i in 0..rows {
            let col = (cc as f64 + (i as f64 - cr as f64) * slope).round();
            if col >= 0.0 && (col as usize) < cols {
                kept[i * cols + col as usize] = true;
            }
        }
    }
}

fn spokes_mask(rows: usize, cols: usize, spokes: usize) -> Vec<bool> {
    let mut kept = vec![false; rows * cols];
    for k in 0..spokes {
        rasterize_spoke(
            rows,
            cols,
            k as f64 * std::f64::consts::PI / spokes as f64,
            &mut kept,
        );
    }
    kept
}

/// Pseudo-radial sampling: spokes at uniformly spaced angles in `[0, π)`.
pub fn make_radial_mask(rows: usize, cols: usize, spec: RadialSpec) -> Result<SamplingMask> {
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidConfig(
            "mask dimensions must be positive".into(),
        ));
    }
    match spec {
        RadialSpec::Spokes(0) => Err(Error::InvalidConfig("at least one spoke required".into())),
        RadialSpec::Spokes(n) => SamplingMask::new(rows, cols, spokes_mask(rows, cols, n)),
        RadialSpec::Rate(rate) => {
            check_rate(rate)?;
            let total = (rows * cols) as f64;
            let limit = 4 * (rows + cols);
            for n in 1..=limit {
                let kept = spokes_mask(rows, cols, n);
                let achieved = kept.iter().filter(|&&k| k).count() as f64 / total;
                if achieved >= rate {
                    return SamplingMask::new(rows, cols, kept);
                }
            }
            Ok(SamplingMask::full(rows, cols))
        }
    }
}

/// Zero-embedded k-space samples on the DC-centred grid.
#[derive(Clone, Debug, PartialEq)]
pub struct KSpace<T: Real> {
    rows: usize,
    cols: usize,
    data: Vec<Cx<T>>,
}

impl<T: Real> KSpace<T> {
    pub fn new(rows: usize, cols: usize, data: Vec<Cx<T>>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::InvalidInput(format!(
                "k-space of {} samples does not fit {rows}x{cols}",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![czero(); rows * cols],
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn data(&self) -> &[Cx<T>] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Cx<T>] {
        &mut self.data
    }

    pub fn norm(&self) -> T {
        crate::scalar::norm(&self.data)
    }

    pub fn scaled(&self, s: T) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|c| c * s).collect(),
        }
    }

    pub fn to_image(&self) -> Image<T> {
        Image::from_raw(self.rows, self.cols, self.data.clone())
    }

    pub fn from_image(image: &Image<T>) -> Self {
        Self {
            rows: image.rows(),
            cols: image.cols(),
            data: image.data().to_vec(),
        }
    }

    /// Zeroes every sample outside the mask.
    pub fn apply_mask(&mut self, mask: &SamplingMask) -> Result<()> {
        if mask.dims() != self.dims() {
            return Err(dims_mismatch(mask.dims(), self.dims()));
        }
        for (v, &k) in self.data.iter_mut().zip(mask.kept()) {
            if !k {
                *v = czero();
            }
        }
        Ok(())
    }
}

/// `F_U` and its adjoint for one mask, with cached FFT plans.
pub struct FourierEncoding<T: Real> {
    mask: SamplingMask,
    fft: Fft2<T>,
}

impl<T: Real> FourierEncoding<T> {
    pub fn new(mask: SamplingMask) -> Self {
        let (rows, cols) = mask.dims();
        Self {
            fft: Fft2::new(rows, cols),
            mask,
        }
    }

    pub fn mask(&self) -> &SamplingMask {
        &self.mask
    }

    pub fn dims(&self) -> (usize, usize) {
        self.mask.dims()
    }

    /// Full unitary DFT (centred), no masking.
    pub fn dft(&self, x: &Image<T>) -> Vec<Cx<T>> {
        self.fft.forward_centered(x.data())
    }

    /// Full unitary inverse DFT of a centred grid.
    pub fn idft(&self, k: &[Cx<T>]) -> Image<T> {
        let (rows, cols) = self.dims();
        Image::from_raw(rows, cols, self.fft.inverse_centered(k))
    }

    /// `y = U ∘ DFT(x)`.
    pub fn forward(&self, x: &Image<T>) -> Result<KSpace<T>> {
        x.check_dims(self.dims())?;
        let mut data = self.dft(x);
        for (v, &k) in data.iter_mut().zip(self.mask.kept()) {
            if !k {
                *v = czero();
            }
        }
        let (rows, cols) = self.dims();
        Ok(KSpace { rows, cols, data })
    }

    /// `F_Uᴴ y`: inverse DFT of the masked grid.
    pub fn adjoint(&self, y: &KSpace<T>) -> Result<Image<T>> {
        if y.dims() != self.dims() {
            return Err(dims_mismatch(self.dims(), y.dims()));
        }
        let masked: Vec<Cx<T>> = y
            .data()
            .iter()
            .zip(self.mask.kept())
            .map(|(&v, &k)| if k { v } else { czero() })
            .collect();
        Ok(self.idft(&masked))
    }
}

pub fn encode<T: Real>(x: &Image<T>, mask: &SamplingMask) -> Result<KSpace<T>> {
    x.check_dims(mask.dims())?;
    FourierEncoding::new(mask.clone()).forward(x)
}

/// Zero-filling reconstruction: inverse unitary DFT of the zero-filled grid.
pub fn adjoint<T: Real>(y: &KSpace<T>) -> Image<T> {
    let (rows, cols) = y.dims();
    Image::from_raw(rows, cols, Fft2::new(rows, cols).inverse_centered(y.data()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{cx, inner};
    use rand::Rng;

    fn random_image(rows: usize, cols: usize, seed: u64) -> Image<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..rows * cols)
            .map(|_| cx(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        Image::new(rows, cols, data).unwrap()
    }

    #[test]
    fn full_rate_masks_keep_everything() {
        assert!(make_cartesian_mask(32, 24, 1.0, 0.1, 3).unwrap().is_full());
        assert!(make_random2d_mask(16, 16, 1.0, 3).unwrap().is_full());
    }

    #[test]
    fn masks_are_seed_deterministic() {
        assert_eq!(
            make_cartesian_mask(64, 64, 0.33, 0.04, 7).unwrap(),
            make_cartesian_mask(64, 64, 0.33, 0.04, 7).unwrap()
        );
        assert_ne!(
            make_cartesian_mask(64, 64, 0.33, 0.04, 7).unwrap(),
            make_cartesian_mask(64, 64, 0.33, 0.04, 8).unwrap()
        );
        assert_eq!(
            make_random2d_mask(32, 32, 0.2, 1).unwrap(),
            make_random2d_mask(32, 32, 0.2, 1).unwrap()
        );
    }

    #[test]
    fn cartesian_row_count_and_centre() {
        let m = make_cartesian_mask(256, 256, 0.33, 0.04, 7).unwrap();
        let kept_rows: Vec<usize> = (0..256).filter(|&r| m.is_kept(r, 0)).collect();
        assert!(kept_rows.len() == 84 || kept_rows.len() == 85);
        for r in 0..256 {
            let first = m.is_kept(r, 0);
            assert!((0..256).all(|c| m.is_kept(r, c) == first));
        }
        for r in 123..133 {
            assert!(m.is_kept(r, 0), "centre row {r} missing");
        }
    }

    #[test]
    fn cartesian_rejects_bad_config() {
        assert!(make_cartesian_mask(32, 32, 0.0, 0.0, 1).is_err());
        assert!(make_cartesian_mask(32, 32, 1.5, 0.0, 1).is_err());
        assert!(make_cartesian_mask(32, 32, 0.3, 0.3, 1).is_err());
        assert!(make_cartesian_mask(32, 32, 0.3, -0.1, 1).is_err());
    }

    #[test]
    fn random2d_count_and_dc() {
        let m = make_random2d_mask(256, 256, 0.16, 11).unwrap();
        let expected = 0.16 * 65536.0;
        assert!((m.count() as f64 - expected).abs() <= 1.0);
        let (r, c) = dc_index(256, 256);
        assert!(m.is_kept(r, c));
        assert!(make_random2d_mask(8, 8, 0.01, 1).unwrap().is_kept(4, 4));
    }

    #[test]
    fn horizontal_spoke_is_centre_row() {
        let m = make_radial_mask(8, 8, RadialSpec::Spokes(1)).unwrap();
        for r in 0..8 {
            for c in 0..8 {
                assert_eq!(m.is_kept(r, c), r == 4);
            }
        }
    }

    #[test]
    fn spokes_transpose_under_reflection() {
        for k in 0..12 {
            let theta = k as f64 * std::f64::consts::PI / 12.0;
            let mut a = vec![false; 64 * 64];
            let mut b = vec![false; 64 * 64];
            rasterize_spoke(64, 64, theta, &mut a);
            rasterize_spoke(64, 64, std::f64::consts::FRAC_PI_2 - theta, &mut b);
            let a = SamplingMask::new(64, 64, a).unwrap();
            let b = SamplingMask::new(64, 64, b).unwrap();
            assert_eq!(a.transpose(), b, "theta index {k}");
        }
        // axis-aligned pair: θ and θ + π/2
        let two = make_radial_mask(16, 16, RadialSpec::Spokes(2)).unwrap();
        assert_eq!(two.transpose(), two);
    }

    #[test]
    fn radial_rate_target() {
        let m = make_radial_mask(256, 256, RadialSpec::Rate(0.18)).unwrap();
        assert!((0.18..=0.20).contains(&m.rate()), "rate {}", m.rate());
        assert!(make_radial_mask(8, 8, RadialSpec::Rate(0.0)).is_err());
        assert!(make_radial_mask(8, 8, RadialSpec::Spokes(0)).is_err());
    }

    #[test]
    fn full_mask_round_trip() {
        let x = random_image(12, 10, 1);
        let mask = SamplingMask::full(12, 10);
        let y = encode(&x, &mask).unwrap();
        let back = adjoint(&y);
        let err = crate::scalar::distance(back.data(), x.data()) / x.norm();
        assert!(err < 1e-12);
        assert!((y.norm() - x.norm()).abs() < 1e-12 * x.norm());
    }

    #[test]
    fn constant_image_hits_dc() {
        let x = Image::from_real(6, 8, &[0.75; 48]).unwrap();
        let y = encode(&x, &SamplingMask::full(6, 8)).unwrap();
        let (r, c) = dc_index(6, 8);
        assert!((y.data()[r * 8 + c].re - 0.75 * 48f64.sqrt()).abs() < 1e-12);
        let nonzero = y.data().iter().filter(|v| v.norm() > 1e-12).count();
        assert_eq!(nonzero, 1);
    }

    #[test]
    fn encode_adjoint_identity() {
        let mask = make_random2d_mask(16, 12, 0.4, 5).unwrap();
        let enc = FourierEncoding::new(mask.clone());
        let x = random_image(16, 12, 2);
        let mut y = KSpace::from_image(&random_image(16, 12, 3));
        y.apply_mask(&mask).unwrap();
        let lhs = inner(enc.forward(&x).unwrap().data(), y.data());
        let rhs = inner(x.data(), enc.adjoint(&y).unwrap().data());
        assert!((lhs - rhs).norm() <= 1e-12 * lhs.norm());
    }

    #[test]
    fn unsampled_entries_are_exact_zero_and_non_expansive() {
        let mask = make_cartesian_mask(32, 32, 0.3, 0.05, 1).unwrap();
        let x = random_image(32, 32, 9);
        let y = encode(&x, &mask).unwrap();
        for (v, &k) in y.data().iter().zip(mask.kept()) {
            if !k {
                assert_eq!(*v, cx(0.0, 0.0));
            }
        }
        assert!(y.norm() < x.norm());
        assert_eq!(adjoint(&KSpace::<f64>::zeros(4, 4)), Image::zeros(4, 4));
    }

    #[test]
    fn mask_image_round_trip() {
        let m = make_random2d_mask(8, 6, 0.5, 2).unwrap();
        assert_eq!(SamplingMask::from_image(&m.to_image::<f64>()).unwrap(), m);
        let bad = Image::from_real(1, 2, &[0.5f64, 1.0]).unwrap();
        assert!(SamplingMask::from_image(&bad).is_err());
    }
}
