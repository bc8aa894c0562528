//! Geometric direction estimation and patch classification.
//!
//! A candidate direction reorders the `n²` pixels of a patch by their
//! projected coordinate on the line orthogonal to the direction. The ordering
//! only changes at *critical* angles, the directions of segments joining two
//! pixel centres. Candidates are the open intervals between consecutive
//! critical angles in `[0, π)`; for `n = 8` there are 72 critical angles and
//! therefore 71 candidates.
//!
//! The estimated direction of a patch is the candidate whose reordered 1D
//! signal loses the least energy when only the largest quarter of its Haar
//! coefficients is kept.

use std::cmp::Ordering;
use std::fmt;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::haar::{haar_forward, is_power_of_two};
use crate::image::{gather_patch, Image, PatchConfig};
use crate::scalar::{czero, Cx, Real};

fn gcd(mut a: i64, mut b: i64) -> i64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.abs()
}

/// Candidate reorderings `G_ω` for one patch size.
#[derive(Clone, Debug, PartialEq)]
pub struct DirectionSet {
    patch_size: usize,
    permutations: Vec<Vec<usize>>,
    angles: Vec<f64>,
}

impl DirectionSet {
    pub fn patch_size(&self) -> usize {
        self.patch_size
    }

    /// Number of candidates `Q`.
    pub fn len(&self) -> usize {
        self.permutations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.permutations.is_empty()
    }

    pub fn permutation(&self, omega: usize) -> &[usize] {
        &self.permutations[omega]
    }

    pub fn permutations(&self) -> &[Vec<usize>] {
        &self.permutations
    }

    /// Representative angle of each candidate, radians in `[0, π)`, measured
    /// from the column axis towards increasing row index.
    pub fn angles(&self) -> &[f64] {
        &self.angles
    }
}

/// Sorted critical angles in `[0, π)` for an `n×n` patch.
pub fn critical_angles(n: usize) -> Vec<f64> {
    let m = n as i64 - 1;
    let mut dirs = Vec::new();
    for dy in 0..=m {
        for dx in -m..=m {
            if (dy == 0 && dx <= 0) || gcd(dx, dy) != 1 {
                continue;
            }
            dirs.push((dx, dy));
        }
    }
    let mut angles: Vec<f64> = dirs
        .into_iter()
        .map(|(dx, dy)| (dy as f64).atan2(dx as f64))
        .collect();
    angles.sort_by(f64::total_cmp);
    angles
}

/// Pixel order for direction `angle`: ascending projection on the normal
/// line, ties by row-major index.
pub fn ordering_at(n: usize, angle: f64) -> Vec<usize> {
    let centre = (n as f64 - 1.0) / 2.0;
    let (s, c) = angle.sin_cos();
    let mut keyed: Vec<(f64, usize)> = (0..n * n)
        .map(|i| {
            let x = (i % n) as f64 - centre;
            let y = (i / n) as f64 - centre;
            (-x * s + y * c, i)
        })
        .collect();
    keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    keyed.into_iter().map(|(_, i)| i).collect()
}

pub fn build_direction_set(n: usize) -> Result<DirectionSet> {
    if n < 2 {
        return Err(Error::InvalidConfig(format!(
            "direction estimation needs patch size >= 2, got {n}"
        )));
    }
    let critical = critical_angles(n);
    let angles: Vec<f64> = critical.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    let permutations = angles.iter().map(|&a| ordering_at(n, a)).collect();
    Ok(DirectionSet {
        patch_size: n,
        permutations,
        angles,
    })
}

/// `G_ω p`.
pub fn reorder<T: Real>(patch: &[Cx<T>], omega: usize, ds: &DirectionSet) -> Result<Vec<Cx<T>>> {
    if omega >= ds.len() {
        return Err(Error::InvalidInput(format!(
            "direction index {omega} out of range for {} candidates",
            ds.len()
        )));
    }
    let n2 = ds.patch_size * ds.patch_size;
    if patch.len() != n2 {
        return Err(Error::InvalidInput(format!(
            "patch has {} values, expected {n2}",
            patch.len()
        )));
    }
    Ok(ds.permutations[omega].iter().map(|&i| patch[i]).collect())
}

/// Number of Haar coefficients retained when scoring a candidate.
pub fn retained_count(len: usize) -> usize {
    len.div_ceil(4)
}

/// Per-thread buffers for [`DirectionEstimator`].
struct Workspace<T: Real> {
    signal: Vec<Cx<T>>,
    scratch: Vec<Cx<T>>,
    energy: Vec<T>,
    order: Vec<usize>,
    kept: Vec<bool>,
}

impl<T: Real> Workspace<T> {
    fn new(len: usize) -> Self {
        Self {
            signal: vec![czero(); len],
            scratch: Vec::with_capacity(len),
            energy: vec![T::zero(); len],
            order: (0..len).collect(),
            kept: vec![false; len],
        }
    }
}

/// Haar residual after keeping the `keep` largest coefficients; ranking by
/// magnitude with ties to the lower index, discarded energy summed in index order.
fn residual<T: Real>(ws: &mut Workspace<T>, keep: usize) -> T {
    haar_forward(&mut ws.signal, &mut ws.scratch);
    for (e, c) in ws.energy.iter_mut().zip(&ws.signal) {
        *e = c.norm_sqr();
    }
    let len = ws.signal.len();
    for (i, o) in ws.order.iter_mut().enumerate() {
        *o = i;
    }
    let energy = &ws.energy;
    let by_rank = |a: &usize, b: &usize| -> Ordering {
        energy[*b]
            .partial_cmp(&energy[*a])
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(b))
    };
    ws.kept.iter_mut().for_each(|k| *k = false);
    if keep >= len {
        return T::zero();
    }
    if keep > 0 {
        ws.order.select_nth_unstable_by(keep - 1, by_rank);
        for &i in &ws.order[..keep] {
            ws.kept[i] = true;
        }
    }
    ws.kept[..len]
        .iter()
        .zip(energy)
        .filter(|(&k, _)| !k)
        .fold(T::zero(), |t, (_, &e)| t + e)
}

/// Whether classification looks at complex samples or their magnitudes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum DirectionMode {
    #[default]
    Complex,
    Magnitude,
}

impl fmt::Display for DirectionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DirectionMode::Complex => "complex",
            DirectionMode::Magnitude => "magnitude",
        })
    }
}

/// Residual of every candidate for one patch.
pub fn direction_residuals<T: Real>(patch: &[Cx<T>], ds: &DirectionSet) -> Result<Vec<T>> {
    let len = check_estimable(patch, ds)?;
    let mut ws = Workspace::new(len);
    let keep = retained_count(len);
    Ok(ds
        .permutations
        .iter()
        .map(|perm| {
            for (dst, &i) in ws.signal.iter_mut().zip(perm) {
                *dst = patch[i];
            }
            residual(&mut ws, keep)
        })
        .collect())
}

fn check_estimable<T: Real>(patch: &[Cx<T>], ds: &DirectionSet) -> Result<usize> {
    let len = ds.patch_size * ds.patch_size;
    if patch.len() != len {
        return Err(Error::InvalidInput(format!(
            "patch has {} values, expected {len}",
            patch.len()
        )));
    }
    if !is_power_of_two(len) {
        return Err(Error::InvalidConfig(format!(
            "Haar scoring needs a power-of-two patch length, got {len}"
        )));
    }
    Ok(len)
}

/// Relative band, as a fraction of patch energy, inside which residuals
/// count as tied. Candidates with equal exact residuals differ by rounding.
pub fn tie_tolerance<T: Real>() -> T {
    T::lit(1e-12).max(T::epsilon() * T::lit(64.0))
}

/// Lowest index whose residual is within the tie band of the minimum.
fn argmin<T: Real>(residuals: impl Iterator<Item = T>, energy: T) -> usize {
    let residuals: Vec<T> = residuals.collect();
    let min = residuals.iter().fold(T::infinity(), |m, &r| m.min(r));
    let band = min + tie_tolerance::<T>() * energy;
    residuals.iter().position(|&r| r <= band).unwrap_or(0)
}

/// Index of the candidate with the smallest residual (lowest index on ties,
/// see [`tie_tolerance`]).
pub fn estimate_direction<T: Real>(patch: &[Cx<T>], ds: &DirectionSet) -> Result<usize> {
    let len = check_estimable(patch, ds)?;
    let mut ws = Workspace::new(len);
    Ok(estimate_with(patch, ds, &mut ws))
}

fn estimate_with<T: Real>(patch: &[Cx<T>], ds: &DirectionSet, ws: &mut Workspace<T>) -> usize {
    let keep = retained_count(patch.len());
    let energy = crate::scalar::norm_sqr(patch);
    argmin(
        ds.permutations.iter().map(|perm| {
            for (dst, &i) in ws.signal.iter_mut().zip(perm) {
                *dst = patch[i];
            }
            residual(ws, keep)
        }),
        energy,
    )
}

/// Per-patch class indices and the patches belonging to each class.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassMap {
    labels: Vec<usize>,
    members: Vec<Vec<usize>>,
}

impl ClassMap {
    pub fn new(labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        let mut members = vec![Vec::new(); num_classes];
        for (j, &w) in labels.iter().enumerate() {
            if w >= num_classes {
                return Err(Error::InvalidInput(format!(
                    "class {w} of patch {j} exceeds class count {num_classes}"
                )));
            }
            members[w].push(j);
        }
        Ok(Self { labels, members })
    }

    /// Every patch in class 0.
    pub fn uniform(num_patches: usize, num_classes: usize) -> Self {
        Self::new(vec![0; num_patches], num_classes.max(1)).expect("class 0 is valid")
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label(&self, patch: usize) -> usize {
        self.labels[patch]
    }

    pub fn members(&self, class: usize) -> &[usize] {
        &self.members[class]
    }

    pub fn num_classes(&self) -> usize {
        self.members.len()
    }

    pub fn num_patches(&self) -> usize {
        self.labels.len()
    }

    pub fn populated(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.members.len()).filter(|&w| !self.members[w].is_empty())
    }
}

/// Estimates the direction of every patch of `image`.
pub fn classify_patches<T: Real>(
    image: &Image<T>,
    cfg: &PatchConfig,
    ds: &DirectionSet,
    mode: DirectionMode,
) -> Result<ClassMap> {
    cfg.validate(image.dims())?;
    if cfg.size != ds.patch_size {
        return Err(Error::InvalidConfig(format!(
            "patch size {} does not match direction set size {}",
            cfg.size, ds.patch_size
        )));
    }
    let len = cfg.patch_len();
    if !is_power_of_two(len) {
        return Err(Error::InvalidConfig(format!(
            "Haar scoring needs a power-of-two patch length, got {len}"
        )));
    }
    let source = match mode {
        DirectionMode::Complex => None,
        DirectionMode::Magnitude => {
            let mags = image.magnitudes();
            Some(Image::from_real(image.rows(), image.cols(), &mags)?)
        }
    };
    let src = source.as_ref().unwrap_or(image);
    let labels: Vec<usize> = cfg
        .origins(image.dims())
        .par_iter()
        .map_init(
            || (Workspace::new(len), vec![czero(); len]),
            |(ws, patch), &origin| {
                gather_patch(src, origin, cfg.size, patch);
                estimate_with(patch, ds, ws)
            },
        )
        .collect();
    ClassMap::new(labels, ds.len())
}
