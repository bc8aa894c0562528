//! Sparse-approximation sweep: keep the largest coefficients of every patch
//! and measure how well the reassembled image matches the original.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::dictionary::{
    haar2d_dictionary, train_bank, DictionaryBank, OrthoDictionary, TrainConfig,
};
use crate::direction::{build_direction_set, classify_patches, ClassMap, DirectionMode};
use crate::error::{Error, Result};
use crate::frame::{AnalysisOperator, FrameCoefficients, TightFrame};
use crate::image::{Image, PatchConfig};
use crate::linalg::CMatrix;
use crate::metrics::rlne;
use crate::scalar::{czero, Cx, Real};

pub const SWEEP_CSV_HEADER: &str = "transform,fraction,rlne";

/// Orthonormal type-II 2D DCT basis for `n×n` patches (row-major vectorization).
pub fn dct2d_dictionary<T: Real>(n: usize) -> Result<OrthoDictionary<T>> {
    if n == 0 {
        return Err(Error::InvalidConfig(
            "DCT needs a positive patch size".into(),
        ));
    }
    let nf = n as f64;
    let basis = |k: usize, x: usize| {
        let alpha = if k == 0 {
            (1.0 / nf).sqrt()
        } else {
            (2.0 / nf).sqrt()
        };
        alpha * (std::f64::consts::PI * (2 * x + 1) as f64 * k as f64 / (2.0 * nf)).cos()
    };
    let atoms = CMatrix::from_fn(n * n, n * n, |pix, atom| {
        let (r, c) = (pix / n, pix % n);
        let (u, v) = (atom / n, atom % n);
        Cx::new(T::lit(basis(u, r) * basis(v, c)), T::zero())
    });
    OrthoDictionary::new(atoms)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Transform {
    Haar2d,
    Dct2d,
    /// One dictionary learned from all patches.
    Fdl,
    /// One dictionary learned per direction class.
    Fdlcp,
}

impl Transform {
    pub const ALL: [Transform; 4] = [Self::Haar2d, Self::Dct2d, Self::Fdl, Self::Fdlcp];
}

impl fmt::Display for Transform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Haar2d => "haar2d",
            Self::Dct2d => "dct2d",
            Self::Fdl => "fdl",
            Self::Fdlcp => "fdlcp",
        })
    }
}

impl FromStr for Transform {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|t| t.to_string() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown transform '{s}'")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepRow {
    pub transform: Transform,
    pub fraction: f64,
    pub rlne: f64,
}

impl SweepRow {
    pub fn csv_row(&self) -> String {
        format!("{},{},{}", self.transform, self.fraction, self.rlne)
    }
}

/// Number of coefficients kept per patch of `len` for `fraction`.
pub fn retained_per_patch(len: usize, fraction: f64) -> usize {
    ((fraction * len as f64).ceil() as usize).min(len)
}

/// Zeroes all but the `keep` largest-magnitude entries of each block.
/// Ties go to the lower index.
pub fn keep_largest<T: Real>(a: &mut FrameCoefficients<T>, keep: usize) {
    let block = a.block_len();
    let mut order: Vec<usize> = Vec::with_capacity(block);
    for chunk in a.data_mut().chunks_mut(block) {
        if keep >= block {
            continue;
        }
        order.clear();
        order.extend(0..block);
        if keep > 0 {
            order.select_nth_unstable_by(keep - 1, |&i, &j| {
                chunk[j]
                    .norm_sqr()
                    .partial_cmp(&chunk[i].norm_sqr())
                    .expect("finite coefficients")
                    .then(i.cmp(&j))
            });
        }
        for &i in &order[keep..] {
            chunk[i] = czero();
        }
    }
}

/// Builds the bank and class map a transform uses on `image`.
pub fn transform_bank<T: Real>(
    transform: Transform,
    image: &Image<T>,
    patch: &PatchConfig,
    train: &TrainConfig,
    mode: DirectionMode,
) -> Result<(DictionaryBank<T>, ClassMap)> {
    patch.validate(image.dims())?;
    let count = patch.patch_count(image.dims());
    let single = |d: OrthoDictionary<T>| -> Result<(DictionaryBank<T>, ClassMap)> {
        let bank = DictionaryBank::from_parts(patch.size, 1, 0.0, BTreeMap::from([(0, d)]))?;
        Ok((bank, ClassMap::uniform(count, 1)))
    };
    match transform {
        Transform::Haar2d => single(haar2d_dictionary(patch.size)?),
        Transform::Dct2d => single(dct2d_dictionary(patch.size)?),
        Transform::Fdl => {
            let classes = ClassMap::uniform(count, 1);
            let bank = train_bank(image, &classes, patch, train)?;
            Ok((bank, classes))
        }
        Transform::Fdlcp => {
            let ds = build_direction_set(patch.size)?;
            let classes = classify_patches(image, patch, &ds, mode)?;
            let bank = train_bank(image, &classes, patch, train)?;
            Ok((bank, classes))
        }
    }
}

/// RLNE of the per-patch sparse approximation for every transform and fraction.
pub fn sparsity_sweep<T: Real>(
    image: &Image<T>,
    transforms: &[Transform],
    fractions: &[f64],
    patch: &PatchConfig,
    train: &TrainConfig,
    mode: DirectionMode,
) -> Result<Vec<SweepRow>> {
    if let Some(f) = fractions.iter().find(|f| !(**f > 0.0 && **f <= 1.0)) {
        return Err(Error::InvalidConfig(format!(
            "retained fractions must lie in (0, 1], got {f}"
        )));
    }
    let mut rows = Vec::with_capacity(transforms.len() * fractions.len());
    for &t in transforms {
        let (bank, classes) = transform_bank(t, image, patch, train, mode)?;
        let op = AnalysisOperator::new(&bank, &classes, *patch, image.dims())?;
        let coeffs = op.analyze(image)?;
        for &fraction in fractions {
            let mut a = coeffs.clone();
            keep_largest(&mut a, retained_per_patch(patch.patch_len(), fraction));
            let approx = op.synthesize(&a)?;
            rows.push(SweepRow {
                transform: t,
                fraction,
                rlne: rlne(&approx, image)?,
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::cx;

    #[test]
    fn dct_is_orthonormal_with_constant_first_atom() {
        let d = dct2d_dictionary::<f64>(8).unwrap();
        assert!(d.orthogonality_error() < 1e-12);
        assert!(d
            .atoms()
            .column(0)
            .iter()
            .all(|c| (c.re - 0.125).abs() < 1e-15));
    }

    #[test]
    fn keep_largest_breaks_ties_low() {
        let mut a = FrameCoefficients::new(
            vec![cx(1.0, 0.0), cx(3.0, 0.0), cx(0.0, -3.0), cx(2.0, 0.0)],
            4,
        )
        .unwrap();
        keep_largest(&mut a, 1);
        assert_eq!(
            a.data(),
            &[cx(0.0, 0.0), cx(3.0, 0.0), cx(0.0, 0.0), cx(0.0, 0.0)]
        );
    }

    #[test]
    fn retained_counts() {
        assert_eq!(retained_per_patch(64, 0.05), 4);
        assert_eq!(retained_per_patch(64, 1.0), 64);
        assert_eq!(retained_per_patch(64, 0.01), 1);
    }

    #[test]
    fn transform_names_round_trip() {
        for t in Transform::ALL {
            assert_eq!(t.to_string().parse::<Transform>().unwrap(), t);
        }
        assert!("wavelet".parse::<Transform>().is_err());
    }
}
