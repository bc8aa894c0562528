//! Tight-frame analysis and synthesis.
//!
//! The patch frame stacks `(1/√c)·D_{ω_j}ᴴ R_j x` over all patches. Because
//! every `D_ω` is unitary and `Σ_j R_jᵀR_j = c·I`, the operator satisfies
//! `ΦᴴΦ = I`. It is never materialized.

use rayon::prelude::*;

use crate::dictionary::DictionaryBank;
use crate::direction::ClassMap;
use crate::error::{dims_mismatch, Error, Result};
use crate::image::{gather_patch, scatter_add_patch, Image, PatchConfig};
use crate::scalar::{czero, Cx, Real};

/// Stacked frame coefficients, stored in contiguous blocks.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameCoefficients<T: Real> {
    data: Vec<Cx<T>>,
    block: usize,
}

impl<T: Real> FrameCoefficients<T> {
    pub fn new(data: Vec<Cx<T>>, block: usize) -> Result<Self> {
        if block == 0 || !data.len().is_multiple_of(block) {
            return Err(Error::InvalidInput(format!(
                "{} coefficients do not split into blocks of {block}",
                data.len()
            )));
        }
        Ok(Self { data, block })
    }

    pub fn zeros(len: usize, block: usize) -> Self {
        Self {
            data: vec![czero(); len],
            block,
        }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn block_len(&self) -> usize {
        self.block
    }

    pub fn block(&self, j: usize) -> &[Cx<T>] {
        &self.data[j * self.block..(j + 1) * self.block]
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
}

/// A linear operator `Φ` with `ΦᴴΦ = I`.
pub trait TightFrame<T: Real>: Sync {
    fn image_dims(&self) -> (usize, usize);

    fn coefficient_len(&self) -> usize;

    fn analyze(&self, x: &Image<T>) -> Result<FrameCoefficients<T>>;

    fn synthesize(&self, a: &FrameCoefficients<T>) -> Result<Image<T>>;
}

/// Patch-dictionary frame built from a trained bank and a class map.
pub struct AnalysisOperator<'a, T: Real> {
    bank: &'a DictionaryBank<T>,
    classes: &'a ClassMap,
    cfg: PatchConfig,
    dims: (usize, usize),
    origins: Vec<(usize, usize)>,
    populated: Vec<usize>,
    scale: T,
}

impl<'a, T: Real> AnalysisOperator<'a, T> {
    pub fn new(
        bank: &'a DictionaryBank<T>,
        classes: &'a ClassMap,
        cfg: PatchConfig,
        dims: (usize, usize),
    ) -> Result<Self> {
        cfg.validate(dims)?;
        if bank.patch_size() != cfg.size {
            return Err(Error::InvalidConfig(format!(
                "bank patch size {} does not match patch size {}",
                bank.patch_size(),
                cfg.size
            )));
        }
        let c = cfg.overlap_factor(dims).ok_or_else(|| {
            Error::InvalidConfig(format!(
                "stride {} gives non-uniform overlap on a {}x{} image",
                cfg.stride, dims.0, dims.1
            ))
        })?;
        let origins = cfg.origins(dims);
        if classes.num_patches() != origins.len() {
            return Err(Error::InvalidInput(format!(
                "class map covers {} patches, frame needs {}",
                classes.num_patches(),
                origins.len()
            )));
        }
        if classes.num_classes() > bank.num_classes() {
            return Err(Error::InvalidInput(format!(
                "class map has {} classes, bank only {}",
                classes.num_classes(),
                bank.num_classes()
            )));
        }
        Ok(Self {
            bank,
            classes,
            cfg,
            dims,
            origins,
            populated: classes.populated().collect(),
            scale: T::one() / T::from_usize_lossy(c).sqrt(),
        })
    }

    pub fn overlap_factor(&self) -> usize {
        self.cfg.overlap_factor(self.dims).expect("validated")
    }

    pub fn patch_config(&self) -> PatchConfig {
        self.cfg
    }
}

impl<T: Real> TightFrame<T> for AnalysisOperator<'_, T> {
    fn image_dims(&self) -> (usize, usize) {
        self.dims
    }

    fn coefficient_len(&self) -> usize {
        self.origins.len() * self.cfg.patch_len()
    }

    fn analyze(&self, x: &Image<T>) -> Result<FrameCoefficients<T>> {
        x.check_dims(self.dims)?;
        let n = self.cfg.size;
        let n2 = n * n;
        let per_class: Vec<(usize, Vec<Cx<T>>)> = self
            .populated
            .par_iter()
            .map(|&w| {
                let members = self.classes.members(w);
                let mut patches = vec![czero(); n2 * members.len()];
                for (dst, &j) in patches.chunks_mut(n2).zip(members) {
                    gather_patch(x, self.origins[j], n, dst);
                }
                let mut coeffs = vec![czero(); patches.len()];
                self.bank
                    .get(w)
                    .analyze_batch(&patches, members.len(), &mut coeffs);
                (w, coeffs)
            })
            .collect();
        let mut out = vec![czero(); self.coefficient_len()];
        for (w, coeffs) in per_class {
            for (src, &j) in coeffs.chunks(n2).zip(self.classes.members(w)) {
                for (o, &c) in out[j * n2..(j + 1) * n2].iter_mut().zip(src) {
                    *o = c * self.scale;
                }
            }
        }
        Ok(FrameCoefficients {
            data: out,
            block: n2,
        })
    }

    fn synthesize(&self, a: &FrameCoefficients<T>) -> Result<Image<T>> {
        if a.len() != self.coefficient_len() {
            return Err(Error::InvalidInput(format!(
                "expected {} frame coefficients, got {}",
                self.coefficient_len(),
                a.len()
            )));
        }
        let n = self.cfg.size;
        let n2 = n * n;
        let per_class: Vec<(usize, Vec<Cx<T>>)> = self
            .populated
            .par_iter()
            .map(|&w| {
                let members = self.classes.members(w);
                let mut coeffs = Vec::with_capacity(n2 * members.len());
                for &j in members {
                    coeffs.extend_from_slice(a.block(j));
                }
                let mut patches = vec![czero(); coeffs.len()];
                self.bank
                    .get(w)
                    .synthesize_batch(&coeffs, members.len(), &mut patches);
                (w, patches)
            })
            .collect();
        let mut patches = vec![czero(); a.len()];
        for (w, p) in per_class {
            for (src, &j) in p.chunks(n2).zip(self.classes.members(w)) {
                patches[j * n2..(j + 1) * n2].copy_from_slice(src);
            }
        }
        // Sequential accumulation keeps the result independent of thread count.
        let mut data = vec![czero(); self.dims.0 * self.dims.1];
        for (j, p) in patches.chunks(n2).enumerate() {
            scatter_add_patch(&mut data, self.dims, self.origins[j], n, p);
        }
        for v in data.iter_mut() {
            *v *= self.scale;
        }
        Ok(Image::from_raw(self.dims.0, self.dims.1, data))
    }
}

pub fn analyze<T: Real, F: TightFrame<T> + ?Sized>(
    x: &Image<T>,
    op: &F,
) -> Result<FrameCoefficients<T>> {
    op.analyze(x)
}

pub fn synthesize<T: Real, F: TightFrame<T> + ?Sized>(
    a: &FrameCoefficients<T>,
    op: &F,
) -> Result<Image<T>> {
    op.synthesize(a)
}

pub(crate) fn check_frame_dims<T: Real, F: TightFrame<T> + ?Sized>(
    op: &F,
    dims: (usize, usize),
) -> Result<()> {
    if op.image_dims() != dims {
        return Err(dims_mismatch(op.image_dims(), dims));
    }
    Ok(())
}
