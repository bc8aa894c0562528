//! Orthogonal dictionary learning on classified patches.
//!
//! Each class alternates hard-thresholding sparse coding `A = H_η(DᴴX)` with
//! the orthogonal Procrustes update `D = PVᴴ` where `XAᴴ = PΛVᴴ`, minimizing
//! `‖X − DA‖_F² + η²‖A‖₀` subject to `DᴴD = I`.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::direction::ClassMap;
use crate::error::{Error, Result};
use crate::haar::{haar_matrix, is_power_of_two};
use crate::image::{gather_patch, Image, PatchConfig};
use crate::linalg::{gemm, svd, svd_with_guess, CMatrix};
use crate::scalar::{czero, Cx, GemmSpec, Real};

/// Square unitary dictionary; columns are atoms.
#[derive(Clone, Debug, PartialEq)]
pub struct OrthoDictionary<T: Real> {
    atoms: CMatrix<T>,
}

impl<T: Real> OrthoDictionary<T> {
    /// Wraps `atoms` after checking `DᴴD = I` to `1e-8`.
    pub fn new(atoms: CMatrix<T>) -> Result<Self> {
        if atoms.rows() != atoms.cols() {
            return Err(Error::InvalidInput(format!(
                "dictionary must be square, got {}x{}",
                atoms.rows(),
                atoms.cols()
            )));
        }
        let err = atoms.orthogonality_error();
        if err.as_f64().is_nan() || err.as_f64() >= 1e-8 {
            return Err(Error::InvalidInput(format!(
                "dictionary is not orthogonal (‖DᴴD − I‖_F = {err})"
            )));
        }
        Ok(Self { atoms })
    }

    pub(crate) fn from_unchecked(atoms: CMatrix<T>) -> Self {
        Self { atoms }
    }

    pub fn atoms(&self) -> &CMatrix<T> {
        &self.atoms
    }

    /// Signal length `n²`.
    pub fn dim(&self) -> usize {
        self.atoms.rows()
    }

    pub fn orthogonality_error(&self) -> T {
        self.atoms.orthogonality_error()
    }

    /// `Dᴴ p` into `out`.
    #[inline]
    pub fn analyze_into(&self, p: &[Cx<T>], out: &mut [Cx<T>]) {
        for (k, o) in out.iter_mut().enumerate() {
            *o = self
                .atoms
                .column(k)
                .iter()
                .zip(p)
                .fold(czero(), |acc, (a, x)| acc + a.conj() * x);
        }
    }

    /// `DᴴX` for `cols` column-major signals in `x`, into `out`.
    pub fn analyze_batch(&self, x: &[Cx<T>], cols: usize, out: &mut [Cx<T>]) {
        let n = self.dim();
        let conj: Vec<Cx<T>> = self.atoms.data().iter().map(|c| c.conj()).collect();
        gemm(
            &GemmSpec {
                m: n,
                k: n,
                n: cols,
                a_strides: (n, 1),
                b_strides: (1, n),
                c_strides: (1, n),
            },
            &conj,
            x,
            out,
        );
    }

    /// `DA` for `cols` column-major coefficient vectors in `a`, into `out`.
    pub fn synthesize_batch(&self, a: &[Cx<T>], cols: usize, out: &mut [Cx<T>]) {
        let n = self.dim();
        gemm(
            &GemmSpec {
                m: n,
                k: n,
                n: cols,
                a_strides: (1, n),
                b_strides: (1, n),
                c_strides: (1, n),
            },
            self.atoms.data(),
            a,
            out,
        );
    }

    /// `D a` into `out`.
    #[inline]
    pub fn synthesize_into(&self, a: &[Cx<T>], out: &mut [Cx<T>]) {
        out.iter_mut().for_each(|o| *o = czero());
        for (k, &c) in a.iter().enumerate() {
            if c.re == T::zero() && c.im == T::zero() {
                continue;
            }
            for (o, atom) in out.iter_mut().zip(self.atoms.column(k)) {
                *o += atom * c;
            }
        }
    }
}

/// Tensor-product 2D Haar basis for `n×n` patches (row-major vectorization).
pub fn haar2d_dictionary<T: Real>(n: usize) -> Result<OrthoDictionary<T>> {
    if !is_power_of_two(n) {
        return Err(Error::InvalidConfig(format!(
            "2D Haar dictionary needs a power-of-two patch size, got {n}"
        )));
    }
    let w = haar_matrix::<T>(n);
    let atoms = CMatrix::from_fn(n * n, n * n, |pix, atom| {
        let (r, c) = (pix / n, pix % n);
        let (i, j) = (atom / n, atom % n);
        Cx::new(w[i][r] * w[j][c], T::zero())
    });
    Ok(OrthoDictionary::from_unchecked(atoms))
}

/// `H_η(c)`: keeps `c` when `|c| ≥ η`.
#[inline]
pub fn hard_threshold<T: Real>(c: Cx<T>, eta: T) -> Cx<T> {
    if c.norm() >= eta {
        c
    } else {
        czero()
    }
}

/// `A = H_η(DᴴX)`.
pub fn sparse_code<T: Real>(d: &OrthoDictionary<T>, x: &CMatrix<T>, eta: T) -> Result<CMatrix<T>> {
    if x.rows() != d.dim() {
        return Err(Error::InvalidInput(format!(
            "patch matrix has {} rows, dictionary expects {}",
            x.rows(),
            d.dim()
        )));
    }
    let mut a = d.atoms.adjoint_mul(x);
    for v in a.data_mut() {
        *v = hard_threshold(*v, eta);
    }
    Ok(a)
}

/// Orthogonal Procrustes step: `D = PVᴴ` from the SVD `XAᴴ = PΛVᴴ`.
pub fn update_dictionary<T: Real>(x: &CMatrix<T>, a: &CMatrix<T>) -> Result<OrthoDictionary<T>> {
    if x.rows() != a.rows() || x.cols() != a.cols() {
        return Err(Error::InvalidInput(format!(
            "patch matrix {}x{} and code matrix {}x{} differ",
            x.rows(),
            x.cols(),
            a.rows(),
            a.cols()
        )));
    }
    Ok(procrustes(x, a, None).0)
}

fn convert<S: Real, T: Real>(m: &CMatrix<S>) -> CMatrix<T> {
    let data = m
        .data()
        .iter()
        .map(|c| Cx::new(T::lit(c.re.as_f64()), T::lit(c.im.as_f64())))
        .collect();
    CMatrix::from_columns(m.rows(), m.cols(), data)
}

/// Procrustes update plus the right singular vectors, for warm starts.
/// The SVD always runs in `f64` so single-precision dictionaries stay orthogonal.
fn procrustes<T: Real>(
    x: &CMatrix<T>,
    a: &CMatrix<T>,
    guess: Option<&CMatrix<f64>>,
) -> (OrthoDictionary<T>, CMatrix<f64>) {
    let m: CMatrix<f64> = convert(&x.mul_adjoint(a));
    let s = match guess {
        Some(g) => svd_with_guess(&m, g),
        None => svd(&m),
    };
    (
        OrthoDictionary::from_unchecked(convert(&s.left.mul_adjoint(&s.right))),
        s.right,
    )
}

/// `‖X − DA‖_F² + η²‖A‖₀`.
pub fn training_objective<T: Real>(
    d: &OrthoDictionary<T>,
    x: &CMatrix<T>,
    a: &CMatrix<T>,
    eta: T,
) -> T {
    let da = d.atoms.mul(a);
    let fit = x
        .data()
        .iter()
        .zip(da.data())
        .fold(T::zero(), |acc, (p, q)| acc + (p - q).norm_sqr());
    let nnz = a
        .data()
        .iter()
        .filter(|c| c.re != T::zero() || c.im != T::zero())
        .count();
    fit + eta * eta * T::from_usize_lossy(nnz)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainConfig {
    /// Hard threshold `η`.
    pub eta: f64,
    pub max_iterations: usize,
    /// Relative objective change that counts as converged.
    pub tolerance: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            eta: 0.2,
            max_iterations: 20,
            tolerance: 1e-4,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0;
        if !positive(self.eta) || self.max_iterations == 0 || !positive(self.tolerance) {
            return Err(Error::InvalidConfig(format!(
                "training needs eta > 0, max_iterations >= 1 and tolerance > 0, got {self:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassTraining<T: Real> {
    pub dictionary: OrthoDictionary<T>,
    /// Objective before the first update, then after every update; non-increasing.
    pub objectives: Vec<T>,
    pub iterations: usize,
    pub converged: bool,
}

/// Alternates sparse coding and dictionary update from `init`.
pub fn train_class_dictionary<T: Real>(
    x: &CMatrix<T>,
    cfg: &TrainConfig,
    init: &OrthoDictionary<T>,
) -> Result<ClassTraining<T>> {
    cfg.validate()?;
    if x.rows() != init.dim() {
        return Err(Error::InvalidInput(format!(
            "patch matrix has {} rows, dictionary expects {}",
            x.rows(),
            init.dim()
        )));
    }
    if x.cols() == 0 {
        return Ok(ClassTraining {
            dictionary: init.clone(),
            objectives: Vec::new(),
            iterations: 0,
            converged: true,
        });
    }
    let eta = T::lit(cfg.eta);
    let tol = T::lit(cfg.tolerance);
    let mut d = init.clone();
    let mut objectives = Vec::with_capacity(cfg.max_iterations + 1);
    let mut converged = false;
    let mut iterations = 0;
    let mut guess: Option<CMatrix<f64>> = None;
    for k in 0..cfg.max_iterations {
        let a = sparse_code(&d, x, eta)?;
        if k == 0 {
            objectives.push(training_objective(&d, x, &a, eta));
        }
        if a.data()
            .iter()
            .all(|c| c.re == T::zero() && c.im == T::zero())
        {
            // XAᴴ = 0: nothing to fit, keep the current dictionary.
            converged = true;
            break;
        }
        let (next, right) = procrustes(x, &a, guess.as_ref());
        d = next;
        guess = Some(right);
        iterations = k + 1;
        let f = training_objective(&d, x, &a, eta);
        let prev = *objectives.last().expect("objective recorded");
        objectives.push(f);
        let scale = prev.abs().max(T::min_positive_value());
        if (prev - f).abs() / scale < tol {
            converged = true;
            break;
        }
    }
    Ok(ClassTraining {
        dictionary: d,
        objectives,
        iterations,
        converged,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassStats {
    pub patches: usize,
    pub iterations: usize,
    pub final_objective: f64,
}

/// One dictionary per populated direction class; other classes fall back to
/// the 2D Haar basis.
#[derive(Clone, Debug, PartialEq)]
pub struct DictionaryBank<T: Real> {
    patch_size: usize,
    num_classes: usize,
    eta: f64,
    trained: BTreeMap<usize, OrthoDictionary<T>>,
    stats: BTreeMap<usize, ClassStats>,
    fallback: OrthoDictionary<T>,
}

impl<T: Real> DictionaryBank<T> {
    /// Bank with no trained classes.
    pub fn haar(patch_size: usize, num_classes: usize) -> Result<Self> {
        Ok(Self {
            patch_size,
            num_classes,
            eta: 0.0,
            trained: BTreeMap::new(),
            stats: BTreeMap::new(),
            fallback: haar2d_dictionary(patch_size)?,
        })
    }

    /// Assembles a bank from explicit per-class dictionaries.
    pub fn from_parts(
        patch_size: usize,
        num_classes: usize,
        eta: f64,
        dictionaries: BTreeMap<usize, OrthoDictionary<T>>,
    ) -> Result<Self> {
        let mut bank = Self::haar(patch_size, num_classes)?;
        bank.eta = eta;
        for (&w, d) in &dictionaries {
            if w >= num_classes || d.dim() != patch_size * patch_size {
                return Err(Error::InvalidInput(format!(
                    "dictionary for class {w} does not fit {num_classes} classes of {patch_size}x{patch_size} patches"
                )));
            }
        }
        bank.trained = dictionaries;
        Ok(bank)
    }

    pub fn patch_size(&self) -> usize {
        self.patch_size
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn get(&self, class: usize) -> &OrthoDictionary<T> {
        self.trained.get(&class).unwrap_or(&self.fallback)
    }

    pub fn trained(&self) -> &BTreeMap<usize, OrthoDictionary<T>> {
        &self.trained
    }

    pub fn stats(&self) -> &BTreeMap<usize, ClassStats> {
        &self.stats
    }

    pub fn is_trained(&self, class: usize) -> bool {
        self.trained.contains_key(&class)
    }
}

/// Stacks the listed patches of `image` as columns, scaled by `scale`.
pub fn patch_matrix<T: Real>(
    image: &Image<T>,
    cfg: &PatchConfig,
    indices: &[usize],
    scale: T,
) -> CMatrix<T> {
    let origins = cfg.origins(image.dims());
    let n2 = cfg.patch_len();
    let mut data = vec![czero(); n2 * indices.len()];
    for (col, &j) in indices.iter().enumerate() {
        let dst = &mut data[col * n2..(col + 1) * n2];
        gather_patch(image, origins[j], cfg.size, dst);
        if scale != T::one() {
            for v in dst.iter_mut() {
                *v *= scale;
            }
        }
    }
    CMatrix::from_columns(n2, indices.len(), data)
}

/// Trains one dictionary per populated class of `class_map` from patches of
/// `image` normalized by its peak magnitude.
pub fn train_bank<T: Real>(
    image: &Image<T>,
    class_map: &ClassMap,
    patch: &PatchConfig,
    cfg: &TrainConfig,
) -> Result<DictionaryBank<T>> {
    cfg.validate()?;
    patch.validate(image.dims())?;
    let expected = patch.patch_count(image.dims());
    if class_map.num_patches() != expected {
        return Err(Error::InvalidInput(format!(
            "class map covers {} patches, image has {expected}",
            class_map.num_patches()
        )));
    }
    let mut bank = DictionaryBank::haar(patch.size, class_map.num_classes())?;
    bank.eta = cfg.eta;
    let peak = image.peak();
    if peak == T::zero() {
        return Ok(bank);
    }
    let scale = T::one() / peak;
    let classes: Vec<usize> = class_map.populated().collect();
    let results: Vec<(usize, ClassTraining<T>)> = classes
        .par_iter()
        .map(|&w| {
            let x = patch_matrix(image, patch, class_map.members(w), scale);
            train_class_dictionary(&x, cfg, &bank.fallback).map(|t| (w, t))
        })
        .collect::<Result<_>>()?;
    for (w, t) in results {
        bank.stats.insert(
            w,
            ClassStats {
                patches: class_map.members(w).len(),
                iterations: t.iterations,
                final_objective: t.objectives.last().map_or(0.0, |f| f.as_f64()),
            },
        );
        bank.trained.insert(w, t.dictionary);
    }
    Ok(bank)
}
