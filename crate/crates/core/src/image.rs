//! Complex image container and the overlapping-patch algebra.
//!
//! Patches are `n×n` blocks read with periodic wrap at the image borders and
//! vectorized row-major. With stride 1 every pixel is covered by exactly `n²`
//! patches, so `assemble_adjoint(extract_patches(x)) = n²·x`.

use rayon::prelude::*;

use crate::error::{dims_mismatch, Error, Result};
use crate::scalar::{czero, Cx, Real};

#[derive(Clone, Debug, PartialEq)]
pub struct Image<T: Real> {
    rows: usize,
    cols: usize,
    data: Vec<Cx<T>>,
}

impl<T: Real> Image<T> {
    /// Builds an image from row-major samples. Rejects non-finite samples.
    pub fn new(rows: usize, cols: usize, data: Vec<Cx<T>>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidInput(format!(
                "image dimensions must be positive, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::InvalidInput(format!(
                "expected {} samples for a {rows}x{cols} image, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(i) = data
            .iter()
            .position(|c| !c.re.is_finite() || !c.im.is_finite())
        {
            return Err(Error::InvalidInput(format!(
                "non-finite sample at index {i}"
            )));
        }
        Ok(Self { rows, cols, data })
    }

    /// Skips the finiteness scan; used by operators whose output is finite by construction.
    pub(crate) fn from_raw(rows: usize, cols: usize, data: Vec<Cx<T>>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_raw(rows, cols, vec![czero(); rows * cols])
    }

    pub fn from_real(rows: usize, cols: usize, values: &[T]) -> Result<Self> {
        Self::new(
            rows,
            cols,
            values.iter().map(|&v| Cx::new(v, T::zero())).collect(),
        )
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[Cx<T>] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Cx<T>] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<Cx<T>> {
        self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Cx<T> {
        self.data[row * self.cols + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, v: Cx<T>) {
        self.data[row * self.cols + col] = v;
    }

    pub fn norm(&self) -> T {
        crate::scalar::norm(&self.data)
    }

    /// Largest sample magnitude.
    pub fn peak(&self) -> T {
        self.data.iter().fold(T::zero(), |m, c| m.max(c.norm()))
    }

    pub fn magnitudes(&self) -> Vec<T> {
        self.data.iter().map(|c| c.norm()).collect()
    }

    pub fn scaled(&self, s: T) -> Self {
        Self::from_raw(
            self.rows,
            self.cols,
            self.data.iter().map(|c| c * s).collect(),
        )
    }

    pub fn check_dims(&self, dims: (usize, usize)) -> Result<()> {
        if self.dims() != dims {
            return Err(dims_mismatch(dims, self.dims()));
        }
        Ok(())
    }
}

/// Patch geometry. The boundary is always periodic.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PatchConfig {
    pub size: usize,
    pub stride: usize,
}

impl Default for PatchConfig {
    fn default() -> Self {
        Self { size: 8, stride: 1 }
    }
}

impl PatchConfig {
    pub fn new(size: usize, stride: usize) -> Self {
        Self { size, stride }
    }

    pub fn validate(&self, dims: (usize, usize)) -> Result<()> {
        if self.size == 0 || self.stride == 0 {
            return Err(Error::InvalidConfig(
                "patch size and stride must be positive".into(),
            ));
        }
        if self.size > dims.0.min(dims.1) {
            return Err(Error::InvalidConfig(format!(
                "patch size {} exceeds image side {}",
                self.size,
                dims.0.min(dims.1)
            )));
        }
        Ok(())
    }

    /// Samples per patch, `n²`.
    pub fn patch_len(&self) -> usize {
        self.size * self.size
    }

    /// Number of patches `J` over an image of the given dimensions.
    pub fn patch_count(&self, dims: (usize, usize)) -> usize {
        dims.0.div_ceil(self.stride) * dims.1.div_ceil(self.stride)
    }

    /// Top-left pixel of every patch, row-major.
    pub fn origins(&self, dims: (usize, usize)) -> Vec<(usize, usize)> {
        (0..dims.0)
            .step_by(self.stride)
            .flat_map(|r| (0..dims.1).step_by(self.stride).map(move |c| (r, c)))
            .collect()
    }

    /// Overlap factor `c`: how many patches cover each pixel. Only uniform when
    /// the stride divides the patch size and both image sides.
    pub fn overlap_factor(&self, dims: (usize, usize)) -> Option<usize> {
        let s = self.stride;
        if self.size.is_multiple_of(s) && dims.0.is_multiple_of(s) && dims.1.is_multiple_of(s) {
            let k = self.size / s;
            Some(k * k)
        } else {
            None
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Patch<T: Real> {
    pub values: Vec<Cx<T>>,
    pub origin: (usize, usize),
}

/// Copies the `n×n` block at `origin` (with wrap) into `out`, row-major.
#[inline]
pub(crate) fn gather_patch<T: Real>(
    image: &Image<T>,
    origin: (usize, usize),
    n: usize,
    out: &mut [Cx<T>],
) {
    let (rows, cols) = image.dims();
    let data = image.data();
    for i in 0..n {
        let r = (origin.0 + i) % rows;
        let row = &data[r * cols..(r + 1) * cols];
        let dst = &mut out[i * n..(i + 1) * n];
        if origin.1 + n <= cols {
            dst.copy_from_slice(&row[origin.1..origin.1 + n]);
        } else {
            for (j, d) in dst.iter_mut().enumerate() {
                *d = row[(origin.1 + j) % cols];
            }
        }
    }
}

/// Adds the `n×n` block `values` back at `origin` (with wrap).
#[inline]
pub(crate) fn scatter_add_patch<T: Real>(
    data: &mut [Cx<T>],
    dims: (usize, usize),
    origin: (usize, usize),
    n: usize,
    values: &[Cx<T>],
) {
    let (rows, cols) = dims;
    for i in 0..n {
        let r = (origin.0 + i) % rows;
        let row = &mut data[r * cols..(r + 1) * cols];
        let src = &values[i * n..(i + 1) * n];
        if origin.1 + n <= cols {
            for (d, s) in row[origin.1..origin.1 + n].iter_mut().zip(src) {
                *d += s;
            }
        } else {
            for (j, s) in src.iter().enumerate() {
                row[(origin.1 + j) % cols] += s;
            }
        }
    }
}

/// Extracts every patch `R_j x` in row-major origin order.
pub fn extract_patches<T: Real>(image: &Image<T>, cfg: &PatchConfig) -> Result<Vec<Patch<T>>> {
    cfg.validate(image.dims())?;
    let n = cfg.size;
    Ok(cfg
        .origins(image.dims())
        .into_par_iter()
        .map(|origin| {
            let mut values = vec![czero(); n * n];
            gather_patch(image, origin, n, &mut values);
            Patch { values, origin }
        })
        .collect())
}

/// `Σ_j R_jᵀ p_j`: adds every patch back at its wrapped location.
pub fn assemble_adjoint<T: Real>(
    patches: &[Patch<T>],
    dims: (usize, usize),
    cfg: &PatchConfig,
) -> Result<Image<T>> {
    cfg.validate(dims)?;
    let expected = cfg.patch_count(dims);
    if patches.len() != expected {
        return Err(Error::InvalidInput(format!(
            "expected {expected} patches, got {}",
            patches.len()
        )));
    }
    let n = cfg.size;
    let mut data = vec![czero(); dims.0 * dims.1];
    for (p, origin) in patches.iter().zip(cfg.origins(dims)) {
        if p.origin != origin || p.values.len() != n * n {
            return Err(Error::InvalidInput(format!(
                "patch at {:?} with {} values does not match expected origin {:?}",
                p.origin,
                p.values.len(),
                origin
            )));
        }
        scatter_add_patch(&mut data, dims, origin, n, &p.values);
    }
    Ok(Image::from_raw(dims.0, dims.1, data))
}
