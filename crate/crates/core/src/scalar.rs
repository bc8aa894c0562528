//! Scalar abstraction shared by every numerical module.

use std::fmt::{Debug, Display};

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};
use rustfft::FftNum;

/// Real floating-point type the library is generic over (`f32` or `f64`).
pub trait Real:
    Float
    + FloatConst
    + FftNum
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Default
    + Display
    + Debug
    + Send
    + Sync
{
    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(v: f64) -> Self {
        <Self as FromPrimitive>::from_f64(v).expect("f64 literal representable")
    }

    #[inline]
    fn from_usize_lossy(v: usize) -> Self {
        <Self as FromPrimitive>::from_usize(v).expect("usize representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        ToPrimitive::to_f64(&self).expect("finite conversion to f64")
    }

    /// Complex GEMM kernel; use [`crate::linalg::gemm`] instead.
    #[doc(hidden)]
    fn gemm_kernel(spec: &GemmSpec, a: &[Cx<Self>], b: &[Cx<Self>], c: &mut [Cx<Self>]);
}

/// Shapes and strides of `C = op(A)·op(B)`; `C` is overwritten.
#[doc(hidden)]
#[derive(Clone, Copy, Debug)]
pub struct GemmSpec {
    pub m: usize,
    pub k: usize,
    pub n: usize,
    pub a_strides: (usize, usize),
    pub b_strides: (usize, usize),
    pub c_strides: (usize, usize),
}

impl GemmSpec {
    /// Largest index touched in a `rows×cols` operand with `strides`, plus one.
    fn extent(rows: usize, cols: usize, strides: (usize, usize)) -> usize {
        if rows == 0 || cols == 0 {
            0
        } else {
            (rows - 1) * strides.0 + (cols - 1) * strides.1 + 1
        }
    }

    pub(crate) fn check(&self, a: usize, b: usize, c: usize) {
        assert!(
            Self::extent(self.m, self.k, self.a_strides) <= a,
            "gemm: A out of bounds"
        );
        assert!(
            Self::extent(self.k, self.n, self.b_strides) <= b,
            "gemm: B out of bounds"
        );
        assert!(
            Self::extent(self.m, self.n, self.c_strides) <= c,
            "gemm: C out of bounds"
        );
    }
}

macro_rules! impl_real {
    ($t:ty, $gemm:path) => {
        impl Real for $t {
            fn gemm_kernel(spec: &GemmSpec, a: &[Cx<$t>], b: &[Cx<$t>], c: &mut [Cx<$t>]) {
                use matrixmultiply::CGemmOption::Standard;
                spec.check(a.len(), b.len(), c.len());
                let s = |v: usize| v as isize;
                // SAFETY: `check` bounds every index the kernel touches, and
                // `Complex<T>` is `repr(C)` with the same layout as `[T; 2]`.
                unsafe {
                    $gemm(
                        Standard,
                        Standard,
                        spec.m,
                        spec.k,
                        spec.n,
                        [1.0, 0.0],
                        a.as_ptr().cast(),
                        s(spec.a_strides.0),
                        s(spec.a_strides.1),
                        b.as_ptr().cast(),
                        s(spec.b_strides.0),
                        s(spec.b_strides.1),
                        [0.0, 0.0],
                        c.as_mut_ptr().cast(),
                        s(spec.c_strides.0),
                        s(spec.c_strides.1),
                    );
                }
            }
        }
    };
}

impl_real!(f32, matrixmultiply::cgemm);
impl_real!(f64, matrixmultiply::zgemm);

/// Complex sample type over a [`Real`].
pub type Cx<T> = Complex<T>;

#[cfg(test)]
#[inline]
pub(crate) fn cx<T: Real>(re: T, im: T) -> Cx<T> {
    Complex::new(re, im)
}

#[inline]
pub(crate) fn czero<T: Real>() -> Cx<T> {
    Complex::new(T::zero(), T::zero())
}

/// Squared l2 norm of a complex slice.
pub fn norm_sqr<T: Real>(v: &[Cx<T>]) -> T {
    v.iter().fold(T::zero(), |acc, c| acc + c.norm_sqr())
}

pub fn norm<T: Real>(v: &[Cx<T>]) -> T {
    norm_sqr(v).sqrt()
}

/// `⟨a, b⟩ = Σ conj(a_i) b_i`.
pub fn inner<T: Real>(a: &[Cx<T>], b: &[Cx<T>]) -> Cx<T> {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .fold(czero(), |acc, (x, y)| acc + x.conj() * y)
}

/// l2 norm of `a - b`.
pub fn distance<T: Real>(a: &[Cx<T>], b: &[Cx<T>]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .fold(T::zero(), |acc, (x, y)| acc + (x - y).norm_sqr())
        .sqrt()
}
