//! Full-depth orthonormal 1D Haar transform.

use crate::scalar::{czero, Cx, Real};

pub fn is_power_of_two(n: usize) -> bool {
    n != 0 && n & (n - 1) == 0
}

/// In-place forward transform of a power-of-two length signal.
///
/// Output layout: `[approximation, coarsest detail, ..., finest details]`.
pub fn haar_forward<T: Real>(v: &mut [Cx<T>], scratch: &mut Vec<Cx<T>>) {
    debug_assert!(is_power_of_two(v.len()));
    let s = T::FRAC_1_SQRT_2();
    scratch.resize(v.len(), czero());
    let mut len = v.len();
    while len > 1 {
        let half = len / 2;
        for i in 0..half {
            let a = v[2 * i];
            let b = v[2 * i + 1];
            scratch[i] = (a + b) * s;
            scratch[half + i] = (a - b) * s;
        }
        v[..len].copy_from_slice(&scratch[..len]);
        len = half;
    }
}

/// Analysis matrix `W` with `c = W v`; row `k` is the `k`-th basis function.
pub fn haar_matrix<T: Real>(len: usize) -> Vec<Vec<T>> {
    let mut w = vec![vec![T::zero(); len]; len];
    let mut scratch = Vec::new();
    for i in 0..len {
        let mut e = vec![czero::<T>(); len];
        e[i] = Cx::new(T::one(), T::zero());
        haar_forward(&mut e, &mut scratch);
        for (k, c) in e.iter().enumerate() {
            w[k][i] = c.re;
        }
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::cx;

    #[test]
    fn length_two() {
        let mut v = vec![cx(1.0f64, 0.0), cx(3.0, 0.0)];
        haar_forward(&mut v, &mut Vec::new());
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((v[0].re - 4.0 * s).abs() < 1e-15);
        assert!((v[1].re + 2.0 * s).abs() < 1e-15);
    }

    #[test]
    fn matrix_is_orthonormal() {
        let w = haar_matrix::<f64>(16);
        for a in 0..16 {
            for b in 0..16 {
                let dot: f64 = (0..16).map(|i| w[a][i] * w[b][i]).sum();
                let expect = if a == b { 1.0 } else { 0.0 };
                assert!((dot - expect).abs() < 1e-14);
            }
        }
        assert!(w[0].iter().all(|&x| (x - 0.25).abs() < 1e-15));
    }

    #[test]
    fn piecewise_constant_is_sparse() {
        let mut v: Vec<_> = (0..8)
            .map(|i| cx(if i < 4 { 1.0f64 } else { 2.0 }, 0.0))
            .collect();
        haar_forward(&mut v, &mut Vec::new());
        let nz = v.iter().filter(|c| c.norm() > 1e-12).count();
        assert_eq!(nz, 2);
    }
}
