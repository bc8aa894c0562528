#![allow(dead_code)]

use fdlcp::linalg::CMatrix;
use fdlcp::{Image64, OrthoDictionary, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut impl Rng) -> f64 {
    // Box-Muller
    let u: f64 = rng.random_range(f64::EPSILON..1.0);
    let v: f64 = rng.random();
    (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos()
}

pub fn cgauss(rng: &mut impl Rng) -> C64 {
    C64::new(gaussian(rng), gaussian(rng))
}

pub fn random_vec(rng: &mut impl Rng, len: usize) -> Vec<C64> {
    (0..len).map(|_| cgauss(rng)).collect()
}

pub fn random_image(rng: &mut impl Rng, rows: usize, cols: usize) -> Image64 {
    Image64::new(rows, cols, random_vec(rng, rows * cols)).unwrap()
}

pub fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> CMatrix<f64> {
    CMatrix::from_fn(rows, cols, |_, _| cgauss(rng))
}

/// Random unitary matrix by modified Gram-Schmidt on Gaussian columns.
pub fn random_unitary(rng: &mut impl Rng, n: usize) -> CMatrix<f64> {
    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(n);
    while cols.len() < n {
        let mut v = random_vec(rng, n);
        for q in &cols {
            let p: C64 = q.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
            for (vi, qi) in v.iter_mut().zip(q) {
                *vi -= p * qi;
            }
        }
        let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-6 {
            cols.push(v.into_iter().map(|c| c / norm).collect());
        }
    }
    CMatrix::from_columns(n, n, cols.concat())
}

pub fn random_dictionary(rng: &mut impl Rng, n: usize) -> OrthoDictionary<f64> {
    OrthoDictionary::new(random_unitary(rng, n)).unwrap()
}

/// Solves the dense system `a·x = b` (row-major `a`) by partial-pivot elimination.
pub fn dense_solve(mut a: Vec<Vec<C64>>, mut b: Vec<C64>) -> Vec<C64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].norm().total_cmp(&a[j][col].norm()))
            .unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        let p = a[col][col];
        for row in col + 1..n {
            let f = a[row][col] / p;
            if f == C64::new(0.0, 0.0) {
                continue;
            }
            let (upper, lower) = a.split_at_mut(row);
            for (t, &v) in lower[0][col..].iter_mut().zip(&upper[col][col..]) {
                *t -= f * v;
            }
            let v = b[col];
            b[row] -= f * v;
        }
    }
    let mut x = vec![C64::new(0.0, 0.0); n];
    for row in (0..n).rev() {
        let mut s = b[row];
        for k in row + 1..n {
            s -= a[row][k] * x[k];
        }
        x[row] = s / a[row][row];
    }
    x
}

pub fn dist(a: &[C64], b: &[C64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(p, q)| (p - q).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

pub fn norm(a: &[C64]) -> f64 {
    a.iter().map(|p| p.norm_sqr()).sum::<f64>().sqrt()
}

pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(p, q)| p.conj() * q).sum()
}

/// Orthonormal 1D Haar matrix of size `len` (power of two), rows are basis
/// functions, built from the recursive scaling/wavelet split.
pub fn haar_rows(len: usize) -> Vec<Vec<f64>> {
    if len == 1 {
        return vec![vec![1.0]];
    }
    let half = haar_rows(len / 2);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut rows = Vec::with_capacity(len);
    for h in &half {
        rows.push(h.iter().flat_map(|&v| [v * s, v * s]).collect());
    }
    for k in 0..len / 2 {
        let mut r = vec![0.0; len];
        r[2 * k] = s;
        r[2 * k + 1] = -s;
        rows.push(r);
    }
    rows
}
