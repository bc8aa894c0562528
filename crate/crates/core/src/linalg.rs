//! Small dense complex matrices and a one-sided Jacobi SVD.

use crate::scalar::{czero, Cx, GemmSpec, Real};

/// `C = op(A)·op(B)` on strided complex data; `C` is overwritten.
pub(crate) fn gemm<T: Real>(spec: &GemmSpec, a: &[Cx<T>], b: &[Cx<T>], c: &mut [Cx<T>]) {
    if spec.m == 0 || spec.n == 0 {
        return;
    }
    if spec.k == 0 {
        spec.check(a.len(), b.len(), c.len());
        for i in 0..spec.m {
            for j in 0..spec.n {
                c[i * spec.c_strides.0 + j * spec.c_strides.1] = czero();
            }
        }
        return;
    }
    T::gemm_kernel(spec, a, b, c);
}

/// Column-major dense complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix<T: Real> {
    rows: usize,
    cols: usize,
    data: Vec<Cx<T>>,
}

impl<T: Real> CMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![czero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Cx::new(T::one(), T::zero());
        }
        m
    }

    /// Column-major data.
    pub fn from_columns(rows: usize, cols: usize, data: Vec<Cx<T>>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length");
        Self { rows, cols, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Cx<T>) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for c in 0..cols {
            for r in 0..rows {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[Cx<T>] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Cx<T>] {
        &mut self.data
    }

    pub fn column(&self, c: usize) -> &[Cx<T>] {
        &self.data[c * self.rows..(c + 1) * self.rows]
    }

    pub fn column_mut(&mut self, c: usize) -> &mut [Cx<T>] {
        &mut self.data[c * self.rows..(c + 1) * self.rows]
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    /// `self · other`.
    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "inner dimensions");
        let mut out = Self::zeros(self.rows, other.cols);
        gemm(
            &GemmSpec {
                m: self.rows,
                k: self.cols,
                n: other.cols,
                a_strides: (1, self.rows),
                b_strides: (1, other.rows),
                c_strides: (1, self.rows),
            },
            &self.data,
            &other.data,
            &mut out.data,
        );
        out
    }

    /// `selfᴴ · other`.
    pub fn adjoint_mul(&self, other: &Self) -> Self {
        assert_eq!(self.rows, other.rows, "row dimensions");
        let mut out = Self::zeros(self.cols, other.cols);
        let conj: Vec<Cx<T>> = self.data.iter().map(|c| c.conj()).collect();
        gemm(
            &GemmSpec {
                m: self.cols,
                k: self.rows,
                n: other.cols,
                a_strides: (self.rows, 1),
                b_strides: (1, other.rows),
                c_strides: (1, self.cols),
            },
            &conj,
            &other.data,
            &mut out.data,
        );
        out
    }

    /// `self · otherᴴ`.
    pub fn mul_adjoint(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.cols, "column dimensions");
        let mut out = Self::zeros(self.rows, other.rows);
        let conj: Vec<Cx<T>> = other.data.iter().map(|c| c.conj()).collect();
        gemm(
            &GemmSpec {
                m: self.rows,
                k: self.cols,
                n: other.rows,
                a_strides: (1, self.rows),
                b_strides: (other.rows, 1),
                c_strides: (1, self.rows),
            },
            &self.data,
            &conj,
            &mut out.data,
        );
        out
    }

    pub fn frobenius_sqr(&self) -> T {
        crate::scalar::norm_sqr(&self.data)
    }

    pub fn frobenius(&self) -> T {
        self.frobenius_sqr().sqrt()
    }

    /// `‖selfᴴ self − I‖_F`.
    pub fn orthogonality_error(&self) -> T {
        let g = self.adjoint_mul(self);
        let mut acc = T::zero();
        for c in 0..g.cols {
            for r in 0..g.rows {
                let target = if r == c { T::one() } else { T::zero() };
                acc += (g[(r, c)] - Cx::new(target, T::zero())).norm_sqr();
            }
        }
        acc.sqrt()
    }

    pub fn is_real(&self) -> bool {
        self.data.iter().all(|c| c.im == T::zero())
    }
}

impl<T: Real> std::ops::Index<(usize, usize)> for CMatrix<T> {
    type Output = Cx<T>;

    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &Cx<T> {
        &self.data[c * self.rows + r]
    }
}

impl<T: Real> std::ops::IndexMut<(usize, usize)> for CMatrix<T> {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Cx<T> {
        &mut self.data[c * self.rows + r]
    }
}

/// `M = P Λ Vᴴ` for a square matrix, with `P` and `V` unitary.
#[derive(Clone, Debug)]
pub struct Svd<T: Real> {
    pub left: CMatrix<T>,
    pub singular: Vec<T>,
    pub right: CMatrix<T>,
}

const MAX_SWEEPS: usize = 60;

/// One-sided (Hestenes) Jacobi SVD of a square matrix.
///
/// Singular values are returned in descending order (stable on ties). Left
/// vectors for numerically zero singular values are completed by Gram–Schmidt
/// over the standard basis in ascending index order. Each left vector is
/// phase-normalized so its largest-magnitude entry is real positive, with the
/// matching right vector rotated by the same phase.
pub fn svd<T: Real>(m: &CMatrix<T>) -> Svd<T> {
    assert_eq!(m.rows, m.cols, "square matrix required");
    jacobi(m.clone(), CMatrix::identity(m.rows))
}

/// [`svd`] started from the unitary `guess` for the right vectors, e.g. the
/// right vectors of a nearby matrix. Fewer sweeps are needed when the guess
/// is close; the conventions of [`svd`] still apply.
pub fn svd_with_guess<T: Real>(m: &CMatrix<T>, guess: &CMatrix<T>) -> Svd<T> {
    assert_eq!(m.rows, m.cols, "square matrix required");
    assert_eq!((guess.rows, guess.cols), (m.rows, m.cols), "guess shape");
    jacobi(m.mul(guess), guess.clone())
}

fn jacobi<T: Real>(mut a: CMatrix<T>, mut v: CMatrix<T>) -> Svd<T> {
    let n = a.rows;
    let eps = T::epsilon();
    // Columns below this energy are numerically null; rotating them only
    // amplifies rounding (their inner products can be subnormal).
    let floor = a.frobenius_sqr() * eps * eps;

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (alpha, beta, gamma) = {
                    let ap = a.column(p);
                    let aq = a.column(q);
                    let mut al = T::zero();
                    let mut be = T::zero();
                    let mut ga = czero::<T>();
                    for (x, y) in ap.iter().zip(aq) {
                        al += x.norm_sqr();
                        be += y.norm_sqr();
                        ga += x.conj() * y;
                    }
                    (al, be, ga)
                };
                let g = gamma.norm();
                if alpha <= floor || beta <= floor || g <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                // Make ⟨a_p, a_q⟩ real positive, then apply a real rotation.
                let phase = (gamma / g).conj();
                let zeta = (beta - alpha) / (g + g);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                rotate(&mut a, p, q, phase, c, s);
                rotate(&mut v, p, q, phase, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let sigma: Vec<T> = (0..n).map(|k| crate::scalar::norm(a.column(k))).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| sigma[j].partial_cmp(&sigma[i]).unwrap().then(i.cmp(&j)));

    let sigma_max = order.first().map(|&i| sigma[i]).unwrap_or(T::zero());
    let tol = sigma_max * eps * T::from_usize_lossy(n.max(1));

    let mut left = CMatrix::zeros(n, n);
    let mut right = CMatrix::zeros(n, n);
    let mut null_cols = Vec::new();
    let mut sorted_sigma = Vec::with_capacity(n);
    for (dst, &src) in order.iter().enumerate() {
        right.column_mut(dst).copy_from_slice(v.column(src));
        let s = sigma[src];
        if s > tol && s > T::zero() {
            let inv = T::one() / s;
            for (d, x) in left.column_mut(dst).iter_mut().zip(a.column(src)) {
                *d = x * inv;
            }
            sorted_sigma.push(s);
        } else {
            null_cols.push(dst);
            sorted_sigma.push(T::zero());
        }
    }
    complete_basis(&mut left, &null_cols);

    for k in 0..n {
        let col = left.column(k);
        let mut best = 0;
        for (i, x) in col.iter().enumerate() {
            if x.norm_sqr() > col[best].norm_sqr() {
                best = i;
            }
        }
        let pivot = col[best];
        let mag = pivot.norm();
        if mag > T::zero() {
            let phase = pivot.conj() / mag;
            for x in left.column_mut(k) {
                *x *= phase;
            }
            for x in right.column_mut(k) {
                *x *= phase;
            }
        }
    }

    Svd {
        left,
        singular: sorted_sigma,
        right,
    }
}

fn rotate<T: Real>(m: &mut CMatrix<T>, p: usize, q: usize, phase: Cx<T>, c: T, s: T) {
    let rows = m.rows;
    let (lo, hi) = m.data.split_at_mut(q * rows);
    let cp = &mut lo[p * rows..(p + 1) * rows];
    let cq = &mut hi[..rows];
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let yp = *y * phase;
        let nx = *x * c - yp * s;
        let ny = *x * s + yp * c;
        *x = nx;
        *y = ny;
    }
}

/// Fills the listed columns with an orthonormal completion of the others.
fn complete_basis<T: Real>(m: &mut CMatrix<T>, missing: &[usize]) {
    if missing.is_empty() {
        return;
    }
    let n = m.rows;
    let mut basis: Vec<usize> = (0..m.cols).filter(|c| !missing.contains(c)).collect();
    let mut candidate = 0;
    for &target in missing {
        loop {
            assert!(
                candidate < n,
                "basis completion exhausted the standard basis"
            );
            let mut e = vec![czero::<T>(); n];
            e[candidate] = Cx::new(T::one(), T::zero());
            candidate += 1;
            // two passes of modified Gram–Schmidt
            for _ in 0..2 {
                for &b in &basis {
                    let col = m.column(b);
                    let proj = crate::scalar::inner(col, &e);
                    for (x, c) in e.iter_mut().zip(col) {
                        *x -= c * proj;
                    }
                }
            }
            let nrm = crate::scalar::norm(&e);
            if nrm > T::lit(1e-6) {
                let inv = T::one() / nrm;
                for (d, x) in m.column_mut(target).iter_mut().zip(&e) {
                    *d = x * inv;
                }
                basis.push(target);
                break;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::cx;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(n: usize, seed: u64) -> CMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        CMatrix::from_fn(n, n, |_, _| {
            cx(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        })
    }

    fn reconstruct(s: &Svd<f64>) -> CMatrix<f64> {
        let n = s.singular.len();
        let scaled = CMatrix::from_fn(n, n, |r, c| s.left[(r, c)] * s.singular[c]);
        scaled.mul_adjoint(&s.right)
    }

    #[test]
    fn reconstructs_random_complex() {
        for seed in 0..5 {
            let m = random(12, seed);
            let s = svd(&m);
            assert!(s.left.orthogonality_error() < 1e-12);
            assert!(s.right.orthogonality_error() < 1e-12);
            let diff: f64 = reconstruct(&s)
                .data()
                .iter()
                .zip(m.data())
                .map(|(a, b)| (a - b).norm_sqr())
                .sum();
            assert!(diff.sqrt() < 1e-12 * m.frobenius());
            assert!(s.singular.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn warm_start_matches_cold_start() {
        let m = random(16, 3);
        let mut near = m.clone();
        for x in near.data_mut() {
            *x *= 1.01;
        }
        near[(2, 5)] += cx(0.01, -0.02);
        let guess = svd(&near).right;
        let cold = svd(&m);
        let warm = svd_with_guess(&m, &guess);
        for (a, b) in cold.singular.iter().zip(&warm.singular) {
            assert!((a - b).abs() < 1e-12);
        }
        let polar = |s: &Svd<f64>| s.left.mul_adjoint(&s.right);
        let (p, q) = (polar(&cold), polar(&warm));
        let diff: f64 = p
            .data()
            .iter()
            .zip(q.data())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        assert!(diff.sqrt() < 1e-10);
    }

    #[test]
    fn subnormal_columns_keep_vectors_unitary() {
        let mut m = random(8, 21);
        for (c, scale) in [(5, 1e-160), (6, 1e-155), (7, 1e-170)] {
            for x in m.column_mut(c) {
                *x *= scale;
            }
        }
        let s = svd(&m);
        assert!(s.right.orthogonality_error() < 1e-12);
        assert!(s.left.orthogonality_error() < 1e-12);
    }

    #[test]
    fn rank_deficient_is_completed() {
        let mut m = random(6, 9);
        for c in [1, 4] {
            for x in m.column_mut(c) {
                *x = cx(0.0, 0.0);
            }
        }
        let s = svd(&m);
        assert!(s.left.orthogonality_error() < 1e-12);
        assert_eq!(s.singular.iter().filter(|&&x| x == 0.0).count(), 2);
        let zero = CMatrix::<f64>::zeros(4, 4);
        let s0 = svd(&zero);
        assert!(s0.left.orthogonality_error() < 1e-14);
        assert_eq!(s0.left, CMatrix::identity(4));
    }

    #[test]
    fn left_vectors_phase_normalized() {
        let s = svd(&random(8, 3));
        for k in 0..8 {
            let col = s.left.column(k);
            let big = col
                .iter()
                .copied()
                .max_by(|a, b| a.norm_sqr().partial_cmp(&b.norm_sqr()).unwrap())
                .unwrap();
            assert!(big.im.abs() < 1e-14 && big.re > 0.0);
        }
    }

    #[test]
    fn products_agree() {
        let a = random(5, 1);
        let b = random(5, 2);
        let ab = a.mul(&b);
        let ahb = a.adjoint_mul(&b);
        let abh = a.mul_adjoint(&b);
        for r in 0..5 {
            for c in 0..5 {
                let mut e1 = cx(0.0, 0.0);
                let mut e2 = cx(0.0, 0.0);
                let mut e3 = cx(0.0, 0.0);
                for k in 0..5 {
                    e1 += a[(r, k)] * b[(k, c)];
                    e2 += a[(k, r)].conj() * b[(k, c)];
                    e3 += a[(r, k)] * b[(c, k)].conj();
                }
                assert!((ab[(r, c)] - e1).norm() < 1e-14);
                assert!((ahb[(r, c)] - e2).norm() < 1e-14);
                assert!((abh[(r, c)] - e3).norm() < 1e-14);
            }
        }
    }
}
