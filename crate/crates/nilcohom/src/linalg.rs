//! Exact linear algebra over Q(i): ranks, kernels, solves, projectors.
//!
//! Plain fraction-full Gauss-Jordan elimination. Matrices here are small
//! (dimensions bounded by the number of invariant monomials), so clarity
//! beats asymptotics.

use crate::scalar::GaussRational;

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct QiMatrix {
    pub rows: usize,
    pub cols: usize,
    a: Vec<GaussRational>,
}

impl QiMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        QiMatrix {
            rows,
            cols,
            a: vec![GaussRational::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = QiMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = GaussRational::one();
        }
        m
    }

    pub fn from_columns(rows: usize, cols: &[Vec<GaussRational>]) -> Self {
        let mut m = QiMatrix::zeros(rows, cols.len());
        for (j, col) in cols.iter().enumerate() {
            assert_eq!(col.len(), rows);
            for i in 0..rows {
                m[(i, j)] = col[i].clone();
            }
        }
        m
    }

    pub fn column(&self, j: usize) -> Vec<GaussRational> {
        (0..self.rows).map(|i| self[(i, j)].clone()).collect()
    }

    pub fn columns(&self) -> Vec<Vec<GaussRational>> {
        (0..self.cols).map(|j| self.column(j)).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.a.iter().all(|x| x.is_zero())
    }

    pub fn mul(&self, rhs: &QiMatrix) -> QiMatrix {
        assert_eq!(self.cols, rhs.rows, "matrix shape mismatch");
        let mut out = QiMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                if self[(i, k)].is_zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    if rhs[(k, j)].is_zero() {
                        continue;
                    }
                    let p = &self[(i, k)] * &rhs[(k, j)];
                    out[(i, j)] += &p;
                }
            }
        }
        out
    }

    pub fn add(&self, rhs: &QiMatrix) -> QiMatrix {
        assert!(self.rows == rhs.rows && self.cols == rhs.cols);
        let mut out = self.clone();
        for i in 0..self.a.len() {
            out.a[i] += &rhs.a[i];
        }
        out
    }

    pub fn sub(&self, rhs: &QiMatrix) -> QiMatrix {
        assert!(self.rows == rhs.rows && self.cols == rhs.cols);
        let mut out = self.clone();
        for i in 0..self.a.len() {
            out.a[i] -= &rhs.a[i];
        }
        out
    }

    pub fn neg(&self) -> QiMatrix {
        let mut out = self.clone();
        for x in &mut out.a {
            *x = -x.clone();
        }
        out
    }

    /// Conjugate transpose; the adjoint in the orthonormal-basis metric.
    pub fn conj_transpose(&self) -> QiMatrix {
        let mut out = QiMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn apply(&self, v: &[GaussRational]) -> Vec<GaussRational> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|i| {
                let mut acc = GaussRational::zero();
                for j in 0..self.cols {
                    if !self[(i, j)].is_zero() && !v[j].is_zero() {
                        acc += &(&self[(i, j)] * &v[j]);
                    }
                }
                acc
            })
            .collect()
    }

    /// Reduced row echelon form; returns pivot column indices.
    pub fn rref(&mut self) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..self.cols {
            if r == self.rows {
                break;
            }
            let Some(pr) = (r..self.rows).find(|&i| !self[(i, c)].is_zero()) else {
                continue;
            };
            self.swap_rows(r, pr);
            let inv = self[(r, c)].inv();
            for j in c..self.cols {
                let v = &self[(r, j)] * &inv;
                self[(r, j)] = v;
            }
            for i in 0..self.rows {
                if i != r && !self[(i, c)].is_zero() {
                    let f = self[(i, c)].clone();
                    for j in c..self.cols {
                        let v = &self[(r, j)] * &f;
                        self[(i, j)] -= &v;
                    }
                }
            }
            pivots.push(c);
            r += 1;
        }
        pivots
    }

    fn swap_rows(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        for c in 0..self.cols {
            self.a.swap(i * self.cols + c, j * self.cols + c);
        }
    }

    pub fn rank(&self) -> usize {
        let mut m = self.clone();
        m.rref().len()
    }

    /// Basis of the null space, one vector per free column.
    pub fn kernel_basis(&self) -> Vec<Vec<GaussRational>> {
        let mut m = self.clone();
        let pivots = m.rref();
        let pivot_set: std::collections::BTreeSet<usize> = pivots.iter().copied().collect();
        let mut basis = Vec::new();
        for free in 0..self.cols {
            if pivot_set.contains(&free) {
                continue;
            }
            let mut v = vec![GaussRational::zero(); self.cols];
            v[free] = GaussRational::one();
            for (r, &pc) in pivots.iter().enumerate() {
                v[pc] = -m[(r, free)].clone();
            }
            basis.push(v);
        }
        basis
    }

    /// One solution of `self * x = b`, if consistent.
    pub fn solve(&self, b: &[GaussRational]) -> Option<Vec<GaussRational>> {
        assert_eq!(b.len(), self.rows);
        let mut aug = QiMatrix::zeros(self.rows, self.cols + 1);
        for i in 0..self.rows {
            for j in 0..self.cols {
                aug[(i, j)] = self[(i, j)].clone();
            }
            aug[(i, self.cols)] = b[i].clone();
        }
        let pivots = aug.rref();
        if pivots.contains(&self.cols) {
            return None;
        }
        let mut x = vec![GaussRational::zero(); self.cols];
        for (r, &pc) in pivots.iter().enumerate() {
            x[pc] = aug[(r, self.cols)].clone();
        }
        Some(x)
    }

    /// Inverse of a square invertible matrix.
    pub fn inverse(&self) -> QiMatrix {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut aug = QiMatrix::zeros(n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                aug[(i, j)] = self[(i, j)].clone();
            }
            aug[(i, n + i)] = GaussRational::one();
        }
        let pivots = aug.rref();
        assert_eq!(pivots.len(), n, "matrix not invertible");
        let mut out = QiMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] = aug[(i, n + j)].clone();
            }
        }
        out
    }
}

impl std::ops::Index<(usize, usize)> for QiMatrix {
    type Output = GaussRational;
    fn index(&self, (i, j): (usize, usize)) -> &GaussRational {
        &self.a[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for QiMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut GaussRational {
        &mut self.a[i * self.cols + j]
    }
}

/// Hermitian inner product `<x, y> = sum x_i * conj(y_i)`.
pub fn inner(x: &[GaussRational], y: &[GaussRational]) -> GaussRational {
    assert_eq!(x.len(), y.len());
    let mut acc = GaussRational::zero();
    for (a, b) in x.iter().zip(y) {
        acc += &(a * &b.conj());
    }
    acc
}

pub fn norm_sq(x: &[GaussRational]) -> num_rational::BigRational {
    let v = inner(x, x);
    debug_assert!(v.is_real());
    v.re
}

/// Span utilities used for quotient-space computations.
pub struct Subspace {
    pub dim_ambient: usize,
    /// Independent spanning columns.
    pub basis: Vec<Vec<GaussRational>>,
}

impl Subspace {
    pub fn from_vectors(dim_ambient: usize, vecs: &[Vec<GaussRational>]) -> Self {
        // keep an independent subset, in order
        let mut kept: Vec<Vec<GaussRational>> = Vec::new();
        for v in vecs {
            assert_eq!(v.len(), dim_ambient);
            let mut cand = kept.clone();
            cand.push(v.clone());
            let m = QiMatrix::from_columns(dim_ambient, &cand);
            if m.rank() == cand.len() {
                kept.push(v.clone());
            }
        }
        Subspace {
            dim_ambient,
            basis: kept,
        }
    }

    pub fn full(dim_ambient: usize) -> Self {
        Subspace::from_vectors(dim_ambient, &QiMatrix::identity(dim_ambient).columns())
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn matrix(&self) -> QiMatrix {
        QiMatrix::from_columns(self.dim_ambient, &self.basis)
    }

    pub fn contains(&self, v: &[GaussRational]) -> bool {
        if v.iter().all(|x| x.is_zero()) {
            return true;
        }
        self.matrix().solve(v).is_some()
    }

    pub fn contains_all(&self, other: &Subspace) -> bool {
        other.basis.iter().all(|v| self.contains(v))
    }

    pub fn sum(&self, other: &Subspace) -> Subspace {
        assert_eq!(self.dim_ambient, other.dim_ambient);
        let mut vecs = self.basis.clone();
        vecs.extend(other.basis.iter().cloned());
        Subspace::from_vectors(self.dim_ambient, &vecs)
    }

    /// Intersection via the kernel of the stacked basis matrix.
    pub fn intersect(&self, other: &Subspace) -> Subspace {
        assert_eq!(self.dim_ambient, other.dim_ambient);
        if self.dim() == 0 || other.dim() == 0 {
            return Subspace::from_vectors(self.dim_ambient, &[]);
        }
        let mut cols = self.basis.clone();
        cols.extend(other.basis.iter().cloned());
        let m = QiMatrix::from_columns(self.dim_ambient, &cols);
        let mut vecs = Vec::new();
        for k in m.kernel_basis() {
            // combination of self-basis columns lying in the intersection
            let mut v = vec![GaussRational::zero(); self.dim_ambient];
            for (j, c) in k.iter().take(self.dim()).enumerate() {
                if c.is_zero() {
                    continue;
                }
                for i in 0..self.dim_ambient {
                    v[i] += &(c * &self.basis[j][i]);
                }
            }
            vecs.push(v);
        }
        Subspace::from_vectors(self.dim_ambient, &vecs)
    }

    /// Vectors of `self` extending a basis of `inner` to one of `inner + self`.
    pub fn complement_of(&self, inner: &Subspace) -> Vec<Vec<GaussRational>> {
        let mut acc = inner.basis.clone();
        let mut out = Vec::new();
        for v in &self.basis {
            let mut cand = acc.clone();
            cand.push(v.clone());
            let m = QiMatrix::from_columns(self.dim_ambient, &cand);
            if m.rank() == cand.len() {
                acc.push(v.clone());
                out.push(v.clone());
            }
        }
        out
    }
}

/// Exact orthogonal projector onto the span of `basis` (Gram inversion).
pub fn orthogonal_projector(dim: usize, basis: &[Vec<GaussRational>]) -> QiMatrix {
    if basis.is_empty() {
        return QiMatrix::zeros(dim, dim);
    }
    let b = QiMatrix::from_columns(dim, basis);
    let bs = b.conj_transpose();
    let gram = bs.mul(&b);
    let gram_inv = gram.inverse();
    b.mul(&gram_inv).mul(&bs)
}

/// Harmonic projector and Green operator of a Hermitian PSD matrix.
///
/// Returns `(H, G)` with `1 = H + lap*G = H + G*lap`, `G*H = H*G = 0`,
/// all holding exactly.
pub fn harmonic_and_green(lap: &QiMatrix) -> (QiMatrix, QiMatrix) {
    assert_eq!(lap.rows, lap.cols);
    let n = lap.rows;
    let kernel = lap.kernel_basis();
    let h = orthogonal_projector(n, &kernel);
    let mut g = QiMatrix::zeros(n, n);
    let one = QiMatrix::identity(n);
    let one_minus_h = one.sub(&h);
    for j in 0..n {
        let rhs = one_minus_h.column(j);
        let x = lap
            .solve(&rhs)
            .expect("Green solve: RHS not in image of Laplacian");
        let x = one_minus_h.apply(&x);
        for i in 0..n {
            g[(i, j)] = x[i].clone();
        }
    }
    debug_assert!(lap.mul(&g).add(&h).sub(&QiMatrix::identity(n)).is_zero());
    debug_assert!(g.mul(&lap).add(&h).sub(&QiMatrix::identity(n)).is_zero());
    debug_assert!(g.mul(&h).is_zero());
    (h, g)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> GaussRational {
        GaussRational::from_ratio(n, d)
    }

    #[test]
    fn rank_kernel_solve_roundtrip() {
        // 2x3 with rank 2
        let mut m = QiMatrix::zeros(2, 3);
        m[(0, 0)] = q(1, 1);
        m[(0, 2)] = q(2, 1);
        m[(1, 1)] = GaussRational::i();
        assert_eq!(m.rank(), 2);
        let k = m.kernel_basis();
        assert_eq!(k.len(), 1);
        for v in &k {
            assert!(m.apply(v).iter().all(|x| x.is_zero()));
        }
        let b = vec![q(3, 1), GaussRational::from_ratio_i(2, 1)];
        let x = m.solve(&b).unwrap();
        assert_eq!(m.apply(&x), b);
    }

    #[test]
    fn green_identities_on_hermitian_psd() {
        // lap = A* A for a random-ish A
        let mut a = QiMatrix::zeros(2, 3);
        a[(0, 0)] = q(1, 1);
        a[(0, 1)] = GaussRational::i();
        a[(1, 2)] = q(1, 2);
        let lap = a.conj_transpose().mul(&a);
        let (h, g) = harmonic_and_green(&lap);
        let one = QiMatrix::identity(3);
        assert_eq!(lap.mul(&g).add(&h), one);
        assert_eq!(g.mul(&lap).add(&h), one);
        assert!(g.mul(&h).is_zero());
        assert!(h.mul(&g).is_zero());
        // projector is idempotent and Hermitian
        assert_eq!(h.mul(&h), h);
        assert_eq!(h.conj_transpose(), h);
    }

    #[test]
    fn subspace_operations() {
        let e1 = vec![q(1, 1), q(0, 1), q(0, 1)];
        let e2 = vec![q(0, 1), q(1, 1), q(0, 1)];
        let e3 = vec![q(0, 1), q(0, 1), q(1, 1)];
        let d = vec![q(1, 1), q(1, 1), q(0, 1)];
        let s1 = Subspace::from_vectors(3, &[e1.clone(), e3.clone()]);
        let s2 = Subspace::from_vectors(3, &[d.clone(), e3.clone()]);
        assert_eq!(s1.dim(), 2);
        let inter = s1.intersect(&s2);
        assert_eq!(inter.dim(), 1);
        assert!(inter.contains(&e3));
        assert!(Subspace::from_vectors(3, &[e1.clone(), e2.clone()]).contains(&d));
        assert!(!Subspace::from_vectors(3, &[e1]).contains(&e2));
    }
}
