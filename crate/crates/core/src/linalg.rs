//! Small dense linear algebra: row-major matrices, a matvec operator trait,
//! power iteration for the top singular value, and a cyclic Jacobi solver
//! for symmetric eigenproblems. Sizes here are at most a few hundred, so
//! straightforward O(n^3) routines are adequate.

use crate::scalar::{lit, Real};

#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> DenseMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        DenseMatrix { rows, cols, data }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), rows * cols, "shape mismatch");
        DenseMatrix { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "inner dimensions differ");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a == T::zero() {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(other.row(k)) {
                    *o = *o + a * b;
                }
            }
        }
        out
    }

    /// `self^T * other` without materializing the transpose.
    pub fn t_matmul(&self, other: &Self) -> Self {
        assert_eq!(self.rows, other.rows, "row counts differ");
        let mut out = Self::zeros(self.cols, other.cols);
        for k in 0..self.rows {
            let b_row = other.row(k);
            for (i, &a) in self.row(k).iter().enumerate() {
                if a == T::zero() {
                    continue;
                }
                let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o = *o + a * b;
                }
            }
        }
        out
    }

    pub fn scaled(&self, s: T) -> Self {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| x * s).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| a - b).collect(),
        }
    }

    pub fn frobenius(&self) -> T {
        self.data.iter().map(|&x| x * x).sum::<T>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| (a - b).abs())
            .fold(T::zero(), T::max)
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &Self) -> Self {
        let (r2, c2) = (other.rows, other.cols);
        Self::from_fn(self.rows * r2, self.cols * c2, |i, j| {
            self[(i / r2, j / c2)] * other[(i % r2, j % c2)]
        })
    }
}

impl<T> std::ops::Index<(usize, usize)> for DenseMatrix<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for DenseMatrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

/// A matrix known only through products with vectors.
pub trait LinearOperator<T> {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    /// `y = A x`
    fn apply(&self, x: &[T], y: &mut [T]);
    /// `y = A^T x`
    fn apply_transpose(&self, x: &[T], y: &mut [T]);
}

impl<T: Real> LinearOperator<T> for DenseMatrix<T> {
    fn nrows(&self) -> usize {
        self.rows
    }

    fn ncols(&self) -> usize {
        self.cols
    }

    fn apply(&self, x: &[T], y: &mut [T]) {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.row(i).iter().zip(x).map(|(&a, &b)| a * b).sum();
        }
    }

    fn apply_transpose(&self, x: &[T], y: &mut [T]) {
        y.iter_mut().for_each(|v| *v = T::zero());
        for (i, &xi) in x.iter().enumerate() {
            for (yj, &a) in y.iter_mut().zip(self.row(i)) {
                *yj = *yj + a * xi;
            }
        }
    }
}

/// `scale * I_n`.
#[derive(Clone, Copy, Debug)]
pub struct ScaledIdentity<T> {
    pub n: usize,
    pub scale: T,
}

impl<T: Real> LinearOperator<T> for ScaledIdentity<T> {
    fn nrows(&self) -> usize {
        self.n
    }
    fn ncols(&self) -> usize {
        self.n
    }
    fn apply(&self, x: &[T], y: &mut [T]) {
        for (o, &v) in y.iter_mut().zip(x) {
            *o = v * self.scale;
        }
    }
    fn apply_transpose(&self, x: &[T], y: &mut [T]) {
        self.apply(x, y)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerIteration<T> {
    pub sigma: T,
    pub iterations: usize,
    pub converged: bool,
}

/// Estimates the top singular value by power iteration on `A^T A`.
///
/// The starting vector is a fixed quasi-random pattern so the estimate is
/// deterministic. The iterate's Rayleigh quotient never exceeds the true
/// value, so the estimate is a lower bound up to rounding.
pub fn top_singular_value<T: Real, Op: LinearOperator<T> + ?Sized>(
    op: &Op,
    max_iter: usize,
    tol: T,
) -> PowerIteration<T> {
    let n = op.ncols();
    let mut v: Vec<T> = (0..n)
        .map(|i| {
            let t = (i as f64 + 1.0) * 0.618_033_988_749_894_9;
            lit::<T>(t.fract() - 0.5 + 1e-3)
        })
        .collect();
    normalize(&mut v);
    let mut av = vec![T::zero(); op.nrows()];
    let mut w = vec![T::zero(); n];
    let mut sigma = T::zero();
    for it in 1..=max_iter {
        op.apply(&v, &mut av);
        let next = norm(&av);
        if next == T::zero() {
            return PowerIteration {
                sigma: T::zero(),
                iterations: it,
                converged: true,
            };
        }
        op.apply_transpose(&av, &mut w);
        let wn = norm(&w);
        for (vi, &wi) in v.iter_mut().zip(&w) {
            *vi = wi / wn;
        }
        if (next - sigma).abs() <= tol * next {
            return PowerIteration {
                sigma: next,
                iterations: it,
                converged: true,
            };
        }
        sigma = next;
    }
    PowerIteration {
        sigma,
        iterations: max_iter,
        converged: false,
    }
}

pub fn norm<T: Real>(v: &[T]) -> T {
    v.iter().map(|&x| x * x).sum::<T>().sqrt()
}

pub fn normalize<T: Real>(v: &mut [T]) {
    let n = norm(v);
    if n > T::zero() {
        v.iter_mut().for_each(|x| *x = *x / n);
    }
}

pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues in descending order and the matching orthonormal
/// eigenvectors as the columns of the second value.
pub fn symmetric_eigen<T: Real>(a: &DenseMatrix<T>) -> (Vec<T>, DenseMatrix<T>) {
    let n = a.rows();
    assert_eq!(n, a.cols(), "matrix must be square");
    let mut m = a.clone();
    let mut v = DenseMatrix::identity(n);
    let eps = T::epsilon();
    let scale = m.frobenius().max(T::min_positive_value());
    for _sweep in 0..100 {
        let mut off = T::zero();
        for p in 0..n {
            for q in (p + 1)..n {
                off = off + m[(p, q)] * m[(p, q)];
            }
        }
        if off.sqrt() <= eps * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq.abs() <= T::min_positive_value() {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (lit::<T>(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(j, j)].partial_cmp(&m[(i, i)]).unwrap_or(std::cmp::Ordering::Equal));
    let values = order.iter().map(|&i| m[(i, i)]).collect();
    let vectors = DenseMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    (values, vectors)
}

/// Orthonormalizes the rows of `a` in place (modified Gram-Schmidt) and
/// returns the lower-triangular factor `L` with `a_original = L * a_new`.
pub fn orthonormalize_rows<T: Real>(a: &mut DenseMatrix<T>) -> DenseMatrix<T> {
    let (m, cols) = (a.rows(), a.cols());
    assert!(m <= cols, "more rows than columns");
    let mut l = DenseMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..i {
            let (head, tail) = a.data.split_at_mut(i * cols);
            let qj = &head[j * cols..(j + 1) * cols];
            let ai = &mut tail[..cols];
            let r = dot(qj, ai);
            l[(i, j)] = r;
            for (x, &q) in ai.iter_mut().zip(qj) {
                *x = *x - r * q;
            }
        }
        let row = a.row_mut(i);
        let nrm = norm(row);
        l[(i, i)] = nrm;
        row.iter_mut().for_each(|x| *x = *x / nrm);
    }
    l
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_sigma_and_double_identity() {
        let id = ScaledIdentity { n: 7, scale: 1.0f64 };
        let pi = top_singular_value(&id, 300, 1e-9);
        assert!((pi.sigma - 1.0).abs() < 1e-12 && pi.converged);
        let two = ScaledIdentity { n: 7, scale: 2.0f32 };
        assert!((top_singular_value(&two, 300, 1e-6).sigma - 2.0).abs() < 1e-5);
    }

    #[test]
    fn jacobi_reconstructs_matrix() {
        let a = DenseMatrix::from_fn(6, 6, |i, j| ((i * 3 + j * 5) % 7) as f64 + if i == j { 3.0 } else { 0.0 });
        let sym = DenseMatrix::from_fn(6, 6, |i, j| a[(i, j)] + a[(j, i)]);
        let (vals, vecs) = symmetric_eigen(&sym);
        let lambda = DenseMatrix::from_fn(6, 6, |i, j| if i == j { vals[i] } else { 0.0 });
        let back = vecs.matmul(&lambda).matmul(&vecs.transpose());
        assert!(back.max_abs_diff(&sym) < 1e-10);
        assert!(vals.windows(2).all(|w| w[0] >= w[1]));
        let gram = vecs.t_matmul(&vecs);
        assert!(gram.max_abs_diff(&DenseMatrix::identity(6)) < 1e-12);
    }

    #[test]
    fn power_iteration_agrees_with_eigen_route() {
        let a = DenseMatrix::from_fn(5, 8, |i, j| ((i * 7 + j * 11) % 13) as f64 / 13.0 - 0.4);
        let (vals, _) = symmetric_eigen(&a.matmul(&a.transpose()));
        let pi = top_singular_value(&a, 2000, 1e-13);
        assert!((pi.sigma - vals[0].sqrt()).abs() < 1e-8);
    }

    #[test]
    fn kron_matches_definition() {
        let a = DenseMatrix::from_vec(2, 2, vec![1.0f64, 2.0, 3.0, 4.0]);
        let b = DenseMatrix::from_vec(2, 2, vec![0.0f64, 1.0, 1.0, 0.0]);
        let k = a.kron(&b);
        assert_eq!(k[(0, 1)], 1.0);
        assert_eq!(k[(3, 2)], 4.0);
        assert_eq!(k[(2, 1)], 3.0);
    }

    #[test]
    fn gram_schmidt_factorization() {
        let orig = DenseMatrix::from_fn(3, 6, |i, j| ((i + 1) * (j + 2) % 5) as f64 + (i == j) as u8 as f64);
        let mut q = orig.clone();
        let l = orthonormalize_rows(&mut q);
        assert!(l.matmul(&q).max_abs_diff(&orig) < 1e-12);
        assert!(q.matmul(&q.transpose()).max_abs_diff(&DenseMatrix::identity(3)) < 1e-12);
    }
}
