//! Small dense real matrices and the few factorizations the crate needs.
//!
//! Every system in this crate is tiny (dimensions below twenty), so the
//! implementations favour determinism and numerical robustness over
//! asymptotic speed: partial-pivot LU, Householder QR with column pivoting,
//! and a one-sided Jacobi SVD.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Mat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            *m.at_mut(i, i) = T::one();
        }
        m
    }

    /// Builds a matrix from row slices. All rows must have equal length.
    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Mat {
            rows: r,
            cols: c,
            data: rows.iter().flatten().copied().collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> T {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn at_mut(&mut self, r: usize, c: usize) -> &mut T {
        &mut self.data[r * self.cols + c]
    }

    pub fn transpose(&self) -> Mat<T> {
        let mut out = Mat::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                *out.at_mut(c, r) = self.at(r, c);
            }
        }
        out
    }

    pub fn col(&self, c: usize) -> Vec<T> {
        (0..self.rows).map(|r| self.at(r, c)).collect()
    }

    pub fn matvec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(v.len(), self.cols, "dimension mismatch");
        (0..self.rows)
            .map(|r| (0..self.cols).map(|c| self.at(r, c) * v[c]).sum())
            .collect()
    }

    pub fn matmul(&self, other: &Mat<T>) -> Mat<T> {
        assert_eq!(self.cols, other.rows, "dimension mismatch");
        let mut out = Mat::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.at(r, k);
                for c in 0..other.cols {
                    *out.at_mut(r, c) += a * other.at(k, c);
                }
            }
        }
        out
    }

    /// Copies the matrix out as nested vectors, for reports.
    pub fn to_rows(&self) -> Vec<Vec<T>> {
        (0..self.rows).map(|r| self.data[r * self.cols..(r + 1) * self.cols].to_vec()).collect()
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().map(|&x| x * x).sum::<T>().sqrt()
    }

    /// Keeps columns `lo..hi`.
    pub fn column_block(&self, lo: usize, hi: usize) -> Mat<T> {
        assert!(lo <= hi && hi <= self.cols);
        let mut out = Mat::zeros(self.rows, hi - lo);
        for r in 0..self.rows {
            for c in lo..hi {
                *out.at_mut(r, c - lo) = self.at(r, c);
            }
        }
        out
    }
}

pub fn norm2<T: Real>(v: &[T]) -> T {
    v.iter().map(|&x| x * x).sum::<T>().sqrt()
}

pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

/// Solves the square system `a x = b` by LU with partial pivoting.
pub fn lu_solve<T: Real>(a: &Mat<T>, b: &[T]) -> Result<Vec<T>> {
    let n = a.rows();
    assert_eq!(a.cols(), n, "lu_solve needs a square matrix");
    assert_eq!(b.len(), n, "dimension mismatch");
    let mut lu = a.clone();
    let mut x = b.to_vec();
    let scale = a.frobenius_norm().max(T::one());
    for k in 0..n {
        let pivot_row = (k..n)
            .max_by(|&i, &j| {
                lu.at(i, k).abs().partial_cmp(&lu.at(j, k).abs()).expect("finite pivots")
            })
            .unwrap();
        let pivot = lu.at(pivot_row, k);
        if pivot.abs() <= T::of(1e-14) * scale {
            return Err(Error::SingularSystem(format!(
                "pivot {:.3e} at column {k} below threshold",
                pivot.as_f64()
            )));
        }
        if pivot_row != k {
            for c in 0..n {
                let tmp = lu.at(k, c);
                *lu.at_mut(k, c) = lu.at(pivot_row, c);
                *lu.at_mut(pivot_row, c) = tmp;
            }
            x.swap(k, pivot_row);
        }
        for i in k + 1..n {
            let f = lu.at(i, k) / pivot;
            *lu.at_mut(i, k) = f;
            for c in k + 1..n {
                let v = lu.at(k, c);
                *lu.at_mut(i, c) -= f * v;
            }
            x[i] = x[i] - f * x[k];
        }
    }
    for i in (0..n).rev() {
        let mut s = x[i];
        for c in i + 1..n {
            s -= lu.at(i, c) * x[c];
        }
        x[i] = s / lu.at(i, i);
    }
    Ok(x)
}

/// Determinant by LU with partial pivoting.
pub fn lu_det<T: Real>(a: &Mat<T>) -> T {
    let n = a.rows();
    assert_eq!(a.cols(), n, "lu_det needs a square matrix");
    let mut lu = a.clone();
    let mut det = T::one();
    for k in 0..n {
        let pivot_row = (k..n)
            .max_by(|&i, &j| {
                lu.at(i, k).abs().partial_cmp(&lu.at(j, k).abs()).expect("finite pivots")
            })
            .unwrap();
        let pivot = lu.at(pivot_row, k);
        if pivot == T::zero() {
            return T::zero();
        }
        if pivot_row != k {
            for c in 0..n {
                let tmp = lu.at(k, c);
                *lu.at_mut(k, c) = lu.at(pivot_row, c);
                *lu.at_mut(pivot_row, c) = tmp;
            }
            det = -det;
        }
        det *= pivot;
        for i in k + 1..n {
            let f = lu.at(i, k) / pivot;
            for c in k + 1..n {
                let v = lu.at(k, c);
                *lu.at_mut(i, c) -= f * v;
            }
        }
    }
    det
}

/// Least-squares solution of an `m x n` system with `m >= n`, by Householder
/// QR with column pivoting.
pub struct LeastSquares<T> {
    /// Basic solution (rank-deficient columns get zero).
    pub solution: Vec<T>,
    /// Euclidean norm of the residual `a x - b`.
    pub residual_norm: T,
    /// Numerical rank at the relative tolerance passed in.
    pub rank: usize,
}

pub fn qr_least_squares<T: Real>(a: &Mat<T>, b: &[T], rel_tol: T) -> LeastSquares<T> {
    let m = a.rows();
    let n = a.cols();
    assert!(m >= n, "qr_least_squares needs at least as many rows as columns");
    assert_eq!(b.len(), m, "dimension mismatch");
    let mut r = a.clone();
    let mut qtb = b.to_vec();
    let mut perm: Vec<usize> = (0..n).collect();

    for k in 0..n {
        let pivot = (k..n)
            .max_by(|&i, &j| {
                let ni: T = (k..m).map(|row| r.at(row, i) * r.at(row, i)).sum();
                let nj: T = (k..m).map(|row| r.at(row, j) * r.at(row, j)).sum();
                ni.partial_cmp(&nj).expect("finite norms")
            })
            .unwrap();
        if pivot != k {
            for row in 0..m {
                let tmp = r.at(row, k);
                *r.at_mut(row, k) = r.at(row, pivot);
                *r.at_mut(row, pivot) = tmp;
            }
            perm.swap(k, pivot);
        }
        // Householder reflector annihilating rows k+1..m of column k.
        let alpha = {
            let nk: T = (k..m).map(|row| r.at(row, k) * r.at(row, k)).sum::<T>().sqrt();
            if r.at(k, k) > T::zero() {
                -nk
            } else {
                nk
            }
        };
        if alpha == T::zero() {
            continue;
        }
        let mut v: Vec<T> = (k..m).map(|row| r.at(row, k)).collect();
        v[0] -= alpha;
        let vnorm2: T = v.iter().map(|&x| x * x).sum();
        if vnorm2 == T::zero() {
            continue;
        }
        for c in k..n {
            let proj: T = (k..m).map(|row| v[row - k] * r.at(row, c)).sum();
            let f = (T::one() + T::one()) * proj / vnorm2;
            for row in k..m {
                *r.at_mut(row, c) -= f * v[row - k];
            }
        }
        let proj: T = (k..m).map(|row| v[row - k] * qtb[row]).sum();
        let f = (T::one() + T::one()) * proj / vnorm2;
        for row in k..m {
            qtb[row] -= f * v[row - k];
        }
    }

    let diag_max = (0..n).map(|i| r.at(i, i).abs()).fold(T::zero(), T::max);
    let rank = (0..n).take_while(|&i| r.at(i, i).abs() > rel_tol * diag_max).count();

    let mut y = vec![T::zero(); n];
    for i in (0..rank).rev() {
        let mut s = qtb[i];
        for c in i + 1..rank {
            s -= r.at(i, c) * y[c];
        }
        y[i] = s / r.at(i, i);
    }
    let mut solution = vec![T::zero(); n];
    for i in 0..n {
        solution[perm[i]] = y[i];
    }
    let residual_norm = norm2(&qtb[rank..m]);
    LeastSquares { solution, residual_norm, rank }
}

/// Thin singular value decomposition `a = u diag(sigma) v^T`.
///
/// `sigma` is sorted descending and always has `a.cols()` entries; `u` is
/// `a.rows() x a.cols()` and `v` is square. Computed by one-sided Jacobi
/// rotations, padding with zero rows when the matrix is wide.
pub struct Svd<T> {
    pub sigma: Vec<T>,
    pub u: Mat<T>,
    pub v: Mat<T>,
}

pub fn svd<T: Real>(a: &Mat<T>) -> Svd<T> {
    let m = a.rows();
    let n = a.cols();
    let work_rows = m.max(n);
    let mut b = Mat::zeros(work_rows, n);
    for r in 0..m {
        for c in 0..n {
            *b.at_mut(r, c) = a.at(r, c);
        }
    }
    let mut v = Mat::identity(n);
    let eps = T::epsilon();
    for _sweep in 0..60 {
        let mut changed = false;
        for i in 0..n.saturating_sub(1) {
            for j in i + 1..n {
                let mut alpha = T::zero();
                let mut beta = T::zero();
                let mut gamma = T::zero();
                for r in 0..work_rows {
                    let bi = b.at(r, i);
                    let bj = b.at(r, j);
                    alpha += bi * bi;
                    beta += bj * bj;
                    gamma += bi * bj;
                }
                if alpha == T::zero() || beta == T::zero() {
                    continue;
                }
                if gamma.abs() <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                changed = true;
                let zeta = (beta - alpha) / ((T::one() + T::one()) * gamma);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                for r in 0..work_rows {
                    let bi = b.at(r, i);
                    let bj = b.at(r, j);
                    *b.at_mut(r, i) = c * bi - s * bj;
                    *b.at_mut(r, j) = s * bi + c * bj;
                }
                for r in 0..n {
                    let vi = v.at(r, i);
                    let vj = v.at(r, j);
                    *v.at_mut(r, i) = c * vi - s * vj;
                    *v.at_mut(r, j) = s * vi + c * vj;
                }
            }
        }
        if !changed {
            break;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let norms: Vec<T> = (0..n).map(|c| norm2(&b.col(c))).collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).expect("finite singular values"));

    let mut sigma = vec![T::zero(); n];
    let mut u = Mat::zeros(m, n);
    let mut v_sorted = Mat::zeros(n, n);
    for (pos, &idx) in order.iter().enumerate() {
        sigma[pos] = norms[idx];
        for r in 0..n {
            *v_sorted.at_mut(r, pos) = v.at(r, idx);
        }
        if norms[idx] > T::zero() {
            for r in 0..m {
                *u.at_mut(r, pos) = b.at(r, idx) / norms[idx];
            }
        }
    }
    Svd { sigma, u, v: v_sorted }
}

impl<T: Real> Svd<T> {
    /// Number of singular values above `rel_tol` times the largest.
    pub fn rank(&self, rel_tol: T) -> usize {
        let smax = self.sigma.first().copied().unwrap_or(T::zero());
        if smax == T::zero() {
            return 0;
        }
        self.sigma.iter().take_while(|&&s| s > rel_tol * smax).count()
    }

    /// Orthonormal basis of the numerical kernel (columns of `v` whose
    /// singular values fall at or below the relative tolerance).
    pub fn null_space(&self, rel_tol: T) -> Vec<Vec<T>> {
        let r = self.rank(rel_tol);
        (r..self.sigma.len()).map(|c| self.v.col(c)).collect()
    }

    /// Minimum-norm least-squares solution via the pseudoinverse.
    pub fn solve_min_norm(&self, b: &[T], rel_tol: T) -> Vec<T> {
        assert_eq!(b.len(), self.u.rows(), "dimension mismatch");
        let r = self.rank(rel_tol);
        let n = self.v.rows();
        let mut x = vec![T::zero(); n];
        for k in 0..r {
            let coeff = dot(&self.u.col(k), b) / self.sigma[k];
            for i in 0..n {
                x[i] += coeff * self.v.at(i, k);
            }
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(rows: &[&[f64]]) -> Mat<f64> {
        Mat::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>())
    }

    #[test]
    fn lu_solves_small_system() {
        let a = mat(&[&[2.0, 1.0], &[1.0, 3.0]]);
        let x = lu_solve(&a, &[5.0, 10.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-14);
        assert!((x[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn lu_rejects_singular() {
        let a = mat(&[&[1.0, 2.0], &[2.0, 4.0]]);
        assert!(matches!(lu_solve(&a, &[1.0, 2.0]), Err(Error::SingularSystem(_))));
    }

    #[test]
    fn det_of_known_matrices() {
        assert!((lu_det(&mat(&[&[1.0, 2.0], &[3.0, 4.0]])) + 2.0).abs() < 1e-14);
        assert_eq!(lu_det(&mat(&[&[1.0, 2.0], &[2.0, 4.0]])), 0.0);
        let p = mat(&[&[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0], &[1.0, 0.0, 0.0]]);
        assert!((lu_det(&p) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn least_squares_overdetermined() {
        // Fit y = 2t + 1 through exact samples.
        let a = mat(&[&[1.0, 0.0], &[1.0, 1.0], &[1.0, 2.0]]);
        let ls = qr_least_squares(&a, &[1.0, 3.0, 5.0], 1e-12);
        assert_eq!(ls.rank, 2);
        assert!((ls.solution[0] - 1.0).abs() < 1e-12);
        assert!((ls.solution[1] - 2.0).abs() < 1e-12);
        assert!(ls.residual_norm < 1e-12);
    }

    #[test]
    fn least_squares_residual_is_orthogonal_distance() {
        // Inconsistent system: residual equals distance to the column space.
        let a = mat(&[&[1.0], &[1.0]]);
        let ls = qr_least_squares(&a, &[0.0, 2.0], 1e-12);
        assert!((ls.solution[0] - 1.0).abs() < 1e-12);
        assert!((ls.residual_norm - std::f64::consts::SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn svd_recovers_singular_values() {
        let a = mat(&[&[3.0, 0.0], &[0.0, 2.0], &[0.0, 0.0]]);
        let s = svd(&a);
        assert!((s.sigma[0] - 3.0).abs() < 1e-12);
        assert!((s.sigma[1] - 2.0).abs() < 1e-12);
        assert_eq!(s.rank(1e-12), 2);
    }

    #[test]
    fn svd_wide_matrix_kernel() {
        // 1 x 3 row vector: kernel has dimension 2, orthogonal to the row.
        let a = mat(&[&[1.0, 2.0, 2.0]]);
        let s = svd(&a);
        assert!((s.sigma[0] - 3.0).abs() < 1e-12);
        let ker = s.null_space(1e-12);
        assert_eq!(ker.len(), 2);
        for k in &ker {
            assert!(dot(k, &[1.0, 2.0, 2.0]).abs() < 1e-12);
            assert!((norm2(k) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn svd_min_norm_solve_matches_pseudoinverse() {
        // Underdetermined: x + 2y = 5 has min-norm solution (1, 2).
        let a = mat(&[&[1.0, 2.0]]);
        let x = svd(&a).solve_min_norm(&[5.0], 1e-12);
        assert!((x[0] - 1.0).abs() < 1e-12);
        assert!((x[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn svd_reconstructs_matrix() {
        let a = mat(&[&[1.0, 2.0], &[3.0, 4.0], &[5.0, 6.0]]);
        let s = svd(&a);
        let mut sig = Mat::zeros(2, 2);
        *sig.at_mut(0, 0) = s.sigma[0];
        *sig.at_mut(1, 1) = s.sigma[1];
        let back = s.u.matmul(&sig).matmul(&s.v.transpose());
        for r in 0..3 {
            for c in 0..2 {
                assert!((back.at(r, c) - a.at(r, c)).abs() < 1e-12);
            }
        }
    }
}
