//! Routh-Hurwitz stability verdicts via leading principal minors.
//!
//! A real polynomial with positive leading coefficient has all roots in the
//! open left half-plane exactly when every leading principal minor of its
//! Hurwitz matrix is strictly positive. The point of going through minors
//! rather than roots is exactness: for the first-order feedback family the
//! 2x2 minor is `2 x0 - 2 x0`, and the determinant expansion below keeps it
//! bitwise zero, so the infeasibility argument survives floating point.

use serde::ser::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::poly::Poly;
use crate::scalar::Real;

/// Largest degree the subset-expansion determinant table supports.
const MAX_DEGREE: usize = 20;

/// Hurwitz matrix, its leading principal minors, and the stability verdict.
#[derive(Debug, Clone)]
pub struct HurwitzReport<T> {
    pub matrix: Mat<T>,
    /// Leading principal minors, 1x1 up to the full determinant.
    pub minors: Vec<T>,
    pub stable: bool,
}

/// The Hurwitz matrix of a real polynomial of degree n >= 1.
///
/// Row i, column j (1-indexed) holds the coefficient of `s^(n - 2i + j)`,
/// zero when out of range. For
/// `p = y0 + y1 s + 2 x0 s^2 + 2 s^3 + x0 s^4 + s^5` this is
///
/// ```text
/// [ x0   1    0    0    0  ]
/// [ 2x0  2    x0   1    0  ]
/// [ y0   y1   2x0  2    x0 ]
/// [ 0    0    y0   y1   2x0]
/// [ 0    0    0    0    y0 ]
/// ```
///
/// A negative leading coefficient is normalized away by negating the whole
/// polynomial, which leaves the roots unchanged.
pub fn hurwitz_matrix<T: Real>(p: &Poly<T>) -> Result<Mat<T>> {
    let (a, n) = normalized_real_coeffs(p)?;
    let mut h = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            // 1-indexed exponent n - 2(i+1) + (j+1).
            let e = n as isize - 2 * (i as isize) + j as isize - 1;
            if (0..=n as isize).contains(&e) {
                *h.at_mut(i, j) = a[e as usize];
            }
        }
    }
    Ok(h)
}

/// Stability verdict with the matrix and all leading principal minors.
///
/// "Strictly positive" is judged against `1e-10 * scale`, where scale is the
/// product of the row norms of the leading block (a Hadamard bound), so an
/// exactly-zero minor can never be misread as positive.
pub fn is_hurwitz_stable<T: Real>(p: &Poly<T>) -> Result<HurwitzReport<T>> {
    let matrix = hurwitz_matrix(p)?;
    let minors = leading_minors(&matrix);
    let n = matrix.rows();
    let mut stable = true;
    for k in 1..=n {
        let mut scale = T::one();
        for i in 0..k {
            let row_norm = (0..k).map(|j| matrix.at(i, j) * matrix.at(i, j)).sum::<T>().sqrt();
            scale *= row_norm;
        }
        if !(minors[k - 1] > T::of(1e-10) * scale) {
            stable = false;
        }
    }
    Ok(HurwitzReport { matrix, minors, stable })
}

fn normalized_real_coeffs<T: Real>(p: &Poly<T>) -> Result<(Vec<T>, usize)> {
    let mut a = p.real_coeffs()?;
    let n = match a.len().checked_sub(1) {
        None => return Err(Error::ZeroPolynomial),
        Some(0) => return Err(Error::ConstantPolynomial),
        Some(n) => n,
    };
    if n > MAX_DEGREE {
        return Err(Error::InvalidOptions(format!(
            "Hurwitz minors supported up to degree {MAX_DEGREE}, got {n}"
        )));
    }
    if a[n] < T::zero() {
        for c in &mut a {
            *c = -*c;
        }
    }
    Ok((a, n))
}

/// All leading principal minors by division-free Laplace expansion.
///
/// `d[S]` is the determinant of the block formed by rows `0..|S|` and column
/// set `S`; expanding each along its last row reuses the smaller subsets.
/// No pivoting and no division means the arithmetic performed for a minor is
/// exactly the cofactor expansion, which is what keeps structurally zero
/// minors at exactly 0.0.
fn leading_minors<T: Real>(h: &Mat<T>) -> Vec<T> {
    let n = h.rows();
    let mut d = vec![T::zero(); 1usize << n];
    d[0] = T::one();
    for mask in 1usize..(1 << n) {
        let r = mask.count_ones() as usize - 1;
        let mut acc = T::zero();
        let mut pos = 0usize;
        for j in 0..n {
            if mask & (1 << j) == 0 {
                continue;
            }
            let term = h.at(r, j) * d[mask ^ (1 << j)];
            if (r + pos) % 2 == 0 {
                acc += term;
            } else {
                acc -= term;
            }
            pos += 1;
        }
        d[mask] = acc;
    }
    (1..=n).map(|k| d[(1usize << k) - 1]).collect()
}

impl<T: Real> Serialize for HurwitzReport<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(serde::Serialize)]
        struct View {
            matrix: Vec<Vec<f64>>,
            minors: Vec<f64>,
            stable: bool,
        }
        View {
            matrix: self
                .matrix
                .to_rows()
                .into_iter()
                .map(|row| row.into_iter().map(Real::as_f64).collect())
                .collect(),
            minors: self.minors.iter().map(|&m| m.as_f64()).collect(),
            stable: self.stable,
        }
        .serialize(serializer)
    }
}
