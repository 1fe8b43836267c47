//! Polynomials with complex coefficients, their roots and spectral abscissa.
//!
//! Coefficients are stored in ascending degree order; the zero polynomial is
//! the empty coefficient list. Real-coefficient inputs are the common case
//! throughout the crate, but the representation is complex so that shifted
//! and factored intermediates never lose information.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex;
use serde::de::{self, Deserialize, Deserializer};
use serde::ser::{Serialize, SerializeSeq, Serializer};

use crate::aberth;
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct Poly<T: Real> {
    coeffs: Vec<Complex<T>>,
}

impl<T: Real> Poly<T> {
    pub fn zero() -> Self {
        Poly { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Poly::constant(Complex::new(T::one(), T::zero()))
    }

    pub fn constant(c: Complex<T>) -> Self {
        Poly::from_complex(vec![c])
    }

    /// Builds a polynomial from ascending-degree coefficients, trimming
    /// exactly-zero leading terms.
    pub fn from_complex(mut coeffs: Vec<Complex<T>>) -> Self {
        while coeffs.last().is_some_and(|c| c.re == T::zero() && c.im == T::zero()) {
            coeffs.pop();
        }
        Poly { coeffs }
    }

    pub fn from_real(coeffs: &[T]) -> Self {
        Poly::from_complex(coeffs.iter().map(|&c| Complex::new(c, T::zero())).collect())
    }

    /// Convenience for literals: converts each `f64` into the scalar type.
    pub fn from_f64s(coeffs: &[f64]) -> Self {
        Poly::from_complex(coeffs.iter().map(|&c| Complex::new(T::of(c), T::zero())).collect())
    }

    /// The monic linear factor `s - root`.
    pub fn linear(root: Complex<T>) -> Self {
        Poly::from_complex(vec![-root, Complex::new(T::one(), T::zero())])
    }

    /// `self` raised to a nonnegative integer power.
    pub fn powu(&self, n: usize) -> Self {
        let mut out = Poly::one();
        for _ in 0..n {
            out = &out * self;
        }
        out
    }

    /// Degree, or `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeffs(&self) -> &[Complex<T>] {
        &self.coeffs
    }

    /// Coefficient of `s^j`, zero beyond the degree.
    pub fn coeff(&self, j: usize) -> Complex<T> {
        self.coeffs.get(j).copied().unwrap_or_else(|| Complex::new(T::zero(), T::zero()))
    }

    pub fn leading(&self) -> Option<Complex<T>> {
        self.coeffs.last().copied()
    }

    pub fn max_coeff_norm(&self) -> T {
        self.coeffs.iter().map(|c| c.norm()).fold(T::zero(), T::max)
    }

    /// Horner evaluation.
    pub fn eval(&self, z: Complex<T>) -> Complex<T> {
        let mut value = Complex::new(T::zero(), T::zero());
        for &c in self.coeffs.iter().rev() {
            value = value * z + c;
        }
        value
    }

    /// Value and first derivative in one Horner pass.
    pub fn eval_and_derivative(&self, z: Complex<T>) -> Result<(Complex<T>, Complex<T>)> {
        if self.is_zero() {
            return Err(Error::ZeroPolynomial);
        }
        let mut value = Complex::new(T::zero(), T::zero());
        let mut deriv = Complex::new(T::zero(), T::zero());
        for &c in self.coeffs.iter().rev() {
            deriv = deriv * z + value;
            value = value * z + c;
        }
        Ok((value, deriv))
    }

    pub fn derivative(&self) -> Poly<T> {
        if self.coeffs.len() <= 1 {
            return Poly::zero();
        }
        Poly::from_complex(
            self.coeffs[1..]
                .iter()
                .enumerate()
                .map(|(j, &c)| c * Complex::new(T::from_usize(j + 1).expect("small"), T::zero()))
                .collect(),
        )
    }

    pub fn scale(&self, factor: Complex<T>) -> Poly<T> {
        Poly::from_complex(self.coeffs.iter().map(|&c| c * factor).collect())
    }

    pub fn scale_real(&self, factor: T) -> Poly<T> {
        self.scale(Complex::new(factor, T::zero()))
    }

    /// Divides out the leading coefficient.
    pub fn monic(&self) -> Result<Poly<T>> {
        let lead = self.leading().ok_or(Error::ZeroPolynomial)?;
        let mut coeffs: Vec<Complex<T>> = self.coeffs.iter().map(|&c| c / lead).collect();
        let last = coeffs.len() - 1;
        coeffs[last] = Complex::new(T::one(), T::zero());
        Ok(Poly { coeffs })
    }

    /// Recenters the polynomial: returns `q` with `q(t) = p(t + z0)`.
    ///
    /// Synthetic-division Taylor shift; degree and leading coefficient are
    /// preserved.
    pub fn shift(&self, z0: Complex<T>) -> Poly<T> {
        let mut coeffs = self.coeffs.clone();
        let n = match coeffs.len().checked_sub(1) {
            None | Some(0) => return Poly { coeffs },
            Some(n) => n,
        };
        for i in 0..n {
            for j in (i..n).rev() {
                let higher = coeffs[j + 1];
                coeffs[j] = coeffs[j] + z0 * higher;
            }
        }
        Poly { coeffs }
    }

    /// Largest imaginary part in the coefficients, for realness checks.
    pub fn max_imag(&self) -> T {
        self.coeffs.iter().map(|c| c.im.abs()).fold(T::zero(), T::max)
    }

    pub fn is_real(&self) -> bool {
        self.max_imag() <= T::of(1e-12) * T::max(T::one(), self.max_coeff_norm())
    }

    /// Real parts of the coefficients, failing if any imaginary part is
    /// non-negligible relative to the coefficient scale.
    pub fn real_coeffs(&self) -> Result<Vec<T>> {
        if !self.is_real() {
            return Err(Error::NonRealCoefficients { max_imag: self.max_imag().as_f64() });
        }
        Ok(self.coeffs.iter().map(|c| c.re).collect())
    }

    /// All complex roots with residual and cluster report, using defaults.
    pub fn roots(&self) -> Result<RootSet<T>> {
        self.roots_with(&RootFindOptions::default())
    }

    pub fn roots_with(&self, opts: &RootFindOptions<T>) -> Result<RootSet<T>> {
        let degree = self.degree().ok_or(Error::ZeroPolynomial)?;
        if degree == 0 {
            return Err(Error::ConstantPolynomial);
        }
        let monic = self.monic()?;
        // Exact zero constant terms deflate to exact zero roots.
        let zero_count =
            monic.coeffs.iter().take_while(|c| c.re == T::zero() && c.im == T::zero()).count();
        let deflated = &monic.coeffs[zero_count..];
        let mut roots: Vec<Complex<T>> = vec![Complex::new(T::zero(), T::zero()); zero_count];
        match deflated.len() - 1 {
            0 => {}
            1 => roots.push(-deflated[0] / deflated[1]),
            _ => {
                let found =
                    aberth::aberth_roots(deflated, opts.max_iterations, opts.correction_tol)
                        .map_err(|unconverged| {
                            let mut best = roots.clone();
                            best.extend(unconverged.best);
                            Error::RootsNotConverged {
                                iterations: unconverged.iterations,
                                residual: scaled_residual(&monic, &best).as_f64(),
                                best: best
                                    .iter()
                                    .map(|z| (z.re.as_f64(), z.im.as_f64()))
                                    .collect(),
                            }
                        })?;
                roots.extend(found);
            }
        }
        sort_canonical(&mut roots);
        let residual = scaled_residual(&monic, &roots);
        let clusters = detect_clusters(&roots, residual, opts.cluster_factor);
        Ok(RootSet { roots, residual, clusters })
    }

    /// Spectral abscissa: largest real part over all roots.
    pub fn abscissa(&self) -> Result<T> {
        Ok(self.roots()?.abscissa())
    }
}

/// Canonical root order: by real part, then imaginary part.
fn sort_canonical<T: Real>(roots: &mut [Complex<T>]) {
    roots.sort_by(|a, b| {
        a.re.partial_cmp(&b.re)
            .and_then(|o| Some(o.then(a.im.partial_cmp(&b.im)?)))
            .expect("finite roots")
    });
}

/// Largest value of |p_monic(z_i)| / (maxc * (1 + |z_i|)^degree) over the
/// reported roots: a backward-error style residual that is dimensionless in
/// both coefficient and argument scale.
fn scaled_residual<T: Real>(monic: &Poly<T>, roots: &[Complex<T>]) -> T {
    let degree = monic.degree().unwrap_or(0);
    let maxc = T::max(T::one(), monic.max_coeff_norm());
    roots
        .iter()
        .map(|&z| {
            let scale = maxc * (T::one() + z.norm()).powi(degree as i32);
            monic.eval(z).norm() / scale
        })
        .fold(T::zero(), T::max)
}

/// Options for the root iteration.
#[derive(Debug, Clone)]
pub struct RootFindOptions<T> {
    pub max_iterations: usize,
    /// Relative correction below which a root counts as converged.
    pub correction_tol: T,
    /// Multiplier on residual^(1/k) used as the cluster merge cutoff.
    pub cluster_factor: T,
}

impl<T: Real> Default for RootFindOptions<T> {
    fn default() -> Self {
        RootFindOptions {
            max_iterations: 500,
            correction_tol: T::of(1e-12),
            cluster_factor: T::of(10.0),
        }
    }
}

/// A group of computed roots consistent with one multiple root.
#[derive(Debug, Clone)]
pub struct RootCluster<T> {
    pub center: Complex<T>,
    pub multiplicity: usize,
    /// Largest distance from a member root to the center.
    pub radius: T,
}

/// Roots of a polynomial together with accuracy metadata.
#[derive(Debug, Clone)]
pub struct RootSet<T: Real> {
    /// Computed roots in canonical order (by real, then imaginary part).
    pub roots: Vec<Complex<T>>,
    /// Scaled backward-error residual of the worst root.
    pub residual: T,
    /// Cluster view: multiplicity-aware grouping of the raw roots.
    pub clusters: Vec<RootCluster<T>>,
}

impl<T: Real> RootSet<T> {
    /// Largest real part over the raw roots.
    pub fn abscissa(&self) -> T {
        self.roots.iter().map(|z| z.re).fold(T::neg_infinity(), T::max)
    }
}

/// Groups roots into multiplicity-k clusters.
///
/// A k-fold root perturbed at the residual level scatters its copies by
/// about residual^(1/k), so for each k from the root count down to 2 the
/// still-unassigned roots are joined when closer than 10 * residual^(1/k)
/// (single linkage) and components of at least k members become clusters.
/// Leftovers are simple roots.
fn detect_clusters<T: Real>(roots: &[Complex<T>], residual: T, factor: T) -> Vec<RootCluster<T>> {
    let n = roots.len();
    let floor = T::epsilon() * T::epsilon();
    let eff = T::max(residual, floor);
    let mut unassigned: Vec<usize> = (0..n).collect();
    let mut clusters: Vec<RootCluster<T>> = Vec::new();

    for k in (2..=n).rev() {
        if unassigned.len() < k {
            continue;
        }
        let cutoff = factor * eff.powf(T::one() / T::from_usize(k).expect("small"));
        // Connected components of the unassigned roots under the cutoff.
        let mut comp: Vec<usize> = (0..unassigned.len()).collect();
        fn find(comp: &mut Vec<usize>, i: usize) -> usize {
            if comp[i] != i {
                let r = find(comp, comp[i]);
                comp[i] = r;
            }
            comp[i]
        }
        for a in 0..unassigned.len() {
            for b in a + 1..unassigned.len() {
                if (roots[unassigned[a]] - roots[unassigned[b]]).norm() <= cutoff {
                    let ra = find(&mut comp, a);
                    let rb = find(&mut comp, b);
                    comp[ra] = rb;
                }
            }
        }
        let mut groups: Vec<Vec<usize>> = vec![Vec::new(); unassigned.len()];
        for a in 0..unassigned.len() {
            let r = find(&mut comp, a);
            groups[r].push(unassigned[a]);
        }
        let mut taken: Vec<usize> = Vec::new();
        for group in groups.into_iter().filter(|g| g.len() >= k) {
            let m = T::from_usize(group.len()).expect("small");
            let mut center = Complex::new(T::zero(), T::zero());
            for &i in &group {
                center = center + roots[i];
            }
            center = center / Complex::new(m, T::zero());
            let radius =
                group.iter().map(|&i| (roots[i] - center).norm()).fold(T::zero(), T::max);
            clusters.push(RootCluster { center, multiplicity: group.len(), radius });
            taken.extend(group);
        }
        unassigned.retain(|i| !taken.contains(i));
    }
    for &i in &unassigned {
        clusters.push(RootCluster { center: roots[i], multiplicity: 1, radius: T::zero() });
    }
    clusters.sort_by(|a, b| {
        a.center
            .re
            .partial_cmp(&b.center.re)
            .and_then(|o| Some(o.then(a.center.im.partial_cmp(&b.center.im)?)))
            .expect("finite centers")
    });
    clusters
}

impl<T: Real> fmt::Display for Poly<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (j, c) in self.coeffs.iter().enumerate().rev() {
            if c.re == T::zero() && c.im == T::zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            if c.im == T::zero() {
                write!(f, "{}", c.re)?;
            } else {
                write!(f, "({}{:+}i)", c.re, c.im)?;
            }
            match j {
                0 => {}
                1 => write!(f, " s")?,
                _ => write!(f, " s^{j}")?,
            }
        }
        Ok(())
    }
}

impl<T: Real> Add for &Poly<T> {
    type Output = Poly<T>;
    fn add(self, rhs: &Poly<T>) -> Poly<T> {
        let len = self.coeffs.len().max(rhs.coeffs.len());
        Poly::from_complex((0..len).map(|j| self.coeff(j) + rhs.coeff(j)).collect())
    }
}

impl<T: Real> Sub for &Poly<T> {
    type Output = Poly<T>;
    fn sub(self, rhs: &Poly<T>) -> Poly<T> {
        let len = self.coeffs.len().max(rhs.coeffs.len());
        Poly::from_complex((0..len).map(|j| self.coeff(j) - rhs.coeff(j)).collect())
    }
}

impl<T: Real> Neg for &Poly<T> {
    type Output = Poly<T>;
    fn neg(self) -> Poly<T> {
        Poly::from_complex(self.coeffs.iter().map(|&c| -c).collect())
    }
}

impl<T: Real> Mul for &Poly<T> {
    type Output = Poly<T>;
    fn mul(self, rhs: &Poly<T>) -> Poly<T> {
        if self.is_zero() || rhs.is_zero() {
            return Poly::zero();
        }
        let mut out = vec![Complex::new(T::zero(), T::zero()); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in rhs.coeffs.iter().enumerate() {
                out[i + j] = out[i + j] + a * b;
            }
        }
        Poly::from_complex(out)
    }
}

// --- serialization -------------------------------------------------------
//
// A polynomial serializes as a list of [re, im] pairs in ascending degree.
// On input each coefficient may be a plain number, a decimal string, or a
// two-element [re, im] array whose entries are numbers or decimal strings.

#[derive(serde::Deserialize)]
#[serde(untagged)]
enum ScalarRepr {
    Num(f64),
    Text(String),
}

impl ScalarRepr {
    fn value(&self) -> std::result::Result<f64, String> {
        let v = match self {
            ScalarRepr::Num(x) => *x,
            ScalarRepr::Text(s) => s
                .trim()
                .parse::<f64>()
                .map_err(|e| format!("cannot parse {s:?} as a number: {e}"))?,
        };
        if !v.is_finite() {
            return Err(format!("coefficient {v} is not finite"));
        }
        Ok(v)
    }
}

#[derive(serde::Deserialize)]
#[serde(untagged)]
enum CoeffRepr {
    Scalar(ScalarRepr),
    Pair(Vec<ScalarRepr>),
}

impl CoeffRepr {
    fn value<T: Real>(&self) -> std::result::Result<Complex<T>, String> {
        match self {
            CoeffRepr::Scalar(s) => Ok(Complex::new(T::of(s.value()?), T::zero())),
            CoeffRepr::Pair(parts) => {
                if parts.len() != 2 {
                    return Err(format!(
                        "a complex coefficient needs exactly two entries [re, im], got {}",
                        parts.len()
                    ));
                }
                Ok(Complex::new(T::of(parts[0].value()?), T::of(parts[1].value()?)))
            }
        }
    }
}

impl<'de, T: Real> Deserialize<'de> for Poly<T> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = Vec::<CoeffRepr>::deserialize(deserializer)?;
        let coeffs = raw
            .iter()
            .map(CoeffRepr::value)
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(de::Error::custom)?;
        Ok(Poly::from_complex(coeffs))
    }
}

impl<T: Real> Serialize for Poly<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.coeffs.len()))?;
        for c in &self.coeffs {
            seq.serialize_element(&[c.re.as_f64(), c.im.as_f64()])?;
        }
        seq.end()
    }
}

impl<T: Real> Serialize for RootSet<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(serde::Serialize)]
        struct ClusterView {
            center: [f64; 2],
            multiplicity: usize,
            radius: f64,
        }
        #[derive(serde::Serialize)]
        struct View {
            roots: Vec<[f64; 2]>,
            abscissa: f64,
            residual: f64,
            clusters: Vec<ClusterView>,
        }
        View {
            roots: self.roots.iter().map(|z| [z.re.as_f64(), z.im.as_f64()]).collect(),
            abscissa: self.abscissa().as_f64(),
            residual: self.residual.as_f64(),
            clusters: self
                .clusters
                .iter()
                .map(|c| ClusterView {
                    center: [c.center.re.as_f64(), c.center.im.as_f64()],
                    multiplicity: c.multiplicity,
                    radius: c.radius.as_f64(),
                })
                .collect(),
        }
        .serialize(serializer)
    }
}
