//! Machine check of the nonsmooth local-optimality certificate at a fully
//! clustered closed loop.
//!
//! At a point where all N closed-loop roots coincide at a real z*, recenter
//! with t = s - z*: the closed loop becomes t^N + A(d)(t), with A a linear
//! map from controller-parameter perturbations d to polynomials of degree
//! < N. The abscissa of t^N + w(t), as a function gamma of w, has known
//! subdifferentials at 0:
//!
//! * del gamma(0)     = { sum c_j t^j : c_{N-1} = -1/N, Re c_{N-2} <= 0 },
//! * del^inf gamma(0) = { sum c_j t^j : c_{N-1} = 0,    Re c_{N-2} <= 0 }.
//!
//! The point is a sharp local minimizer when 0 lies in the interior of
//! A* del gamma(0), which the chain rule reduces to linear algebra on the
//! adjoint: a constraint qualification (trivial kernel of the restricted
//! adjoint), a unique solution of A*(c) = 0 with the top coefficient fixed,
//! surjectivity, and strictness of the sign constraint at the solution.

use num_complex::Complex;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::ser::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::{norm2, svd, Mat};
use crate::plant::{closed_loop_poly, objective, Controller, Plant};
use crate::scalar::Real;

/// The linear part of the recentered closed-loop map.
#[derive(Debug, Clone)]
pub struct ShiftedMap<T: Real> {
    /// Common root location the loop is recentered at.
    pub z_star: T,
    /// Closed-loop degree N; the map's outputs are coefficients of
    /// t^0..t^(N-1).
    pub degree: usize,
    /// Number of free controller parameters, 2m + 1.
    pub param_dim: usize,
    /// degree x param_dim matrix of A in the coefficient basis.
    pub matrix: Mat<T>,
}

/// Constraint-qualification outcome: kernel of the adjoint restricted to
/// the horizon subdifferential's top-coefficient-zero subspace.
#[derive(Debug, Clone)]
pub struct CqOutcome<T> {
    pub passed: bool,
    /// Orthonormal basis of the offending kernel (empty when passed).
    pub kernel: Vec<Vec<T>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Certified,
    Failed,
    Inconclusive,
}

#[derive(Debug, Clone)]
pub struct CertificateReport<T: Real> {
    pub cq_passed: bool,
    pub cq_kernel_dim: usize,
    /// Unique solve + surjectivity; strictness is reported separately.
    pub interiority_passed: bool,
    /// Full coefficient vector c_0..c_{N-1} with c_{N-1} fixed at -1/N,
    /// when the reduced system was solvable.
    pub c_solution: Option<Vec<Complex<T>>>,
    /// -Re c_{N-2} at the solution; positive means strict.
    pub strictness_margin: Option<T>,
    /// Empirical sharp-growth constant, min over sampled unit directions of
    /// the forward difference of the abscissa. Reported, not judged.
    pub tau_estimate: T,
    pub verdict: Verdict,
    pub map: ShiftedMap<T>,
    /// Adjoint of `map`, kept alongside for audit.
    pub adjoint: Mat<T>,
    /// Human-readable explanations for failed or inconclusive steps.
    pub notes: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct CertifyOptions<T> {
    pub tau_samples: usize,
    pub tau_step: T,
    pub seed: u64,
    /// Relative tolerance for ranks against the largest singular value.
    pub rank_tol: T,
    /// Threshold for strictness of Re c_{N-2} < 0.
    pub strictness_tol: T,
    /// Relative tolerance on the recentered coefficients in the clustering
    /// precondition.
    pub cluster_tol: T,
}

impl<T: Real> Default for CertifyOptions<T> {
    fn default() -> Self {
        CertifyOptions {
            tau_samples: 1000,
            tau_step: T::of(1e-6),
            seed: 7,
            rank_tol: T::of(1e-10),
            strictness_tol: T::of(1e-8),
            cluster_tol: T::of(1e-8),
        }
    }
}

/// Builds the shifted linear map at a fully clustered nominal point.
///
/// z* is read off the trace: for a monic degree-N polynomial with all roots
/// equal, the s^(N-1) coefficient is -N z*. The precondition that the loop
/// really is one N-fold cluster is verified by recentering and demanding
/// all coefficients below the leading term vanish to `cluster_tol`
/// (relative).
///
/// Each matrix column is the coefficient difference of the recentered loop
/// under a unit step in one controller parameter; the closed-loop map is
/// affine and recentering linear, so unit differences give the linear part
/// exactly.
pub fn build_shifted_map<T: Real>(plant: &Plant<T>, k: &Controller<T>) -> Result<ShiftedMap<T>> {
    build_shifted_map_with(plant, k, &CertifyOptions::default())
}

pub fn build_shifted_map_with<T: Real>(
    plant: &Plant<T>,
    k: &Controller<T>,
    opts: &CertifyOptions<T>,
) -> Result<ShiftedMap<T>> {
    let base = closed_loop_poly(plant, k).monic()?;
    let coeffs = base.real_coeffs()?;
    let degree = base.degree().expect("monic is nonzero");
    if degree == 0 {
        return Err(Error::ConstantPolynomial);
    }
    let n_t = T::from_usize(degree).expect("small degree");
    let z_star = -coeffs[degree - 1] / n_t;

    let shifted = base.shift(Complex::new(z_star, T::zero()));
    let scale = T::max(T::one(), base.max_coeff_norm());
    let residual =
        (0..degree).map(|j| shifted.coeff(j).norm()).fold(T::zero(), T::max) / scale;
    if residual > opts.cluster_tol {
        return Err(Error::NotClustered {
            residual: residual.as_f64(),
            tolerance: opts.cluster_tol.as_f64(),
        });
    }

    let params = k.parameters();
    let param_dim = params.len();
    let mut matrix = Mat::zeros(degree, param_dim);
    for j in 0..param_dim {
        let mut stepped = params.clone();
        stepped[j] += T::one();
        let perturbed = closed_loop_poly(plant, &Controller::from_parameters(k.order(), &stepped))
            .monic()?
            .shift(Complex::new(z_star, T::zero()));
        for i in 0..degree {
            let diff = perturbed.coeff(i) - shifted.coeff(i);
            *matrix.at_mut(i, j) = diff.re;
        }
    }
    Ok(ShiftedMap { z_star, degree, param_dim, matrix })
}

/// Adjoint of the map under the real inner products on coefficients and
/// parameters: the transpose, param_dim x degree.
pub fn adjoint<T: Real>(map: &ShiftedMap<T>) -> Mat<T> {
    map.matrix.transpose()
}

/// Constraint qualification: the kernel of A* restricted to the subspace
/// with top coefficient c_{N-1} = 0 must be trivial.
///
/// The horizon subdifferential adds only the half-space Re c_{N-2} <= 0;
/// since kernels are symmetric under negation, any nonzero kernel vector
/// (or its negation) lands in that half-space, so a nonzero kernel always
/// defeats the qualification.
pub fn check_constraint_qualification<T: Real>(map: &ShiftedMap<T>) -> CqOutcome<T> {
    let astar = adjoint(map);
    let restricted = astar.column_block(0, map.degree - 1);
    let kernel = svd(&restricted).null_space(T::of(1e-10));
    CqOutcome { passed: kernel.is_empty(), kernel }
}

/// Runs the full certificate at a clustered nominal point.
pub fn certify_local_min<T: Real>(
    plant: &Plant<T>,
    k: &Controller<T>,
) -> Result<CertificateReport<T>> {
    certify_local_min_with(plant, k, &CertifyOptions::default())
}

pub fn certify_local_min_with<T: Real>(
    plant: &Plant<T>,
    k: &Controller<T>,
    opts: &CertifyOptions<T>,
) -> Result<CertificateReport<T>> {
    let map = build_shifted_map_with(plant, k, opts)?;
    let astar = adjoint(&map);
    let mut notes = Vec::new();

    let cq = check_constraint_qualification(&map);
    if !cq.passed {
        notes.push(format!(
            "constraint qualification fails: restricted adjoint has a {}-dimensional kernel",
            cq.kernel.len()
        ));
    }

    // Interiority: solve A*(c) = 0 with the top coefficient pinned at -1/N.
    // Moving the pinned column to the right-hand side leaves a
    // param_dim x (N-1) system in the free coefficients.
    let n = map.degree;
    let n_t = T::from_usize(n).expect("small degree");
    let free = astar.column_block(0, n - 1);
    let rhs: Vec<T> = (0..map.param_dim).map(|i| astar.at(i, n - 1) / n_t).collect();
    let decomposition = svd(&free);
    let rank = decomposition.rank(opts.rank_tol);
    let c_free = decomposition.solve_min_norm(&rhs, opts.rank_tol);
    let defect = {
        let mut v = free.matvec(&c_free);
        for (d, &r) in v.iter_mut().zip(&rhs) {
            *d = *d - r;
        }
        norm2(&v)
    };
    let solvable = defect <= T::of(1e-8) * T::max(T::one(), norm2(&rhs));
    let unique = rank == n - 1;
    let surjective = rank == map.param_dim;

    let mut verdict = Verdict::Failed;
    let mut c_solution = None;
    let mut strictness_margin = None;
    let interiority_passed = solvable && unique && surjective;
    if !solvable {
        notes.push(format!(
            "no coefficient vector satisfies the pinned adjoint system \
             (best residual {:.3e}); 0 is not in the subdifferential image",
            defect.as_f64()
        ));
    } else if !unique {
        verdict = Verdict::Inconclusive;
        notes.push(format!(
            "pinned adjoint system is rank-deficient (rank {rank} of {}); interiority \
             needs convex analysis beyond a unique solve",
            n - 1
        ));
    } else {
        let margin = -c_free[n - 2];
        strictness_margin = Some(margin);
        let mut c: Vec<Complex<T>> =
            c_free.iter().map(|&v| Complex::new(v, T::zero())).collect();
        c.push(Complex::new(-T::one() / n_t, T::zero()));
        c_solution = Some(c);
        if !surjective {
            notes.push(format!(
                "adjoint is not surjective onto parameter space (rank {rank} of {}); \
                 the subdifferential image has empty interior",
                map.param_dim
            ));
        }
        if margin <= opts.strictness_tol {
            notes.push(format!(
                "sign constraint is not strict: -Re c_{} = {:.3e}",
                n - 2,
                margin.as_f64()
            ));
        }
        if cq.passed && surjective && margin > opts.strictness_tol {
            verdict = Verdict::Certified;
        }
    }

    let tau_estimate = estimate_tau(plant, k, opts)?;
    Ok(CertificateReport {
        cq_passed: cq.passed,
        cq_kernel_dim: cq.kernel.len(),
        interiority_passed,
        c_solution,
        strictness_margin,
        tau_estimate,
        verdict,
        map,
        adjoint: astar,
        notes,
    })
}

/// Smallest forward-difference growth rate of the abscissa over seeded
/// random unit directions in parameter space.
fn estimate_tau<T: Real>(
    plant: &Plant<T>,
    k: &Controller<T>,
    opts: &CertifyOptions<T>,
) -> Result<T> {
    let base_params = k.parameters();
    let dim = base_params.len();
    let alpha0 = objective(plant, k)?;
    let mut tau = T::infinity();
    for sample in 0..opts.tau_samples {
        let mut rng = ChaCha8Rng::seed_from_u64(
            opts.seed.wrapping_add((sample as u64).wrapping_mul(0x9E3779B97F4A7C15)),
        );
        let d = unit_direction::<T, _>(&mut rng, dim);
        let mut stepped = base_params.clone();
        for (p, &di) in stepped.iter_mut().zip(&d) {
            *p += opts.tau_step * di;
        }
        let alpha = objective(plant, &Controller::from_parameters(k.order(), &stepped))?;
        tau = T::min(tau, (alpha - alpha0) / opts.tau_step);
    }
    Ok(tau)
}

/// Uniform direction on the unit sphere: normalized standard Gaussian,
/// Box-Muller from the generator's uniforms.
pub(crate) fn unit_direction<T: Real, R: Rng>(rng: &mut R, dim: usize) -> Vec<T> {
    loop {
        let v: Vec<T> = (0..dim)
            .map(|_| {
                let u1: f64 = rng.gen::<f64>().max(1e-300);
                let u2: f64 = rng.gen();
                T::of((-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos())
            })
            .collect();
        let n = norm2(&v);
        if n > T::of(1e-6) {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

impl<T: Real> Serialize for ShiftedMap<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(serde::Serialize)]
        struct View {
            z_star: f64,
            degree: usize,
            param_dim: usize,
            matrix: Vec<Vec<f64>>,
        }
        View {
            z_star: self.z_star.as_f64(),
            degree: self.degree,
            param_dim: self.param_dim,
            matrix: rows_f64(&self.matrix),
        }
        .serialize(serializer)
    }
}

fn rows_f64<T: Real>(m: &Mat<T>) -> Vec<Vec<f64>> {
    m.to_rows().into_iter().map(|row| row.into_iter().map(Real::as_f64).collect()).collect()
}

impl<T: Real> Serialize for CertificateReport<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(serde::Serialize)]
        #[serde(bound = "")]
        struct View<'a, T: Real> {
            verdict: Verdict,
            cq_passed: bool,
            cq_kernel_dim: usize,
            interiority_passed: bool,
            c_solution: Option<Vec<[f64; 2]>>,
            strictness_margin: Option<f64>,
            tau_estimate: f64,
            map: &'a ShiftedMap<T>,
            adjoint: Vec<Vec<f64>>,
            notes: &'a [String],
        }
        View {
            verdict: self.verdict,
            cq_passed: self.cq_passed,
            cq_kernel_dim: self.cq_kernel_dim,
            interiority_passed: self.interiority_passed,
            c_solution: self
                .c_solution
                .as_ref()
                .map(|c| c.iter().map(|z| [z.re.as_f64(), z.im.as_f64()]).collect()),
            strictness_margin: self.strictness_margin.map(Real::as_f64),
            tau_estimate: self.tau_estimate.as_f64(),
            map: &self.map,
            adjoint: rows_f64(&self.adjoint),
            notes: &self.notes,
        }
        .serialize(serializer)
    }
}
