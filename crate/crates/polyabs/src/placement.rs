//! Pole placement via the Sylvester system, and the overdetermined
//! root-clustering search for low-order controllers.
//!
//! Matching coefficients in a(s) x(s) + b(s) y(s) = p(s) gives a linear
//! system in the stacked controller coefficients. With n = deg a it is
//! square for m = n - 1 (any monic target of degree n + m is reachable,
//! since coprime a, b make the matrix nonsingular) and overdetermined for
//! m < n - 1, where targets (s - z)^(n+m) are reachable only at special z.
//! Scanning the least-squares residual in z finds those special values;
//! that search is how the benchmark's optimal second-order controller is
//! produced.

use num_complex::Complex;
use serde::ser::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::{norm2, qr_least_squares, Mat};
use crate::plant::{closed_loop_poly, Controller, Plant};
use crate::poly::Poly;
use crate::scalar::Real;

/// Outcome of exact pole placement.
#[derive(Debug, Clone)]
pub struct PlacementResult<T: Real> {
    pub controller: Controller<T>,
    /// Closed loop actually achieved by the solved controller.
    pub achieved: Poly<T>,
    /// Euclidean norm of achieved minus target coefficients.
    pub residual: T,
}

/// How a cluster location relates to the stability boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ClusterStability {
    Stable,
    Marginal,
    Unstable,
}

/// One consistent solution of the overdetermined clustering system.
#[derive(Debug, Clone)]
pub struct ClusterSolution<T: Real> {
    /// Location where all closed-loop poles coincide.
    pub z: T,
    pub controller: Controller<T>,
    /// Relative least-squares residual at z.
    pub consistency_residual: T,
    pub classification: ClusterStability,
}

/// Options for the clustering residual scan.
#[derive(Debug, Clone)]
pub struct ClusterOptions<T> {
    /// Scan interval for z, endpoints included.
    pub bracket: (T, T),
    pub grid_points: usize,
    /// Relative residual below which the system counts as consistent.
    pub consistency_tol: T,
    /// Band around zero inside which z is classified as marginal.
    pub marginal_tol: T,
}

impl<T: Real> Default for ClusterOptions<T> {
    fn default() -> Self {
        ClusterOptions {
            bracket: (T::of(-5.0), T::zero()),
            grid_points: 10_000,
            consistency_tol: T::of(1e-8),
            marginal_tol: T::of(1e-8),
        }
    }
}

/// The Sylvester matrix mapping stacked controller coefficients
/// `(x_0..x_{m-1}, y_0..y_m)` to the closed-loop coefficients of
/// `s^0..s^(n+m-1)`, excluding the fixed monic contribution `a s^m`.
///
/// For the benchmark with m = 3 this is the 7x7 system
///
/// ```text
/// [0 0 0 1 0 0 0] [x0]   [p0    ]
/// [0 0 0 0 1 0 0] [x1]   [p1    ]
/// [2 0 0 0 0 1 0] [x2]   [p2    ]
/// [0 2 0 0 0 0 1] [y0] = [p3    ]
/// [1 0 2 0 0 0 0] [y1]   [p4    ]
/// [0 1 0 0 0 0 0] [y2]   [p5 - 2]
/// [0 0 1 0 0 0 0] [y3]   [p6    ]
/// ```
pub fn sylvester_matrix<T: Real>(a: &Poly<T>, b: &Poly<T>, m: usize) -> Result<Mat<T>> {
    let ac = a.real_coeffs()?;
    let bc = b.real_coeffs()?;
    let n = a.degree().ok_or(Error::ZeroPolynomial)?;
    if b.is_zero() {
        return Err(Error::ZeroPolynomial);
    }
    if b.degree().unwrap_or(0) >= 1 && n >= 1 {
        let zeros = b.roots()?.roots;
        let poles = a.roots()?.roots;
        for z in &zeros {
            for p in &poles {
                if (*z - *p).norm() <= T::of(1e-8) {
                    return Err(Error::SingularSystem(
                        "a and b share a root, so the Sylvester matrix would be singular".into(),
                    ));
                }
            }
        }
    }
    let rows = n + m;
    let mut mat = Mat::zeros(rows, 2 * m + 1);
    // Column for x_i is a(s) s^i; column for y_i is b(s) s^i.
    for i in 0..m {
        for (j, &c) in ac.iter().enumerate() {
            if i + j < rows {
                *mat.at_mut(i + j, i) = c;
            }
        }
    }
    for i in 0..=m {
        for (j, &c) in bc.iter().enumerate() {
            if i + j < rows {
                *mat.at_mut(i + j, m + i) = c;
            }
        }
    }
    Ok(mat)
}

/// Right-hand side for a monic target: target coefficients below the leading
/// term, minus the fixed contribution of `a(s) s^m`.
fn placement_rhs<T: Real>(a: &Poly<T>, m: usize, target: &Poly<T>) -> Vec<T> {
    let n = a.degree().expect("nonzero");
    let shifted_lead = Poly::from_f64s(&{
        let mut v = vec![0.0; m];
        v.push(1.0);
        v
    });
    let fixed = a * &shifted_lead;
    (0..n + m).map(|i| (target.coeff(i) - fixed.coeff(i)).re).collect()
}

/// Solves for the controller achieving a desired monic closed-loop
/// polynomial. Requires the square-or-richer regime m >= deg den - 1.
pub fn place_poles<T: Real>(
    plant: &Plant<T>,
    m: usize,
    target: &Poly<T>,
) -> Result<PlacementResult<T>> {
    let n = plant.order();
    if m + 1 < n {
        return Err(Error::InvalidOptions(format!(
            "order {m} leaves the Sylvester system overdetermined; exact placement needs \
             m >= {} (use cluster_all_poles below that)",
            n - 1
        )));
    }
    let degree = target.degree().ok_or(Error::ZeroPolynomial)?;
    if degree != n + m {
        return Err(Error::DegreeMismatch { expected: n + m, got: degree });
    }
    let tc = target.real_coeffs()?;
    if (tc[degree] - T::one()).abs() > T::of(1e-12) {
        return Err(Error::InvalidOptions(format!(
            "target must be monic, leading coefficient is {}",
            tc[degree].as_f64()
        )));
    }

    let mat = sylvester_matrix(plant.den(), plant.num(), m)?;
    let rhs = placement_rhs(plant.den(), m, target);
    let target_norm = norm2(&tc);
    let mut solution = if mat.rows() >= mat.cols() {
        let ls = qr_least_squares(&mat, &rhs, T::of(1e-12));
        if ls.rank < mat.cols() {
            return Err(Error::SingularSystem(format!(
                "Sylvester system has rank {} of {}",
                ls.rank,
                mat.cols()
            )));
        }
        ls.solution
    } else {
        // m > n - 1: a solution family exists; take the minimum-norm one.
        crate::linalg::svd(&mat).solve_min_norm(&rhs, T::of(1e-12))
    };
    // Iterative refinement. A placed root cluster splits like the 7th root
    // of the coefficient error, so the solve must be accurate to working
    // precision, not merely condition-number accurate.
    for _ in 0..2 {
        let mut defect = mat.matvec(&solution);
        for (d, &r) in defect.iter_mut().zip(&rhs) {
            *d = r - *d;
        }
        let correction = if mat.rows() >= mat.cols() {
            qr_least_squares(&mat, &defect, T::of(1e-12)).solution
        } else {
            crate::linalg::svd(&mat).solve_min_norm(&defect, T::of(1e-12))
        };
        for (s, c) in solution.iter_mut().zip(correction) {
            *s += c;
        }
    }
    let controller = Controller::from_parameters(m, &solution);
    let achieved = closed_loop_poly(plant, &controller);
    let diff = &achieved - target;
    let residual = norm2(&(0..=degree).map(|i| diff.coeff(i).re).collect::<Vec<_>>());
    if residual > T::of(1e-8) * target_norm {
        return Err(Error::SingularSystem(format!(
            "placement residual {:.3e} exceeds 1e-8 of the target norm",
            residual.as_f64()
        )));
    }
    Ok(PlacementResult { controller, achieved, residual })
}

/// Finds every real z in the scan bracket at which all closed-loop poles of
/// the order-m feedback loop can be clustered, in the overdetermined regime
/// m < deg den - 1.
pub fn cluster_all_poles<T: Real>(plant: &Plant<T>, m: usize) -> Result<Vec<ClusterSolution<T>>> {
    cluster_all_poles_with(plant, m, &ClusterOptions::default())
}

pub fn cluster_all_poles_with<T: Real>(
    plant: &Plant<T>,
    m: usize,
    opts: &ClusterOptions<T>,
) -> Result<Vec<ClusterSolution<T>>> {
    let n = plant.order();
    if m + 1 >= n {
        return Err(Error::NotOverdetermined { order: m, min_placement_order: n - 1 });
    }
    let (lo, hi) = opts.bracket;
    if !(lo < hi) || opts.grid_points < 3 {
        return Err(Error::InvalidOptions(
            "cluster scan needs bracket.0 < bracket.1 and at least 3 grid points".into(),
        ));
    }
    let mat = sylvester_matrix(plant.den(), plant.num(), m)?;
    let degree = n + m;

    // Relative least-squares residual of the clustering system at z.
    let residual_at = |z: T| -> (T, Vec<T>) {
        let target = Poly::linear(Complex::new(z, T::zero())).powu(degree);
        let rhs = placement_rhs(plant.den(), m, &target);
        let tc: Vec<T> = (0..=degree).map(|i| target.coeff(i).re).collect();
        let ls = qr_least_squares(&mat, &rhs, T::of(1e-12));
        (ls.residual_norm / norm2(&tc), ls.solution)
    };

    let steps = opts.grid_points - 1;
    let width = hi - lo;
    let grid_z = |i: usize| {
        lo + width * T::from_usize(i).expect("small") / T::from_usize(steps).expect("small")
    };
    let r: Vec<T> = (0..opts.grid_points).map(|i| residual_at(grid_z(i)).0).collect();

    // Local minima of the sampled residual, candidates for exact zeros.
    let mut candidates: Vec<(T, T)> = Vec::new();
    for i in 0..opts.grid_points {
        let left_ok = i == 0 || r[i] <= r[i - 1];
        let right_ok = i == steps || r[i] <= r[i + 1];
        if !(left_ok && right_ok) {
            continue;
        }
        let a = if i == 0 { grid_z(0) } else { grid_z(i - 1) };
        let b = if i == steps { grid_z(steps) } else { grid_z(i + 1) };
        let (z, rz) = golden_min(|z| residual_at(z).0, a, b);
        candidates.push((z, rz));
    }

    candidates.retain(|&(_, rz)| rz < opts.consistency_tol);
    candidates.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite z"));
    let mut out: Vec<ClusterSolution<T>> = Vec::new();
    for (z, rz) in candidates {
        if let Some(last) = out.last_mut() {
            if (z - last.z).abs() < T::of(1e-6) {
                if rz < last.consistency_residual {
                    *last = make_solution(m, z, rz, residual_at(z).1, opts.marginal_tol);
                }
                continue;
            }
        }
        out.push(make_solution(m, z, rz, residual_at(z).1, opts.marginal_tol));
    }
    Ok(out)
}

fn make_solution<T: Real>(
    m: usize,
    z: T,
    rz: T,
    params: Vec<T>,
    marginal_tol: T,
) -> ClusterSolution<T> {
    let classification = if z < -marginal_tol {
        ClusterStability::Stable
    } else if z > marginal_tol {
        ClusterStability::Unstable
    } else {
        ClusterStability::Marginal
    };
    ClusterSolution {
        z,
        controller: Controller::from_parameters(m, &params),
        consistency_residual: rz,
        classification,
    }
}

/// Golden-section minimization of a unimodal-near-the-minimum function.
/// The residual is nonnegative and V-shaped at its zeros, so interval
/// shrinking (not sign bisection) is the right polish.
fn golden_min<T: Real, F: Fn(T) -> T>(f: F, mut a: T, mut b: T) -> (T, T) {
    let phi = T::of(0.618_033_988_749_894_9);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..90 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = f(d);
        }
        if (b - a).abs() <= T::epsilon() * (T::one() + a.abs() + b.abs()) {
            break;
        }
    }
    let mid = (a + b) / (T::one() + T::one());
    (mid, f(mid))
}

impl<T: Real> Serialize for PlacementResult<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(serde::Serialize)]
        #[serde(bound = "")]
        struct View<'a, T: Real> {
            controller: &'a Controller<T>,
            achieved: &'a Poly<T>,
            residual: f64,
        }
        View {
            controller: &self.controller,
            achieved: &self.achieved,
            residual: self.residual.as_f64(),
        }
        .serialize(serializer)
    }
}

impl<T: Real> Serialize for ClusterSolution<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(serde::Serialize)]
        #[serde(bound = "")]
        struct View<'a, T: Real> {
            z: f64,
            controller: &'a Controller<T>,
            consistency_residual: f64,
            classification: ClusterStability,
        }
        View {
            z: self.z.as_f64(),
            controller: &self.controller,
            consistency_residual: self.consistency_residual.as_f64(),
            classification: self.classification,
        }
        .serialize(serializer)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plant::objective;

    type P = Poly<f64>;

    /// sqrt(15)/5 to full precision; the benchmark's optimal cluster point
    /// is -ZSTAR. (sqrt(15) = 3.872983346207417.)
    const ZSTAR: f64 = 0.7745966692414834;

    /// Placement controller for target (s - z)^7 on the benchmark, m = 3:
    /// x(s) = (-35 z^3 + 14 z) + (21 z^2 - 2) s - 7 z s^2 + s^3,
    /// y(s) = -z^7 + 7 z^6 s + (-21 z^5 + 70 z^3 - 28 z) s^2
    ///        + (35 z^4 - 42 z^2 + 4) s^3.
    fn third_order_placement_coeffs(z: f64) -> ([f64; 4], [f64; 4]) {
        (
            [-35.0 * z.powi(3) + 14.0 * z, 21.0 * z * z - 2.0, -7.0 * z, 1.0],
            [
                -z.powi(7),
                7.0 * z.powi(6),
                -21.0 * z.powi(5) + 70.0 * z.powi(3) - 28.0 * z,
                35.0 * z.powi(4) - 42.0 * z * z + 4.0,
            ],
        )
    }

    #[test]
    fn benchmark_sylvester_matrix_matches_display() {
        let plant = Plant::<f64>::benchmark();
        let mat = sylvester_matrix(plant.den(), plant.num(), 3).unwrap();
        let expect = [
            [0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0],
            [2.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0],
            [0.0, 2.0, 0.0, 0.0, 0.0, 0.0, 1.0],
            [1.0, 0.0, 2.0, 0.0, 0.0, 0.0, 0.0],
            [0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0],
        ];
        assert_eq!((mat.rows(), mat.cols()), (7, 7));
        for i in 0..7 {
            for j in 0..7 {
                assert_eq!(mat.at(i, j), expect[i][j], "entry ({i},{j})");
            }
        }
        // Coprime a, b make it nonsingular; Laplace expansion of this
        // particular matrix gives exactly 1.
        let det = crate::linalg::lu_det(&mat);
        assert!(det.abs() > 1e-8, "det = {det}");
        assert!((det - 1.0).abs() < 1e-12, "det = {det}");
    }

    #[test]
    fn trivial_sylvester_matrix() {
        let a = P::from_f64s(&[0.0, 1.0]);
        let b = P::one();
        let mat = sylvester_matrix(&a, &b, 0).unwrap();
        assert_eq!((mat.rows(), mat.cols()), (1, 1));
        assert_eq!(mat.at(0, 0), 1.0);
    }

    #[test]
    fn sylvester_rejects_shared_roots() {
        let a = P::from_f64s(&[2.0, 3.0, 1.0]); // (s + 1)(s + 2)
        let b = P::from_f64s(&[1.0, 1.0]); // s + 1
        assert!(matches!(sylvester_matrix(&a, &b, 2), Err(Error::SingularSystem(_))));
    }

    #[test]
    fn placement_reproduces_closed_form() {
        let plant = Plant::benchmark();
        for z in [-1.0, -2.0, -0.5] {
            let target = P::linear(num_complex::Complex::new(z, 0.0)).powu(7);
            let result = place_poles(&plant, 3, &target).unwrap();
            let (x, y) = third_order_placement_coeffs(z);
            for (j, &c) in x.iter().enumerate() {
                let got = result.controller.x().coeff(j).re;
                assert!((got - c).abs() <= 1e-9 * c.abs().max(1.0), "z={z} x[{j}]: {got} vs {c}");
            }
            for (j, &c) in y.iter().enumerate() {
                let got = result.controller.y().coeff(j).re;
                assert!((got - c).abs() <= 1e-9 * c.abs().max(1.0), "z={z} y[{j}]: {got} vs {c}");
            }
            assert!(result.residual < 1e-8 * norm2(&target.real_coeffs().unwrap()));
        }
    }

    #[test]
    fn placement_at_minus_one_is_explicit() {
        let plant = Plant::benchmark();
        let target = P::linear(num_complex::Complex::new(-1.0, 0.0)).powu(7);
        let result = place_poles(&plant, 3, &target).unwrap();
        let expect_x = [21.0, 19.0, 7.0, 1.0];
        for (j, &c) in expect_x.iter().enumerate() {
            assert!((result.controller.x().coeff(j).re - c).abs() < 1e-9, "x[{j}]");
        }
        // (s + 1)^7 has binomial coefficients.
        let binom = [1.0, 7.0, 21.0, 35.0, 35.0, 21.0, 7.0, 1.0];
        for (j, &c) in binom.iter().enumerate() {
            assert!((result.achieved.coeff(j).re - c).abs() < 1e-9, "achieved[{j}]");
        }
    }

    #[test]
    fn trivial_placement() {
        let plant = Plant::new(P::one(), P::from_f64s(&[0.0, 1.0])).unwrap();
        let result = place_poles(&plant, 0, &P::from_f64s(&[5.0, 1.0])).unwrap();
        assert_eq!(result.controller.order(), 0);
        assert!((result.controller.y().coeff(0).re - 5.0).abs() < 1e-12);
    }

    #[test]
    fn placement_rejects_bad_targets() {
        let plant = Plant::<f64>::benchmark();
        let wrong_degree = P::linear(num_complex::Complex::new(-1.0, 0.0)).powu(6);
        assert!(matches!(
            place_poles(&plant, 3, &wrong_degree),
            Err(Error::DegreeMismatch { expected: 7, got: 6 })
        ));
        let not_monic = P::linear(num_complex::Complex::new(-1.0, 0.0)).powu(7).scale_real(2.0);
        assert!(matches!(place_poles(&plant, 3, &not_monic), Err(Error::InvalidOptions(_))));
        let target = P::linear(num_complex::Complex::new(-1.0, 0.0)).powu(6);
        assert!(matches!(place_poles(&plant, 2, &target), Err(Error::InvalidOptions(_))));
    }

    #[test]
    fn cluster_rejects_square_regime() {
        let plant = Plant::<f64>::benchmark();
        let err = cluster_all_poles(&plant, 3).unwrap_err();
        assert!(matches!(
            err,
            Error::NotOverdetermined { order: 3, min_placement_order: 3 }
        ));
        assert!(err.to_string().contains("place_poles"));
    }

    #[test]
    fn benchmark_cluster_solutions() {
        let plant = Plant::<f64>::benchmark();
        let solutions = cluster_all_poles(&plant, 2).unwrap();
        assert_eq!(solutions.len(), 2, "{solutions:?}");

        let stable = &solutions[0];
        assert_eq!(stable.classification, ClusterStability::Stable);
        assert!((stable.z + ZSTAR).abs() < 1e-10, "z = {}", stable.z);
        assert!(stable.consistency_residual < 1e-10);
        // Exact coefficients: x0 = 7, x1 = 6 sqrt(15)/5, y0 = 27/125,
        // y1 = 54 sqrt(15)/125, y2 = -43/5.
        let s15 = 15.0_f64.sqrt();
        let expect = [7.0, 6.0 * s15 / 5.0, 27.0 / 125.0, 54.0 * s15 / 125.0, -43.0 / 5.0];
        let got = stable.controller.parameters();
        for (g, e) in got.iter().zip(&expect) {
            assert!((g - e).abs() < 1e-10, "{g} vs {e}");
        }

        let marginal = &solutions[1];
        assert_eq!(marginal.classification, ClusterStability::Marginal);
        assert!(marginal.z.abs() < 1e-8, "z = {}", marginal.z);
    }

    #[test]
    fn cluster_controller_reaches_the_sextic() {
        let plant = Plant::<f64>::benchmark();
        let solutions = cluster_all_poles(&plant, 2).unwrap();
        let stable = &solutions[0];
        let p = closed_loop_poly(&plant, &stable.controller);
        let s15 = 15.0_f64.sqrt();
        let want = [
            27.0 / 125.0,
            54.0 * s15 / 125.0,
            27.0 / 5.0,
            12.0 * s15 / 5.0,
            9.0,
            6.0 * s15 / 5.0,
            1.0,
        ];
        for (j, &c) in want.iter().enumerate() {
            assert!(
                (p.coeff(j).re - c).abs() < 1e-12 * c.abs().max(1.0),
                "coefficient {j}: {} vs {c}",
                p.coeff(j).re
            );
        }
    }

    #[test]
    fn cluster_zero_set_in_wide_bracket() {
        let plant = Plant::<f64>::benchmark();
        let opts = ClusterOptions { bracket: (-5.0, 5.0), ..ClusterOptions::default() };
        let solutions = cluster_all_poles_with(&plant, 2, &opts).unwrap();
        // The consistency condition 5 z^3 = 3 z has exactly the real roots
        // {0, +-sqrt(15)/5}.
        assert_eq!(solutions.len(), 3, "{solutions:?}");
        assert!((solutions[0].z + ZSTAR).abs() < 1e-8);
        assert!(solutions[1].z.abs() < 1e-8);
        assert!((solutions[2].z - ZSTAR).abs() < 1e-8);
        assert_eq!(solutions[2].classification, ClusterStability::Unstable);
    }

    #[test]
    fn unboundedness_witness() {
        let plant = Plant::benchmark();
        for z in [-1.0, -2.0, -4.0, -8.0] {
            let target = P::linear(num_complex::Complex::new(z, 0.0)).powu(7);
            let result = place_poles(&plant, 3, &target).unwrap();
            let alpha = objective(&plant, &result.controller).unwrap();
            // The placed 7-fold cluster splits by about residual^(1/7).
            assert!(alpha <= z + 0.15, "z = {z}, alpha = {alpha}");
        }
    }

    #[test]
    fn placement_round_trip_random_z() {
        let plant = Plant::benchmark();
        let mut state = 0x9E3779B97F4A7C15u64;
        for _ in 0..25 {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            let z = -3.0 + 2.9 * (state >> 11) as f64 / (1u64 << 53) as f64;
            let target = P::linear(num_complex::Complex::new(z, 0.0)).powu(7);
            let result = place_poles(&plant, 3, &target).unwrap();
            for j in 0..=7 {
                let t = target.coeff(j).re;
                let a = result.achieved.coeff(j).re;
                assert!((a - t).abs() <= 1e-9 * t.abs().max(1.0), "z={z} coeff {j}");
            }
        }
    }
}
