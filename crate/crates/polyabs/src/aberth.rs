//! Aberth-Ehrlich simultaneous root iteration.
//!
//! Operates on monic coefficient slices with a nonzero constant term; the
//! caller (`Poly::roots`) handles normalization, deflation of exact zero
//! roots and residual/cluster reporting.

use num_complex::Complex;

use crate::scalar::Real;

/// Result of a failed iteration: best iterate reached and iterations spent.
#[derive(Debug)]
pub(crate) struct Unconverged<T> {
    pub best: Vec<Complex<T>>,
    pub iterations: usize,
}

/// Evaluates `p` by Horner and a running rounding-error bound on the result.
///
/// The bound is a standard forward-error majorant: eps * (2d + 1) * p~(|z|),
/// with p~ the polynomial of absolute coefficient values. A value whose
/// magnitude falls below it is indistinguishable from zero at this precision.
pub(crate) fn horner_with_bound<T: Real>(coeffs: &[Complex<T>], z: Complex<T>) -> (Complex<T>, T) {
    let az = z.norm();
    let last = coeffs.len() - 1;
    let mut value = coeffs[last];
    let mut majorant = value.norm();
    for j in (0..last).rev() {
        value = value * z + coeffs[j];
        majorant = majorant * az + coeffs[j].norm();
    }
    let d = T::from_usize(last).expect("degree fits in scalar");
    let two = T::one() + T::one();
    let bound = T::epsilon() * (two * d + T::one()) * majorant + T::min_positive_value();
    (value, bound)
}

fn horner<T: Real>(coeffs: &[Complex<T>], z: Complex<T>) -> Complex<T> {
    let mut value = coeffs[coeffs.len() - 1];
    for j in (0..coeffs.len() - 1).rev() {
        value = value * z + coeffs[j];
    }
    value
}

/// All roots of a monic polynomial of degree >= 2 with nonzero constant term.
///
/// Initial guesses sit on a circle of radius `1 + max |c_i|` (a root bound
/// for monic polynomials), rotated by 0.4 rad and slightly spiralled so no
/// guess lands on a symmetry axis of the root set.
///
/// Termination: a root freezes once its residual drops below the rounding
/// floor of Horner evaluation (essential near multiple roots, where the
/// correction step never gets small), and the iteration stops when every
/// root is frozen or its relative correction fell below `correction_tol`.
pub(crate) fn aberth_roots<T: Real>(
    monic: &[Complex<T>],
    max_iterations: usize,
    correction_tol: T,
) -> Result<Vec<Complex<T>>, Unconverged<T>> {
    let d = monic.len() - 1;
    debug_assert!(d >= 2);
    debug_assert!(monic[d] == Complex::new(T::one(), T::zero()));
    debug_assert!(monic[0].norm() > T::zero());

    let radius = T::one() + monic[..d].iter().map(|c| c.norm()).fold(T::zero(), T::max);
    let deriv: Vec<Complex<T>> = (1..=d)
        .map(|j| monic[j] * Complex::new(T::from_usize(j).expect("small"), T::zero()))
        .collect();

    let tau = T::of(std::f64::consts::TAU);
    let mut z: Vec<Complex<T>> = (0..d)
        .map(|k| {
            let frac = T::from_usize(k).expect("small") / T::from_usize(d).expect("small");
            let theta = tau * frac + T::of(0.4);
            let r = radius * (T::one() + T::of(0.02) * frac);
            Complex::from_polar(r, theta)
        })
        .collect();
    let mut frozen = vec![false; d];

    for _iter in 0..max_iterations {
        let mut all_small = true;
        for i in 0..d {
            if frozen[i] {
                continue;
            }
            let (pv, floor) = horner_with_bound(monic, z[i]);
            if pv.norm() <= T::of(4.0) * floor {
                frozen[i] = true;
                continue;
            }
            let pd = horner(&deriv, z[i]);
            if pd.norm() == T::zero() {
                // Stationary point of p; nudge off it.
                let k = T::from_usize(i + 1).expect("small");
                z[i] = z[i] + Complex::from_polar(radius * T::of(1e-8) * k, tau * k);
                all_small = false;
                continue;
            }
            let newton = pv / pd;
            let mut repulsion = Complex::new(T::zero(), T::zero());
            let mut collided = false;
            for j in 0..d {
                if j == i {
                    continue;
                }
                let diff = z[i] - z[j];
                if diff.norm() == T::zero() {
                    collided = true;
                    break;
                }
                repulsion = repulsion + diff.inv();
            }
            if collided {
                let k = T::from_usize(i + 1).expect("small");
                z[i] = z[i] + Complex::from_polar(radius * T::of(1e-9) * k, tau * k);
                all_small = false;
                continue;
            }
            let denom = Complex::new(T::one(), T::zero()) - newton * repulsion;
            let step = if denom.norm() < T::of(1e-30) { newton } else { newton / denom };
            z[i] = z[i] - step;
            if step.norm() >= correction_tol * (T::one() + z[i].norm()) {
                all_small = false;
            }
        }
        if all_small {
            return Ok(z);
        }
    }
    Err(Unconverged { best: z, iterations: max_iterations })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn quadratic_roots() {
        // s^2 + 1
        let roots = aberth_roots(&[c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)], 500, 1e-12).unwrap();
        let mut ims: Vec<f64> = roots.iter().map(|z| z.im).collect();
        ims.sort_by(f64::total_cmp);
        assert!(roots.iter().all(|z| z.re.abs() < 1e-12));
        assert!((ims[0] + 1.0).abs() < 1e-12);
        assert!((ims[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn wilkinson_like_separated_roots() {
        // (s-1)(s-2)...(s-6), coefficients built by expansion.
        let mut coeffs = vec![c(1.0, 0.0)];
        for r in 1..=6 {
            let mut next = vec![c(0.0, 0.0); coeffs.len() + 1];
            for (j, &cf) in coeffs.iter().enumerate() {
                next[j + 1] += cf;
                next[j] -= cf * c(r as f64, 0.0);
            }
            coeffs = next;
        }
        let mut roots = aberth_roots(&coeffs, 500, 1e-12).unwrap();
        roots.sort_by(|a, b| a.re.total_cmp(&b.re));
        for (k, z) in roots.iter().enumerate() {
            assert!((z.re - (k + 1) as f64).abs() < 1e-9, "root {z}");
            assert!(z.im.abs() < 1e-9);
        }
    }

    #[test]
    fn iteration_cap_reports_best_iterate() {
        let err = aberth_roots(
            &[c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0), c(4.0, 0.0), c(5.0, 0.0), c(1.0, 0.0)],
            1,
            1e-12,
        )
        .unwrap_err();
        assert_eq!(err.iterations, 1);
        assert_eq!(err.best.len(), 5);
    }
}
