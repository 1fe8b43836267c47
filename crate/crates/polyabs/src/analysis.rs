//! Closed-loop time response, real pseudozero sets, and the
//! coefficient-rounding fragility experiment.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::linalg::{norm2, svd, Mat};
use crate::plant::{closed_loop_poly, Controller, Plant};
use crate::poly::Poly;
use crate::scalar::Real;

/// Sampled unit-step response of the closed loop.
#[derive(Debug, Clone)]
pub struct StepResponse<T> {
    /// Sample instants, strictly increasing from zero.
    pub times: Vec<T>,
    /// Output samples, one per instant.
    pub values: Vec<T>,
    /// DC gain of the closed-loop transfer function.
    pub final_value: T,
    /// First sample instant after which the output stays within two percent
    /// of the final value, or `None` if it has not settled by the horizon.
    pub settling_time: Option<T>,
}

impl<T: Real> StepResponse<T> {
    /// Writes `time,value` rows.
    pub fn write_csv<W: std::io::Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "time,value")?;
        for (t, v) in self.times.iter().zip(&self.values) {
            writeln!(w, "{:.16e},{:.16e}", t.as_f64(), v.as_f64())?;
        }
        Ok(())
    }
}

/// Simulates the unit-step response of the negative-feedback loop
/// `T = b x / (a x + b y)` by fixed-step fourth-order integration of its
/// controllable-canonical realization.
///
/// The loop must be stable and have a DC gain; `dt` and `horizon` must be
/// positive with `dt <= horizon`. Settling uses a two percent band around
/// the final value.
pub fn step_response<T: Real>(
    plant: &Plant<T>,
    k: &Controller<T>,
    horizon: T,
    dt: T,
) -> Result<StepResponse<T>> {
    if !(dt > T::zero()) || !(horizon > T::zero()) || !(dt <= horizon) {
        return Err(Error::InvalidOptions(format!(
            "need 0 < dt <= horizon, got dt {:e} and horizon {:e}",
            dt.as_f64(),
            horizon.as_f64()
        )));
    }
    let p = closed_loop_poly(plant, k);
    let abscissa = p.abscissa()?;
    if !(abscissa < T::zero()) {
        return Err(Error::UnstableClosedLoop { abscissa: abscissa.as_f64() });
    }
    let den = p.monic()?.real_coeffs()?;
    let num = (plant.num() * k.x()).real_coeffs()?;
    let n = den.len() - 1;
    if den[0] == T::zero() {
        return Err(Error::NoDcGain);
    }
    let final_value = num[0] / den[0];

    // Strict properness of the plant makes deg num < n, so the realization
    // has no feedthrough term.
    let mut c = vec![T::zero(); n];
    c[..num.len()].copy_from_slice(&num);

    let deriv = |state: &[T], out: &mut [T]| {
        for i in 0..n - 1 {
            out[i] = state[i + 1];
        }
        let mut acc = T::one();
        for j in 0..n {
            acc -= den[j] * state[j];
        }
        out[n - 1] = acc;
    };

    let steps = (horizon / dt * (T::one() + T::of(4.0) * T::epsilon()))
        .floor()
        .as_f64() as usize;
    let mut state = vec![T::zero(); n];
    let mut k1 = vec![T::zero(); n];
    let mut k2 = vec![T::zero(); n];
    let mut k3 = vec![T::zero(); n];
    let mut k4 = vec![T::zero(); n];
    let mut stage = vec![T::zero(); n];

    let mut times = Vec::with_capacity(steps + 1);
    let mut values = Vec::with_capacity(steps + 1);
    let half = T::of(0.5);
    let output = |state: &[T]| c.iter().zip(state).map(|(&ci, &xi)| ci * xi).fold(T::zero(), |a, b| a + b);

    times.push(T::zero());
    values.push(output(&state));
    for i in 1..=steps {
        deriv(&state, &mut k1);
        for j in 0..n {
            stage[j] = state[j] + half * dt * k1[j];
        }
        deriv(&stage, &mut k2);
        for j in 0..n {
            stage[j] = state[j] + half * dt * k2[j];
        }
        deriv(&stage, &mut k3);
        for j in 0..n {
            stage[j] = state[j] + dt * k3[j];
        }
        deriv(&stage, &mut k4);
        let sixth = dt / T::of(6.0);
        for j in 0..n {
            state[j] += sixth * (k1[j] + (k2[j] + k3[j]) * (T::one() + T::one()) + k4[j]);
        }
        times.push(T::of(i as f64) * dt);
        values.push(output(&state));
    }

    let band = T::of(0.02) * final_value.abs();
    let mut last_outside = None;
    for (i, &v) in values.iter().enumerate() {
        if (v - final_value).abs() > band {
            last_outside = Some(i);
        }
    }
    let settling_time = match last_outside {
        None => Some(times[0]),
        Some(i) if i + 1 < times.len() => Some(times[i + 1]),
        Some(_) => None,
    };

    Ok(StepResponse { times, values, final_value, settling_time })
}

/// Which coefficients a pseudozero perturbation may touch.
#[derive(Debug, Clone)]
pub struct PseudozeroOptions {
    /// Allow perturbing the leading coefficient as well. Default true.
    pub perturb_leading: bool,
}

impl Default for PseudozeroOptions {
    fn default() -> Self {
        PseudozeroOptions { perturb_leading: true }
    }
}

/// Distance from `p` to the nearest real polynomial with a root at `z`:
/// the minimum Euclidean norm of a real coefficient perturbation `d` with
/// `p_d(z) = 0`.
pub fn pseudozero_distance<T: Real>(p: &Poly<T>, z: Complex<T>) -> Result<T> {
    Ok(pseudozero_perturbation(p, z, &PseudozeroOptions::default())?.0)
}

/// [`pseudozero_distance`] with explicit support options.
pub fn pseudozero_distance_with<T: Real>(
    p: &Poly<T>,
    z: Complex<T>,
    opts: &PseudozeroOptions,
) -> Result<T> {
    Ok(pseudozero_perturbation(p, z, opts)?.0)
}

/// The minimizing perturbation behind [`pseudozero_distance`], together
/// with its norm.
///
/// Splitting `sum_j d_j z^j = -p(z)` into real and imaginary parts gives a
/// system of at most two real equations in the `d_j`, solved for its
/// minimum-norm solution; for real `z` the single row yields
/// `|p(z)| / ||(1, z, ..., z^n)||`. The returned vector has `degree + 1`
/// entries, the last forced to zero when the leading coefficient is held
/// fixed. If no admissible perturbation reaches `z` (possible only with
/// restricted support), the distance is infinite.
pub fn pseudozero_perturbation<T: Real>(
    p: &Poly<T>,
    z: Complex<T>,
    opts: &PseudozeroOptions,
) -> Result<(T, Vec<T>)> {
    p.real_coeffs()?;
    let degree = p.degree().ok_or(Error::ZeroPolynomial)?;
    if degree == 0 {
        return Err(Error::ConstantPolynomial);
    }
    let cols = if opts.perturb_leading { degree + 1 } else { degree };

    let mut power = Complex::new(T::one(), T::zero());
    let mut re_row = Vec::with_capacity(cols);
    let mut im_row = Vec::with_capacity(cols);
    for _ in 0..cols {
        re_row.push(power.re);
        im_row.push(power.im);
        power = power * z;
    }
    let pz = p.eval(z);

    let (matrix, rhs) = if z.im == T::zero() {
        (Mat::from_rows(&[re_row]), vec![-pz.re])
    } else {
        (Mat::from_rows(&[re_row, im_row]), vec![-pz.re, -pz.im])
    };
    let mut d = svd(&matrix).solve_min_norm(&rhs, T::of(1e-13));

    // With restricted support the system can be inconsistent; report an
    // unreachable point as infinitely far.
    let mut residual = T::zero();
    for r in 0..matrix.rows() {
        let mut acc = -rhs[r];
        for j in 0..cols {
            acc += matrix.at(r, j) * d[j];
        }
        residual = residual.max(acc.abs());
    }
    if residual > T::of(1e-10) * T::max(T::one(), norm2(&rhs)) {
        d = vec![T::zero(); cols];
        d.resize(degree + 1, T::zero());
        return Ok((T::infinity(), d));
    }

    let dist = norm2(&d);
    d.resize(degree + 1, T::zero());
    Ok((dist, d))
}

/// Axis-aligned rectangle in the complex plane.
#[derive(Debug, Clone, Copy)]
pub struct Region<T> {
    pub re_min: T,
    pub re_max: T,
    pub im_min: T,
    pub im_max: T,
}

impl<T: Real> Region<T> {
    pub fn new(re_min: T, re_max: T, im_min: T, im_max: T) -> Result<Self> {
        if !(re_max > re_min) || !(im_max > im_min) {
            return Err(Error::InvalidOptions(
                "region corners must satisfy re_min < re_max and im_min < im_max".into(),
            ));
        }
        Ok(Region { re_min, re_max, im_min, im_max })
    }

    /// Lower-left and upper-right corners.
    pub fn corners(&self) -> (Complex<T>, Complex<T>) {
        (
            Complex::new(self.re_min, self.im_min),
            Complex::new(self.re_max, self.im_max),
        )
    }
}

/// Field of pseudozero distances over a rectangular grid, with a threshold
/// for rendering membership.
#[derive(Debug, Clone)]
pub struct PseudozeroGrid<T: Real> {
    pub region: Region<T>,
    /// Points along the real and imaginary axes respectively.
    pub resolution: (usize, usize),
    /// Row `iy` holds the imaginary level `im_min + iy * step_im`; column
    /// `ix` the real level `re_min + ix * step_re`.
    pub distances: Mat<T>,
    pub epsilon: T,
}

impl<T: Real> PseudozeroGrid<T> {
    /// Grid point at column `ix`, row `iy`.
    pub fn point(&self, ix: usize, iy: usize) -> Complex<T> {
        let (nx, ny) = self.resolution;
        let fx = T::of(ix as f64) / T::of((nx - 1) as f64);
        let fy = T::of(iy as f64) / T::of((ny - 1) as f64);
        Complex::new(
            self.region.re_min + fx * (self.region.re_max - self.region.re_min),
            self.region.im_min + fy * (self.region.im_max - self.region.im_min),
        )
    }

    pub fn is_member(&self, ix: usize, iy: usize) -> bool {
        self.distances.at(iy, ix) <= self.epsilon
    }

    /// Membership raster, indexed `[iy][ix]`.
    pub fn membership(&self) -> Vec<Vec<bool>> {
        let (nx, ny) = self.resolution;
        (0..ny)
            .map(|iy| (0..nx).map(|ix| self.is_member(ix, iy)).collect())
            .collect()
    }

    /// Writes `re,im,distance` rows in row-major order.
    pub fn write_distances_csv<W: std::io::Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "re,im,distance")?;
        let (nx, ny) = self.resolution;
        for iy in 0..ny {
            for ix in 0..nx {
                let z = self.point(ix, iy);
                writeln!(
                    w,
                    "{:.16e},{:.16e},{:.16e}",
                    z.re.as_f64(),
                    z.im.as_f64(),
                    self.distances.at(iy, ix).as_f64()
                )?;
            }
        }
        Ok(())
    }

    /// Writes the membership raster as an ASCII PGM image, top row at
    /// `im_max`, members black on white.
    pub fn write_membership_pgm<W: std::io::Write>(&self, w: &mut W) -> std::io::Result<()> {
        let (nx, ny) = self.resolution;
        writeln!(w, "P2")?;
        writeln!(w, "{nx} {ny}")?;
        writeln!(w, "255")?;
        for iy in (0..ny).rev() {
            let row: Vec<&str> =
                (0..nx).map(|ix| if self.is_member(ix, iy) { "0" } else { "255" }).collect();
            writeln!(w, "{}", row.join(" "))?;
        }
        Ok(())
    }
}

/// Evaluates the pseudozero distance field of `p` over a grid.
pub fn pseudozero_grid<T: Real>(
    p: &Poly<T>,
    region: Region<T>,
    resolution: (usize, usize),
    epsilon: T,
) -> Result<PseudozeroGrid<T>> {
    pseudozero_grid_with(p, region, resolution, epsilon, &PseudozeroOptions::default())
}

/// [`pseudozero_grid`] with explicit support options. Grid points are
/// evaluated independently in a fixed order, so the field is deterministic.
pub fn pseudozero_grid_with<T: Real>(
    p: &Poly<T>,
    region: Region<T>,
    resolution: (usize, usize),
    epsilon: T,
    opts: &PseudozeroOptions,
) -> Result<PseudozeroGrid<T>> {
    let (nx, ny) = resolution;
    if nx < 2 || ny < 2 {
        return Err(Error::InvalidOptions(format!(
            "grid resolution must be at least 2x2, got {nx}x{ny}"
        )));
    }
    if !(epsilon >= T::zero()) {
        return Err(Error::InvalidOptions("epsilon must be nonnegative".into()));
    }
    Region::new(region.re_min, region.re_max, region.im_min, region.im_max)?;

    let mut distances = Mat::zeros(ny, nx);
    let grid = PseudozeroGrid { region, resolution, distances: Mat::zeros(0, 0), epsilon };
    for iy in 0..ny {
        for ix in 0..nx {
            let z = grid.point(ix, iy);
            *distances.at_mut(iy, ix) = pseudozero_perturbation(p, z, opts)?.0;
        }
    }
    Ok(PseudozeroGrid { distances, ..grid })
}

/// Rounds to `digits` significant decimal digits, ties away from zero.
///
/// `digits` must be at least 1; values beyond the precision of the scalar
/// (17 digits for f64) are returned unchanged.
pub fn round_significant<T: Real>(value: T, digits: u32) -> T {
    assert!(digits >= 1, "digits must be at least 1");
    if !value.is_finite() || value == T::zero() || digits >= 17 {
        return value;
    }
    let exponent = value.abs().log10().floor().as_f64() as i32;
    let shift = digits as i32 - 1 - exponent;
    // Split the power of ten so neither factor overflows even near the
    // edges of the exponent range.
    let s1 = T::of(10.0).powi(shift / 2);
    let s2 = T::of(10.0).powi(shift - shift / 2);
    (value * s1 * s2).round() / s1 / s2
}

/// Root movement caused by rounding the controller coefficients.
#[derive(Debug, Clone)]
pub struct FragilityReport<T: Real> {
    pub rounded: Controller<T>,
    pub nominal_roots: Vec<Complex<T>>,
    pub rounded_roots: Vec<Complex<T>>,
    /// Largest distance from a rounded-loop root to the nearest nominal one.
    pub max_displacement: T,
}

/// Rounds each controller coefficient to `digits` significant digits and
/// compares the closed-loop roots before and after. The nominal loop must
/// be stable.
pub fn fragility_experiment<T: Real>(
    plant: &Plant<T>,
    k: &Controller<T>,
    digits: u32,
) -> Result<FragilityReport<T>> {
    if digits == 0 {
        return Err(Error::InvalidOptions("digits must be at least 1".into()));
    }
    let nominal = closed_loop_poly(plant, k).roots()?;
    let abscissa = nominal.abscissa();
    if !(abscissa < T::zero()) {
        return Err(Error::UnstableClosedLoop { abscissa: abscissa.as_f64() });
    }

    let params: Vec<T> =
        k.parameters().iter().map(|&v| round_significant(v, digits)).collect();
    let rounded = Controller::from_parameters(k.order(), &params);
    let perturbed = closed_loop_poly(plant, &rounded).roots()?;

    let max_displacement = perturbed
        .roots
        .iter()
        .map(|r| {
            nominal
                .roots
                .iter()
                .map(|s| (r - s).norm())
                .fold(T::infinity(), T::min)
        })
        .fold(T::zero(), T::max);

    Ok(FragilityReport {
        rounded,
        nominal_roots: nominal.roots,
        rounded_roots: perturbed.roots,
        max_displacement,
    })
}
