//! Gradient sampling for the closed-loop abscissa.
//!
//! The abscissa is nonsmooth exactly where interesting things happen: local
//! minimizers cluster all roots, and there the gradient does not exist and
//! nearby gradients are unbounded. Gradient sampling sidesteps this by
//! bundling gradients from random points in a shrinking ball around the
//! iterate and descending along the minimum-norm vector of their convex
//! hull; at points where the active root is simple (almost every point),
//! the gradient comes from the implicit function theorem.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::certificate::unit_direction;
use crate::error::{Error, Result};
use crate::linalg::{dot, norm2};
use crate::plant::{closed_loop_poly, objective, Controller, Plant};
use crate::scalar::Real;

#[derive(Debug, Clone)]
pub struct OptOptions<T> {
    pub max_iters: usize,
    /// Random points drawn per iteration, on top of the iterate itself.
    pub sample_count: usize,
    /// Sampling radii, worked through in order as progress stalls.
    pub radius_schedule: Vec<T>,
    /// Descent stops when the minimum-norm hull vector drops below this at
    /// the final radius.
    pub termination_tol: T,
    pub seed: u64,
}

impl<T: Real> OptOptions<T> {
    /// Defaults scaled to the parameter dimension 2m + 1.
    pub fn default_for(param_dim: usize) -> Self {
        OptOptions {
            max_iters: 600,
            sample_count: 2 * param_dim,
            radius_schedule: (0..12).map(|k| T::of(0.1 * 0.5f64.powi(k))).collect(),
            termination_tol: T::of(1e-6),
            seed: 42,
        }
    }

    fn validate(&self, param_dim: usize) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::InvalidOptions("max_iters must be positive".into()));
        }
        if self.sample_count < param_dim + 1 {
            return Err(Error::InvalidOptions(format!(
                "sample_count {} below parameter dimension + 1 = {}",
                self.sample_count,
                param_dim + 1
            )));
        }
        if self.radius_schedule.is_empty() {
            return Err(Error::InvalidOptions("radius schedule is empty".into()));
        }
        let mut prev = T::infinity();
        for &r in &self.radius_schedule {
            if !(r > T::zero()) || !(r < prev) {
                return Err(Error::InvalidOptions(
                    "radii must be strictly decreasing and positive".into(),
                ));
            }
            prev = r;
        }
        if !(self.termination_tol > T::zero()) {
            return Err(Error::InvalidOptions("termination_tol must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OptStatus {
    Converged,
    IterationCap,
    Stalled,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct TracePoint<T> {
    pub iteration: usize,
    pub objective: T,
    pub radius: T,
}

#[derive(Debug, Clone)]
pub struct OptResult<T: Real> {
    pub controller: Controller<T>,
    pub objective: T,
    pub trace: Vec<TracePoint<T>>,
    pub status: OptStatus,
}

/// Gradient of the abscissa at a controller whose active root is simple.
///
/// With z the rightmost closed-loop root and p the closed-loop polynomial,
/// each parameter enters affinely through a basis polynomial e_j (den s^i
/// for x_i, num s^i for y_i), and the active root moves at rate
/// -e_j(z)/p'(z); the abscissa picks up the real part. A conjugate active
/// pair gives the same value through either member.
pub fn abscissa_gradient<T: Real>(plant: &Plant<T>, k: &Controller<T>) -> Result<Vec<T>> {
    let p = closed_loop_poly(plant, k);
    let roots = p.roots()?;
    let z = *roots
        .roots
        .iter()
        .max_by(|a, b| {
            (a.re, a.im)
                .partial_cmp(&(b.re, b.im))
                .expect("root parts are finite")
        })
        .expect("closed loop has positive degree");

    let degree = p.degree().expect("nonzero");
    let (_, dp) = p.eval_and_derivative(z)?;
    let scale = p.max_coeff_norm() * (T::one() + z.norm()).powi(degree as i32 - 1);
    let threshold = T::of(1e-6) * scale;
    if dp.norm() <= threshold {
        return Err(Error::NonsmoothPoint {
            derivative: dp.norm().as_f64(),
            threshold: threshold.as_f64(),
        });
    }

    let m = k.order();
    let den_z = plant.den().eval(z);
    let num_z = plant.num().eval(z);
    let mut gradient = Vec::with_capacity(2 * m + 1);
    let mut z_pow = num_complex::Complex::new(T::one(), T::zero());
    let mut x_powers = Vec::with_capacity(m + 1);
    for _ in 0..=m {
        x_powers.push(z_pow);
        z_pow = z_pow * z;
    }
    for i in 0..m {
        gradient.push((-(den_z * x_powers[i]) / dp).re);
    }
    for i in 0..=m {
        gradient.push((-(num_z * x_powers[i]) / dp).re);
    }
    Ok(gradient)
}

/// Minimum-norm point of the convex hull of a finite point set, by Wolfe's
/// corral algorithm. Small bundles only; solves a tiny equality-constrained
/// least-squares system per corral update.
pub(crate) fn min_norm_in_hull<T: Real>(points: &[Vec<T>]) -> Vec<T> {
    assert!(!points.is_empty());
    let start = points
        .iter()
        .enumerate()
        .min_by(|a, b| norm2(a.1).partial_cmp(&norm2(b.1)).expect("finite"))
        .map(|(i, _)| i)
        .expect("nonempty");
    let mut corral = vec![start];
    let mut weights: Vec<T> = vec![T::one()];
    let mut x = points[start].clone();
    let eps = T::of(1e-12);

    for _ in 0..200 {
        let xx = dot(&x, &x);
        let (j_best, j_val) = points
            .iter()
            .enumerate()
            .map(|(j, g)| (j, dot(&x, g)))
            .min_by(|a, b| a.1.partial_cmp(&b.1).expect("finite"))
            .expect("nonempty");
        if j_val >= xx - eps * (T::one() + xx) || corral.contains(&j_best) {
            break;
        }
        corral.push(j_best);
        weights.push(T::zero());

        loop {
            let mu = match affine_min_norm(points, &corral) {
                Some(mu) => mu,
                None => return x,
            };
            if mu.iter().all(|&w| w >= eps) {
                weights = mu;
                break;
            }
            let mut theta = T::one();
            for (i, (&w, &m)) in weights.iter().zip(&mu).enumerate() {
                let _ = i;
                if m < eps && w > m {
                    theta = T::min(theta, w / (w - m));
                }
            }
            for (w, &m) in weights.iter_mut().zip(&mu) {
                *w = (T::one() - theta) * *w + theta * m;
            }
            let keep: Vec<bool> = weights.iter().map(|&w| w > eps).collect();
            if keep.iter().filter(|&&k| k).count() == 0 {
                return x;
            }
            let mut idx = 0;
            corral.retain(|_| {
                let k = keep[idx];
                idx += 1;
                k
            });
            let mut idx = 0;
            weights.retain(|_| {
                let k = keep[idx];
                idx += 1;
                k
            });
        }

        let dim = x.len();
        x = vec![T::zero(); dim];
        for (&ci, &w) in corral.iter().zip(&weights) {
            for (xi, &gi) in x.iter_mut().zip(&points[ci]) {
                *xi += w * gi;
            }
        }
    }
    x
}

/// Affine minimizer of ||sum w_i g_i|| subject to sum w_i = 1 (weights of
/// either sign), via the bordered normal equations. None when the system
/// is numerically singular.
fn affine_min_norm<T: Real>(points: &[Vec<T>], corral: &[usize]) -> Option<Vec<T>> {
    let k = corral.len();
    let mut sys = crate::linalg::Mat::zeros(k + 1, k + 1);
    for a in 0..k {
        for b in 0..k {
            *sys.at_mut(a, b) = T::of(2.0) * dot(&points[corral[a]], &points[corral[b]]);
        }
        *sys.at_mut(a, k) = -T::one();
        *sys.at_mut(k, a) = T::one();
    }
    let mut rhs = vec![T::zero(); k + 1];
    rhs[k] = T::one();
    let sol = crate::linalg::lu_solve(&sys, &rhs).ok()?;
    Some(sol[..k].to_vec())
}

/// Minimizes the closed-loop abscissa over order-m controllers from a
/// starting point, by gradient sampling with a shrinking radius schedule.
///
/// Per iteration: bundle the gradient at the iterate (skipped when the
/// active root is multiple) with gradients at `sample_count` points drawn
/// uniformly from the current radius ball, take the minimum-norm convex
/// combination g, and backtrack along -g/||g|| from an initial step of one
/// radius under an Armijo condition with parameter 1e-4. The schedule
/// advances when ||g|| falls below the current radius (the bundle is then
/// stationary at that sampling scale) or when the line search fails; at the
/// final radius the run terminates, with status converged only if ||g||
/// dropped below termination_tol there.
pub fn minimize_abscissa<T: Real>(
    plant: &Plant<T>,
    m: usize,
    start: &Controller<T>,
    opts: &OptOptions<T>,
) -> Result<OptResult<T>> {
    if start.order() != m {
        return Err(Error::InvalidOptions(format!(
            "start controller has order {}, expected {m}",
            start.order()
        )));
    }
    let dim = 2 * m + 1;
    opts.validate(dim)?;

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut params = start.parameters();
    let mut f = objective(plant, start).map_err(|e| Error::ObjectiveEvaluation {
        iteration: 0,
        source: Box::new(e),
    })?;

    let mut radius_index = 0;
    let last_radius = opts.radius_schedule.len() - 1;
    let mut trace = vec![TracePoint {
        iteration: 0,
        objective: f,
        radius: opts.radius_schedule[0],
    }];
    let mut status = OptStatus::IterationCap;

    let eval = |p: &[T], iter: usize| -> Result<T> {
        objective(plant, &Controller::from_parameters(m, p)).map_err(|e| {
            Error::ObjectiveEvaluation { iteration: iter, source: Box::new(e) }
        })
    };

    for iteration in 1..=opts.max_iters {
        let radius = opts.radius_schedule[radius_index];

        let mut bundle = Vec::with_capacity(opts.sample_count + 1);
        if let Ok(g) = filter_nonsmooth(
            abscissa_gradient(plant, &Controller::from_parameters(m, &params)),
            iteration,
        )? {
            bundle.push(g);
        }
        for _ in 0..opts.sample_count {
            let dir = unit_direction::<T, _>(&mut rng, dim);
            let scale = radius * T::of(rng.gen::<f64>().powf(1.0 / dim as f64));
            let sample: Vec<T> =
                params.iter().zip(&dir).map(|(&p, &d)| p + scale * d).collect();
            if let Ok(g) = filter_nonsmooth(
                abscissa_gradient(plant, &Controller::from_parameters(m, &sample)),
                iteration,
            )? {
                bundle.push(g);
            }
        }

        if let Some(g) = (!bundle.is_empty()).then(|| min_norm_in_hull(&bundle)) {
            let g_norm = norm2(&g);
            if g_norm <= opts.termination_tol.max(radius) {
                if radius_index == last_radius {
                    status = if g_norm <= opts.termination_tol {
                        OptStatus::Converged
                    } else {
                        OptStatus::Stalled
                    };
                    trace.push(TracePoint { iteration, objective: f, radius });
                    break;
                }
                radius_index += 1;
            } else {
                // Evaluate the whole halving sequence and keep the deepest
                // Armijo-acceptable point: near high-multiplicity minima a
                // short step into the spike beats a long step along a
                // shallow valley, and first-acceptance would take the
                // latter and wander off.
                let mut best: Option<(Vec<T>, T)> = None;
                let mut t = radius;
                for _ in 0..50 {
                    let trial: Vec<T> = params
                        .iter()
                        .zip(&g)
                        .map(|(&p, &gi)| p - t * gi / g_norm)
                        .collect();
                    let f_trial = eval(&trial, iteration)?;
                    // The strict f_trial < f guard rejects steps so short
                    // that the Armijo demand rounds away and the trial value
                    // equals f bitwise; accepting those loops forever.
                    if f_trial < f
                        && f_trial <= f - T::of(1e-4) * t * g_norm
                        && best.as_ref().map_or(true, |(_, fb)| f_trial < *fb)
                    {
                        best = Some((trial, f_trial));
                    }
                    t = t * T::of(0.5);
                }
                let accepted = best.is_some();
                if let Some((trial, f_trial)) = best {
                    params = trial;
                    f = f_trial;
                }
                if !accepted {
                    if radius_index == last_radius {
                        status = OptStatus::Stalled;
                        trace.push(TracePoint { iteration, objective: f, radius });
                        break;
                    }
                    radius_index += 1;
                }
            }
        } else {
            // Whole bundle was nonsmooth; treat like a stalled radius.
            if radius_index == last_radius {
                status = OptStatus::Stalled;
                trace.push(TracePoint { iteration, objective: f, radius });
                break;
            }
            radius_index += 1;
        }
        trace.push(TracePoint {
            iteration,
            objective: f,
            radius: opts.radius_schedule[radius_index],
        });
    }

    Ok(OptResult {
        controller: Controller::from_parameters(m, &params),
        objective: f,
        trace,
        status,
    })
}

/// Nonsmooth-point errors drop the sample from the bundle; anything else
/// aborts the run with iterate context.
fn filter_nonsmooth<T>(
    result: Result<Vec<T>>,
    iteration: usize,
) -> Result<std::result::Result<Vec<T>, ()>> {
    match result {
        Ok(g) => Ok(Ok(g)),
        Err(Error::NonsmoothPoint { .. }) => Ok(Err(())),
        Err(e) => Err(Error::ObjectiveEvaluation { iteration, source: Box::new(e) }),
    }
}

impl<T: Real> Serialize for OptResult<T> {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        #[serde(bound = "")]
        struct View<'a, T: Real> {
            controller: &'a Controller<T>,
            objective: f64,
            status: OptStatus,
            trace: Vec<TraceView>,
        }
        #[derive(Serialize)]
        struct TraceView {
            iteration: usize,
            objective: f64,
            radius: f64,
        }
        View {
            controller: &self.controller,
            objective: self.objective.as_f64(),
            status: self.status,
            trace: self
                .trace
                .iter()
                .map(|t| TraceView {
                    iteration: t.iteration,
                    objective: t.objective.as_f64(),
                    radius: t.radius.as_f64(),
                })
                .collect(),
        }
        .serialize(serializer)
    }
}
