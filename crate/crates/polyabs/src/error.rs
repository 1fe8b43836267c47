//! Error type shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong in this crate.
///
/// Diagnostic payloads are carried as `f64` regardless of the scalar type the
/// computation ran in, so the error type stays non-generic.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// The zero polynomial was passed where a nonzero one is required.
    #[error("the zero polynomial is not allowed here")]
    ZeroPolynomial,

    /// A nonzero constant has no roots.
    #[error("a constant polynomial has no roots")]
    ConstantPolynomial,

    /// The simultaneous root iteration hit its iteration cap.
    #[error("root finding did not converge after {iterations} iterations (scaled residual {residual:.3e})")]
    RootsNotConverged {
        iterations: usize,
        residual: f64,
        /// Best iterate reached, as (re, im) pairs.
        best: Vec<(f64, f64)>,
    },

    /// Real coefficients were required but the imaginary parts are too large.
    #[error("polynomial is not real (largest imaginary part {max_imag:.3e})")]
    NonRealCoefficients { max_imag: f64 },

    /// A plant violated its invariants.
    #[error("invalid plant: {0}")]
    InvalidPlant(String),

    /// A controller violated its invariants.
    #[error("invalid controller: {0}")]
    InvalidController(String),

    /// Option or argument values outside their documented domain.
    #[error("invalid options: {0}")]
    InvalidOptions(String),

    /// A polynomial had the wrong degree for the requested operation.
    #[error("degree mismatch: expected degree {expected}, got {got}")]
    DegreeMismatch { expected: usize, got: usize },

    /// A linear system that must be solvable was numerically singular.
    #[error("singular linear system: {0}")]
    SingularSystem(String),

    /// Pole clustering was requested in the square or underdetermined regime.
    #[error(
        "controller order {order} admits exact placement; pole clustering \
         applies only below order {min_placement_order} (use place_poles instead)"
    )]
    NotOverdetermined {
        order: usize,
        min_placement_order: usize,
    },

    /// A certificate was requested at a point whose closed loop is not a
    /// single root cluster.
    #[error(
        "closed loop is not a single root cluster (shifted coefficient \
         residual {residual:.3e} exceeds {tolerance:.3e})"
    )]
    NotClustered { residual: f64, tolerance: f64 },

    /// The abscissa-active root is not simple, so the gradient is undefined.
    #[error(
        "nonsmooth point: active root is not simple \
         (|p'(z)| = {derivative:.3e} at threshold {threshold:.3e})"
    )]
    NonsmoothPoint { derivative: f64, threshold: f64 },

    /// A stable closed loop was required.
    #[error("closed loop is unstable (spectral abscissa {abscissa:.3e})")]
    UnstableClosedLoop { abscissa: f64 },

    /// The transfer function has a pole or indeterminate value at s = 0.
    #[error("closed-loop denominator vanishes at s = 0; no DC gain")]
    NoDcGain,

    /// An objective evaluation inside an iterative routine failed.
    #[error("objective evaluation failed at iteration {iteration}")]
    ObjectiveEvaluation {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },
}
