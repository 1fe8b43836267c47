//! Spectral abscissa tools for polynomials and fixed-order output feedback.
//!
//! The crate revolves around one objective: the largest real part among the
//! roots of a closed-loop characteristic polynomial, as a function of the
//! free controller coefficients. It provides
//!
//! * polynomial arithmetic, simultaneous root finding with multiplicity
//!   clustering, and the abscissa itself ([`poly`]),
//! * Hurwitz stability tests via leading principal minors ([`hurwitz`]),
//! * the benchmark plant, controller parameterizations and the closed-loop
//!   objective ([`plant`]),
//! * exact pole placement and overdetermined root clustering ([`placement`]),
//! * gradient sampling for nonsmooth abscissa minimization ([`nsopt`]),
//! * local optimality certificates at fully clustered points
//!   ([`certificate`]),
//! * step responses, pseudozero sets and coefficient rounding experiments
//!   ([`analysis`]).
//!
//! Everything is generic over the scalar type through [`scalar::Real`];
//! the `*64` aliases below fix `f64`, which the tests and the command-line
//! front end use throughout.

pub mod aberth;
pub mod analysis;
pub mod certificate;
pub mod error;
pub mod hurwitz;
pub mod linalg;
pub mod nsopt;
pub mod placement;
pub mod plant;
pub mod poly;
pub mod scalar;

pub use analysis::{
    fragility_experiment, pseudozero_distance, pseudozero_distance_with, pseudozero_grid,
    pseudozero_grid_with, pseudozero_perturbation, round_significant, step_response,
    FragilityReport, PseudozeroGrid, PseudozeroOptions, Region, StepResponse,
};
pub use certificate::{
    adjoint, build_shifted_map, certify_local_min, certify_local_min_with,
    check_constraint_qualification, CertificateReport, CertifyOptions, CqOutcome, ShiftedMap,
    Verdict,
};
pub use error::{Error, Result};
pub use hurwitz::{hurwitz_matrix, is_hurwitz_stable, HurwitzReport};
pub use nsopt::{
    abscissa_gradient, minimize_abscissa, OptOptions, OptResult, OptStatus, TracePoint,
};
pub use placement::{
    cluster_all_poles, cluster_all_poles_with, place_poles, sylvester_matrix, ClusterOptions,
    ClusterSolution, ClusterStability, PlacementResult,
};
pub use plant::{closed_loop_poly, objective, Controller, Plant};
pub use poly::{Poly, RootCluster, RootFindOptions, RootSet};
pub use scalar::Real;

pub type Poly64 = poly::Poly<f64>;
pub type Poly32 = poly::Poly<f32>;
pub type RootSet64 = poly::RootSet<f64>;
pub type Plant64 = plant::Plant<f64>;
pub type Controller64 = plant::Controller<f64>;
