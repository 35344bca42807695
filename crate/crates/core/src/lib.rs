//! Local fractal calculus on Cantor-like sets.
//!
//! The crate is layered: [`cantor`] builds the sets, [`staircase`] measures
//! them, [`falpha`] differentiates and integrates along them, [`etp`] is the
//! closed-form profile algebra and [`solver`] solves second-order equations.
//! [`problem`] reads JSON problem files and runs the cross-checks.

pub mod cantor;
pub mod error;
pub mod etp;
pub mod falpha;
pub mod problem;
pub mod solver;
pub mod staircase;

pub use cantor::{parse_ratio, CantorSetSpec, Interval, IntervalList};
pub use error::{FalconError, Result};
pub use etp::{Phase, Profile, Term};
pub use falpha::{
    falpha_derivative, falpha_derivative2, falpha_integral, falpha_integral_extrapolated,
    SampledFunction,
};
pub use problem::{run_checks, CheckResult, ProblemFile, ProblemKind, ProblemSpec};
pub use solver::{
    adjoint, characteristic_roots, general_solution, general_solution_linear, homogeneous_basis,
    is_exact, is_self_adjoint, norm_bound_check, reduce_order, solve_ivp,
    undetermined_coefficients, variation_of_parameters, wronskian, ConstCoeffFDE,
    InitialConditions, LinearFDE, NormBoundReport, NumericSolution, Particular,
    RootClassification, SolutionBundle,
};
pub use staircase::{
    coarse_mass, dimension_report, gamma_dimension, mass, DimensionEstimate, MassReport,
    MassStatus, StaircaseEvaluator, StaircaseMode,
};
