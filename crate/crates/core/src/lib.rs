//! Finite-element workbench for the optimal control of
//! `−Δy + max(0, y) = u` with homogeneous Dirichlet data: state, adjoint and
//! directional-derivative solvers, second-order curvature estimates, and
//! checkers for first- and second-order optimality conditions.

// Negated float comparisons are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod conditions;
pub mod curvature;
pub mod error;
pub mod fem;
pub mod field;
pub mod instances;
pub mod levelset;
pub mod mesh;
pub mod objective;
pub mod optimizer;
pub mod pde;
pub mod problem;
pub mod sampling;
pub mod sparse;

pub use conditions::{
    check_ga, check_s_differentiability, check_sa, probe_quadratic_growth, project_critical, scan_snc, scan_ssc,
    CheckOptions, ConditionReport, ConeKind, ConeSpec, GaReport, GrowthReport, Hypotheses, SDiffReport, SaReport,
    ScanReport, ScanSettings,
};
pub use curvature::{
    eval_q, eval_q_underline, eval_zeta, estimate_q_tilde, smooth_part, taylor_expansion, CurvatureOptions,
    CurvatureReport, TaylorTerms,
};
pub use error::{Error, Result};
pub use fem::{assemble, norm_inf, FemSpace, LinearBackend};
pub use field::{Role, ScalarField};
pub use levelset::{closed_band_measure, level_band_measure, zero_set_measure};
pub use mesh::{build_mesh, DomainKind, Mesh};
pub use objective::{
    eval_adjoint, eval_dir_derivative_j, eval_j, eval_t, make_stationary_point, make_stationary_point_warm,
    StationaryPoint,
};
pub use optimizer::{minimize, project_admissible, OptimizerOptions, OptimizerTrace, Termination};
pub use pde::{
    default_sequence_bank, difference_quotient, solve_directional, solve_g_chi, solve_state, NewtonReport,
    SequenceSpec, SolverOptions, ZeroBand,
};
pub use problem::{Bounds, Problem, ProblemSpec, QuadraticTracking};
