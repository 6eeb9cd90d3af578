//! The reduced objective `j(u)`, its adjoint, the non-smooth correction
//! `T(h)` and C-stationary points.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::fem::FemSpace;
use crate::field::{Role, ScalarField};
use crate::pde::{classify, solve_directional, solve_g_chi, solve_state, NewtonReport, Sign};
use crate::problem::{Integrand, Problem};

/// Value of `j` for a control and its (already solved) state.
pub fn objective_value(problem: &Problem, u: &[f64], y: &[f64]) -> f64 {
    let m = problem.space.lumped();
    let l = problem.integrand();
    (0..problem.n()).map(|i| m[i] * (l.value(i, y[i]) + 0.5 * problem.nu() * u[i] * u[i])).sum()
}

pub fn eval_j(problem: &Problem, u: &[f64]) -> Result<f64> {
    let (y, _) = solve_state(&problem.space, u, &problem.solver, None)?;
    Ok(objective_value(problem, u, &y))
}

/// Clarke selection `𝟙{y ≥ −zero_tol}` used for the adjoint.
pub fn adjoint_multiplier(y: &[f64], zero_tol: f64) -> ScalarField {
    ScalarField::new(Role::Multiplier, y.iter().map(|&v| if v >= -zero_tol { 1.0 } else { 0.0 }).collect())
}

/// `p = G_χ(L′_y(·, y))` with an explicit multiplier `χ`.
pub fn eval_adjoint_with(problem: &Problem, y: &[f64], chi: &[f64]) -> Result<ScalarField> {
    let l = problem.integrand();
    let rhs: Vec<f64> = y.iter().enumerate().map(|(i, &v)| l.dy(i, v)).collect();
    solve_g_chi(&problem.space, chi, &rhs)
}

pub fn eval_adjoint(problem: &Problem, y: &[f64]) -> Result<ScalarField> {
    let tol = problem.zero_band.tol_for(y);
    eval_adjoint_with(problem, y, &adjoint_multiplier(y, tol))
}

/// `T(h) = −∫ 𝟙{y=0} p δ⁻`, with `δ⁻ = max(0, −δ)` and the zero set
/// taken as `{|y| ≤ zero_tol}`.
pub fn eval_t(space: &FemSpace, p: &[f64], y: &[f64], delta: &[f64], zero_tol: f64) -> f64 {
    let m = space.lumped();
    -(0..space.n())
        .filter(|&i| classify(y[i], zero_tol) == Sign::Zero)
        .map(|i| m[i] * p[i] * (-delta[i]).max(0.0))
        .sum::<f64>()
}

/// `j′(u; h) = ∫(p + νu)h + T(h)`.
pub fn eval_dir_derivative_j(problem: &Problem, u: &[f64], h: &[f64]) -> Result<f64> {
    let (y, _) = solve_state(&problem.space, u, &problem.solver, None)?;
    let p = eval_adjoint(problem, &y)?;
    let tol = problem.zero_band.tol_for(&y);
    dir_derivative_at(problem, u, &y, &p, h, tol)
}

pub(crate) fn dir_derivative_at(problem: &Problem, u: &[f64], y: &[f64], p: &[f64], h: &[f64], tol: f64) -> Result<f64> {
    problem.space.check(h)?;
    let (delta, _) = solve_directional(&problem.space, y, h, tol, &problem.solver)?;
    let d: Vec<f64> = p.iter().zip(u).map(|(p, u)| p + problem.nu() * u).collect();
    Ok(problem.space.inner(&d, h) + eval_t(&problem.space, p, y, &delta, tol))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    /// `‖ū − Π(ū − d̄)‖_{L²}`.
    pub stationarity: f64,
    pub adjoint: f64,
    pub state: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StationaryPoint {
    pub u_bar: ScalarField,
    pub y_bar: ScalarField,
    pub p_bar: ScalarField,
    pub d_bar: ScalarField,
    pub chi_bar: ScalarField,
    pub zero_tol: f64,
    pub j: f64,
    pub residuals: Residuals,
    pub newton: NewtonReport,
}

fn adjoint_residual(space: &FemSpace, chi: &[f64], rhs: &[f64], p: &[f64]) -> f64 {
    let ap = space.apply_stiffness(p);
    let m = space.lumped();
    space
        .interior()
        .iter()
        .map(|&i| {
            let r = ap[i] + m[i] * (chi[i] * p[i] - rhs[i]);
            r * r
        })
        .sum::<f64>()
        .sqrt()
}

/// `‖u − Π(u − d)‖_{L²}`.
pub fn projection_residual(problem: &Problem, u: &[f64], d: &[f64]) -> f64 {
    let shifted: Vec<f64> = u.iter().zip(d).map(|(u, d)| u - d).collect();
    let proj = problem.spec.project(&shifted);
    let diff: Vec<f64> = u.iter().zip(&proj).map(|(a, b)| a - b).collect();
    problem.space.norm_l2(&diff)
}

/// Assembles `(ū, ȳ, p̄, d̄, χ̄)` for the projection of `u` onto the
/// admissible set.
pub fn make_stationary_point(problem: &Problem, u: &[f64]) -> Result<StationaryPoint> {
    make_stationary_point_warm(problem, u, None)
}

pub fn make_stationary_point_warm(problem: &Problem, u: &[f64], warm: Option<&[f64]>) -> Result<StationaryPoint> {
    problem.space.check(u)?;
    let u_bar = problem.spec.project(u);
    let (y_bar, newton) = solve_state(&problem.space, &u_bar, &problem.solver, warm)?;
    let zero_tol = problem.zero_band.tol_for(&y_bar);
    let chi_bar = adjoint_multiplier(&y_bar, zero_tol);
    let p_bar = eval_adjoint_with(problem, &y_bar, &chi_bar)?;
    let d_bar: Vec<f64> = p_bar.iter().zip(&u_bar).map(|(p, u)| p + problem.nu() * u).collect();
    let l = problem.integrand();
    let rhs: Vec<f64> = y_bar.iter().enumerate().map(|(i, &v)| l.dy(i, v)).collect();
    let residuals = Residuals {
        stationarity: projection_residual(problem, &u_bar, &d_bar),
        adjoint: adjoint_residual(&problem.space, &chi_bar, &rhs, &p_bar),
        state: newton.final_residual,
    };
    let j = objective_value(problem, &u_bar, &y_bar);
    Ok(StationaryPoint {
        u_bar: ScalarField::new(Role::Control, u_bar),
        y_bar,
        p_bar,
        d_bar: ScalarField::new(Role::Generic, d_bar),
        chi_bar,
        zero_tol,
        j,
        residuals,
        newton,
    })
}
