//! Projected-gradient minimisation of the reduced objective with an Armijo
//! line search.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::field::{Role, ScalarField};
use crate::objective::{eval_adjoint, objective_value, projection_residual};
use crate::pde::solve_state;
use crate::problem::Problem;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerOptions {
    pub opt_tol: f64,
    pub max_iter: usize,
    pub armijo: f64,
    pub max_halvings: usize,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        Self { opt_tol: 1e-8, max_iter: 5000, armijo: 1e-4, max_halvings: 60 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    Converged,
    MaxIter,
    LineSearchFailure,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iter: usize,
    pub j: f64,
    pub residual: f64,
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerTrace {
    pub termination: Termination,
    pub iterations: usize,
    pub j: f64,
    pub residual: f64,
    pub history: Vec<IterationRecord>,
}

/// Clamps `u` into the admissible set.
pub fn project_admissible(problem: &Problem, u: &[f64]) -> ScalarField {
    ScalarField::new(Role::Control, problem.spec.project(u))
}

/// Minimises `j` from `u0`. The gradient representative is `p + νu` with the
/// adjoint using `𝟙{y ≥ 0}`; iteration stops once
/// `‖u − Π(u − (p + νu))‖ ≤ opt_tol`. Trial steps start at
/// `min(1/ν, 2·previous step)` and are halved until the Armijo condition
/// `j(u⁺) ≤ j(u) + σ⟨p + νu, u⁺ − u⟩` holds.
pub fn minimize(problem: &Problem, u0: &[f64], opts: &OptimizerOptions) -> Result<(ScalarField, OptimizerTrace)> {
    problem.space.check(u0)?;
    let nu = problem.nu();
    let mut u = problem.spec.project(u0);
    let (mut y, _) = solve_state(&problem.space, &u, &problem.solver, None)?;
    let mut j = objective_value(problem, &u, &y);
    let mut step = 1.0 / nu;
    let mut history = Vec::new();
    let mut iter = 0;
    let termination = loop {
        let p = eval_adjoint(problem, &y)?;
        let d: Vec<f64> = p.iter().zip(&u).map(|(p, u)| p + nu * u).collect();
        let residual = projection_residual(problem, &u, &d);
        history.push(IterationRecord { iter, j, residual, step });
        if residual <= opts.opt_tol {
            break Termination::Converged;
        }
        if iter == opts.max_iter {
            break Termination::MaxIter;
        }
        let mut s = (2.0 * step).min(1.0 / nu);
        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            let trial: Vec<f64> = u.iter().zip(&d).map(|(u, d)| u - s * d).collect();
            let trial = problem.spec.project(&trial);
            let du: Vec<f64> = trial.iter().zip(&u).map(|(a, b)| a - b).collect();
            let slope = problem.space.inner(&d, &du);
            let (yt, _) = solve_state(&problem.space, &trial, &problem.solver, Some(&y))?;
            let jt = objective_value(problem, &trial, &yt);
            if jt <= j + opts.armijo * slope {
                accepted = Some((trial, yt, jt));
                break;
            }
            s *= 0.5;
        }
        match accepted {
            Some((trial, yt, jt)) => {
                u = trial;
                y = yt;
                j = jt;
                step = s;
                iter += 1;
            }
            None => break Termination::LineSearchFailure,
        }
    };
    let last = *history.last().expect("history holds the initial iterate");
    let trace = OptimizerTrace { termination, iterations: iter, j: last.j, residual: last.residual, history };
    Ok((ScalarField::new(Role::Control, u), trace))
}
