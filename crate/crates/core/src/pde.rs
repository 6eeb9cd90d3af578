//! Semismooth Newton solvers for
//!
//! * the state equation `−Δy + max(0,y) = u`,
//! * the directional-derivative equation `−Δδ + max′(y; δ) = h`,
//! * the linear operator `G_χ`: `−Δz + χz = h`,
//!
//! all with homogeneous Dirichlet data.
//!
//! Every equation is piecewise linear in the unknown, so one Newton step on a
//! fixed active set solves that piece exactly: the update is computed as
//! `J⁻¹(M_L·rhs)` rather than as an increment, which keeps the final iterate
//! free of accumulated correction error.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{norm_inf, FemSpace};
use crate::field::{Role, ScalarField};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    /// Newton stops when `‖F(y)‖ ≤ newton_tol·(1 + ‖M_L u‖)`.
    pub newton_tol: f64,
    pub max_newton: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { newton_tol: 1e-10, max_newton: 100 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewtonReport {
    pub iterations: usize,
    pub final_residual: f64,
    /// Nodes whose active flag flipped, one entry per Newton step.
    pub active_set_changes: Vec<usize>,
    pub converged: bool,
}

/// Tolerance deciding membership of `{y = 0}`:
/// `max(absolute, relative·‖y‖_∞)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ZeroBand {
    pub relative: f64,
    pub absolute: f64,
}

impl Default for ZeroBand {
    fn default() -> Self {
        Self { relative: 1e-9, absolute: 0.0 }
    }
}

impl ZeroBand {
    pub fn tol_for(&self, y: &[f64]) -> f64 {
        self.absolute.max(self.relative * norm_inf(y))
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { relative: self.relative * factor, absolute: self.absolute * factor }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Negative,
    Zero,
    Positive,
}

pub fn classify(v: f64, tol: f64) -> Sign {
    if v > tol {
        Sign::Positive
    } else if v < -tol {
        Sign::Negative
    } else {
        Sign::Zero
    }
}

/// Geometric step sequence `t_n = t0·ratioⁿ`, `n = 0..count`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SequenceSpec {
    pub t0: f64,
    pub ratio: f64,
    pub count: usize,
}

impl SequenceSpec {
    pub fn new(t0: f64, ratio: f64, count: usize) -> Result<Self> {
        let s = Self { t0, ratio, count };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t0 > 0.0 && self.ratio > 0.0 && self.ratio < 1.0 && self.count > 0) {
            return Err(Error::Precondition(format!(
                "sequence needs t0 > 0, ratio in (0,1), count > 0; got {self:?}"
            )));
        }
        Ok(())
    }

    pub fn terms(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.count).map(move |n| self.t0 * self.ratio.powi(n as i32))
    }

    /// The same rates with every step divided by `c`.
    pub fn transported(&self, c: f64) -> Self {
        Self { t0: self.t0 / c, ..*self }
    }
}

/// Default bank: `t0 ∈ {1e-1, 3e-2, 1e-2}`, `ratio ∈ {0.5, 0.7, 0.9}`, 25 terms.
pub fn default_sequence_bank() -> Vec<SequenceSpec> {
    let mut bank = Vec::new();
    for t0 in [1e-1, 3e-2, 1e-2] {
        for ratio in [0.5, 0.7, 0.9] {
            bank.push(SequenceSpec { t0, ratio, count: 25 });
        }
    }
    bank
}

fn interior_norm(space: &FemSpace, v: &[f64]) -> f64 {
    space.interior().iter().map(|&i| v[i] * v[i]).sum::<f64>().sqrt()
}

fn count_changes(a: &[bool], b: &[bool]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

/// Interior residual of `A y + M_L max(0,y) − M_L u`.
pub fn state_residual(space: &FemSpace, u: &[f64], y: &[f64]) -> f64 {
    let ay = space.apply_stiffness(y);
    let m = space.lumped();
    let r: Vec<f64> = (0..space.n()).map(|i| ay[i] + m[i] * (y[i].max(0.0) - u[i])).collect();
    interior_norm(space, &r)
}

/// Solves the state equation, optionally warm-started from `warm`.
pub fn solve_state(
    space: &FemSpace,
    u: &[f64],
    opts: &SolverOptions,
    warm: Option<&[f64]>,
) -> Result<(ScalarField, NewtonReport)> {
    space.check(u)?;
    let m = space.lumped();
    let rhs: Vec<f64> = u.iter().zip(m).map(|(u, m)| u * m).collect();
    let target = opts.newton_tol * (1.0 + interior_norm(space, &rhs));
    let mut y = match warm {
        Some(w) => {
            space.check(w)?;
            let mut y = w.to_vec();
            for &b in space.mesh().boundary_nodes() {
                y[b] = 0.0;
            }
            y
        }
        None => vec![0.0; space.n()],
    };
    let mut report = NewtonReport { iterations: 0, final_residual: f64::INFINITY, active_set_changes: Vec::new(), converged: false };
    let mut active: Vec<bool> = y.iter().map(|&v| v > 0.0).collect();
    loop {
        report.final_residual = state_residual(space, u, &y);
        if report.final_residual <= target {
            report.converged = true;
            return Ok((ScalarField::new(Role::State, y), report));
        }
        if report.iterations == opts.max_newton {
            return Err(Error::Newton(report));
        }
        let shift: Vec<f64> = active.iter().zip(m).map(|(&a, &m)| if a { m } else { 0.0 }).collect();
        y = space.solve_shifted(&shift, &rhs)?;
        let next: Vec<bool> = y.iter().map(|&v| v > 0.0).collect();
        report.active_set_changes.push(count_changes(&active, &next));
        active = next;
        report.iterations += 1;
    }
}

fn directional_residual(space: &FemSpace, signs: &[Sign], h: &[f64], delta: &[f64]) -> f64 {
    let ad = space.apply_stiffness(delta);
    let m = space.lumped();
    let r: Vec<f64> = (0..space.n())
        .map(|i| {
            let nl = match signs[i] {
                Sign::Positive => delta[i],
                Sign::Zero => delta[i].max(0.0),
                Sign::Negative => 0.0,
            };
            ad[i] + m[i] * (nl - h[i])
        })
        .collect();
    interior_norm(space, &r)
}

/// Solves `A δ + M_L(𝟙{y>0}δ + 𝟙{y=0}max(0,δ)) = M_L h`, where nodes with
/// `|y| ≤ zero_tol` form the set `{y = 0}`.
pub fn solve_directional(
    space: &FemSpace,
    y: &[f64],
    h: &[f64],
    zero_tol: f64,
    opts: &SolverOptions,
) -> Result<(ScalarField, NewtonReport)> {
    space.check(y)?;
    space.check(h)?;
    let m = space.lumped();
    let signs: Vec<Sign> = y.iter().map(|&v| classify(v, zero_tol)).collect();
    let rhs: Vec<f64> = h.iter().zip(m).map(|(h, m)| h * m).collect();
    let target = opts.newton_tol * (1.0 + interior_norm(space, &rhs));
    let mut active: Vec<bool> = signs.iter().map(|&s| s == Sign::Positive).collect();
    let mut report = NewtonReport { iterations: 0, final_residual: f64::INFINITY, active_set_changes: Vec::new(), converged: false };
    let mut delta = vec![0.0; space.n()];
    loop {
        if report.iterations > 0 {
            report.final_residual = directional_residual(space, &signs, h, &delta);
            if report.final_residual <= target {
                report.converged = true;
                return Ok((ScalarField::new(Role::Derivative, delta), report));
            }
        }
        if report.iterations == opts.max_newton {
            return Err(Error::Newton(report));
        }
        let shift: Vec<f64> = active.iter().zip(m).map(|(&a, &m)| if a { m } else { 0.0 }).collect();
        delta = space.solve_shifted(&shift, &rhs)?;
        let next: Vec<bool> = (0..space.n())
            .map(|i| match signs[i] {
                Sign::Positive => true,
                Sign::Zero => delta[i] > 0.0,
                Sign::Negative => false,
            })
            .collect();
        report.active_set_changes.push(count_changes(&active, &next));
        active = next;
        report.iterations += 1;
    }
}

/// Solves `(A + M_L diag(χ)) z = M_L·rhs` with `z = 0` on the boundary.
/// `χ` must lie in the Clarke interval `[0,1]` nodewise.
pub fn solve_g_chi(space: &FemSpace, chi: &[f64], rhs: &[f64]) -> Result<ScalarField> {
    space.check(chi)?;
    space.check(rhs)?;
    if let Some((i, c)) = chi.iter().enumerate().find(|(_, c)| !(0.0..=1.0).contains(*c)) {
        return Err(Error::Precondition(format!("chi[{i}] = {c} lies outside [0,1]")));
    }
    let m = space.lumped();
    let shift: Vec<f64> = chi.iter().zip(m).map(|(c, m)| c * m).collect();
    let b: Vec<f64> = rhs.iter().zip(m).map(|(r, m)| r * m).collect();
    Ok(ScalarField::new(Role::Adjoint, space.solve_shifted(&shift, &b)?))
}

/// `(S(u + t h) − S(u)) / t` from two state solves.
pub fn difference_quotient(space: &FemSpace, u: &[f64], h: &[f64], t: f64, opts: &SolverOptions) -> Result<ScalarField> {
    if !(t > 0.0) {
        return Err(Error::Precondition(format!("step t must be positive, got {t}")));
    }
    space.check(h)?;
    let (y0, _) = solve_state(space, u, opts, None)?;
    let shifted: Vec<f64> = u.iter().zip(h).map(|(u, h)| u + t * h).collect();
    let (y1, _) = solve_state(space, &shifted, opts, Some(&y0))?;
    let q = y1.iter().zip(y0.iter()).map(|(a, b)| (a - b) / t).collect();
    Ok(ScalarField::new(Role::Derivative, q))
}
