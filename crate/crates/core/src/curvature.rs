//! The mismatch field `ζ`, the sequence functional `Q̲`, the estimator for
//! `Q̃` and the second-order generalized derivative
//! `Q(ū, p̄; h) = ∫[L″(ȳ)δ_h² + νh²] + 2Q̃(ū, p̄; h)`.
//!
//! `Q̲` is a lim inf along `t_n → 0⁺` and `Q̃` an infimum over all such
//! sequences; both are replaced by finite surrogates: the minimum over the
//! trailing `tail_window` admissible samples of a sequence, and the minimum
//! over a finite bank of geometric sequences.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::norm_inf;
use crate::field::{Role, ScalarField};
use crate::objective::{objective_value, StationaryPoint};
use crate::pde::{solve_directional, solve_state, SequenceSpec};
use crate::problem::{Integrand, Problem};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CurvatureOptions {
    pub tail_window: usize,
    /// Samples with `(t_n‖h‖)² < noise_factor · solver tolerance` are excluded.
    pub noise_factor: f64,
}

impl Default for CurvatureOptions {
    fn default() -> Self {
        Self { tail_window: 8, noise_factor: 1e3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QSample {
    pub sequence: usize,
    pub n: usize,
    pub t: f64,
    /// `(1/t_n²)∫p̄ζ`; `None` when below the noise floor.
    pub value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QUnderline {
    pub value: f64,
    pub samples: Vec<QSample>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureReport {
    /// `∫[L″(ȳ)δ_h² + νh²]`.
    pub smooth_part: f64,
    pub qtilde_estimate: f64,
    /// Largest minus smallest per-sequence value over the bank.
    pub qtilde_spread: f64,
    pub qtilde_samples: Vec<QSample>,
    pub q_value: f64,
    pub h_norm: f64,
    pub delta_inf: f64,
}

/// `ζ(ū; t, h) = S(ū+th)(𝟙{ȳ≥0} − 𝟙{S(ū+th)≥0})`, using the stationary
/// point's zero band for both indicators.
pub fn eval_zeta(problem: &Problem, sp: &StationaryPoint, t: f64, h: &[f64]) -> Result<ScalarField> {
    if !(t > 0.0) {
        return Err(Error::Precondition(format!("step t must be positive, got {t}")));
    }
    problem.space.check(h)?;
    let u: Vec<f64> = sp.u_bar.iter().zip(h).map(|(u, h)| u + t * h).collect();
    let (yt, _) = solve_state(&problem.space, &u, &problem.solver, Some(&sp.y_bar))?;
    Ok(zeta_from_states(&sp.y_bar, &yt, sp.zero_tol))
}

pub(crate) fn zeta_from_states(y_bar: &[f64], yt: &[f64], tol: f64) -> ScalarField {
    let ind = |v: f64| if v >= -tol { 1.0 } else { 0.0 };
    ScalarField::new(Role::Generic, y_bar.iter().zip(yt).map(|(&yb, &y)| y * (ind(yb) - ind(y))).collect())
}

fn is_zero(v: &[f64]) -> bool {
    v.iter().all(|&x| x == 0.0)
}

fn sequence_samples(
    problem: &Problem,
    sp: &StationaryPoint,
    seq: &SequenceSpec,
    id: usize,
    h: &[f64],
    opts: &CurvatureOptions,
) -> Result<Vec<QSample>> {
    seq.validate()?;
    problem.space.check(h)?;
    let h_norm = problem.space.norm_l2(h);
    let floor = opts.noise_factor * problem.solver.newton_tol;
    let trivial = is_zero(h) || is_zero(&sp.p_bar);
    let mut samples = Vec::with_capacity(seq.count);
    for (n, t) in seq.terms().enumerate() {
        let value = if is_zero(h) {
            Some(0.0)
        } else if (t * h_norm).powi(2) < floor {
            None
        } else if trivial {
            Some(0.0)
        } else {
            let zeta = eval_zeta(problem, sp, t, h)?;
            Some(problem.space.inner(&sp.p_bar, &zeta) / (t * t))
        };
        samples.push(QSample { sequence: id, n, t, value });
    }
    Ok(samples)
}

fn tail_min(samples: &[QSample], window: usize) -> Option<f64> {
    let valid: Vec<f64> = samples.iter().filter_map(|s| s.value).collect();
    let start = valid.len().saturating_sub(window.max(1));
    valid[start..].iter().copied().reduce(f64::min)
}

/// Lim inf surrogate of `(1/t_n²)∫p̄ ζ(ū; t_n, h)` along one sequence.
pub fn eval_q_underline(
    problem: &Problem,
    sp: &StationaryPoint,
    seq: &SequenceSpec,
    h: &[f64],
    opts: &CurvatureOptions,
) -> Result<QUnderline> {
    let samples = sequence_samples(problem, sp, seq, 0, h, opts)?;
    let value = tail_min(&samples, opts.tail_window).ok_or(Error::DegenerateSequence)?;
    Ok(QUnderline { value, samples })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QTildeEstimate {
    pub value: f64,
    pub per_sequence: Vec<Option<f64>>,
    pub samples: Vec<QSample>,
}

impl QTildeEstimate {
    pub fn spread(&self) -> f64 {
        let v: Vec<f64> = self.per_sequence.iter().flatten().copied().collect();
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        if v.is_empty() {
            0.0
        } else {
            hi - lo
        }
    }
}

/// Infimum surrogate over a finite bank. Sequences whose samples all fall
/// below the noise floor are skipped.
pub fn estimate_q_tilde(
    problem: &Problem,
    sp: &StationaryPoint,
    h: &[f64],
    bank: &[SequenceSpec],
    opts: &CurvatureOptions,
) -> Result<QTildeEstimate> {
    if bank.is_empty() {
        return Err(Error::Precondition("sequence bank is empty".into()));
    }
    let mut per_sequence = Vec::with_capacity(bank.len());
    let mut samples = Vec::new();
    for (id, seq) in bank.iter().enumerate() {
        let s = sequence_samples(problem, sp, seq, id, h, opts)?;
        per_sequence.push(tail_min(&s, opts.tail_window));
        samples.extend(s);
    }
    let value = per_sequence.iter().flatten().copied().reduce(f64::min).ok_or(Error::DegenerateSequence)?;
    Ok(QTildeEstimate { value, per_sequence, samples })
}

/// `∫[L″(ȳ)δ² + νh²]` and `δ = S′(ū; h)`.
pub fn smooth_part(problem: &Problem, sp: &StationaryPoint, h: &[f64]) -> Result<(f64, ScalarField)> {
    let (delta, _) = solve_directional(&problem.space, &sp.y_bar, h, sp.zero_tol, &problem.solver)?;
    let m = problem.space.lumped();
    let l = problem.integrand();
    let s = (0..problem.n())
        .map(|i| m[i] * (l.dyy(i, sp.y_bar[i]) * delta[i] * delta[i] + problem.nu() * h[i] * h[i]))
        .sum();
    Ok((s, delta))
}

pub fn eval_q(
    problem: &Problem,
    sp: &StationaryPoint,
    h: &[f64],
    bank: &[SequenceSpec],
    opts: &CurvatureOptions,
) -> Result<CurvatureReport> {
    let (smooth, delta) = smooth_part(problem, sp, h)?;
    let qt = estimate_q_tilde(problem, sp, h, bank, opts)?;
    Ok(CurvatureReport {
        smooth_part: smooth,
        qtilde_estimate: qt.value,
        qtilde_spread: qt.spread(),
        q_value: smooth + 2.0 * qt.value,
        h_norm: problem.space.norm_l2(h),
        delta_inf: norm_inf(&delta),
        qtilde_samples: qt.samples,
    })
}

/// Five-point Gauss–Legendre rule on `[0, 1]`.
const GAUSS5: [(f64, f64); 5] = [
    (0.046_910_077_030_668_0, 0.118_463_442_528_094_5),
    (0.230_765_344_947_158_5, 0.239_314_335_249_683_2),
    (0.5, 0.284_444_444_444_444_4),
    (0.769_234_655_052_841_5, 0.239_314_335_249_683_2),
    (0.953_089_922_969_332, 0.118_463_442_528_094_5),
];

/// The four terms of the exact second-order expansion of `j(u) − j(ū)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaylorTerms {
    pub lhs: f64,
    /// `∫∫₀¹(1−s)L″(ȳ + s(y−ȳ))(y−ȳ)² ds dx`.
    pub state_term: f64,
    /// `(ν/2)‖u − ū‖²`.
    pub control_term: f64,
    /// `∫d̄(u − ū)`.
    pub linear_term: f64,
    /// `∫p̄ ζ(ū; 1, u − ū)`.
    pub zeta_term: f64,
    pub residual: f64,
    pub j_u: f64,
}

pub fn taylor_expansion(problem: &Problem, sp: &StationaryPoint, u: &[f64]) -> Result<TaylorTerms> {
    problem.space.check(u)?;
    let (y, _) = solve_state(&problem.space, u, &problem.solver, Some(&sp.y_bar))?;
    let m = problem.space.lumped();
    let l = problem.integrand();
    let mut state_term = 0.0;
    for i in 0..problem.n() {
        let dy = y[i] - sp.y_bar[i];
        let inner: f64 = GAUSS5.iter().map(|&(s, w)| w * (1.0 - s) * l.dyy(i, sp.y_bar[i] + s * dy)).sum();
        state_term += m[i] * inner * dy * dy;
    }
    let du: Vec<f64> = u.iter().zip(sp.u_bar.iter()).map(|(a, b)| a - b).collect();
    let control_term = 0.5 * problem.nu() * problem.space.inner(&du, &du);
    let linear_term = problem.space.inner(&sp.d_bar, &du);
    let zeta = zeta_from_states(&sp.y_bar, &y, sp.zero_tol);
    let zeta_term = problem.space.inner(&sp.p_bar, &zeta);
    let j_u = objective_value(problem, u, &y);
    let lhs = j_u - sp.j;
    let residual = lhs - (state_term + control_term + linear_term + zeta_term);
    Ok(TaylorTerms { lhs, state_term, control_term, linear_term, zeta_term, residual, j_u })
}
