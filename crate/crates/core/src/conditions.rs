//! Checkers for the hypotheses and the second-order conditions at a
//! stationary point: the Gâteaux assumption (GA), the structural assumption
//! (SA), differentiability of the control-to-state map, the critical cones,
//! the necessary (SNC) and sufficient (SSC) curvature scans, and sampled
//! quadratic growth.

use serde::{Deserialize, Serialize};

use crate::curvature::{eval_q, CurvatureOptions};
use crate::error::Result;
use crate::fem::norm_inf;
use crate::levelset::{closed_band_measure, level_band_measure, measure, Cmp, LevelConstraint};
use crate::mesh::Mesh;
use crate::objective::{objective_value, StationaryPoint};
use crate::pde::{solve_state, SequenceSpec};
use crate::problem::{Bounds, Problem};
use crate::sampling::{bump_field, rng, scaled, smooth_field};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CheckOptions {
    /// `area_tol = area_tol_rel · meas(Ω)`.
    pub area_tol_rel: f64,
    /// `p_tol = p_tol_rel · (1 + ‖p̄‖_∞)`.
    pub p_tol_rel: f64,
    /// `bound_tol = bound_tol_rel · (1 + ‖ū‖_∞)`.
    pub bound_tol_rel: f64,
    /// `d_tol = d_tol_rel · (1 + ‖d̄‖_∞)`.
    pub d_tol_rel: f64,
    pub snc_tol: f64,
    pub ssc_tol: f64,
    pub growth_tol: f64,
    pub eps_grid: Vec<f64>,
}

impl Default for CheckOptions {
    fn default() -> Self {
        Self {
            area_tol_rel: 1e-6,
            p_tol_rel: 1e-8,
            bound_tol_rel: 1e-8,
            d_tol_rel: 1e-8,
            snc_tol: 1e-6,
            ssc_tol: 1e-8,
            growth_tol: 1e-6,
            eps_grid: log_grid(1e-3, 1e-1, 20),
        }
    }
}

pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..count).map(|k| (a + (b - a) * k as f64 / (count - 1) as f64).exp()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaReport {
    /// Exact area of `{|ȳ| ≤ zero_tol} ∩ {|p̄| > p_tol}`.
    pub band_measure_p_nonzero: f64,
    pub zero_tol: f64,
    pub p_tol: f64,
    pub area_tol: f64,
    pub pass: bool,
    /// `(zero_tol factor, area)` for factors 0.1 and 10.
    pub sensitivity: Vec<(f64, f64)>,
}

fn ga_area(mesh: &Mesh, y: &[f64], p: &[f64], zero_tol: f64, p_tol: f64) -> f64 {
    let band = [LevelConstraint::new(y, Cmp::Le, zero_tol), LevelConstraint::new(y, Cmp::Ge, -zero_tol)];
    let above = measure(mesh, &[band[0], band[1], LevelConstraint::new(p, Cmp::Gt, p_tol)]);
    let below = measure(mesh, &[band[0], band[1], LevelConstraint::new(p, Cmp::Lt, -p_tol)]);
    above + below
}

pub fn check_ga(problem: &Problem, sp: &StationaryPoint, opts: &CheckOptions) -> GaReport {
    let mesh = problem.space.mesh();
    let area_tol = opts.area_tol_rel * problem.space.area();
    let p_tol = opts.p_tol_rel * (1.0 + norm_inf(&sp.p_bar));
    let area = ga_area(mesh, &sp.y_bar, &sp.p_bar, sp.zero_tol, p_tol);
    let sensitivity = [0.1, 10.0]
        .iter()
        .map(|&f| (f, ga_area(mesh, &sp.y_bar, &sp.p_bar, sp.zero_tol * f, p_tol)))
        .collect();
    GaReport { band_measure_p_nonzero: area, zero_tol: sp.zero_tol, p_tol, area_tol, pass: area <= area_tol, sensitivity }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaReport {
    pub eps: Vec<f64>,
    pub band_measure: Vec<f64>,
    pub ratio: Vec<f64>,
    /// Largest observed `meas({0<|ȳ|<ε})/ε`.
    pub fitted_c_s: f64,
    pub pass: bool,
}

/// Ratio table `meas({0<|ȳ|<ε})/ε`. Passes unless the ratios blow up as
/// `ε ↓ 0`: the largest ratio over the smallest third of the grid may not
/// exceed twice the largest ratio over the largest third.
pub fn check_sa(mesh: &Mesh, y_bar: &[f64], eps_grid: &[f64]) -> SaReport {
    let mut eps: Vec<f64> = eps_grid.iter().copied().filter(|e| *e > 0.0 && *e < 1.0).collect();
    eps.sort_by(|a, b| b.total_cmp(a));
    let band_measure: Vec<f64> = eps.iter().map(|&e| level_band_measure(mesh, y_bar, e)).collect();
    let ratio: Vec<f64> = band_measure.iter().zip(&eps).map(|(m, e)| m / e).collect();
    let fitted_c_s = ratio.iter().copied().fold(0.0, f64::max);
    let third = (ratio.len() / 3).max(1);
    let pass = if ratio.is_empty() {
        true
    } else {
        let large = ratio[..third].iter().copied().fold(0.0, f64::max);
        let small = ratio[ratio.len() - third..].iter().copied().fold(0.0, f64::max);
        small <= 2.0 * large
    };
    SaReport { eps, band_measure, ratio, fitted_c_s, pass }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SDiffReport {
    /// Exact area of `{|y| ≤ zero_tol}`.
    pub zero_set_area: f64,
    pub area_tol: f64,
    pub differentiable: bool,
    pub sensitivity: Vec<(f64, f64)>,
}

/// The control-to-state map is Gâteaux differentiable at `u` exactly when
/// `{S(u) = 0}` is a null set.
pub fn check_s_differentiability(mesh: &Mesh, y: &[f64], zero_tol: f64, area_tol: f64) -> SDiffReport {
    let area = closed_band_measure(mesh, y, zero_tol);
    let sensitivity = [0.1, 10.0].iter().map(|&f| (f, closed_band_measure(mesh, y, zero_tol * f))).collect();
    SDiffReport { zero_set_area: area, area_tol, differentiable: area <= area_tol, sensitivity }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConeKind {
    Critical,
    TauCritical,
}

/// Nodal description of `C(U_ad; ū)` or `C^τ(U_ad; ū)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeSpec {
    pub kind: ConeKind,
    pub tau: f64,
    pub active_lower: Vec<usize>,
    pub active_upper: Vec<usize>,
    pub zero_d: Vec<usize>,
}

impl ConeSpec {
    pub fn critical(problem: &Problem, sp: &StationaryPoint, opts: &CheckOptions) -> Self {
        Self::build(problem, sp, opts, ConeKind::Critical, 0.0)
    }

    pub fn tau_critical(problem: &Problem, sp: &StationaryPoint, tau: f64, opts: &CheckOptions) -> Self {
        Self::build(problem, sp, opts, ConeKind::TauCritical, tau.max(0.0))
    }

    fn build(problem: &Problem, sp: &StationaryPoint, opts: &CheckOptions, kind: ConeKind, tau: f64) -> Self {
        let n = problem.n();
        let bound_tol = opts.bound_tol_rel * (1.0 + norm_inf(&sp.u_bar));
        let d_tol = opts.d_tol_rel * (1.0 + norm_inf(&sp.d_bar));
        let threshold = match kind {
            ConeKind::Critical => d_tol,
            ConeKind::TauCritical => tau.max(d_tol),
        };
        let (mut active_lower, mut active_upper) = (Vec::new(), Vec::new());
        if let Bounds::Box { alpha, beta } = &problem.spec.bounds {
            for i in 0..n {
                if (sp.u_bar[i] - alpha[i]).abs() <= bound_tol {
                    active_lower.push(i);
                } else if (sp.u_bar[i] - beta[i]).abs() <= bound_tol {
                    active_upper.push(i);
                }
            }
        }
        let zero_d = (0..n).filter(|&i| sp.d_bar[i].abs() <= threshold).collect();
        Self { kind, tau, active_lower, active_upper, zero_d }
    }

    /// Number of nodes where a cone direction may be nonzero.
    pub fn free_nodes(&self) -> usize {
        self.zero_d.len()
    }
}

/// Nodal projection onto the cone: zero off `zero_d`, clamped to `≥ 0` on
/// lower-active and `≤ 0` on upper-active nodes. Idempotent.
pub fn project_critical(cone: &ConeSpec, g: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; g.len()];
    for &i in &cone.zero_d {
        out[i] = g[i];
    }
    for &i in &cone.active_lower {
        out[i] = out[i].max(0.0);
    }
    for &i in &cone.active_upper {
        out[i] = out[i].min(0.0);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Direction {
    pub id: usize,
    pub family: String,
    pub values: Vec<f64>,
}

/// The sampled direction pool: adjoint-informed fields (`p̄` and `p̄` or
/// `1` localised near `{ȳ = 0}`), hat bumps, and random low-frequency
/// fields, in that order.
pub fn candidate_directions(problem: &Problem, sp: &StationaryPoint, n_dirs: usize, seed: u64) -> Vec<Direction> {
    let mesh = problem.space.mesh();
    let mut out = Vec::with_capacity(n_dirs);
    let y_inf = norm_inf(&sp.y_bar);
    let mut adjoint = vec![("adjoint".to_string(), sp.p_bar.values.clone())];
    for kappa in [0.02, 0.1, 0.5] {
        let w: Vec<f64> = sp
            .y_bar
            .iter()
            .map(|&y| if y_inf > 0.0 { (1.0 - y.abs() / (kappa * y_inf)).max(0.0) } else { 1.0 })
            .collect();
        adjoint.push((format!("adjoint-kink-{kappa}"), w.iter().zip(sp.p_bar.iter()).map(|(w, p)| w * p).collect()));
        adjoint.push((format!("kink-{kappa}"), w));
    }
    let n_adjoint = adjoint.len().min(n_dirs.div_ceil(4));
    let n_bumps = n_dirs.saturating_sub(n_adjoint) / 3;
    for (family, values) in adjoint.into_iter().take(n_adjoint) {
        out.push(Direction { id: out.len(), family, values });
    }
    let mut r = rng(seed);
    for _ in 0..n_bumps {
        let values = bump_field(mesh, &mut r, 0.2);
        out.push(Direction { id: out.len(), family: "bump".into(), values });
    }
    while out.len() < n_dirs {
        let values = smooth_field(mesh, &mut r, 3);
        out.push(Direction { id: out.len(), family: "smooth".into(), values });
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hypotheses {
    pub ga: bool,
    pub sa: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub id: usize,
    pub family: String,
    pub q: f64,
    pub smooth_part: f64,
    pub qtilde: f64,
    /// Spread of the per-sequence `Q̃` estimates across the bank.
    pub qtilde_spread: f64,
    pub delta_inf: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub cone: ConeKind,
    pub tau: f64,
    pub n_sampled: usize,
    pub n_nonzero: usize,
    /// Minimum of `Q(ū, p̄; h)` over unit-norm cone samples (so also of
    /// `Q/‖h‖²`); `None` when the scan is vacuous.
    pub min_q: Option<f64>,
    pub argmin_id: Option<usize>,
    pub tolerance: f64,
    pub pass: bool,
    /// No nonzero cone direction was sampled; the pass is vacuous.
    pub vacuous: bool,
    pub hypotheses_ok: bool,
    pub rows: Vec<ScanRow>,
    #[serde(skip)]
    pub argmin_direction: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanSettings<'a> {
    pub bank: &'a [SequenceSpec],
    pub curvature: CurvatureOptions,
    pub n_dirs: usize,
    pub seed: u64,
    pub hypotheses: Hypotheses,
}

fn scan(problem: &Problem, sp: &StationaryPoint, cone: &ConeSpec, settings: &ScanSettings, tolerance: f64, lower: f64) -> Result<ScanReport> {
    let mut rows = Vec::new();
    let mut best: Option<(f64, usize, Vec<f64>)> = None;
    let candidates = candidate_directions(problem, sp, settings.n_dirs, settings.seed);
    for dir in &candidates {
        let h = project_critical(cone, &dir.values);
        let norm = problem.space.norm_l2(&h);
        if !(norm > 1e-14) {
            continue;
        }
        let h = scaled(&h, 1.0 / norm);
        let report = eval_q(problem, sp, &h, settings.bank, &settings.curvature)?;
        rows.push(ScanRow {
            id: dir.id,
            family: dir.family.clone(),
            q: report.q_value,
            smooth_part: report.smooth_part,
            qtilde: report.qtilde_estimate,
            qtilde_spread: report.qtilde_spread,
            delta_inf: report.delta_inf,
        });
        if best.as_ref().is_none_or(|b| report.q_value < b.0) {
            best = Some((report.q_value, dir.id, h));
        }
    }
    let vacuous = rows.is_empty();
    let min_q = best.as_ref().map(|b| b.0);
    Ok(ScanReport {
        cone: cone.kind,
        tau: cone.tau,
        n_sampled: candidates.len(),
        n_nonzero: rows.len(),
        min_q,
        argmin_id: best.as_ref().map(|b| b.1),
        tolerance,
        pass: min_q.is_none_or(|q| q >= lower),
        vacuous,
        hypotheses_ok: settings.hypotheses.ga && settings.hypotheses.sa,
        rows,
        argmin_direction: best.map(|b| b.2),
    })
}

/// Samples `Q(ū, p̄; h) ≥ 0` over the critical cone.
pub fn scan_snc(problem: &Problem, sp: &StationaryPoint, settings: &ScanSettings, opts: &CheckOptions) -> Result<ScanReport> {
    let cone = ConeSpec::critical(problem, sp, opts);
    scan(problem, sp, &cone, settings, opts.snc_tol, -opts.snc_tol)
}

/// Samples `Q(ū, p̄; h) ≥ c₀‖h‖²` over the τ-critical cone; the reported
/// `min_q` is the fitted `c₀`.
pub fn scan_ssc(problem: &Problem, sp: &StationaryPoint, tau: f64, settings: &ScanSettings, opts: &CheckOptions) -> Result<ScanReport> {
    let cone = ConeSpec::tau_critical(problem, sp, tau, opts);
    scan(problem, sp, &cone, settings, opts.ssc_tol, opts.ssc_tol)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthRow {
    pub id: usize,
    pub family: String,
    pub radius: f64,
    pub distance: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport {
    pub rho: f64,
    pub n_probes: usize,
    /// `min (j(u) − j(ū))/‖u − ū‖²` over the probes; an empirical bound only.
    pub fitted_c: Option<f64>,
    pub violations: usize,
    pub growth_tol: f64,
    pub rows: Vec<GrowthRow>,
}

/// Probes `j(u) ≥ j(ū) + c‖u − ū‖²` at admissible points of the ball of
/// radius `rho`. `extra` directions (e.g. an SNC minimiser) are probed first
/// with both signs at radii `rho` and `rho/2`; the remaining probes use
/// seeded random directions at radii cycling through `rho·{1, ¾, ½, ¼}`.
pub fn probe_quadratic_growth(
    problem: &Problem,
    sp: &StationaryPoint,
    rho: f64,
    n_probes: usize,
    seed: u64,
    extra: &[Vec<f64>],
    growth_tol: f64,
) -> Result<GrowthReport> {
    let mesh = problem.space.mesh();
    let mut plan: Vec<(String, f64, Vec<f64>)> = Vec::new();
    for e in extra {
        for radius in [rho, 0.5 * rho] {
            plan.push(("extra".into(), radius, e.clone()));
            plan.push(("extra-negated".into(), radius, scaled(e, -1.0)));
        }
    }
    let mut r = rng(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut k = 0usize;
    while plan.len() < n_probes + 4 * extra.len() {
        let (family, dir) = if k % 4 == 3 {
            ("bump", bump_field(mesh, &mut r, 0.2))
        } else {
            ("smooth", smooth_field(mesh, &mut r, 3))
        };
        let radius = rho * (1.0 - 0.25 * (k % 4) as f64);
        plan.push((family.into(), radius, dir));
        k += 1;
    }
    let mut rows = Vec::with_capacity(plan.len());
    for (id, (family, radius, dir)) in plan.into_iter().enumerate() {
        let norm = problem.space.norm_l2(&dir);
        if !(norm > 0.0) {
            continue;
        }
        let u: Vec<f64> = sp.u_bar.iter().zip(&dir).map(|(u, d)| u + radius * d / norm).collect();
        let u = problem.spec.project(&u);
        let du: Vec<f64> = u.iter().zip(sp.u_bar.iter()).map(|(a, b)| a - b).collect();
        let dist2 = problem.space.inner(&du, &du);
        if !(dist2 > 0.0) {
            continue;
        }
        let (y, _) = solve_state(&problem.space, &u, &problem.solver, Some(&sp.y_bar))?;
        let ratio = (objective_value(problem, &u, &y) - sp.j) / dist2;
        rows.push(GrowthRow { id, family, radius, distance: dist2.sqrt(), ratio });
    }
    let fitted_c = rows.iter().map(|r| r.ratio).reduce(f64::min);
    let violations = rows.iter().filter(|r| r.ratio < -growth_tol).count();
    Ok(GrowthReport { rho, n_probes, fitted_c, violations, growth_tol, rows })
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ConditionReport {
    pub ga: Option<GaReport>,
    pub sa: Option<SaReport>,
    pub s_diff: Option<SDiffReport>,
    pub snc: Option<ScanReport>,
    pub ssc: Option<ScanReport>,
    pub growth: Option<GrowthReport>,
}

impl ConditionReport {
    /// True when every enabled check passed. SNC and SSC failures count;
    /// quadratic growth fails on any violation.
    pub fn all_pass(&self) -> bool {
        self.ga.as_ref().is_none_or(|r| r.pass)
            && self.sa.as_ref().is_none_or(|r| r.pass)
            && self.snc.as_ref().is_none_or(|r| r.pass)
            && self.ssc.as_ref().is_none_or(|r| r.pass)
            && self.growth.as_ref().is_none_or(|r| r.violations == 0)
    }
}
