//! The four subcommands and their artifacts.

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use nsoc_core::conditions::{GaReport, SDiffReport};
use nsoc_core::instances::{manufactured_source, manufactured_state};
use nsoc_core::sampling::{rng, scaled, smooth_field};
use nsoc_core::{
    build_mesh, Bounds, check_ga, check_s_differentiability, check_sa, eval_adjoint, make_stationary_point, minimize,
    norm_inf, objective::objective_value, probe_quadratic_growth, scan_snc, scan_ssc, solve_state, ConditionReport,
    DomainKind, FemSpace, Hypotheses, Problem, Role, ScalarField, ScanSettings, SolverOptions, StationaryPoint,
    Termination,
};
use serde::{Deserialize, Serialize};

use crate::config::{read_field, CheckPoint, InitialControl, Instance, RunConfig};
use crate::{CliError, EXIT_CHECK_FAILED, EXIT_NONCONVERGED};

fn out_dir(cfg: &RunConfig) -> Result<PathBuf, CliError> {
    let dir = cfg.output.dir.clone();
    fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    Ok(dir)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::io(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::config(format!("missing artifact {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::io(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| CliError::io(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

fn write_field(path: &Path, field: &ScalarField) -> Result<(), CliError> {
    let file = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    field.write_text(BufWriter::new(file)).map_err(|e| CliError::io(path, e))
}

fn write_mesh(path: &Path, problem: &Problem) -> Result<(), CliError> {
    let file = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    problem.space.mesh().write_text(BufWriter::new(file)).map_err(|e| CliError::io(path, e))
}

fn random_control(problem: &Problem, cfg: &RunConfig) -> ScalarField {
    let mut r = rng(cfg.scan.seed);
    let v = smooth_field(problem.space.mesh(), &mut r, 3);
    ScalarField::new(Role::Control, scaled(&v, cfg.control.random_scale))
}

fn initial_control(
    problem: &Problem,
    special: Option<ScalarField>,
    cfg: &RunConfig,
    auto_random: bool,
) -> Result<ScalarField, CliError> {
    let n = problem.n();
    let u = match cfg.control.initial {
        InitialControl::Auto if auto_random => random_control(problem, cfg),
        InitialControl::Auto => special.unwrap_or_else(|| ScalarField::zeros(Role::Control, n)),
        InitialControl::Zero => ScalarField::zeros(Role::Control, n),
        InitialControl::Random => random_control(problem, cfg),
        InitialControl::Instance => {
            special.ok_or_else(|| CliError::config("control.initial = \"instance\": the instance has no control"))?
        }
        InitialControl::File => {
            let path = cfg.control.file.as_deref().expect("validated");
            let u = read_field(path)?;
            u.check_len(n).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
            u
        }
    };
    Ok(u.with_role(Role::Control))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveSummary {
    pub nodes: usize,
    pub newton: nsoc_core::NewtonReport,
    pub state_residual: f64,
    pub objective: f64,
    pub state_max: f64,
    pub state_min: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub resolution: usize,
    pub h: f64,
    pub max_error: f64,
    pub order: Option<f64>,
}

/// Max nodal error of the state for the manufactured source against
/// `sin(πx₁) sin(πx₂)`, with observed orders between consecutive rows.
pub fn manufactured_convergence(resolutions: &[usize], solver: &SolverOptions) -> Result<Vec<ConvergenceRow>, CliError> {
    let mut rows: Vec<ConvergenceRow> = Vec::new();
    for &res in resolutions {
        let space = FemSpace::new(build_mesh(DomainKind::UnitSquare, res).map_err(CliError::from_core)?)
            .map_err(CliError::from_core)?;
        let u = manufactured_source(space.mesh());
        let exact = manufactured_state(space.mesh());
        let (y, _) = solve_state(&space, &u, solver, None).map_err(CliError::from_core)?;
        let err = y.iter().zip(exact.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let h = 1.0 / res as f64;
        let order = rows.last().map(|prev| (prev.max_error / err).ln() / (prev.h / h).ln());
        rows.push(ConvergenceRow { resolution: res, h, max_error: err, order });
    }
    Ok(rows)
}

pub fn cmd_solve(cfg: &RunConfig) -> Result<(), CliError> {
    let (problem, special) = cfg.build()?;
    let u = initial_control(&problem, special, cfg, false)?;
    let dir = out_dir(cfg)?;
    let (y, newton) = solve_state(&problem.space, &u, &problem.solver, None).map_err(CliError::from_core)?;
    let p = eval_adjoint(&problem, &y).map_err(CliError::from_core)?;
    write_mesh(&dir.join("mesh.txt"), &problem)?;
    write_field(&dir.join("u.txt"), &u)?;
    write_field(&dir.join("y.txt"), &y)?;
    write_field(&dir.join("p.txt"), &p)?;
    let summary = SolveSummary {
        nodes: problem.n(),
        state_residual: newton.final_residual,
        newton,
        objective: objective_value(&problem, &u, &y),
        state_max: y.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        state_min: y.iter().copied().fold(f64::INFINITY, f64::min),
    };
    write_json(&dir.join("newton.json"), &summary)?;
    if cfg.problem.instance == Instance::Manufactured {
        let rows = manufactured_convergence(&[16, 32, 64], &problem.solver)?;
        write_csv(&dir.join("convergence.csv"), &rows)?;
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OptimizeSummary {
    pub termination: Termination,
    pub iterations: usize,
    pub objective: f64,
    pub projection_residual: f64,
    pub control_norm_l2: f64,
    pub control_norm_inf: f64,
    pub adjoint_residual: f64,
    pub state_residual: f64,
    /// `gateaux` when the adjoint vanishes on the zero set of the state,
    /// otherwise `clarke`.
    pub stationarity: String,
    /// Hypotheses the optimizer relies on but does not verify.
    #[serde(default)]
    pub assumptions: Vec<String>,
}

fn optimizer_assumptions(problem: &Problem) -> Vec<String> {
    match problem.spec.bounds {
        Bounds::Unbounded => vec!["unbounded controls: a minimizer exists because j is coercive (j(u) >= nu/2 |u|^2)".into()],
        Bounds::Box { .. } => vec!["box constraints: the admissible set is bounded, closed and convex".into()],
    }
}

#[derive(Serialize)]
struct TraceRow {
    iter: usize,
    j: f64,
    residual: f64,
    step: f64,
}

pub fn cmd_optimize(cfg: &RunConfig) -> Result<(), CliError> {
    let (problem, special) = cfg.build()?;
    let u0 = initial_control(&problem, special, cfg, true)?;
    let dir = out_dir(cfg)?;
    let (u, trace) = minimize(&problem, &u0, &cfg.optimizer_options()).map_err(CliError::from_core)?;
    let sp = make_stationary_point(&problem, &u).map_err(CliError::from_core)?;
    let ga = check_ga(&problem, &sp, &cfg.check_options());
    write_mesh(&dir.join("mesh.txt"), &problem)?;
    write_field(&dir.join("u_bar.txt"), &sp.u_bar)?;
    write_field(&dir.join("y_bar.txt"), &sp.y_bar)?;
    write_field(&dir.join("p_bar.txt"), &sp.p_bar)?;
    let rows: Vec<TraceRow> =
        trace.history.iter().map(|r| TraceRow { iter: r.iter, j: r.j, residual: r.residual, step: r.step }).collect();
    write_csv(&dir.join("trace.csv"), &rows)?;
    let summary = OptimizeSummary {
        termination: trace.termination,
        iterations: trace.iterations,
        objective: sp.j,
        projection_residual: sp.residuals.stationarity,
        control_norm_l2: problem.space.norm_l2(&sp.u_bar),
        control_norm_inf: norm_inf(&sp.u_bar),
        adjoint_residual: sp.residuals.adjoint,
        state_residual: sp.residuals.state,
        stationarity: if ga.pass { "gateaux" } else { "clarke" }.to_string(),
        assumptions: optimizer_assumptions(&problem),
    };
    write_json(&dir.join("optimize.json"), &summary)?;
    match trace.termination {
        Termination::Converged => Ok(()),
        t => Err(CliError::new(
            EXIT_NONCONVERGED,
            format!("optimizer stopped without convergence ({t:?}) after {} iterations, residual {:e}", trace.iterations, trace.residual),
        )),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckSummary {
    /// `instance` or `optimized`.
    pub point: String,
    pub nodes: usize,
    pub objective: f64,
    pub projection_residual: f64,
    pub zero_tol: f64,
    pub enabled: Vec<String>,
    pub hypotheses: Hypotheses,
    pub all_pass: bool,
    pub report: ConditionReport,
}

fn stationary_point(cfg: &RunConfig, problem: &Problem, special: Option<ScalarField>) -> Result<(StationaryPoint, String), CliError> {
    let use_instance = match cfg.check.point {
        CheckPoint::Instance => true,
        CheckPoint::Optimized => false,
        CheckPoint::Auto => matches!(cfg.problem.instance, Instance::ZeroTarget | Instance::KinkSaddle),
    };
    let (u, label) = if use_instance {
        let u = match cfg.problem.instance {
            Instance::ZeroTarget | Instance::KinkSaddle => special,
            _ => None,
        }
        .ok_or_else(|| CliError::config("check.point = \"instance\": the instance has no exact stationary point"))?;
        (u, "instance")
    } else {
        let path = cfg.output.dir.join("u_bar.txt");
        if !path.exists() {
            return Err(CliError::config(format!("missing artifact {}: run optimize first", path.display())));
        }
        let u = read_field(&path)?;
        u.check_len(problem.n()).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        (u, "optimized")
    };
    let sp = make_stationary_point(problem, &u).map_err(CliError::from_core)?;
    Ok((sp, label.to_string()))
}

#[derive(Serialize)]
struct SensitivityRow<'a> {
    check: &'a str,
    factor: f64,
    area: f64,
}

#[derive(Serialize)]
struct RatioRow {
    eps: f64,
    band_measure: f64,
    ratio: f64,
}

fn sensitivity_rows<'a>(ga: Option<&'a GaReport>, sd: Option<&'a SDiffReport>) -> Vec<SensitivityRow<'a>> {
    let mut rows = Vec::new();
    if let Some(g) = ga {
        rows.push(SensitivityRow { check: "ga", factor: 1.0, area: g.band_measure_p_nonzero });
        rows.extend(g.sensitivity.iter().map(|&(f, a)| SensitivityRow { check: "ga", factor: f, area: a }));
    }
    if let Some(s) = sd {
        rows.push(SensitivityRow { check: "s-diff", factor: 1.0, area: s.zero_set_area });
        rows.extend(s.sensitivity.iter().map(|&(f, a)| SensitivityRow { check: "s-diff", factor: f, area: a }));
    }
    rows
}

pub fn cmd_check(cfg: &RunConfig) -> Result<(), CliError> {
    let (problem, special) = cfg.build()?;
    let dir = out_dir(cfg)?;
    let (sp, point) = stationary_point(cfg, &problem, special)?;
    let opts = cfg.check_options();
    let mesh = problem.space.mesh();
    let c = &cfg.check;
    let mut report = ConditionReport::default();
    if c.ga {
        report.ga = Some(check_ga(&problem, &sp, &opts));
    }
    if c.sa {
        report.sa = Some(check_sa(mesh, &sp.y_bar, &opts.eps_grid));
    }
    if c.s_diff {
        report.s_diff =
            Some(check_s_differentiability(mesh, &sp.y_bar, sp.zero_tol, opts.area_tol_rel * problem.space.area()));
    }
    let hypotheses = Hypotheses {
        ga: report.ga.as_ref().is_some_and(|r| r.pass),
        sa: report.sa.as_ref().is_some_and(|r| r.pass),
    };
    let settings = ScanSettings {
        bank: &cfg.curvature.bank,
        curvature: cfg.curvature_options(),
        n_dirs: cfg.scan.n_dirs,
        seed: cfg.scan.seed,
        hypotheses,
    };
    if c.snc {
        report.snc = Some(scan_snc(&problem, &sp, &settings, &opts).map_err(CliError::from_core)?);
    }
    if c.ssc {
        report.ssc = Some(scan_ssc(&problem, &sp, cfg.scan.tau, &settings, &opts).map_err(CliError::from_core)?);
    }
    if c.growth {
        let extra: Vec<Vec<f64>> = report.snc.as_ref().and_then(|s| s.argmin_direction.clone()).into_iter().collect();
        report.growth = Some(
            probe_quadratic_growth(&problem, &sp, cfg.scan.rho, cfg.scan.n_probes, cfg.scan.seed, &extra, opts.growth_tol)
                .map_err(CliError::from_core)?,
        );
    }
    let enabled = [("ga", c.ga), ("sa", c.sa), ("s-diff", c.s_diff), ("snc", c.snc), ("ssc", c.ssc), ("growth", c.growth)]
        .iter()
        .filter(|(_, on)| *on)
        .map(|(n, _)| n.to_string())
        .collect();
    if let Some(sa) = &report.sa {
        let rows: Vec<RatioRow> = (0..sa.eps.len())
            .map(|i| RatioRow { eps: sa.eps[i], band_measure: sa.band_measure[i], ratio: sa.ratio[i] })
            .collect();
        write_csv(&dir.join("sa_ratios.csv"), &rows)?;
    }
    if let Some(s) = &report.snc {
        write_csv(&dir.join("snc_scan.csv"), &s.rows)?;
    }
    if let Some(s) = &report.ssc {
        write_csv(&dir.join("ssc_scan.csv"), &s.rows)?;
    }
    if let Some(g) = &report.growth {
        write_csv(&dir.join("growth.csv"), &g.rows)?;
    }
    write_csv(&dir.join("sensitivity.csv"), &sensitivity_rows(report.ga.as_ref(), report.s_diff.as_ref()))?;
    let all_pass = report.all_pass();
    let summary = CheckSummary {
        point,
        nodes: problem.n(),
        objective: sp.j,
        projection_residual: sp.residuals.stationarity,
        zero_tol: sp.zero_tol,
        enabled,
        hypotheses,
        all_pass,
        report,
    };
    write_json(&dir.join("check.json"), &summary)?;
    if all_pass {
        Ok(())
    } else {
        Err(CliError::new(EXIT_CHECK_FAILED, failed_checks(&summary.report).join(", ") + " failed"))
    }
}

fn failed_checks(r: &ConditionReport) -> Vec<&'static str> {
    let mut out = Vec::new();
    if r.ga.as_ref().is_some_and(|x| !x.pass) {
        out.push("GA");
    }
    if r.sa.as_ref().is_some_and(|x| !x.pass) {
        out.push("SA");
    }
    if r.snc.as_ref().is_some_and(|x| !x.pass) {
        out.push("SNC");
    }
    if r.ssc.as_ref().is_some_and(|x| !x.pass) {
        out.push("SSC");
    }
    if r.growth.as_ref().is_some_and(|x| x.violations > 0) {
        out.push("quadratic growth");
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportLine {
    pub check: String,
    pub statement: String,
    pub value: Option<f64>,
    pub threshold: Option<f64>,
    pub pass: Option<bool>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Summary {
    pub point: String,
    pub objective: f64,
    pub projection_residual: f64,
    pub all_pass: bool,
    pub checks: Vec<ReportLine>,
    pub optimize: Option<OptimizeSummary>,
    pub solve: Option<SolveSummary>,
}

fn report_lines(r: &ConditionReport) -> Vec<ReportLine> {
    let mut lines = Vec::new();
    let mut push = |check: &str, statement: &str, value: Option<f64>, threshold: Option<f64>, pass: Option<bool>| {
        lines.push(ReportLine { check: check.into(), statement: statement.into(), value, threshold, pass })
    };
    if let Some(g) = &r.ga {
        push("GA", "meas({y=0} ∩ {p≠0}) = 0", Some(g.band_measure_p_nonzero), Some(g.area_tol), Some(g.pass));
    }
    if let Some(s) = &r.sa {
        push("SA", "meas({0<|y|<ε}) ≤ c_s·ε, fitted c_s", Some(s.fitted_c_s), None, Some(s.pass));
    }
    if let Some(s) = &r.s_diff {
        push("S-differentiability", "meas({S(u)=0}) = 0", Some(s.zero_set_area), Some(s.area_tol), None);
    }
    if let Some(s) = &r.snc {
        push("SNC", "Q(ū,p̄;h) ≥ 0 on the critical cone, min Q", s.min_q, Some(-s.tolerance), Some(s.pass));
    }
    if let Some(s) = &r.ssc {
        push("SSC", "Q(ū,p̄;h) ≥ c₀‖h‖² on the τ-critical cone, fitted c₀", s.min_q, Some(s.tolerance), Some(s.pass));
    }
    if let Some(g) = &r.growth {
        push(
            "quadratic growth",
            "j(u) ≥ j(ū) + c‖u−ū‖² near ū, fitted c",
            g.fitted_c,
            Some(-g.growth_tol),
            Some(g.violations == 0),
        );
    }
    lines
}

fn fmt_pass(p: Option<bool>) -> &'static str {
    match p {
        Some(true) => "pass",
        Some(false) => "FAIL",
        None => "-",
    }
}

pub fn cmd_report(cfg: &RunConfig) -> Result<(), CliError> {
    let dir = cfg.output.dir.clone();
    let check: CheckSummary = read_json(&dir.join("check.json"))?;
    let optimize_path = dir.join("optimize.json");
    let optimize: Option<OptimizeSummary> =
        if optimize_path.exists() { Some(read_json(&optimize_path)?) } else { None };
    let solve_path = dir.join("newton.json");
    let solve: Option<SolveSummary> = if solve_path.exists() { Some(read_json(&solve_path)?) } else { None };
    let checks = report_lines(&check.report);
    write_csv(&dir.join("summary.csv"), &checks)?;
    let mut text = String::new();
    text.push_str(&format!("stationary point: {} (j = {:e}, projection residual = {:e})\n", check.point, check.objective, check.projection_residual));
    if let Some(o) = &optimize {
        text.push_str(&format!(
            "optimizer: {:?} after {} iterations, ‖u‖ = {:e}, stationarity: {}\n",
            o.termination, o.iterations, o.control_norm_l2, o.stationarity
        ));
        for a in &o.assumptions {
            text.push_str(&format!("assumed: {a}\n"));
        }
    }
    if let Some(s) = &solve {
        text.push_str(&format!("state solve: {} Newton steps, residual {:e}\n", s.newton.iterations, s.state_residual));
    }
    for l in &checks {
        let value = l.value.map_or_else(|| "-".to_string(), |v| format!("{v:.6e}"));
        text.push_str(&format!("{:<20} {:<52} {:>14}  {}\n", l.check, l.statement, value, fmt_pass(l.pass)));
    }
    if let Some(s) = &check.report.s_diff {
        let verdict = if s.differentiable { "yes" } else { "no" };
        text.push_str(&format!("control-to-state map Gâteaux differentiable at ū: {verdict}\n"));
    }
    if let Some(s) = &check.report.snc {
        if s.vacuous {
            text.push_str("SNC: no nonzero cone direction sampled (vacuous)\n");
        }
    }
    if check.report.growth.is_some() {
        text.push_str("quadratic growth is probed by sampling: no violation found is not a proof\n");
    }
    if !(check.hypotheses.ga && check.hypotheses.sa) {
        text.push_str("note: GA or SA not established; second-order conclusions are not covered\n");
    }
    text.push_str(&format!("overall: {}\n", if check.all_pass { "pass" } else { "FAIL" }));
    fs::write(dir.join("summary.txt"), &text).map_err(|e| CliError::io(&dir.join("summary.txt"), e))?;
    let summary = Summary {
        point: check.point,
        objective: check.objective,
        projection_residual: check.projection_residual,
        all_pass: check.all_pass,
        checks,
        optimize,
        solve,
    };
    write_json(&dir.join("summary.json"), &summary)
}
