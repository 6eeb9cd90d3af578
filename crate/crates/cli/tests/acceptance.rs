//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion misses its tolerance or its time budget.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use nsoc_core::conditions::candidate_directions;
use nsoc_core::instances::{
    disk_mesh, disk_state, inverse_crime_box, kink_saddle, manufactured_source, manufactured_state, sine_bump,
    zero_target, SaddleShape,
};
use nsoc_core::sampling::{bump_field, rng, scaled, smooth_field};
use nsoc_core::{
    build_mesh, check_ga, check_s_differentiability, check_sa, default_sequence_bank, difference_quotient,
    eval_dir_derivative_j, eval_q, eval_t, make_stationary_point, minimize, probe_quadratic_growth, scan_snc,
    scan_ssc, solve_directional, solve_state, taylor_expansion, CheckOptions, CurvatureOptions, DomainKind, FemSpace,
    Hypotheses, OptimizerOptions, Problem, ProblemSpec, Role, ScalarField, ScanSettings, SequenceSpec,
    SolverOptions, StationaryPoint, Termination, ZeroBand,
};

type Outcome = Result<String, String>;

/// Name, time budget in seconds, and the check itself.
type Criterion = (&'static str, u64, fn() -> Outcome);

fn ensure(ok: bool, msg: String) -> Outcome {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn square(res: usize) -> Result<FemSpace, String> {
    FemSpace::new(build_mesh(DomainKind::UnitSquare, res).map_err(err)?).map_err(err)
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn axpy(a: &[f64], s: f64, b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + s * y).collect()
}

fn origin(res: usize) -> Result<(Problem, StationaryPoint), String> {
    let p = zero_target(DomainKind::UnitSquare, res, 1.0).map_err(err)?;
    let sp = make_stationary_point(&p, &vec![0.0; p.n()]).map_err(err)?;
    Ok((p, sp))
}

fn saddle(res: usize) -> Result<(Problem, StationaryPoint), String> {
    let (p, u) = kink_saddle(res, SaddleShape::default()).map_err(err)?;
    let sp = make_stationary_point(&p, &u).map_err(err)?;
    Ok((p, sp))
}

fn settings(bank: &[SequenceSpec], n_dirs: usize) -> ScanSettings<'_> {
    ScanSettings {
        bank,
        curvature: CurvatureOptions::default(),
        n_dirs,
        seed: 42,
        hypotheses: Hypotheses { ga: true, sa: true },
    }
}

fn manufactured_convergence() -> Outcome {
    let mut errs = Vec::new();
    for res in [16, 32, 64] {
        let space = square(res)?;
        let (y, _) = solve_state(&space, &manufactured_source(space.mesh()), &SolverOptions::default(), None).map_err(err)?;
        errs.push(max_abs_diff(&y, &manufactured_state(space.mesh())));
    }
    let orders: Vec<f64> = errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    let ok = orders.iter().all(|o| (o - 2.0).abs() <= 0.3);
    let errs: Vec<String> = errs.iter().map(|e| format!("{e:.3e}")).collect();
    ensure(ok, format!("errors [{}], orders {orders:.3?}", errs.join(", ")))
}

fn maximum_principle() -> Outcome {
    let space = square(32)?;
    let opts = SolverOptions::default();
    let mesh = space.mesh();
    let states = [
        vec![0.0; space.n()],
        scaled(&smooth_field(mesh, &mut rng(1), 3), 20.0),
        ScalarField::interpolate(mesh, Role::Control, |p| 40.0 * sine_bump(p) - 15.0).values,
    ];
    let mut r = rng(2);
    let mut worst = f64::INFINITY;
    for u in &states {
        let (y, _) = solve_state(&space, u, &opts, None).map_err(err)?;
        let tol = ZeroBand::default().tol_for(&y);
        for k in 0..200 {
            let h: Vec<f64> = if k % 2 == 0 {
                smooth_field(mesh, &mut r, 3).iter().map(|v| v.abs()).collect()
            } else {
                bump_field(mesh, &mut r, 0.25)
            };
            let (d, _) = solve_directional(&space, &y, &h, tol, &opts).map_err(err)?;
            worst = d.iter().copied().fold(worst, f64::min);
        }
    }
    ensure(worst >= -1e-10, format!("min nodal derivative {worst:.3e} over 600 directions"))
}

fn hadamard_consistency() -> Outcome {
    let space = square(32)?;
    let opts = SolverOptions::default();
    let mut r = rng(3);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let u = scaled(&smooth_field(space.mesh(), &mut r, 3), 10.0);
        let h = smooth_field(space.mesh(), &mut r, 3);
        let (y, _) = solve_state(&space, &u, &opts, None).map_err(err)?;
        let (d, _) = solve_directional(&space, &y, &h, ZeroBand::default().tol_for(&y), &opts).map_err(err)?;
        let q = difference_quotient(&space, &u, &h, 1e-4, &opts).map_err(err)?;
        worst = worst.max(max_abs_diff(&q, &d));
    }
    ensure(worst <= 1e-6, format!("max error {worst:.3e} at t = 1e-4"))
}

fn additivity_defect(problem: &Problem, u: &[f64], h1: &[f64], h2: &[f64]) -> Result<f64, String> {
    let a = eval_dir_derivative_j(problem, u, &axpy(h1, 1.0, h2)).map_err(err)?;
    let b = eval_dir_derivative_j(problem, u, h1).map_err(err)? + eval_dir_derivative_j(problem, u, h2).map_err(err)?;
    Ok((a - b).abs())
}

fn ga_characterization() -> Outcome {
    let opts = CheckOptions::default();
    let mut r = rng(22);
    let mut worst: f64 = 0.0;
    for k in 0..10 {
        let space = square(24)?;
        let target = scaled(&smooth_field(space.mesh(), &mut rng(100 + k), 3), 2.0);
        let problem = Problem::new(space, ProblemSpec::unbounded(1e-2, target, DomainKind::UnitSquare, 24)).map_err(err)?;
        let u = scaled(&smooth_field(problem.space.mesh(), &mut r, 3), 15.0);
        let sp = make_stationary_point(&problem, &u).map_err(err)?;
        if !check_ga(&problem, &sp, &opts).pass {
            return Err(format!("instance {k} does not satisfy GA"));
        }
        for _ in 0..5 {
            let h1 = smooth_field(problem.space.mesh(), &mut r, 3);
            let h2 = smooth_field(problem.space.mesh(), &mut r, 3);
            worst = worst.max(additivity_defect(&problem, &u, &h1, &h2)?);
            worst = worst.max(additivity_defect(&problem, &u, &h1, &scaled(&h1, -1.0))?);
        }
    }
    let space = square(24)?;
    let target = scaled(&smooth_field(space.mesh(), &mut rng(23), 3), 20.0);
    let problem = Problem::new(space, ProblemSpec::unbounded(1.0, target, DomainKind::UnitSquare, 24)).map_err(err)?;
    let u = vec![0.0; problem.n()];
    let sp = make_stationary_point(&problem, &u).map_err(err)?;
    let ga_fails = !check_ga(&problem, &sp, &opts).pass;
    let h = scaled(&smooth_field(problem.space.mesh(), &mut rng(24), 3), 5.0);
    let (delta, _) = solve_directional(&problem.space, &sp.y_bar, &h, sp.zero_tol, &problem.solver).map_err(err)?;
    let t = eval_t(&problem.space, &sp.p_bar, &sp.y_bar, &delta, sp.zero_tol);
    let defect = additivity_defect(&problem, &u, &h, &scaled(&h, -1.0))?;
    ensure(
        worst <= 1e-9 && ga_fails && t != 0.0 && defect >= 1e-3,
        format!("GA defect {worst:.3e}; crafted: GA fails {ga_fails}, T(h) = {t:.3e}, defect {defect:.3e}"),
    )
}

fn disk_structural_assumption() -> Outcome {
    let mesh = disk_mesh(96).map_err(err)?;
    let y = disk_state(&mesh);
    let eps = nsoc_core::conditions::log_grid(1e-3, 1e-1, 20);
    let sa = check_sa(&mesh, &y, &eps);
    let worst = sa.ratio.iter().map(|r| (r / PI - 1.0).abs()).fold(0.0, f64::max);
    ensure(sa.pass && worst <= 0.05, format!("max |ratio/π − 1| = {worst:.3e}, SA pass {}", sa.pass))
}

fn origin_example() -> Outcome {
    let (p, sp) = origin(32)?;
    let mut r = rng(41);
    let mut worst_u: f64 = 0.0;
    for _ in 0..5 {
        let u0 = scaled(&smooth_field(p.space.mesh(), &mut r, 3), 5.0);
        let (u, trace) = minimize(&p, &u0, &OptimizerOptions::default()).map_err(err)?;
        if trace.termination != Termination::Converged {
            return Err(format!("optimizer stopped with {:?}", trace.termination));
        }
        worst_u = worst_u.max(p.space.norm_l2(&u));
    }
    let opts = CheckOptions::default();
    let ga = check_ga(&p, &sp, &opts).pass;
    let sa = check_sa(p.space.mesh(), &sp.y_bar, &opts.eps_grid).pass;
    let sd = check_s_differentiability(p.space.mesh(), &sp.y_bar, sp.zero_tol, 1e-6);
    let area_err = (sd.zero_set_area - 1.0).abs();
    let mut worst_qt: f64 = 0.0;
    for dir in candidate_directions(&p, &sp, 16, 42) {
        let q = eval_q(&p, &sp, &dir.values, &default_sequence_bank(), &CurvatureOptions::default()).map_err(err)?;
        worst_qt = worst_qt.max(q.qtilde_estimate.abs());
    }
    ensure(
        worst_u <= 1e-6 && ga && sa && !sd.differentiable && area_err <= 1e-6 && worst_qt <= 1e-10,
        format!(
            "max ‖ū‖ {worst_u:.3e}, GA {ga}, SA {sa}, differentiable {}, |area − 1| {area_err:.3e}, max |Q̃| {worst_qt:.3e}",
            sd.differentiable
        ),
    )
}

fn curvature_value() -> Outcome {
    let (p, sp) = origin(64)?;
    let h = ScalarField::interpolate(p.space.mesh(), Role::Direction, sine_bump);
    let q = eval_q(&p, &sp, &h, &default_sequence_bank(), &CurvatureOptions::default()).map_err(err)?.q_value;
    let expected = 0.2505813;
    ensure((q - expected).abs() <= 1e-3, format!("Q = {q:.7} (expected {expected})"))
}

fn homogeneity() -> Outcome {
    let bank = default_sequence_bank();
    let opts = CurvatureOptions::default();
    let mut worst: f64 = 0.0;
    for (p, sp) in [origin(24)?, saddle(24)?] {
        for dir in candidate_directions(&p, &sp, 8, 3) {
            let q1 = eval_q(&p, &sp, &dir.values, &bank, &opts).map_err(err)?.q_value;
            for c in [0.5, 2.0, 10.0] {
                let moved: Vec<SequenceSpec> = bank.iter().map(|s| s.transported(c)).collect();
                let qc = eval_q(&p, &sp, &scaled(&dir.values, c), &moved, &opts).map_err(err)?.q_value;
                let scale = (c * c * q1).abs();
                if scale > 0.0 {
                    worst = worst.max((qc - c * c * q1).abs() / scale);
                } else if qc != 0.0 {
                    return Err(format!("Q(h) = 0 but Q(ch) = {qc}"));
                }
            }
        }
    }
    ensure(worst <= 1e-9, format!("max relative defect {worst:.3e}"))
}

fn taylor_identity() -> Outcome {
    let (box_problem, _) = inverse_crime_box(24, 1e-2, 9).map_err(err)?;
    let (u_opt, _) = minimize(&box_problem, &vec![0.0; box_problem.n()], &OptimizerOptions::default()).map_err(err)?;
    let box_sp = make_stationary_point(&box_problem, &u_opt).map_err(err)?;
    let points = [origin(32)?, saddle(32)?, (box_problem, box_sp)];
    let mut r = rng(32);
    let mut worst: f64 = 0.0;
    for (p, sp) in &points {
        for k in 0..20 {
            let dir = smooth_field(p.space.mesh(), &mut r, 3);
            let u = p.spec.project(&axpy(&sp.u_bar, 10f64.powi(-(k % 4)), &dir));
            let terms = taylor_expansion(p, sp, &u).map_err(err)?;
            worst = worst.max(terms.residual.abs() / (1.0 + terms.j_u.abs()));
        }
    }
    ensure(worst <= 1e-8, format!("max scaled residual {worst:.3e} over 60 probes"))
}

fn no_gap_coupling() -> Outcome {
    let bank = default_sequence_bank();
    let opts = CheckOptions::default();
    let nu = 1.0;
    let (p, sp) = origin(32)?;
    let ssc = scan_ssc(&p, &sp, 1e-3, &settings(&bank, 32), &opts).map_err(err)?;
    let snc = scan_snc(&p, &sp, &settings(&bank, 32), &opts).map_err(err)?;
    let extra: Vec<Vec<f64>> = snc.argmin_direction.into_iter().collect();
    let growth = probe_quadratic_growth(&p, &sp, 1e-2, 200, 42, &extra, opts.growth_tol).map_err(err)?;
    let c0 = ssc.min_q.unwrap_or(f64::NAN);
    let c = growth.fitted_c.unwrap_or(f64::NAN);
    let origin_ok = ssc.pass && c0 >= 0.9 * nu && c >= 0.5 * nu * 0.95 && growth.violations == 0;

    let (p, sp) = saddle(32)?;
    let snc = scan_snc(&p, &sp, &settings(&bank, 32), &opts).map_err(err)?;
    let min_q = snc.min_q.unwrap_or(f64::NAN);
    let extra: Vec<Vec<f64>> = snc.argmin_direction.into_iter().collect();
    let growth_s = probe_quadratic_growth(&p, &sp, 1e-2, 200, 42, &extra, opts.growth_tol).map_err(err)?;
    let saddle_ok = min_q <= -1e-4 && growth_s.violations > 0;
    ensure(
        origin_ok && saddle_ok,
        format!(
            "origin: c₀ {c0:.4}, growth c {c:.4}, violations {}; saddle: min Q {min_q:.3e}, violations {}",
            growth.violations, growth_s.violations
        ),
    )
}

fn pipeline(out: &Path) -> Result<(), String> {
    let o = out.display().to_string();
    for cmd in ["optimize", "check", "report"] {
        let code = nsoc_cli::run(["nsoc", cmd, "--seed", "42", "--out", o.as_str()]);
        if code != nsoc_cli::EXIT_OK {
            return Err(format!("{cmd} exited with {code}"));
        }
    }
    Ok(())
}

fn snapshot(dir: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .map_err(err)?
        .map(|e| {
            let e = e.map_err(err)?;
            Ok((e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).map_err(err)?))
        })
        .collect::<Result<_, String>>()?;
    files.sort();
    Ok(files)
}

fn determinism() -> Outcome {
    let a = tempfile::tempdir().map_err(err)?;
    let b = tempfile::tempdir().map_err(err)?;
    pipeline(a.path())?;
    pipeline(b.path())?;
    let (sa, sb) = (snapshot(a.path())?, snapshot(b.path())?);
    let names: Vec<&str> = sa.iter().map(|(n, _)| n.as_str()).collect();
    let differing: Vec<&str> = sa.iter().zip(&sb).filter(|(x, y)| x != y).map(|(x, _)| x.0.as_str()).collect();
    ensure(
        sa.len() == sb.len() && differing.is_empty(),
        format!("{} artifacts compared ({}), differing: {differing:?}", names.len(), names.join(", ")),
    )
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("manufactured-solution convergence", 30, manufactured_convergence),
        ("maximum principle", 60, maximum_principle),
        ("Hadamard consistency", 60, hadamard_consistency),
        ("GA characterization", 60, ga_characterization),
        ("disk structural assumption", 30, disk_structural_assumption),
        ("zero-target example", 120, origin_example),
        ("curvature value", 30, curvature_value),
        ("homogeneity", 30, homogeneity),
        ("Taylor identity", 120, taylor_identity),
        ("no-gap coupling", 180, no_gap_coupling),
        ("determinism", 300, determinism),
    ];
    let mut failed = 0;
    for (k, (name, budget, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = f();
        let elapsed = start.elapsed();
        let in_time = elapsed <= Duration::from_secs(*budget);
        let (ok, msg) = match outcome {
            Ok(m) => (in_time, m),
            Err(m) => (false, m),
        };
        failed += usize::from(!ok);
        let verdict = if ok { "PASS" } else { "FAIL" };
        println!("{verdict} criterion {:>2} {name}: {msg} [{:.2}s / {budget}s]", k + 1, elapsed.as_secs_f64());
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
