mod common;

use nsoc_core::conditions::candidate_directions;
use nsoc_core::instances::{inverse_crime_box, kink_saddle, sine_bump, zero_target, SaddleShape};
use nsoc_core::sampling::{rng, scaled, smooth_field};
use nsoc_core::{
    check_sa, conditions::log_grid, default_sequence_bank, eval_q, eval_q_underline, make_stationary_point, minimize, norm_inf,
    taylor_expansion, CheckOptions, CurvatureOptions, DomainKind, OptimizerOptions, Problem, Role, ScalarField,
    SequenceSpec, StationaryPoint, Termination,
};

fn zero_point(res: usize) -> (Problem, StationaryPoint) {
    let p = zero_target(DomainKind::UnitSquare, res, 1.0).unwrap();
    let sp = make_stationary_point(&p, &vec![0.0; p.n()]).unwrap();
    (p, sp)
}

fn saddle_point(res: usize) -> (Problem, StationaryPoint) {
    let (p, u) = kink_saddle(res, SaddleShape::default()).unwrap();
    let sp = make_stationary_point(&p, &u).unwrap();
    (p, sp)
}

#[test]
fn curvature_of_sine_direction_at_the_origin() {
    let (p, sp) = zero_point(64);
    let h = ScalarField::interpolate(p.space.mesh(), Role::Direction, sine_bump);
    let r = eval_q(&p, &sp, &h, &default_sequence_bank(), &CurvatureOptions::default()).unwrap();
    let pi2 = std::f64::consts::PI.powi(2);
    let expected = 0.25 + 0.25 / (2.0 * pi2 + 1.0).powi(2);
    assert!((r.q_value - expected).abs() <= 1e-3, "{} vs {expected}", r.q_value);
    assert!(r.qtilde_estimate.abs() <= 1e-10);
}

#[test]
fn curvature_is_homogeneous_of_degree_two() {
    for (p, sp) in [zero_point(24), saddle_point(24)] {
        let bank = default_sequence_bank();
        let opts = CurvatureOptions::default();
        for dir in candidate_directions(&p, &sp, 8, 3) {
            let q1 = eval_q(&p, &sp, &dir.values, &bank, &opts).unwrap().q_value;
            for c in [0.5, 2.0, 10.0] {
                let moved: Vec<SequenceSpec> = bank.iter().map(|s| s.transported(c)).collect();
                let qc = eval_q(&p, &sp, &scaled(&dir.values, c), &moved, &opts).unwrap().q_value;
                assert!((qc - c * c * q1).abs() <= 1e-9 * (c * c * q1).abs().max(1e-300), "{} c={c}: {qc} vs {}", dir.family, c * c * q1);
            }
        }
    }
}

/// `Σ m_i` over nodes with `0 < |ȳ_i| < ε`: the band measure seen by lumped
/// quadrature, which is how every integral of `ζ` is evaluated.
fn lumped_band(p: &Problem, y: &[f64], eps: f64) -> f64 {
    y.iter().zip(p.space.lumped()).filter(|(v, _)| **v != 0.0 && v.abs() < eps).map(|(_, m)| m).sum()
}

#[test]
fn kink_term_respects_the_structural_bound() {
    let (p, sp) = saddle_point(32);
    assert!(check_sa(p.space.mesh(), &sp.y_bar, &CheckOptions::default().eps_grid).pass);
    let c_s = log_grid(1e-8, 1e-1, 71).iter().map(|&e| lumped_band(&p, &sp.y_bar, e) / e).fold(0.0, f64::max);
    let p_inf = norm_inf(&sp.p_bar);
    let mut nontrivial = 0;
    for dir in candidate_directions(&p, &sp, 16, 5) {
        let r = eval_q(&p, &sp, &dir.values, &default_sequence_bank(), &CurvatureOptions::default()).unwrap();
        let bound = c_s * p_inf * r.delta_inf * r.delta_inf * (1.0 + 1e-6);
        assert!(r.qtilde_estimate.abs() <= bound, "{}: |{}| > {bound}", dir.family, r.qtilde_estimate);
        nontrivial += usize::from(r.qtilde_estimate != 0.0);
    }
    assert!(nontrivial > 0);
}

#[test]
fn vanishing_perturbations_do_not_move_the_tail() {
    let (p, sp) = saddle_point(64);
    let h = smooth_field(p.space.mesh(), &mut rng(31), 3);
    let seq = SequenceSpec::new(1e-2, 0.7, 25).unwrap();
    let opts = CurvatureOptions::default();
    let base = eval_q_underline(&p, &sp, &seq, &h, &opts).unwrap();
    let mut changes = Vec::new();
    for n in [4usize, 8, 16] {
        let hn: Vec<f64> = p
            .space
            .mesh()
            .nodes()
            .iter()
            .zip(&h)
            .map(|(x, v)| v + (n as f64 * std::f64::consts::PI * x[0]).sin() / n as f64)
            .collect();
        let moved = eval_q_underline(&p, &sp, &seq, &hn, &opts).unwrap();
        let change = base
            .samples
            .iter()
            .zip(&moved.samples)
            .filter_map(|(a, b)| Some((a.value? - b.value?).abs()))
            .fold(0.0, f64::max);
        changes.push(change);
    }
    assert!(changes[2] < changes[0], "{changes:?}");
}

#[test]
fn taylor_identity_holds_at_stationary_points() {
    let (box_problem, _) = inverse_crime_box(24, 1e-2, 9).unwrap();
    let (u_opt, trace) = minimize(&box_problem, &vec![0.0; box_problem.n()], &OptimizerOptions::default()).unwrap();
    assert_eq!(trace.termination, Termination::Converged);
    let box_sp = make_stationary_point(&box_problem, &u_opt).unwrap();
    let points = [zero_point(32), saddle_point(32), (box_problem, box_sp)];
    let mut r = rng(32);
    for (p, sp) in &points {
        for k in 0..20 {
            let dir = smooth_field(p.space.mesh(), &mut r, 3);
            let radius = 10f64.powi(-(k % 4));
            let u = p.spec.project(&common::axpy(&sp.u_bar, radius, &dir));
            let terms = taylor_expansion(p, sp, &u).unwrap();
            assert!(terms.residual.abs() <= 1e-8 * (1.0 + terms.j_u.abs()), "{terms:?}");
        }
    }
}
