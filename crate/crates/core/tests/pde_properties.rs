mod common;

use nsoc_core::instances::sine_bump;
use nsoc_core::sampling::{bump_field, rng, scaled, smooth_field};
use nsoc_core::{difference_quotient, norm_inf, solve_directional, solve_state, Role, ScalarField, SolverOptions, ZeroBand};
use proptest::prelude::*;

#[test]
fn directional_derivative_obeys_maximum_principle() {
    let space = common::square(24);
    let opts = SolverOptions::default();
    let mesh = space.mesh();
    let states = [
        vec![0.0; space.n()],
        scaled(&smooth_field(mesh, &mut rng(1), 3), 20.0),
        ScalarField::interpolate(mesh, Role::Control, |p| 40.0 * sine_bump(p) - 15.0).values,
    ];
    let mut r = rng(2);
    for u in &states {
        let (y, _) = solve_state(&space, u, &opts, None).unwrap();
        let tol = ZeroBand::default().tol_for(&y);
        for k in 0..200 {
            let h: Vec<f64> = if k % 2 == 0 {
                smooth_field(mesh, &mut r, 3).iter().map(|v| v.abs()).collect()
            } else {
                bump_field(mesh, &mut r, 0.25)
            };
            let (d, _) = solve_directional(&space, &y, &h, tol, &opts).unwrap();
            let min = d.iter().copied().fold(f64::INFINITY, f64::min);
            assert!(min >= -1e-10, "min {min}");
        }
    }
}

#[test]
fn difference_quotients_approach_the_directional_derivative() {
    let space = common::square(32);
    let opts = SolverOptions::default();
    let mut r = rng(3);
    for _ in 0..20 {
        let u = scaled(&smooth_field(space.mesh(), &mut r, 3), 10.0);
        let h = smooth_field(space.mesh(), &mut r, 3);
        let (y, _) = solve_state(&space, &u, &opts, None).unwrap();
        let (d, _) = solve_directional(&space, &y, &h, ZeroBand::default().tol_for(&y), &opts).unwrap();
        let errs: Vec<f64> = [1e-1, 1e-2, 1e-3, 1e-4]
            .iter()
            .map(|&t| common::max_abs_diff(&difference_quotient(&space, &u, &h, t, &opts).unwrap(), &d))
            .collect();
        for w in errs.windows(2) {
            assert!(w[1] <= 1.1 * w[0] + 1e-9, "{errs:?}");
        }
        assert!(errs[3] <= 1e-6, "{errs:?}");
    }
}

#[test]
fn state_map_is_lipschitz_with_green_row_constant() {
    let space = common::square(24);
    let opts = SolverOptions::default();
    let n = space.n();
    let shift = -1e3;
    let base = vec![shift; n];
    let (y_base, _) = solve_state(&space, &base, &opts, None).unwrap();
    // Deep in the negative regime S is linear, S = A⁻¹M, and the worst
    // ratio at node i is attained along A⁻¹eᵢ.
    let mut c_fit: f64 = 0.0;
    for &i in space.interior().iter().step_by(7) {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        let g = space.solve_shifted(&vec![0.0; n], &e).unwrap();
        let (y, _) = solve_state(&space, &common::axpy(&base, 1.0, &g), &opts, None).unwrap();
        c_fit = c_fit.max(common::max_abs_diff(&y, &y_base) / space.norm_l2(&g));
    }
    let mut r = rng(8);
    for _ in 0..100 {
        let u1 = scaled(&smooth_field(space.mesh(), &mut r, 3), 30.0);
        let u2 = common::axpy(&u1, 1.0, &bump_field(space.mesh(), &mut r, 0.3));
        let (y1, _) = solve_state(&space, &u1, &opts, None).unwrap();
        let (y2, _) = solve_state(&space, &u2, &opts, None).unwrap();
        let du: Vec<f64> = u1.iter().zip(&u2).map(|(a, b)| a - b).collect();
        let ratio = common::max_abs_diff(&y1, &y2) / space.norm_l2(&du);
        assert!(ratio <= 1.01 * c_fit, "{ratio} > {c_fit}");
    }
}

#[test]
fn newton_active_sets_settle() {
    let space = common::square(32);
    let mut r = rng(9);
    for _ in 0..10 {
        let u = scaled(&smooth_field(space.mesh(), &mut r, 3), 50.0);
        let (_, rep) = solve_state(&space, &u, &SolverOptions::default(), None).unwrap();
        assert!(rep.converged);
        assert_eq!(rep.active_set_changes.last().copied(), Some(0), "{:?}", rep.active_set_changes);
    }
}

#[test]
fn oscillating_directions_have_converging_derivatives() {
    let res = 64;
    let space = common::square(res);
    let opts = SolverOptions::default();
    let u = scaled(&smooth_field(space.mesh(), &mut rng(10), 3), 20.0);
    let (y, _) = solve_state(&space, &u, &opts, None).unwrap();
    let tol = ZeroBand::default().tol_for(&y);
    let h = smooth_field(space.mesh(), &mut rng(11), 3);
    let (d, _) = solve_directional(&space, &y, &h, tol, &opts).unwrap();
    let mut errs = Vec::new();
    for k in [2usize, 4, 8, 16, 32] {
        let hk: Vec<f64> = space
            .mesh()
            .nodes()
            .iter()
            .zip(&h)
            .map(|(p, v)| v + (k as f64 * std::f64::consts::PI * p[0]).sin())
            .collect();
        let (dk, _) = solve_directional(&space, &y, &hk, tol, &opts).unwrap();
        errs.push(common::max_abs_diff(&dk, &d));
    }
    for w in errs.windows(2) {
        assert!(w[1] < w[0], "{errs:?}");
    }
    assert!(errs[errs.len() - 1] < 0.05 * errs[0], "{errs:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn state_is_monotone_in_the_control(seed in 0u64..1000, amp in 0.1f64..40.0) {
        let space = common::square(10);
        let mut r = rng(seed);
        let u = scaled(&smooth_field(space.mesh(), &mut r, 3), amp);
        let bump = bump_field(space.mesh(), &mut r, 0.3);
        let (y1, _) = solve_state(&space, &u, &SolverOptions::default(), None).unwrap();
        let (y2, _) = solve_state(&space, &common::axpy(&u, 1.0, &bump), &SolverOptions::default(), None).unwrap();
        prop_assert!(y1.iter().zip(y2.iter()).all(|(a, b)| b >= &(a - 1e-12)));
    }

    #[test]
    fn directional_derivative_is_positively_homogeneous(seed in 0u64..1000, c in 0.01f64..100.0) {
        let space = common::square(10);
        let mut r = rng(seed);
        let (y, _) = solve_state(&space, &scaled(&smooth_field(space.mesh(), &mut r, 3), 5.0), &SolverOptions::default(), None).unwrap();
        let h = smooth_field(space.mesh(), &mut r, 3);
        let tol = ZeroBand::default().tol_for(&y);
        let (d1, _) = solve_directional(&space, &y, &h, tol, &SolverOptions::default()).unwrap();
        let (d2, _) = solve_directional(&space, &y, &scaled(&h, c), tol, &SolverOptions::default()).unwrap();
        prop_assert!(common::max_abs_diff(&scaled(&d1, c), &d2) <= 1e-10 * (1.0 + c * norm_inf(&d1)));
    }
}
