mod common;

use nsoc_core::instances::{disk_mesh, disk_state, manufactured_source, manufactured_state};
use nsoc_core::levelset::{measure, Cmp, LevelConstraint};
use nsoc_core::mesh::unit_disk;
use nsoc_core::sampling::{rng, smooth_field};
use nsoc_core::{level_band_measure, solve_state, FemSpace, SolverOptions};
use rand::Rng;

#[test]
fn manufactured_state_converges_at_second_order() {
    let mut errs = Vec::new();
    for res in [16, 32, 64] {
        let space = common::square(res);
        let (y, rep) = solve_state(&space, &manufactured_source(space.mesh()), &SolverOptions::default(), None).unwrap();
        assert!(rep.converged);
        errs.push(common::max_abs_diff(&y, &manufactured_state(space.mesh())));
    }
    for w in errs.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!((order - 2.0).abs() <= 0.3, "order {order}");
    }
}

#[test]
fn lumped_mass_is_a_partition_of_unity() {
    for space in [common::square(20), FemSpace::new(unit_disk(10, None).unwrap()).unwrap()] {
        let total: f64 = space.lumped().iter().sum();
        assert!((total - space.mesh().area()).abs() < 1e-12);
    }
}

/// Barycentric point location on the structured square mesh.
fn eval_square(res: usize, y: &[f64], p: [f64; 2]) -> f64 {
    let n = res as f64;
    let (i, j) = (((p[0] * n) as usize).min(res - 1), ((p[1] * n) as usize).min(res - 1));
    let (fx, fy) = (p[0] * n - i as f64, p[1] * n - j as f64);
    let idx = |a: usize, b: usize| b * (res + 1) + a;
    let (v00, v10, v11, v01) = (y[idx(i, j)], y[idx(i + 1, j)], y[idx(i + 1, j + 1)], y[idx(i, j + 1)]);
    let flipped = (i == res - 1 && j == 0) || (i == 0 && j == res - 1);
    if flipped {
        if fx + fy <= 1.0 {
            v00 + fx * (v10 - v00) + fy * (v01 - v00)
        } else {
            v11 + (1.0 - fx) * (v01 - v11) + (1.0 - fy) * (v10 - v11)
        }
    } else if fx >= fy {
        v00 + fx * (v10 - v00) + fy * (v11 - v10)
    } else {
        v00 + fy * (v01 - v00) + fx * (v11 - v01)
    }
}

#[test]
fn band_measure_matches_monte_carlo() {
    let res = 12;
    let space = common::square(res);
    let y = smooth_field(space.mesh(), &mut rng(5), 3);
    let mut r = rng(99);
    let samples = 1_000_000;
    for eps in [0.05, 0.2] {
        let exact = level_band_measure(space.mesh(), &y, eps);
        let hits = (0..samples)
            .filter(|_| {
                let v = eval_square(res, &y, [r.gen(), r.gen()]);
                v != 0.0 && v.abs() < eps
            })
            .count();
        let p = hits as f64 / samples as f64;
        let se = (p * (1.0 - p) / samples as f64).sqrt();
        assert!((exact - p).abs() <= 3.0 * se, "eps {eps}: exact {exact} mc {p} se {se}");
    }
}

#[test]
fn band_measure_is_monotone_and_bounded() {
    let space = common::square(16);
    let y = smooth_field(space.mesh(), &mut rng(2), 3);
    let mut prev = 0.0;
    for k in 0..40 {
        let m = level_band_measure(space.mesh(), &y, 1e-3 * 1.25f64.powi(k));
        assert!(m >= prev - 1e-15 && m <= space.area() + 1e-12);
        prev = m;
    }
}

#[test]
fn disk_band_matches_annulus() {
    let mesh = disk_mesh(96).unwrap();
    let y = disk_state(&mesh);
    let m = level_band_measure(&mesh, &y, 0.01);
    assert!((m / (std::f64::consts::PI * 0.01) - 1.0).abs() < 0.05, "{m}");
    let outside = measure(&mesh, &[LevelConstraint::new(&y, Cmp::Le, 0.0)]);
    assert!((outside - std::f64::consts::FRAC_PI_2).abs() < 0.05, "{outside}");
}

#[test]
fn renumbered_mesh_gives_the_same_state() {
    let space = common::square(10);
    let u = smooth_field(space.mesh(), &mut rng(4), 3);
    let (y, _) = solve_state(&space, &u, &SolverOptions::default(), None).unwrap();
    let n = space.n();
    let perm: Vec<usize> = (0..n).map(|i| (i * 37 + 11) % n).collect();
    let other = FemSpace::new(space.mesh().renumbered(&perm).unwrap()).unwrap();
    let mut u2 = vec![0.0; n];
    for i in 0..n {
        u2[perm[i]] = u[i];
    }
    let (y2, _) = solve_state(&other, &u2, &SolverOptions::default(), None).unwrap();
    for i in 0..n {
        assert!((y2[perm[i]] - y[i]).abs() < 1e-12);
    }
}
