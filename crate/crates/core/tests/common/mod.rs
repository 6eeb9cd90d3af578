#![allow(dead_code)]

use nsoc_core::sampling::{rng, scaled, smooth_field};
use nsoc_core::{build_mesh, DomainKind, FemSpace, Problem, ProblemSpec};

pub fn square(res: usize) -> FemSpace {
    FemSpace::new(build_mesh(DomainKind::UnitSquare, res).unwrap()).unwrap()
}

/// Unbounded tracking problem with a seeded smooth target.
pub fn tracking(res: usize, nu: f64, seed: u64) -> Problem {
    let space = square(res);
    let target = scaled(&smooth_field(space.mesh(), &mut rng(seed), 3), 2.0);
    Problem::new(space, ProblemSpec::unbounded(nu, target, DomainKind::UnitSquare, res)).unwrap()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn axpy(a: &[f64], s: f64, b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + s * y).collect()
}
