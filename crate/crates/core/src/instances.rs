//! Ready-made problem instances: the zero-control example, the disk
//! structural-assumption state, a manufactured source, an inverse-crime box
//! problem and a stationary point with negative curvature.

use std::f64::consts::PI;

use crate::error::Result;
use crate::fem::FemSpace;
use crate::field::{Role, ScalarField};
use crate::mesh::{build_mesh, unit_disk, DomainKind, Mesh};
use crate::pde::solve_state;
use crate::problem::{Bounds, Problem, ProblemSpec, QuadraticTracking};
use crate::sampling::{rng, smooth_field};

pub fn sine_bump(p: [f64; 2]) -> f64 {
    (PI * p[0]).sin() * (PI * p[1]).sin()
}

/// Source `(2π² + 1) sin(πx₁) sin(πx₂)` whose state is `sin(πx₁) sin(πx₂)`.
pub fn manufactured_source(mesh: &Mesh) -> ScalarField {
    ScalarField::interpolate(mesh, Role::Control, |p| (2.0 * PI * PI + 1.0) * sine_bump(p))
}

pub fn manufactured_state(mesh: &Mesh) -> ScalarField {
    ScalarField::interpolate(mesh, Role::State, sine_bump)
}

/// `𝟙{r² < ½}(½ − r²)`, whose bands `{0 < y < ε}` are annuli of area `πε`.
/// Values within rounding of zero (nodes on the circle `r² = ½`) are set to
/// exactly zero.
pub fn disk_state(mesh: &Mesh) -> ScalarField {
    ScalarField::interpolate(mesh, Role::State, |p| {
        let v = 0.5 - p[0] * p[0] - p[1] * p[1];
        if v <= 8.0 * f64::EPSILON {
            0.0
        } else {
            v
        }
    })
}

/// Disk mesh with a ring on `r² = ½`.
pub fn disk_mesh(rings: usize) -> Result<Mesh> {
    unit_disk(rings, Some(0.5f64.sqrt()))
}

/// Tracking problem with `y_d = 0` and no bounds; `ū = 0` is its unique
/// minimiser and `ȳ ≡ 0`.
pub fn zero_target(kind: DomainKind, resolution: usize, nu: f64) -> Result<Problem> {
    let space = FemSpace::new(build_mesh(kind, resolution)?)?;
    let n = space.n();
    Problem::new(space, ProblemSpec::unbounded(nu, vec![0.0; n], kind, resolution))
}

/// Builds `(y_d, ū)` such that `ȳ` is the discrete state of `ū` and
/// `p̄ = −νū`, so that `d̄ = p̄ + νū = 0` and `ū` is stationary.
pub fn inverse_stationary(space: FemSpace, nu: f64, y_bar: &[f64], resolution: usize) -> Result<(Problem, ScalarField)> {
    space.check(y_bar)?;
    let n = space.n();
    let mut y = y_bar.to_vec();
    for &b in space.mesh().boundary_nodes() {
        y[b] = 0.0;
    }
    let m = space.lumped().to_vec();
    let ay = space.apply_stiffness(&y);
    let mut u = vec![0.0; n];
    for &i in space.interior() {
        u[i] = ay[i] / m[i] + y[i].max(0.0);
    }
    let p: Vec<f64> = u.iter().map(|u| -nu * u).collect();
    let ap = space.apply_stiffness(&p);
    let tol = crate::pde::ZeroBand::default().tol_for(&y);
    let mut target = vec![0.0; n];
    for &i in space.interior() {
        let chi = if y[i] >= -tol { 1.0 } else { 0.0 };
        target[i] = y[i] - (ap[i] + m[i] * chi * p[i]) / m[i];
    }
    let kind = space.mesh().kind();
    let problem = Problem::new(space, ProblemSpec::unbounded(nu, target, kind, resolution))?;
    Ok((problem, ScalarField::new(Role::Control, u)))
}

/// Parameters of [`kink_saddle`]: the state is
/// `ȳ = a(w/c)((w − c)² − b²)` with `w = sin(πx₁) sin(πx₂)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaddleShape {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub nu: f64,
}

impl Default for SaddleShape {
    fn default() -> Self {
        Self { a: 1.0, b: 0.01, c: 0.5, nu: 1e-2 }
    }
}

/// A stationary point whose state nearly touches the kink along
/// `{w = c}` while the adjoint is positive there; perturbations that push
/// the state across zero lower the objective at second order.
pub fn kink_saddle(resolution: usize, shape: SaddleShape) -> Result<(Problem, ScalarField)> {
    let mesh = build_mesh(DomainKind::UnitSquare, resolution)?;
    let y: Vec<f64> = mesh
        .nodes()
        .iter()
        .map(|&p| {
            let w = sine_bump(p);
            shape.a * (w / shape.c) * ((w - shape.c).powi(2) - shape.b * shape.b)
        })
        .collect();
    inverse_stationary(FemSpace::new(mesh)?, shape.nu, &y, resolution)
}

/// Box-constrained problem with `y_d = S(u*)` for a seeded smooth `u*`
/// strictly inside the bounds. Returns the problem and `u*`.
pub fn inverse_crime_box(resolution: usize, nu: f64, seed: u64) -> Result<(Problem, ScalarField)> {
    let mesh = build_mesh(DomainKind::UnitSquare, resolution)?;
    let mut r = rng(seed);
    let u_star: Vec<f64> = smooth_field(&mesh, &mut r, 3).iter().map(|v| 5.0 * v).collect();
    let space = FemSpace::new(mesh)?;
    let (y, _) = solve_state(&space, &u_star, &Default::default(), None)?;
    let n = space.n();
    let bound = crate::fem::norm_inf(&u_star) + 1.0;
    let spec = ProblemSpec {
        nu,
        bounds: Bounds::Box { alpha: vec![-bound; n], beta: vec![bound; n] },
        gamma_floor: 1e-8,
        integrand: QuadraticTracking { target: y.values },
        domain_kind: DomainKind::UnitSquare,
        resolution,
    };
    Ok((Problem::new(space, spec)?, ScalarField::new(Role::Control, u_star)))
}
