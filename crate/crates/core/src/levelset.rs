//! Exact measures of sub- and super-level sets of piecewise-linear fields.
//!
//! On each triangle the constraints are linear, so the admissible region is
//! a convex polygon. It is obtained by clipping the reference triangle with
//! one half-plane per constraint and measured with the shoelace formula.

use crate::mesh::Mesh;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cmp {
    Lt,
    Le,
    Gt,
    Ge,
}

/// `field (cmp) level`, evaluated on the P1 interpolant.
#[derive(Debug, Clone, Copy)]
pub struct LevelConstraint<'a> {
    pub field: &'a [f64],
    pub cmp: Cmp,
    pub level: f64,
}

impl<'a> LevelConstraint<'a> {
    pub fn new(field: &'a [f64], cmp: Cmp, level: f64) -> Self {
        Self { field, cmp, level }
    }
}

type Point = [f64; 2];

fn clip(poly: &[Point], g: impl Fn(Point) -> f64) -> Vec<Point> {
    let mut out = Vec::with_capacity(poly.len() + 1);
    for k in 0..poly.len() {
        let p = poly[k];
        let q = poly[(k + 1) % poly.len()];
        let (gp, gq) = (g(p), g(q));
        let (ip, iq) = (gp <= 0.0, gq <= 0.0);
        if ip {
            out.push(p);
        }
        if ip != iq {
            let s = gp / (gp - gq);
            out.push([p[0] + s * (q[0] - p[0]), p[1] + s * (q[1] - p[1])]);
        }
    }
    out
}

fn polygon_area(poly: &[Point]) -> f64 {
    let mut a = 0.0;
    for k in 0..poly.len() {
        let (p, q) = (poly[k], poly[(k + 1) % poly.len()]);
        a += p[0] * q[1] - q[0] * p[1];
    }
    0.5 * a.abs()
}

/// Fraction of a triangle (vertex values given per constraint) where every
/// constraint holds.
pub fn triangle_fraction(constraints: &[([f64; 3], Cmp, f64)]) -> f64 {
    let mut poly: Vec<Point> = vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
    for &(f, cmp, level) in constraints {
        // Normalise to `sign·(f − level) ≤ 0` (or `< 0`).
        let (sign, strict) = match cmp {
            Cmp::Le => (1.0, false),
            Cmp::Lt => (1.0, true),
            Cmp::Ge => (-1.0, false),
            Cmp::Gt => (-1.0, true),
        };
        let g = f.map(|v| sign * (v - level));
        if g[0] == g[1] && g[1] == g[2] {
            // Constant on the triangle: all or nothing.
            let holds = if strict { g[0] < 0.0 } else { g[0] <= 0.0 };
            if holds {
                continue;
            }
            return 0.0;
        }
        poly = clip(&poly, |p| g[0] + (g[1] - g[0]) * p[0] + (g[2] - g[0]) * p[1]);
        if poly.len() < 3 {
            return 0.0;
        }
    }
    (2.0 * polygon_area(&poly)).min(1.0)
}

/// Area of the set where all constraints hold simultaneously.
pub fn measure(mesh: &Mesh, constraints: &[LevelConstraint]) -> f64 {
    let mut total = 0.0;
    let mut local = Vec::with_capacity(constraints.len());
    for (t, tri) in mesh.triangles().iter().enumerate() {
        local.clear();
        local.extend(constraints.iter().map(|c| (tri.map(|v| c.field[v]), c.cmp, c.level)));
        let frac = triangle_fraction(&local);
        if frac > 0.0 {
            total += frac * mesh.triangle_area(t);
        }
    }
    total
}

/// Area of triangles on which the interpolant vanishes identically; the only
/// way `{y = 0}` carries positive measure for a P1 field.
pub fn zero_set_measure(mesh: &Mesh, y: &[f64]) -> f64 {
    mesh.triangles()
        .iter()
        .enumerate()
        .filter(|(_, tri)| tri.iter().all(|&v| y[v] == 0.0))
        .map(|(t, _)| mesh.triangle_area(t))
        .sum()
}

/// Exact area of `{x : 0 < |y_h(x)| < eps}`. Returns 0 for `eps ≤ 0`.
pub fn level_band_measure(mesh: &Mesh, y: &[f64], eps: f64) -> f64 {
    if !(eps > 0.0) {
        return 0.0;
    }
    let inside = measure(mesh, &[LevelConstraint::new(y, Cmp::Lt, eps), LevelConstraint::new(y, Cmp::Gt, -eps)]);
    (inside - zero_set_measure(mesh, y)).max(0.0)
}

/// Exact area of the closed band `{|y_h| ≤ tol}`.
pub fn closed_band_measure(mesh: &Mesh, y: &[f64], tol: f64) -> f64 {
    measure(mesh, &[LevelConstraint::new(y, Cmp::Le, tol), LevelConstraint::new(y, Cmp::Ge, -tol)])
}
