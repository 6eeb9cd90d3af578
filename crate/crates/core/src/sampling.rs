//! Seeded generators for test directions and controls. Every generator is a
//! function of node coordinates only, so results do not depend on how the
//! mesh is numbered.

use std::f64::consts::PI;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::mesh::Mesh;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn bbox(mesh: &Mesh) -> ([f64; 2], [f64; 2]) {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for p in mesh.nodes() {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    (lo, hi)
}

fn unit_coords(mesh: &Mesh) -> Vec<[f64; 2]> {
    let (lo, hi) = bbox(mesh);
    mesh.nodes()
        .iter()
        .map(|p| [(p[0] - lo[0]) / (hi[0] - lo[0]), (p[1] - lo[1]) / (hi[1] - lo[1])])
        .collect()
}

/// Random combination of `cos(kπx + φ)cos(lπy + ψ)` for `k, l ≤ max_freq`
/// with standard-normal-ish amplitudes damped by frequency.
pub fn smooth_field<R: Rng>(mesh: &Mesh, rng: &mut R, max_freq: usize) -> Vec<f64> {
    let coords = unit_coords(mesh);
    let mut out = vec![0.0; coords.len()];
    for k in 0..=max_freq {
        for l in 0..=max_freq {
            let amp = (rng.gen::<f64>() * 2.0 - 1.0) / (1.0 + (k * k + l * l) as f64);
            let phi = rng.gen::<f64>() * 2.0 * PI;
            let psi = rng.gen::<f64>() * 2.0 * PI;
            for (o, c) in out.iter_mut().zip(&coords) {
                *o += amp * (k as f64 * PI * c[0] + phi).cos() * (l as f64 * PI * c[1] + psi).cos();
            }
        }
    }
    out
}

/// Random combination of `sin(kπx)sin(lπy)` (vanishes on the bounding box).
pub fn sine_field<R: Rng>(mesh: &Mesh, rng: &mut R, max_freq: usize) -> Vec<f64> {
    let coords = unit_coords(mesh);
    let mut out = vec![0.0; coords.len()];
    for k in 1..=max_freq {
        for l in 1..=max_freq {
            let amp = (rng.gen::<f64>() * 2.0 - 1.0) / (k * l) as f64;
            for (o, c) in out.iter_mut().zip(&coords) {
                *o += amp * (k as f64 * PI * c[0]).sin() * (l as f64 * PI * c[1]).sin();
            }
        }
    }
    out
}

/// Hat function of the given radius (relative to the bounding box) around a
/// uniformly drawn centre.
pub fn bump_field<R: Rng>(mesh: &Mesh, rng: &mut R, radius: f64) -> Vec<f64> {
    let coords = unit_coords(mesh);
    let c = [rng.gen::<f64>(), rng.gen::<f64>()];
    coords.iter().map(|p| (1.0 - (p[0] - c[0]).hypot(p[1] - c[1]) / radius).max(0.0)).collect()
}

pub fn scaled(v: &[f64], s: f64) -> Vec<f64> {
    v.iter().map(|x| x * s).collect()
}
