//! P1 assembly and the discrete function space used by every solver.
//!
//! All zeroth-order terms (the nonlinearity, indicator functions and the
//! right-hand sides) are evaluated with the lumped mass matrix, so nodal
//! operations commute with the discrete integrals.

use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::sparse::{default_cg_cap, pcg, CsrMatrix, EnvelopeCholesky, Shifted};

#[derive(Debug, Clone)]
pub struct Assembly {
    pub stiffness: CsrMatrix,
    pub lumped_mass: CsrMatrix,
    pub consistent_mass: CsrMatrix,
}

pub fn assemble(mesh: &Mesh) -> Result<Assembly> {
    let n = mesh.node_count();
    let mut k = Vec::with_capacity(9 * mesh.triangles().len());
    let mut m = Vec::with_capacity(9 * mesh.triangles().len());
    let mut lumped = vec![0.0; n];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let p = tri.map(|v| mesh.nodes()[v]);
        let area = mesh.triangle_area(t);
        if !(area > 0.0) {
            return Err(Error::DegenerateTriangle { index: t, area });
        }
        let mut b = [0.0; 3];
        let mut c = [0.0; 3];
        for i in 0..3 {
            let (j, l) = ((i + 1) % 3, (i + 2) % 3);
            b[i] = p[j][1] - p[l][1];
            c[i] = p[l][0] - p[j][0];
        }
        for i in 0..3 {
            for j in 0..3 {
                k.push((tri[i], tri[j], (b[i] * b[j] + c[i] * c[j]) / (4.0 * area)));
                let mass = if i == j { area / 6.0 } else { area / 12.0 };
                m.push((tri[i], tri[j], mass));
            }
            lumped[tri[i]] += area / 3.0;
        }
    }
    Ok(Assembly {
        stiffness: CsrMatrix::from_triplets(n, k),
        lumped_mass: CsrMatrix::from_diagonal(&lumped),
        consistent_mass: CsrMatrix::from_triplets(n, m),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LinearBackend {
    /// Envelope Cholesky, cached per distinct diagonal shift.
    #[default]
    Direct,
    /// Jacobi-preconditioned conjugate gradients.
    Cg,
}

const FACTOR_CACHE: usize = 4;

type FactorCache = Vec<(Vec<u64>, Arc<EnvelopeCholesky>)>;

/// A mesh together with its assembled operators and the Dirichlet-reduced
/// stiffness matrix.
#[derive(Debug)]
pub struct FemSpace {
    mesh: Mesh,
    assembly: Assembly,
    lumped: Vec<f64>,
    interior: Vec<usize>,
    stiffness_ii: CsrMatrix,
    backend: LinearBackend,
    cg_tol: f64,
    cache: Mutex<FactorCache>,
}

impl FemSpace {
    pub fn new(mesh: Mesh) -> Result<Self> {
        let assembly = assemble(&mesh)?;
        let lumped = assembly.lumped_mass.diagonal();
        let interior: Vec<usize> = (0..mesh.node_count()).filter(|&i| !mesh.is_boundary(i)).collect();
        if interior.is_empty() {
            return Err(Error::InvalidMesh("mesh has no interior nodes".into()));
        }
        let stiffness_ii = assembly.stiffness.principal_submatrix(&interior);
        Ok(Self {
            mesh,
            assembly,
            lumped,
            interior,
            stiffness_ii,
            backend: LinearBackend::Direct,
            cg_tol: 1e-12,
            cache: Mutex::new(Vec::new()),
        })
    }

    pub fn with_backend(mut self, backend: LinearBackend, cg_tol: f64) -> Self {
        self.backend = backend;
        self.cg_tol = cg_tol;
        self
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn assembly(&self) -> &Assembly {
        &self.assembly
    }

    pub fn n(&self) -> usize {
        self.mesh.node_count()
    }

    /// Lumped mass weights (one per node).
    pub fn lumped(&self) -> &[f64] {
        &self.lumped
    }

    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    pub fn area(&self) -> f64 {
        self.lumped.iter().sum()
    }

    pub fn check(&self, v: &[f64]) -> Result<()> {
        if v.len() == self.n() {
            Ok(())
        } else {
            Err(Error::Dimension { expected: self.n(), found: v.len() })
        }
    }

    /// `aᵀ M_L b`.
    pub fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        debug_assert_eq!(a.len(), self.n());
        debug_assert_eq!(b.len(), self.n());
        a.iter().zip(b).zip(&self.lumped).map(|((x, y), m)| x * y * m).sum()
    }

    pub fn inner_product(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        self.check(a)?;
        self.check(b)?;
        Ok(self.inner(a, b))
    }

    pub fn norm_l2(&self, a: &[f64]) -> f64 {
        self.inner(a, a).max(0.0).sqrt()
    }

    /// Stiffness matrix applied to a full nodal vector.
    pub fn apply_stiffness(&self, y: &[f64]) -> Vec<f64> {
        self.assembly.stiffness.mul_vec(y)
    }

    /// Solves `(A + diag(shift))_II x_I = rhs_I` with `x = 0` on the boundary.
    /// Both `shift` and `rhs` are full nodal vectors; boundary entries are ignored.
    pub fn solve_shifted(&self, shift: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
        self.check(shift)?;
        self.check(rhs)?;
        let shift_i: Vec<f64> = self.interior.iter().map(|&i| shift[i]).collect();
        let mut x_i: Vec<f64> = self.interior.iter().map(|&i| rhs[i]).collect();
        match self.backend {
            LinearBackend::Direct => {
                let factor = self.factor(&shift_i)?;
                factor.solve_in_place(&mut x_i);
            }
            LinearBackend::Cg => {
                let op = Shifted { base: &self.stiffness_ii, shift: &shift_i };
                let cap = default_cg_cap(x_i.len());
                x_i = pcg(&op, &x_i, self.cg_tol, cap)?.0;
            }
        }
        let mut x = vec![0.0; self.n()];
        for (k, &i) in self.interior.iter().enumerate() {
            x[i] = x_i[k];
        }
        Ok(x)
    }

    fn factor(&self, shift_i: &[f64]) -> Result<Arc<EnvelopeCholesky>> {
        let key: Vec<u64> = shift_i.iter().map(|v| v.to_bits()).collect();
        {
            let mut cache = self.cache.lock().unwrap_or_else(|e| e.into_inner());
            if let Some(pos) = cache.iter().position(|(k, _)| *k == key) {
                let entry = cache.remove(pos);
                let f = entry.1.clone();
                cache.push(entry);
                return Ok(f);
            }
        }
        let f = Arc::new(EnvelopeCholesky::factor(&self.stiffness_ii, Some(shift_i))?);
        let mut cache = self.cache.lock().unwrap_or_else(|e| e.into_inner());
        if cache.len() >= FACTOR_CACHE {
            cache.remove(0);
        }
        cache.push((key, f.clone()));
        Ok(f)
    }
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}
