use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::FemSpace;
use crate::mesh::DomainKind;
use crate::pde::{SolverOptions, ZeroBand};

/// Pointwise integrand `L(x, y)` of the tracking functional. Implementations
/// supply the value and the first two `y`-derivatives at a node.
pub trait Integrand {
    fn value(&self, node: usize, y: f64) -> f64;
    fn dy(&self, node: usize, y: f64) -> f64;
    fn dyy(&self, node: usize, y: f64) -> f64;
}

/// `L(x, y) = ½(y − y_d(x))²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadraticTracking {
    pub target: Vec<f64>,
}

impl Integrand for QuadraticTracking {
    fn value(&self, node: usize, y: f64) -> f64 {
        let r = y - self.target[node];
        0.5 * r * r
    }

    fn dy(&self, node: usize, y: f64) -> f64 {
        y - self.target[node]
    }

    fn dyy(&self, _node: usize, _y: f64) -> f64 {
        1.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Bounds {
    Unbounded,
    Box { alpha: Vec<f64>, beta: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub nu: f64,
    pub bounds: Bounds,
    /// Required minimal gap `β − α` in box mode.
    pub gamma_floor: f64,
    pub integrand: QuadraticTracking,
    pub domain_kind: DomainKind,
    pub resolution: usize,
}

impl ProblemSpec {
    pub fn unbounded(nu: f64, target: Vec<f64>, domain_kind: DomainKind, resolution: usize) -> Self {
        Self {
            nu,
            bounds: Bounds::Unbounded,
            gamma_floor: 1e-8,
            integrand: QuadraticTracking { target },
            domain_kind,
            resolution,
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if !(self.nu > 0.0) {
            return Err(Error::Config(format!("nu must be positive, got {}", self.nu)));
        }
        if self.integrand.target.len() != n {
            return Err(Error::Dimension { expected: n, found: self.integrand.target.len() });
        }
        if let Bounds::Box { alpha, beta } = &self.bounds {
            if !(self.gamma_floor > 0.0) {
                return Err(Error::Config(format!("gamma_floor must be positive, got {}", self.gamma_floor)));
            }
            for v in [alpha, beta] {
                if v.len() != n {
                    return Err(Error::Dimension { expected: n, found: v.len() });
                }
            }
            if let Some(i) = (0..n).find(|&i| !(beta[i] - alpha[i] >= self.gamma_floor)) {
                return Err(Error::Config(format!(
                    "beta - alpha = {} at node {i} is below gamma_floor {}",
                    beta[i] - alpha[i],
                    self.gamma_floor
                )));
            }
        }
        Ok(())
    }

    /// Nodal clamp onto `[α, β]`; the identity without bounds.
    pub fn project(&self, u: &[f64]) -> Vec<f64> {
        match &self.bounds {
            Bounds::Unbounded => u.to_vec(),
            Bounds::Box { alpha, beta } => {
                u.iter().enumerate().map(|(i, &v)| v.max(alpha[i]).min(beta[i])).collect()
            }
        }
    }
}

/// A problem instance: discretization, data and numerical settings.
#[derive(Debug)]
pub struct Problem {
    pub space: FemSpace,
    pub spec: ProblemSpec,
    pub solver: SolverOptions,
    pub zero_band: ZeroBand,
}

impl Problem {
    pub fn new(space: FemSpace, spec: ProblemSpec) -> Result<Self> {
        spec.validate(space.n())?;
        Ok(Self { space, spec, solver: SolverOptions::default(), zero_band: ZeroBand::default() })
    }

    pub fn with_solver(mut self, solver: SolverOptions) -> Self {
        self.solver = solver;
        self
    }

    pub fn with_zero_band(mut self, zero_band: ZeroBand) -> Self {
        self.zero_band = zero_band;
        self
    }

    pub fn n(&self) -> usize {
        self.space.n()
    }

    pub fn nu(&self) -> f64 {
        self.spec.nu
    }

    pub fn integrand(&self) -> &QuadraticTracking {
        &self.spec.integrand
    }
}
