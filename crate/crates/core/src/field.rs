use std::io::{BufRead, Write};
use std::ops::{Deref, DerefMut};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::Mesh;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Role {
    Control,
    State,
    Adjoint,
    Direction,
    Derivative,
    Multiplier,
    Generic,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Control => "control",
            Role::State => "state",
            Role::Adjoint => "adjoint",
            Role::Direction => "direction",
            Role::Derivative => "derivative",
            Role::Multiplier => "multiplier",
            Role::Generic => "generic",
        }
    }

    /// Roles whose fields satisfy the homogeneous Dirichlet condition.
    pub fn vanishes_on_boundary(self) -> bool {
        matches!(self, Role::State | Role::Adjoint | Role::Derivative)
    }
}

impl std::str::FromStr for Role {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "control" => Role::Control,
            "state" => Role::State,
            "adjoint" => Role::Adjoint,
            "direction" => Role::Direction,
            "derivative" => Role::Derivative,
            "multiplier" => Role::Multiplier,
            "generic" => Role::Generic,
            other => return Err(Error::Config(format!("unknown field role `{other}`"))),
        })
    }
}

/// Nodal values of a P1 function. Dereferences to the value slice.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub role: Role,
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn new(role: Role, values: Vec<f64>) -> Self {
        Self { role, values }
    }

    pub fn zeros(role: Role, n: usize) -> Self {
        Self { role, values: vec![0.0; n] }
    }

    /// Nodal interpolant of `f`. Roles with Dirichlet conditions are zeroed on
    /// the boundary.
    pub fn interpolate(mesh: &Mesh, role: Role, f: impl Fn([f64; 2]) -> f64) -> Self {
        let values = mesh
            .nodes()
            .iter()
            .enumerate()
            .map(|(i, &p)| if role.vanishes_on_boundary() && mesh.is_boundary(i) { 0.0 } else { f(p) })
            .collect();
        Self { role, values }
    }

    pub fn with_role(mut self, role: Role) -> Self {
        self.role = role;
        self
    }

    pub fn check_len(&self, n: usize) -> Result<()> {
        if self.values.len() == n {
            Ok(())
        } else {
            Err(Error::Dimension { expected: n, found: self.values.len() })
        }
    }

    pub fn write_text<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "field {} {}", self.role.as_str(), self.values.len())?;
        for v in &self.values {
            writeln!(w, "{v:e}")?;
        }
        Ok(())
    }

    pub fn read_text<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines.next().ok_or(Error::Parse { line: 1, msg: "empty field file".into() })??;
        let tokens: Vec<&str> = header.split_whitespace().collect();
        let (role, n) = match tokens.as_slice() {
            ["field", role, n] => (
                role.parse::<Role>()?,
                n.parse::<usize>().map_err(|e| Error::Parse { line: 1, msg: e.to_string() })?,
            ),
            _ => return Err(Error::Parse { line: 1, msg: "expected `field <role> <node-count>`".into() }),
        };
        let mut values = Vec::with_capacity(n);
        for (i, line) in lines.enumerate() {
            let line = line?;
            let t = line.trim();
            if t.is_empty() {
                continue;
            }
            values.push(t.parse::<f64>().map_err(|e| Error::Parse { line: i + 2, msg: format!("`{t}`: {e}") })?);
        }
        if values.len() != n {
            return Err(Error::Dimension { expected: n, found: values.len() });
        }
        Ok(Self { role, values })
    }
}

impl Deref for ScalarField {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.values
    }
}

impl DerefMut for ScalarField {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }
}
