//! Run configuration: a TOML document with the sections `problem`,
//! `tolerances`, `curvature`, `scan`, `control`, `check` and `output`.

use std::fs;
use std::path::{Path, PathBuf};

use nsoc_core::conditions::log_grid;
use nsoc_core::instances::{self, SaddleShape};
use nsoc_core::mesh::{unit_disk, Mesh};
use nsoc_core::{
    build_mesh, default_sequence_bank, Bounds, CheckOptions, CurvatureOptions, DomainKind, FemSpace, LinearBackend,
    OptimizerOptions, Problem, ProblemSpec, QuadraticTracking, ScalarField, SequenceSpec, SolverOptions, ZeroBand,
};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Instance {
    /// `y_d = 0`, no bounds; `ū = 0`.
    ZeroTarget,
    /// `y_d = 0` with the control `(2π²+1) sin(πx₁) sin(πx₂)` for `solve`.
    Manufactured,
    /// Stationary point with negative curvature.
    KinkSaddle,
    /// Box bounds and `y_d = S(u*)`.
    InverseCrimeBox,
    /// Target read from `target_file`, optional scalar bounds.
    Tracking,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemSection {
    pub instance: Instance,
    pub domain: DomainKind,
    pub resolution: usize,
    /// Disk meshes only: place a ring on `r² = ½`.
    pub aligned_ring: bool,
    pub nu: f64,
    pub target_file: Option<PathBuf>,
    /// Mesh in the `mesh.txt` format; required when `domain = "custom"`.
    pub mesh_file: Option<PathBuf>,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub gamma_floor: f64,
    pub saddle_a: f64,
    pub saddle_b: f64,
    pub saddle_c: f64,
}

impl Default for ProblemSection {
    fn default() -> Self {
        let shape = SaddleShape::default();
        Self {
            instance: Instance::ZeroTarget,
            domain: DomainKind::UnitSquare,
            resolution: 32,
            aligned_ring: true,
            nu: 1.0,
            target_file: None,
            mesh_file: None,
            lower: None,
            upper: None,
            gamma_floor: 1e-8,
            saddle_a: shape.a,
            saddle_b: shape.b,
            saddle_c: shape.c,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LinearSolverChoice {
    Direct,
    Cg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub newton_tol: f64,
    pub max_newton: usize,
    pub linear_solver: LinearSolverChoice,
    pub cg_tol: f64,
    pub zero_tol_rel: f64,
    pub zero_tol_abs: f64,
    pub p_tol_rel: f64,
    pub d_tol_rel: f64,
    pub bound_tol_rel: f64,
    pub area_tol_rel: f64,
    pub snc_tol: f64,
    pub ssc_tol: f64,
    pub growth_tol: f64,
    pub opt_tol: f64,
    pub max_iter: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        let check = CheckOptions::default();
        let opt = OptimizerOptions::default();
        let zb = ZeroBand::default();
        let so = SolverOptions::default();
        Self {
            newton_tol: so.newton_tol,
            max_newton: so.max_newton,
            linear_solver: LinearSolverChoice::Direct,
            cg_tol: 1e-12,
            zero_tol_rel: zb.relative,
            zero_tol_abs: zb.absolute,
            p_tol_rel: check.p_tol_rel,
            d_tol_rel: check.d_tol_rel,
            bound_tol_rel: check.bound_tol_rel,
            area_tol_rel: check.area_tol_rel,
            snc_tol: check.snc_tol,
            ssc_tol: check.ssc_tol,
            growth_tol: check.growth_tol,
            opt_tol: opt.opt_tol,
            max_iter: opt.max_iter,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurvatureSection {
    pub tail_window: usize,
    pub noise_factor: f64,
    pub bank: Vec<SequenceSpec>,
}

impl Default for CurvatureSection {
    fn default() -> Self {
        let c = CurvatureOptions::default();
        Self { tail_window: c.tail_window, noise_factor: c.noise_factor, bank: default_sequence_bank() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanSection {
    pub n_dirs: usize,
    pub n_probes: usize,
    pub rho: f64,
    pub tau: f64,
    pub seed: u64,
    pub eps_min: f64,
    pub eps_max: f64,
    pub eps_count: usize,
}

impl Default for ScanSection {
    fn default() -> Self {
        Self { n_dirs: 32, n_probes: 200, rho: 1e-2, tau: 1e-3, seed: 42, eps_min: 1e-3, eps_max: 1e-1, eps_count: 20 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialControl {
    /// `instance` for `solve` (zero when the instance has none) and
    /// `random` for `optimize`.
    Auto,
    Zero,
    Random,
    File,
    /// The instance's own control: the manufactured source, the crafted
    /// stationary point or `u*`.
    Instance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControlSection {
    pub initial: InitialControl,
    pub file: Option<PathBuf>,
    pub random_scale: f64,
}

impl Default for ControlSection {
    fn default() -> Self {
        Self { initial: InitialControl::Auto, file: None, random_scale: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckPoint {
    /// The instance's exact stationary point when it has one, otherwise
    /// the output of `optimize`.
    Auto,
    Instance,
    /// `u_bar.txt` written by `optimize`.
    Optimized,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CheckSection {
    pub point: CheckPoint,
    pub ga: bool,
    pub sa: bool,
    pub s_diff: bool,
    pub snc: bool,
    pub ssc: bool,
    pub growth: bool,
}

impl Default for CheckSection {
    fn default() -> Self {
        Self { point: CheckPoint::Auto, ga: true, sa: true, s_diff: true, snc: true, ssc: true, growth: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: PathBuf::from("out") }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemSection,
    pub tolerances: Tolerances,
    pub curvature: CurvatureSection,
    pub scan: ScanSection,
    pub control: ControlSection,
    pub check: CheckSection,
    pub output: OutputSection,
}

fn parse_override_value(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.to_string())),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

/// Applies `section.key=value`; the value is read as a TOML literal and
/// falls back to a bare string.
pub fn apply_override(table: &mut toml::Table, spec: &str) -> Result<(), CliError> {
    let (path, raw) = spec
        .split_once('=')
        .ok_or_else(|| CliError::config(format!("override '{spec}' is not of the form key=value")))?;
    let keys: Vec<&str> = path.trim().split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(CliError::config(format!("override '{spec}' has an empty key")));
    }
    let mut node = table;
    for k in &keys[..keys.len() - 1] {
        let entry = node.entry(k.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        node = entry
            .as_table_mut()
            .ok_or_else(|| CliError::config(format!("override '{spec}': '{k}' is not a section")))?;
    }
    node.insert(keys[keys.len() - 1].to_string(), parse_override_value(raw.trim()));
    Ok(())
}

impl RunConfig {
    pub fn from_toml(text: &str, overrides: &[String]) -> Result<Self, CliError> {
        let mut table: toml::Table = text.parse().map_err(|e| CliError::config(format!("malformed config: {e}")))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let cfg: RunConfig =
            toml::Value::Table(table).try_into().map_err(|e| CliError::config(format!("invalid config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self, CliError> {
        let text = match path {
            Some(p) => fs::read_to_string(p).map_err(|e| CliError::config(format!("cannot read {}: {e}", p.display())))?,
            None => String::new(),
        };
        Self::from_toml(&text, overrides)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let t = &self.tolerances;
        let positive = [
            ("tolerances.newton_tol", t.newton_tol),
            ("tolerances.cg_tol", t.cg_tol),
            ("tolerances.zero_tol_rel", t.zero_tol_rel),
            ("tolerances.p_tol_rel", t.p_tol_rel),
            ("tolerances.d_tol_rel", t.d_tol_rel),
            ("tolerances.bound_tol_rel", t.bound_tol_rel),
            ("tolerances.area_tol_rel", t.area_tol_rel),
            ("tolerances.snc_tol", t.snc_tol),
            ("tolerances.ssc_tol", t.ssc_tol),
            ("tolerances.growth_tol", t.growth_tol),
            ("tolerances.opt_tol", t.opt_tol),
            ("problem.nu", self.problem.nu),
            ("scan.rho", self.scan.rho),
            ("scan.tau", self.scan.tau),
            ("scan.eps_min", self.scan.eps_min),
            ("curvature.noise_factor", self.curvature.noise_factor),
        ];
        if let Some((name, v)) = positive.iter().find(|(_, v)| !(*v > 0.0 && v.is_finite())) {
            return Err(CliError::config(format!("{name} must be positive, got {v}")));
        }
        if !(t.zero_tol_abs >= 0.0) {
            return Err(CliError::config("tolerances.zero_tol_abs must be nonnegative"));
        }
        if !(self.scan.eps_max > self.scan.eps_min && self.scan.eps_max < 1.0) || self.scan.eps_count == 0 {
            return Err(CliError::config("scan needs 0 < eps_min < eps_max < 1 and eps_count > 0"));
        }
        if self.curvature.tail_window == 0 || self.curvature.bank.is_empty() {
            return Err(CliError::config("curvature needs tail_window > 0 and a nonempty bank"));
        }
        for s in &self.curvature.bank {
            s.validate().map_err(|e| CliError::config(e.to_string()))?;
        }
        if self.problem.instance == Instance::Tracking && self.problem.target_file.is_none() {
            return Err(CliError::config("problem.instance = \"tracking\" needs problem.target_file"));
        }
        if self.problem.domain == DomainKind::Custom && self.problem.mesh_file.is_none() {
            return Err(CliError::config("problem.domain = \"custom\" needs problem.mesh_file"));
        }
        if self.control.initial == InitialControl::File && self.control.file.is_none() {
            return Err(CliError::config("control.initial = \"file\" needs control.file"));
        }
        Ok(())
    }

    pub fn solver(&self) -> SolverOptions {
        SolverOptions { newton_tol: self.tolerances.newton_tol, max_newton: self.tolerances.max_newton }
    }

    pub fn zero_band(&self) -> ZeroBand {
        ZeroBand { relative: self.tolerances.zero_tol_rel, absolute: self.tolerances.zero_tol_abs }
    }

    pub fn check_options(&self) -> CheckOptions {
        let t = &self.tolerances;
        CheckOptions {
            area_tol_rel: t.area_tol_rel,
            p_tol_rel: t.p_tol_rel,
            bound_tol_rel: t.bound_tol_rel,
            d_tol_rel: t.d_tol_rel,
            snc_tol: t.snc_tol,
            ssc_tol: t.ssc_tol,
            growth_tol: t.growth_tol,
            eps_grid: log_grid(self.scan.eps_min, self.scan.eps_max, self.scan.eps_count),
        }
    }

    pub fn optimizer_options(&self) -> OptimizerOptions {
        OptimizerOptions { opt_tol: self.tolerances.opt_tol, max_iter: self.tolerances.max_iter, ..Default::default() }
    }

    pub fn curvature_options(&self) -> CurvatureOptions {
        CurvatureOptions { tail_window: self.curvature.tail_window, noise_factor: self.curvature.noise_factor }
    }

    fn space(&self) -> Result<FemSpace, CliError> {
        let p = &self.problem;
        let mesh = match (p.domain, p.aligned_ring) {
            (DomainKind::Custom, _) => {
                let path = p.mesh_file.as_deref().expect("validated");
                let file = fs::File::open(path).map_err(|e| CliError::io(path, e))?;
                Mesh::read_text(std::io::BufReader::new(file), DomainKind::Custom)
                    .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?
            }
            (DomainKind::UnitDiskPolygon, true) => {
                unit_disk(p.resolution, Some(0.5f64.sqrt())).map_err(CliError::from_core)?
            }
            (kind, _) => build_mesh(kind, p.resolution).map_err(CliError::from_core)?,
        };
        let space = FemSpace::new(mesh).map_err(CliError::from_core)?;
        Ok(match self.tolerances.linear_solver {
            LinearSolverChoice::Direct => space,
            LinearSolverChoice::Cg => space.with_backend(LinearBackend::Cg, self.tolerances.cg_tol),
        })
    }

    /// Builds the problem and, when the instance defines one, its
    /// distinguished control.
    pub fn build(&self) -> Result<(Problem, Option<ScalarField>), CliError> {
        let p = &self.problem;
        let (problem, special) = match p.instance {
            Instance::ZeroTarget | Instance::Manufactured => {
                if p.instance == Instance::Manufactured && p.domain != DomainKind::UnitSquare {
                    return Err(CliError::config("manufactured is defined on the unit square only"));
                }
                let space = self.space()?;
                let n = space.n();
                let special = match p.instance {
                    Instance::Manufactured => instances::manufactured_source(space.mesh()),
                    _ => ScalarField::zeros(nsoc_core::Role::Control, n),
                };
                let spec = ProblemSpec::unbounded(p.nu, vec![0.0; n], p.domain, p.resolution);
                (Problem::new(space, spec).map_err(CliError::from_core)?, Some(special))
            }
            Instance::KinkSaddle => {
                if p.domain != DomainKind::UnitSquare {
                    return Err(CliError::config("kink-saddle is defined on the unit square only"));
                }
                let shape = SaddleShape { a: p.saddle_a, b: p.saddle_b, c: p.saddle_c, nu: p.nu };
                let (problem, u) = instances::kink_saddle(p.resolution, shape).map_err(CliError::from_core)?;
                (problem, Some(u))
            }
            Instance::InverseCrimeBox => {
                if p.domain != DomainKind::UnitSquare {
                    return Err(CliError::config("inverse-crime-box is defined on the unit square only"));
                }
                let (problem, u) =
                    instances::inverse_crime_box(p.resolution, p.nu, self.scan.seed).map_err(CliError::from_core)?;
                (problem, Some(u))
            }
            Instance::Tracking => {
                let space = self.space()?;
                let path = p.target_file.as_deref().expect("validated");
                let target = read_field(path)?;
                space.check(&target).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
                let n = space.n();
                let bounds = match (p.lower, p.upper) {
                    (None, None) => Bounds::Unbounded,
                    (lo, hi) => Bounds::Box {
                        alpha: vec![lo.unwrap_or(f64::NEG_INFINITY); n],
                        beta: vec![hi.unwrap_or(f64::INFINITY); n],
                    },
                };
                let spec = ProblemSpec {
                    nu: p.nu,
                    bounds,
                    gamma_floor: p.gamma_floor,
                    integrand: QuadraticTracking { target: target.values },
                    domain_kind: p.domain,
                    resolution: p.resolution,
                };
                (Problem::new(space, spec).map_err(CliError::from_core)?, None)
            }
        };
        Ok((problem.with_solver(self.solver()).with_zero_band(self.zero_band()), special))
    }
}

pub fn read_field(path: &Path) -> Result<ScalarField, CliError> {
    let file = fs::File::open(path).map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
    ScalarField::read_text(std::io::BufReader::new(file))
        .map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        assert_eq!(RunConfig::from_toml("", &[]).unwrap(), RunConfig::default());
    }

    #[test]
    fn overrides_are_typed() {
        let cfg = RunConfig::from_toml(
            "[problem]\nnu = 2.0\n",
            &["problem.resolution=8".into(), "problem.instance=kink-saddle".into(), "scan.rho=0.5".into()],
        )
        .unwrap();
        assert_eq!(cfg.problem.resolution, 8);
        assert_eq!(cfg.problem.instance, Instance::KinkSaddle);
        assert_eq!(cfg.problem.nu, 2.0);
        assert_eq!(cfg.scan.rho, 0.5);
    }

    #[test]
    fn bad_inputs_are_config_errors() {
        for (doc, ov) in [
            ("[problem\n", vec![]),
            ("[problem]\nnu = -1.0\n", vec![]),
            ("[problem]\ncolour = 1\n", vec![]),
            ("", vec!["noequals".to_string()]),
            ("", vec!["tolerances.snc_tol=0".to_string()]),
        ] {
            let err = RunConfig::from_toml(doc, &ov).unwrap_err();
            assert_eq!(err.code, 1, "{doc:?} {ov:?}");
        }
    }
}
