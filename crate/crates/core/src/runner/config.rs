//! Scenario configuration: a TOML document with one table per concern.
//! A file may name a builtin scenario and override any subset of its keys.

use std::f64::consts::{FRAC_PI_2, PI};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::ansatz::AnsatzKind;
use crate::error::{Error, Result};
use crate::geometry::Geometry;
use crate::residual::ResidualForm;
use crate::training::TrainSchedule;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    MhPinn,
    Baseline,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeometryConfig {
    Circle { radius: f64 },
    Ellipse { a: f64, b: f64 },
    Polygon { sides: usize, circumradius: f64 },
    Sphere { radius: f64 },
    Ellipsoid { a: f64, b: f64, c: f64 },
    Canyon { radius: f64 },
}

impl GeometryConfig {
    pub fn geometry(self) -> Geometry {
        match self {
            GeometryConfig::Circle { radius } => Geometry::Circle { radius },
            GeometryConfig::Ellipse { a, b } => Geometry::Ellipse { a, b },
            GeometryConfig::Polygon { sides, circumradius } => Geometry::RegularPolygon { sides, circumradius },
            GeometryConfig::Sphere { radius } => Geometry::Sphere { radius },
            GeometryConfig::Ellipsoid { a, b, c } => Geometry::Ellipsoid { a, b, c },
            GeometryConfig::Canyon { radius } => Geometry::CanyonCavity { radius },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    /// Pulsating boundary with constant Dirichlet amplitude.
    Radiation,
    /// Sound-soft obstacle under a plane wave; the field is the scattered part.
    Scattering,
    /// SH waves at a semicircular canyon; the field is the scattered part.
    Canyon,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsConfig {
    pub problem: ProblemKind,
    /// Wavenumber, or `k∞` when `alpha > 0`.
    pub k: f64,
    #[serde(default)]
    pub alpha: f64,
    #[serde(default = "one")]
    pub decay: f64,
    /// Boundary amplitude of radiation problems.
    #[serde(default = "hundred")]
    pub amplitude: f64,
    /// Incidence angle: in the xy-plane from the x axis for scattering,
    /// from the free surface for the canyon.
    #[serde(default)]
    pub incidence: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnsatzChoice {
    DirichletRadial,
    NeumannShielded,
    WkbRadial,
}

impl AnsatzChoice {
    pub fn kind(self) -> AnsatzKind {
        match self {
            AnsatzChoice::DirichletRadial => AnsatzKind::DirichletRadial,
            AnsatzChoice::NeumannShielded => AnsatzKind::NeumannShielded,
            AnsatzChoice::WkbRadial => AnsatzKind::WkbRadial,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResidualChoice {
    ExplicitPolar,
    ChainRuleGeneral,
    SphericalAxisym,
    SphericalFull,
}

impl ResidualChoice {
    pub fn form(self) -> ResidualForm {
        match self {
            ResidualChoice::ExplicitPolar => ResidualForm::ExplicitPolar,
            ResidualChoice::ChainRuleGeneral => ResidualForm::ChainRuleGeneral,
            ResidualChoice::SphericalAxisym => ResidualForm::SphericalAxisym,
            ResidualChoice::SphericalFull => ResidualForm::SphericalFull,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnsatzConfig {
    pub kind: AnsatzChoice,
    pub residual: ResidualChoice,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapConfig {
    /// Inner radius; defaults to the smallest boundary radius and must match it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_in: Option<f64>,
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    pub hidden: Vec<usize>,
    /// Initialization seed; the scenario seed when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingConfig {
    pub points: usize,
    /// Collocation seed; the scenario seed when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    pub adam_iters: usize,
    #[serde(default = "adam_lr")]
    pub adam_lr: f64,
    pub lbfgs_iters: usize,
    #[serde(default = "lbfgs_memory")]
    pub lbfgs_memory: usize,
    #[serde(default = "grad_tol")]
    pub grad_tol: f64,
}

impl ScheduleConfig {
    pub fn schedule(&self, seed: u64) -> TrainSchedule {
        TrainSchedule {
            adam_iters: self.adam_iters,
            adam_lr: self.adam_lr,
            lbfgs_max_iters: self.lbfgs_iters,
            lbfgs_memory: self.lbfgs_memory,
            grad_tol: self.grad_tol,
            seed,
            ..TrainSchedule::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleChoice {
    RadiationExact,
    RadialFdm,
    Mie2d,
    Mie3d,
    Mfs,
    CanyonSeries,
}

impl OracleChoice {
    pub fn name(self) -> &'static str {
        match self {
            OracleChoice::RadiationExact => "radiation_exact",
            OracleChoice::RadialFdm => "radial_fdm",
            OracleChoice::Mie2d => "mie2d",
            OracleChoice::Mie3d => "mie3d",
            OracleChoice::Mfs => "mfs",
            OracleChoice::CanyonSeries => "canyon_series",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    pub kind: OracleChoice,
    /// Source count of the MFS oracle.
    #[serde(default = "mfs_sources")]
    pub sources: usize,
    /// Series truncation; chosen from `k·r` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// Radial samples from the boundary outwards.
    pub n_r: usize,
    /// Angular samples per circle.
    pub n_theta: usize,
    /// Radial extent `r ∈ [r_b, r_b + width]`.
    pub width: f64,
    /// Side of the square heatmap image in pixels.
    #[serde(default = "heatmap_pixels")]
    pub heatmap_pixels: usize,
    /// Points along the canyon surface profile.
    #[serde(default = "surface_points")]
    pub surface_points: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    #[serde(default)]
    pub heatmap: bool,
    /// Record wall time in metrics.json; off by default so reruns are byte-identical.
    #[serde(default)]
    pub timing: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaselineConfig {
    #[serde(default = "r_out")]
    pub r_out: f64,
    #[serde(default = "one")]
    pub lambda_pde: f64,
    #[serde(default = "one")]
    pub lambda_bc: f64,
    #[serde(default = "one")]
    pub lambda_rad: f64,
    /// Points on each of the inner and outer circles; a tenth of the interior count when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary_points: Option<usize>,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self { r_out: r_out(), lambda_pde: 1.0, lambda_bc: 1.0, lambda_rad: 1.0, boundary_points: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: String,
    pub model: ModelKind,
    pub seed: u64,
    pub geometry: GeometryConfig,
    pub physics: PhysicsConfig,
    pub ansatz: AnsatzConfig,
    pub map: MapConfig,
    pub network: NetworkConfig,
    pub sampling: SamplingConfig,
    pub schedule: ScheduleConfig,
    pub oracle: OracleConfig,
    pub grid: GridConfig,
    pub output: OutputConfig,
    #[serde(default)]
    pub baseline: BaselineConfig,
}

fn one() -> f64 {
    1.0
}
fn hundred() -> f64 {
    100.0
}
fn adam_lr() -> f64 {
    1e-3
}
fn lbfgs_memory() -> usize {
    50
}
fn grad_tol() -> f64 {
    1e-9
}
fn mfs_sources() -> usize {
    320
}
fn heatmap_pixels() -> usize {
    256
}
fn surface_points() -> usize {
    241
}
fn r_out() -> f64 {
    6.0
}

/// Names of the builtin scenarios.
pub const BUILTINS: &[&str] = &[
    "radiation_circle",
    "radiation_variable_k",
    "radiation_high_k",
    "baseline_radiation",
    "scatter_circle",
    "scatter_ellipse",
    "scatter_square",
    "scatter_hexagon",
    "scatter_sphere",
    "scatter_ellipsoid",
    "sh_canyon",
];

impl ScenarioConfig {
    /// A builtin scenario by name.
    pub fn builtin(name: &str) -> Result<Self> {
        let mut c = Self::template(name);
        match name {
            "radiation_circle" => {}
            "radiation_variable_k" => {
                c.physics.k = 2.0;
                c.physics.alpha = 0.5;
                c.physics.decay = 1.0;
                c.ansatz.kind = AnsatzChoice::WkbRadial;
                c.oracle.kind = OracleChoice::RadialFdm;
            }
            "radiation_high_k" => {
                c.physics.k = 20.0;
                c.sampling.points = 12000;
                c.schedule.lbfgs_iters = 6000;
            }
            "baseline_radiation" => {
                c.model = ModelKind::Baseline;
                c.physics.k = 6.0;
            }
            "scatter_circle" => {
                c.physics = scattering(1.0);
                c.oracle.kind = OracleChoice::Mie2d;
            }
            "scatter_ellipse" => {
                c.geometry = GeometryConfig::Ellipse { a: 2.0, b: 1.0 };
                c.physics = scattering(1.0);
                c.ansatz.residual = ResidualChoice::ChainRuleGeneral;
                c.oracle.kind = OracleChoice::Mfs;
            }
            "scatter_square" | "scatter_hexagon" => {
                let sides = if name == "scatter_square" { 4 } else { 6 };
                // the square has half-width 1
                let circumradius = if sides == 4 { std::f64::consts::SQRT_2 } else { 1.0 };
                c.geometry = GeometryConfig::Polygon { sides, circumradius };
                c.physics = scattering(1.0);
                c.ansatz.residual = ResidualChoice::ChainRuleGeneral;
                c.oracle.kind = OracleChoice::Mfs;
            }
            "scatter_sphere" => {
                c.geometry = GeometryConfig::Sphere { radius: 1.0 };
                c.physics = scattering(5.0);
                c.ansatz.residual = ResidualChoice::SphericalAxisym;
                c.oracle.kind = OracleChoice::Mie3d;
                c.grid = GridConfig { n_r: 100, n_theta: 100, ..c.grid };
            }
            "scatter_ellipsoid" => {
                c.geometry = GeometryConfig::Ellipsoid { a: 2.0, b: 1.0, c: 1.0 };
                c.physics = scattering(5.0);
                c.ansatz.residual = ResidualChoice::SphericalFull;
                c.oracle = OracleConfig { kind: OracleChoice::Mfs, sources: 1500, n_max: None };
                c.grid = GridConfig { n_r: 100, n_theta: 100, ..c.grid };
            }
            "sh_canyon" => {
                c.geometry = GeometryConfig::Canyon { radius: 1.0 };
                c.physics = PhysicsConfig { problem: ProblemKind::Canyon, k: PI, incidence: FRAC_PI_2, ..scattering(PI) };
                c.ansatz.kind = AnsatzChoice::NeumannShielded;
                c.map.scale = 3.0;
                c.oracle.kind = OracleChoice::CanyonSeries;
            }
            _ => {
                return Err(Error::Config(format!("unknown scenario '{name}'; builtins: {}", BUILTINS.join(", "))));
            }
        }
        Ok(c)
    }

    /// Radiation from a unit circle, the shared starting point of the builtins.
    fn template(name: &str) -> Self {
        Self {
            scenario: name.to_string(),
            model: ModelKind::MhPinn,
            seed: 0,
            geometry: GeometryConfig::Circle { radius: 1.0 },
            physics: PhysicsConfig { problem: ProblemKind::Radiation, k: 3.0, alpha: 0.0, decay: 1.0, amplitude: 100.0, incidence: 0.0 },
            ansatz: AnsatzConfig { kind: AnsatzChoice::DirichletRadial, residual: ResidualChoice::ExplicitPolar },
            map: MapConfig { r_in: None, scale: 2.0 },
            network: NetworkConfig { hidden: vec![64; 4], seed: None },
            sampling: SamplingConfig { points: 4000, seed: None },
            schedule: ScheduleConfig { adam_iters: 2000, adam_lr: 1e-3, lbfgs_iters: 3000, lbfgs_memory: 50, grad_tol: 1e-9 },
            oracle: OracleConfig { kind: OracleChoice::RadiationExact, sources: mfs_sources(), n_max: None },
            grid: GridConfig { n_r: 200, n_theta: 200, width: 5.0, heatmap_pixels: heatmap_pixels(), surface_points: surface_points() },
            output: OutputConfig { dir: PathBuf::from("runs").join(name), heatmap: false, timing: false },
            baseline: BaselineConfig::default(),
        }
    }

    /// Parses a config document, layering it over the builtin it names.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let table: toml::Table = text.parse().map_err(|e| Error::Config(format!("malformed config: {e}")))?;
        let merged = match table.get("scenario").and_then(|v| v.as_str()) {
            Some(name) if BUILTINS.contains(&name) => {
                let base = toml::Table::try_from(Self::builtin(name)?).map_err(|e| Error::Config(e.to_string()))?;
                merge(base, table)
            }
            _ => table,
        };
        let config: Self = merged.try_into().map_err(|e: toml::de::Error| Error::Config(format!("invalid config: {}", e.message())))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn network_seed(&self) -> u64 {
        self.network.seed.unwrap_or(self.seed)
    }

    pub fn sampling_seed(&self) -> u64 {
        self.sampling.seed.unwrap_or(self.seed)
    }

    /// Sets the scenario seed, clearing the per-component seeds it would otherwise not reach.
    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.network.seed = None;
        self.sampling.seed = None;
    }

    /// Oracles that can serve as reference for this problem.
    pub fn available_oracles(&self) -> Vec<OracleChoice> {
        let constant_k = self.physics.alpha == 0.0;
        let mut v = Vec::new();
        match (self.physics.problem, self.geometry) {
            (ProblemKind::Radiation, GeometryConfig::Circle { .. }) => {
                if constant_k {
                    v.push(OracleChoice::RadiationExact);
                }
                v.push(OracleChoice::RadialFdm);
            }
            (ProblemKind::Scattering, GeometryConfig::Circle { .. }) if constant_k && self.physics.incidence == 0.0 => {
                v.push(OracleChoice::Mie2d)
            }
            (ProblemKind::Scattering, GeometryConfig::Sphere { .. }) if constant_k && self.physics.incidence == 0.0 => {
                v.push(OracleChoice::Mie3d)
            }
            (ProblemKind::Canyon, GeometryConfig::Canyon { .. }) if constant_k => v.push(OracleChoice::CanyonSeries),
            _ => {}
        }
        let dirichlet = matches!(self.physics.problem, ProblemKind::Radiation | ProblemKind::Scattering);
        if dirichlet && constant_k && !matches!(self.geometry, GeometryConfig::Canyon { .. }) {
            v.push(OracleChoice::Mfs);
        }
        v
    }

    /// Checks every field and cross-field constraint before anything runs.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        let geometry = self.geometry.geometry();
        geometry.validate().map_err(|e| Error::Config(e.to_string()))?;
        let p = &self.physics;
        if !(p.k > 0.0 && p.k.is_finite()) || !(p.alpha >= 0.0) || !(p.decay > 0.0) || !p.amplitude.is_finite() || !p.incidence.is_finite() {
            return bad(format!("invalid physics settings {p:?}"));
        }
        if !(self.map.scale > 0.0) {
            return bad(format!("map scale must be positive, got {}", self.map.scale));
        }
        if let Some(r_in) = self.map.r_in {
            if r_in != geometry.reference_radius() {
                return bad(format!("map r_in = {r_in} does not match the boundary radius {}", geometry.reference_radius()));
            }
        }
        if self.network.hidden.is_empty() || self.network.hidden.contains(&0) {
            return bad(format!("hidden layers must be nonempty with positive widths, got {:?}", self.network.hidden));
        }
        if self.sampling.points == 0 {
            return bad("sampling.points must be positive".into());
        }
        let g = &self.grid;
        if g.n_r < 2 || g.n_theta < 1 || !(g.width > 0.0) || g.heatmap_pixels < 2 || g.surface_points < 3 {
            return bad(format!("invalid grid settings {g:?}"));
        }
        if self.oracle.sources == 0 || self.oracle.n_max == Some(0) {
            return bad("oracle sources and n_max must be positive".into());
        }
        self.schedule.schedule(self.seed).validate().map_err(|e| Error::Config(e.to_string()))?;

        let dim = geometry.dimension();
        let form = self.ansatz.residual;
        let form_ok = match form {
            ResidualChoice::ExplicitPolar => dim == 2 && geometry.has_constant_radius(),
            ResidualChoice::ChainRuleGeneral => dim == 2,
            ResidualChoice::SphericalAxisym => matches!(self.geometry, GeometryConfig::Sphere { .. }),
            ResidualChoice::SphericalFull => dim == 3,
        };
        if !form_ok {
            return bad(format!("residual {} does not fit geometry {}", form.form().name(), geometry.name()));
        }
        let problem_ok = match p.problem {
            ProblemKind::Radiation | ProblemKind::Scattering => !matches!(self.geometry, GeometryConfig::Canyon { .. }),
            ProblemKind::Canyon => matches!(self.geometry, GeometryConfig::Canyon { .. }),
        };
        if !problem_ok {
            return bad(format!("problem {:?} does not fit geometry {}", p.problem, geometry.name()));
        }
        if form == ResidualChoice::SphericalAxisym && p.problem == ProblemKind::Scattering && p.incidence != 0.0 {
            return bad("axisymmetric scattering needs incidence along the x axis (incidence = 0)".into());
        }
        let ansatz_ok = match self.ansatz.kind {
            AnsatzChoice::DirichletRadial => p.problem != ProblemKind::Canyon && p.alpha == 0.0,
            AnsatzChoice::WkbRadial => p.problem != ProblemKind::Canyon && geometry.has_constant_radius(),
            AnsatzChoice::NeumannShielded => p.problem == ProblemKind::Canyon,
        };
        if !ansatz_ok {
            return bad(format!("ansatz {} does not fit this problem (variable k needs wkb_radial; the canyon needs neumann_shielded)", self.ansatz.kind.kind().name()));
        }
        let available = self.available_oracles();
        if !available.contains(&self.oracle.kind) {
            let names: Vec<&str> = available.iter().map(|o| o.name()).collect();
            return bad(format!(
                "oracle {} is unavailable for {} {:?}; available: {}",
                self.oracle.kind.name(),
                geometry.name(),
                p.problem,
                if names.is_empty() { "none".to_string() } else { names.join(", ") }
            ));
        }
        if self.model == ModelKind::Baseline {
            let circle = matches!(self.geometry, GeometryConfig::Circle { .. });
            if !circle || p.problem == ProblemKind::Canyon || p.alpha != 0.0 {
                return bad("the baseline model supports 2D circle scenarios with constant k only".into());
            }
            let b = &self.baseline;
            let outer = geometry.reference_radius() + g.width;
            if !(b.r_out >= outer) {
                return bad(format!("baseline r_out = {} must cover the test annulus out to r = {outer}", b.r_out));
            }
            if b.boundary_points == Some(0) || [b.lambda_pde, b.lambda_bc, b.lambda_rad].iter().any(|w| !(*w >= 0.0)) {
                return bad(format!("invalid baseline settings {b:?}"));
            }
        }
        Ok(())
    }
}

fn scattering(k: f64) -> PhysicsConfig {
    PhysicsConfig { problem: ProblemKind::Scattering, k, alpha: 0.0, decay: 1.0, amplitude: 100.0, incidence: 0.0 }
}

/// Deep merge of `over` into `base`; a table whose `kind` changes is replaced whole.
fn merge(mut base: toml::Table, over: toml::Table) -> toml::Table {
    for (key, value) in over {
        match (base.get_mut(&key), value) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => {
                let same_kind = match (b.get("kind"), o.get("kind")) {
                    (Some(x), Some(y)) => x == y,
                    _ => true,
                };
                if same_kind {
                    let merged = merge(std::mem::take(b), o);
                    *b = merged;
                } else {
                    *b = o;
                }
            }
            (_, value) => {
                base.insert(key, value);
            }
        }
    }
    base
}
