//! Scenario assembly, training runs, evaluation against the oracles, and artifacts.

pub mod config;
pub mod grid;
pub mod output;
pub mod selftest;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::ansatz::{AnsatzKind, AnsatzSpec, KModel};
use crate::baseline::{BaselineProblem, SoftLossSpec};
use crate::diff::{evaluate_outputs, CollocationBatch, Layout, RJet, DEFAULT_CHUNK};
use crate::error::{Error, Result};
use crate::geometry::{background_field_canyon, BoundaryData, DirichletData, Geometry, NeumannData};
use crate::mapping::MapSpec;
use crate::network::{InputEncoding, NetParams};
use crate::oracles::{canyon_series, default_n_max, fdm_default_grid, mfs_solve, radial_fdm, surface_points, Mie2d, Mie3d, OracleField};
use crate::residual::{ResidualForm, ResidualSpec};
use crate::training::{domain_bounds, latin_hypercube, train, History, Problem, TrainReport};

use config::{GeometryConfig, ModelKind, OracleChoice, ProblemKind, ScenarioConfig};
use grid::{annulus_grid, computational_coords, image_points, near_corner, outer_extent, TestGrid};
use output::{error_norms, write_heatmap, ErrorNorms, FieldTable, Metrics};

/// Corner neighbourhood excluded from the polygon error, as a fraction of the circumradius.
pub const CORNER_EXCLUSION: f64 = 0.1;

/// The trainable model of a scenario.
#[derive(Debug, Clone)]
pub enum Model {
    Mh(Problem),
    Baseline(BaselineProblem),
}

/// A validated configuration turned into solver objects.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub geometry: Geometry,
    pub k: KModel,
    pub form: ResidualForm,
    pub map: MapSpec,
    pub model: Model,
}

impl Scenario {
    pub fn build(config: &ScenarioConfig) -> Result<Self> {
        config.validate()?;
        let geometry = config.geometry.geometry();
        let p = &config.physics;
        let k = if p.alpha > 0.0 { KModel::Decaying { k_inf: p.k, alpha: p.alpha, decay: p.decay } } else { KModel::Constant(p.k) };
        let form = config.ansatz.residual.form();
        let map = if geometry.has_constant_radius() {
            MapSpec::new(geometry.reference_radius(), config.map.scale)?
        } else {
            MapSpec::with_boundary(geometry.clone(), config.map.scale)?
        };
        let model = match config.model {
            ModelKind::MhPinn => {
                let ansatz = AnsatzSpec::new(config.ansatz.kind.kind(), geometry.clone(), Self::boundary_data(config), map.clone(), k)?;
                let residual = ResidualSpec::new(form, map.clone(), k)?;
                let encoding = if form == ResidualForm::SphericalFull { InputEncoding::Spherical } else { InputEncoding::Polar };
                Model::Mh(Problem::new(ansatz, residual, encoding)?)
            }
            ModelKind::Baseline => {
                let b = &config.baseline;
                let n = config.sampling.points;
                let nb = b.boundary_points.unwrap_or_else(|| SoftLossSpec::with_points(n).n_boundary);
                let loss = SoftLossSpec {
                    lambda_pde: b.lambda_pde,
                    lambda_bc: b.lambda_bc,
                    lambda_rad: b.lambda_rad,
                    r_out: b.r_out,
                    n_interior: n,
                    n_boundary: nb,
                    n_outer: nb,
                };
                let BoundaryData::Dirichlet(data) = Self::boundary_data(config) else {
                    return Err(Error::Config("the baseline needs Dirichlet data".into()));
                };
                Model::Baseline(BaselineProblem::new(p.k, geometry.reference_radius(), data, loss)?)
            }
        };
        Ok(Self { config: config.clone(), geometry, k, form, map, model })
    }

    fn boundary_data(config: &ScenarioConfig) -> BoundaryData {
        let p = &config.physics;
        match p.problem {
            ProblemKind::Radiation => BoundaryData::Dirichlet(DirichletData::Constant(Complex64::new(p.amplitude, 0.0))),
            ProblemKind::Scattering => {
                let (s, c) = p.incidence.sin_cos();
                BoundaryData::Dirichlet(DirichletData::SoundSoft { k: p.k, direction: [c, s, 0.0] })
            }
            ProblemKind::Canyon => BoundaryData::Neumann(NeumannData::Canyon { k: p.k, theta_inc: p.incidence }),
        }
    }

    pub fn dirichlet_data(&self) -> Option<DirichletData> {
        match Self::boundary_data(&self.config) {
            BoundaryData::Dirichlet(d) => Some(d),
            BoundaryData::Neumann(_) => None,
        }
    }

    /// Reference field on the test region.
    pub fn oracle(&self) -> Result<OracleField> {
        let c = &self.config;
        let p = &c.physics;
        let r_b = self.geometry.reference_radius();
        let outer = outer_extent(&self.geometry) + c.grid.width;
        let n_max = c.oracle.n_max.unwrap_or_else(|| default_n_max(p.k * outer));
        let u0 = Complex64::new(p.amplitude, 0.0);
        Ok(match c.oracle.kind {
            OracleChoice::RadiationExact => OracleField::Radiation { k: p.k, u0 },
            OracleChoice::RadialFdm => {
                let (r_max, n) = fdm_default_grid(&self.k);
                OracleField::Radial(radial_fdm(&self.k, u0, r_max.max(outer), n)?)
            }
            OracleChoice::Mie2d => OracleField::Mie2d(Mie2d::new(p.k, r_b, n_max)?),
            OracleChoice::Mie3d => OracleField::Mie3d(Mie3d::new(p.k, r_b, n_max)?),
            OracleChoice::Mfs => {
                let data = self.dirichlet_data().ok_or_else(|| Error::Config("mfs needs Dirichlet data".into()))?;
                OracleField::Mfs(mfs_solve(&self.geometry, p.k, &data, c.oracle.sources)?)
            }
            OracleChoice::CanyonSeries => OracleField::Canyon(canyon_series(p.k, r_b, p.incidence, n_max)?),
        })
    }

    pub fn test_grid(&self) -> TestGrid {
        let g = &self.config.grid;
        annulus_grid(&self.geometry, g.n_r, g.n_theta, g.width)
    }

    pub fn init_network(&self) -> Result<NetParams> {
        let hidden = &self.config.network.hidden;
        let seed = self.config.network_seed();
        match &self.model {
            Model::Mh(p) => p.init_network(hidden, seed),
            Model::Baseline(b) => b.init_network(hidden, seed),
        }
    }

    /// Collocation batch of the training loss.
    pub fn collocation(&self) -> Result<CollocationBatch> {
        let seed = self.config.sampling_seed();
        match &self.model {
            Model::Mh(p) => p.batch(&latin_hypercube(self.config.sampling.points, &domain_bounds(self.form), seed)?),
            Model::Baseline(b) => b.batch(seed),
        }
    }

    /// Predicted field at physical points; `None` inside the obstacle.
    pub fn predict(&self, net: &NetParams, points: &[[f64; 3]]) -> Result<Vec<Option<Complex64>>> {
        match &self.model {
            Model::Mh(problem) => {
                let coords: Vec<Option<Vec<f64>>> = points.iter().map(|x| computational_coords(&self.map, self.form, x).ok()).collect();
                let inside: Vec<&Vec<f64>> = coords.iter().flatten().collect();
                // only û itself is needed; the Neumann envelope also reads ∇N
                let order = if problem.ansatz.kind == AnsatzKind::NeumannShielded { 1 } else { 0 };
                let layout = Layout::get(problem.coord_count(), order);
                let inputs: Vec<Vec<RJet>> = inside
                    .iter()
                    .map(|c| {
                        let jets: Vec<RJet> = c.iter().enumerate().map(|(i, &v)| RJet::variable(layout, i, v)).collect();
                        problem.encoding.encode(&jets)
                    })
                    .collect();
                let outs = evaluate_outputs(net, &inputs, layout, DEFAULT_CHUNK)?;
                let values = inside
                    .par_iter()
                    .zip(outs.par_iter())
                    .map(|(c, n)| Ok(problem.ansatz.prepare_in(c, layout)?.field(n).value()))
                    .collect::<Result<Vec<_>>>()?;
                let mut it = values.into_iter();
                Ok(coords.iter().map(|c| c.as_ref().and_then(|_| it.next())).collect())
            }
            Model::Baseline(b) => {
                let polar: Vec<Option<(f64, f64)>> = points
                    .iter()
                    .map(|x| {
                        let r = x[0].hypot(x[1]);
                        (r >= b.r_b * (1.0 - 1e-12)).then(|| (r.max(b.r_b), x[1].atan2(x[0]).rem_euclid(std::f64::consts::TAU)))
                    })
                    .collect();
                let inside: Vec<(f64, f64)> = polar.iter().flatten().copied().collect();
                let mut it = b.field_values(net, &inside)?.into_iter();
                Ok(polar.iter().map(|p| p.and_then(|_| it.next())).collect())
            }
        }
    }

    /// Prediction and reference on the test grid.
    pub fn field_table(&self, net: &NetParams, oracle: &OracleField) -> Result<FieldTable> {
        let grid = self.test_grid();
        let pred = self
            .predict(net, &grid.points)?
            .into_iter()
            .map(|v| v.ok_or_else(|| Error::Domain("test grid point inside the obstacle".into())))
            .collect::<Result<Vec<_>>>()?;
        let reference = eval_oracle(oracle, &grid.points)?;
        Ok(FieldTable { dim: grid.dim, points: grid.points, pred, reference })
    }

    /// Training loss of `net` on the configured collocation set.
    pub fn loss(&self, net: &NetParams) -> Result<f64> {
        self.collocation()?.loss(net)
    }
}

/// Oracle values at physical points, evaluated in parallel.
pub fn eval_oracle(oracle: &OracleField, points: &[[f64; 3]]) -> Result<Vec<Complex64>> {
    points.par_iter().map(|x| oracle.eval(x)).collect()
}

/// Total-field amplitude along the canyon surface.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceProfile {
    pub points: Vec<[f64; 2]>,
    pub pred: Vec<Complex64>,
    pub reference: Vec<Complex64>,
}

impl SurfaceProfile {
    /// `‖|û| − |u|‖₂ / ‖|u|‖₂` along the surface.
    pub fn amplitude_error(&self) -> f64 {
        let (mut num, mut den) = (0.0, 0.0);
        for (p, r) in self.pred.iter().zip(&self.reference) {
            num += (p.norm() - r.norm()).powi(2);
            den += r.norm_sqr();
        }
        (num / den).sqrt()
    }

    /// `‖|û(x)| − |û(−x)|‖₂ / ‖|û|‖₂`; the surface points are antisymmetric in `x`.
    pub fn asymmetry(&self) -> f64 {
        let n = self.pred.len();
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..n {
            num += (self.pred[i].norm() - self.pred[n - 1 - i].norm()).powi(2);
            den += self.pred[i].norm_sqr();
        }
        (num / den).sqrt()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> std::io::Result<()> {
        let mut w = std::io::BufWriter::new(w);
        writeln!(w, "x,y,abs_pred,abs_ref")?;
        for ((x, p), r) in self.points.iter().zip(&self.pred).zip(&self.reference) {
            writeln!(w, "{:e},{:e},{:e},{:e}", x[0], x[1], p.norm(), r.norm())?;
        }
        w.flush()
    }
}

/// Predicted and reference total field on the canyon surface.
pub fn canyon_surface(scenario: &Scenario, net: &NetParams, oracle: &OracleField) -> Result<SurfaceProfile> {
    let OracleField::Canyon(series) = oracle else {
        return Err(Error::Config("surface profile needs the canyon_series oracle".into()));
    };
    let GeometryConfig::Canyon { radius } = scenario.config.geometry else {
        return Err(Error::Config("surface profile needs the canyon geometry".into()));
    };
    let n = scenario.config.grid.surface_points;
    let pts = surface_points(radius, n);
    let phys: Vec<[f64; 3]> = pts.iter().map(|p| [p[0], p[1], 0.0]).collect();
    let scattered = scenario.predict(net, &phys)?;
    let (k, inc) = (series.k, series.theta_inc);
    let pred = pts
        .iter()
        .zip(scattered)
        .map(|(p, s)| {
            let s = s.ok_or_else(|| Error::Domain(format!("surface point {p:?} inside the cavity")))?;
            Ok(background_field_canyon(k, inc, p).0 + s)
        })
        .collect::<Result<Vec<_>>>()?;
    let reference = series.surface_profile(n)?.into_iter().map(|s| s.u).collect();
    Ok(SurfaceProfile { points: pts, pred, reference })
}

/// Everything a finished run produced.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub metrics: Metrics,
    pub field: FieldTable,
    pub history: History,
    pub net: NetParams,
    pub train: Option<TrainReport>,
    pub oracle_summary: String,
    /// Error with points near polygon corners excluded.
    pub corner_excluded: Option<ErrorNorms>,
    pub surface: Option<SurfaceProfile>,
    pub seconds: f64,
}

impl RunOutcome {
    /// Adam divergence or a non-finite final loss.
    pub fn diverged(&self) -> bool {
        self.train.as_ref().is_some_and(|t| t.diverged.is_some()) || !self.metrics.final_loss.is_finite()
    }
}

/// Trains the configured model and evaluates it against the oracle.
pub fn run_scenario(config: &ScenarioConfig) -> Result<RunOutcome> {
    let start = Instant::now();
    let scenario = Scenario::build(config)?;
    let oracle = scenario.oracle()?;
    let batch = scenario.collocation()?;
    let mut net = scenario.init_network()?;
    let report = train(&batch, &mut net, &config.schedule.schedule(config.sampling_seed()))?;
    let history = report.history.clone();
    let (final_loss, adam, lbfgs) = (report.final_loss, report.adam_iters, report.lbfgs_iters);
    finish(&scenario, net, &oracle, history, Some(report), final_loss, adam, lbfgs, start)
}

/// Evaluates a saved network without training.
pub fn evaluate_checkpoint(config: &ScenarioConfig, checkpoint: &Path) -> Result<RunOutcome> {
    let start = Instant::now();
    let scenario = Scenario::build(config)?;
    let net = NetParams::load(checkpoint)?;
    let expected = scenario.init_network()?;
    if net.sizes() != expected.sizes() {
        return Err(Error::Checkpoint(format!("checkpoint layers {:?} do not match the configured {:?}", net.sizes(), expected.sizes())));
    }
    let oracle = scenario.oracle()?;
    let loss = scenario.loss(&net)?;
    finish(&scenario, net, &oracle, History::default(), None, loss, 0, 0, start)
}

#[allow(clippy::too_many_arguments)]
fn finish(
    scenario: &Scenario,
    net: NetParams,
    oracle: &OracleField,
    history: History,
    train: Option<TrainReport>,
    final_loss: f64,
    adam_iters: usize,
    lbfgs_iters: usize,
    start: Instant,
) -> Result<RunOutcome> {
    let c = &scenario.config;
    let field = scenario.field_table(&net, oracle)?;
    let norms = field.norms();
    let corner_excluded = scenario.geometry.polygon_vertices().map(|_| {
        let radius = CORNER_EXCLUSION * outer_extent(&scenario.geometry);
        let keep: Vec<usize> = (0..field.points.len()).filter(|&i| !near_corner(&scenario.geometry, &field.points[i], radius)).collect();
        let pred: Vec<Complex64> = keep.iter().map(|&i| field.pred[i]).collect();
        let reference: Vec<Complex64> = keep.iter().map(|&i| field.reference[i]).collect();
        error_norms(&pred, &reference)
    });
    let surface = match oracle {
        OracleField::Canyon(_) => Some(canyon_surface(scenario, &net, oracle)?),
        _ => None,
    };
    let seconds = start.elapsed().as_secs_f64();
    let metrics = Metrics {
        scenario: c.scenario.clone(),
        k: c.physics.k,
        rel_l2_complex: norms.rel_l2_complex,
        rel_l2_real: norms.rel_l2_real,
        max_abs_err: norms.max_abs_err,
        final_loss,
        adam_iters,
        lbfgs_iters,
        wall_seconds: c.output.timing.then_some(seconds),
        seed: c.seed,
    };
    Ok(RunOutcome { metrics, field, history, net, train, oracle_summary: oracle.summary(), corner_excluded, surface, seconds })
}

/// Writes every artifact of a run into `dir`.
pub fn write_artifacts(outcome: &RunOutcome, config: &ScenarioConfig, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    outcome.field.save_csv(&dir.join("field.csv"))?;
    fs::write(dir.join("metrics.json"), outcome.metrics.to_json()?)?;
    outcome.history.save_csv(&dir.join("loss_history.csv"))?;
    outcome.net.save(&dir.join("checkpoint.bin"))?;
    fs::write(dir.join("config.toml"), config.to_toml_string()?)?;
    if let Some(n) = outcome.corner_excluded {
        let body = serde_json::to_string_pretty(&n).map_err(|e| Error::Io(std::io::Error::other(e)))?;
        fs::write(dir.join("corner_excluded.json"), body + "\n")?;
    }
    if let Some(s) = &outcome.surface {
        s.write_csv(fs::File::create(dir.join("surface.csv"))?)?;
        let body = serde_json::json!({ "amplitude_rel_l2": s.amplitude_error(), "asymmetry": s.asymmetry() });
        fs::write(dir.join("surface_metrics.json"), format!("{body:#}\n"))?;
    }
    if config.output.heatmap {
        let scenario = Scenario::build(config)?;
        write_field_heatmap(&scenario, &outcome.net, &dir.join("heatmap.ppm"))?;
    }
    Ok(())
}

/// Real part of the predicted field on the plane `z = 0`.
pub fn write_field_heatmap(scenario: &Scenario, net: &NetParams, path: &Path) -> Result<()> {
    let pixels = scenario.config.grid.heatmap_pixels;
    let half = outer_extent(&scenario.geometry) + scenario.config.grid.width;
    let values: Vec<Option<f64>> = scenario.predict(net, &image_points(pixels, half))?.into_iter().map(|v| v.map(|z| z.re)).collect();
    write_heatmap(path, pixels, &values)
}

/// Oracle values on the test grid, in the field CSV layout with empty predictions.
pub fn oracle_table(config: &ScenarioConfig) -> Result<(FieldTable, String)> {
    let scenario = Scenario::build(config)?;
    let oracle = scenario.oracle()?;
    let grid = scenario.test_grid();
    let reference = eval_oracle(&oracle, &grid.points)?;
    let pred = vec![Complex64::new(0.0, 0.0); reference.len()];
    Ok((FieldTable { dim: grid.dim, points: grid.points, pred, reference }, oracle.summary()))
}

/// One row of a sweep summary.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub k: f64,
    pub status: String,
    pub metrics: Option<Metrics>,
    pub seconds: f64,
    pub dir: PathBuf,
}

impl SweepRow {
    pub fn ok(&self) -> bool {
        self.status == "ok"
    }
}

/// Independent runs over a list of wavenumbers, each in `root/k_<k>`.
pub fn sweep(config: &ScenarioConfig, ks: &[f64], root: &Path) -> Result<Vec<SweepRow>> {
    if ks.is_empty() {
        return Err(Error::Config("sweep needs at least one wavenumber".into()));
    }
    let mut rows = Vec::with_capacity(ks.len());
    for &k in ks {
        let mut c = config.clone();
        c.physics.k = k;
        let dir = root.join(format!("k_{k}"));
        c.output.dir = dir.clone();
        let start = Instant::now();
        let (status, metrics) = match c.validate().and_then(|_| run_scenario(&c)) {
            Ok(outcome) => {
                let status = if outcome.diverged() { "diverged".to_string() } else { "ok".to_string() };
                match write_artifacts(&outcome, &c, &dir) {
                    Ok(()) => (status, Some(outcome.metrics)),
                    Err(e) => (format!("error: {e}"), Some(outcome.metrics)),
                }
            }
            Err(e) => (format!("error: {e}"), None),
        };
        rows.push(SweepRow { k, status, metrics, seconds: start.elapsed().as_secs_f64(), dir });
    }
    fs::create_dir_all(root)?;
    let mut csv = String::from("k,status,rel_l2_complex,rel_l2_real,final_loss,wall_seconds\n");
    for r in &rows {
        let (rel, rel_re, loss) = r.metrics.as_ref().map_or((f64::NAN, f64::NAN, f64::NAN), |m| (m.rel_l2_complex, m.rel_l2_real, m.final_loss));
        let status = r.status.replace([',', '\n'], ";");
        csv.push_str(&format!("{},{status},{rel:e},{rel_re:e},{loss:e},{:.3}\n", r.k, r.seconds));
    }
    fs::write(root.join("summary.csv"), csv)?;
    Ok(rows)
}
