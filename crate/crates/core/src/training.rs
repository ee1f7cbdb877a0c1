//! Collocation sampling, the residual-only loss and the two-stage optimizer.

use std::collections::VecDeque;
use std::f64::consts::{PI, TAU};
use std::fmt;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ansatz::AnsatzSpec;
use crate::diff::{AffineResidual, CJet, CollocationBatch, RJet, Term, DEFAULT_CHUNK};
use crate::error::{Error, Result};
use crate::mapping::XI_MAX;
use crate::network::{InputEncoding, NetParams};
use crate::residual::{ResidualForm, ResidualSpec, POLE_BAND};

/// Loss above which Adam is considered to have diverged.
pub const DIVERGENCE_LOSS: f64 = 1e12;

/// Fixed collocation points in computational coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub points: Vec<Vec<f64>>,
    pub seed: u64,
}

impl SampleSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Latin hypercube sample: each coordinate has one point in each of the `n` strata.
pub fn latin_hypercube(n: usize, bounds: &[(f64, f64)], seed: u64) -> Result<SampleSet> {
    if n == 0 {
        return Err(Error::Construction("latin hypercube needs at least one point".into()));
    }
    if bounds.iter().any(|&(lo, hi)| !(lo < hi) || !lo.is_finite() || !hi.is_finite()) {
        return Err(Error::Construction(format!("invalid sampling bounds {bounds:?}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = vec![vec![0.0; bounds.len()]; n];
    let mut perm: Vec<usize> = (0..n).collect();
    for (d, &(lo, hi)) in bounds.iter().enumerate() {
        perm.shuffle(&mut rng);
        for (p, &s) in points.iter_mut().zip(&perm) {
            let u: f64 = rng.random();
            p[d] = lo + (hi - lo) * (s as f64 + u) / n as f64;
        }
    }
    Ok(SampleSet { points, seed })
}

/// Sampling box of the computational domain for a residual form.
pub fn domain_bounds(form: ResidualForm) -> Vec<(f64, f64)> {
    let xi = (-1.0, XI_MAX);
    match form {
        ResidualForm::ExplicitPolar | ResidualForm::ChainRuleGeneral => vec![xi, (0.0, TAU)],
        ResidualForm::SphericalAxisym => vec![xi, (POLE_BAND, PI - POLE_BAND)],
        ResidualForm::SphericalFull => vec![xi, (POLE_BAND, PI - POLE_BAND), (0.0, TAU)],
    }
}

/// A hard-constrained field and the PDE it must satisfy.
#[derive(Clone)]
pub struct Problem {
    pub ansatz: AnsatzSpec,
    pub residual: ResidualSpec,
    pub encoding: InputEncoding,
}

impl fmt::Debug for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem")
            .field("ansatz", &self.ansatz.kind)
            .field("geometry", &self.ansatz.geometry.name())
            .field("residual", &self.residual.form)
            .field("encoding", &self.encoding)
            .finish()
    }
}

impl Problem {
    pub fn new(ansatz: AnsatzSpec, residual: ResidualSpec, encoding: InputEncoding) -> Result<Self> {
        if ansatz.coord_count() != residual.form.coord_count() {
            return Err(Error::Dimension { expected: residual.form.coord_count(), got: ansatz.coord_count() });
        }
        Ok(Self { ansatz, residual, encoding })
    }

    pub fn coord_count(&self) -> usize {
        self.ansatz.coord_count()
    }

    pub fn input_dim(&self) -> usize {
        self.encoding.input_dim(self.coord_count())
    }

    fn coord_jets(&self, coords: &[f64]) -> Vec<RJet> {
        let layout = self.ansatz.layout();
        coords.iter().enumerate().map(|(i, &c)| RJet::variable(layout, i, c)).collect()
    }

    /// Network inputs at a point, as jets in the training layout.
    pub fn inputs(&self, coords: &[f64]) -> Vec<RJet> {
        self.encoding.encode(&self.coord_jets(coords))
    }

    /// Loss term of one collocation point.
    pub fn term(&self, coords: &[f64], weight: f64) -> Result<Term> {
        let layout = self.ansatz.layout();
        let prepared = self.ansatz.prepare_in(coords, layout)?;
        let point = self.residual.prepare(coords)?;
        let residual = AffineResidual::probe(layout, |n| Ok(point.apply(&prepared.field(n))))?;
        Ok(Term { inputs: self.inputs(coords), residual, weight })
    }

    /// Mean-squared residual loss over the sample set.
    pub fn batch(&self, samples: &SampleSet) -> Result<CollocationBatch> {
        let w = 1.0 / samples.len() as f64;
        let terms = samples
            .points
            .iter()
            .enumerate()
            .map(|(i, p)| {
                self.term(p, w).map_err(|e| match e {
                    Error::NonFinite { .. } => Error::NonFinite { index: i },
                    e => e,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        CollocationBatch::new(terms, DEFAULT_CHUNK)
    }

    /// Field jets `û` at the given points.
    pub fn field_jets(&self, net: &NetParams, points: &[Vec<f64>]) -> Result<Vec<CJet>> {
        let layout = self.ansatz.layout();
        let inputs: Vec<Vec<RJet>> = points.iter().map(|p| self.inputs(p)).collect();
        let outs = crate::diff::evaluate_outputs(net, &inputs, layout, DEFAULT_CHUNK)?;
        points.iter().zip(&outs).map(|(p, n)| self.ansatz.field(p, n)).collect()
    }

    /// Field values `û` at the given points.
    pub fn field_values(&self, net: &NetParams, points: &[Vec<f64>]) -> Result<Vec<Complex64>> {
        Ok(self.field_jets(net, points)?.iter().map(|j| j.value()).collect())
    }

    /// Fresh network with the architecture's input width and the data scale.
    pub fn init_network(&self, hidden: &[usize], seed: u64) -> Result<NetParams> {
        let mut sizes = vec![self.input_dim()];
        sizes.extend_from_slice(hidden);
        sizes.push(2);
        Ok(NetParams::init(&sizes, seed)?.with_output_scale(self.ansatz.magnitude()))
    }
}

/// A differentiable scalar objective of a flat parameter vector.
pub trait Objective {
    fn value(&mut self, params: &[f64]) -> Result<f64>;
    fn value_grad(&mut self, params: &[f64]) -> Result<(f64, Vec<f64>)>;
}

/// Collocation loss of a network with swappable parameters.
pub struct NetObjective<'a> {
    pub batch: &'a CollocationBatch,
    pub net: NetParams,
}

impl Objective for NetObjective<'_> {
    fn value(&mut self, params: &[f64]) -> Result<f64> {
        self.net.set_params(params);
        self.batch.loss(&self.net)
    }

    fn value_grad(&mut self, params: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.net.set_params(params);
        let lg = self.batch.loss_grad(&self.net)?;
        Ok((lg.loss, lg.grad))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Adam,
    Lbfgs,
}

impl Stage {
    pub fn tag(self) -> &'static str {
        match self {
            Stage::Adam => "adam",
            Stage::Lbfgs => "lbfgs",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistoryRow {
    pub iteration: usize,
    pub stage: Stage,
    pub loss: f64,
}

/// Loss trace over both stages.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct History {
    pub rows: Vec<HistoryRow>,
}

impl History {
    pub fn push(&mut self, stage: Stage, loss: f64) {
        let iteration = self.rows.len();
        self.rows.push(HistoryRow { iteration, stage, loss });
    }

    pub fn last_loss(&self) -> Option<f64> {
        self.rows.last().map(|r| r.loss)
    }

    pub fn count(&self, stage: Stage) -> usize {
        self.rows.iter().filter(|r| r.stage == stage).count()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "iteration,stage,loss")?;
        for r in &self.rows {
            writeln!(w, "{},{},{:e}", r.iteration, r.stage.tag(), r.loss)?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        std::fs::write(path, buf)?;
        Ok(())
    }
}

/// Optimizer settings for both stages.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainSchedule {
    pub adam_iters: usize,
    pub adam_lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub lbfgs_max_iters: usize,
    pub lbfgs_memory: usize,
    pub c1: f64,
    pub c2: f64,
    pub grad_tol: f64,
    pub seed: u64,
}

impl Default for TrainSchedule {
    fn default() -> Self {
        Self {
            adam_iters: 2000,
            adam_lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            lbfgs_max_iters: 3000,
            lbfgs_memory: 50,
            c1: 1e-4,
            c2: 0.9,
            grad_tol: 1e-9,
            seed: 0,
        }
    }
}

impl TrainSchedule {
    pub fn validate(&self) -> Result<()> {
        let ok = self.adam_lr > 0.0
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.eps > 0.0
            && 0.0 < self.c1
            && self.c1 < self.c2
            && self.c2 < 1.0
            && self.lbfgs_memory >= 1
            && self.grad_tol >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid training schedule {self:?}")))
        }
    }
}

/// Adam with bias correction; appends one loss per iteration to `history`.
///
/// Stops with [`Error::Diverged`] when the loss exceeds [`DIVERGENCE_LOSS`]
/// or is not finite; the history up to that point is kept.
pub fn run_adam<O: Objective>(obj: &mut O, params: &mut [f64], s: &TrainSchedule, history: &mut History) -> Result<usize> {
    let n = params.len();
    let (mut m, mut v) = (vec![0.0; n], vec![0.0; n]);
    let (mut b1t, mut b2t) = (1.0, 1.0);
    for it in 0..s.adam_iters {
        let (loss, grad) = match obj.value_grad(params) {
            Ok(lg) => lg,
            Err(Error::NonFinite { .. }) => return Err(Error::Diverged { iteration: it, loss: f64::NAN }),
            Err(e) => return Err(e),
        };
        history.push(Stage::Adam, loss);
        if !(loss <= DIVERGENCE_LOSS) || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::Diverged { iteration: it, loss });
        }
        b1t *= s.beta1;
        b2t *= s.beta2;
        let step = s.adam_lr / (1.0 - b1t);
        let vc = 1.0 / (1.0 - b2t);
        for i in 0..n {
            m[i] = s.beta1 * m[i] + (1.0 - s.beta1) * grad[i];
            v[i] = s.beta2 * v[i] + (1.0 - s.beta2) * grad[i] * grad[i];
            params[i] -= step * m[i] / ((v[i] * vc).sqrt() + s.eps);
        }
    }
    Ok(s.adam_iters)
}

/// Why L-BFGS stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LbfgsStop {
    GradientTolerance,
    IterationCap,
    LineSearchFailure,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LbfgsReport {
    pub iterations: usize,
    pub stop: LbfgsStop,
    pub loss: f64,
    /// Objective evaluations, including the initial one.
    pub evaluations: usize,
    /// `sᵀy` of every pair that entered the memory.
    pub curvature: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(x: &[f64], a: f64, d: &[f64]) -> Vec<f64> {
    x.iter().zip(d).map(|(x, d)| x + a * d).collect()
}

struct LinePoint {
    alpha: f64,
    f: f64,
    g: Vec<f64>,
    dphi: f64,
}

/// Minimizer of the cubic matching values and slopes at `a` and `b`, if it exists.
fn cubic_min(a: &LinePoint, b: &LinePoint) -> Option<f64> {
    let d1 = a.dphi + b.dphi - 3.0 * (a.f - b.f) / (a.alpha - b.alpha);
    let disc = d1 * d1 - a.dphi * b.dphi;
    if !(disc >= 0.0) {
        return None;
    }
    let d2 = (b.alpha - a.alpha).signum() * disc.sqrt();
    let t = b.alpha - (b.alpha - a.alpha) * (b.dphi + d2 - d1) / (b.dphi - a.dphi + 2.0 * d2);
    t.is_finite().then_some(t)
}

struct LineSearch<'a, O: Objective> {
    obj: &'a mut O,
    x: &'a [f64],
    d: &'a [f64],
    f0: f64,
    dphi0: f64,
    c1: f64,
    c2: f64,
    evals: usize,
    /// Lowest Armijo-satisfying point seen.
    best: Option<LinePoint>,
}

const MAX_LINE_EVALS: usize = 30;

impl<O: Objective> LineSearch<'_, O> {
    fn eval(&mut self, alpha: f64) -> Result<LinePoint> {
        self.evals += 1;
        let x = axpy(self.x, alpha, self.d);
        let (f, g) = match self.obj.value_grad(&x) {
            Ok(v) => v,
            Err(Error::NonFinite { .. }) => (f64::INFINITY, vec![f64::NAN; x.len()]),
            Err(e) => return Err(e),
        };
        let f = if f.is_finite() && g.iter().all(|v| v.is_finite()) { f } else { f64::INFINITY };
        let dphi = if f.is_finite() { dot(&g, self.d) } else { f64::NAN };
        Ok(LinePoint { alpha, f, g, dphi })
    }

    fn armijo(&self, p: &LinePoint) -> bool {
        p.f <= self.f0 + self.c1 * p.alpha * self.dphi0
    }

    fn curvature(&self, p: &LinePoint) -> bool {
        p.dphi.abs() <= -self.c2 * self.dphi0
    }

    fn note(&mut self, p: &LinePoint) {
        if self.armijo(p) && p.f < self.f0 && self.best.as_ref().is_none_or(|b| p.f < b.f) {
            self.best = Some(LinePoint { alpha: p.alpha, f: p.f, g: p.g.clone(), dphi: p.dphi });
        }
    }

    /// Strong-Wolfe step length, or `None` when the search fails.
    fn run(&mut self, alpha0: f64) -> Result<Option<LinePoint>> {
        let mut prev = LinePoint { alpha: 0.0, f: self.f0, g: Vec::new(), dphi: self.dphi0 };
        let mut alpha = alpha0;
        let mut first = true;
        while self.evals < MAX_LINE_EVALS {
            let cur = self.eval(alpha)?;
            self.note(&cur);
            if !self.armijo(&cur) || (!first && cur.f >= prev.f) {
                return self.zoom(prev, cur);
            }
            if self.curvature(&cur) {
                return Ok(Some(cur));
            }
            if cur.dphi >= 0.0 {
                return self.zoom(cur, prev);
            }
            let hi = 10.0 * cur.alpha;
            let lo = cur.alpha + 1.1 * (cur.alpha - prev.alpha);
            alpha = cubic_min(&prev, &cur).filter(|t| *t > lo).map_or(2.0 * cur.alpha, |t| t.min(hi)).max(lo.min(hi));
            prev = cur;
            first = false;
        }
        Ok(None)
    }

    fn zoom(&mut self, mut lo: LinePoint, mut hi: LinePoint) -> Result<Option<LinePoint>> {
        while self.evals < MAX_LINE_EVALS {
            let (a, b) = (lo.alpha.min(hi.alpha), lo.alpha.max(hi.alpha));
            let w = b - a;
            if !(w > f64::EPSILON * b.max(1e-300)) {
                return Ok(None);
            }
            let alpha = match (hi.f.is_finite(), cubic_min(&lo, &hi)) {
                (true, Some(t)) if t > a + 0.1 * w && t < b - 0.1 * w => t,
                _ => 0.5 * (a + b),
            };
            let cur = self.eval(alpha)?;
            self.note(&cur);
            if !self.armijo(&cur) || cur.f >= lo.f {
                hi = cur;
            } else {
                if self.curvature(&cur) {
                    return Ok(Some(cur));
                }
                if cur.dphi * (hi.alpha - lo.alpha) >= 0.0 {
                    hi = lo;
                }
                lo = cur;
            }
        }
        Ok(None)
    }
}

/// Limited-memory BFGS with a strong-Wolfe line search.
///
/// Accepted iterates never increase the loss. A failed line search ends the
/// run at the best point found so far instead of raising an error.
pub fn run_lbfgs<O: Objective>(obj: &mut O, params: &mut Vec<f64>, s: &TrainSchedule, history: &mut History) -> Result<LbfgsReport> {
    let (mut f, mut g) = obj.value_grad(params)?;
    if !f.is_finite() {
        return Err(Error::Diverged { iteration: 0, loss: f });
    }
    let mut mem: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(s.lbfgs_memory);
    let mut curvature = Vec::new();
    let inf_norm = |g: &[f64]| g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut iterations = 0;
    let mut evaluations = 1;
    let stop = loop {
        if inf_norm(&g) <= s.grad_tol {
            break LbfgsStop::GradientTolerance;
        }
        if iterations >= s.lbfgs_max_iters {
            break LbfgsStop::IterationCap;
        }
        // two-loop recursion
        let mut q = g.clone();
        let mut alphas = Vec::with_capacity(mem.len());
        for (sv, yv, rho) in mem.iter().rev() {
            let a = rho * dot(sv, &q);
            for (qi, yi) in q.iter_mut().zip(yv) {
                *qi -= a * yi;
            }
            alphas.push(a);
        }
        let gamma = mem.back().map_or(1.0, |(sv, yv, _)| dot(sv, yv) / dot(yv, yv));
        for qi in q.iter_mut() {
            *qi *= gamma;
        }
        for ((sv, yv, rho), a) in mem.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(yv, &q);
            for (qi, si) in q.iter_mut().zip(sv) {
                *qi += (a - b) * si;
            }
        }
        let mut d: Vec<f64> = q.iter().map(|v| -v).collect();
        let mut dphi0 = dot(&g, &d);
        if !(dphi0 < 0.0) {
            mem.clear();
            d = g.iter().map(|v| -v).collect();
            dphi0 = dot(&g, &d);
        }
        let alpha0 = if mem.is_empty() { (1.0 / inf_norm(&g)).min(1.0) } else { 1.0 };
        let mut ls = LineSearch { obj: &mut *obj, x: params, d: &d, f0: f, dphi0, c1: s.c1, c2: s.c2, evals: 0, best: None };
        let found = ls.run(alpha0);
        evaluations += ls.evals;
        let found = found?;
        let (point, wolfe) = match found {
            Some(p) => (p, true),
            None => match ls.best.take() {
                Some(p) => (p, false),
                None => break LbfgsStop::LineSearchFailure,
            },
        };
        let x_new = axpy(params, point.alpha, &d);
        let sv: Vec<f64> = x_new.iter().zip(params.iter()).map(|(a, b)| a - b).collect();
        let yv: Vec<f64> = point.g.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&sv, &yv);
        *params = x_new;
        f = point.f;
        g = point.g;
        iterations += 1;
        history.push(Stage::Lbfgs, f);
        if !wolfe {
            break LbfgsStop::LineSearchFailure;
        }
        if sy > 0.0 {
            if mem.len() == s.lbfgs_memory {
                mem.pop_front();
            }
            curvature.push(sy);
            mem.push_back((sv, yv, 1.0 / sy));
        }
    };
    Ok(LbfgsReport { iterations, stop, loss: f, evaluations, curvature })
}

/// Outcome of a full training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub history: History,
    pub adam_iters: usize,
    pub lbfgs_iters: usize,
    pub lbfgs_evals: usize,
    pub final_loss: f64,
    pub initial_loss: f64,
    pub lbfgs_stop: Option<LbfgsStop>,
    /// Set when Adam diverged; L-BFGS is then skipped.
    pub diverged: Option<(usize, f64)>,
}

/// Adam followed by L-BFGS on a fixed collocation batch, updating `net` in place.
pub fn train(batch: &CollocationBatch, net: &mut NetParams, s: &TrainSchedule) -> Result<TrainReport> {
    s.validate()?;
    let mut history = History::default();
    let mut obj = NetObjective { batch, net: net.clone() };
    let mut params = net.params().to_vec();
    let initial_loss = obj.value(&params)?;
    let mut report = TrainReport {
        history: History::default(),
        adam_iters: 0,
        lbfgs_iters: 0,
        lbfgs_evals: 0,
        final_loss: initial_loss,
        initial_loss,
        lbfgs_stop: None,
        diverged: None,
    };
    match run_adam(&mut obj, &mut params, s, &mut history) {
        Ok(n) => report.adam_iters = n,
        Err(Error::Diverged { iteration, loss }) => {
            report.adam_iters = iteration + 1;
            report.diverged = Some((iteration, loss));
            report.final_loss = loss;
            report.history = history;
            net.set_params(&params);
            return Ok(report);
        }
        Err(e) => return Err(e),
    }
    if s.lbfgs_max_iters > 0 {
        let lb = run_lbfgs(&mut obj, &mut params, s, &mut history)?;
        report.lbfgs_iters = lb.iterations;
        report.lbfgs_evals = lb.evaluations;
        report.lbfgs_stop = Some(lb.stop);
        report.final_loss = lb.loss;
    } else {
        report.final_loss = obj.value(&params)?;
    }
    net.set_params(&params);
    report.history = history;
    Ok(report)
}
