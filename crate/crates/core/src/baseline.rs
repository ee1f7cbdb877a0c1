//! Soft-constraint PINN on a truncated annulus, the comparator for the
//! mapped hard-constrained model. It shares the network, the collocation
//! engine and the optimizers; only the field (the raw network output) and
//! the loss terms differ.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::diff::{AffineResidual, CJet, CollocationBatch, Layout, RJet, Term, DEFAULT_CHUNK};
use crate::error::{Error, Result};
use crate::geometry::DirichletData;
use crate::network::NetParams;
use crate::training::{latin_hypercube, train, TrainReport, TrainSchedule};

/// Penalty weights, truncation radius and point counts of the composite loss.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftLossSpec {
    pub lambda_pde: f64,
    pub lambda_bc: f64,
    pub lambda_rad: f64,
    pub r_out: f64,
    pub n_interior: usize,
    pub n_boundary: usize,
    pub n_outer: usize,
}

impl SoftLossSpec {
    /// Equal weights and `R_out = 6` with a tenth of the interior count on each circle.
    pub fn with_points(n_interior: usize) -> Self {
        let nb = (n_interior / 10).max(64);
        Self { lambda_pde: 1.0, lambda_bc: 1.0, lambda_rad: 1.0, r_out: 6.0, n_interior, n_boundary: nb, n_outer: nb }
    }

    pub fn validate(&self, r_b: f64) -> Result<()> {
        let weights_ok = [self.lambda_pde, self.lambda_bc, self.lambda_rad].iter().all(|w| w.is_finite() && *w >= 0.0);
        if !weights_ok || !(self.r_out > r_b) || self.n_interior == 0 || self.n_boundary == 0 || self.n_outer == 0 {
            return Err(Error::Config(format!("invalid soft loss settings {self:?} for r_b = {r_b}")));
        }
        Ok(())
    }
}

/// Which part of the composite loss a term belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TermKind {
    Pde,
    Boundary,
    Radiation,
}

/// Soft-constraint problem for a circular scatterer of radius `r_b`.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineProblem {
    pub k: f64,
    pub r_b: f64,
    pub data: DirichletData,
    pub loss: SoftLossSpec,
}

/// Losses of the three terms, unweighted means.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossParts {
    pub pde: f64,
    pub boundary: f64,
    pub radiation: f64,
}

impl BaselineProblem {
    pub fn new(k: f64, r_b: f64, data: DirichletData, loss: SoftLossSpec) -> Result<Self> {
        if !(k > 0.0 && r_b > 0.0) {
            return Err(Error::Config(format!("baseline needs k > 0 and r_b > 0, got k={k}, r_b={r_b}")));
        }
        loss.validate(r_b)?;
        Ok(Self { k, r_b, data, loss })
    }

    pub fn layout() -> &'static Layout {
        Layout::get(2, 2)
    }

    /// Network inputs: `(r, θ)` scaled linearly to `[−1, 1]`, as jets in `(r, θ)`.
    pub fn inputs(&self, r: f64, theta: f64) -> Vec<RJet> {
        let l = Self::layout();
        let span = self.loss.r_out - self.r_b;
        vec![
            RJet::variable(l, 0, r).add_scalar(-self.r_b).scale(2.0 / span).add_scalar(-1.0),
            RJet::variable(l, 1, theta).scale(1.0 / PI).add_scalar(-1.0),
        ]
    }

    /// Residual of one term as a function of the field jet in `(r, θ)`.
    pub fn residual(&self, kind: TermKind, r: f64, theta: f64, u: &CJet) -> Complex64 {
        match kind {
            TermKind::Pde => u.d2(0, 0) + u.d(0) / r + u.d2(1, 1) / (r * r) + u.value() * (self.k * self.k),
            TermKind::Boundary => u.value() - self.data.value(&[r * theta.cos(), r * theta.sin()]),
            TermKind::Radiation => u.d(0) + u.value() * Complex64::new(1.0 / (2.0 * r), -self.k),
        }
    }

    /// Collocation points of every term, seeded.
    pub fn points(&self, seed: u64) -> Result<Vec<(TermKind, f64, f64)>> {
        let s = &self.loss;
        let interior = latin_hypercube(s.n_interior, &[(self.r_b, s.r_out), (0.0, TAU)], seed)?;
        let mut pts: Vec<(TermKind, f64, f64)> = interior.points.iter().map(|p| (TermKind::Pde, p[0], p[1])).collect();
        pts.extend((0..s.n_boundary).map(|i| (TermKind::Boundary, self.r_b, TAU * (i as f64 + 0.5) / s.n_boundary as f64)));
        pts.extend((0..s.n_outer).map(|i| (TermKind::Radiation, s.r_out, TAU * (i as f64 + 0.5) / s.n_outer as f64)));
        Ok(pts)
    }

    fn weight(&self, kind: TermKind) -> f64 {
        let s = &self.loss;
        match kind {
            TermKind::Pde => s.lambda_pde / s.n_interior as f64,
            TermKind::Boundary => s.lambda_bc / s.n_boundary as f64,
            TermKind::Radiation => s.lambda_rad / s.n_outer as f64,
        }
    }

    pub fn term(&self, kind: TermKind, r: f64, theta: f64) -> Result<Term> {
        let residual = AffineResidual::probe(Self::layout(), |u| Ok(self.residual(kind, r, theta, u)))?;
        Ok(Term { inputs: self.inputs(r, theta), residual, weight: self.weight(kind) })
    }

    /// The composite soft loss as a collocation batch.
    pub fn batch(&self, seed: u64) -> Result<CollocationBatch> {
        let terms = self.points(seed)?.into_iter().map(|(kind, r, t)| self.term(kind, r, t)).collect::<Result<Vec<_>>>()?;
        CollocationBatch::new(terms, DEFAULT_CHUNK)
    }

    /// Unweighted term means for an arbitrary field given as jets in `(r, θ)`.
    pub fn loss_parts<F: Fn(f64, f64) -> CJet>(&self, seed: u64, field: F) -> Result<LossParts> {
        let (mut sums, mut counts) = ([0.0; 3], [0usize; 3]);
        for (kind, r, t) in self.points(seed)? {
            let i = kind as usize;
            sums[i] += self.residual(kind, r, t, &field(r, t)).norm_sqr();
            counts[i] += 1;
        }
        Ok(LossParts { pde: sums[0] / counts[0] as f64, boundary: sums[1] / counts[1] as f64, radiation: sums[2] / counts[2] as f64 })
    }

    /// Weighted composite loss of an arbitrary field.
    pub fn soft_loss<F: Fn(f64, f64) -> CJet>(&self, seed: u64, field: F) -> Result<f64> {
        let p = self.loss_parts(seed, field)?;
        Ok(self.loss.lambda_pde * p.pde + self.loss.lambda_bc * p.boundary + self.loss.lambda_rad * p.radiation)
    }

    pub fn init_network(&self, hidden: &[usize], seed: u64) -> Result<NetParams> {
        let mut sizes = vec![2];
        sizes.extend_from_slice(hidden);
        sizes.push(2);
        Ok(NetParams::init(&sizes, seed)?.with_output_scale(self.data.magnitude()))
    }

    /// Predicted field at physical polar points `(r, θ)`.
    pub fn field_values(&self, net: &NetParams, points: &[(f64, f64)]) -> Result<Vec<Complex64>> {
        let inputs: Vec<Vec<RJet>> = points.iter().map(|&(r, t)| self.inputs(r, t)).collect();
        let outs = crate::diff::evaluate_outputs(net, &inputs, Self::layout(), DEFAULT_CHUNK)?;
        Ok(outs.iter().map(|o| o.value()).collect())
    }
}

/// Trained baseline; divergence is an outcome, not an error.
#[derive(Debug, Clone)]
pub struct BaselineRun {
    pub net: NetParams,
    pub report: TrainReport,
}

impl BaselineRun {
    pub fn diverged(&self) -> bool {
        self.report.diverged.is_some() || !self.report.final_loss.is_finite()
    }
}

pub fn run_baseline(problem: &BaselineProblem, hidden: &[usize], net_seed: u64, sample_seed: u64, schedule: &TrainSchedule) -> Result<BaselineRun> {
    let batch = problem.batch(sample_seed)?;
    let mut net = problem.init_network(hidden, net_seed)?;
    let report = train(&batch, &mut net, schedule)?;
    Ok(BaselineRun { net, report })
}
