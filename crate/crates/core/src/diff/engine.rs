//! Exact loss and parameter gradients over a fixed collocation set.
//!
//! Every residual used here is affine in the network output jet `N`:
//! `R = R₀ + Σ_β c_β N_β`, where `N_β` are the Taylor coefficients of the
//! complex network output. The affine coefficients are obtained once per
//! point by evaluating the residual on the constant jet and on each unit
//! jet, so training only has to push jets through the network and pull the
//! output adjoint `∂L/∂N_β` back through it.

use ndarray::{Array2, ArrayView2};
use num_complex::Complex64;
use rayon::prelude::*;

use super::{CJet, Layout, RJet};
use crate::error::{Error, Result};
use crate::network::{output_jet, pack_inputs, NetParams};

/// Default number of points per work chunk.
pub const DEFAULT_CHUNK: usize = 256;

/// Residual of one point as an affine function of the network output jet.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineResidual {
    pub r0: Complex64,
    pub coeffs: Vec<Complex64>,
}

impl AffineResidual {
    /// Extracts the affine form of `f` by probing it with unit jets.
    ///
    /// `f` must be affine in its argument; this holds for every ansatz and
    /// residual in the crate because the network output enters linearly.
    pub fn probe<F>(layout: &'static Layout, f: F) -> Result<Self>
    where
        F: Fn(&CJet) -> Result<Complex64>,
    {
        let r0 = f(&CJet::zero(layout))?;
        let mut coeffs = Vec::with_capacity(layout.len());
        let mut unit = vec![Complex64::new(0.0, 0.0); layout.len()];
        for k in 0..layout.len() {
            unit[k] = Complex64::new(1.0, 0.0);
            coeffs.push(f(&CJet::from_coeffs(layout, &unit))? - r0);
            unit[k] = Complex64::new(0.0, 0.0);
        }
        Ok(Self { r0, coeffs })
    }

    pub fn eval(&self, n: &[Complex64]) -> Complex64 {
        self.coeffs.iter().zip(n).fold(self.r0, |acc, (c, v)| acc + c * v)
    }

    pub fn is_finite(&self) -> bool {
        let fin = |z: &Complex64| z.re.is_finite() && z.im.is_finite();
        fin(&self.r0) && self.coeffs.iter().all(fin)
    }
}

/// One weighted loss contribution: network inputs plus the residual form.
#[derive(Debug, Clone)]
pub struct Term {
    pub inputs: Vec<RJet>,
    pub residual: AffineResidual,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossGrad {
    pub loss: f64,
    pub grad: Vec<f64>,
}

#[derive(Debug, Clone)]
struct Chunk {
    offset: usize,
    inputs: Array2<f64>,
    r0: Vec<Complex64>,
    /// `len × C` coefficients, row-major.
    coeffs: Vec<Complex64>,
    weights: Vec<f64>,
}

/// A fixed set of loss terms, pre-packed for batched evaluation.
#[derive(Debug, Clone)]
pub struct CollocationBatch {
    layout: &'static Layout,
    n_inputs: usize,
    len: usize,
    chunks: Vec<Chunk>,
}

impl CollocationBatch {
    pub fn new(terms: Vec<Term>, chunk_size: usize) -> Result<Self> {
        let first = terms.first().ok_or_else(|| Error::Construction("empty collocation set".into()))?;
        let layout = first.inputs[0].layout();
        let n_inputs = first.inputs.len();
        let c = layout.len();
        for (i, t) in terms.iter().enumerate() {
            if t.inputs.len() != n_inputs {
                return Err(Error::Dimension { expected: n_inputs, got: t.inputs.len() });
            }
            if t.inputs.iter().any(|j| !std::ptr::eq(j.layout(), layout)) || t.residual.coeffs.len() != c {
                return Err(Error::Construction(format!("term {i} uses a different jet layout")));
            }
            if !t.residual.is_finite() || !t.weight.is_finite() || t.weight < 0.0 {
                return Err(Error::NonFinite { index: i });
            }
        }
        let len = terms.len();
        let chunk_size = chunk_size.max(1);
        let mut chunks = Vec::with_capacity(len.div_ceil(chunk_size));
        for (ci, group) in terms.chunks(chunk_size).enumerate() {
            let inputs: Vec<Vec<RJet>> = group.iter().map(|t| t.inputs.clone()).collect();
            chunks.push(Chunk {
                offset: ci * chunk_size,
                inputs: pack_inputs(&inputs, layout),
                r0: group.iter().map(|t| t.residual.r0).collect(),
                coeffs: group.iter().flat_map(|t| t.residual.coeffs.iter().copied()).collect(),
                weights: group.iter().map(|t| t.weight).collect(),
            });
        }
        Ok(Self { layout, n_inputs, len, chunks })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn layout(&self) -> &'static Layout {
        self.layout
    }

    pub fn n_inputs(&self) -> usize {
        self.n_inputs
    }

    fn chunk_residuals(&self, chunk: &Chunk, out: &Array2<f64>) -> Result<Vec<Complex64>> {
        let c = self.layout.len();
        let nb = chunk.r0.len();
        let (re, im) = (out.row(0), out.row(1));
        let mut res = Vec::with_capacity(nb);
        for b in 0..nb {
            let mut r = chunk.r0[b];
            for k in 0..c {
                let n = Complex64::new(re[k * nb + b], im[k * nb + b]);
                r += chunk.coeffs[b * c + k] * n;
            }
            if !(r.re.is_finite() && r.im.is_finite()) {
                return Err(Error::NonFinite { index: chunk.offset + b });
            }
            res.push(r);
        }
        Ok(res)
    }

    /// Residual of every term, in term order.
    pub fn residuals(&self, net: &NetParams) -> Result<Vec<Complex64>> {
        let parts: Vec<Result<Vec<Complex64>>> = self
            .chunks
            .par_iter()
            .map(|chunk| {
                let fwd = net.forward_batch(chunk.inputs.view(), self.layout)?;
                self.chunk_residuals(chunk, &net.batch_outputs(&fwd))
            })
            .collect();
        let mut out = Vec::with_capacity(self.len);
        for p in parts {
            out.extend(p?);
        }
        Ok(out)
    }

    /// Weighted sum of squared residual magnitudes.
    pub fn loss(&self, net: &NetParams) -> Result<f64> {
        let parts: Vec<Result<f64>> = self
            .chunks
            .par_iter()
            .map(|chunk| {
                let fwd = net.forward_batch(chunk.inputs.view(), self.layout)?;
                let res = self.chunk_residuals(chunk, &net.batch_outputs(&fwd))?;
                Ok(pairwise_sum(&res.iter().zip(&chunk.weights).map(|(r, w)| w * r.norm_sqr()).collect::<Vec<_>>()))
            })
            .collect();
        let sums = parts.into_iter().collect::<Result<Vec<f64>>>()?;
        Ok(pairwise_sum(&sums))
    }

    /// Loss and its exact gradient with respect to every network parameter.
    pub fn loss_grad(&self, net: &NetParams) -> Result<LossGrad> {
        let parts: Vec<Result<LossGrad>> = self.chunks.par_iter().map(|chunk| self.chunk_loss_grad(net, chunk)).collect();
        let parts = parts.into_iter().collect::<Result<Vec<LossGrad>>>()?;
        Ok(pairwise_reduce(parts))
    }

    fn chunk_loss_grad(&self, net: &NetParams, chunk: &Chunk) -> Result<LossGrad> {
        let c = self.layout.len();
        let fwd = net.forward_batch(chunk.inputs.view(), self.layout)?;
        let res = self.chunk_residuals(chunk, &net.batch_outputs(&fwd))?;
        let nb = res.len();
        let mut adj = Array2::zeros((2, nb * c));
        let mut losses = Vec::with_capacity(res.len());
        for (b, (r, w)) in res.iter().zip(&chunk.weights).enumerate() {
            losses.push(w * r.norm_sqr());
            let rc = r.conj();
            for k in 0..c {
                // ∂|R|²/∂Re N = 2 Re(R̄ c),  ∂|R|²/∂Im N = −2 Im(R̄ c)
                let g = rc * chunk.coeffs[b * c + k];
                adj[[0, k * nb + b]] = 2.0 * w * g.re;
                adj[[1, k * nb + b]] = -2.0 * w * g.im;
            }
        }
        let grad = net.backward_batch(chunk.inputs.view(), &fwd, self.layout, &adj);
        Ok(LossGrad { loss: pairwise_sum(&losses), grad })
    }

    /// Raw network output jets for all terms, in term order.
    pub fn network_outputs(&self, net: &NetParams) -> Result<Vec<CJet>> {
        let mut out = Vec::with_capacity(self.len);
        for chunk in &self.chunks {
            let fwd = net.forward_batch(chunk.inputs.view(), self.layout)?;
            let o = net.batch_outputs(&fwd);
            out.extend((0..chunk.r0.len()).map(|b| output_jet(&o, self.layout, b)));
        }
        Ok(out)
    }
}

/// Batched network outputs for arbitrary per-point inputs (no gradients).
pub fn evaluate_outputs(net: &NetParams, inputs: &[Vec<RJet>], layout: &'static Layout, chunk_size: usize) -> Result<Vec<CJet>> {
    let parts: Vec<Result<Vec<CJet>>> = inputs
        .par_chunks(chunk_size.max(1))
        .map(|group| {
            let x = pack_inputs(group, layout);
            let fwd = net.forward_batch(ArrayView2::from(&x), layout)?;
            let o = net.batch_outputs(&fwd);
            Ok((0..group.len()).map(|b| output_jet(&o, layout, b)).collect())
        })
        .collect();
    let mut out = Vec::with_capacity(inputs.len());
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}

/// Sum in a fixed binary-tree order, independent of how work was scheduled.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    match v.len() {
        0 => 0.0,
        1 => v[0],
        n if n <= 8 => v.iter().sum(),
        n => pairwise_sum(&v[..n / 2]) + pairwise_sum(&v[n / 2..]),
    }
}

fn pairwise_reduce(mut parts: Vec<LossGrad>) -> LossGrad {
    while parts.len() > 1 {
        let mut next = Vec::with_capacity(parts.len().div_ceil(2));
        let mut it = parts.into_iter();
        while let Some(mut a) = it.next() {
            if let Some(b) = it.next() {
                a.loss += b.loss;
                for (x, y) in a.grad.iter_mut().zip(&b.grad) {
                    *x += y;
                }
            }
            next.push(a);
        }
        parts = next;
    }
    parts.pop().unwrap_or(LossGrad { loss: 0.0, grad: Vec::new() })
}
