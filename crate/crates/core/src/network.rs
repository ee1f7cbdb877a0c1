//! Fully connected tanh network with two real outputs.
//!
//! Parameters live in one flat vector; layer `l` stores its weight matrix
//! `W_l` (`n_out × n_in`, row-major) followed by its bias `b_l`. A fixed
//! output scale multiplies both outputs so the raw network works at unit
//! amplitude whatever the boundary data amplitude is.

use std::io::{Read, Write};
use std::path::Path;

use ndarray::{Array2, ArrayView2, ArrayViewMut2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::diff::{Layout, RJet};
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"MWNET001";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Tanh,
}

impl Activation {
    fn tag(self) -> u8 {
        match self {
            Activation::Tanh => 0,
        }
    }

    fn from_tag(tag: u8) -> Result<Self> {
        match tag {
            0 => Ok(Activation::Tanh),
            t => Err(Error::Checkpoint(format!("unknown activation tag {t}"))),
        }
    }
}

/// How computational coordinates are fed to the network.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputEncoding {
    /// `(ξ, θ)` → `(ξ, cos θ, sin θ)`.
    Polar,
    /// `(ξ, θ, φ)` → `(ξ, cos θ, sin θ cos φ, sin θ sin φ)`.
    Spherical,
    /// Coordinates passed through unchanged.
    Raw,
}

impl InputEncoding {
    pub fn input_dim(self, coords: usize) -> usize {
        match self {
            InputEncoding::Polar => 3,
            InputEncoding::Spherical => 4,
            InputEncoding::Raw => coords,
        }
    }

    pub fn encode(self, coords: &[RJet]) -> Vec<RJet> {
        match self {
            InputEncoding::Polar => vec![coords[0], coords[1].cos(), coords[1].sin()],
            InputEncoding::Spherical => {
                let st = coords[1].sin();
                vec![coords[0], coords[1].cos(), st * coords[2].cos(), st * coords[2].sin()]
            }
            InputEncoding::Raw => coords.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetParams {
    sizes: Vec<usize>,
    params: Vec<f64>,
    activation: Activation,
    seed: u64,
    output_scale: f64,
}

/// Stored activations of a batched jet forward pass.
#[derive(Debug, Clone)]
pub struct BatchForward {
    /// Pre-activations `Z_l` of every layer, the last one being the raw output.
    pub pre: Vec<Array2<f64>>,
    /// Post-activations `A_l` of the hidden layers.
    pub post: Vec<Array2<f64>>,
}

pub fn param_count(sizes: &[usize]) -> usize {
    sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

impl NetParams {
    /// Glorot-uniform weights and zero biases drawn from a seeded stream.
    pub fn init(sizes: &[usize], seed: u64) -> Result<Self> {
        if sizes.len() < 3 || sizes.iter().any(|&s| s == 0) {
            return Err(Error::Construction(format!("network needs an input, at least one hidden layer and an output, got {sizes:?}")));
        }
        if *sizes.last().unwrap_or(&0) != 2 {
            return Err(Error::Construction("network must have two outputs (real and imaginary part)".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = Vec::with_capacity(param_count(sizes));
        for w in sizes.windows(2) {
            let limit = (6.0 / (w[0] + w[1]) as f64).sqrt();
            for _ in 0..w[0] * w[1] {
                params.push(rng.random_range(-limit..limit));
            }
            params.extend(std::iter::repeat_n(0.0, w[1]));
        }
        Ok(Self { sizes: sizes.to_vec(), params, activation: Activation::Tanh, seed, output_scale: 1.0 })
    }

    pub fn from_parts(sizes: &[usize], params: Vec<f64>, seed: u64) -> Result<Self> {
        let mut net = Self::init(sizes, seed)?;
        if params.len() != net.params.len() {
            return Err(Error::Dimension { expected: net.params.len(), got: params.len() });
        }
        net.params = params;
        Ok(net)
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn set_params(&mut self, p: &[f64]) {
        self.params.copy_from_slice(p);
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn output_scale(&self) -> f64 {
        self.output_scale
    }

    pub fn with_output_scale(mut self, scale: f64) -> Self {
        self.output_scale = scale;
        self
    }

    fn layer_count(&self) -> usize {
        self.sizes.len() - 1
    }

    /// Offsets of the weight matrix and bias vector of layer `l`.
    fn offsets(&self, l: usize) -> (usize, usize) {
        let start = param_count(&self.sizes[..=l]);
        (start, start + self.sizes[l] * self.sizes[l + 1])
    }

    fn weights(&self, l: usize) -> ArrayView2<'_, f64> {
        let (w, b) = self.offsets(l);
        ArrayView2::from_shape((self.sizes[l + 1], self.sizes[l]), &self.params[w..b]).expect("layer shape")
    }

    fn bias(&self, l: usize) -> &[f64] {
        let (_, b) = self.offsets(l);
        &self.params[b..b + self.sizes[l + 1]]
    }

    fn check_inputs(&self, n: usize) -> Result<()> {
        if n != self.input_dim() {
            return Err(Error::Dimension { expected: self.input_dim(), got: n });
        }
        Ok(())
    }

    /// Plain forward pass at one input.
    pub fn forward(&self, input: &[f64]) -> Result<[f64; 2]> {
        self.check_inputs(input.len())?;
        let mut a = input.to_vec();
        for l in 0..self.layer_count() {
            let w = self.weights(l);
            let b = self.bias(l);
            let mut z: Vec<f64> = (0..self.sizes[l + 1]).map(|j| b[j] + w.row(j).iter().zip(&a).map(|(x, y)| x * y).sum::<f64>()).collect();
            if l + 1 < self.layer_count() {
                z.iter_mut().for_each(|v| *v = v.tanh());
            }
            a = z;
        }
        Ok([a[0] * self.output_scale, a[1] * self.output_scale])
    }

    /// Forward pass carrying coordinate jets; returns the two output channels.
    pub fn forward_jet(&self, input: &[RJet]) -> Result<[RJet; 2]> {
        self.check_inputs(input.len())?;
        let layout = input[0].layout();
        let mut a = input.to_vec();
        for l in 0..self.layer_count() {
            let w = self.weights(l);
            let b = self.bias(l);
            let mut z = Vec::with_capacity(self.sizes[l + 1]);
            for j in 0..self.sizes[l + 1] {
                let mut acc = RJet::constant(layout, b[j]);
                for (wi, ai) in w.row(j).iter().zip(&a) {
                    acc += ai.scale(*wi);
                }
                z.push(if l + 1 < self.layer_count() { acc.tanh() } else { acc });
            }
            a = z;
        }
        Ok([a[0].scale(self.output_scale), a[1].scale(self.output_scale)])
    }

    /// Batched jet forward pass.
    ///
    /// `inputs` has one row per input feature and `C × points` columns laid
    /// out component-major: column `c·B + b` holds Taylor coefficient `c` of
    /// point `b` (see [`pack_inputs`]).
    pub fn forward_batch(&self, inputs: ArrayView2<'_, f64>, layout: &Layout) -> Result<BatchForward> {
        self.check_inputs(inputs.nrows())?;
        let points = inputs.ncols() / layout.len();
        let mut pre = Vec::with_capacity(self.layer_count());
        let mut post: Vec<Array2<f64>> = Vec::with_capacity(self.layer_count() - 1);
        for l in 0..self.layer_count() {
            let prev = if l == 0 { inputs } else { post[l - 1].view() };
            let mut z = self.weights(l).dot(&prev);
            add_bias(&mut z.view_mut(), self.bias(l), points);
            if l + 1 < self.layer_count() {
                post.push(tanh_jets(&z, layout));
            }
            pre.push(z);
        }
        Ok(BatchForward { pre, post })
    }

    /// Scaled network outputs of a batched forward pass, `(2, C × points)`.
    pub fn batch_outputs(&self, fwd: &BatchForward) -> Array2<f64> {
        fwd.pre.last().expect("output layer").mapv(|v| v * self.output_scale)
    }

    /// Parameter gradient for the output adjoint `adj_out` (shape of the outputs).
    pub fn backward_batch(&self, inputs: ArrayView2<'_, f64>, fwd: &BatchForward, layout: &Layout, adj_out: &Array2<f64>) -> Vec<f64> {
        let points = adj_out.ncols() / layout.len();
        let mut grad = vec![0.0; self.params.len()];
        let mut adj = adj_out.mapv(|v| v * self.output_scale);
        for l in (0..self.layer_count()).rev() {
            let prev = if l == 0 { inputs } else { fwd.post[l - 1].view() };
            let dw = adj.dot(&prev.t());
            let (wo, bo) = self.offsets(l);
            for (dst, src) in grad[wo..bo].iter_mut().zip(dw.iter()) {
                *dst = *src;
            }
            let nb = self.sizes[l + 1];
            for j in 0..nb {
                let row = adj.row(j);
                grad[bo + j] = row.as_slice().expect("row-major activations")[..points].iter().sum();
            }
            if l > 0 {
                let adj_a = self.weights(l).t().dot(&adj);
                adj = tanh_jets_vjp(&fwd.pre[l - 1], &fwd.post[l - 1], &adj_a, layout);
            }
        }
        grad
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::with_capacity(64 + 8 * self.params.len());
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&(self.sizes.len() as u32).to_le_bytes());
        for &s in &self.sizes {
            buf.extend_from_slice(&(s as u64).to_le_bytes());
        }
        buf.push(self.activation.tag());
        buf.extend_from_slice(&self.seed.to_le_bytes());
        buf.extend_from_slice(&self.output_scale.to_le_bytes());
        buf.extend_from_slice(&(self.params.len() as u64).to_le_bytes());
        for v in &self.params {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        let mut f = std::fs::File::create(path)?;
        f.write_all(&buf)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        let mut cur = Cursor { bytes: &bytes, pos: 0 };
        if cur.take(8)? != MAGIC {
            return Err(Error::Checkpoint("bad magic; not a network checkpoint".into()));
        }
        let n = cur.u32()? as usize;
        if !(3..=64).contains(&n) {
            return Err(Error::Checkpoint(format!("implausible layer count {n}")));
        }
        let mut sizes = Vec::with_capacity(n);
        for _ in 0..n {
            sizes.push(cur.u64()? as usize);
        }
        let activation = Activation::from_tag(cur.take(1)?[0])?;
        let seed = cur.u64()?;
        let output_scale = cur.f64()?;
        let count = cur.u64()? as usize;
        if count != param_count(&sizes) {
            return Err(Error::Checkpoint(format!("parameter count {count} does not match layer sizes {sizes:?}")));
        }
        let mut params = Vec::with_capacity(count);
        for _ in 0..count {
            params.push(cur.f64()?);
        }
        if cur.pos != bytes.len() {
            return Err(Error::Checkpoint("trailing bytes after parameters".into()));
        }
        if params.iter().any(|v| !v.is_finite()) {
            return Err(Error::Checkpoint("non-finite parameter".into()));
        }
        Ok(Self { sizes, params, activation, seed, output_scale })
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::Checkpoint("truncated checkpoint".into()));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

fn add_bias(z: &mut ArrayViewMut2<'_, f64>, bias: &[f64], points: usize) {
    for (j, mut row) in z.rows_mut().into_iter().enumerate() {
        let s = row.as_slice_mut().expect("row-major activations");
        for v in &mut s[..points] {
            *v += bias[j];
        }
    }
}

/// `tanh` applied to every jet of a component-major activation matrix.
fn tanh_jets(z: &Array2<f64>, layout: &Layout) -> Array2<f64> {
    let c = layout.len();
    let points = z.ncols() / c;
    let mut out = Array2::zeros(z.raw_dim());
    let mut f1 = vec![0.0; points];
    let mut h2 = vec![0.0; points];
    let mut h3 = vec![0.0; points];
    for (zr, mut or) in z.rows().into_iter().zip(out.rows_mut()) {
        let zs = zr.as_slice().expect("row-major activations");
        let os = or.as_slice_mut().expect("row-major activations");
        let comp = |k: usize| &zs[k * points..(k + 1) * points];
        for (o, v) in os[..points].iter_mut().zip(comp(0)) {
            *o = v.tanh();
        }
        if c == 1 {
            continue;
        }
        let (t, rest) = os.split_at_mut(points);
        for p in 0..points {
            let tp = t[p];
            let d1 = 1.0 - tp * tp;
            let d2 = -2.0 * tp * d1;
            f1[p] = d1;
            h2[p] = 0.5 * d2;
            h3[p] = -2.0 * (d1 * d1 + tp * d2) / 6.0;
        }
        for k in 1..c {
            let o = &mut rest[(k - 1) * points..k * points];
            for ((o, a), zk) in o.iter_mut().zip(&f1).zip(comp(k)) {
                *o = a * zk;
            }
        }
        for &(i, j, k, m) in layout.symmetric_quadratic() {
            let o = &mut rest[(k - 1) * points..k * points];
            for (((o, h), zi), zj) in o.iter_mut().zip(&h2).zip(comp(i)).zip(comp(j)) {
                *o += m * h * zi * zj;
            }
        }
        for &(i, j, l, k, m) in layout.symmetric_cubic() {
            let o = &mut rest[(k - 1) * points..k * points];
            for ((((o, h), zi), zj), zl) in o.iter_mut().zip(&h3).zip(comp(i)).zip(comp(j)).zip(comp(l)) {
                *o += m * h * zi * zj * zl;
            }
        }
    }
    out
}

/// Adjoint of [`tanh_jets`]: maps `∂L/∂A` to `∂L/∂Z`, given `Z` and `A = tanh(Z)`.
fn tanh_jets_vjp(z: &Array2<f64>, a: &Array2<f64>, adj_a: &Array2<f64>, layout: &Layout) -> Array2<f64> {
    let c = layout.len();
    let order = layout.order();
    let points = z.ncols() / c;
    let mut out = Array2::zeros(z.raw_dim());
    let mut d = vec![[0.0f64; 5]; points];
    for (((zr, tr), ar), mut or) in z.rows().into_iter().zip(a.rows()).zip(adj_a.rows()).zip(out.rows_mut()) {
        let zs = zr.as_slice().expect("row-major activations");
        let ts = tr.as_slice().expect("row-major activations");
        let adj = ar.as_slice().expect("row-major activations");
        let os = or.as_slice_mut().expect("row-major activations");
        let comp = |k: usize| &zs[k * points..(k + 1) * points];
        let acomp = |k: usize| &adj[k * points..(k + 1) * points];
        for (dp, t) in d.iter_mut().zip(&ts[..points]) {
            let d1 = 1.0 - t * t;
            let d2 = -2.0 * t * d1;
            let d3 = -2.0 * (d1 * d1 + t * d2);
            let d4 = -2.0 * (3.0 * d1 * d2 + t * d3);
            *dp = [d1, d2, d3, d4, 0.0];
        }
        let (v, rest) = os.split_at_mut(points);
        // adjoint through the value-dependent coefficients
        for ((o, dp), a0) in v.iter_mut().zip(&d).zip(acomp(0)) {
            *o = dp[0] * a0;
        }
        for k in 1..c {
            let o = &mut rest[(k - 1) * points..k * points];
            for ((((o, dp), ak), zk), vo) in o.iter_mut().zip(&d).zip(acomp(k)).zip(comp(k)).zip(v.iter_mut()) {
                *o = dp[0] * ak;
                *vo += dp[1] * ak * zk;
            }
        }
        if order >= 2 {
            for &(i, j, k, m) in layout.symmetric_quadratic() {
                for p in 0..points {
                    let ak = adj[k * points + p];
                    let zi = zs[i * points + p];
                    let zj = zs[j * points + p];
                    let w = m * 0.5 * d[p][1] * ak;
                    rest[(i - 1) * points + p] += w * zj;
                    rest[(j - 1) * points + p] += w * zi;
                    v[p] += m * 0.5 * d[p][2] * ak * zi * zj;
                }
            }
        }
        if order >= 3 {
            for &(i, j, l, k, m) in layout.symmetric_cubic() {
                for p in 0..points {
                    let ak = adj[k * points + p];
                    let zi = zs[i * points + p];
                    let zj = zs[j * points + p];
                    let zl = zs[l * points + p];
                    let w = m * d[p][2] / 6.0 * ak;
                    rest[(i - 1) * points + p] += w * zj * zl;
                    rest[(j - 1) * points + p] += w * zi * zl;
                    rest[(l - 1) * points + p] += w * zi * zj;
                    v[p] += m * d[p][3] / 6.0 * ak * zi * zj * zl;
                }
            }
        }
    }
    out
}

/// Packs per-point input jets into the column layout used by [`NetParams::forward_batch`].
pub fn pack_inputs(points: &[Vec<RJet>], layout: &Layout) -> Array2<f64> {
    let n_in = points.first().map_or(0, Vec::len);
    let n = points.len();
    let mut out = Array2::zeros((n_in, n * layout.len()));
    for (b, p) in points.iter().enumerate() {
        for (i, jet) in p.iter().enumerate() {
            for (k, v) in jet.coeffs().iter().enumerate() {
                out[[i, k * n + b]] = *v;
            }
        }
    }
    out
}

/// Complex output jet of point `b` from a `(2, C × points)` output matrix.
pub fn output_jet(out: &Array2<f64>, layout: &'static Layout, b: usize) -> crate::diff::CJet {
    let points = out.ncols() / layout.len();
    let coeffs: Vec<num_complex::Complex64> =
        (0..layout.len()).map(|k| num_complex::Complex64::new(out[[0, k * points + b]], out[[1, k * points + b]])).collect();
    crate::diff::CJet::from_coeffs(layout, &coeffs)
}
