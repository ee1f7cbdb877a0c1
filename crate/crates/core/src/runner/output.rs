//! Run artifacts: field CSV, metrics JSON, PPM heatmaps.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Error norms of a prediction against a reference over a grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorNorms {
    pub rel_l2_complex: f64,
    pub rel_l2_real: f64,
    pub max_abs_err: f64,
}

/// `‖û − u‖₂/‖u‖₂` for the complex field and the real part, and `max |û − u|`.
pub fn error_norms(pred: &[Complex64], reference: &[Complex64]) -> ErrorNorms {
    let (mut num, mut den, mut num_re, mut den_re, mut max_abs) = (0.0, 0.0, 0.0, 0.0, 0.0f64);
    for (p, r) in pred.iter().zip(reference) {
        let (dre, dim) = (p.re - r.re, p.im - r.im);
        num += dre * dre + dim * dim;
        den += r.re * r.re + r.im * r.im;
        num_re += dre * dre;
        den_re += r.re * r.re;
        let abs = dre.hypot(dim);
        if abs > max_abs || abs.is_nan() {
            max_abs = abs;
        }
    }
    ErrorNorms { rel_l2_complex: (num / den).sqrt(), rel_l2_real: (num_re / den_re).sqrt(), max_abs_err: max_abs }
}

/// Contents of metrics.json; the key set and order are fixed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub scenario: String,
    pub k: f64,
    pub rel_l2_complex: f64,
    pub rel_l2_real: f64,
    pub max_abs_err: f64,
    pub final_loss: f64,
    pub adam_iters: usize,
    pub lbfgs_iters: usize,
    pub wall_seconds: Option<f64>,
    pub seed: u64,
}

impl Metrics {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self).map_err(|e| Error::Io(std::io::Error::other(e)))?;
        s.push('\n');
        Ok(s)
    }
}

/// Field samples at physical points.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldTable {
    pub dim: usize,
    pub points: Vec<[f64; 3]>,
    pub pred: Vec<Complex64>,
    pub reference: Vec<Complex64>,
}

impl FieldTable {
    pub fn norms(&self) -> ErrorNorms {
        error_norms(&self.pred, &self.reference)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> std::io::Result<()> {
        let mut w = BufWriter::new(w);
        let coords = if self.dim == 2 { "x,y" } else { "x,y,z" };
        writeln!(w, "{coords},re_pred,im_pred,re_ref,im_ref,abs_err")?;
        for ((x, p), r) in self.points.iter().zip(&self.pred).zip(&self.reference) {
            if self.dim == 2 {
                write!(w, "{:e},{:e}", x[0], x[1])?;
            } else {
                write!(w, "{:e},{:e},{:e}", x[0], x[1], x[2])?;
            }
            writeln!(w, ",{:e},{:e},{:e},{:e},{:e}", p.re, p.im, r.re, r.im, (p - r).norm())?;
        }
        w.flush()
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        self.write_csv(fs::File::create(path)?)?;
        Ok(())
    }

    /// Reads a table written by [`FieldTable::write_csv`].
    pub fn read_csv(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::Config(format!("{} is empty", path.display())))?;
        let dim = if header.starts_with("x,y,z,") { 3 } else { 2 };
        let mut table = FieldTable { dim, points: Vec::new(), pred: Vec::new(), reference: Vec::new() };
        for (n, line) in lines.enumerate() {
            let v: Vec<f64> = line
                .split(',')
                .map(|s| s.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Config(format!("{} line {}: {e}", path.display(), n + 2)))?;
            if v.len() != dim + 5 {
                return Err(Error::Config(format!("{} line {}: expected {} columns", path.display(), n + 2, dim + 5)));
            }
            let mut x = [0.0; 3];
            x[..dim].copy_from_slice(&v[..dim]);
            table.points.push(x);
            table.pred.push(Complex64::new(v[dim], v[dim + 1]));
            table.reference.push(Complex64::new(v[dim + 2], v[dim + 3]));
        }
        Ok(table)
    }
}

/// Diverging blue–white–red colormap on `t ∈ [−1, 1]`.
pub fn diverging_color(t: f64) -> [u8; 3] {
    let t = if t.is_finite() { t.clamp(-1.0, 1.0) } else { 0.0 };
    let (lo, mid, hi) = ([59.0, 76.0, 192.0], [247.0, 247.0, 247.0], [180.0, 4.0, 38.0]);
    let (a, b, s) = if t < 0.0 { (mid, lo, -t) } else { (mid, hi, t) };
    let mut c = [0u8; 3];
    for i in 0..3 {
        c[i] = (a[i] + (b[i] - a[i]) * s).round() as u8;
    }
    c
}

/// Binary PPM of a square field image; `None` pixels (inside the obstacle) are gray.
pub fn write_heatmap(path: &Path, pixels: usize, values: &[Option<f64>]) -> Result<()> {
    let vmax = values.iter().flatten().fold(0.0f64, |m, v| if v.is_finite() { m.max(v.abs()) } else { m });
    let scale = if vmax > 0.0 { 1.0 / vmax } else { 0.0 };
    let mut w = BufWriter::new(fs::File::create(path)?);
    write!(w, "P6\n{pixels} {pixels}\n255\n")?;
    for v in values {
        let rgb = match v {
            Some(v) => diverging_color(v * scale),
            None => [128, 128, 128],
        };
        w.write_all(&rgb)?;
    }
    w.flush()?;
    Ok(())
}
