//! Inner-boundary shapes, their distance functions and boundary data.
//!
//! Angles follow one convention throughout: a single angle `θ` is the polar
//! angle in the `xy`-plane (2D shapes and the axisymmetric sphere, whose
//! symmetry axis is `x`); a pair `(θ, φ)` is colatitude from `z` and azimuth.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::diff::{CJet, RJet};
use crate::error::{Error, Result};

const PROJECTION_ITERS: usize = 50;

#[derive(Debug, Clone, PartialEq)]
pub enum Geometry {
    Circle { radius: f64 },
    Ellipse { a: f64, b: f64 },
    RegularPolygon { sides: usize, circumradius: f64 },
    Sphere { radius: f64 },
    Ellipsoid { a: f64, b: f64, c: f64 },
    /// Semicircular canyon, extended by images to a full circular cavity.
    CanyonCavity { radius: f64 },
}

/// Signed distance and its gradient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Distance {
    pub d: f64,
    pub grad: [f64; 3],
}

impl Geometry {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Geometry::Circle { radius } | Geometry::Sphere { radius } | Geometry::CanyonCavity { radius } => radius > 0.0,
            Geometry::Ellipse { a, b } => a > 0.0 && b > 0.0,
            Geometry::RegularPolygon { sides, circumradius } => sides >= 3 && circumradius > 0.0,
            Geometry::Ellipsoid { a, b, c } => a > 0.0 && b > 0.0 && c > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Construction(format!("invalid geometry parameters {self:?}")))
        }
    }

    pub fn dimension(&self) -> usize {
        match self {
            Geometry::Sphere { .. } | Geometry::Ellipsoid { .. } => 3,
            _ => 2,
        }
    }

    /// Smallest boundary radius; the map's `R_in` when the boundary is attached.
    pub fn reference_radius(&self) -> f64 {
        match *self {
            Geometry::Circle { radius } | Geometry::Sphere { radius } | Geometry::CanyonCavity { radius } => radius,
            Geometry::Ellipse { a, b } => a.min(b),
            Geometry::RegularPolygon { sides, circumradius } => circumradius * (PI / sides as f64).cos(),
            Geometry::Ellipsoid { a, b, c } => a.min(b).min(c),
        }
    }

    pub fn has_constant_radius(&self) -> bool {
        matches!(self, Geometry::Circle { .. } | Geometry::Sphere { .. } | Geometry::CanyonCavity { .. })
    }

    /// Whether the boundary is smooth enough for normal-derivative constraints.
    pub fn supports_neumann(&self) -> bool {
        matches!(self, Geometry::Circle { .. } | Geometry::Sphere { .. } | Geometry::CanyonCavity { .. } | Geometry::Ellipse { .. })
    }

    /// Number of angular coordinates used to parametrize the boundary.
    pub fn angle_count(&self) -> usize {
        match self {
            Geometry::Ellipsoid { .. } => 2,
            _ => 1,
        }
    }

    pub fn boundary_radius(&self, angles: &[f64]) -> f64 {
        match *self {
            Geometry::Circle { radius } | Geometry::Sphere { radius } | Geometry::CanyonCavity { radius } => radius,
            Geometry::Ellipse { a, b } => {
                let (s, c) = angles[0].sin_cos();
                a * b / (b * b * c * c + a * a * s * s).sqrt()
            }
            Geometry::RegularPolygon { sides, circumradius } => {
                let apothem = circumradius * (PI / sides as f64).cos();
                apothem / (angles[0] - nearest_edge_angle(angles[0], sides)).cos()
            }
            Geometry::Ellipsoid { a, b, c } => {
                let u = direction(angles);
                1.0 / ((u[0] / a).powi(2) + (u[1] / b).powi(2) + (u[2] / c).powi(2)).sqrt()
            }
        }
    }

    pub fn boundary_radius_jet(&self, angles: &[RJet]) -> RJet {
        let layout = angles[0].layout();
        match *self {
            Geometry::Circle { radius } | Geometry::Sphere { radius } | Geometry::CanyonCavity { radius } => {
                RJet::constant(layout, radius)
            }
            Geometry::Ellipse { a, b } => {
                let c = angles[0].cos();
                let s = angles[0].sin();
                let q = c.square().scale(b * b) + s.square().scale(a * a);
                q.powf(-0.5).scale(a * b)
            }
            Geometry::RegularPolygon { sides, circumradius } => {
                let apothem = circumradius * (PI / sides as f64).cos();
                let edge = nearest_edge_angle(angles[0].value(), sides);
                angles[0].add_scalar(-edge).cos().recip().scale(apothem)
            }
            Geometry::Ellipsoid { a, b, c } => {
                let u = direction_jet(angles);
                let q = u[0].square().scale(1.0 / (a * a)) + u[1].square().scale(1.0 / (b * b)) + u[2].square().scale(1.0 / (c * c));
                q.powf(-0.5)
            }
        }
    }

    pub fn boundary_point(&self, angles: &[f64]) -> [f64; 3] {
        let r = self.boundary_radius(angles);
        let u = direction(angles);
        [r * u[0], r * u[1], r * u[2]]
    }

    /// Analytic outward unit normal at the boundary point in direction `angles`.
    pub fn outward_normal(&self, angles: &[f64]) -> [f64; 3] {
        let p = self.boundary_point(angles);
        let n = match *self {
            Geometry::Circle { .. } | Geometry::Sphere { .. } | Geometry::CanyonCavity { .. } => p,
            Geometry::Ellipse { a, b } => [p[0] / (a * a), p[1] / (b * b), 0.0],
            Geometry::RegularPolygon { sides, .. } => {
                let e = nearest_edge_angle(angles[0], sides);
                [e.cos(), e.sin(), 0.0]
            }
            Geometry::Ellipsoid { a, b, c } => [p[0] / (a * a), p[1] / (b * b), p[2] / (c * c)],
        };
        normalize(n)
    }

    /// Outward unit normal at the boundary point of the given angles, as jets.
    pub fn outward_normal_jet(&self, angles: &[RJet]) -> [RJet; 3] {
        let layout = angles[0].layout();
        let dir = direction_jet(angles);
        let unit = |v: [RJet; 3]| {
            let inv = (v[0].square() + v[1].square() + v[2].square()).sqrt().recip();
            [v[0] * inv, v[1] * inv, v[2] * inv]
        };
        match *self {
            Geometry::Circle { .. } | Geometry::Sphere { .. } | Geometry::CanyonCavity { .. } => dir,
            Geometry::Ellipse { a, b } => unit([dir[0].scale(1.0 / (a * a)), dir[1].scale(1.0 / (b * b)), RJet::zero(layout)]),
            Geometry::Ellipsoid { a, b, c } => unit([dir[0].scale(1.0 / (a * a)), dir[1].scale(1.0 / (b * b)), dir[2].scale(1.0 / (c * c))]),
            Geometry::RegularPolygon { .. } => {
                let n = self.outward_normal(&[angles[0].value()]);
                [RJet::constant(layout, n[0]), RJet::constant(layout, n[1]), RJet::zero(layout)]
            }
        }
    }

    /// Signed distance (negative inside) and its gradient at `x`.
    pub fn distance(&self, x: &[f64]) -> Result<Distance> {
        let p = pad(x);
        match *self {
            Geometry::Circle { radius } | Geometry::Sphere { radius } | Geometry::CanyonCavity { radius } => {
                let rho = norm(p);
                if rho == 0.0 {
                    return Ok(Distance { d: -radius, grad: [1.0, 0.0, 0.0] });
                }
                Ok(Distance { d: rho - radius, grad: [p[0] / rho, p[1] / rho, p[2] / rho] })
            }
            Geometry::Ellipse { a, b } => {
                let t = ellipse_projection(a, b, p[0], p[1])?;
                let (s, c) = t.sin_cos();
                let q = [p[0] - a * c, p[1] - b * s, 0.0];
                let n = normalize([b * c, a * s, 0.0]);
                let inside = (p[0] / a).powi(2) + (p[1] / b).powi(2) < 1.0;
                let d = norm(q);
                Ok(Distance { d: if inside { -d } else { d }, grad: n })
            }
            Geometry::RegularPolygon { sides, circumradius } => Ok(polygon_distance(sides, circumradius, p)),
            Geometry::Ellipsoid { a, b, c } => {
                let e = [a, b, c];
                let t = ellipsoid_projection(e, p)?;
                let q: Vec<f64> = (0..3).map(|i| e[i] * e[i] * p[i] / (t + e[i] * e[i])).collect();
                let n = normalize([q[0] / (a * a), q[1] / (b * b), q[2] / (c * c)]);
                let d = norm([p[0] - q[0], p[1] - q[1], p[2] - q[2]]);
                Ok(Distance { d: if t < 0.0 { -d } else { d }, grad: n })
            }
        }
    }

    /// Signed distance and gradient as jets of the physical coordinates.
    ///
    /// Only the smooth shapes carry a differentiable normal field.
    pub fn distance_jet(&self, x: &[RJet]) -> Result<(RJet, Vec<RJet>)> {
        match *self {
            Geometry::Circle { radius } | Geometry::Sphere { radius } | Geometry::CanyonCavity { radius } => {
                let rho2 = x.iter().fold(RJet::zero(x[0].layout()), |acc, v| acc + v.square());
                let rho = rho2.sqrt();
                let inv = rho.recip();
                let grad = x.iter().map(|v| *v * inv).collect();
                Ok((rho.add_scalar(-radius), grad))
            }
            Geometry::Ellipse { a, b } => {
                let t0 = ellipse_projection(a, b, x[0].value(), x[1].value())?;
                let mut t = RJet::constant(x[0].layout(), t0);
                // Newton on jets doubles the number of exact Taylor orders per step.
                for _ in 0..3 {
                    let (f, fp) = ellipse_stationarity(a, b, &x[0], &x[1], &t);
                    t = t - f * fp.recip();
                }
                let c = t.cos();
                let s = t.sin();
                let norm_n = (c.square().scale(b * b) + s.square().scale(a * a)).sqrt().recip();
                let n = [c.scale(b) * norm_n, s.scale(a) * norm_n];
                let d = (x[0] - c.scale(a)) * n[0] + (x[1] - s.scale(b)) * n[1];
                Ok((d, n.to_vec()))
            }
            _ => Err(Error::Construction(format!(
                "{} has no smooth normal field; normal-derivative constraints need a circle, sphere, canyon or ellipse",
                self.name()
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Geometry::Circle { .. } => "circle",
            Geometry::Ellipse { .. } => "ellipse",
            Geometry::RegularPolygon { .. } => "regular_polygon",
            Geometry::Sphere { .. } => "sphere",
            Geometry::Ellipsoid { .. } => "ellipsoid",
            Geometry::CanyonCavity { .. } => "canyon_cavity",
        }
    }

    /// Polygon vertices, counter-clockwise, starting below the `+x` edge.
    pub fn polygon_vertices(&self) -> Option<Vec<[f64; 2]>> {
        match *self {
            Geometry::RegularPolygon { sides, circumradius } => Some(
                (0..sides)
                    .map(|j| {
                        let ang = -PI / sides as f64 + TAU * j as f64 / sides as f64;
                        [circumradius * ang.cos(), circumradius * ang.sin()]
                    })
                    .collect(),
            ),
            _ => None,
        }
    }
}

/// Unit direction for the angle convention described at the top of the module.
pub fn direction(angles: &[f64]) -> [f64; 3] {
    match angles.len() {
        1 => {
            let (s, c) = angles[0].sin_cos();
            [c, s, 0.0]
        }
        _ => {
            let (st, ct) = angles[0].sin_cos();
            let (sp, cp) = angles[1].sin_cos();
            [st * cp, st * sp, ct]
        }
    }
}

pub fn direction_jet(angles: &[RJet]) -> [RJet; 3] {
    let layout = angles[0].layout();
    match angles.len() {
        1 => [angles[0].cos(), angles[0].sin(), RJet::zero(layout)],
        _ => {
            let st = angles[0].sin();
            [st * angles[1].cos(), st * angles[1].sin(), angles[0].cos()]
        }
    }
}

fn nearest_edge_angle(theta: f64, sides: usize) -> f64 {
    let step = TAU / sides as f64;
    (theta / step).round() * step
}

fn pad(x: &[f64]) -> [f64; 3] {
    let mut p = [0.0; 3];
    p[..x.len()].copy_from_slice(x);
    p
}

fn norm(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

fn normalize(v: [f64; 3]) -> [f64; 3] {
    let n = norm(v);
    [v[0] / n, v[1] / n, v[2] / n]
}

fn ellipse_stationarity(a: f64, b: f64, x: &RJet, y: &RJet, t: &RJet) -> (RJet, RJet) {
    let s = t.sin();
    let c = t.cos();
    let ab = a * a - b * b;
    let f = (*x * s).scale(-a) + (*y * c).scale(b) + (s * c).scale(ab);
    let fp = (*x * c).scale(-a) - (*y * s).scale(b) + (c.square() - s.square()).scale(ab);
    (f, fp)
}

/// Parameter `t` of the closest ellipse point `(a cos t, b sin t)`.
fn ellipse_projection(a: f64, b: f64, x: f64, y: f64) -> Result<f64> {
    let ab = a * a - b * b;
    let mut best: Option<(f64, f64)> = None;
    let mut worst_residual = 0.0f64;
    for j in 0..8 {
        let mut t = TAU * j as f64 / 8.0;
        let mut converged = false;
        for _ in 0..PROJECTION_ITERS {
            let (s, c) = t.sin_cos();
            let f = -a * x * s + b * y * c + ab * s * c;
            let fp = -a * x * c - b * y * s + ab * (c * c - s * s);
            if fp == 0.0 {
                break;
            }
            let step = f / fp;
            t -= step;
            if step.abs() <= 1e-14 * (1.0 + t.abs()) {
                converged = true;
                break;
            }
        }
        let (s, c) = t.sin_cos();
        if converged {
            let dist2 = (x - a * c).powi(2) + (y - b * s).powi(2);
            if best.is_none_or(|(_, d)| dist2 < d) {
                best = Some((t, dist2));
            }
        } else {
            worst_residual = worst_residual.max((-a * x * s + b * y * c + ab * s * c).abs());
        }
    }
    best.map(|(t, _)| t).ok_or(Error::Projection { iterations: PROJECTION_ITERS, x, y, z: 0.0, residual: worst_residual })
}

/// Lagrange parameter `t` of the closest ellipsoid point `e_i² p_i / (t + e_i²)`.
fn ellipsoid_projection(e: [f64; 3], p: [f64; 3]) -> Result<f64> {
    let emin2 = e.iter().fold(f64::INFINITY, |m, v| m.min(v * v));
    let mut t = 0.0f64;
    let mut f = 0.0;
    for _ in 0..PROJECTION_ITERS {
        f = -1.0;
        let mut fp = 0.0;
        for i in 0..3 {
            let q = e[i] * p[i] / (t + e[i] * e[i]);
            f += q * q;
            fp -= 2.0 * q * q / (t + e[i] * e[i]);
        }
        if fp == 0.0 {
            return Ok(t);
        }
        let step = f / fp;
        t -= step;
        if t <= -emin2 {
            break;
        }
        if step.abs() <= 1e-14 * (1.0 + t.abs()) {
            return Ok(t);
        }
    }
    Err(Error::Projection { iterations: PROJECTION_ITERS, x: p[0], y: p[1], z: p[2], residual: f.abs() })
}

fn polygon_distance(sides: usize, circumradius: f64, p: [f64; 3]) -> Distance {
    let verts = Geometry::RegularPolygon { sides, circumradius }.polygon_vertices().unwrap_or_default();
    let apothem = circumradius * (PI / sides as f64).cos();
    let mut best = (f64::INFINITY, [0.0; 3]);
    let mut inside = true;
    for j in 0..sides {
        let a = verts[j];
        let b = verts[(j + 1) % sides];
        let normal_angle = TAU * j as f64 / sides as f64;
        let n = [normal_angle.cos(), normal_angle.sin()];
        if p[0] * n[0] + p[1] * n[1] >= apothem {
            inside = false;
        }
        let e = [b[0] - a[0], b[1] - a[1]];
        let t = (((p[0] - a[0]) * e[0] + (p[1] - a[1]) * e[1]) / (e[0] * e[0] + e[1] * e[1])).clamp(0.0, 1.0);
        let q = [p[0] - a[0] - t * e[0], p[1] - a[1] - t * e[1]];
        let d = (q[0] * q[0] + q[1] * q[1]).sqrt();
        if d < best.0 {
            let g = if d > 1e-12 * circumradius { [q[0] / d, q[1] / d, 0.0] } else { [n[0], n[1], 0.0] };
            best = (d, g);
        }
    }
    let (d, mut grad) = best;
    if inside {
        if d > 1e-12 * circumradius {
            grad = [-grad[0], -grad[1], 0.0];
        }
        return Distance { d: -d, grad };
    }
    Distance { d, grad }
}

/// Plane wave `e^{ik x·dir}` and its gradient.
pub fn incident_field(k: f64, dir: [f64; 3], x: &[f64]) -> (Complex64, [Complex64; 3]) {
    let p = pad(x);
    let phase = k * (p[0] * dir[0] + p[1] * dir[1] + p[2] * dir[2]);
    let u = Complex64::from_polar(1.0, phase);
    let g = Complex64::new(0.0, k) * u;
    (u, [g * dir[0], g * dir[1], g * dir[2]])
}

pub fn incident_field_jet(k: f64, dir: [f64; 3], x: &[RJet]) -> CJet {
    let mut phase = RJet::zero(x[0].layout());
    for (xi, di) in x.iter().zip(dir) {
        phase += xi.scale(k * di);
    }
    phase.cis()
}

/// Incident plus mirror-reflected plane wave over the traction-free surface `y = 0`.
pub fn background_field_canyon(k: f64, theta_inc: f64, x: &[f64]) -> (Complex64, [Complex64; 2]) {
    let (si, ci) = theta_inc.sin_cos();
    let carrier = Complex64::from_polar(2.0, k * ci * x[0]);
    let (sy, cy) = (k * si * x[1]).sin_cos();
    let u = carrier * cy;
    (u, [Complex64::new(0.0, k * ci) * u, carrier * (-k * si * sy)])
}

/// Radial derivative of the canyon background field at polar point `(r, θ)`.
pub fn background_radial_derivative(k: f64, theta_inc: f64, r: f64, theta: f64) -> Complex64 {
    let (s, c) = theta.sin_cos();
    let (_, g) = background_field_canyon(k, theta_inc, &[r * c, r * s]);
    g[0] * c + g[1] * s
}

pub fn background_field_canyon_jet(k: f64, theta_inc: f64, x: &[RJet]) -> (CJet, [CJet; 2]) {
    let (si, ci) = theta_inc.sin_cos();
    let carrier = x[0].scale(k * ci).cis().scale(2.0);
    let ky = x[1].scale(k * si);
    let cy = ky.cos();
    let sy = ky.sin();
    let u = carrier.mul_real(&cy);
    let ux = u.mul_scalar(Complex64::new(0.0, k * ci));
    let uy = carrier.mul_real(&sy).scale(-k * si);
    (u, [ux, uy])
}

/// Dirichlet data on the scatterer.
#[derive(Debug, Clone, PartialEq)]
pub enum DirichletData {
    /// Prescribed constant, e.g. a pulsating cylinder.
    Constant(Complex64),
    /// Sound-soft scatterer under a plane wave: `g_D = −u_inc`.
    SoundSoft { k: f64, direction: [f64; 3] },
}

impl DirichletData {
    pub fn value(&self, x: &[f64]) -> Complex64 {
        match self {
            DirichletData::Constant(v) => *v,
            DirichletData::SoundSoft { k, direction } => -incident_field(*k, *direction, x).0,
        }
    }

    /// `g_D` along the boundary, with `x` the boundary point as jets of the angles.
    pub fn value_jet(&self, x: &[RJet]) -> CJet {
        match self {
            DirichletData::Constant(v) => CJet::constant(x[0].layout(), *v),
            DirichletData::SoundSoft { k, direction } => -incident_field_jet(*k, *direction, x),
        }
    }

    /// Characteristic amplitude used to scale the network output.
    pub fn magnitude(&self) -> f64 {
        match self {
            DirichletData::Constant(v) => v.norm(),
            DirichletData::SoundSoft { .. } => 1.0,
        }
    }
}

/// Neumann data `g_N = ∂u/∂n` on the scatterer.
#[derive(Debug, Clone, PartialEq)]
pub enum NeumannData {
    Zero,
    /// Scattered field of the canyon problem: `g_N = −∂u⁽⁰⁾/∂n`.
    Canyon { k: f64, theta_inc: f64 },
    /// Prescribed constant normal derivative.
    Constant(Complex64),
}

impl NeumannData {
    pub fn value(&self, x: &[f64], normal: &[f64]) -> Complex64 {
        match self {
            NeumannData::Zero => Complex64::new(0.0, 0.0),
            NeumannData::Constant(v) => *v,
            NeumannData::Canyon { k, theta_inc } => {
                let (_, g) = background_field_canyon(*k, *theta_inc, x);
                -(g[0] * normal[0] + g[1] * normal[1])
            }
        }
    }

    /// `g_N` extended off the boundary along the distance gradient field.
    pub fn value_jet(&self, x: &[RJet], normal: &[RJet]) -> CJet {
        let layout = x[0].layout();
        match self {
            NeumannData::Zero => CJet::zero(layout),
            NeumannData::Constant(v) => CJet::constant(layout, *v),
            NeumannData::Canyon { k, theta_inc } => {
                let (_, g) = background_field_canyon_jet(*k, *theta_inc, x);
                -(g[0].mul_real(&normal[0]) + g[1].mul_real(&normal[1]))
            }
        }
    }

    pub fn magnitude(&self) -> f64 {
        match self {
            NeumannData::Zero => 1.0,
            NeumannData::Constant(v) => v.norm().max(1.0),
            NeumannData::Canyon { .. } => 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BoundaryData {
    Dirichlet(DirichletData),
    Neumann(NeumannData),
}
