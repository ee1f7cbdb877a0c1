//! Reference solutions: analytic radiation and Mie series, a radial finite
//! difference solver for variable wavenumber, the method of fundamental
//! solutions for general Dirichlet scatterers and the image-method series for
//! the semicircular canyon.

use std::f64::consts::{PI, TAU};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::ansatz::KModel;
use crate::diff::{CJet, RJet};
use crate::error::{Error, Result};
use crate::geometry::{DirichletData, Geometry};
use crate::special::{
    bessel_j_all, bessel_j_deriv_all, hankel1, hankel1_all, hankel1_deriv_all, mie_truncation, spherical_bessel_j_all,
    spherical_hankel1_all, spherical_hankel1_deriv_all,
};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// MFS boundary residual above which the reference is flagged.
pub const MFS_WARN: f64 = 1e-6;
/// MFS boundary residual above which the reference is rejected.
pub const MFS_FAIL: f64 = 1e-3;
/// Rejection limit for polygons, whose corner singularities cap the attainable fit.
pub const MFS_FAIL_CORNERS: f64 = 1e-1;
/// Source positions as a fraction of the boundary radius.
pub const MFS_SOURCE_SCALE: f64 = 0.8;

fn i_pow(n: usize) -> Complex64 {
    [Complex64::new(1.0, 0.0), I, Complex64::new(-1.0, 0.0), -I][n % 4]
}

fn neumann_factor(n: usize) -> f64 {
    if n == 0 {
        1.0
    } else {
        2.0
    }
}

/// `u₀·H₀(kr)/H₀(k)`: field of a pulsating unit cylinder.
pub fn radiation_exact(k: f64, u0: Complex64, r: f64) -> Result<Complex64> {
    Ok(u0 * hankel1(0, k * r)? / hankel1(0, k)?)
}

pub fn radiation_exact_jet(k: f64, u0: Complex64, r: &RJet) -> Result<CJet> {
    let h = hankel_jet(0, &r.scale(k))?;
    Ok(h.mul_scalar(u0 / hankel1(0, k)?))
}

/// Completes value and first derivative with the Bessel equation
/// `x²f″ + s·x f′ + (x² − ν)f = 0` (`s = 1` cylindrical, `s = 2` spherical).
fn bessel_ode_derivs(x: f64, nu: f64, s: f64, f: Complex64, fp: Complex64) -> [Complex64; 4] {
    let x2 = x * x;
    let f2 = -(fp * (s * x) + f * (x2 - nu)) / x2;
    // differentiate the equation once more
    let f3 = -(f2 * ((2.0 + s) * x) + fp * (s + x2 - nu) + f * (2.0 * x)) / x2;
    [f, fp, f2, f3]
}

/// `H_n^(1)(x)` composed with a jet `x`.
pub fn hankel_jet(n: usize, x: &RJet) -> Result<CJet> {
    let v = x.value();
    let h = hankel1_all(n, v)?;
    let hp = hankel1_deriv_all(n, v)?;
    Ok(x.to_complex().compose(&bessel_ode_derivs(v, (n * n) as f64, 1.0, h[n], hp[n])))
}

/// Spherical `h_n^(1)(x)` composed with a jet `x`.
pub fn spherical_hankel_jet(n: usize, x: &RJet) -> Result<CJet> {
    let v = x.value();
    let h = spherical_hankel1_all(n, v)?;
    let hp = spherical_hankel1_deriv_all(n, v)?;
    Ok(x.to_complex().compose(&bessel_ode_derivs(v, (n * (n + 1)) as f64, 2.0, h[n], hp[n])))
}

/// Modal coefficients `−ε_n iⁿ J_n(kR)/H_n(kR)` of sound-soft cylinder scattering.
#[derive(Debug, Clone, PartialEq)]
pub struct Mie2d {
    pub k: f64,
    pub r_in: f64,
    coeffs: Vec<Complex64>,
}

impl Mie2d {
    pub fn new(k: f64, r_in: f64, n_max: usize) -> Result<Self> {
        let j = bessel_j_all(n_max, k * r_in)?;
        let h = hankel1_all(n_max, k * r_in)?;
        let coeffs = (0..=n_max).map(|n| -i_pow(n) * neumann_factor(n) * j[n] / h[n]).collect();
        Ok(Self { k, r_in, coeffs })
    }

    pub fn n_max(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn eval(&self, r: f64, theta: f64) -> Result<Complex64> {
        if r < self.r_in * (1.0 - 1e-12) {
            return Err(Error::Domain(format!("Mie series needs r ≥ {}, got {r}", self.r_in)));
        }
        let h = hankel1_all(self.n_max(), self.k * r)?;
        Ok(self.coeffs.iter().zip(&h).enumerate().map(|(n, (c, h))| c * h * (n as f64 * theta).cos()).sum())
    }

    pub fn eval_jet(&self, r: &RJet, theta: &RJet) -> Result<CJet> {
        let x = r.scale(self.k);
        let v = x.value();
        let h = hankel1_all(self.n_max(), v)?;
        let hp = hankel1_deriv_all(self.n_max(), v)?;
        let mut out = CJet::zero(r.layout());
        for (n, c) in self.coeffs.iter().enumerate() {
            let hn = x.to_complex().compose(&bessel_ode_derivs(v, (n * n) as f64, 1.0, h[n], hp[n]));
            out += (hn * theta.scale(n as f64).cos().to_complex()).mul_scalar(*c);
        }
        Ok(out)
    }
}

pub fn mie2d(k: f64, r_in: f64, r: f64, theta: f64, n_max: usize) -> Result<Complex64> {
    Mie2d::new(k, r_in, n_max)?.eval(r, theta)
}

pub fn mie2d_jet(k: f64, r_in: f64, r: &RJet, theta: &RJet, n_max: usize) -> Result<CJet> {
    Mie2d::new(k, r_in, n_max)?.eval_jet(r, theta)
}

/// Modal coefficients `−iⁿ(2n+1) j_n(kr₀)/h_n(kr₀)` of sound-soft sphere scattering.
#[derive(Debug, Clone, PartialEq)]
pub struct Mie3d {
    pub k: f64,
    pub r0: f64,
    coeffs: Vec<Complex64>,
}

impl Mie3d {
    pub fn new(k: f64, r0: f64, n_max: usize) -> Result<Self> {
        let j = spherical_bessel_j_all(n_max, k * r0)?;
        let h = spherical_hankel1_all(n_max, k * r0)?;
        let coeffs = (0..=n_max).map(|n| -i_pow(n) * (2 * n + 1) as f64 * j[n] / h[n]).collect();
        Ok(Self { k, r0, coeffs })
    }

    pub fn n_max(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Field at radius `r` and angle `θ` from the propagation axis.
    pub fn eval(&self, r: f64, theta: f64) -> Result<Complex64> {
        if r < self.r0 * (1.0 - 1e-12) {
            return Err(Error::Domain(format!("Mie series needs r ≥ {}, got {r}", self.r0)));
        }
        let h = spherical_hankel1_all(self.n_max(), self.k * r)?;
        let p = crate::special::legendre_all(self.n_max(), theta.cos().clamp(-1.0, 1.0))?;
        Ok(self.coeffs.iter().zip(&h).zip(&p).map(|((c, h), p)| c * h * *p).sum())
    }

    pub fn eval_jet(&self, r: &RJet, theta: &RJet) -> Result<CJet> {
        let x = r.scale(self.k);
        let v = x.value();
        let h = spherical_hankel1_all(self.n_max(), v)?;
        let hp = spherical_hankel1_deriv_all(self.n_max(), v)?;
        let t = theta.cos();
        let mut p_prev = RJet::constant(r.layout(), 1.0);
        let mut p = t;
        let mut out = CJet::zero(r.layout());
        for (n, c) in self.coeffs.iter().enumerate() {
            let pn = if n == 0 { p_prev } else { p };
            let hn = x.to_complex().compose(&bessel_ode_derivs(v, (n * (n + 1)) as f64, 2.0, h[n], hp[n]));
            out += hn.mul_real(&pn).mul_scalar(*c);
            if n >= 1 {
                // (n+1)P_{n+1} = (2n+1) t P_n − n P_{n−1}
                let next = (t * p).scale((2 * n + 1) as f64 / (n + 1) as f64) - p_prev.scale(n as f64 / (n + 1) as f64);
                p_prev = p;
                p = next;
            }
        }
        Ok(out)
    }
}

pub fn mie3d(k: f64, r0: f64, r: f64, theta: f64, n_max: usize) -> Result<Complex64> {
    Mie3d::new(k, r0, n_max)?.eval(r, theta)
}

pub fn mie3d_jet(k: f64, r0: f64, r: &RJet, theta: &RJet, n_max: usize) -> Result<CJet> {
    Mie3d::new(k, r0, n_max)?.eval_jet(r, theta)
}

/// Radial profile `u(r)` on a uniform grid with cubic interpolation.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    pub r_min: f64,
    pub step: f64,
    pub values: Vec<Complex64>,
}

impl RadialProfile {
    pub fn r_max(&self) -> f64 {
        self.r_min + self.step * (self.values.len() - 1) as f64
    }

    pub fn eval(&self, r: f64) -> Result<Complex64> {
        let n = self.values.len();
        if r < self.r_min - 1e-12 || r > self.r_max() + 1e-12 {
            return Err(Error::Domain(format!("radius {r} outside the profile [{}, {}]", self.r_min, self.r_max())));
        }
        let t = (r - self.r_min) / self.step;
        let base = (t.floor() as isize - 1).clamp(0, n as isize - 4) as usize;
        let s = t - base as f64;
        // four-point Lagrange weights at nodes 0, 1, 2, 3
        let w = [
            -(s - 1.0) * (s - 2.0) * (s - 3.0) / 6.0,
            s * (s - 2.0) * (s - 3.0) / 2.0,
            -s * (s - 1.0) * (s - 3.0) / 2.0,
            s * (s - 1.0) * (s - 2.0) / 6.0,
        ];
        Ok((0..4).map(|i| self.values[base + i] * w[i]).sum())
    }
}

/// Smallest admissible truncation radius of [`radial_fdm`].
pub fn fdm_min_radius(k: &KModel) -> f64 {
    20.0 / k.far_field() + 10.0
}

/// Truncation radius and grid size keeping the outer-boundary reflection and
/// the discretization error below `1e-6` relative on `[1, 10]`.
pub fn fdm_default_grid(k: &KModel) -> (f64, usize) {
    let k_inf = k.far_field();
    let r_max = fdm_min_radius(k).max(400.0 / k_inf);
    let n_grid = ((100.0 * k_inf * (r_max - 1.0)).ceil() as usize).max(10_000);
    (r_max, n_grid)
}

/// Fourth-order finite differences for `u″ + u′/r + k(r)²u = 0` on `[1, R_max]`
/// with `u(1) = u₀` and `u′ − ik∞u + u/(2R_max) = 0` at the outer end.
pub fn radial_fdm(k: &KModel, u0: Complex64, r_max: f64, n_grid: usize) -> Result<RadialProfile> {
    k.validate()?;
    if r_max < fdm_min_radius(k) {
        return Err(Error::Construction(format!("R_max must be at least {}, got {r_max}", fdm_min_radius(k))));
    }
    if n_grid < 10_000 {
        return Err(Error::Construction(format!("n_grid must be at least 10000, got {n_grid}")));
    }
    let n = n_grid - 1;
    let h = (r_max - 1.0) / n as f64;
    let k_inf = k.far_field();
    let mut band = BandMatrix::new(n, 4, 4);
    let mut rhs = vec![Complex64::new(0.0, 0.0); n];
    let d2c = 1.0 / (12.0 * h * h);
    let d1c = 1.0 / (12.0 * h);
    for i in 1..=n {
        let r = 1.0 + h * i as f64;
        let mut row: Vec<(usize, f64)> = Vec::with_capacity(12);
        let push = |row: &mut Vec<(usize, f64)>, stencil: &[(isize, f64)], s: f64| {
            row.extend(stencil.iter().map(|&(o, w)| ((i as isize + o) as usize, w * s)));
        };
        if i == n {
            push(&mut row, &[(0, 25.0), (-1, -48.0), (-2, 36.0), (-3, -16.0), (-4, 3.0)], d1c);
            for (c, w) in row {
                band.add(n - 1, c - 1, Complex64::new(w, 0.0));
            }
            band.add(n - 1, n - 1, Complex64::new(1.0 / (2.0 * r_max), -k_inf));
            continue;
        }
        let (dd, d): (&[(isize, f64)], &[(isize, f64)]) = if i == 1 {
            (&[(-1, 10.0), (0, -15.0), (1, -4.0), (2, 14.0), (3, -6.0), (4, 1.0)], &[(-1, -3.0), (0, -10.0), (1, 18.0), (2, -6.0), (3, 1.0)])
        } else if i == n - 1 {
            (&[(1, 10.0), (0, -15.0), (-1, -4.0), (-2, 14.0), (-3, -6.0), (-4, 1.0)], &[(1, 3.0), (0, 10.0), (-1, -18.0), (-2, 6.0), (-3, -1.0)])
        } else {
            (&[(-2, -1.0), (-1, 16.0), (0, -30.0), (1, 16.0), (2, -1.0)], &[(-2, 1.0), (-1, -8.0), (1, 8.0), (2, -1.0)])
        };
        push(&mut row, dd, d2c);
        push(&mut row, d, d1c / r);
        let kr = k.at(r);
        row.push((i, kr * kr));
        for (c, w) in row {
            if c == 0 {
                rhs[i - 1] -= u0 * w;
            } else {
                band.add(i - 1, c - 1, Complex64::new(w, 0.0));
            }
        }
    }
    band.solve(&mut rhs)?;
    let mut values = Vec::with_capacity(n + 1);
    values.push(u0);
    values.extend(rhs);
    Ok(RadialProfile { r_min: 1.0, step: h, values })
}

/// Banded matrix with partial-pivoting LU in LAPACK band layout.
struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    ab: Vec<Complex64>,
}

impl BandMatrix {
    fn new(n: usize, kl: usize, ku: usize) -> Self {
        Self { n, kl, ku, ab: vec![Complex64::new(0.0, 0.0); (2 * kl + ku + 1) * n] }
    }

    fn ld(&self) -> usize {
        2 * self.kl + self.ku + 1
    }

    fn idx(&self, i: usize, j: usize) -> usize {
        (self.kl + self.ku + i - j) + j * self.ld()
    }

    fn add(&mut self, i: usize, j: usize, v: Complex64) {
        assert!(j + self.kl >= i && i + self.ku >= j, "entry ({i}, {j}) outside the band");
        let k = self.idx(i, j);
        self.ab[k] += v;
    }

    /// Solves in place, consuming the factorization.
    fn solve(mut self, b: &mut [Complex64]) -> Result<()> {
        let (n, kl, kv) = (self.n, self.kl, self.kl + self.ku);
        let mut piv = vec![0usize; n];
        let mut ju = 0usize;
        for j in 0..n {
            let km = kl.min(n - 1 - j);
            let mut p = 0;
            let mut best = 0.0;
            for i in 0..=km {
                let v = self.ab[self.idx(j + i, j)].norm();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 {
                return Err(Error::Singular(format!("zero pivot in column {j}")));
            }
            piv[j] = j + p;
            ju = ju.max((j + self.ku + p).min(n - 1));
            if p != 0 {
                for c in j..=ju {
                    let (a, bb) = (self.idx(j, c), self.idx(j + p, c));
                    self.ab.swap(a, bb);
                }
            }
            let pivot = self.ab[self.idx(j, j)];
            for i in 1..=km {
                let k = self.idx(j + i, j);
                self.ab[k] /= pivot;
            }
            for c in j + 1..=ju {
                let ujc = self.ab[self.idx(j, c)];
                if ujc == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for i in 1..=km {
                    let l = self.ab[self.idx(j + i, j)];
                    let k = self.idx(j + i, c);
                    self.ab[k] -= l * ujc;
                }
            }
        }
        for j in 0..n {
            b.swap(j, piv[j]);
            let km = kl.min(n - 1 - j);
            for i in 1..=km {
                let l = self.ab[self.idx(j + i, j)];
                let bj = b[j];
                b[j + i] -= l * bj;
            }
        }
        for j in (0..n).rev() {
            b[j] /= self.ab[self.idx(j, j)];
            let bj = b[j];
            for r in j.saturating_sub(kv)..j {
                b[r] -= self.ab[self.idx(r, j)] * bj;
            }
        }
        Ok(())
    }
}

/// Source-sum field of the method of fundamental solutions.
#[derive(Debug, Clone, PartialEq)]
pub struct MfsField {
    pub dim: usize,
    pub k: f64,
    pub sources: Vec<[f64; 3]>,
    pub coeffs: Vec<Complex64>,
    /// `‖Gc − g_D‖∞` over the collocation points.
    pub boundary_residual: f64,
    pub warning: bool,
}

impl MfsField {
    fn kernel(dim: usize, k: f64, x: &[f64; 3], y: &[f64; 3]) -> Result<Complex64> {
        let d = ((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2) + (x[2] - y[2]).powi(2)).sqrt();
        if dim == 2 {
            Ok(I * 0.25 * hankel1(0, k * d)?)
        } else {
            Ok(Complex64::from_polar(1.0 / (4.0 * PI * d), k * d))
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<Complex64> {
        let p = pad3(x);
        let mut acc = Complex64::new(0.0, 0.0);
        for (s, c) in self.sources.iter().zip(&self.coeffs) {
            acc += c * Self::kernel(self.dim, self.k, &p, s)?;
        }
        Ok(acc)
    }
}

fn pad3(x: &[f64]) -> [f64; 3] {
    [x[0], x[1], x.get(2).copied().unwrap_or(0.0)]
}

/// Quasi-uniform unit vectors on the sphere.
fn fibonacci_sphere(n: usize) -> Vec<[f64; 3]> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
            let rho = (1.0 - z * z).sqrt();
            let phi = golden * i as f64;
            [rho * phi.cos(), rho * phi.sin(), z]
        })
        .collect()
}

/// Boundary point of a 3D body for the unit-sphere sample `u`; ellipsoids use
/// the parametric map, which spreads points more evenly than radial projection.
fn surface_point(geometry: &Geometry, u: [f64; 3]) -> [f64; 3] {
    match *geometry {
        Geometry::Ellipsoid { a, b, c } => [a * u[0], b * u[1], c * u[2]],
        Geometry::Sphere { radius } => [radius * u[0], radius * u[1], radius * u[2]],
        ref g => {
            let angles = [u[2].clamp(-1.0, 1.0).acos(), u[1].atan2(u[0])];
            g.boundary_point(&angles)
        }
    }
}

/// Boundary and source points: `n_sources` sources and `2·n_sources` collocation points.
fn mfs_points(geometry: &Geometry, n_sources: usize) -> (Vec<[f64; 3]>, Vec<[f64; 3]>) {
    let scale = |p: [f64; 3]| [p[0] * MFS_SOURCE_SCALE, p[1] * MFS_SOURCE_SCALE, p[2] * MFS_SOURCE_SCALE];
    if geometry.dimension() == 2 {
        let src = (0..n_sources).map(|j| scale(geometry.boundary_point(&[TAU * j as f64 / n_sources as f64]))).collect();
        let m = 2 * n_sources;
        let col = (0..m).map(|i| geometry.boundary_point(&[TAU * (i as f64 + 0.5) / m as f64])).collect();
        (src, col)
    } else {
        let src = fibonacci_sphere(n_sources).into_iter().map(|u| scale(surface_point(geometry, u))).collect();
        let col = fibonacci_sphere(2 * n_sources).into_iter().map(|u| surface_point(geometry, u)).collect();
        (src, col)
    }
}

/// Method of fundamental solutions for the exterior Dirichlet problem.
pub fn mfs_solve(geometry: &Geometry, k: f64, g_d: &DirichletData, n_sources: usize) -> Result<MfsField> {
    geometry.validate()?;
    if n_sources == 0 || !(k > 0.0) {
        return Err(Error::Construction(format!("MFS needs sources and k > 0, got n={n_sources}, k={k}")));
    }
    let dim = geometry.dimension();
    let (sources, colloc) = mfs_points(geometry, n_sources);
    let m = colloc.len();
    let mut g = DMatrix::<Complex64>::zeros(m, n_sources);
    for (i, x) in colloc.iter().enumerate() {
        for (j, y) in sources.iter().enumerate() {
            g[(i, j)] = MfsField::kernel(dim, k, x, y)?;
        }
    }
    let rhs = DVector::from_iterator(m, colloc.iter().map(|x| g_d.value(&x[..dim])));
    let coeffs: Vec<Complex64> = if rhs.iter().all(|v| v.norm() == 0.0) {
        vec![Complex64::new(0.0, 0.0); n_sources]
    } else {
        let qr = g.clone().qr();
        let mut qtb = rhs.clone();
        qr.q_tr_mul(&mut qtb);
        let r = qr.r();
        let top = qtb.rows(0, n_sources).into_owned();
        r.solve_upper_triangular(&top).ok_or_else(|| Error::Singular("MFS triangular factor is singular".into()))?.iter().copied().collect()
    };
    let fit = &g * DVector::from_column_slice(&coeffs);
    let boundary_residual = fit.iter().zip(rhs.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    let limit = if geometry.polygon_vertices().is_some() { MFS_FAIL_CORNERS } else { MFS_FAIL };
    if !(boundary_residual <= limit) {
        return Err(Error::OracleAccuracy { residual: boundary_residual, limit });
    }
    Ok(MfsField { dim, k, sources, coeffs, boundary_residual, warning: boundary_residual > MFS_WARN })
}

/// Image-method modal solution of SH scattering by a semicircular canyon.
#[derive(Debug, Clone, PartialEq)]
pub struct CanyonField {
    pub k: f64,
    pub a: f64,
    pub theta_inc: f64,
    /// Coefficients of `H_n(kr) cos nθ` in the scattered field.
    coeffs: Vec<Complex64>,
}

/// One sample of the surface amplitude profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfacePoint {
    pub x: f64,
    pub y: f64,
    pub u: Complex64,
}

impl CanyonField {
    pub fn n_max(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Scattered field at polar point `(r, θ)`.
    pub fn scattered(&self, r: f64, theta: f64) -> Result<Complex64> {
        let h = hankel1_all(self.n_max(), self.k * r)?;
        Ok(self.coeffs.iter().zip(&h).enumerate().map(|(n, (c, h))| c * h * (n as f64 * theta).cos()).sum())
    }

    /// `∂u_s/∂r` at `(r, θ)`.
    pub fn scattered_radial_derivative(&self, r: f64, theta: f64) -> Result<Complex64> {
        let hp = hankel1_deriv_all(self.n_max(), self.k * r)?;
        Ok(self.coeffs.iter().zip(&hp).enumerate().map(|(n, (c, h))| c * h * self.k * (n as f64 * theta).cos()).sum())
    }

    /// Total displacement `u⁽⁰⁾ + u_s` at a physical point outside the cavity.
    pub fn total(&self, x: &[f64]) -> Result<Complex64> {
        let (r, theta) = (x[0].hypot(x[1]), x[1].atan2(x[0]));
        let (u0, _) = crate::geometry::background_field_canyon(self.k, self.theta_inc, x);
        Ok(u0 + self.scattered(r.max(self.a), theta)?)
    }

    /// `|u|` samples on the free surface `y = 0` and along the canyon floor, `x ∈ [−3a, 3a]`.
    pub fn surface_profile(&self, n: usize) -> Result<Vec<SurfacePoint>> {
        surface_points(self.a, n).into_iter().map(|[x, y]| Ok(SurfacePoint { x, y, u: self.total(&[x, y])? })).collect()
    }
}

/// Surface sample positions: ground for `|x| ≥ a`, canyon arc below it.
pub fn surface_points(a: f64, n: usize) -> Vec<[f64; 2]> {
    let m = (n - 1) as f64 / 2.0;
    (0..n)
        .map(|i| {
            let x = 3.0 * a * (i as f64 - m) / m;
            let y = if x.abs() < a { -(a * a - x * x).sqrt() } else { 0.0 };
            [x, y]
        })
        .collect()
}

pub fn canyon_series(k: f64, a: f64, theta_inc: f64, n_max: usize) -> Result<CanyonField> {
    if !(k > 0.0 && a > 0.0) {
        return Err(Error::Construction(format!("canyon series needs k > 0 and a > 0, got k={k}, a={a}")));
    }
    let jp = bessel_j_deriv_all(n_max, k * a)?;
    let hp = hankel1_deriv_all(n_max, k * a)?;
    let coeffs = (0..=n_max)
        .map(|n| {
            let background = i_pow(n) * neumann_factor(n) * 2.0 * (n as f64 * theta_inc).cos();
            -background * jp[n] / hp[n]
        })
        .collect();
    Ok(CanyonField { k, a, theta_inc, coeffs })
}

/// Any reference field, evaluated at physical points.
#[derive(Debug, Clone, PartialEq)]
pub enum OracleField {
    Radiation { k: f64, u0: Complex64 },
    Mie2d(Mie2d),
    Mie3d(Mie3d),
    Radial(RadialProfile),
    Mfs(MfsField),
    /// Scattered part of the canyon solution.
    Canyon(CanyonField),
}

impl OracleField {
    pub fn name(&self) -> &'static str {
        match self {
            OracleField::Radiation { .. } => "radiation_exact",
            OracleField::Mie2d(_) => "mie2d",
            OracleField::Mie3d(_) => "mie3d",
            OracleField::Radial(_) => "radial_fdm",
            OracleField::Mfs(_) => "mfs",
            OracleField::Canyon(_) => "canyon_series",
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<Complex64> {
        let p = pad3(x);
        let rho = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
        match self {
            OracleField::Radiation { k, u0 } => radiation_exact(*k, *u0, rho),
            OracleField::Mie2d(m) => m.eval(rho, p[1].atan2(p[0])),
            // polar angle measured from the propagation axis x
            OracleField::Mie3d(m) => m.eval(rho, (p[0] / rho).clamp(-1.0, 1.0).acos()),
            OracleField::Radial(prof) => prof.eval(rho),
            OracleField::Mfs(f) => f.eval(x),
            OracleField::Canyon(c) => c.scattered(rho, p[1].atan2(p[0])),
        }
    }

    pub fn summary(&self) -> String {
        match self {
            OracleField::Radiation { k, .. } => format!("radiation_exact k={k}"),
            OracleField::Mie2d(m) => format!("mie2d k={} n_max={}", m.k, m.n_max()),
            OracleField::Mie3d(m) => format!("mie3d k={} n_max={}", m.k, m.n_max()),
            OracleField::Radial(p) => format!("radial_fdm R_max={} n_grid={}", p.r_max(), p.values.len()),
            OracleField::Mfs(f) => format!("mfs sources={} boundary_residual={:.3e}", f.sources.len(), f.boundary_residual),
            OracleField::Canyon(c) => format!("canyon_series k={} n_max={}", c.k, c.n_max()),
        }
    }
}

/// Default truncation for a modal series evaluated out to size parameter `kr`.
pub fn default_n_max(kr: f64) -> usize {
    mie_truncation(kr)
}
