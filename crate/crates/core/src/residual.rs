//! Helmholtz residuals `Δû + k²û − f` for fields given as jets in the
//! computational coordinates `(ξ, angles)`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::ansatz::KModel;
use crate::diff::CJet;
use crate::error::{Error, Result};
use crate::geometry::direction;
use crate::mapping::{MapPartials, MapSpec};

/// Half-width of the excluded band around the poles of spherical coordinates.
pub const POLE_BAND: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResidualForm {
    /// Mapped polar operator with constant boundary radius.
    ExplicitPolar,
    /// Polar operator through `∂ξ/∂r`, `∂ξ/∂θ` of an angle-dependent map.
    ChainRuleGeneral,
    /// Spherical operator for fields independent of the azimuth.
    SphericalAxisym,
    /// Full spherical operator in `(ξ, θ, φ)`.
    SphericalFull,
}

impl ResidualForm {
    pub fn name(self) -> &'static str {
        match self {
            ResidualForm::ExplicitPolar => "explicit_polar",
            ResidualForm::ChainRuleGeneral => "chain_rule_general",
            ResidualForm::SphericalAxisym => "spherical_axisym",
            ResidualForm::SphericalFull => "spherical_full",
        }
    }

    pub fn coord_count(self) -> usize {
        match self {
            ResidualForm::SphericalFull => 3,
            _ => 2,
        }
    }
}

/// Source term `f(x)` of `Δu + k²u = f`.
pub type Source = Arc<dyn Fn(&[f64; 3]) -> Complex64 + Send + Sync>;

#[derive(Clone)]
pub struct ResidualSpec {
    pub form: ResidualForm,
    pub map: MapSpec,
    pub k: KModel,
    source: Option<Source>,
}

impl fmt::Debug for ResidualSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ResidualSpec")
            .field("form", &self.form)
            .field("map", &self.map)
            .field("k", &self.k)
            .field("source", &self.source.as_ref().map(|_| "fn"))
            .finish()
    }
}

/// Point-dependent coefficients of the residual at one collocation point.
#[derive(Debug, Clone, Copy)]
pub struct PointResidual {
    form: ResidualForm,
    r: f64,
    jac: f64,
    djac: f64,
    partials: MapPartials,
    k2: f64,
    cot: f64,
    inv_sin2: f64,
    source: Complex64,
}

impl ResidualSpec {
    pub fn new(form: ResidualForm, map: MapSpec, k: KModel) -> Result<Self> {
        k.validate()?;
        if form == ResidualForm::ExplicitPolar && !map.is_radially_uniform() {
            return Err(Error::Construction("explicit_polar needs a constant boundary radius; use chain_rule_general".into()));
        }
        Ok(Self { form, map, k, source: None })
    }

    pub fn with_source(mut self, source: Source) -> Self {
        self.source = Some(source);
        self
    }

    pub fn prepare(&self, coords: &[f64]) -> Result<PointResidual> {
        if coords.len() != self.form.coord_count() {
            return Err(Error::Dimension { expected: self.form.coord_count(), got: coords.len() });
        }
        let (xi, angles) = (coords[0], &coords[1..]);
        let r = self.map.forward_map(xi, angles)?;
        let (jac, djac) = self.map.jacobian(xi)?;
        let partials = self.map.map_partials(xi, angles)?;
        let (mut cot, mut inv_sin2) = (0.0, 0.0);
        if matches!(self.form, ResidualForm::SphericalAxisym | ResidualForm::SphericalFull) {
            let t = angles[0];
            if !(POLE_BAND..=PI - POLE_BAND).contains(&t) {
                return Err(Error::Domain(format!("polar angle {t} inside the pole band")));
            }
            let (s, c) = t.sin_cos();
            cot = c / s;
            inv_sin2 = 1.0 / (s * s);
        }
        let source = match &self.source {
            Some(f) => {
                let d = direction(angles);
                f(&[r * d[0], r * d[1], r * d[2]])
            }
            None => Complex64::new(0.0, 0.0),
        };
        let k = self.k.at(r);
        Ok(PointResidual { form: self.form, r, jac, djac, partials, k2: k * k, cot, inv_sin2, source })
    }

    pub fn eval(&self, u: &CJet, coords: &[f64]) -> Result<Complex64> {
        Ok(self.prepare(coords)?.apply(u))
    }
}

impl PointResidual {
    /// Residual of the field jet `u`; affine in `u`.
    pub fn apply(&self, u: &CJet) -> Complex64 {
        let r = self.r;
        let lap = match self.form {
            ResidualForm::ExplicitPolar => {
                let (j, jp) = (self.jac, self.djac);
                u.d2(0, 0) / (j * j) + u.d(0) * (1.0 / (r * j) - jp / (j * j * j)) + u.d2(1, 1) / (r * r)
            }
            ResidualForm::ChainRuleGeneral => {
                let (ur, urr) = self.radial(u);
                let (_, uaa) = self.angular(u, 0);
                urr + ur / r + uaa / (r * r)
            }
            ResidualForm::SphericalAxisym | ResidualForm::SphericalFull => {
                let (ur, urr) = self.radial(u);
                let (ut, utt) = self.angular(u, 0);
                let mut ang = utt + ut * self.cot;
                if self.form == ResidualForm::SphericalFull {
                    ang += self.angular(u, 1).1 * self.inv_sin2;
                }
                urr + ur * (2.0 / r) + ang / (r * r)
            }
        };
        lap + u.value() * self.k2 - self.source
    }

    /// `(u_r, u_rr)` at fixed angles.
    fn radial(&self, u: &CJet) -> (Complex64, Complex64) {
        let p = &self.partials;
        (u.d(0) * p.dxi_dr, u.d2(0, 0) * (p.dxi_dr * p.dxi_dr) + u.d(0) * p.d2xi_dr2)
    }

    /// First and second derivative along angle `a` at fixed radius.
    fn angular(&self, u: &CJet, a: usize) -> (Complex64, Complex64) {
        let p = &self.partials;
        let (xa, xaa) = (p.dxi_dangle[a], p.d2xi_dangle2[a]);
        let c = a + 1;
        let first = u.d(0) * xa + u.d(c);
        let second = u.d2(0, 0) * (xa * xa) + u.d2(0, c) * (2.0 * xa) + u.d2(c, c) + u.d(0) * xaa;
        (first, second)
    }

    pub fn radius(&self) -> f64 {
        self.r
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ansatz::{AnsatzKind, AnsatzSpec};
    use crate::diff::{Layout, RJet};
    use crate::geometry::{BoundaryData, DirichletData, Geometry};
    use crate::network::{InputEncoding, NetParams};
    use crate::oracles;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::TAU;

    fn circle_map() -> MapSpec {
        MapSpec::new(1.0, 2.0).unwrap()
    }

    fn jets(coords: &[f64], order: usize) -> Vec<RJet> {
        let l = Layout::get(coords.len(), order);
        coords.iter().enumerate().map(|(i, &v)| RJet::variable(l, i, v)).collect()
    }

    #[test]
    fn hankel_radiation_solution_is_null() {
        let map = circle_map();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for k in [2.0, 5.0] {
            let res = ResidualSpec::new(ResidualForm::ExplicitPolar, map.clone(), KModel::Constant(k)).unwrap();
            for _ in 0..1000 {
                let c = [rng.random_range(-1.0..0.99), rng.random_range(0.0..TAU)];
                let cj = jets(&c, 2);
                let r = map.radius_jet(&cj[0], &RJet::constant(cj[0].layout(), 1.0));
                let u = oracles::radiation_exact_jet(k, Complex64::new(100.0, 0.0), &r).unwrap();
                let v = res.eval(&u, &c).unwrap();
                assert!(v.norm() <= 1e-8, "k={k} residual {}", v.norm());
            }
        }
    }

    #[test]
    fn zero_field_and_mie_mode() {
        let map = circle_map();
        let k = 3.0;
        let res = ResidualSpec::new(ResidualForm::ExplicitPolar, map.clone(), KModel::Constant(k)).unwrap();
        let l = Layout::get(2, 2);
        assert_eq!(res.eval(&CJet::zero(l), &[0.1, 0.2]).unwrap(), Complex64::new(0.0, 0.0));
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..1000 {
            let c = [rng.random_range(-1.0..0.99), rng.random_range(0.0..TAU)];
            let cj = jets(&c, 2);
            let r = map.radius_jet(&cj[0], &RJet::constant(l, 1.0));
            let u = oracles::hankel_jet(1, &r.scale(k)).unwrap() * cj[1].cos().to_complex();
            assert!(res.eval(&u, &c).unwrap().norm() <= 1e-8);
        }
    }

    #[test]
    fn constant_field_gives_k_squared() {
        let res = ResidualSpec::new(ResidualForm::ChainRuleGeneral, circle_map(), KModel::Constant(2.5)).unwrap();
        let u = CJet::constant(Layout::get(2, 2), Complex64::new(1.5, -0.5));
        let v = res.eval(&u, &[0.3, 1.0]).unwrap();
        assert!((v - Complex64::new(1.5, -0.5) * 6.25).norm() < 1e-14);
    }

    #[test]
    fn explicit_and_general_forms_agree_on_circles() {
        let g = Geometry::Circle { radius: 1.0 };
        let map = MapSpec::with_boundary(g.clone(), 2.0).unwrap();
        let data = BoundaryData::Dirichlet(DirichletData::SoundSoft { k: 3.0, direction: [1.0, 0.0, 0.0] });
        let a = AnsatzSpec::new(AnsatzKind::DirichletRadial, g, data, map.clone(), KModel::Constant(3.0)).unwrap();
        let net = NetParams::init(&[3, 32, 32, 2], 9).unwrap();
        let e = ResidualSpec::new(ResidualForm::ExplicitPolar, map.clone(), KModel::Constant(3.0)).unwrap();
        let gnl = ResidualSpec::new(ResidualForm::ChainRuleGeneral, map, KModel::Constant(3.0)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (mut diff, mut norm) = (0.0, 0.0);
        for _ in 0..1000 {
            let c = [rng.random_range(-1.0..0.999), rng.random_range(0.0..TAU)];
            let cj = jets(&c, 2);
            let [re, im] = net.forward_jet(&InputEncoding::Polar.encode(&cj)).unwrap();
            let u = a.field(&c, &CJet::from_parts(&re, &im)).unwrap();
            let (x, y) = (e.eval(&u, &c).unwrap(), gnl.eval(&u, &c).unwrap());
            diff += (x - y).norm_sqr();
            norm += x.norm_sqr();
        }
        assert!((diff / norm).sqrt() <= 1e-10, "relative difference {:e}", (diff / norm).sqrt());
    }

    #[test]
    fn general_form_is_coordinate_invariant_on_ellipse_map() {
        let g = Geometry::Ellipse { a: 2.0, b: 1.0 };
        let map = MapSpec::with_boundary(g, 2.0).unwrap();
        let k = 1.0;
        let res = ResidualSpec::new(ResidualForm::ChainRuleGeneral, map.clone(), KModel::Constant(k)).unwrap();
        let n_max = crate::special::mie_truncation(k);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..1000 {
            let c = [rng.random_range(-1.0..0.99), rng.random_range(0.0..TAU)];
            let cj = jets(&c, 2);
            let rb = map.boundary_radius_jet(&cj[1..]);
            let r = map.radius_jet(&cj[0], &rb);
            let u = oracles::mie2d_jet(k, 1.0, &r, &cj[1], n_max).unwrap();
            let v = res.eval(&u, &c).unwrap();
            assert!(v.norm() <= 1e-7, "residual {}", v.norm());
        }
    }

    #[test]
    fn spherical_solutions_are_null() {
        let map = circle_map();
        let k = 5.0;
        let axi = ResidualSpec::new(ResidualForm::SphericalAxisym, map.clone(), KModel::Constant(k)).unwrap();
        let full = ResidualSpec::new(ResidualForm::SphericalFull, map.clone(), KModel::Constant(k)).unwrap();
        let n_max = crate::special::mie_truncation(k);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let c = [rng.random_range(-1.0..0.99), rng.random_range(POLE_BAND..PI - POLE_BAND)];
            let cj = jets(&c, 2);
            let r = map.radius_jet(&cj[0], &RJet::constant(cj[0].layout(), 1.0));
            let mono = oracles::spherical_hankel_jet(0, &r.scale(k)).unwrap();
            assert!(axi.eval(&mono, &c).unwrap().norm() <= 1e-9);
            let u = oracles::mie3d_jet(k, 1.0, &r, &cj[1], n_max).unwrap();
            let v = axi.eval(&u, &c).unwrap();
            assert!(v.norm() <= 1e-7, "residual {}", v.norm());
            // the same field seen in full spherical coordinates, with its axis along z
            let c3 = [c[0], c[1], rng.random_range(0.0..TAU)];
            let cj3 = jets(&c3, 2);
            let r3 = map.radius_jet(&cj3[0], &RJet::constant(cj3[0].layout(), 1.0));
            let u3 = oracles::mie3d_jet(k, 1.0, &r3, &cj3[1], n_max).unwrap();
            assert!(full.eval(&u3, &c3).unwrap().norm() <= 1e-7);
        }
        assert!(matches!(axi.eval(&CJet::zero(Layout::get(2, 2)), &[0.0, 0.001]), Err(Error::Domain(_))));
    }

    #[test]
    fn variable_wavenumber_reduces_and_plugs_in() {
        let map = circle_map();
        let konst = ResidualSpec::new(ResidualForm::ExplicitPolar, map.clone(), KModel::Constant(2.0)).unwrap();
        let flat = ResidualSpec::new(ResidualForm::ExplicitPolar, map.clone(), KModel::Decaying { k_inf: 2.0, alpha: 0.0, decay: 1.0 })
            .unwrap();
        let l = Layout::get(2, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..100 {
            let coeffs: Vec<Complex64> = (0..l.len()).map(|_| Complex64::new(rng.random(), rng.random())).collect();
            let u = CJet::from_coeffs(l, &coeffs);
            let c = [rng.random_range(-1.0..0.99), rng.random_range(0.0..TAU)];
            assert_eq!(konst.eval(&u, &c).unwrap(), flat.eval(&u, &c).unwrap());
        }
        let var = ResidualSpec::new(ResidualForm::ExplicitPolar, map, KModel::Decaying { k_inf: 2.0, alpha: 0.5, decay: 1.0 }).unwrap();
        let one = CJet::constant(l, Complex64::new(1.0, 0.0));
        assert!((var.eval(&one, &[-1.0, 0.0]).unwrap() - Complex64::new(9.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn residual_is_linear_and_accepts_source() {
        let res = ResidualSpec::new(ResidualForm::ExplicitPolar, circle_map(), KModel::Constant(2.0)).unwrap();
        let l = Layout::get(2, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut rand_jet = || CJet::from_coeffs(l, &(0..l.len()).map(|_| Complex64::new(rng.random(), rng.random())).collect::<Vec<_>>());
        let (u1, u2) = (rand_jet(), rand_jet());
        let (a, b) = (Complex64::new(0.3, 1.1), Complex64::new(-2.0, 0.5));
        let c = [0.2, 0.7];
        let lhs = res.eval(&(u1.mul_scalar(a) + u2.mul_scalar(b)), &c).unwrap();
        let rhs = res.eval(&u1, &c).unwrap() * a + res.eval(&u2, &c).unwrap() * b;
        assert!((lhs - rhs).norm() < 1e-12 * rhs.norm());
        let sourced = res.clone().with_source(Arc::new(|_: &[f64; 3]| Complex64::new(1.0, 0.0)));
        assert_eq!(sourced.eval(&CJet::zero(l), &c).unwrap(), Complex64::new(-1.0, 0.0));
    }
}
