//! Hard-constraint field constructions.
//!
//! The predicted field is `û = Φ·E`: a far-field factor `Φ` carrying the
//! outgoing phase and geometric decay, times an envelope `E` built from the
//! network output so that the boundary condition holds for every parameter
//! vector. All quantities are jets in the computational coordinates
//! `(ξ, angles)`.

use num_complex::Complex64;

use crate::diff::{CJet, Layout, RJet};
use crate::error::{Error, Result};
use crate::geometry::{direction_jet, BoundaryData, DirichletData, Geometry, NeumannData};
use crate::mapping::MapSpec;

/// Wavenumber as a function of radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KModel {
    Constant(f64),
    /// `k(r) = k∞·(1 + α·e^{−(r−1)/d})`.
    Decaying { k_inf: f64, alpha: f64, decay: f64 },
}

impl KModel {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            KModel::Constant(k) => k > 0.0 && k.is_finite(),
            KModel::Decaying { k_inf, alpha, decay } => k_inf > 0.0 && alpha >= 0.0 && decay > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Construction(format!("invalid wavenumber model {self:?}")))
        }
    }

    pub fn at(&self, r: f64) -> f64 {
        match *self {
            KModel::Constant(k) => k,
            KModel::Decaying { k_inf, alpha, decay } => k_inf * (1.0 + alpha * (-(r - 1.0) / decay).exp()),
        }
    }

    /// Background wavenumber seen at infinity.
    pub fn far_field(&self) -> f64 {
        match *self {
            KModel::Constant(k) => k,
            KModel::Decaying { k_inf, .. } => k_inf,
        }
    }

    pub fn is_constant(&self) -> bool {
        match *self {
            KModel::Constant(_) => true,
            KModel::Decaying { alpha, .. } => alpha == 0.0,
        }
    }

    /// Antiderivative `P(r) = ∫₁^r k(τ) dτ`.
    pub fn phase(&self, r: f64) -> f64 {
        match *self {
            KModel::Constant(k) => k * (r - 1.0),
            KModel::Decaying { k_inf, alpha, decay } => {
                k_inf * (r - 1.0) + k_inf * alpha * decay * (1.0 - (-(r - 1.0) / decay).exp())
            }
        }
    }

    pub fn phase_jet(&self, r: &RJet) -> RJet {
        match *self {
            KModel::Constant(k) => r.add_scalar(-1.0).scale(k),
            KModel::Decaying { k_inf, alpha, decay } => {
                let e = r.add_scalar(-1.0).scale(-1.0 / decay).exp();
                r.add_scalar(-1.0).scale(k_inf) - e.scale(k_inf * alpha * decay).add_scalar(-k_inf * alpha * decay)
            }
        }
    }
}

/// Outgoing far-field factor `Φ = e^{i(P(r) − P(r_ref))}/r^{(d−1)/2}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticFactor {
    pub k: KModel,
    pub dim: usize,
    pub r_ref: f64,
}

impl AsymptoticFactor {
    pub fn new(k: KModel, dim: usize, r_ref: f64) -> Result<Self> {
        k.validate()?;
        if !(dim == 2 || dim == 3) || !(r_ref > 0.0) {
            return Err(Error::Construction(format!("factor needs d in {{2, 3}} and r_ref > 0, got d={dim}, r_ref={r_ref}")));
        }
        Ok(Self { k, dim, r_ref })
    }

    fn decay_exponent(&self) -> f64 {
        -0.5 * (self.dim as f64 - 1.0)
    }

    /// `Φ(r)` with the stored phase reference.
    pub fn phi(&self, r: &RJet) -> CJet {
        let phase = self.k.phase_jet(r).add_scalar(-self.k.phase(self.r_ref));
        phase.cis().mul_real(&r.powf(self.decay_exponent()))
    }

    /// `Φ(r)` with a phase reference that varies along the boundary.
    pub fn phi_with_reference(&self, r: &RJet, r_ref: &RJet) -> CJet {
        let phase = self.k.phase_jet(r) - self.k.phase_jet(r_ref);
        phase.cis().mul_real(&r.powf(self.decay_exponent()))
    }

    /// Point value of `Φ(r)`.
    pub fn value(&self, r: f64) -> Complex64 {
        Complex64::from_polar(r.powf(self.decay_exponent()), self.k.phase(r) - self.k.phase(self.r_ref))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnsatzKind {
    DirichletRadial,
    NeumannShielded,
    WkbRadial,
}

impl AnsatzKind {
    pub fn name(self) -> &'static str {
        match self {
            AnsatzKind::DirichletRadial => "dirichlet_radial",
            AnsatzKind::NeumannShielded => "neumann_shielded",
            AnsatzKind::WkbRadial => "wkb_radial",
        }
    }
}

/// Geometric quantities at one computational point, as jets.
#[derive(Debug, Clone)]
pub struct Frame {
    pub coords: Vec<RJet>,
    pub r: RJet,
    pub rb: RJet,
    /// Physical position, padded to three components.
    pub x: [RJet; 3],
    /// `∇ζ_c` for every computational coordinate `ζ_c`.
    pub grad_coords: Vec<[RJet; 3]>,
}

impl Frame {
    pub fn new(map: &MapSpec, coords: &[f64], layout: &'static Layout) -> Result<Self> {
        if coords.len() != layout.dims() {
            return Err(Error::Dimension { expected: layout.dims(), got: coords.len() });
        }
        if !(-1.0..1.0).contains(&coords[0]) {
            return Err(Error::Domain(format!("computational coordinate ξ = {} outside [-1, 1)", coords[0])));
        }
        let cj: Vec<RJet> = coords.iter().enumerate().map(|(i, &v)| RJet::variable(layout, i, v)).collect();
        let angles = &cj[1..];
        let rb = map.boundary_radius_jet(angles);
        let r = map.radius_jet(&cj[0], &rb);
        let dir = direction_jet(angles);
        let x = [r * dir[0], r * dir[1], r * dir[2]];
        let inv_r = r.recip();
        let mut angle_grads: Vec<[RJet; 3]> = Vec::with_capacity(angles.len());
        if angles.len() == 1 {
            let (s, c) = (angles[0].sin(), angles[0].cos());
            angle_grads.push([-(s * inv_r), c * inv_r, RJet::zero(layout)]);
        } else {
            let (st, ct) = (angles[0].sin(), angles[0].cos());
            let (sp, cp) = (angles[1].sin(), angles[1].cos());
            angle_grads.push([ct * cp * inv_r, ct * sp * inv_r, -(st * inv_r)]);
            let inv = (r * st).recip();
            angle_grads.push([-(sp * inv), cp * inv, RJet::zero(layout)]);
        }
        // ξ_r = (1−ξ)²/(2L), ξ_a = −∂_a r_b · ξ_r
        let one_minus = RJet::constant(layout, 1.0) - cj[0];
        let xi_r = one_minus.square().scale(0.5 / map.scale);
        let mut grad_xi = [dir[0] * xi_r, dir[1] * xi_r, dir[2] * xi_r];
        for (a, g) in angle_grads.iter().enumerate() {
            let xi_a = -(rb.derivative(a + 1) * xi_r);
            for (gx, ga) in grad_xi.iter_mut().zip(g) {
                *gx += xi_a * *ga;
            }
        }
        let mut grad_coords = vec![grad_xi];
        grad_coords.extend(angle_grads);
        Ok(Self { coords: cj, r, rb, x, grad_coords })
    }

    pub fn layout(&self) -> &'static Layout {
        self.r.layout()
    }

    /// Physical gradient of a field given as a jet in computational coordinates.
    pub fn gradient(&self, f: &CJet) -> [Complex64; 3] {
        let mut g = [Complex64::new(0.0, 0.0); 3];
        for (c, gc) in self.grad_coords.iter().enumerate() {
            let fc = f.d(c);
            for (gi, v) in g.iter_mut().zip(gc) {
                *gi += fc * v.value();
            }
        }
        g
    }

    /// `∇f · v` as a jet, one order shorter than the inputs.
    fn directional(&self, f: &CJet, v: &[RJet]) -> CJet {
        let mut out = CJet::zero(self.layout());
        for (c, w) in self.weights(v).iter().enumerate() {
            out += f.derivative(c).mul_real(w);
        }
        out
    }

    /// `∇ζ_c · v` for every coordinate.
    fn weights(&self, v: &[RJet]) -> Vec<RJet> {
        self.grad_coords
            .iter()
            .map(|g| g.iter().zip(v).fold(RJet::zero(self.layout()), |acc, (a, b)| acc + *a * *b))
            .collect()
    }
}

/// A complete hard-constraint construction.
#[derive(Debug, Clone, PartialEq)]
pub struct AnsatzSpec {
    pub kind: AnsatzKind,
    pub geometry: Geometry,
    pub data: BoundaryData,
    pub map: MapSpec,
    pub factor: AsymptoticFactor,
    /// Length `ℓ` of the normalized distance `d/(1 + d/ℓ)` used by the Neumann envelope.
    pub shield_length: f64,
}

/// Per-point precomputation; the field is affine in the network output.
#[derive(Debug, Clone)]
pub enum Prepared {
    Dirichlet { phi: CJet, coef: CJet, ramp: RJet },
    Neumann { phi: CJet, dist: RJet, weights: Vec<RJet>, log_grad: CJet, target: CJet },
}

impl Prepared {
    /// `û` for the network output jet `n`.
    pub fn field(&self, n: &CJet) -> CJet {
        match self {
            Prepared::Dirichlet { phi, coef, ramp } => *phi * (*coef + n.mul_real(ramp)),
            Prepared::Neumann { phi, dist, weights, log_grad, target } => {
                let mut flux = *n * *log_grad - *target;
                for (c, w) in weights.iter().enumerate() {
                    flux += n.derivative(c).mul_real(w);
                }
                *phi * (*n - flux.mul_real(dist))
            }
        }
    }
}

impl AnsatzSpec {
    /// Builds the construction, choosing the phase reference from the map.
    pub fn new(kind: AnsatzKind, geometry: Geometry, data: BoundaryData, map: MapSpec, k: KModel) -> Result<Self> {
        geometry.validate()?;
        let r_ref = map.r_in;
        let factor = AsymptoticFactor::new(k, geometry.dimension(), r_ref)?;
        match (kind, &data) {
            (AnsatzKind::DirichletRadial, BoundaryData::Dirichlet(_)) => {
                if !k.is_constant() {
                    return Err(Error::Construction("variable wavenumber needs the wkb_radial ansatz".into()));
                }
            }
            (AnsatzKind::WkbRadial, BoundaryData::Dirichlet(_)) => {
                if !geometry.has_constant_radius() {
                    return Err(Error::Construction("wkb_radial needs a constant boundary radius".into()));
                }
            }
            (AnsatzKind::NeumannShielded, BoundaryData::Neumann(_)) => {
                if !geometry.supports_neumann() {
                    return Err(Error::Construction(format!(
                        "{} lacks a smooth normal field; neumann_shielded needs a circle, sphere, canyon or ellipse",
                        geometry.name()
                    )));
                }
            }
            _ => return Err(Error::Construction(format!("ansatz {} does not match the boundary data", kind.name()))),
        }
        if map.boundary.as_ref().is_some_and(|g| *g != geometry) {
            return Err(Error::Construction("map boundary differs from the ansatz geometry".into()));
        }
        let shield_length = map.scale;
        Ok(Self { kind, geometry, data, map, factor, shield_length })
    }

    /// Number of computational coordinates `(ξ, angles)`.
    pub fn coord_count(&self) -> usize {
        1 + self.geometry.angle_count()
    }

    /// Jet layout needed for second-order residuals of this field.
    pub fn layout(&self) -> &'static Layout {
        let order = if self.kind == AnsatzKind::NeumannShielded { 3 } else { 2 };
        Layout::get(self.coord_count(), order)
    }

    /// Characteristic amplitude of the boundary data.
    pub fn magnitude(&self) -> f64 {
        match &self.data {
            BoundaryData::Dirichlet(d) => d.magnitude(),
            BoundaryData::Neumann(n) => n.magnitude(),
        }
    }

    fn phi(&self, frame: &Frame) -> CJet {
        if self.map.is_radially_uniform() {
            self.factor.phi(&frame.r)
        } else {
            self.factor.phi_with_reference(&frame.r, &frame.rb)
        }
    }

    /// `Φ` on the boundary point of the frame's angles.
    fn phi_boundary(&self, frame: &Frame) -> CJet {
        if self.map.is_radially_uniform() {
            self.factor.phi(&frame.rb)
        } else {
            self.factor.phi_with_reference(&frame.rb, &frame.rb)
        }
    }

    pub fn prepare(&self, coords: &[f64]) -> Result<Prepared> {
        self.prepare_in(coords, self.layout())
    }

    /// Precomputes the point in an explicit layout (order ≥ 2, or ≥ 3 for Neumann).
    pub fn prepare_in(&self, coords: &[f64], layout: &'static Layout) -> Result<Prepared> {
        let frame = Frame::new(&self.map, coords, layout)?;
        let phi = self.phi(&frame);
        match &self.data {
            BoundaryData::Dirichlet(g) => Ok(self.prepare_dirichlet(g, &frame, phi)),
            BoundaryData::Neumann(g) => self.prepare_neumann(g, &frame, phi),
        }
    }

    fn prepare_dirichlet(&self, g: &DirichletData, frame: &Frame, phi: CJet) -> Prepared {
        let angles = &frame.coords[1..];
        let dir = direction_jet(angles);
        let xb: Vec<RJet> = dir.iter().map(|d| frame.rb * *d).collect();
        let coef = g.value_jet(&xb[..self.geometry.dimension()]) / self.phi_boundary(frame);
        let ramp = frame.coords[0].add_scalar(1.0);
        Prepared::Dirichlet { phi, coef, ramp }
    }

    fn prepare_neumann(&self, g: &NeumannData, frame: &Frame, phi: CJet) -> Result<Prepared> {
        let dim = self.geometry.dimension();
        let (d, grad_d) = self.geometry.distance_jet(&frame.x[..dim])?;
        let layout = frame.layout();
        // d̃ = d/(1 + d/ℓ) keeps d̃ = 0 and ∇d̃ = n on Γ while staying bounded.
        let inv = d.scale(1.0 / self.shield_length).add_scalar(1.0).recip();
        let dist = d * inv;
        let shrink = inv.square();
        let mut grad = [RJet::zero(layout), RJet::zero(layout), RJet::zero(layout)];
        for (gi, gd) in grad.iter_mut().zip(&grad_d) {
            *gi = *gd * shrink;
        }
        let weights = frame.weights(&grad);
        let log_grad = frame.directional(&phi, &grad) / phi;
        // g_N is extended off Γ as g_N(x_b)·Φ(x)/Φ(x_b) along rays of constant angle,
        // so the compensation term radiates like the rest of the field.
        let angles = &frame.coords[1..];
        let dir = direction_jet(angles);
        let xb: Vec<RJet> = dir.iter().map(|c| frame.rb * *c).collect();
        let normal = self.geometry.outward_normal_jet(angles);
        let target = g.value_jet(&xb[..dim], &normal[..dim]).mul_real(&shrink) / self.phi_boundary(frame);
        Ok(Prepared::Neumann { phi, dist, weights, log_grad, target })
    }

    /// `û` at one point for the network output jet `n`.
    pub fn field(&self, coords: &[f64], n: &CJet) -> Result<CJet> {
        Ok(self.prepare_in(coords, n.layout())?.field(n))
    }
}

/// Radiation-condition defect `r^{(d−1)/2}·|∂û/∂r − ik∞û|` from a field jet.
pub fn sommerfeld_defect(field: &CJet, map: &MapSpec, coords: &[f64], k_inf: f64, dim: usize) -> Result<f64> {
    let angles = &coords[1..];
    let r = map.forward_map(coords[0], angles)?;
    let (jac, _) = map.jacobian(coords[0])?;
    let ur = field.d(0) / jac;
    let defect = (ur - Complex64::new(0.0, k_inf) * field.value()).norm();
    Ok(r.powf(0.5 * (dim as f64 - 1.0)) * defect)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::direction;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{PI, TAU};

    fn random_jet(layout: &'static Layout, rng: &mut ChaCha8Rng) -> CJet {
        let c: Vec<Complex64> = (0..layout.len()).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        CJet::from_coeffs(layout, &c)
    }

    fn circle_radiation(k: f64) -> AnsatzSpec {
        let g = Geometry::Circle { radius: 1.0 };
        let map = MapSpec::with_boundary(g.clone(), 2.0).unwrap();
        let data = BoundaryData::Dirichlet(DirichletData::Constant(Complex64::new(100.0, 0.0)));
        AnsatzSpec::new(AnsatzKind::DirichletRadial, g, data, map, KModel::Constant(k)).unwrap()
    }

    #[test]
    fn factor_values() {
        let f = AsymptoticFactor::new(KModel::Constant(1.0), 2, 1.0).unwrap();
        assert_eq!(f.value(1.0), Complex64::new(1.0, 0.0));
        let v = f.value(4.0);
        let expect = Complex64::from_polar(0.5, 3.0);
        assert!((v - expect).norm() < 1e-15);
        assert!((v.re + 0.49500).abs() < 1e-5 && (v.im - 0.07056).abs() < 1e-5);
        let wkb = KModel::Decaying { k_inf: 2.0, alpha: 0.5, decay: 1.0 };
        assert_eq!(wkb.phase(1.0), 0.0);
        assert!((wkb.phase(2.0) - (2.0 + 1.0 - (-1.0f64).exp())).abs() < 1e-15);
        assert!((wkb.phase(2.0) - 2.63212).abs() < 1e-5);
        assert_eq!(wkb.at(1.0), 3.0);
    }

    #[test]
    fn factor_jet_matches_value_and_modulus() {
        let l = Layout::get(1, 2);
        for model in [KModel::Constant(3.0), KModel::Decaying { k_inf: 2.0, alpha: 0.5, decay: 1.0 }] {
            for dim in [2, 3] {
                let f = AsymptoticFactor::new(model, dim, 1.0).unwrap();
                for &r in &[1.0, 1.7, 5.0, 40.0] {
                    let j = f.phi(&RJet::variable(l, 0, r));
                    assert!((j.value() - f.value(r)).norm() < 1e-14);
                    assert!((j.value().norm() - r.powf(-0.5 * (dim as f64 - 1.0))).abs() < 1e-14);
                    // Φ'/Φ = i k(r) − (d−1)/(2r)
                    let ratio = j.d(0) / j.value();
                    assert!((ratio - Complex64::new(-0.5 * (dim as f64 - 1.0) / r, model.at(r))).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn wkb_phase_derivative_is_wavenumber() {
        let model = KModel::Decaying { k_inf: 2.0, alpha: 0.5, decay: 1.3 };
        let l = Layout::get(1, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let r = rng.random_range(1.0..50.0);
            let p = model.phase_jet(&RJet::variable(l, 0, r));
            assert!((p.d(0) - model.at(r)).abs() <= 1e-12);
            assert!((p.value() - model.phase(r)).abs() <= 1e-12 * (1.0 + r));
        }
    }

    #[test]
    fn dirichlet_anchor_and_zero_network() {
        let a = circle_radiation(3.0);
        let l = a.layout();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let th = rng.random_range(0.0..TAU);
            let n = random_jet(l, &mut rng);
            let u = a.field(&[-1.0, th], &n).unwrap();
            assert_eq!(u.value(), Complex64::new(100.0, 0.0));
            let xi = rng.random_range(-1.0..0.999);
            let u0 = a.field(&[xi, th], &CJet::zero(l)).unwrap();
            let r = a.map.forward_map(xi, &[th]).unwrap();
            assert!((u0.value() - a.factor.value(r) * 100.0).norm() < 1e-12);
        }
    }

    #[test]
    fn sound_soft_circle_boundary_value() {
        let g = Geometry::Circle { radius: 1.0 };
        let map = MapSpec::with_boundary(g.clone(), 2.0).unwrap();
        let data = BoundaryData::Dirichlet(DirichletData::SoundSoft { k: 1.0, direction: [1.0, 0.0, 0.0] });
        let a = AnsatzSpec::new(AnsatzKind::DirichletRadial, g, data, map, KModel::Constant(1.0)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let th = rng.random_range(0.0..TAU);
            let u = a.field(&[-1.0, th], &random_jet(a.layout(), &mut rng)).unwrap();
            let expect = -Complex64::from_polar(1.0, th.cos());
            assert!((u.value() - expect).norm() <= 1e-13);
        }
    }

    #[test]
    fn generalized_map_reference_is_boundary_radius() {
        let g = Geometry::Ellipse { a: 2.0, b: 1.0 };
        let map = MapSpec::with_boundary(g.clone(), 2.0).unwrap();
        let data = BoundaryData::Dirichlet(DirichletData::SoundSoft { k: 1.0, direction: [1.0, 0.0, 0.0] });
        let a = AnsatzSpec::new(AnsatzKind::DirichletRadial, g.clone(), data, map, KModel::Constant(1.0)).unwrap();
        for &th in &[0.0, 0.4, 1.2, 2.9] {
            if let Prepared::Dirichlet { coef, .. } = a.prepare(&[-1.0, th]).unwrap() {
                let rb = g.boundary_radius(&[th]);
                assert!((coef.value().norm() - rb.sqrt()).abs() < 1e-12);
            } else {
                panic!("expected a Dirichlet preparation");
            }
        }
    }

    fn canyon(theta_inc: f64) -> AnsatzSpec {
        let g = Geometry::CanyonCavity { radius: 1.0 };
        let map = MapSpec::with_boundary(g.clone(), 3.0).unwrap();
        let data = BoundaryData::Neumann(NeumannData::Canyon { k: PI, theta_inc });
        AnsatzSpec::new(AnsatzKind::NeumannShielded, g, data, map, KModel::Constant(PI)).unwrap()
    }

    #[test]
    fn neumann_normal_derivative_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for theta_inc in [PI / 2.0, PI / 6.0] {
            let a = canyon(theta_inc);
            let l = a.layout();
            for _ in 0..200 {
                let th = rng.random_range(0.0..TAU);
                let u = a.field(&[-1.0, th], &random_jet(l, &mut rng)).unwrap();
                let frame = Frame::new(&a.map, &[-1.0, th], l).unwrap();
                let g = frame.gradient(&u);
                let n = direction(&[th]);
                let dn = g[0] * n[0] + g[1] * n[1];
                let du0 = crate::geometry::background_radial_derivative(PI, theta_inc, 1.0, th);
                assert!((dn + du0).norm() <= 1e-9, "defect {}", (dn + du0).norm());
            }
        }
    }

    #[test]
    fn homogeneous_neumann_and_zero_network() {
        let g = Geometry::CanyonCavity { radius: 1.0 };
        let map = MapSpec::with_boundary(g.clone(), 3.0).unwrap();
        let data = BoundaryData::Neumann(NeumannData::Zero);
        let a = AnsatzSpec::new(AnsatzKind::NeumannShielded, g, data, map, KModel::Constant(PI)).unwrap();
        let l = a.layout();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let th = rng.random_range(0.0..TAU);
            let u = a.field(&[-1.0, th], &random_jet(l, &mut rng)).unwrap();
            let (jac, _) = a.map.jacobian(-1.0).unwrap();
            assert!((u.d(0) / jac).norm() <= 1e-10);
            let xi = rng.random_range(-1.0..0.99);
            let z = a.field(&[xi, th], &CJet::zero(l)).unwrap();
            assert!(z.coeffs().iter().all(|c| c.norm() == 0.0));
        }
    }

    #[test]
    fn neumann_rejected_on_polygons() {
        let g = Geometry::RegularPolygon { sides: 6, circumradius: 1.0 };
        let map = MapSpec::with_boundary(g.clone(), 2.0).unwrap();
        let data = BoundaryData::Neumann(NeumannData::Zero);
        assert!(matches!(
            AnsatzSpec::new(AnsatzKind::NeumannShielded, g, data, map, KModel::Constant(1.0)),
            Err(Error::Construction(_))
        ));
    }

    #[test]
    fn bare_factor_defect_decays_as_inverse_sqrt() {
        let a = circle_radiation(2.0);
        let l = a.layout();
        let defect_at = |r: f64| {
            let xi = a.map.inverse_map(r, &[0.3]).unwrap();
            let u = a.field(&[xi, 0.3], &CJet::zero(l)).unwrap();
            (sommerfeld_defect(&u, &a.map, &[xi, 0.3], 2.0, 2).unwrap(), u.value().norm())
        };
        let ((d1, u1), (d4, u4)) = (defect_at(50.0), defect_at(200.0));
        // relative to the local amplitude the defect falls as r^{-1/2}
        assert!(((d1 / u1) / (d4 / u4) - 2.0).abs() < 0.02);
        // −Φ/(2r) is the whole defect of the bare factor
        assert!((d1 - 100.0 / (2.0 * 50.0)).abs() < 1e-9);
        assert!((d1 / d4 - 4.0).abs() < 1e-6);
    }

    #[test]
    fn defect_decreases_toward_infinity() {
        use crate::network::{InputEncoding, NetParams};
        let a = circle_radiation(2.0);
        let l = a.layout();
        for seed in 0..10 {
            let net = NetParams::init(&[3, 16, 16, 2], seed).unwrap().with_output_scale(100.0);
            let mut last = f64::INFINITY;
            for xi in [0.9, 0.99, 0.999] {
                let coords = [xi, 1.0];
                let cj: Vec<RJet> = coords.iter().enumerate().map(|(i, &v)| RJet::variable(l, i, v)).collect();
                let [re, im] = net.forward_jet(&InputEncoding::Polar.encode(&cj)).unwrap();
                let n = CJet::from_parts(&re, &im).scale(net.output_scale());
                let u = a.prepare(&coords).unwrap().field(&n);
                let d = sommerfeld_defect(&u, &a.map, &coords, 2.0, 2).unwrap();
                assert!(d < last);
                last = d;
            }
        }
    }
}
