//! Algebraic compactification of the exterior radius.
//!
//! `r(ξ) = r_b + L (1 + ξ)/(1 − ξ)` sends `ξ ∈ [−1, 1)` onto `[r_b, ∞)`.
//! When a boundary geometry is attached, `r_b` depends on the direction and
//! the map follows the scatterer surface; otherwise `r_b ≡ R_in`.

use crate::diff::{Layout, RJet};
use crate::error::{Error, Result};
use crate::geometry::Geometry;

/// Largest `ξ` used for collocation; beyond it the factor carries the field.
pub const XI_MAX: f64 = 0.999;

#[derive(Debug, Clone, PartialEq)]
pub struct MapSpec {
    pub r_in: f64,
    pub scale: f64,
    pub boundary: Option<Geometry>,
}

/// First and second partials of `ξ(r, angles)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapPartials {
    pub dxi_dr: f64,
    pub d2xi_dr2: f64,
    /// `∂ξ/∂θ`, `∂ξ/∂φ` at fixed `r` (unused entries are zero).
    pub dxi_dangle: [f64; 2],
    pub d2xi_dangle2: [f64; 2],
}

impl MapSpec {
    pub fn new(r_in: f64, scale: f64) -> Result<Self> {
        if !(scale > 0.0) || !(r_in > 0.0) {
            return Err(Error::Construction(format!("map needs R_in > 0 and L > 0, got R_in={r_in}, L={scale}")));
        }
        Ok(Self { r_in, scale, boundary: None })
    }

    /// Map following the boundary radius of `geometry`.
    pub fn with_boundary(geometry: Geometry, scale: f64) -> Result<Self> {
        let r_in = geometry.reference_radius();
        let mut spec = Self::new(r_in, scale)?;
        spec.boundary = Some(geometry);
        Ok(spec)
    }

    /// `r_b` in the given direction (`θ` in 2D and axisymmetric 3D, `(θ, φ)` in full 3D).
    pub fn boundary_radius(&self, angles: &[f64]) -> f64 {
        match &self.boundary {
            Some(g) => g.boundary_radius(angles),
            None => self.r_in,
        }
    }

    /// `r_b` as a jet in the angular coordinates.
    pub fn boundary_radius_jet(&self, angles: &[RJet]) -> RJet {
        match &self.boundary {
            Some(g) => g.boundary_radius_jet(angles),
            None => RJet::constant(angles[0].layout(), self.r_in),
        }
    }

    pub fn is_radially_uniform(&self) -> bool {
        self.boundary.as_ref().is_none_or(|g| g.has_constant_radius())
    }

    pub fn forward_map(&self, xi: f64, angles: &[f64]) -> Result<f64> {
        check_xi(xi)?;
        Ok(self.boundary_radius(angles) + self.scale * (1.0 + xi) / (1.0 - xi))
    }

    pub fn inverse_map(&self, r: f64, angles: &[f64]) -> Result<f64> {
        let rb = self.boundary_radius(angles);
        if r < rb || !r.is_finite() {
            return Err(Error::Domain(format!("radius {r} lies inside the boundary radius {rb}")));
        }
        let s = r - rb;
        Ok((s - self.scale) / (s + self.scale))
    }

    /// `(J, J')` with `J = dr/dξ = 2L/(1−ξ)²`.
    pub fn jacobian(&self, xi: f64) -> Result<(f64, f64)> {
        check_xi(xi)?;
        let one_minus = 1.0 - xi;
        Ok((2.0 * self.scale / (one_minus * one_minus), 4.0 * self.scale / (one_minus * one_minus * one_minus)))
    }

    /// Partials of the inverse map at computational point `ξ` in direction `angles`.
    pub fn map_partials(&self, xi: f64, angles: &[f64]) -> Result<MapPartials> {
        check_xi(xi)?;
        let one_minus = 1.0 - xi;
        let dxi_dr = one_minus * one_minus / (2.0 * self.scale);
        let d2xi_dr2 = -one_minus * one_minus * one_minus / (2.0 * self.scale * self.scale);
        let mut out = MapPartials { dxi_dr, d2xi_dr2, dxi_dangle: [0.0; 2], d2xi_dangle2: [0.0; 2] };
        if self.is_radially_uniform() {
            return Ok(out);
        }
        let layout = Layout::get(angles.len(), 2);
        let jets: Vec<RJet> = angles.iter().enumerate().map(|(i, &a)| RJet::variable(layout, i, a)).collect();
        let rb = self.boundary_radius_jet(&jets);
        for (i, _) in angles.iter().enumerate() {
            let d1 = rb.d(i);
            let d2 = rb.d2(i, i);
            out.dxi_dangle[i] = -d1 * dxi_dr;
            out.d2xi_dangle2[i] = d1 * d1 * d2xi_dr2 - d2 * dxi_dr;
        }
        Ok(out)
    }

    /// `r(ξ, angles)` as a jet, given jets of `ξ` and of `r_b(angles)`.
    pub fn radius_jet(&self, xi: &RJet, rb: &RJet) -> RJet {
        let one = RJet::constant(xi.layout(), 1.0);
        let ratio = (one + *xi) * (one - *xi).recip();
        *rb + ratio.scale(self.scale)
    }
}

fn check_xi(xi: f64) -> Result<()> {
    if (-1.0..1.0).contains(&xi) {
        Ok(())
    } else {
        Err(Error::Domain(format!("computational coordinate ξ = {xi} outside [-1, 1)")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn spec() -> MapSpec {
        MapSpec::new(1.0, 2.0).unwrap()
    }

    #[test]
    fn anchors() {
        let m = spec();
        assert_eq!(m.forward_map(-1.0, &[0.0]).unwrap(), 1.0);
        assert_eq!(m.forward_map(0.0, &[0.0]).unwrap(), 3.0);
        assert_eq!(m.forward_map(0.5, &[0.0]).unwrap(), 7.0);
        assert!(m.forward_map(1.0, &[0.0]).is_err());
        assert_eq!(m.inverse_map(1.0, &[0.0]).unwrap(), -1.0);
        assert_eq!(m.inverse_map(3.0, &[0.0]).unwrap(), 0.0);
        assert_eq!(m.inverse_map(7.0, &[0.0]).unwrap(), 0.5);
        assert!(m.inverse_map(0.5, &[0.0]).is_err());
    }

    #[test]
    fn jacobian_values() {
        let m = spec();
        assert_eq!(m.jacobian(0.0).unwrap(), (4.0, 8.0));
        assert_eq!(m.jacobian(-1.0).unwrap(), (1.0, 1.0));
        assert!(m.jacobian(1.0).is_err());
        let h = 1e-6;
        let (jp, _) = m.jacobian(0.3 + h).unwrap();
        let (jm, _) = m.jacobian(0.3 - h).unwrap();
        let (_, jd) = m.jacobian(0.3).unwrap();
        assert!(((jp - jm) / (2.0 * h) - jd).abs() / jd < 1e-8);
    }

    #[test]
    fn constant_offset_has_no_angular_partial() {
        let m = spec();
        for &t in &[0.0, 1.0, 2.5, 5.9] {
            let p = m.map_partials(0.2, &[t]).unwrap();
            assert_eq!(p.dxi_dangle[0], 0.0);
            assert!((p.dxi_dr - 1.0 / m.jacobian(0.2).unwrap().0).abs() < 1e-15);
        }
    }

    #[test]
    fn ellipse_partials_match_finite_differences() {
        let m = MapSpec::with_boundary(Geometry::Ellipse { a: 2.0, b: 1.0 }, 2.0).unwrap();
        let p0 = m.map_partials(0.1, &[0.0]).unwrap();
        assert!(p0.dxi_dangle[0].abs() < 1e-15);
        let theta = PI / 4.0;
        let r = m.forward_map(0.1, &[theta]).unwrap();
        let h = 1e-5;
        let fd = (m.inverse_map(r, &[theta + h]).unwrap() - m.inverse_map(r, &[theta - h]).unwrap()) / (2.0 * h);
        let p = m.map_partials(0.1, &[theta]).unwrap();
        assert!((p.dxi_dangle[0] - fd).abs() < 1e-7);
        let fd2 = (m.inverse_map(r, &[theta + h]).unwrap() - 2.0 * 0.1 + m.inverse_map(r, &[theta - h]).unwrap()) / (h * h);
        assert!((p.d2xi_dangle2[0] - fd2).abs() < 1e-4);
    }

    #[test]
    fn spacing_grows_outward() {
        let m = spec();
        let n = 200;
        let rs: Vec<f64> = (0..n).map(|i| m.forward_map(-1.0 + 1.998 * i as f64 / (n - 1) as f64, &[0.0]).unwrap()).collect();
        for w in rs.windows(3) {
            assert!(w[2] - w[1] > w[1] - w[0]);
        }
    }

    proptest::proptest! {
        #[test]
        fn inverse_undoes_forward(xi in -1.0f64..0.999, theta in 0.0f64..6.28, scale in 0.5f64..5.0) {
            for m in [MapSpec::new(1.0, scale).unwrap(), MapSpec::with_boundary(Geometry::Ellipse { a: 2.0, b: 1.0 }, scale).unwrap()] {
                let r = m.forward_map(xi, &[theta]).unwrap();
                proptest::prop_assert!(r >= m.boundary_radius(&[theta]));
                let back = m.inverse_map(r, &[theta]).unwrap();
                proptest::prop_assert!((back - xi).abs() <= 1e-12 * (1.0 - xi).recip().max(1.0));
                proptest::prop_assert!(m.jacobian(xi).unwrap().0 > 0.0);
            }
        }
    }
}
