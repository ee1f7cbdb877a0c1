//! Test grids in the physical domain and their computational coordinates.

use std::f64::consts::TAU;

use crate::error::Result;
use crate::geometry::{direction, Geometry};
use crate::mapping::MapSpec;
use crate::residual::ResidualForm;

/// Physical evaluation points with their dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct TestGrid {
    pub dim: usize,
    pub points: Vec<[f64; 3]>,
}

impl TestGrid {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Shell between the boundary and `width` beyond it, as an `n_r × n_theta` tensor grid.
/// In 2D the shell is the plane annulus; in 3D the shell is sampled on the three
/// central planes `x = 0`, `y = 0`, `z = 0`.
pub fn annulus_grid(geometry: &Geometry, n_r: usize, n_theta: usize, width: f64) -> TestGrid {
    let dim = geometry.dimension();
    let mut points = Vec::new();
    let planes: Vec<fn(f64, f64) -> [f64; 3]> = if dim == 2 {
        vec![|c, s| [c, s, 0.0]]
    } else {
        vec![|c, s| [0.0, c, s], |c, s| [c, 0.0, s], |c, s| [c, s, 0.0]]
    };
    for plane in planes {
        for j in 0..n_theta {
            let (s, c) = (TAU * j as f64 / n_theta as f64).sin_cos();
            let u = plane(c, s);
            let rb = boundary_radius_along(geometry, u);
            for i in 0..n_r {
                let r = rb + width * i as f64 / (n_r - 1) as f64;
                points.push([r * u[0], r * u[1], r * u[2]]);
            }
        }
    }
    TestGrid { dim, points }
}

/// Boundary radius along the unit direction `u`.
pub fn boundary_radius_along(geometry: &Geometry, u: [f64; 3]) -> f64 {
    match geometry.dimension() {
        2 => geometry.boundary_radius(&[u[1].atan2(u[0]).rem_euclid(TAU)]),
        _ => geometry.boundary_radius(&[u[2].clamp(-1.0, 1.0).acos(), u[1].atan2(u[0]).rem_euclid(TAU)]),
    }
}

/// Radius and angles of a physical point in the convention of `form`.
pub fn polar_angles(form: ResidualForm, x: &[f64; 3]) -> (f64, Vec<f64>) {
    let rho = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
    let azimuth = x[1].atan2(x[0]).rem_euclid(TAU);
    let angles = match form {
        ResidualForm::ExplicitPolar | ResidualForm::ChainRuleGeneral => vec![azimuth],
        // polar angle from the symmetry axis x
        ResidualForm::SphericalAxisym => vec![acos_ratio(x[0], rho)],
        ResidualForm::SphericalFull => vec![acos_ratio(x[2], rho), azimuth],
    };
    (rho, angles)
}

fn acos_ratio(num: f64, rho: f64) -> f64 {
    if rho == 0.0 {
        0.0
    } else {
        (num / rho).clamp(-1.0, 1.0).acos()
    }
}

/// Computational coordinates `(ξ, angles)` of a physical point; points inside the
/// obstacle are a domain error.
pub fn computational_coords(map: &MapSpec, form: ResidualForm, x: &[f64; 3]) -> Result<Vec<f64>> {
    let (rho, angles) = polar_angles(form, x);
    let rb = map.boundary_radius(&angles);
    // boundary points may land a rounding error inside r_b
    let r = if rho < rb && rb - rho <= 1e-12 * rb { rb } else { rho };
    let xi = map.inverse_map(r, &angles)?;
    let mut coords = vec![xi];
    coords.extend(angles);
    Ok(coords)
}

/// Physical point of computational coordinates.
pub fn physical_point(map: &MapSpec, form: ResidualForm, coords: &[f64]) -> Result<[f64; 3]> {
    let angles = &coords[1..];
    let r = map.forward_map(coords[0], angles)?;
    let u = match form {
        ResidualForm::SphericalAxisym => {
            let (s, c) = angles[0].sin_cos();
            [c, s, 0.0]
        }
        _ => direction(angles),
    };
    Ok([r * u[0], r * u[1], r * u[2]])
}

/// Pixel centers of a square image covering `[−half, half]²` in the plane `z = 0`,
/// row-major from the top row.
pub fn image_points(pixels: usize, half: f64) -> Vec<[f64; 3]> {
    let h = 2.0 * half / pixels as f64;
    let mut pts = Vec::with_capacity(pixels * pixels);
    for row in 0..pixels {
        let y = half - h * (row as f64 + 0.5);
        for col in 0..pixels {
            pts.push([-half + h * (col as f64 + 0.5), y, 0.0]);
        }
    }
    pts
}

/// Largest boundary radius, sampled densely enough for the image extent.
pub fn outer_extent(geometry: &Geometry) -> f64 {
    match *geometry {
        Geometry::Circle { radius } | Geometry::Sphere { radius } | Geometry::CanyonCavity { radius } => radius,
        Geometry::Ellipse { a, b } => a.max(b),
        Geometry::RegularPolygon { circumradius, .. } => circumradius,
        Geometry::Ellipsoid { a, b, c } => a.max(b).max(c),
    }
}

/// Points of the grid lying within `radius` of a polygon vertex.
pub fn near_corner(geometry: &Geometry, x: &[f64; 3], radius: f64) -> bool {
    geometry.polygon_vertices().is_some_and(|vs| vs.iter().any(|v| (x[0] - v[0]).hypot(x[1] - v[1]) < radius))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn annulus_spans_the_shell() {
        let g = Geometry::Ellipse { a: 2.0, b: 1.0 };
        let grid = annulus_grid(&g, 5, 8, 5.0);
        assert_eq!(grid.len(), 40);
        let map = MapSpec::with_boundary(g.clone(), 2.0).unwrap();
        for (n, p) in grid.points.iter().enumerate() {
            let c = computational_coords(&map, ResidualForm::ChainRuleGeneral, p).unwrap();
            if n % 5 == 0 {
                assert!((c[0] + 1.0).abs() < 1e-12, "{c:?}");
            }
            let back = physical_point(&map, ResidualForm::ChainRuleGeneral, &c).unwrap();
            assert!((0..3).all(|i| (back[i] - p[i]).abs() < 1e-12));
        }
    }

    #[test]
    fn three_d_grid_has_three_slices() {
        let g = Geometry::Ellipsoid { a: 2.0, b: 1.0, c: 1.0 };
        let grid = annulus_grid(&g, 4, 6, 5.0);
        assert_eq!(grid.len(), 72);
        assert!(grid.points[..24].iter().all(|p| p[0] == 0.0));
        assert!(grid.points[24..48].iter().all(|p| p[1] == 0.0));
        assert!(grid.points[48..].iter().all(|p| p[2] == 0.0));
        let map = MapSpec::with_boundary(g, 2.0).unwrap();
        for p in &grid.points {
            let c = computational_coords(&map, ResidualForm::SphericalFull, p).unwrap();
            assert!(c[0] >= -1.0 && c[0] < 1.0);
            let back = physical_point(&map, ResidualForm::SphericalFull, &c).unwrap();
            assert!((0..3).all(|i| (back[i] - p[i]).abs() < 1e-12));
        }
    }

    #[test]
    fn axisymmetric_angle_is_measured_from_x() {
        let map = MapSpec::new(1.0, 2.0).unwrap();
        let c = computational_coords(&map, ResidualForm::SphericalAxisym, &[0.0, 0.0, 3.0]).unwrap();
        assert!((c[1] - PI / 2.0).abs() < 1e-15);
        let c = computational_coords(&map, ResidualForm::SphericalAxisym, &[-3.0, 0.0, 0.0]).unwrap();
        assert!((c[1] - PI).abs() < 1e-15);
        assert!(computational_coords(&map, ResidualForm::SphericalAxisym, &[0.5, 0.0, 0.0]).is_err());
    }

    #[test]
    fn image_covers_the_square() {
        let pts = image_points(4, 2.0);
        assert_eq!(pts[0], [-1.5, 1.5, 0.0]);
        assert_eq!(pts[15], [1.5, -1.5, 0.0]);
    }
}
