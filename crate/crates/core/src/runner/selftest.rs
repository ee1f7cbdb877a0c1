//! Fast invariant checks runnable from the command line.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ansatz::{AnsatzKind, AnsatzSpec, KModel};
use crate::diff::{Layout, RJet};
use crate::error::Result;
use crate::geometry::{BoundaryData, DirichletData, Geometry};
use crate::mapping::MapSpec;
use crate::network::{InputEncoding, NetParams};
use crate::oracles::{fdm_default_grid, mfs_solve, radial_fdm, radiation_exact, radiation_exact_jet, Mie2d};
use crate::residual::{ResidualForm, ResidualSpec};
use crate::training::{domain_bounds, latin_hypercube, Problem};

/// Outcome of one check: the measured quantity against its limit.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub limit: f64,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.value <= self.limit
    }
}

fn jets(coords: &[f64], order: usize) -> Vec<RJet> {
    let l = Layout::get(coords.len(), order);
    coords.iter().enumerate().map(|(i, &v)| RJet::variable(l, i, v)).collect()
}

fn soft(k: f64) -> BoundaryData {
    BoundaryData::Dirichlet(DirichletData::SoundSoft { k, direction: [1.0, 0.0, 0.0] })
}

/// `max |û − g_D|` on the boundary for a random network.
fn boundary_defect(geometry: Geometry, form: ResidualForm) -> Result<f64> {
    let map = if geometry.has_constant_radius() { MapSpec::new(geometry.reference_radius(), 2.0)? } else { MapSpec::with_boundary(geometry.clone(), 2.0)? };
    let data = soft(2.0);
    let ansatz = AnsatzSpec::new(AnsatzKind::DirichletRadial, geometry, data.clone(), map.clone(), KModel::Constant(2.0))?;
    let problem = Problem::new(ansatz, ResidualSpec::new(form, map.clone(), KModel::Constant(2.0))?, InputEncoding::Polar)?;
    let net = problem.init_network(&[16, 16], 11)?;
    let pts: Vec<Vec<f64>> = (0..100).map(|i| vec![-1.0, TAU * i as f64 / 100.0]).collect();
    let values = problem.field_values(&net, &pts)?;
    let BoundaryData::Dirichlet(g) = data else { unreachable!() };
    let mut worst = 0.0f64;
    for (p, v) in pts.iter().zip(values) {
        let r = map.boundary_radius(&p[1..]);
        worst = worst.max((v - g.value(&[r * p[1].cos(), r * p[1].sin()])).norm());
    }
    Ok(worst)
}

fn hankel_nullity() -> Result<f64> {
    let map = MapSpec::new(1.0, 2.0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for k in [2.0, 5.0] {
        let res = ResidualSpec::new(ResidualForm::ExplicitPolar, map.clone(), KModel::Constant(k))?;
        for _ in 0..200 {
            let c = [rng.random_range(-1.0..0.99), rng.random_range(0.0..TAU)];
            let cj = jets(&c, 2);
            let r = map.radius_jet(&cj[0], &RJet::constant(cj[0].layout(), 1.0));
            let u = radiation_exact_jet(k, Complex64::new(100.0, 0.0), &r)?;
            worst = worst.max(res.eval(&u, &c)?.norm());
        }
    }
    Ok(worst)
}

fn form_agreement() -> Result<f64> {
    let map = MapSpec::new(1.0, 2.0)?;
    let k = KModel::Constant(3.0);
    let explicit = ResidualSpec::new(ResidualForm::ExplicitPolar, map.clone(), k)?;
    let general = ResidualSpec::new(ResidualForm::ChainRuleGeneral, map.clone(), k)?;
    let ansatz = AnsatzSpec::new(AnsatzKind::DirichletRadial, Geometry::Circle { radius: 1.0 }, soft(3.0), map, k)?;
    let net = NetParams::init(&[3, 16, 16, 2], 5)?;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut num, mut den) = (0.0, 0.0);
    for _ in 0..200 {
        let c = [rng.random_range(-1.0..0.99), rng.random_range(0.0..TAU)];
        let [re, im] = net.forward_jet(&InputEncoding::Polar.encode(&jets(&c, 2)))?;
        let u = ansatz.field(&c, &crate::diff::CJet::from_parts(&re, &im))?;
        let (a, b) = (explicit.eval(&u, &c)?, general.eval(&u, &c)?);
        num += (a - b).norm_sqr();
        den += a.norm_sqr();
    }
    Ok((num / den).sqrt())
}

fn mie_vs_mfs() -> Result<f64> {
    let mie = Mie2d::new(1.0, 1.0, 30)?;
    let mfs = mfs_solve(&Geometry::Circle { radius: 1.0 }, 1.0, &DirichletData::SoundSoft { k: 1.0, direction: [1.0, 0.0, 0.0] }, 80)?;
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..20 {
        for j in 0..20 {
            let (r, t) = (1.1 + 3.9 * i as f64 / 19.0, TAU * j as f64 / 20.0);
            let a = mie.eval(r, t)?;
            num += (a - mfs.eval(&[r * t.cos(), r * t.sin()])?).norm_sqr();
            den += a.norm_sqr();
        }
    }
    Ok((num / den).sqrt())
}

fn fdm_vs_exact() -> Result<f64> {
    let k = KModel::Constant(2.0);
    let (r_max, n) = fdm_default_grid(&k);
    let u0 = Complex64::new(100.0, 0.0);
    let prof = radial_fdm(&k, u0, r_max, n)?;
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..200 {
        let r = 1.0 + 5.0 * i as f64 / 199.0;
        let a = radiation_exact(2.0, u0, r)?;
        num += (a - prof.eval(r)?).norm_sqr();
        den += a.norm_sqr();
    }
    Ok((num / den).sqrt())
}

/// Directional finite difference of the training loss against its gradient.
fn gradient_check() -> Result<f64> {
    let map = MapSpec::new(1.0, 2.0)?;
    let k = KModel::Constant(3.0);
    let ansatz = AnsatzSpec::new(AnsatzKind::DirichletRadial, Geometry::Circle { radius: 1.0 }, soft(3.0), map.clone(), k)?;
    let problem = Problem::new(ansatz, ResidualSpec::new(ResidualForm::ExplicitPolar, map, k)?, InputEncoding::Polar)?;
    let batch = problem.batch(&latin_hypercube(64, &domain_bounds(ResidualForm::ExplicitPolar), 2)?)?;
    let mut net = problem.init_network(&[12, 12], 8)?;
    let lg = batch.loss_grad(&net)?;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let dir: Vec<f64> = (0..net.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let analytic: f64 = lg.grad.iter().zip(&dir).map(|(g, d)| g * d).sum();
    let base = net.params().to_vec();
    let h = 1e-5;
    let mut at = |s: f64| -> Result<f64> {
        let p: Vec<f64> = base.iter().zip(&dir).map(|(b, d)| b + s * d).collect();
        net.set_params(&p);
        batch.loss(&net)
    };
    let fd = (at(h)? - at(-h)?) / (2.0 * h);
    Ok((fd - analytic).abs() / analytic.abs())
}

/// Runs every check; a check that errors reports an infinite value.
pub fn run_all() -> Vec<Check> {
    let cases: Vec<(&'static str, f64, Box<dyn Fn() -> Result<f64>>)> = vec![
        ("boundary_exact_circle", 1e-12, Box::new(|| boundary_defect(Geometry::Circle { radius: 1.0 }, ResidualForm::ExplicitPolar))),
        ("boundary_exact_ellipse", 1e-9, Box::new(|| boundary_defect(Geometry::Ellipse { a: 2.0, b: 1.0 }, ResidualForm::ChainRuleGeneral))),
        (
            "boundary_exact_hexagon",
            1e-12,
            Box::new(|| boundary_defect(Geometry::RegularPolygon { sides: 6, circumradius: 1.0 }, ResidualForm::ChainRuleGeneral)),
        ),
        ("residual_null_on_hankel", 1e-7, Box::new(hankel_nullity)),
        ("residual_forms_agree", 1e-10, Box::new(form_agreement)),
        ("loss_gradient_vs_fd", 1e-6, Box::new(gradient_check)),
        ("mie2d_vs_mfs", 1e-8, Box::new(mie_vs_mfs)),
        ("radial_fdm_vs_exact", 1e-6, Box::new(fdm_vs_exact)),
    ];
    cases.into_iter().map(|(name, limit, f)| Check { name, value: f().unwrap_or(f64::INFINITY), limit }).collect()
}
