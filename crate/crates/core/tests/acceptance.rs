//! End-to-end acceptance suite. Each test prints one `criterion N PASS|FAIL` line.
//!
//! The training criteria take hours on one core; all tests share a lock so
//! their wall-clock limits are measured without contention.

use std::f64::consts::{PI, TAU};
use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mapwave::ansatz::{AnsatzKind, AnsatzSpec, Frame, KModel};
use mapwave::diff::{CJet, Layout, RJet};
use mapwave::geometry::{background_radial_derivative, BoundaryData, DirichletData, Geometry, NeumannData};
use mapwave::mapping::MapSpec;
use mapwave::network::{InputEncoding, NetParams};
use mapwave::oracles::*;
use mapwave::residual::{ResidualForm, ResidualSpec, POLE_BAND};
use mapwave::runner::config::ScenarioConfig;
use mapwave::runner::{run_scenario, write_artifacts, Model, RunOutcome, Scenario};
use mapwave::training::Problem;

static LOCK: Mutex<()> = Mutex::new(());

/// Runs a criterion body under the lock, prints its verdict and asserts it.
fn criterion(n: u32, limit: Duration, body: impl FnOnce() -> (bool, String)) {
    let _guard = LOCK.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let result = catch_unwind(AssertUnwindSafe(body));
    let elapsed = start.elapsed();
    let (ok, detail) = match result {
        Ok((ok, detail)) => (ok, detail),
        Err(e) => {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default();
            (false, format!("panicked: {msg}"))
        }
    };
    let in_time = elapsed <= limit;
    let pass = ok && in_time;
    let timing = format!("{:.1} s of {:.0} s", elapsed.as_secs_f64(), limit.as_secs_f64());
    let line = format!("criterion {n} {} {detail} ({timing}{})", if pass { "PASS" } else { "FAIL" }, if in_time { "" } else { ", over time" });
    let _ = writeln!(std::io::stderr(), "{line}");
    assert!(pass, "{line}");
}

fn minutes(m: u64) -> Duration {
    Duration::from_secs(60 * m)
}

fn rel_l2(pred: &[Complex64], exact: &[Complex64]) -> f64 {
    let num: f64 = pred.iter().zip(exact).map(|(a, b)| (a - b).norm_sqr()).sum();
    let den: f64 = exact.iter().map(|b| b.norm_sqr()).sum();
    (num / den).sqrt()
}

fn mh_problem(s: &Scenario) -> &Problem {
    match &s.model {
        Model::Mh(p) => p,
        Model::Baseline(_) => panic!("expected a hard-constrained model"),
    }
}

fn scenario(name: &str) -> Scenario {
    Scenario::build(&ScenarioConfig::builtin(name).unwrap()).unwrap()
}

/// A network with every parameter drawn uniformly in `[-1, 1]`.
fn random_net(problem: &Problem, hidden: &[usize], seed: u64) -> NetParams {
    let mut net = problem.init_network(hidden, seed).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let p: Vec<f64> = (0..net.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
    net.set_params(&p);
    net
}

fn random_angles(rng: &mut ChaCha8Rng, count: usize) -> Vec<f64> {
    match count {
        1 => vec![rng.random_range(0.0..TAU)],
        _ => vec![rng.random_range(0.05..PI - 0.05), rng.random_range(0.0..TAU)],
    }
}

/// `max |û − g_D|` over boundary points of 100 random networks.
fn dirichlet_defect(problem: &Problem) -> f64 {
    let ansatz = &problem.ansatz;
    let BoundaryData::Dirichlet(g) = &ansatz.data else { panic!("expected Dirichlet data") };
    let dim = ansatz.geometry.dimension();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for seed in 0..100 {
        let net = random_net(problem, &[16, 16], seed);
        let pts: Vec<Vec<f64>> = (0..1000)
            .map(|_| {
                let mut p = vec![-1.0];
                p.extend(random_angles(&mut rng, problem.coord_count() - 1));
                p
            })
            .collect();
        for (p, u) in pts.iter().zip(problem.field_values(&net, &pts).unwrap()) {
            let x = ansatz.geometry.boundary_point(&p[1..]);
            worst = worst.max((u - g.value(&x[..dim])).norm());
        }
    }
    worst
}

/// `max |∂û/∂n − g_N|` over boundary points of 100 random networks.
fn neumann_defect(problem: &Problem) -> f64 {
    let ansatz = &problem.ansatz;
    let BoundaryData::Neumann(g) = &ansatz.data else { panic!("expected Neumann data") };
    let dim = ansatz.geometry.dimension();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for seed in 0..100 {
        let net = random_net(problem, &[16, 16], seed);
        let pts: Vec<Vec<f64>> = (0..1000)
            .map(|_| {
                let mut p = vec![-1.0];
                p.extend(random_angles(&mut rng, problem.coord_count() - 1));
                p
            })
            .collect();
        for (p, u) in pts.iter().zip(problem.field_jets(&net, &pts).unwrap()) {
            let frame = Frame::new(&ansatz.map, p, ansatz.layout()).unwrap();
            let grad = frame.gradient(&u);
            let normal = ansatz.geometry.outward_normal(&p[1..]);
            let x = ansatz.geometry.boundary_point(&p[1..]);
            let dn: Complex64 = grad.iter().zip(&normal).map(|(a, b)| a * b).sum();
            worst = worst.max((dn - g.value(&x[..dim], &normal[..dim])).norm());
        }
    }
    worst
}

fn neumann_problem(geometry: Geometry, form: ResidualForm, data: NeumannData) -> Problem {
    let k = KModel::Constant(2.0);
    let map = MapSpec::new(geometry.reference_radius(), 2.0).unwrap();
    let ansatz = AnsatzSpec::new(AnsatzKind::NeumannShielded, geometry, BoundaryData::Neumann(data), map.clone(), k).unwrap();
    Problem::new(ansatz, ResidualSpec::new(form, map, k).unwrap(), InputEncoding::Polar).unwrap()
}

#[test]
fn criterion_01_hard_constraints_are_exact() {
    criterion(1, minutes(1), || {
        let mut ok = true;
        let mut parts = Vec::new();
        let dirichlet = [
            ("radiation_circle", 1e-12),
            ("scatter_circle", 1e-12),
            ("scatter_square", 1e-12),
            ("scatter_hexagon", 1e-12),
            ("scatter_ellipse", 1e-9),
            ("scatter_sphere", 1e-12),
            ("scatter_ellipsoid", 1e-9),
        ];
        for (name, limit) in dirichlet {
            let s = scenario(name);
            let d = dirichlet_defect(mh_problem(&s));
            ok &= d <= limit;
            parts.push(format!("{} {d:.1e}", s.geometry.name()));
        }
        let c = Complex64::new(0.7, -1.3);
        let neumann = [
            ("circle", neumann_problem(Geometry::Circle { radius: 1.0 }, ResidualForm::ExplicitPolar, NeumannData::Constant(c))),
            ("sphere", neumann_problem(Geometry::Sphere { radius: 1.0 }, ResidualForm::SphericalAxisym, NeumannData::Constant(c))),
            ("canyon", mh_problem(&scenario("sh_canyon")).clone()),
        ];
        for (name, problem) in &neumann {
            let d = neumann_defect(problem);
            ok &= d <= 1e-9;
            parts.push(format!("{name} dn {d:.1e}"));
        }
        (ok, parts.join(", "))
    });
}

/// Central differences with one Richardson step: `[f, ∂_p f, ∂_p∂_q f]`.
fn fd_derivatives(f: &dyn Fn(&[f64]) -> Complex64, x: &[f64], h: f64) -> (Vec<Complex64>, Vec<Complex64>) {
    let n = x.len();
    let shifted = |steps: &[(usize, f64)]| {
        let mut y = x.to_vec();
        for &(i, s) in steps {
            y[i] += s;
        }
        f(&y)
    };
    let first = |i: usize, h: f64| (shifted(&[(i, h)]) - shifted(&[(i, -h)])) / (2.0 * h);
    let second = |i: usize, j: usize, h: f64| {
        if i == j {
            (shifted(&[(i, h)]) - 2.0 * f(x) + shifted(&[(i, -h)])) / (h * h)
        } else {
            (shifted(&[(i, h), (j, h)]) - shifted(&[(i, h), (j, -h)]) - shifted(&[(i, -h), (j, h)]) + shifted(&[(i, -h), (j, -h)])) / (4.0 * h * h)
        }
    };
    let rich = |a: Complex64, b: Complex64| (4.0 * b - a) / 3.0;
    let d1 = (0..n).map(|i| rich(first(i, h), first(i, h / 2.0))).collect();
    let mut d2 = Vec::new();
    for i in 0..n {
        for j in i..n {
            d2.push(rich(second(i, j, h), second(i, j, h / 2.0)));
        }
    }
    (d1, d2)
}

fn jet_derivatives(u: &CJet, n: usize) -> (Vec<Complex64>, Vec<Complex64>) {
    let d1 = (0..n).map(|i| u.d(i)).collect();
    let mut d2 = Vec::new();
    for i in 0..n {
        for j in i..n {
            d2.push(u.d2(i, j));
        }
    }
    (d1, d2)
}

fn rel_vec(a: &[Complex64], b: &[Complex64]) -> f64 {
    rel_l2(a, b)
}

/// Worst relative mismatch of jet derivatives against finite differences.
fn field_jet_check(problem: &Problem, seed: u64, points: usize) -> f64 {
    let net = random_net(problem, &[16, 16], seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = problem.coord_count();
    let f = |x: &[f64]| problem.field_values(&net, &[x.to_vec()]).unwrap()[0];
    let mut worst = 0.0f64;
    for _ in 0..points {
        let mut x = vec![rng.random_range(-0.9..0.5)];
        x.extend(match n {
            2 => vec![rng.random_range(0.2..PI - 0.2)],
            _ => vec![rng.random_range(0.2..PI - 0.2), rng.random_range(0.0..TAU)],
        });
        let u = &problem.field_jets(&net, &[x.clone()]).unwrap()[0];
        let (j1, j2) = jet_derivatives(u, n);
        let (f1, f2) = fd_derivatives(&f, &x, 1e-3);
        worst = worst.max(rel_vec(&f1, &j1)).max(rel_vec(&f2, &j2));
    }
    worst
}

/// Relative mismatch of `∇L·v` against a Richardson-extrapolated directional difference.
fn loss_gradient_check(s: &Scenario, seed: u64) -> f64 {
    let batch = s.collocation().unwrap();
    let mut net = s.init_network().unwrap();
    let lg = batch.loss_grad(&net).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dir: Vec<f64> = (0..net.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let analytic: f64 = lg.grad.iter().zip(&dir).map(|(g, d)| g * d).sum();
    let base = net.params().to_vec();
    let mut at = |t: f64| {
        let p: Vec<f64> = base.iter().zip(&dir).map(|(b, d)| b + t * d).collect();
        net.set_params(&p);
        batch.loss(&net).unwrap()
    };
    let h = 1e-3;
    let d_h = (at(h) - at(-h)) / (2.0 * h);
    let d_h2 = (at(h / 2.0) - at(-h / 2.0)) / h;
    let fd = (4.0 * d_h2 - d_h) / 3.0;
    (fd - analytic).abs() / analytic.abs()
}

fn small(name: &str) -> ScenarioConfig {
    let mut c = ScenarioConfig::builtin(name).unwrap();
    c.network.hidden = vec![16, 16];
    c.sampling.points = 300;
    c
}

#[test]
fn criterion_02_jets_and_gradients_match_finite_differences() {
    criterion(2, minutes(1), || {
        let mut ok = true;
        let mut parts = Vec::new();
        for (i, name) in ["radiation_circle", "scatter_ellipse", "scatter_sphere", "sh_canyon", "scatter_ellipsoid"].iter().enumerate() {
            let s = scenario(name);
            let e = field_jet_check(mh_problem(&s), i as u64, 20);
            ok &= e <= 1e-6;
            parts.push(format!("{name} jets {e:.1e}"));
        }
        for (i, name) in ["radiation_circle", "scatter_ellipse", "sh_canyon", "radiation_variable_k", "baseline_radiation"].iter().enumerate() {
            let s = Scenario::build(&small(name)).unwrap();
            let e = loss_gradient_check(&s, 10 + i as u64);
            ok &= e <= 1e-6;
            parts.push(format!("{name} grad {e:.1e}"));
        }
        (ok, parts.join(", "))
    });
}

fn coord_jets(c: &[f64]) -> Vec<RJet> {
    let l = Layout::get(c.len(), 2);
    c.iter().enumerate().map(|(i, &v)| RJet::variable(l, i, v)).collect()
}

/// Worst residual of an analytic field over 1000 random points with `ξ ≤ 0.99`.
fn nullity(form: ResidualForm, k: f64, theta: (f64, f64), seed: u64, field: &dyn Fn(&RJet, &RJet) -> CJet) -> f64 {
    let map = MapSpec::new(1.0, 2.0).unwrap();
    let res = ResidualSpec::new(form, map.clone(), KModel::Constant(k)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let c = [rng.random_range(-1.0..=0.99), rng.random_range(theta.0..theta.1)];
        let cj = coord_jets(&c);
        let r = map.radius_jet(&cj[0], &RJet::constant(cj[0].layout(), 1.0));
        worst = worst.max(res.eval(&field(&r, &cj[1]), &c).unwrap().norm());
    }
    worst
}

#[test]
fn criterion_03_residuals_vanish_on_exact_solutions() {
    criterion(3, minutes(1), || {
        let u0 = Complex64::new(100.0, 0.0);
        let full = (0.0, TAU);
        let axis = (POLE_BAND, PI - POLE_BAND);
        let mie1 = Mie2d::new(1.0, 1.0, default_n_max(5.0)).unwrap();
        let mie3 = Mie2d::new(3.0, 1.0, default_n_max(15.0)).unwrap();
        let mie5 = Mie3d::new(5.0, 1.0, default_n_max(15.0)).unwrap();
        let checks: Vec<(String, f64)> = vec![
            ("hankel k=2".into(), nullity(ResidualForm::ExplicitPolar, 2.0, full, 1, &|r, _| radiation_exact_jet(2.0, u0, r).unwrap())),
            ("hankel k=5".into(), nullity(ResidualForm::ExplicitPolar, 5.0, full, 2, &|r, _| radiation_exact_jet(5.0, u0, r).unwrap())),
            ("mie2d k=1".into(), nullity(ResidualForm::ExplicitPolar, 1.0, full, 3, &|r, t| mie1.eval_jet(r, t).unwrap())),
            ("mie2d k=3".into(), nullity(ResidualForm::ChainRuleGeneral, 3.0, full, 4, &|r, t| mie3.eval_jet(r, t).unwrap())),
            (
                "monopole k=5".into(),
                nullity(ResidualForm::SphericalAxisym, 5.0, axis, 5, &|r, _| spherical_hankel_jet(0, &r.scale(5.0)).unwrap()),
            ),
            ("mie3d k=5".into(), nullity(ResidualForm::SphericalAxisym, 5.0, axis, 6, &|r, t| mie5.eval_jet(r, t).unwrap())),
        ];
        let ok = checks.iter().all(|(_, v)| *v <= 1e-7);
        (ok, checks.iter().map(|(n, v)| format!("{n} {v:.1e}")).collect::<Vec<_>>().join(", "))
    });
}

#[test]
fn criterion_04_residual_forms_agree() {
    criterion(4, minutes(1), || {
        let map = MapSpec::new(1.0, 2.0).unwrap();
        let k = KModel::Constant(3.0);
        let explicit = ResidualSpec::new(ResidualForm::ExplicitPolar, map.clone(), k).unwrap();
        let general = ResidualSpec::new(ResidualForm::ChainRuleGeneral, map, k).unwrap();
        let problem = mh_problem(&scenario("scatter_circle")).clone();
        let net = random_net(&problem, &[32, 32], 7);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let pts: Vec<Vec<f64>> = (0..1000).map(|_| vec![rng.random_range(-1.0..0.99), rng.random_range(0.0..TAU)]).collect();
        let (mut a, mut b) = (Vec::new(), Vec::new());
        for (p, u) in pts.iter().zip(problem.field_jets(&net, &pts).unwrap()) {
            a.push(explicit.eval(&u, p).unwrap());
            b.push(general.eval(&u, p).unwrap());
        }
        let e = rel_l2(&b, &a);
        (e <= 1e-10, format!("relative difference {e:.1e} at 1000 points"))
    });
}

#[test]
fn criterion_05_oracles_agree() {
    criterion(5, minutes(5), || {
        let mut parts = Vec::new();
        let mut ok = true;

        let d = DirichletData::SoundSoft { k: 1.0, direction: [1.0, 0.0, 0.0] };
        let mfs = mfs_solve(&Geometry::Circle { radius: 1.0 }, 1.0, &d, 80).unwrap();
        let mie = Mie2d::new(1.0, 1.0, default_n_max(5.0)).unwrap();
        let (mut a, mut b) = (Vec::new(), Vec::new());
        for i in 0..60 {
            for j in 0..60 {
                let (r, t) = (1.1 + 3.9 * i as f64 / 59.0, TAU * j as f64 / 60.0);
                a.push(mfs.eval(&[r * t.cos(), r * t.sin()]).unwrap());
                b.push(mie.eval(r, t).unwrap());
            }
        }
        let e = rel_l2(&a, &b);
        ok &= e <= 1e-8;
        parts.push(format!("mie2d/mfs {e:.1e}"));

        let d = DirichletData::SoundSoft { k: 5.0, direction: [1.0, 0.0, 0.0] };
        let mfs = mfs_solve(&Geometry::Sphere { radius: 1.0 }, 5.0, &d, 800).unwrap();
        let mie = Mie3d::new(5.0, 1.0, default_n_max(25.0)).unwrap();
        let (mut a, mut b) = (Vec::new(), Vec::new());
        for i in 0..15 {
            for j in 0..15 {
                for l in 0..6 {
                    let r = 1.1 + 3.9 * i as f64 / 14.0;
                    let t = PI * (j as f64 + 0.5) / 15.0;
                    let p = TAU * l as f64 / 6.0 + 0.2;
                    a.push(mfs.eval(&[r * t.cos(), r * t.sin() * p.cos(), r * t.sin() * p.sin()]).unwrap());
                    b.push(mie.eval(r, t).unwrap());
                }
            }
        }
        let e = rel_l2(&a, &b);
        ok &= e <= 1e-6;
        parts.push(format!("mie3d/mfs {e:.1e}"));

        let k = KModel::Constant(2.0);
        let u0 = Complex64::new(100.0, 0.0);
        let (r_max, n) = fdm_default_grid(&k);
        let prof = radial_fdm(&k, u0, r_max, n).unwrap();
        let rs: Vec<f64> = (0..=1000).map(|i| 1.0 + 5.0 * i as f64 / 1000.0).collect();
        let a: Vec<Complex64> = rs.iter().map(|&r| prof.eval(r).unwrap()).collect();
        let b: Vec<Complex64> = rs.iter().map(|&r| radiation_exact(2.0, u0, r).unwrap()).collect();
        let e = rel_l2(&a, &b);
        ok &= e <= 1e-6;
        parts.push(format!("fdm/exact {e:.1e}"));

        let mut worst = 0.0f64;
        for (k, inc) in [(PI, PI / 2.0), (PI, PI / 6.0), (2.0 * PI, PI / 3.0), (0.5 * PI, 0.0)] {
            let f = canyon_series(k, 1.0, inc, default_n_max(3.0 * k)).unwrap();
            for i in 0..1000 {
                let t = -PI + TAU * (i as f64 + 0.5) / 1000.0;
                let dn = f.scattered_radial_derivative(1.0, t).unwrap() + background_radial_derivative(k, inc, 1.0, t);
                worst = worst.max(dn.norm());
            }
        }
        ok &= worst <= 1e-9;
        parts.push(format!("canyon traction {worst:.1e}"));
        (ok, parts.join(", "))
    });
}

fn trained(config: &ScenarioConfig) -> RunOutcome {
    run_scenario(config).unwrap()
}

fn summary(o: &RunOutcome) -> String {
    format!(
        "rel_l2 {:.2e}, loss {:.1e}, {}+{} iters",
        o.metrics.rel_l2_complex, o.metrics.final_loss, o.metrics.adam_iters, o.metrics.lbfgs_iters
    )
}

#[test]
fn criterion_06_radiation_k3() {
    let mut c = ScenarioConfig::builtin("radiation_circle").unwrap();
    c.physics.k = 3.0;
    c.schedule.lbfgs_iters = 1500;
    assert!(c.network.hidden == vec![64; 4] && c.sampling.points == 4000 && c.schedule.adam_iters == 2000);
    criterion(6, minutes(15), || {
        let o = trained(&c);
        (o.metrics.rel_l2_complex <= 5e-3 && !o.diverged(), summary(&o))
    });
}

#[test]
fn criterion_07_wideband_sweep() {
    let mut c = ScenarioConfig::builtin("radiation_circle").unwrap();
    c.schedule.adam_iters = 1000;
    c.schedule.lbfgs_iters = 1000;
    criterion(7, minutes(90), || {
        let mut ok = true;
        let mut parts = Vec::new();
        for k in [1.0, 3.0, 5.0, 8.0, 10.0] {
            c.physics.k = k;
            let o = trained(&c);
            ok &= o.metrics.rel_l2_complex <= 1e-2 && !o.diverged();
            parts.push(format!("k={k} {:.2e}{}", o.metrics.rel_l2_complex, if o.diverged() { " diverged" } else { "" }));
        }
        (ok, parts.join(", "))
    });
}

#[test]
fn criterion_08_baseline_contrast() {
    let mut mh = ScenarioConfig::builtin("radiation_circle").unwrap();
    let mut base = ScenarioConfig::builtin("baseline_radiation").unwrap();
    mh.physics.k = 6.0;
    for c in [&mut mh, &mut base] {
        c.schedule.adam_iters = 1000;
        c.schedule.lbfgs_iters = 1000;
    }
    assert_eq!((base.physics.k, &base.network, base.sampling.points), (mh.physics.k, &mh.network, mh.sampling.points));
    criterion(8, minutes(60), || {
        let m = trained(&mh);
        let b = trained(&base);
        let ratio = b.metrics.rel_l2_complex / m.metrics.rel_l2_complex;
        let ok = b.diverged() || ratio >= 10.0;
        (ok, format!("baseline {:.2e}{}, mh {:.2e}, ratio {ratio:.1}", b.metrics.rel_l2_complex, if b.diverged() { " diverged" } else { "" }, m.metrics.rel_l2_complex))
    });
}

#[test]
fn criterion_09_high_frequency() {
    let mut c = ScenarioConfig::builtin("radiation_high_k").unwrap();
    c.schedule.lbfgs_iters = 5000;
    assert!(c.physics.k == 20.0 && c.sampling.points == 12000);
    criterion(9, minutes(120), || {
        let o = trained(&c);
        (o.metrics.rel_l2_complex <= 1e-2 && !o.diverged(), summary(&o))
    });
}

#[test]
fn criterion_10_variable_wavenumber() {
    let mut c = ScenarioConfig::builtin("radiation_variable_k").unwrap();
    c.schedule.lbfgs_iters = 1500;
    criterion(10, minutes(30), || {
        let o = trained(&c);
        (o.metrics.rel_l2_complex <= 1e-2 && o.oracle_summary.starts_with("radial_fdm"), format!("{}, {}", summary(&o), o.oracle_summary))
    });
}

#[test]
fn criterion_11_two_dimensional_scattering() {
    let mut circle = ScenarioConfig::builtin("scatter_circle").unwrap();
    let mut ellipse = ScenarioConfig::builtin("scatter_ellipse").unwrap();
    for c in [&mut circle, &mut ellipse] {
        c.schedule.lbfgs_iters = 1500;
        assert_eq!(c.physics.k, 1.0);
    }
    criterion(11, minutes(60), || {
        let start = Instant::now();
        let a = trained(&circle);
        let t_circle = start.elapsed();
        let b = trained(&ellipse);
        let t_ellipse = start.elapsed() - t_circle;
        let ok = a.metrics.rel_l2_complex <= 1e-2
            && b.metrics.rel_l2_complex <= 2e-2
            && a.oracle_summary.starts_with("mie2d")
            && b.oracle_summary.starts_with("mfs")
            && t_circle <= minutes(30)
            && t_ellipse <= minutes(30);
        (
            ok,
            format!(
                "circle vs mie2d {:.2e} in {:.0} s, ellipse vs mfs {:.2e} in {:.0} s",
                a.metrics.rel_l2_complex,
                t_circle.as_secs_f64(),
                b.metrics.rel_l2_complex,
                t_ellipse.as_secs_f64()
            ),
        )
    });
}

#[test]
fn criterion_12_canyon_surface() {
    let mut c = ScenarioConfig::builtin("sh_canyon").unwrap();
    c.schedule.lbfgs_iters = 2000;
    assert!((c.physics.k - PI).abs() < 1e-15 && (c.physics.incidence - PI / 2.0).abs() < 1e-15);
    criterion(12, minutes(45), || {
        let o = trained(&c);
        let s = o.surface.as_ref().expect("canyon runs report a surface profile");
        let (amp, asym) = (s.amplitude_error(), s.asymmetry());
        (amp <= 2e-2 && asym <= 2e-2, format!("surface amplitude {amp:.2e}, asymmetry {asym:.2e}, {}", summary(&o)))
    });
}

#[test]
fn criterion_13_reruns_are_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = ScenarioConfig::builtin("scatter_ellipse").unwrap();
    c.network.hidden = vec![32, 32];
    c.sampling.points = 500;
    c.schedule.adam_iters = 200;
    c.schedule.lbfgs_iters = 200;
    c.grid.n_r = 40;
    c.grid.n_theta = 40;
    criterion(13, minutes(10), || {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let files: Vec<Vec<u8>> = ["a", "b"]
            .iter()
            .map(|sub| {
                let out = dir.path().join(sub);
                pool.install(|| {
                    let o = trained(&c);
                    write_artifacts(&o, &c, &out).unwrap();
                });
                std::fs::read(out.join("metrics.json")).unwrap()
            })
            .collect();
        (files[0] == files[1], format!("metrics.json {} bytes, identical: {}", files[0].len(), files[0] == files[1]))
    });
}
