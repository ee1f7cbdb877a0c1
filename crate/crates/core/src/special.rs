//! Cylindrical and spherical Bessel/Hankel functions of real argument and
//! Legendre polynomials.
//!
//! `J_n` and `j_n` come from Miller's backward recurrence normalized by the
//! Neumann sum identities, which keeps them accurate on both sides of the
//! turning point `n ≈ x`. `Y_0`, `Y_1` use the Neumann-type series in the
//! already computed `J_n`, and higher orders of `Y` and `y` use the upward
//! recurrence, which is stable for the second kind.

use std::f64::consts::{FRAC_2_PI, PI};

use num_complex::Complex64;

use crate::error::SpecialError;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const RESCALE_AT: f64 = 1e250;

fn check_positive(x: f64) -> Result<(), SpecialError> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(SpecialError::Domain(format!("argument must be positive and finite, got {x}")))
    }
}

/// Even starting order for the backward recurrence.
fn miller_start(n_max: usize, x: f64) -> usize {
    let top = (n_max as f64).max(x);
    let m = top.ceil() as usize + 25 + 6 * top.cbrt().ceil() as usize;
    m + (m % 2)
}

/// `J_0(x) … J_{n_max}(x)` for `x ≥ 0`.
pub fn bessel_j_all(n_max: usize, x: f64) -> Result<Vec<f64>, SpecialError> {
    if x == 0.0 {
        let mut out = vec![0.0; n_max + 1];
        out[0] = 1.0;
        return Ok(out);
    }
    check_positive(x)?;
    let m = miller_start(n_max, x);
    let mut vals = vec![0.0; m + 2];
    vals[m] = 1e-30;
    let mut sum = 0.0;
    for k in (1..=m).rev() {
        vals[k - 1] = (2.0 * k as f64 / x) * vals[k] - vals[k + 1];
        if (k - 1) % 2 == 0 && k - 1 > 0 {
            sum += 2.0 * vals[k - 1];
        }
        if vals[k - 1].abs() > RESCALE_AT {
            for v in vals[k - 1..].iter_mut() {
                *v /= RESCALE_AT;
            }
            sum /= RESCALE_AT;
        }
    }
    sum += vals[0];
    vals.truncate(n_max + 1);
    for v in vals.iter_mut() {
        *v /= sum;
    }
    Ok(vals)
}

/// Bessel function of the first kind `J_n(x)`; `x = 0` is allowed.
pub fn bessel_j(n: usize, x: f64) -> Result<f64, SpecialError> {
    if x < 0.0 || !x.is_finite() {
        return Err(SpecialError::Domain(format!("J_n needs x ≥ 0, got {x}")));
    }
    Ok(bessel_j_all(n, x)?[n])
}

/// `Y_0(x) … Y_{n_max}(x)` for `x > 0`.
pub fn bessel_y_all(n_max: usize, x: f64) -> Result<Vec<f64>, SpecialError> {
    check_positive(x)?;
    let m = miller_start(1, x);
    let j = bessel_j_all(m + 1, x)?;
    let log_term = (0.5 * x).ln() + EULER_GAMMA;
    let mut s0 = 0.0;
    let mut s1 = 0.0;
    let mut k = 1;
    while 2 * k + 1 <= m + 1 {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        s0 += sign * j[2 * k] / k as f64;
        s1 += sign * (j[2 * k - 1] - j[2 * k + 1]) / k as f64;
        k += 1;
    }
    let y0 = FRAC_2_PI * (log_term * j[0]) - 2.0 * FRAC_2_PI * s0;
    let y1 = -FRAC_2_PI * j[0] / x + FRAC_2_PI * log_term * j[1] + FRAC_2_PI * s1;
    let mut out = Vec::with_capacity(n_max + 1);
    out.push(y0);
    if n_max >= 1 {
        out.push(y1);
    }
    for n in 1..n_max {
        let next = (2.0 * n as f64 / x) * out[n] - out[n - 1];
        out.push(next);
    }
    Ok(out)
}

/// Bessel function of the second kind `Y_n(x)`.
pub fn bessel_y(n: usize, x: f64) -> Result<f64, SpecialError> {
    Ok(bessel_y_all(n, x)?[n])
}

/// `H^(1)_0(x) … H^(1)_{n_max}(x)`.
pub fn hankel1_all(n_max: usize, x: f64) -> Result<Vec<Complex64>, SpecialError> {
    let j = bessel_j_all(n_max, x)?;
    let y = bessel_y_all(n_max, x)?;
    Ok(j.iter().zip(&y).map(|(&a, &b)| Complex64::new(a, b)).collect())
}

/// Hankel function of the first kind `H^(1)_n(x) = J_n(x) + i Y_n(x)`.
pub fn hankel1(n: usize, x: f64) -> Result<Complex64, SpecialError> {
    check_positive(x)?;
    Ok(hankel1_all(n, x)?[n])
}

/// Derivatives `H^(1)'_n(x)` for `n = 0..=n_max`, from `H'_n = H_{n-1} − (n/x) H_n`.
pub fn hankel1_deriv_all(n_max: usize, x: f64) -> Result<Vec<Complex64>, SpecialError> {
    let h = hankel1_all(n_max + 1, x)?;
    Ok((0..=n_max)
        .map(|n| if n == 0 { -h[1] } else { h[n - 1] - h[n] * (n as f64 / x) })
        .collect())
}

pub fn hankel1_deriv(n: usize, x: f64) -> Result<Complex64, SpecialError> {
    check_positive(x)?;
    Ok(hankel1_deriv_all(n, x)?[n])
}

/// Derivatives `J'_n(x)` for `n = 0..=n_max`.
pub fn bessel_j_deriv_all(n_max: usize, x: f64) -> Result<Vec<f64>, SpecialError> {
    check_positive(x)?;
    let j = bessel_j_all(n_max + 1, x)?;
    Ok((0..=n_max)
        .map(|n| if n == 0 { -j[1] } else { j[n - 1] - j[n] * (n as f64 / x) })
        .collect())
}

/// Spherical Bessel functions `j_0(x) … j_{n_max}(x)`.
pub fn spherical_bessel_j_all(n_max: usize, x: f64) -> Result<Vec<f64>, SpecialError> {
    check_positive(x)?;
    let m = miller_start(n_max, x);
    let mut vals = vec![0.0; m + 2];
    vals[m] = 1e-30;
    for k in (1..=m).rev() {
        vals[k - 1] = ((2 * k + 1) as f64 / x) * vals[k] - vals[k + 1];
        if vals[k - 1].abs() > RESCALE_AT {
            for v in vals[k - 1..].iter_mut() {
                *v /= RESCALE_AT;
            }
        }
    }
    // Σ (2n+1) j_n² = 1 fixes the scale, the closed forms fix the sign.
    let norm: f64 = vals.iter().enumerate().map(|(n, v)| (2 * n + 1) as f64 * v * v).sum::<f64>().sqrt();
    let (s, c) = x.sin_cos();
    let j0 = s / x;
    let j1 = s / (x * x) - c / x;
    let sign = if j0.abs() >= j1.abs() {
        (j0 * vals[0]).signum()
    } else {
        (j1 * vals[1]).signum()
    };
    vals.truncate(n_max + 1);
    for v in vals.iter_mut() {
        *v *= sign / norm;
    }
    Ok(vals)
}

pub fn spherical_bessel_j(n: usize, x: f64) -> Result<f64, SpecialError> {
    Ok(spherical_bessel_j_all(n, x)?[n])
}

/// Spherical Bessel functions of the second kind `y_0(x) … y_{n_max}(x)`.
pub fn spherical_bessel_y_all(n_max: usize, x: f64) -> Result<Vec<f64>, SpecialError> {
    check_positive(x)?;
    let (s, c) = x.sin_cos();
    let mut out = Vec::with_capacity(n_max + 1);
    out.push(-c / x);
    if n_max >= 1 {
        out.push(-c / (x * x) - s / x);
    }
    for n in 1..n_max {
        let next = ((2 * n + 1) as f64 / x) * out[n] - out[n - 1];
        out.push(next);
    }
    Ok(out)
}

pub fn spherical_bessel_y(n: usize, x: f64) -> Result<f64, SpecialError> {
    Ok(spherical_bessel_y_all(n, x)?[n])
}

/// `h^(1)_n(x) = j_n(x) + i y_n(x)` for `n = 0..=n_max`.
pub fn spherical_hankel1_all(n_max: usize, x: f64) -> Result<Vec<Complex64>, SpecialError> {
    let j = spherical_bessel_j_all(n_max, x)?;
    let y = spherical_bessel_y_all(n_max, x)?;
    Ok(j.iter().zip(&y).map(|(&a, &b)| Complex64::new(a, b)).collect())
}

pub fn spherical_hankel1(n: usize, x: f64) -> Result<Complex64, SpecialError> {
    Ok(spherical_hankel1_all(n, x)?[n])
}

/// `h^(1)'_n(x)` from `h'_n = h_{n-1} − ((n+1)/x) h_n`, with `h'_0 = −h_1`.
pub fn spherical_hankel1_deriv_all(n_max: usize, x: f64) -> Result<Vec<Complex64>, SpecialError> {
    let h = spherical_hankel1_all(n_max + 1, x)?;
    Ok((0..=n_max)
        .map(|n| if n == 0 { -h[1] } else { h[n - 1] - h[n] * ((n + 1) as f64 / x) })
        .collect())
}

pub fn spherical_hankel1_deriv(n: usize, x: f64) -> Result<Complex64, SpecialError> {
    Ok(spherical_hankel1_deriv_all(n, x)?[n])
}

/// Legendre polynomials `P_0(t) … P_{n_max}(t)` by Bonnet's recurrence.
pub fn legendre_all(n_max: usize, t: f64) -> Result<Vec<f64>, SpecialError> {
    if !(t.abs() <= 1.0) {
        return Err(SpecialError::Domain(format!("Legendre argument must lie in [-1, 1], got {t}")));
    }
    let mut out = Vec::with_capacity(n_max + 1);
    out.push(1.0);
    if n_max >= 1 {
        out.push(t);
    }
    for n in 1..n_max {
        let nf = n as f64;
        let next = ((2.0 * nf + 1.0) * t * out[n] - nf * out[n - 1]) / (nf + 1.0);
        out.push(next);
    }
    Ok(out)
}

pub fn legendre_p(n: usize, t: f64) -> Result<f64, SpecialError> {
    Ok(legendre_all(n, t)?[n])
}

/// Series truncation order for modal sums at size parameter `kr`.
pub fn mie_truncation(kr: f64) -> usize {
    (kr + 10.0 + 4.0 * kr.cbrt()).ceil() as usize
}

/// Large-argument modulus `sqrt(2/(πx))` of the Hankel functions.
pub fn hankel_asymptotic_modulus(x: f64) -> f64 {
    (2.0 / (PI * x)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    /// Ascending power series, valid as an oracle for moderate x.
    fn j_series(nu: f64, x: f64) -> f64 {
        let mut term = (0.5 * x).powf(nu) / gamma(nu + 1.0);
        let mut sum = term;
        for k in 1..200 {
            let kf = k as f64;
            term *= -(0.25 * x * x) / (kf * (kf + nu));
            sum += term;
            if term.abs() < 1e-18 * sum.abs() {
                break;
            }
        }
        sum
    }

    fn gamma(z: f64) -> f64 {
        // Lanczos, g = 7, plenty for the series oracle.
        const G: [f64; 9] = [
            0.999_999_999_999_809_9,
            676.520_368_121_885_1,
            -1_259.139_216_722_402_8,
            771.323_428_777_653_1,
            -176.615_029_162_140_6,
            12.507_343_278_686_905,
            -0.138_571_095_265_720_12,
            9.984_369_578_019_572e-6,
            1.505_632_735_149_311_6e-7,
        ];
        if z < 0.5 {
            return PI / ((PI * z).sin() * gamma(1.0 - z));
        }
        let z = z - 1.0;
        let mut a = G[0];
        let t = z + 7.5;
        for (i, g) in G.iter().enumerate().skip(1) {
            a += g / (z + i as f64);
        }
        (2.0 * PI).sqrt() * t.powf(z + 0.5) * (-t).exp() * a
    }

    #[test]
    fn j0_j1_at_one() {
        assert!(rel(bessel_j(0, 1.0).unwrap(), 0.765_197_686_557_966_6) < 1e-14);
        assert!(rel(bessel_j(1, 1.0).unwrap(), 0.440_050_585_744_933_5) < 1e-14);
        assert!(rel(j_series(0.0, 1.0), 0.765_197_686_557_966_6) < 1e-14);
    }

    #[test]
    fn j_at_zero_is_kronecker() {
        assert_eq!(bessel_j(0, 0.0).unwrap(), 1.0);
        assert_eq!(bessel_j(3, 0.0).unwrap(), 0.0);
        assert!(bessel_j(0, -1.0).is_err());
        assert!(bessel_y(0, 0.0).is_err());
        assert!(hankel1(0, -2.0).is_err());
    }

    #[test]
    fn high_precision_table() {
        // (n, x, J_n, Y_n) from 30-digit evaluations
        let table = [
            (0, 10.0, -0.245_935_764_451_348_34, 0.055_671_167_283_599_39),
            (5, 2.5, 0.019_501_625_134_503_22, -3.830_176_000_740_751_9),
            (20, 15.0, 0.007_360_234_079_223_485, -3.308_733_092_473_764_5),
            (3, 50.0, 0.092_734_804_061_634_43, 0.064_459_122_060_222_49),
            (60, 100.0, 0.001_063_156_304_227_703, -0.089_194_694_150_377_78),
            (40, 100.0, 0.072_701_754_822_811_06, 0.040_746_852_168_803_44),
            (0, 150.0, -0.000_774_090_375_394_291_2, -0.065_142_221_509_037_35),
            (10, 0.5, 2.613_177_360_822_803e-13, -121_963_623_349.569_63),
            (2, 200.0, 0.014_894_394_548_741_31, 0.054_418_793_495_621_81),
        ];
        for (n, x, j, y) in table {
            assert!(rel(bessel_j(n, x).unwrap(), j) < 1e-12, "J_{n}({x})");
            let ya = bessel_y(n, x).unwrap();
            assert!(rel(ya, y) < 1e-11, "Y_{n}({x}) = {ya} vs {y}");
        }
    }

    #[test]
    fn series_oracle_for_moderate_arguments() {
        for &(n, x) in &[(0usize, 0.3), (2, 4.0), (7, 3.0), (12, 9.5), (30, 12.0)] {
            let s = j_series(n as f64, x);
            assert!(rel(bessel_j(n, x).unwrap(), s) < 1e-11, "J_{n}({x})");
        }
    }

    #[test]
    fn hankel_at_one() {
        let h = hankel1(0, 1.0).unwrap();
        assert!((h.re - 0.765_197_686_6).abs() < 1e-10);
        assert!((h.im - 0.088_256_964_2).abs() < 1e-10);
    }

    #[test]
    fn h0_prime_is_minus_h1() {
        for &x in &[0.2, 1.0, 7.3, 42.0] {
            let d = hankel1_deriv(0, x).unwrap();
            let h1 = hankel1(1, x).unwrap();
            assert!((d + h1).norm() <= 1e-15 * h1.norm());
        }
    }

    #[test]
    fn wronskian() {
        let x = 2.5;
        let n = 3;
        let j = bessel_j_all(n + 1, x).unwrap();
        let y = bessel_y_all(n + 1, x).unwrap();
        let jp = j[n - 1] - (n as f64 / x) * j[n];
        let yp = y[n - 1] - (n as f64 / x) * y[n];
        let w = j[n] * yp - jp * y[n];
        assert!((w - 2.0 / (PI * x)).abs() < 1e-10);
    }

    #[test]
    fn spherical_closed_forms() {
        assert!(spherical_bessel_j(0, PI).unwrap().abs() < 1e-15);
        let h0 = spherical_hankel1(0, 1.0).unwrap();
        assert!((h0.re - 0.841_470_984_8).abs() < 1e-10);
        assert!((h0.im + 0.540_302_305_9).abs() < 1e-10);
        assert!(rel(spherical_bessel_j(1, 1.0).unwrap(), 0.301_168_678_939_756_8) < 1e-14);
        let table = [
            (5, 3.0, 0.016_397_480_955_999_103, -2.247_023_328_465_390),
            (20, 10.0, 2.308_371_961_319_468_7e-6, -1_211.210_605_352_603_3),
            (2, 50.0, 0.004_083_240_843_399_145, 0.019_591_011_209_603_17),
            (30, 5.0, 4.282_730_217_299_212_5e-22, -7.760_717_569_758_479e18),
        ];
        for (n, x, j, y) in table {
            assert!(rel(spherical_bessel_j(n, x).unwrap(), j) < 1e-12, "j_{n}({x})");
            assert!(rel(spherical_bessel_y(n, x).unwrap(), y) < 1e-12, "y_{n}({x})");
        }
    }

    #[test]
    fn spherical_cylindrical_bridge() {
        for &(n, x) in &[(0usize, 0.7), (1, 2.0), (4, 5.5), (9, 8.0), (15, 3.0)] {
            let via_half = (PI / (2.0 * x)).sqrt() * j_series(n as f64 + 0.5, x);
            let direct = spherical_bessel_j(n, x).unwrap();
            assert!((direct - via_half).abs() <= 1e-10 * via_half.abs().max(1e-3), "n={n} x={x}");
        }
    }

    #[test]
    fn spherical_derivative_identity() {
        // h_0' = -h_1
        let x = 3.7;
        let d = spherical_hankel1_deriv(0, x).unwrap();
        let h1 = spherical_hankel1(1, x).unwrap();
        assert!((d + h1).norm() < 1e-15);
    }

    #[test]
    fn legendre_values() {
        assert_eq!(legendre_p(5, 1.0).unwrap(), 1.0);
        assert_eq!(legendre_p(2, 0.0).unwrap(), -0.5);
        // P_10 from its explicit coefficients
        let c = [-63.0, 0.0, 3465.0, 0.0, -30030.0, 0.0, 90090.0, 0.0, -109395.0, 0.0, 46189.0];
        let t: f64 = 0.3;
        let direct: f64 = c.iter().enumerate().map(|(k, a)| a * t.powi(k as i32)).sum::<f64>() / 256.0;
        assert!((legendre_p(10, t).unwrap() - direct).abs() < 1e-14);
        assert!(legendre_p(3, 1.5).is_err());
    }

    #[test]
    fn asymptotic_modulus() {
        for &x in &[50.0, 80.0, 120.0] {
            let h = hankel1(0, x).unwrap();
            assert!(rel(h.norm(), hankel_asymptotic_modulus(x)) < 1e-3);
        }
    }
}
