//! Truncated Taylor jets over real or complex scalars.
//!
//! A [`Jet`] carries a value together with all partial derivatives up to the
//! layout order with respect to up to three computational coordinates. All
//! arithmetic is exact to floating-point rounding: products truncate the
//! Taylor polynomial, univariate functions are composed through their
//! derivative sequence.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

use num_complex::Complex64;
use num_traits::{One, Zero};

use super::layout::{Layout, MAX_COMPONENTS, MAX_ORDER};

/// Scalar field a jet can be built over.
pub trait JetScalar:
    Copy
    + Send
    + Sync
    + 'static
    + PartialEq
    + fmt::Debug
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + From<f64>
{
    fn scale(self, s: f64) -> Self;
    fn magnitude(self) -> f64;
    fn is_finite_value(self) -> bool;
    fn exp_value(self) -> Self;
}

impl JetScalar for f64 {
    #[inline]
    fn scale(self, s: f64) -> Self {
        self * s
    }
    #[inline]
    fn magnitude(self) -> f64 {
        self.abs()
    }
    #[inline]
    fn is_finite_value(self) -> bool {
        self.is_finite()
    }
    #[inline]
    fn exp_value(self) -> Self {
        self.exp()
    }
}

impl JetScalar for Complex64 {
    #[inline]
    fn scale(self, s: f64) -> Self {
        self * s
    }
    #[inline]
    fn magnitude(self) -> f64 {
        self.norm()
    }
    #[inline]
    fn is_finite_value(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
    #[inline]
    fn exp_value(self) -> Self {
        self.exp()
    }
}

/// Value plus derivatives with respect to the computational coordinates.
///
/// With two coordinates this is the `(ξ, θ)` jet of the polar problems; with
/// three it is the `(ξ, θ, φ)` jet of the full spherical problems.
#[derive(Clone, Copy)]
pub struct Jet<T: JetScalar> {
    layout: &'static Layout,
    c: [T; MAX_COMPONENTS],
}

/// Real-valued jet.
pub type RJet = Jet<f64>;
/// Complex-valued jet.
pub type CJet = Jet<Complex64>;

impl<T: JetScalar> fmt::Debug for Jet<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Jet")
            .field("dims", &self.layout.dims())
            .field("order", &self.layout.order())
            .field("coeffs", &self.coeffs())
            .finish()
    }
}

impl<T: JetScalar> Jet<T> {
    pub fn constant(layout: &'static Layout, value: T) -> Self {
        let mut c = [T::zero(); MAX_COMPONENTS];
        c[0] = value;
        Self { layout, c }
    }

    pub fn zero(layout: &'static Layout) -> Self {
        Self::constant(layout, T::zero())
    }

    /// Independent coordinate number `coord` evaluated at `value`.
    pub fn variable(layout: &'static Layout, coord: usize, value: T) -> Self {
        let mut j = Self::constant(layout, value);
        if layout.order() > 0 {
            let idx = layout.index_of_partial(&[coord]).expect("coordinate out of range");
            j.c[idx] = T::one();
        }
        j
    }

    /// Builds a jet from Taylor coefficients in layout order.
    pub fn from_coeffs(layout: &'static Layout, coeffs: &[T]) -> Self {
        let mut c = [T::zero(); MAX_COMPONENTS];
        c[..layout.len()].copy_from_slice(&coeffs[..layout.len()]);
        Self { layout, c }
    }

    pub fn layout(&self) -> &'static Layout {
        self.layout
    }

    /// Taylor coefficients (`∂^α f / α!`) in layout order.
    pub fn coeffs(&self) -> &[T] {
        &self.c[..self.layout.len()]
    }

    pub fn coeffs_mut(&mut self) -> &mut [T] {
        let n = self.layout.len();
        &mut self.c[..n]
    }

    #[inline]
    pub fn value(&self) -> T {
        self.c[0]
    }

    /// Partial derivative along the listed coordinates, e.g. `&[0, 1]` is
    /// the mixed second derivative. Returns zero beyond the truncation order.
    pub fn partial(&self, coords: &[usize]) -> T {
        match self.layout.index_of_partial(coords) {
            Some(i) => self.c[i].scale(self.layout.factorial(i)),
            None => T::zero(),
        }
    }

    pub fn d(&self, p: usize) -> T {
        self.partial(&[p])
    }

    pub fn d2(&self, p: usize, q: usize) -> T {
        self.partial(&[p, q])
    }

    pub fn d3(&self, p: usize, q: usize, r: usize) -> T {
        self.partial(&[p, q, r])
    }

    /// First derivative along `coord`, as a jet one order shorter (the top
    /// order coefficients are left at zero).
    pub fn derivative(&self, coord: usize) -> Self {
        let l = self.layout;
        let mut out = Self::zero(l);
        for i in 0..l.len() {
            let mut alpha = l.monomial(i);
            alpha[coord] += 1;
            if let Some(j) = l.index_of(alpha) {
                out.c[i] = self.c[j].scale(alpha[coord] as f64);
            }
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs().iter().all(|v| v.is_finite_value())
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = *self;
        for v in out.coeffs_mut() {
            *v = v.scale(s);
        }
        out
    }

    pub fn mul_scalar(&self, s: T) -> Self {
        let mut out = *self;
        for v in out.coeffs_mut() {
            *v = *v * s;
        }
        out
    }

    pub fn add_scalar(&self, s: T) -> Self {
        let mut out = *self;
        out.c[0] += s;
        out
    }

    /// Composes `f` with this jet, given `derivs[k] = f^(k)(value)`.
    pub fn compose(&self, derivs: &[T]) -> Self {
        let l = self.layout;
        let n = l.len();
        let mut delta = *self;
        delta.c[0] = T::zero();
        let mut out = Self::constant(l, derivs[0]);
        let mut power = delta;
        let mut inv_fact = 1.0;
        for p in 1..=l.order() {
            inv_fact /= p as f64;
            let s = derivs[p].scale(inv_fact);
            for c in 1..n {
                out.c[c] += s * power.c[c];
            }
            if p < l.order() {
                power = power.mul_nilpotent(&delta);
            }
        }
        out
    }

    fn mul_nilpotent(&self, other: &Self) -> Self {
        let mut out = Self::zero(self.layout);
        for &(i, j, k) in self.layout.nilpotent_products() {
            out.c[k as usize] += self.c[i as usize] * other.c[j as usize];
        }
        out
    }

    pub fn recip(&self) -> Self {
        let v = self.value();
        let inv = T::one() / v;
        let mut d = [T::zero(); MAX_ORDER + 1];
        // d^k/dx^k x^{-1} = (-1)^k k! x^{-k-1}
        let mut term = inv;
        for (k, slot) in d.iter_mut().enumerate() {
            *slot = term;
            term = -(term * inv).scale((k + 1) as f64);
        }
        self.compose(&d)
    }

    pub fn exp(&self) -> Self {
        let e = self.value().exp_value();
        self.compose(&[e; MAX_ORDER + 1])
    }

    pub fn square(&self) -> Self {
        *self * *self
    }
}

impl Jet<f64> {
    pub fn sin(&self) -> Self {
        let (s, c) = self.value().sin_cos();
        self.compose(&[s, c, -s, -c])
    }

    pub fn cos(&self) -> Self {
        let (s, c) = self.value().sin_cos();
        self.compose(&[c, -s, -c, s])
    }

    pub fn tanh(&self) -> Self {
        self.compose(&tanh_derivs(self.value()))
    }

    /// `x^p` for a real exponent; requires a positive value.
    pub fn powf(&self, p: f64) -> Self {
        let v = self.value();
        let mut d = [0.0; MAX_ORDER + 1];
        let mut coef = 1.0;
        for (k, slot) in d.iter_mut().enumerate() {
            *slot = coef * v.powf(p - k as f64);
            coef *= p - k as f64;
        }
        self.compose(&d)
    }

    pub fn sqrt(&self) -> Self {
        self.powf(0.5)
    }

    pub fn to_complex(&self) -> CJet {
        let mut c = [Complex64::zero(); MAX_COMPONENTS];
        for (dst, src) in c.iter_mut().zip(self.coeffs()) {
            *dst = Complex64::new(*src, 0.0);
        }
        Jet { layout: self.layout, c }
    }

    /// `e^{i·self}`.
    pub fn cis(&self) -> CJet {
        CJet::from_parts(&self.cos(), &self.sin())
    }

    /// `self · i·s`, a purely imaginary jet.
    pub fn times_imag(&self, s: f64) -> CJet {
        let mut c = [Complex64::zero(); MAX_COMPONENTS];
        for (dst, src) in c.iter_mut().zip(self.coeffs()) {
            *dst = Complex64::new(0.0, *src * s);
        }
        Jet { layout: self.layout, c }
    }
}

impl Jet<Complex64> {
    pub fn from_parts(re: &RJet, im: &RJet) -> CJet {
        check_layouts(re, im);
        let mut c = [Complex64::zero(); MAX_COMPONENTS];
        for (i, dst) in c.iter_mut().enumerate().take(re.layout.len()) {
            *dst = Complex64::new(re.c[i], im.c[i]);
        }
        Jet { layout: re.layout, c }
    }

    pub fn re(&self) -> RJet {
        let mut c = [0.0; MAX_COMPONENTS];
        for (dst, src) in c.iter_mut().zip(self.coeffs()) {
            *dst = src.re;
        }
        Jet { layout: self.layout, c }
    }

    pub fn im(&self) -> RJet {
        let mut c = [0.0; MAX_COMPONENTS];
        for (dst, src) in c.iter_mut().zip(self.coeffs()) {
            *dst = src.im;
        }
        Jet { layout: self.layout, c }
    }

    /// Multiplication by a real jet.
    pub fn mul_real(&self, other: &RJet) -> CJet {
        let mut out = CJet::zero(self.layout);
        for &(i, j, k) in self.layout.products() {
            out.c[k as usize] += self.c[i as usize] * other.c[j as usize];
        }
        out
    }
}

/// `tanh` and its first four derivatives at `x`.
pub fn tanh_derivs(x: f64) -> [f64; 5] {
    tanh_derivs_from_value(x.tanh())
}

/// `tanh` derivatives expressed through `t = tanh(x)`.
pub fn tanh_derivs_from_value(t: f64) -> [f64; 5] {
    let d1 = 1.0 - t * t;
    let d2 = -2.0 * t * d1;
    let d3 = -2.0 * (d1 * d1 + t * d2);
    let d4 = -2.0 * (3.0 * d1 * d2 + t * d3);
    [t, d1, d2, d3, d4]
}

fn check_layouts<T: JetScalar>(a: &Jet<T>, b: &Jet<T>) {
    debug_assert!(std::ptr::eq(a.layout, b.layout), "jet layout mismatch");
}

impl<T: JetScalar> Add for Jet<T> {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        check_layouts(&self, &rhs);
        let n = self.layout.len();
        for i in 0..n {
            self.c[i] += rhs.c[i];
        }
        self
    }
}

impl<T: JetScalar> Sub for Jet<T> {
    type Output = Self;
    fn sub(mut self, rhs: Self) -> Self {
        check_layouts(&self, &rhs);
        let n = self.layout.len();
        for i in 0..n {
            self.c[i] = self.c[i] - rhs.c[i];
        }
        self
    }
}

impl<T: JetScalar> Neg for Jet<T> {
    type Output = Self;
    fn neg(mut self) -> Self {
        let n = self.layout.len();
        for i in 0..n {
            self.c[i] = -self.c[i];
        }
        self
    }
}

impl<T: JetScalar> Mul for Jet<T> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        check_layouts(&self, &rhs);
        let mut out = Self::zero(self.layout);
        for &(i, j, k) in self.layout.products() {
            out.c[k as usize] += self.c[i as usize] * rhs.c[j as usize];
        }
        out
    }
}

impl<T: JetScalar> Div for Jet<T> {
    type Output = Self;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, rhs: Self) -> Self {
        self * rhs.recip()
    }
}

impl<T: JetScalar> AddAssign for Jet<T> {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}
