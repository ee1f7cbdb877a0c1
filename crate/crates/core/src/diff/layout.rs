//! Monomial layouts for truncated multivariate Taylor polynomials.
//!
//! A layout fixes the number of independent coordinates (1..=3) and the
//! truncation order (0..=3). Coefficients are stored in Taylor
//! normalization, i.e. the coefficient of the multi-index `α` is
//! `∂^α f / α!`, ordered by total degree and then lexicographically.

use std::sync::OnceLock;

/// Largest supported number of coordinates.
pub const MAX_DIMS: usize = 3;
/// Largest supported truncation order.
pub const MAX_ORDER: usize = 3;
/// Number of monomials for three coordinates at order three.
pub const MAX_COMPONENTS: usize = 20;

/// Monomial table plus the product rule for one `(dims, order)` pair.
#[derive(Debug)]
pub struct Layout {
    dims: usize,
    order: usize,
    monomials: Vec<[u8; MAX_DIMS]>,
    degrees: Vec<u8>,
    factorials: Vec<f64>,
    /// `(i, j, k)` such that monomial i times monomial j equals monomial k.
    products: Vec<(u8, u8, u8)>,
    /// Same as `products` restricted to non-constant factors.
    nilpotent_products: Vec<(u8, u8, u8)>,
    /// `(i, j, l, k)`: non-constant monomials whose triple product is monomial k.
    cubic_products: Vec<(u8, u8, u8, u8)>,
    /// `nilpotent_products` folded over `i ≤ j`, with the multiplicity last.
    sym_quadratic: Vec<(usize, usize, usize, f64)>,
    /// `cubic_products` folded over `i ≤ j ≤ l`, with the multiplicity last.
    sym_cubic: Vec<(usize, usize, usize, usize, f64)>,
}

fn factorial(n: u8) -> f64 {
    (1..=n as u32).map(f64::from).product()
}

impl Layout {
    fn build(dims: usize, order: usize) -> Self {
        let mut monomials = Vec::new();
        for degree in 0..=order {
            let mut this_degree = Vec::new();
            let mut alpha = [0u8; MAX_DIMS];
            collect(dims, degree, 0, &mut alpha, &mut this_degree);
            this_degree.sort_by(|a, b| b.cmp(a));
            monomials.extend(this_degree);
        }
        let degrees: Vec<u8> = monomials.iter().map(|m| m.iter().sum()).collect();
        let factorials = monomials
            .iter()
            .map(|m| m.iter().map(|&e| factorial(e)).product())
            .collect();
        let find = |target: [u8; MAX_DIMS]| monomials.iter().position(|m| *m == target);
        let mut products = Vec::new();
        for (i, a) in monomials.iter().enumerate() {
            for (j, b) in monomials.iter().enumerate() {
                let mut sum = [0u8; MAX_DIMS];
                for d in 0..MAX_DIMS {
                    sum[d] = a[d] + b[d];
                }
                if let Some(k) = find(sum) {
                    products.push((i as u8, j as u8, k as u8));
                }
            }
        }
        let nilpotent_products = products
            .iter()
            .copied()
            .filter(|&(i, j, _)| i != 0 && j != 0)
            .collect::<Vec<_>>();
        let mut cubic_products = Vec::new();
        for &(i, j, m) in &nilpotent_products {
            for &(m2, l, k) in &nilpotent_products {
                if m2 == m {
                    cubic_products.push((i, j, l, k));
                }
            }
        }
        let mut sym_quadratic: Vec<(usize, usize, usize, f64)> = Vec::new();
        for &(i, j, k) in &nilpotent_products {
            if i <= j {
                sym_quadratic.push((i as usize, j as usize, k as usize, if i == j { 1.0 } else { 2.0 }));
            }
        }
        let mut sym_cubic: Vec<(usize, usize, usize, usize, f64)> = Vec::new();
        for &(i, j, l, k) in &cubic_products {
            if i <= j && j <= l {
                let m = if i == l { 1.0 } else if i == j || j == l { 3.0 } else { 6.0 };
                sym_cubic.push((i as usize, j as usize, l as usize, k as usize, m));
            }
        }
        Self { dims, order, monomials, degrees, factorials, products, nilpotent_products, cubic_products, sym_quadratic, sym_cubic }
    }

    /// Shared layout for `dims` coordinates truncated at `order`.
    pub fn get(dims: usize, order: usize) -> &'static Layout {
        assert!((1..=MAX_DIMS).contains(&dims), "unsupported jet dimension {dims}");
        assert!(order <= MAX_ORDER, "unsupported jet order {order}");
        static TABLE: OnceLock<Vec<Layout>> = OnceLock::new();
        let table = TABLE.get_or_init(|| {
            let mut v = Vec::new();
            for d in 1..=MAX_DIMS {
                for o in 0..=MAX_ORDER {
                    v.push(Layout::build(d, o));
                }
            }
            v
        });
        &table[(dims - 1) * (MAX_ORDER + 1) + order]
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Number of stored coefficients.
    pub fn len(&self) -> usize {
        self.monomials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.monomials.is_empty()
    }

    pub fn monomial(&self, i: usize) -> [u8; MAX_DIMS] {
        self.monomials[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.degrees[i] as usize
    }

    /// `α!` for monomial `i`; multiplies a Taylor coefficient into a derivative.
    pub fn factorial(&self, i: usize) -> f64 {
        self.factorials[i]
    }

    pub fn products(&self) -> &[(u8, u8, u8)] {
        &self.products
    }

    pub fn nilpotent_products(&self) -> &[(u8, u8, u8)] {
        &self.nilpotent_products
    }

    pub fn cubic_products(&self) -> &[(u8, u8, u8, u8)] {
        &self.cubic_products
    }

    /// `(i, j, k, m)`: `δ²` gains `m · z_i z_j` in component `k`.
    pub fn symmetric_quadratic(&self) -> &[(usize, usize, usize, f64)] {
        &self.sym_quadratic
    }

    /// `(i, j, l, k, m)`: `δ³` gains `m · z_i z_j z_l` in component `k`.
    pub fn symmetric_cubic(&self) -> &[(usize, usize, usize, usize, f64)] {
        &self.sym_cubic
    }

    /// Index of a multi-index, if it is within the truncation order.
    pub fn index_of(&self, alpha: [u8; MAX_DIMS]) -> Option<usize> {
        self.monomials.iter().position(|m| *m == alpha)
    }

    /// Index of the derivative with respect to the listed coordinates.
    pub fn index_of_partial(&self, coords: &[usize]) -> Option<usize> {
        let mut alpha = [0u8; MAX_DIMS];
        for &c in coords {
            if c >= self.dims {
                return None;
            }
            alpha[c] += 1;
        }
        self.index_of(alpha)
    }
}

fn collect(dims: usize, remaining: usize, pos: usize, alpha: &mut [u8; MAX_DIMS], out: &mut Vec<[u8; MAX_DIMS]>) {
    if pos == dims - 1 {
        alpha[pos] = remaining as u8;
        out.push(*alpha);
        alpha[pos] = 0;
        return;
    }
    for e in (0..=remaining).rev() {
        alpha[pos] = e as u8;
        collect(dims, remaining - e, pos + 1, alpha, out);
    }
    alpha[pos] = 0;
}
