//! Truncated multivariate Taylor arithmetic.
//!
//! A [`Jet`] stores the Taylor coefficients of a smooth function around a
//! base point, in all chart variables, up to a fixed total order. Arithmetic
//! and the elementary functions propagate those coefficients exactly (up to
//! round-off), so a jet of order `p` carries every partial derivative of
//! order `<= p`. Differentiating a jet lowers its order by one, which is how
//! Christoffel symbols, curvature and its covariant derivative are obtained
//! from metric components without finite differences.
//!
//! Monomials are enumerated by total degree, then lexicographically, so the
//! coefficients of a lower-order jet are a prefix of a higher-order one in the
//! same number of variables.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};
use std::sync::{Arc, LazyLock, Mutex};

/// Monomial tables shared by all jets with the same `(dim, order)`.
pub struct JetSpace {
    dim: usize,
    order: usize,
    monomials: Vec<Vec<u8>>,
    index: HashMap<Vec<u8>, usize>,
    products: Vec<(u32, u32, u32)>,
    // per direction: (destination in the order-1 space, source, factor)
    derivatives: Vec<Vec<(u32, u32, f64)>>,
}

static SPACES: LazyLock<Mutex<HashMap<(usize, usize), Arc<JetSpace>>>> =
    LazyLock::new(|| Mutex::new(HashMap::new()));

fn monomials_of_degree(dim: usize, degree: usize) -> Vec<Vec<u8>> {
    if dim == 0 {
        return if degree == 0 { vec![Vec::new()] } else { Vec::new() };
    }
    let mut out = Vec::new();
    for first in (0..=degree).rev() {
        for mut tail in monomials_of_degree(dim - 1, degree - first) {
            let mut m = Vec::with_capacity(dim);
            m.push(first as u8);
            m.append(&mut tail);
            out.push(m);
        }
    }
    out
}

/// Number of monomials of total degree `<= order` in `dim` variables.
pub fn monomial_count(dim: usize, order: usize) -> usize {
    // binomial(dim + order, order)
    let mut c = 1usize;
    for k in 1..=order {
        c = c * (dim + k) / k;
    }
    c
}

impl JetSpace {
    fn build(dim: usize, order: usize) -> Self {
        let mut monomials = Vec::new();
        for d in 0..=order {
            monomials.extend(monomials_of_degree(dim, d));
        }
        let index: HashMap<Vec<u8>, usize> = monomials
            .iter()
            .enumerate()
            .map(|(i, m)| (m.clone(), i))
            .collect();
        let degree = |m: &[u8]| m.iter().map(|&e| e as usize).sum::<usize>();

        let mut products = Vec::new();
        for (i, mi) in monomials.iter().enumerate() {
            let di = degree(mi);
            for (j, mj) in monomials.iter().enumerate() {
                if di + degree(mj) > order {
                    continue;
                }
                let sum: Vec<u8> = mi.iter().zip(mj).map(|(a, b)| a + b).collect();
                products.push((i as u32, j as u32, index[&sum] as u32));
            }
        }

        let lower = if order == 0 { 0 } else { monomial_count(dim, order - 1) };
        let derivatives = (0..dim)
            .map(|k| {
                (0..lower)
                    .map(|dst| {
                        let mut m = monomials[dst].clone();
                        m[k] += 1;
                        (dst as u32, index[&m] as u32, m[k] as f64)
                    })
                    .collect()
            })
            .collect();

        Self {
            dim,
            order,
            monomials,
            index,
            products,
            derivatives,
        }
    }

    /// Shared table for `(dim, order)`.
    pub fn get(dim: usize, order: usize) -> Arc<JetSpace> {
        let mut spaces = SPACES.lock().expect("jet space cache poisoned");
        spaces
            .entry((dim, order))
            .or_insert_with(|| Arc::new(JetSpace::build(dim, order)))
            .clone()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.monomials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.monomials.is_empty()
    }

    pub fn monomial(&self, i: usize) -> &[u8] {
        &self.monomials[i]
    }

    pub fn index_of(&self, exponents: &[u8]) -> Option<usize> {
        self.index.get(exponents).copied()
    }
}

/// Taylor expansion of a scalar quantity around a base point.
#[derive(Clone)]
pub struct Jet {
    space: Arc<JetSpace>,
    coeffs: Vec<f64>,
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Jet")
            .field("dim", &self.space.dim)
            .field("order", &self.space.order)
            .field("coeffs", &self.coeffs)
            .finish()
    }
}

impl Jet {
    pub fn constant(dim: usize, order: usize, value: f64) -> Self {
        let space = JetSpace::get(dim, order);
        let mut coeffs = vec![0.0; space.len()];
        coeffs[0] = value;
        Self { space, coeffs }
    }

    /// The coordinate function `x^index` expanded around `value`.
    pub fn variable(dim: usize, order: usize, value: f64, index: usize) -> Self {
        assert!(index < dim, "variable index {index} out of range for dim {dim}");
        let mut jet = Self::constant(dim, order, value);
        if order > 0 {
            jet.coeffs[1 + index] = 1.0;
        }
        jet
    }

    /// Coordinate jets for every variable at `point`.
    pub fn seed(point: &[f64], order: usize) -> Vec<Jet> {
        let dim = point.len();
        point
            .iter()
            .enumerate()
            .map(|(k, &v)| Jet::variable(dim, order, v, k))
            .collect()
    }

    pub fn zero_like(&self) -> Self {
        Self {
            space: self.space.clone(),
            coeffs: vec![0.0; self.coeffs.len()],
        }
    }

    pub fn constant_like(&self, value: f64) -> Self {
        let mut jet = self.zero_like();
        jet.coeffs[0] = value;
        jet
    }

    pub fn dim(&self) -> usize {
        self.space.dim
    }

    pub fn order(&self) -> usize {
        self.space.order
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn space(&self) -> &JetSpace {
        &self.space
    }

    /// Partial derivative of order `|exponents|` at the base point.
    pub fn derivative(&self, exponents: &[u8]) -> f64 {
        let idx = self
            .space
            .index_of(exponents)
            .unwrap_or_else(|| panic!("derivative {exponents:?} exceeds jet order {}", self.order()));
        let factorial: f64 = exponents
            .iter()
            .map(|&e| (1..=e as u32).product::<u32>() as f64)
            .product();
        self.coeffs[idx] * factorial
    }

    /// First partials at the base point.
    pub fn gradient(&self) -> Vec<f64> {
        assert!(self.order() >= 1, "gradient of an order-0 jet");
        self.coeffs[1..=self.dim()].to_vec()
    }

    pub fn truncate(&self, order: usize) -> Jet {
        if order >= self.order() {
            return self.clone();
        }
        let space = JetSpace::get(self.dim(), order);
        let coeffs = self.coeffs[..space.len()].to_vec();
        Jet { space, coeffs }
    }

    /// `∂/∂x^direction`, one order lower.
    pub fn partial(&self, direction: usize) -> Jet {
        assert!(self.order() >= 1, "cannot differentiate an order-0 jet");
        let space = JetSpace::get(self.dim(), self.order() - 1);
        let mut coeffs = vec![0.0; space.len()];
        for &(dst, src, factor) in &self.space.derivatives[direction] {
            coeffs[dst as usize] = factor * self.coeffs[src as usize];
        }
        Jet { space, coeffs }
    }

    fn aligned<'a>(a: &'a Jet, b: &'a Jet) -> (std::borrow::Cow<'a, Jet>, std::borrow::Cow<'a, Jet>) {
        use std::borrow::Cow;
        assert_eq!(a.dim(), b.dim(), "jets over different charts");
        match a.order().cmp(&b.order()) {
            std::cmp::Ordering::Equal => (Cow::Borrowed(a), Cow::Borrowed(b)),
            std::cmp::Ordering::Less => (Cow::Borrowed(a), Cow::Owned(b.truncate(a.order()))),
            std::cmp::Ordering::Greater => (Cow::Owned(a.truncate(b.order())), Cow::Borrowed(b)),
        }
    }

    fn mul_jet(&self, other: &Jet) -> Jet {
        let (a, b) = Self::aligned(self, other);
        let mut coeffs = vec![0.0; a.coeffs.len()];
        for &(i, j, k) in &a.space.products {
            let (x, y) = (a.coeffs[i as usize], b.coeffs[j as usize]);
            if x != 0.0 && y != 0.0 {
                coeffs[k as usize] += x * y;
            }
        }
        Jet {
            space: a.space.clone(),
            coeffs,
        }
    }

    /// Applies a univariate function given its derivatives at the base value:
    /// `g(u0 + h) = Σ g⁽ᵏ⁾(u0)/k! hᵏ`.
    fn apply_series(&self, derivs: &[f64]) -> Jet {
        let mut h = self.clone();
        h.coeffs[0] = 0.0;
        let mut out = self.constant_like(derivs[0]);
        let mut power = self.constant_like(1.0);
        let mut factorial = 1.0;
        for (k, &d) in derivs.iter().enumerate().skip(1).take(self.order()) {
            power = power.mul_jet(&h);
            factorial *= k as f64;
            let scale = d / factorial;
            if scale != 0.0 {
                for (o, p) in out.coeffs.iter_mut().zip(&power.coeffs) {
                    *o += scale * p;
                }
            }
        }
        out
    }

    pub fn sin(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        let derivs: Vec<f64> = (0..=self.order())
            .map(|k| [s, c, -s, -c][k % 4])
            .collect();
        self.apply_series(&derivs)
    }

    pub fn cos(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        let derivs: Vec<f64> = (0..=self.order())
            .map(|k| [c, -s, -c, s][k % 4])
            .collect();
        self.apply_series(&derivs)
    }

    pub fn exp(&self) -> Jet {
        let e = self.value().exp();
        self.apply_series(&vec![e; self.order() + 1])
    }

    pub fn ln(&self) -> Jet {
        let u = self.value();
        let mut derivs = vec![u.ln()];
        // d^k ln u = (-1)^(k-1) (k-1)! / u^k
        let mut fact = 1.0;
        for k in 1..=self.order() {
            if k > 1 {
                fact *= (k - 1) as f64;
            }
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            derivs.push(sign * fact / u.powi(k as i32));
        }
        self.apply_series(&derivs)
    }

    /// `u^p` for real `p`, via the falling factorial.
    pub fn powf(&self, p: f64) -> Jet {
        let u = self.value();
        let mut derivs = Vec::with_capacity(self.order() + 1);
        let mut coeff = 1.0;
        for k in 0..=self.order() {
            derivs.push(coeff * u.powf(p - k as f64));
            coeff *= p - k as f64;
        }
        self.apply_series(&derivs)
    }

    pub fn powi(&self, p: i32) -> Jet {
        match p {
            0 => self.constant_like(1.0),
            1 => self.clone(),
            2 => self.mul_jet(self),
            _ if p > 0 => {
                let mut acc = self.clone();
                for _ in 1..p {
                    acc = acc.mul_jet(self);
                }
                acc
            }
            _ => self.powi(-p).recip(),
        }
    }

    pub fn sqrt(&self) -> Jet {
        self.powf(0.5)
    }

    pub fn recip(&self) -> Jet {
        let u = self.value();
        let derivs: Vec<f64> = {
            let mut out = Vec::with_capacity(self.order() + 1);
            let mut fact = 1.0;
            for k in 0..=self.order() {
                if k > 0 {
                    fact *= k as f64;
                }
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                out.push(sign * fact / u.powi(k as i32 + 1));
            }
            out
        };
        self.apply_series(&derivs)
    }

    /// Substitutes `inner` (jets in the outer variables' place) into `self`.
    ///
    /// `self` is a jet in `m` variables around `y0`; `inner[k]` are jets in
    /// another chart whose base values are `y0[k]`. The result is the Taylor
    /// expansion of the composite, truncated to the lower of the two orders.
    pub fn compose(&self, inner: &[Jet]) -> Jet {
        assert_eq!(inner.len(), self.dim(), "composition arity mismatch");
        let template = &inner[0];
        let order = self.order().min(template.order());
        let shifts: Vec<Jet> = inner
            .iter()
            .map(|j| {
                let mut h = j.truncate(order);
                h.coeffs[0] = 0.0;
                h
            })
            .collect();
        // powers[k][e] = shifts[k]^e
        let powers: Vec<Vec<Jet>> = shifts
            .iter()
            .map(|h| {
                let mut p = vec![h.constant_like(1.0)];
                for e in 1..=order {
                    let next = p[e - 1].mul_jet(h);
                    p.push(next);
                }
                p
            })
            .collect();
        let mut out = template.truncate(order).constant_like(0.0);
        let count = monomial_count(self.dim(), order);
        for idx in 0..count {
            let c = self.coeffs[idx];
            if c == 0.0 {
                continue;
            }
            let mono = self.space.monomial(idx);
            let mut term = out.constant_like(c);
            for (k, &e) in mono.iter().enumerate() {
                if e > 0 {
                    term = term.mul_jet(&powers[k][e as usize]);
                }
            }
            out += &term;
        }
        out
    }
}

macro_rules! jet_binop {
    ($trait:ident, $method:ident, $body:expr) => {
        impl $trait<&Jet> for &Jet {
            type Output = Jet;
            fn $method(self, rhs: &Jet) -> Jet {
                let f: fn(&Jet, &Jet) -> Jet = $body;
                f(self, rhs)
            }
        }
        impl $trait<Jet> for Jet {
            type Output = Jet;
            fn $method(self, rhs: Jet) -> Jet {
                (&self).$method(&rhs)
            }
        }
        impl $trait<&Jet> for Jet {
            type Output = Jet;
            fn $method(self, rhs: &Jet) -> Jet {
                (&self).$method(rhs)
            }
        }
        impl $trait<Jet> for &Jet {
            type Output = Jet;
            fn $method(self, rhs: Jet) -> Jet {
                self.$method(&rhs)
            }
        }
    };
}

jet_binop!(Add, add, |a, b| {
    let (a, b) = Jet::aligned(a, b);
    let coeffs = a.coeffs.iter().zip(&b.coeffs).map(|(x, y)| x + y).collect();
    Jet { space: a.space.clone(), coeffs }
});
jet_binop!(Sub, sub, |a, b| {
    let (a, b) = Jet::aligned(a, b);
    let coeffs = a.coeffs.iter().zip(&b.coeffs).map(|(x, y)| x - y).collect();
    Jet { space: a.space.clone(), coeffs }
});
jet_binop!(Mul, mul, |a, b| a.mul_jet(b));
jet_binop!(Div, div, |a, b| a.mul_jet(&b.recip()));

impl Neg for Jet {
    type Output = Jet;
    fn neg(mut self) -> Jet {
        self.coeffs.iter_mut().for_each(|c| *c = -*c);
        self
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        -(self.clone())
    }
}

impl AddAssign<&Jet> for Jet {
    fn add_assign(&mut self, rhs: &Jet) {
        if self.order() == rhs.order() {
            self.coeffs.iter_mut().zip(&rhs.coeffs).for_each(|(a, b)| *a += b);
        } else {
            *self = &*self + rhs;
        }
    }
}

impl SubAssign<&Jet> for Jet {
    fn sub_assign(&mut self, rhs: &Jet) {
        if self.order() == rhs.order() {
            self.coeffs.iter_mut().zip(&rhs.coeffs).for_each(|(a, b)| *a -= b);
        } else {
            *self = &*self - rhs;
        }
    }
}

impl Add<f64> for &Jet {
    type Output = Jet;
    fn add(self, rhs: f64) -> Jet {
        let mut out = self.clone();
        out.coeffs[0] += rhs;
        out
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(mut self, rhs: f64) -> Jet {
        self.coeffs[0] += rhs;
        self
    }
}

impl Sub<f64> for Jet {
    type Output = Jet;
    fn sub(mut self, rhs: f64) -> Jet {
        self.coeffs[0] -= rhs;
        self
    }
}

impl Mul<f64> for &Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        let mut out = self.clone();
        out.coeffs.iter_mut().for_each(|c| *c *= rhs);
        out
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(mut self, rhs: f64) -> Jet {
        self.coeffs.iter_mut().for_each(|c| *c *= rhs);
        self
    }
}

impl MulAssign<f64> for Jet {
    fn mul_assign(&mut self, rhs: f64) {
        self.coeffs.iter_mut().for_each(|c| *c *= rhs);
    }
}

/// Multiply-accumulate without intermediate allocation of the sum.
pub fn fma_into(acc: &mut Jet, a: &Jet, b: &Jet) {
    let prod = a.mul_jet(b);
    *acc += &prod;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monomial_counts_match_binomials() {
        assert_eq!(monomial_count(3, 0), 1);
        assert_eq!(monomial_count(3, 1), 4);
        assert_eq!(monomial_count(3, 2), 10);
        assert_eq!(monomial_count(4, 3), 35);
        assert_eq!(JetSpace::get(4, 3).len(), 35);
    }

    #[test]
    fn lower_order_space_is_prefix() {
        let lo = JetSpace::get(3, 2);
        let hi = JetSpace::get(3, 4);
        for i in 0..lo.len() {
            assert_eq!(lo.monomial(i), hi.monomial(i));
        }
    }

    #[test]
    fn polynomial_derivatives_are_exact() {
        let x = Jet::seed(&[3.0, -1.0], 3);
        // f = x0^2 x1 + 2 x1^3
        let f = &(&x[0] * &x[0]) * &x[1] + &(x[1].powi(3) * 2.0);
        assert_eq!(f.value(), -9.0 - 2.0);
        assert_eq!(f.derivative(&[1, 0]), -6.0);
        assert_eq!(f.derivative(&[0, 1]), 9.0 + 6.0);
        assert_eq!(f.derivative(&[1, 1]), 6.0);
        assert_eq!(f.derivative(&[2, 1]), 2.0);
        assert_eq!(f.derivative(&[0, 3]), 12.0);
    }

    #[test]
    fn elementary_functions_third_derivatives() {
        let x = Jet::seed(&[1.0, 2.0], 3);
        let f = (&x[0] * &x[1]).sin() * 2.0;
        // ∂xxy of 2 sin(xy) = -4y sin(xy) - 2 x y^2 cos(xy)
        let expected = -8.0 * 2f64.sin() - 8.0 * 2f64.cos();
        assert!((f.derivative(&[2, 1]) - expected).abs() < 1e-12);

        let g = x[0].exp().ln();
        assert!((g.derivative(&[1, 0]) - 1.0).abs() < 1e-13);
        assert!(g.derivative(&[2, 0]).abs() < 1e-12);

        let h = (&x[0] + 3.0).sqrt();
        // d^2/dx^2 sqrt(x+3) at x=1: -1/4 (4)^(-3/2) = -1/32
        assert!((h.derivative(&[2, 0]) + 1.0 / 32.0).abs() < 1e-14);

        let r = x[1].recip();
        // d^3 (1/y) = -6/y^4
        assert!((r.derivative(&[0, 3]) + 6.0 / 16.0).abs() < 1e-14);
    }

    #[test]
    fn partial_lowers_order() {
        let x = Jet::seed(&[0.5, 0.25], 2);
        let f = &x[0] * &x[0] * &x[1];
        let fx = f.partial(0);
        assert_eq!(fx.order(), 1);
        assert!((fx.value() - 2.0 * 0.5 * 0.25).abs() < 1e-15);
        assert!((fx.derivative(&[1, 0]) - 0.5).abs() < 1e-15);
        assert!((fx.derivative(&[0, 1]) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn composition_matches_direct_evaluation() {
        // outer g(y0, y1) = y0 * sin(y1); inner y0 = x^2, y1 = x + x z
        let x = Jet::seed(&[0.7, -0.3], 3);
        let inner = vec![&x[0] * &x[0], &x[0] + &(&x[0] * &x[1])];
        let direct = &inner[0] * &inner[1].sin();
        let y = Jet::seed(&[inner[0].value(), inner[1].value()], 3);
        let outer = &y[0] * &y[1].sin();
        let composed = outer.compose(&inner);
        for (a, b) in direct.coeffs().iter().zip(composed.coeffs()) {
            assert!((a - b).abs() < 1e-13, "{a} vs {b}");
        }
    }
}
