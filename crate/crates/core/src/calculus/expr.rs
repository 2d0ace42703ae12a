//! Expression trees for component functions.
//!
//! An [`Expr`] is evaluated over any [`Scalar`]: plain `f64` for values, or
//! [`Jet`] for values together with partial derivatives. Evaluating with
//! arbitrary jets as variables composes the expression with another map.

use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::Arc;

use super::jet::Jet;

/// Numbers an [`Expr`] can be evaluated over.
pub trait Scalar: Clone {
    fn lift(&self, value: f64) -> Self;
    fn add(&self, other: &Self) -> Self;
    fn sub(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn div(&self, other: &Self) -> Self;
    fn neg(&self) -> Self;
    fn sin(&self) -> Self;
    fn cos(&self) -> Self;
    fn exp(&self) -> Self;
    fn ln(&self) -> Self;
    fn sqrt(&self) -> Self;
    fn powi(&self, p: i32) -> Self;
}

impl Scalar for f64 {
    fn lift(&self, value: f64) -> Self {
        value
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn div(&self, other: &Self) -> Self {
        self / other
    }
    fn neg(&self) -> Self {
        -self
    }
    fn sin(&self) -> Self {
        f64::sin(*self)
    }
    fn cos(&self) -> Self {
        f64::cos(*self)
    }
    fn exp(&self) -> Self {
        f64::exp(*self)
    }
    fn ln(&self) -> Self {
        f64::ln(*self)
    }
    fn sqrt(&self) -> Self {
        f64::sqrt(*self)
    }
    fn powi(&self, p: i32) -> Self {
        f64::powi(*self, p)
    }
}

impl Scalar for Jet {
    fn lift(&self, value: f64) -> Self {
        self.constant_like(value)
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn div(&self, other: &Self) -> Self {
        self / other
    }
    fn neg(&self) -> Self {
        -self
    }
    fn sin(&self) -> Self {
        Jet::sin(self)
    }
    fn cos(&self) -> Self {
        Jet::cos(self)
    }
    fn exp(&self) -> Self {
        Jet::exp(self)
    }
    fn ln(&self) -> Self {
        Jet::ln(self)
    }
    fn sqrt(&self) -> Self {
        Jet::sqrt(self)
    }
    fn powi(&self, p: i32) -> Self {
        Jet::powi(self, p)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Const(f64),
    Var(usize),
    Add(Expr, Expr),
    Sub(Expr, Expr),
    Mul(Expr, Expr),
    Div(Expr, Expr),
    Neg(Expr),
    Powi(Expr, i32),
    Sin(Expr),
    Cos(Expr),
    Exp(Expr),
    Ln(Expr),
    Sqrt(Expr),
}

/// A smooth function of the chart coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr(Arc<Node>);

impl Expr {
    fn node(node: Node) -> Self {
        Expr(Arc::new(node))
    }

    pub fn constant(value: f64) -> Self {
        Self::node(Node::Const(value))
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn one() -> Self {
        Self::constant(1.0)
    }

    /// The coordinate function `x^index`.
    pub fn var(index: usize) -> Self {
        Self::node(Node::Var(index))
    }

    pub fn powi(&self, p: i32) -> Self {
        Self::node(Node::Powi(self.clone(), p))
    }

    pub fn sin(&self) -> Self {
        Self::node(Node::Sin(self.clone()))
    }

    pub fn cos(&self) -> Self {
        Self::node(Node::Cos(self.clone()))
    }

    pub fn exp(&self) -> Self {
        Self::node(Node::Exp(self.clone()))
    }

    pub fn ln(&self) -> Self {
        Self::node(Node::Ln(self.clone()))
    }

    pub fn sqrt(&self) -> Self {
        Self::node(Node::Sqrt(self.clone()))
    }

    pub fn is_zero(&self) -> bool {
        matches!(*self.0, Node::Const(c) if c == 0.0)
    }

    /// Largest variable index referenced, if any.
    pub fn max_var(&self) -> Option<usize> {
        match &*self.0 {
            Node::Const(_) => None,
            Node::Var(i) => Some(*i),
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                a.max_var().max(b.max_var())
            }
            Node::Neg(a)
            | Node::Powi(a, _)
            | Node::Sin(a)
            | Node::Cos(a)
            | Node::Exp(a)
            | Node::Ln(a)
            | Node::Sqrt(a) => a.max_var(),
        }
    }

    /// Evaluates with `vars[i]` substituted for `x^i`. `vars` must be non-empty.
    pub fn eval<S: Scalar>(&self, vars: &[S]) -> S {
        match &*self.0 {
            Node::Const(c) => vars[0].lift(*c),
            Node::Var(i) => vars[*i].clone(),
            Node::Add(a, b) => a.eval(vars).add(&b.eval(vars)),
            Node::Sub(a, b) => a.eval(vars).sub(&b.eval(vars)),
            Node::Mul(a, b) => {
                // skip work on structural zeros, which are common in metric components
                if a.is_zero() || b.is_zero() {
                    return vars[0].lift(0.0);
                }
                a.eval(vars).mul(&b.eval(vars))
            }
            Node::Div(a, b) => a.eval(vars).div(&b.eval(vars)),
            Node::Neg(a) => a.eval(vars).neg(),
            Node::Powi(a, p) => a.eval(vars).powi(*p),
            Node::Sin(a) => a.eval(vars).sin(),
            Node::Cos(a) => a.eval(vars).cos(),
            Node::Exp(a) => a.eval(vars).exp(),
            Node::Ln(a) => a.eval(vars).ln(),
            Node::Sqrt(a) => a.eval(vars).sqrt(),
        }
    }

    pub fn value_at(&self, point: &[f64]) -> f64 {
        self.eval(point)
    }

    /// Jet of the given order at `point`.
    pub fn jet_at(&self, point: &[f64], order: usize) -> Jet {
        self.eval(&Jet::seed(point, order))
    }
}

impl From<f64> for Expr {
    fn from(value: f64) -> Self {
        Expr::constant(value)
    }
}

macro_rules! expr_binop {
    ($trait:ident, $method:ident, $variant:ident) => {
        impl $trait<Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                Expr::node(Node::$variant(self, rhs))
            }
        }
        impl $trait<&Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                Expr::node(Node::$variant(self.clone(), rhs.clone()))
            }
        }
        impl $trait<f64> for Expr {
            type Output = Expr;
            fn $method(self, rhs: f64) -> Expr {
                Expr::node(Node::$variant(self, Expr::constant(rhs)))
            }
        }
        impl $trait<Expr> for f64 {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                Expr::node(Node::$variant(Expr::constant(self), rhs))
            }
        }
    };
}

expr_binop!(Add, add, Add);
expr_binop!(Sub, sub, Sub);
expr_binop!(Mul, mul, Mul);
expr_binop!(Div, div, Div);

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::node(Node::Neg(self))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluates_over_f64_and_jets() {
        let x = Expr::var(0);
        let y = Expr::var(1);
        let f = (x.clone() * y.clone()).sin() + x.powi(2) / 2.0;
        let p = [1.0, 2.0];
        let v = f.value_at(&p);
        assert!((v - (2f64.sin() + 0.5)).abs() < 1e-15);
        let j = f.jet_at(&p, 2);
        assert!((j.value() - v).abs() < 1e-15);
        assert!((j.derivative(&[1, 0]) - (2.0 * 2f64.cos() + 1.0)).abs() < 1e-14);
        assert_eq!(f.max_var(), Some(1));
    }
}
