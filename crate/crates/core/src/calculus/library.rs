//! Named component functions addressable from scenario files.

use serde::{Deserialize, Serialize};

use super::expr::Expr;
use crate::error::{Error, Result};

/// One term `coeff · Π x_i^{powers[i]}` of a polynomial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub coeff: f64,
    pub powers: Vec<u32>,
}

/// A component function built from the field library.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldSpec {
    Const {
        value: f64,
    },
    Coord {
        index: usize,
    },
    Polynomial {
        terms: Vec<Monomial>,
    },
    Sin {
        arg: Box<FieldSpec>,
    },
    Cos {
        arg: Box<FieldSpec>,
    },
    Exp {
        arg: Box<FieldSpec>,
    },
    Sqrt {
        arg: Box<FieldSpec>,
    },
    /// Integer power, negative exponents allowed.
    Powi {
        arg: Box<FieldSpec>,
        exponent: i32,
    },
    Sum {
        terms: Vec<FieldSpec>,
    },
    Product {
        factors: Vec<FieldSpec>,
    },
    Scaled {
        factor: f64,
        field: Box<FieldSpec>,
    },
    /// `H = A(u)(x² − y²) + 2B(u)xy + C(u)(x² + y²)` with `A, B, C` given by
    /// ascending coefficient lists in `u`.
    PpWaveProfile {
        u: usize,
        x: usize,
        y: usize,
        a: Vec<f64>,
        b: Vec<f64>,
        #[serde(default)]
        c: Vec<f64>,
    },
}

impl FieldSpec {
    pub fn constant(value: f64) -> Self {
        FieldSpec::Const { value }
    }

    pub fn coord(index: usize) -> Self {
        FieldSpec::Coord { index }
    }

    /// Builds the expression, rejecting coordinates outside `0..dim`.
    pub fn to_expr(&self, dim: usize) -> Result<Expr> {
        let check = |i: usize| {
            if i < dim {
                Ok(())
            } else {
                Err(Error::Scenario(format!(
                    "coordinate index {i} out of range for dimension {dim}"
                )))
            }
        };
        Ok(match self {
            FieldSpec::Const { value } => Expr::constant(*value),
            FieldSpec::Coord { index } => {
                check(*index)?;
                Expr::var(*index)
            }
            FieldSpec::Polynomial { terms } => {
                let mut acc: Option<Expr> = None;
                for t in terms {
                    if t.powers.len() > dim {
                        return Err(Error::Scenario(format!(
                            "monomial with {} exponents in dimension {dim}",
                            t.powers.len()
                        )));
                    }
                    let mut term = Expr::constant(t.coeff);
                    for (i, &p) in t.powers.iter().enumerate() {
                        if p > 0 {
                            term = term * Expr::var(i).powi(p as i32);
                        }
                    }
                    acc = Some(match acc {
                        None => term,
                        Some(a) => a + term,
                    });
                }
                acc.unwrap_or_else(Expr::zero)
            }
            FieldSpec::Sin { arg } => arg.to_expr(dim)?.sin(),
            FieldSpec::Cos { arg } => arg.to_expr(dim)?.cos(),
            FieldSpec::Exp { arg } => arg.to_expr(dim)?.exp(),
            FieldSpec::Sqrt { arg } => arg.to_expr(dim)?.sqrt(),
            FieldSpec::Powi { arg, exponent } => arg.to_expr(dim)?.powi(*exponent),
            FieldSpec::Sum { terms } => {
                let mut acc = Expr::zero();
                for (i, t) in terms.iter().enumerate() {
                    let e = t.to_expr(dim)?;
                    acc = if i == 0 { e } else { acc + e };
                }
                acc
            }
            FieldSpec::Product { factors } => {
                let mut acc = Expr::one();
                for (i, f) in factors.iter().enumerate() {
                    let e = f.to_expr(dim)?;
                    acc = if i == 0 { e } else { acc * e };
                }
                acc
            }
            FieldSpec::Scaled { factor, field } => Expr::constant(*factor) * field.to_expr(dim)?,
            FieldSpec::PpWaveProfile { u, x, y, a, b, c } => {
                for i in [*u, *x, *y] {
                    check(i)?;
                }
                pp_wave_profile(Expr::var(*u), Expr::var(*x), Expr::var(*y), a, b, c)
            }
        })
    }
}

fn poly_in(u: &Expr, coeffs: &[f64]) -> Option<Expr> {
    let mut acc: Option<Expr> = None;
    for (k, &c) in coeffs.iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        let term = if k == 0 {
            Expr::constant(c)
        } else {
            Expr::constant(c) * u.powi(k as i32)
        };
        acc = Some(match acc {
            None => term,
            Some(a) => a + term,
        });
    }
    acc
}

/// Profile `H(u,x,y)` of a plane-fronted wave.
pub fn pp_wave_profile(u: Expr, x: Expr, y: Expr, a: &[f64], b: &[f64], c: &[f64]) -> Expr {
    let x2 = x.powi(2);
    let y2 = y.powi(2);
    let mut parts = Vec::new();
    if let Some(pa) = poly_in(&u, a) {
        parts.push(pa * (&x2 - &y2));
    }
    if let Some(pb) = poly_in(&u, b) {
        parts.push(Expr::constant(2.0) * pb * (&x * &y));
    }
    if let Some(pc) = poly_in(&u, c) {
        parts.push(pc * (&x2 + &y2));
    }
    parts
        .into_iter()
        .reduce(|acc, p| acc + p)
        .unwrap_or_else(Expr::zero)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip() {
        let spec = FieldSpec::Sum {
            terms: vec![
                FieldSpec::Polynomial {
                    terms: vec![Monomial {
                        coeff: 2.0,
                        powers: vec![1, 2],
                    }],
                },
                FieldSpec::Sin {
                    arg: Box::new(FieldSpec::coord(0)),
                },
            ],
        };
        let text = serde_json::to_string(&spec).unwrap();
        let back: FieldSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, spec);
        let e = back.to_expr(2).unwrap();
        let v = e.value_at(&[0.5, 3.0]);
        assert!((v - (2.0 * 0.5 * 9.0 + 0.5f64.sin())).abs() < 1e-14);
    }

    #[test]
    fn rejects_out_of_range_coordinates() {
        assert!(FieldSpec::coord(3).to_expr(3).is_err());
        let bad = FieldSpec::Polynomial {
            terms: vec![Monomial {
                coeff: 1.0,
                powers: vec![0, 0, 0, 1],
            }],
        };
        assert!(bad.to_expr(3).is_err());
    }

    #[test]
    fn pp_wave_profile_values() {
        let spec = FieldSpec::PpWaveProfile {
            u: 0,
            x: 1,
            y: 2,
            a: vec![1.0, 0.5],
            b: vec![0.0, 0.0, 0.3],
            c: vec![0.25],
        };
        let e = spec.to_expr(4).unwrap();
        let (u, x, y) = (0.4, 0.7, -0.2);
        let oracle = (1.0 + 0.5 * u) * (x * x - y * y)
            + 2.0 * 0.3 * u * u * x * y
            + 0.25 * (x * x + y * y);
        assert!((e.value_at(&[u, x, y, 9.0]) - oracle).abs() < 1e-14);
    }
}
