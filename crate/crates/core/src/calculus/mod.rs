//! Coordinate charts, differentiable fields and the differentiation contract.
//!
//! Every field hands out [`Jet`]s: truncated Taylor expansions that carry all
//! partial derivatives up to a requested order. Derivatives are therefore
//! exact up to floating-point round-off rather than finite-difference
//! approximations.

pub mod expr;
pub mod jet;
pub mod library;
pub mod sampling;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{multi_index, TensorValue, Variance};

pub use expr::{Expr, Scalar};
pub use jet::Jet;

/// A local coordinate system together with the box its samples are drawn from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chart {
    coordinates: Vec<String>,
    domain: Vec<[f64; 2]>,
    #[serde(default)]
    note: String,
}

impl Chart {
    pub fn new<S: Into<String>>(coordinates: Vec<S>, domain: Vec<[f64; 2]>) -> Result<Self> {
        let chart = Self {
            coordinates: coordinates.into_iter().map(Into::into).collect(),
            domain,
            note: String::new(),
        };
        chart.validate()?;
        Ok(chart)
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = note.into();
        self
    }

    pub fn validate(&self) -> Result<()> {
        let dim = self.coordinates.len();
        if dim < 2 {
            return Err(Error::Chart(format!("dimension {dim} < 2")));
        }
        for (i, a) in self.coordinates.iter().enumerate() {
            if self.coordinates[..i].contains(a) {
                return Err(Error::Chart(format!("duplicate coordinate label {a:?}")));
            }
        }
        if self.domain.len() != dim {
            return Err(Error::Chart(format!(
                "{} domain intervals for {dim} coordinates",
                self.domain.len()
            )));
        }
        if let Some(bad) = self.domain.iter().find(|[lo, hi]| !(lo < hi)) {
            return Err(Error::Chart(format!("empty interval {bad:?}")));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.coordinates.len()
    }

    pub fn coordinates(&self) -> &[String] {
        &self.coordinates
    }

    pub fn domain(&self) -> &[[f64; 2]] {
        &self.domain
    }

    pub fn note(&self) -> &str {
        &self.note
    }

    pub fn contains(&self, point: &[f64]) -> bool {
        point.len() == self.dim()
            && point
                .iter()
                .zip(&self.domain)
                .all(|(x, [lo, hi])| *lo <= *x && *x <= *hi)
    }

    /// `count` quasi-random interior points, reproducible from `seed`.
    pub fn sample(&self, count: usize, seed: u64) -> Vec<Vec<f64>> {
        sampling::sample_box(&self.domain, count, seed)
    }
}

/// A tensor field whose components can be expanded to any order at a point.
///
/// Components are laid out row-major in index order, `dim^rank` of them.
pub trait JetField: Send + Sync {
    fn dim(&self) -> usize;

    fn variances(&self) -> Vec<Variance>;

    /// Component jets of the given order at `x`.
    fn jets(&self, x: &[f64], order: usize) -> Result<Vec<Jet>>;

    /// Component jets of `self ∘ φ`, where `inner` are the jets of the map `φ`.
    fn jets_along(&self, inner: &[Jet]) -> Result<Vec<Jet>> {
        let base: Vec<f64> = inner.iter().map(Jet::value).collect();
        let order = inner.first().map(Jet::order).unwrap_or(0);
        Ok(self
            .jets(&base, order)?
            .iter()
            .map(|j| j.compose(inner))
            .collect())
    }

    fn rank(&self) -> usize {
        self.variances().len()
    }

    fn len(&self) -> usize {
        self.dim().pow(self.rank() as u32)
    }

    fn is_empty(&self) -> bool {
        false
    }

    fn evaluate(&self, x: &[f64]) -> Result<TensorValue> {
        let values = self.jets(x, 0)?.iter().map(Jet::value).collect();
        TensorValue::new(self.dim(), self.variances(), values)
    }
}

pub(crate) fn check_point(field: &dyn JetField, x: &[f64]) -> Result<()> {
    if x.len() != field.dim() {
        return Err(Error::ShapeMismatch(format!(
            "point of length {} for a field on a {}-dimensional chart",
            x.len(),
            field.dim()
        )));
    }
    Ok(())
}

pub(crate) fn ensure_finite(values: &[f64], what: &str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::ShapeMismatch(format!("{what} evaluated to a non-finite value")))
    }
}

/// A smooth function on a chart.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    dim: usize,
    expr: Expr,
}

impl ScalarField {
    pub fn new(dim: usize, expr: Expr) -> Result<Self> {
        if let Some(v) = expr.max_var() {
            if v >= dim {
                return Err(Error::Chart(format!(
                    "expression uses coordinate {v} on a {dim}-dimensional chart"
                )));
            }
        }
        Ok(Self { dim, expr })
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    pub fn value(&self, x: &[f64]) -> Result<f64> {
        check_point(self, x)?;
        let v = self.expr.value_at(x);
        ensure_finite(&[v], "scalar field")?;
        Ok(v)
    }
}

impl JetField for ScalarField {
    fn dim(&self) -> usize {
        self.dim
    }

    fn variances(&self) -> Vec<Variance> {
        Vec::new()
    }

    fn jets(&self, x: &[f64], order: usize) -> Result<Vec<Jet>> {
        check_point(self, x)?;
        Ok(vec![self.expr.jet_at(x, order)])
    }

    fn jets_along(&self, inner: &[Jet]) -> Result<Vec<Jet>> {
        Ok(vec![self.expr.eval(inner)])
    }
}

/// `∂ field / ∂x^direction` at `point`.
pub fn partial_derivative(field: &ScalarField, direction: usize, point: &[f64]) -> Result<f64> {
    second_or_first(field, &[direction], point)
}

/// `∂² field / ∂x^i ∂x^j` at `point`.
pub fn second_partial_derivative(
    field: &ScalarField,
    i: usize,
    j: usize,
    point: &[f64],
) -> Result<f64> {
    second_or_first(field, &[i, j], point)
}

fn second_or_first(field: &ScalarField, directions: &[usize], point: &[f64]) -> Result<f64> {
    check_point(field, point)?;
    if let Some(&d) = directions.iter().find(|&&d| d >= field.dim) {
        return Err(Error::SlotOutOfRange {
            slot: d,
            rank: field.dim,
        });
    }
    let jet = field.expr.jet_at(point, directions.len());
    let mut exponents = vec![0u8; field.dim];
    for &d in directions {
        exponents[d] += 1;
    }
    let v = jet.derivative(&exponents);
    ensure_finite(&[v], "derivative")?;
    Ok(v)
}

/// A tensor field with closed-form component functions.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorFieldOnChart {
    dim: usize,
    variances: Vec<Variance>,
    components: Vec<Expr>,
}

impl TensorFieldOnChart {
    pub fn new(dim: usize, variances: Vec<Variance>, components: Vec<Expr>) -> Result<Self> {
        let expected = dim.pow(variances.len() as u32);
        if components.len() != expected {
            return Err(Error::ShapeMismatch(format!(
                "{} component functions, expected {expected}",
                components.len()
            )));
        }
        if let Some(v) = components.iter().filter_map(Expr::max_var).max() {
            if v >= dim {
                return Err(Error::Chart(format!(
                    "component uses coordinate {v} on a {dim}-dimensional chart"
                )));
            }
        }
        Ok(Self {
            dim,
            variances,
            components,
        })
    }

    pub fn vector(components: Vec<Expr>) -> Result<Self> {
        Self::new(components.len(), vec![Variance::Up], components)
    }

    pub fn one_form(components: Vec<Expr>) -> Result<Self> {
        Self::new(components.len(), vec![Variance::Down], components)
    }

    /// A `(0,2)` field from a row-major square array.
    pub fn covariant2(rows: Vec<Vec<Expr>>) -> Result<Self> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::ShapeMismatch("ragged component rows".into()));
        }
        Self::new(dim, vec![Variance::Down, Variance::Down], rows.into_iter().flatten().collect())
    }

    pub fn constant(value: &TensorValue) -> Self {
        Self {
            dim: value.dims(),
            variances: value.variances().to_vec(),
            components: value.components().iter().map(|&c| Expr::constant(c)).collect(),
        }
    }

    pub fn zero(dim: usize, variances: Vec<Variance>) -> Self {
        let len = dim.pow(variances.len() as u32);
        Self {
            dim,
            variances,
            components: vec![Expr::zero(); len],
        }
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }

    pub fn component(&self, index: &[usize]) -> &Expr {
        &self.components[crate::tensor::flat_index(index, self.dim)]
    }
}

impl JetField for TensorFieldOnChart {
    fn dim(&self) -> usize {
        self.dim
    }

    fn variances(&self) -> Vec<Variance> {
        self.variances.clone()
    }

    fn jets(&self, x: &[f64], order: usize) -> Result<Vec<Jet>> {
        check_point(self, x)?;
        let seed = Jet::seed(x, order);
        Ok(self.components.iter().map(|c| c.eval(&seed)).collect())
    }

    fn jets_along(&self, inner: &[Jet]) -> Result<Vec<Jet>> {
        Ok(self.components.iter().map(|c| c.eval(inner)).collect())
    }
}

/// Componentwise sum of two fields of the same type.
pub struct SumField {
    a: Arc<dyn JetField>,
    b: Arc<dyn JetField>,
}

impl SumField {
    pub fn new(a: Arc<dyn JetField>, b: Arc<dyn JetField>) -> Result<Self> {
        if a.dim() != b.dim() || a.variances() != b.variances() {
            return Err(Error::ShapeMismatch("summands of different tensor type".into()));
        }
        Ok(Self { a, b })
    }
}

impl JetField for SumField {
    fn dim(&self) -> usize {
        self.a.dim()
    }

    fn variances(&self) -> Vec<Variance> {
        self.a.variances()
    }

    fn jets(&self, x: &[f64], order: usize) -> Result<Vec<Jet>> {
        let a = self.a.jets(x, order)?;
        let b = self.b.jets(x, order)?;
        Ok(a.iter().zip(&b).map(|(p, q)| p + q).collect())
    }
}

/// Lie derivative `L_X T` at `point` for a tensor of any variance.
///
/// `(L_X T) = X^σ ∂_σ T − Σ_up T^{..σ..} ∂_σ X^a + Σ_down T_{..σ..} ∂_b X^σ`.
pub fn lie_derivative_tensor(
    x: &dyn JetField,
    t: &dyn JetField,
    point: &[f64],
) -> Result<TensorValue> {
    if x.variances() != [Variance::Up] {
        return Err(Error::VarianceMismatch("Lie derivative along a non-vector".into()));
    }
    if x.dim() != t.dim() {
        return Err(Error::ShapeMismatch("vector field and tensor on different charts".into()));
    }
    let n = t.dim();
    let xj = x.jets(point, 1)?;
    let tj = t.jets(point, 1)?;
    let out = lie_derivative_jets(&xj, &tj, &t.variances(), n);
    let values: Vec<f64> = out.iter().map(Jet::value).collect();
    ensure_finite(&values, "Lie derivative")?;
    TensorValue::new(n, t.variances(), values)
}

/// Jet-level Lie derivative: `x` and `t` of order `p + 1`, result of order `p`.
pub fn lie_derivative_jets(x: &[Jet], t: &[Jet], variances: &[Variance], n: usize) -> Vec<Jet> {
    let rank = variances.len();
    let dx: Vec<Vec<Jet>> = x.iter().map(|c| (0..n).map(|s| c.partial(s)).collect()).collect();
    let lower: Vec<Jet> = x.iter().map(|c| c.truncate(c.order() - 1)).collect();
    let t_lower: Vec<Jet> = t.iter().map(|c| c.truncate(c.order() - 1)).collect();
    let mut out = Vec::with_capacity(t.len());
    for (flat, comp) in t.iter().enumerate() {
        let idx = multi_index(flat, n, rank);
        let mut acc = comp.partial(0).zero_like();
        for s in 0..n {
            acc += &(&lower[s] * &comp.partial(s));
        }
        for (slot, var) in variances.iter().enumerate() {
            let mut src = idx.clone();
            for s in 0..n {
                src[slot] = s;
                let ts = &t_lower[crate::tensor::flat_index(&src, n)];
                match var {
                    Variance::Up => acc -= &(ts * &dx[idx[slot]][s]),
                    Variance::Down => acc += &(ts * &dx[s][idx[slot]]),
                }
            }
        }
        out.push(acc);
    }
    out
}
