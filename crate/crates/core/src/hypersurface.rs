//! The degenerate structure `(V_n, β, [ξ])` of a null hypersurface.
//!
//! `β` is a field of symmetric 2-covariant tensors of rank `n − 1` whose
//! kernel is spanned by `ξ`. Together with a one-form `f` normalized by
//! `f(ξ) = 1` it determines the quasi-inverse
//! `β_f = (β + f ⊗ f)⁻¹ − ξ ⊗ ξ`, the unique symmetric 2-contravariant
//! tensor with `β β_f = 1 − f ⊗ ξ` and `β_f f = 0`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::calculus::{check_point, ensure_finite, Chart, Expr, Jet, JetField, TensorFieldOnChart};
use crate::error::{Error, Result};
use crate::linalg::invert_jet_matrix;
use crate::tensor::{TensorValue, Variance};

/// Relative eigenvalue cut used to decide the rank of `β`.
pub const RANK_TOL: f64 = 1e-10;
/// Tolerance for `β(ξ, ·) = 0` and `f(ξ) = 1`.
pub const STRUCTURE_TOL: f64 = 1e-10;

/// The degenerate metric `β` on a chart of the hypersurface.
#[derive(Clone)]
pub struct DegenerateMetric {
    chart: Chart,
    beta: Arc<dyn JetField>,
}

impl std::fmt::Debug for DegenerateMetric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DegenerateMetric").field("chart", &self.chart).finish_non_exhaustive()
    }
}

impl DegenerateMetric {
    pub fn new(chart: Chart, beta: Arc<dyn JetField>) -> Result<Self> {
        if beta.dim() != chart.dim() || beta.variances() != [Variance::Down, Variance::Down] {
            return Err(Error::ShapeMismatch(
                "degenerate metric must be a (0,2) field on the chart".into(),
            ));
        }
        Ok(Self { chart, beta })
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    pub fn field(&self) -> &Arc<dyn JetField> {
        &self.beta
    }

    pub fn matrix_at(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let t = self.beta.evaluate(x)?;
        ensure_finite(t.components(), "metric")?;
        t.to_matrix()
    }

    /// Symmetry, positive semi-definiteness and rank `n − 1` at `x`.
    pub fn validate_at(&self, x: &[f64]) -> Result<()> {
        let b = self.matrix_at(x)?;
        let scale = b.amax().max(1.0);
        let asym = (&b - b.transpose()).amax();
        if asym > 1e-12 * scale {
            return Err(Error::NotNullMetric(format!("not symmetric (residual {asym:e})")));
        }
        let eig = b.symmetric_eigen();
        let lmax = eig.eigenvalues.amax();
        if let Some(neg) = eig.eigenvalues.iter().find(|&&l| l < -RANK_TOL * lmax.max(1.0)) {
            return Err(Error::NotNullMetric(format!("negative eigenvalue {neg:e}")));
        }
        let rank = rank_of(eig.eigenvalues.as_slice());
        if rank + 1 != self.dim() {
            return Err(Error::NotNullMetric(format!(
                "rank {rank} at {x:?}, expected {}",
                self.dim() - 1
            )));
        }
        Ok(())
    }
}

fn rank_of(eigenvalues: &[f64]) -> usize {
    let lmax = eigenvalues.iter().fold(0.0f64, |m, l| m.max(l.abs()));
    if lmax == 0.0 {
        return 0;
    }
    eigenvalues.iter().filter(|l| l.abs() > RANK_TOL * lmax).count()
}

/// A normalized representative of the kernel of `β` at `x`.
///
/// The result `v` satisfies `βv = 0`, `‖v‖∞ = 1`, and its first nonzero
/// component is positive.
pub fn kernel_direction(metric: &DegenerateMetric, x: &[f64]) -> Result<DVector<f64>> {
    let b = metric.matrix_at(x)?;
    let eig = b.symmetric_eigen();
    let rank = rank_of(eig.eigenvalues.as_slice());
    if rank + 1 != metric.dim() {
        return Err(Error::NotNullMetric(format!(
            "rank {rank}, expected {}",
            metric.dim() - 1
        )));
    }
    let smallest = eig.eigenvalues.iamin();
    let mut v = eig.eigenvectors.column(smallest).into_owned();
    let norm = v.amax();
    v /= norm;
    for c in v.iter_mut() {
        if c.abs() < 1e-14 {
            *c = 0.0;
        }
    }
    if let Some(first) = v.iter().find(|c| **c != 0.0) {
        if *first < 0.0 {
            v.neg_mut();
        }
    }
    Ok(v)
}

/// The triple `(β, ξ, f)` on a chart.
#[derive(Clone)]
pub struct NullStructure {
    metric: DegenerateMetric,
    xi: Arc<dyn JetField>,
    f: Arc<dyn JetField>,
}

impl std::fmt::Debug for NullStructure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("NullStructure").field("metric", &self.metric).finish_non_exhaustive()
    }
}

impl NullStructure {
    pub fn new(metric: DegenerateMetric, xi: Arc<dyn JetField>, f: Arc<dyn JetField>) -> Result<Self> {
        let n = metric.dim();
        if xi.dim() != n || xi.variances() != [Variance::Up] {
            return Err(Error::ShapeMismatch("xi must be a vector field on the chart".into()));
        }
        if f.dim() != n || f.variances() != [Variance::Down] {
            return Err(Error::ShapeMismatch("f must be a one-form on the chart".into()));
        }
        Ok(Self { metric, xi, f })
    }

    /// The flat structure `β = diag(1, …, 1, 0)`, `ξ = ∂_n`, `f = dxⁿ`.
    pub fn standard(chart: Chart) -> Result<Self> {
        let n = chart.dim();
        let beta = TensorFieldOnChart::covariant2(
            (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| Expr::constant(if i == j && i + 1 < n { 1.0 } else { 0.0 }))
                        .collect()
                })
                .collect(),
        )?;
        let unit = |k: usize| (0..n).map(|i| Expr::constant(if i == k { 1.0 } else { 0.0 })).collect();
        let xi = TensorFieldOnChart::vector(unit(n - 1))?;
        let f = TensorFieldOnChart::one_form(unit(n - 1))?;
        Self::new(DegenerateMetric::new(chart, Arc::new(beta))?, Arc::new(xi), Arc::new(f))
    }

    pub fn metric(&self) -> &DegenerateMetric {
        &self.metric
    }

    pub fn chart(&self) -> &Chart {
        self.metric.chart()
    }

    pub fn dim(&self) -> usize {
        self.metric.dim()
    }

    pub fn xi(&self) -> &Arc<dyn JetField> {
        &self.xi
    }

    pub fn f(&self) -> &Arc<dyn JetField> {
        &self.f
    }

    /// Metric invariants, `β(ξ, ·) = 0` and `f(ξ) = 1` at `x`.
    pub fn validate_at(&self, x: &[f64]) -> Result<()> {
        self.metric.validate_at(x)?;
        let b = self.metric.matrix_at(x)?;
        let xi = DVector::from_vec(self.xi.evaluate(x)?.components().to_vec());
        let f = DVector::from_vec(self.f.evaluate(x)?.components().to_vec());
        ensure_finite(xi.as_slice(), "xi")?;
        ensure_finite(f.as_slice(), "f")?;
        let kernel = (&b * &xi).amax();
        if kernel > STRUCTURE_TOL * b.amax().max(1.0) * xi.amax().max(1.0) {
            return Err(Error::NotNullMetric(format!(
                "beta(xi, .) = {kernel:e} at {x:?}"
            )));
        }
        self.check_normalization(x)
    }

    pub fn validate(&self, points: &[Vec<f64>]) -> Result<()> {
        points.iter().try_for_each(|p| self.validate_at(p))
    }

    fn check_normalization(&self, x: &[f64]) -> Result<()> {
        let xi = self.xi.evaluate(x)?;
        let f = self.f.evaluate(x)?;
        let pairing: f64 = xi.components().iter().zip(f.components()).map(|(a, b)| a * b).sum();
        if (pairing - 1.0).abs() > STRUCTURE_TOL {
            return Err(Error::Normalization(pairing));
        }
        Ok(())
    }

    /// Jets of `β_f^{αρ}` (row-major) of the given order.
    pub fn quasi_inverse_jets(&self, x: &[f64], order: usize) -> Result<Vec<Jet>> {
        let n = self.dim();
        let beta = self.metric.beta.jets(x, order)?;
        let xi = self.xi.jets(x, order)?;
        let f = self.f.jets(x, order)?;
        let m: Vec<Vec<Jet>> = (0..n)
            .map(|i| (0..n).map(|j| &beta[i * n + j] + &(&f[i] * &f[j])).collect())
            .collect();
        let inv = invert_jet_matrix(&m)?;
        let mut out = Vec::with_capacity(n * n);
        for (i, row) in inv.iter().enumerate() {
            for (j, entry) in row.iter().enumerate() {
                out.push(entry - &(&xi[i] * &xi[j]));
            }
        }
        Ok(out)
    }
}

/// `β_f` at `x`.
pub fn quasi_inverse(ns: &NullStructure, x: &[f64]) -> Result<TensorValue> {
    check_point(ns.metric.beta.as_ref(), x)?;
    ns.check_normalization(x)?;
    let jets = ns.quasi_inverse_jets(x, 0)?;
    let values: Vec<f64> = jets.iter().map(Jet::value).collect();
    ensure_finite(&values, "quasi-inverse")?;
    TensorValue::new(ns.dim(), vec![Variance::Up, Variance::Up], values)
}

/// `B_{ρ,βγ} = ½(∂_β β_{ργ} + ∂_γ β_{ρβ} − ∂_ρ β_{βγ})` from metric jets of
/// order `p + 1`; the result has order `p` and layout `[ρ][β][γ]`.
pub fn koszul_jets(beta: &[Jet], n: usize) -> Vec<Jet> {
    let d: Vec<Vec<Jet>> = beta.iter().map(|b| (0..n).map(|k| b.partial(k)).collect()).collect();
    let mut out = Vec::with_capacity(n * n * n);
    for rho in 0..n {
        for b in 0..n {
            for g in 0..n {
                let sum = &(&d[rho * n + g][b] + &d[rho * n + b][g]) - &d[b * n + g][rho];
                out.push(sum * 0.5);
            }
        }
    }
    out
}

/// The Koszul term of `β` at `x`, indices `(ρ, β, γ)` all covariant.
pub fn koszul_term(metric: &DegenerateMetric, x: &[f64]) -> Result<TensorValue> {
    let n = metric.dim();
    let beta = metric.beta.jets(x, 1)?;
    let values: Vec<f64> = koszul_jets(&beta, n).iter().map(Jet::value).collect();
    ensure_finite(&values, "Koszul term")?;
    TensorValue::new(n, vec![Variance::Down; 3], values)
}

/// A smooth map from a chart of the hypersurface into the ambient chart.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    source_dim: usize,
    components: Vec<Expr>,
}

impl Embedding {
    pub fn new(source_dim: usize, components: Vec<Expr>) -> Result<Self> {
        if let Some(v) = components.iter().filter_map(Expr::max_var).max() {
            if v >= source_dim {
                return Err(Error::Chart(format!(
                    "embedding uses coordinate {v} of a {source_dim}-dimensional chart"
                )));
            }
        }
        if components.len() <= source_dim {
            return Err(Error::ShapeMismatch(
                "embedding target must have higher dimension than its source".into(),
            ));
        }
        Ok(Self {
            source_dim,
            components,
        })
    }

    pub fn source_dim(&self) -> usize {
        self.source_dim
    }

    pub fn target_dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }

    pub fn point(&self, x: &[f64]) -> Vec<f64> {
        self.components.iter().map(|c| c.value_at(x)).collect()
    }

    pub fn jets(&self, x: &[f64], order: usize) -> Vec<Jet> {
        let seed = Jet::seed(x, order);
        self.components.iter().map(|c| c.eval(&seed)).collect()
    }

    /// `∂_a i^μ` at `x`, as a `target × source` matrix.
    pub fn differential(&self, x: &[f64]) -> DMatrix<f64> {
        let jets = self.jets(x, 1);
        DMatrix::from_fn(self.target_dim(), self.source_dim, |mu, a| jets[mu].gradient()[a])
    }
}

/// Pull-back `i*T` of a covariant ambient tensor field along an embedding.
pub struct PulledBackCovariant {
    field: Arc<dyn JetField>,
    embedding: Arc<Embedding>,
}

impl PulledBackCovariant {
    pub fn new(field: Arc<dyn JetField>, embedding: Arc<Embedding>) -> Result<Self> {
        if field.dim() != embedding.target_dim() {
            return Err(Error::ShapeMismatch("field and embedding target differ".into()));
        }
        if field.variances().iter().any(|v| *v != Variance::Down) {
            return Err(Error::VarianceMismatch("only covariant fields pull back".into()));
        }
        Ok(Self { field, embedding })
    }
}

impl JetField for PulledBackCovariant {
    fn dim(&self) -> usize {
        self.embedding.source_dim()
    }

    fn variances(&self) -> Vec<Variance> {
        self.field.variances()
    }

    fn jets(&self, x: &[f64], order: usize) -> Result<Vec<Jet>> {
        check_point(self, x)?;
        let n = self.dim();
        let big = self.embedding.target_dim();
        let inner = self.embedding.jets(x, order + 1);
        let di: Vec<Vec<Jet>> = inner.iter().map(|c| (0..n).map(|a| c.partial(a)).collect()).collect();
        let inner_p: Vec<Jet> = inner.iter().map(|c| c.truncate(order)).collect();
        let amb = self.field.jets_along(&inner_p)?;
        let zero = inner_p[0].zero_like();
        Ok(match self.field.rank() {
            0 => amb,
            1 => (0..n)
                .map(|a| {
                    let mut acc = zero.clone();
                    for mu in 0..big {
                        acc += &(&amb[mu] * &di[mu][a]);
                    }
                    acc
                })
                .collect(),
            2 => {
                // contract one slot at a time: T_{μ b} = Σ_ν g_{μν} ∂_b i^ν
                let half: Vec<Jet> = (0..big * n)
                    .map(|k| {
                        let (mu, b) = (k / n, k % n);
                        let mut acc = zero.clone();
                        for nu in 0..big {
                            acc += &(&amb[mu * big + nu] * &di[nu][b]);
                        }
                        acc
                    })
                    .collect();
                (0..n * n)
                    .map(|k| {
                        let (a, b) = (k / n, k % n);
                        let mut acc = zero.clone();
                        for mu in 0..big {
                            acc += &(&half[mu * n + b] * &di[mu][a]);
                        }
                        acc
                    })
                    .collect()
            }
            r => {
                return Err(Error::ShapeMismatch(format!(
                    "pull-back of rank {r} fields is not supported"
                )))
            }
        })
    }
}

/// `β = i*g`, checked to have rank `n − 1` at sample points of the chart.
pub fn pullback_metric(
    g: Arc<dyn JetField>,
    embedding: Arc<Embedding>,
    chart: Chart,
) -> Result<DegenerateMetric> {
    if embedding.source_dim() != chart.dim() {
        return Err(Error::ShapeMismatch("embedding source differs from the chart".into()));
    }
    let beta = PulledBackCovariant::new(g, embedding)?;
    let metric = DegenerateMetric::new(chart, Arc::new(beta))?;
    let mut points = metric.chart().sample(16, 0);
    points.push(
        metric
            .chart()
            .domain()
            .iter()
            .map(|[lo, hi]| 0.5 * (lo + hi))
            .collect(),
    );
    for p in &points {
        let b = metric.matrix_at(p)?;
        let rank = rank_of(b.symmetric_eigen().eigenvalues.as_slice());
        if rank + 1 != metric.dim() {
            return Err(Error::NotIsotropic(format!(
                "pulled-back metric has rank {rank} at {p:?}, expected {}",
                metric.dim() - 1
            )));
        }
    }
    Ok(metric)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x(i: usize) -> Expr {
        Expr::var(i)
    }

    fn c(v: f64) -> Expr {
        Expr::constant(v)
    }

    fn chart3() -> Chart {
        Chart::new(vec!["x1", "x2", "x3"], vec![[-1.0, 1.0]; 3]).unwrap()
    }

    fn diag_metric(d: [Expr; 3]) -> DegenerateMetric {
        let [a, b, e] = d;
        let rows = vec![
            vec![a, c(0.0), c(0.0)],
            vec![c(0.0), b, c(0.0)],
            vec![c(0.0), c(0.0), e],
        ];
        DegenerateMetric::new(chart3(), Arc::new(TensorFieldOnChart::covariant2(rows).unwrap()))
            .unwrap()
    }

    fn structure(metric: DegenerateMetric, f: Vec<Expr>) -> NullStructure {
        let xi = TensorFieldOnChart::vector(vec![c(0.0), c(0.0), c(1.0)]).unwrap();
        let f = TensorFieldOnChart::one_form(f).unwrap();
        NullStructure::new(metric, Arc::new(xi), Arc::new(f)).unwrap()
    }

    #[test]
    fn kernel_of_canonical_form() {
        let m = diag_metric([c(1.0), c(1.0), c(0.0)]);
        let v = kernel_direction(&m, &[0.1, 0.2, 0.3]).unwrap();
        assert_eq!(v.as_slice(), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn kernel_of_rank_one_errors() {
        let m = diag_metric([c(1.0), c(0.0), c(0.0)]);
        assert!(matches!(kernel_direction(&m, &[0.0; 3]), Err(Error::NotNullMetric(_))));
        assert!(m.validate_at(&[0.0; 3]).is_err());
    }

    #[test]
    fn kernel_of_congruent_form() {
        // β = ᵗA diag(1,1,0) A with A invertible: kernel is A⁻¹ e₃
        let a = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 0.5, 1.0, 0.3, -1.0, 0.2, 1.5]);
        let d = DMatrix::from_diagonal(&DVector::from_row_slice(&[1.0, 1.0, 0.0]));
        let b = a.transpose() * d * &a;
        let rows = (0..3).map(|i| (0..3).map(|j| c(b[(i, j)])).collect()).collect();
        let m = DegenerateMetric::new(
            chart3(),
            Arc::new(TensorFieldOnChart::covariant2(rows).unwrap()),
        )
        .unwrap();
        let v = kernel_direction(&m, &[0.0; 3]).unwrap();
        assert!((&b * &v).amax() < 1e-12);
        let oracle = a.try_inverse().unwrap().column(2).into_owned();
        let ratio = v[0] / oracle[0];
        assert!((&v - oracle * ratio).amax() < 1e-12);
        assert_eq!(v.amax(), 1.0);
    }

    #[test]
    fn kernel_direction_is_scale_free() {
        let m1 = diag_metric([c(1.0) + x(0).powi(2), c(2.0), c(0.0)]);
        let m2 = diag_metric([(c(1.0) + x(0).powi(2)) * 3.5, c(7.0), c(0.0)]);
        let p = [0.4, -0.2, 0.5];
        assert_eq!(kernel_direction(&m1, &p).unwrap(), kernel_direction(&m2, &p).unwrap());
    }

    #[test]
    fn quasi_inverse_canonical() {
        let ns = structure(diag_metric([c(1.0), c(1.0), c(0.0)]), vec![c(0.0), c(0.0), c(1.0)]);
        let q = quasi_inverse(&ns, &[0.0; 3]).unwrap();
        assert_eq!(q.components(), &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
    }

    /// Solves `β β_f = 1 − f ⊗ ξ`, `β_f f = 0`, `β_f = ᵗβ_f` as one
    /// overdetermined linear system in the nine unknowns.
    fn brute_force_quasi_inverse(b: &DMatrix<f64>, xi: &[f64], f: &[f64]) -> DMatrix<f64> {
        let mut rows = Vec::new();
        let mut rhs = Vec::new();
        for s in 0..3 {
            for r in 0..3 {
                let mut row = vec![0.0; 9];
                for a in 0..3 {
                    row[a * 3 + r] += b[(s, a)];
                }
                rows.push(row);
                rhs.push(if s == r { 1.0 } else { 0.0 } - f[s] * xi[r]);
            }
        }
        for r in 0..3 {
            let mut row = vec![0.0; 9];
            for a in 0..3 {
                row[a * 3 + r] += f[a];
            }
            rows.push(row);
            rhs.push(0.0);
        }
        for i in 0..3 {
            for j in (i + 1)..3 {
                let mut row = vec![0.0; 9];
                row[i * 3 + j] = 1.0;
                row[j * 3 + i] = -1.0;
                rows.push(row);
                rhs.push(0.0);
            }
        }
        let a = DMatrix::from_row_slice(rows.len(), 9, &rows.concat());
        let normal = a.transpose() * &a;
        let sol = normal.lu().solve(&(a.transpose() * DVector::from_vec(rhs))).unwrap();
        DMatrix::from_row_slice(3, 3, sol.as_slice())
    }

    #[test]
    fn quasi_inverse_scaled_block() {
        let ns = structure(diag_metric([c(4.0), c(1.0), c(0.0)]), vec![c(0.0), c(0.0), c(1.0)]);
        let q = quasi_inverse(&ns, &[0.0; 3]).unwrap().to_matrix().unwrap();
        let b = DMatrix::from_diagonal(&DVector::from_row_slice(&[4.0, 1.0, 0.0]));
        let oracle = brute_force_quasi_inverse(&b, &[0.0, 0.0, 1.0], &[0.0, 0.0, 1.0]);
        assert!((&q - &oracle).amax() < 1e-12);
        assert!((q[(0, 0)] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn quasi_inverse_depends_on_f() {
        let ns1 = structure(diag_metric([c(4.0), c(1.0), c(0.0)]), vec![c(0.0), c(0.0), c(1.0)]);
        let ns2 = structure(diag_metric([c(4.0), c(1.0), c(0.0)]), vec![c(1.0), c(0.0), c(1.0)]);
        let q1 = quasi_inverse(&ns1, &[0.0; 3]).unwrap().to_matrix().unwrap();
        let q2 = quasi_inverse(&ns2, &[0.0; 3]).unwrap().to_matrix().unwrap();
        assert!((&q1 - &q2).amax() > 0.1);
        let b = DMatrix::from_diagonal(&DVector::from_row_slice(&[4.0, 1.0, 0.0]));
        let oracle = brute_force_quasi_inverse(&b, &[0.0, 0.0, 1.0], &[1.0, 0.0, 1.0]);
        assert!((&q2 - &oracle).amax() < 1e-12, "{q2} vs {oracle}");
        let f = DVector::from_row_slice(&[1.0, 0.0, 1.0]);
        let xi = DVector::from_row_slice(&[0.0, 0.0, 1.0]);
        let lhs = &b * &q2;
        let rhs = DMatrix::identity(3, 3) - &f * xi.transpose();
        assert!((lhs - rhs).amax() < 1e-12);
        assert!((&q2 * &f).amax() < 1e-12);
        assert!((&b * &q2 * &b - &b).amax() < 1e-12);
    }

    #[test]
    fn normalization_violation_errors() {
        let ns = structure(diag_metric([c(1.0), c(1.0), c(0.0)]), vec![c(0.0), c(0.0), c(2.0)]);
        assert!(matches!(quasi_inverse(&ns, &[0.0; 3]), Err(Error::Normalization(_))));
        assert!(matches!(ns.validate_at(&[0.0; 3]), Err(Error::Normalization(_))));
    }

    #[test]
    fn koszul_examples() {
        let flat = diag_metric([c(1.0), c(1.0), c(0.0)]);
        assert_eq!(koszul_term(&flat, &[0.3, 0.1, 0.2]).unwrap().max_abs(), 0.0);

        let m = diag_metric([c(1.0) + x(0).powi(2), c(1.0), c(0.0)]);
        let p = [0.7, -0.2, 0.4];
        let b = koszul_term(&m, &p).unwrap();
        for (k, v) in b.components().iter().enumerate() {
            let expected = if k == 0 { p[0] } else { 0.0 };
            assert!((v - expected).abs() < 1e-15, "component {k}: {v}");
        }

        let m = diag_metric([c(1.0), x(0).powi(2), c(0.0)]);
        let b = koszul_term(&m, &p).unwrap();
        assert!((b.get(&[0, 1, 1]) + p[0]).abs() < 1e-15);
        assert!((b.get(&[1, 0, 1]) - p[0]).abs() < 1e-15);
        assert!((b.get(&[1, 1, 0]) - p[0]).abs() < 1e-15);
    }

    #[test]
    fn koszul_matches_finite_differences() {
        let m = diag_metric([c(1.0) + x(0).powi(2) * x(1), (x(1) * x(0)).sin() + 2.0, c(0.0)]);
        let p = [0.3, 0.6, -0.1];
        let b = koszul_term(&m, &p).unwrap();
        let h = 1e-5;
        let beta_at = |q: &[f64]| m.matrix_at(q).unwrap();
        let d = |k: usize| {
            let mut plus = p.to_vec();
            let mut minus = p.to_vec();
            plus[k] += h;
            minus[k] -= h;
            (beta_at(&plus) - beta_at(&minus)) / (2.0 * h)
        };
        let ds: Vec<_> = (0..3).map(d).collect();
        for r in 0..3 {
            for s in 0..3 {
                for t in 0..3 {
                    let fd = 0.5 * (ds[s][(r, t)] + ds[t][(r, s)] - ds[r][(s, t)]);
                    assert!((b.get(&[r, s, t]) - fd).abs() < 1e-8);
                }
            }
        }
    }

    fn minkowski() -> Arc<dyn JetField> {
        let rows = (0..4)
            .map(|i| {
                (0..4)
                    .map(|j| c(if i != j { 0.0 } else if i == 0 { -1.0 } else { 1.0 }))
                    .collect()
            })
            .collect();
        Arc::new(TensorFieldOnChart::covariant2(rows).unwrap())
    }

    #[test]
    fn null_plane_pullback() {
        let emb = Embedding::new(3, vec![x(2), x(0), x(1), x(2)]).unwrap();
        let m = pullback_metric(minkowski(), Arc::new(emb), chart3()).unwrap();
        let b = m.matrix_at(&[0.2, 0.3, 0.4]).unwrap();
        assert_eq!(b, DMatrix::from_diagonal(&DVector::from_row_slice(&[1.0, 1.0, 0.0])));
    }

    #[test]
    fn pp_wave_pullback() {
        // ambient (u, x, y, v): g = 2 du dv + H du² + dx² + dy²
        let h = (x(1).powi(2) - x(2).powi(2)) * (c(1.0) + x(0));
        let mut rows = vec![vec![c(0.0); 4]; 4];
        rows[0][0] = h;
        rows[0][3] = c(1.0);
        rows[3][0] = c(1.0);
        rows[1][1] = c(1.0);
        rows[2][2] = c(1.0);
        let g = Arc::new(TensorFieldOnChart::covariant2(rows).unwrap());
        let emb = Embedding::new(3, vec![c(0.0), x(0), x(1), x(2)]).unwrap();
        let m = pullback_metric(g, Arc::new(emb), chart3()).unwrap();
        let p = [0.2, 0.3, 0.4];
        assert_eq!(
            m.matrix_at(&p).unwrap(),
            DMatrix::from_diagonal(&DVector::from_row_slice(&[1.0, 1.0, 0.0]))
        );
        assert_eq!(kernel_direction(&m, &p).unwrap().as_slice(), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn spacelike_plane_is_rejected() {
        let emb = Embedding::new(3, vec![c(0.0), x(0), x(1), x(2)]).unwrap();
        assert!(matches!(
            pullback_metric(minkowski(), Arc::new(emb), chart3()),
            Err(Error::NotIsotropic(_))
        ));
    }

    #[test]
    fn pullback_derivatives_match_direct_composition() {
        // a curved ambient metric pulled back along a curved embedding
        let mut rows = vec![vec![c(0.0); 4]; 4];
        rows[0][0] = -(c(1.0) + x(1).powi(2));
        rows[1][1] = c(1.0) + (x(0) * x(2)).sin() * 0.1;
        rows[2][2] = c(1.0);
        rows[3][3] = c(2.0) + x(3);
        let g = Arc::new(TensorFieldOnChart::covariant2(rows.clone()).unwrap());
        let comps = vec![x(0) * x(1), x(1) + x(2).powi(2), x(0), x(2) * 0.5];
        let emb = Arc::new(Embedding::new(3, comps.clone()).unwrap());
        let pb = PulledBackCovariant::new(g, emb).unwrap();
        let p = [0.3, -0.4, 0.25];
        let jets = pb.jets(&p, 2).unwrap();
        // direct symbolic pull-back evaluated as expressions
        let seed = Jet::seed(&p, 3);
        let i: Vec<Jet> = comps.iter().map(|e| e.eval(&seed)).collect();
        let di: Vec<Vec<Jet>> = i.iter().map(|c| (0..3).map(|a| c.partial(a)).collect()).collect();
        for a in 0..3 {
            for b in 0..3 {
                let mut acc = di[0][0].zero_like();
                for mu in 0..4 {
                    for nu in 0..4 {
                        let gmn = rows[mu][nu].eval(&i).truncate(2);
                        acc += &(&(&gmn * &di[mu][a]) * &di[nu][b]);
                    }
                }
                for (u, v) in acc.coeffs().iter().zip(jets[a * 3 + b].coeffs()) {
                    assert!((u - v).abs() < 1e-12);
                }
            }
        }
    }
}
