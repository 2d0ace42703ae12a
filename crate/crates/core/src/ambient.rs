//! The Lorentzian ambient space and the connection it induces on a null
//! hypersurface.
//!
//! Frame indices run over `0..=n` with `e_0` the transverse null vector,
//! `e_1 … e_{n−1}` spacelike and `e_n` along the null generator. The
//! adapted-frame relations read `ᵗE g E = S` with `S_{0n} = S_{n0} = −1` and
//! `S_{AB} = δ_{AB}`.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::calculus::{check_point, ensure_finite, Chart, Expr, Jet, JetField};
use crate::connection::{curvature, ConnectionCoefficients};
use crate::error::{Error, Result};
use crate::groups::{frame_relations_residual, LorentzPairing};
use crate::hypersurface::{koszul_jets, pullback_metric, Embedding, NullStructure, PulledBackCovariant};
use crate::linalg::invert_jet_matrix;
use crate::tensor::{TensorValue, Variance};

/// Tolerance on the adapted-frame relations.
pub const FRAME_TOL: f64 = 1e-10;
/// Tolerance on the block shape of the connection form.
pub const BLOCK_TOL: f64 = 1e-6;
/// Tolerance on `i_*ξ = e_n`.
pub const ALIGNMENT_TOL: f64 = 1e-8;
/// Points sampled when a property is asserted over a chart.
pub const CHART_SAMPLES: usize = 16;

fn chart_points(chart: &Chart) -> Vec<Vec<f64>> {
    let mut points = chart.sample(CHART_SAMPLES, 0);
    points.push(chart.domain().iter().map(|[lo, hi]| 0.5 * (lo + hi)).collect());
    points
}

/// A metric of signature `(n, 1)` on an `(n+1)`-dimensional chart.
#[derive(Clone)]
pub struct LorentzMetric {
    chart: Chart,
    g: Arc<dyn JetField>,
}

impl std::fmt::Debug for LorentzMetric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LorentzMetric").field("chart", &self.chart).finish_non_exhaustive()
    }
}

impl LorentzMetric {
    pub fn new(chart: Chart, g: Arc<dyn JetField>) -> Result<Self> {
        if g.dim() != chart.dim() || g.variances() != [Variance::Down, Variance::Down] {
            return Err(Error::ShapeMismatch("metric must be a (0,2) field on the chart".into()));
        }
        let metric = Self { chart, g };
        for p in chart_points(&metric.chart) {
            metric.check_signature(&p)?;
        }
        Ok(metric)
    }

    /// Symmetry, nondegeneracy and signature `(n, 1)` at `x`.
    pub fn check_signature(&self, x: &[f64]) -> Result<()> {
        let m = self.matrix_at(x)?;
        let scale = m.amax().max(1.0);
        if (&m - m.transpose()).amax() > 1e-12 * scale {
            return Err(Error::Signature(format!("not symmetric at {x:?}")));
        }
        let eig = m.symmetric_eigen().eigenvalues;
        if eig.iter().any(|l| l.abs() <= 1e-12 * scale) {
            return Err(Error::Signature(format!("degenerate at {x:?}")));
        }
        let negative = eig.iter().filter(|l| **l < 0.0).count();
        if negative != 1 {
            return Err(Error::Signature(format!(
                "{negative} negative eigenvalues at {x:?}, expected 1"
            )));
        }
        Ok(())
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    pub fn field(&self) -> &Arc<dyn JetField> {
        &self.g
    }

    pub fn matrix_at(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let t = self.g.evaluate(x)?;
        ensure_finite(t.components(), "metric")?;
        t.to_matrix()
    }
}

/// `Γ^μ_{νρ} = ½ g^{μσ}(∂_ν g_{σρ} + ∂_ρ g_{νσ} − ∂_σ g_{νρ})`.
pub struct LeviCivitaGamma {
    g: Arc<dyn JetField>,
}

impl JetField for LeviCivitaGamma {
    fn dim(&self) -> usize {
        self.g.dim()
    }

    fn variances(&self) -> Vec<Variance> {
        vec![Variance::Up, Variance::Down, Variance::Down]
    }

    fn jets(&self, x: &[f64], order: usize) -> Result<Vec<Jet>> {
        check_point(self, x)?;
        let n = self.dim();
        let g = self.g.jets(x, order + 1)?;
        let first_kind = koszul_jets(&g, n);
        let rows: Vec<Vec<Jet>> = (0..n)
            .map(|i| (0..n).map(|j| g[i * n + j].truncate(order)).collect())
            .collect();
        let inv = invert_jet_matrix(&rows)?;
        let mut out = Vec::with_capacity(n * n * n);
        for mu in 0..n {
            for nu in 0..n {
                for rho in 0..n {
                    let mut acc = inv[0][0].zero_like();
                    for s in 0..n {
                        acc += &(&inv[mu][s] * &first_kind[(s * n + nu) * n + rho]);
                    }
                    out.push(acc);
                }
            }
        }
        Ok(out)
    }
}

/// The Levi-Civita connection of `g`.
pub fn levi_civita(g: &LorentzMetric) -> ConnectionCoefficients {
    let gamma = LeviCivitaGamma { g: g.g.clone() };
    ConnectionCoefficients::from_field(Arc::new(gamma), None)
        .expect("Levi-Civita coefficients have type (1,2)")
}

/// An adapted frame `(e_0, e_1, …, e_n)` on the ambient chart.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptedFrameField {
    /// `vectors[a][μ] = e_a^μ`.
    vectors: Vec<Vec<Expr>>,
}

impl AdaptedFrameField {
    pub fn new(vectors: Vec<Vec<Expr>>) -> Result<Self> {
        let big = vectors.len();
        if big < 3 || vectors.iter().any(|v| v.len() != big) {
            return Err(Error::ShapeMismatch(
                "an adapted frame needs n+1 vectors with n+1 components, n ≥ 2".into(),
            ));
        }
        if let Some(v) = vectors.iter().flatten().filter_map(Expr::max_var).max() {
            if v >= big {
                return Err(Error::Chart(format!("frame uses coordinate {v} of a {big}-dimensional chart")));
            }
        }
        Ok(Self { vectors })
    }

    /// Dimension `n + 1` of the ambient chart.
    pub fn dim(&self) -> usize {
        self.vectors.len()
    }

    pub fn vectors(&self) -> &[Vec<Expr>] {
        &self.vectors
    }

    /// Jets of `E^μ_a`, as rows `μ`.
    pub fn frame_jets(&self, x: &[f64], order: usize) -> Vec<Vec<Jet>> {
        let seed = Jet::seed(x, order);
        let big = self.dim();
        (0..big)
            .map(|mu| (0..big).map(|a| self.vectors[a][mu].eval(&seed)).collect())
            .collect()
    }

    /// Jets of `θ^a_μ`, as rows `a`.
    pub fn coframe_jets(&self, x: &[f64], order: usize) -> Result<Vec<Vec<Jet>>> {
        invert_jet_matrix(&self.frame_jets(x, order))
    }

    /// `E` with columns `e_a` at `x`.
    pub fn frame_at(&self, x: &[f64]) -> DMatrix<f64> {
        let big = self.dim();
        DMatrix::from_fn(big, big, |mu, a| self.vectors[a][mu].value_at(x))
    }

    pub fn coframe_at(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let e = self.frame_at(x);
        e.clone()
            .try_inverse()
            .ok_or_else(|| Error::SingularFrame(e.determinant().abs()))
    }

    /// `max |ᵗE g E − S|` at `x`.
    pub fn relations_residual(&self, metric: &LorentzMetric, x: &[f64]) -> Result<f64> {
        frame_relations_residual(&self.frame_at(x), &metric.matrix_at(x)?)
    }

    /// Checks the adapted-frame relations at the given points.
    pub fn check_relations(&self, metric: &LorentzMetric, points: &[Vec<f64>]) -> Result<f64> {
        let mut worst = 0.0f64;
        for p in points {
            worst = worst.max(self.relations_residual(metric, p)?);
        }
        if worst > FRAME_TOL {
            return Err(Error::FrameRelations(worst));
        }
        Ok(worst)
    }

    /// The frame `e'_b = e_a M^a_b` for a constant matrix `M`.
    pub fn transformed(&self, m: &DMatrix<f64>) -> Result<Self> {
        let big = self.dim();
        if m.nrows() != big || m.ncols() != big {
            return Err(Error::ShapeMismatch("transformation of the wrong size".into()));
        }
        let vectors = (0..big)
            .map(|b| {
                (0..big)
                    .map(|mu| {
                        (0..big)
                            .filter(|&a| m[(a, b)] != 0.0)
                            .map(|a| Expr::constant(m[(a, b)]) * self.vectors[a][mu].clone())
                            .reduce(|acc, t| acc + t)
                            .unwrap_or_else(Expr::zero)
                    })
                    .collect()
            })
            .collect();
        Self::new(vectors)
    }
}

/// The ambient one-form `θ^a` of an adapted frame.
pub struct CoframeForm {
    frame: AdaptedFrameField,
    a: usize,
}

impl CoframeForm {
    pub fn new(frame: AdaptedFrameField, a: usize) -> Result<Self> {
        if a >= frame.dim() {
            return Err(Error::SlotOutOfRange { slot: a, rank: frame.dim() });
        }
        Ok(Self { frame, a })
    }
}

impl JetField for CoframeForm {
    fn dim(&self) -> usize {
        self.frame.dim()
    }

    fn variances(&self) -> Vec<Variance> {
        vec![Variance::Down]
    }

    fn jets(&self, x: &[f64], order: usize) -> Result<Vec<Jet>> {
        check_point(self, x)?;
        Ok(self.frame.coframe_jets(x, order)?.swap_remove(self.a))
    }
}

/// The component `φ^a_b` of the connection form,
/// `(φ^a_b)_β = θ^a_α(∂_β e^α_b + Γ^α_{βσ} e^σ_b)`.
pub struct ConnectionForm {
    frame: AdaptedFrameField,
    gamma: Arc<dyn JetField>,
    a: usize,
    b: usize,
}

impl ConnectionForm {
    pub fn new(frame: AdaptedFrameField, conn: &ConnectionCoefficients, a: usize, b: usize) -> Result<Self> {
        let big = frame.dim();
        if conn.dim() != big {
            return Err(Error::ShapeMismatch("frame and connection on different charts".into()));
        }
        for s in [a, b] {
            if s >= big {
                return Err(Error::SlotOutOfRange { slot: s, rank: big });
            }
        }
        Ok(Self {
            frame,
            gamma: conn.field().clone(),
            a,
            b,
        })
    }
}

impl JetField for ConnectionForm {
    fn dim(&self) -> usize {
        self.frame.dim()
    }

    fn variances(&self) -> Vec<Variance> {
        vec![Variance::Down]
    }

    fn jets(&self, x: &[f64], order: usize) -> Result<Vec<Jet>> {
        check_point(self, x)?;
        let n = self.dim();
        let e = self.frame.frame_jets(x, order + 1);
        let low: Vec<Vec<Jet>> = e
            .iter()
            .map(|r| r.iter().map(|j| j.truncate(order)).collect())
            .collect();
        let theta = invert_jet_matrix(&low)?;
        let gamma = self.gamma.jets(x, order)?;
        let mut out = Vec::with_capacity(n);
        for beta in 0..n {
            let mut acc = theta[0][0].zero_like();
            for al in 0..n {
                let mut inner = e[al][self.b].partial(beta);
                for s in 0..n {
                    inner += &(&gamma[(al * n + beta) * n + s] * &low[s][self.b]);
                }
                acc += &(&theta[self.a][al] * &inner);
            }
            out.push(acc);
        }
        Ok(out)
    }
}

/// Ricci coefficients `γ^a_{bc} = e^β_b e^γ_c {Γ^α_{βγ} θ^a_α − ∂_β θ^a_γ}`,
/// stored with frame indices in the slots `[a][b][c]`.
pub fn ricci_coefficients(
    conn: &ConnectionCoefficients,
    frame: &AdaptedFrameField,
    x: &[f64],
) -> Result<TensorValue> {
    let n = frame.dim();
    if conn.dim() != n {
        return Err(Error::ShapeMismatch("frame and connection on different charts".into()));
    }
    let theta = frame.coframe_jets(x, 1)?;
    let e = frame.frame_at(x);
    let gamma = conn.gamma_at(x)?;
    // inner[a][β][γ] = Γ^α_{βγ} θ^a_α − ∂_β θ^a_γ
    let mut inner = vec![0.0; n * n * n];
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                let mut v = -theta[a][c].partial(b).value();
                for al in 0..n {
                    v += gamma.get(&[al, b, c]) * theta[a][al].value();
                }
                inner[(a * n + b) * n + c] = v;
            }
        }
    }
    let mut out = TensorValue::zeros(n, vec![Variance::Up, Variance::Down, Variance::Down]);
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                let mut v = 0.0;
                for be in 0..n {
                    for ga in 0..n {
                        v += e[(be, b)] * e[(ga, c)] * inner[(a * n + be) * n + ga];
                    }
                }
                out.set(&[a, b, c], v);
            }
        }
    }
    ensure_finite(out.components(), "Ricci coefficients")?;
    Ok(out)
}

/// The blocks of the connection form in an adapted frame, each given by its
/// components `φ(e_c)` for `c = 0..=n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectionFormBlocks {
    /// `φⁿ_n(e_c)`.
    pub dilation: Vec<f64>,
    /// `φ̄^A(e_c) = φ^A_n(e_c)`, rows `A = 1..n−1`.
    pub phi_bar: Vec<Vec<f64>>,
    /// `φ̲_A(e_c) = φⁿ_A(e_c)`.
    pub phi_under: Vec<Vec<f64>>,
    /// `φ^B_A(e_c)` as `phi[B−1][A−1][c]`.
    pub rotation: Vec<Vec<Vec<f64>>>,
    /// `max_c |ᵗΦ_c S + S Φ_c|` with `Φ_c[a][b] = γ^a_{cb}`.
    pub shape_residual: f64,
}

/// Splits Ricci coefficients into the blocks of the Lorentz algebra.
pub fn decompose_blocks(gamma: &TensorValue) -> Result<ConnectionFormBlocks> {
    let big = gamma.dims();
    if gamma.rank() != 3 || big < 3 {
        return Err(Error::ShapeMismatch("Ricci coefficients must have three slots".into()));
    }
    let n = big - 1;
    let s = LorentzPairing::new(n)?;
    let mut shape_residual = 0.0f64;
    for c in 0..big {
        let phi = DMatrix::from_fn(big, big, |a, b| gamma.get(&[a, c, b]));
        let r = (phi.transpose() * s.matrix() + s.matrix() * &phi).amax();
        shape_residual = shape_residual.max(r);
    }
    if shape_residual > BLOCK_TOL {
        return Err(Error::BlockShape(shape_residual));
    }
    let comp = |a: usize, b: usize| (0..big).map(|c| gamma.get(&[a, c, b])).collect::<Vec<f64>>();
    Ok(ConnectionFormBlocks {
        dilation: comp(n, n),
        phi_bar: (1..n).map(|a| comp(a, n)).collect(),
        phi_under: (1..n).map(|a| comp(n, a)).collect(),
        rotation: (1..n).map(|b| (1..n).map(|a| comp(b, a)).collect()).collect(),
        shape_residual,
    })
}

/// `max |φⁿ_A(e_c)|` over hypersurface directions `c = 1..=n`; zero exactly
/// when the connection form reduces to the algebra of `G` along the
/// hypersurface.
pub fn reduction_obstruction(blocks: &ConnectionFormBlocks) -> f64 {
    blocks
        .phi_under
        .iter()
        .flat_map(|row| row.iter().skip(1))
        .fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Ricci tensor in the adapted frame, `R_{ab} = e^μ_a e^ν_b Ric_{μν}`.
pub fn frame_ricci(metric: &LorentzMetric, frame: &AdaptedFrameField, x: &[f64]) -> Result<DMatrix<f64>> {
    let lc = levi_civita(metric);
    let ric = crate::connection::ricci(&lc, x)?.to_matrix()?;
    let e = frame.frame_at(x);
    Ok(e.transpose() * ric * e)
}

/// `S^{ab} R_{ab} = −2R_{0n} + Σ_A R_{AA}` for a frame-component matrix.
pub fn frame_scalar(r: &DMatrix<f64>) -> f64 {
    let n = r.nrows() - 1;
    -r[(0, n)] - r[(n, 0)] + (1..n).map(|a| r[(a, a)]).sum::<f64>()
}

/// The G_R-radiation connection induced on a null hypersurface.
#[derive(Debug, Clone)]
pub struct InducedConnection {
    pub connection: ConnectionCoefficients,
    pub structure: NullStructure,
    /// `χ = i*φⁿ_n`.
    pub chi: Arc<dyn JetFieldDebug>,
    /// Largest `reduction_obstruction` over the sample points.
    pub obstruction: f64,
    /// Largest mismatch of the orthogonal block `γ^B_{cA}` between the
    /// hypersurface and the ambient frame.
    pub orthogonal_block_residual: f64,
    /// Largest `|i_*ξ − e_n|`.
    pub alignment_residual: f64,
}

/// A [`JetField`] that can also be printed.
pub trait JetFieldDebug: JetField + std::fmt::Debug {}

impl<T: JetField + std::fmt::Debug> JetFieldDebug for T {}

/// The hypersurface frame: the inverse of `(i*θ¹, …, i*θⁿ)`.
#[derive(Clone)]
struct HypersurfaceFrame {
    forms: Vec<Arc<dyn JetField>>,
}

impl HypersurfaceFrame {
    /// Jets of `ê^α_c` as rows `α`, columns `c = 1..=n` (stored from 0).
    fn jets(&self, x: &[f64], order: usize) -> Result<Vec<Vec<Jet>>> {
        let rows: Vec<Vec<Jet>> = self
            .forms
            .iter()
            .map(|f| f.jets(x, order))
            .collect::<Result<_>>()?;
        invert_jet_matrix(&rows)
    }
}

/// The vector field `ξ` with `i_*ξ = e_n`.
#[derive(Clone)]
struct KernelVector {
    frame: HypersurfaceFrame,
}

impl std::fmt::Debug for KernelVector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("KernelVector")
    }
}

impl JetField for KernelVector {
    fn dim(&self) -> usize {
        self.frame.forms.len()
    }

    fn variances(&self) -> Vec<Variance> {
        vec![Variance::Up]
    }

    fn jets(&self, x: &[f64], order: usize) -> Result<Vec<Jet>> {
        check_point(self, x)?;
        let n = self.dim();
        Ok(self.frame.jets(x, order)?.into_iter().map(|mut row| row.swap_remove(n - 1)).collect())
    }
}

/// A pulled-back one-form that can be printed.
struct Pulled(PulledBackCovariant);

impl std::fmt::Debug for Pulled {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("PulledBackCovariant")
    }
}

impl JetField for Pulled {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn variances(&self) -> Vec<Variance> {
        self.0.variances()
    }

    fn jets(&self, x: &[f64], order: usize) -> Result<Vec<Jet>> {
        self.0.jets(x, order)
    }
}

/// Builds `β = i*g`, `f = i*θⁿ`, `χ = i*φⁿ_n` and the G_R-radiation
/// connection they determine, and reports how far the ambient connection is
/// from reducing along the hypersurface.
pub fn induced_radiation_connection(
    metric: &LorentzMetric,
    frame: &AdaptedFrameField,
    embedding: Arc<Embedding>,
    chart: Chart,
) -> Result<InducedConnection> {
    let big = metric.dim();
    let n = big - 1;
    if frame.dim() != big || embedding.target_dim() != big || chart.dim() != n {
        return Err(Error::ShapeMismatch("metric, frame, embedding and chart dimensions disagree".into()));
    }
    let points = chart_points(&chart);
    for p in &points {
        frame.relations_residual(metric, &embedding.point(p)).and_then(|r| {
            if r > FRAME_TOL {
                Err(Error::FrameRelations(r))
            } else {
                Ok(())
            }
        })?;
    }
    let beta = pullback_metric(metric.field().clone(), embedding.clone(), chart.clone())?;
    let pull = |form: Arc<dyn JetField>| -> Result<Arc<dyn JetField>> {
        Ok(Arc::new(Pulled(PulledBackCovariant::new(form, embedding.clone())?)))
    };
    let forms: Vec<Arc<dyn JetField>> = (1..=n)
        .map(|a| pull(Arc::new(CoframeForm::new(frame.clone(), a)?)))
        .collect::<Result<_>>()?;
    let hyper = HypersurfaceFrame { forms: forms.clone() };
    let xi: Arc<dyn JetField> = Arc::new(KernelVector { frame: hyper.clone() });
    let f = forms[n - 1].clone();
    let lc = levi_civita(metric);
    let chi_field = Arc::new(Pulled(PulledBackCovariant::new(
        Arc::new(ConnectionForm::new(frame.clone(), &lc, n, n)?),
        embedding.clone(),
    )?));
    let structure = NullStructure::new(beta, xi.clone(), f)?;
    let connection = ConnectionCoefficients::gr_connection(&structure, chi_field.clone())?;

    let mut obstruction = 0.0f64;
    let mut alignment = 0.0f64;
    let mut orthogonal = 0.0f64;
    for p in &points {
        let q = embedding.point(p);
        let gamma = ricci_coefficients(&lc, frame, &q)?;
        let blocks = decompose_blocks(&gamma)?;
        obstruction = obstruction.max(reduction_obstruction(&blocks));

        let push = embedding.differential(p) * nalgebra::DVector::from_row_slice(xi.evaluate(p)?.components());
        let en = frame.frame_at(&q).column(n).into_owned();
        alignment = alignment.max((push - en).amax());

        let hat = hypersurface_ricci_coefficients(&connection, &hyper, p)?;
        for b in 1..n {
            for a in 1..n {
                for c in 1..=n {
                    let d = hat.get(&[b - 1, c - 1, a - 1]) - gamma.get(&[b, c, a]);
                    orthogonal = orthogonal.max(d.abs());
                }
            }
        }
    }
    if alignment > ALIGNMENT_TOL {
        return Err(Error::NotAdapted(format!(
            "e_n is not the push-forward of the kernel direction (residual {alignment:e})"
        )));
    }
    Ok(InducedConnection {
        connection,
        structure,
        chi: chi_field,
        obstruction,
        orthogonal_block_residual: orthogonal,
        alignment_residual: alignment,
    })
}

/// `γ̂^a_{bc}` of a hypersurface connection in the frame dual to `(i*θ¹, …, i*θⁿ)`.
fn hypersurface_ricci_coefficients(
    conn: &ConnectionCoefficients,
    frame: &HypersurfaceFrame,
    x: &[f64],
) -> Result<TensorValue> {
    let n = conn.dim();
    let theta: Vec<Vec<Jet>> = frame
        .forms
        .iter()
        .map(|f| f.jets(x, 1))
        .collect::<Result<_>>()?;
    let e = frame.jets(x, 0)?;
    let gamma = conn.gamma_at(x)?;
    let mut out = TensorValue::zeros(n, vec![Variance::Up, Variance::Down, Variance::Down]);
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                let mut v = 0.0;
                for be in 0..n {
                    for ga in 0..n {
                        let mut inner = -theta[a][ga].partial(be).value();
                        for al in 0..n {
                            inner += gamma.get(&[al, be, ga]) * theta[a][al].value();
                        }
                        v += e[be][b].value() * e[ga][c].value() * inner;
                    }
                }
                out.set(&[a, b, c], v);
            }
        }
    }
    Ok(out)
}

/// The vector field `ξ` on the hypersurface solving `di · ξ = e_n ∘ i` in
/// the least-squares sense.
struct PushedBackVector {
    frame: AdaptedFrameField,
    embedding: Arc<Embedding>,
    index: usize,
}

impl std::fmt::Debug for PushedBackVector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "PushedBackVector(e_{})", self.index)
    }
}

impl JetField for PushedBackVector {
    fn dim(&self) -> usize {
        self.embedding.source_dim()
    }

    fn variances(&self) -> Vec<Variance> {
        vec![Variance::Up]
    }

    fn jets(&self, x: &[f64], order: usize) -> Result<Vec<Jet>> {
        check_point(self, x)?;
        let n = self.dim();
        let big = self.embedding.target_dim();
        let inner = self.embedding.jets(x, order + 1);
        let di: Vec<Vec<Jet>> = inner.iter().map(|c| (0..n).map(|a| c.partial(a)).collect()).collect();
        let along: Vec<Jet> = inner.iter().map(|c| c.truncate(order)).collect();
        let e: Vec<Jet> = self.frame.vectors()[self.index].iter().map(|c| c.eval(&along)).collect();
        let zero = along[0].zero_like();
        let normal: Vec<Vec<Jet>> = (0..n)
            .map(|a| {
                (0..n)
                    .map(|b| {
                        let mut acc = zero.clone();
                        for mu in 0..big {
                            acc += &(&di[mu][a] * &di[mu][b]);
                        }
                        acc
                    })
                    .collect()
            })
            .collect();
        let inv = invert_jet_matrix(&normal)?;
        let rhs: Vec<Jet> = (0..n)
            .map(|a| {
                let mut acc = zero.clone();
                for mu in 0..big {
                    acc += &(&di[mu][a] * &e[mu]);
                }
                acc
            })
            .collect();
        Ok((0..n)
            .map(|a| {
                let mut acc = zero.clone();
                for b in 0..n {
                    acc += &(&inv[a][b] * &rhs[b]);
                }
                acc
            })
            .collect())
    }
}

/// The G_R-radiation connection assembled directly from pulled-back data:
/// `β = i*g`, `f = i*θⁿ`, `χ = i*φⁿ_n`, with `ξ` obtained by pushing `e_n`
/// back through the embedding.
pub fn pulled_back_gr_connection(
    metric: &LorentzMetric,
    frame: &AdaptedFrameField,
    embedding: Arc<Embedding>,
    chart: Chart,
) -> Result<ConnectionCoefficients> {
    let n = chart.dim();
    let beta = pullback_metric(metric.field().clone(), embedding.clone(), chart)?;
    let xi: Arc<dyn JetField> = Arc::new(PushedBackVector {
        frame: frame.clone(),
        embedding: embedding.clone(),
        index: n,
    });
    let f: Arc<dyn JetField> = Arc::new(PulledBackCovariant::new(
        Arc::new(CoframeForm::new(frame.clone(), n)?),
        embedding.clone(),
    )?);
    let chi: Arc<dyn JetField> = Arc::new(PulledBackCovariant::new(
        Arc::new(ConnectionForm::new(frame.clone(), &levi_civita(metric), n, n)?),
        embedding,
    )?);
    let structure = NullStructure::new(beta, xi, f)?;
    ConnectionCoefficients::gr_connection(&structure, chi)
}

/// `max |∇^g_{∂_b} ∂_c − i_*(Γ^a_{bc} ∂_a)|` at `x`: zero when the ambient
/// Levi-Civita connection restricts to `conn` along the hypersurface.
pub fn gauss_residual(
    metric: &LorentzMetric,
    embedding: &Embedding,
    conn: &ConnectionCoefficients,
    x: &[f64],
) -> Result<f64> {
    let n = embedding.source_dim();
    let big = embedding.target_dim();
    let jets = embedding.jets(x, 2);
    let amb = levi_civita(metric).gamma_at(&embedding.point(x))?;
    let gamma = conn.gamma_at(x)?;
    let d = |mu: usize, a: usize| jets[mu].partial(a).value();
    let mut m = 0.0f64;
    for mu in 0..big {
        for b in 0..n {
            for c in 0..n {
                let mut lhs = jets[mu].partial(b).partial(c).value();
                for nu in 0..big {
                    for rho in 0..big {
                        lhs += amb.get(&[mu, nu, rho]) * d(nu, b) * d(rho, c);
                    }
                }
                let rhs: f64 = (0..n).map(|a| d(mu, a) * gamma.get(&[a, b, c])).sum();
                m = m.max((lhs - rhs).abs());
            }
        }
    }
    Ok(m)
}

/// Curvature of the Levi-Civita connection at `x`.
pub fn ambient_curvature(metric: &LorentzMetric, x: &[f64]) -> Result<TensorValue> {
    curvature(&levi_civita(metric), x)
}
