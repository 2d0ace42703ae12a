//! Radiation connections on a null hypersurface.
//!
//! A G-radiation connection has Christoffel symbols
//! `Γ^α_{βγ} = β_f^{αρ} B_{ρ,βγ} + ξ^α Z_{βγ}` for a symmetric `Z`. The G_R
//! family fixes `Z = ∂_(β f_γ) + χ_(β f_γ)` from a one-form `χ`, and the G_I
//! family is the subset of G-connections whose `χ` vanishes.
//!
//! Curvature uses the convention
//! `R^λ_{αβγ} = ∂_γΓ^λ_{βα} − ∂_βΓ^λ_{γα} + Γ^λ_{γσ}Γ^σ_{βα} − Γ^λ_{βσ}Γ^σ_{γα}`,
//! under which `∂_[γ χ_β] = ½ ξ^α R^λ_{αβγ} f_λ` and the decomposition of
//! `R` into its `Z = 0` part plus a `ξ`-valued correction hold as written.
//! Symmetrization brackets carry the factor ½.

use std::sync::Arc;

use crate::calculus::{check_point, ensure_finite, Jet, JetField, TensorFieldOnChart};
use crate::error::{Error, Result};
use crate::groups::Level;
use crate::hypersurface::{koszul_jets, NullStructure};
use crate::tensor::{flat_index, multi_index, TensorValue, Variance};

/// Tolerance for the pointwise invariants `∇β = 0`, `∇ξ = χ ξ` and the
/// agreement of the two expressions of `χ`.
pub const INVARIANT_TOL: f64 = 1e-8;
/// Tolerance for identities involving curvature.
pub const CURVATURE_TOL: f64 = 1e-6;
/// Tolerance for the torsion and connection-difference checks.
pub const EXACT_TOL: f64 = 1e-10;
/// Points of the chart at which the symmetry of `Z` and G_I admissibility are checked.
pub const ADMISSIBILITY_SAMPLES: usize = 32;

fn values(jets: &[Jet]) -> Vec<f64> {
    jets.iter().map(Jet::value).collect()
}

fn truncated(jets: &[Jet], order: usize) -> Vec<Jet> {
    jets.iter().map(|j| j.truncate(order)).collect()
}

/// `Z = ∂_(β f_γ) + χ_(β f_γ)` for the G_R family.
pub struct GrZField {
    f: Arc<dyn JetField>,
    chi: Arc<dyn JetField>,
}

impl GrZField {
    pub fn new(f: Arc<dyn JetField>, chi: Arc<dyn JetField>) -> Result<Self> {
        if f.variances() != [Variance::Down] || chi.variances() != [Variance::Down] {
            return Err(Error::VarianceMismatch("f and chi must be one-forms".into()));
        }
        if f.dim() != chi.dim() {
            return Err(Error::ShapeMismatch("f and chi on different charts".into()));
        }
        Ok(Self { f, chi })
    }
}

impl JetField for GrZField {
    fn dim(&self) -> usize {
        self.f.dim()
    }

    fn variances(&self) -> Vec<Variance> {
        vec![Variance::Down, Variance::Down]
    }

    fn jets(&self, x: &[f64], order: usize) -> Result<Vec<Jet>> {
        check_point(self, x)?;
        let n = self.dim();
        let f = self.f.jets(x, order + 1)?;
        let chi = self.chi.jets(x, order)?;
        let mut out = Vec::with_capacity(n * n);
        for b in 0..n {
            for g in 0..n {
                let df = &f[g].partial(b) + &f[b].partial(g);
                let cf = &(&chi[b] * &f[g]) + &(&chi[g] * &f[b]);
                out.push((&df + &cf) * 0.5);
            }
        }
        Ok(out)
    }
}

/// `Γ^α_{βγ} = β_f^{αρ} B_{ρ,βγ} + ξ^α Z_{βγ}` as a field.
pub struct RadiationGamma {
    structure: NullStructure,
    z: Option<Arc<dyn JetField>>,
}

impl JetField for RadiationGamma {
    fn dim(&self) -> usize {
        self.structure.dim()
    }

    fn variances(&self) -> Vec<Variance> {
        vec![Variance::Up, Variance::Down, Variance::Down]
    }

    fn jets(&self, x: &[f64], order: usize) -> Result<Vec<Jet>> {
        check_point(self, x)?;
        let n = self.dim();
        let beta = self.structure.metric().field().jets(x, order + 1)?;
        let koszul = koszul_jets(&beta, n);
        let bf = self.structure.quasi_inverse_jets(x, order)?;
        let xi = self.structure.xi().jets(x, order)?;
        let z = match &self.z {
            Some(z) => Some(z.jets(x, order)?),
            None => None,
        };
        let mut out = Vec::with_capacity(n * n * n);
        for a in 0..n {
            for b in 0..n {
                for g in 0..n {
                    let mut acc = xi[a].zero_like();
                    for r in 0..n {
                        acc += &(&bf[a * n + r] * &koszul[(r * n + b) * n + g]);
                    }
                    if let Some(z) = &z {
                        acc += &(&xi[a] * &z[b * n + g]);
                    }
                    out.push(acc);
                }
            }
        }
        Ok(out)
    }
}

/// Christoffel symbols `Γ^α_{βγ}` of a linear connection on a chart.
#[derive(Clone)]
pub struct ConnectionCoefficients {
    gamma: Arc<dyn JetField>,
    level: Option<Level>,
    structure: Option<NullStructure>,
    z: Option<Arc<dyn JetField>>,
}

impl std::fmt::Debug for ConnectionCoefficients {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ConnectionCoefficients")
            .field("dim", &self.dim())
            .field("level", &self.level)
            .finish_non_exhaustive()
    }
}

fn check_symmetric_field(z: &dyn JetField, ns: &NullStructure) -> Result<()> {
    if z.dim() != ns.dim() || z.variances() != [Variance::Down, Variance::Down] {
        return Err(Error::ShapeMismatch("Z must be a (0,2) field on the chart".into()));
    }
    for p in ns.chart().sample(ADMISSIBILITY_SAMPLES, 0) {
        let t = z.evaluate(&p)?;
        let residual = t.sub(&t.symmetrize(0, 1)?)?.max_abs();
        if residual > 1e-12 * t.max_abs().max(1.0) {
            return Err(Error::NotSymmetric(residual));
        }
    }
    Ok(())
}

impl ConnectionCoefficients {
    /// The G-radiation connection with free tensor `Z`.
    pub fn g_connection(ns: &NullStructure, z: Arc<dyn JetField>) -> Result<Self> {
        check_symmetric_field(z.as_ref(), ns)?;
        Ok(Self::radiation(ns, Some(z), Level::G))
    }

    /// The connection `β_f B` with `Z = 0`.
    pub fn koszul_part(ns: &NullStructure) -> Self {
        Self::radiation(ns, None, Level::G)
    }

    /// The G_R-radiation connection determined by `χ`.
    pub fn gr_connection(ns: &NullStructure, chi: Arc<dyn JetField>) -> Result<Self> {
        if chi.dim() != ns.dim() {
            return Err(Error::ShapeMismatch("chi on a different chart".into()));
        }
        let z: Arc<dyn JetField> = Arc::new(GrZField::new(ns.f().clone(), chi)?);
        Ok(Self::radiation(ns, Some(z), Level::GR))
    }

    /// A G_I-radiation connection; `Z` must satisfy `ξ^λ Z_{αλ} = ξ^λ ∂_α f_λ`.
    pub fn gi_connection(ns: &NullStructure, z: Arc<dyn JetField>) -> Result<Self> {
        check_symmetric_field(z.as_ref(), ns)?;
        let conn = Self::radiation(ns, Some(z), Level::GI);
        let mut points = ns.chart().sample(ADMISSIBILITY_SAMPLES, 0);
        points.push(ns.chart().domain().iter().map(|[lo, hi]| 0.5 * (lo + hi)).collect());
        for p in points {
            let chi = chi_from_z(&conn, ns, &p)?;
            let residual = chi.iter().fold(0.0f64, |m, c| m.max(c.abs()));
            if residual > INVARIANT_TOL {
                return Err(Error::GiAdmissibility { residual, point: p });
            }
        }
        Ok(conn)
    }

    /// A connection given directly by its coefficients.
    pub fn from_field(gamma: Arc<dyn JetField>, structure: Option<NullStructure>) -> Result<Self> {
        if gamma.variances() != [Variance::Up, Variance::Down, Variance::Down] {
            return Err(Error::VarianceMismatch("Christoffel symbols must be of type (1,2)".into()));
        }
        if let Some(ns) = &structure {
            if ns.dim() != gamma.dim() {
                return Err(Error::ShapeMismatch("connection and structure on different charts".into()));
            }
        }
        Ok(Self {
            gamma,
            level: None,
            structure,
            z: None,
        })
    }

    fn radiation(ns: &NullStructure, z: Option<Arc<dyn JetField>>, level: Level) -> Self {
        let gamma = RadiationGamma {
            structure: ns.clone(),
            z: z.clone(),
        };
        Self {
            gamma: Arc::new(gamma),
            level: Some(level),
            structure: Some(ns.clone()),
            z,
        }
    }

    pub fn dim(&self) -> usize {
        self.gamma.dim()
    }

    pub fn level(&self) -> Option<Level> {
        self.level
    }

    pub fn structure(&self) -> Option<&NullStructure> {
        self.structure.as_ref()
    }

    pub fn z_field(&self) -> Option<&Arc<dyn JetField>> {
        self.z.as_ref()
    }

    pub fn field(&self) -> &Arc<dyn JetField> {
        &self.gamma
    }

    pub fn gamma_jets(&self, x: &[f64], order: usize) -> Result<Vec<Jet>> {
        self.gamma.jets(x, order)
    }

    pub fn gamma_at(&self, x: &[f64]) -> Result<TensorValue> {
        let t = self.gamma.evaluate(x)?;
        ensure_finite(t.components(), "connection")?;
        Ok(t)
    }

    /// `max |Γ^α_{βγ} − Γ^α_{γβ}|` at `x`.
    pub fn torsion_residual(&self, x: &[f64]) -> Result<f64> {
        let g = self.gamma_at(x)?;
        let n = self.dim();
        let mut m = 0.0f64;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    m = m.max((g.get(&[a, b, c]) - g.get(&[a, c, b])).abs());
                }
            }
        }
        Ok(m)
    }

    /// `Z` at `x`, or `f_σ Γ^σ_{βγ}` when the connection was given directly.
    pub fn z_at(&self, x: &[f64]) -> Result<TensorValue> {
        match &self.z {
            Some(z) => z.evaluate(x),
            None => {
                let ns = self.require_structure()?;
                let n = self.dim();
                let f = ns.f().evaluate(x)?;
                let g = self.gamma_at(x)?;
                let mut out = TensorValue::zeros(n, vec![Variance::Down, Variance::Down]);
                for b in 0..n {
                    for c in 0..n {
                        let v: f64 = (0..n).map(|s| f.get(&[s]) * g.get(&[s, b, c])).sum();
                        out.set(&[b, c], v);
                    }
                }
                Ok(out)
            }
        }
    }

    fn require_structure(&self) -> Result<&NullStructure> {
        self.structure
            .as_ref()
            .ok_or_else(|| Error::NotAdapted("connection carries no null structure".into()))
    }
}

/// Covariant derivative jets, derivative index first.
///
/// `gamma` has order `p`, `t` has order `p + 1`; the result has order `p` and
/// components `∇_σ T^{…}_{…}` laid out as `[σ][indices of T]`.
pub fn nabla_jets(gamma: &[Jet], t: &[Jet], variances: &[Variance], n: usize) -> Vec<Jet> {
    let rank = variances.len();
    let p = t.first().map(|j| j.order().saturating_sub(1)).unwrap_or(0);
    let t_low = truncated(t, p);
    let g = truncated(gamma, p);
    let mut out = Vec::with_capacity(n * t.len());
    for s in 0..n {
        for (flat, comp) in t.iter().enumerate() {
            let idx = multi_index(flat, n, rank);
            let mut acc = comp.partial(s);
            for (slot, var) in variances.iter().enumerate() {
                let mut src = idx.clone();
                for k in 0..n {
                    src[slot] = k;
                    let tk = &t_low[flat_index(&src, n)];
                    match var {
                        Variance::Up => acc += &(&g[(idx[slot] * n + s) * n + k] * tk),
                        Variance::Down => acc -= &(&g[(k * n + s) * n + idx[slot]] * tk),
                    }
                }
            }
            out.push(acc);
        }
    }
    out
}

/// `∇T` at `x` for a field of any type; the derivative slot is first.
pub fn covariant_derivative(
    conn: &ConnectionCoefficients,
    t: &dyn JetField,
    x: &[f64],
) -> Result<TensorValue> {
    if t.dim() != conn.dim() {
        return Err(Error::ShapeMismatch("field and connection on different charts".into()));
    }
    check_point(t, x)?;
    let n = conn.dim();
    let gamma = conn.gamma_jets(x, 0)?;
    let tj = t.jets(x, 1)?;
    let vars = t.variances();
    let out = values(&nabla_jets(&gamma, &tj, &vars, n));
    ensure_finite(&out, "covariant derivative")?;
    let mut all = vec![Variance::Down];
    all.extend(vars);
    TensorValue::new(n, all, out)
}

/// `∇_β X^α = ∂_β X^α + Γ^α_{βσ} X^σ`, laid out `[β][α]`.
pub fn covariant_derivative_vector(
    conn: &ConnectionCoefficients,
    x_field: &dyn JetField,
    x: &[f64],
) -> Result<TensorValue> {
    if x_field.variances() != [Variance::Up] {
        return Err(Error::VarianceMismatch("expected a vector field".into()));
    }
    covariant_derivative(conn, x_field, x)
}

/// `∇_β f_α = ∂_β f_α − Γ^σ_{βα} f_σ`, laid out `[β][α]`.
pub fn covariant_derivative_oneform(
    conn: &ConnectionCoefficients,
    f: &dyn JetField,
    x: &[f64],
) -> Result<TensorValue> {
    if f.variances() != [Variance::Down] {
        return Err(Error::VarianceMismatch("expected a one-form".into()));
    }
    covariant_derivative(conn, f, x)
}

/// Jets of `χ_α = −ξ^λ ∇_α f_λ` of the given order.
pub fn chi_jets(conn: &ConnectionCoefficients, ns: &NullStructure, x: &[f64], order: usize) -> Result<Vec<Jet>> {
    let n = ns.dim();
    let gamma = conn.gamma_jets(x, order)?;
    let f = ns.f().jets(x, order + 1)?;
    let xi = ns.xi().jets(x, order)?;
    let nf = nabla_jets(&gamma, &f, &[Variance::Down], n);
    Ok((0..n)
        .map(|a| {
            let mut acc = xi[0].zero_like();
            for l in 0..n {
                acc -= &(&xi[l] * &nf[a * n + l]);
            }
            acc
        })
        .collect())
}

/// `χ_α = −ξ^λ (∂_α f_λ − Z_{αλ})`.
fn chi_from_z(conn: &ConnectionCoefficients, ns: &NullStructure, x: &[f64]) -> Result<Vec<f64>> {
    let n = ns.dim();
    let f = ns.f().jets(x, 1)?;
    let xi = ns.xi().evaluate(x)?;
    let z = conn.z_at(x)?;
    Ok((0..n)
        .map(|a| {
            -(0..n)
                .map(|l| xi.get(&[l]) * (f[l].partial(a).value() - z.get(&[a, l])))
                .sum::<f64>()
        })
        .collect())
}

/// `max_α |ξ^λ (∂_α f_λ − Z_{αλ})|` at `x`: the obstruction to the G_I level.
pub fn gi_admissibility_residual(conn: &ConnectionCoefficients, ns: &NullStructure, x: &[f64]) -> Result<f64> {
    Ok(chi_from_z(conn, ns, x)?.iter().fold(0.0f64, |m, c| m.max(c.abs())))
}

/// The one-form `χ` at `x`, with both of its expressions required to agree.
pub fn chi_oneform(conn: &ConnectionCoefficients, ns: &NullStructure, x: &[f64]) -> Result<TensorValue> {
    check_point(ns.xi().as_ref(), x)?;
    let first = values(&chi_jets(conn, ns, x, 0)?);
    let second = chi_from_z(conn, ns, x)?;
    ensure_finite(&first, "chi")?;
    let scale = first.iter().chain(&second).fold(1.0f64, |m, v| m.max(v.abs()));
    let diff = first
        .iter()
        .zip(&second)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    if diff > INVARIANT_TOL * scale {
        return Err(Error::NotAdapted(format!(
            "the two expressions of chi differ by {diff:e} at {x:?}"
        )));
    }
    TensorValue::new(ns.dim(), vec![Variance::Down], first)
}

/// `max |∇_σ β_{αγ}|` at `x`.
pub fn nabla_beta_residual(conn: &ConnectionCoefficients, ns: &NullStructure, x: &[f64]) -> Result<f64> {
    Ok(covariant_derivative(conn, ns.metric().field().as_ref(), x)?.max_abs())
}

/// `∇_β ξ^α − χ_β ξ^α` at `x`, laid out `[β][α]`.
pub fn nabla_xi_defect(conn: &ConnectionCoefficients, ns: &NullStructure, x: &[f64]) -> Result<TensorValue> {
    let n = ns.dim();
    let nabla = covariant_derivative_vector(conn, ns.xi().as_ref(), x)?;
    let chi = values(&chi_jets(conn, ns, x, 0)?);
    let xi = ns.xi().evaluate(x)?;
    let mut out = nabla;
    for b in 0..n {
        for a in 0..n {
            let v = out.get(&[b, a]) - chi[b] * xi.get(&[a]);
            out.set(&[b, a], v);
        }
    }
    Ok(out)
}

/// `max |∇_β ξ^α − χ_β ξ^α|` at `x`.
pub fn nabla_xi_residual(conn: &ConnectionCoefficients, ns: &NullStructure, x: &[f64]) -> Result<f64> {
    Ok(nabla_xi_defect(conn, ns, x)?.max_abs())
}

/// `div ξ = ∇_α ξ^α` at `x`.
pub fn div_xi(conn: &ConnectionCoefficients, ns: &NullStructure, x: &[f64]) -> Result<f64> {
    let nabla = covariant_derivative_vector(conn, ns.xi().as_ref(), x)?;
    Ok((0..ns.dim()).map(|a| nabla.get(&[a, a])).sum())
}

/// `max |∇_ξ ξ − χ(ξ) ξ|` at `x`.
pub fn geodesic_residual(conn: &ConnectionCoefficients, ns: &NullStructure, x: &[f64]) -> Result<f64> {
    let n = ns.dim();
    let nabla = covariant_derivative_vector(conn, ns.xi().as_ref(), x)?;
    let chi = values(&chi_jets(conn, ns, x, 0)?);
    let xi = ns.xi().evaluate(x)?;
    let chi_xi: f64 = (0..n).map(|b| chi[b] * xi.get(&[b])).sum();
    let mut m = 0.0f64;
    for a in 0..n {
        let along: f64 = (0..n).map(|b| xi.get(&[b]) * nabla.get(&[b, a])).sum();
        m = m.max((along - chi_xi * xi.get(&[a])).abs());
    }
    Ok(m)
}

/// Curvature jets of order `p` from connection jets of order `p + 1`,
/// laid out `[λ][α][β][γ]`.
pub fn curvature_jets(gamma: &[Jet], n: usize) -> Vec<Jet> {
    let p = gamma.first().map(|j| j.order().saturating_sub(1)).unwrap_or(0);
    let g = truncated(gamma, p);
    let at = |l: usize, b: usize, a: usize| (l * n + b) * n + a;
    let mut out = Vec::with_capacity(n.pow(4));
    for l in 0..n {
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    let mut acc = &gamma[at(l, b, a)].partial(c) - &gamma[at(l, c, a)].partial(b);
                    for s in 0..n {
                        acc += &(&g[at(l, c, s)] * &g[at(s, b, a)]);
                        acc -= &(&g[at(l, b, s)] * &g[at(s, c, a)]);
                    }
                    out.push(acc);
                }
            }
        }
    }
    out
}

/// `R^λ_{αβγ}` at `x`.
pub fn curvature(conn: &ConnectionCoefficients, x: &[f64]) -> Result<TensorValue> {
    let n = conn.dim();
    let r = values(&curvature_jets(&conn.gamma_jets(x, 1)?, n));
    ensure_finite(&r, "curvature")?;
    TensorValue::new(
        n,
        vec![Variance::Up, Variance::Down, Variance::Down, Variance::Down],
        r,
    )
}

/// `Ric_{αβ} = R^λ_{αβλ}`.
pub fn ricci(conn: &ConnectionCoefficients, x: &[f64]) -> Result<TensorValue> {
    let r = curvature(conn, x)?;
    r.contract(0, 3)
}

/// Residual of `R = R̊ + 2ξ^λ{(∂_[γ + χ_[γ) Z_{β]α} + Γ̊^σ_{α[β} Z_{γ]σ}}`,
/// where `R̊` and `Γ̊` belong to the connection with `Z = 0`.
pub fn curvature_decomposition_check(
    ns: &NullStructure,
    z: Arc<dyn JetField>,
    x: &[f64],
) -> Result<f64> {
    let n = ns.dim();
    let full = ConnectionCoefficients::g_connection(ns, z.clone())?;
    let base = ConnectionCoefficients::koszul_part(ns);
    let r = curvature(&full, x)?;
    let r0 = curvature(&base, x)?;
    let g0 = base.gamma_at(x)?;
    let chi = values(&chi_jets(&full, ns, x, 0)?);
    let zj = z.jets(x, 1)?;
    let xi = ns.xi().evaluate(x)?;
    let zv = |b: usize, a: usize| zj[b * n + a].value();
    let dz = |c: usize, b: usize, a: usize| zj[b * n + a].partial(c).value();
    let mut m = 0.0f64;
    for l in 0..n {
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    let derivative =
                        0.5 * (dz(c, b, a) + chi[c] * zv(b, a) - dz(b, c, a) - chi[b] * zv(c, a));
                    let transport: f64 = (0..n)
                        .map(|s| 0.5 * (g0.get(&[s, a, b]) * zv(c, s) - g0.get(&[s, a, c]) * zv(b, s)))
                        .sum();
                    let rhs = r0.get(&[l, a, b, c]) + 2.0 * xi.get(&[l]) * (derivative + transport);
                    m = m.max((r.get(&[l, a, b, c]) - rhs).abs());
                }
            }
        }
    }
    Ok(m)
}

/// Residual of `∂_[γ χ_β] = ½ ξ^α R^λ_{αβγ} f_λ`.
pub fn chi_curvature_check(conn: &ConnectionCoefficients, ns: &NullStructure, x: &[f64]) -> Result<f64> {
    let n = ns.dim();
    let chi = chi_jets(conn, ns, x, 1)?;
    let r = curvature(conn, x)?;
    let xi = ns.xi().evaluate(x)?;
    let f = ns.f().evaluate(x)?;
    let mut m = 0.0f64;
    for b in 0..n {
        for c in 0..n {
            let lhs = 0.5 * (chi[b].partial(c).value() - chi[c].partial(b).value());
            let mut rhs = 0.0;
            for a in 0..n {
                for l in 0..n {
                    rhs += xi.get(&[a]) * r.get(&[l, a, b, c]) * f.get(&[l]);
                }
            }
            m = m.max((lhs - 0.5 * rhs).abs());
        }
    }
    Ok(m)
}

/// First and second Bianchi residuals at `x`:
/// `max |R^λ_{αβγ} + R^λ_{βγα} + R^λ_{γαβ}|` and
/// `max |∇_μ R^λ_{αβγ} + ∇_β R^λ_{αγμ} + ∇_γ R^λ_{αμβ}|`.
pub fn bianchi_check(conn: &ConnectionCoefficients, x: &[f64]) -> Result<(f64, f64)> {
    let n = conn.dim();
    let gamma = conn.gamma_jets(x, 2)?;
    let r = curvature_jets(&gamma, n);
    let at = |l: usize, a: usize, b: usize, c: usize| ((l * n + a) * n + b) * n + c;
    let mut first = 0.0f64;
    for l in 0..n {
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    let s = r[at(l, a, b, c)].value() + r[at(l, b, c, a)].value() + r[at(l, c, a, b)].value();
                    first = first.max(s.abs());
                }
            }
        }
    }
    let vars = [Variance::Up, Variance::Down, Variance::Down, Variance::Down];
    let dr = values(&nabla_jets(&truncated(&gamma, 0), &r, &vars, n));
    let n4 = n.pow(4);
    let mut second = 0.0f64;
    for mu in 0..n {
        for l in 0..n {
            for a in 0..n {
                for b in 0..n {
                    for c in 0..n {
                        let s = dr[mu * n4 + at(l, a, b, c)]
                            + dr[b * n4 + at(l, a, c, mu)]
                            + dr[c * n4 + at(l, a, mu, b)];
                        second = second.max(s.abs());
                    }
                }
            }
        }
    }
    Ok((first, second))
}

/// Result of comparing two radiation connections over one structure.
#[derive(Debug, Clone)]
pub struct ConnectionDifference {
    /// `ΔZ_{βγ} = f_α ΔΓ^α_{βγ}`.
    pub delta_z: TensorValue,
    /// `max |ΔΓ^α_{βγ} − ξ^α ΔZ_{βγ}|`.
    pub off_xi_residual: f64,
}

/// `ΔΓ = Γ1 − Γ2`, required to be of the form `ξ ⊗ ΔZ`.
pub fn connection_difference(
    c1: &ConnectionCoefficients,
    c2: &ConnectionCoefficients,
    x: &[f64],
) -> Result<ConnectionDifference> {
    let ns = c1.require_structure()?;
    if c2.dim() != c1.dim() {
        return Err(Error::ShapeMismatch("connections on different charts".into()));
    }
    let n = ns.dim();
    let delta = c1.gamma_at(x)?.sub(&c2.gamma_at(x)?)?;
    let f = ns.f().evaluate(x)?;
    let xi = ns.xi().evaluate(x)?;
    let mut dz = TensorValue::zeros(n, vec![Variance::Down, Variance::Down]);
    for b in 0..n {
        for c in 0..n {
            let v: f64 = (0..n).map(|a| f.get(&[a]) * delta.get(&[a, b, c])).sum();
            dz.set(&[b, c], v);
        }
    }
    let mut residual = 0.0f64;
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                residual = residual.max((delta.get(&[a, b, c]) - xi.get(&[a]) * dz.get(&[b, c])).abs());
            }
        }
    }
    if residual > EXACT_TOL * delta.max_abs().max(1.0) {
        return Err(Error::DifferentStructures(residual));
    }
    Ok(ConnectionDifference {
        delta_z: dz,
        off_xi_residual: residual,
    })
}

/// A constant symmetric `Z` given by its rows.
pub fn constant_z(rows: &[Vec<f64>]) -> Result<Arc<dyn JetField>> {
    let n = rows.len();
    let values: Vec<f64> = rows.iter().flatten().copied().collect();
    let t = TensorValue::new(n, vec![Variance::Down, Variance::Down], values)?;
    Ok(Arc::new(TensorFieldOnChart::constant(&t)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::{Chart, Expr};
    use crate::hypersurface::DegenerateMetric;

    fn c(v: f64) -> Expr {
        Expr::constant(v)
    }

    fn x(i: usize) -> Expr {
        Expr::var(i)
    }

    fn chart() -> Chart {
        Chart::new(vec!["x1", "x2", "x3"], vec![[-1.0, 1.0]; 3]).unwrap()
    }

    fn flat() -> NullStructure {
        NullStructure::standard(chart()).unwrap()
    }

    fn curved() -> NullStructure {
        let rows = vec![
            vec![c(1.0) + x(0).powi(2), c(0.0), c(0.0)],
            vec![c(0.0), c(1.0), c(0.0)],
            vec![c(0.0), c(0.0), c(0.0)],
        ];
        let beta = Arc::new(TensorFieldOnChart::covariant2(rows).unwrap());
        let flat = flat();
        NullStructure::new(
            DegenerateMetric::new(chart(), beta).unwrap(),
            flat.xi().clone(),
            flat.f().clone(),
        )
        .unwrap()
    }

    fn z_field(rows: Vec<Vec<Expr>>) -> Arc<dyn JetField> {
        Arc::new(TensorFieldOnChart::covariant2(rows).unwrap())
    }

    fn poly_z() -> Arc<dyn JetField> {
        let a = x(0) * x(2) + 0.5;
        let b = x(1).powi(2) - x(2);
        let d = x(0) * x(1) * 0.3;
        z_field(vec![
            vec![a.clone(), d.clone(), x(2).powi(2)],
            vec![d, b, x(0) + 1.0],
            vec![x(2).powi(2), x(0) + 1.0, x(1) * 2.0],
        ])
    }

    const P: [f64; 3] = [0.3, -0.45, 0.6];

    #[test]
    fn flat_with_zero_z_is_flat() {
        let g = ConnectionCoefficients::g_connection(&flat(), constant_z(&vec![vec![0.0; 3]; 3]).unwrap()).unwrap();
        assert_eq!(g.gamma_at(&P).unwrap().max_abs(), 0.0);
        assert_eq!(curvature(&g, &P).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn flat_with_z_has_only_xi_components() {
        let zr = vec![vec![1.0, 2.0, 3.0], vec![2.0, 4.0, 5.0], vec![3.0, 5.0, 6.0]];
        let g = ConnectionCoefficients::g_connection(&flat(), constant_z(&zr).unwrap()).unwrap();
        let gv = g.gamma_at(&P).unwrap();
        for a in 0..3 {
            for b in 0..3 {
                for cc in 0..3 {
                    let expected = if a == 2 { zr[b][cc] } else { 0.0 };
                    assert_eq!(gv.get(&[a, b, cc]), expected);
                }
            }
        }
        // constant Z: only the quadratic terms survive, R^3_{αβγ} = Z_{γ3}Z_{βα} − Z_{β3}Z_{γα}
        let r = curvature(&g, &P).unwrap();
        for l in 0..3 {
            for a in 0..3 {
                for b in 0..3 {
                    for cc in 0..3 {
                        let e = if l == 2 { zr[cc][2] * zr[b][a] - zr[b][2] * zr[cc][a] } else { 0.0 };
                        assert_eq!(r.get(&[l, a, b, cc]), e);
                    }
                }
            }
        }
        assert!(r.max_abs() > 1.0);
        // with ξ in the kernel of Z the products vanish
        let zk = vec![vec![1.0, 2.0, 0.0], vec![2.0, 4.0, 0.0], vec![0.0, 0.0, 0.0]];
        let g = ConnectionCoefficients::g_connection(&flat(), constant_z(&zk).unwrap()).unwrap();
        assert_eq!(curvature(&g, &P).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn asymmetric_z_is_rejected() {
        let zr = vec![vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 0.0], vec![0.0, 0.0, 0.0]];
        assert!(matches!(
            ConnectionCoefficients::g_connection(&flat(), constant_z(&zr).unwrap()),
            Err(Error::NotSymmetric(_))
        ));
    }

    #[test]
    fn curved_block_christoffel() {
        let g = ConnectionCoefficients::koszul_part(&curved());
        let gv = g.gamma_at(&P).unwrap();
        let expected = P[0] / (1.0 + P[0] * P[0]);
        for (k, v) in gv.components().iter().enumerate() {
            let e = if k == 0 { expected } else { 0.0 };
            assert!((v - e).abs() < 1e-15, "{k}: {v}");
        }
    }

    #[test]
    fn gr_examples() {
        let zero = Arc::new(TensorFieldOnChart::zero(3, vec![Variance::Down]));
        let g = ConnectionCoefficients::gr_connection(&flat(), zero).unwrap();
        assert_eq!(g.gamma_at(&P).unwrap().max_abs(), 0.0);
        let chi = Arc::new(TensorFieldOnChart::one_form(vec![c(0.0), c(0.0), c(0.7)]).unwrap());
        let g = ConnectionCoefficients::gr_connection(&flat(), chi).unwrap();
        let gv = g.gamma_at(&P).unwrap();
        for (k, v) in gv.components().iter().enumerate() {
            assert_eq!(*v, if k == 26 { 0.7 } else { 0.0 });
        }
        let back = chi_oneform(&g, &flat(), &P).unwrap();
        assert!((back.components()[2] - 0.7).abs() < 1e-15);
    }

    #[test]
    fn gi_examples() {
        let ok = constant_z(&[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 0.0]]).unwrap();
        let g = ConnectionCoefficients::gi_connection(&flat(), ok).unwrap();
        assert_eq!(g.level(), Some(Level::GI));
        assert_eq!(g.gamma_at(&P).unwrap().get(&[2, 0, 0]), 1.0);
        assert_eq!(nabla_xi_residual(&g, &flat(), &P).unwrap(), 0.0);
        assert_eq!(div_xi(&g, &flat(), &P).unwrap(), 0.0);
        let bad = constant_z(&[vec![0.0; 3], vec![0.0; 3], vec![0.0, 0.0, 1.0]]).unwrap();
        match ConnectionCoefficients::gi_connection(&flat(), bad) {
            Err(Error::GiAdmissibility { residual, .. }) => assert!((residual - 1.0).abs() < 1e-15),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn derivative_examples() {
        let g = ConnectionCoefficients::g_connection(&flat(), poly_z()).unwrap();
        let zero = ConnectionCoefficients::koszul_part(&flat());
        let xf = TensorFieldOnChart::vector(vec![x(0), c(0.0), c(0.0)]).unwrap();
        let d = covariant_derivative_vector(&zero, &xf, &P).unwrap();
        assert_eq!(d.get(&[0, 0]), 1.0);
        assert_eq!(d.max_abs(), 1.0);
        let dxn = TensorFieldOnChart::one_form(vec![c(0.0), c(0.0), c(1.0)]).unwrap();
        let d = covariant_derivative_oneform(&g, &dxn, &P).unwrap();
        let z = poly_z().evaluate(&P).unwrap();
        assert!(d.add(&z).unwrap().max_abs() < 1e-15);
        let chi = chi_oneform(&g, &flat(), &P).unwrap();
        for a in 0..3 {
            assert!((chi.get(&[a]) - z.get(&[a, 2])).abs() < 1e-15);
        }
        assert!(geodesic_residual(&g, &flat(), &P).unwrap() < 1e-14);
        assert!(nabla_xi_residual(&g, &flat(), &P).unwrap() < 1e-14);
        assert!((div_xi(&g, &flat(), &P).unwrap() - chi.get(&[2])).abs() < 1e-14);
    }

    #[test]
    fn leibniz_rule() {
        let g = ConnectionCoefficients::g_connection(&curved(), poly_z()).unwrap();
        let xf = TensorFieldOnChart::vector(vec![x(1).sin(), x(0) * x(2), c(1.0) + x(1)]).unwrap();
        let ff = TensorFieldOnChart::one_form(vec![x(2).exp(), x(0).powi(3), x(1) * x(0)]).unwrap();
        let nx = covariant_derivative_vector(&g, &xf, &P).unwrap();
        let nf = covariant_derivative_oneform(&g, &ff, &P).unwrap();
        let xj = xf.jets(&P, 1).unwrap();
        let fj = ff.jets(&P, 1).unwrap();
        for b in 0..3 {
            let lhs: f64 = (0..3).map(|a| (&xj[a] * &fj[a]).partial(b).value()).sum();
            let rhs: f64 = (0..3)
                .map(|a| nf.get(&[b, a]) * xj[a].value() + fj[a].value() * nx.get(&[b, a]))
                .sum();
            assert!((lhs - rhs).abs() < 1e-12);
        }
    }

    #[test]
    fn structure_invariants() {
        for ns in [flat(), curved()] {
            let g = ConnectionCoefficients::g_connection(&ns, poly_z()).unwrap();
            assert!(nabla_beta_residual(&g, &ns, &P).unwrap() < 1e-12);
            assert!(nabla_xi_residual(&g, &ns, &P).unwrap() < 1e-12);
            assert!(g.torsion_residual(&P).unwrap() == 0.0);
            assert!(chi_curvature_check(&g, &ns, &P).unwrap() < 1e-12);
        }
    }

    #[test]
    fn z_linear_in_xn_gives_unit_curvature() {
        let zf = z_field(vec![
            vec![x(2), c(0.0), c(0.0)],
            vec![c(0.0), c(0.0), c(0.0)],
            vec![c(0.0), c(0.0), c(0.0)],
        ]);
        let g = ConnectionCoefficients::g_connection(&flat(), zf).unwrap();
        let r = curvature(&g, &P).unwrap();
        // Γ^3_{11} = x³: R^3_{1 3 1} = ∂_1 Γ^3_{31} − ∂_3 Γ^3_{11} = −1 in this convention
        assert_eq!(r.get(&[2, 0, 2, 0]), -1.0);
        assert_eq!(r.get(&[2, 0, 0, 2]), 1.0);
        assert_eq!(r.max_abs(), 1.0);
        let nonzero = r.components().iter().filter(|v| **v != 0.0).count();
        assert_eq!(nonzero, 2);
    }

    #[test]
    fn curvature_matches_finite_differences() {
        let g = ConnectionCoefficients::g_connection(&curved(), poly_z()).unwrap();
        let r = curvature(&g, &P).unwrap();
        let h = 1e-5;
        let gamma = |q: &[f64]| g.gamma_at(q).unwrap();
        let d: Vec<TensorValue> = (0..3)
            .map(|k| {
                let mut p1 = P.to_vec();
                let mut p2 = P.to_vec();
                p1[k] += h;
                p2[k] -= h;
                gamma(&p1).sub(&gamma(&p2)).unwrap().scale(0.5 / h)
            })
            .collect();
        let g0 = gamma(&P);
        for l in 0..3 {
            for a in 0..3 {
                for b in 0..3 {
                    for cc in 0..3 {
                        let mut v = d[cc].get(&[l, b, a]) - d[b].get(&[l, cc, a]);
                        for s in 0..3 {
                            v += g0.get(&[l, cc, s]) * g0.get(&[s, b, a])
                                - g0.get(&[l, b, s]) * g0.get(&[s, cc, a]);
                        }
                        assert!((r.get(&[l, a, b, cc]) - v).abs() < 1e-7);
                    }
                }
            }
        }
    }

    #[test]
    fn decomposition_identity() {
        let zero = constant_z(&vec![vec![0.0; 3]; 3]).unwrap();
        assert_eq!(curvature_decomposition_check(&curved(), zero, &P).unwrap(), 0.0);
        assert!(curvature_decomposition_check(&flat(), poly_z(), &P).unwrap() < 1e-12);
        assert!(curvature_decomposition_check(&curved(), poly_z(), &P).unwrap() < 1e-12);
    }

    #[test]
    fn bianchi_identities_and_negative_control() {
        let g = ConnectionCoefficients::g_connection(&curved(), poly_z()).unwrap();
        let (b1, b2) = bianchi_check(&g, &P).unwrap();
        assert!(b1 < 1e-12 && b2 < 1e-12, "{b1} {b2}");
        // antisymmetric perturbation P^λ_{23} = −P^λ_{32} = x¹
        let mut comps = vec![c(0.0); 27];
        for l in 0..3 {
            comps[l * 9 + 1 * 3 + 2] = x(0);
            comps[l * 9 + 2 * 3 + 1] = -x(0);
        }
        let pert = TensorFieldOnChart::new(3, vec![Variance::Up, Variance::Down, Variance::Down], comps).unwrap();
        let sum = crate::calculus::SumField::new(g.field().clone(), Arc::new(pert)).unwrap();
        let bad = ConnectionCoefficients::from_field(Arc::new(sum), Some(curved())).unwrap();
        assert!(bad.torsion_residual(&P).unwrap() > 0.5);
        let (b1, _) = bianchi_check(&bad, &P).unwrap();
        assert!(b1 > 1e-3);
    }

    #[test]
    fn differences() {
        let ns = curved();
        let g1 = ConnectionCoefficients::g_connection(&ns, poly_z()).unwrap();
        let d = connection_difference(&g1, &g1, &P).unwrap();
        assert_eq!(d.delta_z.max_abs(), 0.0);
        let g0 = ConnectionCoefficients::koszul_part(&ns);
        let d = connection_difference(&g1, &g0, &P).unwrap();
        let z = poly_z().evaluate(&P).unwrap();
        assert!(d.delta_z.sub(&z).unwrap().max_abs() < 1e-15);
        let chi1 = Arc::new(TensorFieldOnChart::one_form(vec![x(0), c(0.2), c(0.0)]).unwrap());
        let chi2 = Arc::new(TensorFieldOnChart::one_form(vec![c(0.0), c(0.0), x(1)]).unwrap());
        let r1 = ConnectionCoefficients::gr_connection(&ns, chi1).unwrap();
        let r2 = ConnectionCoefficients::gr_connection(&ns, chi2).unwrap();
        let d = connection_difference(&r1, &r2, &P).unwrap();
        let dchi = [P[0], 0.2, -P[1]];
        let f = [0.0, 0.0, 1.0];
        for b in 0..3 {
            for cc in 0..3 {
                let e = 0.5 * (dchi[b] * f[cc] + dchi[cc] * f[b]);
                assert!((d.delta_z.get(&[b, cc]) - e).abs() < 1e-15);
            }
        }
        // different structure: a transverse difference is flagged
        let other = ConnectionCoefficients::koszul_part(&flat());
        assert!(matches!(
            connection_difference(&g0, &other, &P),
            Err(Error::DifferentStructures(_))
        ));
    }
}
