//! Infinitesimal automorphisms of a radiation structure.
//!
//! A vector field `X` is an infinitesimal radiation transformation when
//! i) `L_X β = 0`, ii) `[X, ξ] = kξ` with `k` constant, and iii) the tensor
//! `K^λ_{αν} = ∇_ν∇_α X^λ − R^λ_{αμν} X^μ` vanishes, which is the
//! coordinate form of `L_X Γ = 0`.
//!
//! On the standard flat structure (`β = diag(1, …, 1, 0)`, `ξ = ∂_n`,
//! `Γ = 0`) the solutions are the affine fields
//! `X^A = ω^A_B x^B + a^A`, `Xⁿ = k_B x^B + k xⁿ + k₀` with `ω` antisymmetric.
//! For these `[X, ξ] = −k ξ`: the constant of condition ii) is the negative
//! of the ansatz coefficient `k`, and both are reported.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::calculus::sampling::halton;
use crate::calculus::{lie_derivative_tensor, Chart, Expr, JetField, TensorFieldOnChart};
use crate::connection::{curvature, nabla_jets, ConnectionCoefficients};
use crate::error::{Error, Result};
use crate::hypersurface::NullStructure;
use crate::linalg::{least_squares, nullspace, rref};
use crate::tensor::{TensorValue, Variance};

/// Tolerance for the residual triple of an automorphism.
pub const KILLING_TOL: f64 = 1e-7;
/// Tolerance for closure, antisymmetry and Jacobi checks.
pub const ALGEBRA_TOL: f64 = 1e-10;
/// Relative singular-value cut below which a direction is in the nullspace.
pub const NULL_CUT: f64 = 1e-10;
/// Relative singular value above which a direction is certainly not.
pub const RANK_GAP: f64 = 1e-6;
/// Seed of the generic points used to build the constraint system.
pub const CONSTRAINT_SEED: u64 = 0x5eed;

/// Residuals of the three defining conditions at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KillingResidual {
    /// `max |L_X β|`.
    pub lie_beta: f64,
    /// `max |[X, ξ] − k ξ|` with `k` fitted along `ξ`.
    pub bracket: f64,
    /// The fitted `k` in `[X, ξ] = k ξ`.
    pub k_bracket: f64,
    /// `max |K^λ_{αν}|`.
    pub killing: f64,
}

impl KillingResidual {
    pub fn max(&self) -> f64 {
        self.lie_beta.max(self.bracket).max(self.killing)
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.max() <= tol
    }
}

/// `K^λ_{αν} = ∇_ν∇_α X^λ − R^λ_{αμν} X^μ`, stored as `[λ][α][ν]`.
pub fn killing_tensor(x_field: &dyn JetField, conn: &ConnectionCoefficients, x: &[f64]) -> Result<TensorValue> {
    let n = conn.dim();
    let gamma = conn.gamma_jets(x, 1)?;
    let xj = x_field.jets(x, 2)?;
    // first derivative, layout [α][λ]
    let first = nabla_jets(&gamma, &xj, &[Variance::Up], n);
    // second derivative, layout [ν][α][λ]
    let second = nabla_jets(&gamma, &first, &[Variance::Down, Variance::Up], n);
    let r = curvature(conn, x)?;
    let mut out = TensorValue::zeros(n, vec![Variance::Up, Variance::Down, Variance::Down]);
    for l in 0..n {
        for a in 0..n {
            for nu in 0..n {
                let mut v = second[(nu * n + a) * n + l].value();
                for m in 0..n {
                    v -= r.get(&[l, a, m, nu]) * xj[m].value();
                }
                out.set(&[l, a, nu], v);
            }
        }
    }
    Ok(out)
}

/// The residual triple of conditions i)–iii) at `x`.
pub fn radiation_killing_residual(
    x_field: &dyn JetField,
    ns: &NullStructure,
    conn: &ConnectionCoefficients,
    x: &[f64],
) -> Result<KillingResidual> {
    if x_field.variances() != [Variance::Up] || x_field.dim() != ns.dim() {
        return Err(Error::VarianceMismatch("expected a vector field on the chart".into()));
    }
    let lie_beta = lie_derivative_tensor(x_field, ns.metric().field().as_ref(), x)?.max_abs();
    let v = lie_derivative_tensor(x_field, ns.xi().as_ref(), x)?;
    let xi = ns.xi().evaluate(x)?;
    let norm2: f64 = xi.components().iter().map(|c| c * c).sum();
    let k: f64 = v.components().iter().zip(xi.components()).map(|(a, b)| a * b).sum::<f64>() / norm2;
    let bracket = v.sub(&xi.scale(k))?.max_abs();
    let killing = killing_tensor(x_field, conn, x)?.max_abs();
    Ok(KillingResidual {
        lie_beta,
        bracket,
        k_bracket: k,
        killing,
    })
}

/// `(L_X Γ)^α_{βγ} = X^σ∂_σΓ^α_{βγ} − Γ^σ_{βγ}∂_σX^α + Γ^α_{σγ}∂_βX^σ
/// + Γ^α_{βσ}∂_γX^σ + ∂_β∂_γX^α`.
pub fn lie_derivative_of_connection(
    x_field: &dyn JetField,
    conn: &ConnectionCoefficients,
    x: &[f64],
) -> Result<TensorValue> {
    let n = conn.dim();
    let g = conn.gamma_jets(x, 1)?;
    let xj = x_field.jets(x, 2)?;
    let at = |a: usize, b: usize, c: usize| (a * n + b) * n + c;
    let dx = |a: usize, s: usize| xj[a].partial(s).value();
    let mut out = TensorValue::zeros(n, vec![Variance::Up, Variance::Down, Variance::Down]);
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                let mut v = xj[a].partial(b).partial(c).value();
                for s in 0..n {
                    v += xj[s].value() * g[at(a, b, c)].partial(s).value();
                    v -= g[at(s, b, c)].value() * dx(a, s);
                    v += g[at(a, s, c)].value() * dx(s, b);
                    v += g[at(a, b, s)].value() * dx(s, c);
                }
                out.set(&[a, b, c], v);
            }
        }
    }
    Ok(out)
}

/// `X^A = ω^A_B x^B + a^A`, `Xⁿ = k_B x^B + k xⁿ + k₀`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AffineVectorFieldAnsatz {
    pub omega: DMatrix<f64>,
    pub a: DVector<f64>,
    pub k_b: DVector<f64>,
    /// Coefficient of `xⁿ` in `Xⁿ`; `[X, ξ] = −k ξ`.
    pub k: f64,
    pub k0: f64,
}

impl AffineVectorFieldAnsatz {
    pub fn zero(n: usize) -> Self {
        Self {
            omega: DMatrix::zeros(n - 1, n - 1),
            a: DVector::zeros(n - 1),
            k_b: DVector::zeros(n - 1),
            k: 0.0,
            k0: 0.0,
        }
    }

    pub fn n(&self) -> usize {
        self.a.len() + 1
    }

    /// The matrix `M` and vector `c` with `X(x) = M x + c`.
    pub fn affine_parts(&self) -> (DMatrix<f64>, DVector<f64>) {
        let n = self.n();
        let mut m = DMatrix::zeros(n, n);
        m.view_mut((0, 0), (n - 1, n - 1)).copy_from(&self.omega);
        for b in 0..n - 1 {
            m[(n - 1, b)] = self.k_b[b];
        }
        m[(n - 1, n - 1)] = self.k;
        let mut c = DVector::zeros(n);
        c.rows_mut(0, n - 1).copy_from(&self.a);
        c[n - 1] = self.k0;
        (m, c)
    }

    /// Reads the ansatz back from `X(x) = M x + c`, rejecting matrices
    /// outside the ansatz class.
    pub fn from_affine(m: &DMatrix<f64>, c: &DVector<f64>, tol: f64) -> Result<Self> {
        let n = m.nrows();
        let omega = m.view((0, 0), (n - 1, n - 1)).into_owned();
        let asym = (&omega + omega.transpose()).amax();
        let column = m.view((0, n - 1), (n - 1, 1)).amax();
        if asym > tol || column > tol {
            return Err(Error::ClosureViolation(format!(
                "affine field outside the ansatz (ω symmetric part {asym:e}, X^A depends on xⁿ by {column:e})"
            )));
        }
        Ok(Self {
            omega,
            a: c.rows(0, n - 1).into_owned(),
            k_b: DVector::from_fn(n - 1, |b, _| m[(n - 1, b)]),
            k: m[(n - 1, n - 1)],
            k0: c[n - 1],
        })
    }

    /// The constant `k` of condition ii), `[X, ξ] = k ξ`.
    pub fn k_bracket(&self) -> f64 {
        -self.k
    }

    /// The vector field on the standard chart.
    pub fn to_field(&self) -> TensorFieldOnChart {
        let (m, c) = self.affine_parts();
        affine_field(&m, &c)
    }

    /// Coefficients `(M, c)` flattened row-major.
    pub fn to_vec(&self) -> Vec<f64> {
        let (m, c) = self.affine_parts();
        let mut v: Vec<f64> = m.transpose().iter().copied().collect();
        v.extend(c.iter());
        v
    }
}

fn affine_field(m: &DMatrix<f64>, c: &DVector<f64>) -> TensorFieldOnChart {
    let n = m.nrows();
    let comps = (0..n)
        .map(|i| {
            let mut e = Expr::constant(c[i]);
            for j in 0..n {
                if m[(i, j)] != 0.0 {
                    e = e + Expr::constant(m[(i, j)]) * Expr::var(j);
                }
            }
            e
        })
        .collect();
    TensorFieldOnChart::vector(comps).expect("n components")
}

/// `[X, Y]` of two affine fields: `M = M_Y M_X − M_X M_Y`, `c = M_Y c_X − M_X c_Y`.
pub fn lie_bracket(x: &AffineVectorFieldAnsatz, y: &AffineVectorFieldAnsatz) -> Result<AffineVectorFieldAnsatz> {
    if x.n() != y.n() {
        return Err(Error::ShapeMismatch("fields on charts of different dimension".into()));
    }
    let (mx, cx) = x.affine_parts();
    let (my, cy) = y.affine_parts();
    let m = &my * &mx - &mx * &my;
    let c = &my * &cx - &mx * &cy;
    AffineVectorFieldAnsatz::from_affine(&m, &c, ALGEBRA_TOL)
}

/// The standard chart `x¹ … xⁿ ∈ [−1, 1]`.
pub fn standard_chart(n: usize) -> Result<Chart> {
    Chart::new((1..=n).map(|i| format!("x{i}")).collect(), vec![[-1.0, 1.0]; n])
}

/// A basis of the automorphism algebra with its structure constants.
#[derive(Debug, Clone, Serialize)]
pub struct LieAlgebraBasis {
    pub n: usize,
    pub basis: Vec<AffineVectorFieldAnsatz>,
    /// `c^k_{ij}` stored as `structure_constants[k][i][j]`.
    pub structure_constants: Vec<Vec<Vec<f64>>>,
    /// Singular values of the constraint system, descending.
    pub singular_values: Vec<f64>,
    pub closure: ClosureReport,
}

impl LieAlgebraBasis {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }
}

/// Residuals of the algebraic checks on a basis.
#[derive(Debug, Clone, Serialize)]
pub struct ClosureReport {
    /// `c^k_{ij}` as `[k][i][j]`.
    pub structure_constants: Vec<Vec<Vec<f64>>>,
    /// Largest least-squares residual of a bracket expressed in the basis.
    pub closure_residual: f64,
    pub antisymmetry_residual: f64,
    pub jacobi_residual: f64,
    /// Dimension of the translation subalgebra `M = 0`.
    pub translation_dim: usize,
    /// Largest `M` part of `[X, t]` for basis `X` and unit translations `t`.
    pub translation_ideal_residual: f64,
    /// Largest deviation of `[ω, k_B]` from the `k_B`-field with `−ω k_B`.
    pub kb_vector_residual: f64,
}

/// Number of free parameters in the affine constraint system.
fn unknowns(n: usize) -> usize {
    n * n + n + 1
}

/// Residual vector of conditions i)–iii) for the affine field encoded in `p`
/// (`M` row-major, `c`, then `k`) at the given points.
fn constraint_residuals(
    p: &[f64],
    ns: &NullStructure,
    conn: &ConnectionCoefficients,
    points: &[Vec<f64>],
) -> Result<Vec<f64>> {
    let n = ns.dim();
    let m = DMatrix::from_row_slice(n, n, &p[..n * n]);
    let c = DVector::from_row_slice(&p[n * n..n * n + n]);
    let k = p[n * n + n];
    let field = affine_field(&m, &c);
    let mut out = Vec::new();
    for x in points {
        out.extend_from_slice(lie_derivative_tensor(&field, ns.metric().field().as_ref(), x)?.components());
        let v = lie_derivative_tensor(&field, ns.xi().as_ref(), x)?;
        let xi = ns.xi().evaluate(x)?;
        out.extend(v.components().iter().zip(xi.components()).map(|(a, b)| a - k * b));
        out.extend_from_slice(killing_tensor(&field, conn, x)?.components());
    }
    Ok(out)
}

/// Solves conditions i)–iii) on affine fields for the standard flat structure.
pub fn solve_standard_automorphisms(n: usize) -> Result<LieAlgebraBasis> {
    if n < 2 {
        return Err(Error::ShapeMismatch(format!("n = {n} < 2")));
    }
    let ns = NullStructure::standard(standard_chart(n)?)?;
    let conn = ConnectionCoefficients::koszul_part(&ns);
    let points: Vec<Vec<f64>> = halton(n, n + 2, CONSTRAINT_SEED)
        .into_iter()
        .map(|u| u.iter().map(|t| 2.0 * t - 1.0).collect())
        .collect();
    let q = unknowns(n);
    let columns: Vec<Vec<f64>> = (0..q)
        .map(|j| {
            let mut e = vec![0.0; q];
            e[j] = 1.0;
            constraint_residuals(&e, &ns, &conn, &points)
        })
        .collect::<Result<_>>()?;
    let rows = columns[0].len();
    let a = DMatrix::from_fn(rows, q, |i, j| columns[j][i]);
    let null = nullspace(&a, NULL_CUT, RANK_GAP)?;
    let (canon, _) = rref(&null.basis.transpose(), 1e-12);
    let mut basis = Vec::new();
    for r in 0..canon.nrows() {
        let row = canon.row(r);
        if row.amax() == 0.0 {
            continue;
        }
        let m = DMatrix::from_fn(n, n, |i, j| row[i * n + j]);
        let c = DVector::from_fn(n, |i, _| row[n * n + i]);
        basis.push(AffineVectorFieldAnsatz::from_affine(&m, &c, 1e-9)?);
    }
    let closure = closure_check(&basis)?;
    Ok(LieAlgebraBasis {
        n,
        structure_constants: closure.structure_constants.clone(),
        basis,
        singular_values: null.singular_values,
        closure,
    })
}

/// Expresses every bracket of basis elements in the basis and checks the
/// algebraic identities.
pub fn closure_check(basis: &[AffineVectorFieldAnsatz]) -> Result<ClosureReport> {
    let d = basis.len();
    if d == 0 {
        return Err(Error::ClosureViolation("empty basis".into()));
    }
    let n = basis[0].n();
    let q = n * n + n;
    let b = DMatrix::from_fn(q, d, |i, j| basis[j].to_vec()[i]);
    let mut c = vec![vec![vec![0.0; d]; d]; d];
    let mut closure_residual = 0.0f64;
    for i in 0..d {
        for j in 0..d {
            let br = lie_bracket(&basis[i], &basis[j])?;
            let (coef, res) = least_squares(&b, &DVector::from_vec(br.to_vec()))?;
            if res > ALGEBRA_TOL {
                return Err(Error::ClosureViolation(format!(
                    "bracket of basis elements {i} and {j} leaves the span (residual {res:e})"
                )));
            }
            closure_residual = closure_residual.max(res);
            for k in 0..d {
                c[k][i][j] = coef[k];
            }
        }
    }
    let mut antisymmetry = 0.0f64;
    for k in 0..d {
        for i in 0..d {
            for j in 0..d {
                antisymmetry = antisymmetry.max((c[k][i][j] + c[k][j][i]).abs());
            }
        }
    }
    let mut jacobi = 0.0f64;
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                for l in 0..d {
                    let s: f64 = (0..d)
                        .map(|m| c[m][i][j] * c[l][m][k] + c[m][j][k] * c[l][m][i] + c[m][k][i] * c[l][m][j])
                        .sum();
                    jacobi = jacobi.max(s.abs());
                }
            }
        }
    }
    let translation_dim = {
        let m_part = DMatrix::from_fn(n * n, d, |i, j| b[(i, j)]);
        d - m_part.rank(1e-9)
    };
    let mut ideal = 0.0f64;
    let mut kb_residual = 0.0f64;
    for x in basis {
        for t in 0..n {
            let mut unit = AffineVectorFieldAnsatz::zero(n);
            if t + 1 < n {
                unit.a[t] = 1.0;
            } else {
                unit.k0 = 1.0;
            }
            let (m, _) = lie_bracket(x, &unit)?.affine_parts();
            ideal = ideal.max(m.amax());
        }
        for t in 0..n - 1 {
            let mut kb = AffineVectorFieldAnsatz::zero(n);
            kb.k_b[t] = 1.0;
            let mut rot = AffineVectorFieldAnsatz::zero(n);
            rot.omega = x.omega.clone();
            let br = lie_bracket(&rot, &kb)?;
            let mut expected = AffineVectorFieldAnsatz::zero(n);
            expected.k_b = -(&x.omega * &kb.k_b);
            let diff = br
                .to_vec()
                .iter()
                .zip(expected.to_vec())
                .fold(0.0f64, |m, (p, q)| m.max((p - q).abs()));
            kb_residual = kb_residual.max(diff);
        }
    }
    Ok(ClosureReport {
        structure_constants: c,
        closure_residual,
        antisymmetry_residual: antisymmetry,
        jacobi_residual: jacobi,
        translation_dim,
        translation_ideal_residual: ideal,
        kb_vector_residual: kb_residual,
    })
}

/// `X = (0, …, 0, (x¹)²)`: satisfies conditions i) and ii) but not iii).
pub fn non_affine_example(n: usize) -> Result<TensorFieldOnChart> {
    let mut comps = vec![Expr::zero(); n];
    comps[n - 1] = Expr::var(0).powi(2);
    TensorFieldOnChart::vector(comps)
}
