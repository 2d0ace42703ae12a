//! Matrix realizations of the structure groups.
//!
//! `G = O₁(n−1)` is the subgroup of `O(n,1)` fixing the null direction
//! `ᵗ(0 0 1)`. An element is the triple `(a, R, U)`: a dilation `a ≠ 0`, an
//! orthogonal `R ∈ O(n−1)` and a null translation `U` (a row of length
//! `n−1`). `G_R` drops the translations and `G_I` fixes `a = 1`.
//!
//! Two realizations are provided: `(n+1)×(n+1)` Lorentz matrices acting on
//! ambient frames `(e₀, ē, e_n)`, and `n×n` matrices `[[R, 0], [aU, a]]`
//! acting on frames `(ē, e_n)` of the hypersurface. Composition is defined so
//! that both realizations are homomorphisms:
//! `(a₁,R₁,U₁)(a₂,R₂,U₂) = (a₁a₂, R₁R₂, U₁R₂/a₂ + U₂)`.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::FrameMatrix;

/// Tolerance for `ᵗRR = 1` when validating a group element.
pub const ORTHOGONALITY_TOL: f64 = 1e-12;
/// Tolerance of the membership tests.
pub const MEMBERSHIP_TOL: f64 = 1e-10;

/// Which reduction of the frame bundle an object belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Level {
    #[serde(rename = "G")]
    G,
    #[serde(rename = "G_R")]
    GR,
    #[serde(rename = "G_I")]
    GI,
}

impl Level {
    pub const ALL: [Level; 3] = [Level::G, Level::GR, Level::GI];
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Level::G => "G",
            Level::GR => "G_R",
            Level::GI => "G_I",
        })
    }
}

/// The null pairing `S` on `ℝ^{n+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct LorentzPairing {
    n: usize,
    s: DMatrix<f64>,
}

impl LorentzPairing {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::ShapeMismatch(format!("n = {n} < 2")));
        }
        let mut s = DMatrix::zeros(n + 1, n + 1);
        s[(0, n)] = -1.0;
        s[(n, 0)] = -1.0;
        for i in 1..n {
            s[(i, i)] = 1.0;
        }
        Ok(Self { n, s })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.s
    }

    /// `max |ᵗM S M − S|`.
    pub fn invariance_residual(&self, m: &DMatrix<f64>) -> f64 {
        (m.transpose() * &self.s * m - &self.s).amax()
    }
}

/// An element `(a, R, U)` of `G`, `G_R` or `G_I`.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupElement {
    a: f64,
    r: DMatrix<f64>,
    u: DVector<f64>,
    level: Level,
}

impl GroupElement {
    pub fn new(a: f64, r: DMatrix<f64>, u: DVector<f64>, level: Level) -> Result<Self> {
        let g = Self { a, r, u, level };
        g.validate()?;
        Ok(g)
    }

    pub fn identity(n: usize, level: Level) -> Self {
        Self {
            a: 1.0,
            r: DMatrix::identity(n - 1, n - 1),
            u: DVector::zeros(n - 1),
            level,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.r.nrows();
        if m == 0 || self.r.ncols() != m || self.u.len() != m {
            return Err(Error::InvalidGroupElement(format!(
                "R is {}x{} and U has length {}",
                self.r.nrows(),
                self.r.ncols(),
                self.u.len()
            )));
        }
        if !self.a.is_finite() || self.a == 0.0 {
            return Err(Error::InvalidGroupElement(format!("dilation a = {}", self.a)));
        }
        let orth = (self.r.transpose() * &self.r - DMatrix::identity(m, m)).amax();
        if !(orth <= ORTHOGONALITY_TOL) {
            return Err(Error::InvalidGroupElement(format!(
                "R is not orthogonal (residual {orth:e})"
            )));
        }
        match self.level {
            Level::GR if self.u.amax() != 0.0 => Err(Error::InvalidGroupElement(
                "G_R element with a nonzero translation".into(),
            )),
            Level::GI if self.a != 1.0 => Err(Error::InvalidGroupElement(format!(
                "G_I element with dilation a = {}",
                self.a
            ))),
            _ => Ok(()),
        }
    }

    /// A random element: `a ∈ ±[½, 2]` (positive for `G_I`, fixed to 1),
    /// `R` orthogonalized from a random matrix with either determinant sign,
    /// `U ∈ [−1, 1]^{n−1}` (zero for `G_R`).
    pub fn random<Rg: Rng + ?Sized>(n: usize, level: Level, rng: &mut Rg) -> Self {
        let m = n - 1;
        let raw = DMatrix::from_fn(m, m, |_, _| rng.gen_range(-1.0..1.0));
        let qr = raw.qr();
        let mut r = qr.q();
        let diag = qr.r().diagonal();
        for (j, d) in diag.iter().enumerate() {
            if *d < 0.0 {
                r.column_mut(j).neg_mut();
            }
        }
        if rng.gen_bool(0.5) {
            r.column_mut(0).neg_mut();
        }
        let a = match level {
            Level::GI => 1.0,
            _ => {
                let mag = rng.gen_range(0.5..2.0);
                if rng.gen_bool(0.5) {
                    mag
                } else {
                    -mag
                }
            }
        };
        let u = match level {
            Level::GR => DVector::zeros(m),
            _ => DVector::from_fn(m, |_, _| rng.gen_range(-1.0..1.0)),
        };
        Self { a, r, u, level }
    }

    pub fn n(&self) -> usize {
        self.r.nrows() + 1
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn r(&self) -> &DMatrix<f64> {
        &self.r
    }

    pub fn u(&self) -> &DVector<f64> {
        &self.u
    }

    pub fn level(&self) -> Level {
        self.level
    }

    fn u_squared(&self) -> f64 {
        self.u.norm_squared()
    }

    /// `[[a⁻¹, 0, 0], [R ᵗU, R, 0], [½aU², aU, a]]`.
    pub fn embed_in_lorentz(&self) -> Result<FrameMatrix> {
        self.validate()?;
        let n = self.n();
        let mut m = DMatrix::zeros(n + 1, n + 1);
        m[(0, 0)] = 1.0 / self.a;
        let rut = &self.r * &self.u;
        for i in 0..n - 1 {
            m[(1 + i, 0)] = rut[i];
            for j in 0..n - 1 {
                m[(1 + i, 1 + j)] = self.r[(i, j)];
            }
            m[(n, 1 + i)] = self.a * self.u[i];
        }
        m[(n, 0)] = 0.5 * self.a * self.u_squared();
        m[(n, n)] = self.a;
        FrameMatrix::new(m)
    }

    /// `[[R, 0], [aU, a]]`.
    pub fn embed_in_gl_n(&self) -> Result<FrameMatrix> {
        self.validate()?;
        let n = self.n();
        let mut m = DMatrix::zeros(n, n);
        m.view_mut((0, 0), (n - 1, n - 1)).copy_from(&self.r);
        for j in 0..n - 1 {
            m[(n - 1, j)] = self.a * self.u[j];
        }
        m[(n - 1, n - 1)] = self.a;
        FrameMatrix::new(m)
    }

    /// Reads `(a, R, U)` back from `[[R, 0], [aU, a]]` and checks the result
    /// is an element of `level`.
    pub fn from_gl_n(m: &DMatrix<f64>, level: Level) -> Result<Self> {
        let n = m.nrows();
        if n < 2 || m.ncols() != n {
            return Err(Error::ShapeMismatch("expected a square matrix of size >= 2".into()));
        }
        let a = m[(n - 1, n - 1)];
        if a.abs() < 1e-12 {
            return Err(Error::InvalidGroupElement("dilation slot is zero".into()));
        }
        let upper_right = m.view((0, n - 1), (n - 1, 1)).amax();
        if upper_right > MEMBERSHIP_TOL {
            return Err(Error::InvalidGroupElement(format!(
                "upper-right block is not zero ({upper_right:e})"
            )));
        }
        let r = m.view((0, 0), (n - 1, n - 1)).into_owned();
        let u = DVector::from_fn(n - 1, |j, _| m[(n - 1, j)] / a);
        // orthogonality to the membership tolerance, then snap to exact level data
        let orth = (r.transpose() * &r - DMatrix::identity(n - 1, n - 1)).amax();
        if orth > MEMBERSHIP_TOL {
            return Err(Error::InvalidGroupElement(format!(
                "rotation block not orthogonal ({orth:e})"
            )));
        }
        if level == Level::GR && u.amax() > MEMBERSHIP_TOL {
            return Err(Error::InvalidGroupElement("translation in a G_R matrix".into()));
        }
        if level == Level::GI && (a - 1.0).abs() > MEMBERSHIP_TOL {
            return Err(Error::InvalidGroupElement(format!("G_I matrix with a = {a}")));
        }
        Ok(Self {
            a: if level == Level::GI { 1.0 } else { a },
            r,
            u: if level == Level::GR { DVector::zeros(n - 1) } else { u },
            level,
        })
    }

    pub fn compose(&self, other: &GroupElement) -> Result<GroupElement> {
        if self.level != other.level {
            return Err(Error::LevelMismatch(self.level, other.level));
        }
        if self.n() != other.n() {
            return Err(Error::ShapeMismatch(format!("n = {} vs {}", self.n(), other.n())));
        }
        let u = (other.r.transpose() * &self.u) / other.a + &other.u;
        Ok(GroupElement {
            a: self.a * other.a,
            r: &self.r * &other.r,
            u,
            level: self.level,
        })
    }

    pub fn inverse(&self) -> GroupElement {
        // U_inv = −a U ᵗR as a row, i.e. −a R U as a column
        GroupElement {
            a: 1.0 / self.a,
            r: self.r.transpose(),
            u: -(&self.r * &self.u) * self.a,
            level: self.level,
        }
    }

    /// Maps the frame whose columns are `(e₀, ē, e_n)` to
    /// `(a⁻¹e₀ + ēRᵗU + ½aU²e_n, ēR + aUe_n, ae_n)`.
    pub fn act_on_frame(&self, frame: &FrameMatrix) -> Result<FrameMatrix> {
        let m = self.embed_in_lorentz()?;
        if frame.entries().ncols() != m.size() {
            return Err(Error::ShapeMismatch(format!(
                "frame with {} vectors for n = {}",
                frame.entries().ncols(),
                self.n()
            )));
        }
        Ok(frame.mul(&m))
    }

    /// Maps the coframe whose rows are `(θ⁰, θ̄, θⁿ)` to
    /// `(aθ⁰, −aᵗUθ⁰ + ᵗRθ̄, a⁻¹θⁿ − UᵗRθ̄ + ½aU²θ⁰)`.
    pub fn act_on_coframe(&self, coframe: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.validate()?;
        let n = self.n();
        if coframe.nrows() != n + 1 {
            return Err(Error::ShapeMismatch(format!(
                "coframe with {} rows for n = {n}",
                coframe.nrows()
            )));
        }
        let theta0 = coframe.row(0).into_owned();
        let theta_bar = coframe.rows(1, n - 1).into_owned();
        let theta_n = coframe.row(n).into_owned();
        let rt = self.r.transpose();
        let mut out = DMatrix::zeros(n + 1, coframe.ncols());
        out.set_row(0, &(&theta0 * self.a));
        let bar = &rt * &theta_bar - (&self.u * &theta0) * self.a;
        out.rows_mut(1, n - 1).copy_from(&bar);
        let urt = self.u.transpose() * &rt;
        let last = &theta_n / self.a - &urt * &theta_bar + &theta0 * (0.5 * self.a * self.u_squared());
        out.set_row(n, &last);
        Ok(out)
    }

    /// Action on a hypersurface coframe `(θ̄, θⁿ)` where `θ⁰ = 0`:
    /// `(ᵗRθ̄, a⁻¹θⁿ − UᵗRθ̄)`.
    pub fn act_on_hypersurface_coframe(&self, coframe: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.validate()?;
        let n = self.n();
        if coframe.nrows() != n {
            return Err(Error::ShapeMismatch(format!(
                "hypersurface coframe with {} rows for n = {n}",
                coframe.nrows()
            )));
        }
        let theta_bar = coframe.rows(0, n - 1).into_owned();
        let theta_n = coframe.row(n - 1).into_owned();
        let rt = self.r.transpose();
        let mut out = DMatrix::zeros(n, coframe.ncols());
        out.rows_mut(0, n - 1).copy_from(&(&rt * &theta_bar));
        let urt = self.u.transpose() * &rt;
        out.set_row(n - 1, &(&theta_n / self.a - &urt * &theta_bar));
        Ok(out)
    }
}

/// `max |ᵗE g E − S|` for a frame `E` (columns) and metric `g`: the residual
/// of the adapted-frame relations.
pub fn frame_relations_residual(frame: &DMatrix<f64>, metric: &DMatrix<f64>) -> Result<f64> {
    let n = frame.ncols() - 1;
    let s = LorentzPairing::new(n)?;
    Ok((frame.transpose() * metric * frame - s.matrix()).amax())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FormKind {
    /// A bilinear form on vectors; preserved when `ᵗM S M = S`.
    Covariant,
    /// A form on covectors; preserved when `M S ᵗM = S`.
    Contravariant,
}

/// A degenerate symmetric form of size `q` and rank `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct DegenerateFormMatrix {
    q: usize,
    p: usize,
    kind: FormKind,
    matrix: DMatrix<f64>,
}

impl DegenerateFormMatrix {
    pub fn new(kind: FormKind, matrix: DMatrix<f64>) -> Result<Self> {
        let q = matrix.nrows();
        if q == 0 || matrix.ncols() != q {
            return Err(Error::ShapeMismatch("form matrix must be square".into()));
        }
        if (&matrix - matrix.transpose()).amax() > 0.0 {
            return Err(Error::ShapeMismatch("form matrix must be symmetric".into()));
        }
        let eig = matrix.clone().symmetric_eigen();
        let scale = eig.eigenvalues.amax().max(1.0);
        let p = eig.eigenvalues.iter().filter(|e| e.abs() > 1e-12 * scale).count();
        Ok(Self { q, p, kind, matrix })
    }

    /// `S_{n−1}(n) = diag(1_{n−1}, 0)`, the metric `β` in an adapted frame.
    pub fn covariant_canonical(n: usize) -> Self {
        let mut m = DMatrix::identity(n, n);
        m[(n - 1, n - 1)] = 0.0;
        Self {
            q: n,
            p: n - 1,
            kind: FormKind::Covariant,
            matrix: m,
        }
    }

    /// `S¹(n) = diag(0_{n−1}, 1)`, the tensor `ξ ⊗ ξ` in an adapted frame.
    pub fn contravariant_canonical(n: usize) -> Self {
        let mut m = DMatrix::zeros(n, n);
        m[(n - 1, n - 1)] = 1.0;
        Self {
            q: n,
            p: 1,
            kind: FormKind::Contravariant,
            matrix: m,
        }
    }

    pub fn size(&self) -> usize {
        self.q
    }

    pub fn rank(&self) -> usize {
        self.p
    }

    pub fn kind(&self) -> FormKind {
        self.kind
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Membership {
    pub member: bool,
    pub residual: f64,
}

/// Whether `m` preserves `form` in the sense of its kind.
pub fn is_member(m: &FrameMatrix, form: &DegenerateFormMatrix) -> Result<Membership> {
    if m.size() != form.size() {
        return Err(Error::ShapeMismatch(format!(
            "matrix of size {} against a form of size {}",
            m.size(),
            form.size()
        )));
    }
    let e = m.entries();
    let image = match form.kind {
        FormKind::Covariant => e.transpose() * &form.matrix * e,
        FormKind::Contravariant => e * &form.matrix * e.transpose(),
    };
    let residual = (image - &form.matrix).amax();
    Ok(Membership {
        member: residual <= MEMBERSHIP_TOL,
        residual,
    })
}

/// Factors `V · D · U*` of a Lorentz matrix in the dense subset.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseFactorization {
    /// The column `V̄` of the first factor.
    pub v_bar: DVector<f64>,
    /// `(a, R, U)` of the remaining two factors, an element of `G`.
    pub element: GroupElement,
    pub v_matrix: DMatrix<f64>,
    pub d_matrix: DMatrix<f64>,
    pub u_matrix: DMatrix<f64>,
    /// `max |V D U* − M|`.
    pub residual: f64,
}

fn v_factor(v_bar: &DVector<f64>) -> DMatrix<f64> {
    let m = v_bar.len();
    let mut v = DMatrix::identity(m + 2, m + 2);
    for i in 0..m {
        v[(0, 1 + i)] = v_bar[i];
        v[(1 + i, m + 1)] = v_bar[i];
    }
    v[(0, m + 1)] = 0.5 * v_bar.norm_squared();
    v
}

/// Splits a Lorentz matrix as `V · D · U*`, with `V` in the `V̄`-translations,
/// `D = diag(a⁻¹, R, a)` and `U*` in the null translations.
///
/// The bottom row of such a product is `(½aU², aU, a)`, so matrices with a
/// vanishing `(n, n)` entry are outside the dense subset.
pub fn factor_dense_subset(m: &FrameMatrix) -> Result<DenseFactorization> {
    let size = m.size();
    if size < 3 {
        return Err(Error::ShapeMismatch("Lorentz matrix must be at least 3x3".into()));
    }
    let n = size - 1;
    let pairing = LorentzPairing::new(n)?;
    let e = m.entries();
    let lorentz = pairing.invariance_residual(e);
    if lorentz > MEMBERSHIP_TOL {
        return Err(Error::NotFactorizable(format!(
            "matrix is not in O(n,1) (residual {lorentz:e})"
        )));
    }
    let a = e[(n, n)];
    if a.abs() < 1e-12 {
        return Err(Error::NotFactorizable(format!(
            "entry ({n},{n}) is {a:e}; the dilation slot of the factorization must be nonzero"
        )));
    }
    let v_bar = DVector::from_fn(n - 1, |i, _| e[(1 + i, n)] / a);
    let v = v_factor(&v_bar);
    let v_inv = v_factor(&(-&v_bar));
    let du = &v_inv * e;
    let r = du.view((1, 1), (n - 1, n - 1)).into_owned();
    let u = DVector::from_fn(n - 1, |j, _| du[(n, 1 + j)] / a);
    let element = GroupElement {
        a,
        r: r.clone(),
        u: u.clone(),
        level: Level::G,
    };
    let orth = (r.transpose() * &r - DMatrix::identity(n - 1, n - 1)).amax();
    if orth > MEMBERSHIP_TOL {
        return Err(Error::NotFactorizable(format!(
            "rotation factor not orthogonal ({orth:e})"
        )));
    }
    let mut d = DMatrix::identity(size, size);
    d[(0, 0)] = 1.0 / a;
    d.view_mut((1, 1), (n - 1, n - 1)).copy_from(&r);
    d[(n, n)] = a;
    let mut ustar = DMatrix::identity(size, size);
    for j in 0..n - 1 {
        ustar[(1 + j, 0)] = u[j];
        ustar[(n, 1 + j)] = u[j];
    }
    ustar[(n, 0)] = 0.5 * u.norm_squared();
    let residual = (&v * &d * &ustar - e).amax();
    if residual > MEMBERSHIP_TOL {
        return Err(Error::NotFactorizable(format!(
            "reconstruction residual {residual:e}"
        )));
    }
    Ok(DenseFactorization {
        v_bar,
        element,
        v_matrix: v,
        d_matrix: d,
        u_matrix: ustar,
        residual,
    })
}
