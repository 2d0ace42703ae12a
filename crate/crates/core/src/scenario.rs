//! Scenario files, built-in examples and the verification pipeline.
//!
//! A scenario describes either an ambient spacetime with an adapted frame and
//! an embedded null hypersurface, or a null structure given intrinsically,
//! together with the connection to build and the checks to run. Component
//! functions come from the named field library, so scenario files are plain
//! JSON.

use std::fmt::Write as _;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ambient::{
    decompose_blocks, frame_ricci, frame_scalar, gauss_residual, induced_radiation_connection, levi_civita,
    pulled_back_gr_connection, reduction_obstruction, ricci_coefficients, AdaptedFrameField, LorentzMetric,
};
use crate::automorphisms::{radiation_killing_residual, solve_standard_automorphisms, KILLING_TOL};
use crate::calculus::library::{FieldSpec, Monomial};
use crate::calculus::{Chart, JetField, TensorFieldOnChart};
use crate::connection::{
    bianchi_check, chi_curvature_check, chi_jets, covariant_derivative_vector, curvature_decomposition_check,
    div_xi, gi_admissibility_residual, nabla_beta_residual, nabla_xi_residual, ConnectionCoefficients,
    CURVATURE_TOL, EXACT_TOL, INVARIANT_TOL,
};
use crate::error::{Error, Result};
use crate::groups::Level;
use crate::hypersurface::{DegenerateMetric, Embedding, NullStructure};
use crate::shapes::{classify, FrameSymmetricTensor};
use crate::tensor::Variance;

/// Version of the JSON report layout.
pub const REPORT_SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_SAMPLES: usize = 100;
pub const DEFAULT_SEED: u64 = 42;
/// Lower bound the obstruction must exceed where no reduction exists.
pub const OBSTRUCTION_FLOOR: f64 = 1e-3;
/// Tolerance of the Ricci-shape fit.
pub const SHAPE_TOL: f64 = 1e-8;
/// Points used by the automorphism check.
pub const AUTOMORPHISM_POINTS: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartSpec {
    pub coordinates: Vec<String>,
    pub domain: Vec<[f64; 2]>,
}

impl ChartSpec {
    fn build(&self) -> Result<Chart> {
        Chart::new(self.coordinates.clone(), self.domain.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AmbientSpec {
    pub chart: ChartSpec,
    /// Components `g_{μν}`.
    pub metric: Vec<Vec<FieldSpec>>,
    /// Frame vectors `e_a`, each given by its `n + 1` components.
    pub frame: Vec<Vec<FieldSpec>>,
    pub hypersurface: ChartSpec,
    /// Components of the embedding in ambient coordinates.
    pub embedding: Vec<FieldSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntrinsicSpec {
    pub chart: ChartSpec,
    pub beta: Vec<Vec<FieldSpec>>,
    pub xi: Vec<FieldSpec>,
    pub f: Vec<FieldSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ConnectionRequest {
    /// The G_R connection induced by an ambient frame.
    Induced,
    /// `Γ = β_f B` with `Z = 0`.
    Koszul,
    G { z: Vec<Vec<FieldSpec>> },
    GR { chi: Vec<FieldSpec> },
    GI { z: Vec<Vec<FieldSpec>> },
}

impl ConnectionRequest {
    fn label(&self) -> &'static str {
        match self {
            ConnectionRequest::Induced => "induced G_R",
            ConnectionRequest::Koszul => "G with Z = 0",
            ConnectionRequest::G { .. } => "G",
            ConnectionRequest::GR { .. } => "G_R",
            ConnectionRequest::GI { .. } => "G_I",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObstructionExpectation {
    Vanishes,
    Positive,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expectations {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub obstruction: Option<ObstructionExpectation>,
    /// `ξ` is covariantly constant.
    #[serde(default)]
    pub xi_parallel: bool,
    /// Level whose stress-energy shape the frame Ricci tensor should fit.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ricci_shape: Option<Level>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    ChiAdmissibility,
    Torsion,
    NablaBeta,
    NablaXi,
    DivXi,
    XiParallel,
    Bianchi,
    CurvatureDecomposition,
    ChiCurvature,
    Obstruction,
    InducedAgreement,
    RicciShape,
    Automorphisms,
}

impl CheckKind {
    pub const ALL: [CheckKind; 13] = [
        CheckKind::ChiAdmissibility,
        CheckKind::Torsion,
        CheckKind::NablaBeta,
        CheckKind::NablaXi,
        CheckKind::DivXi,
        CheckKind::XiParallel,
        CheckKind::Bianchi,
        CheckKind::CurvatureDecomposition,
        CheckKind::ChiCurvature,
        CheckKind::Obstruction,
        CheckKind::InducedAgreement,
        CheckKind::RicciShape,
        CheckKind::Automorphisms,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CheckKind::ChiAdmissibility => "chi_admissibility",
            CheckKind::Torsion => "torsion",
            CheckKind::NablaBeta => "nabla_beta",
            CheckKind::NablaXi => "nabla_xi",
            CheckKind::DivXi => "div_xi",
            CheckKind::XiParallel => "xi_parallel",
            CheckKind::Bianchi => "bianchi",
            CheckKind::CurvatureDecomposition => "curvature_decomposition",
            CheckKind::ChiCurvature => "chi_curvature",
            CheckKind::Obstruction => "obstruction",
            CheckKind::InducedAgreement => "induced_agreement",
            CheckKind::RicciShape => "ricci_shape",
            CheckKind::Automorphisms => "automorphisms",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.name() == name)
            .ok_or_else(|| Error::Scenario(format!("unknown check {name:?}")))
    }

    fn describe(self) -> &'static str {
        match self {
            CheckKind::ChiAdmissibility => "max |χ| for a G_I connection",
            CheckKind::Torsion => "max |Γ^α_{βγ} − Γ^α_{γβ}|",
            CheckKind::NablaBeta => "max |∇β|",
            CheckKind::NablaXi => "max |∇ξ − χ⊗ξ|",
            CheckKind::DivXi => "max |div ξ − χ(ξ)|",
            CheckKind::XiParallel => "max(|∇ξ|, |div ξ|)",
            CheckKind::Bianchi => "first and second Bianchi identities",
            CheckKind::CurvatureDecomposition => "curvature split into Koszul and Z parts",
            CheckKind::ChiCurvature => "dχ against ξ^α R^λ_{αβγ} f_λ",
            CheckKind::Obstruction => "max |φⁿ_A| along the hypersurface",
            CheckKind::InducedAgreement => "induced vs pulled-back connection and Gauss formula",
            CheckKind::RicciShape => "frame Ricci tensor against the admissible shape",
            CheckKind::Automorphisms => "flat-model automorphisms preserve the structure",
        }
    }
}

/// A complete scenario description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub description: String,
    /// The geometric fact the scenario illustrates.
    #[serde(default)]
    pub anchor: String,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ambient: Option<AmbientSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intrinsic: Option<IntrinsicSpec>,
    pub connection: ConnectionRequest,
    #[serde(default)]
    pub checks: Vec<CheckKind>,
    #[serde(default)]
    pub expectations: Expectations,
    /// The structure is locally the flat model, so its automorphism algebra
    /// is the standard one.
    #[serde(default)]
    pub standard_model: bool,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_samples() -> usize {
    DEFAULT_SAMPLES
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        let s: Scenario = serde_json::from_str(text).map_err(|e| Error::Scenario(format!("parse error: {e}")))?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Scenario(m));
        if self.n < 2 {
            return bad(format!("n = {} < 2", self.n));
        }
        if self.samples == 0 {
            return bad("sample count must be at least 1".into());
        }
        match (&self.ambient, &self.intrinsic) {
            (Some(_), Some(_)) | (None, None) => {
                return bad("exactly one of `ambient` and `intrinsic` must be given".into())
            }
            (Some(a), None) => {
                if self.connection != ConnectionRequest::Induced {
                    return bad("ambient scenarios use the induced connection".into());
                }
                let big = self.n + 1;
                if a.chart.coordinates.len() != big
                    || a.metric.len() != big
                    || a.metric.iter().any(|r| r.len() != big)
                    || a.frame.len() != big
                    || a.frame.iter().any(|r| r.len() != big)
                    || a.embedding.len() != big
                    || a.hypersurface.coordinates.len() != self.n
                {
                    return bad(format!("ambient data do not match n = {}", self.n));
                }
            }
            (None, Some(i)) => {
                if self.connection == ConnectionRequest::Induced {
                    return bad("the induced connection needs an ambient spacetime".into());
                }
                let n = self.n;
                if i.chart.coordinates.len() != n
                    || i.beta.len() != n
                    || i.beta.iter().any(|r| r.len() != n)
                    || i.xi.len() != n
                    || i.f.len() != n
                {
                    return bad(format!("intrinsic data do not match n = {n}"));
                }
                match &self.connection {
                    ConnectionRequest::G { z } | ConnectionRequest::GI { z }
                        if z.len() != n || z.iter().any(|r| r.len() != n) =>
                    {
                        return bad(format!("Z must be {n}×{n}"))
                    }
                    ConnectionRequest::GR { chi } if chi.len() != n => return bad(format!("χ must have {n} components")),
                    _ => {}
                }
            }
        }
        for c in &self.checks {
            if !self.applicable(*c) {
                return bad(format!("check {} does not apply to scenario {}", c.name(), self.name));
            }
        }
        Ok(())
    }

    /// Whether `check` makes sense for this scenario.
    pub fn applicable(&self, check: CheckKind) -> bool {
        match check {
            CheckKind::ChiAdmissibility => matches!(self.connection, ConnectionRequest::GI { .. }),
            CheckKind::XiParallel => self.expectations.xi_parallel,
            CheckKind::Obstruction => self.ambient.is_some() && self.expectations.obstruction.is_some(),
            CheckKind::InducedAgreement => self.ambient.is_some(),
            CheckKind::RicciShape => self.ambient.is_some() && self.n == 3 && self.expectations.ricci_shape.is_some(),
            CheckKind::Automorphisms => self.standard_model,
            _ => true,
        }
    }

    pub fn applicable_checks(&self) -> Vec<CheckKind> {
        CheckKind::ALL.into_iter().filter(|c| self.applicable(*c)).collect()
    }
}

/// Which checks a run performs.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum CheckSelection {
    /// The scenario's own list.
    #[default]
    Default,
    /// Every applicable check.
    All,
    List(Vec<CheckKind>),
}

impl CheckSelection {
    /// Parses `all` or a comma-separated list of check names.
    pub fn parse(text: &str) -> Result<Self> {
        if text == "all" {
            return Ok(CheckSelection::All);
        }
        let list = text
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(CheckKind::parse)
            .collect::<Result<Vec<_>>>()?;
        if list.is_empty() {
            return Err(Error::Scenario("empty check list".into()));
        }
        Ok(CheckSelection::List(list))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub tol_scale: f64,
    pub checks: CheckSelection,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            samples: None,
            seed: None,
            tol_scale: 1.0,
            checks: CheckSelection::Default,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    /// Passes when `residual ≤ tolerance`.
    AtMost,
    /// Passes when `residual > tolerance`.
    Exceeds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub check: CheckKind,
    pub residual: f64,
    pub tolerance: f64,
    pub comparison: Comparison,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub worst_point: Option<Vec<f64>>,
    #[serde(default)]
    pub note: String,
}

impl Verdict {
    fn new(check: CheckKind, residual: f64, tolerance: f64, comparison: Comparison) -> Self {
        let (residual, finite) = if residual.is_finite() { (residual, true) } else { (f64::MAX, false) };
        let passed = finite
            && match comparison {
                Comparison::AtMost => residual <= tolerance,
                Comparison::Exceeds => residual > tolerance,
            };
        Self {
            check,
            residual,
            tolerance,
            comparison,
            passed,
            worst_point: None,
            note: if finite { String::new() } else { "non-finite residual".into() },
        }
    }

    fn at(mut self, point: Option<Vec<f64>>) -> Self {
        self.worst_point = point;
        self
    }

    fn note(mut self, text: impl Into<String>) -> Self {
        let text = text.into();
        if self.note.is_empty() {
            self.note = text;
        } else {
            self.note = format!("{}; {text}", self.note);
        }
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub scenario: Scenario,
    pub seed: u64,
    pub samples: usize,
    pub tol_scale: f64,
    pub points: Vec<Vec<f64>>,
    pub verdicts: Vec<Verdict>,
    pub passed: bool,
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Scenario(format!("report parse error: {e}")))
    }

    pub fn verdict(&self, check: CheckKind) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.check == check)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let s = &self.scenario;
        let _ = writeln!(
            out,
            "scenario {} (n = {}, connection {}, seed {}, {} samples, tolerance scale {})",
            s.name,
            s.n,
            s.connection.label(),
            self.seed,
            self.samples,
            self.tol_scale
        );
        for v in &self.verdicts {
            let op = match v.comparison {
                Comparison::AtMost => "<=",
                Comparison::Exceeds => ">",
            };
            let _ = write!(
                out,
                "  {:<24} {}  residual {:.3e} {op} {:.1e}",
                v.check.name(),
                if v.passed { "PASS" } else { "FAIL" },
                v.residual,
                v.tolerance
            );
            if let Some(p) = &v.worst_point {
                let coords: Vec<String> = p.iter().map(|c| format!("{c:.4}")).collect();
                let _ = write!(out, "  at ({})", coords.join(", "));
            }
            if !v.note.is_empty() {
                let _ = write!(out, "  [{}]", v.note);
            }
            out.push('\n');
        }
        let _ = writeln!(out, "result: {}", if self.passed { "PASS" } else { "FAIL" });
        out
    }
}

fn matrix_field(rows: &[Vec<FieldSpec>], dim: usize) -> Result<TensorFieldOnChart> {
    let rows = rows
        .iter()
        .map(|r| r.iter().map(|c| c.to_expr(dim)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    TensorFieldOnChart::covariant2(rows)
}

fn exprs(specs: &[FieldSpec], dim: usize) -> Result<Vec<crate::calculus::Expr>> {
    specs.iter().map(|c| c.to_expr(dim)).collect()
}

struct AmbientParts {
    metric: LorentzMetric,
    frame: AdaptedFrameField,
    embedding: Arc<Embedding>,
    chart: Chart,
}

/// The objects a scenario resolves to.
pub struct BuiltScenario {
    pub structure: NullStructure,
    pub connection: ConnectionCoefficients,
    z: Arc<dyn JetField>,
    ambient: Option<AmbientParts>,
    /// Set when a requested G_I connection failed its admissibility test.
    admissibility_failure: Option<(f64, Vec<f64>)>,
}

impl BuiltScenario {
    pub fn chart(&self) -> &Chart {
        self.structure.chart()
    }
}

/// Builds the structure and connection of a scenario.
pub fn build(s: &Scenario) -> Result<BuiltScenario> {
    s.validate()?;
    let n = s.n;
    if let Some(a) = &s.ambient {
        let chart = a.chart.build()?;
        let metric = LorentzMetric::new(chart, Arc::new(matrix_field(&a.metric, n + 1)?))?;
        let frame = AdaptedFrameField::new(a.frame.iter().map(|v| exprs(v, n + 1)).collect::<Result<_>>()?)?;
        let hyper = a.hypersurface.build()?;
        let embedding = Arc::new(Embedding::new(n, exprs(&a.embedding, n)?)?);
        let induced = induced_radiation_connection(&metric, &frame, embedding.clone(), hyper.clone())?;
        let z = induced
            .connection
            .z_field()
            .cloned()
            .ok_or_else(|| Error::Scenario("induced connection carries no Z".into()))?;
        return Ok(BuiltScenario {
            structure: induced.structure,
            connection: induced.connection,
            z,
            ambient: Some(AmbientParts {
                metric,
                frame,
                embedding,
                chart: hyper,
            }),
            admissibility_failure: None,
        });
    }
    let i = s.intrinsic.as_ref().expect("validated");
    let chart = i.chart.build()?;
    let beta = DegenerateMetric::new(chart, Arc::new(matrix_field(&i.beta, n)?))?;
    let xi = Arc::new(TensorFieldOnChart::vector(exprs(&i.xi, n)?)?);
    let f = Arc::new(TensorFieldOnChart::one_form(exprs(&i.f, n)?)?);
    let structure = NullStructure::new(beta, xi, f)?;
    let zero: Arc<dyn JetField> = Arc::new(TensorFieldOnChart::zero(n, vec![Variance::Down, Variance::Down]));
    let (connection, z, failure) = match &s.connection {
        ConnectionRequest::Koszul => (ConnectionCoefficients::koszul_part(&structure), zero, None),
        ConnectionRequest::G { z } => {
            let z: Arc<dyn JetField> = Arc::new(matrix_field(z, n)?);
            (ConnectionCoefficients::g_connection(&structure, z.clone())?, z, None)
        }
        ConnectionRequest::GR { chi } => {
            let chi = Arc::new(TensorFieldOnChart::one_form(exprs(chi, n)?)?);
            let c = ConnectionCoefficients::gr_connection(&structure, chi)?;
            let z = c.z_field().cloned().expect("G_R connections store Z");
            (c, z, None)
        }
        ConnectionRequest::GI { z } => {
            let z: Arc<dyn JetField> = Arc::new(matrix_field(z, n)?);
            match ConnectionCoefficients::gi_connection(&structure, z.clone()) {
                Ok(c) => (c, z, None),
                Err(Error::GiAdmissibility { residual, point }) => (
                    ConnectionCoefficients::g_connection(&structure, z.clone())?,
                    z,
                    Some((residual, point)),
                ),
                Err(e) => return Err(e),
            }
        }
        ConnectionRequest::Induced => unreachable!("validated"),
    };
    Ok(BuiltScenario {
        structure,
        connection,
        z,
        ambient: None,
        admissibility_failure: failure,
    })
}

/// Largest value of `f` over `points`, with the point where it occurs.
fn sweep(points: &[Vec<f64>], mut f: impl FnMut(&[f64]) -> Result<f64>) -> Result<(f64, Option<Vec<f64>>)> {
    let mut worst = (f64::NEG_INFINITY, None);
    for p in points {
        let v = f(p)?;
        if !(v <= worst.0) {
            worst = (v, Some(p.clone()));
        }
    }
    Ok(worst)
}

/// Runs one scenario.
pub fn run(s: &Scenario, opts: &RunOptions) -> Result<Report> {
    let samples = opts.samples.unwrap_or(s.samples);
    let seed = opts.seed.unwrap_or(s.seed);
    if samples == 0 {
        return Err(Error::Scenario("sample count must be at least 1".into()));
    }
    if !(opts.tol_scale > 0.0 && opts.tol_scale.is_finite()) {
        return Err(Error::Scenario(format!("tolerance scale {} must be positive", opts.tol_scale)));
    }
    let checks = match &opts.checks {
        CheckSelection::Default if s.checks.is_empty() => s.applicable_checks(),
        CheckSelection::Default => s.checks.clone(),
        CheckSelection::All => s.applicable_checks(),
        CheckSelection::List(list) => {
            for c in list {
                if !s.applicable(*c) {
                    return Err(Error::Scenario(format!("check {} does not apply to scenario {}", c.name(), s.name)));
                }
            }
            list.clone()
        }
    };
    let mut checks = checks;
    checks.sort();
    checks.dedup();

    let built = build(s)?;
    let points = built.chart().sample(samples, seed);
    let scale = opts.tol_scale;
    let mut verdicts = Vec::new();
    for check in checks {
        verdicts.push(run_check(check, s, &built, &points, scale)?);
    }
    let passed = verdicts.iter().all(|v| v.passed);
    Ok(Report {
        schema_version: REPORT_SCHEMA_VERSION,
        scenario: s.clone(),
        seed,
        samples,
        tol_scale: scale,
        points,
        verdicts,
        passed,
    })
}

fn run_check(check: CheckKind, s: &Scenario, b: &BuiltScenario, points: &[Vec<f64>], scale: f64) -> Result<Verdict> {
    let conn = &b.connection;
    let ns = &b.structure;
    let le = |r: (f64, Option<Vec<f64>>), tol: f64| Verdict::new(check, r.0, tol * scale, Comparison::AtMost).at(r.1);
    Ok(match check {
        CheckKind::ChiAdmissibility => {
            let swept = sweep(points, |x| gi_admissibility_residual(conn, ns, x))?;
            match &b.admissibility_failure {
                Some((residual, point)) if *residual > swept.0 => {
                    le((*residual, Some(point.clone())), INVARIANT_TOL).note("χ residual: Z is not G_I-admissible")
                }
                Some(_) => le(swept, INVARIANT_TOL).note("χ residual: Z is not G_I-admissible"),
                None => le(swept, INVARIANT_TOL).note("χ residual"),
            }
        }
        CheckKind::Torsion => le(sweep(points, |x| conn.torsion_residual(x))?, EXACT_TOL),
        CheckKind::NablaBeta => le(sweep(points, |x| nabla_beta_residual(conn, ns, x))?, INVARIANT_TOL),
        CheckKind::NablaXi => le(sweep(points, |x| nabla_xi_residual(conn, ns, x))?, INVARIANT_TOL),
        CheckKind::DivXi => le(
            sweep(points, |x| {
                let chi = chi_jets(conn, ns, x, 0)?;
                let xi = ns.xi().evaluate(x)?;
                let chi_xi: f64 = (0..ns.dim()).map(|a| chi[a].value() * xi.get(&[a])).sum();
                Ok((div_xi(conn, ns, x)? - chi_xi).abs())
            })?,
            CURVATURE_TOL,
        ),
        CheckKind::XiParallel => le(
            sweep(points, |x| {
                let nabla = covariant_derivative_vector(conn, ns.xi().as_ref(), x)?.max_abs();
                Ok(nabla.max(div_xi(conn, ns, x)?.abs()))
            })?,
            INVARIANT_TOL,
        ),
        CheckKind::Bianchi => le(
            sweep(points, |x| {
                let (first, second) = bianchi_check(conn, x)?;
                Ok(first.max(second))
            })?,
            CURVATURE_TOL,
        ),
        CheckKind::CurvatureDecomposition => le(
            sweep(points, |x| curvature_decomposition_check(ns, b.z.clone(), x))?,
            CURVATURE_TOL,
        ),
        CheckKind::ChiCurvature => le(sweep(points, |x| chi_curvature_check(conn, ns, x))?, CURVATURE_TOL),
        CheckKind::Obstruction => {
            let a = b.ambient.as_ref().expect("applicable");
            let lc = levi_civita(&a.metric);
            let values = points
                .iter()
                .map(|p| {
                    let gamma = ricci_coefficients(&lc, &a.frame, &a.embedding.point(p))?;
                    Ok(reduction_obstruction(&decompose_blocks(&gamma)?))
                })
                .collect::<Result<Vec<f64>>>()?;
            match s.expectations.obstruction.expect("applicable") {
                ObstructionExpectation::Vanishes => {
                    let (i, v) = argmax(&values, |a, b| a > b);
                    le((v, Some(points[i].clone())), INVARIANT_TOL).note("reduction exists")
                }
                ObstructionExpectation::Positive => {
                    let (i, v) = argmax(&values, |a, b| a < b);
                    Verdict::new(check, v, OBSTRUCTION_FLOOR, Comparison::Exceeds)
                        .at(Some(points[i].clone()))
                        .note("smallest obstruction; no reduction expected")
                }
            }
        }
        CheckKind::InducedAgreement => {
            let a = b.ambient.as_ref().expect("applicable");
            let direct = pulled_back_gr_connection(&a.metric, &a.frame, a.embedding.clone(), a.chart.clone())?;
            let agreement = sweep(points, |x| Ok(conn.gamma_at(x)?.max_abs_diff(&direct.gamma_at(x)?)))?;
            let gauss = sweep(points, |x| gauss_residual(&a.metric, &a.embedding, &direct, x))?;
            let note = format!(
                "coefficient mismatch {:.3e}, Gauss residual {:.3e}",
                agreement.0.max(0.0),
                gauss.0.max(0.0)
            );
            let worst = if agreement.0 >= gauss.0 { agreement } else { gauss };
            le(worst, INVARIANT_TOL).note(note)
        }
        CheckKind::RicciShape => {
            let a = b.ambient.as_ref().expect("applicable");
            let level = s.expectations.ricci_shape.expect("applicable");
            let mut slots = 0;
            let swept = sweep(points, |x| {
                let r = frame_ricci(&a.metric, &a.frame, &a.embedding.point(x))?;
                let t = FrameSymmetricTensor::from_slice(&r)?;
                let c = classify(&t, level, Some(frame_scalar(&r)));
                slots = slots.max(c.nonzero_slots);
                Ok(c.residual)
            })?;
            le(swept, SHAPE_TOL).note(format!("{level} shape, at most {slots} nonzero slots"))
        }
        CheckKind::Automorphisms => {
            let alg = solve_standard_automorphisms(s.n)?;
            let expected = (s.n * s.n + s.n + 2) / 2;
            let subset = &points[..points.len().min(AUTOMORPHISM_POINTS)];
            let mut worst = (0.0f64, None);
            for x in &alg.basis {
                let field = x.to_field();
                let r = sweep(subset, |p| Ok(radiation_killing_residual(&field, ns, conn, p)?.max()))?;
                if r.0 > worst.0 || worst.1.is_none() {
                    worst = r;
                }
            }
            let v = le(worst, KILLING_TOL).note(format!("dimension {} (expected {expected})", alg.dim()));
            if alg.dim() != expected {
                Verdict { passed: false, ..v }
            } else {
                v
            }
        }
    })
}

fn argmax(values: &[f64], better: impl Fn(f64, f64) -> bool) -> (usize, f64) {
    let mut best = (0, values[0]);
    for (i, v) in values.iter().enumerate().skip(1) {
        if better(*v, best.1) {
            best = (i, *v);
        }
    }
    best
}

// ---------------------------------------------------------------------------
// built-in scenarios

fn k(v: f64) -> FieldSpec {
    FieldSpec::constant(v)
}

fn coord(i: usize) -> FieldSpec {
    FieldSpec::coord(i)
}

fn mono(coeff: f64, powers: &[u32]) -> FieldSpec {
    FieldSpec::Polynomial {
        terms: vec![Monomial {
            coeff,
            powers: powers.to_vec(),
        }],
    }
}

fn diag(values: &[FieldSpec]) -> Vec<Vec<FieldSpec>> {
    let n = values.len();
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { values[i].clone() } else { k(0.0) }).collect())
        .collect()
}

fn unit(n: usize, i: usize) -> Vec<FieldSpec> {
    (0..n).map(|j| k(if i == j { 1.0 } else { 0.0 })).collect()
}

/// `β = diag(1, …, 1, 0)`, `ξ = ∂_n`, `f = dxⁿ` on `[−1, 1]ⁿ`.
pub fn standard_intrinsic(n: usize) -> IntrinsicSpec {
    let mut d: Vec<FieldSpec> = vec![k(1.0); n];
    d[n - 1] = k(0.0);
    IntrinsicSpec {
        chart: ChartSpec {
            coordinates: (1..=n).map(|i| format!("x{i}")).collect(),
            domain: vec![[-1.0, 1.0]; n],
        },
        beta: diag(&d),
        xi: unit(n, n - 1),
        f: unit(n, n - 1),
    }
}

/// A symmetric `Z` whose entries are random polynomials of degree ≤ 2.
pub fn random_polynomial_z(n: usize, seed: u64) -> Vec<Vec<FieldSpec>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut z = vec![vec![k(0.0); n]; n];
    for i in 0..n {
        for j in i..n {
            let mut terms = vec![Monomial {
                coeff: rng.gen_range(-1.0..1.0),
                powers: vec![0; n],
            }];
            for a in 0..n {
                let mut p = vec![0; n];
                p[a] = 1;
                terms.push(Monomial {
                    coeff: rng.gen_range(-1.0..1.0),
                    powers: p,
                });
                for b in a..n {
                    let mut p = vec![0; n];
                    p[a] += 1;
                    p[b] += 1;
                    terms.push(Monomial {
                        coeff: 0.5 * rng.gen_range(-1.0..1.0),
                        powers: p,
                    });
                }
            }
            let entry = FieldSpec::Polynomial { terms };
            z[i][j] = entry.clone();
            z[j][i] = entry;
        }
    }
    z
}

const INVARIANT_CHECKS: [CheckKind; 4] = [CheckKind::Torsion, CheckKind::NablaBeta, CheckKind::NablaXi, CheckKind::DivXi];

fn with(extra: &[CheckKind]) -> Vec<CheckKind> {
    let mut v: Vec<CheckKind> = INVARIANT_CHECKS.into_iter().chain(extra.iter().copied()).collect();
    v.sort();
    v
}

struct Builtin {
    name: &'static str,
    summary: &'static str,
    make: fn(u64) -> Scenario,
}

const BUILTINS: [Builtin; 6] = [
    Builtin {
        name: "minkowski-null-plane",
        summary: "null hyperplane t = z of Minkowski space; flat model of a radiation structure",
        make: null_plane,
    },
    Builtin {
        name: "pp-wave",
        summary: "plane-fronted wave with parallel rays; the null generator is covariantly constant",
        make: pp_wave,
    },
    Builtin {
        name: "minkowski-light-cone",
        summary: "future light cone of a point in Minkowski space; expanding generators",
        make: light_cone,
    },
    Builtin {
        name: "flat-random-z",
        summary: "flat degenerate metric with a seeded random polynomial Z",
        make: flat_random_z,
    },
    Builtin {
        name: "curved-beta",
        summary: "non-constant degenerate metric with a polynomial Z",
        make: curved_beta,
    },
    Builtin {
        name: "gi-violation",
        summary: "G_I request whose Z is not admissible; negative control",
        make: gi_violation,
    },
];

/// Names and one-line summaries of the built-in scenarios.
pub fn builtin_names() -> Vec<(&'static str, &'static str)> {
    BUILTINS.iter().map(|b| (b.name, b.summary)).collect()
}

/// A built-in scenario; `seed` feeds both the sampling and any random data.
pub fn builtin(name: &str, seed: u64) -> Result<Scenario> {
    BUILTINS
        .iter()
        .find(|b| b.name == name)
        .map(|b| (b.make)(seed))
        .ok_or_else(|| Error::UnknownScenario(name.to_string()))
}

/// Human-readable description of a built-in scenario.
pub fn describe(name: &str) -> Result<String> {
    let s = builtin(name, DEFAULT_SEED)?;
    let mut out = String::new();
    let _ = writeln!(out, "{}: {}", s.name, s.description);
    let _ = writeln!(out, "  illustrates: {}", s.anchor);
    let kind = if s.ambient.is_some() { "ambient spacetime" } else { "intrinsic structure" };
    let _ = writeln!(out, "  n = {}, {kind}, connection {}", s.n, s.connection.label());
    let _ = writeln!(out, "  default checks:");
    for c in &s.checks {
        let _ = writeln!(out, "    {:<24} {}", c.name(), c.describe());
    }
    Ok(out)
}

fn null_plane(seed: u64) -> Scenario {
    // (t, x, y, z), hypersurface t = z with coordinates (x, y, v)
    let ambient = AmbientSpec {
        chart: ChartSpec {
            coordinates: vec!["t".into(), "x".into(), "y".into(), "z".into()],
            domain: vec![[-1.0, 1.0]; 4],
        },
        metric: diag(&[k(-1.0), k(1.0), k(1.0), k(1.0)]),
        frame: vec![
            vec![k(0.5), k(0.0), k(0.0), k(-0.5)],
            unit(4, 1),
            unit(4, 2),
            vec![k(1.0), k(0.0), k(0.0), k(1.0)],
        ],
        hypersurface: ChartSpec {
            coordinates: vec!["x".into(), "y".into(), "v".into()],
            domain: vec![[-1.0, 1.0]; 3],
        },
        embedding: vec![coord(2), coord(0), coord(1), coord(2)],
    };
    Scenario {
        name: "minkowski-null-plane".into(),
        description: "null hyperplane t = z of Minkowski space".into(),
        anchor: "flat model: ξ = ∂_v is covariantly constant and the structure group reduces to G_I".into(),
        n: 3,
        ambient: Some(ambient),
        intrinsic: None,
        connection: ConnectionRequest::Induced,
        checks: with(&[
            CheckKind::XiParallel,
            CheckKind::Bianchi,
            CheckKind::CurvatureDecomposition,
            CheckKind::ChiCurvature,
            CheckKind::Obstruction,
            CheckKind::InducedAgreement,
            CheckKind::RicciShape,
            CheckKind::Automorphisms,
        ]),
        expectations: Expectations {
            obstruction: Some(ObstructionExpectation::Vanishes),
            xi_parallel: true,
            ricci_shape: Some(Level::GI),
        },
        standard_model: true,
        samples: DEFAULT_SAMPLES,
        seed,
    }
}

/// `H = (1 + ½u)(x² − y²) + 0.6u²xy + ¼(x² + y²)`.
pub fn pp_wave_h() -> FieldSpec {
    FieldSpec::PpWaveProfile {
        u: 0,
        x: 1,
        y: 2,
        a: vec![1.0, 0.5],
        b: vec![0.0, 0.0, 0.3],
        c: vec![0.25],
    }
}

fn pp_wave(seed: u64) -> Scenario {
    // (u, x, y, v), g = H du² + 2 du dv + dx² + dy², hypersurface u = 0
    let mut metric = diag(&[pp_wave_h(), k(1.0), k(1.0), k(0.0)]);
    metric[0][3] = k(1.0);
    metric[3][0] = k(1.0);
    let ambient = AmbientSpec {
        chart: ChartSpec {
            coordinates: vec!["u".into(), "x".into(), "y".into(), "v".into()],
            domain: vec![[-1.0, 1.0]; 4],
        },
        metric,
        frame: vec![
            vec![
                k(-1.0),
                k(0.0),
                k(0.0),
                FieldSpec::Scaled {
                    factor: 0.5,
                    field: Box::new(pp_wave_h()),
                },
            ],
            unit(4, 1),
            unit(4, 2),
            unit(4, 3),
        ],
        hypersurface: ChartSpec {
            coordinates: vec!["x".into(), "y".into(), "v".into()],
            domain: vec![[-1.0, 1.0]; 3],
        },
        embedding: vec![k(0.0), coord(0), coord(1), coord(2)],
    };
    Scenario {
        name: "pp-wave".into(),
        description: "plane-fronted gravitational wave with parallel rays, wave front u = 0".into(),
        anchor: "covariantly constant null vector field ξ (G_I case); null-dust Ricci tensor".into(),
        n: 3,
        ambient: Some(ambient),
        intrinsic: None,
        connection: ConnectionRequest::Induced,
        checks: with(&[
            CheckKind::XiParallel,
            CheckKind::Bianchi,
            CheckKind::CurvatureDecomposition,
            CheckKind::ChiCurvature,
            CheckKind::Obstruction,
            CheckKind::InducedAgreement,
            CheckKind::RicciShape,
            CheckKind::Automorphisms,
        ]),
        expectations: Expectations {
            obstruction: Some(ObstructionExpectation::Vanishes),
            xi_parallel: true,
            ricci_shape: Some(Level::GI),
        },
        standard_model: true,
        samples: DEFAULT_SAMPLES,
        seed,
    }
}

fn light_cone(seed: u64) -> Scenario {
    // (u, r, θ, φ), g = −du² − 2 du dr + r² dΩ², hypersurface u = 0
    let r2 = mono(1.0, &[0, 2]);
    let rsin = FieldSpec::Product {
        factors: vec![coord(1), FieldSpec::Sin { arg: Box::new(coord(2)) }],
    };
    let mut metric = diag(&[
        k(-1.0),
        k(0.0),
        r2,
        FieldSpec::Powi {
            arg: Box::new(rsin.clone()),
            exponent: 2,
        },
    ]);
    metric[0][1] = k(-1.0);
    metric[1][0] = k(-1.0);
    let ambient = AmbientSpec {
        chart: ChartSpec {
            coordinates: vec!["u".into(), "r".into(), "theta".into(), "phi".into()],
            domain: vec![[-0.5, 0.5], [0.5, 3.0], [0.5, 2.6], [0.0, 6.0]],
        },
        metric,
        frame: vec![
            vec![k(1.0), k(-0.5), k(0.0), k(0.0)],
            vec![
                k(0.0),
                k(0.0),
                FieldSpec::Powi {
                    arg: Box::new(coord(1)),
                    exponent: -1,
                },
                k(0.0),
            ],
            vec![
                k(0.0),
                k(0.0),
                k(0.0),
                FieldSpec::Powi {
                    arg: Box::new(rsin),
                    exponent: -1,
                },
            ],
            unit(4, 1),
        ],
        hypersurface: ChartSpec {
            coordinates: vec!["theta".into(), "phi".into(), "r".into()],
            domain: vec![[0.5, 2.6], [0.0, 6.0], [0.5, 3.0]],
        },
        embedding: vec![k(0.0), coord(2), coord(0), coord(1)],
    };
    Scenario {
        name: "minkowski-light-cone".into(),
        description: "future light cone u = 0 of Minkowski space in outgoing null coordinates".into(),
        anchor: "no reduction of the Levi-Civita connection to G exists; expansion of the generators".into(),
        n: 3,
        ambient: Some(ambient),
        intrinsic: None,
        connection: ConnectionRequest::Induced,
        checks: with(&[CheckKind::Bianchi, CheckKind::ChiCurvature, CheckKind::Obstruction]),
        expectations: Expectations {
            obstruction: Some(ObstructionExpectation::Positive),
            xi_parallel: false,
            ricci_shape: None,
        },
        standard_model: false,
        samples: DEFAULT_SAMPLES,
        seed,
    }
}

fn flat_random_z(seed: u64) -> Scenario {
    Scenario {
        name: "flat-random-z".into(),
        description: format!("flat degenerate metric, Z random of degree 2 drawn with seed {seed}"),
        anchor: "∇β = 0 and ∇ξ = χ⊗ξ hold for every admissible Z".into(),
        n: 3,
        ambient: None,
        intrinsic: Some(standard_intrinsic(3)),
        connection: ConnectionRequest::G {
            z: random_polynomial_z(3, seed),
        },
        checks: with(&[CheckKind::Bianchi, CheckKind::CurvatureDecomposition, CheckKind::ChiCurvature]),
        expectations: Expectations::default(),
        standard_model: false,
        samples: DEFAULT_SAMPLES,
        seed,
    }
}

fn curved_beta(seed: u64) -> Scenario {
    let n = 3;
    let mut beta = vec![vec![k(0.0); n]; n];
    beta[0][0] = FieldSpec::Sum {
        terms: vec![k(1.0), mono(0.3, &[2])],
    };
    beta[1][1] = FieldSpec::Sum {
        terms: vec![k(1.0), mono(0.5, &[0, 2])],
    };
    beta[0][1] = mono(0.2, &[1, 1]);
    beta[1][0] = mono(0.2, &[1, 1]);
    let mut z = vec![vec![k(0.0); n]; n];
    z[0][0] = coord(1);
    z[1][1] = mono(1.0, &[2]);
    z[2][2] = mono(0.5, &[0, 1]);
    z[0][1] = k(0.3);
    z[1][0] = k(0.3);
    z[0][2] = mono(1.0, &[1, 0, 1]);
    z[2][0] = mono(1.0, &[1, 0, 1]);
    z[1][2] = FieldSpec::Sin { arg: Box::new(coord(0)) };
    z[2][1] = FieldSpec::Sin { arg: Box::new(coord(0)) };
    Scenario {
        name: "curved-beta".into(),
        description: "β = (1 + 0.3x₁²)dx₁² + 0.4x₁x₂ dx₁dx₂ + (1 + 0.5x₂²)dx₂², f = dx₃ + 0.2x₁dx₁".into(),
        anchor: "curvature identities with a non-flat Koszul part".into(),
        n,
        ambient: None,
        intrinsic: Some(IntrinsicSpec {
            chart: ChartSpec {
                coordinates: vec!["x1".into(), "x2".into(), "x3".into()],
                domain: vec![[-1.0, 1.0]; 3],
            },
            beta,
            xi: unit(n, 2),
            f: vec![mono(0.2, &[1]), k(0.0), k(1.0)],
        }),
        connection: ConnectionRequest::G { z },
        checks: with(&[CheckKind::Bianchi, CheckKind::CurvatureDecomposition, CheckKind::ChiCurvature]),
        expectations: Expectations::default(),
        standard_model: false,
        samples: DEFAULT_SAMPLES,
        seed,
    }
}

fn gi_violation(seed: u64) -> Scenario {
    let n = 3;
    let mut z = vec![vec![k(0.0); n]; n];
    z[0][2] = coord(0);
    z[2][0] = coord(0);
    z[1][1] = k(0.5);
    Scenario {
        name: "gi-violation".into(),
        description: "flat degenerate metric with Z_{13} = x₁ requested at level G_I".into(),
        anchor: "G_I requires ξ^λ Z_{αλ} = ξ^λ ∂_α f_λ, so that χ = 0".into(),
        n,
        ambient: None,
        intrinsic: Some(standard_intrinsic(n)),
        connection: ConnectionRequest::GI { z },
        checks: vec![CheckKind::ChiAdmissibility, CheckKind::Torsion, CheckKind::NablaBeta, CheckKind::NablaXi],
        expectations: Expectations::default(),
        standard_model: false,
        samples: DEFAULT_SAMPLES,
        seed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick(samples: usize) -> RunOptions {
        RunOptions {
            samples: Some(samples),
            ..RunOptions::default()
        }
    }

    #[test]
    fn builtins_validate_and_round_trip() {
        for (name, _) in builtin_names() {
            let s = builtin(name, 7).unwrap();
            s.validate().unwrap();
            assert_eq!(Scenario::from_json(&s.to_json()).unwrap(), s);
        }
        assert!(matches!(builtin("unknown", 0), Err(Error::UnknownScenario(_))));
    }

    #[test]
    fn null_plane_passes_everything() {
        let s = builtin("minkowski-null-plane", 1).unwrap();
        let r = run(&s, &RunOptions { checks: CheckSelection::All, ..quick(5) }).unwrap();
        assert!(r.passed, "{}", r.to_text());
        assert_eq!(r.verdicts.len(), s.applicable_checks().len());
    }

    #[test]
    fn gi_violation_names_chi_residual() {
        let r = run(&builtin("gi-violation", 1).unwrap(), &quick(5)).unwrap();
        assert!(!r.passed);
        let v = r.verdict(CheckKind::ChiAdmissibility).unwrap();
        assert!(!v.passed && v.residual > 0.1);
        assert!(v.note.contains("χ residual"));
        assert!(r.verdict(CheckKind::NablaBeta).unwrap().passed);
    }

    #[test]
    fn light_cone_fails_expansion_checks() {
        let r = run(&builtin("minkowski-light-cone", 1).unwrap(), &quick(4)).unwrap();
        assert!(r.verdict(CheckKind::Obstruction).unwrap().passed);
        assert!(r.verdict(CheckKind::Bianchi).unwrap().passed);
        assert!(!r.verdict(CheckKind::NablaXi).unwrap().passed);
        assert!(!r.verdict(CheckKind::DivXi).unwrap().passed);
    }

    #[test]
    fn report_round_trip_and_determinism() {
        let s = builtin("flat-random-z", 3).unwrap();
        let a = run(&s, &quick(4)).unwrap();
        let b = run(&s, &quick(4)).unwrap();
        assert_eq!(a, b);
        assert_eq!(Report::from_json(&a.to_json()).unwrap(), a);
        assert_eq!(a.to_text(), b.to_text());
    }

    #[test]
    fn scenario_invariants() {
        let mut s = builtin("flat-random-z", 3).unwrap();
        s.samples = 0;
        assert!(s.validate().is_err());
        let mut s = builtin("pp-wave", 3).unwrap();
        s.intrinsic = Some(standard_intrinsic(3));
        assert!(s.validate().is_err());
        let mut s = builtin("flat-random-z", 3).unwrap();
        s.checks.push(CheckKind::Obstruction);
        assert!(s.validate().is_err());
        assert!(Scenario::from_json("{\"name\": 3}").is_err());
    }

    #[test]
    fn check_selection_parsing() {
        assert_eq!(CheckSelection::parse("all").unwrap(), CheckSelection::All);
        assert_eq!(
            CheckSelection::parse("nabla_beta, bianchi").unwrap(),
            CheckSelection::List(vec![CheckKind::NablaBeta, CheckKind::Bianchi])
        );
        assert!(CheckSelection::parse("nope").is_err());
    }

    #[test]
    fn describe_mentions_parallel_xi() {
        assert!(describe("pp-wave").unwrap().contains("covariantly constant"));
        assert!(describe("unknown").is_err());
    }
}
