//! End-to-end acceptance suite, one entry per criterion.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::automorphisms::{
    non_affine_example, radiation_killing_residual, solve_standard_automorphisms, standard_chart, ALGEBRA_TOL,
    KILLING_TOL,
};
use crate::calculus::{JetField, TensorFieldOnChart};
use crate::connection::{connection_difference, ConnectionCoefficients, EXACT_TOL};
use crate::error::Result;
use crate::groups::{is_member, DegenerateFormMatrix, GroupElement, Level, LorentzPairing};
use crate::hypersurface::NullStructure;
use crate::scenario::{
    build, builtin, random_polynomial_z, run, CheckKind, CheckSelection, Comparison, Report, RunOptions, Scenario,
    DEFAULT_SAMPLES,
};
use crate::shapes::{classify, pattern_matrix, FrameSymmetricTensor, StressEnergyPattern, FORBIDDEN_SLOTS};

pub const GROUP_SAMPLES: usize = 1000;
pub const GROUP_TOL: f64 = 1e-10;
pub const HOMOMORPHISM_TOL: f64 = 1e-12;
pub const DIFFERENCE_PAIRS: usize = 10;
pub const DIFFERENCE_POINTS: usize = 20;
pub const AUTOMORPHISM_SAMPLE_POINTS: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionOutcome {
    pub number: usize,
    pub title: String,
    pub passed: bool,
    pub details: Vec<String>,
}

impl CriterionOutcome {
    fn new(number: usize, title: &str) -> Self {
        Self {
            number,
            title: title.into(),
            passed: true,
            details: Vec::new(),
        }
    }

    fn record(&mut self, ok: bool, line: String) {
        self.passed &= ok;
        self.details.push(format!("{} {line}", if ok { "ok  " } else { "FAIL" }));
    }

    fn error(mut self, e: crate::Error) -> Self {
        self.record(false, format!("error: {e}"));
        self
    }

    pub fn summary_line(&self) -> String {
        format!(
            "criterion {}: {} {}",
            self.number,
            if self.passed { "PASS" } else { "FAIL" },
            self.title
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelftestReport {
    pub seed: u64,
    pub criteria: Vec<CriterionOutcome>,
}

impl SelftestReport {
    pub fn passed(&self) -> bool {
        self.criteria.iter().all(|c| c.passed)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "selftest (seed {})", self.seed);
        for c in &self.criteria {
            let _ = writeln!(out, "{}", c.summary_line());
            for d in &c.details {
                let _ = writeln!(out, "    {d}");
            }
        }
        let passed = self.criteria.iter().filter(|c| c.passed).count();
        let _ = writeln!(out, "result: {passed}/{} criteria pass", self.criteria.len());
        out
    }
}

/// Runs criteria 1 to 7.
pub fn run_selftest(seed: u64) -> SelftestReport {
    SelftestReport {
        seed,
        criteria: (1..=7).map(|k| criterion(k, seed)).collect(),
    }
}

/// Runs a single criterion.
pub fn criterion(number: usize, seed: u64) -> CriterionOutcome {
    match number {
        1 => group_identities(seed),
        2 => connection_invariants(seed),
        3 => difference_lemma(seed),
        4 => curvature_identities(seed),
        5 => obstruction_dichotomy(seed),
        6 => automorphism_dimension(seed),
        7 => shape_suite(seed),
        _ => panic!("no criterion {number}"),
    }
}

fn fmt_e(v: f64) -> String {
    format!("{v:.3e}")
}

fn group_identities(seed: u64) -> CriterionOutcome {
    let mut out = CriterionOutcome::new(1, "group identities");
    let inner = || -> Result<Vec<(bool, String)>> {
        let mut lines = Vec::new();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for n in [3, 4] {
            let pairing = LorentzPairing::new(n)?;
            let cov = DegenerateFormMatrix::covariant_canonical(n);
            let con = DegenerateFormMatrix::contravariant_canonical(n);
            for level in Level::ALL {
                let elems: Vec<GroupElement> =
                    (0..GROUP_SAMPLES).map(|_| GroupElement::random(n, level, &mut rng)).collect();
                let (mut lorentz, mut forms, mut hom) = (0.0f64, 0.0f64, 0.0f64);
                for (i, g) in elems.iter().enumerate() {
                    let big = g.embed_in_lorentz()?;
                    lorentz = lorentz.max(pairing.invariance_residual(big.entries()));
                    let small = g.embed_in_gl_n()?;
                    forms = forms.max(is_member(&small, &cov)?.residual);
                    if level == Level::GI {
                        forms = forms.max(is_member(&small, &con)?.residual);
                    }
                    let h = &elems[(i + 1) % elems.len()];
                    let gh = g.compose(h)?;
                    let d1 = gh.embed_in_gl_n()?.max_abs_diff(&small.mul(&h.embed_in_gl_n()?));
                    let d2 = gh.embed_in_lorentz()?.max_abs_diff(&big.mul(&h.embed_in_lorentz()?));
                    hom = hom.max(d1).max(d2);
                }
                let ok = lorentz <= GROUP_TOL && forms <= GROUP_TOL && hom <= HOMOMORPHISM_TOL;
                lines.push((
                    ok,
                    format!(
                        "n = {n} {level:<3}: ᵗMSM − S {}, form preservation {}, homomorphism {}",
                        fmt_e(lorentz),
                        fmt_e(forms),
                        fmt_e(hom)
                    ),
                ));
            }
        }
        Ok(lines)
    };
    match inner() {
        Ok(lines) => {
            for (ok, l) in lines {
                out.record(ok, l);
            }
            out
        }
        Err(e) => out.error(e),
    }
}

fn run_builtin(name: &str, seed: u64, checks: &[CheckKind]) -> Result<Report> {
    let s = builtin(name, seed)?;
    run(
        &s,
        &RunOptions {
            samples: Some(DEFAULT_SAMPLES),
            seed: Some(seed),
            tol_scale: 1.0,
            checks: CheckSelection::List(checks.to_vec()),
        },
    )
}

fn record_verdicts(out: &mut CriterionOutcome, label: &str, report: &Report) {
    for v in &report.verdicts {
        let op = match (v.comparison, v.passed) {
            (Comparison::AtMost, true) | (Comparison::Exceeds, false) => "<=",
            (Comparison::AtMost, false) | (Comparison::Exceeds, true) => ">",
        };
        out.record(
            v.passed,
            format!("{label}: {} {} {op} {:.0e}", v.check.name(), fmt_e(v.residual), v.tolerance),
        );
    }
}

fn random_z_seeds(seed: u64) -> [u64; 3] {
    [seed.wrapping_add(1), seed.wrapping_add(2), seed.wrapping_add(3)]
}

fn connection_invariants(seed: u64) -> CriterionOutcome {
    let mut out = CriterionOutcome::new(2, "radiation-connection invariants");
    let base = [CheckKind::NablaBeta, CheckKind::NablaXi];
    let mut jobs: Vec<(String, String, u64, Vec<CheckKind>)> = vec![
        ("minkowski-null-plane".into(), "minkowski-null-plane".into(), seed, base.to_vec()),
        (
            "pp-wave".into(),
            "pp-wave".into(),
            seed,
            vec![CheckKind::NablaBeta, CheckKind::NablaXi, CheckKind::XiParallel],
        ),
        (
            "minkowski-light-cone".into(),
            "minkowski-light-cone".into(),
            seed,
            vec![CheckKind::NablaBeta, CheckKind::NablaXi, CheckKind::DivXi],
        ),
    ];
    for z in random_z_seeds(seed) {
        jobs.push(("flat-random-z".into(), format!("flat-random-z (Z seed {z})"), z, base.to_vec()));
    }
    for (name, label, s, checks) in jobs {
        match run_builtin(&name, s, &checks) {
            Ok(r) => record_verdicts(&mut out, &label, &r),
            Err(e) => out.record(false, format!("{label}: error {e}")),
        }
    }
    out
}

fn difference_lemma(seed: u64) -> CriterionOutcome {
    let mut out = CriterionOutcome::new(3, "connection difference lemma");
    let inner = || -> Result<(f64, f64)> {
        let built = build(&builtin("curved-beta", seed)?)?;
        let ns: &NullStructure = &built.structure;
        let points = ns.chart().sample(DIFFERENCE_POINTS, seed);
        let (mut dz_err, mut off) = (0.0f64, 0.0f64);
        for pair in 0..DIFFERENCE_PAIRS as u64 {
            let s1 = seed.wrapping_mul(31).wrapping_add(2 * pair + 100);
            let z1 = z_field(ns.dim(), s1)?;
            let z2 = z_field(ns.dim(), s1 + 1)?;
            let c1 = ConnectionCoefficients::g_connection(ns, z1.clone())?;
            let c2 = ConnectionCoefficients::g_connection(ns, z2.clone())?;
            for p in &points {
                let d = connection_difference(&c1, &c2, p)?;
                let expected = z1.evaluate(p)?.sub(&z2.evaluate(p)?)?;
                dz_err = dz_err.max(d.delta_z.max_abs_diff(&expected));
                off = off.max(d.off_xi_residual);
            }
        }
        Ok((dz_err, off))
    };
    match inner() {
        Ok((dz, off)) => {
            out.record(
                dz <= EXACT_TOL,
                format!("{DIFFERENCE_PAIRS} pairs on curved-beta: |ΔZ − (Z₁ − Z₂)| {} <= 1e-10", fmt_e(dz)),
            );
            out.record(off <= EXACT_TOL, format!("off-ξ residual {} <= 1e-10", fmt_e(off)));
            out
        }
        Err(e) => out.error(e),
    }
}

fn z_field(n: usize, seed: u64) -> Result<std::sync::Arc<dyn JetField>> {
    let rows = random_polynomial_z(n, seed)
        .iter()
        .map(|r| r.iter().map(|c| c.to_expr(n)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    Ok(std::sync::Arc::new(TensorFieldOnChart::covariant2(rows)?))
}

fn curvature_identities(seed: u64) -> CriterionOutcome {
    let mut out = CriterionOutcome::new(4, "curvature decomposition, χ-curvature and Bianchi identities");
    let full = [CheckKind::Bianchi, CheckKind::CurvatureDecomposition, CheckKind::ChiCurvature];
    let mut jobs: Vec<(String, String, u64, Vec<CheckKind>)> = random_z_seeds(seed)
        .into_iter()
        .map(|z| ("flat-random-z".to_string(), format!("flat-random-z (Z seed {z})"), z, full.to_vec()))
        .collect();
    jobs.push(("curved-beta".into(), "curved-beta".into(), seed, full.to_vec()));
    for name in ["minkowski-null-plane", "pp-wave", "minkowski-light-cone", "gi-violation"] {
        jobs.push((name.into(), name.into(), seed, vec![CheckKind::Bianchi]));
    }
    for (name, label, s, checks) in jobs {
        match run_builtin(&name, s, &checks) {
            Ok(r) => record_verdicts(&mut out, &label, &r),
            Err(e) => out.record(false, format!("{label}: error {e}")),
        }
    }
    out
}

fn obstruction_dichotomy(seed: u64) -> CriterionOutcome {
    let mut out = CriterionOutcome::new(5, "obstruction dichotomy");
    let jobs: [(&str, &[CheckKind]); 3] = [
        ("pp-wave", &[CheckKind::Obstruction, CheckKind::InducedAgreement]),
        ("minkowski-null-plane", &[CheckKind::Obstruction]),
        ("minkowski-light-cone", &[CheckKind::Obstruction]),
    ];
    for (name, checks) in jobs {
        match run_builtin(name, seed, checks) {
            Ok(r) => record_verdicts(&mut out, name, &r),
            Err(e) => out.record(false, format!("{name}: error {e}")),
        }
    }
    out
}

fn automorphism_dimension(seed: u64) -> CriterionOutcome {
    let mut out = CriterionOutcome::new(6, "automorphism algebra");
    let inner = |out: &mut CriterionOutcome| -> Result<()> {
        for n in 2..=5 {
            let expected = (n * n + n + 2) / 2;
            let alg = solve_standard_automorphisms(n)?;
            let ns = NullStructure::standard(standard_chart(n)?)?;
            let conn = ConnectionCoefficients::koszul_part(&ns);
            let points = ns.chart().sample(AUTOMORPHISM_SAMPLE_POINTS, seed);
            let mut worst = 0.0f64;
            for x in &alg.basis {
                let field = x.to_field();
                for p in &points {
                    worst = worst.max(radiation_killing_residual(&field, &ns, &conn, p)?.max());
                }
            }
            out.record(alg.dim() == expected, format!("n = {n}: dimension {} (expected {expected})", alg.dim()));
            out.record(
                worst <= KILLING_TOL,
                format!("n = {n}: residual triple over basis {} <= 1e-7", fmt_e(worst)),
            );
            out.record(
                alg.closure.jacobi_residual <= ALGEBRA_TOL,
                format!("n = {n}: Jacobi {} <= 1e-10", fmt_e(alg.closure.jacobi_residual)),
            );
        }
        let n = 3;
        let ns = NullStructure::standard(standard_chart(n)?)?;
        let conn = ConnectionCoefficients::koszul_part(&ns);
        let x = non_affine_example(n)?;
        let mut ii = 0.0f64;
        let mut iii = f64::INFINITY;
        for p in ns.chart().sample(AUTOMORPHISM_SAMPLE_POINTS, seed) {
            let r = radiation_killing_residual(&x, &ns, &conn, &p)?;
            ii = ii.max(r.lie_beta).max(r.bracket);
            iii = iii.min(r.killing);
        }
        out.record(
            ii <= KILLING_TOL && iii > KILLING_TOL,
            format!("non-affine X = (0, 0, (x¹)²): i)+ii) {} <= 1e-7, iii) {} > 1e-7", fmt_e(ii), fmt_e(iii)),
        );
        Ok(())
    };
    if let Err(e) = inner(&mut out) {
        return out.error(e);
    }
    out
}

fn shape_suite(seed: u64) -> CriterionOutcome {
    let mut out = CriterionOutcome::new(7, "stress-energy shapes");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut grid = || rng.gen_range(-128i32..=128) as f64 / 64.0;
    let mut exact = true;
    let mut count = 0;
    for level in Level::ALL {
        for _ in 0..100 {
            let s = grid();
            let p = match level {
                Level::G => StressEnergyPattern {
                    level,
                    lambda: grid(),
                    pi: grid(),
                    sigma: grid(),
                    rho: [grid(), grid(), grid()],
                    scalar: s,
                },
                Level::GI => StressEnergyPattern::gi(grid(), grid(), grid(), s),
                Level::GR => StressEnergyPattern::gr(grid(), s),
            };
            let m = pattern_matrix(&p).expect("valid pattern");
            let c = classify(&m, level, Some(s));
            exact &= c.pattern == p && c.residual == 0.0;
            count += 1;
        }
    }
    out.record(exact, format!("pattern round trip exact on {count} patterns"));
    match run_builtin("pp-wave", seed, &[CheckKind::RicciShape]) {
        Ok(r) => record_verdicts(&mut out, "pp-wave", &r),
        Err(e) => out.record(false, format!("pp-wave: error {e}")),
    }
    let mut worst = f64::INFINITY;
    for (i, j) in FORBIDDEN_SLOTS {
        let mut m = nalgebra::Matrix4::zeros();
        m[(i, j)] = 1.0;
        m[(j, i)] = 1.0;
        let t = FrameSymmetricTensor(m);
        for level in Level::ALL {
            worst = worst.min(classify(&t, level, Some(0.0)).residual);
        }
    }
    out.record(worst >= 1.0, format!("forbidden-slot control: smallest residual {worst} >= 1"));
    out
}

/// The scenario list used by the suite, for reporting.
pub fn suite_scenarios(seed: u64) -> Vec<Scenario> {
    let mut v: Vec<Scenario> = ["minkowski-null-plane", "pp-wave", "minkowski-light-cone", "curved-beta", "gi-violation"]
        .iter()
        .filter_map(|n| builtin(n, seed).ok())
        .collect();
    for z in random_z_seeds(seed) {
        if let Ok(s) = builtin("flat-random-z", z) {
            v.push(s);
        }
    }
    v
}
