use std::sync::Arc;

use approx::assert_abs_diff_eq;
use nullframe::calculus::{JetField, TensorFieldOnChart};
use nullframe::connection::{
    bianchi_check, chi_curvature_check, chi_oneform, connection_difference, curvature_decomposition_check,
    div_xi, nabla_beta_residual, nabla_xi_residual, ConnectionCoefficients,
};
use nullframe::hypersurface::NullStructure;
use nullframe::scenario::{build, builtin, random_polynomial_z};
use proptest::prelude::*;

fn z_field(n: usize, seed: u64) -> Arc<dyn JetField> {
    let rows = random_polynomial_z(n, seed)
        .iter()
        .map(|r| r.iter().map(|c| c.to_expr(n).unwrap()).collect())
        .collect();
    Arc::new(TensorFieldOnChart::covariant2(rows).unwrap())
}

fn curved() -> NullStructure {
    build(&builtin("curved-beta", 0).unwrap()).unwrap().structure
}

fn point() -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-0.9f64..0.9, 3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn g_connection_invariants(seed in any::<u64>(), x in point()) {
        let ns = curved();
        let conn = ConnectionCoefficients::g_connection(&ns, z_field(3, seed)).unwrap();
        prop_assert!(conn.torsion_residual(&x).unwrap() <= 1e-12);
        prop_assert!(nabla_beta_residual(&conn, &ns, &x).unwrap() <= 1e-8);
        prop_assert!(nabla_xi_residual(&conn, &ns, &x).unwrap() <= 1e-8);
        let chi = chi_oneform(&conn, &ns, &x).unwrap();
        let xi = ns.xi().evaluate(&x).unwrap();
        let chi_xi: f64 = (0..3).map(|a| chi.get(&[a]) * xi.get(&[a])).sum();
        prop_assert!((div_xi(&conn, &ns, &x).unwrap() - chi_xi).abs() <= 1e-8);
    }

    #[test]
    fn curvature_identities(seed in any::<u64>(), x in point()) {
        let ns = curved();
        let z = z_field(3, seed);
        let conn = ConnectionCoefficients::g_connection(&ns, z.clone()).unwrap();
        let (first, second) = bianchi_check(&conn, &x).unwrap();
        prop_assert!(first <= 1e-9 && second <= 1e-8, "{first} {second}");
        prop_assert!(curvature_decomposition_check(&ns, z, &x).unwrap() <= 1e-8);
        prop_assert!(chi_curvature_check(&conn, &ns, &x).unwrap() <= 1e-8);
    }

    #[test]
    fn difference_recovers_delta_z(s1 in any::<u64>(), s2 in any::<u64>(), x in point()) {
        let ns = curved();
        let (z1, z2) = (z_field(3, s1), z_field(3, s2));
        let c1 = ConnectionCoefficients::g_connection(&ns, z1.clone()).unwrap();
        let c2 = ConnectionCoefficients::g_connection(&ns, z2.clone()).unwrap();
        let d = connection_difference(&c1, &c2, &x).unwrap();
        let expected = z1.evaluate(&x).unwrap().sub(&z2.evaluate(&x).unwrap()).unwrap();
        prop_assert!(d.delta_z.max_abs_diff(&expected) <= 1e-10);
        prop_assert!(d.off_xi_residual <= 1e-10);
    }
}

fn chi_round_trip(components: Vec<nullframe::calculus::Expr>, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let chart = nullframe::automorphisms::standard_chart(3).unwrap();
    let ns = NullStructure::standard(chart).unwrap();
    let chi = TensorFieldOnChart::one_form(components).unwrap();
    let conn = ConnectionCoefficients::gr_connection(&ns, Arc::new(chi.clone())).unwrap();
    let got = chi_oneform(&conn, &ns, x).unwrap();
    let want = chi.evaluate(x).unwrap();
    ((0..3).map(|a| got.get(&[a])).collect(), (0..3).map(|a| want.get(&[a])).collect())
}

#[test]
fn gr_connection_reproduces_consistent_chi() {
    // with f = dxⁿ closed, χ round-trips exactly when χ is proportional to f
    use nullframe::calculus::Expr;
    let v = Expr::var;
    let x = [0.3, -0.4, 0.2];
    let (got, want) = chi_round_trip(vec![Expr::constant(0.0), Expr::constant(0.0), v(0) * v(1) + v(2).sin()], &x);
    for a in 0..3 {
        assert_abs_diff_eq!(got[a], want[a], epsilon = 1e-14);
    }
}

#[test]
fn gr_connection_halves_transverse_chi() {
    use nullframe::calculus::Expr;
    let v = Expr::var;
    let x = [0.3, -0.4, 0.2];
    let (got, want) = chi_round_trip(vec![v(0) * v(1), v(1).sin(), v(2)], &x);
    assert_abs_diff_eq!(got[0], 0.5 * want[0], epsilon = 1e-14);
    assert_abs_diff_eq!(got[1], 0.5 * want[1], epsilon = 1e-14);
    assert_abs_diff_eq!(got[2], want[2], epsilon = 1e-14);
}
