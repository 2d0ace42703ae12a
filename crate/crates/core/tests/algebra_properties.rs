use nalgebra::{DMatrix, DVector};
use nullframe::automorphisms::{closure_check, lie_bracket, AffineVectorFieldAnsatz};
use nullframe::calculus::lie_derivative_tensor;
use nullframe::shapes::{classify, pattern_matrix, StressEnergyPattern};
use nullframe::groups::Level;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn ansatz(rng: &mut ChaCha8Rng, n: usize) -> AffineVectorFieldAnsatz {
    let raw = DMatrix::from_fn(n - 1, n - 1, |_, _| rng.gen_range(-1.0..1.0));
    AffineVectorFieldAnsatz {
        omega: &raw - raw.transpose(),
        a: DVector::from_fn(n - 1, |_, _| rng.gen_range(-1.0..1.0)),
        k_b: DVector::from_fn(n - 1, |_, _| rng.gen_range(-1.0..1.0)),
        k: rng.gen_range(-1.0..1.0),
        k0: rng.gen_range(-1.0..1.0),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn bracket_matches_vector_field_commutator(seed in any::<u64>(), n in 2usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (x, y) = (ansatz(&mut rng, n), ansatz(&mut rng, n));
        let br = lie_bracket(&x, &y).unwrap();
        let p: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let commutator = lie_derivative_tensor(&x.to_field(), &y.to_field(), &p).unwrap();
        let ours = nullframe::calculus::JetField::evaluate(&br.to_field(), &p).unwrap();
        prop_assert!(commutator.max_abs_diff(&ours) <= 1e-12);
    }

    #[test]
    fn bracket_is_antisymmetric_and_closes(seed in any::<u64>(), n in 2usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let fields: Vec<_> = (0..3).map(|_| ansatz(&mut rng, n)).collect();
        let xy = lie_bracket(&fields[0], &fields[1]).unwrap();
        let yx = lie_bracket(&fields[1], &fields[0]).unwrap();
        let sum: f64 = xy.to_vec().iter().zip(yx.to_vec()).fold(0.0, |m, (a, b)| m.max((a + b).abs()));
        prop_assert!(sum <= 1e-14);
        // Jacobi on three generic fields
        let j = |a: &AffineVectorFieldAnsatz, b: &AffineVectorFieldAnsatz, c: &AffineVectorFieldAnsatz| {
            lie_bracket(a, &lie_bracket(b, c).unwrap()).unwrap().to_vec()
        };
        let (a, b, c) = (&fields[0], &fields[1], &fields[2]);
        let total: Vec<f64> = j(a, b, c).iter().zip(j(b, c, a)).zip(j(c, a, b)).map(|((p, q), r)| p + q + r).collect();
        prop_assert!(total.iter().all(|v| v.abs() <= 1e-12));
    }

    #[test]
    fn pattern_round_trip(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut r = || rng.gen_range(-3.0..3.0);
        let s = r();
        for p in [
            StressEnergyPattern { level: Level::G, lambda: r(), pi: r(), sigma: r(), rho: [r(), r(), r()], scalar: s },
            StressEnergyPattern::gi(r(), r(), r(), s),
            StressEnergyPattern::gr(r(), s),
        ] {
            let m = pattern_matrix(&p).unwrap();
            let c = classify(&m, p.level, Some(s));
            prop_assert!(c.residual <= 1e-14);
            prop_assert!((c.pattern.lambda - p.lambda).abs() <= 1e-14);
            prop_assert!((c.pattern.rho[2] - p.rho[2]).abs() <= 1e-14);
            // levels nest inside G
            prop_assert!(pattern_matrix(&p.as_g()).is_ok());
            prop_assert!(classify(&m, Level::G, None).residual <= 1e-14);
        }
    }
}

#[test]
fn closure_of_a_hand_built_basis() {
    let n = 3;
    let mut basis = Vec::new();
    let mut rot = AffineVectorFieldAnsatz::zero(n);
    rot.omega = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
    basis.push(rot);
    for i in 0..2 {
        let mut t = AffineVectorFieldAnsatz::zero(n);
        t.a[i] = 1.0;
        basis.push(t);
        let mut kb = AffineVectorFieldAnsatz::zero(n);
        kb.k_b[i] = 1.0;
        basis.push(kb);
    }
    let mut k = AffineVectorFieldAnsatz::zero(n);
    k.k = 1.0;
    basis.push(k);
    let mut k0 = AffineVectorFieldAnsatz::zero(n);
    k0.k0 = 1.0;
    basis.push(k0);
    let report = closure_check(&basis).unwrap();
    assert_eq!(basis.len(), 7);
    assert_eq!(report.translation_dim, 3);
    assert!(report.jacobi_residual <= 1e-12);
    // dropping k0 breaks closure: [k xⁿ∂_n, a ∂_A] stays, but [k_B, a] produces k0
    assert!(closure_check(&basis[..6]).is_err());
}
