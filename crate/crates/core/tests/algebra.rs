mod common;

use std::sync::Arc;

use decouple_core::algebra::{
    adjoint_rep, commutator, gellmann_basis, preset_split, verify_cartan, CartanSplit,
    ClosureRule, Convention, OrthonormalBasis, PresetKind,
};
use decouple_core::linalg::{antisymmetry_defect, expm, trace, trace_product, CMatrix};
use decouple_core::sampling::{hermitian, rng};
use decouple_core::vectorizer::{block_split, vectorize};
use decouple_core::presets::{one_qubit_spec, qutrit_spec, two_qubit_spec};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng;

const KINDS: [PresetKind; 3] = [PresetKind::OneQubit, PresetKind::QutritV, PresetKind::TwoQubit];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn adjoint_is_antisymmetric(seed in any::<u64>(), n in 2usize..=4) {
        let basis = gellmann_basis(n).unwrap();
        let h = hermitian(&mut rng(seed), n);
        let ad = adjoint_rep(&h, &basis).unwrap();
        prop_assert!(antisymmetry_defect(&ad) <= 1e-12);
        let sum = &ad + ad.transpose();
        prop_assert!(sum.amax() <= 1e-12);
    }

    #[test]
    fn adjoint_is_a_homomorphism(seed in any::<u64>(), n in 2usize..=4) {
        let basis = gellmann_basis(n).unwrap();
        let mut r = rng(seed);
        let a = hermitian(&mut r, n);
        let b = hermitian(&mut r, n);
        // [ad(A), ad(B)] = ad(-i[A, B])
        let c = commutator(&a, &b).unwrap() * -decouple_core::linalg::I;
        let lhs = adjoint_rep(&c, &basis).unwrap();
        let (ada, adb) = (adjoint_rep(&a, &basis).unwrap(), adjoint_rep(&b, &basis).unwrap());
        let rhs = &ada * &adb - &adb * &ada;
        prop_assert!((lhs - rhs).amax() <= 1e-10);
    }

    #[test]
    fn traceless_hermitian_round_trips(seed in any::<u64>(), n in 2usize..=5) {
        let basis = gellmann_basis(n).unwrap();
        let h = hermitian(&mut rng(seed), n);
        let h = &h - CMatrix::identity(n, n) * (trace(&h) / n as f64);
        let back = basis.combine(&basis.coordinates(&h));
        prop_assert!((back - h).camax() <= 1e-12);
    }
}

#[test]
fn gellmann_bases_are_orthonormal_and_complete() {
    for n in 2..=6 {
        let basis = gellmann_basis(n).unwrap();
        assert_eq!(basis.len(), n * n - 1);
        for (j, a) in basis.elements().iter().enumerate() {
            assert!(trace(a).norm() < 1e-14);
            assert!((a - a.adjoint()).camax() < 1e-15);
            for (k, b) in basis.elements().iter().enumerate() {
                let expect = if j == k { 1.0 } else { 0.0 };
                assert!((trace_product(a, b).re - expect).abs() < 1e-12);
            }
        }
    }
    assert!(gellmann_basis(1).is_err());
}

#[test]
fn preset_bases_match_their_stated_sizes() {
    for (kind, n) in KINDS.iter().zip([2usize, 3, 4]) {
        let (basis, split) = preset_split(*kind);
        assert_eq!(basis.dim(), n);
        assert_eq!(basis.len(), n * n - 1);
        assert_eq!(split.p_dim() + split.eps_indices().len(), basis.len());
    }
}

#[test]
fn cartan_closure_holds_for_presets() {
    for kind in KINDS {
        let (_, split) = preset_split(kind);
        let report = verify_cartan(&split);
        assert!(report.ok, "{kind:?}: {:?}", report.violations.first());
    }
}

#[test]
fn cartan_violation_is_located() {
    // p = {x} leaves [y, z] ~ x outside eps = {y, z}
    let basis = Arc::new(gellmann_basis(2).unwrap());
    let split = CartanSplit::new(basis, vec![0]).unwrap();
    let report = verify_cartan(&split);
    assert!(!report.ok);
    assert!(report.violations.iter().any(|v| v.rule == ClosureRule::EpsEps));
}

#[test]
fn invalid_bases_are_rejected() {
    let n = 2;
    let id = CMatrix::identity(n, n);
    let basis = gellmann_basis(2).unwrap();
    let mut els: Vec<CMatrix> = basis.elements().to_vec();
    els[0] = id;
    assert!(OrthonormalBasis::new(els, Convention::Orthonormal).is_err());
    assert!(OrthonormalBasis::new(basis.elements()[..2].to_vec(), Convention::Orthonormal).is_err());
    assert!(CartanSplit::new(Arc::new(basis), vec![0, 0]).is_err());
}

/// `exp(-O_0 t) O_i exp(O_0 t) = sum_j (exp(-O_0^11 t))_ji O_j` on the p generators,
/// with `O_0^11` acting on column vectors of p coordinates.
#[test]
fn conjugation_identity_holds_for_presets() {
    let specs = [
        one_qubit_spec(3.0, 0.2),
        qutrit_spec(0.2),
        two_qubit_spec(1.0, 1.0, 0.2),
    ];
    let mut r = rng(7);
    for (kind, spec) in KINDS.iter().zip(&specs) {
        let (_, split) = preset_split(*kind);
        let vs = vectorize(spec, &split).unwrap();
        let blocks = block_split(&vs).unwrap();
        let o0 = blocks.o0_full();
        for _ in 0..20 {
            let t: f64 = r.gen_range(0.0..10.0);
            let (fwd, back) = (expm(&(&o0 * t)), expm(&(&o0 * -t)));
            let small = expm(&(&blocks.o0_11 * -t));
            for (i, oi) in blocks.p_generators.iter().enumerate() {
                let lhs = &back * oi * &fwd;
                let mut rhs = DMatrix::zeros(oi.nrows(), oi.ncols());
                for (j, oj) in blocks.p_generators.iter().enumerate() {
                    rhs += oj * small[(j, i)];
                }
                let err = (lhs - rhs).amax();
                assert!(err <= 1e-9, "{kind:?} t={t} i={i}: {err:e}");
            }
        }
        let rel = blocks.commutator_relation();
        assert!((rel - blocks.o0_11.transpose()).amax() < 1e-10, "{kind:?}");
    }
}
