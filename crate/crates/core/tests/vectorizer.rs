mod common;

use std::sync::Arc;

use decouple_core::algebra::{gellmann_basis, preset_split, CartanSplit, Convention, PresetKind};
use decouple_core::dynamics::{integrate_density_oracle, TimeGrid};
use decouple_core::error::{Error, ErrorCategory};
use decouple_core::linalg::{sigma_z, symmetric_part_eigenvalues, RMatrix, RVector};
use decouple_core::ode::Method;
use decouple_core::presets::{one_qubit_spec, one_qubit_split, qutrit_spec, two_qubit_spec};
use decouple_core::sampling::{density_matrix, ginibre, hermitian, normal_vector, rng};
use decouple_core::vectorizer::{
    block_split, check_assumptions, coherence_to_rho, rho_to_coherence, vectorize, Lindblad,
    OpenSystemSpec,
};
use proptest::prelude::*;
use rand::Rng;

fn random_spec(seed: u64, n: usize) -> OpenSystemSpec {
    let mut r = rng(seed);
    let h0 = hermitian(&mut r, n);
    let controls = (0..2).map(|_| hermitian(&mut r, n)).collect();
    let lindblads = (0..2)
        .map(|_| Lindblad {
            op: ginibre(&mut r, n),
            rate: r.gen_range(0.1..2.0),
        })
        .collect();
    OpenSystemSpec::new(h0, controls, lindblads).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn coherence_derivative_matches_master_equation(seed in any::<u64>(), n in 2usize..=4) {
        let spec = random_spec(seed, n);
        let basis = Arc::new(gellmann_basis(n).unwrap());
        let vs = vectorize(&spec, &CartanSplit::trivial(basis.clone())).unwrap();
        let mut r = rng(seed ^ 0x5eed);
        let rho = density_matrix(&mut r, n);
        let u = [r.gen_range(-2.0..2.0), r.gen_range(-2.0..2.0)];
        let m = rho_to_coherence(&rho, &basis).unwrap().m;
        let expected = basis.coordinates(&spec.rhs(&rho, &u));
        prop_assert!((vs.rhs(&m, &u) - expected).amax() <= 1e-9);
    }

    #[test]
    fn generators_are_antisymmetric(seed in any::<u64>(), n in 2usize..=4) {
        let spec = random_spec(seed, n);
        let basis = Arc::new(gellmann_basis(n).unwrap());
        let vs = vectorize(&spec, &CartanSplit::trivial(basis)).unwrap();
        prop_assert!((&vs.o0 + vs.o0.transpose()).amax() <= 1e-12);
        for o in &vs.controls_o {
            prop_assert!((o + o.transpose()).amax() <= 1e-12);
        }
    }

    /// Qubit channels and self-adjoint channels never expand the coherence vector.
    #[test]
    fn qubit_and_hermitian_channels_are_dissipative(seed in any::<u64>(), n in 2usize..=4) {
        let mut r = rng(seed);
        let op = if n == 2 { ginibre(&mut r, n) } else { hermitian(&mut r, n) };
        let spec = OpenSystemSpec::new(hermitian(&mut r, n), vec![], vec![Lindblad { op, rate: 0.8 }]).unwrap();
        let basis = Arc::new(gellmann_basis(n).unwrap());
        let vs = vectorize(&spec, &CartanSplit::trivial(basis)).unwrap();
        prop_assert!(symmetric_part_eigenvalues(&vs.d).last().copied().unwrap() <= 1e-10);
    }

    #[test]
    fn states_round_trip_and_obey_purity(seed in any::<u64>(), n in 2usize..=4) {
        let basis = gellmann_basis(n).unwrap();
        let rho = density_matrix(&mut rng(seed), n);
        let cv = rho_to_coherence(&rho, &basis).unwrap();
        prop_assert!(cv.within_purity_bound(n, 1e-9));
        prop_assert!(cv.m.norm_squared() <= 1.0 - 1.0 / n as f64 + 1e-9);
        let back = coherence_to_rho(&cv.m, &basis).unwrap();
        prop_assert!((back - rho).camax() <= 1e-12);
    }
}

#[test]
fn oracle_preserves_trace_on_random_systems() {
    let grid = TimeGrid::uniform(0.0, 2.0, 0.1).unwrap();
    for (seed, n) in [(1u64, 2usize), (2, 3), (3, 4)] {
        let spec = random_spec(seed, n);
        let rho = density_matrix(&mut rng(seed), n);
        let u = |t: f64| RVector::from_row_slice(&[t.sin(), t.cos()]);
        let run = integrate_density_oracle(&spec, Some(&u), &rho, &grid, Method::default()).unwrap();
        assert!(run.max_trace_error <= 1e-9);
        assert!(run.min_eigenvalue >= -1e-8);
    }
}

#[test]
fn bloch_quantities_are_scaled_orthonormal_ones() {
    let spec = one_qubit_spec(3.0, 0.7);
    let bloch = vectorize(&spec, &one_qubit_split(Convention::PauliBloch)).unwrap();
    let ortho = vectorize(&spec, &one_qubit_split(Convention::Orthonormal)).unwrap();
    let s2 = std::f64::consts::SQRT_2;
    assert!((&bloch.o0 - &ortho.o0).amax() < 1e-14);
    assert!((&bloch.d - &ortho.d).amax() < 1e-14);
    assert!((&bloch.g - &ortho.g * s2).amax() < 1e-14);
    for (a, b) in bloch.controls_o.iter().zip(&ortho.controls_o) {
        assert!((a - b).amax() < 1e-14);
    }
    let rho = density_matrix(&mut rng(4), 2);
    let mb = rho_to_coherence(&rho, bloch.basis()).unwrap().m;
    let mo = rho_to_coherence(&rho, ortho.basis()).unwrap().m;
    assert!((mb - mo * s2).amax() < 1e-14);
    // damped qubit: D = diag(-G/2, -G/2, -G), g = (0, 0, -G)
    let d = RMatrix::from_diagonal(&RVector::from_row_slice(&[-0.35, -0.35, -0.7]));
    assert!((&bloch.d - d).amax() < 1e-14);
    assert!((&bloch.g - RVector::from_row_slice(&[0.0, 0.0, -0.7])).amax() < 1e-14);
}

#[test]
fn blocks_reassemble_the_source_matrices() {
    let cases = [
        (PresetKind::OneQubit, one_qubit_spec(3.0, 0.2)),
        (PresetKind::QutritV, qutrit_spec(0.2)),
        (PresetKind::TwoQubit, two_qubit_spec(1.0, 1.0, 0.2)),
    ];
    for (kind, spec) in cases {
        let (_, split) = preset_split(kind);
        let vs = vectorize(&spec, &split).unwrap();
        let b = block_split(&vs).unwrap();
        let perm = |a: &RMatrix| RMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[(b.perm[i], b.perm[j])]);
        assert_eq!(b.o0_full(), perm(&vs.o0));
        assert_eq!(b.d_full(), perm(&vs.d));
        assert_eq!(b.g_full(), RVector::from_fn(vs.len(), |i, _| vs.g[b.perm[i]]));
        for (i, o) in vs.controls_o.iter().enumerate() {
            assert!((b.control_full(i) - perm(o)).amax() <= 1e-15);
        }
        assert!(b.o0_12.amax() <= 1e-10 && b.o0_21.amax() <= 1e-10);
        let m = normal_vector(&mut rng(1), vs.len());
        let (m1, m2) = b.permute(&m);
        assert_eq!(b.unpermute(&m1, &m2), m);
        assert!(b.assumptions.all_ok());
    }
}

/// A generic non-normal qutrit channel can expand the coherence vector;
/// the assumption check has to catch it.
#[test]
fn expanding_channel_is_reported() {
    let found = (0..50u64).find(|&seed| {
        let spec = random_spec(seed, 3);
        let basis = Arc::new(gellmann_basis(3).unwrap());
        let vs = vectorize(&spec, &CartanSplit::trivial(basis)).unwrap();
        let top = symmetric_part_eigenvalues(&vs.d).last().copied().unwrap();
        let report = check_assumptions(&vs);
        assert_eq!(report.h2, top < 0.0);
        top > 1e-3
    });
    assert!(found.is_some());
}

#[test]
fn pure_dephasing_violates_strict_dissipation() {
    let h0 = sigma_z() * decouple_core::linalg::c(1.5, 0.0);
    let controls = vec![decouple_core::linalg::sigma_x(), decouple_core::linalg::sigma_y()];
    let spec = OpenSystemSpec::new(h0, controls, vec![Lindblad { op: sigma_z(), rate: 0.3 }]).unwrap();
    let vs = vectorize(&spec, &one_qubit_split(Convention::Orthonormal)).unwrap();
    let report = check_assumptions(&vs);
    assert!(report.h1 && !report.h2 && report.h3);
    let err = report.to_error().unwrap();
    assert!(matches!(err, Error::Assumption { .. }));
    assert_eq!(err.category(), ErrorCategory::Infeasible);
}

#[test]
fn malformed_inputs_are_rejected() {
    let basis = gellmann_basis(2).unwrap();
    let not_unit = decouple_core::linalg::identity(2);
    assert!(matches!(rho_to_coherence(&not_unit, &basis), Err(Error::InvalidState(_))));
    let h0 = decouple_core::linalg::identity(3);
    let bad = OpenSystemSpec::new(h0, vec![decouple_core::linalg::identity(2)], vec![]);
    assert!(bad.is_err());
    let neg = OpenSystemSpec::new(
        sigma_z(),
        vec![],
        vec![Lindblad { op: sigma_z(), rate: -1.0 }],
    );
    assert!(neg.is_err());
}
