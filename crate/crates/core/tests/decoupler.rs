mod common;

use common::{bloch_system, pipeline};
use decouple_core::decoupler::{
    analytic_one_qubit, control_signal, control_signal_expm, one_qubit_residual, residual,
    residual_jacobian, solve_stationary, spectrum, stationary_trajectory, Branch, ControlLaw,
    SolveStatus, SolverOptions,
};
use decouple_core::error::Error;
use decouple_core::linalg::{lstsq, RVector};
use decouple_core::sampling::{normal_vector, rng};
use proptest::prelude::*;
use rand::Rng;

const PRESETS: [&str; 4] = ["one_qubit", "qutrit_v", "two_qubit_mixed", "two_qubit_bell"];

/// Bloch vector with `C0^2 = c2` and `m_z` drawn inside the ball.
fn state_with_coherence(c2: f64, phase: f64, zfrac: f64) -> [f64; 3] {
    let c = c2.sqrt();
    let zmax = (1.0 - c2).max(0.0).sqrt();
    [c * phase.cos(), c * phase.sin(), zmax * zfrac]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn both_branches_solve_the_qubit_equations(
        c2 in 1e-6f64..0.5, phase in 0.0f64..6.3, zfrac in -1.0f64..1.0, gamma in 0.05f64..2.0,
    ) {
        let m0 = state_with_coherence(c2, phase, zfrac);
        for branch in [Branch::Plus, Branch::Minus] {
            let a = analytic_one_qubit(m0, gamma, branch).unwrap();
            let xi = [a.solution.xi[0], a.solution.xi[1]];
            let r = one_qubit_residual(m0, gamma, xi, a.solution.eta[0]);
            prop_assert!(r.iter().all(|v| v.abs() <= 1e-12), "{branch:?} {r:?}");
            prop_assert_eq!(a.solution.status, SolveStatus::Exact);
        }
    }

    #[test]
    fn solver_lands_on_an_analytic_branch(
        c2 in 0.0f64..=0.5, phase in 0.0f64..6.3, zfrac in -1.0f64..1.0, gamma in 0.05f64..2.0,
    ) {
        let m0 = state_with_coherence(c2, phase, zfrac);
        let (_, blocks) = bloch_system(3.0, gamma);
        let m1 = RVector::from_row_slice(&m0[..2]);
        let sol = solve_stationary(&blocks, &m1, &SolverOptions::default()).unwrap();
        prop_assert_eq!(sol.status, SolveStatus::Exact);
        prop_assert!(sol.residual_norm <= 1e-10);
        let gap = [Branch::Plus, Branch::Minus]
            .iter()
            .map(|&b| {
                let a = analytic_one_qubit(m0, gamma, b).unwrap().solution;
                (&sol.xi - &a.xi).amax().max((&sol.eta - &a.eta).amax())
            })
            .fold(f64::INFINITY, f64::min);
        prop_assert!(gap <= 1e-8, "gap {gap:e}");
    }

    #[test]
    fn infeasible_qubit_states_fall_back_to_least_squares(
        c2 in 0.51f64..1.0, phase in 0.0f64..6.3, zfrac in -1.0f64..1.0, gamma in 0.05f64..2.0,
    ) {
        let m0 = state_with_coherence(c2, phase, zfrac);
        prop_assert!(matches!(analytic_one_qubit(m0, gamma, Branch::Minus), Err(Error::Infeasible(_))));
        let (_, blocks) = bloch_system(3.0, gamma);
        let m1 = RVector::from_row_slice(&m0[..2]);
        let strict = solve_stationary(&blocks, &m1, &SolverOptions { restarts: 4, ..Default::default() }).unwrap();
        prop_assert_eq!(strict.status, SolveStatus::Failed);
        let opts = SolverOptions { restarts: 4, allow_least_squares: true, ..Default::default() };
        let ls = solve_stationary(&blocks, &m1, &opts).unwrap();
        prop_assert_eq!(ls.status, SolveStatus::LeastSquares);
        // no-control stationary point
        let rhs = -(&blocks.d21 * &m1 + &blocks.g2);
        let eta0 = lstsq(&blocks.d22, &rhs);
        let xi0 = RVector::zeros(blocks.p_dim);
        let (f1, f2) = residual(&xi0, &eta0, &blocks, &m1).unwrap();
        let r0 = (f1.norm_squared() + f2.norm_squared()).sqrt();
        prop_assert!(ls.residual_norm <= r0 + 1e-12);
        prop_assert!(ls.residual_norm <= strict.residual_norm + 1e-12);
    }

    #[test]
    fn jacobian_matches_finite_differences(seed in any::<u64>(), which in 0usize..3) {
        let p = pipeline(["one_qubit", "qutrit_v", "two_qubit_mixed"][which]);
        let blocks = &p.solved.blocks;
        let mut r = rng(seed);
        let xi = normal_vector(&mut r, blocks.p_dim);
        let eta = normal_vector(&mut r, blocks.eps_dim()) * 0.3;
        let m1 = &p.solved.m0_1;
        let jac = residual_jacobian(&xi, &eta, blocks, m1).unwrap();
        let f = |xi: &RVector, eta: &RVector| {
            let (a, b) = residual(xi, eta, blocks, m1).unwrap();
            let mut v = RVector::zeros(a.len() + b.len());
            v.rows_mut(0, a.len()).copy_from(&a);
            v.rows_mut(a.len(), b.len()).copy_from(&b);
            v
        };
        let h = 1e-6;
        for c in 0..jac.ncols() {
            let (mut xp, mut xm, mut ep, mut em) = (xi.clone(), xi.clone(), eta.clone(), eta.clone());
            if c < xi.len() {
                xp[c] += h;
                xm[c] -= h;
            } else {
                ep[c - xi.len()] += h;
                em[c - xi.len()] -= h;
            }
            let fd = (f(&xp, &ep) - f(&xm, &em)) / (2.0 * h);
            prop_assert!((fd - jac.column(c)).amax() <= 1e-7);
        }
    }
}

#[test]
fn control_norm_is_conserved() {
    let mut r = rng(3);
    for name in PRESETS {
        let p = pipeline(name);
        let law = &p.solved.law;
        let norm = law.xi.norm();
        for _ in 0..200 {
            let t = r.gen_range(-20.0..40.0);
            let u = control_signal(law, t);
            assert!((u.norm() - norm).abs() <= 1e-12, "{name} t={t}");
            assert!((u - control_signal_expm(law, t)).amax() <= 1e-12);
        }
    }
}

/// On the stationary trajectory the controlled dynamics reduce to the
/// unperturbed one, `rhs(m_inf(t), u(t)) = O_0 m_inf(t)`.
#[test]
fn stationary_trajectory_is_decoupled() {
    let mut r = rng(11);
    for name in ["one_qubit", "qutrit_v", "two_qubit_mixed"] {
        let p = pipeline(name);
        let s = &p.solved;
        assert_eq!(s.report.solution.status, SolveStatus::Exact);
        for _ in 0..50 {
            let t = r.gen_range(0.0..10.0);
            let m = stationary_trajectory(&s.m0_1, &s.report.solution.eta, &s.blocks, 0.0, t).unwrap();
            let u = control_signal(&s.law, t);
            let err = (p.vs.rhs(&m, u.as_slice()) - &p.vs.o0 * &m).amax();
            assert!(err <= 1e-9, "{name} t={t}: {err:e}");
        }
    }
}

#[test]
fn degenerate_qubit_needs_no_control() {
    let a = analytic_one_qubit([0.0, 0.0, -0.3], 0.5, Branch::Minus).unwrap();
    assert!(a.degenerate);
    assert_eq!(a.amplitude, 0.0);
    assert_eq!(a.solution.eta[0], -1.0);
    assert!(matches!(
        analytic_one_qubit([0.9, 0.9, 0.0], 0.5, Branch::Minus),
        Err(Error::InvalidState(_)) | Err(Error::Infeasible(_))
    ));
}

#[test]
fn solver_is_deterministic_and_reports_its_spectrum() {
    let a = pipeline("qutrit_v");
    let b = pipeline("qutrit_v");
    assert_eq!(a.solved.report.solution.xi, b.solved.report.solution.xi);
    assert_eq!(
        serde_json::to_string(&a.solved.report).unwrap(),
        serde_json::to_string(&b.solved.report).unwrap()
    );
    let spec = spectrum(&a.solved.law);
    assert_eq!(spec.len(), 4);
    for ch in &spec {
        assert!(ch.offset.abs() < 1e-12);
        assert_eq!(ch.terms.len(), 1);
    }
}

#[test]
fn shape_mismatch_is_an_error() {
    let (_, blocks) = bloch_system(3.0, 0.2);
    let bad = RVector::zeros(3);
    assert!(matches!(
        solve_stationary(&blocks, &bad, &SolverOptions::default()),
        Err(Error::Shape { .. })
    ));
    assert!(ControlLaw::new(bad, &blocks, 0.0).is_err());
}
