//! The worked systems: a damped qubit, a V-type qutrit and two damped qubits.

use std::sync::Arc;

use crate::algebra::{preset_split, CartanSplit, Convention, OrthonormalBasis, PresetKind};
use crate::linalg::{c, identity, kron, matrix_unit, sigma_x, sigma_y, sigma_z, CMatrix};
use crate::vectorizer::{Lindblad, OpenSystemSpec};

/// Hydrogen-like level energies of the qutrit, `-13.6 / n^2`.
pub const QUTRIT_ENERGIES: [f64; 3] = [-13.6, -13.6 / 4.0, -13.6 / 9.0];

/// Lowering operator `|1><0|`; level 1 is the ground state of `sigma_z / 2`.
pub fn qubit_lowering() -> CMatrix {
    matrix_unit(2, 1, 0)
}

/// `H0 = (omega/2) sigma_z`, controls `sigma_x/2` and `sigma_y/2`, one
/// amplitude-damping channel with rate `gamma`.
pub fn one_qubit_spec(omega: f64, gamma: f64) -> OpenSystemSpec {
    OpenSystemSpec::new(
        sigma_z() * c(omega / 2.0, 0.0),
        vec![sigma_x() * c(0.5, 0.0), sigma_y() * c(0.5, 0.0)],
        vec![Lindblad {
            op: qubit_lowering(),
            rate: gamma,
        }],
    )
    .expect("one-qubit preset is valid")
}

/// The qubit split `p = {x, y}`, `eps = {z}` in either normalization.
pub fn one_qubit_split(convention: Convention) -> CartanSplit {
    match convention {
        Convention::Orthonormal => preset_split(PresetKind::OneQubit).1,
        Convention::PauliBloch => {
            CartanSplit::new(Arc::new(OrthonormalBasis::pauli_bloch()), vec![0, 1])
                .expect("valid split")
        }
    }
}

/// Density matrix with Bloch vector `r` (`rho = (I + r . sigma)/2`).
pub fn bloch_to_rho(r: [f64; 3]) -> CMatrix {
    (identity(2) + sigma_x() * c(r[0], 0.0) + sigma_y() * c(r[1], 0.0) + sigma_z() * c(r[2], 0.0))
        * c(0.5, 0.0)
}

/// Traceless qutrit Hamiltonian built from [`QUTRIT_ENERGIES`], controls on
/// the four p elements, and spontaneous emission `|0><1|`, `|0><2|` at a
/// common rate.
pub fn qutrit_spec(gamma: f64) -> OpenSystemSpec {
    let (basis, split) = preset_split(PresetKind::QutritV);
    let mean = QUTRIT_ENERGIES.iter().sum::<f64>() / 3.0;
    let mut h0 = CMatrix::zeros(3, 3);
    for (k, e) in QUTRIT_ENERGIES.iter().enumerate() {
        h0[(k, k)] = c(e - mean, 0.0);
    }
    let controls = split
        .p_indices()
        .iter()
        .map(|&j| basis.element(j).clone())
        .collect();
    OpenSystemSpec::new(
        h0,
        controls,
        vec![
            Lindblad {
                op: matrix_unit(3, 0, 1),
                rate: gamma,
            },
            Lindblad {
                op: matrix_unit(3, 0, 2),
                rate: gamma,
            },
        ],
    )
    .expect("qutrit preset is valid")
}

/// Equal mixture of `(|0>+|1>)/sqrt2` and `(|0>+|2>)/sqrt2`.
pub fn qutrit_initial_rho() -> CMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let pure = |k: usize| {
        let mut v = CMatrix::zeros(3, 1);
        v[(0, 0)] = c(s, 0.0);
        v[(k, 0)] = c(s, 0.0);
        &v * v.adjoint()
    };
    (pure(1) + pure(2)) * c(0.5, 0.0)
}

/// `H0 = (omega1 sigma_z (x) I + omega2 I (x) sigma_z)/2`, controls on the nine
/// correlation elements, independent amplitude damping on each qubit.
pub fn two_qubit_spec(omega1: f64, omega2: f64, gamma: f64) -> OpenSystemSpec {
    let (basis, split) = preset_split(PresetKind::TwoQubit);
    let id = identity(2);
    let h0 = (kron(&sigma_z(), &id) * c(omega1, 0.0) + kron(&id, &sigma_z()) * c(omega2, 0.0))
        * c(0.5, 0.0);
    let controls = split
        .p_indices()
        .iter()
        .map(|&j| basis.element(j).clone())
        .collect();
    OpenSystemSpec::new(
        h0,
        controls,
        vec![
            Lindblad {
                op: kron(&qubit_lowering(), &id),
                rate: gamma,
            },
            Lindblad {
                op: kron(&id, &qubit_lowering()),
                rate: gamma,
            },
        ],
    )
    .expect("two-qubit preset is valid")
}

/// `(|00> + |11>)/sqrt2`.
pub fn bell_rho() -> CMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut v = CMatrix::zeros(4, 1);
    v[(0, 0)] = c(s, 0.0);
    v[(3, 0)] = c(s, 0.0);
    &v * v.adjoint()
}

/// Half maximally mixed, half Bell state.
pub fn half_mixed_bell_rho() -> CMatrix {
    identity(4) * c(0.125, 0.0) + bell_rho() * c(0.5, 0.0)
}
