//! su(N) bases, adjoint representations and Cartan-split verification.
//!
//! Basis elements are Hermitian traceless matrices `Omega_j`; the Lie algebra
//! element they stand for is `-i Omega_j`. Coordinates of a Hermitian matrix
//! `X` are `x_j = tr(Omega_j X)`, and `X = sum_j x_j Omega_j / tr(Omega_j^2)`
//! reconstructs its traceless part. With the orthonormal convention the
//! normalization is 1; with the two-level Bloch convention (`Omega_j = sigma_j`)
//! it is 2.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    c, hermitian_defect, kron, matrix_unit, paulis, real_part, trace_product, CMatrix, RMatrix,
    RVector, I,
};

/// Tolerance used when constructing and validating bases.
pub const CONSTRUCTION_TOL: f64 = 1e-12;
/// Tolerance used by the verification reports.
pub const VERIFY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Convention {
    /// `tr(Omega_j Omega_k) = delta_jk`.
    Orthonormal,
    /// Pauli matrices themselves, `tr(sigma_j sigma_k) = 2 delta_jk` (N = 2 only).
    PauliBloch,
}

impl Convention {
    pub fn norm_sq(self) -> f64 {
        match self {
            Convention::Orthonormal => 1.0,
            Convention::PauliBloch => 2.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OrthonormalBasis {
    dim: usize,
    elements: Vec<CMatrix>,
    convention: Convention,
}

impl OrthonormalBasis {
    /// Validates Hermiticity, tracelessness, the Gram matrix and the element
    /// count `N^2 - 1`.
    pub fn new(elements: Vec<CMatrix>, convention: Convention) -> Result<Self> {
        let Some(first) = elements.first() else {
            return Err(Error::InvalidInput("empty basis".into()));
        };
        let dim = first.nrows();
        if dim < 2 {
            return Err(Error::InvalidDimension(dim));
        }
        if convention == Convention::PauliBloch && dim != 2 {
            return Err(Error::InvalidInput(
                "the Bloch convention is only defined for N = 2".into(),
            ));
        }
        if elements.len() != dim * dim - 1 {
            return Err(Error::shape(
                format!("{} basis elements", dim * dim - 1),
                format!("{}", elements.len()),
            ));
        }
        for (j, e) in elements.iter().enumerate() {
            if e.nrows() != dim || e.ncols() != dim {
                return Err(Error::shape(
                    format!("{dim}x{dim}"),
                    format!("{}x{} at element {j}", e.nrows(), e.ncols()),
                ));
            }
            if hermitian_defect(e) > CONSTRUCTION_TOL {
                return Err(Error::InvalidInput(format!("element {j} is not Hermitian")));
            }
            if e.trace().norm() > CONSTRUCTION_TOL {
                return Err(Error::InvalidInput(format!("element {j} is not traceless")));
            }
        }
        let n = convention.norm_sq();
        for j in 0..elements.len() {
            for k in j..elements.len() {
                let g = trace_product(&elements[j], &elements[k]);
                let want = if j == k { n } else { 0.0 };
                if (g - c(want, 0.0)).norm() > CONSTRUCTION_TOL {
                    return Err(Error::InvalidInput(format!(
                        "Gram entry ({j},{k}) = {g} but expected {want}"
                    )));
                }
            }
        }
        Ok(Self {
            dim,
            elements,
            convention,
        })
    }

    /// Two-level basis made of the bare Pauli matrices.
    pub fn pauli_bloch() -> Self {
        let [x, y, z] = paulis();
        Self::new(vec![x, y, z], Convention::PauliBloch).expect("Pauli matrices form a basis")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of elements, `N^2 - 1`.
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[CMatrix] {
        &self.elements
    }

    pub fn element(&self, j: usize) -> &CMatrix {
        &self.elements[j]
    }

    pub fn convention(&self) -> Convention {
        self.convention
    }

    pub fn norm_sq(&self) -> f64 {
        self.convention.norm_sq()
    }

    /// `x_j = Re tr(Omega_j X)`.
    pub fn coordinates(&self, x: &CMatrix) -> RVector {
        RVector::from_iterator(
            self.len(),
            self.elements.iter().map(|e| trace_product(e, x).re),
        )
    }

    /// Inverse of [`coordinates`](Self::coordinates) on traceless Hermitian matrices.
    pub fn combine(&self, coords: &RVector) -> CMatrix {
        let n = self.norm_sq();
        let mut out = CMatrix::zeros(self.dim, self.dim);
        for (e, &x) in self.elements.iter().zip(coords.iter()) {
            out += e * c(x / n, 0.0);
        }
        out
    }

    /// Same elements rescaled to the orthonormal convention.
    pub fn to_orthonormal(&self) -> Self {
        if self.convention == Convention::Orthonormal {
            return self.clone();
        }
        let s = 1.0 / self.norm_sq().sqrt();
        Self {
            dim: self.dim,
            elements: self.elements.iter().map(|e| e * c(s, 0.0)).collect(),
            convention: Convention::Orthonormal,
        }
    }
}

/// Generalized Gell-Mann basis of su(N), orthonormal under `tr(X^dagger Y)`.
///
/// Ordering: the symmetric off-diagonal matrices `(|j><k| + |k><j|)/sqrt2` for
/// `j < k` in lexicographic order, then the antisymmetric ones
/// `(-i|j><k| + i|k><j|)/sqrt2` in the same order, then the diagonal matrices
/// `(sum_{j<l} |j><j| - l |l><l|) / sqrt(l(l+1))` for `l = 1..N-1`.
pub fn gellmann_basis(n: usize) -> Result<OrthonormalBasis> {
    if n < 2 {
        return Err(Error::InvalidDimension(n));
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|j| ((j + 1)..n).map(move |k| (j, k)))
        .collect();
    let mut elements = Vec::with_capacity(n * n - 1);
    for &(j, k) in &pairs {
        elements.push((matrix_unit(n, j, k) + matrix_unit(n, k, j)) * c(s, 0.0));
    }
    for &(j, k) in &pairs {
        elements.push((matrix_unit(n, j, k) * (-I) + matrix_unit(n, k, j) * I) * c(s, 0.0));
    }
    for l in 1..n {
        let norm = 1.0 / ((l * (l + 1)) as f64).sqrt();
        let mut d = CMatrix::zeros(n, n);
        for j in 0..l {
            d[(j, j)] = c(norm, 0.0);
        }
        d[(l, l)] = c(-(l as f64) * norm, 0.0);
        elements.push(d);
    }
    OrthonormalBasis::new(elements, Convention::Orthonormal)
}

/// `AB - BA`.
pub fn commutator(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    if !a.is_square() || a.shape() != b.shape() {
        return Err(Error::shape(
            format!("square {:?}", a.shape()),
            format!("{:?}", b.shape()),
        ));
    }
    Ok(a * b - b * a)
}

/// Real commutator for the representation matrices.
pub fn real_commutator(a: &RMatrix, b: &RMatrix) -> RMatrix {
    a * b - b * a
}

/// Matrix of `X -> -i[H, X]` on basis coordinates:
/// `O_jk = tr(Omega_j (-i)[H, Omega_k]) / tr(Omega_k^2)`.
///
/// Any multiple of the identity in `H` drops out.
pub fn adjoint_rep(h: &CMatrix, basis: &OrthonormalBasis) -> Result<RMatrix> {
    if h.nrows() != basis.dim() || h.ncols() != basis.dim() {
        return Err(Error::shape(
            format!("{0}x{0}", basis.dim()),
            format!("{}x{}", h.nrows(), h.ncols()),
        ));
    }
    if hermitian_defect(h) > VERIFY_TOL {
        return Err(Error::InvalidInput(
            "adjoint representation needs a Hermitian matrix".into(),
        ));
    }
    let n = basis.len();
    let norm = basis.norm_sq();
    let mut out = CMatrix::zeros(n, n);
    for k in 0..n {
        let action = (h * basis.element(k) - basis.element(k) * h) * (-I);
        for j in 0..n {
            out[(j, k)] = trace_product(basis.element(j), &action) / norm;
        }
    }
    let (re, _) = real_part(&out);
    Ok(re)
}

#[derive(Debug, Clone)]
pub struct CartanSplit {
    basis: Arc<OrthonormalBasis>,
    p_indices: Vec<usize>,
    eps_indices: Vec<usize>,
}

impl CartanSplit {
    /// `eps_indices` is the sorted complement of `p_indices`.
    pub fn new(basis: Arc<OrthonormalBasis>, p_indices: Vec<usize>) -> Result<Self> {
        let n = basis.len();
        let mut seen = vec![false; n];
        for &i in &p_indices {
            if i >= n {
                return Err(Error::InvalidInput(format!(
                    "p index {i} out of range for {n} basis elements"
                )));
            }
            if seen[i] {
                return Err(Error::InvalidInput(format!("duplicate p index {i}")));
            }
            seen[i] = true;
        }
        let eps_indices = (0..n).filter(|&i| !seen[i]).collect();
        Ok(Self {
            basis,
            p_indices,
            eps_indices,
        })
    }

    /// The trivial split, everything in the subalgebra.
    pub fn trivial(basis: Arc<OrthonormalBasis>) -> Self {
        Self::new(basis, Vec::new()).expect("empty p is always valid")
    }

    pub fn basis(&self) -> &OrthonormalBasis {
        &self.basis
    }

    pub fn basis_arc(&self) -> Arc<OrthonormalBasis> {
        Arc::clone(&self.basis)
    }

    pub fn p_indices(&self) -> &[usize] {
        &self.p_indices
    }

    pub fn eps_indices(&self) -> &[usize] {
        &self.eps_indices
    }

    /// `m`, the dimension of the p-part.
    pub fn p_dim(&self) -> usize {
        self.p_indices.len()
    }

    /// p indices followed by eps indices.
    pub fn permutation(&self) -> Vec<usize> {
        self.p_indices
            .iter()
            .chain(self.eps_indices.iter())
            .copied()
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ClosureRule {
    /// `[eps, eps]` must stay in eps.
    EpsEps,
    /// `[p, p]` must land in eps.
    PP,
    /// `[p, eps]` must land in p.
    PEps,
}

impl fmt::Display for ClosureRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ClosureRule::EpsEps => "[eps,eps] in eps",
            ClosureRule::PP => "[p,p] in eps",
            ClosureRule::PEps => "[p,eps] in p",
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CartanViolation {
    pub rule: ClosureRule,
    pub a: usize,
    pub b: usize,
    pub leaked_norm: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CartanReport {
    pub ok: bool,
    pub violations: Vec<CartanViolation>,
}

/// Checks the three closure relations pair by pair. A pair violates a rule
/// when the Frobenius norm of the commutator's component in the forbidden
/// subspace exceeds [`VERIFY_TOL`].
pub fn verify_cartan(split: &CartanSplit) -> CartanReport {
    let basis = split.basis();
    let norm = basis.norm_sq();
    let in_p: Vec<bool> = {
        let mut v = vec![false; basis.len()];
        for &i in split.p_indices() {
            v[i] = true;
        }
        v
    };
    let leak = |a: usize, b: usize, forbidden_is_p: bool| -> f64 {
        let x = (basis.element(a) * basis.element(b) - basis.element(b) * basis.element(a)) * (-I);
        let coords = basis.coordinates(&x);
        coords
            .iter()
            .enumerate()
            .filter(|(j, _)| in_p[*j] == forbidden_is_p)
            .map(|(_, v)| v * v / norm)
            .sum::<f64>()
            .sqrt()
    };

    let mut violations = Vec::new();
    let mut check = |rule, a, b, forbidden_is_p| {
        let leaked_norm = leak(a, b, forbidden_is_p);
        if leaked_norm > VERIFY_TOL {
            violations.push(CartanViolation {
                rule,
                a,
                b,
                leaked_norm,
            });
        }
    };
    let p = split.p_indices();
    let e = split.eps_indices();
    for (ia, &a) in e.iter().enumerate() {
        for &b in &e[ia + 1..] {
            check(ClosureRule::EpsEps, a, b, true);
        }
    }
    for (ia, &a) in p.iter().enumerate() {
        for &b in &p[ia + 1..] {
            check(ClosureRule::PP, a, b, true);
        }
    }
    for &a in p {
        for &b in e {
            check(ClosureRule::PEps, a, b, false);
        }
    }
    CartanReport {
        ok: violations.is_empty(),
        violations,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PresetKind {
    OneQubit,
    QutritV,
    TwoQubit,
}

impl FromStr for PresetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "one_qubit" => Ok(PresetKind::OneQubit),
            "qutrit_v" => Ok(PresetKind::QutritV),
            "two_qubit" => Ok(PresetKind::TwoQubit),
            other => Err(Error::Config(format!("unknown preset split '{other}'"))),
        }
    }
}

/// One-qubit basis `sigma/sqrt2` in x, y, z order.
pub fn one_qubit_basis() -> OrthonormalBasis {
    OrthonormalBasis::pauli_bloch().to_orthonormal()
}

/// Qutrit basis `Omega_1..Omega_8` in the V-configuration labelling: the
/// (1,2) pair, the (1,2) population difference, the (0,1) pair, the (0,2)
/// pair, and `diag(-2, 1, 1)/sqrt6`.
pub fn qutrit_basis() -> OrthonormalBasis {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let sym = |j, k| (matrix_unit(3, j, k) + matrix_unit(3, k, j)) * c(s, 0.0);
    let asym = |j, k| (matrix_unit(3, j, k) * (-I) + matrix_unit(3, k, j) * I) * c(s, 0.0);
    let d3 = (matrix_unit(3, 1, 1) - matrix_unit(3, 2, 2)) * c(s, 0.0);
    let d8 = (matrix_unit(3, 0, 0) * c(-2.0, 0.0) + matrix_unit(3, 1, 1) + matrix_unit(3, 2, 2))
        * c(1.0 / 6f64.sqrt(), 0.0);
    let elements = vec![
        sym(1, 2),
        asym(1, 2),
        d3,
        sym(0, 1),
        asym(0, 1),
        sym(0, 2),
        asym(0, 2),
        d8,
    ];
    OrthonormalBasis::new(elements, Convention::Orthonormal).expect("qutrit basis is orthonormal")
}

/// Two-qubit labels matching [`two_qubit_basis`].
pub const TWO_QUBIT_LABELS: [&str; 15] = [
    "xI", "yI", "zI", "Ix", "Iy", "Iz", "xx", "xy", "xz", "yx", "yy", "yz", "zx", "zy", "zz",
];

/// Two-qubit basis: `sigma_i (x) I / 2`, `I (x) sigma_j / 2`, then
/// `sigma_i (x) sigma_j / 2` with i major.
pub fn two_qubit_basis() -> OrthonormalBasis {
    let id = crate::linalg::identity(2);
    let ps = paulis();
    let half = c(0.5, 0.0);
    let mut elements = Vec::with_capacity(15);
    for p in &ps {
        elements.push(kron(p, &id) * half);
    }
    for p in &ps {
        elements.push(kron(&id, p) * half);
    }
    for a in &ps {
        for b in &ps {
            elements.push(kron(a, b) * half);
        }
    }
    OrthonormalBasis::new(elements, Convention::Orthonormal).expect("two-qubit basis")
}

/// Basis and Cartan split used by each of the worked systems.
pub fn preset_split(kind: PresetKind) -> (Arc<OrthonormalBasis>, CartanSplit) {
    let (basis, p) = match kind {
        PresetKind::OneQubit => (one_qubit_basis(), vec![0, 1]),
        PresetKind::QutritV => (qutrit_basis(), vec![3, 4, 5, 6]),
        PresetKind::TwoQubit => (two_qubit_basis(), (6..15).collect()),
    };
    let basis = Arc::new(basis);
    let split = CartanSplit::new(Arc::clone(&basis), p).expect("preset indices are valid");
    (basis, split)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{sigma_x, sigma_y, sigma_z};

    fn close(a: &CMatrix, b: &CMatrix, tol: f64) -> bool {
        (a - b).iter().all(|z| z.norm() <= tol)
    }

    #[test]
    fn gellmann_two_is_scaled_pauli() {
        let b = gellmann_basis(2).unwrap();
        let s = c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        assert!(close(b.element(0), &(sigma_x() * s), 1e-15));
        assert!(close(b.element(1), &(sigma_y() * s), 1e-15));
        assert!(close(b.element(2), &(sigma_z() * s), 1e-15));
    }

    #[test]
    fn gellmann_rejects_small_dimension() {
        assert!(matches!(gellmann_basis(1), Err(Error::InvalidDimension(1))));
        assert!(matches!(gellmann_basis(0), Err(Error::InvalidDimension(0))));
    }

    #[test]
    fn gellmann_four_is_orthonormal() {
        let b = gellmann_basis(4).unwrap();
        assert_eq!(b.len(), 15);
        for j in 0..15 {
            assert!(b.element(j).trace().norm() < 1e-12);
            for k in 0..15 {
                let g = trace_product(b.element(j), b.element(k));
                let want = if j == k { 1.0 } else { 0.0 };
                assert!((g - c(want, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn gellmann_three_contains_qutrit_off_diagonals() {
        // The off-diagonal elements coincide up to ordering; the diagonal
        // pair spans the same Cartan subalgebra.
        let g = gellmann_basis(3).unwrap();
        let q = qutrit_basis();
        for (qi, gi) in [(3, 0), (5, 1), (0, 2), (4, 3), (6, 4), (1, 5)] {
            assert!(close(q.element(qi), g.element(gi), 1e-15), "Omega_{}", qi + 1);
        }
        for qi in [2, 7] {
            let coords = g.coordinates(q.element(qi));
            let diag_weight = coords[6] * coords[6] + coords[7] * coords[7];
            assert!((diag_weight - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn commutator_shape_error() {
        let a = CMatrix::zeros(2, 2);
        let b = CMatrix::zeros(3, 3);
        assert!(matches!(commutator(&a, &b), Err(Error::Shape { .. })));
        assert!(commutator(&sigma_x(), &sigma_x()).unwrap().iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn qutrit_commutator_projects_onto_cartan_subalgebra() {
        // [Omega_4, Omega_5] = i(|0><0| - |1><1|)/... projected on the basis
        let b = qutrit_basis();
        let x = commutator(b.element(3), b.element(4)).unwrap() * (-I);
        let coords = b.coordinates(&x);
        for j in [0, 1, 3, 4, 5, 6] {
            assert!(coords[j].abs() < 1e-14);
        }
        // -i[Omega_4, Omega_5] = |0><0| - |1><1|, diagonal (1, -1, 0)
        let diag = [1.0, -1.0, 0.0];
        let om3 = [0.0, 1.0, -1.0].map(|v: f64| v / 2f64.sqrt());
        let om8 = [-2.0, 1.0, 1.0].map(|v: f64| v / 6f64.sqrt());
        let c3: f64 = diag.iter().zip(om3).map(|(a, b)| a * b).sum();
        let c8: f64 = diag.iter().zip(om8).map(|(a, b)| a * b).sum();
        assert!((coords[2] - c3).abs() < 1e-14);
        assert!((coords[7] - c8).abs() < 1e-14);
        let rebuilt = b.combine(&coords);
        assert!(close(&rebuilt, &x, 1e-14));
    }

    #[test]
    fn adjoint_of_sigma_z_over_two_is_oz() {
        // Bloch-model generators are ad(-i sigma/2): O_z m = (-m_y, m_x, 0).
        let b = one_qubit_basis();
        let o = adjoint_rep(&(sigma_z() * c(0.5, 0.0)), &b).unwrap();
        let oz = RMatrix::from_row_slice(3, 3, &[0., -1., 0., 1., 0., 0., 0., 0., 0.]);
        assert!((o - &oz).amax() < 1e-15);
        let ox = adjoint_rep(&(sigma_x() * c(0.5, 0.0)), &b).unwrap();
        let oy = adjoint_rep(&(sigma_y() * c(0.5, 0.0)), &b).unwrap();
        // [O_z, O_x] = O_y, [O_z, O_y] = -O_x
        assert!((real_commutator(&oz, &ox) - &oy).amax() < 1e-15);
        assert!((real_commutator(&oz, &oy) + &ox).amax() < 1e-15);
        let bloch = OrthonormalBasis::pauli_bloch();
        let o_bloch = adjoint_rep(&(sigma_z() * c(0.5, 0.0)), &bloch).unwrap();
        assert!((o_bloch - oz).amax() < 1e-15);
    }

    #[test]
    fn adjoint_of_identity_vanishes_and_rejects_non_hermitian() {
        let b = gellmann_basis(3).unwrap();
        assert_eq!(adjoint_rep(&CMatrix::identity(3, 3), &b).unwrap().amax(), 0.0);
        let bad = matrix_unit(3, 0, 1);
        assert!(matches!(adjoint_rep(&bad, &b), Err(Error::InvalidInput(_))));
        assert!(matches!(
            adjoint_rep(&CMatrix::identity(2, 2), &b),
            Err(Error::Shape { .. })
        ));
    }

    #[test]
    fn presets_satisfy_closure() {
        for kind in [PresetKind::OneQubit, PresetKind::QutritV, PresetKind::TwoQubit] {
            let (_, split) = preset_split(kind);
            let r = verify_cartan(&split);
            assert!(r.ok, "{kind:?}: {:?}", r.violations);
        }
        let (basis, _) = preset_split(PresetKind::TwoQubit);
        assert!(verify_cartan(&CartanSplit::trivial(basis)).ok);
    }

    #[test]
    fn bad_split_reports_violations() {
        // sigma_z alone in p: [p, eps] = [z, x] ~ y leaks out of p.
        let b = Arc::new(one_qubit_basis());
        let split = CartanSplit::new(b, vec![2]).unwrap();
        let r = verify_cartan(&split);
        assert!(!r.ok);
        assert!(r.violations.iter().any(|v| v.rule == ClosureRule::EpsEps));
        assert!(r.violations.iter().all(|v| v.leaked_norm > 0.5));
    }

    #[test]
    fn split_rejects_bad_indices() {
        let b = Arc::new(one_qubit_basis());
        assert!(CartanSplit::new(Arc::clone(&b), vec![3]).is_err());
        assert!(CartanSplit::new(b, vec![1, 1]).is_err());
        assert!("bogus".parse::<PresetKind>().is_err());
    }

    #[test]
    fn bloch_convention_only_for_qubits() {
        let g = gellmann_basis(3).unwrap();
        assert!(OrthonormalBasis::new(g.elements().to_vec(), Convention::PauliBloch).is_err());
    }
}
