//! Lindblad systems in coherence-vector form.
//!
//! For a state `rho = I/N + sum_k m_k Omega_k / tr(Omega_k^2)` the master
//! equation becomes `dm/dt = (O_0 + sum_i u_i O_i + D) m + g`.

use std::sync::Arc;

use serde::Serialize;

use crate::algebra::{adjoint_rep, CartanSplit, Convention, OrthonormalBasis, VERIFY_TOL};
use crate::error::{Error, Result};
use crate::linalg::{
    c, hermitian_defect, identity, real_part, symmetric_part_eigenvalues, trace_product, CMatrix,
    RMatrix, RVector, I,
};

/// Tolerance on trace and Hermiticity of user-supplied states and Hamiltonians.
pub const STATE_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct Lindblad {
    pub op: CMatrix,
    pub rate: f64,
}

#[derive(Debug, Clone)]
pub struct OpenSystemSpec {
    dim: usize,
    h0: CMatrix,
    controls: Vec<CMatrix>,
    lindblads: Vec<Lindblad>,
}

impl OpenSystemSpec {
    pub fn new(h0: CMatrix, controls: Vec<CMatrix>, lindblads: Vec<Lindblad>) -> Result<Self> {
        let dim = h0.nrows();
        if dim < 2 {
            return Err(Error::InvalidDimension(dim));
        }
        let square = |m: &CMatrix, what: &str| {
            if m.nrows() != dim || m.ncols() != dim {
                Err(Error::shape(
                    format!("{dim}x{dim}"),
                    format!("{}x{} for {what}", m.nrows(), m.ncols()),
                ))
            } else {
                Ok(())
            }
        };
        square(&h0, "H0")?;
        if hermitian_defect(&h0) > STATE_TOL {
            return Err(Error::InvalidInput("H0 is not Hermitian".into()));
        }
        for (i, h) in controls.iter().enumerate() {
            square(h, &format!("control {i}"))?;
            if hermitian_defect(h) > STATE_TOL {
                return Err(Error::InvalidInput(format!("control {i} is not Hermitian")));
            }
        }
        for (j, l) in lindblads.iter().enumerate() {
            square(&l.op, &format!("Lindblad operator {j}"))?;
            if !(l.rate > 0.0 && l.rate.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "rate {j} must be positive, got {}",
                    l.rate
                )));
            }
        }
        Ok(Self {
            dim,
            h0,
            controls,
            lindblads,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn h0(&self) -> &CMatrix {
        &self.h0
    }

    pub fn controls(&self) -> &[CMatrix] {
        &self.controls
    }

    pub fn lindblads(&self) -> &[Lindblad] {
        &self.lindblads
    }

    /// `H_0 + sum_i u_i H_i`.
    pub fn hamiltonian(&self, u: &[f64]) -> CMatrix {
        let mut h = self.h0.clone();
        for (hi, &ui) in self.controls.iter().zip(u) {
            h += hi * c(ui, 0.0);
        }
        h
    }

    /// `sum_j Gamma_j D[L_j] rho`.
    pub fn dissipator(&self, rho: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(self.dim, self.dim);
        for l in &self.lindblads {
            out += dissipator(&l.op, rho) * c(l.rate, 0.0);
        }
        out
    }

    /// Right side of the master equation.
    pub fn rhs(&self, rho: &CMatrix, u: &[f64]) -> CMatrix {
        let h = self.hamiltonian(u);
        (&h * rho - rho * &h) * (-I) + self.dissipator(rho)
    }
}

/// `L rho L^dagger - (L^dagger L rho + rho L^dagger L) / 2`.
pub fn dissipator(l: &CMatrix, rho: &CMatrix) -> CMatrix {
    let ld = l.adjoint();
    let ldl = &ld * l;
    l * rho * &ld - (&ldl * rho + rho * &ldl) * c(0.5, 0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoherenceVector {
    #[serde(serialize_with = "crate::linalg::serialize_vector")]
    pub m: RVector,
    pub convention: Convention,
}

impl CoherenceVector {
    pub fn new(m: RVector, convention: Convention) -> Self {
        Self { m, convention }
    }

    pub fn len(&self) -> usize {
        self.m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.m.is_empty()
    }

    /// `|m|^2 / tr(Omega^2) <= 1 - 1/N` up to `tol`.
    pub fn within_purity_bound(&self, dim: usize, tol: f64) -> bool {
        self.m.norm_squared() / self.convention.norm_sq() <= 1.0 - 1.0 / dim as f64 + tol
    }
}

/// `m_j = tr(Omega_j rho)`.
pub fn rho_to_coherence(rho: &CMatrix, basis: &OrthonormalBasis) -> Result<CoherenceVector> {
    if rho.nrows() != basis.dim() || rho.ncols() != basis.dim() {
        return Err(Error::shape(
            format!("{0}x{0}", basis.dim()),
            format!("{}x{}", rho.nrows(), rho.ncols()),
        ));
    }
    let tr = rho.trace();
    if (tr - c(1.0, 0.0)).norm() > STATE_TOL {
        return Err(Error::InvalidState(format!("trace is {tr}, expected 1")));
    }
    if hermitian_defect(rho) > STATE_TOL {
        return Err(Error::InvalidState("density matrix is not Hermitian".into()));
    }
    Ok(CoherenceVector::new(
        basis.coordinates(rho),
        basis.convention(),
    ))
}

/// `rho = I/N + sum_j m_j Omega_j / tr(Omega_j^2)`.
pub fn coherence_to_rho(m: &RVector, basis: &OrthonormalBasis) -> Result<CMatrix> {
    if m.len() != basis.len() {
        return Err(Error::shape(
            format!("{} coordinates", basis.len()),
            format!("{}", m.len()),
        ));
    }
    let n = basis.dim();
    Ok(identity(n) * c(1.0 / n as f64, 0.0) + basis.combine(m))
}

#[derive(Debug, Clone)]
pub struct VectorizedSystem {
    pub o0: RMatrix,
    pub controls_o: Vec<RMatrix>,
    pub d: RMatrix,
    pub g: RVector,
    pub split: CartanSplit,
    /// Traceless part of `H_0`, kept for the H3 projection.
    h0: CMatrix,
    /// Control Hamiltonians, kept for the control-frame extraction.
    controls_h: Vec<CMatrix>,
}

impl VectorizedSystem {
    pub fn basis(&self) -> &OrthonormalBasis {
        self.split.basis()
    }

    pub fn basis_arc(&self) -> Arc<OrthonormalBasis> {
        self.split.basis_arc()
    }

    pub fn dim(&self) -> usize {
        self.basis().dim()
    }

    /// Number of coherence-vector coordinates, `N^2 - 1`.
    pub fn len(&self) -> usize {
        self.o0.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `A(u) = O_0 + sum_i u_i O_i + D`.
    pub fn generator(&self, u: &[f64]) -> RMatrix {
        let mut a = &self.o0 + &self.d;
        for (o, &ui) in self.controls_o.iter().zip(u) {
            a += o * ui;
        }
        a
    }

    pub fn rhs(&self, m: &RVector, u: &[f64]) -> RVector {
        let mut out = &self.o0 * m + &self.d * m + &self.g;
        for (o, &ui) in self.controls_o.iter().zip(u) {
            out += (o * m) * ui;
        }
        out
    }

    /// `d_min`, minus the largest eigenvalue of the symmetric part of `D`.
    pub fn decay_rate(&self) -> f64 {
        symmetric_part_eigenvalues(&self.d)
            .last()
            .map(|v| -v)
            .unwrap_or(0.0)
    }
}

pub fn vectorize(spec: &OpenSystemSpec, split: &CartanSplit) -> Result<VectorizedSystem> {
    let basis = split.basis();
    let n = basis.dim();
    if spec.dim() != n {
        return Err(Error::shape(
            format!("system dimension {n}"),
            format!("{}", spec.dim()),
        ));
    }
    let o0 = adjoint_rep(spec.h0(), basis)?;
    let controls_o = spec
        .controls()
        .iter()
        .map(|h| adjoint_rep(h, basis))
        .collect::<Result<Vec<_>>>()?;

    let len = basis.len();
    let norm = basis.norm_sq();
    let mut d = CMatrix::zeros(len, len);
    let mut g = RVector::zeros(len);
    let mixed = identity(n) * c(1.0 / n as f64, 0.0);
    let drift = spec.dissipator(&mixed);
    for j in 0..len {
        g[j] = trace_product(basis.element(j), &drift).re;
    }
    if !spec.lindblads().is_empty() {
        for k in 0..len {
            let action = spec.dissipator(basis.element(k));
            for j in 0..len {
                d[(j, k)] = trace_product(basis.element(j), &action) / norm;
            }
        }
    }
    let (d, _) = real_part(&d);

    let tr = spec.h0().trace() / c(n as f64, 0.0);
    let h0 = spec.h0() - identity(n) * tr;
    Ok(VectorizedSystem {
        o0,
        controls_o,
        d,
        g,
        split: split.clone(),
        h0,
        controls_h: spec.controls().to_vec(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct AssumptionDetails {
    /// Frobenius norm of `[O_0, D]`.
    pub commutator_norm: f64,
    /// Euclidean norm of `O_0 g`.
    pub drift_norm: f64,
    /// Largest eigenvalue of `(D + D^T)/2`.
    pub max_sym_eigenvalue: f64,
    /// Frobenius norm of the p-component of `H_0`.
    pub h0_p_leakage: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AssumptionReport {
    pub h1: bool,
    pub h2: bool,
    pub h3: bool,
    pub details: AssumptionDetails,
}

impl AssumptionReport {
    pub fn all_ok(&self) -> bool {
        self.h1 && self.h2 && self.h3
    }

    /// First failing assumption as an error value.
    pub fn to_error(&self) -> Option<Error> {
        let d = &self.details;
        if !self.h1 {
            Some(Error::Assumption {
                assumption: "H1 (complete decoherence)",
                leakage: d.commutator_norm.max(d.drift_norm),
            })
        } else if !self.h2 {
            Some(Error::Assumption {
                assumption: "H2 (D < 0)",
                leakage: d.max_sym_eigenvalue,
            })
        } else if !self.h3 {
            Some(Error::Assumption {
                assumption: "H3 (H0 in eps)",
                leakage: d.h0_p_leakage,
            })
        } else {
            None
        }
    }
}

/// Frobenius norm of the component of a Hermitian matrix on the given indices.
fn component_norm(basis: &OrthonormalBasis, x: &CMatrix, indices: &[usize]) -> f64 {
    let coords = basis.coordinates(x);
    let n = basis.norm_sq();
    indices
        .iter()
        .map(|&j| coords[j] * coords[j] / n)
        .sum::<f64>()
        .sqrt()
}

pub fn check_assumptions(vs: &VectorizedSystem) -> AssumptionReport {
    let comm = &vs.o0 * &vs.d - &vs.d * &vs.o0;
    let commutator_norm = comm.norm();
    let drift_norm = (&vs.o0 * &vs.g).norm();
    let max_sym_eigenvalue = symmetric_part_eigenvalues(&vs.d)
        .last()
        .copied()
        .unwrap_or(f64::NEG_INFINITY);
    let h0_p_leakage = component_norm(vs.basis(), &vs.h0, vs.split.p_indices());
    AssumptionReport {
        h1: commutator_norm <= VERIFY_TOL && drift_norm <= VERIFY_TOL,
        h2: max_sym_eigenvalue < -1e-12,
        h3: h0_p_leakage <= VERIFY_TOL,
        details: AssumptionDetails {
            commutator_norm,
            drift_norm,
            max_sym_eigenvalue,
            h0_p_leakage,
        },
    }
}

/// The vectorized system in p-first coordinates, partitioned into blocks.
#[derive(Debug, Clone)]
pub struct BlockForm {
    /// `perm[k]` is the original index of permuted coordinate `k`.
    pub perm: Vec<usize>,
    /// Size of the p-part.
    pub p_dim: usize,
    pub o0_11: RMatrix,
    pub o0_22: RMatrix,
    /// Off-diagonal blocks of `O_0`; zero when H3 holds.
    pub o0_12: RMatrix,
    pub o0_21: RMatrix,
    /// Upper-right blocks of the control generators, one per control.
    pub controls_o12: Vec<RMatrix>,
    pub d11: RMatrix,
    pub d12: RMatrix,
    pub d21: RMatrix,
    pub d22: RMatrix,
    pub g1: RVector,
    pub g2: RVector,
    /// `frame[(i, j)]`: coordinate of control `i` on the `j`-th p element,
    /// normalized so that `sum_i u_i O_i = sum_j (frame^T u)_j ad(Omega_pj)`.
    pub frame: RMatrix,
    /// Generator of the control law in control coordinates,
    /// `frame^{-T} O_0^11 frame^T`.
    pub control_generator: RMatrix,
    /// Permuted full adjoint matrices of the p basis elements.
    pub p_generators: Vec<RMatrix>,
    pub assumptions: AssumptionReport,
}

impl BlockForm {
    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    pub fn eps_dim(&self) -> usize {
        self.len() - self.p_dim
    }

    /// Splits a vector in original ordering into its p and eps parts.
    pub fn permute(&self, m: &RVector) -> (RVector, RVector) {
        let m1 = RVector::from_fn(self.p_dim, |k, _| m[self.perm[k]]);
        let m2 = RVector::from_fn(self.eps_dim(), |k, _| m[self.perm[self.p_dim + k]]);
        (m1, m2)
    }

    /// Inverse of [`permute`](Self::permute).
    pub fn unpermute(&self, m1: &RVector, m2: &RVector) -> RVector {
        let mut out = RVector::zeros(self.len());
        for (k, &v) in m1.iter().enumerate() {
            out[self.perm[k]] = v;
        }
        for (k, &v) in m2.iter().enumerate() {
            out[self.perm[self.p_dim + k]] = v;
        }
        out
    }

    /// Reassembles the permuted `O_0`.
    pub fn o0_full(&self) -> RMatrix {
        assemble(&self.o0_11, &self.o0_12, &self.o0_21, &self.o0_22)
    }

    pub fn d_full(&self) -> RMatrix {
        assemble(&self.d11, &self.d12, &self.d21, &self.d22)
    }

    pub fn g_full(&self) -> RVector {
        let mut g = RVector::zeros(self.len());
        g.rows_mut(0, self.p_dim).copy_from(&self.g1);
        g.rows_mut(self.p_dim, self.eps_dim()).copy_from(&self.g2);
        g
    }

    /// Permuted full generator of control `i`, `[[0, O12], [-O12^T, 0]]`.
    pub fn control_full(&self, i: usize) -> RMatrix {
        let o12 = &self.controls_o12[i];
        let z11 = RMatrix::zeros(self.p_dim, self.p_dim);
        let z22 = RMatrix::zeros(self.eps_dim(), self.eps_dim());
        assemble(&z11, o12, &(-o12.transpose()), &z22)
    }

    /// Matrix `R` with `[O_0, O_j^p] = sum_k R_jk O_k^p`, obtained by
    /// projecting each commutator onto the p generators.
    pub fn commutator_relation(&self) -> RMatrix {
        let o0 = self.o0_full();
        let m = self.p_dim;
        let gram = RMatrix::from_fn(m, m, |a, b| {
            self.p_generators[a].dot(&self.p_generators[b])
        });
        let gram_inv = gram
            .try_inverse()
            .unwrap_or_else(|| RMatrix::zeros(m, m));
        let mut r = RMatrix::zeros(m, m);
        for j in 0..m {
            let comm = &o0 * &self.p_generators[j] - &self.p_generators[j] * &o0;
            let proj = RVector::from_fn(m, |k, _| comm.dot(&self.p_generators[k]));
            let coeffs = &gram_inv * proj;
            for k in 0..m {
                r[(j, k)] = coeffs[k];
            }
        }
        r
    }
}

fn assemble(a11: &RMatrix, a12: &RMatrix, a21: &RMatrix, a22: &RMatrix) -> RMatrix {
    let m = a11.nrows();
    let k = a22.nrows();
    let mut out = RMatrix::zeros(m + k, m + k);
    out.view_mut((0, 0), (m, m)).copy_from(a11);
    out.view_mut((0, m), (m, k)).copy_from(a12);
    out.view_mut((m, 0), (k, m)).copy_from(a21);
    out.view_mut((m, m), (k, k)).copy_from(a22);
    out
}

fn permuted(a: &RMatrix, perm: &[usize]) -> RMatrix {
    RMatrix::from_fn(perm.len(), perm.len(), |i, j| a[(perm[i], perm[j])])
}

/// Partitions the system into p-first blocks.
///
/// Fails with an assumption error when `H_0` leaks into p (H3) or when a
/// control Hamiltonian has a component outside p, and with an invalid-input
/// error when the controls do not form a frame of p.
pub fn block_split(vs: &VectorizedSystem) -> Result<BlockForm> {
    let assumptions = check_assumptions(vs);
    let split = &vs.split;
    let basis = vs.basis();
    let perm = split.permutation();
    let m = split.p_dim();
    let len = vs.len();
    let k = len - m;

    let o0p = permuted(&vs.o0, &perm);
    let o0_12 = o0p.view((0, m), (m, k)).into_owned();
    let o0_21 = o0p.view((m, 0), (k, m)).into_owned();
    let leakage = o0_12.norm().max(o0_21.norm());
    if leakage > VERIFY_TOL || !assumptions.h3 {
        return Err(Error::Assumption {
            assumption: "H3 (H0 in eps)",
            leakage: leakage.max(assumptions.details.h0_p_leakage),
        });
    }

    if vs.controls_o.len() != m {
        return Err(Error::InvalidInput(format!(
            "{} control Hamiltonians given but p has dimension {m}",
            vs.controls_o.len()
        )));
    }
    let norm = basis.norm_sq();
    let mut frame = RMatrix::zeros(m, m);
    for (i, h) in vs.controls_h.iter().enumerate() {
        let eps_leak = component_norm(basis, h, split.eps_indices());
        if eps_leak > VERIFY_TOL {
            return Err(Error::Assumption {
                assumption: "controls in p",
                leakage: eps_leak,
            });
        }
        let coords = basis.coordinates(h);
        for (j, &pj) in split.p_indices().iter().enumerate() {
            frame[(i, j)] = coords[pj] / norm;
        }
    }
    let frame_t_inv = if m == 0 {
        RMatrix::zeros(0, 0)
    } else {
        frame.transpose().try_inverse().ok_or_else(|| {
            Error::InvalidInput("control Hamiltonians do not span p".into())
        })?
    };

    let mut controls_o12 = Vec::with_capacity(m);
    for o in &vs.controls_o {
        let op = permuted(o, &perm);
        let diag = op.view((0, 0), (m, m)).norm().max(op.view((m, m), (k, k)).norm());
        if diag > VERIFY_TOL {
            return Err(Error::Assumption {
                assumption: "controls in p",
                leakage: diag,
            });
        }
        controls_o12.push(op.view((0, m), (m, k)).into_owned());
    }
    let p_generators = split
        .p_indices()
        .iter()
        .map(|&j| adjoint_rep(basis.element(j), basis).map(|o| permuted(&o, &perm)))
        .collect::<Result<Vec<_>>>()?;

    let dp = permuted(&vs.d, &perm);
    let gp = RVector::from_fn(len, |i, _| vs.g[perm[i]]);
    let o0_11 = o0p.view((0, 0), (m, m)).into_owned();
    let control_generator = &frame_t_inv * &o0_11 * frame.transpose();
    Ok(BlockForm {
        p_dim: m,
        o0_22: o0p.view((m, m), (k, k)).into_owned(),
        o0_11,
        o0_12,
        o0_21,
        controls_o12,
        d11: dp.view((0, 0), (m, m)).into_owned(),
        d12: dp.view((0, m), (m, k)).into_owned(),
        d21: dp.view((m, 0), (k, m)).into_owned(),
        d22: dp.view((m, m), (k, k)).into_owned(),
        g1: gp.rows(0, m).into_owned(),
        g2: gp.rows(m, k).into_owned(),
        frame,
        control_generator,
        p_generators,
        assumptions,
        perm,
    })
}
