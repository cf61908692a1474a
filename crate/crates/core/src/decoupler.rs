//! Stationary solutions of the bilinear decoupling equations and the
//! sinusoidal control laws built from them.
//!
//! Unknowns are `xi` (control amplitudes at `t0`, one per control Hamiltonian)
//! and `eta` (the asymptotic eps-part of the state at `t0`). With `m1` the
//! p-part of the initial state the equations read
//!
//! ```text
//! F1 = sum_i xi_i O_i^12 eta + D11 m1 + D12 eta + g1 = 0
//! F2 = -sum_i xi_i (O_i^12)^T m1 + D21 m1 + D22 eta + g2 = 0
//! ```

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{expm, lstsq, to_complex, RMatrix, RVector, I};
use crate::sampling;
use crate::vectorizer::BlockForm;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Exact,
    LeastSquares,
    Failed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Plus,
    Minus,
}

#[derive(Debug, Clone, Serialize)]
pub struct StationarySolution {
    #[serde(serialize_with = "crate::linalg::serialize_vector")]
    pub xi: RVector,
    #[serde(serialize_with = "crate::linalg::serialize_vector")]
    pub eta: RVector,
    pub residual_norm: f64,
    pub status: SolveStatus,
    pub branch: Option<Branch>,
    /// Restart that produced the solution, when it came from Newton.
    pub restart: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    pub restarts: usize,
    pub max_iter: usize,
    pub tol: f64,
    pub allow_least_squares: bool,
    pub seed: u64,
    /// Solve even when H1/H2 fail.
    pub ignore_assumptions: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            restarts: 32,
            max_iter: 100,
            tol: 1e-10,
            allow_least_squares: false,
            seed: 0,
            ignore_assumptions: false,
        }
    }
}

fn check_dims(xi: &RVector, eta: &RVector, blocks: &BlockForm, m0_1: &RVector) -> Result<()> {
    let (m, k) = (blocks.p_dim, blocks.eps_dim());
    if xi.len() != m || m0_1.len() != m {
        return Err(Error::shape(
            format!("xi and m0_1 of length {m}"),
            format!("{} and {}", xi.len(), m0_1.len()),
        ));
    }
    if eta.len() != k {
        return Err(Error::shape(format!("eta of length {k}"), format!("{}", eta.len())));
    }
    Ok(())
}

pub fn residual(
    xi: &RVector,
    eta: &RVector,
    blocks: &BlockForm,
    m0_1: &RVector,
) -> Result<(RVector, RVector)> {
    check_dims(xi, eta, blocks, m0_1)?;
    let mut f1 = &blocks.d11 * m0_1 + &blocks.d12 * eta + &blocks.g1;
    let mut f2 = &blocks.d21 * m0_1 + &blocks.d22 * eta + &blocks.g2;
    for (o12, &x) in blocks.controls_o12.iter().zip(xi.iter()) {
        f1 += (o12 * eta) * x;
        f2 -= (o12.tr_mul(m0_1)) * x;
    }
    Ok((f1, f2))
}

/// Jacobian of `(F1, F2)` with respect to `(xi, eta)`.
pub fn residual_jacobian(
    xi: &RVector,
    eta: &RVector,
    blocks: &BlockForm,
    m0_1: &RVector,
) -> Result<RMatrix> {
    check_dims(xi, eta, blocks, m0_1)?;
    let (m, k) = (blocks.p_dim, blocks.eps_dim());
    let mut j = RMatrix::zeros(m + k, m + k);
    let mut df1_deta = blocks.d12.clone();
    for (i, (o12, &x)) in blocks.controls_o12.iter().zip(xi.iter()).enumerate() {
        j.view_mut((0, i), (m, 1)).copy_from(&(o12 * eta));
        j.view_mut((m, i), (k, 1)).copy_from(&(-o12.tr_mul(m0_1)));
        df1_deta += o12 * x;
    }
    j.view_mut((0, m), (m, k)).copy_from(&df1_deta);
    j.view_mut((m, m), (k, k)).copy_from(&blocks.d22);
    Ok(j)
}

struct Problem<'a> {
    blocks: &'a BlockForm,
    m0_1: &'a RVector,
}

impl Problem<'_> {
    fn split(&self, z: &RVector) -> (RVector, RVector) {
        let m = self.blocks.p_dim;
        (z.rows(0, m).into_owned(), z.rows(m, z.len() - m).into_owned())
    }

    fn f(&self, z: &RVector) -> RVector {
        let (xi, eta) = self.split(z);
        let (f1, f2) = residual(&xi, &eta, self.blocks, self.m0_1).expect("checked dims");
        join(&f1, &f2)
    }

    fn jac(&self, z: &RVector) -> RMatrix {
        let (xi, eta) = self.split(z);
        residual_jacobian(&xi, &eta, self.blocks, self.m0_1).expect("checked dims")
    }

    /// `eta` solving `F2 = 0` at `xi = 0`.
    fn uncontrolled_eta(&self) -> RVector {
        let b = &self.blocks.d21 * self.m0_1 + &self.blocks.g2;
        lstsq(&self.blocks.d22, &(-b))
    }

    /// Newton with backtracking; keeps iterating past `tol` while the
    /// residual still drops.
    fn newton(&self, mut z: RVector, max_iter: usize, tol: f64) -> (RVector, f64) {
        let mut r = self.f(&z).norm();
        for _ in 0..max_iter {
            if !r.is_finite() {
                break;
            }
            let f = self.f(&z);
            let step = lstsq(&self.jac(&z), &(-f));
            let mut alpha = 1.0;
            let mut accepted = None;
            for _ in 0..40 {
                let trial = &z + &step * alpha;
                let rt = self.f(&trial).norm();
                if rt < r * (1.0 - 1e-4 * alpha) || (r <= tol && rt < r) {
                    accepted = Some((trial, rt));
                    break;
                }
                alpha *= 0.5;
            }
            match accepted {
                Some((zt, rt)) => {
                    let stalled = r <= tol && rt > 0.5 * r;
                    z = zt;
                    r = rt;
                    if stalled || r == 0.0 {
                        break;
                    }
                }
                None => break,
            }
        }
        (z, r)
    }

    /// Levenberg-Marquardt on `|F|^2 / 2`; stops when the gradient norm
    /// reaches 1e-10 or after 500 iterations.
    fn levenberg_marquardt(&self, mut z: RVector) -> (RVector, f64) {
        let mut f = self.f(&z);
        let mut cost = f.norm_squared();
        let n = z.len();
        let mut lambda = 1e-3;
        for _ in 0..500 {
            let j = self.jac(&z);
            let grad = j.tr_mul(&f);
            if grad.norm() <= 1e-10 {
                break;
            }
            let jtj = j.tr_mul(&j);
            let scale = jtj.diagonal().amax().max(1e-12);
            let mut improved = false;
            for _ in 0..30 {
                let lhs = &jtj + RMatrix::identity(n, n) * (lambda * scale);
                let Some(step) = lhs.cholesky().map(|ch| ch.solve(&(-&grad))) else {
                    lambda *= 4.0;
                    continue;
                };
                let trial = &z + &step;
                let ft = self.f(&trial);
                let ct = ft.norm_squared();
                if ct < cost {
                    z = trial;
                    f = ft;
                    cost = ct;
                    lambda = (lambda / 3.0).max(1e-15);
                    improved = true;
                    break;
                }
                lambda *= 2.0;
            }
            if !improved {
                break;
            }
        }
        (z, cost.sqrt())
    }

    /// Minimum-norm `xi` at fixed `eta`; `F` is affine in `xi`.
    fn min_norm_xi(&self, eta: &RVector) -> RVector {
        let m = self.blocks.p_dim;
        let zero = RVector::zeros(m);
        let base = self.f(&join(&zero, eta));
        let mut a = RMatrix::zeros(base.len(), m);
        for i in 0..m {
            let mut e = zero.clone();
            e[i] = 1.0;
            a.set_column(i, &(self.f(&join(&e, eta)) - &base));
        }
        lstsq(&a, &(-base))
    }
}

fn join(a: &RVector, b: &RVector) -> RVector {
    let mut out = RVector::zeros(a.len() + b.len());
    out.rows_mut(0, a.len()).copy_from(a);
    out.rows_mut(a.len(), b.len()).copy_from(b);
    out
}

/// Newton with seeded restarts, then optionally a least-squares fallback.
///
/// Restart 0 starts from `xi = 0` and the uncontrolled `eta`; later restarts
/// perturb that point randomly. The first restart (by index) that reaches
/// `tol` wins. Among the exact solutions sharing its `eta`, the one with the
/// smallest `|xi|` is returned.
pub fn solve_stationary(
    blocks: &BlockForm,
    m0_1: &RVector,
    options: &SolverOptions,
) -> Result<StationarySolution> {
    if !options.ignore_assumptions {
        if let Some(err) = blocks.assumptions.to_error() {
            return Err(err);
        }
    }
    let m = blocks.p_dim;
    check_dims(
        &RVector::zeros(m),
        &RVector::zeros(blocks.eps_dim()),
        blocks,
        m0_1,
    )?;
    let problem = Problem { blocks, m0_1 };
    let eta0 = problem.uncontrolled_eta();
    let start = join(&RVector::zeros(m), &eta0);
    let scale = blocks
        .d_full()
        .amax()
        .max(blocks.g_full().amax())
        .max(1e-3);

    let mut rng = sampling::rng(options.seed);
    let mut best: Option<(RVector, f64)> = None;
    for restart in 0..options.restarts.max(1) {
        let z0 = if restart == 0 {
            start.clone()
        } else {
            let a = rng.gen_range(0.2..2.0) * scale;
            let b = rng.gen_range(0.1..1.0);
            let dxi = sampling::normal_vector(&mut rng, m) * a;
            let deta = sampling::normal_vector(&mut rng, eta0.len()) * b;
            join(&dxi, &(&eta0 + deta))
        };
        let (z, r) = problem.newton(z0, options.max_iter, options.tol);
        if r <= options.tol {
            let (xi, eta) = problem.split(&z);
            let polished = problem.min_norm_xi(&eta);
            let rp = problem.f(&join(&polished, &eta)).norm();
            let (xi, r) = if rp <= options.tol { (polished, rp) } else { (xi, r) };
            return Ok(StationarySolution {
                xi,
                eta,
                residual_norm: r,
                status: SolveStatus::Exact,
                branch: None,
                restart: Some(restart),
            });
        }
        if r.is_finite() && best.as_ref().map_or(true, |(_, rb)| r < *rb) {
            best = Some((z, r));
        }
    }

    let start_res = problem.f(&start).norm();
    let (z, r) = match best {
        Some((z, r)) if r < start_res => (z, r),
        _ => (start.clone(), start_res),
    };
    if !options.allow_least_squares {
        let (xi, eta) = problem.split(&z);
        return Ok(StationarySolution {
            xi,
            eta,
            residual_norm: r,
            status: SolveStatus::Failed,
            branch: None,
            restart: None,
        });
    }
    let (zl, rl) = problem.levenberg_marquardt(z.clone());
    let (z, r) = if rl <= r { (zl, rl) } else { (z, r) };
    let (xi, eta) = problem.split(&z);
    Ok(StationarySolution {
        xi,
        eta,
        residual_norm: r,
        status: if r <= options.tol {
            SolveStatus::Exact
        } else {
            SolveStatus::LeastSquares
        },
        branch: None,
        restart: None,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct OneQubitAnalytic {
    pub solution: StationarySolution,
    pub amplitude: f64,
    /// `atan2(xi_2, xi_1)`.
    pub phase: f64,
    /// Set when the state carries no coherence and no control is needed.
    pub degenerate: bool,
}

/// Stationary residual of the damped qubit in Bloch coordinates, with
/// `D = diag(-G/2, -G/2, -G)`, `g = (0, 0, -G)` and controls `sigma/2`.
pub fn one_qubit_residual(m0: [f64; 3], gamma: f64, xi: [f64; 2], eta: f64) -> [f64; 3] {
    let [x, y, _] = m0;
    [
        xi[1] * eta - gamma * x / 2.0,
        -xi[0] * eta - gamma * y / 2.0,
        xi[0] * y - xi[1] * x - gamma * eta - gamma,
    ]
}

/// Closed-form stationary solution for the damped qubit (Bloch coordinates).
///
/// With `C^2 = x^2 + y^2` and `s = sqrt(1 - 2C^2)`:
/// `xi = G (1 +- s) / (2C^2) * (y, -x)` and `eta = (-1 +- s) / 2`.
pub fn analytic_one_qubit(m0: [f64; 3], gamma: f64, branch: Branch) -> Result<OneQubitAnalytic> {
    let norm2: f64 = m0.iter().map(|v| v * v).sum();
    if norm2 > 1.0 + 1e-12 || m0.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidState(format!(
            "Bloch vector of norm {} is outside the ball",
            norm2.sqrt()
        )));
    }
    if !(gamma > 0.0) {
        return Err(Error::InvalidInput(format!("rate must be positive, got {gamma}")));
    }
    let c2 = m0[0] * m0[0] + m0[1] * m0[1];
    if c2 > 0.5 + 1e-12 {
        return Err(Error::Infeasible(format!(
            "coherence C0^2 = {c2} exceeds 1/2"
        )));
    }
    let make = |xi: [f64; 2], eta: f64, branch| {
        let res = one_qubit_residual(m0, gamma, xi, eta);
        StationarySolution {
            xi: RVector::from_row_slice(&xi),
            eta: RVector::from_element(1, eta),
            residual_norm: res.iter().map(|v| v * v).sum::<f64>().sqrt(),
            status: SolveStatus::Exact,
            branch,
            restart: None,
        }
    };
    if c2 == 0.0 {
        return Ok(OneQubitAnalytic {
            solution: make([0.0, 0.0], -1.0, None),
            amplitude: 0.0,
            phase: 0.0,
            degenerate: true,
        });
    }
    let s = (1.0 - 2.0 * c2).max(0.0).sqrt();
    let sign = match branch {
        Branch::Plus => 1.0,
        Branch::Minus => -1.0,
    };
    let factor = gamma * (1.0 + sign * s) / (2.0 * c2);
    let xi = [factor * m0[1], -factor * m0[0]];
    let eta = (-1.0 + sign * s) / 2.0;
    Ok(OneQubitAnalytic {
        solution: make(xi, eta, Some(branch)),
        amplitude: xi[0].hypot(xi[1]),
        phase: xi[1].atan2(xi[0]),
        degenerate: false,
    })
}

/// `u(t) = F^{-T} exp(O_0^11 (t - t0)) F^T xi`, with `F` the control frame.
///
/// The exponential is evaluated through the eigenmodes of the Hermitian
/// matrix `i O_0^11`, precomputed at construction.
#[derive(Debug, Clone, Serialize)]
pub struct ControlLaw {
    #[serde(serialize_with = "crate::linalg::serialize_vector")]
    pub xi: RVector,
    #[serde(serialize_with = "crate::linalg::serialize_matrix")]
    pub o0_11: RMatrix,
    pub t0: f64,
    #[serde(serialize_with = "crate::linalg::serialize_matrix")]
    frame_t: RMatrix,
    #[serde(serialize_with = "crate::linalg::serialize_matrix")]
    frame_t_inv: RMatrix,
    #[serde(skip)]
    modes: Vec<(f64, CVector)>,
}

type CVector = nalgebra::DVector<Complex64>;

impl ControlLaw {
    pub fn new(xi: RVector, blocks: &BlockForm, t0: f64) -> Result<Self> {
        if xi.len() != blocks.p_dim {
            return Err(Error::shape(
                format!("xi of length {}", blocks.p_dim),
                format!("{}", xi.len()),
            ));
        }
        let frame_t = blocks.frame.transpose();
        let frame_t_inv = if blocks.p_dim == 0 {
            RMatrix::zeros(0, 0)
        } else {
            frame_t
                .clone()
                .try_inverse()
                .ok_or_else(|| Error::Singularity("control frame is singular".into()))?
        };
        let modes = eigenmodes(&blocks.o0_11, &frame_t, &frame_t_inv, &xi);
        Ok(Self {
            xi,
            o0_11: blocks.o0_11.clone(),
            t0,
            frame_t,
            frame_t_inv,
            modes,
        })
    }

    /// Generator of `u` in control coordinates.
    pub fn generator(&self) -> RMatrix {
        &self.frame_t_inv * &self.o0_11 * &self.frame_t
    }

    pub fn len(&self) -> usize {
        self.xi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xi.is_empty()
    }
}

/// `exp(O t) = sum_k exp(-i lambda_k t) v_k v_k^dagger` for antisymmetric `O`,
/// with eigenvalues closer than 1e-9 merged into one mode.
fn eigenmodes(
    o11: &RMatrix,
    frame_t: &RMatrix,
    frame_t_inv: &RMatrix,
    xi: &RVector,
) -> Vec<(f64, CVector)> {
    let m = xi.len();
    if m == 0 {
        return Vec::new();
    }
    let eig = (to_complex(o11) * I).symmetric_eigen();
    let v0 = (frame_t * xi).map(|x| Complex64::new(x, 0.0));
    let back = to_complex(frame_t_inv);
    let mut modes: Vec<(f64, CVector)> = Vec::new();
    for k in 0..m {
        let lambda = eig.eigenvalues[k];
        let vk = eig.eigenvectors.column(k).into_owned();
        let weight = vk.dotc(&v0);
        let contrib = &back * (vk * weight);
        match modes
            .iter_mut()
            .find(|(l, _)| (l - lambda).abs() <= 1e-9 * (1.0 + lambda.abs()))
        {
            Some((_, acc)) => *acc += contrib,
            None => modes.push((lambda, contrib)),
        }
    }
    modes
}

pub fn control_signal(law: &ControlLaw, t: f64) -> RVector {
    let tau = t - law.t0;
    let mut u = RVector::zeros(law.len());
    for (lambda, w) in &law.modes {
        let phase = Complex64::new(0.0, -lambda * tau).exp();
        for (ui, wi) in u.iter_mut().zip(w.iter()) {
            *ui += (wi * phase).re;
        }
    }
    u
}

/// Same as [`control_signal`] through a dense matrix exponential.
pub fn control_signal_expm(law: &ControlLaw, t: f64) -> RVector {
    if law.is_empty() {
        return RVector::zeros(0);
    }
    let rot = expm(&(&law.o0_11 * (t - law.t0)));
    &law.frame_t_inv * (rot * (&law.frame_t * &law.xi))
}

#[derive(Debug, Clone, Serialize)]
pub struct ChannelTerm {
    pub frequency: f64,
    pub amplitude: f64,
    /// `u_i` contains `amplitude * cos(frequency (t - t0) + phase)`.
    pub phase: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ChannelSpectrum {
    pub channel: usize,
    /// Zero-frequency part.
    pub offset: f64,
    pub terms: Vec<ChannelTerm>,
}

impl ChannelSpectrum {
    /// Amplitude of the largest oscillating term, or `|offset|` if none.
    pub fn peak(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| t.amplitude)
            .fold(self.offset.abs(), f64::max)
    }

    pub fn is_active(&self, tol: f64) -> bool {
        self.offset.abs() > tol || self.terms.iter().any(|t| t.amplitude > tol)
    }
}

/// Splits each control channel into a constant and sinusoids at the
/// eigenfrequencies of `O_0^11`. Eigenvalues closer than 1e-9 are grouped.
pub fn spectrum(law: &ControlLaw) -> Vec<ChannelSpectrum> {
    let m = law.len();
    let groups = &law.modes;
    (0..m)
        .map(|i| {
            let mut offset = 0.0;
            let mut terms = Vec::new();
            for (lambda, w) in groups {
                if lambda.abs() <= 1e-9 {
                    offset += w[i].re;
                } else if *lambda < 0.0 {
                    let amplitude = 2.0 * w[i].norm();
                    if amplitude > 1e-14 {
                        terms.push(ChannelTerm {
                            frequency: -lambda,
                            amplitude,
                            phase: w[i].arg(),
                        });
                    }
                }
            }
            terms.sort_by(|a, b| a.frequency.total_cmp(&b.frequency));
            ChannelSpectrum {
                channel: i,
                offset,
                terms,
            }
        })
        .collect()
}

/// `m_inf(t) = (exp(O_0^11 (t-t0)) m0_1, exp(O_0^22 (t-t0)) eta)` in the
/// original coordinate order.
pub fn stationary_trajectory(
    m0_1: &RVector,
    eta: &RVector,
    blocks: &BlockForm,
    t0: f64,
    t: f64,
) -> Result<RVector> {
    check_dims(&RVector::zeros(blocks.p_dim), eta, blocks, m0_1)?;
    let tau = t - t0;
    let m1 = expm(&(&blocks.o0_11 * tau)) * m0_1;
    let m2 = expm(&(&blocks.o0_22 * tau)) * eta;
    Ok(blocks.unpermute(&m1, &m2))
}
