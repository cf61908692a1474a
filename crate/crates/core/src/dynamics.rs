//! Trajectories of the vectorized system, the density-matrix cross-check,
//! the exact-decoupling comparator and the metrics derived from them.

use serde::{Deserialize, Serialize};

use crate::algebra::{Convention, OrthonormalBasis};
use crate::error::{Error, Result};
use crate::linalg::{c, hermitian_eigenvalues, CMatrix, RVector};
use crate::ode::{self, check_grid, Method};
use crate::vectorizer::{rho_to_coherence, OpenSystemSpec, VectorizedSystem};

/// Trace tolerance of the density-matrix integrator.
pub const ORACLE_TRACE_TOL: f64 = 1e-9;
/// Most negative eigenvalue tolerated in the density-matrix integrator.
pub const ORACLE_EIGEN_TOL: f64 = -1e-8;
/// `|m_z|` below this value counts as a divergence of the exact-decoupling laws.
pub const LIDAR_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    times: Vec<f64>,
}

impl TimeGrid {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        check_grid(&times)?;
        Ok(Self { times })
    }

    /// `t0, t0 + step, ...` up to and including `t_end` (within 1e-9 steps).
    pub fn uniform(t0: f64, t_end: f64, step: f64) -> Result<Self> {
        if !(step > 0.0) || !(t_end >= t0) || !t0.is_finite() || !t_end.is_finite() {
            return Err(Error::Config(format!(
                "invalid time grid t0 = {t0}, t_end = {t_end}, step = {step}"
            )));
        }
        let n = ((t_end - t0) / step + 1e-9).floor() as usize;
        Self::new((0..=n).map(|k| t0 + k as f64 * step).collect())
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn t0(&self) -> f64 {
        self.times[0]
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrajectoryKind {
    Controlled,
    Uncontrolled,
    Target,
    Stationary,
    Oracle,
    Lidar,
}

impl TrajectoryKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TrajectoryKind::Controlled => "controlled",
            TrajectoryKind::Uncontrolled => "uncontrolled",
            TrajectoryKind::Target => "target",
            TrajectoryKind::Stationary => "stationary",
            TrajectoryKind::Oracle => "oracle",
            TrajectoryKind::Lidar => "lidar",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<RVector>,
    pub kind: TrajectoryKind,
    pub convention: Convention,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> &RVector {
        self.states.last().expect("trajectories are never empty")
    }

    /// Largest entrywise difference against another trajectory on the same grid.
    pub fn sup_distance(&self, other: &Trajectory) -> Result<f64> {
        same_grid(self, other)?;
        Ok(self
            .states
            .iter()
            .zip(&other.states)
            .map(|(a, b)| (a - b).amax())
            .fold(0.0, f64::max))
    }
}

/// How the control inputs are driven during integration.
pub enum Drive<'a> {
    /// No control, full dissipative dynamics.
    Free,
    /// Unperturbed dynamics `dm/dt = O_0 m`.
    Target,
    /// Full dynamics with the given control signal.
    Controlled(&'a dyn Fn(f64) -> RVector),
}

pub fn integrate(
    vs: &VectorizedSystem,
    drive: Drive<'_>,
    m0: &RVector,
    grid: &TimeGrid,
    method: Method,
) -> Result<Trajectory> {
    if m0.len() != vs.len() {
        return Err(Error::shape(
            format!("{} coordinates", vs.len()),
            format!("{}", m0.len()),
        ));
    }
    let (states, kind) = match drive {
        Drive::Free => (
            ode::solve(|_, m| vs.rhs(m, &[]), m0, grid.times(), method)?,
            TrajectoryKind::Uncontrolled,
        ),
        Drive::Target => (
            ode::solve(|_, m| &vs.o0 * m, m0, grid.times(), method)?,
            TrajectoryKind::Target,
        ),
        Drive::Controlled(u) => (
            ode::solve(
                |t, m| vs.rhs(m, u(t).as_slice()),
                m0,
                grid.times(),
                method,
            )?,
            TrajectoryKind::Controlled,
        ),
    };
    Ok(Trajectory {
        times: grid.times().to_vec(),
        states,
        kind,
        convention: vs.basis().convention(),
    })
}

#[derive(Debug, Clone)]
pub struct DensityTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<CMatrix>,
    pub max_trace_error: f64,
    pub min_eigenvalue: f64,
}

impl DensityTrajectory {
    pub fn to_coherence(&self, basis: &OrthonormalBasis) -> Result<Trajectory> {
        let states = self
            .states
            .iter()
            .map(|rho| rho_to_coherence(rho, basis).map(|m| m.m))
            .collect::<Result<Vec<_>>>()?;
        Ok(Trajectory {
            times: self.times.clone(),
            states,
            kind: TrajectoryKind::Oracle,
            convention: basis.convention(),
        })
    }
}

fn pack(rho: &CMatrix) -> RVector {
    let n = rho.len();
    RVector::from_fn(2 * n, |k, _| {
        if k < n {
            rho[k].re
        } else {
            rho[k - n].im
        }
    })
}

fn unpack(v: &RVector, dim: usize) -> CMatrix {
    let n = dim * dim;
    CMatrix::from_fn(dim, dim, |i, j| {
        let k = i + j * dim;
        c(v[k], v[n + k])
    })
}

/// Integrates the master equation directly on density matrices.
pub fn integrate_density_oracle(
    spec: &OpenSystemSpec,
    u: Option<&dyn Fn(f64) -> RVector>,
    rho0: &CMatrix,
    grid: &TimeGrid,
    method: Method,
) -> Result<DensityTrajectory> {
    let dim = spec.dim();
    if rho0.nrows() != dim || rho0.ncols() != dim {
        return Err(Error::shape(
            format!("{dim}x{dim}"),
            format!("{}x{}", rho0.nrows(), rho0.ncols()),
        ));
    }
    if (rho0.trace() - c(1.0, 0.0)).norm() > 1e-10 {
        return Err(Error::InvalidState("initial state must have unit trace".into()));
    }
    if hermitian_eigenvalues(rho0)[0] < ORACLE_EIGEN_TOL {
        return Err(Error::InvalidState("initial state is not positive".into()));
    }
    let rhs = |t: f64, v: &RVector| {
        let rho = unpack(v, dim);
        let drho = match u {
            Some(u) => spec.rhs(&rho, u(t).as_slice()),
            None => spec.rhs(&rho, &[]),
        };
        pack(&drho)
    };
    let raw = ode::solve(rhs, &pack(rho0), grid.times(), method)?;
    let states: Vec<CMatrix> = raw.iter().map(|v| unpack(v, dim)).collect();
    let mut max_trace_error: f64 = 0.0;
    let mut min_eigenvalue = f64::INFINITY;
    for (t, rho) in grid.times().iter().zip(&states) {
        let tr_err = (rho.trace() - c(1.0, 0.0)).norm();
        let ev = hermitian_eigenvalues(rho)[0];
        max_trace_error = max_trace_error.max(tr_err);
        min_eigenvalue = min_eigenvalue.min(ev);
        if tr_err > ORACLE_TRACE_TOL || ev < ORACLE_EIGEN_TOL {
            return Err(Error::Integration(format!(
                "density matrix left the state space at t = {t} (trace error {tr_err:.3e}, min eigenvalue {ev:.3e})"
            )));
        }
    }
    Ok(DensityTrajectory {
        times: grid.times().to_vec(),
        states,
        max_trace_error,
        min_eigenvalue,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OneQubitParams {
    pub omega: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LidarStatus {
    Convergent,
    Diverged,
}

#[derive(Debug, Clone)]
pub struct LidarRun {
    /// Bloch vectors up to the divergence (or the whole grid).
    pub trajectory: Trajectory,
    /// `(u_x, u_y)` on the same grid points as `trajectory`.
    pub controls: Vec<[f64; 2]>,
    pub status: LidarStatus,
    pub divergence_time: Option<f64>,
    pub predicted: LidarStatus,
}

/// Outcome predicted for the exact-decoupling laws: convergent iff
/// `C0^2 <= 1/2` and `m_z0 < (-1 + sqrt(1 - 2 C0^2)) / 2`.
pub fn lidar_prediction(m0: [f64; 3]) -> LidarStatus {
    let c2 = m0[0] * m0[0] + m0[1] * m0[1];
    if c2 > 0.5 + 1e-12 {
        return LidarStatus::Diverged;
    }
    let upper = (-1.0 + (1.0 - 2.0 * c2).max(0.0).sqrt()) / 2.0;
    if m0[2] < upper {
        LidarStatus::Convergent
    } else {
        LidarStatus::Diverged
    }
}

/// Exact-decoupling laws `u_x = -G m_y / (2 m_z)`, `u_y = G m_x / (2 m_z)`
/// for the damped qubit in Bloch coordinates.
///
/// `(m_x, m_y)` follow the unperturbed rotation exactly, so only `m_z` is
/// integrated: `m_z dm_z/dt = -G (m_z^2 + m_z + C0^2 / 2)`. The run is marked
/// diverged once `|m_z|` falls below [`LIDAR_THRESHOLD`]; the crossing time is
/// located by bisection on the last substep.
pub fn lidar_controls(
    params: OneQubitParams,
    m0: [f64; 3],
    grid: &TimeGrid,
    step: f64,
) -> Result<LidarRun> {
    if m0[2] == 0.0 {
        return Err(Error::Singularity("m_z0 = 0 makes the laws singular".into()));
    }
    if !(step > 0.0) {
        return Err(Error::Config(format!("invalid step {step}")));
    }
    let OneQubitParams { omega, gamma } = params;
    let c2 = m0[0] * m0[0] + m0[1] * m0[1];
    let rhs = |_: f64, z: &RVector| {
        RVector::from_element(1, -gamma * (z[0] * z[0] + z[0] + c2 / 2.0) / z[0])
    };
    let bad = |z: f64| !z.is_finite() || z.abs() < LIDAR_THRESHOLD || z.signum() != m0[2].signum();
    let t0 = grid.t0();
    let rotate = |t: f64| {
        let (s, co) = (omega * (t - t0)).sin_cos();
        (m0[0] * co - m0[1] * s, m0[0] * s + m0[1] * co)
    };

    let mut z = RVector::from_element(1, m0[2]);
    let mut states = Vec::with_capacity(grid.len());
    let mut controls = Vec::with_capacity(grid.len());
    let mut divergence_time = None;
    let push = |t: f64, z: f64, states: &mut Vec<RVector>, controls: &mut Vec<[f64; 2]>| {
        let (x, y) = rotate(t);
        states.push(RVector::from_row_slice(&[x, y, z]));
        controls.push([-gamma * y / (2.0 * z), gamma * x / (2.0 * z)]);
    };
    push(t0, z[0], &mut states, &mut controls);
    'grid: for w in grid.times().windows(2) {
        let dt = w[1] - w[0];
        let n = ((dt / step) - 1e-9).ceil().max(1.0) as usize;
        let h = dt / n as f64;
        for k in 0..n {
            let t = w[0] + k as f64 * h;
            let next = ode::rk4_step(&mut { rhs }, t, &z, h);
            if bad(next[0]) {
                let (mut lo, mut hi) = (0.0, h);
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    let trial = ode::rk4_step(&mut { rhs }, t, &z, mid);
                    if bad(trial[0]) {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                divergence_time = Some(t + hi);
                break 'grid;
            }
            z = next;
        }
        push(w[1], z[0], &mut states, &mut controls);
    }
    let status = if divergence_time.is_some() {
        LidarStatus::Diverged
    } else {
        LidarStatus::Convergent
    };
    let times = grid.times()[..states.len()].to_vec();
    Ok(LidarRun {
        trajectory: Trajectory {
            times,
            states,
            kind: TrajectoryKind::Lidar,
            convention: Convention::PauliBloch,
        },
        controls,
        status,
        divergence_time,
        predicted: lidar_prediction(m0),
    })
}

fn same_grid(a: &Trajectory, b: &Trajectory) -> Result<()> {
    if a.times.len() != b.times.len()
        || a.times.iter().zip(&b.times).any(|(x, y)| (x - y).abs() > 1e-12)
    {
        return Err(Error::InvalidInput("trajectories are on different grids".into()));
    }
    Ok(())
}

/// Euclidean distance over `indices` at every grid point.
pub fn tracking_error(a: &Trajectory, b: &Trajectory, indices: &[usize]) -> Result<Vec<f64>> {
    same_grid(a, b)?;
    let dim = a.states.first().map_or(0, |s| s.len());
    if let Some(&bad) = indices.iter().find(|&&i| i >= dim) {
        return Err(Error::InvalidInput(format!("coordinate {bad} out of range")));
    }
    Ok(a.states
        .iter()
        .zip(&b.states)
        .map(|(x, y)| {
            indices
                .iter()
                .map(|&i| (x[i] - y[i]).powi(2))
                .sum::<f64>()
                .sqrt()
        })
        .collect())
}

/// Sum of squares of each index group at every grid point.
pub fn coherence_metrics(traj: &Trajectory, groups: &[Vec<usize>]) -> Result<Vec<Vec<f64>>> {
    let dim = traj.states.first().map_or(0, |s| s.len());
    groups
        .iter()
        .map(|g| {
            if let Some(&bad) = g.iter().find(|&&i| i >= dim) {
                return Err(Error::InvalidInput(format!("coordinate {bad} out of range")));
            }
            Ok(traj
                .states
                .iter()
                .map(|m| g.iter().map(|&i| m[i] * m[i]).sum())
                .collect())
        })
        .collect()
}

/// `E = max(2 sum_ij (m_ij)^2 - 1/2, 0)` with `m_ij = tr(sigma_i (x) sigma_j rho) / 2`.
pub fn entanglement_measure(rho: &CMatrix) -> Result<f64> {
    if rho.nrows() != 4 || rho.ncols() != 4 {
        return Err(Error::shape("4x4", format!("{}x{}", rho.nrows(), rho.ncols())));
    }
    let basis = crate::algebra::two_qubit_basis();
    let m = basis.coordinates(rho);
    entanglement_from_coherence(&m)
}

/// Same measure from coordinates in the two-qubit preset basis, whose last
/// nine entries are the correlation coordinates.
pub fn entanglement_from_coherence(m: &RVector) -> Result<f64> {
    if m.len() != 15 {
        return Err(Error::shape("15 coordinates", format!("{}", m.len())));
    }
    let s: f64 = m.rows(6, 9).iter().map(|v| v * v).sum();
    Ok((2.0 * s - 0.5).max(0.0))
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub holds: bool,
    /// Largest `|a - b|(t) / (exp(-d_min (t - t0)) |a - b|(t0))`.
    pub worst_ratio: f64,
    pub first_violation: Option<f64>,
}

/// Checks `|a(t) - b(t)| <= (1 + 1e-6) exp(-d_min (t - t0)) |a(t0) - b(t0)|`.
pub fn convergence_bound_check(a: &Trajectory, b: &Trajectory, d_min: f64) -> Result<BoundReport> {
    same_grid(a, b)?;
    let t0 = a.times[0];
    let d0 = (&a.states[0] - &b.states[0]).norm();
    let mut worst_ratio: f64 = 0.0;
    let mut first_violation = None;
    for ((t, x), y) in a.times.iter().zip(&a.states).zip(&b.states) {
        let d = (x - y).norm();
        let bound = (-d_min * (t - t0)).exp() * d0;
        let ratio = if bound > 0.0 {
            d / bound
        } else if d == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        worst_ratio = worst_ratio.max(ratio);
        if d > (1.0 + 1e-6) * bound && first_violation.is_none() {
            first_violation = Some(*t);
        }
    }
    Ok(BoundReport {
        holds: first_violation.is_none(),
        worst_ratio,
        first_violation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{expm, identity};
    use crate::presets::{bell_rho, half_mixed_bell_rho, one_qubit_spec, one_qubit_split};
    use crate::vectorizer::vectorize;

    #[test]
    fn uniform_grid() {
        let g = TimeGrid::uniform(0.0, 10.0, 0.01).unwrap();
        assert_eq!(g.len(), 1001);
        assert!((g.times()[1000] - 10.0).abs() < 1e-12);
        assert!(TimeGrid::uniform(0.0, 1.0, 0.0).is_err());
        assert!(TimeGrid::new(vec![]).is_err());
    }

    #[test]
    fn target_mode_matches_exponential() {
        let vs = vectorize(&one_qubit_spec(3.0, 0.2), &one_qubit_split(Convention::PauliBloch))
            .unwrap();
        let m0 = RVector::from_row_slice(&[0.5, 0.2, -0.3]);
        let grid = TimeGrid::uniform(0.0, 10.0, 0.5).unwrap();
        let tr = integrate(&vs, Drive::Target, &m0, &grid, Method::default()).unwrap();
        for (t, m) in tr.times.iter().zip(&tr.states) {
            assert!((expm(&(&vs.o0 * *t)) * &m0 - m).amax() < 1e-8);
        }
    }

    #[test]
    fn uncontrolled_qubit_relaxes_to_ground() {
        let vs = vectorize(&one_qubit_spec(3.0, 1.0), &one_qubit_split(Convention::PauliBloch))
            .unwrap();
        let m0 = RVector::from_row_slice(&[0.5, 0.2, 0.3]);
        let grid = TimeGrid::uniform(0.0, 40.0, 1.0).unwrap();
        let tr = integrate(&vs, Drive::Free, &m0, &grid, Method::rk45()).unwrap();
        assert!((tr.last() - RVector::from_row_slice(&[0.0, 0.0, -1.0])).amax() < 1e-8);
        // transverse coherence decays as exp(-G t)
        let c2 = coherence_metrics(&tr, &[vec![0, 1]]).unwrap();
        for (t, v) in tr.times.iter().zip(&c2[0]) {
            assert!((v - 0.29 * (-t).exp()).abs() < 1e-9);
        }
    }

    #[test]
    fn oracle_closed_system_is_unitary() {
        let spec = OpenSystemSpec::new(crate::linalg::sigma_x() * c(0.7, 0.0), vec![], vec![]).unwrap();
        let rho0 = crate::presets::bloch_to_rho([0.0, 0.3, 0.9]);
        let grid = TimeGrid::uniform(0.0, 3.0, 0.5).unwrap();
        let tr = integrate_density_oracle(&spec, None, &rho0, &grid, Method::default()).unwrap();
        for (t, rho) in tr.times.iter().zip(&tr.states) {
            let u = crate::linalg::expm_complex(&(spec.h0() * c(0.0, -*t)));
            let want = &u * &rho0 * u.adjoint();
            assert!((rho - want).iter().all(|z| z.norm() < 1e-9));
        }
    }

    #[test]
    fn oracle_rejects_bad_state() {
        let spec = one_qubit_spec(1.0, 1.0);
        let grid = TimeGrid::uniform(0.0, 1.0, 0.5).unwrap();
        let bad = identity(2);
        assert!(integrate_density_oracle(&spec, None, &bad, &grid, Method::default()).is_err());
    }

    #[test]
    fn lidar_reference_state_diverges() {
        let h = std::f64::consts::SQRT_2 / 2.0;
        let grid = TimeGrid::uniform(0.0, 10.0, 0.01).unwrap();
        let p = OneQubitParams {
            omega: 3.0,
            gamma: 0.2,
        };
        let run = lidar_controls(p, [h, 0.0, h], &grid, 1e-3).unwrap();
        assert_eq!(run.status, LidarStatus::Diverged);
        assert_eq!(run.predicted, LidarStatus::Diverged);
        let td = run.divergence_time.unwrap();
        assert!(td > 0.0 && td < 10.0);
        assert!(lidar_controls(p, [h, 0.0, 0.0], &grid, 1e-3).is_err());
    }

    #[test]
    fn lidar_initial_controls() {
        let grid = TimeGrid::uniform(0.0, 1.0, 0.1).unwrap();
        let p = OneQubitParams {
            omega: 3.0,
            gamma: 0.4,
        };
        let m0 = [0.3, 0.2, -0.9];
        let run = lidar_controls(p, m0, &grid, 1e-3).unwrap();
        let [ux, uy] = run.controls[0];
        assert!((ux + 0.4 * 0.2 / (2.0 * -0.9)).abs() < 1e-15);
        assert!((uy - 0.4 * 0.3 / (2.0 * -0.9)).abs() < 1e-15);
    }

    #[test]
    fn entanglement_values() {
        assert_eq!(entanglement_measure(&(identity(4) * c(0.25, 0.0))).unwrap(), 0.0);
        assert!((entanglement_measure(&bell_rho()).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(entanglement_measure(&half_mixed_bell_rho()).unwrap(), 0.0);
        assert!(entanglement_measure(&identity(2)).is_err());
    }

    #[test]
    fn metrics_validate_inputs() {
        let tr = Trajectory {
            times: vec![0.0, 1.0],
            states: vec![RVector::from_row_slice(&[1.0, 0.0, 0.0]); 2],
            kind: TrajectoryKind::Target,
            convention: Convention::PauliBloch,
        };
        assert_eq!(tracking_error(&tr, &tr, &[0, 1]).unwrap(), vec![0.0, 0.0]);
        assert!(tracking_error(&tr, &tr, &[5]).is_err());
        assert_eq!(coherence_metrics(&tr, &[vec![0, 1]]).unwrap()[0], vec![1.0, 1.0]);
        let mut short = tr.clone();
        short.times.pop();
        short.states.pop();
        assert!(tracking_error(&tr, &short, &[0]).is_err());
        assert!(convergence_bound_check(&tr, &tr, 1.0).unwrap().holds);
    }
}
