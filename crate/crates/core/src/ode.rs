//! Explicit Runge-Kutta integrators sampled on a caller-supplied time grid.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::RVector;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Method {
    /// Classic fourth-order scheme; grid intervals are split into equal
    /// substeps no longer than `step`.
    Rk4 { step: f64 },
    /// Dormand-Prince 5(4) with mixed error control.
    Rk45 { rtol: f64, atol: f64 },
}

impl Default for Method {
    fn default() -> Self {
        Method::Rk4 { step: 1e-3 }
    }
}

impl Method {
    pub fn rk45() -> Self {
        Method::Rk45 {
            rtol: 1e-9,
            atol: 1e-12,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Method::Rk4 { step } => step > 0.0 && step.is_finite(),
            Method::Rk45 { rtol, atol } => rtol > 0.0 && atol > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid integrator settings {self:?}")))
        }
    }
}

/// Checks that `times` is non-empty, finite and strictly increasing.
pub fn check_grid(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::Config("time grid is empty".into()));
    }
    if times.iter().any(|t| !t.is_finite()) {
        return Err(Error::Config("time grid has non-finite entries".into()));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config("time grid is not strictly increasing".into()));
    }
    Ok(())
}

pub fn rk4_step<F>(f: &mut F, t: f64, y: &RVector, h: f64) -> RVector
where
    F: FnMut(f64, &RVector) -> RVector,
{
    let k1 = f(t, y);
    let k2 = f(t + h / 2.0, &(y + &k1 * (h / 2.0)));
    let k3 = f(t + h / 2.0, &(y + &k2 * (h / 2.0)));
    let k4 = f(t + h, &(y + &k3 * h));
    y + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
}

/// Integrates `dy/dt = f(t, y)` from `y0` at `times[0]` and returns the
/// state at every grid time.
pub fn solve<F>(mut f: F, y0: &RVector, times: &[f64], method: Method) -> Result<Vec<RVector>>
where
    F: FnMut(f64, &RVector) -> RVector,
{
    check_grid(times)?;
    method.validate()?;
    let mut out = Vec::with_capacity(times.len());
    out.push(y0.clone());
    match method {
        Method::Rk4 { step } => {
            let mut y = y0.clone();
            for w in times.windows(2) {
                let dt = w[1] - w[0];
                let n = ((dt / step) - 1e-9).ceil().max(1.0) as usize;
                let h = dt / n as f64;
                for k in 0..n {
                    y = rk4_step(&mut f, w[0] + k as f64 * h, &y, h);
                }
                if y.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Integration(format!(
                        "state became non-finite before t = {}",
                        w[1]
                    )));
                }
                out.push(y.clone());
            }
        }
        Method::Rk45 { rtol, atol } => {
            let mut dp = DormandPrince::new(rtol, atol, times[0], y0.clone(), &mut f);
            for &t in &times[1..] {
                dp.advance_to(&mut f, t)?;
                out.push(dp.y.clone());
            }
        }
    }
    Ok(out)
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

struct DormandPrince {
    rtol: f64,
    atol: f64,
    t: f64,
    y: RVector,
    k1: RVector,
    h: f64,
}

impl DormandPrince {
    fn new<F>(rtol: f64, atol: f64, t: f64, y: RVector, f: &mut F) -> Self
    where
        F: FnMut(f64, &RVector) -> RVector,
    {
        let k1 = f(t, &y);
        let scale = y.amax() * rtol + atol;
        let h = (0.01 * scale / k1.amax().max(1e-300)).clamp(1e-6, 0.1);
        Self {
            rtol,
            atol,
            t,
            y,
            k1,
            h,
        }
    }

    fn advance_to<F>(&mut self, f: &mut F, t_end: f64) -> Result<()>
    where
        F: FnMut(f64, &RVector) -> RVector,
    {
        let mut steps = 0usize;
        while self.t < t_end {
            steps += 1;
            if steps > 10_000_000 {
                return Err(Error::Integration("too many steps".into()));
            }
            let last = self.t + self.h >= t_end;
            let h = if last { t_end - self.t } else { self.h };
            if h <= 1e-14 * self.t.abs().max(1.0) && !last {
                return Err(Error::Integration(format!(
                    "step size underflow at t = {}",
                    self.t
                )));
            }
            let (t, y, k1) = (self.t, &self.y, &self.k1);
            let k2 = f(t + C2 * h, &(y + k1 * (A21 * h)));
            let k3 = f(t + C3 * h, &(y + (k1 * A31 + &k2 * A32) * h));
            let k4 = f(t + C4 * h, &(y + (k1 * A41 + &k2 * A42 + &k3 * A43) * h));
            let k5 = f(
                t + C5 * h,
                &(y + (k1 * A51 + &k2 * A52 + &k3 * A53 + &k4 * A54) * h),
            );
            let k6 = f(
                t + h,
                &(y + (k1 * A61 + &k2 * A62 + &k3 * A63 + &k4 * A64 + &k5 * A65) * h),
            );
            let y_new = y + (k1 * B1 + &k3 * B3 + &k4 * B4 + &k5 * B5 + &k6 * B6) * h;
            let k7 = f(t + h, &y_new);
            let err = (k1 * E1 + &k3 * E3 + &k4 * E4 + &k5 * E5 + &k6 * E6 + &k7 * E7) * h;
            let mut norm = 0.0;
            for i in 0..err.len() {
                let sc = self.atol + self.rtol * y[i].abs().max(y_new[i].abs());
                norm += (err[i] / sc).powi(2);
            }
            let norm = (norm / err.len().max(1) as f64).sqrt();
            if !norm.is_finite() {
                self.h *= 0.1;
                if self.h < 1e-14 * self.t.abs().max(1.0) {
                    return Err(Error::Integration(format!(
                        "non-finite state at t = {}",
                        self.t
                    )));
                }
                continue;
            }
            let factor = if norm == 0.0 {
                5.0
            } else {
                (0.9 * norm.powf(-0.2)).clamp(0.2, 5.0)
            };
            if norm <= 1.0 {
                self.t = if last { t_end } else { t + h };
                self.y = y_new;
                self.k1 = k7;
                if !last {
                    self.h = h * factor;
                }
            } else {
                self.h = h * factor.min(1.0);
                if self.h < 1e-14 * self.t.abs().max(1.0) {
                    return Err(Error::Integration(format!(
                        "step size underflow at t = {}",
                        self.t
                    )));
                }
            }
        }
        Ok(())
    }
}
