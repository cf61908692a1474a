//! Scenario configuration files and the shipped presets.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::algebra::{
    gellmann_basis, preset_split, CartanSplit, Convention, PresetKind, TWO_QUBIT_LABELS,
};
use crate::decoupler::{Branch, SolverOptions};
use crate::dynamics::TimeGrid;
use crate::error::{Error, Result};
use crate::linalg::{c, CMatrix, RVector};
use crate::ode::Method;
use crate::presets;
use crate::vectorizer::{coherence_to_rho, rho_to_coherence, Lindblad, OpenSystemSpec};

/// Complex matrix stored as separate real and imaginary row arrays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexMatrix {
    pub re: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub im: Vec<Vec<f64>>,
}

impl ComplexMatrix {
    pub fn from_matrix(m: &CMatrix) -> Self {
        let rows = |f: &dyn Fn(usize, usize) -> f64| -> Vec<Vec<f64>> {
            (0..m.nrows())
                .map(|i| (0..m.ncols()).map(|j| f(i, j)).collect())
                .collect()
        };
        let im = if m.iter().all(|z| z.im == 0.0) {
            Vec::new()
        } else {
            rows(&|i, j| m[(i, j)].im)
        };
        Self {
            re: rows(&|i, j| m[(i, j)].re),
            im,
        }
    }

    pub fn to_matrix(&self) -> Result<CMatrix> {
        let n = self.re.len();
        if n == 0 || self.re.iter().any(|r| r.len() != n) {
            return Err(Error::Config("matrix must be square and non-empty".into()));
        }
        if !self.im.is_empty() && (self.im.len() != n || self.im.iter().any(|r| r.len() != n)) {
            return Err(Error::Config("imaginary part has the wrong shape".into()));
        }
        Ok(CMatrix::from_fn(n, n, |i, j| {
            let im = self.im.get(i).map_or(0.0, |r| r[j]);
            c(self.re[i][j], im)
        }))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LindbladConfig {
    pub op: ComplexMatrix,
    pub rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisChoice {
    Gellmann,
    OneQubit,
    QutritV,
    TwoQubit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SystemConfig {
    OneQubit {
        omega: f64,
        gamma: f64,
        convention: Convention,
    },
    QutritV {
        gamma: f64,
    },
    TwoQubit {
        omega1: f64,
        omega2: f64,
        gamma: f64,
    },
    Inline {
        h0: ComplexMatrix,
        #[serde(default)]
        controls: Vec<ComplexMatrix>,
        #[serde(default)]
        lindblads: Vec<LindbladConfig>,
        basis: BasisChoice,
        /// Zero-based basis indices of the p-part.
        p_indices: Vec<usize>,
    },
}

impl SystemConfig {
    /// Overall decoherence rate used to normalize control plots.
    pub fn rate_scale(&self) -> f64 {
        match self {
            SystemConfig::OneQubit { gamma, .. }
            | SystemConfig::QutritV { gamma }
            | SystemConfig::TwoQubit { gamma, .. } => *gamma,
            SystemConfig::Inline { lindblads, .. } => lindblads
                .iter()
                .map(|l| l.rate)
                .fold(0.0, f64::max)
                .max(f64::MIN_POSITIVE),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialState {
    Coherence { m: Vec<f64>, convention: Convention },
    Density { rho: ComplexMatrix },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeConfig {
    pub t0: f64,
    pub t_end: f64,
    /// Spacing of the output grid.
    pub output_step: f64,
    #[serde(default)]
    pub method: Method,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    #[serde(default)]
    pub options: SolverOptions,
    /// Use the closed-form qubit solution with this branch instead of Newton.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub analytic: Option<Branch>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparisons {
    #[serde(default)]
    pub uncontrolled: bool,
    #[serde(default)]
    pub target: bool,
    #[serde(default)]
    pub stationary: bool,
    #[serde(default)]
    pub oracle: bool,
    /// Bloch initial states for exact-decoupling runs (qubit systems only).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub lidar: Vec<[f64; 3]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputConfig {
    pub directory: String,
    #[serde(default)]
    pub prefix: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub name: String,
    pub system: SystemConfig,
    pub initial_state: InitialState,
    pub time: TimeConfig,
    pub solver: SolverConfig,
    pub comparisons: Comparisons,
    pub outputs: OutputConfig,
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }
}

/// Names accepted by [`preset`].
pub const PRESET_NAMES: [&str; 4] = ["one_qubit", "qutrit_v", "two_qubit_mixed", "two_qubit_bell"];

/// Common decoherence rate of the shipped presets.
pub const PRESET_GAMMA: f64 = 0.2;

fn base_time() -> TimeConfig {
    TimeConfig {
        t0: 0.0,
        t_end: 10.0,
        output_step: 0.01,
        method: Method::Rk4 { step: 1e-3 },
    }
}

fn comparisons(lidar: Vec<[f64; 3]>) -> Comparisons {
    Comparisons {
        uncontrolled: true,
        target: true,
        stationary: true,
        oracle: true,
        lidar,
    }
}

fn outputs(name: &str) -> OutputConfig {
    OutputConfig {
        directory: format!("out/{name}"),
        prefix: String::new(),
    }
}

pub fn preset(name: &str) -> Result<ScenarioConfig> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let two_qubit = |rho: CMatrix, allow_ls: bool, name: &str| ScenarioConfig {
        name: name.to_string(),
        system: SystemConfig::TwoQubit {
            omega1: 1.0,
            omega2: 1.0,
            gamma: PRESET_GAMMA,
        },
        initial_state: InitialState::Density {
            rho: ComplexMatrix::from_matrix(&rho),
        },
        time: base_time(),
        solver: SolverConfig {
            options: SolverOptions {
                allow_least_squares: allow_ls,
                ..Default::default()
            },
            analytic: None,
        },
        comparisons: comparisons(vec![]),
        outputs: outputs(name),
    };
    match name {
        "one_qubit" => Ok(ScenarioConfig {
            name: name.into(),
            system: SystemConfig::OneQubit {
                omega: 3.0,
                gamma: PRESET_GAMMA,
                convention: Convention::PauliBloch,
            },
            initial_state: InitialState::Coherence {
                m: vec![h, 0.0, h],
                convention: Convention::PauliBloch,
            },
            time: base_time(),
            solver: SolverConfig {
                options: SolverOptions::default(),
                analytic: Some(Branch::Minus),
            },
            comparisons: comparisons(vec![[h, 0.0, h], [h, 0.0, -0.9]]),
            outputs: outputs(name),
        }),
        "qutrit_v" => {
            let (basis, _) = preset_split(PresetKind::QutritV);
            let m = rho_to_coherence(&presets::qutrit_initial_rho(), &basis)?.m;
            Ok(ScenarioConfig {
                name: name.into(),
                system: SystemConfig::QutritV {
                    gamma: PRESET_GAMMA,
                },
                initial_state: InitialState::Coherence {
                    m: m.iter().copied().collect(),
                    convention: Convention::Orthonormal,
                },
                time: base_time(),
                solver: SolverConfig {
                    options: SolverOptions::default(),
                    analytic: None,
                },
                comparisons: comparisons(vec![]),
                outputs: outputs(name),
            })
        }
        "two_qubit_mixed" => Ok(two_qubit(presets::half_mixed_bell_rho(), false, name)),
        "two_qubit_bell" => Ok(two_qubit(presets::bell_rho(), true, name)),
        other => Err(Error::Config(format!(
            "unknown preset '{other}' (expected one of {})",
            PRESET_NAMES.join(", ")
        ))),
    }
}

/// Everything needed to run a scenario, resolved from a config.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub spec: OpenSystemSpec,
    pub split: CartanSplit,
    pub rho0: CMatrix,
    pub m0: RVector,
    pub grid: TimeGrid,
    pub method: Method,
    /// Display names of the control channels.
    pub control_names: Vec<String>,
    /// Display names of the coherence-vector coordinates.
    pub coordinate_names: Vec<String>,
    /// Rate used to normalize control plots.
    pub rate_scale: f64,
}

impl Scenario {
    pub fn from_config(cfg: &ScenarioConfig) -> Result<Self> {
        let (spec, split, coordinate_names) = build_system(&cfg.system)?;
        let basis = split.basis();
        let rho0 = match &cfg.initial_state {
            InitialState::Density { rho } => rho.to_matrix()?,
            InitialState::Coherence { m, convention } => {
                if *convention != basis.convention() && basis.dim() != 2 {
                    return Err(Error::Config(
                        "the Bloch convention only applies to qubit systems".into(),
                    ));
                }
                let v = RVector::from_row_slice(m);
                match convention {
                    Convention::PauliBloch => {
                        if m.len() != 3 {
                            return Err(Error::Config("Bloch vectors have three entries".into()));
                        }
                        presets::bloch_to_rho([m[0], m[1], m[2]])
                    }
                    Convention::Orthonormal => {
                        let b = if basis.convention() == Convention::Orthonormal {
                            basis.clone()
                        } else {
                            basis.to_orthonormal()
                        };
                        coherence_to_rho(&v, &b)?
                    }
                }
            }
        };
        if rho0.nrows() != spec.dim() {
            return Err(Error::Config(format!(
                "initial state has dimension {} but the system has {}",
                rho0.nrows(),
                spec.dim()
            )));
        }
        let m0 = rho_to_coherence(&rho0, basis)?.m;
        let t = &cfg.time;
        if !(t.t_end > t.t0) {
            return Err(Error::Config(format!(
                "empty time window [{}, {}]",
                t.t0, t.t_end
            )));
        }
        let grid = TimeGrid::uniform(t.t0, t.t_end, t.output_step)?;
        if grid.len() < 2 {
            return Err(Error::Config("time grid has fewer than two points".into()));
        }
        t.method.validate()?;
        if !cfg.comparisons.lidar.is_empty() && !matches!(cfg.system, SystemConfig::OneQubit { .. }) {
            return Err(Error::Config(
                "exact-decoupling comparison needs the one_qubit system".into(),
            ));
        }
        if cfg.solver.analytic.is_some()
            && !matches!(
                cfg.system,
                SystemConfig::OneQubit {
                    convention: Convention::PauliBloch,
                    ..
                }
            )
        {
            return Err(Error::Config(
                "the closed-form solver needs the one_qubit system in the Bloch convention".into(),
            ));
        }
        let control_names = match &cfg.system {
            SystemConfig::OneQubit { .. } => vec!["u_x".into(), "u_y".into()],
            SystemConfig::TwoQubit { .. } => TWO_QUBIT_LABELS[6..]
                .iter()
                .map(|l| format!("u_{l}"))
                .collect(),
            _ => split
                .p_indices()
                .iter()
                .map(|j| format!("u_{}", j + 1))
                .collect(),
        };
        Ok(Self {
            spec,
            split,
            rho0,
            m0,
            grid,
            method: t.method,
            control_names,
            coordinate_names,
            rate_scale: cfg.system.rate_scale(),
        })
    }
}

fn build_system(sys: &SystemConfig) -> Result<(OpenSystemSpec, CartanSplit, Vec<String>)> {
    let numbered = |n: usize| (1..=n).map(|k| format!("m_{k}")).collect::<Vec<_>>();
    let positive = |name: &str, v: f64| {
        if v > 0.0 && v.is_finite() {
            Ok(())
        } else {
            Err(Error::Config(format!("{name} must be positive, got {v}")))
        }
    };
    match sys {
        SystemConfig::OneQubit {
            omega,
            gamma,
            convention,
        } => {
            positive("gamma", *gamma)?;
            Ok((
                presets::one_qubit_spec(*omega, *gamma),
                presets::one_qubit_split(*convention),
                vec!["m_x".into(), "m_y".into(), "m_z".into()],
            ))
        }
        SystemConfig::QutritV { gamma } => {
            positive("gamma", *gamma)?;
            Ok((
                presets::qutrit_spec(*gamma),
                preset_split(PresetKind::QutritV).1,
                numbered(8),
            ))
        }
        SystemConfig::TwoQubit {
            omega1,
            omega2,
            gamma,
        } => {
            positive("gamma", *gamma)?;
            Ok((
                presets::two_qubit_spec(*omega1, *omega2, *gamma),
                preset_split(PresetKind::TwoQubit).1,
                TWO_QUBIT_LABELS.iter().map(|l| format!("m_{l}")).collect(),
            ))
        }
        SystemConfig::Inline {
            h0,
            controls,
            lindblads,
            basis,
            p_indices,
        } => {
            let h0 = h0.to_matrix()?;
            let controls = controls
                .iter()
                .map(|m| m.to_matrix())
                .collect::<Result<Vec<_>>>()?;
            let lindblads = lindblads
                .iter()
                .map(|l| {
                    Ok(Lindblad {
                        op: l.op.to_matrix()?,
                        rate: l.rate,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let spec = OpenSystemSpec::new(h0, controls, lindblads)
                .map_err(|e| Error::Config(e.to_string()))?;
            let b = match basis {
                BasisChoice::Gellmann => Arc::new(gellmann_basis(spec.dim())?),
                BasisChoice::OneQubit => preset_split(PresetKind::OneQubit).0,
                BasisChoice::QutritV => preset_split(PresetKind::QutritV).0,
                BasisChoice::TwoQubit => preset_split(PresetKind::TwoQubit).0,
            };
            if b.dim() != spec.dim() {
                return Err(Error::Config(format!(
                    "basis dimension {} does not match system dimension {}",
                    b.dim(),
                    spec.dim()
                )));
            }
            let split = CartanSplit::new(b, p_indices.clone())
                .map_err(|e| Error::Config(e.to_string()))?;
            let n = split.basis().len();
            Ok((spec, split, numbered(n)))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_round_trip() {
        for name in PRESET_NAMES {
            let cfg = preset(name).unwrap();
            let text = cfg.to_toml().unwrap();
            let back = ScenarioConfig::from_toml(&text).unwrap();
            assert_eq!(back, cfg, "{name}");
            assert_eq!(back.to_toml().unwrap(), text);
            Scenario::from_config(&cfg).unwrap();
        }
        assert!(matches!(preset("nope"), Err(Error::Config(_))));
    }

    #[test]
    fn empty_time_window_is_rejected() {
        let mut cfg = preset("one_qubit").unwrap();
        cfg.time.t_end = cfg.time.t0;
        assert!(matches!(Scenario::from_config(&cfg), Err(Error::Config(_))));
    }

    #[test]
    fn reference_qubit_state() {
        let s = Scenario::from_config(&preset("one_qubit").unwrap()).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((&s.m0 - RVector::from_row_slice(&[h, 0.0, h])).amax() < 1e-15);
    }

    #[test]
    fn inline_system_parses() {
        let text = r#"
name = "inline"
[system]
kind = "inline"
basis = "gellmann"
p_indices = []
h0 = { re = [[1.0, 0.0], [0.0, -1.0]] }
[[system.lindblads]]
rate = 0.5
op = { re = [[0.0, 0.0], [1.0, 0.0]] }
[initial_state]
kind = "density"
rho = { re = [[0.5, 0.0], [0.0, 0.5]] }
[time]
t0 = 0.0
t_end = 1.0
output_step = 0.1
[solver]
[comparisons]
[outputs]
directory = "out"
"#;
        let cfg = ScenarioConfig::from_toml(text).unwrap();
        let s = Scenario::from_config(&cfg).unwrap();
        assert_eq!(s.spec.dim(), 2);
        assert_eq!(s.grid.len(), 11);
        assert_eq!(s.method, Method::default());
    }
}
