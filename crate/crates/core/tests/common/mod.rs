#![allow(dead_code)]

use decouple_core::algebra::Convention;
use decouple_core::cli::{check, solve, Solved};
use decouple_core::config::{preset, Scenario, ScenarioConfig};
use decouple_core::presets::{one_qubit_spec, one_qubit_split};
use decouple_core::vectorizer::{block_split, vectorize, BlockForm, VectorizedSystem};

pub const H: f64 = std::f64::consts::FRAC_1_SQRT_2;

pub struct Pipeline {
    pub cfg: ScenarioConfig,
    pub scenario: Scenario,
    pub vs: VectorizedSystem,
    pub solved: Solved,
}

pub fn pipeline(name: &str) -> Pipeline {
    pipeline_from(preset(name).unwrap())
}

pub fn pipeline_from(cfg: ScenarioConfig) -> Pipeline {
    let scenario = Scenario::from_config(&cfg).unwrap();
    let (_, vs) = check(&scenario).unwrap();
    let solved = solve(&cfg, &scenario, &vs).unwrap();
    Pipeline {
        cfg,
        scenario,
        vs,
        solved,
    }
}

/// Damped qubit in Bloch coordinates.
pub fn bloch_system(omega: f64, gamma: f64) -> (VectorizedSystem, BlockForm) {
    let vs = vectorize(&one_qubit_spec(omega, gamma), &one_qubit_split(Convention::PauliBloch)).unwrap();
    let blocks = block_split(&vs).unwrap();
    (vs, blocks)
}
