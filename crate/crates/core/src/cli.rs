//! Scenario runner behind the `decouple` binary.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::algebra::{verify_cartan, CartanReport};
use crate::config::{preset, Scenario, ScenarioConfig, SystemConfig};
use crate::decoupler::{
    analytic_one_qubit, control_signal, solve_stationary, spectrum, stationary_trajectory,
    ChannelTerm, ControlLaw, SolveStatus, StationarySolution,
};
use crate::dynamics::{
    coherence_metrics, convergence_bound_check, entanglement_from_coherence, integrate,
    integrate_density_oracle, lidar_controls, tracking_error, BoundReport, Drive, LidarRun,
    LidarStatus, OneQubitParams, Trajectory, TrajectoryKind,
};
use crate::error::{Error, Result};
use crate::linalg::RVector;
use crate::vectorizer::{block_split, check_assumptions, vectorize, AssumptionReport, BlockForm, VectorizedSystem};

/// Overrides the output directory of every scenario.
pub const OUTPUT_DIR_ENV: &str = "DECOUPLE_OUTPUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "decouple", version, about = "Asymptotic noise-decoupling controls for open quantum systems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Verify the Cartan split and the H1-H3 assumptions.
    Check { config: String },
    /// Solve the stationary equations and print the control law.
    Solve { config: String },
    /// Solve, integrate and write all output files.
    Run {
        config: String,
        /// Output directory (overrides the config and the environment).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print or write a shipped scenario.
    Preset {
        name: String,
        #[arg(long)]
        emit: Option<PathBuf>,
    },
}

/// `preset:<name>` or a path to a TOML file.
pub fn load_config(arg: &str) -> Result<ScenarioConfig> {
    match arg.strip_prefix("preset:") {
        Some(name) => preset(name),
        None => ScenarioConfig::load(Path::new(arg)),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub cartan: CartanReport,
    pub assumptions: AssumptionReport,
    pub decay_rate: f64,
}

impl CheckReport {
    pub fn ok(&self) -> bool {
        self.cartan.ok && self.assumptions.all_ok()
    }
}

pub fn check(scenario: &Scenario) -> Result<(CheckReport, VectorizedSystem)> {
    let vs = vectorize(&scenario.spec, &scenario.split)?;
    let report = CheckReport {
        cartan: verify_cartan(&scenario.split),
        assumptions: check_assumptions(&vs),
        decay_rate: vs.decay_rate(),
    };
    Ok((report, vs))
}

#[derive(Debug, Clone, Serialize)]
pub struct ChannelReport {
    pub name: String,
    pub offset: f64,
    pub terms: Vec<ChannelTerm>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub solution: StationarySolution,
    pub t0: f64,
    /// Amplitude and phase of the closed-form qubit solution.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phase: Option<f64>,
    pub channels: Vec<ChannelReport>,
}

pub struct Solved {
    pub report: SolveReport,
    pub law: ControlLaw,
    pub blocks: BlockForm,
    pub m0_1: RVector,
}

/// Solves the stationary equations. A failed solve still returns the
/// report; callers decide whether that is an error.
pub fn solve(cfg: &ScenarioConfig, scenario: &Scenario, vs: &VectorizedSystem) -> Result<Solved> {
    let blocks = block_split(vs)?;
    if !cfg.solver.options.ignore_assumptions {
        if let Some(err) = blocks.assumptions.to_error() {
            return Err(err);
        }
    }
    let (m0_1, _) = blocks.permute(&scenario.m0);
    let t0 = scenario.grid.t0();
    let (solution, amplitude, phase) = match (cfg.solver.analytic, &cfg.system) {
        (Some(branch), SystemConfig::OneQubit { gamma, .. }) => {
            let m = &scenario.m0;
            let a = analytic_one_qubit([m[0], m[1], m[2]], *gamma, branch)?;
            (a.solution, Some(a.amplitude), Some(a.phase))
        }
        _ => (solve_stationary(&blocks, &m0_1, &cfg.solver.options)?, None, None),
    };
    let law = ControlLaw::new(solution.xi.clone(), &blocks, t0)?;
    let channels = spectrum(&law)
        .into_iter()
        .map(|ch| ChannelReport {
            name: scenario.control_names[ch.channel].clone(),
            offset: ch.offset,
            terms: ch.terms,
        })
        .collect();
    Ok(Solved {
        report: SolveReport {
            solution,
            t0,
            amplitude,
            phase,
            channels,
        },
        law,
        blocks,
        m0_1,
    })
}

/// Column-oriented numeric table.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(times: &[f64]) -> Self {
        Self {
            header: vec!["t".into()],
            columns: vec![times.to_vec()],
        }
    }

    pub fn push(&mut self, name: impl Into<String>, values: Vec<f64>) {
        self.header.push(name.into());
        self.columns.push(values);
    }

    pub fn rows(&self) -> usize {
        self.columns.iter().map(Vec::len).min().unwrap_or(0)
    }

    /// Header line plus one line per row, `{:.16e}` values, `\n` endings.
    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory csv");
        for r in 0..self.rows() {
            w.write_record(self.columns.iter().map(|col| format!("{:.16e}", col[r])))
                .expect("in-memory csv");
        }
        String::from_utf8(w.into_inner().expect("in-memory csv")).expect("csv is utf-8")
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|source| Error::Io {
            path: parent.to_path_buf(),
            source,
        })?;
    }
    fs::write(path, contents).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("reports serialize");
    text.push('\n');
    write_file(path, &text)
}

/// Writes one CSV per panel, named `<prefix><figure_id><suffix>.csv`.
pub fn emit_plot_data(
    dir: &Path,
    prefix: &str,
    figure_id: &str,
    panels: &[(String, Table)],
) -> Result<Vec<PathBuf>> {
    let mut written = Vec::with_capacity(panels.len());
    for (suffix, table) in panels {
        let path = dir.join(format!("{prefix}{figure_id}{suffix}.csv"));
        write_file(&path, &table.to_csv())?;
        written.push(path);
    }
    Ok(written)
}

fn trajectory_table(traj: &Trajectory) -> Table {
    let mut t = Table::new(&traj.times);
    let n = traj.states.first().map_or(0, |s| s.len());
    for j in 0..n {
        t.push(format!("m_{}", j + 1), traj.states.iter().map(|m| m[j]).collect());
    }
    t
}

#[derive(Debug, Clone, Serialize)]
pub struct LidarSummary {
    pub initial_state: [f64; 3],
    pub status: LidarStatus,
    pub predicted: LidarStatus,
    pub divergence_time: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub name: String,
    pub status: SolveStatus,
    pub residual_norm: f64,
    /// p-block distance between controlled and target states at the end.
    pub final_tracking_error: Option<f64>,
    pub final_uncontrolled_error: Option<f64>,
    pub oracle_sup_distance: Option<f64>,
    pub oracle_max_trace_error: Option<f64>,
    pub oracle_min_eigenvalue: Option<f64>,
    pub convergence_bound: Option<BoundReport>,
    pub lidar: Vec<LidarSummary>,
    pub files: Vec<String>,
}

pub struct RunOutcome {
    pub checks: CheckReport,
    pub solve: SolveReport,
    pub summary: RunSummary,
    pub controlled: Trajectory,
    pub uncontrolled: Option<Trajectory>,
    pub target: Option<Trajectory>,
    pub stationary: Option<Trajectory>,
    pub oracle: Option<Trajectory>,
    pub controls: Table,
    pub lidar: Vec<LidarRun>,
}

/// Output directory: explicit override, then the environment, then the config.
pub fn output_dir(cfg: &ScenarioConfig, explicit: Option<&Path>) -> PathBuf {
    if let Some(p) = explicit {
        return p.to_path_buf();
    }
    match std::env::var_os(OUTPUT_DIR_ENV) {
        Some(dir) if !dir.is_empty() => PathBuf::from(dir),
        _ => PathBuf::from(&cfg.outputs.directory),
    }
}

/// Full pipeline: checks, solve, trajectories, metrics and figure data.
pub fn run(cfg: &ScenarioConfig, out_dir: &Path) -> Result<RunOutcome> {
    let scenario = Scenario::from_config(cfg)?;
    let prefix = cfg.outputs.prefix.as_str();
    let path = |name: &str| out_dir.join(format!("{prefix}{name}"));
    let mut files: Vec<PathBuf> = Vec::new();

    let (checks, vs) = check(&scenario)?;
    write_json(&path("checks.json"), &checks)?;
    files.push(path("checks.json"));
    if !cfg.solver.options.ignore_assumptions {
        if let Some(err) = checks.assumptions.to_error() {
            return Err(err);
        }
    }

    let solved = solve(cfg, &scenario, &vs)?;
    write_json(&path("solution.json"), &solved.report)?;
    files.push(path("solution.json"));
    if solved.report.solution.status == SolveStatus::Failed {
        return Err(Error::Infeasible(format!(
            "no exact stationary solution (best residual {:.3e}); enable allow_least_squares to use the least-squares fallback",
            solved.report.solution.residual_norm
        )));
    }

    let grid = &scenario.grid;
    let method = scenario.method;
    let law = &solved.law;
    let u = |t: f64| control_signal(law, t);
    let controlled = integrate(&vs, Drive::Controlled(&u), &scenario.m0, grid, method)?;
    let comps = &cfg.comparisons;
    let uncontrolled = comps
        .uncontrolled
        .then(|| integrate(&vs, Drive::Free, &scenario.m0, grid, method))
        .transpose()?;
    let target = comps
        .target
        .then(|| integrate(&vs, Drive::Target, &scenario.m0, grid, method))
        .transpose()?;
    let stationary = if comps.stationary {
        let sol = &solved.report.solution;
        let states = grid
            .times()
            .iter()
            .map(|&t| stationary_trajectory(&solved.m0_1, &sol.eta, &solved.blocks, grid.t0(), t))
            .collect::<Result<Vec<_>>>()?;
        Some(Trajectory {
            times: grid.times().to_vec(),
            states,
            kind: TrajectoryKind::Stationary,
            convention: vs.basis().convention(),
        })
    } else {
        None
    };
    let oracle_run = if comps.oracle {
        Some(integrate_density_oracle(
            &scenario.spec,
            Some(&u),
            &scenario.rho0,
            grid,
            method,
        )?)
    } else {
        None
    };
    let oracle = oracle_run
        .as_ref()
        .map(|o| o.to_coherence(vs.basis()))
        .transpose()?;

    let trajectories: Vec<&Trajectory> = [Some(&controlled), uncontrolled.as_ref(), target.as_ref(), stationary.as_ref(), oracle.as_ref()]
        .into_iter()
        .flatten()
        .collect();
    for traj in &trajectories {
        let name = format!("trajectory_{}.csv", traj.kind.as_str());
        write_file(&path(&name), &trajectory_table(traj).to_csv())?;
        files.push(path(&name));
    }

    let mut controls = Table::new(grid.times());
    let samples: Vec<RVector> = grid.times().iter().map(|&t| u(t)).collect();
    for (i, name) in scenario.control_names.iter().enumerate() {
        controls.push(name.clone(), samples.iter().map(|v| v[i]).collect());
    }
    write_file(&path("controls.csv"), &controls.to_csv())?;
    files.push(path("controls.csv"));

    // metrics
    let p = scenario.split.p_indices().to_vec();
    let mut tracking = Table::new(grid.times());
    let mut final_tracking_error = None;
    let mut final_uncontrolled_error = None;
    if let Some(tg) = &target {
        let e = tracking_error(&controlled, tg, &p)?;
        final_tracking_error = e.last().copied();
        tracking.push("controlled_vs_target", e);
        if let Some(un) = &uncontrolled {
            let e = tracking_error(un, tg, &p)?;
            final_uncontrolled_error = e.last().copied();
            tracking.push("uncontrolled_vs_target", e);
        }
    }
    let mut convergence_bound = None;
    if let Some(st) = &stationary {
        let all: Vec<usize> = (0..vs.len()).collect();
        tracking.push("controlled_vs_stationary", tracking_error(&controlled, st, &all)?);
        convergence_bound = Some(convergence_bound_check(&controlled, st, vs.decay_rate())?);
    }
    write_file(&path("tracking_error.csv"), &tracking.to_csv())?;
    files.push(path("tracking_error.csv"));

    let groups = coherence_groups(&cfg.system, &p);
    let mut coherence = Table::new(grid.times());
    for traj in &trajectories {
        let series = coherence_metrics(traj, &groups.iter().map(|(_, g)| g.clone()).collect::<Vec<_>>())?;
        for ((label, _), s) in groups.iter().zip(series) {
            coherence.push(format!("{}_{label}", traj.kind.as_str()), s);
        }
    }
    write_file(&path("coherence.csv"), &coherence.to_csv())?;
    files.push(path("coherence.csv"));

    if scenario.spec.dim() == 4 && vs.basis().len() == 15 && matches!(cfg.system, SystemConfig::TwoQubit { .. }) {
        let mut ent = Table::new(grid.times());
        for traj in &trajectories {
            let e = traj
                .states
                .iter()
                .map(entanglement_from_coherence)
                .collect::<Result<Vec<_>>>()?;
            ent.push(traj.kind.as_str(), e);
        }
        write_file(&path("entanglement.csv"), &ent.to_csv())?;
        files.push(path("entanglement.csv"));
    }

    let mut lidar = Vec::new();
    if let SystemConfig::OneQubit { omega, gamma, convention } = &cfg.system {
        for (k, &m0) in comps.lidar.iter().enumerate() {
            let run = lidar_controls(
                OneQubitParams {
                    omega: *omega,
                    gamma: *gamma,
                },
                m0,
                grid,
                match method {
                    crate::ode::Method::Rk4 { step } => step,
                    _ => 1e-3,
                },
            )?;
            let mut t = Table::new(&run.trajectory.times);
            for (j, name) in ["m_x", "m_y", "m_z"].iter().enumerate() {
                t.push(*name, run.trajectory.states.iter().map(|m| m[j]).collect());
            }
            t.push("u_x", run.controls.iter().map(|u| u[0]).collect());
            t.push("u_y", run.controls.iter().map(|u| u[1]).collect());
            let name = format!("lidar_{}.csv", k + 1);
            write_file(&path(&name), &t.to_csv())?;
            files.push(path(&name));
            let _ = convention;
            lidar.push(run);
        }
    }

    let figures = figure_panels(cfg, &scenario, &solved.report, &controlled, uncontrolled.as_ref(), target.as_ref(), &controls, &lidar);
    let mut plot_lines = String::new();
    for (figure_id, caption, panels) in &figures {
        let written = emit_plot_data(out_dir, prefix, figure_id, panels)?;
        for (path, (_, table)) in written.iter().zip(panels) {
            let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            writeln!(plot_lines, "{name}: {caption}; x = t, y = {}", table.header[1..].join(" | ")).expect("string write");
        }
        files.extend(written);
    }
    let mut stub = String::from("# Figure data written by decouple run; one line per CSV panel.\n");
    stub.push_str(&plot_lines);
    write_file(&path("plots.txt"), &stub)?;
    files.push(path("plots.txt"));

    let (oracle_sup_distance, oracle_max_trace_error, oracle_min_eigenvalue) = match (&oracle, &oracle_run) {
        (Some(o), Some(r)) => (
            Some(o.sup_distance(&controlled)?),
            Some(r.max_trace_error),
            Some(r.min_eigenvalue),
        ),
        _ => (None, None, None),
    };
    files.push(path("report.json"));
    let summary = RunSummary {
        name: cfg.name.clone(),
        status: solved.report.solution.status,
        residual_norm: solved.report.solution.residual_norm,
        final_tracking_error,
        final_uncontrolled_error,
        oracle_sup_distance,
        oracle_max_trace_error,
        oracle_min_eigenvalue,
        convergence_bound,
        lidar: comps
            .lidar
            .iter()
            .zip(&lidar)
            .map(|(&m0, r)| LidarSummary {
                initial_state: m0,
                status: r.status,
                predicted: r.predicted,
                divergence_time: r.divergence_time,
            })
            .collect(),
        files: files
            .iter()
            .map(|p| {
                p.strip_prefix(out_dir)
                    .unwrap_or(p)
                    .to_string_lossy()
                    .into_owned()
            })
            .collect(),
    };
    write_json(&path("report.json"), &summary)?;

    Ok(RunOutcome {
        checks,
        solve: solved.report,
        summary,
        controlled,
        uncontrolled,
        target,
        stationary,
        oracle,
        controls,
        lidar,
    })
}

fn coherence_groups(sys: &SystemConfig, p: &[usize]) -> Vec<(String, Vec<usize>)> {
    match sys {
        SystemConfig::OneQubit { .. } => vec![("C2".into(), vec![0, 1])],
        SystemConfig::QutritV { .. } => vec![
            ("C01_2".into(), vec![3, 4]),
            ("C02_2".into(), vec![5, 6]),
        ],
        _ => vec![("p_norm2".into(), p.to_vec())],
    }
}

type Figure = (String, String, Vec<(String, Table)>);

#[allow(clippy::too_many_arguments)]
fn figure_panels(
    cfg: &ScenarioConfig,
    scenario: &Scenario,
    solve: &SolveReport,
    controlled: &Trajectory,
    uncontrolled: Option<&Trajectory>,
    target: Option<&Trajectory>,
    controls: &Table,
    lidar: &[LidarRun],
) -> Vec<Figure> {
    let times = &controlled.times;
    let state_panel = |j: usize| {
        let mut t = Table::new(times);
        for traj in [Some(controlled), uncontrolled, target].into_iter().flatten() {
            t.push(traj.kind.as_str(), traj.states.iter().map(|m| m[j]).collect());
        }
        t
    };
    let gamma = scenario.rate_scale;
    let control_panel = |names: &[&str]| {
        let mut t = Table::new(times);
        for name in names {
            if let Some(k) = controls.header.iter().position(|h| h == name) {
                t.push(format!("{name}/gamma"), controls.columns[k].iter().map(|v| v / gamma).collect());
            }
        }
        t
    };
    let letters = ["a", "b", "c", "d", "e"];
    let states_figure = |id: &str, caption: &str, coords: &[usize]| -> Figure {
        let panels = coords
            .iter()
            .enumerate()
            .map(|(k, &j)| (format!("{}_{}", letters[k], scenario.coordinate_names[j]), state_panel(j)))
            .collect();
        (id.into(), caption.into(), panels)
    };
    let mut figures = Vec::new();
    match &cfg.system {
        SystemConfig::OneQubit { .. } => {
            figures.push(states_figure("fig1", "controlled, uncontrolled and target coherence coordinates", &[0, 1]));
            figures.push(("fig2".into(), "asymptotic decoupling controls over gamma".into(), vec![(String::new(), control_panel(&["u_x", "u_y"]))]));
            let lidar_panel = |run: &LidarRun| {
                let mut t = Table::new(&run.trajectory.times);
                t.push("u_x/gamma", run.controls.iter().map(|u| u[0] / gamma).collect());
                t.push("u_y/gamma", run.controls.iter().map(|u| u[1] / gamma).collect());
                t
            };
            if let Some(run) = lidar.iter().find(|r| r.status == LidarStatus::Convergent) {
                figures.push(("fig3".into(), "exact-decoupling controls (convergent start) over gamma".into(), vec![(String::new(), lidar_panel(run))]));
            }
            if let Some(run) = lidar.iter().find(|r| r.status == LidarStatus::Diverged) {
                figures.push(("fig4".into(), "exact-decoupling controls up to divergence over gamma".into(), vec![(String::new(), lidar_panel(run))]));
            }
            if let Some(tg) = target {
                let mut t = Table::new(times);
                // the exact-decoupling xy trajectory coincides with the target one
                t.push("delta_m_xy", tracking_error(controlled, tg, &[0, 1]).unwrap_or_default());
                figures.push(("fig5".into(), "distance to the exactly decoupled xy trajectory".into(), vec![(String::new(), t)]));
            }
        }
        SystemConfig::QutritV { .. } => {
            figures.push(states_figure("fig6", "controlled, uncontrolled and target coordinates m_4..m_7", &[3, 4, 5, 6]));
            figures.push((
                "fig7".into(),
                "qutrit controls over gamma".into(),
                vec![
                    ("a".into(), control_panel(&["u_4", "u_5"])),
                    ("b".into(), control_panel(&["u_6", "u_7"])),
                ],
            ));
        }
        SystemConfig::TwoQubit { .. } => {
            // xy, yx, xx, yy, zz in the preset basis
            let coords = [7, 9, 6, 10, 14];
            let exact = solve.solution.status == SolveStatus::Exact;
            let id = if exact { "fig8" } else { "fig9" };
            figures.push(states_figure(id, "controlled, uncontrolled and target correlation coordinates", &coords));
            figures.push((
                format!("{id}_controls"),
                "two-qubit controls over gamma".into(),
                vec![
                    ("a".into(), control_panel(&["u_xy", "u_xx"])),
                    ("b".into(), control_panel(&["u_yx", "u_yy"])),
                    ("c".into(), control_panel(&["u_zz"])),
                ],
            ));
        }
        SystemConfig::Inline { .. } => {
            let p = scenario.split.p_indices();
            let panels = p
                .iter()
                .map(|&j| (format!("_{}", scenario.coordinate_names[j]), state_panel(j)))
                .collect();
            figures.push(("states".into(), "controlled, uncontrolled and target p coordinates".into(), panels));
            let names: Vec<&str> = scenario.control_names.iter().map(String::as_str).collect();
            figures.push(("controls".into(), "controls over the largest rate".into(), vec![(String::new(), control_panel(&names))]));
        }
    }
    figures
}

#[derive(Debug, Serialize)]
struct ErrorReport<'a> {
    error: &'a str,
    message: String,
}

/// Runs one command; returns the text for stdout.
pub fn execute(cli: Cli) -> Result<String> {
    match cli.command {
        Command::Check { config } => {
            let cfg = load_config(&config)?;
            let scenario = Scenario::from_config(&cfg)?;
            let (report, _) = check(&scenario)?;
            let text = serde_json::to_string_pretty(&report).expect("reports serialize");
            if !report.cartan.ok {
                return Err(Error::Config(format!(
                    "Cartan closure fails for {} basis pairs",
                    report.cartan.violations.len()
                )));
            }
            if let Some(err) = report.assumptions.to_error() {
                return Err(err);
            }
            Ok(text)
        }
        Command::Solve { config } => {
            let cfg = load_config(&config)?;
            let scenario = Scenario::from_config(&cfg)?;
            let (_, vs) = check(&scenario)?;
            let solved = solve(&cfg, &scenario, &vs)?;
            let text = serde_json::to_string_pretty(&solved.report).expect("reports serialize");
            if solved.report.solution.status == SolveStatus::Failed {
                return Err(Error::Infeasible(format!(
                    "no exact stationary solution (best residual {:.3e})",
                    solved.report.solution.residual_norm
                )));
            }
            Ok(text)
        }
        Command::Run { config, out } => {
            let cfg = load_config(&config)?;
            let dir = output_dir(&cfg, out.as_deref());
            let outcome = run(&cfg, &dir)?;
            Ok(serde_json::to_string_pretty(&outcome.summary).expect("reports serialize"))
        }
        Command::Preset { name, emit } => {
            let text = preset(&name)?.to_toml()?;
            match emit {
                Some(path) => {
                    write_file(&path, &text)?;
                    Ok(format!("wrote {}", path.display()))
                }
                None => Ok(text),
            }
        }
    }
}

/// Parses arguments, runs, prints and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(text) => {
            use std::io::Write;
            let mut out = std::io::stdout().lock();
            // a closed pipe downstream is not an error of ours
            let _ = writeln!(out, "{}", text.trim_end());
            0
        }
        Err(err) => {
            let cat = err.category();
            let report = ErrorReport {
                error: cat.as_str(),
                message: err.to_string(),
            };
            eprintln!("{}", serde_json::to_string(&report).expect("error report serializes"));
            cat.exit_code()
        }
    }
}
