//! Experiment configuration files.
//!
//! One JSON object per experiment. Fields ending in `_hz` are ordinary
//! frequencies in Hz and are multiplied by 2π on load; everything inside the
//! simulator is angular (rad/s). Times are in seconds, phases in radians.

use std::{f64::consts::TAU, fs, path::{Path, PathBuf}};

use qrmsim_core::{
    dynamics::{EvolutionConfig, Method, StepSize},
    hamiltonian::{char_timescale, qrm_params_from_detunings, IonParams, QrmParams},
    hilbert::{HilbertSpace, OperatorKind, Qubit},
    regimes::{AxisRange, RegimeGrid, RegimeThresholds},
    spectral::{geometric_ladder, SweepSchedule},
};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult, Location};

pub const SCHEMA_VERSION: u32 = 1;
const DEFAULT_FOCK_CUTOFF: usize = 20;
const DEFAULT_NORM_DRIFT_TOL: f64 = 1e-7;
const DEFAULT_JC_STRIDE: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Evolve,
    JcValidate,
    GroundState,
    Adiabatic,
    RegimeMap,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Evolve => "evolve",
            Experiment::JcValidate => "jc-validate",
            Experiment::GroundState => "ground-state",
            Experiment::Adiabatic => "adiabatic",
            Experiment::RegimeMap => "regime-map",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IonSection {
    pub nu_hz: f64,
    pub eta: f64,
    pub omega_r_hz: f64,
    pub omega_b_hz: f64,
    pub delta_r_hz: f64,
    pub delta_b_hz: f64,
    #[serde(default)]
    pub phi_r: f64,
    #[serde(default)]
    pub phi_b: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega0_lab_hz: Option<f64>,
}

impl IonSection {
    pub fn to_params(&self) -> IonParams {
        IonParams {
            nu: TAU * self.nu_hz,
            eta: self.eta,
            omega_r: TAU * self.omega_r_hz,
            omega_b: TAU * self.omega_b_hz,
            delta_r: TAU * self.delta_r_hz,
            delta_b: TAU * self.delta_b_hz,
            phi_r: self.phi_r,
            phi_b: self.phi_b,
            omega0_lab: self.omega0_lab_hz.map(|f| TAU * f),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QrmSection {
    pub omega0_r_hz: f64,
    pub omega_r_hz: f64,
    pub g_hz: f64,
}

impl QrmSection {
    pub fn to_params(&self) -> QrmParams {
        QrmParams::new(TAU * self.omega0_r_hz, TAU * self.omega_r_hz, TAU * self.g_hz)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceSection {
    pub fock_cutoff: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolutionSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_final: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps_per_period: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<Method>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot_stride: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub norm_drift_tol: Option<f64>,
}

/// Generator used by the `evolve` experiment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HamiltonianKind {
    Qrm,
    Jc,
    Ajc,
    Dispersive,
    Dirac,
    Bichromatic,
    Ion,
    Lab,
}

impl HamiltonianKind {
    pub fn is_static(self) -> bool {
        matches!(self, Self::Qrm | Self::Jc | Self::Ajc | Self::Dispersive | Self::Dirac)
    }
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    pub qubit: Qubit,
    pub n: usize,
    #[serde(default = "one")]
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisState {
    pub qubit: Qubit,
    pub n: usize,
}

fn default_extra() -> usize {
    10
}

fn default_convergence_tol() -> f64 {
    1e-8
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceSection {
    #[serde(default = "default_extra")]
    pub extra: usize,
    #[serde(default = "default_convergence_tol")]
    pub tol: f64,
}

impl Default for ConvergenceSection {
    fn default() -> Self {
        Self { extra: default_extra(), tol: default_convergence_tol() }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ramp {
    /// Sideband strength ramped from zero, detunings fixed.
    #[default]
    Coupling,
    /// Blue detuning ramped from `delta_b_start_hz`, strength fixed.
    Detuning,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeUnit {
    #[default]
    Seconds,
    TChar,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ladder {
    pub first: f64,
    pub last: f64,
    pub count: usize,
    #[serde(default)]
    pub unit: TimeUnit,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSection {
    #[serde(default)]
    pub ramp: Ramp,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub durations: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ladder: Option<Ladder>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_b_start_hz: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub omega0_over_g: AxisRange,
    pub omega_over_g: AxisRange,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
}

/// The file as written. [`resolve`] fills in defaults and the echoed copy
/// in every output has every applicable field set.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<Experiment>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ion: Option<IonSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qrm: Option<QrmSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub space: Option<SpaceSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evolution: Option<EvolutionSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hamiltonian: Option<HamiltonianKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_state: Option<Vec<Term>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_states: Option<Vec<BasisState>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observables: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub convergence: Option<ConvergenceSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<ScheduleSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thresholds: Option<RegimeThresholds>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSection>,
}

/// Command-line settings that take precedence over the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub fock_cutoff: Option<usize>,
    pub output: Option<PathBuf>,
    pub format: Option<Format>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Model {
    Ion(IonParams),
    Qrm(QrmParams),
}

impl Model {
    /// Effective Rabi-model parameters.
    pub fn qrm(&self) -> QrmParams {
        match self {
            Model::Qrm(p) => *p,
            Model::Ion(ion) => qrm_params_from_detunings(ion).expect("validated during resolve"),
        }
    }
}

/// Everything an experiment needs, already validated.
#[derive(Clone, Debug)]
pub enum Plan {
    Evolve {
        space: HilbertSpace,
        model: Model,
        hamiltonian: HamiltonianKind,
        initial_state: Vec<Term>,
        observables: Vec<String>,
        evolution: EvolutionConfig,
        norm_drift_tol: f64,
    },
    JcValidate {
        space: HilbertSpace,
        ion: IonParams,
        states: Vec<BasisState>,
        evolution: EvolutionConfig,
        norm_drift_tol: f64,
    },
    GroundState {
        space: HilbertSpace,
        params: QrmParams,
        convergence: ConvergenceSection,
    },
    Adiabatic {
        space: HilbertSpace,
        schedule: SweepSchedule,
        durations: Vec<f64>,
        evolution: EvolutionConfig,
        norm_drift_tol: f64,
    },
    RegimeMap {
        grid: RegimeGrid,
        thresholds: RegimeThresholds,
    },
}

#[derive(Clone, Debug)]
pub struct Job {
    pub experiment: Experiment,
    /// Resolved config, echoed into every output.
    pub echo: ConfigFile,
    pub format: Format,
    pub output: Option<PathBuf>,
    pub plan: Plan,
}

/// A validation failure, tied to the JSON key it concerns.
#[derive(Clone, Debug, PartialEq)]
pub struct Issue {
    pub key: Option<&'static str>,
    pub message: String,
}

fn issue(key: &'static str, message: impl Into<String>) -> Issue {
    Issue { key: Some(key), message: message.into() }
}

/// Read, parse and resolve a config file.
pub fn load(path: &Path, experiment: Experiment, overrides: &Overrides) -> CliResult<Job> {
    let text = fs::read_to_string(path)
        .map_err(|source| CliError::Io { path: path.display().to_string(), source })?;
    let with_path = |location: Option<Location>, message: String| CliError::Config {
        path: Some(path.to_path_buf()),
        location,
        message,
    };
    let file: ConfigFile = serde_json::from_str(&text).map_err(|e| {
        let location = (e.line() > 0).then(|| Location { line: e.line(), column: e.column() });
        let message = e.to_string();
        let message = match message.rfind(" at line ") {
            Some(i) if location.is_some() => message[..i].to_string(),
            _ => message,
        };
        with_path(location, message)
    })?;
    resolve(file, experiment, overrides)
        .map_err(|i| with_path(i.key.and_then(|k| locate(&text, k)), i.message))
}

/// Position of the first occurrence of `"key"` in the source text.
pub fn locate(text: &str, key: &str) -> Option<Location> {
    let needle = format!("\"{key}\"");
    text.lines().enumerate().find_map(|(i, line)| {
        line.find(&needle).map(|c| Location { line: i + 1, column: line[..c].chars().count() + 1 })
    })
}

fn require_finite(key: &'static str, values: &[f64]) -> Result<(), Issue> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(issue(key, format!("`{key}` contains a non-finite number")))
    }
}

fn model(file: &ConfigFile) -> Result<Model, Issue> {
    match (&file.ion, &file.qrm) {
        (Some(_), Some(_)) => Err(issue("qrm", "give exactly one of `ion` and `qrm`, not both")),
        (None, None) => Err(Issue { key: None, message: "missing parameters: give exactly one of `ion` and `qrm`".into() }),
        (Some(ion), None) => {
            require_finite(
                "ion",
                &[ion.nu_hz, ion.eta, ion.omega_r_hz, ion.omega_b_hz, ion.delta_r_hz, ion.delta_b_hz, ion.phi_r, ion.phi_b],
            )?;
            let p = ion.to_params();
            p.validate().map_err(|e| issue("ion", e.to_string()))?;
            qrm_params_from_detunings(&p).map_err(|e| issue("ion", e.to_string()))?;
            Ok(Model::Ion(p))
        }
        (None, Some(q)) => {
            require_finite("qrm", &[q.omega0_r_hz, q.omega_r_hz, q.g_hz])?;
            let p = q.to_params();
            p.validate().map_err(|e| issue("qrm", e.to_string()))?;
            Ok(Model::Qrm(p))
        }
    }
}

fn reject_unused(file: &ConfigFile, experiment: Experiment, allowed: &[&'static str]) -> Result<(), Issue> {
    let present: [(&'static str, bool); 11] = [
        ("space", file.space.is_some()),
        ("evolution", file.evolution.is_some()),
        ("hamiltonian", file.hamiltonian.is_some()),
        ("initial_state", file.initial_state.is_some()),
        ("initial_states", file.initial_states.is_some()),
        ("observables", file.observables.is_some()),
        ("convergence", file.convergence.is_some()),
        ("schedule", file.schedule.is_some()),
        ("grid", file.grid.is_some()),
        ("thresholds", file.thresholds.is_some()),
        ("output", false),
    ];
    match present.iter().find(|(k, p)| *p && !allowed.contains(k)) {
        Some((k, _)) => Err(issue(k, format!("`{k}` is not used by the {} experiment", experiment.name()))),
        None => Ok(()),
    }
}

fn space(file: &ConfigFile, overrides: &Overrides) -> Result<(HilbertSpace, SpaceSection), Issue> {
    let cutoff = overrides
        .fock_cutoff
        .or(file.space.as_ref().map(|s| s.fock_cutoff))
        .unwrap_or(DEFAULT_FOCK_CUTOFF);
    let space = HilbertSpace::new(cutoff).map_err(|e| issue("fock_cutoff", e.to_string()))?;
    Ok((space, SpaceSection { fock_cutoff: cutoff }))
}

/// Fill defaults for the step control; `t_final` is handled by the caller.
fn evolution(section: &EvolutionSection, t_final: f64, default_method: Method, default_stride: usize)
    -> Result<(EvolutionConfig, EvolutionSection), Issue> {
    let step = match (section.dt, section.steps_per_period) {
        (Some(_), Some(_)) => return Err(issue("dt", "give either `dt` or `steps_per_period`, not both")),
        (Some(dt), None) => StepSize::Fixed(dt),
        (None, Some(n)) => StepSize::PerPeriod(n),
        (None, None) => StepSize::default(),
    };
    let norm_drift_tol = section.norm_drift_tol.unwrap_or(DEFAULT_NORM_DRIFT_TOL);
    if !(norm_drift_tol > 0.0 && norm_drift_tol.is_finite()) {
        return Err(issue("norm_drift_tol", "`norm_drift_tol` must be positive"));
    }
    let config = EvolutionConfig {
        t_final,
        step,
        method: section.method.unwrap_or(default_method),
        snapshot_stride: section.snapshot_stride.unwrap_or(default_stride),
    };
    config.validate().map_err(|e| issue("evolution", e.to_string()))?;
    let echo = EvolutionSection {
        t_final: Some(t_final),
        dt: match step {
            StepSize::Fixed(dt) => Some(dt),
            StepSize::PerPeriod(_) => None,
        },
        steps_per_period: match step {
            StepSize::Fixed(_) => None,
            StepSize::PerPeriod(n) => Some(n),
        },
        method: Some(config.method),
        snapshot_stride: Some(config.snapshot_stride),
        norm_drift_tol: Some(norm_drift_tol),
    };
    Ok((config, echo))
}

fn parse_observable(name: &str) -> Result<(), Issue> {
    if name == "parity" || name.parse::<OperatorKind>().is_ok() {
        Ok(())
    } else {
        Err(issue(
            "observables",
            format!(
                "unknown observable `{name}` (expected parity, destroy, create, number, sigma_z, sigma_plus, \
                 sigma_minus, sigma_x, sigma_y or identity)"
            ),
        ))
    }
}

/// Validate `file` for `experiment` and materialize every default.
pub fn resolve(file: ConfigFile, experiment: Experiment, overrides: &Overrides) -> Result<Job, Issue> {
    if let Some(e) = file.experiment {
        if e != experiment {
            return Err(issue(
                "experiment",
                format!("config is for `{}` but `{}` was requested", e.name(), experiment.name()),
            ));
        }
    }
    let model = model(&file)?;
    let output_section = file.output.clone().unwrap_or_default();
    let output = overrides.output.clone().or(output_section.path.clone());
    let format = overrides
        .format
        .or(output_section.format)
        .or_else(|| {
            output
                .as_ref()
                .filter(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")))
                .map(|_| Format::Json)
        })
        .unwrap_or_default();

    let mut echo = ConfigFile {
        experiment: Some(experiment),
        ion: file.ion.clone(),
        qrm: file.qrm.clone(),
        output: Some(OutputSection { path: None, format: Some(format) }),
        ..ConfigFile::default()
    };

    let plan = match experiment {
        Experiment::Evolve => {
            reject_unused(&file, experiment, &["space", "evolution", "hamiltonian", "initial_state", "observables"])?;
            let (space, space_echo) = space(&file, overrides)?;
            let hamiltonian = file.hamiltonian.unwrap_or(match model {
                Model::Ion(_) => HamiltonianKind::Ion,
                Model::Qrm(_) => HamiltonianKind::Qrm,
            });
            let p = model.qrm();
            match (hamiltonian, &model) {
                (k, Model::Qrm(_)) if !k.is_static() => {
                    return Err(issue("hamiltonian", format!("`{k:?}` needs an `ion` block").to_lowercase()))
                }
                (HamiltonianKind::Lab, Model::Ion(ion)) if ion.omega0_lab.is_none() => {
                    return Err(issue("hamiltonian", "the lab-frame Hamiltonian needs `ion.omega0_lab_hz`"))
                }
                (HamiltonianKind::Dirac, _) if p.omega_r != 0.0 => {
                    return Err(issue("hamiltonian", format!("the Dirac limit needs omega_R = 0, got {} rad/s", p.omega_r)))
                }
                (HamiltonianKind::Dispersive, _)
                    if (p.omega_r - p.omega0_r).abs() <= 1e-12 * p.omega_r.abs().max(p.omega0_r.abs())
                        || (p.omega_r + p.omega0_r).abs() <= 1e-12 * p.omega_r.abs().max(p.omega0_r.abs()) =>
                {
                    return Err(issue("hamiltonian", "the dispersive model needs omega_R != +-omega0_R"))
                }
                _ => {}
            }
            let section = file.evolution.clone().unwrap_or_default();
            let t_final = section.t_final.ok_or_else(|| issue("evolution", "`evolution.t_final` is required"))?;
            let default_method = if hamiltonian.is_static() { Method::StaticExpm } else { Method::Magnus2 };
            if !hamiltonian.is_static() && section.method == Some(Method::StaticExpm) {
                return Err(issue("method", "`static_expm` needs a time-independent Hamiltonian"));
            }
            let (evolution, evo_echo) = evolution(&section, t_final, default_method, 1)?;
            let initial_state = file
                .initial_state
                .clone()
                .unwrap_or_else(|| vec![Term { qubit: Qubit::Ground, n: 0, re: 1.0, im: 0.0 }]);
            if initial_state.is_empty() {
                return Err(issue("initial_state", "`initial_state` needs at least one term"));
            }
            if let Some(t) = initial_state.iter().find(|t| t.n > space.fock_cutoff()) {
                return Err(issue(
                    "initial_state",
                    format!("initial state term |{},{}> exceeds the Fock cutoff {}", t.qubit, t.n, space.fock_cutoff()),
                ));
            }
            if initial_state.iter().map(|t| t.re * t.re + t.im * t.im).sum::<f64>() == 0.0 {
                return Err(issue("initial_state", "initial state has zero norm"));
            }
            let observables = file
                .observables
                .clone()
                .unwrap_or_else(|| vec!["sigma_z".into(), "number".into(), "parity".into()]);
            observables.iter().try_for_each(|o| parse_observable(o))?;
            echo.space = Some(space_echo);
            echo.evolution = Some(evo_echo);
            echo.hamiltonian = Some(hamiltonian);
            echo.initial_state = Some(initial_state.clone());
            echo.observables = Some(observables.clone());
            Plan::Evolve {
                space,
                model,
                hamiltonian,
                initial_state,
                observables,
                evolution,
                norm_drift_tol: echo.evolution.as_ref().and_then(|e| e.norm_drift_tol).unwrap(),
            }
        }
        Experiment::JcValidate => {
            reject_unused(&file, experiment, &["space", "evolution", "initial_states"])?;
            let Model::Ion(ion) = model else {
                return Err(issue("qrm", "jc-validate runs the full ion Hamiltonian and needs an `ion` block"));
            };
            let (space, space_echo) = space(&file, overrides)?;
            let p = model.qrm();
            if p.g == 0.0 {
                return Err(issue("ion", "jc-validate needs a nonzero coupling"));
            }
            let section = file.evolution.clone().unwrap_or_default();
            if section.method == Some(Method::StaticExpm) {
                return Err(issue("method", "`static_expm` needs a time-independent Hamiltonian"));
            }
            let t_final = section.t_final.unwrap_or(3.0 * TAU / p.g.abs());
            let (evolution, evo_echo) = evolution(&section, t_final, Method::Magnus2, DEFAULT_JC_STRIDE)?;
            let states = file.initial_states.clone().unwrap_or_else(|| {
                vec![BasisState { qubit: Qubit::Excited, n: 0 }, BasisState { qubit: Qubit::Ground, n: 1 }]
            });
            if states.is_empty() {
                return Err(issue("initial_states", "`initial_states` needs at least one entry"));
            }
            let n_max = space.fock_cutoff();
            if let Some(s) = states
                .iter()
                .find(|s| s.n > n_max || (s.qubit == Qubit::Excited && s.n == n_max))
            {
                return Err(issue(
                    "initial_states",
                    format!("|{},{}> and its JC partner must both lie below the Fock cutoff {n_max}", s.qubit, s.n),
                ));
            }
            echo.space = Some(space_echo);
            echo.evolution = Some(evo_echo);
            echo.initial_states = Some(states.clone());
            Plan::JcValidate {
                space,
                ion,
                states,
                evolution,
                norm_drift_tol: echo.evolution.as_ref().and_then(|e| e.norm_drift_tol).unwrap(),
            }
        }
        Experiment::GroundState => {
            reject_unused(&file, experiment, &["space", "convergence"])?;
            let (space, space_echo) = space(&file, overrides)?;
            let convergence = file.convergence.clone().unwrap_or_default();
            if !(convergence.tol > 0.0 && convergence.tol.is_finite()) {
                return Err(issue("tol", "`convergence.tol` must be positive"));
            }
            echo.space = Some(space_echo);
            echo.convergence = Some(convergence.clone());
            Plan::GroundState { space, params: model.qrm(), convergence }
        }
        Experiment::Adiabatic => {
            reject_unused(&file, experiment, &["space", "evolution", "schedule"])?;
            let (space, space_echo) = space(&file, overrides)?;
            let section = file.evolution.clone().unwrap_or_default();
            if section.t_final.is_some() {
                return Err(issue("t_final", "adiabatic runs last for each ramp duration; remove `evolution.t_final`"));
            }
            if section.method == Some(Method::StaticExpm) {
                return Err(issue("method", "`static_expm` needs a time-independent Hamiltonian"));
            }
            let sched = file.schedule.clone().ok_or_else(|| issue("schedule", "adiabatic needs a `schedule` block"))?;
            let end = model.qrm();
            let schedule = match sched.ramp {
                Ramp::Coupling => {
                    if sched.delta_b_start_hz.is_some() {
                        return Err(issue("delta_b_start_hz", "`delta_b_start_hz` only applies to the detuning ramp"));
                    }
                    SweepSchedule::coupling_ramp(end.omega0_r, end.omega_r, end.g, 0.0)
                }
                Ramp::Detuning => {
                    let start_hz = sched
                        .delta_b_start_hz
                        .ok_or_else(|| issue("schedule", "the detuning ramp needs `delta_b_start_hz`"))?;
                    require_finite("delta_b_start_hz", &[start_hz])?;
                    let (dr, db) = qrmsim_core::hamiltonian::detunings_from_qrm(&end);
                    SweepSchedule::detuning_ramp(dr, TAU * start_hz, db, end.g, 0.0)
                }
            };
            let durations = match (&sched.durations, &sched.ladder) {
                (Some(_), Some(_)) => return Err(issue("ladder", "give either `durations` or `ladder`, not both")),
                (None, None) => return Err(issue("schedule", "the schedule needs `durations` or `ladder`")),
                (Some(d), None) => d.clone(),
                (None, Some(l)) => {
                    require_finite("ladder", &[l.first, l.last])?;
                    if !(l.first > 0.0 && l.last >= l.first && l.count >= 1) {
                        return Err(issue("ladder", "the ladder needs 0 < first <= last and count >= 1"));
                    }
                    let unit = match l.unit {
                        TimeUnit::Seconds => 1.0,
                        TimeUnit::TChar => char_timescale(&end).map_err(|e| issue("ladder", e.to_string()))?,
                    };
                    geometric_ladder(l.first * unit, l.last * unit, l.count)
                }
            };
            if durations.is_empty() {
                return Err(issue("durations", "`durations` must not be empty"));
            }
            if durations.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
                return Err(issue("durations", "ramp durations must be finite and non-negative"));
            }
            let (mut evolution, mut evo_echo) = evolution(&section, 0.0, Method::Magnus2, 1)?;
            evolution.t_final = 0.0;
            evo_echo.t_final = None;
            echo.space = Some(space_echo);
            echo.evolution = Some(evo_echo);
            echo.schedule = Some(ScheduleSection {
                ramp: sched.ramp,
                durations: Some(durations.clone()),
                ladder: None,
                delta_b_start_hz: sched.delta_b_start_hz,
            });
            Plan::Adiabatic {
                space,
                schedule,
                durations,
                evolution,
                norm_drift_tol: echo.evolution.as_ref().and_then(|e| e.norm_drift_tol).unwrap(),
            }
        }
        Experiment::RegimeMap => {
            reject_unused(&file, experiment, &["grid", "thresholds"])?;
            if overrides.fock_cutoff.is_some() {
                return Err(Issue { key: None, message: "regime-map does not use a Fock cutoff".into() });
            }
            let g = model.qrm().g;
            let section = file.grid.clone().ok_or_else(|| issue("grid", "regime-map needs a `grid` block"))?;
            let grid = RegimeGrid { omega0_over_g: section.omega0_over_g, omega_over_g: section.omega_over_g, g };
            grid.validate().map_err(|e| issue("grid", e.to_string()))?;
            let thresholds = file.thresholds.unwrap_or_default();
            thresholds.validate().map_err(|e| issue("thresholds", e.to_string()))?;
            echo.grid = Some(section);
            echo.thresholds = Some(thresholds);
            Plan::RegimeMap { grid, thresholds }
        }
    };
    Ok(Job { experiment, echo, format, output, plan })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> ConfigFile {
        serde_json::from_str(text).unwrap()
    }

    const QRM: &str = r#""qrm": {"omega0_r_hz": 1000, "omega_r_hz": 1000, "g_hz": 500}"#;

    #[test]
    fn hz_fields_are_scaled() {
        let q = QrmSection { omega0_r_hz: 1.0, omega_r_hz: 2.0, g_hz: 0.5 };
        let p = q.to_params();
        assert_eq!((p.omega0_r, p.omega_r, p.g), (TAU, 2.0 * TAU, 0.5 * TAU));
    }

    #[test]
    fn exactly_one_parameter_block() {
        let both = parse(&format!(
            r#"{{{QRM}, "ion": {{"nu_hz": 3e6, "eta": 0.06, "omega_r_hz": 68e3, "omega_b_hz": 68e3,
                "delta_r_hz": 0, "delta_b_hz": -102e3}}}}"#
        ));
        assert!(resolve(both, Experiment::GroundState, &Overrides::default()).is_err());
        let none = parse("{}");
        assert!(resolve(none, Experiment::GroundState, &Overrides::default()).is_err());
    }

    #[test]
    fn defaults_are_materialized() {
        let job = resolve(parse(&format!("{{{QRM}}}")), Experiment::GroundState, &Overrides::default()).unwrap();
        assert_eq!(job.echo.space, Some(SpaceSection { fock_cutoff: DEFAULT_FOCK_CUTOFF }));
        assert_eq!(job.echo.convergence, Some(ConvergenceSection::default()));
        assert_eq!(job.format, Format::Csv);
    }

    #[test]
    fn unused_sections_rejected() {
        let text = format!(r#"{{{QRM}, "grid": {{"omega0_over_g": {{"min": 0, "max": 1, "steps": 2}},
            "omega_over_g": {{"min": 0, "max": 1, "steps": 2}}}}}}"#);
        let err = resolve(parse(&text), Experiment::GroundState, &Overrides::default()).unwrap_err();
        assert_eq!(err.key, Some("grid"));
    }

    #[test]
    fn experiment_field_must_match() {
        let text = format!(r#"{{"experiment": "regime-map", {QRM}}}"#);
        assert!(resolve(parse(&text), Experiment::GroundState, &Overrides::default()).is_err());
    }

    #[test]
    fn cutoff_override_wins() {
        let text = format!(r#"{{{QRM}, "space": {{"fock_cutoff": 5}}}}"#);
        let ov = Overrides { fock_cutoff: Some(9), ..Overrides::default() };
        let job = resolve(parse(&text), Experiment::GroundState, &ov).unwrap();
        assert_eq!(job.echo.space.unwrap().fock_cutoff, 9);
    }

    #[test]
    fn locate_finds_key() {
        let text = "{\n  \"qrm\": {\n    \"g_hz\": -1\n  }\n}";
        assert_eq!(locate(text, "g_hz"), Some(Location { line: 3, column: 5 }));
        assert_eq!(locate(text, "grid"), None);
    }

    #[test]
    fn json_extension_selects_json() {
        let ov = Overrides { output: Some(PathBuf::from("out.JSON")), ..Overrides::default() };
        let job = resolve(parse(&format!("{{{QRM}}}")), Experiment::GroundState, &ov).unwrap();
        assert_eq!(job.format, Format::Json);
    }
}
