use std::collections::BTreeMap;

use qrmsim_core::{
    dynamics::{evolve, jc_analytic, observable_series, to_frame, EvolutionConfig, Hamiltonian, Series, Trajectory},
    hamiltonian::{
        build_bichromatic, build_ion_interaction, build_lab_frame, build_limit_model, build_qrm, char_timescale,
        LimitModel, TimeDependentHamiltonian,
    },
    hilbert::{expectation, fidelity, operator_factory, HilbertSpace, Operator, OperatorKind, Qubit, StateVector},
    regimes::{classify, grid_points},
    spectral::{adiabatic_sweep, cutoff_convergence, ground_state, parity_analysis, parity_operator, ParityChain},
    C64,
};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::{
    config::{BasisState, HamiltonianKind, Model, Plan, Term},
    error::{CliError, CliResult},
};

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
}

/// Tabular result plus scalar summary values, in output order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Report {
    pub summary: Vec<(String, Value)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Report {
    fn with_columns(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|c| c.to_string()).collect(), ..Self::default() }
    }

    fn note(&mut self, key: &str, value: Value) {
        self.summary.push((key.to_owned(), value));
    }
}

pub fn run(plan: &Plan, pool: &rayon::ThreadPool) -> CliResult<Report> {
    match plan {
        Plan::Evolve { space, model, hamiltonian, initial_state, observables, evolution, norm_drift_tol } => {
            run_evolve(*space, model, *hamiltonian, initial_state, observables, evolution, *norm_drift_tol)
        }
        Plan::JcValidate { space, ion, states, evolution, norm_drift_tol } => {
            run_jc_validate(*space, ion, states, evolution, *norm_drift_tol)
        }
        Plan::GroundState { space, params, convergence } => {
            run_ground_state(*space, params, convergence.extra, convergence.tol)
        }
        Plan::Adiabatic { space, schedule, durations, evolution, norm_drift_tol } => {
            run_adiabatic(*space, schedule, durations, evolution, *norm_drift_tol, pool)
        }
        Plan::RegimeMap { grid, thresholds } => {
            let points = grid_points(grid);
            let labels: Vec<String> =
                pool.install(|| points.par_iter().map(|p| classify(p, thresholds).to_string()).collect());
            let mut report = Report::with_columns(&["omega0_R", "omega_R", "g", "label"]);
            let mut counts = BTreeMap::new();
            for (p, label) in points.iter().zip(labels) {
                *counts.entry(label.clone()).or_insert(0u64) += 1;
                report.rows.push(vec![Cell::Num(p.omega0_r), Cell::Num(p.omega_r), Cell::Num(p.g), Cell::Text(label)]);
            }
            report.note("rows", json!(grid.omega0_over_g.steps));
            report.note("cols", json!(grid.omega_over_g.steps));
            report.note("label_counts", json!(counts));
            Ok(report)
        }
    }
}

fn check_drift(traj: &Trajectory, tol: f64, what: &str) -> CliResult<()> {
    if traj.norm_drift > tol {
        return Err(CliError::Numerical(format!(
            "norm drift {:.3e} exceeds {tol:e} ({what}); reduce the time step",
            traj.norm_drift
        )));
    }
    Ok(())
}

fn initial_state(space: HilbertSpace, terms: &[Term]) -> CliResult<StateVector> {
    let terms: Vec<(C64, Qubit, usize)> = terms.iter().map(|t| (C64::new(t.re, t.im), t.qubit, t.n)).collect();
    Ok(StateVector::superposition(space, &terms)?)
}

fn observable(space: HilbertSpace, name: &str) -> CliResult<Operator> {
    if name == "parity" {
        return Ok(parity_operator(space));
    }
    Ok(operator_factory(space, name.parse::<OperatorKind>()?))
}

fn run_evolve(
    space: HilbertSpace,
    model: &Model,
    kind: HamiltonianKind,
    terms: &[Term],
    names: &[String],
    config: &EvolutionConfig,
    tol: f64,
) -> CliResult<Report> {
    let psi0 = initial_state(space, terms)?;
    let p = model.qrm();
    let static_model = |m: LimitModel| build_limit_model(m, &p, space);
    let traj = match kind {
        HamiltonianKind::Qrm => evolve(&build_qrm(&p, space), &psi0, config)?,
        HamiltonianKind::Jc => evolve(&static_model(LimitModel::Jc)?, &psi0, config)?,
        HamiltonianKind::Ajc => evolve(&static_model(LimitModel::Ajc)?, &psi0, config)?,
        HamiltonianKind::Dispersive => evolve(&static_model(LimitModel::Dispersive)?, &psi0, config)?,
        HamiltonianKind::Dirac => evolve(&static_model(LimitModel::Dirac)?, &psi0, config)?,
        HamiltonianKind::Bichromatic | HamiltonianKind::Ion | HamiltonianKind::Lab => {
            let Model::Ion(ion) = model else { unreachable!("driven models are checked during resolve") };
            let h: Box<dyn TimeDependentHamiltonian> = match kind {
                HamiltonianKind::Bichromatic => Box::new(build_bichromatic(ion, space)?),
                HamiltonianKind::Ion => Box::new(build_ion_interaction(ion, space)?),
                _ => Box::new(build_lab_frame(ion, space)?),
            };
            evolve(Hamiltonian::driven(h.as_ref()), &psi0, config)?
        }
    };
    check_drift(&traj, tol, "evolve")?;
    let ops = names.iter().map(|n| observable(space, n)).collect::<CliResult<Vec<_>>>()?;
    let series = observable_series(&traj, &ops.iter().collect::<Vec<_>>())?;

    let mut columns = vec!["t".to_owned()];
    for (name, col) in names.iter().zip(&series.columns) {
        match col {
            Series::Real(_) => columns.push(name.clone()),
            Series::Complex(_) => columns.extend([format!("{name}_re"), format!("{name}_im")]),
        }
    }
    let mut report = Report { columns, ..Report::default() };
    for (k, &t) in series.times.iter().enumerate() {
        let mut row = vec![Cell::Num(t)];
        for col in &series.columns {
            match col {
                Series::Real(v) => row.push(Cell::Num(v[k])),
                Series::Complex(v) => row.extend([Cell::Num(v[k].re), Cell::Num(v[k].im)]),
            }
        }
        report.rows.push(row);
    }
    report.note("snapshots", json!(traj.len()));
    report.note("norm_drift", json!(traj.norm_drift));
    Ok(report)
}

fn run_jc_validate(
    space: HilbertSpace,
    ion: &qrmsim_core::hamiltonian::IonParams,
    states: &[BasisState],
    config: &EvolutionConfig,
    tol: f64,
) -> CliResult<Report> {
    let p = qrmsim_core::hamiltonian::qrm_params_from_detunings(ion)?;
    let h = build_ion_interaction(ion, space)?;
    let frame = p.free_frame();
    let mut times = Vec::new();
    let mut curves = Vec::new();
    let mut drift = 0.0f64;
    for s in states {
        let psi0 = StateVector::basis(space, s.qubit, s.n)?;
        let traj = evolve(Hamiltonian::driven(&h), &psi0, config)?;
        check_drift(&traj, tol, &format!("|{},{}>", s.qubit, s.n))?;
        drift = drift.max(traj.norm_drift);
        let curve = traj
            .iter()
            .map(|(t, state)| {
                let reference = to_frame(&jc_analytic(&p, &psi0, t)?, t, &frame);
                fidelity(&reference, state)
            })
            .collect::<Result<Vec<f64>, _>>()?;
        times = traj.times.clone();
        curves.push(curve);
    }

    let mut columns = vec!["t".to_owned()];
    columns.extend(states.iter().map(|s| format!("fidelity_{}{}", s.qubit, s.n)));
    let mut report = Report { columns, ..Report::default() };
    for (k, &t) in times.iter().enumerate() {
        let mut row = vec![Cell::Num(t)];
        row.extend(curves.iter().map(|c| Cell::Num(c[k])));
        report.rows.push(row);
    }
    let all: Vec<f64> = curves.iter().flatten().copied().collect();
    let min = all.iter().copied().fold(f64::INFINITY, f64::min);
    let mean = all.iter().sum::<f64>() / all.len() as f64;
    report.note("g_over_omega_R", json!(p.coupling_ratio()));
    report.note("window_s", json!(config.t_final));
    report.note("coupling_periods", json!(config.t_final * p.g.abs() / std::f64::consts::TAU));
    report.note("min_fidelity", json!(min));
    report.note("mean_fidelity", json!(mean));
    report.note("norm_drift", json!(drift));
    Ok(report)
}

fn run_ground_state(space: HilbertSpace, params: &qrmsim_core::hamiltonian::QrmParams, extra: usize, tol: f64)
    -> CliResult<Report> {
    let (energy, g) = ground_state(&build_qrm(params, space))?;
    let number = expectation(&g, &operator_factory(space, OperatorKind::Number))?.re;
    let sigma_z = expectation(&g, &operator_factory(space, OperatorKind::SigmaZ))?.re;
    let parity = parity_analysis(&g)?;
    let conv = cutoff_convergence(params, space, extra)?;
    if !conv.converged(tol) {
        return Err(CliError::Numerical(format!(
            "cutoff convergence: from N = {} to {} the ground energy changes by {:.3e} (relative to {:.3e} rad/s) \
             and <a^dag a> by {:.3e}, above {tol:e}; raise the Fock cutoff",
            conv.fock_cutoff, conv.extended_cutoff, conv.energy_change, conv.energy_scale, conv.phonon_change
        )));
    }
    let mut report = Report::with_columns(&["qubit", "n", "chain", "population"]);
    for c in &parity.chain_populations {
        report.rows.push(vec![
            Cell::Text(c.label.qubit.to_string()),
            Cell::Int(c.label.n as u64),
            Cell::Text(c.chain.to_string()),
            Cell::Num(c.population),
        ]);
    }
    report.note("g_over_omega_R", json!(params.coupling_ratio()));
    report.note("energy", json!(energy));
    report.note("phonon_number", json!(number));
    report.note("sigma_z", json!(sigma_z));
    report.note("parity", json!(parity.parity_expectation));
    report.note("even_chain_population", json!(parity.chain_population(ParityChain::Even)));
    report.note("odd_chain_population", json!(parity.chain_population(ParityChain::Odd)));
    report.note("convergence_cutoff", json!(conv.extended_cutoff));
    report.note("convergence_energy_change", json!(conv.energy_change / conv.energy_scale));
    report.note("convergence_phonon_change", json!(conv.phonon_change));
    Ok(report)
}

fn run_adiabatic(
    space: HilbertSpace,
    schedule: &qrmsim_core::spectral::SweepSchedule,
    durations: &[f64],
    config: &EvolutionConfig,
    tol: f64,
    pool: &rayon::ThreadPool,
) -> CliResult<Report> {
    let outcomes = pool.install(|| {
        durations
            .par_iter()
            .map(|&d| adiabatic_sweep(&schedule.with_duration(d), space, config))
            .collect::<Vec<_>>()
    });
    let (_, target) = ground_state(&build_qrm(&schedule.end, space))?;
    let quench_overlap = fidelity(&target, &StateVector::basis(space, Qubit::Ground, 0)?)?;

    let mut report = Report::with_columns(&["duration", "t", "g", "fidelity"]);
    let mut finals = Vec::new();
    let mut drift = 0.0f64;
    for (&d, outcome) in durations.iter().zip(outcomes) {
        let outcome = outcome?;
        check_drift(&outcome.trajectory, tol, &format!("sweep of duration {d:e} s"))?;
        drift = drift.max(outcome.trajectory.norm_drift);
        let sched = schedule.with_duration(d);
        for &(t, f) in &outcome.curve.points {
            let g = if d == 0.0 { schedule.end.g } else { sched.params_at(t).g };
            report.rows.push(vec![Cell::Num(d), Cell::Num(t), Cell::Num(g), Cell::Num(f)]);
        }
        finals.push(outcome.final_fidelity);
    }
    if let Ok(t_char) = char_timescale(&schedule.end) {
        report.note("t_char", json!(t_char));
    }
    report.note("quench_overlap", json!(quench_overlap));
    report.note("durations", json!(durations));
    report.note("final_fidelities", json!(finals));
    report.note("norm_drift", json!(drift));
    Ok(report)
}
