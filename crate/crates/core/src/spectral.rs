//! Ground states, parity structure and adiabatic ground-state preparation.
//!
//! # Parity convention
//!
//! The conserved parity of the Rabi model is implemented as
//! `P = −σ_z (−1)^{a†a}`. With σ_z|e⟩ = +|e⟩ this gives P|g,0⟩ = +|g,0⟩, so
//! the chain {|g,0⟩, |e,1⟩, |g,2⟩, |e,3⟩, …} (even total excitation number)
//! carries p = +1 and its complement {|e,0⟩, |g,1⟩, …} carries p = −1.

use std::fmt;

use ndarray::Array1;
use serde::{Deserialize, Serialize};

use crate::{
    dynamics::{evolve, EvolutionConfig, Hamiltonian, Trajectory},
    hamiltonian::{build_qrm, qrm_coupling, IonParams, QrmParams, TimeDependentHamiltonian},
    hilbert::{
        expectation, fidelity, operator_factory, BasisLabel, HilbertSpace, Operator, OperatorKind, Qubit, StateVector,
    },
    linalg, QrmError, Result, C64,
};

const HERMITIAN_TOL: f64 = 1e-12;
/// Relative eigenvalue gap below which levels count as degenerate.
const DEGENERACY_TOL: f64 = 1e-10;

/// Parity operator −σ_z(−1)^{a†a}; see the module docs for the sign.
pub fn parity_operator(space: HilbertSpace) -> Operator {
    let diag = Array1::from_iter(space.labels().map(|l| C64::new(parity_of(l), 0.0)));
    Operator::from_matrix(space, ndarray::Array2::from_diag(&diag)).expect("diagonal has the space dimension")
}

fn parity_of(label: BasisLabel) -> f64 {
    let fock = if label.n % 2 == 0 { 1.0 } else { -1.0 };
    -label.qubit.sigma_z() * fock
}

/// Lowest eigenpair of a Hermitian operator.
///
/// If the lowest level is degenerate, the returned vector is the projection
/// of the lowest-index basis state with nonzero overlap onto the degenerate
/// subspace. The global phase makes the largest-magnitude amplitude real and
/// positive (lowest index on ties).
pub fn ground_state(h: &Operator) -> Result<(f64, StateVector)> {
    linalg::ensure_hermitian(h.matrix(), HERMITIAN_TOL)?;
    let (evals, evecs) = linalg::eigh(h.matrix())?;
    let e0 = evals[0];
    let scale = evals.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(f64::MIN_POSITIVE);
    let degenerate = evals.iter().take_while(|&&e| e - e0 <= DEGENERACY_TOL * scale).count();

    let vector = if degenerate == 1 {
        evecs.column(0).to_owned()
    } else {
        let block = evecs.slice(ndarray::s![.., ..degenerate]);
        let mut chosen = None;
        for basis in 0..h.space().total_dim() {
            // Projector onto the subspace applied to e_basis: Σ_k v_k conj(v_k[basis]).
            let coeffs = block.row(basis).mapv(|z| z.conj());
            let proj = block.dot(&coeffs);
            let norm = proj.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if norm > 1e-6 {
                chosen = Some(proj / C64::new(norm, 0.0));
                break;
            }
        }
        chosen.ok_or_else(|| QrmError::Invariant("degenerate ground space has no basis overlap".into()))?
    };
    let state = StateVector::normalized(h.space(), fix_phase(vector))?;
    Ok((e0, state))
}

fn fix_phase(mut v: Array1<C64>) -> Array1<C64> {
    let mut best = 0;
    let mut best_mag = -1.0;
    for (i, z) in v.iter().enumerate() {
        // strict comparison with a small relative slack keeps the lowest index on ties
        if z.norm() > best_mag * (1.0 + 1e-12) {
            best = i;
            best_mag = z.norm();
        }
    }
    if best_mag > 0.0 {
        let phase = v[best].conj() / best_mag;
        v.mapv_inplace(|z| z * phase);
    }
    v
}

/// The two parity sectors.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParityChain {
    /// p = +1: |g,0⟩, |e,1⟩, |g,2⟩, …
    Even,
    /// p = −1: |e,0⟩, |g,1⟩, |e,2⟩, …
    Odd,
}

impl fmt::Display for ParityChain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ParityChain::Even => "even",
            ParityChain::Odd => "odd",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainPopulation {
    pub label: BasisLabel,
    pub chain: ParityChain,
    pub population: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParityReport {
    pub parity_expectation: f64,
    /// Even chain ordered by phonon number, followed by the odd chain.
    pub chain_populations: Vec<ChainPopulation>,
}

impl ParityReport {
    pub fn chain_population(&self, chain: ParityChain) -> f64 {
        self.chain_populations
            .iter()
            .filter(|c| c.chain == chain)
            .map(|c| c.population)
            .sum()
    }
}

/// ⟨P⟩ and per-basis-state populations grouped by parity chain.
pub fn parity_analysis(state: &StateVector) -> Result<ParityReport> {
    let space = state.space();
    let p = expectation(state, &parity_operator(space))?;
    let pops = state.populations();
    let mut chain_populations = Vec::with_capacity(space.total_dim());
    for chain in [ParityChain::Even, ParityChain::Odd] {
        for n in 0..space.fock_dim() {
            // Even chain has the qubit in |g⟩ for even n and |e⟩ for odd n.
            let even_qubit = if n % 2 == 0 { Qubit::Ground } else { Qubit::Excited };
            let qubit = match chain {
                ParityChain::Even => even_qubit,
                ParityChain::Odd => even_qubit.flipped(),
            };
            chain_populations.push(ChainPopulation {
                label: BasisLabel { qubit, n },
                chain,
                population: pops[space.index(qubit, n)],
            });
        }
    }
    Ok(ParityReport { parity_expectation: p.re, chain_populations })
}

/// Ground-state observables at two cutoffs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutoffConvergence {
    pub fock_cutoff: usize,
    pub extended_cutoff: usize,
    pub energy: f64,
    pub energy_change: f64,
    pub phonon_number: f64,
    pub phonon_change: f64,
    /// Frequency unit for `energy_change`: the largest of |ω^R|, |ω₀^R|, |g|.
    pub energy_scale: f64,
}

impl CutoffConvergence {
    /// Both the energy change (in units of `energy_scale`) and the phonon
    /// number change are below `tol`.
    pub fn converged(&self, tol: f64) -> bool {
        self.energy_change / self.energy_scale < tol && self.phonon_change < tol
    }
}

/// Compare E₀ and ⟨a†a⟩ of the Rabi ground state at `space` and at a cutoff
/// `extra` levels larger.
pub fn cutoff_convergence(params: &QrmParams, space: HilbertSpace, extra: usize) -> Result<CutoffConvergence> {
    let larger = HilbertSpace::new(space.fock_cutoff() + extra)?;
    let observe = |sp: HilbertSpace| -> Result<(f64, f64)> {
        let (e, g) = ground_state(&build_qrm(params, sp))?;
        let n = expectation(&g, &operator_factory(sp, OperatorKind::Number))?.re;
        Ok((e, n))
    };
    let (e1, n1) = observe(space)?;
    let (e2, n2) = observe(larger)?;
    let energy_scale = [params.omega_r, params.omega0_r, params.g]
        .iter()
        .fold(0.0f64, |m, x| m.max(x.abs()))
        .max(f64::MIN_POSITIVE);
    Ok(CutoffConvergence {
        fock_cutoff: space.fock_cutoff(),
        extended_cutoff: larger.fock_cutoff(),
        energy: e1,
        energy_change: (e1 - e2).abs(),
        phonon_number: n1,
        phonon_change: (n1 - n2).abs(),
        energy_scale,
    })
}

/// Linear ramp between two Rabi-model parameter sets over `duration`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSchedule {
    /// Ramp duration Δt (s).
    pub duration: f64,
    pub start: QrmParams,
    pub end: QrmParams,
}

impl SweepSchedule {
    /// g(t) = g_final·t/Δt at fixed ω₀^R, ω^R.
    pub fn coupling_ramp(omega0_r: f64, omega_r: f64, g_final: f64, duration: f64) -> Self {
        Self {
            duration,
            start: QrmParams::new(omega0_r, omega_r, 0.0),
            end: QrmParams::new(omega0_r, omega_r, g_final),
        }
    }

    /// Ramp the sideband strength from zero to the final `ion` value at fixed
    /// detunings.
    pub fn from_ion(ion: &IonParams, duration: f64) -> Result<Self> {
        let end = crate::hamiltonian::qrm_params_from_detunings(ion)?;
        Ok(Self::coupling_ramp(end.omega0_r, end.omega_r, end.g, duration))
    }

    /// Fixed coupling `g`, blue detuning ramped linearly from `delta_b_start`
    /// to `delta_b_end` with the red detuning held.
    pub fn detuning_ramp(delta_r: f64, delta_b_start: f64, delta_b_end: f64, g: f64, duration: f64) -> Self {
        let params = |delta_b: f64| QrmParams::new(-0.5 * (delta_r + delta_b), 0.5 * (delta_r - delta_b), g);
        Self { duration, start: params(delta_b_start), end: params(delta_b_end) }
    }

    pub fn with_duration(&self, duration: f64) -> Self {
        Self { duration, ..*self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration.is_finite() && self.duration >= 0.0) {
            return Err(QrmError::InvalidParameters(format!(
                "sweep duration must be finite and non-negative, got {}",
                self.duration
            )));
        }
        self.start.validate()?;
        self.end.validate()
    }

    /// Parameters at time `t`; exactly `start` at 0 and `end` at Δt.
    pub fn params_at(&self, t: f64) -> QrmParams {
        if self.duration == 0.0 {
            return self.end;
        }
        let s = (t / self.duration).clamp(0.0, 1.0);
        let lerp = |a: f64, b: f64| a * (1.0 - s) + b * s;
        QrmParams::new(
            lerp(self.start.omega0_r, self.end.omega0_r),
            lerp(self.start.omega_r, self.end.omega_r),
            lerp(self.start.g, self.end.g),
        )
    }
}

/// Rabi Hamiltonian with parameters following a [`SweepSchedule`].
pub struct RampedQrm {
    space: HilbertSpace,
    schedule: SweepSchedule,
    sigma_z: Array1<f64>,
    number: Array1<f64>,
    coupling: ndarray::Array2<C64>,
}

impl RampedQrm {
    pub fn new(schedule: SweepSchedule, space: HilbertSpace) -> Self {
        Self {
            space,
            schedule,
            sigma_z: Array1::from_iter(space.labels().map(|l| l.qubit.sigma_z())),
            number: Array1::from_iter(space.labels().map(|l| l.n as f64)),
            coupling: qrm_coupling(space).into_matrix(),
        }
    }
}

impl TimeDependentHamiltonian for RampedQrm {
    fn space(&self) -> HilbertSpace {
        self.space
    }

    fn matrix_at(&self, t: f64) -> ndarray::Array2<C64> {
        let p = self.schedule.params_at(t);
        let mut h = &self.coupling * C64::new(p.g, 0.0);
        for i in 0..self.space.total_dim() {
            h[[i, i]] += 0.5 * p.omega0_r * self.sigma_z[i] + p.omega_r * self.number[i];
        }
        h
    }

    fn fastest_frequency(&self) -> f64 {
        self.schedule.start.fastest_frequency().max(self.schedule.end.fastest_frequency())
    }
}

/// Points `(t or Δt, fidelity)`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FidelityCurve {
    pub points: Vec<(f64, f64)>,
}

#[derive(Clone, Debug)]
pub struct SweepOutcome {
    pub final_fidelity: f64,
    /// Fidelity against the instantaneous ground state at each snapshot.
    pub curve: FidelityCurve,
    pub trajectory: Trajectory,
}

/// Start in |g,0⟩, integrate the swept Rabi model and compare every snapshot
/// with the instantaneous ground state.
///
/// `config` supplies the step control; its `t_final` is replaced by the
/// schedule duration. A zero duration is a sudden quench: the state stays
/// |g,0⟩ and is compared with the ground state of the final parameters.
pub fn adiabatic_sweep(schedule: &SweepSchedule, space: HilbertSpace, config: &EvolutionConfig) -> Result<SweepOutcome> {
    schedule.validate()?;
    let psi0 = StateVector::basis(space, Qubit::Ground, 0)?;
    let config = EvolutionConfig { t_final: schedule.duration, ..*config };
    let trajectory = if schedule.duration == 0.0 {
        Trajectory { times: vec![0.0], states: vec![psi0.clone()], norm_drift: (psi0.norm() - 1.0).abs() }
    } else {
        let h = RampedQrm::new(*schedule, space);
        evolve(Hamiltonian::driven(&h), &psi0, &config)?
    };
    let mut curve = FidelityCurve::default();
    for (t, state) in trajectory.iter() {
        let target = if schedule.duration == 0.0 { schedule.end } else { schedule.params_at(t) };
        let (_, ground) = ground_state(&build_qrm(&target, space))?;
        curve.points.push((t, fidelity(&ground, state)?));
    }
    let final_fidelity = curve.points.last().map(|p| p.1).unwrap_or(0.0);
    Ok(SweepOutcome { final_fidelity, curve, trajectory })
}

/// `count` durations spaced geometrically from `first` to `last` inclusive.
pub fn geometric_ladder(first: f64, last: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![first],
        _ => {
            let ratio = (last / first).powf(1.0 / (count - 1) as f64);
            (0..count)
                .map(|k| if k == count - 1 { last } else { first * ratio.powi(k as i32) })
                .collect()
        }
    }
}
