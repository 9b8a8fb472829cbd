//! Time evolution, rotating frames and observable extraction.
//!
//! Static Hamiltonians are propagated exactly through one eigendecomposition.
//! Driven Hamiltonians use the midpoint exponential (second-order Magnus) or
//! classical RK4 on a uniform grid. The norm is never restored by hand; its
//! largest deviation from one is reported as [`Trajectory::norm_drift`].

use std::f64::consts::TAU;

use ndarray::{Array1, Zip};
use serde::{Deserialize, Serialize};

use crate::{
    hamiltonian::{QrmParams, TimeDependentHamiltonian},
    hilbert::{expectation, HilbertSpace, Operator, Qubit, StateVector},
    linalg, QrmError, Result, C64,
};

pub const DEFAULT_STEPS_PER_PERIOD: usize = 40;
const MIN_STEPS_PER_PERIOD: f64 = 20.0;
const HERMITIAN_TOL: f64 = 1e-12;
const REAL_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Exact spectral propagator; static Hamiltonians only.
    StaticExpm,
    /// Midpoint exponential, exp(−i H(t + dt/2) dt).
    #[default]
    Magnus2,
    Rk4,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepSize {
    /// Fixed step in seconds.
    Fixed(f64),
    /// Steps per period of the fastest frequency of the Hamiltonian.
    PerPeriod(usize),
}

impl Default for StepSize {
    fn default() -> Self {
        StepSize::PerPeriod(DEFAULT_STEPS_PER_PERIOD)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvolutionConfig {
    pub t_final: f64,
    #[serde(default)]
    pub step: StepSize,
    #[serde(default)]
    pub method: Method,
    /// Keep every `snapshot_stride`-th step (the final time is always kept).
    #[serde(default = "default_stride")]
    pub snapshot_stride: usize,
}

fn default_stride() -> usize {
    1
}

impl EvolutionConfig {
    pub fn new(t_final: f64) -> Self {
        Self {
            t_final,
            step: StepSize::default(),
            method: Method::default(),
            snapshot_stride: 1,
        }
    }

    pub fn with_step(mut self, step: StepSize) -> Self {
        self.step = step;
        self
    }

    pub fn with_method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.snapshot_stride = stride;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_final.is_finite() && self.t_final >= 0.0) {
            return Err(QrmError::InvalidParameters(format!(
                "t_final must be finite and non-negative, got {}",
                self.t_final
            )));
        }
        match self.step {
            StepSize::Fixed(dt) if !(dt.is_finite() && dt > 0.0) => {
                return Err(QrmError::InvalidParameters(format!("dt must be positive, got {dt}")))
            }
            StepSize::PerPeriod(0) => {
                return Err(QrmError::InvalidParameters("steps_per_period must be positive".into()))
            }
            _ => {}
        }
        if self.snapshot_stride == 0 {
            return Err(QrmError::InvalidParameters("snapshot_stride must be positive".into()));
        }
        Ok(())
    }

    /// Uniform grid `(n_steps, dt)` covering `[0, t_final]`.
    fn grid(&self, fastest_frequency: f64) -> (usize, f64) {
        if self.t_final == 0.0 {
            return (0, 0.0);
        }
        let target = match self.step {
            StepSize::Fixed(dt) => {
                if fastest_frequency > 0.0 {
                    let per_period = TAU / fastest_frequency / dt;
                    if per_period < MIN_STEPS_PER_PERIOD {
                        log::warn!(
                            "time step resolves only {per_period:.1} steps per fastest period (< {MIN_STEPS_PER_PERIOD})"
                        );
                    }
                }
                dt
            }
            StepSize::PerPeriod(n) if fastest_frequency > 0.0 => TAU / fastest_frequency / n as f64,
            StepSize::PerPeriod(_) => self.t_final,
        };
        let n_steps = ((self.t_final / target) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        (n_steps, self.t_final / n_steps as f64)
    }
}

/// Either kind of generator accepted by [`evolve`].
#[derive(Clone, Copy)]
pub enum Hamiltonian<'a> {
    Static(&'a Operator),
    Driven(&'a dyn TimeDependentHamiltonian),
}

impl<'a> From<&'a Operator> for Hamiltonian<'a> {
    fn from(op: &'a Operator) -> Self {
        Hamiltonian::Static(op)
    }
}

impl<'a> Hamiltonian<'a> {
    pub fn driven(h: &'a dyn TimeDependentHamiltonian) -> Self {
        Hamiltonian::Driven(h)
    }

    fn space(&self) -> HilbertSpace {
        match self {
            Hamiltonian::Static(op) => op.space(),
            Hamiltonian::Driven(h) => h.space(),
        }
    }
}

/// Snapshots of a propagated state.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<StateVector>,
    /// max |‖ψ‖ − 1| over every step of the run.
    pub norm_drift: f64,
}

impl Trajectory {
    pub fn final_state(&self) -> &StateVector {
        self.states.last().expect("trajectory always holds the initial state")
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, &StateVector)> {
        self.times.iter().copied().zip(self.states.iter())
    }
}

fn snapshot_due(step: usize, n_steps: usize, stride: usize) -> bool {
    step % stride == 0 || step == n_steps
}

fn check_finite(state: &StateVector, time: f64) -> Result<f64> {
    let norm = state.norm();
    if !norm.is_finite() {
        return Err(QrmError::NonFinite { time });
    }
    Ok((norm - 1.0).abs())
}

/// Propagate `psi0` from t = 0 to `config.t_final`.
///
/// Static Hamiltonians always use the exact spectral propagator, evaluated
/// directly at every snapshot time. Driven Hamiltonians use `config.method`
/// ([`Method::StaticExpm`] is rejected for them).
pub fn evolve<'a>(h: impl Into<Hamiltonian<'a>>, psi0: &StateVector, config: &EvolutionConfig) -> Result<Trajectory> {
    let h = h.into();
    config.validate()?;
    h.space().ensure_same(&psi0.space())?;
    check_finite(psi0, 0.0)?;
    match h {
        Hamiltonian::Static(op) => evolve_static(op, psi0, config),
        Hamiltonian::Driven(td) => evolve_driven(td, psi0, config),
    }
}

fn evolve_static(op: &Operator, psi0: &StateVector, config: &EvolutionConfig) -> Result<Trajectory> {
    linalg::ensure_hermitian(op.matrix(), HERMITIAN_TOL)?;
    let (evals, evecs) = linalg::eigh(op.matrix())?;
    let width = evals[evals.len() - 1] - evals[0];
    let (n_steps, dt) = config.grid(width);
    let space = op.space();
    let mut traj = Trajectory { times: Vec::new(), states: Vec::new(), norm_drift: 0.0 };
    for k in 0..=n_steps {
        if !snapshot_due(k, n_steps, config.snapshot_stride) {
            continue;
        }
        let t = k as f64 * dt;
        let amps = linalg::apply_spectral_propagator(&evals, &evecs, psi0.amplitudes().view(), t);
        let state = StateVector::from_raw(space, amps);
        traj.norm_drift = traj.norm_drift.max(check_finite(&state, t)?);
        traj.times.push(t);
        traj.states.push(state);
    }
    Ok(traj)
}

fn rk4_step(h: &dyn TimeDependentHamiltonian, psi: &Array1<C64>, t: f64, dt: f64) -> Array1<C64> {
    let mi = C64::new(0.0, -1.0);
    let deriv = |time: f64, v: &Array1<C64>| h.matrix_at(time).dot(v) * mi;
    let half = C64::new(0.5 * dt, 0.0);
    let full = C64::new(dt, 0.0);
    let k1 = deriv(t, psi);
    let k2 = deriv(t + 0.5 * dt, &(psi + &(&k1 * half)));
    let k3 = deriv(t + 0.5 * dt, &(psi + &(&k2 * half)));
    let k4 = deriv(t + dt, &(psi + &(&k3 * full)));
    let mut out = psi.clone();
    let sixth = C64::new(dt / 6.0, 0.0);
    Zip::from(&mut out)
        .and(&k1)
        .and(&k2)
        .and(&k3)
        .and(&k4)
        .for_each(|o, &a, &b, &c, &d| *o += sixth * (a + 2.0 * b + 2.0 * c + d));
    out
}

fn evolve_driven(h: &dyn TimeDependentHamiltonian, psi0: &StateVector, config: &EvolutionConfig) -> Result<Trajectory> {
    if config.method == Method::StaticExpm {
        return Err(QrmError::InvalidParameters(
            "static_expm propagation needs a time-independent Hamiltonian".into(),
        ));
    }
    linalg::ensure_hermitian(&h.matrix_at(0.0), HERMITIAN_TOL)?;
    let (n_steps, dt) = config.grid(h.fastest_frequency());
    let space = h.space();
    let mut psi = psi0.amplitudes().clone();
    let mut traj = Trajectory {
        times: vec![0.0],
        states: vec![psi0.clone()],
        norm_drift: (psi0.norm() - 1.0).abs(),
    };
    for k in 0..n_steps {
        let t = k as f64 * dt;
        psi = match config.method {
            Method::Magnus2 => linalg::expm_multiply(&h.matrix_at(t + 0.5 * dt), &psi, dt)?,
            Method::Rk4 => rk4_step(h, &psi, t, dt),
            Method::StaticExpm => unreachable!(),
        };
        let t_next = (k + 1) as f64 * dt;
        let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !norm.is_finite() {
            return Err(QrmError::NonFinite { time: t_next });
        }
        traj.norm_drift = traj.norm_drift.max((norm - 1.0).abs());
        if snapshot_due(k + 1, n_steps, config.snapshot_stride) {
            traj.times.push(t_next);
            traj.states.push(StateVector::from_raw(space, psi.clone()));
        }
    }
    Ok(traj)
}

/// Rotating frame generated by `α a†a + β σ_z` (both rad/s).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameSpec {
    pub alpha: f64,
    pub beta: f64,
}

impl FrameSpec {
    fn phase(&self, qubit: Qubit, n: usize, t: f64) -> C64 {
        C64::from_polar(1.0, t * (self.alpha * n as f64 + self.beta * qubit.sigma_z()))
    }
}

/// exp(+i t (α a†a + β σ_z)) ψ
pub fn to_frame(psi: &StateVector, t: f64, frame: &FrameSpec) -> StateVector {
    rotate(psi, t, frame)
}

/// exp(−i t (α a†a + β σ_z)) ψ
pub fn from_frame(psi: &StateVector, t: f64, frame: &FrameSpec) -> StateVector {
    rotate(psi, -t, frame)
}

fn rotate(psi: &StateVector, t: f64, frame: &FrameSpec) -> StateVector {
    let space = psi.space();
    let amps = Array1::from_iter(
        space
            .labels()
            .zip(psi.amplitudes().iter())
            .map(|(l, &a)| a * frame.phase(l.qubit, l.n, t)),
    );
    StateVector::from_raw(space, amps)
}

/// One column of an [`ObservableSeries`].
#[derive(Clone, Debug, PartialEq)]
pub enum Series {
    Real(Vec<f64>),
    Complex(Vec<C64>),
}

impl Series {
    pub fn as_real(&self) -> Option<&[f64]> {
        match self {
            Series::Real(v) => Some(v),
            Series::Complex(_) => None,
        }
    }
}

/// Expectation values per snapshot, one column per operator.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservableSeries {
    pub times: Vec<f64>,
    pub columns: Vec<Series>,
}

/// Evaluate ⟨ψ(t)|O|ψ(t)⟩ on every snapshot. Hermitian operators produce
/// real columns after checking the imaginary parts are below 1e-10
/// (relative to the operator scale).
pub fn observable_series(traj: &Trajectory, ops: &[&Operator]) -> Result<ObservableSeries> {
    let mut columns = Vec::with_capacity(ops.len());
    for op in ops {
        let values: Vec<C64> = traj.states.iter().map(|s| expectation(s, op)).collect::<Result<_>>()?;
        let scale = op.max_abs().max(1.0);
        if linalg::ensure_hermitian(op.matrix(), HERMITIAN_TOL).is_ok() {
            if let Some(bad) = values.iter().find(|v| v.im.abs() > REAL_TOL * scale) {
                return Err(QrmError::Invariant(format!(
                    "Hermitian observable has imaginary expectation {:e}",
                    bad.im
                )));
            }
            columns.push(Series::Real(values.iter().map(|v| v.re).collect()));
        } else {
            columns.push(Series::Complex(values));
        }
    }
    Ok(ObservableSeries { times: traj.times.clone(), columns })
}

/// Closed-form Jaynes-Cummings evolution in the Schrödinger frame.
///
/// The JC Hamiltonian `ω₀/2 σ_z + ω a†a + i g (σ⁺a − σ⁻a†)` is block diagonal
/// in the doublets {|e,n⟩, |g,n+1⟩} plus the isolated |g,0⟩; each doublet
/// exponential is written out explicitly. States with weight on |e,N⟩ are
/// rejected because their partner lies outside the truncated space.
pub fn jc_analytic(params: &QrmParams, psi0: &StateVector, t: f64) -> Result<StateVector> {
    let space = psi0.space();
    let n_max = space.fock_cutoff();
    if psi0.amplitude(Qubit::Excited, n_max).norm() > 0.0 {
        return Err(QrmError::InvalidParameters(format!(
            "analytic JC solution needs zero weight on |e,{n_max}>"
        )));
    }
    let QrmParams { omega0_r: w0, omega_r: w, g } = *params;
    let mut out = Array1::zeros(space.total_dim());
    let g0 = space.index(Qubit::Ground, 0);
    out[g0] = psi0.amplitudes()[g0] * C64::from_polar(1.0, 0.5 * w0 * t);
    for n in 0..n_max {
        let (ie, ig) = (space.index(Qubit::Excited, n), space.index(Qubit::Ground, n + 1));
        let (ce, cg) = (psi0.amplitudes()[ie], psi0.amplitudes()[ig]);
        // Block [[E_e, i g s], [−i g s, E_g]] = c·1 + h_z σ_z + h_y σ_y (in (e, g) order).
        let e_e = 0.5 * w0 + n as f64 * w;
        let e_g = -0.5 * w0 + (n + 1) as f64 * w;
        let s = ((n + 1) as f64).sqrt();
        let centre = 0.5 * (e_e + e_g);
        let hz = 0.5 * (e_e - e_g);
        let hy = -g * s;
        let r = hz.hypot(hy);
        let (cos, sin) = ((r * t).cos(), (r * t).sin());
        let (nz, ny) = if r > 0.0 { (hz / r, hy / r) } else { (0.0, 0.0) };
        // exp(−i t h·σ) = cos − i sin (n_z σ_z + n_y σ_y)
        let u_ee = C64::new(cos, -sin * nz);
        let u_gg = C64::new(cos, sin * nz);
        let u_eg = C64::new(-sin * ny, 0.0); // −i sin n_y (−i)
        let u_ge = C64::new(sin * ny, 0.0); // −i sin n_y (i)
        let phase = C64::from_polar(1.0, -centre * t);
        out[ie] = phase * (u_ee * ce + u_eg * cg);
        out[ig] = phase * (u_ge * ce + u_gg * cg);
    }
    Ok(StateVector::from_raw(space, out))
}
