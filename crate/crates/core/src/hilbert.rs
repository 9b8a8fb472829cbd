//! Truncated qubit ⊗ Fock space, dense operators and state vectors.
//!
//! Basis ordering is qubit-major: the state |q, n⟩ lives at index
//! `q·(N+1) + n` with `q = 0` for |g⟩ and `q = 1` for |e⟩, where `N` is the
//! Fock cutoff. The Pauli convention is σ_z|e⟩ = +|e⟩, σ_z|g⟩ = −|g⟩ and
//! σ⁺ = |e⟩⟨g|.

use std::{fmt, ops, str::FromStr};

use ndarray::{Array1, Array2, Zip};
use num_complex::ComplexFloat;
use serde::{Deserialize, Serialize};

use crate::{QrmError, Result, C64};

const NORM_TOL: f64 = 1e-9;

/// Two-level system state label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Qubit {
    #[serde(rename = "g")]
    Ground,
    #[serde(rename = "e")]
    Excited,
}

impl Qubit {
    pub fn index(self) -> usize {
        match self {
            Qubit::Ground => 0,
            Qubit::Excited => 1,
        }
    }

    /// Eigenvalue of σ_z.
    pub fn sigma_z(self) -> f64 {
        match self {
            Qubit::Ground => -1.0,
            Qubit::Excited => 1.0,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Qubit::Ground => Qubit::Excited,
            Qubit::Excited => Qubit::Ground,
        }
    }
}

impl fmt::Display for Qubit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Qubit::Ground => "g",
            Qubit::Excited => "e",
        })
    }
}

impl FromStr for Qubit {
    type Err = QrmError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "g" | "ground" => Ok(Qubit::Ground),
            "e" | "excited" => Ok(Qubit::Excited),
            other => Err(QrmError::InvalidParameters(format!(
                "unknown qubit label '{other}' (expected 'g' or 'e')"
            ))),
        }
    }
}

/// Product basis label |q, n⟩.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BasisLabel {
    pub qubit: Qubit,
    pub n: usize,
}

impl fmt::Display for BasisLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|{},{}>", self.qubit, self.n)
    }
}

/// Qubit ⊗ Fock space keeping phonon numbers `0..=fock_cutoff`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HilbertSpace {
    fock_cutoff: usize,
}

impl HilbertSpace {
    pub fn new(fock_cutoff: usize) -> Result<Self> {
        if fock_cutoff == 0 {
            return Err(QrmError::InvalidCutoff(fock_cutoff));
        }
        Ok(Self { fock_cutoff })
    }

    pub fn fock_cutoff(&self) -> usize {
        self.fock_cutoff
    }

    /// Number of retained Fock levels, `N + 1`.
    pub fn fock_dim(&self) -> usize {
        self.fock_cutoff + 1
    }

    pub fn total_dim(&self) -> usize {
        2 * self.fock_dim()
    }

    pub fn index(&self, qubit: Qubit, n: usize) -> usize {
        debug_assert!(n <= self.fock_cutoff);
        qubit.index() * self.fock_dim() + n
    }

    pub fn label(&self, index: usize) -> BasisLabel {
        let qubit = if index < self.fock_dim() { Qubit::Ground } else { Qubit::Excited };
        BasisLabel { qubit, n: index % self.fock_dim() }
    }

    pub fn labels(&self) -> impl Iterator<Item = BasisLabel> + '_ {
        (0..self.total_dim()).map(|i| self.label(i))
    }

    pub(crate) fn ensure_same(&self, other: &HilbertSpace) -> Result<()> {
        if self != other {
            return Err(QrmError::SpaceMismatch {
                left: self.fock_cutoff,
                right: other.fock_cutoff,
            });
        }
        Ok(())
    }
}

/// Build the truncated space with Fock levels `0..=fock_cutoff`.
pub fn make_space(fock_cutoff: usize) -> Result<HilbertSpace> {
    HilbertSpace::new(fock_cutoff)
}

/// Elementary operators available from [`operator_factory`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum OperatorKind {
    Destroy,
    Create,
    Number,
    SigmaZ,
    SigmaPlus,
    SigmaMinus,
    SigmaX,
    SigmaY,
    Identity,
}

impl OperatorKind {
    pub const ALL: [OperatorKind; 9] = [
        OperatorKind::Destroy,
        OperatorKind::Create,
        OperatorKind::Number,
        OperatorKind::SigmaZ,
        OperatorKind::SigmaPlus,
        OperatorKind::SigmaMinus,
        OperatorKind::SigmaX,
        OperatorKind::SigmaY,
        OperatorKind::Identity,
    ];
}

impl FromStr for OperatorKind {
    type Err = QrmError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "destroy" => OperatorKind::Destroy,
            "create" => OperatorKind::Create,
            "number" => OperatorKind::Number,
            "sigma_z" => OperatorKind::SigmaZ,
            "sigma_plus" => OperatorKind::SigmaPlus,
            "sigma_minus" => OperatorKind::SigmaMinus,
            "sigma_x" => OperatorKind::SigmaX,
            "sigma_y" => OperatorKind::SigmaY,
            "identity" => OperatorKind::Identity,
            other => return Err(QrmError::UnknownOperatorKind(other.to_owned())),
        })
    }
}

/// Dense complex matrix acting on a [`HilbertSpace`].
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    space: HilbertSpace,
    matrix: Array2<C64>,
}

impl Operator {
    pub fn from_matrix(space: HilbertSpace, matrix: Array2<C64>) -> Result<Self> {
        let d = space.total_dim();
        if matrix.dim() != (d, d) {
            return Err(QrmError::ShapeMismatch {
                expected: format!("{d}x{d}"),
                got: format!("{}x{}", matrix.nrows(), matrix.ncols()),
            });
        }
        Ok(Self { space, matrix })
    }

    pub fn zeros(space: HilbertSpace) -> Self {
        let d = space.total_dim();
        Self { space, matrix: Array2::zeros((d, d)) }
    }

    /// Embed a Fock-space matrix (shape `(N+1)×(N+1)`) as `mode ⊗ 1_qubit`.
    pub fn from_mode(space: HilbertSpace, mode: &Array2<C64>) -> Self {
        let mut out = Self::zeros(space);
        for q in [Qubit::Ground, Qubit::Excited] {
            out.set_block(q, q, mode);
        }
        out
    }

    /// Embed a 2×2 qubit matrix (rows/cols ordered g, e) as `1_mode ⊗ qubit`.
    pub fn from_qubit(space: HilbertSpace, qubit: [[C64; 2]; 2]) -> Self {
        let mut out = Self::zeros(space);
        let nd = space.fock_dim();
        for (r, row) in qubit.iter().enumerate() {
            for (c, &v) in row.iter().enumerate() {
                if v != C64::new(0.0, 0.0) {
                    for n in 0..nd {
                        out.matrix[[r * nd + n, c * nd + n]] = v;
                    }
                }
            }
        }
        out
    }

    pub(crate) fn set_block(&mut self, row: Qubit, col: Qubit, block: &Array2<C64>) {
        let nd = self.space.fock_dim();
        let (r0, c0) = (row.index() * nd, col.index() * nd);
        self.matrix
            .slice_mut(ndarray::s![r0..r0 + nd, c0..c0 + nd])
            .assign(block);
    }

    pub fn space(&self) -> HilbertSpace {
        self.space
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> Array2<C64> {
        self.matrix
    }

    pub fn adjoint(&self) -> Self {
        Self {
            space: self.space,
            matrix: self.matrix.t().mapv(|z| z.conj()),
        }
    }

    /// max |M − M†| over all entries.
    pub fn hermiticity_error(&self) -> f64 {
        crate::linalg::hermiticity_error(&self.matrix)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_error() < tol
    }

    pub fn max_abs(&self) -> f64 {
        crate::linalg::max_abs(&self.matrix)
    }

    pub fn scaled(&self, factor: C64) -> Self {
        Self { space: self.space, matrix: &self.matrix * factor }
    }

    pub fn commutator(&self, other: &Operator) -> Result<Operator> {
        self.space.ensure_same(&other.space)?;
        let ab = self.matrix.dot(&other.matrix);
        let ba = other.matrix.dot(&self.matrix);
        Ok(Operator { space: self.space, matrix: ab - ba })
    }

    pub fn apply(&self, state: &StateVector) -> Result<StateVector> {
        self.space.ensure_same(&state.space)?;
        Ok(StateVector::from_raw(self.space, self.matrix.dot(&state.amplitudes)))
    }

    pub fn element(&self, row: BasisLabel, col: BasisLabel) -> C64 {
        self.matrix[[self.space.index(row.qubit, row.n), self.space.index(col.qubit, col.n)]]
    }
}

macro_rules! impl_binop {
    ($trait:ident, $method:ident, $op:tt) => {
        impl ops::$trait<&Operator> for &Operator {
            type Output = Operator;

            fn $method(self, rhs: &Operator) -> Operator {
                assert_eq!(self.space, rhs.space, "operator spaces differ");
                Operator { space: self.space, matrix: &self.matrix $op &rhs.matrix }
            }
        }
    };
}

impl_binop!(Add, add, +);
impl_binop!(Sub, sub, -);

impl ops::Mul<&Operator> for &Operator {
    type Output = Operator;

    fn mul(self, rhs: &Operator) -> Operator {
        assert_eq!(self.space, rhs.space, "operator spaces differ");
        Operator { space: self.space, matrix: self.matrix.dot(&rhs.matrix) }
    }
}

impl ops::Mul<&Operator> for C64 {
    type Output = Operator;

    fn mul(self, rhs: &Operator) -> Operator {
        rhs.scaled(self)
    }
}

impl ops::Mul<&Operator> for f64 {
    type Output = Operator;

    fn mul(self, rhs: &Operator) -> Operator {
        rhs.scaled(C64::new(self, 0.0))
    }
}

/// Annihilation operator on the Fock factor alone.
pub(crate) fn mode_destroy(fock_dim: usize) -> Array2<C64> {
    let mut a = Array2::zeros((fock_dim, fock_dim));
    for n in 1..fock_dim {
        a[[n - 1, n]] = C64::new((n as f64).sqrt(), 0.0);
    }
    a
}

/// Build an elementary operator embedded in the full space.
pub fn operator_factory(space: HilbertSpace, kind: OperatorKind) -> Operator {
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    let i = C64::new(0.0, 1.0);
    let nd = space.fock_dim();
    match kind {
        OperatorKind::Destroy => Operator::from_mode(space, &mode_destroy(nd)),
        OperatorKind::Create => Operator::from_mode(space, &mode_destroy(nd)).adjoint(),
        OperatorKind::Number => {
            let n = Array2::from_diag(&Array1::from_iter((0..nd).map(|k| C64::new(k as f64, 0.0))));
            Operator::from_mode(space, &n)
        }
        OperatorKind::Identity => Operator::from_mode(space, &Array2::eye(nd)),
        // Qubit matrices are indexed [g, e].
        OperatorKind::SigmaZ => Operator::from_qubit(space, [[-one, zero], [zero, one]]),
        OperatorKind::SigmaPlus => Operator::from_qubit(space, [[zero, zero], [one, zero]]),
        OperatorKind::SigmaMinus => Operator::from_qubit(space, [[zero, one], [zero, zero]]),
        OperatorKind::SigmaX => Operator::from_qubit(space, [[zero, one], [one, zero]]),
        // σ_y = −i(σ⁺ − σ⁻)
        OperatorKind::SigmaY => Operator::from_qubit(space, [[zero, i], [-i, zero]]),
    }
}

fn ln_factorials(up_to: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(up_to + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for k in 1..=up_to {
        acc += (k as f64).ln();
        out.push(acc);
    }
    out
}

/// Generalised Laguerre polynomial L_n^{(k)}(x) by upward recurrence.
pub(crate) fn laguerre(n: usize, k: usize, x: f64) -> f64 {
    let k = k as f64;
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = 1.0 + k - x;
    for j in 1..n {
        let jf = j as f64;
        let next = ((2.0 * jf + 1.0 + k - x) * cur - (jf + k) * prev) / (jf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// Matrix of D(α) = exp(α a† − α* a) on the Fock factor, `fock_dim` levels.
///
/// Entries are the exact matrix elements of the untruncated displacement,
/// ⟨m|D(α)|n⟩ = √(n!/m!) α^{m−n} e^{−|α|²/2} L_n^{(m−n)}(|α|²) for m ≥ n, and
/// the mirrored expression with −α* for m < n.
pub(crate) fn mode_displacement(fock_dim: usize, alpha: C64) -> Array2<C64> {
    if alpha == C64::new(0.0, 0.0) {
        return Array2::eye(fock_dim);
    }
    let x = alpha.norm_sqr();
    let ln_abs = alpha.norm().ln();
    let lnf = ln_factorials(fock_dim);
    let lower = alpha.arg();
    let upper = (-alpha.conj()).arg();
    Array2::from_shape_fn((fock_dim, fock_dim), |(m, n)| {
        let (small, k, phase) = if m >= n { (n, m - n, lower) } else { (m, n - m, upper) };
        let big = small + k;
        let ln_mag = 0.5 * (lnf[small] - lnf[big]) + k as f64 * ln_abs - 0.5 * x;
        let value = ln_mag.exp() * laguerre(small, k, x);
        C64::from_polar(1.0, k as f64 * phase) * value
    })
}

/// Displacement operator D(α) embedded as `D(α) ⊗ 1_qubit`.
///
/// The retained block holds the exact elements of the infinite-dimensional
/// operator, so it is only approximately unitary near the truncation edge.
pub fn displacement(space: HilbertSpace, alpha: C64) -> Operator {
    if alpha.norm_sqr() > 0.25 * space.fock_cutoff() as f64 {
        log::warn!(
            "displacement |alpha|^2 = {:.3} is not small against the Fock cutoff {}",
            alpha.norm_sqr(),
            space.fock_cutoff()
        );
    }
    Operator::from_mode(space, &mode_displacement(space.fock_dim(), alpha))
}

/// Amplitude vector on a [`HilbertSpace`].
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    space: HilbertSpace,
    amplitudes: Array1<C64>,
}

impl StateVector {
    /// Wrap amplitudes that must already be normalized (within 1e-9).
    pub fn new(space: HilbertSpace, amplitudes: Array1<C64>) -> Result<Self> {
        if amplitudes.len() != space.total_dim() {
            return Err(QrmError::ShapeMismatch {
                expected: space.total_dim().to_string(),
                got: amplitudes.len().to_string(),
            });
        }
        let state = Self { space, amplitudes };
        let norm = state.norm();
        if !norm.is_finite() || (norm - 1.0).abs() > NORM_TOL {
            return Err(QrmError::NotNormalized(norm));
        }
        Ok(state)
    }

    /// Normalize arbitrary nonzero amplitudes.
    pub fn normalized(space: HilbertSpace, amplitudes: Array1<C64>) -> Result<Self> {
        if amplitudes.len() != space.total_dim() {
            return Err(QrmError::ShapeMismatch {
                expected: space.total_dim().to_string(),
                got: amplitudes.len().to_string(),
            });
        }
        let norm = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(QrmError::NotNormalized(norm));
        }
        Ok(Self { space, amplitudes: amplitudes / C64::new(norm, 0.0) })
    }

    /// Propagated amplitudes; norm is tracked by the caller, never forced.
    pub(crate) fn from_raw(space: HilbertSpace, amplitudes: Array1<C64>) -> Self {
        debug_assert_eq!(amplitudes.len(), space.total_dim());
        Self { space, amplitudes }
    }

    pub fn basis(space: HilbertSpace, qubit: Qubit, n: usize) -> Result<Self> {
        if n > space.fock_cutoff() {
            return Err(QrmError::InvalidParameters(format!(
                "phonon number {n} exceeds Fock cutoff {}",
                space.fock_cutoff()
            )));
        }
        let mut amps = Array1::zeros(space.total_dim());
        amps[space.index(qubit, n)] = C64::new(1.0, 0.0);
        Ok(Self { space, amplitudes: amps })
    }

    /// Normalized superposition Σ c_k |q_k, n_k⟩.
    pub fn superposition(space: HilbertSpace, terms: &[(C64, Qubit, usize)]) -> Result<Self> {
        let mut amps = Array1::zeros(space.total_dim());
        for &(c, q, n) in terms {
            if n > space.fock_cutoff() {
                return Err(QrmError::InvalidParameters(format!(
                    "phonon number {n} exceeds Fock cutoff {}",
                    space.fock_cutoff()
                )));
            }
            amps[space.index(q, n)] += c;
        }
        Self::normalized(space, amps)
    }

    pub fn space(&self) -> HilbertSpace {
        self.space
    }

    pub fn amplitudes(&self) -> &Array1<C64> {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Array1<C64> {
        self.amplitudes
    }

    pub fn amplitude(&self, qubit: Qubit, n: usize) -> C64 {
        self.amplitudes[self.space.index(qubit, n)]
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.amplitudes.iter().all(|z| z.is_finite())
    }

    /// ⟨self|other⟩
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        self.space.ensure_same(&other.space)?;
        let mut acc = C64::new(0.0, 0.0);
        Zip::from(&self.amplitudes)
            .and(&other.amplitudes)
            .for_each(|a, b| acc += a.conj() * b);
        Ok(acc)
    }

    /// |⟨q,n|ψ⟩|² for every basis state, in basis order.
    pub fn populations(&self) -> Array1<f64> {
        self.amplitudes.mapv(|z| z.norm_sqr())
    }

    /// Phonon-number distribution traced over the qubit.
    pub fn fock_populations(&self) -> Array1<f64> {
        let nd = self.space.fock_dim();
        let p = self.populations();
        Array1::from_shape_fn(nd, |n| p[n] + p[nd + n])
    }
}

/// ⟨ψ|O|ψ⟩
pub fn expectation(state: &StateVector, op: &Operator) -> Result<C64> {
    state.space.ensure_same(&op.space)?;
    let o_psi = op.matrix.dot(&state.amplitudes);
    let mut acc = C64::new(0.0, 0.0);
    Zip::from(&state.amplitudes).and(&o_psi).for_each(|a, b| acc += a.conj() * b);
    Ok(acc)
}

/// |⟨ψ|φ⟩|², clamped to [0, 1].
pub fn fidelity(psi: &StateVector, phi: &StateVector) -> Result<f64> {
    Ok(psi.inner(phi)?.norm_sqr().clamp(0.0, 1.0))
}
