//! Dense kernels shared by the propagators and the spectral routines.

use ndarray::{Array1, Array2, ArrayView1, ShapeBuilder, Zip};
use ndarray_linalg::{Eigh, UPLO};

use crate::{QrmError, Result, C64};

/// Largest number of Taylor terms per substep before giving up.
const MAX_TAYLOR_TERMS: usize = 60;
/// Substeps are chosen so that ‖A·dt‖₁ per substep stays below this.
const SUBSTEP_NORM: f64 = 2.0;

pub fn max_abs(m: &Array2<C64>) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn hermiticity_error(m: &Array2<C64>) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for r in 0..n {
        for c in r..n {
            worst = worst.max((m[[r, c]] - m[[c, r]].conj()).norm());
        }
    }
    worst
}

/// Reject matrices whose anti-Hermitian part exceeds `rel_tol` relative to
/// the largest entry (absolute for matrices with entries below one).
pub fn ensure_hermitian(m: &Array2<C64>, rel_tol: f64) -> Result<()> {
    let err = hermiticity_error(m);
    if !(err <= rel_tol * max_abs(m).max(1.0)) {
        return Err(QrmError::NotHermitian(err));
    }
    Ok(())
}

/// Induced 1-norm (max column sum).
pub fn one_norm(m: &Array2<C64>) -> f64 {
    m.columns()
        .into_iter()
        .map(|col| col.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Eigen-decomposition of a Hermitian matrix; eigenvalues ascending.
pub fn eigh(m: &Array2<C64>) -> Result<(Array1<f64>, Array2<C64>)> {
    // The LAPACK wrapper returns conjugated eigenvectors for row-major
    // complex input, so always hand it a column-major copy.
    let mut fortran = Array2::zeros(m.dim().f());
    fortran.assign(m);
    Ok(fortran.eigh(UPLO::Lower)?)
}

/// exp(−i·t·H)·v for Hermitian `H` given its eigen-decomposition.
pub fn apply_spectral_propagator(
    evals: &Array1<f64>,
    evecs: &Array2<C64>,
    v: ArrayView1<C64>,
    t: f64,
) -> Array1<C64> {
    let mut coeffs = evecs.t().mapv(|z| z.conj()).dot(&v);
    Zip::from(&mut coeffs)
        .and(evals)
        .for_each(|c, &e| *c *= C64::from_polar(1.0, -e * t));
    evecs.dot(&coeffs)
}

fn sup_norm(v: &Array1<C64>) -> f64 {
    v.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// exp(−i·dt·H)·v by a scaled, truncated Taylor series.
///
/// The interval is split into `s` substeps with ‖H·dt/s‖₁ ≤ 2, and each
/// substep sums terms until two consecutive terms fall below machine
/// precision relative to the running sum.
pub fn expm_multiply(h: &Array2<C64>, v: &Array1<C64>, dt: f64) -> Result<Array1<C64>> {
    let norm = one_norm(h) * dt.abs();
    if !norm.is_finite() {
        return Err(QrmError::Invariant("non-finite generator in exponential".into()));
    }
    let substeps = (norm / SUBSTEP_NORM).ceil().max(1.0) as usize;
    let coeff = C64::new(0.0, -dt / substeps as f64);
    let mut out = v.clone();
    for _ in 0..substeps {
        let mut term = out.clone();
        let mut sum = out.clone();
        let mut small_terms = 0;
        let mut converged = false;
        for k in 1..=MAX_TAYLOR_TERMS {
            term = h.dot(&term) * (coeff / k as f64);
            sum += &term;
            if sup_norm(&term) <= f64::EPSILON * sup_norm(&sum) {
                small_terms += 1;
                if small_terms == 2 {
                    converged = true;
                    break;
                }
            } else {
                small_terms = 0;
            }
        }
        if !converged {
            return Err(QrmError::Invariant("Taylor exponential failed to converge".into()));
        }
        out = sum;
    }
    Ok(out)
}
