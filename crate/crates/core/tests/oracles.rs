//! Checks against independent reference computations: power series,
//! exact diagonalization, fine-step integration.

use std::f64::consts::TAU;

use ndarray::{Array1, Array2};
use qrmsim_core::{
    dynamics::{evolve, observable_series, to_frame, EvolutionConfig, Hamiltonian, Method, StepSize},
    hamiltonian::{
        build_bichromatic, build_ion_interaction, build_lab_frame, build_qrm, dispersive_shifts,
        qrm_params_from_detunings, IonParams, QrmParams, TimeDependentHamiltonian,
    },
    hilbert::{displacement, expectation, fidelity, make_space, operator_factory, OperatorKind, Qubit, StateVector},
    linalg,
    spectral::parity_operator,
    C64,
};

const KHZ: f64 = TAU * 1e3;

fn fock_destroy(dim: usize) -> Array2<C64> {
    let mut a = Array2::zeros((dim, dim));
    for n in 1..dim {
        a[[n - 1, n]] = C64::new((n as f64).sqrt(), 0.0);
    }
    a
}

/// exp(G) v by plain power series, summing until terms vanish.
fn series_exp_apply(g: &Array2<C64>, v: &Array1<C64>) -> Array1<C64> {
    let mut term = v.clone();
    let mut sum = v.clone();
    for k in 1..200 {
        term = g.dot(&term) / C64::new(k as f64, 0.0);
        sum += &term;
        if term.iter().all(|z| z.norm() < 1e-18) {
            break;
        }
    }
    sum
}

/// exp(α a† − α* a) restricted to the first `dim` columns, computed at a
/// much larger cutoff and cropped.
fn displacement_by_series(alpha: C64, dim: usize, big: usize) -> Array2<C64> {
    let a = fock_destroy(big);
    let ad = a.t().to_owned();
    let gen = &ad * alpha - &a * alpha.conj();
    let mut out = Array2::zeros((dim, dim));
    for n in 0..dim {
        let mut e = Array1::zeros(big);
        e[n] = C64::new(1.0, 0.0);
        let col = series_exp_apply(&gen, &e);
        for m in 0..dim {
            out[[m, n]] = col[m];
        }
    }
    out
}

#[test]
fn displacement_vacuum_is_poissonian() {
    let s = make_space(20).unwrap();
    let alpha = C64::new(0.3, 0.0);
    let d = displacement(s, alpha);
    let coherent = d.apply(&StateVector::basis(s, Qubit::Ground, 0).unwrap()).unwrap();
    let n = expectation(&coherent, &operator_factory(s, OperatorKind::Number)).unwrap();
    assert!((n.re - 0.09).abs() < 1e-6, "<n> = {}", n.re);

    let oracle = displacement_by_series(alpha, s.fock_dim(), 80);
    for m in 0..s.fock_dim() {
        let diff = coherent.amplitude(Qubit::Ground, m) - oracle[[m, 0]];
        assert!(diff.norm() < 1e-13);
    }
}

#[test]
fn displacement_matches_series_elementwise() {
    let s = make_space(15).unwrap();
    for alpha in [C64::new(0.4, -0.9), C64::new(0.0, 0.06), C64::new(-1.3, 0.2)] {
        let d = displacement(s, alpha);
        let oracle = displacement_by_series(alpha, s.fock_dim(), 90);
        let nd = s.fock_dim();
        let mut worst: f64 = 0.0;
        for m in 0..nd {
            for n in 0..nd {
                worst = worst.max((d.matrix()[[m, n]] - oracle[[m, n]]).norm());
            }
        }
        assert!(worst < 1e-12, "alpha = {alpha}: {worst:e}");
    }
}

fn interior_inverse_error(cutoff: usize, alpha: C64, interior: usize) -> f64 {
    let s = make_space(cutoff).unwrap();
    let prod = &displacement(s, alpha) * &displacement(s, -alpha);
    let mut worst: f64 = 0.0;
    for m in 0..=interior {
        for n in 0..=interior {
            let target = if m == n { 1.0 } else { 0.0 };
            worst = worst.max((prod.matrix()[[m, n]] - C64::new(target, 0.0)).norm());
        }
    }
    worst
}

#[test]
fn displacement_inverse_on_interior() {
    // Lamb-Dicke scale amplitudes, as used by the ion drive.
    for n_cut in [20, 40, 60] {
        for alpha in [C64::new(0.0, 0.06), C64::new(0.1, 0.0), C64::new(0.05, -0.08)] {
            let interior = (n_cut as f64 - alpha.norm_sqr() - 5.0).floor() as usize;
            let err = interior_inverse_error(n_cut, alpha, interior);
            assert!(err < 1e-8, "N {n_cut}, alpha {alpha}: {err:e}");
        }
    }
}

#[test]
fn displacement_product_defect_is_truncation_tail() {
    // For the projected operator, D(α)D(−α) − 1 = −Σ_{k>N} D_mk D_kn exactly.
    let n_cut = 20;
    let s = make_space(n_cut).unwrap();
    let nd = s.fock_dim();
    let alpha = C64::new(1.0, 0.5);
    let big = 90;
    let plus = displacement_by_series(alpha, big, 140);
    let minus = displacement_by_series(-alpha, big, 140);
    let prod = &displacement(s, alpha) * &displacement(s, -alpha);
    let mut worst: f64 = 0.0;
    for m in 0..nd {
        for n in 0..nd {
            let tail: C64 = (nd..big).map(|k| plus[[m, k]] * minus[[k, n]]).sum();
            let target = if m == n { C64::new(1.0, 0.0) - tail } else { -tail };
            worst = worst.max((prod.matrix()[[m, n]] - target).norm());
        }
    }
    assert!(worst < 1e-10, "{worst:e}");
}

#[test]
fn displacement_truncation_error_grows_with_amplitude() {
    let n_cut = 20;
    let errors: Vec<f64> = [0.5, 1.0, 1.5, 2.0, 2.5, 3.0]
        .iter()
        .map(|&r| interior_inverse_error(n_cut, C64::new(r, 0.0), n_cut))
        .collect();
    assert!(errors.windows(2).all(|w| w[1] > w[0]), "{errors:?}");
}

#[test]
fn lamb_dicke_expansion_recovers_bichromatic_form() {
    let nu = TAU * 3e6;
    let omega = 68.0 * KHZ;
    let ion = IonParams::symmetric(nu, 0.06, omega, 0.0, -6e-4 * nu);
    let s = make_space(10).unwrap();
    let nd = s.fock_dim();

    // First-order expansion of the displacement itself: D(iη) = 1 + iη(a + a†) + O(η²).
    let a = fock_destroy(nd);
    let x = &a + &a.t();
    for eta in [0.06, 0.03] {
        let d = displacement(s, C64::new(0.0, eta));
        let lin = Array2::<C64>::eye(nd) + &x * C64::new(0.0, eta);
        let mut worst: f64 = 0.0;
        for m in 0..nd {
            for n in 0..nd {
                worst = worst.max((d.matrix()[[m, n]] - lin[[m, n]]).norm());
            }
        }
        // Second-order remainder is η²(a + a†)²/2, bounded by η²(2N + 1)/2.
        assert!(worst <= 0.5 * eta * eta * (2.0 * nd as f64 + 1.0), "eta {eta}: {worst:e}");
    }

    // Assemble the O(η) ion Hamiltonian by hand; it must equal the
    // bichromatic form plus terms rotating at ν ± δ and 2ν ± δ.
    let full = build_ion_interaction(&ion, s).unwrap();
    let bi = build_bichromatic(&ion, s).unwrap();
    let eta = ion.eta;
    for &t in &[0.0, 1.3e-7, 4.1e-5, 2.2e-4] {
        let ph = |w: f64| C64::from_polar(1.0, w * t);
        let red = 0.5 * omega * ph(nu - ion.delta_r);
        let blue = 0.5 * omega * ph(-nu - ion.delta_b);
        let i_eta = C64::new(0.0, eta);
        // carrier + the fast halves of the first-order terms
        let fast = Array2::<C64>::eye(nd) * (red + blue)
            + &a.t() * (red * i_eta * ph(nu))
            + &a * (blue * i_eta * ph(-nu));
        let slow = bi.matrix_at(t);
        let h = full.matrix_at(t);
        let mut worst: f64 = 0.0;
        for m in 0..nd {
            for n in 0..nd {
                let first_order = slow[[nd + m, n]] + fast[[m, n]];
                worst = worst.max((h[[nd + m, n]] - first_order).norm());
            }
        }
        // Remainder is O(η²Ω N).
        assert!(worst < omega * eta * eta * nd as f64, "t = {t}: {worst:e}");
        // Fast terms oscillate at least at ν − |δ|; the slow part only at |δ|.
        assert!(nu - ion.delta_b.abs() > 0.99 * nu);
    }
}

/// Level shifts of |q, n⟩ from exact diagonalization, assigned by the
/// dominant basis component of each eigenvector.
fn exact_shifts(params: &QrmParams, cutoff: usize) -> Vec<(Qubit, usize, f64)> {
    let s = make_space(cutoff).unwrap();
    let (w, v) = linalg::eigh(build_qrm(params, s).matrix()).unwrap();
    (0..s.total_dim())
        .map(|k| {
            let (idx, _) = v
                .column(k)
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
                .unwrap();
            let l = s.label(idx);
            let bare = 0.5 * params.omega0_r * l.qubit.sigma_z() + l.n as f64 * params.omega_r;
            (l.qubit, l.n, w[k] - bare)
        })
        .collect()
}

fn dispersive_errors(params: &QrmParams, max_n: usize) -> (f64, f64) {
    let cutoff = 30;
    let s = make_space(cutoff).unwrap();
    let eff = dispersive_shifts(params, s).unwrap();
    let exact = exact_shifts(params, cutoff);
    let lookup = |q: Qubit, n: usize| exact.iter().find(|e| e.0 == q && e.1 == n).unwrap().2;
    let mut shift_err: f64 = 0.0;
    let mut split_err: f64 = 0.0;
    for n in 0..=max_n {
        for q in [Qubit::Ground, Qubit::Excited] {
            let predicted = eff.matrix()[[s.index(q, n), s.index(q, n)]].re;
            let actual = lookup(q, n);
            shift_err = shift_err.max((predicted - actual).abs() / actual.abs());
        }
        let split_pred = eff.matrix()[[s.index(Qubit::Excited, n), s.index(Qubit::Excited, n)]].re
            - eff.matrix()[[s.index(Qubit::Ground, n), s.index(Qubit::Ground, n)]].re;
        let split_exact = lookup(Qubit::Excited, n) - lookup(Qubit::Ground, n);
        split_err = split_err.max((split_pred - split_exact).abs() / split_exact.abs());
    }
    (shift_err, split_err)
}

#[test]
fn dispersive_shifts_match_exact_diagonalization() {
    let (shift, split) = dispersive_errors(&QrmParams::new(0.5, 1.0, 0.02), 3);
    assert!(shift < 0.05, "shift error {shift}");
    assert!(split < 0.05, "splitting error {split}");
}

#[test]
fn magnus2_is_second_order() {
    let s = make_space(5).unwrap();
    let ion = IonParams::symmetric(50.0, 0.3, 4.0, 0.7, -1.9);
    let h = build_bichromatic(&ion, s).unwrap();
    let psi0 = StateVector::superposition(
        s,
        &[(C64::new(0.8, 0.0), Qubit::Ground, 0), (C64::new(0.1, 0.5), Qubit::Excited, 2)],
    )
    .unwrap();
    let t = 4.0;
    let run = |dt: f64, method: Method| {
        let cfg = EvolutionConfig::new(t).with_step(StepSize::Fixed(dt)).with_method(method);
        evolve(Hamiltonian::driven(&h), &psi0, &cfg).unwrap().final_state().clone()
    };
    let reference = run(1e-4, Method::Rk4);
    let err = |dt: f64| {
        let st = run(dt, Method::Magnus2);
        (st.amplitudes() - reference.amplitudes()).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    };
    let (e1, e2, e3) = (err(0.04), err(0.02), err(0.01));
    assert!((3.5..4.5).contains(&(e1 / e2)), "ratio {}", e1 / e2);
    assert!((3.5..4.5).contains(&(e2 / e3)), "ratio {}", e2 / e3);
}

#[test]
fn static_time_reversal() {
    let s = make_space(25).unwrap();
    let params = QrmParams::new(0.8, 1.0, 1.7);
    let h = build_qrm(&params, s);
    let back = h.scaled(C64::new(-1.0, 0.0));
    let psi0 = StateVector::basis(s, Qubit::Excited, 1).unwrap();
    let cfg = EvolutionConfig::new(13.0);
    let fwd = evolve(&h, &psi0, &cfg).unwrap();
    let rev = evolve(&back, fwd.final_state(), &cfg).unwrap();
    assert!(fidelity(rev.final_state(), &psi0).unwrap() >= 1.0 - 1e-8);
    assert!(fwd.norm_drift < 1e-12 && rev.norm_drift < 1e-12);
}

#[test]
fn parity_is_constant_along_rabi_trajectory() {
    let s = make_space(30).unwrap();
    let h = build_qrm(&QrmParams::new(1.0, 0.6, 1.2), s);
    let psi0 = StateVector::superposition(
        s,
        &[(C64::new(1.0, 0.0), Qubit::Ground, 0), (C64::new(0.0, 0.5), Qubit::Excited, 1)],
    )
    .unwrap();
    let comm = h.commutator(&parity_operator(s)).unwrap();
    assert!(comm.max_abs() < 1e-10);
    let traj = evolve(&h, &psi0, &EvolutionConfig::new(20.0).with_stride(4)).unwrap();
    let id = operator_factory(s, OperatorKind::Identity);
    let p = parity_operator(s);
    let table = observable_series(&traj, &[&p, &id]).unwrap();
    let parity = table.columns[0].as_real().unwrap();
    assert!(parity.iter().all(|x| (x - parity[0]).abs() < 1e-8));
    let norm = table.columns[1].as_real().unwrap();
    assert!(norm.iter().all(|x| (x - 1.0).abs() <= 2.0 * traj.norm_drift + 1e-14));
}

#[test]
fn bichromatic_evolution_is_frame_image_of_rabi_evolution() {
    let s = make_space(12).unwrap();
    let ion = IonParams::symmetric(100.0, 0.1, 4.0, 0.3, -1.1);
    let p = qrm_params_from_detunings(&ion).unwrap();
    let psi0 = StateVector::basis(s, Qubit::Excited, 0).unwrap();
    let t = 10.0 / p.g;
    let cfg = EvolutionConfig::new(t).with_step(StepSize::PerPeriod(200)).with_stride(100);
    let bi = build_bichromatic(&ion, s).unwrap();
    let driven = evolve(Hamiltonian::driven(&bi), &psi0, &cfg).unwrap();
    let exact = evolve(&build_qrm(&p, s), &psi0, &EvolutionConfig::new(t)).unwrap();
    let image = to_frame(exact.final_state(), t, &p.free_frame());
    let f = fidelity(&image, driven.final_state()).unwrap();
    assert!(f > 1.0 - 1e-6, "fidelity {f}");
}

#[test]
fn lab_frame_reduces_to_ion_interaction() {
    // Desk-scale optical RWA: ω₀ = 40ν, weak drives.
    let s = make_space(6).unwrap();
    let mut ion = IonParams::symmetric(1.0, 0.15, 0.04, 0.0, -0.01);
    ion.omega0_lab = Some(40.0);
    let lab = build_lab_frame(&ion, s).unwrap();
    let inter = build_ion_interaction(&ion, s).unwrap();
    let psi0 = StateVector::basis(s, Qubit::Ground, 1).unwrap();
    let t = 60.0;
    let cfg = EvolutionConfig::new(t).with_stride(1000);
    let lab_traj = evolve(Hamiltonian::driven(&lab), &psi0, &cfg).unwrap();
    let int_traj = evolve(Hamiltonian::driven(&inter), &psi0, &cfg).unwrap();
    let moved = to_frame(lab_traj.final_state(), t, &lab.interaction_frame());
    let f = fidelity(&moved, int_traj.final_state()).unwrap();
    assert!(f > 0.999, "fidelity {f}");
    // and the drive actually did something over this window
    assert!(fidelity(int_traj.final_state(), &psi0).unwrap() < 0.999);
}


