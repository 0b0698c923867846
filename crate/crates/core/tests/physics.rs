//! Physical invariants and closed-system limits of the propagated density matrix.

use std::f64::consts::PI;
use std::sync::OnceLock;

use nalgebra::DMatrix;
use num_complex::Complex64;

use quapi::bath::{BathParams, SpectralDensityModel};
use quapi::eta::{build_eta_table, build_eta_table_with, ConstantResponse, EtaTable};
use quapi::propagation::{
    brute_force_rho, influence_pair_factor, run_dynamics, DynamicsConfig, Parallelism, ReadoutMode,
    Trajectory,
};
use quapi::quadrature::QuadratureSpec;
use quapi::system::{hermiticity_defect, short_time_propagator, CMatrix, SystemSpec};

const DT: f64 = 0.1;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn qdot_eta() -> &'static EtaTable {
    static ETA: OnceLock<EtaTable> = OnceLock::new();
    ETA.get_or_init(|| {
        build_eta_table(
            &SpectralDensityModel::super_ohmic(PI * 0.027, 2.2),
            &BathParams::new(25.0),
            DT,
            6,
            &QuadratureSpec::default(),
        )
        .unwrap()
    })
}

fn run(spec: &SystemSpec, eta: &EtaTable, dt: f64, steps: usize, dk_max: usize) -> Trajectory {
    let config = DynamicsConfig {
        dt,
        steps,
        dk_max,
        mode: ReadoutMode::AllPoints,
        parallelism: Parallelism::Serial,
        memory_budget: None,
    };
    run_dynamics(spec, eta, &config).unwrap()
}

fn max_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

#[test]
fn trace_and_hermiticity_hold_throughout() {
    let spec = SystemSpec::two_level_drive(PI / 8.0);
    let traj = run(&spec, qdot_eta(), DT, 300, 6);
    for rho in &traj.rhos {
        assert!((rho.trace() - c(1.0, 0.0)).norm() < 1e-10);
        assert!(hermiticity_defect(rho) < 1e-10);
    }

    let h = CMatrix::from_row_slice(
        3,
        3,
        &[
            c(0.2, 0.0),
            c(0.3, 0.1),
            c(0.0, 0.0),
            c(0.3, -0.1),
            c(-0.1, 0.0),
            c(0.25, 0.0),
            c(0.0, 0.0),
            c(0.25, 0.0),
            c(0.05, 0.0),
        ],
    );
    let spec = SystemSpec {
        coordinates: vec![-1.0, 0.0, 1.0],
        hamiltonian: h,
        rho0: CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            c(0.5, 0.0),
            c(0.3, 0.0),
            c(0.2, 0.0),
        ])),
    };
    let eta = build_eta_table_with(
        &ConstantResponse(c(0.8, -0.3)),
        DT,
        3,
        &QuadratureSpec::default(),
    )
    .unwrap();
    for rho in &run(&spec, &eta, DT, 60, 3).rhos {
        assert!((rho.trace() - c(1.0, 0.0)).norm() < 1e-10);
        assert!(hermiticity_defect(rho) < 1e-10);
    }
}

#[test]
fn memory_convergence_is_monotone() {
    let spec = SystemSpec::two_level_drive(PI / 8.0);
    let runs: Vec<Trajectory> = (2..=6)
        .map(|dk| run(&spec, qdot_eta(), DT, 200, dk))
        .collect();
    let d: Vec<f64> = runs
        .windows(2)
        .map(|w| {
            w[0].rhos
                .iter()
                .zip(&w[1].rhos)
                .map(|(a, b)| max_diff(a, b))
                .fold(0.0, f64::max)
        })
        .collect();
    let violations = d.windows(2).filter(|p| p[1] > p[0]).count();
    assert!(violations <= 1, "D(2..5) = {d:?}");
}

#[test]
fn rabi_oscillations_are_damped() {
    let spec = SystemSpec::two_level_drive(PI / 8.0);
    let traj = run(&spec, qdot_eta(), DT, 989, 6);
    let p: Vec<f64> = traj.rhos.iter().map(|r| r[(1, 1)].re).collect();
    let ext: Vec<f64> = p
        .windows(3)
        .filter(|w| (w[1] > w[0] && w[1] >= w[2]) || (w[1] < w[0] && w[1] <= w[2]))
        .map(|w| w[1])
        .collect();
    assert!(ext.len() >= 3, "extrema {ext:?}");
    let swings: Vec<f64> = ext.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    assert!(swings.windows(2).all(|w| w[1] < w[0]), "swings {swings:?}");
}

#[test]
fn golden_five_step_matrix() {
    let golden = CMatrix::from_row_slice(
        2,
        2,
        &[
            c(0.9905494483988517, 0.0),
            c(0.0003571854555224157, 0.0943477320912731),
            c(0.0003571854555224153, -0.0943477320912731),
            c(0.009450551601146684, 0.0),
        ],
    );
    let spec = SystemSpec::two_level_drive(PI / 8.0);
    let oracle = brute_force_rho(&spec, qdot_eta(), DT, 5, 5).unwrap();
    assert!(max_diff(&oracle, &golden) < 1e-11);
    assert!((oracle.trace() - c(1.0, 0.0)).norm() < 1e-12);
    let traj = run(&spec, qdot_eta(), DT, 5, 5);
    assert!(max_diff(traj.last().unwrap(), &golden) < 1e-11);
}

#[test]
fn zero_bath_is_unitary_evolution() {
    let spec = SystemSpec::two_level_drive(PI / 8.0);
    let k = short_time_propagator(&spec, DT).unwrap().forward;
    for dk in [0, 2, 5] {
        let traj = run(&spec, &EtaTable::zeros(DT, dk), DT, 64, dk);
        let mut rho = spec.rho0.clone();
        for (step, got) in traj.rhos.iter().enumerate() {
            assert!(max_diff(got, &rho) < 1e-12, "dk={dk} k={step}");
            let t = step as f64 * DT;
            assert!((got[(1, 1)].re - (PI / 16.0 * t).sin().powi(2)).abs() < 1e-12);
            rho = &k * rho * k.adjoint();
        }
    }
}

#[test]
fn zero_bath_rabi_inversion() {
    let spec = SystemSpec::two_level_drive(PI / 8.0);
    let eta = EtaTable::zeros(1.0, 3);
    let traj = run(&spec, &eta, 1.0, 8, 3);
    assert!((traj.last().unwrap()[(1, 1)].re - 1.0).abs() < 1e-12);
    let oracle = brute_force_rho(&spec, &eta, 1.0, 8, 3).unwrap();
    assert!((oracle[(1, 1)].re - 1.0).abs() < 1e-12);
}

#[test]
fn diagonal_initial_state_survives_step_zero() {
    let mut spec = SystemSpec::two_level_drive(PI / 8.0);
    spec.rho0 =
        CMatrix::from_row_slice(2, 2, &[c(0.7, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.3, 0.0)]);
    let rho = brute_force_rho(&spec, qdot_eta(), DT, 0, 3).unwrap();
    assert_eq!(rho, spec.rho0);
    assert_eq!(run(&spec, qdot_eta(), DT, 4, 3).rhos[0], spec.rho0);
}

#[test]
fn pair_factor_examples() {
    let s = [0.0, 1.0];
    let eta = c(0.3, -0.1);
    assert_eq!(influence_pair_factor(1, 1, 0, 1, eta, &s), c(1.0, 0.0));
    assert_eq!(
        influence_pair_factor(1, 0, 1, 0, c(0.0, 0.0), &s),
        c(1.0, 0.0)
    );
    let got = influence_pair_factor(1, 0, 1, 0, eta, &s);
    assert!((got - c(-0.3, 0.1).exp()).norm() < 1e-15);
}

/// Γ(t) = (1/π)∫ J(ω)/ω² (1 − cos ωt) coth(βω/2) dω by midpoint rule on a fine grid.
fn dephasing_exponent(t: f64) -> f64 {
    let (a, wc) = (PI * 0.027, 2.2);
    let thermal = BathParams::new(25.0).thermal_frequency();
    let n = 400_000;
    let h = 20.0 * wc / n as f64;
    let sum: f64 = (0..n)
        .map(|i| {
            let w = (i as f64 + 0.5) * h;
            let j = a * w.powi(3) * (-(w / wc).powi(2)).exp();
            j / (w * w) * (1.0 - (w * t).cos()) / (0.5 * w / thermal).tanh()
        })
        .sum();
    sum * h / PI
}

#[test]
fn pure_dephasing_matches_independent_boson_decay() {
    // with H = 0 the coherence decays as exp(−Γ(t)); one step is exact, later
    // steps carry only the endpoint discretization error
    let half = c(0.5, 0.0);
    let spec = SystemSpec {
        coordinates: vec![0.0, 1.0],
        hamiltonian: DMatrix::zeros(2, 2),
        rho0: DMatrix::from_element(2, 2, half),
    };
    let traj = run(&spec, qdot_eta(), DT, 6, 6);
    for (k, rho) in traj.rhos.iter().enumerate().skip(1) {
        let coherence = rho[(0, 1)].norm() / 0.5;
        let exact = (-dephasing_exponent(k as f64 * DT)).exp();
        let tol = if k == 1 { 1e-9 } else { 5e-4 };
        assert!(
            (coherence - exact).abs() < tol,
            "k={k}: {coherence} vs {exact}"
        );
        assert!((rho[(0, 0)] - half).norm() < 1e-14);
    }
}
