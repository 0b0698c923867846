//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use quapi::bath::{BathParams, SpectralDensityModel};
use quapi::bench::{sweep_horizon, BenchOptions};
use quapi::config::Config;
use quapi::driver::simulate;
use quapi::eta::{build_eta_table, build_eta_table_with, ConstantResponse, EtaClass, EtaTable};
use quapi::propagation::{
    brute_force_rho, format_bytes, primary_memory_cost, run_dynamics, DynamicsConfig, Parallelism,
    ReadoutMode, Trajectory,
};
use quapi::quadrature::QuadratureSpec;
use quapi::system::{CMatrix, SystemSpec};

const DT: f64 = 0.1;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn qdot_eta(lags: usize) -> EtaTable {
    build_eta_table(
        &SpectralDensityModel::super_ohmic(PI * 0.027, 2.2),
        &BathParams::new(25.0),
        DT,
        lags,
        &QuadratureSpec::default(),
    )
    .expect("quantum-dot η")
}

fn dyn_config(
    steps: usize,
    dk_max: usize,
    mode: ReadoutMode,
    parallelism: Parallelism,
) -> DynamicsConfig {
    DynamicsConfig {
        dt: DT,
        steps,
        dk_max,
        mode,
        parallelism,
        memory_budget: None,
    }
}

fn max_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

fn oracle_equivalence() -> Outcome {
    let clock = Instant::now();
    let spec = SystemSpec::two_level_drive(PI / 8.0);
    let eta = qdot_eta(6);
    let mut worst = 0.0f64;
    let mut cases = 0;
    for n in 1..=6 {
        for dk in 1..=6 {
            let traj = run_dynamics(
                &spec,
                &eta,
                &dyn_config(n, dk, ReadoutMode::JustFinalPoint, Parallelism::Serial),
            )
            .expect("engine");
            let oracle = brute_force_rho(&spec, &eta, DT, n, dk).expect("oracle");
            worst = worst.max(max_diff(traj.last().unwrap(), &oracle));
            cases += 1;
        }
    }
    let secs = clock.elapsed().as_secs_f64();
    outcome(
        worst <= 1e-12 && secs < 10.0,
        format!("{cases} (N, dk) cases, max diff {worst:.2e}, {secs:.2} s"),
    )
}

fn memory_law() -> Outcome {
    let expected = [
        "4.096 KB", "16.38 KB", "65.54 KB", "262.1 KB", "1.049 MB", "4.194 MB", "16.78 MB",
        "67.11 MB", "268.4 MB", "1.074 GB", "4.295 GB",
    ];
    let mut bad = Vec::new();
    for (dk, want) in (2..=12).zip(expected) {
        let pmc = primary_memory_cost(2, dk).unwrap();
        if pmc != 64 * 2u128.pow(2 * (dk as u32 + 1)) || format_bytes(pmc) != want {
            bad.push(format!("dk={dk}: {pmc} ({})", format_bytes(pmc)));
        }
    }
    // the run summary reports the same figure
    let mut config = Config::qdot25k();
    config.run.steps = 5;
    config.run.dk_max = 3;
    let (_, summary) = simulate(&config).expect("small run");
    if summary.pmc_bytes != 16384 {
        bad.push(format!("summary reported {}", summary.pmc_bytes));
    }
    let detail = if bad.is_empty() {
        "dk 2..12 exact bytes and 4-figure display, run summary consistent".to_string()
    } else {
        bad.join("; ")
    };
    outcome(bad.is_empty(), detail)
}

fn zero_coupling() -> Outcome {
    let clock = Instant::now();
    let omega = PI / 8.0;
    let spec = SystemSpec::two_level_drive(omega);
    let mut worst = 0.0f64;
    for dk in [0, 1, 3, 6] {
        let eta = EtaTable::zeros(DT, dk);
        let traj = run_dynamics(
            &spec,
            &eta,
            &dyn_config(200, dk, ReadoutMode::AllPoints, Parallelism::Serial),
        )
        .expect("zero bath");
        for (t, rho) in traj.times.iter().zip(&traj.rhos) {
            let exact = (omega * t / 2.0).sin().powi(2);
            worst = worst
                .max((rho[(1, 1)].re - exact).abs())
                .max(rho[(1, 1)].im.abs());
        }
    }
    let secs = clock.elapsed().as_secs_f64();
    outcome(
        worst <= 1e-12 && secs < 1.0,
        format!("N=200, dk in {{0,1,3,6}}, max |ρ11 − sin²(Ωt/2)| {worst:.2e}, {secs:.3} s"),
    )
}

fn constant_alpha() -> Outcome {
    let dt = 0.37;
    let eta = build_eta_table_with(
        &ConstantResponse(Complex64::new(1.0, 0.0)),
        dt,
        3,
        &QuadratureSpec::default(),
    )
    .expect("constant η");
    let h2 = dt * dt;
    let expected = [
        (EtaClass::InteriorOffdiag, h2),
        (EtaClass::InteriorSelf, h2 / 2.0),
        (EtaClass::InitialSelf, h2 / 8.0),
        (EtaClass::TerminalSelf, h2 / 8.0),
        (EtaClass::TerminalInitial, h2 / 4.0),
        (EtaClass::InitialEdge, h2 / 2.0),
        (EtaClass::TerminalEdge, h2 / 2.0),
    ];
    let mut worst = 0.0f64;
    for (class, want) in expected {
        let lags: Vec<usize> = if class.is_lagged() {
            (1..=3).collect()
        } else {
            vec![0]
        };
        for lag in lags {
            let got = eta.get(class, lag);
            worst = worst.max((got - Complex64::new(want, 0.0)).norm() / want);
        }
    }
    outcome(
        worst <= 1e-10,
        format!("7 classes, lags 1..3, max relative error {worst:.2e}"),
    )
}

/// Successive extrema of a sampled curve (interior local maxima and minima).
fn extrema(y: &[f64]) -> Vec<f64> {
    y.windows(3)
        .filter(|w| (w[1] > w[0] && w[1] >= w[2]) || (w[1] < w[0] && w[1] <= w[2]))
        .map(|w| w[1])
        .collect()
}

fn physics_sanity() -> Outcome {
    let clock = Instant::now();
    let spec = SystemSpec::two_level_drive(PI / 8.0);
    let eta = qdot_eta(7);
    let run = |dk| {
        run_dynamics(
            &spec,
            &eta,
            &dyn_config(400, dk, ReadoutMode::AllPoints, Parallelism::Serial),
        )
        .expect("qdot run")
    };
    let six = run(6);
    let secs = clock.elapsed().as_secs_f64();
    let seven = run(7);

    let p1: Vec<f64> = six.rhos.iter().map(|r| r[(1, 1)].re).collect();
    let ext = extrema(&p1);
    let swings: Vec<f64> = ext.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let damped = swings.len() >= 3 && swings.windows(2).all(|w| w[1] < w[0]);
    let trace = six
        .rhos
        .iter()
        .map(|r| (r.trace() - Complex64::new(1.0, 0.0)).norm())
        .fold(0.0, f64::max);
    let herm = six
        .rhos
        .iter()
        .map(|r| max_diff(r, &r.adjoint()))
        .fold(0.0, f64::max);
    let plateau = six
        .rhos
        .iter()
        .zip(&seven.rhos)
        .map(|(a, b)| max_diff(a, b))
        .fold(0.0, f64::max);
    let pass = damped && trace <= 1e-10 && herm <= 1e-10 && plateau <= 5e-3 && secs < 120.0;
    outcome(
        pass,
        format!(
            "{} extrema, swings {:?}, trace dev {trace:.1e}, hermiticity {herm:.1e}, dk 6 vs 7 {plateau:.2e}, {secs:.1} s",
            ext.len(),
            swings.iter().map(|s| (s * 1e4).round() / 1e4).collect::<Vec<_>>()
        ),
    )
}

fn horizon_scaling() -> Outcome {
    let values: Vec<usize> = (1..=10).map(|i| 100 * i).collect();
    let opts = BenchOptions {
        reps: 5,
        ..BenchOptions::default()
    };
    let report = sweep_horizon(&Config::qdot25k(), &values, 8, &opts).expect("horizon sweep");
    let fit = report.fit.expect("fit");
    let times: Vec<String> = report
        .rows
        .iter()
        .map(|r| format!("{:.2}", r.total_s()))
        .collect();
    outcome(
        fit.r_squared >= 0.99,
        format!(
            "dk=8, N=100..1000, R² {:.4}, slope {:.3e} s/step, totals [{}] s",
            fit.r_squared,
            fit.slope,
            times.join(", ")
        ),
    )
}

fn random_system(rng: &mut StdRng, m: usize) -> SystemSpec {
    let mut c = || Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    let a = DMatrix::from_fn(m, m, |_, _| c());
    let b = DMatrix::from_fn(m, m, |_, _| c());
    let h = (&a + a.adjoint()) * Complex64::new(0.5, 0.0);
    let rho = &b * b.adjoint();
    let tr = rho.trace();
    SystemSpec {
        coordinates: (0..m).map(|_| rng.random_range(-1.5..1.5)).collect(),
        hamiltonian: h,
        rho0: rho / tr,
    }
}

fn mode_equivalence() -> Outcome {
    let mut rng = StdRng::seed_from_u64(0x51a7);
    let qdot = qdot_eta(6);
    let mut mismatches = 0;
    for _ in 0..20 {
        let m = rng.random_range(2..=3);
        let spec = random_system(&mut rng, m);
        let steps = rng.random_range(1..=40);
        let dk = rng.random_range(0..=if m == 2 { 6 } else { 4 });
        let eta = if rng.random_bool(0.5) {
            qdot.truncated(dk.min(6))
        } else {
            let a = Complex64::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0));
            build_eta_table_with(&ConstantResponse(a), DT, dk, &QuadratureSpec::default()).unwrap()
        };
        let run = |mode| {
            run_dynamics(
                &spec,
                &eta,
                &dyn_config(steps, dk, mode, Parallelism::Serial),
            )
            .unwrap()
        };
        let all = run(ReadoutMode::AllPoints);
        let last = run(ReadoutMode::JustFinalPoint);
        if all.last() != last.last() || last.rhos.len() != 2 {
            mismatches += 1;
        }
    }
    outcome(
        mismatches == 0,
        format!("20 random configs, {mismatches} mismatches"),
    )
}

fn determinism() -> Outcome {
    let spec = SystemSpec::two_level_drive(PI / 8.0);
    let eta = qdot_eta(8);
    let run = |par| -> Trajectory {
        run_dynamics(
            &spec,
            &eta,
            &dyn_config(200, 8, ReadoutMode::AllPoints, par),
        )
        .expect("qdot run")
    };
    let serial = run(Parallelism::Serial);
    let same = [1, 2, 8]
        .into_iter()
        .map(|n| run(Parallelism::Threads(n)) == serial)
        .collect::<Vec<_>>();
    outcome(
        same.iter().all(|&s| s),
        format!("N=200, dk=8, threads {{1,2,8}} vs serial bit-identical: {same:?}"),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("oracle equivalence", oracle_equivalence),
        ("memory law", memory_law),
        ("zero-coupling analytics", zero_coupling),
        ("constant-alpha eta closed forms", constant_alpha),
        ("physics sanity", physics_sanity),
        ("linear horizon scaling", horizon_scaling),
        ("mode equivalence", mode_equivalence),
        ("determinism under parallelism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        println!(
            "{} [{}] {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            i + 1,
            o.detail
        );
        if !o.pass {
            failed += 1;
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
