//! Config-to-trajectory orchestration shared by the CLI and the benchmarks.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::time::{Duration, Instant};

use crate::config::Config;
use crate::error::Result;
use crate::eta::{build_eta_table_sampled, EtaTable};
use crate::output::write_trajectory_csv;
use crate::propagation::{
    check_capacity, run_dynamics_timed, DynamicsConfig, PhaseTimings, Trajectory,
};

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub pmc_bytes: u128,
    /// η quadrature plus engine table construction.
    pub setup: Duration,
    pub eta_setup: Duration,
    pub timings: PhaseTimings,
    pub rows: usize,
}

/// η table for a config, sized for the lags the run can actually reach.
pub fn eta_for(config: &Config) -> Result<EtaTable> {
    let lags = config.run.dk_max.min(config.run.steps);
    build_eta_table_sampled(
        &config.spectral_density,
        &config.bath,
        config.run.dt,
        lags,
        &config.quadrature,
        config.run.alpha_sampling,
    )
}

pub fn dynamics_config(config: &Config) -> DynamicsConfig {
    DynamicsConfig {
        dt: config.run.dt,
        steps: config.run.steps,
        dk_max: config.run.dk_max,
        mode: config.run.mode,
        parallelism: config.run.threads.parallelism(),
        memory_budget: config.run.memory_budget.map(u128::from),
    }
}

/// Bath → η → propagation, without touching the filesystem.
pub fn simulate(config: &Config) -> Result<(Trajectory, RunSummary)> {
    simulate_inner(config, |_| Ok(()))
}

fn simulate_inner(
    config: &Config,
    on_eta: impl FnOnce(&EtaTable) -> Result<()>,
) -> Result<(Trajectory, RunSummary)> {
    config.validate()?;
    let pmc_bytes = check_capacity(
        config.system.dim(),
        config.run.dk_max,
        config.run.memory_budget.map(u128::from),
    )?;
    let clock = Instant::now();
    let eta = eta_for(config)?;
    let eta_setup = clock.elapsed();
    on_eta(&eta)?;
    let (traj, timings) = run_dynamics_timed(&config.system, &eta, &dynamics_config(config))?;
    let summary = RunSummary {
        pmc_bytes,
        setup: eta_setup + timings.setup,
        eta_setup,
        timings,
        rows: traj.rhos.len(),
    };
    Ok((traj, summary))
}

/// Runs a config and writes the trajectory (and optional η dump) to disk.
pub fn execute(config: &Config) -> Result<RunSummary> {
    let (traj, summary) = simulate_inner(config, |eta| {
        if let Some(path) = &config.run.eta_dump {
            let mut out = BufWriter::new(File::create(path)?);
            eta.write_csv(&mut out)?;
            out.flush()?;
        }
        Ok(())
    })?;
    let mut out = BufWriter::new(File::create(&config.run.output)?);
    write_trajectory_csv(&traj, &mut out)?;
    out.flush()?;
    Ok(summary)
}
