//! Iterative tensor propagation of the reduced density matrix, plus the
//! brute-force path sum it must reproduce.

mod brute_force;
mod indexer;
mod influence;
mod tensor;

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

pub use brute_force::{brute_force_rho, pair_class, MAX_BRUTE_FORCE_PATHS};
pub use indexer::PathIndexer;
pub use influence::influence_pair_factor;
pub use tensor::{AugmentedTensor, Engine, Parallelism, Phase};

use crate::error::{Error, Result};
use crate::eta::EtaTable;
use crate::system::{short_time_propagator, CMatrix, SystemSpec};

/// Bytes held by the four full-window complex arrays: 64·M^{2(Δk_max+1)}.
/// `None` on overflow.
pub fn primary_memory_cost(m: usize, dk_max: usize) -> Option<u128> {
    let exp = u32::try_from(2 * (dk_max + 1)).ok()?;
    (m as u128).checked_pow(exp)?.checked_mul(64)
}

/// Decimal-prefixed byte count with four significant figures, e.g. "16.38 KB".
pub fn format_bytes(bytes: u128) -> String {
    const UNITS: [&str; 7] = ["B", "KB", "MB", "GB", "TB", "PB", "EB"];
    let mut value = bytes as f64;
    let mut unit = 0;
    while value >= 1000.0 && unit + 1 < UNITS.len() {
        value /= 1000.0;
        unit += 1;
    }
    if unit == 0 {
        return format!("{bytes} B");
    }
    let decimals = if value >= 100.0 {
        1
    } else if value >= 10.0 {
        2
    } else {
        3
    };
    format!("{value:.decimals$} {}", UNITS[unit])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum ReadoutMode {
    #[default]
    #[serde(rename = "allPoints")]
    AllPoints,
    #[serde(rename = "justFinalPoint")]
    JustFinalPoint,
}

impl std::str::FromStr for ReadoutMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "allPoints" => Ok(ReadoutMode::AllPoints),
            "justFinalPoint" => Ok(ReadoutMode::JustFinalPoint),
            other => Err(Error::validation(
                "mode",
                format!("unknown readout mode {other:?} (expected allPoints or justFinalPoint)"),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynamicsConfig {
    pub dt: f64,
    pub steps: usize,
    pub dk_max: usize,
    pub mode: ReadoutMode,
    pub parallelism: Parallelism,
    /// Refuse to start when the primary memory cost exceeds this many bytes.
    pub memory_budget: Option<u128>,
}

/// Reduced density matrices at the reported times.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub rhos: Vec<CMatrix>,
}

impl Trajectory {
    pub fn last(&self) -> Option<&CMatrix> {
        self.rhos.last()
    }
}

/// Wall time split by phase: table setup, propagation steps, readouts.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PhaseTimings {
    pub setup: Duration,
    pub propagation: Duration,
    pub readout: Duration,
}

/// Checks the primary memory cost of a run against an optional budget.
pub fn check_capacity(m: usize, dk_max: usize, budget: Option<u128>) -> Result<u128> {
    let pmc = primary_memory_cost(m, dk_max);
    let required = pmc.map(|p| p / 4).unwrap_or(u128::MAX);
    match (pmc, budget) {
        (Some(p), Some(b)) if p > b => Err(Error::Capacity {
            required_bytes: required,
            pmc_bytes: p,
            budget: Some(b),
        }),
        (None, b) => Err(Error::Capacity {
            required_bytes: required,
            pmc_bytes: u128::MAX,
            budget: b,
        }),
        (Some(p), _) => Ok(p),
    }
}

pub fn run_dynamics(
    spec: &SystemSpec,
    eta: &EtaTable,
    config: &DynamicsConfig,
) -> Result<Trajectory> {
    run_dynamics_timed(spec, eta, config).map(|(t, _)| t)
}

/// Runs the propagation and reports per-phase wall time.
///
/// The window is capped at `min(Δk_max, N) + 1` points; when Δk_max ≥ N the
/// dynamics are untruncated.
pub fn run_dynamics_timed(
    spec: &SystemSpec,
    eta: &EtaTable,
    config: &DynamicsConfig,
) -> Result<(Trajectory, PhaseTimings)> {
    let DynamicsConfig {
        dt,
        steps,
        dk_max,
        mode,
        parallelism,
        memory_budget,
    } = *config;
    if steps == 0 {
        return Err(Error::validation(
            "steps",
            "the horizon N must be at least 1",
        ));
    }
    if (eta.dt - dt).abs() > 1e-12 * dt {
        return Err(Error::validation(
            "dt",
            format!("η table built for Δt = {}, run uses {dt}", eta.dt),
        ));
    }
    check_capacity(spec.dim(), dk_max, memory_budget)?;

    let mut timings = PhaseTimings::default();
    let started = Instant::now();
    let memory = dk_max.min(steps);
    let props = short_time_propagator(spec, dt)?;
    let engine = Engine::new(spec, eta, &props, memory, parallelism)?;
    if steps > memory {
        engine.prepare_sliding()?;
    }
    timings.setup = started.elapsed();

    let mut times = Vec::new();
    let mut rhos = Vec::new();
    let mut tensor = engine.initial_tensor();
    let clock = Instant::now();
    times.push(0.0);
    rhos.push(engine.readout(&tensor));
    timings.readout += clock.elapsed();

    let mut scratch = Vec::new();
    for k in 1..=steps {
        let clock = Instant::now();
        engine.advance(&mut tensor, &mut scratch)?;
        timings.propagation += clock.elapsed();
        if mode == ReadoutMode::AllPoints || k == steps {
            let clock = Instant::now();
            times.push(k as f64 * dt);
            rhos.push(engine.readout(&tensor));
            timings.readout += clock.elapsed();
        }
    }
    Ok((Trajectory { times, rhos }, timings))
}
