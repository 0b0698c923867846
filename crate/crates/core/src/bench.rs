//! Wall-clock sweeps over memory length and horizon.
//!
//! Each parameter value gets one discarded warm-up run followed by `reps`
//! timed runs; every column reports the median (or, on request, the minimum).
//! Runs are interleaved across
//! parameter values. Propagation is timed once on
//! the serial path and once on the configured parallel path. η quadrature and
//! engine table construction count as setup.

use std::io::Write;
use std::str::FromStr;
use std::time::{Duration, Instant};

use crate::config::Config;
use crate::driver::{dynamics_config, eta_for};
use crate::error::{Error, Result};
use crate::propagation::{check_capacity, run_dynamics_timed, Parallelism, ReadoutMode};

pub const REPORT_HEADER: &str =
    "param,pmc_bytes,setup_s,prop_serial_s,prop_parallel_s,readout_s,status";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepKind {
    DkMax,
    Horizon,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowStatus {
    Ok,
    DidNotFit,
}

impl RowStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RowStatus::Ok => "ok",
            RowStatus::DidNotFit => "did not fit",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub param: usize,
    /// `None` when the cost overflows 128 bits.
    pub pmc_bytes: Option<u128>,
    pub setup_s: f64,
    pub prop_serial_s: f64,
    pub prop_parallel_s: f64,
    pub readout_s: f64,
    pub status: RowStatus,
}

impl BenchRow {
    /// Setup, serial propagation and readout.
    pub fn total_s(&self) -> f64 {
        self.setup_s + self.prop_serial_s + self.readout_s
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares of `y` on `x`. Needs at least two distinct `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<LinearFit> {
    let n = x.len();
    if n < 2 || n != y.len() {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        sxy * sxy / (sxx * syy)
    };
    Some(LinearFit {
        slope,
        intercept,
        r_squared,
    })
}

#[derive(Debug, Clone)]
pub struct BenchReport {
    pub kind: SweepKind,
    pub rows: Vec<BenchRow>,
    /// Total time against N, horizon sweeps only.
    pub fit: Option<LinearFit>,
}

impl BenchReport {
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{REPORT_HEADER}")?;
        for r in &self.rows {
            let pmc = r
                .pmc_bytes
                .map_or_else(|| "overflow".to_string(), |p| p.to_string());
            writeln!(
                out,
                "{},{},{:.6e},{:.6e},{:.6e},{:.6e},{}",
                r.param,
                pmc,
                r.setup_s,
                r.prop_serial_s,
                r.prop_parallel_s,
                r.readout_s,
                r.status.as_str()
            )?;
        }
        if let Some(fit) = self.fit {
            writeln!(
                out,
                "# fit total_s = slope*N + intercept: slope={:.6e},intercept={:.6e},r2={:.6}",
                fit.slope, fit.intercept, fit.r_squared
            )?;
        }
        Ok(())
    }
}

/// How the timed repetitions of one column are reduced to a single number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Statistic {
    #[default]
    Median,
    /// Fastest repetition; estimates intrinsic cost when the machine is
    /// intermittently slowed by other tenants.
    Min,
}

impl Statistic {
    fn reduce(self, v: Vec<f64>) -> f64 {
        match self {
            Statistic::Median => median(v),
            Statistic::Min => v.into_iter().fold(f64::INFINITY, f64::min),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct BenchOptions {
    pub reps: usize,
    pub parallel: Parallelism,
    pub statistic: Statistic,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions {
            reps: 3,
            parallel: Parallelism::Auto,
            statistic: Statistic::Median,
        }
    }
}

struct Sample {
    setup: Duration,
    serial: Duration,
    parallel: Duration,
    readout: Duration,
}

fn sample(config: &Config, parallel: Parallelism) -> Result<Sample> {
    let clock = Instant::now();
    let eta = eta_for(config)?;
    let eta_setup = clock.elapsed();
    let mut dyn_cfg = dynamics_config(config);
    dyn_cfg.parallelism = Parallelism::Serial;
    let (_, serial) = run_dynamics_timed(&config.system, &eta, &dyn_cfg)?;
    dyn_cfg.parallelism = parallel;
    let (_, par) = run_dynamics_timed(&config.system, &eta, &dyn_cfg)?;
    Ok(Sample {
        setup: eta_setup + serial.setup,
        serial: serial.propagation,
        parallel: par.propagation,
        readout: serial.readout,
    })
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn did_not_fit(param: usize, pmc_bytes: u128) -> BenchRow {
    BenchRow {
        param,
        pmc_bytes: (pmc_bytes != u128::MAX).then_some(pmc_bytes),
        setup_s: f64::NAN,
        prop_serial_s: f64::NAN,
        prop_parallel_s: f64::NAN,
        readout_s: f64::NAN,
        status: RowStatus::DidNotFit,
    }
}

/// Times every config in interleaved passes (one warm-up pass, then `reps`
/// passes) so slow phases on a shared machine spread across all rows instead
/// of landing on one.
fn measure_all(configs: &[(usize, Config)], opts: &BenchOptions) -> Result<Vec<BenchRow>> {
    let mut fits = Vec::with_capacity(configs.len());
    for (param, c) in configs {
        match check_capacity(
            c.system.dim(),
            c.run.dk_max,
            c.run.memory_budget.map(u128::from),
        ) {
            Ok(p) => fits.push(Ok(p)),
            Err(Error::Capacity { pmc_bytes, .. }) => {
                fits.push(Err(did_not_fit(*param, pmc_bytes)))
            }
            Err(e) => return Err(e),
        }
    }
    let mut samples: Vec<Vec<Sample>> = configs.iter().map(|_| Vec::new()).collect();
    for pass in 0..=opts.reps.max(1) {
        // alternate direction so slow drift in machine speed cancels across passes
        let order: Vec<usize> = if pass % 2 == 0 {
            (0..configs.len()).collect()
        } else {
            (0..configs.len()).rev().collect()
        };
        for i in order {
            let c = &configs[i].1;
            if fits[i].is_ok() {
                let s = sample(c, opts.parallel)?;
                if pass > 0 {
                    samples[i].push(s);
                }
            }
        }
    }
    let rows = configs
        .iter()
        .zip(fits)
        .zip(samples)
        .map(|(((param, _), fit), samples)| match fit {
            Err(row) => row,
            Ok(pmc) => {
                let col = |f: fn(&Sample) -> Duration| {
                    let v = samples.iter().map(|s| f(s).as_secs_f64()).collect();
                    opts.statistic.reduce(v)
                };
                BenchRow {
                    param: *param,
                    pmc_bytes: Some(pmc),
                    setup_s: col(|s| s.setup),
                    prop_serial_s: col(|s| s.serial),
                    prop_parallel_s: col(|s| s.parallel),
                    readout_s: col(|s| s.readout),
                    status: RowStatus::Ok,
                }
            }
        })
        .collect();
    Ok(rows)
}

/// Cost against Δk_max at the base config's horizon and mode.
pub fn sweep_dkmax(base: &Config, values: &[usize], opts: &BenchOptions) -> Result<BenchReport> {
    base.validate()?;
    let configs: Vec<_> = values
        .iter()
        .map(|&dk| {
            let mut c = base.clone();
            c.run.dk_max = dk;
            (dk, c)
        })
        .collect();
    Ok(BenchReport {
        kind: SweepKind::DkMax,
        rows: measure_all(&configs, opts)?,
        fit: None,
    })
}

/// Cost against the horizon N at fixed Δk_max, reading out only the final point.
pub fn sweep_horizon(
    base: &Config,
    values: &[usize],
    dk_max: usize,
    opts: &BenchOptions,
) -> Result<BenchReport> {
    base.validate()?;
    let configs: Vec<_> = values
        .iter()
        .map(|&n| {
            let mut c = base.clone();
            c.run.steps = n;
            c.run.dk_max = dk_max;
            c.run.mode = ReadoutMode::JustFinalPoint;
            (n, c)
        })
        .collect();
    let rows = measure_all(&configs, opts)?;
    let (x, y): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .filter(|r| r.status == RowStatus::Ok)
        .map(|r| (r.param as f64, r.total_s()))
        .unzip();
    Ok(BenchReport {
        kind: SweepKind::Horizon,
        fit: linear_fit(&x, &y),
        rows,
    })
}

/// Parameter list: `a..b` (inclusive), `a:step:b`, or a comma list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValueList(pub Vec<usize>);

impl FromStr for ValueList {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::validation("values", format!("cannot parse value list {s:?}"));
        let num = |t: &str| t.trim().parse::<usize>().map_err(|_| bad());
        let s = s.trim();
        let values: Vec<usize> = if let Some((a, b)) = s.split_once("..") {
            let (a, b) = (num(a)?, num(b.trim_start_matches('='))?);
            (a..=b).collect()
        } else if s.contains(':') {
            let parts: Vec<&str> = s.split(':').collect();
            let [a, step, b] = parts[..] else {
                return Err(bad());
            };
            let (a, step, b) = (num(a)?, num(step)?, num(b)?);
            if step == 0 {
                return Err(bad());
            }
            (a..=b).step_by(step).collect()
        } else {
            s.split(',').map(num).collect::<Result<_>>()?
        };
        if values.is_empty() {
            return Err(bad());
        }
        Ok(ValueList(values))
    }
}
