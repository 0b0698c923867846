//! JSON run configuration.
//!
//! ```json
//! {
//!   "system": { "coordinates": [0, 1],
//!               "hamiltonian": [[[0, 0], [0.19, 0]], [[0.19, 0], [0, 0]]],
//!               "rho0": [[[1, 0], [0, 0]], [[0, 0], [0, 0]]] },
//!   "bath": { "spectral_density": { "kind": "super_ohmic_gaussian_cutoff",
//!                                   "amplitude": 0.0848, "cutoff": 2.2 },
//!             "temperature": 25.0 },
//!   "quadrature": { "abs_tol": 1e-10, "rel_tol": 1e-10 },
//!   "run": { "dt": 0.1, "steps": 50, "dk_max": 4, "mode": "allPoints",
//!            "threads": "auto", "output": "trajectory.csv" }
//! }
//! ```
//!
//! Complex entries are `[re, im]` pairs (a bare number is read as real);
//! matrices are row-major nested arrays. `quadrature` may be omitted.

use std::fmt;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::de::{self, Deserializer, Visitor};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

use crate::bath::{BathParams, SpectralDensityModel};
use crate::error::{Error, Result};
use crate::eta::AlphaSampling;
use crate::propagation::{Parallelism, ReadoutMode};
use crate::quadrature::QuadratureSpec;
use crate::system::{CMatrix, SystemSpec};

/// Shipped configuration for the driven quantum dot at 25 K.
pub const QDOT25K: &str = include_str!("../configs/qdot25K.json");

pub const DEFAULT_MEMORY_BUDGET: u64 = 4_000_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Threads {
    #[default]
    Auto,
    Count(usize),
}

impl Threads {
    pub fn parallelism(self) -> Parallelism {
        match self {
            Threads::Auto => Parallelism::Auto,
            Threads::Count(1) => Parallelism::Serial,
            Threads::Count(n) => Parallelism::Threads(n),
        }
    }
}

impl std::str::FromStr for Threads {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(Threads::Auto);
        }
        match s.parse::<usize>() {
            Ok(n) if n > 0 => Ok(Threads::Count(n)),
            _ => Err(Error::validation(
                "threads",
                format!("threads must be a positive integer or \"auto\", got {s:?}"),
            )),
        }
    }
}

impl Serialize for Threads {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Threads::Auto => s.serialize_str("auto"),
            Threads::Count(n) => s.serialize_u64(*n as u64),
        }
    }
}

impl<'de> Deserialize<'de> for Threads {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Threads;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a positive integer or \"auto\"")
            }
            fn visit_u64<E: de::Error>(self, n: u64) -> std::result::Result<Threads, E> {
                if n == 0 {
                    return Err(E::custom("threads must be positive"));
                }
                Ok(Threads::Count(n as usize))
            }
            fn visit_str<E: de::Error>(self, s: &str) -> std::result::Result<Threads, E> {
                s.parse().map_err(|e: Error| E::custom(e))
            }
        }
        d.deserialize_any(V)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub dt: f64,
    pub steps: usize,
    pub dk_max: usize,
    pub mode: ReadoutMode,
    pub threads: Threads,
    pub output: PathBuf,
    pub eta_dump: Option<PathBuf>,
    pub memory_budget: Option<u64>,
    pub alpha_sampling: AlphaSampling,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub system: SystemSpec,
    pub spectral_density: SpectralDensityModel,
    pub bath: BathParams,
    pub quadrature: QuadratureSpec,
    pub run: RunConfig,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(untagged)]
enum Entry {
    Pair([f64; 2]),
    Real(f64),
}

impl From<Entry> for Complex64 {
    fn from(e: Entry) -> Self {
        match e {
            Entry::Pair([re, im]) => Complex64::new(re, im),
            Entry::Real(re) => Complex64::new(re, 0.0),
        }
    }
}

type RawMatrix = Vec<Vec<Entry>>;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSystem {
    coordinates: Vec<f64>,
    hamiltonian: RawMatrix,
    rho0: RawMatrix,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBath {
    spectral_density: SpectralDensityModel,
    temperature: f64,
}

fn default_output() -> PathBuf {
    PathBuf::from("trajectory.csv")
}

fn default_budget() -> Option<u64> {
    Some(DEFAULT_MEMORY_BUDGET)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRun {
    dt: f64,
    steps: usize,
    dk_max: usize,
    #[serde(default)]
    mode: ReadoutMode,
    #[serde(default)]
    threads: Threads,
    #[serde(default = "default_output")]
    output: PathBuf,
    #[serde(default)]
    eta_dump: Option<PathBuf>,
    #[serde(default = "default_budget")]
    memory_budget: Option<u64>,
    #[serde(default)]
    alpha_sampling: AlphaSampling,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    system: RawSystem,
    bath: RawBath,
    #[serde(default)]
    quadrature: QuadratureSpec,
    run: RawRun,
}

fn matrix(name: &'static str, raw: &RawMatrix) -> Result<CMatrix> {
    let rows = raw.len();
    if raw.iter().any(|r| r.len() != rows) {
        return Err(Error::validation(
            "shape",
            format!("{name} must be a square matrix"),
        ));
    }
    Ok(CMatrix::from_fn(rows, rows, |i, j| raw[i][j].into()))
}

fn raw_matrix(m: &CMatrix) -> RawMatrix {
    (0..m.nrows())
        .map(|i| {
            (0..m.ncols())
                .map(|j| Entry::Pair([m[(i, j)].re, m[(i, j)].im]))
                .collect()
        })
        .collect()
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::validation(
                "dt",
                format!("time step must be positive, got {}", self.dt),
            ));
        }
        if self.steps == 0 {
            return Err(Error::validation(
                "steps",
                "the horizon N must be at least 1",
            ));
        }
        if let Threads::Count(0) = self.threads {
            return Err(Error::validation(
                "threads",
                "thread count must be positive",
            ));
        }
        if let AlphaSampling::Tabulated { points_per_step } = self.alpha_sampling {
            if points_per_step < 50 {
                return Err(Error::validation(
                    "points_per_step",
                    "tabulated α needs at least 50 points per step",
                ));
            }
        }
        Ok(())
    }
}

impl Config {
    pub fn validate(&self) -> Result<()> {
        self.system.validate()?;
        self.spectral_density.validate()?;
        self.bath.validate()?;
        self.quadrature.validate()?;
        self.run.validate()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawConfig = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        let system = SystemSpec {
            coordinates: raw.system.coordinates,
            hamiltonian: matrix("hamiltonian", &raw.system.hamiltonian)?,
            rho0: matrix("rho0", &raw.system.rho0)?,
        };
        let config = Config {
            system,
            spectral_density: raw.bath.spectral_density,
            bath: BathParams::new(raw.bath.temperature),
            quadrature: raw.quadrature,
            run: RunConfig {
                dt: raw.run.dt,
                steps: raw.run.steps,
                dk_max: raw.run.dk_max,
                mode: raw.run.mode,
                threads: raw.run.threads,
                output: raw.run.output,
                eta_dump: raw.run.eta_dump,
                memory_budget: raw.run.memory_budget,
                alpha_sampling: raw.run.alpha_sampling,
            },
        };
        config.validate()?;
        Ok(config)
    }

    pub fn to_json(&self) -> String {
        let raw = RawConfig {
            system: RawSystem {
                coordinates: self.system.coordinates.clone(),
                hamiltonian: raw_matrix(&self.system.hamiltonian),
                rho0: raw_matrix(&self.system.rho0),
            },
            bath: RawBath {
                spectral_density: self.spectral_density,
                temperature: self.bath.temperature,
            },
            quadrature: self.quadrature,
            run: RawRun {
                dt: self.run.dt,
                steps: self.run.steps,
                dk_max: self.run.dk_max,
                mode: self.run.mode,
                threads: self.run.threads,
                output: self.run.output.clone(),
                eta_dump: self.run.eta_dump.clone(),
                memory_budget: self.run.memory_budget,
                alpha_sampling: self.run.alpha_sampling,
            },
        };
        serde_json::to_string_pretty(&raw).expect("config serializes")
    }

    /// The shipped quantum-dot configuration.
    pub fn qdot25k() -> Self {
        Config::from_json(QDOT25K).expect("shipped config is valid")
    }
}

/// Reads and validates a configuration file.
pub fn load_config(path: impl AsRef<Path>) -> Result<Config> {
    let text = std::fs::read_to_string(path)?;
    Config::from_json(&text)
}
