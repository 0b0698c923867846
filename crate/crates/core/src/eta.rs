//! Discretized influence coefficients η: double time integrals of α(t′ − t″)
//! over the window geometries of the interior, initial and terminal time points.
//!
//! α depends only on t′ − t″, so every class is tabulated by lag and computed
//! once over a window anchored at the origin.

use std::collections::HashMap;
use std::fmt;
use std::io::Write;
use std::sync::Mutex;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bath::{BathParams, BathResponse, ResponseFunction, SpectralDensityModel};
use crate::error::{Error, Result};
use crate::quadrature::{integrate, QuadratureSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EtaClass {
    InteriorOffdiag,
    InteriorSelf,
    InitialSelf,
    TerminalSelf,
    TerminalInitial,
    InitialEdge,
    TerminalEdge,
}

impl EtaClass {
    pub const ALL: [EtaClass; 7] = [
        EtaClass::InteriorOffdiag,
        EtaClass::InteriorSelf,
        EtaClass::InitialSelf,
        EtaClass::TerminalSelf,
        EtaClass::TerminalInitial,
        EtaClass::InitialEdge,
        EtaClass::TerminalEdge,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EtaClass::InteriorOffdiag => "interior_offdiag",
            EtaClass::InteriorSelf => "interior_self",
            EtaClass::InitialSelf => "initial_self",
            EtaClass::TerminalSelf => "terminal_self",
            EtaClass::TerminalInitial => "terminal_initial",
            EtaClass::InitialEdge => "initial_edge",
            EtaClass::TerminalEdge => "terminal_edge",
        }
    }

    /// Self classes have a single entry (lag 0); the rest are tabulated for lags 1..=Δk_max.
    pub fn is_lagged(self) -> bool {
        matches!(
            self,
            EtaClass::InteriorOffdiag
                | EtaClass::TerminalInitial
                | EtaClass::InitialEdge
                | EtaClass::TerminalEdge
        )
    }

    /// Integration window for this class at `lag`, with time step `dt`.
    pub fn window(self, dt: f64, lag: usize) -> Window {
        let l = lag as f64;
        let half = 0.5 * dt;
        match self {
            EtaClass::InteriorOffdiag => Window::rectangle((l * dt, (l + 1.0) * dt), (0.0, dt)),
            EtaClass::InteriorSelf => Window::triangle(0.0, dt),
            EtaClass::InitialSelf => Window::triangle(0.0, half),
            // anchored with the terminal time at the origin
            EtaClass::TerminalSelf => Window::triangle(-half, 0.0),
            EtaClass::TerminalInitial => Window::rectangle((l * dt - half, l * dt), (0.0, half)),
            EtaClass::InitialEdge => Window::rectangle((l * dt, (l + 1.0) * dt), (0.0, half)),
            EtaClass::TerminalEdge => Window::rectangle((l * dt - half, l * dt), (0.0, dt)),
        }
    }
}

impl fmt::Display for EtaClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Upper limit of the inner (t″) integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InnerUpper {
    Fixed(f64),
    /// t″ runs up to the current outer variable t′ (triangular window).
    Outer,
}

/// ∫_{outer.0}^{outer.1} ∫_{inner_lo}^{inner_hi} α(t′ − t″) dt″ dt′
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub outer: (f64, f64),
    pub inner_lo: f64,
    pub inner_hi: InnerUpper,
}

impl Window {
    pub fn rectangle(outer: (f64, f64), inner: (f64, f64)) -> Self {
        Window {
            outer,
            inner_lo: inner.0,
            inner_hi: InnerUpper::Fixed(inner.1),
        }
    }

    pub fn triangle(lo: f64, hi: f64) -> Self {
        Window {
            outer: (lo, hi),
            inner_lo: lo,
            inner_hi: InnerUpper::Outer,
        }
    }

    pub fn area(&self) -> f64 {
        let (a, b) = self.outer;
        match self.inner_hi {
            InnerUpper::Fixed(d) => (b - a) * (d - self.inner_lo),
            InnerUpper::Outer => 0.5 * (b - a) * (b - a),
        }
    }
}

/// Iterated adaptive quadrature of α(t′ − t″) over `window`.
pub fn window_integral<R: ResponseFunction + ?Sized>(
    response: &R,
    window: &Window,
    quad: &QuadratureSpec,
) -> Result<Complex64> {
    let (a, b) = window.outer;
    let outer = integrate(
        |tp| {
            let hi = match window.inner_hi {
                InnerUpper::Fixed(d) => d,
                InnerUpper::Outer => tp,
            };
            integrate(|tpp| response.alpha(tp - tpp), window.inner_lo, hi, quad).map(|e| e.value)
        },
        a,
        b,
        quad,
    )?;
    Ok(outer.value)
}

/// α ≡ constant. Used to force closed-form η values in tests.
#[derive(Debug, Clone, Copy)]
pub struct ConstantResponse(pub Complex64);

impl ResponseFunction for ConstantResponse {
    fn alpha(&self, _t: f64) -> Result<Complex64> {
        Ok(self.0)
    }

    fn is_identically_zero(&self) -> bool {
        self.0 == Complex64::new(0.0, 0.0)
    }
}

/// α given by an arbitrary closure.
pub struct FnResponse<F>(pub F);

impl<F> ResponseFunction for FnResponse<F>
where
    F: Fn(f64) -> Result<Complex64> + Sync,
{
    fn alpha(&self, t: f64) -> Result<Complex64> {
        (self.0)(t)
    }
}

/// Caches α by the exact bit pattern of t; never interpolates.
pub struct MemoizedResponse<'a, R: ?Sized> {
    inner: &'a R,
    cache: Mutex<HashMap<u64, Complex64>>,
}

impl<'a, R: ResponseFunction + ?Sized> MemoizedResponse<'a, R> {
    pub fn new(inner: &'a R) -> Self {
        MemoizedResponse {
            inner,
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn cached_points(&self) -> usize {
        self.cache.lock().unwrap().len()
    }
}

impl<R: ResponseFunction + ?Sized> ResponseFunction for MemoizedResponse<'_, R> {
    fn alpha(&self, t: f64) -> Result<Complex64> {
        let key = t.to_bits();
        if let Some(v) = self.cache.lock().unwrap().get(&key) {
            return Ok(*v);
        }
        let v = self.inner.alpha(t)?;
        self.cache.lock().unwrap().insert(key, v);
        Ok(v)
    }

    fn is_identically_zero(&self) -> bool {
        self.inner.is_identically_zero()
    }
}

/// α sampled on a uniform grid and interpolated with 4-point cubic Lagrange polynomials.
#[derive(Debug, Clone)]
pub struct TabulatedResponse {
    start: f64,
    step: f64,
    values: Vec<Complex64>,
}

impl TabulatedResponse {
    /// Tabulates `response` on `[lo, hi]` with spacing at most `max_step`.
    pub fn build<R: ResponseFunction + ?Sized>(
        response: &R,
        lo: f64,
        hi: f64,
        max_step: f64,
    ) -> Result<Self> {
        if !(hi > lo && max_step > 0.0) {
            return Err(Error::Domain(format!(
                "bad tabulation range [{lo}, {hi}] with step {max_step}"
            )));
        }
        let intervals = ((hi - lo) / max_step).ceil() as usize;
        let step = (hi - lo) / intervals as f64;
        // one extra node on each side keeps the stencil inside the grid at the ends
        let start = lo - step;
        let values = (0..intervals + 3)
            .into_par_iter()
            .map(|i| response.alpha(start + i as f64 * step))
            .collect::<Result<Vec<_>>>()?;
        Ok(TabulatedResponse {
            start,
            step,
            values,
        })
    }
}

impl ResponseFunction for TabulatedResponse {
    fn alpha(&self, t: f64) -> Result<Complex64> {
        let x = (t - self.start) / self.step;
        let last = self.values.len() - 1;
        if !(x >= 1.0 && x <= (last - 1) as f64) {
            return Err(Error::Domain(format!(
                "t = {t} outside the tabulated α range"
            )));
        }
        let i = (x.floor() as usize).clamp(1, last - 2);
        let u = x - i as f64;
        // nodes at offsets -1, 0, 1, 2 from i
        let w = [
            -u * (u - 1.0) * (u - 2.0) / 6.0,
            (u + 1.0) * (u - 1.0) * (u - 2.0) / 2.0,
            -(u + 1.0) * u * (u - 2.0) / 2.0,
            (u + 1.0) * u * (u - 1.0) / 6.0,
        ];
        Ok(self.values[i - 1] * w[0]
            + self.values[i] * w[1]
            + self.values[i + 1] * w[2]
            + self.values[i + 2] * w[3])
    }
}

/// How α is sampled while building the η table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaSampling {
    /// Every quadrature node evaluates α directly (memoized).
    #[default]
    Direct,
    /// Uniform table with `points_per_step` nodes per Δt (at least 50), cubic interpolation.
    Tabulated { points_per_step: usize },
}

/// All η coefficients for one (Δt, Δk_max).
///
/// Lagged classes store lag L at index L − 1, for L in 1..=Δk_max.
#[derive(Debug, Clone, PartialEq)]
pub struct EtaTable {
    pub dt: f64,
    pub dk_max: usize,
    pub interior_offdiag: Vec<Complex64>,
    pub interior_self: Complex64,
    pub initial_self: Complex64,
    pub terminal_self: Complex64,
    pub terminal_initial: Vec<Complex64>,
    pub initial_edge: Vec<Complex64>,
    pub terminal_edge: Vec<Complex64>,
}

impl EtaTable {
    pub fn zeros(dt: f64, dk_max: usize) -> Self {
        let z = Complex64::new(0.0, 0.0);
        EtaTable {
            dt,
            dk_max,
            interior_offdiag: vec![z; dk_max],
            interior_self: z,
            initial_self: z,
            terminal_self: z,
            terminal_initial: vec![z; dk_max],
            initial_edge: vec![z; dk_max],
            terminal_edge: vec![z; dk_max],
        }
    }

    /// Looks up one coefficient. Self classes ignore `lag`; lagged classes need 1 ≤ lag ≤ Δk_max.
    pub fn get(&self, class: EtaClass, lag: usize) -> Complex64 {
        match class {
            EtaClass::InteriorSelf => self.interior_self,
            EtaClass::InitialSelf => self.initial_self,
            EtaClass::TerminalSelf => self.terminal_self,
            EtaClass::InteriorOffdiag => self.interior_offdiag[lag - 1],
            EtaClass::TerminalInitial => self.terminal_initial[lag - 1],
            EtaClass::InitialEdge => self.initial_edge[lag - 1],
            EtaClass::TerminalEdge => self.terminal_edge[lag - 1],
        }
    }

    fn slot(&mut self, class: EtaClass, lag: usize) -> &mut Complex64 {
        match class {
            EtaClass::InteriorSelf => &mut self.interior_self,
            EtaClass::InitialSelf => &mut self.initial_self,
            EtaClass::TerminalSelf => &mut self.terminal_self,
            EtaClass::InteriorOffdiag => &mut self.interior_offdiag[lag - 1],
            EtaClass::TerminalInitial => &mut self.terminal_initial[lag - 1],
            EtaClass::InitialEdge => &mut self.initial_edge[lag - 1],
            EtaClass::TerminalEdge => &mut self.terminal_edge[lag - 1],
        }
    }

    /// Every (class, lag) entry in dump order.
    pub fn entries(&self) -> Vec<(EtaClass, usize, Complex64)> {
        entry_keys(self.dk_max)
            .into_iter()
            .map(|(c, l)| (c, l, self.get(c, l)))
            .collect()
    }

    /// Table restricted to lags 1..=dk_max.
    pub fn truncated(&self, dk_max: usize) -> EtaTable {
        let dk = dk_max.min(self.dk_max);
        EtaTable {
            dt: self.dt,
            dk_max: dk,
            interior_offdiag: self.interior_offdiag[..dk].to_vec(),
            interior_self: self.interior_self,
            initial_self: self.initial_self,
            terminal_self: self.terminal_self,
            terminal_initial: self.terminal_initial[..dk].to_vec(),
            initial_edge: self.initial_edge[..dk].to_vec(),
            terminal_edge: self.terminal_edge[..dk].to_vec(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.entries()
            .iter()
            .all(|(_, _, v)| v.re.is_finite() && v.im.is_finite())
    }

    /// CSV dump with header `class,lag,re,im`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "class,lag,re,im")?;
        for (class, lag, v) in self.entries() {
            writeln!(out, "{},{},{:.16e},{:.16e}", class, lag, v.re, v.im)?;
        }
        Ok(())
    }
}

fn entry_keys(dk_max: usize) -> Vec<(EtaClass, usize)> {
    let mut keys = Vec::new();
    for class in EtaClass::ALL {
        if class.is_lagged() {
            keys.extend((1..=dk_max).map(|l| (class, l)));
        } else {
            keys.push((class, 0));
        }
    }
    keys
}

fn validate_grid(dt: f64) -> Result<()> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::validation(
            "dt",
            format!("time step must be positive, got {dt}"),
        ));
    }
    Ok(())
}

/// Builds the η table for the bath given by `model` and `bath`.
pub fn build_eta_table(
    model: &SpectralDensityModel,
    bath: &BathParams,
    dt: f64,
    dk_max: usize,
    quad: &QuadratureSpec,
) -> Result<EtaTable> {
    build_eta_table_sampled(model, bath, dt, dk_max, quad, AlphaSampling::Direct)
}

pub fn build_eta_table_sampled(
    model: &SpectralDensityModel,
    bath: &BathParams,
    dt: f64,
    dk_max: usize,
    quad: &QuadratureSpec,
    sampling: AlphaSampling,
) -> Result<EtaTable> {
    validate_grid(dt)?;
    if model.is_zero() {
        return Ok(EtaTable::zeros(dt, dk_max));
    }
    let response = BathResponse {
        model: *model,
        bath: *bath,
        quad: *quad,
    };
    match sampling {
        AlphaSampling::Direct => {
            build_eta_table_with(&MemoizedResponse::new(&response), dt, dk_max, quad)
        }
        AlphaSampling::Tabulated { points_per_step } => {
            if points_per_step < 50 {
                return Err(Error::validation(
                    "points_per_step",
                    format!("tabulated α needs at least 50 points per step, got {points_per_step}"),
                ));
            }
            // windows reach t′ − t″ ∈ [−Δt/2, (Δk_max + 1)Δt]
            let table = TabulatedResponse::build(
                &response,
                -dt,
                (dk_max as f64 + 2.0) * dt,
                dt / points_per_step as f64,
            )?;
            build_eta_table_with(&table, dt, dk_max, quad)
        }
    }
}

/// Builds the η table from an arbitrary α. Entries are computed in parallel.
pub fn build_eta_table_with<R: ResponseFunction + ?Sized>(
    response: &R,
    dt: f64,
    dk_max: usize,
    quad: &QuadratureSpec,
) -> Result<EtaTable> {
    validate_grid(dt)?;
    quad.validate()?;
    let mut table = EtaTable::zeros(dt, dk_max);
    if response.is_identically_zero() {
        return Ok(table);
    }

    let keys = entry_keys(dk_max);
    let values = keys
        .par_iter()
        .map(|&(class, lag)| {
            window_integral(response, &class.window(dt, lag), quad)
                .map_err(|e| e.in_context(|| format!("η {class} lag {lag}")))
        })
        .collect::<Result<Vec<_>>>()?;
    for ((class, lag), v) in keys.into_iter().zip(values) {
        *table.slot(class, lag) = v;
    }
    if !table.is_finite() {
        return Err(Error::Domain("non-finite η coefficient".into()));
    }
    Ok(table)
}
