//! Spectral densities and the bath response function α(t).
//!
//! Units throughout: ħ = 1, time in ps, frequency in ps⁻¹, temperature in K.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate, QuadratureSpec};

/// k_B/ħ in ps⁻¹·K⁻¹, from the exact SI values of k_B and h (2π·k_B/h · 1e-12).
pub const K_B_OVER_HBAR: f64 = 2.0 * PI * 1.380_649e-23 / 6.626_070_15e-34 * 1e-12;

/// Below this value of βω the coth/Bose factors are replaced by their series.
const SMALL_BETA_OMEGA: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectralKind {
    /// J(ω) = A ω³ exp(−(ω/ω_c)²)
    SuperOhmicGaussianCutoff,
    /// J(ω) = A ω exp(−ω/ω_c)
    OhmicExponentialCutoff,
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectralDensityModel {
    pub kind: SpectralKind,
    /// ps² for the super-Ohmic form, dimensionless for Ohmic.
    #[serde(default)]
    pub amplitude: f64,
    /// ω_c in ps⁻¹.
    #[serde(default = "default_cutoff")]
    pub cutoff: f64,
}

fn default_cutoff() -> f64 {
    1.0
}

impl SpectralDensityModel {
    pub fn super_ohmic(amplitude: f64, cutoff: f64) -> Self {
        SpectralDensityModel {
            kind: SpectralKind::SuperOhmicGaussianCutoff,
            amplitude,
            cutoff,
        }
    }

    pub fn ohmic(amplitude: f64, cutoff: f64) -> Self {
        SpectralDensityModel {
            kind: SpectralKind::OhmicExponentialCutoff,
            amplitude,
            cutoff,
        }
    }

    pub fn zero() -> Self {
        SpectralDensityModel {
            kind: SpectralKind::Zero,
            amplitude: 0.0,
            cutoff: 1.0,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.kind == SpectralKind::Zero || self.amplitude == 0.0
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cutoff.is_finite() && self.cutoff > 0.0) {
            return Err(Error::validation(
                "cutoff",
                format!("cutoff frequency must be positive, got {}", self.cutoff),
            ));
        }
        if !(self.amplitude.is_finite() && self.amplitude >= 0.0) {
            return Err(Error::validation(
                "amplitude",
                format!(
                    "spectral amplitude must be non-negative, got {}",
                    self.amplitude
                ),
            ));
        }
        Ok(())
    }

    /// J(|ω|)/|ω|, finite at the origin for both supported families.
    fn reduced(&self, w: f64) -> f64 {
        let w = w.abs();
        match self.kind {
            SpectralKind::SuperOhmicGaussianCutoff => {
                let r = w / self.cutoff;
                self.amplitude * w * w * (-r * r).exp()
            }
            SpectralKind::OhmicExponentialCutoff => self.amplitude * (-w / self.cutoff).exp(),
            SpectralKind::Zero => 0.0,
        }
    }

    /// Upper limit of the frequency integrals.
    fn frequency_limit(&self, quad: &QuadratureSpec) -> f64 {
        quad.frequency_upper_cutoff_multiplier * self.cutoff
    }
}

/// Evaluates J(ω) with the even extension J(−ω) = J(ω).
pub fn eval_spectral_density(model: &SpectralDensityModel, w: f64) -> Result<f64> {
    if !w.is_finite() {
        return Err(Error::Domain(format!("spectral density evaluated at {w}")));
    }
    Ok(model.reduced(w) * w.abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathParams {
    /// Kelvin.
    pub temperature: f64,
}

impl BathParams {
    pub fn new(temperature: f64) -> Self {
        BathParams { temperature }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.temperature.is_finite() && self.temperature > 0.0) {
            return Err(Error::validation(
                "temperature",
                format!("temperature must be positive, got {}", self.temperature),
            ));
        }
        Ok(())
    }

    /// k_B T / ħ in ps⁻¹; βħω = ω / thermal_frequency.
    pub fn thermal_frequency(&self) -> f64 {
        self.temperature * K_B_OVER_HBAR
    }
}

/// J(ω)·coth(βω/2) for ω ≥ 0.
fn thermal_weight(model: &SpectralDensityModel, bath: &BathParams, w: f64) -> f64 {
    let wt = bath.thermal_frequency();
    let x = w / wt;
    let reduced = model.reduced(w);
    if x.abs() < SMALL_BETA_OMEGA {
        // coth(x/2) ≈ 2/x + x/6
        reduced * (2.0 * wt + w * x / 6.0)
    } else {
        reduced * w / (0.5 * x).tanh()
    }
}

/// α(t) = (1/π)∫₀^Λ J(ω)[coth(βω/2)cos(ωt) − i sin(ωt)] dω with Λ the truncated upper limit.
pub fn bath_response(
    model: &SpectralDensityModel,
    bath: &BathParams,
    t: f64,
    quad: &QuadratureSpec,
) -> Result<Complex64> {
    if !t.is_finite() {
        return Err(Error::Domain(format!("bath response evaluated at t = {t}")));
    }
    if model.is_zero() {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let upper = model.frequency_limit(quad);
    let est = integrate(
        |w| {
            let (s, c) = (w * t).sin_cos();
            let j = model.reduced(w) * w;
            Ok(Complex64::new(thermal_weight(model, bath, w) * c, -j * s))
        },
        0.0,
        upper,
        quad,
    )
    .map_err(|e| e.in_context(|| format!("bath response at t = {t}")))?;
    Ok(est.value / PI)
}

/// Two-sided Bose-function form of α(t), used to cross-check [`bath_response`]:
/// (1/π)∫_{−Λ}^{Λ} J(ω)/(1 − e^{−βω}) e^{−iωt} dω.
///
/// The integrand uses J(−ω) = −J(ω) on the negative axis; only that extension
/// makes this form equal to the one-sided coth form.
pub fn bath_response_bose_form(
    model: &SpectralDensityModel,
    bath: &BathParams,
    t: f64,
    quad: &QuadratureSpec,
) -> Result<Complex64> {
    if !t.is_finite() {
        return Err(Error::Domain(format!("bath response evaluated at t = {t}")));
    }
    if model.is_zero() {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let wt = bath.thermal_frequency();
    let upper = model.frequency_limit(quad);
    let est = integrate(
        |w| {
            let x = w / wt;
            // ω / (1 − e^{−βω}), smooth through the origin
            let bose = if x.abs() < SMALL_BETA_OMEGA {
                wt * (1.0 + 0.5 * x)
            } else {
                -w / (-x).exp_m1()
            };
            let (s, c) = (w * t).sin_cos();
            Ok(Complex64::new(c, -s) * (model.reduced(w) * bose))
        },
        -upper,
        upper,
        quad,
    )
    .map_err(|e| e.in_context(|| format!("Bose-form bath response at t = {t}")))?;
    Ok(est.value / PI)
}

/// Anything that can supply α(t) to the η integrals.
pub trait ResponseFunction: Sync {
    fn alpha(&self, t: f64) -> Result<Complex64>;

    /// True when α ≡ 0; lets callers skip quadrature entirely.
    fn is_identically_zero(&self) -> bool {
        false
    }
}

/// α(t) evaluated by quadrature at every requested time.
#[derive(Debug, Clone, Copy)]
pub struct BathResponse {
    pub model: SpectralDensityModel,
    pub bath: BathParams,
    pub quad: QuadratureSpec,
}

impl ResponseFunction for BathResponse {
    fn alpha(&self, t: f64) -> Result<Complex64> {
        bath_response(&self.model, &self.bath, t, &self.quad)
    }

    fn is_identically_zero(&self) -> bool {
        self.model.is_zero()
    }
}
