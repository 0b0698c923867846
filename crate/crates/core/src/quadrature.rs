//! Globally adaptive Gauss–Kronrod (10/21 point) integration.
//!
//! The integrator bisects the subinterval with the largest error estimate
//! until the summed estimate meets `max(abs_tol, rel_tol * |I|)`. Integrands
//! may be real or complex and may themselves fail (nested quadratures).

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerances and limits shared by every quadrature in a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
    /// Frequency integrals are truncated at this multiple of the cutoff frequency.
    pub frequency_upper_cutoff_multiplier: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            abs_tol: 1e-10,
            rel_tol: 1e-10,
            max_subdivisions: 1000,
            frequency_upper_cutoff_multiplier: 20.0,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        let positive = |x: f64| x.is_finite() && x > 0.0;
        if !positive(self.abs_tol) || !positive(self.rel_tol) {
            return Err(Error::validation(
                "tolerance",
                format!(
                    "quadrature tolerances must be positive (abs_tol={}, rel_tol={})",
                    self.abs_tol, self.rel_tol
                ),
            ));
        }
        if self.max_subdivisions == 0 {
            return Err(Error::validation(
                "max_subdivisions",
                "max_subdivisions must be at least 1",
            ));
        }
        if !(self.frequency_upper_cutoff_multiplier.is_finite()
            && self.frequency_upper_cutoff_multiplier > 1.0)
        {
            return Err(Error::validation(
                "frequency_upper_cutoff_multiplier",
                format!(
                    "upper cutoff multiplier must exceed 1 (got {})",
                    self.frequency_upper_cutoff_multiplier
                ),
            ));
        }
        Ok(())
    }
}

/// Values that can be integrated: real or complex scalars.
pub trait Integrand:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self>
{
    fn zero() -> Self;
    fn magnitude(self) -> f64;
}

impl Integrand for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(self) -> f64 {
        self.abs()
    }
}

impl Integrand for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn magnitude(self) -> f64 {
        self.norm()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Estimate<T> {
    pub value: T,
    pub error: f64,
    pub subdivisions: usize,
}

#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.000_000_000_000_000_000_000_000_000_000_000,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

struct Segment<T> {
    a: f64,
    b: f64,
    value: T,
    error: f64,
}

fn rescale_error(err: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut scaled = err.abs();
    if res_asc != 0.0 && scaled != 0.0 {
        let scale = (200.0 * scaled / res_asc).powf(1.5);
        scaled = if scale < 1.0 {
            res_asc * scale
        } else {
            res_asc
        };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        scaled = scaled.max(50.0 * f64::EPSILON * res_abs);
    }
    scaled
}

fn gauss_kronrod_21<T, F>(f: &mut F, a: f64, b: f64) -> Result<Segment<T>>
where
    T: Integrand,
    F: FnMut(f64) -> Result<T>,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let f_center = f(center)?;

    let mut fv1 = [T::zero(); 10];
    let mut fv2 = [T::zero(); 10];
    let mut res_gauss = T::zero();
    let mut res_kronrod = f_center * WGK[10];
    let mut res_abs = f_center.magnitude() * WGK[10];

    for j in 0..10 {
        let x = half * XGK[j];
        let f1 = f(center - x)?;
        let f2 = f(center + x)?;
        fv1[j] = f1;
        fv2[j] = f2;
        // odd positions are the embedded Gauss nodes
        if j % 2 == 1 {
            res_gauss = res_gauss + (f1 + f2) * WG[j / 2];
        }
        res_kronrod = res_kronrod + (f1 + f2) * WGK[j];
        res_abs += WGK[j] * (f1.magnitude() + f2.magnitude());
    }

    let mean = res_kronrod * 0.5;
    let mut res_asc = WGK[10] * (f_center - mean).magnitude();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).magnitude() + (fv2[j] - mean).magnitude());
    }

    let abs_half = half.abs();
    let err = ((res_kronrod - res_gauss) * half).magnitude();
    Ok(Segment {
        a,
        b,
        value: res_kronrod * half,
        error: rescale_error(err, res_abs * abs_half, res_asc * abs_half),
    })
}

/// Integrates `f` over `[a, b]` to `max(abs_tol, rel_tol * |I|)`.
///
/// Fails with [`Error::Convergence`] when more than `max_subdivisions`
/// bisections would be needed, or when a subinterval can no longer be split
/// in floating point. Errors returned by `f` are passed through.
pub fn integrate<T, F>(mut f: F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<Estimate<T>>
where
    T: Integrand,
    F: FnMut(f64) -> Result<T>,
{
    if a == b {
        return Ok(Estimate {
            value: T::zero(),
            error: 0.0,
            subdivisions: 0,
        });
    }

    let first = gauss_kronrod_21(&mut f, a, b)?;
    let mut total = first.value;
    let mut total_err = first.error;
    let mut segments = vec![first];
    let mut subdivisions = 0;

    loop {
        let tol = spec.abs_tol.max(spec.rel_tol * total.magnitude());
        if total_err <= tol {
            return Ok(Estimate {
                value: total,
                error: total_err,
                subdivisions,
            });
        }

        let worst = segments
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .map(|(i, _)| i)
            .expect("at least one segment");
        let seg = segments.swap_remove(worst);
        let mid = 0.5 * (seg.a + seg.b);
        if subdivisions >= spec.max_subdivisions
            || mid <= seg.a.min(seg.b)
            || mid >= seg.a.max(seg.b)
        {
            return Err(Error::Convergence {
                context: String::new(),
                estimate: total_err,
                subdivisions,
            });
        }

        let left = gauss_kronrod_21(&mut f, seg.a, mid)?;
        let right = gauss_kronrod_21(&mut f, mid, seg.b)?;
        subdivisions += 1;

        // Re-sum from scratch so the running total does not drift.
        segments.push(left);
        segments.push(right);
        total = segments.iter().fold(T::zero(), |acc, s| acc + s.value);
        total_err = segments.iter().map(|s| s.error).sum();
    }
}
