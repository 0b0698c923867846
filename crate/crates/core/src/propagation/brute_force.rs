//! Direct summation over every discrete forward/backward path.
//!
//! This is the reference semantics the iterative engine must reproduce. It
//! spells out the η class of each (k, k′) pair explicitly rather than sharing
//! the engine's tables.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::eta::{EtaClass, EtaTable};
use crate::system::{short_time_propagator, CMatrix, SystemSpec};

/// Paths summed by [`brute_force_rho`] are capped at this count.
pub const MAX_BRUTE_FORCE_PATHS: u128 = 10_000_000;

/// η class and lag coupling time index `k` to `kp ≤ k` on a trajectory ending at `n`.
pub fn pair_class(k: usize, kp: usize, n: usize) -> (EtaClass, usize) {
    let lag = k - kp;
    match (k, kp) {
        (0, 0) => (EtaClass::InitialSelf, 0),
        _ if k == kp && k == n => (EtaClass::TerminalSelf, 0),
        _ if k == kp => (EtaClass::InteriorSelf, 0),
        _ if k == n && kp == 0 => (EtaClass::TerminalInitial, lag),
        _ if kp == 0 => (EtaClass::InitialEdge, lag),
        _ if k == n => (EtaClass::TerminalEdge, lag),
        _ => (EtaClass::InteriorOffdiag, lag),
    }
}

/// ⟨s_N⁺|ρ(NΔt)|s_N⁻⟩ by explicit path enumeration, with pairs further apart
/// than `dk_max` time steps dropped from the influence functional.
pub fn brute_force_rho(
    spec: &SystemSpec,
    eta: &EtaTable,
    dt: f64,
    n: usize,
    dk_max: usize,
) -> Result<CMatrix> {
    spec.validate()?;
    let m = spec.dim();
    let d = m * m;
    let points = n + 1;
    let paths = (d as u128)
        .checked_pow(points as u32)
        .filter(|&p| p <= MAX_BRUTE_FORCE_PATHS)
        .ok_or(Error::Size {
            paths: (d as f64).powi(points as i32) as u128,
            limit: MAX_BRUTE_FORCE_PATHS,
        })?;
    let memory = dk_max.min(n);
    if eta.dk_max < memory {
        return Err(Error::validation(
            "eta_lags",
            format!("η table holds {} lags, {memory} needed", eta.dk_max),
        ));
    }

    let k = short_time_propagator(spec, dt)?.forward;
    let s = &spec.coordinates;

    // coupled (k, k′, η) triples for this horizon
    let mut couplings = Vec::new();
    for later in 0..points {
        for earlier in later.saturating_sub(dk_max)..=later {
            let (class, lag) = pair_class(later, earlier, n);
            couplings.push((later, earlier, eta.get(class, lag)));
        }
    }

    let mut rho = CMatrix::zeros(m, m);
    let mut digits = vec![0usize; points];
    for _ in 0..paths {
        let plus = |t: usize| digits[t] / m;
        let minus = |t: usize| digits[t] % m;

        let mut amp = spec.rho0[(plus(0), minus(0))];
        for t in 0..n {
            amp *= k[(plus(t + 1), plus(t))] * k[(minus(t + 1), minus(t))].conj();
        }
        let mut phase = Complex64::new(0.0, 0.0);
        for &(a, b, e) in &couplings {
            let ds = s[plus(a)] - s[minus(a)];
            phase += (e * s[plus(b)] - e.conj() * s[minus(b)]) * ds;
        }
        rho[(plus(n), minus(n))] += amp * (-phase).exp();

        // odometer, newest point fastest
        for slot in digits.iter_mut().rev() {
            *slot += 1;
            if *slot < d {
                break;
            }
            *slot = 0;
        }
    }
    Ok(rho)
}
