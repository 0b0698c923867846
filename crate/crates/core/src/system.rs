//! The open system: coupling coordinate, Hamiltonian and initial state.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

const HERMITIAN_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-12;

/// The coupling coordinate is diagonal in the computational basis with
/// eigenvalues `coordinates`.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemSpec {
    pub coordinates: Vec<f64>,
    /// ps⁻¹
    pub hamiltonian: CMatrix,
    pub rho0: CMatrix,
}

/// Largest |A − A†| element.
pub fn hermiticity_defect(a: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

impl SystemSpec {
    /// Driven two-level system with s ∈ {0, 1}, H = ½(0 Ω; Ω 0) and ρ(0) = |0⟩⟨0|.
    pub fn two_level_drive(rabi_frequency: f64) -> Self {
        let c = |x: f64| Complex64::new(x, 0.0);
        let half = 0.5 * rabi_frequency;
        SystemSpec {
            coordinates: vec![0.0, 1.0],
            hamiltonian: CMatrix::from_row_slice(2, 2, &[c(0.0), c(half), c(half), c(0.0)]),
            rho0: CMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(0.0)]),
        }
    }

    pub fn dim(&self) -> usize {
        self.coordinates.len()
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.dim();
        if m == 0 {
            return Err(Error::validation(
                "dimension",
                "system needs at least one basis state",
            ));
        }
        if let Some(s) = self.coordinates.iter().find(|s| !s.is_finite()) {
            return Err(Error::validation(
                "coordinates",
                format!("non-finite coordinate {s}"),
            ));
        }
        for (name, mat) in [("hamiltonian", &self.hamiltonian), ("rho0", &self.rho0)] {
            if mat.shape() != (m, m) {
                return Err(Error::validation(
                    "shape",
                    format!("{name} is {:?}, expected {m}×{m}", mat.shape()),
                ));
            }
            if mat.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::validation(
                    "finite",
                    format!("{name} has non-finite entries"),
                ));
            }
        }
        let dh = hermiticity_defect(&self.hamiltonian);
        if dh > HERMITIAN_TOL {
            return Err(Error::validation(
                "hermitian",
                format!("hamiltonian deviates from hermitian by {dh:e}"),
            ));
        }
        let dr = hermiticity_defect(&self.rho0);
        if dr > HERMITIAN_TOL {
            return Err(Error::validation(
                "hermitian",
                format!("rho0 deviates from hermitian by {dr:e}"),
            ));
        }
        let tr = self.rho0.trace();
        if (tr - Complex64::new(1.0, 0.0)).norm() > TRACE_TOL {
            return Err(Error::validation(
                "trace",
                format!("trace(rho0) = {tr}, expected 1"),
            ));
        }
        Ok(())
    }
}

/// Forward propagator K = exp(−iHΔt) and its adjoint.
#[derive(Debug, Clone, PartialEq)]
pub struct PropagatorPair {
    pub forward: CMatrix,
    pub backward: CMatrix,
}

/// Exact short-time propagator by eigendecomposition of the Hermitian Hamiltonian.
pub fn short_time_propagator(spec: &SystemSpec, dt: f64) -> Result<PropagatorPair> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::validation(
            "dt",
            format!("time step must be positive, got {dt}"),
        ));
    }
    let defect = hermiticity_defect(&spec.hamiltonian);
    if defect > HERMITIAN_TOL {
        return Err(Error::validation(
            "hermitian",
            format!("hamiltonian deviates from hermitian by {defect:e}"),
        ));
    }
    // symmetrize so the eigensolver sees an exactly Hermitian matrix
    let h = (&spec.hamiltonian + spec.hamiltonian.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = h.symmetric_eigen();
    let phases =
        CMatrix::from_diagonal(&eig.eigenvalues.map(|e| Complex64::new(0.0, -e * dt).exp()));
    let v = &eig.eigenvectors;
    let forward = v * phases * v.adjoint();
    let backward = forward.adjoint();
    Ok(PropagatorPair { forward, backward })
}
