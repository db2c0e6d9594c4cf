use nalgebra::DVector;
use serde::Serialize;

use super::corrector::CorrectorResult;
use super::instance::PerturbationInstance;
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::spectral::{DiscreteSpace, EigenSolution};

/// Minimum normalized mass overlap for a perturbed eigenvector to count as
/// the continuation of the base mode.
pub const DEFAULT_MIN_OVERLAP: f64 = 0.5;

/// The perturbed eigenpair continuing the base mode, sign-fixed so that
/// `(φ₀, φ_ε) > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackedMode<T> {
    pub index: usize,
    pub eigenvalue: T,
    pub eigenvector: DVector<T>,
    /// `|(φ₀, φ_ε)| / ‖φ₀‖`.
    pub overlap: T,
}

/// Among the eigenpairs whose normalized overlap with `phi0` reaches
/// `min_overlap`, picks the one with eigenvalue nearest `lambda0`.
pub fn track_mode<T: Real>(
    space: &DiscreteSpace<T>,
    phi0: &DVector<T>,
    lambda0: T,
    sol: &EigenSolution<T>,
    min_overlap: T,
) -> Result<TrackedMode<T>> {
    let norm = space.norm(phi0);
    if !(norm > T::zero()) {
        return Err(Error::Tracking(
            "base eigenfunction vanishes on the perturbed space".into(),
        ));
    }
    let mut best: Option<(usize, T, T)> = None;
    for j in 0..sol.len() {
        let ov = space.inner(phi0, &sol.eigenvector(j)) / norm;
        if ov.abs() < min_overlap {
            continue;
        }
        let dist = (sol.eigenvalue(j) - lambda0).abs();
        if best.is_none_or(|(_, d, _)| dist < d) {
            best = Some((j, dist, ov));
        }
    }
    let (index, _, ov) = best.ok_or_else(|| {
        Error::Tracking(format!(
            "no computed eigenvector has mass overlap ≥ {} with the base mode",
            min_overlap
        ))
    })?;
    let mut eigenvector = sol.eigenvector(index);
    if ov < T::zero() {
        eigenvector.neg_mut();
    }
    Ok(TrackedMode {
        index,
        eigenvalue: sol.eigenvalue(index),
        eigenvector,
        overlap: ov.abs(),
    })
}

/// Energy- and mass-norm distances between the base mode, the corrected
/// approximation and the perturbed eigenfunction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EigenfunctionDiagnostics {
    /// `E(ψ - Πψ)` with `ψ = φ₀ - V` and `Π` the mass projection onto `φ_ε`.
    pub projected_energy_error: f64,
    /// `‖φ₀ - Πψ‖`.
    pub projected_mass_error: f64,
    /// `E(φ₀ - φ_ε)`.
    pub eigenfunction_energy_error: f64,
    /// `E(φ₀ - φ_ε) / E(V)`; 1 when `V = 0`.
    pub energy_ratio: f64,
    /// `‖φ₀ - φ_ε‖² / E(V)`; 0 when `V = 0`.
    pub l2_ratio: f64,
    pub tracked_index: usize,
    pub tracked_eigenvalue: f64,
    pub overlap: f64,
}

pub fn eigenfunction_diagnostics<T: Real>(
    inst: &PerturbationInstance<T>,
    corrector: &CorrectorResult<T>,
    perturbed: &EigenSolution<T>,
) -> Result<EigenfunctionDiagnostics> {
    let form = inst.perturbed();
    let space = form.space();
    let phi0 = inst.restricted_base();
    let tracked = track_mode(
        space,
        phi0,
        inst.base_eigenvalue(),
        perturbed,
        T::lit(DEFAULT_MIN_OVERLAP),
    )?;
    if !(tracked.overlap > T::tol(1e-12)) {
        return Err(Error::Tracking(
            "base and perturbed eigenfunctions are orthogonal".into(),
        ));
    }
    let phi_e = &tracked.eigenvector;
    let psi = phi0 - &corrector.v;
    let proj = phi_e * space.inner(&psi, phi_e);
    let projected_energy_error = form.energy(&(&psi - &proj));
    let projected_mass_error = space.norm(&(phi0 - &proj));
    let diff = phi0 - phi_e;
    let eigenfunction_energy_error = form.energy(&diff);
    let diff_mass = space.norm_squared(&diff);
    let (energy_ratio, l2_ratio) = if corrector.energy > T::zero() {
        (
            eigenfunction_energy_error / corrector.energy,
            diff_mass / corrector.energy,
        )
    } else {
        (T::one(), T::zero())
    };
    Ok(EigenfunctionDiagnostics {
        projected_energy_error: projected_energy_error.as_f64(),
        projected_mass_error: projected_mass_error.as_f64(),
        eigenfunction_energy_error: eigenfunction_energy_error.as_f64(),
        energy_ratio: energy_ratio.as_f64(),
        l2_ratio: l2_ratio.as_f64(),
        tracked_index: tracked.index,
        tracked_eigenvalue: tracked.eigenvalue.as_f64(),
        overlap: tracked.overlap.as_f64(),
    })
}

/// `‖V‖² / E(V)`.
pub fn smallness_ratio<T: Real>(corrector: &CorrectorResult<T>) -> Result<T> {
    if !(corrector.energy > T::zero()) {
        return Err(Error::UndefinedRatio);
    }
    Ok(corrector.mass_norm * corrector.mass_norm / corrector.energy)
}
