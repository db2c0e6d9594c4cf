use serde::Serialize;

use super::corrector::CorrectorResult;
use super::diagnostics::EigenfunctionDiagnostics;
use super::instance::PerturbationInstance;
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShiftReport {
    /// `λ₀ (φ₀, V) / (φ₀, φ₀)`, perturbed mass inner products.
    pub predicted_shift: f64,
    /// `λ₀ (φ₀, V)`.
    pub simplified_shift: f64,
    /// `(φ₀, φ₀)` on the perturbed space.
    pub denominator: f64,
    /// `1 - (φ₀, φ₀)`.
    pub mass_defect: f64,
    /// `‖V‖²`.
    pub remainder_scale: f64,
    pub diagnostics: Option<EigenfunctionDiagnostics>,
}

impl ShiftReport {
    pub fn with_diagnostics(mut self, d: EigenfunctionDiagnostics) -> Self {
        self.diagnostics = Some(d);
        self
    }
}

pub fn first_order_shift<T: Real>(
    inst: &PerturbationInstance<T>,
    corrector: &CorrectorResult<T>,
) -> Result<ShiftReport> {
    let form = inst.perturbed();
    let phi = inst.restricted_base();
    let lambda = inst.base_eigenvalue();
    let denom = form.inner(phi, phi);
    if !(denom > T::lit(0.5)) {
        return Err(Error::MassDefect { mass: denom.as_f64() });
    }
    let overlap = form.inner(phi, &corrector.v);
    Ok(ShiftReport {
        predicted_shift: (lambda * overlap / denom).as_f64(),
        simplified_shift: (lambda * overlap).as_f64(),
        denominator: denom.as_f64(),
        mass_defect: (T::one() - denom).as_f64(),
        remainder_scale: (corrector.mass_norm * corrector.mass_norm).as_f64(),
        diagnostics: None,
    })
}
