use nalgebra::DVector;
use serde::Serialize;

use super::instance::PerturbationInstance;
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::spectral::{conjugate_gradient, CsrMatrix, EnvelopeCholesky};

#[derive(Debug, Clone, PartialEq)]
pub struct CorrectorResult<T> {
    pub v: DVector<T>,
    /// `E(V, V)`.
    pub energy: T,
    /// `‖V‖` in the perturbed mass inner product.
    pub mass_norm: T,
    /// `J(V) = ½E(V) - L(V)`.
    pub torsion: T,
    pub duality_residual: T,
}

/// Flat key/value view for reports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrectorSummary {
    pub energy: f64,
    pub mass_norm: f64,
    pub torsion: f64,
    pub duality_residual: f64,
}

impl<T: Real> CorrectorResult<T> {
    pub fn summary(&self) -> CorrectorSummary {
        CorrectorSummary {
            energy: self.energy.as_f64(),
            mass_norm: self.mass_norm.as_f64(),
            torsion: self.torsion.as_f64(),
            duality_residual: self.duality_residual.as_f64(),
        }
    }
}

/// Minimizes `J(u) = ½E(u) - L(u)` over `φ₀ + Z`: with `V = φ₀ + B y`,
/// solves `(BᵀAB) y = Bᵀℓ - BᵀAφ₀`.
pub fn solve_corrector<T: Real>(inst: &PerturbationInstance<T>) -> Result<CorrectorResult<T>> {
    let n = inst.perturbed().dim();
    let free = inst.subspace().free_indices_allow_empty(n)?;
    solve_with_order(inst, &free)
}

/// Same minimizer, eliminating the free unknowns in the order given by
/// `order` (a permutation of the free indices).
pub fn solve_corrector_ordered<T: Real>(inst: &PerturbationInstance<T>, order: &[usize]) -> Result<CorrectorResult<T>> {
    let n = inst.perturbed().dim();
    let mut sorted = order.to_vec();
    sorted.sort_unstable();
    if sorted != inst.subspace().free_indices_allow_empty(n)? {
        return Err(Error::Validation(
            "ordering is not a permutation of the free indices".into(),
        ));
    }
    solve_with_order(inst, order)
}

fn solve_with_order<T: Real>(inst: &PerturbationInstance<T>, order: &[usize]) -> Result<CorrectorResult<T>> {
    let form = inst.perturbed();
    let phi = inst.restricted_base();
    let mut v = phi.clone();
    if !order.is_empty() {
        let k = form.stiffness().principal_submatrix(order);
        let rhs = reduced_rhs(inst, order);
        let chol = EnvelopeCholesky::factor(&k)
            .map_err(|e| Error::solver(format!("restricted corrector system is singular: {e}"), f64::NAN))?;
        let y = chol.solve(&rhs);
        for (r, &i) in order.iter().enumerate() {
            v[i] += y[r];
        }
    }
    let energy = form.energy(&v);
    let mass_norm = form.mass_norm(&v);
    let torsion = energy * T::lit(0.5) - inst.defect_value(&v);
    let mut result = CorrectorResult {
        v,
        energy,
        mass_norm,
        torsion,
        duality_residual: T::zero(),
    };
    result.duality_residual = torsion_duality_check(inst, &result)?;
    Ok(result)
}

/// `r = Bᵀℓ - BᵀAφ₀` on the listed indices.
fn reduced_rhs<T: Real>(inst: &PerturbationInstance<T>, order: &[usize]) -> DVector<T> {
    let a_phi = inst.perturbed().apply(inst.restricted_base());
    DVector::from_iterator(order.len(), order.iter().map(|&i| inst.defect()[i] - a_phi[i]))
}

/// `|J(V) - D| / (1 + |J(V)|)` where `D` is the dual value
/// `-½ rᵀK⁻¹r + ½E(φ₀) - L(φ₀)` computed by an independent iterative solve.
/// When `φ₀` lies in the subspace this reduces to `-½ sup L(w)²/E(w)`.
pub fn torsion_duality_check<T: Real>(inst: &PerturbationInstance<T>, corrector: &CorrectorResult<T>) -> Result<T> {
    let dual = dual_torsion(inst)?;
    let j = corrector.torsion;
    Ok((j - dual).abs() / (T::one() + j.abs()))
}

/// Value of the dual representation of the minimal torsion.
pub fn dual_torsion<T: Real>(inst: &PerturbationInstance<T>) -> Result<T> {
    let form = inst.perturbed();
    let phi = inst.restricted_base();
    let n = form.dim();
    let free = inst.subspace().free_indices_allow_empty(n)?;
    let base_part = form.energy(phi) * T::lit(0.5) - inst.defect_value(phi);
    if free.is_empty() {
        return Ok(base_part);
    }
    let k: CsrMatrix<T> = form.stiffness().principal_submatrix(&free);
    let r = reduced_rhs(inst, &free);
    if r.iter().all(|&x| x == T::zero()) {
        return Ok(base_part);
    }
    let z = conjugate_gradient(&k, &r, T::tol(1e-14), 50 * free.len() + 200)?;
    Ok(base_part - r.dot(&z) * T::lit(0.5))
}
