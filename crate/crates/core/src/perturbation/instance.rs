use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::spectral::{EigenSolution, FormSystem, SubspaceSpec};

/// Relative gap below which a base eigenvalue is treated as non-simple.
pub const DEFAULT_GAP_THRESHOLD: f64 = 1e-6;

/// How the base eigenfunction lands in the perturbed space.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum RestrictionMap {
    #[default]
    Identity,
    /// Perturbed node `i` carries base node `map[i]`.
    Select(Vec<usize>),
}

impl RestrictionMap {
    pub fn apply<T: Real>(&self, base: &DVector<T>) -> Result<DVector<T>> {
        match self {
            RestrictionMap::Identity => Ok(base.clone()),
            RestrictionMap::Select(map) => {
                if let Some(&bad) = map.iter().find(|&&i| i >= base.len()) {
                    return Err(Error::Shape(format!(
                        "restriction index {bad} outside a base space of dimension {}",
                        base.len()
                    )));
                }
                Ok(DVector::from_iterator(map.len(), map.iter().map(|&i| base[i])))
            }
        }
    }

    pub fn target_dim(&self, base_dim: usize) -> usize {
        match self {
            RestrictionMap::Identity => base_dim,
            RestrictionMap::Select(map) => map.len(),
        }
    }
}

/// A simple eigenpair of the unperturbed problem.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseMode<T> {
    pub index: usize,
    pub eigenvalue: T,
    /// Mass-normalized in the base space.
    pub eigenfunction: DVector<T>,
    pub relative_gap: T,
}

impl<T: Real> BaseMode<T> {
    /// Picks pair `index` and checks that it is simple. The solution must
    /// contain the upper neighbour unless it exhausts the space.
    pub fn from_solution(sol: &EigenSolution<T>, index: usize, dim: usize, gap_threshold: T) -> Result<Self> {
        if index >= sol.len() {
            return Err(Error::Validation(format!(
                "mode {index} requested but only {} eigenpairs were computed",
                sol.len()
            )));
        }
        let eigenvalue = sol.eigenvalue(index);
        let gap = sol.relative_gap(index, dim).ok_or_else(|| {
            Error::Validation(format!(
                "mode {index} needs its upper neighbour to check simplicity; solve for at least {} pairs",
                index + 2
            ))
        })?;
        if gap < gap_threshold {
            return Err(Error::Degenerate {
                index,
                eigenvalue: eigenvalue.as_f64(),
                gap: gap.as_f64(),
                threshold: gap_threshold.as_f64(),
            });
        }
        Ok(Self {
            index,
            eigenvalue,
            eigenfunction: sol.eigenvector(index),
            relative_gap: gap,
        })
    }
}

/// Base eigenpair, perturbed form, admissible subspace and defect vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationInstance<T> {
    base_eigenvalue: T,
    base_eigenfunction: DVector<T>,
    restriction: RestrictionMap,
    restricted: DVector<T>,
    perturbed: FormSystem<T>,
    subspace: SubspaceSpec,
    defect: DVector<T>,
}

impl<T: Real> PerturbationInstance<T> {
    pub fn new(
        base: &BaseMode<T>,
        perturbed: FormSystem<T>,
        subspace: SubspaceSpec,
        defect: DVector<T>,
        restriction: RestrictionMap,
    ) -> Result<Self> {
        if !(base.eigenvalue > T::zero()) {
            return Err(Error::Validation(format!(
                "base eigenvalue must be positive, got {}",
                base.eigenvalue
            )));
        }
        let restricted = restriction.apply(&base.eigenfunction)?;
        let n = perturbed.dim();
        if restricted.len() != n {
            return Err(Error::Shape(format!(
                "restricted base eigenfunction has length {} but the perturbed space has {n} nodes",
                restricted.len()
            )));
        }
        if defect.len() != n {
            return Err(Error::Shape(format!(
                "defect of length {} for dimension {n}",
                defect.len()
            )));
        }
        let mask = subspace.constrained_mask(n)?;
        let scale = defect.amax();
        if let Some(i) = (0..n).find(|&i| mask[i] && defect[i].abs() > T::tol(1e-14) * scale) {
            return Err(Error::Validation(format!(
                "defect is nonzero on constrained index {i}; it must be represented on the subspace"
            )));
        }
        Ok(Self {
            base_eigenvalue: base.eigenvalue,
            base_eigenfunction: base.eigenfunction.clone(),
            restriction,
            restricted,
            perturbed,
            subspace,
            defect,
        })
    }

    pub fn base_eigenvalue(&self) -> T {
        self.base_eigenvalue
    }

    /// In the base space.
    pub fn base_eigenfunction(&self) -> &DVector<T> {
        &self.base_eigenfunction
    }

    /// The base eigenfunction carried into the perturbed space.
    pub fn restricted_base(&self) -> &DVector<T> {
        &self.restricted
    }

    pub fn restriction(&self) -> &RestrictionMap {
        &self.restriction
    }

    pub fn perturbed(&self) -> &FormSystem<T> {
        &self.perturbed
    }

    pub fn subspace(&self) -> &SubspaceSpec {
        &self.subspace
    }

    pub fn defect(&self) -> &DVector<T> {
        &self.defect
    }

    /// `L(u) = uᵀℓ`.
    pub fn defect_value(&self, u: &DVector<T>) -> T {
        self.defect.dot(u)
    }

    /// Relative residual of `uᵀAφ₀ = λ₀ uᵀMφ₀ + uᵀℓ` over the basis vectors
    /// of the subspace, scaled by the magnitude of the terms involved. For an
    /// analytic defect this is also its discrepancy from the generic one.
    pub fn consistency_residual(&self) -> T {
        let (raw, scale) = raw_defect_with_scale(&self.perturbed, &self.restricted, self.base_eigenvalue);
        let mask = self
            .subspace
            .constrained_mask(self.perturbed.dim())
            .unwrap_or_else(|_| vec![false; self.perturbed.dim()]);
        let mut worst = T::zero();
        let mut norm = T::zero();
        for i in 0..raw.len() {
            if mask[i] {
                continue;
            }
            worst = worst.max((raw[i] - self.defect[i]).abs());
            norm = norm.max(scale[i] + self.defect[i].abs());
        }
        if norm > T::zero() {
            worst / norm
        } else {
            worst
        }
    }
}

/// Generic `ℓ = A φ₀ - λ₀ M φ₀` (restricted `φ₀`), zeroed on constrained
/// indices.
pub fn defect_functional<T: Real>(
    base: &BaseMode<T>,
    perturbed: &FormSystem<T>,
    subspace: &SubspaceSpec,
    restriction: &RestrictionMap,
) -> Result<DVector<T>> {
    let phi = restriction.apply(&base.eigenfunction)?;
    if phi.len() != perturbed.dim() {
        return Err(Error::Shape(format!(
            "restricted base eigenfunction has length {} but the perturbed space has {} nodes",
            phi.len(),
            perturbed.dim()
        )));
    }
    let (raw, _) = raw_defect_with_scale(perturbed, &phi, base.eigenvalue);
    subspace.project(&raw)
}

fn raw_defect_with_scale<T: Real>(form: &FormSystem<T>, phi: &DVector<T>, lambda: T) -> (DVector<T>, DVector<T>) {
    let a_phi = form.apply(phi);
    let m_phi = form.space().apply_mass(phi);
    let raw = &a_phi - &m_phi * lambda;
    let abs_phi = phi.abs();
    let scale = form.stiffness().abs_mul_vec(&abs_phi) + m_phi.abs() * lambda.abs();
    (raw, scale)
}
