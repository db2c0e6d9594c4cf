use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::form::FormSystem;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// The admissible subspace: either everything, or vectors vanishing on a
/// set of indices. The implied basis is the identity columns of the free
/// indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum SubspaceSpec {
    Full,
    ZeroOnIndexSet(Vec<usize>),
}

impl SubspaceSpec {
    pub fn validate(&self, dim: usize) -> Result<()> {
        if let SubspaceSpec::ZeroOnIndexSet(idx) = self {
            let mut seen = vec![false; dim];
            for &i in idx {
                if i >= dim {
                    return Err(Error::Constraint(format!(
                        "constrained index {i} out of range for dimension {dim}"
                    )));
                }
                if seen[i] {
                    return Err(Error::Constraint(format!("constrained index {i} repeated")));
                }
                seen[i] = true;
            }
        }
        Ok(())
    }

    pub fn constrained(&self) -> &[usize] {
        match self {
            SubspaceSpec::Full => &[],
            SubspaceSpec::ZeroOnIndexSet(idx) => idx,
        }
    }

    pub fn constrained_mask(&self, dim: usize) -> Result<Vec<bool>> {
        self.validate(dim)?;
        let mut mask = vec![false; dim];
        for &i in self.constrained() {
            mask[i] = true;
        }
        Ok(mask)
    }

    /// Sorted unconstrained indices; an empty result is an error.
    pub fn free_indices(&self, dim: usize) -> Result<Vec<usize>> {
        let free = self.free_indices_allow_empty(dim)?;
        if free.is_empty() {
            return Err(Error::EmptySubspace(dim));
        }
        Ok(free)
    }

    pub(crate) fn free_indices_allow_empty(&self, dim: usize) -> Result<Vec<usize>> {
        let mask = self.constrained_mask(dim)?;
        Ok((0..dim).filter(|&i| !mask[i]).collect())
    }

    /// Lifts coefficients on the free indices to the ambient space
    /// (zeros on constrained indices).
    pub fn embed<T: Real>(&self, y: &DVector<T>, dim: usize) -> Result<DVector<T>> {
        let free = self.free_indices_allow_empty(dim)?;
        if free.len() != y.len() {
            return Err(Error::Shape(format!(
                "{} coefficients for {} free indices",
                y.len(),
                free.len()
            )));
        }
        let mut x = DVector::zeros(dim);
        for (k, &i) in free.iter().enumerate() {
            x[i] = y[k];
        }
        Ok(x)
    }

    /// `Bᵀ x`: the entries of `x` on the free indices.
    pub fn extract<T: Real>(&self, x: &DVector<T>) -> Result<DVector<T>> {
        let free = self.free_indices_allow_empty(x.len())?;
        Ok(DVector::from_iterator(free.len(), free.iter().map(|&i| x[i])))
    }

    /// Zeroes the constrained entries of `x`.
    pub fn project<T: Real>(&self, x: &DVector<T>) -> Result<DVector<T>> {
        let mask = self.constrained_mask(x.len())?;
        Ok(DVector::from_iterator(
            x.len(),
            x.iter().zip(mask).map(|(&v, c)| if c { T::zero() } else { v }),
        ))
    }

    /// Whether `x` lies in the subspace up to `tol * max|x|`.
    pub fn contains<T: Real>(&self, x: &DVector<T>, tol: T) -> Result<bool> {
        let mask = self.constrained_mask(x.len())?;
        let scale = x.amax();
        Ok(x.iter().zip(mask).all(|(&v, c)| !c || v.abs() <= tol * scale))
    }

    /// Adds more constrained indices.
    pub fn with_additional(&self, extra: &[usize]) -> Self {
        let mut idx: Vec<usize> = self.constrained().to_vec();
        for &i in extra {
            if !idx.contains(&i) {
                idx.push(i);
            }
        }
        idx.sort_unstable();
        if idx.is_empty() {
            SubspaceSpec::Full
        } else {
            SubspaceSpec::ZeroOnIndexSet(idx)
        }
    }
}

/// Principal subsystem on the unconstrained indices.
pub fn restrict_to_subspace<T: Real>(form: &FormSystem<T>, sub: &SubspaceSpec) -> Result<FormSystem<T>> {
    if matches!(sub, SubspaceSpec::Full) {
        return Ok(form.clone());
    }
    let free = sub.free_indices(form.dim())?;
    let space = form.space().select(&free);
    let stiffness = form.stiffness().principal_submatrix(&free);
    FormSystem::with_symmetry_tol(space, stiffness, form.symmetry_tol())
}
