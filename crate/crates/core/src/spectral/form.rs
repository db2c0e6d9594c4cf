use nalgebra::DVector;

use super::sparse::{CsrMatrix, EnvelopeCholesky};
use super::subspace::SubspaceSpec;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Degrees of freedom with their quadrature (mass) weights.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteSpace<T> {
    mass: DVector<T>,
    coords: Option<Vec<[T; 3]>>,
}

impl<T: Real> DiscreteSpace<T> {
    pub fn new(mass: DVector<T>) -> Result<Self> {
        if mass.is_empty() {
            return Err(Error::Validation("discrete space needs at least one node".into()));
        }
        if let Some(i) = mass.iter().position(|&w| !(w > T::zero()) || !w.is_finite_value()) {
            return Err(Error::Validation(format!(
                "mass weight {i} is not strictly positive ({})",
                mass[i]
            )));
        }
        Ok(Self { mass, coords: None })
    }

    pub fn unit(dim: usize) -> Result<Self> {
        Self::new(DVector::from_element(dim, T::one()))
    }

    pub fn with_coords(mut self, coords: Vec<[T; 3]>) -> Result<Self> {
        if coords.len() != self.dim() {
            return Err(Error::Shape(format!(
                "{} coordinates for {} nodes",
                coords.len(),
                self.dim()
            )));
        }
        self.coords = Some(coords);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.mass.len()
    }

    pub fn mass(&self) -> &DVector<T> {
        &self.mass
    }

    pub fn coords(&self) -> Option<&[[T; 3]]> {
        self.coords.as_deref()
    }

    /// `(u, v)` in the mass inner product.
    pub fn inner(&self, u: &DVector<T>, v: &DVector<T>) -> T {
        u.iter()
            .zip(v.iter())
            .zip(self.mass.iter())
            .fold(T::zero(), |acc, ((&a, &b), &w)| acc + a * b * w)
    }

    pub fn norm_squared(&self, u: &DVector<T>) -> T {
        self.inner(u, u)
    }

    pub fn norm(&self, u: &DVector<T>) -> T {
        self.norm_squared(u).sqrt()
    }

    pub fn apply_mass(&self, u: &DVector<T>) -> DVector<T> {
        u.component_mul(&self.mass)
    }

    /// Restriction to the listed nodes (sorted, distinct).
    pub fn select(&self, keep: &[usize]) -> Self {
        Self {
            mass: DVector::from_iterator(keep.len(), keep.iter().map(|&i| self.mass[i])),
            coords: self.coords.as_ref().map(|c| keep.iter().map(|&i| c[i]).collect()),
        }
    }

    /// Node table for plotting: index, coordinates, mass weight.
    pub fn to_table(&self) -> String {
        let mut s = String::from("index,x,y,z,mass\n");
        for i in 0..self.dim() {
            let c = self.coords.as_ref().map(|c| c[i]).unwrap_or([T::zero(); 3]);
            s.push_str(&format!(
                "{i},{},{},{},{}\n",
                c[0].as_f64(),
                c[1].as_f64(),
                c[2].as_f64(),
                self.mass[i].as_f64()
            ));
        }
        s
    }
}

/// A symmetric positive bilinear form `E(u, v) = uᵀ A v` over a
/// [`DiscreteSpace`] with diagonal mass matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FormSystem<T> {
    space: DiscreteSpace<T>,
    stiffness: CsrMatrix<T>,
    symmetry_tol: T,
}

impl<T: Real> FormSystem<T> {
    /// Validates shape and symmetry with the default tolerance
    /// `1e-12 * max|A|`.
    pub fn new(space: DiscreteSpace<T>, stiffness: CsrMatrix<T>) -> Result<Self> {
        let tol = T::tol(1e-12) * stiffness.max_abs();
        Self::with_symmetry_tol(space, stiffness, tol)
    }

    pub fn with_symmetry_tol(space: DiscreteSpace<T>, stiffness: CsrMatrix<T>, symmetry_tol: T) -> Result<Self> {
        let n = space.dim();
        if stiffness.nrows() != n || stiffness.ncols() != n {
            return Err(Error::Shape(format!(
                "stiffness is {}x{} but the space has {n} nodes",
                stiffness.nrows(),
                stiffness.ncols()
            )));
        }
        if symmetry_tol < T::zero() {
            return Err(Error::Validation("symmetry tolerance must be nonnegative".into()));
        }
        let asym = stiffness.max_asymmetry();
        if asym > symmetry_tol {
            return Err(Error::Validation(format!(
                "stiffness is not symmetric: max |A - Aᵀ| = {:e} > {:e}",
                asym.as_f64(),
                symmetry_tol.as_f64()
            )));
        }
        if stiffness.triplets().any(|(_, _, v)| !v.is_finite_value()) {
            return Err(Error::Validation("stiffness has non-finite entries".into()));
        }
        Ok(Self {
            space,
            stiffness,
            symmetry_tol,
        })
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn space(&self) -> &DiscreteSpace<T> {
        &self.space
    }

    pub fn mass(&self) -> &DVector<T> {
        self.space.mass()
    }

    pub fn stiffness(&self) -> &CsrMatrix<T> {
        &self.stiffness
    }

    pub fn symmetry_tol(&self) -> T {
        self.symmetry_tol
    }

    pub fn energy(&self, u: &DVector<T>) -> T {
        self.stiffness.bilinear(u, u)
    }

    pub fn energy_between(&self, u: &DVector<T>, v: &DVector<T>) -> T {
        self.stiffness.bilinear(u, v)
    }

    pub fn apply(&self, u: &DVector<T>) -> DVector<T> {
        self.stiffness.mul_vec(u)
    }

    pub fn inner(&self, u: &DVector<T>, v: &DVector<T>) -> T {
        self.space.inner(u, v)
    }

    pub fn mass_norm(&self, u: &DVector<T>) -> T {
        self.space.norm(u)
    }

    /// Checks positive definiteness on the free indices of `sub` by an
    /// attempted Cholesky factorization with shift `1e-12 * max|A|`.
    pub fn check_positive(&self, sub: &SubspaceSpec) -> Result<()> {
        let free = sub.free_indices(self.dim())?;
        let a = self.stiffness.principal_submatrix(&free);
        let shift = T::tol(1e-12) * a.max_abs().max(T::one());
        EnvelopeCholesky::factor_shifted(&a, shift)
            .map(|_| ())
            .map_err(|e| Error::Validation(format!("stiffness is not positive on the subspace: {e}")))
    }

    /// Factorization of the stiffness restricted to the free indices.
    pub fn factor_on(&self, sub: &SubspaceSpec) -> Result<(Vec<usize>, EnvelopeCholesky<T>)> {
        let free = sub.free_indices(self.dim())?;
        let a = self.stiffness.principal_submatrix(&free);
        let chol = EnvelopeCholesky::factor(&a)?;
        Ok((free, chol))
    }
}
