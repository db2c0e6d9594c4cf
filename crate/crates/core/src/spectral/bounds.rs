use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use super::form::FormSystem;
use super::sparse::EnvelopeCholesky;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// `(E(Rw - μw) / E(w))^{1/2}` with `R = A⁻¹M`, an upper bound for the
/// distance from `mu` to the spectrum of `R`.
pub fn spectral_distance_bound<T: Real>(form: &FormSystem<T>, w: &DVector<T>, mu: T) -> Result<T> {
    if w.len() != form.dim() {
        return Err(Error::Shape(format!(
            "vector of length {} for dimension {}",
            w.len(),
            form.dim()
        )));
    }
    if w.iter().all(|&x| x == T::zero()) {
        return Err(Error::Domain("spectral distance bound needs a nonzero vector".into()));
    }
    let chol = EnvelopeCholesky::factor(form.stiffness())
        .map_err(|e| Error::solver(format!("stiffness is singular: {e}"), f64::NAN))?;
    let rw = chol.solve(&form.space().apply_mass(w));
    let diff = rw - w * mu;
    let num = form.energy(&diff).max(T::zero());
    let den = form.energy(w);
    if !(den > T::zero()) {
        return Err(Error::solver("vector has nonpositive energy", den.as_f64()));
    }
    Ok((num / den).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolventGapReport {
    /// Resolvent eigenvalues `μ = 1/λ`, descending.
    pub mu_first: Vec<f64>,
    pub mu_second: Vec<f64>,
    /// `|μ_{n,1} - μ_{n,2}|` per index.
    pub gaps: Vec<f64>,
    /// `‖R₁ - R₂‖` in the mass inner product.
    pub norm_bound: f64,
    pub max_gap: f64,
    pub pass: bool,
}

/// Compares resolvent eigenvalue gaps with the operator-norm distance of the
/// two resolvents. Dense; meant for moderate dimensions.
pub fn resolvent_gap_eigenvalue_bound<T: Real>(
    first: &FormSystem<T>,
    second: &FormSystem<T>,
) -> Result<ResolventGapReport> {
    if first.dim() != second.dim() {
        return Err(Error::Shape(format!(
            "dimensions {} and {} differ",
            first.dim(),
            second.dim()
        )));
    }
    let mass_scale = first.mass().amax();
    let mass_gap = (first.mass() - second.mass()).amax();
    if mass_gap > T::tol(1e-14) * mass_scale {
        return Err(Error::Shape("the two forms live on different discrete spaces".into()));
    }
    let sqrt_mass = first.mass().map(|w| w.sqrt());
    let r1 = scaled_resolvent(first, &sqrt_mass)?;
    let r2 = scaled_resolvent(second, &sqrt_mass)?;
    let mu_first = descending_eigenvalues(&r1)?;
    let mu_second = descending_eigenvalues(&r2)?;
    let diff = &r1 - &r2;
    let norm_bound = descending_eigenvalues(&diff)?
        .iter()
        .fold(0.0f64, |acc, &x| acc.max(x.abs()));
    let gaps: Vec<f64> = mu_first.iter().zip(&mu_second).map(|(a, b)| (a - b).abs()).collect();
    let max_gap = gaps.iter().copied().fold(0.0, f64::max);
    let mu_max = mu_first.iter().chain(&mu_second).copied().fold(0.0, f64::max);
    let slack = 1e-10 * norm_bound.max(mu_max);
    Ok(ResolventGapReport {
        pass: max_gap <= norm_bound + slack,
        mu_first,
        mu_second,
        gaps,
        norm_bound,
        max_gap,
    })
}

/// `M^{1/2} A⁻¹ M^{1/2}`, whose eigenvalues are those of `R = A⁻¹M`.
fn scaled_resolvent<T: Real>(form: &FormSystem<T>, sqrt_mass: &DVector<T>) -> Result<DMatrix<T>> {
    let a = form.stiffness().to_dense();
    let chol = Cholesky::new(a).ok_or_else(|| Error::solver("stiffness is not positive definite", f64::NAN))?;
    let n = form.dim();
    let rhs = DMatrix::from_fn(n, n, |i, j| if i == j { sqrt_mass[i] } else { T::zero() });
    let x = chol.solve(&rhs);
    let mut r = DMatrix::from_fn(n, n, |i, j| sqrt_mass[i] * x[(i, j)]);
    let rt = r.transpose();
    r = (r + rt) * T::lit(0.5);
    Ok(r)
}

fn descending_eigenvalues<T: Real>(m: &DMatrix<T>) -> Result<Vec<f64>> {
    let eig = SymmetricEigen::try_new(m.clone(), T::default_epsilon(), 0)
        .ok_or_else(|| Error::solver("dense symmetric eigensolver did not converge", f64::NAN))?;
    let mut v: Vec<f64> = eig.eigenvalues.iter().map(|x| x.as_f64()).collect();
    v.sort_by(|a, b| b.total_cmp(a));
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{CsrMatrix, DiscreteSpace};

    fn diag(d: &[f64]) -> FormSystem<f64> {
        FormSystem::new(
            DiscreteSpace::unit(d.len()).unwrap(),
            CsrMatrix::from_diagonal(&DVector::from_column_slice(d)),
        )
        .unwrap()
    }

    #[test]
    fn exact_eigenvector_has_zero_bound() {
        let b = spectral_distance_bound(&diag(&[1.0, 2.0]), &DVector::from_vec(vec![1.0, 0.0]), 1.0).unwrap();
        assert_eq!(b, 0.0);
    }

    #[test]
    fn two_by_two_mixture() {
        let b = spectral_distance_bound(&diag(&[1.0, 2.0]), &DVector::from_vec(vec![1.0, 1.0]), 0.75).unwrap();
        assert!((b - 0.25).abs() < 1e-15);
    }

    #[test]
    fn zero_vector_is_a_domain_error() {
        assert!(matches!(
            spectral_distance_bound(&diag(&[1.0, 2.0]), &DVector::zeros(2), 1.0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn singular_stiffness_is_a_solver_error() {
        assert!(matches!(
            spectral_distance_bound(&diag(&[1.0, 0.0]), &DVector::from_vec(vec![1.0, 1.0]), 1.0),
            Err(Error::Solver { .. })
        ));
    }

    #[test]
    fn identical_forms_have_zero_gaps() {
        let r = resolvent_gap_eigenvalue_bound(&diag(&[1.0, 3.0]), &diag(&[1.0, 3.0])).unwrap();
        assert!(r.pass);
        assert_eq!(r.max_gap, 0.0);
        assert_eq!(r.norm_bound, 0.0);
    }

    #[test]
    fn scaled_diagonal_pair() {
        let r = resolvent_gap_eigenvalue_bound(&diag(&[1.0, 2.0]), &diag(&[1.1, 2.2])).unwrap();
        let expected = 1.0 - 1.0 / 1.1;
        assert!((r.max_gap - expected).abs() < 1e-14);
        assert!((r.norm_bound - expected).abs() < 1e-14);
        assert!(r.pass);
    }

    #[test]
    fn mismatched_dimensions() {
        assert!(matches!(
            resolvent_gap_eigenvalue_bound(&diag(&[1.0]), &diag(&[1.0, 2.0])),
            Err(Error::Shape(_))
        ));
    }
}
