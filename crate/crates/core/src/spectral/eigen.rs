//! Generalized symmetric eigenproblems `A v = λ M v` with diagonal `M`.
//!
//! The problem is reduced to the standard symmetric problem for
//! `S = M^{-1/2} A M^{-1/2}`. Small systems go through a dense symmetric
//! eigensolver (the reference path); large sparse systems use block inverse
//! subspace iteration with Rayleigh-Ritz on an envelope Cholesky factor.

use std::cmp::Ordering;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::form::FormSystem;
use super::sparse::{CsrMatrix, EnvelopeCholesky};
use super::subspace::{restrict_to_subspace, SubspaceSpec};
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum EigenMethod {
    #[default]
    Auto,
    Dense,
    Iterative,
}

#[derive(Debug, Clone)]
pub struct EigenOptions<T> {
    pub method: EigenMethod,
    /// Relative residual bound `‖Av - λMv‖ ≤ tol (1 + |λ|) ‖v‖_M`.
    pub residual_tol: T,
    /// `Auto` uses the dense path up to this dimension.
    pub dense_threshold: usize,
    pub max_iterations: usize,
    pub seed: u64,
}

impl<T: Real> Default for EigenOptions<T> {
    fn default() -> Self {
        Self {
            method: EigenMethod::Auto,
            residual_tol: T::tol(1e-9),
            dense_threshold: 800,
            max_iterations: 2000,
            seed: 0x5eed_2024,
        }
    }
}

/// The `k` smallest eigenpairs, ascending, with mass-orthonormal vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSolution<T> {
    eigenvalues: Vec<T>,
    eigenvectors: DMatrix<T>,
    residuals: Vec<T>,
    residual_tol: T,
}

impl<T: Real> EigenSolution<T> {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn eigenvalues(&self) -> &[T] {
        &self.eigenvalues
    }

    pub fn eigenvalue(&self, i: usize) -> T {
        self.eigenvalues[i]
    }

    pub fn eigenvectors(&self) -> &DMatrix<T> {
        &self.eigenvectors
    }

    pub fn eigenvector(&self, i: usize) -> DVector<T> {
        self.eigenvectors.column(i).into_owned()
    }

    /// Residual norms `‖A v - λ M v‖_{M^{-1}}` per pair.
    pub fn residuals(&self) -> &[T] {
        &self.residuals
    }

    pub fn residual_tol(&self) -> T {
        self.residual_tol
    }

    /// Smallest relative distance from eigenvalue `i` to its computed
    /// neighbours. `None` if an upper neighbour would be needed but was not
    /// computed.
    pub fn relative_gap(&self, i: usize, dim: usize) -> Option<T> {
        let lam = self.eigenvalues[i];
        let scale = lam.abs().max(T::default_epsilon());
        let mut gap: Option<T> = None;
        if i > 0 {
            gap = Some((lam - self.eigenvalues[i - 1]).abs() / scale);
        }
        if i + 1 < self.len() {
            let g = (self.eigenvalues[i + 1] - lam).abs() / scale;
            gap = Some(gap.map_or(g, |x| x.min(g)));
        } else if self.len() < dim {
            return None;
        }
        Some(gap.unwrap_or_else(|| T::lit(f64::MAX)))
    }
}

pub fn solve_generalized_eigenpairs<T: Real>(form: &FormSystem<T>, k: usize) -> Result<EigenSolution<T>> {
    solve_generalized_eigenpairs_with(form, k, &EigenOptions::default())
}

pub fn solve_generalized_eigenpairs_with<T: Real>(
    form: &FormSystem<T>,
    k: usize,
    opts: &EigenOptions<T>,
) -> Result<EigenSolution<T>> {
    let n = form.dim();
    if k == 0 || k > n {
        return Err(Error::Validation(format!(
            "requested {k} eigenpairs of a {n}-dimensional problem"
        )));
    }
    form.check_positive(&SubspaceSpec::Full)?;
    let d = form.mass().map(|w| T::one() / w.sqrt());
    let s = form.stiffness().scale_symmetric(&d);
    let use_dense = match opts.method {
        EigenMethod::Dense => true,
        EigenMethod::Iterative => false,
        EigenMethod::Auto => n <= opts.dense_threshold,
    };
    let (values, y) = if use_dense || n <= 2 * block_size(k) {
        dense_standard(&s, k)?
    } else {
        subspace_iteration(&s, k, opts)?
    };
    let vectors = DMatrix::from_fn(n, k, |i, j| y[(i, j)] * d[i]);
    finalize(form, values, vectors, opts.residual_tol)
}

/// Eigenpairs of `form` restricted to `sub`, with eigenvectors lifted back to
/// the ambient space (zero on constrained indices).
pub fn solve_on_subspace<T: Real>(
    form: &FormSystem<T>,
    sub: &SubspaceSpec,
    k: usize,
    opts: &EigenOptions<T>,
) -> Result<EigenSolution<T>> {
    let restricted = restrict_to_subspace(form, sub)?;
    let k = k.min(restricted.dim());
    let sol = solve_generalized_eigenpairs_with(&restricted, k, opts)?;
    if matches!(sub, SubspaceSpec::Full) {
        return Ok(sol);
    }
    let free = sub.free_indices(form.dim())?;
    let mut lifted = DMatrix::zeros(form.dim(), k);
    for (r, &i) in free.iter().enumerate() {
        for c in 0..k {
            lifted[(i, c)] = sol.eigenvectors[(r, c)];
        }
    }
    Ok(EigenSolution {
        eigenvectors: lifted,
        ..sol
    })
}

fn block_size(k: usize) -> usize {
    (2 * k).max(k + 8)
}

fn sorted_pairs<T: Real>(values: &DVector<T>) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap_or(Ordering::Equal));
    order
}

fn dense_standard<T: Real>(s: &CsrMatrix<T>, k: usize) -> Result<(Vec<T>, DMatrix<T>)> {
    let mut m = s.to_dense();
    // exact symmetry for the dense solver
    let mt = m.transpose();
    m = (m + mt) * T::lit(0.5);
    let eig = SymmetricEigen::try_new(m, T::default_epsilon(), 0)
        .ok_or_else(|| Error::solver("dense symmetric eigensolver did not converge", f64::NAN))?;
    let order = sorted_pairs(&eig.eigenvalues);
    let values = order[..k].iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(s.nrows(), k, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok((values, vectors))
}

fn subspace_iteration<T: Real>(s: &CsrMatrix<T>, k: usize, opts: &EigenOptions<T>) -> Result<(Vec<T>, DMatrix<T>)> {
    let n = s.nrows();
    let p = block_size(k).min(n);
    let shift = T::tol(1e-12) * s.max_abs().max(T::one());
    let chol = EnvelopeCholesky::factor_shifted(s, shift)
        .map_err(|e| Error::Validation(format!("stiffness is not positive semidefinite: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut x = DMatrix::from_fn(n, p, |_, _| T::lit(rng.random_range(-1.0..1.0)));
    let mut best = f64::INFINITY;
    let mut since_improved = 0usize;
    let mut last_ratio = f64::INFINITY;
    for _ in 0..opts.max_iterations {
        let y = chol.solve_dense(&x);
        let q = y.qr().q();
        let sq = s.mul_dense(&q);
        let h = q.transpose() * &sq;
        let h = (&h + h.transpose()) * T::lit(0.5);
        let eig = SymmetricEigen::try_new(h, T::default_epsilon(), 0)
            .ok_or_else(|| Error::solver("Rayleigh-Ritz eigensolve failed", f64::NAN))?;
        let order = sorted_pairs(&eig.eigenvalues);
        let u = DMatrix::from_fn(p, p, |r, c| eig.eigenvectors[(r, order[c])]);
        x = &q * &u;
        let sx = &sq * &u;
        let mut ratio = 0.0f64;
        for (j, &o) in order.iter().enumerate().take(k) {
            let theta = eig.eigenvalues[o];
            let r = (sx.column(j) - x.column(j) * theta).norm();
            let allowed = opts.residual_tol * (T::one() + theta.abs());
            ratio = ratio.max((r / allowed).as_f64());
        }
        last_ratio = ratio;
        if ratio <= 1e-3 {
            break;
        }
        if ratio < 0.5 * best {
            best = ratio;
            since_improved = 0;
        } else {
            since_improved += 1;
            if since_improved >= 3 && ratio <= 1.0 {
                break;
            }
        }
    }
    if !(last_ratio <= 1.0) {
        return Err(Error::solver(
            "subspace iteration did not reach the residual tolerance",
            last_ratio,
        ));
    }
    let values = {
        let sx = s.mul_dense(&x);
        (0..k).map(|j| x.column(j).dot(&sx.column(j))).collect()
    };
    let vectors = x.columns(0, k).into_owned();
    Ok((values, vectors))
}

/// Sign convention, tie ordering, residual verification.
fn finalize<T: Real>(
    form: &FormSystem<T>,
    values: Vec<T>,
    mut vectors: DMatrix<T>,
    residual_tol: T,
) -> Result<EigenSolution<T>> {
    let n = form.dim();
    let k = values.len();
    for j in 0..k {
        let mut col = vectors.column_mut(j);
        let norm = form
            .mass()
            .iter()
            .zip(col.iter())
            .fold(T::zero(), |acc, (&w, &v)| acc + w * v * v)
            .sqrt();
        col /= norm;
        let vmax = col.amax();
        let cutoff = vmax * (T::one() - T::tol(1e-8));
        let lead = (0..n).find(|&i| col[i].abs() >= cutoff).unwrap_or(0);
        if col[lead] < T::zero() {
            col.neg_mut();
        }
    }
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| {
        let (la, lb) = (values[a], values[b]);
        let scale = T::one().max(la.abs()).max(lb.abs());
        if (la - lb).abs() <= T::tol(1e-12) * scale {
            lexicographic(&vectors, a, b)
        } else {
            la.partial_cmp(&lb).unwrap_or(Ordering::Equal)
        }
    });
    let values: Vec<T> = order.iter().map(|&i| values[i]).collect();
    let vectors = DMatrix::from_fn(n, k, |r, c| vectors[(r, order[c])]);

    let inv_sqrt_mass = form.mass().map(|w| T::one() / w.sqrt());
    let mut residuals = Vec::with_capacity(k);
    for (j, &lam) in values.iter().enumerate() {
        let v = vectors.column(j).into_owned();
        let r = form.apply(&v) - form.space().apply_mass(&v) * lam;
        let r = r.component_mul(&inv_sqrt_mass).norm();
        let allowed = residual_tol * (T::one() + lam.abs());
        if !(r <= allowed) {
            return Err(Error::solver(
                format!(
                    "eigenpair {j} (λ = {lam}) fails the residual bound {:e}",
                    allowed.as_f64()
                ),
                r.as_f64(),
            ));
        }
        residuals.push(r);
    }
    Ok(EigenSolution {
        eigenvalues: values,
        eigenvectors: vectors,
        residuals,
        residual_tol,
    })
}

fn lexicographic<T: Real>(v: &DMatrix<T>, a: usize, b: usize) -> Ordering {
    for i in 0..v.nrows() {
        match v[(i, a)].partial_cmp(&v[(i, b)]) {
            Some(Ordering::Equal) | None => continue,
            Some(o) => return o,
        }
    }
    Ordering::Equal
}
