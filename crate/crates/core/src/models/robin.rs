use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::grid::Grid;
use super::{RobinDomain, RobinSpec};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::spectral::{CsrMatrix, DiscreteSpace, EnvelopeCholesky, FormSystem};

pub(crate) fn grid(spec: &RobinSpec) -> Grid {
    match spec.domain {
        RobinDomain::Interval => Grid::new(1, spec.nodes),
        RobinDomain::Square => Grid::new(2, spec.nodes),
    }
}

/// Trapezoid weights of the boundary measure on the nodes.
pub(crate) fn boundary_weights<T: Real>(spec: &RobinSpec) -> DVector<T> {
    let g = grid(spec);
    let h = g.h();
    DVector::from_iterator(
        g.len(),
        (0..g.len()).map(|i| {
            if !g.is_boundary(i) {
                T::zero()
            } else if g.dim == 1 {
                T::one()
            } else {
                T::lit(h)
            }
        }),
    )
}

/// `∫∇u·∇v + uv + ε∫_∂Ω uv`, lumped mass.
pub(crate) fn assemble<T: Real>(spec: &RobinSpec, eps: T) -> Result<FormSystem<T>> {
    let g = grid(spec);
    let h = g.h();
    let n = g.len();
    let vol = DVector::from_iterator(n, (0..n).map(|i| T::lit(g.lumped_volume(i))));
    let bw = boundary_weights::<T>(spec);
    let mut trip = Vec::with_capacity(5 * n);
    for (i, j, faces) in g.edges() {
        let w = T::lit(h.powi(g.dim as i32 - 2) / f64::powi(2.0, faces as i32));
        trip.push((i, i, w));
        trip.push((j, j, w));
        trip.push((i, j, -w));
        trip.push((j, i, -w));
    }
    for i in 0..n {
        trip.push((i, i, vol[i] + eps * bw[i]));
    }
    let a = CsrMatrix::from_triplets(n, n, &trip)?;
    let coords = (0..n).map(|i| g.coords(i).map(T::lit)).collect();
    FormSystem::new(DiscreteSpace::new(vol)?.with_coords(coords)?, a)
}

/// Largest `∫_∂Ω u² / E₀(u)` over the discrete space, computed exactly from
/// the boundary block of `A₀⁻¹`.
pub(crate) fn trace_constant<T: Real>(spec: &RobinSpec) -> Result<T> {
    let base = assemble::<T>(spec, T::zero())?;
    let bw = boundary_weights::<T>(spec);
    let bnodes: Vec<usize> = (0..bw.len()).filter(|&i| bw[i] > T::zero()).collect();
    let chol = EnvelopeCholesky::factor(base.stiffness())?;
    let nb = bnodes.len();
    let mut g = DMatrix::zeros(nb, nb);
    for (c, &j) in bnodes.iter().enumerate() {
        let mut e = DVector::zeros(base.dim());
        e[j] = T::one();
        let col = chol.solve(&e);
        for (r, &i) in bnodes.iter().enumerate() {
            g[(r, c)] = bw[i].sqrt() * col[i] * bw[j].sqrt();
        }
    }
    let gt = g.transpose();
    let g = (g + gt) * T::lit(0.5);
    let eig = SymmetricEigen::try_new(g, T::default_epsilon(), 0)
        .ok_or_else(|| Error::solver("trace constant eigensolve failed", f64::NAN))?;
    Ok(eig.eigenvalues.max())
}
