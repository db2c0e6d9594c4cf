use std::f64::consts::PI;

use nalgebra::DVector;

use super::grid::Grid;
use super::{ConformalProfile, ConformalSpec};
use crate::error::Result;
use crate::scalar::Real;
use crate::spectral::{CsrMatrix, DiscreteSpace, FormSystem, SubspaceSpec};

pub(crate) fn grid(spec: &ConformalSpec) -> Grid {
    Grid::new(spec.dimension, spec.nodes)
}

impl ConformalProfile {
    pub fn value(&self, x: [f64; 3], dim: usize) -> f64 {
        match *self {
            ConformalProfile::Constant { value } => value,
            ConformalProfile::CosineBump { amplitude } => {
                amplitude * (0..dim).map(|a| (PI * (x[a] - 0.5)).cos()).product::<f64>()
            }
            ConformalProfile::OddSine { amplitude } => amplitude * (2.0 * PI * x[0]).sin(),
        }
    }

    pub fn sup_norm(&self) -> f64 {
        match *self {
            ConformalProfile::Constant { value } => value.abs(),
            ConformalProfile::CosineBump { amplitude } | ConformalProfile::OddSine { amplitude } => amplitude.abs(),
        }
    }
}

pub(crate) fn profile_values(spec: &ConformalSpec) -> Vec<f64> {
    let g = grid(spec);
    (0..g.len()).map(|i| spec.profile.value(g.coords(i), g.dim)).collect()
}

pub(crate) fn dirichlet(spec: &ConformalSpec) -> SubspaceSpec {
    SubspaceSpec::ZeroOnIndexSet(grid(spec).boundary_nodes())
}

/// `∫ e^{(n-2)εΨ} |∇u|²` with mass `e^{nεΨ}`; edge weights average the
/// nodal conformal factors.
pub(crate) fn assemble<T: Real>(spec: &ConformalSpec, eps: T) -> Result<FormSystem<T>> {
    let g = grid(spec);
    let n = g.len();
    let dim = g.dim as i32;
    let h = T::lit(g.h());
    let psi: Vec<T> = profile_values(spec).into_iter().map(T::lit).collect();
    let stiff_factor: Vec<T> = psi
        .iter()
        .map(|&p| (T::from_count(g.dim - 2) * eps * p).exp())
        .collect();
    let mass = DVector::from_iterator(
        n,
        psi.iter()
            .map(|&p| h.powi(dim) * (T::from_count(g.dim) * eps * p).exp()),
    );
    let hw = h.powi(dim - 2);
    let mut trip = Vec::with_capacity(2 * g.dim * n * 2);
    for (i, j, _) in g.edges() {
        let w = hw * (stiff_factor[i] + stiff_factor[j]) * T::lit(0.5);
        trip.push((i, i, w));
        trip.push((j, j, w));
        trip.push((i, j, -w));
        trip.push((j, i, -w));
    }
    let a = CsrMatrix::from_triplets(n, n, &trip)?;
    let coords = (0..n).map(|i| g.coords(i).map(T::lit)).collect();
    FormSystem::new(DiscreteSpace::new(mass)?.with_coords(coords)?, a)
}

/// `A'` and `M'`, the ε-derivatives at 0 of stiffness and mass.
pub(crate) fn derivative<T: Real>(spec: &ConformalSpec) -> Result<(CsrMatrix<T>, DVector<T>)> {
    let g = grid(spec);
    let n = g.len();
    let dim = g.dim as i32;
    let h = T::lit(g.h());
    let psi: Vec<T> = profile_values(spec).into_iter().map(T::lit).collect();
    let hw = h.powi(dim - 2) * T::from_count(g.dim - 2);
    let mut trip = Vec::new();
    for (i, j, _) in g.edges() {
        let w = hw * (psi[i] + psi[j]) * T::lit(0.5);
        trip.push((i, i, w));
        trip.push((j, j, w));
        trip.push((i, j, -w));
        trip.push((j, i, -w));
    }
    let a = CsrMatrix::from_triplets(n, n, &trip)?;
    let m = DVector::from_iterator(n, psi.iter().map(|&p| h.powi(dim) * T::from_count(g.dim) * p));
    Ok((a, m))
}
