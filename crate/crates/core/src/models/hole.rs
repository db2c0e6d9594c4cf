use nalgebra::DVector;

use super::HoleSpec;
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::spectral::{CsrMatrix, DiscreteSpace, FormSystem};

/// Interior nodes of the unit square (Dirichlet values eliminated).
pub(crate) struct InteriorGrid {
    pub nodes: usize,
}

impl InteriorGrid {
    pub fn side(&self) -> usize {
        self.nodes - 2
    }

    pub fn h(&self) -> f64 {
        1.0 / (self.nodes - 1) as f64
    }

    pub fn len(&self) -> usize {
        self.side() * self.side()
    }

    pub fn coords(&self, idx: usize) -> [f64; 2] {
        let s = self.side();
        let h = self.h();
        [((idx % s) + 1) as f64 * h, ((idx / s) + 1) as f64 * h]
    }
}

/// Five-point Dirichlet Laplacian plus identity, lumped mass `h²`.
pub(crate) fn assemble<T: Real>(spec: &HoleSpec) -> Result<FormSystem<T>> {
    let g = InteriorGrid { nodes: spec.nodes };
    let s = g.side();
    let n = g.len();
    let h = g.h();
    let mut trip = Vec::with_capacity(5 * n);
    for idx in 0..n {
        let (i, j) = (idx % s, idx / s);
        trip.push((idx, idx, T::lit(4.0 + h * h)));
        if i + 1 < s {
            trip.push((idx, idx + 1, -T::one()));
            trip.push((idx + 1, idx, -T::one()));
        }
        if j + 1 < s {
            trip.push((idx, idx + s, -T::one()));
            trip.push((idx + s, idx, -T::one()));
        }
    }
    let a = CsrMatrix::from_triplets(n, n, &trip)?;
    let mass = DVector::from_element(n, T::lit(h * h));
    let coords = (0..n)
        .map(|i| {
            let c = g.coords(i);
            [T::lit(c[0]), T::lit(c[1]), T::zero()]
        })
        .collect();
    FormSystem::new(DiscreteSpace::new(mass)?.with_coords(coords)?, a)
}

pub(crate) fn radius(spec: &HoleSpec, eps: f64) -> f64 {
    spec.radius_scale * eps
}

/// Interior nodes within the closed ball of radius `r(ε)`.
pub(crate) fn hole_nodes(spec: &HoleSpec, eps: f64) -> Result<Vec<usize>> {
    if eps < 0.0 || !eps.is_finite() {
        return Err(Error::Validation(format!(
            "hole parameter must be nonnegative, got {eps}"
        )));
    }
    if eps == 0.0 {
        return Ok(Vec::new());
    }
    let r = radius(spec, eps);
    let [cx, cy] = spec.center;
    let clearance = cx.min(1.0 - cx).min(cy).min(1.0 - cy);
    if r >= clearance {
        return Err(Error::Validation(format!(
            "hole of radius {r} at ({cx}, {cy}) touches the boundary (clearance {clearance})"
        )));
    }
    let g = InteriorGrid { nodes: spec.nodes };
    let tie = 1e-12 * g.h();
    let nodes: Vec<usize> = (0..g.len())
        .filter(|&i| {
            let c = g.coords(i);
            ((c[0] - cx).powi(2) + (c[1] - cy).powi(2)).sqrt() <= r + tie
        })
        .collect();
    if nodes.is_empty() {
        return Err(Error::Validation(format!(
            "hole of radius {r} contains no grid node at ε = {eps}"
        )));
    }
    Ok(nodes)
}

/// Hole mask over the interior grid as a plain-text table.
pub(crate) fn mask_table(spec: &HoleSpec, eps: f64) -> Result<String> {
    let hole = hole_nodes(spec, eps)?;
    let g = InteriorGrid { nodes: spec.nodes };
    let mut inside = vec![false; g.len()];
    for i in hole {
        inside[i] = true;
    }
    let mut s = String::from("index,x,y,in_hole\n");
    for (i, &flag) in inside.iter().enumerate() {
        let c = g.coords(i);
        s.push_str(&format!("{i},{},{},{}\n", c[0], c[1], u8::from(flag)));
    }
    Ok(s)
}
