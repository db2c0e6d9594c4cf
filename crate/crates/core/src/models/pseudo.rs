use std::f64::consts::PI;

use nalgebra::DVector;
use serde::Serialize;

use super::{PseudoMask, PseudoSpec, SymbolKind};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::spectral::{CsrMatrix, DiscreteSpace, FormSystem};

/// A family of Fourier multipliers `f(ε, ξ)` on the integer frequency
/// lattice, with its ε-derivative at zero.
pub trait SymbolFamily<T: Real>: Send + Sync {
    fn value(&self, eps: T, xi: i64) -> T;
    fn derivative_at_zero(&self, xi: i64) -> T;
}

/// `f_ε(ξ) = 1 + |2πξ|^{2-2ε}`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FractionalSymbol;

impl<T: Real> SymbolFamily<T> for FractionalSymbol {
    fn value(&self, eps: T, xi: i64) -> T {
        if xi == 0 {
            return T::one();
        }
        let w = T::lit(2.0 * PI * xi.unsigned_abs() as f64);
        T::one() + w.powf(T::lit(2.0) - T::lit(2.0) * eps)
    }

    fn derivative_at_zero(&self, xi: i64) -> T {
        if xi == 0 {
            return T::zero();
        }
        let w = T::lit(2.0 * PI * xi.unsigned_abs() as f64);
        -T::lit(2.0) * w.ln() * w * w
    }
}

/// The unperturbed fractional symbol for every ε.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FrozenSymbol;

impl<T: Real> SymbolFamily<T> for FrozenSymbol {
    fn value(&self, _eps: T, xi: i64) -> T {
        <FractionalSymbol as SymbolFamily<T>>::value(&FractionalSymbol, T::zero(), xi)
    }

    fn derivative_at_zero(&self, _xi: i64) -> T {
        T::zero()
    }
}

/// Symbol given by a table over `|ξ| = 0, 1, …`, independent of ε.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedSymbol(pub Vec<f64>);

impl<T: Real> SymbolFamily<T> for TabulatedSymbol {
    fn value(&self, _eps: T, xi: i64) -> T {
        let k = (xi.unsigned_abs() as usize).min(self.0.len().saturating_sub(1));
        T::lit(self.0[k])
    }

    fn derivative_at_zero(&self, _xi: i64) -> T {
        T::zero()
    }
}

pub(crate) fn family<T: Real>(kind: &SymbolKind) -> Box<dyn SymbolFamily<T>> {
    match kind {
        SymbolKind::Fractional => Box::new(FractionalSymbol),
        SymbolKind::Frozen => Box::new(FrozenSymbol),
    }
}

/// Centered frequencies `-M/2, …, M/2 - 1`.
pub fn frequencies(m: usize) -> Vec<i64> {
    let half = (m / 2) as i64;
    (-half..m as i64 - half).collect()
}

/// Constants `C₁ = min f(ε,ξ)/f(1,ξ)` and `C₀ = max f(ε,ξ)/f(0,ξ)` over the
/// lattice, so that `C₁ f(1,·) ≤ f(ε,·) ≤ C₀ f(0,·)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SymbolDominance {
    pub c0: f64,
    pub c1: f64,
    pub min_value: f64,
}

pub fn dominance<T: Real>(f: &dyn SymbolFamily<T>, lattice: usize, eps: T) -> SymbolDominance {
    let mut c0 = f64::NEG_INFINITY;
    let mut c1 = f64::INFINITY;
    let mut min_value = f64::INFINITY;
    for xi in frequencies(lattice) {
        let v = f.value(eps, xi).as_f64();
        c0 = c0.max(v / f.value(T::zero(), xi).as_f64());
        c1 = c1.min(v / f.value(T::one(), xi).as_f64());
        min_value = min_value.min(v);
    }
    SymbolDominance { c0, c1, min_value }
}

/// Checks evenness in ξ and the lower bound `f ≥ 1` (strict away from 0).
pub fn check_symbol<T: Real>(f: &dyn SymbolFamily<T>, lattice: usize, eps: T) -> Result<()> {
    let half = (lattice / 2) as i64;
    for xi in 1..half {
        let (a, b) = (f.value(eps, xi), f.value(eps, -xi));
        if (a - b).abs() > T::tol(1e-14) * a.abs().max(b.abs()).max(T::one()) {
            return Err(Error::Validation(format!(
                "symbol is not even: f({xi}) = {a} but f(-{xi}) = {b}"
            )));
        }
    }
    for xi in frequencies(lattice) {
        let v = f.value(eps, xi);
        if !v.is_finite_value() || v < T::one() || (xi != 0 && v <= T::one()) {
            return Err(Error::Validation(format!(
                "symbol value {v} at ξ = {xi} violates f > 1"
            )));
        }
    }
    Ok(())
}

/// Real symmetric circulant `F* diag(g) F` (unitary transform) restricted
/// to `mask`.
pub fn circulant_on_mask<T: Real>(lattice: usize, mask: &[usize], g: impl Fn(i64) -> T) -> Result<CsrMatrix<T>> {
    let freqs = frequencies(lattice);
    let values: Vec<T> = freqs.iter().map(|&xi| g(xi)).collect();
    let m = T::from_count(lattice);
    let c: Vec<T> = (0..=lattice / 2)
        .map(|d| {
            freqs.iter().zip(&values).fold(T::zero(), |acc, (&xi, &v)| {
                let phase = 2.0 * PI * ((xi * d as i64).rem_euclid(lattice as i64)) as f64 / lattice as f64;
                acc + v * T::lit(phase.cos())
            }) / m
        })
        .collect();
    let k = mask.len();
    let mut trip = Vec::with_capacity(k * k);
    for (r, &i) in mask.iter().enumerate() {
        for (s, &j) in mask.iter().enumerate() {
            let d = i.abs_diff(j);
            let d = d.min(lattice - d);
            trip.push((r, s, c[d]));
        }
    }
    CsrMatrix::from_triplets(k, k, &trip)
}

/// Operator of `f(ε, ·)` on the masked lattice, unit mass.
pub fn pseudo_operator<T: Real>(
    lattice: usize,
    mask: &[usize],
    f: &dyn SymbolFamily<T>,
    eps: T,
) -> Result<FormSystem<T>> {
    check_lattice(lattice, mask)?;
    check_symbol(f, lattice, eps)?;
    let a = circulant_on_mask(lattice, mask, |xi| f.value(eps, xi))?;
    let coords = mask
        .iter()
        .map(|&i| [T::from_count(i) / T::from_count(lattice), T::zero(), T::zero()])
        .collect();
    FormSystem::new(DiscreteSpace::unit(mask.len())?.with_coords(coords)?, a)
}

pub(crate) fn check_lattice(lattice: usize, mask: &[usize]) -> Result<()> {
    if lattice < 2 || !lattice.is_power_of_two() {
        return Err(Error::Validation(format!(
            "lattice size {lattice} must be a power of two"
        )));
    }
    if mask.is_empty() {
        return Err(Error::Validation("mask is empty".into()));
    }
    if mask.windows(2).any(|w| w[0] >= w[1]) || mask[mask.len() - 1] >= lattice {
        return Err(Error::Validation(
            "mask must list distinct lattice nodes in increasing order".into(),
        ));
    }
    Ok(())
}

pub(crate) fn mask_nodes(spec: &PseudoSpec) -> Vec<usize> {
    match spec.mask {
        PseudoMask::LeftHalf => (0..spec.lattice / 2).collect(),
        PseudoMask::Range { start, len } => (start..start + len).collect(),
    }
}

/// `Σ_ξ g(ξ) |φ̂(ξ)|²` for `φ` zero-extended from the mask, unitary DFT.
pub fn spectral_quadrature<T: Real>(lattice: usize, mask: &[usize], phi: &DVector<T>, g: impl Fn(i64) -> T) -> T {
    let norm = T::from_count(lattice).sqrt();
    let mut total = T::zero();
    for xi in frequencies(lattice) {
        let (mut re, mut im) = (T::zero(), T::zero());
        for (r, &j) in mask.iter().enumerate() {
            let phase = -2.0 * PI * ((xi * j as i64).rem_euclid(lattice as i64)) as f64 / lattice as f64;
            re += phi[r] * T::lit(phase.cos());
            im += phi[r] * T::lit(phase.sin());
        }
        re /= norm;
        im /= norm;
        total += g(xi) * (re * re + im * im);
    }
    total
}
