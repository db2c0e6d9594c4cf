//! Randomized property suites over small dense systems.

use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::perturbation::{
    defect_functional, solve_corrector, solve_corrector_ordered, BaseMode, PerturbationInstance, RestrictionMap,
};
use crate::spectral::{
    resolvent_gap_eigenvalue_bound, solve_generalized_eigenpairs, solve_on_subspace, spectral_distance_bound,
    CsrMatrix, DiscreteSpace, EigenOptions, FormSystem, SubspaceSpec,
};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyOutcome {
    pub name: &'static str,
    pub instances: usize,
    pub failures: usize,
    /// Worst observed violation measure (≤ 0 or ≤ tolerance when passing).
    pub worst: f64,
    #[serde(skip)]
    pub elapsed: Duration,
}

impl PropertyOutcome {
    pub fn pass(&self) -> bool {
        self.failures == 0
    }
}

pub const SUITES: [&str; 9] = [
    "poincare",
    "eigen-residual",
    "constraint-monotonicity",
    "resolvent-gap",
    "distance-bound",
    "consistency",
    "duality",
    "corrector-optimality",
    "corrector-uniqueness",
];

/// Runs every suite with `instances` random systems each.
pub fn run_property_suites(seed: u64, instances: usize) -> Result<Vec<PropertyOutcome>> {
    SUITES
        .iter()
        .enumerate()
        .map(|(k, name)| run_suite(name, seed.wrapping_add(k as u64), instances))
        .collect()
}

pub fn run_suite(name: &'static str, seed: u64, instances: usize) -> Result<PropertyOutcome> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..instances {
        let v = match name {
            "poincare" => poincare(&mut rng)?,
            "eigen-residual" => eigen_residual(&mut rng)?,
            "constraint-monotonicity" => constraint_monotonicity(&mut rng)?,
            "resolvent-gap" => resolvent_gap(&mut rng)?,
            "distance-bound" => distance_bound(&mut rng)?,
            "consistency" => consistency(&mut rng)?,
            "duality" => duality(&mut rng)?,
            "corrector-optimality" => corrector_optimality(&mut rng)?,
            "corrector-uniqueness" => corrector_uniqueness(&mut rng)?,
            other => {
                return Err(crate::Error::Validation(format!("unknown property suite {other}")));
            }
        };
        worst = worst.max(v);
        if v > 0.0 {
            failures += 1;
        }
    }
    Ok(PropertyOutcome {
        name,
        instances,
        failures,
        worst,
        elapsed: start.elapsed(),
    })
}

/// Random symmetric positive definite form of dimension 4..=40 with random
/// positive mass.
pub fn random_form(rng: &mut ChaCha8Rng) -> FormSystem<f64> {
    let n = rng.random_range(4..=40);
    random_form_of(rng, n)
}

fn random_form_of(rng: &mut ChaCha8Rng, n: usize) -> FormSystem<f64> {
    let b = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    let mut a = b.transpose() * &b / n as f64 + DMatrix::identity(n, n) * rng.random_range(0.05..1.0);
    let at = a.transpose();
    a = (a + at) * 0.5;
    let mass = DVector::from_fn(n, |_, _| rng.random_range(0.5..2.0));
    FormSystem::new(DiscreteSpace::new(mass).unwrap(), CsrMatrix::from_dense(&a)).unwrap()
}

fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0))
}

fn random_constraints(rng: &mut ChaCha8Rng, n: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    let k = rng.random_range(1..n);
    let mut c = idx[..k].to_vec();
    c.sort_unstable();
    c
}

/// `λ₁‖w‖² ≤ wᵀAw` for 100 random vectors.
fn poincare(rng: &mut ChaCha8Rng) -> Result<f64> {
    let form = random_form(rng);
    let l1 = solve_generalized_eigenpairs(&form, 1)?.eigenvalue(0);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..100 {
        let w = random_vector(rng, form.dim());
        let lhs = l1 * form.space().norm_squared(&w);
        let rhs = form.energy(&w);
        worst = worst.max(lhs - rhs - 1e-12 * rhs.abs());
    }
    Ok(worst)
}

fn eigen_residual(rng: &mut ChaCha8Rng) -> Result<f64> {
    let form = random_form(rng);
    let k = form.dim().min(8);
    let sol = solve_generalized_eigenpairs(&form, k)?;
    let mut worst = f64::NEG_INFINITY;
    for j in 0..k {
        let bound = sol.residual_tol() * (1.0 + sol.eigenvalue(j).abs());
        worst = worst.max(sol.residuals()[j] - bound);
        for i in 0..=j {
            let g = form.inner(&sol.eigenvector(i), &sol.eigenvector(j));
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g - target).abs() - 1e-10);
        }
        worst = worst.max(-sol.eigenvalue(j));
    }
    Ok(worst)
}

/// Adding constraints never lowers the smallest eigenvalue.
fn constraint_monotonicity(rng: &mut ChaCha8Rng) -> Result<f64> {
    let form = random_form(rng);
    let n = form.dim();
    let opts = EigenOptions::default();
    let c = random_constraints(rng, n);
    let small = SubspaceSpec::ZeroOnIndexSet(c[..c.len().div_ceil(2)].to_vec());
    let large = SubspaceSpec::ZeroOnIndexSet(c);
    let l_full = solve_on_subspace(&form, &SubspaceSpec::Full, 1, &opts)?.eigenvalue(0);
    let l_small = solve_on_subspace(&form, &small, 1, &opts)?.eigenvalue(0);
    let l_large = solve_on_subspace(&form, &large, 1, &opts)?.eigenvalue(0);
    let tol = 1e-10 * l_large.abs().max(1.0);
    Ok((l_full - l_small - tol).max(l_small - l_large - tol))
}

fn resolvent_gap(rng: &mut ChaCha8Rng) -> Result<f64> {
    let first = random_form(rng);
    let n = first.dim();
    let second = random_form_of(rng, n);
    let second = FormSystem::new(first.space().clone(), second.stiffness().clone())?;
    let report = resolvent_gap_eigenvalue_bound(&first, &second)?;
    Ok(if report.pass {
        report.max_gap - report.norm_bound - 1e-10 * report.norm_bound.max(1.0)
    } else {
        1.0
    })
}

/// The bound dominates the exact distance to the spectrum of `A⁻¹M`.
fn distance_bound(rng: &mut ChaCha8Rng) -> Result<f64> {
    let form = random_form(rng);
    let n = form.dim();
    let w = random_vector(rng, n);
    let all = solve_generalized_eigenpairs(&form, n)?;
    let mus: Vec<f64> = all.eigenvalues().iter().map(|l| 1.0 / l).collect();
    let mu_max = mus.iter().copied().fold(0.0, f64::max);
    let mu = rng.random_range(0.0..1.2 * mu_max);
    let exact = mus.iter().map(|m| (m - mu).abs()).fold(f64::INFINITY, f64::min);
    let bound = spectral_distance_bound(&form, &w, mu)?;
    Ok(exact - bound - 1e-10 * mu_max)
}

/// A random instance: perturbed stiffness and mass, random constraints and
/// the generic defect.
fn random_instance(rng: &mut ChaCha8Rng) -> Result<PerturbationInstance<f64>> {
    let base_form = random_form(rng);
    let n = base_form.dim();
    let sol = solve_generalized_eigenpairs(&base_form, 2)?;
    let base = BaseMode::from_solution(&sol, 0, n, 1e-6)?;
    let eps = rng.random_range(0.0..0.3);
    let p = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    let pert = base_form.stiffness().to_dense() + (p.transpose() * &p) * (eps / n as f64);
    let mass = base_form.mass().map(|w| w * (1.0 + eps * rng.random_range(-0.5..0.5)));
    let perturbed = FormSystem::new(DiscreteSpace::new(mass)?, CsrMatrix::from_dense(&pert))?;
    let subspace = if rng.random_bool(0.5) {
        SubspaceSpec::Full
    } else {
        SubspaceSpec::ZeroOnIndexSet(random_constraints(rng, n))
    };
    let ell = defect_functional(&base, &perturbed, &subspace, &RestrictionMap::Identity)?;
    PerturbationInstance::new(&base, perturbed, subspace, ell, RestrictionMap::Identity)
}

fn consistency(rng: &mut ChaCha8Rng) -> Result<f64> {
    let inst = random_instance(rng)?;
    let c = solve_corrector(&inst)?;
    let needs_corrector = inst.defect().amax() > 0.0 || !inst.subspace().contains(inst.restricted_base(), 0.0)?;
    let nondegenerate = if needs_corrector && c.mass_norm <= 0.0 {
        1.0
    } else {
        -1.0
    };
    Ok((inst.consistency_residual() - 1e-10).max(nondegenerate))
}

fn duality(rng: &mut ChaCha8Rng) -> Result<f64> {
    let inst = random_instance(rng)?;
    Ok(solve_corrector(&inst)?.duality_residual - 1e-8)
}

fn corrector_optimality(rng: &mut ChaCha8Rng) -> Result<f64> {
    let inst = random_instance(rng)?;
    let c = solve_corrector(&inst)?;
    let form = inst.perturbed();
    let j = |u: &DVector<f64>| 0.5 * form.energy(u) - inst.defect_value(u);
    let j0 = j(&c.v);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..25 {
        let w = inst.subspace().project(&random_vector(rng, form.dim()))?;
        for t in [1e-3, -1e-3, 1e-1, -1e-1] {
            let jt = j(&(&c.v + &w * t));
            worst = worst.max(j0 - jt - 1e-12 * (1.0 + j0.abs()));
        }
    }
    Ok(worst)
}

fn corrector_uniqueness(rng: &mut ChaCha8Rng) -> Result<f64> {
    let inst = random_instance(rng)?;
    let a = solve_corrector(&inst)?;
    let mut order = inst.subspace().free_indices(inst.perturbed().dim())?;
    order.shuffle(rng);
    let b = solve_corrector_ordered(&inst, &order)?;
    Ok((&a.v - &b.v).amax() - 1e-10 * (1.0 + a.v.amax()))
}
