use rayon::prelude::*;

use super::table::{SweepRow, SweepTable};
use crate::error::{Error, Result};
use crate::models::{weighted_capacity, ModelSpec, PreparedModel};
use crate::perturbation::{
    eigenfunction_diagnostics, first_order_shift, smallness_ratio, solve_corrector, track_mode, DEFAULT_GAP_THRESHOLD,
    DEFAULT_MIN_OVERLAP,
};
use crate::spectral::EigenOptions;

pub const THREADS_ENV: &str = "SPECTRAL_SHIFT_THREADS";

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOptions {
    /// Worker cap; `None` uses the global pool.
    pub threads: Option<usize>,
    pub residual_tol: f64,
    pub gap_threshold: f64,
    pub min_overlap: f64,
    /// Largest tolerated fraction of rows whose mode could not be tracked.
    pub max_failed_fraction: f64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            threads: None,
            residual_tol: 1e-9,
            gap_threshold: DEFAULT_GAP_THRESHOLD,
            min_overlap: DEFAULT_MIN_OVERLAP,
            max_failed_fraction: 0.2,
        }
    }
}

impl SweepOptions {
    /// Defaults, with the thread cap read from `SPECTRAL_SHIFT_THREADS`.
    pub fn from_env() -> Self {
        let threads = std::env::var(THREADS_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
            .filter(|&n| n > 0);
        Self {
            threads,
            ..Self::default()
        }
    }
}

pub fn check_schedule(schedule: &[f64]) -> Result<()> {
    if schedule.is_empty() {
        return Err(Error::Validation("ε schedule is empty".into()));
    }
    if let Some(e) = schedule.iter().find(|e| !(e.is_finite() && **e >= 0.0)) {
        return Err(Error::Validation(format!(
            "ε schedule entries must be nonnegative, got {e}"
        )));
    }
    if schedule.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Validation("ε schedule must be strictly decreasing".into()));
    }
    Ok(())
}

pub fn run_sweep(spec: &ModelSpec, schedule: &[f64]) -> Result<SweepTable> {
    run_sweep_with(spec, schedule, &SweepOptions::from_env())
}

pub fn run_sweep_with(spec: &ModelSpec, schedule: &[f64], opts: &SweepOptions) -> Result<SweepTable> {
    check_schedule(schedule)?;
    for &e in schedule {
        spec.check_eps(e)?;
    }
    let eigen = EigenOptions {
        residual_tol: opts.residual_tol,
        ..EigenOptions::default()
    };
    let model = PreparedModel::<f64>::with_options(spec, eigen, opts.gap_threshold)?;
    let coefficient = model.leading_coefficient()?;
    let compute =
        || -> Result<Vec<SweepRow>> { schedule.par_iter().map(|&eps| sweep_row(&model, eps, opts)).collect() };
    let rows = match opts.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Sweep(format!("thread pool: {e}")))?
            .install(compute)?,
        None => compute()?,
    };
    let table = SweepTable {
        model: spec.tag(),
        mode_index: spec.mode_index,
        lambda_0: model.base().eigenvalue,
        coefficient,
        residual_tol: opts.residual_tol,
        rows,
    };
    let failed = table.failed_rows();
    if failed as f64 > opts.max_failed_fraction * table.rows.len() as f64 {
        return Err(Error::Sweep(format!(
            "mode tracking failed on {failed} of {} rows",
            table.rows.len()
        )));
    }
    if let Some(r) = table.rows.iter().find(|r| !row_is_finite(r)) {
        return Err(Error::Sweep(format!("non-finite values in the row for ε = {}", r.eps)));
    }
    Ok(table)
}

fn row_is_finite(r: &SweepRow) -> bool {
    [
        r.eps,
        r.lambda_eps,
        r.lambda_0,
        r.shift,
        r.predicted_shift,
        r.corrector_energy,
        r.corrector_mass_norm,
        r.smallness_ratio,
        r.eigenfunction_ratio,
    ]
    .iter()
    .chain(r.capacity.iter())
    .all(|v| v.is_finite())
}

fn sweep_row(model: &PreparedModel<f64>, eps: f64, opts: &SweepOptions) -> Result<SweepRow> {
    let mi = model.instance(eps)?;
    let inst = &mi.instance;
    let corrector = solve_corrector(inst)?;
    let report = first_order_shift(inst, &corrector)?;
    let solution = model.perturbed_eigenpairs(&mi)?;
    let lambda_0 = inst.base_eigenvalue();
    let space = inst.perturbed().space();
    let tracked = track_mode(space, inst.restricted_base(), lambda_0, &solution, opts.min_overlap);
    let capacity = weighted_capacity(&mi, &corrector).ok();
    let smallness = match smallness_ratio(&corrector) {
        Ok(s) => s,
        Err(Error::UndefinedRatio) => 0.0,
        Err(e) => return Err(e),
    };
    let mut row = SweepRow {
        eps,
        lambda_eps: 0.0,
        lambda_0,
        shift: 0.0,
        predicted_shift: report.predicted_shift,
        corrector_energy: corrector.energy,
        corrector_mass_norm: corrector.mass_norm,
        smallness_ratio: smallness,
        eigenfunction_ratio: 0.0,
        capacity: capacity.map(|c| c.capacity),
        simplified_shift: report.simplified_shift,
        mass_denominator: report.denominator,
        l2_ratio: 0.0,
        projected_energy_error: 0.0,
        projected_mass_error: 0.0,
        torsion: corrector.torsion,
        duality_residual: corrector.duality_residual,
        consistency_residual: mi.defect_discrepancy,
        capacity_cross_check: capacity.map(|c| c.cross_check),
        tracked: false,
        tracked_index: model.spec().mode_index,
        overlap: 0.0,
    };
    match tracked {
        Ok(t) => {
            let d = eigenfunction_diagnostics(inst, &corrector, &solution)?;
            row.lambda_eps = t.eigenvalue;
            row.tracked = true;
            row.tracked_index = t.index;
            row.overlap = t.overlap;
            row.eigenfunction_ratio = d.energy_ratio;
            row.l2_ratio = d.l2_ratio;
            row.projected_energy_error = d.projected_energy_error;
            row.projected_mass_error = d.projected_mass_error;
        }
        Err(Error::Tracking(_)) => {
            // flagged; falls back to the eigenvalue with the base index
            let i = model.spec().mode_index.min(solution.len() - 1);
            row.lambda_eps = solution.eigenvalue(i);
        }
        Err(e) => return Err(e),
    }
    row.shift = row.lambda_eps - lambda_0;
    Ok(row)
}
