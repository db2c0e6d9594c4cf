use serde::Serialize;

use super::fit::{fit_rate_with_floor, RateFit};
use super::table::{SweepRow, SweepTable};
use crate::models::{LeadingCoefficient, ModelKind, ModelSpec, ModelTag};

/// One verdict line.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub check: String,
    pub expected: f64,
    pub measured: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    fn new(check: &str, expected: f64, measured: f64, tolerance: f64, pass: bool) -> Self {
        // keep the report free of NaN so it stays valid JSON
        let clean = |x: f64| if x.is_finite() { x } else { f64::MAX.copysign(x) };
        Self {
            check: check.to_string(),
            expected: clean(expected),
            measured: if measured.is_nan() { 0.0 } else { clean(measured) },
            tolerance: clean(tolerance),
            pass: pass && !measured.is_nan(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub model: ModelTag,
    pub checks: Vec<Check>,
    pub shift_fit: Option<RateFit>,
}

impl Verdict {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).unwrap_or_else(|_| "{}".into())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOptions {
    /// Relative tolerance on `shift/ε → c`; `None` picks the model default.
    pub law_tolerance: Option<f64>,
    pub slope_tolerance: f64,
    /// Allowed growth of the remainder constant beyond its estimate.
    pub remainder_factor: f64,
    pub capacity_band: [f64; 2],
    pub min_degenerate_slope: f64,
    /// `|c| ≤ tol · λ₀` counts as a vanishing coefficient.
    pub zero_coefficient_tol: f64,
    pub duality_tol: f64,
    pub consistency_tol: f64,
    pub max_failed_fraction: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            law_tolerance: None,
            slope_tolerance: 0.05,
            remainder_factor: 2.0,
            capacity_band: [0.9, 1.1],
            min_degenerate_slope: 1.5,
            zero_coefficient_tol: 1e-10,
            duality_tol: 1e-8,
            consistency_tol: 1e-10,
            max_failed_fraction: 0.2,
        }
    }
}

pub fn default_law_tolerance(tag: ModelTag) -> f64 {
    match tag {
        ModelTag::Robin => 0.02,
        ModelTag::Conformal => 0.01,
        ModelTag::DirichletHole => 0.1,
        ModelTag::PseudoSymbol => 0.05,
    }
}

pub fn verify_expansion(table: &SweepTable, spec: &ModelSpec) -> Verdict {
    verify_expansion_with(table, spec, &VerifyOptions::default())
}

pub fn verify_expansion_with(table: &SweepTable, spec: &ModelSpec, opts: &VerifyOptions) -> Verdict {
    let floor = table.noise_floor();
    let mut checks = Vec::new();
    let failed = table.failed_rows();
    checks.push(Check::new(
        "tracking",
        0.0,
        failed as f64,
        opts.max_failed_fraction * table.rows.len() as f64,
        failed as f64 <= opts.max_failed_fraction * table.rows.len() as f64,
    ));
    let rows: Vec<&SweepRow> = table.rows.iter().filter(|r| r.tracked).collect();

    let remainder: Vec<(f64, f64)> = rows
        .iter()
        .map(|r| ((r.shift - r.predicted_shift).abs(), r.remainder_scale()))
        .collect();
    checks.push(constant_check("remainder", &remainder, floor, opts.remainder_factor, 2));

    let bookkeeping: Vec<(f64, f64)> = rows
        .iter()
        .map(|r| {
            let lhs = (r.shift * r.mass_denominator - r.simplified_shift).abs();
            let scale = r.remainder_scale() + r.shift.abs() * r.corrector_mass_norm;
            (lhs, scale)
        })
        .collect();
    // the scale mixes ‖V‖² and |shift|‖V‖, whose ratio settles only once
    // the coarse rows are out of the way
    let coarse = bookkeeping.len().div_ceil(2).max(2);
    checks.push(constant_check(
        "bookkeeping",
        &bookkeeping,
        floor,
        opts.remainder_factor,
        coarse,
    ));

    let max_duality = rows.iter().map(|r| r.duality_residual).fold(0.0, f64::max);
    checks.push(Check::new(
        "duality",
        0.0,
        max_duality,
        opts.duality_tol,
        max_duality <= opts.duality_tol,
    ));
    let max_consistency = rows.iter().map(|r| r.consistency_residual).fold(0.0, f64::max);
    checks.push(Check::new(
        "consistency",
        0.0,
        max_consistency,
        opts.consistency_tol,
        max_consistency <= opts.consistency_tol,
    ));

    let positive: Vec<&SweepRow> = rows.iter().copied().filter(|r| r.eps > 0.0).collect();
    let xs: Vec<f64> = positive.iter().map(|r| r.eps).collect();
    let ys: Vec<f64> = positive.iter().map(|r| r.shift).collect();
    let fit = fit_rate_with_floor(&xs, &ys, floor).ok();
    let law_tol = opts.law_tolerance.unwrap_or_else(|| default_law_tolerance(table.model));
    let lambda0 = table.lambda_0;

    let degenerate = matches!(&spec.kind, ModelKind::Conformal(s) if s.dimension == 2);
    match table.coefficient {
        LeadingCoefficient::Linear(c) if degenerate => {
            let tol = opts.zero_coefficient_tol * lambda0.abs();
            checks.push(Check::new(
                "first-order coefficient 0",
                0.0,
                c.abs(),
                tol,
                c.abs() <= tol,
            ));
            let slope = fit.map(|f| f.slope).unwrap_or(f64::NAN);
            checks.push(Check::new(
                "shift slope",
                opts.min_degenerate_slope,
                slope,
                0.0,
                slope >= opts.min_degenerate_slope,
            ));
        }
        LeadingCoefficient::Linear(c) => {
            if let Some(last) = positive.last() {
                let measured = last.shift / last.eps;
                let allowed = law_tol * c.abs() + floor / last.eps;
                checks.push(Check::new(
                    "leading coefficient",
                    c,
                    measured,
                    law_tol,
                    (measured - c).abs() <= allowed,
                ));
            }
            if c.abs() > opts.zero_coefficient_tol * lambda0.abs() {
                let slope = fit.map(|f| f.slope).unwrap_or(f64::NAN);
                checks.push(Check::new(
                    "shift slope",
                    1.0,
                    slope,
                    opts.slope_tolerance,
                    (slope - 1.0).abs() <= opts.slope_tolerance,
                ));
            }
        }
        LeadingCoefficient::CapacityRatio => {
            let ratios: Vec<f64> = positive
                .iter()
                .filter_map(|r| r.capacity.filter(|&c| c > 0.0).map(|c| r.shift / c))
                .collect();
            let [lo, hi] = opts.capacity_band;
            let last = ratios.last().copied().unwrap_or(f64::NAN);
            checks.push(Check::new(
                "capacity law",
                1.0,
                last,
                (hi - lo) / 2.0,
                last >= lo && last <= hi,
            ));
            let distances: Vec<f64> = ratios.iter().map(|r| (r - 1.0).abs()).collect();
            let monotone = distances.windows(2).all(|w| w[1] <= w[0] + 1e-12);
            checks.push(Check::new(
                "capacity ratio approaches 1",
                0.0,
                distances.last().copied().unwrap_or(f64::NAN),
                0.0,
                monotone && !distances.is_empty(),
            ));
            checks.push(trend_check(
                "smallness ratio trend",
                positive.iter().map(|r| r.smallness_ratio).collect(),
            ));
            checks.push(trend_check(
                "eigenfunction l2 trend",
                positive.iter().map(|r| r.l2_ratio).collect(),
            ));
        }
    }
    Verdict {
        model: table.model,
        checks,
        shift_fit: fit,
    }
}

/// Estimates `C = max res/scale` on the first `coarse` entries and checks
/// `res ≤ factor · C · scale + floor` on the rest.
fn constant_check(name: &str, data: &[(f64, f64)], floor: f64, factor: f64, coarse: usize) -> Check {
    let usable: Vec<(f64, f64)> = data.iter().copied().filter(|&(_, s)| s > 0.0).collect();
    let coarse = coarse.min(usable.len().saturating_sub(1));
    if usable.len() < 3 {
        return Check::new(name, 0.0, 0.0, factor, true);
    }
    let c = usable[..coarse].iter().map(|&(r, s)| r / s).fold(0.0, f64::max);
    let rest = &usable[coarse..];
    let measured = rest.iter().map(|&(r, s)| r / s).fold(0.0, f64::max);
    let pass = rest.iter().all(|&(r, s)| r <= factor * c * s + floor);
    Check::new(name, c, measured, factor, pass)
}

/// The ratio at the finest parameter must be below the one before it.
fn trend_check(name: &str, values: Vec<f64>) -> Check {
    if values.len() < 2 {
        return Check::new(name, 0.0, f64::NAN, 0.0, false);
    }
    let a = values[values.len() - 2];
    let b = values[values.len() - 1];
    Check::new(name, a, b, 0.0, b < a)
}
