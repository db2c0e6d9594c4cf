use serde::Serialize;

use crate::models::{LeadingCoefficient, ModelTag};

/// Column order of the CSV export.
pub const CSV_COLUMNS: [&str; 10] = [
    "eps",
    "lambda_eps",
    "lambda_0",
    "shift",
    "predicted_shift",
    "corrector_energy",
    "corrector_mass_norm",
    "smallness_ratio",
    "eigenfunction_ratio",
    "capacity",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub eps: f64,
    pub lambda_eps: f64,
    pub lambda_0: f64,
    pub shift: f64,
    pub predicted_shift: f64,
    pub corrector_energy: f64,
    pub corrector_mass_norm: f64,
    /// `‖V‖²/E(V)`; 0 for a vanishing corrector.
    pub smallness_ratio: f64,
    /// `E(φ₀ - φ_ε)/E(V)`.
    pub eigenfunction_ratio: f64,
    pub capacity: Option<f64>,
    // the rest is kept out of the CSV
    pub simplified_shift: f64,
    /// `(φ₀, φ₀)` on the perturbed space.
    pub mass_denominator: f64,
    /// `‖φ₀ - φ_ε‖²/E(V)`.
    pub l2_ratio: f64,
    pub projected_energy_error: f64,
    pub projected_mass_error: f64,
    pub torsion: f64,
    pub duality_residual: f64,
    pub consistency_residual: f64,
    pub capacity_cross_check: Option<f64>,
    pub tracked: bool,
    pub tracked_index: usize,
    pub overlap: f64,
}

impl SweepRow {
    pub fn remainder_scale(&self) -> f64 {
        self.corrector_mass_norm * self.corrector_mass_norm
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub model: ModelTag,
    pub mode_index: usize,
    pub lambda_0: f64,
    pub coefficient: LeadingCoefficient,
    /// Relative eigen-residual tolerance used for every solve.
    pub residual_tol: f64,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    /// Absolute eigenvalue noise level: `1e2 × tol × (1 + λ₀)`.
    pub fn noise_floor(&self) -> f64 {
        1e2 * self.residual_tol * (1.0 + self.lambda_0.abs())
    }

    pub fn failed_rows(&self) -> usize {
        self.rows.iter().filter(|r| !r.tracked).count()
    }

    pub fn to_csv(&self) -> String {
        let mut s = CSV_COLUMNS.join(",");
        s.push('\n');
        for r in &self.rows {
            let cap = r.capacity.map(|c| format!("{c:e}")).unwrap_or_default();
            s.push_str(&format!(
                "{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{}\n",
                r.eps,
                r.lambda_eps,
                r.lambda_0,
                r.shift,
                r.predicted_shift,
                r.corrector_energy,
                r.corrector_mass_norm,
                r.smallness_ratio,
                r.eigenfunction_ratio,
                cap
            ));
        }
        s
    }
}
