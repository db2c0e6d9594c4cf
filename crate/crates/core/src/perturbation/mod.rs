//! Defect functional, corrector, first-order shift and eigenfunction
//! diagnostics for a perturbed simple eigenvalue.

mod corrector;
mod diagnostics;
mod instance;
mod shift;

pub use corrector::{
    dual_torsion, solve_corrector, solve_corrector_ordered, torsion_duality_check, CorrectorResult, CorrectorSummary,
};
pub use diagnostics::{
    eigenfunction_diagnostics, smallness_ratio, track_mode, EigenfunctionDiagnostics, TrackedMode, DEFAULT_MIN_OVERLAP,
};
pub use instance::{defect_functional, BaseMode, PerturbationInstance, RestrictionMap, DEFAULT_GAP_THRESHOLD};
pub use shift::{first_order_shift, ShiftReport};
