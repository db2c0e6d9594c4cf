//! First-order eigenvalue perturbation for families of discrete symmetric
//! forms, with model problems and convergence sweeps.
//!
//! The numerical core is generic over [`Real`] (`f32` or `f64`); sweeps and
//! reports are carried out in `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod models;
pub mod perturbation;
pub mod properties;
pub mod scalar;
pub mod spectral;
pub mod sweep;

pub use error::{Error, Result};
pub use models::{LeadingCoefficient, ModelInstance, ModelKind, ModelSpec, ModelTag, PreparedModel};
pub use perturbation::{
    defect_functional, eigenfunction_diagnostics, first_order_shift, smallness_ratio, solve_corrector,
    torsion_duality_check, BaseMode, CorrectorResult, PerturbationInstance, RestrictionMap, ShiftReport,
};
pub use scalar::Real;
pub use spectral::{
    resolvent_gap_eigenvalue_bound, restrict_to_subspace, solve_generalized_eigenpairs, spectral_distance_bound,
    CsrMatrix, DiscreteSpace, EigenOptions, EigenSolution, FormSystem, SubspaceSpec,
};
pub use sweep::{fit_rate, run_sweep, verify_expansion, RateFit, SweepTable, Verdict};

pub type DiscreteSpaceF64 = DiscreteSpace<f64>;
pub type FormSystemF64 = FormSystem<f64>;
pub type EigenSolutionF64 = EigenSolution<f64>;
pub type PerturbationInstanceF64 = PerturbationInstance<f64>;
pub type CorrectorResultF64 = CorrectorResult<f64>;

pub type DiscreteSpaceF32 = DiscreteSpace<f32>;
pub type FormSystemF32 = FormSystem<f32>;
pub type EigenSolutionF32 = EigenSolution<f32>;
pub type PerturbationInstanceF32 = PerturbationInstance<f32>;
pub type CorrectorResultF32 = CorrectorResult<f32>;
