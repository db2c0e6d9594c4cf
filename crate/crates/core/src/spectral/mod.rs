//! Discrete forms, mass-weighted eigenproblems and abstract spectral bounds.

mod bounds;
mod eigen;
mod form;
mod sparse;
mod subspace;

pub use bounds::{resolvent_gap_eigenvalue_bound, spectral_distance_bound, ResolventGapReport};
pub use eigen::{
    solve_generalized_eigenpairs, solve_generalized_eigenpairs_with, solve_on_subspace, EigenMethod, EigenOptions,
    EigenSolution,
};
pub use form::{DiscreteSpace, FormSystem};
pub use sparse::{conjugate_gradient, CsrMatrix, EnvelopeCholesky};
pub use subspace::{restrict_to_subspace, SubspaceSpec};
