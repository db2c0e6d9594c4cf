//! ε-sweeps, rate regression and verification of the first-order laws.

mod fit;
mod run;
mod table;
mod verify;

pub use fit::{fit_rate, fit_rate_with_floor, RateFit, DEFAULT_NOISE_FLOOR};
pub use run::{check_schedule, run_sweep, run_sweep_with, SweepOptions, THREADS_ENV};
pub use table::{SweepRow, SweepTable, CSV_COLUMNS};
pub use verify::{default_law_tolerance, verify_expansion, verify_expansion_with, Check, Verdict, VerifyOptions};
