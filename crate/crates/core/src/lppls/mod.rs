//! LPPLS model evaluation and two-step calibration.

mod engine;
mod fit;
mod grid;
mod model;
mod ols;
mod polish;

pub use fit::{fit_window, fit_window_with, BoundaryFlags, FitOptions, FitResult};
pub use grid::GridSpec;
pub use model::{derive_canonical, lppls_eval, Canonical, LpplsParams};
pub use ols::{design_matrix, design_matrix_at, ols_solve, DesignMatrix, OlsSolution};
pub(crate) use ols::lstsq;

pub(crate) use engine::{sweep, CheckpointOutcome};
pub(crate) use fit::finish;
