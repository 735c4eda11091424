//! Benchmark problems, error norms and convergence studies.

pub mod active_set;
pub mod convergence;
pub mod errors;
pub mod examples;

pub use convergence::{run_convergence_study, solve_level, ConstrainedMethod, ConvergenceTable, RunConfig, StudyRow};
pub use errors::{compute_errors, ErrorReport, Field, FieldError, Norm};
pub use examples::{build_example, build_example_with, ExampleId, ExampleOverrides, ManufacturedProblem};
