//! Linear solvers and the forward / optimal-control solution procedures.

pub mod linear;
mod ocp;

pub use linear::{LinearSolverConfig, LinearSolverMethod, LuSolver, SpdSolver};
pub use ocp::{
    control_difference, project_control, solve_constrained_fixed_point, solve_constrained_ssn, solve_state,
    solve_unconstrained_ocp, IterationConfig, IterationRecord, OcpSolution, OcpSystem,
};
