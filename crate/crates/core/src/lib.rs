//! Unfitted Nitsche-XFEM discretization of elliptic interface problems and
//! of the linear-quadratic optimal control problems they constrain.
//!
//! The pipeline is:
//!
//! 1. [`mesh`] builds a uniform triangulation of a rectangle.
//! 2. [`interface`] classifies elements against a level set, computes the
//!    straight-chord cut geometry and the sub-triangle / chord quadrature.
//! 3. [`xfem`] doubles the degrees of freedom of every vertex touching a
//!    cut element (side-restricted hat functions).
//! 4. [`assembly`] builds the Nitsche stiffness matrix, the mass matrix and
//!    load vectors, and eliminates Dirichlet data.
//! 5. [`solver`] solves the forward problem, the unconstrained KKT system and
//!    the box-constrained problem (projected fixed point or semi-smooth Newton).
//! 6. [`study`] holds the manufactured benchmark problems, error norms and
//!    convergence tables.

// `!(x > 0.0)` is used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assembly;
pub mod discretization;
pub mod error;
pub mod interface;
pub mod mesh;
pub mod problem;
pub mod solver;
pub mod sparse;
pub mod study;
pub mod xfem;

pub use assembly::{NitscheParams, SparseSymMatrix};
pub use discretization::Discretization;
pub use error::{Error, Result};
pub use interface::{CutGeometry, CutInfo, ElementClass, LevelSet, QuadRule};
pub use mesh::{Mesh, Point2, Rect};
pub use problem::{ControlBounds, ProblemSpec, Side};
pub use solver::{LinearSolverConfig, LinearSolverMethod, OcpSolution};
pub use xfem::ExtendedDofMap;
