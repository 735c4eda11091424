//! Fixtures shared by the criterion benchmarks in `benches/`.

use nxfem::study::{build_example, ExampleId, ManufacturedProblem};
use nxfem::Discretization;

/// Example problem and its discretization at `n` cells per side.
pub fn fixture(id: ExampleId, n: usize) -> (ManufacturedProblem, Discretization) {
    let mp = build_example(id);
    let disc = Discretization::new(mp.spec.domain, n, &mp.spec.level_set).expect("valid benchmark mesh");
    (mp, disc)
}
