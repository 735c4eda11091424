//! Convergence sweeps over mesh sizes, EOC tables and their CSV/text output.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use crate::assembly::{write_control_integration_mesh, QuadratureOrder};
use crate::discretization::Discretization;
use crate::error::{Error, Result};
use crate::solver::{
    solve_constrained_fixed_point, solve_constrained_ssn, solve_unconstrained_ocp, IterationConfig,
    LinearSolverConfig, OcpSolution, OcpSystem,
};
use crate::study::active_set::{extract_active_set_boundary, interface_polylines, write_polylines_csv};
use crate::study::errors::{compute_errors, ErrorReport, Field, Norm};
use crate::study::examples::{build_example_with, ExampleId, ExampleOverrides, ManufacturedProblem};

/// Method for box-constrained problems.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ConstrainedMethod {
    #[default]
    FixedPoint,
    SemiSmoothNewton,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub example: ExampleId,
    pub n_list: Vec<usize>,
    pub overrides: ExampleOverrides,
    pub linear: LinearSolverConfig,
    pub method: ConstrainedMethod,
    pub iteration: IterationConfig,
    pub quad: QuadratureOrder,
    pub out_dir: Option<PathBuf>,
    pub dump_geometry: bool,
    pub verbose: bool,
}

impl RunConfig {
    pub fn new(example: ExampleId, n_list: Vec<usize>) -> Self {
        Self {
            example,
            n_list,
            overrides: ExampleOverrides::default(),
            linear: LinearSolverConfig::default(),
            method: ConstrainedMethod::default(),
            iteration: IterationConfig::default(),
            quad: QuadratureOrder::default(),
            out_dir: None,
            dump_geometry: false,
            verbose: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_list.is_empty() {
            return Err(Error::config("the list of mesh sizes is empty"));
        }
        if self.n_list.iter().any(|&n| n < 4) {
            return Err(Error::config("mesh sizes must be at least 4"));
        }
        if self.n_list.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::config("mesh sizes must be strictly increasing"));
        }
        if !(self.linear.tol > 0.0) {
            return Err(Error::config("linear solver tolerance must be positive"));
        }
        if !(self.iteration.tol > 0.0) || self.iteration.max_iter == 0 {
            return Err(Error::config("iteration tolerance and max_iter must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct StudyRow {
    pub n: usize,
    pub h: f64,
    pub num_dofs: usize,
    pub num_cut: usize,
    pub report: ErrorReport,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct ConvergenceTable {
    pub example: ExampleId,
    pub rows: Vec<StudyRow>,
}

/// `log₂(e_coarse / e_fine)`
pub fn eoc(coarse: f64, fine: f64) -> f64 {
    (coarse / fine).log2()
}

impl ConvergenceTable {
    pub fn value(&self, row: usize, field: Field, norm: Norm) -> f64 {
        self.rows[row].report.value(field, norm)
    }

    /// EOC printed on row `row` (none on the first row).
    pub fn eoc(&self, row: usize, field: Field, norm: Norm) -> Option<f64> {
        (row > 0).then(|| eoc(self.value(row - 1, field, norm), self.value(row, field, norm)))
    }

    pub fn row_for(&self, n: usize) -> Option<usize> {
        self.rows.iter().position(|r| r.n == n)
    }

    /// Columns `N, field, norm, error, eoc`.
    pub fn write_errors_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["N", "field", "norm", "error", "eoc"])?;
        for (i, row) in self.rows.iter().enumerate() {
            for field in Field::ALL {
                for norm in Norm::ALL {
                    let eoc = self.eoc(i, field, norm).map(|e| format!("{e:.16e}")).unwrap_or_default();
                    w.write_record([
                        row.n.to_string(),
                        field.symbol().to_string(),
                        norm.label().to_string(),
                        format!("{:.16e}", self.value(i, field, norm)),
                        eoc,
                    ])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }

    /// One aligned block per norm: `N | u order | y order | p order`.
    pub fn render_text(&self) -> String {
        let relative = self.rows.first().is_some_and(|r| r.report.relative);
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{} ({} errors)",
            self.example,
            if relative { "relative" } else { "absolute" }
        );
        for norm in Norm::ALL {
            let _ = writeln!(s, "\n{norm}");
            let _ = write!(s, "{:>5}", "N");
            for field in Field::ALL {
                let _ = write!(s, " | {:>11} {:>5}", field.symbol(), "order");
            }
            let _ = writeln!(s);
            for (i, row) in self.rows.iter().enumerate() {
                let _ = write!(s, "{:>5}", row.n);
                for field in Field::ALL {
                    let order = self.eoc(i, field, norm).map(|e| format!("{e:.2}")).unwrap_or_default();
                    let _ = write!(s, " | {:>11.4e} {:>5}", self.value(i, field, norm), order);
                }
                let _ = writeln!(s);
            }
        }
        s
    }

    pub fn write_table_txt(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.render_text())?;
        Ok(())
    }
}

/// Assembles and solves one refinement level.
pub fn solve_level(
    problem: &ManufacturedProblem,
    n: usize,
    linear: LinearSolverConfig,
    method: ConstrainedMethod,
    iteration: IterationConfig,
    quad: QuadratureOrder,
) -> Result<(Discretization, OcpSolution)> {
    let disc = Discretization::new(problem.spec.domain, n, &problem.spec.level_set)?;
    let solution = {
        let system = OcpSystem::new(&disc, &problem.spec, quad)?;
        if problem.spec.bounds.is_unbounded() {
            solve_unconstrained_ocp(&system, linear)?
        } else {
            match method {
                ConstrainedMethod::FixedPoint => solve_constrained_fixed_point(&system, linear, iteration)?,
                ConstrainedMethod::SemiSmoothNewton => solve_constrained_ssn(&system, iteration)?,
            }
        }
    };
    Ok((disc, solution))
}

/// Solves every level of `config.n_list` in order, writing outputs as rows
/// complete so that a failure leaves the finished rows on disk.
pub fn run_convergence_study(config: &RunConfig) -> Result<ConvergenceTable> {
    config.validate()?;
    let problem = build_example_with(config.example, config.overrides);
    problem.spec.validate()?;
    if let Some(dir) = &config.out_dir {
        std::fs::create_dir_all(dir)?;
    }
    let mut table = ConvergenceTable {
        example: config.example,
        rows: Vec::new(),
    };
    let last = *config.n_list.last().expect("validated non-empty");
    for &n in &config.n_list {
        let started = std::time::Instant::now();
        let (disc, solution) = solve_level(&problem, n, config.linear, config.method, config.iteration, config.quad)?;
        let report = compute_errors(&disc, &problem, &solution, config.quad)?;
        log::info!(
            "{} N={n}: {} dofs, {} cut elements, {} iterations, {:.2}s",
            config.example,
            disc.num_dofs(),
            disc.cut_info.num_cut(),
            solution.iterations,
            started.elapsed().as_secs_f64()
        );
        if !solution.converged {
            log::warn!("{} N={n}: iteration did not converge", config.example);
        }
        table.rows.push(StudyRow {
            n,
            h: disc.h(),
            num_dofs: disc.num_dofs(),
            num_cut: disc.cut_info.num_cut(),
            report,
            iterations: solution.iterations,
            converged: solution.converged,
        });
        if let Some(dir) = &config.out_dir {
            table.write_errors_csv(&dir.join("errors.csv"))?;
            table.write_table_txt(&dir.join("table.txt"))?;
            if config.verbose {
                solution.write_iteration_log(&dir.join(format!("iterations_N{n}.csv")))?;
            }
            if n == last {
                write_level_outputs(dir, &disc, &solution, config.dump_geometry)?;
            }
        }
    }
    Ok(table)
}

/// `activeset.csv` (computed active-set boundary and Γ_h) and, on request,
/// `integration_mesh.csv`.
pub fn write_level_outputs(dir: &Path, disc: &Discretization, solution: &OcpSolution, dump_geometry: bool) -> Result<()> {
    let mut curves = extract_active_set_boundary(disc, solution);
    curves.extend(interface_polylines(disc));
    write_polylines_csv(&dir.join("activeset.csv"), &curves)?;
    if dump_geometry {
        let path = dir.join("integration_mesh.csv");
        if solution.bounds.is_unbounded() {
            disc.cut_info.write_integration_mesh_csv(&disc.mesh, &path)?;
        } else {
            write_control_integration_mesh(disc, &solution.costate, solution.regularization, solution.bounds, &path)?;
        }
    }
    Ok(())
}

/// Writes a short run summary (one line per level).
pub fn write_summary(path: &Path, table: &ConvergenceTable) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "N,h,dofs,cut_elements,iterations,converged")?;
    for r in &table.rows {
        writeln!(
            w,
            "{},{:.16e},{},{},{},{}",
            r.n, r.h, r.num_dofs, r.num_cut, r.iterations, r.converged
        )?;
    }
    w.flush()?;
    Ok(())
}
