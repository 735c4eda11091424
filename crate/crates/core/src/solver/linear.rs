//! Sparse linear solvers: faer Cholesky / LU and Jacobi-preconditioned CG.

use faer::prelude::Solve;
use faer::sparse::linalg::solvers::{Llt, Lu};
use faer::Col;

use crate::error::{Error, Result};
use crate::sparse::{dot, norm2, CsrMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinearSolverMethod {
    /// Sparse Cholesky for SPD systems, sparse LU otherwise.
    Direct,
    /// Jacobi-preconditioned conjugate gradients.
    ConjugateGradient,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearSolverConfig {
    pub method: LinearSolverMethod,
    /// Relative residual target of the iterative solver.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for LinearSolverConfig {
    fn default() -> Self {
        Self {
            method: LinearSolverMethod::Direct,
            tol: 1e-13,
            max_iter: 20_000,
        }
    }
}

impl LinearSolverConfig {
    pub fn direct() -> Self {
        Self::default()
    }

    pub fn cg() -> Self {
        Self {
            method: LinearSolverMethod::ConjugateGradient,
            ..Self::default()
        }
    }
}

fn to_col(b: &[f64]) -> Col<f64> {
    Col::from_fn(b.len(), |i| b[i])
}

fn from_col(x: &Col<f64>) -> Vec<f64> {
    (0..x.nrows()).map(|i| x[i]).collect()
}

/// Result of a CG run.
#[derive(Debug, Clone)]
pub struct CgOutcome {
    pub solution: Vec<f64>,
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Preconditioned CG for an SPD operator given as a closure.
pub fn pcg(
    apply: &dyn Fn(&[f64]) -> Vec<f64>,
    precondition: &dyn Fn(&[f64]) -> Vec<f64>,
    b: &[f64],
    x0: Option<&[f64]>,
    tol: f64,
    max_iter: usize,
) -> Result<CgOutcome> {
    let n = b.len();
    let b_norm = norm2(b);
    if b_norm == 0.0 {
        return Ok(CgOutcome {
            solution: vec![0.0; n],
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let mut x = x0.map_or_else(|| vec![0.0; n], <[f64]>::to_vec);
    let ax = apply(&x);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let mut z = precondition(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut res = norm2(&r) / b_norm;
    for it in 0..max_iter {
        if res <= tol {
            return Ok(CgOutcome {
                solution: x,
                iterations: it,
                relative_residual: res,
            });
        }
        let ap = apply(&p);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::Solver {
                message: "operator is not positive definite".into(),
                residual: res,
            });
        }
        let step = rz / pap;
        for i in 0..n {
            x[i] += step * p[i];
            r[i] -= step * ap[i];
        }
        z = precondition(&r);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        res = norm2(&r) / b_norm;
    }
    if res <= tol {
        return Ok(CgOutcome {
            solution: x,
            iterations: max_iter,
            relative_residual: res,
        });
    }
    Err(Error::Solver {
        message: format!("conjugate gradients did not converge in {max_iter} iterations"),
        residual: res,
    })
}

/// Inverse of the diagonal, used as Jacobi preconditioner.
pub fn jacobi(matrix: &CsrMatrix) -> Result<Vec<f64>> {
    matrix
        .diagonal()
        .into_iter()
        .enumerate()
        .map(|(i, d)| {
            if d > 0.0 {
                Ok(1.0 / d)
            } else {
                Err(Error::Solver {
                    message: format!("non-positive diagonal entry {d:e} in row {i}"),
                    residual: f64::NAN,
                })
            }
        })
        .collect()
}

enum SpdBackend {
    Cholesky(Llt<usize, f64>),
    Cg { inv_diag: Vec<f64> },
}

/// Reusable solver for a symmetric positive definite matrix.
pub struct SpdSolver {
    matrix: CsrMatrix,
    backend: SpdBackend,
    config: LinearSolverConfig,
}

impl SpdSolver {
    pub fn new(matrix: &CsrMatrix, config: LinearSolverConfig) -> Result<Self> {
        let backend = match config.method {
            LinearSolverMethod::Direct => {
                let llt = matrix
                    .to_faer()?
                    .sp_cholesky(faer::Side::Lower)
                    .map_err(|e| Error::Solver {
                        message: format!("sparse Cholesky failed: {e:?}"),
                        residual: f64::NAN,
                    })?;
                SpdBackend::Cholesky(llt)
            }
            LinearSolverMethod::ConjugateGradient => SpdBackend::Cg {
                inv_diag: jacobi(matrix)?,
            },
        };
        Ok(Self {
            matrix: matrix.clone(),
            backend,
            config,
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        self.solve_with_guess(b, None)
    }

    pub fn solve_with_guess(&self, b: &[f64], guess: Option<&[f64]>) -> Result<Vec<f64>> {
        match &self.backend {
            SpdBackend::Cholesky(llt) => Ok(from_col(&llt.solve(to_col(b)))),
            SpdBackend::Cg { inv_diag } => {
                let out = pcg(
                    &|x| self.matrix.mul_vec(x),
                    &|r| r.iter().zip(inv_diag).map(|(r, d)| r * d).collect(),
                    b,
                    guess,
                    self.config.tol,
                    self.config.max_iter,
                )?;
                log::debug!(
                    "cg: {} iterations, relative residual {:.3e}",
                    out.iterations,
                    out.relative_residual
                );
                Ok(out.solution)
            }
        }
    }
}

/// Sparse LU for general square systems.
pub struct LuSolver {
    lu: Lu<usize, f64>,
}

impl LuSolver {
    pub fn new(matrix: &CsrMatrix) -> Result<Self> {
        let lu = matrix.to_faer()?.sp_lu().map_err(|e| Error::Solver {
            message: format!("sparse LU failed: {e:?}"),
            residual: f64::NAN,
        })?;
        Ok(Self { lu })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        from_col(&self.lu.solve(to_col(b)))
    }
}

/// `‖A x − b‖ / ‖b‖` (or the absolute residual if `b = 0`).
pub fn relative_residual(matrix: &CsrMatrix, x: &[f64], b: &[f64]) -> f64 {
    let ax = matrix.mul_vec(x);
    let r: Vec<f64> = ax.iter().zip(b).map(|(a, b)| a - b).collect();
    let bn = norm2(b);
    if bn > 0.0 {
        norm2(&r) / bn
    } else {
        norm2(&r)
    }
}
