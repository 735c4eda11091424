//! Forward solve and the optimality system
//!
//! ```text
//! a_h(y_h, v) = (u_h + f, v) + (k₂g, v₁)_Γ + (k₁g, v₂)_Γ,   y_h = y_b on ∂Ω
//! a_h(p_h, v) = (y_h − y_d, v) + (k₂g_p, v₁)_Γ + (k₁g_p, v₂)_Γ,   p_h = 0 on ∂Ω
//! u_h = clamp(−p_h / a, u_a, u_b)
//! ```

use std::io::Write;
use std::path::Path;

use crate::assembly::{
    assemble_load, assemble_mass, assemble_stiffness, dirichlet_values, eval_discrete,
    for_each_control_point, ControlField, DofPartition, NitscheParams, QuadratureOrder, SparseSymMatrix,
};
use crate::discretization::Discretization;
use crate::error::{Error, Result};
use crate::interface::TriangleRule;
use crate::mesh::Point2;
use crate::problem::{ControlBounds, ProblemSpec, Side};
use crate::solver::linear::{relative_residual, LinearSolverConfig, LinearSolverMethod, LuSolver, SpdSolver};
use crate::sparse::{block_matrix, max_abs_diff, norm2, CsrMatrix};

/// Stopping rule of the nonlinear iterations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationConfig {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for IterationConfig {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Normalized L² distance between successive controls.
    pub increment: f64,
    pub state_residual: f64,
    pub adjoint_residual: f64,
}

/// Discrete state, co-state and (implicitly) control.
#[derive(Debug, Clone)]
pub struct OcpSolution {
    pub state: Vec<f64>,
    pub costate: Vec<f64>,
    /// `U = −P/a` for unconstrained problems.
    pub control_dofs: Option<Vec<f64>>,
    pub regularization: f64,
    pub bounds: ControlBounds,
    pub iterations: usize,
    pub converged: bool,
    pub history: Vec<IterationRecord>,
}

impl OcpSolution {
    /// `u_h(x) = clamp(−p_h(x)/a)` on `side` of element `e`.
    pub fn control_at(&self, disc: &Discretization, e: usize, side: Side, x: Point2) -> f64 {
        let p = eval_discrete(disc, &self.costate, e, side, x);
        self.bounds.clamp(-p / self.regularization)
    }

    pub fn write_iteration_log(&self, path: &Path) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(w, "iteration,increment,state_residual,adjoint_residual")?;
        for r in &self.history {
            writeln!(
                w,
                "{},{:.16e},{:.16e},{:.16e}",
                r.iteration, r.increment, r.state_residual, r.adjoint_residual
            )?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Pointwise `clamp(−p/a, lower, upper)`.
pub fn project_control(p: &[f64], a: f64, lower: f64, upper: f64) -> Result<Vec<f64>> {
    if !(a > 0.0) {
        return Err(Error::config("regularization parameter a must be positive"));
    }
    let bounds = ControlBounds::new(lower, upper)?;
    Ok(p.iter().map(|&p| bounds.clamp(-p / a)).collect())
}

/// Assembled matrices and data loads of one problem on one discretization.
pub struct OcpSystem<'a> {
    pub disc: &'a Discretization,
    pub problem: &'a ProblemSpec,
    pub quad: QuadratureOrder,
    pub stiffness: SparseSymMatrix,
    pub mass: SparseSymMatrix,
    pub partition: DofPartition,
    /// Full-length vector holding `y_b` on the Dirichlet DOFs.
    pub state_boundary: Vec<f64>,
    /// `(f, φ) + (k₂g, φ₁)_Γ + (k₁g, φ₂)_Γ`
    pub state_load: Vec<f64>,
    /// `−(y_d, φ) + (k₂g_p, φ₁)_Γ + (k₁g_p, φ₂)_Γ`
    pub adjoint_load: Vec<f64>,
    a_ff: CsrMatrix,
    a_fb: CsrMatrix,
    m_ff: CsrMatrix,
    m_fb: CsrMatrix,
}

impl<'a> OcpSystem<'a> {
    pub fn new(disc: &'a Discretization, problem: &'a ProblemSpec, quad: QuadratureOrder) -> Result<Self> {
        problem.validate()?;
        let params = NitscheParams::from_lambda_coef(problem.lambda_coef, problem.alpha)?;
        let stiffness = assemble_stiffness(disc, problem.alpha, params, quad)?;
        let mass = assemble_mass(disc, quad)?;
        let state_load = assemble_load(
            disc,
            problem.source.as_ref(),
            problem.flux_jump.as_ref(),
            ControlField::Zero,
            quad,
        )?;
        let neg_target = |x: Point2, s: Side| -(problem.target)(x, s);
        let adjoint_load = assemble_load(
            disc,
            &neg_target,
            problem.adjoint_flux_jump.as_ref(),
            ControlField::Zero,
            quad,
        )?;
        let state_boundary = dirichlet_values(disc, problem.boundary.as_ref());
        let partition = DofPartition::new(disc);
        let (f, b) = (&partition.free, &partition.fixed);
        Ok(Self {
            a_ff: stiffness.submatrix(f, f),
            a_fb: stiffness.submatrix(f, b),
            m_ff: mass.submatrix(f, f),
            m_fb: mass.submatrix(f, b),
            disc,
            problem,
            quad,
            stiffness,
            mass,
            partition,
            state_boundary,
            state_load,
            adjoint_load,
        })
    }

    pub fn num_free(&self) -> usize {
        self.partition.free.len()
    }

    /// Stiffness matrix restricted to the free DOFs.
    pub fn reduced_stiffness(&self) -> &CsrMatrix {
        &self.a_ff
    }

    pub fn reduced_mass(&self) -> &CsrMatrix {
        &self.m_ff
    }

    fn boundary_fixed(&self) -> Vec<f64> {
        self.partition.restrict_fixed(&self.state_boundary)
    }

    /// Free part of the state right-hand side for the given control.
    pub fn state_rhs(&self, control: ControlField<'_>) -> Result<Vec<f64>> {
        let control_load = match control {
            ControlField::Zero => None,
            c => Some(assemble_load(self.disc, &|_, _| 0.0, &|_, _| 0.0, c, self.quad)?),
        };
        let coupling = self.a_fb.mul_vec(&self.boundary_fixed());
        Ok(self
            .partition
            .free
            .iter()
            .zip(coupling)
            .map(|(&d, c)| self.state_load[d] + control_load.as_ref().map_or(0.0, |l| l[d]) - c)
            .collect())
    }

    /// Free part of the co-state right-hand side `M Y + F₂` for a full state vector.
    pub fn adjoint_rhs(&self, state: &[f64]) -> Vec<f64> {
        let yf = self.partition.restrict(state);
        let yb = self.partition.restrict_fixed(state);
        let m1 = self.m_ff.mul_vec(&yf);
        let m2 = self.m_fb.mul_vec(&yb);
        self.partition
            .free
            .iter()
            .enumerate()
            .map(|(i, &d)| m1[i] + m2[i] + self.adjoint_load[d])
            .collect()
    }

    pub fn expand_state(&self, free: &[f64]) -> Vec<f64> {
        self.partition.expand(free, &self.state_boundary)
    }

    pub fn expand_costate(&self, free: &[f64]) -> Vec<f64> {
        self.partition.expand(free, &vec![0.0; self.disc.num_dofs()])
    }

    pub fn spd_solver(&self, config: LinearSolverConfig) -> Result<SpdSolver> {
        SpdSolver::new(&self.a_ff, config)
    }

    /// Relative residuals of the discrete state and co-state equations on the free DOFs.
    pub fn residuals(&self, state: &[f64], costate: &[f64], control: ControlField<'_>) -> Result<(f64, f64)> {
        let rs = relative_residual(&self.a_ff, &self.partition.restrict(state), &self.state_rhs(control)?);
        let ra = relative_residual(&self.a_ff, &self.partition.restrict(costate), &self.adjoint_rhs(state));
        Ok((rs, ra))
    }
}

fn checked_solve(solver: &SpdSolver, a: &CsrMatrix, b: &[f64], config: LinearSolverConfig) -> Result<Vec<f64>> {
    let x = solver.solve(b)?;
    let res = relative_residual(a, &x, b);
    let bound = match config.method {
        LinearSolverMethod::Direct => (1e-10f64).max(1e-14 / norm2(b).max(1e-300)),
        LinearSolverMethod::ConjugateGradient => config.tol * 10.0,
    };
    if norm2(b) > 0.0 && !(res <= bound) {
        return Err(Error::Solver {
            message: "linear solve residual check failed".into(),
            residual: res,
        });
    }
    Ok(x)
}

/// Forward problem for a given control; returns the full state vector.
pub fn solve_state(system: &OcpSystem<'_>, control: ControlField<'_>, config: LinearSolverConfig) -> Result<Vec<f64>> {
    let solver = system.spd_solver(config)?;
    let rhs = system.state_rhs(control)?;
    let y = checked_solve(&solver, system.reduced_stiffness(), &rhs, config)?;
    Ok(system.expand_state(&y))
}

/// Unconstrained problem through the symmetric block system in `(P, Y)`:
///
/// ```text
/// [ M/a   A ] [P]   [F₁ − A_fb Y_b]
/// [ A    −M ] [Y] = [F₂ + M_fb Y_b]
/// ```
///
/// The conjugate-gradient path instead iterates on the Schur complement
/// `M/a + A M⁻¹ A` for `P` and recovers `Y` from the state equation.
/// Relative accuracy of the inner solves inside the Schur preconditioner.
const PRECONDITIONER_TOL: f64 = 1e-10;

pub fn solve_unconstrained_ocp(system: &OcpSystem<'_>, config: LinearSolverConfig) -> Result<OcpSolution> {
    let a = system.problem.regularization;
    let n = system.num_free();
    let r1 = system.state_rhs(ControlField::Zero)?;
    // F₂ + M_fb Y_b: adjoint_rhs of the boundary lift alone.
    let r2 = system.adjoint_rhs(&system.state_boundary);
    let (pf, yf) = match config.method {
        LinearSolverMethod::Direct => {
            let m_scaled = system.m_ff.scaled(1.0 / a);
            let m_neg = system.m_ff.scaled(-1.0);
            let k = block_matrix(
                &[n, n],
                &[n, n],
                &[(0, 0, &m_scaled), (0, 1, &system.a_ff), (1, 0, &system.a_ff), (1, 1, &m_neg)],
            );
            let rhs: Vec<f64> = r1.iter().chain(&r2).copied().collect();
            let lu = LuSolver::new(&k)?;
            let mut x = lu.solve(&rhs);
            // Two steps of iterative refinement; the block system is badly
            // conditioned for small a and large penalties.
            for _ in 0..2 {
                let kx = k.mul_vec(&x);
                let r: Vec<f64> = rhs.iter().zip(&kx).map(|(b, v)| b - v).collect();
                let dx = lu.solve(&r);
                x.iter_mut().zip(&dx).for_each(|(x, d)| *x += d);
            }
            let res = relative_residual(&k, &x, &rhs);
            if !(res <= 1e-9) {
                return Err(Error::Solver {
                    message: "block system residual check failed".into(),
                    residual: res,
                });
            }
            (x[..n].to_vec(), x[n..].to_vec())
        }
        LinearSolverMethod::ConjugateGradient => {
            let inner = LinearSolverConfig {
                tol: (config.tol * 1e-2).max(1e-16),
                ..config
            };
            let m_solver = SpdSolver::new(&system.m_ff, inner)?;
            let m_inv = |v: &[f64]| m_solver.solve(v);
            let mr2 = m_inv(&r2)?;
            let ar2 = system.a_ff.mul_vec(&mr2);
            let rhs: Vec<f64> = r1.iter().zip(&ar2).map(|(x, y)| x + y).collect();
            // S = M/a + A M⁻¹ A is preconditioned by A⁻¹ M A⁻¹, which leaves
            // I + (M A⁻¹)²/a: bounded spectrum, independent of h and λ.
            let a_solver = system.spd_solver(LinearSolverConfig {
                tol: PRECONDITIONER_TOL.max(inner.tol),
                ..inner
            })?;
            let failed = std::cell::Cell::new(None);
            let guard = |r: Result<Vec<f64>>, n: usize| {
                r.unwrap_or_else(|e| {
                    failed.set(Some(e.to_string()));
                    vec![0.0; n]
                })
            };
            let apply = |p: &[f64]| {
                let ap = system.a_ff.mul_vec(p);
                let map = guard(m_inv(&ap), p.len());
                let aap = system.a_ff.mul_vec(&map);
                let mp = system.m_ff.mul_vec(p);
                mp.iter().zip(aap).map(|(m, x)| m / a + x).collect::<Vec<_>>()
            };
            let precondition = |r: &[f64]| {
                let t = guard(a_solver.solve(r), r.len());
                guard(a_solver.solve(&system.m_ff.mul_vec(&t)), r.len())
            };
            let out = crate::solver::linear::pcg(&apply, &precondition, &rhs, None, config.tol, config.max_iter)?;
            if let Some(msg) = failed.take() {
                return Err(Error::Solver {
                    message: format!("inner solve failed: {msg}"),
                    residual: f64::NAN,
                });
            }
            log::debug!("schur cg: {} iterations", out.iterations);
            let p = out.solution;
            // Y from the state equation A Y = r₁ − M P / a, which does not
            // amplify the error of P by the penalty scale of A.
            let mp = system.m_ff.mul_vec(&p);
            let t: Vec<f64> = r1.iter().zip(&mp).map(|(r, m)| r - m / a).collect();
            let y = system.spd_solver(inner)?.solve(&t)?;
            (p, y)
        }
    };
    let state = system.expand_state(&yf);
    let costate = system.expand_costate(&pf);
    let control: Vec<f64> = costate.iter().map(|p| -p / a).collect();
    let (rs, ra) = system.residuals(&state, &costate, ControlField::Dofs(&control))?;
    Ok(OcpSolution {
        state,
        costate,
        control_dofs: Some(control),
        regularization: a,
        bounds: ControlBounds::unbounded(),
        iterations: 1,
        converged: true,
        history: vec![IterationRecord {
            iteration: 1,
            increment: 0.0,
            state_residual: rs,
            adjoint_residual: ra,
        }],
    })
}

/// `‖clamp(−p/a) − clamp(−q/a)‖_{L²} / |Ω|^{1/2}`, evaluated at the
/// volume quadrature points of the kink-refined integration mesh of `p`.
pub fn control_difference(
    disc: &Discretization,
    p: &[f64],
    q: &[f64],
    a: f64,
    bounds: ControlBounds,
    quad: QuadratureOrder,
) -> Result<f64> {
    let rule = TriangleRule::new(quad.volume_degree)?;
    let mut sum = 0.0;
    for e in 0..disc.mesh.num_triangles() {
        let mut pieces = Vec::with_capacity(3);
        disc.cut_info.for_each_piece(&disc.mesh, e, |s, t| pieces.push((s, *t)));
        for (side, piece) in pieces {
            let xi = |x: Point2| -eval_discrete(disc, p, e, side, x) / a;
            for_each_control_point(&rule, &piece, &xi, bounds, &mut |x, w, u| {
                let v = bounds.clamp(-eval_discrete(disc, q, e, side, x) / a);
                sum += w * (bounds.clamp(u) - v).powi(2);
            });
        }
    }
    Ok((sum / disc.mesh.rect.area()).sqrt())
}

/// Projected fixed-point iteration `u ← clamp(−p_h(u)/a)` from `u⁰ = 0`.
/// Reaching `max_iter` returns the last iterate with `converged = false`.
pub fn solve_constrained_fixed_point(
    system: &OcpSystem<'_>,
    linear: LinearSolverConfig,
    iteration: IterationConfig,
) -> Result<OcpSolution> {
    let a = system.problem.regularization;
    let bounds = system.problem.bounds;
    let solver = system.spd_solver(linear)?;
    let n_dofs = system.disc.num_dofs();
    let mut costate: Option<Vec<f64>> = None;
    let mut state = vec![0.0; n_dofs];
    let mut history = Vec::new();
    let mut converged = false;
    for it in 1..=iteration.max_iter {
        let control = match &costate {
            None => ControlField::Zero,
            Some(p) => ControlField::Projected {
                costate: p,
                regularization: a,
                bounds,
            },
        };
        let rhs = system.state_rhs(control)?;
        let yf = checked_solve(&solver, system.reduced_stiffness(), &rhs, linear)?;
        let state_residual = relative_residual(system.reduced_stiffness(), &yf, &rhs);
        state = system.expand_state(&yf);
        let prhs = system.adjoint_rhs(&state);
        let pf = checked_solve(&solver, system.reduced_stiffness(), &prhs, linear)?;
        let adjoint_residual = relative_residual(system.reduced_stiffness(), &pf, &prhs);
        let p_new = system.expand_costate(&pf);
        let previous = costate.clone().unwrap_or_else(|| vec![0.0; n_dofs]);
        let increment = control_difference(system.disc, &p_new, &previous, a, bounds, system.quad)?;
        log::debug!("fixed point {it}: increment {increment:.3e}");
        history.push(IterationRecord {
            iteration: it,
            increment,
            state_residual,
            adjoint_residual,
        });
        costate = Some(p_new);
        if increment < iteration.tol {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!("fixed-point iteration stopped after {} iterations without convergence", iteration.max_iter);
    }
    Ok(OcpSolution {
        state,
        costate: costate.unwrap_or_else(|| vec![0.0; n_dofs]),
        control_dofs: None,
        regularization: a,
        bounds,
        iterations: history.len(),
        converged,
        history,
    })
}

/// `M_I(i, j) = (φ_i, φ_j)` restricted to the inactive set `u_a < −p_h/a < u_b`.
fn assemble_inactive_mass(system: &OcpSystem<'_>, costate: &[f64]) -> Result<CsrMatrix> {
    let disc = system.disc;
    let a = system.problem.regularization;
    let bounds = system.problem.bounds;
    let rule = TriangleRule::new(system.quad.volume_degree)?;
    let mut triplets = Vec::new();
    for e in 0..disc.mesh.num_triangles() {
        let tri = disc.mesh.triangle_points(e);
        let mut pieces = Vec::with_capacity(3);
        disc.cut_info.for_each_piece(&disc.mesh, e, |s, t| pieces.push((s, *t)));
        for (side, piece) in pieces {
            let dofs = disc.space.element_dofs(&disc.mesh, e, side);
            let xi = |x: Point2| -eval_discrete(disc, costate, e, side, x) / a;
            let mut local = [[0.0; 3]; 3];
            for_each_control_point(&rule, &piece, &xi, bounds, &mut |x, w, u| {
                if bounds.is_inactive(u) {
                    let l = crate::xfem::barycentric(&tri, x);
                    for i in 0..3 {
                        for j in 0..3 {
                            local[i][j] += w * l[i] * l[j];
                        }
                    }
                }
            });
            for i in 0..3 {
                for j in 0..3 {
                    if local[i][j] != 0.0 {
                        triplets.push((dofs[i], dofs[j], local[i][j]));
                    }
                }
            }
        }
    }
    let n = disc.num_dofs();
    let f = &system.partition.free;
    Ok(CsrMatrix::from_triplets(n, n, triplets).submatrix(f, f))
}

/// Semi-smooth Newton on `(Y, P)` for the nonsmooth optimality system,
/// started from the unconstrained solution. Each step solves
///
/// ```text
/// [ A    M_I/a ] [δY]     [A Y − (clamp(−p/a), φ) − F₁]
/// [ −M   A     ] [δP] = − [A P − M Y − F₂             ]
/// ```
///
/// Stops when the DOF max-norm of the step falls below `tol`.
pub fn solve_constrained_ssn(system: &OcpSystem<'_>, iteration: IterationConfig) -> Result<OcpSolution> {
    let a = system.problem.regularization;
    let bounds = system.problem.bounds;
    let n = system.num_free();
    let start = solve_unconstrained_ocp(system, LinearSolverConfig::direct())?;
    let mut yf = system.partition.restrict(&start.state);
    let mut pf = system.partition.restrict(&start.costate);
    let mut history = Vec::new();
    let mut converged = false;
    for it in 1..=iteration.max_iter {
        let state = system.expand_state(&yf);
        let costate = system.expand_costate(&pf);
        let rhs1 = system.state_rhs(ControlField::Projected {
            costate: &costate,
            regularization: a,
            bounds,
        })?;
        let rhs2 = system.adjoint_rhs(&state);
        let ay = system.a_ff.mul_vec(&yf);
        let ap = system.a_ff.mul_vec(&pf);
        let mut residual: Vec<f64> = ay.iter().zip(&rhs1).map(|(x, b)| -(x - b)).collect();
        residual.extend(ap.iter().zip(&rhs2).map(|(x, b)| -(x - b)));
        let mi = assemble_inactive_mass(system, &costate)?.scaled(1.0 / a);
        let m_neg = system.m_ff.scaled(-1.0);
        let jac = block_matrix(
            &[n, n],
            &[n, n],
            &[(0, 0, &system.a_ff), (0, 1, &mi), (1, 0, &m_neg), (1, 1, &system.a_ff)],
        );
        let step = LuSolver::new(&jac)?.solve(&residual);
        for i in 0..n {
            yf[i] += step[i];
            pf[i] += step[n + i];
        }
        let increment = max_abs_diff(&step, &vec![0.0; 2 * n]);
        let state_residual = relative_residual(&system.a_ff, &yf, &system.state_rhs(ControlField::Projected {
            costate: &system.expand_costate(&pf),
            regularization: a,
            bounds,
        })?);
        let adjoint_residual = relative_residual(&system.a_ff, &pf, &system.adjoint_rhs(&system.expand_state(&yf)));
        log::debug!("ssn {it}: step {increment:.3e}");
        history.push(IterationRecord {
            iteration: it,
            increment,
            state_residual,
            adjoint_residual,
        });
        if increment < iteration.tol {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!("semi-smooth Newton stopped after {} iterations without convergence", iteration.max_iter);
    }
    Ok(OcpSolution {
        state: system.expand_state(&yf),
        costate: system.expand_costate(&pf),
        control_dofs: None,
        regularization: a,
        bounds,
        iterations: history.len(),
        converged,
        history,
    })
}
