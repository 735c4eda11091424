//! Error norms against exact fields: L², broken H¹ seminorm and the
//! mesh-dependent norm
//!
//! ```text
//! |||v|||² = ‖∇v‖²_{Ω₁∪Ω₂} + Σ_T h_T ‖{∇_n v}‖²_{Γ_T} + Σ_T h_T⁻¹ ‖[v]‖²_{Γ_T}
//! ```

use std::fmt;

use rayon::prelude::*;

use crate::assembly::{eval_discrete, eval_discrete_gradient, for_each_control_point, QuadratureOrder};
use crate::discretization::Discretization;
use crate::error::Result;
use crate::interface::TriangleRule;
use crate::mesh::{Point2, Vec2};
use crate::problem::{ControlBounds, Side};
use crate::solver::OcpSolution;
use crate::study::examples::ManufacturedProblem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Field {
    Control,
    State,
    Costate,
}

impl Field {
    pub const ALL: [Field; 3] = [Field::Control, Field::State, Field::Costate];

    pub fn symbol(self) -> &'static str {
        match self {
            Field::Control => "u",
            Field::State => "y",
            Field::Costate => "p",
        }
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Norm {
    L2,
    H1,
    Triple,
}

impl Norm {
    pub const ALL: [Norm; 3] = [Norm::L2, Norm::H1, Norm::Triple];

    pub fn label(self) -> &'static str {
        match self {
            Norm::L2 => "L2",
            Norm::H1 => "H1",
            Norm::Triple => "triple",
        }
    }
}

impl fmt::Display for Norm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Absolute norms of the error and of the exact field.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FieldError {
    pub l2: f64,
    pub h1: f64,
    pub triple: f64,
    pub exact_l2: f64,
    pub exact_h1: f64,
    pub exact_triple: f64,
}

impl FieldError {
    pub fn absolute(&self, norm: Norm) -> f64 {
        match norm {
            Norm::L2 => self.l2,
            Norm::H1 => self.h1,
            Norm::Triple => self.triple,
        }
    }

    pub fn relative(&self, norm: Norm) -> f64 {
        let exact = match norm {
            Norm::L2 => self.exact_l2,
            Norm::H1 => self.exact_h1,
            Norm::Triple => self.exact_triple,
        };
        self.absolute(norm) / exact
    }
}

/// Errors of control, state and co-state, reported relative or absolute.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorReport {
    pub control: FieldError,
    pub state: FieldError,
    pub costate: FieldError,
    pub relative: bool,
}

impl ErrorReport {
    pub fn field(&self, field: Field) -> &FieldError {
        match field {
            Field::Control => &self.control,
            Field::State => &self.state,
            Field::Costate => &self.costate,
        }
    }

    /// The value in the table convention (relative or absolute).
    pub fn value(&self, field: Field, norm: Norm) -> f64 {
        let f = self.field(field);
        if self.relative {
            f.relative(norm)
        } else {
            f.absolute(norm)
        }
    }
}

/// Value and gradient of a field on one side.
pub type SideEval<'a> = &'a (dyn Fn(Point2, Side) -> (f64, Vec2) + Sync);
/// Value and gradient of a discrete field on `side` of element `e`.
pub type ElementEval<'a> = &'a (dyn Fn(usize, Side, Point2) -> (f64, Vec2) + Sync);

/// Refinement of the volume quadrature along the kinks of `clamp(−p_h/a)`.
#[derive(Clone, Copy)]
pub struct KinkRefinement<'a> {
    pub costate: &'a [f64],
    pub regularization: f64,
    pub bounds: ControlBounds,
}

/// Absolute error norms of `discrete − exact`, plus the norms of `exact`.
pub fn field_error(
    disc: &Discretization,
    exact: SideEval<'_>,
    discrete: ElementEval<'_>,
    refine: Option<KinkRefinement<'_>>,
    quad: QuadratureOrder,
) -> Result<FieldError> {
    let rule = TriangleRule::new(quad.volume_degree)?;
    let mesh = &disc.mesh;
    // [e², |∇e|², flux/jump part of e, same three for the exact field]
    let parts: Vec<[f64; 6]> = (0..mesh.num_triangles())
        .into_par_iter()
        .map(|e| -> Result<[f64; 6]> {
            let mut acc = [0.0; 6];
            let mut pieces = Vec::with_capacity(3);
            disc.cut_info.for_each_piece(mesh, e, |s, t| pieces.push((s, *t)));
            for (side, piece) in pieces {
                let mut add = |x: Point2, w: f64| {
                    let (v, g) = exact(x, side);
                    let (vh, gh) = discrete(e, side, x);
                    let ge = gh - g;
                    acc[0] += w * (vh - v).powi(2);
                    acc[1] += w * ge.dot(ge);
                    acc[3] += w * v * v;
                    acc[4] += w * g.dot(g);
                };
                match refine {
                    Some(r) if !r.bounds.is_unbounded() => {
                        let xi = |x: Point2| -eval_discrete(disc, r.costate, e, side, x) / r.regularization;
                        for_each_control_point(&rule, &piece, &xi, r.bounds, &mut |x, w, _| add(x, w));
                    }
                    _ => rule.for_each(&piece, &mut add),
                }
            }
            if let Some(cut) = disc.cut_info.cut(e) {
                let h_t = mesh.element_diameter(e);
                let n = cut.flux_normal();
                for (x, w) in cut.segment_rule(quad.interface_points)?.iter() {
                    let (v1, g1) = exact(x, Side::One);
                    let (v2, g2) = exact(x, Side::Two);
                    let (w1, h1) = discrete(e, Side::One, x);
                    let (w2, h2) = discrete(e, Side::Two, x);
                    let avg = |a: Vec2, b: Vec2| cut.k[0] * a.dot(n) + cut.k[1] * b.dot(n);
                    let flux_e = avg(h1 - g1, h2 - g2);
                    let jump_e = (w1 - v1) - (w2 - v2);
                    acc[2] += w * (h_t * flux_e * flux_e + jump_e * jump_e / h_t);
                    let flux_x = avg(g1, g2);
                    let jump_x = v1 - v2;
                    acc[5] += w * (h_t * flux_x * flux_x + jump_x * jump_x / h_t);
                }
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let mut s = [0.0; 6];
    for p in &parts {
        for i in 0..6 {
            s[i] += p[i];
        }
    }
    Ok(FieldError {
        l2: s[0].sqrt(),
        h1: s[1].sqrt(),
        triple: (s[1] + s[2]).sqrt(),
        exact_l2: s[3].sqrt(),
        exact_h1: s[4].sqrt(),
        exact_triple: (s[4] + s[5]).sqrt(),
    })
}

/// Evaluates a coefficient vector as a discrete function.
pub fn discrete_eval<'a>(disc: &'a Discretization, coeffs: &'a [f64]) -> impl Fn(usize, Side, Point2) -> (f64, Vec2) + Sync + 'a {
    move |e, side, x| {
        (
            eval_discrete(disc, coeffs, e, side, x),
            eval_discrete_gradient(disc, coeffs, e, side),
        )
    }
}

/// Errors of a computed solution against a manufactured problem.
pub fn compute_errors(
    disc: &Discretization,
    problem: &ManufacturedProblem,
    solution: &OcpSolution,
    quad: QuadratureOrder,
) -> Result<ErrorReport> {
    let a = solution.regularization;
    let bounds = solution.bounds;
    let refine = Some(KinkRefinement {
        costate: &solution.costate,
        regularization: a,
        bounds,
    });
    let y_exact = |x: Point2, s: Side| {
        let j = problem.state_jet(x, s);
        (j.value, j.grad)
    };
    let p_exact = |x: Point2, s: Side| {
        let j = problem.costate_jet(x, s);
        (j.value, j.grad)
    };
    let u_exact = |x: Point2, s: Side| (problem.control(x, s), problem.control_gradient(x, s));
    let y_h = discrete_eval(disc, &solution.state);
    let p_h = discrete_eval(disc, &solution.costate);
    let u_h = |e: usize, s: Side, x: Point2| {
        let (p, g) = p_h(e, s, x);
        let xi = -p / a;
        let grad = if bounds.is_inactive(xi) { g * (-1.0 / a) } else { Vec2::default() };
        (bounds.clamp(xi), grad)
    };
    Ok(ErrorReport {
        control: field_error(disc, &u_exact, &u_h, refine, quad)?,
        state: field_error(disc, &y_exact, &y_h, refine, quad)?,
        costate: field_error(disc, &p_exact, &p_h, refine, quad)?,
        relative: problem.relative_errors,
    })
}
