//! Manufactured benchmark problems.
//!
//! Each example prescribes per-side state `y` and a base field `φ` with
//! `p = −aφ`; the control is `u = clamp(φ)` and the data follow from
//!
//! ```text
//! f   = −α Δy − u
//! y_d = y + α Δp
//! g   = (α₁∇y₁ − α₂∇y₂)·n,   g_p = (α₁∇p₁ − α₂∇p₂)·n
//! ```

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::interface::LevelSet;
use crate::mesh::{Point2, Rect, Vec2};
use crate::problem::{ControlBounds, ProblemSpec, Side};

/// Value, gradient and Laplacian of a scalar field at one point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Jet {
    pub value: f64,
    pub grad: Vec2,
    pub lap: f64,
}

impl Jet {
    pub fn constant(c: f64) -> Self {
        Self {
            value: c,
            ..Self::default()
        }
    }

    pub fn x1(p: Point2) -> Self {
        Self {
            value: p.x,
            grad: Vec2::new(1.0, 0.0),
            lap: 0.0,
        }
    }

    pub fn x2(p: Point2) -> Self {
        Self {
            value: p.y,
            grad: Vec2::new(0.0, 1.0),
            lap: 0.0,
        }
    }

    /// `h ∘ self` given `h`, `h'`, `h''` at `self.value`.
    pub fn compose(self, h: f64, dh: f64, d2h: f64) -> Self {
        Self {
            value: h,
            grad: self.grad * dh,
            lap: d2h * self.grad.dot(self.grad) + dh * self.lap,
        }
    }

    pub fn sin(self) -> Self {
        let (s, c) = self.value.sin_cos();
        self.compose(s, c, -s)
    }

    pub fn cos(self) -> Self {
        let (s, c) = self.value.sin_cos();
        self.compose(c, -s, -c)
    }

    pub fn cube(self) -> Self {
        let v = self.value;
        self.compose(v * v * v, 3.0 * v * v, 6.0 * v)
    }

    pub fn exp(self) -> Self {
        let e = self.value.exp();
        self.compose(e, e, e)
    }

    /// `r³` with `r = |x|`, smooth enough at the origin for the Laplacian `9r`.
    pub fn radius_cubed(p: Point2) -> Self {
        let r = p.norm();
        Self {
            value: r * r * r,
            grad: p * (3.0 * r),
            lap: 9.0 * r,
        }
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        Jet {
            value: self.value + o.value,
            grad: self.grad + o.grad,
            lap: self.lap + o.lap,
        }
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        self + (-o)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self * -1.0
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, s: f64) -> Jet {
        Jet {
            value: self.value * s,
            grad: self.grad * s,
            lap: self.lap * s,
        }
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        Jet {
            value: self.value * o.value,
            grad: o.grad * self.value + self.grad * o.value,
            lap: self.value * o.lap + o.value * self.lap + 2.0 * self.grad.dot(o.grad),
        }
    }
}

pub type JetField = Arc<dyn Fn(Point2, Side) -> Jet + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExampleId {
    /// Straight interface on the unit square.
    Example1,
    /// Circle `r = √3/4` with box constraints.
    Example2,
    /// Circle `r = 1/2`, flux-continuous state.
    Example3,
    /// Smooth problem without interface (plain P1 limit).
    Smooth,
}

impl ExampleId {
    pub fn number(self) -> Option<u8> {
        match self {
            ExampleId::Example1 => Some(1),
            ExampleId::Example2 => Some(2),
            ExampleId::Example3 => Some(3),
            ExampleId::Smooth => None,
        }
    }
}

impl FromStr for ExampleId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "1" | "example1" => Ok(ExampleId::Example1),
            "2" | "example2" => Ok(ExampleId::Example2),
            "3" | "example3" => Ok(ExampleId::Example3),
            "smooth" => Ok(ExampleId::Smooth),
            other => Err(Error::config(format!("unknown example id '{other}'"))),
        }
    }
}

impl fmt::Display for ExampleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.number() {
            Some(n) => write!(f, "example{n}"),
            None => write!(f, "smooth"),
        }
    }
}

/// Optional replacements of an example's default parameters.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ExampleOverrides {
    pub lambda_coef: Option<f64>,
    pub regularization: Option<f64>,
    pub bounds: Option<ControlBounds>,
}

/// A problem with known exact solution.
#[derive(Clone)]
pub struct ManufacturedProblem {
    pub id: ExampleId,
    pub spec: ProblemSpec,
    pub state: JetField,
    /// Base field `φ`; the co-state is `−aφ`.
    pub base: JetField,
    /// Whether the reference tables report relative errors.
    pub relative_errors: bool,
}

impl fmt::Debug for ManufacturedProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ManufacturedProblem")
            .field("id", &self.id)
            .field("spec", &self.spec)
            .field("relative_errors", &self.relative_errors)
            .finish_non_exhaustive()
    }
}

impl ManufacturedProblem {
    pub fn state_jet(&self, x: Point2, side: Side) -> Jet {
        (self.state)(x, side)
    }

    pub fn costate_jet(&self, x: Point2, side: Side) -> Jet {
        (self.base)(x, side) * -self.spec.regularization
    }

    pub fn control(&self, x: Point2, side: Side) -> f64 {
        self.spec.bounds.clamp((self.base)(x, side).value)
    }

    /// Gradient of the control (zero on the active set).
    pub fn control_gradient(&self, x: Point2, side: Side) -> Vec2 {
        let phi = (self.base)(x, side);
        if self.spec.bounds.is_inactive(phi.value) {
            phi.grad
        } else {
            Vec2::default()
        }
    }
}

/// Example with the given id and default parameters.
pub fn build_example(id: ExampleId) -> ManufacturedProblem {
    build_example_with(id, ExampleOverrides::default())
}

pub fn build_example_with(id: ExampleId, overrides: ExampleOverrides) -> ManufacturedProblem {
    let def = defaults(id);
    let a = overrides.regularization.unwrap_or(def.regularization);
    let bounds = overrides.bounds.unwrap_or(def.bounds);
    let lambda_coef = overrides.lambda_coef.unwrap_or(def.lambda_coef);
    assemble(id, def, a, bounds, lambda_coef)
}

struct Defaults {
    domain: Rect,
    level_set: LevelSet,
    alpha: [f64; 2],
    regularization: f64,
    bounds: ControlBounds,
    lambda_coef: f64,
    state: JetField,
    base: JetField,
    relative_errors: bool,
}

pub const EXAMPLE1_SLOPE: f64 = -0.577_350_269_189_625_8;

/// Intercept `(6 + √6 − 2√3)/6` of the Example 1 interface line.
pub fn example1_intercept() -> f64 {
    (6.0 + 6f64.sqrt() - 2.0 * 3f64.sqrt()) / 6.0
}

pub fn example2_radius() -> f64 {
    3f64.sqrt() / 4.0
}

pub const EXAMPLE3_RADIUS: f64 = 0.5;

/// `5(R − r²)(x₁² − 1)(x₂² − 1)` with `R = |x|²`.
fn bubble(p: Point2, r: f64) -> Jet {
    let (x1, x2) = (Jet::x1(p), Jet::x2(p));
    let one = Jet::constant(1.0);
    let e = x1 * x1 + x2 * x2 - Jet::constant(r * r);
    e * (x1 * x1 - one) * (x2 * x2 - one) * 5.0
}

/// `r³/α_m`, shifted on side 2 so that the state is continuous at `|x| = r₀`.
fn radial_state(p: Point2, side: Side, alpha: [f64; 2], r0: f64) -> Jet {
    match side {
        Side::One => Jet::radius_cubed(p) * (1.0 / alpha[0]),
        Side::Two => {
            Jet::radius_cubed(p) * (1.0 / alpha[1])
                + Jet::constant((1.0 / alpha[0] - 1.0 / alpha[1]) * r0.powi(3))
        }
    }
}

fn defaults(id: ExampleId) -> Defaults {
    match id {
        ExampleId::Example1 => {
            let (k, b) = (EXAMPLE1_SLOPE, example1_intercept());
            let line = move |p: Point2| Jet::x2(p) - Jet::x1(p) * k - Jet::constant(b);
            Defaults {
                domain: Rect::unit_square(),
                level_set: LevelSet::line(k, b),
                alpha: [1.0, 100.0],
                regularization: 0.01,
                bounds: ControlBounds::unbounded(),
                lambda_coef: 1000.0,
                state: Arc::new(move |p, side| {
                    let l = line(p);
                    let c = (Jet::x1(p) * Jet::x2(p)).cos();
                    match side {
                        Side::One => l * c * (1.0 / 200.0) + l.cube(),
                        Side::Two => l * c * 0.5,
                    }
                }),
                base: Arc::new(move |p, side| {
                    let (x1, x2) = (Jet::x1(p), Jet::x2(p));
                    let one = Jet::constant(1.0);
                    let q = x1 * (x1 - one) * x2 * (x2 - one);
                    let v = line(p) * q * (x1 * x2).sin();
                    match side {
                        Side::One => v,
                        Side::Two => v * 100.0,
                    }
                }),
                relative_errors: true,
            }
        }
        ExampleId::Example2 => {
            let r0 = example2_radius();
            let alpha = [1.0, 1000.0];
            Defaults {
                domain: Rect::symmetric_square(),
                level_set: LevelSet::circle(Point2::default(), r0),
                alpha,
                regularization: 1.0,
                bounds: ControlBounds {
                    lower: -0.5,
                    upper: 0.5,
                },
                lambda_coef: 5000.0,
                state: Arc::new(move |p, side| {
                    let base = radial_state(p, side, alpha, r0);
                    match side {
                        Side::One => {
                            let (x1, x2) = (Jet::x1(p), Jet::x2(p));
                            let e = x1 * x1 + x2 * x2 - Jet::constant(r0 * r0);
                            base - e * (x1 * x2).sin() * 10.0
                        }
                        Side::Two => base,
                    }
                }),
                base: Arc::new(move |p, side| bubble(p, r0) * (1.0 / alpha[side.index()])),
                relative_errors: true,
            }
        }
        ExampleId::Example3 => {
            let r0 = EXAMPLE3_RADIUS;
            let alpha = [1.0, 10.0];
            Defaults {
                domain: Rect::symmetric_square(),
                level_set: LevelSet::circle(Point2::default(), r0),
                alpha,
                regularization: 0.01,
                bounds: ControlBounds::unbounded(),
                lambda_coef: 10000.0,
                state: Arc::new(move |p, side| radial_state(p, side, alpha, r0)),
                base: Arc::new(move |p, side| bubble(p, r0) * (1.0 / alpha[side.index()])),
                relative_errors: false,
            }
        }
        ExampleId::Smooth => Defaults {
            domain: Rect::unit_square(),
            level_set: LevelSet::constant(-1.0),
            alpha: [1.0, 1.0],
            regularization: 0.1,
            bounds: ControlBounds::unbounded(),
            lambda_coef: 10.0,
            state: Arc::new(|p, _| {
                let s = (Jet::x1(p) * PI).sin() * (Jet::x2(p) * PI).sin();
                s + Jet::x1(p) * Jet::x2(p).exp()
            }),
            base: Arc::new(|p, _| (Jet::x1(p) * PI).sin() * (Jet::x2(p) * (2.0 * PI)).sin() * Jet::x1(p).cos()),
            relative_errors: true,
        },
    }
}

fn assemble(id: ExampleId, def: Defaults, a: f64, bounds: ControlBounds, lambda_coef: f64) -> ManufacturedProblem {
    let alpha = def.alpha;
    let (state, base) = (def.state, def.base);
    let source = {
        let (state, base) = (state.clone(), base.clone());
        Arc::new(move |x: Point2, s: Side| {
            -alpha[s.index()] * state(x, s).lap - bounds.clamp(base(x, s).value)
        })
    };
    let target = {
        let (state, base) = (state.clone(), base.clone());
        Arc::new(move |x: Point2, s: Side| state(x, s).value - a * alpha[s.index()] * base(x, s).lap)
    };
    let boundary = {
        let state = state.clone();
        Arc::new(move |x: Point2, s: Side| state(x, s).value)
    };
    let flux_jump = {
        let state = state.clone();
        Arc::new(move |x: Point2, n: Vec2| {
            (state(x, Side::One).grad * alpha[0] - state(x, Side::Two).grad * alpha[1]).dot(n)
        })
    };
    let adjoint_flux_jump = {
        let base = base.clone();
        Arc::new(move |x: Point2, n: Vec2| {
            -a * (base(x, Side::One).grad * alpha[0] - base(x, Side::Two).grad * alpha[1]).dot(n)
        })
    };
    ManufacturedProblem {
        id,
        spec: ProblemSpec {
            domain: def.domain,
            level_set: def.level_set,
            alpha,
            regularization: a,
            bounds,
            lambda_coef,
            source,
            target,
            boundary,
            flux_jump,
            adjoint_flux_jump,
        },
        state,
        base,
        relative_errors: def.relative_errors,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const ALL: [ExampleId; 4] = [ExampleId::Example1, ExampleId::Example2, ExampleId::Example3, ExampleId::Smooth];

    fn random_point(rng: &mut ChaCha8Rng, rect: Rect) -> Point2 {
        Point2::new(rng.random_range(rect.x0..rect.x1), rng.random_range(rect.y0..rect.y1))
    }

    /// Central differences (step 1e−6 for gradients, 1e−4 for the Laplacian).
    fn fd_check(f: &dyn Fn(Point2) -> Jet, p: Point2) {
        let j = f(p);
        let h = 1e-6;
        let dx = (f(p + Vec2::new(h, 0.0)).value - f(p - Vec2::new(h, 0.0)).value) / (2.0 * h);
        let dy = (f(p + Vec2::new(0.0, h)).value - f(p - Vec2::new(0.0, h)).value) / (2.0 * h);
        let scale = 1.0 + j.grad.norm();
        assert!((dx - j.grad.x).abs() <= 1e-5 * scale, "d/dx at {p:?}: {dx} vs {}", j.grad.x);
        assert!((dy - j.grad.y).abs() <= 1e-5 * scale, "d/dy at {p:?}: {dy} vs {}", j.grad.y);
        let h = 1e-4;
        let lap = (f(p + Vec2::new(h, 0.0)).value
            + f(p - Vec2::new(h, 0.0)).value
            + f(p + Vec2::new(0.0, h)).value
            + f(p - Vec2::new(0.0, h)).value
            - 4.0 * j.value)
            / (h * h);
        assert!((lap - j.lap).abs() <= 1e-4 * (1.0 + j.lap.abs()), "Δ at {p:?}: {lap} vs {}", j.lap);
    }

    #[test]
    fn hand_derivatives_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for id in ALL {
            let mp = build_example(id);
            for _ in 0..200 {
                let p = random_point(&mut rng, mp.spec.domain);
                for side in Side::BOTH {
                    fd_check(&|x| mp.state_jet(x, side), p);
                    fd_check(&|x| mp.costate_jet(x, side), p);
                }
            }
        }
    }

    #[test]
    fn manufactured_data_satisfy_optimality_relations() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for id in ALL {
            let mp = build_example(id);
            let s = &mp.spec;
            for _ in 0..10_000 {
                let x = random_point(&mut rng, s.domain);
                let side = if s.level_set.value(x) < 0.0 { Side::One } else { Side::Two };
                let al = s.alpha(side);
                let y = mp.state_jet(x, side);
                let p = mp.costate_jet(x, side);
                let u = mp.control(x, side);
                let r_state = -al * y.lap - u - (s.source)(x, side);
                let r_adj = -al * p.lap - (y.value - (s.target)(x, side));
                let r_proj = u - s.bounds.clamp(-p.value / s.regularization);
                let scale = 1.0 + y.lap.abs() * al + u.abs();
                assert!(r_state.abs() <= 1e-8 * scale, "{id}: state residual {r_state}");
                assert!(r_adj.abs() <= 1e-8 * (1.0 + p.lap.abs() * al), "{id}: adjoint residual {r_adj}");
                assert!(r_proj.abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn exact_state_and_costate_are_continuous_across_interface() {
        for id in [ExampleId::Example1, ExampleId::Example2, ExampleId::Example3] {
            let mp = build_example(id);
            for i in 0..64 {
                let t = i as f64 / 64.0;
                let x = match id {
                    ExampleId::Example1 => Point2::new(t, EXAMPLE1_SLOPE * t + example1_intercept()),
                    ExampleId::Example2 => {
                        Point2::new((2.0 * PI * t).cos(), (2.0 * PI * t).sin()) * example2_radius()
                    }
                    _ => Point2::new((2.0 * PI * t).cos(), (2.0 * PI * t).sin()) * EXAMPLE3_RADIUS,
                };
                let jy = mp.state_jet(x, Side::One).value - mp.state_jet(x, Side::Two).value;
                let jp = mp.costate_jet(x, Side::One).value - mp.costate_jet(x, Side::Two).value;
                assert!(jy.abs() <= 1e-10 && jp.abs() <= 1e-10, "{id}: jumps {jy} {jp}");
            }
        }
    }

    #[test]
    fn example3_state_flux_is_continuous() {
        let mp = build_example(ExampleId::Example3);
        for i in 0..100 {
            let t = 2.0 * PI * i as f64 / 100.0;
            let n = Point2::new(t.cos(), t.sin());
            let g = (mp.spec.flux_jump)(n * EXAMPLE3_RADIUS, n);
            let gp = (mp.spec.adjoint_flux_jump)(n * EXAMPLE3_RADIUS, n);
            assert!(g.abs() <= 1e-12 && gp.abs() <= 1e-12);
        }
    }

    #[test]
    fn example1_flux_jump_reflects_coefficient_ratio() {
        // On the line, α∇y₁ = cos·∇L/200 and α∇y₂ = 100·cos·∇L/2.
        let mp = build_example(ExampleId::Example1);
        let (k, b) = (EXAMPLE1_SLOPE, example1_intercept());
        let grad_l = Vec2::new(-k, 1.0);
        let n = -grad_l.normalized();
        for i in 1..10 {
            let x = Point2::new(i as f64 / 10.0, k * i as f64 / 10.0 + b);
            let c = (x.x * x.y).cos();
            let expected = (c / 200.0 - 50.0 * c) * grad_l.dot(n);
            assert!(((mp.spec.flux_jump)(x, n) - expected).abs() <= 1e-12);
        }
    }

    #[test]
    fn example2_control_clamps_at_half() {
        let mp = build_example(ExampleId::Example2);
        let x = Point2::new(0.0, 0.0);
        // φ₁(0) = 5(−3/16)(−1)(−1) = −15/16.
        assert_eq!(mp.control(x, Side::One), -0.5);
        assert!((mp.costate_jet(x, Side::One).value - 15.0 / 16.0).abs() < 1e-14);
        assert_eq!(mp.control_gradient(x, Side::One), Vec2::default());
    }

    #[test]
    fn overrides_and_parsing() {
        let mp = build_example_with(
            ExampleId::Example3,
            ExampleOverrides {
                lambda_coef: Some(123.0),
                regularization: Some(0.5),
                bounds: None,
            },
        );
        assert_eq!(mp.spec.lambda_coef, 123.0);
        assert_eq!(mp.spec.regularization, 0.5);
        assert!(mp.spec.bounds.is_unbounded());
        assert_eq!("2".parse::<ExampleId>().unwrap(), ExampleId::Example2);
        assert!("7".parse::<ExampleId>().is_err());
        assert!((EXAMPLE1_SLOPE + 3f64.sqrt() / 3.0).abs() < 1e-15);
    }
}
