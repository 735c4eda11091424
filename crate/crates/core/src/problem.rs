//! Problem data for the interface optimal control problem
//!
//! ```text
//! min ½‖y − y_d‖² + (a/2)‖u‖²
//! −∇·(α∇y) = u + f in Ω,  y = y_b on ∂Ω,  [y] = 0, [α∇_n y] = g on Γ,
//! u_a ≤ u ≤ u_b.
//! ```

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::interface::LevelSet;
use crate::mesh::{Point2, Rect, Vec2};

/// Subdomain label. `One` is where the level set is negative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    One,
    Two,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::One, Side::Two];

    pub fn index(self) -> usize {
        match self {
            Side::One => 0,
            Side::Two => 1,
        }
    }

    pub fn other(self) -> Side {
        match self {
            Side::One => Side::Two,
            Side::Two => Side::One,
        }
    }
}

/// A field given separately on each subdomain (smooth extensions allowed
/// to be evaluated slightly across the interface).
pub type SideField = Arc<dyn Fn(Point2, Side) -> f64 + Send + Sync>;

/// Interface datum evaluated at a point of the discrete interface with
/// the local unit normal pointing from Ω₁ into Ω₂.
pub type InterfaceField = Arc<dyn Fn(Point2, Vec2) -> f64 + Send + Sync>;

pub fn zero_side_field() -> SideField {
    Arc::new(|_, _| 0.0)
}

pub fn zero_interface_field() -> InterfaceField {
    Arc::new(|_, _| 0.0)
}

/// Box constraint `lower ≤ u ≤ upper`; infinite bounds are allowed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlBounds {
    pub lower: f64,
    pub upper: f64,
}

impl ControlBounds {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if lower.is_nan() || upper.is_nan() || lower > upper {
            return Err(Error::config(format!(
                "control bounds require lower <= upper, got [{lower}, {upper}]"
            )));
        }
        Ok(Self { lower, upper })
    }

    pub const fn unbounded() -> Self {
        Self {
            lower: f64::NEG_INFINITY,
            upper: f64::INFINITY,
        }
    }

    pub fn is_unbounded(&self) -> bool {
        self.lower == f64::NEG_INFINITY && self.upper == f64::INFINITY
    }

    pub fn clamp(&self, v: f64) -> f64 {
        self.upper.min(self.lower.max(v))
    }

    /// Whether `v` lies strictly inside the box (the projection is the identity there).
    pub fn is_inactive(&self, v: f64) -> bool {
        v > self.lower && v < self.upper
    }
}

/// Full data of an interface optimal control problem.
#[derive(Clone)]
pub struct ProblemSpec {
    pub domain: Rect,
    pub level_set: LevelSet,
    /// Diffusion coefficients `[α₁, α₂]`.
    pub alpha: [f64; 2],
    /// Regularization weight `a > 0`.
    pub regularization: f64,
    pub bounds: ControlBounds,
    /// Penalty coefficient `λ·h`; the Nitsche parameter is `lambda_coef / h`.
    pub lambda_coef: f64,
    pub source: SideField,
    pub target: SideField,
    pub boundary: SideField,
    /// State flux jump `g = [α∇_n y]`.
    pub flux_jump: InterfaceField,
    /// Co-state flux jump `[α∇_n p]`; zero for a genuine optimality system.
    pub adjoint_flux_jump: InterfaceField,
}

impl ProblemSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha[0] > 0.0 && self.alpha[1] > 0.0) {
            return Err(Error::config("diffusion coefficients must be positive"));
        }
        if !(self.regularization > 0.0) {
            return Err(Error::config("regularization parameter a must be positive"));
        }
        if !(self.lambda_coef > 0.0) {
            return Err(Error::config("penalty coefficient must be positive"));
        }
        ControlBounds::new(self.bounds.lower, self.bounds.upper)?;
        Ok(())
    }

    pub fn alpha(&self, side: Side) -> f64 {
        self.alpha[side.index()]
    }

    pub fn alpha_max(&self) -> f64 {
        self.alpha[0].max(self.alpha[1])
    }
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("domain", &self.domain)
            .field("level_set", &self.level_set)
            .field("alpha", &self.alpha)
            .field("regularization", &self.regularization)
            .field("bounds", &self.bounds)
            .field("lambda_coef", &self.lambda_coef)
            .finish_non_exhaustive()
    }
}
