use std::fmt;
use std::sync::Arc;

use crate::mesh::{Point2, Vec2};

type ScalarFn = Arc<dyn Fn(Point2) -> f64 + Send + Sync>;
type VectorFn = Arc<dyn Fn(Point2) -> Vec2 + Send + Sync>;

/// Signed description of the interface: negative in Ω₁, positive in Ω₂.
#[derive(Clone)]
pub struct LevelSet {
    name: String,
    value: ScalarFn,
    gradient: VectorFn,
}

impl LevelSet {
    pub fn new(
        name: impl Into<String>,
        value: impl Fn(Point2) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(Point2) -> Vec2 + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            value: Arc::new(value),
            gradient: Arc::new(gradient),
        }
    }

    /// The line `x₂ = k x₁ + b`; Ω₁ lies below it.
    pub fn line(k: f64, b: f64) -> Self {
        Self::new(
            format!("line(k={k}, b={b})"),
            move |p| p.y - k * p.x - b,
            move |_| Point2::new(-k, 1.0),
        )
    }

    /// Circle of radius `r` around `center`; Ω₁ is the disc.
    pub fn circle(center: Point2, r: f64) -> Self {
        Self::new(
            format!("circle(center=({}, {}), r={r})", center.x, center.y),
            move |p| {
                let d = p - center;
                d.dot(d) - r * r
            },
            move |p| (p - center) * 2.0,
        )
    }

    /// A level set of constant sign: no interface at all.
    pub fn constant(value: f64) -> Self {
        Self::new(format!("constant({value})"), move |_| value, |_| Point2::default())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn value(&self, p: Point2) -> f64 {
        (self.value)(p)
    }

    pub fn gradient(&self, p: Point2) -> Vec2 {
        (self.gradient)(p)
    }
}

impl fmt::Debug for LevelSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("LevelSet").field(&self.name).finish()
    }
}
