//! Symmetric triangle rules and Gauss-Legendre rules on segments.

use crate::error::{Error, Result};
use crate::mesh::{triangle_area, Point2};

/// Points and positive weights. Reference rules integrate over the
/// reference triangle `(0,0),(1,0),(0,1)` (weights sum to ½) or the
/// interval `[-1, 1]` stored as `Point2 { x: t, y: 0 }` (weights sum to 2).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct QuadRule {
    pub points: Vec<Point2>,
    pub weights: Vec<f64>,
}

impl QuadRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn integrate(&self, f: impl Fn(Point2) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(&p, &w)| w * f(p))
            .sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Point2, f64)> + '_ {
        self.points.iter().copied().zip(self.weights.iter().copied())
    }

    pub fn extend(&mut self, other: QuadRule) {
        self.points.extend(other.points);
        self.weights.extend(other.weights);
    }
}

// Barycentric orbits (a, a, 1 - 2a) with weights normalized to sum 1.
const DEG4_A1: f64 = 0.445_948_490_915_964_886_318_329_253_883;
const DEG4_W1: f64 = 0.223_381_589_678_011_465_944_810_266_011;
const DEG4_A2: f64 = 0.091_576_213_509_770_743_459_571_463_402_2;
const DEG4_W2: f64 = 0.109_951_743_655_321_867_388_523_067_322;

/// Barycentric points `(λ0, λ1, λ2)` and weights summing to 1.
fn barycentric_rule(degree: usize) -> Result<Vec<([f64; 3], f64)>> {
    match degree {
        2 => {
            let (a, b) = (1.0 / 6.0, 2.0 / 3.0);
            Ok(vec![
                ([b, a, a], 1.0 / 3.0),
                ([a, b, a], 1.0 / 3.0),
                ([a, a, b], 1.0 / 3.0),
            ])
        }
        4 => {
            let mut rule = Vec::with_capacity(6);
            for (a, w) in [(DEG4_A1, DEG4_W1), (DEG4_A2, DEG4_W2)] {
                let b = 1.0 - 2.0 * a;
                rule.push(([b, a, a], w));
                rule.push(([a, b, a], w));
                rule.push(([a, a, b], w));
            }
            Ok(rule)
        }
        _ => Err(Error::config(format!(
            "unsupported triangle quadrature degree {degree} (supported: 2, 4)"
        ))),
    }
}

/// Symmetric rule on the reference triangle, exact up to `degree` (2 or 4).
pub fn reference_triangle_rule(degree: usize) -> Result<QuadRule> {
    let rule = barycentric_rule(degree)?;
    Ok(QuadRule {
        points: rule.iter().map(|(l, _)| Point2::new(l[1], l[2])).collect(),
        weights: rule.iter().map(|&(_, w)| 0.5 * w).collect(),
    })
}

/// Rule of the given degree mapped onto the physical triangle `tri`.
pub fn triangle_rule(tri: &[Point2; 3], degree: usize) -> Result<QuadRule> {
    let rule = barycentric_rule(degree)?;
    Ok(map_barycentric(&rule, tri))
}

fn map_barycentric(rule: &[([f64; 3], f64)], tri: &[Point2; 3]) -> QuadRule {
    let area = triangle_area(tri[0], tri[1], tri[2]);
    let mut out = QuadRule {
        points: Vec::with_capacity(rule.len()),
        weights: Vec::with_capacity(rule.len()),
    };
    for &(l, w) in rule {
        out.points
            .push(tri[0] * l[0] + tri[1] * l[1] + tri[2] * l[2]);
        out.weights.push(w * area);
    }
    out
}

/// Precomputed barycentric rule for repeated mapping onto many triangles.
#[derive(Debug, Clone)]
pub struct TriangleRule {
    rule: Vec<([f64; 3], f64)>,
}

impl TriangleRule {
    pub fn new(degree: usize) -> Result<Self> {
        Ok(Self {
            rule: barycentric_rule(degree)?,
        })
    }

    pub fn map(&self, tri: &[Point2; 3]) -> QuadRule {
        map_barycentric(&self.rule, tri)
    }

    /// Calls `f(point, weight)` for every mapped point without allocating.
    pub fn for_each(&self, tri: &[Point2; 3], mut f: impl FnMut(Point2, f64)) {
        let area = triangle_area(tri[0], tri[1], tri[2]);
        for &(l, w) in &self.rule {
            f(tri[0] * l[0] + tri[1] * l[1] + tri[2] * l[2], w * area);
        }
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
fn gauss_legendre(n: usize) -> Result<(&'static [f64], &'static [f64])> {
    const X2: [f64; 2] = [-0.577_350_269_189_625_8, 0.577_350_269_189_625_8];
    const W2: [f64; 2] = [1.0, 1.0];
    const X3: [f64; 3] = [-0.774_596_669_241_483_4, 0.0, 0.774_596_669_241_483_4];
    const W3: [f64; 3] = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];
    const X4: [f64; 4] = [
        -0.861_136_311_594_052_6,
        -0.339_981_043_584_856_3,
        0.339_981_043_584_856_3,
        0.861_136_311_594_052_6,
    ];
    const W4: [f64; 4] = [
        0.347_854_845_137_453_86,
        0.652_145_154_862_546_1,
        0.652_145_154_862_546_1,
        0.347_854_845_137_453_86,
    ];
    const X5: [f64; 5] = [
        -0.906_179_845_938_664,
        -0.538_469_310_105_683_1,
        0.0,
        0.538_469_310_105_683_1,
        0.906_179_845_938_664,
    ];
    const W5: [f64; 5] = [
        0.236_926_885_056_189_08,
        0.478_628_670_499_366_47,
        0.568_888_888_888_888_9,
        0.478_628_670_499_366_47,
        0.236_926_885_056_189_08,
    ];
    match n {
        2 => Ok((&X2, &W2)),
        3 => Ok((&X3, &W3)),
        4 => Ok((&X4, &W4)),
        5 => Ok((&X5, &W5)),
        _ => Err(Error::config(format!(
            "unsupported Gauss-Legendre point count {n} (supported: 2..=5)"
        ))),
    }
}

/// Gauss-Legendre rule on the segment `[a, b]`; weights sum to `|b - a|`.
pub fn segment_quadrature(a: Point2, b: Point2, n_points: usize) -> Result<QuadRule> {
    let (x, w) = gauss_legendre(n_points)?;
    let half = 0.5 * a.distance(b);
    let mid = a.midpoint(b);
    let dir = (b - a) * 0.5;
    Ok(QuadRule {
        points: x.iter().map(|&t| mid + dir * t).collect(),
        weights: w.iter().map(|&wi| wi * half).collect(),
    })
}

/// Gauss-Legendre rule on the reference interval `[-1, 1]`.
pub fn reference_segment_rule(n_points: usize) -> Result<QuadRule> {
    let (x, w) = gauss_legendre(n_points)?;
    Ok(QuadRule {
        points: x.iter().map(|&t| Point2::new(t, 0.0)).collect(),
        weights: w.to_vec(),
    })
}
