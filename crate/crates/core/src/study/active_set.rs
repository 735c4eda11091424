//! Contours of the active set `{−p/a = u_a} ∪ {−p/a = u_b}` and of Γ_h as
//! polylines.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use crate::assembly::eval_discrete;
use crate::discretization::Discretization;
use crate::error::Result;
use crate::mesh::Point2;
use crate::problem::{ControlBounds, Side};
use crate::solver::OcpSolution;
use crate::study::examples::ManufacturedProblem;

#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    pub label: String,
    pub points: Vec<Point2>,
}

type Segment = [Point2; 2];

/// Zero set of the linear interpolant of `values - level` on one triangle.
fn level_segment(tri: &[Point2; 3], values: [f64; 3], level: f64) -> Option<Segment> {
    let d = values.map(|v| v - level);
    let mut pts = Vec::with_capacity(2);
    for (i, j) in [(0, 1), (1, 2), (2, 0)] {
        let (a, b) = (d[i], d[j]);
        if (a < 0.0) != (b < 0.0) {
            let t = a / (a - b);
            pts.push(tri[i].lerp(tri[j], t));
        }
    }
    (pts.len() == 2 && pts[0].distance(pts[1]) > 0.0).then(|| [pts[0], pts[1]])
}

fn key(p: Point2) -> (i64, i64) {
    ((p.x * 1e9).round() as i64, (p.y * 1e9).round() as i64)
}

/// Joins segments sharing endpoints into polylines.
pub fn chain_segments(segments: &[Segment], label: &str) -> Vec<Polyline> {
    let mut incident: BTreeMap<(i64, i64), Vec<usize>> = BTreeMap::new();
    for (i, s) in segments.iter().enumerate() {
        incident.entry(key(s[0])).or_default().push(i);
        incident.entry(key(s[1])).or_default().push(i);
    }
    let mut used = vec![false; segments.len()];
    let mut out = Vec::new();
    let next = |at: Point2, used: &[bool]| -> Option<usize> {
        incident[&key(at)].iter().copied().find(|&i| !used[i])
    };
    // Open chains start at endpoints of degree one.
    let mut starts: Vec<usize> = incident
        .values()
        .filter(|v| v.len() == 1)
        .map(|v| v[0])
        .collect();
    starts.extend(0..segments.len());
    for start in starts {
        if used[start] {
            continue;
        }
        used[start] = true;
        let s = segments[start];
        let (mut first, mut last) = (s[0], s[1]);
        if incident[&key(first)].len() == 1 {
            // already at an open end
        } else if incident[&key(last)].len() == 1 {
            std::mem::swap(&mut first, &mut last);
        }
        let mut points = vec![first, last];
        let mut at = last;
        while let Some(i) = next(at, &used) {
            used[i] = true;
            let s = segments[i];
            at = if key(s[0]) == key(at) { s[1] } else { s[0] };
            points.push(at);
        }
        out.push(Polyline {
            label: format!("{label}-{}", out.len()),
            points,
        });
    }
    out
}

fn contour(
    disc: &Discretization,
    value: &dyn Fn(usize, Side, Point2) -> f64,
    bounds: ControlBounds,
    prefix: &str,
) -> Vec<Polyline> {
    let mut curves = Vec::new();
    for (name, level) in [("lower", bounds.lower), ("upper", bounds.upper)] {
        if !level.is_finite() {
            continue;
        }
        let mut segments = Vec::new();
        for e in 0..disc.mesh.num_triangles() {
            disc.cut_info.for_each_piece(&disc.mesh, e, |side, tri| {
                let v = tri.map(|p| value(e, side, p));
                if let Some(s) = level_segment(tri, v, level) {
                    segments.push(s);
                }
            });
        }
        curves.extend(chain_segments(&segments, &format!("{prefix}-{name}")));
    }
    curves
}

/// Computed active-set boundary: level lines of `−p_h/a` at the finite bounds.
pub fn extract_active_set_boundary(disc: &Discretization, solution: &OcpSolution) -> Vec<Polyline> {
    let a = solution.regularization;
    contour(
        disc,
        &|e, side, x| -eval_discrete(disc, &solution.costate, e, side, x) / a,
        solution.bounds,
        "computed",
    )
}

/// Exact active-set boundary, traced on the pieces of `disc` (use a fine mesh).
pub fn exact_active_set_boundary(disc: &Discretization, problem: &ManufacturedProblem) -> Vec<Polyline> {
    let a = problem.spec.regularization;
    contour(
        disc,
        &|_, side, x| -problem.costate_jet(x, side).value / a,
        problem.spec.bounds,
        "exact",
    )
}

/// Γ_h as polylines.
pub fn interface_polylines(disc: &Discretization) -> Vec<Polyline> {
    let segments: Vec<Segment> = disc.cut_info.cuts.iter().map(|c| c.q).collect();
    chain_segments(&segments, "interface")
}

/// CSV with columns `curve_id, x, y`.
pub fn write_polylines_csv(path: &Path, curves: &[Polyline]) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "curve_id,x,y")?;
    for c in curves {
        for p in &c.points {
            writeln!(w, "{},{:.16e},{:.16e}", c.label, p.x, p.y)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn point_segment_distance(p: Point2, a: Point2, b: Point2) -> f64 {
    let ab = b - a;
    let len2 = ab.dot(ab);
    let t = if len2 > 0.0 { ((p - a).dot(ab) / len2).clamp(0.0, 1.0) } else { 0.0 };
    p.distance(a + ab * t)
}

fn one_sided(from: &[Polyline], to: &[Polyline]) -> f64 {
    let segs: Vec<Segment> = to
        .iter()
        .flat_map(|c| c.points.windows(2).map(|w| [w[0], w[1]]))
        .collect();
    from.iter()
        .flat_map(|c| c.points.iter())
        .map(|&p| {
            segs.iter()
                .map(|s| point_segment_distance(p, s[0], s[1]))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

/// Symmetric Hausdorff distance between the vertex sets of two curve
/// families (each vertex against the other family's segments).
pub fn hausdorff_distance(a: &[Polyline], b: &[Polyline]) -> f64 {
    one_sided(a, b).max(one_sided(b, a))
}
