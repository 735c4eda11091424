//! Interface representation, element classification and cut geometry.
//!
//! The interface is the zero contour of a [`LevelSet`]. On every cut
//! element it is replaced by the straight chord between the two edge
//! intersection points, and each side of the chord is tiled by one or two
//! sub-triangles that carry the volume quadrature.

mod level_set;
pub mod quadrature;

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

pub use level_set::LevelSet;
pub use quadrature::{segment_quadrature, triangle_rule, QuadRule, TriangleRule};

use crate::error::{Error, Result};
use crate::mesh::{signed_double_area, triangle_area, Mesh, Point2, Vec2};
use crate::problem::Side;

/// Vertex values with `|φ| < SNAP_FACTOR · h` are treated as lying on Γ.
pub const SNAP_FACTOR: f64 = 1e-12;

/// Target residual of the edge root search.
pub const ROOT_TOLERANCE: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ElementClass {
    Interior1,
    Interior2,
    Cut,
}

impl ElementClass {
    /// The side of an uncut element.
    pub fn side(self) -> Option<Side> {
        match self {
            ElementClass::Interior1 => Some(Side::One),
            ElementClass::Interior2 => Some(Side::Two),
            ElementClass::Cut => None,
        }
    }

    pub fn is_cut(self) -> bool {
        self == ElementClass::Cut
    }
}

/// Sign of a vertex after snapping. Snapped vertices count as Ω₂.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VertexSign {
    Negative,
    Positive,
    Snapped,
}

impl VertexSign {
    pub fn of(value: f64, h: f64) -> Self {
        if value.abs() < SNAP_FACTOR * h {
            VertexSign::Snapped
        } else if value < 0.0 {
            VertexSign::Negative
        } else {
            VertexSign::Positive
        }
    }

    pub fn side(self) -> Side {
        match self {
            VertexSign::Negative => Side::One,
            VertexSign::Positive | VertexSign::Snapped => Side::Two,
        }
    }
}

/// Classification from snapped vertex signs.
///
/// An element is cut when it has a vertex strictly inside Ω₁ and one
/// strictly inside Ω₂. An element whose only Ω₂ vertices are snapped
/// touches Γ at a vertex and is treated as interior to Ω₁.
pub fn classify_signs(signs: [VertexSign; 3]) -> ElementClass {
    let negative = signs.contains(&VertexSign::Negative);
    let positive = signs.contains(&VertexSign::Positive);
    match (negative, positive) {
        (true, true) => ElementClass::Cut,
        (true, false) => ElementClass::Interior1,
        (false, _) => ElementClass::Interior2,
    }
}

fn element_signs(mesh: &Mesh, level_set: &LevelSet, element: usize) -> ([f64; 3], [VertexSign; 3]) {
    let pts = mesh.triangle_points(element);
    let values = pts.map(|p| level_set.value(p));
    (values, values.map(|v| VertexSign::of(v, mesh.h)))
}

pub fn classify_element(mesh: &Mesh, level_set: &LevelSet, element: usize) -> ElementClass {
    classify_signs(element_signs(mesh, level_set, element).1)
}

/// Straight-chord geometry of one cut element.
#[derive(Debug, Clone, PartialEq)]
pub struct CutGeometry {
    pub element: usize,
    pub vertices: [Point2; 3],
    /// `|T|`
    pub area: f64,
    /// Chord endpoints on two distinct edges.
    pub q: [Point2; 2],
    /// Unit normal of the chord pointing into Ω₁.
    pub normal: Vec2,
    /// Area fractions `[k₁, k₂]`.
    pub k: [f64; 2],
    /// Sub-triangles tiling `T ∩ Ω₁` and `T ∩ Ω₂` (counter-clockwise).
    pub sub_tris: [Vec<[Point2; 3]>; 2],
}

impl CutGeometry {
    pub fn k(&self, side: Side) -> f64 {
        self.k[side.index()]
    }

    pub fn segment_length(&self) -> f64 {
        self.q[0].distance(self.q[1])
    }

    /// Unit normal pointing from Ω₁ into Ω₂, the direction of the flux jump
    /// `[α∇_n y]` in the weak form.
    pub fn flux_normal(&self) -> Vec2 {
        -self.normal
    }

    pub fn segment_rule(&self, n_points: usize) -> Result<QuadRule> {
        segment_quadrature(self.q[0], self.q[1], n_points)
    }

    pub fn side_area(&self, side: Side) -> f64 {
        self.sub_tris[side.index()]
            .iter()
            .map(|t| triangle_area(t[0], t[1], t[2]))
            .sum()
    }
}

/// Intersection of Γ with the edge `a → b`, where the snapped signs differ.
fn edge_root(
    level_set: &LevelSet,
    (a, fa, sa): (Point2, f64, VertexSign),
    (b, fb, sb): (Point2, f64, VertexSign),
) -> Point2 {
    if sa == VertexSign::Snapped {
        return a;
    }
    if sb == VertexSign::Snapped {
        return b;
    }
    let a_negative = fa < 0.0;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    // One secant step, then bisection on the bracket.
    let mut t = fa / (fa - fb);
    for _ in 0..200 {
        let p = a.lerp(b, t);
        let f = level_set.value(p);
        if f.abs() <= ROOT_TOLERANCE {
            return p;
        }
        if (f < 0.0) == a_negative {
            lo = t;
        } else {
            hi = t;
        }
        if hi - lo <= f64::EPSILON {
            break;
        }
        t = 0.5 * (lo + hi);
    }
    a.lerp(b, 0.5 * (lo + hi))
}

/// Intersection points, area fractions, normal and sub-triangulation of a
/// cut element.
pub fn compute_cut_geometry(mesh: &Mesh, level_set: &LevelSet, element: usize) -> Result<CutGeometry> {
    let vertices = mesh.triangle_points(element);
    let (values, signs) = element_signs(mesh, level_set, element);
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::geometry(element, "level set is not finite at a vertex"));
    }
    if classify_signs(signs) != ElementClass::Cut {
        return Err(Error::geometry(element, "element is not cut by the interface"));
    }
    let sides = signs.map(VertexSign::side);
    let changing: Vec<usize> = (0..3).filter(|&i| sides[i] != sides[(i + 1) % 3]).collect();
    if changing.len() != 2 {
        return Err(Error::geometry(
            element,
            format!("{} sign-changing edges, expected 2", changing.len()),
        ));
    }

    // The lone vertex is the one whose side differs from the other two.
    let lone = (0..3)
        .find(|&i| sides[i] != sides[(i + 1) % 3] && sides[i] != sides[(i + 2) % 3])
        .ok_or_else(|| Error::geometry(element, "no lone vertex"))?;
    let next = (lone + 1) % 3;
    let prev = (lone + 2) % 3;
    let at = |i: usize| (vertices[i], values[i], signs[i]);
    let qa = edge_root(level_set, at(lone), at(next));
    let qb = edge_root(level_set, at(lone), at(prev));
    if qa == qb {
        return Err(Error::geometry(element, "degenerate chord"));
    }

    let lone_side = sides[lone];
    let (l, p, q) = (vertices[lone], vertices[next], vertices[prev]);
    let lone_tris = vec![[l, qa, qb]];
    // Quadrilateral qa, p, q, qb split along its shorter diagonal.
    let quad_tris = if qa.distance(q) <= p.distance(qb) {
        vec![[qa, p, q], [qa, q, qb]]
    } else {
        vec![[qa, p, qb], [p, q, qb]]
    };

    let area = triangle_area(vertices[0], vertices[1], vertices[2]);
    let mut sub_tris: [Vec<[Point2; 3]>; 2] = Default::default();
    sub_tris[lone_side.index()] = lone_tris;
    sub_tris[lone_side.other().index()] = quad_tris;
    let side_area = |tris: &Vec<[Point2; 3]>| -> f64 {
        tris.iter().map(|t| triangle_area(t[0], t[1], t[2])).sum()
    };
    let k = [side_area(&sub_tris[0]) / area, side_area(&sub_tris[1]) / area];

    let mid = qa.midpoint(qb);
    let grad = level_set.gradient(mid);
    let gnorm = grad.norm();
    if !(gnorm > 0.0 && gnorm.is_finite()) {
        return Err(Error::geometry(element, "level-set gradient vanishes on the chord"));
    }
    let normal = -grad * (1.0 / gnorm);

    // Keep the chord endpoints in a fixed order: q[0] → q[1] has Ω₁ on its left.
    let chord = qb - qa;
    let q = if chord.cross(normal) < 0.0 || (chord.cross(normal) == 0.0 && qa.x < qb.x) {
        [qa, qb]
    } else {
        [qb, qa]
    };
    debug_assert!(sub_tris
        .iter()
        .flatten()
        .all(|t| signed_double_area(t[0], t[1], t[2]) >= 0.0));

    Ok(CutGeometry {
        element,
        vertices,
        area,
        q,
        normal,
        k,
        sub_tris,
    })
}

/// Classification and cut geometry of every element of a mesh.
#[derive(Debug, Clone)]
pub struct CutInfo {
    pub classes: Vec<ElementClass>,
    /// Side of every vertex after snapping.
    pub vertex_sides: Vec<Side>,
    cut_index: Vec<Option<usize>>,
    pub cuts: Vec<CutGeometry>,
}

impl CutInfo {
    pub fn build(mesh: &Mesh, level_set: &LevelSet) -> Result<Self> {
        let vertex_sides = mesh
            .vertices
            .iter()
            .map(|&p| VertexSign::of(level_set.value(p), mesh.h).side())
            .collect();
        let classes: Vec<ElementClass> = (0..mesh.num_triangles())
            .into_par_iter()
            .map(|t| classify_element(mesh, level_set, t))
            .collect();
        let cut_elements: Vec<usize> = (0..classes.len()).filter(|&t| classes[t].is_cut()).collect();
        let cuts = cut_elements
            .par_iter()
            .map(|&t| compute_cut_geometry(mesh, level_set, t))
            .collect::<Result<Vec<_>>>()?;
        let mut cut_index = vec![None; classes.len()];
        for (i, &t) in cut_elements.iter().enumerate() {
            cut_index[t] = Some(i);
        }
        Ok(Self {
            classes,
            vertex_sides,
            cut_index,
            cuts,
        })
    }

    pub fn class(&self, element: usize) -> ElementClass {
        self.classes[element]
    }

    pub fn cut(&self, element: usize) -> Option<&CutGeometry> {
        self.cut_index[element].map(|i| &self.cuts[i])
    }

    pub fn num_cut(&self) -> usize {
        self.cuts.len()
    }

    /// Total length of the discrete interface Γ_h.
    pub fn interface_length(&self) -> f64 {
        self.cuts.iter().map(CutGeometry::segment_length).sum()
    }

    /// Calls `f(side, triangle)` for every integration piece of `element`:
    /// the element itself when uncut, otherwise its sub-triangles.
    pub fn for_each_piece(&self, mesh: &Mesh, element: usize, mut f: impl FnMut(Side, &[Point2; 3])) {
        match self.classes[element].side() {
            Some(side) => f(side, &mesh.triangle_points(element)),
            None => {
                let cut = self.cut(element).expect("cut element without geometry");
                for side in Side::BOTH {
                    for tri in &cut.sub_tris[side.index()] {
                        f(side, tri);
                    }
                }
            }
        }
    }

    /// Writes the integration mesh (elements and sub-triangles) as CSV rows
    /// `element, side, x0, y0, x1, y1, x2, y2`.
    pub fn write_integration_mesh_csv(&self, mesh: &Mesh, path: &Path) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(w, "element,side,x0,y0,x1,y1,x2,y2")?;
        for e in 0..mesh.num_triangles() {
            let mut result = Ok(());
            self.for_each_piece(mesh, e, |side, t| {
                if result.is_ok() {
                    result = writeln!(
                        w,
                        "{e},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                        side.index() + 1,
                        t[0].x,
                        t[0].y,
                        t[1].x,
                        t[1].y,
                        t[2].x,
                        t[2].y
                    );
                }
            });
            result?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Degree-`degree` rules on the sub-triangles of each side: `[side 1, side 2]`.
pub fn subtriangle_quadrature(cut: &CutGeometry, degree: usize) -> Result<[QuadRule; 2]> {
    let rule = TriangleRule::new(degree)?;
    let mut out: [QuadRule; 2] = Default::default();
    for side in Side::BOTH {
        for tri in &cut.sub_tris[side.index()] {
            out[side.index()].extend(rule.map(tri));
        }
    }
    Ok(out)
}
