//! Uniform triangulations of axis-aligned rectangles.

use std::collections::HashMap;
use std::io::Write;
use std::ops::{Add, Mul, Neg, Sub};
use std::path::Path;

use crate::error::{Error, Result};

/// A point (or vector) in the plane.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

/// Planar vectors share the point representation.
pub type Vec2 = Point2;

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, other: Self) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 3D cross product.
    pub fn cross(self, other: Self) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Self) -> f64 {
        (self - other).norm()
    }

    pub fn lerp(self, other: Self, t: f64) -> Self {
        self + (other - self) * t
    }

    pub fn midpoint(self, other: Self) -> Self {
        self.lerp(other, 0.5)
    }

    pub fn normalized(self) -> Self {
        self * (1.0 / self.norm())
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Point2 {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point2 {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Self;
    fn mul(self, rhs: f64) -> Self {
        Self::new(self.x * rhs, self.y * rhs)
    }
}

impl Neg for Point2 {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y)
    }
}

/// Axis-aligned rectangle `[x0, x1] × [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub const fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        Self { x0, x1, y0, y1 }
    }

    pub const fn unit_square() -> Self {
        Self::new(0.0, 1.0, 0.0, 1.0)
    }

    /// `[-1, 1]²`
    pub const fn symmetric_square() -> Self {
        Self::new(-1.0, 1.0, -1.0, 1.0)
    }

    pub fn area(&self) -> f64 {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }

    pub fn contains(&self, p: Point2) -> bool {
        p.x >= self.x0 && p.x <= self.x1 && p.y >= self.y0 && p.y <= self.y1
    }
}

/// Half the absolute shoelace value of a triangle.
pub fn triangle_area(a: Point2, b: Point2, c: Point2) -> f64 {
    0.5 * signed_double_area(a, b, c).abs()
}

/// Twice the signed area; positive for counter-clockwise vertex order.
pub fn signed_double_area(a: Point2, b: Point2, c: Point2) -> f64 {
    (b - a).cross(c - a)
}

/// Longest edge of a triangle.
pub fn triangle_diameter(a: Point2, b: Point2, c: Point2) -> f64 {
    a.distance(b).max(b.distance(c)).max(c.distance(a))
}

/// Uniform triangulation with one fixed diagonal per cell.
///
/// Every cell `[x_i, x_{i+1}] × [y_j, y_{j+1}]` is split along the diagonal
/// from its lower-left to its upper-right corner. Vertices are numbered
/// row by row (`j * (n + 1) + i`), triangles cell by cell.
#[derive(Debug, Clone)]
pub struct Mesh {
    pub rect: Rect,
    pub n: usize,
    pub vertices: Vec<Point2>,
    pub triangles: Vec<[usize; 3]>,
    pub boundary_vertex_flags: Vec<bool>,
    /// Maximum triangle diameter (the cell diagonal).
    pub h: f64,
}

impl Mesh {
    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn triangle_points(&self, t: usize) -> [Point2; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn element_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_points(t);
        triangle_area(a, b, c)
    }

    pub fn element_diameter(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_points(t);
        triangle_diameter(a, b, c)
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.boundary_vertex_flags[v]
    }

    /// Unique undirected edges `(min, max)` with the number of incident
    /// triangles, sorted by vertex pair.
    pub fn edges(&self) -> Vec<((usize, usize), usize)> {
        let mut count: HashMap<(usize, usize), usize> = HashMap::new();
        for tri in &self.triangles {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                *count.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
        let mut edges: Vec<_> = count.into_iter().collect();
        edges.sort_unstable();
        edges
    }

    /// Writes `mesh_vertices.csv` (id, x, y, boundary) and
    /// `mesh_triangles.csv` (id, v0, v1, v2) into `dir`.
    pub fn write_csv(&self, dir: &Path) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(dir.join("mesh_vertices.csv"))?);
        writeln!(w, "id,x,y,boundary")?;
        for (i, p) in self.vertices.iter().enumerate() {
            writeln!(
                w,
                "{i},{:.16e},{:.16e},{}",
                p.x, p.y, self.boundary_vertex_flags[i] as u8
            )?;
        }
        w.flush()?;
        let mut w = std::io::BufWriter::new(std::fs::File::create(dir.join("mesh_triangles.csv"))?);
        writeln!(w, "id,v0,v1,v2")?;
        for (i, [a, b, c]) in self.triangles.iter().enumerate() {
            writeln!(w, "{i},{a},{b},{c}")?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Builds the `n × n` uniform triangulation of `rect` (`2n²` triangles).
pub fn build_uniform_mesh(rect: Rect, n: usize) -> Result<Mesh> {
    if !(rect.x1 > rect.x0 && rect.y1 > rect.y0) {
        return Err(Error::config(format!("invalid rectangle {rect:?}")));
    }
    if ![rect.x0, rect.x1, rect.y0, rect.y1].iter().all(|v| v.is_finite()) {
        return Err(Error::config("rectangle bounds must be finite"));
    }
    if n < 2 {
        return Err(Error::config(format!("mesh subdivision n = {n} must be at least 2")));
    }
    Ok(uniform_mesh_unchecked(rect, n))
}

pub(crate) fn uniform_mesh_unchecked(rect: Rect, n: usize) -> Mesh {
    let dx = (rect.x1 - rect.x0) / n as f64;
    let dy = (rect.y1 - rect.y0) / n as f64;
    let stride = n + 1;

    let mut vertices = Vec::with_capacity(stride * stride);
    let mut boundary_vertex_flags = Vec::with_capacity(stride * stride);
    for j in 0..=n {
        // Exact end coordinates; avoids x0 + n*dx != x1 round-off.
        let y = if j == n { rect.y1 } else { rect.y0 + j as f64 * dy };
        for i in 0..=n {
            let x = if i == n { rect.x1 } else { rect.x0 + i as f64 * dx };
            vertices.push(Point2::new(x, y));
            boundary_vertex_flags.push(i == 0 || j == 0 || i == n || j == n);
        }
    }

    let mut triangles = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let v00 = j * stride + i;
            let v10 = v00 + 1;
            let v01 = v00 + stride;
            let v11 = v01 + 1;
            triangles.push([v00, v10, v11]);
            triangles.push([v00, v11, v01]);
        }
    }

    Mesh {
        rect,
        n,
        vertices,
        triangles,
        boundary_vertex_flags,
        h: dx.hypot(dy),
    }
}
