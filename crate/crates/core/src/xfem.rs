//! The extended P1 space: standard hats plus side-restricted copies on
//! vertices whose support meets the interface.
//!
//! Every vertex touching a cut element carries two degrees of freedom, one
//! for the restriction of its hat to Ω₁ and one for Ω₂. This spans the same
//! space as the standard hats enriched with cut basis functions.

use crate::error::{Error, Result};
use crate::interface::CutInfo;
use crate::mesh::{signed_double_area, Mesh, Point2, Vec2};
use crate::problem::Side;

/// Which subdomain(s) a degree of freedom lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DofSide {
    Both,
    Only(Side),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VertexDofs {
    Single(usize),
    /// `[side 1, side 2]`
    Double([usize; 2]),
}

impl VertexDofs {
    pub fn on_side(self, side: Side) -> usize {
        match self {
            VertexDofs::Single(d) => d,
            VertexDofs::Double(d) => d[side.index()],
        }
    }
}

/// Global numbering of the extended space (vertex-major, side-minor).
#[derive(Debug, Clone)]
pub struct ExtendedDofMap {
    pub vertex_dofs: Vec<VertexDofs>,
    pub dof_vertex: Vec<usize>,
    pub dof_side: Vec<DofSide>,
    /// Sorted DOFs attached to boundary vertices (both copies if doubled).
    pub dirichlet_dofs: Vec<usize>,
    is_dirichlet: Vec<bool>,
}

impl ExtendedDofMap {
    pub fn num_dofs(&self) -> usize {
        self.dof_vertex.len()
    }

    pub fn is_dirichlet(&self, dof: usize) -> bool {
        self.is_dirichlet[dof]
    }

    pub fn num_enriched_vertices(&self) -> usize {
        self.vertex_dofs
            .iter()
            .filter(|d| matches!(d, VertexDofs::Double(_)))
            .count()
    }

    /// Global DOFs of the three vertices of `element` on `side`.
    pub fn element_dofs(&self, mesh: &Mesh, element: usize, side: Side) -> [usize; 3] {
        mesh.triangles[element].map(|v| self.vertex_dofs[v].on_side(side))
    }

    /// Position of a vertex on which the DOF's hat equals 1, and the side
    /// whose extension the DOF interpolates.
    pub fn dof_location(&self, mesh: &Mesh, dof: usize) -> (Point2, Option<Side>) {
        let side = match self.dof_side[dof] {
            DofSide::Both => None,
            DofSide::Only(s) => Some(s),
        };
        (mesh.vertices[self.dof_vertex[dof]], side)
    }

    /// Nodal interpolation of a side-wise field. Single DOFs take the value
    /// of the side their vertex lies on; doubled DOFs the extension of their side.
    pub fn interpolate(
        &self,
        mesh: &Mesh,
        cut_info: &CutInfo,
        field: impl Fn(Point2, Side) -> f64,
    ) -> Vec<f64> {
        (0..self.num_dofs())
            .map(|d| {
                let v = self.dof_vertex[d];
                let side = match self.dof_side[d] {
                    DofSide::Both => cut_info.vertex_sides[v],
                    DofSide::Only(s) => s,
                };
                field(mesh.vertices[v], side)
            })
            .collect()
    }
}

/// Doubles the DOFs of every vertex incident to a cut element.
pub fn build_extended_space(mesh: &Mesh, cut_info: &CutInfo) -> ExtendedDofMap {
    let mut enriched = vec![false; mesh.num_vertices()];
    for cut in &cut_info.cuts {
        for v in mesh.triangles[cut.element] {
            enriched[v] = true;
        }
    }
    let mut vertex_dofs = Vec::with_capacity(mesh.num_vertices());
    let mut dof_vertex = Vec::new();
    let mut dof_side = Vec::new();
    for (v, &double) in enriched.iter().enumerate() {
        let first = dof_vertex.len();
        if double {
            vertex_dofs.push(VertexDofs::Double([first, first + 1]));
            dof_vertex.extend([v, v]);
            dof_side.extend([DofSide::Only(Side::One), DofSide::Only(Side::Two)]);
        } else {
            vertex_dofs.push(VertexDofs::Single(first));
            dof_vertex.push(v);
            dof_side.push(DofSide::Both);
        }
    }
    let is_dirichlet: Vec<bool> = dof_vertex.iter().map(|&v| mesh.is_boundary_vertex(v)).collect();
    let dirichlet_dofs = (0..is_dirichlet.len()).filter(|&d| is_dirichlet[d]).collect();
    ExtendedDofMap {
        vertex_dofs,
        dof_vertex,
        dof_side,
        dirichlet_dofs,
        is_dirichlet,
    }
}

/// Gradients of the three barycentric coordinates of a triangle.
pub fn hat_gradients(tri: &[Point2; 3]) -> [Vec2; 3] {
    let d = signed_double_area(tri[0], tri[1], tri[2]);
    let g = |a: Point2, b: Point2| Point2::new(a.y - b.y, b.x - a.x) * (1.0 / d);
    [g(tri[1], tri[2]), g(tri[2], tri[0]), g(tri[0], tri[1])]
}

/// Barycentric coordinates of `p` in `tri`.
pub fn barycentric(tri: &[Point2; 3], p: Point2) -> [f64; 3] {
    let d = signed_double_area(tri[0], tri[1], tri[2]);
    let l1 = signed_double_area(tri[0], p, tri[2]) / d;
    let l2 = signed_double_area(tri[0], tri[1], p) / d;
    [1.0 - l1 - l2, l1, l2]
}

/// Local basis evaluation on one element.
///
/// For cut elements the local DOFs are the three side-1 copies followed by
/// the three side-2 copies; only the copies of the requested side are nonzero.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisEval {
    pub dofs: Vec<usize>,
    pub values: Vec<f64>,
    pub gradients: Vec<Vec2>,
}

impl BasisEval {
    pub fn value_of(&self, coeffs: &[f64]) -> f64 {
        self.dofs.iter().zip(&self.values).map(|(&d, &v)| coeffs[d] * v).sum()
    }

    pub fn gradient_of(&self, coeffs: &[f64]) -> Vec2 {
        self.dofs
            .iter()
            .zip(&self.gradients)
            .fold(Vec2::default(), |acc, (&d, &g)| acc + g * coeffs[d])
    }
}

const INSIDE_TOLERANCE: f64 = 1e-10;

fn check_inside(element: usize, lambda: &[f64; 3]) -> Result<()> {
    if lambda.iter().any(|&l| l < -INSIDE_TOLERANCE) {
        return Err(Error::geometry(
            element,
            format!("evaluation point outside element (barycentric {lambda:?})"),
        ));
    }
    Ok(())
}

/// Values and gradients of the basis functions active at `point` on `side`.
/// `side` is ignored for uncut elements.
pub fn eval_basis(
    mesh: &Mesh,
    cut_info: &CutInfo,
    space: &ExtendedDofMap,
    element: usize,
    side: Option<Side>,
    point: Point2,
) -> Result<BasisEval> {
    let tri = mesh.triangle_points(element);
    let lambda = barycentric(&tri, point);
    check_inside(element, &lambda)?;
    let grads = hat_gradients(&tri);
    match cut_info.class(element).side() {
        Some(s) => Ok(BasisEval {
            dofs: space.element_dofs(mesh, element, s).to_vec(),
            values: lambda.to_vec(),
            gradients: grads.to_vec(),
        }),
        None => {
            let side = side.ok_or_else(|| {
                Error::Usage(format!("element {element} is cut; a side must be given"))
            })?;
            let mut eval = BasisEval {
                dofs: Vec::with_capacity(6),
                values: vec![0.0; 6],
                gradients: vec![Vec2::default(); 6],
            };
            for s in Side::BOTH {
                eval.dofs.extend(space.element_dofs(mesh, element, s));
            }
            let off = 3 * side.index();
            eval.values[off..off + 3].copy_from_slice(&lambda);
            eval.gradients[off..off + 3].copy_from_slice(&grads);
            Ok(eval)
        }
    }
}

/// Traces of the local basis on the chord of a cut element.
#[derive(Debug, Clone, PartialEq)]
pub struct InterfaceTraces {
    /// `[side 1 DOFs, side 2 DOFs]`
    pub dofs: [[usize; 3]; 2],
    /// Hat values at the point (identical for both copies).
    pub values: [f64; 3],
    pub gradients: [Vec2; 3],
    /// Area fractions `[k₁, k₂]`.
    pub k: [f64; 2],
    /// Unit normal from Ω₁ into Ω₂.
    pub flux_normal: Vec2,
}

/// `k₁ v₁ + k₂ v₂`
pub fn weighted_average(k: [f64; 2], v1: f64, v2: f64) -> f64 {
    k[0] * v1 + k[1] * v2
}

impl InterfaceTraces {
    pub fn side_value(&self, coeffs: &[f64], side: Side) -> f64 {
        let d = &self.dofs[side.index()];
        (0..3).map(|i| coeffs[d[i]] * self.values[i]).sum()
    }

    pub fn side_gradient(&self, coeffs: &[f64], side: Side) -> Vec2 {
        let d = &self.dofs[side.index()];
        (0..3).fold(Vec2::default(), |acc, i| acc + self.gradients[i] * coeffs[d[i]])
    }

    /// `[v] = v₁ − v₂`
    pub fn jump(&self, coeffs: &[f64]) -> f64 {
        self.side_value(coeffs, Side::One) - self.side_value(coeffs, Side::Two)
    }

    /// `{α ∇_n v}` (or `{∇_n v}` without `alpha`).
    pub fn average_normal_flux(&self, coeffs: &[f64], alpha: Option<[f64; 2]>) -> f64 {
        let a = alpha.unwrap_or([1.0, 1.0]);
        let f1 = a[0] * self.side_gradient(coeffs, Side::One).dot(self.flux_normal);
        let f2 = a[1] * self.side_gradient(coeffs, Side::Two).dot(self.flux_normal);
        weighted_average(self.k, f1, f2)
    }

    /// Contribution of each local basis function to `[v]`: `[side 1, side 2]`.
    pub fn jump_coefficients(&self) -> [[f64; 3]; 2] {
        [self.values, self.values.map(|v| -v)]
    }

    /// Contribution of each local basis function to `{α ∇_n v}`.
    pub fn average_flux_coefficients(&self, alpha: Option<[f64; 2]>) -> [[f64; 3]; 2] {
        let a = alpha.unwrap_or([1.0, 1.0]);
        let dn = self.gradients.map(|g| g.dot(self.flux_normal));
        [
            dn.map(|g| self.k[0] * a[0] * g),
            dn.map(|g| self.k[1] * a[1] * g),
        ]
    }
}

pub fn eval_interface_traces(
    mesh: &Mesh,
    cut_info: &CutInfo,
    space: &ExtendedDofMap,
    element: usize,
    point: Point2,
) -> Result<InterfaceTraces> {
    let cut = cut_info.cut(element).ok_or_else(|| {
        Error::Usage(format!("interface traces requested on uncut element {element}"))
    })?;
    let tri = cut.vertices;
    let lambda = barycentric(&tri, point);
    check_inside(element, &lambda)?;
    Ok(InterfaceTraces {
        dofs: [
            space.element_dofs(mesh, element, Side::One),
            space.element_dofs(mesh, element, Side::Two),
        ],
        values: lambda,
        gradients: hat_gradients(&tri),
        k: cut.k,
        flux_normal: cut.flux_normal(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interface::LevelSet;
    use crate::mesh::{build_uniform_mesh, Rect};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn circle_setup(n: usize) -> (Mesh, CutInfo, ExtendedDofMap) {
        let mesh = build_uniform_mesh(Rect::symmetric_square(), n).unwrap();
        let cut_info = CutInfo::build(&mesh, &LevelSet::circle(Point2::default(), 0.5)).unwrap();
        let space = build_extended_space(&mesh, &cut_info);
        (mesh, cut_info, space)
    }

    fn random_point_in(rng: &mut impl Rng, tri: &[Point2; 3]) -> Point2 {
        let (mut a, mut b): (f64, f64) = (rng.random(), rng.random());
        if a + b > 1.0 {
            (a, b) = (1.0 - a, 1.0 - b);
        }
        tri[0] + (tri[1] - tri[0]) * a + (tri[2] - tri[0]) * b
    }

    #[test]
    fn no_interface_gives_plain_p1() {
        let mesh = build_uniform_mesh(Rect::unit_square(), 6).unwrap();
        let cut_info = CutInfo::build(&mesh, &LevelSet::constant(-1.0)).unwrap();
        let space = build_extended_space(&mesh, &cut_info);
        assert_eq!(space.num_dofs(), mesh.num_vertices());
        assert_eq!(space.dirichlet_dofs.len(), 24);
    }

    #[test]
    fn single_cut_element_doubles_three_vertices() {
        let n = 4;
        let mesh = build_uniform_mesh(Rect::unit_square(), n).unwrap();
        // The corner (1, 0) belongs to a single triangle; clip it off.
        let c = 0.3 / n as f64;
        let ls = LevelSet::new("corner", move |p| (1.0 - p.x) + p.y - c, |_| Point2::new(-1.0, 1.0));
        let cut_info = CutInfo::build(&mesh, &ls).unwrap();
        assert_eq!(cut_info.num_cut(), 1);
        let space = build_extended_space(&mesh, &cut_info);
        assert_eq!(space.num_dofs(), mesh.num_vertices() + 3);
        assert_eq!(space.num_enriched_vertices(), 3);
    }

    #[test]
    fn dimension_matches_brute_force_incidence() {
        let (mesh, cut_info, space) = circle_setup(32);
        let mut enriched = 0;
        for v in 0..mesh.num_vertices() {
            let touches = (0..mesh.num_triangles())
                .any(|t| mesh.triangles[t].contains(&v) && cut_info.class(t).is_cut());
            enriched += touches as usize;
        }
        assert!(enriched > 0);
        assert_eq!(space.num_dofs(), mesh.num_vertices() + enriched);
        assert_eq!(space.num_enriched_vertices(), enriched);
        // Each DOF lives on exactly one side or both.
        for d in 0..space.num_dofs() {
            let v = space.dof_vertex[d];
            match space.vertex_dofs[v] {
                VertexDofs::Single(s) => {
                    assert_eq!(s, d);
                    assert_eq!(space.dof_side[d], DofSide::Both);
                }
                VertexDofs::Double(ds) => assert!(ds.contains(&d)),
            }
        }
    }

    #[test]
    fn lagrange_property_on_uncut_element() {
        let (mesh, cut_info, space) = circle_setup(8);
        let e = (0..mesh.num_triangles()).find(|&t| !cut_info.class(t).is_cut()).unwrap();
        let tri = mesh.triangle_points(e);
        for (i, &p) in tri.iter().enumerate() {
            let eval = eval_basis(&mesh, &cut_info, &space, e, None, p).unwrap();
            for j in 0..3 {
                assert!((eval.values[j] - (i == j) as u8 as f64).abs() < 1e-14);
            }
        }
        let outside = tri[0] + (tri[0] - tri[1]);
        assert!(matches!(
            eval_basis(&mesh, &cut_info, &space, e, None, outside),
            Err(Error::Geometry { .. })
        ));
    }

    #[test]
    fn partition_of_unity_per_side() {
        let (mesh, cut_info, space) = circle_setup(16);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let e = rng.random_range(0..mesh.num_triangles());
            let tri = mesh.triangle_points(e);
            let p = random_point_in(&mut rng, &tri);
            for side in Side::BOTH {
                let eval = eval_basis(&mesh, &cut_info, &space, e, Some(side), p).unwrap();
                let sum: f64 = eval.values.iter().sum();
                let gsum = eval.gradients.iter().fold(Vec2::default(), |a, &g| a + g);
                assert!((sum - 1.0).abs() < 1e-13);
                assert!(gsum.norm() < 1e-13 * mesh.h.recip());
            }
        }
        // On a cut element, the other side's copies vanish.
        let cut = &cut_info.cuts[0];
        let p = (cut.sub_tris[0][0][0] + cut.sub_tris[0][0][1] + cut.sub_tris[0][0][2]) * (1.0 / 3.0);
        let eval = eval_basis(&mesh, &cut_info, &space, cut.element, Some(Side::One), p).unwrap();
        assert!(eval.values[3..].iter().all(|&v| v == 0.0));
        assert!(eval_basis(&mesh, &cut_info, &space, cut.element, None, p).is_err());
    }

    #[test]
    fn traces_jump_and_average() {
        let (mesh, cut_info, space) = circle_setup(16);
        let cut = &cut_info.cuts[3];
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        // Continuous function: both copies equal the same nodal values.
        let nodal: Vec<f64> = (0..mesh.num_vertices()).map(|_| rng.random()).collect();
        let coeffs: Vec<f64> = (0..space.num_dofs()).map(|d| nodal[space.dof_vertex[d]]).collect();
        for (x, _) in cut.segment_rule(3).unwrap().iter() {
            let tr = eval_interface_traces(&mesh, &cut_info, &space, cut.element, x).unwrap();
            assert!(tr.jump(&coeffs).abs() < 1e-14);
            // Average with explicit coefficients matches the vector form.
            let f = tr.average_flux_coefficients(Some([1.0, 10.0]));
            let by_coef: f64 = (0..2)
                .map(|s| (0..3).map(|i| f[s][i] * coeffs[tr.dofs[s][i]]).sum::<f64>())
                .sum();
            assert!((by_coef - tr.average_normal_flux(&coeffs, Some([1.0, 10.0]))).abs() < 1e-12);
        }
        let uncut = (0..mesh.num_triangles()).find(|&t| !cut_info.class(t).is_cut()).unwrap();
        assert!(matches!(
            eval_interface_traces(&mesh, &cut_info, &space, uncut, mesh.triangle_points(uncut)[0]),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn equal_weights_average() {
        assert_eq!(weighted_average([0.5, 0.5], 2.0, 4.0), 3.0);
        // Fig. 2 style cut with the small side carrying k = 0.125.
        assert_eq!(weighted_average([0.875, 0.125], 1.0, 0.0), 0.875);
        assert_eq!(weighted_average([0.875, 0.125], 0.0, 1.0), 0.125);
    }
}
