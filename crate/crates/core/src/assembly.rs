//! Nitsche-XFEM stiffness and mass matrices, load vectors and Dirichlet
//! elimination.
//!
//! The bilinear form is
//!
//! ```text
//! a_h(u, v) = (α∇u, ∇v)_{Ω₁∪Ω₂} − ({α∇_n u}, [v])_Γ − ({α∇_n v}, [u])_Γ + λ([u], [v])_Γ
//! ```
//!
//! with `{w} = k₁w₁ + k₂w₂`, `[w] = w₁ − w₂`, `n` pointing from Ω₁ into Ω₂
//! and `λ = C̃ h⁻¹ max(α₁, α₂)`. Volume terms on cut elements are integrated
//! side by side over the sub-triangles, interface terms on the chord.

use std::ops::Deref;

use rayon::prelude::*;

use crate::discretization::Discretization;
use crate::error::{Error, Result};
use crate::interface::{segment_quadrature, TriangleRule};
use crate::mesh::{Point2, Vec2};
use crate::problem::{ControlBounds, Side};
use crate::sparse::CsrMatrix;
use crate::xfem::{barycentric, hat_gradients};

/// Nitsche penalty `λ = c_tilde · max(α₁, α₂) / h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NitscheParams {
    pub c_tilde: f64,
}

impl NitscheParams {
    pub fn new(c_tilde: f64) -> Result<Self> {
        if !(c_tilde > 0.0 && c_tilde.is_finite()) {
            return Err(Error::config(format!("penalty coefficient must be positive, got {c_tilde}")));
        }
        Ok(Self { c_tilde })
    }

    /// Parameters giving `λ = lambda_coef / h` for the given coefficients.
    pub fn from_lambda_coef(lambda_coef: f64, alpha: [f64; 2]) -> Result<Self> {
        Self::new(lambda_coef / alpha[0].max(alpha[1]))
    }

    pub fn lambda(&self, h: f64, alpha: [f64; 2]) -> f64 {
        self.c_tilde * alpha[0].max(alpha[1]) / h
    }
}

/// Volume rule degree (2 or 4) and Gauss points per interface chord.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuadratureOrder {
    pub volume_degree: usize,
    pub interface_points: usize,
}

impl Default for QuadratureOrder {
    fn default() -> Self {
        Self {
            volume_degree: 4,
            interface_points: 3,
        }
    }
}

/// Maximum depth of the kink refinement used to integrate projected controls.
pub const CONTROL_REFINEMENT_DEPTH: usize = 3;

/// Symmetric matrix in CSR layout; `symmetric` records the checked property.
#[derive(Debug, Clone)]
pub struct SparseSymMatrix {
    pub csr: CsrMatrix,
    pub symmetric: bool,
}

impl SparseSymMatrix {
    fn new(csr: CsrMatrix) -> Self {
        let symmetric = csr.symmetry_defect() <= 1e-12 * csr.max_abs();
        Self { csr, symmetric }
    }

    pub fn dim(&self) -> usize {
        self.csr.nrows()
    }
}

impl Deref for SparseSymMatrix {
    type Target = CsrMatrix;
    fn deref(&self) -> &CsrMatrix {
        &self.csr
    }
}

type Triplets = Vec<(usize, usize, f64)>;

fn gather<T: Send>(n: usize, local: impl Fn(usize) -> Result<Vec<T>> + Sync + Send) -> Result<Vec<T>> {
    let parts: Vec<Vec<T>> = (0..n).into_par_iter().map(local).collect::<Result<_>>()?;
    Ok(parts.into_iter().flatten().collect())
}

/// Stiffness matrix `A(i, j) = a_h(φ_j, φ_i)`.
pub fn assemble_stiffness(
    disc: &Discretization,
    alpha: [f64; 2],
    params: NitscheParams,
    quad: QuadratureOrder,
) -> Result<SparseSymMatrix> {
    let Discretization {
        mesh,
        cut_info,
        space,
    } = disc;
    let lambda = params.lambda(mesh.h, alpha);
    let triplets: Triplets = gather(mesh.num_triangles(), |e| {
        let tri = mesh.triangle_points(e);
        let grads = hat_gradients(&tri);
        let mut out = Vec::with_capacity(36);
        let volume = |side: Side, area: f64, out: &mut Triplets| {
            let dofs = space.element_dofs(mesh, e, side);
            let a = alpha[side.index()] * area;
            for i in 0..3 {
                for j in 0..3 {
                    out.push((dofs[i], dofs[j], a * grads[i].dot(grads[j])));
                }
            }
        };
        if let Some(side) = cut_info.class(e).side() {
            volume(side, mesh.element_area(e), &mut out);
            return Ok(out);
        }
        let cut = cut_info
            .cut(e)
            .ok_or_else(|| Error::Internal(format!("cut element {e} has no cut geometry")))?;
        for side in Side::BOTH {
            volume(side, cut.side_area(side), &mut out);
        }

        let n = cut.flux_normal();
        let dofs: Vec<usize> = Side::BOTH
            .iter()
            .flat_map(|&s| space.element_dofs(mesh, e, s))
            .collect();
        let dn = grads.map(|g| g.dot(n));
        let mut local = [[0.0; 6]; 6];
        for (x, w) in cut.segment_rule(quad.interface_points)?.iter() {
            let l = barycentric(&tri, x);
            let mut jump = [0.0; 6];
            let mut flux = [0.0; 6];
            for i in 0..3 {
                jump[i] = l[i];
                jump[3 + i] = -l[i];
                flux[i] = cut.k[0] * alpha[0] * dn[i];
                flux[3 + i] = cut.k[1] * alpha[1] * dn[i];
            }
            for a in 0..6 {
                for b in 0..6 {
                    local[a][b] +=
                        w * (-flux[b] * jump[a] - flux[a] * jump[b] + lambda * jump[a] * jump[b]);
                }
            }
        }
        for a in 0..6 {
            for b in 0..6 {
                out.push((dofs[a], dofs[b], local[a][b]));
            }
        }
        Ok(out)
    })?;
    let n = space.num_dofs();
    Ok(SparseSymMatrix::new(CsrMatrix::from_triplets(n, n, triplets)))
}

/// Mass matrix `M(i, j) = (φ_i, φ_j)`, integrated side by side.
pub fn assemble_mass(disc: &Discretization, quad: QuadratureOrder) -> Result<SparseSymMatrix> {
    let Discretization {
        mesh,
        cut_info,
        space,
    } = disc;
    let rule = TriangleRule::new(quad.volume_degree)?;
    let triplets: Triplets = gather(mesh.num_triangles(), |e| {
        let tri = mesh.triangle_points(e);
        let mut out = Vec::with_capacity(18);
        cut_info.for_each_piece(mesh, e, |side, piece| {
            let dofs = space.element_dofs(mesh, e, side);
            let mut local = [[0.0; 3]; 3];
            rule.for_each(piece, |x, w| {
                let l = barycentric(&tri, x);
                for i in 0..3 {
                    for j in 0..3 {
                        local[i][j] += w * l[i] * l[j];
                    }
                }
            });
            for i in 0..3 {
                for j in 0..3 {
                    out.push((dofs[i], dofs[j], local[i][j]));
                }
            }
        });
        Ok(out)
    })?;
    let n = space.num_dofs();
    Ok(SparseSymMatrix::new(CsrMatrix::from_triplets(n, n, triplets)))
}

/// The control entering a load vector.
#[derive(Clone, Copy)]
pub enum ControlField<'a> {
    Zero,
    /// Coefficients in the extended space (then `(u, v) = M U`).
    Dofs(&'a [f64]),
    /// A point-evaluable function, integrated by the volume rule.
    Function(&'a (dyn Fn(Point2, Side) -> f64 + Sync)),
    /// `clamp(−p_h / a, bounds)` integrated on the kink-refined integration mesh.
    Projected {
        costate: &'a [f64],
        regularization: f64,
        bounds: ControlBounds,
    },
}

/// Evaluates a discrete function on `side` of element `e` at `x`.
pub fn eval_discrete(disc: &Discretization, coeffs: &[f64], e: usize, side: Side, x: Point2) -> f64 {
    let tri = disc.mesh.triangle_points(e);
    let l = barycentric(&tri, x);
    let dofs = disc.space.element_dofs(&disc.mesh, e, side);
    (0..3).map(|i| coeffs[dofs[i]] * l[i]).sum()
}

/// Gradient of a discrete function on `side` of element `e`.
pub fn eval_discrete_gradient(disc: &Discretization, coeffs: &[f64], e: usize, side: Side) -> Vec2 {
    let tri = disc.mesh.triangle_points(e);
    let g = hat_gradients(&tri);
    let dofs = disc.space.element_dofs(&disc.mesh, e, side);
    (0..3).fold(Vec2::default(), |acc, i| acc + g[i] * coeffs[dofs[i]])
}

/// Visits the quadrature points of one integration piece, subdividing
/// (up to `CONTROL_REFINEMENT_DEPTH` times) wherever the linear function
/// `ξ = −p_h / a` crosses a finite bound. Calls `f(x, w, ξ(x))`.
pub fn for_each_control_point(
    rule: &TriangleRule,
    piece: &[Point2; 3],
    xi_at: &dyn Fn(Point2) -> f64,
    bounds: ControlBounds,
    f: &mut dyn FnMut(Point2, f64, f64),
) {
    fn crosses(values: &[f64; 3], level: f64) -> bool {
        level.is_finite() && {
            let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            lo < level && level < hi
        }
    }
    fn recurse(
        rule: &TriangleRule,
        tri: &[Point2; 3],
        xi_at: &dyn Fn(Point2) -> f64,
        bounds: ControlBounds,
        depth: usize,
        f: &mut dyn FnMut(Point2, f64, f64),
    ) {
        let values = tri.map(xi_at);
        if depth < CONTROL_REFINEMENT_DEPTH
            && (crosses(&values, bounds.lower) || crosses(&values, bounds.upper))
        {
            let [a, b, c] = *tri;
            let (ab, bc, ca) = (a.midpoint(b), b.midpoint(c), c.midpoint(a));
            for child in [[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]] {
                recurse(rule, &child, xi_at, bounds, depth + 1, f);
            }
        } else {
            rule.for_each(tri, |x, w| f(x, w, xi_at(x)));
        }
    }
    recurse(rule, piece, xi_at, bounds, 0, f);
}

/// Writes the kink-refined integration mesh of a projected control as CSV
/// rows `element, side, x0, y0, x1, y1, x2, y2`.
pub fn write_control_integration_mesh(
    disc: &Discretization,
    costate: &[f64],
    regularization: f64,
    bounds: ControlBounds,
    path: &std::path::Path,
) -> Result<()> {
    use std::io::Write;
    // A degree-0 "rule" is emulated by collecting leaf triangles directly.
    fn leaves(
        tri: [Point2; 3],
        xi_at: &dyn Fn(Point2) -> f64,
        bounds: ControlBounds,
        depth: usize,
        out: &mut Vec<[Point2; 3]>,
    ) {
        let v = tri.map(xi_at);
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let cross = |l: f64| l.is_finite() && lo < l && l < hi;
        if depth < CONTROL_REFINEMENT_DEPTH && (cross(bounds.lower) || cross(bounds.upper)) {
            let [a, b, c] = tri;
            let (ab, bc, ca) = (a.midpoint(b), b.midpoint(c), c.midpoint(a));
            for child in [[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]] {
                leaves(child, xi_at, bounds, depth + 1, out);
            }
        } else {
            out.push(tri);
        }
    }
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "element,side,x0,y0,x1,y1,x2,y2")?;
    for e in 0..disc.mesh.num_triangles() {
        let mut pieces = Vec::new();
        disc.cut_info
            .for_each_piece(&disc.mesh, e, |side, tri| pieces.push((side, *tri)));
        for (side, tri) in pieces {
            let xi_at = |x: Point2| -eval_discrete(disc, costate, e, side, x) / regularization;
            let mut out = Vec::new();
            leaves(tri, &xi_at, bounds, 0, &mut out);
            for t in out {
                writeln!(
                    w,
                    "{e},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                    side.index() + 1,
                    t[0].x,
                    t[0].y,
                    t[1].x,
                    t[1].y,
                    t[2].x,
                    t[2].y
                )?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Load vector `(f + u, φ_i) + (k₂ g, φ_{i,1})_Γ + (k₁ g, φ_{i,2})_Γ`.
///
/// `source` is evaluated side by side; `flux_jump(x, n)` receives the chord
/// normal pointing from Ω₁ into Ω₂.
pub fn assemble_load(
    disc: &Discretization,
    source: &(dyn Fn(Point2, Side) -> f64 + Sync),
    flux_jump: &(dyn Fn(Point2, Vec2) -> f64 + Sync),
    control: ControlField<'_>,
    quad: QuadratureOrder,
) -> Result<Vec<f64>> {
    let Discretization {
        mesh,
        cut_info,
        space,
    } = disc;
    let rule = TriangleRule::new(quad.volume_degree)?;
    let entries: Vec<(usize, f64)> = gather(mesh.num_triangles(), |e| {
        let tri = mesh.triangle_points(e);
        let mut out = Vec::with_capacity(12);
        let mut pieces = Vec::with_capacity(3);
        cut_info.for_each_piece(mesh, e, |side, piece| pieces.push((side, *piece)));
        for (side, piece) in pieces {
            let dofs = space.element_dofs(mesh, e, side);
            let mut local = [0.0; 3];
            let mut add = |x: Point2, w: f64, value: f64| {
                let l = barycentric(&tri, x);
                for i in 0..3 {
                    local[i] += w * value * l[i];
                }
            };
            rule.for_each(&piece, |x, w| {
                let u = match control {
                    ControlField::Zero | ControlField::Projected { .. } => 0.0,
                    ControlField::Dofs(c) => eval_discrete(disc, c, e, side, x),
                    ControlField::Function(u) => u(x, side),
                };
                add(x, w, source(x, side) + u);
            });
            if let ControlField::Projected {
                costate,
                regularization,
                bounds,
            } = control
            {
                let xi_at = |x: Point2| -eval_discrete(disc, costate, e, side, x) / regularization;
                for_each_control_point(&rule, &piece, &xi_at, bounds, &mut |x, w, xi| {
                    add(x, w, bounds.clamp(xi))
                });
            }
            out.extend(dofs.into_iter().zip(local));
        }
        if let Some(cut) = cut_info.cut(e) {
            let n = cut.flux_normal();
            let mut local = [[0.0; 3]; 2];
            for (x, w) in segment_quadrature(cut.q[0], cut.q[1], quad.interface_points)?.iter() {
                let g = flux_jump(x, n);
                let l = barycentric(&tri, x);
                for i in 0..3 {
                    local[0][i] += w * cut.k[1] * g * l[i];
                    local[1][i] += w * cut.k[0] * g * l[i];
                }
            }
            for side in Side::BOTH {
                let dofs = space.element_dofs(mesh, e, side);
                out.extend(dofs.into_iter().zip(local[side.index()]));
            }
        }
        Ok(out)
    })?;
    let mut load = vec![0.0; space.num_dofs()];
    for (d, v) in entries {
        load[d] += v;
    }
    Ok(load)
}

/// Split of the DOFs into free and Dirichlet-constrained ones.
#[derive(Debug, Clone)]
pub struct DofPartition {
    pub free: Vec<usize>,
    pub fixed: Vec<usize>,
}

impl DofPartition {
    pub fn new(disc: &Discretization) -> Self {
        let n = disc.num_dofs();
        let free = (0..n).filter(|&d| !disc.space.is_dirichlet(d)).collect();
        Self {
            free,
            fixed: disc.space.dirichlet_dofs.clone(),
        }
    }

    pub fn restrict(&self, full: &[f64]) -> Vec<f64> {
        self.free.iter().map(|&d| full[d]).collect()
    }

    pub fn restrict_fixed(&self, full: &[f64]) -> Vec<f64> {
        self.fixed.iter().map(|&d| full[d]).collect()
    }

    /// Full-length vector from free values and full-length boundary values.
    pub fn expand(&self, free_values: &[f64], boundary: &[f64]) -> Vec<f64> {
        let mut out = boundary.to_vec();
        for &d in &self.free {
            out[d] = 0.0;
        }
        for (&d, &v) in self.free.iter().zip(free_values) {
            out[d] = v;
        }
        out
    }
}

/// Nodal values of `boundary` on the Dirichlet DOFs (zero elsewhere). Both
/// copies of a doubled boundary vertex take the value of their side's extension.
pub fn dirichlet_values(disc: &Discretization, boundary: &dyn Fn(Point2, Side) -> f64) -> Vec<f64> {
    let mut values = disc
        .space
        .interpolate(&disc.mesh, &disc.cut_info, boundary);
    for (d, v) in values.iter_mut().enumerate() {
        if !disc.space.is_dirichlet(d) {
            *v = 0.0;
        }
    }
    values
}

/// Symmetric elimination of Dirichlet DOFs: their couplings move to the
/// right-hand side and their rows and columns become identity rows.
pub fn apply_dirichlet(
    matrix: &CsrMatrix,
    rhs: &[f64],
    space: &crate::xfem::ExtendedDofMap,
    values: &[f64],
) -> (CsrMatrix, Vec<f64>) {
    let n = matrix.nrows();
    let mut new_rhs = rhs.to_vec();
    let mut triplets = Vec::with_capacity(matrix.nnz());
    for (r, c, v) in matrix.triplets() {
        match (space.is_dirichlet(r), space.is_dirichlet(c)) {
            (false, false) => triplets.push((r, c, v)),
            (false, true) => new_rhs[r] -= v * values[c],
            _ => {}
        }
    }
    for &d in &space.dirichlet_dofs {
        triplets.push((d, d, 1.0));
        new_rhs[d] = values[d];
    }
    (CsrMatrix::from_triplets(n, n, triplets), new_rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interface::LevelSet;
    use crate::mesh::Rect;
    use crate::sparse::dot;
    use approx::assert_relative_eq;

    fn no_interface(n: usize) -> Discretization {
        Discretization::new(Rect::unit_square(), n, &LevelSet::constant(-1.0)).unwrap()
    }

    /// Textbook P1 stiffness and mass matrices, assembled element by element
    /// from closed-form local matrices.
    fn textbook_p1(disc: &Discretization) -> (CsrMatrix, CsrMatrix) {
        let mesh = &disc.mesh;
        let mut k = Vec::new();
        let mut m = Vec::new();
        for (e, tri) in mesh.triangles.iter().enumerate() {
            let p = mesh.triangle_points(e);
            let area = mesh.element_area(e);
            let grads = hat_gradients(&p);
            for i in 0..3 {
                for j in 0..3 {
                    k.push((tri[i], tri[j], area * grads[i].dot(grads[j])));
                    m.push((tri[i], tri[j], area / 12.0 * if i == j { 2.0 } else { 1.0 }));
                }
            }
        }
        let n = mesh.num_vertices();
        (CsrMatrix::from_triplets(n, n, k), CsrMatrix::from_triplets(n, n, m))
    }

    #[test]
    fn uncut_assembly_is_plain_p1() {
        let disc = no_interface(8);
        let params = NitscheParams::new(10.0).unwrap();
        let a = assemble_stiffness(&disc, [1.0, 1.0], params, QuadratureOrder::default()).unwrap();
        let m = assemble_mass(&disc, QuadratureOrder::default()).unwrap();
        let (k_ref, m_ref) = textbook_p1(&disc);
        for (r, c, v) in k_ref.triplets() {
            assert!((a.get(r, c) - v).abs() <= 1e-12);
        }
        for (r, c, v) in m_ref.triplets() {
            assert!((m.get(r, c) - v).abs() <= 1e-12);
        }
        assert_eq!(a.nnz(), k_ref.nnz());
    }

    #[test]
    fn mass_row_sums_give_domain_area() {
        let disc = Discretization::new(
            Rect::symmetric_square(),
            16,
            &LevelSet::circle(Point2::default(), 3f64.sqrt() / 4.0),
        )
        .unwrap();
        let m = assemble_mass(&disc, QuadratureOrder::default()).unwrap();
        let ones = vec![1.0; disc.num_dofs()];
        assert!((m.bilinear(&ones, &ones) - 4.0).abs() < 1e-10);
        assert!(m.symmetric);
    }

    #[test]
    fn penalty_scales_inversely_with_h() {
        let p = NitscheParams::from_lambda_coef(1000.0, [1.0, 100.0]).unwrap();
        let l1 = p.lambda(0.1, [1.0, 100.0]);
        let l2 = p.lambda(0.05, [1.0, 100.0]);
        assert_eq!(l2, 2.0 * l1);
        assert_relative_eq!(l1 * 0.1, 1000.0, max_relative = 1e-15);
        assert!(NitscheParams::new(0.0).is_err());
    }

    #[test]
    fn zero_data_gives_zero_load() {
        let disc = Discretization::new(Rect::unit_square(), 8, &LevelSet::line(-0.5, 0.7)).unwrap();
        let load = assemble_load(&disc, &|_, _| 0.0, &|_, _| 0.0, ControlField::Zero, QuadratureOrder::default())
            .unwrap();
        assert!(load.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn dof_control_matches_mass_product() {
        let disc = Discretization::new(Rect::unit_square(), 8, &LevelSet::line(-0.5, 0.7)).unwrap();
        let m = assemble_mass(&disc, QuadratureOrder::default()).unwrap();
        let u: Vec<f64> = (0..disc.num_dofs()).map(|i| ((i * 37) % 11) as f64 - 5.0).collect();
        let load = assemble_load(&disc, &|_, _| 0.0, &|_, _| 0.0, ControlField::Dofs(&u), QuadratureOrder::default())
            .unwrap();
        let mu = m.mul_vec(&u);
        for (a, b) in load.iter().zip(&mu) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn interface_flux_load_on_single_cut_element() {
        let n = 4;
        let mesh = crate::mesh::build_uniform_mesh(Rect::unit_square(), n).unwrap();
        let c = 0.3 / n as f64;
        let ls = LevelSet::new("corner", move |p| (1.0 - p.x) + p.y - c, |_| Point2::new(-1.0, 1.0));
        let disc = Discretization::from_mesh(mesh, &ls).unwrap();
        let cut = &disc.cut_info.cuts[0];
        let load =
            assemble_load(&disc, &|_, _| 0.0, &|_, _| 1.0, ControlField::Zero, QuadratureOrder::default()).unwrap();
        // v = side-1 copies of all three vertices set to 1: Σ φ_i = 1 on the chord.
        let side1 = disc.space.element_dofs(&disc.mesh, cut.element, Side::One);
        let v: f64 = side1.iter().map(|&d| load[d]).sum();
        assert_relative_eq!(v, cut.k[1] * cut.segment_length(), max_relative = 1e-14);
        let side2 = disc.space.element_dofs(&disc.mesh, cut.element, Side::Two);
        let v2: f64 = side2.iter().map(|&d| load[d]).sum();
        assert_relative_eq!(v2, cut.k[0] * cut.segment_length(), max_relative = 1e-14);
    }

    #[test]
    fn dirichlet_elimination_is_symmetric() {
        let disc = Discretization::new(Rect::unit_square(), 6, &LevelSet::line(-0.5, 0.7)).unwrap();
        let params = NitscheParams::new(10.0).unwrap();
        let a = assemble_stiffness(&disc, [1.0, 5.0], params, QuadratureOrder::default()).unwrap();
        let rhs = vec![1.0; disc.num_dofs()];
        let values = dirichlet_values(&disc, &|p, _| p.x + 2.0);
        let (ar, br) = apply_dirichlet(&a, &rhs, &disc.space, &values);
        assert!(ar.symmetry_defect() <= 1e-12 * ar.max_abs());
        for &d in &disc.space.dirichlet_dofs {
            assert_eq!(ar.get(d, d), 1.0);
            assert_eq!(br[d], values[d]);
        }
        // Free rows: rhs shifted by the boundary coupling.
        let part = DofPartition::new(&disc);
        let free = part.free[0];
        let shift: f64 = part.fixed.iter().map(|&d| a.get(free, d) * values[d]).sum();
        assert_relative_eq!(br[free], 1.0 - shift, max_relative = 1e-14);
        assert!(dot(&values, &values) > 0.0);
    }
}
