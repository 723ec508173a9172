//! Degrees of freedom of the weak space `W_h`, its subspace `W_h^0`, and the
//! primal space `M_h`.
//!
//! Global numbering (λ block first, then u):
//!
//! | block      | per                            | size            |
//! |------------|--------------------------------|-----------------|
//! | `λ0`       | triangle                       | `(k+1)(k+2)/2`  |
//! | `λb`       | interior and interface edge    | `k+1`           |
//! | `λn`       | every edge                     | `k`             |
//! | `u`        | triangle                       | `k(k+1)/2`      |
//!
//! Boundary traces are absent from the numbering, which is how `W_h^0` is
//! realized. Fluxes are stored once per edge relative to the edge's fixed
//! normal; the value seen by a triangle is the stored value times
//! [`Edge::orientation`](crate::mesh::Edge::orientation).
//!
//! Element-local layout: `[λ0 | λb on local edges 0,1,2 | λn on local edges 0,1,2]`.

use std::ops::Range;

use crate::femcore::{cell_dim, project_cell, project_edge, CellBasis, FemError};
use crate::mesh::{Mesh, Point};
use crate::Scalar;

/// Global index table for a mesh and polynomial degree `k >= 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DofMap {
    k: usize,
    num_triangles: usize,
    num_edges: usize,
    trace_slot: Vec<Option<usize>>,
    num_trace_edges: usize,
}

/// Sign-carrying global index of one local DOF; `None` marks a boundary
/// trace, which is zero in `W_h^0`.
pub type LocalDof = Option<(usize, i8)>;

impl DofMap {
    pub fn new<T: Scalar>(mesh: &Mesh<T>, k: usize) -> Self {
        assert!(k >= 1, "polynomial degree k must be at least 1");
        let mut next = 0;
        let trace_slot = mesh
            .edges()
            .iter()
            .map(|e| {
                (!e.is_boundary()).then(|| {
                    next += 1;
                    next - 1
                })
            })
            .collect();
        DofMap {
            k,
            num_triangles: mesh.num_triangles(),
            num_edges: mesh.num_edges(),
            trace_slot,
            num_trace_edges: next,
        }
    }

    pub fn degree(&self) -> usize {
        self.k
    }

    pub fn cell_dim(&self) -> usize {
        cell_dim(self.k)
    }

    pub fn trace_dim(&self) -> usize {
        self.k + 1
    }

    pub fn flux_dim(&self) -> usize {
        self.k
    }

    pub fn primal_dim(&self) -> usize {
        cell_dim(self.k - 1)
    }

    /// Size of the element-local weak-function vector.
    pub fn local_dim(&self) -> usize {
        self.cell_dim() + 3 * (self.trace_dim() + self.flux_dim())
    }

    pub fn num_interior(&self) -> usize {
        self.num_triangles * self.cell_dim()
    }

    pub fn num_trace(&self) -> usize {
        self.num_trace_edges * self.trace_dim()
    }

    pub fn num_flux(&self) -> usize {
        self.num_edges * self.flux_dim()
    }

    /// Dimension of `W_h^0`.
    pub fn num_lambda(&self) -> usize {
        self.num_interior() + self.num_trace() + self.num_flux()
    }

    /// Dimension of `M_h`.
    pub fn num_u(&self) -> usize {
        self.num_triangles * self.primal_dim()
    }

    pub fn total(&self) -> usize {
        self.num_lambda() + self.num_u()
    }

    pub fn interior(&self, t: usize) -> Range<usize> {
        let n = self.cell_dim();
        t * n..(t + 1) * n
    }

    pub fn trace(&self, e: usize) -> Option<Range<usize>> {
        let n = self.trace_dim();
        self.trace_slot[e].map(|s| {
            let start = self.num_interior() + s * n;
            start..start + n
        })
    }

    pub fn flux(&self, e: usize) -> Range<usize> {
        let n = self.flux_dim();
        let start = self.num_interior() + self.num_trace() + e * n;
        start..start + n
    }

    /// System indices of the `u` coefficients of triangle `t`.
    pub fn primal(&self, t: usize) -> Range<usize> {
        let n = self.primal_dim();
        let start = self.num_lambda() + t * n;
        start..start + n
    }

    /// Global index and sign for every local DOF of triangle `t`.
    pub fn local_to_global<T: Scalar>(&self, mesh: &Mesh<T>, t: usize) -> Vec<LocalDof> {
        let mut out = Vec::with_capacity(self.local_dim());
        out.extend(self.interior(t).map(|g| Some((g, 1))));
        let edges = mesh.triangle_edges(t);
        for &e in &edges {
            match self.trace(e) {
                Some(r) => out.extend(r.map(|g| Some((g, 1)))),
                None => out.extend(std::iter::repeat(None).take(self.trace_dim())),
            }
        }
        for &e in &edges {
            let sign = mesh.edges()[e].orientation(t);
            out.extend(self.flux(e).map(|g| Some((g, sign))));
        }
        out
    }
}

/// A member of `W_h`: interior, trace and flux coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct WeakFunction<T> {
    k: usize,
    interior: Vec<T>,
    trace: Vec<T>,
    flux: Vec<T>,
}

impl<T: Scalar> WeakFunction<T> {
    pub fn zeros(mesh: &Mesh<T>, k: usize) -> Self {
        WeakFunction {
            k,
            interior: vec![T::zero(); mesh.num_triangles() * cell_dim(k)],
            trace: vec![T::zero(); mesh.num_edges() * (k + 1)],
            flux: vec![T::zero(); mesh.num_edges() * k],
        }
    }

    /// Unpacks the λ block of a system vector (a member of `W_h^0`).
    pub fn from_dofs(mesh: &Mesh<T>, map: &DofMap, x: &[T]) -> Self {
        let mut w = WeakFunction::zeros(mesh, map.degree());
        let (nc, nt, nf) = (map.cell_dim(), map.trace_dim(), map.flux_dim());
        for t in 0..mesh.num_triangles() {
            w.interior[t * nc..(t + 1) * nc].copy_from_slice(&x[map.interior(t)]);
        }
        for e in 0..mesh.num_edges() {
            if let Some(r) = map.trace(e) {
                w.trace[e * nt..(e + 1) * nt].copy_from_slice(&x[r]);
            }
            w.flux[e * nf..(e + 1) * nf].copy_from_slice(&x[map.flux(e)]);
        }
        w
    }

    /// Packs into a λ-block vector; boundary traces are dropped.
    pub fn to_dofs(&self, mesh: &Mesh<T>, map: &DofMap) -> Vec<T> {
        let mut x = vec![T::zero(); map.num_lambda()];
        for t in 0..mesh.num_triangles() {
            x[map.interior(t)].copy_from_slice(self.interior_coeffs(t));
        }
        for e in 0..mesh.num_edges() {
            if let Some(r) = map.trace(e) {
                x[r].copy_from_slice(self.trace_coeffs(e));
            }
            x[map.flux(e)].copy_from_slice(self.flux_coeffs(e));
        }
        x
    }

    pub fn degree(&self) -> usize {
        self.k
    }

    /// `λ0` coefficients on `t` in [`CellBasis::on_triangle`]`(k, ·)`.
    pub fn interior_coeffs(&self, t: usize) -> &[T] {
        let n = cell_dim(self.k);
        &self.interior[t * n..(t + 1) * n]
    }

    pub fn trace_coeffs(&self, e: usize) -> &[T] {
        let n = self.k + 1;
        &self.trace[e * n..(e + 1) * n]
    }

    /// Flux coefficients relative to the edge's fixed normal.
    pub fn flux_coeffs(&self, e: usize) -> &[T] {
        &self.flux[e * self.k..(e + 1) * self.k]
    }

    pub fn interior_mut(&mut self, t: usize) -> &mut [T] {
        let n = cell_dim(self.k);
        &mut self.interior[t * n..(t + 1) * n]
    }

    pub fn trace_mut(&mut self, e: usize) -> &mut [T] {
        let n = self.k + 1;
        &mut self.trace[e * n..(e + 1) * n]
    }

    pub fn flux_mut(&mut self, e: usize) -> &mut [T] {
        let k = self.k;
        &mut self.flux[e * k..(e + 1) * k]
    }

    /// True when every boundary trace vanishes (membership in `W_h^0`).
    pub fn in_w0(&self, mesh: &Mesh<T>) -> bool {
        mesh.edges()
            .iter()
            .enumerate()
            .filter(|(_, e)| e.is_boundary())
            .all(|(e, _)| self.trace_coeffs(e).iter().all(|v| v.is_zero()))
    }

    /// Element-local vector of triangle `t`, fluxes taken with the
    /// triangle's outward normal.
    pub fn local(&self, mesh: &Mesh<T>, t: usize) -> Vec<T> {
        let mut out = self.interior_coeffs(t).to_vec();
        let edges = mesh.triangle_edges(t);
        for &e in &edges {
            out.extend_from_slice(self.trace_coeffs(e));
        }
        for &e in &edges {
            let sign = if mesh.edges()[e].orientation(t) > 0 { T::one() } else { -T::one() };
            out.extend(self.flux_coeffs(e).iter().map(|&v| sign * v));
        }
        out
    }

    pub fn iter_all(&self) -> impl Iterator<Item = &T> {
        self.interior.iter().chain(&self.trace).chain(&self.flux)
    }
}

/// A member of `M_h`: per-triangle coefficients of degree `k - 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct PrimalFunction<T> {
    k: usize,
    coeffs: Vec<T>,
}

impl<T: Scalar> PrimalFunction<T> {
    pub fn zeros(mesh: &Mesh<T>, k: usize) -> Self {
        PrimalFunction { k, coeffs: vec![T::zero(); mesh.num_triangles() * cell_dim(k - 1)] }
    }

    /// Unpacks the u block of a system vector.
    pub fn from_dofs(map: &DofMap, x: &[T]) -> Self {
        PrimalFunction { k: map.degree(), coeffs: x[map.num_lambda()..map.total()].to_vec() }
    }

    pub fn degree(&self) -> usize {
        self.k
    }

    /// Coefficients on `t` in [`CellBasis::on_triangle`]`(k - 1, ·)`.
    pub fn coeffs(&self, t: usize) -> &[T] {
        let n = cell_dim(self.k - 1);
        &self.coeffs[t * n..(t + 1) * n]
    }

    pub fn coeffs_mut(&mut self, t: usize) -> &mut [T] {
        let n = cell_dim(self.k - 1);
        &mut self.coeffs[t * n..(t + 1) * n]
    }

    pub fn all_coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn evaluate(&self, mesh: &Mesh<T>, t: usize, p: Point<T>) -> T {
        CellBasis::on_triangle(self.k - 1, &mesh.triangle_points(t)).evaluate(self.coeffs(t), p)
    }
}

/// The interpolant `Q_h u = {Q_0 u, Q_b u, Q_n(a∇u·n)}`.
///
/// `u(s, p)` and `flux(s, p) = a∇u` are evaluated on the branch of subdomain
/// `s`. Traces and fluxes use the plus triangle's branch, fluxes the edge's
/// fixed normal.
pub fn interpolate_qh<T: Scalar>(
    mesh: &Mesh<T>,
    k: usize,
    u: impl Fn(u32, Point<T>) -> T,
    flux: impl Fn(u32, Point<T>) -> Point<T>,
    exactness: usize,
) -> Result<WeakFunction<T>, FemError> {
    let mut w = WeakFunction::zeros(mesh, k);
    for t in 0..mesh.num_triangles() {
        let sub = mesh.subdomain(t);
        let c = project_cell(|p| u(sub, p), k, &mesh.triangle_points(t), exactness)?;
        w.interior_mut(t).copy_from_slice(&c);
    }
    for (e, edge) in mesh.edges().iter().enumerate() {
        let sub = mesh.subdomain(edge.plus);
        let [a, b] = mesh.edge_points(e);
        let c = project_edge(|p, _| u(sub, p), k, a, b, exactness)?;
        w.trace_mut(e).copy_from_slice(&c);
        let n = edge.normal;
        let c = project_edge(
            |p, _| {
                let f = flux(sub, p);
                f[0] * n[0] + f[1] * n[1]
            },
            k - 1,
            a,
            b,
            exactness,
        )?;
        w.flux_mut(e).copy_from_slice(&c);
    }
    Ok(w)
}

/// `Q_h^{k-1}` onto `M_h`, element by element.
pub fn project_mh<T: Scalar>(
    mesh: &Mesh<T>,
    k: usize,
    u: impl Fn(u32, Point<T>) -> T,
    exactness: usize,
) -> Result<PrimalFunction<T>, FemError> {
    let mut out = PrimalFunction::zeros(mesh, k);
    for t in 0..mesh.num_triangles() {
        let sub = mesh.subdomain(t);
        let c = project_cell(|p| u(sub, p), k - 1, &mesh.triangle_points(t), exactness)?;
        out.coeffs_mut(t).copy_from_slice(&c);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::femcore::{EdgeBasis, QuadRule};
    use crate::mesh::SquareInterface;

    fn meshes() -> Vec<Mesh<f64>> {
        let m8 = Mesh::structured(2, None).unwrap();
        let m32 = Mesh::structured(4, Some(SquareInterface::centered(0.25, 0.75))).unwrap();
        let m128 = m32.refine_uniform();
        vec![m8, m32, m128]
    }

    #[test]
    fn dof_counts_match_enumeration() {
        for mesh in meshes() {
            for k in 1..=3 {
                let map = DofMap::new(&mesh, k);
                let mut seen = vec![0u32; map.total()];
                for t in 0..mesh.num_triangles() {
                    for dof in map.interior(t).chain(map.primal(t)) {
                        seen[dof] += 1;
                    }
                }
                for e in 0..mesh.num_edges() {
                    for dof in map.trace(e).into_iter().flatten().chain(map.flux(e)) {
                        seen[dof] += 1;
                    }
                }
                assert!(seen.iter().all(|&c| c == 1), "bijective and gap-free");
                let interior_edges = mesh.edges().iter().filter(|e| !e.is_boundary()).count();
                let expected = mesh.num_triangles() * (k + 1) * (k + 2) / 2
                    + interior_edges * (k + 1)
                    + mesh.num_edges() * k;
                assert_eq!(map.num_lambda(), expected);
                assert_eq!(map.num_u(), mesh.num_triangles() * k * (k + 1) / 2);
            }
        }
    }

    #[test]
    fn interpolating_a_constant() {
        let mesh = &meshes()[1];
        let w = interpolate_qh(mesh, 2, |_, _| 2.5, |_, _| [0.0, 0.0], 6).unwrap();
        for t in 0..mesh.num_triangles() {
            let c = w.interior_coeffs(t);
            assert!((c[0] - 2.5).abs() < 1e-11 && c[1..].iter().all(|v| v.abs() < 1e-11));
        }
        for e in 0..mesh.num_edges() {
            let c = w.trace_coeffs(e);
            assert!((c[0] - 2.5).abs() < 1e-11 && c[1..].iter().all(|v| v.abs() < 1e-11));
            assert!(w.flux_coeffs(e).iter().all(|v| v.abs() < 1e-12));
        }
    }

    #[test]
    fn interpolating_x_gives_unit_flux_across_vertical_edges() {
        let mesh = &meshes()[1];
        let w = interpolate_qh(mesh, 1, |_, p| p[0], |_, _| [1.0, 0.0], 4).unwrap();
        let mut checked = 0;
        for (e, edge) in mesh.edges().iter().enumerate() {
            if (edge.normal[0] - 1.0).abs() < 1e-15 {
                assert!((w.flux_coeffs(e)[0] - 1.0).abs() < 1e-14);
                checked += 1;
            }
        }
        assert!(checked > 0);
    }

    #[test]
    fn interpolating_x_squared_reproduces_it_for_k2() {
        let mesh = &meshes()[1];
        let w = interpolate_qh(mesh, 2, |_, p| p[0] * p[0], |_, p| [2.0 * p[0], 0.0], 6).unwrap();
        for t in 0..mesh.num_triangles() {
            let basis = CellBasis::on_triangle(2, &mesh.triangle_points(t));
            let c = mesh.centroid(t);
            let v = basis.evaluate(w.interior_coeffs(t), c);
            assert!((v - c[0] * c[0]).abs() < 1e-13);
        }
    }

    #[test]
    fn projection_onto_mh() {
        let mesh = &meshes()[1];
        // piecewise P1 per subdomain is reproduced exactly for k = 2
        let u = |s: u32, p: Point<f64>| if s == 1 { 1.0 + 2.0 * p[0] - p[1] } else { 3.0 - p[0] };
        let proj = project_mh(mesh, 2, u, 6).unwrap();
        for t in 0..mesh.num_triangles() {
            let c = mesh.centroid(t);
            assert!((proj.evaluate(mesh, t, c) - u(mesh.subdomain(t), c)).abs() < 1e-13);
        }
        // u = x, k = 1: per-element mean of x is the centroid abscissa
        let proj = project_mh(mesh, 1, |_, p| p[0], 4).unwrap();
        for t in 0..mesh.num_triangles() {
            let p = mesh.triangle_points(t);
            let quad = QuadRule::cell(4).unwrap().map_to_triangle(&p);
            let mean = quad.iter().map(|(q, w)| w * q[0]).sum::<f64>() / mesh.area(t);
            assert!((proj.coeffs(t)[0] - mean).abs() < 1e-14);
        }
        let zero = project_mh(mesh, 2, |_, _| 0.0, 4).unwrap();
        assert!(zero.all_coeffs().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn fluxes_are_antisymmetric_across_interior_edges() {
        let mesh = &meshes()[2];
        let k = 2;
        let map = DofMap::new(mesh, k);
        let x: Vec<f64> = (0..map.num_lambda()).map(|i| ((i * 7919) % 113) as f64 - 56.0).collect();
        let w = WeakFunction::from_dofs(mesh, &map, &x);
        let quad = QuadRule::<f64>::edge(2 * k + 2).unwrap();
        for (e, edge) in mesh.edges().iter().enumerate() {
            let Some(minus) = edge.minus else { continue };
            let side = |t: usize| {
                let j = mesh.triangle_edges(t).iter().position(|&x| x == e).unwrap();
                let local = w.local(mesh, t);
                let start = map.cell_dim() + 3 * map.trace_dim() + j * map.flux_dim();
                local[start..start + map.flux_dim()].to_vec()
            };
            let (l, r) = (side(edge.plus), side(minus));
            let basis = EdgeBasis::new(k - 1, edge.length);
            for q in &quad.points {
                let s = q[0] * edge.length;
                assert_eq!(basis.evaluate(&l, s) + basis.evaluate(&r, s), 0.0);
            }
        }
    }

    #[test]
    fn dof_round_trip_keeps_w0_members() {
        let mesh = &meshes()[1];
        let map = DofMap::new(mesh, 1);
        let x: Vec<f64> = (0..map.num_lambda()).map(|i| i as f64).collect();
        let w = WeakFunction::from_dofs(mesh, &map, &x);
        assert!(w.in_w0(mesh));
        assert_eq!(w.to_dofs(mesh, &map), x);
    }
}
