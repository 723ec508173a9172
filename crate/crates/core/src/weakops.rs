//! Element-local discrete weak Laplacian and weak gradient.
//!
//! Both operators act on the element-local layout of
//! [`DofMap::local_to_global`](crate::weakspace::DofMap::local_to_global)
//! with fluxes taken relative to the element's outward normal, and return
//! coefficients in the `P_{k-1}` prefix of [`CellBasis::on_triangle`]`(k, T)`.

use crate::femcore::{cell_dim, cell_mass, dense::Cholesky, CellBasis, EdgeBasis, FemError, QuadRule};
use crate::mesh::{Mesh, Point};
use crate::Scalar;

/// Quadrature exactness used on cells and edges.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct QuadratureOrder {
    pub cell: usize,
    pub edge: usize,
}

impl QuadratureOrder {
    /// `2k + 3` on cells and `2k + 2` on edges.
    pub fn for_degree(k: usize) -> Self {
        QuadratureOrder { cell: 2 * k + 3, edge: 2 * k + 2 }
    }
}

/// One local edge of an element with its quadrature data.
#[derive(Clone, Debug)]
pub struct EdgeQuadrature<T> {
    /// Global edge index.
    pub edge: usize,
    /// Outward normal of the element on this edge.
    pub normal: Point<T>,
    /// `(point, weight)` pairs.
    pub points: Vec<(Point<T>, T)>,
    /// Trace basis `P_k(e)` values per point.
    pub trace_values: Vec<Vec<T>>,
    /// Flux basis `P_{k-1}(e)` values per point.
    pub flux_values: Vec<Vec<T>>,
}

/// Quadrature points and basis tables of one element.
#[derive(Clone, Debug)]
pub struct ElementQuadrature<T> {
    pub element: usize,
    pub k: usize,
    pub basis: CellBasis<T>,
    /// `(point, weight)` pairs on the cell.
    pub cell: Vec<(Point<T>, T)>,
    /// `P_k(T)` values per cell point.
    pub cell_values: Vec<Vec<T>>,
    pub edges: [EdgeQuadrature<T>; 3],
}

impl<T: Scalar> ElementQuadrature<T> {
    pub fn new(mesh: &Mesh<T>, t: usize, k: usize, order: QuadratureOrder) -> Result<Self, FemError> {
        let tri = mesh.triangle_points(t);
        let basis = CellBasis::on_triangle(k, &tri);
        let cell = QuadRule::cell(order.cell)?.map_to_triangle(&tri);
        let cell_values = cell.iter().map(|&(p, _)| basis.values(p)).collect();
        let edge_rule = QuadRule::edge(order.edge)?;
        let ids = mesh.triangle_edges(t);
        let edges = [0, 1, 2].map(|j| {
            let e = ids[j];
            let [a, b] = mesh.edge_points(e);
            let len = mesh.edges()[e].length;
            let (tb, fb) = (EdgeBasis::new(k, len), EdgeBasis::new(k - 1, len));
            let mapped = edge_rule.map_to_segment(a, b);
            EdgeQuadrature {
                edge: e,
                normal: mesh.outward_normal(t, j),
                points: mapped.iter().map(|&(p, _, w)| (p, w)).collect(),
                trace_values: mapped.iter().map(|&(_, s, _)| tb.values(s)).collect(),
                flux_values: mapped.iter().map(|&(_, s, _)| fb.values(s)).collect(),
            }
        });
        Ok(ElementQuadrature { element: t, k, basis, cell, cell_values, edges })
    }

    pub fn cell_dim(&self) -> usize {
        cell_dim(self.k)
    }

    /// Length of the element-local DOF vector.
    pub fn local_dim(&self) -> usize {
        cell_dim(self.k) + 3 * (self.k + 1) + 3 * self.k
    }

    /// Offset of the trace block of local edge `j`.
    pub fn trace_offset(&self, j: usize) -> usize {
        cell_dim(self.k) + j * (self.k + 1)
    }

    /// Offset of the flux block of local edge `j`.
    pub fn flux_offset(&self, j: usize) -> usize {
        cell_dim(self.k) + 3 * (self.k + 1) + j * self.k
    }
}

/// Linear map from element-local weak DOFs to `P_{k-1}(T)` coefficients,
/// one block of rows per output component.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalWeakOperator<T> {
    pub element: usize,
    /// 1 for the Laplacian, 2 for the gradient.
    pub components: usize,
    /// Rows per component (`dim P_{k-1}`).
    pub rows: usize,
    pub cols: usize,
    /// Row-major `(components·rows) × cols`.
    pub matrix: Vec<T>,
}

impl<T: Scalar> LocalWeakOperator<T> {
    /// Output coefficients; component `c` occupies `c·rows..(c+1)·rows`.
    pub fn apply(&self, local: &[T]) -> Vec<T> {
        assert_eq!(local.len(), self.cols);
        self.matrix
            .chunks_exact(self.cols)
            .map(|row| row.iter().zip(local).map(|(&m, &v)| m * v).sum())
            .collect()
    }
}

/// Weak Laplacian and weak gradient of one element, sharing one `P_{k-1}`
/// mass factorization.
#[derive(Clone, Debug)]
pub struct ElementOperators<T> {
    pub laplacian: LocalWeakOperator<T>,
    pub gradient: LocalWeakOperator<T>,
    /// Moments `(L_w σ, w_i)_T` before the mass solve, row-major `rows × cols`.
    pub laplacian_moments: Vec<T>,
    /// Moments `(∇_w σ, w_i e_c)_T` before the mass solve.
    pub gradient_moments: Vec<T>,
}

impl<T: Scalar> ElementOperators<T> {
    /// `coeff(p)` returns `a(p)` and `∇a(p)` on the element's own subdomain.
    pub fn new(quad: &ElementQuadrature<T>, coeff: impl Fn(Point<T>) -> (T, Point<T>)) -> Result<Self, FemError> {
        let k = quad.k;
        let nr = cell_dim(k - 1);
        let nc = quad.cell_dim();
        let cols = quad.local_dim();
        let test = CellBasis::new(k - 1, quad.basis.center(), quad.basis.scale());
        let mass = cell_mass(&test, &quad.cell);
        let chol = Cholesky::factor(&mass, nr)?;

        let mut lap = vec![T::zero(); nr * cols];
        let mut grad = vec![T::zero(); 2 * nr * cols];
        for (&(p, w), vals) in quad.cell.iter().zip(&quad.cell_values) {
            let (a, da) = coeff(p);
            let g = test.gradients(p);
            let h = test.hessians(p);
            for i in 0..nr {
                let lw = -(da[0] * g[i][0] + da[1] * g[i][1]) - a * (h[i][0] + h[i][2]);
                for j in 0..nc {
                    lap[i * cols + j] += w * vals[j] * lw;
                    grad[i * cols + j] -= w * vals[j] * g[i][0];
                    grad[(nr + i) * cols + j] -= w * vals[j] * g[i][1];
                }
            }
        }
        for (jl, eq) in quad.edges.iter().enumerate() {
            let (tb, fb) = (quad.trace_offset(jl), quad.flux_offset(jl));
            let n = eq.normal;
            for (q, &(p, w)) in eq.points.iter().enumerate() {
                let (a, _) = coeff(p);
                let tv = test.values(p);
                let g = test.gradients(p);
                for i in 0..nr {
                    let an = a * (g[i][0] * n[0] + g[i][1] * n[1]);
                    for (m, &phi) in eq.trace_values[q].iter().enumerate() {
                        lap[i * cols + tb + m] += w * phi * an;
                        grad[i * cols + tb + m] += w * phi * tv[i] * n[0];
                        grad[(nr + i) * cols + tb + m] += w * phi * tv[i] * n[1];
                    }
                    for (m, &chi) in eq.flux_values[q].iter().enumerate() {
                        lap[i * cols + fb + m] -= w * chi * tv[i];
                    }
                }
            }
        }

        let solve = |moments: &[T], components: usize| {
            let mut out = moments.to_vec();
            for c in 0..components {
                chol.solve_columns(&mut out[c * nr * cols..(c + 1) * nr * cols], cols);
            }
            out
        };
        let laplacian = LocalWeakOperator {
            element: quad.element,
            components: 1,
            rows: nr,
            cols,
            matrix: solve(&lap, 1),
        };
        let gradient = LocalWeakOperator {
            element: quad.element,
            components: 2,
            rows: nr,
            cols,
            matrix: solve(&grad, 2),
        };
        Ok(ElementOperators { laplacian, gradient, laplacian_moments: lap, gradient_moments: grad })
    }
}

/// Discrete weak Laplacian of element `t` with test space `P_{k-1}(T)`.
pub fn weak_laplacian_local<T: Scalar>(
    mesh: &Mesh<T>,
    t: usize,
    k: usize,
    coeff: impl Fn(Point<T>) -> (T, Point<T>),
) -> Result<LocalWeakOperator<T>, FemError> {
    let quad = ElementQuadrature::new(mesh, t, k, QuadratureOrder::for_degree(k))?;
    Ok(ElementOperators::new(&quad, coeff)?.laplacian)
}

/// Discrete weak gradient of element `t` in `[P_{k-1}(T)]²`.
pub fn weak_gradient_local<T: Scalar>(mesh: &Mesh<T>, t: usize, k: usize) -> Result<LocalWeakOperator<T>, FemError> {
    let quad = ElementQuadrature::new(mesh, t, k, QuadratureOrder::for_degree(k))?;
    Ok(ElementOperators::new(&quad, |_| (T::one(), [T::zero(); 2]))?.gradient)
}
