//! Polynomial bases, quadrature and `L²` projections on triangles and edges.

mod basis;
pub mod dense;
mod quadrature;

use thiserror::Error;

use crate::mesh::Point;
use crate::Scalar;

pub use basis::{cell_dim, CellBasis, EdgeBasis};
pub use quadrature::{gauss_legendre, QuadRule, MAX_EXACTNESS};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FemError {
    #[error("quadrature of exactness {requested} requested; at most {max} is implemented")]
    QuadratureUnavailable { requested: usize, max: usize },
    #[error("singular local mass matrix (reciprocal condition estimate {rcond:e})")]
    Singular { rcond: f64 },
}

/// Mass (Gram) matrix of `basis` against the mapped cell rule, row-major.
pub fn cell_mass<T: Scalar>(basis: &CellBasis<T>, quad: &[(Point<T>, T)]) -> Vec<T> {
    let n = basis.dim();
    let mut m = vec![T::zero(); n * n];
    for &(p, w) in quad {
        let v = basis.values(p);
        for i in 0..n {
            let wi = w * v[i];
            for j in 0..n {
                m[i * n + j] += wi * v[j];
            }
        }
    }
    m
}

/// `L²(T)` projection of `f` onto `P_r(T)`, as coefficients of
/// [`CellBasis::on_triangle`]`(r, tri)`.
///
/// The rule has exactness `max(exactness, 2r)`.
pub fn project_cell<T: Scalar>(
    f: impl Fn(Point<T>) -> T,
    degree: usize,
    tri: &[Point<T>; 3],
    exactness: usize,
) -> Result<Vec<T>, FemError> {
    let basis = CellBasis::on_triangle(degree, tri);
    let quad = QuadRule::cell(exactness.max(2 * degree))?.map_to_triangle(tri);
    let mass = cell_mass(&basis, &quad);
    let chol = dense::Cholesky::factor(&mass, basis.dim())?;
    let mut rhs = vec![T::zero(); basis.dim()];
    for &(p, w) in &quad {
        let fw = f(p) * w;
        for (r, v) in rhs.iter_mut().zip(basis.values(p)) {
            *r += fw * v;
        }
    }
    chol.solve_in_place(&mut rhs);
    Ok(rhs)
}

/// `L²(e)` projection onto `P_r(e)` of `f` on the segment `a → b`, as
/// coefficients of [`EdgeBasis`]. `f` receives the point and its arc length
/// from `a`.
pub fn project_edge<T: Scalar>(
    f: impl Fn(Point<T>, T) -> T,
    degree: usize,
    a: Point<T>,
    b: Point<T>,
    exactness: usize,
) -> Result<Vec<T>, FemError> {
    let quad = QuadRule::edge(exactness.max(2 * degree))?.map_to_segment(a, b);
    let basis = EdgeBasis::new(degree, (b[0] - a[0]).hypot(b[1] - a[1]));
    let n = basis.dim();
    let mut mass = vec![T::zero(); n * n];
    let mut rhs = vec![T::zero(); n];
    for &(p, s, w) in &quad {
        let v = basis.values(s);
        let fw = f(p, s) * w;
        for i in 0..n {
            rhs[i] += fw * v[i];
            for j in 0..n {
                mass[i * n + j] += w * v[i] * v[j];
            }
        }
    }
    dense::Cholesky::factor(&mass, n)?.solve_in_place(&mut rhs);
    Ok(rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const REF: [[f64; 2]; 3] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];

    #[test]
    fn projecting_x_onto_p1_is_exact() {
        let c = project_cell(|p| p[0], 1, &REF, 4).unwrap();
        let basis = CellBasis::on_triangle(1, &REF);
        for p in [[0.2, 0.3], [0.7, 0.1], [0.0, 0.0]] {
            assert!((basis.evaluate(&c, p) - p[0]).abs() < 1e-14);
        }
    }

    #[test]
    fn projecting_x_squared_onto_constants_gives_the_mean() {
        // ∫_T x² = 1/12 and |T| = 1/2
        let c = project_cell(|p| p[0] * p[0], 0, &REF, 2).unwrap();
        assert_eq!(c.len(), 1);
        assert!((c[0] - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn projecting_zero_gives_zero() {
        let c = project_cell(|_| 0.0, 2, &REF, 4).unwrap();
        assert!(c.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn degenerate_triangle_is_singular() {
        let flat = [[0.0, 0.0], [1.0, 0.0], [2.0, 1e-13]];
        assert!(matches!(project_cell(|p| p[0], 1, &flat, 4), Err(FemError::Singular { .. })));
    }

    #[test]
    fn edge_projections() {
        let (a, b): ([f64; 2], [f64; 2]) = ([0.0, 0.0], [1.0, 0.0]);
        let basis = EdgeBasis::new(1, 1.0);
        for r in 0..3 {
            let c = project_edge(|_, _| 3.5, r, a, b, 4).unwrap();
            assert!((c[0] - 3.5).abs() < 1e-15 && c[1..].iter().all(|v| v.abs() < 1e-15));
        }
        let c = project_edge(|_, s| s, 0, a, b, 2).unwrap();
        assert!((c[0] - 0.5).abs() < 1e-15);
        // Gram system for s² against {1, s} on [0, 1] gives s - 1/6
        let c = project_edge(|_, s| s * s, 1, a, b, 4).unwrap();
        for s in [0.0, 0.3, 1.0] {
            assert!((basis.evaluate(&c, s) - (s - 1.0 / 6.0)).abs() < 1e-14);
        }
    }

    #[test]
    fn single_precision_projection() {
        let tri: [[f32; 2]; 3] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let c = project_cell(|p| p[0] * p[0], 0, &tri, 2).unwrap();
        assert!((c[0] - 1.0 / 6.0).abs() < 1e-6);
    }

    fn poly_strategy(max_deg: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-2.0..2.0f64, cell_dim(max_deg))
    }

    fn eval_poly(c: &[f64], deg: usize, p: [f64; 2]) -> f64 {
        CellBasis::new(deg, [0.0, 0.0], 1.0).evaluate(c, p)
    }

    proptest! {
        #[test]
        fn projection_is_idempotent(r in 0usize..=3, coeffs in poly_strategy(5)) {
            let tri = [[0.1, 0.0], [0.8, 0.2], [0.3, 0.9]];
            let first = project_cell(|p| eval_poly(&coeffs, 5, p), r, &tri, 2 * r + 6).unwrap();
            let basis = CellBasis::on_triangle(r, &tri);
            let second = project_cell(|p| basis.evaluate(&first, p), r, &tri, 2 * r + 6).unwrap();
            // equal up to the round-off of one Gram solve
            let scale = first.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            for (a, b) in first.iter().zip(&second) {
                prop_assert!((a - b).abs() <= 1e-11 * scale);
            }
        }

        #[test]
        fn residual_is_orthogonal(r in 0usize..=3, coeffs in poly_strategy(5)) {
            let deg = r + 2;
            let coeffs = &coeffs[..cell_dim(deg)];
            let tri = [[0.0, 0.1], [1.0, 0.0], [0.4, 0.7]];
            let f = |p: [f64; 2]| eval_poly(coeffs, deg, p);
            let proj = project_cell(f, r, &tri, 2 * deg + 2).unwrap();
            let basis = CellBasis::on_triangle(r, &tri);
            let quad = QuadRule::cell(2 * deg + 2).unwrap().map_to_triangle(&tri);
            let norm: f64 = quad.iter().map(|&(p, w)| w * f(p) * f(p)).sum::<f64>().sqrt();
            for i in 0..basis.dim() {
                let ip: f64 = quad
                    .iter()
                    .map(|&(p, w)| w * (f(p) - basis.evaluate(&proj, p)) * basis.values(p)[i])
                    .sum();
                prop_assert!(ip.abs() <= 1e-12 * (norm + 1e-300));
            }
        }
    }
}
