//! Gauss rules on the unit interval and the reference triangle.
//!
//! Cells use the collapsed (Duffy) product of Gauss–Legendre rules, which
//! is exact to any requested degree. Exactness 0 and 1 use the centroid rule.

use super::FemError;
use crate::mesh::Point;
use crate::Scalar;

/// Highest exactness degree served by [`QuadRule::cell`] and [`QuadRule::edge`].
pub const MAX_EXACTNESS: usize = 40;

/// Quadrature rule on a reference domain: the unit interval `[0, 1]` (points
/// carry the parameter in component 0) or the triangle `{(0,0), (1,0), (0,1)}`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadRule<T> {
    pub points: Vec<Point<T>>,
    pub weights: Vec<T>,
    pub exactness: usize,
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, by Newton iteration on the
/// three-term recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=n {
                let jf = j as f64;
                let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn check(exactness: usize) -> Result<(), FemError> {
    if exactness > MAX_EXACTNESS {
        return Err(FemError::QuadratureUnavailable { requested: exactness, max: MAX_EXACTNESS });
    }
    Ok(())
}

impl<T: Scalar> QuadRule<T> {
    /// Rule on `[0, 1]` exact for polynomials of degree `exactness`; uses
    /// `⌈(exactness + 1) / 2⌉` Gauss points.
    pub fn edge(exactness: usize) -> Result<Self, FemError> {
        check(exactness)?;
        let n = (exactness + 2) / 2;
        let (x, w) = gauss_legendre(n.max(1));
        Ok(QuadRule {
            points: x.iter().map(|&s| [T::lit(0.5 * (s + 1.0)), T::zero()]).collect(),
            weights: w.iter().map(|&w| T::lit(0.5 * w)).collect(),
            exactness,
        })
    }

    /// Rule on the reference triangle exact for total degree `exactness`.
    pub fn cell(exactness: usize) -> Result<Self, FemError> {
        check(exactness)?;
        if exactness <= 1 {
            return Ok(QuadRule {
                points: vec![[T::lit(1.0 / 3.0), T::lit(1.0 / 3.0)]],
                weights: vec![T::lit(0.5)],
                exactness,
            });
        }
        // x = ξ, y = η (1 - ξ) maps the unit square onto the triangle with
        // Jacobian (1 - ξ), which raises the degree in ξ by one.
        let nx = (exactness + 3) / 2;
        let ny = (exactness + 2) / 2;
        let (gx, wx) = gauss_legendre(nx);
        let (gy, wy) = gauss_legendre(ny);
        let mut points = Vec::with_capacity(nx * ny);
        let mut weights = Vec::with_capacity(nx * ny);
        for (xi, wxi) in gx.iter().zip(&wx) {
            let xi01 = 0.5 * (xi + 1.0);
            for (eta, weta) in gy.iter().zip(&wy) {
                let eta01 = 0.5 * (eta + 1.0);
                points.push([T::lit(xi01), T::lit(eta01 * (1.0 - xi01))]);
                weights.push(T::lit(0.25 * wxi * weta * (1.0 - xi01)));
            }
        }
        Ok(QuadRule { points, weights, exactness })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Physical points and weights on triangle `p`; weights sum to its area.
    pub fn map_to_triangle(&self, p: &[Point<T>; 3]) -> Vec<(Point<T>, T)> {
        let jac = crate::mesh::signed_area(p).abs() * T::lit(2.0);
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(r, &w)| {
                let x = p[0][0] + r[0] * (p[1][0] - p[0][0]) + r[1] * (p[2][0] - p[0][0]);
                let y = p[0][1] + r[0] * (p[1][1] - p[0][1]) + r[1] * (p[2][1] - p[0][1]);
                ([x, y], w * jac)
            })
            .collect()
    }

    /// Physical points, arc-length parameters and weights on the segment
    /// `a → b`; weights sum to its length.
    pub fn map_to_segment(&self, a: Point<T>, b: Point<T>) -> Vec<(Point<T>, T, T)> {
        let len = (b[0] - a[0]).hypot(b[1] - a[1]);
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(r, &w)| {
                let s = r[0];
                ([a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])], s * len, w * len)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// ∫_T x^i y^j over the reference triangle = i! j! / (i + j + 2)!.
    fn monomial_integral(i: u32, j: u32) -> f64 {
        let fact = |n: u32| (1..=n).map(f64::from).product::<f64>();
        fact(i) * fact(j) / fact(i + j + 2)
    }

    #[test]
    fn centroid_rule_for_exactness_one() {
        let rule = QuadRule::<f64>::cell(1).unwrap();
        assert_eq!(rule.len(), 1);
        let mapped = rule.map_to_triangle(&[[0.0, 0.0], [2.0, 0.0], [0.0, 3.0]]);
        assert!((mapped[0].1 - 3.0).abs() < 1e-15);
        assert!((mapped[0].0[0] - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn edge_rule_uses_k_plus_two_points_for_2k_plus_2() {
        for k in 1..=4 {
            assert_eq!(QuadRule::<f64>::edge(2 * k + 2).unwrap().len(), k + 2);
        }
    }

    #[test]
    fn cell_rule_integrates_x2y2() {
        let rule = QuadRule::<f64>::cell(4).unwrap();
        let v: f64 = rule
            .points
            .iter()
            .zip(&rule.weights)
            .map(|(p, w)| w * p[0] * p[0] * p[1] * p[1])
            .sum();
        assert!((v - 1.0 / 180.0).abs() < 1e-16);
    }

    #[test]
    fn cell_rules_are_exact_for_all_monomials() {
        for deg in 0..=20usize {
            let rule = QuadRule::<f64>::cell(deg).unwrap();
            let total: f64 = rule.weights.iter().sum();
            assert!((total - 0.5).abs() < 1e-14);
            for i in 0..=deg as u32 {
                for j in 0..=(deg as u32 - i) {
                    let q: f64 = rule
                        .points
                        .iter()
                        .zip(&rule.weights)
                        .map(|(p, w)| w * p[0].powi(i as i32) * p[1].powi(j as i32))
                        .sum();
                    let exact = monomial_integral(i, j);
                    assert!(((q - exact) / exact).abs() <= 1e-13, "deg {deg}: x^{i} y^{j}");
                }
            }
        }
    }

    #[test]
    fn edge_rules_are_exact_for_all_monomials() {
        for deg in 0..=30usize {
            let rule = QuadRule::<f64>::edge(deg).unwrap();
            for i in 0..=deg as i32 {
                let q: f64 = rule.points.iter().zip(&rule.weights).map(|(p, w)| w * p[0].powi(i)).sum();
                let exact = 1.0 / (i as f64 + 1.0);
                assert!(((q - exact) / exact).abs() <= 1e-13, "deg {deg}: s^{i}");
            }
        }
    }

    #[test]
    fn rejects_excessive_exactness() {
        assert!(matches!(
            QuadRule::<f64>::cell(MAX_EXACTNESS + 1),
            Err(FemError::QuadratureUnavailable { .. })
        ));
        assert!(QuadRule::<f64>::edge(MAX_EXACTNESS + 1).is_err());
    }

    #[test]
    fn mapped_edge_weights_sum_to_length() {
        let rule = QuadRule::<f64>::edge(5).unwrap();
        let total: f64 = rule.map_to_segment([1.0, 1.0], [4.0, 5.0]).iter().map(|q| q.2).sum();
        assert!((total - 5.0).abs() < 1e-14);
    }
}
