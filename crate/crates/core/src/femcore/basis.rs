use crate::mesh::Point;
use crate::Scalar;

/// Dimension of `P_k` in two variables.
pub const fn cell_dim(degree: usize) -> usize {
    (degree + 1) * (degree + 2) / 2
}

/// Monomial basis of `P_k(T)` in the scaled coordinates
/// `X = (x - x_c) / h_T`, `Y = (y - y_c) / h_T` about the centroid.
///
/// Functions are ordered by total degree, then by decreasing power of `X`:
/// `1, X, Y, X², XY, Y², …`. The first `cell_dim(r)` functions therefore
/// span `P_r(T)` for every `r <= k`.
#[derive(Clone, Debug)]
pub struct CellBasis<T> {
    degree: usize,
    center: Point<T>,
    scale: T,
    exponents: Vec<(usize, usize)>,
}

impl<T: Scalar> CellBasis<T> {
    pub fn new(degree: usize, center: Point<T>, scale: T) -> Self {
        let exponents = (0..=degree)
            .flat_map(|d| (0..=d).map(move |j| (d - j, j)))
            .collect();
        CellBasis { degree, center, scale, exponents }
    }

    /// Basis for the triangle with vertices `p`, scaled by its diameter.
    pub fn on_triangle(degree: usize, p: &[Point<T>; 3]) -> Self {
        let three = T::lit(3.0);
        let center = [(p[0][0] + p[1][0] + p[2][0]) / three, (p[0][1] + p[1][1] + p[2][1]) / three];
        let d = |a: Point<T>, b: Point<T>| (b[0] - a[0]).hypot(b[1] - a[1]);
        let scale = d(p[0], p[1]).max(d(p[1], p[2])).max(d(p[2], p[0]));
        CellBasis::new(degree, center, scale)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn dim(&self) -> usize {
        self.exponents.len()
    }

    pub fn center(&self) -> Point<T> {
        self.center
    }

    pub fn scale(&self) -> T {
        self.scale
    }

    pub fn exponents(&self) -> &[(usize, usize)] {
        &self.exponents
    }

    fn powers(&self, p: Point<T>) -> (Vec<T>, Vec<T>) {
        let x = (p[0] - self.center[0]) / self.scale;
        let y = (p[1] - self.center[1]) / self.scale;
        let mut px = vec![T::one(); self.degree + 1];
        let mut py = vec![T::one(); self.degree + 1];
        for i in 1..=self.degree {
            px[i] = px[i - 1] * x;
            py[i] = py[i - 1] * y;
        }
        (px, py)
    }

    pub fn values(&self, p: Point<T>) -> Vec<T> {
        let (px, py) = self.powers(p);
        self.exponents.iter().map(|&(i, j)| px[i] * py[j]).collect()
    }

    /// Gradients in physical coordinates.
    pub fn gradients(&self, p: Point<T>) -> Vec<Point<T>> {
        let (px, py) = self.powers(p);
        let h = self.scale;
        self.exponents
            .iter()
            .map(|&(i, j)| {
                let dx = if i > 0 { T::from_usize_lossy(i) * px[i - 1] * py[j] / h } else { T::zero() };
                let dy = if j > 0 { T::from_usize_lossy(j) * px[i] * py[j - 1] / h } else { T::zero() };
                [dx, dy]
            })
            .collect()
    }

    /// Second derivatives `[∂xx, ∂xy, ∂yy]` in physical coordinates.
    pub fn hessians(&self, p: Point<T>) -> Vec<[T; 3]> {
        let (px, py) = self.powers(p);
        let h2 = self.scale * self.scale;
        let f = T::from_usize_lossy;
        self.exponents
            .iter()
            .map(|&(i, j)| {
                let xx = if i > 1 { f(i * (i - 1)) * px[i - 2] * py[j] / h2 } else { T::zero() };
                let yy = if j > 1 { f(j * (j - 1)) * px[i] * py[j - 2] / h2 } else { T::zero() };
                let xy = if i > 0 && j > 0 { f(i * j) * px[i - 1] * py[j - 1] / h2 } else { T::zero() };
                [xx, xy, yy]
            })
            .collect()
    }

    /// Value of the expansion `Σ c_i φ_i` at `p`; `coeffs` may be a prefix
    /// (a lower-degree expansion).
    pub fn evaluate(&self, coeffs: &[T], p: Point<T>) -> T {
        self.values(p).iter().zip(coeffs).map(|(&v, &c)| v * c).sum()
    }

    pub fn evaluate_gradient(&self, coeffs: &[T], p: Point<T>) -> Point<T> {
        self.gradients(p)
            .iter()
            .zip(coeffs)
            .fold([T::zero(); 2], |acc, (g, &c)| [acc[0] + c * g[0], acc[1] + c * g[1]])
    }
}

/// Legendre basis of `P_r(e)` on an edge, in the variable `t = 2s/ℓ - 1`
/// where `s` is arc length from the edge's first vertex.
#[derive(Clone, Debug)]
pub struct EdgeBasis<T> {
    degree: usize,
    length: T,
}

impl<T: Scalar> EdgeBasis<T> {
    pub fn new(degree: usize, length: T) -> Self {
        EdgeBasis { degree, length }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn dim(&self) -> usize {
        self.degree + 1
    }

    pub fn length(&self) -> T {
        self.length
    }

    /// Values at arc length `s`.
    pub fn values(&self, s: T) -> Vec<T> {
        let t = T::lit(2.0) * s / self.length - T::one();
        let mut out = Vec::with_capacity(self.degree + 1);
        out.push(T::one());
        if self.degree >= 1 {
            out.push(t);
        }
        for n in 2..=self.degree {
            let nf = T::from_usize_lossy(n);
            let v = ((T::lit(2.0) * nf - T::one()) * t * out[n - 1] - (nf - T::one()) * out[n - 2]) / nf;
            out.push(v);
        }
        out
    }

    pub fn evaluate(&self, coeffs: &[T], s: T) -> T {
        self.values(s).iter().zip(coeffs).map(|(&v, &c)| v * c).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimensions() {
        assert_eq!(cell_dim(0), 1);
        assert_eq!(cell_dim(1), 3);
        assert_eq!(cell_dim(2), 6);
        let b = CellBasis::<f64>::new(3, [0.0, 0.0], 1.0);
        assert_eq!(b.dim(), 10);
        assert_eq!(&b.exponents()[..6], &[(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]);
        assert_eq!(EdgeBasis::<f64>::new(2, 1.0).dim(), 3);
    }

    #[test]
    fn gradients_match_central_differences_at_second_order() {
        let tri = [[0.1, 0.2], [0.9, 0.3], [0.4, 0.8]];
        let basis = CellBasis::<f64>::on_triangle(3, &tri);
        let p = [0.45, 0.41];
        let grads = basis.gradients(p);
        let mut errs = Vec::new();
        for step in [1e-2, 5e-3] {
            let mut worst: f64 = 0.0;
            for dir in [[1.0, 0.0], [0.6, 0.8]] {
                let fwd = basis.values([p[0] + step * dir[0], p[1] + step * dir[1]]);
                let bwd = basis.values([p[0] - step * dir[0], p[1] - step * dir[1]]);
                for i in 0..basis.dim() {
                    let fd = (fwd[i] - bwd[i]) / (2.0 * step);
                    let exact = grads[i][0] * dir[0] + grads[i][1] * dir[1];
                    worst = worst.max((fd - exact).abs());
                }
            }
            errs.push(worst);
        }
        // O(step²): halving the step cuts the error by ~4
        assert!(errs[0] < 1e-2);
        let ratio = errs[0] / errs[1];
        assert!(ratio > 3.5 && ratio < 4.5, "ratio {ratio}");
    }

    #[test]
    fn hessians_match_differences_of_gradients() {
        let basis = CellBasis::<f64>::on_triangle(3, &[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]);
        let p = [0.3, 0.2];
        let h = basis.hessians(p);
        let step = 1e-5;
        let gx = basis.gradients([p[0] + step, p[1]]);
        let gx0 = basis.gradients([p[0] - step, p[1]]);
        let gy = basis.gradients([p[0], p[1] + step]);
        let gy0 = basis.gradients([p[0], p[1] - step]);
        for i in 0..basis.dim() {
            let xx = (gx[i][0] - gx0[i][0]) / (2.0 * step);
            let xy = (gy[i][0] - gy0[i][0]) / (2.0 * step);
            let yy = (gy[i][1] - gy0[i][1]) / (2.0 * step);
            assert!((xx - h[i][0]).abs() < 1e-6);
            assert!((xy - h[i][1]).abs() < 1e-6);
            assert!((yy - h[i][2]).abs() < 1e-6);
        }
    }

    #[test]
    fn legendre_values() {
        let b = EdgeBasis::<f64>::new(3, 2.0);
        let v = b.values(1.5); // t = 0.5
        assert_eq!(v[0], 1.0);
        assert_eq!(v[1], 0.5);
        assert!((v[2] - (1.5 * 0.25 - 0.5)).abs() < 1e-15);
        assert!((v[3] - (2.5 * 0.125 - 1.5 * 0.5)).abs() < 1e-15);
    }
}
