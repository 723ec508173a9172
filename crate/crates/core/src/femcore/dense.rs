//! Small dense linear algebra on row-major buffers.

use super::FemError;
use crate::Scalar;

/// Reciprocal condition estimate below which an SPD factorization is
/// reported as singular.
pub const RCOND_THRESHOLD: f64 = 1e-14;

/// Cholesky factor `A = L Lᵀ` of a symmetric positive definite matrix.
#[derive(Clone, Debug)]
pub struct Cholesky<T> {
    n: usize,
    l: Vec<T>,
    rcond: T,
}

impl<T: Scalar> Cholesky<T> {
    /// Factors the `n × n` row-major matrix `a`.
    ///
    /// The reciprocal condition estimate is `(min Lᵢᵢ / max Lᵢᵢ)²`; values
    /// under [`RCOND_THRESHOLD`] (or a non-positive pivot) give
    /// [`FemError::Singular`].
    pub fn factor(a: &[T], n: usize) -> Result<Self, FemError> {
        assert_eq!(a.len(), n * n);
        let mut l = vec![T::zero(); n * n];
        for j in 0..n {
            let mut d = a[j * n + j];
            for k in 0..j {
                d -= l[j * n + k] * l[j * n + k];
            }
            if !(d > T::zero()) {
                return Err(FemError::Singular { rcond: 0.0 });
            }
            let djj = d.sqrt();
            l[j * n + j] = djj;
            for i in j + 1..n {
                let mut s = a[i * n + j];
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / djj;
            }
        }
        let (lo, hi) = (0..n).fold((T::infinity(), T::zero()), |(lo, hi), i| {
            let d = l[i * n + i];
            (lo.min(d), hi.max(d))
        });
        let rcond = if n == 0 { T::one() } else { (lo / hi).powi(2) };
        if rcond.as_f64() < RCOND_THRESHOLD {
            return Err(FemError::Singular { rcond: rcond.as_f64() });
        }
        Ok(Cholesky { n, l, rcond })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn rcond(&self) -> T {
        self.rcond
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [T]) {
        let n = self.n;
        for i in 0..n {
            let mut s = b[i];
            for k in 0..i {
                s -= self.l[i * n + k] * b[k];
            }
            b[i] = s / self.l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in i + 1..n {
                s -= self.l[k * n + i] * b[k];
            }
            b[i] = s / self.l[i * n + i];
        }
    }

    /// Solves `A X = B` for the `n × m` row-major right-hand side `b`.
    pub fn solve_columns(&self, b: &mut [T], m: usize) {
        let n = self.n;
        let mut col = vec![T::zero(); n];
        for c in 0..m {
            for i in 0..n {
                col[i] = b[i * m + c];
            }
            self.solve_in_place(&mut col);
            for i in 0..n {
                b[i * m + c] = col[i];
            }
        }
    }
}

/// LU factorization with partial pivoting.
#[derive(Clone, Debug)]
pub struct Lu<T> {
    n: usize,
    lu: Vec<T>,
    perm: Vec<usize>,
    min_pivot: T,
    max_pivot: T,
}

impl<T: Scalar> Lu<T> {
    /// Factors `a`; a pivot with `|p| <= tol · max|a|` is reported with its
    /// elimination step.
    pub fn factor(mut a: Vec<T>, n: usize, tol: T) -> Result<Self, usize> {
        assert_eq!(a.len(), n * n);
        let scale = a.iter().fold(T::zero(), |m, v| m.max(v.abs()));
        let mut perm: Vec<usize> = (0..n).collect();
        let (mut min_pivot, mut max_pivot) = (T::infinity(), T::zero());
        for k in 0..n {
            let (p, pv) = (k..n)
                .map(|i| (i, a[i * n + k].abs()))
                .fold((k, -T::one()), |best, cur| if cur.1 > best.1 { cur } else { best });
            if !(pv > tol * scale) {
                return Err(k);
            }
            min_pivot = min_pivot.min(pv);
            max_pivot = max_pivot.max(pv);
            if p != k {
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let pivot = a[k * n + k];
            for i in k + 1..n {
                let f = a[i * n + k] / pivot;
                if f == T::zero() {
                    continue;
                }
                a[i * n + k] = f;
                let (head, tail) = a.split_at_mut(i * n);
                let row_k = &head[k * n..k * n + n];
                let row_i = &mut tail[..n];
                for j in k + 1..n {
                    row_i[j] -= f * row_k[j];
                }
            }
        }
        Ok(Lu { n, lu: a, perm, min_pivot, max_pivot })
    }

    pub fn pivot_range(&self) -> (T, T) {
        (self.min_pivot, self.max_pivot)
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.n;
        let mut x: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = x[i];
            for k in 0..i {
                s -= self.lu[i * n + k] * x[k];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..n {
                s -= self.lu[i * n + k] * x[k];
            }
            x[i] = s / self.lu[i * n + i];
        }
        x
    }
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
pub fn symmetric_eigenvalues<T: Scalar>(a: &[T], n: usize) -> Vec<T> {
    let mut a = a.to_vec();
    let tol = T::epsilon() * T::epsilon();
    for _sweep in 0..100 {
        let off: T = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j] * a[i * n + j])
            .sum();
        let diag: T = (0..n).map(|i| a[i * n + i] * a[i * n + i]).sum();
        if off <= tol * diag || off == T::zero() {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == T::zero() {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (T::lit(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eig: Vec<T> = (0..n).map(|i| a[i * n + i]).collect();
    eig.sort_by(|x, y| x.partial_cmp(y).expect("finite eigenvalues"));
    eig
}
