//! Direct solution of the saddle-point system `[[S, Bᵀ], [B, 0]] (λ, u) = (φ, 0)`.
//!
//! Small systems go through dense LU with partial pivoting. Larger ones are
//! equilibrated, ordered by approximate minimum degree and factored as a
//! signed `LDLᵀ`: the `λ` block is shifted by `+δ` and the `u` block by `-δ`,
//! which makes the matrix quasi-definite so every symmetric ordering admits a
//! factorization. Iterative refinement against the unshifted matrix removes
//! the shift from the answer.

use thiserror::Error;

use crate::assembly::SaddleSystem;
use crate::femcore::dense::Lu;
use crate::mesh::Mesh;
use crate::sparse::CsrMatrix;
use crate::weakspace::{PrimalFunction, WeakFunction};
use crate::Scalar;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("numerically singular factorization at pivot {pivot}")]
    Singular { pivot: usize },
    #[error("iterative refinement stalled at relative residual {residual:e} (tolerance {tolerance:e})")]
    NotConverged { residual: f64, tolerance: f64 },
    #[error("ordering failed: {0}")]
    Ordering(String),
    #[error("dimension mismatch: matrix is {rows}×{cols}, right-hand side has {rhs} entries")]
    Dimension { rows: usize, cols: usize, rhs: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum SolveMethod {
    /// Dense LU with partial pivoting when `n < 2000`, sparse otherwise.
    Auto,
    DenseLu,
    SparseLdl,
}

#[derive(Clone, Copy, Debug)]
pub struct SolveOptions {
    pub method: SolveMethod,
    /// Target `‖Kx - rhs‖ / ‖rhs‖` (absolute when `rhs = 0`). A solution
    /// missing it is still returned when its backward error is within a few
    /// dozen machine epsilons.
    pub tolerance: f64,
    pub max_refinement: usize,
    /// Static shift `δ`, relative to the equilibrated matrix.
    pub regularization: f64,
}

impl SolveOptions {
    pub const DENSE_LIMIT: usize = 2000;

    /// `1e-10`, or a hundred machine epsilons for low-precision scalars.
    pub fn for_scalar<T: Scalar>() -> Self {
        SolveOptions {
            method: SolveMethod::Auto,
            tolerance: (100.0 * T::epsilon().as_f64()).max(1e-10),
            max_refinement: 30,
            regularization: 1e-9,
        }
    }
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self::for_scalar::<f64>()
    }
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct SolveDiagnostics {
    pub method: SolveMethod,
    pub num_lambda: usize,
    pub num_u: usize,
    pub matrix_nnz: usize,
    /// Off-diagonal entries of `L` (`n²` for dense LU).
    pub factor_nnz: usize,
    /// Final `‖Kx - rhs‖₂ / ‖rhs‖₂`, or the absolute residual when `rhs = 0`.
    pub residual: f64,
    /// `‖Kx - rhs‖ / ‖|K||x| + |rhs|‖`; near machine epsilon means `x` is as
    /// accurate as the working precision allows, whatever `residual` says.
    pub backward_error: f64,
    pub refinement_steps: usize,
    /// Smallest and largest pivot magnitude.
    pub pivot_min: f64,
    pub pivot_max: f64,
    /// Pivots whose sign or size had to be corrected during factorization.
    pub regularized_pivots: usize,
}

#[derive(Clone, Debug)]
pub struct Solution<T> {
    pub lambda: WeakFunction<T>,
    pub u: PrimalFunction<T>,
    /// Raw `(λ, u)` vector.
    pub x: Vec<T>,
    pub diagnostics: SolveDiagnostics,
}

/// Solves an assembled system and unpacks `(λ_h, u_h)`.
pub fn solve<T: Scalar>(mesh: &Mesh<T>, system: &SaddleSystem<T>, opts: &SolveOptions) -> Result<Solution<T>, SolverError> {
    let nl = system.dofmap.num_lambda();
    let (x, diagnostics) = solve_saddle(&system.matrix, &system.rhs, nl, opts)?;
    Ok(Solution {
        lambda: WeakFunction::from_dofs(mesh, &system.dofmap, &x),
        u: PrimalFunction::from_dofs(&system.dofmap, &x),
        x,
        diagnostics,
    })
}

/// Solves `K x = rhs` where the first `num_lambda` unknowns form the positive
/// definite block and the rest the zero block.
pub fn solve_saddle<T: Scalar>(
    k: &CsrMatrix<T>,
    rhs: &[T],
    num_lambda: usize,
    opts: &SolveOptions,
) -> Result<(Vec<T>, SolveDiagnostics), SolverError> {
    let n = k.nrows();
    if k.ncols() != n || rhs.len() != n || num_lambda > n {
        return Err(SolverError::Dimension { rows: n, cols: k.ncols(), rhs: rhs.len() });
    }
    let method = match opts.method {
        SolveMethod::Auto if n < SolveOptions::DENSE_LIMIT => SolveMethod::DenseLu,
        SolveMethod::Auto => SolveMethod::SparseLdl,
        m => m,
    };
    let mut diag = SolveDiagnostics {
        method,
        num_lambda,
        num_u: n - num_lambda,
        matrix_nnz: k.nnz(),
        factor_nnz: 0,
        residual: 0.0,
        backward_error: 0.0,
        refinement_steps: 0,
        pivot_min: 0.0,
        pivot_max: 0.0,
        regularized_pivots: 0,
    };
    if n == 0 {
        return Ok((Vec::new(), diag));
    }
    let factor: Box<dyn Fn(&mut [T]) + '_> = match method {
        SolveMethod::DenseLu => {
            // equilibrated so the pivot threshold is scale-free
            let d = ruiz(k);
            let mut dense = vec![0.0f64; n * n];
            for (r, c, v) in k.triplets() {
                dense[r * n + c] += v.as_f64() * d[r] * d[c];
            }
            let lu = Lu::factor(dense, n, f64::EPSILON * n as f64).map_err(|pivot| SolverError::Singular { pivot })?;
            let (lo, hi) = lu.pivot_range();
            diag.pivot_min = lo;
            diag.pivot_max = hi;
            diag.factor_nnz = n * n;
            Box::new(move |b: &mut [T]| {
                let scaled: Vec<f64> = b.iter().zip(&d).map(|(v, s)| v.as_f64() * s).collect();
                let y = lu.solve(&scaled);
                for ((bi, yi), s) in b.iter_mut().zip(y).zip(&d) {
                    *bi = T::lit(yi * s);
                }
            })
        }
        _ => {
            let signs: Vec<bool> = (0..n).map(|i| i < num_lambda).collect();
            let ldl = SignedLdl::factor(k, &signs, opts.regularization)?;
            diag.factor_nnz = ldl.li.len();
            diag.regularized_pivots = ldl.regularized.len();
            let (lo, hi) = ldl.pivot_range();
            diag.pivot_min = lo;
            diag.pivot_max = hi;
            Box::new(move |b: &mut [T]| ldl.solve_in_place(b))
        }
    };

    let bnorm = norm2(rhs);
    let scale = if bnorm > 0.0 { bnorm } else { 1.0 };
    // x is carried as an unevaluated sum hi + lo and residuals are
    // accumulated with error-free transformations, so refinement is not
    // limited by the rounding of K x
    let mut hi = rhs.to_vec();
    factor(&mut hi);
    let mut lo = vec![T::zero(); n];
    let mut r = residual(k, &hi, &lo, rhs);
    let mut res = norm2(&r) / scale;
    let target = opts.tolerance * 1e-2;
    while res > target && diag.refinement_steps < opts.max_refinement {
        let mut dx = r.clone();
        factor(&mut dx);
        let (mut thi, mut tlo) = (hi.clone(), lo.clone());
        for i in 0..n {
            let (s, e) = two_sum(thi[i], dx[i]);
            let (s2, e2) = two_sum(s, tlo[i] + e);
            thi[i] = s2;
            tlo[i] = e2;
        }
        let tr = residual(k, &thi, &tlo, rhs);
        let tres = norm2(&tr) / scale;
        diag.refinement_steps += 1;
        if !(tres < res) {
            break;
        }
        let gain = tres / res;
        hi = thi;
        lo = tlo;
        r = tr;
        res = tres;
        if gain > 0.9 {
            break;
        }
    }
    // residual of the vector actually returned
    let zero = vec![T::zero(); n];
    let r = residual(k, &hi, &zero, rhs);
    diag.residual = norm2(&r) / scale;
    let mut bound = rhs.iter().map(|v| v.as_f64().abs()).collect::<Vec<_>>();
    for (row, col, v) in k.triplets() {
        bound[row] += (v * hi[col]).as_f64().abs();
    }
    let bound = bound.iter().map(|v| v * v).sum::<f64>().sqrt();
    diag.backward_error = if bound > 0.0 { norm2(&r) / bound } else { 0.0 };
    // a residual above tolerance is accepted only at the rounding floor
    let floor = 64.0 * T::epsilon().as_f64();
    if !(diag.residual <= opts.tolerance || diag.backward_error <= floor) {
        return Err(SolverError::NotConverged { residual: diag.residual, tolerance: opts.tolerance });
    }
    Ok((hi, diag))
}

fn two_sum<T: Scalar>(a: T, b: T) -> (T, T) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn two_prod<T: Scalar>(a: T, b: T) -> (T, T) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

/// `rhs - K (hi + lo)`, accurate to about twice the working precision.
fn residual<T: Scalar>(k: &CsrMatrix<T>, hi: &[T], lo: &[T], rhs: &[T]) -> Vec<T> {
    (0..k.nrows())
        .map(|r| {
            let (mut s, mut c) = (rhs[r], T::zero());
            for (j, v) in k.row(r) {
                let (p, pe) = two_prod(v, hi[j]);
                let (t, te) = two_sum(s, -p);
                s = t;
                c = c + te - pe - v * lo[j];
            }
            s + c
        })
        .collect()
}

fn norm2<T: Scalar>(v: &[T]) -> f64 {
    v.iter().map(|a| a.as_f64() * a.as_f64()).sum::<f64>().sqrt()
}

/// `P D K D Pᵀ + diag(±δ) = L diag(d) Lᵀ`, with the up-looking elimination of
/// a quasi-definite matrix. `L` is stored by columns with its unit diagonal
/// implied. Factors are kept in `f64` whatever the scalar type.
struct SignedLdl {
    n: usize,
    /// `perm[k]` is the original index of pivot `k`.
    perm: Vec<usize>,
    scaling: Vec<f64>,
    lp: Vec<usize>,
    li: Vec<usize>,
    lx: Vec<f64>,
    d: Vec<f64>,
    /// Original indices of pivots replaced by `±δ_dyn`.
    regularized: Vec<usize>,
}

const NONE: usize = usize::MAX;

impl SignedLdl {
    fn factor<T: Scalar>(k: &CsrMatrix<T>, positive: &[bool], delta: f64) -> Result<Self, SolverError> {
        let n = k.nrows();
        let scaling = ruiz(k);
        let (perm, _) = {
            let ap: Vec<usize> = k.indptr().to_vec();
            let ai: Vec<usize> = k.indices().to_vec();
            let (p, pinv, _) = amd::order(n, &ap, &ai, &amd::Control::default())
                .map_err(|s| SolverError::Ordering(format!("{s:?}")))?;
            (p, pinv)
        };
        let mut pinv = vec![0; n];
        for (kk, &i) in perm.iter().enumerate() {
            pinv[i] = kk;
        }

        // upper triangle of the permuted, scaled, shifted matrix, by columns
        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for i in 0..n {
            let pi = pinv[i];
            for (j, v) in k.row(i) {
                let pj = pinv[j];
                if pi <= pj && i != j {
                    cols[pj].push((pi, v.as_f64() * scaling[i] * scaling[j]));
                }
            }
            let kii = k.get(i, i).as_f64() * scaling[i] * scaling[i];
            cols[pi].push((pi, kii + if positive[i] { delta } else { -delta }));
        }
        let mut ap = vec![0; n + 1];
        let mut ai = Vec::new();
        let mut ax = Vec::new();
        for (j, mut col) in cols.into_iter().enumerate() {
            col.sort_by_key(|e| e.0);
            for (i, v) in col {
                ai.push(i);
                ax.push(v);
            }
            ap[j + 1] = ai.len();
        }
        let sign: Vec<f64> = perm.iter().map(|&i| if positive[i] { 1.0 } else { -1.0 }).collect();

        // elimination tree and column counts
        let mut etree = vec![NONE; n];
        let mut lnz = vec![0usize; n];
        let mut work = vec![NONE; n];
        for j in 0..n {
            work[j] = j;
            for &i0 in &ai[ap[j]..ap[j + 1]] {
                let mut i = i0;
                while work[i] != j {
                    if etree[i] == NONE {
                        etree[i] = j;
                    }
                    lnz[i] += 1;
                    work[i] = j;
                    i = etree[i];
                }
            }
        }
        let mut lp = vec![0; n + 1];
        for i in 0..n {
            lp[i + 1] = lp[i] + lnz[i];
        }
        let mut li = vec![0; lp[n]];
        let mut lx = vec![0.0; lp[n]];
        let mut d = vec![0.0; n];
        let mut dinv = vec![0.0; n];
        let mut next = lp[..n].to_vec();
        let mut marked = vec![false; n];
        let mut y = vec![0.0; n];
        let mut pattern = Vec::with_capacity(n);
        let mut stack = Vec::new();
        let (dyn_eps, dyn_delta) = (1e-13, 1e-7);
        let mut regularized = Vec::new();

        for kk in 0..n {
            pattern.clear();
            for p in ap[kk]..ap[kk + 1] {
                let b = ai[p];
                if b == kk {
                    d[kk] = ax[p];
                    continue;
                }
                y[b] = ax[p];
                if marked[b] {
                    continue;
                }
                marked[b] = true;
                stack.clear();
                stack.push(b);
                let mut nx = etree[b];
                while nx != NONE && nx < kk && !marked[nx] {
                    marked[nx] = true;
                    stack.push(nx);
                    nx = etree[nx];
                }
                while let Some(s) = stack.pop() {
                    pattern.push(s);
                }
            }
            for &c in pattern.iter().rev() {
                let yc = y[c];
                for p in lp[c]..next[c] {
                    y[li[p]] -= lx[p] * yc;
                }
                let slot = next[c];
                li[slot] = kk;
                lx[slot] = yc * dinv[c];
                d[kk] -= yc * lx[slot];
                next[c] += 1;
                y[c] = 0.0;
                marked[c] = false;
            }
            if !d[kk].is_finite() {
                return Err(SolverError::Singular { pivot: perm[kk] });
            }
            if sign[kk] * d[kk] < dyn_eps {
                d[kk] = sign[kk] * dyn_delta;
                regularized.push(perm[kk]);
            }
            dinv[kk] = 1.0 / d[kk];
        }
        Ok(SignedLdl { n, perm, scaling, lp, li, lx, d, regularized })
    }

    fn pivot_range(&self) -> (f64, f64) {
        self.d.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(v.abs()), hi.max(v.abs())))
    }

    fn solve_in_place<T: Scalar>(&self, b: &mut [T]) {
        let mut x: Vec<f64> = self.perm.iter().map(|&i| b[i].as_f64() * self.scaling[i]).collect();
        for i in 0..self.n {
            let xi = x[i];
            for p in self.lp[i]..self.lp[i + 1] {
                x[self.li[p]] -= self.lx[p] * xi;
            }
        }
        for (xi, di) in x.iter_mut().zip(&self.d) {
            *xi /= di;
        }
        for i in (0..self.n).rev() {
            let mut xi = x[i];
            for p in self.lp[i]..self.lp[i + 1] {
                xi -= self.lx[p] * x[self.li[p]];
            }
            x[i] = xi;
        }
        for (kk, &i) in self.perm.iter().enumerate() {
            b[i] = T::lit(x[kk] * self.scaling[i]);
        }
    }
}

/// Symmetric Ruiz equilibration: `D` with every row of `DKD` having max-norm
/// close to one. Empty rows keep unit scaling.
fn ruiz<T: Scalar>(k: &CsrMatrix<T>) -> Vec<f64> {
    let n = k.nrows();
    let mut d = vec![1.0; n];
    for _ in 0..20 {
        let mut worst = 0.0f64;
        let rowmax: Vec<f64> = (0..n)
            .map(|i| k.row(i).fold(0.0f64, |m, (j, v)| m.max((v.as_f64() * d[i] * d[j]).abs())))
            .collect();
        for (di, m) in d.iter_mut().zip(&rowmax) {
            if *m > 0.0 {
                *di /= m.sqrt();
                worst = worst.max((1.0 - m).abs());
            }
        }
        if worst < 1e-3 {
            break;
        }
    }
    d
}
