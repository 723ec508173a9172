//! Global stabilizer `S`, coupling `B`, load functional and the saddle-point
//! system `K = [[S, Bᵀ], [B, 0]]`.
//!
//! Element blocks are computed independently (in parallel when
//! `PDWG_THREADS` asks for workers) and scattered in element order, so the
//! assembled matrices do not depend on the thread count.

use rayon::prelude::*;
use thiserror::Error;

use crate::femcore::{cell_dim, FemError};
use crate::mesh::{EdgeKind, Mesh};
use crate::problems::{Problem, ProblemError};
use crate::sparse::{CsrMatrix, TripletBuilder};
use crate::weakops::{ElementOperators, ElementQuadrature, QuadratureOrder};
use crate::weakspace::DofMap;
use crate::femcore::{EdgeBasis, QuadRule};
use crate::Scalar;

#[derive(Debug, Error)]
pub enum AssemblyError {
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error("invalid assembly option: {0}")]
    InvalidOption(String),
    #[error("problem data given for interface piece {0}, which the mesh does not contain")]
    UnknownPiece(u32),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("assembled matrix is not symmetric: max |K - Kᵀ| = {defect:e} against max |K| = {scale:e}")]
    Asymmetric { defect: f64, scale: f64 },
    #[error("thread pool: {0}")]
    ThreadPool(String),
}

/// Worker count from `PDWG_THREADS`; unset, empty, unparsable or 0 means
/// sequential.
pub fn threads_from_env() -> usize {
    std::env::var("PDWG_THREADS").ok().and_then(|v| v.trim().parse().ok()).unwrap_or(0)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AssemblyOptions {
    /// Polynomial degree `k >= 1`.
    pub k: usize,
    /// Weight `τ > 0` of `(σ0, λ0)` in the stabilizer.
    pub tau: f64,
    pub quadrature: QuadratureOrder,
    /// Worker threads; 0 assembles sequentially.
    pub threads: usize,
}

impl AssemblyOptions {
    /// `τ = 1`, default quadrature, thread count from the environment.
    pub fn new(k: usize) -> Self {
        AssemblyOptions { k, tau: 1.0, quadrature: QuadratureOrder::for_degree(k), threads: threads_from_env() }
    }

    pub fn with_tau(mut self, tau: f64) -> Self {
        self.tau = tau;
        self
    }

    fn check(&self) -> Result<(), AssemblyError> {
        if self.k == 0 {
            return Err(AssemblyError::InvalidOption("k must be at least 1".into()));
        }
        if !(self.tau > 0.0) || !self.tau.is_finite() {
            return Err(AssemblyError::InvalidOption(format!("tau must be positive, got {}", self.tau)));
        }
        Ok(())
    }
}

/// Dense element blocks in the element-local layout.
#[derive(Clone, Debug)]
pub struct LocalBlocks<T> {
    pub element: usize,
    /// `s_T`, `n × n` row-major with `n` the local dimension.
    pub stabilizer: Vec<T>,
    /// `b_T(w_i, ·)`, `dim P_{k-1} × n`.
    pub coupling: Vec<T>,
    /// `(f, φ_j)_T` on the interior block.
    pub load: Vec<T>,
}

/// Element blocks of triangle `t`.
pub fn local_blocks<T: Scalar>(
    mesh: &Mesh<T>,
    problem: &Problem<T>,
    t: usize,
    opts: &AssemblyOptions,
) -> Result<LocalBlocks<T>, AssemblyError> {
    let k = opts.k;
    let sub = mesh.subdomain(t);
    problem.subdomain(sub)?;
    let quad = ElementQuadrature::new(mesh, t, k, opts.quadrature)?;
    let ops = ElementOperators::new(&quad, |p| problem.diffusion(sub, p))?;
    let n = quad.local_dim();
    let nc = cell_dim(k);
    let nr = cell_dim(k - 1);
    let h = mesh.diameter(t);
    let (h3, h1) = (T::one() / (h * h * h), T::one() / h);
    let tau = T::lit(opts.tau);

    let mut s = vec![T::zero(); n * n];
    let mut v1 = vec![T::zero(); n];
    let mut v2 = vec![T::zero(); n];
    for (j, eq) in quad.edges.iter().enumerate() {
        let (tb, fb) = (quad.trace_offset(j), quad.flux_offset(j));
        let nrm = eq.normal;
        for (q, &(p, w)) in eq.points.iter().enumerate() {
            v1.iter_mut().for_each(|v| *v = T::zero());
            v2.iter_mut().for_each(|v| *v = T::zero());
            let vals = quad.basis.values(p);
            let grads = quad.basis.gradients(p);
            let a = problem.diffusion(sub, p).0;
            for i in 0..nc {
                v1[i] = vals[i];
                v2[i] = a * (grads[i][0] * nrm[0] + grads[i][1] * nrm[1]);
            }
            for (m, &phi) in eq.trace_values[q].iter().enumerate() {
                v1[tb + m] = -phi;
            }
            for (m, &chi) in eq.flux_values[q].iter().enumerate() {
                v2[fb + m] = -chi;
            }
            let (w1, w2) = (w * h3, w * h1);
            for r in 0..n {
                let (a1, a2) = (w1 * v1[r], w2 * v2[r]);
                if a1.is_zero() && a2.is_zero() {
                    continue;
                }
                for c in 0..n {
                    s[r * n + c] += a1 * v1[c] + a2 * v2[c];
                }
            }
        }
    }

    let mut coupling = ops.laplacian_moments.clone();
    let mut load = vec![T::zero(); nc];
    for (&(p, w), vals) in quad.cell.iter().zip(&quad.cell_values) {
        for i in 0..nc {
            for j in 0..nc {
                s[i * n + j] += tau * w * vals[i] * vals[j];
            }
        }
        let b = problem.convection(sub, p);
        let c = problem.reaction(sub, p);
        let f = problem.source(sub, p);
        for (l, &v) in load.iter_mut().zip(vals) {
            *l += w * f * v;
        }
        // b·∇_w λ at p as a row over local DOFs
        let test = &vals[..nr];
        let mut bgrad = vec![T::zero(); n];
        if !(b[0].is_zero() && b[1].is_zero()) {
            for m in 0..nr {
                let (bx, by) = (b[0] * test[m], b[1] * test[m]);
                let gx = &ops.gradient.matrix[m * n..(m + 1) * n];
                let gy = &ops.gradient.matrix[(nr + m) * n..(nr + m + 1) * n];
                for col in 0..n {
                    bgrad[col] += bx * gx[col] + by * gy[col];
                }
            }
        }
        for i in 0..nr {
            let wi = w * test[i];
            let row = &mut coupling[i * n..(i + 1) * n];
            for col in 0..n {
                row[col] -= wi * bgrad[col];
            }
            for j in 0..nc {
                row[j] += wi * c * vals[j];
            }
        }
    }
    Ok(LocalBlocks { element: t, stabilizer: s, coupling, load })
}

fn all_blocks<T: Scalar>(
    mesh: &Mesh<T>,
    problem: &Problem<T>,
    opts: &AssemblyOptions,
) -> Result<Vec<LocalBlocks<T>>, AssemblyError> {
    opts.check()?;
    let pieces = mesh.interface_pieces();
    for d in &problem.interface {
        if !pieces.contains(&d.piece) {
            return Err(AssemblyError::UnknownPiece(d.piece));
        }
    }
    let work = |t| local_blocks(mesh, problem, t, opts);
    if opts.threads == 0 {
        return (0..mesh.num_triangles()).map(work).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.threads)
        .build()
        .map_err(|e| AssemblyError::ThreadPool(e.to_string()))?;
    pool.install(|| (0..mesh.num_triangles()).into_par_iter().map(work).collect())
}

fn scatter_stabilizer<T: Scalar>(mesh: &Mesh<T>, map: &DofMap, blocks: &[LocalBlocks<T>]) -> CsrMatrix<T> {
    let n = map.local_dim();
    let mut trip = TripletBuilder::with_capacity(map.num_lambda(), map.num_lambda(), blocks.len() * n * n);
    for blk in blocks {
        let l2g = map.local_to_global(mesh, blk.element);
        for (r, gr) in l2g.iter().enumerate() {
            let Some((gr, sr)) = *gr else { continue };
            for (c, gc) in l2g.iter().enumerate() {
                let Some((gc, sc)) = *gc else { continue };
                let v = blk.stabilizer[r * n + c];
                if !v.is_zero() {
                    trip.push(gr, gc, if sr == sc { v } else { -v });
                }
            }
        }
    }
    trip.build()
}

fn scatter_coupling<T: Scalar>(mesh: &Mesh<T>, map: &DofMap, blocks: &[LocalBlocks<T>]) -> CsrMatrix<T> {
    let n = map.local_dim();
    let nr = map.primal_dim();
    let mut trip = TripletBuilder::with_capacity(map.num_u(), map.num_lambda(), blocks.len() * nr * n);
    for blk in blocks {
        let l2g = map.local_to_global(mesh, blk.element);
        let rows = map.primal(blk.element);
        for (i, gi) in rows.enumerate() {
            for (c, gc) in l2g.iter().enumerate() {
                let Some((gc, sc)) = *gc else { continue };
                let v = blk.coupling[i * n + c];
                if !v.is_zero() {
                    trip.push(gi - map.num_lambda(), gc, if sc > 0 { v } else { -v });
                }
            }
        }
    }
    trip.build()
}

/// Global stabilizer `S` over `W_h^0`.
pub fn assemble_stabilizer<T: Scalar>(
    mesh: &Mesh<T>,
    problem: &Problem<T>,
    opts: &AssemblyOptions,
) -> Result<CsrMatrix<T>, AssemblyError> {
    let blocks = all_blocks(mesh, problem, opts)?;
    Ok(scatter_stabilizer(mesh, &DofMap::new(mesh, opts.k), &blocks))
}

/// Coupling `B` with rows over `M_h` and columns over `W_h^0`.
pub fn assemble_coupling<T: Scalar>(
    mesh: &Mesh<T>,
    problem: &Problem<T>,
    opts: &AssemblyOptions,
) -> Result<CsrMatrix<T>, AssemblyError> {
    let blocks = all_blocks(mesh, problem, opts)?;
    Ok(scatter_coupling(mesh, &DofMap::new(mesh, opts.k), &blocks))
}

fn edge_rhs<T: Scalar>(
    mesh: &Mesh<T>,
    problem: &Problem<T>,
    map: &DofMap,
    opts: &AssemblyOptions,
    rhs: &mut [T],
) -> Result<(), AssemblyError> {
    let rule = QuadRule::<T>::edge(opts.quadrature.edge)?;
    let k = opts.k;
    for (e, edge) in mesh.edges().iter().enumerate() {
        let [a, b] = mesh.edge_points(e);
        let pts = rule.map_to_segment(a, b);
        let (tb, fb) = (EdgeBasis::new(k, edge.length), EdgeBasis::new(k - 1, edge.length));
        match edge.kind {
            EdgeKind::Interior => {}
            EdgeKind::Boundary => {
                let sub = mesh.subdomain(edge.plus);
                let flux = map.flux(e);
                for &(p, s, w) in &pts {
                    let g = problem.boundary_value(sub, p)?;
                    for (gi, v) in flux.clone().zip(fb.values(s)) {
                        rhs[gi] -= w * g * v;
                    }
                }
            }
            EdgeKind::Interface(piece) => {
                let plus = mesh.subdomain(edge.plus);
                let minus = mesh.subdomain(edge.minus.expect("interface edge has two sides"));
                let flux = map.flux(e);
                let trace = map.trace(e).expect("interface edges carry traces");
                for &(p, s, w) in &pts {
                    let phi = problem.jump(piece, plus, minus, p)?;
                    let psi = problem.flux_jump(piece, plus, minus, p, edge.normal)?;
                    for (gi, v) in flux.clone().zip(fb.values(s)) {
                        rhs[gi] -= w * phi * v;
                    }
                    for (gi, v) in trace.clone().zip(tb.values(s)) {
                        rhs[gi] += w * psi * v;
                    }
                }
            }
        }
    }
    Ok(())
}

fn scatter_load<T: Scalar>(map: &DofMap, blocks: &[LocalBlocks<T>], rhs: &mut [T]) {
    for blk in blocks {
        for (gi, &v) in map.interior(blk.element).zip(&blk.load) {
            rhs[gi] += v;
        }
    }
}

/// The load `φ_h(σ)` over `W_h^0`: `(f, σ0) - ⟨g, σn⟩_∂Ω - ⟨φ_m, σn⟩_Γ + ⟨ψ_m, σb⟩_Γ`.
pub fn assemble_rhs<T: Scalar>(
    mesh: &Mesh<T>,
    problem: &Problem<T>,
    opts: &AssemblyOptions,
) -> Result<Vec<T>, AssemblyError> {
    let blocks = all_blocks(mesh, problem, opts)?;
    let map = DofMap::new(mesh, opts.k);
    let mut rhs = vec![T::zero(); map.num_lambda()];
    scatter_load(&map, &blocks, &mut rhs);
    edge_rhs(mesh, problem, &map, opts, &mut rhs)?;
    Ok(rhs)
}

/// The assembled saddle-point system, unknowns ordered `(λ, u)`.
#[derive(Clone, Debug)]
pub struct SaddleSystem<T> {
    pub dofmap: DofMap,
    pub tau: T,
    pub stabilizer: CsrMatrix<T>,
    pub coupling: CsrMatrix<T>,
    pub matrix: CsrMatrix<T>,
    /// `[φ_h; 0]`.
    pub rhs: Vec<T>,
}

/// Combines `S`, `B` and the load into `K` and `[rhs; 0]`, checking
/// dimensions and symmetry.
pub fn build_system<T: Scalar>(
    dofmap: DofMap,
    tau: T,
    stabilizer: CsrMatrix<T>,
    coupling: CsrMatrix<T>,
    rhs_lambda: Vec<T>,
) -> Result<SaddleSystem<T>, AssemblyError> {
    let (nl, nu) = (dofmap.num_lambda(), dofmap.num_u());
    if stabilizer.nrows() != nl || stabilizer.ncols() != nl {
        return Err(AssemblyError::Dimension(format!(
            "S is {}×{}, expected {nl}×{nl}",
            stabilizer.nrows(),
            stabilizer.ncols()
        )));
    }
    if coupling.nrows() != nu || coupling.ncols() != nl {
        return Err(AssemblyError::Dimension(format!(
            "B is {}×{}, expected {nu}×{nl}",
            coupling.nrows(),
            coupling.ncols()
        )));
    }
    if rhs_lambda.len() != nl {
        return Err(AssemblyError::Dimension(format!("load has {} entries, expected {nl}", rhs_lambda.len())));
    }
    let n = nl + nu;
    let mut trip = TripletBuilder::with_capacity(n, n, stabilizer.nnz() + 2 * coupling.nnz());
    trip.extend(stabilizer.triplets());
    for (r, c, v) in coupling.triplets() {
        trip.push(nl + r, c, v);
        trip.push(c, nl + r, v);
    }
    let matrix = trip.build();
    let (defect, scale) = (matrix.symmetry_defect().as_f64(), matrix.max_abs().as_f64());
    if defect > 1e-12 * scale {
        return Err(AssemblyError::Asymmetric { defect, scale });
    }
    let mut rhs = rhs_lambda;
    rhs.resize(n, T::zero());
    Ok(SaddleSystem { dofmap, tau, stabilizer, coupling, matrix, rhs })
}

impl<T: Scalar> SaddleSystem<T> {
    /// Assembles everything in one element pass.
    pub fn assemble(mesh: &Mesh<T>, problem: &Problem<T>, opts: &AssemblyOptions) -> Result<Self, AssemblyError> {
        let blocks = all_blocks(mesh, problem, opts)?;
        let map = DofMap::new(mesh, opts.k);
        let s = scatter_stabilizer(mesh, &map, &blocks);
        let b = scatter_coupling(mesh, &map, &blocks);
        let mut rhs = vec![T::zero(); map.num_lambda()];
        scatter_load(&map, &blocks, &mut rhs);
        edge_rhs(mesh, problem, &map, opts, &mut rhs)?;
        build_system(map, T::lit(opts.tau), s, b, rhs)
    }

    pub fn dim(&self) -> usize {
        self.dofmap.total()
    }

    /// Writes `K` in coordinate format.
    pub fn write_matrix<W: std::io::Write>(&self, out: W) -> std::io::Result<()> {
        self.matrix.write_coo(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::femcore::dense::symmetric_eigenvalues;
    use crate::mesh::SquareInterface;
    use crate::problems::{Expr, MeshRecipe, Subdomain};
    use crate::weakspace::{interpolate_qh, WeakFunction};

    fn square_mesh() -> Mesh<f64> {
        Mesh::structured(4, Some(SquareInterface::centered(0.25, 0.75))).unwrap()
    }

    fn constant_problem(a: f64, b: [f64; 2], c: f64) -> Problem<f64> {
        let sub = |id| Subdomain::new(id, Expr::num(a), [Expr::num(b[0]), Expr::num(b[1])], Expr::num(c), Expr::num(1.0));
        Problem {
            name: "constant".into(),
            subdomains: vec![sub(1), sub(2)],
            boundary: Some(Expr::num(0.0)),
            interface: (1..=4)
                .map(|piece| crate::problems::InterfacePiece {
                    piece,
                    jump: Some(Expr::num(0.0)),
                    flux_jump: Some(crate::problems::FluxJump::Normal(Expr::num(0.0))),
                })
                .collect(),
            mesh: MeshRecipe::Structured { n: 4, interface: Some(SquareInterface::centered(0.25, 0.75)) },
        }
    }

    fn seq(k: usize) -> AssemblyOptions {
        AssemblyOptions { threads: 0, ..AssemblyOptions::new(k) }
    }

    #[test]
    fn system_structure_on_example_one() {
        let mesh = square_mesh();
        let prob = Problem::example(1).unwrap();
        for k in 1..=2 {
            let sys = SaddleSystem::assemble(&mesh, &prob, &seq(k)).unwrap();
            assert_eq!(sys.dim(), sys.dofmap.num_lambda() + sys.dofmap.num_u());
            assert!(sys.matrix.symmetry_defect() <= 1e-12 * sys.matrix.max_abs());
            let nl = sys.dofmap.num_lambda();
            for r in nl..sys.dim() {
                assert!(sys.matrix.row(r).all(|(c, _)| c < nl));
            }
            assert!(sys.rhs[nl..].iter().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn stabilizer_is_positive_definite_on_w0() {
        let mesh = Mesh::structured(2, None).unwrap();
        let prob = Problem { mesh: MeshRecipe::Structured { n: 2, interface: None }, ..constant_problem(1.0, [0.0; 2], 1.0) };
        let prob = Problem { subdomains: prob.subdomains[..1].to_vec(), interface: vec![], ..prob };
        for k in 1..=2 {
            let s = assemble_stabilizer(&mesh, &prob, &seq(k)).unwrap();
            let eig = symmetric_eigenvalues(&s.to_dense(), s.nrows());
            assert!(eig[0] > 0.0, "smallest eigenvalue {}", eig[0]);
        }
    }

    #[test]
    fn consistent_weak_function_sees_only_the_mass_term() {
        // σ0 = σb on edges and σn = a∇σ0·n for σ = Q_h of a linear function
        let mesh = square_mesh();
        let prob = constant_problem(1.0, [0.0; 2], 0.0);
        let opts = seq(1);
        let w = interpolate_qh(&mesh, 1, |_, p| 2.0 * p[0] - p[1], |_, _| [2.0, -1.0], 6).unwrap();
        let total: f64 = (0..mesh.num_triangles())
            .map(|t| {
                let blk = local_blocks(&mesh, &prob, t, &opts).unwrap();
                let x = w.local(&mesh, t);
                let n = x.len();
                (0..n).map(|r| (0..n).map(|c| x[r] * blk.stabilizer[r * n + c] * x[c]).sum::<f64>()).sum::<f64>()
            })
            .sum();
        // τ ∫_Ω (2x - y)² = 4/3 - 1 + 1/3
        assert!((total - 2.0 / 3.0).abs() < 1e-12, "{total}");
    }

    #[test]
    fn single_interior_flux_dof() {
        let mesh = square_mesh();
        let prob = constant_problem(1.0, [0.0; 2], 0.0);
        let opts = seq(1);
        let s = assemble_stabilizer(&mesh, &prob, &opts).unwrap();
        let map = DofMap::new(&mesh, 1);
        let e = mesh.edges().iter().position(|e| e.kind == EdgeKind::Interior).unwrap();
        let edge = &mesh.edges()[e];
        let g = map.flux(e).start;
        let (tl, tr) = (edge.plus, edge.minus.unwrap());
        let want = (1.0 / mesh.diameter(tl) + 1.0 / mesh.diameter(tr)) * edge.length;
        assert!((s.get(g, g) - want).abs() < 1e-12 * want);
        let x: Vec<f64> = (0..map.num_lambda()).map(|i| if i == g { 1.0 } else { 0.0 }).collect();
        assert!((s.quadratic_form(&x) - want).abs() < 1e-12 * want);
        assert_eq!(s.quadratic_form(&vec![0.0; map.num_lambda()]), 0.0);
    }

    #[test]
    fn tau_scales_only_the_interior_mass() {
        let mesh = square_mesh();
        let prob = Problem::example(1).unwrap();
        for k in 1..=2 {
            let s1 = assemble_stabilizer(&mesh, &prob, &seq(k)).unwrap();
            let s4 = assemble_stabilizer(&mesh, &prob, &seq(k).with_tau(4.0)).unwrap();
            let map = DofMap::new(&mesh, k);
            let scale = s1.max_abs();
            for t in 0..mesh.num_triangles() {
                let quad = ElementQuadrature::new(&mesh, t, k, QuadratureOrder::for_degree(k)).unwrap();
                let nc = quad.cell_dim();
                let mut mass = vec![0.0; nc * nc];
                for (&(_, w), v) in quad.cell.iter().zip(&quad.cell_values) {
                    for i in 0..nc {
                        for j in 0..nc {
                            mass[i * nc + j] += w * v[i] * v[j];
                        }
                    }
                }
                for (i, gi) in map.interior(t).enumerate() {
                    for (j, gj) in map.interior(t).enumerate() {
                        let d = s4.get(gi, gj) - s1.get(gi, gj);
                        assert!((d - 3.0 * mass[i * nc + j]).abs() < 1e-12 * scale);
                    }
                }
            }
            for (r, c, v) in s4.triplets() {
                let interior = r < map.num_interior() && c < map.num_interior();
                if !interior {
                    assert!((v - s1.get(r, c)).abs() <= 1e-12 * scale);
                }
            }
        }
    }

    #[test]
    fn coupling_entry_of_a_constant() {
        // a = 1, b = 0, c = 1 and λ = Q_h 1: L_w λ = 0, so b(1_T, λ) = |T|
        let mesh = square_mesh();
        let prob = constant_problem(1.0, [0.0; 2], 1.0);
        let opts = seq(1);
        let w = interpolate_qh(&mesh, 1, |_, _| 1.0, |_, _| [0.0, 0.0], 4).unwrap();
        for t in [0, 13, 31] {
            let blk = local_blocks(&mesh, &prob, t, &opts).unwrap();
            let x = w.local(&mesh, t);
            let v: f64 = blk.coupling.iter().zip(&x).map(|(a, b)| a * b).sum();
            assert!((v - mesh.area(t)).abs() < 1e-14);
        }
    }

    #[test]
    fn coupling_of_pure_fluxes_matches_the_weak_laplacian() {
        // k = 1: σ0 = σb = 0 gives b(1_T, σ) = -Σ_e ⟨σn, 1⟩
        let mesh = square_mesh();
        let prob = constant_problem(1.0, [0.5, -0.2], 0.7);
        let opts = seq(1);
        let b = assemble_coupling(&mesh, &prob, &opts).unwrap();
        let map = DofMap::new(&mesh, 1);
        let mut x = vec![0.0; map.num_lambda()];
        for e in 0..mesh.num_edges() {
            x[map.flux(e).start] = (e as f64 * 0.61).cos();
        }
        let bx = b.matvec(&x);
        for t in 0..mesh.num_triangles() {
            let want: f64 = mesh
                .triangle_edges(t)
                .iter()
                .map(|&e| -(mesh.edges()[e].orientation(t) as f64) * x[map.flux(e).start] * mesh.edges()[e].length)
                .sum();
            let row = map.primal(t).start - map.num_lambda();
            assert!((bx[row] - want).abs() < 1e-12, "{} vs {want}", bx[row]);
            // doubling λ doubles the product
            let x2: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
            assert!((b.matvec(&x2)[row] - 2.0 * bx[row]).abs() < 1e-12);
        }
    }

    #[test]
    fn adjoint_consistency_with_element_sums() {
        let mesh = square_mesh();
        let prob = Problem::example(1).unwrap();
        let opts = seq(2);
        let b = assemble_coupling(&mesh, &prob, &opts).unwrap();
        let map = DofMap::new(&mesh, 2);
        let sigma: Vec<f64> = (0..map.num_lambda()).map(|i| (i as f64 * 0.13).sin()).collect();
        let w: Vec<f64> = (0..map.num_u()).map(|i| (i as f64 * 0.29).cos()).collect();
        let global: f64 = w.iter().zip(b.matvec(&sigma)).map(|(a, b)| a * b).sum();
        let lam = WeakFunction::from_dofs(&mesh, &map, &sigma);
        let mut local = 0.0;
        for t in 0..mesh.num_triangles() {
            let blk = local_blocks(&mesh, &prob, t, &opts).unwrap();
            let x = lam.local(&mesh, t);
            let n = x.len();
            for (i, gi) in map.primal(t).enumerate() {
                let bi: f64 = (0..n).map(|c| blk.coupling[i * n + c] * x[c]).sum();
                local += w[gi - map.num_lambda()] * bi;
            }
        }
        assert!((global - local).abs() <= 1e-12 * global.abs().max(1.0));
    }

    #[test]
    fn load_of_unit_source_has_only_cell_moments() {
        let mesh = square_mesh();
        let prob = constant_problem(1.0, [0.0; 2], 0.0);
        let rhs = assemble_rhs(&mesh, &prob, &seq(1)).unwrap();
        let map = DofMap::new(&mesh, 1);
        for t in 0..mesh.num_triangles() {
            let quad = ElementQuadrature::new(&mesh, t, 1, QuadratureOrder::for_degree(1)).unwrap();
            for (i, gi) in map.interior(t).enumerate() {
                let m: f64 = quad.cell.iter().zip(&quad.cell_values).map(|(&(_, w), v)| w * v[i]).sum();
                assert!((rhs[gi] - m).abs() < 1e-15);
            }
        }
        assert!(rhs[map.num_interior()..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rough_jump_data_is_accepted() {
        let prob = Problem::example(6).unwrap();
        let mesh = prob.build_mesh().unwrap();
        let rhs = assemble_rhs(&mesh, &prob, &seq(1)).unwrap();
        assert!(rhs.iter().all(|v: &f64| v.is_finite()));
        assert!(rhs.iter().any(|v| *v != 0.0));
    }

    #[test]
    fn configuration_errors() {
        let mesh = square_mesh();
        let mut prob = constant_problem(1.0, [0.0; 2], 0.0);
        prob.interface[0].piece = 9;
        assert!(matches!(assemble_rhs(&mesh, &prob, &seq(1)), Err(AssemblyError::UnknownPiece(9))));
        let prob = constant_problem(1.0, [0.0; 2], 0.0);
        let bad = AssemblyOptions { tau: 0.0, ..seq(1) };
        assert!(matches!(assemble_stabilizer(&mesh, &prob, &bad), Err(AssemblyError::InvalidOption(_))));
        let map = DofMap::new(&mesh, 1);
        let s = CsrMatrix::zeros(3, 3);
        let b = CsrMatrix::zeros(map.num_u(), map.num_lambda());
        assert!(matches!(build_system(map, 1.0, s, b, vec![]), Err(AssemblyError::Dimension(_))));
    }

    #[test]
    fn parallel_assembly_is_bitwise_identical() {
        let mesh = square_mesh().refine_uniform();
        let prob = Problem::example(1).unwrap();
        let a = SaddleSystem::assemble(&mesh, &prob, &seq(2)).unwrap();
        let b = SaddleSystem::assemble(&mesh, &prob, &AssemblyOptions { threads: 3, ..seq(2) }).unwrap();
        assert_eq!(a.matrix, b.matrix);
        assert_eq!(a.rhs, b.rhs);
    }

    #[test]
    fn matrix_dump() {
        let mesh = Mesh::structured(2, None).unwrap();
        let prob = constant_problem(1.0, [0.0; 2], 0.0);
        let prob = Problem { subdomains: prob.subdomains[..1].to_vec(), interface: vec![], ..prob };
        let sys = SaddleSystem::assemble(&mesh, &prob, &seq(1)).unwrap();
        let mut out = Vec::new();
        sys.write_matrix(&mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap().lines().count(), sys.matrix.nnz() + 1);
    }
}
