//! Error norms, convergence studies, report formatting and field export.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::assembly::{local_blocks, AssemblyError, AssemblyOptions, SaddleSystem};
use crate::femcore::{CellBasis, FemError, QuadRule};
use crate::mesh::{Mesh, MeshError, Point};
use crate::problems::{Problem, ProblemError};
use crate::solver::{solve, Solution, SolveDiagnostics, SolveOptions, SolverError};
use crate::weakops::QuadratureOrder;
use crate::weakspace::{PrimalFunction, WeakFunction};
use crate::Scalar;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error("a convergence study needs at least 2 levels, got {0}")]
    TooFewLevels(usize),
    #[error("cannot export a solution on an empty mesh")]
    EmptyMesh,
    #[error("sample grid must be at least 2×2")]
    SampleGrid,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Errors of one discrete solution. The exact multiplier is zero, so the
/// `λ` columns are norms of `λ_h` itself.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ErrorRecord {
    /// `‖λ_h‖_w = s(λ_h, λ_h)^{1/2}`.
    pub lambda_w: f64,
    /// Broken `H¹` norm of `λ0`, `(Σ_T ‖λ0‖²_T + ‖∇λ0‖²_T)^{1/2}`.
    pub lambda0_h1: f64,
    pub lambda0_l2: f64,
    /// `‖u - u_h‖_0`, when the problem has an exact solution.
    pub u_l2: Option<f64>,
}

/// Computes every column of [`ErrorRecord`] for a solved system.
/// `exactness` is the cell quadrature exactness (at least `2k + 3`).
pub fn error_norms<T: Scalar>(
    mesh: &Mesh<T>,
    problem: &Problem<T>,
    system: &SaddleSystem<T>,
    solution: &Solution<T>,
    exactness: usize,
) -> Result<ErrorRecord, AnalysisError> {
    let nl = system.dofmap.num_lambda();
    let lambda_w = system.stabilizer.quadratic_form(&solution.x[..nl]).as_f64().max(0.0).sqrt();
    let (l2, h1) = lambda0_norms(mesh, &solution.lambda, exactness)?;
    let u_l2 = if problem.has_exact() {
        Some(primal_error(mesh, problem, &solution.u, exactness)?)
    } else {
        None
    };
    Ok(ErrorRecord { lambda_w, lambda0_h1: h1, lambda0_l2: l2, u_l2 })
}

/// `(‖λ0‖_0, broken ‖λ0‖_1)`.
pub fn lambda0_norms<T: Scalar>(
    mesh: &Mesh<T>,
    lambda: &WeakFunction<T>,
    exactness: usize,
) -> Result<(f64, f64), AnalysisError> {
    let rule = QuadRule::<T>::cell(exactness)?;
    let k = lambda.degree();
    let (mut l2, mut semi) = (0.0f64, 0.0f64);
    for t in 0..mesh.num_triangles() {
        let tri = mesh.triangle_points(t);
        let basis = CellBasis::on_triangle(k, &tri);
        let c = lambda.interior_coeffs(t);
        for (p, w) in rule.map_to_triangle(&tri) {
            let v = basis.evaluate(c, p).as_f64();
            let g = basis.evaluate_gradient(c, p);
            let w = w.as_f64();
            l2 += w * v * v;
            semi += w * (g[0].as_f64().powi(2) + g[1].as_f64().powi(2));
        }
    }
    Ok((l2.sqrt(), (l2 + semi).sqrt()))
}

/// `‖u - u_h‖_0` against the exact branch of each element's subdomain.
pub fn primal_error<T: Scalar>(
    mesh: &Mesh<T>,
    problem: &Problem<T>,
    u: &PrimalFunction<T>,
    exactness: usize,
) -> Result<f64, AnalysisError> {
    let rule = QuadRule::<T>::cell(exactness)?;
    let k = u.degree();
    let mut sum = 0.0f64;
    for t in 0..mesh.num_triangles() {
        let tri = mesh.triangle_points(t);
        let sub = mesh.subdomain(t);
        let basis = CellBasis::on_triangle(k - 1, &tri);
        for (p, w) in rule.map_to_triangle(&tri) {
            let exact = problem.exact(sub, p).ok_or(ProblemError::UncoveredSubdomain(sub))?;
            let d = (exact - basis.evaluate(u.coeffs(t), p)).as_f64();
            sum += w.as_f64() * d * d;
        }
    }
    Ok(sum.sqrt())
}

/// `Σ_T s_T(λ, λ)` from independently computed element blocks.
pub fn elementwise_stabilizer<T: Scalar>(
    mesh: &Mesh<T>,
    problem: &Problem<T>,
    lambda: &WeakFunction<T>,
    opts: &AssemblyOptions,
) -> Result<f64, AnalysisError> {
    let mut total = 0.0f64;
    for t in 0..mesh.num_triangles() {
        let blk = local_blocks(mesh, problem, t, opts)?;
        let x = lambda.local(mesh, t);
        let n = x.len();
        for r in 0..n {
            for c in 0..n {
                total += (x[r] * blk.stabilizer[r * n + c] * x[c]).as_f64();
            }
        }
    }
    Ok(total)
}

#[derive(Clone, Copy, Debug)]
pub struct StudyOptions {
    pub k: usize,
    pub tau: f64,
    /// Number of meshes, including the initial one.
    pub levels: usize,
    pub quadrature: QuadratureOrder,
    pub threads: usize,
    pub solve: SolveOptions,
}

impl StudyOptions {
    pub fn new(k: usize, levels: usize) -> Self {
        let asm = AssemblyOptions::new(k);
        StudyOptions {
            k,
            tau: asm.tau,
            levels,
            quadrature: asm.quadrature,
            threads: asm.threads,
            solve: SolveOptions::default(),
        }
    }

    pub fn assembly(&self) -> AssemblyOptions {
        AssemblyOptions { k: self.k, tau: self.tau, quadrature: self.quadrature, threads: self.threads }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LevelRecord {
    pub level: usize,
    /// Largest element diameter.
    pub h: f64,
    pub triangles: usize,
    pub num_lambda: usize,
    pub num_u: usize,
    pub errors: ErrorRecord,
    pub solver: SolveDiagnostics,
    pub seconds: f64,
}

/// One rate per error column; `None` at level 0 or when an error is at
/// round-off.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Rates {
    pub w: Option<f64>,
    pub h1: Option<f64>,
    pub l2: Option<f64>,
    pub u: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceReport {
    pub problem: String,
    pub k: usize,
    pub tau: f64,
    pub levels: Vec<LevelRecord>,
}

/// Errors below this are treated as exact and get no rate.
pub const ROUND_OFF: f64 = 1e-12;

fn rate(prev: Option<f64>, cur: Option<f64>) -> Option<f64> {
    match (prev, cur) {
        (Some(a), Some(b)) if a > ROUND_OFF && b > ROUND_OFF => Some((a / b).log2()),
        _ => None,
    }
}

/// Three significant digits.
fn fmt_err(v: Option<f64>) -> String {
    v.map(|v| format!("{v:.2e}")).unwrap_or_default()
}

fn fmt_rate(v: Option<f64>) -> String {
    v.map(|v| format!("{v:.2}")).unwrap_or_default()
}

pub const CSV_HEADER: &str = "level,h,err_lambda_w,rate_w,err_lambda0_h1,rate_h1,err_lambda0_l2,rate_l2,err_u_l2,rate_u";

#[derive(Serialize)]
struct JsonRow {
    level: usize,
    h: f64,
    err_lambda_w: f64,
    rate_w: Option<f64>,
    err_lambda0_h1: f64,
    rate_h1: Option<f64>,
    err_lambda0_l2: f64,
    rate_l2: Option<f64>,
    err_u_l2: Option<f64>,
    rate_u: Option<f64>,
}

fn rounded(s: String) -> Option<f64> {
    s.parse().ok()
}

impl ConvergenceReport {
    /// Rates of level `j` from levels `j - 1` and `j`.
    pub fn rates(&self, j: usize) -> Rates {
        if j == 0 || j >= self.levels.len() {
            return Rates::default();
        }
        let (a, b) = (&self.levels[j - 1].errors, &self.levels[j].errors);
        Rates {
            w: rate(Some(a.lambda_w), Some(b.lambda_w)),
            h1: rate(Some(a.lambda0_h1), Some(b.lambda0_h1)),
            l2: rate(Some(a.lambda0_l2), Some(b.lambda0_l2)),
            u: rate(a.u_l2, b.u_l2),
        }
    }

    pub fn final_rates(&self) -> Rates {
        self.rates(self.levels.len().saturating_sub(1))
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("{CSV_HEADER}\n");
        for (j, l) in self.levels.iter().enumerate() {
            let r = self.rates(j);
            let e = &l.errors;
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                l.level,
                fmt_err(Some(l.h)),
                fmt_err(Some(e.lambda_w)),
                fmt_rate(r.w),
                fmt_err(Some(e.lambda0_h1)),
                fmt_rate(r.h1),
                fmt_err(Some(e.lambda0_l2)),
                fmt_rate(r.l2),
                fmt_err(e.u_l2),
                fmt_rate(r.u)
            );
        }
        out
    }

    /// The CSV rows as a JSON array with the same keys; absent values are `null`.
    pub fn to_json(&self) -> String {
        let rows: Vec<JsonRow> = self
            .levels
            .iter()
            .enumerate()
            .map(|(j, l)| {
                let r = self.rates(j);
                let e = &l.errors;
                let num = |v: f64| rounded(fmt_err(Some(v))).unwrap_or(v);
                JsonRow {
                    level: l.level,
                    h: num(l.h),
                    err_lambda_w: num(e.lambda_w),
                    rate_w: rounded(fmt_rate(r.w)),
                    err_lambda0_h1: num(e.lambda0_h1),
                    rate_h1: rounded(fmt_rate(r.h1)),
                    err_lambda0_l2: num(e.lambda0_l2),
                    rate_l2: rounded(fmt_rate(r.l2)),
                    err_u_l2: e.u_l2.map(num),
                    rate_u: rounded(fmt_rate(r.u)),
                }
            })
            .collect();
        serde_json::to_string_pretty(&rows).expect("report rows serialize")
    }

    /// Human-readable table with wall time and solver residuals.
    pub fn table(&self) -> String {
        let mut out = format!("{} (k = {}, tau = {})\n", self.problem, self.k, self.tau);
        let _ = writeln!(
            out,
            "{:>5} {:>9} {:>8} {:>10} {:>5} {:>10} {:>5} {:>10} {:>5} {:>10} {:>5} {:>9} {:>8}",
            "level", "h", "dofs", "|l|_w", "rate", "|l0|_1", "rate", "|l0|_0", "rate", "|u-uh|_0", "rate", "residual", "time[s]"
        );
        for (j, l) in self.levels.iter().enumerate() {
            let r = self.rates(j);
            let e = &l.errors;
            let dash = |s: String| if s.is_empty() { "-".to_string() } else { s };
            let _ = writeln!(
                out,
                "{:>5} {:>9} {:>8} {:>10} {:>5} {:>10} {:>5} {:>10} {:>5} {:>10} {:>5} {:>9.1e} {:>8.2}",
                l.level,
                fmt_err(Some(l.h)),
                l.num_lambda + l.num_u,
                fmt_err(Some(e.lambda_w)),
                dash(fmt_rate(r.w)),
                fmt_err(Some(e.lambda0_h1)),
                dash(fmt_rate(r.h1)),
                fmt_err(Some(e.lambda0_l2)),
                dash(fmt_rate(r.l2)),
                dash(fmt_err(e.u_l2)),
                dash(fmt_rate(r.u)),
                l.solver.residual,
                l.seconds
            );
        }
        out
    }
}

/// A failed study: the levels completed before the failure, and the cause.
#[derive(Debug, Error)]
#[error("level {level} failed: {source}")]
pub struct StudyError {
    pub level: usize,
    pub partial: ConvergenceReport,
    #[source]
    pub source: AnalysisError,
}

/// Assembly, solve and norms on one mesh.
pub fn solve_level<T: Scalar>(
    mesh: &Mesh<T>,
    problem: &Problem<T>,
    opts: &StudyOptions,
) -> Result<(SaddleSystem<T>, Solution<T>, ErrorRecord), AnalysisError> {
    let asm = opts.assembly();
    let system = SaddleSystem::assemble(mesh, problem, &asm)?;
    let solution = solve(mesh, &system, &opts.solve)?;
    let errors = error_norms(mesh, problem, &system, &solution, opts.quadrature.cell)?;
    Ok((system, solution, errors))
}

/// Solves on every mesh of `meshes` in turn. `on_level` sees each solution
/// (for export) before it is dropped.
pub fn study_on_meshes<T: Scalar>(
    problem: &Problem<T>,
    meshes: impl IntoIterator<Item = Result<Mesh<T>, AnalysisError>>,
    opts: &StudyOptions,
    mut on_level: impl FnMut(usize, &Mesh<T>, &Solution<T>) -> Result<(), AnalysisError>,
) -> Result<ConvergenceReport, StudyError> {
    let mut report = ConvergenceReport { problem: problem.name.clone(), k: opts.k, tau: opts.tau, levels: Vec::new() };
    for (level, mesh) in meshes.into_iter().enumerate() {
        let start = Instant::now();
        let res = mesh.and_then(|mesh| {
            problem.validate(&mesh)?;
            let (system, solution, errors) = solve_level(&mesh, problem, opts)?;
            on_level(level, &mesh, &solution)?;
            Ok(LevelRecord {
                level,
                h: mesh.mesh_size().as_f64(),
                triangles: mesh.num_triangles(),
                num_lambda: system.dofmap.num_lambda(),
                num_u: system.dofmap.num_u(),
                errors,
                solver: solution.diagnostics,
                seconds: 0.0,
            })
        });
        match res {
            Ok(mut rec) => {
                rec.seconds = start.elapsed().as_secs_f64();
                report.levels.push(rec);
            }
            Err(source) => return Err(StudyError { level, partial: report, source }),
        }
    }
    Ok(report)
}

/// Convergence study on the uniform refinement chain of `initial`.
pub fn convergence_study<T: Scalar>(
    problem: &Problem<T>,
    initial: &Mesh<T>,
    opts: &StudyOptions,
    on_level: impl FnMut(usize, &Mesh<T>, &Solution<T>) -> Result<(), AnalysisError>,
) -> Result<ConvergenceReport, StudyError> {
    if opts.levels < 2 {
        let partial = ConvergenceReport { problem: problem.name.clone(), k: opts.k, tau: opts.tau, levels: Vec::new() };
        return Err(StudyError { level: 0, partial, source: AnalysisError::TooFewLevels(opts.levels) });
    }
    let mut current: Option<Mesh<T>> = None;
    let chain = (0..opts.levels).map(|_| {
        let next = match &current {
            None => initial.clone(),
            Some(m) => m.refine_uniform(),
        };
        current = Some(next.clone());
        Ok(next)
    });
    study_on_meshes(problem, chain, opts, on_level)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldFormat {
    /// Legacy ASCII unstructured grid, each triangle with its own vertices.
    Vtk,
    /// `x,y,subdomain,u_h,lambda0` on a `n × n` grid over the bounding box.
    Csv { samples: usize },
}

fn require_nonempty<T: Scalar>(mesh: &Mesh<T>) -> Result<(), AnalysisError> {
    if mesh.num_triangles() == 0 {
        Err(AnalysisError::EmptyMesh)
    } else {
        Ok(())
    }
}

fn fields_at<T: Scalar>(mesh: &Mesh<T>, lambda: &WeakFunction<T>, u: &PrimalFunction<T>, t: usize, p: Point<T>) -> (f64, f64) {
    let tri = mesh.triangle_points(t);
    let lb = CellBasis::on_triangle(lambda.degree(), &tri);
    (u.evaluate(mesh, t, p).as_f64(), lb.evaluate(lambda.interior_coeffs(t), p).as_f64())
}

/// Writes `u_h` and `λ0` as a discontinuous VTK field: point data sampled at
/// each element's own vertices, cell data at centroids.
pub fn write_vtk<T: Scalar, W: std::io::Write>(
    mesh: &Mesh<T>,
    lambda: &WeakFunction<T>,
    u: &PrimalFunction<T>,
    mut out: W,
) -> Result<(), AnalysisError> {
    require_nonempty(mesh)?;
    let nt = mesh.num_triangles();
    let mut s = String::new();
    let _ = writeln!(s, "# vtk DataFile Version 3.0\npdwg solution\nASCII\nDATASET UNSTRUCTURED_GRID");
    let _ = writeln!(s, "POINTS {} double", 3 * nt);
    let mut pu = Vec::with_capacity(3 * nt);
    let mut pl = Vec::with_capacity(3 * nt);
    for t in 0..nt {
        for p in mesh.triangle_points(t) {
            let _ = writeln!(s, "{:e} {:e} 0", p[0].as_f64(), p[1].as_f64());
            let (a, b) = fields_at(mesh, lambda, u, t, p);
            pu.push(a);
            pl.push(b);
        }
    }
    let _ = writeln!(s, "CELLS {nt} {}", 4 * nt);
    for t in 0..nt {
        let _ = writeln!(s, "3 {} {} {}", 3 * t, 3 * t + 1, 3 * t + 2);
    }
    let _ = writeln!(s, "CELL_TYPES {nt}");
    for _ in 0..nt {
        s.push_str("5\n");
    }
    let _ = writeln!(s, "POINT_DATA {}", 3 * nt);
    for (name, vals) in [("u_h", &pu), ("lambda0", &pl)] {
        let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
        for v in vals {
            let _ = writeln!(s, "{v:e}");
        }
    }
    let _ = writeln!(s, "CELL_DATA {nt}\nSCALARS subdomain int 1\nLOOKUP_TABLE default");
    for t in 0..nt {
        let _ = writeln!(s, "{}", mesh.subdomain(t));
    }
    for (name, idx) in [("u_h_centroid", 0), ("lambda0_centroid", 1)] {
        let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
        for t in 0..nt {
            let f = fields_at(mesh, lambda, u, t, mesh.centroid(t));
            let _ = writeln!(s, "{:e}", if idx == 0 { f.0 } else { f.1 });
        }
    }
    out.write_all(s.as_bytes())?;
    Ok(())
}

/// Writes `x,y,subdomain,u_h,lambda0` at the points of an `n × n` grid over
/// the mesh's bounding box that lie in the mesh. A point on an element
/// boundary takes the lowest-numbered element containing it.
pub fn write_samples<T: Scalar, W: std::io::Write>(
    mesh: &Mesh<T>,
    lambda: &WeakFunction<T>,
    u: &PrimalFunction<T>,
    n: usize,
    mut out: W,
) -> Result<usize, AnalysisError> {
    require_nonempty(mesh)?;
    if n < 2 {
        return Err(AnalysisError::SampleGrid);
    }
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for v in mesh.vertices() {
        for d in 0..2 {
            lo[d] = lo[d].min(v[d].as_f64());
            hi[d] = hi[d].max(v[d].as_f64());
        }
    }
    let step = [(hi[0] - lo[0]) / (n - 1) as f64, (hi[1] - lo[1]) / (n - 1) as f64];
    // owner[iy * n + ix]: first triangle containing the grid point
    let mut owner = vec![usize::MAX; n * n];
    for t in 0..mesh.num_triangles() {
        let p = mesh.triangle_points(t).map(|q| [q[0].as_f64(), q[1].as_f64()]);
        let bb = |d: usize| {
            let (a, b) = (p[0][d].min(p[1][d]).min(p[2][d]), p[0][d].max(p[1][d]).max(p[2][d]));
            let lo_i = (((a - lo[d]) / step[d]).floor().max(0.0)) as usize;
            let hi_i = ((((b - lo[d]) / step[d]).ceil()) as usize).min(n - 1);
            lo_i..=hi_i
        };
        let area2 = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
        let tol = 1e-10 * area2.abs();
        for iy in bb(1) {
            for ix in bb(0) {
                if owner[iy * n + ix] != usize::MAX {
                    continue;
                }
                let q = [lo[0] + ix as f64 * step[0], lo[1] + iy as f64 * step[1]];
                let inside = (0..3).all(|j| {
                    let (a, b) = (p[j], p[(j + 1) % 3]);
                    (b[0] - a[0]) * (q[1] - a[1]) - (q[0] - a[0]) * (b[1] - a[1]) >= -tol
                });
                if inside {
                    owner[iy * n + ix] = t;
                }
            }
        }
    }
    let mut s = String::from("x,y,subdomain,u_h,lambda0\n");
    let mut rows = 0;
    for iy in 0..n {
        for ix in 0..n {
            let t = owner[iy * n + ix];
            if t == usize::MAX {
                continue;
            }
            let q = [lo[0] + ix as f64 * step[0], lo[1] + iy as f64 * step[1]];
            let (a, b) = fields_at(mesh, lambda, u, t, [T::lit(q[0]), T::lit(q[1])]);
            let _ = writeln!(s, "{:e},{:e},{},{a:e},{b:e}", q[0], q[1], mesh.subdomain(t));
            rows += 1;
        }
    }
    out.write_all(s.as_bytes())?;
    Ok(rows)
}

/// Writes the fields of a solution to `path`.
pub fn export_solution<T: Scalar>(
    mesh: &Mesh<T>,
    lambda: &WeakFunction<T>,
    u: &PrimalFunction<T>,
    path: impl AsRef<Path>,
    format: FieldFormat,
) -> Result<(), AnalysisError> {
    require_nonempty(mesh)?;
    let file = std::io::BufWriter::new(std::fs::File::create(path)?);
    match format {
        FieldFormat::Vtk => write_vtk(mesh, lambda, u, file),
        FieldFormat::Csv { samples } => write_samples(mesh, lambda, u, samples, file).map(|_| ()),
    }
}
