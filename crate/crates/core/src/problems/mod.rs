//! Interface problems `-∇·(a∇u) + ∇·(bu) + cu = f`: coefficients, data,
//! optional exact solutions, and the built-in catalog.

mod catalog;
mod config;
pub mod expr;

use std::path::PathBuf;

use thiserror::Error;

use crate::femcore::QuadRule;
use crate::mesh::{EdgeKind, Mesh, MeshError, Point, SquareInterface};
use crate::Scalar;

pub use expr::{Expr, ExprError, Func, Var};

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("unknown example {0}; the catalog has examples 1 to 7")]
    UnknownExample(usize),
    #[error("{0} has a curved interface; curved-interface meshes must be imported (use --mesh <file>)")]
    MeshImportRequired(String),
    #[error("in '{field}': {source}")]
    Expr {
        field: String,
        #[source]
        source: ExprError,
    },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("configuration parse error: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error("mesh subdomain {0} has no coefficients")]
    UncoveredSubdomain(u32),
    #[error("interface piece {0} has no jump data and no exact solution to derive it from")]
    UncoveredPiece(u32),
    #[error("boundary data missing for subdomain {0} and no exact solution to derive it from")]
    UncoveredBoundary(u32),
    #[error("diffusion coefficient of subdomain {subdomain} is {value:e} at ({}, {}); it must be positive", point[0], point[1])]
    Ellipticity { subdomain: u32, value: f64, point: [f64; 2] },
    #[error("interface piece {piece}: {what} inconsistent with the exact solution by {residual:e} at ({}, {})", point[0], point[1])]
    Inconsistent { piece: u32, what: &'static str, residual: f64, point: [f64; 2] },
}

fn parse_field<T: Scalar>(field: &str, src: &str) -> Result<Expr<T>, ProblemError> {
    Expr::parse(src).map_err(|source| ProblemError::Expr { field: field.to_string(), source })
}

/// Exact branch `u_i` with its gradient.
#[derive(Clone, Debug)]
pub struct ExactBranch<T> {
    pub u: Expr<T>,
    pub grad: [Expr<T>; 2],
}

impl<T: Scalar> ExactBranch<T> {
    pub fn new(u: Expr<T>) -> Self {
        let grad = u.gradient();
        ExactBranch { u, grad }
    }
}

/// Coefficients and source on one subdomain.
#[derive(Clone, Debug)]
pub struct Subdomain<T> {
    pub id: u32,
    pub a: Expr<T>,
    pub grad_a: [Expr<T>; 2],
    pub b: [Expr<T>; 2],
    pub c: Expr<T>,
    pub f: Expr<T>,
    pub exact: Option<ExactBranch<T>>,
}

impl<T: Scalar> Subdomain<T> {
    /// Coefficients `a`, `b`, `c` with an explicit source.
    pub fn new(id: u32, a: Expr<T>, b: [Expr<T>; 2], c: Expr<T>, f: Expr<T>) -> Self {
        let grad_a = a.gradient();
        Subdomain { id, a, grad_a, b, c, f, exact: None }
    }

    /// Coefficients with an exact branch; the source is
    /// `-∇·(a∇u) + ∇·(bu) + cu`, differentiated symbolically.
    pub fn manufactured(id: u32, a: Expr<T>, b: [Expr<T>; 2], c: Expr<T>, u: Expr<T>) -> Self {
        use expr::{add, mul, sub};
        let exact = ExactBranch::new(u);
        let [ux, uy] = exact.grad.clone();
        let u = exact.u.clone();
        let diffusion = add(
            mul(a.clone(), ux).derivative(Var::X),
            mul(a.clone(), uy).derivative(Var::Y),
        );
        let convection = add(
            mul(b[0].clone(), u.clone()).derivative(Var::X),
            mul(b[1].clone(), u.clone()).derivative(Var::Y),
        );
        let f = add(sub(convection, diffusion), mul(c.clone(), u));
        let mut s = Subdomain::new(id, a, b, c, f);
        s.exact = Some(exact);
        s
    }

    pub fn with_exact(mut self, u: Expr<T>) -> Self {
        self.exact = Some(ExactBranch::new(u));
        self
    }

    /// `a∇u - bu` of the exact branch.
    fn total_flux(&self, p: Point<T>) -> Option<Point<T>> {
        let e = self.exact.as_ref()?;
        let (a, u) = (self.a.eval(p), e.u.eval(p));
        Some([
            a * e.grad[0].eval(p) - self.b[0].eval(p) * u,
            a * e.grad[1].eval(p) - self.b[1].eval(p) * u,
        ])
    }
}

/// Prescribed jump of the total flux `a∇u - bu` across an interface piece.
#[derive(Clone, Debug)]
pub enum FluxJump<T> {
    /// Normal component along the piece's plus-side normal.
    Normal(Expr<T>),
    /// Vector jump, dotted with the plus-side normal on evaluation.
    Vector([Expr<T>; 2]),
}

/// Data of one interface piece; `None` falls back to the exact solution.
#[derive(Clone, Debug)]
pub struct InterfacePiece<T> {
    pub piece: u32,
    pub jump: Option<Expr<T>>,
    pub flux_jump: Option<FluxJump<T>>,
}

/// Where the mesh of a problem comes from.
#[derive(Clone, Debug, PartialEq)]
pub enum MeshRecipe {
    /// `n × n` grid on the unit square, optionally with a square interface.
    Structured { n: usize, interface: Option<SquareInterface> },
    /// A fitted mesh file.
    File(PathBuf),
    /// Curved interface; a fitted mesh must be imported.
    ImportRequired,
}

/// A complete interface problem.
#[derive(Clone, Debug)]
pub struct Problem<T> {
    pub name: String,
    pub subdomains: Vec<Subdomain<T>>,
    /// Dirichlet data `g`; `None` uses the exact branch of the boundary
    /// triangle's subdomain.
    pub boundary: Option<Expr<T>>,
    pub interface: Vec<InterfacePiece<T>>,
    pub mesh: MeshRecipe,
}

/// Outcome of [`Problem::validate`].
#[derive(Clone, Debug, PartialEq)]
pub struct ValidationReport {
    pub subdomains: Vec<u32>,
    pub pieces: Vec<u32>,
    pub min_diffusion: f64,
    /// Largest interface consistency residual, when every side has an exact
    /// branch and some piece has explicit data.
    pub max_consistency_residual: Option<f64>,
    pub sampled_points: usize,
}

impl<T: Scalar> Problem<T> {
    /// Built-in example `id` in `1..=7`.
    pub fn example(id: usize) -> Result<Self, ProblemError> {
        catalog::example(id)
    }

    /// Loads a problem from a TOML configuration file.
    pub fn from_config_file(path: impl AsRef<std::path::Path>) -> Result<Self, ProblemError> {
        config::load(path.as_ref())
    }

    /// Parses TOML configuration text; relative mesh paths resolve against `base`.
    pub fn from_config_str(text: &str, base: &std::path::Path) -> Result<Self, ProblemError> {
        config::parse(text, base)
    }

    pub fn subdomain(&self, id: u32) -> Result<&Subdomain<T>, ProblemError> {
        self.subdomains.iter().find(|s| s.id == id).ok_or(ProblemError::UncoveredSubdomain(id))
    }

    fn sub(&self, id: u32) -> &Subdomain<T> {
        self.subdomain(id).expect("subdomain checked by validation")
    }

    pub fn has_exact(&self) -> bool {
        !self.subdomains.is_empty() && self.subdomains.iter().all(|s| s.exact.is_some())
    }

    /// Builds the mesh described by the recipe.
    pub fn build_mesh(&self) -> Result<Mesh<T>, ProblemError> {
        match &self.mesh {
            MeshRecipe::Structured { n, interface } => Ok(Mesh::structured(*n, *interface)?),
            MeshRecipe::File(path) => Ok(Mesh::import(path)?),
            MeshRecipe::ImportRequired => Err(ProblemError::MeshImportRequired(self.name.clone())),
        }
    }

    /// `a` and `∇a` on subdomain `id`.
    pub fn diffusion(&self, id: u32, p: Point<T>) -> (T, Point<T>) {
        let s = self.sub(id);
        (s.a.eval(p), [s.grad_a[0].eval(p), s.grad_a[1].eval(p)])
    }

    pub fn convection(&self, id: u32, p: Point<T>) -> Point<T> {
        let s = self.sub(id);
        [s.b[0].eval(p), s.b[1].eval(p)]
    }

    pub fn reaction(&self, id: u32, p: Point<T>) -> T {
        self.sub(id).c.eval(p)
    }

    pub fn source(&self, id: u32, p: Point<T>) -> T {
        self.sub(id).f.eval(p)
    }

    pub fn exact(&self, id: u32, p: Point<T>) -> Option<T> {
        self.sub(id).exact.as_ref().map(|e| e.u.eval(p))
    }

    pub fn exact_gradient(&self, id: u32, p: Point<T>) -> Option<Point<T>> {
        self.sub(id).exact.as_ref().map(|e| [e.grad[0].eval(p), e.grad[1].eval(p)])
    }

    /// `a∇u` of the exact branch.
    pub fn exact_flux(&self, id: u32, p: Point<T>) -> Option<Point<T>> {
        let g = self.exact_gradient(id, p)?;
        let a = self.sub(id).a.eval(p);
        Some([a * g[0], a * g[1]])
    }

    /// Dirichlet value on the boundary of subdomain `id`.
    pub fn boundary_value(&self, id: u32, p: Point<T>) -> Result<T, ProblemError> {
        match &self.boundary {
            Some(g) => Ok(g.eval(p)),
            None => self.exact(id, p).ok_or(ProblemError::UncoveredBoundary(id)),
        }
    }

    fn piece(&self, piece: u32) -> Option<&InterfacePiece<T>> {
        self.interface.iter().find(|d| d.piece == piece)
    }

    /// Jump `u_plus - u_minus` on `piece`.
    pub fn jump(&self, piece: u32, plus: u32, minus: u32, p: Point<T>) -> Result<T, ProblemError> {
        if let Some(e) = self.piece(piece).and_then(|d| d.jump.as_ref()) {
            return Ok(e.eval(p));
        }
        match (self.exact(plus, p), self.exact(minus, p)) {
            (Some(a), Some(b)) => Ok(a - b),
            _ => Err(ProblemError::UncoveredPiece(piece)),
        }
    }

    /// Jump of `(a∇u - bu)·n` from minus to plus along the plus-side normal `n`.
    pub fn flux_jump(&self, piece: u32, plus: u32, minus: u32, p: Point<T>, n: Point<T>) -> Result<T, ProblemError> {
        match self.piece(piece).and_then(|d| d.flux_jump.as_ref()) {
            Some(FluxJump::Normal(e)) => Ok(e.eval(p)),
            Some(FluxJump::Vector(v)) => Ok(v[0].eval(p) * n[0] + v[1].eval(p) * n[1]),
            None => match (self.sub(plus).total_flux(p), self.sub(minus).total_flux(p)) {
                (Some(a), Some(b)) => Ok((a[0] - b[0]) * n[0] + (a[1] - b[1]) * n[1]),
                _ => Err(ProblemError::UncoveredPiece(piece)),
            },
        }
    }

    /// Checks tag coverage, ellipticity and (with an exact solution) the
    /// consistency of explicit interface data, sampling quadrature points.
    pub fn validate(&self, mesh: &Mesh<T>) -> Result<ValidationReport, ProblemError> {
        let subdomains = mesh.subdomain_ids();
        for &id in &subdomains {
            self.subdomain(id)?;
        }
        let cell = QuadRule::<T>::cell(5).expect("low-order rule");
        let edge = QuadRule::<T>::edge(5).expect("low-order rule");
        let mut min_a = f64::INFINITY;
        let mut sampled = 0;
        for t in 0..mesh.num_triangles() {
            let id = mesh.subdomain(t);
            for (p, _) in cell.map_to_triangle(&mesh.triangle_points(t)) {
                let a = self.diffusion(id, p).0.as_f64();
                sampled += 1;
                if !(a > 0.0) {
                    return Err(ProblemError::Ellipticity {
                        subdomain: id,
                        value: a,
                        point: [p[0].as_f64(), p[1].as_f64()],
                    });
                }
                min_a = min_a.min(a);
            }
        }
        let mut max_res: Option<f64> = None;
        for (e, ed) in mesh.edges().iter().enumerate() {
            let [a, b] = mesh.edge_points(e);
            match ed.kind {
                EdgeKind::Boundary => {
                    let id = mesh.subdomain(ed.plus);
                    for (p, _, _) in edge.map_to_segment(a, b) {
                        self.boundary_value(id, p)?;
                    }
                }
                EdgeKind::Interface(piece) => {
                    let plus = mesh.subdomain(ed.plus);
                    let minus = mesh.subdomain(ed.minus.expect("interface edge has two sides"));
                    let explicit = self.piece(piece);
                    let both_exact = self.exact(plus, a).is_some() && self.exact(minus, a).is_some();
                    for (p, _, _) in edge.map_to_segment(a, b) {
                        let jump = self.jump(piece, plus, minus, p)?;
                        let flux = self.flux_jump(piece, plus, minus, p, ed.normal)?;
                        if !both_exact || explicit.is_none() {
                            continue;
                        }
                        let point = [p[0].as_f64(), p[1].as_f64()];
                        let du = (self.exact(plus, p).expect("exact") - self.exact(minus, p).expect("exact")).as_f64();
                        let r = (jump.as_f64() - du).abs();
                        max_res = Some(max_res.map_or(r, |m| m.max(r)));
                        if r > 1e-10 {
                            return Err(ProblemError::Inconsistent { piece, what: "jump", residual: r, point });
                        }
                        let fp = self.sub(plus).total_flux(p).expect("exact");
                        let fm = self.sub(minus).total_flux(p).expect("exact");
                        let n = ed.normal;
                        let dflux = ((fp[0] - fm[0]) * n[0] + (fp[1] - fm[1]) * n[1]).as_f64();
                        let r = (flux.as_f64() - dflux).abs();
                        max_res = Some(max_res.map_or(r, |m| m.max(r)));
                        if r > 1e-10 {
                            return Err(ProblemError::Inconsistent { piece, what: "flux jump", residual: r, point });
                        }
                    }
                }
                EdgeKind::Interior => {}
            }
        }
        Ok(ValidationReport {
            subdomains,
            pieces: mesh.interface_pieces(),
            min_diffusion: min_a,
            max_consistency_residual: max_res,
            sampled_points: sampled,
        })
    }
}
