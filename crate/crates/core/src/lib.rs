//! Primal-dual weak Galerkin (PDWG) finite elements for second-order elliptic
//! interface problems on interface-fitted triangular meshes.
//!
//! The unknowns are a piecewise polynomial primal variable `u_h` of degree
//! `k - 1` and a weak-function Lagrange multiplier `λ_h = {λ0, λb, λn}`. Both are
//! found from one symmetric saddle-point system whose data functional only
//! needs `L²` boundary and interface data, so discontinuous jump data is
//! admissible.
//!
//! All numerical code is generic over [`Scalar`] (implemented for `f32` and
//! `f64`); the `*64` aliases below fix the scalar to `f64`, which is what the
//! convergence studies use.

pub mod analysis;
pub mod assembly;
pub mod femcore;
pub mod mesh;
pub mod problems;
mod scalar;
pub mod solver;
pub mod sparse;
pub mod weakops;
pub mod weakspace;

pub use scalar::Scalar;

pub use analysis::{convergence_study, ConvergenceReport, ErrorRecord, LevelRecord, StudyOptions};
pub use assembly::{AssemblyOptions, SaddleSystem};
pub use mesh::{Edge, EdgeKind, Mesh, MeshError, Point, SquareInterface, Triangle};
pub use problems::{Problem, ProblemError};
pub use solver::{solve, Solution, SolveOptions, SolverError};
pub use weakops::{ElementOperators, ElementQuadrature, QuadratureOrder};
pub use weakspace::{DofMap, PrimalFunction, WeakFunction};

/// Double-precision mesh.
pub type Mesh64 = Mesh<f64>;
/// Double-precision problem description.
pub type Problem64 = Problem<f64>;
/// Double-precision assembled saddle-point system.
pub type SaddleSystem64 = SaddleSystem<f64>;
/// Double-precision weak function.
pub type WeakFunction64 = WeakFunction<f64>;
/// Double-precision primal function.
pub type PrimalFunction64 = PrimalFunction<f64>;
/// Double-precision solution pair.
pub type Solution64 = Solution<f64>;

/// Single-precision mesh.
pub type Mesh32 = Mesh<f32>;
/// Single-precision problem description.
pub type Problem32 = Problem<f32>;
