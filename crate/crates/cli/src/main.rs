//! `pdwg`: run catalog examples or user problems, print convergence tables and
//! export solutions.
//!
//! Exit status: 0 on success, 1 when a problem, mesh or solve fails, 2 on bad
//! arguments.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgGroup, Parser, ValueEnum};
use thiserror::Error;

use pdwg_core::analysis::{
    convergence_study, export_solution, study_on_meshes, AnalysisError, ConvergenceReport, FieldFormat,
    StudyError, StudyOptions,
};
use pdwg_core::mesh::{Mesh, MeshError};
use pdwg_core::problems::{MeshRecipe, Problem, ProblemError};
use pdwg_core::weakops::QuadratureOrder;

/// Grid resolution of the CSV field export.
const CSV_SAMPLES: usize = 101;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Export {
    /// Field samples on a regular grid (solution.csv)
    Csv,
    /// The convergence table as JSON (convergence.json)
    Json,
    /// Discontinuous fields as legacy VTK (solution.vtk)
    Vtk,
}

#[derive(Debug, Parser)]
#[command(name = "pdwg", version, about = "Primal-dual weak Galerkin solver for elliptic interface problems")]
#[command(group(ArgGroup::new("source").required(true).args(["example", "problem"])))]
struct Args {
    /// Built-in example, 1 to 7
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..=7))]
    example: Option<u32>,
    /// Problem configuration file (TOML)
    #[arg(long, value_name = "FILE")]
    problem: Option<PathBuf>,
    /// Initial mesh file; replaces the problem's own mesh
    #[arg(long, value_name = "FILE")]
    mesh: Option<PathBuf>,
    /// Polynomial degree k (u_h has degree k - 1)
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    k: u32,
    /// Number of meshes, the initial one included; 1 solves once
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    levels: u32,
    /// Stabilizer weight of the interior mass term
    #[arg(long, default_value_t = 1.0)]
    tau: f64,
    /// Directory for convergence.csv and exports
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Extra artifacts for the finest level; may be repeated
    #[arg(long, value_enum, requires = "out")]
    export: Vec<Export>,
    /// Quadrature exactness for cells and edges (default 2k + 3 and 2k + 2)
    #[arg(long, value_name = "D")]
    quadrature_degree: Option<usize>,
}

#[derive(Debug, Error)]
enum CliError {
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error("{0}")]
    Study(Box<StudyError>),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn initial_mesh(args: &Args, problem: &Problem<f64>) -> Result<Mesh<f64>, CliError> {
    match &args.mesh {
        Some(path) => Ok(Mesh::import(path)?),
        None => match problem.mesh {
            MeshRecipe::ImportRequired => Err(ProblemError::MeshImportRequired(problem.name.clone()).into()),
            _ => Ok(problem.build_mesh()?),
        },
    }
}

fn run(args: &Args) -> Result<ConvergenceReport, CliError> {
    let problem: Problem<f64> = match (&args.example, &args.problem) {
        (Some(id), _) => Problem::example(*id as usize)?,
        (None, Some(path)) => Problem::from_config_file(path)?,
        (None, None) => unreachable!("clap enforces a problem source"),
    };
    let mesh = initial_mesh(args, &problem)?;
    let k = args.k as usize;
    let mut opts = StudyOptions::new(k, args.levels as usize);
    opts.tau = args.tau;
    if let Some(d) = args.quadrature_degree {
        opts.quadrature = QuadratureOrder { cell: d, edge: d };
    } else {
        opts.quadrature = QuadratureOrder::for_degree(k);
    }
    if let Some(out) = &args.out {
        std::fs::create_dir_all(out).map_err(|source| CliError::Io { path: out.clone(), source })?;
    }

    let last = opts.levels - 1;
    let export = |level: usize, m: &Mesh<f64>, sol: &pdwg_core::Solution<f64>| -> Result<(), AnalysisError> {
        let Some(out) = &args.out else { return Ok(()) };
        if level != last {
            return Ok(());
        }
        for fmt in &args.export {
            match fmt {
                Export::Vtk => export_solution(m, &sol.lambda, &sol.u, out.join("solution.vtk"), FieldFormat::Vtk)?,
                Export::Csv => export_solution(
                    m,
                    &sol.lambda,
                    &sol.u,
                    out.join("solution.csv"),
                    FieldFormat::Csv { samples: CSV_SAMPLES },
                )?,
                Export::Json => {}
            }
        }
        Ok(())
    };
    let result = if opts.levels == 1 {
        study_on_meshes(&problem, [Ok(mesh)], &opts, export)
    } else {
        convergence_study(&problem, &mesh, &opts, export)
    };
    let report = match result {
        Ok(r) => r,
        Err(e) => {
            if !e.partial.levels.is_empty() {
                print!("{}", e.partial.table());
            }
            return Err(CliError::Study(Box::new(e)));
        }
    };
    if let Some(out) = &args.out {
        write(&out.join("convergence.csv"), &report.to_csv())?;
        if args.export.contains(&Export::Json) {
            write(&out.join("convergence.json"), &report.to_json())?;
        }
    }
    Ok(report)
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&args) {
        Ok(report) => {
            print!("{}", report.table());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
