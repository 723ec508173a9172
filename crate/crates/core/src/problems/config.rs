//! TOML problem configuration.
//!
//! ```toml
//! name = "two-material disc"
//! boundary = "x + y"            # optional; defaults to the exact solution
//!
//! [mesh]                        # either a grid ...
//! n = 8
//! square = [0.25, 0.75, 0.25, 0.75]
//! # ... or a file, relative to this config: file = "disc.mesh"
//!
//! [[subdomain]]
//! id = 1
//! a = "2 + x"
//! b = ["1", "0"]                # optional, default 0
//! c = "1"                       # optional, default 0
//! exact = "x^2 + y"             # optional; f is derived when omitted
//! # f = "..."
//!
//! [[interface]]
//! piece = 1
//! jump = "1"                    # optional; from the exact solution
//! flux_jump = "0"               # normal component, or
//! # flux_jump_vector = ["x", "0"]
//! ```

use std::path::Path;

use serde::Deserialize;

use super::{parse_field, FluxJump, InterfacePiece, MeshRecipe, Problem, ProblemError, Subdomain};
use crate::mesh::SquareInterface;
use crate::Scalar;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    name: Option<String>,
    boundary: Option<String>,
    mesh: MeshConfig,
    subdomain: Vec<SubdomainConfig>,
    #[serde(default)]
    interface: Vec<InterfaceConfig>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MeshConfig {
    n: Option<usize>,
    square: Option<[f64; 4]>,
    file: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SubdomainConfig {
    id: u32,
    a: String,
    b: Option<[String; 2]>,
    c: Option<String>,
    f: Option<String>,
    exact: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct InterfaceConfig {
    piece: u32,
    jump: Option<String>,
    flux_jump: Option<String>,
    flux_jump_vector: Option<[String; 2]>,
}

pub(super) fn load<T: Scalar>(path: &Path) -> Result<Problem<T>, ProblemError> {
    let text = std::fs::read_to_string(path)?;
    parse(&text, path.parent().unwrap_or(Path::new(".")))
}

pub(super) fn parse<T: Scalar>(text: &str, base: &Path) -> Result<Problem<T>, ProblemError> {
    let cfg: ConfigFile = toml::from_str(text)?;
    let mesh = match (cfg.mesh.n, cfg.mesh.square, cfg.mesh.file) {
        (None, None, Some(file)) => MeshRecipe::File(base.join(file)),
        (Some(n), square, None) => MeshRecipe::Structured {
            n,
            interface: square.map(|[x0, x1, y0, y1]| SquareInterface::new(x0, x1, y0, y1)),
        },
        _ => {
            return Err(ProblemError::Config(
                "[mesh] needs either `n` (with optional `square`) or `file`".to_string(),
            ))
        }
    };
    let mut subdomains = Vec::new();
    for s in cfg.subdomain {
        let field = |name: &str| format!("subdomain {} {name}", s.id);
        let a = parse_field(&field("a"), &s.a)?;
        let b = match &s.b {
            Some([bx, by]) => [parse_field(&field("b"), bx)?, parse_field(&field("b"), by)?],
            None => [super::Expr::num(0.0), super::Expr::num(0.0)],
        };
        let c = match &s.c {
            Some(c) => parse_field(&field("c"), c)?,
            None => super::Expr::num(0.0),
        };
        let exact = s.exact.as_deref().map(|u| parse_field(&field("exact"), u)).transpose()?;
        let sub = match (s.f.as_deref(), exact) {
            (Some(f), exact) => {
                let sub = Subdomain::new(s.id, a, b, c, parse_field(&field("f"), f)?);
                match exact {
                    Some(u) => sub.with_exact(u),
                    None => sub,
                }
            }
            (None, Some(u)) => Subdomain::manufactured(s.id, a, b, c, u),
            (None, None) => {
                return Err(ProblemError::Config(format!(
                    "subdomain {} needs a source `f` or an `exact` solution",
                    s.id
                )))
            }
        };
        if subdomains.iter().any(|x: &Subdomain<T>| x.id == sub.id) {
            return Err(ProblemError::Config(format!("subdomain {} defined twice", sub.id)));
        }
        subdomains.push(sub);
    }
    let mut interface = Vec::new();
    for d in cfg.interface {
        let field = |name: &str| format!("interface {} {name}", d.piece);
        let flux_jump = match (&d.flux_jump, &d.flux_jump_vector) {
            (Some(_), Some(_)) => {
                return Err(ProblemError::Config(format!(
                    "interface {}: give `flux_jump` or `flux_jump_vector`, not both",
                    d.piece
                )))
            }
            (Some(f), None) => Some(FluxJump::Normal(parse_field(&field("flux_jump"), f)?)),
            (None, Some([fx, fy])) => Some(FluxJump::Vector([
                parse_field(&field("flux_jump_vector"), fx)?,
                parse_field(&field("flux_jump_vector"), fy)?,
            ])),
            (None, None) => None,
        };
        let jump = d.jump.as_deref().map(|j| parse_field(&field("jump"), j)).transpose()?;
        interface.push(InterfacePiece { piece: d.piece, jump, flux_jump });
    }
    let boundary = cfg.boundary.as_deref().map(|g| parse_field("boundary", g)).transpose()?;
    Ok(Problem {
        name: cfg.name.unwrap_or_else(|| "user problem".to_string()),
        subdomains,
        boundary,
        interface,
        mesh,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const DISC: &str = r#"
name = "square"
[mesh]
n = 4
square = [0.25, 0.75, 0.25, 0.75]

[[subdomain]]
id = 1
a = "1"
b = ["1", "1"]
c = "1"
exact = "10 - x^2 - y^2"

[[subdomain]]
id = 2
a = "1"
b = ["1", "1"]
c = "1"
exact = "sin(pi*x)*sin(pi*y)"
"#;

    #[test]
    fn config_matches_catalog_example() {
        let p: Problem<f64> = parse(DISC, Path::new(".")).unwrap();
        let q: Problem<f64> = Problem::example(1).unwrap();
        assert_eq!(p.mesh, q.mesh);
        for pt in [[0.3, 0.4], [0.8, 0.1]] {
            for id in 1..=2 {
                assert_eq!(p.source(id, pt), q.source(id, pt));
                assert_eq!(p.exact(id, pt), q.exact(id, pt));
            }
        }
        let mesh = p.build_mesh().unwrap();
        p.validate(&mesh).unwrap();
    }

    #[test]
    fn config_errors() {
        let bad_expr = DISC.replace("10 - x^2", "10 - q^2");
        assert!(matches!(parse::<f64>(&bad_expr, Path::new(".")), Err(ProblemError::Expr { .. })));
        let no_source = DISC.replace("exact = \"10 - x^2 - y^2\"", "");
        assert!(matches!(parse::<f64>(&no_source, Path::new(".")), Err(ProblemError::Config(_))));
        let unknown = DISC.replace("name =", "nmae =");
        assert!(matches!(parse::<f64>(&unknown, Path::new(".")), Err(ProblemError::Toml(_))));
        let both = "[mesh]\nn = 2\nfile = \"a\"\n[[subdomain]]\nid = 1\na = \"1\"\nf = \"0\"\n";
        assert!(matches!(parse::<f64>(both, Path::new(".")), Err(ProblemError::Config(_))));
    }

    #[test]
    fn file_meshes_resolve_against_the_config_directory() {
        let text = "[mesh]\nfile = \"grid.mesh\"\n[[subdomain]]\nid = 1\na = \"1\"\nf = \"1\"\n\
                    [[interface]]\npiece = 2\njump = \"1\"\nflux_jump_vector = [\"x\", \"0\"]\n";
        let p: Problem<f64> = parse(text, Path::new("/data/runs")).unwrap();
        assert_eq!(p.mesh, MeshRecipe::File("/data/runs/grid.mesh".into()));
        assert_eq!(p.flux_jump(2, 1, 1, [0.5, 0.0], [1.0, 0.0]).unwrap(), 0.5);
    }
}
