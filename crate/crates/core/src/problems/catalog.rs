//! The seven benchmark problems on the unit square.

use super::{parse_field, Expr, FluxJump, InterfacePiece, MeshRecipe, Problem, ProblemError, Subdomain};
use crate::mesh::SquareInterface;
use crate::Scalar;

fn e<T: Scalar>(src: &str) -> Expr<T> {
    parse_field(src, src).expect("catalog expression parses")
}

fn vec2<T: Scalar>(x: &str, y: &str) -> [Expr<T>; 2] {
    [e(x), e(y)]
}

fn square() -> MeshRecipe {
    MeshRecipe::Structured { n: 4, interface: Some(SquareInterface::centered(0.25, 0.75)) }
}

fn manufactured<T: Scalar>(
    name: &str,
    mesh: MeshRecipe,
    branches: [(&str, [&str; 2], &str, &str); 2],
) -> Problem<T> {
    let subdomains = branches
        .iter()
        .zip(1u32..)
        .map(|(&(a, [bx, by], c, u), id)| Subdomain::manufactured(id, e(a), vec2(bx, by), e(c), e(u)))
        .collect();
    Problem { name: name.to_string(), subdomains, boundary: None, interface: Vec::new(), mesh }
}

fn piece<T: Scalar>(piece: u32, jump: &str, flux: [&str; 2]) -> InterfacePiece<T> {
    InterfacePiece { piece, jump: Some(e(jump)), flux_jump: Some(FluxJump::Vector(vec2(flux[0], flux[1]))) }
}

pub(super) fn example<T: Scalar>(id: usize) -> Result<Problem<T>, ProblemError> {
    let p = match id {
        1 => manufactured(
            "example 1",
            square(),
            [
                ("1", ["1", "1"], "1", "10 - x^2 - y^2"),
                ("1", ["1", "1"], "1", "sin(pi*x)*sin(pi*y)"),
            ],
        ),
        2 => manufactured(
            "example 2",
            MeshRecipe::ImportRequired,
            [
                ("2 + sin(x + y)", ["x", "y"], "4 + x", "sin(x + y) + cos(x + y) + 5"),
                ("2 + sin(x + y)", ["x", "y"], "4 + x", "x + y + 1"),
            ],
        ),
        3 => manufactured(
            "example 3",
            MeshRecipe::ImportRequired,
            [
                ("1 + x + y", ["1", "1 + y"], "2", "exp(x)*cos(y) + 10"),
                ("1", ["1", "1 + y"], "2", "5*exp(-x^2 - y^2)"),
            ],
        ),
        4 => manufactured(
            "example 4",
            MeshRecipe::ImportRequired,
            [
                ("(x*y + 2)/5", ["0", "1"], "2", "x + y + 2"),
                ("(x^2 - y^2 + 3)/7", ["1", "0"], "1", "0.5*sin(x + y) + 0.5*cos(x + y) + 0.3"),
            ],
        ),
        5 => manufactured(
            "example 5",
            MeshRecipe::ImportRequired,
            [
                ("0.01", ["0", "0"], "0", "exp((2*x - 1)^2 + (2*y - 1)^2)"),
                ("0.1", ["0", "0"], "0", "0.1*(x^2 + y^2)^2 - 0.01*ln(2*sqrt(x^2 + y^2))"),
            ],
        ),
        6 => Problem {
            name: "example 6".to_string(),
            subdomains: vec![
                Subdomain::new(1, e("2 + sin(x + y)"), vec2("0", "0"), e("0.4"), e("0")),
                Subdomain::new(2, e("5"), vec2("0", "0"), e("0.4"), e("0")),
            ],
            boundary: Some(e("sin(x + y)/5 + cos(x + y) + 1")),
            interface: vec![
                piece(1, "1", ["4", "0"]),
                piece(2, "2", ["2/exp(3/4)*exp(x)", "0"]),
                piece(3, "3", ["0", "6*pi*cos(2*pi*y)"]),
                piece(4, "4", ["1", "0"]),
            ],
            mesh: square(),
        },
        7 => {
            let b = ["2 + y", "1 + x"];
            let side = ["(y - 1/4)*(y - 3/4)*(cos(x) + 2*x)", "(sin(x) + x^2)*(2*y - 1)"];
            Problem {
                name: "example 7".to_string(),
                subdomains: vec![
                    Subdomain::new(1, e("1"), vec2(b[0], b[1]), e("0"), e("0")),
                    Subdomain::new(2, e("100"), vec2(b[0], b[1]), e("0"), e("0")),
                ],
                boundary: Some(e("(x^2 + y^3)/2*(sin(x + y)/2 + cos(x + y)/3) - ln(x^2 + y^2)/3")),
                interface: vec![
                    piece(1, "1", ["pi*cos(2*pi*x)", "0"]),
                    piece(2, "1", ["sin(x)/2 + cos(x)/4 + y", "0"]),
                    piece(3, "0", side),
                    piece(4, "0", side),
                ],
                mesh: square(),
            }
        }
        _ => return Err(ProblemError::UnknownExample(id)),
    };
    Ok(p)
}
