//! Plain-text mesh format.
//!
//! ```text
//! pdwg-mesh 1
//! vertices <count>
//! <x> <y>
//! triangles <count>
//! <v0> <v1> <v2> <subdomain_id>
//! interface_edges <count>
//! <va> <vb> <piece_id> <plus_triangle>
//! ```
//!
//! Indices are zero-based. Blank lines and lines starting with `#` are
//! ignored. Boundary and interior edges are derived from the connectivity.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use super::{InterfaceTag, Mesh, MeshError, Triangle};
use crate::Scalar;

const HEADER: &str = "pdwg-mesh 1";

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Lines { inner: text.lines().enumerate(), last: 0 }
    }

    fn next_line(&mut self) -> Result<(usize, &'a str), MeshError> {
        for (i, line) in self.inner.by_ref() {
            self.last = i + 1;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            return Ok((i + 1, line));
        }
        Err(MeshError::Parse { line: self.last + 1, message: "unexpected end of file".into() })
    }

    fn section(&mut self, name: &str) -> Result<usize, MeshError> {
        let (line, text) = self.next_line()?;
        let mut parts = text.split_whitespace();
        match (parts.next(), parts.next(), parts.next()) {
            (Some(key), Some(count), None) if key == name => count.parse().map_err(|_| {
                MeshError::Parse { line, message: format!("bad {name} count {count:?}") }
            }),
            _ => Err(MeshError::Parse { line, message: format!("expected `{name} <count>`") }),
        }
    }

    fn fields<F: FromStr>(&mut self, n: usize) -> Result<(usize, Vec<F>), MeshError> {
        let (line, text) = self.next_line()?;
        let values: Result<Vec<F>, _> = text.split_whitespace().map(str::parse).collect();
        match values {
            Ok(v) if v.len() == n => Ok((line, v)),
            _ => Err(MeshError::Parse { line, message: format!("expected {n} numeric fields") }),
        }
    }
}

impl<T: Scalar> Mesh<T> {
    /// Parses the text mesh format and validates the result.
    pub fn parse(text: &str) -> Result<Self, MeshError> {
        let mut lines = Lines::new(text);
        let (line, header) = lines.next_line()?;
        if header.split_whitespace().collect::<Vec<_>>() != HEADER.split(' ').collect::<Vec<_>>() {
            return Err(MeshError::Parse { line, message: format!("expected header `{HEADER}`") });
        }

        let nv = lines.section("vertices")?;
        let mut vertices = Vec::with_capacity(nv);
        for _ in 0..nv {
            let (line, xy) = lines.fields::<f64>(2)?;
            if !xy.iter().all(|v| v.is_finite()) {
                return Err(MeshError::Parse { line, message: "non-finite coordinate".into() });
            }
            vertices.push([T::lit(xy[0]), T::lit(xy[1])]);
        }

        let nt = lines.section("triangles")?;
        let mut triangles = Vec::with_capacity(nt);
        for _ in 0..nt {
            let (line, f) = lines.fields::<usize>(4)?;
            let subdomain = u32::try_from(f[3])
                .ok()
                .filter(|&s| s >= 1)
                .ok_or(MeshError::Parse { line, message: "subdomain ids start at 1".into() })?;
            triangles.push(Triangle { vertices: [f[0], f[1], f[2]], subdomain });
        }

        let ni = lines.section("interface_edges")?;
        let mut tags = Vec::with_capacity(ni);
        for _ in 0..ni {
            let (line, f) = lines.fields::<usize>(4)?;
            if f[3] >= nt {
                return Err(MeshError::Parse { line, message: format!("triangle {} out of range", f[3]) });
            }
            let piece = u32::try_from(f[2])
                .ok()
                .filter(|&p| p >= 1)
                .ok_or(MeshError::Parse { line, message: "interface piece ids start at 1".into() })?;
            tags.push(InterfaceTag { vertices: [f[0], f[1]], piece, plus: Some(f[3]) });
        }
        if let Ok((line, _)) = lines.next_line() {
            return Err(MeshError::Parse { line, message: "trailing content".into() });
        }
        Mesh::from_parts(vertices, triangles, &tags)
    }

    /// Reads and validates a mesh file.
    pub fn import(path: impl AsRef<Path>) -> Result<Self, MeshError> {
        Mesh::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{HEADER}");
        let _ = writeln!(out, "vertices {}", self.num_vertices());
        for p in self.vertices() {
            let _ = writeln!(out, "{:e} {:e}", p[0].as_f64(), p[1].as_f64());
        }
        let _ = writeln!(out, "triangles {}", self.num_triangles());
        for t in self.triangles() {
            let [a, b, c] = t.vertices;
            let _ = writeln!(out, "{a} {b} {c} {}", t.subdomain);
        }
        let tags = self.interface_tags();
        let _ = writeln!(out, "interface_edges {}", tags.len());
        for tag in tags {
            let _ = writeln!(
                out,
                "{} {} {} {}",
                tag.vertices[0],
                tag.vertices[1],
                tag.piece,
                tag.plus.expect("stored interface edges know their plus side")
            );
        }
        out
    }

    pub fn export(&self, path: impl AsRef<Path>) -> Result<(), MeshError> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::SquareInterface;

    #[test]
    fn round_trips_structured_mesh() {
        let mesh = Mesh::<f64>::structured(2, None).unwrap();
        let back = Mesh::<f64>::parse(&mesh.to_text()).unwrap();
        assert_eq!(back.vertices(), mesh.vertices());
        assert_eq!(back.triangles(), mesh.triangles());
        assert_eq!(back.edges(), mesh.edges());
    }

    #[test]
    fn round_trips_interface_tags() {
        let mesh = Mesh::<f64>::structured(4, Some(SquareInterface::centered(0.25, 0.75))).unwrap();
        let back = Mesh::<f64>::parse(&mesh.to_text()).unwrap();
        assert_eq!(back.edges(), mesh.edges());
    }

    #[test]
    fn rejects_edge_in_three_triangles() {
        let text = "pdwg-mesh 1\nvertices 5\n0 0\n1 0\n0.5 1\n0.5 -1\n0.5 2\n\
                    triangles 3\n0 1 2 1\n0 3 1 1\n0 1 4 1\ninterface_edges 0\n";
        assert!(matches!(Mesh::<f64>::parse(text), Err(MeshError::NonConforming(..))));
    }

    #[test]
    fn rejects_interface_edge_inside_one_subdomain() {
        let text = "pdwg-mesh 1\nvertices 4\n0 0\n1 0\n1 1\n0 1\n\
                    triangles 2\n0 1 2 2\n0 2 3 2\ninterface_edges 1\n0 2 1 0\n";
        assert!(matches!(Mesh::<f64>::parse(text), Err(MeshError::Tagging(_))));
    }

    #[test]
    fn reports_parse_errors_with_line_numbers() {
        let text = "pdwg-mesh 1\nvertices 1\n0 zero\n";
        match Mesh::<f64>::parse(text) {
            Err(MeshError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(Mesh::<f64>::parse("mesh 2\n"), Err(MeshError::Parse { line: 1, .. })));
    }
}
