use super::{InterfaceTag, Mesh, MeshError, Triangle};
use crate::Scalar;

/// Axis-aligned square interface `[x0, x1] × [y0, y1]` inside the unit square.
///
/// Triangles inside are subdomain 1, the rest subdomain 2. The four sides are
/// interface pieces 1 (`x = x0`), 2 (`x = x1`), 3 (`y = y0`) and 4 (`y = y1`);
/// the inner region is the plus side.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SquareInterface {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl SquareInterface {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        SquareInterface { x0, x1, y0, y1 }
    }

    /// `[lo, hi]²`.
    pub fn centered(lo: f64, hi: f64) -> Self {
        SquareInterface::new(lo, hi, lo, hi)
    }
}

fn grid_index(value: f64, n: usize, what: &str) -> Result<usize, MeshError> {
    let scaled = value * n as f64;
    let rounded = scaled.round();
    if (scaled - rounded).abs() > 1e-9 {
        return Err(MeshError::Alignment(format!(
            "{what} = {value} is not a multiple of 1/{n}"
        )));
    }
    Ok(rounded as usize)
}

impl<T: Scalar> Mesh<T> {
    /// Uniform `n × n` grid on the unit square, every cell split along its
    /// `(i, j)–(i+1, j+1)` diagonal.
    ///
    /// Vertex `(i, j)` has index `j (n + 1) + i` (row-major, i.e. sorted by
    /// `y` then `x`); cells are visited in the same order, lower triangle
    /// first.
    pub fn structured(n: usize, interface: Option<SquareInterface>) -> Result<Self, MeshError> {
        if n < 2 {
            return Err(MeshError::InvalidArgument(format!("need n >= 2, got {n}")));
        }
        let bounds = interface
            .map(|sq| -> Result<[usize; 4], MeshError> {
                let b = [
                    grid_index(sq.x0, n, "x0")?,
                    grid_index(sq.x1, n, "x1")?,
                    grid_index(sq.y0, n, "y0")?,
                    grid_index(sq.y1, n, "y1")?,
                ];
                if !(0 < b[0] && b[0] < b[1] && b[1] < n && 0 < b[2] && b[2] < b[3] && b[3] < n) {
                    return Err(MeshError::InvalidArgument(format!(
                        "interface square {sq:?} must lie strictly inside the unit square"
                    )));
                }
                Ok(b)
            })
            .transpose()?;

        let step = T::one() / T::from_usize_lossy(n);
        let vid = |i: usize, j: usize| j * (n + 1) + i;
        let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
        for j in 0..=n {
            for i in 0..=n {
                vertices.push([T::from_usize_lossy(i) * step, T::from_usize_lossy(j) * step]);
            }
        }

        let inside = |i: usize, j: usize| {
            bounds.is_some_and(|b| b[0] <= i && i < b[1] && b[2] <= j && j < b[3])
        };
        let mut triangles = Vec::with_capacity(2 * n * n);
        for j in 0..n {
            for i in 0..n {
                let subdomain = match (bounds.is_some(), inside(i, j)) {
                    (false, _) => 1,
                    (true, true) => 1,
                    (true, false) => 2,
                };
                let (v00, v10, v01, v11) = (vid(i, j), vid(i + 1, j), vid(i, j + 1), vid(i + 1, j + 1));
                triangles.push(Triangle { vertices: [v00, v10, v11], subdomain });
                triangles.push(Triangle { vertices: [v00, v11, v01], subdomain });
            }
        }

        let mut tags = Vec::new();
        if let Some([i0, i1, j0, j1]) = bounds {
            for j in j0..j1 {
                tags.push(InterfaceTag { vertices: [vid(i0, j), vid(i0, j + 1)], piece: 1, plus: None });
                tags.push(InterfaceTag { vertices: [vid(i1, j), vid(i1, j + 1)], piece: 2, plus: None });
            }
            for i in i0..i1 {
                tags.push(InterfaceTag { vertices: [vid(i, j0), vid(i + 1, j0)], piece: 3, plus: None });
                tags.push(InterfaceTag { vertices: [vid(i, j1), vid(i + 1, j1)], piece: 4, plus: None });
            }
        }
        Mesh::from_parts(vertices, triangles, &tags)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::EdgeKind;

    #[test]
    fn n2_without_interface_satisfies_euler() {
        let mesh = Mesh::<f64>::structured(2, None).unwrap();
        assert_eq!(mesh.num_triangles(), 8);
        assert_eq!(mesh.num_edges(), 16);
        assert_eq!(mesh.num_vertices(), 9);
        let euler = mesh.num_vertices() as i64 - mesh.num_edges() as i64 + mesh.num_triangles() as i64;
        assert_eq!(euler, 1);
    }

    #[test]
    fn n4_square_interface_counts() {
        let mesh = Mesh::<f64>::structured(4, Some(SquareInterface::centered(0.25, 0.75))).unwrap();
        assert_eq!(mesh.num_triangles(), 32);
        // enumeration: the four cells with i, j ∈ {1, 2} are inside
        let inner = mesh.triangles().iter().filter(|t| t.subdomain == 1).count();
        assert_eq!(inner, 8);
        let interface: Vec<_> = mesh
            .edges()
            .iter()
            .filter(|e| matches!(e.kind, EdgeKind::Interface(_)))
            .collect();
        assert_eq!(interface.len(), 8);
        for piece in 1..=4 {
            let count = interface.iter().filter(|e| e.kind == EdgeKind::Interface(piece)).count();
            assert_eq!(count, 2);
        }
        assert_eq!(mesh.interface_pieces(), vec![1, 2, 3, 4]);
        for e in interface {
            assert_eq!(mesh.subdomain(e.plus), 1);
        }
        assert!((mesh.subdomain_area(1) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn misaligned_interface_is_rejected() {
        let err = Mesh::<f64>::structured(4, Some(SquareInterface::centered(0.3, 0.7))).unwrap_err();
        assert!(matches!(err, MeshError::Alignment(_)));
    }

    #[test]
    fn n_below_two_is_rejected() {
        assert!(matches!(
            Mesh::<f64>::structured(1, None),
            Err(MeshError::InvalidArgument(_))
        ));
    }

    #[test]
    fn normals_of_boundary_edges_point_outward() {
        let mesh = Mesh::<f64>::structured(3, None).unwrap();
        for e in mesh.edges().iter().filter(|e| e.is_boundary()) {
            let c = mesh.centroid(e.plus);
            let p = mesh.vertices()[e.vertices[0]];
            let d = (p[0] - c[0]) * e.normal[0] + (p[1] - c[1]) * e.normal[1];
            assert!(d > 0.0);
        }
    }

    #[test]
    fn single_precision_mesh_builds() {
        let mesh = Mesh::<f32>::structured(4, Some(SquareInterface::centered(0.25, 0.75))).unwrap();
        assert_eq!(mesh.num_triangles(), 32);
    }
}
