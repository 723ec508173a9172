use super::{EdgeKind, InterfaceTag, Mesh, Triangle};
use crate::Scalar;

impl<T: Scalar> Mesh<T> {
    /// Red refinement: every triangle is split into four congruent children by
    /// joining its edge midpoints.
    ///
    /// Existing vertices keep their indices; the midpoint of edge `e` becomes
    /// vertex `num_vertices() + e`. The children of triangle `t` are
    /// `4t .. 4t + 4` (three corner triangles, then the middle one) and inherit
    /// its subdomain. Both halves of an interface edge keep its piece id and
    /// plus side.
    pub fn refine_uniform(&self) -> Mesh<T> {
        let nv = self.num_vertices();
        let half = T::lit(0.5);
        let mut vertices = self.vertices.clone();
        vertices.extend(self.edges.iter().map(|e| {
            let [a, b] = e.vertices.map(|v| self.vertices[v]);
            [(a[0] + b[0]) * half, (a[1] + b[1]) * half]
        }));

        let mut triangles = Vec::with_capacity(4 * self.num_triangles());
        for (t, tri) in self.triangles.iter().enumerate() {
            let [a, b, c] = tri.vertices;
            let [m0, m1, m2] = self.triangle_edges[t].map(|e| nv + e);
            let subdomain = tri.subdomain;
            for vertices in [[a, m0, m2], [m0, b, m1], [m2, m1, c], [m0, m1, m2]] {
                triangles.push(Triangle { vertices, subdomain });
            }
        }

        let mut tags = Vec::new();
        for (e, edge) in self.edges.iter().enumerate() {
            let EdgeKind::Interface(piece) = edge.kind else {
                continue;
            };
            let mid = nv + e;
            for half_edge in [[edge.vertices[0], mid], [mid, edge.vertices[1]]] {
                let plus = (4 * edge.plus..4 * edge.plus + 4)
                    .find(|&c| half_edge.iter().all(|v| triangles[c].vertices.contains(v)))
                    .expect("half edge belongs to a child of the plus triangle");
                tags.push(InterfaceTag { vertices: half_edge, piece, plus: Some(plus) });
            }
        }

        Mesh::from_parts(vertices, triangles, &tags)
            .expect("refinement of a valid mesh is valid")
    }

    /// Applies [`Mesh::refine_uniform`] `levels` times.
    pub fn refined(&self, levels: usize) -> Mesh<T> {
        let mut mesh = self.clone();
        for _ in 0..levels {
            mesh = mesh.refine_uniform();
        }
        mesh
    }
}
