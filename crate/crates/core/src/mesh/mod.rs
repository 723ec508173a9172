//! Interface-fitted conforming triangulations.
//!
//! A [`Mesh`] stores counterclockwise triangles tagged with a subdomain id and
//! the derived edge list. Every edge carries a fixed unit normal and the id of
//! its *plus* triangle, the incident triangle whose outward normal equals the
//! fixed normal:
//!
//! * boundary edges: the only incident triangle (normal points out of Ω);
//! * interface edges: the triangle on the plus side of the interface piece
//!   (by default the one in the lower-numbered subdomain), so that jumps read
//!   `[[v]] = v_plus - v_minus`;
//! * interior edges: the normal is the tangent from the lower to the higher
//!   vertex index rotated by +90°.

mod io;
mod refine;
mod structured;

use std::collections::BTreeMap;

use thiserror::Error;

use crate::Scalar;

pub use structured::SquareInterface;

/// A point of the plane.
pub type Point<T> = [T; 2];

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("mesh file line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("non-conforming mesh: edge ({0}, {1}) is shared by {2} triangles")]
    NonConforming(usize, usize, usize),
    #[error("triangle {0} is degenerate (zero area)")]
    Degenerate(usize),
    #[error("triangle {0} references vertex {1}, but the mesh has {2} vertices")]
    VertexOutOfRange(usize, usize, usize),
    #[error("inconsistent interface tagging: {0}")]
    Tagging(String),
    #[error("interface is not aligned with the grid: {0}")]
    Alignment(String),
    #[error("invalid mesh parameter: {0}")]
    InvalidArgument(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
}

/// Classification of an edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EdgeKind {
    Interior,
    Boundary,
    /// Edge lying on interface piece `Γ_m`.
    Interface(u32),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Triangle {
    /// Counterclockwise vertex indices.
    pub vertices: [usize; 3],
    /// Subdomain id, starting at 1.
    pub subdomain: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Edge<T> {
    /// Endpoints with `vertices[0] < vertices[1]`. Edge-local coordinates run
    /// from `vertices[0]` to `vertices[1]`.
    pub vertices: [usize; 2],
    /// Triangle whose outward normal equals [`Edge::normal`].
    pub plus: usize,
    /// The other incident triangle; `None` on the boundary.
    pub minus: Option<usize>,
    pub kind: EdgeKind,
    /// Fixed unit normal.
    pub normal: Point<T>,
    pub length: T,
}

impl<T> Edge<T> {
    pub fn is_boundary(&self) -> bool {
        self.kind == EdgeKind::Boundary
    }

    /// `+1` if `tri` is the plus triangle, `-1` otherwise.
    pub fn orientation(&self, tri: usize) -> i8 {
        if tri == self.plus {
            1
        } else {
            -1
        }
    }
}

/// An interface edge as supplied to [`Mesh::from_parts`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct InterfaceTag {
    pub vertices: [usize; 2],
    pub piece: u32,
    /// Plus-side triangle; `None` selects the incident triangle with the
    /// lower subdomain id.
    pub plus: Option<usize>,
}

/// Conforming triangular mesh with subdomain and interface tags. Immutable
/// once built.
#[derive(Clone, Debug)]
pub struct Mesh<T> {
    vertices: Vec<Point<T>>,
    triangles: Vec<Triangle>,
    edges: Vec<Edge<T>>,
    /// Local edge `j` of triangle `t` joins `vertices[j]` and `vertices[(j + 1) % 3]`.
    triangle_edges: Vec<[usize; 3]>,
    diameters: Vec<T>,
    areas: Vec<T>,
}

fn sorted_pair(a: usize, b: usize) -> [usize; 2] {
    if a < b {
        [a, b]
    } else {
        [b, a]
    }
}

pub(crate) fn signed_area<T: Scalar>(p: &[Point<T>; 3]) -> T {
    let two = T::lit(2.0);
    ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1])) / two
}

fn distance<T: Scalar>(a: Point<T>, b: Point<T>) -> T {
    (b[0] - a[0]).hypot(b[1] - a[1])
}

impl<T: Scalar> Mesh<T> {
    /// Builds a mesh from raw connectivity, deriving edges, normals and
    /// classification, then validates every invariant.
    ///
    /// Clockwise triangles are reoriented. Every edge whose incident triangles
    /// lie in different subdomains must appear in `interface`, and nothing
    /// else may.
    pub fn from_parts(
        vertices: Vec<Point<T>>,
        mut triangles: Vec<Triangle>,
        interface: &[InterfaceTag],
    ) -> Result<Self, MeshError> {
        let nv = vertices.len();
        let mut areas = Vec::with_capacity(triangles.len());
        let mut diameters = Vec::with_capacity(triangles.len());
        for (t, tri) in triangles.iter_mut().enumerate() {
            for &v in &tri.vertices {
                if v >= nv {
                    return Err(MeshError::VertexOutOfRange(t, v, nv));
                }
            }
            let [a, b, c] = tri.vertices;
            if a == b || b == c || a == c {
                return Err(MeshError::Degenerate(t));
            }
            let mut area = signed_area(&[vertices[a], vertices[b], vertices[c]]);
            if area < T::zero() {
                tri.vertices.swap(1, 2);
                area = -area;
            }
            let p = tri.vertices.map(|v| vertices[v]);
            let diam = distance(p[0], p[1])
                .max(distance(p[1], p[2]))
                .max(distance(p[2], p[0]));
            if !(area > T::epsilon() * diam * diam) {
                return Err(MeshError::Degenerate(t));
            }
            areas.push(area);
            diameters.push(diam);
        }

        // (lo, hi) -> incident (triangle, local edge)
        let mut incidence: BTreeMap<[usize; 2], Vec<(usize, usize)>> = BTreeMap::new();
        for (t, tri) in triangles.iter().enumerate() {
            for j in 0..3 {
                let key = sorted_pair(tri.vertices[j], tri.vertices[(j + 1) % 3]);
                incidence.entry(key).or_default().push((t, j));
            }
        }

        let mut tags: BTreeMap<[usize; 2], InterfaceTag> = BTreeMap::new();
        for tag in interface {
            let key = sorted_pair(tag.vertices[0], tag.vertices[1]);
            if tags.insert(key, *tag).is_some() {
                return Err(MeshError::Tagging(format!(
                    "interface edge ({}, {}) listed twice",
                    key[0], key[1]
                )));
            }
            if !incidence.contains_key(&key) {
                return Err(MeshError::Tagging(format!(
                    "interface edge ({}, {}) is not an edge of the mesh",
                    key[0], key[1]
                )));
            }
        }

        let mut edges = Vec::with_capacity(incidence.len());
        let mut triangle_edges = vec![[usize::MAX; 3]; triangles.len()];
        for (key, inc) in &incidence {
            let index = edges.len();
            let (pa, pb) = (vertices[key[0]], vertices[key[1]]);
            let length = distance(pa, pb);
            let outward = |t: usize, j: usize| -> Point<T> {
                let tri = &triangles[t];
                let a = vertices[tri.vertices[j]];
                let b = vertices[tri.vertices[(j + 1) % 3]];
                [(b[1] - a[1]) / length, -(b[0] - a[0]) / length]
            };
            for &(t, j) in inc {
                triangle_edges[t][j] = index;
            }
            let edge = match inc.as_slice() {
                &[(t, j)] => {
                    if tags.contains_key(key) {
                        return Err(MeshError::Tagging(format!(
                            "boundary edge ({}, {}) is tagged as interface",
                            key[0], key[1]
                        )));
                    }
                    Edge {
                        vertices: *key,
                        plus: t,
                        minus: None,
                        kind: EdgeKind::Boundary,
                        normal: outward(t, j),
                        length,
                    }
                }
                &[(t0, j0), (t1, j1)] => {
                    let (s0, s1) = (triangles[t0].subdomain, triangles[t1].subdomain);
                    match (tags.get(key), s0 == s1) {
                        (None, true) => {
                            let n = [-(pb[1] - pa[1]) / length, (pb[0] - pa[0]) / length];
                            let n0 = outward(t0, j0);
                            let (plus, minus) = if n0[0] * n[0] + n0[1] * n[1] > T::zero() {
                                (t0, t1)
                            } else {
                                (t1, t0)
                            };
                            let normal = if plus == t0 { n0 } else { outward(t1, j1) };
                            Edge {
                                vertices: *key,
                                plus,
                                minus: Some(minus),
                                kind: EdgeKind::Interior,
                                normal,
                                length,
                            }
                        }
                        (Some(tag), false) => {
                            let plus = match tag.plus {
                                Some(p) if p == t0 || p == t1 => p,
                                Some(p) => {
                                    return Err(MeshError::Tagging(format!(
                                        "plus triangle {p} of interface edge ({}, {}) is not incident to it",
                                        key[0], key[1]
                                    )))
                                }
                                None if s0 <= s1 => t0,
                                None => t1,
                            };
                            let (minus, jp) = if plus == t0 { (t1, j0) } else { (t0, j1) };
                            Edge {
                                vertices: *key,
                                plus,
                                minus: Some(minus),
                                kind: EdgeKind::Interface(tag.piece),
                                normal: outward(plus, jp),
                                length,
                            }
                        }
                        (Some(_), true) => {
                            return Err(MeshError::Tagging(format!(
                                "interface edge ({}, {}) separates two triangles of subdomain {s0}",
                                key[0], key[1]
                            )))
                        }
                        (None, false) => {
                            return Err(MeshError::Tagging(format!(
                                "edge ({}, {}) separates subdomains {s0} and {s1} but is not tagged as interface",
                                key[0], key[1]
                            )))
                        }
                    }
                }
                other => return Err(MeshError::NonConforming(key[0], key[1], other.len())),
            };
            edges.push(edge);
        }

        let mesh = Mesh {
            vertices,
            triangles,
            edges,
            triangle_edges,
            diameters,
            areas,
        };
        mesh.validate()?;
        Ok(mesh)
    }

    /// Re-checks every structural invariant.
    pub fn validate(&self) -> Result<(), MeshError> {
        let mut uses = vec![0usize; self.edges.len()];
        for (t, tri) in self.triangles.iter().enumerate() {
            let p = self.triangle_points(t);
            if !(signed_area(&p) > T::zero()) {
                return Err(MeshError::Invariant(format!("triangle {t} is not counterclockwise")));
            }
            for j in 0..3 {
                let e = self.triangle_edges[t][j];
                let expect = sorted_pair(tri.vertices[j], tri.vertices[(j + 1) % 3]);
                if self.edges[e].vertices != expect {
                    return Err(MeshError::Invariant(format!("edge table of triangle {t} is stale")));
                }
                uses[e] += 1;
            }
        }
        for (e, edge) in self.edges.iter().enumerate() {
            let expected = if edge.minus.is_some() { 2 } else { 1 };
            if uses[e] != expected {
                return Err(MeshError::NonConforming(edge.vertices[0], edge.vertices[1], uses[e]));
            }
            let norm = edge.normal[0].hypot(edge.normal[1]);
            if (norm - T::one()).abs() > T::lit(1e3) * T::epsilon() {
                return Err(MeshError::Invariant(format!("normal of edge {e} is not unit")));
            }
            let j = self.local_edge_index(edge.plus, e);
            let out = self.outward_normal(edge.plus, j);
            if (out[0] - edge.normal[0]).abs() + (out[1] - edge.normal[1]).abs()
                > T::lit(1e3) * T::epsilon()
            {
                return Err(MeshError::Invariant(format!(
                    "normal of edge {e} is not the outward normal of its plus triangle"
                )));
            }
            match (edge.kind, edge.minus) {
                (EdgeKind::Boundary, None) => {}
                (EdgeKind::Interior, Some(m)) => {
                    if self.triangles[m].subdomain != self.triangles[edge.plus].subdomain {
                        return Err(MeshError::Tagging(format!("untagged interface edge {e}")));
                    }
                }
                (EdgeKind::Interface(_), Some(m)) => {
                    if self.triangles[m].subdomain == self.triangles[edge.plus].subdomain {
                        return Err(MeshError::Tagging(format!(
                            "interface edge {e} lies inside subdomain {}",
                            self.triangles[m].subdomain
                        )));
                    }
                    let cp = self.centroid(edge.plus);
                    let cm = self.centroid(m);
                    let d = (cm[0] - cp[0]) * edge.normal[0] + (cm[1] - cp[1]) * edge.normal[1];
                    if !(d > T::zero()) {
                        return Err(MeshError::Invariant(format!(
                            "normal of interface edge {e} does not point into the minus triangle"
                        )));
                    }
                }
                _ => {
                    return Err(MeshError::Invariant(format!(
                        "edge {e} classification disagrees with adjacency"
                    )))
                }
            }
        }
        Ok(())
    }

    pub fn vertices(&self) -> &[Point<T>] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[Triangle] {
        &self.triangles
    }

    pub fn edges(&self) -> &[Edge<T>] {
        &self.edges
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    /// Global edge indices of the three local edges of `t`.
    pub fn triangle_edges(&self, t: usize) -> [usize; 3] {
        self.triangle_edges[t]
    }

    pub fn triangle_points(&self, t: usize) -> [Point<T>; 3] {
        self.triangles[t].vertices.map(|v| self.vertices[v])
    }

    pub fn subdomain(&self, t: usize) -> u32 {
        self.triangles[t].subdomain
    }

    /// Longest edge of `t`.
    pub fn diameter(&self, t: usize) -> T {
        self.diameters[t]
    }

    pub fn area(&self, t: usize) -> T {
        self.areas[t]
    }

    pub fn centroid(&self, t: usize) -> Point<T> {
        let p = self.triangle_points(t);
        let three = T::lit(3.0);
        [
            (p[0][0] + p[1][0] + p[2][0]) / three,
            (p[0][1] + p[1][1] + p[2][1]) / three,
        ]
    }

    /// Mesh size `h = max_T h_T`.
    pub fn mesh_size(&self) -> T {
        self.diameters.iter().fold(T::zero(), |m, &d| m.max(d))
    }

    /// Unit outward normal of local edge `j` of triangle `t`.
    pub fn outward_normal(&self, t: usize, j: usize) -> Point<T> {
        let tri = &self.triangles[t];
        let a = self.vertices[tri.vertices[j]];
        let b = self.vertices[tri.vertices[(j + 1) % 3]];
        let len = distance(a, b);
        [(b[1] - a[1]) / len, -(b[0] - a[0]) / len]
    }

    fn local_edge_index(&self, t: usize, e: usize) -> usize {
        self.triangle_edges[t]
            .iter()
            .position(|&x| x == e)
            .expect("edge incident to triangle")
    }

    /// Endpoints of edge `e`, in edge-local order.
    pub fn edge_points(&self, e: usize) -> [Point<T>; 2] {
        self.edges[e].vertices.map(|v| self.vertices[v])
    }

    /// Sorted, de-duplicated subdomain ids.
    pub fn subdomain_ids(&self) -> Vec<u32> {
        let mut ids: Vec<u32> = self.triangles.iter().map(|t| t.subdomain).collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    /// Sorted, de-duplicated interface piece ids.
    pub fn interface_pieces(&self) -> Vec<u32> {
        let mut ids: Vec<u32> = self
            .edges
            .iter()
            .filter_map(|e| match e.kind {
                EdgeKind::Interface(m) => Some(m),
                _ => None,
            })
            .collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    /// Interface edges in the form accepted by [`Mesh::from_parts`].
    pub fn interface_tags(&self) -> Vec<InterfaceTag> {
        self.edges
            .iter()
            .filter_map(|e| match e.kind {
                EdgeKind::Interface(piece) => Some(InterfaceTag {
                    vertices: e.vertices,
                    piece,
                    plus: Some(e.plus),
                }),
                _ => None,
            })
            .collect()
    }

    /// Total area of the triangles in `subdomain`.
    pub fn subdomain_area(&self, subdomain: u32) -> T {
        (0..self.num_triangles())
            .filter(|&t| self.subdomain(t) == subdomain)
            .map(|t| self.area(t))
            .sum()
    }

    /// Same mesh with vertices renumbered so that old vertex `v` becomes
    /// `perm[v]`, and triangles listed in the order given by `tri_order`.
    pub fn renumbered(&self, perm: &[usize], tri_order: &[usize]) -> Result<Self, MeshError> {
        if perm.len() != self.num_vertices() || tri_order.len() != self.num_triangles() {
            return Err(MeshError::InvalidArgument("permutation length mismatch".into()));
        }
        let mut vertices = vec![[T::zero(); 2]; perm.len()];
        for (old, &new) in perm.iter().enumerate() {
            vertices[new] = self.vertices[old];
        }
        let mut new_index = vec![0usize; tri_order.len()];
        let triangles: Vec<Triangle> = tri_order
            .iter()
            .enumerate()
            .map(|(new, &old)| {
                new_index[old] = new;
                let tri = self.triangles[old];
                Triangle {
                    vertices: tri.vertices.map(|v| perm[v]),
                    subdomain: tri.subdomain,
                }
            })
            .collect();
        let tags: Vec<InterfaceTag> = self
            .interface_tags()
            .into_iter()
            .map(|tag| InterfaceTag {
                vertices: tag.vertices.map(|v| perm[v]),
                piece: tag.piece,
                plus: tag.plus.map(|t| new_index[t]),
            })
            .collect();
        Mesh::from_parts(vertices, triangles, &tags)
    }
}
