//! Unstructured conforming triangle meshes with per-vertex boundary markers.

mod generate;
mod io;
mod locate;
mod quality;

pub use generate::{gen_graded_square, gen_holes_domain, gen_uniform_square, refine_uniform};
pub use io::{load_mesh, parse_mesh, read_mesh, save_mesh, write_mesh};
pub use locate::TriangleLocator;
pub use quality::{h_min_brute_force, quality_report, MeshQuality};

use std::collections::HashMap;

use rstar::{primitives::GeomWithData, RTree};
use serde::{Deserialize, Serialize};

use crate::error::MeshError;
use crate::geometry::{point_on_open_segment, segment_aabb, signed_area, Point2};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Marker {
    Interior,
    Dirichlet,
    Neumann,
}

impl Marker {
    pub fn code(self) -> u8 {
        match self {
            Marker::Interior => 0,
            Marker::Dirichlet => 1,
            Marker::Neumann => 2,
        }
    }

    pub fn from_code(c: u8) -> Option<Marker> {
        match c {
            0 => Some(Marker::Interior),
            1 => Some(Marker::Dirichlet),
            2 => Some(Marker::Neumann),
            _ => None,
        }
    }
}

/// Boundary condition family used by the generators and by the auxiliary
/// hierarchy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BoundaryKind {
    Dirichlet,
    Neumann,
    /// Dirichlet on `x = min x`, Neumann elsewhere (generators); both kinds
    /// present (hierarchy).
    Mixed,
}

impl std::str::FromStr for BoundaryKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "dirichlet" | "d" => Ok(BoundaryKind::Dirichlet),
            "neumann" | "n" => Ok(BoundaryKind::Neumann),
            "mixed" | "m" => Ok(BoundaryKind::Mixed),
            other => Err(format!("unknown boundary kind '{other}'")),
        }
    }
}

impl std::fmt::Display for BoundaryKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            BoundaryKind::Dirichlet => "dirichlet",
            BoundaryKind::Neumann => "neumann",
            BoundaryKind::Mixed => "mixed",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryEdge {
    /// Endpoints in the orientation of the adjacent triangle (domain on the left).
    pub v: [usize; 2],
    pub marker: Marker,
}

/// A conforming, counterclockwise triangulation.
#[derive(Debug, Clone)]
pub struct TriMesh {
    vertices: Vec<Point2>,
    triangles: Vec<[usize; 3]>,
    markers: Vec<Marker>,
    boundary_edges: Vec<BoundaryEdge>,
    explicit_edges: Vec<BoundaryEdge>,
}

/// One directed triangle edge, keyed by its sorted endpoints.
#[derive(Debug, Clone, Copy)]
pub(crate) struct EdgeRec {
    pub lo: usize,
    pub hi: usize,
    pub tri: usize,
    /// true when the triangle traverses the edge from `lo` to `hi`
    pub forward: bool,
}

/// All triangle edges sorted by endpoint key; shared edges are adjacent.
pub(crate) fn edge_table(triangles: &[[usize; 3]]) -> Vec<EdgeRec> {
    let mut recs = Vec::with_capacity(3 * triangles.len());
    for (t, tri) in triangles.iter().enumerate() {
        for k in 0..3 {
            let a = tri[k];
            let b = tri[(k + 1) % 3];
            recs.push(EdgeRec {
                lo: a.min(b),
                hi: a.max(b),
                tri: t,
                forward: a < b,
            });
        }
    }
    recs.sort_unstable_by_key(|r| (r.lo, r.hi, r.tri));
    recs
}

/// Group sizes of the sorted edge table, as `(start, len)` pairs.
pub(crate) fn edge_groups(recs: &[EdgeRec]) -> impl Iterator<Item = (usize, usize)> + '_ {
    let mut i = 0;
    std::iter::from_fn(move || {
        if i >= recs.len() {
            return None;
        }
        let start = i;
        while i < recs.len() && recs[i].lo == recs[start].lo && recs[i].hi == recs[start].hi {
            i += 1;
        }
        Some((start, i - start))
    })
}

/// Flags vertices lying on an edge with exactly one adjacent triangle.
pub(crate) fn boundary_vertex_flags(nv: usize, triangles: &[[usize; 3]]) -> Vec<bool> {
    let recs = edge_table(triangles);
    let mut flags = vec![false; nv];
    for (s, len) in edge_groups(&recs) {
        if len == 1 {
            flags[recs[s].lo] = true;
            flags[recs[s].hi] = true;
        }
    }
    flags
}

impl TriMesh {
    /// Validate and build a mesh; boundary edge markers are derived from the
    /// vertex markers (Dirichlet iff both endpoints are Dirichlet).
    pub fn new(
        vertices: Vec<Point2>,
        triangles: Vec<[usize; 3]>,
        markers: Vec<Marker>,
    ) -> Result<TriMesh, MeshError> {
        Self::with_edge_markers(vertices, triangles, markers, Vec::new())
    }

    /// Like [`TriMesh::new`], with explicit markers overriding the derived
    /// marker of selected boundary edges.
    pub fn with_edge_markers(
        vertices: Vec<Point2>,
        triangles: Vec<[usize; 3]>,
        markers: Vec<Marker>,
        explicit_edges: Vec<BoundaryEdge>,
    ) -> Result<TriMesh, MeshError> {
        let nv = vertices.len();
        if markers.len() != nv {
            return Err(MeshError::InvalidParams(format!(
                "{} markers for {} vertices",
                markers.len(),
                nv
            )));
        }
        if let Some(i) = vertices.iter().position(|p| !p.is_finite()) {
            return Err(MeshError::NonFinite(i));
        }
        for (t, tri) in triangles.iter().enumerate() {
            if let Some(&index) = tri.iter().find(|&&v| v >= nv) {
                return Err(MeshError::IndexOutOfRange {
                    triangle: t,
                    index,
                    nv,
                });
            }
            let pts = [vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]];
            let area = signed_area(&pts);
            if area <= 0.0 || tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(MeshError::InvertedTriangle { index: t, area });
            }
        }

        let recs = edge_table(&triangles);
        let mut explicit: HashMap<(usize, usize), Marker> = HashMap::new();
        for e in &explicit_edges {
            explicit.insert((e.v[0].min(e.v[1]), e.v[0].max(e.v[1])), e.marker);
        }
        let mut boundary_edges = Vec::new();
        let mut used_explicit = 0usize;
        for (s, len) in edge_groups(&recs) {
            let r = recs[s];
            match len {
                1 => {
                    let v = if r.forward { [r.lo, r.hi] } else { [r.hi, r.lo] };
                    let marker = if let Some(&m) = explicit.get(&(r.lo, r.hi)) {
                        used_explicit += 1;
                        m
                    } else {
                        match (markers[r.lo], markers[r.hi]) {
                            (Marker::Interior, _) | (_, Marker::Interior) => {
                                return Err(MeshError::UnmarkedBoundary { v0: v[0], v1: v[1] })
                            }
                            (Marker::Dirichlet, Marker::Dirichlet) => Marker::Dirichlet,
                            _ => Marker::Neumann,
                        }
                    };
                    boundary_edges.push((r.tri, BoundaryEdge { v, marker }));
                }
                2 => {
                    if recs[s].forward == recs[s + 1].forward {
                        return Err(MeshError::NonConforming {
                            v0: r.lo,
                            v1: r.hi,
                            reason: "shared edge traversed in the same direction".into(),
                        });
                    }
                }
                n => {
                    return Err(MeshError::NonConforming {
                        v0: r.lo,
                        v1: r.hi,
                        reason: format!("edge shared by {n} triangles"),
                    })
                }
            }
        }
        if used_explicit != explicit.len() {
            let e = explicit_edges
                .iter()
                .find(|e| {
                    let key = (e.v[0].min(e.v[1]), e.v[0].max(e.v[1]));
                    !boundary_edges
                        .iter()
                        .any(|(_, b)| (b.v[0].min(b.v[1]), b.v[0].max(b.v[1])) == key)
                })
                .expect("unused explicit edge");
            return Err(MeshError::NotABoundaryEdge {
                v0: e.v[0],
                v1: e.v[1],
            });
        }
        boundary_edges.sort_by_key(|(t, e)| (*t, e.v));
        Ok(TriMesh {
            vertices,
            triangles,
            markers,
            boundary_edges: boundary_edges.into_iter().map(|(_, e)| e).collect(),
            explicit_edges,
        })
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn markers(&self) -> &[Marker] {
        &self.markers
    }

    pub fn boundary_edges(&self) -> &[BoundaryEdge] {
        &self.boundary_edges
    }

    pub(crate) fn explicit_edges(&self) -> &[BoundaryEdge] {
        &self.explicit_edges
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn triangle_points(&self, t: usize) -> [Point2; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        signed_area(&self.triangle_points(t))
    }

    pub fn total_area(&self) -> f64 {
        (0..self.n_triangles()).map(|t| self.triangle_area(t)).sum()
    }

    /// Number of undirected edges.
    pub fn n_edges(&self) -> usize {
        let recs = edge_table(&self.triangles);
        edge_groups(&recs).count()
    }

    /// Boundary condition family implied by the boundary edge markers.
    pub fn boundary_kind(&self) -> BoundaryKind {
        let d = self
            .boundary_edges
            .iter()
            .any(|e| e.marker == Marker::Dirichlet);
        let n = self
            .boundary_edges
            .iter()
            .any(|e| e.marker == Marker::Neumann);
        match (d, n) {
            (true, true) => BoundaryKind::Mixed,
            (false, true) => BoundaryKind::Neumann,
            _ => BoundaryKind::Dirichlet,
        }
    }

    /// Replace all boundary vertex markers by one kind (`Mixed` keeps the
    /// current markers).
    pub fn with_boundary_kind(&self, kind: BoundaryKind) -> TriMesh {
        let marker = match kind {
            BoundaryKind::Dirichlet => Marker::Dirichlet,
            BoundaryKind::Neumann => Marker::Neumann,
            BoundaryKind::Mixed => return self.clone(),
        };
        let markers = self
            .markers
            .iter()
            .map(|&m| if m == Marker::Interior { m } else { marker })
            .collect();
        TriMesh::new(self.vertices.clone(), self.triangles.clone(), markers)
            .expect("relabelling keeps a valid mesh")
    }

    /// Triangles incident to each vertex, in increasing triangle order.
    pub fn vertex_stars(&self) -> Vec<Vec<usize>> {
        let mut stars = vec![Vec::new(); self.n_vertices()];
        for (t, tri) in self.triangles.iter().enumerate() {
            for &v in tri {
                stars[v].push(t);
            }
        }
        stars
    }

    /// Translate every vertex by `d`.
    pub fn translated(&self, d: Point2) -> TriMesh {
        let mut m = self.clone();
        for p in &mut m.vertices {
            *p = *p + d;
        }
        m
    }
}

/// Full conformity audit: edge multiplicity and orientation (checked at
/// construction) plus a search for hanging nodes, i.e. vertices lying in the
/// interior of a boundary edge.
pub fn conformity_check(mesh: &TriMesh) -> Result<(), MeshError> {
    // Rebuilding revalidates orientation and edge multiplicity.
    TriMesh::with_edge_markers(
        mesh.vertices.clone(),
        mesh.triangles.clone(),
        mesh.markers.clone(),
        mesh.explicit_edges.clone(),
    )?;
    if mesh.boundary_edges.is_empty() {
        return Ok(());
    }
    let items: Vec<GeomWithData<[f64; 2], usize>> = mesh
        .vertices
        .iter()
        .enumerate()
        .map(|(i, p)| GeomWithData::new([p.x, p.y], i))
        .collect();
    let tree = RTree::bulk_load(items);
    for e in &mesh.boundary_edges {
        let a = mesh.vertices[e.v[0]];
        let b = mesh.vertices[e.v[1]];
        let bb = segment_aabb(a, b);
        for item in tree.locate_in_envelope(&bb) {
            let i = item.data;
            if i == e.v[0] || i == e.v[1] {
                continue;
            }
            if point_on_open_segment(mesh.vertices[i], a, b, 1e-12) {
                return Err(MeshError::NonConforming {
                    v0: e.v[0],
                    v1: e.v[1],
                    reason: format!("hanging node {i} on the edge"),
                });
            }
        }
    }
    Ok(())
}

/// Barycenters of all triangles.
pub fn barycenters(mesh: &TriMesh) -> Vec<Point2> {
    (0..mesh.n_triangles())
        .map(|t| crate::geometry::centroid(&mesh.triangle_points(t)))
        .collect()
}

/// Connected components of the triangle adjacency graph (shared edges).
pub fn triangle_components(mesh: &TriMesh) -> usize {
    let n = mesh.n_triangles();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let recs = edge_table(&mesh.triangles);
    for (s, len) in edge_groups(&recs) {
        if len == 2 {
            let a = find(&mut parent, recs[s].tri);
            let b = find(&mut parent, recs[s + 1].tri);
            if a != b {
                parent[a] = b;
            }
        }
    }
    (0..n).filter(|&i| find(&mut parent, i) == i).count()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square_two() -> TriMesh {
        let v = vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(0.0, 1.0),
        ];
        TriMesh::new(v, vec![[0, 1, 2], [0, 2, 3]], vec![Marker::Dirichlet; 4]).unwrap()
    }

    #[test]
    fn single_reference_triangle() {
        let v = vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(0.0, 1.0),
        ];
        let m = TriMesh::new(v, vec![[0, 1, 2]], vec![Marker::Dirichlet; 3]).unwrap();
        assert_eq!(m.n_triangles(), 1);
        assert_eq!(m.boundary_edges().len(), 3);
    }

    #[test]
    fn two_triangle_square() {
        let m = unit_square_two();
        assert_eq!(m.boundary_edges().len(), 4);
        assert_eq!(m.n_edges(), 5);
        let recs = edge_table(m.triangles());
        let shared: Vec<_> = edge_groups(&recs).filter(|&(_, l)| l == 2).collect();
        assert_eq!(shared.len(), 1);
        assert_eq!((recs[shared[0].0].lo, recs[shared[0].0].hi), (0, 2));
    }

    #[test]
    fn inverted_duplicate_is_rejected() {
        let v = vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(0.0, 1.0),
        ];
        let err = TriMesh::new(v, vec![[0, 1, 2], [0, 2, 1]], vec![Marker::Dirichlet; 3]);
        assert!(matches!(err, Err(MeshError::InvertedTriangle { index: 1, .. })));
    }

    #[test]
    fn hanging_node_detected() {
        // big triangle next to two small ones sharing a midpoint
        let v = vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(0.5, 0.5),
            Point2::new(0.0, 1.0),
        ];
        let tris = vec![[0, 1, 2], [0, 3, 4], [3, 2, 4]];
        let m = TriMesh::new(v, tris, vec![Marker::Neumann; 5]).unwrap();
        assert!(matches!(
            conformity_check(&m),
            Err(MeshError::NonConforming { .. })
        ));
    }

    #[test]
    fn interior_marked_boundary_vertex_is_an_error() {
        let v = vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(0.0, 1.0),
        ];
        let markers = vec![Marker::Dirichlet, Marker::Interior, Marker::Dirichlet];
        assert!(matches!(
            TriMesh::new(v, vec![[0, 1, 2]], markers),
            Err(MeshError::UnmarkedBoundary { .. })
        ));
    }

    #[test]
    fn barycenter_of_reference_triangle() {
        let v = vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(0.0, 1.0),
        ];
        let m = TriMesh::new(v, vec![[0, 1, 2]], vec![Marker::Dirichlet; 3]).unwrap();
        let b = barycenters(&m)[0];
        assert!((b.x - 1.0 / 3.0).abs() < 1e-16 && (b.y - 1.0 / 3.0).abs() < 1e-16);
    }

    #[test]
    fn equilateral_barycenter_at_origin() {
        let r = 1.0;
        let pts: Vec<Point2> = (0..3)
            .map(|k| {
                let a = std::f64::consts::FRAC_PI_2 + k as f64 * 2.0 * std::f64::consts::PI / 3.0;
                Point2::new(r * a.cos(), r * a.sin())
            })
            .collect();
        let m = TriMesh::new(pts, vec![[0, 1, 2]], vec![Marker::Neumann; 3]).unwrap();
        let b = barycenters(&m)[0];
        assert!(b.x.abs() < 1e-15 && b.y.abs() < 1e-15);
    }

    #[test]
    fn barycenters_translate_with_mesh() {
        let m = unit_square_two();
        let d = Point2::new(3.5, -1.25);
        let b0 = barycenters(&m);
        let b1 = barycenters(&m.translated(d));
        for (p, q) in b0.iter().zip(&b1) {
            assert!((q.x - p.x - d.x).abs() < 1e-14 && (q.y - p.y - d.y).abs() < 1e-14);
        }
    }
}
