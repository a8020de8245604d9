use rstar::{primitives::GeomWithData, primitives::Rectangle, RTree, AABB};

use super::TriMesh;
use crate::geometry::{point_in_triangle, triangle_aabb, Point2};

type Entry = GeomWithData<Rectangle<[f64; 2]>, usize>;

/// R-tree over triangle bounding boxes for point location and overlap queries.
#[derive(Debug, Clone)]
pub struct TriangleLocator {
    tree: RTree<Entry>,
}

impl TriangleLocator {
    pub fn new(mesh: &TriMesh) -> TriangleLocator {
        Self::from_triangles(mesh.vertices(), mesh.triangles())
    }

    pub fn from_triangles(vertices: &[Point2], triangles: &[[usize; 3]]) -> TriangleLocator {
        let items: Vec<Entry> = triangles
            .iter()
            .enumerate()
            .map(|(t, tri)| {
                let bb = triangle_aabb(&[vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]]);
                GeomWithData::new(Rectangle::from_aabb(bb), t)
            })
            .collect();
        TriangleLocator {
            tree: RTree::bulk_load(items),
        }
    }

    /// Lowest-index triangle whose closure contains `p` (barycentric
    /// tolerance 1e-12).
    pub fn locate(&self, mesh: &TriMesh, p: Point2) -> Option<usize> {
        self.candidates_at(p)
            .filter(|&t| point_in_triangle(p, &mesh.triangle_points(t), 1e-12))
            .min()
    }

    /// Triangles whose bounding box contains `p`.
    pub fn candidates_at(&self, p: Point2) -> impl Iterator<Item = usize> + '_ {
        self.tree
            .locate_all_at_point(&[p.x, p.y])
            .map(|e| e.data)
    }

    /// Triangles whose bounding box meets `bb`.
    pub fn candidates_in(&self, bb: AABB<[f64; 2]>) -> impl Iterator<Item = usize> + '_ {
        self.tree.locate_in_envelope_intersecting(&bb).map(|e| e.data)
    }
}
