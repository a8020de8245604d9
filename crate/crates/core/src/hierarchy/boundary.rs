//! Position of auxiliary triangles relative to the original domain.

use rstar::primitives::{GeomWithData, Line};
use rstar::RTree;

use crate::geometry::{segment_meets_closed_triangle, segment_meets_open_triangle, triangle_aabb, Point2};
use crate::mesh::{Marker, TriMesh, TriangleLocator};

/// Where an auxiliary triangle lies with respect to the original domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TriStatus {
    /// The open triangle lies in the domain.
    Inside,
    /// The open triangle is disjoint from the domain.
    Outside,
    /// The domain boundary crosses the open triangle.
    Straddle,
}

type Segment = GeomWithData<Line<[f64; 2]>, Marker>;

/// Spatial indices over the original mesh and its boundary segments.
pub struct DomainIndex<'a> {
    mesh: &'a TriMesh,
    locator: TriangleLocator,
    segments: RTree<Segment>,
    tol: f64,
}

impl<'a> DomainIndex<'a> {
    pub fn new(mesh: &'a TriMesh) -> DomainIndex<'a> {
        let v = mesh.vertices();
        let segs: Vec<Segment> = mesh
            .boundary_edges()
            .iter()
            .map(|e| {
                let (a, b) = (v[e.v[0]], v[e.v[1]]);
                GeomWithData::new(Line::new([a.x, a.y], [b.x, b.y]), e.marker)
            })
            .collect();
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for p in v {
            lo = lo.min(p.x).min(p.y);
            hi = hi.max(p.x).max(p.y);
        }
        let scale = if hi > lo { hi - lo } else { 1.0 };
        DomainIndex {
            mesh,
            locator: TriangleLocator::new(mesh),
            segments: RTree::bulk_load(segs),
            tol: 1e-12 * scale,
        }
    }

    fn segments_near<'s>(&'s self, t: &[Point2; 3]) -> impl Iterator<Item = &'s Segment> + 's {
        self.segments.locate_in_envelope_intersecting(&triangle_aabb(t))
    }

    fn seg_points(s: &Segment) -> (Point2, Point2) {
        let l = s.geom();
        (Point2::new(l.from[0], l.from[1]), Point2::new(l.to[0], l.to[1]))
    }

    /// Does the boundary cross the open triangle?
    pub fn boundary_meets_open(&self, t: &[Point2; 3]) -> bool {
        self.segments_near(t).any(|s| {
            let (a, b) = Self::seg_points(s);
            segment_meets_open_triangle(a, b, t, self.tol)
        })
    }

    /// Does a boundary segment with the given marker meet the closed triangle?
    pub fn marked_boundary_meets_closed(&self, t: &[Point2; 3], marker: Marker) -> bool {
        self.segments_near(t).any(|s| {
            let (a, b) = Self::seg_points(s);
            s.data == marker && segment_meets_closed_triangle(a, b, t, self.tol)
        })
    }

    /// Is the point inside the closed domain?
    pub fn contains(&self, p: Point2) -> bool {
        self.locator.locate(self.mesh, p).is_some()
    }

    pub fn classify(&self, t: &[Point2; 3]) -> TriStatus {
        if self.boundary_meets_open(t) {
            TriStatus::Straddle
        } else if self.contains(crate::geometry::centroid(t)) {
            TriStatus::Inside
        } else {
            TriStatus::Outside
        }
    }

    pub fn locator(&self) -> &TriangleLocator {
        &self.locator
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{gen_holes_domain, BoundaryKind};

    fn tri(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> [Point2; 3] {
        [Point2::new(a.0, a.1), Point2::new(b.0, b.1), Point2::new(c.0, c.1)]
    }

    #[test]
    fn classify_against_hole_domain() {
        let m = gen_holes_domain(16, 1, BoundaryKind::Neumann).unwrap();
        let idx = DomainIndex::new(&m);
        // hole is [7/16, 9/16]^2
        assert_eq!(idx.classify(&tri((0.47, 0.47), (0.53, 0.47), (0.5, 0.53))), TriStatus::Outside);
        assert_eq!(idx.classify(&tri((0.1, 0.1), (0.2, 0.1), (0.2, 0.2))), TriStatus::Inside);
        assert_eq!(idx.classify(&tri((0.4, 0.4), (0.5, 0.4), (0.5, 0.5))), TriStatus::Straddle);
        // sharing the outer boundary line is not straddling
        assert_eq!(idx.classify(&tri((0.0, 0.0), (0.25, 0.0), (0.25, 0.25))), TriStatus::Inside);
        // touching the hole corner from outside the hole only
        assert_eq!(
            idx.classify(&tri((0.3, 0.3), (7.0 / 16.0, 0.3), (7.0 / 16.0, 7.0 / 16.0))),
            TriStatus::Inside
        );
    }
}
