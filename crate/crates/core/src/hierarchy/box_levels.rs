//! Balanced box hierarchy driven by the cluster tree, and checks on its
//! level triangulations.

use serde::Serialize;

use crate::boxes::{BoxTree, CutMesh};
use crate::cluster::ClusterTree;
use crate::error::HierarchyError;
use crate::geometry::{barycentric, centroid, signed_area, triangle_angles, Point2};
use crate::mesh::{conformity_check, Marker, TriMesh};

/// Deepest level whose lattice keys stay well inside `u64`.
pub const MAX_DEPTH: u32 = 48;

/// The 2:1 balanced closure of a cluster tree.
#[derive(Debug, Clone)]
pub struct BoxHierarchy {
    pub tree: BoxTree,
    /// Number of levels; cut `depth` holds the finest boxes.
    pub depth: u32,
    /// Boxes refined because their cluster holds too many points, per level.
    pub marked: Vec<usize>,
    /// Extra refinements forced by the balance condition, per level of the
    /// box that triggered them.
    pub closure: Vec<usize>,
}

/// Refine a single root box wherever the cluster tree refines, then close.
pub fn build_box_hierarchy(clusters: &ClusterTree) -> Result<BoxHierarchy, HierarchyError> {
    if clusters.depth > MAX_DEPTH {
        return Err(HierarchyError::TooDeep(clusters.depth));
    }
    let r = clusters.root_region();
    let mut tree = BoxTree::new(Point2::new(r.a1, r.a2), r.side, 1);
    let depth = clusters.depth;
    let mut by_level: Vec<Vec<usize>> = vec![Vec::new(); depth as usize + 1];
    for (id, n) in clusters.nodes().iter().enumerate() {
        if !n.is_leaf() {
            by_level[n.level as usize].push(id);
        }
    }
    let mut marked = vec![0; depth as usize + 1];
    let mut closure = vec![0; depth as usize + 1];
    // clusters and boxes number their children in the same quadrant order
    let mut box_of = vec![usize::MAX; clusters.nodes().len()];
    box_of[0] = 0;
    for level in 1..depth {
        for &c in &by_level[level as usize] {
            let b = box_of[c];
            debug_assert_ne!(b, usize::MAX, "parent cluster boxes are refined first");
            marked[level as usize] += 1;
            closure[level as usize] += tree.refine_balanced(b);
            let (boxes, kids) = (tree.node(b).children, clusters.node(c).children);
            if let (Some(boxes), Some(kids)) = (boxes, kids) {
                for q in 0..4 {
                    box_of[kids[q]] = boxes[q];
                }
            }
        }
    }
    Ok(BoxHierarchy {
        tree,
        depth,
        marked,
        closure,
    })
}

/// For each fine triangle, the coarse triangle containing it. The fine box
/// is either kept unchanged in the coarse cut or is a child of a coarse box.
pub fn parent_triangles(tree: &BoxTree, coarse: &CutMesh, fine: &CutMesh) -> Vec<usize> {
    let mut parent = vec![0; fine.triangles.len()];
    for (k, &b) in fine.boxes.iter().enumerate() {
        let range = coarse
            .triangles_of_box(b)
            .or_else(|| coarse.triangles_of_box(tree.node(b).parent?))
            .expect("fine box or its parent lies in the coarser cut");
        for t in fine.box_first[k]..fine.box_first[k + 1] {
            let c = centroid(&tri_points(fine, t));
            let mut best = (f64::NEG_INFINITY, range.start);
            for ct in range.clone() {
                let m = barycentric(c, &tri_points(coarse, ct))
                    .into_iter()
                    .fold(f64::INFINITY, f64::min);
                if m > best.0 {
                    best = (m, ct);
                }
            }
            parent[t] = best.1;
        }
    }
    parent
}

pub(crate) fn tri_points(cut: &CutMesh, t: usize) -> [Point2; 3] {
    let [a, b, c] = cut.triangles[t];
    [cut.vertices[a], cut.vertices[b], cut.vertices[c]]
}

/// Quality of one level triangulation.
#[derive(Debug, Clone, Serialize)]
pub struct LevelValidity {
    pub level: u32,
    pub n_triangles: usize,
    /// Largest number of cut vertices strictly inside a box edge.
    pub max_hanging: usize,
    pub min_angle_deg: f64,
    pub conforming: bool,
    /// Largest relative mismatch between a triangle's area and the total
    /// area of the next level's triangles inside it (zero on the finest level).
    pub nesting_defect: f64,
    /// Finer triangles whose centroid is not inside their assigned parent.
    pub misplaced_children: usize,
}

impl LevelValidity {
    pub fn is_valid(&self, angle_tol_deg: f64, area_tol: f64) -> bool {
        self.max_hanging <= 1
            && self.conforming
            && self.min_angle_deg >= 45.0 - angle_tol_deg
            && self.nesting_defect <= area_tol
            && self.misplaced_children == 0
    }
}

impl BoxHierarchy {
    /// Triangulate every level and check hanging nodes, conformity, angles
    /// and nesting. Only two levels are held in memory at a time.
    pub fn validate(&self) -> Vec<LevelValidity> {
        let mut out: Vec<LevelValidity> = Vec::with_capacity(self.depth as usize);
        let mut prev: Option<CutMesh> = None;
        for level in 1..=self.depth {
            let cut = self.tree.triangulate(level);
            if let Some(coarse) = prev.take() {
                let (defect, misplaced) = nesting(&self.tree, &coarse, &cut);
                let last = out.last_mut().expect("coarse level recorded");
                last.nesting_defect = defect;
                last.misplaced_children = misplaced;
            }
            let mut min_angle = f64::INFINITY;
            for t in 0..cut.triangles.len() {
                for a in triangle_angles(&tri_points(&cut, t)) {
                    min_angle = min_angle.min(a.to_degrees());
                }
            }
            let markers = vec![Marker::Neumann; cut.vertices.len()];
            let conforming = TriMesh::new(cut.vertices.clone(), cut.triangles.clone(), markers)
                .and_then(|m| conformity_check(&m))
                .is_ok();
            out.push(LevelValidity {
                level,
                n_triangles: cut.triangles.len(),
                max_hanging: self.tree.audit_cut(level).0,
                min_angle_deg: min_angle,
                conforming,
                nesting_defect: 0.0,
                misplaced_children: 0,
            });
            prev = Some(cut);
        }
        out
    }
}

fn nesting(tree: &BoxTree, coarse: &CutMesh, fine: &CutMesh) -> (f64, usize) {
    let parent = parent_triangles(tree, coarse, fine);
    let mut covered = vec![0.0; coarse.triangles.len()];
    let mut misplaced = 0;
    for (t, &p) in parent.iter().enumerate() {
        let pts = tri_points(fine, t);
        covered[p] += signed_area(&pts);
        let lam = barycentric(centroid(&pts), &tri_points(coarse, p));
        if lam.iter().any(|&l| l < -1e-12) {
            misplaced += 1;
        }
    }
    let defect = covered
        .iter()
        .enumerate()
        .map(|(p, &a)| {
            let area = signed_area(&tri_points(coarse, p));
            (a - area).abs() / area
        })
        .fold(0.0, f64::max);
    (defect, misplaced)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cluster::BoxRegion;
    use crate::mesh::{barycenters, gen_graded_square, BoundaryKind};

    fn hierarchy_of(mesh: &TriMesh) -> BoxHierarchy {
        let pts = barycenters(mesh);
        let root = BoxRegion::closed_bounding_square(mesh.vertices()).unwrap();
        build_box_hierarchy(&ClusterTree::build_in(&pts, root, 3)).unwrap()
    }

    #[test]
    fn graded_levels_are_valid() {
        let m = gen_graded_square(8, 3, BoundaryKind::Dirichlet).unwrap();
        let h = hierarchy_of(&m);
        assert!(h.depth >= 5);
        let report = h.validate();
        assert_eq!(report.len(), h.depth as usize);
        for r in &report {
            assert!(r.is_valid(1e-9, 1e-12), "{r:?}");
        }
        assert!(report.windows(2).all(|w| w[0].n_triangles <= w[1].n_triangles));
    }

    #[test]
    fn marked_counts_match_internal_clusters() {
        let m = gen_graded_square(4, 2, BoundaryKind::Dirichlet).unwrap();
        let pts = barycenters(&m);
        let root = BoxRegion::closed_bounding_square(m.vertices()).unwrap();
        let c = ClusterTree::build_in(&pts, root, 3);
        let h = build_box_hierarchy(&c).unwrap();
        let stats = c.stats();
        for l in 1..c.depth as usize {
            assert_eq!(h.marked[l], stats.internal[l - 1]);
        }
        let refined = h.tree.nodes().iter().filter(|n| n.children.is_some()).count();
        assert_eq!(refined, h.marked.iter().sum::<usize>() + h.closure.iter().sum::<usize>());
    }
}
