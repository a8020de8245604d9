//! Quadtree clustering of triangle barycenters.
//!
//! Boxes are half-open squares `[a1, a1 + side) x [a2, a2 + side)`. A node is
//! subdivided into its four quadrants iff it holds more than `n_min` points,
//! so leaves hold at most `n_min` points and every point lies in exactly one
//! leaf. Empty children are kept.

use std::io::Write;

use crate::geometry::Point2;

pub const DEFAULT_N_MIN: usize = 3;

/// Half-open axis-aligned square.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxRegion {
    pub a1: f64,
    pub a2: f64,
    pub side: f64,
}

impl BoxRegion {
    pub fn contains(&self, p: Point2) -> bool {
        p.x >= self.a1 && p.x < self.a1 + self.side && p.y >= self.a2 && p.y < self.a2 + self.side
    }

    pub fn center(&self) -> Point2 {
        Point2::new(self.a1 + 0.5 * self.side, self.a2 + 0.5 * self.side)
    }

    /// Smallest square with lower corner at the componentwise minimum that
    /// contains every point in its closure (no inflation).
    pub fn closed_bounding_square(points: &[Point2]) -> Option<BoxRegion> {
        let (lo, hi) = extent(points)?;
        let side = (hi.x - lo.x).max(hi.y - lo.y);
        Some(BoxRegion {
            a1: lo.x,
            a2: lo.y,
            side: if side > 0.0 { side } else { 1.0 },
        })
    }
}

fn extent(points: &[Point2]) -> Option<(Point2, Point2)> {
    let first = *points.first()?;
    let mut lo = first;
    let mut hi = first;
    for p in points {
        lo.x = lo.x.min(p.x);
        lo.y = lo.y.min(p.y);
        hi.x = hi.x.max(p.x);
        hi.y = hi.y.max(p.y);
    }
    Some((lo, hi))
}

/// Minimal square bounding box, inflated by a relative `1e-12` so that the
/// points with maximal coordinates fall inside the half-open box. A single
/// point (zero extent) gets side 1.
pub fn bounding_square(points: &[Point2]) -> Option<BoxRegion> {
    let (lo, hi) = extent(points)?;
    let ext = (hi.x - lo.x).max(hi.y - lo.y);
    if ext == 0.0 {
        return Some(BoxRegion {
            a1: lo.x,
            a2: lo.y,
            side: 1.0,
        });
    }
    let mut side = ext * (1.0 + 1e-12);
    // large offsets can swallow the relative inflation
    while lo.x + side <= hi.x || lo.y + side <= hi.y {
        side = side * (1.0 + 1e-12) + f64::EPSILON * lo.x.abs().max(lo.y.abs());
    }
    Some(BoxRegion {
        a1: lo.x,
        a2: lo.y,
        side,
    })
}

#[derive(Debug, Clone)]
pub struct ClusterNode {
    /// Tree level, the root being level 1.
    pub level: u32,
    pub ix: u64,
    pub iy: u64,
    pub region: BoxRegion,
    start: usize,
    len: usize,
    pub children: Option<[usize; 4]>,
}

impl ClusterNode {
    pub fn count(&self) -> usize {
        self.len
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_none()
    }
}

#[derive(Debug, Clone)]
pub struct ClusterTree {
    nodes: Vec<ClusterNode>,
    /// Point indices permuted so that each node owns a contiguous range.
    perm: Vec<usize>,
    pub n_min: usize,
    pub depth: u32,
    pub n_points: usize,
    root_region: BoxRegion,
}

/// Per-level node counts; `leaves[l - 1]` and `internal[l - 1]` for level `l`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeStats {
    pub depth: u32,
    pub leaf_count: usize,
    pub leaves: Vec<usize>,
    pub internal: Vec<usize>,
}

impl TreeStats {
    /// Check `n_l + m_l = 4 m_{l-1}` for all levels `l >= 2`.
    pub fn recurrence_holds(&self) -> bool {
        (1..self.leaves.len()).all(|l| self.leaves[l] + self.internal[l] == 4 * self.internal[l - 1])
    }
}

/// Lower coordinate of cell `i` at `level` inside `root`; shared by all
/// membership decisions so that sibling boxes partition their parent exactly.
#[inline]
pub(crate) fn cell_coord(origin: f64, side: f64, level: u32, i: u64) -> f64 {
    origin + (i as f64) * (side / (1u64 << (level - 1)) as f64)
}

const MAX_LEVEL: u32 = 60;

impl ClusterTree {
    /// Build over `points` with the inflated [`bounding_square`] as root.
    pub fn build(points: &[Point2], n_min: usize) -> ClusterTree {
        let root = bounding_square(points).unwrap_or(BoxRegion {
            a1: 0.0,
            a2: 0.0,
            side: 1.0,
        });
        Self::build_in(points, root, n_min)
    }

    /// Build over `points` inside the given root box. Points outside the
    /// half-open root are a caller error.
    pub fn build_in(points: &[Point2], root: BoxRegion, n_min: usize) -> ClusterTree {
        assert!(n_min >= 1, "n_min must be at least 1");
        debug_assert!(points.iter().all(|p| root.contains(*p)));
        let mut tree = ClusterTree {
            nodes: vec![ClusterNode {
                level: 1,
                ix: 0,
                iy: 0,
                region: root,
                start: 0,
                len: points.len(),
                children: None,
            }],
            perm: (0..points.len()).collect(),
            n_min,
            depth: 1,
            n_points: points.len(),
            root_region: root,
        };
        let mut stack = vec![0usize];
        let mut buckets: [Vec<usize>; 4] = Default::default();
        while let Some(id) = stack.pop() {
            let node = tree.nodes[id].clone();
            if node.len <= n_min || node.level >= MAX_LEVEL {
                continue;
            }
            let lvl = node.level + 1;
            let mx = cell_coord(root.a1, root.side, lvl, 2 * node.ix + 1);
            let my = cell_coord(root.a2, root.side, lvl, 2 * node.iy + 1);
            for b in buckets.iter_mut() {
                b.clear();
            }
            for &i in &tree.perm[node.start..node.start + node.len] {
                let p = points[i];
                let q = usize::from(p.x >= mx) + 2 * usize::from(p.y >= my);
                buckets[q].push(i);
            }
            let mut offset = node.start;
            let mut kids = [0usize; 4];
            for (q, bucket) in buckets.iter().enumerate() {
                let (dx, dy) = ((q & 1) as u64, (q >> 1) as u64);
                let (ix, iy) = (2 * node.ix + dx, 2 * node.iy + dy);
                tree.perm[offset..offset + bucket.len()].copy_from_slice(bucket);
                kids[q] = tree.nodes.len();
                tree.nodes.push(ClusterNode {
                    level: lvl,
                    ix,
                    iy,
                    region: BoxRegion {
                        a1: cell_coord(root.a1, root.side, lvl, ix),
                        a2: cell_coord(root.a2, root.side, lvl, iy),
                        side: root.side / (1u64 << (lvl - 1)) as f64,
                    },
                    start: offset,
                    len: bucket.len(),
                    children: None,
                });
                offset += bucket.len();
            }
            tree.nodes[id].children = Some(kids);
            tree.depth = tree.depth.max(lvl);
            stack.extend(kids.iter().rev());
        }
        tree
    }

    pub fn root(&self) -> &ClusterNode {
        &self.nodes[0]
    }

    pub fn root_region(&self) -> BoxRegion {
        self.root_region
    }

    pub fn nodes(&self) -> &[ClusterNode] {
        &self.nodes
    }

    pub fn node(&self, id: usize) -> &ClusterNode {
        &self.nodes[id]
    }

    /// Point indices held by a node.
    pub fn indices(&self, id: usize) -> &[usize] {
        let n = &self.nodes[id];
        &self.perm[n.start..n.start + n.len]
    }

    /// Membership test consistent with the construction (exact partition).
    pub fn node_contains(&self, id: usize, p: Point2) -> bool {
        let n = &self.nodes[id];
        let r = &self.root_region;
        p.x >= cell_coord(r.a1, r.side, n.level, n.ix)
            && p.x < cell_coord(r.a1, r.side, n.level, n.ix + 1)
            && p.y >= cell_coord(r.a2, r.side, n.level, n.iy)
            && p.y < cell_coord(r.a2, r.side, n.level, n.iy + 1)
    }

    pub fn leaves(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.nodes.len()).filter(|&i| self.nodes[i].is_leaf())
    }

    pub fn stats(&self) -> TreeStats {
        let d = self.depth as usize;
        let mut leaves = vec![0; d];
        let mut internal = vec![0; d];
        for n in &self.nodes {
            if n.is_leaf() {
                leaves[n.level as usize - 1] += 1;
            } else {
                internal[n.level as usize - 1] += 1;
            }
        }
        TreeStats {
            depth: self.depth,
            leaf_count: leaves.iter().sum(),
            leaves,
            internal,
        }
    }

    /// One line per node: `level a1 a2 side count is_leaf`.
    pub fn write_dump<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for n in &self.nodes {
            writeln!(
                w,
                "{} {} {} {} {} {}",
                n.level,
                n.region.a1,
                n.region.a2,
                n.region.side,
                n.len,
                u8::from(n.is_leaf())
            )?;
        }
        Ok(())
    }
}

/// Build a cluster tree (convenience wrapper).
pub fn build_tree(points: &[Point2], n_min: usize) -> ClusterTree {
    ClusterTree::build(points, n_min)
}

pub fn tree_stats(tree: &ClusterTree) -> TreeStats {
    tree.stats()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bounding_square_of_diagonal_pair() {
        let b = bounding_square(&[Point2::new(0.0, 0.0), Point2::new(1.0, 1.0)]).unwrap();
        assert_eq!((b.a1, b.a2), (0.0, 0.0));
        assert_eq!(b.side, 1.0 * (1.0 + 1e-12));
        assert!(b.contains(Point2::new(1.0, 1.0)));
    }

    #[test]
    fn bounding_square_single_point_fallback() {
        let b = bounding_square(&[Point2::new(2.0, 3.0)]).unwrap();
        assert_eq!(b.side, 1.0);
        assert!(bounding_square(&[]).is_none());
    }

    #[test]
    fn bounding_square_with_large_offset() {
        let pts = [Point2::new(1e9, 1e9), Point2::new(1e9 + 1.0, 1e9 + 0.5)];
        let b = bounding_square(&pts).unwrap();
        assert!(pts.iter().all(|&p| b.contains(p)));
    }

    #[test]
    fn four_quadrant_points() {
        let pts = [
            Point2::new(0.25, 0.25),
            Point2::new(0.75, 0.25),
            Point2::new(0.25, 0.75),
            Point2::new(0.75, 0.75),
        ];
        let root = BoxRegion {
            a1: 0.0,
            a2: 0.0,
            side: 1.0,
        };
        let t = ClusterTree::build_in(&pts, root, 3);
        assert_eq!(t.depth, 2);
        let kids = t.root().children.unwrap();
        for k in kids {
            assert!(t.node(k).is_leaf());
            assert_eq!(t.node(k).count(), 1);
        }
        let s = t.stats();
        assert_eq!(s.leaves, vec![0, 4]);
        assert_eq!(s.internal, vec![1, 0]);
        assert!(s.recurrence_holds());
    }

    #[test]
    fn few_points_make_a_leaf_root() {
        let pts = [Point2::new(0.1, 0.2), Point2::new(0.3, 0.9)];
        let t = build_tree(&pts, 3);
        assert_eq!(t.depth, 1);
        assert!(t.root().is_leaf());
        let s = t.stats();
        assert_eq!((s.leaves[0], s.internal[0]), (1, 0));
    }

    #[test]
    fn points_on_split_lines_go_up_and_right() {
        let pts = [
            Point2::new(0.5, 0.5),
            Point2::new(0.5, 0.1),
            Point2::new(0.1, 0.5),
            Point2::new(0.1, 0.1),
        ];
        let root = BoxRegion {
            a1: 0.0,
            a2: 0.0,
            side: 1.0,
        };
        let t = ClusterTree::build_in(&pts, root, 1);
        let kids = t.root().children.unwrap();
        assert_eq!(t.indices(kids[3]), &[0]);
        assert_eq!(t.indices(kids[1]), &[1]);
        assert_eq!(t.indices(kids[2]), &[2]);
        assert_eq!(t.indices(kids[0]), &[3]);
    }
}
