//! Balanced quadtree of squares and conforming triangulation of its level cuts.
//!
//! Boxes are addressed by `(level, ix, iy)` with level 1 holding `base x base`
//! boxes. Refinement is kept 2:1 edge balanced, so every box edge of a level
//! cut carries at most one hanging node. Boxes without hanging nodes are split
//! along the SW-NE diagonal; boxes with hanging nodes are fan-triangulated from
//! their center, which keeps every angle at 45 or 90 degrees.

use rustc_hash::FxHashMap;

use crate::geometry::Point2;

/// Edge directions: south, east, north, west.
pub const DIRS: [(i64, i64); 4] = [(0, -1), (1, 0), (0, 1), (-1, 0)];

#[derive(Debug, Clone)]
pub struct BoxNode {
    pub level: u32,
    pub ix: u64,
    pub iy: u64,
    pub parent: Option<usize>,
    /// Children indexed by `dx + 2 dy`.
    pub children: Option<[usize; 4]>,
}

/// Local triangulation pattern of one box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pattern {
    /// Two triangles split along the SW-NE diagonal.
    Regular,
    /// Fan around the center; bit `d` set when edge `d` has a hanging node.
    Fan(u8),
}

/// Hanging-node configuration classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PatternClass {
    Zero,
    One,
    TwoAdjacent,
    TwoOpposite,
    Three,
    Four,
}

impl Pattern {
    pub fn class(self) -> PatternClass {
        match self {
            Pattern::Regular => PatternClass::Zero,
            Pattern::Fan(m) => match m.count_ones() {
                0 => PatternClass::Zero,
                1 => PatternClass::One,
                2 if m == 0b0101 || m == 0b1010 => PatternClass::TwoOpposite,
                2 => PatternClass::TwoAdjacent,
                3 => PatternClass::Three,
                _ => PatternClass::Four,
            },
        }
    }

    pub fn n_triangles(self) -> usize {
        match self {
            Pattern::Regular => 2,
            Pattern::Fan(m) => 4 + m.count_ones() as usize,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BoxTree {
    origin: Point2,
    side: f64,
    base: u64,
    nodes: Vec<BoxNode>,
}

/// Conforming triangulation of one level cut.
#[derive(Debug, Clone, Default)]
pub struct CutMesh {
    pub level: u32,
    pub vertices: Vec<Point2>,
    /// Integer lattice position of each vertex in units of `2^-level` level-1 cells.
    pub keys: Vec<(u64, u64)>,
    pub triangles: Vec<[usize; 3]>,
    pub tri_box: Vec<usize>,
    pub tri_pattern: Vec<Pattern>,
    /// Boxes of the cut; the triangles of `boxes[k]` are `box_first[k]..box_first[k + 1]`.
    pub boxes: Vec<usize>,
    pub box_first: Vec<usize>,
    /// Position in `boxes` by tree node id, `usize::MAX` for boxes outside the cut.
    pub box_slot: Vec<usize>,
}

impl CutMesh {
    /// Triangle range of a tree box, if the box belongs to the cut.
    pub fn triangles_of_box(&self, b: usize) -> Option<std::ops::Range<usize>> {
        let k = *self.box_slot.get(b).filter(|&&k| k != usize::MAX)?;
        Some(self.box_first[k]..self.box_first[k + 1])
    }
}

impl BoxTree {
    /// A forest of `base x base` level-1 boxes tiling the square
    /// `[origin, origin + side)^2`.
    pub fn new(origin: Point2, side: f64, base: u64) -> BoxTree {
        assert!(base >= 1 && side > 0.0);
        let mut t = BoxTree {
            origin,
            side,
            base,
            nodes: Vec::with_capacity((base * base) as usize),
        };
        for iy in 0..base {
            for ix in 0..base {
                t.push(1, ix, iy, None);
            }
        }
        t
    }

    fn push(&mut self, level: u32, ix: u64, iy: u64, parent: Option<usize>) -> usize {
        let id = self.nodes.len();
        self.nodes.push(BoxNode {
            level,
            ix,
            iy,
            parent,
            children: None,
        });
        id
    }

    pub fn nodes(&self) -> &[BoxNode] {
        &self.nodes
    }

    pub fn node(&self, id: usize) -> &BoxNode {
        &self.nodes[id]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn base(&self) -> u64 {
        self.base
    }

    /// Box at `(level, ix, iy)`, found by descending from its level-1 ancestor.
    pub fn get(&self, level: u32, ix: u64, iy: u64) -> Option<usize> {
        if level == 0 || ix >= self.extent(level) || iy >= self.extent(level) {
            return None;
        }
        let top = level - 1;
        let mut id = ((iy >> top) * self.base + (ix >> top)) as usize;
        for shift in (0..top).rev() {
            let q = ((ix >> shift) & 1) + 2 * ((iy >> shift) & 1);
            id = self.nodes[id].children?[q as usize];
        }
        Some(id)
    }

    pub fn max_level(&self) -> u32 {
        self.nodes.iter().map(|n| n.level).max().unwrap_or(1)
    }

    /// Number of boxes per side at `level`.
    fn extent(&self, level: u32) -> u64 {
        self.base << (level - 1)
    }

    /// Coordinate of lattice position `k` at resolution `base * 2^shift`.
    #[inline]
    fn coord(&self, k: u64, shift: u32) -> (f64, f64) {
        let denom = (self.base << shift) as f64;
        (self.side * (k as f64 / denom), denom)
    }

    fn lattice_point(&self, kx: u64, ky: u64, shift: u32) -> Point2 {
        Point2::new(
            self.origin.x + self.coord(kx, shift).0,
            self.origin.y + self.coord(ky, shift).0,
        )
    }

    /// Lower-left corner and side length of a box.
    pub fn region(&self, id: usize) -> (Point2, f64) {
        let n = &self.nodes[id];
        let corner = self.lattice_point(n.ix, n.iy, n.level - 1);
        (corner, self.side / self.extent(n.level) as f64)
    }

    /// Same-level neighbor across edge `d`, if present.
    pub fn neighbor(&self, id: usize, d: usize) -> Option<usize> {
        let n = &self.nodes[id];
        let (nx, ny) = self.step(n.level, n.ix, n.iy, d)?;
        let q = ((nx & 1) + 2 * (ny & 1)) as usize;
        match n.parent {
            None => Some((ny * self.base + nx) as usize),
            Some(p) if (nx >> 1, ny >> 1) == (n.ix >> 1, n.iy >> 1) => Some(self.nodes[p].children?[q]),
            Some(p) => Some(self.nodes[self.neighbor(p, d)?].children?[q]),
        }
    }

    fn step(&self, level: u32, ix: u64, iy: u64, d: usize) -> Option<(u64, u64)> {
        let (dx, dy) = DIRS[d];
        let nx = ix as i64 + dx;
        let ny = iy as i64 + dy;
        let ext = self.extent(level) as i64;
        (nx >= 0 && ny >= 0 && nx < ext && ny < ext).then_some((nx as u64, ny as u64))
    }

    /// Refine a leaf into four children without any balancing.
    pub fn refine(&mut self, id: usize) -> [usize; 4] {
        if let Some(c) = self.nodes[id].children {
            return c;
        }
        let (level, ix, iy) = (self.nodes[id].level, self.nodes[id].ix, self.nodes[id].iy);
        let mut kids = [0; 4];
        for (q, k) in kids.iter_mut().enumerate() {
            let (dx, dy) = ((q & 1) as u64, (q >> 1) as u64);
            *k = self.push(level + 1, 2 * ix + dx, 2 * iy + dy, Some(id));
        }
        self.nodes[id].children = Some(kids);
        kids
    }

    /// Refine a box while keeping 2:1 edge balance. Returns the number of
    /// extra refinements forced on coarser boxes.
    pub fn refine_balanced(&mut self, id: usize) -> usize {
        if self.nodes[id].children.is_some() {
            return 0;
        }
        let mut extra = 0;
        let (level, ix, iy) = (self.nodes[id].level, self.nodes[id].ix, self.nodes[id].iy);
        for d in 0..4 {
            if self.step(level, ix, iy, d).is_none() {
                continue;
            }
            if self.neighbor(id, d).is_none() {
                let coarse = self.nodes[id]
                    .parent
                    .and_then(|p| self.neighbor(p, d))
                    .expect("balanced tree has the coarse neighbor");
                extra += 1 + self.refine_balanced(coarse);
            }
        }
        self.refine(id);
        extra
    }

    /// Boxes of the level cut: boxes at `level` plus leaves on coarser levels,
    /// in depth-first order from the level-1 boxes.
    pub fn cut(&self, level: u32) -> Vec<usize> {
        let mut out = Vec::new();
        let roots = (self.base * self.base) as usize;
        let mut stack: Vec<usize> = (0..roots).rev().collect();
        while let Some(id) = stack.pop() {
            let n = &self.nodes[id];
            match n.children {
                Some(c) if n.level < level => stack.extend(c.iter().rev()),
                _ => out.push(id),
            }
        }
        out
    }

    /// Edge directions of box `id` carrying a hanging node in cut `level`.
    pub fn hanging_mask(&self, id: usize, level: u32) -> u8 {
        let n = &self.nodes[id];
        if n.level >= level {
            return 0;
        }
        let mut mask = 0u8;
        for d in 0..4 {
            if let Some(nb) = self.neighbor(id, d) {
                if self.nodes[nb].children.is_some() {
                    mask |= 1 << d;
                }
            }
        }
        mask
    }

    /// Number of cut vertices strictly inside edge `d` of box `id` contributed
    /// by the neighbor side, in cut `level`.
    pub fn hanging_count(&self, id: usize, d: usize, level: u32) -> usize {
        match self.neighbor(id, d) {
            Some(nb) => self.vertices_on_side(nb, (d + 2) % 4, level),
            None => 0,
        }
    }

    fn vertices_on_side(&self, id: usize, side: usize, level: u32) -> usize {
        let n = &self.nodes[id];
        let Some(c) = n.children else { return 0 };
        if n.level >= level {
            return 0;
        }
        let (a, b) = match side {
            0 => (c[0], c[1]),
            1 => (c[1], c[3]),
            2 => (c[2], c[3]),
            _ => (c[0], c[2]),
        };
        1 + self.vertices_on_side(a, side, level) + self.vertices_on_side(b, side, level)
    }

    /// Worst hanging-node count over all box edges of a cut, with the box.
    pub fn audit_cut(&self, level: u32) -> (usize, Option<usize>) {
        let mut worst = (0, None);
        for b in self.cut(level) {
            for d in 0..4 {
                let c = self.hanging_count(b, d, level);
                if c > worst.0 {
                    worst = (c, Some(b));
                }
            }
        }
        worst
    }

    /// Triangulate the cut at `level`.
    pub fn triangulate(&self, level: u32) -> CutMesh {
        assert!(
            (self.base as u128) << level < (1u128 << 62),
            "lattice keys overflow"
        );
        let boxes = self.cut(level);
        let mut mesh = CutMesh {
            level,
            ..Default::default()
        };
        let mut lookup = LatticeIndex::new((self.base << level) + 1, boxes.len());
        mesh.triangles.reserve(boxes.len() * 2);
        mesh.box_first.reserve(boxes.len() + 1);
        mesh.box_slot = vec![usize::MAX; self.nodes.len()];
        let mut vertex = |mesh: &mut CutMesh, kx: u64, ky: u64| -> usize {
            lookup.get_or_insert(kx, ky, || {
                mesh.vertices.push(self.lattice_point(kx, ky, level));
                mesh.keys.push((kx, ky));
                mesh.vertices.len() - 1
            })
        };
        for (slot, &b) in boxes.iter().enumerate() {
            mesh.box_first.push(mesh.triangles.len());
            mesh.box_slot[b] = slot;
            let n = &self.nodes[b];
            let half = 1u64 << (level - n.level);
            let (x0, y0) = (n.ix * 2 * half, n.iy * 2 * half);
            let mut local = |mesh: &mut CutMesh, i: u64, j: u64| vertex(mesh, x0 + i * half, y0 + j * half);
            let mask = self.hanging_mask(b, level);
            if mask == 0 {
                let sw = local(&mut mesh, 0, 0);
                let se = local(&mut mesh, 2, 0);
                let ne = local(&mut mesh, 2, 2);
                let nw = local(&mut mesh, 0, 2);
                for t in [[sw, se, ne], [sw, ne, nw]] {
                    mesh.triangles.push(t);
                    mesh.tri_box.push(b);
                    mesh.tri_pattern.push(Pattern::Regular);
                }
            } else {
                // boundary walk SW, S, SE, E, NE, N, NW, W
                const WALK: [(u64, u64, Option<usize>); 8] = [
                    (0, 0, None),
                    (1, 0, Some(0)),
                    (2, 0, None),
                    (2, 1, Some(1)),
                    (2, 2, None),
                    (1, 2, Some(2)),
                    (0, 2, None),
                    (0, 1, Some(3)),
                ];
                let c = local(&mut mesh, 1, 1);
                let ring: Vec<usize> = WALK
                    .iter()
                    .filter(|(_, _, d)| d.is_none_or(|d| mask & (1 << d) != 0))
                    .map(|&(i, j, _)| local(&mut mesh, i, j))
                    .collect();
                for k in 0..ring.len() {
                    mesh.triangles.push([ring[k], ring[(k + 1) % ring.len()], c]);
                    mesh.tri_box.push(b);
                    mesh.tri_pattern.push(Pattern::Fan(mask));
                }
            }
        }
        mesh.box_first.push(mesh.triangles.len());
        mesh.boxes = boxes;
        mesh
    }
}

/// Vertex numbers by lattice key. A dense table is used while the lattice
/// is at most a small multiple of the box count, so memory stays linear and
/// lookups stay local along the depth-first box order.
enum LatticeIndex {
    Dense { side: u64, ids: Vec<u32> },
    Hashed(FxHashMap<(u64, u64), usize>),
}

impl LatticeIndex {
    const UNSET: u32 = u32::MAX;

    fn new(side: u64, n_boxes: usize) -> LatticeIndex {
        let cells = side.checked_mul(side);
        match cells {
            Some(c) if c <= 16 * n_boxes as u64 + 1024 && c < Self::UNSET as u64 => LatticeIndex::Dense {
                side,
                ids: vec![Self::UNSET; c as usize],
            },
            _ => {
                let mut map = FxHashMap::default();
                map.reserve(n_boxes * 2);
                LatticeIndex::Hashed(map)
            }
        }
    }

    fn get_or_insert(&mut self, kx: u64, ky: u64, make: impl FnOnce() -> usize) -> usize {
        match self {
            LatticeIndex::Dense { side, ids } => {
                let slot = &mut ids[(ky * *side + kx) as usize];
                if *slot == Self::UNSET {
                    *slot = make() as u32;
                }
                *slot as usize
            }
            LatticeIndex::Hashed(map) => *map.entry((kx, ky)).or_insert_with(make),
        }
    }
}
