//! Auxiliary multigrid hierarchy: box levels adapted to the domain, with
//! their spaces, stiffness matrices, prolongations and near-boundary dofs.

mod boundary;
mod box_levels;

use std::io::Write;
use std::path::Path;

use log::debug;
use serde::Serialize;

pub use boundary::{DomainIndex, TriStatus};
pub use box_levels::{build_box_hierarchy, parent_triangles, BoxHierarchy, LevelValidity, MAX_DEPTH};

use crate::boxes::CutMesh;
use crate::cluster::{BoxRegion, ClusterTree, DEFAULT_N_MIN};
use crate::error::{HierarchyError, MeshError};
use crate::fem::{assemble_stiffness, FeSpace};
use crate::geometry::{barycentric, Point2};
use crate::mesh::{barycenters, boundary_vertex_flags, save_mesh, BoundaryKind, Marker, TriMesh};
use crate::sparse::CsrMatrix;
use box_levels::tri_points;

const NONE: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HierarchyOptions {
    /// Largest cluster that is not split further.
    pub n_min: usize,
    /// Extra vertex-adjacency layers grown around the boundary triangles
    /// when forming the near-boundary dof sets.
    pub layers: usize,
}

impl Default for HierarchyOptions {
    fn default() -> Self {
        HierarchyOptions {
            n_min: DEFAULT_N_MIN,
            layers: 1,
        }
    }
}

/// One auxiliary level.
#[derive(Debug, Clone)]
pub struct AuxLevel {
    /// Box level of the cut this mesh was taken from.
    pub box_level: u32,
    pub mesh: TriMesh,
    pub space: FeSpace,
    pub matrix: CsrMatrix,
    /// Sorted dofs near the level boundary.
    pub near: Vec<usize>,
}

impl AuxLevel {
    pub fn ndof(&self) -> usize {
        self.space.ndof()
    }

    pub fn area(&self) -> f64 {
        self.mesh.total_area()
    }
}

/// Per-level summary used by reports and the manifest file.
#[derive(Debug, Clone, Serialize)]
pub struct LevelSummary {
    pub level: usize,
    pub box_level: u32,
    pub n_vertices: usize,
    pub n_triangles: usize,
    pub ndof: usize,
    pub nnz: usize,
    pub area: f64,
    pub near: usize,
}

#[derive(Debug, Clone)]
pub struct AuxHierarchy {
    pub kind: BoundaryKind,
    pub options: HierarchyOptions,
    pub root: BoxRegion,
    /// Coarsest first.
    pub levels: Vec<AuxLevel>,
    /// `prolongations[k]` maps level `k` to level `k + 1`.
    pub prolongations: Vec<CsrMatrix>,
    /// Leading box levels dropped for lack of triangles or dofs.
    pub dropped: usize,
    pub cluster_depth: u32,
    pub marked: Vec<usize>,
    pub closure: Vec<usize>,
}

/// State of the previous cut needed to build the next level.
struct Stage {
    cut: CutMesh,
    status: Vec<TriStatus>,
    /// Closed triangle meets a Dirichlet boundary segment (mixed problems only).
    touches_dirichlet: Vec<bool>,
    /// Cut triangle to level triangle.
    kept: Vec<u32>,
    /// Cut vertex to level vertex.
    vmap: Vec<u32>,
    /// Index in `levels` if this cut became a level.
    level: Option<usize>,
}

impl AuxHierarchy {
    /// Build the hierarchy for `mesh`; the boundary condition family is read
    /// from its boundary markers.
    pub fn build(mesh: &TriMesh, options: HierarchyOptions) -> Result<AuxHierarchy, HierarchyError> {
        if mesh.n_triangles() == 0 {
            return Err(HierarchyError::NoUsableLevel);
        }
        let kind = mesh.boundary_kind();
        let root = BoxRegion::closed_bounding_square(mesh.vertices()).expect("mesh has vertices");
        let clusters = ClusterTree::build_in(&barycenters(mesh), root, options.n_min.max(1));
        let boxes = build_box_hierarchy(&clusters)?;
        let index = DomainIndex::new(mesh);
        let mut h = AuxHierarchy {
            kind,
            options,
            root,
            levels: Vec::new(),
            prolongations: Vec::new(),
            dropped: 0,
            cluster_depth: clusters.depth,
            marked: boxes.marked.clone(),
            closure: boxes.closure.clone(),
        };
        drop(clusters);
        let mut prev: Option<Stage> = None;
        for box_level in 1..=boxes.depth {
            let cut = boxes.tree.triangulate(box_level);
            let parent = prev
                .as_ref()
                .map(|p| parent_triangles(&boxes.tree, &p.cut, &cut));
            let stage = h.add_level(cut, box_level, prev.as_ref(), parent.as_deref(), &index)?;
            prev = Some(stage);
        }
        if h.levels.is_empty() {
            return Err(HierarchyError::NoUsableLevel);
        }
        Ok(h)
    }

    fn add_level(
        &mut self,
        cut: CutMesh,
        box_level: u32,
        prev: Option<&Stage>,
        parent: Option<&[usize]>,
        index: &DomainIndex,
    ) -> Result<Stage, HierarchyError> {
        let nt = cut.triangles.len();
        let inherited = |t: usize| -> Option<(&Stage, usize)> { Some((prev?, parent?[t])) };
        let mut status = Vec::with_capacity(nt);
        for t in 0..nt {
            let s = match inherited(t) {
                Some((p, pt)) if p.status[pt] != TriStatus::Straddle => p.status[pt],
                _ => index.classify(&tri_points(&cut, t)),
            };
            status.push(s);
        }
        let mut touches_dirichlet = Vec::new();
        if self.kind == BoundaryKind::Mixed {
            touches_dirichlet = (0..nt)
                .map(|t| {
                    if status[t] == TriStatus::Outside {
                        return false;
                    }
                    if let Some((p, pt)) = inherited(t) {
                        if !p.touches_dirichlet[pt] {
                            return false;
                        }
                    }
                    index.marked_boundary_meets_closed(&tri_points(&cut, t), Marker::Dirichlet)
                })
                .collect();
        }
        let keep: Vec<bool> = (0..nt)
            .map(|t| match self.kind {
                BoundaryKind::Dirichlet => status[t] == TriStatus::Inside,
                BoundaryKind::Neumann => status[t] != TriStatus::Outside,
                BoundaryKind::Mixed => status[t] != TriStatus::Outside && !touches_dirichlet[t],
            })
            .collect();

        let nv = cut.vertices.len();
        let kept_tris: Vec<[usize; 3]> = (0..nt).filter(|&t| keep[t]).map(|t| cut.triangles[t]).collect();
        let constrained_cut: Vec<bool> = match self.kind {
            BoundaryKind::Dirichlet => boundary_vertex_flags(nv, &kept_tris),
            BoundaryKind::Neumann => vec![false; nv],
            BoundaryKind::Mixed => {
                let mut c = vec![false; nv];
                for t in (0..nt).filter(|&t| touches_dirichlet[t]) {
                    for &v in &cut.triangles[t] {
                        c[v] = true;
                    }
                }
                c
            }
        };
        drop(kept_tris);

        let mut vmap = vec![NONE; nv];
        let mut kept = vec![NONE; nt];
        let mut vertices = Vec::new();
        let mut triangles = Vec::new();
        for t in (0..nt).filter(|&t| keep[t]) {
            kept[t] = triangles.len() as u32;
            triangles.push([0, 1, 2].map(|k| cut.triangles[t][k]));
        }
        for tri in &triangles {
            for &v in tri {
                vmap[v] = 0;
            }
        }
        let mut constrained = Vec::new();
        for v in 0..nv {
            if vmap[v] != NONE {
                vmap[v] = vertices.len() as u32;
                vertices.push(cut.vertices[v]);
                constrained.push(constrained_cut[v]);
            }
        }
        for tri in triangles.iter_mut() {
            *tri = tri.map(|v| vmap[v] as usize);
        }
        let stage = |level| Stage {
            cut,
            status,
            touches_dirichlet,
            kept,
            vmap,
            level,
        };

        let space = FeSpace::with_constraints(&constrained);
        if self.levels.is_empty() && (triangles.is_empty() || space.ndof() == 0) {
            self.dropped += 1;
            return Ok(stage(None));
        }
        if triangles.is_empty() {
            return Err(HierarchyError::EmptyLevel(box_level as usize));
        }
        let on_boundary = boundary_vertex_flags(vertices.len(), &triangles);
        let markers: Vec<Marker> = (0..vertices.len())
            .map(|v| match (constrained[v], on_boundary[v]) {
                (true, _) => Marker::Dirichlet,
                (false, true) => Marker::Neumann,
                _ => Marker::Interior,
            })
            .collect();
        let mesh = TriMesh::new(vertices, triangles, markers).map_err(HierarchyError::Mesh)?;
        let matrix = assemble_stiffness(&mesh, &space).map_err(HierarchyError::Mesh)?;
        let near = near_boundary_dofs(&mesh, &space, self.options.layers);
        let fine = AuxLevel {
            box_level,
            mesh,
            space,
            matrix,
            near,
        };
        let stage = stage(Some(self.levels.len()));
        if let (Some(p), Some(parent), Some(ci)) = (prev, parent, prev.and_then(|p| p.level)) {
            let pr = prolongation(&self.levels[ci], p, &fine, &stage, parent);
            self.prolongations.push(pr);
        }
        debug!(
            "aux level {} (box level {box_level}): {} triangles, {} dofs, {} near",
            self.levels.len(),
            fine.mesh.n_triangles(),
            fine.ndof(),
            fine.near.len()
        );
        self.levels.push(fine);
        Ok(stage)
    }

    pub fn n_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn finest(&self) -> &AuxLevel {
        self.levels.last().expect("hierarchy has a level")
    }

    pub fn summaries(&self) -> Vec<LevelSummary> {
        self.levels
            .iter()
            .enumerate()
            .map(|(k, l)| LevelSummary {
                level: k,
                box_level: l.box_level,
                n_vertices: l.mesh.n_vertices(),
                n_triangles: l.mesh.n_triangles(),
                ndof: l.ndof(),
                nnz: l.matrix.nnz(),
                area: l.area(),
                near: l.near.len(),
            })
            .collect()
    }

    /// Bytes held by level matrices and prolongations.
    pub fn storage_bytes(&self) -> usize {
        self.levels.iter().map(|l| l.matrix.storage_bytes()).sum::<usize>()
            + self.prolongations.iter().map(CsrMatrix::storage_bytes).sum::<usize>()
    }

    /// Per-level summary as CSV.
    pub fn write_manifest<W: Write>(&self, w: W) -> Result<(), crate::Error> {
        let mut out = csv::Writer::from_writer(w);
        for s in self.summaries() {
            out.serialize(s)?;
        }
        out.flush()?;
        Ok(())
    }

    /// Write `level_<k>.mesh` for every level plus `manifest.csv` into `dir`.
    pub fn export(&self, dir: &Path) -> Result<(), crate::Error> {
        std::fs::create_dir_all(dir)?;
        for (k, l) in self.levels.iter().enumerate() {
            save_mesh(&l.mesh, dir.join(format!("level_{k}.mesh"))).map_err(|e: MeshError| e)?;
        }
        self.write_manifest(std::fs::File::create(dir.join("manifest.csv"))?)
    }
}

/// Interpolation from the coarse level to the fine one. A fine dof takes the
/// coarse function's value at its vertex, read from the coarse triangle that
/// contains a kept fine triangle around it; where no such coarse triangle
/// was kept the value is zero.
fn prolongation(
    coarse: &AuxLevel,
    cstage: &Stage,
    fine: &AuxLevel,
    fstage: &Stage,
    parent: &[usize],
) -> CsrMatrix {
    let nf = fine.ndof();
    let mut rows: Vec<Option<[(u32, f64); 3]>> = vec![None; nf];
    for (t, &lt) in fstage.kept.iter().enumerate() {
        if lt == NONE {
            continue;
        }
        let pt = parent[t];
        if cstage.kept[pt] == NONE {
            continue;
        }
        let cpts = tri_points(&cstage.cut, pt);
        let ctri = cstage.cut.triangles[pt];
        for &v in &fstage.cut.triangles[t] {
            let Some(dof) = fine.space.dof(fstage.vmap[v] as usize) else {
                continue;
            };
            if rows[dof].is_some() {
                continue;
            }
            let lam = barycentric(fstage.cut.vertices[v], &cpts);
            rows[dof] = Some([0, 1, 2].map(|k| {
                match coarse.space.dof(cstage.vmap[ctri[k]] as usize) {
                    Some(cd) if lam[k].abs() >= 1e-14 => (cd as u32, lam[k]),
                    _ => (NONE, 0.0),
                }
            }));
        }
    }
    let mut triplets = Vec::with_capacity(3 * nf);
    for (i, r) in rows.iter().enumerate() {
        for &(j, w) in r.iter().flatten() {
            if j != NONE {
                triplets.push((i, j as usize, w));
            }
        }
    }
    CsrMatrix::from_triplets(nf, coarse.ndof(), &triplets)
}

/// Free dofs of the triangles touching the mesh boundary, grown by `layers`
/// rounds of vertex adjacency.
pub fn near_boundary_dofs(mesh: &TriMesh, space: &FeSpace, layers: usize) -> Vec<usize> {
    let tris = mesh.triangles();
    let mut mark = boundary_vertex_flags(mesh.n_vertices(), tris);
    for _ in 0..=layers {
        let mut next = mark.clone();
        for t in tris {
            if t.iter().any(|&v| mark[v]) {
                for &v in t {
                    next[v] = true;
                }
            }
        }
        mark = next;
    }
    (0..mesh.n_vertices())
        .filter(|&v| mark[v])
        .filter_map(|v| space.dof(v))
        .collect()
}

/// Zero-extended evaluation of a level function at `p`, searching the
/// triangles of the level mesh by brute force through a locator.
pub fn evaluate_level(level: &AuxLevel, locator: &crate::mesh::TriangleLocator, coeffs: &[f64], p: Point2) -> f64 {
    crate::fem::evaluate(&level.mesh, &level.space, locator, coeffs, p).unwrap_or(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{gen_graded_square, gen_holes_domain, gen_uniform_square};
    use crate::sparse::galerkin_project;

    #[test]
    fn dirichlet_galerkin_identity() {
        let m = gen_graded_square(8, 2, BoundaryKind::Dirichlet).unwrap();
        let h = AuxHierarchy::build(&m, HierarchyOptions::default()).unwrap();
        assert!(h.n_levels() >= 3);
        for k in 0..h.n_levels() - 1 {
            let g = galerkin_project(&h.levels[k + 1].matrix, &h.prolongations[k]).unwrap();
            assert!(g.max_abs_diff(&h.levels[k].matrix) < 1e-12, "level {k}");
        }
        // Dirichlet levels grow outward
        for w in h.levels.windows(2) {
            assert!(w[0].area() <= w[1].area() + 1e-12);
        }
    }

    #[test]
    fn neumann_levels_cover_the_domain() {
        let m = gen_holes_domain(16, 1, BoundaryKind::Neumann).unwrap();
        let h = AuxHierarchy::build(&m, HierarchyOptions::default()).unwrap();
        let area = m.total_area();
        for l in &h.levels {
            assert!(l.area() >= area - 1e-12);
            assert_eq!(l.ndof(), l.mesh.n_vertices());
            assert!(!l.near.is_empty());
        }
        for w in h.levels.windows(2) {
            assert!(w[0].area() >= w[1].area() - 1e-12);
        }
        // constants are prolongated to constants
        for (k, p) in h.prolongations.iter().enumerate() {
            let one = vec![1.0; h.levels[k].ndof()];
            for x in p.spmv(&one).unwrap() {
                assert!((x - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn mixed_constrains_only_near_dirichlet_side() {
        let m = gen_uniform_square(16, BoundaryKind::Mixed).unwrap();
        let h = AuxHierarchy::build(&m, HierarchyOptions::default()).unwrap();
        let l = h.finest();
        for v in 0..l.mesh.n_vertices() {
            if l.space.is_constrained(v) {
                assert!(l.mesh.vertices()[v].x < 0.25);
            }
        }
        assert!(l.ndof() < l.mesh.n_vertices());
    }

    #[test]
    fn near_set_layers_grow() {
        let m = gen_uniform_square(8, BoundaryKind::Neumann).unwrap();
        let s = FeSpace::new(&m);
        let a = near_boundary_dofs(&m, &s, 0);
        let b = near_boundary_dofs(&m, &s, 1);
        // rings of two and three vertex rows on a 9x9 vertex grid
        assert_eq!(a.len(), 81 - 25);
        assert_eq!(b.len(), 81 - 9);
    }
}
