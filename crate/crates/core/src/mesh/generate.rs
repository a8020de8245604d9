//! Synthetic mesh generators on the unit square.

use std::collections::HashMap;

use super::{boundary_vertex_flags, edge_groups, edge_table, triangle_components, BoundaryEdge, BoundaryKind, Marker, TriMesh};
use crate::boxes::BoxTree;
use crate::error::MeshError;
use crate::geometry::Point2;

/// Assign boundary markers from topology. `Mixed` puts Dirichlet on the
/// vertices with minimal x coordinate and Neumann elsewhere.
fn with_markers(vertices: Vec<Point2>, triangles: Vec<[usize; 3]>, bc: BoundaryKind) -> Result<TriMesh, MeshError> {
    let flags = boundary_vertex_flags(vertices.len(), &triangles);
    let xmin = vertices.iter().map(|p| p.x).fold(f64::INFINITY, f64::min);
    let markers = vertices
        .iter()
        .zip(&flags)
        .map(|(p, &on_boundary)| match (on_boundary, bc) {
            (false, _) => Marker::Interior,
            (true, BoundaryKind::Dirichlet) => Marker::Dirichlet,
            (true, BoundaryKind::Neumann) => Marker::Neumann,
            (true, BoundaryKind::Mixed) if p.x == xmin => Marker::Dirichlet,
            (true, BoundaryKind::Mixed) => Marker::Neumann,
        })
        .collect();
    TriMesh::new(vertices, triangles, markers)
}

/// Cell triangles of the structured grid, lower-right and upper-left halves.
fn cell_triangles(sw: usize, se: usize, ne: usize, nw: usize) -> [[usize; 3]; 2] {
    [[sw, se, ne], [sw, ne, nw]]
}

/// Uniform `n x n` grid of the unit square, each cell split by its SW-NE
/// diagonal. Vertices are numbered row by row.
pub fn gen_uniform_square(n: usize, bc: BoundaryKind) -> Result<TriMesh, MeshError> {
    if n == 0 {
        return Err(MeshError::InvalidParams("n must be at least 1".into()));
    }
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            vertices.push(Point2::new(i as f64 / n as f64, j as f64 / n as f64));
        }
    }
    let id = |i: usize, j: usize| j * (n + 1) + i;
    let mut triangles = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            triangles.extend(cell_triangles(id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)));
        }
    }
    with_markers(vertices, triangles, bc)
}

/// Uniform `n x n` grid refined `levels` times towards the corner (0, 0):
/// step `k` halves every cell meeting `[0, 2^-k)^2`. Refinement is kept 2:1
/// balanced and cells with hanging nodes are fan-triangulated, so the result
/// is conforming with all angles at least 45 degrees.
pub fn gen_graded_square(n: usize, levels: u32, bc: BoundaryKind) -> Result<TriMesh, MeshError> {
    if levels == 0 {
        return gen_uniform_square(n, bc);
    }
    if n == 0 {
        return Err(MeshError::InvalidParams("n must be at least 1".into()));
    }
    if levels > 40 {
        return Err(MeshError::InvalidParams(format!("too many grading levels ({levels})")));
    }
    let mut tree = BoxTree::new(Point2::new(0.0, 0.0), 1.0, n as u64);
    for k in 1..=levels {
        // a level-k box starts below 2^-k iff 2 ix < n
        let targets: Vec<usize> = (0..tree.len())
            .filter(|&b| {
                let node = tree.node(b);
                node.level == k && node.children.is_none() && 2 * node.ix < n as u64 && 2 * node.iy < n as u64
            })
            .collect();
        for b in targets {
            tree.refine_balanced(b);
        }
    }
    let cut = tree.triangulate(tree.max_level());
    with_markers(cut.vertices, cut.triangles, bc)
}

/// Unit square grid with `holes` square holes of `max(2, n / 8)` cells per
/// side, centered on a `k x k` layout with `k = ceil(sqrt(holes))`. Holes
/// must not touch each other or the outer boundary.
pub fn gen_holes_domain(n: usize, holes: usize, bc: BoundaryKind) -> Result<TriMesh, MeshError> {
    if holes == 0 {
        return gen_uniform_square(n, bc);
    }
    if n == 0 {
        return Err(MeshError::InvalidParams("n must be at least 1".into()));
    }
    let s = (n / 8).max(2);
    let k = (holes as f64).sqrt().ceil() as usize;
    let mut blocks = Vec::with_capacity(holes);
    for h in 0..holes {
        let (bi, bj) = (h % k, h / k);
        let start = |b: usize| -> i64 {
            let c = (b as f64 + 0.5) / k as f64 * n as f64;
            (c - s as f64 / 2.0).round() as i64
        };
        let (x0, y0) = (start(bi), start(bj));
        let fits = |a: i64| a >= 1 && a + (s as i64) < n as i64;
        if !fits(x0) || !fits(y0) {
            return Err(MeshError::InvalidParams(format!(
                "hole {h} of {s} cells touches the outer boundary (n = {n}, holes = {holes})"
            )));
        }
        blocks.push((x0 as usize, y0 as usize));
    }
    for a in 0..blocks.len() {
        for b in a + 1..blocks.len() {
            let (ax, ay) = blocks[a];
            let (bx, by) = blocks[b];
            let apart = ax + s < bx || bx + s < ax || ay + s < by || by + s < ay;
            if !apart {
                return Err(MeshError::InvalidParams(format!("holes {a} and {b} overlap or touch")));
            }
        }
    }
    let in_hole = |i: usize, j: usize| blocks.iter().any(|&(x0, y0)| i >= x0 && i < x0 + s && j >= y0 && j < y0 + s);

    let id = |i: usize, j: usize| j * (n + 1) + i;
    let mut used = vec![false; (n + 1) * (n + 1)];
    let mut cells = Vec::new();
    for j in 0..n {
        for i in 0..n {
            if in_hole(i, j) {
                continue;
            }
            let c = [id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)];
            for &v in &c {
                used[v] = true;
            }
            cells.push(c);
        }
    }
    let mut renum = vec![usize::MAX; used.len()];
    let mut vertices = Vec::new();
    for j in 0..=n {
        for i in 0..=n {
            if used[id(i, j)] {
                renum[id(i, j)] = vertices.len();
                vertices.push(Point2::new(i as f64 / n as f64, j as f64 / n as f64));
            }
        }
    }
    let triangles: Vec<[usize; 3]> = cells
        .iter()
        .flat_map(|c| cell_triangles(renum[c[0]], renum[c[1]], renum[c[2]], renum[c[3]]))
        .collect();
    let mesh = with_markers(vertices, triangles, bc)?;
    let components = triangle_components(&mesh);
    if components != 1 {
        return Err(MeshError::Disconnected { components });
    }
    Ok(mesh)
}

/// One red refinement step: every triangle is split into four by its edge
/// midpoints. Boundary midpoints inherit the marker of their edge.
pub fn refine_uniform(mesh: &TriMesh) -> TriMesh {
    let recs = edge_table(mesh.triangles());
    let mut vertices = mesh.vertices().to_vec();
    let mut markers = mesh.markers().to_vec();
    let boundary: HashMap<(usize, usize), Marker> = mesh
        .boundary_edges()
        .iter()
        .map(|e| ((e.v[0].min(e.v[1]), e.v[0].max(e.v[1])), e.marker))
        .collect();
    let mut mid: HashMap<(usize, usize), usize> = HashMap::with_capacity(recs.len() / 2 + 1);
    for (s, _) in edge_groups(&recs) {
        let (a, b) = (recs[s].lo, recs[s].hi);
        mid.insert((a, b), vertices.len());
        vertices.push(vertices[a].lerp(vertices[b], 0.5));
        markers.push(boundary.get(&(a, b)).copied().unwrap_or(Marker::Interior));
    }
    let m = |a: usize, b: usize| mid[&(a.min(b), a.max(b))];
    let mut triangles = Vec::with_capacity(4 * mesh.n_triangles());
    for &[a, b, c] in mesh.triangles() {
        let (ab, bc, ca) = (m(a, b), m(b, c), m(c, a));
        triangles.extend([[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]);
    }
    let explicit: Vec<BoundaryEdge> = mesh
        .explicit_edges()
        .iter()
        .flat_map(|e| {
            let c = m(e.v[0], e.v[1]);
            [
                BoundaryEdge {
                    v: [e.v[0], c],
                    marker: e.marker,
                },
                BoundaryEdge {
                    v: [c, e.v[1]],
                    marker: e.marker,
                },
            ]
        })
        .collect();
    TriMesh::with_edge_markers(vertices, triangles, markers, explicit).expect("red refinement keeps a valid mesh")
}
