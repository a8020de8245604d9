//! P1 finite elements: degree-of-freedom maps, stiffness and load assembly.

use crate::error::MeshError;
use crate::geometry::{barycentric, Point2};
use crate::mesh::{Marker, TriMesh, TriangleLocator};
use crate::sparse::CsrMatrix;

const NO_DOF: usize = usize::MAX;

/// Degree-of-freedom numbering of the P1 space on a mesh: constrained
/// vertices carry no dof, the others are numbered in vertex order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeSpace {
    dof_of_vertex: Vec<usize>,
    vertex_of_dof: Vec<usize>,
}

impl FeSpace {
    /// Dirichlet-marked vertices are constrained.
    pub fn new(mesh: &TriMesh) -> FeSpace {
        let c: Vec<bool> = mesh.markers().iter().map(|&m| m == Marker::Dirichlet).collect();
        Self::with_constraints(&c)
    }

    pub fn with_constraints(constrained: &[bool]) -> FeSpace {
        let mut dof_of_vertex = vec![NO_DOF; constrained.len()];
        let mut vertex_of_dof = Vec::new();
        for (v, &c) in constrained.iter().enumerate() {
            if !c {
                dof_of_vertex[v] = vertex_of_dof.len();
                vertex_of_dof.push(v);
            }
        }
        FeSpace {
            dof_of_vertex,
            vertex_of_dof,
        }
    }

    /// Every vertex is a dof.
    pub fn unconstrained(nv: usize) -> FeSpace {
        Self::with_constraints(&vec![false; nv])
    }

    pub fn ndof(&self) -> usize {
        self.vertex_of_dof.len()
    }

    pub fn n_vertices(&self) -> usize {
        self.dof_of_vertex.len()
    }

    #[inline]
    pub fn dof(&self, v: usize) -> Option<usize> {
        let d = self.dof_of_vertex[v];
        (d != NO_DOF).then_some(d)
    }

    pub fn vertex(&self, dof: usize) -> usize {
        self.vertex_of_dof[dof]
    }

    pub fn vertices_of_dofs(&self) -> &[usize] {
        &self.vertex_of_dof
    }

    pub fn is_constrained(&self, v: usize) -> bool {
        self.dof_of_vertex[v] == NO_DOF
    }

    /// Expand dof coefficients to vertex values (zero on constrained vertices).
    pub fn to_vertex_values(&self, coeffs: &[f64]) -> Vec<f64> {
        self.dof_of_vertex
            .iter()
            .map(|&d| if d == NO_DOF { 0.0 } else { coeffs[d] })
            .collect()
    }

    /// Nodal interpolation of `g` on the dofs.
    pub fn interpolate<F: Fn(Point2) -> f64>(&self, mesh: &TriMesh, g: F) -> Vec<f64> {
        self.vertex_of_dof.iter().map(|&v| g(mesh.vertices()[v])).collect()
    }
}

/// Stiffness matrix, load vector and the space they live on.
#[derive(Debug, Clone)]
pub struct AssembledSystem {
    pub a: CsrMatrix,
    pub f: Vec<f64>,
    pub space: FeSpace,
}

/// Triangles around each vertex in compressed form, in increasing order.
pub(crate) struct Stars {
    offsets: Vec<usize>,
    tris: Vec<u32>,
}

impl Stars {
    pub(crate) fn new(nv: usize, triangles: &[[usize; 3]]) -> Stars {
        let mut offsets = vec![0usize; nv + 1];
        for t in triangles {
            for &v in t {
                offsets[v + 1] += 1;
            }
        }
        for v in 0..nv {
            offsets[v + 1] += offsets[v];
        }
        let mut fill = offsets.clone();
        let mut tris = vec![0u32; offsets[nv]];
        for (k, t) in triangles.iter().enumerate() {
            for &v in t {
                tris[fill[v]] = k as u32;
                fill[v] += 1;
            }
        }
        Stars { offsets, tris }
    }

    #[inline]
    pub(crate) fn of(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.tris[self.offsets[v]..self.offsets[v + 1]].iter().map(|&t| t as usize)
    }
}

/// Element stiffness entry `k_ab` of the P1 Laplacian on triangle `p`.
#[inline]
pub(crate) fn element_stiffness(p: &[Point2; 3], a: usize, b: usize, area: f64) -> f64 {
    let ga = p[(a + 2) % 3] - p[(a + 1) % 3];
    let gb = p[(b + 2) % 3] - p[(b + 1) % 3];
    (ga.x * gb.x + ga.y * gb.y) / (4.0 * area)
}

/// Stiffness matrix of the Laplacian on the dofs of `space`. Rows are
/// assembled independently from each vertex star.
pub fn assemble_stiffness(mesh: &TriMesh, space: &FeSpace) -> Result<CsrMatrix, MeshError> {
    assemble_stiffness_raw(mesh.vertices(), mesh.triangles(), space)
}

pub(crate) fn assemble_stiffness_raw(
    vertices: &[Point2],
    triangles: &[[usize; 3]],
    space: &FeSpace,
) -> Result<CsrMatrix, MeshError> {
    let pts = |t: usize| {
        let [a, b, c] = triangles[t];
        [vertices[a], vertices[b], vertices[c]]
    };
    let areas: Vec<f64> = (0..triangles.len()).map(|t| crate::geometry::signed_area(&pts(t))).collect();
    if let Some(t) = areas.iter().position(|&a| a <= 0.0 || !a.is_finite()) {
        return Err(MeshError::InvertedTriangle { index: t, area: areas[t] });
    }
    let stars = Stars::new(vertices.len(), triangles);
    let n = space.ndof();
    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut col_idx = Vec::with_capacity(7 * n);
    let mut values = Vec::with_capacity(7 * n);
    row_ptr.push(0);
    let mut row: Vec<(usize, f64)> = Vec::with_capacity(32);
    for i in 0..n {
        let v = space.vertex(i);
        row.clear();
        for t in stars.of(v) {
            let tri = triangles[t];
            let a = tri.iter().position(|&w| w == v).expect("star triangle holds the vertex");
            let p = pts(t);
            for (b, &w) in tri.iter().enumerate() {
                if let Some(j) = space.dof(w) {
                    row.push((j, element_stiffness(&p, a, b, areas[t])));
                }
            }
        }
        row.sort_by_key(|e| e.0);
        let mut k = 0;
        while k < row.len() {
            let j = row[k].0;
            let mut s = 0.0;
            while k < row.len() && row[k].0 == j {
                s += row[k].1;
                k += 1;
            }
            if s != 0.0 {
                col_idx.push(j);
                values.push(s);
            }
        }
        row_ptr.push(col_idx.len());
    }
    Ok(CsrMatrix::from_parts_unchecked(n, n, row_ptr, col_idx, values))
}

/// Load vector `(f, phi_i)` by the edge-midpoint rule, exact for linear `f`.
pub fn assemble_load<F: Fn(Point2) -> f64>(mesh: &TriMesh, space: &FeSpace, f: F) -> Vec<f64> {
    let mut b = vec![0.0; space.ndof()];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let p = mesh.triangle_points(t);
        let area = mesh.triangle_area(t);
        let fm = [
            f(p[1].lerp(p[2], 0.5)),
            f(p[2].lerp(p[0], 0.5)),
            f(p[0].lerp(p[1], 0.5)),
        ];
        for a in 0..3 {
            if let Some(i) = space.dof(tri[a]) {
                // phi_a is 1/2 on the two midpoints of edges through vertex a
                b[i] += area / 6.0 * (fm[(a + 1) % 3] + fm[(a + 2) % 3]);
            }
        }
    }
    b
}

/// Stiffness and load for `-Laplace u = f` with homogeneous Dirichlet data.
pub fn assemble_system<F: Fn(Point2) -> f64>(mesh: &TriMesh, f: F) -> Result<AssembledSystem, MeshError> {
    let space = FeSpace::new(mesh);
    let a = assemble_stiffness(mesh, &space)?;
    let f = assemble_load(mesh, &space, f);
    Ok(AssembledSystem { a, f, space })
}

/// Evaluate the FE function with dof coefficients `coeffs` at `p`; `None`
/// outside the mesh.
pub fn evaluate(mesh: &TriMesh, space: &FeSpace, locator: &TriangleLocator, coeffs: &[f64], p: Point2) -> Option<f64> {
    let t = locator.locate(mesh, p)?;
    let lam = barycentric(p, &mesh.triangle_points(t));
    let tri = mesh.triangles()[t];
    Some(
        (0..3)
            .map(|k| space.dof(tri[k]).map_or(0.0, |d| coeffs[d] * lam[k]))
            .sum(),
    )
}

/// Energy-norm error of `coeffs` against a smooth solution given by its
/// gradient, by the edge-midpoint rule.
pub fn energy_error<G: Fn(Point2) -> Point2>(mesh: &TriMesh, space: &FeSpace, coeffs: &[f64], grad: G) -> f64 {
    let vals = space.to_vertex_values(coeffs);
    let mut e2 = 0.0;
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let p = mesh.triangle_points(t);
        let area = mesh.triangle_area(t);
        let mut gh = Point2::new(0.0, 0.0);
        for a in 0..3 {
            let e = p[(a + 2) % 3] - p[(a + 1) % 3];
            // gradient of the hat function: rotated opposite edge over 2 area
            gh = gh + Point2::new(-e.y, e.x) * (vals[tri[a]] / (2.0 * area));
        }
        for k in 0..3 {
            let m = p[k].lerp(p[(k + 1) % 3], 0.5);
            let d = grad(m) - gh;
            e2 += area / 3.0 * d.dot(d);
        }
    }
    e2.sqrt()
}
