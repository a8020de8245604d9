//! Scott-Zhang quasi-interpolation between two P1 spaces on unrelated
//! meshes, assembled by exact triangle-triangle clipping.

use serde::Serialize;

use crate::fem::{FeSpace, Stars};
use crate::geometry::{clip_triangles, integrate_polygon, polygon_area, signed_area, triangle_aabb, Point2};
use crate::mesh::{TriMesh, TriangleLocator};
use crate::sparse::CsrMatrix;

/// Affine function `c[0] + c[1] x + c[2] y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Affine(pub [f64; 3]);

impl Affine {
    #[inline]
    pub fn eval(&self, p: Point2) -> f64 {
        self.0[0] + self.0[1] * p.x + self.0[2] * p.y
    }

    fn scaled_sum(terms: &[(f64, Affine)]) -> Affine {
        let mut c = [0.0; 3];
        for (s, a) in terms {
            for k in 0..3 {
                c[k] += s * a.0[k];
            }
        }
        Affine(c)
    }
}

/// The three barycentric coordinate functions of a counterclockwise triangle.
pub fn barycentric_functions(t: &[Point2; 3]) -> [Affine; 3] {
    let two_a = 2.0 * signed_area(t);
    [0, 1, 2].map(|m| {
        let p = t[(m + 1) % 3];
        let q = t[(m + 2) % 3];
        Affine([
            (p.x * q.y - q.x * p.y) / two_a,
            (p.y - q.y) / two_a,
            (q.x - p.x) / two_a,
        ])
    })
}

/// L2-dual basis of the vertex hat functions on one triangle:
/// `psi_m = (9 lambda_m - 3 lambda_{m+1} - 3 lambda_{m+2}) / area`.
pub fn dual_basis(t: &[Point2; 3]) -> [Affine; 3] {
    let lam = barycentric_functions(t);
    let area = signed_area(t);
    [0, 1, 2].map(|m| {
        Affine::scaled_sum(&[
            (9.0 / area, lam[m]),
            (-3.0 / area, lam[(m + 1) % 3]),
            (-3.0 / area, lam[(m + 2) % 3]),
        ])
    })
}

/// Integral of the product of two affine functions over a convex polygon.
pub fn integrate_product(poly: &[Point2], f: Affine, g: Affine) -> f64 {
    integrate_polygon(poly, |p| f.eval(p) * g.eval(p))
}

/// Per target dof, the triangle carrying its dual function and the vertex
/// slot of the dof inside that triangle.
#[derive(Debug, Clone)]
pub struct DualChoice {
    pub element: Vec<usize>,
    pub slot: Vec<u8>,
}

/// Lowest-index triangle of each free vertex star, preferring triangles
/// without constrained vertices.
pub fn choose_dual_elements(mesh: &TriMesh, space: &FeSpace) -> DualChoice {
    let stars = Stars::new(mesh.n_vertices(), mesh.triangles());
    let n = space.ndof();
    let mut element = Vec::with_capacity(n);
    let mut slot = Vec::with_capacity(n);
    for d in 0..n {
        let v = space.vertex(d);
        let free = |t: usize| mesh.triangles()[t].iter().all(|&w| !space.is_constrained(w));
        let t = stars
            .of(v)
            .filter(|&t| free(t))
            .min()
            .or_else(|| stars.of(v).min())
            .expect("free vertex lies in a triangle");
        element.push(t);
        slot.push(mesh.triangles()[t].iter().position(|&w| w == v).expect("star holds vertex") as u8);
    }
    DualChoice { element, slot }
}

/// Relative area defect above which a dual element counts as partially
/// covered. Clipped areas carry rounding of order `eps * diameter^2 / area`.
pub const COVERAGE_TOL: f64 = 1e-9;

/// Target dofs whose dual element is not fully covered by the source mesh.
#[derive(Debug, Clone, Default, Serialize)]
pub struct CoverageReport {
    pub rows: usize,
    pub partial: Vec<usize>,
    /// Smallest covered fraction of a dual element.
    pub min_fraction: f64,
}

impl CoverageReport {
    pub fn partial_count(&self) -> usize {
        self.partial.len()
    }
}

impl std::fmt::Display for CoverageReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} rows, {} partially covered, min covered fraction {:.6}",
            self.rows,
            self.partial.len(),
            self.min_fraction
        )
    }
}

/// Quasi-interpolation matrix from the source space to the target space:
/// entry `(i, k) = integral over the dual element of target dof i of
/// psi_i * phi_k`, where `phi_k` is the source hat function of dof `k`.
/// Source functions vanish outside the source mesh.
pub fn assemble_transfer(
    source: (&TriMesh, &FeSpace),
    target: (&TriMesh, &FeSpace),
) -> (CsrMatrix, CoverageReport) {
    let (smesh, sspace) = source;
    let (tmesh, tspace) = target;
    let choice = choose_dual_elements(tmesh, tspace);
    let locator = TriangleLocator::new(smesh);
    let n = tspace.ndof();
    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut col_idx = Vec::with_capacity(12 * n);
    let mut values = Vec::with_capacity(12 * n);
    row_ptr.push(0);
    let mut report = CoverageReport {
        rows: n,
        partial: Vec::new(),
        min_fraction: 1.0,
    };
    let mut row: Vec<(usize, f64)> = Vec::with_capacity(64);
    for i in 0..n {
        let sigma_abs = tmesh.triangle_points(choice.element[i]);
        // work relative to the dual element so that affine functions of
        // small triangles do not cancel against their constant terms
        let o = sigma_abs[0];
        let local = |t: [Point2; 3]| t.map(|p| p - o);
        let sigma = local(sigma_abs);
        let psi = dual_basis(&sigma)[choice.slot[i] as usize];
        let area = signed_area(&sigma);
        let mut covered = 0.0;
        row.clear();
        for t in locator.candidates_in(triangle_aabb(&sigma_abs)) {
            let tau = local(smesh.triangle_points(t));
            let poly = clip_triangles(&sigma, &tau);
            if poly.is_empty() {
                continue;
            }
            let a = polygon_area(&poly);
            if a <= 1e-14 * area {
                continue;
            }
            covered += a;
            let lam = barycentric_functions(&tau);
            for (m, &v) in smesh.triangles()[t].iter().enumerate() {
                if let Some(k) = sspace.dof(v) {
                    row.push((k, integrate_product(&poly, psi, lam[m])));
                }
            }
        }
        let frac = covered / area;
        if (frac - 1.0).abs() > COVERAGE_TOL {
            report.partial.push(i);
        }
        report.min_fraction = report.min_fraction.min(frac);
        row.sort_unstable_by_key(|e| e.0);
        let mut k = 0;
        while k < row.len() {
            let j = row[k].0;
            let mut s = 0.0;
            while k < row.len() && row[k].0 == j {
                s += row[k].1;
                k += 1;
            }
            if s.abs() > 1e-15 {
                col_idx.push(j);
                values.push(s);
            }
        }
        row_ptr.push(col_idx.len());
    }
    (
        CsrMatrix::from_parts_unchecked(n, sspace.ndof(), row_ptr, col_idx, values),
        report,
    )
}

/// Areas of the intersections of `sigma` with every source triangle, summed.
pub fn clipped_area(sigma: &[Point2; 3], source: &TriMesh, locator: &TriangleLocator) -> f64 {
    locator
        .candidates_in(triangle_aabb(sigma))
        .map(|t| polygon_area(&clip_triangles(sigma, &source.triangle_points(t))))
        .sum()
}
