use rustc_hash::FxHashMap;
use serde::Serialize;

use super::{barycenters, edge_groups, edge_table, TriMesh};
use crate::geometry::{signed_area, triangle_angles, triangle_diameter, Point2};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeshQuality {
    pub n_triangles: usize,
    /// Minimal distance between two triangle barycenters.
    pub h_min: f64,
    /// Domain diameter.
    pub diameter: f64,
    pub min_angle_deg: f64,
    /// Largest circumradius / inradius ratio.
    pub shape_ratio_max: f64,
    /// Largest diameter ratio between triangles sharing an edge.
    pub kmesh_ratio_max: f64,
    /// `ln(diameter / h_min) / ln(n_triangles)`.
    pub q_estimate: f64,
}

impl std::fmt::Display for MeshQuality {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "triangles        {}", self.n_triangles)?;
        writeln!(f, "h_min            {:.6e}", self.h_min)?;
        writeln!(f, "diameter         {:.6e}", self.diameter)?;
        writeln!(f, "min angle (deg)  {:.4}", self.min_angle_deg)?;
        writeln!(f, "shape ratio max  {:.4}", self.shape_ratio_max)?;
        writeln!(f, "k-mesh ratio max {:.4}", self.kmesh_ratio_max)?;
        write!(f, "q estimate       {:.4}", self.q_estimate)
    }
}

pub fn quality_report(mesh: &TriMesh) -> MeshQuality {
    let nt = mesh.n_triangles();
    let diams: Vec<f64> = (0..nt).map(|t| triangle_diameter(&mesh.triangle_points(t))).collect();
    let mut min_angle = f64::INFINITY;
    let mut shape = 0.0f64;
    for t in 0..nt {
        let p = mesh.triangle_points(t);
        for a in triangle_angles(&p) {
            min_angle = min_angle.min(a);
        }
        let (a, b, c) = (p[1].dist(p[2]), p[2].dist(p[0]), p[0].dist(p[1]));
        let area = signed_area(&p);
        let s = 0.5 * (a + b + c);
        shape = shape.max(a * b * c * s / (4.0 * area * area));
    }
    let recs = edge_table(mesh.triangles());
    let mut kmesh = 1.0f64;
    for (s, len) in edge_groups(&recs) {
        if len == 2 {
            let (d1, d2) = (diams[recs[s].tri], diams[recs[s + 1].tri]);
            kmesh = kmesh.max(d1.max(d2) / d1.min(d2));
        }
    }
    let h_min = h_min_hashed(&barycenters(mesh), diams.iter().copied().fold(f64::INFINITY, f64::min));
    let diameter = hull_diameter(mesh.vertices());
    MeshQuality {
        n_triangles: nt,
        h_min,
        diameter,
        min_angle_deg: min_angle.to_degrees(),
        shape_ratio_max: shape,
        kmesh_ratio_max: kmesh,
        q_estimate: (diameter / h_min).ln() / (nt as f64).ln(),
    }
}

/// Closest-pair distance via a uniform grid hash. With cell size `c` every
/// pair closer than `c` lies in neighboring cells, so a candidate `<= c` is
/// the global minimum; otherwise the cell size is doubled.
fn h_min_hashed(points: &[Point2], start_cell: f64) -> f64 {
    if points.len() < 2 {
        return f64::INFINITY;
    }
    let mut cell = if start_cell.is_finite() && start_cell > 0.0 { start_cell } else { 1.0 };
    loop {
        let key = |p: Point2| ((p.x / cell).floor() as i64, (p.y / cell).floor() as i64);
        let mut grid: FxHashMap<(i64, i64), Vec<usize>> = FxHashMap::default();
        for (i, &p) in points.iter().enumerate() {
            grid.entry(key(p)).or_default().push(i);
        }
        let mut best = f64::INFINITY;
        for (&(kx, ky), members) in &grid {
            for dx in -1..=1 {
                for dy in -1..=1 {
                    let Some(other) = grid.get(&(kx + dx, ky + dy)) else { continue };
                    for &i in members {
                        for &j in other {
                            if i < j {
                                best = best.min(points[i].dist(points[j]));
                            }
                        }
                    }
                }
            }
        }
        if best <= cell {
            return best;
        }
        cell *= 2.0;
    }
}

/// All-pairs closest barycenter distance; quadratic, for testing.
pub fn h_min_brute_force(mesh: &TriMesh) -> f64 {
    let b = barycenters(mesh);
    let mut best = f64::INFINITY;
    for i in 0..b.len() {
        for j in i + 1..b.len() {
            best = best.min(b[i].dist(b[j]));
        }
    }
    best
}

fn hull_diameter(points: &[Point2]) -> f64 {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 2 {
        return 0.0;
    }
    let mut hull: Vec<Point2> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &Point2>> = if pass == 0 { Box::new(pts.iter()) } else { Box::new(pts.iter().rev()) };
        for &p in iter {
            while hull.len() >= start + 2 && (hull[hull.len() - 1] - hull[hull.len() - 2]).cross(p - hull[hull.len() - 2]) <= 0.0 {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    let mut best = 0.0f64;
    for i in 0..hull.len() {
        for j in i + 1..hull.len() {
            best = best.max(hull[i].dist(hull[j]));
        }
    }
    best
}
