//! Planar geometry primitives: points, orientation, triangle clipping and
//! quadrature over convex polygons.

use std::ops::{Add, Mul, Sub};

use rstar::AABB;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    pub fn dot(self, o: Point2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Point2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, o: Point2) -> f64 {
        (self - o).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn lerp(self, o: Point2, t: f64) -> Point2 {
        Point2::new(self.x + t * (o.x - self.x), self.y + t * (o.y - self.y))
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, s: f64) -> Point2 {
        Point2::new(self.x * s, self.y * s)
    }
}

/// Twice the signed area of `(a, b, c)`; positive for counterclockwise order.
#[inline]
pub fn orient(a: Point2, b: Point2, c: Point2) -> f64 {
    (b - a).cross(c - a)
}

#[inline]
pub fn signed_area(t: &[Point2; 3]) -> f64 {
    0.5 * orient(t[0], t[1], t[2])
}

pub fn centroid(t: &[Point2; 3]) -> Point2 {
    Point2::new(
        (t[0].x + t[1].x + t[2].x) / 3.0,
        (t[0].y + t[1].y + t[2].y) / 3.0,
    )
}

/// Barycentric coordinates of `p` with respect to a nondegenerate triangle.
pub fn barycentric(p: Point2, t: &[Point2; 3]) -> [f64; 3] {
    let d = orient(t[0], t[1], t[2]);
    let l0 = orient(p, t[1], t[2]) / d;
    let l1 = orient(t[0], p, t[2]) / d;
    [l0, l1, 1.0 - l0 - l1]
}

/// Closed point-in-triangle test with a relative tolerance on the barycentric
/// coordinates.
pub fn point_in_triangle(p: Point2, t: &[Point2; 3], tol: f64) -> bool {
    barycentric(p, t).iter().all(|&l| l >= -tol)
}

pub fn triangle_angles(t: &[Point2; 3]) -> [f64; 3] {
    let mut out = [0.0; 3];
    for k in 0..3 {
        let a = t[k];
        let b = t[(k + 1) % 3];
        let c = t[(k + 2) % 3];
        let u = b - a;
        let v = c - a;
        out[k] = u.cross(v).abs().atan2(u.dot(v));
    }
    out
}

pub fn triangle_diameter(t: &[Point2; 3]) -> f64 {
    t[0].dist(t[1]).max(t[1].dist(t[2])).max(t[2].dist(t[0]))
}

pub fn triangle_aabb(t: &[Point2; 3]) -> AABB<[f64; 2]> {
    let lo = [
        t[0].x.min(t[1].x).min(t[2].x),
        t[0].y.min(t[1].y).min(t[2].y),
    ];
    let hi = [
        t[0].x.max(t[1].x).max(t[2].x),
        t[0].y.max(t[1].y).max(t[2].y),
    ];
    AABB::from_corners(lo, hi)
}

pub fn segment_aabb(a: Point2, b: Point2) -> AABB<[f64; 2]> {
    AABB::from_corners([a.x.min(b.x), a.y.min(b.y)], [a.x.max(b.x), a.y.max(b.y)])
}

/// Shoelace area of a simple polygon (positive for counterclockwise order).
pub fn polygon_area(poly: &[Point2]) -> f64 {
    if poly.len() < 3 {
        return 0.0;
    }
    let mut s = 0.0;
    for i in 0..poly.len() {
        s += poly[i].cross(poly[(i + 1) % poly.len()]);
    }
    0.5 * s
}

/// Clip a convex polygon against the closed half-plane to the left of `a -> b`.
fn clip_halfplane(poly: &[Point2], a: Point2, b: Point2, out: &mut Vec<Point2>) {
    out.clear();
    let n = poly.len();
    if n == 0 {
        return;
    }
    for i in 0..n {
        let p = poly[i];
        let q = poly[(i + 1) % n];
        let dp = orient(a, b, p);
        let dq = orient(a, b, q);
        if dp >= 0.0 {
            out.push(p);
        }
        if (dp > 0.0 && dq < 0.0) || (dp < 0.0 && dq > 0.0) {
            let t = dp / (dp - dq);
            out.push(p.lerp(q, t));
        }
    }
}

/// Intersection of two counterclockwise triangles as a convex polygon.
///
/// Successive half-plane clipping of `t1` by the three edges of `t2`. The
/// result is counterclockwise and may be empty or degenerate (zero area).
pub fn clip_triangles(t1: &[Point2; 3], t2: &[Point2; 3]) -> Vec<Point2> {
    let mut poly: Vec<Point2> = t1.to_vec();
    let mut scratch = Vec::with_capacity(9);
    for k in 0..3 {
        clip_halfplane(&poly, t2[k], t2[(k + 1) % 3], &mut scratch);
        std::mem::swap(&mut poly, &mut scratch);
        if poly.is_empty() {
            break;
        }
    }
    if poly.len() < 3 {
        poly.clear();
    }
    poly
}

/// Integrate `f` over a convex polygon by fan triangulation and the
/// three-edge-midpoint rule, which is exact for quadratic polynomials.
pub fn integrate_polygon<F: Fn(Point2) -> f64>(poly: &[Point2], f: F) -> f64 {
    if poly.len() < 3 {
        return 0.0;
    }
    let p0 = poly[0];
    let mut total = 0.0;
    for k in 1..poly.len() - 1 {
        let p1 = poly[k];
        let p2 = poly[k + 1];
        let area = 0.5 * orient(p0, p1, p2);
        if area == 0.0 {
            continue;
        }
        let m01 = p0.lerp(p1, 0.5);
        let m12 = p1.lerp(p2, 0.5);
        let m20 = p2.lerp(p0, 0.5);
        total += area * (f(m01) + f(m12) + f(m20)) / 3.0;
    }
    total
}

/// Does the segment `a-b` meet the open interior of the counterclockwise
/// triangle `t`?
///
/// The segment parameter interval strictly inside all three edge half-planes
/// is computed (Liang-Barsky); points closer than `tol` (absolute) to an edge
/// line count as outside.
pub fn segment_meets_open_triangle(a: Point2, b: Point2, t: &[Point2; 3], tol: f64) -> bool {
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    for k in 0..3 {
        let p = t[k];
        let q = t[(k + 1) % 3];
        let len = p.dist(q);
        // signed distance to edge line, positive inside
        let da = orient(p, q, a) / len - tol;
        let db = orient(p, q, b) / len - tol;
        if da <= 0.0 && db <= 0.0 {
            return false;
        }
        if da < 0.0 || db < 0.0 {
            let s = da / (da - db);
            if da < 0.0 {
                lo = lo.max(s);
            } else {
                hi = hi.min(s);
            }
        }
        if lo >= hi {
            return false;
        }
    }
    hi - lo > 0.0
}

/// Does the segment `a-b` meet the closed triangle `t` (with absolute
/// tolerance `tol` toward the outside)?
pub fn segment_meets_closed_triangle(a: Point2, b: Point2, t: &[Point2; 3], tol: f64) -> bool {
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    for k in 0..3 {
        let p = t[k];
        let q = t[(k + 1) % 3];
        let len = p.dist(q);
        let da = orient(p, q, a) / len + tol;
        let db = orient(p, q, b) / len + tol;
        if da < 0.0 && db < 0.0 {
            return false;
        }
        if da < 0.0 || db < 0.0 {
            let s = da / (da - db);
            if da < 0.0 {
                lo = lo.max(s);
            } else {
                hi = hi.min(s);
            }
        }
        if lo > hi {
            return false;
        }
    }
    true
}

/// Is `p` strictly inside the segment `a-b` (not at an endpoint), within
/// tolerance `tol` relative to the segment length?
pub fn point_on_open_segment(p: Point2, a: Point2, b: Point2, tol: f64) -> bool {
    let ab = b - a;
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return false;
    }
    let len = len2.sqrt();
    if (ab.cross(p - a) / len).abs() > tol * len {
        return false;
    }
    let t = ab.dot(p - a) / len2;
    t > tol && t < 1.0 - tol
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tri(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> [Point2; 3] {
        [
            Point2::new(a.0, a.1),
            Point2::new(b.0, b.1),
            Point2::new(c.0, c.1),
        ]
    }

    #[test]
    fn clip_identical_triangles() {
        let t = tri((0.0, 0.0), (1.0, 0.0), (0.0, 1.0));
        let p = clip_triangles(&t, &t);
        assert!((polygon_area(&p) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn clip_disjoint_triangles() {
        let t1 = tri((0.0, 0.0), (1.0, 0.0), (0.0, 1.0));
        let t2 = tri((2.0, 2.0), (3.0, 2.0), (2.0, 3.0));
        assert_eq!(polygon_area(&clip_triangles(&t1, &t2)), 0.0);
    }

    #[test]
    fn clip_shifted_unit_triangle() {
        // overlap is the triangle (1/2,0),(1,0),(1/2,1/2): area 1/8
        let t1 = tri((0.0, 0.0), (1.0, 0.0), (0.0, 1.0));
        let t2 = tri((0.5, 0.0), (1.5, 0.0), (0.5, 1.0));
        let p = clip_triangles(&t1, &t2);
        assert!((polygon_area(&p) - 0.125).abs() < 1e-15);
    }

    #[test]
    fn midpoint_rule_is_exact_for_quadratics() {
        // int_T x*y over the reference triangle = 1/24
        let t = tri((0.0, 0.0), (1.0, 0.0), (0.0, 1.0));
        let v = integrate_polygon(&t, |p| p.x * p.y);
        assert!((v - 1.0 / 24.0).abs() < 1e-15);
        let v = integrate_polygon(&t, |p| p.x * p.x);
        assert!((v - 1.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn open_and_closed_segment_tests() {
        let t = tri((0.0, 0.0), (1.0, 0.0), (0.0, 1.0));
        // along an edge: touches the closed triangle, misses the interior
        let a = Point2::new(0.0, 0.0);
        let b = Point2::new(1.0, 0.0);
        assert!(!segment_meets_open_triangle(a, b, &t, 1e-12));
        assert!(segment_meets_closed_triangle(a, b, &t, 1e-12));
        // crossing
        let a = Point2::new(-1.0, 0.25);
        let b = Point2::new(2.0, 0.25);
        assert!(segment_meets_open_triangle(a, b, &t, 1e-12));
        // outside
        let a = Point2::new(1.0, 1.0);
        let b = Point2::new(2.0, 1.0);
        assert!(!segment_meets_closed_triangle(a, b, &t, 1e-12));
    }

    #[test]
    fn angles_of_right_isoceles() {
        let t = tri((0.0, 0.0), (1.0, 0.0), (0.0, 1.0));
        let a = triangle_angles(&t);
        assert!((a[0].to_degrees() - 90.0).abs() < 1e-12);
        assert!((a[1].to_degrees() - 45.0).abs() < 1e-12);
    }
}
