mod common;

use asmg::fem::{evaluate, FeSpace};
use asmg::geometry::{centroid, signed_area};
use asmg::hierarchy::{AuxHierarchy, HierarchyOptions};
use asmg::mesh::{gen_holes_domain, gen_uniform_square, TriangleLocator};
use asmg::transfer::{assemble_transfer, barycentric_functions, choose_dual_elements, dual_basis};
use asmg::{BoundaryKind, Marker, Point2, TriMesh};
use common::*;
use rand::Rng;

#[test]
fn dual_functions_invert_the_local_mass_matrix() {
    let mut r = rng(31);
    for _ in 0..20 {
        let mut t = [0; 3].map(|_| Point2::new(r.random_range(-2.0..2.0), r.random_range(-2.0..2.0)));
        if signed_area(&t) < 0.0 {
            t.swap(1, 2);
        }
        let area = signed_area(&t);
        if area < 1e-3 {
            continue;
        }
        let psi = dual_basis(&t);
        for (i, f) in psi.iter().enumerate() {
            // coefficients in the hat basis are the vertex values
            let c: Vec<f64> = t.iter().map(|p| f.eval(*p)).collect();
            for j in 0..3 {
                // exact P1 mass matrix: area / 12 * (1 + delta_jk)
                let m: f64 = (0..3).map(|k| area / 12.0 * if j == k { 2.0 } else { 1.0 } * c[k]).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((m - want).abs() < 1e-12, "{i} {j}: {m}");
            }
        }
    }
}

#[test]
fn single_triangle_chooses_itself_for_every_node() {
    let v = vec![Point2::new(0.0, 0.0), Point2::new(2.0, 0.0), Point2::new(0.0, 1.0)];
    let m = TriMesh::new(v, vec![[0, 1, 2]], vec![Marker::Neumann; 3]).unwrap();
    let s = FeSpace::new(&m);
    let c = choose_dual_elements(&m, &s);
    assert_eq!(c.element, vec![0, 0, 0]);
    assert_eq!(c.slot, vec![0, 1, 2]);
}

#[test]
fn interior_nodes_choose_lowest_adjacent_triangle() {
    let m = gen_uniform_square(6, BoundaryKind::Dirichlet).unwrap();
    let s = FeSpace::new(&m);
    let c = choose_dual_elements(&m, &s);
    let stars = m.vertex_stars();
    for d in 0..s.ndof() {
        let v = s.vertex(d);
        let free: Vec<usize> = stars[v]
            .iter()
            .copied()
            .filter(|&t| m.triangles()[t].iter().all(|&w| !s.is_constrained(w)))
            .collect();
        let want = free.iter().min().or(stars[v].iter().min()).copied().unwrap();
        assert_eq!(c.element[d], want);
    }
}

/// Stratified sampling of `g` over a triangle: one random point in each of
/// the `k * k` congruent subtriangles.
fn stratified_integral<F: Fn(Point2) -> f64>(t: &[Point2; 3], k: usize, rng: &mut rand_chacha::ChaCha8Rng, g: F) -> f64 {
    let area = signed_area(t);
    let at = |a: f64, b: f64| {
        Point2::new(
            t[0].x + a * (t[1].x - t[0].x) + b * (t[2].x - t[0].x),
            t[0].y + a * (t[1].y - t[0].y) + b * (t[2].y - t[0].y),
        )
    };
    let h = 1.0 / k as f64;
    let mut sum = 0.0;
    let mut count = 0usize;
    for i in 0..k {
        for j in 0..k - i {
            let mut subs = vec![[at(i as f64 * h, j as f64 * h), at((i + 1) as f64 * h, j as f64 * h), at(i as f64 * h, (j + 1) as f64 * h)]];
            if i + j + 1 < k {
                subs.push([
                    at((i + 1) as f64 * h, j as f64 * h),
                    at((i + 1) as f64 * h, (j + 1) as f64 * h),
                    at(i as f64 * h, (j + 1) as f64 * h),
                ]);
            }
            for s in subs {
                let (mut a, mut b): (f64, f64) = (rng.random_range(0.0..1.0), rng.random_range(0.0..1.0));
                if a + b > 1.0 {
                    (a, b) = (1.0 - a, 1.0 - b);
                }
                let p = Point2::new(
                    s[0].x + a * (s[1].x - s[0].x) + b * (s[2].x - s[0].x),
                    s[0].y + a * (s[1].y - s[0].y) + b * (s[2].y - s[0].y),
                );
                sum += g(p);
                count += 1;
            }
        }
    }
    sum * area / count as f64
}

#[test]
fn transfer_rows_match_sampled_integrals() {
    let orig = gen_holes_domain(24, 4, BoundaryKind::Neumann).unwrap();
    let h = AuxHierarchy::build(&orig, HierarchyOptions::default()).unwrap();
    let aux = h.finest();
    let so = FeSpace::new(&orig);
    let (pi, _) = assemble_transfer((&aux.mesh, &aux.space), (&orig, &so));
    let choice = choose_dual_elements(&orig, &so);
    let loc = TriangleLocator::new(&aux.mesh);
    let mut r = rng(32);
    let v = random_vec(aux.ndof(), &mut r);
    let pv = pi.spmv(&v).unwrap();
    for _ in 0..5 {
        let i = r.random_range(0..so.ndof());
        let sigma = orig.triangle_points(choice.element[i]);
        let psi = dual_basis(&sigma)[choice.slot[i] as usize];
        let mc = stratified_integral(&sigma, 1000, &mut r, |p| {
            psi.eval(p) * evaluate(&aux.mesh, &aux.space, &loc, &v, p).unwrap_or(0.0)
        });
        assert!((mc - pv[i]).abs() < 1e-3, "row {i}: {mc} vs {}", pv[i]);
    }
}

#[test]
fn constants_survive_the_reverse_transfer_on_covered_nodes() {
    let orig = gen_holes_domain(24, 4, BoundaryKind::Neumann).unwrap();
    let h = AuxHierarchy::build(&orig, HierarchyOptions::default()).unwrap();
    let aux = h.finest();
    let so = FeSpace::new(&orig);
    let (pit, report) = assemble_transfer((&orig, &so), (&aux.mesh, &aux.space));
    let y = pit.spmv(&vec![1.0; so.ndof()]).unwrap();
    let partial: std::collections::HashSet<usize> = report.partial.iter().copied().collect();
    for (k, v) in y.iter().enumerate() {
        if !partial.contains(&k) {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }
    assert!(report.partial_count() > 0, "aux mesh sticks out of the domain");
}

#[test]
fn round_trip_reproduces_linear_functions_in_the_interior() {
    let orig = gen_holes_domain(24, 4, BoundaryKind::Neumann).unwrap();
    let h = AuxHierarchy::build(&orig, HierarchyOptions::default()).unwrap();
    let aux = h.finest();
    let so = FeSpace::new(&orig);
    let (pi, _) = assemble_transfer((&aux.mesh, &aux.space), (&orig, &so));
    let (pit, report) = assemble_transfer((&orig, &so), (&aux.mesh, &aux.space));
    let g = |p: Point2| 0.7 - 1.5 * p.x + 2.5 * p.y;
    let back = pi.spmv(&pit.spmv(&so.interpolate(&orig, g)).unwrap()).unwrap();
    let partial: std::collections::HashSet<usize> = report.partial.iter().copied().collect();
    let mut checked = 0;
    for i in 0..so.ndof() {
        let (cols, _) = pi.row(i);
        if cols.iter().any(|k| partial.contains(k)) {
            continue;
        }
        checked += 1;
        let p = orig.vertices()[so.vertex(i)];
        assert!((back[i] - g(p)).abs() < 1e-12, "node {i} at {p:?}: {} vs {}", back[i], g(p));
    }
    assert!(checked > so.ndof() / 2);
}

#[test]
fn barycentric_functions_sum_to_one() {
    let t = [Point2::new(0.3, 0.1), Point2::new(1.1, 0.4), Point2::new(0.2, 0.9)];
    let l = barycentric_functions(&t);
    let c = centroid(&t);
    let s: f64 = l.iter().map(|f| f.eval(c)).sum();
    assert!((s - 1.0).abs() < 1e-15);
    for f in &l {
        assert!((f.eval(c) - 1.0 / 3.0).abs() < 1e-15);
    }
}
