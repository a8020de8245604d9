mod common;

use asmg::fem::{assemble_load, assemble_stiffness, FeSpace};
use asmg::mesh::{
    conformity_check, gen_graded_square, gen_holes_domain, gen_uniform_square, quality_report, refine_uniform,
};
use asmg::sparse::{galerkin_project, pcg, CsrMatrix, Identity, PcgOptions, SpdFactor};
use asmg::{BoundaryKind, Marker, Point2, TriMesh};
use common::*;
use rand::Rng;

#[test]
fn uniform_dirichlet_dimensions_follow_the_dyadic_formula() {
    for l in 1..=9u32 {
        let n = 1usize << l;
        let m = gen_uniform_square(n, BoundaryKind::Dirichlet).unwrap();
        assert_eq!(m.n_triangles(), 2 * n * n);
        assert_eq!(FeSpace::new(&m).ndof(), (n - 1) * (n - 1), "level {l}");
    }
}

#[test]
fn graded_corner_spacing_matches_dyadic_geometry() {
    let m = gen_graded_square(4, 3, BoundaryKind::Dirichlet).unwrap();
    conformity_check(&m).unwrap();
    let q = quality_report(&m);
    assert!((q.diameter - 2f64.sqrt()).abs() < 1e-14);
    // finest cells have side 1/32; barycenters of the two triangles of one
    // cell are a third of the cell diagonal apart
    let h = 1.0 / 32.0;
    assert!((q.h_min - h * 2f64.sqrt() / 3.0).abs() < 1e-14, "{}", q.h_min);
    assert!((q.min_angle_deg - 45.0).abs() < 1e-9);
    assert!(q.q_estimate.is_finite());
}

#[test]
fn hole_domain_counts_and_euler_characteristic() {
    let m = gen_holes_domain(16, 1, BoundaryKind::Neumann).unwrap();
    assert_eq!(m.n_triangles(), 2 * 16 * 16 - 8);
    let v = m.n_vertices() as i64;
    let e = m.n_edges() as i64;
    let f = m.n_triangles() as i64;
    assert_eq!(v - e + f, 0);
    let four = gen_holes_domain(32, 4, BoundaryKind::Neumann).unwrap();
    assert_eq!(four.n_vertices() as i64 - four.n_edges() as i64 + four.n_triangles() as i64, 1 - 4);
}

#[test]
fn uniform_refinement_preserves_area_and_conformity() {
    let m = gen_holes_domain(16, 4, BoundaryKind::Mixed).unwrap();
    let r = refine_uniform(&m);
    conformity_check(&r).unwrap();
    assert_eq!(r.n_triangles(), 4 * m.n_triangles());
    assert!((r.total_area() - m.total_area()).abs() < 1e-13);
    assert_eq!(r.boundary_kind(), BoundaryKind::Mixed);
}

/// Element stiffness by the gradient formula of the hat functions.
fn reference_stiffness(mesh: &TriMesh, space: &FeSpace) -> CsrMatrix {
    let mut trip = Vec::new();
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let p = mesh.triangle_points(t);
        let det = (p[1].x - p[0].x) * (p[2].y - p[0].y) - (p[2].x - p[0].x) * (p[1].y - p[0].y);
        let area = det.abs() / 2.0;
        // gradient of the hat of vertex k is the rotated opposite edge over 2 * area
        let grad = |k: usize| {
            let (a, b) = (p[(k + 1) % 3], p[(k + 2) % 3]);
            ((a.y - b.y) / det, (b.x - a.x) / det)
        };
        for a in 0..3 {
            for b in 0..3 {
                if let (Some(i), Some(j)) = (space.dof(tri[a]), space.dof(tri[b])) {
                    let (ga, gb) = (grad(a), grad(b));
                    trip.push((i, j, area * (ga.0 * gb.0 + ga.1 * gb.1)));
                }
            }
        }
    }
    CsrMatrix::from_triplets(space.ndof(), space.ndof(), &trip)
}

#[test]
fn stiffness_matches_gradient_formula_on_all_families() {
    for m in [
        gen_uniform_square(7, BoundaryKind::Dirichlet).unwrap(),
        gen_graded_square(4, 3, BoundaryKind::Neumann).unwrap(),
        gen_holes_domain(16, 4, BoundaryKind::Mixed).unwrap(),
    ] {
        let s = FeSpace::new(&m);
        let a = assemble_stiffness(&m, &s).unwrap();
        assert!(a.max_abs_diff(&reference_stiffness(&m, &s)) < 1e-13);
    }
}

#[test]
fn neumann_stiffness_is_semidefinite_with_constant_kernel() {
    let m = gen_holes_domain(16, 1, BoundaryKind::Neumann).unwrap();
    let m = TriMesh::new(
        // jitter interior vertices so the mesh is genuinely unstructured
        {
            let mut r = rng(11);
            let b = boundary_vertices(&m);
            m.vertices()
                .iter()
                .enumerate()
                .map(|(i, p)| {
                    if b[i] {
                        *p
                    } else {
                        Point2::new(p.x + r.random_range(-0.01..0.01), p.y + r.random_range(-0.01..0.01))
                    }
                })
                .collect()
        },
        m.triangles().to_vec(),
        m.markers().to_vec(),
    )
    .unwrap();
    let s = FeSpace::new(&m);
    let a = assemble_stiffness(&m, &s).unwrap();
    assert!(a.nrows() <= 300);
    let ev = sym_eigenvalues(dense(&a));
    assert!(ev[0].abs() < 1e-12, "{}", ev[0]);
    assert!(ev[1] > 1e-6, "second eigenvalue {}", ev[1]);
    let mut r = rng(12);
    for _ in 0..100 {
        let x = random_vec(a.nrows(), &mut r);
        assert!(dot(&x, &a.spmv(&x).unwrap()) >= 0.0);
    }
}

#[test]
fn unit_load_interior_entry_is_cell_area() {
    for n in [4, 9, 16] {
        let m = gen_uniform_square(n, BoundaryKind::Dirichlet).unwrap();
        let s = FeSpace::new(&m);
        let f = assemble_load(&m, &s, |_| 1.0);
        let h2 = 1.0 / (n * n) as f64;
        for v in f {
            assert!((v - h2).abs() < 1e-15);
        }
    }
}

#[test]
fn nodal_galerkin_coarsening_equals_coarse_assembly() {
    let fine = gen_uniform_square(4, BoundaryKind::Dirichlet).unwrap();
    let coarse = gen_uniform_square(2, BoundaryKind::Dirichlet).unwrap();
    let (sf, sc) = (FeSpace::new(&fine), FeSpace::new(&coarse));
    // nodal interpolation of each coarse hat on the fine vertices
    let cv: Vec<f64> = vec![0.0; coarse.n_vertices()];
    let mut trip = Vec::new();
    for k in 0..sc.ndof() {
        let mut vals = cv.clone();
        vals[sc.vertex(k)] = 1.0;
        for i in 0..sf.ndof() {
            let w = eval_scan(&coarse, &vals, fine.vertices()[sf.vertex(i)]);
            if w.abs() > 1e-15 {
                trip.push((i, k, w));
            }
        }
    }
    let p = CsrMatrix::from_triplets(sf.ndof(), sc.ndof(), &trip);
    let g = galerkin_project(&assemble_stiffness(&fine, &sf).unwrap(), &p).unwrap();
    assert!(g.max_abs_diff(&assemble_stiffness(&coarse, &sc).unwrap()) < 1e-13);
}

#[test]
fn galerkin_product_of_spd_and_full_rank_is_spd() {
    let mut r = rng(13);
    let n = 12;
    let mut trip = Vec::new();
    for i in 0..n {
        trip.push((i, i, 4.0 + r.random_range(0.0..1.0)));
        if i + 1 < n {
            let v = r.random_range(-1.0..1.0);
            trip.push((i, i + 1, v));
            trip.push((i + 1, i, v));
        }
    }
    let a = CsrMatrix::from_triplets(n, n, &trip);
    let ptrip: Vec<_> = (0..n)
        .flat_map(|i| (0..5).map(move |j| (i, j)))
        .map(|(i, j)| (i, j, if i % 5 == j { 1.0 } else { 0.1 * ((i * 7 + j * 3) % 5) as f64 }))
        .collect();
    let p = CsrMatrix::from_triplets(n, 5, &ptrip);
    let g = galerkin_project(&a, &p).unwrap();
    assert!(g.symmetry_defect() < 1e-13);
    assert!(sym_eigenvalues(dense(&g))[0] > 0.0);
}

#[test]
fn direct_solve_reproduces_random_rhs() {
    let m = gen_uniform_square(8, BoundaryKind::Dirichlet).unwrap();
    let a = assemble_stiffness(&m, &FeSpace::new(&m)).unwrap();
    let f = SpdFactor::new(&a).unwrap();
    let b = random_vec(a.nrows(), &mut rng(14));
    let x = f.solve(&b);
    let ax = a.spmv(&x).unwrap();
    for (p, q) in ax.iter().zip(&b) {
        assert!((p - q).abs() < 1e-10);
    }
}

#[test]
fn pcg_condition_estimate_of_two_point_spectrum() {
    let a = CsrMatrix::from_diagonal(&[1.0, 100.0]);
    let (_, rep) = pcg(&a, &Identity(2), &[1.0, 1.0], None, &PcgOptions::default()).unwrap();
    assert!((rep.kappa_estimate / 100.0 - 1.0).abs() < 0.05, "{}", rep.kappa_estimate);
}

#[test]
fn single_interior_dof_solves_in_one_step() {
    let m = gen_uniform_square(2, BoundaryKind::Dirichlet).unwrap();
    let s = FeSpace::new(&m);
    assert_eq!(s.ndof(), 1);
    let a = assemble_stiffness(&m, &s).unwrap();
    let (x, rep) = pcg(&a, &Identity(1), &[1.0], None, &PcgOptions::default()).unwrap();
    assert_eq!(rep.iterations, 1);
    assert!((x[0] * a.get(0, 0) - 1.0).abs() < 1e-14);
}

#[test]
fn two_triangle_square_markers() {
    let v = vec![
        Point2::new(0.0, 0.0),
        Point2::new(1.0, 0.0),
        Point2::new(1.0, 1.0),
        Point2::new(0.0, 1.0),
    ];
    let m = TriMesh::new(v, vec![[0, 1, 2], [0, 2, 3]], vec![Marker::Dirichlet; 4]).unwrap();
    assert_eq!(m.boundary_edges().len(), 4);
    assert_eq!(m.n_edges(), 5);
    assert_eq!(FeSpace::new(&m).ndof(), 0);
}
