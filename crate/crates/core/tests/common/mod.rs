//! Helpers shared by the integration tests. Everything here is a
//! deliberately naive reference implementation.
#![allow(dead_code)]

use asmg::sparse::CsrMatrix;
use asmg::{Point2, TriMesh};
use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_vec(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

pub fn mean_free(mut v: Vec<f64>) -> Vec<f64> {
    let m = v.iter().sum::<f64>() / v.len().max(1) as f64;
    v.iter_mut().for_each(|x| *x -= m);
    v
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn dense(a: &CsrMatrix) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(a.nrows(), a.ncols());
    for i in 0..a.nrows() {
        let (c, v) = a.row(i);
        for (&j, &x) in c.iter().zip(v) {
            m[(i, j)] += x;
        }
    }
    m
}

/// Sorted eigenvalues of a symmetric dense matrix.
pub fn sym_eigenvalues(m: DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Largest eigenvalue modulus of a general dense matrix.
pub fn spectral_radius(m: DMatrix<f64>) -> f64 {
    m.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Twice the signed area by the shoelace formula.
pub fn shoelace(poly: &[Point2]) -> f64 {
    let n = poly.len();
    (0..n)
        .map(|i| {
            let (p, q) = (poly[i], poly[(i + 1) % n]);
            p.x * q.y - q.x * p.y
        })
        .sum::<f64>()
}

/// Barycentric coordinates by Cramer's rule.
pub fn bary(p: Point2, t: &[Point2; 3]) -> [f64; 3] {
    let det = (t[1].x - t[0].x) * (t[2].y - t[0].y) - (t[2].x - t[0].x) * (t[1].y - t[0].y);
    let l1 = ((p.x - t[0].x) * (t[2].y - t[0].y) - (t[2].x - t[0].x) * (p.y - t[0].y)) / det;
    let l2 = ((t[1].x - t[0].x) * (p.y - t[0].y) - (p.x - t[0].x) * (t[1].y - t[0].y)) / det;
    [1.0 - l1 - l2, l1, l2]
}

/// Value at `p` of the P1 function with vertex values `vals`, by a linear
/// scan over all triangles; zero outside the mesh.
pub fn eval_scan(mesh: &TriMesh, vals: &[f64], p: Point2) -> f64 {
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let l = bary(p, &mesh.triangle_points(t));
        if l.iter().all(|&x| x >= -1e-12) {
            return (0..3).map(|k| l[k] * vals[tri[k]]).sum();
        }
    }
    0.0
}

/// Vertices on edges that belong to exactly one triangle.
pub fn boundary_vertices(mesh: &TriMesh) -> Vec<bool> {
    let mut count = std::collections::HashMap::new();
    for t in mesh.triangles() {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            *count.entry((a.min(b), a.max(b))).or_insert(0) += 1;
        }
    }
    let mut flag = vec![false; mesh.n_vertices()];
    for ((a, b), c) in count {
        if c == 1 {
            flag[a] = true;
            flag[b] = true;
        }
    }
    flag
}
