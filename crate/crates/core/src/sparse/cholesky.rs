//! Envelope Cholesky factorization under a reverse Cuthill-McKee ordering.

use std::collections::VecDeque;

use super::CsrMatrix;
use crate::error::LinalgError;

/// Pivots below this fraction of the original diagonal are treated as a
/// null direction of a semidefinite matrix.
const PIN_TOL: f64 = 1e-10;
/// Pivots below `-NEG_TOL * a_ii` mean the matrix is indefinite.
const NEG_TOL: f64 = 1e-8;

/// Reverse Cuthill-McKee ordering of the symmetric pattern of `a`.
/// `perm[k]` is the original index placed at position `k`.
pub fn reverse_cuthill_mckee(a: &CsrMatrix) -> Vec<usize> {
    let n = a.nrows();
    let degree: Vec<usize> = (0..n)
        .map(|i| a.row(i).0.iter().filter(|&&j| j != i).count())
        .collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut nbrs: Vec<usize> = Vec::new();
    let bfs = |start: usize, visited: &mut Vec<bool>, out: &mut Vec<usize>, nbrs: &mut Vec<usize>| {
        let first = out.len();
        let mut queue = VecDeque::from([start]);
        visited[start] = true;
        while let Some(v) = queue.pop_front() {
            out.push(v);
            nbrs.clear();
            nbrs.extend(a.row(v).0.iter().copied().filter(|&j| j != v && !visited[j]));
            nbrs.sort_unstable_by_key(|&j| (degree[j], j));
            for &j in nbrs.iter() {
                visited[j] = true;
                queue.push_back(j);
            }
        }
        first
    };
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_unstable_by_key(|&i| (degree[i], i));
    for &seed in &by_degree {
        if visited[seed] {
            continue;
        }
        // pseudo-peripheral start: last vertex of a trial BFS, tried twice
        let mut start = seed;
        for _ in 0..2 {
            let mut trial_visited = visited.clone();
            let mut trial = Vec::new();
            bfs(start, &mut trial_visited, &mut trial, &mut nbrs);
            let last = *trial.last().expect("bfs visits its start");
            if last == start {
                break;
            }
            start = last;
        }
        bfs(start, &mut visited, &mut order, &mut nbrs);
    }
    order.reverse();
    order
}

/// Cholesky factor `P A P^T = L L^T` of a symmetric positive (semi)definite
/// matrix. Null directions found during elimination are grounded: the
/// corresponding unknown is fixed to zero, which yields a symmetric
/// generalized inverse.
#[derive(Debug, Clone)]
pub struct SpdFactor {
    perm: Vec<usize>,
    lower: CsrMatrix,
    pinned: Vec<bool>,
}

impl SpdFactor {
    pub fn new(a: &CsrMatrix) -> Result<SpdFactor, LinalgError> {
        if a.nrows() != a.ncols() {
            return Err(LinalgError::DimensionMismatch(format!(
                "cholesky of a {}x{} matrix",
                a.nrows(),
                a.ncols()
            )));
        }
        let n = a.nrows();
        let perm = reverse_cuthill_mckee(a);
        let mut inv = vec![0; n];
        for (k, &i) in perm.iter().enumerate() {
            inv[i] = k;
        }
        // envelope of the permuted lower triangle
        let mut first = (0..n).collect::<Vec<usize>>();
        for (k, &i) in perm.iter().enumerate() {
            for &j in a.row(i).0 {
                first[k] = first[k].min(inv[j]);
            }
        }
        let mut start = vec![0usize; n + 1];
        for k in 0..n {
            start[k + 1] = start[k] + (k - first[k] + 1);
        }
        let mut env = vec![0.0f64; start[n]];
        for (k, &i) in perm.iter().enumerate() {
            let (c, v) = a.row(i);
            for (&j, &x) in c.iter().zip(v) {
                let kj = inv[j];
                if kj <= k {
                    env[start[k] + kj - first[k]] = x;
                }
            }
        }
        let orig_diag: Vec<f64> = (0..n).map(|k| env[start[k] + k - first[k]]).collect();
        let mut pinned = vec![false; n];
        for k in 0..n {
            let fk = first[k];
            for j in fk..k {
                let fj = first[j];
                let lo = fk.max(fj);
                let s: f64 = (lo..j)
                    .map(|m| env[start[k] + m - fk] * env[start[j] + m - fj])
                    .sum();
                let idx = start[k] + j - fk;
                env[idx] = if pinned[j] {
                    0.0
                } else {
                    (env[idx] - s) / env[start[j] + j - fj]
                };
            }
            let s: f64 = (fk..k).map(|m| env[start[k] + m - fk].powi(2)).sum();
            let d = env[start[k] + k - fk] - s;
            let scale = orig_diag[k].abs();
            if d <= PIN_TOL * scale || scale == 0.0 {
                if d < -NEG_TOL * scale || (scale == 0.0 && d < 0.0) {
                    return Err(LinalgError::NotPositiveDefinite { row: perm[k], pivot: d });
                }
                pinned[k] = true;
                for m in fk..k {
                    env[start[k] + m - fk] = 0.0;
                }
                env[start[k] + k - fk] = 1.0;
            } else {
                env[start[k] + k - fk] = d.sqrt();
            }
        }
        // compress the envelope to CSR, dropping exact zeros
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for k in 0..n {
            for j in first[k]..=k {
                let x = env[start[k] + j - first[k]];
                if x != 0.0 {
                    col_idx.push(j);
                    values.push(x);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Ok(SpdFactor {
            perm,
            lower: CsrMatrix::from_parts_unchecked(n, n, row_ptr, col_idx, values),
            pinned,
        })
    }

    /// Factor the principal submatrix of `a` on the sorted index set `idx`.
    pub fn restricted(a: &CsrMatrix, idx: &[usize]) -> Result<SpdFactor, LinalgError> {
        Self::new(&a.principal_submatrix(idx))
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    pub fn lower_factor(&self) -> &CsrMatrix {
        &self.lower
    }

    /// Number of grounded null directions.
    pub fn pinned_count(&self) -> usize {
        self.pinned.iter().filter(|&&p| p).count()
    }

    pub fn storage_bytes(&self) -> usize {
        self.lower.storage_bytes() + self.perm.len() * std::mem::size_of::<usize>()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; b.len()];
        self.solve_into(b, &mut x);
        x
    }

    pub fn solve_into(&self, b: &[f64], x: &mut [f64]) {
        let n = self.dim();
        assert!(b.len() == n && x.len() == n);
        let mut y: Vec<f64> = self.perm.iter().map(|&i| b[i]).collect();
        let l = &self.lower;
        for k in 0..n {
            let (c, v) = l.row(k);
            let (diag, off) = v.split_last().expect("factor rows hold the diagonal");
            let s: f64 = c[..off.len()].iter().zip(off).map(|(&j, &a)| a * y[j]).sum();
            y[k] = if self.pinned[k] { 0.0 } else { (y[k] - s) / diag };
        }
        for k in (0..n).rev() {
            let (c, v) = l.row(k);
            let (diag, off) = v.split_last().expect("factor rows hold the diagonal");
            y[k] = if self.pinned[k] { 0.0 } else { y[k] / diag };
            let xk = y[k];
            for (&j, &a) in c[..off.len()].iter().zip(off) {
                y[j] -= a * xk;
            }
        }
        for (k, &i) in self.perm.iter().enumerate() {
            x[i] = y[k];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_solve() {
        let f = SpdFactor::new(&CsrMatrix::from_diagonal(&[1.0, 2.0, 3.0])).unwrap();
        for x in f.solve(&[1.0, 2.0, 3.0]) {
            assert!((x - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn two_by_two_hand_solve() {
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 0, 2.0), (0, 1, -1.0), (1, 0, -1.0), (1, 1, 2.0)]);
        let x = SpdFactor::new(&a).unwrap().solve(&[1.0, 0.0]);
        assert!((x[0] - 2.0 / 3.0).abs() < 1e-15 && (x[1] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn indefinite_matrix_is_rejected() {
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 1, 2.0), (1, 0, 2.0), (1, 1, 1.0)]);
        assert!(matches!(SpdFactor::new(&a), Err(LinalgError::NotPositiveDefinite { .. })));
    }

    #[test]
    fn singular_laplacian_is_grounded() {
        // path graph Laplacian, kernel = constants
        let n = 6;
        let mut t = Vec::new();
        for i in 0..n - 1 {
            t.extend([(i, i, 1.0), (i + 1, i + 1, 1.0), (i, i + 1, -1.0), (i + 1, i, -1.0)]);
        }
        let a = CsrMatrix::from_triplets(n, n, &t);
        let f = SpdFactor::new(&a).unwrap();
        assert_eq!(f.pinned_count(), 1);
        let b = vec![1.0, -2.0, 0.5, 0.5, 1.0, -1.0];
        let x = f.solve(&b);
        let r = a.spmv(&x).unwrap();
        for (p, q) in r.iter().zip(&b) {
            assert!((p - q).abs() < 1e-12);
        }
    }

    #[test]
    fn rcm_is_a_permutation() {
        let a = CsrMatrix::from_triplets(4, 4, &[(0, 3, 1.0), (3, 0, 1.0), (1, 1, 1.0), (2, 2, 1.0)]);
        let mut p = reverse_cuthill_mckee(&a);
        p.sort_unstable();
        assert_eq!(p, vec![0, 1, 2, 3]);
    }
}
