//! Preconditioned conjugate gradients with a Lanczos condition estimate.

use nalgebra::{DMatrix, SymmetricEigen};

use super::{dot, norm2, LinearOperator};
use crate::error::LinalgError;

#[derive(Debug, Clone, Copy)]
pub struct PcgOptions {
    /// Relative residual target `||b - A x|| / ||b||`.
    pub tol: f64,
    pub maxit: usize,
    /// Remove the constant vector from the right-hand side, residuals and
    /// preconditioned residuals (pure Neumann problems).
    pub project_constants: bool,
}

impl Default for PcgOptions {
    fn default() -> Self {
        PcgOptions {
            tol: 1e-8,
            maxit: 500,
            project_constants: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PcgStatus {
    Converged,
    MaxIterations,
}

#[derive(Debug, Clone)]
pub struct PcgReport {
    pub status: PcgStatus,
    pub iterations: usize,
    /// Relative residual norms, starting with 1 for the initial residual.
    pub residual_history: Vec<f64>,
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    /// Extreme eigenvalue estimates of the preconditioned operator.
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub kappa_estimate: f64,
}

impl PcgReport {
    pub fn converged(&self) -> bool {
        self.status == PcgStatus::Converged
    }

    /// Condition estimate from the first `k` iterations.
    pub fn kappa_at(&self, k: usize) -> f64 {
        let (lo, hi) = lanczos_extremes(&self.alphas[..k.min(self.alphas.len())], &self.betas);
        if lo > 0.0 {
            (hi / lo).max(1.0)
        } else {
            f64::INFINITY
        }
    }
}

/// Extreme eigenvalues of the Lanczos tridiagonal matrix assembled from the
/// CG step lengths `alphas` and direction updates `betas`.
fn lanczos_extremes(alphas: &[f64], betas: &[f64]) -> (f64, f64) {
    let m = alphas.len();
    if m == 0 {
        return (1.0, 1.0);
    }
    let mut t = DMatrix::<f64>::zeros(m, m);
    for k in 0..m {
        let mut d = 1.0 / alphas[k];
        if k > 0 {
            d += betas[k - 1] / alphas[k - 1];
        }
        t[(k, k)] = d;
        if k + 1 < m {
            let e = betas[k].sqrt() / alphas[k];
            t[(k, k + 1)] = e;
            t[(k + 1, k)] = e;
        }
    }
    let ev = SymmetricEigen::new(t).eigenvalues;
    let lo = ev.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ev.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

fn remove_mean(v: &mut [f64]) {
    if v.is_empty() {
        return;
    }
    let m = v.iter().sum::<f64>() / v.len() as f64;
    v.iter_mut().for_each(|x| *x -= m);
}

/// Solve `A x = b` by PCG with preconditioner `B`, starting from `x0` (zero
/// when `None`).
pub fn pcg(
    a: &dyn LinearOperator,
    b_op: &dyn LinearOperator,
    rhs: &[f64],
    x0: Option<&[f64]>,
    opts: &PcgOptions,
) -> Result<(Vec<f64>, PcgReport), LinalgError> {
    let n = a.dim();
    if rhs.len() != n || b_op.dim() != n || x0.is_some_and(|x| x.len() != n) {
        return Err(LinalgError::DimensionMismatch(format!(
            "pcg: operator {n}, preconditioner {}, rhs {}",
            b_op.dim(),
            rhs.len()
        )));
    }
    let mut b = rhs.to_vec();
    if opts.project_constants {
        remove_mean(&mut b);
    }
    let bnorm = norm2(&b);
    let mut x = x0.map(|v| v.to_vec()).unwrap_or_else(|| vec![0.0; n]);
    let mut report = PcgReport {
        status: PcgStatus::Converged,
        iterations: 0,
        residual_history: vec![1.0],
        alphas: Vec::new(),
        betas: Vec::new(),
        lambda_min: 1.0,
        lambda_max: 1.0,
        kappa_estimate: 1.0,
    };
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok((x, report));
    }
    let mut r = vec![0.0; n];
    a.apply(&x, &mut r);
    for (ri, bi) in r.iter_mut().zip(&b) {
        *ri = bi - *ri;
    }
    if opts.project_constants {
        remove_mean(&mut r);
    }
    let mut rel = norm2(&r) / bnorm;
    report.residual_history[0] = 1.0;
    let first_rel = rel;
    let scale = |v: f64| if first_rel > 0.0 { v / first_rel } else { 0.0 };
    let mut z = vec![0.0; n];
    let mut q = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut rz_old = 0.0;
    while rel > opts.tol {
        if report.iterations >= opts.maxit {
            report.status = PcgStatus::MaxIterations;
            break;
        }
        b_op.apply(&r, &mut z);
        if opts.project_constants {
            remove_mean(&mut z);
        }
        let rz = dot(&r, &z);
        if rz <= 0.0 || !rz.is_finite() {
            return Err(LinalgError::Breakdown {
                iteration: report.iterations,
                curvature: rz,
            });
        }
        if report.iterations == 0 {
            p.copy_from_slice(&z);
        } else {
            let beta = rz / rz_old;
            report.betas.push(beta);
            for (pi, zi) in p.iter_mut().zip(&z) {
                *pi = zi + beta * *pi;
            }
        }
        rz_old = rz;
        a.apply(&p, &mut q);
        let pq = dot(&p, &q);
        if pq <= 0.0 || !pq.is_finite() {
            return Err(LinalgError::Breakdown {
                iteration: report.iterations,
                curvature: pq,
            });
        }
        let alpha = rz / pq;
        report.alphas.push(alpha);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        if opts.project_constants {
            remove_mean(&mut r);
        }
        report.iterations += 1;
        rel = norm2(&r) / bnorm;
        report.residual_history.push(scale(rel));
    }
    let (lo, hi) = lanczos_extremes(&report.alphas, &report.betas);
    report.lambda_min = lo;
    report.lambda_max = hi;
    report.kappa_estimate = if lo > 0.0 { (hi / lo).max(1.0) } else { f64::INFINITY };
    if opts.project_constants {
        remove_mean(&mut x);
    }
    Ok((x, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::{CsrMatrix, Identity};

    #[test]
    fn identity_converges_in_one_step() {
        let a = CsrMatrix::identity(5);
        let b = vec![1.0, 2.0, 3.0, 4.0, 5.0];
        let (x, rep) = pcg(&a, &Identity(5), &b, None, &PcgOptions::default()).unwrap();
        assert_eq!(rep.iterations, 1);
        assert!((rep.kappa_estimate - 1.0).abs() < 1e-12);
        assert_eq!(rep.residual_history[0], 1.0);
        for (p, q) in x.iter().zip(&b) {
            assert!((p - q).abs() < 1e-14);
        }
    }

    #[test]
    fn two_point_spectrum_kappa() {
        let a = CsrMatrix::from_diagonal(&[1.0, 100.0]);
        let (_, rep) = pcg(&a, &Identity(2), &[1.0, 1.0], None, &PcgOptions::default()).unwrap();
        assert!((rep.kappa_estimate / 100.0 - 1.0).abs() < 0.05);
    }

    #[test]
    fn kappa_grows_monotonically() {
        let d: Vec<f64> = (1..=10).map(|k| k as f64).collect();
        let a = CsrMatrix::from_diagonal(&d);
        let opts = PcgOptions {
            tol: 1e-14,
            ..Default::default()
        };
        let (_, rep) = pcg(&a, &Identity(10), &[1.0; 10], None, &opts).unwrap();
        let ks: Vec<f64> = (1..=rep.iterations).map(|k| rep.kappa_at(k)).collect();
        assert!(ks.windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-12)));
        assert!((ks.last().unwrap() - 10.0).abs() < 1e-6);
    }

    #[test]
    fn maxit_is_reported() {
        let d: Vec<f64> = (1..=10).map(|k| k as f64).collect();
        let a = CsrMatrix::from_diagonal(&d);
        let opts = PcgOptions {
            maxit: 2,
            ..Default::default()
        };
        let (_, rep) = pcg(&a, &Identity(10), &[1.0; 10], None, &opts).unwrap();
        assert_eq!(rep.status, PcgStatus::MaxIterations);
        assert_eq!(rep.iterations, 2);
    }

    #[test]
    fn loose_tolerance_stops_early() {
        let a = CsrMatrix::from_diagonal(&[1.0, 3.0]);
        let opts = PcgOptions {
            tol: 1.0,
            ..Default::default()
        };
        let (_, rep) = pcg(&a, &Identity(2), &[1.0, 1.0], None, &opts).unwrap();
        assert!(rep.iterations <= 1);
    }

    #[test]
    fn indefinite_operator_breaks_down() {
        let a = CsrMatrix::from_diagonal(&[1.0, -1.0]);
        let res = pcg(&a, &Identity(2), &[0.0, 1.0], None, &PcgOptions::default());
        assert!(matches!(res, Err(LinalgError::Breakdown { .. })));
    }
}
