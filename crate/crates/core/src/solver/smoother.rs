use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::Serialize;

use crate::error::LinalgError;
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SmootherKind {
    Jacobi,
    GaussSeidel,
    SymmetricGaussSeidel,
}

impl FromStr for SmootherKind {
    type Err = LinalgError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "jacobi" => Ok(SmootherKind::Jacobi),
            "gs" | "gauss-seidel" => Ok(SmootherKind::GaussSeidel),
            "sgs" | "symmetric-gauss-seidel" => Ok(SmootherKind::SymmetricGaussSeidel),
            other => Err(LinalgError::Config(format!("unknown smoother '{other}'"))),
        }
    }
}

impl fmt::Display for SmootherKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SmootherKind::Jacobi => "jacobi",
            SmootherKind::GaussSeidel => "gs",
            SmootherKind::SymmetricGaussSeidel => "sgs",
        })
    }
}

/// Default Jacobi damping.
pub const DEFAULT_DAMPING: f64 = 2.0 / 3.0;

/// Pointwise smoother for one matrix. Pre-smoothing uses forward sweeps and
/// post-smoothing the adjoint (backward) sweeps, so a cycle built from
/// `pre` and `post` is symmetric for every kind.
#[derive(Debug, Clone)]
pub struct Smoother {
    kind: SmootherKind,
    damping: f64,
    inv_diag: Vec<f64>,
}

impl Smoother {
    pub fn new(a: &CsrMatrix, kind: SmootherKind, damping: f64) -> Result<Smoother, LinalgError> {
        let d = a.diagonal();
        if let Some(i) = d.iter().position(|&x| x == 0.0 || !x.is_finite()) {
            return Err(LinalgError::ZeroDiagonal(i));
        }
        if !(damping > 0.0 && damping < 2.0) {
            return Err(LinalgError::Config(format!("damping {damping} outside (0, 2)")));
        }
        Ok(Smoother {
            kind,
            damping,
            inv_diag: d.iter().map(|x| 1.0 / x).collect(),
        })
    }

    pub fn kind(&self) -> SmootherKind {
        self.kind
    }

    pub fn damping(&self) -> f64 {
        self.damping
    }

    /// One damped Jacobi step `u += w D^-1 (f - A u)`.
    pub fn jacobi_sweep(&self, a: &CsrMatrix, u: &mut [f64], f: &[f64], scratch: &mut Vec<f64>) {
        scratch.resize(u.len(), 0.0);
        a.residual(f, u, scratch);
        for i in 0..u.len() {
            u[i] += self.damping * self.inv_diag[i] * scratch[i];
        }
    }

    /// Gauss-Seidel sweep in increasing dof order.
    pub fn forward_sweep(&self, a: &CsrMatrix, u: &mut [f64], f: &[f64]) {
        for i in 0..u.len() {
            self.relax(a, u, f, i);
        }
    }

    /// Gauss-Seidel sweep in decreasing dof order.
    pub fn backward_sweep(&self, a: &CsrMatrix, u: &mut [f64], f: &[f64]) {
        for i in (0..u.len()).rev() {
            self.relax(a, u, f, i);
        }
    }

    #[inline]
    fn relax(&self, a: &CsrMatrix, u: &mut [f64], f: &[f64], i: usize) {
        let (c, v) = a.row(i);
        let mut s = f[i];
        for (&j, &x) in c.iter().zip(v) {
            s -= x * u[j];
        }
        u[i] += s * self.inv_diag[i];
    }

    pub fn pre(&self, a: &CsrMatrix, u: &mut [f64], f: &[f64], sweeps: usize, scratch: &mut Vec<f64>) {
        for _ in 0..sweeps {
            match self.kind {
                SmootherKind::Jacobi => self.jacobi_sweep(a, u, f, scratch),
                SmootherKind::GaussSeidel => self.forward_sweep(a, u, f),
                SmootherKind::SymmetricGaussSeidel => {
                    self.forward_sweep(a, u, f);
                    self.backward_sweep(a, u, f);
                }
            }
        }
    }

    pub fn post(&self, a: &CsrMatrix, u: &mut [f64], f: &[f64], sweeps: usize, scratch: &mut Vec<f64>) {
        for _ in 0..sweeps {
            match self.kind {
                SmootherKind::Jacobi => self.jacobi_sweep(a, u, f, scratch),
                SmootherKind::GaussSeidel => self.backward_sweep(a, u, f),
                SmootherKind::SymmetricGaussSeidel => {
                    self.forward_sweep(a, u, f);
                    self.backward_sweep(a, u, f);
                }
            }
        }
    }
}

/// Worst ratios seen while checking
/// `(1/K) <(D-L) x, x> <= <D x, x> <= 2 <(D-L) x, x>` on random vectors,
/// where `-L` is the strict lower triangle and `K` the largest row length.
#[derive(Debug, Clone, Serialize)]
pub struct GsContinuity {
    pub trials: usize,
    pub k: usize,
    /// Smallest `<D x, x> / ((1/K) <(D-L) x, x>)`, must be at least 1.
    pub lower_ratio: f64,
    /// Largest `<D x, x> / <(D-L) x, x>`, must be at most 2.
    pub upper_ratio: f64,
}

impl GsContinuity {
    pub fn holds(&self) -> bool {
        self.lower_ratio >= 1.0 - 1e-12 && self.upper_ratio <= 2.0 + 1e-12
    }
}

pub fn check_gs_continuity<R: Rng>(a: &CsrMatrix, trials: usize, rng: &mut R) -> GsContinuity {
    let n = a.nrows();
    let k = a.max_row_nnz();
    let mut out = GsContinuity {
        trials,
        k,
        lower_ratio: f64::INFINITY,
        upper_ratio: 0.0,
    };
    let mut x = vec![0.0; n];
    for _ in 0..trials {
        for v in x.iter_mut() {
            *v = rng.random_range(-1.0..1.0);
        }
        let mut d = 0.0;
        let mut dl = 0.0;
        for i in 0..n {
            let (c, v) = a.row(i);
            for (&j, &aij) in c.iter().zip(v) {
                if j == i {
                    d += aij * x[i] * x[i];
                    dl += aij * x[i] * x[i];
                } else if j < i {
                    dl += aij * x[i] * x[j];
                }
            }
        }
        out.lower_ratio = out.lower_ratio.min(d / (dl / k as f64));
        out.upper_ratio = out.upper_ratio.max(d / dl);
    }
    out
}
