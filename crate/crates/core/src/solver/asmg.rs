use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use super::multigrid::{CycleOperator, Multigrid};
use super::smoother::{Smoother, SmootherKind, DEFAULT_DAMPING};
use crate::error::LinalgError;
use crate::sparse::{CsrMatrix, LinearOperator, SpdFactor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// `B = S + T`, with `T` the auxiliary correction.
    Additive,
    /// Smooth, correct on the auxiliary space, smooth with the adjoint.
    Multiplicative,
}

impl FromStr for Mode {
    type Err = LinalgError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "additive" | "add" => Ok(Mode::Additive),
            "multiplicative" | "mult" => Ok(Mode::Multiplicative),
            other => Err(LinalgError::Config(format!("unknown mode '{other}'"))),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Additive => "additive",
            Mode::Multiplicative => "multiplicative",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsmgOptions {
    pub mode: Mode,
    /// Smoother on the original system.
    pub smoother: SmootherKind,
    pub damping: f64,
    /// Smoothing sweeps on the original system per application.
    pub sweeps: usize,
    /// Auxiliary cycles per application.
    pub cycles: usize,
}

impl Default for AsmgOptions {
    fn default() -> Self {
        AsmgOptions {
            mode: Mode::Multiplicative,
            smoother: SmootherKind::SymmetricGaussSeidel,
            damping: DEFAULT_DAMPING,
            sweeps: 1,
            cycles: 1,
        }
    }
}

/// Solver used on the auxiliary space.
#[derive(Debug)]
pub enum AuxSolver {
    Cycles(Multigrid, usize),
    /// Direct factorization of the auxiliary matrix.
    Exact(SpdFactor),
}

impl AuxSolver {
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        match self {
            AuxSolver::Cycles(mg, cycles) => CycleOperator { mg, cycles: *cycles }.apply(x, y),
            AuxSolver::Exact(f) => f.solve_into(x, y),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            AuxSolver::Cycles(mg, _) => mg.dim(),
            AuxSolver::Exact(f) => f.dim(),
        }
    }
}

/// Auxiliary space preconditioner for the original system `A`:
/// `T = Pi Baux Pi^T` combined with a pointwise smoother `S`.
pub struct AsmgPreconditioner<'a> {
    a: &'a CsrMatrix,
    smoother: Option<Smoother>,
    pi: &'a CsrMatrix,
    aux: &'a AuxSolver,
    options: AsmgOptions,
}

impl<'a> AsmgPreconditioner<'a> {
    /// `pi` maps auxiliary coefficients to original ones. `sweeps = 0`
    /// disables the smoother.
    pub fn new(
        a: &'a CsrMatrix,
        pi: &'a CsrMatrix,
        aux: &'a AuxSolver,
        options: AsmgOptions,
    ) -> Result<AsmgPreconditioner<'a>, LinalgError> {
        if pi.nrows() != a.nrows() || pi.ncols() != aux.dim() {
            return Err(LinalgError::DimensionMismatch(format!(
                "transfer is {}x{}, system {} and auxiliary {}",
                pi.nrows(),
                pi.ncols(),
                a.nrows(),
                aux.dim()
            )));
        }
        if options.mode == Mode::Additive && options.smoother == SmootherKind::GaussSeidel && options.sweeps > 0 {
            return Err(LinalgError::Config(
                "additive mode needs a symmetric smoother (jacobi or sgs)".into(),
            ));
        }
        if options.cycles == 0 {
            return Err(LinalgError::Config("at least one auxiliary cycle is needed".into()));
        }
        let smoother = if options.sweeps > 0 {
            Some(Smoother::new(a, options.smoother, options.damping)?)
        } else {
            None
        };
        Ok(AsmgPreconditioner {
            a,
            smoother,
            pi,
            aux,
            options,
        })
    }

    pub fn options(&self) -> &AsmgOptions {
        &self.options
    }

    pub fn transfer(&self) -> &CsrMatrix {
        self.pi
    }

    pub fn aux(&self) -> &AuxSolver {
        self.aux
    }

    /// `y += Pi Baux Pi^T r`.
    fn aux_correction(&self, r: &[f64], y: &mut [f64]) {
        let m = self.pi.ncols();
        let mut ra = vec![0.0; m];
        self.pi.spmv_transpose_into(r, &mut ra);
        let mut ea = vec![0.0; m];
        self.aux.apply(&ra, &mut ea);
        self.pi.spmv_add(1.0, &ea, y);
    }
}

impl LinearOperator for AsmgPreconditioner<'_> {
    fn dim(&self) -> usize {
        self.a.nrows()
    }

    fn apply(&self, r: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        let mut scratch = Vec::new();
        let sweeps = self.options.sweeps;
        match self.options.mode {
            Mode::Additive => {
                if let Some(s) = &self.smoother {
                    s.pre(self.a, y, r, sweeps, &mut scratch);
                }
                self.aux_correction(r, y);
            }
            Mode::Multiplicative => {
                if let Some(s) = &self.smoother {
                    s.pre(self.a, y, r, sweeps, &mut scratch);
                }
                let mut res = vec![0.0; r.len()];
                self.a.residual(r, y, &mut res);
                self.aux_correction(&res, y);
                if let Some(s) = &self.smoother {
                    s.post(self.a, y, r, sweeps, &mut scratch);
                }
            }
        }
    }
}

/// Direct solve with a factorization of `A`, for sanity runs.
pub struct ExactSolve(pub SpdFactor);

impl LinearOperator for ExactSolve {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.0.solve_into(x, y);
    }
}
