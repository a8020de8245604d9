use std::cell::RefCell;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use super::smoother::{Smoother, SmootherKind, DEFAULT_DAMPING};
use crate::error::LinalgError;
use crate::hierarchy::AuxHierarchy;
use crate::mesh::BoundaryKind;
use crate::sparse::{CsrMatrix, LinearOperator, SpdFactor};

/// Where the near-boundary subsystem solve sits inside a cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NearCorrection {
    Off,
    /// Once, between the coarse correction and post-smoothing.
    AfterCoarse,
    /// Before and after the coarse correction, which keeps the cycle symmetric.
    Symmetric,
}

impl FromStr for NearCorrection {
    type Err = LinalgError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "off" | "none" => Ok(NearCorrection::Off),
            "after-coarse" | "after" => Ok(NearCorrection::AfterCoarse),
            "symmetric" => Ok(NearCorrection::Symmetric),
            other => Err(LinalgError::Config(format!("unknown near-boundary placement '{other}'"))),
        }
    }
}

impl fmt::Display for NearCorrection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NearCorrection::Off => "off",
            NearCorrection::AfterCoarse => "after-coarse",
            NearCorrection::Symmetric => "symmetric",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MgOptions {
    pub smoother: SmootherKind,
    pub damping: f64,
    /// Pre- and post-smoothing sweeps.
    pub nu: usize,
    pub near: NearCorrection,
}

impl Default for MgOptions {
    fn default() -> Self {
        MgOptions {
            smoother: SmootherKind::SymmetricGaussSeidel,
            damping: DEFAULT_DAMPING,
            nu: 2,
            near: NearCorrection::Off,
        }
    }
}

impl MgOptions {
    /// Near-boundary correction on for Neumann and mixed problems.
    pub fn for_kind(kind: BoundaryKind, placement: NearCorrection) -> MgOptions {
        MgOptions {
            near: if kind == BoundaryKind::Dirichlet {
                NearCorrection::Off
            } else {
                placement
            },
            ..MgOptions::default()
        }
    }
}

#[derive(Debug, Clone)]
struct MgLevel {
    a: CsrMatrix,
    /// Prolongation from the next coarser level.
    p: Option<CsrMatrix>,
    smoother: Smoother,
    near: Option<(Vec<usize>, SpdFactor)>,
}

/// V-cycle multigrid over a nested or non-nested level sequence, with an
/// exact solve on the coarsest level and restriction by the transpose of
/// the prolongation.
#[derive(Debug)]
pub struct Multigrid {
    levels: Vec<MgLevel>,
    coarse: SpdFactor,
    options: MgOptions,
    work: RefCell<Vec<Vec<f64>>>,
}

impl Multigrid {
    /// `matrices[0]` is the coarsest; `prolongations[k]` maps level `k` to
    /// `k + 1`; `near[k]` are the near-boundary dofs of level `k`.
    pub fn from_parts(
        matrices: Vec<CsrMatrix>,
        prolongations: Vec<CsrMatrix>,
        near: Vec<Vec<usize>>,
        options: MgOptions,
    ) -> Result<Multigrid, LinalgError> {
        let n = matrices.len();
        if n == 0 || prolongations.len() + 1 != n || near.len() != n {
            return Err(LinalgError::DimensionMismatch(format!(
                "{n} levels, {} prolongations, {} near sets",
                prolongations.len(),
                near.len()
            )));
        }
        for (k, p) in prolongations.iter().enumerate() {
            if p.ncols() != matrices[k].nrows() || p.nrows() != matrices[k + 1].nrows() {
                return Err(LinalgError::DimensionMismatch(format!(
                    "prolongation {k} is {}x{} between levels of size {} and {}",
                    p.nrows(),
                    p.ncols(),
                    matrices[k].nrows(),
                    matrices[k + 1].nrows()
                )));
            }
        }
        let coarse = SpdFactor::new(&matrices[0])?;
        let mut levels = Vec::with_capacity(n);
        let mut prolong = prolongations.into_iter();
        for (k, (a, j)) in matrices.into_iter().zip(near).enumerate() {
            let p = if k == 0 { None } else { prolong.next() };
            let near = if k > 0 && options.near != NearCorrection::Off && !j.is_empty() {
                let f = SpdFactor::restricted(&a, &j).map_err(|e| match e {
                    LinalgError::NotPositiveDefinite { row, pivot } => LinalgError::Config(format!(
                        "near-boundary block of level {k} is indefinite at row {row} (pivot {pivot:e})"
                    )),
                    e => e,
                })?;
                Some((j, f))
            } else {
                None
            };
            let smoother = if a.nrows() == 0 {
                Smoother::new(&CsrMatrix::identity(0), options.smoother, options.damping)?
            } else {
                Smoother::new(&a, options.smoother, options.damping)?
            };
            levels.push(MgLevel { a, p, smoother, near });
        }
        let work = RefCell::new(vec![Vec::new(); n]);
        Ok(Multigrid {
            levels,
            coarse,
            options,
            work,
        })
    }

    pub fn from_hierarchy(h: &AuxHierarchy, options: MgOptions) -> Result<Multigrid, LinalgError> {
        Self::from_parts(
            h.levels.iter().map(|l| l.matrix.clone()).collect(),
            h.prolongations.clone(),
            h.levels.iter().map(|l| l.near.clone()).collect(),
            options,
        )
    }

    pub fn n_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn options(&self) -> &MgOptions {
        &self.options
    }

    pub fn matrix(&self, level: usize) -> &CsrMatrix {
        &self.levels[level].a
    }

    pub fn finest_matrix(&self) -> &CsrMatrix {
        &self.levels.last().expect("at least one level").a
    }

    /// Number of levels that carry a near-boundary factor.
    pub fn near_levels(&self) -> usize {
        self.levels.iter().filter(|l| l.near.is_some()).count()
    }

    pub fn storage_bytes(&self) -> usize {
        self.coarse.storage_bytes()
            + self
                .levels
                .iter()
                .map(|l| {
                    l.a.storage_bytes()
                        + l.p.as_ref().map_or(0, CsrMatrix::storage_bytes)
                        + l.near.as_ref().map_or(0, |(j, f)| f.storage_bytes() + 8 * j.len())
                })
                .sum::<usize>()
    }

    /// One cycle on `level` for `A u = f` from the zero initial guess.
    pub fn cycle(&self, level: usize, f: &[f64], u: &mut [f64]) {
        u.iter_mut().for_each(|x| *x = 0.0);
        self.cycle_inner(level, f, u);
    }

    fn cycle_inner(&self, level: usize, f: &[f64], u: &mut [f64]) {
        if level == 0 {
            self.coarse.solve_into(f, u);
            return;
        }
        let lv = &self.levels[level];
        let nu = self.options.nu;
        let mut scratch = std::mem::take(&mut self.work.borrow_mut()[level]);
        lv.smoother.pre(&lv.a, u, f, nu, &mut scratch);
        if self.options.near == NearCorrection::Symmetric {
            self.near_correct(lv, u, f, &mut scratch);
        }
        // coarse correction
        scratch.resize(u.len(), 0.0);
        lv.a.residual(f, u, &mut scratch);
        let p = lv.p.as_ref().expect("non-coarsest level has a prolongation");
        let mut rc = vec![0.0; p.ncols()];
        p.spmv_transpose_into(&scratch, &mut rc);
        let mut ec = vec![0.0; p.ncols()];
        self.cycle_inner(level - 1, &rc, &mut ec);
        p.spmv_add(1.0, &ec, u);
        if self.options.near != NearCorrection::Off {
            self.near_correct(lv, u, f, &mut scratch);
        }
        lv.smoother.post(&lv.a, u, f, nu, &mut scratch);
        self.work.borrow_mut()[level] = scratch;
    }

    fn near_correct(&self, lv: &MgLevel, u: &mut [f64], f: &[f64], scratch: &mut Vec<f64>) {
        let Some((idx, factor)) = &lv.near else { return };
        let mut r = Vec::with_capacity(idx.len());
        for &i in idx {
            let (c, v) = lv.a.row(i);
            let s: f64 = c.iter().zip(v).map(|(&j, &a)| a * u[j]).sum();
            r.push(f[i] - s);
        }
        scratch.resize(idx.len(), 0.0);
        factor.solve_into(&r, &mut scratch[..idx.len()]);
        for (k, &i) in idx.iter().enumerate() {
            u[i] += scratch[k];
        }
    }

    /// Stationary iteration `u <- u + B (f - A u)` on the finest level.
    pub fn iterate(&self, f: &[f64], u: &mut [f64]) {
        let top = self.levels.len() - 1;
        let a = &self.levels[top].a;
        let mut r = vec![0.0; u.len()];
        a.residual(f, u, &mut r);
        let mut e = vec![0.0; u.len()];
        self.cycle(top, &r, &mut e);
        for (x, d) in u.iter_mut().zip(&e) {
            *x += d;
        }
    }
}

/// `cycles` multigrid cycles on the finest level from zero, as an operator.
#[derive(Debug)]
pub struct CycleOperator<'a> {
    pub mg: &'a Multigrid,
    pub cycles: usize,
}

impl LinearOperator for CycleOperator<'_> {
    fn dim(&self) -> usize {
        self.mg.finest_matrix().nrows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let top = self.mg.n_levels() - 1;
        self.mg.cycle(top, x, y);
        for _ in 1..self.cycles {
            self.mg.iterate(x, y);
        }
    }
}

impl LinearOperator for Multigrid {
    fn dim(&self) -> usize {
        self.finest_matrix().nrows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.cycle(self.levels.len() - 1, x, y);
    }
}
