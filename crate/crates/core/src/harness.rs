//! Experiment driver: problem setup, preconditioned solves, stationary
//! rates, size sweeps and CSV reports.

use std::fmt;
use std::fs::OpenOptions;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use log::info;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::cluster::{ClusterTree, BoxRegion, DEFAULT_N_MIN};
use crate::error::{Error, LinalgError, MeshError};
use crate::fem::{assemble_system, energy_error, AssembledSystem};
use crate::geometry::Point2;
use crate::hierarchy::{build_box_hierarchy, AuxHierarchy, HierarchyOptions};
use crate::mesh::{barycenters, gen_graded_square, gen_holes_domain, gen_uniform_square, BoundaryKind, TriMesh};
use crate::solver::{
    stationary_rate, AsmgOptions, AsmgPreconditioner, AuxSolver, ExactSolve, MgOptions, Mode, Multigrid,
    NearCorrection, SmootherKind, DEFAULT_DAMPING,
};
use crate::sparse::{pcg, CsrMatrix, PcgOptions, PcgReport, SpdFactor};
use crate::transfer::{assemble_transfer, CoverageReport};

#[derive(Debug, Clone, Serialize)]
pub struct SolverConfig {
    pub n_min: usize,
    pub layers: usize,
    pub smoother: SmootherKind,
    pub damping: f64,
    /// Smoothing sweeps per level in the auxiliary cycles.
    pub nu: usize,
    /// Smoothing sweeps on the original system.
    pub sweeps: usize,
    pub mode: Mode,
    pub cycles: usize,
    /// Placement of the near-boundary solve; ignored for Dirichlet problems.
    pub near: NearCorrection,
    pub tol: f64,
    pub maxit: usize,
    pub seed: u64,
    /// Replace the auxiliary cycles by a direct solve.
    pub exact_aux: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            n_min: DEFAULT_N_MIN,
            layers: 1,
            smoother: SmootherKind::SymmetricGaussSeidel,
            damping: DEFAULT_DAMPING,
            nu: 2,
            sweeps: 1,
            mode: Mode::Multiplicative,
            cycles: 1,
            near: NearCorrection::Symmetric,
            tol: 1e-8,
            maxit: 500,
            seed: 1,
            exact_aux: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), LinalgError> {
        let bad = |m: String| Err(LinalgError::Config(m));
        if self.n_min == 0 {
            return bad("nmin must be at least 1".into());
        }
        if !(self.tol > 0.0) {
            return bad(format!("tol must be positive, got {}", self.tol));
        }
        if self.maxit == 0 {
            return bad("maxit must be at least 1".into());
        }
        if self.cycles == 0 {
            return bad("at least one auxiliary cycle is needed".into());
        }
        if !(self.damping > 0.0 && self.damping < 2.0) {
            return bad(format!("damping {} outside (0, 2)", self.damping));
        }
        if self.mode == Mode::Additive && self.smoother == SmootherKind::GaussSeidel {
            return bad("additive mode needs a symmetric smoother (jacobi or sgs)".into());
        }
        Ok(())
    }

    fn mg_options(&self, kind: BoundaryKind) -> MgOptions {
        MgOptions {
            smoother: self.smoother,
            damping: self.damping,
            nu: self.nu,
            ..MgOptions::for_kind(kind, self.near)
        }
    }

    fn asmg_options(&self) -> AsmgOptions {
        AsmgOptions {
            mode: self.mode,
            smoother: self.smoother,
            damping: self.damping,
            sweeps: self.sweeps,
            cycles: self.cycles,
        }
    }
}

/// Right-hand side of `-laplace u = f`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Rhs {
    /// `f = 1`.
    One,
    /// `u = sin(pi x) sin(pi y)`, so that true energy errors can be reported.
    Manufactured,
}

impl Rhs {
    pub fn eval(self, p: Point2) -> f64 {
        use std::f64::consts::PI;
        match self {
            Rhs::One => 1.0,
            Rhs::Manufactured => 2.0 * PI * PI * (PI * p.x).sin() * (PI * p.y).sin(),
        }
    }

    fn exact_gradient(self, p: Point2) -> Option<Point2> {
        use std::f64::consts::PI;
        match self {
            Rhs::One => None,
            Rhs::Manufactured => Some(Point2::new(
                PI * (PI * p.x).cos() * (PI * p.y).sin(),
                PI * (PI * p.x).sin() * (PI * p.y).cos(),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct SetupTimings {
    pub assembly: f64,
    pub hierarchy: f64,
    pub transfer: f64,
    pub factor: f64,
}

impl SetupTimings {
    pub fn total(&self) -> f64 {
        self.assembly + self.hierarchy + self.transfer + self.factor
    }
}

/// Everything needed to precondition one problem.
#[derive(Debug)]
pub struct AsmgSetup {
    pub kind: BoundaryKind,
    pub system: AssembledSystem,
    pub hierarchy: AuxHierarchy,
    pub pi: CsrMatrix,
    pub coverage: CoverageReport,
    pub aux: AuxSolver,
    pub timings: SetupTimings,
    pub config: SolverConfig,
}

fn secs(t: Instant) -> f64 {
    t.elapsed().as_secs_f64()
}

impl AsmgSetup {
    pub fn new(mesh: &TriMesh, config: &SolverConfig, rhs: Rhs) -> Result<AsmgSetup, Error> {
        config.validate()?;
        let kind = mesh.boundary_kind();
        let mut timings = SetupTimings::default();

        let t = Instant::now();
        let mut system = assemble_system(mesh, |p| rhs.eval(p))?;
        if kind == BoundaryKind::Neumann {
            project_mean(&mut system.f);
        }
        timings.assembly = secs(t);
        if system.space.ndof() == 0 {
            return Err(MeshError::InvalidParams("the problem has no degrees of freedom".into()).into());
        }

        let t = Instant::now();
        let hierarchy = AuxHierarchy::build(
            mesh,
            HierarchyOptions {
                n_min: config.n_min,
                layers: config.layers,
            },
        )?;
        timings.hierarchy = secs(t);

        let t = Instant::now();
        let fine = hierarchy.finest();
        let (pi, coverage) = assemble_transfer((&fine.mesh, &fine.space), (mesh, &system.space));
        timings.transfer = secs(t);

        let t = Instant::now();
        let aux = if config.exact_aux {
            AuxSolver::Exact(SpdFactor::new(&fine.matrix)?)
        } else {
            AuxSolver::Cycles(
                Multigrid::from_hierarchy(&hierarchy, config.mg_options(kind))?,
                config.cycles,
            )
        };
        timings.factor = secs(t);
        info!(
            "setup: {} dofs, {} aux levels, {} partially covered rows, {:.3}s",
            system.space.ndof(),
            hierarchy.n_levels(),
            coverage.partial_count(),
            timings.total()
        );
        Ok(AsmgSetup {
            kind,
            system,
            hierarchy,
            pi,
            coverage,
            aux,
            timings,
            config: config.clone(),
        })
    }

    pub fn preconditioner(&self) -> Result<AsmgPreconditioner<'_>, LinalgError> {
        AsmgPreconditioner::new(&self.system.a, &self.pi, &self.aux, self.config.asmg_options())
    }

    pub fn ndof(&self) -> usize {
        self.system.space.ndof()
    }

    /// Preconditioned CG from zero.
    pub fn solve(&self) -> Result<(Vec<f64>, PcgReport, f64), LinalgError> {
        let b = self.preconditioner()?;
        let opts = PcgOptions {
            tol: self.config.tol,
            maxit: self.config.maxit,
            project_constants: self.kind == BoundaryKind::Neumann,
        };
        let t = Instant::now();
        let (x, report) = pcg(&self.system.a, &b, &self.system.f, None, &opts)?;
        Ok((x, report, secs(t)))
    }

    /// Geometric-mean residual reduction of the preconditioned stationary
    /// iteration from a seeded random start.
    pub fn stationary_rate(&self, iterations: usize) -> Result<f64, LinalgError> {
        let b = self.preconditioner()?;
        let x0 = self.random_start();
        Ok(stationary_rate(&self.system.a, &b, &x0, iterations, self.singular()))
    }

    /// Rate of the same iteration with an exact solve as preconditioner.
    pub fn exact_rate(&self) -> Result<f64, LinalgError> {
        let b = ExactSolve(SpdFactor::new(&self.system.a)?);
        Ok(stationary_rate(&self.system.a, &b, &self.random_start(), 1, self.singular()))
    }

    /// Whether the system has the constants as null space.
    pub fn singular(&self) -> bool {
        self.kind == BoundaryKind::Neumann
    }

    fn random_start(&self) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        let mut x0: Vec<f64> = (0..self.ndof()).map(|_| rng.random_range(-1.0..1.0)).collect();
        if self.kind == BoundaryKind::Neumann {
            project_mean(&mut x0);
        }
        x0
    }

    /// Bytes of all auxiliary data: level matrices, prolongations, factors
    /// and the transfer matrix.
    pub fn aux_storage_bytes(&self) -> usize {
        let solver = match &self.aux {
            AuxSolver::Cycles(mg, _) => mg.storage_bytes(),
            AuxSolver::Exact(f) => f.storage_bytes(),
        };
        solver + self.pi.storage_bytes()
    }
}

fn project_mean(v: &mut [f64]) {
    if v.is_empty() {
        return;
    }
    let m = v.iter().sum::<f64>() / v.len() as f64;
    v.iter_mut().for_each(|x| *x -= m);
}

/// One line of an experiment report.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentRow {
    pub problem: String,
    pub bc: String,
    pub n_dofs: usize,
    pub n_triangles: usize,
    pub aux_levels: usize,
    pub aux_dofs: usize,
    pub setup_seconds: f64,
    pub hierarchy_seconds: f64,
    pub solve_seconds: f64,
    pub iterations: usize,
    pub converged: bool,
    pub rate: Option<f64>,
    pub kappa: f64,
    pub aux_bytes_per_dof: f64,
    pub storage_ratio: f64,
    pub energy_error: Option<f64>,
    pub mode: Mode,
    pub smoother: SmootherKind,
    pub nu: usize,
    pub layers: usize,
    pub partial_rows: usize,
}

/// Set up and solve one problem, returning the solution and its report row.
pub fn run_solve(
    problem: &str,
    mesh: &TriMesh,
    config: &SolverConfig,
    rhs: Rhs,
    with_rate: bool,
) -> Result<(Vec<f64>, ExperimentRow), Error> {
    let setup = AsmgSetup::new(mesh, config, rhs)?;
    let (x, report, solve_seconds) = setup.solve()?;
    let rate = if with_rate {
        Some(setup.stationary_rate(50)?)
    } else {
        None
    };
    let energy = match rhs {
        Rhs::Manufactured if setup.kind == BoundaryKind::Dirichlet => Some(energy_error(
            mesh,
            &setup.system.space,
            &x,
            |p| rhs.exact_gradient(p).expect("manufactured solution has a gradient"),
        )),
        _ => None,
    };
    let n = setup.ndof();
    let aux_bytes = setup.aux_storage_bytes();
    let row = ExperimentRow {
        problem: problem.to_string(),
        bc: setup.kind.to_string(),
        n_dofs: n,
        n_triangles: mesh.n_triangles(),
        aux_levels: setup.hierarchy.n_levels(),
        aux_dofs: setup.hierarchy.finest().ndof(),
        setup_seconds: setup.timings.total(),
        hierarchy_seconds: setup.timings.hierarchy,
        solve_seconds,
        iterations: report.iterations,
        converged: report.converged(),
        rate,
        kappa: report.kappa_estimate,
        aux_bytes_per_dof: aux_bytes as f64 / n as f64,
        storage_ratio: aux_bytes as f64 / setup.system.a.storage_bytes() as f64,
        energy_error: energy,
        mode: config.mode,
        smoother: config.smoother,
        nu: config.nu,
        layers: config.layers,
        partial_rows: setup.coverage.partial_count(),
    };
    Ok((x, row))
}

/// Append rows to a CSV file, writing the header only into an empty file.
pub fn append_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), Error> {
    let file = OpenOptions::new().create(true).append(true).open(path)?;
    let empty = file.metadata()?.len() == 0;
    let mut w = csv::WriterBuilder::new().has_headers(empty).from_writer(file);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Synthetic mesh families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MeshFamily {
    Square,
    /// Square refined `levels` times towards the lower-left corner.
    Graded { levels: u32 },
    /// Square with `holes` square holes.
    Holes { holes: usize },
}

impl MeshFamily {
    pub fn generate(self, n: usize, bc: BoundaryKind) -> Result<TriMesh, MeshError> {
        match self {
            MeshFamily::Square => gen_uniform_square(n, bc),
            MeshFamily::Graded { levels } => gen_graded_square(n, levels, bc),
            MeshFamily::Holes { holes } => gen_holes_domain(n, holes, bc),
        }
    }
}

impl fmt::Display for MeshFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MeshFamily::Square => write!(f, "square"),
            MeshFamily::Graded { levels } => write!(f, "graded{levels}"),
            MeshFamily::Holes { holes } => write!(f, "holes{holes}"),
        }
    }
}

impl FromStr for MeshFamily {
    type Err = MeshError;

    /// `square`, `graded[:levels]` (default 3) or `holes[:count]` (default 4).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (name, arg) = match s.split_once(':') {
            Some((a, b)) => (a, Some(b)),
            None => (s, None),
        };
        let num = |d: usize| -> Result<usize, MeshError> {
            arg.map_or(Ok(d), |a| {
                a.parse()
                    .map_err(|_| MeshError::InvalidParams(format!("bad count '{a}' in '{s}'")))
            })
        };
        match name {
            "square" => Ok(MeshFamily::Square),
            "graded" => Ok(MeshFamily::Graded { levels: num(3)? as u32 }),
            "holes" => Ok(MeshFamily::Holes { holes: num(4)? }),
            _ => Err(MeshError::InvalidParams(format!(
                "unknown mesh kind '{s}' (square, graded[:levels], holes[:count])"
            ))),
        }
    }
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    linear_fit(&lx, &ly).1
}

/// Least-squares line `y = a + b x`, returning `(a, b, residual norm)`.
pub fn linear_fit_residual(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let (a, b) = linear_fit(x, y);
    let r = x
        .iter()
        .zip(y)
        .map(|(xi, yi)| (yi - a - b * xi).powi(2))
        .sum::<f64>()
        .sqrt();
    (a, b, r)
}

fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let b = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (my - b * mx, b)
}

/// Time for the cluster tree, the balanced box hierarchy and the
/// triangulation of every level.
pub fn box_setup_seconds(mesh: &TriMesh, n_min: usize) -> Result<f64, Error> {
    let t = Instant::now();
    let root = BoxRegion::closed_bounding_square(mesh.vertices())
        .ok_or_else(|| MeshError::InvalidParams("empty mesh".into()))?;
    let clusters = ClusterTree::build_in(&barycenters(mesh), root, n_min);
    let boxes = build_box_hierarchy(&clusters)?;
    let mut total = 0;
    for level in 1..=boxes.depth {
        total += boxes.tree.triangulate(level).triangles.len();
    }
    std::hint::black_box(total);
    Ok(secs(t))
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchSummary {
    pub rows: Vec<ExperimentRow>,
    /// Log-log slope of setup time against dofs.
    pub setup_exponent: f64,
    pub min_iterations: usize,
    pub max_iterations: usize,
    pub max_storage_ratio: f64,
}

/// Solve on a family of meshes of growing size.
pub fn run_bench(
    family: MeshFamily,
    sizes: &[usize],
    bc: BoundaryKind,
    config: &SolverConfig,
) -> Result<BenchSummary, Error> {
    if sizes.len() < 3 {
        return Err(Error::Report("a scaling run needs at least three sizes".into()));
    }
    config.validate()?;
    let mut rows = Vec::new();
    for &n in sizes {
        let mesh = family.generate(n, bc)?;
        let (_, row) = run_solve(&format!("{family}-n{n}"), &mesh, config, Rhs::One, false)?;
        info!("{}: {} dofs, {} iterations", row.problem, row.n_dofs, row.iterations);
        rows.push(row);
    }
    let x: Vec<f64> = rows.iter().map(|r| r.n_dofs as f64).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.setup_seconds.max(1e-9)).collect();
    Ok(BenchSummary {
        setup_exponent: loglog_slope(&x, &y),
        min_iterations: rows.iter().map(|r| r.iterations).min().unwrap_or(0),
        max_iterations: rows.iter().map(|r| r.iterations).max().unwrap_or(0),
        max_storage_ratio: rows.iter().map(|r| r.storage_ratio).fold(0.0, f64::max),
        rows,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct RateRow {
    pub level: usize,
    pub n_dofs: usize,
    pub aux_levels: usize,
    /// Auxiliary levels with a nonempty near-boundary set.
    pub near_levels: usize,
    pub rate: f64,
    /// Same iteration with the near-boundary solve switched off.
    pub rate_without_near: Option<f64>,
    pub diverged: bool,
}

/// Stationary rates on `mesh` and `levels - 1` uniform refinements of it.
pub fn run_rates(mesh: &TriMesh, levels: usize, config: &SolverConfig, iterations: usize) -> Result<Vec<RateRow>, Error> {
    config.validate()?;
    let mut rows = Vec::new();
    let mut current = mesh.clone();
    for level in 0..levels {
        if level > 0 {
            current = crate::mesh::refine_uniform(&current);
        }
        let setup = AsmgSetup::new(&current, config, Rhs::One)?;
        let rate = setup.stationary_rate(iterations)?;
        let near_levels = match &setup.aux {
            AuxSolver::Cycles(mg, _) => mg.near_levels(),
            AuxSolver::Exact(_) => 0,
        };
        let rate_without_near = if near_levels > 0 {
            let off = SolverConfig {
                near: NearCorrection::Off,
                ..config.clone()
            };
            let mg = Multigrid::from_hierarchy(&setup.hierarchy, off.mg_options(setup.kind))?;
            let aux = AuxSolver::Cycles(mg, config.cycles);
            let b = AsmgPreconditioner::new(&setup.system.a, &setup.pi, &aux, config.asmg_options())?;
            Some(stationary_rate(&setup.system.a, &b, &setup.random_start(), iterations, setup.singular()))
        } else {
            None
        };
        info!("rates level {level}: {} dofs, rate {rate:.4}", setup.ndof());
        rows.push(RateRow {
            level,
            n_dofs: setup.ndof(),
            aux_levels: setup.hierarchy.n_levels(),
            near_levels,
            rate,
            rate_without_near,
            diverged: !(rate < 1.0),
        });
    }
    Ok(rows)
}
