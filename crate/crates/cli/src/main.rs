use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;
use serde::Serialize;

use asmg::harness::{append_rows, run_bench, run_rates, run_solve, AsmgSetup, MeshFamily, Rhs, SolverConfig};
use asmg::mesh::{load_mesh, quality_report, save_mesh};
use asmg::solver::{Mode, NearCorrection, SmootherKind};
use asmg::{BoundaryKind, TriMesh};

/// Exit code for a solve that hit the iteration limit or a diverging rate.
const EXIT_NOT_CONVERGED: u8 = 3;

#[derive(Parser)]
#[command(name = "asmg", version, about = "Auxiliary space multigrid for P1 Poisson problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate or inspect meshes.
    #[command(subcommand)]
    Mesh(MeshCommand),
    /// Solve -laplace u = f with ASMG-preconditioned CG.
    Solve(SolveArgs),
    /// Solve on a family of growing meshes and fit the setup-time exponent.
    Bench(BenchArgs),
    /// Stationary ASMG rates on a mesh and its uniform refinements.
    Rates(RatesArgs),
}

#[derive(Subcommand)]
enum MeshCommand {
    /// Write a synthetic mesh and print its quality report.
    Gen(GenArgs),
    /// Print the quality report of a mesh file.
    Info {
        /// Mesh file.
        path: PathBuf,
    },
}

#[derive(Args)]
struct GenArgs {
    /// square, graded or holes.
    #[arg(long, default_value = "square")]
    kind: String,
    /// Cells per side of the base grid.
    #[arg(long, default_value_t = 32)]
    n: usize,
    /// Grading steps towards the lower-left corner (graded only).
    #[arg(long, default_value_t = 3)]
    levels: u32,
    /// Number of holes (holes only).
    #[arg(long, default_value_t = 4)]
    holes: usize,
    #[arg(long, default_value = "dirichlet")]
    bc: BoundaryKind,
    /// Output file.
    #[arg(short, long, default_value = "mesh.txt")]
    out: PathBuf,
}

impl GenArgs {
    fn family(&self) -> Result<MeshFamily> {
        Ok(match self.kind.as_str() {
            "square" => MeshFamily::Square,
            "graded" => MeshFamily::Graded { levels: self.levels },
            "holes" => MeshFamily::Holes { holes: self.holes },
            other => bail!("unknown mesh kind '{other}' (square, graded, holes)"),
        })
    }
}

/// Where the mesh comes from: a file or a generator.
#[derive(Args)]
struct MeshSource {
    /// Mesh file in the text format written by `mesh gen`.
    #[arg(long, conflicts_with = "family")]
    mesh: Option<PathBuf>,
    /// Generated mesh instead of a file: square, graded[:levels] or holes[:count].
    #[arg(long)]
    family: Option<MeshFamily>,
    /// Base grid size for a generated mesh.
    #[arg(long, default_value_t = 32)]
    n: usize,
    /// Boundary condition; overrides the markers of a mesh file.
    #[arg(long)]
    bc: Option<BoundaryKind>,
}

impl MeshSource {
    fn load(&self) -> Result<(String, TriMesh)> {
        match (&self.mesh, self.family) {
            (Some(path), _) => {
                let mesh = load_mesh(path).with_context(|| format!("loading {}", path.display()))?;
                let mesh = match self.bc {
                    Some(bc) => mesh.with_boundary_kind(bc),
                    None => mesh,
                };
                Ok((path.display().to_string(), mesh))
            }
            (None, Some(family)) => {
                let bc = self.bc.unwrap_or(BoundaryKind::Dirichlet);
                Ok((format!("{family}-n{}", self.n), family.generate(self.n, bc)?))
            }
            (None, None) => bail!("give either --mesh <file> or --family <kind>"),
        }
    }
}

#[derive(Args)]
struct SolverArgs {
    /// Minimal cluster size of the quadtree.
    #[arg(long, default_value_t = 3)]
    nmin: usize,
    #[arg(long, default_value = "sgs")]
    smoother: SmootherKind,
    /// Smoothing sweeps per level in the auxiliary cycles.
    #[arg(long, default_value_t = 2)]
    nu: usize,
    /// Smoothing sweeps on the original system.
    #[arg(long, default_value_t = 1)]
    sweeps: usize,
    #[arg(long, default_value = "multiplicative")]
    mode: Mode,
    /// Element layers of the near-boundary region.
    #[arg(long, default_value_t = 1)]
    layers: usize,
    /// Near-boundary solve placement: off, after-coarse or symmetric.
    #[arg(long)]
    near: Option<NearCorrection>,
    /// Auxiliary cycles per preconditioner application.
    #[arg(long, default_value_t = 1)]
    cycles: usize,
    /// Relative residual tolerance.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 500)]
    maxit: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Replace the auxiliary cycles by a direct solve.
    #[arg(long)]
    exact_aux: bool,
    /// CSV file that rows are appended to.
    #[arg(long)]
    report: Option<PathBuf>,
}

impl SolverArgs {
    fn config(&self, default_near: NearCorrection) -> Result<SolverConfig> {
        let c = SolverConfig {
            n_min: self.nmin,
            layers: self.layers,
            smoother: self.smoother,
            nu: self.nu,
            sweeps: self.sweeps,
            mode: self.mode,
            cycles: self.cycles,
            near: self.near.unwrap_or(default_near),
            tol: self.tol,
            maxit: self.maxit,
            seed: self.seed,
            exact_aux: self.exact_aux,
            ..SolverConfig::default()
        };
        c.validate()?;
        Ok(c)
    }
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    source: MeshSource,
    #[command(flatten)]
    solver: SolverArgs,
    /// Use the manufactured solution sin(pi x) sin(pi y) and report its energy error.
    #[arg(long)]
    manufactured: bool,
    /// Also measure the stationary rate over 50 iterations.
    #[arg(long)]
    rate: bool,
}

#[derive(Args)]
struct BenchArgs {
    /// square, graded[:levels] or holes[:count].
    #[arg(long, default_value = "graded:2")]
    family: MeshFamily,
    /// Comma-separated base grid sizes, at least three.
    #[arg(long, value_delimiter = ',', default_value = "32,64,128")]
    sizes: Vec<usize>,
    #[arg(long, default_value = "dirichlet")]
    bc: BoundaryKind,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args)]
struct RatesArgs {
    #[command(flatten)]
    source: MeshSource,
    /// Number of meshes: the given one and its uniform refinements.
    #[arg(long, default_value_t = 4)]
    levels: usize,
    /// Stationary iterations per level.
    #[arg(long, default_value_t = 50)]
    iterations: usize,
    /// Report the rate of an exact solve instead, as a sanity check.
    #[arg(long)]
    exact: bool,
    #[command(flatten)]
    solver: SolverArgs,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Mesh(MeshCommand::Gen(args)) => {
            let family = args.family()?;
            let mesh = family.generate(args.n, args.bc)?;
            save_mesh(&mesh, &args.out).with_context(|| format!("writing {}", args.out.display()))?;
            println!("wrote {} ({} vertices)", args.out.display(), mesh.n_vertices());
            println!("{}", quality_report(&mesh));
            Ok(ExitCode::SUCCESS)
        }
        Command::Mesh(MeshCommand::Info { path }) => {
            let mesh = load_mesh(&path).with_context(|| format!("loading {}", path.display()))?;
            println!("vertices         {}", mesh.n_vertices());
            println!("boundary         {}", mesh.boundary_kind());
            println!("{}", quality_report(&mesh));
            Ok(ExitCode::SUCCESS)
        }
        Command::Solve(args) => solve(args),
        Command::Bench(args) => bench(args),
        Command::Rates(args) => rates(args),
    }
}

fn solve(args: SolveArgs) -> Result<ExitCode> {
    let config = args.solver.config(NearCorrection::Symmetric)?;
    let (name, mesh) = args.source.load()?;
    let rhs = if args.manufactured { Rhs::Manufactured } else { Rhs::One };
    let (_, row) = run_solve(&name, &mesh, &config, rhs, args.rate)?;
    println!(
        "{}: {} dofs, {} aux levels, {} iterations, converged {}, kappa {:.3}, setup {:.3}s, solve {:.3}s",
        row.problem,
        row.n_dofs,
        row.aux_levels,
        row.iterations,
        row.converged,
        row.kappa,
        row.setup_seconds,
        row.solve_seconds
    );
    if let Some(r) = row.rate {
        println!("stationary rate {r:.4}");
    }
    if let Some(e) = row.energy_error {
        println!("energy error {e:.4e}");
    }
    println!("storage ratio {:.3}, partially covered transfer rows {}", row.storage_ratio, row.partial_rows);
    write_report(args.solver.report.as_deref(), std::slice::from_ref(&row))?;
    Ok(if row.converged {
        ExitCode::SUCCESS
    } else {
        eprintln!("not converged after {} iterations", row.iterations);
        ExitCode::from(EXIT_NOT_CONVERGED)
    })
}

#[derive(Serialize)]
struct SummaryRow {
    family: String,
    setup_exponent: f64,
    min_iterations: usize,
    max_iterations: usize,
    max_storage_ratio: f64,
}

fn bench(args: BenchArgs) -> Result<ExitCode> {
    if args.sizes.len() < 3 {
        bail!("--sizes needs at least three values, got {:?}", args.sizes);
    }
    let config = args.solver.config(NearCorrection::Symmetric)?;
    let summary = run_bench(args.family, &args.sizes, args.bc, &config)?;
    println!("{:>10} {:>10} {:>6} {:>8} {:>10} {:>10}", "dofs", "aux dofs", "iters", "kappa", "setup s", "storage");
    for r in &summary.rows {
        println!(
            "{:>10} {:>10} {:>6} {:>8.3} {:>10.3} {:>10.3}",
            r.n_dofs, r.aux_dofs, r.iterations, r.kappa, r.setup_seconds, r.storage_ratio
        );
    }
    println!(
        "setup exponent {:.3}, iterations {}..{}, max storage ratio {:.3}",
        summary.setup_exponent, summary.min_iterations, summary.max_iterations, summary.max_storage_ratio
    );
    if let Some(path) = args.solver.report.as_deref() {
        append_rows(path, &summary.rows)?;
        let summary_path = sibling(path, "summary");
        append_rows(
            &summary_path,
            &[SummaryRow {
                family: args.family.to_string(),
                setup_exponent: summary.setup_exponent,
                min_iterations: summary.min_iterations,
                max_iterations: summary.max_iterations,
                max_storage_ratio: summary.max_storage_ratio,
            }],
        )?;
        info!("summary appended to {}", summary_path.display());
    }
    let all = summary.rows.iter().all(|r| r.converged);
    Ok(if all { ExitCode::SUCCESS } else { ExitCode::from(EXIT_NOT_CONVERGED) })
}

fn rates(args: RatesArgs) -> Result<ExitCode> {
    let config = args.solver.config(NearCorrection::AfterCoarse)?;
    if args.levels == 0 || args.iterations == 0 {
        bail!("--levels and --iterations must be positive");
    }
    let (name, mesh) = args.source.load()?;
    if args.exact {
        let setup = AsmgSetup::new(&mesh, &config, Rhs::One)?;
        println!("{name}: exact-solve rate {:.3e}", setup.exact_rate()?);
        return Ok(ExitCode::SUCCESS);
    }
    let rows = run_rates(&mesh, args.levels, &config, args.iterations)?;
    println!("{:>6} {:>10} {:>6} {:>6} {:>8} {:>12}", "level", "dofs", "aux", "near", "rate", "without near");
    for r in &rows {
        let without = r.rate_without_near.map_or("-".to_string(), |v| format!("{v:.4}"));
        let flag = if r.diverged { "  DIVERGED" } else { "" };
        println!(
            "{:>6} {:>10} {:>6} {:>6} {:>8.4} {:>12}{flag}",
            r.level, r.n_dofs, r.aux_levels, r.near_levels, r.rate, without
        );
    }
    write_report(args.solver.report.as_deref(), &rows)?;
    Ok(if rows.iter().any(|r| r.diverged) {
        ExitCode::from(EXIT_NOT_CONVERGED)
    } else {
        ExitCode::SUCCESS
    })
}

fn write_report<T: Serialize>(path: Option<&Path>, rows: &[T]) -> Result<()> {
    if let Some(p) = path {
        append_rows(p, rows).with_context(|| format!("appending to {}", p.display()))?;
    }
    Ok(())
}

/// `dir/name.csv` -> `dir/name_<tag>.csv`.
fn sibling(path: &Path, tag: &str) -> PathBuf {
    let stem = path.file_stem().map_or("report".into(), |s| s.to_string_lossy().into_owned());
    path.with_file_name(format!("{stem}_{tag}.csv"))
}
