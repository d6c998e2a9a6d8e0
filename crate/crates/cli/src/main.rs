use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use sfwg::assembly::Discretization;
use sfwg::errors::{energy_error, l2_pressure_error, l2_velocity_error};
use sfwg::manufactured::{case_patch, case_s2d, case_zero};
use sfwg::mesh::build_mesh;
use sfwg::projection::project_velocity;
use sfwg::study::{parse_levels, render, run_convergence, run_single, samples_csv};
use sfwg::{assemble, GradDegree, ManufacturedCase, MeshFamily, Point, PolygonalMesh, RunConfig, SolveStatus, TableFormat};

#[derive(Parser)]
#[command(name = "sfwg", version, about = "Stabilizer-free weak Galerkin solver for the 2D Brinkman equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a mesh of the unit square, or check a mesh file.
    Mesh(MeshArgs),
    /// Assemble and solve once, reporting errors against the exact fields.
    Solve(SolveArgs),
    /// Convergence study over several refinement levels.
    Converge(ConvergeArgs),
}

#[derive(Args)]
struct MeshArgs {
    #[arg(long, default_value = "triangle")]
    family: MeshFamily,
    #[arg(long, default_value_t = 3)]
    level: u32,
    /// Read and validate this mesh file instead of generating one.
    #[arg(long, conflicts_with_all = ["family", "level"])]
    check: Option<PathBuf>,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum CaseName {
    /// The smooth manufactured solution with a cubic pressure.
    S2d,
    /// Zero velocity and a polynomial pressure reproduced exactly.
    Patch,
    /// Zero data.
    Zero,
}

impl CaseName {
    fn build(self, k: usize, kappa_inv: f64) -> ManufacturedCase {
        match self {
            CaseName::S2d => case_s2d(kappa_inv),
            CaseName::Patch => case_patch(k, kappa_inv),
            CaseName::Zero => case_zero(kappa_inv),
        }
    }
}

#[derive(Args)]
struct SchemeArgs {
    /// Velocity degree.
    #[arg(long, default_value_t = 1)]
    k: usize,
    /// Weak gradient degree: auto, theory, k+N or a number.
    #[arg(long, default_value = "auto")]
    grad_degree: GradDegree,
    /// Inverse permeability κ⁻¹.
    #[arg(long, default_value_t = 1.0)]
    kappa_inv: f64,
    /// Extra quadrature exactness for the load vector.
    #[arg(long, default_value_t = 0)]
    quad_bump: usize,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long, default_value = "triangle")]
    family: MeshFamily,
    #[arg(long, default_value_t = 4)]
    level: u32,
    /// Mesh file in the plain-text format; overrides --family and --level.
    #[arg(long)]
    mesh: Option<PathBuf>,
    #[command(flatten)]
    scheme: SchemeArgs,
    #[arg(long, value_enum, default_value = "s2d")]
    case: CaseName,
    /// Sample points per side of the output grid.
    #[arg(long, default_value_t = 21)]
    samples: usize,
    /// Sampled fields as CSV; skipped when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the assembled saddle-point matrix in MatrixMarket format.
    #[arg(long)]
    export_matrix: Option<PathBuf>,
}

#[derive(Args)]
struct ConvergeArgs {
    #[arg(long, default_value = "triangle")]
    family: MeshFamily,
    /// Levels as "3-6", "3..6" or "3,4,6".
    #[arg(long, default_value = "2-5")]
    levels: String,
    #[command(flatten)]
    scheme: SchemeArgs,
    #[arg(long, default_value = "markdown")]
    format: TableFormat,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn read_mesh(path: &Path) -> Result<PolygonalMesh> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    PolygonalMesh::from_text(&text).with_context(|| format!("parsing {}", path.display()))
}

fn mesh_cmd(args: MeshArgs) -> Result<()> {
    if let Some(path) = args.check {
        let mesh = read_mesh(&path)?;
        let summary = format!(
            "{} vertices, {} cells, {} edges, h = {:.6}, max {} edges per cell, {}\n",
            mesh.num_vertices(),
            mesh.num_cells(),
            mesh.num_edges(),
            mesh.mesh_size(),
            mesh.max_edges_per_cell(),
            if mesh.is_convex() { "convex" } else { "non-convex" }
        );
        return emit(args.out.as_deref(), &summary);
    }
    let mesh = build_mesh(args.family, args.level)?;
    emit(args.out.as_deref(), &mesh.to_text())
}

fn solve_cmd(args: SolveArgs) -> Result<()> {
    let (mesh, family) = match &args.mesh {
        Some(path) => (read_mesh(path)?, None),
        None => (build_mesh(args.family, args.level)?, Some(args.family)),
    };
    let s = &args.scheme;
    let r = s.grad_degree.resolve(s.k, family, &mesh);
    let disc = Discretization::new(s.k, r, s.kappa_inv)?.with_quad_bump(s.quad_bump);
    let case = args.case.build(s.k, s.kappa_inv);

    if let Some(path) = &args.export_matrix {
        let (system, _) = assemble(&mesh, &disc, &|p: &Point| case.forcing(p))?;
        let file = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
        system.matrix.write_matrix_market(std::io::BufWriter::new(file))?;
    }

    let run = run_single(&mesh, &disc, &case, args.samples)?;
    let sol = &run.solution;
    let qu = project_velocity(&mesh, disc.k, &|p: &Point| case.velocity(p))?;
    println!("cells {}, k = {}, r = {}, κ⁻¹ = {}", mesh.num_cells(), disc.k, disc.r, disc.kappa_inv);
    println!("unknowns {}", sol.raw.len());
    println!("relative residual {:.3e}", sol.residual);
    if let SolveStatus::HighResidual(res) = sol.status {
        eprintln!("warning: relative residual {res:.3e} is above the accuracy threshold");
    }
    println!("velocity L2 error {:.6e}", l2_velocity_error(&sol.velocity, &qu, &mesh)?);
    println!("energy error {:.6e}", energy_error(sol, &qu, &mesh, &disc)?);
    println!("pressure L2 error {:.6e}", l2_pressure_error(&sol.pressure, &|p: &Point| case.pressure(p), &mesh)?);
    println!("weak divergence residual {:.3e}", run.weak_div);
    if let Some(path) = &args.out {
        emit(Some(path), &samples_csv(&run.samples))?;
    }
    Ok(())
}

fn converge_cmd(args: ConvergeArgs) -> Result<()> {
    let s = &args.scheme;
    let config = RunConfig::new(args.family, parse_levels(&args.levels)?, s.k)
        .with_grad_degree(s.grad_degree)
        .with_kappa_inv(s.kappa_inv)
        .with_quad_bump(s.quad_bump);
    let report = run_convergence(&config, &case_s2d(s.kappa_inv))?;
    emit(args.out.as_deref(), &render(&report, args.format))?;
    if report.levels.is_empty() {
        bail!("every level failed");
    }
    Ok(())
}

fn main() -> ExitCode {
    let outcome = match Cli::parse().command {
        Command::Mesh(args) => mesh_cmd(args),
        Command::Solve(args) => solve_cmd(args),
        Command::Converge(args) => converge_cmd(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
