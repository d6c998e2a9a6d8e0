//! Convergence studies and single runs on the manufactured cases.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::assembly::{assemble, Discretization};
use crate::error::{Error, Result};
use crate::errors::{
    convergence_orders, energy_error, l2_pressure_error, l2_velocity_error, ErrorReport, LevelErrors, LevelFailure,
};
use crate::manufactured::ManufacturedCase;
use crate::mesh::{build_mesh, MeshFamily, PolygonalMesh};
use crate::projection::project_velocity;
use crate::solver::{solve, weak_div_residual, DiscreteSolution};
use crate::Point;

/// Rule for the weak gradient degree `r`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GradDegree {
    /// `k+1` on triangles; `k+3`, `k+2`, `k+3` on the cross-split, zigzag
    /// and L-pair families.
    #[default]
    Auto,
    Fixed(usize),
    /// `r = k + offset`.
    Offset(usize),
    /// `N + k − 1` on convex meshes, `2N + k − 1` otherwise, with `N` the
    /// largest number of edges of a cell.
    Theory,
}

impl GradDegree {
    pub fn resolve(&self, k: usize, family: Option<MeshFamily>, mesh: &PolygonalMesh) -> usize {
        match *self {
            GradDegree::Fixed(r) => r,
            GradDegree::Offset(o) => k + o,
            GradDegree::Auto => match family {
                Some(MeshFamily::Triangle) => k + 1,
                Some(MeshFamily::Zigzag) => k + 2,
                Some(MeshFamily::CrossSplit) | Some(MeshFamily::LPair) => k + 3,
                None if mesh.is_convex() => k + 1,
                None => k + 3,
            },
            GradDegree::Theory => {
                let n = mesh.max_edges_per_cell();
                if mesh.is_convex() {
                    n + k - 1
                } else {
                    2 * n + k - 1
                }
            }
        }
    }
}

impl FromStr for GradDegree {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t: String = s.chars().filter(|c| !c.is_whitespace()).collect::<String>().to_ascii_lowercase();
        let bad = || Error::InvalidParameter(format!("unrecognised gradient degree '{s}' (use auto, theory, k+N or N)"));
        match t.as_str() {
            "auto" => Ok(GradDegree::Auto),
            "theory" => Ok(GradDegree::Theory),
            "k" => Ok(GradDegree::Offset(0)),
            _ => {
                if let Some(rest) = t.strip_prefix("k+") {
                    rest.parse().map(GradDegree::Offset).map_err(|_| bad())
                } else {
                    t.parse().map(GradDegree::Fixed).map_err(|_| bad())
                }
            }
        }
    }
}

impl std::fmt::Display for GradDegree {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GradDegree::Auto => write!(f, "auto"),
            GradDegree::Theory => write!(f, "theory"),
            GradDegree::Fixed(r) => write!(f, "{r}"),
            GradDegree::Offset(o) => write!(f, "k+{o}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TableFormat {
    #[default]
    Markdown,
    Csv,
}

impl FromStr for TableFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "markdown" | "md" => Ok(TableFormat::Markdown),
            "csv" => Ok(TableFormat::Csv),
            _ => Err(Error::InvalidParameter(format!("unknown table format '{s}'"))),
        }
    }
}

/// Parameters of a convergence study.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub family: MeshFamily,
    pub levels: Vec<u32>,
    pub k: usize,
    pub grad_degree: GradDegree,
    pub kappa_inv: f64,
    pub quad_bump: usize,
    pub format: TableFormat,
}

impl RunConfig {
    pub fn new(family: MeshFamily, levels: impl IntoIterator<Item = u32>, k: usize) -> Self {
        Self {
            family,
            levels: levels.into_iter().collect(),
            k,
            grad_degree: GradDegree::Auto,
            kappa_inv: 1.0,
            quad_bump: 0,
            format: TableFormat::Markdown,
        }
    }

    pub fn with_grad_degree(mut self, g: GradDegree) -> Self {
        self.grad_degree = g;
        self
    }

    pub fn with_kappa_inv(mut self, kappa_inv: f64) -> Self {
        self.kappa_inv = kappa_inv;
        self
    }

    pub fn with_quad_bump(mut self, bump: usize) -> Self {
        self.quad_bump = bump;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=4).contains(&self.k) {
            return Err(Error::InvalidParameter(format!(
                "velocity degree k = {} outside the supported range 1..=4",
                self.k
            )));
        }
        if self.levels.is_empty() {
            return Err(Error::InvalidParameter("no refinement levels given".into()));
        }
        if let GradDegree::Fixed(r) = self.grad_degree {
            if r + 1 < self.k {
                return Err(Error::InvalidParameter(format!("r = {r} must be at least k - 1")));
            }
        }
        Discretization::new(self.k, self.k, self.kappa_inv).map(|_| ())
    }

    pub fn discretization(&self, mesh: &PolygonalMesh) -> Result<Discretization> {
        let r = self.grad_degree.resolve(self.k, Some(self.family), mesh);
        Ok(Discretization::new(self.k, r, self.kappa_inv)?.with_quad_bump(self.quad_bump))
    }
}

/// Parses `"3-5"`, `"3..5"`, `"3,4,6"` or `"4"`.
pub fn parse_levels(s: &str) -> Result<Vec<u32>> {
    let bad = || Error::InvalidParameter(format!("cannot parse levels '{s}'"));
    let num = |t: &str| t.trim().parse::<u32>().map_err(|_| bad());
    let levels: Vec<u32> = if let Some((a, b)) = s.split_once("..").or_else(|| s.split_once('-')) {
        let (a, b) = (num(a)?, num(b.trim_start_matches('='))?);
        if a > b {
            return Err(bad());
        }
        (a..=b).collect()
    } else {
        s.split(',').map(num).collect::<Result<_>>()?
    };
    if levels.contains(&0) {
        return Err(Error::InvalidParameter("levels start at 1".into()));
    }
    Ok(levels)
}

/// Assembles, solves and measures one discretization against a case.
pub fn solve_and_measure(
    mesh: &PolygonalMesh,
    disc: &Discretization,
    case: &ManufacturedCase,
) -> Result<(DiscreteSolution, LevelErrors)> {
    let forcing = |p: &Point| case.forcing(p);
    let (system, dofs) = assemble(mesh, disc, &forcing)?;
    let solution = solve(mesh, &system, &dofs)?;
    let velocity = |p: &Point| case.velocity(p);
    let qu = project_velocity(mesh, disc.k, &velocity)?;
    let pressure = |p: &Point| case.pressure(p);
    let errors = LevelErrors::new(
        0,
        mesh.mesh_size(),
        l2_velocity_error(&solution.velocity, &qu, mesh)?,
        energy_error(&solution, &qu, mesh, disc)?,
        l2_pressure_error(&solution.pressure, &pressure, mesh)?,
        weak_div_residual(&solution.velocity, mesh)?,
    );
    Ok((solution, errors))
}

/// Runs every level of the study; a failing level is recorded and the
/// remaining levels still run.
pub fn run_convergence(config: &RunConfig, case: &ManufacturedCase) -> Result<ErrorReport> {
    config.validate()?;
    let mut report = ErrorReport::default();
    for &level in &config.levels {
        let outcome = build_mesh(config.family, level).and_then(|mesh| {
            let disc = config.discretization(&mesh)?;
            solve_and_measure(&mesh, &disc, case)
        });
        match outcome {
            Ok((_, mut errors)) => {
                errors.level = level;
                report.levels.push(errors);
            }
            Err(e) => report.failures.push(LevelFailure {
                level,
                message: e.to_string(),
            }),
        }
    }
    Ok(convergence_orders(report))
}

/// Three significant digits in `0.dddE±n` form.
pub fn table_scientific(x: f64) -> String {
    if x == 0.0 {
        return "0.000E0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sign = if x < 0.0 { "-" } else { "" };
    let a = x.abs();
    let mut e = a.log10().floor() as i32 + 1;
    let mut m = (a / 10f64.powi(e) * 1000.0).round() as i64;
    if m >= 1000 {
        m /= 10;
        e += 1;
    }
    format!("{sign}0.{m:03}E{e}")
}

fn order_cell(o: Option<f64>) -> String {
    o.map_or_else(|| "-".into(), |v| format!("{v:.1}"))
}

pub fn render_markdown(report: &ErrorReport) -> String {
    let mut s = String::new();
    s.push_str("| level | ‖Q_h u − u_h‖ | order | \\|\\|\\|Q_h u − u_h\\|\\|\\| | order | ‖p − p_h‖ | order |\n");
    s.push_str("|---|---|---|---|---|---|---|\n");
    for l in &report.levels {
        let _ = writeln!(
            s,
            "| G{} | {} | {} | {} | {} | {} | {} |",
            l.level,
            table_scientific(l.velocity_l2),
            order_cell(l.velocity_order),
            table_scientific(l.energy),
            order_cell(l.energy_order),
            table_scientific(l.pressure_l2),
            order_cell(l.pressure_order),
        );
    }
    for f in &report.failures {
        let _ = writeln!(s, "\nlevel {} failed: {}", f.level, f.message);
    }
    s
}

const CSV_HEADER: &str =
    "level,h,velocity_l2,velocity_order,energy,energy_order,pressure_l2,pressure_order,weak_div";

pub fn render_csv(report: &ErrorReport) -> String {
    let opt = |o: Option<f64>| o.map_or_else(String::new, |v| format!("{v:?}"));
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for l in &report.levels {
        let _ = writeln!(
            s,
            "{},{:?},{:?},{},{:?},{},{:?},{},{:?}",
            l.level,
            l.h,
            l.velocity_l2,
            opt(l.velocity_order),
            l.energy,
            opt(l.energy_order),
            l.pressure_l2,
            opt(l.pressure_order),
            l.weak_div
        );
    }
    for f in &report.failures {
        let _ = writeln!(s, "# failed {}: {}", f.level, f.message.replace('\n', " "));
    }
    s
}

pub fn render(report: &ErrorReport, format: TableFormat) -> String {
    match format {
        TableFormat::Markdown => render_markdown(report),
        TableFormat::Csv => render_csv(report),
    }
}

/// Inverse of [`render_csv`].
pub fn parse_csv(text: &str) -> Result<ErrorReport> {
    let mut report = ErrorReport::default();
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == CSV_HEADER => {}
        _ => {
            return Err(Error::Parse {
                line: 1,
                message: "missing CSV header".into(),
            })
        }
    }
    for (i, line) in lines {
        let err = |message: String| Error::Parse { line: i + 1, message };
        if line.trim().is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("# failed ") {
            let (level, message) = rest.split_once(": ").ok_or_else(|| err("malformed failure row".into()))?;
            report.failures.push(LevelFailure {
                level: level.parse().map_err(|_| err(format!("bad level '{level}'")))?,
                message: message.to_string(),
            });
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 9 {
            return Err(err(format!("expected 9 fields, found {}", fields.len())));
        }
        let num = |t: &str| t.parse::<f64>().map_err(|_| err(format!("bad number '{t}'")));
        let opt = |t: &str| if t.is_empty() { Ok(None) } else { num(t).map(Some) };
        report.levels.push(LevelErrors {
            level: fields[0].parse().map_err(|_| err(format!("bad level '{}'", fields[0])))?,
            h: num(fields[1])?,
            velocity_l2: num(fields[2])?,
            velocity_order: opt(fields[3])?,
            energy: num(fields[4])?,
            energy_order: opt(fields[5])?,
            pressure_l2: num(fields[6])?,
            pressure_order: opt(fields[7])?,
            weak_div: num(fields[8])?,
        });
    }
    Ok(report)
}

/// `u_h` and `p_h` evaluated at one sample point.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub point: Point,
    pub cell: usize,
    /// The point was not found inside any cell and was assigned to the
    /// nearest one.
    pub nearest: bool,
    pub velocity: [f64; 2],
    pub pressure: f64,
}

#[derive(Debug, Clone)]
pub struct SingleRun {
    pub disc: Discretization,
    pub solution: DiscreteSolution,
    pub weak_div: f64,
    pub samples: Vec<Sample>,
}

/// Uniform `n × n` grid over the bounding box of the mesh (boundary included).
pub fn sample_grid(mesh: &PolygonalMesh, n: usize) -> Vec<Point> {
    let (mut lo, mut hi) = (Point::new(f64::MAX, f64::MAX), Point::new(f64::MIN, f64::MIN));
    for v in mesh.vertices() {
        lo = Point::new(lo.x.min(v.x), lo.y.min(v.y));
        hi = Point::new(hi.x.max(v.x), hi.y.max(v.y));
    }
    let t = |i: usize| if n > 1 { i as f64 / (n - 1) as f64 } else { 0.5 };
    (0..n)
        .flat_map(|j| (0..n).map(move |i| (i, j)))
        .map(|(i, j)| Point::new(lo.x + (hi.x - lo.x) * t(i), lo.y + (hi.y - lo.y) * t(j)))
        .collect()
}

pub fn sample_solution(mesh: &PolygonalMesh, solution: &DiscreteSolution, points: &[Point]) -> Vec<Sample> {
    points
        .iter()
        .map(|p| {
            let (cell, nearest) = match mesh.locate(p) {
                Some(c) => (c, false),
                None => (mesh.nearest_cell(p), true),
            };
            Sample {
                point: *p,
                cell,
                nearest,
                velocity: solution.velocity.eval_interior(mesh, cell, p),
                pressure: solution.pressure.eval(mesh, cell, 0, p),
            }
        })
        .collect()
}

/// One assemble-and-solve with sampled output on an `n × n` grid.
pub fn run_single(
    mesh: &PolygonalMesh,
    disc: &Discretization,
    case: &ManufacturedCase,
    samples_per_side: usize,
) -> Result<SingleRun> {
    let forcing = |p: &Point| case.forcing(p);
    let (system, dofs) = assemble(mesh, disc, &forcing)?;
    let solution = solve(mesh, &system, &dofs)?;
    let weak_div = weak_div_residual(&solution.velocity, mesh)?;
    let samples = sample_solution(mesh, &solution, &sample_grid(mesh, samples_per_side));
    Ok(SingleRun {
        disc: *disc,
        solution,
        weak_div,
        samples,
    })
}

pub fn samples_csv(samples: &[Sample]) -> String {
    let mut s = String::from("x,y,cell,nearest,u1,u2,p\n");
    for v in samples {
        let _ = writeln!(
            s,
            "{:?},{:?},{},{},{:?},{:?},{:?}",
            v.point.x, v.point.y, v.cell, v.nearest as u8, v.velocity[0], v.velocity[1], v.pressure
        );
    }
    s
}
