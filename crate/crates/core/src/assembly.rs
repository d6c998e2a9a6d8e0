//! Global saddle-point system of the WG scheme.
//!
//! Unknowns are ordered `[u₀ (all cells) | u_b (interior edges) | p | λ]`
//! where `λ` is the Lagrange multiplier enforcing `∫_Ω p = 0`:
//!
//! ```text
//! [ A   Bᵀ  0 ] [u]   [F]
//! [ B   0   m ] [p] = [0]
//! [ 0   mᵀ  0 ] [λ]   [0]
//! ```
//!
//! `A` collects `(∇_w u, ∇_w v) + κ⁻¹(u₀, v₀)`, `B` collects `-(∇_w·v, q)`
//! and `m_q = ∫_Ω q`. Boundary edge DOFs are eliminated (`u_b = 0` on ∂Ω).

use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::WeakField;
use crate::mesh::PolygonalMesh;
use crate::polybasis::dim_p;
use crate::weak_ops::{check_degrees, CellOperators};
use crate::Point;

/// Discretization parameters shared by assembly, solution and error
/// measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Discretization {
    /// Velocity degree (cell and edge).
    pub k: usize,
    /// Weak gradient degree.
    pub r: usize,
    /// Inverse permeability κ⁻¹ (scalar, constant).
    pub kappa_inv: f64,
    /// Extra quadrature exactness for volume and edge integrals.
    pub quad_bump: usize,
}

impl Discretization {
    pub fn new(k: usize, r: usize, kappa_inv: f64) -> Result<Self> {
        let d = Self {
            k,
            r,
            kappa_inv,
            quad_bump: 0,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn with_quad_bump(mut self, bump: usize) -> Self {
        self.quad_bump = bump;
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_degrees(self.k, self.r)?;
        if !(self.kappa_inv >= 0.0 && self.kappa_inv.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "κ⁻¹ must be a finite non-negative number, got {}",
                self.kappa_inv
            )));
        }
        Ok(())
    }

    pub fn cell_operators(&self, mesh: &PolygonalMesh, cell: usize) -> Result<CellOperators> {
        CellOperators::new(mesh, cell, self.k, self.r, self.quad_bump)
    }
}

/// Global numbering of the unknowns.
#[derive(Debug, Clone, PartialEq)]
pub struct DofMap {
    pub k: usize,
    n_cells: usize,
    /// Interior-edge number of every edge, `None` on the boundary.
    interior_edge: Vec<Option<usize>>,
    n_interior_edges: usize,
}

impl DofMap {
    pub fn new(mesh: &PolygonalMesh, k: usize) -> Self {
        let mut next = 0;
        let interior_edge = mesh
            .edges()
            .iter()
            .map(|e| {
                (!e.is_boundary()).then(|| {
                    next += 1;
                    next - 1
                })
            })
            .collect();
        Self {
            k,
            n_cells: mesh.num_cells(),
            interior_edge,
            n_interior_edges: next,
        }
    }

    pub fn cell_dim(&self) -> usize {
        dim_p(self.k)
    }

    pub fn edge_dim(&self) -> usize {
        self.k + 1
    }

    pub fn pressure_dim(&self) -> usize {
        dim_p(self.k - 1)
    }

    pub fn num_cells(&self) -> usize {
        self.n_cells
    }

    pub fn num_interior_edges(&self) -> usize {
        self.n_interior_edges
    }

    /// Number of interior velocity DOFs `u₀`.
    pub fn n_interior_velocity(&self) -> usize {
        self.n_cells * 2 * self.cell_dim()
    }

    pub fn n_velocity(&self) -> usize {
        self.n_interior_velocity() + self.n_interior_edges * 2 * self.edge_dim()
    }

    pub fn n_pressure(&self) -> usize {
        self.n_cells * self.pressure_dim()
    }

    pub fn multiplier(&self) -> usize {
        self.n_velocity() + self.n_pressure()
    }

    pub fn total(&self) -> usize {
        self.multiplier() + 1
    }

    pub fn velocity_interior(&self, cell: usize, comp: usize, i: usize) -> usize {
        (2 * cell + comp) * self.cell_dim() + i
    }

    pub fn velocity_edge(&self, edge: usize, comp: usize, j: usize) -> Option<usize> {
        self.interior_edge[edge]
            .map(|ie| self.n_interior_velocity() + (2 * ie + comp) * self.edge_dim() + j)
    }

    pub fn pressure(&self, cell: usize, i: usize) -> usize {
        self.n_velocity() + cell * self.pressure_dim() + i
    }

    /// Global index of every local velocity DOF of a cell
    /// ([`crate::weak_ops::LocalDofLayout`] order), `None` for eliminated
    /// boundary DOFs.
    pub fn local_velocity_indices(&self, mesh: &PolygonalMesh, cell: usize) -> Vec<Option<usize>> {
        let mut out = Vec::new();
        for comp in 0..2 {
            out.extend((0..self.cell_dim()).map(|i| Some(self.velocity_interior(cell, comp, i))));
        }
        for &e in mesh.cell_edges(cell) {
            for comp in 0..2 {
                out.extend((0..self.edge_dim()).map(|j| self.velocity_edge(e, comp, j)));
            }
        }
        out
    }

    /// Restricts a weak field to the velocity unknowns (boundary edge values
    /// are dropped).
    pub fn gather_velocity(&self, field: &WeakField) -> Result<Vec<f64>> {
        if field.degree() != self.k || field.num_cells() != self.n_cells {
            return Err(Error::DegreeMismatch(format!(
                "field of degree {} does not match DOF map of degree {}",
                field.degree(),
                self.k
            )));
        }
        let mut out = vec![0.0; self.n_velocity()];
        out[..self.n_interior_velocity()].copy_from_slice(field.interior_coefficients());
        for e in 0..self.interior_edge.len() {
            for comp in 0..2 {
                for (j, &v) in field.edge(e, comp).iter().enumerate() {
                    if let Some(g) = self.velocity_edge(e, comp, j) {
                        out[g] = v;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Inverse of [`DofMap::gather_velocity`]; boundary edges get exact zeros.
    pub fn scatter_velocity(&self, mesh: &PolygonalMesh, x: &[f64]) -> WeakField {
        let mut field = WeakField::zeros(mesh, self.k);
        for c in 0..self.n_cells {
            for comp in 0..2 {
                let start = self.velocity_interior(c, comp, 0);
                field
                    .interior_mut(c, comp)
                    .copy_from_slice(&x[start..start + self.cell_dim()]);
            }
        }
        for e in 0..self.interior_edge.len() {
            for comp in 0..2 {
                if let Some(start) = self.velocity_edge(e, comp, 0) {
                    field
                        .edge_mut(e, comp)
                        .copy_from_slice(&x[start..start + self.edge_dim()]);
                }
            }
        }
        field
    }
}

/// Compressed sparse row matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Builds a matrix from coordinate triplets; duplicates are summed.
    pub fn from_triplets(nrows: usize, ncols: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_unstable_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0; nrows + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last = None;
        for (i, j, v) in triplets {
            debug_assert!(i < nrows && j < ncols);
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(j);
                values.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// `(column, value)` pairs of a row.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[r.clone()].binary_search(&j) {
            Ok(pos) => self.values[r.start + pos],
            Err(_) => 0.0,
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.nrows)
            .map(|i| self.row(i).map(|(j, v)| v * x[j]).sum())
            .collect()
    }

    pub fn transpose(&self) -> SparseMatrix {
        SparseMatrix::from_triplets(self.ncols, self.nrows, self.triplets().map(|(i, j, v)| (j, i, v)).collect())
    }

    /// Largest entrywise difference `|a_ij - a_ji|`.
    pub fn asymmetry(&self) -> f64 {
        self.triplets()
            .map(|(i, j, v)| (v - self.get(j, i)).abs())
            .fold(0.0, f64::max)
    }

    /// Rows and columns `rows × cols` as a new matrix.
    pub fn submatrix(&self, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> SparseMatrix {
        let t = rows
            .clone()
            .flat_map(|i| {
                let (c0, c1) = (cols.start, cols.end);
                self.row(i)
                    .filter(move |&(j, _)| (c0..c1).contains(&j))
                    .map(move |(j, v)| (i - rows.start, j - c0, v))
                    .collect::<Vec<_>>()
            })
            .collect();
        SparseMatrix::from_triplets(rows.len(), cols.len(), t)
    }

    /// `xᵀ A x`.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        self.matvec(x).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut d = nalgebra::DMatrix::zeros(self.nrows, self.ncols);
        for (i, j, v) in self.triplets() {
            d[(i, j)] = v;
        }
        d
    }

    /// Matrix Market coordinate format (`real general`, 1-based).
    pub fn write_matrix_market(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
        writeln!(w, "{} {} {}", self.nrows, self.ncols, self.nnz())?;
        for (i, j, v) in self.triplets() {
            writeln!(w, "{} {} {:e}", i + 1, j + 1, v)?;
        }
        Ok(())
    }
}

/// The assembled saddle-point system.
#[derive(Debug, Clone)]
pub struct SaddleSystem {
    pub matrix: SparseMatrix,
    pub rhs: Vec<f64>,
    pub disc: Discretization,
    pub n_velocity: usize,
    pub n_pressure: usize,
}

impl SaddleSystem {
    pub fn size(&self) -> usize {
        self.matrix.nrows()
    }

    /// The velocity block `A`.
    pub fn velocity_block(&self) -> SparseMatrix {
        self.matrix.submatrix(0..self.n_velocity, 0..self.n_velocity)
    }

    /// The divergence block `B` (pressure rows, velocity columns).
    pub fn divergence_block(&self) -> SparseMatrix {
        let p0 = self.n_velocity;
        self.matrix.submatrix(p0..p0 + self.n_pressure, 0..self.n_velocity)
    }

    /// The pressure-mean vector `m`.
    pub fn mean_vector(&self) -> Vec<f64> {
        let lam = self.n_velocity + self.n_pressure;
        (self.n_velocity..lam).map(|i| self.matrix.get(i, lam)).collect()
    }
}

struct LocalContribution {
    stiffness: nalgebra::DMatrix<f64>,
    divergence: nalgebra::DMatrix<f64>,
    mean: Vec<f64>,
    load: Vec<f64>,
}

/// Assembles the saddle-point system for body force `f`.
pub fn assemble(
    mesh: &PolygonalMesh,
    disc: &Discretization,
    f: &(dyn Fn(&Point) -> [f64; 2] + Sync),
) -> Result<(SaddleSystem, DofMap)> {
    disc.validate()?;
    if mesh.num_cells() == 0 {
        return Err(Error::InvalidMesh("cannot assemble on an empty mesh".into()));
    }
    let dofs = DofMap::new(mesh, disc.k);
    let np = dofs.pressure_dim();

    let locals: Vec<LocalContribution> = (0..mesh.num_cells())
        .into_par_iter()
        .map(|c| {
            let ops = disc.cell_operators(mesh, c)?;
            Ok(LocalContribution {
                stiffness: ops.stiffness(disc.kappa_inv),
                divergence: ops.divergence_block(),
                mean: (0..np).map(|j| ops.mass_p[(0, j)]).collect(),
                load: ops.load(f),
            })
        })
        .collect::<Result<_>>()?;

    let n = dofs.total();
    let lam = dofs.multiplier();
    let mut triplets = Vec::new();
    let mut rhs = vec![0.0; n];
    for (c, loc) in locals.iter().enumerate() {
        let idx = dofs.local_velocity_indices(mesh, c);
        for (a, ga) in idx.iter().enumerate() {
            let Some(ga) = *ga else { continue };
            rhs[ga] += loc.load[a];
            for (b, gb) in idx.iter().enumerate() {
                if let Some(gb) = *gb {
                    let v = loc.stiffness[(a, b)];
                    if v != 0.0 {
                        triplets.push((ga, gb, v));
                    }
                }
            }
            for q in 0..np {
                let v = loc.divergence[(q, a)];
                if v != 0.0 {
                    let gq = dofs.pressure(c, q);
                    triplets.push((gq, ga, v));
                    triplets.push((ga, gq, v));
                }
            }
        }
        for (q, &m) in loc.mean.iter().enumerate() {
            if m != 0.0 {
                let gq = dofs.pressure(c, q);
                triplets.push((gq, lam, m));
                triplets.push((lam, gq, m));
            }
        }
    }

    let system = SaddleSystem {
        matrix: SparseMatrix::from_triplets(n, n, triplets),
        rhs,
        disc: *disc,
        n_velocity: dofs.n_velocity(),
        n_pressure: dofs.n_pressure(),
    };
    Ok((system, dofs))
}

/// Load vector `(f, v₀)` over the velocity unknowns; edge entries are zero.
pub fn load_vector(
    mesh: &PolygonalMesh,
    disc: &Discretization,
    f: &(dyn Fn(&Point) -> [f64; 2] + Sync),
) -> Result<Vec<f64>> {
    disc.validate()?;
    let dofs = DofMap::new(mesh, disc.k);
    let locals: Vec<Vec<f64>> = (0..mesh.num_cells())
        .into_par_iter()
        .map(|c| Ok(disc.cell_operators(mesh, c)?.load(f)))
        .collect::<Result<_>>()?;
    let mut out = vec![0.0; dofs.n_velocity()];
    for (c, load) in locals.iter().enumerate() {
        for (a, g) in dofs.local_velocity_indices(mesh, c).into_iter().enumerate() {
            if let Some(g) = g {
                out[g] += load[a];
            }
        }
    }
    Ok(out)
}
