//! Coefficient storage for discrete fields.

use crate::error::{Error, Result};
use crate::mesh::PolygonalMesh;
use crate::polybasis::{dim_p, MonomialBasis};
use crate::Point;

/// A vector-valued weak function `{v₀, v_b}`: per cell, two `P_k(T)`
/// coefficient vectors; per global edge, two `P_k(e)` Legendre coefficient
/// vectors. Edge records are stored once per edge, which makes `v_b`
/// single-valued by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct WeakField {
    k: usize,
    n_cells: usize,
    n_edges: usize,
    interior: Vec<f64>,
    edges: Vec<f64>,
}

impl WeakField {
    pub fn zeros(mesh: &PolygonalMesh, k: usize) -> Self {
        Self {
            k,
            n_cells: mesh.num_cells(),
            n_edges: mesh.num_edges(),
            interior: vec![0.0; mesh.num_cells() * 2 * dim_p(k)],
            edges: vec![0.0; mesh.num_edges() * 2 * (k + 1)],
        }
    }

    pub fn degree(&self) -> usize {
        self.k
    }

    pub fn cell_dim(&self) -> usize {
        dim_p(self.k)
    }

    pub fn edge_dim(&self) -> usize {
        self.k + 1
    }

    pub fn num_cells(&self) -> usize {
        self.n_cells
    }

    pub fn num_edges(&self) -> usize {
        self.n_edges
    }

    fn interior_range(&self, cell: usize, comp: usize) -> std::ops::Range<usize> {
        let n = self.cell_dim();
        let start = (2 * cell + comp) * n;
        start..start + n
    }

    fn edge_range(&self, edge: usize, comp: usize) -> std::ops::Range<usize> {
        let n = self.edge_dim();
        let start = (2 * edge + comp) * n;
        start..start + n
    }

    pub fn interior(&self, cell: usize, comp: usize) -> &[f64] {
        &self.interior[self.interior_range(cell, comp)]
    }

    pub fn interior_mut(&mut self, cell: usize, comp: usize) -> &mut [f64] {
        let r = self.interior_range(cell, comp);
        &mut self.interior[r]
    }

    pub fn edge(&self, edge: usize, comp: usize) -> &[f64] {
        &self.edges[self.edge_range(edge, comp)]
    }

    pub fn edge_mut(&mut self, edge: usize, comp: usize) -> &mut [f64] {
        let r = self.edge_range(edge, comp);
        &mut self.edges[r]
    }

    pub fn interior_coefficients(&self) -> &[f64] {
        &self.interior
    }

    pub fn edge_coefficients(&self) -> &[f64] {
        &self.edges
    }

    /// Local DOF vector of a cell in [`crate::weak_ops::LocalDofLayout`]
    /// order: `[v₀ˣ, v₀ʸ, then per edge in loop order: v_bˣ, v_bʸ]`.
    pub fn local_vector(&self, mesh: &PolygonalMesh, cell: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(2 * self.cell_dim() + mesh.cell_edges(cell).len() * 2 * self.edge_dim());
        out.extend_from_slice(self.interior(cell, 0));
        out.extend_from_slice(self.interior(cell, 1));
        for &e in mesh.cell_edges(cell) {
            out.extend_from_slice(self.edge(e, 0));
            out.extend_from_slice(self.edge(e, 1));
        }
        out
    }

    fn check_compatible(&self, other: &WeakField) -> Result<()> {
        if self.k != other.k || self.n_cells != other.n_cells || self.n_edges != other.n_edges {
            return Err(Error::DegreeMismatch(format!(
                "weak fields of degree {} on {} cells and degree {} on {} cells",
                self.k, self.n_cells, other.k, other.n_cells
            )));
        }
        Ok(())
    }

    /// `self - other`.
    pub fn difference(&self, other: &WeakField) -> Result<WeakField> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        out.interior.iter_mut().zip(&other.interior).for_each(|(a, b)| *a -= b);
        out.edges.iter_mut().zip(&other.edges).for_each(|(a, b)| *a -= b);
        Ok(out)
    }

    pub fn scaled(&self, alpha: f64) -> WeakField {
        let mut out = self.clone();
        out.interior.iter_mut().for_each(|a| *a *= alpha);
        out.edges.iter_mut().for_each(|a| *a *= alpha);
        out
    }

    /// Largest coefficient magnitude.
    pub fn max_abs(&self) -> f64 {
        self.interior
            .iter()
            .chain(&self.edges)
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Value of `v₀` at a point of `cell`.
    pub fn eval_interior(&self, mesh: &PolygonalMesh, cell: usize, p: &Point) -> [f64; 2] {
        let basis = MonomialBasis::for_cell(mesh, cell, self.k);
        [
            basis.evaluate(self.interior(cell, 0), p),
            basis.evaluate(self.interior(cell, 1), p),
        ]
    }
}

/// Piecewise polynomials of one degree: `components` coefficient vectors in
/// the scaled monomial basis of each cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellField {
    degree: usize,
    components: usize,
    n_cells: usize,
    coeffs: Vec<f64>,
}

impl CellField {
    pub fn zeros(n_cells: usize, degree: usize, components: usize) -> Self {
        Self {
            degree,
            components,
            n_cells,
            coeffs: vec![0.0; n_cells * components * dim_p(degree)],
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn num_cells(&self) -> usize {
        self.n_cells
    }

    pub fn cell_dim(&self) -> usize {
        dim_p(self.degree)
    }

    fn range(&self, cell: usize, comp: usize) -> std::ops::Range<usize> {
        let n = self.cell_dim();
        let start = (cell * self.components + comp) * n;
        start..start + n
    }

    pub fn cell(&self, cell: usize, comp: usize) -> &[f64] {
        &self.coeffs[self.range(cell, comp)]
    }

    pub fn cell_mut(&mut self, cell: usize, comp: usize) -> &mut [f64] {
        let r = self.range(cell, comp);
        &mut self.coeffs[r]
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn eval(&self, mesh: &PolygonalMesh, cell: usize, comp: usize, p: &Point) -> f64 {
        MonomialBasis::for_cell(mesh, cell, self.degree).evaluate(self.cell(cell, comp), p)
    }
}
