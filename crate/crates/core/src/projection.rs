//! L² projections of exact fields onto cell and edge polynomial spaces.

use nalgebra::DVector;
use rayon::prelude::*;

use crate::error::Result;
use crate::field::{CellField, WeakField};
use crate::mesh::PolygonalMesh;
use crate::polybasis::{factor_mass, mass_matrix, EdgeBasis, MonomialBasis};
use crate::quadrature::{EdgeRule, QuadratureRule};
use crate::Point;

/// Extra quadrature exactness on top of `2·degree + 2` for non-polynomial data.
pub const PROJECTION_BUMP: usize = 8;

/// Projects the `N` components of `f` onto `P_degree(cell)`.
pub fn project_cell_components<const N: usize>(
    mesh: &PolygonalMesh,
    cell: usize,
    degree: usize,
    f: impl Fn(&Point) -> [f64; N],
) -> Result<[DVector<f64>; N]> {
    let quad = QuadratureRule::cell(mesh, cell, 2 * degree + 2 + PROJECTION_BUMP)?;
    let basis = MonomialBasis::for_cell(mesh, cell, degree);
    let chol = factor_mass(mass_matrix(&quad, &basis), cell, degree)?;
    let n = basis.dim();
    let mut rhs: [DVector<f64>; N] = std::array::from_fn(|_| DVector::zeros(n));
    let mut b = vec![0.0; n];
    for (p, &w) in quad.points.iter().zip(&quad.weights) {
        basis.eval_into(p, &mut b);
        let v = f(p);
        for c in 0..N {
            for i in 0..n {
                rhs[c][i] += w * v[c] * b[i];
            }
        }
    }
    Ok(rhs.map(|r| chol.solve(&r)))
}

/// Scalar cell projection (`Q_0` for `degree = k`, `𝒬_h` for `degree = r`).
pub fn project_cell(
    mesh: &PolygonalMesh,
    cell: usize,
    degree: usize,
    f: impl Fn(&Point) -> f64,
) -> Result<DVector<f64>> {
    let [c] = project_cell_components(mesh, cell, degree, |p| [f(p)])?;
    Ok(c)
}

/// Legendre coefficients of the L² projection of `N` components onto
/// `P_k(edge)`. The edge mass matrix is diagonal, so this is an exact division.
pub fn project_edge_components<const N: usize>(
    mesh: &PolygonalMesh,
    edge: usize,
    k: usize,
    f: impl Fn(&Point) -> [f64; N],
) -> [DVector<f64>; N] {
    let eb = EdgeBasis::for_edge(mesh, edge, k);
    let rule = EdgeRule::for_edge(mesh, edge, 2 * k + 2 + PROJECTION_BUMP);
    let mut out: [DVector<f64>; N] = std::array::from_fn(|_| DVector::zeros(k + 1));
    let mut beta = vec![0.0; k + 1];
    for ((p, &s), &w) in rule.points.iter().zip(&rule.params).zip(&rule.weights) {
        eb.eval_param_into(s, &mut beta);
        let v = f(p);
        for c in 0..N {
            for j in 0..=k {
                out[c][j] += w * v[c] * beta[j];
            }
        }
    }
    let diag = eb.mass_diagonal();
    for o in out.iter_mut() {
        for j in 0..=k {
            o[j] /= diag[j];
        }
    }
    out
}

pub fn project_edge(mesh: &PolygonalMesh, edge: usize, k: usize, f: impl Fn(&Point) -> f64) -> DVector<f64> {
    let [c] = project_edge_components(mesh, edge, k, |p| [f(p)]);
    c
}

/// `Q_h u = {Q_0 u, Q_b u}` for a vector field, boundary edges included.
pub fn project_velocity(
    mesh: &PolygonalMesh,
    k: usize,
    u: &(dyn Fn(&Point) -> [f64; 2] + Sync),
) -> Result<WeakField> {
    let mut field = WeakField::zeros(mesh, k);
    let cells: Vec<[DVector<f64>; 2]> = (0..mesh.num_cells())
        .into_par_iter()
        .map(|c| project_cell_components(mesh, c, k, u))
        .collect::<Result<_>>()?;
    for (c, [x, y]) in cells.into_iter().enumerate() {
        field.interior_mut(c, 0).copy_from_slice(x.as_slice());
        field.interior_mut(c, 1).copy_from_slice(y.as_slice());
    }
    let edges: Vec<[DVector<f64>; 2]> = (0..mesh.num_edges())
        .into_par_iter()
        .map(|e| project_edge_components(mesh, e, k, u))
        .collect();
    for (e, [x, y]) in edges.into_iter().enumerate() {
        field.edge_mut(e, 0).copy_from_slice(x.as_slice());
        field.edge_mut(e, 1).copy_from_slice(y.as_slice());
    }
    Ok(field)
}

/// Cellwise projection of an `N`-component field onto `P_degree`.
pub fn project_cells<const N: usize>(
    mesh: &PolygonalMesh,
    degree: usize,
    f: &(dyn Fn(&Point) -> [f64; N] + Sync),
) -> Result<CellField> {
    let cells: Vec<[DVector<f64>; N]> = (0..mesh.num_cells())
        .into_par_iter()
        .map(|c| project_cell_components(mesh, c, degree, f))
        .collect::<Result<_>>()?;
    let mut out = CellField::zeros(mesh.num_cells(), degree, N);
    for (c, comps) in cells.into_iter().enumerate() {
        for (i, v) in comps.iter().enumerate() {
            out.cell_mut(c, i).copy_from_slice(v.as_slice());
        }
    }
    Ok(out)
}
