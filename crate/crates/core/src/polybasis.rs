//! Polynomial bases and the elementary integrals behind the weak operators.
//!
//! Cell polynomials start from centroid-scaled monomials
//! `((x - x_T)/h_T)^a ((y - y_T)/h_T)^b`, `a + b ≤ r`, in graded order
//! (`1, X, Y, X², XY, Y², …`), so the basis of `P_k` is a prefix of the basis
//! of `P_r` for `k ≤ r`. On cells the monomials are orthogonalized in that
//! order (Gram–Schmidt through a Cholesky factor of the Gram matrix), which
//! keeps the prefix property and the constant first function while removing
//! the ill-conditioning of high-degree monomials. Edge polynomials use
//! Legendre polynomials in the reference coordinate of the globally oriented
//! edge.

use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, Dyn};

use crate::error::{Error, Result};
use crate::mesh::PolygonalMesh;
use crate::quadrature::{EdgeRule, QuadratureRule};
use crate::{Point, Vector};

/// `dim P_r` in two variables.
pub const fn dim_p(r: usize) -> usize {
    (r + 1) * (r + 2) / 2
}

/// Scaled monomials, optionally orthogonalized on a cell.
#[derive(Debug, Clone, PartialEq)]
pub struct MonomialBasis {
    pub degree: usize,
    pub center: Point,
    pub scale: f64,
    exponents: Vec<(u32, u32)>,
    /// Packed lower-triangular factor `L` with `L Lᵀ = G / |T|`, `G` the
    /// monomial Gram matrix; the basis is `L⁻¹ m`.
    factor: Option<Arc<Vec<f64>>>,
}

/// Index of `(a, b)` in the graded monomial order.
fn graded_index(a: usize, b: usize) -> usize {
    let s = a + b;
    if s == 0 {
        0
    } else {
        dim_p(s - 1) + b
    }
}

impl MonomialBasis {
    pub fn new(degree: usize, center: Point, scale: f64) -> Self {
        let exponents = (0..=degree as u32)
            .flat_map(|d| (0..=d).map(move |b| (d - b, b)))
            .collect();
        Self {
            degree,
            center,
            scale,
            exponents,
            factor: None,
        }
    }

    /// Raw monomials centered at the cell centroid and scaled by its diameter.
    pub fn scaled_for_cell(mesh: &PolygonalMesh, cell: usize, degree: usize) -> Self {
        let g = mesh.geometry(cell);
        Self::new(degree, g.centroid, g.diameter)
    }

    /// Cell basis orthogonal in `L²(T)` with `∫_T b_i b_j = |T| δ_ij` and
    /// `b_0 = 1`.
    ///
    /// The Gram matrix is built from monomial moments, each computed with a
    /// rule that depends only on its own total degree, so the factor (and
    /// hence the basis) of `P_k` is bitwise the prefix of that of `P_r`. If
    /// the Gram matrix is not numerically positive definite the raw
    /// monomials are returned and the failure surfaces at mass
    /// factorization.
    pub fn for_cell(mesh: &PolygonalMesh, cell: usize, degree: usize) -> Self {
        let mut basis = Self::scaled_for_cell(mesh, cell, degree);
        if let Some(l) = basis.orthogonal_factor(mesh, cell) {
            basis.factor = Some(Arc::new(l));
        }
        basis
    }

    fn orthogonal_factor(&self, mesh: &PolygonalMesh, cell: usize) -> Option<Vec<f64>> {
        let top = 2 * self.degree;
        let mut moments = vec![0.0; dim_p(top)];
        for s in 0..=top {
            let quad = QuadratureRule::cell(mesh, cell, s).ok()?;
            for (p, &w) in quad.points.iter().zip(&quad.weights) {
                let x = (p.x - self.center.x) / self.scale;
                let y = (p.y - self.center.y) / self.scale;
                for b in 0..=s {
                    moments[graded_index(s - b, b)] += w * x.powi((s - b) as i32) * y.powi(b as i32);
                }
            }
        }
        let area = moments[0];
        if !(area > 0.0) {
            return None;
        }
        let n = self.dim();
        let gram = |i: usize, j: usize| {
            let (ai, bi) = self.exponents[i];
            let (aj, bj) = self.exponents[j];
            moments[graded_index((ai + aj) as usize, (bi + bj) as usize)] / area
        };
        // row-wise Cholesky: row i only reads rows < i, so prefixes agree
        let mut l = vec![0.0; n * (n + 1) / 2];
        let at = |i: usize, j: usize| i * (i + 1) / 2 + j;
        for i in 0..n {
            for j in 0..=i {
                let mut sum = gram(i, j);
                for q in 0..j {
                    sum -= l[at(i, q)] * l[at(j, q)];
                }
                if i == j {
                    if !(sum > 0.0) {
                        return None;
                    }
                    l[at(i, i)] = sum.sqrt();
                } else {
                    l[at(i, j)] = sum / l[at(j, j)];
                }
            }
        }
        Some(l)
    }

    pub fn is_orthogonalized(&self) -> bool {
        self.factor.is_some()
    }

    /// Applies `L⁻¹` in place by forward substitution.
    fn orthogonalize(&self, v: &mut [f64]) {
        if let Some(l) = &self.factor {
            for i in 0..v.len() {
                let row = &l[i * (i + 1) / 2..];
                let mut s = v[i];
                for q in 0..i {
                    s -= row[q] * v[q];
                }
                v[i] = s / row[i];
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.exponents.len()
    }

    pub fn exponents(&self) -> &[(u32, u32)] {
        &self.exponents
    }

    fn scaled_powers(&self, p: &Point) -> (Vec<f64>, Vec<f64>) {
        let x = (p.x - self.center.x) / self.scale;
        let y = (p.y - self.center.y) / self.scale;
        let mut px = vec![1.0; self.degree + 1];
        let mut py = vec![1.0; self.degree + 1];
        for i in 1..=self.degree {
            px[i] = px[i - 1] * x;
            py[i] = py[i - 1] * y;
        }
        (px, py)
    }

    pub fn eval_into(&self, p: &Point, out: &mut [f64]) {
        let (px, py) = self.scaled_powers(p);
        for (o, &(a, b)) in out.iter_mut().zip(&self.exponents) {
            *o = px[a as usize] * py[b as usize];
        }
        self.orthogonalize(out);
    }

    pub fn eval(&self, p: &Point) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.eval_into(p, &mut out);
        out
    }

    /// Partial derivatives of every basis function.
    pub fn eval_grad_into(&self, p: &Point, dx: &mut [f64], dy: &mut [f64]) {
        let (px, py) = self.scaled_powers(p);
        let inv = 1.0 / self.scale;
        for (i, &(a, b)) in self.exponents.iter().enumerate() {
            let (a, b) = (a as usize, b as usize);
            dx[i] = if a > 0 { a as f64 * inv * px[a - 1] * py[b] } else { 0.0 };
            dy[i] = if b > 0 { b as f64 * inv * px[a] * py[b - 1] } else { 0.0 };
        }
        self.orthogonalize(dx);
        self.orthogonalize(dy);
    }

    /// Evaluates the polynomial with the given coefficients (a prefix of the
    /// basis is used when `coeffs` is shorter).
    pub fn evaluate(&self, coeffs: &[f64], p: &Point) -> f64 {
        let v = self.eval(p);
        coeffs.iter().zip(&v).map(|(c, b)| c * b).sum()
    }
}

/// Legendre values `P_0..=P_k` at `s ∈ [-1, 1]`.
pub fn legendre_values(k: usize, s: f64, out: &mut [f64]) {
    out[0] = 1.0;
    if k >= 1 {
        out[1] = s;
    }
    for j in 2..=k {
        out[j] = ((2 * j - 1) as f64 * s * out[j - 1] - (j - 1) as f64 * out[j - 2]) / j as f64;
    }
}

/// Legendre basis on a straight edge, parameterized from `start` (`s = -1`)
/// to `end` (`s = 1`).
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeBasis {
    pub degree: usize,
    pub start: Point,
    pub end: Point,
}

impl EdgeBasis {
    pub fn new(degree: usize, start: Point, end: Point) -> Self {
        Self { degree, start, end }
    }

    /// Basis in the edge's global orientation (lower to higher vertex id).
    pub fn for_edge(mesh: &PolygonalMesh, edge: usize, degree: usize) -> Self {
        let (a, b) = mesh.edge_points(edge);
        Self::new(degree, a, b)
    }

    pub fn dim(&self) -> usize {
        self.degree + 1
    }

    pub fn length(&self) -> f64 {
        (self.end - self.start).norm()
    }

    /// Reference coordinate of the orthogonal projection of `p` on the edge.
    pub fn param(&self, p: &Point) -> f64 {
        let d = self.end - self.start;
        2.0 * (p - self.start).dot(&d) / d.norm_squared() - 1.0
    }

    pub fn eval_param_into(&self, s: f64, out: &mut [f64]) {
        legendre_values(self.degree, s, out);
    }

    pub fn eval(&self, p: &Point) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        legendre_values(self.degree, self.param(p), &mut out);
        out
    }

    /// Diagonal of the edge mass matrix, `|e| / (2j + 1)`.
    pub fn mass_diagonal(&self) -> Vec<f64> {
        let len = self.length();
        (0..=self.degree).map(|j| len / (2 * j + 1) as f64).collect()
    }

    pub fn evaluate(&self, coeffs: &[f64], p: &Point) -> f64 {
        let v = self.eval(p);
        coeffs.iter().zip(&v).map(|(c, b)| c * b).sum()
    }
}

/// `M[i][j] = ∫_T b_i b_j`.
pub fn mass_matrix(quad: &QuadratureRule, basis: &MonomialBasis) -> DMatrix<f64> {
    let n = basis.dim();
    let mut m = DMatrix::zeros(n, n);
    let mut v = vec![0.0; n];
    for (p, &w) in quad.points.iter().zip(&quad.weights) {
        basis.eval_into(p, &mut v);
        for j in 0..n {
            let wj = w * v[j];
            for i in j..n {
                m[(i, j)] += wj * v[i];
            }
        }
    }
    m.fill_upper_triangle_with_lower_triangle();
    m
}

/// Cholesky factor of a cell mass matrix; failure names the cell.
pub fn factor_mass(m: DMatrix<f64>, cell: usize, degree: usize) -> Result<Cholesky<f64, Dyn>> {
    Cholesky::new(m).ok_or(Error::SingularMass { cell, degree })
}

/// `(C_x, C_y)` with `C_c[i][j] = ∫_T b_i ∂_c q_j`, for trial functions `b`
/// and test functions `q`.
pub fn grad_div_coupling(
    quad: &QuadratureRule,
    trial: &MonomialBasis,
    test: &MonomialBasis,
) -> (DMatrix<f64>, DMatrix<f64>) {
    let (nb, nq) = (trial.dim(), test.dim());
    let mut cx = DMatrix::zeros(nb, nq);
    let mut cy = DMatrix::zeros(nb, nq);
    let mut b = vec![0.0; nb];
    let (mut dx, mut dy) = (vec![0.0; nq], vec![0.0; nq]);
    for (p, &w) in quad.points.iter().zip(&quad.weights) {
        trial.eval_into(p, &mut b);
        test.eval_grad_into(p, &mut dx, &mut dy);
        for j in 0..nq {
            let (wx, wy) = (w * dx[j], w * dy[j]);
            for i in 0..nb {
                cx[(i, j)] += b[i] * wx;
                cy[(i, j)] += b[i] * wy;
            }
        }
    }
    (cx, cy)
}

/// Normal component selector for [`edge_coupling`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Component {
    X,
    Y,
}

impl Component {
    pub fn of(self, v: &Vector) -> f64 {
        match self {
            Component::X => v.x,
            Component::Y => v.y,
        }
    }
}

/// `E[i][j] = ∫_e β_i q_j n_c ds` for edge functions `β`, cell functions `q`
/// and the outward normal `normal`.
pub fn edge_coupling(
    rule: &EdgeRule,
    edge_basis: &EdgeBasis,
    cell_basis: &MonomialBasis,
    normal: &Vector,
    component: Component,
) -> DMatrix<f64> {
    let n_c = component.of(normal);
    let (ne, nq) = (edge_basis.dim(), cell_basis.dim());
    let mut e = DMatrix::zeros(ne, nq);
    let mut beta = vec![0.0; ne];
    let mut q = vec![0.0; nq];
    for ((p, &s), &w) in rule.points.iter().zip(&rule.params).zip(&rule.weights) {
        edge_basis.eval_param_into(s, &mut beta);
        cell_basis.eval_into(p, &mut q);
        for j in 0..nq {
            let wq = w * q[j] * n_c;
            for i in 0..ne {
                e[(i, j)] += beta[i] * wq;
            }
        }
    }
    e
}

/// Unscaled edge moments `∫_e β_i q_j ds`.
pub fn edge_moments(rule: &EdgeRule, edge_basis: &EdgeBasis, cell_basis: &MonomialBasis) -> DMatrix<f64> {
    let (ne, nq) = (edge_basis.dim(), cell_basis.dim());
    let mut e = DMatrix::zeros(ne, nq);
    let mut beta = vec![0.0; ne];
    let mut q = vec![0.0; nq];
    for ((p, &s), &w) in rule.points.iter().zip(&rule.params).zip(&rule.weights) {
        edge_basis.eval_param_into(s, &mut beta);
        cell_basis.eval_into(p, &mut q);
        for j in 0..nq {
            let wq = w * q[j];
            for i in 0..ne {
                e[(i, j)] += beta[i] * wq;
            }
        }
    }
    e
}
