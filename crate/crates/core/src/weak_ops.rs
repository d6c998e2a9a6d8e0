//! Discrete weak gradient and weak divergence on a single cell.
//!
//! For a weak function `v = {v₀, v_b}` on `T` the discrete weak gradient
//! `∇_w v ∈ [P_r(T)]^{2×2}` is the unique polynomial with
//!
//! ```text
//! (∇_w v, φ)_T = -(v₀, ∇·φ)_T + ⟨v_b, φ·n⟩_∂T   for all φ ∈ [P_r(T)]^{2×2},
//! ```
//!
//! and the weak divergence `∇_w·v ∈ P_{k-1}(T)` satisfies
//!
//! ```text
//! (∇_w·v, w)_T = -(v₀, ∇w)_T + ⟨v_b·n, w⟩_∂T   for all w ∈ P_{k-1}(T).
//! ```
//!
//! Row `i` of the tensor gradient only involves component `i` of `v`, so the
//! tensor operator is two copies of one scalar operator. Both operators are
//! returned as dense matrices acting on the local DOF vector.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::mesh::PolygonalMesh;
use crate::polybasis::{
    dim_p, edge_coupling, factor_mass, grad_div_coupling, mass_matrix, Component, EdgeBasis,
    MonomialBasis,
};
use crate::quadrature::{EdgeRule, QuadratureRule};

/// Ordering of the local velocity DOFs of a cell:
/// `[v₀ˣ (dim P_k), v₀ʸ (dim P_k), then per edge in loop order: v_bˣ (k+1), v_bʸ (k+1)]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LocalDofLayout {
    pub k: usize,
    pub n_edges: usize,
}

impl LocalDofLayout {
    pub fn new(k: usize, n_edges: usize) -> Self {
        Self { k, n_edges }
    }

    pub fn cell_dim(&self) -> usize {
        dim_p(self.k)
    }

    pub fn edge_dim(&self) -> usize {
        self.k + 1
    }

    /// DOFs of one velocity component.
    pub fn scalar_len(&self) -> usize {
        self.cell_dim() + self.n_edges * self.edge_dim()
    }

    pub fn len(&self) -> usize {
        2 * self.scalar_len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn interior(&self, comp: usize, i: usize) -> usize {
        comp * self.cell_dim() + i
    }

    pub fn edge(&self, local_edge: usize, comp: usize, j: usize) -> usize {
        2 * self.cell_dim() + (2 * local_edge + comp) * self.edge_dim() + j
    }

    /// Maps an index of the scalar layout `[v₀ (dim P_k), per edge (k+1)]`
    /// of component `comp` to the full local layout.
    pub fn scalar_to_local(&self, comp: usize, s: usize) -> usize {
        let nc = self.cell_dim();
        if s < nc {
            self.interior(comp, s)
        } else {
            let t = s - nc;
            self.edge(t / self.edge_dim(), comp, t % self.edge_dim())
        }
    }

    fn scalar_part(&self, local: &[f64], comp: usize) -> DVector<f64> {
        DVector::from_iterator(
            self.scalar_len(),
            (0..self.scalar_len()).map(|s| local[self.scalar_to_local(comp, s)]),
        )
    }
}

/// Weak gradient on one cell.
///
/// `gx` and `gy` map the scalar DOFs of one velocity component to the
/// `P_r` coefficients of its x- and y-derivative.
#[derive(Debug, Clone)]
pub struct WeakGradientMatrix {
    pub k: usize,
    pub r: usize,
    pub layout: LocalDofLayout,
    pub gx: DMatrix<f64>,
    pub gy: DMatrix<f64>,
}

impl WeakGradientMatrix {
    /// Matrix of tensor entry `(i, j)`, i.e. `∂_j v_i`, on the full local layout.
    pub fn entry(&self, i: usize, j: usize) -> DMatrix<f64> {
        let g = if j == 0 { &self.gx } else { &self.gy };
        let mut out = DMatrix::zeros(g.nrows(), self.layout.len());
        for s in 0..self.layout.scalar_len() {
            out.set_column(self.layout.scalar_to_local(i, s), &g.column(s));
        }
        out
    }

    /// All four tensor entries stacked in the order `(0,0), (0,1), (1,0), (1,1)`.
    pub fn full(&self) -> DMatrix<f64> {
        let nr = self.gx.nrows();
        let mut out = DMatrix::zeros(4 * nr, self.layout.len());
        for i in 0..2 {
            for j in 0..2 {
                out.rows_mut((2 * i + j) * nr, nr).copy_from(&self.entry(i, j));
            }
        }
        out
    }

    /// Coefficients of `∂_j v_i` as `result[i][j]`.
    pub fn apply(&self, local: &[f64]) -> [[DVector<f64>; 2]; 2] {
        let s0 = self.layout.scalar_part(local, 0);
        let s1 = self.layout.scalar_part(local, 1);
        [
            [&self.gx * &s0, &self.gy * &s0],
            [&self.gx * &s1, &self.gy * &s1],
        ]
    }
}

/// Weak divergence on one cell.
#[derive(Debug, Clone)]
pub struct WeakDivergenceMatrix {
    pub k: usize,
    pub layout: LocalDofLayout,
    /// Local DOFs to `P_{k-1}` coefficients of `∇_w·v`.
    pub matrix: DMatrix<f64>,
    /// Local DOFs to the moments `(∇_w·v, w_j)_T`; equals `M_{k-1} · matrix`.
    pub moments: DMatrix<f64>,
}

impl WeakDivergenceMatrix {
    pub fn apply(&self, local: &[f64]) -> DVector<f64> {
        &self.matrix * DVector::from_column_slice(local)
    }
}

/// Everything a cell contributes to the discrete problem: bases, mass
/// matrices and both weak operators, sharing one quadrature rule.
#[derive(Debug, Clone)]
pub struct CellOperators {
    pub cell: usize,
    pub k: usize,
    pub r: usize,
    pub layout: LocalDofLayout,
    pub quad: QuadratureRule,
    /// Basis of `P_max(k, r)`; lower degrees are prefixes of it.
    pub basis: MonomialBasis,
    pub mass_k: DMatrix<f64>,
    pub mass_r: DMatrix<f64>,
    pub mass_p: DMatrix<f64>,
    pub grad: WeakGradientMatrix,
    pub div: WeakDivergenceMatrix,
}

/// Checks `k ≥ 1` and `r ≥ k - 1`.
pub fn check_degrees(k: usize, r: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::InvalidParameter("velocity degree k must be at least 1".into()));
    }
    if r + 1 < k {
        return Err(Error::InvalidParameter(format!(
            "weak gradient degree r = {r} must be at least k - 1 = {}",
            k - 1
        )));
    }
    Ok(())
}

impl CellOperators {
    /// Builds the cell operators with volume quadrature exact to
    /// `2·max(r, k) + 2 + bump` and edge quadrature exact to `k + r + 2 + bump`.
    pub fn new(mesh: &PolygonalMesh, cell: usize, k: usize, r: usize, bump: usize) -> Result<Self> {
        check_degrees(k, r)?;
        let dmax = r.max(k);
        let (nk, nr, np) = (dim_p(k), dim_p(r), dim_p(k - 1));
        let layout = LocalDofLayout::new(k, mesh.cell_edges(cell).len());
        let quad = QuadratureRule::cell(mesh, cell, 2 * dmax + 2 + bump)?;
        let basis = MonomialBasis::for_cell(mesh, cell, dmax);
        let basis_k = MonomialBasis::for_cell(mesh, cell, k);

        let mass = mass_matrix(&quad, &basis);
        let mass_k = mass.view((0, 0), (nk, nk)).into_owned();
        let mass_r = mass.view((0, 0), (nr, nr)).into_owned();
        let mass_p = mass.view((0, 0), (np, np)).into_owned();
        let chol_r = factor_mass(mass_r.clone(), cell, r)?;
        let chol_p = factor_mass(mass_p.clone(), cell, k - 1)?;

        // C_c[i][j] = ∫ b_i ∂_c q_j with b ∈ P_k, q ∈ P_max
        let (cx, cy) = grad_div_coupling(&quad, &basis_k, &basis);

        let ns = layout.scalar_len();
        let mut rx = DMatrix::zeros(nr, ns);
        let mut ry = DMatrix::zeros(nr, ns);
        let mut rdiv = DMatrix::zeros(np, layout.len());
        for i in 0..nk {
            for j in 0..nr {
                rx[(j, i)] = -cx[(i, j)];
                ry[(j, i)] = -cy[(i, j)];
            }
            for j in 0..np {
                rdiv[(j, layout.interior(0, i))] = -cx[(i, j)];
                rdiv[(j, layout.interior(1, i))] = -cy[(i, j)];
            }
        }

        let edge_exactness = k + dmax + 2 + bump;
        for (local, &e) in mesh.cell_edges(cell).iter().enumerate() {
            let n = mesh.local_normal(cell, local);
            let eb = EdgeBasis::for_edge(mesh, e, k);
            let rule = EdgeRule::for_edge(mesh, e, edge_exactness);
            let ex = edge_coupling(&rule, &eb, &basis, &n, Component::X);
            let ey = edge_coupling(&rule, &eb, &basis, &n, Component::Y);
            for a in 0..=k {
                let col = nk + local * (k + 1) + a;
                for j in 0..nr {
                    rx[(j, col)] = ex[(a, j)];
                    ry[(j, col)] = ey[(a, j)];
                }
                for j in 0..np {
                    rdiv[(j, layout.edge(local, 0, a))] = ex[(a, j)];
                    rdiv[(j, layout.edge(local, 1, a))] = ey[(a, j)];
                }
            }
        }

        let grad = WeakGradientMatrix {
            k,
            r,
            layout,
            gx: chol_r.solve(&rx),
            gy: chol_r.solve(&ry),
        };
        let div = WeakDivergenceMatrix {
            k,
            layout,
            matrix: chol_p.solve(&rdiv),
            moments: rdiv,
        };
        Ok(Self {
            cell,
            k,
            r,
            layout,
            quad,
            basis,
            mass_k,
            mass_r,
            mass_p,
            grad,
            div,
        })
    }

    /// Local stiffness `(∇_w u, ∇_w v)_T + κ⁻¹ (u₀, v₀)_T` on the full local layout.
    pub fn stiffness(&self, kappa_inv: f64) -> DMatrix<f64> {
        let g = &self.grad;
        let mr = &self.mass_r;
        let ks = g.gx.transpose() * (mr * &g.gx) + g.gy.transpose() * (mr * &g.gy);
        let ks = (&ks + ks.transpose()) * 0.5;
        let n = self.layout.len();
        let ns = self.layout.scalar_len();
        let mut a = DMatrix::zeros(n, n);
        for comp in 0..2 {
            for s in 0..ns {
                let is = self.layout.scalar_to_local(comp, s);
                for t in 0..ns {
                    a[(is, self.layout.scalar_to_local(comp, t))] = ks[(s, t)];
                }
            }
        }
        if kappa_inv != 0.0 {
            let nk = self.layout.cell_dim();
            for comp in 0..2 {
                for i in 0..nk {
                    for j in 0..nk {
                        a[(self.layout.interior(comp, i), self.layout.interior(comp, j))] +=
                            kappa_inv * self.mass_k[(i, j)];
                    }
                }
            }
        }
        a
    }

    /// Local block of `b(v, q) = -(∇_w·v, q)_T`: rows are pressure basis
    /// functions, columns local velocity DOFs.
    pub fn divergence_block(&self) -> DMatrix<f64> {
        -&self.div.moments
    }

    /// `∫_T f_c b_i` for the interior DOFs; edge entries are zero.
    pub fn load(&self, f: &(dyn Fn(&crate::Point) -> [f64; 2] + Sync)) -> Vec<f64> {
        let nk = self.layout.cell_dim();
        let mut out = vec![0.0; self.layout.len()];
        let mut b = vec![0.0; self.basis.dim()];
        for (p, &w) in self.quad.points.iter().zip(&self.quad.weights) {
            self.basis.eval_into(p, &mut b);
            let fv = f(p);
            for i in 0..nk {
                out[self.layout.interior(0, i)] += w * fv[0] * b[i];
                out[self.layout.interior(1, i)] += w * fv[1] * b[i];
            }
        }
        out
    }
}

/// Weak gradient matrix of a cell in `P_r`.
pub fn weak_gradient_matrix(mesh: &PolygonalMesh, cell: usize, k: usize, r: usize) -> Result<WeakGradientMatrix> {
    Ok(CellOperators::new(mesh, cell, k, r, 0)?.grad)
}

/// Weak divergence matrix of a cell in `P_{k-1}`.
pub fn weak_divergence_matrix(mesh: &PolygonalMesh, cell: usize, k: usize) -> Result<WeakDivergenceMatrix> {
    Ok(CellOperators::new(mesh, cell, k, k.saturating_sub(1), 0)?.div)
}
