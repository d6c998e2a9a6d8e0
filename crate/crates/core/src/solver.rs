//! Direct solution of the saddle-point system.

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::assembly::{Discretization, DofMap, SaddleSystem, SparseMatrix};
use crate::error::{Error, Result};
use crate::field::{CellField, WeakField};
use crate::mesh::PolygonalMesh;
use crate::weak_ops::weak_divergence_matrix;

/// Relative residual above which a solve is flagged.
pub const RESIDUAL_WARNING: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SolveStatus {
    Converged,
    /// The factorization succeeded but the relative residual exceeds
    /// [`RESIDUAL_WARNING`].
    HighResidual(f64),
}

/// Output of [`solve`].
#[derive(Debug, Clone)]
pub struct DiscreteSolution {
    /// `u_h = {u₀, u_b}`, boundary edges exactly zero.
    pub velocity: WeakField,
    /// `p_h`, one `P_{k-1}` component per cell.
    pub pressure: CellField,
    /// Lagrange multiplier of the pressure-mean constraint.
    pub multiplier: f64,
    /// Parameters the system was assembled with.
    pub disc: Discretization,
    /// `‖Kx − b‖ / ‖b‖` (absolute when `b = 0`).
    pub residual: f64,
    pub status: SolveStatus,
    /// Raw solution vector in [`DofMap`] order.
    pub raw: Vec<f64>,
}

impl DiscreteSolution {
    pub fn degree(&self) -> usize {
        self.velocity.degree()
    }

    /// `∫_Ω p_h`.
    pub fn pressure_mean(&self, system: &SaddleSystem) -> f64 {
        let m = system.mean_vector();
        let p0 = system.n_velocity;
        m.iter().enumerate().map(|(i, mi)| mi * self.raw[p0 + i]).sum()
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// How the global system is reduced before the sparse factorization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SolveMethod {
    /// Per cell, the interior velocity and the non-constant pressure modes
    /// are eliminated with a dense local solve; the sparse factorization
    /// only sees edge velocities, cell-mean pressures and the multiplier.
    Condensed,
    /// Factor the full saddle-point matrix.
    #[default]
    Monolithic,
}

/// Sparse factorization used for the (reduced) global system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Backend {
    /// AMD-ordered `LDLᵀ` of a quasi-definite regularization, followed by
    /// iterative refinement against the exact matrix.
    #[default]
    Ldlt,
    /// Unsymmetric sparse LU with partial pivoting.
    Lu,
}

fn lu_solve(matrix: &SparseMatrix, rhs: &[f64]) -> Result<Vec<f64>> {
    let n = matrix.nrows();
    let triplets: Vec<_> = matrix.triplets().map(|(i, j, v)| Triplet::new(i, j, v)).collect();
    let k = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &triplets)
        .map_err(|e| Error::InvalidParameter(format!("sparse matrix construction failed: {e:?}")))?;
    let lu = k.sp_lu().map_err(|e| match e {
        faer::sparse::linalg::LuError::SymbolicSingular { index } => Error::Singular { pivot: index },
        other => Error::InvalidParameter(format!("sparse factorization failed: {other:?}")),
    })?;
    let b = faer::Col::<f64>::from_fn(n, |i| rhs[i]);
    let x = lu.solve(&b);
    Ok((0..n).map(|i| x[i]).collect())
}

const LDLT_REGULARIZATION: f64 = 1e-7;
const MAX_REFINEMENT_STEPS: usize = 40;
const SINGULAR_PROBE: f64 = 1e-6;

fn relative_residual(matrix: &SparseMatrix, x: &[f64], rhs: &[f64]) -> (Vec<f64>, f64) {
    let kx = matrix.matvec(x);
    let r: Vec<f64> = rhs.iter().zip(&kx).map(|(b, a)| b - a).collect();
    let bn = norm(rhs);
    let rn = norm(&r);
    (r, if bn > 0.0 { rn / bn } else { rn })
}

/// Solves a symmetric saddle-point system `K x = b`. Rows flagged in
/// `negative` form the constraint block. The factored matrix is `K` with
/// `−ε_i` added on the constraint rows and `+ε_i` on positive rows with an
/// empty diagonal, which makes it quasi-definite so any symmetric ordering
/// is stable; refinement then removes the perturbation.
fn ldlt_solve(matrix: &SparseMatrix, rhs: &[f64], negative: &[bool]) -> Result<Vec<f64>> {
    use faer::dyn_stack::{MemBuffer, MemStack};
    use faer::linalg::cholesky::ldlt::factor::LdltRegularization;
    use faer::sparse::linalg::cholesky::{factorize_symbolic_cholesky, LdltRef, SymmetricOrdering};
    use faer::{Conj, MatMut, Par, Side};

    let n = matrix.nrows();
    let diag: Vec<f64> = (0..n).map(|i| matrix.get(i, i)).collect();
    let (sum, count) = (0..n)
        .filter(|&i| !negative[i] && diag[i] != 0.0)
        .fold((0.0, 0usize), |(s, c), i| (s + diag[i].abs(), c + 1));
    let typical = if count > 0 { sum / count as f64 } else { 1.0 };
    let mut triplets = Vec::with_capacity(matrix.nnz() / 2 + n);
    for i in 0..n {
        let mut off = 0.0;
        for (j, v) in matrix.row(i) {
            if j <= i {
                triplets.push(Triplet::new(i, j, v));
            }
            if j != i {
                off += v * v;
            }
        }
        let eps = LDLT_REGULARIZATION * (off / typical).max(f64::MIN_POSITIVE);
        if negative[i] {
            triplets.push(Triplet::new(i, i, -eps));
        } else if diag[i] == 0.0 {
            triplets.push(Triplet::new(i, i, eps));
        }
    }
    let a = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &triplets)
        .map_err(|e| Error::InvalidParameter(format!("sparse matrix construction failed: {e:?}")))?;
    let symbolic = factorize_symbolic_cholesky(a.symbolic(), Side::Lower, SymmetricOrdering::Amd, Default::default())
        .map_err(|e| Error::InvalidParameter(format!("symbolic factorization failed: {e:?}")))?;
    let signs: Vec<i8> = negative.iter().map(|&neg| if neg { -1 } else { 1 }).collect();
    let mut values = vec![0.0; symbolic.len_val()];
    let req = symbolic
        .factorize_numeric_ldlt_scratch::<f64>(Par::Seq, Default::default())
        .or(symbolic.solve_in_place_scratch::<f64>(1, Par::Seq));
    let mut mem = MemBuffer::try_new(req).map_err(|_| Error::InvalidParameter("out of memory".into()))?;
    let stack = MemStack::new(&mut mem);
    let regularization = LdltRegularization {
        dynamic_regularization_signs: Some(&signs),
        dynamic_regularization_delta: LDLT_REGULARIZATION * typical,
        dynamic_regularization_epsilon: f64::EPSILON * LDLT_REGULARIZATION * typical,
    };
    symbolic
        .factorize_numeric_ldlt(&mut values, a.as_ref(), Side::Lower, regularization, Par::Seq, stack, Default::default())
        .map_err(|e| match e {
            faer::linalg::cholesky::ldlt::factor::LdltError::ZeroPivot { index } => Error::Singular { pivot: index },
        })?;
    drop(a);
    let ldlt = LdltRef::<usize, f64>::new(&symbolic, &values);
    let mut apply = |v: &mut Vec<f64>| {
        ldlt.solve_in_place_with_conj(Conj::No, MatMut::from_column_major_slice_mut(v, n, 1), Par::Seq, stack);
    };

    let mut refine = |b: &[f64]| {
        let mut x = b.to_vec();
        apply(&mut x);
        let (mut r, mut res) = relative_residual(matrix, &x, b);
        for _ in 0..MAX_REFINEMENT_STEPS {
            if !res.is_finite() || res < 1e-15 {
                break;
            }
            apply(&mut r);
            let trial: Vec<f64> = x.iter().zip(&r).map(|(a, d)| a + d).collect();
            let (r_new, res_new) = relative_residual(matrix, &trial, b);
            if !(res_new < 0.9 * res) {
                if res_new < res {
                    x = trial;
                    res = res_new;
                }
                break;
            }
            x = trial;
            r = r_new;
            res = res_new;
        }
        (x, res)
    };

    let (x, _) = refine(rhs);
    // A singular K leaves a generic right-hand side outside its range, so
    // refinement on a probe vector stalls; the largest probe entry marks the
    // null direction.
    let probe: Vec<f64> = (0..n)
        .map(|i| ((i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) >> 11) as f64 / (1u64 << 53) as f64 - 0.5)
        .collect();
    let (y, res) = refine(&probe);
    if !(res < SINGULAR_PROBE) {
        let pivot = (0..n)
            .max_by(|&a, &b| y[a].abs().partial_cmp(&y[b].abs()).unwrap_or(std::cmp::Ordering::Equal))
            .unwrap_or(0);
        return Err(Error::Singular { pivot });
    }
    Ok(x)
}

fn sparse_solve(matrix: &SparseMatrix, rhs: &[f64], negative: &[bool], backend: Backend) -> Result<Vec<f64>> {
    let x = match backend {
        Backend::Ldlt => ldlt_solve(matrix, rhs, negative)?,
        Backend::Lu => {
            let x = lu_solve(matrix, rhs)?;
            // Numerically singular pivots survive LU and blow up the residual.
            let (_, res) = relative_residual(matrix, &x, rhs);
            if !(res < SINGULAR_PROBE) {
                let pivot = (0..x.len())
                    .max_by(|&a, &b| x[a].abs().partial_cmp(&x[b].abs()).unwrap_or(std::cmp::Ordering::Equal))
                    .unwrap_or(0);
                return Err(Error::Singular { pivot });
            }
            x
        }
    };
    if let Some(pivot) = x.iter().position(|v| !v.is_finite()) {
        return Err(Error::Singular { pivot });
    }
    Ok(x)
}

/// Solves `Kx = b` after eliminating the index groups in `local`. Every
/// group must couple to no other group, so `K` restricted to the union of
/// the groups is block diagonal. `negative` flags the constraint rows of the
/// global remainder (see [`Backend::Ldlt`]).
pub fn solve_condensed(
    matrix: &SparseMatrix,
    rhs: &[f64],
    local: &[Vec<usize>],
    negative: &[bool],
    backend: Backend,
) -> Result<Vec<f64>> {
    let n = matrix.nrows();
    const GLOBAL: usize = usize::MAX;
    let mut group_of = vec![GLOBAL; n];
    for (g, idx) in local.iter().enumerate() {
        for &i in idx {
            group_of[i] = g;
        }
    }
    let mut compact = vec![GLOBAL; n];
    let mut globals = Vec::new();
    for i in 0..n {
        if group_of[i] == GLOBAL {
            compact[i] = globals.len();
            globals.push(i);
        }
    }
    let kt = matrix.transpose();

    struct Local {
        lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
        // K_LG as (local row, compact global col, value)
        lg: Vec<(usize, usize, f64)>,
        // columns of K_GL: compact global rows touching this group
        gl_rows: Vec<usize>,
        gl: DMatrix<f64>,
    }

    let locals: Vec<Local> = local
        .par_iter()
        .enumerate()
        .map(|(g, idx)| {
            let m = idx.len();
            let pos = |i: usize| idx.iter().position(|&x| x == i);
            let mut kll = DMatrix::zeros(m, m);
            let mut lg = Vec::new();
            for (a, &i) in idx.iter().enumerate() {
                for (j, v) in matrix.row(i) {
                    if group_of[j] == g {
                        kll[(a, pos(j).unwrap())] = v;
                    } else if group_of[j] == GLOBAL {
                        lg.push((a, compact[j], v));
                    } else {
                        return Err(Error::InvalidParameter(format!(
                            "condensation groups {g} and {} are coupled",
                            group_of[j]
                        )));
                    }
                }
            }
            let mut gl_rows: Vec<usize> = idx
                .iter()
                .flat_map(|&i| kt.row(i).filter(|&(j, _)| group_of[j] == GLOBAL).map(|(j, _)| compact[j]))
                .collect();
            gl_rows.sort_unstable();
            gl_rows.dedup();
            let mut gl = DMatrix::zeros(gl_rows.len(), m);
            for (a, &i) in idx.iter().enumerate() {
                for (j, v) in kt.row(i) {
                    if group_of[j] == GLOBAL {
                        gl[(gl_rows.binary_search(&compact[j]).unwrap(), a)] = v;
                    }
                }
            }
            let lu = kll.lu();
            if !lu.is_invertible() {
                return Err(Error::Singular { pivot: idx[0] });
            }
            Ok(Local { lu, lg, gl_rows, gl })
        })
        .collect::<Result<_>>()?;

    let ng = globals.len();
    let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
    for &i in &globals {
        for (j, v) in matrix.row(i) {
            if group_of[j] == GLOBAL {
                triplets.push((compact[i], compact[j], v));
            }
        }
    }
    let mut bg: Vec<f64> = globals.iter().map(|&i| rhs[i]).collect();
    let updates: Vec<(Vec<(usize, usize, f64)>, Vec<(usize, f64)>)> = locals
        .par_iter()
        .zip(local)
        .map(|(loc, idx)| {
            // K_GL K_LL⁻¹ K_LG restricted to the touched global columns
            let mut cols: Vec<usize> = loc.lg.iter().map(|&(_, c, _)| c).collect();
            cols.sort_unstable();
            cols.dedup();
            let mut klg = DMatrix::zeros(idx.len(), cols.len());
            for &(a, c, v) in &loc.lg {
                klg[(a, cols.binary_search(&c).unwrap())] = v;
            }
            let x = loc.lu.solve(&klg).expect("invertible local block");
            let upd = &loc.gl * x;
            let mut t = Vec::with_capacity(upd.len());
            for (r, &gr) in loc.gl_rows.iter().enumerate() {
                for (c, &gc) in cols.iter().enumerate() {
                    t.push((gr, gc, -upd[(r, c)]));
                }
            }
            let bl = DVector::from_iterator(idx.len(), idx.iter().map(|&i| rhs[i]));
            let y = &loc.gl * loc.lu.solve(&bl).expect("invertible local block");
            let b: Vec<(usize, f64)> = loc.gl_rows.iter().zip(y.iter()).map(|(&r, &v)| (r, -v)).collect();
            (t, b)
        })
        .collect();
    for (t, b) in updates {
        triplets.extend(t);
        for (r, v) in b {
            bg[r] += v;
        }
    }
    let schur = SparseMatrix::from_triplets(ng, ng, triplets);
    let neg_g: Vec<bool> = globals.iter().map(|&i| negative[i]).collect();
    let xg = sparse_solve(&schur, &bg, &neg_g, backend).map_err(|e| match e {
        Error::Singular { pivot } => Error::Singular { pivot: globals[pivot] },
        other => other,
    })?;

    let mut x = vec![0.0; n];
    for (c, &i) in globals.iter().enumerate() {
        x[i] = xg[c];
    }
    let back: Vec<DVector<f64>> = locals
        .par_iter()
        .zip(local)
        .map(|(loc, idx)| {
            let mut r = DVector::from_iterator(idx.len(), idx.iter().map(|&i| rhs[i]));
            for &(a, c, v) in &loc.lg {
                r[a] -= v * xg[c];
            }
            loc.lu.solve(&r).expect("invertible local block")
        })
        .collect();
    for (xl, idx) in back.iter().zip(local) {
        for (a, &i) in idx.iter().enumerate() {
            x[i] = xl[a];
        }
    }
    if let Some(pivot) = x.iter().position(|v| !v.is_finite()) {
        return Err(Error::Singular { pivot });
    }
    Ok(x)
}

/// Per-cell groups eliminated by [`SolveMethod::Condensed`]: interior
/// velocity and every pressure mode except the constant.
pub fn condensation_groups(dofs: &DofMap) -> Vec<Vec<usize>> {
    (0..dofs.num_cells())
        .map(|c| {
            let mut g: Vec<usize> = (0..2)
                .flat_map(|comp| (0..dofs.cell_dim()).map(move |i| dofs.velocity_interior(c, comp, i)))
                .collect();
            g.extend((1..dofs.pressure_dim()).map(|i| dofs.pressure(c, i)));
            g
        })
        .collect()
}

/// Rows of the pressure block.
pub fn constraint_rows(dofs: &DofMap) -> Vec<bool> {
    (0..dofs.total())
        .map(|i| i >= dofs.n_velocity() && i < dofs.multiplier())
        .collect()
}

/// Solves `Kx = b`; returns the solution and the relative residual.
pub fn solve_raw(
    system: &SaddleSystem,
    dofs: &DofMap,
    method: SolveMethod,
    backend: Backend,
) -> Result<(Vec<f64>, f64)> {
    let negative = constraint_rows(dofs);
    let x = match method {
        SolveMethod::Monolithic => sparse_solve(&system.matrix, &system.rhs, &negative, backend)?,
        SolveMethod::Condensed => {
            solve_condensed(&system.matrix, &system.rhs, &condensation_groups(dofs), &negative, backend)?
        }
    };
    let (_, residual) = relative_residual(&system.matrix, &x, &system.rhs);
    Ok((x, residual))
}

/// Solves the system and unpacks `u_h`, `p_h` and the multiplier.
pub fn solve(mesh: &PolygonalMesh, system: &SaddleSystem, dofs: &DofMap) -> Result<DiscreteSolution> {
    solve_with(mesh, system, dofs, SolveMethod::default(), Backend::default())
}

pub fn solve_with(
    mesh: &PolygonalMesh,
    system: &SaddleSystem,
    dofs: &DofMap,
    method: SolveMethod,
    backend: Backend,
) -> Result<DiscreteSolution> {
    if system.size() != dofs.total() {
        return Err(Error::InvalidParameter(format!(
            "system of size {} does not match DOF map of size {}",
            system.size(),
            dofs.total()
        )));
    }
    let (x, residual) = solve_raw(system, dofs, method, backend)?;
    let velocity = dofs.scatter_velocity(mesh, &x[..dofs.n_velocity()]);
    let np = dofs.pressure_dim();
    let mut pressure = CellField::zeros(mesh.num_cells(), dofs.k - 1, 1);
    for c in 0..mesh.num_cells() {
        let start = dofs.pressure(c, 0);
        pressure.cell_mut(c, 0).copy_from_slice(&x[start..start + np]);
    }
    let status = if residual > RESIDUAL_WARNING {
        SolveStatus::HighResidual(residual)
    } else {
        SolveStatus::Converged
    };
    Ok(DiscreteSolution {
        velocity,
        pressure,
        multiplier: x[dofs.multiplier()],
        disc: system.disc,
        residual,
        status,
        raw: x,
    })
}

/// `(Σ_T ‖∇_w·u‖²_T)^{1/2}` for a weak velocity field.
pub fn weak_div_residual(velocity: &WeakField, mesh: &PolygonalMesh) -> Result<f64> {
    let k = velocity.degree();
    let sum: f64 = (0..mesh.num_cells())
        .into_par_iter()
        .map(|c| {
            let d = weak_divergence_matrix(mesh, c, k)?;
            let local = DVector::from_vec(velocity.local_vector(mesh, c));
            // ‖w‖² = wᵀ M w = wᵀ (moments · v)
            Ok((&d.matrix * &local).dot(&(&d.moments * &local)))
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .sum();
    Ok(sum.max(0.0).sqrt())
}
