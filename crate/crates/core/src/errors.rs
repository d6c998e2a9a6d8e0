//! Error norms and observed convergence orders.

use nalgebra::DVector;
use rayon::prelude::*;

use crate::assembly::Discretization;
use crate::error::{Error, Result};
use crate::field::{CellField, WeakField};
use crate::mesh::PolygonalMesh;
use crate::polybasis::{mass_matrix, EdgeBasis, MonomialBasis};
use crate::quadrature::{EdgeRule, QuadratureRule};
use crate::solver::DiscreteSolution;
use crate::weak_ops::CellOperators;
use crate::Point;

fn sum_cells(mesh: &PolygonalMesh, f: impl Fn(usize) -> Result<f64> + Sync + Send) -> Result<f64> {
    Ok((0..mesh.num_cells())
        .into_par_iter()
        .map(f)
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .sum())
}

fn check_same_shape(a: &WeakField, b: &WeakField, mesh: &PolygonalMesh) -> Result<()> {
    if a.degree() != b.degree() || a.num_cells() != mesh.num_cells() || b.num_cells() != mesh.num_cells() {
        return Err(Error::DegreeMismatch(format!(
            "fields of degree {} and {} on a mesh of {} cells",
            a.degree(),
            b.degree(),
            mesh.num_cells()
        )));
    }
    Ok(())
}

/// `‖Q₀u − u₀‖ = (Σ_T ∫_T |Q₀u − u₀|²)^{1/2}`, interior parts only.
pub fn l2_velocity_error(uh: &WeakField, qu: &WeakField, mesh: &PolygonalMesh) -> Result<f64> {
    check_same_shape(uh, qu, mesh)?;
    let k = uh.degree();
    let sum = sum_cells(mesh, |c| {
        let quad = QuadratureRule::cell(mesh, c, 2 * k + 2)?;
        let m = mass_matrix(&quad, &MonomialBasis::for_cell(mesh, c, k));
        let mut s = 0.0;
        for comp in 0..2 {
            let d = DVector::from_iterator(
                uh.cell_dim(),
                qu.interior(c, comp).iter().zip(uh.interior(c, comp)).map(|(a, b)| a - b),
            );
            s += d.dot(&(&m * &d));
        }
        Ok(s)
    })?;
    Ok(sum.max(0.0).sqrt())
}

/// The energy norm `|||v||| = (Σ_T ‖∇_w v‖²_T + κ⁻¹‖v₀‖²_T)^{1/2}` with
/// the weak gradient of degree `disc.r`.
pub fn energy_norm(v: &WeakField, mesh: &PolygonalMesh, disc: &Discretization) -> Result<f64> {
    if v.degree() != disc.k {
        return Err(Error::DegreeMismatch(format!(
            "field of degree {} measured with k = {}",
            v.degree(),
            disc.k
        )));
    }
    let sum = sum_cells(mesh, |c| {
        let ops = disc.cell_operators(mesh, c)?;
        let local = v.local_vector(mesh, c);
        let mut s = 0.0;
        for row in ops.grad.apply(&local) {
            for g in row {
                s += g.dot(&(&ops.mass_r * &g));
            }
        }
        if disc.kappa_inv != 0.0 {
            for comp in 0..2 {
                let v0 = DVector::from_column_slice(v.interior(c, comp));
                s += disc.kappa_inv * v0.dot(&(&ops.mass_k * &v0));
            }
        }
        Ok(s)
    })?;
    Ok(sum.max(0.0).sqrt())
}

/// `|||Q_h u − u_h|||`. The norm must use the weak gradient degree the
/// solution was computed with.
pub fn energy_error(
    solution: &DiscreteSolution,
    qu: &WeakField,
    mesh: &PolygonalMesh,
    disc: &Discretization,
) -> Result<f64> {
    if disc.r != solution.disc.r || disc.k != solution.disc.k {
        return Err(Error::DegreeMismatch(format!(
            "energy norm with (k, r) = ({}, {}) for a solution computed with ({}, {})",
            disc.k, disc.r, solution.disc.k, solution.disc.r
        )));
    }
    check_same_shape(&solution.velocity, qu, mesh)?;
    energy_norm(&qu.difference(&solution.velocity)?, mesh, disc)
}

/// `‖p − p_h‖` with quadrature exactness `2·deg(p_h) + 6`.
pub fn l2_pressure_error(
    ph: &CellField,
    p: &(dyn Fn(&Point) -> f64 + Sync),
    mesh: &PolygonalMesh,
) -> Result<f64> {
    if ph.num_cells() != mesh.num_cells() {
        return Err(Error::DegreeMismatch(format!(
            "pressure on {} cells measured on a mesh of {} cells",
            ph.num_cells(),
            mesh.num_cells()
        )));
    }
    let deg = ph.degree();
    let sum = sum_cells(mesh, |c| {
        let quad = QuadratureRule::cell(mesh, c, 2 * deg + 6)?;
        let basis = MonomialBasis::for_cell(mesh, c, deg);
        let coeffs = ph.cell(c, 0);
        Ok(quad.integrate(|x| {
            let d = p(x) - basis.evaluate(coeffs, x);
            d * d
        }))
    })?;
    Ok(sum.max(0.0).sqrt())
}

/// `‖v‖_{1,h} = (Σ_T ‖∇v₀‖²_T + κ⁻¹‖v₀‖²_T + h_T⁻¹‖v₀ − v_b‖²_∂T)^{1/2}`.
pub fn discrete_h1_norm(v: &WeakField, mesh: &PolygonalMesh, kappa_inv: f64) -> Result<f64> {
    let k = v.degree();
    let sum = sum_cells(mesh, |c| {
        let quad = QuadratureRule::cell(mesh, c, 2 * k + 2)?;
        let basis = MonomialBasis::for_cell(mesh, c, k);
        let n = basis.dim();
        let (mut b, mut dx, mut dy) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        let v0 = [v.interior(c, 0), v.interior(c, 1)];
        let dot = |a: &[f64], c: &[f64]| a.iter().zip(c).map(|(x, y)| x * y).sum::<f64>();
        let mut s = 0.0;
        for (p, &w) in quad.points.iter().zip(&quad.weights) {
            basis.eval_into(p, &mut b);
            basis.eval_grad_into(p, &mut dx, &mut dy);
            for c0 in v0 {
                let (gx, gy, val) = (dot(c0, &dx), dot(c0, &dy), dot(c0, &b));
                s += w * (gx * gx + gy * gy + kappa_inv * val * val);
            }
        }
        let h = mesh.geometry(c).diameter;
        for &e in mesh.cell_edges(c) {
            let eb = EdgeBasis::for_edge(mesh, e, k);
            let rule = EdgeRule::for_edge(mesh, e, 2 * k + 2);
            let mut beta = vec![0.0; k + 1];
            let mut jump = 0.0;
            for ((p, &t), &w) in rule.points.iter().zip(&rule.params).zip(&rule.weights) {
                basis.eval_into(p, &mut b);
                eb.eval_param_into(t, &mut beta);
                for comp in 0..2 {
                    let d = dot(v0[comp], &b) - dot(v.edge(e, comp), &beta);
                    jump += w * d * d;
                }
            }
            s += jump / h;
        }
        Ok(s)
    })?;
    Ok(sum.max(0.0).sqrt())
}

/// `log₂(prev / cur)`, undefined for zero or non-finite errors.
pub fn convergence_order(prev: f64, cur: f64) -> Option<f64> {
    let valid = |e: f64| e.is_finite() && e > 0.0;
    (valid(prev) && valid(cur)).then(|| (prev / cur).log2())
}

/// Errors measured on one refinement level.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelErrors {
    pub level: u32,
    pub h: f64,
    pub velocity_l2: f64,
    pub energy: f64,
    pub pressure_l2: f64,
    pub weak_div: f64,
    /// Orders against the previous level, when it exists and has half the
    /// resolution.
    pub velocity_order: Option<f64>,
    pub energy_order: Option<f64>,
    pub pressure_order: Option<f64>,
}

impl LevelErrors {
    pub fn new(level: u32, h: f64, velocity_l2: f64, energy: f64, pressure_l2: f64, weak_div: f64) -> Self {
        Self {
            level,
            h,
            velocity_l2,
            energy,
            pressure_l2,
            weak_div,
            velocity_order: None,
            energy_order: None,
            pressure_order: None,
        }
    }
}

/// A level that could not be completed.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelFailure {
    pub level: u32,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ErrorReport {
    pub levels: Vec<LevelErrors>,
    pub failures: Vec<LevelFailure>,
}

impl ErrorReport {
    pub fn last(&self) -> Option<&LevelErrors> {
        self.levels.last()
    }
}

/// Fills the order columns: each level against the immediately preceding
/// one, only when the mesh size halves.
pub fn convergence_orders(mut report: ErrorReport) -> ErrorReport {
    for i in 0..report.levels.len() {
        let (velocity, energy, pressure) = match i.checked_sub(1).map(|j| &report.levels[j]) {
            Some(prev) if ((prev.h / report.levels[i].h) - 2.0).abs() < 1e-6 => {
                let cur = &report.levels[i];
                (
                    convergence_order(prev.velocity_l2, cur.velocity_l2),
                    convergence_order(prev.energy, cur.energy),
                    convergence_order(prev.pressure_l2, cur.pressure_l2),
                )
            }
            _ => (None, None, None),
        };
        let cur = &mut report.levels[i];
        cur.velocity_order = velocity;
        cur.energy_order = energy;
        cur.pressure_order = pressure;
    }
    report
}

/// `|||v|||² = Σ_T v_Tᵀ A_T v_T` through the local stiffness matrices.
pub fn energy_from_stiffness(v: &WeakField, mesh: &PolygonalMesh, disc: &Discretization) -> Result<f64> {
    sum_cells(mesh, |c| {
        let ops = CellOperators::new(mesh, c, disc.k, disc.r, disc.quad_bump)?;
        let local = DVector::from_vec(v.local_vector(mesh, c));
        Ok(local.dot(&(ops.stiffness(disc.kappa_inv) * &local)))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_mesh, MeshFamily};

    #[test]
    fn orders_of_simple_sequences() {
        assert_eq!(convergence_order(4.0, 1.0), Some(2.0));
        assert_eq!(convergence_order(3.0, 3.0), Some(0.0));
        assert_eq!(convergence_order(0.0, 1.0), None);
        assert_eq!(convergence_order(1.0, f64::NAN), None);
        let o = convergence_order(0.317e-3, 0.808e-4).unwrap();
        assert!((o - 1.972).abs() < 1e-3);
        assert_eq!(format!("{o:.1}"), "2.0");
    }

    #[test]
    fn orders_require_halved_mesh_size() {
        let report = ErrorReport {
            levels: vec![
                LevelErrors::new(1, 0.5, 4.0, 2.0, 1.0, 0.0),
                LevelErrors::new(2, 0.25, 1.0, 1.0, 0.0, 0.0),
                LevelErrors::new(4, 0.0625, 0.1, 0.1, 0.1, 0.0),
            ],
            failures: vec![],
        };
        let r = convergence_orders(report);
        assert_eq!(r.levels[0].velocity_order, None);
        assert_eq!(r.levels[1].velocity_order, Some(2.0));
        assert_eq!(r.levels[1].energy_order, Some(1.0));
        assert_eq!(r.levels[1].pressure_order, None);
        assert_eq!(r.levels[2].velocity_order, None);
    }

    #[test]
    fn constant_mode_difference() {
        let mesh = build_mesh(MeshFamily::Zigzag, 2).unwrap();
        let a = WeakField::zeros(&mesh, 2);
        let mut b = a.clone();
        b.interior_mut(4, 1)[0] = 0.3;
        let e = l2_velocity_error(&a, &b, &mesh).unwrap();
        assert!((e - 0.3 * mesh.geometry(4).area.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn energy_of_constant_weak_function() {
        let mesh = build_mesh(MeshFamily::CrossSplit, 2).unwrap();
        let mut v = WeakField::zeros(&mesh, 1);
        for c in 0..mesh.num_cells() {
            v.interior_mut(c, 0)[0] = 2.0;
        }
        for e in 0..mesh.num_edges() {
            v.edge_mut(e, 0)[0] = 2.0;
        }
        for kappa_inv in [0.0, 1.0, 9.0] {
            let disc = Discretization::new(1, 4, kappa_inv).unwrap();
            let e = energy_norm(&v, &mesh, &disc).unwrap();
            assert!((e - 2.0 * kappa_inv.sqrt()).abs() < 1e-11);
        }
        assert!(discrete_h1_norm(&v, &mesh, 0.0).unwrap() < 1e-12);
    }

    #[test]
    fn pressure_norm_of_cubic() {
        let mesh = build_mesh(MeshFamily::Triangle, 3).unwrap();
        let ph = CellField::zeros(mesh.num_cells(), 1, 1);
        let e = l2_pressure_error(&ph, &|p| (p.x - 0.5).powi(3), &mesh).unwrap();
        assert!((e - (1.0f64 / 448.0).sqrt()).abs() < 1e-14);
    }
}
