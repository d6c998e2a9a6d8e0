//! Exact solutions with analytically derived forcing.
//!
//! Every case supplies `u`, `∇u`, `Δu`, `p` and `∇p` in closed form; the
//! body force `f = −Δu + ∇p + κ⁻¹u` is assembled from them, never from
//! numerical differentiation.

use std::sync::Arc;

use crate::Point;

/// Closed-form exact fields. `velocity_gradient(p)[i][j] = ∂_j u_i`.
pub trait ExactFields: Send + Sync {
    fn velocity(&self, p: &Point) -> [f64; 2];
    fn velocity_gradient(&self, p: &Point) -> [[f64; 2]; 2];
    fn velocity_laplacian(&self, p: &Point) -> [f64; 2];
    fn pressure(&self, p: &Point) -> f64;
    fn pressure_gradient(&self, p: &Point) -> [f64; 2];
}

/// Exact fields plus the inverse permeability used to form the forcing.
#[derive(Clone)]
pub struct ManufacturedCase {
    pub name: String,
    pub fields: Arc<dyn ExactFields>,
    pub kappa_inv: f64,
}

impl std::fmt::Debug for ManufacturedCase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ManufacturedCase")
            .field("name", &self.name)
            .field("kappa_inv", &self.kappa_inv)
            .finish()
    }
}

impl ManufacturedCase {
    pub fn new(name: impl Into<String>, fields: impl ExactFields + 'static, kappa_inv: f64) -> Self {
        Self {
            name: name.into(),
            fields: Arc::new(fields),
            kappa_inv,
        }
    }

    pub fn velocity(&self, p: &Point) -> [f64; 2] {
        self.fields.velocity(p)
    }

    pub fn pressure(&self, p: &Point) -> f64 {
        self.fields.pressure(p)
    }

    /// `f = −Δu + ∇p + κ⁻¹u`.
    pub fn forcing(&self, p: &Point) -> [f64; 2] {
        let lap = self.fields.velocity_laplacian(p);
        let gp = self.fields.pressure_gradient(p);
        let u = self.fields.velocity(p);
        [
            -lap[0] + gp[0] + self.kappa_inv * u[0],
            -lap[1] + gp[1] + self.kappa_inv * u[1],
        ]
    }

    /// `∂₁u₁ + ∂₂u₂`.
    pub fn divergence(&self, p: &Point) -> f64 {
        let g = self.fields.velocity_gradient(p);
        g[0][0] + g[1][1]
    }
}

/// Velocity `curl ψ` with `ψ = −4x²(1−x)²y²(1−y)²` and pressure `(x − ½)³`
/// on the unit square:
///
/// ```text
/// u₁ = −8(x² − 2x³ + x⁴)(y − 3y² + 2y³)
/// u₂ =  8(x − 3x² + 2x³)(y² − 2y³ + y⁴)
/// ```
#[derive(Debug, Clone, Copy, Default)]
pub struct CubicPressureFlow;

// a(t) = t²(1−t)² and its derivatives
fn a0(t: f64) -> f64 {
    t * t * (1.0 - t) * (1.0 - t)
}
fn a1(t: f64) -> f64 {
    2.0 * t - 6.0 * t * t + 4.0 * t * t * t
}
fn a2(t: f64) -> f64 {
    2.0 - 12.0 * t + 12.0 * t * t
}
fn a3(t: f64) -> f64 {
    -12.0 + 24.0 * t
}

impl ExactFields for CubicPressureFlow {
    fn velocity(&self, p: &Point) -> [f64; 2] {
        let (x, y) = (p.x, p.y);
        [-4.0 * a0(x) * a1(y), 4.0 * a1(x) * a0(y)]
    }

    fn velocity_gradient(&self, p: &Point) -> [[f64; 2]; 2] {
        let (x, y) = (p.x, p.y);
        [
            [-4.0 * a1(x) * a1(y), -4.0 * a0(x) * a2(y)],
            [4.0 * a2(x) * a0(y), 4.0 * a1(x) * a1(y)],
        ]
    }

    fn velocity_laplacian(&self, p: &Point) -> [f64; 2] {
        let (x, y) = (p.x, p.y);
        [
            -4.0 * (a2(x) * a1(y) + a0(x) * a3(y)),
            4.0 * (a3(x) * a0(y) + a1(x) * a2(y)),
        ]
    }

    fn pressure(&self, p: &Point) -> f64 {
        (p.x - 0.5).powi(3)
    }

    fn pressure_gradient(&self, p: &Point) -> [f64; 2] {
        [3.0 * (p.x - 0.5).powi(2), 0.0]
    }
}

/// Smooth test case on the unit square used by the convergence tables.
pub fn case_s2d(kappa_inv: f64) -> ManufacturedCase {
    ManufacturedCase::new("cubic-pressure", CubicPressureFlow, kappa_inv)
}

/// Zero velocity with a mean-zero polynomial pressure of degree `degree`
/// (at most 2). Since no nonzero divergence-free `[P_k]²` field with `k ≤ 3`
/// vanishes on the boundary of the square, this is the general polynomial
/// patch configuration for low degrees.
#[derive(Debug, Clone, Copy)]
pub struct PolynomialPressure {
    pub degree: usize,
}

impl ExactFields for PolynomialPressure {
    fn velocity(&self, _: &Point) -> [f64; 2] {
        [0.0, 0.0]
    }

    fn velocity_gradient(&self, _: &Point) -> [[f64; 2]; 2] {
        [[0.0; 2]; 2]
    }

    fn velocity_laplacian(&self, _: &Point) -> [f64; 2] {
        [0.0, 0.0]
    }

    fn pressure(&self, p: &Point) -> f64 {
        let (x, y) = (p.x - 0.5, p.y - 0.5);
        match self.degree {
            0 => 0.0,
            1 => x + 0.5 * y,
            _ => x + 0.5 * y + x * y + x * x - 1.0 / 12.0,
        }
    }

    fn pressure_gradient(&self, p: &Point) -> [f64; 2] {
        let (x, y) = (p.x - 0.5, p.y - 0.5);
        match self.degree {
            0 => [0.0, 0.0],
            1 => [1.0, 0.5],
            _ => [1.0 + y + 2.0 * x, 0.5 + x],
        }
    }
}

/// Patch-test case for velocity degree `k`: pressure of degree `min(k−1, 2)`.
pub fn case_patch(k: usize, kappa_inv: f64) -> ManufacturedCase {
    let degree = k.saturating_sub(1).min(2);
    ManufacturedCase::new(format!("patch-p{degree}"), PolynomialPressure { degree }, kappa_inv)
}

/// `u = 0`, `p = 0`.
pub fn case_zero(kappa_inv: f64) -> ManufacturedCase {
    ManufacturedCase::new("zero", PolynomialPressure { degree: 0 }, kappa_inv)
}
