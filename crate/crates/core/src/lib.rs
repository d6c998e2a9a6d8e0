//! Stabilizer-free weak Galerkin (WG) finite elements for the Brinkman
//! equations
//!
//! ```text
//!   -Δu + ∇p + κ⁻¹u = f   in Ω = (0,1)²
//!              ∇·u = 0   in Ω
//!                u = 0   on ∂Ω
//! ```
//!
//! on polygonal meshes with convex or non-convex cells. Velocities are weak
//! functions `{u₀, u_b}` (a cell polynomial of degree `k` plus an independent
//! edge polynomial of degree `k`), pressures are discontinuous polynomials of
//! degree `k-1`. The weak gradient is computed in `P_r` with `r > k`, which
//! replaces the usual stabilizing penalty term.
//!
//! The crate is organized bottom-up:
//!
//! * [`mesh`]: polygonal meshes of the unit square, refinement families,
//!   ear-clipping triangulation and the plain-text mesh format.
//! * [`quadrature`] and [`polybasis`]: polygon quadrature, scaled monomial
//!   and Legendre bases, elementary cell and edge integrals.
//! * [`weak_ops`]: per-cell weak gradient and weak divergence matrices.
//! * [`projection`]: L² projections into the WG spaces.
//! * [`assembly`] and [`solver`]: the global saddle-point system and its
//!   direct solution.
//! * [`errors`]: the error norms and convergence orders.
//! * [`manufactured`] and [`study`]: exact solutions and the convergence
//!   study driver used by the command-line tool.

pub mod assembly;
pub mod error;
pub mod errors;
pub mod field;
pub mod manufactured;
pub mod mesh;
pub mod polybasis;
pub mod projection;
pub mod quadrature;
pub mod solver;
pub mod study;
pub mod weak_ops;

pub use assembly::{assemble, load_vector, Discretization, DofMap, SaddleSystem, SparseMatrix};
pub use error::{Error, Result};
pub use errors::{ErrorReport, LevelErrors};
pub use field::{CellField, WeakField};
pub use manufactured::{ExactFields, ManufacturedCase};
pub use mesh::{MeshFamily, PolygonalMesh};
pub use polybasis::{EdgeBasis, MonomialBasis};
pub use quadrature::QuadratureRule;
pub use solver::{solve, Backend, DiscreteSolution, SolveMethod, SolveStatus};
pub use study::{GradDegree, RunConfig, TableFormat};
pub use weak_ops::{CellOperators, LocalDofLayout, WeakDivergenceMatrix, WeakGradientMatrix};

/// 2D point type used throughout the crate.
pub type Point = nalgebra::Point2<f64>;
/// 2D vector type used throughout the crate.
pub type Vector = nalgebra::Vector2<f64>;
