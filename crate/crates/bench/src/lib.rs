//! Shared fixtures for the benchmarks.

use sfwg::assembly::{assemble, Discretization, DofMap, SaddleSystem};
use sfwg::manufactured::case_s2d;
use sfwg::mesh::build_mesh;
use sfwg::{GradDegree, MeshFamily, Point, PolygonalMesh};

pub struct Fixture {
    pub mesh: PolygonalMesh,
    pub disc: Discretization,
}

impl Fixture {
    /// Mesh of `family` at `level` with the automatic gradient degree and κ⁻¹ = 1.
    pub fn new(family: MeshFamily, level: u32, k: usize) -> Self {
        let mesh = build_mesh(family, level).expect("family meshes are valid");
        let r = GradDegree::Auto.resolve(k, Some(family), &mesh);
        let disc = Discretization::new(k, r, 1.0).expect("auto degrees are valid");
        Self { mesh, disc }
    }

    pub fn assemble(&self) -> (SaddleSystem, DofMap) {
        let case = case_s2d(self.disc.kappa_inv);
        assemble(&self.mesh, &self.disc, &|p: &Point| case.forcing(p)).expect("assembly succeeds")
    }
}
