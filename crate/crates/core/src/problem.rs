//! Discrete data shared by all solvers: interior matrices, the regularized
//! system `M + rho K` and the target load vector.

use crate::assembly::{assemble_load, assemble_mass, assemble_stiffness, restrict_matrix, restrict_vector};
use crate::error::{invalid, Result};
use crate::field::ScalarField;
use crate::mesh::{interior_indices, Mesh};
use crate::quadrature::QuadratureRule;
use crate::sparse::CsrMatrix;

/// How `rho` is chosen for a mesh.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RhoChoice {
    /// `rho = h^2` with `h = 1/n` the grid spacing.
    HSquared,
    Fixed(f64),
}

impl RhoChoice {
    pub fn resolve(&self, mesh: &Mesh) -> f64 {
        match *self {
            RhoChoice::HSquared => mesh.spacing().powi(2),
            RhoChoice::Fixed(r) => r,
        }
    }
}

/// Discretization of the regularized tracking problem on interior nodes.
#[derive(Debug, Clone)]
pub struct DiscreteProblem<'m> {
    pub mesh: &'m Mesh,
    pub interior: Vec<usize>,
    pub rho: f64,
    /// Interior stiffness matrix `K`.
    pub stiffness: CsrMatrix,
    /// Interior mass matrix `M`.
    pub mass: CsrMatrix,
    /// `M + rho K`
    pub system: CsrMatrix,
    /// Interior moments `int u_target phi_j`.
    pub load: Vec<f64>,
    pub subdivisions: usize,
}

impl<'m> DiscreteProblem<'m> {
    pub fn new(mesh: &'m Mesh, rho: f64, target: &dyn ScalarField, subdivisions: usize) -> Result<Self> {
        if !(rho > 0.0) || !rho.is_finite() {
            return Err(invalid(format!("regularization parameter must be positive, got {rho}")));
        }
        let interior = interior_indices(mesh);
        let stiffness = restrict_matrix(&assemble_stiffness(mesh)?, &interior);
        let mass = restrict_matrix(&assemble_mass(mesh)?, &interior);
        let system = mass.linear_combination(1.0, &stiffness, rho)?;
        let load = restrict_vector(
            &assemble_load(mesh, target, &QuadratureRule::degree5(), subdivisions),
            &interior,
        );
        Ok(Self {
            mesh,
            interior,
            rho,
            stiffness,
            mass,
            system,
            load,
            subdivisions,
        })
    }

    pub fn dofs(&self) -> usize {
        self.interior.len()
    }

    /// Interior nodal samples of `f`.
    pub fn sample(&self, f: &dyn ScalarField) -> Vec<f64> {
        self.interior
            .iter()
            .map(|&i| {
                let [x, y] = self.mesh.nodes()[i];
                f.eval(x, y)
            })
            .collect()
    }

    /// Interior moments `int f phi_j`.
    pub fn moments(&self, f: &dyn ScalarField) -> Vec<f64> {
        restrict_vector(
            &assemble_load(self.mesh, f, &QuadratureRule::degree5(), self.subdivisions),
            &self.interior,
        )
    }

    /// Full nodal vector from interior values, zero on the boundary.
    pub fn extend(&self, values: &[f64]) -> Vec<f64> {
        crate::assembly::extend_by_zero(values, &self.interior, self.mesh.num_nodes())
    }

    /// Reduced objective `1/2 u^T (M + rho K) u - u_target^T u`, which differs
    /// from the tracking functional by a constant.
    pub fn objective(&self, u: &[f64]) -> f64 {
        0.5 * self.system.quadratic_form(u) - crate::sparse::dot(&self.load, u)
    }
}
