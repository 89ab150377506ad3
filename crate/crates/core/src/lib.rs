//! Primal discontinuous Petrov–Galerkin (DPG) discretization of the
//! Dirichlet Laplace problem `−Δu = f`, `u = 0` on `∂Ω`, on triangulations
//! of the unit square.
//!
//! Trial unknowns are a continuous Lagrange field `u_h` and a single-valued
//! normal flux `q̂_h` on the mesh skeleton; tests are discontinuous
//! polynomials with the broken `H¹` inner product. The crate provides the
//! reference-element machinery, element-local DPG systems, condensed global
//! assembly and solve, error/estimator analysis, unisolvency diagnostics of
//! the flux moment systems, and a driver for convergence studies.

pub mod analysis;
pub mod dense;
pub mod diagnostics;
pub mod dpg;
pub mod error;
pub mod experiment;
pub mod mesh;
pub mod reftri;
pub mod spaces;

pub use analysis::{ConvergenceRow, ConvergenceTable, ExactSolution, RowStatus};
pub use dense::DenseMatrix;
pub use dpg::{DpgSolution, ElementKernel, LoadRule, SolverOptions};
pub use error::{DpgError, Result};
pub use experiment::{run_case, CaseSpec, OutputFormat, RunSpec};
pub use mesh::{unit_square_mesh, Mesh};
pub use spaces::{build_spaces, case_degrees, Case, CaseConfig, SpaceSet};
