//! Dense solve of the uncondensed mixed system
//!
//! ```text
//! [ G   B ] [ ε ]   [ l ]
//! [ Bᵀ  0 ] [ x ] = [ 0 ]
//! ```
//!
//! Only practical on tiny meshes; it serves as a reference for the
//! condensed normal equations.

use super::{gather, ElementKernel};
use crate::dense::{DenseMatrix, Lu};
use crate::error::Result;
use crate::mesh::Mesh;
use crate::spaces::SpaceSet;

#[derive(Clone, Debug)]
pub struct MixedSolution {
    /// Trial vector (interior then flux coefficients).
    pub trial: Vec<f64>,
    /// Broken test coefficients of `ε^r`, element blocks in order.
    pub eps: Vec<f64>,
}

pub fn solve_mixed<F>(
    kernel: &ElementKernel,
    mesh: &Mesh,
    spaces: &SpaceSet,
    f: &F,
) -> Result<MixedSolution>
where
    F: Fn(f64, f64) -> f64 + ?Sized,
{
    let n_test = spaces.num_test;
    let n_trial = spaces.num_trial();
    let n = n_test + n_trial;
    let mut m = DenseMatrix::zeros(n, n);
    let mut rhs = vec![0.0; n];
    for elem in 0..mesh.num_elements() {
        let sys = kernel.local_system(mesh, spaces, elem, f)?;
        let rows = spaces.test_dofs(elem);
        for (li, gi) in rows.clone().enumerate() {
            rhs[gi] += sys.l[li];
            for (lj, gj) in rows.clone().enumerate() {
                m[(gi, gj)] += sys.g[(li, lj)];
            }
            for (lj, id) in sys.trial_ids.iter().enumerate() {
                if let Some(gj) = *id {
                    let col = n_test + gj;
                    m[(gi, col)] += sys.b[(li, lj)];
                    m[(col, gi)] += sys.b[(li, lj)];
                }
            }
        }
    }
    let sol = Lu::factor(&m)?.solve_vec(&rhs)?;
    let (eps, trial) = sol.split_at(n_test);
    Ok(MixedSolution {
        trial: trial.to_vec(),
        eps: eps.to_vec(),
    })
}

/// Residual of the local identity `G_K ε_K = l_K − B_K x_K`, relative to
/// `‖l_K‖`, maximized over elements.
pub fn local_identity_residual<F>(
    kernel: &ElementKernel,
    mesh: &Mesh,
    spaces: &SpaceSet,
    f: &F,
    trial: &[f64],
    eps: &[Vec<f64>],
) -> Result<f64>
where
    F: Fn(f64, f64) -> f64 + ?Sized,
{
    let mut worst = 0.0_f64;
    for (elem, eps_k) in eps.iter().enumerate() {
        let sys = kernel.local_system(mesh, spaces, elem, f)?;
        let bx = sys.b.matvec(&gather(&sys.trial_ids, trial));
        let ge = sys.g.matvec(eps_k);
        let lnorm = sys.l.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
        let r: f64 = ge
            .iter()
            .zip(&bx)
            .zip(&sys.l)
            .map(|((g, b), l)| (g + b - l).powi(2))
            .sum::<f64>()
            .sqrt();
        worst = worst.max(r / lnorm);
    }
    Ok(worst)
}
