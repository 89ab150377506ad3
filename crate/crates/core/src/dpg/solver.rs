//! Jacobi-preconditioned conjugate gradients with a null-space probe.
//!
//! The condensed DPG matrix is only semidefinite when the discrete operator
//! loses injectivity, and its right-hand side then still lies in the range,
//! so plain CG converges without noticing. After the solve, a probe runs CG
//! on `A y = A z` for a random `z`: the difference `z − y` vanishes when `A`
//! is nonsingular and is a null vector otherwise.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::sparse::CsrMatrix;
use crate::error::{DpgError, Result};

#[derive(Clone, Copy, Debug)]
pub struct SolverOptions {
    /// Relative residual target `‖r − A x‖ / ‖r‖`.
    pub tol: f64,
    /// Iteration cap; `None` means `10 · dim`.
    pub max_iter: Option<usize>,
    /// Run the null-space probe after solving.
    pub check_singular: bool,
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-12,
            max_iter: None,
            check_singular: true,
            seed: 0x5eed,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    pub relative_residual: f64,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Preconditioned CG from a zero initial guess.
pub fn pcg(a: &CsrMatrix, b: &[f64], tol: f64, max_iter: usize) -> Result<(Vec<f64>, SolveStats)> {
    let n = a.dim();
    if b.len() != n {
        return Err(DpgError::Dimension(format!(
            "right-hand side of length {} for a system of dimension {n}",
            b.len()
        )));
    }
    let diag = a.diagonal();
    if let Some(i) = diag.iter().position(|&d| d.is_nan() || d <= 0.0) {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        return Err(DpgError::Singular {
            reason: format!("non-positive diagonal entry {:e} at row {i}", diag[i]),
            null_vector: (diag[i] == 0.0).then_some(e),
        });
    }
    let inv_diag: Vec<f64> = diag.iter().map(|d| 1.0 / d).collect();

    let mut x = vec![0.0; n];
    let bnorm = dot(b, b).sqrt();
    if bnorm == 0.0 {
        return Ok((
            x,
            SolveStats {
                iterations: 0,
                relative_residual: 0.0,
                converged: true,
            },
        ));
    }
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(ri, di)| ri * di).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut rel = 1.0;
    for it in 1..=max_iter {
        a.mul_vec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap.is_nan() || pap <= 0.0 {
            return Err(DpgError::Singular {
                reason: format!("CG breakdown: pᵀAp = {pap:e} at iteration {it}"),
                null_vector: Some(p),
            });
        }
        let alpha = rz / pap;
        x.iter_mut().zip(&p).for_each(|(xi, pi)| *xi += alpha * pi);
        r.iter_mut()
            .zip(&ap)
            .for_each(|(ri, api)| *ri -= alpha * api);
        rel = dot(&r, &r).sqrt() / bnorm;
        if rel <= tol {
            return Ok((
                x,
                SolveStats {
                    iterations: it,
                    relative_residual: rel,
                    converged: true,
                },
            ));
        }
        z.iter_mut()
            .zip(&r)
            .zip(&inv_diag)
            .for_each(|((zi, ri), di)| *zi = ri * di);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        p.iter_mut()
            .zip(&z)
            .for_each(|(pi, zi)| *pi = zi + beta * *pi);
    }
    Ok((
        x,
        SolveStats {
            iterations: max_iter,
            relative_residual: rel,
            converged: false,
        },
    ))
}

/// Looks for a direction `d` with `dᵀAd ≈ 0`. Returns it when found.
pub fn probe_null_space(a: &CsrMatrix, opts: &SolverOptions) -> Result<Option<Vec<f64>>> {
    let n = a.dim();
    if n == 0 {
        return Ok(None);
    }
    let diag = a.diagonal();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let z: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let az = a.mul_vec(&z);
    let max_iter = opts.max_iter.unwrap_or(10 * n.max(10));
    let (y, _) = match pcg(a, &az, opts.tol, max_iter) {
        Ok(v) => v,
        Err(DpgError::Singular {
            null_vector: Some(v),
            ..
        }) => return Ok(Some(v)),
        Err(e) => return Err(e),
    };
    let d: Vec<f64> = z.iter().zip(&y).map(|(zi, yi)| zi - yi).collect();

    // Rayleigh quotients in the Jacobi-scaled inner product.
    let scaled_norm2 = |v: &[f64]| {
        v.iter()
            .zip(&diag)
            .map(|(vi, di)| vi * vi * di)
            .sum::<f64>()
    };
    let dd = scaled_norm2(&d);
    let zz = scaled_norm2(&z);
    if dd <= 1e-16 * zz {
        return Ok(None);
    }
    let rho_d = dot(&d, &a.mul_vec(&d)) / dd;
    let rho_z = dot(&z, &az) / zz;
    Ok((rho_d.abs() <= 1e-10 * rho_z).then_some(d))
}

/// Solves `A x = r`, reporting singular systems as [`DpgError::Singular`].
pub fn solve(a: &CsrMatrix, r: &[f64], opts: &SolverOptions) -> Result<(Vec<f64>, SolveStats)> {
    let n = a.dim();
    let max_iter = opts.max_iter.unwrap_or(10 * n.max(10));
    let (x, stats) = pcg(a, r, opts.tol, max_iter)?;
    if opts.check_singular || !stats.converged {
        if let Some(v) = probe_null_space(a, opts)? {
            let norm = dot(&v, &v).sqrt();
            return Err(DpgError::Singular {
                reason: format!(
                    "near-null direction found (solve {} after {} iterations, residual {:.3e})",
                    if stats.converged {
                        "converged"
                    } else {
                        "stagnated"
                    },
                    stats.iterations,
                    stats.relative_residual
                ),
                null_vector: Some(v.into_iter().map(|x| x / norm).collect()),
            });
        }
    }
    if !stats.converged {
        return Err(DpgError::Config(format!(
            "CG did not reach tolerance {:e} in {} iterations (residual {:.3e})",
            opts.tol, stats.iterations, stats.relative_residual
        )));
    }
    Ok((x, stats))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian_1d(n: usize) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i > 0 {
                t.push((i, i - 1, -1.0));
                t.push((i - 1, i, -1.0));
            }
        }
        CsrMatrix::from_triplets(n, t)
    }

    #[test]
    fn identity_converges_in_one_step() {
        let a = CsrMatrix::identity(5);
        let r = vec![1.0, -2.0, 3.0, 0.5, 4.0];
        let (x, stats) = solve(&a, &r, &SolverOptions::default()).unwrap();
        assert_eq!(stats.iterations, 1);
        for (xi, ri) in x.iter().zip(&r) {
            assert!((xi - ri).abs() < 1e-15);
        }
    }

    #[test]
    fn laplacian_solve() {
        let n = 50;
        let a = laplacian_1d(n);
        let exact: Vec<f64> = (0..n).map(|i| (i as f64 * 0.1).sin()).collect();
        let r = a.mul_vec(&exact);
        let (x, stats) = solve(&a, &r, &SolverOptions::default()).unwrap();
        assert!(stats.converged && stats.iterations <= n + 5);
        for (xi, ei) in x.iter().zip(&exact) {
            assert!((xi - ei).abs() < 1e-9);
        }
    }

    #[test]
    fn singular_semidefinite_detected() {
        // pure Neumann 1D Laplacian: constants span the kernel
        let n = 20;
        let mut t = Vec::new();
        for i in 0..n - 1 {
            t.extend([
                (i, i, 1.0),
                (i + 1, i + 1, 1.0),
                (i, i + 1, -1.0),
                (i + 1, i, -1.0),
            ]);
        }
        let a = CsrMatrix::from_triplets(n, t);
        let r = a.mul_vec(&(0..n).map(|i| i as f64).collect::<Vec<_>>());
        match solve(&a, &r, &SolverOptions::default()) {
            Err(DpgError::Singular {
                null_vector: Some(v),
                ..
            }) => {
                let mean = v.iter().sum::<f64>() / n as f64;
                assert!(v.iter().all(|vi| (vi - mean).abs() < 1e-6 * mean.abs()));
            }
            other => panic!("expected singular, got {other:?}"),
        }
    }

    #[test]
    fn zero_diagonal_is_singular() {
        let a = CsrMatrix::from_triplets(2, vec![(0, 0, 1.0)]);
        assert!(solve(&a, &[1.0, 0.0], &SolverOptions::default())
            .unwrap_err()
            .is_singular());
    }
}
