//! Error norms against an exact solution, observed rates and the
//! error-representation estimator.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::dpg::ElementKernel;
use crate::error::Result;
use crate::mesh::Mesh;
use crate::reftri::{quad_rule, BasisKind, TriBasis};
use crate::spaces::{CaseConfig, SpaceSet};

type ScalarField = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
type VectorField = Arc<dyn Fn(f64, f64) -> [f64; 2] + Send + Sync>;

/// A manufactured solution: `u`, `∇u` and `f = −Δu`.
#[derive(Clone)]
pub struct ExactSolution {
    pub name: String,
    pub u: ScalarField,
    pub grad_u: VectorField,
    pub f: ScalarField,
}

impl fmt::Debug for ExactSolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ExactSolution")
            .field("name", &self.name)
            .finish()
    }
}

impl ExactSolution {
    pub fn new(
        name: impl Into<String>,
        u: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        grad_u: impl Fn(f64, f64) -> [f64; 2] + Send + Sync + 'static,
        f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        ExactSolution {
            name: name.into(),
            u: Arc::new(u),
            grad_u: Arc::new(grad_u),
            f: Arc::new(f),
        }
    }

    /// `u = sin(πx) sin(πy)`, `f = 2π² sin(πx) sin(πy)`.
    pub fn sine() -> Self {
        Self::new(
            "sin(pi x) sin(pi y)",
            |x, y| (PI * x).sin() * (PI * y).sin(),
            |x, y| {
                [
                    PI * (PI * x).cos() * (PI * y).sin(),
                    PI * (PI * x).sin() * (PI * y).cos(),
                ]
            },
            |x, y| 2.0 * PI * PI * (PI * x).sin() * (PI * y).sin(),
        )
    }

    /// `u = x(1−x) y(1−y)`, whose load `2[x(1−x) + y(1−y)]` is polynomial.
    pub fn bubble() -> Self {
        Self::new(
            "x(1-x) y(1-y)",
            |x, y| x * (1.0 - x) * y * (1.0 - y),
            |x, y| {
                [
                    (1.0 - 2.0 * x) * y * (1.0 - y),
                    x * (1.0 - x) * (1.0 - 2.0 * y),
                ]
            },
            |x, y| 2.0 * (x * (1.0 - x) + y * (1.0 - y)),
        )
    }

    pub fn load(&self) -> impl Fn(f64, f64) -> f64 + Sync + '_ {
        move |x, y| (self.f)(x, y)
    }
}

/// Quadrature degree for error integrals, above the assembly degree.
pub fn error_quad_degree(config: &CaseConfig) -> usize {
    2 * config.k_u + 8
}

/// `(‖u − u_h‖_{L²}, ‖u − u_h‖_{H¹})`, with the full `H¹` norm.
pub fn error_norms(
    mesh: &Mesh,
    spaces: &SpaceSet,
    u_coeffs: &[f64],
    exact: &ExactSolution,
) -> Result<(f64, f64)> {
    let basis = TriBasis::new(BasisKind::Lagrange, spaces.config.k_u)?;
    let rule = quad_rule(error_quad_degree(&spaces.config))?;
    let table = basis.eval(&rule.points);
    let parts: Vec<(f64, f64)> = (0..mesh.num_elements())
        .into_par_iter()
        .map(|elem| {
            let map = mesh.affine_map(elem)?;
            let c = spaces.gather_interior(elem, u_coeffs);
            let jac = map.det.abs();
            let (mut l2, mut semi) = (0.0, 0.0);
            for (q, (p, w)) in rule.points.iter().zip(&rule.weights).enumerate() {
                let x = map.to_physical(*p);
                let vals = table.values.row(q);
                let gx = table.grad_x.row(q);
                let gy = table.grad_y.row(q);
                let (mut uh, mut rx, mut ry) = (0.0, 0.0, 0.0);
                for j in 0..c.len() {
                    uh += c[j] * vals[j];
                    rx += c[j] * gx[j];
                    ry += c[j] * gy[j];
                }
                let g = map.push_gradient([rx, ry]);
                let gu = (exact.grad_u)(x[0], x[1]);
                let e = (exact.u)(x[0], x[1]) - uh;
                l2 += w * jac * e * e;
                semi += w * jac * ((gu[0] - g[0]).powi(2) + (gu[1] - g[1]).powi(2));
            }
            Ok((l2, semi))
        })
        .collect::<Result<_>>()?;
    let l2: f64 = parts.iter().map(|p| p.0).sum();
    let semi: f64 = parts.iter().map(|p| p.1).sum();
    Ok((l2.sqrt(), (l2 + semi).sqrt()))
}

/// `log₂(coarse / fine)`; `None` unless both errors are positive.
pub fn rate(err_coarse: f64, err_fine: f64) -> Option<f64> {
    (err_coarse > 0.0 && err_fine > 0.0 && err_coarse.is_finite() && err_fine.is_finite())
        .then(|| (err_coarse / err_fine).log2())
}

/// `(Σ_K ε_Kᵀ G_K ε_K)^{1/2}`.
pub fn estimator_norm(kernel: &ElementKernel, mesh: &Mesh, eps_blocks: &[Vec<f64>]) -> Result<f64> {
    let mut total = 0.0;
    for (elem, eps) in eps_blocks.iter().enumerate() {
        let g = kernel.local_gram(mesh, elem)?;
        let ge = g.matvec(eps);
        total += ge.iter().zip(eps).map(|(a, b)| a * b).sum::<f64>();
    }
    Ok(total.max(0.0).sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RowStatus {
    Solved {
        h1_error: f64,
        l2_error: f64,
        estimator: f64,
        iterations: usize,
    },
    Singular,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConvergenceRow {
    pub n: usize,
    pub status: RowStatus,
    pub h1_rate: Option<f64>,
    pub l2_rate: Option<f64>,
}

impl ConvergenceRow {
    pub fn solved(n: usize, h1_error: f64, l2_error: f64, estimator: f64) -> Self {
        ConvergenceRow {
            n,
            status: RowStatus::Solved {
                h1_error,
                l2_error,
                estimator,
                iterations: 0,
            },
            h1_rate: None,
            l2_rate: None,
        }
    }

    pub fn singular(n: usize) -> Self {
        ConvergenceRow {
            n,
            status: RowStatus::Singular,
            h1_rate: None,
            l2_rate: None,
        }
    }

    pub fn is_singular(&self) -> bool {
        self.status == RowStatus::Singular
    }

    pub fn h1_error(&self) -> Option<f64> {
        match self.status {
            RowStatus::Solved { h1_error, .. } => Some(h1_error),
            RowStatus::Singular => None,
        }
    }

    pub fn l2_error(&self) -> Option<f64> {
        match self.status {
            RowStatus::Solved { l2_error, .. } => Some(l2_error),
            RowStatus::Singular => None,
        }
    }

    pub fn estimator(&self) -> Option<f64> {
        match self.status {
            RowStatus::Solved { estimator, .. } => Some(estimator),
            RowStatus::Singular => None,
        }
    }
}

/// Rows ordered by increasing `n`; the rate on a row compares it with the
/// next one, so the last row never carries rates.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConvergenceTable {
    pub label: String,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    pub fn new(label: impl Into<String>, mut rows: Vec<ConvergenceRow>) -> Self {
        fill_rates(&mut rows);
        ConvergenceTable {
            label: label.into(),
            rows,
        }
    }

    pub fn row(&self, n: usize) -> Option<&ConvergenceRow> {
        self.rows.iter().find(|r| r.n == n)
    }

    pub fn any_singular(&self) -> bool {
        self.rows.iter().any(ConvergenceRow::is_singular)
    }

    /// Rates of the last pair of solved rows, `(h1, l2)`.
    pub fn finest_rates(&self) -> Option<(f64, f64)> {
        self.rows
            .iter()
            .rev()
            .find_map(|r| Some((r.h1_rate?, r.l2_rate?)))
    }
}

fn fill_rates(rows: &mut [ConvergenceRow]) {
    for i in 0..rows.len() {
        let next = rows.get(i + 1).copied();
        let row = &mut rows[i];
        row.h1_rate = None;
        row.l2_rate = None;
        if let Some(next) = next {
            if let (Some(a), Some(b)) = (row.h1_error(), next.h1_error()) {
                row.h1_rate = rate(a, b);
            }
            if let (Some(a), Some(b)) = (row.l2_error(), next.l2_error()) {
                row.l2_rate = rate(a, b);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::unit_square_mesh;
    use crate::spaces::build_spaces;

    #[test]
    fn rates() {
        assert!((rate(1.0, 0.5).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(rate(0.3, 0.3), Some(0.0));
        assert!((rate(1.53, 0.843).unwrap() - 0.86).abs() < 0.005);
        assert_eq!(rate(0.0, 1.0), None);
        assert_eq!(rate(1.0, -1.0), None);
    }

    #[test]
    fn table_rates_and_singular_rows() {
        let t = ConvergenceTable::new(
            "t",
            vec![
                ConvergenceRow::solved(2, 1.0, 0.1, 1.0),
                ConvergenceRow::solved(4, 0.25, 0.025, 0.5),
                ConvergenceRow::singular(8),
            ],
        );
        assert_eq!(t.rows[0].h1_rate, Some(2.0));
        assert_eq!(t.rows[1].h1_rate, None);
        assert!(t.any_singular());
        assert_eq!(t.finest_rates(), Some((2.0, 2.0)));
    }

    #[test]
    fn interpolated_exact_polynomial_has_zero_error() {
        // u = x(1−x)y(1−y) lies in the global P_4 Lagrange space
        let mesh = unit_square_mesh(2).unwrap();
        let cfg = CaseConfig::new(4, 3, 5).unwrap();
        let spaces = build_spaces(&mesh, cfg);
        let exact = ExactSolution::bubble();
        let basis = TriBasis::new(BasisKind::Lagrange, 4).unwrap();
        let mut coeffs = vec![0.0; spaces.num_interior];
        for elem in 0..mesh.num_elements() {
            let map = mesh.affine_map(elem).unwrap();
            let vals = basis
                .interpolate(|a, b| {
                    let x = map.to_physical([a, b]);
                    (exact.u)(x[0], x[1])
                })
                .unwrap();
            for (id, v) in spaces.interior_dofmap[elem].iter().zip(vals) {
                if let Some(i) = id {
                    coeffs[*i] = v;
                }
            }
        }
        let (l2, h1) = error_norms(&mesh, &spaces, &coeffs, &exact).unwrap();
        assert!(l2 < 1e-12 && h1 < 1e-12, "{l2} {h1}");
    }

    #[test]
    fn zero_estimator_for_zero_blocks() {
        let mesh = unit_square_mesh(1).unwrap();
        let kernel = ElementKernel::new(CaseConfig::new(1, 0, 2).unwrap(), None).unwrap();
        let blocks = vec![vec![0.0; 6]; 2];
        assert_eq!(estimator_norm(&kernel, &mesh, &blocks).unwrap(), 0.0);
    }
}
