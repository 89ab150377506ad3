//! Element-local DPG systems, condensed global assembly, solution and
//! recovery of the error representation function.
//!
//! On each element `K` the broken test space is `P_{k_v}(K)` with the
//! inner product `(v, w)_K + (∇v, ∇w)_K`, whose Gram matrix is `G_K`. The
//! bilinear form pairs trial `(w, q̂)` with test `v` as
//! `(∇w, ∇v)_K − ⟨σ q̂, v⟩_{∂K}` where `σ = ±1` converts the single-valued
//! edge flux into the outward normal flux of `K`. Because `G` is block
//! diagonal, the optimal-test-function system reduces to
//! `Σ_K B_Kᵀ G_K⁻¹ B_K x = Σ_K B_Kᵀ G_K⁻¹ l_K`.

pub mod mixed;
pub mod solver;
pub mod sparse;

use rayon::prelude::*;

use crate::dense::{Cholesky, DenseMatrix};
use crate::error::{DpgError, Result};
use crate::mesh::{AffineMap, Mesh};
use crate::reftri::{
    quad_rule, BasisKind, BasisTable, GaussLine, RefQuadRule, TriBasis, LOCAL_EDGES, REF_VERTICES,
};
use crate::spaces::{CaseConfig, SpaceSet};

pub use solver::{SolveStats, SolverOptions};
pub use sparse::CsrMatrix;

/// Default assembly quadrature degree `2·max(k_u, k_v) + 6`.
pub fn default_quad_degree(config: &CaseConfig) -> usize {
    2 * config.k_u.max(config.k_v) + 6
}

/// One element's contribution: `B` (test × trial), `G` (test × test), `l`.
#[derive(Clone, Debug)]
pub struct LocalDpgSystem {
    pub b: DenseMatrix,
    pub g: DenseMatrix,
    pub l: Vec<f64>,
    /// Global trial index of each column of `b` (`None`: Dirichlet node).
    pub trial_ids: Vec<Option<usize>>,
}

/// Reference tables shared by every element of one discretization.
#[derive(Clone, Debug)]
pub struct ElementKernel {
    config: CaseConfig,
    quad_degree: usize,
    rule: RefQuadRule,
    test_basis: TriBasis,
    trial_basis: TriBasis,
    test_vol: BasisTable,
    trial_vol: BasisTable,
    edge_rule: GaussLine,
    /// `edge_test[i][dir]`: test values on local edge `i` at the edge
    /// quadrature points, parameterized from the edge's first local vertex
    /// (`dir = 0`) or from its second (`dir = 1`).
    edge_test: [[DenseMatrix; 2]; 3],
    /// `edge_flux[(j, q)] = L_j(t_q)`.
    edge_flux: DenseMatrix,
    load: LoadInterpolation,
}

/// How the load `f` enters `l_K`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum LoadRule {
    /// `f` sampled directly at the assembly quadrature points.
    #[default]
    Quadrature,
    /// `f` replaced by its degree-`d` Lagrange interpolant on each element.
    Interpolated(usize),
}

#[derive(Clone, Debug, Default)]
struct LoadInterpolation {
    rule: LoadRule,
    nodes: Vec<[f64; 2]>,
    /// Nodal basis values at the assembly quadrature points.
    at_quad: Option<DenseMatrix>,
}

impl ElementKernel {
    pub fn new(config: CaseConfig, quad_degree: Option<usize>) -> Result<Self> {
        let quad_degree = quad_degree.unwrap_or_else(|| default_quad_degree(&config));
        if quad_degree < 2 * config.k_v {
            return Err(DpgError::Config(format!(
                "quadrature degree {quad_degree} cannot integrate the degree-{} test Gram matrix",
                config.k_v
            )));
        }
        let rule = quad_rule(quad_degree)?;
        let test_basis = TriBasis::new(BasisKind::Orthonormal, config.k_v)?;
        let trial_basis = TriBasis::new(BasisKind::Lagrange, config.k_u)?;
        let test_vol = test_basis.eval(&rule.points);
        let trial_vol = trial_basis.eval(&rule.points);
        let edge_rule = GaussLine::for_degree(quad_degree);
        let edge_test = std::array::from_fn(|i| {
            let [a, b] = LOCAL_EDGES[i];
            let (pa, pb) = (REF_VERTICES[a], REF_VERTICES[b]);
            std::array::from_fn(|dir| {
                let (s, e) = if dir == 0 { (pa, pb) } else { (pb, pa) };
                let pts: Vec<[f64; 2]> = edge_rule
                    .points
                    .iter()
                    .map(|&t| [s[0] + t * (e[0] - s[0]), s[1] + t * (e[1] - s[1])])
                    .collect();
                test_basis.eval(&pts).values
            })
        });
        let edge_flux = crate::reftri::edge_basis_eval(config.k_q, &edge_rule.points);
        Ok(ElementKernel {
            config,
            quad_degree,
            rule,
            test_basis,
            trial_basis,
            test_vol,
            trial_vol,
            edge_rule,
            edge_test,
            edge_flux,
            load: LoadInterpolation::default(),
        })
    }

    pub fn with_load_rule(mut self, rule: LoadRule) -> Result<Self> {
        self.load = match rule {
            LoadRule::Quadrature => LoadInterpolation::default(),
            LoadRule::Interpolated(d) => {
                let basis = TriBasis::new(BasisKind::Lagrange, d)?;
                LoadInterpolation {
                    rule,
                    nodes: crate::reftri::lagrange_nodes(d),
                    at_quad: Some(basis.eval(&self.rule.points).values),
                }
            }
        };
        Ok(self)
    }

    pub fn load_rule(&self) -> LoadRule {
        self.load.rule
    }

    pub fn config(&self) -> &CaseConfig {
        &self.config
    }

    pub fn quad_degree(&self) -> usize {
        self.quad_degree
    }

    pub fn test_basis(&self) -> &TriBasis {
        &self.test_basis
    }

    pub fn trial_basis(&self) -> &TriBasis {
        &self.trial_basis
    }

    /// Physical gradients of one basis table row.
    fn physical_gradients(map: &AffineMap, table: &BasisTable, q: usize) -> (Vec<f64>, Vec<f64>) {
        let gx = table.grad_x.row(q);
        let gy = table.grad_y.row(q);
        gx.iter()
            .zip(gy)
            .map(|(&a, &b)| {
                let g = map.push_gradient([a, b]);
                (g[0], g[1])
            })
            .unzip()
    }

    /// Test-space Gram matrix `(v_i, v_j)_K + (∇v_i, ∇v_j)_K`.
    pub fn local_gram(&self, mesh: &Mesh, elem: usize) -> Result<DenseMatrix> {
        let map = mesh.affine_map(elem)?;
        Ok(gram_from_table(&map, &self.test_vol, &self.rule))
    }

    /// `B_K` with columns (interior nodes, flux of local edges 0, 1, 2).
    pub fn local_b(
        &self,
        mesh: &Mesh,
        spaces: &SpaceSet,
        elem: usize,
    ) -> Result<(DenseMatrix, Vec<Option<usize>>)> {
        let map = mesh.affine_map(elem)?;
        let jac = map.det.abs();
        let n_test = self.test_basis.dim();
        let n_int = self.trial_basis.dim();
        let n_flux = self.config.k_q + 1;
        let mut b = DenseMatrix::zeros(n_test, n_int + 3 * n_flux);

        for (q, w) in self.rule.weights.iter().enumerate() {
            let wq = w * jac;
            let (vx, vy) = Self::physical_gradients(&map, &self.test_vol, q);
            let (ux, uy) = Self::physical_gradients(&map, &self.trial_vol, q);
            for i in 0..n_test {
                let row = b.row_mut(i);
                for j in 0..n_int {
                    row[j] += wq * (ux[j] * vx[i] + uy[j] * vy[i]);
                }
            }
        }

        let tri = &mesh.triangles[elem];
        for (e, [a, bv]) in LOCAL_EDGES.iter().enumerate() {
            let frame = mesh.edge_trace_frame(elem, e);
            // the edge rule runs v_lo → v_hi; pick the matching local direction
            let dir = usize::from(tri[*a] > tri[*bv]);
            let test = &self.edge_test[e][dir];
            let scale = -frame.sign * frame.length;
            for (q, w) in self.edge_rule.weights.iter().enumerate() {
                let v = test.row(q);
                for j in 0..n_flux {
                    let f = scale * w * self.edge_flux[(j, q)];
                    let col = n_int + e * n_flux + j;
                    for i in 0..n_test {
                        b[(i, col)] += f * v[i];
                    }
                }
            }
        }
        Ok((b, spaces.element_trial_dofs(mesh, elem)))
    }

    /// `l_K[i] = ∫_K f v_i`.
    pub fn local_load<F>(&self, mesh: &Mesh, elem: usize, f: &F) -> Result<Vec<f64>>
    where
        F: Fn(f64, f64) -> f64 + ?Sized,
    {
        let map = mesh.affine_map(elem)?;
        let jac = map.det.abs();
        let sample = |p: [f64; 2]| {
            let x = map.to_physical(p);
            let fx = f(x[0], x[1]);
            if fx.is_finite() {
                Ok(fx)
            } else {
                Err(DpgError::LoadEvaluation { x: x[0], y: x[1] })
            }
        };
        let f_quad: Vec<f64> = match &self.load.at_quad {
            None => self
                .rule
                .points
                .iter()
                .map(|&p| sample(p))
                .collect::<Result<_>>()?,
            Some(table) => {
                let nodal: Vec<f64> = self
                    .load
                    .nodes
                    .iter()
                    .map(|&p| sample(p))
                    .collect::<Result<_>>()?;
                table.matvec(&nodal)
            }
        };
        let mut l = vec![0.0; self.test_basis.dim()];
        for (q, (w, fx)) in self.rule.weights.iter().zip(f_quad).enumerate() {
            let v = self.test_vol.values.row(q);
            for (li, vi) in l.iter_mut().zip(v) {
                *li += w * jac * fx * vi;
            }
        }
        Ok(l)
    }

    pub fn local_system<F>(
        &self,
        mesh: &Mesh,
        spaces: &SpaceSet,
        elem: usize,
        f: &F,
    ) -> Result<LocalDpgSystem>
    where
        F: Fn(f64, f64) -> f64 + ?Sized,
    {
        let (b, trial_ids) = self.local_b(mesh, spaces, elem)?;
        Ok(LocalDpgSystem {
            b,
            g: self.local_gram(mesh, elem)?,
            l: self.local_load(mesh, elem, f)?,
            trial_ids,
        })
    }
}

fn gram_from_table(map: &AffineMap, table: &BasisTable, rule: &RefQuadRule) -> DenseMatrix {
    let jac = map.det.abs();
    let n = table.values.cols();
    let mut g = DenseMatrix::zeros(n, n);
    for (q, w) in rule.weights.iter().enumerate() {
        let wq = w * jac;
        let v = table.values.row(q);
        let (gx, gy) = ElementKernel::physical_gradients(map, table, q);
        for i in 0..n {
            for j in 0..=i {
                g[(i, j)] += wq * (v[i] * v[j] + gx[i] * gx[j] + gy[i] * gy[j]);
            }
        }
    }
    for i in 0..n {
        for j in 0..i {
            g[(j, i)] = g[(i, j)];
        }
    }
    g
}

/// `(v_i, v_j)_K + (∇v_i, ∇v_j)_K` for an arbitrary basis on the element
/// described by `map`.
pub fn h1_gram(basis: &TriBasis, map: &AffineMap, quad_degree: usize) -> Result<DenseMatrix> {
    let rule = quad_rule(quad_degree)?;
    Ok(gram_from_table(map, &basis.eval(&rule.points), &rule))
}

/// Gram matrix of the degree-`k_v` orthonormal test basis on one element,
/// with the default quadrature.
pub fn local_gram(mesh: &Mesh, elem: usize, k_v: usize) -> Result<DenseMatrix> {
    let cfg = CaseConfig {
        k_u: 1,
        k_q: 0,
        k_v,
    };
    ElementKernel::new(cfg, None)?.local_gram(mesh, elem)
}

/// Gathers local trial coefficients (Dirichlet nodes read as zero).
pub fn gather(ids: &[Option<usize>], x: &[f64]) -> Vec<f64> {
    ids.iter().map(|id| id.map_or(0.0, |i| x[i])).collect()
}

/// Condensed normal equations `A x = r`.
#[derive(Clone, Debug)]
pub struct NormalEquations {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
}

pub fn assemble_normal_equations<F>(
    kernel: &ElementKernel,
    mesh: &Mesh,
    spaces: &SpaceSet,
    f: &F,
) -> Result<NormalEquations>
where
    F: Fn(f64, f64) -> f64 + Sync + ?Sized,
{
    let locals: Vec<(Vec<Option<usize>>, DenseMatrix, Vec<f64>)> = (0..mesh.num_elements())
        .into_par_iter()
        .map(|elem| {
            let sys = kernel.local_system(mesh, spaces, elem, f)?;
            let chol = Cholesky::factor(&sys.g)?;
            let ginv_b = chol.solve(&sys.b)?;
            let ginv_l = chol.solve_vec(&sys.l);
            let a_local = sys.b.tr_matmul(&ginv_b)?;
            let r_local = sys.b.tr_matvec(&ginv_l);
            Ok((sys.trial_ids, a_local, r_local))
        })
        .collect::<Result<_>>()?;

    let n = spaces.num_trial();
    let mut rhs = vec![0.0; n];
    let cap: usize = locals.iter().map(|(ids, _, _)| ids.len() * ids.len()).sum();
    let mut triplets = Vec::with_capacity(cap);
    for (ids, a_local, r_local) in &locals {
        for (li, gi) in ids.iter().enumerate() {
            let Some(gi) = *gi else { continue };
            rhs[gi] += r_local[li];
            for (lj, gj) in ids.iter().enumerate() {
                if let Some(gj) = *gj {
                    triplets.push((gi, gj, a_local[(li, lj)]));
                }
            }
        }
    }
    Ok(NormalEquations {
        matrix: CsrMatrix::from_triplets(n, triplets),
        rhs,
    })
}

/// Discrete solution and the recovered error representation function.
#[derive(Clone, Debug)]
pub struct DpgSolution {
    pub u_coeffs: Vec<f64>,
    pub flux_coeffs: Vec<f64>,
    /// Per element, coefficients of `ε^r` in the orthonormal test basis.
    pub eps_coeffs: Vec<Vec<f64>>,
    /// Per element, `ε_Kᵀ G_K ε_K`.
    pub eps_energy: Vec<f64>,
    pub stats: SolveStats,
}

impl DpgSolution {
    /// Interior and flux coefficients stacked as one trial vector.
    pub fn trial_vector(&self) -> Vec<f64> {
        let mut x = self.u_coeffs.clone();
        x.extend_from_slice(&self.flux_coeffs);
        x
    }

    /// `‖ε^r‖_Y`.
    pub fn estimator(&self) -> f64 {
        self.eps_energy.iter().sum::<f64>().sqrt()
    }
}

/// Per element `ε_K = G_K⁻¹ (l_K − B_K x_K)` and its energy.
pub fn recover_error_rep<F>(
    kernel: &ElementKernel,
    mesh: &Mesh,
    spaces: &SpaceSet,
    f: &F,
    trial: &[f64],
) -> Result<(Vec<Vec<f64>>, Vec<f64>)>
where
    F: Fn(f64, f64) -> f64 + Sync + ?Sized,
{
    let blocks: Vec<(Vec<f64>, f64)> = (0..mesh.num_elements())
        .into_par_iter()
        .map(|elem| {
            let sys = kernel.local_system(mesh, spaces, elem, f)?;
            let x = gather(&sys.trial_ids, trial);
            let bx = sys.b.matvec(&x);
            let resid: Vec<f64> = sys.l.iter().zip(&bx).map(|(l, b)| l - b).collect();
            let eps = Cholesky::factor(&sys.g)?.solve_vec(&resid);
            let energy: f64 = eps.iter().zip(&resid).map(|(e, r)| e * r).sum();
            Ok((eps, energy))
        })
        .collect::<Result<_>>()?;
    Ok(blocks.into_iter().unzip())
}

/// Assembles, solves and recovers `ε^r` in one go.
pub fn solve_dpg<F>(
    kernel: &ElementKernel,
    mesh: &Mesh,
    spaces: &SpaceSet,
    f: &F,
    opts: &SolverOptions,
) -> Result<DpgSolution>
where
    F: Fn(f64, f64) -> f64 + Sync + ?Sized,
{
    let system = assemble_normal_equations(kernel, mesh, spaces, f)?;
    let (x, stats) = solver::solve(&system.matrix, &system.rhs, opts)?;
    let (eps_coeffs, eps_energy) = recover_error_rep(kernel, mesh, spaces, f, &x)?;
    let (u, q) = x.split_at(spaces.num_interior);
    Ok(DpgSolution {
        u_coeffs: u.to_vec(),
        flux_coeffs: q.to_vec(),
        eps_coeffs,
        eps_energy,
        stats,
    })
}

/// `b(z, ε^r) = Σ_K ε_Kᵀ B_K z_K` for a trial vector `z`.
pub fn pair_with_error_rep(
    kernel: &ElementKernel,
    mesh: &Mesh,
    spaces: &SpaceSet,
    z: &[f64],
    eps: &[Vec<f64>],
) -> Result<f64> {
    let mut total = 0.0;
    for (elem, eps_k) in eps.iter().enumerate() {
        let (b, ids) = kernel.local_b(mesh, spaces, elem)?;
        let bz = b.matvec(&gather(&ids, z));
        total += bz.iter().zip(eps_k).map(|(a, e)| a * e).sum::<f64>();
    }
    Ok(total)
}
