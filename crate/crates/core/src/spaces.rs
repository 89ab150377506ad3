//! Degree-of-freedom maps for the trial spaces (continuous interior field
//! with homogeneous Dirichlet data, single-valued edge fluxes) and the
//! broken test space.
//!
//! The global trial vector stacks interior coefficients first, then flux
//! coefficients: flux dof `j` of edge `E` sits at
//! `num_interior + E·(k_q + 1) + j`.

use std::fmt;

use crate::error::{DpgError, Result};
use crate::mesh::Mesh;
use crate::reftri::{cell_interior_nodes, dim_p, edge_interior_nodes, LOCAL_EDGES};

/// Polynomial degrees of the interior trial, flux trial and test spaces.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct CaseConfig {
    pub k_u: usize,
    pub k_q: usize,
    pub k_v: usize,
}

impl CaseConfig {
    /// Any combination with `k_u ≥ 1` is accepted; well-posedness is
    /// diagnosed separately.
    pub fn new(k_u: usize, k_q: usize, k_v: usize) -> Result<Self> {
        if k_u == 0 {
            return Err(DpgError::InvalidParameter(
                "interior degree must be at least 1 for an H¹₀-conforming space".into(),
            ));
        }
        Ok(CaseConfig { k_u, k_q, k_v })
    }

    pub fn test_dim_per_element(&self) -> usize {
        dim_p(self.k_v)
    }
}

impl fmt::Display for CaseConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.k_u, self.k_q, self.k_v)
    }
}

/// The three degree families studied: `(k, k−1, k+1)`, `(k−1, k−1, k)`
/// and `(k, k−1, k)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Case {
    One,
    Two,
    Three,
}

impl Case {
    pub fn from_number(case: u32) -> Result<Self> {
        match case {
            1 => Ok(Case::One),
            2 => Ok(Case::Two),
            3 => Ok(Case::Three),
            _ => Err(DpgError::InvalidParameter(format!("unknown case {case}"))),
        }
    }

    pub fn number(self) -> u32 {
        match self {
            Case::One => 1,
            Case::Two => 2,
            Case::Three => 3,
        }
    }

    /// Even `k` in cases 2 and 3 reduces the test degree to the regime where
    /// the flux moment system can lose rank.
    pub fn may_be_singular(self, k: usize) -> bool {
        self != Case::One && k.is_multiple_of(2)
    }
}

pub fn case_degrees(case: Case, k: usize) -> Result<CaseConfig> {
    if k == 0 {
        return Err(DpgError::InvalidParameter("k must be at least 1".into()));
    }
    match case {
        Case::One => CaseConfig::new(k, k - 1, k + 1),
        Case::Two => {
            if k == 1 {
                return Err(DpgError::InvalidParameter(
                    "case 2 needs k ≥ 2 (k_u = k − 1 must be positive)".into(),
                ));
            }
            CaseConfig::new(k - 1, k - 1, k)
        }
        Case::Three => CaseConfig::new(k, k - 1, k),
    }
}

#[derive(Clone, Debug)]
pub struct SpaceSet {
    pub config: CaseConfig,
    /// Per element, the global interior index of each local Lagrange node
    /// (`None` for nodes carrying the Dirichlet constraint).
    pub interior_dofmap: Vec<Vec<Option<usize>>>,
    pub num_interior: usize,
    pub num_flux: usize,
    pub num_test: usize,
    num_edges: usize,
}

impl SpaceSet {
    pub fn num_trial(&self) -> usize {
        self.num_interior + self.num_flux
    }

    pub fn flux_dofs_per_edge(&self) -> usize {
        self.config.k_q + 1
    }

    /// Global trial indices of the flux block of `edge`.
    pub fn flux_dofs(&self, edge: usize) -> std::ops::Range<usize> {
        debug_assert!(edge < self.num_edges);
        let start = self.num_interior + edge * self.flux_dofs_per_edge();
        start..start + self.flux_dofs_per_edge()
    }

    /// Range of `elem`'s coefficients in the broken test vector.
    pub fn test_dofs(&self, elem: usize) -> std::ops::Range<usize> {
        let d = self.config.test_dim_per_element();
        elem * d..(elem + 1) * d
    }

    /// Trial columns of one element: local interior nodes, then the flux
    /// blocks of local edges 0, 1, 2.
    pub fn element_trial_dofs(&self, mesh: &Mesh, elem: usize) -> Vec<Option<usize>> {
        let mut ids = self.interior_dofmap[elem].clone();
        for &edge in &mesh.elem_edges[elem] {
            ids.extend(self.flux_dofs(edge).map(Some));
        }
        ids
    }

    /// Local interior coefficients of `elem` from a global trial vector.
    pub fn gather_interior(&self, elem: usize, trial: &[f64]) -> Vec<f64> {
        self.interior_dofmap[elem]
            .iter()
            .map(|id| id.map_or(0.0, |i| trial[i]))
            .collect()
    }
}

pub fn build_spaces(mesh: &Mesh, config: CaseConfig) -> SpaceSet {
    let k = config.k_u;
    let per_edge = edge_interior_nodes(k);
    let per_cell = cell_interior_nodes(k);

    let mut next = 0usize;
    let vertex_dof: Vec<Option<usize>> = mesh
        .boundary_vertex
        .iter()
        .map(|&b| {
            (!b).then(|| {
                next += 1;
                next - 1
            })
        })
        .collect();
    // first dof of each edge's interior nodes, in v_lo → v_hi order
    let edge_dof: Vec<Option<usize>> = mesh
        .edges
        .iter()
        .map(|e| {
            (!e.is_boundary()).then(|| {
                next += per_edge;
                next - per_edge
            })
        })
        .collect();

    let mut interior_dofmap = Vec::with_capacity(mesh.num_elements());
    for (elem, tri) in mesh.triangles.iter().enumerate() {
        let mut local = Vec::with_capacity(dim_p(k));
        local.extend(tri.iter().map(|&v| vertex_dof[v]));
        for (i, [a, b]) in LOCAL_EDGES.iter().enumerate() {
            let edge = mesh.elem_edges[elem][i];
            let forward = tri[*a] < tri[*b];
            for s in 0..per_edge {
                let along = if forward { s } else { per_edge - 1 - s };
                local.push(edge_dof[edge].map(|d| d + along));
            }
        }
        for _ in 0..per_cell {
            local.push(Some(next));
            next += 1;
        }
        interior_dofmap.push(local);
    }

    SpaceSet {
        config,
        interior_dofmap,
        num_interior: next,
        num_flux: mesh.num_edges() * (config.k_q + 1),
        num_test: mesh.num_elements() * dim_p(config.k_v),
        num_edges: mesh.num_edges(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::unit_square_mesh;
    use crate::reftri::{BasisKind, TriBasis};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn small_dimensions() {
        let m1 = unit_square_mesh(1).unwrap();
        let m2 = unit_square_mesh(2).unwrap();
        let cfg = CaseConfig::new(1, 0, 2).unwrap();
        assert_eq!(build_spaces(&m1, cfg).num_interior, 0);
        assert_eq!(build_spaces(&m2, cfg).num_interior, 1);
        assert_eq!(build_spaces(&m1, cfg).num_flux, 5);
    }

    #[test]
    fn case_table() {
        assert_eq!(
            case_degrees(Case::One, 3).unwrap(),
            CaseConfig {
                k_u: 3,
                k_q: 2,
                k_v: 4
            }
        );
        assert_eq!(
            case_degrees(Case::Two, 3).unwrap(),
            CaseConfig {
                k_u: 2,
                k_q: 2,
                k_v: 3
            }
        );
        assert_eq!(
            case_degrees(Case::Three, 1).unwrap(),
            CaseConfig {
                k_u: 1,
                k_q: 0,
                k_v: 1
            }
        );
        assert!(case_degrees(Case::Two, 1).is_err());
        assert!(Case::Two.may_be_singular(2));
        assert!(!Case::One.may_be_singular(2));
        assert!(CaseConfig::new(0, 0, 1).is_err());
    }

    #[test]
    fn dimension_formulas() {
        for n in 1..=8 {
            let mesh = unit_square_mesh(n).unwrap();
            for k in 1..=5 {
                let cfg = CaseConfig::new(k, k - 1, k + 1).unwrap();
                let s = build_spaces(&mesh, cfg);
                assert_eq!(s.num_test, 2 * n * n * dim_p(k + 1));
                assert_eq!(s.num_flux, (3 * n * n + 2 * n) * k);
                // interior Lagrange nodes of the global P_k space
                assert_eq!(s.num_interior, (k * n - 1) * (k * n - 1));
                let mut seen = vec![false; s.num_interior];
                for map in &s.interior_dofmap {
                    for id in map.iter().flatten() {
                        seen[*id] = true;
                    }
                }
                assert!(seen.iter().all(|&b| b));
            }
        }
    }

    /// Evaluates a global interior field from element `elem` at a physical point.
    fn eval_on(
        mesh: &Mesh,
        spaces: &SpaceSet,
        basis: &TriBasis,
        coeffs: &[f64],
        elem: usize,
        x: [f64; 2],
    ) -> f64 {
        let map = mesh.affine_map(elem).unwrap();
        let xi = map.to_reference(x);
        let vals = basis.values_at(xi[0], xi[1]);
        let local = spaces.gather_interior(elem, coeffs);
        vals.iter().zip(&local).map(|(a, b)| a * b).sum()
    }

    #[test]
    fn conformity_and_dirichlet_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in [1, 2, 3] {
            let mesh = unit_square_mesh(n).unwrap();
            for k in 1..=5 {
                let spaces = build_spaces(&mesh, CaseConfig::new(k, 0, k).unwrap());
                let basis = TriBasis::new(BasisKind::Lagrange, k).unwrap();
                let coeffs: Vec<f64> = (0..spaces.num_trial())
                    .map(|_| rng.gen_range(-1.0..1.0))
                    .collect();
                for edge in &mesh.edges {
                    let (a, b) = (mesh.vertices[edge.v_lo], mesh.vertices[edge.v_hi]);
                    for s in 0..5 {
                        let t = (s as f64 + 0.5) / 5.0;
                        let x = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
                        let left = eval_on(&mesh, &spaces, &basis, &coeffs, edge.left, x);
                        match edge.right {
                            Some(r) => {
                                let right = eval_on(&mesh, &spaces, &basis, &coeffs, r, x);
                                assert!(
                                    (left - right).abs() <= 1e-12,
                                    "n={n} k={k} jump {}",
                                    left - right
                                );
                            }
                            None => assert!(left.abs() <= 1e-12, "n={n} k={k} boundary {left}"),
                        }
                    }
                }
            }
        }
    }
}
