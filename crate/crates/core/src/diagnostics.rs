//! Unisolvency diagnostics for the flux/test pairing on a single triangle.
//!
//! With the interior trial space out of the picture, injectivity of the
//! DPG operator reduces to injectivity of the edge-flux pairing
//! `q̂ ↦ (v ↦ ∫_{∂K} q̂ v ds)` against the test polynomials. On a single
//! element that is a full-column-rank question for a small moment matrix.
//! Its transpose, completed by interior moments, is the square system
//! defining the local projector `Π` below.

use std::fmt::Write as _;

use crate::dense::{numerical_rank, singular_values, DenseMatrix, Lu, DEFAULT_RANK_TOL};
use crate::error::{DpgError, Result};
use crate::mesh::AffineMap;
use crate::reftri::{
    dim_p, quad_rule, BasisKind, EdgeBasis, GaussLine, TriBasis, LOCAL_EDGES, REF_VERTICES,
};

/// Moment matrix with rows indexed by test functions and columns by flux
/// functions: `M[(i, j)] = ∫_{∂K} v_i q̂_j ds`.
#[derive(Clone, Debug)]
pub struct MomentMatrix {
    pub matrix: DenseMatrix,
    pub row_basis: String,
    pub col_basis: String,
    pub k_q: usize,
    pub k_v: usize,
}

impl MomentMatrix {
    pub fn rank(&self) -> usize {
        numerical_rank(&self.matrix, DEFAULT_RANK_TOL)
    }

    pub fn is_injective(&self) -> bool {
        self.rank() == self.matrix.cols()
    }

    pub fn singular_values(&self) -> Vec<f64> {
        singular_values(&self.matrix)
    }
}

/// Reference triangle as an affine map.
pub fn reference_map() -> AffineMap {
    triangle_map([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
}

/// Affine map of a counterclockwise triangle.
pub fn triangle_map(v: [[f64; 2]; 3]) -> AffineMap {
    let j = [
        [v[1][0] - v[0][0], v[2][0] - v[0][0]],
        [v[1][1] - v[0][1], v[2][1] - v[0][1]],
    ];
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    AffineMap {
        jacobian: j,
        inverse_transpose: [
            [j[1][1] / det, -j[1][0] / det],
            [-j[0][1] / det, j[0][0] / det],
        ],
        det,
        vertices: v,
    }
}

/// Integrates `g(reference point, t)` over local edge `e` of the reference
/// triangle in arclength of the physical element, with `t ∈ [0, 1]` running
/// counterclockwise.
fn edge_integral<G: FnMut([f64; 2], f64) -> f64>(
    map: &AffineMap,
    e: usize,
    degree: usize,
    mut g: G,
) -> f64 {
    let [a, b] = LOCAL_EDGES[e];
    let (pa, pb) = (REF_VERTICES[a], REF_VERTICES[b]);
    let (xa, xb) = (map.to_physical(pa), map.to_physical(pb));
    let length = ((xb[0] - xa[0]).powi(2) + (xb[1] - xa[1]).powi(2)).sqrt();
    let line = GaussLine::for_degree(degree);
    line.points
        .iter()
        .zip(&line.weights)
        .map(|(&t, w)| {
            let p = [pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1])];
            w * length * g(p, t)
        })
        .sum()
}

type FluxFn = fn([f64; 2], f64) -> f64;

/// The 6×6 pairing of the quadratic monomials `(1, x, y, x², xy, y²)` with
/// the flux basis `(1, x on e₂; 1, y on e₁; 1/√2, x/√2 on e₀)` of the unit
/// triangle, where `eᵢ` is the edge opposite vertex `aᵢ`.
pub fn example_matrix() -> MomentMatrix {
    let map = reference_map();
    let tests = TriBasis::new(BasisKind::Monomial, 2).expect("monomial basis");
    let r2 = std::f64::consts::FRAC_1_SQRT_2;
    // (local edge, flux function of the physical point)
    let fluxes: [(usize, FluxFn, f64); 6] = [
        (2, |_, _| 1.0, 1.0),
        (2, |p, _| p[0], 1.0),
        (1, |_, _| 1.0, 1.0),
        (1, |p, _| p[1], 1.0),
        (0, |_, _| 1.0, r2),
        (0, |p, _| p[0], r2),
    ];
    let mut m = DenseMatrix::zeros(6, 6);
    for (j, (edge, flux, scale)) in fluxes.iter().enumerate() {
        for i in 0..6 {
            m[(i, j)] = scale
                * edge_integral(&map, *edge, 4, |p, t| {
                    let v = tests.values_at(p[0], p[1]);
                    v[i] * flux(p, t)
                });
        }
    }
    MomentMatrix {
        matrix: m,
        row_basis: "monomials 1, x, y, x^2, xy, y^2".into(),
        col_basis: "1, x on e2; 1, y on e1; 1/sqrt2, x/sqrt2 on e0".into(),
        k_q: 1,
        k_v: 2,
    }
}

/// Single-element pairing of per-edge Legendre fluxes (degree ≤ `k_q`,
/// edges 0, 1, 2) with the orthonormal basis of `P_{k_v}`.
pub fn flux_test_moment_matrix(k_q: usize, k_v: usize) -> MomentMatrix {
    let tests = TriBasis::new(BasisKind::Orthonormal, k_v).expect("orthonormal basis");
    let flux = EdgeBasis::new(k_q);
    let n_rows = tests.dim();
    let mut m = DenseMatrix::zeros(n_rows, 3 * flux.dim());
    for e in 0..3 {
        let line = GaussLine::for_degree(k_q + k_v);
        let [a, b] = LOCAL_EDGES[e];
        let (pa, pb) = (REF_VERTICES[a], REF_VERTICES[b]);
        let length = ((pb[0] - pa[0]).powi(2) + (pb[1] - pa[1]).powi(2)).sqrt();
        for (&t, w) in line.points.iter().zip(&line.weights) {
            let p = [pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1])];
            let v = tests.values_at(p[0], p[1]);
            let q = flux.eval_at(t);
            for (j, qj) in q.iter().enumerate() {
                for (i, vi) in v.iter().enumerate() {
                    m[(i, e * flux.dim() + j)] += w * length * vi * qj;
                }
            }
        }
    }
    MomentMatrix {
        matrix: m,
        row_basis: format!("orthonormal P_{k_v}"),
        col_basis: format!("Legendre P_{k_q} per edge"),
        k_q,
        k_v,
    }
}

/// Square moment system of `P_k`: rows are moments against `P_{k−1}(E)` on
/// each edge followed by moments against `P_{k−3}(K)`; columns are the
/// orthonormal basis of `P_k`.
#[derive(Clone, Debug)]
pub struct LemmaSystem {
    pub matrix: DenseMatrix,
    pub k: usize,
}

impl LemmaSystem {
    pub fn edge_rows(&self) -> usize {
        3 * self.k
    }

    /// `σ_min / σ_max`.
    pub fn singular_value_ratio(&self) -> f64 {
        crate::dense::singular_value_ratio(&self.matrix)
    }

    pub fn is_nonsingular(&self) -> bool {
        numerical_rank(&self.matrix, DEFAULT_RANK_TOL) == self.matrix.rows()
    }
}

/// Moment rows applied to a function on a physical element; row order as
/// in [`LemmaSystem`].
fn moment_rows<F: Fn([f64; 2]) -> Vec<f64>>(
    k: usize,
    map: &AffineMap,
    width: usize,
    values: F,
) -> Result<DenseMatrix> {
    let edge_basis = EdgeBasis::new(k - 1);
    let n_int = if k >= 3 { dim_p(k - 3) } else { 0 };
    let mut m = DenseMatrix::zeros(3 * k + n_int, width);
    for e in 0..3 {
        let line = GaussLine::for_degree(3 * k + 6);
        let [a, b] = LOCAL_EDGES[e];
        let (pa, pb) = (REF_VERTICES[a], REF_VERTICES[b]);
        let (xa, xb) = (map.to_physical(pa), map.to_physical(pb));
        let length = ((xb[0] - xa[0]).powi(2) + (xb[1] - xa[1]).powi(2)).sqrt();
        for (&t, w) in line.points.iter().zip(&line.weights) {
            let p = [pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1])];
            let vals = values(p);
            for (j, lj) in edge_basis.eval_at(t).iter().enumerate() {
                for (c, v) in vals.iter().enumerate() {
                    m[(e * k + j, c)] += w * length * lj * v;
                }
            }
        }
    }
    if n_int > 0 {
        let interior = TriBasis::new(BasisKind::Orthonormal, k - 3)?;
        let rule = quad_rule(3 * k + 6)?;
        let jac = map.det.abs();
        for (p, w) in rule.points.iter().zip(&rule.weights) {
            let vals = values(*p);
            for (j, rj) in interior.values_at(p[0], p[1]).iter().enumerate() {
                for (c, v) in vals.iter().enumerate() {
                    m[(3 * k + j, c)] += w * jac * rj * v;
                }
            }
        }
    }
    Ok(m)
}

pub fn lemma_system(k: usize) -> Result<LemmaSystem> {
    if k == 0 {
        return Err(DpgError::InvalidParameter(
            "lemma system needs k ≥ 1".into(),
        ));
    }
    let basis = TriBasis::new(BasisKind::Orthonormal, k)?;
    let matrix = moment_rows(k, &reference_map(), basis.dim(), |p| {
        basis.values_at(p[0], p[1])
    })?;
    debug_assert!(matrix.is_square());
    Ok(LemmaSystem { matrix, k })
}

/// `Πv ∈ P_k(K)` expressed in the reference orthonormal basis pulled back
/// through `map`.
#[derive(Clone, Debug)]
pub struct FortinProjection {
    pub k: usize,
    pub coeffs: Vec<f64>,
    pub map: AffineMap,
    basis: TriBasis,
}

impl FortinProjection {
    pub fn value(&self, x: [f64; 2]) -> f64 {
        let xi = self.map.to_reference(x);
        let v = self.basis.values_at(xi[0], xi[1]);
        v.iter().zip(&self.coeffs).map(|(a, b)| a * b).sum()
    }

    pub fn gradient(&self, x: [f64; 2]) -> [f64; 2] {
        let xi = self.map.to_reference(x);
        let (_, gx, gy) = self.basis.eval_point(xi[0], xi[1]);
        let rx: f64 = gx.iter().zip(&self.coeffs).map(|(a, b)| a * b).sum();
        let ry: f64 = gy.iter().zip(&self.coeffs).map(|(a, b)| a * b).sum();
        self.map.push_gradient([rx, ry])
    }

    /// The moment functionals of the defining system applied to `f`.
    pub fn moments_of<F: Fn(f64, f64) -> f64>(&self, f: F) -> Result<Vec<f64>> {
        let m = moment_rows(self.k, &self.map, 1, |p| {
            let x = self.map.to_physical(p);
            vec![f(x[0], x[1])]
        })?;
        Ok(m.column(0))
    }
}

/// Solves the square moment system on the element `map` for the
/// polynomial of degree `k` sharing `v`'s edge moments up to degree `k−1`
/// and interior moments up to degree `k−3`.
pub fn fortin_projector<F: Fn(f64, f64) -> f64>(
    k: usize,
    map: &AffineMap,
    v: F,
) -> Result<FortinProjection> {
    if k == 0 {
        return Err(DpgError::InvalidParameter("projector needs k ≥ 1".into()));
    }
    let basis = TriBasis::new(BasisKind::Orthonormal, k)?;
    let system = moment_rows(k, map, basis.dim(), |p| basis.values_at(p[0], p[1]))?;
    let rank = numerical_rank(&system, DEFAULT_RANK_TOL);
    if rank < system.rows() {
        return Err(DpgError::Singular {
            reason: format!(
                "degree-{k} moment system has rank {rank} of {}",
                system.rows()
            ),
            null_vector: None,
        });
    }
    let rhs = moment_rows(k, map, 1, |p| {
        let x = map.to_physical(p);
        vec![v(x[0], x[1])]
    })?
    .column(0);
    let coeffs = Lu::factor(&system)?.solve_vec(&rhs)?;
    Ok(FortinProjection {
        k,
        coeffs,
        map: *map,
        basis,
    })
}

/// One line of the degree sweep.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepEntry {
    pub k_q: usize,
    pub k_v: usize,
    pub rows: usize,
    pub cols: usize,
    pub rank: usize,
    pub smallest_singular_value: f64,
}

impl SweepEntry {
    pub fn deficiency(&self) -> usize {
        self.cols - self.rank
    }
}

/// Lemma-system verdict for one `k`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LemmaVerdict {
    pub k: usize,
    pub size: usize,
    pub singular_value_ratio: f64,
    pub nonsingular: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiagnosticsReport {
    pub sweep: Vec<SweepEntry>,
    pub lemma: Vec<LemmaVerdict>,
}

/// Ranks of the single-element flux moment matrices over a degree grid
/// plus lemma-system verdicts for `k = 1..=5`.
pub fn run_diagnostics(kq_max: usize, kv_max: usize) -> Result<DiagnosticsReport> {
    if kq_max > 6 || kv_max > 6 {
        return Err(DpgError::InvalidParameter(
            "degree bounds must not exceed 6".into(),
        ));
    }
    let mut sweep = Vec::new();
    for k_q in 0..=kq_max {
        for k_v in 0..=kv_max {
            let m = flux_test_moment_matrix(k_q, k_v);
            let sv = m.singular_values();
            let cols = m.matrix.cols();
            // a wide matrix has at least cols − rows zero singular values
            let smallest = if m.matrix.rows() < cols {
                0.0
            } else {
                *sv.last().unwrap_or(&0.0)
            };
            sweep.push(SweepEntry {
                k_q,
                k_v,
                rows: m.matrix.rows(),
                cols,
                rank: m.rank(),
                smallest_singular_value: smallest,
            });
        }
    }
    let lemma = (1..=5)
        .map(|k| {
            let s = lemma_system(k)?;
            Ok(LemmaVerdict {
                k,
                size: s.matrix.rows(),
                singular_value_ratio: s.singular_value_ratio(),
                nonsingular: s.is_nonsingular(),
            })
        })
        .collect::<Result<_>>()?;
    Ok(DiagnosticsReport { sweep, lemma })
}

impl DiagnosticsReport {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# single-element flux/test moment matrices");
        let _ = writeln!(
            out,
            "k_q,k_v,rows,cols,rank,deficiency,smallest_singular_value"
        );
        for e in &self.sweep {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{:.6e}",
                e.k_q,
                e.k_v,
                e.rows,
                e.cols,
                e.rank,
                e.deficiency(),
                e.smallest_singular_value
            );
        }
        let _ = writeln!(out, "# square edge/interior moment systems of P_k");
        let _ = writeln!(out, "k,size,sigma_min_over_sigma_max,verdict");
        for v in &self.lemma {
            let _ = writeln!(
                out,
                "{},{},{:.6e},{}",
                v.k,
                v.size,
                v.singular_value_ratio,
                if v.nonsingular {
                    "nonsingular"
                } else {
                    "singular"
                }
            );
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::det;

    fn printed_example() -> DenseMatrix {
        DenseMatrix::from_rows(&[
            [1.0, 1.0 / 2.0, 1.0, 1.0 / 2.0, 1.0, 1.0 / 2.0],
            [1.0 / 2.0, 1.0 / 3.0, 0.0, 0.0, 1.0 / 2.0, 1.0 / 3.0],
            [0.0, 0.0, 1.0 / 2.0, 1.0 / 3.0, 1.0 / 2.0, 1.0 / 6.0],
            [1.0 / 3.0, 1.0 / 4.0, 0.0, 0.0, 1.0 / 3.0, 1.0 / 4.0],
            [0.0, 0.0, 0.0, 0.0, 1.0 / 6.0, 1.0 / 12.0],
            [0.0, 0.0, 1.0 / 3.0, 1.0 / 4.0, 1.0 / 3.0, 1.0 / 12.0],
        ])
        .unwrap()
    }

    #[test]
    fn example_matrix_matches_printed_entries() {
        let m = example_matrix();
        let diff = m.matrix.sub(&printed_example()).unwrap().max_abs();
        assert!(diff < 1e-15, "{:?}", m.matrix);
        assert!((m.matrix[(0, 1)] - 0.5).abs() < 1e-15);
        assert!((m.matrix[(4, 4)] - 1.0 / 6.0).abs() < 1e-15);
        assert!(det(&m.matrix).unwrap().abs() <= 1e-14);
        assert_eq!(m.rank(), 5);
    }

    #[test]
    fn flux_moment_ranks() {
        let m = flux_test_moment_matrix(1, 2);
        assert_eq!((m.matrix.rows(), m.matrix.cols(), m.rank()), (6, 6, 5));
        assert_eq!(flux_test_moment_matrix(0, 1).rank(), 3);
        assert_eq!(flux_test_moment_matrix(2, 3).rank(), 9);
        assert!(flux_test_moment_matrix(0, 2).is_injective());
    }

    #[test]
    fn lemma_system_shapes() {
        for k in 1..=6 {
            let s = lemma_system(k).unwrap();
            assert_eq!(s.matrix.rows(), dim_p(k));
            assert_eq!(s.matrix.cols(), dim_p(k));
        }
        assert!(lemma_system(1).unwrap().is_nonsingular());
        assert!(!lemma_system(2).unwrap().is_nonsingular());
        assert!(lemma_system(3).unwrap().is_nonsingular());
        assert!(lemma_system(5).unwrap().is_nonsingular());
    }

    #[test]
    fn projector_reproduces_polynomials() {
        let map = triangle_map([[0.2, 0.1], [0.9, 0.3], [0.4, 0.8]]);
        for k in [1, 3, 5] {
            let p = move |x: f64, y: f64| {
                let mut s = 0.0;
                for a in 0..=k {
                    for b in 0..=k - a {
                        s += ((a * 3 + b + 1) as f64).sin() * x.powi(a as i32) * y.powi(b as i32);
                    }
                }
                s
            };
            let proj = fortin_projector(k, &map, p).unwrap();
            for xi in [[0.1, 0.1], [0.3, 0.5], [0.7, 0.2]] {
                let x = map.to_physical(xi);
                assert!((proj.value(x) - p(x[0], x[1])).abs() < 1e-12, "k={k}");
            }
        }
    }

    #[test]
    fn even_degree_two_projector_is_singular() {
        let err = fortin_projector(2, &reference_map(), |x, _| x).unwrap_err();
        assert!(err.is_singular());
    }

    #[test]
    fn diagnostics_report() {
        let r = run_diagnostics(2, 3).unwrap();
        assert_eq!(r.sweep.len(), 12);
        let at = |kq, kv| r.sweep.iter().find(|e| e.k_q == kq && e.k_v == kv).unwrap();
        assert_eq!(at(1, 2).deficiency(), 1);
        assert_eq!(at(0, 1).deficiency(), 0);
        assert_eq!(at(2, 3).deficiency(), 0);
        assert_eq!(r.lemma.len(), 5);
        let text = r.to_text();
        assert!(text.contains("1,2,6,6,5,1,"));
        assert!(run_diagnostics(7, 1).is_err());
    }
}
