//! Reference-triangle toolkit: quadrature, polynomial bases on the
//! triangle `{(x, y) : x, y ≥ 0, x + y ≤ 1}` and Legendre bases on edges.
//!
//! Reference vertices are `a0 = (0,0)`, `a1 = (1,0)`, `a2 = (0,1)`. Local
//! edge `i` is the edge opposite vertex `i`, traversed counterclockwise:
//! edge 0 runs `a1 → a2`, edge 1 runs `a2 → a0`, edge 2 runs `a0 → a1`.

use std::f64::consts::PI;

use crate::dense::{lu_solve, DenseMatrix, Lu};
use crate::error::{DpgError, Result};

/// Highest polynomial degree a [`RefQuadRule`] can be built for.
pub const MAX_QUAD_DEGREE: usize = 30;

pub const REF_VERTICES: [[f64; 2]; 3] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];

/// Local vertex pairs of the three reference edges, counterclockwise.
pub const LOCAL_EDGES: [[usize; 2]; 3] = [[1, 2], [2, 0], [0, 1]];

/// Number of polynomials of total degree ≤ `k` in two variables.
pub const fn dim_p(k: usize) -> usize {
    (k + 1) * (k + 2) / 2
}

/// Gauss–Legendre rule on `[0, 1]`.
#[derive(Clone, Debug)]
pub struct GaussLine {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLine {
    /// `m`-point rule, exact for degree `2m − 1`.
    pub fn new(m: usize) -> Self {
        assert!(m >= 1, "Gauss rule needs at least one point");
        let mut points = vec![0.0; m];
        let mut weights = vec![0.0; m];
        for i in 0..m.div_ceil(2) {
            // Chebyshev-like initial guess, then Newton on P_m.
            let mut x = (PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(m, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(m, x);
            dp = if d.is_finite() { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            // map [-1, 1] → [0, 1]
            points[i] = 0.5 * (1.0 - x);
            points[m - 1 - i] = 0.5 * (1.0 + x);
            weights[i] = 0.5 * w;
            weights[m - 1 - i] = 0.5 * w;
        }
        GaussLine { points, weights }
    }

    /// Smallest rule exact for polynomials of the given degree.
    pub fn for_degree(degree: usize) -> Self {
        Self::new(degree / 2 + 1)
    }
}

/// Legendre polynomial `P_m(x)` on `[-1, 1]` and its derivative.
fn legendre_with_derivative(m: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if m == 0 {
        return (1.0, 0.0);
    }
    for j in 2..=m {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    let mf = m as f64;
    let d = mf * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Quadrature rule on the reference triangle; weights sum to its area 1/2.
#[derive(Clone, Debug)]
pub struct RefQuadRule {
    /// Reference coordinates `(x, y)`, which coincide with the barycentric
    /// coordinates attached to `a1` and `a2`.
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    pub exactness_degree: usize,
}

impl RefQuadRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn integrate<F: Fn(f64, f64) -> f64>(&self, f: F) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(p, w)| w * f(p[0], p[1]))
            .sum()
    }
}

/// Collapsed (Duffy) Gauss–Legendre product rule exact through `degree`.
pub fn quad_rule(degree: usize) -> Result<RefQuadRule> {
    if degree > MAX_QUAD_DEGREE {
        return Err(DpgError::UnsupportedDegree {
            degree,
            max: MAX_QUAD_DEGREE,
        });
    }
    // x = ξ(1 − η), y = η; the Jacobian (1 − η) raises the η-degree by one.
    let line_xi = GaussLine::for_degree(degree);
    let line_eta = GaussLine::for_degree(degree + 1);
    let mut points = Vec::with_capacity(line_xi.points.len() * line_eta.points.len());
    let mut weights = Vec::with_capacity(points.capacity());
    for (&eta, &weta) in line_eta.points.iter().zip(&line_eta.weights) {
        for (&xi, &wxi) in line_xi.points.iter().zip(&line_xi.weights) {
            points.push([xi * (1.0 - eta), eta]);
            weights.push(wxi * weta * (1.0 - eta));
        }
    }
    Ok(RefQuadRule {
        points,
        weights,
        exactness_degree: degree,
    })
}

/// Legendre polynomials mapped to `[0, 1]`: row `j` holds `L_j(t)` for each
/// parameter, `L_j(t) = P_j(2t − 1)`.
#[derive(Clone, Debug)]
pub struct EdgeBasis {
    pub degree: usize,
}

impl EdgeBasis {
    pub fn new(degree: usize) -> Self {
        EdgeBasis { degree }
    }

    pub fn dim(&self) -> usize {
        self.degree + 1
    }

    /// Values `L_0(t), …, L_degree(t)` at a single parameter.
    pub fn eval_at(&self, t: f64) -> Vec<f64> {
        shifted_legendre(self.degree, t)
    }

    pub fn eval(&self, params: &[f64]) -> DenseMatrix {
        edge_basis_eval(self.degree, params)
    }
}

/// `L_j(t)` for `j = 0..=degree` at one point.
fn shifted_legendre(degree: usize, t: f64) -> Vec<f64> {
    let x = 2.0 * t - 1.0;
    let mut out = Vec::with_capacity(degree + 1);
    out.push(1.0);
    if degree >= 1 {
        out.push(x);
    }
    for j in 2..=degree {
        let jf = j as f64;
        let next = ((2.0 * jf - 1.0) * x * out[j - 1] - (jf - 1.0) * out[j - 2]) / jf;
        out.push(next);
    }
    out
}

/// `L_j(t)` and `L_j'(t)` (derivative with respect to `t`).
fn shifted_legendre_with_derivative(degree: usize, t: f64) -> (Vec<f64>, Vec<f64>) {
    let vals = shifted_legendre(degree, t);
    let x = 2.0 * t - 1.0;
    let mut ders = vec![0.0; degree + 1];
    // P_j' = j P_{j-1} + x P_{j-1}', and dt contributes a factor 2.
    let mut dp = vec![0.0; degree + 1];
    for j in 1..=degree {
        dp[j] = j as f64 * vals[j - 1] + x * dp[j - 1];
        ders[j] = 2.0 * dp[j];
    }
    (vals, ders)
}

/// Edge Legendre table: entry `(j, i)` is `L_j(params[i])`.
pub fn edge_basis_eval(degree: usize, params: &[f64]) -> DenseMatrix {
    let mut m = DenseMatrix::zeros(degree + 1, params.len());
    for (i, &t) in params.iter().enumerate() {
        for (j, v) in shifted_legendre(degree, t).into_iter().enumerate() {
            m[(j, i)] = v;
        }
    }
    m
}

/// Family of a polynomial basis on the reference triangle.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BasisKind {
    /// `x^a y^b`, grouped by total degree: `1, x, y, x², xy, y², …`.
    Monomial,
    /// L²-orthonormal, hierarchic by total degree.
    Orthonormal,
    /// Nodal Lagrange basis on equispaced nodes.
    Lagrange,
}

/// Values and reference gradients of a basis at a set of points.
#[derive(Clone, Debug)]
pub struct BasisTable {
    /// `values[(i, j)] = φ_j(p_i)`.
    pub values: DenseMatrix,
    /// `grad_x[(i, j)] = ∂φ_j/∂x (p_i)`.
    pub grad_x: DenseMatrix,
    pub grad_y: DenseMatrix,
}

/// A basis of `P_k` on the reference triangle.
#[derive(Clone, Debug)]
pub struct TriBasis {
    kind: BasisKind,
    degree: usize,
    /// Orthonormal: coefficients of each basis function over the tensor
    /// Legendre products (lower triangular). Lagrange: coefficients over
    /// the orthonormal basis.
    coeffs: Option<DenseMatrix>,
    /// Present for `Lagrange`.
    modal: Option<Box<TriBasis>>,
}

impl TriBasis {
    pub fn new(kind: BasisKind, degree: usize) -> Result<Self> {
        match kind {
            BasisKind::Monomial => Ok(TriBasis {
                kind,
                degree,
                coeffs: None,
                modal: None,
            }),
            BasisKind::Orthonormal => Self::orthonormal(degree),
            BasisKind::Lagrange => Self::lagrange(degree),
        }
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn dim(&self) -> usize {
        dim_p(self.degree)
    }

    /// Exponents `(a, b)` in the standard total-degree ordering.
    pub fn exponents(degree: usize) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(dim_p(degree));
        for d in 0..=degree {
            for b in 0..=d {
                out.push((d - b, b));
            }
        }
        out
    }

    fn orthonormal(degree: usize) -> Result<Self> {
        // Gram–Schmidt over the products L_a(x) L_b(y), a + b ≤ k, which are
        // far better conditioned than monomials and keep the degree nesting.
        let rule = quad_rule(2 * degree)?;
        let n = dim_p(degree);
        let raw: Vec<Vec<f64>> = rule
            .points
            .iter()
            .map(|p| legendre_products(degree, p[0], p[1]).0)
            .collect();
        let ip = |u: &[f64], v: &[f64]| -> f64 {
            raw.iter()
                .zip(&rule.weights)
                .map(|(row, w)| {
                    let a: f64 = row.iter().zip(u).map(|(r, c)| r * c).sum();
                    let b: f64 = row.iter().zip(v).map(|(r, c)| r * c).sum();
                    w * a * b
                })
                .sum()
        };
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(n);
        for j in 0..n {
            let mut v = vec![0.0; n];
            v[j] = 1.0;
            // two passes of modified Gram–Schmidt
            for _ in 0..2 {
                for q in &basis {
                    let c = ip(&v, q);
                    v.iter_mut().zip(q).for_each(|(vi, qi)| *vi -= c * qi);
                }
            }
            let norm = ip(&v, &v).sqrt();
            v.iter_mut().for_each(|vi| *vi /= norm);
            basis.push(v);
        }
        let mut coeffs = DenseMatrix::zeros(n, n);
        for (j, v) in basis.iter().enumerate() {
            for (m, &c) in v.iter().enumerate() {
                coeffs[(j, m)] = c;
            }
        }
        Ok(TriBasis {
            kind: BasisKind::Orthonormal,
            degree,
            coeffs: Some(coeffs),
            modal: None,
        })
    }

    fn lagrange(degree: usize) -> Result<Self> {
        let modal = Self::orthonormal(degree)?;
        let nodes = lagrange_nodes(degree);
        let n = nodes.len();
        // V[(i, m)] = ψ_m(node_i); φ_j = Σ_m C[(j, m)] ψ_m with V Cᵀ = I.
        let mut v = DenseMatrix::zeros(n, n);
        for (i, p) in nodes.iter().enumerate() {
            let (vals, _, _) = modal.eval_point(p[0], p[1]);
            v.row_mut(i).copy_from_slice(&vals);
        }
        let lu = Lu::factor(&v)?;
        let mut coeffs = DenseMatrix::zeros(n, n);
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            let c = lu.solve_vec(&e)?;
            coeffs.row_mut(j).copy_from_slice(&c);
        }
        Ok(TriBasis {
            kind: BasisKind::Lagrange,
            degree,
            coeffs: Some(coeffs),
            modal: Some(Box::new(modal)),
        })
    }

    /// Values and gradients of all basis functions at one point.
    pub fn eval_point(&self, x: f64, y: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        match self.kind {
            BasisKind::Monomial => monomials(self.degree, x, y),
            BasisKind::Orthonormal => {
                let (v, gx, gy) = legendre_products(self.degree, x, y);
                let c = self.coeffs.as_ref().expect("orthonormal coefficients");
                (c.matvec(&v), c.matvec(&gx), c.matvec(&gy))
            }
            BasisKind::Lagrange => {
                let (v, gx, gy) = self.modal.as_ref().expect("modal basis").eval_point(x, y);
                let c = self.coeffs.as_ref().expect("nodal coefficients");
                (c.matvec(&v), c.matvec(&gx), c.matvec(&gy))
            }
        }
    }

    /// Values only.
    pub fn values_at(&self, x: f64, y: f64) -> Vec<f64> {
        self.eval_point(x, y).0
    }

    /// Tabulates values and gradients at the given reference points.
    pub fn eval(&self, points: &[[f64; 2]]) -> BasisTable {
        let n = self.dim();
        let mut values = DenseMatrix::zeros(points.len(), n);
        let mut grad_x = DenseMatrix::zeros(points.len(), n);
        let mut grad_y = DenseMatrix::zeros(points.len(), n);
        for (i, p) in points.iter().enumerate() {
            let (v, gx, gy) = self.eval_point(p[0], p[1]);
            values.row_mut(i).copy_from_slice(&v);
            grad_x.row_mut(i).copy_from_slice(&gx);
            grad_y.row_mut(i).copy_from_slice(&gy);
        }
        BasisTable {
            values,
            grad_x,
            grad_y,
        }
    }

    /// Coefficients of the interpolant of `f` at the Lagrange nodes
    /// (Lagrange bases only).
    pub fn interpolate<F: Fn(f64, f64) -> f64>(&self, f: F) -> Option<Vec<f64>> {
        (self.kind == BasisKind::Lagrange).then(|| {
            lagrange_nodes(self.degree)
                .iter()
                .map(|p| f(p[0], p[1]))
                .collect()
        })
    }

    /// Expands a polynomial given by its values at `dim` unisolvent points
    /// into this basis.
    pub fn fit(&self, points: &[[f64; 2]], values: &[f64]) -> Result<Vec<f64>> {
        let table = self.eval(points);
        lu_solve(&table.values, values)
    }
}

/// Free function form of [`TriBasis::eval`].
pub fn tri_basis_eval(kind: BasisKind, degree: usize, points: &[[f64; 2]]) -> Result<BasisTable> {
    Ok(TriBasis::new(kind, degree)?.eval(points))
}

fn monomials(degree: usize, x: f64, y: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let pow = |base: f64, e: usize| if e == 0 { 1.0 } else { base.powi(e as i32) };
    let exps = TriBasis::exponents(degree);
    let mut v = Vec::with_capacity(exps.len());
    let mut gx = Vec::with_capacity(exps.len());
    let mut gy = Vec::with_capacity(exps.len());
    for (a, b) in exps {
        v.push(pow(x, a) * pow(y, b));
        gx.push(if a == 0 {
            0.0
        } else {
            a as f64 * pow(x, a - 1) * pow(y, b)
        });
        gy.push(if b == 0 {
            0.0
        } else {
            b as f64 * pow(x, a) * pow(y, b - 1)
        });
    }
    (v, gx, gy)
}

/// `L_a(x) L_b(y)` in the total-degree ordering, with gradients.
fn legendre_products(degree: usize, x: f64, y: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let (lx, dlx) = shifted_legendre_with_derivative(degree, x);
    let (ly, dly) = shifted_legendre_with_derivative(degree, y);
    let exps = TriBasis::exponents(degree);
    let mut v = Vec::with_capacity(exps.len());
    let mut gx = Vec::with_capacity(exps.len());
    let mut gy = Vec::with_capacity(exps.len());
    for (a, b) in exps {
        v.push(lx[a] * ly[b]);
        gx.push(dlx[a] * ly[b]);
        gy.push(lx[a] * dly[b]);
    }
    (v, gx, gy)
}

/// Equispaced Lagrange nodes: the three vertices, then `k − 1` nodes per
/// local edge in counterclockwise traversal order, then interior nodes.
pub fn lagrange_nodes(degree: usize) -> Vec<[f64; 2]> {
    if degree == 0 {
        return vec![[1.0 / 3.0, 1.0 / 3.0]];
    }
    let k = degree as f64;
    let mut nodes: Vec<[f64; 2]> = REF_VERTICES.to_vec();
    for [a, b] in LOCAL_EDGES {
        let (pa, pb) = (REF_VERTICES[a], REF_VERTICES[b]);
        for s in 1..degree {
            let t = s as f64 / k;
            nodes.push([pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1])]);
        }
    }
    for j in 1..degree {
        for i in 1..degree - j {
            nodes.push([i as f64 / k, j as f64 / k]);
        }
    }
    nodes
}

/// Number of Lagrange nodes strictly inside one edge.
pub const fn edge_interior_nodes(degree: usize) -> usize {
    degree.saturating_sub(1)
}

/// Number of Lagrange nodes strictly inside the triangle.
pub const fn cell_interior_nodes(degree: usize) -> usize {
    if degree < 3 {
        0
    } else {
        (degree - 1) * (degree - 2) / 2
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: usize) -> f64 {
        (1..=n).map(|i| i as f64).product()
    }

    /// ∫ x^a y^b over the reference triangle (Beta integral).
    fn monomial_moment(a: usize, b: usize) -> f64 {
        factorial(a) * factorial(b) / factorial(a + b + 2)
    }

    #[test]
    fn basic_integrals() {
        let rule = quad_rule(4).unwrap();
        assert!((rule.integrate(|_, _| 1.0) - 0.5).abs() < 1e-15);
        assert!((rule.integrate(|x, _| x) - 1.0 / 6.0).abs() < 1e-15);
        assert!((rule.integrate(|x, y| x * x * y * y) - 1.0 / 180.0).abs() < 1e-15);
    }

    #[test]
    fn x2y2_matches_iterated_beta_oracle() {
        // ∫₀¹ x² (1 − x)³ / 3 dx by a 1D Gauss rule.
        let line = GaussLine::new(10);
        let oracle: f64 = line
            .points
            .iter()
            .zip(&line.weights)
            .map(|(x, w)| w * x * x * (1.0 - x).powi(3) / 3.0)
            .sum();
        assert!((oracle - 1.0 / 180.0).abs() < 1e-15);
    }

    #[test]
    fn quadrature_exact_for_all_supported_degrees() {
        for d in 0..=20 {
            let rule = quad_rule(d).unwrap();
            let total: f64 = rule.weights.iter().sum();
            assert!((total - 0.5).abs() < 1e-14);
            for p in &rule.points {
                assert!(p[0] >= 0.0 && p[1] >= 0.0 && p[0] + p[1] <= 1.0 + 1e-15);
            }
            for a in 0..=d {
                for b in 0..=d - a {
                    let exact = monomial_moment(a, b);
                    let got = rule.integrate(|x, y| x.powi(a as i32) * y.powi(b as i32));
                    assert!(
                        ((got - exact) / exact).abs() <= 1e-13,
                        "degree {d}, x^{a} y^{b}: {got} vs {exact}"
                    );
                }
            }
        }
    }

    #[test]
    fn unsupported_degree() {
        assert!(matches!(
            quad_rule(31),
            Err(DpgError::UnsupportedDegree { .. })
        ));
    }

    #[test]
    fn degree_zero_bases() {
        for kind in [
            BasisKind::Monomial,
            BasisKind::Orthonormal,
            BasisKind::Lagrange,
        ] {
            let b = TriBasis::new(kind, 0).unwrap();
            let (v, gx, gy) = b.eval_point(0.2, 0.7);
            assert_eq!(v.len(), 1);
            assert!(gx[0].abs() < 1e-15 && gy[0].abs() < 1e-15);
            if kind != BasisKind::Orthonormal {
                assert!((v[0] - 1.0).abs() < 1e-14, "{kind:?}: {}", v[0]);
            }
        }
    }

    #[test]
    fn lagrange_partition_of_unity_and_nodality() {
        for k in 1..=6 {
            let b = TriBasis::new(BasisKind::Lagrange, k).unwrap();
            for p in [[0.1, 0.2], [0.33, 0.33], [0.0, 0.9], [0.6, 0.05]] {
                let (v, gx, gy) = b.eval_point(p[0], p[1]);
                assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                assert!(gx.iter().sum::<f64>().abs() < 1e-10);
                assert!(gy.iter().sum::<f64>().abs() < 1e-10);
            }
            for (i, p) in lagrange_nodes(k).iter().enumerate() {
                let v = b.values_at(p[0], p[1]);
                for (j, vj) in v.iter().enumerate() {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((vj - expect).abs() < 1e-11, "k={k} node {i} fn {j}: {vj}");
                }
            }
        }
    }

    #[test]
    fn monomial_x_has_unit_gradient() {
        let b = TriBasis::new(BasisKind::Monomial, 3).unwrap();
        for p in [[0.1, 0.1], [0.5, 0.25], [0.0, 1.0]] {
            let (_, gx, gy) = b.eval_point(p[0], p[1]);
            assert_eq!((gx[1], gy[1]), (1.0, 0.0));
        }
    }

    #[test]
    fn orthonormal_basis_is_orthonormal_and_hierarchic() {
        for k in 0..=6 {
            let b = TriBasis::new(BasisKind::Orthonormal, k).unwrap();
            let rule = quad_rule(2 * k).unwrap();
            let t = b.eval(&rule.points);
            let n = b.dim();
            for i in 0..n {
                for j in 0..n {
                    let ip: f64 = (0..rule.len())
                        .map(|q| rule.weights[q] * t.values[(q, i)] * t.values[(q, j)])
                        .sum();
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((ip - expect).abs() < 1e-12, "k={k} ({i},{j}): {ip}");
                }
            }
            // the first dim_p(l) functions are exactly degree ≤ l: their
            // span matches the monomials of degree ≤ l
            for l in 0..k {
                let lower = TriBasis::new(BasisKind::Orthonormal, l).unwrap();
                let pts: Vec<[f64; 2]> = lagrange_nodes(l.max(1))
                    .into_iter()
                    .take(dim_p(l))
                    .collect();
                if l == 0 {
                    continue;
                }
                for p in &pts {
                    let hi = b.values_at(p[0], p[1]);
                    let lo = lower.values_at(p[0], p[1]);
                    for j in 0..dim_p(l) {
                        assert!((hi[j] - lo[j]).abs() < 1e-11);
                    }
                }
            }
        }
    }

    #[test]
    fn spans_pk_vandermonde_nonsingular() {
        for k in 0..=6 {
            for kind in [
                BasisKind::Monomial,
                BasisKind::Orthonormal,
                BasisKind::Lagrange,
            ] {
                let b = TriBasis::new(kind, k).unwrap();
                let nodes = lagrange_nodes(k);
                let t = b.eval(&nodes);
                let rank = crate::dense::numerical_rank(&t.values, 1e-10);
                assert_eq!(rank, dim_p(k), "{kind:?} degree {k}");
            }
        }
    }

    #[test]
    fn gradients_match_central_differences() {
        let step = 1e-5;
        for kind in [
            BasisKind::Monomial,
            BasisKind::Orthonormal,
            BasisKind::Lagrange,
        ] {
            let b = TriBasis::new(kind, 5).unwrap();
            for p in [[0.2, 0.3], [0.45, 0.1], [0.1, 0.75]] {
                let (_, gx, gy) = b.eval_point(p[0], p[1]);
                let xp = b.values_at(p[0] + step, p[1]);
                let xm = b.values_at(p[0] - step, p[1]);
                let yp = b.values_at(p[0], p[1] + step);
                let ym = b.values_at(p[0], p[1] - step);
                for j in 0..b.dim() {
                    let fdx = (xp[j] - xm[j]) / (2.0 * step);
                    let fdy = (yp[j] - ym[j]) / (2.0 * step);
                    let scale = 1.0 + gx[j].abs() + gy[j].abs();
                    assert!((fdx - gx[j]).abs() < 1e-6 * scale, "{kind:?} fn {j}");
                    assert!((fdy - gy[j]).abs() < 1e-6 * scale, "{kind:?} fn {j}");
                }
            }
        }
    }

    #[test]
    fn legendre_edge_values() {
        let t = edge_basis_eval(3, &[0.0, 0.25, 0.5, 1.0]);
        for i in 0..4 {
            assert_eq!(t[(0, i)], 1.0);
        }
        assert!(t[(1, 2)].abs() < 1e-16);
        // ∫₀¹ L₁² = ∫ (2t − 1)² = 1/3
        let line = GaussLine::new(4);
        let l1sq: f64 = line
            .points
            .iter()
            .zip(&line.weights)
            .map(|(&s, w)| w * (2.0 * s - 1.0).powi(2))
            .sum();
        assert!((l1sq - 1.0 / 3.0).abs() < 1e-15);
        let tab = edge_basis_eval(1, &line.points);
        let from_basis: f64 = (0..line.points.len())
            .map(|q| line.weights[q] * tab[(1, q)].powi(2))
            .sum();
        assert!((from_basis - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn legendre_orthogonality_and_parity() {
        let deg = 8;
        let line = GaussLine::new(deg + 1);
        let tab = edge_basis_eval(deg, &line.points);
        for i in 0..=deg {
            for j in 0..=deg {
                let ip: f64 = (0..line.points.len())
                    .map(|q| line.weights[q] * tab[(i, q)] * tab[(j, q)])
                    .sum();
                let expect = if i == j {
                    1.0 / (2 * i + 1) as f64
                } else {
                    0.0
                };
                assert!((ip - expect).abs() <= 1e-13 * (1.0 / (2 * i + 1) as f64));
            }
        }
        let ends = edge_basis_eval(deg, &[0.0, 1.0]);
        for k in 0..=deg {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            assert!((ends[(k, 0)] - sign * ends[(k, 1)]).abs() < 1e-14);
        }
    }

    #[test]
    fn node_counts() {
        for k in 1..=6 {
            assert_eq!(
                3 + 3 * edge_interior_nodes(k) + cell_interior_nodes(k),
                dim_p(k)
            );
            assert_eq!(lagrange_nodes(k).len(), dim_p(k));
        }
    }
}
