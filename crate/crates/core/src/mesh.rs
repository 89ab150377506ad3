//! Triangulations of the unit square and their edge topology.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{DpgError, Result};
use crate::reftri::LOCAL_EDGES;

/// An edge with its global orientation `v_lo → v_hi`.
///
/// `left` is the incident element whose outward normal agrees with the
/// global edge normal (the tangent `v_hi − v_lo` rotated by −90°); on a
/// boundary edge it is the single incident element.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Edge {
    pub v_lo: usize,
    pub v_hi: usize,
    pub left: usize,
    pub right: Option<usize>,
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.right.is_none()
    }
}

#[derive(Clone, Debug)]
pub struct Mesh {
    pub vertices: Vec<[f64; 2]>,
    /// Counterclockwise vertex triples.
    pub triangles: Vec<[usize; 3]>,
    pub edges: Vec<Edge>,
    /// `elem_edges[e][i]` is the global edge opposite local vertex `i`.
    pub elem_edges: Vec<[usize; 3]>,
    pub boundary_vertex: Vec<bool>,
    /// Subdivision count of the structured family (0 for imported meshes).
    pub n: usize,
}

/// Affine pullback `x = v0 + J ξ` of one element.
#[derive(Clone, Copy, Debug)]
pub struct AffineMap {
    pub jacobian: [[f64; 2]; 2],
    /// `J⁻ᵀ`, mapping reference gradients to physical gradients.
    pub inverse_transpose: [[f64; 2]; 2],
    pub det: f64,
    pub vertices: [[f64; 2]; 3],
}

impl AffineMap {
    pub fn to_physical(&self, xi: [f64; 2]) -> [f64; 2] {
        let [o, _, _] = self.vertices;
        let j = &self.jacobian;
        [
            o[0] + j[0][0] * xi[0] + j[0][1] * xi[1],
            o[1] + j[1][0] * xi[0] + j[1][1] * xi[1],
        ]
    }

    pub fn to_reference(&self, x: [f64; 2]) -> [f64; 2] {
        // J⁻¹ = (J⁻ᵀ)ᵀ
        let it = &self.inverse_transpose;
        let d = [x[0] - self.vertices[0][0], x[1] - self.vertices[0][1]];
        [
            it[0][0] * d[0] + it[1][0] * d[1],
            it[0][1] * d[0] + it[1][1] * d[1],
        ]
    }

    /// Physical gradient from a reference gradient.
    #[inline]
    pub fn push_gradient(&self, g: [f64; 2]) -> [f64; 2] {
        let it = &self.inverse_transpose;
        [
            it[0][0] * g[0] + it[0][1] * g[1],
            it[1][0] * g[0] + it[1][1] * g[1],
        ]
    }

    pub fn area(&self) -> f64 {
        0.5 * self.det.abs()
    }
}

/// One side of an edge as seen from an element.
#[derive(Clone, Copy, Debug)]
pub struct TraceFrame {
    pub edge: usize,
    /// +1 when the element's outward normal matches the global edge normal
    /// (always +1 on the boundary), −1 otherwise.
    pub sign: f64,
    pub length: f64,
    /// Physical endpoints in global orientation: `t = 0` at `v_lo`.
    pub start: [f64; 2],
    pub end: [f64; 2],
}

impl TraceFrame {
    pub fn point(&self, t: f64) -> [f64; 2] {
        [
            self.start[0] + t * (self.end[0] - self.start[0]),
            self.start[1] + t * (self.end[1] - self.start[1]),
        ]
    }
}

impl Mesh {
    /// Builds edge topology for a list of counterclockwise triangles.
    pub fn from_triangles(vertices: Vec<[f64; 2]>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        // (element, agrees-with-global-normal) for every side of every edge
        let mut edge_index: HashMap<(usize, usize), usize> = HashMap::new();
        let mut keys: Vec<(usize, usize)> = Vec::new();
        let mut sides: Vec<Vec<(usize, bool)>> = Vec::new();
        let mut elem_edges = Vec::with_capacity(triangles.len());
        for (e, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= vertices.len()) {
                return Err(DpgError::InvalidParameter(format!(
                    "triangle {e} references a missing vertex"
                )));
            }
            let mut local = [0usize; 3];
            for (i, [a, b]) in LOCAL_EDGES.iter().enumerate() {
                let (va, vb) = (tri[*a], tri[*b]);
                let key = (va.min(vb), va.max(vb));
                let id = *edge_index.entry(key).or_insert_with(|| {
                    keys.push(key);
                    sides.push(Vec::with_capacity(2));
                    keys.len() - 1
                });
                // ccw traversal va → vb agrees with the global normal iff va < vb
                sides[id].push((e, va < vb));
                local[i] = id;
            }
            elem_edges.push(local);
        }
        let mut edges = Vec::with_capacity(keys.len());
        for (&(v_lo, v_hi), s) in keys.iter().zip(&sides) {
            let edge = match s.as_slice() {
                [(e, _)] => Edge {
                    v_lo,
                    v_hi,
                    left: *e,
                    right: None,
                },
                [(e0, true), (e1, false)] | [(e1, false), (e0, true)] => Edge {
                    v_lo,
                    v_hi,
                    left: *e0,
                    right: Some(*e1),
                },
                _ => {
                    return Err(DpgError::InvalidParameter(format!(
                        "edge ({v_lo}, {v_hi}) is not shared by two consistently oriented triangles"
                    )))
                }
            };
            edges.push(edge);
        }
        let mut boundary_vertex = vec![false; vertices.len()];
        for edge in edges.iter().filter(|e| e.is_boundary()) {
            boundary_vertex[edge.v_lo] = true;
            boundary_vertex[edge.v_hi] = true;
        }
        let mesh = Mesh {
            vertices,
            triangles,
            edges,
            elem_edges,
            boundary_vertex,
            n: 0,
        };
        for e in 0..mesh.num_elements() {
            let map = mesh.affine_map(e)?;
            if map.det < 0.0 {
                return Err(DpgError::InvalidParameter(format!(
                    "triangle {e} is clockwise"
                )));
            }
        }
        Ok(mesh)
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_elements(&self) -> usize {
        self.triangles.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Mesh size `√2 / n` of the structured family.
    pub fn h(&self) -> f64 {
        if self.n == 0 {
            f64::NAN
        } else {
            std::f64::consts::SQRT_2 / self.n as f64
        }
    }

    pub fn affine_map(&self, elem: usize) -> Result<AffineMap> {
        let tri = self
            .triangles
            .get(elem)
            .ok_or_else(|| DpgError::InvalidParameter(format!("element {elem} out of range")))?;
        let [p0, p1, p2] = tri.map(|v| self.vertices[v]);
        let j = [
            [p1[0] - p0[0], p2[0] - p0[0]],
            [p1[1] - p0[1], p2[1] - p0[1]],
        ];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        let scale = (j[0][0].abs() + j[0][1].abs() + j[1][0].abs() + j[1][1].abs()).powi(2);
        if det.abs() <= 1e-14 * scale || !det.is_finite() {
            return Err(DpgError::DegenerateElement { elem, det });
        }
        let inverse_transpose = [
            [j[1][1] / det, -j[1][0] / det],
            [-j[0][1] / det, j[0][0] / det],
        ];
        Ok(AffineMap {
            jacobian: j,
            inverse_transpose,
            det,
            vertices: [p0, p1, p2],
        })
    }

    pub fn edge_trace_frame(&self, elem: usize, local_edge: usize) -> TraceFrame {
        let id = self.elem_edges[elem][local_edge];
        let edge = &self.edges[id];
        let sign = if edge.left == elem { 1.0 } else { -1.0 };
        let start = self.vertices[edge.v_lo];
        let end = self.vertices[edge.v_hi];
        let length = ((end[0] - start[0]).powi(2) + (end[1] - start[1]).powi(2)).sqrt();
        TraceFrame {
            edge: id,
            sign,
            length,
            start,
            end,
        }
    }

    /// Plain-text dump: one `v x y` line per vertex, one `t i j k` per triangle.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for v in &self.vertices {
            let _ = writeln!(out, "v {} {}", v[0], v[1]);
        }
        for t in &self.triangles {
            let _ = writeln!(out, "t {} {} {}", t[0], t[1], t[2]);
        }
        out
    }
}

/// `n × n` squares of the unit square, each cut along its positive-slope
/// diagonal.
pub fn unit_square_mesh(n: usize) -> Result<Mesh> {
    if n == 0 {
        return Err(DpgError::InvalidParameter(
            "subdivision count must be at least 1".into(),
        ));
    }
    let h = 1.0 / n as f64;
    let vid = |i: usize, j: usize| j * (n + 1) + i;
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            vertices.push([i as f64 * h, j as f64 * h]);
        }
    }
    let mut triangles = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (sw, se, nw, ne) = (vid(i, j), vid(i + 1, j), vid(i, j + 1), vid(i + 1, j + 1));
            triangles.push([sw, se, ne]);
            triangles.push([sw, ne, nw]);
        }
    }
    let mut mesh = Mesh::from_triangles(vertices, triangles)?;
    mesh.n = n;
    Ok(mesh)
}
