//! Structured triangular background mesh and its P1 element data.
//!
//! The mesh is a fixed uniform grid over an axis-aligned box; every geometry
//! parameter value reuses it unchanged. Each grid cell is split along its
//! bottom-left to top-right diagonal, nodes are numbered row-major from the
//! bottom-left corner, so node and element ids are stable across runs.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

#[allow(unused_imports)]
use num_traits::Float;

use crate::linalg::{CsrMatrix, Triplets};
use crate::math::Vec2;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        Rect { x0, x1, y0, y1 }
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center(&self) -> Vec2 {
        Vec2::new(0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1))
    }

    pub fn contains(&self, p: Vec2) -> bool {
        p.x >= self.x0 && p.x <= self.x1 && p.y >= self.y0 && p.y <= self.y1
    }
}

/// Linear triangle with precomputed constant basis gradients.
#[derive(Clone, Debug)]
pub struct P1Element {
    pub nodes: [usize; 3],
    pub grads: [Vec2; 3],
    pub area: f64,
}

impl P1Element {
    pub fn from_vertices(nodes: [usize; 3], p: [Vec2; 3]) -> Self {
        let twice_area = (p[1] - p[0]).cross(p[2] - p[0]);
        debug_assert!(twice_area > 0.0, "element nodes must be counterclockwise");
        let inv = 1.0 / twice_area;
        // grad of barycentric i: rotated opposite edge over twice the area
        let grads = [
            Vec2::new(p[1].y - p[2].y, p[2].x - p[1].x) * inv,
            Vec2::new(p[2].y - p[0].y, p[0].x - p[2].x) * inv,
            Vec2::new(p[0].y - p[1].y, p[1].x - p[0].x) * inv,
        ];
        P1Element {
            nodes,
            grads,
            area: 0.5 * twice_area,
        }
    }
}

/// K_ij = area * (grad_i . grad_j); symmetric, rows sum to zero.
pub fn element_stiffness(e: &P1Element) -> [[f64; 3]; 3] {
    let mut k = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            k[i][j] = e.area * e.grads[i].dot(e.grads[j]);
        }
    }
    k
}

/// Exact P1 mass matrix: (area/12) * (1 + delta_ij); entries sum to the area.
pub fn element_mass(e: &P1Element) -> [[f64; 3]; 3] {
    let off = e.area / 12.0;
    let diag = e.area / 6.0;
    let mut m = [[off; 3]; 3];
    for i in 0..3 {
        m[i][i] = diag;
    }
    m
}

/// Mesh edge with its one or two owner elements, in element visit order.
#[derive(Clone, Copy, Debug)]
pub struct MeshEdge {
    pub nodes: (usize, usize),
    pub owners: (usize, Option<usize>),
}

#[derive(Clone, Debug)]
pub struct BackgroundMesh {
    pub bounds: Rect,
    /// Requested mesh size; the realized cell sizes `dx`, `dy` are at most this.
    pub h: f64,
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub dy: f64,
    pub nodes: Vec<Vec2>,
    pub elements: Vec<P1Element>,
    pub edges: Vec<MeshEdge>,
    pub outer_boundary_nodes: Vec<usize>,
    pub node_is_outer: Vec<bool>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum MeshError {
    DegenerateBox,
    InvalidMeshSize { h: f64 },
}

impl fmt::Display for MeshError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MeshError::DegenerateBox => write!(f, "background box must have positive extent"),
            MeshError::InvalidMeshSize { h } => {
                write!(f, "mesh size must be positive and smaller than the box: got {h}")
            }
        }
    }
}

impl core::error::Error for MeshError {}

impl BackgroundMesh {
    /// Build the structured grid: ceil(extent / h) cells per direction, each
    /// cell split into two counterclockwise triangles.
    pub fn build_structured(bounds: Rect, h: f64) -> Result<Self, MeshError> {
        if !(bounds.width() > 0.0 && bounds.height() > 0.0) {
            return Err(MeshError::DegenerateBox);
        }
        if !(h > 0.0) || h > bounds.width() || h > bounds.height() {
            return Err(MeshError::InvalidMeshSize { h });
        }
        let nx = (bounds.width() / h).ceil() as usize;
        let ny = (bounds.height() / h).ceil() as usize;
        let dx = bounds.width() / nx as f64;
        let dy = bounds.height() / ny as f64;

        let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1));
        for j in 0..=ny {
            for i in 0..=nx {
                // Endpoints exact, interior points interpolated.
                let x = if i == nx { bounds.x1 } else { bounds.x0 + i as f64 * dx };
                let y = if j == ny { bounds.y1 } else { bounds.y0 + j as f64 * dy };
                nodes.push(Vec2::new(x, y));
            }
        }

        let node_id = |i: usize, j: usize| j * (nx + 1) + i;
        let mut elements = Vec::with_capacity(2 * nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let a = node_id(i, j);
                let b = node_id(i + 1, j);
                let c = node_id(i + 1, j + 1);
                let d = node_id(i, j + 1);
                // Diagonal from the bottom-left to the top-right corner.
                elements.push(P1Element::from_vertices(
                    [a, b, c],
                    [nodes[a], nodes[b], nodes[c]],
                ));
                elements.push(P1Element::from_vertices(
                    [a, c, d],
                    [nodes[a], nodes[c], nodes[d]],
                ));
            }
        }

        let mut edge_ids: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut edges: Vec<MeshEdge> = Vec::with_capacity(3 * nx * ny + nx + ny);
        for (ei, elem) in elements.iter().enumerate() {
            for k in 0..3 {
                let a = elem.nodes[k];
                let b = elem.nodes[(k + 1) % 3];
                let key = (a.min(b), a.max(b));
                match edge_ids.get(&key) {
                    Some(&id) => {
                        debug_assert!(edges[id].owners.1.is_none());
                        edges[id].owners.1 = Some(ei);
                    }
                    None => {
                        edge_ids.insert(key, edges.len());
                        edges.push(MeshEdge {
                            nodes: key,
                            owners: (ei, None),
                        });
                    }
                }
            }
        }

        let mut node_is_outer = vec![false; nodes.len()];
        let mut outer_boundary_nodes = Vec::new();
        for j in 0..=ny {
            for i in 0..=nx {
                if i == 0 || i == nx || j == 0 || j == ny {
                    node_is_outer[node_id(i, j)] = true;
                    outer_boundary_nodes.push(node_id(i, j));
                }
            }
        }

        Ok(BackgroundMesh {
            bounds,
            h,
            nx,
            ny,
            dx,
            dy,
            nodes,
            elements,
            edges,
            outer_boundary_nodes,
            node_is_outer,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn centroid(&self, element: usize) -> Vec2 {
        let e = &self.elements[element];
        let p = [
            self.nodes[e.nodes[0]],
            self.nodes[e.nodes[1]],
            self.nodes[e.nodes[2]],
        ];
        (p[0] + p[1] + p[2]) * (1.0 / 3.0)
    }

    /// Global L2 mass matrix over the whole box. Parameter independent, so
    /// it serves as the single inner product weight for all snapshots.
    pub fn mass_matrix(&self) -> CsrMatrix {
        let n = self.n_nodes();
        let mut t = Triplets::with_capacity(n, n, 9 * self.elements.len());
        for e in &self.elements {
            let m = element_mass(e);
            for i in 0..3 {
                for j in 0..3 {
                    t.push(e.nodes[i], e.nodes[j], m[i][j]);
                }
            }
        }
        t.into_csr()
    }
}
