//! Classification of the background mesh against a resolved hole: active
//! elements, ghost nodes and the surrogate boundary with per-edge data.
//!
//! An element is active iff none of its vertices lies inside the hole. The
//! surrogate boundary is the set of edges separating active from inactive
//! elements; each carries its active-side outward normal, the orthogonal
//! characteristic length and Gauss quadrature points with boundary frames.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

#[allow(unused_imports)]
use num_traits::Float;

use crate::geometry::{BoundaryFrame, Hole};
use crate::math::Vec2;
use crate::mesh::BackgroundMesh;

#[derive(Clone, Copy, Debug)]
pub struct EdgeQuadPoint {
    pub position: Vec2,
    pub weight: f64,
    pub frame: BoundaryFrame,
}

#[derive(Clone, Debug)]
pub struct SurrogateEdge {
    pub nodes: (usize, usize),
    /// Owning active element.
    pub owner: usize,
    /// Unit normal of the edge pointing away from the active element.
    pub normal: Vec2,
    pub length: f64,
    /// Characteristic element length orthogonal to the edge: the owner
    /// triangle altitude over it.
    pub h_perp: f64,
    pub quad: Vec<EdgeQuadPoint>,
}

#[derive(Clone, Debug)]
pub struct SurrogateMap {
    pub active_elements: Vec<usize>,
    pub element_is_active: Vec<bool>,
    pub ghost_nodes: Vec<usize>,
    pub node_is_ghost: Vec<bool>,
    pub edges: Vec<SurrogateEdge>,
    pub outer_dirichlet_nodes: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SurrogateError {
    /// The hole contains no mesh node: the mesh cannot represent it.
    UnresolvedGeometry,
    EmptyActiveSet,
    /// The minimal resolution assumption n . n_surrogate >= 0 failed.
    ResolutionViolated { edge: usize, n_dot_n: f64 },
    /// The hole comes closer than one element layer to the outer boundary.
    InsufficientClearance,
    InvalidQuadratureOrder { order: usize },
}

impl fmt::Display for SurrogateError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SurrogateError::UnresolvedGeometry => {
                write!(f, "unresolved geometry: the hole contains no mesh node at this mesh size")
            }
            SurrogateError::EmptyActiveSet => write!(f, "no active elements remain"),
            SurrogateError::ResolutionViolated { edge, n_dot_n } => write!(
                f,
                "minimal resolution assumption violated on surrogate edge {edge}: n . n_surr = {n_dot_n}"
            ),
            SurrogateError::InsufficientClearance => {
                write!(f, "hole must stay at least one element layer away from the outer boundary")
            }
            SurrogateError::InvalidQuadratureOrder { order } => {
                write!(f, "edge quadrature order must be 1, 2 or 3: got {order}")
            }
        }
    }
}

impl core::error::Error for SurrogateError {}

/// Gauss-Legendre nodes on [0, 1] with weights summing to one.
pub fn gauss_points(order: usize) -> Result<&'static [(f64, f64)], SurrogateError> {
    const P1: [(f64, f64); 1] = [(0.5, 1.0)];
    const P2: [(f64, f64); 2] = [
        (0.5 - 0.288_675_134_594_812_9, 0.5),
        (0.5 + 0.288_675_134_594_812_9, 0.5),
    ];
    const P3: [(f64, f64); 3] = [
        (0.5 - 0.387_298_334_620_741_7, 5.0 / 18.0),
        (0.5, 8.0 / 18.0),
        (0.5 + 0.387_298_334_620_741_7, 5.0 / 18.0),
    ];
    match order {
        1 => Ok(&P1),
        2 => Ok(&P2),
        3 => Ok(&P3),
        _ => Err(SurrogateError::InvalidQuadratureOrder { order }),
    }
}

pub fn orthogonal_length(edge_length: f64, owner_area: f64) -> f64 {
    2.0 * owner_area / edge_length
}

/// Quadrature points with closest-point frames for one surrogate edge.
pub fn edge_quadrature(
    a: Vec2,
    b: Vec2,
    hole: &Hole,
    order: usize,
) -> Result<Vec<EdgeQuadPoint>, SurrogateError> {
    let rule = gauss_points(order)?;
    let length = (b - a).norm();
    Ok(rule
        .iter()
        .map(|&(t, w)| {
            let position = a + (b - a) * t;
            EdgeQuadPoint {
                position,
                weight: w * length,
                frame: hole.closest_point(position),
            }
        })
        .collect())
}

/// Classify the mesh for one resolved hole.
pub fn classify(
    mesh: &BackgroundMesh,
    hole: &Hole,
    quad_order: usize,
) -> Result<SurrogateMap, SurrogateError> {
    gauss_points(quad_order)?;

    let bbox = hole.bbox();
    let clearance_x = mesh.dx;
    let clearance_y = mesh.dy;
    if bbox.x0 < mesh.bounds.x0 + clearance_x
        || bbox.x1 > mesh.bounds.x1 - clearance_x
        || bbox.y0 < mesh.bounds.y0 + clearance_y
        || bbox.y1 > mesh.bounds.y1 - clearance_y
    {
        return Err(SurrogateError::InsufficientClearance);
    }

    let node_inside: Vec<bool> = mesh.nodes.iter().map(|&p| hole.contains(p)).collect();

    let mut element_is_active = vec![false; mesh.elements.len()];
    let mut active_elements = Vec::new();
    let mut node_touches_active = vec![false; mesh.n_nodes()];
    for (ei, e) in mesh.elements.iter().enumerate() {
        let active = e.nodes.iter().all(|&n| !node_inside[n]);
        element_is_active[ei] = active;
        if active {
            active_elements.push(ei);
            for &n in &e.nodes {
                node_touches_active[n] = true;
            }
        }
    }
    if active_elements.is_empty() {
        return Err(SurrogateError::EmptyActiveSet);
    }

    let mut node_is_ghost = vec![false; mesh.n_nodes()];
    let mut ghost_nodes = Vec::new();
    for n in 0..mesh.n_nodes() {
        if !node_touches_active[n] && !mesh.node_is_outer[n] {
            node_is_ghost[n] = true;
            ghost_nodes.push(n);
        }
    }

    let mut edges = Vec::new();
    for edge in &mesh.edges {
        let (first, second) = edge.owners;
        let Some(second) = second else { continue };
        let owner = match (element_is_active[first], element_is_active[second]) {
            (true, false) => first,
            (false, true) => second,
            _ => continue,
        };

        let (na, nb) = edge.nodes;
        let a = mesh.nodes[na];
        let b = mesh.nodes[nb];
        let length = (b - a).norm();
        // Edge normal signed to point away from the owner element.
        let mut normal = (b - a).perp() * (1.0 / length);
        let centroid = mesh.centroid(owner);
        let midpoint = (a + b) * 0.5;
        if normal.dot(centroid - midpoint) > 0.0 {
            normal = -normal;
        }

        let h_perp = orthogonal_length(length, mesh.elements[owner].area);
        let quad = edge_quadrature(a, b, hole, quad_order)?;
        for qp in &quad {
            // Frames at (numerically) zero distance carry no usable direction
            // and contribute no distance-weighted terms; skip them here.
            if qp.frame.dist() < 1e-12 {
                continue;
            }
            let n_dot_n = qp.frame.normal.dot(normal);
            if n_dot_n < -1e-12 {
                return Err(SurrogateError::ResolutionViolated {
                    edge: edges.len(),
                    n_dot_n,
                });
            }
        }

        edges.push(SurrogateEdge {
            nodes: edge.nodes,
            owner,
            normal,
            length,
            h_perp,
            quad,
        });
    }

    if edges.is_empty() {
        return Err(SurrogateError::UnresolvedGeometry);
    }

    Ok(SurrogateMap {
        active_elements,
        element_is_active,
        ghost_nodes,
        node_is_ghost,
        edges,
        outer_dirichlet_nodes: mesh.outer_boundary_nodes.clone(),
    })
}
