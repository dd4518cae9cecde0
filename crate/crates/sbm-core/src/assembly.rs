//! Assembly of the full order operator and load vector.
//!
//! The bilinear form combines the volume diffusion term over active elements
//! with five surrogate-boundary terms per quadrature point: consistency,
//! adjoint consistency, a distance-weighted correction and the Nitsche-type
//! penalty, all written on the shifted trace v + grad(v) . d so that boundary
//! data prescribed on the true boundary is imposed second-order accurately on
//! the surrogate one. Ghost and outer-wall rows become identity rows instead
//! of being eliminated, which keeps the system size independent of the
//! geometry parameter.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::geometry::BoundaryFrame;
use crate::linalg::{CsrMatrix, Triplets};
use crate::math::Vec2;
use crate::mesh::{element_stiffness, BackgroundMesh, P1Element};
use crate::surrogate::{SurrogateEdge, SurrogateMap};

pub type ScalarField = Arc<dyn Fn(Vec2) -> f64 + Send + Sync>;
pub type VectorField = Arc<dyn Fn(Vec2) -> Vec2 + Send + Sync>;

/// Distances below this are treated as zero in the 0/0-prone correction term.
const ZERO_DIST: f64 = 1e-12;

/// Problem data: source, Dirichlet value on the embedded boundary (with its
/// gradient, needed for the tangential correction), outer wall value and the
/// Nitsche penalty factor.
#[derive(Clone)]
pub struct ProblemData {
    pub source: ScalarField,
    pub dirichlet: ScalarField,
    pub dirichlet_gradient: VectorField,
    pub wall: ScalarField,
    pub alpha: f64,
}

impl ProblemData {
    pub const DEFAULT_ALPHA: f64 = 4.0;

    pub fn new(
        source: impl Fn(Vec2) -> f64 + Send + Sync + 'static,
        dirichlet: impl Fn(Vec2) -> f64 + Send + Sync + 'static,
        dirichlet_gradient: impl Fn(Vec2) -> Vec2 + Send + Sync + 'static,
        wall: impl Fn(Vec2) -> f64 + Send + Sync + 'static,
        alpha: f64,
    ) -> Self {
        assert!(alpha > 0.0);
        ProblemData {
            source: Arc::new(source),
            dirichlet: Arc::new(dirichlet),
            dirichlet_gradient: Arc::new(dirichlet_gradient),
            wall: Arc::new(wall),
            alpha,
        }
    }

    /// Unit source, homogeneous Dirichlet data everywhere: the reference
    /// heat exchange setup.
    pub fn unit_source(alpha: f64) -> Self {
        ProblemData::new(|_| 1.0, |_| 0.0, |_| Vec2::ZERO, |_| 0.0, alpha)
    }

    /// Dirichlet value and its tangential derivative at a boundary frame.
    pub fn dirichlet_data(&self, frame: &BoundaryFrame) -> (f64, f64) {
        let value = (self.dirichlet)(frame.point);
        let tangential = (self.dirichlet_gradient)(frame.point).dot(frame.tangent);
        (value, tangential)
    }
}

/// Assembled full order system. Constrained rows (ghost nodes and outer wall
/// nodes) are identity rows with the prescribed value on the right hand side.
#[derive(Clone, Debug)]
pub struct FomSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    /// Prescribed value per node; `None` marks a free unknown.
    pub constraint: Vec<Option<f64>>,
    pub free_dofs: Vec<usize>,
    /// Constrained unknowns that appear as columns in free rows (wall nodes
    /// next to active elements). These are the only places where the matrix
    /// is structurally unsymmetric.
    pub coupled_constrained: Vec<usize>,
}

impl FomSystem {
    pub fn n(&self) -> usize {
        self.rhs.len()
    }
}

/// Local boundary contributions of one surrogate edge: 3x3 block and load
/// 3-vector on the owner element nodes.
fn edge_terms(
    edge: &SurrogateEdge,
    elem: &P1Element,
    vertices: [Vec2; 3],
    problem: &ProblemData,
) -> ([[f64; 3]; 3], [f64; 3]) {
    let mut block = [[0.0; 3]; 3];
    let mut load = [0.0; 3];
    let penalty = problem.alpha / edge.h_perp;
    for qp in &edge.quad {
        let d = qp.frame.offset;
        let w = qp.weight;

        // Shifted trace S, normal derivative Gn and distance derivative Gd
        // of each P1 basis function at the quadrature point.
        let mut s = [0.0; 3];
        let mut gn = [0.0; 3];
        let mut gd = [0.0; 3];
        for k in 0..3 {
            let g = elem.grads[k];
            let lambda = 1.0 + g.dot(qp.position - vertices[k]);
            s[k] = lambda + g.dot(d);
            gn[k] = g.dot(edge.normal);
            gd[k] = g.dot(d);
        }

        // Signed distance along the true normal. Equals ||d|| wherever the
        // quadrature point lies outside the hole (there d = ||d|| n); on
        // edges that clip a hole corner the point can fall inside, and the
        // signed form keeps the correction term consistent with the Taylor
        // shift. Near zero the term is a 0/0 limit and is dropped.
        let d_n = d.dot(qp.frame.normal);
        let correction = if d_n.abs() < ZERO_DIST {
            0.0
        } else {
            qp.frame.normal.dot(edge.normal) / d_n
        };

        let (g_value, g_tangential) = problem.dirichlet_data(&qp.frame);
        let tau_n = qp.frame.tangent.dot(edge.normal);

        for i in 0..3 {
            for j in 0..3 {
                block[i][j] += w
                    * (-s[i] * gn[j] - gn[i] * s[j]
                        + correction * gd[i] * gd[j]
                        + penalty * s[i] * s[j]);
            }
            load[i] += w
                * (-gn[i] * g_value - gd[i] * g_tangential * tau_n
                    + penalty * s[i] * g_value);
        }
    }
    (block, load)
}

/// Assemble the operator and load for one classified configuration.
pub fn assemble(mesh: &BackgroundMesh, map: &SurrogateMap, problem: &ProblemData) -> FomSystem {
    let n = mesh.n_nodes();

    let mut constraint: Vec<Option<f64>> = vec![None; n];
    for &g in &map.ghost_nodes {
        constraint[g] = Some(0.0);
    }
    for &b in &map.outer_dirichlet_nodes {
        constraint[b] = Some((problem.wall)(mesh.nodes[b]));
    }

    let mut triplets =
        Triplets::with_capacity(n, n, 9 * map.active_elements.len() + 9 * map.edges.len() + n);
    let mut rhs = vec![0.0; n];

    for &ei in &map.active_elements {
        let elem = &mesh.elements[ei];
        let k = element_stiffness(elem);
        let f_mid = (problem.source)(mesh.centroid(ei));
        let load = elem.area * f_mid / 3.0;
        for i in 0..3 {
            let row = elem.nodes[i];
            if constraint[row].is_some() {
                continue;
            }
            for j in 0..3 {
                triplets.push(row, elem.nodes[j], k[i][j]);
            }
            rhs[row] += load;
        }
    }

    for edge in &map.edges {
        let elem = &mesh.elements[edge.owner];
        let vertices = [
            mesh.nodes[elem.nodes[0]],
            mesh.nodes[elem.nodes[1]],
            mesh.nodes[elem.nodes[2]],
        ];
        let (block, load) = edge_terms(edge, elem, vertices, problem);
        for i in 0..3 {
            let row = elem.nodes[i];
            if constraint[row].is_some() {
                continue;
            }
            for j in 0..3 {
                triplets.push(row, elem.nodes[j], block[i][j]);
            }
            rhs[row] += load[i];
        }
    }

    let mut free_dofs = Vec::with_capacity(n);
    for (node, c) in constraint.iter().enumerate() {
        match c {
            Some(value) => {
                triplets.push(node, node, 1.0);
                rhs[node] = *value;
            }
            None => free_dofs.push(node),
        }
    }

    let matrix = triplets.into_csr();
    let mut coupled = vec![false; n];
    for &row in &free_dofs {
        let (cols, _) = matrix.row(row);
        for &c in cols {
            if constraint[c as usize].is_some() {
                coupled[c as usize] = true;
            }
        }
    }
    let coupled_constrained = coupled
        .iter()
        .enumerate()
        .filter_map(|(node, &is_coupled)| is_coupled.then_some(node))
        .collect();

    FomSystem {
        matrix,
        rhs,
        constraint,
        free_dofs,
        coupled_constrained,
    }
}

/// Largest |A_ij - A_ji| over pairs of free unknowns.
pub fn free_block_symmetry_check(system: &FomSystem) -> f64 {
    let mut worst = 0.0f64;
    for &i in &system.free_dofs {
        let (cols, vals) = system.matrix.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            let j = j as usize;
            if j > i && system.constraint[j].is_none() {
                worst = worst.max((v - system.matrix.get(j, i)).abs());
            }
        }
    }
    worst
}
