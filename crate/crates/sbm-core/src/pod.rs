//! Reduced basis construction by the method of snapshots and the Galerkin
//! projection of the full order operators.
//!
//! The correlation matrix uses the fixed mass matrix of the whole background
//! box as inner product weight: snapshots vanish inside their own ghost
//! regions, so those entries contribute nothing, and every parameter value
//! shares the same product. Modes are scaled from the correlation
//! eigenvectors and then re-orthonormalized explicitly (modified
//! Gram-Schmidt, two passes): orthonormality is the binding constraint of the
//! construction. Mode signs are fixed by making the entry of largest
//! magnitude positive so runs are reproducible.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

#[allow(unused_imports)]
use num_traits::Float;

use crate::assembly::FomSystem;
use crate::linalg::{
    csr_congruence_symmetric, csr_times_dense_prefix, lu_solve, symmetric_eigen,
    transpose_prefix_times, CsrMatrix, DenseMat, LinalgError,
};

/// Relative eigenvalue cutoff below which modes count as numerical noise.
pub const RANK_CUTOFF: f64 = 1e-12;

#[derive(Clone, Debug, Default)]
pub struct SnapshotSet {
    pub columns: Vec<Vec<f64>>,
    pub parameters: Vec<f64>,
}

impl SnapshotSet {
    pub fn new() -> Self {
        SnapshotSet::default()
    }

    pub fn push(&mut self, mu: f64, values: Vec<f64>) {
        if let Some(first) = self.columns.first() {
            assert_eq!(first.len(), values.len());
        }
        self.columns.push(values);
        self.parameters.push(mu);
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn n_dofs(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }
}

#[derive(Clone, Debug)]
pub struct PodBasis {
    /// Modes as columns of an N_h x N^r matrix (row-major storage).
    pub modes: DenseMat,
    /// All correlation eigenvalues, sorted descending (not just retained ones).
    pub eigenvalues: Vec<f64>,
}

impl PodBasis {
    pub fn n_modes(&self) -> usize {
        self.modes.cols
    }

    pub fn n_dofs(&self) -> usize {
        self.modes.rows
    }

    /// Copy of the basis holding only the first `m` modes, packed tight.
    /// Queries that never use more than `m` modes avoid streaming the
    /// unused tail columns through the projection kernels.
    pub fn truncated(&self, m: usize) -> PodBasis {
        assert!(m <= self.n_modes());
        PodBasis {
            modes: self.modes.left_columns(m),
            eigenvalues: self.eigenvalues.clone(),
        }
    }

    /// lambda_i / lambda_1 decay sequence.
    pub fn eigenvalue_decay(&self) -> Vec<f64> {
        let lead = self.eigenvalues.first().copied().unwrap_or(0.0);
        if lead <= 0.0 {
            return vec![0.0; self.eigenvalues.len()];
        }
        self.eigenvalues.iter().map(|&l| (l / lead).max(0.0)).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum PodError {
    EmptySnapshotSet,
    /// More modes requested than the snapshot set numerically supports.
    RankDeficient { requested: usize, rank: usize },
    ZeroModeCount,
    SingularReducedSystem,
    ModeCountExceedsBasis { requested: usize, available: usize },
}

impl fmt::Display for PodError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PodError::EmptySnapshotSet => write!(f, "snapshot set is empty"),
            PodError::RankDeficient { requested, rank } => write!(
                f,
                "{requested} modes requested but the snapshot set has numerical rank {rank}"
            ),
            PodError::ZeroModeCount => write!(f, "at least one mode is required"),
            PodError::SingularReducedSystem => {
                write!(f, "reduced operator is singular: the basis is rank deficient")
            }
            PodError::ModeCountExceedsBasis {
                requested,
                available,
            } => write!(f, "{requested} modes requested, basis holds {available}"),
        }
    }
}

impl core::error::Error for PodError {}

/// How many modes to keep.
#[derive(Clone, Copy, Debug)]
pub enum PodSelection {
    ModeCount(usize),
    /// Keep the smallest count whose cumulative energy reaches 1 - epsilon.
    EnergyTolerance(f64),
    /// Keep everything above the numerical rank cutoff.
    FullRank,
}

/// Correlation (Gram) matrix C_ij = T_i^T M T_j, exactly symmetric.
pub fn correlation_matrix(snapshots: &SnapshotSet, mass: &CsrMatrix) -> DenseMat {
    let ns = snapshots.len();
    let weighted: Vec<Vec<f64>> = snapshots
        .columns
        .iter()
        .map(|c| mass.matvec_alloc(c))
        .collect();
    let mut c = DenseMat::zeros(ns, ns);
    for i in 0..ns {
        for j in i..ns {
            let dot: f64 = snapshots.columns[i]
                .iter()
                .zip(&weighted[j])
                .map(|(a, b)| a * b)
                .sum();
            *c.at_mut(i, j) = dot;
            *c.at_mut(j, i) = dot;
        }
    }
    c
}

/// Build the POD basis from snapshots.
pub fn pod(
    snapshots: &SnapshotSet,
    mass: &CsrMatrix,
    selection: PodSelection,
) -> Result<PodBasis, PodError> {
    if snapshots.is_empty() {
        return Err(PodError::EmptySnapshotSet);
    }
    let ns = snapshots.len();
    let n = snapshots.n_dofs();

    let c = correlation_matrix(snapshots, mass);
    let (eig, vectors) = symmetric_eigen(&c);
    let mut order: Vec<usize> = (0..ns).collect();
    order.sort_by(|&a, &b| eig[b].total_cmp(&eig[a]));
    let eigenvalues: Vec<f64> = order.iter().map(|&k| eig[k]).collect();

    let lambda_max = eigenvalues.first().copied().unwrap_or(0.0);
    let rank = eigenvalues
        .iter()
        .take_while(|&&l| l > RANK_CUTOFF * lambda_max && l > 0.0)
        .count();
    if rank == 0 {
        return Err(PodError::RankDeficient {
            requested: 1,
            rank: 0,
        });
    }

    let keep = match selection {
        PodSelection::ModeCount(0) => return Err(PodError::ZeroModeCount),
        PodSelection::ModeCount(m) => {
            if m > rank {
                return Err(PodError::RankDeficient {
                    requested: m,
                    rank,
                });
            }
            m
        }
        PodSelection::EnergyTolerance(eps) => {
            let total: f64 = eigenvalues.iter().map(|&l| l.max(0.0)).sum();
            let mut cumulative = 0.0;
            let mut m = rank;
            for (k, &l) in eigenvalues.iter().take(rank).enumerate() {
                cumulative += l.max(0.0);
                if cumulative >= (1.0 - eps) * total {
                    m = k + 1;
                    break;
                }
            }
            m
        }
        PodSelection::FullRank => rank,
    };

    // phi_k = sum_j T_j Q_jk, normalized in the mass norm afterwards. The
    // eigenvector scaling already makes the norm sqrt(lambda_k).
    let mut modes = DenseMat::zeros(n, keep);
    for (k, &src) in order.iter().take(keep).enumerate() {
        for (j, column) in snapshots.columns.iter().enumerate() {
            let q = vectors.at(j, src);
            if q == 0.0 {
                continue;
            }
            for (i, &v) in column.iter().enumerate() {
                *modes.at_mut(i, k) += q * v;
            }
        }
    }

    mass_orthonormalize(&mut modes, mass);
    fix_mode_signs(&mut modes);

    Ok(PodBasis { modes, eigenvalues })
}

/// In-place modified Gram-Schmidt in the mass inner product, two passes.
pub fn mass_orthonormalize(modes: &mut DenseMat, mass: &CsrMatrix) {
    let n = modes.rows;
    let m = modes.cols;
    let mut column = vec![0.0; n];
    let mut weighted: Vec<Vec<f64>> = Vec::with_capacity(m);
    for k in 0..m {
        for i in 0..n {
            column[i] = modes.at(i, k);
        }
        for _pass in 0..2 {
            for (prev, w_prev) in weighted.iter().enumerate() {
                let mut proj = 0.0;
                for i in 0..n {
                    proj += column[i] * w_prev[i];
                }
                for i in 0..n {
                    column[i] -= proj * modes.at(i, prev);
                }
            }
        }
        let mut w = mass.matvec_alloc(&column);
        let norm = column
            .iter()
            .zip(&w)
            .map(|(a, b)| a * b)
            .sum::<f64>()
            .sqrt();
        debug_assert!(norm > 0.0, "rank-deficient set reached Gram-Schmidt");
        let inv = 1.0 / norm;
        for i in 0..n {
            column[i] *= inv;
            w[i] *= inv;
            *modes.at_mut(i, k) = column[i];
        }
        weighted.push(w);
    }
}

/// Make the entry of largest magnitude (first on ties) positive in each mode.
fn fix_mode_signs(modes: &mut DenseMat) {
    for k in 0..modes.cols {
        let mut best = 0usize;
        let mut best_abs = 0.0f64;
        for i in 0..modes.rows {
            let a = modes.at(i, k).abs();
            if a > best_abs {
                best_abs = a;
                best = i;
            }
        }
        if modes.at(best, k) < 0.0 {
            for i in 0..modes.rows {
                *modes.at_mut(i, k) = -modes.at(i, k);
            }
        }
    }
}

/// Galerkin-projected operator and load: A_r = L^T A L, F_r = L^T F.
#[derive(Clone, Debug)]
pub struct ReducedSystem {
    pub matrix: DenseMat,
    pub rhs: Vec<f64>,
}

pub fn project(system: &FomSystem, basis: &PodBasis, m: usize) -> Result<ReducedSystem, PodError> {
    if m == 0 {
        return Err(PodError::ZeroModeCount);
    }
    if m > basis.n_modes() {
        return Err(PodError::ModeCountExceedsBasis {
            requested: m,
            available: basis.n_modes(),
        });
    }
    // The projected operator is exactly symmetric whenever the modes vanish
    // on every constrained unknown that free rows couple to: the free block
    // is symmetric and the remaining constrained rows contribute identity
    // terms. In that case only one triangle needs accumulating and the
    // intermediate A L never materializes; otherwise fall back to the full
    // two-step product.
    let matrix = if symmetric_projection_is_exact(system, &basis.modes, m) {
        csr_congruence_symmetric(&system.matrix, &basis.modes, m)
    } else {
        let al = csr_times_dense_prefix(&system.matrix, &basis.modes, m);
        transpose_prefix_times(&basis.modes, m, &al)
    };
    let rhs = basis.modes.transpose_matvec_prefix(&system.rhs, m);
    Ok(ReducedSystem { matrix, rhs })
}

fn symmetric_projection_is_exact(system: &FomSystem, modes: &DenseMat, m: usize) -> bool {
    system
        .coupled_constrained
        .iter()
        .all(|&node| modes.row(node)[..m].iter().all(|&v| v == 0.0))
}

pub fn solve_reduced(reduced: &ReducedSystem) -> Result<Vec<f64>, PodError> {
    lu_solve(reduced.matrix.clone(), reduced.rhs.clone()).map_err(|e| match e {
        LinalgError::Singular { .. } => PodError::SingularReducedSystem,
        _ => PodError::SingularReducedSystem,
    })
}

/// T_r = L a.
pub fn reconstruct(basis: &PodBasis, coefficients: &[f64]) -> Vec<f64> {
    let m = coefficients.len();
    assert!(m <= basis.n_modes());
    (0..basis.n_dofs())
        .map(|i| {
            basis.modes.row(i)[..m]
                .iter()
                .zip(coefficients)
                .map(|(l, a)| l * a)
                .sum()
        })
        .collect()
}

pub fn mass_norm(mass: &CsrMatrix, v: &[f64]) -> f64 {
    mass.bilinear(v, v).max(0.0).sqrt()
}

/// Relative mass-norm distance ||a - b|| / ||b||.
pub fn relative_l2_error(mass: &CsrMatrix, a: &[f64], b: &[f64]) -> f64 {
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let denom = mass_norm(mass, b);
    if denom == 0.0 {
        mass_norm(mass, &diff)
    } else {
        mass_norm(mass, &diff) / denom
    }
}

/// Error of the plain L2 projection of a field onto the first m modes.
pub fn l2_projection_error(
    mass: &CsrMatrix,
    basis: &PodBasis,
    m: usize,
    field: &[f64],
) -> Result<f64, PodError> {
    let weighted = mass.matvec_alloc(field);
    l2_projection_error_weighted(mass, basis, m, field, &weighted)
}

/// Same as [`l2_projection_error`] with the mass-weighted field supplied,
/// so sweeps over many mode counts reuse it.
pub fn l2_projection_error_weighted(
    mass: &CsrMatrix,
    basis: &PodBasis,
    m: usize,
    field: &[f64],
    weighted: &[f64],
) -> Result<f64, PodError> {
    if m == 0 {
        return Err(PodError::ZeroModeCount);
    }
    if m > basis.n_modes() {
        return Err(PodError::ModeCountExceedsBasis {
            requested: m,
            available: basis.n_modes(),
        });
    }
    let coefficients = basis.modes.transpose_matvec_prefix(weighted, m);
    let projected = basis.modes.matvec_prefix(&coefficients, m);
    Ok(relative_l2_error(mass, &projected, field))
}

/// Largest deviation of the mode Gram matrix from the identity.
pub fn orthonormality_defect(mass: &CsrMatrix, basis: &PodBasis) -> f64 {
    let m = basis.n_modes();
    let mut worst = 0.0f64;
    let weighted: Vec<Vec<f64>> = (0..m)
        .map(|k| mass.matvec_alloc(&basis.modes.column(k)))
        .collect();
    for i in 0..m {
        let col_i = basis.modes.column(i);
        for (j, w) in weighted.iter().enumerate().skip(i) {
            let dot: f64 = col_i.iter().zip(w).map(|(a, b)| a * b).sum();
            let expect = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((dot - expect).abs());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{BackgroundMesh, Rect};

    fn small_mass() -> (BackgroundMesh, CsrMatrix) {
        let mesh = BackgroundMesh::build_structured(Rect::new(0.0, 1.0, 0.0, 1.0), 0.1).unwrap();
        let mass = mesh.mass_matrix();
        (mesh, mass)
    }

    fn random_field(n: usize, seed: &mut u64) -> Vec<f64> {
        (0..n)
            .map(|_| {
                *seed = seed
                    .wrapping_mul(6364136223846793005)
                    .wrapping_add(1442695040888963407);
                ((*seed >> 11) as f64) / ((1u64 << 53) as f64) - 0.5
            })
            .collect()
    }

    #[test]
    fn single_snapshot_basis_is_normalized_snapshot() {
        let (_, mass) = small_mass();
        let mut seed = 3u64;
        let t1 = random_field(mass.n_rows, &mut seed);
        let mut set = SnapshotSet::new();
        set.push(0.1, t1.clone());

        let c = correlation_matrix(&set, &mass);
        let norm_sq = mass.bilinear(&t1, &t1);
        assert!((c.at(0, 0) - norm_sq).abs() < 1e-12 * norm_sq);

        let basis = pod(&set, &mass, PodSelection::FullRank).unwrap();
        assert_eq!(basis.n_modes(), 1);
        assert!((basis.eigenvalues[0] - norm_sq).abs() < 1e-12 * norm_sq);
        let mode = basis.modes.column(0);
        let scale = norm_sq.sqrt();
        for (m, t) in mode.iter().zip(&t1) {
            // Up to the sign convention.
            assert!((m.abs() - (t / scale).abs()).abs() < 1e-10);
        }
        assert!((mass.bilinear(&mode, &mode) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn duplicated_snapshots_have_rank_one() {
        let (_, mass) = small_mass();
        let mut seed = 8u64;
        let t = random_field(mass.n_rows, &mut seed);
        let mut set = SnapshotSet::new();
        set.push(0.0, t.clone());
        set.push(1.0, t.clone());
        set.push(2.0, t);

        let err = pod(&set, &mass, PodSelection::ModeCount(2)).unwrap_err();
        assert_eq!(
            err,
            PodError::RankDeficient {
                requested: 2,
                rank: 1
            }
        );
        let basis = pod(&set, &mass, PodSelection::FullRank).unwrap();
        assert_eq!(basis.n_modes(), 1);
    }

    #[test]
    fn correlation_matches_elementwise_quadrature() {
        // Independent Gram computation: per-element exact integration of
        // products of P1 fields instead of the assembled mass matrix.
        let (mesh, mass) = small_mass();
        let mut seed = 21u64;
        let mut set = SnapshotSet::new();
        for k in 0..5 {
            set.push(k as f64, random_field(mesh.n_nodes(), &mut seed));
        }
        let c = correlation_matrix(&set, &mass);
        for i in 0..5 {
            for j in 0..5 {
                let mut expect = 0.0;
                for e in &mesh.elements {
                    let u: [f64; 3] = core::array::from_fn(|k| set.columns[i][e.nodes[k]]);
                    let v: [f64; 3] = core::array::from_fn(|k| set.columns[j][e.nodes[k]]);
                    let sum_u: f64 = u.iter().sum();
                    let sum_v: f64 = v.iter().sum();
                    let dot: f64 = u.iter().zip(&v).map(|(a, b)| a * b).sum();
                    // int uv over a triangle = area/12 (sum_u sum_v + dot).
                    expect += e.area / 12.0 * (sum_u * sum_v + dot);
                }
                assert!((c.at(i, j) - expect).abs() < 1e-13, "({i},{j})");
            }
        }
    }

    #[test]
    fn orthogonal_equal_norm_snapshots_give_degenerate_spectrum() {
        let (_, mass) = small_mass();
        let n = mass.n_rows;
        let mut seed = 13u64;
        let a = random_field(n, &mut seed);
        // Gram-Schmidt the second field against the first, then equalize norms.
        let mut b = random_field(n, &mut seed);
        let ma = mass.matvec_alloc(&a);
        let proj = b.iter().zip(&ma).map(|(x, y)| x * y).sum::<f64>()
            / a.iter().zip(&ma).map(|(x, y)| x * y).sum::<f64>();
        for i in 0..n {
            b[i] -= proj * a[i];
        }
        let norm_a = mass_norm(&mass, &a);
        let norm_b = mass_norm(&mass, &b);
        let b: Vec<f64> = b.iter().map(|v| v * norm_a / norm_b).collect();

        let mut set = SnapshotSet::new();
        set.push(0.0, a.clone());
        set.push(1.0, b.clone());
        let basis = pod(&set, &mass, PodSelection::FullRank).unwrap();
        assert_eq!(basis.n_modes(), 2);
        assert!((basis.eigenvalues[0] - basis.eigenvalues[1]).abs() < 1e-10 * basis.eigenvalues[0]);

        // The span is preserved: both snapshots project onto the basis exactly.
        for t in [&a, &b] {
            let err = l2_projection_error(&mass, &basis, 2, t).unwrap();
            assert!(err < 1e-8);
        }
    }

    #[test]
    fn modes_are_mass_orthonormal_with_signs_fixed() {
        let (_, mass) = small_mass();
        let mut seed = 77u64;
        let mut set = SnapshotSet::new();
        for k in 0..8 {
            set.push(k as f64, random_field(mass.n_rows, &mut seed));
        }
        let basis = pod(&set, &mass, PodSelection::FullRank).unwrap();
        assert_eq!(basis.n_modes(), 8);
        assert!(orthonormality_defect(&mass, &basis) < 1e-8);
        for k in 0..basis.n_modes() {
            let column = basis.modes.column(k);
            let largest = column
                .iter()
                .cloned()
                .max_by(|a, b| a.abs().total_cmp(&b.abs()))
                .unwrap();
            assert!(largest > 0.0, "mode {k} sign convention");
        }
        // Eigenvalues are sorted and nonnegative up to round-off.
        for pair in basis.eigenvalues.windows(2) {
            assert!(pair[0] >= pair[1]);
        }
        let decay = basis.eigenvalue_decay();
        assert_eq!(decay[0], 1.0);
    }

    #[test]
    fn energy_tolerance_selects_smallest_sufficient_count() {
        let (_, mass) = small_mass();
        let mut seed = 5u64;
        let base = random_field(mass.n_rows, &mut seed);
        let mut set = SnapshotSet::new();
        // One dominant direction plus small perturbations.
        for k in 0..4 {
            let noise = random_field(mass.n_rows, &mut seed);
            let column: Vec<f64> = base
                .iter()
                .zip(&noise)
                .map(|(b, n)| b + 1e-3 * n)
                .collect();
            set.push(k as f64, column);
        }
        let basis = pod(&set, &mass, PodSelection::EnergyTolerance(1e-4)).unwrap();
        assert_eq!(basis.n_modes(), 1);
        let fuller = pod(&set, &mass, PodSelection::EnergyTolerance(1e-9)).unwrap();
        assert!(fuller.n_modes() > 1);
    }
}
