//! End-to-end reduced order behavior on a small configuration: snapshot
//! sweep, basis construction, projection and the exactness properties the
//! Galerkin method guarantees.

use sbm_core::assembly::ProblemData;
use sbm_core::geometry::{EmbeddedShape, ParamRange};
use sbm_core::linalg::CsrMatrix;
use sbm_core::mesh::{BackgroundMesh, Rect};
use sbm_core::pod::{
    l2_projection_error, mass_orthonormalize, orthonormality_defect, pod, project, reconstruct,
    relative_l2_error, solve_reduced, PodError, PodSelection, SnapshotSet,
};
use sbm_core::solver::{solve_configuration, SolverKind};
use sbm_core::linalg::DenseMat;
use sbm_core::surrogate::classify;

fn setup() -> (BackgroundMesh, EmbeddedShape, ProblemData, CsrMatrix) {
    let mesh = BackgroundMesh::build_structured(Rect::new(-1.0, 1.0, -1.0, 1.0), 0.125).unwrap();
    let shape = EmbeddedShape::RectangleYCenter {
        half_width: 0.25,
        half_height: 0.2,
        x_center: 0.0,
        range: ParamRange::new(-0.35, 0.35),
    };
    let problem = ProblemData::unit_source(4.0);
    let mass = mesh.mass_matrix();
    (mesh, shape, problem, mass)
}

fn sweep(
    mesh: &BackgroundMesh,
    shape: &EmbeddedShape,
    problem: &ProblemData,
    mus: &[f64],
) -> SnapshotSet {
    let mut set = SnapshotSet::new();
    for &mu in mus {
        let hole = shape.resolve(mu).unwrap();
        let (_, _, solution) =
            solve_configuration(mesh, &hole, problem, 3, SolverKind::Direct).unwrap();
        set.push(mu, solution.values);
    }
    set
}

#[test]
fn training_snapshots_are_reproduced_at_full_rank() {
    let (mesh, shape, problem, mass) = setup();
    let mus: Vec<f64> = (0..10).map(|k| -0.3 + 0.06 * k as f64).collect();
    let snapshots = sweep(&mesh, &shape, &problem, &mus);
    let basis = pod(&snapshots, &mass, PodSelection::FullRank).unwrap();
    assert!(orthonormality_defect(&mass, &basis) < 1e-8);

    for (k, &mu) in mus.iter().enumerate() {
        let hole = shape.resolve(mu).unwrap();
        let map = classify(&mesh, &hole, 3).unwrap();
        let system = sbm_core::assembly::assemble(&mesh, &map, &problem);
        let reduced = project(&system, &basis, basis.n_modes()).unwrap();
        // The projection accumulates one triangle and mirrors it, which is
        // exact because the projected operator is symmetric: the free block
        // is symmetric, ghost rows are identity rows and the modes vanish on
        // the outer wall. Verify against the full product route.
        let m = basis.n_modes();
        let al = sbm_core::linalg::csr_times_dense_prefix(&system.matrix, &basis.modes, m);
        let full = sbm_core::linalg::transpose_prefix_times(&basis.modes, m, &al);
        let scale = full.max_abs();
        assert!(full.max_asymmetry() <= 1e-12 * scale);
        for i in 0..m {
            for j in 0..m {
                assert!(
                    (full.at(i, j) - reduced.matrix.at(i, j)).abs() <= 1e-12 * scale,
                    "projected entry ({i},{j}) differs between routes"
                );
            }
        }

        let a = solve_reduced(&reduced).unwrap();
        let rom = reconstruct(&basis, &a);
        let err = relative_l2_error(&mass, &rom, &snapshots.columns[k]);
        assert!(err <= 1e-8, "training mu={mu}: rom error {err:e}");
    }
}

#[test]
fn single_mode_reproduces_its_own_snapshot() {
    let (mesh, shape, problem, mass) = setup();
    let mu = 0.12;
    let snapshots = sweep(&mesh, &shape, &problem, &[mu]);
    let basis = pod(&snapshots, &mass, PodSelection::ModeCount(1)).unwrap();

    let hole = shape.resolve(mu).unwrap();
    let map = classify(&mesh, &hole, 3).unwrap();
    let system = sbm_core::assembly::assemble(&mesh, &map, &problem);
    let reduced = project(&system, &basis, 1).unwrap();
    let a = solve_reduced(&reduced).unwrap();
    let rom = reconstruct(&basis, &a);
    let err = relative_l2_error(&mass, &rom, &snapshots.columns[0]);
    assert!(err <= 1e-8, "one-mode reproduction error {err:e}");
}

#[test]
fn full_orthonormal_basis_reproduces_the_fom_solution() {
    // A square mass-orthonormal basis is just a change of coordinates: the
    // reduced solve must return the full order solution.
    let mesh = BackgroundMesh::build_structured(Rect::new(0.0, 1.0, 0.0, 1.0), 0.2).unwrap();
    let mass = mesh.mass_matrix();
    let n = mesh.n_nodes();
    let mut modes = DenseMat::identity(n);
    mass_orthonormalize(&mut modes, &mass);
    let basis = sbm_core::pod::PodBasis {
        modes,
        eigenvalues: vec![1.0; n],
    };
    assert!(orthonormality_defect(&mass, &basis) < 1e-10);

    let hole = sbm_core::geometry::Hole::Rectangle {
        center: sbm_core::math::Vec2::new(0.5, 0.5),
        half: sbm_core::math::Vec2::new(0.25, 0.25),
    };
    let problem = ProblemData::unit_source(4.0);
    let (_, system, fom) =
        solve_configuration(&mesh, &hole, &problem, 3, SolverKind::Direct).unwrap();
    let reduced = project(&system, &basis, n).unwrap();
    let a = solve_reduced(&reduced).unwrap();
    let rom = reconstruct(&basis, &a);
    let err = relative_l2_error(&mass, &rom, &fom.values);
    assert!(err <= 1e-9, "change-of-basis error {err:e}");
}

#[test]
fn projection_error_bounds_rom_error_per_sample() {
    let (mesh, shape, problem, mass) = setup();
    let train: Vec<f64> = (0..12).map(|k| -0.33 + 0.06 * k as f64).collect();
    let snapshots = sweep(&mesh, &shape, &problem, &train);
    let basis = pod(&snapshots, &mass, PodSelection::FullRank).unwrap();

    let test_mus = [-0.27, -0.11, 0.04, 0.19, 0.31];
    for &mu in &test_mus {
        let hole = shape.resolve(mu).unwrap();
        let (_, system, fom) =
            solve_configuration(&mesh, &hole, &problem, 3, SolverKind::Direct).unwrap();
        for m in [1, 2, 4, basis.n_modes()] {
            let reduced = project(&system, &basis, m).unwrap();
            let a = solve_reduced(&reduced).unwrap();
            let rom = reconstruct(&basis, &a);
            let rom_err = relative_l2_error(&mass, &rom, &fom.values);
            let proj_err = l2_projection_error(&mass, &basis, m, &fom.values).unwrap();
            assert!(
                proj_err <= rom_err + 1e-12,
                "mu={mu} m={m}: projection {proj_err:e} vs rom {rom_err:e}"
            );
        }
    }
}

#[test]
fn projection_error_identities() {
    let (mesh, shape, problem, mass) = setup();
    let mus: Vec<f64> = (0..6).map(|k| -0.25 + 0.1 * k as f64).collect();
    let snapshots = sweep(&mesh, &shape, &problem, &mus);
    let basis = pod(&snapshots, &mass, PodSelection::FullRank).unwrap();

    // A field inside the span projects with no error.
    let in_span = reconstruct(&basis, &vec![1.0; basis.n_modes()]);
    let err = l2_projection_error(&mass, &basis, basis.n_modes(), &in_span).unwrap();
    assert!(err <= 1e-10);

    // A field mass-orthogonal to the span projects to zero: error one.
    let n = mesh.n_nodes();
    let mut seed = 11u64;
    let mut field: Vec<f64> = (0..n)
        .map(|_| {
            seed = seed
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((seed >> 11) as f64) / ((1u64 << 53) as f64) - 0.5
        })
        .collect();
    // Remove the span components.
    let weighted = mass.matvec_alloc(&field);
    for k in 0..basis.n_modes() {
        let mode = basis.modes.column(k);
        let coeff: f64 = mode.iter().zip(&weighted).map(|(a, b)| a * b).sum();
        for i in 0..n {
            field[i] -= coeff * mode[i];
        }
    }
    let err = l2_projection_error(&mass, &basis, basis.n_modes(), &field).unwrap();
    assert!((err - 1.0).abs() < 1e-6, "orthogonal field error {err}");
}

#[test]
fn mode_count_requests_are_validated() {
    let (mesh, shape, problem, mass) = setup();
    let snapshots = sweep(&mesh, &shape, &problem, &[-0.2, 0.0, 0.2]);
    let basis = pod(&snapshots, &mass, PodSelection::FullRank).unwrap();
    let hole = shape.resolve(0.0).unwrap();
    let (_, system, _) =
        solve_configuration(&mesh, &hole, &problem, 3, SolverKind::Direct).unwrap();

    assert!(matches!(
        project(&system, &basis, 0),
        Err(PodError::ZeroModeCount)
    ));
    assert!(matches!(
        project(&system, &basis, basis.n_modes() + 1),
        Err(PodError::ModeCountExceedsBasis { .. })
    ));
    assert!(matches!(
        pod(&snapshots, &mass, PodSelection::ModeCount(17)),
        Err(PodError::RankDeficient { .. })
    ));
}
