//! Offline stage (sampling, snapshot sweep, basis construction), online stage
//! (query, project, reduced solve, error and timing collection) and the
//! report/convergence commands built on top of them.


use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use sbm_core::assembly::{assemble, ProblemData};
use sbm_core::linalg::CsrMatrix;
use sbm_core::mesh::BackgroundMesh;
use sbm_core::pod::{
    l2_projection_error_weighted, pod, project, reconstruct, relative_l2_error, solve_reduced,
    PodBasis,
    PodSelection, SnapshotSet,
};
use sbm_core::solver::{solve, solve_configuration, ConvergenceRow, ManufacturedSolution};
use sbm_core::surrogate::classify;

use crate::config::RunConfig;
use crate::io;
use crate::rng::{sample_parameters, sample_test_parameters};

/// Artifact and result file names inside the run output directory.
pub mod files {
    pub const MESH_VTK: &str = "mesh.vtk";
    pub const SNAPSHOTS: &str = "snapshots.bin";
    pub const BASIS: &str = "basis.bin";
    pub const EIGENVALUES: &str = "eigenvalues.csv";
    pub const OFFLINE_LOG: &str = "offline.csv";
    pub const SAMPLES: &str = "samples.csv";
    pub const ROWS: &str = "rows.json";
    pub const ERRORS: &str = "errors.csv";
    pub const EIGDECAY: &str = "eigdecay.csv";
    pub const TIMING: &str = "timing.csv";
    pub const EXPORTS: &str = "exports.csv";
    pub const CONVERGENCE: &str = "convergence.csv";
    pub const MATRIX: &str = "matrix.mtx";
}

fn timed<R>(f: impl FnOnce() -> R) -> (R, f64) {
    let start = Instant::now();
    let result = f();
    (result, start.elapsed().as_secs_f64())
}

/// Run a closure over 0..n on all available cores, results in index order.
fn parallel_map<T: Send>(n: usize, f: impl Fn(usize) -> T + Sync) -> Vec<T> {
    let threads = std::thread::available_parallelism()
        .map(|p| p.get())
        .unwrap_or(1)
        .min(n.max(1));
    if threads <= 1 {
        return (0..n).map(f).collect();
    }
    let counter = AtomicUsize::new(0);
    let mut slots: Vec<Option<T>> = (0..n).map(|_| None).collect();
    std::thread::scope(|scope| {
        let (tx, rx) = std::sync::mpsc::channel();
        for _ in 0..threads {
            let tx = tx.clone();
            let counter = &counter;
            let f = &f;
            scope.spawn(move || loop {
                let k = counter.fetch_add(1, Ordering::Relaxed);
                if k >= n {
                    break;
                }
                if tx.send((k, f(k))).is_err() {
                    break;
                }
            });
        }
        drop(tx);
        for (k, value) in rx {
            slots[k] = Some(value);
        }
    });
    slots.into_iter().map(|s| s.unwrap()).collect()
}

pub struct OfflineResult {
    pub parameters: Vec<f64>,
    pub basis: PodBasis,
    pub solve_seconds: Vec<f64>,
    pub pod_seconds: f64,
}

/// Offline stage: draw training parameters, sweep the full order model,
/// build the basis and persist all artifacts.
pub fn offline(config: &RunConfig) -> Result<OfflineResult> {
    config.validate()?;
    let out = &config.output_dir;
    std::fs::create_dir_all(out)
        .with_context(|| format!("creating output dir {}", out.display()))?;

    let mesh = BackgroundMesh::build_structured(config.bounds(), config.h)?;
    let mass = mesh.mass_matrix();
    let shape = config.shape()?;
    let problem = ProblemData::unit_source(config.alpha);
    let kind = config.solver.kind();
    let quad = config.quadrature_order;
    let parameters = sample_parameters(config.seed, config.n_train, config.mu_range());

    let solves = parallel_map(parameters.len(), |k| {
        let mu = parameters[k];
        let hole = shape.resolve(mu).map_err(anyhow::Error::from)?;
        let (result, seconds) = timed(|| solve_configuration(&mesh, &hole, &problem, quad, kind));
        let (_, _, solution) = result.with_context(|| format!("full order solve at mu={mu}"))?;
        Ok::<_, anyhow::Error>((solution, seconds))
    });

    let mut snapshots = SnapshotSet::new();
    let mut solve_seconds = Vec::with_capacity(parameters.len());
    let mut offline_rows = Vec::with_capacity(parameters.len());
    for (k, item) in solves.into_iter().enumerate() {
        let (solution, seconds) = item?;
        offline_rows.push(format!(
            "{k},{:.17e},{seconds:.6e},{:.3e}",
            parameters[k], solution.residual
        ));
        solve_seconds.push(seconds);
        snapshots.push(parameters[k], solution.values);
    }

    let (basis, pod_seconds) = timed(|| pod(&snapshots, &mass, PodSelection::FullRank));
    let basis = basis?;

    io::write_vtk_mesh(&out.join(files::MESH_VTK), &mesh)?;
    io::write_snapshots(&out.join(files::SNAPSHOTS), &snapshots)?;
    io::write_basis(&out.join(files::BASIS), &basis)?;
    let eig_rows: Vec<String> = basis
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(i, l)| format!("{},{:.12e}", i + 1, l))
        .collect();
    io::write_csv(&out.join(files::EIGENVALUES), "mode,lambda", &eig_rows)?;
    io::write_csv(
        &out.join(files::OFFLINE_LOG),
        "sample,mu,solve_seconds,residual",
        &offline_rows,
    )?;

    Ok(OfflineResult {
        parameters,
        basis,
        solve_seconds,
        pod_seconds,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SampleRecord {
    pub sample: usize,
    pub mu: f64,
    pub modes: usize,
    pub rom_error: f64,
    pub projection_error: f64,
    pub online_seconds: f64,
    pub fom_seconds: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReportRow {
    pub modes: usize,
    pub mean_projection_error: f64,
    pub mean_rom_error: f64,
    pub online_seconds: f64,
    pub fom_seconds: f64,
    pub savings_percent: f64,
    pub speedup: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OnlineResult {
    pub rows: Vec<ReportRow>,
    pub samples: Vec<SampleRecord>,
    /// Mode counts that could not be evaluated (beyond the basis rank).
    pub skipped_modes: Vec<usize>,
    pub test_parameters: Vec<f64>,
}

/// Online stage: for every test parameter assemble the full order operators,
/// project, solve the reduced system and compare against the fresh full
/// order solution. Runs single-threaded so the timings stay comparable.
pub fn online(config: &RunConfig) -> Result<OnlineResult> {
    config.validate()?;
    let out = &config.output_dir;
    let snapshots = io::read_snapshots(&out.join(files::SNAPSHOTS))?;
    let basis = io::read_basis(&out.join(files::BASIS))?;

    let mesh = BackgroundMesh::build_structured(config.bounds(), config.h)?;
    anyhow::ensure!(
        basis.n_dofs() == mesh.n_nodes(),
        "basis does not match the configured mesh"
    );
    let mass = mesh.mass_matrix();
    let shape = config.shape()?;
    let problem = ProblemData::unit_source(config.alpha);
    let kind = config.solver.kind();

    let test_parameters = sample_test_parameters(
        config.test_seed(),
        config.n_test,
        config.mu_range(),
        &snapshots.parameters,
    );

    let mut mode_counts: Vec<usize> = Vec::new();
    let mut skipped_modes = Vec::new();
    for &m in &config.mode_counts {
        if m <= basis.n_modes() {
            mode_counts.push(m);
        } else {
            eprintln!(
                "skipping {m} modes: basis rank is {} for {} snapshots",
                basis.n_modes(),
                snapshots.len()
            );
            skipped_modes.push(m);
        }
    }

    // Work with a tightly packed copy holding only the modes this run can
    // use; the full basis stays on disk.
    let basis = match mode_counts.iter().max() {
        Some(&max_m) if max_m < basis.n_modes() => basis.truncated(max_m),
        _ => basis,
    };

    let mut samples = Vec::with_capacity(test_parameters.len() * mode_counts.len());
    for (sample, &mu) in test_parameters.iter().enumerate() {
        let hole = shape.resolve(mu)?;
        let (map, t_classify) = timed(|| classify(&mesh, &hole, config.quadrature_order));
        let map = map.with_context(|| format!("classification at mu={mu}"))?;
        let (system, t_assemble) = timed(|| assemble(&mesh, &map, &problem));
        let (fom, t_solve) = timed(|| solve(&system, kind));
        let fom = fom.with_context(|| format!("full order solve at mu={mu}"))?;
        let fom_seconds = t_classify + t_assemble + t_solve;

        // Timed queries first, error evaluation afterwards: the error norms
        // stream large vectors and would otherwise sit between measurements.
        let mut solved = Vec::with_capacity(mode_counts.len());
        for &m in &mode_counts {
            let (reduced, t_project) = timed(|| project(&system, &basis, m));
            let reduced = reduced?;
            let (coefficients, t_reduced) = timed(|| solve_reduced(&reduced));
            let coefficients = coefficients?;
            solved.push((m, coefficients, t_project + t_reduced));
        }

        let weighted_fom = mass.matvec_alloc(&fom.values);
        for (m, coefficients, query_seconds) in solved {
            let rom = reconstruct(&basis, &coefficients);
            let rom_error = relative_l2_error(&mass, &rom, &fom.values);
            let projection_error =
                l2_projection_error_weighted(&mass, &basis, m, &fom.values, &weighted_fom)?;
            samples.push(SampleRecord {
                sample,
                mu,
                modes: m,
                rom_error,
                projection_error,
                online_seconds: t_classify + t_assemble + query_seconds,
                fom_seconds,
            });
        }
    }

    let mut rows = Vec::with_capacity(mode_counts.len());
    for &m in &mode_counts {
        let of_mode: Vec<&SampleRecord> = samples.iter().filter(|s| s.modes == m).collect();
        let n = of_mode.len().max(1) as f64;
        let mean = |f: fn(&SampleRecord) -> f64| of_mode.iter().map(|s| f(s)).sum::<f64>() / n;
        let online_seconds = mean(|s| s.online_seconds);
        let fom_seconds = mean(|s| s.fom_seconds);
        rows.push(ReportRow {
            modes: m,
            mean_projection_error: mean(|s| s.projection_error),
            mean_rom_error: mean(|s| s.rom_error),
            online_seconds,
            fom_seconds,
            savings_percent: 100.0 * (fom_seconds - online_seconds) / fom_seconds,
            speedup: fom_seconds / online_seconds,
        });
    }

    let result = OnlineResult {
        rows,
        samples,
        skipped_modes,
        test_parameters,
    };

    let sample_rows: Vec<String> = result
        .samples
        .iter()
        .map(|s| {
            format!(
                "{},{:.17e},{},{:.12e},{:.12e},{:.6e},{:.6e}",
                s.sample, s.mu, s.modes, s.rom_error, s.projection_error, s.online_seconds,
                s.fom_seconds
            )
        })
        .collect();
    io::write_csv(
        &out.join(files::SAMPLES),
        "sample,mu,modes,rom_error,projection_error,online_seconds,fom_seconds",
        &sample_rows,
    )?;
    std::fs::write(
        out.join(files::ROWS),
        serde_json::to_string_pretty(&result)? + "\n",
    )?;

    Ok(result)
}

/// Report stage: aggregate tables and VTK field exports.
pub fn report(config: &RunConfig, dump_matrix: bool) -> Result<()> {
    let out = &config.output_dir;
    let basis = io::read_basis(&out.join(files::BASIS))?;
    let rows_text = std::fs::read_to_string(out.join(files::ROWS))
        .context("online results missing: run the online stage first")?;
    let online_result: OnlineResult = serde_json::from_str(&rows_text)?;

    let error_rows: Vec<String> = online_result
        .rows
        .iter()
        .map(|r| {
            format!(
                "{},{:.12e},{:.12e}",
                r.modes, r.mean_projection_error, r.mean_rom_error
            )
        })
        .collect();
    io::write_csv(
        &out.join(files::ERRORS),
        "modes,mean_projection_error,mean_rom_error",
        &error_rows,
    )?;

    let decay_rows: Vec<String> = basis
        .eigenvalue_decay()
        .iter()
        .enumerate()
        .map(|(i, r)| format!("{},{:.12e}", i + 1, r))
        .collect();
    io::write_csv(&out.join(files::EIGDECAY), "mode,lambda_ratio", &decay_rows)?;

    let timing_rows: Vec<String> = online_result
        .rows
        .iter()
        .map(|r| {
            format!(
                "{},{:.6e},{:.6e},{:.3},{:.3}",
                r.modes, r.online_seconds, r.fom_seconds, r.savings_percent, r.speedup
            )
        })
        .collect();
    io::write_csv(
        &out.join(files::TIMING),
        "modes,online_seconds,fom_seconds,savings_percent,speedup",
        &timing_rows,
    )?;

    // Field exports for selected parameters: full order, reduced and the
    // pointwise absolute error, plus surrogate-boundary diagnostics.
    let mesh = BackgroundMesh::build_structured(config.bounds(), config.h)?;
    let shape = config.shape()?;
    let problem = ProblemData::unit_source(config.alpha);
    let kind = config.solver.kind();
    let modes = online_result
        .rows
        .iter()
        .map(|r| r.modes)
        .max()
        .unwrap_or(basis.n_modes())
        .min(basis.n_modes());
    let mut export_rows = Vec::new();
    for (k, &mu) in config.export_parameters().iter().enumerate() {
        let hole = shape.resolve(mu)?;
        let (map, system, fom) =
            solve_configuration(&mesh, &hole, &problem, config.quadrature_order, kind)?;
        let reduced = project(&system, &basis, modes)?;
        let rom = reconstruct(&basis, &solve_reduced(&reduced)?);
        let error: Vec<f64> = fom
            .values
            .iter()
            .zip(&rom)
            .map(|(a, b)| (a - b).abs())
            .collect();
        let fom_max = fom.values.iter().cloned().fold(0.0f64, f64::max);
        let err_max = error.iter().cloned().fold(0.0f64, f64::max);
        anyhow::ensure!(
            err_max <= fom_max,
            "error field exceeds the full order maximum at mu={mu}"
        );

        io::write_vtk_scalar(&out.join(format!("fom_{k}.vtk")), &mesh, "T", &fom.values)?;
        io::write_vtk_scalar(&out.join(format!("rom_{k}.vtk")), &mesh, "T", &rom)?;
        io::write_vtk_scalar(&out.join(format!("error_{k}.vtk")), &mesh, "abs_error", &error)?;
        io::write_surrogate_csv(&out.join(format!("surrogate_{k}.csv")), &mesh, &map)?;
        if dump_matrix && k == 0 {
            io::write_matrix_market(&out.join(files::MATRIX), &system.matrix)?;
        }
        export_rows.push(format!("{k},{mu:.17e},{modes}"));
    }
    io::write_csv(&out.join(files::EXPORTS), "index,mu,modes", &export_rows)?;

    Ok(())
}

/// Convergence command: disc-hole manufactured solution over the configured
/// mesh sizes; writes the (h, error, rate) table.
pub fn convergence(config: &RunConfig) -> Result<Vec<ConvergenceRow>> {
    let out = &config.output_dir;
    std::fs::create_dir_all(out)?;
    if config.h_list.is_empty() {
        bail!("h_list must not be empty");
    }
    let rows = sbm_core::solver::convergence_study(
        config.bounds(),
        &config.disc_hole(),
        &ManufacturedSolution::paraboloid(),
        &config.h_list,
        config.alpha,
        config.quadrature_order,
        config.solver.kind(),
    )?;
    let csv_rows: Vec<String> = rows
        .iter()
        .map(|r| match r.rate {
            Some(rate) => format!("{:.6e},{:.12e},{rate:.4}", r.h, r.l2_error),
            None => format!("{:.6e},{:.12e},", r.h, r.l2_error),
        })
        .collect();
    io::write_csv(&out.join(files::CONVERGENCE), "h,l2_error,rate", &csv_rows)?;
    Ok(rows)
}

/// Mass matrix for error evaluation against stored artifacts.
pub fn mass_for(config: &RunConfig) -> Result<CsrMatrix> {
    let mesh = BackgroundMesh::build_structured(config.bounds(), config.h)?;
    Ok(mesh.mass_matrix())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_map_preserves_order() {
        let out = parallel_map(100, |k| k * k);
        for (k, v) in out.iter().enumerate() {
            assert_eq!(*v, k * k);
        }
    }

    #[test]
    fn timed_returns_value_and_duration() {
        let (value, seconds) = timed(|| 21 * 2);
        assert_eq!(value, 42);
        assert!(seconds >= 0.0);
    }
}
