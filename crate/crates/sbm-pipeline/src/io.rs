//! File formats: legacy ASCII VTK exports, CSV tables, Matrix Market dumps
//! and the binary snapshot/basis containers.
//!
//! Container layout (all little-endian):
//!   snapshots.bin: magic "SBMSNAP1", u64 n_dofs, u64 n_snapshots,
//!                  f64 mu[n_snapshots], f64 data in column-major order.
//!   basis.bin:     magic "SBMBAS01", u64 n_dofs, u64 n_modes,
//!                  u64 n_eigenvalues, f64 eigenvalues, f64 modes
//!                  in column-major order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};

use sbm_core::linalg::{CsrMatrix, DenseMat};
use sbm_core::mesh::BackgroundMesh;
use sbm_core::pod::{PodBasis, SnapshotSet};
use sbm_core::surrogate::SurrogateMap;

const SNAPSHOT_MAGIC: &[u8; 8] = b"SBMSNAP1";
const BASIS_MAGIC: &[u8; 8] = b"SBMBAS01";

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| {
        format!("creating {}", path.display())
    })?))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).with_context(|| {
        format!("opening {}", path.display())
    })?))
}

fn write_u64(w: &mut impl Write, v: u64) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn write_f64_slice(w: &mut impl Write, values: &[f64]) -> Result<()> {
    for v in values {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}

fn read_f64_vec(r: &mut impl Read, n: usize) -> Result<Vec<f64>> {
    let mut bytes = vec![0u8; 8 * n];
    r.read_exact(&mut bytes)?;
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

pub fn write_snapshots(path: &Path, snapshots: &SnapshotSet) -> Result<()> {
    let mut w = create(path)?;
    w.write_all(SNAPSHOT_MAGIC)?;
    write_u64(&mut w, snapshots.n_dofs() as u64)?;
    write_u64(&mut w, snapshots.len() as u64)?;
    write_f64_slice(&mut w, &snapshots.parameters)?;
    for column in &snapshots.columns {
        write_f64_slice(&mut w, column)?;
    }
    Ok(())
}

pub fn read_snapshots(path: &Path) -> Result<SnapshotSet> {
    let mut r = open(path)?;
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != SNAPSHOT_MAGIC {
        bail!("{} is not a snapshot container", path.display());
    }
    let n_dofs = read_u64(&mut r)? as usize;
    let n_snapshots = read_u64(&mut r)? as usize;
    let parameters = read_f64_vec(&mut r, n_snapshots)?;
    let mut set = SnapshotSet::new();
    for &mu in &parameters {
        set.push(mu, read_f64_vec(&mut r, n_dofs)?);
    }
    Ok(set)
}

pub fn write_basis(path: &Path, basis: &PodBasis) -> Result<()> {
    let mut w = create(path)?;
    w.write_all(BASIS_MAGIC)?;
    write_u64(&mut w, basis.n_dofs() as u64)?;
    write_u64(&mut w, basis.n_modes() as u64)?;
    write_u64(&mut w, basis.eigenvalues.len() as u64)?;
    write_f64_slice(&mut w, &basis.eigenvalues)?;
    for k in 0..basis.n_modes() {
        write_f64_slice(&mut w, &basis.modes.column(k))?;
    }
    Ok(())
}

pub fn read_basis(path: &Path) -> Result<PodBasis> {
    let mut r = open(path)?;
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != BASIS_MAGIC {
        bail!("{} is not a basis container", path.display());
    }
    let n_dofs = read_u64(&mut r)? as usize;
    let n_modes = read_u64(&mut r)? as usize;
    let n_eig = read_u64(&mut r)? as usize;
    let eigenvalues = read_f64_vec(&mut r, n_eig)?;
    let mut modes = DenseMat::zeros(n_dofs, n_modes);
    for k in 0..n_modes {
        let column = read_f64_vec(&mut r, n_dofs)?;
        for (i, v) in column.into_iter().enumerate() {
            *modes.at_mut(i, k) = v;
        }
    }
    Ok(PodBasis { modes, eigenvalues })
}

/// Legacy ASCII VTK unstructured grid of the background triangulation.
pub fn write_vtk_mesh(path: &Path, mesh: &BackgroundMesh) -> Result<()> {
    let mut w = create(path)?;
    write_vtk_header(&mut w, mesh)?;
    Ok(())
}

/// Mesh plus one nodal scalar field.
pub fn write_vtk_scalar(
    path: &Path,
    mesh: &BackgroundMesh,
    name: &str,
    values: &[f64],
) -> Result<()> {
    anyhow::ensure!(values.len() == mesh.n_nodes(), "field size mismatch");
    let mut w = create(path)?;
    write_vtk_header(&mut w, mesh)?;
    writeln!(w, "POINT_DATA {}", mesh.n_nodes())?;
    writeln!(w, "SCALARS {name} double 1")?;
    writeln!(w, "LOOKUP_TABLE default")?;
    for v in values {
        writeln!(w, "{v:.12e}")?;
    }
    Ok(())
}

fn write_vtk_header(w: &mut impl Write, mesh: &BackgroundMesh) -> Result<()> {
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "background mesh")?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(w, "POINTS {} double", mesh.n_nodes())?;
    for p in &mesh.nodes {
        writeln!(w, "{:.12e} {:.12e} 0.0", p.x, p.y)?;
    }
    writeln!(w, "CELLS {} {}", mesh.elements.len(), 4 * mesh.elements.len())?;
    for e in &mesh.elements {
        writeln!(w, "3 {} {} {}", e.nodes[0], e.nodes[1], e.nodes[2])?;
    }
    writeln!(w, "CELL_TYPES {}", mesh.elements.len())?;
    for _ in &mesh.elements {
        writeln!(w, "5")?;
    }
    Ok(())
}

/// Matrix Market coordinate format, 1-based indices.
pub fn write_matrix_market(path: &Path, matrix: &CsrMatrix) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(w, "{} {} {}", matrix.n_rows, matrix.n_cols, matrix.nnz())?;
    for i in 0..matrix.n_rows {
        let (cols, vals) = matrix.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            writeln!(w, "{} {} {:.16e}", i + 1, j + 1, v)?;
        }
    }
    Ok(())
}

/// Surrogate boundary diagnostics: one row per edge.
pub fn write_surrogate_csv(path: &Path, mesh: &BackgroundMesh, map: &SurrogateMap) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "edge,node_a,node_b,ax,ay,bx,by,nx,ny,mean_dist,h_perp")?;
    for (k, e) in map.edges.iter().enumerate() {
        let a = mesh.nodes[e.nodes.0];
        let b = mesh.nodes[e.nodes.1];
        let mean_dist: f64 =
            e.quad.iter().map(|q| q.frame.dist()).sum::<f64>() / e.quad.len() as f64;
        writeln!(
            w,
            "{k},{},{},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}",
            e.nodes.0, e.nodes.1, a.x, a.y, b.x, b.y, e.normal.x, e.normal.y, mean_dist, e.h_perp
        )?;
    }
    Ok(())
}

/// Generic CSV writer: fixed header plus preformatted rows.
pub fn write_csv(path: &Path, header: &str, rows: &[String]) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "{header}")?;
    for row in rows {
        writeln!(w, "{row}")?;
    }
    Ok(())
}
