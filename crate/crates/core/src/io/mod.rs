//! File formats: meshes, flow and trajectory records, scatterers, frames
//! and strain reports.

mod binary;
mod mesh;
mod pgm;
mod report;

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

pub use binary::{
    decode_flow, decode_scatterers, decode_trajectories, encode_flow, encode_scatterers, encode_trajectories,
    ingest_external, read_flow_file, read_scatterer_file, read_trajectory_file, write_flow_file,
    write_scatterer_file, write_trajectory_file, ExternalKind, Ingested, SequenceShape, FLOW_MAGIC,
    SCATTERER_MAGIC, SCATTERER_VERSION, TRAJECTORY_MAGIC,
};
pub use mesh::{read_mesh_json, write_mesh_json, MeshFile};
pub use pgm::{decode_pgm, encode_pgm, frame_file_name, read_pgm, write_pgm, FrameSidecar};
pub use report::{
    read_strain_csv, read_summary_json, strain_csv_string, write_strain_csv, write_summary_json, StrainRow,
    SummaryFile,
};

/// Path used while a file is being written.
pub fn partial_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".partial");
    path.with_file_name(name)
}

/// Writes `bytes` to `path.partial`, then renames it into place, so a
/// failed write never leaves a truncated file under the final name.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let tmp = partial_path(path);
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}
