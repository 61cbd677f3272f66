use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{MyocardialMesh, Point2D};
use crate::io::{read_bytes, write_atomic};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshFile {
    pub endo: Vec<[f64; 2]>,
    pub epi: Vec<[f64; 2]>,
    pub apex_index: usize,
    pub frame_index: usize,
    pub units: String,
}

impl MeshFile {
    pub fn from_mesh(mesh: &MyocardialMesh<f64>) -> Self {
        let conv = |pts: &[Point2D<f64>]| pts.iter().map(|p| [p.x, p.y]).collect();
        Self {
            endo: conv(mesh.endo().points()),
            epi: conv(mesh.epi().points()),
            apex_index: mesh.apex_index(),
            frame_index: mesh.frame_index,
            units: "mm".into(),
        }
    }

    pub fn to_mesh(&self) -> Result<MyocardialMesh<f64>> {
        if self.units != "mm" {
            return Err(Error::format(
                format!("mesh frame {}", self.frame_index),
                format!("units must be \"mm\", got {:?}", self.units),
            ));
        }
        let conv = |pts: &[[f64; 2]]| pts.iter().map(|p| Point2D::new(p[0], p[1])).collect();
        MyocardialMesh::from_estimate(conv(&self.endo), conv(&self.epi), self.apex_index, self.frame_index)
            .map_err(|e| Error::format(format!("mesh frame {}", self.frame_index), e.to_string()))
    }
}

pub fn write_mesh_json(path: &Path, mesh: &MyocardialMesh<f64>) -> Result<()> {
    let mut text = serde_json::to_vec_pretty(&MeshFile::from_mesh(mesh)).expect("mesh serializes");
    text.push(b'\n');
    write_atomic(path, &text)
}

pub fn read_mesh_json(path: &Path) -> Result<MyocardialMesh<f64>> {
    let bytes = read_bytes(path)?;
    let file: MeshFile = serde_json::from_slice(&bytes)
        .map_err(|e| Error::format(path.display().to_string(), e.to_string()))?;
    file.to_mesh()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phantom::{generate_ed_mesh, GeometryConfig};

    #[test]
    fn mesh_round_trip_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        let mesh = generate_ed_mesh(&GeometryConfig::default(), 3).unwrap();
        write_mesh_json(&path, &mesh).unwrap();
        let first = std::fs::read(&path).unwrap();
        let back = read_mesh_json(&path).unwrap();
        assert_eq!(back, mesh);
        write_mesh_json(&path, &back).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), first);
    }

    #[test]
    fn rejects_other_units() {
        let mut f = MeshFile::from_mesh(&generate_ed_mesh(&GeometryConfig::default(), 0).unwrap());
        f.units = "cm".into();
        assert!(matches!(f.to_mesh(), Err(Error::Format { .. })));
    }
}
