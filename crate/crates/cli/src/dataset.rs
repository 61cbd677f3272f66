//! On-disk dataset layout.
//!
//! ```text
//! <root>/manifest.json            hashes of everything below
//! <root>/config.toml              resolved run configuration
//! <root>/frames/frame_0000.pgm    B-mode frames, plus frames.json sidecar
//! <root>/scatterers/0000.sct      scatterer fields
//! <root>/gt/mesh_0000.json        ground-truth meshes
//! <root>/gt/trajectories.trj      mid-wall trajectories (ED anchored)
//! <root>/gt/strain.csv            reference strain, with gt/summary.json
//! <root>/motion/<name>/           motion estimates
//! <root>/strain/<name>/           strain from a motion estimate
//! <root>/eval/<name>/             evaluation reports
//! ```

use std::path::{Path, PathBuf};

use myostrain::geometry::{build_segment_layout, MyocardialMesh, SegmentLayout};
use myostrain::io::{
    decode_pgm, encode_pgm, encode_scatterers, encode_trajectories, frame_file_name, read_flow_file, read_mesh_json,
    read_trajectory_file, strain_csv_string, write_mesh_json, FrameSidecar, SequenceShape, SummaryFile,
};
use myostrain::pipeline::simulate;
use myostrain::speckle::BModeFrame;
use myostrain::strain::{summarize, CardiacTiming};
use myostrain::tracking::propagate_mesh_flow;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::manifest::Manifest;

pub const CONFIG_FILE: &str = "config.toml";
pub const SIDECAR_FILE: &str = "frames/frames.json";
pub const GROUND_TRUTH: &str = "ground-truth";

/// Dataset facts recorded in the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetParams {
    pub n_frames: usize,
    pub ed_index: usize,
    pub es_index: usize,
    pub width: usize,
    pub height: usize,
    pub pixel_pitch: f64,
    pub vertices_per_contour: usize,
    pub apex_index: usize,
    pub view: String,
    pub coherence_ratio: f64,
}

pub fn mesh_path(t: usize) -> String {
    format!("gt/mesh_{t:04}.json")
}

pub fn to_json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("serializable");
    bytes.push(b'\n');
    bytes
}

/// Simulates `config` with `seed` and writes the dataset; returns the
/// manifest hash.
pub fn write_dataset(root: &Path, config: &RunConfig, seed: u64) -> CliResult<String> {
    let case = simulate(&config.simulation, seed)?;
    let timing = case.ground_truth.timing;
    let grid = config.simulation.render.grid;
    let ed = &case.ground_truth.meshes[timing.ed_index];
    let params = DatasetParams {
        n_frames: case.frames.len(),
        ed_index: timing.ed_index,
        es_index: timing.es_index,
        width: grid.width,
        height: grid.height,
        pixel_pitch: grid.pixel_pitch,
        vertices_per_contour: ed.vertex_count(),
        apex_index: ed.apex_index(),
        view: config.simulation.geometry.view.to_string(),
        coherence_ratio: config.simulation.scatterers.coherence_ratio,
    };
    let mut manifest = Manifest::new(
        "dataset",
        Some(seed),
        None,
        serde_json::to_value(&params).expect("serializable"),
    );
    let mut stored = config.clone();
    stored.seed = seed;
    manifest.put(root, CONFIG_FILE, stored.to_toml()?.as_bytes())?;

    for frame in &case.frames {
        let name = format!("frames/{}", frame_file_name(frame.frame_index));
        manifest.put(root, &name, &encode_pgm(frame))?;
    }
    let sidecar = FrameSidecar {
        width: grid.width,
        height: grid.height,
        pixel_pitch: grid.pixel_pitch,
        grid_origin: [0.0, 0.0],
        n_frames: case.frames.len(),
    };
    manifest.put(root, SIDECAR_FILE, &to_json_bytes(&sidecar))?;
    for field in &case.scatterers {
        manifest.put(root, &format!("scatterers/{:04}.sct", field.frame_index), &encode_scatterers(field))?;
    }
    for (t, mesh) in case.ground_truth.meshes.iter().enumerate() {
        let name = mesh_path(t);
        write_mesh_json(&root.join(&name), mesh)?;
        manifest.record(root, &name)?;
    }
    manifest.put(root, "gt/trajectories.trj", &encode_trajectories(&case.ground_truth.trajectories))?;
    let gt = &case.ground_truth;
    manifest.put(root, "gt/strain.csv", strain_csv_string(&gt.reference_sls).as_bytes())?;
    let summary = SummaryFile::new(&summarize(&gt.reference_sls, &gt.reference_gls), timing);
    manifest.put(root, "gt/summary.json", &to_json_bytes(&summary))?;
    manifest.write(root)
}

/// A dataset whose files have been checked against its manifest.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub root: PathBuf,
    pub manifest: Manifest,
    pub sha256: String,
    pub params: DatasetParams,
    pub config: RunConfig,
}

impl Dataset {
    pub fn open(root: &Path) -> CliResult<Self> {
        let (manifest, sha256) = Manifest::read(root)?;
        manifest.expect_kind("dataset", root)?;
        manifest.verify_files(root)?;
        let params: DatasetParams = serde_json::from_value(manifest.parameters.clone())
            .map_err(|e| myostrain::Error::format("dataset manifest parameters", e.to_string()))?;
        let config_path = root.join(CONFIG_FILE);
        let text = std::fs::read_to_string(&config_path).map_err(|e| CliError::io(&config_path, e))?;
        let config = RunConfig::parse(&text)?;
        Ok(Self {
            root: root.to_path_buf(),
            manifest,
            sha256,
            params,
            config,
        })
    }

    pub fn timing(&self) -> CardiacTiming {
        CardiacTiming {
            ed_index: self.params.ed_index,
            es_index: self.params.es_index,
        }
    }

    pub fn shape(&self) -> SequenceShape {
        SequenceShape {
            width: self.params.width,
            height: self.params.height,
            n_frames: self.params.n_frames,
        }
    }

    pub fn frames(&self) -> CliResult<Vec<BModeFrame>> {
        (0..self.params.n_frames)
            .map(|t| {
                let path = self.root.join("frames").join(frame_file_name(t));
                let bytes = std::fs::read(&path).map_err(|e| CliError::io(&path, e))?;
                let frame = decode_pgm(&bytes, self.params.pixel_pitch, t)?;
                if frame.width != self.params.width || frame.height != self.params.height {
                    return Err(myostrain::Error::format(
                        path.display().to_string(),
                        format!(
                            "{}x{} frame in a {}x{} dataset",
                            frame.width, frame.height, self.params.width, self.params.height
                        ),
                    )
                    .into());
                }
                Ok(frame)
            })
            .collect()
    }

    pub fn ground_truth_meshes(&self) -> CliResult<Vec<MyocardialMesh<f64>>> {
        (0..self.params.n_frames)
            .map(|t| Ok(read_mesh_json(&self.root.join(mesh_path(t)))?))
            .collect()
    }

    pub fn layout(&self, meshes: &[MyocardialMesh<f64>]) -> CliResult<SegmentLayout> {
        let ed = &meshes[self.params.ed_index];
        let view = self.config.simulation.geometry.view;
        Ok(build_segment_layout(ed.midline().points(), ed.apex_index(), view)?)
    }

    pub fn stage_dir(&self, stage: &str, name: &str) -> PathBuf {
        self.root.join(stage).join(name)
    }

    /// Meshes of a motion estimate and the hash later stages derive from.
    pub fn motion_meshes(&self, name: &str) -> CliResult<(Vec<MyocardialMesh<f64>>, String)> {
        let truth = self.ground_truth_meshes()?;
        if name == GROUND_TRUTH {
            return Ok((truth, self.sha256.clone()));
        }
        let dir = self.stage_dir("motion", name);
        let (manifest, sha) = open_stage(&dir, "motion", &self.sha256)?;
        let format = manifest.parameters["format"].as_str().unwrap_or_default();
        let meshes = match format {
            "flow" => {
                let mut fields = Vec::new();
                for relative in manifest.files.keys() {
                    fields.extend(read_flow_file(&dir.join(relative))?);
                }
                let anchor = &truth[self.params.ed_index];
                propagate_mesh_flow(anchor, &fields, self.params.n_frames)?
            }
            "trajectory" => {
                let relative = manifest.files.keys().next().cloned().unwrap_or_default();
                let traj = read_trajectory_file(&dir.join(relative))?;
                let expected = 2 * self.params.vertices_per_contour;
                if traj.n_points != expected {
                    return Err(myostrain::Error::format(
                        "trajectory header",
                        format!("{} points, the dataset mesh has {expected} (endo then epi)", traj.n_points),
                    )
                    .into());
                }
                traj.to_meshes(self.params.apex_index)?
            }
            other => {
                return Err(myostrain::Error::format(
                    dir.join("manifest.json").display().to_string(),
                    format!("unknown motion format `{other}`"),
                )
                .into())
            }
        };
        Ok((meshes, sha))
    }
}

/// Reads a stage manifest and checks its files and its parent hash.
pub fn open_stage(dir: &Path, kind: &str, parent: &str) -> CliResult<(Manifest, String)> {
    if !dir.join("manifest.json").is_file() {
        return Err(CliError::io(
            dir.join("manifest.json"),
            std::io::Error::new(std::io::ErrorKind::NotFound, format!("no {kind} output; run that stage first")),
        ));
    }
    let (manifest, sha) = Manifest::read(dir)?;
    manifest.expect_kind(kind, dir)?;
    manifest.expect_parent(parent, dir)?;
    manifest.verify_files(dir)?;
    Ok((manifest, sha))
}
