use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use myostrain::io::{read_trajectory_file, write_flow_file, write_trajectory_file};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_myostrain"));
    c.env_remove("MYOSTRAIN_OUT");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str]) -> (i32, String) {
    let out = run(args);
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stderr).into_owned())
}

fn config(dir: &Path, n_frames: usize, es: usize) -> PathBuf {
    let path = dir.join("config.toml");
    fs::write(
        &path,
        format!("[simulation.motion]\nn_frames = {n_frames}\nes_index = {es}\n"),
    )
    .unwrap();
    path
}

fn dataset(dir: &Path, name: &str, n_frames: usize, es: usize, seed: u64) -> PathBuf {
    let cfg = config(dir, n_frames, es);
    let out = dir.join(name);
    ok(&["phantom", "--config", s(&cfg), "--seed", &seed.to_string(), "--out", s(&out), "--deterministic"]);
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn files_under(root: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push(p);
            }
        }
    }
    out.sort();
    out
}

#[test]
fn sixteen_frame_dataset_verifies() {
    let dir = tempfile::tempdir().unwrap();
    let ds = dataset(dir.path(), "ds", 16, 6, 1);
    let msg = ok(&["verify", s(&ds)]);
    assert!(msg.contains("16 frames"), "{msg}");
    assert_eq!(fs::read_dir(ds.join("frames")).unwrap().count(), 17);
    assert!(files_under(&ds).iter().all(|p| p.extension().is_none_or(|e| e != "partial")));
}

#[test]
fn same_seed_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dataset(dir.path(), "a", 4, 2, 5);
    let b = dataset(dir.path(), "b", 4, 2, 5);
    let fa = files_under(&a);
    let fb = files_under(&b);
    assert_eq!(fa.len(), fb.len());
    for (x, y) in fa.iter().zip(&fb) {
        assert_eq!(x.strip_prefix(&a).unwrap(), y.strip_prefix(&b).unwrap());
        assert_eq!(fs::read(x).unwrap(), fs::read(y).unwrap(), "{}", x.display());
    }
}

#[test]
fn out_root_comes_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), 4, 2);
    let out = bin()
        .args(["phantom", "--config", s(&cfg), "--seed", "9"])
        .env("MYOSTRAIN_OUT", dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(dir.path().join("phantom-9/manifest.json").is_file());
}

#[test]
fn two_frame_flow_writes_two_files() {
    let dir = tempfile::tempdir().unwrap();
    let ds = dataset(dir.path(), "ds", 2, 1, 2);
    ok(&["track", s(&ds), "--mode", "baseline-flow"]);
    let mut names: Vec<String> = fs::read_dir(ds.join("motion/baseline-flow"))
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".flo"))
        .collect();
    names.sort();
    assert_eq!(names, ["flow_0000_0001.flo", "flow_0001_0000.flo"]);
}

#[test]
fn baseline_track_anchors_at_es() {
    let dir = tempfile::tempdir().unwrap();
    let ds = dataset(dir.path(), "ds", 8, 3, 4);
    let msg = ok(&["track", s(&ds), "--mode", "baseline-track"]);
    assert!(msg.contains("ES frame 3"), "{msg}");
    let traj = read_trajectory_file(&ds.join("motion/baseline-track/trajectories.trj")).unwrap();
    assert_eq!(traj.reference_frame, 3);
    assert_eq!(traj.n_frames, 8);
}

#[test]
fn external_trajectories_are_validated() {
    let dir = tempfile::tempdir().unwrap();
    let ds = dataset(dir.path(), "ds", 4, 2, 6);
    let meshes: Vec<_> = (0..4)
        .map(|t| myostrain::io::read_mesh_json(&ds.join(format!("gt/mesh_{t:04}.json"))).unwrap())
        .collect();
    let traj = myostrain::tracking::PointTrajectories::from_meshes(&meshes, 2).unwrap();
    let file = dir.path().join("external.trj");
    write_trajectory_file(&file, &traj).unwrap();
    let msg = ok(&["track", s(&ds), "--mode", "external", "--format", "trajectory", "--input", s(&file)]);
    assert!(msg.contains(&format!("{} points x 4 frames", traj.n_points)), "{msg}");

    // Flow content declared as trajectories is a format error.
    let flow = dir.path().join("external.flo");
    let field = myostrain::tracking::DisplacementField::zeros(128, 128, 0.25, 0, 1).unwrap();
    write_flow_file(&flow, &[field]).unwrap();
    let (rc, err) = code(&["track", s(&ds), "--mode", "external", "--format", "trajectory", "--input", s(&flow)]);
    assert_eq!(rc, 5, "{err}");
}

#[test]
fn ground_truth_self_evaluation_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let ds = dataset(dir.path(), "ds", 8, 3, 7);
    ok(&["strain", s(&ds), "--motion", "ground-truth"]);
    assert_eq!(
        fs::read(ds.join("strain/ground-truth/strain.csv")).unwrap(),
        fs::read(ds.join("gt/strain.csv")).unwrap()
    );
    ok(&["eval", s(&ds), "--motion", "ground-truth"]);
    let report: serde_json::Value =
        serde_json::from_slice(&fs::read(ds.join("eval/ground-truth/report.json")).unwrap()).unwrap();
    assert_eq!(report["sequence_mean_error_mm"], 0.0);
}

#[test]
fn levels_flag_restricts_agreement() {
    let dir = tempfile::tempdir().unwrap();
    let ds = dataset(dir.path(), "ds", 8, 3, 8);
    ok(&["track", s(&ds), "--mode", "baseline-track"]);
    ok(&["strain", s(&ds), "--motion", "baseline-track"]);
    ok(&["eval", s(&ds), "--motion", "baseline-track", "--levels", "basal,mid"]);
    let csv = fs::read_to_string(ds.join("eval/baseline-track/agreement.csv")).unwrap();
    let levels: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(levels, ["basal", "mid", "basal+mid"]);
    assert!(csv.lines().last().unwrap().ends_with(",4"));
}

#[test]
fn regenerated_dataset_marks_motion_stale() {
    let dir = tempfile::tempdir().unwrap();
    let ds = dataset(dir.path(), "ds", 4, 2, 10);
    ok(&["track", s(&ds), "--mode", "baseline-track"]);
    ok(&["strain", s(&ds)]);
    let cfg = config(dir.path(), 4, 2);
    ok(&["phantom", "--config", s(&cfg), "--seed", "11", "--out", s(&ds)]);
    let (rc, err) = code(&["strain", s(&ds)]);
    assert_eq!(rc, 6, "{err}");
    let (rc, _) = code(&["verify", s(&ds)]);
    assert_eq!(rc, 6);
}

#[test]
fn tampered_frame_fails_verification() {
    let dir = tempfile::tempdir().unwrap();
    let ds = dataset(dir.path(), "ds", 4, 2, 12);
    let frame = ds.join("frames/frame_0001.pgm");
    let mut bytes = fs::read(&frame).unwrap();
    let last = bytes.len() - 1;
    bytes[last] ^= 1;
    fs::write(&frame, bytes).unwrap();
    let (rc, err) = code(&["verify", s(&ds)]);
    assert_eq!(rc, 6);
    assert!(err.contains("frame_0001.pgm"), "{err}");
}

#[test]
fn error_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "[simulation.scatterers]\ncoherence_ratio = 2.0\n").unwrap();
    let (rc, err) = code(&["phantom", "--config", s(&bad), "--out", s(&dir.path().join("x"))]);
    assert_eq!(rc, 3);
    assert!(err.contains("coherence_ratio"), "{err}");

    let blocker = dir.path().join("file");
    fs::write(&blocker, "").unwrap();
    let cfg = config(dir.path(), 4, 2);
    let (rc, _) = code(&["phantom", "--config", s(&cfg), "--out", s(&blocker.join("ds"))]);
    assert_eq!(rc, 4);

    let (rc, _) = code(&["verify", s(&dir.path().join("missing"))]);
    assert_eq!(rc, 4);
}

#[test]
fn tracking_is_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    let ds = dataset(dir.path(), "ds", 4, 2, 13);
    ok(&["track", s(&ds), "--mode", "baseline-flow"]);
    let first: Vec<Vec<u8>> = files_under(&ds.join("motion")).iter().map(|p| fs::read(p).unwrap()).collect();
    ok(&["track", s(&ds), "--mode", "baseline-flow", "--jobs", "1"]);
    let second: Vec<Vec<u8>> = files_under(&ds.join("motion")).iter().map(|p| fs::read(p).unwrap()).collect();
    assert_eq!(first, second);
}

#[test]
fn ratio_datasets_and_sweep_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), 4, 2);
    let out = dir.path().join("sets");
    ok(&["phantom", "--config", s(&cfg), "--seed", "1", "--out", s(&out), "--ratios", "0.9,0.7,0.6,0.5"]);
    for r in ["0.9", "0.7", "0.6", "0.5"] {
        ok(&["verify", s(&out.join(format!("ratio-{r}")))]);
    }

    let sweep = dir.path().join("sweep");
    ok(&["sweep", "--config", s(&cfg), "--seeds", "2", "--ratios", "0.9,0.7,0.6,0.5", "--out", s(&sweep)]);
    let agreement = fs::read_to_string(sweep.join("agreement.csv")).unwrap();
    assert_eq!(agreement.lines().count() - 1, 4 * 3);
    let rows = fs::read_to_string(sweep.join("rows.csv")).unwrap();
    assert_eq!(rows.lines().count() - 1, 4 * 2);

    let basal_mid = dir.path().join("sweep-bm");
    ok(&["sweep", "--config", s(&cfg), "--seeds", "2", "--ratios", "0.9", "--levels", "basal,mid", "--out", s(&basal_mid)]);
    let agreement = fs::read_to_string(basal_mid.join("agreement.csv")).unwrap();
    assert_eq!(agreement.lines().count() - 1, 2);
}
