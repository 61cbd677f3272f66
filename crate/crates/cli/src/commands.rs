use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use myostrain::evaluation::{
    bland_altman, decorrelation_sweep, infarcted_segments, mean_distance_error, SweepConfig, INFARCT_SLS_THRESHOLD,
};
use myostrain::geometry::Level;
use myostrain::io::{
    encode_flow, encode_trajectories, ingest_external, read_summary_json, strain_csv_string, ExternalKind, Ingested,
    SummaryFile,
};
use myostrain::strain::{compute_sls_with, gls_curve, summarize};
use myostrain::tracking::{estimate_sequence_flow, track_points};
use serde_json::json;

use crate::args::{EvalArgs, ExternalFormat, PhantomArgs, StrainArgs, SweepArgs, TrackArgs, TrackMode, VerifyArgs};
use crate::config::{levels_flag, parse_ratios, RunConfig};
use crate::dataset::{open_stage, to_json_bytes, write_dataset, Dataset, GROUND_TRUTH};
use crate::error::{CliError, CliResult};
use crate::manifest::Manifest;

fn output_dir(explicit: Option<&PathBuf>, root: Option<&PathBuf>, default_name: String) -> PathBuf {
    match explicit {
        Some(p) => p.clone(),
        None => root.cloned().unwrap_or_else(|| PathBuf::from(".")).join(default_name),
    }
}

pub fn phantom(args: &PhantomArgs, out_root: Option<&PathBuf>) -> CliResult<()> {
    let mut config = RunConfig::load(args.config.as_deref())?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if args.deterministic {
        config.force_deterministic();
    }
    let seed = config.seed;
    let root = output_dir(args.out.as_ref(), out_root, format!("phantom-{seed}"));
    match &args.ratios {
        None => {
            write_dataset(&root, &config, seed)?;
            println!("wrote dataset {} ({} frames, seed {seed})", root.display(), config.simulation.motion.n_frames);
        }
        Some(list) => {
            for ratio in parse_ratios(list)? {
                let mut c = config.clone();
                c.simulation.scatterers.coherence_ratio = ratio;
                let dir = root.join(format!("ratio-{ratio}"));
                write_dataset(&dir, &c, seed)?;
                println!("wrote dataset {} (coherence ratio {ratio}, seed {seed})", dir.display());
            }
        }
    }
    Ok(())
}

pub fn verify(args: &VerifyArgs) -> CliResult<()> {
    let dataset = Dataset::open(&args.dataset)?;
    let frames = dataset.frames()?;
    let meshes = dataset.ground_truth_meshes()?;
    if meshes.iter().any(|m| m.vertex_count() != dataset.params.vertices_per_contour) {
        return Err(myostrain::Error::format("gt meshes", "vertex count differs from the manifest").into());
    }
    println!(
        "dataset ok: {} files, {} frames of {}x{}",
        dataset.manifest.files.len(),
        frames.len(),
        dataset.params.width,
        dataset.params.height
    );
    // Derived stages chain their hashes: motion -> strain -> eval.
    for name in stage_names(&dataset.root.join("motion"))? {
        let (_, motion_sha) = open_stage(&dataset.stage_dir("motion", &name), "motion", &dataset.sha256)?;
        println!("motion/{name} ok");
        check_downstream(&dataset, &name, &motion_sha)?;
    }
    if dataset.stage_dir("strain", GROUND_TRUTH).is_dir() {
        check_downstream(&dataset, GROUND_TRUTH, &dataset.sha256)?;
    }
    Ok(())
}

fn check_downstream(dataset: &Dataset, name: &str, motion_sha: &str) -> CliResult<()> {
    let strain_dir = dataset.stage_dir("strain", name);
    if !strain_dir.is_dir() {
        return Ok(());
    }
    let (_, strain_sha) = open_stage(&strain_dir, "strain", motion_sha)?;
    println!("strain/{name} ok");
    let eval_dir = dataset.stage_dir("eval", name);
    if eval_dir.is_dir() {
        open_stage(&eval_dir, "eval", &strain_sha)?;
        println!("eval/{name} ok");
    }
    Ok(())
}

fn stage_names(dir: &Path) -> CliResult<Vec<String>> {
    if !dir.is_dir() {
        return Ok(Vec::new());
    }
    let mut names: Vec<String> = std::fs::read_dir(dir)
        .map_err(|e| CliError::io(dir, e))?
        .filter_map(|e| e.ok())
        .filter(|e| e.path().is_dir())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    Ok(names)
}

pub fn track(args: &TrackArgs) -> CliResult<()> {
    let dataset = Dataset::open(&args.dataset)?;
    let config = match &args.config {
        Some(path) => RunConfig::load(Some(path))?,
        None => dataset.config.clone(),
    };
    let dir = dataset.stage_dir("motion", args.mode.name());
    let timing = dataset.timing();
    let (format, anchor) = match args.mode {
        TrackMode::BaselineFlow => ("flow", timing.ed_index),
        TrackMode::BaselineTrack => ("trajectory", timing.es_index),
        TrackMode::External => match args.format {
            Some(ExternalFormat::Flow) => ("flow", timing.ed_index),
            Some(ExternalFormat::Trajectory) => ("trajectory", timing.es_index),
            None => return Err(CliError::Config("--mode external needs --format flow|trajectory".into())),
        },
    };
    let mut manifest = Manifest::new(
        "motion",
        None,
        Some(dataset.sha256.clone()),
        json!({ "mode": args.mode.name(), "format": format, "anchor_frame": anchor }),
    );
    if args.mode != TrackMode::External && args.input.is_some() {
        return Err(CliError::Config("--input is only used with --mode external".into()));
    }
    match args.mode {
        TrackMode::BaselineFlow => {
            let frames = dataset.frames()?;
            let fields = estimate_sequence_flow(&frames, &config.tracker)?;
            for f in &fields {
                let name = format!("flow_{:04}_{:04}.flo", f.from_frame, f.to_frame);
                manifest.put(&dir, &name, &encode_flow(std::slice::from_ref(f)))?;
            }
            println!("wrote {} flow files to {}", fields.len(), dir.display());
        }
        TrackMode::BaselineTrack => {
            let frames = dataset.frames()?;
            let query = dataset.ground_truth_meshes()?.swap_remove(anchor);
            let traj = track_points(&frames, &query, &config.tracker)?;
            manifest.put(&dir, "trajectories.trj", &encode_trajectories(&traj))?;
            println!(
                "tracked {} points over {} frames from ES frame {anchor} into {}",
                traj.n_points,
                traj.n_frames,
                dir.display()
            );
        }
        TrackMode::External => {
            let input = args
                .input
                .as_ref()
                .ok_or_else(|| CliError::Config("--mode external needs --input <file>".into()))?;
            let kind = if format == "flow" { ExternalKind::Flow } else { ExternalKind::Trajectory };
            match ingest_external(input, kind, Some(dataset.shape()))? {
                Ingested::Flow(fields) => {
                    manifest.put(&dir, "flow.flo", &encode_flow(&fields))?;
                    println!("validated flow file: {} fields of {}x{}", fields.len(), dataset.params.width, dataset.params.height);
                }
                Ingested::Trajectories(traj) => {
                    let expected = 2 * dataset.params.vertices_per_contour;
                    if traj.n_points != expected {
                        return Err(myostrain::Error::format(
                            "trajectory header",
                            format!("{} points, the dataset mesh has {expected} (endo then epi)", traj.n_points),
                        )
                        .into());
                    }
                    manifest.put(&dir, "trajectories.trj", &encode_trajectories(&traj))?;
                    println!("validated trajectory file: {} points x {} frames", traj.n_points, traj.n_frames);
                }
            }
        }
    }
    manifest.write(&dir)?;
    Ok(())
}

pub fn strain(args: &StrainArgs) -> CliResult<()> {
    let dataset = Dataset::open(&args.dataset)?;
    let options = match &args.config {
        Some(path) => RunConfig::load(Some(path))?.strain,
        None => dataset.config.strain,
    };
    let (meshes, parent) = dataset.motion_meshes(&args.motion)?;
    let layout = dataset.layout(&meshes)?;
    let sls = compute_sls_with(&meshes, &layout, dataset.timing(), &options)?;
    let gls = gls_curve(&meshes, &sls, &options)?;
    let summary = SummaryFile::new(&summarize(&sls, &gls), dataset.timing());

    let dir = dataset.stage_dir("strain", &args.motion);
    let mut manifest = Manifest::new(
        "strain",
        None,
        Some(parent),
        json!({ "motion": args.motion, "options": options }),
    );
    manifest.put(&dir, "strain.csv", strain_csv_string(&sls).as_bytes())?;
    manifest.put(&dir, "summary.json", &to_json_bytes(&summary))?;
    manifest.write(&dir)?;
    println!("peak GLS {:.3} %; wrote {}", summary.peak_gls, dir.display());
    Ok(())
}

pub fn eval(args: &EvalArgs) -> CliResult<()> {
    let dataset = Dataset::open(&args.dataset)?;
    let levels = levels_flag(args.levels.as_deref())?.unwrap_or_else(|| Level::ALL.to_vec());
    let (meshes, motion_sha) = dataset.motion_meshes(&args.motion)?;
    let strain_dir = dataset.stage_dir("strain", &args.motion);
    let (_, strain_sha) = open_stage(&strain_dir, "strain", &motion_sha)?;
    let estimated = read_summary_json(&strain_dir.join("summary.json"))?;
    let reference = read_summary_json(&dataset.root.join("gt/summary.json"))?;

    let truth = dataset.ground_truth_meshes()?;
    let layout = dataset.layout(&truth)?;
    let distance = mean_distance_error(&meshes, &truth, Some(&layout))?;

    let mut per_frame = String::from("frame,mean_error_mm\n");
    for (t, e) in distance.per_frame_mean.iter().enumerate() {
        writeln!(per_frame, "{t},{e}").unwrap();
    }
    let mut per_segment = String::from("segment,mean_error_mm\n");
    for (label, e) in &distance.per_segment_mean {
        writeln!(per_segment, "{label},{e}").unwrap();
    }

    let mut agreement = String::from("level,bias,sd_of_differences,loa_low,loa_high,n_pairs\n");
    let pairs_for = |selected: &[Level]| -> Vec<(f64, f64)> {
        layout
            .segments()
            .iter()
            .enumerate()
            .filter(|(_, s)| selected.contains(&s.level))
            .map(|(k, _)| (reference.peak_systolic_sls[k], estimated.peak_systolic_sls[k]))
            .collect()
    };
    let mut groups: Vec<(String, Vec<Level>)> = levels.iter().map(|&l| (l.to_string(), vec![l])).collect();
    if levels.len() > 1 {
        let name = levels.iter().map(|l| l.name()).collect::<Vec<_>>().join("+");
        groups.push((name, levels.clone()));
    }
    for (name, selected) in &groups {
        let pairs = pairs_for(selected);
        if pairs.len() < 2 {
            continue;
        }
        let r = bland_altman(&pairs)?;
        writeln!(
            agreement,
            "{name},{},{},{},{},{}",
            r.bias, r.sd_of_differences, r.loa_low, r.loa_high, r.n_pairs
        )
        .unwrap();
    }

    let infarcted = infarcted_segments(&reference.segment_labels, &reference.peak_systolic_sls, INFARCT_SLS_THRESHOLD);
    let report = json!({
        "motion": args.motion,
        "levels": levels.iter().map(|l| l.name()).collect::<Vec<_>>(),
        "sequence_mean_error_mm": distance.sequence_mean,
        "sequence_sd_error_mm": distance.sequence_sd,
        "reference_peak_gls": reference.peak_gls,
        "estimated_peak_gls": estimated.peak_gls,
        "infarcted_segments": infarcted,
    });

    let dir = dataset.stage_dir("eval", &args.motion);
    let mut manifest = Manifest::new(
        "eval",
        None,
        Some(strain_sha),
        json!({ "motion": args.motion, "levels": levels.iter().map(|l| l.name()).collect::<Vec<_>>() }),
    );
    manifest.put(&dir, "distance.csv", per_frame.as_bytes())?;
    manifest.put(&dir, "segments.csv", per_segment.as_bytes())?;
    manifest.put(&dir, "agreement.csv", agreement.as_bytes())?;
    manifest.put(&dir, "report.json", &to_json_bytes(&report))?;
    manifest.write(&dir)?;
    println!(
        "mean distance error {:.4} ± {:.4} mm; wrote {}",
        distance.sequence_mean,
        distance.sequence_sd,
        dir.display()
    );
    Ok(())
}

pub fn sweep(args: &SweepArgs, out_root: Option<&PathBuf>) -> CliResult<()> {
    let mut config = RunConfig::load(args.config.as_deref())?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(n) = args.seeds {
        config.sweep.seeds = n;
    }
    if let Some(list) = &args.ratios {
        config.sweep.ratios = parse_ratios(list)?;
    }
    if let Some(levels) = levels_flag(args.levels.as_deref())? {
        config.sweep.levels = levels;
    }
    if let Some(mode) = &args.mode {
        config.sweep.mode = if mode == "flow" {
            myostrain::pipeline::TrackingMode::Flow
        } else {
            myostrain::pipeline::TrackingMode::Trajectory
        };
    }
    if args.deterministic {
        config.force_deterministic();
    }
    let seeds: Vec<u64> = (config.seed..config.seed + config.sweep.seeds as u64).collect();
    let sweep = SweepConfig {
        simulation: config.simulation.clone(),
        tracker: config.tracker.clone(),
        mode: config.sweep.mode,
        strain: config.strain,
        levels: config.sweep.levels.clone(),
    };
    let report = decorrelation_sweep(&sweep, &config.sweep.ratios, &seeds)?;

    let root = output_dir(args.out.as_ref(), out_root, format!("sweep-{}", config.seed));
    let mut manifest = Manifest::new(
        "sweep",
        Some(config.seed),
        None,
        json!({ "ratios": config.sweep.ratios, "seeds": seeds, "mode": config.sweep.mode.to_string() }),
    );
    manifest.put(&root, "config.toml", config.to_toml()?.as_bytes())?;
    manifest.put(&root, "rows.csv", report.rows_csv().as_bytes())?;
    manifest.put(&root, "cells.csv", report.cells_csv().as_bytes())?;
    manifest.put(&root, "agreement.csv", report.agreement_csv().as_bytes())?;
    manifest.put(&root, "gls_agreement.csv", report.gls_agreement_csv().as_bytes())?;
    manifest.put(&root, "long.csv", report.long_format_csv().as_bytes())?;
    manifest.write(&root)?;
    for cell in &report.cells {
        println!(
            "ratio {}: mean distance error {:.4} ± {:.4} mm over {} seeds",
            cell.ratio, cell.mean_error_mm, cell.sd_error_mm, cell.n_seeds
        );
    }
    println!("wrote {}", root.display());
    Ok(())
}
