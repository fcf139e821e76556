//! `track`: run the tracker over a frame directory and a MOT detection
//! file, writing MOT results plus a run manifest.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use cbyte::mot::{parse_mot, sequence_from_snapshots, write_mot, MotSequence};
use cbyte::tracker::{Tracker, TrackerConfig};
use cbyte::types::Detection;

use crate::config::apply_tracker_config;
use crate::frames::{list_frames, load_gray};
use crate::io_util::atomic_write;
use crate::manifest::RunManifest;

pub struct TrackArgs {
    pub frames: PathBuf,
    pub dets: PathBuf,
    pub out: PathBuf,
    pub config: Option<PathBuf>,
    pub no_cmc: bool,
    pub seed: u64,
}

/// Detection scores are expected in [0, 1]; raw detector outputs (e.g. SVM
/// margins) are min-max normalized into that range so the score split stays
/// meaningful.
fn normalize_scores(seq: &mut MotSequence) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for r in seq.records() {
        lo = lo.min(r.score);
        hi = hi.max(r.score);
    }
    if seq.record_count() == 0 || (lo >= 0.0 && hi <= 1.0) {
        return;
    }
    log::info!("detection scores span [{lo:.3}, {hi:.3}]; min-max normalizing into [0, 1]");
    let span = if hi > lo { hi - lo } else { 1.0 };
    for records in seq.frames.values_mut() {
        for r in records {
            r.score = (r.score - lo) / span;
        }
    }
}

pub fn run(args: &TrackArgs) -> Result<()> {
    let mut config = TrackerConfig::<f64>::default();
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config file {path:?}"))?;
        apply_tracker_config(&mut config, &text)?;
    }
    if args.no_cmc {
        config.enable_cmc = false;
    }

    let det_text = std::fs::read_to_string(&args.dets)
        .with_context(|| format!("reading detections file {:?}", args.dets))?;
    let mut det_seq = parse_mot(&det_text)?;
    normalize_scores(&mut det_seq);
    let detections = det_seq.detections_by_frame::<f64>();

    let frame_files = list_frames(&args.frames)?;
    for det_frame in detections.keys() {
        if !frame_files.contains_key(det_frame) {
            bail!(
                "detections reference frame {det_frame}, but no such frame image exists in {:?}",
                args.frames
            );
        }
    }

    let mut tracker = Tracker::new(config.clone(), args.seed)?;
    let empty = Vec::new();
    for (&frame_no, path) in &frame_files {
        let frame = load_gray(path, u64::from(frame_no))?;
        let dets: &Vec<Detection<f64>> = detections.get(&frame_no).unwrap_or(&empty);
        tracker.step(&frame, dets)?;
    }

    let results = sequence_from_snapshots(tracker.flush());
    atomic_write(&args.out, write_mot(&results).as_bytes())?;

    let manifest = RunManifest {
        sequence: sequence_name(&args.frames),
        frames_dir: args.frames.display().to_string(),
        detections_file: args.dets.display().to_string(),
        results_file: args.out.display().to_string(),
        frame_count: frame_files.len(),
        seed: args.seed,
        config: &config,
        timings: tracker.timings(),
    };
    manifest.write(&manifest_path(&args.out))?;

    log::info!(
        "tracked {} frames, {} result records -> {:?}",
        frame_files.len(),
        results.record_count(),
        args.out
    );
    Ok(())
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest");
    out.with_file_name(name)
}

fn sequence_name(frames: &Path) -> String {
    frames
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| frames.display().to_string())
}
