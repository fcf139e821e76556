//! `synth`: generate a synthetic sequence to disk; frames as numbered PGMs
//! plus `gt.txt`, `det.txt`, and `planted_motion.txt` (the per-frame 2x3
//! camera matrices, row-major, six reals per line).

use std::path::PathBuf;

use anyhow::{Context, Result};
use cbyte::mot::write_mot;
use cbyte::synth::synth_sequence;

use crate::config::parse_synth_config;
use crate::frames::save_pgm;
use crate::io_util::atomic_write;

pub struct SynthArgs {
    pub config: PathBuf,
    pub out: PathBuf,
}

pub fn run(args: &SynthArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.config)
        .with_context(|| format!("reading synth config {:?}", args.config))?;
    let cfg = parse_synth_config(&text)?;
    let seq = synth_sequence::<f64>(&cfg)?;

    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating output directory {:?}", args.out))?;
    for frame in &seq.frames {
        let path = args.out.join(format!("{:06}.pgm", frame.frame_index()));
        save_pgm(&path, frame)?;
    }
    atomic_write(&args.out.join("gt.txt"), write_mot(&seq.gt).as_bytes())?;
    atomic_write(&args.out.join("det.txt"), write_mot(&seq.detections).as_bytes())?;

    let mut motion = String::new();
    for t in &seq.camera_motion {
        let m = t.to_2x3();
        motion.push_str(&format!(
            "{} {} {} {} {} {}\n",
            m[0][0], m[0][1], m[0][2], m[1][0], m[1][1], m[1][2]
        ));
    }
    atomic_write(&args.out.join("planted_motion.txt"), motion.as_bytes())?;

    log::info!(
        "wrote {} frames, {} gt records, {} detections to {:?}",
        seq.frames.len(),
        seq.gt.record_count(),
        seq.detections.record_count(),
        args.out
    );
    Ok(())
}
