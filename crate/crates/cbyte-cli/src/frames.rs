//! Frame directory handling: numbered grayscale images in, 8-bit portable
//! graymaps out.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use cbyte::types::GrayFrame;

use crate::io_util::atomic_write;

const FRAME_EXTENSIONS: [&str; 8] = ["pgm", "png", "jpg", "jpeg", "bmp", "ppm", "pnm", "tif"];

/// Maps frame numbers (taken from numeric file stems) to image paths.
pub fn list_frames(dir: &Path) -> Result<BTreeMap<u32, PathBuf>> {
    let mut frames = BTreeMap::new();
    let entries =
        std::fs::read_dir(dir).with_context(|| format!("reading frame directory {dir:?}"))?;
    for entry in entries {
        let path = entry?.path();
        if !path.is_file() {
            continue;
        }
        let Some(ext) = path.extension().and_then(|e| e.to_str()) else { continue };
        if !FRAME_EXTENSIONS.contains(&ext.to_ascii_lowercase().as_str()) {
            continue;
        }
        let Some(stem) = path.file_stem().and_then(|s| s.to_str()) else { continue };
        let Ok(number) = stem.parse::<u32>() else { continue };
        if frames.insert(number, path.clone()).is_some() {
            bail!("duplicate frame number {number} in {dir:?}");
        }
    }
    if frames.is_empty() {
        bail!("no numbered frame images found in {dir:?}");
    }
    Ok(frames)
}

/// Loads one frame as normalized grayscale.
pub fn load_gray(path: &Path, frame_index: u64) -> Result<GrayFrame<f64>> {
    let img = image::open(path).with_context(|| format!("decoding frame {path:?}"))?.to_luma8();
    let (w, h) = img.dimensions();
    GrayFrame::from_u8(w as usize, h as usize, frame_index, img.as_raw())
        .with_context(|| format!("frame {path:?}"))
}

/// Writes a frame as a binary 8-bit PGM (atomically).
pub fn save_pgm(path: &Path, frame: &GrayFrame<f64>) -> Result<()> {
    let mut bytes = format!("P5\n{} {}\n255\n", frame.width(), frame.height()).into_bytes();
    bytes.extend(frame.data().iter().map(|v| (v * 255.0).round().clamp(0.0, 255.0) as u8));
    atomic_write(path, &bytes)
}
