//! `render`: annotate frames with result boxes (colored by id) and short
//! trailing trajectory polylines, written as PNGs.

use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{Context, Result};
use cbyte::mot::parse_mot;
use image::codecs::png::PngEncoder;
use image::{ExtendedColorType, ImageEncoder, RgbImage};

use crate::frames::list_frames;
use crate::io_util::atomic_write;

/// Trailing trajectory length, in frames.
const TRAIL: usize = 20;

pub struct RenderArgs {
    pub frames: PathBuf,
    pub results: PathBuf,
    pub out: PathBuf,
}

/// Deterministic id-to-color mapping: golden-angle hue walk at fixed
/// saturation and value.
fn id_color(id: i64) -> [u8; 3] {
    let hue = (id as f64 * 0.618_033_988_749_895).fract() * 360.0;
    hsv_to_rgb(hue, 0.85, 0.95)
}

fn hsv_to_rgb(h: f64, s: f64, v: f64) -> [u8; 3] {
    let c = v * s;
    let x = c * (1.0 - ((h / 60.0) % 2.0 - 1.0).abs());
    let m = v - c;
    let (r, g, b) = match h as u32 / 60 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    [((r + m) * 255.0) as u8, ((g + m) * 255.0) as u8, ((b + m) * 255.0) as u8]
}

fn put_pixel(img: &mut RgbImage, x: i64, y: i64, color: [u8; 3]) {
    if x >= 0 && y >= 0 && (x as u32) < img.width() && (y as u32) < img.height() {
        img.put_pixel(x as u32, y as u32, image::Rgb(color));
    }
}

fn draw_rect(img: &mut RgbImage, left: f64, top: f64, w: f64, h: f64, color: [u8; 3]) {
    let (x0, y0) = (left.round() as i64, top.round() as i64);
    let (x1, y1) = ((left + w).round() as i64, (top + h).round() as i64);
    for t in 0..2i64 {
        for x in x0..=x1 {
            put_pixel(img, x, y0 + t, color);
            put_pixel(img, x, y1 - t, color);
        }
        for y in y0..=y1 {
            put_pixel(img, x0 + t, y, color);
            put_pixel(img, x1 - t, y, color);
        }
    }
}

fn draw_line(img: &mut RgbImage, from: (f64, f64), to: (f64, f64), color: [u8; 3]) {
    let (mut x0, mut y0) = (from.0.round() as i64, from.1.round() as i64);
    let (x1, y1) = (to.0.round() as i64, to.1.round() as i64);
    let dx = (x1 - x0).abs();
    let dy = -(y1 - y0).abs();
    let sx = if x0 < x1 { 1 } else { -1 };
    let sy = if y0 < y1 { 1 } else { -1 };
    let mut err = dx + dy;
    loop {
        put_pixel(img, x0, y0, color);
        if x0 == x1 && y0 == y1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x0 += sx;
        }
        if e2 <= dx {
            err += dx;
            y0 += sy;
        }
    }
}

pub fn run(args: &RenderArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.results)
        .with_context(|| format!("reading results file {:?}", args.results))?;
    let results = parse_mot(&text)?;
    let frame_files = list_frames(&args.frames)?;
    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating output directory {:?}", args.out))?;

    for frame_no in results.frames.keys() {
        if !frame_files.contains_key(frame_no) {
            log::warn!("results reference frame {frame_no} with no frame image; skipping it");
        }
    }

    // Past box centers per id, grown as frames are visited in order.
    let mut trails: BTreeMap<i64, Vec<(f64, f64)>> = BTreeMap::new();
    let empty = Vec::new();

    for (&frame_no, path) in &frame_files {
        let mut img = image::open(path)
            .with_context(|| format!("decoding frame {path:?}"))?
            .to_rgb8();
        for record in results.frames.get(&frame_no).unwrap_or(&empty) {
            let color = id_color(record.id);
            draw_rect(&mut img, record.left, record.top, record.width, record.height, color);
            let center = (record.left + record.width / 2.0, record.top + record.height / 2.0);
            let trail = trails.entry(record.id).or_default();
            trail.push(center);
            let start = trail.len().saturating_sub(TRAIL);
            for pair in trail[start..].windows(2) {
                draw_line(&mut img, pair[0], pair[1], color);
            }
        }

        let mut png = Vec::new();
        PngEncoder::new(&mut png).write_image(
            img.as_raw(),
            img.width(),
            img.height(),
            ExtendedColorType::Rgb8,
        )?;
        atomic_write(&args.out.join(format!("{frame_no:06}.png")), &png)?;
    }

    log::info!("rendered {} frames to {:?}", frame_files.len(), args.out);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn colors_are_deterministic_and_distinct() {
        assert_eq!(id_color(1), id_color(1));
        assert_ne!(id_color(1), id_color(2));
        assert_ne!(id_color(2), id_color(3));
    }
}
