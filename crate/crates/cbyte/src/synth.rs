//! Synthetic tracking sequences with planted camera motion.
//!
//! Textured squares drift over a textured background while the whole view
//! undergoes a configurable global motion (continuous pan/rotation and
//! optional abrupt jumps). Ground truth follows the objects exactly,
//! detections are ground truth perturbed by seeded noise, and the planted
//! per-frame camera transform is returned for compensation accuracy tests.
//! Output is bit-deterministic for a fixed seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::mot::{MotRecord, MotSequence};
use crate::types::{AffineTransform, GrayFrame};
use crate::Real;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SynthError {
    #[error("need at least one frame")]
    NoFrames,
    #[error("image must be at least 32x32")]
    ImageTooSmall,
    #[error("objects of size {size} px do not fit a {width}x{height} image")]
    ObjectTooLarge { size: u32, width: usize, height: usize },
    #[error("score range must satisfy 0 <= min <= max <= 1")]
    BadScoreRange,
    #[error("noise amplitude must lie in [0, 1]")]
    BadNoiseAmplitude,
    #[error("dropout must lie in [0, 1)")]
    BadDropout,
}

/// Frames (inclusive, 1-based) during which one object disappears from the
/// scene and from the ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OcclusionWindow {
    /// Ground-truth id (1-based object index).
    pub object_id: u32,
    pub start_frame: u32,
    pub end_frame: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub frames: u32,
    pub width: usize,
    pub height: usize,
    pub object_count: usize,
    /// Square side length in px.
    pub object_size: f64,
    /// Object speed in px/frame.
    pub object_speed: f64,
    /// Continuous scene displacement per frame, in image coordinates.
    pub pan: (f64, f64),
    /// Continuous scene rotation per frame about the image center, degrees.
    pub rotation_deg: f64,
    /// When nonzero, every `jump_period` frames the scene additionally jumps
    /// by `jump_pan`/`jump_rotation_deg`, with alternating sign so the view
    /// stays bounded.
    pub jump_period: u32,
    pub jump_pan: (f64, f64),
    pub jump_rotation_deg: f64,
    pub occlusions: Vec<OcclusionWindow>,
    /// Peak-to-peak amplitude of the uniform texture noise.
    pub noise_amplitude: f64,
    /// Uniform perturbation half-range applied to detection boxes, px.
    pub det_jitter_px: f64,
    /// Probability that a detection is dropped.
    pub det_dropout: f64,
    pub score_min: f64,
    pub score_max: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            frames: 100,
            width: 640,
            height: 480,
            object_count: 8,
            object_size: 40.0,
            object_speed: 1.5,
            pan: (0.0, 0.0),
            rotation_deg: 0.0,
            jump_period: 0,
            jump_pan: (0.0, 0.0),
            jump_rotation_deg: 0.0,
            occlusions: Vec::new(),
            noise_amplitude: 0.5,
            det_jitter_px: 1.0,
            det_dropout: 0.0,
            score_min: 0.7,
            score_max: 0.99,
            seed: 7,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        if self.frames == 0 {
            return Err(SynthError::NoFrames);
        }
        if self.width < 32 || self.height < 32 {
            return Err(SynthError::ImageTooSmall);
        }
        if self.object_size + 2.0 >= self.width.min(self.height) as f64 {
            return Err(SynthError::ObjectTooLarge {
                size: self.object_size as u32,
                width: self.width,
                height: self.height,
            });
        }
        if !(0.0..=1.0).contains(&self.score_min)
            || !(0.0..=1.0).contains(&self.score_max)
            || self.score_min > self.score_max
        {
            return Err(SynthError::BadScoreRange);
        }
        if !(0.0..=1.0).contains(&self.noise_amplitude) {
            return Err(SynthError::BadNoiseAmplitude);
        }
        if !(0.0..1.0).contains(&self.det_dropout) {
            return Err(SynthError::BadDropout);
        }
        Ok(())
    }
}

/// A generated sequence: frames, ground truth, detections, and the planted
/// camera transform mapping frame `t` image coordinates to frame `t + 1`
/// (length `frames - 1`).
#[derive(Debug, Clone)]
pub struct SynthSequence<T> {
    pub frames: Vec<GrayFrame<T>>,
    pub gt: MotSequence,
    pub detections: MotSequence,
    pub camera_motion: Vec<AffineTransform<T>>,
}

struct WorldTexture {
    origin: (f64, f64),
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl WorldTexture {
    #[inline]
    fn sample(&self, wx: f64, wy: f64) -> f64 {
        bilinear(&self.data, self.width, self.height, wx - self.origin.0, wy - self.origin.1)
    }
}

#[inline]
fn bilinear(data: &[f64], width: usize, height: usize, x: f64, y: f64) -> f64 {
    let x = x.clamp(0.0, (width - 1) as f64);
    let y = y.clamp(0.0, (height - 1) as f64);
    let x0 = x.floor() as usize;
    let y0 = y.floor() as usize;
    let x1 = (x0 + 1).min(width - 1);
    let y1 = (y0 + 1).min(height - 1);
    let fx = x - x0 as f64;
    let fy = y - y0 as f64;
    let i00 = data[y0 * width + x0];
    let i10 = data[y0 * width + x1];
    let i01 = data[y1 * width + x0];
    let i11 = data[y1 * width + x1];
    (1.0 - fx) * (1.0 - fy) * i00 + fx * (1.0 - fy) * i10 + (1.0 - fx) * fy * i01 + fx * fy * i11
}

pub fn synth_sequence<T: Real>(cfg: &SynthConfig) -> Result<SynthSequence<T>, SynthError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let center = ((cfg.width as f64 - 1.0) / 2.0, (cfg.height as f64 - 1.0) / 2.0);

    // Per-frame camera deltas (frame t -> t+1) and cumulative poses mapping
    // world coordinates (frame-1 image coordinates) into each frame.
    let mut deltas: Vec<AffineTransform<f64>> = Vec::new();
    let mut poses: Vec<AffineTransform<f64>> = vec![AffineTransform::identity()];
    let mut jump_count = 0u32;
    for t in 2..=cfg.frames {
        let mut rot = cfg.rotation_deg;
        let mut pan = cfg.pan;
        if cfg.jump_period > 0 && (t - 1) % cfg.jump_period == 0 {
            jump_count += 1;
            let sign = if jump_count % 2 == 1 { 1.0 } else { -1.0 };
            rot += sign * cfg.jump_rotation_deg;
            pan.0 += sign * cfg.jump_pan.0;
            pan.1 += sign * cfg.jump_pan.1;
        }
        let delta = AffineTransform::rigid_about(center, rot.to_radians(), pan.0, pan.1);
        poses.push(delta.compose(poses.last().unwrap()));
        deltas.push(delta);
    }

    // World extent: wherever any frame's view reaches, padded for sampling.
    let mut min_x = 0.0f64;
    let mut min_y = 0.0f64;
    let mut max_x = (cfg.width - 1) as f64;
    let mut max_y = (cfg.height - 1) as f64;
    for pose in &poses {
        let inv = pose.inverse().expect("rigid poses are invertible");
        for corner in [
            (0.0, 0.0),
            ((cfg.width - 1) as f64, 0.0),
            (0.0, (cfg.height - 1) as f64),
            ((cfg.width - 1) as f64, (cfg.height - 1) as f64),
        ] {
            let (wx, wy) = inv.apply(corner);
            min_x = min_x.min(wx);
            min_y = min_y.min(wy);
            max_x = max_x.max(wx);
            max_y = max_y.max(wy);
        }
    }
    let pad = 3.0;
    let origin = ((min_x - pad).floor(), (min_y - pad).floor());
    let world_w = ((max_x + pad).ceil() - origin.0) as usize + 1;
    let world_h = ((max_y + pad).ceil() - origin.1) as usize + 1;

    let amp = cfg.noise_amplitude;
    let background: Vec<f64> = (0..world_w * world_h)
        .map(|_| 0.5 + rng.random_range(-0.5..0.5) * amp)
        .collect();
    let world = WorldTexture { origin, width: world_w, height: world_h, data: background };

    // Object textures and initial kinematics, all in world coordinates.
    let size = cfg.object_size;
    let tex_side = size.ceil() as usize + 2;
    let mut textures: Vec<Vec<f64>> = Vec::with_capacity(cfg.object_count);
    let mut positions: Vec<(f64, f64)> = Vec::with_capacity(cfg.object_count);
    let mut velocities: Vec<(f64, f64)> = Vec::with_capacity(cfg.object_count);
    for o in 0..cfg.object_count {
        let base = if o % 2 == 0 { 0.15 } else { 0.85 };
        textures.push(
            (0..tex_side * tex_side)
                .map(|_| (base + rng.random_range(-0.25..0.25) * amp).clamp(0.0, 1.0))
                .collect(),
        );
        positions.push((
            rng.random_range(1.0..(cfg.width as f64 - size - 1.0)),
            rng.random_range(1.0..(cfg.height as f64 - size - 1.0)),
        ));
        let angle = rng.random_range(0.0..std::f64::consts::TAU);
        velocities.push((cfg.object_speed * angle.cos(), cfg.object_speed * angle.sin()));
    }

    let occluded = |object_id: u32, frame: u32| {
        cfg.occlusions.iter().any(|w| {
            w.object_id == object_id && frame >= w.start_frame && frame <= w.end_frame
        })
    };

    let mut frames = Vec::with_capacity(cfg.frames as usize);
    let mut gt_records = Vec::new();
    let mut det_records = Vec::new();

    for frame_no in 1..=cfg.frames {
        if frame_no > 1 {
            // Advance objects, bouncing off the world arena walls.
            for o in 0..cfg.object_count {
                let (mut x, mut y) = positions[o];
                let (mut vx, mut vy) = velocities[o];
                x += vx;
                y += vy;
                let max_px = cfg.width as f64 - size - 1.0;
                let max_py = cfg.height as f64 - size - 1.0;
                if x < 1.0 {
                    x = 2.0 - x;
                    vx = -vx;
                } else if x > max_px {
                    x = 2.0 * max_px - x;
                    vx = -vx;
                }
                if y < 1.0 {
                    y = 2.0 - y;
                    vy = -vy;
                } else if y > max_py {
                    y = 2.0 * max_py - y;
                    vy = -vy;
                }
                positions[o] = (x, y);
                velocities[o] = (vx, vy);
            }
        }

        let pose = &poses[(frame_no - 1) as usize];
        let inv = pose.inverse().expect("rigid poses are invertible");
        let visible: Vec<usize> =
            (0..cfg.object_count).filter(|&o| !occluded(o as u32 + 1, frame_no)).collect();

        // Render by inverse transform sampling from the world.
        let mut data: Vec<T> = Vec::with_capacity(cfg.width * cfg.height);
        for y in 0..cfg.height {
            for x in 0..cfg.width {
                let (wx, wy) = inv.apply((x as f64, y as f64));
                let mut value = world.sample(wx, wy);
                for &o in &visible {
                    let (px, py) = positions[o];
                    if wx >= px && wx < px + size && wy >= py && wy < py + size {
                        value = bilinear(
                            &textures[o],
                            tex_side,
                            tex_side,
                            wx - px + 1.0,
                            wy - py + 1.0,
                        );
                    }
                }
                data.push(T::from_f64(value.clamp(0.0, 1.0)).unwrap());
            }
        }
        frames.push(
            GrayFrame::new(cfg.width, cfg.height, u64::from(frame_no), data)
                .expect("generated frames are valid by construction"),
        );

        // Ground truth: axis-aligned hull of the transformed object square;
        // detections: the same box under seeded jitter, dropout, and scores.
        for &o in &visible {
            let (px, py) = positions[o];
            let corners = [
                pose.apply((px, py)),
                pose.apply((px + size, py)),
                pose.apply((px, py + size)),
                pose.apply((px + size, py + size)),
            ];
            let left = corners.iter().map(|c| c.0).fold(f64::INFINITY, f64::min);
            let top = corners.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
            let right = corners.iter().map(|c| c.0).fold(f64::NEG_INFINITY, f64::max);
            let bottom = corners.iter().map(|c| c.1).fold(f64::NEG_INFINITY, f64::max);
            gt_records.push(MotRecord {
                frame: frame_no,
                id: i64::from(o as u32 + 1),
                left,
                top,
                width: right - left,
                height: bottom - top,
                score: 1.0,
                extra: [-1.0; 3],
            });

            if cfg.det_dropout > 0.0 && rng.random_range(0.0..1.0) < cfg.det_dropout {
                continue;
            }
            let j = cfg.det_jitter_px;
            let jitter = |rng: &mut ChaCha8Rng| if j > 0.0 { rng.random_range(-j..j) } else { 0.0 };
            let dl = jitter(&mut rng);
            let dt = jitter(&mut rng);
            let dw = jitter(&mut rng) * 0.5;
            let dh = jitter(&mut rng) * 0.5;
            let score = if cfg.score_max > cfg.score_min {
                rng.random_range(cfg.score_min..cfg.score_max)
            } else {
                cfg.score_min
            };
            det_records.push(MotRecord {
                frame: frame_no,
                id: -1,
                left: left + dl,
                top: top + dt,
                width: (right - left + dw).max(1.0),
                height: (bottom - top + dh).max(1.0),
                score,
                extra: [-1.0; 3],
            });
        }
    }

    let camera_motion = deltas
        .iter()
        .map(|d| {
            let m = d.to_2x3();
            AffineTransform::from_2x3([
                [
                    T::from_f64(m[0][0]).unwrap(),
                    T::from_f64(m[0][1]).unwrap(),
                    T::from_f64(m[0][2]).unwrap(),
                ],
                [
                    T::from_f64(m[1][0]).unwrap(),
                    T::from_f64(m[1][1]).unwrap(),
                    T::from_f64(m[1][2]).unwrap(),
                ],
            ])
        })
        .collect();

    Ok(SynthSequence {
        frames,
        gt: MotSequence::from_records(gt_records),
        detections: MotSequence::from_records(det_records),
        camera_motion,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_config() -> SynthConfig {
        SynthConfig {
            frames: 6,
            width: 96,
            height: 64,
            object_count: 2,
            object_size: 14.0,
            object_speed: 1.0,
            ..SynthConfig::default()
        }
    }

    #[test]
    fn zero_motion_zero_noise_detections_equal_gt() {
        let cfg = SynthConfig {
            det_jitter_px: 0.0,
            det_dropout: 0.0,
            score_min: 1.0,
            score_max: 1.0,
            ..tiny_config()
        };
        let seq = synth_sequence::<f64>(&cfg).unwrap();
        let gt: Vec<MotRecord> = seq.gt.records().map(|r| MotRecord { id: -1, ..*r }).collect();
        let dets: Vec<MotRecord> = seq.detections.records().copied().collect();
        assert_eq!(gt, dets);
    }

    #[test]
    fn pan_plants_expected_displacement() {
        let cfg = SynthConfig { pan: (5.0, 0.0), ..tiny_config() };
        let seq = synth_sequence::<f64>(&cfg).unwrap();
        assert_eq!(seq.camera_motion.len(), 5);
        for t in &seq.camera_motion {
            assert_eq!(t.displacement, [5.0, 0.0]);
            assert_eq!(t.rotation, [[1.0, 0.0], [0.0, 1.0]]);
        }
    }

    #[test]
    fn occlusion_removes_records() {
        let cfg = SynthConfig {
            occlusions: vec![OcclusionWindow { object_id: 2, start_frame: 3, end_frame: 4 }],
            det_dropout: 0.0,
            ..tiny_config()
        };
        let seq = synth_sequence::<f64>(&cfg).unwrap();
        for frame in [3u32, 4] {
            assert!(seq.gt.frames[&frame].iter().all(|r| r.id != 2));
        }
        for frame in [1u32, 2, 5, 6] {
            assert!(seq.gt.frames[&frame].iter().any(|r| r.id == 2));
        }
    }

    #[test]
    fn fixed_seed_is_bit_deterministic() {
        let cfg = tiny_config();
        let a = synth_sequence::<f64>(&cfg).unwrap();
        let b = synth_sequence::<f64>(&cfg).unwrap();
        assert_eq!(a.frames.len(), b.frames.len());
        for (fa, fb) in a.frames.iter().zip(&b.frames) {
            assert_eq!(fa, fb);
        }
        assert_eq!(a.gt, b.gt);
        assert_eq!(a.detections, b.detections);
    }

    #[test]
    fn oversized_objects_rejected() {
        let cfg = SynthConfig { object_size: 80.0, width: 64, height: 64, ..tiny_config() };
        assert!(matches!(
            synth_sequence::<f64>(&cfg).unwrap_err(),
            SynthError::ObjectTooLarge { .. }
        ));
    }

    #[test]
    fn frame_count_and_indices_match_config() {
        let seq = synth_sequence::<f64>(&tiny_config()).unwrap();
        assert_eq!(seq.frames.len(), 6);
        for (i, f) in seq.frames.iter().enumerate() {
            assert_eq!(f.frame_index(), i as u64 + 1);
        }
    }
}
