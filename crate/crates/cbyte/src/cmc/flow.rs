//! Pyramidal iterative Lucas-Kanade optical flow for sparse keypoints.
//!
//! Per keypoint and pyramid level, the flow increment solves the 2x2
//! least-squares system built from spatial gradients of the previous frame
//! and the temporal difference against the current frame, iterated until the
//! increment drops below `lk_epsilon` or stops improving. Coarse-level
//! estimates seed finer levels, doubling at each step.
//!
//! Window samples all share one fractional offset, so each patch is sampled
//! with fixed bilinear weights; windows fully inside the image take a raw
//! slice path, border windows fall back to index clamping. Pyramids can be
//! built once per frame and reused on both sides of consecutive frame
//! pairs.

use thiserror::Error;

use super::CmcParams;
use crate::types::{GrayFrame, Keypoint};
use crate::{real, Real};

/// Minimum normalized eigenvalue of the gradient structure matrix for a
/// point to remain trackable.
const MIN_EIGEN: f64 = 1e-4;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FlowError {
    #[error("frame dimensions differ: {prev_width}x{prev_height} vs {curr_width}x{curr_height}")]
    DimensionMismatch {
        prev_width: usize,
        prev_height: usize,
        curr_width: usize,
        curr_height: usize,
    },
}

/// Flow output: estimated positions in the current frame, parallel to the
/// input keypoints, with a validity flag per point.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowResult<T> {
    pub points: Vec<Keypoint<T>>,
    pub valid: Vec<bool>,
}

#[derive(Debug, Clone)]
struct Plane<T> {
    width: usize,
    height: usize,
    data: Vec<T>,
}

impl<T: Real> Plane<T> {
    fn empty() -> Self {
        Self { width: 0, height: 0, data: Vec::new() }
    }

    /// Resizes without reallocating when capacity suffices.
    fn reset(&mut self, width: usize, height: usize) {
        self.width = width;
        self.height = height;
        self.data.resize(width * height, T::zero());
    }
}

/// Image pyramid with per-level central-difference gradients, reusable
/// across frame pairs (build once per frame). Rebuilding in place recycles
/// the buffers, which keeps per-frame allocation out of the hot path.
#[derive(Debug, Clone)]
pub struct Pyramid<T> {
    levels: Vec<Plane<T>>,
    grad_x: Vec<Plane<T>>,
    grad_y: Vec<Plane<T>>,
    active_levels: usize,
    scratch: Plane<T>,
    frame_index: u64,
}

impl<T: Real> Pyramid<T> {
    pub fn empty() -> Self {
        Self {
            levels: Vec::new(),
            grad_x: Vec::new(),
            grad_y: Vec::new(),
            active_levels: 0,
            scratch: Plane::empty(),
            frame_index: 0,
        }
    }

    /// Builds the pyramid: level 0 is full resolution, each later level a
    /// 5-tap binomial blur followed by 2x downsampling, stopping early when
    /// a level would become smaller than the flow window.
    pub fn build(frame: &GrayFrame<T>, params: &CmcParams<T>) -> Self {
        let mut pyramid = Self::empty();
        pyramid.rebuild(frame, params);
        pyramid
    }

    /// Rebuilds in place for a new frame, reusing existing storage.
    pub fn rebuild(&mut self, frame: &GrayFrame<T>, params: &CmcParams<T>) {
        self.frame_index = frame.frame_index();
        let wanted = params.lk_pyramid_levels;
        while self.levels.len() < wanted {
            self.levels.push(Plane::empty());
            self.grad_x.push(Plane::empty());
            self.grad_y.push(Plane::empty());
        }

        self.levels[0].reset(frame.width(), frame.height());
        self.levels[0].data.copy_from_slice(frame.data());
        self.active_levels = 1;
        for l in 1..wanted {
            let (head, tail) = self.levels.split_at_mut(l);
            let src = &head[l - 1];
            let w = src.width.div_ceil(2);
            let h = src.height.div_ceil(2);
            if w < params.lk_window + 2 || h < params.lk_window + 2 {
                break;
            }
            downsample_blurred(src, w, h, &mut self.scratch, &mut tail[0]);
            self.active_levels = l + 1;
        }
        for l in 0..self.active_levels {
            gradients(&self.levels[l], &mut self.grad_x[l], &mut self.grad_y[l]);
        }
    }

    fn level_count(&self) -> usize {
        self.active_levels
    }

    pub fn frame_index(&self) -> u64 {
        self.frame_index
    }

    pub fn width(&self) -> usize {
        self.levels[0].width
    }

    pub fn height(&self) -> usize {
        self.levels[0].height
    }
}

/// Blur-then-downsample, evaluating the separable 5-tap binomial kernel
/// (1 4 6 4 1)/16 only at the retained pixels. Borders replicate.
fn downsample_blurred<T: Real>(
    src: &Plane<T>,
    out_w: usize,
    out_h: usize,
    tmp: &mut Plane<T>,
    out: &mut Plane<T>,
) {
    let k = [
        real::<T>(1.0 / 16.0),
        real::<T>(4.0 / 16.0),
        real::<T>(6.0 / 16.0),
        real::<T>(4.0 / 16.0),
        real::<T>(1.0 / 16.0),
    ];
    let (w, h) = (src.width, src.height);

    // Vertical pass at even source rows only.
    tmp.reset(w, out_h);
    for yo in 0..out_h {
        let y = (2 * yo).min(h - 1);
        let dst = &mut tmp.data[yo * w..(yo + 1) * w];
        if y >= 2 && y + 2 < h {
            let r0 = &src.data[(y - 2) * w..(y - 1) * w];
            let r1 = &src.data[(y - 1) * w..y * w];
            let r2 = &src.data[y * w..(y + 1) * w];
            let r3 = &src.data[(y + 1) * w..(y + 2) * w];
            let r4 = &src.data[(y + 2) * w..(y + 3) * w];
            for x in 0..w {
                dst[x] =
                    k[0] * r0[x] + k[1] * r1[x] + k[2] * r2[x] + k[3] * r3[x] + k[4] * r4[x];
            }
        } else {
            for x in 0..w {
                let mut acc = T::zero();
                for (t, &kv) in k.iter().enumerate() {
                    let sy = (y + t).saturating_sub(2).min(h - 1);
                    acc += kv * src.data[sy * w + x];
                }
                dst[x] = acc;
            }
        }
    }

    // Horizontal pass at even source columns only.
    out.reset(out_w, out_h);
    for yo in 0..out_h {
        let row = &tmp.data[yo * w..(yo + 1) * w];
        let dst = &mut out.data[yo * out_w..(yo + 1) * out_w];
        for (xo, d) in dst.iter_mut().enumerate() {
            let x = 2 * xo;
            if x >= 2 && x + 2 < w {
                *d = k[0] * row[x - 2]
                    + k[1] * row[x - 1]
                    + k[2] * row[x]
                    + k[3] * row[x + 1]
                    + k[4] * row[x + 2];
            } else {
                let mut acc = T::zero();
                for (t, &kv) in k.iter().enumerate() {
                    let sx = (x + t).saturating_sub(2).min(w - 1);
                    acc += kv * row[sx];
                }
                *d = acc;
            }
        }
    }
}

/// Central-difference gradients with replicated borders.
fn gradients<T: Real>(image: &Plane<T>, gx: &mut Plane<T>, gy: &mut Plane<T>) {
    let (w, h) = (image.width, image.height);
    let half = real::<T>(0.5);
    gx.reset(w, h);
    gy.reset(w, h);
    for y in 0..h {
        let row = &image.data[y * w..(y + 1) * w];
        let above = &image.data[y.saturating_sub(1) * w..y.saturating_sub(1) * w + w];
        let below = &image.data[(y + 1).min(h - 1) * w..(y + 1).min(h - 1) * w + w];
        let gx_row = &mut gx.data[y * w..(y + 1) * w];
        let gy_row = &mut gy.data[y * w..(y + 1) * w];
        for x in 1..w.saturating_sub(1) {
            gx_row[x] = (row[x + 1] - row[x - 1]) * half;
        }
        gx_row[0] = (row[1.min(w - 1)] - row[0]) * half;
        gx_row[w - 1] = (row[w - 1] - row[w.saturating_sub(2)]) * half;
        for x in 0..w {
            gy_row[x] = (below[x] - above[x]) * half;
        }
    }
}

/// Fixed bilinear weights for a patch whose top-left corner sits at
/// `(base_x, base_y)`; every sample in the patch shares the fractional part.
struct PatchGrid<T> {
    ix: i64,
    iy: i64,
    w00: T,
    w10: T,
    w01: T,
    w11: T,
}

impl<T: Real> PatchGrid<T> {
    fn new(base_x: T, base_y: T) -> Self {
        let fx_floor = base_x.floor();
        let fy_floor = base_y.floor();
        let fx = base_x - fx_floor;
        let fy = base_y - fy_floor;
        let one = T::one();
        Self {
            ix: fx_floor.to_i64().unwrap_or(0),
            iy: fy_floor.to_i64().unwrap_or(0),
            w00: (one - fx) * (one - fy),
            w10: fx * (one - fy),
            w01: (one - fx) * fy,
            w11: fx * fy,
        }
    }

    fn fits(&self, plane_w: usize, plane_h: usize, win: usize) -> bool {
        self.ix >= 0
            && self.iy >= 0
            && (self.ix as usize) + win < plane_w
            && (self.iy as usize) + win < plane_h
    }

    #[inline]
    fn sample_clamped(&self, plane: &Plane<T>, wx: usize, wy: usize) -> T {
        let cx = |v: i64| v.clamp(0, plane.width as i64 - 1) as usize;
        let cy = |v: i64| v.clamp(0, plane.height as i64 - 1) as usize;
        let x0 = cx(self.ix + wx as i64);
        let x1 = cx(self.ix + wx as i64 + 1);
        let y0 = cy(self.iy + wy as i64);
        let y1 = cy(self.iy + wy as i64 + 1);
        self.w00 * plane.data[y0 * plane.width + x0]
            + self.w10 * plane.data[y0 * plane.width + x1]
            + self.w01 * plane.data[y1 * plane.width + x0]
            + self.w11 * plane.data[y1 * plane.width + x1]
    }
}

/// Fills `out` with the `win`-square patch of `plane` anchored at `grid`.
fn sample_patch<T: Real>(plane: &Plane<T>, grid: &PatchGrid<T>, win: usize, out: &mut [T]) {
    if grid.fits(plane.width, plane.height, win) {
        let (w00, w10, w01, w11) = (grid.w00, grid.w10, grid.w01, grid.w11);
        for wy in 0..win {
            let start = (grid.iy as usize + wy) * plane.width + grid.ix as usize;
            let row0 = &plane.data[start..start + win + 1];
            let row1 = &plane.data[start + plane.width..start + plane.width + win + 1];
            let dst = &mut out[wy * win..(wy + 1) * win];
            for wx in 0..win {
                dst[wx] = w00 * row0[wx] + w10 * row0[wx + 1] + w01 * row1[wx] + w11 * row1[wx + 1];
            }
        }
    } else {
        for wy in 0..win {
            for wx in 0..win {
                out[wy * win + wx] = grid.sample_clamped(plane, wx, wy);
            }
        }
    }
}

/// Accumulates the flow right-hand side `b = sum g * (template - curr)`
/// without materializing the current patch.
fn accumulate_residual<T: Real>(
    plane: &Plane<T>,
    grid: &PatchGrid<T>,
    win: usize,
    template: &[T],
    gx: &[T],
    gy: &[T],
) -> (T, T) {
    let mut bx = T::zero();
    let mut by = T::zero();
    if grid.fits(plane.width, plane.height, win) {
        let (w00, w10, w01, w11) = (grid.w00, grid.w10, grid.w01, grid.w11);
        for wy in 0..win {
            let start = (grid.iy as usize + wy) * plane.width + grid.ix as usize;
            let row0 = &plane.data[start..start + win + 1];
            let row1 = &plane.data[start + plane.width..start + plane.width + win + 1];
            let t_row = &template[wy * win..(wy + 1) * win];
            let gx_row = &gx[wy * win..(wy + 1) * win];
            let gy_row = &gy[wy * win..(wy + 1) * win];
            for wx in 0..win {
                let sample =
                    w00 * row0[wx] + w10 * row0[wx + 1] + w01 * row1[wx] + w11 * row1[wx + 1];
                let diff = t_row[wx] - sample;
                bx += gx_row[wx] * diff;
                by += gy_row[wx] * diff;
            }
        }
    } else {
        for wy in 0..win {
            for wx in 0..win {
                let sample = grid.sample_clamped(plane, wx, wy);
                let diff = template[wy * win + wx] - sample;
                bx += gx[wy * win + wx] * diff;
                by += gy[wy * win + wx] * diff;
            }
        }
    }
    (bx, by)
}

/// Tracks keypoints from `prev` into `curr`, building both pyramids.
///
/// A point is marked invalid when its structure matrix is near-singular
/// (minimum eigenvalue below 1e-4 after window normalization), when the
/// iteration produces a non-finite or wildly diverging increment, or when
/// the tracked position exits the frame.
pub fn lucas_kanade<T: Real>(
    prev: &GrayFrame<T>,
    curr: &GrayFrame<T>,
    points: &[Keypoint<T>],
    params: &CmcParams<T>,
) -> Result<FlowResult<T>, FlowError> {
    if prev.width() != curr.width() || prev.height() != curr.height() {
        return Err(FlowError::DimensionMismatch {
            prev_width: prev.width(),
            prev_height: prev.height(),
            curr_width: curr.width(),
            curr_height: curr.height(),
        });
    }
    Ok(lucas_kanade_pyramids(
        &Pyramid::build(prev, params),
        &Pyramid::build(curr, params),
        points,
        params,
    ))
}

/// Tracks keypoints between prebuilt pyramids (the pyramid of one frame can
/// serve as `curr` for one pair and `prev` for the next).
pub fn lucas_kanade_pyramids<T: Real>(
    prev: &Pyramid<T>,
    curr: &Pyramid<T>,
    points: &[Keypoint<T>],
    params: &CmcParams<T>,
) -> FlowResult<T> {
    let levels = prev.level_count().min(curr.level_count());
    let mut scratch = Scratch::new(params.lk_window);
    let mut out_points = Vec::with_capacity(points.len());
    let mut out_valid = Vec::with_capacity(points.len());
    for pt in points {
        let (tracked, ok) = track_point(pt, prev, curr, levels, params, &mut scratch);
        out_points.push(tracked);
        out_valid.push(ok);
    }
    FlowResult { points: out_points, valid: out_valid }
}

struct Scratch<T> {
    template: Vec<T>,
    gx: Vec<T>,
    gy: Vec<T>,
}

impl<T: Real> Scratch<T> {
    fn new(window: usize) -> Self {
        Self {
            template: vec![T::zero(); window * window],
            gx: vec![T::zero(); window * window],
            gy: vec![T::zero(); window * window],
        }
    }
}

fn track_point<T: Real>(
    pt: &Keypoint<T>,
    prev: &Pyramid<T>,
    curr: &Pyramid<T>,
    levels: usize,
    params: &CmcParams<T>,
    scratch: &mut Scratch<T>,
) -> (Keypoint<T>, bool) {
    let win = params.lk_window;
    let half = real::<T>((win / 2) as f64);
    let win_pixels = real::<T>((win * win) as f64);
    let two = real::<T>(2.0);
    let eps_sq = params.lk_epsilon * params.lk_epsilon;
    let diverge_limit = real::<T>(win as f64);
    // Near-optimum stall: increments this small cannot move the estimate
    // meaningfully, so two non-shrinking steps in a row end the iteration.
    let stall_mag = real::<T>(0.5);

    let mut dx = T::zero();
    let mut dy = T::zero();

    for level in (0..levels).rev() {
        let scale = real::<T>(1.0 / (1 << level) as f64);
        let image = &prev.levels[level];
        let target = &curr.levels[level];
        let xc = pt.x * scale;
        let yc = pt.y * scale;
        if level < levels - 1 {
            dx = dx * two;
            dy = dy * two;
        }

        // Template patch and gradient structure matrix, sampled once per
        // level from the previous frame.
        let grid = PatchGrid::new(xc - half, yc - half);
        sample_patch(image, &grid, win, &mut scratch.template);
        sample_patch(&prev.grad_x[level], &grid, win, &mut scratch.gx);
        sample_patch(&prev.grad_y[level], &grid, win, &mut scratch.gy);

        let mut gxx = T::zero();
        let mut gxy = T::zero();
        let mut gyy = T::zero();
        for i in 0..win * win {
            let gx = scratch.gx[i];
            let gy = scratch.gy[i];
            gxx += gx * gx;
            gxy += gx * gy;
            gyy += gy * gy;
        }

        let det = gxx * gyy - gxy * gxy;
        let trace = gxx + gyy;
        let min_eig = (trace - ((gxx - gyy) * (gxx - gyy) + real::<T>(4.0) * gxy * gxy).sqrt())
            / (two * win_pixels);
        if min_eig < real(MIN_EIGEN) || det <= T::zero() {
            return (*pt, false);
        }
        let inv_det = T::one() / det;

        let mut prev_mag = T::infinity();
        let mut stalled = 0u32;
        for _ in 0..params.lk_max_iters {
            let target_grid = PatchGrid::new(xc + dx - half, yc + dy - half);
            let (bx, by) = accumulate_residual(
                target,
                &target_grid,
                win,
                &scratch.template,
                &scratch.gx,
                &scratch.gy,
            );
            let delta_x = inv_det * (gyy * bx - gxy * by);
            let delta_y = inv_det * (gxx * by - gxy * bx);
            if !delta_x.is_finite() || !delta_y.is_finite() {
                return (*pt, false);
            }
            if delta_x.abs() > diverge_limit || delta_y.abs() > diverge_limit {
                return (*pt, false);
            }
            dx += delta_x;
            dy += delta_y;
            let mag_sq = delta_x * delta_x + delta_y * delta_y;
            if mag_sq < eps_sq {
                break;
            }
            if mag_sq < stall_mag * stall_mag && mag_sq >= prev_mag * real::<T>(0.96) {
                stalled += 1;
                if stalled >= 2 {
                    break;
                }
            } else {
                stalled = 0;
            }
            prev_mag = mag_sq;
        }

        if !dx.is_finite() || !dy.is_finite() {
            return (*pt, false);
        }
    }

    let tracked = Keypoint::new(pt.x + dx, pt.y + dy);
    let in_bounds = tracked.x >= T::zero()
        && tracked.y >= T::zero()
        && tracked.x < real::<T>(prev.width() as f64)
        && tracked.y < real::<T>(prev.height() as f64);
    (tracked, in_bounds)
}
