//! Camera motion compensation: Laplacian keypoint selection, pyramidal
//! Lucas-Kanade optical flow, and RANSAC affine estimation.

mod flow;
mod ransac;

pub use flow::{lucas_kanade, lucas_kanade_pyramids, FlowError, FlowResult, Pyramid};
pub use ransac::{ransac_affine, RansacFailure};

use rand::Rng;
use thiserror::Error;

use crate::types::{AffineTransform, GrayFrame, Keypoint};
use crate::{real, Real};

/// Side length of the bucket grid used for spatially stratified keypoint
/// sampling.
const BUCKET_GRID: usize = 8;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CmcConfigError {
    #[error("theta_th must be positive")]
    NonPositiveThreshold,
    #[error("num_keypoints must be at least 3, got {0}")]
    TooFewKeypoints(usize),
    #[error("lk_window must be odd and at least 5, got {0}")]
    BadWindow(usize),
    #[error("lk_pyramid_levels must be at least 1")]
    NoPyramidLevels,
    #[error("lk_max_iters must be at least 1")]
    NoIterations,
    #[error("lk_epsilon must be positive")]
    NonPositiveEpsilon,
    #[error("ransac_inlier_px must be positive")]
    NonPositiveInlierThreshold,
    #[error("ransac_max_iters must be at least 1")]
    NoRansacIterations,
    #[error("ransac_min_inliers must be at least 3, got {0}")]
    TooFewMinInliers(usize),
}

/// Tuning knobs for the camera motion estimator. Defaults follow the
/// empirically determined threshold 0.9 and sample budget 210 on normalized
/// intensities; the remaining values are standard flow/RANSAC settings.
#[derive(Debug, Clone, PartialEq)]
pub struct CmcParams<T> {
    /// Laplacian magnitude threshold for a pixel to become a keypoint
    /// candidate.
    pub theta_th: T,
    /// Maximum number of keypoints kept per frame.
    pub num_keypoints: usize,
    /// Lucas-Kanade integration window side length (odd).
    pub lk_window: usize,
    /// Number of pyramid levels, including the full-resolution one.
    pub lk_pyramid_levels: usize,
    /// Maximum iterations per pyramid level.
    pub lk_max_iters: usize,
    /// Convergence threshold on the per-iteration flow increment, in px.
    pub lk_epsilon: T,
    /// Maximum reprojection error for a RANSAC inlier, in px.
    pub ransac_inlier_px: T,
    /// Maximum RANSAC trials (adaptive early stop may use fewer).
    pub ransac_max_iters: usize,
    /// Minimum inlier count for an affine estimate to be accepted.
    pub ransac_min_inliers: usize,
}

impl<T: Real> Default for CmcParams<T> {
    fn default() -> Self {
        Self {
            theta_th: real(0.9),
            num_keypoints: 210,
            lk_window: 21,
            lk_pyramid_levels: 3,
            lk_max_iters: 30,
            lk_epsilon: real(0.01),
            ransac_inlier_px: real(2.0),
            ransac_max_iters: 100,
            ransac_min_inliers: 10,
        }
    }
}

impl<T: Real> CmcParams<T> {
    pub fn validate(&self) -> Result<(), CmcConfigError> {
        if self.theta_th <= T::zero() {
            return Err(CmcConfigError::NonPositiveThreshold);
        }
        if self.num_keypoints < 3 {
            return Err(CmcConfigError::TooFewKeypoints(self.num_keypoints));
        }
        if self.lk_window < 5 || self.lk_window % 2 == 0 {
            return Err(CmcConfigError::BadWindow(self.lk_window));
        }
        if self.lk_pyramid_levels < 1 {
            return Err(CmcConfigError::NoPyramidLevels);
        }
        if self.lk_max_iters < 1 {
            return Err(CmcConfigError::NoIterations);
        }
        if self.lk_epsilon <= T::zero() {
            return Err(CmcConfigError::NonPositiveEpsilon);
        }
        if self.ransac_inlier_px <= T::zero() {
            return Err(CmcConfigError::NonPositiveInlierThreshold);
        }
        if self.ransac_max_iters < 1 {
            return Err(CmcConfigError::NoRansacIterations);
        }
        if self.ransac_min_inliers < 3 {
            return Err(CmcConfigError::TooFewMinInliers(self.ransac_min_inliers));
        }
        Ok(())
    }
}

/// Per-pixel filter response with the dimensions of the source frame.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseMap<T> {
    width: usize,
    height: usize,
    values: Vec<T>,
}

impl<T: Real> ResponseMap<T> {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> T {
        self.values[y * self.width + x]
    }
}

/// Discrete 4-neighbor Laplacian (center -4, N/S/E/W +1) with replicated
/// borders. Highlights edges and isolated points, where second differences
/// of the intensity are large.
pub fn laplacian_response<T: Real>(frame: &GrayFrame<T>) -> ResponseMap<T> {
    let w = frame.width();
    let h = frame.height();
    let four = real::<T>(4.0);
    let mut values = Vec::with_capacity(w * h);
    for y in 0..h {
        let yn = y.saturating_sub(1);
        let ys = (y + 1).min(h - 1);
        for x in 0..w {
            let xw = x.saturating_sub(1);
            let xe = (x + 1).min(w - 1);
            let v = frame.get(x, yn) + frame.get(x, ys) + frame.get(xw, y) + frame.get(xe, y)
                - four * frame.get(x, y);
            values.push(v);
        }
    }
    ResponseMap { width: w, height: h, values }
}

/// Selects keypoints from a Laplacian response map.
///
/// Pixels with `|response| > theta_th` form the active set. If it exceeds
/// the keypoint budget, candidates are bucketed on an 8x8 grid and drawn
/// round-robin, strongest magnitude first within each bucket, so the sample
/// stays spatially spread. Fully deterministic for a fixed input.
pub fn select_keypoints<T: Real>(
    response: &ResponseMap<T>,
    params: &CmcParams<T>,
) -> Vec<Keypoint<T>> {
    let w = response.width();
    let h = response.height();
    let mut active: Vec<(usize, usize, T)> = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let mag = response.get(x, y).abs();
            if mag > params.theta_th {
                active.push((x, y, mag));
            }
        }
    }
    stratified_select(active, w, h, params)
}

/// Keypoints of a frame: Laplacian thresholding plus stratified selection,
/// computed in one streaming pass (identical output to running
/// [`laplacian_response`] and [`select_keypoints`] separately, without
/// materializing the response map).
pub fn detect_keypoints<T: Real>(frame: &GrayFrame<T>, params: &CmcParams<T>) -> Vec<Keypoint<T>> {
    let w = frame.width();
    let h = frame.height();
    let four = real::<T>(4.0);
    let mut active: Vec<(usize, usize, T)> = Vec::new();
    for y in 0..h {
        let yn = y.saturating_sub(1);
        let ys = (y + 1).min(h - 1);
        for x in 0..w {
            let xw = x.saturating_sub(1);
            let xe = (x + 1).min(w - 1);
            let v = frame.get(x, yn) + frame.get(x, ys) + frame.get(xw, y) + frame.get(xe, y)
                - four * frame.get(x, y);
            let mag = v.abs();
            if mag > params.theta_th {
                active.push((x, y, mag));
            }
        }
    }
    stratified_select(active, w, h, params)
}

/// Round-robin selection over an 8x8 bucket grid, strongest magnitude first
/// within each bucket; `active` must be in row-major scan order.
fn stratified_select<T: Real>(
    active: Vec<(usize, usize, T)>,
    width: usize,
    height: usize,
    params: &CmcParams<T>,
) -> Vec<Keypoint<T>> {
    let to_kp =
        |(x, y, _): (usize, usize, T)| Keypoint::new(real::<T>(x as f64), real::<T>(y as f64));

    if active.len() <= params.num_keypoints {
        return active.into_iter().map(to_kp).collect();
    }

    let mut buckets: Vec<Vec<(usize, usize, T)>> = vec![Vec::new(); BUCKET_GRID * BUCKET_GRID];
    for &(x, y, mag) in &active {
        let bx = (x * BUCKET_GRID / width).min(BUCKET_GRID - 1);
        let by = (y * BUCKET_GRID / height).min(BUCKET_GRID - 1);
        buckets[by * BUCKET_GRID + bx].push((x, y, mag));
    }
    for bucket in &mut buckets {
        // Strongest first; ties broken by scan order for determinism.
        bucket.sort_by(|a, b| {
            b.2.partial_cmp(&a.2).unwrap().then_with(|| (a.1, a.0).cmp(&(b.1, b.0)))
        });
    }

    let mut selected = Vec::with_capacity(params.num_keypoints);
    let mut cursor = vec![0usize; buckets.len()];
    while selected.len() < params.num_keypoints {
        let mut advanced = false;
        for (b, bucket) in buckets.iter().enumerate() {
            if cursor[b] < bucket.len() {
                selected.push(bucket[cursor[b]]);
                cursor[b] += 1;
                advanced = true;
                if selected.len() == params.num_keypoints {
                    break;
                }
            }
        }
        if !advanced {
            break;
        }
    }
    selected.into_iter().map(to_kp).collect()
}

/// One full camera-motion step: flow the previous keypoints into the current
/// frame, fit an affine transform robustly, and produce fresh keypoints for
/// the next step. Any failure along the way degrades to the identity
/// transform; the keypoint refresh always happens.
pub fn estimate<T: Real, R: Rng>(
    prev: &GrayFrame<T>,
    curr: &GrayFrame<T>,
    prev_keypoints: &[Keypoint<T>],
    params: &CmcParams<T>,
    rng: &mut R,
) -> (AffineTransform<T>, Vec<Keypoint<T>>) {
    if prev.width() != curr.width() || prev.height() != curr.height() {
        log::debug!("frame dimensions changed mid-sequence; using identity");
        return (AffineTransform::identity(), detect_keypoints(curr, params));
    }
    estimate_pyramids(
        &Pyramid::build(prev, params),
        &Pyramid::build(curr, params),
        curr,
        prev_keypoints,
        params,
        rng,
    )
}

/// [`estimate`] over prebuilt pyramids, so a pyramid built for the current
/// frame can be reused as the previous-frame pyramid of the next call.
pub fn estimate_pyramids<T: Real, R: Rng>(
    prev: &Pyramid<T>,
    curr: &Pyramid<T>,
    curr_frame: &GrayFrame<T>,
    prev_keypoints: &[Keypoint<T>],
    params: &CmcParams<T>,
    rng: &mut R,
) -> (AffineTransform<T>, Vec<Keypoint<T>>) {
    let next_keypoints = detect_keypoints(curr_frame, params);

    let transform = if prev_keypoints.len() < 3
        || prev.width() != curr.width()
        || prev.height() != curr.height()
    {
        AffineTransform::identity()
    } else {
        let flow = lucas_kanade_pyramids(prev, curr, prev_keypoints, params);
        match ransac_affine(prev_keypoints, &flow.points, &flow.valid, params, rng) {
            Ok(t) => t,
            Err(err) => {
                log::debug!("camera motion fit failed ({err}); using identity");
                AffineTransform::identity()
            }
        }
    };
    (transform, next_keypoints)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn frame_from(width: usize, height: usize, f: impl Fn(usize, usize) -> f64) -> GrayFrame<f64> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        GrayFrame::new(width, height, 0, data).unwrap()
    }

    fn noise_frame(width: usize, height: usize, index: u64, seed: u64) -> GrayFrame<f64> {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..width * height).map(|_| rng.random_range(0.0..1.0)).collect();
        GrayFrame::new(width, height, index, data).unwrap()
    }

    #[test]
    fn defaults_match_published_hyperparameters() {
        let p = CmcParams::<f64>::default();
        assert_eq!(p.theta_th, 0.9);
        assert_eq!(p.num_keypoints, 210);
    }

    #[test]
    fn validate_rejects_bad_params() {
        let mut p = CmcParams::<f64>::default();
        p.lk_window = 20;
        assert_eq!(p.validate().unwrap_err(), CmcConfigError::BadWindow(20));
        p = CmcParams::default();
        p.num_keypoints = 2;
        assert_eq!(p.validate().unwrap_err(), CmcConfigError::TooFewKeypoints(2));
        assert!(CmcParams::<f64>::default().validate().is_ok());
    }

    #[test]
    fn laplacian_of_constant_is_zero() {
        let frame = frame_from(7, 5, |_, _| 0.4);
        assert!(laplacian_response(&frame).values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn laplacian_of_single_impulse() {
        let frame = frame_from(5, 5, |x, y| if (x, y) == (2, 2) { 1.0 } else { 0.0 });
        let r = laplacian_response(&frame);
        for y in 0..5 {
            for x in 0..5 {
                let expected = match (x, y) {
                    (2, 2) => -4.0,
                    (1, 2) | (3, 2) | (2, 1) | (2, 3) => 1.0,
                    _ => 0.0,
                };
                assert_eq!(r.get(x, y), expected, "at ({x},{y})");
            }
        }
    }

    #[test]
    fn laplacian_of_linear_ramp_vanishes_inside() {
        let w = 16;
        let frame = frame_from(w, 8, |x, _| x as f64 / w as f64);
        let r = laplacian_response(&frame);
        for y in 1..7 {
            for x in 1..(w - 1) {
                assert!(r.get(x, y).abs() < 1e-9, "at ({x},{y}): {}", r.get(x, y));
            }
        }
    }

    #[test]
    fn select_on_constant_image_is_empty() {
        let frame = frame_from(32, 32, |_, _| 0.7);
        let kps = select_keypoints(&laplacian_response(&frame), &CmcParams::default());
        assert!(kps.is_empty());
    }

    #[test]
    fn select_returns_all_when_under_budget() {
        let frame = frame_from(32, 32, |x, y| if (x, y) == (10, 12) { 1.0 } else { 0.0 });
        let kps = select_keypoints(&laplacian_response(&frame), &CmcParams::default());
        // One impulse activates its center and 4 neighbors.
        assert_eq!(kps.len(), 5);
    }

    #[test]
    fn select_stratified_takes_impulse_centers_first() {
        // 500 isolated impulses on a grid, every one activating a center
        // (|response| 4) and four neighbors (|response| 1). With a budget of
        // 210 the round-robin must exhaust centers before any neighbor.
        let w = 200;
        let h = 160;
        let frame = frame_from(w, h, |x, y| {
            if x % 8 == 4 && y % 8 == 4 && (x / 8) < 25 && (y / 8) < 20 {
                1.0
            } else {
                0.0
            }
        });
        let params = CmcParams::<f64>::default();
        let response = laplacian_response(&frame);
        let kps = select_keypoints(&response, &params);
        assert_eq!(kps.len(), 210);
        for kp in &kps {
            let (x, y) = (kp.x as usize, kp.y as usize);
            assert_eq!(response.get(x, y), -4.0, "picked a non-center at ({x},{y})");
        }
        // All picks are distinct impulses.
        let mut seen: Vec<(usize, usize)> =
            kps.iter().map(|k| (k.x as usize, k.y as usize)).collect();
        seen.sort_unstable();
        seen.dedup();
        assert_eq!(seen.len(), 210);
    }

    #[test]
    fn streaming_detector_matches_two_pass_pipeline() {
        let frame = noise_frame(160, 120, 0, 3);
        let params = CmcParams::<f64>::default();
        let two_pass = select_keypoints(&laplacian_response(&frame), &params);
        let streaming = detect_keypoints(&frame, &params);
        assert_eq!(two_pass, streaming);
    }

    #[test]
    fn estimate_with_no_keypoints_returns_identity_and_fresh_points() {
        let prev = noise_frame(64, 48, 0, 5);
        let curr = noise_frame(64, 48, 1, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (t, kps) = estimate(&prev, &curr, &[], &CmcParams::default(), &mut rng);
        assert_eq!(t, AffineTransform::identity());
        assert!(!kps.is_empty());
    }

    #[test]
    fn estimate_on_static_scene_is_near_identity() {
        let frame = noise_frame(96, 72, 0, 9);
        let params = CmcParams::default();
        let kps = select_keypoints(&laplacian_response(&frame), &params);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (t, _) = estimate(&frame, &frame.clone(), &kps, &params, &mut rng);
        let id = AffineTransform::<f64>::identity();
        for i in 0..2 {
            for j in 0..2 {
                assert!((t.rotation[i][j] - id.rotation[i][j]).abs() < 1e-3);
            }
            assert!(t.displacement[i].abs() < 1e-3);
        }
    }
}
