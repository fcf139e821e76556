//! Per-frame tracking pipeline: predict, camera-correct, two-stage
//! associate, prune, spawn, refresh keypoints.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::assoc::{cost_matrix, linear_assignment, split_detections};
use crate::cmc::{self, CmcConfigError, CmcParams, Pyramid};
use crate::kalman::{apply_affine, KalmanFilter, KalmanParams, KalmanState};
use crate::types::{AffineTransform, BBox, Detection, GrayFrame, Keypoint};
use crate::{real, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrackStatus {
    /// Freshly spawned, not yet confirmed by consecutive matches.
    Tentative,
    /// Confirmed and matched in the current frame.
    Tracked,
    /// Confirmed but unmatched for at least one frame.
    Lost,
    /// Aged out; excluded from all future associations.
    Removed,
}

/// A tracked identity with its motion state and lifecycle bookkeeping.
#[derive(Debug, Clone)]
pub struct Track<T> {
    pub id: u32,
    pub state: KalmanState<T>,
    pub status: TrackStatus,
    /// Score of the last matched detection.
    pub score: T,
    pub frames_since_update: u32,
    pub start_frame: u64,
    pub hit_count: u32,
}

/// Immutable per-frame record of a confirmed track.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackSnapshot<T> {
    pub frame: u64,
    pub id: u32,
    pub bbox: BBox<T>,
    pub score: T,
}

/// Wall-clock stage costs for one `step` call, in milliseconds.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StageTiming {
    /// Kalman prediction plus affine correction of the predictions.
    pub predict_ms: f64,
    /// Camera motion estimation: Laplacian, selection, flow, RANSAC.
    pub cmc_ms: f64,
    /// Score split, cost matrices, and both assignment rounds.
    pub associate_ms: f64,
    /// State updates, lifecycle transitions, spawning, history.
    pub bookkeeping_ms: f64,
}

impl StageTiming {
    pub fn total_ms(&self) -> f64 {
        self.predict_ms + self.cmc_ms + self.associate_ms + self.bookkeeping_ms
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("score thresholds must satisfy 0 <= tau_low <= tau_high <= 1")]
    BadScoreThresholds,
    #[error("association gates must lie in [0, 1]")]
    BadCostGates,
    #[error("max_lost_age must be at least 1")]
    BadLostAge,
    #[error("min_hits_to_confirm must be at least 1")]
    BadMinHits,
    #[error(transparent)]
    Cmc(#[from] CmcConfigError),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StepError {
    #[error("frame index {got} is not greater than the last processed index {last}")]
    OutOfOrderFrame { got: u64, last: u64 },
}

/// Full tracker configuration. Defaults: score split 0.6/0.1, association
/// gates 0.8/0.5, lost tracks kept for 30 frames, confirmation after 2
/// consecutive hits, camera compensation on.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackerConfig<T> {
    pub cmc: CmcParams<T>,
    pub kalman: KalmanParams<T>,
    pub tau_high: T,
    pub tau_low: T,
    pub primary_max_cost: T,
    pub secondary_max_cost: T,
    /// Frames a lost track persists before removal (the duration `k`).
    pub max_lost_age: u32,
    pub min_hits_to_confirm: u32,
    pub enable_cmc: bool,
}

impl<T: Real> Default for TrackerConfig<T> {
    fn default() -> Self {
        Self {
            cmc: CmcParams::default(),
            kalman: KalmanParams::default(),
            tau_high: real(0.6),
            tau_low: real(0.1),
            primary_max_cost: real(0.8),
            secondary_max_cost: real(0.5),
            max_lost_age: 30,
            min_hits_to_confirm: 2,
            enable_cmc: true,
        }
    }
}

impl<T: Real> TrackerConfig<T> {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let in_unit = |v: T| v >= T::zero() && v <= T::one();
        if !(in_unit(self.tau_low) && in_unit(self.tau_high) && self.tau_low <= self.tau_high) {
            return Err(ConfigError::BadScoreThresholds);
        }
        if !(in_unit(self.primary_max_cost) && in_unit(self.secondary_max_cost)) {
            return Err(ConfigError::BadCostGates);
        }
        if self.max_lost_age < 1 {
            return Err(ConfigError::BadLostAge);
        }
        if self.min_hits_to_confirm < 1 {
            return Err(ConfigError::BadMinHits);
        }
        self.cmc.validate()?;
        Ok(())
    }
}

/// Single-stream multi-object tracker. One instance per video; `step` calls
/// must arrive in increasing frame order. Distinct instances are
/// independent.
pub struct Tracker<T> {
    config: TrackerConfig<T>,
    filter: KalmanFilter<T>,
    tracks: Vec<Track<T>>,
    next_id: u32,
    prev_pyramid: Option<Pyramid<T>>,
    // Retired pyramid storage, recycled to avoid per-frame allocation.
    spare_pyramid: Option<Pyramid<T>>,
    keypoints: Vec<Keypoint<T>>,
    last_frame_index: Option<u64>,
    history: Vec<TrackSnapshot<T>>,
    timings: Vec<StageTiming>,
    last_transform: AffineTransform<T>,
    rng: ChaCha8Rng,
}

impl<T: Real> Tracker<T> {
    pub fn new(config: TrackerConfig<T>, seed: u64) -> Result<Self, ConfigError> {
        config.validate()?;
        let filter = KalmanFilter::new(config.kalman);
        Ok(Self {
            config,
            filter,
            tracks: Vec::new(),
            next_id: 1,
            prev_pyramid: None,
            spare_pyramid: None,
            keypoints: Vec::new(),
            last_frame_index: None,
            history: Vec::new(),
            timings: Vec::new(),
            last_transform: AffineTransform::identity(),
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn config(&self) -> &TrackerConfig<T> {
        &self.config
    }

    /// Live tracks (anything not yet removed).
    pub fn tracks(&self) -> &[Track<T>] {
        &self.tracks
    }

    /// Camera motion estimated during the most recent step.
    pub fn last_transform(&self) -> &AffineTransform<T> {
        &self.last_transform
    }

    /// Stage timings for every step so far, one entry per frame.
    pub fn timings(&self) -> &[StageTiming] {
        &self.timings
    }

    /// Every snapshot emitted so far, in emission order. Records of removed
    /// tracks are retained; the history is append-only.
    pub fn flush(&self) -> &[TrackSnapshot<T>] {
        &self.history
    }

    /// Advances the tracker by one frame and returns snapshots of the
    /// confirmed, currently matched tracks.
    pub fn step(
        &mut self,
        frame: &GrayFrame<T>,
        detections: &[Detection<T>],
    ) -> Result<Vec<TrackSnapshot<T>>, StepError> {
        if let Some(last) = self.last_frame_index {
            if frame.frame_index() <= last {
                return Err(StepError::OutOfOrderFrame { got: frame.frame_index(), last });
            }
        }
        self.last_frame_index = Some(frame.frame_index());
        let mut timing = StageTiming::default();

        // Motion prediction for every live track.
        let t0 = Instant::now();
        for track in &mut self.tracks {
            track.state = self.filter.predict(&track.state);
        }
        timing.predict_ms = ms_since(t0);

        // Camera motion estimation against the previous frame, plus the
        // keypoint refresh for the next step. The current frame's pyramid
        // is kept for the next pair. Skipped entirely (identity) when
        // compensation is disabled or on the first frame.
        let t0 = Instant::now();
        let transform = if self.config.enable_cmc {
            let mut curr_pyramid = self.spare_pyramid.take().unwrap_or_else(Pyramid::empty);
            curr_pyramid.rebuild(frame, &self.config.cmc);
            let transform = match self.prev_pyramid.take() {
                Some(prev) => {
                    let (t, next_kps) = cmc::estimate_pyramids(
                        &prev,
                        &curr_pyramid,
                        frame,
                        &self.keypoints,
                        &self.config.cmc,
                        &mut self.rng,
                    );
                    self.keypoints = next_kps;
                    self.spare_pyramid = Some(prev);
                    t
                }
                None => {
                    self.keypoints = cmc::detect_keypoints(frame, &self.config.cmc);
                    AffineTransform::identity()
                }
            };
            self.prev_pyramid = Some(curr_pyramid);
            timing.cmc_ms = ms_since(t0);
            transform
        } else {
            AffineTransform::identity()
        };
        self.last_transform = transform;

        // Correct every prediction for the estimated camera motion.
        let t0 = Instant::now();
        if self.config.enable_cmc {
            for track in &mut self.tracks {
                track.state = apply_affine(&track.state, &transform);
            }
        }
        timing.predict_ms += ms_since(t0);

        // Two-stage association on the transformed predictions.
        let t0 = Instant::now();
        let (high, low) = split_detections(detections, self.config.tau_high, self.config.tau_low);

        let track_boxes: Vec<BBox<T>> = self.tracks.iter().map(|t| t.state.bbox()).collect();
        let high_boxes: Vec<BBox<T>> = high.iter().map(|d| d.bbox).collect();
        let primary = linear_assignment(
            &cost_matrix(&track_boxes, &high_boxes),
            self.config.primary_max_cost,
        );

        // Secondary round: low-score detections against the confirmed
        // tracks left over from the primary round, still using the same
        // transformed predictions.
        let secondary_rows: Vec<usize> = primary
            .unmatched_rows
            .iter()
            .copied()
            .filter(|&i| self.tracks[i].status == TrackStatus::Tracked)
            .collect();
        let secondary_boxes: Vec<BBox<T>> =
            secondary_rows.iter().map(|&i| track_boxes[i]).collect();
        let low_boxes: Vec<BBox<T>> = low.iter().map(|d| d.bbox).collect();
        let secondary = linear_assignment(
            &cost_matrix(&secondary_boxes, &low_boxes),
            self.config.secondary_max_cost,
        );
        timing.associate_ms = ms_since(t0);

        // Fuse matches, advance lifecycles, spawn from leftover high-score
        // detections, and emit snapshots.
        let t0 = Instant::now();
        let mut matched = vec![false; self.tracks.len()];
        for &(ti, dj) in &primary.pairs {
            matched[ti] = true;
            self.apply_match(ti, &high[dj]);
        }
        for &(si, dj) in &secondary.pairs {
            let ti = secondary_rows[si];
            matched[ti] = true;
            self.apply_match(ti, &low[dj]);
        }

        for (ti, track) in self.tracks.iter_mut().enumerate() {
            if matched[ti] {
                continue;
            }
            track.frames_since_update += 1;
            match track.status {
                TrackStatus::Tentative => track.status = TrackStatus::Removed,
                TrackStatus::Tracked => track.status = TrackStatus::Lost,
                TrackStatus::Lost if track.frames_since_update > self.config.max_lost_age => {
                    track.status = TrackStatus::Removed;
                }
                _ => {}
            }
        }

        for &dj in &primary.unmatched_cols {
            self.spawn(&high[dj], frame.frame_index());
        }

        let snapshots: Vec<TrackSnapshot<T>> = self
            .tracks
            .iter()
            .filter(|t| t.status == TrackStatus::Tracked)
            .map(|t| TrackSnapshot {
                frame: frame.frame_index(),
                id: t.id,
                bbox: t.state.bbox(),
                score: t.score,
            })
            .collect();
        self.history.extend_from_slice(&snapshots);
        self.tracks.retain(|t| t.status != TrackStatus::Removed);
        timing.bookkeeping_ms = ms_since(t0);
        self.timings.push(timing);

        Ok(snapshots)
    }

    fn apply_match(&mut self, track_index: usize, detection: &Detection<T>) {
        let track = &mut self.tracks[track_index];
        match self.filter.update(&track.state, &detection.bbox) {
            Ok(state) => track.state = state,
            Err(err) => {
                // Keep the prediction rather than dropping the frame.
                log::warn!("track {} update failed: {err}", track.id);
            }
        }
        track.frames_since_update = 0;
        track.hit_count += 1;
        track.score = detection.score;
        track.status = match track.status {
            TrackStatus::Tentative if track.hit_count < self.config.min_hits_to_confirm => {
                TrackStatus::Tentative
            }
            _ => TrackStatus::Tracked,
        };
    }

    fn spawn(&mut self, detection: &Detection<T>, frame_index: u64) {
        match self.filter.initiate(&detection.bbox) {
            Ok(state) => {
                let status = if self.config.min_hits_to_confirm <= 1 {
                    TrackStatus::Tracked
                } else {
                    TrackStatus::Tentative
                };
                self.tracks.push(Track {
                    id: self.next_id,
                    state,
                    status,
                    score: detection.score,
                    frames_since_update: 0,
                    start_frame: frame_index,
                    hit_count: 1,
                });
                self.next_id += 1;
            }
            Err(err) => log::warn!("skipping degenerate detection: {err}"),
        }
    }
}

fn ms_since(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}
