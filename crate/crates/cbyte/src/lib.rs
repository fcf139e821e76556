//! Camera-motion-compensated multi-object tracking.
//!
//! The crate implements a BYTE-style two-stage tracking-by-detection pipeline
//! whose Kalman predictions are corrected by a per-frame global camera motion
//! estimate (Laplacian keypoints, pyramidal Lucas-Kanade flow, RANSAC affine
//! fit). Around the tracker core sit a MOT-text I/O layer, a CLEAR/identity
//! metrics evaluator, and a synthetic sequence generator with planted camera
//! motion for ablations.
//!
//! All numeric code is generic over the scalar type through the [`Real`]
//! trait; `f32` and `f64` both work, and concrete aliases are exported at the
//! crate root.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

pub mod assoc;
pub mod cmc;
pub mod kalman;
pub mod metrics;
pub mod mot;
pub mod synth;
pub mod tracker;
pub mod types;

/// Scalar bound for all geometry, filtering, and estimation code.
///
/// Blanket-implemented for any floating-point type exposing the num-traits
/// surface below; in practice that means `f32` and `f64`.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + NumAssign + Debug + Display + Default + Send + Sync + 'static
{
}

impl<T> Real for T where
    T: Float
        + FromPrimitive
        + ToPrimitive
        + NumAssign
        + Debug
        + Display
        + Default
        + Send
        + Sync
        + 'static
{
}

/// Converts an `f64` constant into the working scalar type.
pub(crate) fn real<T: Real>(value: f64) -> T {
    T::from_f64(value).expect("scalar type must represent f64 constants")
}

pub use crate::types::{iou, AffineTransform, BBox, Detection, GrayFrame, Keypoint};

pub type BBox32 = BBox<f32>;
pub type BBox64 = BBox<f64>;
pub type Detection32 = Detection<f32>;
pub type Detection64 = Detection<f64>;
pub type GrayFrame32 = GrayFrame<f32>;
pub type GrayFrame64 = GrayFrame<f64>;
pub type AffineTransform32 = AffineTransform<f32>;
pub type AffineTransform64 = AffineTransform<f64>;
pub type Tracker32 = tracker::Tracker<f32>;
pub type Tracker64 = tracker::Tracker<f64>;
