//! Geometry primitives, detections, frames, and shared value types.

use thiserror::Error;

use crate::{real, Real};

/// Axis-aligned bounding box stored as top-left corner plus size, matching
/// the MOT text layout. Center form is derived, never stored.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BBox<T> {
    pub left: T,
    pub top: T,
    pub width: T,
    pub height: T,
}

impl<T: Real> BBox<T> {
    pub fn new(left: T, top: T, width: T, height: T) -> Self {
        Self { left, top, width, height }
    }

    /// Builds a box from its center point and size.
    pub fn from_center(cx: T, cy: T, width: T, height: T) -> Self {
        let two = real::<T>(2.0);
        Self { left: cx - width / two, top: cy - height / two, width, height }
    }

    /// Center point `(left + width/2, top + height/2)`.
    pub fn center(&self) -> (T, T) {
        let two = real::<T>(2.0);
        (self.left + self.width / two, self.top + self.height / two)
    }

    pub fn right(&self) -> T {
        self.left + self.width
    }

    pub fn bottom(&self) -> T {
        self.top + self.height
    }

    pub fn area(&self) -> T {
        self.width * self.height
    }
}

/// Intersection-over-union of two boxes. Degenerate inputs (zero or negative
/// union area) yield 0 rather than an error.
///
/// Box extents are derived from the same `right - left` / `bottom - top`
/// differences used for the intersection, so `iou(a, a)` is exactly 1 for
/// any box with positive area.
pub fn iou<T: Real>(a: &BBox<T>, b: &BBox<T>) -> T {
    let ix = (a.right().min(b.right()) - a.left.max(b.left)).max(T::zero());
    let iy = (a.bottom().min(b.bottom()) - a.top.max(b.top)).max(T::zero());
    let inter = ix * iy;
    let area = |r: &BBox<T>| (r.right() - r.left).max(T::zero()) * (r.bottom() - r.top).max(T::zero());
    let union = area(a) + area(b) - inter;
    if union <= T::zero() {
        T::zero()
    } else {
        inter / union
    }
}

/// A detector output: box, confidence in `[0, 1]`, and class label.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection<T> {
    pub bbox: BBox<T>,
    pub score: T,
    pub class_id: i32,
}

impl<T: Real> Detection<T> {
    pub fn new(bbox: BBox<T>, score: T, class_id: i32) -> Self {
        Self { bbox, score, class_id }
    }
}

/// Sub-pixel image point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Keypoint<T> {
    pub x: T,
    pub y: T,
}

impl<T: Real> Keypoint<T> {
    pub fn new(x: T, y: T) -> Self {
        Self { x, y }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FrameError {
    #[error("frame dimensions must be positive, got {width}x{height}")]
    EmptyDimensions { width: usize, height: usize },
    #[error("intensity buffer holds {got} values, expected {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("intensity at index {index} is outside [0, 1]")]
    IntensityOutOfRange { index: usize },
}

/// Single-channel frame with intensities normalized to `[0, 1]`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayFrame<T> {
    width: usize,
    height: usize,
    frame_index: u64,
    data: Vec<T>,
}

impl<T: Real> GrayFrame<T> {
    pub fn new(
        width: usize,
        height: usize,
        frame_index: u64,
        data: Vec<T>,
    ) -> Result<Self, FrameError> {
        if width == 0 || height == 0 {
            return Err(FrameError::EmptyDimensions { width, height });
        }
        if data.len() != width * height {
            return Err(FrameError::LengthMismatch { expected: width * height, got: data.len() });
        }
        for (index, v) in data.iter().enumerate() {
            if !(*v >= T::zero() && *v <= T::one()) {
                return Err(FrameError::IntensityOutOfRange { index });
            }
        }
        Ok(Self { width, height, frame_index, data })
    }

    /// Builds a frame from 8-bit samples, normalizing by 255.
    pub fn from_u8(
        width: usize,
        height: usize,
        frame_index: u64,
        bytes: &[u8],
    ) -> Result<Self, FrameError> {
        let scale = real::<T>(1.0 / 255.0);
        let data = bytes.iter().map(|&b| real::<T>(f64::from(b)) * scale).collect();
        Self::new(width, height, frame_index, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn frame_index(&self) -> u64 {
        self.frame_index
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> T {
        self.data[y * self.width + x]
    }
}

/// Per-frame camera motion: a 2x2 linear block and a 2-vector displacement,
/// obtained by column-splitting a full 2x3 affine matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineTransform<T> {
    pub rotation: [[T; 2]; 2],
    pub displacement: [T; 2],
}

impl<T: Real> AffineTransform<T> {
    pub fn identity() -> Self {
        Self {
            rotation: [[T::one(), T::zero()], [T::zero(), T::one()]],
            displacement: [T::zero(), T::zero()],
        }
    }

    /// Splits a row-major 2x3 matrix `[R | d]` into its blocks.
    pub fn from_2x3(m: [[T; 3]; 2]) -> Self {
        Self { rotation: [[m[0][0], m[0][1]], [m[1][0], m[1][1]]], displacement: [m[0][2], m[1][2]] }
    }

    pub fn translation(dx: T, dy: T) -> Self {
        Self { rotation: [[T::one(), T::zero()], [T::zero(), T::one()]], displacement: [dx, dy] }
    }

    /// Rotation by `radians` about the origin, no displacement.
    pub fn rotation_about_origin(radians: T) -> Self {
        let (s, c) = radians.sin_cos();
        Self { rotation: [[c, -s], [s, c]], displacement: [T::zero(), T::zero()] }
    }

    /// Rotation by `radians` about `center`, then translation by `(dx, dy)`.
    pub fn rigid_about(center: (T, T), radians: T, dx: T, dy: T) -> Self {
        let (s, c) = radians.sin_cos();
        let rotation = [[c, -s], [s, c]];
        // d = c - R c + t, so that apply(c) = c + t.
        let displacement = [
            center.0 - (c * center.0 - s * center.1) + dx,
            center.1 - (s * center.0 + c * center.1) + dy,
        ];
        Self { rotation, displacement }
    }

    #[inline]
    pub fn apply(&self, point: (T, T)) -> (T, T) {
        (
            self.rotation[0][0] * point.0 + self.rotation[0][1] * point.1 + self.displacement[0],
            self.rotation[1][0] * point.0 + self.rotation[1][1] * point.1 + self.displacement[1],
        )
    }

    /// Applies only the linear block, ignoring displacement.
    #[inline]
    pub fn apply_linear(&self, point: (T, T)) -> (T, T) {
        (
            self.rotation[0][0] * point.0 + self.rotation[0][1] * point.1,
            self.rotation[1][0] * point.0 + self.rotation[1][1] * point.1,
        )
    }

    /// Returns the transform equivalent to applying `inner` first, then
    /// `self`: `R = R_self R_inner`, `d = R_self d_inner + d_self`.
    pub fn compose(&self, inner: &Self) -> Self {
        let a = &self.rotation;
        let b = &inner.rotation;
        let rotation = [
            [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
            [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
        ];
        let moved = self.apply_linear((inner.displacement[0], inner.displacement[1]));
        Self {
            rotation,
            displacement: [moved.0 + self.displacement[0], moved.1 + self.displacement[1]],
        }
    }

    pub fn determinant(&self) -> T {
        self.rotation[0][0] * self.rotation[1][1] - self.rotation[0][1] * self.rotation[1][0]
    }

    /// Inverse transform; `None` when the linear block is singular.
    pub fn inverse(&self) -> Option<Self> {
        let det = self.determinant();
        if det == T::zero() {
            return None;
        }
        let inv = [
            [self.rotation[1][1] / det, -self.rotation[0][1] / det],
            [-self.rotation[1][0] / det, self.rotation[0][0] / det],
        ];
        let dx = -(inv[0][0] * self.displacement[0] + inv[0][1] * self.displacement[1]);
        let dy = -(inv[1][0] * self.displacement[0] + inv[1][1] * self.displacement[1]);
        Some(Self { rotation: inv, displacement: [dx, dy] })
    }

    /// Row-major 2x3 form `[R | d]`.
    pub fn to_2x3(&self) -> [[T; 3]; 2] {
        [
            [self.rotation[0][0], self.rotation[0][1], self.displacement[0]],
            [self.rotation[1][0], self.rotation[1][1], self.displacement[1]],
        ]
    }
}
