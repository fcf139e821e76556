//! Constant-velocity Kalman filter over the 8-dimensional box state
//! `(cx, cy, w, h, vx, vy, vw, vh)`, plus affine correction of predicted
//! states for camera motion.

use thiserror::Error;

use crate::types::{AffineTransform, BBox};
use crate::{real, Real};

pub const STATE_DIM: usize = 8;
pub const MEAS_DIM: usize = 4;

/// Smallest width/height kept after a measurement update, to avoid
/// degenerate IoU downstream.
const MIN_SIZE: f64 = 1e-3;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum KalmanError {
    #[error("measurement box has zero or negative area")]
    ZeroAreaMeasurement,
    #[error("innovation covariance is numerically degenerate")]
    NumericalDegeneracy,
}

/// Noise scales, expressed as standard deviations proportional to the box
/// height (the common tracking-by-detection convention).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KalmanParams<T> {
    pub std_weight_position: T,
    pub std_weight_velocity: T,
}

impl<T: Real> Default for KalmanParams<T> {
    fn default() -> Self {
        Self { std_weight_position: real(1.0 / 20.0), std_weight_velocity: real(1.0 / 160.0) }
    }
}

/// Gaussian state estimate: mean `(cx, cy, w, h, vx, vy, vw, vh)` and 8x8
/// covariance. Positions are box centers; the covariance stays symmetric
/// and positive semi-definite under every operation.
#[derive(Debug, Clone, PartialEq)]
pub struct KalmanState<T> {
    mean: [T; STATE_DIM],
    covariance: [[T; STATE_DIM]; STATE_DIM],
}

impl<T: Real> KalmanState<T> {
    pub fn from_parts(mean: [T; STATE_DIM], covariance: [[T; STATE_DIM]; STATE_DIM]) -> Self {
        Self { mean, covariance }
    }

    pub fn mean(&self) -> &[T; STATE_DIM] {
        &self.mean
    }

    pub fn covariance(&self) -> &[[T; STATE_DIM]; STATE_DIM] {
        &self.covariance
    }

    /// Current state as a top-left box.
    pub fn bbox(&self) -> BBox<T> {
        BBox::from_center(self.mean[0], self.mean[1], self.mean[2], self.mean[3])
    }

    pub fn covariance_trace(&self) -> T {
        (0..STATE_DIM).fold(T::zero(), |acc, i| acc + self.covariance[i][i])
    }
}

/// The filter itself is stateless apart from its noise parameters; every
/// operation maps an input state to a fresh output state.
#[derive(Debug, Clone)]
pub struct KalmanFilter<T> {
    params: KalmanParams<T>,
}

impl<T: Real> Default for KalmanFilter<T> {
    fn default() -> Self {
        Self { params: KalmanParams::default() }
    }
}

impl<T: Real> KalmanFilter<T> {
    pub fn new(params: KalmanParams<T>) -> Self {
        Self { params }
    }

    pub fn params(&self) -> &KalmanParams<T> {
        &self.params
    }

    /// Creates a track state from its first measurement: center/size from
    /// the box, zero velocities, diagonal covariance seeded from
    /// size-proportional standard deviations.
    pub fn initiate(&self, measurement: &BBox<T>) -> Result<KalmanState<T>, KalmanError> {
        if measurement.width <= T::zero() || measurement.height <= T::zero() {
            return Err(KalmanError::ZeroAreaMeasurement);
        }
        let (cx, cy) = measurement.center();
        let mean = [
            cx,
            cy,
            measurement.width,
            measurement.height,
            T::zero(),
            T::zero(),
            T::zero(),
            T::zero(),
        ];
        let h = measurement.height;
        let pos_std = real::<T>(2.0) * self.params.std_weight_position * h;
        let vel_std = real::<T>(10.0) * self.params.std_weight_velocity * h;
        let mut covariance = [[T::zero(); STATE_DIM]; STATE_DIM];
        for i in 0..MEAS_DIM {
            covariance[i][i] = pos_std * pos_std;
            covariance[i + 4][i + 4] = vel_std * vel_std;
        }
        Ok(KalmanState { mean, covariance })
    }

    /// Advances the state one frame under the constant-velocity model:
    /// `P' = F P F^T + Q` with `Q` rebuilt from the current box height.
    pub fn predict(&self, state: &KalmanState<T>) -> KalmanState<T> {
        let mut mean = state.mean;
        for i in 0..4 {
            mean[i] = mean[i] + mean[i + 4];
        }

        // F P F^T exploits the sparsity of F = [I I; 0 I].
        let p = &state.covariance;
        let mut fp = [[T::zero(); STATE_DIM]; STATE_DIM];
        for i in 0..STATE_DIM {
            for j in 0..STATE_DIM {
                fp[i][j] = if i < 4 { p[i][j] + p[i + 4][j] } else { p[i][j] };
            }
        }
        let mut covariance = [[T::zero(); STATE_DIM]; STATE_DIM];
        for i in 0..STATE_DIM {
            for j in 0..STATE_DIM {
                covariance[i][j] = if j < 4 { fp[i][j] + fp[i][j + 4] } else { fp[i][j] };
            }
        }

        let h = state.mean[3];
        let pos_std = self.params.std_weight_position * h;
        let vel_std = self.params.std_weight_velocity * h;
        for i in 0..MEAS_DIM {
            covariance[i][i] += pos_std * pos_std;
            covariance[i + 4][i + 4] += vel_std * vel_std;
        }
        symmetrize(&mut covariance);
        KalmanState { mean, covariance }
    }

    /// Fuses a measured box into the state. Uses the Joseph-form covariance
    /// update, which preserves symmetry and positive semi-definiteness.
    pub fn update(
        &self,
        state: &KalmanState<T>,
        measurement: &BBox<T>,
    ) -> Result<KalmanState<T>, KalmanError> {
        if measurement.width <= T::zero() || measurement.height <= T::zero() {
            return Err(KalmanError::ZeroAreaMeasurement);
        }
        let (mx, my) = measurement.center();
        let z = [mx, my, measurement.width, measurement.height];

        let p = &state.covariance;
        let meas_std = self.params.std_weight_position * state.mean[3];
        let r = meas_std * meas_std;

        // S = H P H^T + R is the top-left 4x4 block plus R.
        let mut s = [[T::zero(); MEAS_DIM]; MEAS_DIM];
        for i in 0..MEAS_DIM {
            for j in 0..MEAS_DIM {
                s[i][j] = p[i][j];
            }
            s[i][i] += r;
        }
        let chol = cholesky4(&s).ok_or(KalmanError::NumericalDegeneracy)?;

        // K = P H^T S^{-1}: solve S K^T = (P H^T)^T column by column.
        let mut gain = [[T::zero(); MEAS_DIM]; STATE_DIM];
        for row in 0..STATE_DIM {
            let rhs = [p[row][0], p[row][1], p[row][2], p[row][3]];
            gain[row] = chol_solve4(&chol, &rhs);
        }

        let mut mean = state.mean;
        let innovation = [
            z[0] - state.mean[0],
            z[1] - state.mean[1],
            z[2] - state.mean[2],
            z[3] - state.mean[3],
        ];
        for i in 0..STATE_DIM {
            for j in 0..MEAS_DIM {
                mean[i] += gain[i][j] * innovation[j];
            }
        }
        mean[2] = mean[2].max(real(MIN_SIZE));
        mean[3] = mean[3].max(real(MIN_SIZE));

        // Joseph form: P' = (I - K H) P (I - K H)^T + K R K^T.
        let mut a = [[T::zero(); STATE_DIM]; STATE_DIM];
        for i in 0..STATE_DIM {
            a[i][i] = T::one();
            for j in 0..MEAS_DIM {
                a[i][j] -= gain[i][j];
            }
        }
        let ap = mat_mul(&a, p);
        let mut covariance = mat_mul_transpose(&ap, &a);
        for i in 0..STATE_DIM {
            for j in 0..STATE_DIM {
                let mut krk = T::zero();
                for k in 0..MEAS_DIM {
                    krk += gain[i][k] * r * gain[j][k];
                }
                covariance[i][j] += krk;
            }
        }
        symmetrize(&mut covariance);
        Ok(KalmanState { mean, covariance })
    }
}

/// Applies an estimated camera motion to a predicted state: the linear block
/// rotates each coordinate pair `(cx,cy)`, `(w,h)`, `(vx,vy)`, `(vw,vh)`
/// independently and the displacement shifts `(cx,cy)` only. The covariance
/// is mapped through the block-diagonal rotation `M = diag(R, R, R, R)`.
pub fn apply_affine<T: Real>(
    state: &KalmanState<T>,
    transform: &AffineTransform<T>,
) -> KalmanState<T> {
    let r = &transform.rotation;
    let mut mean = [T::zero(); STATE_DIM];
    for pair in 0..4 {
        let (x, y) = (state.mean()[2 * pair], state.mean()[2 * pair + 1]);
        mean[2 * pair] = r[0][0] * x + r[0][1] * y;
        mean[2 * pair + 1] = r[1][0] * x + r[1][1] * y;
    }
    mean[0] += transform.displacement[0];
    mean[1] += transform.displacement[1];

    // M P M^T, computed as row-pair rotations followed by column-pair
    // rotations.
    let p = state.covariance();
    let mut tmp = [[T::zero(); STATE_DIM]; STATE_DIM];
    for pair in 0..4 {
        for col in 0..STATE_DIM {
            let a = p[2 * pair][col];
            let b = p[2 * pair + 1][col];
            tmp[2 * pair][col] = r[0][0] * a + r[0][1] * b;
            tmp[2 * pair + 1][col] = r[1][0] * a + r[1][1] * b;
        }
    }
    let mut covariance = [[T::zero(); STATE_DIM]; STATE_DIM];
    for pair in 0..4 {
        for row in 0..STATE_DIM {
            let a = tmp[row][2 * pair];
            let b = tmp[row][2 * pair + 1];
            covariance[row][2 * pair] = a * r[0][0] + b * r[0][1];
            covariance[row][2 * pair + 1] = a * r[1][0] + b * r[1][1];
        }
    }
    symmetrize(&mut covariance);
    KalmanState::from_parts(mean, covariance)
}

fn symmetrize<T: Real>(m: &mut [[T; STATE_DIM]; STATE_DIM]) {
    let half = real::<T>(0.5);
    for i in 0..STATE_DIM {
        for j in (i + 1)..STATE_DIM {
            let v = (m[i][j] + m[j][i]) * half;
            m[i][j] = v;
            m[j][i] = v;
        }
    }
}

fn mat_mul<T: Real>(
    a: &[[T; STATE_DIM]; STATE_DIM],
    b: &[[T; STATE_DIM]; STATE_DIM],
) -> [[T; STATE_DIM]; STATE_DIM] {
    let mut out = [[T::zero(); STATE_DIM]; STATE_DIM];
    for i in 0..STATE_DIM {
        for k in 0..STATE_DIM {
            let aik = a[i][k];
            for j in 0..STATE_DIM {
                out[i][j] += aik * b[k][j];
            }
        }
    }
    out
}

/// `A B^T` for 8x8 matrices.
fn mat_mul_transpose<T: Real>(
    a: &[[T; STATE_DIM]; STATE_DIM],
    b: &[[T; STATE_DIM]; STATE_DIM],
) -> [[T; STATE_DIM]; STATE_DIM] {
    let mut out = [[T::zero(); STATE_DIM]; STATE_DIM];
    for i in 0..STATE_DIM {
        for j in 0..STATE_DIM {
            let mut acc = T::zero();
            for k in 0..STATE_DIM {
                acc += a[i][k] * b[j][k];
            }
            out[i][j] = acc;
        }
    }
    out
}

/// Lower-triangular Cholesky factor of a symmetric positive-definite 4x4
/// matrix; `None` when a pivot is not strictly positive.
fn cholesky4<T: Real>(m: &[[T; MEAS_DIM]; MEAS_DIM]) -> Option<[[T; MEAS_DIM]; MEAS_DIM]> {
    let mut l = [[T::zero(); MEAS_DIM]; MEAS_DIM];
    for i in 0..MEAS_DIM {
        for j in 0..=i {
            let mut sum = m[i][j];
            for k in 0..j {
                sum -= l[i][k] * l[j][k];
            }
            if i == j {
                if sum <= T::zero() || !sum.is_finite() {
                    return None;
                }
                l[i][j] = sum.sqrt();
            } else {
                l[i][j] = sum / l[j][j];
            }
        }
    }
    Some(l)
}

fn chol_solve4<T: Real>(l: &[[T; MEAS_DIM]; MEAS_DIM], rhs: &[T; MEAS_DIM]) -> [T; MEAS_DIM] {
    // Forward substitution L y = rhs.
    let mut y = [T::zero(); MEAS_DIM];
    for i in 0..MEAS_DIM {
        let mut sum = rhs[i];
        for k in 0..i {
            sum -= l[i][k] * y[k];
        }
        y[i] = sum / l[i][i];
    }
    // Back substitution L^T x = y.
    let mut x = [T::zero(); MEAS_DIM];
    for i in (0..MEAS_DIM).rev() {
        let mut sum = y[i];
        for k in (i + 1)..MEAS_DIM {
            sum -= l[k][i] * x[k];
        }
        x[i] = sum / l[i][i];
    }
    x
}
