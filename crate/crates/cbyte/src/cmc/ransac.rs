//! RANSAC affine estimation from keypoint correspondences.
//!
//! Repeated minimal samples of three correspondences each propose a full
//! 6-DOF affine model; the model with the most inliers wins and is refit by
//! least squares over its inliers. Trials stop early once the 99% confidence
//! bound for the observed inlier ratio is reached.

use rand::Rng;
use thiserror::Error;

use super::CmcParams;
use crate::types::{AffineTransform, Keypoint};
use crate::{real, Real};

/// Minimal triangle area (px^2) for a 3-point sample to be usable.
const DEGENERATE_AREA: f64 = 1e-6;
/// Confidence target for the adaptive trial count.
const CONFIDENCE: f64 = 0.99;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RansacFailure {
    #[error("need at least 3 valid correspondences, got {0}")]
    TooFewCorrespondences(usize),
    #[error("best model has {best} inliers, below the required {required}")]
    TooFewInliers { best: usize, required: usize },
    #[error("refit model is degenerate (non-positive determinant)")]
    Degenerate,
}

/// Estimates the affine transform mapping `prev` points onto `curr` points.
///
/// Only correspondences flagged in `valid` participate. Fails (never panics)
/// when fewer than three correspondences are valid, when no model reaches
/// `ransac_min_inliers`, or when the refit collapses; callers substitute the
/// identity transform. Reflections (`det R <= 0`) are rejected as
/// implausible camera motion.
pub fn ransac_affine<T: Real, R: Rng>(
    prev: &[Keypoint<T>],
    curr: &[Keypoint<T>],
    valid: &[bool],
    params: &CmcParams<T>,
    rng: &mut R,
) -> Result<AffineTransform<T>, RansacFailure> {
    debug_assert_eq!(prev.len(), curr.len());
    debug_assert_eq!(prev.len(), valid.len());

    let usable: Vec<usize> = (0..prev.len()).filter(|&i| valid[i]).collect();
    if usable.len() < 3 {
        return Err(RansacFailure::TooFewCorrespondences(usable.len()));
    }

    let thr_sq = params.ransac_inlier_px * params.ransac_inlier_px;
    let mut best_inliers: Vec<usize> = Vec::new();
    let mut max_trials = params.ransac_max_iters;

    let mut trial = 0;
    while trial < max_trials {
        trial += 1;
        let sample = sample3(&usable, rng);
        let model = match exact_affine(prev, curr, sample) {
            Some(m) => m,
            None => continue,
        };
        if model.determinant() <= T::zero() {
            continue;
        }

        let inliers: Vec<usize> = usable
            .iter()
            .copied()
            .filter(|&i| reprojection_sq(&model, &prev[i], &curr[i]) <= thr_sq)
            .collect();
        if inliers.len() > best_inliers.len() {
            best_inliers = inliers;
            // Adaptive bound: trials needed so that with probability
            // CONFIDENCE at least one sample is all-inlier.
            let w = best_inliers.len() as f64 / usable.len() as f64;
            let p_good = w * w * w;
            if p_good >= 1.0 {
                break;
            }
            if p_good > 0.0 {
                let needed = ((1.0 - CONFIDENCE).ln() / (1.0 - p_good).ln()).ceil();
                if needed.is_finite() && needed >= 0.0 {
                    max_trials = max_trials.min(needed as usize + 1);
                }
            }
        }
    }

    if best_inliers.len() < params.ransac_min_inliers {
        return Err(RansacFailure::TooFewInliers {
            best: best_inliers.len(),
            required: params.ransac_min_inliers,
        });
    }

    let refit =
        least_squares_affine(prev, curr, &best_inliers).ok_or(RansacFailure::Degenerate)?;
    if refit.determinant() <= T::zero() {
        return Err(RansacFailure::Degenerate);
    }
    Ok(refit)
}

fn sample3<R: Rng>(usable: &[usize], rng: &mut R) -> [usize; 3] {
    let n = usable.len();
    let a = rng.random_range(0..n);
    let mut b = rng.random_range(0..n - 1);
    if b >= a {
        b += 1;
    }
    let mut c = rng.random_range(0..n - 2);
    for taken in [a.min(b), a.max(b)] {
        if c >= taken {
            c += 1;
        }
    }
    [usable[a], usable[b], usable[c]]
}

fn reprojection_sq<T: Real>(m: &AffineTransform<T>, from: &Keypoint<T>, to: &Keypoint<T>) -> T {
    let (px, py) = m.apply((from.x, from.y));
    let dx = px - to.x;
    let dy = py - to.y;
    dx * dx + dy * dy
}

/// Exact affine transform through three correspondences; `None` when the
/// source points are (near-)collinear.
fn exact_affine<T: Real>(
    prev: &[Keypoint<T>],
    curr: &[Keypoint<T>],
    sample: [usize; 3],
) -> Option<AffineTransform<T>> {
    let p = [prev[sample[0]], prev[sample[1]], prev[sample[2]]];
    let q = [curr[sample[0]], curr[sample[1]], curr[sample[2]]];

    let cross = (p[1].x - p[0].x) * (p[2].y - p[0].y) - (p[2].x - p[0].x) * (p[1].y - p[0].y);
    if (cross.abs() * real::<T>(0.5)) < real(DEGENERATE_AREA) {
        return None;
    }

    // Solve [x y 1] * (a b tx)^T = x' and the analogous system for y',
    // sharing the same 3x3 source matrix.
    let m = [[p[0].x, p[0].y, T::one()], [p[1].x, p[1].y, T::one()], [p[2].x, p[2].y, T::one()]];
    let row_x = solve3(&m, &[q[0].x, q[1].x, q[2].x])?;
    let row_y = solve3(&m, &[q[0].y, q[1].y, q[2].y])?;
    Some(AffineTransform::from_2x3([row_x, row_y]))
}

/// Least-squares affine fit over the indexed correspondences via the 3x3
/// normal equations (shared between the x and y rows).
fn least_squares_affine<T: Real>(
    prev: &[Keypoint<T>],
    curr: &[Keypoint<T>],
    indices: &[usize],
) -> Option<AffineTransform<T>> {
    if indices.len() < 3 {
        return None;
    }
    let mut sxx = T::zero();
    let mut sxy = T::zero();
    let mut sx = T::zero();
    let mut syy = T::zero();
    let mut sy = T::zero();
    let n = real::<T>(indices.len() as f64);
    let mut bx = [T::zero(); 3];
    let mut by = [T::zero(); 3];
    for &i in indices {
        let p = prev[i];
        let q = curr[i];
        sxx += p.x * p.x;
        sxy += p.x * p.y;
        sx += p.x;
        syy += p.y * p.y;
        sy += p.y;
        bx[0] += p.x * q.x;
        bx[1] += p.y * q.x;
        bx[2] += q.x;
        by[0] += p.x * q.y;
        by[1] += p.y * q.y;
        by[2] += q.y;
    }
    let m = [[sxx, sxy, sx], [sxy, syy, sy], [sx, sy, n]];
    let row_x = solve3(&m, &bx)?;
    let row_y = solve3(&m, &by)?;
    Some(AffineTransform::from_2x3([row_x, row_y]))
}

/// Solves a 3x3 linear system by Gaussian elimination with partial pivoting.
fn solve3<T: Real>(m: &[[T; 3]; 3], rhs: &[T; 3]) -> Option<[T; 3]> {
    let mut a = *m;
    let mut b = *rhs;
    for col in 0..3 {
        let mut pivot = col;
        for row in (col + 1)..3 {
            if a[row][col].abs() > a[pivot][col].abs() {
                pivot = row;
            }
        }
        if a[pivot][col].abs() < real(1e-12) {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in (col + 1)..3 {
            let factor = a[row][col] / a[col][col];
            for k in col..3 {
                a[row][k] = a[row][k] - factor * a[col][k];
            }
            b[row] = b[row] - factor * b[col];
        }
    }
    let mut x = [T::zero(); 3];
    for row in (0..3).rev() {
        let mut sum = b[row];
        for k in (row + 1)..3 {
            sum -= a[row][k] * x[k];
        }
        if !sum.is_finite() {
            return None;
        }
        x[row] = sum / a[row][row];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn planted(angle_deg: f64, dx: f64, dy: f64) -> AffineTransform<f64> {
        let r = angle_deg.to_radians();
        AffineTransform {
            rotation: [[r.cos(), -r.sin()], [r.sin(), r.cos()]],
            displacement: [dx, dy],
        }
    }

    fn scatter(n: usize, rng: &mut ChaCha8Rng) -> Vec<Keypoint<f64>> {
        use rand::Rng;
        (0..n)
            .map(|_| Keypoint::new(rng.random_range(0.0..640.0), rng.random_range(0.0..480.0)))
            .collect()
    }

    #[test]
    fn exact_correspondences_recover_transform() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let truth = planted(5.0, 4.0, -2.0);
        let prev = scatter(50, &mut rng);
        let curr: Vec<_> =
            prev.iter().map(|p| truth.apply((p.x, p.y))).map(|(x, y)| Keypoint::new(x, y)).collect();
        let valid = vec![true; prev.len()];
        let est =
            ransac_affine(&prev, &curr, &valid, &CmcParams::default(), &mut rng).unwrap();
        let mut frob = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                frob += (est.rotation[i][j] - truth.rotation[i][j]).powi(2);
            }
        }
        assert!(frob.sqrt() < 1e-6, "rotation error {}", frob.sqrt());
        assert!((est.displacement[0] - 4.0).abs() < 1e-6);
        assert!((est.displacement[1] + 2.0).abs() < 1e-6);
    }

    #[test]
    fn two_valid_points_fail() {
        let prev = vec![Keypoint::new(0.0, 0.0), Keypoint::new(1.0, 1.0), Keypoint::new(2.0, 0.0)];
        let curr = prev.clone();
        let valid = vec![true, true, false];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(
            ransac_affine(&prev, &curr, &valid, &CmcParams::default(), &mut rng).unwrap_err(),
            RansacFailure::TooFewCorrespondences(2)
        );
    }

    #[test]
    fn outliers_are_rejected() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let truth = planted(3.0, 7.0, -5.0);
        let prev = scatter(100, &mut rng);
        let mut curr = Vec::with_capacity(100);
        for (i, p) in prev.iter().enumerate() {
            if i < 70 {
                let (x, y) = truth.apply((p.x, p.y));
                curr.push(Keypoint::new(x, y));
            } else {
                curr.push(Keypoint::new(
                    rng.random_range(0.0..640.0),
                    rng.random_range(0.0..480.0),
                ));
            }
        }
        let valid = vec![true; 100];
        let est =
            ransac_affine(&prev, &curr, &valid, &CmcParams::default(), &mut rng).unwrap();
        let angle = est.rotation[1][0].atan2(est.rotation[0][0]).to_degrees();
        assert!((angle - 3.0).abs() < 0.5, "angle {angle}");
        assert!((est.displacement[0] - 7.0).abs() < 0.5);
        assert!((est.displacement[1] + 5.0).abs() < 0.5);
    }

    #[test]
    fn collinear_points_cannot_form_a_model() {
        let prev: Vec<_> = (0..20).map(|i| Keypoint::new(i as f64, 2.0 * i as f64)).collect();
        let curr = prev.clone();
        let valid = vec![true; prev.len()];
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let err = ransac_affine(&prev, &curr, &valid, &CmcParams::default(), &mut rng).unwrap_err();
        assert_eq!(err, RansacFailure::TooFewInliers { best: 0, required: 10 });
    }

    #[test]
    fn success_implies_enough_inliers() {
        use rand::Rng;
        let params = CmcParams::<f64>::default();
        for seed in 0..20u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let truth = planted(rng.random_range(-8.0..8.0), rng.random_range(-15.0..15.0), 3.0);
            let prev = scatter(60, &mut rng);
            let curr: Vec<_> = prev
                .iter()
                .map(|p| truth.apply((p.x, p.y)))
                .map(|(x, y)| Keypoint::new(x, y))
                .collect();
            let valid = vec![true; prev.len()];
            if let Ok(model) = ransac_affine(&prev, &curr, &valid, &params, &mut rng) {
                let thr_sq = params.ransac_inlier_px * params.ransac_inlier_px;
                let inliers = prev
                    .iter()
                    .zip(&curr)
                    .filter(|(p, q)| reprojection_sq(&model, p, q) <= thr_sq)
                    .count();
                assert!(inliers >= params.ransac_min_inliers);
                assert!(model.determinant() > 0.0);
            }
        }
    }
}
