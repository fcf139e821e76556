//! Randomized invariant checks for the Kalman filter: covariance symmetry
//! and positive semi-definiteness under arbitrary operation sequences, and
//! the algebraic properties of the affine state correction.

mod common;

use cbyte::kalman::{apply_affine, KalmanFilter, KalmanState};
use cbyte::types::{AffineTransform, BBox};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn to_f64_cov(state: &KalmanState<f64>) -> [[f64; 8]; 8] {
    *state.covariance()
}

fn random_box(rng: &mut ChaCha8Rng) -> BBox<f64> {
    BBox::new(
        rng.random_range(-200.0..200.0),
        rng.random_range(-200.0..200.0),
        rng.random_range(2.0..120.0),
        rng.random_range(2.0..120.0),
    )
}

fn random_transform(rng: &mut ChaCha8Rng) -> AffineTransform<f64> {
    let angle: f64 = rng.random_range(-0.3..0.3);
    AffineTransform {
        rotation: [[angle.cos(), -angle.sin()], [angle.sin(), angle.cos()]],
        displacement: [rng.random_range(-20.0..20.0), rng.random_range(-20.0..20.0)],
    }
}

fn assert_symmetric_psd(state: &KalmanState<f64>, context: &str) {
    let p = state.covariance();
    for i in 0..8 {
        for j in 0..8 {
            assert!(
                (p[i][j] - p[j][i]).abs() <= 1e-9,
                "{context}: asymmetry at ({i},{j}): {} vs {}",
                p[i][j],
                p[j][i]
            );
        }
    }
    let eig = common::symmetric_eigenvalues(&to_f64_cov(state));
    for (k, lambda) in eig.iter().enumerate() {
        assert!(*lambda >= -1e-9, "{context}: eigenvalue {k} = {lambda}");
    }
}

#[test]
fn covariance_stays_symmetric_psd_under_random_op_sequences() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC0FFEE);
    let kf = KalmanFilter::<f64>::default();
    for run in 0..1000 {
        let mut state = kf.initiate(&random_box(&mut rng)).unwrap();
        let ops = rng.random_range(1..12);
        for step in 0..ops {
            match rng.random_range(0..3) {
                0 => state = kf.predict(&state),
                1 => {
                    let mut z = state.bbox();
                    z.left += rng.random_range(-5.0..5.0);
                    z.top += rng.random_range(-5.0..5.0);
                    z.width = (z.width + rng.random_range(-2.0..2.0)).max(1.0);
                    z.height = (z.height + rng.random_range(-2.0..2.0)).max(1.0);
                    state = kf.update(&state, &z).unwrap();
                }
                _ => state = apply_affine(&state, &random_transform(&mut rng)),
            }
            assert_symmetric_psd(&state, &format!("run {run} step {step}"));
        }
    }
}

#[test]
fn apply_affine_identity_is_exact_noop() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let kf = KalmanFilter::<f64>::default();
    for _ in 0..100 {
        let state = kf.predict(&kf.initiate(&random_box(&mut rng)).unwrap());
        let out = apply_affine(&state, &AffineTransform::identity());
        assert_eq!(out.mean(), state.mean());
        assert_eq!(out.covariance(), state.covariance());
    }
}

#[test]
fn apply_affine_composes_on_mean_position() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let kf = KalmanFilter::<f64>::default();
    for _ in 0..200 {
        let state = kf.initiate(&random_box(&mut rng)).unwrap();
        let t1 = random_transform(&mut rng);
        let t2 = random_transform(&mut rng);
        let sequential = apply_affine(&apply_affine(&state, &t1), &t2);
        let composed = apply_affine(&state, &t2.compose(&t1));
        for i in 0..2 {
            assert!(
                (sequential.mean()[i] - composed.mean()[i]).abs() < 1e-9,
                "position component {i}: {} vs {}",
                sequential.mean()[i],
                composed.mean()[i]
            );
        }
    }
}

#[test]
fn update_is_fixed_point_on_predicted_measurement() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let kf = KalmanFilter::<f64>::default();
    for _ in 0..100 {
        let state = kf.predict(&kf.initiate(&random_box(&mut rng)).unwrap());
        let posterior = kf.update(&state, &state.bbox()).unwrap();
        for i in 0..8 {
            assert!((posterior.mean()[i] - state.mean()[i]).abs() < 1e-9);
        }
    }
}
