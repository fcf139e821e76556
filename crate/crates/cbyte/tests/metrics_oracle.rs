//! Metrics checked against exhaustive oracles and invariances.

mod common;

use cbyte::metrics::{clear_metrics, id_metrics};
use cbyte::mot::{MotRecord, MotSequence};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rec(frame: u32, id: i64, left: f64, top: f64) -> MotRecord {
    MotRecord { frame, id, left, top, width: 10.0, height: 10.0, score: 1.0, extra: [-1.0; 3] }
}

/// Random instances with at most 3 gt identities and 3 result identities
/// over a handful of frames, with boxes drawn from a small set of slots so
/// gated overlaps actually occur.
fn random_instance(rng: &mut ChaCha8Rng) -> (MotSequence, MotSequence) {
    let slots = [0.0, 8.0, 40.0, 80.0];
    let frames = rng.random_range(1..=6);
    let gt_ids = rng.random_range(1..=3);
    let res_ids = rng.random_range(1..=3);
    let mut gt = Vec::new();
    let mut res = Vec::new();
    for f in 1..=frames {
        for g in 0..gt_ids {
            if rng.random_range(0.0..1.0) < 0.8 {
                let s = slots[rng.random_range(0..slots.len())];
                gt.push(rec(f, g as i64 + 1, s, s));
            }
        }
        for r in 0..res_ids {
            if rng.random_range(0.0..1.0) < 0.8 {
                let s = slots[rng.random_range(0..slots.len())];
                res.push(rec(f, r as i64 + 100, s, s));
            }
        }
    }
    (MotSequence::from_records(gt), MotSequence::from_records(res))
}

#[test]
fn id_metrics_match_exhaustive_matching_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for case in 0..200 {
        let (gt, res) = random_instance(&mut rng);
        let metrics = id_metrics(&gt, &res, 0.5);

        // Oracle: recompute per-pair gated overlaps directly, then maximize
        // total overlap over every possible identity matching.
        let gt_ids: Vec<i64> = {
            let mut v: Vec<i64> = gt.records().map(|r| r.id).collect();
            v.sort_unstable();
            v.dedup();
            v
        };
        let res_ids: Vec<i64> = {
            let mut v: Vec<i64> = res.records().map(|r| r.id).collect();
            v.sort_unstable();
            v.dedup();
            v
        };
        let overlap = |g: usize, r: usize| -> usize {
            let mut count = 0;
            for (frame, gt_records) in &gt.frames {
                let Some(res_records) = res.frames.get(frame) else { continue };
                for a in gt_records.iter().filter(|a| a.id == gt_ids[g]) {
                    for b in res_records.iter().filter(|b| b.id == res_ids[r]) {
                        if cbyte::iou(&a.bbox::<f64>(), &b.bbox::<f64>()) >= 0.5 {
                            count += 1;
                        }
                    }
                }
            }
            count
        };
        let best = common::brute_force_max_overlap(gt_ids.len(), res_ids.len(), &overlap);
        assert_eq!(metrics.idtp, best, "case {case}");
        assert_eq!(metrics.idfn, gt.record_count() - best, "case {case}");
        assert_eq!(metrics.idfp, res.record_count() - best, "case {case}");
    }
}

#[test]
fn metrics_are_invariant_to_record_order_within_frames() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..50 {
        let (gt, res) = random_instance(&mut rng);
        let clear_a = clear_metrics(&gt, &res, 0.5);
        let id_a = id_metrics(&gt, &res, 0.5);

        // Reverse the record order inside every frame of both inputs.
        let shuffle = |seq: &MotSequence| {
            let mut out = seq.clone();
            for records in out.frames.values_mut() {
                records.reverse();
            }
            out
        };
        let clear_b = clear_metrics(&shuffle(&gt), &shuffle(&res), 0.5);
        let id_b = id_metrics(&shuffle(&gt), &shuffle(&res), 0.5);
        assert_eq!(clear_a, clear_b);
        assert_eq!(id_a, id_b);
    }
}

#[test]
fn mota_never_exceeds_one_and_ratios_stay_in_unit_interval() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..100 {
        let (gt, res) = random_instance(&mut rng);
        let clear = clear_metrics(&gt, &res, 0.5);
        assert!(clear.mota <= 1.0);
        let id = id_metrics(&gt, &res, 0.5);
        for v in [id.idf1, id.idp, id.idr] {
            assert!((0.0..=1.0).contains(&v), "value {v}");
        }
    }
}
