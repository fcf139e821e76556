//! CLEAR-MOT and identity metrics over frame-grouped MOT sequences.

use std::collections::BTreeMap;

use crate::assoc::{linear_assignment, CostMatrix};
use crate::mot::{MotRecord, MotSequence};
use crate::types::{iou, BBox};

/// Default IoU gate for both metric families (MOT Challenge convention).
pub const DEFAULT_IOU_GATE: f64 = 0.5;

/// Frame-level counts: a false positive is an unmatched result box, a false
/// negative an unmatched ground-truth box, and an id switch a ground-truth
/// identity whose matched result id changed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClearMetrics {
    pub false_positives: usize,
    pub false_negatives: usize,
    pub id_switches: usize,
    pub gt_count: usize,
    pub mota: f64,
}

/// Trajectory-level identity counts from a global bipartite matching.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdMetrics {
    pub idtp: usize,
    pub idfp: usize,
    pub idfn: usize,
    pub idf1: f64,
    pub idp: f64,
    pub idr: f64,
}

/// Combined evaluation report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsReport {
    pub mota: f64,
    pub idf1: f64,
    pub idp: f64,
    pub idr: f64,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub id_switches: usize,
    pub gt_count: usize,
    pub idtp: usize,
    pub idfp: usize,
    pub idfn: usize,
}

pub fn evaluate(gt: &MotSequence, results: &MotSequence, iou_gate: f64) -> MetricsReport {
    let clear = clear_metrics(gt, results, iou_gate);
    let id = id_metrics(gt, results, iou_gate);
    MetricsReport {
        mota: clear.mota,
        idf1: id.idf1,
        idp: id.idp,
        idr: id.idr,
        false_positives: clear.false_positives,
        false_negatives: clear.false_negatives,
        id_switches: clear.id_switches,
        gt_count: clear.gt_count,
        idtp: id.idtp,
        idfp: id.idfp,
        idfn: id.idfn,
    }
}

/// Entries of one frame, sorted by id so the metric is invariant to record
/// order within the frame.
fn frame_entries(records: &[MotRecord]) -> Vec<(i64, BBox<f64>)> {
    let mut entries: Vec<(i64, BBox<f64>)> =
        records.iter().map(|r| (r.id, r.bbox::<f64>())).collect();
    entries.sort_by_key(|(id, _)| *id);
    entries
}

/// CLEAR-MOT accumulation.
///
/// Per frame, ground truth and results are matched by IoU through the
/// linear-assignment core; correspondences from the previous frame are kept
/// first whenever they still clear the gate (the standard continuity rule),
/// and only the remainder is re-matched. MOTA is
/// `1 - (FP + FN + IDSW) / gt_count`.
pub fn clear_metrics(gt: &MotSequence, results: &MotSequence, iou_gate: f64) -> ClearMetrics {
    let max_cost = 1.0 - iou_gate;
    let mut fp = 0usize;
    let mut fn_count = 0usize;
    let mut idsw = 0usize;
    let mut gt_count = 0usize;

    // Matches of the immediately preceding frame, and the most recent
    // result id ever matched to each ground-truth id (for switch counting).
    let mut active_pairs: BTreeMap<i64, i64> = BTreeMap::new();
    let mut last_match: BTreeMap<i64, i64> = BTreeMap::new();

    let empty = Vec::new();
    let frames: std::collections::BTreeSet<u32> =
        gt.frames.keys().chain(results.frames.keys()).copied().collect();

    for frame in frames {
        let gts = frame_entries(gt.frames.get(&frame).unwrap_or(&empty));
        let ress = frame_entries(results.frames.get(&frame).unwrap_or(&empty));
        gt_count += gts.len();

        let mut gt_matched = vec![false; gts.len()];
        let mut res_matched = vec![false; ress.len()];
        let mut new_pairs: BTreeMap<i64, i64> = BTreeMap::new();

        // Continuity: keep last frame's pairs that are still within the gate.
        for (gi, (gt_id, gt_box)) in gts.iter().enumerate() {
            if let Some(res_id) = active_pairs.get(gt_id) {
                if let Some(ri) = ress.iter().position(|(id, _)| id == res_id) {
                    if !res_matched[ri] && iou(gt_box, &ress[ri].1) >= iou_gate {
                        gt_matched[gi] = true;
                        res_matched[ri] = true;
                        new_pairs.insert(*gt_id, *res_id);
                    }
                }
            }
        }

        // Fresh assignment for the remainder.
        let free_gt: Vec<usize> = (0..gts.len()).filter(|&i| !gt_matched[i]).collect();
        let free_res: Vec<usize> = (0..ress.len()).filter(|&i| !res_matched[i]).collect();
        if !free_gt.is_empty() && !free_res.is_empty() {
            let costs = CostMatrix::from_fn(free_gt.len(), free_res.len(), |i, j| {
                1.0 - iou(&gts[free_gt[i]].1, &ress[free_res[j]].1)
            });
            for (i, j) in linear_assignment(&costs, max_cost).pairs {
                let gi = free_gt[i];
                let ri = free_res[j];
                gt_matched[gi] = true;
                res_matched[ri] = true;
                new_pairs.insert(gts[gi].0, ress[ri].0);
            }
        }

        for (gt_id, res_id) in &new_pairs {
            if let Some(prev) = last_match.get(gt_id) {
                if prev != res_id {
                    idsw += 1;
                }
            }
            last_match.insert(*gt_id, *res_id);
        }
        fn_count += gt_matched.iter().filter(|m| !**m).count();
        fp += res_matched.iter().filter(|m| !**m).count();
        active_pairs = new_pairs;
    }

    let errors = fp + fn_count + idsw;
    let mota = if gt_count > 0 {
        1.0 - errors as f64 / gt_count as f64
    } else if errors == 0 {
        1.0
    } else {
        0.0
    };
    ClearMetrics { false_positives: fp, false_negatives: fn_count, id_switches: idsw, gt_count, mota }
}

/// Identity metrics from a global trajectory-to-trajectory matching.
///
/// The overlap of a (gt id, result id) pair is the number of frames where
/// both are present with IoU at or above the gate. A bipartite matching
/// maximizing total overlap (equivalently, minimizing ID false positives
/// plus false negatives) is solved with the same linear-assignment core,
/// and the identity counts follow from the matched overlaps.
pub fn id_metrics(gt: &MotSequence, results: &MotSequence, iou_gate: f64) -> IdMetrics {
    let mut gt_ids: Vec<i64> = Vec::new();
    let mut res_ids: Vec<i64> = Vec::new();
    let mut gt_lengths: BTreeMap<i64, usize> = BTreeMap::new();
    let mut res_lengths: BTreeMap<i64, usize> = BTreeMap::new();
    let mut overlaps: BTreeMap<(i64, i64), usize> = BTreeMap::new();

    let empty = Vec::new();
    let frames: std::collections::BTreeSet<u32> =
        gt.frames.keys().chain(results.frames.keys()).copied().collect();
    for frame in frames {
        let gts = frame_entries(gt.frames.get(&frame).unwrap_or(&empty));
        let ress = frame_entries(results.frames.get(&frame).unwrap_or(&empty));
        for (gt_id, gt_box) in &gts {
            *gt_lengths.entry(*gt_id).or_insert(0) += 1;
            if !gt_ids.contains(gt_id) {
                gt_ids.push(*gt_id);
            }
            for (res_id, res_box) in &ress {
                if iou(gt_box, res_box) >= iou_gate {
                    *overlaps.entry((*gt_id, *res_id)).or_insert(0) += 1;
                }
            }
        }
        for (res_id, _) in &ress {
            *res_lengths.entry(*res_id).or_insert(0) += 1;
            if !res_ids.contains(res_id) {
                res_ids.push(*res_id);
            }
        }
    }

    let total_gt: usize = gt_lengths.values().sum();
    let total_res: usize = res_lengths.values().sum();
    let max_overlap = overlaps.values().copied().max().unwrap_or(0);

    let idtp = if max_overlap == 0 {
        0
    } else {
        // Costs scaled into [0, 1]; minimizing total cost over the matching
        // maximizes total overlap because every row gets assigned.
        let scale = max_overlap as f64;
        let costs = CostMatrix::from_fn(gt_ids.len(), res_ids.len(), |i, j| {
            let o = overlaps.get(&(gt_ids[i], res_ids[j])).copied().unwrap_or(0);
            1.0 - o as f64 / scale
        });
        linear_assignment(&costs, 1.0)
            .pairs
            .iter()
            .map(|&(i, j)| overlaps.get(&(gt_ids[i], res_ids[j])).copied().unwrap_or(0))
            .sum()
    };

    let idfn = total_gt - idtp;
    let idfp = total_res - idtp;
    let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    IdMetrics {
        idtp,
        idfp,
        idfn,
        idf1: ratio(2 * idtp, 2 * idtp + idfp + idfn),
        idp: ratio(idtp, idtp + idfp),
        idr: ratio(idtp, idtp + idfn),
    }
}
