//! `eval`: CLEAR and identity metrics between a ground-truth file and a
//! results file, printed as a human table plus machine-readable
//! `key=value` lines.

use std::path::PathBuf;

use anyhow::{Context, Result};
use cbyte::metrics::{evaluate, MetricsReport};
use cbyte::mot::{parse_mot, MotSequence};

pub struct EvalArgs {
    pub gt: PathBuf,
    pub results: PathBuf,
    pub iou_gate: f64,
}

fn load(path: &PathBuf) -> Result<MotSequence> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading MOT file {path:?}"))?;
    Ok(parse_mot(&text)?)
}

pub fn render_report(report: &MetricsReport) -> String {
    let mut out = String::new();
    out.push_str(&format!("{:<8}{:>10}\n", "metric", "value"));
    out.push_str(&format!("{:<8}{:>10.3}\n", "MOTA", report.mota));
    out.push_str(&format!("{:<8}{:>10.3}\n", "IDF1", report.idf1));
    out.push_str(&format!("{:<8}{:>10.3}\n", "IDP", report.idp));
    out.push_str(&format!("{:<8}{:>10.3}\n", "IDR", report.idr));
    out.push_str(&format!("{:<8}{:>10}\n", "FP", report.false_positives));
    out.push_str(&format!("{:<8}{:>10}\n", "FN", report.false_negatives));
    out.push_str(&format!("{:<8}{:>10}\n", "IDSW", report.id_switches));
    out.push_str(&format!("{:<8}{:>10}\n", "GT", report.gt_count));
    out.push('\n');
    out.push_str(&format!("mota={:.6}\n", report.mota));
    out.push_str(&format!("idf1={:.6}\n", report.idf1));
    out.push_str(&format!("idp={:.6}\n", report.idp));
    out.push_str(&format!("idr={:.6}\n", report.idr));
    out.push_str(&format!("fp={}\n", report.false_positives));
    out.push_str(&format!("fn={}\n", report.false_negatives));
    out.push_str(&format!("idsw={}\n", report.id_switches));
    out.push_str(&format!("gt_count={}\n", report.gt_count));
    out.push_str(&format!("idtp={}\n", report.idtp));
    out.push_str(&format!("idfp={}\n", report.idfp));
    out.push_str(&format!("idfn={}\n", report.idfn));
    out
}

pub fn run(args: &EvalArgs) -> Result<()> {
    let gt = load(&args.gt)?;
    let results = load(&args.results)?;

    if let (Some((gs, ge)), Some((rs, re))) = (gt.frame_range(), results.frame_range()) {
        if ge < rs || re < gs {
            log::warn!(
                "ground truth covers frames {gs}..={ge} but results cover {rs}..={re}; \
                 evaluating over the union"
            );
        }
    }

    let report = evaluate(&gt, &results, args.iou_gate);
    print!("{}", render_report(&report));
    Ok(())
}
