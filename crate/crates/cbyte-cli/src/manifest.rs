//! Run manifests: a flat `key = value` snapshot of the configuration and
//! per-stage wall-clock statistics, written alongside every tracking run.

use std::path::Path;

use anyhow::Result;
use cbyte::tracker::{StageTiming, TrackerConfig};

use crate::config::tracker_config_entries;
use crate::io_util::atomic_write;

pub struct RunManifest<'a> {
    pub sequence: String,
    pub frames_dir: String,
    pub detections_file: String,
    pub results_file: String,
    pub frame_count: usize,
    pub seed: u64,
    pub config: &'a TrackerConfig<f64>,
    pub timings: &'a [StageTiming],
}

fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        0.0
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

impl RunManifest<'_> {
    pub fn render(&self) -> String {
        let mut out = String::new();
        let mut push = |k: &str, v: String| out.push_str(&format!("{k} = {v}\n"));
        push("sequence", self.sequence.clone());
        push("frames_dir", self.frames_dir.clone());
        push("detections_file", self.detections_file.clone());
        push("results_file", self.results_file.clone());
        push("frame_count", self.frame_count.to_string());
        push("seed", self.seed.to_string());
        for (k, v) in tracker_config_entries(self.config) {
            push(&k, v);
        }

        let stages: [(&str, fn(&StageTiming) -> f64); 5] = [
            ("predict", |t| t.predict_ms),
            ("cmc", |t| t.cmc_ms),
            ("associate", |t| t.associate_ms),
            ("bookkeeping", |t| t.bookkeeping_ms),
            ("step", StageTiming::total_ms),
        ];
        for (name, extract) in stages {
            let mut values: Vec<f64> = self.timings.iter().map(extract).collect();
            push(&format!("timing.{name}.mean_ms"), format!("{:.6}", mean(&values)));
            push(&format!("timing.{name}.median_ms"), format!("{:.6}", median(&mut values)));
        }
        let total: f64 = self.timings.iter().map(StageTiming::total_ms).sum();
        push("timing.total_ms", format!("{total:.6}"));
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        atomic_write(path, self.render().as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_lists_config_and_timings() {
        let config = TrackerConfig::<f64>::default();
        let timings = vec![
            StageTiming { predict_ms: 1.0, cmc_ms: 2.0, associate_ms: 3.0, bookkeeping_ms: 4.0 },
            StageTiming { predict_ms: 3.0, cmc_ms: 2.0, associate_ms: 1.0, bookkeeping_ms: 0.0 },
        ];
        let manifest = RunManifest {
            sequence: "test".into(),
            frames_dir: "frames".into(),
            detections_file: "det.txt".into(),
            results_file: "out.txt".into(),
            frame_count: 2,
            seed: 0,
            config: &config,
            timings: &timings,
        };
        let text = manifest.render();
        assert!(text.contains("config.enable_cmc = true"));
        assert!(text.contains("config.cmc.theta_th = 0.9"));
        assert!(text.contains("timing.predict.median_ms = 2.000000"));
        assert!(text.contains("timing.step.mean_ms = 8.000000"));
        assert!(text.contains("frame_count = 2"));
    }
}
