//! Flat `key = value` configuration files with dotted keys. Lines starting
//! with `#` and blank lines are ignored; unknown keys are rejected with the
//! offending key named. File values override built-in defaults field by
//! field.

use anyhow::{anyhow, bail, Context, Result};
use cbyte::synth::{OcclusionWindow, SynthConfig};
use cbyte::tracker::TrackerConfig;

fn entries(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("line {}: expected `key = value`, got {raw:?}", idx + 1))?;
        out.push((key.trim().to_string(), value.trim().to_string()));
    }
    Ok(out)
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| anyhow!("config key {key}: cannot parse value {value:?}"))
}

/// Applies a tracker config file on top of `base`.
pub fn apply_tracker_config(base: &mut TrackerConfig<f64>, text: &str) -> Result<()> {
    for (key, value) in entries(text)? {
        let v = value.as_str();
        match key.as_str() {
            "tau_high" => base.tau_high = parse(&key, v)?,
            "tau_low" => base.tau_low = parse(&key, v)?,
            "primary_max_cost" => base.primary_max_cost = parse(&key, v)?,
            "secondary_max_cost" => base.secondary_max_cost = parse(&key, v)?,
            "max_lost_age" => base.max_lost_age = parse(&key, v)?,
            "min_hits_to_confirm" => base.min_hits_to_confirm = parse(&key, v)?,
            "enable_cmc" => base.enable_cmc = parse(&key, v)?,
            "cmc.theta_th" => base.cmc.theta_th = parse(&key, v)?,
            "cmc.num_keypoints" => base.cmc.num_keypoints = parse(&key, v)?,
            "cmc.lk_window" => base.cmc.lk_window = parse(&key, v)?,
            "cmc.lk_pyramid_levels" => base.cmc.lk_pyramid_levels = parse(&key, v)?,
            "cmc.lk_max_iters" => base.cmc.lk_max_iters = parse(&key, v)?,
            "cmc.lk_epsilon" => base.cmc.lk_epsilon = parse(&key, v)?,
            "cmc.ransac_inlier_px" => base.cmc.ransac_inlier_px = parse(&key, v)?,
            "cmc.ransac_max_iters" => base.cmc.ransac_max_iters = parse(&key, v)?,
            "cmc.ransac_min_inliers" => base.cmc.ransac_min_inliers = parse(&key, v)?,
            "kalman.std_weight_position" => base.kalman.std_weight_position = parse(&key, v)?,
            "kalman.std_weight_velocity" => base.kalman.std_weight_velocity = parse(&key, v)?,
            _ => bail!("unknown tracker config key: {key}"),
        }
    }
    Ok(())
}

/// Lists every tracker config field as `(dotted key, value)` pairs, for the
/// run manifest snapshot.
pub fn tracker_config_entries(config: &TrackerConfig<f64>) -> Vec<(String, String)> {
    let mut out: Vec<(&str, String)> = vec![
        ("tau_high", config.tau_high.to_string()),
        ("tau_low", config.tau_low.to_string()),
        ("primary_max_cost", config.primary_max_cost.to_string()),
        ("secondary_max_cost", config.secondary_max_cost.to_string()),
        ("max_lost_age", config.max_lost_age.to_string()),
        ("min_hits_to_confirm", config.min_hits_to_confirm.to_string()),
        ("enable_cmc", config.enable_cmc.to_string()),
        ("cmc.theta_th", config.cmc.theta_th.to_string()),
        ("cmc.num_keypoints", config.cmc.num_keypoints.to_string()),
        ("cmc.lk_window", config.cmc.lk_window.to_string()),
        ("cmc.lk_pyramid_levels", config.cmc.lk_pyramid_levels.to_string()),
        ("cmc.lk_max_iters", config.cmc.lk_max_iters.to_string()),
        ("cmc.lk_epsilon", config.cmc.lk_epsilon.to_string()),
        ("cmc.ransac_inlier_px", config.cmc.ransac_inlier_px.to_string()),
        ("cmc.ransac_max_iters", config.cmc.ransac_max_iters.to_string()),
        ("cmc.ransac_min_inliers", config.cmc.ransac_min_inliers.to_string()),
        ("kalman.std_weight_position", config.kalman.std_weight_position.to_string()),
        ("kalman.std_weight_velocity", config.kalman.std_weight_velocity.to_string()),
    ];
    out.drain(..).map(|(k, v)| (format!("config.{k}"), v)).collect()
}

/// Parses a synthetic sequence config file. Occlusions use the form
/// `occlusions = id:start:end[,id:start:end...]`.
pub fn parse_synth_config(text: &str) -> Result<SynthConfig> {
    let mut cfg = SynthConfig::default();
    for (key, value) in entries(text)? {
        let v = value.as_str();
        match key.as_str() {
            "frames" => cfg.frames = parse(&key, v)?,
            "width" => cfg.width = parse(&key, v)?,
            "height" => cfg.height = parse(&key, v)?,
            "object_count" => cfg.object_count = parse(&key, v)?,
            "object_size" => cfg.object_size = parse(&key, v)?,
            "object_speed" => cfg.object_speed = parse(&key, v)?,
            "pan_x" => cfg.pan.0 = parse(&key, v)?,
            "pan_y" => cfg.pan.1 = parse(&key, v)?,
            "rotation_deg" => cfg.rotation_deg = parse(&key, v)?,
            "jump_period" => cfg.jump_period = parse(&key, v)?,
            "jump_pan_x" => cfg.jump_pan.0 = parse(&key, v)?,
            "jump_pan_y" => cfg.jump_pan.1 = parse(&key, v)?,
            "jump_rotation_deg" => cfg.jump_rotation_deg = parse(&key, v)?,
            "noise_amplitude" => cfg.noise_amplitude = parse(&key, v)?,
            "det_jitter_px" => cfg.det_jitter_px = parse(&key, v)?,
            "det_dropout" => cfg.det_dropout = parse(&key, v)?,
            "score_min" => cfg.score_min = parse(&key, v)?,
            "score_max" => cfg.score_max = parse(&key, v)?,
            "seed" => cfg.seed = parse(&key, v)?,
            "occlusions" => {
                cfg.occlusions = v
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(|spec| {
                        let parts: Vec<&str> = spec.trim().split(':').collect();
                        if parts.len() != 3 {
                            bail!("occlusion spec {spec:?}: expected id:start:end");
                        }
                        Ok(OcclusionWindow {
                            object_id: parse("occlusions.id", parts[0])?,
                            start_frame: parse("occlusions.start", parts[1])?,
                            end_frame: parse("occlusions.end", parts[2])?,
                        })
                    })
                    .collect::<Result<Vec<_>>>()
                    .context("parsing occlusions")?;
            }
            _ => bail!("unknown synth config key: {key}"),
        }
    }
    Ok(cfg)
}
