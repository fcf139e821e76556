//! MOT text format ingestion and emission.
//!
//! One record per line: `frame,id,bb_left,bb_top,bb_width,bb_height,conf,x,y,z`
//! with `.` as decimal separator and no header. Detections carry id -1; the
//! trailing three fields are placeholders. Writing uses the shortest decimal
//! representation that round-trips, so serialize(parse(x)) is byte-identical
//! for canonical input.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::tracker::TrackSnapshot;
use crate::types::{BBox, Detection};
use crate::Real;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MotParseError {
    #[error("line {line}: expected at least 7 comma-separated fields, got {got}")]
    TooFewFields { line: usize, got: usize },
    #[error("line {line}: expected at most 10 comma-separated fields, got {got}")]
    TooManyFields { line: usize, got: usize },
    #[error("line {line}: cannot parse {field} from {value:?}")]
    BadField { line: usize, field: &'static str, value: String },
    #[error("line {line}: frame numbers start at 1")]
    BadFrameNumber { line: usize },
}

/// One MOT line. `id` is -1 for raw detections.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotRecord {
    pub frame: u32,
    pub id: i64,
    pub left: f64,
    pub top: f64,
    pub width: f64,
    pub height: f64,
    pub score: f64,
    pub extra: [f64; 3],
}

impl MotRecord {
    pub fn bbox<T: Real>(&self) -> BBox<T> {
        BBox::new(
            T::from_f64(self.left).unwrap(),
            T::from_f64(self.top).unwrap(),
            T::from_f64(self.width).unwrap(),
            T::from_f64(self.height).unwrap(),
        )
    }
}

/// Records grouped and sorted by frame number.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MotSequence {
    pub frames: BTreeMap<u32, Vec<MotRecord>>,
}

impl MotSequence {
    pub fn from_records(records: impl IntoIterator<Item = MotRecord>) -> Self {
        let mut frames: BTreeMap<u32, Vec<MotRecord>> = BTreeMap::new();
        for r in records {
            frames.entry(r.frame).or_default().push(r);
        }
        Self { frames }
    }

    pub fn records(&self) -> impl Iterator<Item = &MotRecord> {
        self.frames.values().flatten()
    }

    pub fn record_count(&self) -> usize {
        self.frames.values().map(Vec::len).sum()
    }

    /// Lowest and highest frame numbers present, if any.
    pub fn frame_range(&self) -> Option<(u32, u32)> {
        let first = self.frames.keys().next()?;
        let last = self.frames.keys().next_back()?;
        Some((*first, *last))
    }

    /// Converts each frame's records into detections, clamping scores into
    /// `[0, 1]`.
    pub fn detections_by_frame<T: Real>(&self) -> BTreeMap<u32, Vec<Detection<T>>> {
        self.frames
            .iter()
            .map(|(&frame, records)| {
                let dets = records
                    .iter()
                    .map(|r| {
                        Detection::new(
                            r.bbox::<T>(),
                            T::from_f64(r.score.clamp(0.0, 1.0)).unwrap(),
                            0,
                        )
                    })
                    .collect();
                (frame, dets)
            })
            .collect()
    }
}

/// Parses MOT text. Empty input gives an empty sequence; malformed lines
/// are reported with their 1-based line numbers.
pub fn parse_mot(text: &str) -> Result<MotSequence, MotParseError> {
    let mut records = Vec::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw_line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        if fields.len() < 7 {
            return Err(MotParseError::TooFewFields { line, got: fields.len() });
        }
        if fields.len() > 10 {
            return Err(MotParseError::TooManyFields { line, got: fields.len() });
        }

        let frame: i64 = parse_field(line, "frame", fields[0])?;
        if frame < 1 || frame > u32::MAX as i64 {
            return Err(MotParseError::BadFrameNumber { line });
        }
        let id: i64 = parse_field(line, "id", fields[1])?;
        let left = parse_real(line, "bb_left", fields[2])?;
        let top = parse_real(line, "bb_top", fields[3])?;
        let width = parse_real(line, "bb_width", fields[4])?;
        let height = parse_real(line, "bb_height", fields[5])?;
        let score = parse_real(line, "conf", fields[6])?;
        let mut extra = [-1.0; 3];
        for (i, slot) in extra.iter_mut().enumerate() {
            if let Some(v) = fields.get(7 + i) {
                *slot = parse_real(line, "extra", v)?;
            }
        }
        records.push(MotRecord { frame: frame as u32, id, left, top, width, height, score, extra });
    }
    Ok(MotSequence::from_records(records))
}

fn parse_field<V: std::str::FromStr>(
    line: usize,
    field: &'static str,
    value: &str,
) -> Result<V, MotParseError> {
    value
        .parse()
        .map_err(|_| MotParseError::BadField { line, field, value: value.to_string() })
}

fn parse_real(line: usize, field: &'static str, value: &str) -> Result<f64, MotParseError> {
    let v: f64 = parse_field(line, field, value)?;
    if !v.is_finite() {
        return Err(MotParseError::BadField { line, field, value: value.to_string() });
    }
    Ok(v)
}

/// Serializes a sequence, frame-major and id-ordered within each frame, one
/// newline-terminated line per record.
pub fn write_mot(seq: &MotSequence) -> String {
    let mut out = String::new();
    for records in seq.frames.values() {
        let mut sorted: Vec<&MotRecord> = records.iter().collect();
        sorted.sort_by_key(|r| r.id);
        for r in sorted {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                r.frame,
                r.id,
                r.left,
                r.top,
                r.width,
                r.height,
                r.score,
                r.extra[0],
                r.extra[1],
                r.extra[2]
            ));
        }
    }
    out
}

/// Converts tracker history into MOT records.
pub fn sequence_from_snapshots<T: Real>(history: &[TrackSnapshot<T>]) -> MotSequence {
    MotSequence::from_records(history.iter().map(|s| MotRecord {
        frame: s.frame as u32,
        id: i64::from(s.id),
        left: s.bbox.left.to_f64().unwrap(),
        top: s.bbox.top.to_f64().unwrap(),
        width: s.bbox.width.to_f64().unwrap(),
        height: s.bbox.height.to_f64().unwrap(),
        score: s.score.to_f64().unwrap(),
        extra: [-1.0; 3],
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_detection_line() {
        let seq = parse_mot("1,-1,10,20,30,40,0.9,-1,-1,-1\n").unwrap();
        assert_eq!(seq.record_count(), 1);
        let r = seq.frames[&1][0];
        assert_eq!(r.id, -1);
        assert_eq!((r.left, r.top, r.width, r.height), (10.0, 20.0, 30.0, 40.0));
        assert_eq!(r.score, 0.9);
    }

    #[test]
    fn reports_malformed_line_number() {
        let err = parse_mot("1,-1,10,20,30,40,0.9\n1,abc,10,20,30,40,0.9\n").unwrap_err();
        assert_eq!(
            err,
            MotParseError::BadField { line: 2, field: "id", value: "abc".to_string() }
        );
    }

    #[test]
    fn empty_input_is_empty_sequence() {
        assert_eq!(parse_mot("").unwrap().record_count(), 0);
        assert_eq!(parse_mot("\n\n").unwrap().record_count(), 0);
    }

    #[test]
    fn nine_field_gt_lines_accepted() {
        let seq = parse_mot("3,7,1,2,3,4,1,1,0.8\n").unwrap();
        let r = seq.frames[&3][0];
        assert_eq!(r.extra, [1.0, 0.8, -1.0]);
    }

    #[test]
    fn too_few_fields_rejected() {
        assert_eq!(
            parse_mot("1,-1,10,20,30,40\n").unwrap_err(),
            MotParseError::TooFewFields { line: 1, got: 6 }
        );
    }

    #[test]
    fn zero_frame_rejected() {
        assert_eq!(
            parse_mot("0,-1,1,1,1,1,1\n").unwrap_err(),
            MotParseError::BadFrameNumber { line: 1 }
        );
    }

    #[test]
    fn canonical_round_trip_is_byte_identical() {
        let text = "1,-1,10,20,30,40,0.9,-1,-1,-1\n1,3,5.25,6.5,7,8,1,-1,-1,-1\n2,-1,0.123456,1,2,3,0.5,-1,-1,-1\n";
        let seq = parse_mot(text).unwrap();
        assert_eq!(write_mot(&seq), text);
    }

    #[test]
    fn writer_orders_frame_major_then_id() {
        let records = vec![
            MotRecord {
                frame: 2,
                id: 1,
                left: 0.0,
                top: 0.0,
                width: 1.0,
                height: 1.0,
                score: 1.0,
                extra: [-1.0; 3],
            },
            MotRecord {
                frame: 1,
                id: 9,
                left: 0.0,
                top: 0.0,
                width: 1.0,
                height: 1.0,
                score: 1.0,
                extra: [-1.0; 3],
            },
            MotRecord {
                frame: 1,
                id: 2,
                left: 0.0,
                top: 0.0,
                width: 1.0,
                height: 1.0,
                score: 1.0,
                extra: [-1.0; 3],
            },
        ];
        let text = write_mot(&MotSequence::from_records(records));
        let keys: Vec<String> =
            text.lines().map(|l| l.split(',').take(2).collect::<Vec<_>>().join(":")).collect();
        assert_eq!(keys, ["1:2", "1:9", "2:1"]);
    }

    #[test]
    fn empty_history_writes_empty_text() {
        assert_eq!(write_mot(&MotSequence::default()), "");
    }
}
