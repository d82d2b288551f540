//! Ground-truth labeling with oblique cylinders, detection metrics, the
//! tracked/detected corner-set merge, and throughput measurement.

use std::time::{Duration, Instant};

use thiserror::Error;

use crate::detector::{Counters, Detector, DetectorConfig, Variant};
use crate::event::{Event, Timestamp};
use crate::harris::ConfigError;
use crate::io::Track;

pub const DEFAULT_RADIUS_TP: f64 = 3.5;
pub const DEFAULT_RADIUS_FP: f64 = 5.0;
pub const DEFAULT_MERGE_RADIUS: f64 = 5.0;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LabelCounts {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
}

impl LabelCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

impl std::ops::Add for LabelCounts {
    type Output = LabelCounts;

    fn add(self, o: LabelCounts) -> LabelCounts {
        LabelCounts { tp: self.tp + o.tp, fp: self.fp + o.fp, fn_: self.fn_ + o.fn_, tn: self.tn + o.tn }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Label {
    Tp,
    Fp,
    Fn,
    Tn,
    Ignored,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("no ground-truth tracks")]
    NoTracks,
    #[error("corner {index} ({corner:?}) is not part of the event stream")]
    CornerNotInStream { index: usize, corner: Event },
    #[error("radii must satisfy 0 <= tp ({tp}) <= fp ({fp})")]
    Radii { tp: f64, fp: f64 },
}

/// Distance from `(x, y)` to the nearest track position at `t`. Tracks whose
/// span does not contain `t` are skipped.
pub fn nearest_track_distance(tracks: &[Track], t: Timestamp, x: f64, y: f64) -> Option<f64> {
    tracks
        .iter()
        .filter_map(|tr| tr.position_at(t))
        .map(|(tx, ty)| (tx - x).hypot(ty - y))
        .min_by(f64::total_cmp)
}

/// `d <= r_tp` is the inner cylinder, `r_tp < d <= r_fp` the outer shell.
pub fn label_one(distance: Option<f64>, detected: bool, r_tp: f64, r_fp: f64) -> Label {
    match distance {
        Some(d) if d <= r_tp => if detected { Label::Tp } else { Label::Fn },
        Some(d) if d <= r_fp => if detected { Label::Fp } else { Label::Tn },
        _ => Label::Ignored,
    }
}

/// Marks which events are corners. `corners` must be a subsequence of `events`.
pub fn detection_mask(events: &[Event], corners: &[Event]) -> Result<Vec<bool>, EvalError> {
    let mut mask = vec![false; events.len()];
    let mut next = 0;
    for (index, c) in corners.iter().enumerate() {
        let offset = events[next..]
            .iter()
            .position(|e| e == c)
            .ok_or(EvalError::CornerNotInStream { index, corner: *c })?;
        mask[next + offset] = true;
        next += offset + 1;
    }
    Ok(mask)
}

/// Per-event labels, parallel to `events`.
pub fn label_each(
    events: &[Event],
    corners: &[Event],
    tracks: &[Track],
    r_tp: f64,
    r_fp: f64,
) -> Result<Vec<Label>, EvalError> {
    if tracks.is_empty() {
        return Err(EvalError::NoTracks);
    }
    if !(0.0 <= r_tp && r_tp <= r_fp) {
        return Err(EvalError::Radii { tp: r_tp, fp: r_fp });
    }
    let mask = detection_mask(events, corners)?;
    Ok(events
        .iter()
        .zip(mask)
        .map(|(e, detected)| {
            let d = nearest_track_distance(tracks, e.t, e.x as f64, e.y as f64);
            label_one(d, detected, r_tp, r_fp)
        })
        .collect())
}

pub fn label_events(
    events: &[Event],
    corners: &[Event],
    tracks: &[Track],
    r_tp: f64,
    r_fp: f64,
) -> Result<LabelCounts, EvalError> {
    let mut counts = LabelCounts::default();
    for label in label_each(events, corners, tracks, r_tp, r_fp)? {
        match label {
            Label::Tp => counts.tp += 1,
            Label::Fp => counts.fp += 1,
            Label::Fn => counts.fn_ += 1,
            Label::Tn => counts.tn += 1,
            Label::Ignored => {}
        }
    }
    Ok(counts)
}

/// Percentages; `None` where the denominator is zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub fpr: Option<f64>,
    pub accuracy: Option<f64>,
    pub reduction: Option<f64>,
    pub counts: LabelCounts,
}

fn percent(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| 100.0 * num as f64 / den as f64)
}

pub fn compute_metrics(counts: LabelCounts, n_events: u64, n_corners: u64) -> Metrics {
    Metrics {
        fpr: percent(counts.fp, counts.fp + counts.tn),
        accuracy: percent(counts.tp, counts.tp + counts.fp),
        reduction: percent(n_events.saturating_sub(n_corners), n_events),
        counts,
    }
}

/// Event-count weighted mean of per-scene values, skipping scenes where the
/// value is undefined.
pub fn weighted_overall(per_scene: &[(Option<f64>, u64)]) -> Option<f64> {
    let (sum, weight) = per_scene
        .iter()
        .filter_map(|&(v, w)| v.map(|v| (v * w as f64, w)))
        .fold((0.0, 0u64), |(s, n), (v, w)| (s + v, n + w));
    (weight > 0).then(|| sum / weight as f64)
}

/// Keeps every tracked corner and adds each detected corner that is at least
/// `radius` away from all tracked ones.
pub fn merge_corner_sets(tracked: &[(f64, f64)], detected: &[(f64, f64)], radius: f64) -> Vec<(f64, f64)> {
    let mut merged = tracked.to_vec();
    merged.extend(detected.iter().copied().filter(|&(x, y)| {
        tracked.iter().all(|&(tx, ty)| (tx - x).hypot(ty - y) >= radius)
    }));
    merged
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Throughput {
    pub us_per_event: f64,
    pub meps: f64,
}

/// Mean time per event and the implied maximum event rate.
pub fn throughput(elapsed: Duration, events: u64) -> Throughput {
    let us_per_event = elapsed.as_secs_f64() * 1e6 / events as f64;
    Throughput { us_per_event, meps: 1.0 / us_per_event }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub variant: Variant,
    pub events: u64,
    pub elapsed: Duration,
    pub throughput: Throughput,
    pub counters: Counters,
}

/// Replays pre-loaded events through a fresh detector on the calling thread
/// and times the whole replay.
pub fn benchmark_throughput(config: &DetectorConfig, events: &[Event]) -> Result<BenchReport, ConfigError> {
    assert!(!events.is_empty(), "benchmark needs at least one event");
    let mut detector = Detector::new(config.clone())?;
    let mut corners = 0u64;
    let start = Instant::now();
    for e in events {
        corners += std::hint::black_box(detector.process_event(e)) as u64;
    }
    let elapsed = start.elapsed();
    std::hint::black_box(corners);
    Ok(BenchReport {
        variant: config.variant,
        events: events.len() as u64,
        elapsed,
        throughput: throughput(elapsed, events.len() as u64),
        counters: detector.counters(),
    })
}
