//! Text formats for events, corners and ground-truth corner tracks.
//!
//! Events and corners: one `t x y p` line each, `t` in decimal seconds, `p` in
//! `{0, 1}`. Tracks: one `track_id t x y` line each, `x y` in fractional pixels.
//! Timestamps are parsed straight into integer nanoseconds and written with
//! nine decimals, so round trips are exact.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::event::{
    check_monotone, validate_event, Event, EventViolation, Polarity, SensorGeometry, Timestamp,
    NANOS_PER_SEC,
};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}:{line}: {message}")]
    Malformed { path: PathBuf, line: usize, message: String },
    #[error("{path}:{line}: {violation}")]
    Invalid { path: PathBuf, line: usize, violation: EventViolation },
    #[error("{path}: event {index} (line {line}) is older than its predecessor ({current} ns < {previous} ns)")]
    NonMonotone { path: PathBuf, index: usize, line: usize, previous: Timestamp, current: Timestamp },
    #[error("{path}:{line}: track {track_id} time {t} ns does not increase (previous {previous} ns)")]
    TrackOrder { path: PathBuf, line: usize, track_id: u64, t: Timestamp, previous: Timestamp },
}

impl DatasetError {
    fn io(path: &Path, source: io::Error) -> Self {
        DatasetError::Io { path: path.to_path_buf(), source }
    }

    fn malformed(path: &Path, line: usize, message: impl Into<String>) -> Self {
        DatasetError::Malformed { path: path.to_path_buf(), line, message: message.into() }
    }
}

/// Parses a non-negative decimal number of seconds into nanoseconds, rounding
/// half up beyond the ninth decimal.
pub fn parse_seconds(s: &str) -> Option<Timestamp> {
    let s = s.strip_prefix('+').unwrap_or(s);
    if s.contains(['e', 'E']) {
        let secs: f64 = s.parse().ok()?;
        if !(secs >= 0.0 && secs.is_finite()) {
            return None;
        }
        let ns = (secs * NANOS_PER_SEC as f64).round();
        return (ns <= Timestamp::MAX as f64).then_some(ns as Timestamp);
    }
    let (int_part, frac_part) = match s.split_once('.') {
        Some((i, f)) => (i, f),
        None => (s, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    let all_digits = |p: &str| p.bytes().all(|b| b.is_ascii_digit());
    if !all_digits(int_part) || !all_digits(frac_part) {
        return None;
    }
    let whole: Timestamp = if int_part.is_empty() { 0 } else { int_part.parse().ok()? };
    let mut nanos: Timestamp = 0;
    for (k, b) in frac_part.bytes().take(9).enumerate() {
        nanos += (b - b'0') as Timestamp * 10i64.pow(8 - k as u32);
    }
    if frac_part.len() > 9 && frac_part.as_bytes()[9] >= b'5' {
        nanos += 1;
    }
    whole.checked_mul(NANOS_PER_SEC)?.checked_add(nanos)
}

/// `seconds.nnnnnnnnn`, exact for non-negative timestamps.
pub fn format_seconds(t: Timestamp) -> String {
    let sign = if t < 0 { "-" } else { "" };
    let t = t.unsigned_abs();
    let n = NANOS_PER_SEC as u64;
    format!("{sign}{}.{:09}", t / n, t % n)
}

fn open(path: &Path) -> Result<BufReader<File>, DatasetError> {
    File::open(path).map(BufReader::new).map_err(|e| DatasetError::io(path, e))
}

fn create(path: &Path) -> Result<BufWriter<File>, DatasetError> {
    File::create(path).map(BufWriter::new).map_err(|e| DatasetError::io(path, e))
}

fn parse_event_line(path: &Path, lineno: usize, line: &str) -> Result<Event, DatasetError> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    let [t, x, y, p] = fields[..] else {
        return Err(DatasetError::malformed(
            path,
            lineno,
            format!("expected 4 fields `t x y p`, found {}", fields.len()),
        ));
    };
    let t = parse_seconds(t)
        .ok_or_else(|| DatasetError::malformed(path, lineno, format!("bad timestamp {t:?}")))?;
    let x: u16 = x
        .parse()
        .map_err(|_| DatasetError::malformed(path, lineno, format!("x out of range or not an integer: {x:?}")))?;
    let y: u16 = y
        .parse()
        .map_err(|_| DatasetError::malformed(path, lineno, format!("y out of range or not an integer: {y:?}")))?;
    let p = p
        .parse::<u8>()
        .ok()
        .and_then(Polarity::from_bit)
        .ok_or_else(|| DatasetError::malformed(path, lineno, format!("polarity must be 0 or 1, got {p:?}")))?;
    Ok(Event { t, x, y, p })
}

/// Reads, validates and monotonicity-checks an event file. Blank lines are
/// the only lines skipped.
pub fn read_events(path: &Path, geometry: &SensorGeometry) -> Result<Vec<Event>, DatasetError> {
    let reader = open(path)?;
    let mut events = Vec::new();
    let mut lines = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| DatasetError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let e = parse_event_line(path, lineno, &line)?;
        validate_event(&e, geometry).map_err(|violation| DatasetError::Invalid {
            path: path.to_path_buf(),
            line: lineno,
            violation,
        })?;
        events.push(e);
        lines.push(lineno);
    }
    check_monotone(&events).map_err(|err| DatasetError::NonMonotone {
        path: path.to_path_buf(),
        index: err.index,
        line: lines[err.index],
        previous: err.previous,
        current: err.current,
    })?;
    Ok(events)
}

pub fn write_events_to<W: Write>(mut w: W, events: &[Event]) -> io::Result<()> {
    for e in events {
        writeln!(w, "{} {} {} {}", format_seconds(e.t), e.x, e.y, e.p.as_bit())?;
    }
    w.flush()
}

pub fn write_events(path: &Path, events: &[Event]) -> Result<(), DatasetError> {
    write_events_to(create(path)?, events).map_err(|e| DatasetError::io(path, e))
}

/// Corners use the event line format.
pub fn write_corners(path: &Path, corners: &[Event]) -> Result<(), DatasetError> {
    write_events(path, corners)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackPoint {
    pub track_id: u64,
    pub t: Timestamp,
    pub x: f64,
    pub y: f64,
}

/// Points of one track, strictly increasing in time.
#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    pub id: u64,
    pub points: Vec<TrackPoint>,
}

impl Track {
    pub fn span(&self) -> Option<(Timestamp, Timestamp)> {
        Some((self.points.first()?.t, self.points.last()?.t))
    }

    /// Linear interpolation between the two points bracketing `t`.
    pub fn position_at(&self, t: Timestamp) -> Option<(f64, f64)> {
        let (start, end) = self.span()?;
        if t < start || t > end {
            return None;
        }
        let i = self.points.partition_point(|p| p.t <= t);
        if i == self.points.len() {
            let p = self.points[i - 1];
            return Some((p.x, p.y));
        }
        let (a, b) = (self.points[i - 1], self.points[i]);
        let s = (t - a.t) as f64 / (b.t - a.t) as f64;
        Some((a.x + s * (b.x - a.x), a.y + s * (b.y - a.y)))
    }
}

fn parse_track_line(path: &Path, lineno: usize, line: &str) -> Result<TrackPoint, DatasetError> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    let [id, t, x, y] = fields[..] else {
        return Err(DatasetError::malformed(
            path,
            lineno,
            format!("expected 4 fields `track_id t x y`, found {}", fields.len()),
        ));
    };
    let track_id = id
        .parse()
        .map_err(|_| DatasetError::malformed(path, lineno, format!("bad track id {id:?}")))?;
    let t = parse_seconds(t)
        .ok_or_else(|| DatasetError::malformed(path, lineno, format!("bad timestamp {t:?}")))?;
    let coord = |s: &str, name: &str| {
        s.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| DatasetError::malformed(path, lineno, format!("bad {name} {s:?}")))
    };
    Ok(TrackPoint { track_id, t, x: coord(x, "x")?, y: coord(y, "y")? })
}

/// Reads a track file into tracks ordered by id. Within each id the file must
/// list strictly increasing times; tracks may interleave.
pub fn read_tracks(path: &Path) -> Result<Vec<Track>, DatasetError> {
    let reader = open(path)?;
    let mut groups: BTreeMap<u64, Vec<TrackPoint>> = BTreeMap::new();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| DatasetError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let point = parse_track_line(path, lineno, &line)?;
        let group = groups.entry(point.track_id).or_default();
        if let Some(prev) = group.last() {
            if point.t <= prev.t {
                return Err(DatasetError::TrackOrder {
                    path: path.to_path_buf(),
                    line: lineno,
                    track_id: point.track_id,
                    t: point.t,
                    previous: prev.t,
                });
            }
        }
        group.push(point);
    }
    Ok(groups.into_iter().map(|(id, points)| Track { id, points }).collect())
}

pub fn write_tracks_to<W: Write>(mut w: W, tracks: &[Track]) -> io::Result<()> {
    for track in tracks {
        for p in &track.points {
            writeln!(w, "{} {} {} {}", p.track_id, format_seconds(p.t), p.x, p.y)?;
        }
    }
    w.flush()
}

pub fn write_tracks(path: &Path, tracks: &[Track]) -> Result<(), DatasetError> {
    write_tracks_to(create(path)?, tracks).map_err(|e| DatasetError::io(path, e))
}
