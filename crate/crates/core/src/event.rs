//! Event data model, sensor geometry and stream validity rules.

use std::fmt;

use thiserror::Error;

/// Timestamp in integer nanoseconds since stream start.
pub type Timestamp = i64;

pub const NANOS_PER_SEC: i64 = 1_000_000_000;

/// Sign of the brightness change that triggered an event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Polarity {
    Positive,
    Negative,
}

impl Polarity {
    /// Dataset convention: `1` is positive, `0` is negative.
    pub fn from_bit(bit: u8) -> Option<Self> {
        match bit {
            1 => Some(Polarity::Positive),
            0 => Some(Polarity::Negative),
            _ => None,
        }
    }

    pub fn as_bit(self) -> u8 {
        match self {
            Polarity::Positive => 1,
            Polarity::Negative => 0,
        }
    }
}

impl fmt::Display for Polarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Polarity::Positive => write!(f, "+"),
            Polarity::Negative => write!(f, "-"),
        }
    }
}

/// A single timestamped pixel activation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Event {
    pub t: Timestamp,
    /// Column, 0-based.
    pub x: u16,
    /// Row, 0-based.
    pub y: u16,
    pub p: Polarity,
}

impl Event {
    pub const fn new(t: Timestamp, x: u16, y: u16, p: Polarity) -> Self {
        Event { t, x, y, p }
    }
}

/// An event accepted by a detector. Always field-identical to some input event.
pub type CornerEvent = Event;

/// Smallest sensor that still fits one 9x9 local patch.
pub const MIN_SENSOR_DIM: u16 = 9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SensorGeometry {
    width: u16,
    height: u16,
}

/// DAVIS240C resolution.
impl Default for SensorGeometry {
    fn default() -> Self {
        SensorGeometry { width: 240, height: 180 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GeometryError {
    #[error("sensor {width}x{height} is smaller than the minimum {MIN_SENSOR_DIM}x{MIN_SENSOR_DIM}")]
    TooSmall { width: u16, height: u16 },
}

impl SensorGeometry {
    pub fn new(width: u16, height: u16) -> Result<Self, GeometryError> {
        if width < MIN_SENSOR_DIM || height < MIN_SENSOR_DIM {
            return Err(GeometryError::TooSmall { width, height });
        }
        Ok(SensorGeometry { width, height })
    }

    pub fn width(&self) -> u16 {
        self.width
    }

    pub fn height(&self) -> u16 {
        self.height
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    /// Row-major linear index of a pixel. Caller guarantees bounds.
    #[inline]
    pub fn index(&self, x: u16, y: u16) -> usize {
        y as usize * self.width as usize + x as usize
    }

    pub fn contains(&self, x: u16, y: u16) -> bool {
        x < self.width && y < self.height
    }
}

impl fmt::Display for SensorGeometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.width, self.height)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EventViolation {
    #[error("x out of range: {x} not in [0, {width})")]
    XOutOfRange { x: u16, width: u16 },
    #[error("y out of range: {y} not in [0, {height})")]
    YOutOfRange { y: u16, height: u16 },
    #[error("negative timestamp: {t} ns")]
    NegativeTime { t: Timestamp },
}

pub fn validate_event(e: &Event, geometry: &SensorGeometry) -> Result<(), EventViolation> {
    if e.t < 0 {
        return Err(EventViolation::NegativeTime { t: e.t });
    }
    if e.x >= geometry.width {
        return Err(EventViolation::XOutOfRange { x: e.x, width: geometry.width });
    }
    if e.y >= geometry.height {
        return Err(EventViolation::YOutOfRange { y: e.y, height: geometry.height });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("timestamps decrease at index {index}: {previous} ns followed by {current} ns")]
pub struct NonMonotone {
    pub index: usize,
    pub previous: Timestamp,
    pub current: Timestamp,
}

/// Checks that timestamps never decrease. Ties are allowed.
pub fn check_monotone(stream: &[Event]) -> Result<(), NonMonotone> {
    match stream.windows(2).position(|w| w[1].t < w[0].t) {
        None => Ok(()),
        Some(i) => Err(NonMonotone {
            index: i + 1,
            previous: stream[i].t,
            current: stream[i + 1].t,
        }),
    }
}
