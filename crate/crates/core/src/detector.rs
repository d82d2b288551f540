//! Per-event detection pipeline and its variants.

use std::fmt;
use std::str::FromStr;

use crate::arc::{select_candidate, CircleMask};
use crate::event::{CornerEvent, Event, SensorGeometry, Timestamp};
use crate::filter::{EventFilter, DEFAULT_WINDOW_NS};
use crate::harris::{ConfigError, Refiner, RefinerConfig};
use crate::sae::GlobalSae;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    /// filter -> surface -> arc gate -> Harris score
    FaHarris,
    /// filter -> surface -> Harris score on every event
    GeHarris,
    /// filter -> surface -> arc gate
    ArcOnly,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::FaHarris, Variant::GeHarris, Variant::ArcOnly];

    pub fn name(self) -> &'static str {
        match self {
            Variant::FaHarris => "fa-harris",
            Variant::GeHarris => "g-eharris",
            Variant::ArcOnly => "arc-only",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| format!("unknown variant {s:?}, expected one of fa-harris, g-eharris, arc-only"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectorConfig {
    pub geometry: SensorGeometry,
    pub variant: Variant,
    /// `None` disables the filter entirely.
    pub filter_window: Option<Timestamp>,
    pub mask: CircleMask,
    pub refiner: RefinerConfig,
}

impl DetectorConfig {
    pub fn new(geometry: SensorGeometry, variant: Variant) -> Self {
        DetectorConfig {
            geometry,
            variant,
            filter_window: Some(DEFAULT_WINDOW_NS),
            mask: CircleMask::default(),
            refiner: RefinerConfig::default(),
        }
    }
}

/// Stage counters. For every variant
/// `corners <= candidates <= events_passed_filter <= events_in`; `candidates`
/// counts events that reached the scoring stage (g-eharris) or passed the arc
/// gate (fa-harris, arc-only).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Counters {
    pub events_in: u64,
    pub events_passed_filter: u64,
    pub candidates: u64,
    pub corners: u64,
}

#[derive(Debug, Clone)]
pub struct Detector {
    config: DetectorConfig,
    filter: Option<EventFilter>,
    sae: GlobalSae,
    refiner: Refiner,
    counters: Counters,
}

impl Detector {
    pub fn new(config: DetectorConfig) -> Result<Self, ConfigError> {
        let refiner = Refiner::new(config.refiner)?;
        Ok(Detector {
            filter: config.filter_window.map(|w| EventFilter::new(config.geometry, w)),
            sae: GlobalSae::new(config.geometry),
            refiner,
            counters: Counters::default(),
            config,
        })
    }

    pub fn config(&self) -> &DetectorConfig {
        &self.config
    }

    pub fn counters(&self) -> Counters {
        self.counters
    }

    pub fn sae(&self) -> &GlobalSae {
        &self.sae
    }

    /// Runs one event through the pipeline. The event must lie inside the
    /// configured geometry and not be older than its predecessor.
    #[inline]
    pub fn process_event(&mut self, e: &Event) -> bool {
        self.counters.events_in += 1;
        if let Some(filter) = self.filter.as_mut() {
            if !filter.filter_event(e).passed() {
                return false;
            }
        }
        self.counters.events_passed_filter += 1;
        self.sae.update(e);
        let Some(patch) = self.sae.extract_local(e) else {
            return false;
        };
        let is_corner = match self.config.variant {
            Variant::FaHarris => {
                if !select_candidate(&patch, &self.config.mask) {
                    return false;
                }
                self.counters.candidates += 1;
                self.refiner.refine(&patch).is_corner
            }
            Variant::GeHarris => {
                self.counters.candidates += 1;
                self.refiner.refine(&patch).is_corner
            }
            Variant::ArcOnly => {
                let candidate = select_candidate(&patch, &self.config.mask);
                self.counters.candidates += candidate as u64;
                candidate
            }
        };
        self.counters.corners += is_corner as u64;
        is_corner
    }

    pub fn process_stream(&mut self, events: &[Event]) -> Vec<CornerEvent> {
        events.iter().filter(|e| self.process_event(e)).copied().collect()
    }
}

/// Fresh detector over a whole stream; returns the corners and final counters.
pub fn detect(config: &DetectorConfig, events: &[Event]) -> Result<(Vec<CornerEvent>, Counters), ConfigError> {
    let mut detector = Detector::new(config.clone())?;
    let corners = detector.process_stream(events);
    Ok((corners, detector.counters()))
}
