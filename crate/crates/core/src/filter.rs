//! Per-pixel redundancy filter applied before the surface update.
//!
//! An event passes when its pixel has no earlier event, when the earlier event
//! is older than the window, or when its polarity differs. The stored event is
//! replaced on every call, so a burst of same-polarity events keeps extending
//! the refractory period.

use crate::event::{Event, Polarity, SensorGeometry, Timestamp};

/// 50 ms.
pub const DEFAULT_WINDOW_NS: Timestamp = 50_000_000;

const NEVER: Timestamp = Timestamp::MIN;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterDecision {
    Pass,
    Reject,
}

impl FilterDecision {
    pub fn passed(self) -> bool {
        self == FilterDecision::Pass
    }
}

/// Per-pixel state is packed as `t << 1 | polarity` so a lookup touches one word.
#[derive(Debug, Clone)]
pub struct EventFilter {
    geometry: SensorGeometry,
    window: Timestamp,
    last: Vec<i64>,
}

#[inline(always)]
fn pack(t: Timestamp, p: Polarity) -> i64 {
    (t << 1) | p.as_bit() as i64
}

impl EventFilter {
    /// `window` is in nanoseconds. A pass needs a gap strictly greater than it.
    pub fn new(geometry: SensorGeometry, window: Timestamp) -> Self {
        assert!(window >= 0, "filter window must be non-negative");
        EventFilter { geometry, window, last: vec![NEVER; geometry.pixel_count()] }
    }

    pub fn window(&self) -> Timestamp {
        self.window
    }

    pub fn geometry(&self) -> SensorGeometry {
        self.geometry
    }

    #[inline]
    pub fn filter_event(&mut self, e: &Event) -> FilterDecision {
        debug_assert!(e.t >= 0 && e.t < Timestamp::MAX >> 1);
        let slot = &mut self.last[self.geometry.index(e.x, e.y)];
        let packed = pack(e.t, e.p);
        let last = std::mem::replace(slot, packed);
        if last == NEVER || (last ^ packed) & 1 != 0 || e.t - (last >> 1) > self.window {
            FilterDecision::Pass
        } else {
            FilterDecision::Reject
        }
    }

    /// Most recent event seen at a pixel, whether it passed or not.
    pub fn last(&self, x: u16, y: u16) -> Option<(Timestamp, Polarity)> {
        let last = self.last[self.geometry.index(x, y)];
        let p = if last & 1 == 1 { Polarity::Positive } else { Polarity::Negative };
        (last != NEVER).then_some((last >> 1, p))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use Polarity::{Negative, Positive};

    const US: Timestamp = 1_000;
    const MS: Timestamp = 1_000_000;

    fn filter() -> EventFilter {
        EventFilter::new(SensorGeometry::new(240, 180).unwrap(), DEFAULT_WINDOW_NS)
    }

    #[test]
    fn first_event_at_pixel_passes() {
        let mut f = filter();
        assert_eq!(f.filter_event(&Event::new(100, 3, 4, Positive)), FilterDecision::Pass);
        assert_eq!(f.last(3, 4), Some((100, Positive)));
        assert_eq!(f.last(4, 3), None);
    }

    #[test]
    fn same_polarity_inside_window_rejected() {
        let mut f = filter();
        f.filter_event(&Event::new(0, 3, 4, Positive));
        assert_eq!(f.filter_event(&Event::new(10 * US, 3, 4, Positive)), FilterDecision::Reject);
    }

    #[test]
    fn opposite_polarity_passes() {
        let mut f = filter();
        f.filter_event(&Event::new(0, 3, 4, Positive));
        assert_eq!(f.filter_event(&Event::new(10 * US, 3, 4, Negative)), FilterDecision::Pass);
    }

    #[test]
    fn beyond_window_passes() {
        let mut f = filter();
        f.filter_event(&Event::new(0, 3, 4, Positive));
        assert_eq!(f.filter_event(&Event::new(60 * MS, 3, 4, Positive)), FilterDecision::Pass);
    }

    #[test]
    fn gap_equal_to_window_rejected() {
        let mut f = filter();
        f.filter_event(&Event::new(0, 3, 4, Positive));
        assert_eq!(f.filter_event(&Event::new(50 * MS, 3, 4, Positive)), FilterDecision::Reject);
    }

    #[test]
    fn rejected_event_becomes_reference() {
        let mut f = filter();
        f.filter_event(&Event::new(0, 3, 4, Positive));
        // rejected, but restarts the window
        assert!(!f.filter_event(&Event::new(40 * MS, 3, 4, Positive)).passed());
        assert_eq!(f.last(3, 4), Some((40 * MS, Positive)));
        assert!(!f.filter_event(&Event::new(80 * MS, 3, 4, Positive)).passed());
        assert!(f.filter_event(&Event::new(131 * MS, 3, 4, Positive)).passed());
    }

    #[test]
    fn zero_window_passes_distinct_timestamps() {
        let mut f = EventFilter::new(SensorGeometry::default(), 0);
        for t in 0..20 {
            assert!(f.filter_event(&Event::new(t, 7, 7, Positive)).passed());
        }
        assert!(!f.filter_event(&Event::new(19, 7, 7, Positive)).passed());
    }

    proptest! {
        #[test]
        fn same_polarity_passes_are_separated(
            gaps in proptest::collection::vec((0i64..120 * MS, any::<bool>()), 1..200),
            window in 0i64..80 * MS,
        ) {
            let mut f = EventFilter::new(SensorGeometry::new(9, 9).unwrap(), window);
            let mut t = 0;
            // (timestamp, polarity) of the last pass, reset by any opposite-polarity event
            let mut last_pass: Option<(Timestamp, Polarity)> = None;
            let mut last_seen: Option<Polarity> = None;
            for (gap, pos) in gaps {
                t += gap;
                let p = if pos { Positive } else { Negative };
                if last_seen.is_some_and(|q| q != p) {
                    last_pass = None;
                }
                last_seen = Some(p);
                if f.filter_event(&Event::new(t, 2, 2, p)).passed() {
                    if let Some((tp, pp)) = last_pass {
                        prop_assert_eq!(pp, p);
                        prop_assert!(t - tp > window);
                    }
                    last_pass = Some((t, p));
                }
                prop_assert_eq!(f.last(2, 2), Some((t, p)));
            }
        }
    }
}
