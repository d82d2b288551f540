//! Global Surface of Active Events, one timestamp map per polarity.
//!
//! Each incoming event writes exactly one cell. Detection reads a 9x9 window
//! around the event from the surface matching its polarity.

use crate::event::{Event, Polarity, SensorGeometry, Timestamp};

/// Cell value for pixels that never fired. Orders below every real timestamp.
pub const NEVER: Timestamp = Timestamp::MIN;

/// Half-width of the local window.
pub const PATCH_RADIUS: usize = 4;
pub const PATCH_SIZE: usize = 2 * PATCH_RADIUS + 1;

#[derive(Debug, Clone)]
pub struct GlobalSae {
    geometry: SensorGeometry,
    positive: Vec<Timestamp>,
    negative: Vec<Timestamp>,
}

/// 9x9 timestamps around an event, indexed `values[row][col]` with the event at
/// `[4][4]`; row grows with y, col with x.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalPatch {
    pub values: [[Timestamp; PATCH_SIZE]; PATCH_SIZE],
    pub center: (u16, u16, Timestamp),
}

impl LocalPatch {
    /// Timestamp at offset `(dx, dy)` from the center.
    #[inline(always)]
    pub fn at(&self, dx: i8, dy: i8) -> Timestamp {
        self.values[(PATCH_RADIUS as isize + dy as isize) as usize]
            [(PATCH_RADIUS as isize + dx as isize) as usize]
    }

    pub fn center_value(&self) -> Timestamp {
        self.values[PATCH_RADIUS][PATCH_RADIUS]
    }

    /// Builds a patch from raw values. The center coordinates are informational.
    pub fn from_values(values: [[Timestamp; PATCH_SIZE]; PATCH_SIZE]) -> Self {
        let t = values[PATCH_RADIUS][PATCH_RADIUS];
        LocalPatch { values, center: (PATCH_RADIUS as u16, PATCH_RADIUS as u16, t) }
    }
}

impl GlobalSae {
    pub fn new(geometry: SensorGeometry) -> Self {
        let n = geometry.pixel_count();
        GlobalSae { geometry, positive: vec![NEVER; n], negative: vec![NEVER; n] }
    }

    pub fn geometry(&self) -> SensorGeometry {
        self.geometry
    }

    #[inline]
    fn surface(&self, p: Polarity) -> &[Timestamp] {
        match p {
            Polarity::Positive => &self.positive,
            Polarity::Negative => &self.negative,
        }
    }

    #[inline]
    pub fn update(&mut self, e: &Event) {
        let idx = self.geometry.index(e.x, e.y);
        let surface = match e.p {
            Polarity::Positive => &mut self.positive,
            Polarity::Negative => &mut self.negative,
        };
        surface[idx] = e.t;
    }

    pub fn get(&self, p: Polarity, x: u16, y: u16) -> Timestamp {
        self.surface(p)[self.geometry.index(x, y)]
    }

    /// Whether a full window fits around `(x, y)`.
    #[inline]
    pub fn fits_window(&self, x: u16, y: u16) -> bool {
        let (x, y) = (x as usize, y as usize);
        x >= PATCH_RADIUS
            && y >= PATCH_RADIUS
            && x + PATCH_RADIUS < self.geometry.width() as usize
            && y + PATCH_RADIUS < self.geometry.height() as usize
    }

    /// Window of the polarity-matching surface centered on `e`, or `None` when
    /// the event is within four pixels of a border.
    #[inline]
    pub fn extract_local(&self, e: &Event) -> Option<LocalPatch> {
        if !self.fits_window(e.x, e.y) {
            return None;
        }
        let surface = self.surface(e.p);
        let width = self.geometry.width() as usize;
        let x0 = e.x as usize - PATCH_RADIUS;
        let y0 = e.y as usize - PATCH_RADIUS;
        let mut values = [[NEVER; PATCH_SIZE]; PATCH_SIZE];
        for (r, row) in values.iter_mut().enumerate() {
            let start = (y0 + r) * width + x0;
            row.copy_from_slice(&surface[start..start + PATCH_SIZE]);
        }
        Some(LocalPatch { values, center: (e.x, e.y, e.t) })
    }
}
