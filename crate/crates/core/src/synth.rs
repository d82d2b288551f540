//! Translating convex polygon scenes with exactly known vertex trajectories.
//!
//! Each polygon edge emits events as a Poisson process whose rate is
//! `edge_event_rate * edge_length * |n . v| / |v|`, i.e. proportional to how
//! fast the edge sweeps across pixels. Edges parallel to the motion stay
//! silent. Each event lands on the pixel nearest a uniformly drawn point of
//! the edge at its timestamp. Leading edges (outward normal along the
//! velocity) fire positive events, trailing edges negative ones.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use thiserror::Error;

use crate::event::{Event, Polarity, SensorGeometry, Timestamp, NANOS_PER_SEC};
use crate::io::{Track, TrackPoint};

/// Required clearance between the polygon and the image border, in pixels.
pub const MARGIN: f64 = 6.0;
/// Track sampling period.
pub const TRACK_PERIOD_NS: Timestamp = 10_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct SceneSpec {
    pub geometry: SensorGeometry,
    /// Convex polygon vertices at t = 0, in pixels, either winding.
    pub polygon: Vec<(f64, f64)>,
    /// Pixels per second.
    pub velocity: (f64, f64),
    /// Seconds.
    pub duration: f64,
    /// Events per pixel of edge length per second, for an edge sweeping
    /// perpendicular to its own direction.
    pub edge_event_rate: f64,
    /// Uniform background events per second over the whole sensor.
    pub noise_rate: f64,
    pub seed: u64,
}

/// Axis-aligned square given by its top-left corner and side.
pub fn square(x0: f64, y0: f64, side: f64) -> Vec<(f64, f64)> {
    vec![(x0, y0), (x0 + side, y0), (x0 + side, y0 + side), (x0, y0 + side)]
}

impl Default for SceneSpec {
    /// A 40 px square drifting right and down across a 240x180 sensor.
    fn default() -> Self {
        SceneSpec {
            geometry: SensorGeometry::default(),
            polygon: square(60.0, 50.0, 40.0),
            velocity: (20.0, 10.0),
            duration: 4.0,
            edge_event_rate: 100.0,
            noise_rate: 0.0,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SceneError {
    #[error("polygon needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("polygon is not strictly convex at vertex {0}")]
    NotConvex(usize),
    #[error("polygon vertex {vertex} comes within {MARGIN} px of the image border at t={t} s")]
    LeavesImage { vertex: usize, t: f64 },
    #[error("edge_event_rate must be positive and finite, got {0}")]
    EdgeRate(f64),
    #[error("noise_rate must be non-negative and finite, got {0}")]
    NoiseRate(f64),
    #[error("duration must be non-negative and finite, got {0}")]
    Duration(f64),
    #[error("velocity must be finite")]
    Velocity,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub events: Vec<Event>,
    /// One track per vertex, `track_id` = vertex index.
    pub tracks: Vec<Track>,
}

impl SceneSpec {
    pub fn validate(&self) -> Result<(), SceneError> {
        let n = self.polygon.len();
        if n < 3 {
            return Err(SceneError::TooFewVertices(n));
        }
        if !(self.edge_event_rate > 0.0 && self.edge_event_rate.is_finite()) {
            return Err(SceneError::EdgeRate(self.edge_event_rate));
        }
        if !(self.noise_rate >= 0.0 && self.noise_rate.is_finite()) {
            return Err(SceneError::NoiseRate(self.noise_rate));
        }
        if !(self.duration >= 0.0 && self.duration.is_finite()) {
            return Err(SceneError::Duration(self.duration));
        }
        if !(self.velocity.0.is_finite() && self.velocity.1.is_finite()) {
            return Err(SceneError::Velocity);
        }
        let orientation = self.orientation();
        for i in 0..n {
            let (a, b, c) = (self.polygon[i], self.polygon[(i + 1) % n], self.polygon[(i + 2) % n]);
            let turn = (b.0 - a.0) * (c.1 - b.1) - (b.1 - a.1) * (c.0 - b.0);
            let signed = turn * orientation;
            if signed.is_nan() || signed <= 1e-9 {
                return Err(SceneError::NotConvex((i + 1) % n));
            }
        }
        // linear motion of a convex set: extremes occur at the endpoints in time
        let max_x = self.geometry.width() as f64 - 1.0 - MARGIN;
        let max_y = self.geometry.height() as f64 - 1.0 - MARGIN;
        for t in [0.0, self.duration] {
            for (vertex, &(x, y)) in self.polygon.iter().enumerate() {
                let (x, y) = (x + self.velocity.0 * t, y + self.velocity.1 * t);
                if !(MARGIN..=max_x).contains(&x) || !(MARGIN..=max_y).contains(&y) {
                    return Err(SceneError::LeavesImage { vertex, t });
                }
            }
        }
        Ok(())
    }

    /// Sign of the signed area (shoelace), +1 or -1 (0 when degenerate).
    fn orientation(&self) -> f64 {
        let n = self.polygon.len();
        let area2: f64 = (0..n)
            .map(|i| {
                let (a, b) = (self.polygon[i], self.polygon[(i + 1) % n]);
                a.0 * b.1 - b.0 * a.1
            })
            .sum();
        if area2 > 0.0 {
            1.0
        } else if area2 < 0.0 {
            -1.0
        } else {
            0.0
        }
    }

    pub fn vertex_at(&self, i: usize, t_secs: f64) -> (f64, f64) {
        let (x, y) = self.polygon[i];
        (x + self.velocity.0 * t_secs, y + self.velocity.1 * t_secs)
    }

    /// Euclidean distance from `(x, y)` to the polygon outline at time `t`.
    pub fn distance_to_boundary(&self, t: Timestamp, x: f64, y: f64) -> f64 {
        let secs = t as f64 / NANOS_PER_SEC as f64;
        let n = self.polygon.len();
        (0..n)
            .map(|i| {
                let a = self.vertex_at(i, secs);
                let b = self.vertex_at((i + 1) % n, secs);
                point_segment_distance((x, y), a, b)
            })
            .fold(f64::INFINITY, f64::min)
    }
}

fn point_segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let s = if len2 > 0.0 {
        (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let (cx, cy) = (a.0 + s * dx, a.1 + s * dy);
    ((p.0 - cx).powi(2) + (p.1 - cy).powi(2)).sqrt()
}

fn to_ns(secs: f64) -> Timestamp {
    (secs * NANOS_PER_SEC as f64).round() as Timestamp
}

/// Poisson arrival times on `[0, duration)` with the given rate.
fn arrivals(rng: &mut ChaCha8Rng, rate: f64, duration: f64) -> Vec<f64> {
    let mut out = Vec::new();
    if rate <= 0.0 || duration <= 0.0 {
        return out;
    }
    let gap = Exp::new(rate).expect("positive rate");
    let mut t = gap.sample(rng);
    while t < duration {
        out.push(t);
        t += gap.sample(rng);
    }
    out
}

pub fn generate(spec: &SceneSpec) -> Result<Scene, SceneError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.polygon.len();
    let orientation = spec.orientation();
    let (vx, vy) = spec.velocity;
    let speed = vx.hypot(vy);

    let mut events = Vec::new();
    for i in 0..n {
        let (a, b) = (spec.polygon[i], spec.polygon[(i + 1) % n]);
        let (ex, ey) = (b.0 - a.0, b.1 - a.1);
        let length = ex.hypot(ey);
        // outward normal: right of the edge for counter-clockwise in y-up terms
        let (nx, ny) = (ey * orientation / length, -ex * orientation / length);
        let sweep = if speed > 0.0 { (nx * vx + ny * vy) / speed } else { 0.0 };
        if sweep.abs() < 1e-12 {
            continue;
        }
        let polarity = if sweep > 0.0 { Polarity::Positive } else { Polarity::Negative };
        for t in arrivals(&mut rng, spec.edge_event_rate * length * sweep.abs(), spec.duration) {
            let s: f64 = rng.random();
            let x = a.0 + s * ex + vx * t;
            let y = a.1 + s * ey + vy * t;
            events.push(Event::new(to_ns(t), x.round() as u16, y.round() as u16, polarity));
        }
    }

    if spec.noise_rate > 0.0 {
        let (w, h) = (spec.geometry.width(), spec.geometry.height());
        for t in arrivals(&mut rng, spec.noise_rate, spec.duration) {
            let p = if rng.random::<bool>() { Polarity::Positive } else { Polarity::Negative };
            events.push(Event::new(to_ns(t), rng.random_range(0..w), rng.random_range(0..h), p));
        }
    }

    // stable: simultaneous events keep generation order
    events.sort_by_key(|e| e.t);

    let mut sample_times: Vec<Timestamp> = (0..).map(|k| k * TRACK_PERIOD_NS).take_while(|&t| t as f64 <= spec.duration * NANOS_PER_SEC as f64).collect();
    let end = to_ns(spec.duration);
    if sample_times.last() != Some(&end) && end > 0 {
        sample_times.push(end);
    }
    let tracks = (0..n)
        .map(|i| Track {
            id: i as u64,
            points: sample_times
                .iter()
                .map(|&t| {
                    let (x, y) = spec.vertex_at(i, t as f64 / NANOS_PER_SEC as f64);
                    TrackPoint { track_id: i as u64, t, x, y }
                })
                .collect(),
        })
        .collect();

    let scene = Scene { events, tracks };
    debug_assert!(
        spec.noise_rate > 0.0
            || scene
                .events
                .iter()
                .all(|e| spec.distance_to_boundary(e.t, e.x as f64, e.y as f64) <= 1.0),
        "edge event off the outline"
    );
    Ok(scene)
}
