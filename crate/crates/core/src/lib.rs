//! Asynchronous corner detection on event-camera streams.
//!
//! Every event runs through the same short pipeline:
//!
//! 1. [`filter`] drops redundant same-polarity events at a pixel.
//! 2. [`sae`] writes the event into the global Surface of Active Events for its
//!    polarity and reads the 9x9 window around it.
//! 3. [`arc`] checks for a newest arc on the radius-3 and radius-4 rings.
//! 4. [`harris`] binarizes the 25 newest cells and thresholds the Harris score.
//!
//! [`detector`] wires the stages together and exposes the comparison variants.
//! [`io`], [`synth`] and [`eval`] cover datasets, synthetic ground truth and
//! metrics; [`cli`] is the command-line front end.

pub mod arc;
pub mod cli;
pub mod detector;
pub mod eval;
pub mod event;
pub mod filter;
pub mod harris;
pub mod io;
pub mod sae;
pub mod synth;

pub use detector::{detect, Counters, Detector, DetectorConfig, Variant};
pub use event::{CornerEvent, Event, Polarity, SensorGeometry, Timestamp};
