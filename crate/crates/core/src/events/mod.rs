//! Event-stream data model: events, streams, slicing, encoder
//! synchronization, and accumulation into images of warped events.

mod io;
mod iwe;
mod sync;

pub use io::{
    read_encoder_csv, read_events, read_events_amev, read_events_csv, write_encoder_csv,
    write_events, EventFormat, ReadReport,
};
pub use iwe::{accumulate_iwe, accumulate_iwe_warped, accumulate_iwe_warped_seq, Binning, Iwe};
pub use sync::{sync_theta, EncoderSample};

use std::f64::consts::TAU;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EventError {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: u64, msg: String },
    #[error("binary parse error at byte {offset}: {msg}")]
    Binary { offset: u64, msg: String },
    #[error("resolution mismatch: {0}")]
    ResolutionMismatch(String),
    #[error("empty event stream")]
    EmptyStream,
    #[error("event {index} outside encoder coverage")]
    OutOfRange { index: usize },
    #[error("invalid encoder data: {0}")]
    Encoder(String),
    #[error("stream carries no prism angles")]
    MissingTheta,
    #[error("theta count {thetas} does not match event count {events}")]
    ThetaLengthMismatch { thetas: usize, events: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Sign of a brightness change.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(i8)]
pub enum Polarity {
    Neg = -1,
    Pos = 1,
}

impl Polarity {
    pub fn as_i8(self) -> i8 {
        self as i8
    }

    pub fn from_i8(v: i8) -> Option<Self> {
        match v {
            1 => Some(Polarity::Pos),
            -1 => Some(Polarity::Neg),
            _ => None,
        }
    }
}

/// A single brightness-change spike.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Event {
    /// Timestamp in integer microseconds.
    pub t_us: u64,
    pub x: u16,
    pub y: u16,
    pub polarity: Polarity,
}

impl Event {
    /// Stream ordering: by time, ties broken by (y, x, polarity).
    pub fn sort_key(&self) -> (u64, u16, u16, i8) {
        (self.t_us, self.y, self.x, self.polarity.as_i8())
    }
}

/// An event after a sub-pixel warp; position is real-valued.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WarpedEvent {
    pub t_us: u64,
    pub x: f64,
    pub y: f64,
    pub polarity: Polarity,
}

/// A sorted, bounds-checked event stream, optionally synchronized with
/// per-event prism angles.
#[derive(Debug, Clone, PartialEq)]
pub struct EventStream {
    width: u16,
    height: u16,
    events: Vec<Event>,
    theta: Option<Vec<f64>>,
}

impl EventStream {
    /// Builds a stream from possibly unsorted events, returning the number
    /// of adjacent order violations that had to be repaired.
    pub fn from_unsorted(
        width: u16,
        height: u16,
        mut events: Vec<Event>,
    ) -> Result<(Self, u64), EventError> {
        for e in &events {
            if e.x >= width || e.y >= height {
                return Err(EventError::ResolutionMismatch(format!(
                    "event at ({}, {}) outside {}x{}",
                    e.x, e.y, width, height
                )));
            }
        }
        let out_of_order = events
            .windows(2)
            .filter(|w| w[0].sort_key() > w[1].sort_key())
            .count() as u64;
        if out_of_order > 0 {
            events.sort_unstable_by_key(Event::sort_key);
        }
        Ok((Self { width, height, events, theta: None }, out_of_order))
    }

    /// Events must already be in stream order and within bounds.
    pub(crate) fn from_sorted(width: u16, height: u16, events: Vec<Event>) -> Self {
        debug_assert!(events.windows(2).all(|w| w[0].sort_key() <= w[1].sort_key()));
        debug_assert!(events.iter().all(|e| e.x < width && e.y < height));
        Self { width, height, events, theta: None }
    }

    /// Attaches per-event prism angles (radians, wrapped to `[0, 2*pi)`).
    pub fn with_theta(mut self, theta: Vec<f64>) -> Result<Self, EventError> {
        if theta.len() != self.events.len() {
            return Err(EventError::ThetaLengthMismatch {
                thetas: theta.len(),
                events: self.events.len(),
            });
        }
        self.theta = Some(theta);
        Ok(self)
    }

    pub fn width(&self) -> u16 {
        self.width
    }

    pub fn height(&self) -> u16 {
        self.height
    }

    pub fn resolution(&self) -> (u16, u16) {
        (self.width, self.height)
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn theta(&self) -> Option<&[f64]> {
        self.theta.as_deref()
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// First and last timestamp, when non-empty.
    pub fn time_range(&self) -> Option<(u64, u64)> {
        match (self.events.first(), self.events.last()) {
            (Some(a), Some(b)) => Some((a.t_us, b.t_us)),
            _ => None,
        }
    }

    /// Events with `t0 <= t < t1`, preserving order and angles.
    pub fn slice(&self, t0_us: u64, t1_us: u64) -> EventStream {
        let start = self.events.partition_point(|e| e.t_us < t0_us);
        let end = self.events.partition_point(|e| e.t_us < t1_us);
        EventStream {
            width: self.width,
            height: self.height,
            events: self.events[start..end].to_vec(),
            theta: self.theta.as_ref().map(|t| t[start..end].to_vec()),
        }
    }

    /// Events whose prism angle lies in the wrap-aware half-open interval
    /// `[theta0, theta1)`.
    pub fn slice_by_theta(&self, theta0: f64, theta1: f64) -> Result<EventStream, EventError> {
        let theta = self.theta.as_ref().ok_or(EventError::MissingTheta)?;
        let a = theta0.rem_euclid(TAU);
        let b = theta1.rem_euclid(TAU);
        let keep = |t: f64| {
            let t = t.rem_euclid(TAU);
            if a <= b {
                t >= a && t < b
            } else {
                t >= a || t < b
            }
        };
        let mut events = Vec::new();
        let mut kept_theta = Vec::new();
        for (e, &t) in self.events.iter().zip(theta) {
            if keep(t) {
                events.push(*e);
                kept_theta.push(t);
            }
        }
        Ok(EventStream {
            width: self.width,
            height: self.height,
            events,
            theta: Some(kept_theta),
        })
    }
}

/// A stream of warped (sub-pixel) events; the output of compensation.
#[derive(Debug, Clone, PartialEq)]
pub struct WarpedStream {
    width: u16,
    height: u16,
    events: Vec<WarpedEvent>,
}

impl WarpedStream {
    pub fn new(width: u16, height: u16, events: Vec<WarpedEvent>) -> Self {
        Self { width, height, events }
    }

    pub fn width(&self) -> u16 {
        self.width
    }

    pub fn height(&self) -> u16 {
        self.height
    }

    pub fn events(&self) -> &[WarpedEvent] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Quantizes to the integer pixel grid. Events rounding outside the
    /// sensor are dropped; returns the drop count.
    pub fn to_event_stream(&self) -> (EventStream, u64) {
        let mut dropped = 0u64;
        let mut events = Vec::with_capacity(self.events.len());
        for e in &self.events {
            let x = e.x.round();
            let y = e.y.round();
            if x >= 0.0 && x < self.width as f64 && y >= 0.0 && y < self.height as f64 {
                events.push(Event {
                    t_us: e.t_us,
                    x: x as u16,
                    y: y as u16,
                    polarity: e.polarity,
                });
            } else {
                dropped += 1;
            }
        }
        events.sort_unstable_by_key(Event::sort_key);
        (EventStream::from_sorted(self.width, self.height, events), dropped)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(t: u64, x: u16, y: u16, p: i8) -> Event {
        Event { t_us: t, x, y, polarity: Polarity::from_i8(p).unwrap() }
    }

    #[test]
    fn from_unsorted_sorts_and_counts() {
        let (s, warnings) =
            EventStream::from_unsorted(10, 10, vec![ev(5, 1, 1, 1), ev(3, 2, 2, -1)]).unwrap();
        assert_eq!(warnings, 1);
        assert_eq!(s.events()[0].t_us, 3);
    }

    #[test]
    fn from_unsorted_rejects_out_of_bounds() {
        let err = EventStream::from_unsorted(10, 10, vec![ev(0, 10, 0, 1)]).unwrap_err();
        assert!(matches!(err, EventError::ResolutionMismatch(_)));
    }

    #[test]
    fn tie_break_is_y_x_polarity() {
        let (s, _) = EventStream::from_unsorted(
            10,
            10,
            vec![ev(1, 3, 2, 1), ev(1, 2, 2, 1), ev(1, 2, 1, 1), ev(1, 2, 2, -1)],
        )
        .unwrap();
        let keys: Vec<_> = s.events().iter().map(|e| (e.y, e.x, e.polarity.as_i8())).collect();
        assert_eq!(keys, vec![(1, 2, 1), (2, 2, -1), (2, 2, 1), (2, 3, 1)]);
    }

    #[test]
    fn full_range_slice_is_identity() {
        let (s, _) = EventStream::from_unsorted(
            10,
            10,
            vec![ev(1, 0, 0, 1), ev(2, 1, 1, -1), ev(3, 2, 2, 1)],
        )
        .unwrap();
        let sliced = s.slice(0, u64::MAX);
        assert_eq!(sliced.events(), s.events());
    }

    #[test]
    fn slices_partition_a_period() {
        let events: Vec<_> = (0..100u64).map(|t| ev(t, (t % 10) as u16, 0, 1)).collect();
        let (s, _) = EventStream::from_unsorted(10, 10, events).unwrap();
        let total: usize = [(0, 25), (25, 50), (50, 75), (75, 100)]
            .iter()
            .map(|&(a, b)| s.slice(a, b).len())
            .sum();
        assert_eq!(total, s.len());
    }

    #[test]
    fn slice_by_theta_is_wrap_aware() {
        let events: Vec<_> = (0..8u64).map(|t| ev(t, 0, 0, 1)).collect();
        let theta: Vec<f64> = (0..8).map(|i| i as f64 * TAU / 8.0).collect();
        let (s, _) = EventStream::from_unsorted(4, 4, events).unwrap();
        let s = s.with_theta(theta).unwrap();
        // Interval wrapping through zero: [7/8 tau, 1/8 tau) holds the
        // last angle and the zero angle.
        let w = s.slice_by_theta(7.0 * TAU / 8.0, TAU / 8.0).unwrap();
        let kept: Vec<u64> = w.events().iter().map(|e| e.t_us).collect();
        assert_eq!(kept, vec![0, 7]);
        // Non-wrapping quarter.
        let q = s.slice_by_theta(0.0, TAU / 4.0).unwrap();
        assert_eq!(q.len(), 2);
    }

    #[test]
    fn slice_by_theta_requires_theta() {
        let (s, _) = EventStream::from_unsorted(4, 4, vec![ev(0, 0, 0, 1)]).unwrap();
        assert!(matches!(s.slice_by_theta(0.0, 1.0), Err(EventError::MissingTheta)));
    }

    #[test]
    fn warped_round_trip_drops_out_of_bounds() {
        let w = WarpedStream::new(
            4,
            4,
            vec![
                WarpedEvent { t_us: 0, x: 1.4, y: 2.6, polarity: Polarity::Pos },
                WarpedEvent { t_us: 1, x: -0.6, y: 0.0, polarity: Polarity::Neg },
                WarpedEvent { t_us: 2, x: 3.4, y: 3.4, polarity: Polarity::Pos },
            ],
        );
        let (s, dropped) = w.to_event_stream();
        assert_eq!(dropped, 1);
        assert_eq!(s.events()[0], ev(0, 1, 3, 1));
        assert_eq!(s.events()[1], ev(2, 3, 3, 1));
    }
}
