//! Synchronization of event timestamps with the prism's rotary-encoder log.

use super::{EventError, EventStream};
use crate::par;
use std::f64::consts::{PI, TAU};

/// A timestamped absolute prism angle from the rotary encoder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EncoderSample {
    pub t_us: u64,
    /// Wrapped angle in `[0, 2*pi)`.
    pub theta: f64,
}

/// Attaches a prism angle to every event by linear interpolation on the
/// unwrapped encoder angle, re-wrapped to `[0, 2*pi)`.
///
/// The encoder must bracket the stream's time range; interpolation is exact
/// at the sample timestamps and monotone between them.
pub fn sync_theta(
    stream: &EventStream,
    samples: &[EncoderSample],
) -> Result<EventStream, EventError> {
    if samples.len() < 2 {
        return Err(EventError::Encoder("need at least two encoder samples".to_string()));
    }
    for pair in samples.windows(2) {
        if pair[1].t_us <= pair[0].t_us {
            return Err(EventError::Encoder(
                "encoder timestamps must be strictly increasing".to_string(),
            ));
        }
    }
    if stream.is_empty() {
        return stream.clone().with_theta(Vec::new());
    }
    let (first, last) = stream.time_range().expect("non-empty");
    if first < samples[0].t_us {
        return Err(EventError::OutOfRange { index: 0 });
    }
    if last > samples[samples.len() - 1].t_us {
        let index = stream.events().partition_point(|e| e.t_us <= samples[samples.len() - 1].t_us);
        return Err(EventError::OutOfRange { index });
    }

    // Unwrap: accumulate the minimal signed wrapped difference per step.
    let mut unwrapped = Vec::with_capacity(samples.len());
    unwrapped.push(samples[0].theta);
    for pair in samples.windows(2) {
        let mut d = (pair[1].theta - pair[0].theta) % TAU;
        if d > PI {
            d -= TAU;
        } else if d < -PI {
            d += TAU;
        }
        let prev = *unwrapped.last().expect("seeded");
        unwrapped.push(prev + d);
    }

    let events = stream.events();
    let theta = par::map_indices(events.len(), |i| {
        let t = events[i].t_us;
        // Right bracket index; t is guaranteed within coverage.
        let hi = samples.partition_point(|s| s.t_us < t).max(1).min(samples.len() - 1);
        let lo = hi - 1;
        let span = (samples[hi].t_us - samples[lo].t_us) as f64;
        let frac = (t - samples[lo].t_us) as f64 / span;
        let value = unwrapped[lo] + frac * (unwrapped[hi] - unwrapped[lo]);
        value.rem_euclid(TAU)
    });
    stream.clone().with_theta(theta)
}
