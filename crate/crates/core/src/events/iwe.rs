//! Image of warped events: a per-pixel accumulation grid.

use super::{EventStream, WarpedStream};
use crate::par;

/// How sub-pixel positions deposit mass into the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Binning {
    /// Each event adds 1 to its nearest pixel.
    Nearest,
    /// Each event splits unit mass over its four neighbors.
    Bilinear,
}

impl std::str::FromStr for Binning {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "nearest" => Ok(Binning::Nearest),
            "bilinear" => Ok(Binning::Bilinear),
            other => Err(format!("unknown binning `{other}`")),
        }
    }
}

/// Accumulation grid of warped event counts. Both polarities are
/// amalgamated; entries are non-negative and the total mass never exceeds
/// the number of accumulated events.
#[derive(Debug, Clone, PartialEq)]
pub struct Iwe {
    width: u16,
    height: u16,
    counts: Vec<f64>,
}

impl Iwe {
    pub fn zeros(width: u16, height: u16) -> Self {
        Self { width, height, counts: vec![0.0; width as usize * height as usize] }
    }

    /// Wraps an existing count grid; entries must be non-negative.
    pub fn from_counts(width: u16, height: u16, counts: Vec<f64>) -> Self {
        assert_eq!(counts.len(), width as usize * height as usize);
        assert!(counts.iter().all(|&c| c >= 0.0));
        Self { width, height, counts }
    }

    pub fn width(&self) -> u16 {
        self.width
    }

    pub fn height(&self) -> u16 {
        self.height
    }

    pub fn counts(&self) -> &[f64] {
        &self.counts
    }

    pub fn get(&self, x: u16, y: u16) -> f64 {
        self.counts[y as usize * self.width as usize + x as usize]
    }

    pub fn total_mass(&self) -> f64 {
        self.counts.iter().sum()
    }

    pub fn max_count(&self) -> f64 {
        self.counts.iter().cloned().fold(0.0, f64::max)
    }

    /// Median of the strictly positive entries, if any.
    pub fn median_positive(&self) -> Option<f64> {
        let mut positive: Vec<f64> = self.counts.iter().cloned().filter(|&c| c > 0.0).collect();
        if positive.is_empty() {
            return None;
        }
        positive.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
        Some(positive[positive.len() / 2])
    }

    fn merge(&mut self, other: &Iwe) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
    }
}

/// Deposits one event; returns the mass that landed in bounds.
#[inline]
fn deposit(counts: &mut [f64], width: usize, height: usize, x: f64, y: f64, binning: Binning) -> f64 {
    match binning {
        Binning::Nearest => {
            let xr = x.round();
            let yr = y.round();
            if xr >= 0.0 && xr < width as f64 && yr >= 0.0 && yr < height as f64 {
                counts[yr as usize * width + xr as usize] += 1.0;
                1.0
            } else {
                0.0
            }
        }
        Binning::Bilinear => {
            let x0 = x.floor();
            let y0 = y.floor();
            let fx = x - x0;
            let fy = y - y0;
            let mut kept = 0.0;
            let mut add = |xi: f64, yi: f64, w: f64| {
                if w > 0.0 && xi >= 0.0 && xi < width as f64 && yi >= 0.0 && yi < height as f64 {
                    counts[yi as usize * width + xi as usize] += w;
                    kept += w;
                }
            };
            add(x0, y0, (1.0 - fx) * (1.0 - fy));
            add(x0 + 1.0, y0, fx * (1.0 - fy));
            add(x0, y0 + 1.0, (1.0 - fx) * fy);
            add(x0 + 1.0, y0 + 1.0, fx * fy);
            kept
        }
    }
}

fn accumulate_positions<F>(
    width: u16,
    height: u16,
    len: usize,
    pos: F,
    binning: Binning,
    sequential: bool,
) -> (Iwe, f64)
where
    F: Fn(usize) -> (f64, f64) + Sync + Send,
{
    let w = width as usize;
    let h = height as usize;
    let worker = |range: std::ops::Range<usize>| {
        let mut iwe = Iwe::zeros(width, height);
        let mut kept = 0.0;
        for i in range {
            let (x, y) = pos(i);
            kept += deposit(&mut iwe.counts, w, h, x, y, binning);
        }
        (iwe, kept)
    };
    let partials = if sequential {
        par::map_ranges_seq(len, par::CHUNK, worker)
    } else {
        par::map_ranges(len, par::CHUNK, worker)
    };
    let mut total = Iwe::zeros(width, height);
    let mut kept = 0.0;
    for (partial, partial_kept) in &partials {
        total.merge(partial);
        kept += partial_kept;
    }
    (total, len as f64 - kept)
}

/// Accumulates an integer-pixel stream; the second value is the dropped
/// mass (always zero here since coordinates are in bounds by construction).
pub fn accumulate_iwe(stream: &EventStream, binning: Binning) -> (Iwe, f64) {
    let events = stream.events();
    accumulate_positions(
        stream.width(),
        stream.height(),
        events.len(),
        |i| (events[i].x as f64, events[i].y as f64),
        binning,
        false,
    )
}

/// Accumulates a warped (sub-pixel) stream; out-of-bounds mass is dropped,
/// not clamped, and returned as the second value.
pub fn accumulate_iwe_warped(stream: &WarpedStream, binning: Binning) -> (Iwe, f64) {
    let events = stream.events();
    accumulate_positions(
        stream.width(),
        stream.height(),
        events.len(),
        |i| (events[i].x, events[i].y),
        binning,
        false,
    )
}

/// Sequential fallback of [`accumulate_iwe_warped`]; same chunking, same
/// results.
pub fn accumulate_iwe_warped_seq(stream: &WarpedStream, binning: Binning) -> (Iwe, f64) {
    let events = stream.events();
    accumulate_positions(
        stream.width(),
        stream.height(),
        events.len(),
        |i| (events[i].x, events[i].y),
        binning,
        true,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::events::{Event, Polarity, WarpedEvent};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn repeated_pixel_accumulates_nearest() {
        let events =
            vec![Event { t_us: 0, x: 3, y: 4, polarity: Polarity::Pos }; 5];
        let (stream, _) = EventStream::from_unsorted(8, 8, events).unwrap();
        let (iwe, dropped) = accumulate_iwe(&stream, Binning::Nearest);
        assert_eq!(iwe.get(3, 4), 5.0);
        assert_eq!(dropped, 0.0);
        assert_eq!(iwe.total_mass(), 5.0);
    }

    #[test]
    fn bilinear_splits_half_pixel() {
        let w = WarpedStream::new(
            8,
            8,
            vec![WarpedEvent { t_us: 0, x: 3.5, y: 4.0, polarity: Polarity::Pos }],
        );
        let (iwe, dropped) = accumulate_iwe_warped(&w, Binning::Bilinear);
        assert_relative_eq!(iwe.get(3, 4), 0.5, epsilon = 1e-12);
        assert_relative_eq!(iwe.get(4, 4), 0.5, epsilon = 1e-12);
        assert_eq!(dropped, 0.0);
    }

    #[test]
    fn integer_positions_make_bilinear_equal_nearest() {
        let events: Vec<_> = (0..20)
            .map(|i| Event { t_us: i, x: (i % 5) as u16, y: (i % 3) as u16, polarity: Polarity::Pos })
            .collect();
        let (stream, _) = EventStream::from_unsorted(8, 8, events).unwrap();
        let (a, _) = accumulate_iwe(&stream, Binning::Nearest);
        let (b, _) = accumulate_iwe(&stream, Binning::Bilinear);
        for (x, y) in (0..8u16).flat_map(|x| (0..8u16).map(move |y| (x, y))) {
            assert_relative_eq!(a.get(x, y), b.get(x, y), epsilon = 1e-12);
        }
    }

    #[test]
    fn parallel_and_sequential_accumulation_agree_exactly() {
        let events: Vec<_> = (0..200_000u64)
            .map(|i| WarpedEvent {
                t_us: i,
                x: (i % 317) as f64 * 0.37,
                y: (i % 211) as f64 * 0.53,
                polarity: Polarity::Pos,
            })
            .collect();
        let w = WarpedStream::new(128, 128, events);
        let (a, da) = accumulate_iwe_warped(&w, Binning::Bilinear);
        let (b, db) = accumulate_iwe_warped_seq(&w, Binning::Bilinear);
        assert_eq!(a.counts(), b.counts());
        assert_eq!(da, db);
    }

    #[test]
    fn median_positive_ignores_zeros() {
        let mut iwe = Iwe::zeros(4, 1);
        iwe.counts[0] = 2.0;
        iwe.counts[2] = 8.0;
        iwe.counts[3] = 4.0;
        assert_eq!(iwe.median_positive(), Some(4.0));
        assert_eq!(Iwe::zeros(4, 1).median_positive(), None);
    }

    proptest! {
        #[test]
        fn prop_mass_conservation(
            positions in proptest::collection::vec((-2.0f64..10.0, -2.0f64..10.0), 1..200),
            bilinear in any::<bool>(),
        ) {
            let events: Vec<_> = positions
                .iter()
                .enumerate()
                .map(|(i, &(x, y))| WarpedEvent { t_us: i as u64, x, y, polarity: Polarity::Pos })
                .collect();
            let n = events.len() as f64;
            let w = WarpedStream::new(8, 8, events);
            let binning = if bilinear { Binning::Bilinear } else { Binning::Nearest };
            let (iwe, dropped) = accumulate_iwe_warped(&w, binning);
            prop_assert!((iwe.total_mass() + dropped - n).abs() < 1e-9);
            prop_assert!(iwe.total_mass() <= n + 1e-9);
            prop_assert!(iwe.counts().iter().all(|&c| c >= 0.0));
            if binning == Binning::Nearest {
                prop_assert!(iwe.counts().iter().all(|&c| c.fract() == 0.0));
            }
        }
    }
}
