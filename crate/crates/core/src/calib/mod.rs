//! Prism-motion compensation: the per-event warp, the image-sharpness cost,
//! and coarse-to-fine calibration of the circular displacement model.

mod search;

pub use search::{calibrate, golden_section_minimize, CostReport, CostSample, SearchConfig};

use crate::events::{
    accumulate_iwe_warped, accumulate_iwe_warped_seq, Binning, Event, EventStream, Iwe,
    WarpedEvent, WarpedStream,
};
use crate::geometry::GroundTruthEdges;
use crate::par;
use std::f64::consts::TAU;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CalibError {
    #[error("stream carries no prism angles")]
    MissingTheta,
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("refinement did not converge within {iterations} iterations")]
    NonConvergence { iterations: u32 },
    #[error("no ground-truth edges")]
    NoEdges,
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
}

/// Calibrated circular-displacement model: the apparent image of a fixed
/// scene ray moves on a circle of radius `r` pixels at phase
/// `theta + theta_b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompensationParams {
    /// Displacement radius in pixels.
    pub r: f64,
    /// Phase bias between the encoder zero and the displacement circle,
    /// in `[0, 2*pi)`.
    pub theta_b: f64,
    /// Optical center in pixels; only used by the radial correction.
    pub center: (f64, f64),
    /// Optional radial correction `r(rho) = r * (1 + k1 * rho^2)` with
    /// `rho` the distance from `center` in pixels. Zero disables it.
    pub k1: f64,
}

impl CompensationParams {
    pub fn new(r: f64, theta_b: f64, center: (f64, f64)) -> Result<Self, CalibError> {
        if !(r >= 0.0) {
            return Err(CalibError::InvalidParameter("radius must be >= 0"));
        }
        if !theta_b.is_finite() {
            return Err(CalibError::InvalidParameter("phase bias must be finite"));
        }
        Ok(Self { r, theta_b: theta_b.rem_euclid(TAU), center, k1: 0.0 })
    }

    pub fn with_k1(mut self, k1: f64) -> Self {
        self.k1 = k1;
        self
    }

    /// Displacement radius at pixel `p`.
    pub fn radius_at(&self, p: (f64, f64)) -> f64 {
        if self.k1 == 0.0 {
            self.r
        } else {
            let rho2 = (p.0 - self.center.0).powi(2) + (p.1 - self.center.1).powi(2);
            self.r * (1.0 + self.k1 * rho2)
        }
    }

    /// Absolute circular displacement of the image at prism angle `theta`.
    pub fn displacement(&self, p: (f64, f64), theta: f64) -> (f64, f64) {
        let radius = self.radius_at(p);
        let (sin, cos) = (theta + self.theta_b).sin_cos();
        (radius * cos, radius * sin)
    }

    /// Displacement relative to the reference phase `theta_0 = 0`; this is
    /// what the synthesis path adds and the warp removes.
    pub fn relative_displacement(&self, p: (f64, f64), theta: f64) -> (f64, f64) {
        let radius = self.radius_at(p);
        let (sin, cos) = (theta + self.theta_b).sin_cos();
        let (sin0, cos0) = self.theta_b.sin_cos();
        (radius * (cos - cos0), radius * (sin - sin0))
    }
}

/// Displacement of the apparent image of a fixed scene ray when the prism
/// sits at encoder angle `theta`; a circle of radius `r` at phase
/// `theta + theta_b`. Its mean over a full revolution is zero.
pub fn pixel_displacement(
    p: (f64, f64),
    theta: f64,
    params: &CompensationParams,
) -> (f64, f64) {
    params.displacement(p, theta)
}

/// Warps one event back to the reference phase, subtracting the circular
/// displacement accrued between `theta` and phase zero. Timestamp and
/// polarity are unchanged.
pub fn warp_event(e: &Event, theta: f64, params: &CompensationParams) -> WarpedEvent {
    let p = (e.x as f64, e.y as f64);
    let (dx, dy) = params.relative_displacement(p, theta);
    WarpedEvent { t_us: e.t_us, x: p.0 - dx, y: p.1 - dy, polarity: e.polarity }
}

/// Element-wise [`warp_event`] over a synchronized stream; order preserved,
/// angles consumed.
pub fn compensate_stream(
    stream: &EventStream,
    params: &CompensationParams,
) -> Result<WarpedStream, CalibError> {
    let theta = stream.theta().ok_or(CalibError::MissingTheta)?;
    let events = stream.events();
    let warped = par::map_indices(events.len(), |i| warp_event(&events[i], theta[i], params));
    Ok(WarpedStream::new(stream.width(), stream.height(), warped))
}

/// Sequential fallback of [`compensate_stream`]; same results.
pub fn compensate_stream_seq(
    stream: &EventStream,
    params: &CompensationParams,
) -> Result<WarpedStream, CalibError> {
    let theta = stream.theta().ok_or(CalibError::MissingTheta)?;
    let warped = stream
        .events()
        .iter()
        .zip(theta)
        .map(|(e, &t)| warp_event(e, t, params))
        .collect();
    Ok(WarpedStream::new(stream.width(), stream.height(), warped))
}

/// Sharpness cost of an accumulation image:
/// `J = sum over pixels with h > 0 of 1 / (1 + exp(h / eta))`.
///
/// Pixels with low counts are weighted heavily, so concentrating a fixed
/// event mass into fewer pixels strictly lowers the cost.
pub fn sharpness_cost(iwe: &Iwe, eta: f64) -> f64 {
    assert!(eta > 0.0, "cost scale must be positive");
    iwe.counts()
        .iter()
        .filter(|&&h| h > 0.0)
        .map(|&h| 1.0 / (1.0 + (h / eta).exp()))
        .sum()
}

/// Warps the stream with `params`, accumulates, and evaluates the
/// sharpness cost.
pub fn cost_of_params(
    stream: &EventStream,
    params: &CompensationParams,
    eta: f64,
    binning: Binning,
) -> Result<f64, CalibError> {
    let warped = compensate_stream(stream, params)?;
    let (iwe, _) = accumulate_iwe_warped(&warped, binning);
    Ok(sharpness_cost(&iwe, eta))
}

/// Sequential fallback of [`cost_of_params`]; same results.
pub fn cost_of_params_seq(
    stream: &EventStream,
    params: &CompensationParams,
    eta: f64,
    binning: Binning,
) -> Result<f64, CalibError> {
    let warped = compensate_stream_seq(stream, params)?;
    let (iwe, _) = accumulate_iwe_warped_seq(&warped, binning);
    Ok(sharpness_cost(&iwe, eta))
}

/// Root-mean-square perpendicular distance of compensated events to their
/// nearest ground-truth edge: the spread of the residual event scatter
/// around the edges.
pub fn compensation_error(
    stream: &WarpedStream,
    edges: &GroundTruthEdges,
) -> Result<f64, CalibError> {
    if edges.is_empty() {
        return Err(CalibError::NoEdges);
    }
    if stream.is_empty() {
        return Ok(0.0);
    }
    let events = stream.events();
    let partial = par::map_ranges(events.len(), par::CHUNK, |range| {
        range
            .map(|i| {
                let d = edges.distance_to_nearest(events[i].x, events[i].y);
                d * d
            })
            .sum::<f64>()
    });
    let sum: f64 = partial.iter().sum();
    Ok((sum / events.len() as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::events::Polarity;
    use crate::geometry::EdgeSegment;
    use approx::assert_relative_eq;

    fn params(r: f64, theta_b_deg: f64) -> CompensationParams {
        CompensationParams::new(r, theta_b_deg.to_radians(), (50.0, 50.0)).unwrap()
    }

    fn ev(t: u64, x: u16, y: u16) -> Event {
        Event { t_us: t, x, y, polarity: Polarity::Pos }
    }

    #[test]
    fn displacement_at_phase_zero_points_along_x() {
        let p = params(10.0, 30.0);
        let (dx, dy) = pixel_displacement((5.0, 5.0), -p.theta_b, &p);
        assert_relative_eq!(dx, 10.0, epsilon = 1e-12);
        assert_relative_eq!(dy, 0.0, epsilon = 1e-9);
        let (dx, dy) = pixel_displacement((5.0, 5.0), -p.theta_b + 90f64.to_radians(), &p);
        assert_relative_eq!(dx, 0.0, epsilon = 1e-9);
        assert_relative_eq!(dy, 10.0, epsilon = 1e-12);
    }

    #[test]
    fn displacement_mean_over_period_vanishes() {
        let p = params(10.0, 77.0);
        let n = 4096;
        let (mut sx, mut sy) = (0.0, 0.0);
        for i in 0..n {
            let (dx, dy) = pixel_displacement((0.0, 0.0), i as f64 * TAU / n as f64, &p);
            sx += dx;
            sy += dy;
        }
        assert!(sx.abs() / n as f64 <= 1e-9);
        assert!(sy.abs() / n as f64 <= 1e-9);
    }

    #[test]
    fn warp_at_reference_phase_is_identity() {
        let p = params(25.0, 40.0);
        let w = warp_event(&ev(7, 30, 40), 0.0, &p);
        assert_relative_eq!(w.x, 30.0, epsilon = 1e-12);
        assert_relative_eq!(w.y, 40.0, epsilon = 1e-12);
        assert_eq!(w.t_us, 7);
    }

    #[test]
    fn warp_with_zero_radius_is_identity() {
        let p = params(0.0, 123.0);
        for theta in [0.0, 1.0, 2.0, 5.0] {
            let w = warp_event(&ev(0, 10, 20), theta, &p);
            assert_eq!((w.x, w.y), (10.0, 20.0));
        }
    }

    #[test]
    fn warp_recovers_displaced_scene_point() {
        // Forward-displace a fixed point with the true parameters, then warp
        // back. Angles chosen so the displaced positions are integral.
        let truth = params(10.0, 0.0);
        let scene = (100.0, 50.0);
        for theta in [0.0, 90f64.to_radians(), std::f64::consts::PI] {
            let (dx, dy) = truth.relative_displacement(scene, theta);
            let e = ev(0, (scene.0 + dx).round() as u16, (scene.1 + dy).round() as u16);
            assert_relative_eq!((e.x as f64) - (scene.0 + dx), 0.0, epsilon = 1e-12);
            let w = warp_event(&e, theta, &truth);
            assert_relative_eq!(w.x, scene.0, epsilon = 1e-6);
            assert_relative_eq!(w.y, scene.1, epsilon = 1e-6);
        }
    }

    #[test]
    fn warp_is_invertible() {
        let p = params(13.7, 211.0);
        for (theta, x, y) in [(0.7, 30u16, 40u16), (2.9, 90, 10), (5.5, 55, 77)] {
            let w = warp_event(&ev(0, x, y), theta, &p);
            let (dx, dy) = p.relative_displacement((x as f64, y as f64), theta);
            assert_relative_eq!(w.x + dx, x as f64, epsilon = 1e-9);
            assert_relative_eq!(w.y + dy, y as f64, epsilon = 1e-9);
        }
    }

    #[test]
    fn compensate_preserves_order_and_consumes_theta() {
        let events = vec![ev(1, 10, 10), ev(2, 20, 20), ev(3, 30, 30)];
        let (s, _) = EventStream::from_unsorted(100, 100, events).unwrap();
        let s = s.with_theta(vec![0.1, 0.2, 0.3]).unwrap();
        let w = compensate_stream(&s, &params(5.0, 0.0)).unwrap();
        let ts: Vec<u64> = w.events().iter().map(|e| e.t_us).collect();
        assert_eq!(ts, vec![1, 2, 3]);
    }

    #[test]
    fn compensate_requires_theta() {
        let (s, _) = EventStream::from_unsorted(100, 100, vec![ev(1, 10, 10)]).unwrap();
        assert!(matches!(compensate_stream(&s, &params(5.0, 0.0)), Err(CalibError::MissingTheta)));
    }

    #[test]
    fn parallel_and_sequential_compensation_agree_exactly() {
        let events: Vec<_> = (0..10_000).map(|i| ev(i, (i % 90) as u16, (i % 70) as u16)).collect();
        let theta: Vec<f64> = (0..10_000).map(|i| (i as f64 * 0.01) % TAU).collect();
        let (s, _) = EventStream::from_unsorted(100, 100, events).unwrap();
        let s = s.with_theta(theta).unwrap();
        let p = params(8.0, 33.0);
        let a = compensate_stream(&s, &p).unwrap();
        let b = compensate_stream_seq(&s, &p).unwrap();
        assert_eq!(a.events(), b.events());
    }

    #[test]
    fn cost_of_all_zero_image_is_zero() {
        assert_eq!(sharpness_cost(&Iwe::zeros(16, 16), 1.0), 0.0);
    }

    #[test]
    fn cost_of_single_pixel_at_eta() {
        // 1 / (1 + e) for a lone pixel with h = eta.
        let w = WarpedStream::new(
            4,
            4,
            vec![WarpedEvent { t_us: 0, x: 1.0, y: 1.0, polarity: Polarity::Pos }],
        );
        let (iwe, _) = accumulate_iwe_warped(&w, Binning::Nearest);
        let j = sharpness_cost(&iwe, 1.0);
        assert_relative_eq!(j, 0.2689414213699951, epsilon = 1e-15);
    }

    #[test]
    fn concentrating_mass_lowers_cost() {
        let spread = |positions: Vec<(f64, f64)>| {
            let events = positions
                .into_iter()
                .map(|(x, y)| WarpedEvent { t_us: 0, x, y, polarity: Polarity::Pos })
                .collect();
            let (iwe, _) = accumulate_iwe_warped(&WarpedStream::new(8, 8, events), Binning::Nearest);
            sharpness_cost(&iwe, 1.0)
        };
        // Same four events, concentrated on one pixel vs four pixels.
        let tight = spread(vec![(2.0, 2.0); 4]);
        let loose = spread(vec![(1.0, 1.0), (2.0, 1.0), (1.0, 2.0), (2.0, 2.0)]);
        assert!(tight < loose);
    }

    #[test]
    fn compensation_error_examples() {
        let edges = GroundTruthEdges {
            segments: vec![EdgeSegment { x1: 0.0, y1: 5.0, x2: 100.0, y2: 5.0 }],
            circles: vec![],
        };
        let on_edge = WarpedStream::new(
            100,
            100,
            (0..10)
                .map(|i| WarpedEvent { t_us: i, x: i as f64 * 3.0, y: 5.0, polarity: Polarity::Pos })
                .collect(),
        );
        assert_relative_eq!(compensation_error(&on_edge, &edges).unwrap(), 0.0);

        let alternating = WarpedStream::new(
            100,
            100,
            (0..10)
                .map(|i| WarpedEvent {
                    t_us: i,
                    x: i as f64 * 3.0,
                    y: if i % 2 == 0 { 6.0 } else { 4.0 },
                    polarity: Polarity::Pos,
                })
                .collect(),
        );
        assert_relative_eq!(compensation_error(&alternating, &edges).unwrap(), 1.0);

        assert!(matches!(
            compensation_error(&on_edge, &GroundTruthEdges::default()),
            Err(CalibError::NoEdges)
        ));
    }
}
