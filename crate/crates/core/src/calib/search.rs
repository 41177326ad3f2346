//! Coarse-to-fine search for the displacement radius and phase bias.
//!
//! A coarse grid over `(r, theta_b)` is evaluated first; the best cell is
//! then refined by alternating golden-section line searches until the
//! parameter change drops below the configured tolerances. Grid cells are
//! independent and evaluated in parallel; ties are broken toward the
//! smallest radius, then the smallest phase, so results do not depend on
//! the worker count.

use super::{CalibError, CompensationParams};
use crate::events::{Binning, EventStream, Iwe};
use crate::par;
use std::f64::consts::{PI, TAU};

/// Coarse grid ranges and refinement tolerances.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig {
    pub r_min: f64,
    pub r_max: f64,
    pub r_step: f64,
    /// Coarse phase step; the grid spans `[0, 2*pi)`.
    pub theta_step: f64,
    /// Calibration window length in seconds, taken from the stream start.
    pub window_s: f64,
    /// Refinement stops when the radius changes by less than this (pixels).
    pub refine_tol_r: f64,
    /// ... and the phase by less than this (radians).
    pub refine_tol_theta: f64,
    pub max_refine_iters: u32,
    /// Cost scale; defaults to the median positive count of the
    /// uncompensated window image, which makes the cost scale-free across
    /// event rates.
    pub eta: Option<f64>,
    pub binning: Binning,
    pub min_events: usize,
}

impl SearchConfig {
    /// Defaults around a hardware-derived initial radius: radius within
    /// +/-50% at 1 px steps, phase over the full circle at 5 degree steps.
    pub fn from_initial_radius(r0: f64) -> Self {
        Self {
            r_min: 0.5 * r0,
            r_max: 1.5 * r0,
            r_step: 1.0,
            theta_step: 5f64.to_radians(),
            window_s: 2.0,
            refine_tol_r: 0.05,
            refine_tol_theta: 0.1f64.to_radians(),
            max_refine_iters: 100,
            eta: None,
            binning: Binning::Bilinear,
            min_events: 500,
        }
    }

    fn validate(&self) -> Result<(), CalibError> {
        if !(self.r_min >= 0.0 && self.r_max >= self.r_min) {
            return Err(CalibError::InvalidParameter("empty radius range"));
        }
        if !(self.r_step > 0.0 && self.theta_step > 0.0) {
            return Err(CalibError::InvalidParameter("grid steps must be positive"));
        }
        if !(self.window_s > 0.0) {
            return Err(CalibError::InvalidParameter("window length must be positive"));
        }
        if !(self.refine_tol_r > 0.0 && self.refine_tol_theta > 0.0) {
            return Err(CalibError::InvalidParameter("tolerances must be positive"));
        }
        Ok(())
    }
}

/// One evaluated point of the cost surface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostSample {
    pub r: f64,
    pub theta_b: f64,
    pub cost: f64,
}

/// The search outcome: best cost and the sampled surface.
#[derive(Debug, Clone, PartialEq)]
pub struct CostReport {
    pub best_cost: f64,
    pub eta: f64,
    /// Coarse grid samples in evaluation order, followed by one sample per
    /// refinement iteration.
    pub samples: Vec<CostSample>,
}

/// Golden-section search for the minimum of `f` on `[a, b]`.
///
/// Returns `(x_min, f_min)` once the bracket is narrower than `tol`.
pub fn golden_section_minimize(
    mut f: impl FnMut(f64) -> f64,
    mut a: f64,
    mut b: f64,
    tol: f64,
    max_evals: usize,
) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_895;
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let mut evals = 2;
    while (b - a).abs() > tol && evals < max_evals {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
        evals += 1;
    }
    if f1 < f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Event window in structure-of-arrays form with per-event trigonometry
/// precomputed; shared by every candidate evaluation.
struct WindowSoa {
    width: u16,
    height: u16,
    x: Vec<f64>,
    y: Vec<f64>,
    cos_t: Vec<f64>,
    sin_t: Vec<f64>,
    /// Radial scale factor `1 + k1 * rho^2` per event.
    radial: Vec<f64>,
}

impl WindowSoa {
    fn build(stream: &EventStream, init: &CompensationParams) -> Self {
        let events = stream.events();
        let theta = stream.theta().expect("checked by caller");
        let n = events.len();
        let mut soa = WindowSoa {
            width: stream.width(),
            height: stream.height(),
            x: Vec::with_capacity(n),
            y: Vec::with_capacity(n),
            cos_t: Vec::with_capacity(n),
            sin_t: Vec::with_capacity(n),
            radial: Vec::with_capacity(n),
        };
        for (e, &t) in events.iter().zip(theta) {
            let p = (e.x as f64, e.y as f64);
            let (sin, cos) = t.sin_cos();
            soa.x.push(p.0);
            soa.y.push(p.1);
            soa.cos_t.push(cos);
            soa.sin_t.push(sin);
            soa.radial.push(if init.k1 == 0.0 {
                1.0
            } else {
                1.0 + init.k1
                    * ((p.0 - init.center.0).powi(2) + (p.1 - init.center.1).powi(2))
            });
        }
        soa
    }

    fn len(&self) -> usize {
        self.x.len()
    }

    /// Warps the window with `(r, theta_b)` into a scratch grid and
    /// returns the sharpness cost. One sequential pass per call; the
    /// search parallelizes over candidates instead, so results are
    /// independent of the worker count.
    fn cost(&self, r: f64, theta_b: f64, eta: f64, binning: Binning, scratch: &mut Vec<f64>) -> f64 {
        let (sin_b, cos_b) = theta_b.sin_cos();
        let w = self.width as usize;
        let h = self.height as usize;
        scratch.clear();
        scratch.resize(w * h, 0.0);
        let counts = scratch.as_mut_slice();
        for i in 0..self.len() {
            let radius = r * self.radial[i];
            // Relative displacement at phase theta + theta_b, referenced
            // to phase zero.
            let dx = radius * (self.cos_t[i] * cos_b - self.sin_t[i] * sin_b - cos_b);
            let dy = radius * (self.sin_t[i] * cos_b + self.cos_t[i] * sin_b - sin_b);
            let x = self.x[i] - dx;
            let y = self.y[i] - dy;
            match binning {
                Binning::Nearest => {
                    let xr = x.round();
                    let yr = y.round();
                    if xr >= 0.0 && xr < w as f64 && yr >= 0.0 && yr < h as f64 {
                        counts[yr as usize * w + xr as usize] += 1.0;
                    }
                }
                Binning::Bilinear => {
                    let x0 = x.floor();
                    let y0 = y.floor();
                    let fx = x - x0;
                    let fy = y - y0;
                    let mut add = |xi: f64, yi: f64, weight: f64| {
                        if weight > 0.0
                            && xi >= 0.0
                            && xi < w as f64
                            && yi >= 0.0
                            && yi < h as f64
                        {
                            counts[yi as usize * w + xi as usize] += weight;
                        }
                    };
                    add(x0, y0, (1.0 - fx) * (1.0 - fy));
                    add(x0 + 1.0, y0, fx * (1.0 - fy));
                    add(x0, y0 + 1.0, (1.0 - fx) * fy);
                    add(x0 + 1.0, y0 + 1.0, fx * fy);
                }
            }
        }
        counts.iter().filter(|&&c| c > 0.0).map(|&c| 1.0 / (1.0 + (c / eta).exp())).sum()
    }

    /// Raw pixel positions are integral and in bounds, so both binnings
    /// reduce to unit deposits.
    fn uncompensated_iwe(&self) -> Iwe {
        let w = self.width as usize;
        let mut counts = vec![0.0f64; w * self.height as usize];
        for i in 0..self.len() {
            counts[self.y[i] as usize * w + self.x[i] as usize] += 1.0;
        }
        Iwe::from_counts(self.width, self.height, counts)
    }
}

/// Total signed rotation swept by the window's angle sequence, in radians.
fn swept_rotation(theta: &[f64]) -> f64 {
    let mut span = 0.0;
    for pair in theta.windows(2) {
        let mut d = (pair[1] - pair[0]) % TAU;
        if d > PI {
            d -= TAU;
        } else if d < -PI {
            d += TAU;
        }
        span += d;
    }
    span.abs()
}

/// Calibrates `(r, theta_b)` by a coarse grid search followed by
/// alternating golden-section refinement.
///
/// `init` provides the hardware-derived starting point: its radius centers
/// the default grid (see [`SearchConfig::from_initial_radius`]) and its
/// center and radial correction are carried through unchanged.
pub fn calibrate(
    stream: &EventStream,
    init: &CompensationParams,
    cfg: &SearchConfig,
) -> Result<(CompensationParams, CostReport), CalibError> {
    cfg.validate()?;
    if stream.theta().is_none() {
        return Err(CalibError::MissingTheta);
    }
    let (t0, _) = stream
        .time_range()
        .ok_or_else(|| CalibError::InsufficientData("empty stream".to_string()))?;
    let window_us = (cfg.window_s * 1e6).round() as u64;
    let window = stream.slice(t0, t0.saturating_add(window_us));
    if window.len() < cfg.min_events {
        return Err(CalibError::InsufficientData(format!(
            "{} events in window, need at least {}",
            window.len(),
            cfg.min_events
        )));
    }
    let swept = swept_rotation(window.theta().expect("checked"));
    if swept < 2.0 * TAU * 0.99 {
        return Err(CalibError::InsufficientData(format!(
            "window sweeps {:.2} rotations, need at least 2",
            swept / TAU
        )));
    }

    let soa = WindowSoa::build(&window, init);
    let eta = match cfg.eta {
        Some(eta) if eta > 0.0 => eta,
        Some(_) => return Err(CalibError::InvalidParameter("eta must be positive")),
        None => soa.uncompensated_iwe().median_positive().expect("window has events"),
    };

    // Coarse grid, radius-major so that the first minimum in evaluation
    // order realizes the (smallest r, smallest theta_b) tie-break.
    let n_r = ((cfg.r_max - cfg.r_min) / cfg.r_step).floor() as usize + 1;
    let n_t = (TAU / cfg.theta_step).ceil() as usize;
    let candidates: Vec<(f64, f64)> = (0..n_r)
        .flat_map(|i| {
            let r = cfg.r_min + i as f64 * cfg.r_step;
            (0..n_t).map(move |j| (r, j as f64 * cfg.theta_step))
        })
        .collect();
    let costs = par::map_indices_heavy(candidates.len(), |i| {
        let (r, theta_b) = candidates[i];
        soa.cost(r, theta_b, eta, cfg.binning, &mut Vec::new())
    });

    let mut samples: Vec<CostSample> = candidates
        .iter()
        .zip(&costs)
        .map(|(&(r, theta_b), &cost)| CostSample { r, theta_b, cost })
        .collect();
    let mut best = samples[0];
    for s in &samples[1..] {
        if s.cost < best.cost {
            best = *s;
        }
    }

    // Alternating line refinement around the best cell, with brackets
    // contracting toward the tolerances so the alternation settles even on
    // flat or noisy cost surfaces.
    let (mut r, mut theta_b, mut cost) = (best.r, best.theta_b, best.cost);
    let mut converged = false;
    let evals_per_line = 64;
    let mut half_r = cfg.r_step;
    let mut half_t = cfg.theta_step;
    let mut scratch = Vec::new();
    for _ in 0..cfg.max_refine_iters {
        let (new_r, _) = golden_section_minimize(
            |rr| soa.cost(rr, theta_b, eta, cfg.binning, &mut scratch),
            (r - half_r).max(0.0),
            r + half_r,
            cfg.refine_tol_r,
            evals_per_line,
        );
        let (new_t, new_cost) = golden_section_minimize(
            |tt| soa.cost(new_r, tt.rem_euclid(TAU), eta, cfg.binning, &mut scratch),
            theta_b - half_t,
            theta_b + half_t,
            cfg.refine_tol_theta,
            evals_per_line,
        );
        let dr = (new_r - r).abs();
        let dt = (new_t - theta_b).abs();
        r = new_r;
        theta_b = new_t.rem_euclid(TAU);
        cost = new_cost;
        samples.push(CostSample { r, theta_b, cost });
        if dr < cfg.refine_tol_r && dt < cfg.refine_tol_theta {
            converged = true;
            break;
        }
        half_r = (half_r * 0.6).max(cfg.refine_tol_r);
        half_t = (half_t * 0.6).max(cfg.refine_tol_theta);
    }
    if !converged {
        return Err(CalibError::NonConvergence { iterations: cfg.max_refine_iters });
    }

    let params = CompensationParams {
        r,
        theta_b,
        center: init.center,
        k1: init.k1,
    };
    Ok((params, CostReport { best_cost: cost, eta, samples }))
}
