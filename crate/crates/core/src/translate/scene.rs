//! Analytic test scenes with exact edge ground truth.
//!
//! Patterns are evaluated in continuous pattern coordinates, so frames can
//! be rendered at arbitrary sub-pixel offsets (scene motion translates the
//! whole pattern, ground truth included). Edges are anti-aliased with a
//! 1 px linear ramp.

use super::{FrameSequence, FrameSource, TranslateError};
use crate::geometry::{EdgeCircle, EdgeSegment, GroundTruthEdges};
use crate::par;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Anti-aliasing ramp width in pixels.
const AA_WIDTH: f64 = 1.0;
/// Ground-truth lines extend this far past the image boundary: structure
/// resting slightly outside still sweeps into view under the prism
/// displacement, and compensated events land back on it.
const EDGE_OVERHANG: f64 = 32.0;

#[derive(Debug, Clone, PartialEq)]
pub enum Pattern {
    /// Tiles of parallel stripes, one tile per requested orientation.
    Edges { angles_deg: Vec<f64>, spacing_px: f64 },
    Checkerboard { cell_px: f64 },
    Disk { radius_px: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Motion {
    Static,
    /// Pattern translation in px/s.
    ConstantVelocity { vx: f64, vy: f64 },
    /// Pattern offset `(ax, ay) * sin(2*pi*f*t)`.
    Sinusoid { ax: f64, ay: f64, freq_hz: f64 },
}

impl Motion {
    pub fn offset_at(&self, t_s: f64) -> (f64, f64) {
        match *self {
            Motion::Static => (0.0, 0.0),
            Motion::ConstantVelocity { vx, vy } => (vx * t_s, vy * t_s),
            Motion::Sinusoid { ax, ay, freq_hz } => {
                let s = (std::f64::consts::TAU * freq_hz * t_s).sin();
                (ax * s, ay * s)
            }
        }
    }

    pub fn max_speed(&self) -> f64 {
        match *self {
            Motion::Static => 0.0,
            Motion::ConstantVelocity { vx, vy } => (vx * vx + vy * vy).sqrt(),
            Motion::Sinusoid { ax, ay, freq_hz } => {
                std::f64::consts::TAU * freq_hz * (ax * ax + ay * ay).sqrt()
            }
        }
    }
}

/// A synthetic scene description. The seed jitters pattern phases so seed
/// suites exercise distinct geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneSpec {
    pub width: u16,
    pub height: u16,
    pub pattern: Pattern,
    pub motion: Motion,
    pub duration_s: f64,
    /// Dark and bright intensity levels in `[0, 1]`.
    pub low: f64,
    pub high: f64,
    pub seed: u64,
}

impl SceneSpec {
    pub fn validate(&self) -> Result<(), TranslateError> {
        let min_dim = self.width.min(self.height) as f64;
        if self.width < 2 || self.height < 2 {
            return Err(TranslateError::InvalidParameter("resolution must be at least 2x2"));
        }
        if !(self.duration_s > 0.0) {
            return Err(TranslateError::InvalidParameter("duration must be positive"));
        }
        if !(self.low >= 0.0 && self.high > self.low) {
            return Err(TranslateError::InvalidParameter(
                "intensity levels must satisfy 0 <= low < high",
            ));
        }
        match &self.pattern {
            Pattern::Edges { angles_deg, spacing_px } => {
                if angles_deg.is_empty() {
                    return Err(TranslateError::InvalidParameter("need at least one angle"));
                }
                if !(*spacing_px >= 4.0 && *spacing_px <= min_dim) {
                    return Err(TranslateError::InvalidParameter(
                        "stripe spacing must be in [4, min dimension]",
                    ));
                }
            }
            Pattern::Checkerboard { cell_px } => {
                if !(*cell_px >= 4.0 && *cell_px <= min_dim) {
                    return Err(TranslateError::InvalidParameter(
                        "cell size must be in [4, min dimension]",
                    ));
                }
            }
            Pattern::Disk { radius_px } => {
                if !(*radius_px >= 2.0 && *radius_px * 2.0 < min_dim) {
                    return Err(TranslateError::InvalidParameter("disk must fit the frame"));
                }
            }
        }
        Ok(())
    }

    /// Resolves seed-dependent jitter into concrete pattern parameters.
    pub fn resolve(&self) -> Result<ResolvedScene, TranslateError> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let w = self.width as f64;
        let h = self.height as f64;
        let resolved = match &self.pattern {
            Pattern::Edges { angles_deg, spacing_px } => {
                let n = angles_deg.len();
                let grid = (n as f64).sqrt().ceil() as usize;
                let rows = n.div_ceil(grid);
                let tile_w = w / grid as f64;
                let tile_h = h / rows as f64;
                let tiles = angles_deg
                    .iter()
                    .enumerate()
                    .map(|(i, &angle)| {
                        let gx = (i % grid) as f64;
                        let gy = (i / grid) as f64;
                        StripeTile {
                            x0: gx * tile_w,
                            y0: gy * tile_h,
                            x1: (gx + 1.0) * tile_w,
                            y1: (gy + 1.0) * tile_h,
                            angle: angle.to_radians(),
                            spacing: *spacing_px * rng.random_range(0.9..1.1),
                            phase: rng.random_range(0.0..*spacing_px),
                        }
                    })
                    .collect();
                ResolvedPattern::Stripes { tiles }
            }
            Pattern::Checkerboard { cell_px } => ResolvedPattern::Checkerboard {
                cell: *cell_px,
                ox: rng.random_range(0.0..*cell_px),
                oy: rng.random_range(0.0..*cell_px),
            },
            Pattern::Disk { radius_px } => {
                let margin = radius_px + 2.0;
                ResolvedPattern::Disk {
                    cx: rng.random_range(margin..(w - margin).max(margin + 1e-9)),
                    cy: rng.random_range(margin..(h - margin).max(margin + 1e-9)),
                    radius: *radius_px,
                }
            }
        };
        Ok(ResolvedScene {
            width: self.width,
            height: self.height,
            pattern: resolved,
            motion: self.motion,
            low: self.low,
            high: self.high,
            ln_low: self.low.max(1e-6).ln(),
            ln_high: self.high.ln(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StripeTile {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
    /// Stripe direction (edges run along this angle).
    pub angle: f64,
    pub spacing: f64,
    pub phase: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ResolvedPattern {
    Stripes { tiles: Vec<StripeTile> },
    Checkerboard { cell: f64, ox: f64, oy: f64 },
    Disk { cx: f64, cy: f64, radius: f64 },
}

/// A scene with all randomness resolved; renders frames and reports its
/// exact edge geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedScene {
    pub width: u16,
    pub height: u16,
    pub pattern: ResolvedPattern,
    pub motion: Motion,
    pub low: f64,
    pub high: f64,
    ln_low: f64,
    ln_high: f64,
}

/// Coverage of the alternating "high" band with boundaries at multiples of
/// `half_period`, with a linear anti-aliasing ramp.
fn band_coverage(s: f64, half_period: f64) -> f64 {
    let u = s.rem_euclid(2.0 * half_period);
    let inside_high = u < half_period;
    let d = if inside_high {
        u.min(half_period - u)
    } else {
        (u - half_period).min(2.0 * half_period - u)
    };
    let c = (d / AA_WIDTH + 0.5).min(1.0);
    if inside_high {
        c
    } else {
        1.0 - c
    }
}

fn edge_ramp(d: f64) -> f64 {
    (d / AA_WIDTH + 0.5).clamp(0.0, 1.0)
}

impl ResolvedScene {
    /// Intensity for a dark/bright mix. Blending happens in log space, so
    /// an edge ramp is symmetric in the log intensity a threshold sensor
    /// responds to and events center on the geometric edge.
    fn blend(&self, coverage: f64) -> f64 {
        if coverage <= 0.0 {
            self.low
        } else if coverage >= 1.0 {
            self.high
        } else {
            (self.ln_low + (self.ln_high - self.ln_low) * coverage).exp()
        }
    }

    /// Pattern intensity at a point in pattern coordinates. Stripe tiles
    /// cut hard at their shared borders (those lines are part of the
    /// ground truth) and continue naturally past the image boundary, so
    /// the frame edge itself is not a brightness edge.
    pub fn pattern_intensity(&self, x: f64, y: f64) -> f64 {
        match &self.pattern {
            ResolvedPattern::Stripes { tiles } => {
                let cx = x.clamp(0.0, self.width as f64 - 1e-9);
                let cy = y.clamp(0.0, self.height as f64 - 1e-9);
                for tile in tiles {
                    if cx >= tile.x0 && cx < tile.x1 && cy >= tile.y0 && cy < tile.y1 {
                        let (sin, cos) = tile.angle.sin_cos();
                        // Coordinate along the stripe normal, from the
                        // unclamped point: stripes extend past the frame.
                        let s = -(x - tile.x0) * sin + (y - tile.y0) * cos + tile.phase;
                        return self.blend(band_coverage(s, tile.spacing));
                    }
                }
                self.blend(0.5)
            }
            ResolvedPattern::Checkerboard { cell, ox, oy } => {
                let ax = band_coverage(x - ox, *cell);
                let ay = band_coverage(y - oy, *cell);
                self.blend(ax * (1.0 - ay) + ay * (1.0 - ax))
            }
            ResolvedPattern::Disk { cx, cy, radius } => {
                let d = radius - ((x - cx).powi(2) + (y - cy).powi(2)).sqrt();
                self.blend(edge_ramp(d))
            }
        }
    }

    /// Renders the frame at time `t_s` into `buf` (row-major, len `w*h`).
    pub fn render(&self, t_s: f64, buf: &mut [f64]) {
        let w = self.width as usize;
        let h = self.height as usize;
        assert_eq!(buf.len(), w * h);
        let (ox, oy) = self.motion.offset_at(t_s);
        let rows = par::map_ranges(h, 16, |range| {
            let mut band = Vec::with_capacity(range.len() * w);
            for y in range {
                for x in 0..w {
                    band.push(self.pattern_intensity(x as f64 - ox, y as f64 - oy));
                }
            }
            band
        });
        let mut offset = 0;
        for band in rows {
            buf[offset..offset + band.len()].copy_from_slice(&band);
            offset += band.len();
        }
    }

    /// Exact edge geometry in pattern coordinates (the scene at `t = 0`).
    pub fn ground_truth_edges(&self) -> GroundTruthEdges {
        let mut edges = GroundTruthEdges::default();
        let w = self.width as f64;
        let h = self.height as f64;
        match &self.pattern {
            ResolvedPattern::Stripes { tiles } => {
                for tile in tiles {
                    let rect = (
                        if tile.x0 <= 0.0 { -EDGE_OVERHANG } else { tile.x0 },
                        if tile.y0 <= 0.0 { -EDGE_OVERHANG } else { tile.y0 },
                        if tile.x1 >= w { w + EDGE_OVERHANG } else { tile.x1 },
                        if tile.y1 >= h { h + EDGE_OVERHANG } else { tile.y1 },
                    );
                    let (sin, cos) = tile.angle.sin_cos();
                    let normal = (-sin, cos);
                    let dir = (cos, sin);
                    // Stripe boundaries sit at s = k * spacing.
                    let diag = ((tile.x1 - tile.x0).powi(2) + (tile.y1 - tile.y0).powi(2)).sqrt();
                    let k_max = (diag / tile.spacing).ceil() as i64 + 1;
                    for k in -k_max..=k_max {
                        let s = k as f64 * tile.spacing - tile.phase;
                        let point = (tile.x0 + normal.0 * s, tile.y0 + normal.1 * s);
                        if let Some(seg) = clip_line_to_rect(point, dir, rect) {
                            edges.segments.push(seg);
                        }
                    }
                }
                // Tiles cut hard against each other; interior borders are
                // edges too.
                let mut xs: Vec<f64> = tiles.iter().map(|t| t.x0).collect();
                let mut ys: Vec<f64> = tiles.iter().map(|t| t.y0).collect();
                xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
                xs.dedup();
                ys.sort_by(|a, b| a.partial_cmp(b).unwrap());
                ys.dedup();
                for &x in xs.iter().filter(|&&x| x > 0.0) {
                    edges.segments.push(EdgeSegment {
                        x1: x,
                        y1: -EDGE_OVERHANG,
                        x2: x,
                        y2: h - 1.0 + EDGE_OVERHANG,
                    });
                }
                for &y in ys.iter().filter(|&&y| y > 0.0) {
                    edges.segments.push(EdgeSegment {
                        x1: -EDGE_OVERHANG,
                        y1: y,
                        x2: w - 1.0 + EDGE_OVERHANG,
                        y2: y,
                    });
                }
            }
            ResolvedPattern::Checkerboard { cell, ox, oy } => {
                let first = |offset: f64| {
                    let base = offset.rem_euclid(*cell);
                    base - (((base + EDGE_OVERHANG) / cell).floor()) * cell
                };
                let mut x = first(*ox);
                while x < w + EDGE_OVERHANG {
                    edges.segments.push(EdgeSegment {
                        x1: x,
                        y1: -EDGE_OVERHANG,
                        x2: x,
                        y2: h - 1.0 + EDGE_OVERHANG,
                    });
                    x += cell;
                }
                let mut y = first(*oy);
                while y < h + EDGE_OVERHANG {
                    edges.segments.push(EdgeSegment {
                        x1: -EDGE_OVERHANG,
                        y1: y,
                        x2: w - 1.0 + EDGE_OVERHANG,
                        y2: y,
                    });
                    y += cell;
                }
            }
            ResolvedPattern::Disk { cx, cy, radius } => {
                edges.circles.push(EdgeCircle { cx: *cx, cy: *cy, radius: *radius });
            }
        }
        edges
    }

    /// Ground truth translated to the scene's position at time `t_s`.
    pub fn ground_truth_edges_at(&self, t_s: f64) -> GroundTruthEdges {
        let (ox, oy) = self.motion.offset_at(t_s);
        self.ground_truth_edges().translated(ox, oy)
    }
}

/// Clips the line `point + t * dir` to an axis-aligned rectangle.
fn clip_line_to_rect(
    point: (f64, f64),
    dir: (f64, f64),
    rect: (f64, f64, f64, f64),
) -> Option<EdgeSegment> {
    let (x0, y0, x1, y1) = rect;
    if x1 <= x0 || y1 <= y0 {
        return None;
    }
    let mut t_min = f64::NEG_INFINITY;
    let mut t_max = f64::INFINITY;
    for (p, d, lo, hi) in [(point.0, dir.0, x0, x1), (point.1, dir.1, y0, y1)] {
        if d.abs() < 1e-12 {
            if p < lo || p > hi {
                return None;
            }
        } else {
            let ta = (lo - p) / d;
            let tb = (hi - p) / d;
            t_min = t_min.max(ta.min(tb));
            t_max = t_max.min(ta.max(tb));
        }
    }
    if t_min >= t_max {
        return None;
    }
    Some(EdgeSegment {
        x1: point.0 + t_min * dir.0,
        y1: point.1 + t_min * dir.1,
        x2: point.0 + t_max * dir.0,
        y2: point.1 + t_max * dir.1,
    })
}

/// A lazily rendered scene usable as a frame source without materializing
/// every frame.
#[derive(Debug, Clone)]
pub struct SceneFrames {
    scene: ResolvedScene,
    timestamps_us: Vec<u64>,
}

impl SceneFrames {
    pub fn new(spec: &SceneSpec, framerate_fps: f64) -> Result<Self, TranslateError> {
        if !(framerate_fps > 0.0) {
            return Err(TranslateError::InvalidParameter("framerate must be positive"));
        }
        let scene = spec.resolve()?;
        let step = scene.motion.max_speed() / framerate_fps;
        if step >= 1.0 {
            return Err(TranslateError::MotionTooFast { px_per_frame: step });
        }
        let n = (spec.duration_s * framerate_fps).ceil() as usize + 1;
        let timestamps_us =
            (0..n).map(|k| (k as f64 / framerate_fps * 1e6).round() as u64).collect();
        Ok(Self { scene, timestamps_us })
    }

    pub fn scene(&self) -> &ResolvedScene {
        &self.scene
    }
}

impl FrameSource for SceneFrames {
    fn resolution(&self) -> (u16, u16) {
        (self.scene.width, self.scene.height)
    }

    fn num_frames(&self) -> usize {
        self.timestamps_us.len()
    }

    fn timestamp_us(&self, index: usize) -> u64 {
        self.timestamps_us[index]
    }

    fn render(&self, index: usize, buf: &mut [f64]) {
        self.scene.render(self.timestamps_us[index] as f64 * 1e-6, buf);
    }

    /// Exact analytic evaluation; no raster interpolation.
    fn sample(&self, index: usize, x: f64, y: f64) -> f64 {
        let t_s = self.timestamps_us[index] as f64 * 1e-6;
        let (ox, oy) = self.scene.motion.offset_at(t_s);
        self.scene.pattern_intensity(x - ox, y - oy)
    }
}

/// Materializes a scene into a stored frame sequence. The frame rate must
/// keep inter-frame pattern motion below one pixel.
pub fn generate_scene(
    spec: &SceneSpec,
    framerate_fps: f64,
) -> Result<FrameSequence, TranslateError> {
    let source = SceneFrames::new(spec, framerate_fps)?;
    let (w, h) = source.resolution();
    let mut frames = Vec::with_capacity(source.num_frames());
    let mut buf = vec![0.0; w as usize * h as usize];
    for i in 0..source.num_frames() {
        source.render(i, &mut buf);
        frames.push((source.timestamp_us(i), buf.clone()));
    }
    FrameSequence::new(w, h, frames, framerate_fps)
}
