//! AMI-EV translator: turns frame sequences or existing event streams into
//! artificial-microsaccade event streams, and generates the synthetic
//! scenes used as oracles throughout the crate.
//!
//! Event generation follows the standard log-threshold model: per pixel, a
//! reference log intensity advances in contrast-threshold steps, each step
//! emitting one event at the linearly interpolated crossing time.

mod scene;

pub use scene::{
    generate_scene, Motion, Pattern, ResolvedPattern, ResolvedScene, SceneFrames, SceneSpec,
    StripeTile,
};

use crate::calib::CompensationParams;
use crate::events::{EncoderSample, Event, EventError, EventStream, Polarity};
use crate::optics::PrismConfig;
use crate::pgm;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::TAU;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TranslateError {
    #[error("scene motion of {px_per_frame:.2} px/frame exceeds 1 px; raise the framerate")]
    MotionTooFast { px_per_frame: f64 },
    #[error("prism motion of {px_per_frame:.2} px/frame exceeds 1 px; raise the framerate")]
    PrismTooFast { px_per_frame: f64 },
    #[error("frame and event time ranges do not overlap")]
    TimeRangeMismatch,
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("frame input: {0}")]
    FrameInput(String),
    #[error(transparent)]
    Event(#[from] EventError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Event-synthesis configuration. `params` is the forward displacement
/// model (the quantity calibration later recovers); `prism.rotation_hz`
/// drives the encoder phase.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    /// Contrast threshold in log-intensity units.
    pub contrast_threshold: f64,
    pub prism: PrismConfig,
    pub params: CompensationParams,
    /// Per-pixel dead time after an emitted event.
    pub refractory_us: u64,
    /// Intensity floor added before taking logs.
    pub log_eps: f64,
}

impl SynthConfig {
    pub fn new(
        contrast_threshold: f64,
        prism: PrismConfig,
        params: CompensationParams,
    ) -> Result<Self, TranslateError> {
        if !(contrast_threshold > 0.0) {
            return Err(TranslateError::InvalidParameter("contrast threshold must be positive"));
        }
        Ok(Self { contrast_threshold, prism, params, refractory_us: 100, log_eps: 1e-3 })
    }
}

/// Anything that can hand out timestamped intensity frames in order.
pub trait FrameSource: Sync {
    fn resolution(&self) -> (u16, u16);
    fn num_frames(&self) -> usize;
    fn timestamp_us(&self, index: usize) -> u64;
    fn render(&self, index: usize, buf: &mut [f64]);

    /// Intensity of frame `index` at a sub-pixel position. Stored frames
    /// interpolate bilinearly (with border replication); analytic sources
    /// may override with an exact evaluation.
    fn sample(&self, index: usize, x: f64, y: f64) -> f64;
}

/// A stored sequence of timestamped intensity frames.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSequence {
    width: u16,
    height: u16,
    frames: Vec<(u64, Vec<f64>)>,
    framerate_fps: f64,
}

impl FrameSequence {
    pub fn new(
        width: u16,
        height: u16,
        frames: Vec<(u64, Vec<f64>)>,
        framerate_fps: f64,
    ) -> Result<Self, TranslateError> {
        let px = width as usize * height as usize;
        for pair in frames.windows(2) {
            if pair[1].0 <= pair[0].0 {
                return Err(TranslateError::InvalidParameter(
                    "frame timestamps must be strictly increasing",
                ));
            }
        }
        for (_, data) in &frames {
            if data.len() != px {
                return Err(TranslateError::InvalidParameter("frame size mismatch"));
            }
            if data.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(TranslateError::InvalidParameter(
                    "intensities must be finite and non-negative",
                ));
            }
        }
        Ok(Self { width, height, frames, framerate_fps })
    }

    pub fn framerate_fps(&self) -> f64 {
        self.framerate_fps
    }

    pub fn frame(&self, index: usize) -> (u64, &[f64]) {
        let (t, data) = &self.frames[index];
        (*t, data)
    }

    pub fn time_range(&self) -> Option<(u64, u64)> {
        match (self.frames.first(), self.frames.last()) {
            (Some(a), Some(b)) => Some((a.0, b.0)),
            _ => None,
        }
    }

    /// Loads binary PGM frames named `<index>.pgm` (zero-padded to six
    /// digits) from a directory, with timestamps from `index,t_us` lines.
    pub fn from_pgm_dir(dir: &Path, timestamps: &Path) -> Result<Self, TranslateError> {
        let text = std::fs::read_to_string(timestamps)?;
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (idx, t) = line.split_once(',').ok_or_else(|| {
                TranslateError::FrameInput(format!("bad timestamp line {}", i + 1))
            })?;
            let idx: u64 = idx.trim().parse().map_err(|_| {
                TranslateError::FrameInput(format!("bad frame index on line {}", i + 1))
            })?;
            let t: u64 = t.trim().parse().map_err(|_| {
                TranslateError::FrameInput(format!("bad timestamp on line {}", i + 1))
            })?;
            entries.push((idx, t));
        }
        entries.sort_unstable();
        if entries.is_empty() {
            return Err(TranslateError::FrameInput("no frames listed".to_string()));
        }
        let mut frames = Vec::with_capacity(entries.len());
        let mut resolution = None;
        for (idx, t) in entries {
            let path = dir.join(format!("{idx:06}.pgm"));
            let image = pgm::read_pgm(&path)
                .map_err(|e| TranslateError::FrameInput(format!("{}: {e}", path.display())))?;
            match resolution {
                None => resolution = Some((image.width, image.height)),
                Some(r) if r != (image.width, image.height) => {
                    return Err(TranslateError::FrameInput(format!(
                        "{}: resolution differs from first frame",
                        path.display()
                    )));
                }
                _ => {}
            }
            frames.push((t, image.to_intensities()));
        }
        let (w, h) = resolution.expect("non-empty");
        if w > u16::MAX as u32 || h > u16::MAX as u32 {
            return Err(TranslateError::FrameInput("frame too large".to_string()));
        }
        let fps = if frames.len() >= 2 {
            let span = (frames[frames.len() - 1].0 - frames[0].0) as f64 * 1e-6;
            (frames.len() - 1) as f64 / span
        } else {
            0.0
        };
        FrameSequence::new(w as u16, h as u16, frames, fps)
    }

    /// Writes frames as PGM files plus the matching timestamps file.
    pub fn write_pgm_dir(&self, dir: &Path, timestamps: &Path) -> Result<(), TranslateError> {
        std::fs::create_dir_all(dir)?;
        let mut lines = String::from("# index,t_us\n");
        for (i, (t, data)) in self.frames.iter().enumerate() {
            let bytes: Vec<u8> =
                data.iter().map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8).collect();
            pgm::write_pgm_u8(
                &dir.join(format!("{i:06}.pgm")),
                self.width as u32,
                self.height as u32,
                &bytes,
            )?;
            lines.push_str(&format!("{i},{t}\n"));
        }
        std::fs::write(timestamps, lines)?;
        Ok(())
    }
}

impl FrameSource for FrameSequence {
    fn resolution(&self) -> (u16, u16) {
        (self.width, self.height)
    }

    fn num_frames(&self) -> usize {
        self.frames.len()
    }

    fn timestamp_us(&self, index: usize) -> u64 {
        self.frames[index].0
    }

    fn render(&self, index: usize, buf: &mut [f64]) {
        buf.copy_from_slice(&self.frames[index].1);
    }

    fn sample(&self, index: usize, x: f64, y: f64) -> f64 {
        sample_bilinear(&self.frames[index].1, self.width as usize, self.height as usize, x, y)
    }
}

#[derive(Clone, Copy)]
struct PixelState {
    log_ref: f64,
    log_prev: f64,
    last_fire_us: i64,
}

/// Bilinear sample with border replication.
fn sample_bilinear(frame: &[f64], w: usize, h: usize, x: f64, y: f64) -> f64 {
    let x = x.clamp(0.0, (w - 1) as f64);
    let y = y.clamp(0.0, (h - 1) as f64);
    let x0 = (x.floor() as usize).min(w - 2);
    let y0 = (y.floor() as usize).min(h - 2);
    let fx = x - x0 as f64;
    let fy = y - y0 as f64;
    let i = y0 * w + x0;
    frame[i] * (1.0 - fx) * (1.0 - fy)
        + frame[i + 1] * fx * (1.0 - fy)
        + frame[i + w] * (1.0 - fx) * fy
        + frame[i + w + 1] * fx * fy
}

const BAND_ROWS: usize = 16;

/// Runs the threshold model over consecutive frames of `src`.
///
/// With `prism_on`, each pixel samples the frame at its position shifted
/// back by the prism displacement, which moves the apparent image on the
/// calibratable circle; events carry the encoder angle at their timestamp.
pub fn synth_events<S: FrameSource>(
    src: &S,
    cfg: &SynthConfig,
    prism_on: bool,
) -> Result<EventStream, TranslateError> {
    let (width, height) = src.resolution();
    let (w, h) = (width as usize, height as usize);
    if w < 2 || h < 2 {
        return Err(TranslateError::InvalidParameter("resolution must be at least 2x2"));
    }
    let n = src.num_frames();
    if n < 2 {
        return Ok(EventStream::from_sorted(width, height, Vec::new())
            .with_theta(Vec::new())
            .expect("empty"));
    }
    if prism_on {
        let mut max_dt_us = 0u64;
        for i in 1..n {
            max_dt_us = max_dt_us.max(src.timestamp_us(i) - src.timestamp_us(i - 1));
        }
        // Fastest apparent motion of the displacement circle, corners
        // included when the radial term is active.
        let corner = (0.0f64.max(cfg.params.center.0).max(w as f64 - cfg.params.center.0))
            .hypot(0.0f64.max(cfg.params.center.1).max(h as f64 - cfg.params.center.1));
        let r_max = cfg.params.radius_at((
            cfg.params.center.0 + corner,
            cfg.params.center.1,
        ));
        let step = r_max.abs() * TAU * cfg.prism.rotation_hz * max_dt_us as f64 * 1e-6;
        if step >= 1.0 {
            return Err(TranslateError::PrismTooFast { px_per_frame: step });
        }
    }

    let c = cfg.contrast_threshold;
    let mut state = vec![
        PixelState { log_ref: 0.0, log_prev: 0.0, last_fire_us: i64::MIN / 2 };
        w * h
    ];
    let mut output: Vec<(Event, f64)> = Vec::new();

    // Without the radial term the displacement is position-independent, so
    // it hoists out of the per-pixel loop.
    let global_disp = prism_on && cfg.params.k1 == 0.0;
    let sample_log = |index: usize, x: usize, y: usize, theta: f64, disp: (f64, f64)| -> f64 {
        let p = (x as f64, y as f64);
        let value = if !prism_on {
            src.sample(index, p.0, p.1)
        } else if global_disp {
            src.sample(index, p.0 - disp.0, p.1 - disp.1)
        } else {
            let (dx, dy) = cfg.params.relative_displacement(p, theta);
            src.sample(index, p.0 - dx, p.1 - dy)
        };
        (value + cfg.log_eps).ln()
    };
    let frame_disp = |theta: f64| {
        if global_disp {
            cfg.params.relative_displacement((0.0, 0.0), theta)
        } else {
            (0.0, 0.0)
        }
    };

    // Initialize references from the first frame.
    let theta0 = cfg.prism.phase_at(src.timestamp_us(0) as f64 * 1e-6);
    let disp0 = frame_disp(theta0);
    band_map(&mut state, w, |band_idx, band| {
        let y_base = band_idx * BAND_ROWS;
        for (j, px) in band.iter_mut().enumerate() {
            let (x, y) = (j % w, y_base + j / w);
            let l = sample_log(0, x, y, theta0, disp0);
            px.log_ref = l;
            px.log_prev = l;
        }
    });

    for k in 1..n {
        let t0 = src.timestamp_us(k - 1);
        let t1 = src.timestamp_us(k);
        let theta_k = cfg.prism.phase_at(t1 as f64 * 1e-6);
        let disp_k = frame_disp(theta_k);
        let bands = band_map(&mut state, w, |band_idx, band| {
            let y_base = band_idx * BAND_ROWS;
            let mut emitted: Vec<(Event, f64)> = Vec::new();
            for (j, px) in band.iter_mut().enumerate() {
                let (x, y) = (j % w, y_base + j / w);
                let l_cur = sample_log(k, x, y, theta_k, disp_k);
                let diff = l_cur - px.log_ref;
                // Small slack absorbs float noise in "exactly k thresholds".
                let steps = (diff.abs() / c + 1e-9).floor() as u64;
                if steps > 0 {
                    let sign = if diff > 0.0 { 1.0 } else { -1.0 };
                    let polarity = if diff > 0.0 { Polarity::Pos } else { Polarity::Neg };
                    let denom = l_cur - px.log_prev;
                    for s in 1..=steps {
                        let level = px.log_ref + sign * s as f64 * c;
                        let frac = if denom.abs() < 1e-300 {
                            1.0
                        } else {
                            ((level - px.log_prev) / denom).clamp(0.0, 1.0)
                        };
                        let t_ev = (t0 as f64 + frac * (t1 - t0) as f64).round() as u64;
                        if t_ev as i64 - px.last_fire_us >= cfg.refractory_us as i64 {
                            px.last_fire_us = t_ev as i64;
                            let theta_ev = cfg.prism.phase_at(t_ev as f64 * 1e-6);
                            emitted.push((
                                Event { t_us: t_ev, x: x as u16, y: y as u16, polarity },
                                theta_ev,
                            ));
                        }
                    }
                    px.log_ref += sign * steps as f64 * c;
                }
                px.log_prev = l_cur;
            }
            emitted
        });
        for band in bands {
            output.extend(band);
        }
    }

    output.sort_unstable_by_key(|(e, _)| e.sort_key());
    let (events, theta): (Vec<Event>, Vec<f64>) = output.into_iter().unzip();
    Ok(EventStream::from_sorted(width, height, events).with_theta(theta).expect("aligned"))
}

/// Applies `f` to fixed row bands of the pixel-state array, in parallel
/// when available, returning per-band results in band order.
fn band_map<R, F>(state: &mut [PixelState], w: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize, &mut [PixelState]) -> R + Sync + Send,
{
    let band_px = BAND_ROWS * w;
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        state.par_chunks_mut(band_px).enumerate().map(|(i, band)| f(i, band)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        state.chunks_mut(band_px).enumerate().map(|(i, band)| f(i, band)).collect()
    }
}

/// Threshold model over a stored frame sequence.
pub fn synth_events_from_frames(
    seq: &FrameSequence,
    cfg: &SynthConfig,
    prism_on: bool,
) -> Result<EventStream, TranslateError> {
    synth_events(seq, cfg, prism_on)
}

/// Threshold model over a lazily rendered scene; the oracle path used by
/// the test suites.
pub fn synth_events_from_scene(
    spec: &SceneSpec,
    framerate_fps: f64,
    cfg: &SynthConfig,
    prism_on: bool,
) -> Result<EventStream, TranslateError> {
    let source = SceneFrames::new(spec, framerate_fps)?;
    synth_events(&source, cfg, prism_on)
}

/// Relocates an existing event stream onto the displacement circle. Each
/// event moves forward by the displacement at its timestamp's encoder
/// angle, lands on the nearest pixel, and carries that angle.
///
/// This path cannot create events on edges the source camera never saw;
/// returns the stream and the out-of-bounds drop count.
pub fn synth_ami_from_events(
    stream: &EventStream,
    cfg: &SynthConfig,
) -> Result<(EventStream, u64), TranslateError> {
    let mut moved: Vec<(Event, f64)> = Vec::with_capacity(stream.len());
    let mut dropped = 0u64;
    for e in stream.events() {
        let theta = cfg.prism.phase_at(e.t_us as f64 * 1e-6);
        let p = (e.x as f64, e.y as f64);
        let (dx, dy) = cfg.params.relative_displacement(p, theta);
        let x = (p.0 + dx).round();
        let y = (p.1 + dy).round();
        if x >= 0.0 && x < stream.width() as f64 && y >= 0.0 && y < stream.height() as f64 {
            moved.push((
                Event { t_us: e.t_us, x: x as u16, y: y as u16, polarity: e.polarity },
                theta,
            ));
        } else {
            dropped += 1;
        }
    }
    moved.sort_unstable_by_key(|(e, _)| e.sort_key());
    let (events, theta): (Vec<Event>, Vec<f64>) = moved.into_iter().unzip();
    let out = EventStream::from_sorted(stream.width(), stream.height(), events)
        .with_theta(theta)
        .expect("aligned");
    Ok((out, dropped))
}

/// Combined input path: frame-driven synthesis united with relocated
/// events, merged in stream order and deduplicated per pixel within the
/// refractory period.
pub fn synth_ami_from_frames_plus_events(
    seq: &FrameSequence,
    stream: &EventStream,
    cfg: &SynthConfig,
) -> Result<(EventStream, u64), TranslateError> {
    if seq.resolution() != stream.resolution() {
        return Err(TranslateError::InvalidParameter(
            "frame and event resolutions must match",
        ));
    }
    if let (Some((f0, f1)), Some((e0, e1))) = (seq.time_range(), stream.time_range()) {
        if f1 < e0 || e1 < f0 {
            return Err(TranslateError::TimeRangeMismatch);
        }
    }
    let from_frames = synth_events_from_frames(seq, cfg, true)?;
    let (from_events, dropped) = synth_ami_from_events(stream, cfg)?;
    let (width, height) = seq.resolution();
    let mut merged: Vec<(Event, f64)> = Vec::with_capacity(from_frames.len() + from_events.len());
    for (src, theta) in [
        (&from_frames, from_frames.theta().unwrap_or(&[])),
        (&from_events, from_events.theta().unwrap_or(&[])),
    ] {
        merged.extend(src.events().iter().copied().zip(theta.iter().copied()));
    }
    merged.sort_unstable_by_key(|(e, _)| e.sort_key());

    let mut last_fire = vec![i64::MIN / 2; width as usize * height as usize];
    let mut events = Vec::with_capacity(merged.len());
    let mut theta = Vec::with_capacity(merged.len());
    for (e, t) in merged {
        let idx = e.y as usize * width as usize + e.x as usize;
        if e.t_us as i64 - last_fire[idx] >= cfg.refractory_us as i64 {
            last_fire[idx] = e.t_us as i64;
            events.push(e);
            theta.push(t);
        }
    }
    let out = EventStream::from_sorted(width, height, events).with_theta(theta).expect("aligned");
    Ok((out, dropped))
}

/// Synthesizes a constant-speed encoder log covering `[t0, t1]` at the
/// given sample rate. Optional timestamp jitter models imperfect clock
/// synchronization: reported times wobble while angles stay truthful.
pub fn synthetic_encoder(
    prism: &PrismConfig,
    t0_us: u64,
    t1_us: u64,
    sample_rate_hz: f64,
    jitter_us: f64,
    seed: u64,
) -> Vec<EncoderSample> {
    assert!(sample_rate_hz > 0.0);
    let step_us = (1e6 / sample_rate_hz).max(1.0);
    let max_jitter = jitter_us.min(step_us / 2.0 - 1.0).max(0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::new();
    let mut k = 0u64;
    loop {
        let nominal = t0_us as f64 + k as f64 * step_us;
        let jitter = if max_jitter > 0.0 { rng.random_range(-max_jitter..max_jitter) } else { 0.0 };
        let t_us = (nominal + jitter).max(0.0).round() as u64;
        let theta = prism.phase_at(nominal * 1e-6);
        if samples.last().is_none_or(|prev: &EncoderSample| t_us > prev.t_us) {
            samples.push(EncoderSample { t_us, theta });
        }
        if nominal >= t1_us as f64 {
            break;
        }
        k += 1;
    }
    samples
}

/// Adds uniformly distributed noise events (`fraction` of the stream size)
/// across the stream's time and sensor extent, with encoder-consistent
/// angles attached when the input carries them.
pub fn add_uniform_noise(
    stream: &EventStream,
    fraction: f64,
    prism: &PrismConfig,
    seed: u64,
) -> EventStream {
    let Some((t0, t1)) = stream.time_range() else {
        return stream.clone();
    };
    let n_noise = (stream.len() as f64 * fraction).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let has_theta = stream.theta().is_some();
    let mut merged: Vec<(Event, f64)> = stream
        .events()
        .iter()
        .copied()
        .zip(
            stream
                .theta()
                .map(|t| t.to_vec())
                .unwrap_or_else(|| vec![0.0; stream.len()]),
        )
        .collect();
    for _ in 0..n_noise {
        let t_us = rng.random_range(t0..=t1);
        let e = Event {
            t_us,
            x: rng.random_range(0..stream.width()),
            y: rng.random_range(0..stream.height()),
            polarity: if rng.random_bool(0.5) { Polarity::Pos } else { Polarity::Neg },
        };
        let theta = prism.phase_at(t_us as f64 * 1e-6);
        merged.push((e, theta));
    }
    merged.sort_unstable_by_key(|(e, _)| e.sort_key());
    let (events, theta): (Vec<Event>, Vec<f64>) = merged.into_iter().unzip();
    let out = EventStream::from_sorted(stream.width(), stream.height(), events);
    if has_theta {
        out.with_theta(theta).expect("aligned")
    } else {
        out
    }
}

#[cfg(test)]
mod tests;
