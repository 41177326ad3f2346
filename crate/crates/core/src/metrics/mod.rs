//! Texture-quality metrics: event-density uniformity, accumulated-image
//! entropy, and edge-detection F-scores.

mod report;

pub use report::{write_iwe_heatmap, MetricsReport};

use crate::events::{EventStream, Iwe};
use crate::geometry::GroundTruthEdges;
use crate::par;
use std::f64::consts::TAU;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("empty event stream")]
    EmptyStream,
    #[error("dimension mismatch: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(u16, u16, u16, u16),
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
}

/// Per-axis Gaussian kernel scales in normalized (unit-cube) coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KdeBandwidth {
    pub hx: f64,
    pub hy: f64,
    pub ht: f64,
}

/// Density statistics of an event stream viewed as a spatio-temporal point
/// cloud. Lower variance means more uniform event coverage.
#[derive(Debug, Clone)]
pub struct DensityReport {
    /// Density at each event's own location (self term included), in event
    /// order.
    pub densities: Vec<f64>,
    pub variance: f64,
    pub mean: f64,
    /// Fixed 32-bin histogram over `[0, max density]`.
    pub histogram: Vec<u64>,
    pub bandwidth: KdeBandwidth,
    /// 10th percentile of the density values.
    pub low_density_cutoff: f64,
    /// Fraction of events below the cutoff.
    pub low_density_fraction: f64,
    /// Whether the exact quadratic evaluation was used.
    pub exact: bool,
}

impl DensityReport {
    /// Fraction of events below an externally supplied cutoff, for
    /// comparisons across streams.
    pub fn fraction_below(&self, cutoff: f64) -> f64 {
        self.densities.iter().filter(|&&d| d < cutoff).count() as f64
            / self.densities.len() as f64
    }
}

/// Streams up to this size are evaluated with the exact quadratic sum.
pub const KDE_EXACT_LIMIT: usize = 100_000;
const KDE_GRID_CAP: usize = 129;
const HISTOGRAM_BINS: usize = 32;

struct NormalizedCloud {
    u: Vec<[f64; 3]>,
}

fn normalize_cloud(stream: &EventStream) -> NormalizedCloud {
    let events = stream.events();
    let mut min = [f64::INFINITY; 3];
    let mut max = [f64::NEG_INFINITY; 3];
    for e in events {
        let p = [e.x as f64, e.y as f64, e.t_us as f64];
        for a in 0..3 {
            min[a] = min[a].min(p[a]);
            max[a] = max[a].max(p[a]);
        }
    }
    let span: Vec<f64> = (0..3).map(|a| (max[a] - min[a]).max(f64::MIN_POSITIVE)).collect();
    let u = events
        .iter()
        .map(|e| {
            let p = [e.x as f64, e.y as f64, e.t_us as f64];
            [
                (p[0] - min[0]) / span[0],
                (p[1] - min[1]) / span[1],
                (p[2] - min[2]) / span[2],
            ]
        })
        .collect();
    NormalizedCloud { u }
}

fn scott_bandwidth(cloud: &NormalizedCloud) -> KdeBandwidth {
    let n = cloud.u.len() as f64;
    let factor = n.powf(-1.0 / 7.0);
    let mut h = [0.0; 3];
    for (a, slot) in h.iter_mut().enumerate() {
        let mean: f64 = cloud.u.iter().map(|p| p[a]).sum::<f64>() / n;
        let var: f64 = cloud.u.iter().map(|p| (p[a] - mean).powi(2)).sum::<f64>() / n;
        let sigma = var.sqrt();
        *slot = if sigma > 1e-12 { sigma * factor } else { 0.1 };
    }
    KdeBandwidth { hx: h[0], hy: h[1], ht: h[2] }
}

/// Gaussian kernel density at each event's own location, exact or
/// grid-approximated depending on the stream size, and the variance of
/// those densities.
///
/// Coordinates are min-max normalized to the unit cube first, which makes
/// the result invariant to global time and uniform spatial translation.
/// Without an explicit bandwidth, Scott's rule is applied per axis.
pub fn kde_density_variance(
    stream: &EventStream,
    bandwidth: Option<KdeBandwidth>,
) -> Result<DensityReport, MetricsError> {
    if stream.is_empty() {
        return Err(MetricsError::EmptyStream);
    }
    let cloud = normalize_cloud(stream);
    let bw = bandwidth.unwrap_or_else(|| scott_bandwidth(&cloud));
    if !(bw.hx > 0.0 && bw.hy > 0.0 && bw.ht > 0.0) {
        return Err(MetricsError::InvalidParameter("bandwidths must be positive"));
    }
    let exact = cloud.u.len() <= KDE_EXACT_LIMIT;
    let densities =
        if exact { kde_exact(&cloud, &bw) } else { kde_grid(&cloud, &bw) };
    Ok(build_report(densities, bw, exact))
}

/// Exact quadratic evaluation, always; the independent reference for the
/// grid approximation.
pub fn kde_density_variance_exact(
    stream: &EventStream,
    bandwidth: KdeBandwidth,
) -> Result<DensityReport, MetricsError> {
    if stream.is_empty() {
        return Err(MetricsError::EmptyStream);
    }
    let cloud = normalize_cloud(stream);
    let densities = kde_exact(&cloud, &bandwidth);
    Ok(build_report(densities, bandwidth, true))
}

fn kde_norm(bw: &KdeBandwidth, n: usize) -> f64 {
    1.0 / (n as f64 * TAU.powf(1.5) * bw.hx * bw.hy * bw.ht)
}

fn kde_exact(cloud: &NormalizedCloud, bw: &KdeBandwidth) -> Vec<f64> {
    let n = cloud.u.len();
    let norm = kde_norm(bw, n);
    let inv = [1.0 / bw.hx, 1.0 / bw.hy, 1.0 / bw.ht];
    par::map_indices(n, |i| {
        let pi = cloud.u[i];
        let mut sum = 0.0;
        for pj in &cloud.u {
            let dx = (pi[0] - pj[0]) * inv[0];
            let dy = (pi[1] - pj[1]) * inv[1];
            let dt = (pi[2] - pj[2]) * inv[2];
            sum += (-0.5 * (dx * dx + dy * dy + dt * dt)).exp();
        }
        sum * norm
    })
}

fn kde_grid(cloud: &NormalizedCloud, bw: &KdeBandwidth) -> Vec<f64> {
    let n = cloud.u.len();
    let h = [bw.hx, bw.hy, bw.ht];
    // Grid points at j * cell per axis, spanning [0, 1]; cells no finer
    // than half a bandwidth.
    let dims: Vec<usize> =
        h.iter().map(|&ha| ((2.0 / ha).ceil() as usize + 1).clamp(2, KDE_GRID_CAP)).collect();
    let cell: Vec<f64> = dims.iter().map(|&d| 1.0 / (d - 1) as f64).collect();

    let idx = |gx: usize, gy: usize, gt: usize| (gt * dims[1] + gy) * dims[0] + gx;
    let mut grid = vec![0.0f64; dims[0] * dims[1] * dims[2]];
    for p in &cloud.u {
        let gx = (p[0] / cell[0]).round() as usize;
        let gy = (p[1] / cell[1]).round() as usize;
        let gt = (p[2] / cell[2]).round() as usize;
        grid[idx(gx.min(dims[0] - 1), gy.min(dims[1] - 1), gt.min(dims[2] - 1))] += 1.0;
    }

    // Separable truncated-Gaussian convolution, one axis at a time.
    for axis in 0..3 {
        let reach = (4.0 * h[axis] / cell[axis]).ceil() as i64;
        let taps: Vec<f64> = (-reach..=reach)
            .map(|m| {
                let d = m as f64 * cell[axis] / h[axis];
                (-0.5 * d * d).exp()
            })
            .collect();
        let mut out = vec![0.0f64; grid.len()];
        let stride = match axis {
            0 => 1,
            1 => dims[0],
            _ => dims[0] * dims[1],
        };
        let axis_len = dims[axis] as i64;
        for (linear, value) in out.iter_mut().enumerate() {
            // Coordinates of this cell along the convolution axis.
            let coord = match axis {
                0 => (linear % dims[0]) as i64,
                1 => ((linear / dims[0]) % dims[1]) as i64,
                _ => (linear / (dims[0] * dims[1])) as i64,
            };
            let mut acc = 0.0;
            for (ti, tap) in taps.iter().enumerate() {
                let m = ti as i64 - reach;
                let c = coord + m;
                if c >= 0 && c < axis_len {
                    acc += tap * grid[(linear as i64 + m * stride as i64) as usize];
                }
            }
            *value = acc;
        }
        grid = out;
    }

    let norm = kde_norm(bw, n);
    par::map_indices(n, |i| {
        let p = cloud.u[i];
        // Trilinear sample of the density grid at the event position.
        let mut g = [0.0f64; 3];
        let mut g0 = [0usize; 3];
        let mut frac = [0.0f64; 3];
        for a in 0..3 {
            g[a] = (p[a] / cell[a]).clamp(0.0, (dims[a] - 1) as f64);
            g0[a] = (g[a].floor() as usize).min(dims[a] - 2);
            frac[a] = g[a] - g0[a] as f64;
        }
        let mut acc = 0.0;
        for corner in 0..8usize {
            let ox = corner & 1;
            let oy = (corner >> 1) & 1;
            let ot = (corner >> 2) & 1;
            let weight = (if ox == 1 { frac[0] } else { 1.0 - frac[0] })
                * (if oy == 1 { frac[1] } else { 1.0 - frac[1] })
                * (if ot == 1 { frac[2] } else { 1.0 - frac[2] });
            acc += weight * grid[idx(g0[0] + ox, g0[1] + oy, g0[2] + ot)];
        }
        acc * norm
    })
}

fn build_report(densities: Vec<f64>, bandwidth: KdeBandwidth, exact: bool) -> DensityReport {
    let n = densities.len() as f64;
    let mean = densities.iter().sum::<f64>() / n;
    let variance = densities.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / n;
    let max = densities.iter().cloned().fold(0.0, f64::max);
    let mut histogram = vec![0u64; HISTOGRAM_BINS];
    if max > 0.0 {
        for &d in &densities {
            let bin = ((d / max) * HISTOGRAM_BINS as f64) as usize;
            histogram[bin.min(HISTOGRAM_BINS - 1)] += 1;
        }
    }
    let mut sorted = densities.clone();
    sorted.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    let low_density_cutoff = sorted[sorted.len() / 10];
    let low_density_fraction =
        densities.iter().filter(|&&d| d < low_density_cutoff).count() as f64 / n;
    DensityReport {
        densities,
        variance,
        mean,
        histogram,
        bandwidth,
        low_density_cutoff,
        low_density_fraction,
        exact,
    }
}

/// Shannon entropy, in bits, of the binarized accumulation image: pixels
/// split into active (count > 0) and silent.
pub fn binarized_entropy(iwe: &Iwe) -> f64 {
    let total = iwe.counts().len();
    if total == 0 {
        return 0.0;
    }
    let active = iwe.counts().iter().filter(|&&c| c > 0.0).count();
    let p = active as f64 / total as f64;
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
}

/// A boolean edge mask.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeMap {
    width: u16,
    height: u16,
    mask: Vec<bool>,
}

impl EdgeMap {
    pub fn new(width: u16, height: u16, mask: Vec<bool>) -> Self {
        assert_eq!(mask.len(), width as usize * height as usize);
        Self { width, height, mask }
    }

    pub fn width(&self) -> u16 {
        self.width
    }

    pub fn height(&self) -> u16 {
        self.height
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn get(&self, x: u16, y: u16) -> bool {
        self.mask[y as usize * self.width as usize + x as usize]
    }

    pub fn active_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    /// Binarizes an accumulation image at `count > threshold`.
    pub fn from_iwe(iwe: &Iwe, threshold: f64) -> EdgeMap {
        EdgeMap::new(
            iwe.width(),
            iwe.height(),
            iwe.counts().iter().map(|&c| c > threshold).collect(),
        )
    }

    /// Rasterizes analytic edges: pixel centers within `tolerance`.
    pub fn from_geometry(
        edges: &GroundTruthEdges,
        width: u16,
        height: u16,
        tolerance: f64,
    ) -> EdgeMap {
        let w = width as usize;
        let mask = par::map_indices(w * height as usize, |i| {
            let (x, y) = ((i % w) as f64, (i / w) as f64);
            edges.distance_to_nearest(x, y) <= tolerance
        });
        EdgeMap::new(width, height, mask)
    }
}

/// Precision, recall, and F1 of a greedy one-to-one edge-pixel matching.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdsScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Matches predicted edge pixels to ground-truth pixels within
/// `match_radius`, nearest pairs first, each pixel used at most once.
pub fn ods_f(pred: &EdgeMap, gt: &EdgeMap, match_radius: f64) -> Result<OdsScore, MetricsError> {
    if (pred.width, pred.height) != (gt.width, gt.height) {
        return Err(MetricsError::DimensionMismatch(pred.width, pred.height, gt.width, gt.height));
    }
    if !(match_radius >= 0.0) {
        return Err(MetricsError::InvalidParameter("match radius must be non-negative"));
    }
    let collect = |m: &EdgeMap| -> Vec<(i64, i64)> {
        let mut px = Vec::new();
        for y in 0..m.height {
            for x in 0..m.width {
                if m.get(x, y) {
                    px.push((x as i64, y as i64));
                }
            }
        }
        px
    };
    let pred_px = collect(pred);
    let gt_px = collect(gt);
    if pred_px.is_empty() && gt_px.is_empty() {
        return Ok(OdsScore { precision: 1.0, recall: 1.0, f1: 1.0 });
    }
    if pred_px.is_empty() || gt_px.is_empty() {
        return Ok(OdsScore { precision: 0.0, recall: 0.0, f1: 0.0 });
    }

    // Bucket ground-truth pixels so candidate pairs stay local.
    let cell = match_radius.floor() as i64 + 1;
    let mut buckets: std::collections::HashMap<(i64, i64), Vec<usize>> =
        std::collections::HashMap::new();
    for (j, &(x, y)) in gt_px.iter().enumerate() {
        buckets.entry((x.div_euclid(cell), y.div_euclid(cell))).or_default().push(j);
    }
    let r2 = match_radius * match_radius;
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (i, &(x, y)) in pred_px.iter().enumerate() {
        let (bx, by) = (x.div_euclid(cell), y.div_euclid(cell));
        for nx in bx - 1..=bx + 1 {
            for ny in by - 1..=by + 1 {
                if let Some(list) = buckets.get(&(nx, ny)) {
                    for &j in list {
                        let (gx, gy) = gt_px[j];
                        let d2 = ((x - gx).pow(2) + (y - gy).pow(2)) as f64;
                        if d2 <= r2 {
                            pairs.push((d2, i, j));
                        }
                    }
                }
            }
        }
    }
    // Nearest first; ties resolved in scan order for determinism.
    pairs.sort_unstable_by(|a, b| {
        a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2))
    });
    let mut pred_used = vec![false; pred_px.len()];
    let mut gt_used = vec![false; gt_px.len()];
    let mut tp = 0usize;
    for (_, i, j) in pairs {
        if !pred_used[i] && !gt_used[j] {
            pred_used[i] = true;
            gt_used[j] = true;
            tp += 1;
        }
    }
    let precision = tp as f64 / pred_px.len() as f64;
    let recall = tp as f64 / gt_px.len() as f64;
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Ok(OdsScore { precision, recall, f1 })
}

/// Maximum F1 over binarization thresholds of an accumulation image; the
/// optimal-dataset-scale edge score. Ties go to the lowest threshold.
pub fn ods_f_from_iwe(
    iwe: &Iwe,
    gt: &EdgeMap,
    match_radius: f64,
    thresholds: &[f64],
) -> Result<(f64, Vec<(f64, OdsScore)>), MetricsError> {
    if thresholds.is_empty() {
        return Err(MetricsError::InvalidParameter("need at least one threshold"));
    }
    let mut sweep = Vec::with_capacity(thresholds.len());
    let mut best = f64::NEG_INFINITY;
    for &thr in thresholds {
        let score = ods_f(&EdgeMap::from_iwe(iwe, thr), gt, match_radius)?;
        if score.f1 > best {
            best = score.f1;
        }
        sweep.push((thr, score));
    }
    Ok((best, sweep))
}

/// Evenly spaced binarization thresholds strictly inside `(0, max_count)`.
pub fn default_thresholds(iwe: &Iwe, levels: usize) -> Vec<f64> {
    let max = iwe.max_count();
    (0..levels.max(1)).map(|i| max * i as f64 / levels.max(1) as f64).collect()
}
