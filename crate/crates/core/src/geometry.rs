//! Analytic edge geometry for synthetic scenes: ground truth for
//! compensation-error and edge-score measurements.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeSegment {
    pub x1: f64,
    pub y1: f64,
    pub x2: f64,
    pub y2: f64,
}

impl EdgeSegment {
    pub fn length(&self) -> f64 {
        ((self.x2 - self.x1).powi(2) + (self.y2 - self.y1).powi(2)).sqrt()
    }

    /// Edge orientation in radians, folded into `[0, pi)`.
    pub fn angle(&self) -> f64 {
        (self.y2 - self.y1).atan2(self.x2 - self.x1).rem_euclid(std::f64::consts::PI)
    }

    pub fn distance_to(&self, x: f64, y: f64) -> f64 {
        let dx = self.x2 - self.x1;
        let dy = self.y2 - self.y1;
        let len2 = dx * dx + dy * dy;
        if len2 == 0.0 {
            return ((x - self.x1).powi(2) + (y - self.y1).powi(2)).sqrt();
        }
        let t = (((x - self.x1) * dx + (y - self.y1) * dy) / len2).clamp(0.0, 1.0);
        let px = self.x1 + t * dx;
        let py = self.y1 + t * dy;
        ((x - px).powi(2) + (y - py).powi(2)).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeCircle {
    pub cx: f64,
    pub cy: f64,
    pub radius: f64,
}

impl EdgeCircle {
    pub fn distance_to(&self, x: f64, y: f64) -> f64 {
        let d = ((x - self.cx).powi(2) + (y - self.cy).powi(2)).sqrt();
        (d - self.radius).abs()
    }
}

/// The set of analytic edges in a synthetic scene.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GroundTruthEdges {
    pub segments: Vec<EdgeSegment>,
    pub circles: Vec<EdgeCircle>,
}

impl GroundTruthEdges {
    pub fn is_empty(&self) -> bool {
        self.segments.is_empty() && self.circles.is_empty()
    }

    /// Perpendicular distance from a point to the nearest edge.
    pub fn distance_to_nearest(&self, x: f64, y: f64) -> f64 {
        let seg = self
            .segments
            .iter()
            .map(|s| s.distance_to(x, y))
            .fold(f64::INFINITY, f64::min);
        let circ = self
            .circles
            .iter()
            .map(|c| c.distance_to(x, y))
            .fold(f64::INFINITY, f64::min);
        seg.min(circ)
    }

    /// Geometry translated by `(dx, dy)`.
    pub fn translated(&self, dx: f64, dy: f64) -> GroundTruthEdges {
        GroundTruthEdges {
            segments: self
                .segments
                .iter()
                .map(|s| EdgeSegment {
                    x1: s.x1 + dx,
                    y1: s.y1 + dy,
                    x2: s.x2 + dx,
                    y2: s.y2 + dy,
                })
                .collect(),
            circles: self
                .circles
                .iter()
                .map(|c| EdgeCircle { cx: c.cx + dx, cy: c.cy + dy, radius: c.radius })
                .collect(),
        }
    }

    /// Writes `segment,x1,y1,x2,y2` and `circle,cx,cy,r` lines.
    pub fn write_csv(&self, path: &Path) -> std::io::Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        writeln!(w, "# kind,...")?;
        for s in &self.segments {
            writeln!(w, "segment,{},{},{},{}", s.x1, s.y1, s.x2, s.y2)?;
        }
        for c in &self.circles {
            writeln!(w, "circle,{},{},{}", c.cx, c.cy, c.radius)?;
        }
        w.flush()
    }

    pub fn read_csv(path: &Path) -> std::io::Result<GroundTruthEdges> {
        let reader = BufReader::new(File::open(path)?);
        let mut edges = GroundTruthEdges::default();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = || {
                std::io::Error::new(
                    std::io::ErrorKind::InvalidData,
                    format!("bad edge line {}: {line}", i + 1),
                )
            };
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad());
            match fields.as_slice() {
                ["segment", x1, y1, x2, y2] => edges.segments.push(EdgeSegment {
                    x1: num(x1)?,
                    y1: num(y1)?,
                    x2: num(x2)?,
                    y2: num(y2)?,
                }),
                ["circle", cx, cy, r] => edges.circles.push(EdgeCircle {
                    cx: num(cx)?,
                    cy: num(cy)?,
                    radius: num(r)?,
                }),
                _ => return Err(bad()),
            }
        }
        Ok(edges)
    }
}
