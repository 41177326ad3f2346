//! Binary (P5) portable graymap reading and writing.

use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::path::Path;

/// An 8- or 16-bit grayscale image as read from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct Pgm {
    pub width: u32,
    pub height: u32,
    pub maxval: u16,
    /// Row-major samples; 16-bit values are stored big-endian on disk.
    pub samples: Vec<u16>,
}

impl Pgm {
    /// Samples scaled to `[0, 1]`.
    pub fn to_intensities(&self) -> Vec<f64> {
        let scale = 1.0 / self.maxval as f64;
        self.samples.iter().map(|&s| s as f64 * scale).collect()
    }
}

pub fn write_pgm_u8(path: &Path, width: u32, height: u32, data: &[u8]) -> io::Result<()> {
    assert_eq!(data.len(), width as usize * height as usize);
    let mut w = BufWriter::new(File::create(path)?);
    write!(w, "P5\n{width} {height}\n255\n")?;
    w.write_all(data)?;
    w.flush()
}

pub fn read_pgm(path: &Path) -> io::Result<Pgm> {
    let mut bytes = Vec::new();
    File::open(path)?.read_to_end(&mut bytes)?;
    let bad = |msg: &str| io::Error::new(io::ErrorKind::InvalidData, msg.to_string());

    let mut pos = 0usize;
    let mut token = |bytes: &[u8]| -> io::Result<String> {
        // Skip whitespace and `#` comments between header fields.
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                break;
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(io::Error::new(io::ErrorKind::InvalidData, "truncated header"));
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };

    if token(&bytes)? != "P5" {
        return Err(bad("not a binary PGM (P5)"));
    }
    let width: u32 = token(&bytes)?.parse().map_err(|_| bad("bad width"))?;
    let height: u32 = token(&bytes)?.parse().map_err(|_| bad("bad height"))?;
    let maxval: u16 = token(&bytes)?.parse().map_err(|_| bad("bad maxval"))?;
    if maxval == 0 {
        return Err(bad("maxval must be positive"));
    }
    // Exactly one whitespace byte separates the header from the raster.
    pos += 1;

    let n = width as usize * height as usize;
    let samples = if maxval < 256 {
        if bytes.len() < pos + n {
            return Err(bad("truncated raster"));
        }
        bytes[pos..pos + n].iter().map(|&b| b as u16).collect()
    } else {
        if bytes.len() < pos + 2 * n {
            return Err(bad("truncated raster"));
        }
        bytes[pos..pos + 2 * n]
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]))
            .collect()
    };
    Ok(Pgm { width, height, maxval, samples })
}
