//! Float RGB images, binary masks and their PPM/PGM encodings.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// Height x width x 3, row-major, channel-interleaved.
#[derive(Clone, Debug, PartialEq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

pub type RenderedImage = Image;

impl Image {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![0.0; width * height * 3],
        }
    }

    pub fn filled(width: usize, height: usize, rgb: [f64; 3]) -> Self {
        let mut img = Self::new(width, height);
        for px in img.data.chunks_exact_mut(3) {
            px.copy_from_slice(&rgb);
        }
        img
    }

    pub fn from_data(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height * 3 {
            return Err(Error::LengthMismatch {
                what: "image data",
                got: data.len(),
                expected: width * height * 3,
            });
        }
        Ok(Self { width, height, data })
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> [f64; 3] {
        let i = 3 * (y * self.width + x);
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    #[inline]
    pub fn set_pixel(&mut self, x: usize, y: usize, rgb: [f64; 3]) {
        let i = 3 * (y * self.width + x);
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    pub fn same_size(&self, other: &Image) -> Result<()> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::DimensionMismatch {
                got_w: other.width,
                got_h: other.height,
                want_w: self.width,
                want_h: self.height,
            });
        }
        Ok(())
    }

    /// Rounds every channel to the nearest 8-bit level.
    pub fn quantized(&self) -> Image {
        Image {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| to_u8(v) as f64 / 255.0).collect(),
        }
    }

    pub fn encode_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend(self.data.iter().map(|&v| to_u8(v)));
        out
    }

    pub fn write_ppm(&self, path: &Path) -> Result<()> {
        write_bytes(path, &self.encode_ppm())
    }

    pub fn read_ppm(path: &Path) -> Result<Image> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        let (magic, width, height, body) = parse_netpbm(&bytes).map_err(|r| Error::parse(path, 1, r))?;
        if magic != *b"P6" {
            return Err(Error::parse(path, 1, "expected binary PPM (P6)"));
        }
        if body.len() < width * height * 3 {
            return Err(Error::parse(path, 1, "truncated pixel data"));
        }
        let data = body[..width * height * 3]
            .iter()
            .map(|&b| b as f64 / 255.0)
            .collect();
        Ok(Image { width, height, data })
    }
}

#[inline]
fn to_u8(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Binary per-pixel mask, stored as 8-bit PGM (0 or 255).
#[derive(Clone, Debug, PartialEq)]
pub struct Mask {
    pub width: usize,
    pub height: usize,
    pub data: Vec<bool>,
}

impl Mask {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![false; width * height],
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        self.data[y * self.width + x] = v;
    }

    /// Looks up the pixel containing a continuous image coordinate.
    pub fn contains_point(&self, q: [f64; 2]) -> bool {
        if !(q[0] >= 0.0 && q[1] >= 0.0) {
            return false;
        }
        let (x, y) = (q[0].floor() as usize, q[1].floor() as usize);
        x < self.width && y < self.height && self.get(x, y)
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn write_pgm(&self, path: &Path) -> Result<()> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend(self.data.iter().map(|&b| if b { 255u8 } else { 0 }));
        write_bytes(path, &out)
    }

    pub fn read_pgm(path: &Path) -> Result<Mask> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        let (magic, width, height, body) = parse_netpbm(&bytes).map_err(|r| Error::parse(path, 1, r))?;
        if magic != *b"P5" {
            return Err(Error::parse(path, 1, "expected binary PGM (P5)"));
        }
        if body.len() < width * height {
            return Err(Error::parse(path, 1, "truncated pixel data"));
        }
        let data = body[..width * height].iter().map(|&b| b >= 128).collect();
        Ok(Mask { width, height, data })
    }
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(bytes).map_err(|e| Error::io(path, e))
}

/// Splits a binary netpbm file into magic, dimensions and raster. Only
/// maxval 255 is accepted.
fn parse_netpbm(bytes: &[u8]) -> std::result::Result<([u8; 2], usize, usize, &[u8]), String> {
    if bytes.len() < 2 {
        return Err("file too short".into());
    }
    let magic = [bytes[0], bytes[1]];
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in fields.iter_mut() {
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
        while pos < bytes.len() && bytes[pos].is_ascii_digit() {
            pos += 1;
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or("malformed header")?;
    }
    if fields[2] != 255 {
        return Err(format!("unsupported maxval {}", fields[2]));
    }
    // exactly one whitespace byte separates the header from the raster
    pos += 1;
    if pos > bytes.len() {
        return Err("missing raster".into());
    }
    Ok((magic, fields[0], fields[1], &bytes[pos..]))
}
