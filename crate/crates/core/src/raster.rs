//! Pixel masks, RGB images, scanline polygon fill and PNG I/O.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use crate::geom::Vec2;
use crate::Error;

/// 8-bit RGB triple.
pub type Rgb = [u8; 3];

/// A boolean pixel mask stored over a window `[x0, x0+w) × [y0, y0+h)` of a canvas.
#[derive(Clone, Debug, PartialEq)]
pub struct Mask {
    pub x0: i64,
    pub y0: i64,
    pub w: usize,
    pub h: usize,
    data: Vec<bool>,
}

impl Mask {
    pub fn new(x0: i64, y0: i64, w: usize, h: usize) -> Self {
        Mask {
            x0,
            y0,
            w,
            h,
            data: vec![false; w * h],
        }
    }

    pub fn empty() -> Self {
        Mask::new(0, 0, 0, 0)
    }

    #[inline]
    pub fn get(&self, x: i64, y: i64) -> bool {
        let lx = x - self.x0;
        let ly = y - self.y0;
        if lx < 0 || ly < 0 || lx >= self.w as i64 || ly >= self.h as i64 {
            return false;
        }
        self.data[ly as usize * self.w + lx as usize]
    }

    #[inline]
    pub fn set(&mut self, x: i64, y: i64, v: bool) {
        let lx = x - self.x0;
        let ly = y - self.y0;
        if lx < 0 || ly < 0 || lx >= self.w as i64 || ly >= self.h as i64 {
            return;
        }
        self.data[ly as usize * self.w + lx as usize] = v;
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|v| **v).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.data.iter().any(|v| *v)
    }

    /// Filled pixel coordinates in row-major order.
    pub fn pixels(&self) -> impl Iterator<Item = (i64, i64)> + '_ {
        self.data.iter().enumerate().filter(|(_, v)| **v).map(move |(i, _)| {
            (
                self.x0 + (i % self.w) as i64,
                self.y0 + (i / self.w) as i64,
            )
        })
    }

    pub fn intersection(&self, o: &Mask) -> Mask {
        let x0 = self.x0.max(o.x0);
        let y0 = self.y0.max(o.y0);
        let x1 = (self.x0 + self.w as i64).min(o.x0 + o.w as i64);
        let y1 = (self.y0 + self.h as i64).min(o.y0 + o.h as i64);
        if x1 <= x0 || y1 <= y0 {
            return Mask::empty();
        }
        let mut m = Mask::new(x0, y0, (x1 - x0) as usize, (y1 - y0) as usize);
        for y in y0..y1 {
            for x in x0..x1 {
                if self.get(x, y) && o.get(x, y) {
                    m.set(x, y, true);
                }
            }
        }
        m
    }

    pub fn intersection_count(&self, o: &Mask) -> usize {
        let x0 = self.x0.max(o.x0);
        let y0 = self.y0.max(o.y0);
        let x1 = (self.x0 + self.w as i64).min(o.x0 + o.w as i64);
        let y1 = (self.y0 + self.h as i64).min(o.y0 + o.h as i64);
        let mut n = 0;
        for y in y0..y1 {
            for x in x0..x1 {
                if self.get(x, y) && o.get(x, y) {
                    n += 1;
                }
            }
        }
        n
    }

    /// Mean of filled pixel centres.
    pub fn centroid(&self) -> Option<Vec2> {
        let mut s = Vec2::ZERO;
        let mut n = 0usize;
        for (x, y) in self.pixels() {
            s += Vec2::new(x as f64 + 0.5, y as f64 + 0.5);
            n += 1;
        }
        (n > 0).then(|| s * (1.0 / n as f64))
    }

    /// Pixels of the mask with at least one 4-neighbour outside it.
    pub fn boundary(&self) -> Vec<(i64, i64)> {
        self.pixels()
            .filter(|&(x, y)| {
                !self.get(x - 1, y) || !self.get(x + 1, y) || !self.get(x, y - 1) || !self.get(x, y + 1)
            })
            .collect()
    }
}

/// Even-odd scanline fill of a set of closed rings, sampled at pixel centres
/// and clipped to a `width × height` canvas.
pub fn fill_rings<R: AsRef<[Vec2]>>(rings: &[R], width: usize, height: usize) -> Mask {
    let mut min_x = f64::INFINITY;
    let mut min_y = f64::INFINITY;
    let mut max_x = f64::NEG_INFINITY;
    let mut max_y = f64::NEG_INFINITY;
    for r in rings {
        for p in r.as_ref() {
            min_x = min_x.min(p.x);
            min_y = min_y.min(p.y);
            max_x = max_x.max(p.x);
            max_y = max_y.max(p.y);
        }
    }
    if !min_x.is_finite() {
        return Mask::empty();
    }
    let x0 = (min_x.floor() as i64).clamp(0, width as i64);
    let y0 = (min_y.floor() as i64).clamp(0, height as i64);
    let x1 = (max_x.ceil() as i64 + 1).clamp(0, width as i64);
    let y1 = (max_y.ceil() as i64 + 1).clamp(0, height as i64);
    if x1 <= x0 || y1 <= y0 {
        return Mask::empty();
    }
    let mut mask = Mask::new(x0, y0, (x1 - x0) as usize, (y1 - y0) as usize);
    let mut xs: Vec<f64> = Vec::new();
    for y in y0..y1 {
        let yc = y as f64 + 0.5;
        xs.clear();
        for r in rings {
            let ring = r.as_ref();
            let n = ring.len();
            for i in 0..n {
                let a = ring[i];
                let b = ring[(i + 1) % n];
                if (a.y <= yc && b.y > yc) || (b.y <= yc && a.y > yc) {
                    xs.push(a.x + (yc - a.y) * (b.x - a.x) / (b.y - a.y));
                }
            }
        }
        xs.sort_by(|a, b| a.total_cmp(b));
        for pair in xs.chunks_exact(2) {
            let start = ((pair[0] - 0.5).ceil() as i64).max(x0);
            let end = ((pair[1] - 0.5).ceil() as i64).min(x1);
            for x in start..end {
                let cur = mask.get(x, y);
                mask.set(x, y, !cur);
            }
        }
    }
    mask
}

/// Row-major 8-bit RGB image.
#[derive(Clone, Debug, PartialEq)]
pub struct RgbImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<u8>,
}

impl RgbImage {
    pub fn filled(width: usize, height: usize, color: Rgb) -> Self {
        let mut data = Vec::with_capacity(width * height * 3);
        for _ in 0..width * height {
            data.extend_from_slice(&color);
        }
        RgbImage {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> Rgb {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    #[inline]
    pub fn put(&mut self, x: usize, y: usize, c: Rgb) {
        let i = (y * self.width + x) * 3;
        self.data[i..i + 3].copy_from_slice(&c);
    }

    pub fn paint(&mut self, mask: &Mask, c: Rgb) {
        for (x, y) in mask.pixels() {
            if x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height {
                self.put(x as usize, y as usize, c);
            }
        }
    }

    pub fn write_png(&self, path: &Path) -> Result<(), Error> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut enc = png::Encoder::new(BufWriter::new(file), self.width as u32, self.height as u32);
        enc.set_color(png::ColorType::Rgb);
        enc.set_depth(png::BitDepth::Eight);
        let mut w = enc.write_header().map_err(|e| Error::Image(e.to_string()))?;
        w.write_image_data(&self.data)
            .map_err(|e| Error::Image(e.to_string()))?;
        Ok(())
    }

    pub fn read_png(path: &Path) -> Result<Self, Error> {
        let img = read_png_raw(path)?;
        let data = match (img.color, img.depth) {
            (png::ColorType::Rgb, png::BitDepth::Eight) => img.buf,
            (png::ColorType::Rgba, png::BitDepth::Eight) => img
                .buf
                .chunks_exact(4)
                .flat_map(|c| [c[0], c[1], c[2]])
                .collect(),
            (png::ColorType::Grayscale, png::BitDepth::Eight) => {
                img.buf.iter().flat_map(|v| [*v, *v, *v]).collect()
            }
            (c, d) => {
                return Err(Error::Image(format!(
                    "{}: unsupported PNG layout {c:?}/{d:?} for an RGB image",
                    path.display()
                )))
            }
        };
        Ok(RgbImage {
            width: img.width,
            height: img.height,
            data,
        })
    }
}

/// Integer-valued label raster, e.g. a segmentation mask.
#[derive(Clone, Debug, PartialEq)]
pub struct LabelRaster {
    pub width: usize,
    pub height: usize,
    pub data: Vec<u32>,
}

impl LabelRaster {
    pub fn new(width: usize, height: usize) -> Self {
        LabelRaster {
            width,
            height,
            data: vec![0; width * height],
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u32 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: u32) {
        self.data[y * self.width + x] = v;
    }

    /// Reads an 8- or 16-bit grayscale PNG.
    pub fn read_png(path: &Path) -> Result<Self, Error> {
        let img = read_png_raw(path)?;
        let data: Vec<u32> = match (img.color, img.depth) {
            (png::ColorType::Grayscale, png::BitDepth::Eight) => {
                img.buf.iter().map(|v| *v as u32).collect()
            }
            (png::ColorType::Grayscale, png::BitDepth::Sixteen) => img
                .buf
                .chunks_exact(2)
                .map(|c| u16::from_be_bytes([c[0], c[1]]) as u32)
                .collect(),
            (c, d) => {
                return Err(Error::Image(format!(
                    "{}: mask must be 8/16-bit grayscale, got {c:?}/{d:?}",
                    path.display()
                )))
            }
        };
        Ok(LabelRaster {
            width: img.width,
            height: img.height,
            data,
        })
    }

    pub fn write_png16(&self, path: &Path) -> Result<(), Error> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut enc = png::Encoder::new(BufWriter::new(file), self.width as u32, self.height as u32);
        enc.set_color(png::ColorType::Grayscale);
        enc.set_depth(png::BitDepth::Sixteen);
        let mut w = enc.write_header().map_err(|e| Error::Image(e.to_string()))?;
        let bytes: Vec<u8> = self
            .data
            .iter()
            .flat_map(|v| (*v as u16).to_be_bytes())
            .collect();
        w.write_image_data(&bytes)
            .map_err(|e| Error::Image(e.to_string()))?;
        Ok(())
    }
}

struct RawPng {
    width: usize,
    height: usize,
    color: png::ColorType,
    depth: png::BitDepth,
    buf: Vec<u8>,
}

fn read_png_raw(path: &Path) -> Result<RawPng, Error> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let decoder = png::Decoder::new(BufReader::new(file));
    let mut reader = decoder
        .read_info()
        .map_err(|e| Error::Image(format!("{}: {e}", path.display())))?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::Image(format!("{}: image too large", path.display())))?;
    let mut buf = vec![0; size];
    let info = reader
        .next_frame(&mut buf)
        .map_err(|e| Error::Image(format!("{}: {e}", path.display())))?;
    buf.truncate(info.buffer_size());
    Ok(RawPng {
        width: info.width as usize,
        height: info.height as usize,
        color: info.color_type,
        depth: info.bit_depth,
        buf,
    })
}
