use log::warn;

use super::Segment;
use crate::geom::Vec2;
use crate::raster::Mask;

/// Fraction test for one pixel: do at least `ratio · rays` evenly spaced rays
/// starting at the pixel centre run into a filled pixel of `mask`?
fn majority_hit(mask: &Mask, x: i64, y: i64, rays: usize, ratio: f64) -> bool {
    if mask.get(x, y) {
        return true;
    }
    let need = ratio * rays as f64;
    let x_lo = mask.x0 as f64;
    let y_lo = mask.y0 as f64;
    let x_hi = (mask.x0 + mask.w as i64) as f64;
    let y_hi = (mask.y0 + mask.h as i64) as f64;
    let origin = Vec2::new(x as f64 + 0.5, y as f64 + 0.5);
    let mut hits = 0usize;
    for k in 0..rays {
        let a = std::f64::consts::TAU * k as f64 / rays as f64;
        let dir = Vec2::new(a.cos(), a.sin()) * 0.5;
        let mut p = origin;
        loop {
            p += dir;
            if p.x < x_lo || p.y < y_lo || p.x >= x_hi || p.y >= y_hi {
                break;
            }
            if mask.get(p.x.floor() as i64, p.y.floor() as i64) {
                hits += 1;
                break;
            }
        }
        // early exit once the outcome is decided
        let remaining = (rays - k - 1) as f64;
        if hits as f64 >= need || (hits as f64 + remaining) < need {
            break;
        }
    }
    hits as f64 >= need
}

/// Grid pixels (global coordinates, aligned to multiples of `stride`) inside
/// the mask window that pass the ray-majority test.
pub fn proxy_points(mask: &Mask, rays: usize, ratio: f64, stride: usize) -> Vec<(i64, i64)> {
    let stride = stride.max(1) as i64;
    let mut out = Vec::new();
    let gx0 = mask.x0.div_euclid(stride) * stride + if mask.x0.rem_euclid(stride) == 0 { 0 } else { stride };
    let gy0 = mask.y0.div_euclid(stride) * stride + if mask.y0.rem_euclid(stride) == 0 { 0 } else { stride };
    let mut y = gy0;
    while y < mask.y0 + mask.h as i64 {
        let mut x = gx0;
        while x < mask.x0 + mask.w as i64 {
            if majority_hit(mask, x, y, rays, ratio) {
                out.push((x, y));
            }
            x += stride;
        }
        y += stride;
    }
    out
}

/// Full-resolution proxy raster: the mask plus every pixel passing the ray test.
pub fn proxy_mask(mask: &Mask, rays: usize, ratio: f64) -> Mask {
    let mut out = Mask::new(mask.x0, mask.y0, mask.w, mask.h);
    for (x, y) in proxy_points(mask, rays, ratio, 1) {
        out.set(x, y, true);
    }
    out
}

/// Interior grid points of the hole-filled proxy of `seg`, as pixel centres.
/// Falls back to the boundary samples when the grid misses the segment.
pub fn proxy_segment(
    seg: &Segment,
    width: usize,
    height: usize,
    rays: usize,
    ratio: f64,
    stride: usize,
) -> Vec<Vec2> {
    let mask = seg.raster(width, height);
    let pts: Vec<Vec2> = proxy_points(&mask, rays.max(8), ratio, stride)
        .into_iter()
        .map(|(x, y)| Vec2::new(x as f64 + 0.5, y as f64 + 0.5))
        .collect();
    if pts.is_empty() {
        warn!(
            "segment {} is thinner than the proxy grid stride; using boundary samples",
            seg.id
        );
        return seg.samples.clone();
    }
    pts
}
