//! Plain 2D geometry: points, polylines and polygon predicates.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

/// A point or vector in pixel space (origin top-left, y down).
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    #[inline]
    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    #[inline]
    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    #[inline]
    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    #[inline]
    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn dist(self, o: Vec2) -> f64 {
        (self - o).norm()
    }

    pub fn lerp(self, o: Vec2, t: f64) -> Vec2 {
        self + (o - self) * t
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    #[inline]
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl AddAssign for Vec2 {
    #[inline]
    fn add_assign(&mut self, o: Vec2) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    #[inline]
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    #[inline]
    fn mul(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    #[inline]
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

impl From<[f64; 2]> for Vec2 {
    fn from(p: [f64; 2]) -> Self {
        Vec2::new(p[0], p[1])
    }
}

/// Axis-aligned bounding box.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl BBox {
    pub fn width(&self) -> f64 {
        self.max_x - self.min_x
    }

    pub fn height(&self) -> f64 {
        self.max_y - self.min_y
    }

    pub fn diagonal(&self) -> f64 {
        self.width().hypot(self.height())
    }

    pub fn union(&self, o: &BBox) -> BBox {
        BBox {
            min_x: self.min_x.min(o.min_x),
            min_y: self.min_y.min(o.min_y),
            max_x: self.max_x.max(o.max_x),
            max_y: self.max_y.max(o.max_y),
        }
    }

    pub fn translate(&self, t: Vec2) -> BBox {
        BBox {
            min_x: self.min_x + t.x,
            min_y: self.min_y + t.y,
            max_x: self.max_x + t.x,
            max_y: self.max_y + t.y,
        }
    }
}

/// Exact coordinate extrema of a point set, `None` when empty.
/// Axis-aligned rectangle ring `(x0,y0) → (x1,y0) → (x1,y1) → (x0,y1)`.
pub fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Vec<Vec2> {
    vec![Vec2::new(x0, y0), Vec2::new(x1, y0), Vec2::new(x1, y1), Vec2::new(x0, y1)]
}

pub fn bbox(points: &[Vec2]) -> Option<BBox> {
    let first = points.first()?;
    let mut b = BBox {
        min_x: first.x,
        min_y: first.y,
        max_x: first.x,
        max_y: first.y,
    };
    for p in &points[1..] {
        b.min_x = b.min_x.min(p.x);
        b.min_y = b.min_y.min(p.y);
        b.max_x = b.max_x.max(p.x);
        b.max_y = b.max_y.max(p.y);
    }
    Some(b)
}

pub fn centroid(points: &[Vec2]) -> Vec2 {
    if points.is_empty() {
        return Vec2::ZERO;
    }
    let mut s = Vec2::ZERO;
    for p in points {
        s += *p;
    }
    s * (1.0 / points.len() as f64)
}

/// Shoelace area, positive for counter-clockwise loops in math axes.
pub fn signed_area(ring: &[Vec2]) -> f64 {
    let n = ring.len();
    let mut a = 0.0;
    for i in 0..n {
        a += ring[i].cross(ring[(i + 1) % n]);
    }
    0.5 * a
}

pub fn perimeter(ring: &[Vec2]) -> f64 {
    let n = ring.len();
    (0..n).map(|i| ring[i].dist(ring[(i + 1) % n])).sum()
}

/// Even-odd crossing test against a closed ring.
pub fn point_in_ring(p: Vec2, ring: &[Vec2]) -> bool {
    let n = ring.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (ring[i], ring[j]);
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// Closest point on segment `a..b` to `p`, returned as the clamped parameter.
#[inline]
pub fn closest_param(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let d = b - a;
    let len2 = d.norm_sq();
    if len2 <= f64::EPSILON {
        return 0.0;
    }
    ((p - a).dot(d) / len2).clamp(0.0, 1.0)
}

#[inline]
pub fn dist_to_segment_sq(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let u = closest_param(p, a, b);
    (p - a.lerp(b, u)).norm_sq()
}

/// Arc-length uniform resampling of a closed ring into `n` points, starting at vertex 0.
pub fn resample_ring(ring: &[Vec2], n: usize) -> Vec<Vec2> {
    let total = perimeter(ring);
    let m = ring.len();
    if total <= 0.0 || m == 0 {
        return vec![ring.first().copied().unwrap_or_default(); n];
    }
    let step = total / n as f64;
    let mut out = Vec::with_capacity(n);
    let mut edge = 0;
    let mut edge_start = 0.0;
    let mut edge_len = ring[0].dist(ring[1 % m]);
    for k in 0..n {
        let s = k as f64 * step;
        while s > edge_start + edge_len && edge + 1 < m {
            edge_start += edge_len;
            edge += 1;
            edge_len = ring[edge].dist(ring[(edge + 1) % m]);
        }
        let t = if edge_len > 0.0 {
            ((s - edge_start) / edge_len).clamp(0.0, 1.0)
        } else {
            0.0
        };
        out.push(ring[edge].lerp(ring[(edge + 1) % m], t));
    }
    out
}

fn orient(a: Vec2, b: Vec2, c: Vec2) -> f64 {
    (b - a).cross(c - a)
}

fn on_segment(a: Vec2, b: Vec2, p: Vec2) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

/// Closed-segment intersection test, collinear overlaps included.
pub fn segments_intersect(a: Vec2, b: Vec2, c: Vec2, d: Vec2) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(c, d, a))
        || (d2 == 0.0 && on_segment(c, d, b))
        || (d3 == 0.0 && on_segment(a, b, c))
        || (d4 == 0.0 && on_segment(a, b, d))
}

/// True when two non-adjacent edges of the ring touch.
pub fn ring_self_intersects(ring: &[Vec2]) -> bool {
    let n = ring.len();
    if n < 4 {
        return false;
    }
    for i in 0..n {
        let (a, b) = (ring[i], ring[(i + 1) % n]);
        for j in (i + 2)..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            let (c, d) = (ring[j], ring[(j + 1) % n]);
            if segments_intersect(a, b, c, d) {
                return true;
            }
        }
    }
    false
}

/// Drops vertices that lie on the straight line through their neighbours.
pub fn simplify_collinear(ring: &[Vec2]) -> Vec<Vec2> {
    let mut pts: Vec<Vec2> = ring.to_vec();
    loop {
        let n = pts.len();
        if n <= 3 {
            return pts;
        }
        let keep: Vec<bool> = (0..n)
            .map(|i| {
                let prev = pts[(i + n - 1) % n];
                let next = pts[(i + 1) % n];
                orient(prev, pts[i], next).abs() > 1e-9
            })
            .collect();
        if keep.iter().all(|k| *k) {
            return pts;
        }
        // drop one vertex per sweep position so runs collapse safely
        let mut out = Vec::with_capacity(n);
        let mut dropped_prev = false;
        for i in 0..n {
            if !keep[i] && !dropped_prev {
                dropped_prev = true;
                continue;
            }
            dropped_prev = false;
            out.push(pts[i]);
        }
        pts = out;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(x0: f64, y0: f64, s: f64) -> Vec<Vec2> {
        vec![
            Vec2::new(x0, y0),
            Vec2::new(x0 + s, y0),
            Vec2::new(x0 + s, y0 + s),
            Vec2::new(x0, y0 + s),
        ]
    }

    #[test]
    fn bbox_cases() {
        assert!(bbox(&[]).is_none());
        let b = bbox(&[Vec2::new(3.0, 4.0)]).unwrap();
        assert_eq!((b.min_x, b.min_y, b.max_x, b.max_y), (3.0, 4.0, 3.0, 4.0));
        let mut pts = square(0.0, 0.0, 10.0);
        pts.extend(square(20.0, 0.0, 10.0));
        let b = bbox(&pts).unwrap();
        assert_eq!((b.min_x, b.min_y, b.max_x, b.max_y), (0.0, 0.0, 30.0, 10.0));
    }

    #[test]
    fn resample_square_hits_corners() {
        let s = resample_ring(&square(0.0, 0.0, 10.0), 64);
        assert_eq!(s.len(), 64);
        assert_eq!(s[0], Vec2::new(0.0, 0.0));
        assert!((s[16] - Vec2::new(10.0, 0.0)).norm() < 1e-12);
        assert!((s[32] - Vec2::new(10.0, 10.0)).norm() < 1e-12);
        for w in s.windows(2) {
            assert!((w[0].dist(w[1]) - 0.625).abs() < 1e-9);
        }
    }

    #[test]
    fn ring_predicates() {
        let sq = square(0.0, 0.0, 10.0);
        assert!(point_in_ring(Vec2::new(5.0, 5.0), &sq));
        assert!(!point_in_ring(Vec2::new(15.0, 5.0), &sq));
        assert!(!ring_self_intersects(&sq));
        let bow = vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(10.0, 10.0),
            Vec2::new(10.0, 0.0),
            Vec2::new(0.0, 10.0),
        ];
        assert!(ring_self_intersects(&bow));
        assert_eq!(signed_area(&sq), 100.0);
    }

    #[test]
    fn collinear_runs_collapse() {
        let ring = vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(2.0, 0.0),
            Vec2::new(3.0, 0.0),
            Vec2::new(3.0, 3.0),
            Vec2::new(0.0, 3.0),
            Vec2::new(0.0, 1.0),
        ];
        let s = simplify_collinear(&ring);
        assert_eq!(s.len(), 4);
    }
}
