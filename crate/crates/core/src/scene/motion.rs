use serde::{Deserialize, Serialize};

use std::path::Path;

use super::{Scene, Segment};
use crate::geom::Vec2;
use crate::{Error, Result};

/// Per-segment affine motion: `p' = t + R(theta)·diag(sx, sy)·(p − pivot) + pivot`.
///
/// `theta` is in degrees, counter-clockwise in math axes (clockwise on screen).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MotionParams {
    pub tx: f64,
    pub ty: f64,
    #[serde(rename = "theta_deg")]
    pub theta: f64,
    pub sx: f64,
    pub sy: f64,
    pub pivot: Vec2,
}

impl MotionParams {
    pub const MIN_SCALE: f64 = 0.05;
    pub const MAX_SCALE: f64 = 20.0;

    pub fn identity(pivot: Vec2) -> Self {
        MotionParams {
            tx: 0.0,
            ty: 0.0,
            theta: 0.0,
            sx: 1.0,
            sy: 1.0,
            pivot,
        }
    }

    pub fn translation(tx: f64, ty: f64, pivot: Vec2) -> Self {
        MotionParams {
            tx,
            ty,
            ..Self::identity(pivot)
        }
    }

    pub fn is_identity(&self) -> bool {
        self.tx == 0.0 && self.ty == 0.0 && self.is_pure_translation()
    }

    pub fn is_pure_translation(&self) -> bool {
        self.theta == 0.0 && self.sx == 1.0 && self.sy == 1.0
    }

    #[inline]
    pub fn apply(&self, p: Vec2) -> Vec2 {
        if self.is_pure_translation() {
            if self.tx == 0.0 && self.ty == 0.0 {
                return p;
            }
            return Vec2::new(p.x + self.tx, p.y + self.ty);
        }
        let (s, c) = self.theta.to_radians().sin_cos();
        let dx = (p.x - self.pivot.x) * self.sx;
        let dy = (p.y - self.pivot.y) * self.sy;
        Vec2::new(
            self.tx + c * dx - s * dy + self.pivot.x,
            self.ty + s * dx + c * dy + self.pivot.y,
        )
    }

    pub fn apply_all(&self, pts: &[Vec2]) -> Vec<Vec2> {
        pts.iter().map(|p| self.apply(*p)).collect()
    }
}

/// Point sets of a segment after a motion.
#[derive(Clone, Debug, PartialEq)]
pub struct TransformedSegment {
    pub paths: Vec<Vec<Vec2>>,
    pub samples: Vec<Vec2>,
    pub proxy_samples: Vec<Vec2>,
}

pub fn apply_motion(seg: &Segment, m: &MotionParams) -> TransformedSegment {
    TransformedSegment {
        paths: seg.paths.iter().map(|p| m.apply_all(p)).collect(),
        samples: m.apply_all(&seg.samples),
        proxy_samples: m.apply_all(&seg.proxy_samples),
    }
}

#[derive(Deserialize)]
struct MotionDoc {
    #[serde(default)]
    tx: f64,
    #[serde(default)]
    ty: f64,
    #[serde(default, rename = "theta_deg")]
    theta: f64,
    #[serde(default = "one")]
    sx: f64,
    #[serde(default = "one")]
    sy: f64,
    pivot: Option<Vec2>,
}

fn one() -> f64 {
    1.0
}

#[derive(Deserialize)]
#[serde(untagged)]
enum MotionsDoc {
    Bare(Vec<MotionDoc>),
    Wrapped { motions: Vec<MotionDoc> },
}

/// Reads per-segment motions: a JSON array or an object with a `motions`
/// array (as written by `solve`). Omitted fields default to the identity and
/// an omitted pivot to the segment's own.
pub fn parse_motions(text: &str, scene: &Scene) -> Result<Vec<MotionParams>> {
    let doc: MotionsDoc = serde_json::from_str(text).map_err(|e| Error::Parse(format!("motions: {e}")))?;
    let (MotionsDoc::Bare(list) | MotionsDoc::Wrapped { motions: list }) = doc;
    if list.len() != scene.len() {
        return Err(Error::Invalid(format!(
            "motions list has {} entries but the scene has {} segments",
            list.len(),
            scene.len()
        )));
    }
    list.into_iter()
        .zip(&scene.segments)
        .map(|(m, seg)| {
            let p = MotionParams {
                tx: m.tx,
                ty: m.ty,
                theta: m.theta,
                sx: m.sx,
                sy: m.sy,
                pivot: m.pivot.unwrap_or(seg.pivot),
            };
            let finite = [p.tx, p.ty, p.theta, p.sx, p.sy, p.pivot.x, p.pivot.y].iter().all(|v| v.is_finite());
            if !finite || p.sx <= 0.0 || p.sy <= 0.0 {
                return Err(Error::Invalid(format!("seg{}: motion must be finite with positive scales", seg.id)));
            }
            Ok(p)
        })
        .collect()
}

pub fn load_motions(path: &Path, scene: &Scene) -> Result<Vec<MotionParams>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_motions(&text, scene).map_err(|e| match e {
        Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
        Error::Invalid(m) => Error::Invalid(format!("{}: {m}", path.display())),
        other => other,
    })
}
