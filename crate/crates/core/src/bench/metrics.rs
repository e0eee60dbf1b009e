use serde::{Deserialize, Serialize};

use crate::geom::{self, Vec2};
use crate::raster::RgbImage;
use crate::scene::{MotionParams, Scene};
use crate::{Error, Result};

/// Length used to make a chamfer distance relative to the segment's size.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SizeNorm {
    #[default]
    BboxDiagonal,
    SqrtArea,
}

impl std::str::FromStr for SizeNorm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bbox_diagonal" => Ok(SizeNorm::BboxDiagonal),
            "sqrt_area" => Ok(SizeNorm::SqrtArea),
            _ => Err(Error::Config(format!("unknown size norm `{s}`; expected bbox_diagonal or sqrt_area"))),
        }
    }
}

fn mean_nearest(from: &[Vec2], to: &[Vec2]) -> f64 {
    let total: f64 = from
        .iter()
        .map(|p| to.iter().map(|q| p.dist(*q)).fold(f64::INFINITY, f64::min))
        .sum();
    total / from.len() as f64
}

/// Symmetric chamfer distance: the average of both directed mean nearest distances.
pub fn chamfer(a: &[Vec2], b: &[Vec2]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return if a.len() == b.len() { 0.0 } else { f64::INFINITY };
    }
    0.5 * (mean_nearest(a, b) + mean_nearest(b, a))
}

fn size_of(gt: &[Vec2], norm: SizeNorm) -> f64 {
    match norm {
        SizeNorm::BboxDiagonal => geom::bbox(gt).map_or(0.0, |b| b.diagonal()),
        SizeNorm::SqrtArea => geom::signed_area(gt).abs().sqrt(),
    }
}

/// Chamfer distance between boundary samples divided by the size of `gt`.
pub fn chamfer_relative(pred: &[Vec2], gt: &[Vec2], norm: SizeNorm) -> Result<f64> {
    let size = size_of(gt, norm);
    if !(size > 0.0) {
        return Err(Error::Invalid("ground-truth segment has zero size".into()));
    }
    Ok(chamfer(pred, gt) / size)
}

/// Mean relative chamfer over paired segments. Each side lists the boundary
/// samples of one segment; both lists must pair up by index.
pub fn chamfer_segments(pred: &[Vec<Vec2>], gt: &[Vec<Vec2>], norm: SizeNorm) -> Result<f64> {
    if pred.len() != gt.len() {
        return Err(Error::Invalid(format!(
            "cannot pair {} predicted segments with {} ground-truth segments",
            pred.len(),
            gt.len()
        )));
    }
    if pred.is_empty() {
        return Ok(0.0);
    }
    let mut sum = 0.0;
    for (p, g) in pred.iter().zip(gt) {
        sum += chamfer_relative(p, g, norm)?;
    }
    Ok(sum / pred.len() as f64)
}

/// Segments moved by either motion set.
pub fn edited_segments(pred: &[MotionParams], gt: &[MotionParams]) -> Vec<usize> {
    (0..pred.len().min(gt.len()))
        .filter(|&i| !pred[i].is_identity() || !gt[i].is_identity())
        .collect()
}

/// Scene score: mean relative chamfer over the edited segments of one scene
/// under predicted and ground-truth motions. Zero when nothing was edited.
pub fn chamfer_scene(scene: &Scene, pred: &[MotionParams], gt: &[MotionParams], norm: SizeNorm) -> Result<f64> {
    if pred.len() != scene.len() || gt.len() != scene.len() {
        return Err(Error::Invalid(format!(
            "motion sets of {} and {} entries for a scene of {} segments",
            pred.len(),
            gt.len(),
            scene.len()
        )));
    }
    let ids = edited_segments(pred, gt);
    let side = |ms: &[MotionParams]| -> Vec<Vec<Vec2>> {
        ids.iter().map(|&i| ms[i].apply_all(&scene.segments[i].samples)).collect()
    };
    chamfer_segments(&side(pred), &side(gt), norm)
}

/// Mean squared difference over all pixels and channels, values in 0..=255.
pub fn image_mse(a: &RgbImage, b: &RgbImage) -> Result<f64> {
    if a.width != b.width || a.height != b.height {
        return Err(Error::Invalid(format!(
            "image sizes differ: {}x{} vs {}x{}",
            a.width, a.height, b.width, b.height
        )));
    }
    if a.data.is_empty() {
        return Ok(0.0);
    }
    let sum: f64 = a
        .data
        .iter()
        .zip(&b.data)
        .map(|(x, y)| {
            let d = *x as f64 - *y as f64;
            d * d
        })
        .sum();
    Ok(sum / a.data.len() as f64)
}
