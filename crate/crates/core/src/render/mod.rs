//! Depth ordering of edited segments, raster output and SVG export.

mod depth;
mod svg;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::geom::Vec2;
use crate::par::{self, Exec};
use crate::raster::{fill_rings, Mask, RgbImage};
use crate::scene::{MotionParams, Scene};
use crate::{Error, Result};

pub use depth::{
    depth_order_pair, depth_sort, farthest_point_sample, longest_inner_path, DepthConfig, DepthOrder, Verdict,
};
pub use svg::export_svg;

/// Where pairwise depth verdicts come from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OrderMode {
    /// Verdicts measured on the edited configuration.
    #[default]
    Auto,
    /// No verdicts: z-hint then id.
    Input,
    /// Verdicts measured on the rest configuration.
    InitialConfig,
}

impl std::str::FromStr for OrderMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(OrderMode::Auto),
            "input" => Ok(OrderMode::Input),
            "initial-config" | "initial" => Ok(OrderMode::InitialConfig),
            _ => Err(Error::Config(format!(
                "unknown order mode `{s}`; expected auto, input or initial-config"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RenderConfig {
    pub depth: DepthConfig,
    pub order_mode: OrderMode,
    pub exec: Exec,
}

fn check_motions(scene: &Scene, motions: &[MotionParams]) -> Result<()> {
    if motions.len() != scene.len() {
        return Err(Error::Invalid(format!(
            "{} motions given for a scene of {} segments",
            motions.len(),
            scene.len()
        )));
    }
    Ok(())
}

fn transformed_paths(scene: &Scene, motions: &[MotionParams], id: usize) -> Vec<Vec<Vec2>> {
    scene.segments[id].paths.iter().map(|p| motions[id].apply_all(p)).collect()
}

/// Canvas rasters of every segment under `motions`.
pub fn segment_rasters(scene: &Scene, motions: &[MotionParams], exec: Exec) -> Vec<Mask> {
    let ids: Vec<usize> = (0..scene.len()).collect();
    par::map(exec, &ids, |&i| fill_rings(&transformed_paths(scene, motions, i), scene.width, scene.height))
}

/// Verdicts for every pair of segments whose rasters meet.
pub fn pairwise_verdicts(rasters: &[Mask], cfg: &DepthConfig, exec: Exec) -> BTreeMap<(usize, usize), Verdict> {
    let n = rasters.len();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .filter(|&(i, j)| rasters[i].intersection_count(&rasters[j]) > 0)
        .collect();
    let verdicts = par::map(exec, &pairs, |&(i, j)| depth_order_pair(&rasters[i], &rasters[j], cfg));
    pairs.into_iter().zip(verdicts).collect()
}

/// Drawing order for `motions` under the configured mode.
pub fn depth_order(scene: &Scene, motions: &[MotionParams], cfg: &RenderConfig) -> Result<DepthOrder> {
    check_motions(scene, motions)?;
    let hints: Vec<Option<i64>> = scene.segments.iter().map(|s| s.z_hint).collect();
    let verdicts = match cfg.order_mode {
        OrderMode::Input => BTreeMap::new(),
        OrderMode::Auto => pairwise_verdicts(&segment_rasters(scene, motions, cfg.exec), &cfg.depth, cfg.exec),
        OrderMode::InitialConfig => pairwise_verdicts(
            &segment_rasters(scene, &scene.rest_motions(), cfg.exec),
            &cfg.depth,
            cfg.exec,
        ),
    };
    Ok(depth_sort(&hints, &verdicts))
}

/// Paints the background, then each segment back to front with an even-odd
/// fill of its transformed paths. `size` rescales the canvas.
pub fn rasterize(
    scene: &Scene,
    motions: &[MotionParams],
    order: &DepthOrder,
    size: Option<(usize, usize)>,
) -> Result<RgbImage> {
    check_motions(scene, motions)?;
    if !order.is_permutation(scene.len()) {
        return Err(Error::Invalid("depth order is not a permutation of the segment ids".into()));
    }
    let (w, h) = size.unwrap_or((scene.width, scene.height));
    if w == 0 || h == 0 {
        return Err(Error::Invalid(format!("output size must be positive, got {w}x{h}")));
    }
    let (kx, ky) = (w as f64 / scene.width as f64, h as f64 / scene.height as f64);
    let mut img = RgbImage::filled(w, h, scene.background);
    for &id in &order.order {
        let paths: Vec<Vec<Vec2>> = transformed_paths(scene, motions, id)
            .into_iter()
            .map(|p| p.into_iter().map(|q| Vec2::new(q.x * kx, q.y * ky)).collect())
            .collect();
        img.paint(&fill_rings(&paths, w, h), scene.segments[id].color);
    }
    Ok(img)
}

#[cfg(test)]
mod tests;
