use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::path::Path;

use log::warn;

use super::{Label, Scene, SceneConfig, SegmentSpec};
use crate::geom::{self, Vec2};
use crate::raster::{LabelRaster, Mask, RgbImage};
use crate::{Error, Result};

const MIN_COMPONENT_PX: usize = 4;

/// Parses a label-map sidecar: one `value: Object:Part` (or `value=Object:Part`)
/// per line, `#` comments allowed.
pub fn parse_label_map(text: &str) -> Result<BTreeMap<u32, Label>> {
    let mut out = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let bad = || Error::Parse(format!("label map line {}: expected `value: Object:Part`", n + 1));
        let (value, label) = line.split_once([':', '=']).ok_or_else(bad)?;
        let value: u32 = value.trim().parse().map_err(|_| bad())?;
        let label = label.trim().trim_start_matches('(').trim_end_matches(')');
        let (object, part) = label.split_once(':').ok_or_else(bad)?;
        out.insert(value, Label::new(object.trim(), part.trim()));
    }
    Ok(out)
}

/// Converts a segmentation mask plus its RGB image into a scene.
///
/// Each 4-connected component of a nonzero mask value becomes one segment whose
/// single path is the component's outer contour (holes dropped). Components of the
/// same value share the label and are numbered by `instance`.
pub fn ingest_mask(
    mask: &LabelRaster,
    image: &RgbImage,
    labels: &BTreeMap<u32, Label>,
    cfg: &SceneConfig,
) -> Result<Scene> {
    if mask.width != image.width || mask.height != image.height {
        return Err(Error::Invalid(format!(
            "mask is {}x{} but image is {}x{}",
            mask.width, mask.height, image.width, image.height
        )));
    }
    let values: BTreeSet<u32> = mask.data.iter().copied().filter(|v| *v != 0).collect();
    let missing: Vec<String> = values
        .iter()
        .filter(|v| !labels.contains_key(v))
        .map(|v| v.to_string())
        .collect();
    if !missing.is_empty() {
        return Err(Error::Invalid(format!(
            "mask values without labels: {}",
            missing.join(", ")
        )));
    }

    let comps = components(mask);
    let mut specs = Vec::new();
    let mut instance: HashMap<u32, u32> = HashMap::new();
    for value in values {
        for comp in comps.iter().filter(|c| c.value == value) {
            if comp.pixels.len() < MIN_COMPONENT_PX {
                warn!(
                    "mask value {value}: skipping component of {} px at ({}, {})",
                    comp.pixels.len(),
                    comp.pixels[0].0,
                    comp.pixels[0].1
                );
                continue;
            }
            let inst = instance.entry(value).or_insert(0);
            let mut label = labels[&value].clone();
            label.instance = *inst;
            *inst += 1;

            let mut sum = [0u64; 3];
            for &(x, y) in &comp.pixels {
                let c = image.get(x, y);
                for k in 0..3 {
                    sum[k] += c[k] as u64;
                }
            }
            let n = comp.pixels.len() as u64;
            let color = [
                ((sum[0] + n / 2) / n) as u8,
                ((sum[1] + n / 2) / n) as u8,
                ((sum[2] + n / 2) / n) as u8,
            ];
            let filled = fill_holes(&comp.pixels);
            let contour = geom::simplify_collinear(&trace_outer(&filled));
            specs.push(SegmentSpec {
                id: specs.len(),
                label,
                color,
                z_hint: None,
                paths: vec![contour],
            });
        }
    }
    Scene::from_specs(mask.width, mask.height, [255, 255, 255], specs, cfg)
}

/// Reads the mask PNG, RGB PNG and label-map sidecar from disk.
pub fn ingest_mask_files(mask: &Path, image: &Path, labels: &Path, cfg: &SceneConfig) -> Result<Scene> {
    let m = LabelRaster::read_png(mask)?;
    let img = RgbImage::read_png(image)?;
    let text = std::fs::read_to_string(labels).map_err(|e| Error::io(labels, e))?;
    ingest_mask(&m, &img, &parse_label_map(&text)?, cfg)
}

struct Component {
    value: u32,
    pixels: Vec<(usize, usize)>,
}

/// 4-connected components in scan order of their first pixel.
fn components(mask: &LabelRaster) -> Vec<Component> {
    let (w, h) = (mask.width, mask.height);
    let mut seen = vec![false; w * h];
    let mut out = Vec::new();
    let mut queue = VecDeque::new();
    for y0 in 0..h {
        for x0 in 0..w {
            let v = mask.get(x0, y0);
            if v == 0 || seen[y0 * w + x0] {
                continue;
            }
            let mut pixels = Vec::new();
            seen[y0 * w + x0] = true;
            queue.push_back((x0, y0));
            while let Some((x, y)) = queue.pop_front() {
                pixels.push((x, y));
                let mut visit = |nx: usize, ny: usize| {
                    if mask.get(nx, ny) == v && !seen[ny * w + nx] {
                        seen[ny * w + nx] = true;
                        queue.push_back((nx, ny));
                    }
                };
                if x > 0 {
                    visit(x - 1, y);
                }
                if x + 1 < w {
                    visit(x + 1, y);
                }
                if y > 0 {
                    visit(x, y - 1);
                }
                if y + 1 < h {
                    visit(x, y + 1);
                }
            }
            pixels.sort_by_key(|&(x, y)| (y, x));
            out.push(Component { value: v, pixels });
        }
    }
    out
}

/// Component pixels plus everything the outside cannot reach 4-connectedly.
fn fill_holes(pixels: &[(usize, usize)]) -> Mask {
    let min_x = pixels.iter().map(|p| p.0).min().unwrap() as i64 - 1;
    let min_y = pixels.iter().map(|p| p.1).min().unwrap() as i64 - 1;
    let max_x = pixels.iter().map(|p| p.0).max().unwrap() as i64 + 1;
    let max_y = pixels.iter().map(|p| p.1).max().unwrap() as i64 + 1;
    let w = (max_x - min_x + 1) as usize;
    let h = (max_y - min_y + 1) as usize;
    let mut solid = Mask::new(min_x, min_y, w, h);
    for &(x, y) in pixels {
        solid.set(x as i64, y as i64, true);
    }
    let mut outside = Mask::new(min_x, min_y, w, h);
    let mut queue = VecDeque::from([(min_x, min_y)]);
    outside.set(min_x, min_y, true);
    while let Some((x, y)) = queue.pop_front() {
        for (nx, ny) in [(x - 1, y), (x + 1, y), (x, y - 1), (x, y + 1)] {
            if nx < min_x || ny < min_y || nx > max_x || ny > max_y {
                continue;
            }
            if !solid.get(nx, ny) && !outside.get(nx, ny) {
                outside.set(nx, ny, true);
                queue.push_back((nx, ny));
            }
        }
    }
    let mut filled = Mask::new(min_x, min_y, w, h);
    for y in min_y..=max_y {
        for x in min_x..=max_x {
            if !outside.get(x, y) {
                filled.set(x, y, true);
            }
        }
    }
    filled
}

/// Crack-following trace of the outer boundary along pixel edges.
fn trace_outer(filled: &Mask) -> Vec<Vec2> {
    let mut next: HashMap<(i64, i64), Vec<(i64, i64)>> = HashMap::new();
    let mut start = None;
    for (x, y) in filled.pixels() {
        let mut add = |a: (i64, i64), b: (i64, i64)| {
            next.entry(a).or_default().push(b);
            if start.is_none() {
                start = Some(a);
            }
        };
        if !filled.get(x, y - 1) {
            add((x, y), (x + 1, y));
        }
        if !filled.get(x + 1, y) {
            add((x + 1, y), (x + 1, y + 1));
        }
        if !filled.get(x, y + 1) {
            add((x + 1, y + 1), (x, y + 1));
        }
        if !filled.get(x - 1, y) {
            add((x, y + 1), (x, y));
        }
    }
    let start = start.expect("non-empty component");
    let mut out = vec![start];
    let mut prev = start;
    let mut cur = next[&start][0];
    while cur != start {
        out.push(cur);
        let outs = next.get_mut(&cur).expect("closed boundary");
        let pick = if outs.len() == 1 {
            0
        } else {
            // pinch vertex: keep turning the same way
            let din = (cur.0 - prev.0, cur.1 - prev.1);
            outs.iter()
                .position(|o| (o.0 - cur.0, o.1 - cur.1) == (-din.1, din.0))
                .unwrap_or(0)
        };
        let nxt = outs.remove(pick);
        prev = cur;
        cur = nxt;
    }
    out.into_iter()
        .map(|(x, y)| Vec2::new(x as f64, y as f64))
        .collect()
}
