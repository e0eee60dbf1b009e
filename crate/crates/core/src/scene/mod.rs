//! Labelled polygon segments, their resampled boundaries, proxies and affine motions.

mod file;
mod mask;
mod motion;
mod proxy;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::geom::{self, BBox, Vec2};
use crate::raster::{self, Mask, Rgb};
use crate::{Error, Result};

pub use file::{load_scene, parse_scene, scene_to_json};
pub use mask::{ingest_mask, ingest_mask_files, parse_label_map};
pub use motion::{apply_motion, load_motions, parse_motions, MotionParams, TransformedSegment};
pub use proxy::{proxy_mask, proxy_points, proxy_segment};

/// Tunables for scene construction.
#[derive(Clone, Debug, PartialEq)]
pub struct SceneConfig {
    /// Arc-length uniform samples per boundary path.
    pub samples_per_path: usize,
    /// Rays shot per grid point when building proxies.
    pub proxy_rays: usize,
    /// Fraction of rays that must hit the segment.
    pub proxy_ratio: f64,
    /// Grid stride in pixels for proxy sample points.
    pub proxy_stride: usize,
}

impl Default for SceneConfig {
    fn default() -> Self {
        SceneConfig {
            samples_per_path: 64,
            proxy_rays: 16,
            proxy_ratio: 0.9,
            proxy_stride: 4,
        }
    }
}

const PALETTE: [Rgb; 8] = [
    [220, 80, 60],
    [60, 120, 200],
    [240, 190, 50],
    [90, 170, 90],
    [150, 90, 180],
    [40, 40, 40],
    [230, 130, 170],
    [120, 200, 210],
];

/// `(Object:Part)` label; `instance` disambiguates repeated objects.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Label {
    pub object: String,
    pub part: String,
    #[serde(default)]
    pub instance: u32,
}

impl Label {
    pub fn new(object: &str, part: &str) -> Self {
        Label {
            object: object.to_string(),
            part: part.to_string(),
            instance: 0,
        }
    }

    /// `object:part` or `object:part#instance`.
    pub fn parse(s: &str) -> Result<Self> {
        let (body, instance) = match s.rsplit_once('#') {
            Some((b, k)) => (
                b,
                k.trim()
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad instance in label `{s}`")))?,
            ),
            None => (s, 0),
        };
        let body = body.trim().trim_start_matches('(').trim_end_matches(')');
        let (object, part) = body
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("label `{s}` must read object:part")))?;
        Ok(Label {
            object: object.trim().to_string(),
            part: part.trim().to_string(),
            instance,
        })
    }

    pub fn same_object(&self, o: &Label) -> bool {
        self.object == o.object && self.instance == o.instance
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}:{})", self.object, self.part)
    }
}

/// Raw segment description before resampling.
#[derive(Clone, Debug)]
pub struct SegmentSpec {
    pub id: usize,
    pub label: Label,
    pub color: Rgb,
    pub z_hint: Option<i64>,
    pub paths: Vec<Vec<Vec2>>,
}

#[derive(Clone, Debug)]
pub struct Segment {
    pub id: usize,
    pub label: Label,
    pub color: Rgb,
    /// Closed outer boundaries in the rest configuration.
    pub paths: Vec<Vec<Vec2>>,
    /// `samples_per_path` points per path, concatenated in path order.
    pub samples: Vec<Vec2>,
    pub samples_per_path: usize,
    /// Interior grid points of the hole-filled proxy.
    pub proxy_samples: Vec<Vec2>,
    pub z_hint: Option<i64>,
    /// Rotation/scale pivot: centroid of the rest boundary samples.
    pub pivot: Vec2,
}

impl Segment {
    /// The sample loop belonging to path `k`.
    pub fn sample_loop(&self, k: usize) -> &[Vec2] {
        &self.samples[k * self.samples_per_path..(k + 1) * self.samples_per_path]
    }

    pub fn loops(&self) -> impl Iterator<Item = &[Vec2]> {
        self.samples.chunks(self.samples_per_path)
    }

    pub fn bbox(&self) -> BBox {
        geom::bbox(&self.samples).expect("segments always have samples")
    }

    /// Rest-configuration raster on a `width × height` canvas.
    pub fn raster(&self, width: usize, height: usize) -> Mask {
        raster::fill_rings(&self.paths, width, height)
    }

    /// True when `p` lies inside any of the outer boundaries (holes filled).
    pub fn contains(&self, p: Vec2) -> bool {
        self.paths.iter().any(|r| geom::point_in_ring(p, r))
    }
}

#[derive(Clone, Debug)]
pub struct Scene {
    pub width: usize,
    pub height: usize,
    pub background: Rgb,
    pub segments: Vec<Segment>,
}

impl Scene {
    /// Validates and resamples raw segment descriptions.
    pub fn from_specs(
        width: usize,
        height: usize,
        background: Rgb,
        mut specs: Vec<SegmentSpec>,
        cfg: &SceneConfig,
    ) -> Result<Scene> {
        if width == 0 || height == 0 {
            return Err(Error::Parse(format!(
                "scene size must be positive, got {width}x{height}"
            )));
        }
        specs.sort_by_key(|s| s.id);
        for w in specs.windows(2) {
            if w[0].id == w[1].id {
                return Err(Error::Parse(format!("duplicate segment id {}", w[0].id)));
            }
        }
        for (i, s) in specs.iter().enumerate() {
            if s.id != i {
                return Err(Error::Parse(format!(
                    "segment ids must be dense from 0; missing id {i}"
                )));
            }
        }
        let segments = specs
            .into_iter()
            .map(|s| build_segment(s, width, height, cfg))
            .collect::<Result<Vec<_>>>()?;
        Ok(Scene {
            width,
            height,
            background,
            segments,
        })
    }

    /// One single-path segment per entry, ids in order. Labels read
    /// `object:part` with an optional `#instance` suffix.
    pub fn from_polygons(width: usize, height: usize, parts: &[(&str, Vec<Vec2>)]) -> Result<Scene> {
        let specs = parts
            .iter()
            .enumerate()
            .map(|(i, (label, ring))| {
                Ok(SegmentSpec {
                    id: i,
                    label: Label::parse(label)?,
                    color: PALETTE[i % PALETTE.len()],
                    z_hint: None,
                    paths: vec![ring.clone()],
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Scene::from_specs(width, height, [255, 255, 255], specs, &SceneConfig::default())
    }

    /// Identity motion for every segment.
    pub fn rest_motions(&self) -> Vec<MotionParams> {
        self.segments.iter().map(|s| MotionParams::identity(s.pivot)).collect()
    }

    pub fn segment(&self, id: usize) -> Option<&Segment> {
        self.segments.get(id)
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }
}

fn clean_path(id: usize, k: usize, raw: &[Vec2]) -> Result<Vec<Vec2>> {
    let mut pts: Vec<Vec2> = Vec::with_capacity(raw.len());
    for p in raw {
        if !p.x.is_finite() || !p.y.is_finite() {
            return Err(Error::Geometry {
                id,
                msg: format!("path {k} has a non-finite coordinate"),
            });
        }
        if pts.last() != Some(p) {
            pts.push(*p);
        }
    }
    while pts.len() > 1 && pts.first() == pts.last() {
        pts.pop();
    }
    if pts.len() < 3 {
        return Err(Error::Geometry {
            id,
            msg: format!("path {k} is open or has fewer than 3 distinct vertices"),
        });
    }
    if geom::signed_area(&pts).abs() < 1e-9 {
        return Err(Error::Geometry {
            id,
            msg: format!("path {k} is degenerate (zero area)"),
        });
    }
    if geom::ring_self_intersects(&pts) {
        return Err(Error::Geometry {
            id,
            msg: format!("path {k} self-intersects"),
        });
    }
    Ok(pts)
}

fn build_segment(spec: SegmentSpec, width: usize, height: usize, cfg: &SceneConfig) -> Result<Segment> {
    if spec.paths.is_empty() {
        return Err(Error::Geometry {
            id: spec.id,
            msg: "segment has no paths".into(),
        });
    }
    let paths = spec
        .paths
        .iter()
        .enumerate()
        .map(|(k, p)| clean_path(spec.id, k, p))
        .collect::<Result<Vec<_>>>()?;
    let n = cfg.samples_per_path.max(3);
    let samples: Vec<Vec2> = paths
        .iter()
        .flat_map(|p| geom::resample_ring(p, n))
        .collect();
    let pivot = geom::centroid(&samples);
    let mut seg = Segment {
        id: spec.id,
        label: spec.label,
        color: spec.color,
        paths,
        samples,
        samples_per_path: n,
        proxy_samples: Vec::new(),
        z_hint: spec.z_hint,
        pivot,
    };
    seg.proxy_samples = proxy_segment(&seg, width, height, cfg.proxy_rays, cfg.proxy_ratio, cfg.proxy_stride);
    Ok(seg)
}

#[cfg(test)]
pub(crate) mod test_util {
    use super::*;

    pub use crate::geom::rect;

    pub fn scene_of(rings: &[Vec<Vec2>]) -> Scene {
        let specs = rings
            .iter()
            .enumerate()
            .map(|(i, r)| SegmentSpec {
                id: i,
                label: Label::new(&format!("obj{i}"), "part"),
                color: [200, 0, 0],
                z_hint: None,
                paths: vec![r.clone()],
            })
            .collect();
        Scene::from_specs(512, 512, [255, 255, 255], specs, &SceneConfig::default()).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::test_util::*;
    use super::*;

    #[test]
    fn one_square_has_64_samples() {
        let s = scene_of(&[rect(0.0, 0.0, 10.0, 10.0)]);
        assert_eq!(s.segments.len(), 1);
        assert_eq!(s.segments[0].samples.len(), 64);
        assert_eq!(s.segments[0].pivot, Vec2::new(5.0, 5.0));
        assert_eq!(s.segments[0].label.to_string(), "(obj0:part)");
    }

    #[test]
    fn degenerate_path_is_rejected() {
        let spec = SegmentSpec {
            id: 0,
            label: Label::new("a", "b"),
            color: [0, 0, 0],
            z_hint: None,
            paths: vec![vec![Vec2::new(0.0, 0.0), Vec2::new(5.0, 0.0), Vec2::new(10.0, 0.0)]],
        };
        let err = Scene::from_specs(64, 64, [0; 3], vec![spec], &SceneConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Geometry { id: 0, .. }), "{err}");
    }

    #[test]
    fn closing_vertex_is_dropped() {
        let mut r = rect(0.0, 0.0, 10.0, 10.0);
        r.push(r[0]);
        let s = scene_of(&[r]);
        assert_eq!(s.segments[0].paths[0].len(), 4);
    }
}
