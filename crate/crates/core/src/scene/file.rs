use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Label, Scene, SceneConfig, SegmentSpec};
use crate::geom::Vec2;
use crate::raster::Rgb;
use crate::{Error, Result};

fn default_size() -> usize {
    512
}

fn default_background() -> Rgb {
    [255, 255, 255]
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SceneDoc {
    #[serde(default = "default_size")]
    width: usize,
    #[serde(default = "default_size")]
    height: usize,
    #[serde(default = "default_background")]
    background: Rgb,
    segments: Vec<SegmentDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SegmentDoc {
    id: usize,
    label: Label,
    color: Rgb,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    z: Option<i64>,
    paths: Vec<Vec<[f64; 2]>>,
}

/// Parses a scene document from JSON text.
pub fn parse_scene(text: &str, cfg: &SceneConfig) -> Result<Scene> {
    let doc: SceneDoc = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let specs = doc
        .segments
        .into_iter()
        .map(|s| SegmentSpec {
            id: s.id,
            label: s.label,
            color: s.color,
            z_hint: s.z,
            paths: s
                .paths
                .into_iter()
                .map(|p| p.into_iter().map(Vec2::from).collect())
                .collect(),
        })
        .collect();
    Scene::from_specs(doc.width, doc.height, doc.background, specs, cfg)
}

pub fn load_scene(path: &Path, cfg: &SceneConfig) -> Result<Scene> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_scene(&text, cfg).map_err(|e| match e {
        Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
        other => other,
    })
}

/// Serializes the rest geometry of a scene back into the document format.
pub fn scene_to_json(scene: &Scene) -> String {
    let doc = SceneDoc {
        width: scene.width,
        height: scene.height,
        background: scene.background,
        segments: scene
            .segments
            .iter()
            .map(|s| SegmentDoc {
                id: s.id,
                label: s.label.clone(),
                color: s.color,
                z: s.z_hint,
                paths: s
                    .paths
                    .iter()
                    .map(|p| p.iter().map(|v| [v.x, v.y]).collect())
                    .collect(),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("scene documents always serialize")
}
