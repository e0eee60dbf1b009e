use std::fmt::Write;

use super::{check_motions, transformed_paths, DepthOrder};
use crate::raster::Rgb;
use crate::scene::{MotionParams, Scene};
use crate::{Error, Result};

fn hex(c: Rgb) -> String {
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

/// SVG 1.1 document: a background rectangle, then one even-odd filled path
/// per segment in back-to-front order.
pub fn export_svg(scene: &Scene, motions: &[MotionParams], order: &DepthOrder) -> Result<String> {
    check_motions(scene, motions)?;
    if !order.is_permutation(scene.len()) {
        return Err(Error::Invalid("depth order is not a permutation of the segment ids".into()));
    }
    let mut out = String::new();
    let (w, h) = (scene.width, scene.height);
    writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#).unwrap();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    )
    .unwrap();
    writeln!(out, r#"  <rect x="0" y="0" width="{w}" height="{h}" fill="{}"/>"#, hex(scene.background)).unwrap();
    for &id in &order.order {
        let seg = &scene.segments[id];
        let mut d = String::new();
        for path in transformed_paths(scene, motions, id) {
            for (k, p) in path.iter().enumerate() {
                let cmd = if k == 0 { "M" } else { " L" };
                write!(d, "{cmd}{:.3} {:.3}", p.x, p.y).unwrap();
            }
            d.push_str(" Z ");
        }
        writeln!(
            out,
            r#"  <path id="seg{id}" data-label="{}" d="{}" fill="{}" fill-rule="evenodd"/>"#,
            xml_escape(&seg.label.to_string()),
            d.trim_end(),
            hex(seg.color)
        )
        .unwrap();
    }
    out.push_str("</svg>\n");
    Ok(out)
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}
