//! Small built-in scenes used by tests, benches and the demo commands.

use crate::geom::{rect, Vec2};
use crate::scene::Scene;

fn build(parts: &[(&str, Vec<Vec2>)]) -> Scene {
    Scene::from_polygons(512, 512, parts).expect("built-in fixture is valid")
}

/// Regular polygon approximating a disk.
pub fn disk(cx: f64, cy: f64, r: f64, n: usize) -> Vec<Vec2> {
    (0..n)
        .map(|k| {
            let a = std::f64::consts::TAU * k as f64 / n as f64;
            Vec2::new(cx + r * a.cos(), cy + r * a.sin())
        })
        .collect()
}

/// Desk lamp of five chained parts plus two unrelated segments.
///
/// ids: 0 base, 1 pole, 2 arm, 3 shade, 4 finial, 5 sofa, 6 star.
pub fn lamp() -> Scene {
    build(&[
        ("lamp:base", rect(200.0, 400.0, 280.0, 420.0)),
        ("lamp:pole", rect(235.0, 250.0, 245.0, 402.0)),
        ("lamp:arm", rect(235.0, 244.0, 300.0, 254.0)),
        ("lamp:shade", rect(284.0, 240.0, 344.0, 290.0)),
        ("lamp:finial", rect(309.0, 226.0, 319.0, 242.0)),
        ("sofa:sofa", rect(40.0, 60.0, 160.0, 120.0)),
        ("deco:star", disk(440.0, 80.0, 20.0, 10)),
    ])
}

/// Basket body with two handles that overlap each other. ids: 0 body, 1 and 2 handles.
pub fn basket() -> Scene {
    build(&[
        ("basket:body", rect(180.0, 260.0, 340.0, 340.0)),
        ("basket:handle", rect(190.0, 200.0, 264.0, 264.0)),
        ("basket:handle", rect(256.0, 200.0, 330.0, 264.0)),
    ])
}

/// Pole standing on a base, shade on top. ids: 0 base, 1 pole, 2 shade.
pub fn pole_lamp() -> Scene {
    build(&[
        ("lamp:base", rect(220.0, 400.0, 300.0, 420.0)),
        ("lamp:pole", rect(255.0, 300.0, 265.0, 402.0)),
        ("lamp:shade", rect(230.0, 260.0, 290.0, 302.0)),
    ])
}

/// Five-part lamp listed shade first. ids: 0 shade, 1 arm connector,
/// 2 arm connector, 3 base connector, 4 base.
pub fn toy_lamp() -> Scene {
    build(&[
        ("lamp:shade", rect(260.0, 80.0, 380.0, 170.0)),
        ("lamp:arm connector", rect(200.0, 120.0, 300.0, 140.0)),
        ("lamp:arm connector", rect(190.0, 130.0, 210.0, 300.0)),
        ("lamp:base connector", rect(180.0, 290.0, 220.0, 320.0)),
        ("lamp:base", rect(130.0, 310.0, 270.0, 350.0)),
    ])
}
