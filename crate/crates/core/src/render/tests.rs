use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};

use proptest::prelude::*;

use super::*;
use crate::fixtures::{self, disk};
use crate::geom::rect;
use crate::raster::{LabelRaster, Rgb};
use crate::scene::{ingest_mask, Label, SceneConfig};

/// Rectangle with a half-disk bite of radius `r` taken out of its top edge at `cx`.
fn notched(x0: f64, y0: f64, x1: f64, y1: f64, cx: f64, r: f64) -> Vec<Vec2> {
    let mut pts = vec![Vec2::new(x0, y0), Vec2::new(cx - r, y0)];
    for k in 1..48 {
        let a = std::f64::consts::PI * (1.0 - k as f64 / 48.0);
        pts.push(Vec2::new(cx + r * a.cos(), y0 + r * a.sin()));
    }
    pts.extend([Vec2::new(cx + r, y0), Vec2::new(x1, y0), Vec2::new(x1, y1), Vec2::new(x0, y1)]);
    pts
}

fn bite_scene() -> Scene {
    Scene::from_polygons(
        512,
        512,
        &[
            ("box:body", notched(100.0, 200.0, 300.0, 300.0, 200.0, 40.0)),
            ("ball:ball", disk(200.0, 200.0, 48.0, 96)),
        ],
    )
    .unwrap()
}

/// Exhaustive reference: every boundary pixel pair, plain hash-set BFS.
fn oracle(ri: &Mask, rj: &Mask) -> Verdict {
    let set = |m: &Mask| m.pixels().collect::<HashSet<_>>();
    let (si, sj) = (set(ri), set(rj));
    let inter: HashSet<(i64, i64)> = si.intersection(&sj).copied().collect();
    let bnd: Vec<(i64, i64)> = inter
        .iter()
        .copied()
        .filter(|&(x, y)| [(x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)].iter().any(|p| !inter.contains(p)))
        .collect();
    let longest = |s: &HashSet<(i64, i64)>| {
        let mut best = 0;
        for &src in &bnd {
            let mut dist = HashMap::from([(src, 0u32)]);
            let mut q = VecDeque::from([src]);
            while let Some(p) = q.pop_front() {
                let d = dist[&p];
                for n in [(p.0 + 1, p.1), (p.0 - 1, p.1), (p.0, p.1 + 1), (p.0, p.1 - 1)] {
                    if s.contains(&n) && !dist.contains_key(&n) {
                        dist.insert(n, d + 1);
                        q.push_back(n);
                    }
                }
            }
            best = bnd.iter().filter_map(|e| dist.get(e)).fold(best, |b, d| b.max(*d));
        }
        best as f64
    };
    if bnd.is_empty() {
        return Verdict::Undetermined;
    }
    let (li, lj) = (longest(&si), longest(&sj));
    if (li - lj).abs() <= 0.1 * li.max(lj) {
        Verdict::Undetermined
    } else if li < lj {
        Verdict::IFront
    } else {
        Verdict::JFront
    }
}

fn rasters(s: &Scene) -> Vec<Mask> {
    segment_rasters(s, &s.rest_motions(), Exec::Sequential)
}

#[test]
fn disk_in_a_notch_is_in_front() {
    let s = bite_scene();
    let r = rasters(&s);
    let cfg = DepthConfig::default();
    assert_eq!(depth_order_pair(&r[1], &r[0], &cfg), Verdict::IFront);
    assert_eq!(depth_order_pair(&r[0], &r[1], &cfg), Verdict::JFront);
    assert_eq!(oracle(&r[1], &r[0]), Verdict::IFront);
    let order = depth_order(&s, &s.rest_motions(), &RenderConfig::default()).unwrap();
    assert_eq!(order.order, vec![0, 1]);
}

#[test]
fn identical_and_disjoint_are_undetermined() {
    let s = Scene::from_polygons(
        512,
        512,
        &[
            ("a:a", rect(10.0, 10.0, 60.0, 60.0)),
            ("b:b", rect(10.0, 10.0, 60.0, 60.0)),
            ("c:c", rect(200.0, 200.0, 240.0, 240.0)),
        ],
    )
    .unwrap();
    let r = rasters(&s);
    let cfg = DepthConfig::default();
    assert_eq!(depth_order_pair(&r[0], &r[1], &cfg), Verdict::Undetermined);
    assert_eq!(depth_order_pair(&r[0], &r[2], &cfg), Verdict::Undetermined);
}

#[test]
fn overlapping_convex_shapes_tie() {
    let s = Scene::from_polygons(
        512,
        512,
        &[("a:a", rect(100.0, 100.0, 200.0, 200.0)), ("b:b", disk(200.0, 150.0, 30.0, 64))],
    )
    .unwrap();
    let r = rasters(&s);
    assert_eq!(depth_order_pair(&r[0], &r[1], &DepthConfig::default()), oracle(&r[0], &r[1]));
}

#[test]
fn farthest_point_sampling_spreads_out() {
    let pts: Vec<(i64, i64)> = (0..100).map(|x| (x, 0)).collect();
    let s = farthest_point_sample(&pts, 3);
    assert_eq!(s, vec![(0, 0), (99, 0), (49, 0)]);
    assert_eq!(farthest_point_sample(&pts, 500).len(), 100);
    assert_eq!(farthest_point_sample(&[(3, 3), (3, 3)], 5), vec![(3, 3)]);
}

#[test]
fn disconnected_pairs_are_skipped() {
    let mut m = Mask::new(0, 0, 10, 1);
    m.set(0, 0, true);
    m.set(9, 0, true);
    assert_eq!(longest_inner_path(&m, &[(0, 0), (9, 0)]), None);
    m.set(1, 0, true);
    assert_eq!(longest_inner_path(&m, &[(0, 0), (1, 0), (9, 0)]), Some(1));
}

fn v(pairs: &[((usize, usize), Verdict)]) -> BTreeMap<(usize, usize), Verdict> {
    pairs.iter().copied().collect()
}

#[test]
fn sort_follows_a_chain() {
    // a=0 in front of b=1, b in front of c=2
    let o = depth_sort(&[None; 3], &v(&[((0, 1), Verdict::IFront), ((1, 2), Verdict::IFront)]));
    assert_eq!(o.order, vec![2, 1, 0]);
    assert!(o.broken.is_empty() && o.respects_verdicts());
}

#[test]
fn sort_uses_hints_when_undetermined() {
    let o = depth_sort(&[Some(2), Some(0), Some(1)], &v(&[((0, 1), Verdict::Undetermined)]));
    assert_eq!(o.order, vec![1, 2, 0]);
    assert_eq!(DepthOrder::by_hint(&[None, None]).order, vec![0, 1]);
}

#[test]
fn sort_breaks_cycles_at_the_lowest_edge() {
    let o = depth_sort(
        &[None; 4],
        &v(&[
            ((0, 1), Verdict::IFront),
            ((1, 2), Verdict::IFront),
            ((0, 2), Verdict::JFront),
            ((2, 3), Verdict::IFront),
        ]),
    );
    assert_eq!(o.broken, vec![(0, 1)]);
    assert!(o.is_permutation(4));
    assert!(o.respects_verdicts());
    assert_eq!(o.order, vec![3, 0, 2, 1]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sort_respects_unbroken_verdicts(
        n in 1usize..8,
        raw in proptest::collection::vec((0usize..8, 0usize..8, 0u8..3), 0..20),
        hints in proptest::collection::vec(proptest::option::of(-3i64..3), 8),
    ) {
        let mut verdicts = BTreeMap::new();
        for (a, b, k) in raw {
            let (a, b) = (a % n, b % n);
            if a < b {
                verdicts.insert((a, b), [Verdict::IFront, Verdict::JFront, Verdict::Undetermined][k as usize]);
            }
        }
        let o = depth_sort(&hints[..n], &verdicts);
        prop_assert!(o.is_permutation(n));
        prop_assert!(o.respects_verdicts());
    }

    #[test]
    fn pair_verdicts_are_antisymmetric(dx in -60.0..60.0f64, dy in -30.0..30.0f64, r in 20.0..60.0f64) {
        let s = Scene::from_polygons(
            512, 512,
            &[
                ("box:body", notched(100.0, 200.0, 300.0, 300.0, 200.0, 40.0)),
                ("ball:ball", disk(200.0 + dx, 200.0 + dy, r, 48)),
            ],
        ).unwrap();
        let rs = rasters(&s);
        let cfg = DepthConfig::default();
        prop_assert_eq!(depth_order_pair(&rs[0], &rs[1], &cfg), depth_order_pair(&rs[1], &rs[0], &cfg).flip());
    }
}

#[test]
fn empty_scene_is_background_only() {
    let s = Scene::from_polygons(32, 16, &[]).unwrap();
    let img = rasterize(&s, &[], &DepthOrder::default(), None).unwrap();
    assert_eq!(img, RgbImage::filled(32, 16, [255, 255, 255]));
    let svg = export_svg(&s, &[], &DepthOrder::default()).unwrap();
    let doc = roxmltree::Document::parse(&svg).unwrap();
    assert_eq!(doc.descendants().filter(|n| n.has_tag_name("rect")).count(), 1);
    assert_eq!(doc.descendants().filter(|n| n.has_tag_name("path")).count(), 0);
}

#[test]
fn red_square_fills_its_footprint() {
    let mut s = Scene::from_polygons(64, 64, &[("sq:sq", rect(10.0, 20.0, 30.0, 50.0))]).unwrap();
    s.segments[0].color = [255, 0, 0];
    let img = rasterize(&s, &s.rest_motions(), &DepthOrder::by_hint(&[None]), None).unwrap();
    for y in 0..64 {
        for x in 0..64 {
            let (fx, fy) = (x as f64, y as f64);
            let inside = fx >= 11.0 && fx < 29.0 && fy >= 21.0 && fy < 49.0;
            let outside = fx < 9.0 || fx >= 31.0 || fy < 19.0 || fy >= 51.0;
            let red = img.get(x, y) == [255, 0, 0];
            assert!(!(inside && !red) && !(outside && red), "pixel {x},{y}");
        }
    }
}

#[test]
fn rendering_is_deterministic_and_ordered() {
    let s = fixtures::lamp();
    let m = s.rest_motions();
    let o = depth_order(&s, &m, &RenderConfig::default()).unwrap();
    assert!(o.is_permutation(s.len()) && o.respects_verdicts());
    let a = rasterize(&s, &m, &o, None).unwrap();
    let b = rasterize(&s, &m, &o, None).unwrap();
    assert_eq!(a, b);
    let seq = RenderConfig { exec: Exec::Sequential, ..Default::default() };
    assert_eq!(depth_order(&s, &m, &seq).unwrap(), o);
    let big = rasterize(&s, &m, &o, Some((1024, 1024))).unwrap();
    assert_eq!((big.width, big.height), (1024, 1024));
    assert_eq!(big.get(480, 820), s.segments[0].color);
    assert!(rasterize(&s, &m[..2], &o, None).is_err());
}

#[test]
fn moving_a_segment_moves_its_pixels() {
    let s = Scene::from_polygons(64, 64, &[("sq:sq", rect(10.0, 10.0, 20.0, 20.0))]).unwrap();
    let o = DepthOrder::by_hint(&[None]);
    let m = [MotionParams::translation(30.0, 0.0, s.segments[0].pivot)];
    let img = rasterize(&s, &m, &o, None).unwrap();
    assert_eq!(img.get(15, 15), [255, 255, 255]);
    assert_eq!(img.get(45, 15), s.segments[0].color);
}

fn near(b: crate::geom::BBox, x: usize, y: usize) -> bool {
    let (x, y) = (x as f64, y as f64);
    x >= b.min_x - 2.0 && x <= b.max_x + 2.0 && y >= b.min_y - 2.0 && y <= b.max_y + 2.0
}

fn iou(a: &HashSet<(usize, usize)>, b: &HashSet<(usize, usize)>) -> f64 {
    a.intersection(b).count() as f64 / a.union(b).count() as f64
}

#[test]
fn mask_round_trip_keeps_segments() {
    let (w, h) = (160, 120);
    let mut mask = LabelRaster::new(w, h);
    let mut img = RgbImage::filled(w, h, [255, 255, 255]);
    let colors = [[200, 30, 30], [30, 160, 40], [20, 40, 200]];
    for y in 0..h {
        for x in 0..w {
            let (fx, fy) = (x as f64 + 0.5, y as f64 + 0.5);
            let v = if (fx - 40.0).powi(2) + (fy - 50.0).powi(2) < 900.0 {
                1
            } else if (80.0..140.0).contains(&fx) && (20.0..60.0).contains(&fy) {
                2
            } else if (70.0..150.0).contains(&fx) && (70.0..110.0).contains(&fy) && !(100.0..120.0).contains(&fx) {
                3
            } else {
                0
            };
            if v > 0 {
                mask.set(x, y, v);
                img.put(x, y, colors[v as usize - 1]);
            }
        }
    }
    let labels = BTreeMap::from([
        (1, Label::new("sun", "disk")),
        (2, Label::new("house", "wall")),
        (3, Label::new("house", "step")),
    ]);
    let s = ingest_mask(&mask, &img, &labels, &SceneConfig::default()).unwrap();
    assert_eq!(s.len(), 4);
    let o = DepthOrder::by_hint(&vec![None; s.len()]);
    let out = rasterize(&s, &s.rest_motions(), &o, None).unwrap();
    for seg in &s.segments {
        let src: HashSet<(usize, usize)> = (0..h)
            .flat_map(|y| (0..w).map(move |x| (x, y)))
            .filter(|&(x, y)| img.get(x, y) == seg.color && seg.contains(Vec2::new(x as f64 + 0.5, y as f64 + 0.5)))
            .collect();
        let got: HashSet<(usize, usize)> = (0..h)
            .flat_map(|y| (0..w).map(move |x| (x, y)))
            .filter(|&(x, y)| out.get(x, y) == seg.color && near(seg.bbox(), x, y))
            .collect();
        assert!(iou(&src, &got) >= 0.97, "seg{} iou {}", seg.id, iou(&src, &got));
    }
}

fn svg_paths(svg: &str) -> Vec<(Vec<Vec<Vec2>>, Rgb)> {
    let doc = roxmltree::Document::parse(svg).unwrap();
    doc.descendants()
        .filter(|n| n.has_tag_name("path"))
        .map(|n| {
            let fill = n.attribute("fill").unwrap();
            let c = |k: usize| u8::from_str_radix(&fill[1 + 2 * k..3 + 2 * k], 16).unwrap();
            let mut rings = Vec::new();
            for sub in n.attribute("d").unwrap().split('Z').filter(|t| !t.trim().is_empty()) {
                let nums: Vec<f64> = sub
                    .split(|ch: char| ch == 'M' || ch == 'L' || ch.is_whitespace())
                    .filter(|t| !t.is_empty())
                    .map(|t| t.parse().unwrap())
                    .collect();
                rings.push(nums.chunks(2).map(|p| Vec2::new(p[0], p[1])).collect());
            }
            (rings, [c(0), c(1), c(2)])
        })
        .collect()
}

#[test]
fn svg_of_one_square() {
    let s = Scene::from_polygons(64, 64, &[("sq:sq", rect(10.0, 10.0, 20.5, 20.0))]).unwrap();
    let svg = export_svg(&s, &s.rest_motions(), &DepthOrder::by_hint(&[None])).unwrap();
    let paths = svg_paths(&svg);
    assert_eq!(paths.len(), 1);
    assert_eq!(paths[0].0.len(), 1);
    assert_eq!(paths[0].0[0].len(), 4);
    assert!(svg.contains("M10.000 10.000 L20.500 10.000"));
}

#[test]
fn svg_round_trips_the_lamp() {
    let s = fixtures::lamp();
    let m: Vec<MotionParams> = s
        .segments
        .iter()
        .map(|seg| MotionParams { theta: 7.0, sx: 1.1, ..MotionParams::translation(3.25, -4.5, seg.pivot) })
        .collect();
    let o = depth_order(&s, &m, &RenderConfig::default()).unwrap();
    let svg = export_svg(&s, &m, &o).unwrap();
    let paths = svg_paths(&svg);
    assert_eq!(paths.len(), 7);
    let direct = rasterize(&s, &m, &o, None).unwrap();
    let mut again = RgbImage::filled(s.width, s.height, s.background);
    for (rings, c) in &paths {
        again.paint(&fill_rings(rings, s.width, s.height), *c);
    }
    for seg in &s.segments {
        let px = |im: &RgbImage| -> HashSet<(usize, usize)> {
            (0..s.height)
                .flat_map(|y| (0..s.width).map(move |x| (x, y)))
                .filter(|&(x, y)| im.get(x, y) == seg.color)
                .collect()
        };
        assert!(iou(&px(&direct), &px(&again)) >= 0.97, "seg{}", seg.id);
    }
}
