use super::*;
use crate::dsl::{parse_program, Constraint};
use crate::scene::test_util::*;
use crate::scene::{MotionParams, Scene};
use proptest::prelude::*;

fn one(src: &str) -> Constraint {
    parse_program(src, None).unwrap().constraints.remove(0)
}

fn at_rest(scene: &Scene) -> EvalContext<'_> {
    EvalContext::at_rest(scene, EvalConfig::default())
}

fn eval(scene: &Scene, src: &str) -> f64 {
    eval_tree(&at_rest(scene), &one(src)).unwrap().value
}

fn two_squares(dx: f64) -> Scene {
    scene_of(&[rect(0.0, 0.0, 10.0, 10.0), rect(dx, 0.0, dx + 10.0, 10.0)])
}

#[test]
fn hori_len_value_and_scale_gradient() {
    let s = scene_of(&[rect(0.0, 0.0, 10.0, 10.0)]);
    assert_eq!(eval(&s, "equal(hori_len(seg0), 10)"), 0.0);
    let ctx = EvalContext::new(
        &s,
        vec![MotionParams::identity(s.segments[0].pivot)],
        ParamIndex::all(1),
        EvalConfig::default(),
    );
    let v = eval_tree(&ctx, &one("equal(hori_len(seg0), 5)")).unwrap();
    assert_eq!(v.value, 5.0);
    assert!((v.grad[ctx.index.offset(0, Slot::Sx).unwrap()] - 10.0).abs() < 1e-12);
}

#[test]
fn touch_of_separated_squares() {
    let s = two_squares(20.0);
    let ctx = EvalContext::new(
        &s,
        s.segments.iter().map(|g| MotionParams::identity(g.pivot)).collect(),
        ParamIndex::all(2),
        EvalConfig::default(),
    );
    let v = eval_tree(&ctx, &one("touch(seg0, seg1)")).unwrap();
    assert!((v.value - 10.0).abs() < 1e-9);
    assert!((v.grad[ctx.index.offset(0, Slot::Tx).unwrap()] + 1.0).abs() < 1e-9);
}

#[test]
fn signed_gap_cases() {
    let gap = |s: &Scene| {
        let ctx = at_rest(s);
        let a = compile::compile_seg(&ctx, &crate::dsl::SegExpr::Ref(0), false).unwrap();
        let b = compile::compile_seg(&ctx, &crate::dsl::SegExpr::Ref(1), false).unwrap();
        signed_gap(&ctx, &a, &b).value
    };
    assert!((gap(&two_squares(20.0)) - 10.0).abs() < 1e-9);
    assert!((gap(&two_squares(5.0)) + 5.0).abs() < 1e-9);
    // Every sample of A lies on B's boundary, so the minimum distance is zero.
    assert!(gap(&two_squares(0.0)).abs() < 1e-9);
}

#[test]
fn attributes() {
    let s = scene_of(&[rect(0.0, 0.0, 10.0, 10.0), rect(100.0, 100.0, 120.0, 104.0)]);
    let ctx = at_rest(&s);
    let set = |i| compile::compile_seg(&ctx, &crate::dsl::SegExpr::Ref(i), false).unwrap();
    assert!((eval_attribute(&ctx, crate::dsl::AttrOp::VertLen, &set(0)).value - 10.0).abs() < 1e-9);
    assert!((eval_attribute(&ctx, crate::dsl::AttrOp::CenterX, &set(0)).value - 5.0).abs() < 1e-9);
    // Eigenvector oracle on the same samples; their spacing is not symmetric,
    // so the axis is only approximately horizontal.
    let pts = &s.segments[1].samples;
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.x).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.y).sum::<f64>() / n;
    let a = pts.iter().map(|p| (p.x - mx).powi(2)).sum::<f64>() / n;
    let b = pts.iter().map(|p| (p.x - mx) * (p.y - my)).sum::<f64>() / n;
    let c = pts.iter().map(|p| (p.y - my).powi(2)).sum::<f64>() / n;
    let lambda = (a + c) / 2.0 + (((a - c) / 2.0).powi(2) + b * b).sqrt();
    let (vx, vy) = (b, lambda - a);
    let norm = (vx * vx + vy * vy).sqrt();
    let (ex, ey) = if vx < 0.0 { (-vx / norm, -vy / norm) } else { (vx / norm, vy / norm) };
    let lx = eval_attribute(&ctx, crate::dsl::AttrOp::LongDirX, &set(1)).value;
    let ly = eval_attribute(&ctx, crate::dsl::AttrOp::LongDirY, &set(1)).value;
    assert!((lx - ex).abs() < 1e-9 && (ly - ey).abs() < 1e-9);
    assert!((lx - 1.0).abs() < 1e-3);
    assert!(eval_attribute(&ctx, crate::dsl::AttrOp::ShortDirX, &set(1)).value.abs() < 1e-3);
}

#[test]
fn relation_attributes() {
    let s = two_squares(20.0);
    assert!((eval(&s, "equal(min_dist(seg0, seg1), 0)") - 10.0).abs() < 1e-9);
    assert!((eval(&s, "equal(center_dist(seg0, seg1), 0)") - 20.0).abs() < 1e-9);
    let d = scene_of(&[rect(-1.0, -1.0, 1.0, 1.0), rect(9.0, 9.0, 11.0, 11.0)]);
    assert!((eval(&d, "equal(angle(seg0, seg1), 0)") - 45.0).abs() < 1e-9);
}

#[test]
fn specifiers() {
    let s = scene_of(&[rect(0.0, 0.0, 10.0, 10.0), rect(0.0, 20.0, 10.0, 30.0)]);
    assert_eq!(eval(&s, "on_top(seg0, seg1)"), 0.0);
    assert!((eval(&s, "on_top(seg1, seg0)") - 30.0).abs() < 1e-9);
    let t = two_squares(10.0);
    assert!((eval(&t, "detach(seg0, seg1)") - 2.0).abs() < 1e-9);
    assert!(eval(&t, "touch(seg0, seg1)").abs() < 1e-9);
    let i = scene_of(&[rect(0.0, 0.0, 10.0, 10.0), rect(2.0, 2.0, 8.0, 8.0)]);
    assert_eq!(eval(&i, "inside(seg1, seg0)"), 0.0);
    assert!(eval(&i, "inside(seg0, seg1)") > 0.0);
    assert_eq!(eval(&i, "equal(hori_len(seg0), hori_len(seg0))"), 0.0);
}

#[test]
fn regions_and_setops() {
    let s = scene_of(&[rect(0.0, 0.0, 10.0, 10.0), rect(200.0, 0.0, 220.0, 4.0), rect(20.0, 0.0, 30.0, 10.0)]);
    let ctx = at_rest(&s);
    let seg = |i| compile::compile_seg(&ctx, &crate::dsl::SegExpr::Ref(i), false).unwrap();
    let top = eval_region(&ctx, crate::dsl::Side::Top, &seg(0)).unwrap();
    assert!(!top.points.is_empty());
    assert!(top.points.iter().all(|&p| ctx.position(p).y <= 2.5 + 1e-9));
    let right = eval_region(&ctx, crate::dsl::Side::Right, &seg(1)).unwrap();
    assert!(right.points.iter().all(|&p| ctx.position(p).x >= 215.0 - 1e-9));
    assert!((eval(&s, "equal(hori_len(union(seg0, seg2)), 0)") - 30.0).abs() < 1e-9);
    let aa = eval_setop(&ctx, &[seg(0), seg(0)], true).unwrap();
    assert_eq!(aa.points.len(), 128);
    let err = eval_setop(&ctx, &[seg(0), seg(2)], true).unwrap_err();
    assert!(err.to_string().contains("empty intersection region"));
}

#[test]
fn old_ignores_motion() {
    let s = scene_of(&[rect(0.0, 0.0, 10.0, 10.0)]);
    let mut m = MotionParams::identity(s.segments[0].pivot);
    m.tx = 7.0;
    m.theta = 30.0;
    m.sx = 2.0;
    let ctx = EvalContext::new(&s, vec![m], ParamIndex::all(1), EvalConfig::default());
    let v = eval_tree(&ctx, &one("equal(center_x(old(seg0)), 0)")).unwrap();
    assert!((v.value - 5.0).abs() < 1e-12);
    assert!(v.grad.iter().all(|g| *g == 0.0));
}

#[test]
fn total_loss_is_the_mean() {
    let s = two_squares(20.0);
    let ctx = at_rest(&s);
    let cs = compile_all(&ctx, &[one("equal(hori_len(seg0), 14)"), one("equal(hori_len(seg0), 10)")]).unwrap();
    assert!((total_loss(&ctx, &cs).unwrap().total.value - 2.0).abs() < 1e-12);
    let single = compile_all(&ctx, &[one("touch(seg0, seg1)")]).unwrap();
    assert!((total_loss(&ctx, &single).unwrap().total.value - 10.0).abs() < 1e-9);
}

#[test]
fn softmin_approaches_hard_min() {
    let s = two_squares(20.0);
    let mut ctx = at_rest(&s);
    ctx.cfg.softmin_temperature = 1e-3;
    assert!((eval_tree(&ctx, &one("touch(seg0, seg1)")).unwrap().value - 10.0).abs() < 1e-2);
}

/// Central differences with slot-specific steps.
fn fd_check(scene: &Scene, motions: &[MotionParams], c: &Constraint) -> Option<f64> {
    let idx = ParamIndex::all(scene.len());
    let ctx = EvalContext::new(scene, motions.to_vec(), idx.clone(), EvalConfig::default());
    let compiled = compile(&ctx, c).ok()?;
    let v = eval_compiled(&ctx, &compiled).ok()?;
    let mut worst: f64 = 0.0;
    for (k, &(seg, slot)) in idx.entries().iter().enumerate() {
        let h = match slot {
            Slot::Sx | Slot::Sy => 1e-5,
            _ => 1e-4,
        };
        let shifted = |d: f64| {
            let mut ms = motions.to_vec();
            let m = &mut ms[seg];
            match slot {
                Slot::Tx => m.tx += d,
                Slot::Ty => m.ty += d,
                Slot::Theta => m.theta += d,
                Slot::Sx => m.sx += d,
                Slot::Sy => m.sy += d,
            }
            let c2 = EvalContext::new(scene, ms, ParamIndex::none(scene.len()), EvalConfig::default());
            eval_compiled(&c2, &compiled).unwrap().value
        };
        let (p, m) = (shifted(h), shifted(-h));
        // Skip kinks: one-sided slopes disagree.
        let l = (v.value - m) / h;
        let r = (p - v.value) / h;
        if (l - r).abs() > 1e-3 * (1.0 + l.abs().max(r.abs())) {
            continue;
        }
        let fd = (p - m) / (2.0 * h);
        let err = (fd - v.grad[k]).abs() / fd.abs().max(v.grad[k].abs()).max(1.0);
        worst = worst.max(err);
    }
    Some(worst)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn analytic_gradients_match_finite_differences(
        ax in 40.0..80.0f64, ay in 40.0..80.0f64, bx in 60.0..120.0f64, by in 50.0..110.0f64,
        tx in -5.0..5.0f64, th in -30.0..30.0f64, sx in 0.7..1.4f64, sy in 0.7..1.4f64,
        which in 0usize..14,
    ) {
        let s = scene_of(&[rect(ax, ay, ax + 30.0, ay + 14.0), rect(bx, by, bx + 18.0, by + 26.0)]);
        let srcs = [
            "touch(seg0, seg1)", "overlap(seg0, seg1)", "detach(seg1, seg0)", "inside(seg0, seg1)",
            "on_top(seg0, seg1)", "on_right(seg0, seg1)", "equal(long_dir_x(seg0), short_dir_y(seg1))",
            "equal(angle(seg0, seg1), 10)", "equal(center_dist(seg0, seg1), 3)",
            "equal(avg_dist(seg0, seg1), max_dist(seg0, seg1) / 3)",
            "larger(min_dist(seg0, seg1), vert_len(seg1) * 2)",
            "equal(hori_len(top(seg0)), center_y(union(seg0, seg1)))",
            "coincide_on_point(seg0, [50, 50], seg1, [70, 60])",
            "equal(long_dir_y(seg0), 0.5)",
        ];
        let m0 = MotionParams { tx, ty: -tx, theta: th, sx, sy, pivot: s.segments[0].pivot };
        let m1 = MotionParams { tx: -tx, ty: 2.0, theta: -th / 2.0, sx: sy, sy: sx, pivot: s.segments[1].pivot };
        if let Some(err) = fd_check(&s, &[m0, m1], &one(srcs[which])) {
            prop_assert!(err < 1e-3, "{} err {}", srcs[which], err);
        }
    }

    #[test]
    fn specifiers_are_nonnegative(dx in -40.0..40.0f64, dy in -40.0..40.0f64, which in 0usize..8) {
        let s = scene_of(&[rect(100.0, 100.0, 120.0, 120.0), rect(100.0 + dx, 100.0 + dy, 130.0 + dx, 110.0 + dy)]);
        let srcs = ["touch(seg0, seg1)", "overlap(seg0, seg1)", "detach(seg0, seg1)", "inside(seg0, seg1)",
            "on_top(seg0, seg1)", "on_bottom(seg0, seg1)", "on_left(seg0, seg1)", "on_right(seg0, seg1)"];
        prop_assert!(eval(&s, srcs[which]) >= 0.0);
    }

    #[test]
    fn relation_attrs_are_translation_equivariant(t in prop::array::uniform2(-50.0..50.0f64), which in 0usize..5) {
        let s = scene_of(&[rect(100.0, 100.0, 120.0, 130.0), rect(150.0, 90.0, 170.0, 110.0)]);
        let src = ["avg_dist", "min_dist", "max_dist", "angle", "center_dist"][which];
        let c = one(&format!("equal({src}(seg0, seg1), 0)"));
        let base = eval_tree(&at_rest(&s), &c).unwrap().value;
        let ms = s.segments.iter().map(|g| MotionParams::translation(t[0], t[1], g.pivot)).collect();
        let moved = eval_tree(&EvalContext::new(&s, ms, ParamIndex::none(2), EvalConfig::default()), &c).unwrap().value;
        prop_assert!((base - moved).abs() < 1e-9);
    }

    #[test]
    fn negative_gap_iff_rasters_overlap(cx in 60.0..200.0f64, cy in 60.0..200.0f64, r in 8.0..30.0f64) {
        let s = scene_of(&[rect(100.0, 100.0, 140.0, 130.0), rect(cx - r, cy - r, cx + r, cy + r)]);
        let ctx = at_rest(&s);
        let a = compile::compile_seg(&ctx, &crate::dsl::SegExpr::Ref(0), false).unwrap();
        let b = compile::compile_seg(&ctx, &crate::dsl::SegExpr::Ref(1), false).unwrap();
        let g = signed_gap(&ctx, &a, &b).value;
        prop_assume!(g.abs() > 2.0);
        let hits = s.segments[0].raster(512, 512).intersection_count(&s.segments[1].raster(512, 512));
        prop_assert_eq!(g < 0.0, hits > 0);
    }
}

#[test]
fn coincide_anchor_tracks_motion() {
    let s = two_squares(20.0);
    let mut ms: Vec<_> = s.segments.iter().map(|g| MotionParams::identity(g.pivot)).collect();
    ms[0].tx = 10.0;
    let ctx = EvalContext::new(&s, ms, ParamIndex::all(2), EvalConfig::default());
    let v = eval_tree(&ctx, &one("coincide_on_point(seg0, [10, 5], seg1, [20, 5])")).unwrap();
    assert!(v.value.abs() < 1e-12);
    let w = eval_tree(&ctx, &one("coincide_on_point(seg0, [10, 5], seg1, [30, 5])")).unwrap();
    assert!((w.value - 10.0).abs() < 1e-12);
    assert!((w.grad[ctx.index.offset(0, Slot::Tx).unwrap()] + 1.0).abs() < 1e-12);
    assert!((w.grad[ctx.index.offset(1, Slot::Tx).unwrap()] - 1.0).abs() < 1e-12);
}
