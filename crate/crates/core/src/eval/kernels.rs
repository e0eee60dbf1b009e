use super::compile::{compile, inside_regions, CNum, CTree, CompiledConstraint, PointRef, PointSet};
use super::{DiffScalar, EvalContext};
use crate::dsl::{ArithOp, AttrOp, CmpOp, Constraint, PairOp, RelOp};
use crate::error::{Error, Result};
use crate::geom::{closest_param, Vec2};

struct Closest {
    d: f64,
    a: PointRef,
    b: PointRef,
    u: f64,
    c: Vec2,
}

fn closest_edge(ctx: &EvalContext, p: Vec2, set: &PointSet) -> Closest {
    let mut best = Closest {
        d: f64::INFINITY,
        a: set.edges[0].0,
        b: set.edges[0].1,
        u: 0.0,
        c: p,
    };
    let mut best_sq = f64::INFINITY;
    for &(a, b) in &set.edges {
        let qa = ctx.position(a);
        let qb = ctx.position(b);
        let u = closest_param(p, qa, qb);
        let c = qa.lerp(qb, u);
        let d2 = (p - c).norm_sq();
        if d2 < best_sq {
            best_sq = d2;
            best = Closest { d: 0.0, a, b, u, c };
        }
    }
    best.d = best_sq.sqrt();
    best
}

/// Signed distance of member `p` to `set`: negative inside.
fn signed_dist(ctx: &EvalContext, p: PointRef, set: &PointSet) -> DiffScalar {
    let q = ctx.position(p);
    let cl = closest_edge(ctx, q, set);
    let sign = if inside_regions(ctx, q, &set.regions) { -1.0 } else { 1.0 };
    let mut out = ctx.constant(sign * cl.d);
    if cl.d > 1e-12 {
        let n = (q - cl.c) * (sign / cl.d);
        ctx.add_ref_grad(&mut out.grad, p, n);
        ctx.add_ref_grad(&mut out.grad, cl.a, n * -(1.0 - cl.u));
        ctx.add_ref_grad(&mut out.grad, cl.b, n * -cl.u);
    }
    out
}

/// Minimum over members of `a` of the signed distance to `b`; negative when
/// they overlap. A positive softmin temperature smooths the minimum.
pub fn signed_gap(ctx: &EvalContext, a: &PointSet, b: &PointSet) -> DiffScalar {
    let tau = ctx.cfg.softmin_temperature;
    if tau <= 0.0 {
        let mut best: Option<(f64, PointRef)> = None;
        for &p in &a.points {
            let q = ctx.position(p);
            let cl = closest_edge(ctx, q, b);
            let sign = if inside_regions(ctx, q, &b.regions) { -1.0 } else { 1.0 };
            let sd = sign * cl.d;
            if best.is_none_or(|(v, _)| sd < v) {
                best = Some((sd, p));
            }
        }
        let (_, p) = best.expect("non-empty point set");
        return signed_dist(ctx, p, b);
    }
    let sds: Vec<DiffScalar> = a.points.iter().map(|&p| signed_dist(ctx, p, b)).collect();
    let m = sds.iter().map(|s| s.value).fold(f64::INFINITY, f64::min);
    let w: Vec<f64> = sds.iter().map(|s| (-(s.value - m) / tau).exp()).collect();
    let total: f64 = w.iter().sum();
    let mut out = ctx.constant(m - tau * total.ln());
    for (s, wi) in sds.iter().zip(&w) {
        let k = wi / total;
        out.grad.iter_mut().zip(&s.grad).for_each(|(g, d)| *g += k * d);
    }
    out
}

fn extreme(ctx: &EvalContext, set: &PointSet, axis_y: bool, max: bool) -> DiffScalar {
    let key = |p: &PointRef| {
        let q = ctx.position(*p);
        if axis_y {
            q.y
        } else {
            q.x
        }
    };
    let mut best = set.points[0];
    let mut bv = key(&best);
    for p in &set.points[1..] {
        let v = key(p);
        if (max && v > bv) || (!max && v < bv) {
            best = *p;
            bv = v;
        }
    }
    let mut out = ctx.constant(bv);
    let coef = if axis_y { Vec2::new(0.0, 1.0) } else { Vec2::new(1.0, 0.0) };
    ctx.add_ref_grad(&mut out.grad, best, coef);
    out
}

fn center(ctx: &EvalContext, set: &PointSet) -> (Vec2, Vec<f64>, Vec<f64>) {
    let n = set.points.len() as f64;
    let mut c = Vec2::new(0.0, 0.0);
    let mut gx = vec![0.0; ctx.n_params()];
    let mut gy = vec![0.0; ctx.n_params()];
    for &p in &set.points {
        c += ctx.position(p);
        ctx.add_ref_grad(&mut gx, p, Vec2::new(1.0 / n, 0.0));
        ctx.add_ref_grad(&mut gy, p, Vec2::new(0.0, 1.0 / n));
    }
    (c * (1.0 / n), gx, gy)
}

/// Principal axis angle in radians, in (-90°, 90°], with its gradient.
fn principal_angle(ctx: &EvalContext, set: &PointSet) -> DiffScalar {
    let n = set.points.len() as f64;
    let pos: Vec<Vec2> = set.points.iter().map(|&p| ctx.position(p)).collect();
    let m = pos.iter().fold(Vec2::new(0.0, 0.0), |a, &b| a + b) * (1.0 / n);
    let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
    for q in &pos {
        let d = *q - m;
        a += d.x * d.x;
        b += d.x * d.y;
        c += d.y * d.y;
    }
    a /= n;
    b /= n;
    c /= n;
    let den = (a - c).powi(2) + 4.0 * b * b;
    let mut out = ctx.constant(0.5 * (2.0 * b).atan2(a - c));
    if den < 1e-18 {
        log::warn!("direction of an isotropic point set is undefined; using the x axis");
        out.value = 0.0;
        return out;
    }
    // Mean-shift terms cancel because deviations sum to zero.
    for (&p, q) in set.points.iter().zip(&pos) {
        let d = *q - m;
        let coef = Vec2::new(
            ((a - c) * d.y - 2.0 * b * d.x) / (n * den),
            ((a - c) * d.x + 2.0 * b * d.y) / (n * den),
        );
        ctx.add_ref_grad(&mut out.grad, p, coef);
    }
    out
}

pub fn eval_attribute(ctx: &EvalContext, op: AttrOp, set: &PointSet) -> DiffScalar {
    match op {
        AttrOp::MinX => extreme(ctx, set, false, false),
        AttrOp::MaxX => extreme(ctx, set, false, true),
        AttrOp::MinY => extreme(ctx, set, true, false),
        AttrOp::MaxY => extreme(ctx, set, true, true),
        AttrOp::HoriLen => extreme(ctx, set, false, true) - extreme(ctx, set, false, false),
        AttrOp::VertLen => extreme(ctx, set, true, true) - extreme(ctx, set, true, false),
        AttrOp::CenterX | AttrOp::CenterY => {
            let (c, gx, gy) = center(ctx, set);
            if op == AttrOp::CenterX {
                DiffScalar { value: c.x, grad: gx }
            } else {
                DiffScalar { value: c.y, grad: gy }
            }
        }
        AttrOp::LongDirX | AttrOp::LongDirY | AttrOp::ShortDirX | AttrOp::ShortDirY => {
            let phi = principal_angle(ctx, set);
            let (s, c) = phi.value.sin_cos();
            let (v, d) = match op {
                AttrOp::LongDirX => (c, -s),
                AttrOp::LongDirY => (s, c),
                AttrOp::ShortDirX => (-s, -c),
                _ => (c, -s),
            };
            let mut out = phi.scale(d);
            out.value = v;
            out
        }
    }
}

fn point_pair(ctx: &EvalContext, a: &PointSet, b: &PointSet, max: bool) -> DiffScalar {
    let mut best: Option<(f64, PointRef, PointRef)> = None;
    for &p in &a.points {
        let qp = ctx.position(p);
        for &q in &b.points {
            let d2 = (qp - ctx.position(q)).norm_sq();
            if best.is_none_or(|(v, _, _)| if max { d2 > v } else { d2 < v }) {
                best = Some((d2, p, q));
            }
        }
    }
    let (d2, p, q) = best.expect("non-empty point sets");
    dist_between(ctx, d2.sqrt(), p, q)
}

fn dist_between(ctx: &EvalContext, d: f64, p: PointRef, q: PointRef) -> DiffScalar {
    let mut out = ctx.constant(d);
    if d > 1e-12 {
        let n = (ctx.position(p) - ctx.position(q)) * (1.0 / d);
        ctx.add_ref_grad(&mut out.grad, p, n);
        ctx.add_ref_grad(&mut out.grad, q, -n);
    }
    out
}

pub fn eval_relation_attr(ctx: &EvalContext, op: RelOp, a: &PointSet, b: &PointSet) -> DiffScalar {
    match op {
        RelOp::MinDist => point_pair(ctx, a, b, false),
        RelOp::MaxDist => point_pair(ctx, a, b, true),
        RelOp::AvgDist => {
            let mut out = ctx.zero();
            let k = 1.0 / a.points.len() as f64;
            for &p in &a.points {
                let qp = ctx.position(p);
                let (d2, q) = b
                    .points
                    .iter()
                    .map(|&q| ((qp - ctx.position(q)).norm_sq(), q))
                    .fold((f64::INFINITY, b.points[0]), |acc, x| if x.0 < acc.0 { x } else { acc });
                out = out + dist_between(ctx, d2.sqrt(), p, q).scale(k);
            }
            out
        }
        RelOp::CenterDist | RelOp::Angle => {
            let (ca, ax, ay) = center(ctx, a);
            let (cb, bx, by) = center(ctx, b);
            let dx = DiffScalar { value: cb.x - ca.x, grad: sub(&bx, &ax) };
            let dy = DiffScalar { value: cb.y - ca.y, grad: sub(&by, &ay) };
            let r2 = dx.value * dx.value + dy.value * dy.value;
            if op == RelOp::CenterDist {
                let r = r2.sqrt();
                let mut out = ctx.constant(r);
                if r > 1e-12 {
                    out = dx.clone().scale(dx.value / r) + dy.clone().scale(dy.value / r);
                    out.value = r;
                }
                out
            } else {
                let mut out = ctx.constant(dy.value.atan2(dx.value).to_degrees());
                if r2 > 1e-24 {
                    let k = 180.0 / std::f64::consts::PI / r2;
                    let g = dy.clone().scale(dx.value * k) - dx.clone().scale(dy.value * k);
                    out.grad = g.grad;
                }
                out
            }
        }
    }
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn eval_num(ctx: &EvalContext, n: &CNum) -> DiffScalar {
    match n {
        CNum::Lit(v) => ctx.constant(*v),
        CNum::Arith(op, a, b) => {
            let (a, b) = (eval_num(ctx, a), eval_num(ctx, b));
            match op {
                ArithOp::Plus => a + b,
                ArithOp::Minus => a - b,
                ArithOp::Mul => a.mul(b),
                ArithOp::Div => a.div(b),
                ArithOp::Min => a.min(b),
                ArithOp::Max => a.max(b),
            }
        }
        CNum::Attr(op, s) => eval_attribute(ctx, *op, s),
        CNum::Rel(op, a, b) => eval_relation_attr(ctx, *op, a, b),
    }
}

fn eval_pair(ctx: &EvalContext, op: PairOp, a: &PointSet, b: &PointSet) -> DiffScalar {
    let y = |s, max| extreme(ctx, s, true, max);
    let x = |s, max| extreme(ctx, s, false, max);
    match op {
        PairOp::Touch => signed_gap(ctx, a, b).abs(),
        PairOp::Overlap => (signed_gap(ctx, a, b) + ctx.constant(ctx.cfg.overlap_depth)).relu(),
        PairOp::Detach => (ctx.constant(ctx.cfg.detach_gap) - signed_gap(ctx, a, b)).relu(),
        PairOp::Inside => {
            let k = 1.0 / a.points.len() as f64;
            let mut out = ctx.zero();
            for &p in &a.points {
                let sd = signed_dist(ctx, p, b);
                if sd.value > 0.0 {
                    out = out + sd.scale(k);
                }
            }
            out
        }
        PairOp::OnTop => (y(a, true) - y(b, false)).relu(),
        PairOp::OnBottom => (y(b, true) - y(a, false)).relu(),
        PairOp::OnLeft => (x(a, true) - x(b, false)).relu(),
        PairOp::OnRight => (x(b, true) - x(a, false)).relu(),
    }
}

fn anchor(ctx: &EvalContext, seg: usize, frozen: bool, p: Vec2, sign: f64, grad: &mut [f64], coef: Vec2) -> Vec2 {
    if frozen {
        return p;
    }
    ctx.add_point_grad(grad, seg, p, coef * sign);
    ctx.motions[seg].apply(p)
}

fn eval_ctree(ctx: &EvalContext, t: &CTree) -> DiffScalar {
    match t {
        CTree::Compare(op, a, b) => {
            let (a, b) = (eval_num(ctx, a), eval_num(ctx, b));
            match op {
                CmpOp::Equal => (a - b).abs(),
                CmpOp::Smaller => (a - b).relu(),
                CmpOp::Larger => (b - a).relu(),
            }
        }
        CTree::Pair(op, a, b) => eval_pair(ctx, *op, a, b),
        CTree::Coincide { a, fa, pa, b, fb, pb } => {
            let qa = if *fa { *pa } else { ctx.motions[*a].apply(*pa) };
            let qb = if *fb { *pb } else { ctx.motions[*b].apply(*pb) };
            let d = qa.dist(qb);
            let mut out = ctx.constant(d);
            if d > 1e-12 {
                let n = (qa - qb) * (1.0 / d);
                anchor(ctx, *a, *fa, *pa, 1.0, &mut out.grad, n);
                anchor(ctx, *b, *fb, *pb, -1.0, &mut out.grad, n);
            }
            out
        }
    }
}

/// Violation of a compiled constraint under the context's motions.
pub fn eval_compiled(ctx: &EvalContext, c: &CompiledConstraint) -> Result<DiffScalar> {
    let v = eval_ctree(ctx, &c.tree);
    if !v.value.is_finite() || v.grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::Eval(format!("constraint `{}` evaluated to a non-finite value", c.source)));
    }
    Ok(v)
}

/// Compiles at the current motions, then evaluates.
pub fn eval_tree(ctx: &EvalContext, c: &Constraint) -> Result<DiffScalar> {
    eval_compiled(ctx, &compile(ctx, c)?)
}

#[derive(Clone, Debug, PartialEq)]
pub struct LossBreakdown {
    /// Weighted mean violation.
    pub total: DiffScalar,
    pub per_constraint: Vec<f64>,
}

pub fn total_loss(ctx: &EvalContext, cs: &[CompiledConstraint]) -> Result<LossBreakdown> {
    let mut total = ctx.zero();
    let mut per = Vec::with_capacity(cs.len());
    let wsum: f64 = cs.iter().map(|c| c.weight).sum();
    for c in cs {
        let v = eval_compiled(ctx, c)?;
        per.push(v.value);
        total = total + v.scale(c.weight / wsum);
    }
    Ok(LossBreakdown {
        total,
        per_constraint: per,
    })
}
