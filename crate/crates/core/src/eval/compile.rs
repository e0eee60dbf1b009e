use std::collections::BTreeSet;

use super::EvalContext;
use crate::dsl::{Constraint, NumExpr, SegExpr, Side};
use crate::error::{Error, Result};
use crate::geom::{point_in_ring, Vec2};

/// One sample of one segment; `frozen` points stay at rest.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PointRef {
    pub seg: usize,
    pub idx: u32,
    pub frozen: bool,
}

/// A closed sample loop of one segment path.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LoopRef {
    pub seg: usize,
    pub path: usize,
    pub frozen: bool,
}

/// Frozen membership of a segment expression.
///
/// `points` carry the attributes; `edges` are the boundary pieces used for
/// distances (a lone member point becomes a zero-length edge); a point is inside
/// the set when, for every group of `regions`, it lies in one of the loops.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PointSet {
    pub points: Vec<PointRef>,
    pub edges: Vec<(PointRef, PointRef)>,
    pub regions: Vec<Vec<LoopRef>>,
}

impl PointSet {
    pub fn segments(&self) -> BTreeSet<usize> {
        self.points.iter().map(|p| p.seg).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) enum CNum {
    Lit(f64),
    Arith(crate::dsl::ArithOp, Box<CNum>, Box<CNum>),
    Attr(crate::dsl::AttrOp, PointSet),
    Rel(crate::dsl::RelOp, PointSet, PointSet),
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) enum CTree {
    Compare(crate::dsl::CmpOp, CNum, CNum),
    Pair(crate::dsl::PairOp, PointSet, PointSet),
    Coincide {
        a: usize,
        fa: bool,
        pa: Vec2,
        b: usize,
        fb: bool,
        pb: Vec2,
    },
}

/// A constraint bound to fixed point sets.
#[derive(Clone, Debug, PartialEq)]
pub struct CompiledConstraint {
    pub source: Constraint,
    pub weight: f64,
    pub(crate) tree: CTree,
}

fn loop_positions<'c>(ctx: &'c EvalContext, l: LoopRef) -> &'c [Vec2] {
    let seg = &ctx.scene.segments[l.seg];
    let n = seg.samples_per_path;
    let src: &[Vec2] = if l.frozen { &seg.samples } else { ctx.samples(l.seg) };
    &src[l.path * n..(l.path + 1) * n]
}

/// Inside test of a point against the regions of a set.
pub(crate) fn inside_regions(ctx: &EvalContext, p: Vec2, regions: &[Vec<LoopRef>]) -> bool {
    !regions.is_empty()
        && regions
            .iter()
            .all(|g| g.iter().any(|&l| point_in_ring(p, loop_positions(ctx, l))))
}

fn segment_set(ctx: &EvalContext, id: usize, frozen: bool) -> Result<PointSet> {
    let seg = ctx
        .scene
        .segment(id)
        .ok_or_else(|| Error::Eval(format!("seg{id} does not exist")))?;
    let n = seg.samples_per_path;
    let mut set = PointSet::default();
    let mut group = Vec::new();
    for path in 0..seg.paths.len() {
        group.push(LoopRef { seg: id, path, frozen });
        for k in 0..n {
            let a = PointRef { seg: id, idx: (path * n + k) as u32, frozen };
            let b = PointRef { seg: id, idx: (path * n + (k + 1) % n) as u32, frozen };
            set.points.push(a);
            set.edges.push((a, b));
        }
    }
    set.regions.push(group);
    Ok(set)
}

/// Keeps the members accepted by `keep`, and the edges whose ends both survive.
fn filter_set(set: &PointSet, keep: &BTreeSet<PointRef>) -> PointSet {
    let points: Vec<PointRef> = set.points.iter().copied().filter(|p| keep.contains(p)).collect();
    let mut edges: Vec<_> = set
        .edges
        .iter()
        .copied()
        .filter(|(a, b)| keep.contains(a) && keep.contains(b))
        .collect();
    let touched: BTreeSet<PointRef> = edges.iter().flat_map(|&(a, b)| [a, b]).collect();
    edges.extend(points.iter().filter(|p| !touched.contains(p)).map(|&p| (p, p)));
    PointSet {
        points,
        edges,
        regions: set.regions.clone(),
    }
}

/// Band of `f` of the bbox on one side, measured at the context's motions.
pub fn eval_region(ctx: &EvalContext, side: Side, set: &PointSet) -> Result<PointSet> {
    let pos: Vec<Vec2> = set.points.iter().map(|&p| ctx.position(p)).collect();
    let bb = crate::geom::bbox(&pos).ok_or_else(|| Error::Eval("region of an empty set".into()))?;
    let f = ctx.cfg.region_fraction;
    let tol = 1e-9;
    let keep: BTreeSet<PointRef> = set
        .points
        .iter()
        .zip(&pos)
        .filter(|(_, q)| match side {
            Side::Top => q.y <= bb.min_y + f * bb.height() + tol,
            Side::Bot => q.y >= bb.max_y - f * bb.height() - tol,
            Side::Left => q.x <= bb.min_x + f * bb.width() + tol,
            Side::Right => q.x >= bb.max_x - f * bb.width() - tol,
        })
        .map(|(p, _)| *p)
        .collect();
    if keep.is_empty() {
        let segs: Vec<String> = set.segments().iter().map(|s| format!("seg{s}")).collect();
        return Err(Error::Eval(format!(
            "empty {side:?} region of {}",
            segs.join(", ")
        )));
    }
    Ok(filter_set(set, &keep))
}

/// Boundary points count as inside, so `inter(A, A)` keeps all of `A`.
fn on_boundary(ctx: &EvalContext, q: Vec2, set: &PointSet) -> bool {
    set.edges
        .iter()
        .any(|&(a, b)| crate::geom::dist_to_segment_sq(q, ctx.position(a), ctx.position(b)) < 1e-12)
}

/// `union` when `inter` is false, otherwise `inter`.
pub fn eval_setop(ctx: &EvalContext, sets: &[PointSet], inter: bool) -> Result<PointSet> {
    let mut out = PointSet::default();
    if !inter {
        for s in sets {
            out.points.extend(&s.points);
            out.edges.extend(&s.edges);
        }
        out.regions.push(sets.iter().flat_map(|s| s.regions.iter().flatten().copied()).collect());
        return Ok(out);
    }
    for (i, s) in sets.iter().enumerate() {
        let keep: BTreeSet<PointRef> = s
            .points
            .iter()
            .copied()
            .filter(|&p| {
                let q = ctx.position(p);
                sets.iter()
                    .enumerate()
                    .all(|(j, o)| j == i || inside_regions(ctx, q, &o.regions) || on_boundary(ctx, q, o))
            })
            .collect();
        if keep.is_empty() {
            continue;
        }
        let f = filter_set(s, &keep);
        out.points.extend(f.points);
        out.edges.extend(f.edges);
    }
    if out.points.is_empty() {
        let segs: BTreeSet<usize> = sets.iter().flat_map(|s| s.segments()).collect();
        let segs: Vec<String> = segs.iter().map(|s| format!("seg{s}")).collect();
        return Err(Error::Eval(format!("empty intersection region of {}", segs.join(", "))));
    }
    for s in sets {
        out.regions.extend(s.regions.iter().cloned());
    }
    Ok(out)
}

/// `old(..)` anywhere above marks the whole subtree as rest geometry, so bands
/// and intersections of an old copy are measured at rest too.
pub(crate) fn compile_seg(ctx: &EvalContext, e: &SegExpr, frozen: bool) -> Result<PointSet> {
    match e {
        SegExpr::Ref(id) => segment_set(ctx, *id, frozen),
        SegExpr::Old(inner) => compile_seg(ctx, inner, true),
        SegExpr::Region(side, inner) => eval_region(ctx, *side, &compile_seg(ctx, inner, frozen)?),
        SegExpr::Union(v) | SegExpr::Inter(v) => {
            let sets = v.iter().map(|x| compile_seg(ctx, x, frozen)).collect::<Result<Vec<_>>>()?;
            eval_setop(ctx, &sets, matches!(e, SegExpr::Inter(_)))
        }
    }
}

fn compile_num(ctx: &EvalContext, n: &NumExpr) -> Result<CNum> {
    Ok(match n {
        NumExpr::Lit(v) => CNum::Lit(*v),
        NumExpr::Arith(op, a, b) => CNum::Arith(*op, Box::new(compile_num(ctx, a)?), Box::new(compile_num(ctx, b)?)),
        NumExpr::Attr(op, s) => CNum::Attr(*op, compile_seg(ctx, s, false)?),
        NumExpr::Rel(op, a, b) => CNum::Rel(*op, compile_seg(ctx, a, false)?, compile_seg(ctx, b, false)?),
    })
}

fn anchor_segment(e: &SegExpr, what: &str) -> Result<(usize, bool)> {
    e.single()
        .ok_or_else(|| Error::Eval(format!("coincide {what} must be a segment or old(segment), got `{e}`")))
}

/// Freezes derived memberships at the context's current motions.
pub fn compile(ctx: &EvalContext, c: &Constraint) -> Result<CompiledConstraint> {
    let tree = match c {
        Constraint::Compare(op, a, b) => CTree::Compare(*op, compile_num(ctx, a)?, compile_num(ctx, b)?),
        Constraint::Pair(op, a, b) => CTree::Pair(*op, compile_seg(ctx, a, false)?, compile_seg(ctx, b, false)?),
        Constraint::Coincide { a, pa, b, pb } => {
            let (sa, fa) = anchor_segment(a, "first argument")?;
            let (sb, fb) = anchor_segment(b, "third argument")?;
            for s in [sa, sb] {
                if s >= ctx.scene.len() {
                    return Err(Error::Eval(format!("seg{s} does not exist")));
                }
            }
            CTree::Coincide { a: sa, fa, pa: *pa, b: sb, fb, pb: *pb }
        }
    };
    Ok(CompiledConstraint {
        source: c.clone(),
        weight: 1.0,
        tree,
    })
}

pub fn compile_all(ctx: &EvalContext, cs: &[Constraint]) -> Result<Vec<CompiledConstraint>> {
    cs.iter()
        .enumerate()
        .map(|(i, c)| {
            compile(ctx, c).map_err(|e| match e {
                Error::Eval(m) => Error::Eval(format!("constraint {} `{c}`: {m}", i + 1)),
                other => other,
            })
        })
        .collect()
}
