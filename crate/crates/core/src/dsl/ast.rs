use std::collections::BTreeSet;

use crate::geom::Vec2;

pub type SegId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MotionKind {
    Translate,
    Rotate,
    Scale,
    Stay,
    /// Motion decided by the search, starting fully free.
    Adjust,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MotionSpec {
    pub target: SegId,
    pub kind: MotionKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    Top,
    Bot,
    Left,
    Right,
}

/// Segment-valued expression.
#[derive(Clone, Debug, PartialEq)]
pub enum SegExpr {
    Ref(SegId),
    /// Rest configuration, ignores motion.
    Old(Box<SegExpr>),
    Region(Side, Box<SegExpr>),
    Union(Vec<SegExpr>),
    Inter(Vec<SegExpr>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ArithOp {
    Plus,
    Minus,
    Mul,
    Div,
    Min,
    Max,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AttrOp {
    VertLen,
    HoriLen,
    CenterX,
    CenterY,
    LongDirX,
    LongDirY,
    ShortDirX,
    ShortDirY,
    MinX,
    MinY,
    MaxX,
    MaxY,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RelOp {
    AvgDist,
    MinDist,
    MaxDist,
    Angle,
    CenterDist,
}

/// Number-valued expression.
#[derive(Clone, Debug, PartialEq)]
pub enum NumExpr {
    Lit(f64),
    Arith(ArithOp, Box<NumExpr>, Box<NumExpr>),
    Attr(AttrOp, SegExpr),
    Rel(RelOp, SegExpr, SegExpr),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Equal,
    Smaller,
    Larger,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PairOp {
    Inside,
    Touch,
    Overlap,
    Detach,
    OnTop,
    OnBottom,
    OnLeft,
    OnRight,
}

/// A constraint tree; its root evaluates to a violation value.
#[derive(Clone, Debug, PartialEq)]
pub enum Constraint {
    Compare(CmpOp, NumExpr, NumExpr),
    Pair(PairOp, SegExpr, SegExpr),
    /// Anchor points are rest-configuration world coordinates.
    Coincide {
        a: SegExpr,
        pa: Vec2,
        b: SegExpr,
        pb: Vec2,
    },
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConstraintProgram {
    pub motions: Vec<MotionSpec>,
    pub constraints: Vec<Constraint>,
}

impl SegExpr {
    pub fn collect_refs(&self, out: &mut BTreeSet<SegId>) {
        match self {
            SegExpr::Ref(id) => {
                out.insert(*id);
            }
            SegExpr::Old(e) | SegExpr::Region(_, e) => e.collect_refs(out),
            SegExpr::Union(v) | SegExpr::Inter(v) => v.iter().for_each(|e| e.collect_refs(out)),
        }
    }

    /// The single segment behind `segK` or `old(segK)`, if that is all this is.
    pub fn single(&self) -> Option<(SegId, bool)> {
        match self {
            SegExpr::Ref(id) => Some((*id, false)),
            SegExpr::Old(e) => e.single().map(|(id, _)| (id, true)),
            _ => None,
        }
    }
}

impl NumExpr {
    pub fn collect_refs(&self, out: &mut BTreeSet<SegId>) {
        match self {
            NumExpr::Lit(_) => {}
            NumExpr::Arith(_, a, b) => {
                a.collect_refs(out);
                b.collect_refs(out);
            }
            NumExpr::Attr(_, s) => s.collect_refs(out),
            NumExpr::Rel(_, a, b) => {
                a.collect_refs(out);
                b.collect_refs(out);
            }
        }
    }
}

impl Constraint {
    /// Every segment mentioned anywhere in the tree, wrappers included.
    pub fn segments(&self) -> BTreeSet<SegId> {
        let mut out = BTreeSet::new();
        match self {
            Constraint::Compare(_, a, b) => {
                a.collect_refs(&mut out);
                b.collect_refs(&mut out);
            }
            Constraint::Pair(_, a, b) | Constraint::Coincide { a, b, .. } => {
                a.collect_refs(&mut out);
                b.collect_refs(&mut out);
            }
        }
        out
    }
}

impl ConstraintProgram {
    pub fn is_empty(&self) -> bool {
        self.motions.is_empty() && self.constraints.is_empty()
    }

    /// Segments referenced by constraints or motion statements.
    pub fn referenced(&self) -> BTreeSet<SegId> {
        let mut out: BTreeSet<SegId> = self.motions.iter().map(|m| m.target).collect();
        for c in &self.constraints {
            out.extend(c.segments());
        }
        out
    }
}
