//! Operator inventory: canonical names, aliases and signatures.

use super::ast::*;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Op {
    Motion(MotionKind),
    Cmp(CmpOp),
    Pair(PairOp),
    Coincide,
    Arith(ArithOp),
    Attr(AttrOp),
    Old,
    Region(Side),
    Union,
    Inter,
    Rel(RelOp),
}

pub const CANONICAL: &[(&str, Op)] = &[
    ("translate", Op::Motion(MotionKind::Translate)),
    ("rotate", Op::Motion(MotionKind::Rotate)),
    ("scale", Op::Motion(MotionKind::Scale)),
    ("stay", Op::Motion(MotionKind::Stay)),
    ("adjust", Op::Motion(MotionKind::Adjust)),
    ("equal", Op::Cmp(CmpOp::Equal)),
    ("smaller", Op::Cmp(CmpOp::Smaller)),
    ("larger", Op::Cmp(CmpOp::Larger)),
    ("coincide_on_point", Op::Coincide),
    ("inside", Op::Pair(PairOp::Inside)),
    ("touch", Op::Pair(PairOp::Touch)),
    ("overlap", Op::Pair(PairOp::Overlap)),
    ("detach", Op::Pair(PairOp::Detach)),
    ("on_top", Op::Pair(PairOp::OnTop)),
    ("on_bottom", Op::Pair(PairOp::OnBottom)),
    ("on_left", Op::Pair(PairOp::OnLeft)),
    ("on_right", Op::Pair(PairOp::OnRight)),
    ("plus", Op::Arith(ArithOp::Plus)),
    ("minus", Op::Arith(ArithOp::Minus)),
    ("mul", Op::Arith(ArithOp::Mul)),
    ("div", Op::Arith(ArithOp::Div)),
    ("min", Op::Arith(ArithOp::Min)),
    ("max", Op::Arith(ArithOp::Max)),
    ("vert_len", Op::Attr(AttrOp::VertLen)),
    ("hori_len", Op::Attr(AttrOp::HoriLen)),
    ("center_x", Op::Attr(AttrOp::CenterX)),
    ("center_y", Op::Attr(AttrOp::CenterY)),
    ("long_dir_x", Op::Attr(AttrOp::LongDirX)),
    ("long_dir_y", Op::Attr(AttrOp::LongDirY)),
    ("short_dir_x", Op::Attr(AttrOp::ShortDirX)),
    ("short_dir_y", Op::Attr(AttrOp::ShortDirY)),
    ("min_x", Op::Attr(AttrOp::MinX)),
    ("min_y", Op::Attr(AttrOp::MinY)),
    ("max_x", Op::Attr(AttrOp::MaxX)),
    ("max_y", Op::Attr(AttrOp::MaxY)),
    ("old", Op::Old),
    ("top", Op::Region(Side::Top)),
    ("bot", Op::Region(Side::Bot)),
    ("left", Op::Region(Side::Left)),
    ("right", Op::Region(Side::Right)),
    ("avg_dist", Op::Rel(RelOp::AvgDist)),
    ("min_dist", Op::Rel(RelOp::MinDist)),
    ("max_dist", Op::Rel(RelOp::MaxDist)),
    ("angle", Op::Rel(RelOp::Angle)),
    ("center_dist", Op::Rel(RelOp::CenterDist)),
    ("union", Op::Union),
    ("inter", Op::Inter),
];

/// Surface names used by generated programs, mapped to canonical names.
pub const ALIASES: &[(&str, &str)] = &[
    ("horizontal_length", "hori_len"),
    ("vertical_length", "vert_len"),
    ("old_copy", "old"),
    ("move", "translate"),
    ("top_inner_region", "top"),
    ("bottom_inner_region", "bot"),
    ("left_inner_region", "left"),
    ("right_inner_region", "right"),
    ("center_distance", "center_dist"),
    ("min_distance", "min_dist"),
    ("max_distance", "max_dist"),
    ("avg_distance", "avg_dist"),
];

pub fn lookup(name: &str) -> Option<Op> {
    let canonical = ALIASES
        .iter()
        .find(|(a, _)| *a == name)
        .map(|(_, c)| *c)
        .unwrap_or(name);
    CANONICAL
        .iter()
        .find(|(n, _)| *n == canonical)
        .map(|(_, op)| *op)
}

pub fn name_of(op: Op) -> &'static str {
    CANONICAL
        .iter()
        .find(|(_, o)| *o == op)
        .map(|(n, _)| *n)
        .expect("every op has a canonical name")
}

/// Every canonical operator name.
pub fn inventory() -> impl Iterator<Item = &'static str> {
    CANONICAL.iter().map(|(n, _)| *n)
}

fn edit_distance(a: &str, b: &str) -> usize {
    let b: Vec<char> = b.chars().collect();
    let mut row: Vec<usize> = (0..=b.len()).collect();
    for (i, ca) in a.chars().enumerate() {
        let mut diag = row[0];
        row[0] = i + 1;
        for j in 0..b.len() {
            let up = row[j + 1];
            row[j + 1] = if ca == b[j] {
                diag
            } else {
                1 + diag.min(up).min(row[j])
            };
            diag = up;
        }
    }
    row[b.len()]
}

/// Closest known name (canonical or alias) for an unknown identifier.
pub fn suggest(name: &str) -> Option<&'static str> {
    CANONICAL
        .iter()
        .map(|(n, _)| *n)
        .chain(ALIASES.iter().map(|(a, _)| *a))
        .map(|n| (edit_distance(name, n), n))
        .filter(|(d, n)| *d <= 3.max(n.len() / 3))
        .min_by_key(|(d, _)| *d)
        .map(|(_, n)| n)
}
