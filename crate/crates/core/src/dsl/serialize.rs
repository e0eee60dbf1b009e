use std::fmt::{self, Write};

use super::ast::*;
use super::ops::{name_of, Op};

fn seg_name(s: &SegExpr) -> &'static str {
    match s {
        SegExpr::Ref(_) => unreachable!(),
        SegExpr::Old(_) => name_of(Op::Old),
        SegExpr::Region(side, _) => name_of(Op::Region(*side)),
        SegExpr::Union(_) => name_of(Op::Union),
        SegExpr::Inter(_) => name_of(Op::Inter),
    }
}

pub fn write_seg(out: &mut impl Write, s: &SegExpr) -> fmt::Result {
    match s {
        SegExpr::Ref(id) => write!(out, "seg{id}"),
        SegExpr::Old(e) | SegExpr::Region(_, e) => {
            write!(out, "{}(", seg_name(s))?;
            write_seg(out, e)?;
            out.write_char(')')
        }
        SegExpr::Union(v) | SegExpr::Inter(v) => {
            write!(out, "{}(", seg_name(s))?;
            for (i, e) in v.iter().enumerate() {
                if i > 0 {
                    out.write_str(", ")?;
                }
                write_seg(out, e)?;
            }
            out.write_char(')')
        }
    }
}

pub fn write_num(out: &mut impl Write, n: &NumExpr) -> fmt::Result {
    match n {
        NumExpr::Lit(v) => write!(out, "{v}"),
        NumExpr::Arith(op, a, b) => {
            write!(out, "{}(", name_of(Op::Arith(*op)))?;
            write_num(out, a)?;
            out.write_str(", ")?;
            write_num(out, b)?;
            out.write_char(')')
        }
        NumExpr::Attr(op, s) => {
            write!(out, "{}(", name_of(Op::Attr(*op)))?;
            write_seg(out, s)?;
            out.write_char(')')
        }
        NumExpr::Rel(op, a, b) => {
            write!(out, "{}(", name_of(Op::Rel(*op)))?;
            write_seg(out, a)?;
            out.write_str(", ")?;
            write_seg(out, b)?;
            out.write_char(')')
        }
    }
}

pub fn write_constraint(out: &mut impl Write, c: &Constraint) -> fmt::Result {
    match c {
        Constraint::Compare(op, a, b) => {
            write!(out, "{}(", name_of(Op::Cmp(*op)))?;
            write_num(out, a)?;
            out.write_str(", ")?;
            write_num(out, b)?;
            out.write_char(')')
        }
        Constraint::Pair(op, a, b) => {
            write!(out, "{}(", name_of(Op::Pair(*op)))?;
            write_seg(out, a)?;
            out.write_str(", ")?;
            write_seg(out, b)?;
            out.write_char(')')
        }
        Constraint::Coincide { a, pa, b, pb } => {
            write!(out, "{}(", name_of(Op::Coincide))?;
            write_seg(out, a)?;
            write!(out, ", [{}, {}], ", pa.x, pa.y)?;
            write_seg(out, b)?;
            write!(out, ", [{}, {}])", pb.x, pb.y)
        }
    }
}

impl fmt::Display for SegExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_seg(f, self)
    }
}

impl fmt::Display for NumExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_num(f, self)
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_constraint(f, self)
    }
}

impl fmt::Display for MotionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(seg{})", name_of(Op::Motion(self.kind)), self.target)
    }
}

/// Canonical text: functional arithmetic, canonical names, one statement per line,
/// motion statements first.
pub fn serialize(p: &ConstraintProgram) -> String {
    let mut out = String::new();
    for m in &p.motions {
        writeln!(out, "{m}").unwrap();
    }
    for c in &p.constraints {
        writeln!(out, "{c}").unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::super::parse_program;
    use super::*;

    #[test]
    fn canonical_names() {
        let p = parse_program(
            "move(seg1)\nequal(horizontal_length(seg1), 0.5 * horizontal_length(old_copy(seg1)))",
            None,
        )
        .unwrap();
        assert_eq!(
            serialize(&p),
            "translate(seg1)\nequal(hori_len(seg1), mul(0.5, hori_len(old(seg1))))\n"
        );
    }

    #[test]
    fn empty_program() {
        assert_eq!(serialize(&ConstraintProgram::default()), "");
        assert!(parse_program("", None).unwrap().is_empty());
    }
}
