use std::collections::BTreeSet;
use std::fmt;

use super::ast::*;
use crate::scene::Scene;

/// Report-only program check.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub referenced: BTreeSet<SegId>,
    /// Targets of translate/rotate/scale/adjust.
    pub movable: BTreeSet<SegId>,
    pub pinned: BTreeSet<SegId>,
    pub constraint_count: usize,
    pub warnings: Vec<String>,
    pub errors: Vec<String>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.errors.is_empty()
    }
}

pub fn validate(p: &ConstraintProgram, scene: &Scene) -> ValidationReport {
    let mut r = ValidationReport {
        referenced: p.referenced(),
        constraint_count: p.constraints.len(),
        ..Default::default()
    };
    for id in &r.referenced {
        if *id >= scene.len() {
            r.errors.push(format!(
                "seg{id} does not exist (scene has {} segments)",
                scene.len()
            ));
        }
    }
    for m in &p.motions {
        if m.kind == MotionKind::Stay {
            r.pinned.insert(m.target);
        } else {
            r.movable.insert(m.target);
        }
    }
    for id in r.pinned.intersection(&r.movable) {
        r.errors.push(format!("seg{id} is both stay-pinned and given a motion"));
    }
    for (i, c) in p.constraints.iter().enumerate() {
        let segs = c.segments();
        if !segs.is_empty() && segs.iter().all(|s| r.pinned.contains(s)) {
            r.warnings.push(format!(
                "constraint {} `{c}` only references stay-pinned segments and cannot be satisfied by motion",
                i + 1
            ));
        }
    }
    r
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |s: &BTreeSet<SegId>| {
            s.iter().map(|i| format!("seg{i}")).collect::<Vec<_>>().join(", ")
        };
        writeln!(f, "constraints: {}", self.constraint_count)?;
        writeln!(f, "referenced segments ({}): {}", self.referenced.len(), list(&self.referenced))?;
        writeln!(f, "movable segments ({}): {}", self.movable.len(), list(&self.movable))?;
        writeln!(f, "pinned segments ({}): {}", self.pinned.len(), list(&self.pinned))?;
        for w in &self.warnings {
            writeln!(f, "warning: {w}")?;
        }
        for e in &self.errors {
            writeln!(f, "error: {e}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse_program;
    use super::*;
    use crate::scene::test_util::*;

    fn five() -> Scene {
        let rings: Vec<_> = (0..5).map(|i| rect(i as f64 * 20.0, 0.0, i as f64 * 20.0 + 10.0, 10.0)).collect();
        scene_of(&rings)
    }

    #[test]
    fn stay_only_constraint_warns() {
        let p = parse_program("stay(seg4)\nequal(hori_len(seg4), 3)", None).unwrap();
        let r = validate(&p, &five());
        assert!(r.is_ok());
        assert_eq!(r.warnings.len(), 1);
    }

    #[test]
    fn lamp_like_program() {
        let p = parse_program("move(seg0)\ntouch(seg0, seg4)", None).unwrap();
        let r = validate(&p, &five());
        assert_eq!(r.referenced.len(), 2);
        assert_eq!(r.movable.len(), 1);
        assert!(r.warnings.is_empty() && r.is_ok());
    }

    #[test]
    fn missing_segment_is_an_error() {
        let p = parse_program("touch(seg0, seg99)", None).unwrap();
        let r = validate(&p, &five());
        assert!(!r.is_ok());
        assert!(r.errors[0].contains("seg99"));
    }
}
