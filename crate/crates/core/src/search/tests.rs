use super::*;
use crate::dsl::parse;
use crate::fixtures;
use crate::relations::{build_graph, BridgeHeuristic, RelationConfig};

fn setup(scene: &Scene, src: &str) -> (ConstraintProgram, RelationGraph) {
    let p = parse(src, scene).unwrap();
    let g = build_graph(scene, &RelationConfig::default(), &BridgeHeuristic);
    (p, g)
}

#[test]
fn init_states_from_motion_statements() {
    let s = fixtures::lamp();
    let (p, g) = setup(&s, "move(seg4)\nscale(seg3)\nstay(seg6)\nadjust(seg2)");
    let st = init_states(&p, s.len(), &g).unwrap();
    assert_eq!(st.motion[4], MotionState::T);
    assert_eq!(st.motion[3], MotionState::TS);
    assert_eq!((st.motion[6], st.pinned[6]), (MotionState::N, true));
    assert_eq!((st.motion[2], st.pinned[2]), (MotionState::TRS, false));
    assert!(st.pinned[4] && st.pinned[3]);
    assert!(st.relation.iter().all(|r| *r == RelState::ST));
    let (p, _) = setup(&s, "translate(seg1)\nrotate(seg1)");
    assert_eq!(init_states(&p, s.len(), &g).unwrap().motion[1], MotionState::TR);
    let (p, _) = setup(&s, "");
    let st = init_states(&p, s.len(), &g).unwrap();
    assert!(st.motion.iter().all(|m| *m == MotionState::N) && !st.pinned.iter().any(|p| *p));
    let (p, _) = setup(&s, "stay(seg1)\nmove(seg1)");
    assert!(init_states(&p, s.len(), &g).is_err());
}

#[test]
fn front_of_the_lamp() {
    let s = fixtures::lamp();
    let (p, g) = setup(&s, "touch(seg3, seg0)");
    assert_eq!(g.edges.len(), 4);
    let f = front_edges(&p, &g);
    let pairs: Vec<(usize, usize)> = f.iter().map(|&i| (g.edges[i].a, g.edges[i].b)).collect();
    assert_eq!(pairs, vec![(0, 1), (2, 3), (3, 4)]);
    let (p, _) = setup(&s, "equal(hori_len(seg5), 100)");
    assert!(front_edges(&p, &g).is_empty());
}

#[test]
fn front_of_a_triangle() {
    let s = Scene::from_polygons(
        512,
        512,
        &[
            ("t:a", crate::geom::rect(100.0, 100.0, 140.0, 140.0)),
            ("t:b", crate::geom::rect(130.0, 100.0, 170.0, 140.0)),
            ("t:c", crate::geom::rect(110.0, 130.0, 160.0, 170.0)),
        ],
    )
    .unwrap();
    let (p, g) = setup(&s, "equal(center_x(seg0), 90)");
    assert_eq!(g.edges.len(), 3);
    assert_eq!(front_edges(&p, &g).len(), 2);
}

#[test]
fn subsets_respect_the_cap() {
    assert_eq!(subsets(&[1, 2, 3], 8).len(), 7);
    assert_eq!(subsets(&(0..10).collect::<Vec<_>>(), 8).len(), 10 + 45);
    assert_eq!(subsets(&[4, 7], 8), vec![vec![4], vec![7], vec![4, 7]]);
}

#[test]
fn identity_request_changes_nothing() {
    let s = fixtures::lamp();
    let (p, g) = setup(&s, "equal(hori_len(seg0), 80)");
    let out = flip_and_solve(&s, &p, &g, &SearchConfig::default()).unwrap();
    assert!(out.result.score < 1e-9);
    assert!(out.result.motions.iter().all(|m| m.is_identity()));
    assert!(out.states.relation.iter().all(|r| *r == RelState::ST));
    assert!(out.report.trace.iter().filter(|t| t.pass != "init").all(|t| t.pass == "motion" || !t.accepted));
}

#[test]
fn satisfiable_at_all_st_keeps_every_edge() {
    let s = fixtures::lamp();
    let (p, g) = setup(&s, "translate(seg3)\nequal(center_y(seg3), 250)");
    let out = flip_and_solve(&s, &p, &g, &SearchConfig::default()).unwrap();
    assert!(out.result.score < 1.0, "{}", out.result.score);
    assert!(out.states.relation.iter().all(|r| *r == RelState::ST), "{}", out.states);
}

#[test]
fn lamp_shade_moves_to_the_base() {
    let s = fixtures::lamp();
    let (p, g) = setup(&s, "translate(seg3)\ntouch(seg3, seg0)");
    let out = flip_and_solve(&s, &p, &g, &SearchConfig::default()).unwrap();
    assert!(out.result.score < 1.0, "{} {}", out.result.score, out.states);
    for (e, st) in g.edges.iter().zip(&out.states.relation) {
        if e.category == Category::IntraCrucial {
            assert_ne!(*st, RelState::N);
        }
    }
    assert!(out.result.motions[0].is_identity(), "base moved: {}", out.states);
    assert_eq!(out.states.motion[5], MotionState::N);
    assert_eq!(out.states.motion[6], MotionState::N);
    assert!(out.report.solves <= 400);
}

#[test]
fn connector_follows_by_translation() {
    let s = fixtures::pole_lamp();
    let (p, g) = setup(&s, "translate(seg2)\nequal(center_x(seg2), 300)\ntranslate(seg0)\nequal(center_x(seg0), 300)");
    let out = flip_and_solve(&s, &p, &g, &SearchConfig::default()).unwrap();
    assert!(out.result.score < 1.0);
    assert_eq!(out.states.motion[1], MotionState::T, "{}", out.states);
    assert!(out.states.relation.iter().all(|r| *r == RelState::ST));
}

#[test]
fn only_scaling_satisfies_a_length_change() {
    let s = fixtures::pole_lamp();
    let (p, g) = setup(&s, "stay(seg0)\nequal(vert_len(seg1), 1.5 * vert_len(old(seg1)))");
    let out = flip_and_solve(&s, &p, &g, &SearchConfig::default()).unwrap();
    assert!(out.result.score < 1.0, "{} {}", out.result.score, out.states);
    assert!(out.states.motion[1].scales(), "{}", out.states);
}

#[test]
fn handles_rotate_apart() {
    let s = fixtures::basket();
    let (p, g) = setup(&s, "rotate(seg1)\nrotate(seg2)\ndetach(seg1, seg2)");
    let out = flip_and_solve(&s, &p, &g, &SearchConfig::default()).unwrap();
    let hh = g.edge_between(1, 2).unwrap();
    assert_eq!(out.states.relation[hh], RelState::N, "{}", out.states);
    for b in [g.edge_between(0, 1).unwrap(), g.edge_between(0, 2).unwrap()] {
        assert_ne!(out.states.relation[b], RelState::N);
    }
    assert!(out.result.score < 1.0, "{}", out.result.score);
}

#[test]
fn over_constrained_is_flagged() {
    let s = fixtures::lamp();
    let (p, g) = setup(&s, "stay(seg5)\nstay(seg6)\ntouch(seg5, seg6)");
    let out = flip_and_solve(&s, &p, &g, &SearchConfig::default()).unwrap();
    assert!(out.result.flags.iter().any(|f| f == crate::solver::FLAG_UNSATISFIABLE));
    assert!(out.result.score > 1.0);
}

#[test]
fn budget_is_respected() {
    let s = fixtures::lamp();
    let (p, g) = setup(&s, "translate(seg3)\ntouch(seg3, seg0)");
    let cfg = SearchConfig {
        budget: 3,
        ..Default::default()
    };
    let out = flip_and_solve(&s, &p, &g, &cfg).unwrap();
    assert!(out.report.solves <= 3);
    assert!(out.result.flags.iter().any(|f| f == FLAG_BUDGET));
}

#[test]
fn sequential_and_parallel_agree() {
    let s = fixtures::basket();
    let (p, g) = setup(&s, "rotate(seg1)\nrotate(seg2)\ndetach(seg1, seg2)");
    let seq = SearchConfig {
        exec: Exec::Sequential,
        ..Default::default()
    };
    let a = flip_and_solve(&s, &p, &g, &seq).unwrap();
    let b = flip_and_solve(&s, &p, &g, &SearchConfig::default()).unwrap();
    assert_eq!(a.states, b.states);
    assert_eq!(a.result, b.result);
}

#[test]
fn ablations_switch_off_each_pass() {
    let s = fixtures::basket();
    let (p, g) = setup(&s, "rotate(seg1)\nrotate(seg2)\ndetach(seg1, seg2)");
    let no_rel = SearchConfig {
        relation_search: false,
        ..Default::default()
    };
    let out = flip_and_solve(&s, &p, &g, &no_rel).unwrap();
    assert!(out.states.relation.iter().all(|r| *r == RelState::ST));
    assert!(out.report.trace.iter().all(|t| t.pass != "relation"));
    let no_motion = SearchConfig {
        motion_search: false,
        ..Default::default()
    };
    let out = flip_and_solve(&s, &p, &g, &no_motion).unwrap();
    assert_eq!(out.states.motion[0], MotionState::TRS);
    assert!(out.report.trace.iter().all(|t| t.pass != "motion"));
}
