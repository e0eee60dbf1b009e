//! Flip-and-Solve: discrete search over relation and motion states, each
//! candidate scored by a full Solve.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::Serialize;

use crate::dsl::{Constraint, ConstraintProgram, MotionKind};
use crate::error::{Error, Result};
use crate::par::{self, Exec};
use crate::relations::{edge_constraints, Category, RelState, RelationGraph};
use crate::scene::{MotionParams, Scene};
use crate::solver::{solve, solve_from, MotionState, SolveConfig, SolveResult};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct StateAssignment {
    pub motion: Vec<MotionState>,
    pub pinned: Vec<bool>,
    pub relation: Vec<RelState>,
}

impl StateAssignment {
    /// ST = 2, WK = 1, N = 0, summed over edges.
    pub fn strength(&self) -> usize {
        self.relation.iter().map(|s| s.strength()).sum()
    }

    pub fn dofs(&self) -> usize {
        self.motion.iter().map(|m| m.dofs()).sum()
    }
}

impl fmt::Display for StateAssignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m: Vec<String> = self
            .motion
            .iter()
            .enumerate()
            .map(|(i, s)| format!("seg{i}:{s}{}", if self.pinned[i] { "*" } else { "" }))
            .collect();
        let r: Vec<String> = self.relation.iter().enumerate().map(|(i, s)| format!("e{i}:{s}")).collect();
        write!(f, "motion [{}] relation [{}]", m.join(" "), r.join(" "))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchConfig {
    /// Stop searching once the score is below this.
    pub eps_stop: f64,
    pub delta_tie: f64,
    /// Full power set of the front up to this size, otherwise singletons and pairs.
    pub max_power_set: usize,
    pub budget: usize,
    /// Start each candidate Solve from the current best motions instead of identity.
    pub warm_start: bool,
    /// When off, every relation stays ST.
    pub relation_search: bool,
    /// When off, every unpinned segment gets TRS.
    pub motion_search: bool,
    pub exec: Exec,
    pub solve: SolveConfig,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            eps_stop: 1.0,
            delta_tie: 1e-4,
            max_power_set: 8,
            budget: 400,
            warm_start: false,
            relation_search: true,
            motion_search: true,
            exec: Exec::Parallel,
            solve: SolveConfig::default(),
        }
    }
}

impl SearchConfig {
    pub fn check(&self) -> Result<()> {
        if !(self.eps_stop > 0.0) {
            return Err(Error::Config("eps_stop must be positive".into()));
        }
        self.solve.check()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceEntry {
    pub pass: &'static str,
    pub candidate: String,
    pub score: f64,
    pub accepted: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SearchReport {
    pub solves: usize,
    pub flags: Vec<String>,
    pub trace: Vec<TraceEntry>,
}

pub const FLAG_BUDGET: &str = "solve budget exhausted";

/// Motion states from the program's motion statements; every edge starts ST.
pub fn init_states(program: &ConstraintProgram, n_nodes: usize, graph: &RelationGraph) -> Result<StateAssignment> {
    let mut flags = vec![(false, false, false, false, false); n_nodes];
    for m in &program.motions {
        let f = flags
            .get_mut(m.target)
            .ok_or_else(|| Error::Invalid(format!("seg{} does not exist", m.target)))?;
        match m.kind {
            MotionKind::Translate => f.0 = true,
            MotionKind::Rotate => f.1 = true,
            MotionKind::Scale => f.2 = true,
            MotionKind::Stay => f.3 = true,
            MotionKind::Adjust => f.4 = true,
        }
    }
    let mut s = StateAssignment {
        motion: vec![MotionState::N; n_nodes],
        pinned: vec![false; n_nodes],
        relation: vec![RelState::ST; graph.edges.len()],
    };
    for (i, &(t, r, sc, stay, adjust)) in flags.iter().enumerate() {
        let moves = t || r || sc;
        if stay && (moves || adjust) {
            return Err(Error::Invalid(format!("seg{i} is both stay-pinned and given a motion")));
        }
        if stay {
            s.pinned[i] = true;
        } else if moves {
            if adjust {
                log::warn!("seg{i}: explicit motion overrides adjust");
            }
            s.motion[i] = MotionState::with(r, sc);
            s.pinned[i] = true;
        } else if adjust {
            s.motion[i] = MotionState::TRS;
        }
    }
    Ok(s)
}

/// Edges with an endpoint referenced by the program.
pub fn front_edges(program: &ConstraintProgram, graph: &RelationGraph) -> Vec<usize> {
    let refs = program.referenced();
    (0..graph.edges.len())
        .filter(|&i| refs.contains(&graph.edges[i].a) || refs.contains(&graph.edges[i].b))
        .collect()
}

/// The constraints active under `s`: program first, then edges in order.
pub fn active_constraints(program: &ConstraintProgram, graph: &RelationGraph, s: &StateAssignment) -> Vec<Constraint> {
    let mut out = program.constraints.clone();
    for (e, st) in graph.edges.iter().zip(&s.relation) {
        out.extend(edge_constraints(e, *st));
    }
    out
}

/// Solver with memoization, budget and tie-aware comparison.
pub struct Searcher<'a> {
    pub scene: &'a Scene,
    pub program: &'a ConstraintProgram,
    pub graph: &'a RelationGraph,
    pub cfg: &'a SearchConfig,
    pub report: SearchReport,
    cache: HashMap<StateAssignment, SolveResult>,
    warm: Option<Vec<MotionParams>>,
}

impl<'a> Searcher<'a> {
    pub fn new(scene: &'a Scene, program: &'a ConstraintProgram, graph: &'a RelationGraph, cfg: &'a SearchConfig) -> Self {
        Searcher {
            scene,
            program,
            graph,
            cfg,
            report: SearchReport::default(),
            cache: HashMap::new(),
            warm: None,
        }
    }

    /// Scores below the solver's convergence threshold are all equally solved.
    fn key(&self, score: f64) -> f64 {
        if score < self.cfg.solve.eps_conv {
            0.0
        } else {
            score
        }
    }

    fn better(&self, a: f64, b: f64) -> bool {
        self.key(a) < self.key(b) - self.cfg.delta_tie
    }

    fn tied(&self, a: f64, b: f64) -> bool {
        self.key(a) <= self.key(b) + self.cfg.delta_tie
    }

    fn budget_left(&self) -> usize {
        self.cfg.budget.saturating_sub(self.report.solves)
    }

    /// Solves every candidate not yet cached; `None` once the budget ran out.
    pub fn evaluate(&mut self, cands: &[StateAssignment]) -> Result<Vec<Option<SolveResult>>> {
        let mut todo: Vec<StateAssignment> = Vec::new();
        for c in cands {
            if !self.cache.contains_key(c) && !todo.contains(c) {
                todo.push(c.clone());
            }
        }
        if todo.len() > self.budget_left() {
            todo.truncate(self.budget_left());
            if !self.report.flags.iter().any(|f| f == FLAG_BUDGET) {
                self.report.flags.push(FLAG_BUDGET.to_string());
            }
        }
        let (scene, program, graph, cfg) = (self.scene, self.program, self.graph, self.cfg);
        let warm = self.warm.clone();
        let results = par::map(cfg.exec, &todo, |s| {
            let cs = active_constraints(program, graph, s);
            match &warm {
                Some(w) => solve_from(scene, &cs, &s.motion, w, &cfg.solve),
                None => solve(scene, &cs, &s.motion, &cfg.solve),
            }
        });
        self.report.solves += todo.len();
        for (s, r) in todo.into_iter().zip(results) {
            self.cache.insert(s, r?);
        }
        Ok(cands.iter().map(|c| self.cache.get(c).cloned()).collect())
    }

    fn note(&mut self, pass: &'static str, cand: &StateAssignment, score: f64, accepted: bool) {
        log::debug!("{pass}: {cand} score {score:.6} {}", if accepted { "accepted" } else { "rejected" });
        self.report.trace.push(TraceEntry {
            pass,
            candidate: cand.to_string(),
            score,
            accepted,
        });
    }

    fn adopt(&mut self, r: &SolveResult) {
        if self.cfg.warm_start {
            self.warm = Some(r.motions.clone());
        }
    }
}

/// Non-empty subsets of `front` in size-then-lexicographic order.
fn subsets(front: &[usize], max_power_set: usize) -> Vec<Vec<usize>> {
    let n = front.len();
    let max_size = if n <= max_power_set { n } else { 2.min(n) };
    let mut out = Vec::new();
    fn rec(front: &[usize], start: usize, size: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == size {
            out.push(cur.clone());
            return;
        }
        for i in start..front.len() {
            cur.push(front[i]);
            rec(front, i + 1, size, cur, out);
            cur.pop();
        }
    }
    for size in 1..=max_size {
        rec(front, 0, size, &mut Vec::new(), &mut out);
    }
    out
}

/// The four cumulative flips for one subset of edges.
fn flip_chain(s: &StateAssignment, graph: &RelationGraph, subset: &[usize]) -> Vec<StateAssignment> {
    type Step = (Category, RelState, RelState);
    const STEPS: [Step; 4] = [
        (Category::Inter, RelState::ST, RelState::WK),
        (Category::Inter, RelState::WK, RelState::N),
        (Category::IntraNoncrucial, RelState::ST, RelState::N),
        (Category::IntraCrucial, RelState::ST, RelState::WK),
    ];
    let mut cur = s.clone();
    let mut out = Vec::new();
    for (cat, from, to) in STEPS {
        let mut changed = false;
        for &e in subset {
            if graph.edges[e].category == cat && cur.relation[e] == from {
                cur.relation[e] = to;
                changed = true;
            }
        }
        if changed {
            out.push(cur.clone());
        }
    }
    out
}

/// Unpinned nodes connected to the program's nodes move freely while relations
/// are searched; the motion pass tightens them afterwards.
pub fn relax_for_relation_pass(s: &StateAssignment, program: &ConstraintProgram, graph: &RelationGraph) -> StateAssignment {
    let mut out = s.clone();
    let reach = reachable(graph, &program.referenced(), |_| true);
    for n in reach {
        if !out.pinned[n] && out.motion[n] == MotionState::N {
            out.motion[n] = MotionState::TRS;
        }
    }
    out
}

fn reachable(graph: &RelationGraph, from: &BTreeSet<usize>, edge_ok: impl Fn(usize) -> bool) -> BTreeSet<usize> {
    let mut seen: BTreeSet<usize> = from.iter().copied().filter(|&n| n < graph.nodes.len()).collect();
    let mut stack: Vec<usize> = seen.iter().copied().collect();
    while let Some(n) = stack.pop() {
        for &e in graph.incident(n) {
            if edge_ok(e) {
                let m = graph.edges[e].other(n).unwrap();
                if seen.insert(m) {
                    stack.push(m);
                }
            }
        }
    }
    seen
}

/// Weakens front edges layer by layer while that lowers the score.
pub fn relation_pass(
    sr: &mut Searcher,
    start: StateAssignment,
    start_result: SolveResult,
) -> Result<(StateAssignment, SolveResult)> {
    let (mut cur, mut best) = (start, start_result);
    let mut front = front_edges(sr.program, sr.graph);
    let mut visited: BTreeSet<usize> = front.iter().copied().collect();
    while !front.is_empty() && best.score >= sr.cfg.eps_stop && sr.budget_left() > 0 {
        'subsets: for subset in subsets(&front, sr.cfg.max_power_set) {
            let chain = flip_chain(&cur, sr.graph, &subset);
            if chain.is_empty() {
                continue;
            }
            let results = sr.evaluate(&chain)?;
            for (cand, r) in chain.iter().zip(results) {
                let Some(r) = r else { break 'subsets };
                let accept = sr.better(r.score, best.score)
                    || (sr.tied(r.score, best.score) && sr.tied(best.score, r.score) && cand.strength() > cur.strength());
                sr.note("relation", cand, r.score, accept);
                if accept {
                    cur = cand.clone();
                    sr.adopt(&r);
                    best = r;
                }
            }
            if best.score < sr.cfg.eps_stop {
                break;
            }
        }
        let mut next = BTreeSet::new();
        for &e in &front {
            for n in [sr.graph.edges[e].a, sr.graph.edges[e].b] {
                next.extend(sr.graph.incident(n).iter().copied().filter(|x| !visited.contains(x)));
            }
        }
        visited.extend(&next);
        front = next.into_iter().collect();
    }
    Ok((cur, best))
}

/// Reduces the motion freedom of unpinned nodes, keeping the simplest state
/// that scores within the tie tolerance of the best.
pub fn motion_pass(
    sr: &mut Searcher,
    start: StateAssignment,
    start_result: SolveResult,
) -> Result<(StateAssignment, SolveResult)> {
    let (mut cur, mut best) = (start, start_result);
    let referenced = sr.program.referenced();
    // Nodes cut off by N edges no longer feel the program.
    let reach = reachable(sr.graph, &referenced, |e| cur.relation[e] != RelState::N);
    let mut changed = false;
    for n in 0..cur.motion.len() {
        if !cur.pinned[n] && !reach.contains(&n) && cur.motion[n] != MotionState::N {
            cur.motion[n] = MotionState::N;
            changed = true;
        }
    }
    if changed {
        if let Some(r) = sr.evaluate(std::slice::from_ref(&cur))?.remove(0) {
            best = r;
        }
    }
    let mut visited: BTreeSet<usize> = referenced.iter().copied().filter(|&n| n < cur.motion.len()).collect();
    let mut layer: Vec<usize> = visited.iter().copied().collect();
    while !layer.is_empty() && sr.budget_left() > 0 {
        for &n in &layer {
            if cur.pinned[n] {
                continue;
            }
            let cands: Vec<StateAssignment> = MotionState::FLIP_ORDER
                .iter()
                .map(|&m| {
                    let mut c = cur.clone();
                    c.motion[n] = m;
                    c
                })
                .collect();
            let results = sr.evaluate(&cands)?;
            let lowest = results
                .iter()
                .flatten()
                .map(|r| sr.key(r.score))
                .fold(sr.key(best.score), f64::min);
            let mut pick: Option<usize> = None;
            for (i, r) in results.iter().enumerate() {
                if let Some(r) = r {
                    if sr.key(r.score) <= lowest + sr.cfg.delta_tie {
                        pick = Some(i);
                    }
                }
            }
            for (i, r) in results.iter().enumerate() {
                if let Some(r) = r {
                    sr.note("motion", &cands[i], r.score, pick == Some(i));
                }
            }
            if let Some(i) = pick {
                cur = cands[i].clone();
                best = results[i].clone().unwrap();
                sr.adopt(&best);
            }
        }
        let mut next = BTreeSet::new();
        for &n in &layer {
            for &e in sr.graph.incident(n) {
                if cur.relation[e] != RelState::N {
                    let m = sr.graph.edges[e].other(n).unwrap();
                    if visited.insert(m) {
                        next.insert(m);
                    }
                }
            }
        }
        layer = next.into_iter().collect();
    }
    Ok((cur, best))
}

#[derive(Clone, Debug)]
pub struct SearchOutcome {
    pub states: StateAssignment,
    pub result: SolveResult,
    pub report: SearchReport,
}

/// Both passes, then a final Solve at the winning states.
pub fn flip_and_solve(
    scene: &Scene,
    program: &ConstraintProgram,
    graph: &RelationGraph,
    cfg: &SearchConfig,
) -> Result<SearchOutcome> {
    cfg.check()?;
    let init = init_states(program, scene.len(), graph)?;
    let mut sr = Searcher::new(scene, program, graph, cfg);
    let relaxed = relax_for_relation_pass(&init, program, graph);
    let first = sr
        .evaluate(std::slice::from_ref(&relaxed))?
        .remove(0)
        .ok_or_else(|| Error::Config("search budget must allow at least one solve".into()))?;
    sr.note("init", &relaxed, first.score, true);
    let (mut states, result) = if cfg.relation_search {
        relation_pass(&mut sr, relaxed, first)?
    } else {
        (relaxed, first)
    };
    if cfg.motion_search {
        states = motion_pass(&mut sr, states, result)?.0;
    } else {
        for (m, pinned) in states.motion.iter_mut().zip(&states.pinned) {
            if !pinned {
                *m = MotionState::TRS;
            }
        }
    }
    let cs = active_constraints(program, graph, &states);
    let mut result = match &sr.warm {
        Some(w) => solve_from(scene, &cs, &states.motion, w, &cfg.solve)?,
        None => solve(scene, &cs, &states.motion, &cfg.solve)?,
    };
    let mut report = sr.report;
    for f in &report.flags {
        if !result.flags.contains(f) {
            result.flags.push(f.clone());
        }
    }
    report.flags = result.flags.clone();
    Ok(SearchOutcome {
        states,
        result,
        report,
    })
}

#[cfg(test)]
mod tests;
