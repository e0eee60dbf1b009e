//! Detection and classification of the initial spatial relations between
//! segments, and the constraints each relation contributes per state.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dsl::{Constraint, PairOp, SegExpr};
use crate::geom::Vec2;
use crate::par::{self, Exec};
use crate::raster::Mask;
use crate::scene::proxy_mask;
use crate::scene::{Scene, SceneConfig, Segment};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RelationKind {
    /// `a` lies inside `b`.
    Inside,
    /// `a` contains `b`.
    Contain,
    Overlap,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Inter,
    IntraCrucial,
    IntraNoncrucial,
}

/// Relation strength, strongest first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RelState {
    ST,
    WK,
    N,
}

impl RelState {
    /// 2 for ST, 1 for WK, 0 for N.
    pub fn strength(self) -> usize {
        match self {
            RelState::ST => 2,
            RelState::WK => 1,
            RelState::N => 0,
        }
    }
}

impl fmt::Display for RelState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelationEdge {
    pub a: usize,
    pub b: usize,
    pub kind: RelationKind,
    pub category: Category,
    /// Rest-configuration world coordinates.
    pub anchor: Vec2,
    pub state: RelState,
}

impl RelationEdge {
    pub fn other(&self, n: usize) -> Option<usize> {
        if self.a == n {
            Some(self.b)
        } else if self.b == n {
            Some(self.a)
        } else {
            None
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RelationGraph {
    pub nodes: Vec<usize>,
    pub edges: Vec<RelationEdge>,
    adjacency: Vec<Vec<usize>>,
}

impl RelationGraph {
    pub fn new(n_nodes: usize, edges: Vec<RelationEdge>) -> Self {
        let mut adjacency = vec![Vec::new(); n_nodes];
        for (i, e) in edges.iter().enumerate() {
            adjacency[e.a].push(i);
            adjacency[e.b].push(i);
        }
        RelationGraph {
            nodes: (0..n_nodes).collect(),
            edges,
            adjacency,
        }
    }

    /// Indices of the edges incident to `n`.
    pub fn incident(&self, n: usize) -> &[usize] {
        &self.adjacency[n]
    }

    pub fn edge_between(&self, a: usize, b: usize) -> Option<usize> {
        self.adjacency
            .get(a)?
            .iter()
            .copied()
            .find(|&i| self.edges[i].other(a) == Some(b))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RelationConfig {
    /// Share of a segment's raster that must fall in the other's proxy raster.
    pub inside_ratio: f64,
    pub overlap_min_px: usize,
    /// Share of the smaller raster area.
    pub overlap_min_frac: f64,
    pub exec: Exec,
}

impl Default for RelationConfig {
    fn default() -> Self {
        RelationConfig {
            inside_ratio: 0.98,
            overlap_min_px: 4,
            overlap_min_frac: 0.001,
            exec: Exec::Parallel,
        }
    }
}

/// Rest rasters of one segment.
pub struct Footprint {
    pub raster: Mask,
    pub proxy: Mask,
}

impl Footprint {
    pub fn of(seg: &Segment, scene: &Scene) -> Self {
        let cfg = SceneConfig::default();
        let raster = seg.raster(scene.width, scene.height);
        let proxy = proxy_mask(&raster, cfg.proxy_rays, cfg.proxy_ratio);
        Footprint { raster, proxy }
    }
}

/// The dominant relation of `i` towards `j`, from their rest rasters.
pub fn detect_pair(fi: &Footprint, fj: &Footprint, cfg: &RelationConfig) -> Option<(RelationKind, Vec2)> {
    let (ai, aj) = (fi.raster.count(), fj.raster.count());
    if ai == 0 || aj == 0 {
        return None;
    }
    let inside = |f: &Footprint, area: usize, other: &Footprint| {
        f.raster.intersection_count(&other.proxy) as f64 >= cfg.inside_ratio * area as f64
    };
    let i_in_j = inside(fi, ai, fj);
    let j_in_i = inside(fj, aj, fi);
    // Mutual containment happens only for near-identical shapes; call the
    // smaller one inside.
    if i_in_j && (!j_in_i || ai <= aj) {
        return Some((RelationKind::Inside, fi.raster.centroid()?));
    }
    if j_in_i {
        return Some((RelationKind::Contain, fj.raster.centroid()?));
    }
    let inter = fi.raster.intersection(&fj.raster);
    let n = inter.count();
    let need = (cfg.overlap_min_px as f64).max(cfg.overlap_min_frac * ai.min(aj) as f64);
    if n > 0 && n as f64 >= need {
        return Some((RelationKind::Overlap, inter.centroid()?));
    }
    None
}

/// Decides whether intra-object edges are crucial.
pub trait CrucialClassifier: Sync {
    /// One verdict per edge; inter-object edges are ignored.
    fn classify(&self, scene: &Scene, edges: &[RelationEdge]) -> Vec<bool>;
}

/// Default heuristic on the contact graph of each object.
///
/// An intra edge is crucial when it is Inside/Contain, when it is a bridge of
/// the object's contact graph, or when it joins two differently named parts
/// and is a bridge once edges between same-named parts are dropped. The last
/// rule keeps a part attached to its body even if a sibling also touches it.
pub struct BridgeHeuristic;

impl CrucialClassifier for BridgeHeuristic {
    fn classify(&self, scene: &Scene, edges: &[RelationEdge]) -> Vec<bool> {
        let intra: Vec<usize> = (0..edges.len())
            .filter(|&i| scene.segments[edges[i].a].label.same_object(&scene.segments[edges[i].b].label))
            .collect();
        let sibling = |i: usize| scene.segments[edges[i].a].label.part == scene.segments[edges[i].b].label.part;
        let non_sibling: Vec<usize> = intra.iter().copied().filter(|&i| !sibling(i)).collect();
        let mut out = vec![false; edges.len()];
        for &i in &intra {
            let e = &edges[i];
            out[i] = matches!(e.kind, RelationKind::Inside | RelationKind::Contain)
                || is_bridge(edges, &intra, i)
                || (!sibling(i) && is_bridge(edges, &non_sibling, i));
        }
        out
    }
}

/// Does removing edge `e` from the subgraph `subset` disconnect its endpoints?
fn is_bridge(edges: &[RelationEdge], subset: &[usize], e: usize) -> bool {
    let (src, dst) = (edges[e].a, edges[e].b);
    let mut adj: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for &i in subset {
        if i != e {
            adj.entry(edges[i].a).or_default().push(edges[i].b);
            adj.entry(edges[i].b).or_default().push(edges[i].a);
        }
    }
    let mut seen = std::collections::BTreeSet::from([src]);
    let mut queue = VecDeque::from([src]);
    while let Some(n) = queue.pop_front() {
        if n == dst {
            return false;
        }
        for &m in adj.get(&n).into_iter().flatten() {
            if seen.insert(m) {
                queue.push_back(m);
            }
        }
    }
    true
}

/// Fixed verdicts, e.g. returned by a language model; unknown pairs fall back.
pub struct FixedClassifier<F: CrucialClassifier> {
    pub verdicts: BTreeMap<(usize, usize), bool>,
    pub fallback: F,
}

impl<F: CrucialClassifier> CrucialClassifier for FixedClassifier<F> {
    fn classify(&self, scene: &Scene, edges: &[RelationEdge]) -> Vec<bool> {
        let base = self.fallback.classify(scene, edges);
        edges
            .iter()
            .zip(base)
            .map(|(e, b)| self.verdicts.get(&(e.a, e.b)).copied().unwrap_or(b))
            .collect()
    }
}

pub fn classify(scene: &Scene, edges: &mut [RelationEdge], classifier: &dyn CrucialClassifier) {
    let crucial = classifier.classify(scene, edges);
    for (e, c) in edges.iter_mut().zip(crucial) {
        let la = &scene.segments[e.a].label;
        let lb = &scene.segments[e.b].label;
        e.category = if !la.same_object(lb) {
            Category::Inter
        } else if c {
            Category::IntraCrucial
        } else {
            Category::IntraNoncrucial
        };
    }
}

/// Tests every pair, classifies, and sets every edge to ST.
pub fn build_graph(scene: &Scene, cfg: &RelationConfig, classifier: &dyn CrucialClassifier) -> RelationGraph {
    let foot = par::map(cfg.exec, &scene.segments, |s| Footprint::of(s, scene));
    let pairs: Vec<(usize, usize)> = (0..scene.len())
        .flat_map(|a| (a + 1..scene.len()).map(move |b| (a, b)))
        .collect();
    let found = par::map(cfg.exec, &pairs, |&(a, b)| {
        // Cheap reject on disjoint bounding boxes.
        let (ba, bb) = (scene.segments[a].bbox(), scene.segments[b].bbox());
        if ba.max_x < bb.min_x - 1.0 || bb.max_x < ba.min_x - 1.0 || ba.max_y < bb.min_y - 1.0 || bb.max_y < ba.min_y - 1.0 {
            return None;
        }
        detect_pair(&foot[a], &foot[b], cfg).map(|(kind, anchor)| RelationEdge {
            a,
            b,
            kind,
            category: Category::Inter,
            anchor,
            state: RelState::ST,
        })
    });
    let mut edges: Vec<RelationEdge> = found.into_iter().flatten().collect();
    classify(scene, &mut edges, classifier);
    RelationGraph::new(scene.len(), edges)
}

/// Constraints an edge contributes in `state`.
pub fn edge_constraints(e: &RelationEdge, state: RelState) -> Vec<Constraint> {
    let (a, b) = (SegExpr::Ref(e.a), SegExpr::Ref(e.b));
    let weak = match e.kind {
        RelationKind::Inside => Constraint::Pair(PairOp::Inside, a.clone(), b.clone()),
        RelationKind::Contain => Constraint::Pair(PairOp::Inside, b.clone(), a.clone()),
        RelationKind::Overlap => Constraint::Pair(PairOp::Overlap, a.clone(), b.clone()),
    };
    match state {
        RelState::N => vec![],
        RelState::WK => vec![weak],
        RelState::ST => vec![
            weak,
            Constraint::Coincide {
                a,
                pa: e.anchor,
                b,
                pb: e.anchor,
            },
        ],
    }
}

impl fmt::Display for RelationEdge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cat = match self.category {
            Category::Inter => "inter",
            Category::IntraCrucial => "intra_crucial",
            Category::IntraNoncrucial => "intra_noncrucial",
        };
        write!(
            f,
            "{{a: seg{}, b: seg{}, kind: {:?}, category: {cat}, anchor: [{:.3}, {:.3}], state: {}}}",
            self.a, self.b, self.kind, self.anchor.x, self.anchor.y, self.state
        )
    }
}

/// Text dump, one edge per line.
pub fn dump(graph: &RelationGraph, scene: &Scene) -> String {
    let mut out = format!("nodes: {}\nedges: {}\n", graph.nodes.len(), graph.edges.len());
    for e in &graph.edges {
        out.push_str(&format!(
            "{e}  # {} {}\n",
            scene.segments[e.a].label, scene.segments[e.b].label
        ));
    }
    out
}
