use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::raster::Mask;

/// Outcome of comparing two overlapping segments.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    IFront,
    JFront,
    Undetermined,
}

impl Verdict {
    pub fn flip(self) -> Verdict {
        match self {
            Verdict::IFront => Verdict::JFront,
            Verdict::JFront => Verdict::IFront,
            Verdict::Undetermined => Verdict::Undetermined,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::IFront => "i_front",
            Verdict::JFront => "j_front",
            Verdict::Undetermined => "undetermined",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DepthConfig {
    /// Maximum number of intersection-boundary points compared pairwise.
    pub max_points: usize,
    /// Relative band within which two path lengths count as equal.
    pub tie_band: f64,
}

impl Default for DepthConfig {
    fn default() -> Self {
        DepthConfig {
            max_points: 32,
            tie_band: 0.1,
        }
    }
}

/// Farthest-point-first subset of `pts`, seeded with the first point.
pub fn farthest_point_sample(pts: &[(i64, i64)], k: usize) -> Vec<(i64, i64)> {
    if pts.is_empty() || k == 0 {
        return Vec::new();
    }
    let d2 = |a: (i64, i64), b: (i64, i64)| (a.0 - b.0).pow(2) + (a.1 - b.1).pow(2);
    let mut chosen = vec![pts[0]];
    let mut best: Vec<i64> = pts.iter().map(|p| d2(*p, pts[0])).collect();
    while chosen.len() < k.min(pts.len()) {
        let (idx, far) = best
            .iter()
            .enumerate()
            .fold((0, -1), |acc, (i, d)| if *d > acc.1 { (i, *d) } else { acc });
        if far <= 0 {
            break;
        }
        let p = pts[idx];
        chosen.push(p);
        for (b, q) in best.iter_mut().zip(pts) {
            *b = (*b).min(d2(*q, p));
        }
    }
    chosen
}

/// 4-connected BFS step counts from `src` inside `mask`; `None` if unreachable.
fn bfs(mask: &Mask, src: (i64, i64)) -> Vec<Option<u32>> {
    let mut dist = vec![None; mask.w * mask.h];
    if !mask.get(src.0, src.1) {
        return dist;
    }
    let at = |x: i64, y: i64| (y - mask.y0) as usize * mask.w + (x - mask.x0) as usize;
    let mut q = VecDeque::new();
    dist[at(src.0, src.1)] = Some(0);
    q.push_back(src);
    while let Some((x, y)) = q.pop_front() {
        let d = dist[at(x, y)].unwrap() + 1;
        for (nx, ny) in [(x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)] {
            if mask.get(nx, ny) && dist[at(nx, ny)].is_none() {
                dist[at(nx, ny)] = Some(d);
                q.push_back((nx, ny));
            }
        }
    }
    dist
}

/// Longest inner path between any two of `pts` through `mask`. Disconnected
/// pairs are skipped; `None` when no pair is connected.
pub fn longest_inner_path(mask: &Mask, pts: &[(i64, i64)]) -> Option<u32> {
    let mut best = None;
    for (k, &s) in pts.iter().enumerate() {
        let dist = bfs(mask, s);
        for &e in &pts[k + 1..] {
            if !mask.get(e.0, e.1) {
                continue;
            }
            let i = (e.1 - mask.y0) as usize * mask.w + (e.0 - mask.x0) as usize;
            if let Some(d) = dist[i] {
                best = Some(best.map_or(d, |b: u32| b.max(d)));
            }
        }
    }
    best
}

/// Compares two rasters: the segment whose longest path across the boundary
/// of the shared region is shorter is the one in front.
pub fn depth_order_pair(ri: &Mask, rj: &Mask, cfg: &DepthConfig) -> Verdict {
    let inter = ri.intersection(rj);
    if inter.is_empty() {
        return Verdict::Undetermined;
    }
    let pts = farthest_point_sample(&inter.boundary(), cfg.max_points);
    let (Some(li), Some(lj)) = (longest_inner_path(ri, &pts), longest_inner_path(rj, &pts)) else {
        return Verdict::Undetermined;
    };
    let (li, lj) = (li as f64, lj as f64);
    if (li - lj).abs() <= cfg.tie_band * li.max(lj) {
        Verdict::Undetermined
    } else if li < lj {
        Verdict::IFront
    } else {
        Verdict::JFront
    }
}

/// Back-to-front drawing order.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DepthOrder {
    /// Segment ids, front-most last.
    pub order: Vec<usize>,
    /// Verdicts keyed by `(i, j)` with `i < j`.
    pub verdicts: BTreeMap<(usize, usize), Verdict>,
    /// `(front, back)` constraints dropped to break cycles.
    pub broken: Vec<(usize, usize)>,
}

impl DepthOrder {
    /// Input order by z-hint then id, ignoring verdicts.
    pub fn by_hint(hints: &[Option<i64>]) -> DepthOrder {
        depth_sort(hints, &BTreeMap::new())
    }

    pub fn is_permutation(&self, n: usize) -> bool {
        let mut seen = vec![false; n];
        self.order.len() == n && self.order.iter().all(|&i| i < n && !std::mem::replace(&mut seen[i], true))
    }

    /// True when every verdict not dropped for a cycle holds in `order`.
    pub fn respects_verdicts(&self) -> bool {
        let mut rank = BTreeMap::new();
        for (r, id) in self.order.iter().enumerate() {
            rank.insert(*id, r);
        }
        front_back(&self.verdicts)
            .into_iter()
            .filter(|e| !self.broken.contains(e))
            .all(|(f, b)| rank[&f] > rank[&b])
    }
}

fn front_back(verdicts: &BTreeMap<(usize, usize), Verdict>) -> BTreeSet<(usize, usize)> {
    verdicts
        .iter()
        .filter_map(|(&(i, j), v)| match v {
            Verdict::IFront => Some((i, j)),
            Verdict::JFront => Some((j, i)),
            Verdict::Undetermined => None,
        })
        .collect()
}

fn reaches(edges: &[(usize, usize)], from: usize, to: usize) -> bool {
    let mut seen = BTreeSet::from([from]);
    let mut stack = vec![from];
    while let Some(u) = stack.pop() {
        if u == to {
            return true;
        }
        for &(f, b) in edges {
            if f == u && seen.insert(b) {
                stack.push(b);
            }
        }
    }
    false
}

/// Topological sort of the "in front of" relation. Ready segments are drawn
/// lowest `(z_hint or id, id)` first; a cycle is broken by dropping its
/// lowest-id constraint.
pub fn depth_sort(hints: &[Option<i64>], verdicts: &BTreeMap<(usize, usize), Verdict>) -> DepthOrder {
    let n = hints.len();
    let key = |i: usize| (hints[i].unwrap_or(i as i64), i);
    let mut edges = front_back(verdicts);
    let mut broken = Vec::new();
    let mut placed = vec![false; n];
    let mut order = Vec::with_capacity(n);
    while order.len() < n {
        let ready = (0..n)
            .filter(|&i| !placed[i] && !edges.iter().any(|&(f, b)| f == i && !placed[b]))
            .min_by_key(|&i| key(i));
        match ready {
            Some(i) => {
                placed[i] = true;
                order.push(i);
            }
            None => {
                let live: Vec<(usize, usize)> =
                    edges.iter().copied().filter(|&(f, b)| !placed[f] && !placed[b]).collect();
                let e = *live
                    .iter()
                    .filter(|&&(f, b)| reaches(&live, b, f))
                    .min_by_key(|&&(f, b)| (f.min(b), f.max(b)))
                    .expect("a stuck sort has a live constraint");
                warn!("depth cycle: dropping seg{} in front of seg{}", e.0, e.1);
                edges.remove(&e);
                broken.push(e);
            }
        }
    }
    DepthOrder {
        order,
        verdicts: verdicts.clone(),
        broken,
    }
}
