//! Minimum-weight perfect matching decoding of a subgraph, plus a
//! brute-force maximum-likelihood oracle for small instances.
//!
//! Decoding is two-stage: Dijkstra from every defect builds a complete
//! defect graph (with per-defect boundary arcs), an exact blossom matching
//! picks the pairing, and matched paths expand back to subgraph edges. The
//! blossom stage runs maximum-weight maximum-cardinality matching on negated
//! weights, which realizes minimum-weight perfect matching with the boundary
//! mirror construction.

use crate::subgraph::{DecodingSubgraph, BOUNDARY};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

mod blossom;

/// Matching configuration. `dijkstra_cutoff = Some(k)` stops each defect's
/// search once the nearest k defects and the boundary are settled; `None`
/// searches the whole subgraph (exact).
#[derive(Copy, Clone, Debug, Default)]
pub struct MatchConfig {
    pub dijkstra_cutoff: Option<usize>,
}

/// Decoded correction for one subgraph.
#[derive(Clone, Debug)]
pub struct Correction {
    /// Selected subgraph edge indices (each an odd number of times overall).
    pub edges: Vec<u32>,
    /// Predicted flip of the product observable.
    pub observable_flip: bool,
    pub total_weight: f64,
}

impl Correction {
    pub fn empty() -> Self {
        Self { edges: Vec::new(), observable_flip: false, total_weight: 0.0 }
    }
}

/// Matching-ready view of a subgraph plus the defect set.
#[derive(Clone, Debug)]
pub struct MatchingProblem<'a> {
    pub subgraph: &'a DecodingSubgraph,
    /// Local node indices with flipped value.
    pub defects: Vec<u32>,
}

#[derive(Copy, Clone, PartialEq)]
struct HeapItem {
    dist: f64,
    node: u32,
}

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap by distance, then node id for determinism.
        other
            .dist
            .partial_cmp(&self.dist)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct ShortestPaths {
    dist: Vec<f64>,
    /// (edge, previous node) per settled node.
    pred: Vec<Option<(u32, u32)>>,
    boundary_dist: f64,
    boundary_pred: Option<(u32, u32)>,
}

/// Dijkstra from one source over the subgraph; the boundary is absorbing.
fn shortest_paths(
    sub: &DecodingSubgraph,
    source: u32,
    defects: &[u32],
    cutoff: Option<usize>,
) -> ShortestPaths {
    let n = sub.num_nodes();
    let mut dist = vec![f64::INFINITY; n];
    let mut pred: Vec<Option<(u32, u32)>> = vec![None; n];
    let mut boundary_dist = f64::INFINITY;
    let mut boundary_pred = None;
    let mut settled = vec![false; n];
    let mut heap = BinaryHeap::new();
    dist[source as usize] = 0.0;
    heap.push(HeapItem { dist: 0.0, node: source });
    let is_defect = {
        let mut v = vec![false; n];
        for &d in defects {
            v[d as usize] = true;
        }
        v
    };
    let mut defects_found = 0usize;
    let want = cutoff.unwrap_or(usize::MAX);
    while let Some(HeapItem { dist: d, node }) = heap.pop() {
        let u = node as usize;
        if settled[u] {
            continue;
        }
        settled[u] = true;
        if is_defect[u] && node != source {
            defects_found += 1;
            if defects_found >= want && boundary_dist.is_finite() {
                break;
            }
        }
        for &(edge, other) in &sub.adjacency[u] {
            let w = sub.edges[edge as usize].weight;
            let nd = d + w;
            if other == BOUNDARY {
                if nd < boundary_dist {
                    boundary_dist = nd;
                    boundary_pred = Some((edge, node));
                }
            } else if nd < dist[other as usize] {
                dist[other as usize] = nd;
                pred[other as usize] = Some((edge, node));
                heap.push(HeapItem { dist: nd, node: other });
            }
        }
    }
    ShortestPaths { dist, pred, boundary_dist, boundary_pred }
}

fn walk_path(paths: &ShortestPaths, mut to: u32, from: u32, edges: &mut Vec<u32>) {
    while to != from {
        let (edge, prev) = paths.pred[to as usize].expect("path exists");
        edges.push(edge);
        to = prev;
    }
}

/// Exact minimum-weight perfect matching decode of a defect set.
///
/// Panics if the defect parity cannot be satisfied (no boundary reachable
/// from an odd component), which indicates a check-construction bug.
pub fn decode_mwpm(problem: &MatchingProblem, config: MatchConfig) -> Correction {
    let sub = problem.subgraph;
    let defects = &problem.defects;
    if defects.is_empty() {
        return Correction::empty();
    }
    let k = defects.len();
    let all_paths: Vec<ShortestPaths> = defects
        .iter()
        .map(|&d| shortest_paths(sub, d, defects, config.dijkstra_cutoff))
        .collect();

    // Defect graph: nodes 0..k defects, k..2k boundary mirrors. Negated
    // weights turn maximum-weight maximum-cardinality matching into
    // minimum-weight perfect matching.
    let mut edges: Vec<(usize, usize, f64)> = Vec::new();
    for i in 0..k {
        for j in i + 1..k {
            let d = all_paths[i].dist[defects[j] as usize];
            if d.is_finite() {
                edges.push((i, j, -d));
            }
        }
        if all_paths[i].boundary_dist.is_finite() {
            edges.push((i, k + i, -all_paths[i].boundary_dist));
        }
    }
    for i in 0..k {
        for j in i + 1..k {
            edges.push((k + i, k + j, 0.0));
        }
    }
    let mate = blossom::max_weight_matching(2 * k, &edges, true);

    let mut selected: Vec<u32> = Vec::new();
    let mut total_weight = 0.0;
    for i in 0..k {
        match mate[i] {
            Some(j) if j < k => {
                if i < j {
                    total_weight += all_paths[i].dist[defects[j] as usize];
                    walk_path(&all_paths[i], defects[j], defects[i], &mut selected);
                }
            }
            Some(j) if j == k + i => {
                total_weight += all_paths[i].boundary_dist;
                let (edge, node) = all_paths[i].boundary_pred.expect("boundary reachable");
                selected.push(edge);
                walk_path(&all_paths[i], node, defects[i], &mut selected);
            }
            other => {
                // With cutoff searches the defect graph can be too sparse
                // for a perfect matching; redo the search exhaustively.
                if config.dijkstra_cutoff.is_some() {
                    return decode_mwpm(problem, MatchConfig { dijkstra_cutoff: None });
                }
                panic!("defect {i} unmatched ({other:?}): inconsistent defect parity");
            }
        }
    }
    finish_correction(sub, defects, selected, total_weight)
}

fn finish_correction(
    sub: &DecodingSubgraph,
    defects: &[u32],
    mut selected: Vec<u32>,
    total_weight: f64,
) -> Correction {
    // Paths may retrace shared edges; keep odd-multiplicity ones.
    selected.sort_unstable();
    let mut edges = Vec::with_capacity(selected.len());
    let mut i = 0;
    while i < selected.len() {
        let mut j = i;
        while j < selected.len() && selected[j] == selected[i] {
            j += 1;
        }
        if (j - i) % 2 == 1 {
            edges.push(selected[i]);
        }
        i = j;
    }
    let observable_flip =
        edges.iter().filter(|&&e| sub.edges[e as usize].flips_observable).count() % 2 == 1;
    debug_assert!(correction_explains_defects(sub, &edges, defects));
    Correction { edges, observable_flip, total_weight }
}

/// Parity check: do the selected edges flip exactly the defect set?
pub fn correction_explains_defects(
    sub: &DecodingSubgraph,
    edges: &[u32],
    defects: &[u32],
) -> bool {
    let mut flips = vec![false; sub.num_nodes()];
    for &e in edges {
        for &n in &sub.edges[e as usize].nodes {
            flips[n as usize] ^= true;
        }
    }
    for &d in defects {
        flips[d as usize] ^= true;
    }
    flips.iter().all(|&f| !f)
}

/// Instance-size guard for the exhaustive oracle.
#[derive(Copy, Clone, Debug)]
pub struct OracleLimits {
    pub max_edges: usize,
    pub max_defects: usize,
}

impl Default for OracleLimits {
    fn default() -> Self {
        Self { max_edges: 26, max_defects: 12 }
    }
}

#[derive(Debug, thiserror::Error)]
#[error("oracle refused: {edges} edges / {defects} defects exceed limits")]
pub struct OracleTooLarge {
    pub edges: usize,
    pub defects: usize,
}

/// Exact minimum-weight (maximum-likelihood under independent mechanisms)
/// error configuration consistent with the defects, by branch and bound
/// over edge subsets. Independent of the matching pipeline.
pub fn decode_ml_oracle(
    problem: &MatchingProblem,
    limits: OracleLimits,
) -> Result<Correction, OracleTooLarge> {
    let sub = problem.subgraph;
    let defects = &problem.defects;
    if defects.is_empty() {
        return Ok(Correction::empty());
    }
    if sub.edges.len() > limits.max_edges && defects.len() > limits.max_defects {
        return Err(OracleTooLarge { edges: sub.edges.len(), defects: defects.len() });
    }
    if sub.edges.len() > 40 {
        return Err(OracleTooLarge { edges: sub.edges.len(), defects: defects.len() });
    }

    // Edge order by ascending weight tightens the bound early.
    let mut order: Vec<u32> = (0..sub.edges.len() as u32).collect();
    order.sort_by(|&a, &b| {
        sub.edges[a as usize]
            .weight
            .partial_cmp(&sub.edges[b as usize].weight)
            .unwrap()
            .then(a.cmp(&b))
    });
    let min_weight = order
        .first()
        .map(|&e| sub.edges[e as usize].weight)
        .unwrap_or(0.0);

    let mut target = vec![false; sub.num_nodes()];
    for &d in defects {
        target[d as usize] = true;
    }

    struct Search<'a> {
        sub: &'a DecodingSubgraph,
        order: Vec<u32>,
        min_weight: f64,
        best_weight: f64,
        best: Option<Vec<u32>>,
        chosen: Vec<u32>,
        used: Vec<bool>,
        residual: Vec<bool>,
    }
    impl Search<'_> {
        fn unsatisfied(&self) -> usize {
            self.residual.iter().filter(|&&b| b).count()
        }
        fn recurse(&mut self, weight: f64) {
            let unsat = self.unsatisfied();
            if weight + (unsat as f64 / 2.0) * self.min_weight >= self.best_weight {
                return;
            }
            if unsat == 0 {
                self.best_weight = weight;
                self.best = Some(self.chosen.clone());
                return;
            }
            // The first unexplained defect must be covered by exactly one of
            // the not-yet-used edges touching it; branching on that edge
            // enumerates every consistent configuration.
            let first_defect = self.residual.iter().position(|&b| b).unwrap();
            let covers: Vec<usize> = (0..self.order.len())
                .filter(|&i| {
                    !self.used[i]
                        && self.sub.edges[self.order[i] as usize]
                            .nodes
                            .contains(&(first_defect as u32))
                })
                .collect();
            for i in covers {
                let e = self.order[i];
                self.used[i] = true;
                self.chosen.push(e);
                for &n in &self.sub.edges[e as usize].nodes {
                    self.residual[n as usize] ^= true;
                }
                self.recurse(weight + self.sub.edges[e as usize].weight);
                for &n in &self.sub.edges[e as usize].nodes {
                    self.residual[n as usize] ^= true;
                }
                self.chosen.pop();
                self.used[i] = false;
            }
        }
    }
    let n_edges = order.len();
    let mut search = Search {
        sub,
        order,
        min_weight,
        best_weight: f64::INFINITY,
        best: None,
        chosen: Vec::new(),
        used: vec![false; n_edges],
        residual: target,
    };
    search.recurse(0.0);
    let edges = search.best.unwrap_or_else(|| {
        panic!("no consistent configuration found for {} defects", defects.len())
    });
    let observable_flip =
        edges.iter().filter(|&&e| sub.edges[e as usize].flips_observable).count() % 2 == 1;
    let total_weight = search.best_weight;
    debug_assert!(correction_explains_defects(sub, &edges, defects));
    Ok(Correction { edges, observable_flip, total_weight })
}
