//! Software commitments: decoded corrections are fixed so the covered
//! space-time region is never decoded again.
//!
//! After matching a subgraph, every hyperedge able to flip its checks is
//! frozen (matched edges "on", the rest "off"), the matched hyperedges'
//! full-graph flips adjust the remaining check values, and a basis of
//! time-like loops inside the subgraph spawns virtual error mechanisms so
//! that later decoding problems know about residual loop stabilizers.

use crate::dem::ErrorModel;
use crate::gf2::BitVector;
use crate::subgraph::{DecodingSubgraph, SubEdge, BOUNDARY};
use smallvec::SmallVec;

/// Virtual error mechanism from a time-like loop: the out-of-subgraph checks
/// the loop flips, with probability p^{|L|/2}.
#[derive(Clone, Debug)]
pub struct VirtualMechanism {
    pub flips: SmallVec<[u32; 4]>,
    pub probability: f64,
    /// Loop size it came from.
    pub loop_len: usize,
}

/// Mutable state of Algorithm-1 style sequential decoding.
#[derive(Clone, Debug)]
pub struct CommitState {
    /// XOR adjustment applied to shot defects (σ of committed hyperedges).
    pub check_adjust: BitVector,
    /// Checks already covered by a decoded subgraph.
    pub committed_checks: BitVector,
    /// Frozen hyperedges (assigned on or off); indices past the model's
    /// mechanism count refer to virtual edges.
    fixed: Vec<bool>,
    /// Committed-on mechanisms.
    pub fired: Vec<u32>,
    pub virtual_edges: Vec<VirtualMechanism>,
    /// Running total of committed decoding volume (check count).
    pub committed_volume: usize,
    num_mechanisms: usize,
}

impl CommitState {
    pub fn new(model: &ErrorModel) -> Self {
        Self {
            check_adjust: BitVector::zeros(model.num_checks),
            committed_checks: BitVector::zeros(model.num_checks),
            fixed: vec![false; model.mechanisms.len()],
            fired: Vec::new(),
            virtual_edges: Vec::new(),
            committed_volume: 0,
            num_mechanisms: model.mechanisms.len(),
        }
    }

    pub fn is_fixed(&self, id: u32) -> bool {
        self.fixed.get(id as usize).copied().unwrap_or(false)
    }

    fn set_fixed(&mut self, id: u32) {
        let idx = id as usize;
        assert!(idx < self.fixed.len(), "unknown mechanism {id}");
        self.fixed[idx] = true;
    }

    /// Full-hypergraph check flips of a mechanism or virtual edge.
    pub fn rep_full_flips(&self, model: &ErrorModel, id: u32) -> SmallVec<[u32; 4]> {
        self.flips_of(model, id)
    }

    /// Logical observables flipped by a mechanism (virtual edges flip none).
    pub fn rep_observables(&self, model: &ErrorModel, id: u32) -> SmallVec<[u32; 2]> {
        if (id as usize) < self.num_mechanisms {
            model.mechanisms[id as usize].flipped_observables.clone()
        } else {
            SmallVec::new()
        }
    }

    fn flips_of(&self, model: &ErrorModel, id: u32) -> SmallVec<[u32; 4]> {
        if (id as usize) < self.num_mechanisms {
            model.mechanisms[id as usize].flipped_checks.clone()
        } else {
            self.virtual_edges[id as usize - self.num_mechanisms].flips.clone()
        }
    }

    /// Commits a decoded subgraph: freezes every hyperedge that can flip it,
    /// applies the matched representatives' full-graph flips to the check
    /// adjustment, and registers virtual edges for the subgraph's time-like
    /// loops.
    pub fn commit(
        &mut self,
        model: &ErrorModel,
        subgraph: &DecodingSubgraph,
        matched_edges: &[u32],
    ) {
        for &id in &subgraph.touching {
            assert!(!self.is_fixed(id), "committing an already-fixed hyperedge {id}");
        }
        for &ei in matched_edges {
            let edge = &subgraph.edges[ei as usize];
            let rep = edge.representative;
            for &c in &self.flips_of(model, rep) {
                self.check_adjust.flip(c as usize);
            }
            self.fired.push(rep);
        }
        for &id in &subgraph.touching {
            self.set_fixed(id);
        }
        for &c in &subgraph.check_ids {
            self.committed_checks.set(c as usize, true);
        }
        self.committed_volume += subgraph.check_ids.len();

        let loops = find_timelike_loops(subgraph);
        self.add_virtual_edges(model, subgraph, &loops);
    }

    /// Registers one virtual mechanism per loop-basis element.
    pub fn add_virtual_edges(
        &mut self,
        model: &ErrorModel,
        subgraph: &DecodingSubgraph,
        loops: &[Vec<u32>],
    ) {
        for l in loops {
            let mut flips: Vec<u32> = Vec::new();
            let mut log_p = 0.0;
            for &ei in l {
                let edge = &subgraph.edges[ei as usize];
                flips.extend(self.flips_of(model, edge.representative).iter().copied());
                log_p += edge.probability.ln();
            }
            // The in-subgraph flips cancel around the loop; what remains is
            // exactly the out-of-subgraph signature.
            flips.sort_unstable();
            let mut out: SmallVec<[u32; 4]> = SmallVec::new();
            let mut i = 0;
            while i < flips.len() {
                let mut j = i;
                while j < flips.len() && flips[j] == flips[i] {
                    j += 1;
                }
                if (j - i) % 2 == 1 {
                    out.push(flips[i]);
                }
                i = j;
            }
            debug_assert!(
                out.iter().all(|&c| subgraph.local_node(c).is_none()),
                "loop flips must cancel inside the subgraph"
            );
            if out.is_empty() {
                continue;
            }
            // Leading order p^{|L|/2}: at least half the loop must have
            // fired for the committed assignment to be off by the loop.
            let probability = ((log_p / 2.0).exp()).min(0.49);
            self.virtual_edges.push(VirtualMechanism {
                flips: out,
                probability,
                loop_len: l.len(),
            });
            self.fixed.push(false);
        }
    }

    pub fn num_virtual(&self) -> usize {
        self.virtual_edges.len()
    }

    /// Test helper: extends the fixed-tracking to cover a manually added
    /// virtual edge.
    pub fn push_fixed_slot(&mut self) {
        self.fixed.push(false);
    }
}

/// Basis of time-like loops: fundamental cycles of the spanning forest of
/// the sub-multigraph induced by time-like edges. Each loop is returned as a
/// list of edge indices.
pub fn find_timelike_loops(subgraph: &DecodingSubgraph) -> Vec<Vec<u32>> {
    let n = subgraph.num_nodes();
    // Union-find spanning forest; boundary is one shared node (loops through
    // the boundary are time-boundary cycles, not time-like loops, so the
    // boundary is excluded).
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, i: usize) -> usize {
        let mut root = i;
        while parent[root] != root {
            root = parent[root];
        }
        let mut cur = i;
        while parent[cur] != root {
            let next = parent[cur];
            parent[cur] = root;
            cur = next;
        }
        root
    }
    // Forest edges for cycle reconstruction.
    let mut tree_adj: Vec<Vec<(u32, usize)>> = vec![Vec::new(); n];
    let mut extra: Vec<(u32, usize, usize)> = Vec::new();
    for (ei, edge) in subgraph.edges.iter().enumerate() {
        if !edge.time_like {
            continue;
        }
        let [a, b] = match edge.nodes.as_slice() {
            [a, b] => [*a as usize, *b as usize],
            _ => continue,
        };
        if a == BOUNDARY as usize || b == BOUNDARY as usize {
            continue;
        }
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra == rb {
            extra.push((ei as u32, a, b));
        } else {
            parent[ra] = rb;
            tree_adj[a].push((ei as u32, b));
            tree_adj[b].push((ei as u32, a));
        }
    }
    // Fundamental cycle of each extra edge: tree path between its endpoints.
    let mut loops = Vec::new();
    for (ei, a, b) in extra {
        // BFS in the forest from a to b.
        let mut prev: Vec<Option<(usize, u32)>> = vec![None; n];
        let mut queue = std::collections::VecDeque::new();
        queue.push_back(a);
        let mut seen = vec![false; n];
        seen[a] = true;
        while let Some(u) = queue.pop_front() {
            if u == b {
                break;
            }
            for &(edge, v) in &tree_adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    prev[v] = Some((u, edge));
                    queue.push_back(v);
                }
            }
        }
        let mut cycle = vec![ei];
        let mut cur = b;
        while cur != a {
            let (p, edge) = prev[cur].expect("path exists in the same tree");
            cycle.push(edge);
            cur = p;
        }
        loops.push(cycle);
    }
    loops
}

/// Helper for tests and diagnostics: the restriction weight of a virtual
/// mechanism on a set of checks.
pub fn restriction_weight(v: &VirtualMechanism, check_ids: &[u32]) -> usize {
    v.flips.iter().filter(|c| check_ids.binary_search(c).is_ok()).count()
}

#[allow(unused_imports)]
pub(crate) use find_timelike_loops as _loops_for_tests;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::checks::build_checks;
    use crate::circuit::build_memory;
    use crate::compile::compile;
    use crate::dem::{extract_error_model, ExtractOptions};
    use crate::layout::LayoutKind;
    use crate::noise::NoiseModel;
    use crate::subgraph::SubgraphBuilder;

    #[test]
    fn memory_has_no_timelike_loops() {
        let c = build_memory(4);
        let pc = compile(&c, LayoutKind::Rotated, 3, NoiseModel::Phenomenological { p: 1e-3 });
        let cs = build_checks(&pc);
        let model = extract_error_model(&pc, &cs, ExtractOptions::default());
        let builder = SubgraphBuilder::new(&pc, &cs, &model);
        let path = c.back_propagate_product(&[0]);
        let sub = builder.build(&path, &[0], None).unwrap();
        assert!(find_timelike_loops(&sub).is_empty());
    }

    #[test]
    fn empty_matching_commit_freezes_edges_without_adjustment() {
        let c = build_memory(2);
        let pc = compile(&c, LayoutKind::Rotated, 3, NoiseModel::Phenomenological { p: 1e-3 });
        let cs = build_checks(&pc);
        let model = extract_error_model(&pc, &cs, ExtractOptions::default());
        let builder = SubgraphBuilder::new(&pc, &cs, &model);
        let path = c.back_propagate_product(&[0]);
        let sub = builder.build(&path, &[0], None).unwrap();
        let mut state = CommitState::new(&model);
        state.commit(&model, &sub, &[]);
        assert!(state.check_adjust.is_zero());
        assert!(state.fired.is_empty());
        assert_eq!(state.committed_volume, sub.volume());
        // Every edge of the subgraph is now frozen.
        for e in &sub.edges {
            for &id in &e.mechanism_ids {
                assert!(state.is_fixed(id));
            }
        }
    }

    /// Two transversal CNOTs between the same pair create time-like loops
    /// in the first decoded product's subgraph; the registered virtual
    /// edges restrict to simple edges in the next subgraph.
    #[test]
    fn double_cnot_circuit_has_loops_and_virtual_edges() {
        use crate::circuit::{InstructionKind, LogicalCircuit};
        use crate::products::ReliableBasis;
        let mut c = LogicalCircuit::new(2);
        c.push(InstructionKind::InitZ, vec![0]);
        c.push(InstructionKind::InitZ, vec![1]);
        c.push(InstructionKind::SERound, vec![]);
        c.push(InstructionKind::TransversalCnot, vec![1, 0]);
        c.push(InstructionKind::SERound, vec![]);
        c.push(InstructionKind::TransversalCnot, vec![1, 0]);
        c.push(InstructionKind::SERound, vec![]);
        c.push(InstructionKind::MeasureZ, vec![0]);
        c.push(InstructionKind::MeasureZ, vec![1]);
        let p = 1e-3;
        let pc = compile(&c, LayoutKind::Rotated, 3, NoiseModel::Phenomenological { p });
        let cs = build_checks(&pc);
        let model = extract_error_model(&pc, &cs, ExtractOptions::default());
        let builder = SubgraphBuilder::new(&pc, &cs, &model);
        let basis = ReliableBasis::build_full(&c);
        let col = &basis.columns[0];
        let path = c.back_propagate_product(&col.members);
        let sub = builder.build(&path, &col.members, None).unwrap();
        let loops = find_timelike_loops(&sub);
        // One ladder loop per Z-stabilizer chain crossing the two gates.
        assert_eq!(loops.len(), 4);
        for l in &loops {
            assert_eq!(l.len(), 3);
        }
        let mut state = CommitState::new(&model);
        state.commit(&model, &sub, &[]);
        assert_eq!(state.num_virtual(), 4);
        for v in &state.virtual_edges {
            assert_eq!(v.flips.len(), 2);
            // Leading-order probability p^{|L|/2}.
            assert!((v.probability - p.powf(1.5)).abs() < 1e-9);
        }
        // The next product's subgraph includes the virtual edges as simple
        // matchable edges.
        let col1 = &basis.columns[1];
        let path1 = c.back_propagate_product(&col1.members);
        let sub1 = builder.build(&path1, &col1.members, Some(&state)).unwrap();
        let has_virtual = sub1
            .edges
            .iter()
            .any(|e| e.mechanism_ids.iter().any(|&id| id as usize >= model.mechanisms.len()));
        assert!(has_virtual);
        assert!(sub1.max_edge_degree() <= 2);
    }

    /// A virtual hyperedge restricting to three or more checks in a later
    /// subgraph is diagnosed, not silently decomposed.
    #[test]
    fn wide_virtual_edge_is_diagnosed() {
        use smallvec::SmallVec;
        let c = build_memory(3);
        let pc = compile(&c, LayoutKind::Rotated, 3, NoiseModel::Phenomenological { p: 1e-3 });
        let cs = build_checks(&pc);
        let model = extract_error_model(&pc, &cs, ExtractOptions::default());
        let builder = SubgraphBuilder::new(&pc, &cs, &model);
        let path = c.back_propagate_product(&[0]);
        let plain = builder.build(&path, &[0], None).unwrap();
        let mut state = CommitState::new(&model);
        // Synthetic weight-3 virtual edge inside the upcoming subgraph.
        state.virtual_edges.push(VirtualMechanism {
            flips: SmallVec::from_slice(&plain.check_ids[..3]),
            probability: 1e-4,
            loop_len: 4,
        });
        state.push_fixed_slot();
        let err = builder.build(&path, &[0], Some(&state)).unwrap_err();
        assert!(matches!(err, crate::subgraph::SubgraphError::NotMatchable { .. }));
    }

    #[test]
    #[should_panic(expected = "already-fixed")]
    fn double_commit_panics() {
        let c = build_memory(2);
        let pc = compile(&c, LayoutKind::Rotated, 3, NoiseModel::Phenomenological { p: 1e-3 });
        let cs = build_checks(&pc);
        let model = extract_error_model(&pc, &cs, ExtractOptions::default());
        let builder = SubgraphBuilder::new(&pc, &cs, &model);
        let path = c.back_propagate_product(&[0]);
        let sub = builder.build(&path, &[0], None).unwrap();
        let mut state = CommitState::new(&model);
        state.commit(&model, &sub, &[]);
        state.commit(&model, &sub, &[]);
    }
}
