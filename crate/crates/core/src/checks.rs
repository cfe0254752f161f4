//! Check construction for the decoding hypergraph.
//!
//! A check pairs each stabilizer measurement with the measured value(s) of
//! its backward-propagated operator at the previous round, so that every
//! check is deterministically +1 in the absence of noise. The construction
//! walks the compiled circuit backwards: the stabilizer's physical Pauli is
//! conjugated through the transversal gates between rounds and decomposed
//! over the previous round's generators patch by patch.
//!
//! First-round stabilizers close against the initialization when their
//! back-propagated operator is diagonal there. When a gate layer precedes the
//! first round, stabilizers copied between patches close as products with
//! other same-round measurements instead; non-deterministic first
//! measurements get no check.

use crate::compile::{PhysInstr, PhysicalCircuit, StabMeasRef};
use crate::gf2::{BitMatrix, BitVector, RowBasis};
use crate::layout::symplectic_vector;
use crate::pauli::{conjugate_in_place, Direction, PauliKind, PauliString};
use smallvec::SmallVec;
use std::collections::HashMap;

pub type CheckId = u32;

#[derive(Clone, Debug)]
pub struct Check {
    pub id: CheckId,
    /// The stabilizer measurement this check was built for.
    pub primary: StabMeasRef,
    /// All primaries this check serves (same-round product checks serve each
    /// of their non-deterministic constituents).
    pub owners: SmallVec<[StabMeasRef; 2]>,
    /// Stabilizer measurements whose product forms the check.
    pub constituents: SmallVec<[StabMeasRef; 3]>,
    /// Physical measurement ordinals; the check value is their XOR.
    pub bits: Vec<u32>,
}

#[derive(Clone, Debug)]
pub struct CheckSet {
    pub checks: Vec<Check>,
    /// Physical measurement ordinal → checks containing that bit.
    pub ordinal_incidence: Vec<SmallVec<[CheckId; 4]>>,
    /// Owner (stabilizer measurement) → its check.
    pub by_owner: HashMap<StabMeasRef, CheckId>,
}

impl CheckSet {
    pub fn len(&self) -> usize {
        self.checks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.checks.is_empty()
    }
}

/// Per-patch generator decomposition bases, cached per availability variant.
struct PatchSolver {
    both: RowBasis,
    x_only: RowBasis,
    z_only: RowBasis,
    n_x: usize,
}

impl PatchSolver {
    fn new(pc: &PhysicalCircuit) -> Self {
        let layout = &pc.layout;
        let n = layout.num_data();
        let n_x = layout.x_stabilizers.len();
        let mut rows = Vec::new();
        for basis in [PauliKind::X, PauliKind::Z] {
            for i in 0..layout.stabilizers(basis).len() {
                rows.push(symplectic_vector(&layout.stabilizer_pauli(basis, i), n));
            }
        }
        let both = RowBasis::new(&BitMatrix::from_rows(&rows));
        let x_only = RowBasis::new(&BitMatrix::from_rows(&rows[..n_x]));
        let z_only = RowBasis::new(&BitMatrix::from_rows(&rows[n_x..]));
        Self { both, x_only, z_only, n_x }
    }

    /// Expresses a patch-local Pauli over generators available in a round
    /// (both bases for SE rounds, one basis for final readouts). Returns
    /// selected (is_x, index) pairs, or None if not in the span.
    fn decompose(
        &self,
        local: &PauliString,
        has_x: bool,
        has_z: bool,
    ) -> Option<Vec<(bool, usize)>> {
        let v = symplectic_vector(local, local.num_qubits());
        let mut selected = Vec::new();
        match (has_x, has_z) {
            (true, true) => {
                for i in self.both.solve(&v)?.support() {
                    if i < self.n_x {
                        selected.push((true, i));
                    } else {
                        selected.push((false, i - self.n_x));
                    }
                }
            }
            (true, false) => {
                for i in self.x_only.solve(&v)?.support() {
                    selected.push((true, i));
                }
            }
            (false, true) => {
                for i in self.z_only.solve(&v)?.support() {
                    selected.push((false, i));
                }
            }
            (false, false) => return None,
        }
        Some(selected)
    }
}

/// Partial resolution of a stabilizer's backward propagation: accumulated
/// bits and constituents from intermediate rounds plus the operator left at
/// the initialization boundary.
struct Residual {
    bits: Vec<u32>,
    constituents: SmallVec<[StabMeasRef; 3]>,
    at_init: PauliString,
}

struct Builder<'a> {
    pc: &'a PhysicalCircuit,
    solver: PatchSolver,
    init_kind: Vec<Option<PauliKind>>,
    n_data: usize,
}

impl<'a> Builder<'a> {
    fn new(pc: &'a PhysicalCircuit) -> Self {
        let mut init_kind: Vec<Option<PauliKind>> = vec![None; pc.source.num_qubits];
        for instr in &pc.source.instructions {
            use crate::circuit::InstructionKind as K;
            match instr.kind {
                K::InitZ => init_kind[instr.targets[0]] = Some(PauliKind::Z),
                K::InitX => init_kind[instr.targets[0]] = Some(PauliKind::X),
                K::InitMagic => init_kind[instr.targets[0]] = Some(PauliKind::Y),
                _ => {}
            }
        }
        Self { pc, solver: PatchSolver::new(pc), init_kind, n_data: pc.layout.num_data() }
    }

    /// Conjugates backwards from `start_pos`, splitting at earlier round
    /// events. None when an intermediate decomposition fails.
    fn resolve(&self, event_id: usize, r: StabMeasRef) -> Option<Residual> {
        let pc = self.pc;
        let event = &pc.events[event_id];
        let entries = if r.basis_is_x {
            &event.per_patch.iter().find(|p| p.logical == r.logical as usize)?.x_entries
        } else {
            &event.per_patch.iter().find(|p| p.logical == r.logical as usize)?.z_entries
        };
        let mut bits: Vec<u32> = entries[r.stab_index as usize].to_vec();
        let mut constituents: SmallVec<[StabMeasRef; 3]> = SmallVec::new();
        constituents.push(r);
        let mut pauli =
            pc.stabilizer_pauli(r.logical as usize, r.basis(), r.stab_index as usize);
        let mut pos = event.start_pos;
        let mut ev = event_id as isize - 1;
        loop {
            let boundary = if ev >= 0 { pc.events[ev as usize].end_pos } else { 0 };
            for ip in (boundary..pos).rev() {
                if let PhysInstr::Gate { gate, qubits } = &pc.instructions[ip] {
                    let support: SmallVec<[usize; 2]> =
                        qubits.iter().map(|&q| q as usize).collect();
                    conjugate_in_place(&mut pauli, gate, &support, Direction::Backward);
                }
            }
            if pauli.is_identity() || ev < 0 {
                return Some(Residual { bits, constituents, at_init: pauli });
            }
            let earlier = &pc.events[ev as usize];
            for pr in &earlier.per_patch {
                let base = pc.data_base[pr.logical];
                let mut local = PauliString::identity(self.n_data);
                let mut any = false;
                for i in 0..self.n_data {
                    let kind = pauli.get(base + i);
                    if kind != PauliKind::I {
                        local.set(i, kind);
                        pauli.set(base + i, PauliKind::I);
                        any = true;
                    }
                }
                if !any {
                    continue;
                }
                let selected = self.solver.decompose(
                    &local,
                    !pr.x_entries.is_empty(),
                    !pr.z_entries.is_empty(),
                )?;
                for (is_x, idx) in selected {
                    let entry_bits =
                        if is_x { &pr.x_entries[idx] } else { &pr.z_entries[idx] };
                    bits.extend_from_slice(entry_bits);
                    constituents.push(StabMeasRef {
                        event: earlier.event_id as u32,
                        logical: pr.logical as u16,
                        basis_is_x: is_x,
                        stab_index: idx as u16,
                    });
                }
            }
            pos = earlier.start_pos;
            ev -= 1;
        }
    }

    /// Is the residual diagonal in every supported patch's init basis?
    fn init_deterministic(&self, residual: &PauliString) -> bool {
        for (q, &base) in self.pc.data_base.iter().enumerate() {
            let mut has_x = false;
            let mut has_z = false;
            for i in 0..self.n_data {
                has_x |= residual.x_bits().get(base + i);
                has_z |= residual.z_bits().get(base + i);
            }
            if !has_x && !has_z {
                continue;
            }
            match self.init_kind[q] {
                Some(PauliKind::Z) if !has_x => {}
                Some(PauliKind::X) if !has_z => {}
                // Magic patches interpose a projection round, so residual
                // support here means a non-deterministic closure.
                _ => return false,
            }
        }
        true
    }
}

/// Builds the full check set of a compiled circuit.
pub fn build_checks(pc: &PhysicalCircuit) -> CheckSet {
    let builder = Builder::new(pc);
    let mut checks: Vec<Check> = Vec::new();
    let mut by_owner: HashMap<StabMeasRef, CheckId> = HashMap::new();
    let mut by_bits: HashMap<Vec<u32>, CheckId> = HashMap::new();

    for event in &pc.events {
        // Residuals of every measurement in this event, for same-round
        // product closure of copied first-round stabilizers.
        let mut event_refs: Vec<StabMeasRef> = Vec::new();
        for pr in &event.per_patch {
            for (basis_is_x, count) in
                [(true, pr.x_entries.len()), (false, pr.z_entries.len())]
            {
                for idx in 0..count {
                    event_refs.push(StabMeasRef {
                        event: event.event_id as u32,
                        logical: pr.logical as u16,
                        basis_is_x,
                        stab_index: idx as u16,
                    });
                }
            }
        }
        let residuals: Vec<Option<Residual>> =
            event_refs.iter().map(|&r| builder.resolve(event.event_id, r)).collect();

        // Same-event closure solver, built on demand: rows are the
        // deterministic initialization directions plus the other
        // measurements' residuals.
        let mut closure: Option<(RowBasis, Vec<Option<usize>>)> = None;

        for (k, r) in event_refs.iter().enumerate() {
            let Some(res) = &residuals[k] else { continue };
            let mut bits = res.bits.clone();
            let mut constituents = res.constituents.clone();
            if !builder.init_deterministic(&res.at_init) {
                // Try closing with other same-event measurements.
                if closure.is_none() {
                    closure = Some(build_closure_basis(pc, &builder, &event_refs, &residuals));
                }
                let (rb, row_meas) = closure.as_ref().unwrap();
                let target = symplectic_vector(&res.at_init, pc.num_qubits);
                let Some(mut combo) = rb.solve(&target) else { continue };
                // A solution selecting the measurement's own row is not a
                // closure; swap it out through the null space when possible.
                let self_row = row_meas.iter().position(|&m| m == Some(k));
                if let Some(self_row) = self_row {
                    if combo.get(self_row) {
                        match rb.null_combo_containing(self_row) {
                            Some(null) => combo.xor_assign(null),
                            None => continue,
                        }
                    }
                }
                let mut extra: Vec<usize> = Vec::new();
                for row in combo.support() {
                    if let Some(j) = row_meas[row] {
                        debug_assert_ne!(j, k);
                        extra.push(j);
                    }
                }
                for j in extra {
                    let other = residuals[j].as_ref().expect("usable row");
                    bits.extend_from_slice(&other.bits);
                    for c in &other.constituents {
                        constituents.push(*c);
                    }
                }
            }
            let bits = xor_reduce(bits);
            if bits.is_empty() {
                continue;
            }
            if let Some(&existing) = by_bits.get(&bits) {
                // Identical product already recorded; this measurement also
                // owns it.
                let check = &mut checks[existing as usize];
                if !check.owners.contains(r) {
                    check.owners.push(*r);
                    by_owner.insert(*r, existing);
                }
                continue;
            }
            let id = checks.len() as CheckId;
            by_bits.insert(bits.clone(), id);
            by_owner.insert(*r, id);
            checks.push(Check {
                id,
                primary: *r,
                owners: SmallVec::from_slice(&[*r]),
                constituents,
                bits,
            });
        }
    }

    let mut ordinal_incidence = vec![SmallVec::new(); pc.num_measurements];
    for check in &checks {
        for &b in &check.bits {
            ordinal_incidence[b as usize].push(check.id);
        }
    }
    CheckSet { checks, ordinal_incidence, by_owner }
}

/// Rows: per-patch deterministic init directions (no bits) followed by the
/// residual-at-init of every usable measurement in the event.
fn build_closure_basis(
    pc: &PhysicalCircuit,
    builder: &Builder,
    event_refs: &[StabMeasRef],
    residuals: &[Option<Residual>],
) -> (RowBasis, Vec<Option<usize>>) {
    let n = pc.num_qubits;
    let n_data = pc.layout.num_data();
    let mut rows: Vec<BitVector> = Vec::new();
    let mut row_meas: Vec<Option<usize>> = Vec::new();
    for (q, &base) in pc.data_base.iter().enumerate() {
        let kind = builder.init_kind[q];
        for i in 0..n_data {
            let mut v = BitVector::zeros(2 * n);
            match kind {
                Some(PauliKind::Z) => v.set(n + base + i, true),
                Some(PauliKind::X) => v.set(base + i, true),
                // Magic patches are anchored by their projection round, not
                // by init directions.
                _ => continue,
            }
            rows.push(v);
            row_meas.push(None);
        }
    }
    for (j, res) in residuals.iter().enumerate() {
        if let Some(res) = res {
            if !res.at_init.is_identity() {
                rows.push(symplectic_vector(&res.at_init, n));
                row_meas.push(Some(j));
            }
        }
    }
    let _ = event_refs;
    (RowBasis::new(&BitMatrix::from_rows(&rows)), row_meas)
}

/// Sorts and drops ordinals appearing an even number of times.
fn xor_reduce(mut bits: Vec<u32>) -> Vec<u32> {
    bits.sort_unstable();
    let mut out = Vec::with_capacity(bits.len());
    let mut i = 0;
    while i < bits.len() {
        let mut j = i;
        while j < bits.len() && bits[j] == bits[i] {
            j += 1;
        }
        if (j - i) % 2 == 1 {
            out.push(bits[i]);
        }
        i = j;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{build_ghz_comparison, build_memory, InstructionKind, LogicalCircuit};
    use crate::compile::compile;
    use crate::layout::LayoutKind;
    use crate::noise::NoiseModel;

    fn count(cs: &CheckSet, pred: impl Fn(&Check) -> bool) -> usize {
        cs.checks.iter().filter(|c| pred(c)).count()
    }

    #[test]
    fn memory_checks_match_textbook_structure() {
        // d=3 memory, 3 rounds + final readout: the Z chain has init-closed
        // first-round checks, difference checks, and readout checks; the X
        // chain has no first-round checks and no readout.
        let c = build_memory(3);
        let pc = compile(&c, LayoutKind::Rotated, 3, NoiseModel::CircuitLevel { p: 1e-3 });
        let cs = build_checks(&pc);
        let z_checks = count(&cs, |c| !c.primary.basis_is_x);
        let x_checks = count(&cs, |c| c.primary.basis_is_x);
        assert_eq!(z_checks, 16); // 4 stabilizers × (3 rounds + final)
        assert_eq!(x_checks, 8); // rounds (1,2) and (2,3) only
        let singletons = count(&cs, |c| c.constituents.len() == 1);
        assert_eq!(singletons, 4);
    }

    #[test]
    fn cnot_target_checks_include_control_stabilizer() {
        let mut c = LogicalCircuit::new(2);
        c.push(InstructionKind::InitZ, vec![0]);
        c.push(InstructionKind::InitZ, vec![1]);
        c.push(InstructionKind::SERound, vec![]);
        c.push(InstructionKind::TransversalCnot, vec![0, 1]);
        c.push(InstructionKind::SERound, vec![]);
        c.push(InstructionKind::MeasureZ, vec![0]);
        c.push(InstructionKind::MeasureZ, vec![1]);
        let pc = compile(&c, LayoutKind::Rotated, 3, NoiseModel::CircuitLevel { p: 1e-3 });
        let cs = build_checks(&pc);
        // Round event 1 (after the CNOT): control-patch Z checks pair two
        // rounds; target-patch Z checks have the Z1ᵗZ2ᵗZ2ᵗ⁺¹ form.
        let post = 1u32;
        for check in &cs.checks {
            if check.primary.event != post {
                continue;
            }
            let (logical, is_x) = (check.primary.logical, check.primary.basis_is_x);
            let expected = match (logical, is_x) {
                (0, false) | (1, true) => 2,
                (1, false) | (0, true) => 3,
                _ => unreachable!(),
            };
            assert_eq!(check.constituents.len(), expected, "{check:?}");
            if expected == 3 {
                let other_patch = 1 - logical;
                assert!(check
                    .constituents
                    .iter()
                    .any(|r| r.logical == other_patch && r.event == 0));
            }
        }
    }

    #[test]
    fn ghz_first_round_cross_patch_products() {
        // The first SE round comes after CNOT(0→1): individually random
        // first-round stabilizers on patches 0 and 1 close as cross-patch
        // products; patch 2 closes on its initialization alone; patch-2 X
        // stabilizers stay checkless.
        let c = build_ghz_comparison();
        let pc = compile(&c, LayoutKind::Rotated, 3, NoiseModel::CircuitLevel { p: 1e-3 });
        let cs = build_checks(&pc);
        let ev0 = |c: &Check| c.primary.event == 0;
        let cross_x = count(&cs, |c| {
            ev0(c)
                && c.primary.basis_is_x
                && c.constituents.len() == 2
                && c.constituents.iter().any(|r| r.logical == 0)
                && c.constituents.iter().any(|r| r.logical == 1)
        });
        assert_eq!(cross_x, 4);
        let cross_z = count(&cs, |c| {
            ev0(c)
                && !c.primary.basis_is_x
                && c.constituents.len() == 2
                && c.constituents.iter().any(|r| r.logical == 0)
                && c.constituents.iter().any(|r| r.logical == 1)
        });
        assert_eq!(cross_z, 4);
        // Cross-patch products carry both owners.
        assert!(cs
            .checks
            .iter()
            .filter(|c| ev0(c) && c.constituents.len() == 2)
            .all(|c| c.owners.len() == 2));
        let patch2_z = count(&cs, |c| ev0(c) && c.primary.logical == 2 && !c.primary.basis_is_x);
        assert_eq!(patch2_z, 4);
        let patch2_x = count(&cs, |c| {
            ev0(c) && c.constituents.iter().all(|r| r.logical == 2) && c.primary.basis_is_x
        });
        assert_eq!(patch2_x, 0);
    }

    #[test]
    fn fold_h_checks_cross_bases() {
        let mut c = LogicalCircuit::new(1);
        c.push(InstructionKind::InitZ, vec![0]);
        c.push(InstructionKind::SERound, vec![]);
        c.push(InstructionKind::FoldH, vec![0]);
        c.push(InstructionKind::SERound, vec![]);
        c.push(InstructionKind::MeasureX, vec![0]);
        let pc = compile(&c, LayoutKind::Unrotated, 3, NoiseModel::CircuitLevel { p: 1e-3 });
        let cs = build_checks(&pc);
        let mut crossed = 0;
        for check in &cs.checks {
            if check.primary.event == 1 && check.constituents.len() == 2 {
                let other = check.constituents[1];
                if other.event == 0 && other.basis_is_x != check.primary.basis_is_x {
                    crossed += 1;
                }
            }
        }
        assert_eq!(crossed, 12, "every post-fold check pairs across bases");
    }

    #[test]
    fn fold_s_mixed_checks() {
        // After a fold-S, X stabilizers pick up a reflected Z-stabilizer
        // component at the earlier time (the Zᵗ Xᵗ Xᵗ⁺¹ mixed check) while Z
        // stabilizers keep plain two-round checks.
        let mut c = LogicalCircuit::new(1);
        c.push(InstructionKind::InitZ, vec![0]);
        c.push(InstructionKind::SERound, vec![]);
        c.push(InstructionKind::FoldS, vec![0]);
        c.push(InstructionKind::SERound, vec![]);
        c.push(InstructionKind::MeasureZ, vec![0]);
        let pc = compile(&c, LayoutKind::Unrotated, 3, NoiseModel::CircuitLevel { p: 1e-3 });
        let cs = build_checks(&pc);
        let mut mixed = 0;
        let mut z_pairs = 0;
        for check in &cs.checks {
            if check.primary.event == 1 {
                if check.primary.basis_is_x {
                    assert_eq!(check.constituents.len(), 3, "{check:?}");
                    assert!(check.constituents.iter().any(|r| r.event == 0 && !r.basis_is_x));
                    mixed += 1;
                } else {
                    assert_eq!(check.constituents.len(), 2, "{check:?}");
                    z_pairs += 1;
                }
            }
        }
        assert_eq!(mixed, 6);
        assert_eq!(z_pairs, 6);
    }

    #[test]
    fn stabilizer_measurement_in_at_most_two_checks_per_chain() {
        let c = build_ghz_comparison();
        let pc = compile(&c, LayoutKind::Rotated, 3, NoiseModel::CircuitLevel { p: 1e-3 });
        let cs = build_checks(&pc);
        let mut per_chain: HashMap<(StabMeasRef, u16, bool), usize> = HashMap::new();
        for check in &cs.checks {
            for &r in &check.constituents {
                *per_chain
                    .entry((r, check.primary.logical, check.primary.basis_is_x))
                    .or_default() += 1;
            }
        }
        for (_, n) in per_chain {
            assert!(n <= 2);
        }
    }
}
