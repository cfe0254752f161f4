//! Error-model (decoding hypergraph) extraction.
//!
//! Every elementary noise site decomposes into Pauli-component mechanisms.
//! Each mechanism is propagated symbolically through the rest of the circuit
//! as a Pauli frame, recording the physical measurement bits it flips; those
//! map onto flipped checks and flipped logical observables. Mechanisms with
//! identical flip signatures are merged by probability composition.
//!
//! Propagation is batched: mechanisms become columns of a pair of
//! (qubit × batch) bit matrices, so one pass over the circuit propagates
//! tens of thousands of mechanisms at once.

use crate::checks::CheckSet;
use crate::compile::{PhysInstr, PhysicalCircuit};
use crate::noise::NoiseSite;
use crate::pauli::{GateKind, PauliKind};
use smallvec::SmallVec;
use std::collections::HashMap;
use std::fmt::Write as _;

/// Where a mechanism lives, for volume accounting and reporting.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub struct MechanismLocation {
    /// Index of the originating noise instruction.
    pub position: u32,
    /// First affected physical qubit (measurement flips use the ancilla).
    pub qubit: u32,
    /// Pauli component index within the site (0 for single-component sites).
    pub component: u8,
}

#[derive(Clone, Debug)]
pub struct ErrorMechanism {
    pub id: u32,
    pub probability: f64,
    pub flipped_checks: SmallVec<[u32; 4]>,
    pub flipped_observables: SmallVec<[u32; 2]>,
    pub location: MechanismLocation,
    /// Pure syndrome-measurement-flip origin (a time-like edge).
    pub time_like: bool,
    /// Number of elementary mechanisms merged into this one.
    pub merged: u32,
}

/// Reference randomizer: probability-1/2 sign freedom of the initial state.
/// Flips only logical observables, never checks.
#[derive(Clone, Debug)]
pub struct Randomizer {
    pub flipped_observables: SmallVec<[u32; 2]>,
}

#[derive(Clone, Debug)]
pub struct ErrorModel {
    pub mechanisms: Vec<ErrorMechanism>,
    pub randomizers: Vec<Randomizer>,
    pub num_checks: usize,
    pub num_logical: usize,
}

/// Extraction knobs. Mechanisms merged below `prune_threshold` are dropped;
/// the default keeps everything.
#[derive(Copy, Clone, Debug)]
pub struct ExtractOptions {
    pub prune_threshold: f64,
    pub batch_size: usize,
}

impl Default for ExtractOptions {
    fn default() -> Self {
        Self { prune_threshold: 0.0, batch_size: 1 << 14 }
    }
}

/// Which mechanism set an elementary site entry feeds.
///
/// Depolarizing channels enter the sampling model through their exact Pauli
/// components, and the decoding model through independent X/Z sector
/// components (dropping the X–Z correlation of Y-type errors, as standard
/// for matching decoders).
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum MechClass {
    Exact,
    Decode,
    Both,
}

/// One elementary (pre-merge) mechanism: injection site plus probability.
#[derive(Clone, Debug)]
pub struct RawMechanism {
    pub position: u32,
    pub probability: f64,
    /// (qubit, x, z) Pauli factors to inject, or a direct measurement flip.
    pub inject: SmallVec<[(u32, bool, bool); 2]>,
    pub flip_ordinal: Option<u32>,
    pub component: u8,
    pub time_like: bool,
    pub randomizer: bool,
    pub class: MechClass,
}

/// Elementary mechanism together with its computed flip signature.
#[derive(Clone, Debug)]
pub struct RawFlip {
    pub raw: RawMechanism,
    /// (ordinal, patch) of every flipped physical measurement bit; an
    /// ordinal may appear once per patch acting on it.
    pub flipped_measurements: Vec<(u32, u16)>,
    pub flipped_checks: SmallVec<[u32; 4]>,
    pub flipped_observables: SmallVec<[u32; 2]>,
}

/// Per-elementary-site flip table, before any merging. Used by the
/// sampler-consistency oracle and by [`extract_error_model`].
pub fn raw_flip_table(pc: &PhysicalCircuit, checks: &CheckSet, batch_size: usize) -> Vec<RawFlip> {
    let raw = enumerate_mechanisms(pc);
    let flips = propagate_flips(pc, &raw, batch_size);
    let mut obs_incidence: Vec<SmallVec<[u32; 2]>> = vec![SmallVec::new(); pc.num_measurements];
    for (l, lm) in pc.logical_measurements.iter().enumerate() {
        for &b in &lm.bits {
            obs_incidence[b as usize].push(l as u32);
        }
    }
    raw.into_iter()
        .zip(flips)
        .map(|(raw, tagged)| {
            let mut check_flips: Vec<u32> = Vec::new();
            let mut obs_flips: Vec<u32> = Vec::new();
            for &(ordinal, _) in &tagged {
                check_flips.extend_from_slice(&checks.ordinal_incidence[ordinal as usize]);
                obs_flips.extend_from_slice(&obs_incidence[ordinal as usize]);
            }
            RawFlip {
                raw,
                flipped_measurements: tagged,
                flipped_checks: parity_reduce(check_flips),
                flipped_observables: parity_reduce(obs_flips),
            }
        })
        .collect()
}

fn enumerate_mechanisms(pc: &PhysicalCircuit) -> Vec<RawMechanism> {
    let mut out = Vec::new();
    let base = |position, probability, class| RawMechanism {
        position,
        probability,
        inject: SmallVec::new(),
        flip_ordinal: None,
        component: 0,
        time_like: false,
        randomizer: false,
        class,
    };
    for (pos, instr) in pc.instructions.iter().enumerate() {
        let PhysInstr::Noise(site) = instr else { continue };
        let position = pos as u32;
        match site {
            NoiseSite::Depol1 { q, p } => {
                for (component, (x, z)) in
                    [(true, false), (true, true), (false, true)].iter().enumerate()
                {
                    out.push(RawMechanism {
                        inject: SmallVec::from_slice(&[(*q, *x, *z)]),
                        component: component as u8,
                        ..base(position, p / 3.0, MechClass::Exact)
                    });
                }
            }
            NoiseSite::Depol2 { a, b, p } => {
                let mut component = 0u8;
                for pa in 0..4u8 {
                    for pb in 0..4u8 {
                        if pa == 0 && pb == 0 {
                            continue;
                        }
                        let mut inject = SmallVec::new();
                        if pa != 0 {
                            inject.push((*a, pa & 1 == 1, pa & 2 == 2));
                        }
                        if pb != 0 {
                            inject.push((*b, pb & 1 == 1, pb & 2 == 2));
                        }
                        out.push(RawMechanism {
                            inject,
                            component,
                            ..base(position, p / 15.0, MechClass::Exact)
                        });
                        component += 1;
                    }
                }
            }
            NoiseSite::PauliX { q, p } => out.push(RawMechanism {
                inject: SmallVec::from_slice(&[(*q, true, false)]),
                ..base(position, *p, MechClass::Both)
            }),
            NoiseSite::PauliZ { q, p } => out.push(RawMechanism {
                inject: SmallVec::from_slice(&[(*q, false, true)]),
                ..base(position, *p, MechClass::Both)
            }),
            NoiseSite::MeasFlip { ordinal, p } => out.push(RawMechanism {
                flip_ordinal: Some(*ordinal),
                time_like: true,
                ..base(position, *p, MechClass::Both)
            }),
            NoiseSite::RandomizeZ { q } => out.push(RawMechanism {
                inject: SmallVec::from_slice(&[(*q, false, true)]),
                randomizer: true,
                ..base(position, 0.5, MechClass::Both)
            }),
            NoiseSite::RandomizeX { q } => out.push(RawMechanism {
                inject: SmallVec::from_slice(&[(*q, true, false)]),
                randomizer: true,
                ..base(position, 0.5, MechClass::Both)
            }),
        }
    }
    out
}

/// Bit-matrix frame batch: one column per mechanism.
struct FrameBatch {
    words: usize,
    x: Vec<u64>,
    z: Vec<u64>,
}

impl FrameBatch {
    fn new(num_qubits: usize, words: usize) -> Self {
        Self { words, x: vec![0; num_qubits * words], z: vec![0; num_qubits * words] }
    }

    fn clear(&mut self) {
        self.x.fill(0);
        self.z.fill(0);
    }

    #[inline]
    fn row<'a>(data: &'a [u64], words: usize, q: u32) -> &'a [u64] {
        &data[q as usize * words..(q as usize + 1) * words]
    }

    fn xor_rows(data: &mut [u64], words: usize, src: u32, dst: u32) {
        let (s, d) = (src as usize * words, dst as usize * words);
        if s == d {
            return;
        }
        for k in 0..words {
            let v = data[s + k];
            data[d + k] ^= v;
        }
    }

    fn swap_rows(data: &mut [u64], words: usize, a: u32, b: u32) {
        let (ai, bi) = (a as usize * words, b as usize * words);
        if ai == bi {
            return;
        }
        for k in 0..words {
            data.swap(ai + k, bi + k);
        }
    }

    fn clear_row(data: &mut [u64], words: usize, q: u32) {
        data[q as usize * words..(q as usize + 1) * words].fill(0);
    }

    fn apply_gate(&mut self, gate: &GateKind, qubits: &[u32]) {
        let w = self.words;
        match gate {
            GateKind::X | GateKind::Z => {}
            GateKind::H => {
                let q = qubits[0];
                for k in 0..w {
                    let i = q as usize * w + k;
                    std::mem::swap(&mut self.x[i], &mut self.z[i]);
                }
            }
            GateKind::S | GateKind::SDagger => {
                // X → Y: z ^= x
                let q = qubits[0];
                for k in 0..w {
                    let i = q as usize * w + k;
                    self.z[i] ^= self.x[i];
                }
            }
            GateKind::Cnot => {
                let (c, t) = (qubits[0], qubits[1]);
                Self::xor_rows(&mut self.x, w, c, t);
                Self::xor_rows(&mut self.z, w, t, c);
            }
            GateKind::Cz => {
                // X_a → X_a Z_b and X_b → X_b Z_a: z-rows gain the partner's
                // x-row.
                let (a, b) = (qubits[0], qubits[1]);
                for k in 0..w {
                    let xa = self.x[a as usize * w + k];
                    let xb = self.x[b as usize * w + k];
                    self.z[b as usize * w + k] ^= xa;
                    self.z[a as usize * w + k] ^= xb;
                }
            }
            GateKind::Permutation(perm) => {
                // materialize rows then write back permuted
                let support = qubits;
                let mut xs: Vec<Vec<u64>> = Vec::with_capacity(support.len());
                let mut zs: Vec<Vec<u64>> = Vec::with_capacity(support.len());
                for &q in support {
                    xs.push(Self::row(&self.x, w, q).to_vec());
                    zs.push(Self::row(&self.z, w, q).to_vec());
                }
                for (i, &dst) in perm.iter().enumerate() {
                    let q = support[dst];
                    self.x[q as usize * w..(q as usize + 1) * w].copy_from_slice(&xs[i]);
                    self.z[q as usize * w..(q as usize + 1) * w].copy_from_slice(&zs[i]);
                }
            }
        }
    }
}

/// Extracts the full decoding hypergraph of a compiled circuit against a
/// built check set.
pub fn extract_error_model(
    pc: &PhysicalCircuit,
    checks: &CheckSet,
    options: ExtractOptions,
) -> ErrorModel {
    let table = raw_flip_table(pc, checks, options.batch_size);
    let mut randomizers: Vec<Randomizer> = Vec::new();
    let mut merge = MergeSet::default();

    for entry in &table {
        let raw_mech = &entry.raw;
        if raw_mech.randomizer {
            assert!(
                entry.flipped_checks.is_empty(),
                "reference randomizer must not flip checks (position {})",
                raw_mech.position
            );
            if !entry.flipped_observables.is_empty() {
                randomizers.push(Randomizer {
                    flipped_observables: entry.flipped_observables.clone(),
                });
            }
            continue;
        }
        if entry.flipped_checks.is_empty() && entry.flipped_observables.is_empty() {
            continue;
        }
        merge.add(raw_mech, entry.flipped_checks.clone(), entry.flipped_observables.clone());
    }

    let mechanisms = merge.finish(options.prune_threshold);
    ErrorModel {
        mechanisms,
        randomizers,
        num_checks: checks.len(),
        num_logical: pc.logical_measurements.len(),
    }
}

#[derive(Default)]
struct MergeSet {
    mechanisms: Vec<ErrorMechanism>,
    merge_map: HashMap<(SmallVec<[u32; 4]>, SmallVec<[u32; 2]>), usize>,
}

impl MergeSet {
    fn add(
        &mut self,
        raw_mech: &RawMechanism,
        flipped_checks: SmallVec<[u32; 4]>,
        flipped_observables: SmallVec<[u32; 2]>,
    ) {
        let key = (flipped_checks.clone(), flipped_observables.clone());
        match self.merge_map.get(&key) {
            Some(&idx) => {
                let m = &mut self.mechanisms[idx];
                let (p, q) = (m.probability, raw_mech.probability);
                m.probability = p * (1.0 - q) + q * (1.0 - p);
                m.merged += 1;
                m.time_like &= raw_mech.time_like;
            }
            None => {
                let idx = self.mechanisms.len();
                self.merge_map.insert(key, idx);
                let qubit = raw_mech
                    .inject
                    .first()
                    .map(|&(q, _, _)| q)
                    .or(raw_mech.flip_ordinal)
                    .unwrap_or(0);
                self.mechanisms.push(ErrorMechanism {
                    id: 0,
                    probability: raw_mech.probability,
                    flipped_checks,
                    flipped_observables,
                    location: MechanismLocation {
                        position: raw_mech.position,
                        qubit,
                        component: raw_mech.component,
                    },
                    time_like: raw_mech.time_like,
                    merged: 1,
                });
            }
        }
    }

    fn finish(mut self, prune_threshold: f64) -> Vec<ErrorMechanism> {
        if prune_threshold > 0.0 {
            self.mechanisms.retain(|m| m.probability >= prune_threshold);
        }
        // Stable deterministic order: by location then signature.
        self.mechanisms.sort_by(|a, b| {
            (a.location.position, a.location.qubit, a.location.component, &a.flipped_checks).cmp(
                &(b.location.position, b.location.qubit, b.location.component, &b.flipped_checks),
            )
        });
        for (i, m) in self.mechanisms.iter_mut().enumerate() {
            m.id = i as u32;
        }
        self.mechanisms
    }
}

fn parity_reduce<A: smallvec::Array<Item = u32>>(mut v: Vec<u32>) -> SmallVec<A> {
    v.sort_unstable();
    let mut out = SmallVec::new();
    let mut i = 0;
    while i < v.len() {
        let mut j = i;
        while j < v.len() && v[j] == v[i] {
            j += 1;
        }
        if (j - i) % 2 == 1 {
            out.push(v[i]);
        }
        i = j;
    }
    out
}

/// Patch owning a physical qubit (data or ancilla).
fn qubit_patch(pc: &PhysicalCircuit, q: u32) -> u16 {
    let n = pc.source.num_qubits;
    let d = pc.layout.num_data();
    let q = q as usize;
    if q < n * d {
        (q / d) as u16
    } else {
        let per = pc.layout.x_stabilizers.len() + pc.layout.z_stabilizers.len();
        ((q - n * d) / per) as u16
    }
}

/// Batched forward propagation; returns per-mechanism flipped physical
/// measurement ordinals tagged with the patch the flip acts through.
fn propagate_flips(
    pc: &PhysicalCircuit,
    raw: &[RawMechanism],
    batch_size: usize,
) -> Vec<Vec<(u32, u16)>> {
    let words = batch_size / 64;
    assert!(batch_size % 64 == 0);
    let mut flips: Vec<Vec<(u32, u16)>> = raw.iter().map(|_| Vec::new()).collect();

    // Condition masks only needed for ordinals referenced by CondPauli.
    let mut conditioned: Vec<u32> = pc
        .instructions
        .iter()
        .filter_map(|i| match i {
            PhysInstr::CondPauli { conditions, .. } => Some(conditions.iter().copied()),
            _ => None,
        })
        .flatten()
        .collect();
    conditioned.sort_unstable();
    conditioned.dedup();

    let mut frames = FrameBatch::new(pc.num_qubits, words);
    let mut acc = vec![0u64; words];
    let mut ordinal_patch: Vec<u16> = vec![0; pc.num_measurements];
    for instr in &pc.instructions {
        if let PhysInstr::MeasZ { q, ordinal } = instr {
            ordinal_patch[*ordinal as usize] = qubit_patch(pc, *q);
        }
    }

    for (batch_start, chunk) in raw.chunks(batch_size).enumerate().map(|(i, c)| (i * batch_size, c))
    {
        frames.clear();
        let mut cond_masks: HashMap<u32, Vec<u64>> = HashMap::new();
        // Mechanisms in `raw` are ordered by position; walk instructions and
        // inject each mechanism's Pauli at its site.
        let mut next = 0usize;
        for (pos, instr) in pc.instructions.iter().enumerate() {
            while next < chunk.len() && chunk[next].position == pos as u32 {
                let col = next;
                let (wi, bit) = (col / 64, col % 64);
                for &(q, x, z) in &chunk[next].inject {
                    if x {
                        frames.x[q as usize * words + wi] ^= 1u64 << bit;
                    }
                    if z {
                        frames.z[q as usize * words + wi] ^= 1u64 << bit;
                    }
                }
                if let Some(ordinal) = chunk[next].flip_ordinal {
                    flips[batch_start + col].push((ordinal, ordinal_patch[ordinal as usize]));
                }
                next += 1;
            }
            match instr {
                PhysInstr::Gate { gate, qubits } => frames.apply_gate(gate, qubits),
                PhysInstr::ResetZ { q } | PhysInstr::ResetX { q } => {
                    FrameBatch::clear_row(&mut frames.x, words, *q);
                    FrameBatch::clear_row(&mut frames.z, words, *q);
                }
                PhysInstr::MeasZ { q, ordinal } => {
                    let patch = qubit_patch(pc, *q);
                    let row = FrameBatch::row(&frames.x, words, *q);
                    record_flips(row, batch_start, chunk.len(), *ordinal, patch, &mut flips);
                    if conditioned.binary_search(ordinal).is_ok() {
                        cond_masks.insert(*ordinal, row.to_vec());
                    }
                }
                PhysInstr::MeasPauli { pauli, ordinal } => {
                    // Record the anticommutation per patch so that composite
                    // (gate-propagated) errors can later be decomposed with
                    // exact per-patch observable attribution.
                    acc.fill(0);
                    let mut patches: Vec<u16> = pauli
                        .support()
                        .iter()
                        .map(|&q| qubit_patch(pc, q as u32))
                        .collect();
                    patches.sort_unstable();
                    patches.dedup();
                    for &patch in &patches {
                        let mut part = vec![0u64; words];
                        for q in pauli.z_bits().support() {
                            if qubit_patch(pc, q as u32) == patch {
                                for (k, a) in part.iter_mut().enumerate() {
                                    *a ^= frames.x[q * words + k];
                                }
                            }
                        }
                        for q in pauli.x_bits().support() {
                            if qubit_patch(pc, q as u32) == patch {
                                for (k, a) in part.iter_mut().enumerate() {
                                    *a ^= frames.z[q * words + k];
                                }
                            }
                        }
                        record_flips(&part, batch_start, chunk.len(), *ordinal, patch, &mut flips);
                        for (a, b) in acc.iter_mut().zip(&part) {
                            *a ^= b;
                        }
                    }
                    if conditioned.binary_search(ordinal).is_ok() {
                        cond_masks.insert(*ordinal, acc.clone());
                    }
                }
                PhysInstr::PauliApply { .. } => {}
                PhysInstr::CondPauli { pauli, conditions } => {
                    acc.fill(0);
                    for ordinal in conditions {
                        if let Some(mask) = cond_masks.get(ordinal) {
                            for (a, m) in acc.iter_mut().zip(mask) {
                                *a ^= m;
                            }
                        }
                    }
                    if acc.iter().any(|&w| w != 0) {
                        for q in pauli.x_bits().support() {
                            for (k, a) in acc.iter().enumerate() {
                                frames.x[q * words + k] ^= a;
                            }
                        }
                        for q in pauli.z_bits().support() {
                            for (k, a) in acc.iter().enumerate() {
                                frames.z[q * words + k] ^= a;
                            }
                        }
                    }
                }
                PhysInstr::Noise(_) => {}
            }
        }
        debug_assert_eq!(next, chunk.len(), "all mechanisms injected");
    }
    flips
}

fn record_flips(
    mask: &[u64],
    batch_start: usize,
    batch_len: usize,
    ordinal: u32,
    patch: u16,
    flips: &mut [Vec<(u32, u16)>],
) {
    for (wi, &word) in mask.iter().enumerate() {
        let mut w = word;
        while w != 0 {
            let bit = w.trailing_zeros() as usize;
            w &= w - 1;
            let col = wi * 64 + bit;
            if col < batch_len {
                flips[batch_start + col].push((ordinal, patch));
            }
        }
    }
}

/// Writes the model in the stable line format
/// `p check-ids | observable-ids | location`.
pub fn dump_error_model(model: &ErrorModel) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# error model: {} mechanisms, {} checks, {} observables",
        model.mechanisms.len(), model.num_checks, model.num_logical);
    for m in &model.mechanisms {
        let checks: Vec<String> = m.flipped_checks.iter().map(|c| c.to_string()).collect();
        let obs: Vec<String> = m.flipped_observables.iter().map(|o| o.to_string()).collect();
        let _ = writeln!(
            out,
            "{:.6e} {} | {} | pos={} q={} c={}",
            m.probability,
            checks.join(" "),
            obs.join(" "),
            m.location.position,
            m.location.qubit,
            m.location.component,
        );
    }
    out
}
