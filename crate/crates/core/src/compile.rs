//! Compilation of logical circuits onto surface-code patches.
//!
//! Every logical qubit gets one patch of the chosen layout. Logic gates and
//! SE rounds decompose into physical Z-basis resets and measurements, CNOT
//! gates and single-qubit gates; fold gates additionally use the diagonal
//! reflection as a (noiseless) qubit permutation. Noise sites are inserted
//! explicitly according to the noise model, so downstream consumers (the
//! reference simulation, the error-model extraction and the samplers) only
//! ever walk the physical instruction list.

use crate::circuit::{InstructionKind, LogicalCircuit};
use crate::layout::{make_layout, CodeLayout, LayoutKind};
use crate::noise::{NoiseModel, NoiseSite};
use crate::pauli::{GateKind, PauliKind, PauliString};
use smallvec::SmallVec;

#[derive(Clone, Debug)]
pub enum PhysInstr {
    Gate { gate: GateKind, qubits: SmallVec<[u32; 2]> },
    ResetZ { q: u32 },
    ResetX { q: u32 },
    MeasZ { q: u32, ordinal: u32 },
    /// Noiseless multi-qubit Pauli measurement (global qubit indices).
    MeasPauli { pauli: PauliString, ordinal: u32 },
    /// Unconditional Pauli (reference-frame bookkeeping only).
    PauliApply { pauli: PauliString },
    /// Pauli applied when the XOR of the listed measurement bits is 1.
    CondPauli { pauli: PauliString, conditions: Vec<u32> },
    Noise(NoiseSite),
}

/// Identity of one stabilizer measurement: which patch, basis, generator and
/// round event produced it.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StabMeasRef {
    pub event: u32,
    pub logical: u16,
    pub basis_is_x: bool,
    pub stab_index: u16,
}

impl StabMeasRef {
    pub fn basis(&self) -> PauliKind {
        if self.basis_is_x {
            PauliKind::X
        } else {
            PauliKind::Z
        }
    }
}

/// Stabilizer measurements of one patch inside one round event.
#[derive(Clone, Debug)]
pub struct PatchRound {
    pub logical: usize,
    /// Per X-generator: physical measurement ordinals whose XOR is the value.
    pub x_entries: Vec<SmallVec<[u32; 4]>>,
    pub z_entries: Vec<SmallVec<[u32; 4]>>,
    pub noisy: bool,
    /// True for the projection round of magic-state preparation, whose
    /// boundary also fixes the logical Ȳ.
    pub magic_boundary: bool,
}

/// One syndrome-extraction-like event: a global SE round, a magic-state
/// projection round, or a transversal data readout (inferred stabilizers).
#[derive(Clone, Debug)]
pub struct RoundEvent {
    pub event_id: usize,
    /// Instruction index of the first instruction of the event.
    pub start_pos: usize,
    /// Instruction index just past the event's measurements.
    pub end_pos: usize,
    /// Logical instruction that produced the event.
    pub source_instr: usize,
    pub per_patch: Vec<PatchRound>,
    pub final_readout: bool,
}

/// Raw-bit definition of one logical measurement.
#[derive(Clone, Debug)]
pub struct LogicalMeasurement {
    pub instr_index: usize,
    /// Physical measurement ordinals; the raw logical bit is their XOR.
    pub bits: Vec<u32>,
}

#[derive(Clone, Debug)]
pub struct PhysicalCircuit {
    pub source: LogicalCircuit,
    pub layout: CodeLayout,
    pub noise: NoiseModel,
    pub num_qubits: usize,
    pub num_measurements: usize,
    pub instructions: Vec<PhysInstr>,
    pub logical_measurements: Vec<LogicalMeasurement>,
    pub events: Vec<RoundEvent>,
    /// First physical data qubit of each patch.
    pub data_base: Vec<usize>,
}

impl PhysicalCircuit {
    pub fn data_qubit(&self, logical: usize, i: usize) -> u32 {
        (self.data_base[logical] + i) as u32
    }

    /// Physical Pauli of a stabilizer generator on a patch.
    pub fn stabilizer_pauli(&self, logical: usize, basis: PauliKind, idx: usize) -> PauliString {
        let local = self.layout.stabilizer_pauli(basis, idx);
        self.lift_patch_pauli(logical, &local)
    }

    /// Physical representative of a logical Pauli on one patch.
    pub fn logical_rep(&self, logical: usize, basis: PauliKind) -> PauliString {
        match basis {
            PauliKind::X | PauliKind::Z => {
                let local = self.layout.logical_pauli(basis);
                self.lift_patch_pauli(logical, &local)
            }
            PauliKind::Y => {
                let mut p = self.logical_rep(logical, PauliKind::X);
                p.mul_assign(&self.logical_rep(logical, PauliKind::Z));
                p
            }
            PauliKind::I => PauliString::identity(self.num_qubits),
        }
    }

    /// Physical representative of a logical Pauli string (one site per patch).
    pub fn logical_string_rep(&self, op: &PauliString) -> PauliString {
        let mut phys = PauliString::identity(self.num_qubits);
        for q in 0..op.num_qubits() {
            let kind = op.get(q);
            if kind != PauliKind::I {
                phys.mul_assign(&self.logical_rep(q, kind));
            }
        }
        phys
    }

    fn lift_patch_pauli(&self, logical: usize, local: &PauliString) -> PauliString {
        let mut p = PauliString::identity(self.num_qubits);
        let base = self.data_base[logical];
        for i in 0..local.num_qubits() {
            let kind = local.get(i);
            if kind != PauliKind::I {
                p.set(base + i, kind);
            }
        }
        p
    }
}

struct Compiler {
    layout: CodeLayout,
    noise: NoiseModel,
    num_logical: usize,
    data_base: Vec<usize>,
    x_anc_base: Vec<usize>,
    z_anc_base: Vec<usize>,
    num_qubits: usize,
    instructions: Vec<PhysInstr>,
    next_ordinal: u32,
    logical_measurements: Vec<LogicalMeasurement>,
    events: Vec<RoundEvent>,
    live: Vec<bool>,
}

impl Compiler {
    fn new(circuit: &LogicalCircuit, layout: CodeLayout, noise: NoiseModel) -> Self {
        let n = circuit.num_qubits;
        let d_count = layout.num_data();
        let sx = layout.x_stabilizers.len();
        let sz = layout.z_stabilizers.len();
        let data_base: Vec<usize> = (0..n).map(|q| q * d_count).collect();
        let anc0 = n * d_count;
        let x_anc_base: Vec<usize> = (0..n).map(|q| anc0 + q * (sx + sz)).collect();
        let z_anc_base: Vec<usize> = (0..n).map(|q| anc0 + q * (sx + sz) + sx).collect();
        let num_qubits = anc0 + n * (sx + sz);
        Self {
            layout,
            noise,
            num_logical: n,
            data_base,
            x_anc_base,
            z_anc_base,
            num_qubits,
            instructions: Vec::new(),
            next_ordinal: 0,
            logical_measurements: Vec::new(),
            events: Vec::new(),
            live: vec![false; n],
        }
    }

    fn data(&self, q: usize, i: usize) -> u32 {
        (self.data_base[q] + i) as u32
    }

    fn push(&mut self, instr: PhysInstr) {
        self.instructions.push(instr);
    }

    fn alloc_ordinal(&mut self) -> u32 {
        let o = self.next_ordinal;
        self.next_ordinal += 1;
        o
    }

    fn meas_z(&mut self, q: u32) -> u32 {
        let ordinal = self.alloc_ordinal();
        self.push(PhysInstr::MeasZ { q, ordinal });
        ordinal
    }

    fn depol1(&mut self, q: u32, noisy: bool) {
        if noisy && self.noise.is_circuit_level() {
            let p = self.noise.p();
            if p > 0.0 {
                self.push(PhysInstr::Noise(NoiseSite::Depol1 { q, p }));
            }
        }
    }

    fn depol2(&mut self, a: u32, b: u32, noisy: bool) {
        if noisy && self.noise.is_circuit_level() {
            let p = self.noise.p();
            if p > 0.0 {
                self.push(PhysInstr::Noise(NoiseSite::Depol2 { a, b, p }));
            }
        }
    }

    fn lift(&self, q: usize, local: &PauliString) -> PauliString {
        let mut p = PauliString::identity(self.num_qubits);
        for i in 0..local.num_qubits() {
            let kind = local.get(i);
            if kind != PauliKind::I {
                p.set(self.data_base[q] + i, kind);
            }
        }
        p
    }

    fn logical_rep(&self, q: usize, basis: PauliKind) -> PauliString {
        match basis {
            PauliKind::X | PauliKind::Z => self.lift(q, &self.layout.logical_pauli(basis)),
            PauliKind::Y => {
                let mut p = self.lift(q, &self.layout.logical_pauli(PauliKind::X));
                p.mul_assign(&self.lift(q, &self.layout.logical_pauli(PauliKind::Z)));
                p
            }
            PauliKind::I => PauliString::identity(self.num_qubits),
        }
    }

    fn emit_init(&mut self, q: usize, basis: PauliKind, noisy: bool) {
        for i in 0..self.layout.num_data() {
            let phys = self.data(q, i);
            match basis {
                PauliKind::Z => {
                    self.push(PhysInstr::ResetZ { q: phys });
                    self.push(PhysInstr::Noise(NoiseSite::RandomizeZ { q: phys }));
                }
                PauliKind::X => {
                    self.push(PhysInstr::ResetX { q: phys });
                    self.push(PhysInstr::Noise(NoiseSite::RandomizeX { q: phys }));
                }
                _ => unreachable!(),
            }
            self.depol1(phys, noisy);
        }
        self.live[q] = true;
    }

    /// Magic |S̄⟩ preparation: ideal reset, a noiseless projection round in
    /// both bases, a noiseless logical-Ȳ projection fixed to +1, then the
    /// injected single-qubit error channel. The two noisy equilibration
    /// rounds are ordinary SE rounds emitted by the circuit builders.
    fn emit_magic(&mut self, q: usize, instr_index: usize, noisy: bool) {
        for i in 0..self.layout.num_data() {
            let phys = self.data(q, i);
            self.push(PhysInstr::ResetZ { q: phys });
            self.push(PhysInstr::Noise(NoiseSite::RandomizeZ { q: phys }));
        }
        self.live[q] = true;
        self.emit_round_event(&[q], instr_index, false, true);
        let y_rep = self.logical_rep(q, PauliKind::Y);
        let ordinal = self.alloc_ordinal();
        self.push(PhysInstr::MeasPauli { pauli: y_rep, ordinal });
        let x_rep = self.logical_rep(q, PauliKind::X);
        self.push(PhysInstr::CondPauli { pauli: x_rep, conditions: vec![ordinal] });
        if noisy && self.noise.p() > 0.0 {
            let p = self.noise.p();
            for i in 0..self.layout.num_data() {
                let phys = self.data(q, i);
                self.push(PhysInstr::Noise(NoiseSite::Depol1 { q: phys, p }));
            }
        }
    }

    /// One SE round on the given patches (both bases), as one round event.
    fn emit_round_event(
        &mut self,
        patches: &[usize],
        source_instr: usize,
        noisy: bool,
        magic_boundary: bool,
    ) {
        let start_pos = self.instructions.len();
        let event_id = self.events.len();
        let mut per_patch = Vec::with_capacity(patches.len());
        let x_sched: Vec<[Option<usize>; 4]> =
            self.layout.x_stabilizers.iter().map(|s| s.schedule).collect();
        let z_sched: Vec<[Option<usize>; 4]> =
            self.layout.z_stabilizers.iter().map(|s| s.schedule).collect();
        match self.noise {
            NoiseModel::CircuitLevel { .. } => {
                // Ancilla resets; data qubits idle through the reset period.
                for &q in patches {
                    for idx in 0..x_sched.len() {
                        let anc = (self.x_anc_base[q] + idx) as u32;
                        self.push(PhysInstr::ResetZ { q: anc });
                        self.depol1(anc, noisy);
                        self.push(PhysInstr::Gate {
                            gate: GateKind::H,
                            qubits: SmallVec::from_slice(&[anc]),
                        });
                    }
                    for idx in 0..z_sched.len() {
                        let anc = (self.z_anc_base[q] + idx) as u32;
                        self.push(PhysInstr::ResetZ { q: anc });
                        self.depol1(anc, noisy);
                    }
                    for i in 0..self.layout.num_data() {
                        let data = self.data(q, i);
                        self.depol1(data, noisy);
                    }
                }
                // Four interleaved CNOT steps.
                for step in 0..4 {
                    for &q in patches {
                        for (idx, sched) in x_sched.iter().enumerate() {
                            if let Some(dq) = sched[step] {
                                let anc = (self.x_anc_base[q] + idx) as u32;
                                let data = self.data(q, dq);
                                self.push(PhysInstr::Gate {
                                    gate: GateKind::Cnot,
                                    qubits: SmallVec::from_slice(&[anc, data]),
                                });
                                self.depol2(anc, data, noisy);
                            }
                        }
                        for (idx, sched) in z_sched.iter().enumerate() {
                            if let Some(dq) = sched[step] {
                                let anc = (self.z_anc_base[q] + idx) as u32;
                                let data = self.data(q, dq);
                                self.push(PhysInstr::Gate {
                                    gate: GateKind::Cnot,
                                    qubits: SmallVec::from_slice(&[data, anc]),
                                });
                                self.depol2(data, anc, noisy);
                            }
                        }
                    }
                }
                // Data qubits idle through the ancilla readout/reset period;
                // the depolarizing channel covers them during that step.
                for &q in patches {
                    for i in 0..self.layout.num_data() {
                        let data = self.data(q, i);
                        self.depol1(data, noisy);
                    }
                }
                // Ancilla readout.
                for &q in patches {
                    let mut x_entries = Vec::with_capacity(x_sched.len());
                    for idx in 0..x_sched.len() {
                        let anc = (self.x_anc_base[q] + idx) as u32;
                        self.push(PhysInstr::Gate {
                            gate: GateKind::H,
                            qubits: SmallVec::from_slice(&[anc]),
                        });
                        self.depol1(anc, noisy);
                        let ordinal = self.meas_z(anc);
                        x_entries.push(SmallVec::from_slice(&[ordinal]));
                    }
                    let mut z_entries = Vec::with_capacity(z_sched.len());
                    for idx in 0..z_sched.len() {
                        let anc = (self.z_anc_base[q] + idx) as u32;
                        self.depol1(anc, noisy);
                        let ordinal = self.meas_z(anc);
                        z_entries.push(SmallVec::from_slice(&[ordinal]));
                    }
                    per_patch.push(PatchRound {
                        logical: q,
                        x_entries,
                        z_entries,
                        noisy,
                        magic_boundary,
                    });
                }
            }
            NoiseModel::Phenomenological { p } => {
                // Data errors before the round, then direct stabilizer
                // measurements with classical flips.
                if noisy && p > 0.0 {
                    for &q in patches {
                        for i in 0..self.layout.num_data() {
                            let phys = self.data(q, i);
                            self.push(PhysInstr::Noise(NoiseSite::PauliX { q: phys, p }));
                            self.push(PhysInstr::Noise(NoiseSite::PauliZ { q: phys, p }));
                        }
                    }
                }
                for &q in patches {
                    let mut x_entries = Vec::new();
                    for idx in 0..x_sched.len() {
                        let pauli = self.lift(q, &self.layout.stabilizer_pauli(PauliKind::X, idx));
                        let ordinal = self.alloc_ordinal();
                        self.push(PhysInstr::MeasPauli { pauli, ordinal });
                        if noisy && p > 0.0 {
                            self.push(PhysInstr::Noise(NoiseSite::MeasFlip { ordinal, p }));
                        }
                        x_entries.push(SmallVec::from_slice(&[ordinal]));
                    }
                    let mut z_entries = Vec::new();
                    for idx in 0..z_sched.len() {
                        let pauli = self.lift(q, &self.layout.stabilizer_pauli(PauliKind::Z, idx));
                        let ordinal = self.alloc_ordinal();
                        self.push(PhysInstr::MeasPauli { pauli, ordinal });
                        if noisy && p > 0.0 {
                            self.push(PhysInstr::Noise(NoiseSite::MeasFlip { ordinal, p }));
                        }
                        z_entries.push(SmallVec::from_slice(&[ordinal]));
                    }
                    per_patch.push(PatchRound {
                        logical: q,
                        x_entries,
                        z_entries,
                        noisy,
                        magic_boundary,
                    });
                }
            }
        }
        let end_pos = self.instructions.len();
        self.events.push(RoundEvent {
            event_id,
            start_pos,
            end_pos,
            source_instr,
            per_patch,
            final_readout: false,
        });
    }

    /// Transversal data readout of one patch: the logical raw bit is the
    /// parity along the logical representative and the same-basis stabilizers
    /// are inferred as data-bit parities (a final round event).
    fn emit_readout(&mut self, q: usize, basis: PauliKind, source_instr: usize, noisy: bool) {
        let start_pos = self.instructions.len();
        let n_data = self.layout.num_data();
        let mut data_ordinals = Vec::with_capacity(n_data);
        for i in 0..n_data {
            let phys = self.data(q, i);
            if basis == PauliKind::X {
                self.push(PhysInstr::Gate { gate: GateKind::H, qubits: SmallVec::from_slice(&[phys]) });
            }
            self.depol1(phys, noisy);
            let ordinal = self.meas_z(phys);
            data_ordinals.push(ordinal);
        }
        let support = match basis {
            PauliKind::Z => &self.layout.logical_z,
            PauliKind::X => &self.layout.logical_x,
            _ => unreachable!(),
        };
        let bits: Vec<u32> = support.iter().map(|&i| data_ordinals[i]).collect();
        self.logical_measurements.push(LogicalMeasurement { instr_index: source_instr, bits });

        let stabs = self.layout.stabilizers(basis);
        let entries: Vec<SmallVec<[u32; 4]>> = stabs
            .iter()
            .map(|s| s.support.iter().map(|&i| data_ordinals[i]).collect())
            .collect();
        let (x_entries, z_entries) = match basis {
            PauliKind::X => (entries, Vec::new()),
            PauliKind::Z => (Vec::new(), entries),
            _ => unreachable!(),
        };
        let event_id = self.events.len();
        self.events.push(RoundEvent {
            event_id,
            start_pos,
            end_pos: self.instructions.len(),
            source_instr,
            per_patch: vec![PatchRound { logical: q, x_entries, z_entries, noisy, magic_boundary: false }],
            final_readout: true,
        });
        self.live[q] = false;
    }

    fn compile(mut self, circuit: &LogicalCircuit) -> PhysicalCircuit {
        let d_count = self.layout.num_data();
        for (at, instr) in circuit.instructions.iter().enumerate() {
            match &instr.kind {
                InstructionKind::InitZ => self.emit_init(instr.targets[0], PauliKind::Z, instr.noisy),
                InstructionKind::InitX => self.emit_init(instr.targets[0], PauliKind::X, instr.noisy),
                InstructionKind::InitMagic => self.emit_magic(instr.targets[0], at, instr.noisy),
                InstructionKind::TransversalCnot => {
                    let (a, b) = (instr.targets[0], instr.targets[1]);
                    for i in 0..d_count {
                        let (pa, pb) = (self.data(a, i), self.data(b, i));
                        self.push(PhysInstr::Gate {
                            gate: GateKind::Cnot,
                            qubits: SmallVec::from_slice(&[pa, pb]),
                        });
                        self.depol2(pa, pb, instr.noisy);
                    }
                }
                InstructionKind::FoldH => {
                    let q = instr.targets[0];
                    let perm = self.layout.fold_permutation().expect("fold on foldable layout");
                    for i in 0..d_count {
                        let phys = self.data(q, i);
                        self.push(PhysInstr::Gate { gate: GateKind::H, qubits: SmallVec::from_slice(&[phys]) });
                    }
                    let support: Vec<usize> = (0..d_count).map(|i| self.data(q, i) as usize).collect();
                    self.push(PhysInstr::Gate {
                        gate: GateKind::Permutation(perm),
                        qubits: SmallVec::from_vec(support.iter().map(|&x| x as u32).collect()),
                    });
                }
                InstructionKind::FoldS | InstructionKind::FoldSDagger => {
                    let q = instr.targets[0];
                    let (diagonal, pairs) = self.layout.fold_pairs().expect("fold on foldable layout");
                    let flip = instr.kind == InstructionKind::FoldSDagger;
                    for (k, &i) in diagonal.iter().enumerate() {
                        let phys = self.data(q, i);
                        // Alternate S and S† along the diagonal; any fixed
                        // choice realizes the fold up to a logical Pauli.
                        let use_s = (k % 2 == 0) ^ flip;
                        let gate = if use_s { GateKind::S } else { GateKind::SDagger };
                        self.push(PhysInstr::Gate { gate, qubits: SmallVec::from_slice(&[phys]) });
                    }
                    for &(a, b) in &pairs {
                        let (pa, pb) = (self.data(q, a), self.data(q, b));
                        self.push(PhysInstr::Gate {
                            gate: GateKind::Cz,
                            qubits: SmallVec::from_slice(&[pa, pb]),
                        });
                        self.depol2(pa, pb, instr.noisy);
                    }
                }
                InstructionKind::PauliGate(kind) => {
                    let pauli = self.logical_rep(instr.targets[0], *kind);
                    self.push(PhysInstr::PauliApply { pauli });
                }
                InstructionKind::FeedForward(kind) => {
                    let pauli = self.logical_rep(instr.targets[0], *kind);
                    let ordinal = instr.condition.expect("validated feed-forward");
                    let conditions = self.logical_measurements[ordinal].bits.clone();
                    self.push(PhysInstr::CondPauli { pauli, conditions });
                }
                InstructionKind::SERound => {
                    let patches: Vec<usize> = if instr.targets.is_empty() {
                        (0..self.num_logical).filter(|&q| self.live[q]).collect()
                    } else {
                        instr.targets.clone()
                    };
                    self.emit_round_event(&patches, at, instr.noisy, false);
                }
                InstructionKind::Idle => {
                    if instr.noisy && self.noise.p() > 0.0 {
                        let p = self.noise.p();
                        let circuit_level = self.noise.is_circuit_level();
                        for &q in &instr.targets {
                            for i in 0..d_count {
                                let phys = self.data(q, i);
                                if circuit_level {
                                    self.push(PhysInstr::Noise(NoiseSite::Depol1 { q: phys, p }));
                                } else {
                                    self.push(PhysInstr::Noise(NoiseSite::PauliX { q: phys, p }));
                                    self.push(PhysInstr::Noise(NoiseSite::PauliZ { q: phys, p }));
                                }
                            }
                        }
                    }
                }
                InstructionKind::MeasureZ => {
                    self.emit_readout(instr.targets[0], PauliKind::Z, at, instr.noisy)
                }
                InstructionKind::MeasureX => {
                    self.emit_readout(instr.targets[0], PauliKind::X, at, instr.noisy)
                }
                InstructionKind::MeasureProduct(op) => {
                    let mut pauli = PauliString::identity(self.num_qubits);
                    for q in 0..op.num_qubits() {
                        let kind = op.get(q);
                        if kind != PauliKind::I {
                            pauli.mul_assign(&self.logical_rep(q, kind));
                        }
                    }
                    let ordinal = self.alloc_ordinal();
                    self.push(PhysInstr::MeasPauli { pauli, ordinal });
                    self.logical_measurements
                        .push(LogicalMeasurement { instr_index: at, bits: vec![ordinal] });
                }
            }
        }
        PhysicalCircuit {
            source: circuit.clone(),
            layout: self.layout,
            noise: self.noise,
            num_qubits: self.num_qubits,
            num_measurements: self.next_ordinal as usize,
            instructions: self.instructions,
            logical_measurements: self.logical_measurements,
            events: self.events,
            data_base: self.data_base,
        }
    }
}

/// Compiles a validated logical circuit onto `distance`-sized patches.
pub fn compile(
    circuit: &LogicalCircuit,
    kind: LayoutKind,
    distance: usize,
    noise: NoiseModel,
) -> PhysicalCircuit {
    noise.validate().expect("valid noise model");
    let layout = make_layout(kind, distance);
    Compiler::new(circuit, layout, noise).compile(circuit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{build_ghz_comparison, build_memory, InstructionKind, LogicalCircuit};
    use crate::gf2::{BitMatrix, RowBasis};
    use crate::layout::symplectic_vector;
    use crate::pauli::{conjugate_in_place, Direction, PauliString};

    /// Conjugates `p` forward through every unitary emitted for the gate
    /// instruction of a [inits..., gate, SE] test circuit.
    fn conjugate_through_compiled(pc: &PhysicalCircuit, p: &PauliString) -> PauliString {
        let stop = pc.events.iter().map(|e| e.start_pos).min().unwrap_or(pc.instructions.len());
        let mut out = p.clone();
        for instr in &pc.instructions[..stop] {
            if let PhysInstr::Gate { gate, qubits } = instr {
                let support: Vec<usize> = qubits.iter().map(|&q| q as usize).collect();
                conjugate_in_place(&mut out, gate, &support, Direction::Forward);
            }
        }
        out
    }

    /// Joint stabilizer row space of all patches.
    fn joint_stabilizer_basis(pc: &PhysicalCircuit) -> RowBasis {
        let n = pc.num_qubits;
        let mut rows = Vec::new();
        for q in 0..pc.source.num_qubits {
            for basis in [PauliKind::X, PauliKind::Z] {
                for i in 0..pc.layout.stabilizers(basis).len() {
                    rows.push(symplectic_vector(&pc.stabilizer_pauli(q, basis, i), n));
                }
            }
        }
        RowBasis::new(&BitMatrix::from_rows(&rows))
    }

    fn equal_mod_stabilizers(pc: &PhysicalCircuit, a: &PauliString, b: &PauliString) -> bool {
        let mut diff = a.clone();
        diff.mul_assign(b);
        joint_stabilizer_basis(pc).contains(&symplectic_vector(&diff, pc.num_qubits))
    }

    fn gate_test_circuit(n: usize, kind: InstructionKind, targets: Vec<usize>) -> LogicalCircuit {
        let mut c = LogicalCircuit::new(n);
        for q in 0..n {
            c.push(InstructionKind::InitZ, vec![q]);
        }
        c.push(kind, targets);
        c.push(InstructionKind::SERound, vec![]);
        for q in 0..n {
            c.push(InstructionKind::MeasureZ, vec![q]);
        }
        c
    }

    #[test]
    fn fold_h_squares_to_identity_and_acts_as_hadamard() {
        let mut c = LogicalCircuit::new(1);
        c.push(InstructionKind::InitZ, vec![0]);
        c.push(InstructionKind::FoldH, vec![0]);
        c.push(InstructionKind::SERound, vec![]);
        c.push(InstructionKind::MeasureX, vec![0]);
        let pc = compile(&c, LayoutKind::Unrotated, 3, NoiseModel::CircuitLevel { p: 0.0 });
        let lx = pc.logical_rep(0, PauliKind::X);
        let lz = pc.logical_rep(0, PauliKind::Z);
        // Single fold: X̄ ↔ Z̄ modulo stabilizers.
        let image_x = conjugate_through_compiled(&pc, &lx);
        assert!(equal_mod_stabilizers(&pc, &image_x, &lz));
        let image_z = conjugate_through_compiled(&pc, &lz);
        assert!(equal_mod_stabilizers(&pc, &image_z, &lx));
        // Applied twice: identity on the logical tableau.
        let twice_x = conjugate_through_compiled(&pc, &image_x);
        assert!(equal_mod_stabilizers(&pc, &twice_x, &lx));
    }

    #[test]
    fn fold_s_acts_as_phase_gate() {
        let c = gate_test_circuit(1, InstructionKind::FoldS, vec![0]);
        let pc = compile(&c, LayoutKind::Unrotated, 3, NoiseModel::CircuitLevel { p: 0.0 });
        let lx = pc.logical_rep(0, PauliKind::X);
        let lz = pc.logical_rep(0, PauliKind::Z);
        let ly = pc.logical_rep(0, PauliKind::Y);
        let image_x = conjugate_through_compiled(&pc, &lx);
        assert!(equal_mod_stabilizers(&pc, &image_x, &ly), "X̄ → Ȳ up to phase");
        let image_z = conjugate_through_compiled(&pc, &lz);
        assert!(equal_mod_stabilizers(&pc, &image_z, &lz), "Z̄ fixed");
    }

    #[test]
    fn transversal_cnot_acts_as_cnot() {
        let c = gate_test_circuit(2, InstructionKind::TransversalCnot, vec![0, 1]);
        for kind in [LayoutKind::Rotated, LayoutKind::Unrotated] {
            let pc = compile(&c, kind, 3, NoiseModel::CircuitLevel { p: 0.0 });
            let (x0, x1) = (pc.logical_rep(0, PauliKind::X), pc.logical_rep(1, PauliKind::X));
            let (z0, z1) = (pc.logical_rep(0, PauliKind::Z), pc.logical_rep(1, PauliKind::Z));
            let mut x0x1 = x0.clone();
            x0x1.mul_assign(&x1);
            let mut z0z1 = z0.clone();
            z0z1.mul_assign(&z1);
            assert!(equal_mod_stabilizers(&pc, &conjugate_through_compiled(&pc, &x0), &x0x1));
            assert!(equal_mod_stabilizers(&pc, &conjugate_through_compiled(&pc, &z1), &z0z1));
            assert!(equal_mod_stabilizers(&pc, &conjugate_through_compiled(&pc, &x1), &x1));
            assert!(equal_mod_stabilizers(&pc, &conjugate_through_compiled(&pc, &z0), &z0));
        }
    }

    /// Code preservation: every stabilizer generator conjugated through a
    /// compiled transversal gate lands back in the joint stabilizer span.
    #[test]
    fn compiled_gates_preserve_the_code() {
        let cases = vec![
            (gate_test_circuit(2, InstructionKind::TransversalCnot, vec![0, 1]), 2),
            (gate_test_circuit(1, InstructionKind::FoldS, vec![0]), 1),
            (gate_test_circuit(1, InstructionKind::FoldSDagger, vec![0]), 1),
            ({
                let mut c = LogicalCircuit::new(1);
                c.push(InstructionKind::InitZ, vec![0]);
                c.push(InstructionKind::FoldH, vec![0]);
                c.push(InstructionKind::SERound, vec![]);
                c.push(InstructionKind::MeasureX, vec![0]);
                c
            }, 1),
        ];
        for (c, n) in cases {
            for d in [3, 5] {
                let pc = compile(&c, LayoutKind::Unrotated, d, NoiseModel::CircuitLevel { p: 0.0 });
                let basis = joint_stabilizer_basis(&pc);
                for q in 0..n {
                    for kind in [PauliKind::X, PauliKind::Z] {
                        for i in 0..pc.layout.stabilizers(kind).len() {
                            let s = pc.stabilizer_pauli(q, kind, i);
                            let image = conjugate_through_compiled(&pc, &s);
                            assert!(
                                basis.contains(&symplectic_vector(&image, pc.num_qubits)),
                                "stabilizer image leaves the group (d={d}, q={q}, {kind:?}, {i})"
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn ghz_compiles_with_tags() {
        let c = build_ghz_comparison();
        let pc = compile(&c, LayoutKind::Rotated, 3, NoiseModel::CircuitLevel { p: 1e-3 });
        assert_eq!(pc.logical_measurements.len(), 3);
        // Two SE rounds plus three final readouts.
        assert_eq!(pc.events.len(), 5);
        assert_eq!(pc.events.iter().filter(|e| e.final_readout).count(), 3);
        // 3 patches × (9 data + 8 ancillas).
        assert_eq!(pc.num_qubits, 3 * 17);
    }

    #[test]
    fn memory_round_structure() {
        let c = build_memory(3);
        let pc = compile(&c, LayoutKind::Rotated, 3, NoiseModel::CircuitLevel { p: 1e-3 });
        assert_eq!(pc.events.len(), 4);
        let se_rounds: Vec<_> = pc.events.iter().filter(|e| !e.final_readout).collect();
        assert_eq!(se_rounds.len(), 3);
        for e in se_rounds {
            assert_eq!(e.per_patch.len(), 1);
            assert_eq!(e.per_patch[0].x_entries.len(), 4);
            assert_eq!(e.per_patch[0].z_entries.len(), 4);
        }
    }

    #[test]
    fn phenomenological_uses_direct_measurements() {
        let c = build_memory(2);
        let pc = compile(&c, LayoutKind::Rotated, 3, NoiseModel::Phenomenological { p: 1e-3 });
        let has_pauli_meas = pc
            .instructions
            .iter()
            .any(|i| matches!(i, PhysInstr::MeasPauli { .. }));
        assert!(has_pauli_meas);
        let flips = pc
            .instructions
            .iter()
            .filter(|i| matches!(i, PhysInstr::Noise(NoiseSite::MeasFlip { .. })))
            .count();
        // 8 stabilizers per noisy round, 2 rounds.
        assert_eq!(flips, 16);
    }

    #[test]
    fn noiseless_compilation_has_only_randomizers() {
        let c = build_ghz_comparison();
        let pc = compile(&c, LayoutKind::Rotated, 3, NoiseModel::CircuitLevel { p: 0.0 });
        for instr in &pc.instructions {
            if let PhysInstr::Noise(site) = instr {
                assert!(site.is_randomizer(), "unexpected noise site {site:?}");
            }
        }
    }
}
