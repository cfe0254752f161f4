//! Logical-level circuit IR, validation, benchmark-circuit builders, and
//! back-propagation of logical Pauli products through the executed circuit.
//!
//! Feed-forward is resolved at simulation time: conditional Pauli gates are
//! first-class instructions (they are transparent to Pauli conjugation),
//! while conditional Clifford gates are expressed as separate branch-resolved
//! circuits (see [`build_small_angle_example`]).

pub use crate::pauli::GateKind;
use crate::pauli::{conjugate_through_gate, Direction, PauliKind, PauliString};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

/// Instruction kinds of the logical IR.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum InstructionKind {
    InitZ,
    InitX,
    /// Magic-state input: |S̄⟩ (+1 eigenstate of Ȳ) prepared with reliable
    /// stabilizers plus an injected single-qubit error channel.
    InitMagic,
    /// targets = [control, target]
    TransversalCnot,
    FoldH,
    FoldS,
    FoldSDagger,
    PauliGate(PauliKind),
    /// One syndrome-extraction round on the targeted (default: all live) qubits.
    SERound,
    /// Idling depolarizing layer (memory baseline only).
    Idle,
    MeasureZ,
    MeasureX,
    /// Noiseless multi-qubit logical Pauli product measurement.
    MeasureProduct(PauliString),
    /// Conditional logical Pauli applied when the referenced measurement is 1.
    FeedForward(PauliKind),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogicalInstruction {
    pub kind: InstructionKind,
    pub targets: Vec<usize>,
    /// Measurement ordinal whose outcome conditions a FeedForward.
    pub condition: Option<usize>,
    pub time_index: usize,
    /// When false the instruction (and any noise it would carry) is ideal.
    pub noisy: bool,
}

impl LogicalInstruction {
    pub fn is_measurement(&self) -> bool {
        matches!(
            self.kind,
            InstructionKind::MeasureZ | InstructionKind::MeasureX | InstructionKind::MeasureProduct(_)
        )
    }

    pub fn is_transversal_gate(&self) -> bool {
        matches!(
            self.kind,
            InstructionKind::TransversalCnot
                | InstructionKind::FoldH
                | InstructionKind::FoldS
                | InstructionKind::FoldSDagger
        )
    }

    /// Logical-level Clifford action, if any. Pauli and feed-forward gates
    /// act trivially under conjugation and return None.
    pub fn clifford_action(&self) -> Option<(GateKind, &[usize])> {
        match &self.kind {
            InstructionKind::TransversalCnot => Some((GateKind::Cnot, &self.targets)),
            InstructionKind::FoldH => Some((GateKind::H, &self.targets)),
            InstructionKind::FoldS => Some((GateKind::S, &self.targets)),
            InstructionKind::FoldSDagger => Some((GateKind::SDagger, &self.targets)),
            _ => None,
        }
    }
}

/// Time-ordered logical circuit over `num_qubits` logical qubits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogicalCircuit {
    pub num_qubits: usize,
    pub instructions: Vec<LogicalInstruction>,
}

/// Structured validation failures.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ValidationError {
    #[error("instruction {at}: qubit {qubit} used before initialization")]
    UseBeforeInit { at: usize, qubit: usize },
    #[error("instruction {at}: qubit {qubit} initialized twice")]
    DoubleInit { at: usize, qubit: usize },
    #[error("instruction {at}: qubit {qubit} measured twice or used after measurement")]
    MeasureTwice { at: usize, qubit: usize },
    #[error("instruction {at}: feed-forward references measurement {ordinal} which is not earlier")]
    DanglingFeedForward { at: usize, ordinal: usize },
    #[error("instruction {at}: time index {time} not strictly increasing")]
    NonMonotoneTime { at: usize, time: usize },
    #[error("instruction {at}: qubit {qubit} sees consecutive transversal gates with fewer than {required} SE rounds between")]
    MissingSeparation { at: usize, qubit: usize, required: usize },
    #[error("instruction {at}: malformed targets")]
    BadTargets { at: usize },
}

/// Validation knobs. `min_se_between_gates = 0` permits multiple transversal
/// gates per SE round (the reduced-SE regime).
#[derive(Copy, Clone, Debug)]
pub struct ValidateConfig {
    pub min_se_between_gates: usize,
}

impl Default for ValidateConfig {
    fn default() -> Self {
        Self { min_se_between_gates: 1 }
    }
}

/// Instantaneous logical operator along a backward propagation.
///
/// Entries run from t = 0 up to the measurement time; `entries[k]` holds the
/// operator just before the instruction with the recorded time index.
#[derive(Clone, Debug)]
pub struct PropagationPath {
    pub entries: Vec<(usize, PauliString)>,
}

impl PropagationPath {
    /// Operator at the start of the circuit (supported only on inits).
    pub fn initial_operator(&self) -> &PauliString {
        &self.entries.first().expect("non-empty path").1
    }

    /// Operator just before the final (measurement) time.
    pub fn final_operator(&self) -> &PauliString {
        &self.entries.last().expect("non-empty path").1
    }

    /// Operator just before instruction `t`, if within the path.
    pub fn operator_at(&self, t: usize) -> Option<&PauliString> {
        self.entries
            .binary_search_by_key(&t, |(time, _)| *time)
            .ok()
            .map(|i| &self.entries[i].1)
    }
}

impl LogicalCircuit {
    pub fn new(num_qubits: usize) -> Self {
        Self { num_qubits, instructions: Vec::new() }
    }

    pub fn push(&mut self, kind: InstructionKind, targets: Vec<usize>) -> &mut Self {
        self.push_full(kind, targets, None, true)
    }

    pub fn push_noiseless(&mut self, kind: InstructionKind, targets: Vec<usize>) -> &mut Self {
        self.push_full(kind, targets, None, false)
    }

    pub fn push_full(
        &mut self,
        kind: InstructionKind,
        targets: Vec<usize>,
        condition: Option<usize>,
        noisy: bool,
    ) -> &mut Self {
        let time_index = self.instructions.len();
        self.instructions.push(LogicalInstruction { kind, targets, condition, time_index, noisy });
        self
    }

    /// Instruction indices of logical measurements, in measurement order.
    pub fn measurement_instructions(&self) -> Vec<usize> {
        self.instructions
            .iter()
            .enumerate()
            .filter(|(_, i)| i.is_measurement())
            .map(|(idx, _)| idx)
            .collect()
    }

    pub fn num_measurements(&self) -> usize {
        self.instructions.iter().filter(|i| i.is_measurement()).count()
    }

    /// Logical operator measured by measurement ordinal `m`.
    pub fn measurement_operator(&self, m: usize) -> PauliString {
        let at = self.measurement_instructions()[m];
        let instr = &self.instructions[at];
        match &instr.kind {
            InstructionKind::MeasureZ => {
                PauliString::single(self.num_qubits, instr.targets[0], PauliKind::Z)
            }
            InstructionKind::MeasureX => {
                PauliString::single(self.num_qubits, instr.targets[0], PauliKind::X)
            }
            InstructionKind::MeasureProduct(p) => p.clone(),
            _ => unreachable!("not a measurement"),
        }
    }

    pub fn validate(&self, config: ValidateConfig) -> Result<(), Vec<ValidationError>> {
        let mut errors = Vec::new();
        let mut initialized = vec![false; self.num_qubits];
        let mut dead = vec![false; self.num_qubits];
        // SE rounds seen since the last transversal gate touching each qubit;
        // MAX means "no gate yet".
        let mut se_since_gate = vec![usize::MAX; self.num_qubits];
        let mut measurements_so_far = 0usize;
        let mut last_time = None;

        for (at, instr) in self.instructions.iter().enumerate() {
            if let Some(prev) = last_time {
                if instr.time_index <= prev {
                    errors.push(ValidationError::NonMonotoneTime { at, time: instr.time_index });
                }
            }
            last_time = Some(instr.time_index);

            let is_init = matches!(
                instr.kind,
                InstructionKind::InitZ | InstructionKind::InitX | InstructionKind::InitMagic
            );
            match &instr.kind {
                InstructionKind::TransversalCnot => {
                    if instr.targets.len() != 2 || instr.targets[0] == instr.targets[1] {
                        errors.push(ValidationError::BadTargets { at });
                    }
                }
                InstructionKind::FoldH
                | InstructionKind::FoldS
                | InstructionKind::FoldSDagger
                | InstructionKind::MeasureZ
                | InstructionKind::MeasureX => {
                    if instr.targets.len() != 1 {
                        errors.push(ValidationError::BadTargets { at });
                    }
                }
                _ => {}
            }

            for &q in &instr.targets {
                if q >= self.num_qubits {
                    errors.push(ValidationError::BadTargets { at });
                    continue;
                }
                if is_init {
                    if initialized[q] {
                        errors.push(ValidationError::DoubleInit { at, qubit: q });
                    }
                    initialized[q] = true;
                } else {
                    if !initialized[q] {
                        errors.push(ValidationError::UseBeforeInit { at, qubit: q });
                    }
                    if dead[q] {
                        errors.push(ValidationError::MeasureTwice { at, qubit: q });
                    }
                }
            }
            if let InstructionKind::MeasureProduct(p) = &instr.kind {
                for q in p.support() {
                    if !initialized[q] {
                        errors.push(ValidationError::UseBeforeInit { at, qubit: q });
                    }
                    if dead[q] {
                        errors.push(ValidationError::MeasureTwice { at, qubit: q });
                    }
                }
            }

            match &instr.kind {
                InstructionKind::SERound => {
                    let all_live = instr.targets.is_empty();
                    for q in 0..self.num_qubits {
                        let covered = all_live || instr.targets.contains(&q);
                        if covered && se_since_gate[q] != usize::MAX {
                            se_since_gate[q] += 1;
                        }
                    }
                }
                InstructionKind::MeasureZ | InstructionKind::MeasureX => {
                    dead[instr.targets[0]] = true;
                }
                InstructionKind::FeedForward(_) => match instr.condition {
                    Some(ordinal) if ordinal < measurements_so_far => {}
                    Some(ordinal) => {
                        errors.push(ValidationError::DanglingFeedForward { at, ordinal })
                    }
                    None => {
                        errors.push(ValidationError::DanglingFeedForward { at, ordinal: usize::MAX })
                    }
                },
                _ => {}
            }

            if instr.is_transversal_gate() {
                for &q in &instr.targets {
                    if q >= self.num_qubits {
                        continue;
                    }
                    if se_since_gate[q] != usize::MAX
                        && se_since_gate[q] < config.min_se_between_gates
                    {
                        errors.push(ValidationError::MissingSeparation {
                            at,
                            qubit: q,
                            required: config.min_se_between_gates,
                        });
                    }
                    se_since_gate[q] = 0;
                }
            }
            if instr.is_measurement() {
                measurements_so_far += 1;
            }
        }

        if errors.is_empty() {
            Ok(())
        } else {
            Err(errors)
        }
    }

    /// Back-propagates the product of the given measurement ordinals from the
    /// latest member down to t = 0, multiplying each member's operator in as
    /// its measurement time is crossed.
    pub fn back_propagate_product(&self, members: &[usize]) -> PropagationPath {
        assert!(!members.is_empty(), "empty product");
        let meas_instrs = self.measurement_instructions();
        let member_at: Vec<usize> = members.iter().map(|&m| meas_instrs[m]).collect();
        let from = *member_at.iter().max().unwrap();
        let mut op = PauliString::identity(self.num_qubits);
        let mut entries = Vec::with_capacity(from + 1);
        // entries[k] holds the operator just before its instruction executes;
        // a member's operator joins the product as its measurement is crossed.
        for t in (0..=from).rev() {
            let instr = &self.instructions[t];
            if instr.is_measurement() {
                if let Some(pos) = member_at.iter().position(|&a| a == t) {
                    op.mul_assign(&self.measurement_operator(members[pos]));
                } else if matches!(instr.kind, InstructionKind::MeasureZ | InstructionKind::MeasureX)
                {
                    // Crossing a non-member terminal measurement: the operator
                    // cannot touch the dying qubit (gates never act on dead
                    // qubits), so the crossing is trivial.
                    let q = instr.targets[0];
                    debug_assert!(
                        !op.x_bits().get(q) && !op.z_bits().get(q),
                        "operator crosses non-member measurement on qubit {q}"
                    );
                }
            }
            if let Some((gate, support)) = instr.clifford_action() {
                op = conjugate_through_gate(&op, &gate, support, Direction::Backward);
            }
            entries.push((t, op.clone()));
        }
        entries.reverse();
        PropagationPath { entries }
    }

    /// Back-propagates an explicit operator from `from_time` to t = 0.
    ///
    /// Panics if the operator is supported on a qubit already measured before
    /// `from_time` (contract violation).
    pub fn back_propagate(&self, product: &PauliString, from_time: usize) -> PropagationPath {
        assert_eq!(product.num_qubits(), self.num_qubits);
        for (at, instr) in self.instructions.iter().enumerate().take(from_time) {
            if matches!(instr.kind, InstructionKind::MeasureZ | InstructionKind::MeasureX) {
                let q = instr.targets[0];
                assert!(
                    !product.x_bits().get(q) && !product.z_bits().get(q),
                    "operator supported on qubit {q} dead since instruction {at}"
                );
            }
        }
        let mut op = product.clone();
        let mut entries = vec![(from_time, op.clone())];
        for t in (0..from_time).rev() {
            if let Some((gate, support)) = self.instructions[t].clifford_action() {
                op = conjugate_through_gate(&op, &gate, support, Direction::Backward);
            }
            entries.push((t, op.clone()));
        }
        entries.reverse();
        PropagationPath { entries }
    }

    /// Forward-propagates an operator from t = 0 through the whole circuit.
    pub fn forward_propagate(&self, op: &PauliString) -> PauliString {
        let mut cur = op.clone();
        for instr in &self.instructions {
            if let Some((gate, support)) = instr.clifford_action() {
                cur = conjugate_through_gate(&cur, &gate, support, Direction::Forward);
            }
        }
        cur
    }
}

// ---------------------------------------------------------------------------
// Benchmark circuit builders
// ---------------------------------------------------------------------------

/// Three-qubit GHZ preparation measuring Z̄ on every qubit.
///
/// |+̄⟩⊗|0̄⟩⊗|0̄⟩, CNOT(0→1), SE, CNOT(1→2), SE, then transversal Z̄
/// measurements. The product Z̄₁Z̄₂ is deterministically +1.
pub fn build_ghz_comparison() -> LogicalCircuit {
    let mut c = LogicalCircuit::new(3);
    c.push(InstructionKind::InitX, vec![0]);
    c.push(InstructionKind::InitZ, vec![1]);
    c.push(InstructionKind::InitZ, vec![2]);
    c.push(InstructionKind::TransversalCnot, vec![0, 1]);
    c.push(InstructionKind::SERound, vec![]);
    c.push(InstructionKind::TransversalCnot, vec![1, 2]);
    c.push(InstructionKind::SERound, vec![]);
    c.push(InstructionKind::MeasureZ, vec![0]);
    c.push(InstructionKind::MeasureZ, vec![1]);
    c.push(InstructionKind::MeasureZ, vec![2]);
    c
}

/// Single-qubit memory: |0̄⟩, `rounds` SE rounds with idling noise between
/// them, then a transversal Z̄ measurement.
pub fn build_memory(rounds: usize) -> LogicalCircuit {
    assert!(rounds >= 1, "memory needs at least one SE round");
    let mut c = LogicalCircuit::new(1);
    c.push(InstructionKind::InitZ, vec![0]);
    for r in 0..rounds {
        if r > 0 {
            c.push(InstructionKind::Idle, vec![0]);
        }
        c.push(InstructionKind::SERound, vec![]);
    }
    c.push(InstructionKind::MeasureZ, vec![0]);
    c
}

/// Random transversal Clifford benchmark circuit.
///
/// Odd layers pair all qubits into transversal CNOTs with random orientation;
/// even layers apply fold-H to a random half of the qubits and fold-S to the
/// rest. One SE round follows each layer. Initializations are a random half
/// |0̄⟩ / half |+̄⟩. The circuit ends with a noiseless SE round and noiseless
/// measurements of the n reliable products (the forward-propagated images of
/// the initialization stabilizers).
pub fn build_random_clifford(seed: u64, n_qubits: usize, depth: usize) -> LogicalCircuit {
    assert!(n_qubits % 2 == 0, "qubit count must be even");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c = LogicalCircuit::new(n_qubits);

    let mut qubits: Vec<usize> = (0..n_qubits).collect();
    qubits.shuffle(&mut rng);
    let mut init_basis = vec![PauliKind::Z; n_qubits];
    for (i, &q) in qubits.iter().enumerate() {
        if i < n_qubits / 2 {
            c.push(InstructionKind::InitZ, vec![q]);
        } else {
            c.push(InstructionKind::InitX, vec![q]);
            init_basis[q] = PauliKind::X;
        }
    }

    for layer in 1..=depth {
        if layer % 2 == 1 {
            let mut order: Vec<usize> = (0..n_qubits).collect();
            order.shuffle(&mut rng);
            for pair in order.chunks(2) {
                let (a, b) = (pair[0], pair[1]);
                let (ctrl, tgt) = if rng.gen() { (a, b) } else { (b, a) };
                c.push(InstructionKind::TransversalCnot, vec![ctrl, tgt]);
            }
        } else {
            let mut order: Vec<usize> = (0..n_qubits).collect();
            order.shuffle(&mut rng);
            for (i, &q) in order.iter().enumerate() {
                if i < n_qubits / 2 {
                    c.push(InstructionKind::FoldH, vec![q]);
                } else {
                    c.push(InstructionKind::FoldS, vec![q]);
                }
            }
        }
        c.push(InstructionKind::SERound, vec![]);
    }

    c.push_noiseless(InstructionKind::SERound, vec![]);
    for q in 0..n_qubits {
        let init = PauliString::single(n_qubits, q, init_basis[q]);
        let product = c.forward_propagate(&init);
        c.push_noiseless(InstructionKind::MeasureProduct(product), vec![]);
    }
    c
}

/// Worked teleportation example with one branch per feed-forward outcome.
///
/// Qubit 0 starts in |+̄⟩; qubits 1 and 2 are magic inputs. A gate
/// teleportation consumes qubit 1 (measurement 0, independently 50/50
/// random); the branch taken determines whether a fold-S feed-forward is
/// applied; a fold-H and a second teleportation via qubit 2 follow
/// (measurement 1). Returns `(branch_minus, branch_plus)` where
/// `branch_minus` executed the feed-forward.
pub fn build_small_angle_example() -> (LogicalCircuit, LogicalCircuit) {
    let build = |with_feed_forward: bool| {
        let mut c = LogicalCircuit::new(3);
        c.push(InstructionKind::InitX, vec![0]);
        c.push(InstructionKind::InitMagic, vec![1]);
        c.push(InstructionKind::InitMagic, vec![2]);
        c.push(InstructionKind::SERound, vec![]);
        c.push(InstructionKind::TransversalCnot, vec![0, 1]);
        c.push(InstructionKind::SERound, vec![]);
        c.push(InstructionKind::MeasureZ, vec![1]);
        if with_feed_forward {
            c.push(InstructionKind::FoldS, vec![0]);
            c.push(InstructionKind::SERound, vec![]);
        }
        c.push(InstructionKind::FoldH, vec![0]);
        c.push(InstructionKind::SERound, vec![]);
        c.push(InstructionKind::TransversalCnot, vec![0, 2]);
        c.push(InstructionKind::SERound, vec![]);
        c.push(InstructionKind::MeasureZ, vec![2]);
        c
    };
    (build(true), build(false))
}

/// The fifteen Z-type parity supports of the 15-to-1 factory, as bitmask
/// subsets of the four check qubits; every rotation also touches the output
/// qubit 0. Ordered so that early gadgets already contain complete parity
/// dependencies (decodable products).
const DISTILL_ROTATIONS: [u8; 15] = [
    0b0001, 0b0010, 0b0100, 0b0111, 0b1000, 0b0011, 0b0101, 0b0110, // group A
    0b1001, 0b1010, 0b1100, 0b1011, 0b1101, 0b1110, 0b1111, // group B
];

/// Boundary between the two gadget groups of the factory.
pub const DISTILL_STAGE_SPLIT: usize = 8;

/// 15-to-1 magic state distillation with |S̄⟩ inputs.
///
/// Workspace: output qubit 0 and check qubits 1..=4, all |+̄⟩; inputs are 15
/// magic states consumed by Z-rotation gadgets (transversal CNOTs into the
/// magic qubit, a Z̄ measurement and a conditional Z̄-product feed-forward).
/// Gadgets run in two groups with measurements and feed-forward after each;
/// the check qubits are then read out in X̄ and a noiseless S̄-gate
/// teleportation probes the output qubit in the X̄ basis.
pub fn build_distillation() -> LogicalCircuit {
    let n = 21; // 5 workspace + 15 inputs + 1 probe ancilla
    let mut c = LogicalCircuit::new(n);
    for q in 0..5 {
        c.push(InstructionKind::InitX, vec![q]);
    }
    for q in 5..20 {
        c.push(InstructionKind::InitMagic, vec![q]);
    }
    // Two noisy equilibration rounds after preparation.
    c.push(InstructionKind::SERound, vec![]);
    c.push(InstructionKind::SERound, vec![]);

    let gadget_cnots: Vec<Vec<(usize, usize)>> = DISTILL_ROTATIONS
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let magic = 5 + i;
            let mut cnots = vec![(0usize, magic)];
            for b in 0..4 {
                if v >> b & 1 == 1 {
                    cnots.push((1 + b, magic));
                }
            }
            cnots
        })
        .collect();

    let mut emit_group = |c: &mut LogicalCircuit, gadgets: std::ops::Range<usize>| {
        // Greedily pack the group's CNOTs into disjoint layers, one SE round
        // per layer.
        let mut pending: Vec<(usize, usize)> =
            gadgets.clone().flat_map(|g| gadget_cnots[g].iter().copied()).collect();
        while !pending.is_empty() {
            let mut used = vec![false; n];
            let mut rest = Vec::new();
            let mut any = false;
            for (ctrl, tgt) in pending {
                if !used[ctrl] && !used[tgt] {
                    used[ctrl] = true;
                    used[tgt] = true;
                    c.push(InstructionKind::TransversalCnot, vec![ctrl, tgt]);
                    any = true;
                } else {
                    rest.push((ctrl, tgt));
                }
            }
            assert!(any, "scheduler made no progress");
            c.push(InstructionKind::SERound, vec![]);
            pending = rest;
        }
        let mut ordinals = Vec::new();
        for g in gadgets.clone() {
            let ordinal = c.num_measurements();
            c.push(InstructionKind::MeasureZ, vec![5 + g]);
            ordinals.push(ordinal);
        }
        for (g, ordinal) in gadgets.zip(ordinals) {
            for (q, _) in gadget_cnots[g].iter() {
                c.push_full(
                    InstructionKind::FeedForward(PauliKind::Z),
                    vec![*q],
                    Some(ordinal),
                    true,
                );
            }
        }
    };

    emit_group(&mut c, 0..DISTILL_STAGE_SPLIT);
    emit_group(&mut c, DISTILL_STAGE_SPLIT..15);

    for q in 1..5 {
        c.push(InstructionKind::MeasureX, vec![q]);
    }

    // Noiseless S̄-gate teleportation probe: fresh magic ancilla, CNOT from
    // the output qubit, Z̄ measurement, conditional Z̄ fix-up, X̄ readout.
    c.push_noiseless(InstructionKind::InitMagic, vec![20]);
    c.push_noiseless(InstructionKind::TransversalCnot, vec![0, 20]);
    let probe_cond = c.num_measurements();
    c.push_noiseless(InstructionKind::MeasureZ, vec![20]);
    c.push_full(InstructionKind::FeedForward(PauliKind::Z), vec![0], Some(probe_cond), false);
    c.push_noiseless(InstructionKind::MeasureX, vec![0]);
    c
}

/// Measurement ordinal of the distillation probe (the final X̄ readout).
pub fn distillation_probe_ordinal(c: &LogicalCircuit) -> usize {
    c.num_measurements() - 1
}

// ---------------------------------------------------------------------------
// Line-oriented text format
// ---------------------------------------------------------------------------

/// Serializes to the line format `KIND[!] target-list [@cond=ordinal]`.
pub fn write_circuit(c: &LogicalCircuit) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# logical circuit, {} qubits", c.num_qubits);
    let _ = writeln!(out, "QUBITS {}", c.num_qubits);
    for instr in &c.instructions {
        let (name, extra) = match &instr.kind {
            InstructionKind::InitZ => ("INIT_Z", None),
            InstructionKind::InitX => ("INIT_X", None),
            InstructionKind::InitMagic => ("INIT_MAGIC", None),
            InstructionKind::TransversalCnot => ("CNOT", None),
            InstructionKind::FoldH => ("FOLD_H", None),
            InstructionKind::FoldS => ("FOLD_S", None),
            InstructionKind::FoldSDagger => ("FOLD_SDG", None),
            InstructionKind::PauliGate(PauliKind::X) => ("PAULI_X", None),
            InstructionKind::PauliGate(_) => ("PAULI_Z", None),
            InstructionKind::SERound => ("SE", None),
            InstructionKind::Idle => ("IDLE", None),
            InstructionKind::MeasureZ => ("MEASURE_Z", None),
            InstructionKind::MeasureX => ("MEASURE_X", None),
            InstructionKind::MeasureProduct(p) => ("MEASURE_PROD", Some(format!("{p:?}"))),
            InstructionKind::FeedForward(PauliKind::X) => ("FF_X", None),
            InstructionKind::FeedForward(_) => ("FF_Z", None),
        };
        let _ = write!(out, "{name}{}", if instr.noisy { "" } else { "!" });
        if let Some(extra) = extra {
            let _ = write!(out, " {extra}");
        }
        for &t in &instr.targets {
            let _ = write!(out, " {t}");
        }
        if let Some(cond) = instr.condition {
            let _ = write!(out, " @cond={cond}");
        }
        let _ = writeln!(out);
    }
    out
}

/// Parses the format produced by [`write_circuit`].
pub fn read_circuit(text: &str) -> Result<LogicalCircuit, String> {
    let mut num_qubits = None;
    let mut c = LogicalCircuit::new(0);
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut parts: Vec<&str> = line.split_whitespace().collect();
        let head = parts.remove(0);
        if head == "QUBITS" {
            let n: usize = parts
                .first()
                .ok_or_else(|| format!("line {}: QUBITS needs a count", lineno + 1))?
                .parse()
                .map_err(|e| format!("line {}: {e}", lineno + 1))?;
            num_qubits = Some(n);
            c = LogicalCircuit::new(n);
            continue;
        }
        let n = num_qubits.ok_or_else(|| format!("line {}: QUBITS must come first", lineno + 1))?;
        let (name, noisy) = match head.strip_suffix('!') {
            Some(stripped) => (stripped, false),
            None => (head, true),
        };
        let mut condition = None;
        if let Some(last) = parts.last() {
            if let Some(v) = last.strip_prefix("@cond=") {
                condition =
                    Some(v.parse::<usize>().map_err(|e| format!("line {}: {e}", lineno + 1))?);
                parts.pop();
            }
        }
        let kind = match name {
            "INIT_Z" => InstructionKind::InitZ,
            "INIT_X" => InstructionKind::InitX,
            "INIT_MAGIC" => InstructionKind::InitMagic,
            "CNOT" => InstructionKind::TransversalCnot,
            "FOLD_H" => InstructionKind::FoldH,
            "FOLD_S" => InstructionKind::FoldS,
            "FOLD_SDG" => InstructionKind::FoldSDagger,
            "PAULI_X" => InstructionKind::PauliGate(PauliKind::X),
            "PAULI_Z" => InstructionKind::PauliGate(PauliKind::Z),
            "SE" => InstructionKind::SERound,
            "IDLE" => InstructionKind::Idle,
            "MEASURE_Z" => InstructionKind::MeasureZ,
            "MEASURE_X" => InstructionKind::MeasureX,
            "MEASURE_PROD" => {
                let pauli_tokens: Vec<&str> = parts
                    .iter()
                    .copied()
                    .filter(|t| !t.chars().all(|c| c.is_ascii_digit()))
                    .collect();
                let p = PauliString::parse(n, &pauli_tokens.join(" "))
                    .map_err(|e| format!("line {}: {e}", lineno + 1))?;
                parts.retain(|t| t.chars().all(|c| c.is_ascii_digit()));
                InstructionKind::MeasureProduct(p)
            }
            "FF_X" => InstructionKind::FeedForward(PauliKind::X),
            "FF_Z" => InstructionKind::FeedForward(PauliKind::Z),
            other => return Err(format!("line {}: unknown instruction `{other}`", lineno + 1)),
        };
        let targets: Vec<usize> = parts
            .iter()
            .map(|t| t.parse::<usize>().map_err(|e| format!("line {}: {e}", lineno + 1)))
            .collect::<Result<_, _>>()?;
        c.push_full(kind, targets, condition, noisy);
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zbar(n: usize, q: usize) -> PauliString {
        PauliString::single(n, q, PauliKind::Z)
    }

    #[test]
    fn ghz_builder_shape() {
        let c = build_ghz_comparison();
        assert_eq!(c.num_qubits, 3);
        let cnots =
            c.instructions.iter().filter(|i| i.kind == InstructionKind::TransversalCnot).count();
        assert_eq!(cnots, 2);
        assert!(c.validate(ValidateConfig::default()).is_ok());
        assert_eq!(c.num_measurements(), 3);
    }

    #[test]
    fn ghz_product_terminates_on_z_inits() {
        let c = build_ghz_comparison();
        // With the chain preparation the product contracts onto the last
        // qubit's Z̄ initialization; mid-circuit it spans both code blocks.
        let path = c.back_propagate_product(&[1, 2]);
        assert_eq!(path.initial_operator(), &zbar(3, 2));
        assert_eq!(path.operator_at(7).unwrap(), &PauliString::parse(3, "Z1 Z2").unwrap());
    }

    #[test]
    fn ghz_single_z_hits_plus_init() {
        let c = build_ghz_comparison();
        let path = c.back_propagate_product(&[0]);
        assert_eq!(path.initial_operator(), &zbar(3, 0));
    }

    #[test]
    fn single_qubit_memory_path_is_constant() {
        let c = build_memory(3);
        let path = c.back_propagate_product(&[0]);
        for (_, op) in &path.entries {
            assert_eq!(op, &zbar(1, 0));
        }
    }

    #[test]
    fn cnot_then_measure_spreads_support() {
        let mut c = LogicalCircuit::new(2);
        c.push(InstructionKind::InitZ, vec![0]);
        c.push(InstructionKind::InitZ, vec![1]);
        c.push(InstructionKind::TransversalCnot, vec![0, 1]);
        c.push(InstructionKind::SERound, vec![]);
        c.push(InstructionKind::MeasureZ, vec![1]);
        let path = c.back_propagate_product(&[0]);
        assert_eq!(path.initial_operator(), &PauliString::parse(2, "Z0 Z1").unwrap());
    }

    #[test]
    fn forward_of_initial_reproduces_measured_product() {
        let c = build_random_clifford(11, 6, 4);
        for ordinal in 0..c.num_measurements() {
            let path = c.back_propagate_product(&[ordinal]);
            let forward = c.forward_propagate(path.initial_operator());
            assert_eq!(&forward, path.final_operator());
        }
    }

    #[test]
    fn validate_rejects_double_measurement() {
        let mut c = LogicalCircuit::new(1);
        c.push(InstructionKind::InitZ, vec![0]);
        c.push(InstructionKind::SERound, vec![]);
        c.push(InstructionKind::MeasureZ, vec![0]);
        c.push(InstructionKind::MeasureZ, vec![0]);
        let errs = c.validate(ValidateConfig::default()).unwrap_err();
        assert!(errs.iter().any(|e| matches!(e, ValidationError::MeasureTwice { .. })));
    }

    #[test]
    fn validate_rejects_forward_feed_forward_reference() {
        let mut c = LogicalCircuit::new(2);
        c.push(InstructionKind::InitZ, vec![0]);
        c.push(InstructionKind::InitZ, vec![1]);
        c.push_full(InstructionKind::FeedForward(PauliKind::Z), vec![0], Some(0), true);
        c.push(InstructionKind::SERound, vec![]);
        c.push(InstructionKind::MeasureZ, vec![1]);
        let errs = c.validate(ValidateConfig::default()).unwrap_err();
        assert!(errs.iter().any(|e| matches!(e, ValidationError::DanglingFeedForward { .. })));
    }

    #[test]
    fn validate_rejects_use_before_init() {
        let mut c = LogicalCircuit::new(2);
        c.push(InstructionKind::InitZ, vec![0]);
        c.push(InstructionKind::TransversalCnot, vec![0, 1]);
        let errs = c.validate(ValidateConfig::default()).unwrap_err();
        assert!(errs.iter().any(|e| matches!(e, ValidationError::UseBeforeInit { .. })));
    }

    #[test]
    fn validate_flags_missing_se_separation() {
        let mut c = LogicalCircuit::new(2);
        c.push(InstructionKind::InitZ, vec![0]);
        c.push(InstructionKind::InitZ, vec![1]);
        c.push(InstructionKind::TransversalCnot, vec![0, 1]);
        c.push(InstructionKind::TransversalCnot, vec![1, 0]);
        let errs = c.validate(ValidateConfig::default()).unwrap_err();
        assert!(errs.iter().any(|e| matches!(e, ValidationError::MissingSeparation { .. })));
        assert!(c.validate(ValidateConfig { min_se_between_gates: 0 }).is_ok());
    }

    #[test]
    fn random_clifford_shape_and_determinism() {
        let c1 = build_random_clifford(5, 10, 14);
        let c2 = build_random_clifford(5, 10, 14);
        assert_eq!(c1, c2);
        assert!(c1.validate(ValidateConfig::default()).is_ok());
        let rounds = c1.instructions.iter().filter(|i| i.kind == InstructionKind::SERound).count();
        // 14 noisy rounds plus the final noiseless one.
        assert_eq!(rounds, 15);
        assert_eq!(c1.num_measurements(), 10);
        let different = build_random_clifford(6, 10, 14);
        assert_ne!(c1, different);
    }

    #[test]
    fn random_clifford_depth_zero_is_inits_and_measurements() {
        let c = build_random_clifford(1, 4, 0);
        assert!(c.instructions.iter().all(|i| !i.is_transversal_gate()));
        assert_eq!(c.num_measurements(), 4);
    }

    #[test]
    fn small_angle_branches_validate_and_differ_by_fold_s() {
        let (minus, plus) = build_small_angle_example();
        assert!(minus.validate(ValidateConfig::default()).is_ok());
        assert!(plus.validate(ValidateConfig::default()).is_ok());
        let folds = |c: &LogicalCircuit| {
            c.instructions.iter().filter(|i| i.kind == InstructionKind::FoldS).count()
        };
        assert_eq!(folds(&minus), 1);
        assert_eq!(folds(&plus), 0);
    }

    #[test]
    fn small_angle_back_propagation_matches_branches() {
        let (minus, plus) = build_small_angle_example();
        // Branch −1: product of both measurements lands on X̄₀·Ȳ₁·Z̄₂.
        let path = minus.back_propagate_product(&[0, 1]);
        assert_eq!(path.initial_operator(), &PauliString::parse(3, "X0 Y1 Z2").unwrap());
        // Branch +1: the second measurement alone lands on X̄₀·X̄₁·Z̄₂.
        let path = plus.back_propagate_product(&[1]);
        assert_eq!(path.initial_operator(), &PauliString::parse(3, "X0 X1 Z2").unwrap());
        // The first measurement back-propagates onto Z̄-support of the |+̄⟩ init.
        let path = plus.back_propagate_product(&[0]);
        assert_eq!(path.initial_operator(), &PauliString::parse(3, "Z0 Z1").unwrap());
    }

    #[test]
    fn distillation_shape() {
        let c = build_distillation();
        assert_eq!(c.num_qubits, 21);
        assert!(c.validate(ValidateConfig::default()).is_ok());
        // 15 gadget measurements + 4 check readouts + probe teleport + probe.
        assert_eq!(c.num_measurements(), 21);
        let magic =
            c.instructions.iter().filter(|i| i.kind == InstructionKind::InitMagic).count();
        assert_eq!(magic, 16);
    }

    #[test]
    fn text_format_round_trips() {
        for circuit in [
            build_ghz_comparison(),
            build_memory(3),
            build_random_clifford(3, 6, 4),
            build_distillation(),
            build_small_angle_example().0,
        ] {
            let text = write_circuit(&circuit);
            let parsed = read_circuit(&text).expect("parse");
            assert_eq!(parsed, circuit);
            assert_eq!(write_circuit(&parsed), text);
        }
    }

    #[test]
    fn builders_are_pure() {
        assert_eq!(build_ghz_comparison(), build_ghz_comparison());
        assert_eq!(build_distillation(), build_distillation());
        let (a1, b1) = build_small_angle_example();
        let (a2, b2) = build_small_angle_example();
        assert_eq!(a1, a2);
        assert_eq!(b1, b2);
    }
}
