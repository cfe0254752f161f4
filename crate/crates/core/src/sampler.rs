//! Reference-outcome computation and Monte Carlo shot sampling.
//!
//! One noiseless stabilizer-tableau run per circuit configuration supplies
//! reference measurement bits (flagging which are deterministic). Shots are
//! then sampled at the error-model level: each mechanism fires independently
//! and XORs its flip signature onto the references. Mechanisms with equal
//! probability are grouped so a geometric skip visits only the firing ones,
//! making per-shot cost proportional to the number of actual error events.
//!
//! A full noisy-tableau simulation path is kept as an independent oracle.

use crate::compile::{PhysInstr, PhysicalCircuit};
use crate::dem::{ErrorModel, RawFlip};
use crate::gf2::BitVector;
use crate::noise::NoiseSite;
use crate::pauli::{PauliKind, PauliString};
use crate::tableau::Tableau;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Reference value of one physical measurement.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct RefBit {
    pub value: bool,
    pub deterministic: bool,
}

/// One noiseless tableau simulation of the compiled circuit.
///
/// Non-deterministic measurements receive a flagged random reference bit
/// drawn from `seed`; per-shot re-randomization of that sector is handled by
/// the reference randomizers in the error model.
pub fn compute_reference(pc: &PhysicalCircuit, seed: u64) -> Vec<RefBit> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tableau = Tableau::new(pc.num_qubits);
    let mut bits = vec![RefBit { value: false, deterministic: false }; pc.num_measurements];
    for instr in &pc.instructions {
        match instr {
            PhysInstr::Gate { gate, qubits } => {
                let support: Vec<usize> = qubits.iter().map(|&q| q as usize).collect();
                tableau.apply_gate(gate, &support);
            }
            PhysInstr::ResetZ { q } => tableau.reset_z(*q as usize, || rng.gen()),
            PhysInstr::ResetX { q } => tableau.reset_x(*q as usize, || rng.gen()),
            PhysInstr::MeasZ { q, ordinal } => {
                let out = tableau.measure_z(*q as usize, || rng.gen());
                bits[*ordinal as usize] = RefBit { value: out.value, deterministic: out.deterministic };
            }
            PhysInstr::MeasPauli { pauli, ordinal } => {
                let out = tableau.measure_pauli(pauli, || rng.gen());
                bits[*ordinal as usize] = RefBit { value: out.value, deterministic: out.deterministic };
            }
            PhysInstr::PauliApply { pauli } => tableau.apply_pauli_string(pauli),
            PhysInstr::CondPauli { pauli, conditions } => {
                let fire = conditions.iter().fold(false, |acc, &o| acc ^ bits[o as usize].value);
                if fire {
                    tableau.apply_pauli_string(pauli);
                }
            }
            PhysInstr::Noise(_) => {}
        }
    }
    bits
}

/// Raw reference bit of each logical measurement (XOR over its bit set).
pub fn reference_logical_bits(pc: &PhysicalCircuit, refs: &[RefBit]) -> BitVector {
    let mut out = BitVector::zeros(pc.logical_measurements.len());
    for (l, lm) in pc.logical_measurements.iter().enumerate() {
        let v = lm.bits.iter().fold(false, |acc, &b| acc ^ refs[b as usize].value);
        out.set(l, v);
    }
    out
}

/// Asserts that every check is satisfied (+1) by the reference run.
pub fn validate_reference_checks(
    checks: &crate::checks::CheckSet,
    refs: &[RefBit],
) -> Result<(), String> {
    for check in &checks.checks {
        let v = check.bits.iter().fold(false, |acc, &b| acc ^ refs[b as usize].value);
        if v {
            return Err(format!("check {} not satisfied by reference: {check:?}", check.id));
        }
    }
    Ok(())
}

/// One Monte Carlo sample at the error-model level.
#[derive(Clone, Debug)]
pub struct ShotRecord {
    pub shot_index: u64,
    /// Flipped checks of the full hypergraph, sorted.
    pub defects: Vec<u32>,
    /// Per logical measurement: actual error-induced flip of the raw bit
    /// (randomizer flips excluded).
    pub error_flips: BitVector,
    /// Per logical measurement: total flip including reference randomizers;
    /// raw bit = reference XOR this.
    pub raw_flips: BitVector,
}

impl ShotRecord {
    /// Raw measured logical bit for measurement ordinal `l`.
    pub fn raw_bit(&self, reference: &BitVector, l: usize) -> bool {
        reference.get(l) ^ self.raw_flips.get(l)
    }
}

struct Bucket {
    probability: f64,
    log1m: f64,
    members: Vec<u32>,
    randomizer: bool,
}

/// Groups mechanisms by probability for geometric-skip sampling.
pub struct ShotSampler {
    buckets: Vec<Bucket>,
    num_checks: usize,
    num_logical: usize,
}

impl ShotSampler {
    pub fn new(model: &ErrorModel) -> Self {
        let mut by_p: std::collections::HashMap<u64, Vec<u32>> = std::collections::HashMap::new();
        for m in &model.mechanisms {
            by_p.entry(m.probability.to_bits()).or_default().push(m.id);
        }
        let mut buckets: Vec<Bucket> = by_p
            .into_iter()
            .map(|(pbits, members)| {
                let probability = f64::from_bits(pbits);
                Bucket {
                    probability,
                    log1m: (1.0 - probability).ln(),
                    members,
                    randomizer: false,
                }
            })
            .collect();
        buckets.sort_by(|a, b| a.probability.partial_cmp(&b.probability).unwrap());
        for b in &mut buckets {
            b.members.sort_unstable();
        }
        if !model.randomizers.is_empty() {
            buckets.push(Bucket {
                probability: 0.5,
                log1m: 0.5f64.ln(),
                members: (0..model.randomizers.len() as u32).collect(),
                randomizer: true,
            });
        }
        Self { buckets, num_checks: model.num_checks, num_logical: model.num_logical }
    }

    /// Samples one shot; deterministic in (seed, shot_index).
    pub fn sample(&self, model: &ErrorModel, seed: u64, shot_index: u64) -> ShotRecord {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(shot_index.wrapping_add(1));
        let mut check_flips: Vec<u32> = Vec::new();
        let mut error_flips = BitVector::zeros(self.num_logical);
        let mut raw_flips = BitVector::zeros(self.num_logical);
        for bucket in &self.buckets {
            let mut i = geometric_skip(&mut rng, bucket.log1m);
            while i < bucket.members.len() {
                let id = bucket.members[i] as usize;
                if bucket.randomizer {
                    for &o in &model.randomizers[id].flipped_observables {
                        raw_flips.flip(o as usize);
                    }
                } else {
                    let m = &model.mechanisms[id];
                    check_flips.extend_from_slice(&m.flipped_checks);
                    for &o in &m.flipped_observables {
                        error_flips.flip(o as usize);
                        raw_flips.flip(o as usize);
                    }
                }
                i += 1 + geometric_skip(&mut rng, bucket.log1m);
            }
        }
        check_flips.sort_unstable();
        let mut defects = Vec::with_capacity(check_flips.len());
        let mut i = 0;
        while i < check_flips.len() {
            let mut j = i;
            while j < check_flips.len() && check_flips[j] == check_flips[i] {
                j += 1;
            }
            if (j - i) % 2 == 1 {
                defects.push(check_flips[i]);
            }
            i = j;
        }
        debug_assert!(defects.iter().all(|&d| (d as usize) < self.num_checks));
        ShotRecord { shot_index, defects, error_flips, raw_flips }
    }
}

#[inline]
fn geometric_skip(rng: &mut ChaCha8Rng, log1m: f64) -> usize {
    if log1m == 0.0 {
        return usize::MAX;
    }
    let u: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let k = (u.ln() / log1m).floor();
    if k >= usize::MAX as f64 {
        usize::MAX
    } else {
        k as usize
    }
}

/// Full noisy-tableau simulation of one shot: the independent oracle.
pub struct NoisyOutcome {
    pub defects: Vec<u32>,
    pub raw_logical: BitVector,
}

pub fn simulate_noisy_tableau(
    pc: &PhysicalCircuit,
    checks: &crate::checks::CheckSet,
    seed: u64,
    shot_index: u64,
) -> NoisyOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(shot_index.wrapping_add(1));
    let mut tableau = Tableau::new(pc.num_qubits);
    let mut bits = vec![false; pc.num_measurements];
    for instr in &pc.instructions {
        match instr {
            PhysInstr::Gate { gate, qubits } => {
                let support: Vec<usize> = qubits.iter().map(|&q| q as usize).collect();
                tableau.apply_gate(gate, &support);
            }
            PhysInstr::ResetZ { q } => tableau.reset_z(*q as usize, || rng.gen()),
            PhysInstr::ResetX { q } => tableau.reset_x(*q as usize, || rng.gen()),
            PhysInstr::MeasZ { q, ordinal } => {
                bits[*ordinal as usize] = tableau.measure_z(*q as usize, || rng.gen()).value;
            }
            PhysInstr::MeasPauli { pauli, ordinal } => {
                bits[*ordinal as usize] = tableau.measure_pauli(pauli, || rng.gen()).value;
            }
            PhysInstr::PauliApply { pauli } => tableau.apply_pauli_string(pauli),
            PhysInstr::CondPauli { pauli, conditions } => {
                let fire = conditions.iter().fold(false, |acc, &o| acc ^ bits[o as usize]);
                if fire {
                    tableau.apply_pauli_string(pauli);
                }
            }
            PhysInstr::Noise(site) => apply_noise_to_tableau(site, &mut tableau, &mut bits, &mut rng),
        }
    }
    let defects = checks
        .checks
        .iter()
        .filter(|c| c.bits.iter().fold(false, |acc, &b| acc ^ bits[b as usize]))
        .map(|c| c.id)
        .collect();
    let mut raw_logical = BitVector::zeros(pc.logical_measurements.len());
    for (l, lm) in pc.logical_measurements.iter().enumerate() {
        raw_logical.set(l, lm.bits.iter().fold(false, |acc, &b| acc ^ bits[b as usize]));
    }
    NoisyOutcome { defects, raw_logical }
}

fn apply_noise_to_tableau(
    site: &NoiseSite,
    tableau: &mut Tableau,
    bits: &mut [bool],
    rng: &mut ChaCha8Rng,
) {
    match site {
        NoiseSite::Depol1 { q, p } => {
            if rng.gen_bool(*p) {
                let kind = [PauliKind::X, PauliKind::Y, PauliKind::Z][rng.gen_range(0..3)];
                tableau.apply_pauli_gate(*q as usize, kind);
            }
        }
        NoiseSite::Depol2 { a, b, p } => {
            if rng.gen_bool(*p) {
                let c = rng.gen_range(1..16u8);
                let kinds = [PauliKind::I, PauliKind::X, PauliKind::Y, PauliKind::Z];
                tableau.apply_pauli_gate(*a as usize, kinds[(c & 3) as usize]);
                tableau.apply_pauli_gate(*b as usize, kinds[(c >> 2) as usize]);
            }
        }
        NoiseSite::PauliX { q, p } => {
            if rng.gen_bool(*p) {
                tableau.apply_pauli_gate(*q as usize, PauliKind::X);
            }
        }
        NoiseSite::PauliZ { q, p } => {
            if rng.gen_bool(*p) {
                tableau.apply_pauli_gate(*q as usize, PauliKind::Z);
            }
        }
        NoiseSite::MeasFlip { ordinal, p } => {
            if rng.gen_bool(*p) {
                bits[*ordinal as usize] ^= true;
            }
        }
        NoiseSite::RandomizeZ { q } => {
            if rng.gen() {
                tableau.apply_pauli_gate(*q as usize, PauliKind::Z);
            }
        }
        NoiseSite::RandomizeX { q } => {
            if rng.gen() {
                tableau.apply_pauli_gate(*q as usize, PauliKind::X);
            }
        }
    }
}

/// Tableau run with a forced set of elementary mechanisms and all coins tied
/// to the reference seed: the outcome differences are exactly the forced
/// mechanisms' effects. Used to cross-check the symbolic flip extraction.
pub fn simulate_forced(
    pc: &PhysicalCircuit,
    checks: &crate::checks::CheckSet,
    reference_seed: u64,
    forced: &[&RawFlip],
) -> NoisyOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(reference_seed);
    let mut tableau = Tableau::new(pc.num_qubits);
    let mut bits = vec![false; pc.num_measurements];
    for (pos, instr) in pc.instructions.iter().enumerate() {
        for f in forced {
            if f.raw.position == pos as u32 {
                for &(q, x, z) in &f.raw.inject {
                    let kind = match (x, z) {
                        (true, false) => PauliKind::X,
                        (true, true) => PauliKind::Y,
                        (false, true) => PauliKind::Z,
                        (false, false) => PauliKind::I,
                    };
                    tableau.apply_pauli_gate(q as usize, kind);
                }
            }
        }
        match instr {
            PhysInstr::Gate { gate, qubits } => {
                let support: Vec<usize> = qubits.iter().map(|&q| q as usize).collect();
                tableau.apply_gate(gate, &support);
            }
            PhysInstr::ResetZ { q } => tableau.reset_z(*q as usize, || rng.gen()),
            PhysInstr::ResetX { q } => tableau.reset_x(*q as usize, || rng.gen()),
            PhysInstr::MeasZ { q, ordinal } => {
                let mut v = tableau.measure_z(*q as usize, || rng.gen()).value;
                for f in forced {
                    if f.raw.flip_ordinal == Some(*ordinal) {
                        v ^= true;
                    }
                }
                bits[*ordinal as usize] = v;
            }
            PhysInstr::MeasPauli { pauli, ordinal } => {
                let mut v = tableau.measure_pauli(pauli, || rng.gen()).value;
                for f in forced {
                    if f.raw.flip_ordinal == Some(*ordinal) {
                        v ^= true;
                    }
                }
                bits[*ordinal as usize] = v;
            }
            PhysInstr::PauliApply { pauli } => tableau.apply_pauli_string(pauli),
            PhysInstr::CondPauli { pauli, conditions } => {
                let fire = conditions.iter().fold(false, |acc, &o| acc ^ bits[o as usize]);
                if fire {
                    tableau.apply_pauli_string(pauli);
                }
            }
            PhysInstr::Noise(_) => {}
        }
    }
    let defects = checks
        .checks
        .iter()
        .filter(|c| c.bits.iter().fold(false, |acc, &b| acc ^ bits[b as usize]))
        .map(|c| c.id)
        .collect();
    let mut raw_logical = BitVector::zeros(pc.logical_measurements.len());
    for (l, lm) in pc.logical_measurements.iter().enumerate() {
        raw_logical.set(l, lm.bits.iter().fold(false, |acc, &b| acc ^ bits[b as usize]));
    }
    NoisyOutcome { defects, raw_logical }
}
