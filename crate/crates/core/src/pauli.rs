//! Pauli strings and Clifford conjugation, phases dropped.
//!
//! Decoding only needs the commutation structure of operators, so a Pauli is
//! an (x, z) bit-vector pair and conjugation acts linearly on those bits.
//! Signs are reconciled downstream as measurement-bit XORs.

use crate::gf2::BitVector;
use serde::{Deserialize, Serialize};

/// Tensor product of single-qubit Paulis over `num_qubits`, without phase.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PauliString {
    x_bits: BitVector,
    z_bits: BitVector,
    num_qubits: usize,
}

/// Single-qubit Pauli kind at one site.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PauliKind {
    I,
    X,
    Y,
    Z,
}

impl PauliString {
    pub fn identity(num_qubits: usize) -> Self {
        Self { x_bits: BitVector::zeros(num_qubits), z_bits: BitVector::zeros(num_qubits), num_qubits }
    }

    pub fn single(num_qubits: usize, qubit: usize, kind: PauliKind) -> Self {
        let mut p = Self::identity(num_qubits);
        p.set(qubit, kind);
        p
    }

    pub fn from_bits(x_bits: BitVector, z_bits: BitVector) -> Self {
        assert_eq!(x_bits.len(), z_bits.len(), "x/z length mismatch");
        let num_qubits = x_bits.len();
        Self { x_bits, z_bits, num_qubits }
    }

    /// Parses a sparse form like "X0 Z2 Y5".
    pub fn parse(num_qubits: usize, s: &str) -> Result<Self, String> {
        let mut p = Self::identity(num_qubits);
        for token in s.split_whitespace() {
            let (kind, idx) = token.split_at(1);
            let kind = match kind {
                "X" => PauliKind::X,
                "Y" => PauliKind::Y,
                "Z" => PauliKind::Z,
                "I" => PauliKind::I,
                other => return Err(format!("unknown Pauli `{other}`")),
            };
            let q: usize = idx.parse().map_err(|e| format!("bad qubit index `{idx}`: {e}"))?;
            if q >= num_qubits {
                return Err(format!("qubit {q} out of range {num_qubits}"));
            }
            p.set(q, kind);
        }
        Ok(p)
    }

    #[inline]
    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    #[inline]
    pub fn x_bits(&self) -> &BitVector {
        &self.x_bits
    }

    #[inline]
    pub fn z_bits(&self) -> &BitVector {
        &self.z_bits
    }

    pub fn get(&self, qubit: usize) -> PauliKind {
        match (self.x_bits.get(qubit), self.z_bits.get(qubit)) {
            (false, false) => PauliKind::I,
            (true, false) => PauliKind::X,
            (true, true) => PauliKind::Y,
            (false, true) => PauliKind::Z,
        }
    }

    pub fn set(&mut self, qubit: usize, kind: PauliKind) {
        let (x, z) = match kind {
            PauliKind::I => (false, false),
            PauliKind::X => (true, false),
            PauliKind::Y => (true, true),
            PauliKind::Z => (false, true),
        };
        self.x_bits.set(qubit, x);
        self.z_bits.set(qubit, z);
    }

    /// Multiplies `other` into `self` (phase dropped, so this is XOR).
    pub fn mul_assign(&mut self, other: &PauliString) {
        assert_eq!(self.num_qubits, other.num_qubits, "qubit count mismatch");
        self.x_bits.xor_assign(&other.x_bits);
        self.z_bits.xor_assign(&other.z_bits);
    }

    pub fn is_identity(&self) -> bool {
        self.x_bits.is_zero() && self.z_bits.is_zero()
    }

    /// Number of non-identity sites.
    pub fn weight(&self) -> usize {
        let mut w = 0;
        for i in 0..self.num_qubits {
            if self.x_bits.get(i) || self.z_bits.get(i) {
                w += 1;
            }
        }
        w
    }

    /// Qubits with non-identity support, ascending.
    pub fn support(&self) -> Vec<usize> {
        (0..self.num_qubits)
            .filter(|&i| self.x_bits.get(i) || self.z_bits.get(i))
            .collect()
    }
}

impl std::fmt::Debug for PauliString {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut first = true;
        for q in 0..self.num_qubits {
            let kind = self.get(q);
            if kind != PauliKind::I {
                if !first {
                    write!(f, " ")?;
                }
                write!(f, "{kind:?}{q}")?;
                first = false;
            }
        }
        if first {
            write!(f, "I")?;
        }
        Ok(())
    }
}

/// Returns true iff `a` and `b` commute.
///
/// Computed as the parity of `a.x·b.z + a.z·b.x` (the symplectic form).
pub fn symplectic_commutes(a: &PauliString, b: &PauliString) -> bool {
    assert_eq!(a.num_qubits, b.num_qubits, "qubit count mismatch");
    !(a.x_bits.dot(&b.z_bits) ^ a.z_bits.dot(&b.x_bits))
}

/// Clifford gate kinds used by both the logical and physical layers.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GateKind {
    X,
    Z,
    H,
    S,
    SDagger,
    Cnot,
    Cz,
    /// Relabeling of the support: qubit `support[i]` moves to `support[perm[i]]`.
    Permutation(Vec<usize>),
}

/// Conjugation direction through a gate.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

/// Conjugates `p` through one gate: `U†pU` forward or `UpU†` backward.
///
/// Identity outside `support`. Phases are dropped, so S and S† act
/// identically and every non-permutation gate here is direction-symmetric.
pub fn conjugate_through_gate(
    p: &PauliString,
    gate: &GateKind,
    support: &[usize],
    direction: Direction,
) -> PauliString {
    let mut out = p.clone();
    conjugate_in_place(&mut out, gate, support, direction);
    out
}

pub(crate) fn conjugate_in_place(
    p: &mut PauliString,
    gate: &GateKind,
    support: &[usize],
    direction: Direction,
) {
    match gate {
        GateKind::X | GateKind::Z => {
            // Pauli gates fix every Pauli up to phase.
        }
        GateKind::H => {
            // X ↔ Z
            let q = support[0];
            let x = p.x_bits.get(q);
            let z = p.z_bits.get(q);
            p.x_bits.set(q, z);
            p.z_bits.set(q, x);
        }
        GateKind::S | GateKind::SDagger => {
            // X → Y (= XZ up to phase), Z → Z
            let q = support[0];
            if p.x_bits.get(q) {
                p.z_bits.flip(q);
            }
        }
        GateKind::Cnot => {
            // X_c → X_c X_t, Z_t → Z_c Z_t
            let (c, t) = (support[0], support[1]);
            if p.x_bits.get(c) {
                p.x_bits.flip(t);
            }
            if p.z_bits.get(t) {
                p.z_bits.flip(c);
            }
        }
        GateKind::Cz => {
            // X_a → X_a Z_b, X_b → X_b Z_a
            let (a, b) = (support[0], support[1]);
            if p.x_bits.get(a) {
                p.z_bits.flip(b);
            }
            if p.x_bits.get(b) {
                p.z_bits.flip(a);
            }
        }
        GateKind::Permutation(perm) => {
            assert_eq!(perm.len(), support.len(), "permutation length mismatch");
            let xs: Vec<bool> = support.iter().map(|&q| p.x_bits.get(q)).collect();
            let zs: Vec<bool> = support.iter().map(|&q| p.z_bits.get(q)).collect();
            match direction {
                Direction::Forward => {
                    for (i, &dst) in perm.iter().enumerate() {
                        p.x_bits.set(support[dst], xs[i]);
                        p.z_bits.set(support[dst], zs[i]);
                    }
                }
                Direction::Backward => {
                    for (i, &dst) in perm.iter().enumerate() {
                        p.x_bits.set(support[i], xs[dst]);
                        p.z_bits.set(support[i], zs[dst]);
                    }
                }
            }
        }
    }
}
