//! Noise models and elementary noise sites.
//!
//! Circuit-level noise: single-qubit depolarizing with probability p during
//! resets and measurements, and two-qubit depolarizing with probability p on
//! each two-qubit gate (single-qubit gates are ideal). Phenomenological
//! noise: X and Z errors on data qubits before each SE round plus flips of
//! the syndrome measurement results.

use serde::{Deserialize, Serialize};

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum NoiseModel {
    CircuitLevel { p: f64 },
    Phenomenological { p: f64 },
}

impl NoiseModel {
    pub fn p(&self) -> f64 {
        match self {
            NoiseModel::CircuitLevel { p } | NoiseModel::Phenomenological { p } => *p,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        let p = self.p();
        if !(0.0..1.0).contains(&p) {
            return Err(format!("noise probability must be in [0, 1), got {p}"));
        }
        Ok(())
    }

    pub fn is_circuit_level(&self) -> bool {
        matches!(self, NoiseModel::CircuitLevel { .. })
    }
}

/// One elementary noise location in the compiled circuit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum NoiseSite {
    /// Uniform single-qubit depolarizing: X, Y, Z each with probability p/3.
    Depol1 { q: u32, p: f64 },
    /// Two-qubit depolarizing: the 15 non-identity Paulis each with p/15.
    Depol2 { a: u32, b: u32, p: f64 },
    /// Biased single-Pauli sites (phenomenological data errors).
    PauliX { q: u32, p: f64 },
    PauliZ { q: u32, p: f64 },
    /// Classical flip of a recorded measurement bit.
    MeasFlip { ordinal: u32, p: f64 },
    /// Reference randomization after a reset (probability 1/2, not an error).
    RandomizeZ { q: u32 },
    RandomizeX { q: u32 },
}

impl NoiseSite {
    /// Is this a probability-1/2 reference randomizer rather than noise?
    pub fn is_randomizer(&self) -> bool {
        matches!(self, NoiseSite::RandomizeZ { .. } | NoiseSite::RandomizeX { .. })
    }
}
