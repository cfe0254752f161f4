//! Simulation and correlated decoding of transversal surface-code circuits.
//!
//! The crate decodes logical algorithms built from transversal Clifford gates
//! by tracking *logical Pauli products* instead of whole circuits:
//!
//! 1. classify each new logical measurement as part of a reliable Pauli
//!    product or as independently 50/50 random ([`products`]),
//! 2. back-propagate the reliable product through the executed circuit
//!    ([`circuit`]),
//! 3. restrict the decoding hypergraph to the checks along the propagation
//!    path, which removes all hyperedges of weight three or more
//!    ([`checks`], [`subgraph`]),
//! 4. decode the restricted subgraph with minimum-weight perfect matching
//!    ([`matcher`]),
//! 5. optionally commit the corrections so the covered space-time region is
//!    never decoded again ([`commit`]).
//!
//! Physical-layer support (surface-code layouts, syndrome-extraction
//! compilation, circuit-level depolarizing noise, stabilizer-tableau
//! reference simulation and detector-level shot sampling) lives in
//! [`layout`], [`compile`], [`noise`], [`tableau`], [`dem`] and [`sampler`].

pub mod checks;
pub mod circuit;
pub mod commit;
pub mod compile;
pub mod dem;
pub mod gf2;
pub mod layout;
pub mod matcher;
pub mod noise;
pub mod pauli;
pub mod pipeline;
pub mod products;
pub mod sampler;
pub mod subgraph;
pub mod tableau;

// pub use checks::{Check, CheckId, CheckSet};
// pub use circuit::{GateKind, LogicalCircuit, LogicalInstruction, PropagationPath};
// pub use commit::CommitState;
// pub use compile::PhysicalCircuit;
// pub use dem::{ErrorMechanism, ErrorModel};
pub use gf2::{BitMatrix, BitVector};
// pub use layout::{CodeLayout, LayoutKind};
// pub use matcher::{Correction, MatchingProblem};
// pub use noise::NoiseModel;
pub use pauli::PauliString;
// pub use products::{BackPropMatrix, InitBasisSet, ReliableBasis};
// pub use sampler::ShotRecord;
// pub use subgraph::DecodingSubgraph;
