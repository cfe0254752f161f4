//! Classification of logical measurements into reliable Pauli products and
//! independently 50/50 random bits, with the incremental full-rank basis
//! used to assign individual measurement values.
//!
//! A product of measurements with indicator vector v is reliable when M·v
//! lies in the span of the initialization basis set B, where column j of M
//! is the initialization-time support of measurement j's back-propagated
//! operator. Reliable products carry deterministic information and must be
//! decoded; everything else is assigned a fair coin.

use crate::circuit::{InstructionKind, LogicalCircuit};
use crate::gf2::{BitMatrix, BitVector};
use serde::Serialize;

/// Back-propagation support matrix M (2n × m, columns appended per
/// measurement). Row i is X̄-basis support on logical qubit i, row n+i is
/// Z̄-basis support.
#[derive(Clone, Debug)]
pub struct BackPropMatrix {
    pub n_logical: usize,
    pub columns: Vec<BitVector>,
}

/// Initialization basis set B: one row per reliable initialization basis
/// direction (two rows for magic states).
#[derive(Clone, Debug)]
pub struct InitBasisSet {
    pub n_logical: usize,
    pub rows: Vec<BitVector>,
}

impl InitBasisSet {
    pub fn from_circuit(circuit: &LogicalCircuit) -> Self {
        let n = circuit.num_qubits;
        let mut rows = Vec::new();
        for instr in &circuit.instructions {
            match instr.kind {
                InstructionKind::InitX => rows.push(unit(2 * n, instr.targets[0])),
                InstructionKind::InitZ => rows.push(unit(2 * n, n + instr.targets[0])),
                InstructionKind::InitMagic => {
                    rows.push(unit(2 * n, instr.targets[0]));
                    rows.push(unit(2 * n, n + instr.targets[0]));
                }
                _ => {}
            }
        }
        Self { n_logical: n, rows }
    }

    pub fn matrix(&self) -> BitMatrix {
        BitMatrix::from_rows(&self.rows)
    }
}

fn unit(len: usize, idx: usize) -> BitVector {
    let mut v = BitVector::zeros(len);
    v.set(idx, true);
    v
}

/// Is the measurement product with indicator `v` reliable?
pub fn is_reliable(v: &BitVector, m: &BackPropMatrix, b: &InitBasisSet) -> bool {
    let mut target = BitVector::zeros(2 * m.n_logical);
    for j in v.support() {
        target.xor_assign(&m.columns[j]);
    }
    crate::gf2::in_span(&target, &b.matrix())
}

/// Column tag in the reliable basis.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
pub enum ColumnTag {
    Reliable,
    Random,
}

/// One column of V: the measurement product it represents.
#[derive(Clone, Debug)]
pub struct ProductColumn {
    /// Member measurement ordinals, ascending; always contains the column's
    /// own ordinal as the largest element (V is upper triangular with unit
    /// diagonal).
    pub members: Vec<usize>,
    pub tag: ColumnTag,
    /// M·v: initialization-time support of the product.
    pub init_support: BitVector,
}

/// Incrementally built basis over the measurements of one executed circuit.
pub struct ReliableBasis {
    circuit: LogicalCircuit,
    b: InitBasisSet,
    pub m_matrix: BackPropMatrix,
    pub columns: Vec<ProductColumn>,
    /// Incremental elimination rows: (reduced vector over 2n, combination).
    /// Combination indices < b.rows.len() select B rows; larger indices
    /// select measurement columns (index - b.rows.len()).
    reduced: Vec<(BitVector, Vec<usize>)>,
}

impl ReliableBasis {
    pub fn new(circuit: &LogicalCircuit) -> Self {
        let b = InitBasisSet::from_circuit(circuit);
        let mut basis = Self {
            circuit: circuit.clone(),
            m_matrix: BackPropMatrix { n_logical: circuit.num_qubits, columns: Vec::new() },
            columns: Vec::new(),
            reduced: Vec::new(),
            b,
        };
        for i in 0..basis.b.rows.len() {
            let row = basis.b.rows[i].clone();
            basis.insert_row(row, i);
        }
        basis
    }

    /// Processes every measurement of the circuit in order.
    pub fn build_full(circuit: &LogicalCircuit) -> Self {
        let mut basis = Self::new(circuit);
        for ordinal in 0..circuit.num_measurements() {
            basis.extend(ordinal);
        }
        basis
    }

    fn insert_row(&mut self, mut row: BitVector, combo_id: usize) -> Vec<usize> {
        let mut combo = vec![combo_id];
        for (base, base_combo) in &self.reduced {
            let lead = base.support().next().expect("nonzero reduced row");
            if row.get(lead) {
                row.xor_assign(base);
                combo = sym_diff(&combo, base_combo);
            }
        }
        if !row.is_zero() {
            self.reduced.push((row, combo.clone()));
            self.reduced.sort_by_key(|(r, _)| r.support().next().unwrap());
        }
        combo
    }

    /// Solves `target ∈ span(B ∪ earlier columns)`; returns the selected
    /// earlier-measurement set on success.
    fn solve(&self, target: &BitVector) -> Option<Vec<usize>> {
        let mut residual = target.clone();
        let mut combo: Vec<usize> = Vec::new();
        for (base, base_combo) in &self.reduced {
            let lead = base.support().next().unwrap();
            if residual.get(lead) {
                residual.xor_assign(base);
                combo = sym_diff(&combo, base_combo);
            }
        }
        if !residual.is_zero() {
            return None;
        }
        let nb = self.b.rows.len();
        Some(combo.into_iter().filter(|&i| i >= nb).map(|i| i - nb).collect())
    }

    /// Appends measurement `ordinal` per the inductive rule, returning the
    /// new column.
    pub fn extend(&mut self, ordinal: usize) -> &ProductColumn {
        assert_eq!(ordinal, self.columns.len(), "measurements extend in order");
        let n = self.circuit.num_qubits;
        let path = self.circuit.back_propagate_product(&[ordinal]);
        let init = path.initial_operator();
        let mut column = BitVector::zeros(2 * n);
        for q in 0..n {
            if init.x_bits().get(q) {
                column.set(q, true);
            }
            if init.z_bits().get(q) {
                column.set(n + q, true);
            }
        }
        // Reliable iff M·(e_new + x) ∈ span B for some x over earlier
        // measurements; the elimination structure solves both sides at once.
        let (tag, members, support) = match self.solve(&column) {
            Some(mut earlier) => {
                earlier.push(ordinal);
                earlier.sort_unstable();
                let mut support = column.clone();
                for &j in &earlier {
                    if j != ordinal {
                        support.xor_assign(&self.m_matrix.columns[j]);
                    }
                }
                (ColumnTag::Reliable, earlier, support)
            }
            None => (ColumnTag::Random, vec![ordinal], column.clone()),
        };
        let combo_id = self.b.rows.len() + ordinal;
        self.insert_row(column.clone(), combo_id);
        self.m_matrix.columns.push(column);
        self.columns.push(ProductColumn { members, tag, init_support: support });
        self.columns.last().unwrap()
    }

    pub fn num_measurements(&self) -> usize {
        self.columns.len()
    }

    pub fn reliable_columns(&self) -> impl Iterator<Item = (usize, &ProductColumn)> {
        self.columns.iter().enumerate().filter(|(_, c)| c.tag == ColumnTag::Reliable)
    }

    /// V as an explicit matrix (upper triangular, unit diagonal).
    pub fn v_matrix(&self) -> BitMatrix {
        let m = self.columns.len();
        let mut v = BitMatrix::zeros(m, m);
        for (j, col) in self.columns.iter().enumerate() {
            for &i in &col.members {
                v.set(i, j, true);
            }
        }
        v
    }

    /// Recovers individual measurement bits from per-column values.
    ///
    /// `column_value(j)` must supply the decoded value of every reliable
    /// column and the coin flip of every random column. Back-substitution
    /// over the upper-triangular V.
    pub fn assign_measurements(&self, mut column_value: impl FnMut(usize) -> bool) -> BitVector {
        let m = self.columns.len();
        let mut bits = BitVector::zeros(m);
        for (j, col) in self.columns.iter().enumerate() {
            let v = column_value(j);
            let prior = col.members.iter().filter(|&&i| i != j).fold(false, |acc, &i| {
                acc ^ bits.get(i)
            });
            bits.set(j, v ^ prior);
        }
        bits
    }

    /// JSON dump of (V, tags, M, B) for fixtures and debugging.
    pub fn dump_json(&self) -> String {
        #[derive(Serialize)]
        struct Dump {
            columns: Vec<ColumnDump>,
            m_columns: Vec<Vec<usize>>,
            b_rows: Vec<Vec<usize>>,
        }
        #[derive(Serialize)]
        struct ColumnDump {
            members: Vec<usize>,
            tag: ColumnTag,
        }
        let dump = Dump {
            columns: self
                .columns
                .iter()
                .map(|c| ColumnDump { members: c.members.clone(), tag: c.tag })
                .collect(),
            m_columns: self.m_matrix.columns.iter().map(|c| c.support().collect()).collect(),
            b_rows: self.b.rows.iter().map(|r| r.support().collect()).collect(),
        };
        serde_json::to_string_pretty(&dump).expect("serializable")
    }
}

fn sym_diff(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        match (a.get(i), b.get(j)) {
            (Some(&x), Some(&y)) if x == y => {
                i += 1;
                j += 1;
            }
            (Some(&x), Some(&y)) if x < y => {
                out.push(x);
                i += 1;
            }
            (Some(_), Some(&y)) => {
                out.push(y);
                j += 1;
            }
            (Some(&x), None) => {
                out.push(x);
                i += 1;
            }
            (None, Some(&y)) => {
                out.push(y);
                j += 1;
            }
            (None, None) => unreachable!(),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{
        build_distillation, build_ghz_comparison, build_random_clifford,
        build_small_angle_example, DISTILL_STAGE_SPLIT,
    };
    use crate::pauli::symplectic_commutes;
    use crate::pauli::PauliString;

    #[test]
    fn zero_vector_is_reliable() {
        let c = build_ghz_comparison();
        let basis = ReliableBasis::build_full(&c);
        let v = BitVector::zeros(3);
        assert!(is_reliable(&v, &basis.m_matrix, &InitBasisSet::from_circuit(&c)));
    }

    #[test]
    fn ghz_classification() {
        let c = build_ghz_comparison();
        let basis = ReliableBasis::build_full(&c);
        // First Z̄ measurement back-propagates onto the |+̄⟩ init: random.
        assert_eq!(basis.columns[0].tag, ColumnTag::Random);
        // Second: Z̄₁ alone hits the |+̄⟩ init through the CNOT; pairs with
        // the first measurement into a reliable product.
        assert_eq!(basis.columns[1].tag, ColumnTag::Reliable);
        assert_eq!(basis.columns[1].members, vec![0, 1]);
        // Third: reliable as a two-element product with an earlier
        // measurement (Z̄₁Z̄₂ and Z̄₀Z̄₂ are both GHZ stabilizers).
        assert_eq!(basis.columns[2].tag, ColumnTag::Reliable);
        assert_eq!(basis.columns[2].members.len(), 2);
        assert_eq!(*basis.columns[2].members.last().unwrap(), 2);
        // Direct Definition-1 queries.
        let b = InitBasisSet::from_circuit(&c);
        assert!(is_reliable(&BitVector::from_support(3, &[1, 2]), &basis.m_matrix, &b));
        assert!(!is_reliable(&BitVector::from_support(3, &[0]), &basis.m_matrix, &b));
    }

    #[test]
    fn small_angle_branches() {
        let (minus, plus) = build_small_angle_example();
        // Branch −1: second measurement extends with S = {first}.
        let basis = ReliableBasis::build_full(&minus);
        assert_eq!(basis.columns[0].tag, ColumnTag::Random);
        assert_eq!(basis.columns[1].tag, ColumnTag::Reliable);
        assert_eq!(basis.columns[1].members, vec![0, 1]);
        // Branch +1: second measurement is reliable alone.
        let basis = ReliableBasis::build_full(&plus);
        assert_eq!(basis.columns[0].tag, ColumnTag::Random);
        assert_eq!(basis.columns[1].tag, ColumnTag::Reliable);
        assert_eq!(basis.columns[1].members, vec![1]);
    }

    #[test]
    fn random_clifford_products_are_reliable_singletons() {
        let c = build_random_clifford(3, 6, 4);
        let basis = ReliableBasis::build_full(&c);
        for col in &basis.columns {
            assert_eq!(col.tag, ColumnTag::Reliable);
            assert_eq!(col.members.len(), 1);
        }
    }

    #[test]
    fn distillation_stage_structure() {
        let c = build_distillation();
        let basis = ReliableBasis::build_full(&c);
        // Gadget measurements: the parity structure gives 3 reliable
        // products in group A (8 gadgets) and 7 in group B.
        let group_a = basis.columns[..DISTILL_STAGE_SPLIT]
            .iter()
            .filter(|c| c.tag == ColumnTag::Reliable)
            .count();
        assert_eq!(group_a, 3);
        let group_b = basis.columns[DISTILL_STAGE_SPLIT..15]
            .iter()
            .filter(|c| c.tag == ColumnTag::Reliable)
            .count();
        assert_eq!(group_b, 7);
        // Check readouts and the probe are all reliable.
        for col in &basis.columns[15..] {
            assert_eq!(col.tag, ColumnTag::Reliable, "{col:?}");
        }
        // The probe is reliable as a singleton.
        assert_eq!(basis.columns.last().unwrap().members.len(), 1);
    }

    #[test]
    fn v_is_upper_triangular_unit_diagonal_and_invertible() {
        for circuit in [
            build_ghz_comparison(),
            build_distillation(),
            build_random_clifford(9, 6, 6),
        ] {
            let basis = ReliableBasis::build_full(&circuit);
            let v = basis.v_matrix();
            let m = basis.columns.len();
            for j in 0..m {
                assert!(v.get(j, j));
                for i in j + 1..m {
                    assert!(!v.get(i, j), "lower-triangular entry set");
                }
            }
            assert_eq!(v.rank(), m);
        }
    }

    #[test]
    fn xor_of_reliable_columns_is_reliable() {
        for seed in 0..50 {
            let c = build_random_clifford(seed, 4, 4);
            let basis = ReliableBasis::build_full(&c);
            let b = InitBasisSet::from_circuit(&c);
            let reliable: Vec<&ProductColumn> =
                basis.reliable_columns().map(|(_, c)| c).collect();
            for (i, a) in reliable.iter().enumerate() {
                for bb in &reliable[i + 1..] {
                    let mut v = BitVector::zeros(basis.num_measurements());
                    for &m in &a.members {
                        v.flip(m);
                    }
                    for &m in &bb.members {
                        v.flip(m);
                    }
                    assert!(is_reliable(&v, &basis.m_matrix, &b));
                }
            }
        }
    }

    /// For every random column there is a logical Pauli stabilizer of the
    /// initial state anticommuting with that column's operator alone.
    #[test]
    fn random_columns_have_distinguishing_stabilizers() {
        for circuit in [build_ghz_comparison(), build_distillation()] {
            let n = circuit.num_qubits;
            let basis = ReliableBasis::build_full(&circuit);
            let b = InitBasisSet::from_circuit(&circuit);
            // Initial-state logical stabilizer directions = rows of B as
            // Pauli strings (x-part rows → X̄, z-part → Z̄; magic gets Ȳ via
            // combination).
            let stab_dirs: Vec<PauliString> = b
                .rows
                .iter()
                .map(|row| {
                    let mut p = PauliString::identity(n);
                    for idx in row.support() {
                        if idx < n {
                            p.set(idx, crate::pauli::PauliKind::X);
                        } else {
                            let q = idx - n;
                            let kind = if p.get(q) == crate::pauli::PauliKind::X {
                                crate::pauli::PauliKind::Y
                            } else {
                                crate::pauli::PauliKind::Z
                            };
                            p.set(q, kind);
                        }
                    }
                    p
                })
                .collect();
            let col_ops: Vec<PauliString> = basis
                .columns
                .iter()
                .map(|c| {
                    let mut p = PauliString::identity(n);
                    for q in 0..n {
                        let x = c.init_support.get(q);
                        let z = c.init_support.get(n + q);
                        p.set(
                            q,
                            match (x, z) {
                                (false, false) => crate::pauli::PauliKind::I,
                                (true, false) => crate::pauli::PauliKind::X,
                                (false, true) => crate::pauli::PauliKind::Z,
                                (true, true) => crate::pauli::PauliKind::Y,
                            },
                        );
                    }
                    p
                })
                .collect();
            for (j, col) in basis.columns.iter().enumerate() {
                if col.tag != ColumnTag::Random {
                    continue;
                }
                // Solve for a subset of stabilizer directions anticommuting
                // with column j alone: brute force over small dir sets would
                // explode, so solve the linear system on anticommutation bits.
                let rows: Vec<BitVector> = stab_dirs
                    .iter()
                    .map(|s| {
                        BitVector::from_bits(
                            col_ops.iter().map(|op| !symplectic_commutes(s, op)),
                        )
                    })
                    .collect();
                let target = unit(basis.columns.len(), j);
                let found =
                    crate::gf2::solve_in_row_span(&target, &BitMatrix::from_rows(&rows));
                assert!(found.is_some(), "no distinguishing stabilizer for column {j}");
            }
        }
    }

    #[test]
    fn assignment_back_substitution() {
        // Whatever the coins, every column's member parity reproduces the
        // value fed in; reliable-product values are coin-independent.
        let c = build_ghz_comparison();
        let basis = ReliableBasis::build_full(&c);
        for coin in [false, true] {
            let values = [coin, false, true];
            let bits = basis.assign_measurements(|j| values[j]);
            for (j, col) in basis.columns.iter().enumerate() {
                let parity = col.members.iter().fold(false, |acc, &i| acc ^ bits.get(i));
                assert_eq!(parity, values[j]);
            }
        }
    }

    #[test]
    fn identity_v_passes_through() {
        let c = build_random_clifford(5, 4, 2);
        let basis = ReliableBasis::build_full(&c);
        if basis.columns.iter().all(|c| c.members.len() == 1) {
            let values = [true, false, true, true];
            let bits = basis.assign_measurements(|j| values[j]);
            for (j, &v) in values.iter().enumerate() {
                assert_eq!(bits.get(j), v);
            }
        }
    }

    #[test]
    fn dump_json_shape() {
        let c = build_ghz_comparison();
        let basis = ReliableBasis::build_full(&c);
        let dump = basis.dump_json();
        let parsed: serde_json::Value = serde_json::from_str(&dump).unwrap();
        assert_eq!(parsed["columns"].as_array().unwrap().len(), 3);
        assert!(parsed["b_rows"].as_array().unwrap().len() >= 3);
    }
}
