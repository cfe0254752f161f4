//! Stabilizer tableau simulation with sign tracking.
//!
//! Destabilizer/stabilizer representation over n qubits. Used to compute
//! noiseless reference outcomes (including which measurements are
//! deterministic) and as an independent noisy-simulation oracle in tests.

use crate::gf2::BitVector;
use crate::pauli::{GateKind, PauliKind, PauliString};

#[derive(Clone)]
struct PauliRow {
    x: BitVector,
    z: BitVector,
    sign: bool,
}

impl PauliRow {
    fn new(n: usize) -> Self {
        Self { x: BitVector::zeros(n), z: BitVector::zeros(n), sign: false }
    }
}

/// Stabilizer state of `n` qubits, initially |0…0⟩.
#[derive(Clone)]
pub struct Tableau {
    n: usize,
    /// Rows 0..n are destabilizers, rows n..2n are stabilizers.
    rows: Vec<PauliRow>,
}

/// Outcome of a Pauli measurement.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct MeasureOutcome {
    pub value: bool,
    pub deterministic: bool,
}

impl Tableau {
    pub fn new(n: usize) -> Self {
        let mut rows = Vec::with_capacity(2 * n);
        for i in 0..2 * n {
            let mut row = PauliRow::new(n);
            if i < n {
                row.x.set(i, true);
            } else {
                row.z.set(i - n, true);
            }
            rows.push(row);
        }
        Self { n, rows }
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn apply_h(&mut self, q: usize) {
        for row in &mut self.rows {
            let x = row.x.get(q);
            let z = row.z.get(q);
            if x && z {
                row.sign = !row.sign;
            }
            row.x.set(q, z);
            row.z.set(q, x);
        }
    }

    pub fn apply_s(&mut self, q: usize) {
        for row in &mut self.rows {
            let x = row.x.get(q);
            let z = row.z.get(q);
            if x && z {
                row.sign = !row.sign;
            }
            if x {
                row.z.flip(q);
            }
        }
    }

    pub fn apply_sdg(&mut self, q: usize) {
        // S† = S·Z up to global phase; per-row sign bookkeeping matches.
        self.apply_pauli_gate(q, PauliKind::Z);
        self.apply_s(q);
    }

    pub fn apply_cnot(&mut self, c: usize, t: usize) {
        for row in &mut self.rows {
            let xc = row.x.get(c);
            let zc = row.z.get(c);
            let xt = row.x.get(t);
            let zt = row.z.get(t);
            if xc && zt && (xt == zc) {
                row.sign = !row.sign;
            }
            row.x.set(t, xt ^ xc);
            row.z.set(c, zc ^ zt);
        }
    }

    pub fn apply_cz(&mut self, a: usize, b: usize) {
        self.apply_h(b);
        self.apply_cnot(a, b);
        self.apply_h(b);
    }

    /// Pauli gates only flip signs of anticommuting rows.
    pub fn apply_pauli_gate(&mut self, q: usize, kind: PauliKind) {
        for row in &mut self.rows {
            let flips = match kind {
                PauliKind::I => false,
                PauliKind::X => row.z.get(q),
                PauliKind::Z => row.x.get(q),
                PauliKind::Y => row.x.get(q) ^ row.z.get(q),
            };
            if flips {
                row.sign = !row.sign;
            }
        }
    }

    /// Applies a whole Pauli string as a gate (sign flips only).
    pub fn apply_pauli_string(&mut self, p: &PauliString) {
        assert_eq!(p.num_qubits(), self.n);
        for row in &mut self.rows {
            if row.x.dot(p.z_bits()) ^ row.z.dot(p.x_bits()) {
                row.sign = !row.sign;
            }
        }
    }

    pub fn apply_gate(&mut self, gate: &GateKind, support: &[usize]) {
        match gate {
            GateKind::X => self.apply_pauli_gate(support[0], PauliKind::X),
            GateKind::Z => self.apply_pauli_gate(support[0], PauliKind::Z),
            GateKind::H => self.apply_h(support[0]),
            GateKind::S => self.apply_s(support[0]),
            GateKind::SDagger => self.apply_sdg(support[0]),
            GateKind::Cnot => self.apply_cnot(support[0], support[1]),
            GateKind::Cz => self.apply_cz(support[0], support[1]),
            GateKind::Permutation(perm) => {
                for row in &mut self.rows {
                    let xs: Vec<bool> = support.iter().map(|&q| row.x.get(q)).collect();
                    let zs: Vec<bool> = support.iter().map(|&q| row.z.get(q)).collect();
                    for (i, &dst) in perm.iter().enumerate() {
                        row.x.set(support[dst], xs[i]);
                        row.z.set(support[dst], zs[i]);
                    }
                }
            }
        }
    }

    fn anticommutes(row: &PauliRow, p: &PauliString) -> bool {
        row.x.dot(p.z_bits()) ^ row.z.dot(p.x_bits())
    }

    /// Left-multiplies row `src` into row `dst`, tracking the sign.
    ///
    /// The accumulated i-power must be 0 or 2 mod 4, which holds whenever the
    /// two rows commute (the only case rowsum is used for).
    fn rowsum(&mut self, dst: usize, src: usize) {
        debug_assert_ne!(dst, src);
        let src_row = self.rows[src].clone();
        let d = &mut self.rows[dst];
        let mut plus = 0i64;
        let mut minus = 0i64;
        for k in 0..src_row.x.words().len() {
            let x1 = src_row.x.words()[k];
            let z1 = src_row.z.words()[k];
            let x2 = d.x.words()[k];
            let z2 = d.z.words()[k];
            // Classify the source Pauli per site; the +i sites follow the
            // cyclic order X→Y→Z→X, the −i sites the reverse.
            let src_y = x1 & z1;
            let src_x = x1 & !z1;
            let src_z = !x1 & z1;
            let p = (src_y & z2 & !x2) | (src_x & z2 & x2) | (src_z & x2 & !z2);
            let m = (src_y & x2 & !z2) | (src_x & z2 & !x2) | (src_z & x2 & z2);
            plus += i64::from(p.count_ones());
            minus += i64::from(m.count_ones());
        }
        let phase =
            (plus - minus + 2 * i64::from(src_row.sign) + 2 * i64::from(d.sign)).rem_euclid(4);
        debug_assert!(phase == 0 || phase == 2, "non-Hermitian rowsum");
        d.sign = phase == 2;
        d.x.xor_assign(&src_row.x);
        d.z.xor_assign(&src_row.z);
    }

    /// Measures an arbitrary Pauli observable.
    ///
    /// `coin` supplies the outcome when the measurement is non-deterministic.
    pub fn measure_pauli(&mut self, p: &PauliString, coin: impl FnOnce() -> bool) -> MeasureOutcome {
        assert_eq!(p.num_qubits(), self.n);
        let n = self.n;
        let pivot = (n..2 * n).find(|&i| Self::anticommutes(&self.rows[i], p));
        if let Some(pivot) = pivot {
            // The paired destabilizer is overwritten below, skip it.
            for i in 0..2 * n {
                if i != pivot && i != pivot - n && Self::anticommutes(&self.rows[i], p) {
                    self.rowsum(i, pivot);
                }
            }
            let value = coin();
            self.rows[pivot - n] = self.rows[pivot].clone();
            self.rows[pivot] = PauliRow {
                x: p.x_bits().clone(),
                z: p.z_bits().clone(),
                sign: value,
            };
            MeasureOutcome { value, deterministic: false }
        } else {
            // Deterministic: accumulate the stabilizer combination indicated
            // by anticommuting destabilizers into a scratch row.
            let scratch = 2 * n;
            self.rows.push(PauliRow::new(n));
            for i in 0..n {
                if Self::anticommutes(&self.rows[i], p) {
                    self.rowsum(scratch, i + n);
                }
            }
            let row = self.rows.pop().unwrap();
            debug_assert_eq!(row.x, *p.x_bits(), "scratch must reproduce the observable");
            debug_assert_eq!(row.z, *p.z_bits(), "scratch must reproduce the observable");
            MeasureOutcome { value: row.sign, deterministic: true }
        }
    }

    /// Measures Z on one qubit.
    pub fn measure_z(&mut self, q: usize, coin: impl FnOnce() -> bool) -> MeasureOutcome {
        let p = PauliString::single(self.n, q, PauliKind::Z);
        self.measure_pauli(&p, coin)
    }

    /// Resets a qubit to |0⟩ (measure Z, flip with X if needed).
    pub fn reset_z(&mut self, q: usize, coin: impl FnOnce() -> bool) {
        let out = self.measure_z(q, coin);
        if out.value {
            self.apply_pauli_gate(q, PauliKind::X);
        }
    }

    /// Resets a qubit to |+⟩.
    pub fn reset_x(&mut self, q: usize, coin: impl FnOnce() -> bool) {
        let p = PauliString::single(self.n, q, PauliKind::X);
        let out = self.measure_pauli(&p, coin);
        if out.value {
            self.apply_pauli_gate(q, PauliKind::Z);
        }
    }

    /// Test helper: is `p` (with sign `sign`, i.e. eigenvalue (−1)^sign) in
    /// the stabilizer group of the current state?
    pub fn stabilizes(&mut self, p: &PauliString, sign: bool) -> bool {
        let mut probe = self.clone();
        let out = probe.measure_pauli(p, || false);
        out.deterministic && out.value == sign
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::symplectic_commutes;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn p(n: usize, s: &str) -> PauliString {
        PauliString::parse(n, s).unwrap()
    }

    #[test]
    fn fresh_state_is_all_zeros() {
        let mut t = Tableau::new(3);
        for q in 0..3 {
            let out = t.measure_z(q, || unreachable!());
            assert!(out.deterministic);
            assert!(!out.value);
        }
    }

    #[test]
    fn x_gate_flips_measurement() {
        let mut t = Tableau::new(1);
        t.apply_pauli_gate(0, PauliKind::X);
        let out = t.measure_z(0, || unreachable!());
        assert!(out.deterministic && out.value);
    }

    #[test]
    fn plus_state_measured_in_x_is_deterministic() {
        let mut t = Tableau::new(1);
        t.apply_h(0);
        let out = t.measure_pauli(&p(1, "X0"), || unreachable!());
        assert!(out.deterministic && !out.value);
        // Z measurement is now random; collapse to |1⟩ and re-check.
        let out = t.measure_z(0, || true);
        assert!(!out.deterministic && out.value);
        let out = t.measure_z(0, || unreachable!());
        assert!(out.deterministic && out.value);
    }

    #[test]
    fn ghz_correlations() {
        let mut t = Tableau::new(3);
        t.apply_h(0);
        t.apply_cnot(0, 1);
        t.apply_cnot(1, 2);
        assert!(t.stabilizes(&p(3, "Z1 Z2"), false));
        assert!(t.stabilizes(&p(3, "Z0 Z1"), false));
        assert!(t.stabilizes(&p(3, "X0 X1 X2"), false));
        // Single Z is random; after measuring it, parity correlations hold.
        let v0 = t.measure_z(0, || true);
        assert!(!v0.deterministic);
        let v1 = t.measure_z(1, || unreachable!());
        assert!(v1.deterministic);
        assert_eq!(v1.value, v0.value);
    }

    #[test]
    fn s_gates_make_y_eigenstates() {
        let mut t = Tableau::new(1);
        t.apply_h(0);
        t.apply_s(0);
        assert!(t.stabilizes(&p(1, "Y0"), false));
        let mut t = Tableau::new(1);
        t.apply_h(0);
        t.apply_sdg(0);
        assert!(t.stabilizes(&p(1, "Y0"), true));
    }

    #[test]
    fn cz_copies_z_onto_x() {
        let mut t = Tableau::new(2);
        t.apply_h(0);
        t.apply_cz(0, 1);
        assert!(t.stabilizes(&p(2, "X0 Z1"), false));
    }

    #[test]
    fn reset_clears_entanglement() {
        let mut rng = StdRng::seed_from_u64(7);
        let mut t = Tableau::new(2);
        t.apply_h(0);
        t.apply_cnot(0, 1);
        t.reset_z(0, || rng.gen());
        let out = t.measure_z(0, || unreachable!());
        assert!(out.deterministic && !out.value);
    }

    #[test]
    fn conjugated_initial_stabilizers_stay_deterministic() {
        use crate::pauli::{conjugate_through_gate, Direction};
        let mut rng = StdRng::seed_from_u64(42);
        for _ in 0..50 {
            let n = 4;
            let mut t = Tableau::new(n);
            let mut gates: Vec<(GateKind, Vec<usize>)> = Vec::new();
            for _ in 0..12 {
                let kind = rng.gen_range(0..5);
                let q = rng.gen_range(0..n);
                let mut r = rng.gen_range(0..n);
                while r == q {
                    r = rng.gen_range(0..n);
                }
                let (g, support) = match kind {
                    0 => (GateKind::H, vec![q]),
                    1 => (GateKind::S, vec![q]),
                    2 => (GateKind::SDagger, vec![q]),
                    3 => (GateKind::Cnot, vec![q, r]),
                    _ => (GateKind::Cz, vec![q, r]),
                };
                t.apply_gate(&g, &support);
                gates.push((g, support));
            }
            // U Z_q U† stabilizes U|0…0⟩.
            for q in 0..n {
                let mut obs = PauliString::single(n, q, PauliKind::Z);
                for (g, support) in &gates {
                    obs = conjugate_through_gate(&obs, g, support, Direction::Forward);
                }
                let out = t.measure_pauli(&obs, || unreachable!("deterministic by construction"));
                assert!(out.deterministic);
            }
        }
    }

    #[test]
    fn repeated_measurement_is_stable() {
        let mut rng = StdRng::seed_from_u64(3);
        for trial in 0..50 {
            let n = 3;
            let mut t = Tableau::new(n);
            t.apply_h(0);
            t.apply_cnot(0, 1);
            t.apply_s(1);
            t.apply_cz(1, 2);
            let mut obs = PauliString::identity(n);
            while obs.is_identity() {
                for q in 0..n {
                    obs.set(
                        q,
                        match rng.gen_range(0..4) {
                            0 => PauliKind::I,
                            1 => PauliKind::X,
                            2 => PauliKind::Y,
                            _ => PauliKind::Z,
                        },
                    );
                }
            }
            let first = t.measure_pauli(&obs, || rng.gen());
            let second = t.measure_pauli(&obs, || unreachable!("collapsed"));
            assert!(second.deterministic, "trial {trial}");
            assert_eq!(first.value, second.value, "trial {trial}");
        }
    }

    #[test]
    fn pauli_error_flips_anticommuting_observables() {
        let mut rng = StdRng::seed_from_u64(9);
        for _ in 0..50 {
            let n = 4;
            let mut clean = Tableau::new(n);
            for _ in 0..8 {
                let q = rng.gen_range(0..n);
                let r = (q + 1 + rng.gen_range(0..n - 1)) % n;
                match rng.gen_range(0..3) {
                    0 => clean.apply_h(q),
                    1 => clean.apply_s(q),
                    _ => clean.apply_cnot(q, r),
                }
            }
            let mut err = PauliString::identity(n);
            err.set(rng.gen_range(0..n), if rng.gen() { PauliKind::X } else { PauliKind::Y });
            let mut noisy = clean.clone();
            noisy.apply_pauli_string(&err);
            let obs = p(4, "Z0 Z1 Z2 Z3");
            let c = clean.measure_pauli(&obs, || false);
            if c.deterministic {
                let v = noisy.measure_pauli(&obs, || unreachable!());
                assert!(v.deterministic);
                assert_eq!(v.value != c.value, !symplectic_commutes(&err, &obs));
            }
        }
    }
}
