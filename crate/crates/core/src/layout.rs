//! Surface-code layouts: stabilizer geometry, logical operators, fold
//! reflection, and the syndrome-extraction CNOT schedule.
//!
//! Unrotated patches live on a (2d−1)×(2d−1) grid with data qubits at even
//! coordinate sum, X stabilizers at (odd, even) sites and Z stabilizers at
//! (even, odd) sites. Rotated patches have d×d data qubits with weight-4
//! plaquettes on the half-integer grid and weight-2 boundary plaquettes.

use crate::gf2::{BitMatrix, BitVector};
use crate::pauli::{PauliKind, PauliString};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LayoutKind {
    Unrotated,
    Rotated,
}

/// One stabilizer generator: its ancilla coordinate, supported data qubits,
/// and the data qubit contacted at each of the four SE CNOT steps.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Stabilizer {
    pub coord: (i32, i32),
    pub support: Vec<usize>,
    pub schedule: [Option<usize>; 4],
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CodeLayout {
    pub kind: LayoutKind,
    pub distance: usize,
    pub data_coords: Vec<(i32, i32)>,
    pub x_stabilizers: Vec<Stabilizer>,
    pub z_stabilizers: Vec<Stabilizer>,
    pub logical_x: Vec<usize>,
    pub logical_z: Vec<usize>,
}

/// Builds a layout. `d` must be odd and at least 3.
pub fn make_layout(kind: LayoutKind, d: usize) -> CodeLayout {
    assert!(d >= 3 && d % 2 == 1, "distance must be odd and >= 3, got {d}");
    let layout = match kind {
        LayoutKind::Unrotated => make_unrotated(d),
        LayoutKind::Rotated => make_rotated(d),
    };
    debug_assert!(layout.check_invariants().is_ok(), "{:?}", layout.check_invariants());
    layout
}

fn make_unrotated(d: usize) -> CodeLayout {
    let span = 2 * d as i32 - 1;
    let mut data_coords = Vec::new();
    let mut index = HashMap::new();
    for i in 0..span {
        for j in 0..span {
            if (i + j) % 2 == 0 {
                index.insert((i, j), data_coords.len());
                data_coords.push((i, j));
            }
        }
    }
    // X-ancilla CNOT order N,E,W,S; Z order N,W,E,S. Interleaving this way
    // keeps every data qubit on at most one CNOT per step.
    let x_order = [(-1, 0), (0, 1), (0, -1), (1, 0)];
    let z_order = [(-1, 0), (0, -1), (0, 1), (1, 0)];
    let build = |coord: (i32, i32), order: &[(i32, i32); 4]| -> Stabilizer {
        let mut support = Vec::new();
        let mut schedule = [None; 4];
        for (step, (di, dj)) in order.iter().enumerate() {
            if let Some(&q) = index.get(&(coord.0 + di, coord.1 + dj)) {
                support.push(q);
                schedule[step] = Some(q);
            }
        }
        support.sort_unstable();
        Stabilizer { coord, support, schedule }
    };
    let mut x_stabilizers = Vec::new();
    let mut z_stabilizers = Vec::new();
    for i in 0..span {
        for j in 0..span {
            if (i + j) % 2 == 1 {
                if i % 2 == 1 {
                    x_stabilizers.push(build((i, j), &x_order));
                } else {
                    z_stabilizers.push(build((i, j), &z_order));
                }
            }
        }
    }
    let logical_z: Vec<usize> = (0..span).step_by(2).map(|i| index[&(i, 0)]).collect();
    let logical_x: Vec<usize> = (0..span).step_by(2).map(|j| index[&(0, j)]).collect();
    CodeLayout {
        kind: LayoutKind::Unrotated,
        distance: d,
        data_coords,
        x_stabilizers,
        z_stabilizers,
        logical_x,
        logical_z,
    }
}

fn make_rotated(d: usize) -> CodeLayout {
    let dd = d as i32;
    let mut data_coords = Vec::new();
    let mut index = HashMap::new();
    for x in 0..dd {
        for y in 0..dd {
            index.insert((x, y), data_coords.len());
            data_coords.push((x, y));
        }
    }
    // Plaquette with base corner (x, y) covers data {x, x+1} × {y, y+1}.
    // Z-type on even x+y (weight-2 plaquettes on top/bottom boundaries),
    // X-type on odd (left/right boundaries). The corner orders keep the bulk
    // schedule collision-free, keep simultaneous X/Z extraction commuting,
    // and point the weight-2 hook suffixes across their damaging logical
    // string (X hooks vertical against the horizontal X̄ strings, Z hooks
    // horizontal), preserving the full code distance.
    let x_corner_order = [(0, 0), (0, 1), (1, 0), (1, 1)];
    let z_corner_order = [(0, 0), (1, 0), (0, 1), (1, 1)];
    let mut x_stabilizers = Vec::new();
    let mut z_stabilizers = Vec::new();
    for x in -1..dd {
        for y in -1..dd {
            let is_z = (x + y).rem_euclid(2) == 0;
            let present: Vec<(i32, i32)> = [(0, 0), (1, 0), (0, 1), (1, 1)]
                .iter()
                .map(|(dx, dy)| (x + dx, y + dy))
                .filter(|c| index.contains_key(c))
                .collect();
            if present.len() < 2 {
                continue;
            }
            if present.len() < 4 {
                let on_top_bottom = y == -1 || y == dd - 1;
                let on_left_right = x == -1 || x == dd - 1;
                if is_z && !on_top_bottom {
                    continue;
                }
                if !is_z && !on_left_right {
                    continue;
                }
            }
            let order = if is_z { &z_corner_order } else { &x_corner_order };
            let mut support = Vec::new();
            let mut schedule = [None; 4];
            for (step, (dx, dy)) in order.iter().enumerate() {
                if let Some(&q) = index.get(&(x + dx, y + dy)) {
                    support.push(q);
                    schedule[step] = Some(q);
                }
            }
            support.sort_unstable();
            let stab = Stabilizer { coord: (x, y), support, schedule };
            if is_z {
                z_stabilizers.push(stab);
            } else {
                x_stabilizers.push(stab);
            }
        }
    }
    // Z string joins the Z boundaries (vertical), X string the X boundaries.
    let logical_z: Vec<usize> = (0..dd).map(|y| index[&(0, y)]).collect();
    let logical_x: Vec<usize> = (0..dd).map(|x| index[&(x, 0)]).collect();
    CodeLayout {
        kind: LayoutKind::Rotated,
        distance: d,
        data_coords,
        x_stabilizers,
        z_stabilizers,
        logical_x,
        logical_z,
    }
}

impl CodeLayout {
    pub fn num_data(&self) -> usize {
        self.data_coords.len()
    }

    pub fn stabilizers(&self, basis: PauliKind) -> &[Stabilizer] {
        match basis {
            PauliKind::X => &self.x_stabilizers,
            PauliKind::Z => &self.z_stabilizers,
            _ => panic!("stabilizers are X or Z type"),
        }
    }

    /// Pauli string of a stabilizer over the patch's data qubits.
    pub fn stabilizer_pauli(&self, basis: PauliKind, idx: usize) -> PauliString {
        let stab = &self.stabilizers(basis)[idx];
        let mut p = PauliString::identity(self.num_data());
        for &q in &stab.support {
            p.set(q, basis);
        }
        p
    }

    pub fn logical_pauli(&self, basis: PauliKind) -> PauliString {
        let support = match basis {
            PauliKind::X => &self.logical_x,
            PauliKind::Z => &self.logical_z,
            _ => panic!("logical operators are X or Z type"),
        };
        let mut p = PauliString::identity(self.num_data());
        for &q in support {
            p.set(q, basis);
        }
        p
    }

    /// Data-qubit permutation of the diagonal reflection used by the fold
    /// gates: the qubit at (i, j) moves to (j, i).
    ///
    /// Requires the reflection to map X-stabilizer geometry onto Z-stabilizer
    /// geometry, which holds for the unrotated patch. The rotated patch's
    /// checkerboard is invariant under the reflection without swapping the
    /// two bases, so folds are rejected there.
    pub fn fold_permutation(&self) -> Result<Vec<usize>, FoldError> {
        if self.kind != LayoutKind::Unrotated {
            return Err(FoldError::UnsupportedLayout(self.kind));
        }
        let index: HashMap<(i32, i32), usize> =
            self.data_coords.iter().enumerate().map(|(i, &c)| (c, i)).collect();
        Ok(self.data_coords.iter().map(|&(i, j)| index[&(j, i)]).collect())
    }

    /// Diagonal data qubits (fixed points of the fold) and the off-diagonal
    /// reflected pairs (listed once, lower index first).
    pub fn fold_pairs(&self) -> Result<(Vec<usize>, Vec<(usize, usize)>), FoldError> {
        let perm = self.fold_permutation()?;
        let mut diagonal = Vec::new();
        let mut pairs = Vec::new();
        for (q, &img) in perm.iter().enumerate() {
            match img.cmp(&q) {
                std::cmp::Ordering::Equal => diagonal.push(q),
                std::cmp::Ordering::Greater => pairs.push((q, img)),
                std::cmp::Ordering::Less => {}
            }
        }
        Ok((diagonal, pairs))
    }

    /// Row basis of the full stabilizer group as symplectic (x|z) vectors.
    pub fn stabilizer_group_basis(&self) -> BitMatrix {
        let n = self.num_data();
        let mut rows = Vec::new();
        for basis in [PauliKind::X, PauliKind::Z] {
            for i in 0..self.stabilizers(basis).len() {
                rows.push(symplectic_vector(&self.stabilizer_pauli(basis, i), n));
            }
        }
        BitMatrix::from_rows(&rows)
    }

    fn check_invariants(&self) -> Result<(), String> {
        let all: Vec<PauliString> = (0..self.x_stabilizers.len())
            .map(|i| self.stabilizer_pauli(PauliKind::X, i))
            .chain((0..self.z_stabilizers.len()).map(|i| self.stabilizer_pauli(PauliKind::Z, i)))
            .collect();
        for (i, a) in all.iter().enumerate() {
            for b in &all[i + 1..] {
                if !crate::pauli::symplectic_commutes(a, b) {
                    return Err(format!("stabilizers do not commute: {a:?} vs {b:?}"));
                }
            }
        }
        let lx = self.logical_pauli(PauliKind::X);
        let lz = self.logical_pauli(PauliKind::Z);
        if crate::pauli::symplectic_commutes(&lx, &lz) {
            return Err("logical X and Z must anticommute".into());
        }
        for p in &all {
            if !crate::pauli::symplectic_commutes(&lx, p)
                || !crate::pauli::symplectic_commutes(&lz, p)
            {
                return Err("logicals must commute with stabilizers".into());
            }
        }
        if self.logical_x.len() != self.distance || self.logical_z.len() != self.distance {
            return Err("logical representatives must have weight d".into());
        }
        let expected_stabs = self.num_data() - 1;
        if self.x_stabilizers.len() + self.z_stabilizers.len() != expected_stabs {
            return Err(format!(
                "stabilizer count {} != n-1 = {expected_stabs}",
                self.x_stabilizers.len() + self.z_stabilizers.len()
            ));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("layout serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum FoldError {
    #[error("fold gates are not defined on {0:?} layouts")]
    UnsupportedLayout(LayoutKind),
}

/// (x|z) symplectic vector of a Pauli over `n` qubits.
pub fn symplectic_vector(p: &PauliString, n: usize) -> BitVector {
    let mut v = BitVector::zeros(2 * n);
    for q in 0..n {
        if p.x_bits().get(q) {
            v.set(q, true);
        }
        if p.z_bits().get(q) {
            v.set(n + q, true);
        }
    }
    v
}
