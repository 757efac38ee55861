//! Rotated surface-code layout, stabilizer supports and CNOT ordering.
//!
//! Data qubits sit on a `dx × dz` grid indexed `row * dz + col`. Every
//! plaquette is identified by its top-left corner `(r, c)` with
//! `r ∈ -1..dx-1`, `c ∈ -1..dz-1`; plaquettes with `r + c` odd measure
//! `Z^{⊗}` and the rest measure `X^{⊗}`. Weight-two Z checks live on the
//! left/right edges, weight-two X checks on the top/bottom edges.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pauli type of an error component.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Basis {
    X,
    Z,
}

impl Basis {
    /// Stabilizer type that detects errors of this type.
    pub fn detected_by(self) -> StabKind {
        match self {
            Basis::X => StabKind::Z,
            Basis::Z => StabKind::X,
        }
    }

    pub fn other(self) -> Basis {
        match self {
            Basis::X => Basis::Z,
            Basis::Z => Basis::X,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum StabKind {
    X,
    Z,
}

/// Corner order inside a plaquette.
pub const NW: usize = 0;
pub const NE: usize = 1;
pub const SW: usize = 2;
pub const SE: usize = 3;

/// Corner touched at each of the four CNOT time steps.
pub const X_ORDER: [usize; 4] = [NW, NE, SW, SE];
pub const Z_ORDER: [usize; 4] = [NW, SW, NE, SE];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StabRef {
    pub kind: StabKind,
    pub index: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stabilizer {
    pub kind: StabKind,
    pub index: usize,
    /// Top-left corner of the plaquette, may be -1 on a boundary.
    pub anchor: (i32, i32),
    /// Data qubits at NW, NE, SW, SE.
    pub corners: [Option<usize>; 4],
}

impl Stabilizer {
    pub fn support(&self) -> Vec<usize> {
        self.corners.iter().flatten().copied().collect()
    }

    pub fn weight(&self) -> usize {
        self.corners.iter().flatten().count()
    }

    /// Data qubit interacting at CNOT step `t` (0-based), if any.
    pub fn at_step(&self, t: usize) -> Option<usize> {
        let order = match self.kind {
            StabKind::X => X_ORDER,
            StabKind::Z => Z_ORDER,
        };
        self.corners[order[t]]
    }

    /// Cell of the syndrome image this check is written to.
    pub fn image_cell(&self) -> (usize, usize) {
        let (r, c) = self.anchor;
        match self.kind {
            StabKind::Z => (r as usize, c.max(0) as usize),
            StabKind::X => (r.max(0) as usize, c as usize),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CodeLayout {
    pub dx: usize,
    pub dz: usize,
    pub x_stabilizers: Vec<Stabilizer>,
    pub z_stabilizers: Vec<Stabilizer>,
    /// Support of the logical X operator (a column of length dx).
    pub logical_x: Vec<usize>,
    /// Support of the logical Z operator (a row of length dz).
    pub logical_z: Vec<usize>,
}

/// Builds the layout for odd distances `dx, dz ≥ 3`.
pub fn build_layout(dx: usize, dz: usize) -> Result<CodeLayout> {
    if dx < 3 || dz < 3 || dx % 2 == 0 || dz % 2 == 0 {
        return Err(Error::InvalidDistance { dx, dz });
    }
    let (rows, cols) = (dx as i32, dz as i32);
    let mut x_stabilizers = Vec::new();
    let mut z_stabilizers = Vec::new();
    for r in -1..rows {
        for c in -1..cols {
            let z_type = (r + c).rem_euclid(2) == 1;
            let cells = [(r, c), (r, c + 1), (r + 1, c), (r + 1, c + 1)];
            let mut corners = [None; 4];
            for (k, &(a, b)) in cells.iter().enumerate() {
                if a >= 0 && a < rows && b >= 0 && b < cols {
                    corners[k] = Some(a as usize * dz + b as usize);
                }
            }
            let weight = corners.iter().flatten().count();
            let keep = match weight {
                4 => true,
                2 if z_type => (c == -1 || c == cols - 1) && r >= 0 && r < rows - 1,
                2 => (r == -1 || r == rows - 1) && c >= 0 && c < cols - 1,
                _ => false,
            };
            if !keep {
                continue;
            }
            if z_type {
                let index = z_stabilizers.len();
                z_stabilizers.push(Stabilizer { kind: StabKind::Z, index, anchor: (r, c), corners });
            } else {
                let index = x_stabilizers.len();
                x_stabilizers.push(Stabilizer { kind: StabKind::X, index, anchor: (r, c), corners });
            }
        }
    }
    let logical_x = (0..dx).map(|r| r * dz).collect();
    let logical_z = (0..dz).collect();
    Ok(CodeLayout { dx, dz, x_stabilizers, z_stabilizers, logical_x, logical_z })
}

impl CodeLayout {
    pub fn n_data(&self) -> usize {
        self.dx * self.dz
    }

    pub fn qubit(&self, row: usize, col: usize) -> usize {
        row * self.dz + col
    }

    pub fn coords(&self, q: usize) -> (usize, usize) {
        (q / self.dz, q % self.dz)
    }

    pub fn stabilizers(&self, kind: StabKind) -> &[Stabilizer] {
        match kind {
            StabKind::X => &self.x_stabilizers,
            StabKind::Z => &self.z_stabilizers,
        }
    }

    pub fn stab(&self, s: StabRef) -> &Stabilizer {
        &self.stabilizers(s.kind)[s.index]
    }

    /// Stabilizers detecting errors of the given type.
    pub fn detectors(&self, basis: Basis) -> &[Stabilizer] {
        self.stabilizers(basis.detected_by())
    }

    /// Logical operator whose overlap parity flags a failure for `basis` errors.
    pub fn witness(&self, basis: Basis) -> &[usize] {
        match basis {
            Basis::X => &self.logical_z,
            Basis::Z => &self.logical_x,
        }
    }

    /// Syndrome of a data error pattern (one entry per detecting stabilizer).
    pub fn syndrome(&self, basis: Basis, error: &[u8]) -> Vec<u8> {
        self.detectors(basis)
            .iter()
            .map(|s| s.support().iter().fold(0u8, |acc, &q| acc ^ (error[q] & 1)))
            .collect()
    }

    /// True if the pattern anticommutes with the witness logical.
    pub fn flips_logical(&self, basis: Basis, error: &[u8]) -> bool {
        self.witness(basis).iter().fold(0u8, |acc, &q| acc ^ (error[q] & 1)) == 1
    }

    /// Per data qubit, stabilizers of the given kind containing it.
    pub fn incidence(&self, kind: StabKind) -> Vec<Vec<usize>> {
        let mut inc = vec![Vec::new(); self.n_data()];
        for s in self.stabilizers(kind) {
            for q in s.support() {
                inc[q].push(s.index);
            }
        }
        inc
    }

    pub fn schedule(&self) -> CnotSchedule {
        let mut steps = Vec::with_capacity(4);
        for t in 0..4 {
            let mut gates = Vec::new();
            for s in self.x_stabilizers.iter().chain(&self.z_stabilizers) {
                if let Some(q) = s.at_step(t) {
                    let sr = StabRef { kind: s.kind, index: s.index };
                    gates.push(ScheduledCnot { stab: sr, data: q });
                }
            }
            steps.push(gates);
        }
        CnotSchedule { steps }
    }

    pub fn to_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Export<'a> {
            layout: &'a CodeLayout,
            schedule: CnotSchedule,
        }
        Ok(serde_json::to_string_pretty(&Export { layout: self, schedule: self.schedule() })?)
    }
}

/// One CNOT between a stabilizer ancilla and a data qubit. X checks use the
/// ancilla as control; Z checks use the data qubit as control.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduledCnot {
    pub stab: StabRef,
    pub data: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CnotSchedule {
    pub steps: Vec<Vec<ScheduledCnot>>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(layout: &CodeLayout, kind: StabKind) -> Vec<Vec<u8>> {
        layout
            .stabilizers(kind)
            .iter()
            .map(|s| {
                let mut row = vec![0u8; layout.n_data()];
                for q in s.support() {
                    row[q] = 1;
                }
                row
            })
            .collect()
    }

    #[test]
    fn counts() {
        for &(dx, dz) in &[(3, 3), (5, 5), (3, 5), (5, 3), (7, 9), (9, 9)] {
            let l = build_layout(dx, dz).unwrap();
            assert_eq!(l.z_stabilizers.len(), (dx - 1) * (dz + 1) / 2);
            assert_eq!(l.x_stabilizers.len(), (dz - 1) * (dx + 1) / 2);
            assert_eq!(l.x_stabilizers.len() + l.z_stabilizers.len(), dx * dz - 1);
        }
    }

    #[test]
    fn rejects_bad_distance() {
        assert!(build_layout(4, 5).is_err());
        assert!(build_layout(1, 3).is_err());
    }

    #[test]
    fn stabilizers_commute() {
        let l = build_layout(5, 7).unwrap();
        for a in &l.x_stabilizers {
            for b in &l.z_stabilizers {
                let sa = a.support();
                let overlap = b.support().iter().filter(|q| sa.contains(q)).count();
                assert_eq!(overlap % 2, 0);
            }
        }
    }

    #[test]
    fn logicals_commute_with_checks() {
        let l = build_layout(5, 7).unwrap();
        let mut lx = vec![0u8; l.n_data()];
        for &q in &l.logical_x {
            lx[q] = 1;
        }
        let mut lz = vec![0u8; l.n_data()];
        for &q in &l.logical_z {
            lz[q] = 1;
        }
        assert!(l.syndrome(Basis::X, &lx).iter().all(|&b| b == 0));
        assert!(l.syndrome(Basis::Z, &lz).iter().all(|&b| b == 0));
        assert!(l.flips_logical(Basis::X, &lx));
        assert!(l.flips_logical(Basis::Z, &lz));
    }

    #[test]
    fn schedule_has_no_conflicts() {
        let l = build_layout(7, 5).unwrap();
        for step in l.schedule().steps {
            let mut data = std::collections::HashSet::new();
            for g in step {
                assert!(data.insert(g.data));
            }
        }
    }

    #[test]
    fn weight_two_slots() {
        let l = build_layout(5, 5).unwrap();
        for s in l.x_stabilizers.iter().filter(|s| s.weight() == 2) {
            let used: Vec<usize> = (0..4).filter(|&t| s.at_step(t).is_some()).collect();
            if s.anchor.0 == -1 {
                assert_eq!(used, vec![2, 3]);
            } else {
                assert_eq!(used, vec![0, 1]);
            }
        }
        for s in l.z_stabilizers.iter().filter(|s| s.weight() == 2) {
            let used: Vec<usize> = (0..4).filter(|&t| s.at_step(t).is_some()).collect();
            if s.anchor.1 == -1 {
                assert_eq!(used, vec![2, 3]);
            } else {
                assert_eq!(used, vec![0, 1]);
            }
        }
    }

    #[test]
    fn d3_supports() {
        let l = build_layout(3, 3).unwrap();
        let z = mat(&l, StabKind::Z);
        assert_eq!(
            z,
            vec![
                vec![1, 0, 0, 1, 0, 0, 0, 0, 0],
                vec![0, 1, 1, 0, 1, 1, 0, 0, 0],
                vec![0, 0, 0, 1, 1, 0, 1, 1, 0],
                vec![0, 0, 0, 0, 0, 1, 0, 0, 1],
            ]
        );
        let x = mat(&l, StabKind::X);
        assert_eq!(
            x,
            vec![
                vec![0, 1, 1, 0, 0, 0, 0, 0, 0],
                vec![1, 1, 0, 1, 1, 0, 0, 0, 0],
                vec![0, 0, 0, 0, 1, 1, 0, 1, 1],
                vec![0, 0, 0, 0, 0, 0, 1, 1, 0],
            ]
        );
    }

    #[test]
    fn json_roundtrip() {
        let l = build_layout(3, 5).unwrap();
        let js = l.to_json().unwrap();
        let v: serde_json::Value = serde_json::from_str(&js).unwrap();
        assert_eq!(v["layout"]["dx"], 3);
        assert_eq!(v["schedule"]["steps"].as_array().unwrap().len(), 4);
    }
}
