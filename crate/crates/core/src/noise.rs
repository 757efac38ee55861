//! Circuit-level depolarizing noise and Pauli-frame propagation through
//! repeated syndrome-extraction rounds.
//!
//! Each round: data qubits sit through the ancilla measure/reset window
//! (one idle location), ancillas are prepared (Z checks in |0>, X checks in
//! |+>), four CNOT steps run, then ancillas are measured. The last of the
//! `dm` rounds is noiseless.

use std::collections::HashMap;

use ndarray::{Array2, Array3, Axis};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Basis, CodeLayout, StabKind, StabRef};
use crate::rng::shot_rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn from_bits(x: bool, z: bool) -> Pauli {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    pub fn x(self) -> u8 {
        matches!(self, Pauli::X | Pauli::Y) as u8
    }

    pub fn z(self) -> u8 {
        matches!(self, Pauli::Z | Pauli::Y) as u8
    }

    const NON_TRIVIAL: [Pauli; 3] = [Pauli::X, Pauli::Y, Pauli::Z];
    const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];
}

/// Pauli on (control, target) of a CNOT.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Pauli2 {
    pub control: Pauli,
    pub target: Pauli,
}

impl Pauli2 {
    pub const IDENTITY: Pauli2 = Pauli2 { control: Pauli::I, target: Pauli::I };

    /// The 15 non-identity two-qubit Paulis in a fixed order.
    pub fn non_trivial() -> Vec<Pauli2> {
        let mut v = Vec::with_capacity(15);
        for &control in &Pauli::ALL {
            for &target in &Pauli::ALL {
                if control != Pauli::I || target != Pauli::I {
                    v.push(Pauli2 { control, target });
                }
            }
        }
        v
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LocationClass {
    SingleQubitGate,
    TwoQubitGate,
    PrepZero,
    PrepPlus,
    Measurement,
    Idle,
}

impl LocationClass {
    pub const ALL: [LocationClass; 6] = [
        LocationClass::SingleQubitGate,
        LocationClass::TwoQubitGate,
        LocationClass::PrepZero,
        LocationClass::PrepPlus,
        LocationClass::Measurement,
        LocationClass::Idle,
    ];
}

/// A fault location in the extraction circuit. Rounds are 1-based and
/// CNOT steps 0-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Location {
    /// Data qubit during the ancilla measure/reset window.
    DataWindow { round: usize, qubit: usize },
    Prep { round: usize, stab: StabRef },
    /// After the CNOT of `stab` at `step`.
    Cnot { round: usize, step: usize, stab: StabRef },
    DataIdle { round: usize, step: usize, qubit: usize },
    AncillaIdle { round: usize, step: usize, stab: StabRef },
    Measure { round: usize, stab: StabRef },
}

impl Location {
    pub fn round(&self) -> usize {
        match *self {
            Location::DataWindow { round, .. }
            | Location::Prep { round, .. }
            | Location::Cnot { round, .. }
            | Location::DataIdle { round, .. }
            | Location::AncillaIdle { round, .. }
            | Location::Measure { round, .. } => round,
        }
    }

    pub fn class(&self) -> LocationClass {
        match *self {
            Location::DataWindow { .. } | Location::DataIdle { .. } | Location::AncillaIdle { .. } => {
                LocationClass::Idle
            }
            Location::Prep { stab, .. } => match stab.kind {
                StabKind::Z => LocationClass::PrepZero,
                StabKind::X => LocationClass::PrepPlus,
            },
            Location::Cnot { .. } => LocationClass::TwoQubitGate,
            Location::Measure { .. } => LocationClass::Measurement,
        }
    }
}

/// Fault content at a location. `Flip` is the preparation or readout flip.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Fault {
    Single(Pauli),
    Two(Pauli2),
    Flip,
}

/// Single-parameter depolarizing model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub p: f64,
}

impl NoiseModel {
    pub fn new(p: f64) -> Result<NoiseModel> {
        if !(0.0..=1.0).contains(&p) || p.is_nan() {
            return Err(Error::InvalidParameter(format!("p must lie in [0,1], got {p}")));
        }
        Ok(NoiseModel { p })
    }

    /// Total fault probability at a location of the given class.
    pub fn rate(&self, class: LocationClass) -> f64 {
        match class {
            LocationClass::SingleQubitGate | LocationClass::TwoQubitGate | LocationClass::Idle => self.p,
            LocationClass::PrepZero | LocationClass::PrepPlus | LocationClass::Measurement => 2.0 * self.p / 3.0,
        }
    }

    /// X, Y or Z each with probability p/3.
    pub fn draw_single<R: Rng + ?Sized>(&self, rng: &mut R) -> Pauli {
        let u: f64 = rng.gen();
        if u < self.p {
            Pauli::NON_TRIVIAL[((u / self.p * 3.0) as usize).min(2)]
        } else {
            Pauli::I
        }
    }

    /// One of 15 non-identity two-qubit Paulis each with probability p/15.
    pub fn draw_two<R: Rng + ?Sized>(&self, rng: &mut R) -> Pauli2 {
        let u: f64 = rng.gen();
        if u < self.p {
            let k = ((u / self.p * 15.0) as usize).min(14);
            let control = Pauli::ALL[(k + 1) / 4];
            let target = Pauli::ALL[(k + 1) % 4];
            Pauli2 { control, target }
        } else {
            Pauli2::IDENTITY
        }
    }

    /// Preparation or readout flip with probability 2p/3.
    pub fn draw_flip<R: Rng + ?Sized>(&self, rng: &mut R) -> bool {
        rng.gen::<f64>() < 2.0 * self.p / 3.0
    }
}

/// Supplies faults to the propagation engine.
pub trait FaultSource {
    fn single(&mut self, loc: Location) -> Pauli;
    fn two(&mut self, loc: Location) -> Pauli2;
    fn flip(&mut self, loc: Location) -> bool;
}

impl<S: FaultSource + ?Sized> FaultSource for &mut S {
    fn single(&mut self, loc: Location) -> Pauli {
        (**self).single(loc)
    }
    fn two(&mut self, loc: Location) -> Pauli2 {
        (**self).two(loc)
    }
    fn flip(&mut self, loc: Location) -> bool {
        (**self).flip(loc)
    }
}

pub struct Sampler<'a, R: Rng> {
    pub model: NoiseModel,
    pub rng: &'a mut R,
}

impl<R: Rng> FaultSource for Sampler<'_, R> {
    fn single(&mut self, _: Location) -> Pauli {
        self.model.draw_single(self.rng)
    }
    fn two(&mut self, _: Location) -> Pauli2 {
        self.model.draw_two(self.rng)
    }
    fn flip(&mut self, _: Location) -> bool {
        self.model.draw_flip(self.rng)
    }
}

/// Deterministic faults looked up by location.
#[derive(Default)]
pub struct Injected {
    pub faults: HashMap<Location, Fault>,
}

impl FaultSource for Injected {
    fn single(&mut self, loc: Location) -> Pauli {
        match self.faults.get(&loc) {
            Some(Fault::Single(p)) => *p,
            _ => Pauli::I,
        }
    }
    fn two(&mut self, loc: Location) -> Pauli2 {
        match self.faults.get(&loc) {
            Some(Fault::Two(p)) => *p,
            _ => Pauli2::IDENTITY,
        }
    }
    fn flip(&mut self, loc: Location) -> bool {
        matches!(self.faults.get(&loc), Some(Fault::Flip))
    }
}

/// Cumulative data errors after each round plus their round-to-round changes.
/// Arrays are indexed `[round-1, row, col]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ErrorVolume {
    pub x_errors: Array3<u8>,
    pub z_errors: Array3<u8>,
    pub x_changes: Array3<u8>,
    pub z_changes: Array3<u8>,
}

impl ErrorVolume {
    pub fn from_cumulative(x_errors: Array3<u8>, z_errors: Array3<u8>) -> ErrorVolume {
        let x_changes = time_diff3(&x_errors);
        let z_changes = time_diff3(&z_errors);
        ErrorVolume { x_errors, z_errors, x_changes, z_changes }
    }

    pub fn rounds(&self) -> usize {
        self.x_errors.len_of(Axis(0))
    }

    pub fn cumulative(&self, basis: Basis) -> &Array3<u8> {
        match basis {
            Basis::X => &self.x_errors,
            Basis::Z => &self.z_errors,
        }
    }

    pub fn changes(&self, basis: Basis) -> &Array3<u8> {
        match basis {
            Basis::X => &self.x_changes,
            Basis::Z => &self.z_changes,
        }
    }

    /// Data error after the last round, flattened row-major.
    pub fn final_frame(&self, basis: Basis) -> Vec<u8> {
        let v = self.cumulative(basis);
        let last = v.len_of(Axis(0)) - 1;
        v.index_axis(Axis(0), last).iter().copied().collect()
    }
}

/// Raw check outcomes and their differences, indexed `[round-1, check]`.
/// `raw_x`/`diff_x` come from Z checks (they see X errors).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SyndromeVolume {
    pub raw_x: Array2<u8>,
    pub raw_z: Array2<u8>,
    pub diff_x: Array2<u8>,
    pub diff_z: Array2<u8>,
}

impl SyndromeVolume {
    pub fn from_raw(raw_x: Array2<u8>, raw_z: Array2<u8>) -> SyndromeVolume {
        let diff_x = time_diff2(&raw_x);
        let diff_z = time_diff2(&raw_z);
        SyndromeVolume { raw_x, raw_z, diff_x, diff_z }
    }

    pub fn raw(&self, basis: Basis) -> &Array2<u8> {
        match basis {
            Basis::X => &self.raw_x,
            Basis::Z => &self.raw_z,
        }
    }

    pub fn diff(&self, basis: Basis) -> &Array2<u8> {
        match basis {
            Basis::X => &self.diff_x,
            Basis::Z => &self.diff_z,
        }
    }

    pub fn rounds(&self) -> usize {
        self.raw_x.len_of(Axis(0))
    }
}

pub fn time_diff2(a: &Array2<u8>) -> Array2<u8> {
    let mut d = a.clone();
    for k in (1..a.nrows()).rev() {
        for j in 0..a.ncols() {
            d[[k, j]] ^= a[[k - 1, j]];
        }
    }
    d
}

pub fn time_diff3(a: &Array3<u8>) -> Array3<u8> {
    let mut d = a.clone();
    let (n, r, c) = a.dim();
    for k in (1..n).rev() {
        for i in 0..r {
            for j in 0..c {
                d[[k, i, j]] ^= a[[k - 1, i, j]];
            }
        }
    }
    d
}

/// Runs `dm` rounds; only rounds `1..=noisy_rounds` consult the fault source.
pub(crate) fn propagate<S: FaultSource>(
    layout: &CodeLayout,
    dm: usize,
    noisy_rounds: usize,
    src: &mut S,
) -> (ErrorVolume, SyndromeVolume) {
    let n = layout.n_data();
    let nx = layout.x_stabilizers.len();
    let nz = layout.z_stabilizers.len();
    let (dx, dz) = (layout.dx, layout.dz);
    let mut dxf = vec![0u8; n];
    let mut dzf = vec![0u8; n];
    // ancilla frames indexed by kind
    let mut ax = [vec![0u8; nx], vec![0u8; nz]];
    let mut az = [vec![0u8; nx], vec![0u8; nz]];
    let mut cum_x = Array3::<u8>::zeros((dm, dx, dz));
    let mut cum_z = Array3::<u8>::zeros((dm, dx, dz));
    let mut raw_x = Array2::<u8>::zeros((dm, nz));
    let mut raw_z = Array2::<u8>::zeros((dm, nx));

    let kinds = [StabKind::X, StabKind::Z];
    let kidx = |k: StabKind| match k {
        StabKind::X => 0usize,
        StabKind::Z => 1usize,
    };
    let mut used = vec![false; n];

    for round in 1..=dm {
        let noisy = round <= noisy_rounds;
        if noisy {
            for q in 0..n {
                let e = src.single(Location::DataWindow { round, qubit: q });
                dxf[q] ^= e.x();
                dzf[q] ^= e.z();
            }
        }
        for &kind in &kinds {
            let k = kidx(kind);
            for s in 0..layout.stabilizers(kind).len() {
                ax[k][s] = 0;
                az[k][s] = 0;
                if noisy && src.flip(Location::Prep { round, stab: StabRef { kind, index: s } }) {
                    match kind {
                        StabKind::Z => ax[k][s] ^= 1,
                        StabKind::X => az[k][s] ^= 1,
                    }
                }
            }
        }
        for step in 0..4 {
            used.iter_mut().for_each(|u| *u = false);
            for &kind in &kinds {
                let k = kidx(kind);
                for st in layout.stabilizers(kind) {
                    let stab = StabRef { kind, index: st.index };
                    let s = st.index;
                    match st.at_step(step) {
                        Some(q) => {
                            used[q] = true;
                            // X check: ancilla controls; Z check: data controls.
                            let (cx, cz, tx, tz) = match kind {
                                StabKind::X => (&mut ax[k][s], &mut az[k][s], &mut dxf[q], &mut dzf[q]),
                                StabKind::Z => (&mut dxf[q], &mut dzf[q], &mut ax[k][s], &mut az[k][s]),
                            };
                            *tx ^= *cx;
                            *cz ^= *tz;
                            if noisy {
                                let f = src.two(Location::Cnot { round, step, stab });
                                *cx ^= f.control.x();
                                *cz ^= f.control.z();
                                *tx ^= f.target.x();
                                *tz ^= f.target.z();
                            }
                        }
                        None => {
                            if noisy {
                                let e = src.single(Location::AncillaIdle { round, step, stab });
                                ax[k][s] ^= e.x();
                                az[k][s] ^= e.z();
                            }
                        }
                    }
                }
            }
            if noisy {
                for q in 0..n {
                    if !used[q] {
                        let e = src.single(Location::DataIdle { round, step, qubit: q });
                        dxf[q] ^= e.x();
                        dzf[q] ^= e.z();
                    }
                }
            }
        }
        for &kind in &kinds {
            let k = kidx(kind);
            for s in 0..layout.stabilizers(kind).len() {
                let flip = noisy && src.flip(Location::Measure { round, stab: StabRef { kind, index: s } });
                match kind {
                    StabKind::Z => raw_x[[round - 1, s]] = ax[k][s] ^ flip as u8,
                    StabKind::X => raw_z[[round - 1, s]] = az[k][s] ^ flip as u8,
                }
            }
        }
        for q in 0..n {
            cum_x[[round - 1, q / dz, q % dz]] = dxf[q];
            cum_z[[round - 1, q / dz, q % dz]] = dzf[q];
        }
    }
    (ErrorVolume::from_cumulative(cum_x, cum_z), SyndromeVolume::from_raw(raw_x, raw_z))
}

/// All fault locations of rounds `1..=rounds`.
pub fn enumerate_locations(layout: &CodeLayout, rounds: usize) -> Vec<Location> {
    let mut out = Vec::new();
    let n = layout.n_data();
    let kinds = [StabKind::X, StabKind::Z];
    for round in 1..=rounds {
        for q in 0..n {
            out.push(Location::DataWindow { round, qubit: q });
        }
        for &kind in &kinds {
            for s in 0..layout.stabilizers(kind).len() {
                out.push(Location::Prep { round, stab: StabRef { kind, index: s } });
            }
        }
        for step in 0..4 {
            let mut used = vec![false; n];
            for &kind in &kinds {
                for st in layout.stabilizers(kind) {
                    let stab = StabRef { kind, index: st.index };
                    match st.at_step(step) {
                        Some(q) => {
                            used[q] = true;
                            out.push(Location::Cnot { round, step, stab });
                        }
                        None => out.push(Location::AncillaIdle { round, step, stab }),
                    }
                }
            }
            for q in 0..n {
                if !used[q] {
                    out.push(Location::DataIdle { round, step, qubit: q });
                }
            }
        }
        for &kind in &kinds {
            for s in 0..layout.stabilizers(kind).len() {
                out.push(Location::Measure { round, stab: StabRef { kind, index: s } });
            }
        }
    }
    out
}

fn validate(layout: &CodeLayout, dm: usize, loc: &Location, fault: &Fault) -> Result<()> {
    let bad = || Error::InvalidLocation(format!("{loc:?} with {fault:?} (dm = {dm})"));
    let round = loc.round();
    if round == 0 || round >= dm {
        return Err(bad());
    }
    let stab_ok = |s: &StabRef| s.index < layout.stabilizers(s.kind).len();
    let ok = match (loc, fault) {
        (Location::DataWindow { qubit, .. }, Fault::Single(_)) => *qubit < layout.n_data(),
        (Location::Prep { stab, .. }, Fault::Flip) | (Location::Measure { stab, .. }, Fault::Flip) => stab_ok(stab),
        (Location::Cnot { step, stab, .. }, Fault::Two(_)) => {
            *step < 4 && stab_ok(stab) && layout.stab(*stab).at_step(*step).is_some()
        }
        (Location::AncillaIdle { step, stab, .. }, Fault::Single(_)) => {
            *step < 4 && stab_ok(stab) && layout.stab(*stab).at_step(*step).is_none()
        }
        (Location::DataIdle { step, qubit, .. }, Fault::Single(_)) => {
            *step < 4
                && *qubit < layout.n_data()
                && !layout
                    .x_stabilizers
                    .iter()
                    .chain(&layout.z_stabilizers)
                    .any(|s| s.at_step(*step) == Some(*qubit))
        }
        _ => false,
    };
    if ok {
        Ok(())
    } else {
        Err(bad())
    }
}

/// Draws one noisy shot. Identical `(layout, dm, p, seed)` give identical output.
pub fn sample_shot(layout: &CodeLayout, dm: usize, model: NoiseModel, seed: u64) -> (ErrorVolume, SyndromeVolume) {
    let mut rng: ChaCha8Rng = shot_rng(seed, 0);
    sample_with_rng(layout, dm, model, &mut rng)
}

pub fn sample_with_rng<R: Rng>(
    layout: &CodeLayout,
    dm: usize,
    model: NoiseModel,
    rng: &mut R,
) -> (ErrorVolume, SyndromeVolume) {
    let mut src = Sampler { model, rng };
    propagate(layout, dm, dm.saturating_sub(1), &mut src)
}

/// Propagates a deterministic fault set through the same circuit.
pub fn inject_faults(
    layout: &CodeLayout,
    dm: usize,
    faults: &[(Location, Fault)],
) -> Result<(ErrorVolume, SyndromeVolume)> {
    if dm == 0 {
        return Err(Error::InvalidParameter("dm must be >= 1".into()));
    }
    let mut src = Injected::default();
    for (loc, f) in faults {
        validate(layout, dm, loc, f)?;
        if src.faults.insert(*loc, *f).is_some() {
            return Err(Error::InvalidLocation(format!("duplicate fault at {loc:?}")));
        }
    }
    Ok(propagate(layout, dm, dm - 1, &mut src))
}

/// Same as `inject_faults` but also accepts data-window faults in the final
/// round. Used to model corrections applied ahead of the last readout.
pub(crate) fn inject_unchecked(layout: &CodeLayout, dm: usize, faults: &[(Location, Fault)]) -> (ErrorVolume, SyndromeVolume) {
    let src_map: HashMap<Location, Fault> = faults.iter().copied().collect();
    let mut src = Injected { faults: src_map };
    propagate(layout, dm, dm, &mut src)
}

/// Fault draws seen at one location class: how many locations were visited
/// and how often each non-trivial outcome came up. Outcomes are `[X, Y, Z]`
/// for single-qubit classes, the order of `Pauli2::non_trivial` for CNOTs,
/// and a single flip counter for preparation and readout.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ClassTally {
    pub opportunities: u64,
    pub outcomes: Vec<u64>,
}

impl ClassTally {
    pub fn faults(&self) -> u64 {
        self.outcomes.iter().sum()
    }
}

struct Counting<'a, S> {
    inner: S,
    census: &'a mut [ClassTally; 6],
}

impl<S> Counting<'_, S> {
    fn record(&mut self, loc: Location, n: usize, outcome: Option<usize>) {
        let t = &mut self.census[loc.class() as usize];
        if t.outcomes.is_empty() {
            t.outcomes = vec![0; n];
        }
        t.opportunities += 1;
        if let Some(k) = outcome {
            t.outcomes[k] += 1;
        }
    }
}

impl<S: FaultSource> FaultSource for Counting<'_, S> {
    fn single(&mut self, loc: Location) -> Pauli {
        let p = self.inner.single(loc);
        self.record(loc, 3, Pauli::NON_TRIVIAL.iter().position(|&q| q == p));
        p
    }
    fn two(&mut self, loc: Location) -> Pauli2 {
        let p = self.inner.two(loc);
        let k = if p == Pauli2::IDENTITY { None } else { Some(Pauli::ALL.iter().position(|&q| q == p.control).unwrap() * 4 + Pauli::ALL.iter().position(|&q| q == p.target).unwrap() - 1) };
        self.record(loc, 15, k);
        p
    }
    fn flip(&mut self, loc: Location) -> bool {
        let f = self.inner.flip(loc);
        self.record(loc, 1, f.then_some(0));
        f
    }
}

/// Samples `shots` shots exactly as `sample_shot` does and tallies every
/// fault draw the circuit makes, by location class.
pub fn fault_census(layout: &CodeLayout, dm: usize, model: NoiseModel, shots: u64, seed: u64) -> HashMap<LocationClass, ClassTally> {
    let mut census: [ClassTally; 6] = Default::default();
    for i in 0..shots {
        let mut rng: ChaCha8Rng = shot_rng(crate::rng::derive_seed(seed, i), 0);
        let mut src = Counting { inner: Sampler { model, rng: &mut rng }, census: &mut census };
        propagate(layout, dm, dm.saturating_sub(1), &mut src);
    }
    LocationClass::ALL.into_iter().zip(census).filter(|(_, t)| t.opportunities > 0).collect()
}

/// Residual X and Z logical failure after applying a correction to the
/// final data frame. Frames are flattened row-major.
pub fn logical_failure(
    layout: &CodeLayout,
    residual_x: &[u8],
    residual_z: &[u8],
    correction_x: &[u8],
    correction_z: &[u8],
) -> (bool, bool) {
    let rx: Vec<u8> = residual_x.iter().zip(correction_x).map(|(a, b)| a ^ b).collect();
    let rz: Vec<u8> = residual_z.iter().zip(correction_z).map(|(a, b)| a ^ b).collect();
    (layout.flips_logical(Basis::X, &rx), layout.flips_logical(Basis::Z, &rz))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_layout;
    use rand::SeedableRng;

    #[test]
    fn census_matches_location_enumeration() {
        let l = build_layout(3, 3).unwrap();
        let c = fault_census(&l, 4, NoiseModel::new(0.01).unwrap(), 5, 1);
        let locs = enumerate_locations(&l, 3);
        for (class, t) in &c {
            let n = locs.iter().filter(|x| x.class() == *class).count() as u64;
            assert_eq!(t.opportunities, 5 * n, "{class:?}");
        }
        assert_eq!(c.values().map(|t| t.opportunities).sum::<u64>(), 5 * locs.len() as u64);
        // pairs ordering matches Pauli2::non_trivial
        let mut src = Injected::default();
        let loc = locs.iter().find(|x| x.class() == LocationClass::TwoQubitGate).copied().unwrap();
        for (k, p) in Pauli2::non_trivial().into_iter().enumerate() {
            src.faults.insert(loc, Fault::Two(p));
            let mut census: [ClassTally; 6] = Default::default();
            let mut cnt = Counting { inner: &mut src, census: &mut census };
            cnt.two(loc);
            assert_eq!(census[LocationClass::TwoQubitGate as usize].outcomes[k], 1);
        }
    }

    #[test]
    fn determinism() {
        let l = build_layout(3, 3).unwrap();
        let m = NoiseModel::new(0.05).unwrap();
        assert_eq!(sample_shot(&l, 4, m, 99), sample_shot(&l, 4, m, 99));
        assert_ne!(sample_shot(&l, 4, m, 99).1, sample_shot(&l, 4, m, 100).1);
    }

    #[test]
    fn last_round_is_clean() {
        let l = build_layout(3, 5).unwrap();
        let m = NoiseModel::new(0.1).unwrap();
        for seed in 0..50 {
            let (ev, sv) = sample_shot(&l, 3, m, seed);
            let fx = ev.final_frame(Basis::X);
            let fz = ev.final_frame(Basis::Z);
            let last = sv.rounds() - 1;
            let sx: Vec<u8> = sv.raw_x.row(last).to_vec();
            let sz: Vec<u8> = sv.raw_z.row(last).to_vec();
            assert_eq!(sx, l.syndrome(Basis::X, &fx));
            assert_eq!(sz, l.syndrome(Basis::Z, &fz));
        }
    }

    #[test]
    fn zero_noise_is_silent() {
        let l = build_layout(5, 5).unwrap();
        let (ev, sv) = sample_shot(&l, 5, NoiseModel::new(0.0).unwrap(), 1);
        assert!(ev.x_errors.iter().all(|&b| b == 0));
        assert!(sv.raw_z.iter().all(|&b| b == 0));
    }

    #[test]
    fn draw_two_covers_all() {
        let m = NoiseModel::new(1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut seen = std::collections::HashSet::new();
        for _ in 0..2000 {
            seen.insert(m.draw_two(&mut rng));
        }
        assert_eq!(seen.len(), 15);
        assert!(!seen.contains(&Pauli2::IDENTITY));
    }

    #[test]
    fn invalid_locations_rejected() {
        let l = build_layout(3, 3).unwrap();
        let f = Fault::Single(Pauli::X);
        assert!(inject_faults(&l, 3, &[(Location::DataWindow { round: 3, qubit: 0 }, f)]).is_err());
        assert!(inject_faults(&l, 3, &[(Location::DataWindow { round: 1, qubit: 9 }, f)]).is_err());
        let s = StabRef { kind: StabKind::X, index: 0 };
        // top weight-2 X check is idle in steps 0 and 1
        assert!(inject_faults(&l, 3, &[(Location::Cnot { round: 1, step: 0, stab: s }, Fault::Two(Pauli2::IDENTITY))]).is_err());
        assert!(inject_faults(&l, 3, &[(Location::AncillaIdle { round: 1, step: 0, stab: s }, f)]).is_ok());
        assert!(inject_faults(&l, 3, &[(Location::Measure { round: 1, stab: s }, f)]).is_err());
    }

    #[test]
    fn data_x_error_detected_next_round() {
        let l = build_layout(3, 3).unwrap();
        let q = l.qubit(1, 1);
        let (ev, sv) = inject_faults(&l, 3, &[(Location::DataWindow { round: 2, qubit: q }, Fault::Single(Pauli::X))]).unwrap();
        assert_eq!(ev.x_changes.iter().filter(|&&b| b == 1).count(), 1);
        assert_eq!(ev.x_changes[[1, 1, 1]], 1);
        assert_eq!(sv.diff_x.row(1).iter().filter(|&&b| b == 1).count(), 2);
        assert_eq!(sv.diff_x.row(2).iter().filter(|&&b| b == 1).count(), 0);
        assert!(sv.diff_z.iter().all(|&b| b == 0));
    }

    #[test]
    fn location_count_matches_circuit() {
        let l = build_layout(3, 3).unwrap();
        let locs = enumerate_locations(&l, 1);
        let uniq: std::collections::HashSet<_> = locs.iter().collect();
        assert_eq!(uniq.len(), locs.len());
        for loc in &locs {
            let f = match loc.class() {
                LocationClass::TwoQubitGate => Fault::Two(Pauli2::IDENTITY),
                LocationClass::Idle => Fault::Single(Pauli::I),
                _ => Fault::Flip,
            };
            validate(&l, 2, loc, &f).unwrap();
        }
    }
}
