//! Operator-frame strings and their exact propagation through noisy IQP
//! circuits.
//!
//! The single-qubit frame is `{I(a), σ+, σ-}` with `I(a) = |0⟩⟨0| + a|1⟩⟨1|`,
//! `σ+ = |1⟩⟨0|` and `σ- = |0⟩⟨1|`. A [`FrameString`] is a tensor product of
//! frame elements times a complex coefficient. Diagonal gates and amplitude
//! damping map frame strings to (sums of) frame strings while never changing
//! which qubits carry `σ±`.
//!
//! Damping of diagonal slots is applied lazily: each diagonal argument
//! remembers the layer it was last brought up to date, and `r` pending layers
//! are applied in one step via
//! `E^r(I(a)) = (1 + a(1-c)) I(a c / (1 + a(1-c)))`, `c = (1-p)^r`. Slots
//! that no gate has touched share one background argument. Propagating a
//! string therefore costs time proportional to its off-diagonal weight per
//! layer, independent of `n`.

use std::f64::consts::LN_2;

use itertools::Itertools;
use num_complex::Complex64;
use smallvec::SmallVec;
use thiserror::Error;

use crate::circuit::{Circuit, GateKind, MAX_GATE_WIDTH};
use crate::logcoeff::LogComplex;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SlotKind {
    Plus,
    Minus,
    Diag,
}

/// One tensor factor with its current argument.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Slot {
    Plus,
    Minus,
    Diag(Complex64),
}

impl Slot {
    pub fn kind(self) -> SlotKind {
        match self {
            Slot::Plus => SlotKind::Plus,
            Slot::Minus => SlotKind::Minus,
            Slot::Diag(_) => SlotKind::Diag,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FrameError {
    #[error("max off-diagonal count {m} exceeds n={n}")]
    OffDiagonalCountTooLarge { m: usize, n: usize },
    #[error("qubit {qubit} out of range for n={n}")]
    QubitOutOfRange { qubit: usize, n: usize },
    #[error("duplicate target {0}")]
    DuplicateTarget(usize),
    #[error("gate width {0} outside 2..={MAX_GATE_WIDTH}")]
    GateWidth(usize),
    #[error("string has n={string} but circuit has n={circuit}")]
    DimensionMismatch { string: usize, circuit: usize },
    #[error("p must lie in (0,1], got {0}")]
    NoiseOutOfRange(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct DiagArg {
    qubit: u32,
    value: Complex64,
    stamp: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FrameString {
    n: usize,
    plus: SmallVec<[u32; 4]>,
    minus: SmallVec<[u32; 4]>,
    /// Diagonal slots whose argument differs from the background, sorted by qubit.
    args: SmallVec<[DiagArg; 4]>,
    background: Complex64,
    background_stamp: u32,
    /// Damping layers applied so far.
    clock: u32,
    /// Damping strength of the pending layers; 0 before any damping.
    p: f64,
    beta: LogComplex,
    /// Deferred single-qubit rotation phase, applied in [`FrameString::coefficient`].
    phase: f64,
}

const ONE: Complex64 = Complex64::new(1.0, 0.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

impl FrameString {
    /// Builds a string from explicit slots and coefficient.
    pub fn from_slots(slots: &[Slot], beta: Complex64) -> Self {
        let mut s = Self::blank(slots.len(), LogComplex::from_complex(beta));
        for (q, slot) in slots.iter().enumerate() {
            match *slot {
                Slot::Plus => s.plus.push(q as u32),
                Slot::Minus => s.minus.push(q as u32),
                Slot::Diag(a) if a != ONE => s.args.push(DiagArg { qubit: q as u32, value: a, stamp: 0 }),
                Slot::Diag(_) => {}
            }
        }
        s
    }

    fn blank(n: usize, beta: LogComplex) -> Self {
        FrameString {
            n,
            plus: SmallVec::new(),
            minus: SmallVec::new(),
            args: SmallVec::new(),
            background: ONE,
            background_stamp: 0,
            clock: 0,
            p: 0.0,
            beta,
            phase: 0.0,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn plus(&self) -> impl ExactSizeIterator<Item = usize> + '_ {
        self.plus.iter().map(|&q| q as usize)
    }

    pub fn minus(&self) -> impl ExactSizeIterator<Item = usize> + '_ {
        self.minus.iter().map(|&q| q as usize)
    }

    /// Number of `σ±` slots.
    pub fn offdiag_weight(&self) -> usize {
        self.plus.len() + self.minus.len()
    }

    pub fn kind(&self, q: usize) -> SlotKind {
        let q = q as u32;
        if self.plus.binary_search(&q).is_ok() {
            SlotKind::Plus
        } else if self.minus.binary_search(&q).is_ok() {
            SlotKind::Minus
        } else {
            SlotKind::Diag
        }
    }

    pub fn slot(&self, q: usize) -> Slot {
        match self.kind(q) {
            SlotKind::Plus => Slot::Plus,
            SlotKind::Minus => Slot::Minus,
            SlotKind::Diag => Slot::Diag(self.diag_value(q)),
        }
    }

    pub fn slots(&self) -> Vec<Slot> {
        (0..self.n).map(|q| self.slot(q)).collect()
    }

    /// Current argument of every diagonal slot, in qubit order.
    pub fn diag_args(&self) -> Vec<(usize, Complex64)> {
        let background = self.settled_value(self.background, self.background_stamp).0;
        let mut explicit = self.args.iter().peekable();
        (0..self.n)
            .filter(|&q| self.kind(q) == SlotKind::Diag)
            .map(|q| match explicit.peek() {
                Some(a) if a.qubit as usize == q => {
                    let a = explicit.next().expect("peeked");
                    (q, self.settled_value(a.value, a.stamp).0)
                }
                _ => (q, background),
            })
            .collect()
    }

    fn diag_value(&self, q: usize) -> Complex64 {
        match self.args.binary_search_by_key(&(q as u32), |a| a.qubit) {
            Ok(i) => self.settled_value(self.args[i].value, self.args[i].stamp).0,
            Err(_) => self.settled_value(self.background, self.background_stamp).0,
        }
    }

    fn background_count(&self) -> u64 {
        (self.n - self.plus.len() - self.minus.len() - self.args.len()) as u64
    }

    /// Full coefficient including pending damping factors and the deferred phase.
    pub fn log_coefficient(&self) -> LogComplex {
        let mut beta = self.beta;
        for a in &self.args {
            beta = beta.mul_complex(self.settled_value(a.value, a.stamp).1);
        }
        let (_, f) = self.settled_value(self.background, self.background_stamp);
        if f != ONE {
            beta = beta.mul(LogComplex::from_complex(f).powu(self.background_count()));
        }
        beta.rotate(self.phase)
    }

    pub fn coefficient(&self) -> Complex64 {
        self.log_coefficient().to_complex()
    }

    /// Total deferred single-qubit rotation phase.
    pub fn accumulated_phase(&self) -> f64 {
        self.phase
    }

    pub fn is_zero(&self) -> bool {
        self.beta.is_zero()
    }

    /// Slotwise adjoint: `σ+ ↔ σ-`, conjugated arguments and coefficient.
    pub fn adjoint(&self) -> FrameString {
        let mut out = self.clone();
        std::mem::swap(&mut out.plus, &mut out.minus);
        for a in &mut out.args {
            a.value = a.value.conj();
        }
        out.background = out.background.conj();
        out.beta = out.beta.conj();
        out.phase = -out.phase;
        out
    }

    /// `(new value, β factor)` after bringing an argument stamped at `stamp`
    /// up to the current clock.
    fn settled_value(&self, value: Complex64, stamp: u32) -> (Complex64, Complex64) {
        let r = self.clock - stamp;
        if r == 0 || value == ZERO {
            return (value, ONE);
        }
        let c = (1.0 - self.p).powi(r as i32);
        let factor = ONE + value * (1.0 - c);
        if factor == ZERO {
            (ZERO, ZERO)
        } else {
            (value * c / factor, factor)
        }
    }

    fn settle_background(&mut self) {
        let (value, factor) = self.settled_value(self.background, self.background_stamp);
        if factor != ONE {
            self.beta = self.beta.mul(LogComplex::from_complex(factor).powu(self.background_count()));
        }
        self.background = value;
        self.background_stamp = self.clock;
    }

    /// Brings the argument of diagonal slot `q` up to date and returns its index in `args`.
    fn touch(&mut self, q: u32) -> usize {
        match self.args.binary_search_by_key(&q, |a| a.qubit) {
            Ok(i) => {
                let (value, factor) = self.settled_value(self.args[i].value, self.args[i].stamp);
                if factor != ONE {
                    self.beta = self.beta.mul_complex(factor);
                }
                self.args[i].value = value;
                self.args[i].stamp = self.clock;
                i
            }
            Err(i) => {
                self.settle_background();
                self.args.insert(i, DiagArg { qubit: q, value: self.background, stamp: self.clock });
                i
            }
        }
    }

    /// Applies every pending damping factor so the stored state is explicit.
    pub fn settle(&mut self) {
        for i in 0..self.args.len() {
            let q = self.args[i].qubit;
            self.touch(q);
        }
        self.settle_background();
    }

    pub(crate) fn rotate_in_place(&mut self, q: usize, theta: f64) {
        match self.kind(q) {
            SlotKind::Plus => self.phase -= 2.0 * theta,
            SlotKind::Minus => self.phase += 2.0 * theta,
            SlotKind::Diag => {}
        }
    }

    /// Conjugates by the controlled phase on `targets`. The string itself
    /// becomes the first branch; any further branches are returned.
    pub(crate) fn phase_gate_in_place(&mut self, targets: &[usize], theta: f64) -> Vec<FrameString> {
        let (mut np, mut nm) = (0, 0);
        let mut diag: SmallVec<[u32; MAX_GATE_WIDTH]> = SmallVec::new();
        for &q in targets {
            match self.kind(q) {
                SlotKind::Plus => np += 1,
                SlotKind::Minus => nm += 1,
                SlotKind::Diag => diag.push(q as u32),
            }
        }
        // With no σ± the ket and bra phases cancel; with both signs neither
        // the ket nor the bra can be all ones on the targets.
        if np + nm == 0 || (np > 0 && nm > 0) {
            return Vec::new();
        }
        let phi = if np > 0 { theta } else { -theta };
        match diag.len() {
            0 => {
                self.beta = self.beta.rotate(phi);
                Vec::new()
            }
            1 => {
                let i = self.touch(diag[0]);
                self.args[i].value *= Complex64::from_polar(1.0, phi);
                Vec::new()
            }
            m => {
                for &q in &diag {
                    self.touch(q);
                }
                // Touching may insert, so indices are looked up only afterwards.
                let idx: SmallVec<[usize; MAX_GATE_WIDTH]> = diag
                    .iter()
                    .map(|&q| self.args.binary_search_by_key(&q, |a| a.qubit).expect("touched"))
                    .collect();
                let w = Complex64::from_polar(1.0, phi) - ONE;
                if w == ZERO || idx.iter().any(|&i| self.args[i].value == ZERO) {
                    return Vec::new();
                }
                // Σ over x of (-1)^|x| ⊗ I((-1)^{x_i} a_i) = 2^m Π a_i|1⟩⟨1|.
                let weight = LogComplex::from_complex(w).scale_ln(-(m as f64) * LN_2);
                (0..1u32 << m)
                    .map(|x| {
                        let mut b = self.clone();
                        for (bit, &i) in idx.iter().enumerate() {
                            if x >> bit & 1 == 1 {
                                b.args[i].value = -b.args[i].value;
                            }
                        }
                        b.beta = b.beta.mul(weight);
                        if x.count_ones() % 2 == 1 {
                            b.beta = b.beta.rotate(std::f64::consts::PI);
                        }
                        b
                    })
                    .collect()
            }
        }
    }

    pub(crate) fn damp_in_place(&mut self, p: f64) {
        if self.p != p {
            self.settle();
            self.p = p;
        }
        self.clock += 1;
        let m = self.offdiag_weight();
        if m > 0 {
            self.beta = self.beta.scale_ln(0.5 * m as f64 * (1.0 - p).ln());
        }
    }

    /// Renames qubit `q` to `perm.image(q)`.
    pub fn relabeled(&self, perm: &Permutation) -> FrameString {
        let mut out = self.clone();
        let map = |v: &SmallVec<[u32; 4]>| {
            let mut w: SmallVec<[u32; 4]> = v.iter().map(|&q| perm.image(q as usize) as u32).collect();
            w.sort_unstable();
            w
        };
        out.plus = map(&self.plus);
        out.minus = map(&self.minus);
        for a in &mut out.args {
            a.qubit = perm.image(a.qubit as usize) as u32;
        }
        out.args.sort_unstable_by_key(|a| a.qubit);
        out
    }

    fn check_qubit(&self, q: usize) -> Result<(), FrameError> {
        if q < self.n {
            Ok(())
        } else {
            Err(FrameError::QubitOutOfRange { qubit: q, n: self.n })
        }
    }
}

/// Frame strings produced from one input, with branch weights folded into
/// each string's coefficient.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BranchSet(Vec<FrameString>);

impl BranchSet {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, FrameString> {
        self.0.iter()
    }

    pub fn as_slice(&self) -> &[FrameString] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<FrameString> {
        self.0
    }
}

impl IntoIterator for BranchSet {
    type Item = FrameString;
    type IntoIter = std::vec::IntoIter<FrameString>;
    fn into_iter(self) -> Self::IntoIter {
        self.0.into_iter()
    }
}

impl<'a> IntoIterator for &'a BranchSet {
    type Item = &'a FrameString;
    type IntoIter = std::slice::Iter<'a, FrameString>;
    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

/// Number of strings in the expansion of `|+⟩⟨+|^n` with at most `m` `σ±` slots.
pub fn initial_string_count(n: usize, m: usize) -> u128 {
    (0..=m.min(n)).map(|j| binomial(n, j).saturating_mul(1u128 << j.min(127))).fold(0u128, u128::saturating_add)
}

pub(crate) fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

fn initial_beta(n: usize) -> LogComplex {
    LogComplex::from_polar(-(n as f64) * LN_2, 0.0)
}

fn strings_with_offdiag(n: usize, j: usize, representatives_only: bool) -> impl Iterator<Item = FrameString> {
    let beta = initial_beta(n);
    (0..n).combinations(j).flat_map(move |positions| {
        // Sign pattern in lexicographic order, first position most significant; 0 is σ+.
        let patterns = if representatives_only && j > 0 { 1u64 << (j - 1) } else { 1u64 << j };
        (0..patterns).map(move |x| {
            let mut s = FrameString::blank(n, beta);
            for (i, &q) in positions.iter().enumerate() {
                if x >> (j - 1 - i) & 1 == 0 {
                    s.plus.push(q as u32);
                } else {
                    s.minus.push(q as u32);
                }
            }
            s
        })
    })
}

/// Every string of `2^-n (I(1) + σ+ + σ-)^{⊗n}` with at most `m` off-diagonal
/// slots, ordered by off-diagonal count, then positions, then sign pattern.
pub fn initial_strings(n: usize, m: usize) -> Result<impl Iterator<Item = FrameString>, FrameError> {
    if m > n {
        return Err(FrameError::OffDiagonalCountTooLarge { m, n });
    }
    Ok((0..=m).flat_map(move |j| strings_with_offdiag(n, j, false)))
}

/// The subset of [`initial_strings`] whose first off-diagonal slot is `σ+`.
/// Every other string is the adjoint of exactly one of these.
pub fn initial_representatives(n: usize, m: usize) -> Result<impl Iterator<Item = FrameString>, FrameError> {
    if m > n {
        return Err(FrameError::OffDiagonalCountTooLarge { m, n });
    }
    Ok((0..=m).flat_map(move |j| strings_with_offdiag(n, j, true)))
}

pub fn apply_single_qubit_rotation(s: &FrameString, qubit: usize, theta: f64) -> Result<FrameString, FrameError> {
    s.check_qubit(qubit)?;
    let mut out = s.clone();
    out.rotate_in_place(qubit, theta);
    Ok(out)
}

pub fn apply_cphase2(s: &FrameString, q1: usize, q2: usize, theta: f64) -> Result<FrameString, FrameError> {
    s.check_qubit(q1)?;
    s.check_qubit(q2)?;
    if q1 == q2 {
        return Err(FrameError::DuplicateTarget(q1));
    }
    let mut out = s.clone();
    let extra = out.phase_gate_in_place(&[q1, q2], theta);
    debug_assert!(extra.is_empty());
    Ok(out)
}

pub fn llocal_branch(s: &FrameString, targets: &[usize], theta: f64) -> Result<BranchSet, FrameError> {
    if !(2..=MAX_GATE_WIDTH).contains(&targets.len()) {
        return Err(FrameError::GateWidth(targets.len()));
    }
    for (i, &q) in targets.iter().enumerate() {
        s.check_qubit(q)?;
        if targets[..i].contains(&q) {
            return Err(FrameError::DuplicateTarget(q));
        }
    }
    let mut first = s.clone();
    let extra = first.phase_gate_in_place(targets, theta);
    if extra.is_empty() {
        Ok(BranchSet(vec![first]))
    } else {
        let mut all = Vec::with_capacity(extra.len() + 1);
        all.push(first);
        all.extend(extra);
        Ok(BranchSet(all))
    }
}

pub fn apply_damping_layer(s: &FrameString, p: f64) -> Result<FrameString, FrameError> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(FrameError::NoiseOutOfRange(p));
    }
    let mut out = s.clone();
    out.damp_in_place(p);
    Ok(out)
}

/// Propagates one string through a circuit. Builds a [`Propagator`] each call.
pub fn propagate(s: &FrameString, c: &Circuit) -> Result<BranchSet, FrameError> {
    Propagator::new(c).propagate(s)
}

const NO_GATE: u32 = u32::MAX;

/// Per-circuit lookup tables for propagating many strings.
pub struct Propagator<'c> {
    circuit: &'c Circuit,
    /// `owner[l * n + q]`: index in layer `l` of the controlled phase acting on `q`.
    owner: Vec<u32>,
    /// Total single-qubit rotation angle per qubit over the whole circuit.
    rotation: Vec<f64>,
}

impl<'c> Propagator<'c> {
    /// `circuit` must be valid.
    pub fn new(circuit: &'c Circuit) -> Self {
        let n = circuit.n();
        let mut owner = vec![NO_GATE; n * circuit.depth()];
        let mut rotation = vec![0.0; n];
        for (l, layer) in circuit.layers().iter().enumerate() {
            for (g, gate) in layer.iter().enumerate() {
                match gate.kind() {
                    GateKind::SingleQubitZRotation => rotation[gate.targets()[0]] += gate.phase(),
                    GateKind::ControlledPhase => {
                        for &q in gate.targets() {
                            owner[l * n + q] = g as u32;
                        }
                    }
                }
            }
        }
        Propagator { circuit, owner, rotation }
    }

    pub fn circuit(&self) -> &'c Circuit {
        self.circuit
    }

    /// Applies controlled phases and damping layer by layer, then the
    /// deferred rotations; rotations commute with everything else here
    /// because they only rephase `σ±`. Strings whose coefficient vanishes
    /// are dropped. Output strings are settled.
    pub fn propagate(&self, s: &FrameString) -> Result<BranchSet, FrameError> {
        let c = self.circuit;
        if s.n != c.n() {
            return Err(FrameError::DimensionMismatch { string: s.n, circuit: c.n() });
        }
        let n = c.n();
        let p = c.p();
        let offdiag: SmallVec<[u32; 8]> = s.plus.iter().chain(&s.minus).copied().collect();
        let mut work = vec![s.clone()];
        for (l, layer) in c.layers().iter().enumerate() {
            let owners = &self.owner[l * n..(l + 1) * n];
            let mut gates: SmallVec<[u32; 8]> =
                offdiag.iter().map(|&q| owners[q as usize]).filter(|&g| g != NO_GATE).collect();
            gates.sort_unstable();
            gates.dedup();
            for &g in &gates {
                let gate = &layer[g as usize];
                let len = work.len();
                for i in 0..len {
                    let extra = work[i].phase_gate_in_place(gate.targets(), gate.phase());
                    work.extend(extra);
                }
            }
            for w in &mut work {
                w.damp_in_place(p);
            }
            work.retain(|w| !w.is_zero());
            if work.is_empty() {
                break;
            }
        }
        let phase: f64 = s.plus.iter().map(|&q| -2.0 * self.rotation[q as usize]).sum::<f64>()
            + s.minus.iter().map(|&q| 2.0 * self.rotation[q as usize]).sum::<f64>();
        for w in &mut work {
            w.phase += phase;
            w.settle();
        }
        work.retain(|w| !w.is_zero());
        Ok(BranchSet(work))
    }
}

/// A relabeling of qubits: qubit `q` becomes `image(q)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Permutation(Vec<usize>);

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Permutation((0..n).collect())
    }

    /// `None` unless `images` is a permutation of `0..images.len()`.
    pub fn new(images: Vec<usize>) -> Option<Self> {
        let mut seen = vec![false; images.len()];
        for &q in &images {
            if q >= images.len() || std::mem::replace(&mut seen[q], true) {
                return None;
            }
        }
        Some(Permutation(images))
    }

    pub fn image(&self, q: usize) -> usize {
        self.0[q]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.0.len()];
        for (q, &t) in self.0.iter().enumerate() {
            inv[t] = q;
        }
        Permutation(inv)
    }

    /// `self` first, then `next`.
    pub fn then(&self, next: &Permutation) -> Permutation {
        Permutation(self.0.iter().map(|&t| next.0[t]).collect())
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().enumerate().all(|(q, &t)| q == t)
    }
}

/// Reorders qubits so all `σ+` slots come first, then `σ-`, then diagonal
/// slots, each group in ascending qubit order.
pub fn canonicalize(s: &FrameString) -> (Permutation, FrameString) {
    let mut images = vec![0; s.n];
    let mut next = 0;
    for kind in [SlotKind::Plus, SlotKind::Minus, SlotKind::Diag] {
        for (q, image) in images.iter_mut().enumerate() {
            if s.kind(q) == kind {
                *image = next;
                next += 1;
            }
        }
    }
    let perm = Permutation(images);
    let out = s.relabeled(&perm);
    (perm, out)
}
