//! Sampling from the Hadamard-basis diagonal of a truncated state.
//!
//! For a coefficient table `σ = Σ α_(a,b) |a⟩⟨b|`, the quasiprobability of
//! outcome `x` (bit `q` is 1 when qubit `q` is measured in `|−⟩`) is
//!
//! `q(x) = ⟨x|H σ H|x⟩ = 2^-n Σ_s F(s) (-1)^{s·x}`, `F(s) = Σ_{a⊕b=s} α_(a,b)`.
//!
//! `F` is stored directly; the Fourier coefficients `q̃(s) = 2^-n F(s)` are
//! only formed on request because they underflow for large `n`. The mass of
//! a prefix `y` of length `j` is `S_y = 2^-j Σ_{s ⊆ [0,j)} F(s) (-1)^{y·s}`.

use std::collections::HashMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::bits::Bits;
use crate::hw::HwTable;

/// Largest `|Im F(s)|` tolerated when building a [`QuasiDistribution`].
pub const IMAGINARY_TOLERANCE: f64 = 1e-12;

/// Largest `n` for which [`induced_distribution`] enumerates outcomes.
pub const MAX_INDUCED_QUBITS: usize = 12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SamplerError {
    #[error("coefficient table is not Hermitian: Fourier coefficient of {frequency} has imaginary part {imaginary:e}")]
    NotHermitian { frequency: String, imaginary: f64 },
    #[error("prefix length {len} exceeds n={n}")]
    PrefixTooLong { len: usize, n: usize },
    #[error("quasidistribution has nonpositive mass {0}")]
    NonpositiveMass(f64),
    #[error("exact induced distribution needs n <= {MAX_INDUCED_QUBITS}, got {0}")]
    TooManyQubits(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuasiDistribution {
    n: usize,
    /// `(s, F(s))`, sorted by the largest set position of `s` (empty first),
    /// then by `s`.
    terms: Vec<(Bits, f64)>,
}

impl QuasiDistribution {
    /// Builds from unnormalized Fourier weights `F(s)`.
    pub fn from_weights(n: usize, weights: impl IntoIterator<Item = (Bits, f64)>) -> Self {
        let mut acc: HashMap<Bits, f64> = HashMap::new();
        for (s, f) in weights {
            *acc.entry(s).or_default() += f;
        }
        let mut terms: Vec<(Bits, f64)> = acc.into_iter().filter(|(_, f)| *f != 0.0).collect();
        terms.sort_by(|a, b| a.0.max_position().cmp(&b.0.max_position()).then_with(|| a.0.cmp(&b.0)));
        QuasiDistribution { n, terms }
    }

    /// The uniform distribution.
    pub fn uniform(n: usize) -> Self {
        Self::from_weights(n, [(Bits::new(), 1.0)])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn support_size(&self) -> usize {
        self.terms.len()
    }

    /// `(s, F(s))` pairs.
    pub fn weights(&self) -> &[(Bits, f64)] {
        &self.terms
    }

    /// `F(s)`.
    pub fn weight(&self, s: &Bits) -> f64 {
        self.terms.iter().find(|(t, _)| t == s).map_or(0.0, |(_, f)| *f)
    }

    /// `q̃(s) = 2^-n F(s)`.
    pub fn fourier_coefficient(&self, s: &Bits) -> f64 {
        self.weight(s) * 0.5f64.powi(self.n as i32)
    }

    /// `Σ_x q(x) = F(0)`.
    pub fn total_mass(&self) -> f64 {
        self.weight(&Bits::new())
    }

    /// `q(x)`.
    pub fn probability(&self, x: &Bits) -> f64 {
        let sum: f64 = self.terms.iter().map(|(s, f)| if s.dot_parity(x) { -f } else { *f }).sum();
        sum * 0.5f64.powi(self.n as i32)
    }

    /// `S_y` for the prefix holding the first `len` bits of `y`.
    pub fn marginal(&self, y: &Bits, len: usize) -> Result<f64, SamplerError> {
        if len > self.n {
            return Err(SamplerError::PrefixTooLong { len, n: self.n });
        }
        let sum: f64 = self
            .terms
            .iter()
            .take_while(|(s, _)| s.max_position().is_none_or(|m| m < len))
            .map(|(s, f)| if s.dot_parity(y) { -f } else { *f })
            .sum();
        Ok(sum * 0.5f64.powi(len as i32))
    }

    /// `S_y` for a `0`/`1` prefix string.
    pub fn marginal_str(&self, prefix: &str) -> Result<f64, SamplerError> {
        let y = Bits::parse_bitstring(prefix).unwrap_or_default();
        self.marginal(&y, prefix.len())
    }

    fn check_mass(&self) -> Result<(), SamplerError> {
        let mass = self.total_mass();
        if mass > 0.0 {
            Ok(())
        } else {
            Err(SamplerError::NonpositiveMass(mass))
        }
    }

    /// Walks the bit tree along `choose`, which receives the step and the
    /// two children's unnormalized masks.
    fn walk(&self, mut choose: impl FnMut(usize, f64, f64) -> bool) -> Bits {
        let mut y = Bits::new();
        // `running` is 2^i S_y over the current prefix; `at` indexes the first
        // term with largest position ≥ i.
        let mut running = 0.0;
        let mut at = 0;
        while at < self.terms.len() && self.terms[at].0.is_empty() {
            running += self.terms[at].1;
            at += 1;
        }
        for i in 0..self.n {
            let mut branch = 0.0;
            let start = at;
            while at < self.terms.len() && self.terms[at].0.max_position() == Some(i) {
                let (s, f) = &self.terms[at];
                branch += if s.dot_parity(&y) { -f } else { *f };
                at += 1;
            }
            // 2^{i+1} S_{y0} and 2^{i+1} S_{y1}.
            let (u0, u1) = (running + branch, running - branch);
            let one = choose(i, u0, u1);
            if one {
                y.insert(i);
                running = u1;
            } else {
                running = u0;
            }
            debug_assert!(start <= at);
        }
        y
    }
}

/// One bit decision of the sampler.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SampleStep {
    /// Position of the decided bit.
    pub position: usize,
    /// `S_{y0}` and `S_{y1}` for the prefix `y` before this step.
    pub s0: f64,
    pub s1: f64,
    /// The chosen bit.
    pub bit: bool,
    /// Whether the bit was forced by a negative sibling.
    pub forced: bool,
}

/// Probability of choosing bit 1 given unnormalized children `(u0, u1)`,
/// and whether the choice is forced.
///
/// A negative child is never entered. If both are negative the larger is
/// taken. If both are zero the bit is uniform.
fn transition(u0: f64, u1: f64) -> (f64, bool) {
    match (u0 < 0.0, u1 < 0.0) {
        (true, true) => (if u1 > u0 { 1.0 } else { 0.0 }, true),
        (true, false) => (1.0, true),
        (false, true) => (0.0, true),
        (false, false) if u0 + u1 == 0.0 => (0.5, false),
        (false, false) => (u1 / (u0 + u1), false),
    }
}

/// Fourier weights of a coefficient table's Hadamard-basis diagonal.
pub fn fourier_table(table: &HwTable) -> Result<QuasiDistribution, SamplerError> {
    let mut acc: HashMap<Bits, Complex64> = HashMap::new();
    for (index, value) in table.iter() {
        *acc.entry(index.frequency()).or_default() += value;
    }
    let mut weights = Vec::with_capacity(acc.len());
    for (s, f) in acc {
        if f.im.abs() > IMAGINARY_TOLERANCE {
            return Err(SamplerError::NotHermitian { frequency: s.to_bitstring(table.n()), imaginary: f.im });
        }
        weights.push((s, f.re));
    }
    Ok(QuasiDistribution::from_weights(table.n(), weights))
}

fn scale(i: usize) -> f64 {
    0.5f64.powi(i as i32 + 1)
}

/// Draws one outcome, recording every decision.
pub fn sample_with_trace(qd: &QuasiDistribution, rng: &mut impl Rng) -> Result<(Bits, Vec<SampleStep>), SamplerError> {
    qd.check_mass()?;
    let mut steps = Vec::with_capacity(qd.n);
    let y = qd.walk(|i, u0, u1| {
        let (p1, forced) = transition(u0, u1);
        let bit = if forced || p1 == 0.0 || p1 == 1.0 { p1 == 1.0 } else { rng.gen::<f64>() < p1 };
        steps.push(SampleStep { position: i, s0: u0 * scale(i), s1: u1 * scale(i), bit, forced });
        bit
    });
    Ok((y, steps))
}

/// `count` outcomes from a generator seeded with `seed`.
pub fn sample(qd: &QuasiDistribution, count: usize, seed: u64) -> Result<Vec<Bits>, SamplerError> {
    qd.check_mass()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..count).map(|_| sample_one(qd, &mut rng)).collect())
}

fn sample_one(qd: &QuasiDistribution, rng: &mut impl Rng) -> Bits {
    qd.walk(|_, u0, u1| {
        let (p1, forced) = transition(u0, u1);
        if forced || p1 == 0.0 || p1 == 1.0 {
            p1 == 1.0
        } else {
            rng.gen::<f64>() < p1
        }
    })
}

/// Exact output distribution of [`sample`], indexed by outcome with bit `q`
/// of the index holding qubit `q`.
pub fn induced_distribution(qd: &QuasiDistribution) -> Result<Vec<f64>, SamplerError> {
    if qd.n > MAX_INDUCED_QUBITS {
        return Err(SamplerError::TooManyQubits(qd.n));
    }
    qd.check_mass()?;
    let mut out = vec![0.0; 1 << qd.n];
    descend(qd, Bits::new(), 0, 1.0, &mut out);
    Ok(out)
}

fn descend(qd: &QuasiDistribution, y: Bits, len: usize, prob: f64, out: &mut [f64]) {
    if prob == 0.0 {
        return;
    }
    if len == qd.n {
        out[y.to_mask()] += prob;
        return;
    }
    let s0 = qd.marginal(&y, len + 1).expect("in range");
    let mut y1 = y.clone();
    y1.insert(len);
    let s1 = qd.marginal(&y1, len + 1).expect("in range");
    let (p1, _) = transition(s0, s1);
    descend(qd, y, len + 1, prob * (1.0 - p1), out);
    descend(qd, y1, len + 1, prob * p1, out);
}
