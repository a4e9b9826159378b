//! The Hamming-weight basis of operators and sparse coefficient tables.
//!
//! A basis element is `|a⟩⟨b|` for bit strings `a` (ket) and `b` (bra). Its
//! weight is `|a| + |b|` and its zero blocks are the positions where both
//! bits are 0, i.e. the tensor factors equal to `|0⟩⟨0|`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use itertools::Itertools;
use num_complex::Complex64;
use thiserror::Error;

use crate::bits::Bits;
use crate::frame::{binomial, FrameString};
use crate::numfmt::fmt_g17;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HwError {
    #[error("weight {h} outside 0..={max} for n={n}", max = 2 * n)]
    WeightOutOfRange { h: usize, n: usize },
    #[error("zero-block count {r} outside {lo}..={hi} for weight {h}, n={n}")]
    ZeroBlocksOutOfRange { h: usize, r: usize, n: usize, lo: usize, hi: usize },
    #[error("count overflows 128 bits")]
    Overflow,
    #[error("string has n={string} but table has n={table}")]
    DimensionMismatch { string: usize, table: usize },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct HwIndex {
    ket: Bits,
    bra: Bits,
}

impl HwIndex {
    pub fn new(ket: Bits, bra: Bits) -> Self {
        HwIndex { ket, bra }
    }

    pub fn ket(&self) -> &Bits {
        &self.ket
    }

    pub fn bra(&self) -> &Bits {
        &self.bra
    }

    pub fn weight(&self) -> usize {
        self.ket.weight() + self.bra.weight()
    }

    pub fn zero_blocks(&self, n: usize) -> usize {
        n - self.ket.union(&self.bra).weight()
    }

    /// Index of `|b⟩⟨a|`.
    pub fn adjoint(&self) -> HwIndex {
        HwIndex { ket: self.bra.clone(), bra: self.ket.clone() }
    }

    /// Fourier frequency `a ⊕ b` of the Hadamard-basis diagonal.
    pub fn frequency(&self) -> Bits {
        self.ket.xor(&self.bra)
    }
}

impl Ord for HwIndex {
    /// Weight first, then ket, then bra, each in rendered-string order.
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.weight()
            .cmp(&other.weight())
            .then_with(|| self.ket.cmp(&other.ket))
            .then_with(|| self.bra.cmp(&other.bra))
    }
}

impl PartialOrd for HwIndex {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// `(μ_h, l_h)`: the largest and smallest zero-block count among weight-`h`
/// operators on `n` qubits.
pub fn zero_block_range(h: usize, n: usize) -> Result<(usize, usize), HwError> {
    if h > 2 * n {
        return Err(HwError::WeightOutOfRange { h, n });
    }
    Ok((n - h.div_ceil(2), n.saturating_sub(h)))
}

/// Number of weight-`h` operators on `n` qubits with exactly `r` zero blocks.
pub fn count_weight_h_with_r_zeroblocks(h: usize, r: usize, n: usize) -> Result<u128, HwError> {
    let (hi, lo) = zero_block_range(h, n)?;
    if r < lo || r > hi {
        return Err(HwError::ZeroBlocksOutOfRange { h, r, n, lo, hi });
    }
    let j = hi - r;
    // 2j (even h) or 2j+1 (odd h) single-sided positions, each |1⟩⟨0| or |0⟩⟨1|.
    let (support, single) = if h.is_multiple_of(2) { (h / 2 + j, 2 * j) } else { (h.div_ceil(2) + j, 2 * j + 1) };
    let sides = 1u128.checked_shl(single as u32).filter(|_| single < 128).ok_or(HwError::Overflow)?;
    let a = binomial(n, support);
    let b = binomial(support, single);
    if a == u128::MAX || b == u128::MAX {
        return Err(HwError::Overflow);
    }
    a.checked_mul(b).and_then(|x| x.checked_mul(sides)).ok_or(HwError::Overflow)
}

/// Sparse map from basis index to coefficient, restricted to weight ≤ k.
#[derive(Clone, Debug, PartialEq)]
pub struct HwTable {
    n: usize,
    k: usize,
    entries: BTreeMap<HwIndex, Complex64>,
}

impl HwTable {
    pub fn new(n: usize, k: usize) -> Self {
        HwTable { n, k, entries: BTreeMap::new() }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn cutoff(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Coefficient of `index`; zero when absent.
    pub fn get(&self, index: &HwIndex) -> Complex64 {
        self.entries.get(index).copied().unwrap_or_default()
    }

    /// Entries in (weight, ket, bra) order.
    pub fn iter(&self) -> impl Iterator<Item = (&HwIndex, Complex64)> {
        self.entries.iter().map(|(i, &v)| (i, v))
    }

    /// Adds `value` at `index`; indices above the cutoff are ignored.
    pub fn add(&mut self, index: HwIndex, value: Complex64) {
        if index.weight() <= self.k {
            *self.entries.entry(index).or_default() += value;
        }
    }

    pub fn merge(&mut self, other: HwTable) {
        for (i, v) in other.entries {
            self.add(i, v);
        }
    }

    /// Adds the basis expansion of a settled frame string, truncated at the
    /// cutoff. With `mirror`, also adds the adjoint string's contribution.
    ///
    /// A string with `σ+` on `P`, `σ-` on `M` and arguments `a_t` on its
    /// diagonal slots expands to `Σ_S β Π_{t∈S} a_t |P∪S⟩⟨M∪S|` over subsets
    /// `S` of diagonal slots, so only `|S| ≤ (k - |P| - |M|)/2` survive.
    pub fn add_string(&mut self, s: &FrameString, mirror: bool) -> Result<(), HwError> {
        for (index, value) in contributions(s, self.k, self.n)? {
            if mirror && s.offdiag_weight() > 0 {
                self.add(index.adjoint(), value.conj());
            }
            self.add(index, value);
        }
        Ok(())
    }

    /// Copy restricted to weight ≤ `k`.
    pub fn truncated(&self, k: usize) -> HwTable {
        HwTable {
            n: self.n,
            k: k.min(self.k),
            entries: self.entries.iter().filter(|(i, _)| i.weight() <= k).map(|(i, &v)| (i.clone(), v)).collect(),
        }
    }

    /// Sum of diagonal (`ket == bra`) coefficients.
    pub fn trace(&self) -> Complex64 {
        self.entries.iter().filter(|(i, _)| i.ket == i.bra).map(|(_, &v)| v).sum()
    }

    /// Largest `|α(a,b) - conj(α(b,a))|` over the table.
    pub fn hermiticity_defect(&self) -> f64 {
        self.entries.iter().map(|(i, &v)| (v - self.get(&i.adjoint()).conj()).norm()).fold(0.0, f64::max)
    }

    /// One line per entry, `<ket> <bra> <re> <im>`, sorted by (weight, ket, bra).
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (i, v) in self.iter() {
            let _ = writeln!(out, "{} {} {} {}", i.ket.to_bitstring(self.n), i.bra.to_bitstring(self.n), fmt_g17(v.re), fmt_g17(v.im));
        }
        out
    }

    pub fn parse(text: &str, n: usize, k: usize) -> Result<HwTable, HwError> {
        let mut table = HwTable::new(n, k);
        for (i, line) in text.lines().enumerate() {
            let err = |message: String| HwError::Parse { line: i + 1, message };
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.is_empty() {
                continue;
            }
            let [ket, bra, re, im] = fields[..] else {
                return Err(err(format!("expected 4 fields, found {}", fields.len())));
            };
            let bits = |s: &str| {
                if s.len() != n {
                    return Err(err(format!("bit string `{s}` does not have length {n}")));
                }
                Bits::parse_bitstring(s).ok_or_else(|| err(format!("invalid bit string `{s}`")))
            };
            let num = |s: &str| s.parse::<f64>().map_err(|_| err(format!("invalid number `{s}`")));
            let index = HwIndex::new(bits(ket)?, bits(bra)?);
            if index.weight() > k {
                return Err(err(format!("entry of weight {} exceeds cutoff {k}", index.weight())));
            }
            table.add(index, Complex64::new(num(re)?, num(im)?));
        }
        Ok(table)
    }
}

/// Basis contributions of one settled frame string up to weight `k`.
pub fn contributions(s: &FrameString, k: usize, n: usize) -> Result<Vec<(HwIndex, Complex64)>, HwError> {
    if s.n() != n {
        return Err(HwError::DimensionMismatch { string: s.n(), table: n });
    }
    let m = s.offdiag_weight();
    if m > k {
        return Ok(Vec::new());
    }
    let beta = s.coefficient();
    if beta == Complex64::default() {
        return Ok(Vec::new());
    }
    let ket = Bits::from_positions(s.plus());
    let bra = Bits::from_positions(s.minus());
    let max_subset = (k - m) / 2;
    let mut out = vec![(HwIndex::new(ket.clone(), bra.clone()), beta)];
    if max_subset == 0 {
        return Ok(out);
    }
    let diag = s.diag_args();
    for size in 1..=max_subset.min(diag.len()) {
        for subset in diag.iter().combinations(size) {
            let value = subset.iter().fold(beta, |acc, (_, a)| acc * a);
            if value == Complex64::default() {
                continue;
            }
            let mut kk = ket.clone();
            let mut bb = bra.clone();
            for &&(q, _) in &subset {
                kk.insert(q);
                bb.insert(q);
            }
            out.push((HwIndex::new(kk, bb), value));
        }
    }
    Ok(out)
}

/// Table of `Σ` contributions of `strings` (no mirroring).
pub fn extract_coefficients<'a>(
    strings: impl IntoIterator<Item = &'a FrameString>,
    n: usize,
    k: usize,
) -> Result<HwTable, HwError> {
    let mut table = HwTable::new(n, k);
    for s in strings {
        table.add_string(s, false)?;
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::Slot;

    fn brute_counts(n: usize) -> Vec<Vec<u128>> {
        // counts[h][r]
        let mut counts = vec![vec![0u128; n + 1]; 2 * n + 1];
        for a in 0..1usize << n {
            for b in 0..1usize << n {
                let h = (a.count_ones() + b.count_ones()) as usize;
                let r = n - (a | b).count_ones() as usize;
                counts[h][r] += 1;
            }
        }
        counts
    }

    #[test]
    fn zero_block_ranges() {
        assert_eq!(zero_block_range(0, 4).unwrap(), (4, 4));
        assert_eq!(zero_block_range(2, 2).unwrap(), (1, 0));
        assert_eq!(zero_block_range(5, 4).unwrap(), (1, 0));
        assert!(zero_block_range(9, 4).is_err());
        for n in 1..=5 {
            let counts = brute_counts(n);
            for (h, row) in counts.iter().enumerate() {
                let present: Vec<usize> = (0..=n).filter(|&r| row[r] > 0).collect();
                let (hi, lo) = zero_block_range(h, n).unwrap();
                assert_eq!((*present.last().unwrap(), present[0]), (hi, lo), "h={h} n={n}");
            }
        }
    }

    #[test]
    fn zero_block_counts_match_enumeration() {
        assert_eq!(count_weight_h_with_r_zeroblocks(2, 2, 3).unwrap(), 3);
        assert_eq!(count_weight_h_with_r_zeroblocks(3, 0, 2).unwrap(), 4);
        for n in 1..=5 {
            let counts = brute_counts(n);
            for (h, row) in counts.iter().enumerate() {
                let (hi, lo) = zero_block_range(h, n).unwrap();
                let mut total = 0;
                for r in lo..=hi {
                    let t = count_weight_h_with_r_zeroblocks(h, r, n).unwrap();
                    assert_eq!(t, row[r], "h={h} r={r} n={n}");
                    total += t;
                }
                assert_eq!(total, binomial(2 * n, h));
            }
        }
        assert!(count_weight_h_with_r_zeroblocks(2, 3, 2).is_err());
    }

    #[test]
    fn large_counts_sum_to_binomial() {
        let n = 40;
        for h in 0..=2 * n {
            let (hi, lo) = zero_block_range(h, n).unwrap();
            let total: u128 = (lo..=hi).map(|r| count_weight_h_with_r_zeroblocks(h, r, n).unwrap()).sum();
            assert_eq!(total, binomial(2 * n, h));
        }
    }

    #[test]
    fn expansion_of_a_string() {
        let a = Complex64::new(0.5, 0.25);
        let b = Complex64::new(-0.3, 0.0);
        let beta = Complex64::new(2.0, 0.0);
        let s = FrameString::from_slots(&[Slot::Plus, Slot::Diag(a), Slot::Diag(b)], beta);
        let idx = |k: &str, b: &str| HwIndex::new(Bits::parse_bitstring(k).unwrap(), Bits::parse_bitstring(b).unwrap());
        let t = extract_coefficients([&s], 3, 3).unwrap();
        assert_eq!(t.len(), 3);
        assert_eq!(t.get(&idx("100", "000")), beta);
        assert_eq!(t.get(&idx("110", "010")), beta * a);
        assert_eq!(t.get(&idx("101", "001")), beta * b);
        let t = extract_coefficients([&s], 3, 5).unwrap();
        assert_eq!(t.get(&idx("111", "011")), beta * a * b);
        assert_eq!(extract_coefficients([&s], 3, 0).unwrap().len(), 0);

        let mut m = HwTable::new(3, 3);
        m.add_string(&s, true).unwrap();
        assert_eq!(m.get(&idx("000", "100")), beta.conj());
        assert_eq!(m.get(&idx("010", "110")), (beta * a).conj());
        assert!(m.hermiticity_defect() == 0.0);
        assert!(extract_coefficients([&s], 4, 3).is_err());
    }

    #[test]
    fn text_round_trip_and_order() {
        let mut t = HwTable::new(2, 4);
        let idx = |k: &str, b: &str| HwIndex::new(Bits::parse_bitstring(k).unwrap(), Bits::parse_bitstring(b).unwrap());
        t.add(idx("11", "01"), Complex64::new(0.1, -0.2));
        t.add(idx("00", "00"), Complex64::new(1.0, 0.0));
        t.add(idx("01", "00"), Complex64::new(0.25, 0.5));
        t.add(idx("10", "00"), Complex64::new(0.5, 0.0));
        t.add(idx("11", "11"), Complex64::new(3.0, 0.0));
        let text = t.to_text();
        assert_eq!(
            text,
            "00 00 1 0\n01 00 0.25 0.5\n10 00 0.5 0\n11 01 0.10000000000000001 -0.20000000000000001\n11 11 3 0\n"
        );
        assert_eq!(HwTable::parse(&text, 2, 4).unwrap(), t);
        assert!(HwTable::parse("00 0 1 0\n", 2, 4).is_err());
        assert!(HwTable::parse("11 11 1 0\n", 2, 3).is_err());
        assert_eq!(t.trace(), Complex64::new(4.0, 0.0));
        assert_eq!(t.truncated(1).len(), 3);
    }
}
