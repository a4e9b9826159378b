//! Sparse bit strings.
//!
//! Every bit string in this crate (HW-basis kets and bras, Fourier
//! frequencies, sampled outcomes) is stored as the sorted list of positions
//! holding a `1`. Low-weight strings on many qubits stay small, and nothing
//! limits the qubit count to a machine word.
//!
//! Position `q` is qubit `q`; when rendered as text, character `q` of the
//! string is qubit `q`.

use std::cmp::Ordering;
use std::fmt;

use smallvec::SmallVec;

#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct Bits(SmallVec<[u32; 6]>);

impl Bits {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds from arbitrary positions; duplicates collapse.
    pub fn from_positions<I: IntoIterator<Item = usize>>(positions: I) -> Self {
        let mut v: SmallVec<[u32; 6]> = positions.into_iter().map(|q| q as u32).collect();
        v.sort_unstable();
        v.dedup();
        Bits(v)
    }

    /// Builds from a dense index where bit `q` of `mask` is qubit `q`.
    pub fn from_mask(mask: usize) -> Self {
        let mut v = SmallVec::new();
        let mut m = mask;
        while m != 0 {
            let q = m.trailing_zeros();
            v.push(q);
            m &= m - 1;
        }
        Bits(v)
    }

    /// Dense index with bit `q` set for every member. Panics if a position
    /// does not fit in `usize`.
    pub fn to_mask(&self) -> usize {
        self.0.iter().fold(0usize, |acc, &q| {
            assert!((q as usize) < usize::BITS as usize, "position {q} exceeds mask width");
            acc | (1usize << q)
        })
    }

    pub fn weight(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, q: usize) -> bool {
        self.0.binary_search(&(q as u32)).is_ok()
    }

    pub fn positions(&self) -> impl DoubleEndedIterator<Item = usize> + ExactSizeIterator + '_ {
        self.0.iter().map(|&q| q as usize)
    }

    /// Largest set position, `None` for the all-zeros string.
    pub fn max_position(&self) -> Option<usize> {
        self.0.last().map(|&q| q as usize)
    }

    pub fn insert(&mut self, q: usize) {
        let q = q as u32;
        if let Err(at) = self.0.binary_search(&q) {
            self.0.insert(at, q);
        }
    }

    pub fn xor(&self, other: &Bits) -> Bits {
        merge(&self.0, &other.0, |a, b| a != b)
    }

    pub fn union(&self, other: &Bits) -> Bits {
        merge(&self.0, &other.0, |a, b| a || b)
    }

    pub fn intersection_count(&self, other: &Bits) -> usize {
        let (mut i, mut j, mut count) = (0, 0, 0);
        while i < self.0.len() && j < other.0.len() {
            match self.0[i].cmp(&other.0[j]) {
                Ordering::Less => i += 1,
                Ordering::Greater => j += 1,
                Ordering::Equal => {
                    count += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        count
    }

    /// Parity of the inner product `self · other` over GF(2).
    pub fn dot_parity(&self, other: &Bits) -> bool {
        self.intersection_count(other) % 2 == 1
    }

    /// Renders as an `n`-character `0`/`1` string.
    pub fn to_bitstring(&self, n: usize) -> String {
        let mut s = vec![b'0'; n];
        for q in self.positions() {
            s[q] = b'1';
        }
        String::from_utf8(s).expect("ascii")
    }

    /// Parses a `0`/`1` string; returns `None` on any other character.
    pub fn parse_bitstring(s: &str) -> Option<Bits> {
        let mut v = SmallVec::new();
        for (q, c) in s.bytes().enumerate() {
            match c {
                b'0' => {}
                b'1' => v.push(q as u32),
                _ => return None,
            }
        }
        Some(Bits(v))
    }
}

fn merge(a: &[u32], b: &[u32], keep: impl Fn(bool, bool) -> bool) -> Bits {
    let mut out = SmallVec::new();
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let (q, in_a, in_b) = match (a.get(i), b.get(j)) {
            (Some(&x), Some(&y)) if x == y => {
                i += 1;
                j += 1;
                (x, true, true)
            }
            (Some(&x), Some(&y)) if x < y => {
                i += 1;
                (x, true, false)
            }
            (Some(_), Some(&y)) => {
                j += 1;
                (y, false, true)
            }
            (Some(&x), None) => {
                i += 1;
                (x, true, false)
            }
            (None, Some(&y)) => {
                j += 1;
                (y, false, true)
            }
            (None, None) => unreachable!(),
        };
        if keep(in_a, in_b) {
            out.push(q);
        }
    }
    Bits(out)
}

/// Lexicographic order of the rendered bit strings (qubit 0 most significant).
impl Ord for Bits {
    fn cmp(&self, other: &Self) -> Ordering {
        // The first differing character sits at the smallest position of the
        // symmetric difference; whoever holds the `1` there is larger.
        let (a, b) = (&self.0, &other.0);
        let (mut i, mut j) = (0, 0);
        loop {
            match (a.get(i), b.get(j)) {
                (None, None) => return Ordering::Equal,
                (Some(_), None) => return Ordering::Greater,
                (None, Some(_)) => return Ordering::Less,
                (Some(x), Some(y)) => match x.cmp(y) {
                    Ordering::Equal => {
                        i += 1;
                        j += 1;
                    }
                    Ordering::Less => return Ordering::Greater,
                    Ordering::Greater => return Ordering::Less,
                },
            }
        }
    }
}

impl PartialOrd for Bits {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.0.iter()).finish()
    }
}
