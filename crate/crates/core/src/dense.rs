//! Exact density-matrix simulation for small `n`.
//!
//! Row and column indices are computational basis states with bit `q`
//! holding qubit `q`. Memory is `16 · 4^n` bytes, so `n = 10` needs 16 MiB
//! and the hard cap `n = 14` needs 4 GiB.

use num_complex::Complex64;
use thiserror::Error;

use crate::circuit::{Circuit, Gate};
use crate::frame::{FrameString, Slot};
use crate::hw::HwTable;

pub const MAX_DENSE_QUBITS: usize = 14;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DenseError {
    #[error("dense simulation supports n <= {MAX_DENSE_QUBITS}, got {0}")]
    TooManyQubits(usize),
    #[error("dimension mismatch: {0} vs {1} qubits")]
    DimensionMismatch(usize, usize),
    #[error("eigendecomposition failed")]
    Eigen,
}

/// A `2^n × 2^n` complex matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    n: usize,
    data: Vec<Complex64>,
}

impl DenseMatrix {
    pub fn zeros(n: usize) -> Result<Self, DenseError> {
        if n > MAX_DENSE_QUBITS {
            return Err(DenseError::TooManyQubits(n));
        }
        Ok(DenseMatrix { n, data: vec![Complex64::default(); 1 << (2 * n)] })
    }

    /// `|+⟩⟨+|^{⊗n}`.
    pub fn plus_state(n: usize) -> Result<Self, DenseError> {
        let mut m = Self::zeros(n)?;
        let v = Complex64::new(0.5f64.powi(n as i32), 0.0);
        m.data.fill(v);
        Ok(m)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.dim() + col]
    }

    pub fn set(&mut self, row: usize, col: usize, v: Complex64) {
        let dim = self.dim();
        self.data[row * dim + col] = v;
    }

    pub fn add_at(&mut self, row: usize, col: usize, v: Complex64) {
        let dim = self.dim();
        self.data[row * dim + col] += v;
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim()).map(|i| self.get(i, i)).sum()
    }

    /// Largest `|A_rc - conj(A_cr)|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let dim = self.dim();
        let mut worst: f64 = 0.0;
        for r in 0..dim {
            for c in r..dim {
                worst = worst.max((self.get(r, c) - self.get(c, r).conj()).norm());
            }
        }
        worst
    }

    pub fn sub(&self, other: &DenseMatrix) -> Result<DenseMatrix, DenseError> {
        self.check_same(other)?;
        Ok(DenseMatrix { n: self.n, data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect() })
    }

    /// `√Tr(A†A)`.
    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Eigenvalues of a Hermitian matrix (lower triangle is read).
    pub fn hermitian_eigenvalues(&self) -> Result<Vec<f64>, DenseError> {
        let dim = self.dim();
        let m = faer::Mat::<faer::c64>::from_fn(dim, dim, |i, j| {
            let z = self.get(i, j);
            faer::c64::new(z.re, z.im)
        });
        let ev = m.self_adjoint_eigenvalues(faer::Side::Lower).map_err(|_| DenseError::Eigen)?;
        Ok(ev.into_iter().collect())
    }

    fn check_same(&self, other: &DenseMatrix) -> Result<(), DenseError> {
        if self.n == other.n {
            Ok(())
        } else {
            Err(DenseError::DimensionMismatch(self.n, other.n))
        }
    }
}

fn layer_phases(n: usize, layer: &[Gate]) -> Vec<f64> {
    (0..1usize << n).map(|b| layer.iter().map(|g| g.basis_phase(b)).sum()).collect()
}

/// Conjugates by a diagonal unitary: entry `(r, c)` gains `e^{i(φ(r) - φ(c))}`.
fn apply_phases(rho: &mut DenseMatrix, phases: &[f64]) {
    let dim = rho.dim();
    let units: Vec<Complex64> = phases.iter().map(|&t| Complex64::from_polar(1.0, t)).collect();
    for r in 0..dim {
        let row = &mut rho.data[r * dim..(r + 1) * dim];
        for (c, z) in row.iter_mut().enumerate() {
            *z *= units[r] * units[c].conj();
        }
    }
}

/// Amplitude damping on qubit `q` via `K0 = |0⟩⟨0| + √(1-p)|1⟩⟨1|`, `K1 = √p |0⟩⟨1|`.
pub fn apply_damping(rho: &mut DenseMatrix, q: usize, p: f64) {
    let dim = rho.dim();
    let bit = 1usize << q;
    let s = (1.0 - p).sqrt();
    for r in (0..dim).filter(|r| r & bit == 0) {
        for c in (0..dim).filter(|c| c & bit == 0) {
            let (r1, c1) = (r | bit, c | bit);
            let e11 = rho.data[r1 * dim + c1];
            rho.data[r * dim + c] += p * e11;
            rho.data[r * dim + c1] *= s;
            rho.data[r1 * dim + c] *= s;
            rho.data[r1 * dim + c1] = (1.0 - p) * e11;
        }
    }
}

/// Exact output state: per layer, all gates then damping on every qubit.
pub fn evolve_dense(c: &Circuit) -> Result<DenseMatrix, DenseError> {
    let mut rho = DenseMatrix::plus_state(c.n())?;
    for layer in c.layers() {
        if !layer.is_empty() {
            apply_phases(&mut rho, &layer_phases(c.n(), layer));
        }
        for q in 0..c.n() {
            apply_damping(&mut rho, q, c.p());
        }
    }
    Ok(rho)
}

/// In-place Walsh-Hadamard transform (unnormalized).
fn walsh_hadamard(v: &mut [f64]) {
    let mut h = 1;
    while h < v.len() {
        for i in (0..v.len()).step_by(2 * h) {
            for j in i..i + h {
                let (a, b) = (v[j], v[j + h]);
                v[j] = a + b;
                v[j + h] = a - b;
            }
        }
        h *= 2;
    }
}

/// Hadamard-basis diagonal `P(x) = ⟨x|H ρ H|x⟩`, indexed with bit `q` of
/// `x` set when qubit `q` is found in `|−⟩`. For a non-positive `ρ` this
/// is the quasiprobability.
pub fn born_distribution(rho: &DenseMatrix) -> Vec<f64> {
    let dim = rho.dim();
    // g(s) = Σ_{r⊕c=s} ρ_rc; only the real part survives for Hermitian ρ.
    let mut g = vec![0.0; dim];
    for r in 0..dim {
        for c in 0..dim {
            g[r ^ c] += rho.data[r * dim + c].re;
        }
    }
    walsh_hadamard(&mut g);
    let scale = 0.5f64.powi(rho.n as i32);
    g.iter().map(|v| v * scale).collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Distances {
    /// Hilbert-Schmidt distance `√Tr((A-B)†(A-B))`.
    pub hs: f64,
    /// Trace distance `½‖A-B‖₁`.
    pub td: f64,
    /// Total-variation distance between the Hadamard-basis diagonals.
    pub tvd: f64,
}

pub fn hs_distance(a: &DenseMatrix, b: &DenseMatrix) -> Result<f64, DenseError> {
    Ok(a.sub(b)?.frobenius_norm())
}

/// `½ Σ |λ_i(A - B)|` for Hermitian `A`, `B`.
pub fn trace_distance(a: &DenseMatrix, b: &DenseMatrix) -> Result<f64, DenseError> {
    let ev = a.sub(b)?.hermitian_eigenvalues()?;
    Ok(0.5 * ev.iter().map(|x| x.abs()).sum::<f64>())
}

pub fn tvd(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

pub fn distances(a: &DenseMatrix, b: &DenseMatrix) -> Result<Distances, DenseError> {
    Ok(Distances {
        hs: hs_distance(a, b)?,
        td: trace_distance(a, b)?,
        tvd: tvd(&born_distribution(a), &born_distribution(b)),
    })
}

/// Adds the matrix of one frame string to `rho`.
pub fn add_frame(rho: &mut DenseMatrix, s: &FrameString) -> Result<(), DenseError> {
    if s.n() != rho.n {
        return Err(DenseError::DimensionMismatch(s.n(), rho.n));
    }
    let beta = s.coefficient();
    let (mut row0, mut col0) = (0usize, 0usize);
    let mut diag = Vec::new();
    for (q, slot) in s.slots().into_iter().enumerate() {
        match slot {
            Slot::Plus => row0 |= 1 << q,
            Slot::Minus => col0 |= 1 << q,
            Slot::Diag(a) => diag.push((1usize << q, a)),
        }
    }
    // Each diagonal slot contributes |0⟩⟨0| or a|1⟩⟨1|.
    for subset in 0..1usize << diag.len() {
        let mut v = beta;
        let mut mask = 0;
        for (i, &(bit, a)) in diag.iter().enumerate() {
            if subset >> i & 1 == 1 {
                v *= a;
                mask |= bit;
            }
        }
        rho.add_at(row0 | mask, col0 | mask, v);
    }
    Ok(())
}

pub fn frame_to_dense(s: &FrameString) -> Result<DenseMatrix, DenseError> {
    let mut rho = DenseMatrix::zeros(s.n())?;
    add_frame(&mut rho, s)?;
    Ok(rho)
}

/// `Σ` of frame-string matrices.
pub fn reconstruct_from_frames<'a>(n: usize, strings: impl IntoIterator<Item = &'a FrameString>) -> Result<DenseMatrix, DenseError> {
    let mut rho = DenseMatrix::zeros(n)?;
    for s in strings {
        add_frame(&mut rho, s)?;
    }
    Ok(rho)
}

pub fn table_to_dense(table: &HwTable) -> Result<DenseMatrix, DenseError> {
    let mut rho = DenseMatrix::zeros(table.n())?;
    for (index, v) in table.iter() {
        rho.add_at(index.ket().to_mask(), index.bra().to_mask(), v);
    }
    Ok(rho)
}

/// Keeps entries `(r, c)` with `|r| + |c| ≤ k`.
pub fn truncate_by_weight(rho: &DenseMatrix, k: usize) -> DenseMatrix {
    let dim = rho.dim();
    let mut out = rho.clone();
    for r in 0..dim {
        for c in 0..dim {
            if (r.count_ones() + c.count_ones()) as usize > k {
                out.data[r * dim + c] = Complex64::default();
            }
        }
    }
    out
}
