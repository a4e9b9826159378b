//! End-to-end simulation: propagate every low-weight initial string and
//! collect the truncated coefficient table.

use itertools::Itertools;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::bounds::{select_k, ErrorBudget};
use crate::circuit::Circuit;
use crate::frame::{initial_representatives, FrameString, Propagator};
use crate::hw::{contributions, HwIndex, HwTable};
use crate::sampler::{fourier_table, QuasiDistribution};
use crate::Error;

/// Strings handed to the worker pool at once. Results are merged in input
/// order, so the table does not depend on the thread count.
const CHUNK: usize = 1 << 14;

/// Coefficient table of the circuit's output state truncated at weight `k`.
///
/// Only strings whose first off-diagonal slot is `σ+` are propagated; the
/// others are their adjoints and contribute complex conjugates.
pub fn simulate(circuit: &Circuit, k: usize) -> Result<HwTable, Error> {
    let violations = circuit.validate();
    if !violations.is_empty() {
        return Err(crate::circuit::CircuitError::Invalid(violations).into());
    }
    let n = circuit.n();
    let propagator = Propagator::new(circuit);
    let mut table = HwTable::new(n, k);
    for chunk in &initial_representatives(n, k.min(n))?.chunks(CHUNK) {
        let chunk: Vec<FrameString> = chunk.collect();
        let parts: Vec<Vec<(HwIndex, Complex64)>> = chunk
            .par_iter()
            .map(|s| -> Result<_, Error> {
                let mut out = Vec::new();
                for branch in propagator.propagate(s)? {
                    for (index, value) in contributions(&branch, k, n)? {
                        if s.offdiag_weight() > 0 {
                            out.push((index.adjoint(), value.conj()));
                        }
                        out.push((index, value));
                    }
                }
                Ok(out)
            })
            .collect::<Result<_, _>>()?;
        for (index, value) in parts.into_iter().flatten() {
            table.add(index, value);
        }
    }
    Ok(table)
}

/// Counts from propagating every representative string with at most `m`
/// off-diagonal slots, without building a table.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PropagationStats {
    pub inputs: u64,
    pub branches: u64,
}

pub fn propagate_all(circuit: &Circuit, m: usize) -> Result<PropagationStats, Error> {
    let propagator = Propagator::new(circuit);
    let mut stats = PropagationStats { inputs: 0, branches: 0 };
    for chunk in &initial_representatives(circuit.n(), m.min(circuit.n()))?.chunks(CHUNK) {
        let chunk: Vec<FrameString> = chunk.collect();
        let branches = chunk
            .par_iter()
            .map(|s| propagator.propagate(s).map(|b| b.len() as u64))
            .collect::<Result<Vec<_>, _>>()?;
        stats.inputs += chunk.len() as u64;
        stats.branches += branches.iter().sum::<u64>();
    }
    Ok(stats)
}

/// Everything needed to sample: the cutoff's budget, the table and its
/// quasidistribution.
pub struct Simulation {
    pub budget: ErrorBudget,
    pub table: HwTable,
    pub distribution: QuasiDistribution,
}

/// How the cutoff is chosen.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Cutoff {
    /// Certify total-variation error `ε`; refuses below the depth threshold.
    Epsilon(f64),
    /// Fixed cutoff; the budget reports whatever bounds apply.
    Fixed(usize),
}

pub fn run(circuit: &Circuit, cutoff: Cutoff) -> Result<Simulation, Error> {
    let (n, d, p) = (circuit.n(), circuit.depth(), circuit.p());
    let budget = match cutoff {
        Cutoff::Epsilon(eps) => select_k(n, d, p, eps)?,
        Cutoff::Fixed(k) => ErrorBudget::for_cutoff(n, d, p, k)?,
    };
    let table = simulate(circuit, budget.k)?;
    let distribution = fourier_table(&table)?;
    Ok(Simulation { budget, table, distribution })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::random_circuit;
    use crate::frame::{initial_strings, propagate};
    use crate::hw::extract_coefficients;

    #[test]
    fn mirrored_table_matches_full_propagation() {
        for seed in 0..4 {
            let c = random_circuit(4, 5, 0.2, 2 + (seed as usize % 2), seed).unwrap();
            let k = 5;
            let mirrored = simulate(&c, k).unwrap();
            let all: Vec<FrameString> =
                initial_strings(4, 4).unwrap().flat_map(|s| propagate(&s, &c).unwrap().into_vec()).collect();
            let full = extract_coefficients(&all, 4, k).unwrap();
            assert_eq!(mirrored.len(), full.len());
            for (i, v) in full.iter() {
                assert!((mirrored.get(i) - v).norm() < 1e-15, "{i:?}");
            }
            assert!(mirrored.hermiticity_defect() < 1e-15);
        }
    }

    #[test]
    fn propagation_stats_count_inputs() {
        let c = random_circuit(6, 3, 0.2, 2, 1).unwrap();
        let stats = propagate_all(&c, 2).unwrap();
        assert_eq!(stats.inputs, 1 + 6 + 2 * 15);
        assert_eq!(stats.branches, stats.inputs);
    }
}
