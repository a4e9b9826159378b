//! Truncation error versus cutoff over a random-circuit ensemble, compared
//! with the analytic bound and the idle circuit.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::bounds::{hs_tail_sum_bound, hs_truncation_bound, chernoff_regime, BoundRegime};
use crate::circuit::{random_circuit, Circuit};
use crate::dense::{evolve_dense, hs_distance, table_to_dense, trace_distance, DenseMatrix};
use crate::numfmt::fmt_g17;
use crate::pipeline::simulate;
use crate::Error;

#[derive(Clone, Debug, PartialEq)]
pub struct Fig2Config {
    pub n: usize,
    pub d: usize,
    pub p: f64,
    pub instances: usize,
    pub max_k: usize,
    /// Instance `i` uses seed `seed + i`.
    pub seed: u64,
}

impl Default for Fig2Config {
    fn default() -> Self {
        Fig2Config { n: 10, d: 10, p: 0.1, instances: 200, max_k: 6, seed: 0 }
    }
}

/// One cutoff's summary. Distances are Hilbert-Schmidt and trace
/// distances between the exact state and its truncation.
#[derive(Clone, Debug, PartialEq)]
pub struct Fig2Row {
    pub k: usize,
    /// Square root of the squared-distance bound, comparable to `hs_*`.
    pub hs_bound: f64,
    pub regime: BoundRegime,
    pub hs_mean: f64,
    pub hs_min: f64,
    pub hs_max: f64,
    pub td_mean: f64,
    pub td_min: f64,
    pub td_max: f64,
    pub idle_hs: f64,
    pub idle_td: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Fig2Report {
    pub config: Fig2Config,
    pub rows: Vec<Fig2Row>,
    /// Bound violations: `hs_max > hs_bound`.
    pub violations: Vec<String>,
    /// Failed empirical observations (idle dominance, trace distance below the bound).
    pub warnings: Vec<String>,
}

impl Fig2Report {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,hs_bound,bound_regime,hs_mean,hs_min,hs_max,td_mean,td_min,td_max,idle_hs,idle_td\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{}",
                r.k,
                fmt_g17(r.hs_bound),
                r.regime.as_str(),
                fmt_g17(r.hs_mean),
                fmt_g17(r.hs_min),
                fmt_g17(r.hs_max),
                fmt_g17(r.td_mean),
                fmt_g17(r.td_min),
                fmt_g17(r.td_max),
                fmt_g17(r.idle_hs),
                fmt_g17(r.idle_td),
            );
        }
        out
    }
}

/// Closed-form bound inside the Chernoff regime, tail sum outside it.
pub fn fig2_bound(n: usize, d: usize, p: f64, k: usize) -> Result<(f64, BoundRegime), Error> {
    if chernoff_regime(n, d, p, k) {
        Ok((hs_truncation_bound(n, d, p, k)?, BoundRegime::Chernoff))
    } else {
        Ok((hs_tail_sum_bound(n, d, p, k), BoundRegime::TailSum))
    }
}

/// `(hs, td)` per cutoff `0..=max_k` for one circuit, using the simulator's
/// truncated table against the dense state.
fn errors(circuit: &Circuit, max_k: usize) -> Result<Vec<(f64, f64)>, Error> {
    let rho = evolve_dense(circuit)?;
    let table = simulate(circuit, max_k)?;
    (0..=max_k)
        .map(|k| {
            let sigma: DenseMatrix = table_to_dense(&table.truncated(k))?;
            Ok((hs_distance(&rho, &sigma)?, trace_distance(&rho, &sigma)?))
        })
        .collect()
}

pub fn run_fig2(config: &Fig2Config) -> Result<Fig2Report, Error> {
    let Fig2Config { n, d, p, instances, max_k, seed } = config.clone();
    let per_instance: Vec<Vec<(f64, f64)>> = (0..instances)
        .into_par_iter()
        .map(|i| errors(&random_circuit(n, d, p, 2, seed.wrapping_add(i as u64))?, max_k))
        .collect::<Result<_, _>>()?;
    let idle = errors(&Circuit::idle(n, d, p)?, max_k)?;

    let mut rows = Vec::new();
    let mut violations = Vec::new();
    let mut warnings = Vec::new();
    for k in 0..=max_k {
        let (bound_sq, regime) = fig2_bound(n, d, p, k)?;
        let hs_bound = bound_sq.sqrt();
        let hs: Vec<f64> = per_instance.iter().map(|v| v[k].0).collect();
        let td: Vec<f64> = per_instance.iter().map(|v| v[k].1).collect();
        let stats = |v: &[f64]| {
            let mean = v.iter().sum::<f64>() / v.len().max(1) as f64;
            let min = v.iter().copied().fold(f64::INFINITY, f64::min);
            let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            (mean, min, max)
        };
        let (hs_mean, hs_min, hs_max) = stats(&hs);
        let (td_mean, td_min, td_max) = stats(&td);
        let row = Fig2Row {
            k,
            hs_bound,
            regime,
            hs_mean,
            hs_min,
            hs_max,
            td_mean,
            td_min,
            td_max,
            idle_hs: idle[k].0,
            idle_td: idle[k].1,
        };
        if row.hs_max > row.hs_bound {
            violations.push(format!("k={k}: max Hilbert-Schmidt error {} exceeds bound {}", row.hs_max, row.hs_bound));
        }
        if row.idle_hs > row.hs_bound {
            violations.push(format!("k={k}: idle Hilbert-Schmidt error {} exceeds bound {}", row.idle_hs, row.hs_bound));
        }
        if row.idle_hs < row.hs_max {
            warnings.push(format!("k={k}: idle error {} is below the random-circuit maximum {}", row.idle_hs, row.hs_max));
        }
        if row.td_mean > row.hs_bound {
            warnings.push(format!("k={k}: mean trace distance {} exceeds the Hilbert-Schmidt bound {}", row.td_mean, row.hs_bound));
        }
        rows.push(row);
    }
    Ok(Fig2Report { config: config.clone(), rows, violations, warnings })
}
