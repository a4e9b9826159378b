//! Analytic error bounds and cutoff selection.
//!
//! Everything is evaluated as a logarithm and exponentiated last, since
//! `4^n` and `e^{2nH}` leave double range well before `n = 1000`.
//!
//! Notation: `c = (1-p)^d`; `H` is the binary entropy in nats; the cutoff
//! `k` keeps basis operators of weight `≤ k`.

use std::f64::consts::LN_2;

use thiserror::Error;

use crate::hw::zero_block_range;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoundsError {
    #[error("argument {0} outside [0, 1]")]
    EntropyDomain(f64),
    #[error("p must lie in (0,1], got {0}")]
    NoiseOutOfRange(f64),
    #[error("n must be at least {min}, got {n}")]
    TooFewQubits { n: usize, min: usize },
    #[error("weight {h} with {m} zero blocks is not realizable on {n} qubits")]
    InvalidWeight { h: usize, m: usize, n: usize },
    #[error(
        "Chernoff regime not reached: cutoff k={k} needs k+1 >= n(1-p)^d = {required_cutoff:.6}, \
         i.e. depth d >= {required_depth:.6}"
    )]
    ChernoffRegime { k: usize, required_cutoff: f64, required_depth: f64 },
    #[error("rank must be at least 1 and ε' non-negative (rank={rank}, ε'={eps})")]
    RankArguments { rank: f64, eps: f64 },
    #[error("target ε must lie in (0, 4), got {0}")]
    EpsilonOutOfRange(f64),
    #[error("depth d={d} is below the certification threshold d_T={threshold:.6}")]
    BelowThreshold { d: usize, threshold: f64 },
    #[error("no certificate: (λ/2 - 2) ln n - ln 4 = {denominator:.6} is not positive (λ={lambda:.6})")]
    NoCertificate { lambda: f64, denominator: f64 },
}

fn check_p(p: f64) -> Result<(), BoundsError> {
    if p > 0.0 && p <= 1.0 {
        Ok(())
    } else {
        Err(BoundsError::NoiseOutOfRange(p))
    }
}

/// `x · ln(1-p)`, taking `0 · ln 0 = 0`.
fn x_ln_1mp(x: f64, p: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * (1.0 - p).ln()
    }
}

/// `ln(2 - (1-p)^d)`.
fn ln_two_minus_c(d: usize, p: f64) -> f64 {
    (2.0 - (1.0 - p).powi(d as i32)).ln()
}

fn entropy(x: f64) -> f64 {
    let t = |y: f64| if y <= 0.0 { 0.0 } else { -y * y.ln() };
    t(x) + t(1.0 - x)
}

/// `H(x) = -x ln x - (1-x) ln(1-x)` in nats.
pub fn binary_entropy(x: f64) -> Result<f64, BoundsError> {
    if !(0.0..=1.0).contains(&x) {
        return Err(BoundsError::EntropyDomain(x));
    }
    Ok(entropy(x))
}

/// Upper bound on `|α_i|` after `r` noisy layers for a basis operator of
/// weight `h` with `m` zero blocks: `(1-p)^{rh/2} (2-(1-p)^r)^m / 2^n`.
/// Attained by the idle circuit.
pub fn coefficient_bound(h: usize, m: usize, r: usize, p: f64, n: usize) -> Result<f64, BoundsError> {
    check_p(p)?;
    let (hi, lo) = zero_block_range(h, n).map_err(|_| BoundsError::InvalidWeight { h, m, n })?;
    if m < lo || m > hi {
        return Err(BoundsError::InvalidWeight { h, m, n });
    }
    let ln = x_ln_1mp(r as f64 * h as f64 / 2.0, p) + m as f64 * ln_two_minus_c(r, p) - n as f64 * LN_2;
    Ok(ln.exp())
}

/// Whether the Chernoff tail estimate applies: `k + 1 ≥ n(1-p)^d`.
pub fn chernoff_regime(n: usize, d: usize, p: f64, k: usize) -> bool {
    (k + 1) as f64 >= n as f64 * (1.0 - p).powi(d as i32)
}

fn require_chernoff(n: usize, d: usize, p: f64, k: usize) -> Result<(), BoundsError> {
    check_p(p)?;
    if chernoff_regime(n, d, p, k) {
        return Ok(());
    }
    Err(BoundsError::ChernoffRegime {
        k,
        required_cutoff: n as f64 * (1.0 - p).powi(d as i32),
        required_depth: (n as f64 / (k + 1) as f64).ln() / -(1.0 - p).ln(),
    })
}

/// `ln` of the Hilbert-Schmidt truncation bound; `-inf` once nothing is truncated.
pub fn ln_hs_truncation_bound(n: usize, d: usize, p: f64, k: usize) -> Result<f64, BoundsError> {
    require_chernoff(n, d, p, k)?;
    if k >= 2 * n {
        return Ok(f64::NEG_INFINITY);
    }
    let (nf, k1) = (n as f64, (k + 1) as f64);
    Ok((2.0 * nf - k1) * ln_two_minus_c(d, p) - nf * 2.0 * LN_2
        + 2.0 * nf * entropy(k1 / (2.0 * nf))
        + x_ln_1mp(d as f64 * k1, p))
}

/// Squared Hilbert-Schmidt distance bound between the state and its
/// weight-`k` truncation:
/// `(2-c)^{2n-k-1} 4^{-n} e^{2nH((k+1)/2n)} (1-p)^{d(k+1)}`.
pub fn hs_truncation_bound(n: usize, d: usize, p: f64, k: usize) -> Result<f64, BoundsError> {
    ln_hs_truncation_bound(n, d, p, k).map(f64::exp)
}

pub fn ln_trace_deficit_bound(n: usize, d: usize, p: f64, k: usize) -> Result<f64, BoundsError> {
    require_chernoff(n, d, p, k)?;
    if k >= 2 * n {
        return Ok(f64::NEG_INFINITY);
    }
    let (nf, k1) = (n as f64, (k + 1) as f64);
    Ok((nf - k1 / 2.0) * ln_two_minus_c(d, p) - nf * LN_2
        + nf * entropy(k1 / (2.0 * nf))
        + x_ln_1mp(d as f64 * k1 / 2.0, p))
}

/// Bound on `|Tr(ρ - σ)|`:
/// `(2-c)^{n-(k+1)/2} 2^{-n} e^{nH((k+1)/2n)} (1-p)^{d(k+1)/2}`.
pub fn trace_deficit_bound(n: usize, d: usize, p: f64, k: usize) -> Result<f64, BoundsError> {
    ln_trace_deficit_bound(n, d, p, k).map(f64::exp)
}

/// Exact `Tr(ρ - σ) = 2^{-n} Σ_{r: 2r > k} C(n,r) (2-c)^{n-r} c^r`. The
/// diagonal of the state does not depend on the gates, so this holds for
/// every circuit.
pub fn exact_trace_deficit(n: usize, d: usize, p: f64, k: usize) -> f64 {
    let l2c = ln_two_minus_c(d, p);
    let nf = n as f64;
    let mut ln_binom = 0.0;
    let mut terms = Vec::new();
    for r in 0..=n {
        if r > 0 {
            ln_binom += ((n - r + 1) as f64).ln() - (r as f64).ln();
        }
        if 2 * r > k {
            terms.push(ln_binom + (nf - r as f64) * l2c + x_ln_1mp((d * r) as f64, p) - nf * LN_2);
        }
    }
    log_sum_exp(&terms).exp()
}

/// Tail-sum bound on the squared truncation error, valid for every `k`:
/// `Σ_{h>k} C(2n,h) (1-p)^{dh} (2-c)^{2n-2⌈h/2⌉} / 4^n`. Each weight-`h`
/// coefficient is bounded individually with the largest possible number
/// of zero blocks.
pub fn hs_tail_sum_bound(n: usize, d: usize, p: f64, k: usize) -> f64 {
    let l2c = ln_two_minus_c(d, p);
    let two_n = 2 * n;
    let mut ln_binom = 0.0;
    let mut terms = Vec::new();
    for h in 0..=two_n {
        if h > 0 {
            ln_binom += ((two_n - h + 1) as f64).ln() - (h as f64).ln();
        }
        if h > k {
            let mu = (n - h.div_ceil(2)) as f64;
            terms.push(ln_binom + x_ln_1mp((d * h) as f64, p) + 2.0 * mu * l2c - 2.0 * n as f64 * LN_2);
        }
    }
    log_sum_exp(&terms).exp()
}

fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}

/// `ln Σ_{m≤k} C(2n, m)`, the log of the table-size bound.
pub fn ln_table_size_bound(n: usize, k: usize) -> f64 {
    let two_n = 2 * n;
    let mut ln_binom = 0.0;
    let mut terms = vec![0.0];
    for m in 1..=k.min(two_n) {
        ln_binom += ((two_n - m + 1) as f64).ln() - (m as f64).ln();
        terms.push(ln_binom);
    }
    log_sum_exp(&terms)
}

/// `(√rank + 1) ε'`.
pub fn rank_td_bound(rank: f64, eps: f64) -> Result<f64, BoundsError> {
    if rank.is_nan() || rank < 1.0 || eps.is_nan() || eps < 0.0 {
        return Err(BoundsError::RankArguments { rank, eps });
    }
    Ok((rank.sqrt() + 1.0) * eps)
}

/// `d_T = (4 ln n + 2 ln 4) / ln(1/(1-p))`; zero when `p = 1`.
pub fn depth_threshold(n: usize, p: f64) -> Result<f64, BoundsError> {
    check_p(p)?;
    if n < 2 {
        return Err(BoundsError::TooFewQubits { n, min: 2 });
    }
    if p == 1.0 {
        return Ok(0.0);
    }
    Ok((4.0 * (n as f64).ln() + 4.0 * LN_2) / -(1.0 - p).ln())
}

/// `λ = d ln(1/(1-p)) / ln n`; infinite when `p = 1`.
pub fn depth_parameter(n: usize, d: usize, p: f64) -> Result<f64, BoundsError> {
    check_p(p)?;
    if n < 2 {
        return Err(BoundsError::TooFewQubits { n, min: 2 });
    }
    if p == 1.0 {
        return Ok(f64::INFINITY);
    }
    Ok(d as f64 * -(1.0 - p).ln() / (n as f64).ln())
}

/// Which estimate produced an [`ErrorBudget`]'s Hilbert-Schmidt bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundRegime {
    /// Closed-form Chernoff bound, `k + 1 ≥ n(1-p)^d`.
    Chernoff,
    /// Tail sum of per-coefficient bounds; used outside the Chernoff regime.
    TailSum,
}

impl BoundRegime {
    pub fn as_str(self) -> &'static str {
        match self {
            BoundRegime::Chernoff => "chernoff",
            BoundRegime::TailSum => "tail-sum",
        }
    }
}

/// Certified error accounting for one cutoff.
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorBudget {
    pub n: usize,
    pub d: usize,
    pub p: f64,
    /// Target total-variation error, when the cutoff was selected from one.
    pub epsilon: Option<f64>,
    /// Trace-distance target `ε/(4+ε)`.
    pub delta: Option<f64>,
    pub k: usize,
    pub lambda: f64,
    pub depth_threshold: f64,
    pub regime: BoundRegime,
    /// Bound on the squared Hilbert-Schmidt truncation error.
    pub hs_bound: f64,
    /// Bound on `|Tr(ρ - σ)|`.
    pub trace_bound: f64,
    /// `ln` of the rank bound `min(Σ_{m≤k} C(2n,m), 2^n)`.
    pub ln_rank_bound: f64,
    /// Certified trace distance `(√rank + 1) max(√hs_bound, trace_bound)`.
    pub td_bound: f64,
}

impl ErrorBudget {
    /// Bounds for a fixed cutoff. Uses the closed forms inside the Chernoff
    /// regime and the tail sum and exact trace deficit otherwise.
    pub fn for_cutoff(n: usize, d: usize, p: f64, k: usize) -> Result<ErrorBudget, BoundsError> {
        check_p(p)?;
        if n < 2 {
            return Err(BoundsError::TooFewQubits { n, min: 2 });
        }
        let (regime, hs, trace) = if chernoff_regime(n, d, p, k) {
            (BoundRegime::Chernoff, hs_truncation_bound(n, d, p, k)?, trace_deficit_bound(n, d, p, k)?)
        } else {
            (BoundRegime::TailSum, hs_tail_sum_bound(n, d, p, k), exact_trace_deficit(n, d, p, k))
        };
        let ln_rank = ln_table_size_bound(n, k).min(n as f64 * LN_2);
        Ok(ErrorBudget {
            n,
            d,
            p,
            epsilon: None,
            delta: None,
            k,
            lambda: depth_parameter(n, d, p)?,
            depth_threshold: depth_threshold(n, p)?,
            regime,
            hs_bound: hs,
            trace_bound: trace,
            ln_rank_bound: ln_rank,
            td_bound: certified(ln_rank, hs, trace),
        })
    }
}

fn certified(ln_rank: f64, hs: f64, trace: f64) -> f64 {
    ((0.5 * ln_rank).exp() + 1.0) * hs.sqrt().max(trace)
}

/// Certified trace distance at cutoff `k` using the Chernoff-regime bounds.
pub fn certified_td_bound(n: usize, d: usize, p: f64, k: usize) -> Result<f64, BoundsError> {
    let hs = hs_truncation_bound(n, d, p, k)?;
    let trace = trace_deficit_bound(n, d, p, k)?;
    let ln_rank = ln_table_size_bound(n, k).min(n as f64 * LN_2);
    Ok(certified(ln_rank, hs, trace))
}

fn delta_for(epsilon: f64) -> Result<f64, BoundsError> {
    if !(epsilon > 0.0 && epsilon < 4.0) {
        return Err(BoundsError::EpsilonOutOfRange(epsilon));
    }
    Ok(epsilon / (4.0 + epsilon))
}

/// Cutoff from the closed-form rule
/// `k = ln(2/δ) / ((λ/2 - 2) ln n - ln 4) - 1`, `δ = ε/(4+ε)`, rounded up
/// and clamped into the Chernoff regime. If the certified trace distance
/// still exceeds `δ` there, `k` is raised until it does not.
pub fn select_k(n: usize, d: usize, p: f64, epsilon: f64) -> Result<ErrorBudget, BoundsError> {
    check_p(p)?;
    let delta = delta_for(epsilon)?;
    let threshold = depth_threshold(n, p)?;
    if (d as f64) < threshold {
        return Err(BoundsError::BelowThreshold { d, threshold });
    }
    let lambda = depth_parameter(n, d, p)?;
    let ln_n = (n as f64).ln();
    let denominator = (lambda / 2.0 - 2.0) * ln_n - 2.0 * LN_2;
    if denominator.is_nan() || denominator <= 0.0 {
        return Err(BoundsError::NoCertificate { lambda, denominator });
    }
    let raw = (2.0 / delta).ln() / denominator - 1.0;
    let mut k = if raw <= 0.0 { 0 } else { raw.ceil().min((2 * n) as f64) as usize };
    let floor = n as f64 * (1.0 - p).powi(d as i32);
    while !chernoff_regime(n, d, p, k) {
        k = ((floor.ceil() as usize).saturating_sub(1)).max(k + 1);
    }
    while k < 2 * n && certified_td_bound(n, d, p, k)? > delta {
        k += 1;
    }
    let mut budget = ErrorBudget::for_cutoff(n, d, p, k)?;
    budget.epsilon = Some(epsilon);
    budget.delta = Some(delta);
    Ok(budget)
}

/// Smallest `k` in the Chernoff regime whose certified trace distance is `≤ δ`.
pub fn scan_k(n: usize, d: usize, p: f64, epsilon: f64) -> Result<usize, BoundsError> {
    check_p(p)?;
    let delta = delta_for(epsilon)?;
    for k in 0..=2 * n {
        if chernoff_regime(n, d, p, k) && certified_td_bound(n, d, p, k)? <= delta {
            return Ok(k);
        }
    }
    Ok(2 * n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn entropy_values() {
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        assert!((binary_entropy(0.5).unwrap() - LN_2).abs() < 1e-15);
        assert_eq!(binary_entropy(0.3).unwrap(), binary_entropy(0.7).unwrap());
        assert!(binary_entropy(1.5).is_err());
        assert!(binary_entropy(-0.1).is_err());
    }

    #[test]
    fn coefficient_bound_cases() {
        let n = 5;
        for h in 0..=2 * n {
            let (hi, lo) = zero_block_range(h, n).unwrap();
            for m in lo..=hi {
                assert!(rel(coefficient_bound(h, m, 0, 0.3, n).unwrap(), 1.0 / 32.0) < 1e-15);
            }
            if lo == 0 {
                let expect = 0.7f64.powf(4.0 * h as f64 / 2.0) / 32.0;
                assert!(rel(coefficient_bound(h, 0, 4, 0.3, n).unwrap(), expect) < 1e-13);
            }
        }
        assert!(coefficient_bound(2, 4, 1, 0.3, 3).is_err());
        assert_eq!(coefficient_bound(1, 0, 3, 1.0, 1).unwrap(), 0.0);
    }

    #[test]
    fn closed_forms_at_full_cutoff() {
        let (n, d, p) = (6, 7, 0.2);
        let k = 2 * n - 1;
        let hs = hs_truncation_bound(n, d, p, k).unwrap();
        assert!(rel(hs, 4f64.powi(-(n as i32)) * (1.0 - p).powi((2 * n * d) as i32)) < 1e-12);
        let tr = trace_deficit_bound(n, d, p, k).unwrap();
        assert!(rel(tr, 2f64.powi(-(n as i32)) * (1.0 - p).powi((n * d) as i32)) < 1e-12);
        assert_eq!(hs_truncation_bound(n, d, p, 2 * n).unwrap(), 0.0);
    }

    #[test]
    fn chernoff_precondition() {
        let err = hs_truncation_bound(10, 10, 0.1, 0).unwrap_err();
        assert!(matches!(err, BoundsError::ChernoffRegime { .. }));
        assert!(err.to_string().contains("Chernoff regime not reached"));
        assert!(hs_truncation_bound(10, 10, 0.1, 3).is_ok());
    }

    #[test]
    fn exact_deficit_below_bound() {
        let (n, d, p) = (8, 10, 0.1);
        for k in 0..=2 * n {
            let exact = exact_trace_deficit(n, d, p, k);
            if let Ok(b) = trace_deficit_bound(n, d, p, k) {
                assert!(exact <= b * (1.0 + 1e-12), "k={k}: {exact} > {b}");
            }
        }
        assert_eq!(exact_trace_deficit(n, d, p, 2 * n), 0.0);
        let c = 0.9f64.powi(10);
        let total: f64 = (0..=n).map(|r| binom(n, r) * (2.0 - c).powi((n - r) as i32) * c.powi(r as i32)).sum::<f64>()
            / 2f64.powi(n as i32);
        assert!((total - 1.0).abs() < 1e-13);
        assert!(rel(exact_trace_deficit(n, d, p, 0), 1.0 - (2.0 - c).powi(n as i32) / 2f64.powi(n as i32)) < 1e-12);
    }

    fn binom(n: usize, k: usize) -> f64 {
        (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
    }

    #[test]
    fn table_size_bound_small() {
        let ln = ln_table_size_bound(3, 2);
        assert!((ln.exp() - (1.0 + 6.0 + 15.0)).abs() < 1e-12);
        assert!((ln_table_size_bound(3, 6).exp() - 64.0).abs() < 1e-10);
    }

    #[test]
    fn rank_bound() {
        assert_eq!(rank_td_bound(5.0, 0.0).unwrap(), 0.0);
        assert_eq!(rank_td_bound(1.0, 0.3).unwrap(), 0.6);
        assert!(rank_td_bound(0.0, 0.3).is_err());
        assert!(rank_td_bound(1.0, -0.3).is_err());
    }

    #[test]
    fn threshold_values() {
        let dt = depth_threshold(10, 0.1).unwrap();
        assert!(rel(dt, (4.0 * 10f64.ln() + 2.0 * 4f64.ln()) / (1.0 / 0.9f64).ln()) < 1e-15);
        assert!(dt > 10.0);
        assert_eq!(depth_threshold(10, 1.0).unwrap(), 0.0);
        let mut last = 0.0;
        for n in 2..=1000 {
            let v = depth_threshold(n, 0.2).unwrap();
            assert!(v > last);
            last = v;
        }
        assert!(depth_threshold(10, 0.2).unwrap() < depth_threshold(10, 0.1).unwrap());
        let p = 0.3;
        let big = 1e12 as usize;
        let ratio = depth_threshold(big, p).unwrap() / (big as f64).ln();
        assert!((ratio - 4.0 / (1.0 / (1.0 - p)).ln()).abs() < 0.1 * ratio);
        assert!(depth_threshold(1, 0.2).is_err());
    }

    #[test]
    fn select_k_refusals() {
        assert!(matches!(select_k(10, 10, 0.1, 0.1), Err(BoundsError::BelowThreshold { .. })));
        assert!(matches!(select_k(10, 100, 0.1, 0.0), Err(BoundsError::EpsilonOutOfRange(_))));
    }

    #[test]
    fn select_k_certifies() {
        for &(n, p, eps) in &[(4usize, 0.4, 0.2), (100, 0.1, 0.1), (1000, 0.05, 0.01), (50, 0.3, 0.5)] {
            let dt = depth_threshold(n, p).unwrap();
            for extra in [1usize, 5, 40] {
                let d = dt.ceil() as usize + extra;
                let b = select_k(n, d, p, eps).unwrap();
                let delta = b.delta.unwrap();
                assert!(b.td_bound <= delta, "n={n} d={d}: {} > {delta}", b.td_bound);
                assert!((b.k + 1) as f64 >= n as f64 * (1.0 - p).powi(d as i32));
                assert!(scan_k(n, d, p, eps).unwrap() <= b.k);
                assert_eq!(b.regime, BoundRegime::Chernoff);
            }
        }
        let b = select_k(4, 30, 0.4, 0.2).unwrap();
        assert_eq!(b.k, 1);
    }

    #[test]
    fn select_k_full_damping() {
        let b = select_k(10, 1, 1.0, 0.1).unwrap();
        assert_eq!(b.k, 0);
        assert_eq!(b.td_bound, 0.0);
    }

    #[test]
    fn k_is_non_increasing_in_n() {
        // Fixed λ: d grows with ln n.
        let (p, eps, lambda) = (0.2f64, 0.05, 12.0);
        let mut last = usize::MAX;
        for n in [16usize, 64, 256, 1024, 4096] {
            let d = (lambda * (n as f64).ln() / -(1.0 - p).ln()).ceil() as usize;
            let k = select_k(n, d, p, eps).unwrap().k;
            assert!(k <= last, "n={n}: {k} > {last}");
            last = k;
        }
    }

    proptest! {
        #[test]
        fn hs_bound_monotone(n in 2usize..60, p in 0.05f64..0.9, d in 1usize..60, k in 0usize..30) {
            if let (Ok(a), Ok(b)) = (hs_truncation_bound(n, d, p, k), hs_truncation_bound(n, d, p, k + 1)) {
                prop_assert!(b <= a * (1.0 + 1e-12));
            }
            if let (Ok(a), Ok(b)) = (hs_truncation_bound(n, d, p, k), hs_truncation_bound(n, d + 1, p, k)) {
                prop_assert!(b <= a * (1.0 + 1e-12));
            }
            let t0 = hs_tail_sum_bound(n, d, p, k);
            prop_assert!(hs_tail_sum_bound(n, d, p, k + 1) <= t0 * (1.0 + 1e-12));
        }
    }
}
