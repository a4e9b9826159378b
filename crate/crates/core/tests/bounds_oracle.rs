use iqpdamp::bounds::{
    certified_td_bound, chernoff_regime, coefficient_bound, exact_trace_deficit, hs_tail_sum_bound,
    hs_truncation_bound, ln_table_size_bound, scan_k, select_k, trace_deficit_bound, ErrorBudget,
};
use iqpdamp::circuit::{random_circuit, Circuit};
use iqpdamp::dense::{evolve_dense, hs_distance, truncate_by_weight};
use iqpdamp::pipeline::simulate;
use proptest::prelude::*;

fn table_size_bound(n: usize, k: usize) -> f64 {
    ln_table_size_bound(n, k).exp()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 40, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn coefficients_respect_the_per_entry_bound(
        n in 2usize..6, d in 1usize..14, p in 0.05f64..0.95, locality in 2usize..4, seed in any::<u64>()
    ) {
        let c = random_circuit(n, d, p, locality, seed).unwrap();
        let table = simulate(&c, 2 * n).unwrap();
        for (index, value) in table.iter() {
            let bound = coefficient_bound(index.weight(), index.zero_blocks(n), d, p, n).unwrap();
            prop_assert!(value.norm() <= bound * (1.0 + 1e-10), "{:?}: {} > {}", index, value.norm(), bound);
            prop_assert!((table.get(&index.adjoint()) - value.conj()).norm() < 1e-15);
        }
    }

    #[test]
    fn table_size_is_bounded(n in 2usize..7, d in 1usize..8, k in 0usize..6, seed in any::<u64>()) {
        let table = simulate(&random_circuit(n, d, 0.2, 2, seed).unwrap(), k).unwrap();
        prop_assert!(table.len() as f64 <= table_size_bound(n, k) * (1.0 + 1e-12));
    }

    #[test]
    fn measured_errors_stay_below_bounds(n in 2usize..7, d in 1usize..30, p in 0.05f64..0.9, seed in any::<u64>()) {
        let rho = evolve_dense(&random_circuit(n, d, p, 2, seed).unwrap()).unwrap();
        for k in 0..=2 * n {
            let sigma = truncate_by_weight(&rho, k);
            let eps2 = hs_distance(&rho, &sigma).unwrap().powi(2);
            let deficit = (rho.trace() - sigma.trace()).re;
            prop_assert!(eps2 <= hs_tail_sum_bound(n, d, p, k) + 1e-12);
            prop_assert!((deficit - exact_trace_deficit(n, d, p, k)).abs() < 1e-12);
            if chernoff_regime(n, d, p, k) {
                prop_assert!(eps2 <= hs_truncation_bound(n, d, p, k).unwrap() + 1e-12);
                prop_assert!(deficit.abs() <= trace_deficit_bound(n, d, p, k).unwrap() + 1e-12);
            }
        }
    }

    #[test]
    fn selected_cutoff_certifies_its_target(n in 2usize..60, extra in 0usize..200, p in 0.05f64..0.9, eps in 0.01f64..1.0) {
        let threshold = iqpdamp::bounds::depth_threshold(n, p).unwrap();
        let d = threshold.ceil() as usize + 1 + extra;
        match select_k(n, d, p, eps) {
            Ok(budget) => {
                let delta = budget.delta.unwrap();
                prop_assert!(budget.td_bound <= delta * (1.0 + 1e-12));
                prop_assert!(chernoff_regime(n, d, p, budget.k));
                let rank = table_size_bound(n, budget.k).min(2f64.powi(n as i32));
                prop_assert!(rank.sqrt() * budget.hs_bound.sqrt() + budget.trace_bound <= delta * (1.0 + 1e-9));
                prop_assert!(scan_k(n, d, p, eps).unwrap() <= budget.k);
            }
            Err(e) => prop_assert!(e.to_string().contains("no certificate"), "{e}"),
        }
    }
}

#[test]
fn idle_circuit_saturates_the_coefficient_bound() {
    for (n, d, p) in [(4, 20, 0.3), (3, 5, 0.5), (5, 2, 0.05)] {
        let table = simulate(&Circuit::idle(n, d, p).unwrap(), 2 * n).unwrap();
        assert_eq!(table.len(), 1 << (2 * n));
        for (index, value) in table.iter() {
            let bound = coefficient_bound(index.weight(), index.zero_blocks(n), d, p, n).unwrap();
            assert!((value.norm() - bound).abs() <= 1e-12 * bound);
        }
    }
}

#[test]
fn truncation_bound_is_monotone_on_a_grid() {
    for n in [4, 10, 50, 400] {
        for p in [0.05, 0.2, 0.6] {
            for d in 1..80 {
                let mut last = f64::INFINITY;
                for k in 0..2 * n {
                    if !chernoff_regime(n, d, p, k) {
                        continue;
                    }
                    let b = hs_truncation_bound(n, d, p, k).unwrap();
                    assert!(b <= last * (1.0 + 1e-12), "n={n} p={p} d={d} k={k}");
                    last = b;
                    if chernoff_regime(n, d - 1, p, k) && d > 1 {
                        assert!(b <= hs_truncation_bound(n, d - 1, p, k).unwrap() * (1.0 + 1e-12));
                    }
                }
            }
        }
    }
}

#[test]
fn budgets_report_consistent_fields() {
    let b = ErrorBudget::for_cutoff(10, 10, 0.1, 6).unwrap();
    assert_eq!(b.regime.as_str(), "chernoff");
    assert!((b.td_bound - certified_td_bound(10, 10, 0.1, 6).unwrap()).abs() < 1e-15);
    let b = ErrorBudget::for_cutoff(10, 10, 0.1, 0).unwrap();
    assert_eq!(b.regime.as_str(), "tail-sum");
    assert!((b.trace_bound - exact_trace_deficit(10, 10, 0.1, 0)).abs() < 1e-15);
}

#[test]
fn large_registers_stay_finite() {
    let b = select_k(2000, 4000, 0.1, 0.05).unwrap();
    assert!(b.td_bound.is_finite() && b.td_bound <= b.delta.unwrap());
    assert!(hs_truncation_bound(5000, 2000, 0.1, 40).unwrap().is_finite());
}
