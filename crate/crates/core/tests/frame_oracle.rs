use iqpdamp::circuit::{random_circuit, Circuit, Gate};
use iqpdamp::dense::{evolve_dense, frame_to_dense, hs_distance, reconstruct_from_frames, DenseMatrix};
use iqpdamp::frame::{
    apply_damping_layer, canonicalize, initial_representatives, initial_strings, llocal_branch, propagate, FrameString,
    Propagator, Slot,
};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_slot(rng: &mut impl Rng) -> Slot {
    match rng.gen_range(0..3) {
        0 => Slot::Plus,
        1 => Slot::Minus,
        _ => Slot::Diag(Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))),
    }
}

fn random_string(n: usize, rng: &mut impl Rng) -> FrameString {
    let slots: Vec<Slot> = (0..n).map(|_| random_slot(rng)).collect();
    FrameString::from_slots(&slots, Complex64::from_polar(rng.gen_range(0.1..2.0), rng.gen_range(0.0..6.3)))
}

/// `U ρ U†` for a diagonal gate.
fn conjugate(rho: &DenseMatrix, gate: &Gate) -> DenseMatrix {
    let mut out = rho.clone();
    for r in 0..rho.dim() {
        for c in 0..rho.dim() {
            let phase = gate.basis_phase(r) - gate.basis_phase(c);
            out.set(r, c, rho.get(r, c) * Complex64::from_polar(1.0, phase));
        }
    }
    out
}

#[test]
fn three_local_branching_matches_dense_conjugation() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..200 {
        let s = random_string(3, &mut rng);
        let theta = if case % 2 == 0 { std::f64::consts::PI } else { rng.gen_range(0.0..6.3) };
        let branches = llocal_branch(&s, &[0, 1, 2], theta).unwrap();
        assert!(branches.len() <= 5, "{} branches", branches.len());
        let got = reconstruct_from_frames(3, branches.iter()).unwrap();
        let want = conjugate(&frame_to_dense(&s).unwrap(), &Gate::cphase(vec![0, 1, 2], theta));
        assert!(hs_distance(&got, &want).unwrap() < 1e-12, "case {case}");
    }
}

#[test]
fn wide_gates_on_larger_registers_match_dense() {
    for seed in 0..12 {
        let n = 4 + seed as usize % 2;
        let c = random_circuit(n, 4, 0.15, 4, seed).unwrap();
        let strings: Vec<FrameString> =
            initial_strings(n, n).unwrap().flat_map(|s| propagate(&s, &c).unwrap().into_vec()).collect();
        let got = reconstruct_from_frames(n, &strings).unwrap();
        let want = evolve_dense(&c).unwrap();
        assert!(hs_distance(&got, &want).unwrap() < 1e-10, "seed {seed}");
    }
}

#[test]
fn representatives_and_adjoints_rebuild_the_state() {
    let c = random_circuit(4, 6, 0.3, 2, 5).unwrap();
    let propagator = Propagator::new(&c);
    let mut rho = DenseMatrix::zeros(4).unwrap();
    for s in initial_representatives(4, 4).unwrap() {
        for out in propagator.propagate(&s).unwrap() {
            iqpdamp::dense::add_frame(&mut rho, &out).unwrap();
            if out.offdiag_weight() > 0 {
                iqpdamp::dense::add_frame(&mut rho, &out.adjoint()).unwrap();
            }
        }
    }
    assert!(hs_distance(&rho, &evolve_dense(&c).unwrap()).unwrap() < 1e-10);
    assert!(rho.hermiticity_defect() < 1e-12);
}

#[test]
fn propagation_commutes_with_adjoint() {
    let c = random_circuit(5, 5, 0.25, 3, 2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..30 {
        let s = random_string(5, &mut rng);
        let forward = reconstruct_from_frames(5, propagate(&s, &c).unwrap().iter()).unwrap();
        let adjoint = reconstruct_from_frames(5, propagate(&s.adjoint(), &c).unwrap().iter()).unwrap();
        for r in 0..32 {
            for col in 0..32 {
                assert!((forward.get(r, col) - adjoint.get(col, r).conj()).norm() < 1e-12);
            }
        }
    }
}

#[test]
fn canonicalization_round_trips() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..100 {
        let n = rng.gen_range(1..9);
        let s = random_string(n, &mut rng);
        let (perm, canonical) = canonicalize(&s);
        let plus: Vec<usize> = canonical.plus().collect();
        let minus: Vec<usize> = canonical.minus().collect();
        assert_eq!(plus, (0..plus.len()).collect::<Vec<_>>());
        assert_eq!(minus, (plus.len()..plus.len() + minus.len()).collect::<Vec<_>>());
        assert_eq!(canonical.relabeled(&perm.inverse()), s);
        assert_eq!(canonical.coefficient(), s.coefficient());
    }
}

#[test]
fn relabeled_circuit_matches_relabeled_strings() {
    let c = random_circuit(4, 5, 0.2, 2, 9).unwrap();
    let images = vec![2, 0, 3, 1];
    let perm = iqpdamp::frame::Permutation::new(images.clone()).unwrap();
    let moved: Circuit = c.relabeled(&images);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..20 {
        let s = random_string(4, &mut rng);
        let a: Vec<FrameString> = propagate(&s, &c).unwrap().iter().map(|t| t.relabeled(&perm)).collect();
        let b = propagate(&s.relabeled(&perm), &moved).unwrap();
        let da = reconstruct_from_frames(4, &a).unwrap();
        let db = reconstruct_from_frames(4, b.iter()).unwrap();
        assert!(hs_distance(&da, &db).unwrap() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn damping_contracts_diagonal_arguments(seed in any::<u64>(), p in 0.01f64..1.0, layers in 1usize..20) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let slots: Vec<Slot> = (0..6)
            .map(|_| {
                let a = Complex64::from_polar(rng.gen_range(0.0..=1.0), rng.gen_range(0.0..6.3));
                if rng.gen_bool(0.3) { Slot::Plus } else { Slot::Diag(a) }
            })
            .collect();
        let mut s = FrameString::from_slots(&slots, Complex64::new(1.0, 0.0));
        for _ in 0..layers {
            let next = apply_damping_layer(&s, p).unwrap();
            for ((q, before), (_, after)) in s.diag_args().into_iter().zip(next.diag_args()) {
                prop_assert!(after.norm() <= before.norm() * (1.0 + 1e-12), "qubit {q}");
            }
            s = next;
        }
    }

    #[test]
    fn branch_count_is_bounded(seed in any::<u64>(), locality in 2usize..5, d in 1usize..5, m in 0usize..3) {
        let c = random_circuit(6, d, 0.2, locality, seed).unwrap();
        let per_gate = ((1usize << (locality - 1)) + 1) as f64;
        let bound = per_gate.powi((m * d) as i32);
        for s in initial_strings(6, m).unwrap().filter(|s| s.offdiag_weight() == m).take(40) {
            prop_assert!(propagate(&s, &c).unwrap().len() as f64 <= bound);
        }
    }
}
