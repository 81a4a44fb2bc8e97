//! Root finding, the cutoff-matrix oracle, resonances, and Jordan chains.

use num_complex::Complex64;
use qwres_core::gallery::{DoubleBarrier, TripleBarrier};
use qwres_core::roots::{
    all_roots, cluster_roots, eval_poly, nth_derivative_over_factorial, poly_from_roots,
};
use qwres_core::solver::{
    self, cutoff_matrix, eigen_oracle, jordan_chain, resonant_state, SolverOptions,
};
use qwres_core::walk::{apply_u, Coin, CoinSequence, IntervalZ, WalkState};
use qwres_core::Error;
use std::f64::consts::FRAC_1_SQRT_2;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn multiset_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    assert_eq!(a.len(), b.len(), "multiset size mismatch");
    let mut unused: Vec<Complex64> = b.to_vec();
    let mut worst: f64 = 0.0;
    for &x in a {
        let (i, d) = unused
            .iter()
            .enumerate()
            .map(|(i, &y)| (i, (x - y).norm()))
            .min_by(|l, r| l.1.total_cmp(&r.1))
            .expect("nonempty");
        worst = worst.max(d);
        unused.swap_remove(i);
    }
    worst
}

#[test]
fn roots_of_a_factored_cubic() {
    let want = [c(1.0, 0.0), c(0.0, 2.0), c(-3.0, 0.0)];
    let coeffs = poly_from_roots(&want);
    let set = all_roots(&coeffs).unwrap();
    assert_eq!(set.zero_multiplicity, 0);
    assert!(multiset_distance(&set.nonzero, &want) <= 1e-10);
}

#[test]
fn roots_of_unity() {
    // λ⁸ - 1.
    let mut coeffs = vec![c(0.0, 0.0); 9];
    coeffs[0] = c(-1.0, 0.0);
    coeffs[8] = c(1.0, 0.0);
    let set = all_roots(&coeffs).unwrap();
    let want: Vec<Complex64> = (0..8)
        .map(|j| Complex64::from_polar(1.0, std::f64::consts::PI * j as f64 / 4.0))
        .collect();
    assert!(multiset_distance(&set.nonzero, &want) <= 1e-10);
}

#[test]
fn origin_roots_are_deflated_structurally() {
    // λ³(λ - 2).
    let coeffs = [
        c(0.0, 0.0),
        c(0.0, 0.0),
        c(0.0, 0.0),
        c(-2.0, 0.0),
        c(1.0, 0.0),
    ];
    let set = all_roots(&coeffs).unwrap();
    assert_eq!(set.zero_multiplicity, 3);
    assert_eq!(set.nonzero.len(), 1);
    assert!((set.nonzero[0] - c(2.0, 0.0)).norm() <= 1e-12);
}

#[test]
fn clustering_confirms_a_triple_root() {
    // (λ - 1)³(λ + 2).
    let want = [c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(-2.0, 0.0)];
    let coeffs = poly_from_roots(&want);
    let set = all_roots(&coeffs).unwrap();
    let clusters = cluster_roots(&set.nonzero, &coeffs, 1e-4, 1e-6);
    let mut mults: Vec<usize> = clusters.iter().map(|cl| cl.multiplicity).collect();
    mults.sort_unstable();
    assert_eq!(mults, vec![1, 3]);
    let triple = clusters.iter().find(|cl| cl.multiplicity == 3).unwrap();
    assert!((triple.z - c(1.0, 0.0)).norm() <= 1e-4);
}

#[test]
fn derivative_jets_match_hand_values() {
    // p(λ) = (λ - 2)⁴: p'''(3)/3! = 4·(3-2) = 4.
    let coeffs = poly_from_roots(&[c(2.0, 0.0); 4]);
    let z = c(3.0, 0.0);
    assert!((nth_derivative_over_factorial(&coeffs, z, 0) - eval_poly(&coeffs, z)).norm() <= 1e-12);
    assert!((nth_derivative_over_factorial(&coeffs, z, 3) - c(4.0, 0.0)).norm() <= 1e-12);
    assert!((nth_derivative_over_factorial(&coeffs, z, 4) - c(1.0, 0.0)).norm() <= 1e-12);
}

#[test]
fn no_resonances_without_two_nondiagonal_coins() {
    let opts = SolverOptions::default();
    // Free walk.
    let (res, summary) = solver::find_resonances(&CoinSequence::free(), &opts).unwrap();
    assert!(res.is_empty());
    assert_eq!(summary.sum_mult, 0);
    // A single coin.
    let single = CoinSequence::new([(0, Coin::rotation(0.7).unwrap())]);
    let (res, _) = solver::find_resonances(&single, &opts).unwrap();
    assert!(res.is_empty());
    // One rotation plus any number of diagonal coins.
    let phase = Coin::new([
        [Complex64::from_polar(1.0, 0.4), c(0.0, 0.0)],
        [c(0.0, 0.0), Complex64::from_polar(1.0, 0.2)],
    ])
    .unwrap();
    let mixed = CoinSequence::new([(0, Coin::rotation(0.7).unwrap()), (3, phase), (-2, phase)]);
    let (res, _) = solver::find_resonances(&mixed, &opts).unwrap();
    assert!(res.is_empty());
}

#[test]
fn resonances_live_in_the_punctured_unit_disc() {
    let opts = SolverOptions::default();
    for seed in [5u64, 17, 23, 31] {
        let coins = qwres_core::gallery::random_walk(seed, 7).unwrap();
        let (res, summary) = solver::find_resonances(&coins, &opts).unwrap();
        for r in &res {
            assert!(r.lambda.norm() < 1.0, "resonance outside the open disc");
            assert!(r.lambda.norm() > 0.0);
            assert!(r.residual <= 1e-6);
        }
        let total: usize = res.iter().map(|r| r.multiplicity).sum();
        assert!(total <= summary.budget);
        assert_eq!(total, summary.sum_mult);
    }
}

#[test]
fn sigma_roots_agree_with_the_cutoff_matrix() {
    let opts = SolverOptions::default();
    for coins in [
        DoubleBarrier::new(3, 0.5).unwrap().coins,
        TripleBarrier::new(0.3, 0.5, 0.7).unwrap().coins,
        qwres_core::gallery::random_walk(42, 6).unwrap(),
    ] {
        let (res, _) = solver::find_resonances(&coins, &opts).unwrap();
        let j = coins.chs().unwrap();
        let e = cutoff_matrix(&coins, j).unwrap();
        let eig = eigen_oracle(&e).unwrap();
        let from_sigma: Vec<Complex64> = res
            .iter()
            .flat_map(|r| std::iter::repeat_n(r.lambda, r.multiplicity))
            .collect();
        let from_eig: Vec<Complex64> = eig
            .iter()
            .filter(|(l, _)| l.norm() > opts.zero_radius)
            .flat_map(|(l, m)| std::iter::repeat_n(*l, *m))
            .collect();
        assert!(multiset_distance(&from_sigma, &from_eig) <= 1e-6);
    }
}

#[test]
fn cutoff_matrix_is_the_restricted_evolution() {
    let coins = DoubleBarrier::new(2, 0.6).unwrap().coins;
    let j = IntervalZ::new(-1, 3).unwrap();
    let e = cutoff_matrix(&coins, j).unwrap();
    let psi = WalkState::from_amplitudes(&[
        (-1, [c(0.2, 0.1), c(0.0, -0.3)]),
        (2, [c(0.5, 0.0), c(0.1, 0.4)]),
    ])
    .unwrap();
    // E_J (1_J ψ) = 1_J U (1_J ψ).
    let v = e.state_to_vec(&psi.restrict(&j));
    let ev = &e.m * &v;
    let got = e.vec_to_state(&ev);
    let want = apply_u(&coins, &psi.restrict(&j)).restrict(&j);
    assert!(got.add_scaled(&want, c(-1.0, 0.0)).norm() <= 1e-13);
}

#[test]
fn state_vector_roundtrip() {
    let coins = DoubleBarrier::new(2, 0.6).unwrap().coins;
    let j = IntervalZ::new(0, 4).unwrap();
    let e = cutoff_matrix(&coins, j).unwrap();
    let psi = WalkState::from_amplitudes(&[(1, [c(0.3, 0.2), c(-0.1, 0.7)])]).unwrap();
    let back = e.vec_to_state(&e.state_to_vec(&psi.restrict(&j)));
    assert!(back.add_scaled(&psi.restrict(&j), c(-1.0, 0.0)).norm() <= 1e-15);
}

#[test]
fn eigen_oracle_refuses_oversize_windows() {
    let coins = DoubleBarrier::new(2, 0.6).unwrap().coins;
    let j = IntervalZ::new(-200, 200).unwrap();
    match cutoff_matrix(&coins, j).and_then(|e| eigen_oracle(&e)) {
        Err(Error::Oversize { .. }) => {}
        other => panic!("expected Oversize, got {other:?}"),
    }
}

#[test]
fn jordan_chain_satisfies_the_chain_identities() {
    let opts = SolverOptions::default();
    let tb = TripleBarrier::new(0.75, 12.0 / 13.0, 1.0 / 3.0).unwrap();
    let lambda = c(0.0, FRAC_1_SQRT_2);
    let chain = jordan_chain(&tb.coins, lambda, 2, None, &opts).unwrap();
    assert_eq!(chain.len(), 2);
    assert!(chain.defect(&tb.coins) <= 1e-9);

    // Head solves (U - λ)φ₁ = 0; the second member maps onto the head.
    let u1 = apply_u(&tb.coins, &chain.states[0].state);
    let w = chain.states[0].state.window();
    for x in (w.lo() + 1)..w.hi() {
        let d0 = u1.amp(x);
        let s0 = chain.states[0].state.amp(x);
        let r = ((d0[0] - lambda * s0[0]).norm_sqr() + (d0[1] - lambda * s0[1]).norm_sqr()).sqrt();
        assert!(r <= 1e-9 * chain.states[0].state.max_site_norm());
    }
}

#[test]
fn jordan_chain_rejects_wrong_requests() {
    let opts = SolverOptions::default();
    let db = DoubleBarrier::new(2, 0.5).unwrap();
    // Not a resonance at all.
    assert!(jordan_chain(&db.coins, c(0.3, 0.3), 1, None, &opts).is_err());
    // Simple resonance cannot carry a chain of length 2.
    let lambda = db.exact_resonances()[0];
    assert!(jordan_chain(&db.coins, lambda, 2, None, &opts).is_err());
}

#[test]
fn resonant_state_has_outgoing_far_fields() {
    // Outside the perturbation the state is exactly c₋(λˣ, 0) on the left
    // and c₊(0, λ⁻ˣ) on the right.
    let opts = SolverOptions::default();
    let db = DoubleBarrier::new(3, 0.7).unwrap();
    let window = IntervalZ::new(-5, 8).unwrap();
    let lambda = db.exact_resonances()[2];
    let st = resonant_state(&db.coins, lambda, Some(window), &opts).unwrap();
    let scale = st.state.max_site_norm();
    for x in window.lo()..0 {
        let a = st.state.amp(x);
        assert!((a[0] - st.c_minus * lambda.powi(x as i32)).norm() <= 1e-10 * scale);
        assert!(
            a[1].norm() <= 1e-10 * scale,
            "left R component should vanish"
        );
    }
    for x in 4..=window.hi() {
        let a = st.state.amp(x);
        assert!((a[1] - st.c_plus * lambda.powi(-(x as i32))).norm() <= 1e-10 * scale);
        assert!(
            a[0].norm() <= 1e-10 * scale,
            "right L component should vanish"
        );
    }
}

#[test]
fn incoming_set_mirrors_outgoing_for_symmetric_coins() {
    // c₁₁ = c₂₂ everywhere (rotation coins), so incoming = {1/conj(λ)}.
    let opts = SolverOptions::default();
    let db = DoubleBarrier::new(4, 0.6).unwrap();
    let (out, _) = solver::find_resonances(&db.coins, &opts).unwrap();
    let inc = solver::incoming_resonances(&db.coins, &opts).unwrap();
    let want: Vec<Complex64> = out
        .iter()
        .flat_map(|r| std::iter::repeat_n(c(1.0, 0.0) / r.lambda.conj(), r.multiplicity))
        .collect();
    let got: Vec<Complex64> = inc
        .iter()
        .flat_map(|r| std::iter::repeat_n(r.lambda, r.multiplicity))
        .collect();
    let scale = 1.0 + want.iter().map(|l| l.norm()).fold(0.0, f64::max);
    assert!(multiset_distance(&got, &want) <= 1e-6 * scale);
    for r in &inc {
        assert!(
            r.lambda.norm() > 1.0,
            "incoming resonances lie outside the disc"
        );
    }
}

#[test]
fn batch_solver_matches_single_calls() {
    let opts = SolverOptions::default();
    let walks: Vec<CoinSequence> = (0..6)
        .map(|s| qwres_core::gallery::random_walk(s, 4).unwrap())
        .collect();
    let batch = solver::find_resonances_batch(&walks, &opts);
    for (coins, b) in walks.iter().zip(batch) {
        let single = solver::find_resonances(coins, &opts).unwrap();
        let b = b.unwrap();
        let lb: Vec<Complex64> = b.0.iter().map(|r| r.lambda).collect();
        let ls: Vec<Complex64> = single.0.iter().map(|r| r.lambda).collect();
        assert_eq!(lb.len(), ls.len());
        assert!(multiset_distance(&lb, &ls) <= 1e-12);
    }
}
