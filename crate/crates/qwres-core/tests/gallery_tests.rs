//! Gallery models against their closed-form ground truth.

use num_complex::Complex64;
use qwres_core::gallery::{
    alpha_general, gauge_condition, gauge_transform, group_product, quartic_of, DoubleBarrier,
    GroupElement, PerturbationFamily, TripleBarrier,
};
use qwres_core::roots::eval_poly;
use qwres_core::solver::{self, SolverOptions};
use qwres_core::transfer::sigma;
use qwres_core::walk::{apply_u, Coin, CoinSequence, IntervalZ, WalkState};
use std::f64::consts::{FRAC_1_SQRT_2, PI};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Greedy multiset distance between equally long complex lists.
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
fn double_barrier_matches_solver_across_grid() {
    let opts = SolverOptions::default();
    for k in [1, 2, 3, 5, 8, 13, 16] {
        for r in [0.3, FRAC_1_SQRT_2, 0.9] {
            let db = DoubleBarrier::new(k, r).unwrap();
            let (found, summary) = solver::find_resonances(&db.coins, &opts).unwrap();
            let exact = db.exact_resonances();
            assert_eq!(found.len(), exact.len(), "k={k} r={r}: count");
            assert!(
                found.iter().all(|r| r.multiplicity == 1),
                "k={k} r={r}: all simple"
            );
            let got: Vec<Complex64> = found.iter().map(|r| r.lambda).collect();
            let d = multiset_distance(&got, &exact);
            assert!(d <= 1e-8, "k={k} r={r}: multiset distance {d:.2e}");
            assert_eq!(summary.sum_mult, 2 * k as usize);
            assert!((summary.lambda0 - r.powf(1.0 / k as f64)).abs() <= 1e-9);
        }
    }
}

#[test]
fn double_barrier_k1_half() {
    let db = DoubleBarrier::new(1, 0.5).unwrap();
    assert!((db.alpha() - c(-0.25, 0.0)).norm() <= 1e-15);
    assert_eq!(db.period(), 2);
    let exact = db.exact_resonances();
    let want = [c(0.0, 0.5), c(0.0, -0.5)];
    assert!(multiset_distance(&exact, &want) <= 1e-12);
}

#[test]
fn alpha_general_agrees_with_closed_form() {
    let db = DoubleBarrier::new(4, 0.6).unwrap();
    let a = alpha_general(&db.coins, 0, 4).unwrap();
    assert!((a - db.alpha()).norm() <= 1e-14);

    // Diagonal coins between the barriers contribute their determinants.
    let phase = Coin::new([
        [c(0.0, 1.0).exp(), c(0.0, 0.0)],
        [c(0.0, 0.0), c(0.0, -0.3).exp()],
    ])
    .unwrap();
    let dressed = db.coins.with_coin(2, phase);
    let a2 = alpha_general(&dressed, 0, 4).unwrap();
    assert!((a2 - db.alpha() * phase.det()).norm() <= 1e-14);

    // A non-diagonal interior coin breaks the double-barrier structure.
    let bad = db.coins.with_coin(2, Coin::rotation(0.3).unwrap());
    assert!(alpha_general(&bad, 0, 4).is_err());
}

/// Steps the walk and collects the restriction to `[0, N]` at each time.
fn box_snapshots(coins: &CoinSequence, psi: &WalkState, n_max: usize) -> Vec<WalkState> {
    let boxj = IntervalZ::new(0, 5).unwrap();
    let mut cur = psi.clone();
    let mut out = vec![cur.restrict(&boxj)];
    for _ in 0..n_max {
        cur = apply_u(coins, &cur);
        out.push(cur.restrict(&boxj));
    }
    out
}

#[test]
fn quasi_periodicity_is_exact_inside_the_box() {
    // Any state whose incoming support sits strictly between the barriers
    // obeys ψ_{n+2N} = α ψ_n on [0, N] for every n, not just eventually.
    let db = DoubleBarrier::new(5, 0.6).unwrap();
    let alpha = db.alpha();
    let states = [
        WalkState::from_amplitudes(&[(1, [c(0.0, 0.0), c(1.0, 0.0)])]).unwrap(),
        WalkState::from_amplitudes(&[
            (2, [c(0.3, -0.1), c(0.2, 0.4)]),
            (3, [c(-0.5, 0.2), c(0.1, 0.0)]),
        ])
        .unwrap(),
    ];
    for psi in &states {
        let snaps = box_snapshots(&db.coins, psi, 40);
        for n in 0..=30 {
            let diff = snaps[n + 10].add_scaled(&snaps[n], -alpha).norm();
            assert!(diff <= 1e-13, "n={n}: |ψ_(n+10) - αψ_n| = {diff:.2e}");
        }
    }
}

#[test]
fn quasi_periodicity_with_diagonal_interior_coins() {
    // The identity survives diagonal coins between the barriers, with α
    // picking up their determinants.
    let db = DoubleBarrier::new(5, 0.7).unwrap();
    let phase = Coin::new([
        [c(0.0, 0.9).exp(), c(0.0, 0.0)],
        [c(0.0, 0.0), c(0.0, 0.4).exp()],
    ])
    .unwrap();
    let coins = db.coins.with_coin(2, phase);
    let alpha = alpha_general(&coins, 0, 5).unwrap();
    let psi = WalkState::from_amplitudes(&[(3, [c(0.8, 0.1), c(-0.2, 0.5)])]).unwrap();
    let snaps = box_snapshots(&coins, &psi, 36);
    for n in 0..=26 {
        let diff = snaps[n + 10].add_scaled(&snaps[n], -alpha).norm();
        assert!(diff <= 1e-13, "n={n}: defect {diff:.2e}");
    }
}

#[test]
fn closed_form_states_solve_the_eigenequation() {
    let db = DoubleBarrier::new(5, FRAC_1_SQRT_2).unwrap();
    let window = IntervalZ::new(-6, 11).unwrap();
    for lambda in db.exact_resonances() {
        let phi = db.closed_form_state(lambda, window);
        let u = apply_u(&db.coins, &phi);
        let scale = phi.max_site_norm();
        for x in (window.lo() + 1)..=(window.hi() - 1) {
            let ua = u.amp(x);
            let pa = phi.amp(x);
            let d =
                ((ua[0] - lambda * pa[0]).norm_sqr() + (ua[1] - lambda * pa[1]).norm_sqr()).sqrt();
            assert!(d <= 1e-12 * scale, "λ={lambda}: site {x} defect {d:.2e}");
        }
    }
}

#[test]
fn closed_form_state_matches_solver_state_up_to_scalar() {
    let db = DoubleBarrier::new(5, FRAC_1_SQRT_2).unwrap();
    let opts = SolverOptions::default();
    let window = IntervalZ::new(-4, 9).unwrap();
    let lambda = db.exact_resonances()[0];
    let phi = db.closed_form_state(lambda, window);
    let solved = solver::resonant_state(&db.coins, lambda, Some(window), &opts).unwrap();
    // Fix the scalar from the largest site and compare everywhere.
    let (x0, _) = window
        .sites()
        .map(|x| {
            let a = phi.amp(x);
            (x, (a[0].norm_sqr() + a[1].norm_sqr()).sqrt())
        })
        .max_by(|l, r| l.1.total_cmp(&r.1))
        .unwrap();
    let pa = phi.amp(x0);
    let sa = solved.state.amp(x0);
    let ratio = if pa[0].norm() > pa[1].norm() {
        sa[0] / pa[0]
    } else {
        sa[1] / pa[1]
    };
    let diff = solved.state.add_scaled(&phi, -ratio).norm() / solved.state.norm();
    assert!(diff <= 1e-10, "states differ beyond a scalar: {diff:.2e}");
}

#[test]
fn group_identity_is_neutral() {
    let coins = [
        Coin::rotation(0.3).unwrap(),
        Coin::rotation(0.8).unwrap(),
        GroupElement::new(c(1.25, 0.3), c(0.75, 0.32), 0.9)
            .map(|e| e.to_coin().unwrap())
            .unwrap_or_else(|_| Coin::rotation(0.5).unwrap()),
    ];
    let id = Coin::identity();
    for a in &coins {
        for (x, y) in [(a, &id), (&id, a)] {
            let p = group_product(x, y).unwrap();
            let d: f64 = (0..2)
                .flat_map(|i| (0..2).map(move |j| (i, j)))
                .map(|(i, j)| (p.matrix()[i][j] - a.matrix()[i][j]).norm())
                .fold(0.0, f64::max);
            assert!(d <= 1e-12, "identity not neutral: {d:.2e}");
        }
    }
}

fn matmul(a: [[Complex64; 2]; 2], b: [[Complex64; 2]; 2]) -> [[Complex64; 2]; 2] {
    let mut m = [[c(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            m[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    m
}

#[test]
fn group_product_is_the_transfer_product() {
    let coins = [
        Coin::rotation(0.3).unwrap(),
        Coin::rotation(0.8).unwrap(),
        Coin::new([[c(0.6, 0.0), c(0.0, 0.8)], [c(0.0, 0.8), c(0.6, 0.0)]]).unwrap(),
    ];
    for a in &coins {
        for b in &coins {
            let ab = group_product(a, b).unwrap();
            let ta = GroupElement::from_coin(a).to_transfer();
            let tb = GroupElement::from_coin(b).to_transfer();
            let tab = GroupElement::from_coin(&ab).to_transfer();
            let prod = matmul(ta, tb);
            let d: f64 = (0..2)
                .flat_map(|i| (0..2).map(move |j| (i, j)))
                .map(|(i, j)| (tab[i][j] - prod[i][j]).norm())
                .fold(0.0, f64::max);
            assert!(d <= 1e-12, "homomorphism defect {d:.2e}");
        }
    }
}

#[test]
fn rotations_stay_in_the_coin_group() {
    for r1 in [0.1, 0.5, 0.9] {
        for r2 in [0.2, 0.7, 0.95] {
            let p =
                group_product(&Coin::rotation(r1).unwrap(), &Coin::rotation(r2).unwrap()).unwrap();
            assert!(p.c11().norm() > 1e-12);
            // Coin::new already validated unitarity; double-check closure.
            let e = GroupElement::from_coin(&p);
            assert!((e.p.norm_sqr() - e.q.norm_sqr() - 1.0).abs() <= 1e-10);
        }
    }
}

#[test]
fn triple_barrier_quartic_and_double_roots() {
    let tb = TripleBarrier::new(0.75, 12.0 / 13.0, 1.0 / 3.0).unwrap();
    assert!(tb.multiplicity_two());
    let symmetric_triple = TripleBarrier::new(0.4, 0.9, 0.4).unwrap();
    assert!(!symmetric_triple.multiplicity_two(), "r₋₁=r₁ is excluded");

    // (λ² + 1/2)²: double roots at ±i/√2.
    let roots = tb.double_roots();
    let want = [c(0.0, FRAC_1_SQRT_2), c(0.0, -FRAC_1_SQRT_2)];
    assert!(multiset_distance(&roots, &want) <= 1e-12);

    // Quartic evaluates to zero at its own roots.
    let q = tb.quartic();
    for root in roots {
        assert!(eval_poly(&q, root).norm() <= 1e-12);
    }

    // Solver agrees with the quartic ground truth within 1e-9.
    let opts = SolverOptions::default();
    let (found, _) = solver::find_resonances(&tb.coins, &opts).unwrap();
    assert_eq!(found.len(), 2);
    for f in &found {
        assert_eq!(f.multiplicity, 2);
        let nearest = want
            .iter()
            .map(|w| (f.lambda - w).norm())
            .fold(f64::INFINITY, f64::min);
        assert!(nearest <= 1e-9);
    }
}

#[test]
fn quartic_of_matches_sigma_roots_on_generic_triples() {
    let opts = SolverOptions::default();
    for (rm, r0, rp) in [(0.3, 0.5, 0.7), (0.2, 0.9, 0.6), (0.55, 0.35, 0.8)] {
        let tb = TripleBarrier::new(rm, r0, rp).unwrap();
        let q = quartic_of(&tb.coins);
        assert!(multiset_distance(&q, &tb.quartic()) <= 1e-13);
        let (found, _) = solver::find_resonances(&tb.coins, &opts).unwrap();
        for f in &found {
            assert!(
                eval_poly(&q, f.lambda).norm() <= 1e-9,
                "quartic not zero at solver root"
            );
        }
        let sum: usize = found.iter().map(|f| f.multiplicity).sum();
        assert_eq!(sum, 4);
    }
}

#[test]
fn gauge_rotation_permutes_the_spectrum() {
    // supp c₁₂ ⊂ kℤ for the double barrier at 0 and k, so the full
    // e^{iπ/k} rotation is a symmetry; k = 1 gives Res ↦ -Res.
    let opts = SolverOptions::default();
    let db = DoubleBarrier::new(3, 0.6).unwrap();
    assert!(gauge_condition(&db.coins, 3));
    assert!(!gauge_condition(&db.coins, 2));

    let (found, _) = solver::find_resonances(&db.coins, &opts).unwrap();
    let rot = Complex64::from_polar(1.0, PI / 3.0);
    let rotated: Vec<Complex64> = found.iter().map(|f| f.lambda * rot).collect();
    let original: Vec<Complex64> = found.iter().map(|f| f.lambda).collect();
    assert!(multiset_distance(&rotated, &original) <= 1e-8);
}

#[test]
fn gauge_transform_maps_resonant_states() {
    let db = DoubleBarrier::new(2, 0.8).unwrap();
    let window = IntervalZ::new(-3, 5).unwrap();
    let lambda = db.exact_resonances()[0];
    let phi = db.closed_form_state(lambda, window);

    // The walk is unchanged; the transformed state solves the
    // eigenequation at e^{iπ/2}λ.
    let phi2 = gauge_transform(&db.coins, &phi, 1, 2).unwrap();
    let mu = Complex64::from_polar(1.0, PI / 2.0) * lambda;
    let u = apply_u(&db.coins, &phi2);
    let scale = phi2.max_site_norm();
    for x in (window.lo() + 1)..=(window.hi() - 1) {
        let ua = u.amp(x);
        let pa = phi2.amp(x);
        let d = ((ua[0] - mu * pa[0]).norm_sqr() + (ua[1] - mu * pa[1]).norm_sqr()).sqrt();
        assert!(d <= 1e-12 * scale, "site {x}: defect {d:.2e}");
    }

    // The support condition is enforced.
    assert!(gauge_transform(&db.coins, &phi, 1, 3).is_err());
}

#[test]
fn real_coins_conjugate_resonances_and_states() {
    let opts = SolverOptions::default();
    let tb = TripleBarrier::new(0.3, 0.5, 0.7).unwrap();
    assert!(tb.coins.all_real());
    let (found, _) = solver::find_resonances(&tb.coins, &opts).unwrap();
    let lams: Vec<Complex64> = found.iter().map(|f| f.lambda).collect();
    let conj: Vec<Complex64> = lams.iter().map(|l| l.conj()).collect();
    assert!(multiset_distance(&lams, &conj) <= 1e-8);

    // conj(φ_λ) is a resonant state for conj(λ).
    let window = IntervalZ::new(-4, 4).unwrap();
    let lam = found
        .iter()
        .map(|f| f.lambda)
        .find(|l| l.im.abs() > 1e-6)
        .expect("a non-real resonance");
    let phi = solver::resonant_state(&tb.coins, lam, Some(window), &opts).unwrap();
    let psi = phi.state.conjugate();
    let u = apply_u(&tb.coins, &psi);
    let scale = psi.max_site_norm();
    for x in (window.lo() + 1)..=(window.hi() - 1) {
        let ua = u.amp(x);
        let pa = psi.amp(x);
        let mu = lam.conj();
        let d = ((ua[0] - mu * pa[0]).norm_sqr() + (ua[1] - mu * pa[1]).norm_sqr()).sqrt();
        assert!(d <= 1e-10 * scale, "site {x}: defect {d:.2e}");
    }
}

#[test]
fn perturbation_family_limits_and_gamma() {
    let tb = TripleBarrier::new(0.75, 12.0 / 13.0, 1.0 / 3.0).unwrap();
    let fam = PerturbationFamily::new(&tb.coins).unwrap();

    // ε = 0 returns the base walk.
    let base = fam.perturb(0.4, 0.0).unwrap();
    for x in tb.coins.support() {
        let a = tb.coins.coin(x).matrix();
        let b = base.coin(x).matrix();
        for i in 0..2 {
            for j in 0..2 {
                assert!((a[i][j] - b[i][j]).norm() <= 1e-15);
            }
        }
    }

    // B(θ, ε) → C(x⁺) at rate O(ε), uniformly over the angle grid.
    let cx = tb.coins.coin(1).matrix();
    for g in 0..16 {
        let theta = 2.0 * PI * g as f64 / 16.0;
        for eps in [1e-3, 1e-4, 1e-5] {
            let b = fam.coin_b(theta, eps).unwrap().matrix();
            let d: f64 = (0..2)
                .flat_map(|i| (0..2).map(move |j| (i, j)))
                .map(|(i, j)| (b[i][j] - cx[i][j]).norm())
                .fold(0.0, f64::max);
            assert!(
                d <= 8.0 * eps,
                "θ={theta:.3} ε={eps:.0e}: |B - C| = {d:.2e}"
            );
        }
    }

    // γ(θ, λ₀) is the ε-derivative of σ at λ₀: finite-difference check.
    let lambda0 = c(0.0, FRAC_1_SQRT_2);
    let theta = 2.0 * PI / 16.0;
    let gamma = fam.gamma(theta, lambda0).unwrap();
    let h = 1e-6;
    let sp = sigma(&fam.perturb(theta, h).unwrap())
        .unwrap()
        .eval(lambda0);
    let s0 = sigma(&tb.coins).unwrap().eval(lambda0);
    let fd = (sp - s0) / h;
    assert!(
        (gamma - fd).norm() <= 1e-4 * gamma.norm().max(1.0),
        "γ = {gamma}, finite difference = {fd}"
    );
}

#[test]
fn splitting_radius_scales_as_sqrt_eps() {
    let tb = TripleBarrier::new(0.75, 12.0 / 13.0, 1.0 / 3.0).unwrap();
    let fam = PerturbationFamily::new(&tb.coins).unwrap();
    let lambda0 = c(0.0, FRAC_1_SQRT_2);
    let thetas = fam.generic_thetas(16, &[lambda0, -lambda0]).unwrap();
    assert!(!thetas.is_empty(), "no generic angle found");
    let theta = thetas[0];
    let r3 = fam.splitting_radius(theta, 1e-3, lambda0, 2).unwrap();
    let r5 = fam.splitting_radius(theta, 1e-5, lambda0, 2).unwrap();
    // Predicted radius (ε|γ/c|)^{1/2}: two decades in ε give one in radius.
    assert!((r3 / r5 - 10.0).abs() <= 1e-6);
}

#[test]
fn random_walks_are_admissible_with_requested_hull() {
    for seed in 0..20 {
        let card = seed % 8 + 1;
        let coins = qwres_core::gallery::random_walk(seed as u64, card).unwrap();
        let chs = coins.chs().expect("nonempty support");
        assert_eq!(chs.card(), card, "seed {seed}");
        // Every stored coin is unitary-admissible by construction; spot
        // check the determinant is unimodular.
        for x in coins.support() {
            assert!((coins.coin(x).det().norm() - 1.0).abs() <= 1e-10);
        }
    }
}
