//! Self-contained verification suite: every advertised numerical law of
//! the crate, checked at its stated tolerance with a one-line verdict.
//!
//! The checks cross independent routes against each other (closed forms
//! vs. the solver, σ-roots vs. cut-off eigenvalues, expansion predictions
//! vs. direct evolution), so a pass certifies the whole pipeline rather
//! than any single function. `run_all` is the authoritative suite; the
//! `acceptance` integration test and `qwres verify` both delegate here.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::time::Instant;

use num_complex::Complex64;

use crate::gallery::{self, DoubleBarrier, PerturbationFamily, TripleBarrier};
use crate::solver::{self, Resonance, SolverOptions};
use crate::walk::{self, Coin, CoinSequence, IntervalZ, WalkState};
use crate::{expansion, observables, transfer, Error, Result};

/// Verdict of one verification check.
#[derive(Debug, Clone)]
pub struct CheckResult {
    /// Stable short name of the check.
    pub name: &'static str,
    /// Whether every assertion of the check held.
    pub passed: bool,
    /// Measured numbers backing the verdict.
    pub detail: String,
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}: {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.detail
        )
    }
}

fn run(name: &'static str, body: impl FnOnce() -> Result<(bool, String)>) -> CheckResult {
    match body() {
        Ok((passed, detail)) => CheckResult {
            name,
            passed,
            detail,
        },
        Err(e) => CheckResult {
            name,
            passed: false,
            detail: format!("error: {e}"),
        },
    }
}

/// Greedy nearest-neighbor multiset matching; returns the largest pair
/// distance, or `None` on cardinality mismatch.
fn multiset_distance(a: &[Complex64], b: &[Complex64]) -> Option<f64> {
    if a.len() != b.len() {
        return None;
    }
    let mut used = vec![false; b.len()];
    let mut worst: f64 = 0.0;
    for &x in a {
        let mut best: Option<(usize, f64)> = None;
        for (i, &y) in b.iter().enumerate() {
            if used[i] {
                continue;
            }
            let d = (x - y).norm();
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((i, d));
            }
        }
        let (i, d) = best?;
        used[i] = true;
        worst = worst.max(d);
    }
    Some(worst)
}

/// Multiplicities expanded into a flat list of points.
fn expand_mults(res: &[Resonance]) -> Vec<Complex64> {
    res.iter()
        .flat_map(|r| std::iter::repeat_n(r.lambda, r.multiplicity))
        .collect()
}

/// Total multiplicity within `tol` of `target`.
fn mult_near(res: &[Resonance], target: Complex64, tol: f64) -> usize {
    res.iter()
        .filter(|r| (r.lambda - target).norm() <= tol)
        .map(|r| r.multiplicity)
        .sum()
}

fn sup_site_distance(a: &WalkState, b: &WalkState, region: &IntervalZ) -> f64 {
    let mut worst: f64 = 0.0;
    for x in region.sites() {
        let pa = a.amp(x);
        let pb = b.amp(x);
        let d = ((pa[0] - pb[0]).norm_sqr() + (pa[1] - pb[1]).norm_sqr()).sqrt();
        worst = worst.max(d);
    }
    worst
}

/// The k = 5 reference walk and initial state shared by several checks.
fn reference_setup() -> Result<(DoubleBarrier, WalkState, IntervalZ)> {
    let db = DoubleBarrier::new(5, FRAC_1_SQRT_2)?;
    let zero = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let psi = WalkState::from_amplitudes(&[(1, [zero, one])])?;
    let j = IntervalZ::new(-1, 6)?;
    Ok((db, psi, j))
}

/// Double-barrier spectrum: k = 10, r = 2^{-1/2} must yield exactly the
/// twenty simple roots `2^{-1/20} e^{iπ(2j-1)/20}` within 1e-8, in under
/// a second.
pub fn double_barrier_spectrum() -> CheckResult {
    run("double-barrier spectrum", || {
        let opts = SolverOptions::default();
        let db = DoubleBarrier::new(10, FRAC_1_SQRT_2)?;
        let start = Instant::now();
        let (res, summary) = solver::find_resonances(&db.coins, &opts)?;
        let elapsed = start.elapsed().as_secs_f64();
        let exact = db.exact_resonances();
        let all_simple = res.iter().all(|r| r.multiplicity == 1);
        let dist = multiset_distance(&expand_mults(&res), &exact);
        let max_err = dist.unwrap_or(f64::INFINITY);
        let passed = summary.sum_mult == 20
            && res.len() == 20
            && all_simple
            && max_err <= 1e-8
            && elapsed < 1.0;
        Ok((
            passed,
            format!(
                "{} roots (sum mult {}), max |Δλ| = {:.2e} (tol 1e-8), {:.1} ms (< 1000)",
                res.len(),
                summary.sum_mult,
                max_err,
                elapsed * 1e3
            ),
        ))
    })
}

/// Oracle equivalence: on 100 seeded random walks with `|chs|_ℤ ≤ 8`, the
/// σ-roots and the nonzero cut-off eigenvalues agree as multisets within
/// 1e-6, and the multiplicity budget holds, in under thirty seconds.
pub fn oracle_equivalence() -> CheckResult {
    run("oracle equivalence", || {
        let opts = SolverOptions::default();
        let start = Instant::now();
        let mut worst_dist: f64 = 0.0;
        for seed in 0..100u64 {
            let card = (seed % 8 + 1) as i64;
            let coins = gallery::random_walk(seed, card)?;
            let (res, summary) = solver::find_resonances(&coins, &opts)?;
            if summary.sum_mult > summary.budget {
                return Ok((
                    false,
                    format!(
                        "seed {seed}: sum of multiplicities {} exceeds budget {}",
                        summary.sum_mult, summary.budget
                    ),
                ));
            }
            let chs = coins.chs().expect("random walks are never free");
            let e = solver::cutoff_matrix(&coins, chs)?;
            let eig = solver::eigen_oracle_opts(&e, &opts)?;
            let eig_nonzero: Vec<Complex64> = eig
                .iter()
                .filter(|(l, _)| l.norm() > opts.zero_radius)
                .flat_map(|&(l, m)| std::iter::repeat_n(l, m))
                .collect();
            match multiset_distance(&expand_mults(&res), &eig_nonzero) {
                Some(d) if d <= 1e-6 => worst_dist = worst_dist.max(d),
                Some(d) => {
                    return Ok((
                        false,
                        format!("seed {seed}: multiset distance {d:.2e} exceeds 1e-6"),
                    ))
                }
                None => {
                    return Ok((
                        false,
                        format!(
                            "seed {seed}: σ gives {} roots, cut-off matrix {}",
                            expand_mults(&res).len(),
                            eig_nonzero.len()
                        ),
                    ))
                }
            }
        }
        let elapsed = start.elapsed().as_secs_f64();
        let passed = elapsed < 30.0;
        Ok((
            passed,
            format!(
                "100 walks agree, max multiset distance {worst_dist:.2e} (tol 1e-6), {elapsed:.2} s (< 30)"
            ),
        ))
    })
}

/// Resonance expansion: reconstruction residual ≤ 1e-8 on the reference
/// walk, and the closed-form evolution matches direct evolution within
/// 1e-8 on its exactness region for every n in (2|J|_ℤ, 200].
pub fn resonance_expansion() -> CheckResult {
    run("resonance expansion", || {
        let opts = SolverOptions::default();
        let (db, psi, j) = reference_setup()?;
        let exp = expansion::expand(&db.coins, &psi, j, &opts)?;
        let two_j = 2 * j.card();
        let mut cur = psi.clone();
        let mut worst: f64 = 0.0;
        for n in 1..=200i64 {
            cur = walk::apply_u(&db.coins, &cur);
            if n <= two_j {
                continue;
            }
            let (pred, region) = expansion::predict_evolution(&db.coins, &exp, n, &opts)?;
            worst = worst.max(sup_site_distance(&pred, &cur, &region));
        }
        let passed = exp.residual <= 1e-8 && worst <= 1e-8;
        Ok((
            passed,
            format!(
                "residual {:.2e} (tol 1e-8), max evolution error {:.2e} over n in ({}, 200] (tol 1e-8)",
                exp.residual, worst, two_j
            ),
        ))
    })
}

/// Quasi-periodicity: on the reference walk, `ψ_{n+2k} = -r² ψ_n` on J to
/// 1e-12 once the transient has left (n ≥ 2|J|_ℤ + 1).
pub fn quasi_periodicity() -> CheckResult {
    run("quasi-periodicity", || {
        let (db, psi, j) = reference_setup()?;
        let alpha = db.alpha();
        let period = db.period() as usize;
        let n0 = (2 * j.card() + 1) as usize;
        let n_hi = n0 + 100;
        let mut snapshots = Vec::with_capacity(n_hi + period + 1);
        let mut cur = psi.clone();
        snapshots.push(cur.restrict(&j));
        for _ in 0..(n_hi + period) {
            cur = walk::apply_u(&db.coins, &cur);
            snapshots.push(cur.restrict(&j));
        }
        let mut worst: f64 = 0.0;
        for n in n0..=n_hi {
            let scaled = snapshots[n].scale(alpha);
            worst = worst.max(sup_site_distance(&snapshots[n + period], &scaled, &j));
        }
        let passed = worst <= 1e-12;
        Ok((
            passed,
            format!(
                "max |ψ_(n+{period}) - ({:.2})ψ_n| = {worst:.2e} on J for n in [{n0}, {n_hi}] (tol 1e-12)",
                alpha.re
            ),
        ))
    })
}

/// Decay rate: the fitted log-amplitude slope of the survival series over
/// n ∈ [50, 200] matches `(1/k) log r` within 1% relative error.
pub fn decay_rate() -> CheckResult {
    run("decay rate", || {
        let (db, psi, j) = reference_setup()?;
        let series = observables::survival(&db.coins, &psi, j, 200)?;
        let fit = observables::decay_fit_over(&series, 50, 200)
            .ok_or_else(|| Error::Domain("survival series underflowed before n = 50".into()))?;
        let target = db.r.ln() / db.k as f64;
        let rel = (fit.slope - target).abs() / target.abs();
        let passed = rel <= 0.01;
        Ok((
            passed,
            format!(
                "fitted slope {:.6} vs (1/k)log r = {:.6}, relative error {:.2e} (tol 1e-2), fit power {:.3}",
                fit.slope, target, rel, fit.power
            ),
        ))
    })
}

/// Restricted-state laws: exact geometric survival, mean survival time
/// `1/(1-|λ|²)`, and the closed-form weak-limit weights, all on
/// `ψ = 1_J φ_λ`.
pub fn restricted_state_laws() -> CheckResult {
    run("restricted-state laws", || {
        let opts = SolverOptions::default();
        let (db, _, j) = reference_setup()?;
        let (res, _) = solver::find_resonances(&db.coins, &opts)?;
        let target = db.exact_resonances()[0];
        let lambda = res
            .iter()
            .map(|r| r.lambda)
            .min_by(|a, b| {
                (a - target)
                    .norm()
                    .partial_cmp(&(b - target).norm())
                    .expect("finite")
            })
            .ok_or_else(|| Error::Domain("no resonances found".into()))?;
        let window = IntervalZ::new(j.lo() - 1, j.hi() + 1)?;
        let phi = solver::resonant_state(&db.coins, lambda, Some(window), &opts)?;
        let psi = {
            let cut = phi.state.restrict(&j);
            let n = cut.norm();
            cut.scale(Complex64::new(1.0 / n, 0.0))
        };

        // Exact law ‖1_J U^n ψ‖ = |λ|^n ‖ψ‖.
        let q = lambda.norm();
        let mut cur = psi.clone();
        let mut worst_exact: f64 = 0.0;
        for n in 1..=60 {
            cur = walk::apply_u(&db.coins, &cur);
            let lhs = cur.restrict(&j).norm();
            worst_exact = worst_exact.max((lhs - q.powi(n)).abs());
        }

        // Mean survival time.
        let report = observables::mean_survival_time(&db.coins, &psi, j, 200, &opts)?;
        let tau_exact = 1.0 / (1.0 - q * q);
        let tau_err = (report.tau - tau_exact).abs();

        // Weak-limit weights against the closed form.
        let (c_minus, c_plus) = observables::restricted_weak_limit(&phi, &j)?;
        let wl = observables::weak_limit(&db.coins, &psi, 200)?;
        let err_plus = (wl.c_plus_hat - c_plus).abs();
        let err_minus = (wl.c_minus_hat - c_minus).abs();
        let wl_bound = wl.flat_norm_sq + 1e-10;

        let passed = worst_exact <= 1e-10
            && tau_err <= 1e-6
            && tau_err <= report.tail_bound + 1e-9
            && err_plus <= wl_bound
            && err_minus <= wl_bound;
        Ok((
            passed,
            format!(
                "survival law error {worst_exact:.2e} (tol 1e-10); τ = {:.9} vs {:.9}, error {tau_err:.2e} (tol 1e-6, tail bound {:.2e}); weak-limit errors ({err_plus:.2e}, {err_minus:.2e}) vs flat-mass bound {wl_bound:.2e}",
                report.tau, tau_exact, report.tail_bound
            ),
        ))
    })
}

/// Zero space: `dim V_J(0) ≥ 2` on the gallery, the rank identity
/// `dim V_J(0) + Σ m(λ) = 2|J|_ℤ`, and the sharp 2N-step escape of the
/// single-coin walk.
pub fn zero_space() -> CheckResult {
    run("zero space", || {
        let opts = SolverOptions::default();
        let mut details = vec![];
        let mut passed = true;
        let models: Vec<(&str, CoinSequence)> = vec![
            ("double k=1", DoubleBarrier::new(1, 0.5)?.coins),
            ("double k=5", DoubleBarrier::new(5, FRAC_1_SQRT_2)?.coins),
            ("double k=10", DoubleBarrier::new(10, 0.9)?.coins),
            (
                "triple",
                TripleBarrier::new(0.75, 12.0 / 13.0, 1.0 / 3.0)?.coins,
            ),
        ];
        for (name, coins) in &models {
            let chs = coins.chs().expect("gallery walks are never free");
            let z = expansion::zero_space(coins, chs)?;
            let (_, summary) = solver::find_resonances(coins, &opts)?;
            let rank_ok = z.dim() + summary.sum_mult == 2 * chs.card() as usize;
            if z.dim() < 2 || !rank_ok {
                passed = false;
            }
            details.push(format!(
                "{name}: dim V = {} (≥ 2), {} + Σm {} {}= 2|J| = {}",
                z.dim(),
                z.dim(),
                summary.sum_mult,
                if rank_ok { "" } else { "!" },
                2 * chs.card()
            ));
        }

        // Single-coin sharpness: a left-mover entering at the right edge of
        // J = [0, N] leaves J exactly after 2N steps.
        let n_edge = 6i64;
        let coins = CoinSequence::new(vec![(0, Coin::rotation(0.6)?)]);
        let j = IntervalZ::new(0, n_edge)?;
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        let psi = WalkState::from_amplitudes(&[(n_edge, [one, zero])])?;
        let mut cur = psi;
        let mut sharp = true;
        for n in 1..=(2 * n_edge + 5) {
            cur = walk::apply_u(&coins, &cur);
            let inside = cur.restrict(&j).norm_sq();
            let expect_nonzero = n <= 2 * n_edge;
            if expect_nonzero != (inside > 0.0) {
                sharp = false;
            }
        }
        let z = expansion::zero_space(&coins, j)?;
        let full = z.dim() == 2 * j.card() as usize;
        if !sharp || !full {
            passed = false;
        }
        details.push(format!(
            "single coin: escape sharp at 2N = {} ({}), dim V = {} = 2|J| ({})",
            2 * n_edge,
            if sharp { "yes" } else { "no" },
            z.dim(),
            if full { "yes" } else { "no" }
        ));
        Ok((passed, details.join("; ")))
    })
}

/// Triple-barrier multiplicity: (3/4, 12/13, 1/3) has exactly the two
/// double resonances ±i/√2, with Jordan chains of residual ≤ 1e-9.
pub fn triple_barrier_multiplicity() -> CheckResult {
    run("triple-barrier multiplicity", || {
        let opts = SolverOptions::default();
        let tb = TripleBarrier::new(0.75, 12.0 / 13.0, 1.0 / 3.0)?;
        if !tb.multiplicity_two() {
            return Ok((false, "parameter locus check failed".into()));
        }
        let (res, _) = solver::find_resonances(&tb.coins, &opts)?;
        let targets = [
            Complex64::new(0.0, FRAC_1_SQRT_2),
            Complex64::new(0.0, -FRAC_1_SQRT_2),
        ];
        let located = res.len() == 2
            && targets.iter().all(|&t| mult_near(&res, t, 1e-8) == 2)
            && res.iter().all(|r| r.multiplicity == 2);
        let mut worst_defect: f64 = 0.0;
        let mut max_err: f64 = 0.0;
        for r in &res {
            let chain = solver::jordan_chain(&tb.coins, r.lambda, r.multiplicity, None, &opts)?;
            worst_defect = worst_defect.max(chain.defect(&tb.coins));
            let err = targets
                .iter()
                .map(|&t| (r.lambda - t).norm())
                .fold(f64::INFINITY, f64::min);
            max_err = max_err.max(err);
        }
        let passed = located && worst_defect <= 1e-9;
        Ok((
            passed,
            format!(
                "{} resonances, multiplicities {:?}, max |λ ∓ i/√2| = {max_err:.2e} (tol 1e-8), chain residual {worst_defect:.2e} (tol 1e-9)",
                res.len(),
                res.iter().map(|r| r.multiplicity).collect::<Vec<_>>()
            ),
        ))
    })
}

/// Generic simplicity: a generic coin perturbation of size ε = 1e-4 splits
/// each double resonance into two simple roots within `5 √(ε|γ/c|)`, and
/// the splitting radius scales like √ε across three decades.
pub fn generic_simplicity() -> CheckResult {
    run("generic simplicity", || {
        let opts = SolverOptions::default();
        let tb = TripleBarrier::new(0.75, 12.0 / 13.0, 1.0 / 3.0)?;
        let family = PerturbationFamily::new(&tb.coins)?;
        let (res, _) = solver::find_resonances(&tb.coins, &opts)?;
        let doubles: Vec<Complex64> = res.iter().map(|r| r.lambda).collect();
        let thetas = family.generic_thetas(16, &doubles)?;
        if thetas.is_empty() {
            return Ok((false, "no generic angle on the 16-point grid".into()));
        }
        let theta = thetas[0];
        let epss = [1e-3, 1e-4, 1e-5];
        let mut passed = true;
        let mut details = vec![format!(
            "{}/16 grid angles generic, using θ = {theta:.4}",
            thetas.len()
        )];
        for &lambda0 in &doubles {
            let points: Vec<gallery::SplitPoint> =
                gallery::splitting_sweep(&family, &[theta], &epss, lambda0, 2, &opts)
                    .into_iter()
                    .collect::<Result<_>>()?;
            // Containment and simplicity at ε = 1e-4.
            let p4 = points
                .iter()
                .find(|p| (p.eps - 1e-4).abs() < 1e-18)
                .expect("swept point");
            let within = p4
                .roots
                .iter()
                .filter(|l| (*l - lambda0).norm() <= 5.0 * p4.predicted)
                .count();
            if within != 2 || !p4.all_simple {
                passed = false;
            }
            // Log-log slope of the measured splitting against ε.
            let mut sx = 0.0;
            let mut sy = 0.0;
            let mut sxx = 0.0;
            let mut sxy = 0.0;
            for p in &points {
                if p.max_displacement <= 0.0 {
                    passed = false;
                    continue;
                }
                let (x, y) = (p.eps.ln(), p.max_displacement.ln());
                sx += x;
                sy += y;
                sxx += x * x;
                sxy += x * y;
            }
            let m = points.len() as f64;
            let slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
            if (slope - 0.5).abs() > 0.05 {
                passed = false;
            }
            details.push(format!(
                "λ₀ = {:.3}{:+.3}i: {} simple roots within 5·{:.2e} at ε = 1e-4, log-log slope {slope:.3} (0.5 ± 0.05)",
                lambda0.re, lambda0.im, within, p4.predicted
            ));
        }
        Ok((passed, details.join("; ")))
    })
}

/// Symmetries: sign flip, discrete rotation, conjugation closure, and the
/// incoming spectrum `{1/conj(λ)}` in the `c11 = c22` regime.
pub fn symmetries() -> CheckResult {
    run("symmetries", || {
        let opts = SolverOptions::default();
        let models: Vec<(&str, CoinSequence, i64)> = vec![
            ("double k=1", DoubleBarrier::new(1, 0.5)?.coins, 1),
            ("double k=5", DoubleBarrier::new(5, FRAC_1_SQRT_2)?.coins, 5),
            ("double k=10", DoubleBarrier::new(10, 0.9)?.coins, 10),
            (
                "triple 3/4,12/13,1/3",
                TripleBarrier::new(0.75, 12.0 / 13.0, 1.0 / 3.0)?.coins,
                1,
            ),
            (
                "triple 0.3,0.5,0.7",
                TripleBarrier::new(0.3, 0.5, 0.7)?.coins,
                1,
            ),
        ];
        let mut passed = true;
        let mut notes = vec![];
        for (name, coins, k_rot) in &models {
            let (res, _) = solver::find_resonances(coins, &opts)?;
            let tol = 1e-7;
            let neg_ok = res
                .iter()
                .all(|r| mult_near(&res, -r.lambda, tol) == mult_near(&res, r.lambda, tol));
            let conj_ok = res
                .iter()
                .all(|r| mult_near(&res, r.lambda.conj(), tol) == mult_near(&res, r.lambda, tol));
            let rot = Complex64::from_polar(1.0, PI / *k_rot as f64);
            let rot_ok = gallery::gauge_condition(coins, *k_rot)
                && res.iter().all(|r| {
                    mult_near(&res, rot * r.lambda, tol) == mult_near(&res, r.lambda, tol)
                });
            // Incoming spectrum (rotation coins satisfy c11 = c22).
            let incoming = solver::incoming_resonances(coins, &opts)?;
            let expected: Vec<Complex64> = expand_mults(&res)
                .iter()
                .map(|l| Complex64::new(1.0, 0.0) / l.conj())
                .collect();
            let inc_dist = multiset_distance(&expand_mults(&incoming), &expected);
            let inc_ok = match inc_dist {
                Some(d) => {
                    d <= 1e-6 * (1.0 + expected.iter().map(|l| l.norm()).fold(0.0, f64::max))
                }
                None => false,
            };
            if !(neg_ok && conj_ok && rot_ok && inc_ok) {
                passed = false;
                notes.push(format!(
                    "{name}: -λ {neg_ok}, conj {conj_ok}, rotation {rot_ok}, incoming {inc_ok}"
                ));
            }
        }
        if notes.is_empty() {
            notes.push(format!(
                "{} models: sign flip, conjugation, e^(iπ/k) rotation, incoming = 1/conj(λ) all hold",
                models.len()
            ));
        }
        Ok((passed, notes.join("; ")))
    })
}

/// Scattering consistency: unitarity on the circle within 1e-10 at 64
/// points, and `|tr S| > 1e6` within distance 1e-6 of every resonance.
pub fn scattering_consistency() -> CheckResult {
    run("scattering consistency", || {
        let opts = SolverOptions::default();
        let models: Vec<(&str, CoinSequence)> = vec![
            ("double k=5", DoubleBarrier::new(5, FRAC_1_SQRT_2)?.coins),
            (
                "triple",
                TripleBarrier::new(0.75, 12.0 / 13.0, 1.0 / 3.0)?.coins,
            ),
        ];
        let mut passed = true;
        let mut notes = vec![];
        for (name, coins) in &models {
            let mut worst_unit: f64 = 0.0;
            for i in 0..64 {
                let lambda = Complex64::from_polar(1.0, 2.0 * PI * i as f64 / 64.0);
                let s = transfer::scattering_matrix(coins, lambda)?;
                worst_unit = worst_unit.max(s.unitarity_defect());
            }
            if worst_unit > 1e-10 {
                passed = false;
            }
            let tp = transfer::transfer_poly(coins)?;
            if (tp.delta + Complex64::new(1.0, 0.0)).norm() <= 1e-8 {
                notes.push(format!("{name}: Δ = -1, trace probe skipped"));
                continue;
            }
            let (res, _) = solver::find_resonances(coins, &opts)?;
            let mut worst_probe: f64 = f64::INFINITY;
            let mut all_poles = true;
            for r in &res {
                let mut best: f64 = 0.0;
                'probe: for exp in 6..=12 {
                    let delta = 10f64.powi(-exp);
                    for a in 0..8 {
                        let z = r.lambda + Complex64::from_polar(delta, 2.0 * PI * a as f64 / 8.0);
                        match transfer::scattering_matrix(coins, z) {
                            Ok(s) => best = best.max(s.trace().norm()),
                            // Landing on the pole to rounding is the
                            // strongest possible blow-up evidence.
                            Err(Error::Pole { .. }) => {
                                best = f64::INFINITY;
                            }
                            Err(e) => return Err(e),
                        }
                        if best > 1e6 {
                            break 'probe;
                        }
                    }
                }
                if best <= 1e6 {
                    all_poles = false;
                }
                worst_probe = worst_probe.min(best);
            }
            if !all_poles {
                passed = false;
            }
            notes.push(format!(
                "{name}: unitarity defect {worst_unit:.2e} (tol 1e-10), min pole-probe |tr S| = {worst_probe:.2e} (> 1e6)"
            ));
        }
        Ok((passed, notes.join("; ")))
    })
}

/// Runs the full verification suite in criterion order.
pub fn run_all() -> Vec<CheckResult> {
    vec![
        double_barrier_spectrum(),
        oracle_equivalence(),
        resonance_expansion(),
        quasi_periodicity(),
        decay_rate(),
        restricted_state_laws(),
        zero_space(),
        triple_barrier_multiplicity(),
        generic_simplicity(),
        symmetries(),
        scattering_consistency(),
    ]
}

/// Sub-second subset for smoke testing.
pub fn quick() -> Vec<CheckResult> {
    vec![
        double_barrier_spectrum(),
        triple_barrier_multiplicity(),
        scattering_consistency(),
    ]
}
