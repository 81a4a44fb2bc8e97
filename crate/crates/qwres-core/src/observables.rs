//! Long-time observables: position distributions, survival probabilities
//! and their decay envelopes, mean survival time with its Υ-function
//! bounds, weak limits, and pointwise asymptotics.
//!
//! Every quantity here is computable two ways — direct unitary evolution
//! and resonance data — and the test suite holds the two against each
//! other. Direct evolution is exact (no sampling), so disagreements point
//! at the resonance side, never at Monte-Carlo noise.

use num_complex::Complex64;

use crate::expansion::{self, Expansion};
use crate::solver::{self, ResonantState, SolverOptions};
use crate::walk::{self, CoinSequence, IntervalZ, WalkState};
use crate::{Error, Result};

/// Position distribution `μ_n(x) = ‖ψ‖⁻² ‖U^n ψ(x)‖²` at a fixed time.
#[derive(Debug, Clone)]
pub struct Distribution {
    /// Time step n.
    pub n: i64,
    /// `(x, μ_n(x))` over the support window of the evolved state.
    pub probs: Vec<(i64, f64)>,
    /// Total mass (1 up to roundoff, by unitarity).
    pub total: f64,
}

impl Distribution {
    /// `μ_n(A)` for an interval A.
    pub fn mass_on(&self, a: &IntervalZ) -> f64 {
        self.probs
            .iter()
            .filter(|(x, _)| a.contains(*x))
            .map(|(_, p)| p)
            .sum()
    }
}

/// Evolves ψ for n steps and returns the position distribution.
pub fn distribution(coins: &CoinSequence, psi: &WalkState, n: i64) -> Result<Distribution> {
    let norm_sq = psi.norm_sq();
    if norm_sq <= 0.0 {
        return Err(Error::Domain("distribution of the zero state".into()));
    }
    let evolved = walk::evolve(coins, psi, n as usize);
    let w = evolved.window();
    let mut probs = vec![];
    let mut total = 0.0;
    for x in w.sites() {
        let a = evolved.amp(x);
        let p = (a[0].norm_sqr() + a[1].norm_sqr()) / norm_sq;
        probs.push((x, p));
        total += p;
    }
    Ok(Distribution { n, probs, total })
}

/// Survival probabilities `μ_n(J)` for n = 0..=n_max.
#[derive(Debug, Clone)]
pub struct SurvivalSeries {
    /// The interval J.
    pub j: IntervalZ,
    /// `probs[n] = ‖1_J U^n ψ‖² / ‖ψ‖²`.
    pub probs: Vec<f64>,
}

impl SurvivalSeries {
    /// Largest n with `probs[n] > floor`, if any.
    pub fn last_usable(&self, floor: f64) -> Option<usize> {
        self.probs.iter().rposition(|&p| p > floor)
    }
}

/// Computes the survival series by stepping the walk once per n.
pub fn survival(
    coins: &CoinSequence,
    psi: &WalkState,
    j: IntervalZ,
    n_max: usize,
) -> Result<SurvivalSeries> {
    let norm_sq = psi.norm_sq();
    if norm_sq <= 0.0 {
        return Err(Error::Domain("survival of the zero state".into()));
    }
    let mut probs = Vec::with_capacity(n_max + 1);
    let mut cur = psi.clone();
    probs.push(cur.restrict(&j).norm_sq() / norm_sq);
    for _ in 0..n_max {
        cur = walk::apply_u(coins, &cur);
        probs.push(cur.restrict(&j).norm_sq() / norm_sq);
    }
    Ok(SurvivalSeries { j, probs })
}

/// Probability floor below which survival samples are discarded as
/// underflow noise.
pub const SURVIVAL_FLOOR: f64 = 1e-250;

/// Least-squares fit of `log ‖1_J U^n ψ‖ ≈ intercept + power·log n +
/// slope·n` over the last half of the usable range.
#[derive(Debug, Clone, Copy)]
pub struct DecayFit {
    /// Per-step log-amplitude slope (compare with `log Λ`).
    pub slope: f64,
    /// Fitted degree of the polynomial-in-n prefactor (compare `m₀ - 1`).
    pub power: f64,
    /// Fitted constant.
    pub intercept: f64,
    /// Root-mean-square residual of the fit in log-amplitude units.
    pub residual: f64,
    /// First and last n used.
    pub n_range: (usize, usize),
}

/// Fits the decay law over the last half of the usable range; `None` when
/// fewer than four usable points remain.
pub fn decay_fit(series: &SurvivalSeries) -> Option<DecayFit> {
    let last = series.last_usable(SURVIVAL_FLOOR)?;
    // Last half of the usable range, skipping n = 0 (log n undefined).
    decay_fit_over(series, (last / 2).max(1), last)
}

/// Fits the decay law over an explicit window `n ∈ [n_lo, n_hi]`.
pub fn decay_fit_over(series: &SurvivalSeries, n_lo: usize, n_hi: usize) -> Option<DecayFit> {
    let last = series.last_usable(SURVIVAL_FLOOR)?.min(n_hi);
    let lo = n_lo.max(1);
    let pts: Vec<(f64, f64)> = (lo..=last)
        .filter(|&n| series.probs[n] > SURVIVAL_FLOOR)
        .map(|n| (n as f64, 0.5 * series.probs[n].ln()))
        .collect();
    if pts.len() < 4 {
        return None;
    }
    let rows = pts.len();
    let mut a = nalgebra::DMatrix::<f64>::zeros(rows, 3);
    let mut b = nalgebra::DVector::<f64>::zeros(rows);
    for (i, (n, y)) in pts.iter().enumerate() {
        a[(i, 0)] = 1.0;
        a[(i, 1)] = n.ln();
        a[(i, 2)] = *n;
        b[i] = *y;
    }
    let svd = a.clone().svd(true, true);
    let sol = svd.solve(&b, 1e-14).ok()?;
    let res = (&a * &sol - &b).norm() / (rows as f64).sqrt();
    Some(DecayFit {
        intercept: sol[0],
        power: sol[1],
        slope: sol[2],
        residual: res,
        n_range: (lo, last),
    })
}

/// Decay diagnostics: the fitted envelope against the resonance
/// prediction, with the measured constants of the two a-priori bounds.
#[derive(Debug, Clone)]
pub struct DecayReport {
    /// The raw series the report was computed from.
    pub series: SurvivalSeries,
    /// The fitted law, when enough points survive underflow.
    pub fit: Option<DecayFit>,
    /// Largest resonance modulus.
    pub lambda0: f64,
    /// Maximal multiplicity at `Λ₀`.
    pub m0: usize,
    /// Largest modulus active in the expansion of ψ (`Λ(ψ)`).
    pub lambda_psi: f64,
    /// Maximal multiplicity among active resonances of modulus `Λ(ψ)`.
    pub p_lambda_psi: usize,
    /// Measured envelope `M`: smallest constant with
    /// `‖1_J U^n ψ‖ ≤ M binom(n, m₀-1) Λ₀^n` over the series (ψ normed).
    pub m_envelope: f64,
    /// Measured envelope `M'` for the `Λ(ψ)` variant.
    pub m_prime_envelope: f64,
}

fn binomial_f(n: usize, l: usize) -> f64 {
    let mut out = 1.0f64;
    for i in 0..l {
        out *= (n - i) as f64 / (i + 1) as f64;
    }
    out
}

fn envelope_constant(series: &SurvivalSeries, rate: f64, power: usize) -> f64 {
    if rate <= 0.0 {
        return 0.0;
    }
    let mut m: f64 = 0.0;
    // log-space comparison so Λ^n survives far past f64 underflow of Λ^{2n}
    for (n, &p) in series.probs.iter().enumerate().skip(1) {
        if p <= SURVIVAL_FLOOR {
            continue;
        }
        let log_env = binomial_f(n, power).ln() + n as f64 * rate.ln();
        m = m.max((0.5 * p.ln() - log_env).exp());
    }
    m
}

/// Active-resonance threshold defining `Λ(ψ)` (relative to `‖1_J ψ‖`).
pub const ACTIVE_TOL: f64 = 1e-9;

/// `Λ(ψ)` and `p(Λ(ψ))` from an expansion: the largest modulus whose
/// chain carries a coefficient above the activity threshold, and the
/// maximal multiplicity among active resonances of that modulus.
pub fn lambda_psi(expansion: &Expansion) -> (f64, usize) {
    let gate = ACTIVE_TOL * expansion.input_norm;
    let mut best = 0.0f64;
    let mut p = 0usize;
    for (chain, cs) in expansion.chains.iter().zip(&expansion.coeffs) {
        let active = cs
            .iter()
            .enumerate()
            .any(|(l, c)| c.norm() * chain.states[l].state.restrict(&expansion.j).norm() > gate);
        if !active {
            continue;
        }
        let modulus = chain.lambda.norm();
        if modulus > best + 1e-9 {
            best = modulus;
            p = chain.len();
        } else if (modulus - best).abs() <= 1e-9 {
            p = p.max(chain.len());
        }
    }
    (best, p)
}

/// Computes the survival series plus the full decay diagnostics.
pub fn decay_report(
    coins: &CoinSequence,
    psi: &WalkState,
    j: IntervalZ,
    n_max: usize,
    opts: &SolverOptions,
) -> Result<DecayReport> {
    let series = survival(coins, psi, j, n_max)?;
    let fit = decay_fit(&series);
    let (_, summary) = solver::find_resonances(coins, opts)?;
    let exp = expansion::expand(coins, psi, j, opts)?;
    let (lam_psi, p_lam) = lambda_psi(&exp);
    let m_envelope = envelope_constant(&series, summary.lambda0, summary.m0.saturating_sub(1));
    let m_prime_envelope = envelope_constant(&series, lam_psi, p_lam.saturating_sub(1));
    Ok(DecayReport {
        series,
        fit,
        lambda0: summary.lambda0,
        m0: summary.m0.max(1),
        lambda_psi: lam_psi,
        p_lambda_psi: p_lam.max(1),
        m_envelope,
        m_prime_envelope,
    })
}

/// `Υ_k(r) = r^{k-2} (d/dr)^k (1 - r²)^{-1}`, evaluated in the
/// cancellation-free form `k! Σ_j binom(k+1, j) r^{k+j-2} / (1-r²)^{k+1}`
/// with j running over indices of the same parity as k (so every exponent
/// is nonnegative: Υ₁ = 2/(1-r²)², Υ₃ = 24r²(1+r²)/(1-r²)⁴, …).
pub fn upsilon(k: u32, r: f64) -> Result<f64> {
    if k == 0 {
        return Err(Error::Domain("upsilon requires k >= 1".into()));
    }
    if !(0.0..1.0).contains(&r) {
        return Err(Error::Domain(format!(
            "upsilon requires 0 <= r < 1, got {r}"
        )));
    }
    let k = k as i64;
    let mut kfact = 1.0f64;
    for i in 2..=k {
        kfact *= i as f64;
    }
    let mut sum = 0.0f64;
    for j in 0..=(k + 1) {
        if (j + k) % 2 != 0 {
            continue; // only terms with j of the same parity as k survive
        }
        let exp = k + j - 2;
        debug_assert!(exp >= 0, "k >= 1 keeps all exponents nonnegative");
        sum += binomial_f((k + 1) as usize, j as usize) * r.powi(exp as i32);
    }
    Ok(kfact * sum / (1.0 - r * r).powi((k + 1) as i32))
}

/// Mean survival time in J with truncation diagnostics and the two
/// Υ-function upper bounds.
#[derive(Debug, Clone)]
pub struct SurvivalReport {
    /// Truncated mean survival time `Σ_{n≤N} n μ_n(N₁(J)∖J)` in its
    /// telescoped form `Σ_{n<N} μ_n(J) - N μ_N(J)`.
    pub tau: f64,
    /// Geometric bound on the truncated tail, from the measured envelope.
    pub tail_bound: f64,
    /// Steps actually summed.
    pub n_used: usize,
    /// `M² 2^{1-2m₀} Υ_{2m₀-1}(Λ₀)` (infinite when no nonzero resonance
    /// bounds the decay).
    pub bound_lambda0: f64,
    /// `M'² 2^{1-2p} Υ_{2p-1}(Λ(ψ))`.
    pub bound_lambda_psi: f64,
    /// The decay diagnostics the bounds were evaluated from.
    pub decay: DecayReport,
}

/// Computes τ(J, ψ) by direct evolution, with the a-priori bounds.
pub fn mean_survival_time(
    coins: &CoinSequence,
    psi: &WalkState,
    j: IntervalZ,
    n_max: usize,
    opts: &SolverOptions,
) -> Result<SurvivalReport> {
    let decay = decay_report(coins, psi, j, n_max, opts)?;
    let probs = &decay.series.probs;
    let n_used = probs.len() - 1;
    // τ_N = Σ_{n=1}^{N} n (s_{n-1} - s_n) = Σ_{n=0}^{N-1} s_n - N s_N.
    let partial: f64 = probs[..n_used].iter().sum();
    let tau = partial - n_used as f64 * probs[n_used];
    // Tail: Σ_{n>N} n(s_{n-1}-s_n) = N s_N + Σ_{n≥N} s_n with s monotone
    // envelope ratio q measured over the last usable decade.
    let tail_bound = {
        let last = decay.series.last_usable(SURVIVAL_FLOOR).unwrap_or(0);
        if last + 1 < probs.len() {
            0.0 // series already identically below floor: transient died
        } else {
            let lo = (last * 9 / 10).max(1);
            let mut q: f64 = 0.0;
            for n in lo..last {
                if probs[n] > SURVIVAL_FLOOR {
                    q = q.max(probs[n + 1] / probs[n]);
                }
            }
            let q = q.min(0.999_999);
            n_used as f64 * probs[n_used] + probs[n_used] / (1.0 - q)
        }
    };
    let bound_lambda0 = if decay.lambda0 > 0.0 {
        decay.m_envelope.powi(2)
            * 2f64.powi(1 - 2 * decay.m0 as i32)
            * upsilon(2 * decay.m0 as u32 - 1, decay.lambda0)?
    } else {
        f64::INFINITY
    };
    let bound_lambda_psi = if decay.lambda_psi > 0.0 {
        decay.m_prime_envelope.powi(2)
            * 2f64.powi(1 - 2 * decay.p_lambda_psi as i32)
            * upsilon(2 * decay.p_lambda_psi as u32 - 1, decay.lambda_psi)?
    } else {
        f64::INFINITY
    };
    Ok(SurvivalReport {
        tau,
        tail_bound,
        n_used,
        bound_lambda0,
        bound_lambda_psi,
        decay,
    })
}

/// Weak-limit estimate at a fixed time.
#[derive(Debug, Clone, Copy)]
pub struct WeakLimitReport {
    /// Time used.
    pub n: i64,
    /// `ĉ₊ = ‖χ♯₊ U^n ψ‖²` (right-mover mass right of the perturbation).
    pub c_plus_hat: f64,
    /// `ĉ₋ = ‖χ♯₋ U^n ψ‖²`.
    pub c_minus_hat: f64,
    /// `‖χ♭ U^n ψ‖²`, the a-priori error bound on both estimates.
    pub flat_norm_sq: f64,
}

/// Splits a state's mass into the sharp-cut weights: right-mover mass
/// right of the perturbed region, left-mover mass left of it, and the
/// flat remainder. The free walk uses the cut at the origin. Returns
/// unnormalized `(c₊, c₋, flat)` with `c₊ + c₋ + flat = ‖state‖²`.
pub fn sharp_cut_masses(coins: &CoinSequence, state: &WalkState) -> (f64, f64, f64) {
    let (lo, hi) = match coins.chs() {
        Some(chs) => (chs.lo(), chs.hi()),
        None => (0, 0),
    };
    let mut c_plus = 0.0;
    let mut c_minus = 0.0;
    let mut flat = 0.0;
    for x in state.window().sites() {
        let a = state.amp(x);
        let (l, r) = (a[0].norm_sqr(), a[1].norm_sqr());
        if x > hi {
            c_plus += r;
            flat += l;
        } else if x < lo {
            c_minus += l;
            flat += r;
        } else {
            flat += l + r;
        }
    }
    (c_plus, c_minus, flat)
}

/// Estimates the weak-limit weights by evolving ψ for n steps; ψ is
/// normalized internally. The free walk uses the cut at the origin.
pub fn weak_limit(coins: &CoinSequence, psi: &WalkState, n: i64) -> Result<WeakLimitReport> {
    let norm_sq = psi.norm_sq();
    if norm_sq <= 0.0 {
        return Err(Error::Domain("weak limit of the zero state".into()));
    }
    let evolved = walk::evolve(coins, psi, n as usize);
    let (c_plus, c_minus, flat) = sharp_cut_masses(coins, &evolved);
    Ok(WeakLimitReport {
        n,
        c_plus_hat: c_plus / norm_sq,
        c_minus_hat: c_minus / norm_sq,
        flat_norm_sq: flat / norm_sq,
    })
}

/// Closed-form weak-limit weights for a restricted resonant state
/// `ψ = 1_J φ_λ`: `c± = a± / (a₋ + a₊)` with `a₋ = ‖φ_λ(min J)‖²`,
/// `a₊ = ‖φ_λ(max J)‖²`.
///
/// Exact when the extremal sites of J see the pure far field, i.e. J
/// extends at least one site beyond the perturbed region on the left
/// (on the right the outgoing condition already kills the contaminant).
pub fn restricted_weak_limit(state: &ResonantState, j: &IntervalZ) -> Result<(f64, f64)> {
    if !state.state.window().contains_interval(j) {
        return Err(Error::IntervalViolation(
            "resonant-state window does not cover J".into(),
        ));
    }
    let lo = state.state.amp(j.lo());
    let hi = state.state.amp(j.hi());
    let a_minus = lo[0].norm_sqr() + lo[1].norm_sqr();
    let a_plus = hi[0].norm_sqr() + hi[1].norm_sqr();
    let total = a_minus + a_plus;
    if total <= 0.0 {
        return Err(Error::Domain(
            "resonant state vanishes at both extremal sites of J".into(),
        ));
    }
    Ok((a_minus / total, a_plus / total))
}

/// Pointwise prediction `μ_n(x) ≈ ‖(leading part)(x)‖²` with a computable
/// remainder bound per site.
#[derive(Debug, Clone)]
pub struct PointwiseReport {
    /// Time used.
    pub n: i64,
    /// Region of validity of the underlying expansion formula.
    pub region: IntervalZ,
    /// `(x, predicted μ_n(x), remainder bound)`.
    pub rows: Vec<(i64, f64, f64)>,
    /// `Λ(ψ)` of the leading part.
    pub lambda_psi: f64,
    /// Largest active modulus strictly below `Λ(ψ)` (0 when none).
    pub lambda_prime: f64,
}

/// Evaluates the leading top-modulus part of the expansion at time n and
/// bounds the rest: for `F = A + B` with A the `|λ| = Λ(ψ)` part,
/// `|‖F(x)‖² - ‖A(x)‖²| ≤ (2‖A(x)‖ + ‖B(x)‖)‖B(x)‖`.
pub fn pointwise_asymptotics(
    coins: &CoinSequence,
    expansion: &Expansion,
    n: i64,
    opts: &SolverOptions,
) -> Result<PointwiseReport> {
    let (full, region) = expansion::predict_evolution(coins, expansion, n, opts)?;
    let (lam_psi, _) = lambda_psi(expansion);
    // Rebuild the prediction keeping only the top-modulus active chains.
    let mut leading_exp = expansion.clone();
    let gate = ACTIVE_TOL * expansion.input_norm;
    for (chain, cs) in leading_exp.chains.iter().zip(leading_exp.coeffs.iter_mut()) {
        let keep = (chain.lambda.norm() - lam_psi).abs() <= 1e-9;
        if !keep {
            for c in cs.iter_mut() {
                *c = Complex64::new(0.0, 0.0);
            }
        }
    }
    let (lead, _) = expansion::predict_evolution(coins, &leading_exp, n, opts)?;
    let norm_sq = expansion.input_norm.powi(2).max(1e-300);
    let mut rows = vec![];
    for x in region.sites() {
        let fa = full.amp(x);
        let la = lead.amp(x);
        let a = (la[0].norm_sqr() + la[1].norm_sqr()).sqrt();
        let b = ((fa[0] - la[0]).norm_sqr() + (fa[1] - la[1]).norm_sqr()).sqrt();
        rows.push((x, a * a / norm_sq, (2.0 * a + b) * b / norm_sq));
    }
    let mut lambda_prime = 0.0f64;
    for (chain, cs) in expansion.chains.iter().zip(&expansion.coeffs) {
        let modulus = chain.lambda.norm();
        if modulus < lam_psi - 1e-9
            && cs
                .iter()
                .enumerate()
                .any(|(l, c)| c.norm() * chain.states[l].state.restrict(&expansion.j).norm() > gate)
        {
            lambda_prime = lambda_prime.max(modulus);
        }
    }
    Ok(PointwiseReport {
        n,
        region,
        rows,
        lambda_psi: lam_psi,
        lambda_prime,
    })
}

/// The restricted-resonant-state pointwise law: on `N_n(J)` the exact
/// probability is `|λ|^{2n} ‖φ_λ(x)‖² / ‖1_J φ_λ‖²`, which off the
/// perturbed region collapses to `c± |λ|^{2(n ∓ x)}`.
pub fn restricted_pointwise(state: &ResonantState, j: &IntervalZ, x: i64, n: i64) -> Result<f64> {
    let w = state.state.window();
    if !w.contains(x) {
        return Err(Error::IntervalViolation(format!(
            "site {x} outside the stored window [{}, {}]",
            w.lo(),
            w.hi()
        )));
    }
    let norm_sq = state.state.restrict(j).norm_sq();
    if norm_sq <= 0.0 {
        return Err(Error::Domain("restriction 1_J φ vanishes".into()));
    }
    let a = state.state.amp(x);
    let site = a[0].norm_sqr() + a[1].norm_sqr();
    Ok(state.lambda.norm().powi(2 * n as i32) * site / norm_sq)
}
