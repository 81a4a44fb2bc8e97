//! Named models with closed-form ground truth, symmetry transforms, and
//! the coin-group perturbation family used to split multiple resonances.
//!
//! The double and triple barrier walks pin the solver against exact root
//! sets; the gauge and conjugation transforms pin its symmetries; the
//! `B(θ,ε)` family realizes generic simplicity constructively, with the
//! first-order coefficient `γ(θ,λ₀)` validated against a finite
//! difference of `σ` in the tests.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::roots;
use crate::transfer::{self, TransferData};
use crate::walk::{Coin, CoinSequence, IntervalZ, WalkState};
use crate::{Error, Result};

fn cone() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

// ---------------------------------------------------------------------------
// The coin group.
// ---------------------------------------------------------------------------

/// An element `(p, q, θ)` of the coin group, with `|p|² - |q|² = 1` and
/// `θ ∈ [0, π)` after identifying `(p, q, θ) ~ (-p, -q, θ - π)`.
#[derive(Debug, Clone, Copy)]
pub struct GroupElement {
    /// Hyperbolic-normalized diagonal parameter.
    pub p: Complex64,
    /// Off-diagonal parameter.
    pub q: Complex64,
    /// Determinant phase, `det T = e^{2iθ}`.
    pub theta: f64,
}

impl GroupElement {
    /// Normalizes into the fundamental domain `θ ∈ [0, π)`.
    pub fn new(p: Complex64, q: Complex64, theta: f64) -> Result<Self> {
        let defect = (p.norm_sqr() - q.norm_sqr() - 1.0).abs();
        if defect > 1e-9 {
            return Err(Error::Domain(format!(
                "group element violates |p|^2 - |q|^2 = 1 by {defect:.2e}"
            )));
        }
        let mut e = Self { p, q, theta };
        e.normalize();
        Ok(e)
    }

    fn normalize(&mut self) {
        let mut t = self.theta.rem_euclid(2.0 * std::f64::consts::PI);
        let mut flip = false;
        if t >= std::f64::consts::PI {
            t -= std::f64::consts::PI;
            flip = true;
        }
        if flip {
            self.p = -self.p;
            self.q = -self.q;
        }
        self.theta = t;
    }

    /// The identity element.
    pub fn identity() -> Self {
        Self {
            p: cone(),
            q: Complex64::new(0.0, 0.0),
            theta: 0.0,
        }
    }

    /// Reads the group element off a coin's transfer data.
    pub fn from_coin(coin: &Coin) -> Self {
        let d = TransferData::from_coin(coin);
        let mut e = Self {
            p: d.p,
            q: d.q,
            theta: d.theta,
        };
        e.normalize();
        e
    }

    /// The coin `C_{p,q,θ} = p⁻¹ [[e^{-iθ}, -conj(q)], [q, e^{iθ}]]`.
    pub fn to_coin(&self) -> Result<Coin> {
        let et = Complex64::from_polar(1.0, self.theta);
        let inv_p = cone() / self.p;
        Coin::new([
            [inv_p / et, -inv_p * self.q.conj()],
            [inv_p * self.q, inv_p * et],
        ])
    }

    /// The transfer-side matrix `T_{p,q,θ} = e^{iθ} [[p, conj(q)], [q, conj(p)]]`.
    pub fn to_transfer(&self) -> [[Complex64; 2]; 2] {
        let e = Complex64::from_polar(1.0, self.theta);
        [
            [e * self.p, e * self.q.conj()],
            [e * self.q, e * self.p.conj()],
        ]
    }

    /// Group product, i.e. the transfer-matrix product `T_a · T_b`.
    pub fn compose(&self, other: &Self) -> Self {
        let mut e = Self {
            p: self.p * other.p + self.q.conj() * other.q,
            q: self.q * other.p + self.p.conj() * other.q,
            theta: self.theta + other.theta,
        };
        e.normalize();
        e
    }
}

/// The induced product on coins: `a * b = ℳ(ℳ⁻¹(a) · ℳ⁻¹(b))`.
pub fn group_product(a: &Coin, b: &Coin) -> Result<Coin> {
    GroupElement::from_coin(a)
        .compose(&GroupElement::from_coin(b))
        .to_coin()
}

// ---------------------------------------------------------------------------
// Double barrier.
// ---------------------------------------------------------------------------

/// The rotation-coin double barrier: coins at 0 and k, identity between.
#[derive(Debug, Clone)]
pub struct DoubleBarrier {
    /// Barrier separation (resonance count is 2k).
    pub k: i64,
    /// Rotation parameter in (0, 1).
    pub r: f64,
    /// The walk.
    pub coins: CoinSequence,
}

impl DoubleBarrier {
    /// Builds the model; rejects the degenerate free (r = 0) and
    /// eigenvalue (r = 1) endpoints.
    pub fn new(k: i64, r: f64) -> Result<Self> {
        if k < 1 {
            return Err(Error::Domain(format!(
                "double barrier requires k >= 1, got {k}"
            )));
        }
        if !(r > 0.0 && r < 1.0) {
            return Err(Error::Domain(format!(
                "double barrier requires 0 < r < 1, got {r}"
            )));
        }
        let c = Coin::rotation(r)?;
        let coins = CoinSequence::new(vec![(0, c), (k, c)]);
        Ok(Self { k, r, coins })
    }

    /// The return amplitude `α = c21(0) c12(k) ∏ det C = -r²`.
    pub fn alpha(&self) -> Complex64 {
        Complex64::new(-self.r * self.r, 0.0)
    }

    /// The quasi-period 2k.
    pub fn period(&self) -> i64 {
        2 * self.k
    }

    /// The 2k simple resonances `λ_j = r^{1/k} e^{iπ(2j-1)/2k}`,
    /// j = 1..=2k.
    pub fn exact_resonances(&self) -> Vec<Complex64> {
        let modulus = self.r.powf(1.0 / self.k as f64);
        (1..=2 * self.k)
            .map(|j| {
                Complex64::from_polar(
                    modulus,
                    std::f64::consts::PI * (2 * j - 1) as f64 / (2 * self.k) as f64,
                )
            })
            .collect()
    }

    /// The closed-form resonant state at a resonance λ over `window`:
    /// left component `(1_{x≤-1}√(1-r²) + 1_{0≤x≤k-1}) λ^x`, right
    /// component `-r (1_{x≥k+1}√(1-r²) + 1_{1≤x≤k}) λ^{-x}`.
    pub fn closed_form_state(&self, lambda: Complex64, window: IntervalZ) -> WalkState {
        let s = (1.0 - self.r * self.r).sqrt();
        let mut st = WalkState::zero(window);
        for x in window.sites() {
            let l_weight = if x <= -1 {
                s
            } else if x < self.k {
                1.0
            } else {
                0.0
            };
            let r_weight = if x > self.k {
                -self.r * s
            } else if x >= 1 {
                -self.r
            } else {
                0.0
            };
            st.set(
                x,
                [
                    lambda.powi(x as i32) * l_weight,
                    lambda.powi(-(x as i32)) * r_weight,
                ],
            );
        }
        st
    }
}

/// The return amplitude `α = c21(x0) c12(x1) ∏_{x0<x<x1} det C(x)` of a
/// general double barrier: non-diagonal coins exactly at x0 < x1,
/// diagonal coins (at most) in between.
pub fn alpha_general(coins: &CoinSequence, x0: i64, x1: i64) -> Result<Complex64> {
    if x0 >= x1 {
        return Err(Error::Domain("barrier sites must satisfy x0 < x1".into()));
    }
    let diag = |c: &Coin| c.c12().norm() < 1e-15 && c.c21().norm() < 1e-15;
    for x in coins.support() {
        let c = coins.coin(x);
        if (x == x0 || x == x1) && diag(&c) {
            return Err(Error::Domain(format!(
                "coin at barrier site {x} is diagonal"
            )));
        }
        if x != x0 && x != x1 && !diag(&c) {
            return Err(Error::Domain(format!(
                "non-diagonal coin at {x} outside the barriers {x0}, {x1}"
            )));
        }
    }
    let mut alpha = coins.coin(x0).c21() * coins.coin(x1).c12();
    for x in (x0 + 1)..x1 {
        alpha *= coins.coin(x).det();
    }
    Ok(alpha)
}

// ---------------------------------------------------------------------------
// Triple barrier.
// ---------------------------------------------------------------------------

/// The rotation-coin triple barrier: coins at -1, 0, 1.
#[derive(Debug, Clone)]
pub struct TripleBarrier {
    /// Rotation parameters at sites -1, 0, 1.
    pub r: [f64; 3],
    /// The walk.
    pub coins: CoinSequence,
}

impl TripleBarrier {
    /// Builds the model from rotation parameters in (0, 1).
    pub fn new(r_m1: f64, r_0: f64, r_1: f64) -> Result<Self> {
        for (name, r) in [("r_-1", r_m1), ("r_0", r_0), ("r_1", r_1)] {
            if !(r > 0.0 && r < 1.0) {
                return Err(Error::Domain(format!(
                    "triple barrier requires 0 < {name} < 1, got {r}"
                )));
            }
        }
        let coins = CoinSequence::new(vec![
            (-1, Coin::rotation(r_m1)?),
            (0, Coin::rotation(r_0)?),
            (1, Coin::rotation(r_1)?),
        ]);
        Ok(Self {
            r: [r_m1, r_0, r_1],
            coins,
        })
    }

    /// Monic quartic whose nonzero roots are the resonances, ascending
    /// coefficients of `λ⁴ - (c21(0)c12(1) + c21(-1)c12(0)) λ² -
    /// c21(-1)c12(1) det C(0)`.
    pub fn quartic(&self) -> [Complex64; 5] {
        quartic_of(&self.coins)
    }

    /// True exactly when the quartic has the double roots
    /// `±(c21(0)c12(1) + c21(-1)c12(0))^{1/2}/√2`: for rotation coins,
    /// `r0 = 2√(r₋₁ r₁)/(r₋₁ + r₁)` with `r₋₁ ≠ r₁`.
    pub fn multiplicity_two(&self) -> bool {
        let [rm, r0, r1] = self.r;
        (r0 - 2.0 * (rm * r1).sqrt() / (rm + r1)).abs() < 1e-12 && (rm - r1).abs() > 1e-12
    }

    /// The double-root locations when `multiplicity_two` holds.
    pub fn double_roots(&self) -> [Complex64; 2] {
        let [rm, r0, r1] = self.r;
        let half = Complex64::new(r0 * (rm + r1) / 2.0, 0.0);
        // λ² = -(r0(r₋₁+r₁))/2 for the rotation parametrization.
        let root = (-half).sqrt();
        [root, -root]
    }
}

/// The triple-barrier quartic for arbitrary coins at -1, 0, 1.
pub fn quartic_of(coins: &CoinSequence) -> [Complex64; 5] {
    let zero = Complex64::new(0.0, 0.0);
    let c_m1 = coins.coin(-1);
    let c_0 = coins.coin(0);
    let c_1 = coins.coin(1);
    [
        -c_m1.c21() * c_1.c12() * c_0.det(),
        zero,
        -(c_0.c21() * c_1.c12() + c_m1.c21() * c_0.c12()),
        zero,
        cone(),
    ]
}

// ---------------------------------------------------------------------------
// Symmetry transforms.
// ---------------------------------------------------------------------------

/// Checks `supp c12 ⊂ kℤ`, the hypothesis of the e^{iπ/k} rotation
/// symmetry (k = 1 always holds).
pub fn gauge_condition(coins: &CoinSequence, k: i64) -> bool {
    if k < 1 {
        return false;
    }
    coins
        .support()
        .into_iter()
        .all(|x| coins.coin(x).c12().norm() < 1e-15 || x.rem_euclid(k) == 0)
}

/// Applies the gauge `ψ(x) ↦ diag(e^{ilπx/k}, e^{-ilπx/k}) ψ(x)`, which
/// maps (generalized) resonant states of λ to those of `e^{ilπ/k} λ`.
pub fn gauge_transform(coins: &CoinSequence, psi: &WalkState, l: i64, k: i64) -> Result<WalkState> {
    if !gauge_condition(coins, k) {
        return Err(Error::Domain(format!(
            "gauge transform requires supp c12 within {k}Z"
        )));
    }
    let w = psi.window();
    let mut out = WalkState::zero(w);
    for x in w.sites() {
        let phase = std::f64::consts::PI * (l * x) as f64 / k as f64;
        let e = Complex64::from_polar(1.0, phase);
        let a = psi.amp(x);
        out.set(x, [e * a[0], e.conj() * a[1]]);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Perturbation family B(θ, ε).
// ---------------------------------------------------------------------------

/// Default upper bound on the perturbation size ε.
pub const EPS_MAX: f64 = 1e-2;

/// Relative threshold on `|γ(θ,λ₀)|` below which θ is treated as
/// non-generic for λ₀.
pub const GENERIC_GAMMA_TOL: f64 = 1e-8;

/// The one-parameter coin family `B(θ,ε) = C_{p(θ,ε), q(θ,ε), 0} * C(x⁺)`
/// replacing the rightmost perturbed coin.
#[derive(Debug, Clone)]
pub struct PerturbationFamily {
    /// The unperturbed walk.
    pub base: CoinSequence,
    /// The perturbed site (rightmost support site).
    pub x_plus: i64,
    k_data: TransferData,
}

impl PerturbationFamily {
    /// Builds the family around the rightmost perturbed coin.
    pub fn new(base: &CoinSequence) -> Result<Self> {
        let chs = base.chs().ok_or(Error::EmptySupport)?;
        let x_plus = chs.hi();
        let k_data = TransferData::from_coin(&base.coin(x_plus));
        Ok(Self {
            base: base.clone(),
            x_plus,
            k_data,
        })
    }

    /// `p(θ,ε) = (1 + εe^{iθ}) / √(1 + 2ε cos θ)`.
    pub fn p_eps(theta: f64, eps: f64) -> Complex64 {
        (cone() + eps * Complex64::from_polar(1.0, theta)) / (1.0 + 2.0 * eps * theta.cos()).sqrt()
    }

    /// `q(θ,ε) = εe^{iθ} / √(1 + 2ε cos θ)`.
    pub fn q_eps(theta: f64, eps: f64) -> Complex64 {
        eps * Complex64::from_polar(1.0, theta) / (1.0 + 2.0 * eps * theta.cos()).sqrt()
    }

    /// The perturbed coin `B(θ,ε)`; ε = 0 returns the base coin.
    pub fn coin_b(&self, theta: f64, eps: f64) -> Result<Coin> {
        if eps == 0.0 {
            return Ok(self.base.coin(self.x_plus));
        }
        if !(0.0..=EPS_MAX).contains(&eps) {
            return Err(Error::Domain(format!(
                "perturbation size must lie in (0, {EPS_MAX}], got {eps}"
            )));
        }
        let g = GroupElement::new(Self::p_eps(theta, eps), Self::q_eps(theta, eps), 0.0)?;
        g.compose(&GroupElement::from_coin(&self.base.coin(self.x_plus)))
            .to_coin()
    }

    /// The perturbed walk `U_{θ,ε}`.
    pub fn perturb(&self, theta: f64, eps: f64) -> Result<CoinSequence> {
        Ok(self.base.with_coin(self.x_plus, self.coin_b(theta, eps)?))
    }

    /// First-order coefficients `α(θ) = i sin θ · p(k) + e^{-iθ} q(k)`,
    /// `β(θ) = i sin θ · conj(q(k)) + e^{-iθ} conj(p(k))`.
    pub fn alpha_beta(&self, theta: f64) -> (Complex64, Complex64) {
        let is = Complex64::new(0.0, theta.sin());
        let em = Complex64::from_polar(1.0, -theta);
        (
            is * self.k_data.p + em * self.k_data.q,
            is * self.k_data.q.conj() + em * self.k_data.p.conj(),
        )
    }

    /// The interior column `(σ_{k-1}, τ_{k-1})(λ) = λ^{k-1}
    /// T_λ(x⁺-1) ⋯ T_λ(x⁻) e₁`.
    pub fn interior_column(&self, lambda: Complex64) -> Result<(Complex64, Complex64)> {
        let chs = self.base.chs().ok_or(Error::EmptySupport)?;
        let mut v = [cone(), Complex64::new(0.0, 0.0)];
        for x in chs.lo()..chs.hi() {
            let t = transfer::transfer_at(&self.base.coin(x), lambda)?;
            v = [
                t[0][0] * v[0] + t[0][1] * v[1],
                t[1][0] * v[0] + t[1][1] * v[1],
            ];
        }
        let pre = lambda.powi((chs.card() - 1) as i32);
        Ok((pre * v[0], pre * v[1]))
    }

    /// The splitting coefficient `γ(θ,λ₀) = e^{iθ(k)} (λ₀² α σ_{k-1}(λ₀)
    /// + λ₀ β τ_{k-1}(λ₀))`, normalized so that `∂_ε σ(λ₀,θ,ε)|_{ε=0} = γ`.
    pub fn gamma(&self, theta: f64, lambda0: Complex64) -> Result<Complex64> {
        let (alpha, beta) = self.alpha_beta(theta);
        let (sig, tau) = self.interior_column(lambda0)?;
        let e = Complex64::from_polar(1.0, self.k_data.theta);
        Ok(e * (lambda0 * lambda0 * alpha * sig + lambda0 * beta * tau))
    }

    /// The Taylor coefficient `c = σ^{(m)}(λ₀)/m!` of the unperturbed σ.
    pub fn leading_coefficient(&self, lambda0: Complex64, m: usize) -> Result<Complex64> {
        let sig = transfer::sigma(&self.base)?;
        Ok(roots::nth_derivative_over_factorial(
            &sig.coeffs,
            lambda0,
            m,
        ))
    }

    /// Predicted splitting radius `(ε |γ/c|)^{1/m}` of an m-fold root.
    pub fn splitting_radius(
        &self,
        theta: f64,
        eps: f64,
        lambda0: Complex64,
        m: usize,
    ) -> Result<f64> {
        let gamma = self.gamma(theta, lambda0)?;
        let c = self.leading_coefficient(lambda0, m)?;
        if c.norm() < 1e-300 {
            return Err(Error::Domain(
                "leading Taylor coefficient vanishes; m exceeds the multiplicity".into(),
            ));
        }
        Ok((eps * (gamma / c).norm()).powf(1.0 / m as f64))
    }

    /// Equispaced θ grid filtered to generic angles: `|γ(θ,λ₀)| >
    /// 1e-8 · max|σ coeff|` for every supplied multiple resonance λ₀.
    pub fn generic_thetas(&self, grid: usize, multiples: &[Complex64]) -> Result<Vec<f64>> {
        let sig = transfer::sigma(&self.base)?;
        let scale = sig.scale();
        let mut out = vec![];
        for i in 0..grid {
            let theta = 2.0 * std::f64::consts::PI * i as f64 / grid as f64;
            let mut ok = true;
            for &l0 in multiples {
                if self.gamma(theta, l0)?.norm() <= GENERIC_GAMMA_TOL * scale {
                    ok = false;
                    break;
                }
            }
            if ok {
                out.push(theta);
            }
        }
        Ok(out)
    }
}

/// One point of a splitting sweep.
#[derive(Debug, Clone)]
pub struct SplitPoint {
    /// Perturbation angle.
    pub theta: f64,
    /// Perturbation size.
    pub eps: f64,
    /// Roots of the perturbed σ within the tracking disc around λ₀.
    pub roots: Vec<Complex64>,
    /// Largest displacement from λ₀ among them.
    pub max_displacement: f64,
    /// Predicted radius `(ε|γ/c|)^{1/m}`.
    pub predicted: f64,
    /// Whether every tracked root is simple.
    pub all_simple: bool,
}

/// Tracks the splitting of the m-fold resonance λ₀ across a (θ, ε) grid;
/// the tracking disc has radius `10 · predicted`.
pub fn splitting_sweep(
    family: &PerturbationFamily,
    thetas: &[f64],
    epss: &[f64],
    lambda0: Complex64,
    m: usize,
    opts: &crate::solver::SolverOptions,
) -> Vec<Result<SplitPoint>> {
    let jobs: Vec<(f64, f64)> = thetas
        .iter()
        .flat_map(|&t| epss.iter().map(move |&e| (t, e)))
        .collect();
    let family = family.clone();
    let opts = *opts;
    crate::par::par_map(&jobs, move |&(theta, eps)| {
        let predicted = family.splitting_radius(theta, eps, lambda0, m)?;
        let coins = family.perturb(theta, eps)?;
        let res = crate::solver::find_resonances(&coins, &opts)?.0;
        let disc = 10.0 * predicted;
        let tracked: Vec<_> = res
            .iter()
            .filter(|r| (r.lambda - lambda0).norm() <= disc)
            .collect();
        let roots: Vec<Complex64> = tracked.iter().map(|r| r.lambda).collect();
        let max_displacement = tracked
            .iter()
            .map(|r| (r.lambda - lambda0).norm())
            .fold(0.0f64, f64::max);
        let all_simple = tracked.iter().all(|r| r.multiplicity == 1);
        Ok(SplitPoint {
            theta,
            eps,
            roots,
            max_displacement,
            predicted,
            all_simple,
        })
    })
}

// ---------------------------------------------------------------------------
// Random instances.
// ---------------------------------------------------------------------------

/// A seeded random walk with `|chs|_ℤ = card`, used for cross-method
/// agreement sweeps. Coins are Haar-ish unitaries kept away from the
/// inadmissible `c11 = 0` locus; the two hull endpoints are forced
/// non-identity so the hull is exactly as requested.
pub fn random_walk(seed: u64, card: i64) -> Result<CoinSequence> {
    if card < 1 {
        return Err(Error::Domain("hull cardinality must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coins = vec![];
    for x in 0..card {
        let endpoint = x == 0 || x == card - 1;
        // Interior sites are identity with probability 1/4 (sparse hulls).
        if !endpoint && rng.gen::<f64>() < 0.25 {
            continue;
        }
        coins.push((x, random_coin(&mut rng, endpoint)?));
    }
    Ok(CoinSequence::new(coins))
}

fn random_coin(rng: &mut ChaCha8Rng, force_offdiag: bool) -> Result<Coin> {
    // C = [[a, b], [-conj(b) e^{iδ}, conj(a) e^{iδ}]] with |a|² + |b|² = 1.
    let mu_lo = if force_offdiag { 0.15 } else { 0.05 };
    let mu = rng.gen_range(mu_lo..(std::f64::consts::FRAC_PI_2 - 0.05));
    let (s, c) = mu.sin_cos();
    let a = Complex64::from_polar(c, rng.gen_range(0.0..2.0 * std::f64::consts::PI));
    let b = Complex64::from_polar(s, rng.gen_range(0.0..2.0 * std::f64::consts::PI));
    let delta = Complex64::from_polar(1.0, rng.gen_range(0.0..2.0 * std::f64::consts::PI));
    Coin::new([[a, b], [-b.conj() * delta, a.conj() * delta]])
}
