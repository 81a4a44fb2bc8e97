//! Coins, states, and the exact evolution `U = SC` of the walk.
//!
//! The Hilbert space is `ℓ²(ℤ; ℂ²)` with chirality components `(ψ^L, ψ^R)`.
//! The coin acts sitewise, `(Cψ)(x) = C(x)ψ(x)`, and the shift moves the
//! left component left and the right component right, so
//!
//! ```text
//! (Uψ)^L(x) = c11(x+1) ψ^L(x+1) + c12(x+1) ψ^R(x+1)
//! (Uψ)^R(x) = c21(x-1) ψ^L(x-1) + c22(x-1) ψ^R(x-1)
//! ```
//!
//! States are stored densely over an explicit integer window that grows by
//! one site per step; amplitudes are never flushed to zero, so algebraic
//! identity tests stay exact to rounding.

use num_complex::Complex64;
use std::collections::BTreeMap;

use crate::{Error, Result};

/// Admissibility floor on the coin's diagonal moduli.
pub const ADMISSIBLE_EPS: f64 = 1e-12;
/// Unitarity tolerance checked at coin construction.
pub const UNITARY_TOL: f64 = 1e-12;

/// A 2×2 unitary coin with nonvanishing diagonal entries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coin {
    m: [[Complex64; 2]; 2],
}

impl Coin {
    /// Builds a coin from rows `[[c11, c12], [c21, c22]]`, validating
    /// unitarity (within 1e-12) and the nonzero-diagonal assumption.
    pub fn new(m: [[Complex64; 2]; 2]) -> Result<Self> {
        let mut defect: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                // (C*C)_{ij} = sum_k conj(c_{ki}) c_{kj}
                let mut s = Complex64::new(0.0, 0.0);
                for row in &m {
                    s += row[i].conj() * row[j];
                }
                let target = if i == j { 1.0 } else { 0.0 };
                defect = defect.max((s - target).norm());
            }
        }
        if defect > UNITARY_TOL {
            return Err(Error::NotUnitary { defect });
        }
        let (a, d) = (m[0][0].norm(), m[1][1].norm());
        if a <= ADMISSIBLE_EPS || d <= ADMISSIBLE_EPS {
            return Err(Error::Inadmissible {
                c11_abs: a,
                c22_abs: d,
            });
        }
        Ok(Self { m })
    }

    /// The identity coin.
    pub fn identity() -> Self {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        Self {
            m: [[one, zero], [zero, one]],
        }
    }

    /// The real rotation-type coin `[[√(1-r²), r], [-r, √(1-r²)]]`, `|r| < 1`.
    pub fn rotation(r: f64) -> Result<Self> {
        // NaN must be rejected too, hence the explicit is_nan arm.
        if r.is_nan() || r.abs() >= 1.0 {
            return Err(Error::Domain(format!(
                "rotation parameter r = {r} must satisfy |r| < 1"
            )));
        }
        let c = (1.0 - r * r).sqrt();
        Self::new([
            [Complex64::new(c, 0.0), Complex64::new(r, 0.0)],
            [Complex64::new(-r, 0.0), Complex64::new(c, 0.0)],
        ])
    }

    /// Entry `c11`.
    pub fn c11(&self) -> Complex64 {
        self.m[0][0]
    }
    /// Entry `c12`.
    pub fn c12(&self) -> Complex64 {
        self.m[0][1]
    }
    /// Entry `c21`.
    pub fn c21(&self) -> Complex64 {
        self.m[1][0]
    }
    /// Entry `c22`.
    pub fn c22(&self) -> Complex64 {
        self.m[1][1]
    }

    /// Rows of the coin.
    pub fn matrix(&self) -> [[Complex64; 2]; 2] {
        self.m
    }

    /// Determinant (unimodular for unitary coins).
    pub fn det(&self) -> Complex64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    /// Applies the coin to a chirality 2-vector.
    pub fn apply(&self, v: [Complex64; 2]) -> [Complex64; 2] {
        [
            self.m[0][0] * v[0] + self.m[0][1] * v[1],
            self.m[1][0] * v[0] + self.m[1][1] * v[1],
        ]
    }

    /// Largest entrywise distance from the identity.
    pub fn distance_from_identity(&self) -> f64 {
        let mut d: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                let target = if i == j { 1.0 } else { 0.0 };
                d = d.max((self.m[i][j] - target).norm());
            }
        }
        d
    }

    /// True when every entry equals the identity's to rounding (1e-15).
    pub fn is_identity(&self) -> bool {
        self.distance_from_identity() < 1e-15
    }

    /// True when all entries are real.
    pub fn is_real(&self) -> bool {
        self.m.iter().flatten().all(|z| z.im.abs() < UNITARY_TOL)
    }

    /// Entrywise complex conjugate (again a coin for real-orthogonal tests).
    pub fn conjugate(&self) -> Self {
        let mut m = self.m;
        for row in &mut m {
            for z in row {
                *z = z.conj();
            }
        }
        Self { m }
    }
}

/// A closed integer interval `[lo, hi]` (nonempty by construction).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct IntervalZ {
    lo: i64,
    hi: i64,
}

impl IntervalZ {
    /// Builds `[lo, hi]`; errors when `lo > hi`.
    pub fn new(lo: i64, hi: i64) -> Result<Self> {
        if lo > hi {
            return Err(Error::Domain(format!("interval [{lo}, {hi}] is empty")));
        }
        Ok(Self { lo, hi })
    }

    /// Lower endpoint.
    pub fn lo(&self) -> i64 {
        self.lo
    }
    /// Upper endpoint.
    pub fn hi(&self) -> i64 {
        self.hi
    }

    /// Number of integer points `|J|_ℤ = hi - lo + 1`.
    pub fn card(&self) -> i64 {
        self.hi - self.lo + 1
    }

    /// Closed r-neighborhood `N_r(J) = [lo - r, hi + r]`, `r ≥ 0`.
    pub fn neighborhood(&self, r: i64) -> Self {
        debug_assert!(r >= 0);
        Self {
            lo: self.lo - r,
            hi: self.hi + r,
        }
    }

    /// Membership test.
    pub fn contains(&self, x: i64) -> bool {
        self.lo <= x && x <= self.hi
    }

    /// True when `other ⊆ self`.
    pub fn contains_interval(&self, other: &IntervalZ) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    /// Smallest interval containing both.
    pub fn hull(&self, other: &IntervalZ) -> Self {
        Self {
            lo: self.lo.min(other.lo),
            hi: self.hi.max(other.hi),
        }
    }

    /// Iterates the integer points.
    pub fn sites(&self) -> impl DoubleEndedIterator<Item = i64> {
        self.lo..=self.hi
    }
}

/// A finitely supported coin field: identity everywhere except finitely
/// many stored sites.
#[derive(Debug, Clone, Default)]
pub struct CoinSequence {
    coins: BTreeMap<i64, Coin>,
}

impl CoinSequence {
    /// Builds from `(site, coin)` pairs; identity coins are dropped so the
    /// stored support is exactly `supp(C - I₂)`.
    pub fn new(pairs: impl IntoIterator<Item = (i64, Coin)>) -> Self {
        let coins = pairs
            .into_iter()
            .filter(|(_, c)| !c.is_identity())
            .collect();
        Self { coins }
    }

    /// The free walk (no perturbation).
    pub fn free() -> Self {
        Self::default()
    }

    /// Coin at site `x` (identity when unstored).
    pub fn coin(&self, x: i64) -> Coin {
        self.coins.get(&x).copied().unwrap_or_else(Coin::identity)
    }

    /// Sites with a non-identity coin, ascending.
    pub fn support(&self) -> Vec<i64> {
        self.coins.keys().copied().collect()
    }

    /// Convex hull `chs(C - I₂) = [x⁻, x⁺]` of the support; `None` for the
    /// free walk.
    pub fn chs(&self) -> Option<IntervalZ> {
        let lo = *self.coins.keys().next()?;
        let hi = *self.coins.keys().next_back()?;
        Some(IntervalZ { lo, hi })
    }

    /// `|chs(C - I₂)|_ℤ`, the integer-point count of the hull (0 when free).
    pub fn chs_card(&self) -> i64 {
        self.chs().map_or(0, |j| j.card())
    }

    /// Copy with the coin at `x` replaced.
    pub fn with_coin(&self, x: i64, coin: Coin) -> Self {
        let mut coins = self.coins.clone();
        if coin.is_identity() {
            coins.remove(&x);
        } else {
            coins.insert(x, coin);
        }
        Self { coins }
    }

    /// True when every coin is real (orthogonal).
    pub fn all_real(&self) -> bool {
        self.coins.values().all(Coin::is_real)
    }

    /// Entrywise conjugate walk (equals self for real coins).
    pub fn conjugate(&self) -> Self {
        Self {
            coins: self
                .coins
                .iter()
                .map(|(&x, c)| (x, c.conjugate()))
                .collect(),
        }
    }
}

/// A finitely supported state: dense amplitudes over an explicit window.
#[derive(Debug, Clone)]
pub struct WalkState {
    lo: i64,
    amps: Vec<[Complex64; 2]>,
}

impl WalkState {
    /// The zero state on the given window.
    pub fn zero(window: IntervalZ) -> Self {
        Self {
            lo: window.lo,
            amps: vec![[Complex64::new(0.0, 0.0); 2]; window.card() as usize],
        }
    }

    /// Builds from `(site, [L, R])` pairs; the window is their hull.
    pub fn from_amplitudes(pairs: &[(i64, [Complex64; 2])]) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::Domain("state needs at least one amplitude".into()));
        }
        let lo = pairs.iter().map(|&(x, _)| x).min().unwrap();
        let hi = pairs.iter().map(|&(x, _)| x).max().unwrap();
        let mut st = Self::zero(IntervalZ { lo, hi });
        for &(x, a) in pairs {
            let cur = st.amp(x);
            st.set(x, [cur[0] + a[0], cur[1] + a[1]]);
        }
        Ok(st)
    }

    /// The window `[lo, hi]` the state is stored on.
    pub fn window(&self) -> IntervalZ {
        IntervalZ {
            lo: self.lo,
            hi: self.lo + self.amps.len() as i64 - 1,
        }
    }

    /// Amplitude `(ψ^L(x), ψ^R(x))`; zero outside the window.
    pub fn amp(&self, x: i64) -> [Complex64; 2] {
        let i = x - self.lo;
        if i < 0 || i >= self.amps.len() as i64 {
            [Complex64::new(0.0, 0.0); 2]
        } else {
            self.amps[i as usize]
        }
    }

    /// Sets the amplitude at `x`, growing the window if needed.
    pub fn set(&mut self, x: i64, a: [Complex64; 2]) {
        if x < self.lo {
            let grow = (self.lo - x) as usize;
            let mut amps = vec![[Complex64::new(0.0, 0.0); 2]; grow];
            amps.extend_from_slice(&self.amps);
            self.amps = amps;
            self.lo = x;
        } else if x > self.window().hi() {
            let grow = (x - self.window().hi()) as usize;
            self.amps
                .extend(std::iter::repeat_n([Complex64::new(0.0, 0.0); 2], grow));
        }
        self.amps[(x - self.lo) as usize] = a;
    }

    /// `‖ψ‖² = Σ_x |ψ^L(x)|² + |ψ^R(x)|²`.
    pub fn norm_sq(&self) -> f64 {
        self.amps
            .iter()
            .map(|a| a[0].norm_sqr() + a[1].norm_sqr())
            .sum()
    }

    /// `‖ψ‖`.
    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Hermitian inner product `⟨self, other⟩` (conjugate-linear in self).
    pub fn inner(&self, other: &WalkState) -> Complex64 {
        let w = self.window().hull(&other.window());
        let mut s = Complex64::new(0.0, 0.0);
        for x in w.sites() {
            let a = self.amp(x);
            let b = other.amp(x);
            s += a[0].conj() * b[0] + a[1].conj() * b[1];
        }
        s
    }

    /// Sharp restriction `1_J ψ` (window shrinks to J).
    #[must_use]
    pub fn restrict(&self, j: &IntervalZ) -> WalkState {
        let mut out = WalkState::zero(*j);
        for x in j.sites() {
            out.set(x, self.amp(x));
        }
        out
    }

    /// `self + c · other` over the hull window.
    #[must_use]
    pub fn add_scaled(&self, other: &WalkState, c: Complex64) -> WalkState {
        let w = self.window().hull(&other.window());
        let mut out = WalkState::zero(w);
        for x in w.sites() {
            let a = self.amp(x);
            let b = other.amp(x);
            out.set(x, [a[0] + c * b[0], a[1] + c * b[1]]);
        }
        out
    }

    /// `c · self`.
    #[must_use]
    pub fn scale(&self, c: Complex64) -> WalkState {
        let mut out = self.clone();
        for a in &mut out.amps {
            a[0] *= c;
            a[1] *= c;
        }
        out
    }

    /// Entrywise complex conjugate.
    #[must_use]
    pub fn conjugate(&self) -> WalkState {
        let mut out = self.clone();
        for a in &mut out.amps {
            a[0] = a[0].conj();
            a[1] = a[1].conj();
        }
        out
    }

    /// Tightest interval containing all nonzero amplitudes (`None` if ψ ≡ 0).
    pub fn support(&self) -> Option<IntervalZ> {
        let nz = |a: &[Complex64; 2]| a[0].norm_sqr() + a[1].norm_sqr() > 0.0;
        let lo = self.window().sites().find(|&x| nz(&self.amp(x)))?;
        let hi = self.window().sites().rev().find(|&x| nz(&self.amp(x)))?;
        Some(IntervalZ { lo, hi })
    }

    /// Largest single-site Euclidean norm `max_x ‖ψ(x)‖`.
    pub fn max_site_norm(&self) -> f64 {
        self.amps
            .iter()
            .map(|a| (a[0].norm_sqr() + a[1].norm_sqr()).sqrt())
            .fold(0.0, f64::max)
    }
}

/// One exact step `SCψ`. The support window grows by one site on each side.
pub fn apply_u(coins: &CoinSequence, psi: &WalkState) -> WalkState {
    let w = psi.window().neighborhood(1);
    let mut out = WalkState::zero(w);
    for x in w.sites() {
        let up = coins.coin(x + 1).apply(psi.amp(x + 1));
        let dn = coins.coin(x - 1).apply(psi.amp(x - 1));
        out.set(x, [up[0], dn[1]]);
    }
    out
}

/// `U^n ψ` by exact stepping, `n ≥ 0`.
pub fn evolve(coins: &CoinSequence, psi: &WalkState, n: usize) -> WalkState {
    let mut cur = psi.clone();
    for _ in 0..n {
        cur = apply_u(coins, &cur);
    }
    cur
}

/// Incoming support `supp♭ψ = [inf supp ψ^R, sup supp ψ^L]`.
///
/// A missing chirality leaves its bound at the corresponding window edge
/// (the half-infinite set truncated to the window); an empty intersection
/// or the zero state returns `None`.
pub fn incoming_support(psi: &WalkState) -> Option<IntervalZ> {
    psi.support()?;
    let w = psi.window();
    let lo = w
        .sites()
        .find(|&x| psi.amp(x)[1].norm_sqr() > 0.0)
        .unwrap_or(w.lo());
    let hi = w
        .sites()
        .rev()
        .find(|&x| psi.amp(x)[0].norm_sqr() > 0.0)
        .unwrap_or(w.hi());
    if lo > hi {
        None
    } else {
        Some(IntervalZ { lo, hi })
    }
}

/// The frame vector `Qψ(x) = (ψ^L(x-1), ψ^R(x))` propagated by transfer
/// matrices along eigen-solutions.
pub fn q_transform(psi: &WalkState, x: i64) -> [Complex64; 2] {
    [psi.amp(x - 1)[0], psi.amp(x)[1]]
}
