//! Resonances by two independent routes, resonant states, Jordan chains.
//!
//! Route one: the nonzero roots of `σ(λ)` from the exact transfer product,
//! found by Aberth–Ehrlich iteration with derivative-confirmed multiplicity
//! clustering. Route two (the oracle): eigenvalues of the cut-off evolution
//! `E_J = 1_J U 1_J` through its Faddeev–LeVerrier characteristic
//! polynomial, rooted by the same iteration. The two routes never share
//! intermediate data, so their agreement is a real check.
//!
//! Resonant states are built in the frame `Qφ(x) = (φ^L(x-1), φ^R(x))` by
//! propagating `Qφ(x⁻) = e₁` with transfer matrices; Jordan chains carry
//! the same propagation on truncated Taylor jets in `λ`, so the chain
//! identity `(U - λ)φ_{k} = φ_{k-1}` holds by construction and only
//! outgoingness ties the chain length to the root multiplicity.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::roots::{self, RootCluster};
use crate::transfer::{self, SigmaPoly, TransferData};
use crate::walk::{CoinSequence, IntervalZ, WalkState};
use crate::{Error, Result};

fn czero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}
fn cone() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

/// Tunable tolerances of the resonance solver.
#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    /// Residual gate `|σ(λ)| ≤ residual_tol · max|coeff|` for accepting λ.
    pub residual_tol: f64,
    /// Pairwise clustering distance, scaled by `max(1, |λ|)`.
    pub cluster_tol: f64,
    /// Roots closer to the origin than this are folded into the zero
    /// cluster (reported through `dim V_J(0)`, never as resonances).
    pub zero_radius: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            residual_tol: 1e-9,
            cluster_tol: roots::CLUSTER_TOL,
            zero_radius: 1e-8,
        }
    }
}

/// Whether a resonance satisfies the outgoing or the incoming condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    /// Far field propagates away from the perturbed region (`|λ| < 1`).
    Outgoing,
    /// Far field propagates toward the perturbed region (`|λ| > 1`).
    Incoming,
}

/// A resonance: location, algebraic multiplicity, boundary-condition kind,
/// and the scaled residual of its defining polynomial.
#[derive(Debug, Clone, Copy)]
pub struct Resonance {
    /// The pole location λ.
    pub lambda: Complex64,
    /// Algebraic multiplicity.
    pub multiplicity: usize,
    /// Outgoing or incoming.
    pub kind: Kind,
    /// Scaled residual of the defining polynomial at λ.
    pub residual: f64,
}

/// Aggregate spectral data of the outgoing resonance set.
#[derive(Debug, Clone)]
pub struct SpectrumSummary {
    /// Largest resonance modulus `Λ₀` (0 when there are no resonances).
    pub lambda0: f64,
    /// Largest multiplicity among resonances of modulus `Λ₀`.
    pub m0: usize,
    /// Per-modulus maximal multiplicities `p(Λ)`, moduli descending
    /// (moduli are merged when closer than 1e-9).
    pub p_map: Vec<(f64, usize)>,
    /// Sum of all multiplicities.
    pub sum_mult: usize,
    /// The a-priori bound `2(|chs|_ℤ - 1)` on `sum_mult`.
    pub budget: usize,
}

impl SpectrumSummary {
    /// `p(Λ)`: maximal multiplicity among resonances of modulus Λ (0 when
    /// no resonance has that modulus).
    pub fn p_of(&self, modulus: f64) -> usize {
        self.p_map
            .iter()
            .find(|(m, _)| (m - modulus).abs() <= 1e-9)
            .map_or(0, |&(_, p)| p)
    }

    fn from_resonances(res: &[Resonance], budget: usize) -> Self {
        let mut p_map: Vec<(f64, usize)> = vec![];
        for r in res {
            let m = r.lambda.norm();
            match p_map.iter_mut().find(|(mm, _)| (*mm - m).abs() <= 1e-9) {
                Some(slot) => slot.1 = slot.1.max(r.multiplicity),
                None => p_map.push((m, r.multiplicity)),
            }
        }
        p_map.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(std::cmp::Ordering::Equal));
        let lambda0 = p_map.first().map_or(0.0, |&(m, _)| m);
        let m0 = p_map.first().map_or(0, |&(_, p)| p);
        Self {
            lambda0,
            m0,
            p_map,
            sum_mult: res.iter().map(|r| r.multiplicity).sum(),
            budget,
        }
    }
}

fn sort_resonances(res: &mut [Resonance]) {
    let q = |v: f64| (v * 1e12).round();
    res.sort_by(|a, b| {
        (q(a.lambda.re), q(a.lambda.im))
            .partial_cmp(&(q(b.lambda.re), q(b.lambda.im)))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
}

fn clusters_to_resonances(
    clusters: Vec<RootCluster>,
    kind: Kind,
    opts: &SolverOptions,
) -> Vec<Resonance> {
    let mut res: Vec<Resonance> = clusters
        .into_iter()
        .filter(|c| c.z.norm() >= opts.zero_radius)
        .map(|c| Resonance {
            lambda: c.z,
            multiplicity: c.multiplicity,
            kind,
            residual: c.residual,
        })
        .collect();
    sort_resonances(&mut res);
    res
}

/// All outgoing resonances of the walk with multiplicities, plus summary.
///
/// Empty support yields an empty list with `Λ₀ = 0`.
pub fn find_resonances(
    coins: &CoinSequence,
    opts: &SolverOptions,
) -> Result<(Vec<Resonance>, SpectrumSummary)> {
    let Some(_) = coins.chs() else {
        return Ok((
            vec![],
            SpectrumSummary {
                lambda0: 0.0,
                m0: 0,
                p_map: vec![],
                sum_mult: 0,
                budget: 0,
            },
        ));
    };
    let sig = transfer::sigma(coins)?;
    let res = resonances_of_sigma(&sig, opts)?;
    let budget = 2 * (sig.k.max(1) - 1) as usize;
    let summary = SpectrumSummary::from_resonances(&res, budget);
    Ok((res, summary))
}

/// Outgoing resonances from an already-computed `σ`.
pub fn resonances_of_sigma(sig: &SigmaPoly, opts: &SolverOptions) -> Result<Vec<Resonance>> {
    let rs = roots::all_roots(&sig.coeffs)?;
    let clusters =
        roots::cluster_roots(&rs.nonzero, &sig.coeffs, opts.cluster_tol, roots::DERIV_TOL);
    Ok(clusters_to_resonances(clusters, Kind::Outgoing, opts))
}

/// Batch resonance computation (runs on the rayon pool when the `parallel`
/// feature is enabled).
pub fn find_resonances_batch(
    walks: &[CoinSequence],
    opts: &SolverOptions,
) -> Vec<Result<(Vec<Resonance>, SpectrumSummary)>> {
    let opts = *opts;
    crate::par::par_map(walks, move |w| find_resonances(w, &opts))
}

/// Incoming resonances: nonzero roots of `t22`, the mirrored boundary
/// condition in the transfer frame.
///
/// Characterizing incoming resonances through `t22` is a derived statement;
/// it is pinned against symmetry only in the `c11(x) = c22(x)` regime,
/// where the incoming set must equal `{1/conj(λ)}` of the outgoing set.
pub fn incoming_resonances(coins: &CoinSequence, opts: &SolverOptions) -> Result<Vec<Resonance>> {
    let Some(_) = coins.chs() else {
        return Ok(vec![]);
    };
    let tp = transfer::transfer_poly(coins)?;
    let k = tp.chs.card();
    let t22 = &tp.matrix.e[1][1];
    if t22.is_zero() {
        return Ok(vec![]);
    }
    // τ(λ) = λ^k t22(λ), an ordinary polynomial like σ.
    let mut coeffs = vec![czero(); (2 * k + 1) as usize];
    for (j, c) in coeffs.iter_mut().enumerate() {
        *c = t22.coeff(j as i64 - k);
    }
    let rs = roots::all_roots(&coeffs)?;
    let clusters = roots::cluster_roots(&rs.nonzero, &coeffs, opts.cluster_tol, roots::DERIV_TOL);
    Ok(clusters_to_resonances(clusters, Kind::Incoming, opts))
}

/// The cut-off evolution `E_J = 1_J U 1_J` as a dense matrix over the
/// site-ordered `(L, R)` basis of `ℓ²(J; ℂ²)`.
#[derive(Debug, Clone)]
pub struct CutoffMatrix {
    /// The interval J.
    pub j: IntervalZ,
    /// Dense matrix, size `2|J|_ℤ`.
    pub m: DMatrix<Complex64>,
}

impl CutoffMatrix {
    /// Dimension `2|J|_ℤ`.
    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    /// Index of the `L` component at site x.
    pub fn idx_l(&self, x: i64) -> usize {
        (2 * (x - self.j.lo())) as usize
    }

    /// Index of the `R` component at site x.
    pub fn idx_r(&self, x: i64) -> usize {
        (2 * (x - self.j.lo()) + 1) as usize
    }

    /// Flattens `1_J ψ` into the basis vector.
    pub fn state_to_vec(&self, psi: &WalkState) -> DMatrix<Complex64> {
        let mut v = DMatrix::<Complex64>::zeros(self.dim(), 1);
        for x in self.j.sites() {
            let a = psi.amp(x);
            v[(self.idx_l(x), 0)] = a[0];
            v[(self.idx_r(x), 0)] = a[1];
        }
        v
    }

    /// Reads a basis vector back into a state supported on J.
    pub fn vec_to_state(&self, v: &DMatrix<Complex64>) -> WalkState {
        let mut st = WalkState::zero(self.j);
        for x in self.j.sites() {
            st.set(x, [v[(self.idx_l(x), 0)], v[(self.idx_r(x), 0)]]);
        }
        st
    }
}

/// Builds `E_J`; requires `J ⊇ chs(C - I₂)`.
pub fn cutoff_matrix(coins: &CoinSequence, j: IntervalZ) -> Result<CutoffMatrix> {
    if let Some(chs) = coins.chs() {
        if !j.contains_interval(&chs) {
            return Err(Error::IntervalViolation(format!(
                "J = [{}, {}] must contain chs = [{}, {}]",
                j.lo(),
                j.hi(),
                chs.lo(),
                chs.hi()
            )));
        }
    }
    let n = (2 * j.card()) as usize;
    let mut m = DMatrix::<Complex64>::zeros(n, n);
    let idx_l = |x: i64| (2 * (x - j.lo())) as usize;
    let idx_r = |x: i64| (2 * (x - j.lo()) + 1) as usize;
    for x in j.sites() {
        // (Uψ)^L(x) pulls from site x+1, (Uψ)^R(x) from site x-1.
        if x < j.hi() {
            let c = coins.coin(x + 1);
            m[(idx_l(x), idx_l(x + 1))] = c.c11();
            m[(idx_l(x), idx_r(x + 1))] = c.c12();
        }
        if x > j.lo() {
            let c = coins.coin(x - 1);
            m[(idx_r(x), idx_l(x - 1))] = c.c21();
            m[(idx_r(x), idx_r(x - 1))] = c.c22();
        }
    }
    Ok(CutoffMatrix { j, m })
}

/// Size cap of the dense eigen-oracle.
pub const EIGEN_ORACLE_CAP: usize = 256;

/// Eigenvalues of `E_J` with algebraic multiplicities, via the
/// Faddeev–LeVerrier characteristic polynomial and the shared root finder.
/// Includes the zero cluster.
pub fn eigen_oracle(e: &CutoffMatrix) -> Result<Vec<(Complex64, usize)>> {
    eigen_oracle_opts(e, &SolverOptions::default())
}

/// `eigen_oracle` with explicit tolerances.
pub fn eigen_oracle_opts(
    e: &CutoffMatrix,
    opts: &SolverOptions,
) -> Result<Vec<(Complex64, usize)>> {
    let n = e.dim();
    if n > EIGEN_ORACLE_CAP {
        return Err(Error::Oversize {
            size: n,
            cap: EIGEN_ORACLE_CAP,
        });
    }
    let cp = roots::char_poly(&e.m);
    let rs = roots::all_roots(&cp)?;
    let clusters = roots::cluster_roots(&rs.nonzero, &cp, opts.cluster_tol, roots::DERIV_TOL);
    let mut out: Vec<(Complex64, usize)> = vec![];
    let mut zero_mult = rs.zero_multiplicity;
    for c in clusters {
        if c.z.norm() < opts.zero_radius {
            zero_mult += c.multiplicity;
        } else {
            out.push((c.z, c.multiplicity));
        }
    }
    if zero_mult > 0 {
        out.push((czero(), zero_mult));
    }
    let q = |v: f64| (v * 1e12).round();
    out.sort_by(|a, b| {
        (q(a.0.re), q(a.0.im))
            .partial_cmp(&(q(b.0.re), q(b.0.im)))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    Ok(out)
}

// ---------------------------------------------------------------------------
// Jets: truncated Taylor expansions in (λ - λ₀), for Jordan chains.
// ---------------------------------------------------------------------------

/// Truncated Taylor series `Σ_l c[l] (λ - λ₀)^l` of fixed order.
#[derive(Debug, Clone)]
struct Jet {
    c: Vec<Complex64>,
}

impl Jet {
    fn constant(v: Complex64, order: usize) -> Self {
        let mut c = vec![czero(); order];
        c[0] = v;
        Self { c }
    }

    /// Jet of λ itself around λ₀.
    fn lambda(l0: Complex64, order: usize) -> Self {
        let mut c = vec![czero(); order];
        c[0] = l0;
        if order > 1 {
            c[1] = cone();
        }
        Self { c }
    }

    /// Jet of λ⁻¹ around λ₀ ≠ 0: coefficients `(-1)^l λ₀^{-(l+1)}`.
    fn lambda_inv(l0: Complex64, order: usize) -> Self {
        let mut c = vec![czero(); order];
        let inv = cone() / l0;
        let mut cur = inv;
        for (l, slot) in c.iter_mut().enumerate() {
            *slot = cur;
            cur = -cur * inv;
            let _ = l;
        }
        Self { c }
    }

    /// Jet of λ^n (n may be negative) around λ₀ ≠ 0.
    fn lambda_pow(l0: Complex64, n: i64, order: usize) -> Self {
        let mut out = Jet::constant(cone(), order);
        let base = if n >= 0 {
            Jet::lambda(l0, order)
        } else {
            Jet::lambda_inv(l0, order)
        };
        for _ in 0..n.unsigned_abs() {
            out = out.mul(&base);
        }
        out
    }

    fn mul(&self, other: &Jet) -> Jet {
        let order = self.c.len();
        let mut c = vec![czero(); order];
        for (i, a) in self.c.iter().enumerate() {
            for (j, b) in other.c.iter().enumerate() {
                if i + j < order {
                    c[i + j] += a * b;
                }
            }
        }
        Jet { c }
    }

    fn add(&self, other: &Jet) -> Jet {
        Jet {
            c: self.c.iter().zip(&other.c).map(|(a, b)| a + b).collect(),
        }
    }

    fn scale(&self, v: Complex64) -> Jet {
        Jet {
            c: self.c.iter().map(|a| a * v).collect(),
        }
    }
}

type JetMat = [[Jet; 2]; 2];

fn jet_mat_vec(m: &JetMat, v: &[Jet; 2]) -> [Jet; 2] {
    [
        m[0][0].mul(&v[0]).add(&m[0][1].mul(&v[1])),
        m[1][0].mul(&v[0]).add(&m[1][1].mul(&v[1])),
    ]
}

fn transfer_jet(data: &TransferData, l0: Complex64, order: usize) -> JetMat {
    let e = Complex64::from_polar(1.0, data.theta);
    [
        [
            Jet::lambda(l0, order).scale(e * data.p),
            Jet::constant(e * data.q.conj(), order),
        ],
        [
            Jet::constant(e * data.q, order),
            Jet::lambda_inv(l0, order).scale(e * data.p.conj()),
        ],
    ]
}

fn transfer_jet_inv(data: &TransferData, l0: Complex64, order: usize) -> JetMat {
    let e = Complex64::from_polar(1.0, -data.theta);
    [
        [
            Jet::lambda_inv(l0, order).scale(e * data.p.conj()),
            Jet::constant(-e * data.q.conj(), order),
        ],
        [
            Jet::constant(-e * data.q, order),
            Jet::lambda(l0, order).scale(e * data.p),
        ],
    ]
}

// ---------------------------------------------------------------------------
// Resonant states and Jordan chains.
// ---------------------------------------------------------------------------

/// An outgoing solution of `(U - λ)φ = φ_prev` stored over a finite window.
///
/// For the head of a chain (`chain_index` 0) the far field is exactly
/// `c₋ (λ^x, 0)` left of the perturbation and `c₊ (0, λ^{-x})` right of it.
/// Higher members carry the corresponding Taylor coefficients of `c±(λ)`.
#[derive(Debug, Clone)]
pub struct ResonantState {
    /// The resonance this state belongs to.
    pub lambda: Complex64,
    /// Amplitudes over the construction window.
    pub state: WalkState,
    /// Left outgoing far-field coefficient (Taylor coefficient for members).
    pub c_minus: Complex64,
    /// Right outgoing far-field coefficient (Taylor coefficient for members).
    pub c_plus: Complex64,
    /// Position in the chain (0 = the resonant state itself).
    pub chain_index: usize,
}

/// A Jordan chain `φ_1, …, φ_m` with `(U - λ)φ_k = φ_{k-1}`, `φ_0 = 0`.
#[derive(Debug, Clone)]
pub struct JordanChain {
    /// The resonance.
    pub lambda: Complex64,
    /// Chain members, index k-1 holding φ_k.
    pub states: Vec<ResonantState>,
}

impl JordanChain {
    /// Chain length m.
    pub fn len(&self) -> usize {
        self.states.len()
    }

    /// True when the chain is empty (never produced by the constructor).
    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Worst interior-site defect of the chain identities
    /// `(U - λ)φ_k = φ_{k-1}`, relative to the member's largest amplitude.
    pub fn defect(&self, coins: &CoinSequence) -> f64 {
        let mut worst: f64 = 0.0;
        for (k, member) in self.states.iter().enumerate() {
            let prev = (k > 0).then(|| &self.states[k - 1].state);
            worst = worst.max(eigen_defect(coins, member, prev));
        }
        worst
    }
}

/// Max interior-site norm of `(U - λ)φ - φ_prev`, relative to the largest
/// site norm of φ (edge sites are excluded: their neighbors fall outside
/// the stored window).
pub fn eigen_defect(coins: &CoinSequence, state: &ResonantState, prev: Option<&WalkState>) -> f64 {
    let w = state.state.window();
    let u = crate::walk::apply_u(coins, &state.state);
    let scale = state.state.max_site_norm().max(1e-300);
    let mut worst: f64 = 0.0;
    for x in (w.lo() + 1)..=(w.hi() - 1) {
        let ua = u.amp(x);
        let sa = state.state.amp(x);
        let pa = prev.map_or([czero(); 2], |p| p.amp(x));
        let dl = ua[0] - state.lambda * sa[0] - pa[0];
        let dr = ua[1] - state.lambda * sa[1] - pa[1];
        worst = worst.max((dl.norm_sqr() + dr.norm_sqr()).sqrt());
    }
    worst / scale
}

/// Builds the Jordan chain of length `m` at the resonance λ over `window`
/// (default `N₂(chs)` when `None`).
///
/// Gates on the derivative residuals `|σ^{(j)}(λ)|/j! ≤ tol·scale`, j < m,
/// so a non-resonance or an overlong chain is rejected rather than built.
pub fn jordan_chain(
    coins: &CoinSequence,
    lambda: Complex64,
    m: usize,
    window: Option<IntervalZ>,
    opts: &SolverOptions,
) -> Result<JordanChain> {
    let chs = coins.chs().ok_or(Error::EmptySupport)?;
    if m == 0 {
        return Err(Error::Domain("chain length m must be at least 1".into()));
    }
    if lambda.norm() < opts.zero_radius {
        return Err(Error::Domain(
            "lambda = 0 is excluded from the resonance set (see dim V_J(0))".into(),
        ));
    }
    let sig = transfer::sigma(coins)?;
    let scale = sig.scale();
    // Multiplicity-aware residual gate; λ must kill σ and its first m-1
    // derivatives.
    let gate = opts.residual_tol.max(1e-8) * scale;
    for j in 0..m {
        let r = roots::nth_derivative_over_factorial(&sig.coeffs, lambda, j).norm();
        if r > gate {
            return Err(Error::NotAResonance {
                re: lambda.re,
                im: lambda.im,
                residual: r / scale,
                tol: gate / scale,
            });
        }
    }

    let window = window.unwrap_or_else(|| chs.neighborhood(2));
    let window = window.hull(&chs);
    let order = m;

    // Q-frame jets over [window.lo, window.hi + 1].
    let span = (window.card() + 1) as usize;
    let mut q: Vec<[Jet; 2]> = Vec::with_capacity(span);
    // Forward pass from x⁻.
    let mut cur = [Jet::constant(cone(), order), Jet::constant(czero(), order)];
    let mut fwd: Vec<[Jet; 2]> = vec![cur.clone()];
    for x in chs.lo()..=window.hi() {
        let data = TransferData::from_coin(&coins.coin(x));
        let t = transfer_jet(&data, lambda, order);
        cur = jet_mat_vec(&t, &cur);
        fwd.push(cur.clone());
    }
    // Backward pass from x⁻ down to window.lo.
    let mut bwd: Vec<[Jet; 2]> = vec![];
    let mut back = fwd[0].clone();
    for x in (window.lo()..chs.lo()).rev() {
        let data = TransferData::from_coin(&coins.coin(x));
        let tinv = transfer_jet_inv(&data, lambda, order);
        back = jet_mat_vec(&tinv, &back);
        bwd.push(back.clone());
    }
    // Assemble Q[x] for x in [window.lo, window.hi + 1].
    for x in window.lo()..=(window.hi() + 1) {
        let jet = if x < chs.lo() {
            bwd[(chs.lo() - 1 - x) as usize].clone()
        } else {
            fwd[(x - chs.lo()) as usize].clone()
        };
        q.push(jet);
    }

    // Far-field coefficient jets: c₋(λ) = λ^{1 - x⁻},
    // c₊(λ) = t21(λ) λ^{x⁺ + 1} with t21 read off the forward product.
    let c_minus_jet = Jet::lambda_pow(lambda, 1 - chs.lo(), order);
    let t21_jet = &fwd[(chs.hi() + 1 - chs.lo()) as usize][1];
    let c_plus_jet = t21_jet.mul(&Jet::lambda_pow(lambda, chs.hi() + 1, order));

    let mut states = Vec::with_capacity(m);
    for l in 0..m {
        let mut st = WalkState::zero(window);
        for x in window.sites() {
            let i = (x - window.lo()) as usize;
            st.set(x, [q[i + 1][0].c[l], q[i][1].c[l]]);
        }
        states.push(ResonantState {
            lambda,
            state: st,
            c_minus: c_minus_jet.c[l],
            c_plus: c_plus_jet.c[l],
            chain_index: l,
        });
    }
    let chain = JordanChain { lambda, states };
    let defect = chain.defect(coins);
    if defect > 1e-9 {
        return Err(Error::ChainResidual {
            residual: defect,
            tol: 1e-9,
        });
    }
    Ok(chain)
}

/// Builds the resonant state at a simple-or-multiple resonance λ (the head
/// of its Jordan chain), normalized by `Qφ(x⁻) = e₁`.
pub fn resonant_state(
    coins: &CoinSequence,
    lambda: Complex64,
    window: Option<IntervalZ>,
    opts: &SolverOptions,
) -> Result<ResonantState> {
    Ok(jordan_chain(coins, lambda, 1, window, opts)?
        .states
        .pop()
        .expect("chain of length 1"))
}

/// All Jordan chains of the walk, one per resonance, over `window`.
pub fn all_chains(
    coins: &CoinSequence,
    resonances: &[Resonance],
    window: Option<IntervalZ>,
    opts: &SolverOptions,
) -> Result<Vec<JordanChain>> {
    resonances
        .iter()
        .map(|r| jordan_chain(coins, r.lambda, r.multiplicity, window, opts))
        .collect()
}
