//! Resonance expansion of finitely supported states and its evolution law.
//!
//! Over an interval `J ⊇ chs`, every state supported in J splits uniquely
//! into chain cutoffs plus a transient: `1_J ψ = Σ_{λ,k} c_{λ,k} 1_J
//! φ_{λ,k} + v`, where v lies in the zero generalized eigenspace `V_J(0)`
//! of the cut-off evolution and dies out in finitely many steps. The
//! expansion is solved as a dense linear system whose column count is
//! pinned by the rank identity `dim V_J(0) + Σ mult = 2|J|_ℤ`, and
//! cross-checked against a contour-integral spectral projector that never
//! sees the basis.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::solver::{self, JordanChain, Resonance, SolverOptions};
use crate::walk::{CoinSequence, IntervalZ, WalkState};
use crate::{Error, Result};

/// Basis of the zero generalized eigenspace `V_J(0) = ker E_J^{2|J|_ℤ}`.
#[derive(Debug, Clone)]
pub struct ZeroSpace {
    /// The interval J.
    pub j: IntervalZ,
    /// Orthonormal basis vectors as states supported on J.
    pub basis: Vec<WalkState>,
    /// Singular values of the powered cutoff below the split, for
    /// diagnostics.
    pub split_values: Vec<f64>,
}

impl ZeroSpace {
    /// `dim V_J(0)`.
    pub fn dim(&self) -> usize {
        self.basis.len()
    }
}

/// Relative singular-value threshold for the kernel split.
pub const KERNEL_TOL: f64 = 1e-10;

/// Computes `V_J(0)` as the kernel of `E_J^{2|J|_ℤ + 1}` by SVD.
///
/// The power is one beyond the worst nilpotency index, so the kernel is the
/// full generalized eigenspace. Resonances with `|λ|^{2|J|_ℤ}` below the
/// split threshold would be absorbed spuriously; the returned
/// `split_values` expose the gap so callers can detect that regime.
pub fn zero_space(coins: &CoinSequence, j: IntervalZ) -> Result<ZeroSpace> {
    let e = solver::cutoff_matrix(coins, j)?;
    let n = e.dim();
    if n > solver::EIGEN_ORACLE_CAP {
        return Err(Error::Oversize {
            size: n,
            cap: solver::EIGEN_ORACLE_CAP,
        });
    }
    // E^(2|J|+1) by binary powering.
    let mut power = DMatrix::<Complex64>::identity(n, n);
    let mut base = e.m.clone();
    let mut exp = n + 1; // 2|J|_ℤ + 1
    while exp > 0 {
        if exp & 1 == 1 {
            power = &power * &base;
        }
        base = &base * &base;
        exp >>= 1;
    }
    let svd = power.svd(false, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    let tol = KERNEL_TOL * smax.max(1e-300);
    let v_t = svd
        .v_t
        .as_ref()
        .expect("svd with right singular vectors requested");
    let mut basis = vec![];
    let mut split_values = vec![];
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s <= tol {
            split_values.push(s);
            // Right singular vector = conjugated row of Vᵀ.
            let mut st = WalkState::zero(j);
            for x in j.sites() {
                st.set(
                    x,
                    [v_t[(i, e.idx_l(x))].conj(), v_t[(i, e.idx_r(x))].conj()],
                );
            }
            basis.push(st);
        }
    }
    Ok(ZeroSpace {
        j,
        basis,
        split_values,
    })
}

/// A resonance expansion of `1_J ψ` with diagnostics.
#[derive(Debug, Clone)]
pub struct Expansion {
    /// The interval J.
    pub j: IntervalZ,
    /// One Jordan chain per resonance, windows covering J.
    pub chains: Vec<JordanChain>,
    /// `coeffs[i][l]` is `c_{λ_i, l+1}` for chain i.
    pub coeffs: Vec<Vec<Complex64>>,
    /// Coefficients over the `zero.basis` vectors.
    pub zero_coeffs: Vec<Complex64>,
    /// The zero-space basis used.
    pub zero: ZeroSpace,
    /// Relative residual `‖A c - 1_J ψ‖ / ‖1_J ψ‖` of the solve.
    pub residual: f64,
    /// Condition number of the column-scaled expansion matrix.
    pub condition: f64,
    /// Norm of the expanded cutoff `‖1_J ψ‖`.
    pub input_norm: f64,
}

impl Expansion {
    /// The transient part `v ∈ V_J(0)` of the expansion.
    pub fn zero_part(&self) -> WalkState {
        let mut v = WalkState::zero(self.j);
        for (c, b) in self.zero_coeffs.iter().zip(&self.zero.basis) {
            v = v.add_scaled(b, *c);
        }
        v
    }

    /// The cutoff `Σ_k c_{λ_i,k} 1_J φ_{λ_i,k}` of chain i.
    pub fn chain_part(&self, i: usize) -> WalkState {
        let mut v = WalkState::zero(self.j);
        for (l, c) in self.coeffs[i].iter().enumerate() {
            v = v.add_scaled(&self.chains[i].states[l].state.restrict(&self.j), *c);
        }
        v
    }

    /// Number of distinct resonances that the expansion actually uses:
    /// those with some `|c_{λ,k}| ‖1_J φ_{λ,k}‖ > threshold · ‖1_J ψ‖`.
    pub fn lambda_count(&self, threshold: f64) -> usize {
        let gate = threshold * self.input_norm;
        self.chains
            .iter()
            .zip(&self.coeffs)
            .filter(|(chain, cs)| {
                cs.iter()
                    .enumerate()
                    .any(|(l, c)| c.norm() * chain.states[l].state.restrict(&self.j).norm() > gate)
            })
            .count()
    }
}

/// Expands `1_J ψ` over the chain cutoffs and `V_J(0)`.
///
/// Fails honestly when the rank identity `dim V_J(0) + Σ mult = 2|J|_ℤ`
/// does not hold numerically, rather than solving a rectangular system.
pub fn expand(
    coins: &CoinSequence,
    psi: &WalkState,
    j: IntervalZ,
    opts: &SolverOptions,
) -> Result<Expansion> {
    let dim = 2 * j.card() as usize;
    let (resonances, _) = solver::find_resonances(coins, opts)?;
    let zero = zero_space(coins, j)?;
    let sum_mult: usize = resonances.iter().map(|r| r.multiplicity).sum();
    if zero.dim() + sum_mult != dim {
        return Err(Error::Domain(format!(
            "rank identity failed: dim V_J(0) = {} plus sum of multiplicities {} != 2|J| = {}",
            zero.dim(),
            sum_mult,
            dim
        )));
    }
    let chains = build_chains(coins, &resonances, j, opts)?;

    let e = solver::cutoff_matrix(coins, j)?;
    let mut a = DMatrix::<Complex64>::zeros(dim, dim);
    let mut col = 0usize;
    for chain in &chains {
        for member in &chain.states {
            let v = e.state_to_vec(&member.state);
            a.set_column(col, &v.column(0));
            col += 1;
        }
    }
    for b in &zero.basis {
        let v = e.state_to_vec(b);
        a.set_column(col, &v.column(0));
        col += 1;
    }
    debug_assert_eq!(col, dim);

    // Column scaling keeps widely different chain-member magnitudes from
    // poisoning the solve.
    let mut scales = vec![1.0f64; dim];
    for (c, s) in scales.iter_mut().enumerate() {
        let norm = a.column(c).norm();
        if norm > 1e-300 {
            *s = norm;
            let inv = Complex64::new(1.0 / norm, 0.0);
            for r in 0..dim {
                a[(r, c)] *= inv;
            }
        }
    }

    let rhs = e.state_to_vec(&psi.restrict(&j));
    let input_norm = rhs.column(0).norm();
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    let smin = svd
        .singular_values
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    let condition = if smin > 0.0 {
        smax / smin
    } else {
        f64::INFINITY
    };
    let sol = svd
        .solve(&rhs, 1e-300)
        .map_err(|e| Error::Domain(format!("expansion solve failed: {e}")))?;
    let residual_vec = &a * &sol - &rhs;
    let residual = residual_vec.column(0).norm() / input_norm.max(1e-300);

    let mut coeffs = vec![];
    let mut idx = 0usize;
    for chain in &chains {
        let mut cs = vec![];
        for _ in &chain.states {
            cs.push(sol[(idx, 0)] / scales[idx]);
            idx += 1;
        }
        coeffs.push(cs);
    }
    let mut zero_coeffs = vec![];
    for _ in &zero.basis {
        zero_coeffs.push(sol[(idx, 0)] / scales[idx]);
        idx += 1;
    }

    Ok(Expansion {
        j,
        chains,
        coeffs,
        zero_coeffs,
        zero,
        residual,
        condition,
        input_norm,
    })
}

fn build_chains(
    coins: &CoinSequence,
    resonances: &[Resonance],
    j: IntervalZ,
    opts: &SolverOptions,
) -> Result<Vec<JordanChain>> {
    let window = match coins.chs() {
        Some(chs) => j.hull(&chs.neighborhood(1)),
        None => j,
    };
    resonances
        .iter()
        .map(|r| solver::jordan_chain(coins, r.lambda, r.multiplicity, Some(window), opts))
        .collect()
}

fn binomial(n: i64, l: usize) -> f64 {
    let mut out = 1.0f64;
    for i in 0..l {
        out *= (n - i as i64) as f64 / (i + 1) as f64;
    }
    out
}

/// Evaluates the expansion's evolution law at time n on the region where it
/// is exact, `N_{n-1-2|J|_ℤ}(J)`; requires `n > 2|J|_ℤ`.
///
/// `U^n ψ = Σ_λ λ^n Σ_k c_{λ,k} Σ_{l<k} binom(n,l) λ^{-l} φ_{λ,k-l}` there:
/// the transient has died and the chain tails have not yet arrived.
pub fn predict_evolution(
    coins: &CoinSequence,
    expansion: &Expansion,
    n: i64,
    opts: &SolverOptions,
) -> Result<(WalkState, IntervalZ)> {
    let two_j = 2 * expansion.j.card();
    if n <= two_j {
        return Err(Error::Domain(format!(
            "prediction requires n > 2|J|_ℤ = {two_j}, got n = {n}"
        )));
    }
    let region = expansion.j.neighborhood(n - 1 - two_j);
    let window = match coins.chs() {
        Some(chs) => region.hull(&chs.neighborhood(1)),
        None => region,
    };
    let mut out = WalkState::zero(region);
    for (chain, cs) in expansion.chains.iter().zip(&expansion.coeffs) {
        let m = chain.len();
        let wide = solver::jordan_chain(coins, chain.lambda, m, Some(window), opts)?;
        let ln = chain.lambda.powi(n as i32);
        for (ki, c) in cs.iter().enumerate() {
            let k = ki + 1;
            for l in 0..k {
                let w = ln * c * binomial(n, l) * chain.lambda.powi(-(l as i32));
                // φ_{λ, k-l} is chain member index k-l-1.
                let member = &wide.states[k - l - 1].state;
                for x in region.sites() {
                    let a = member.amp(x);
                    let cur = out.amp(x);
                    out.set(x, [cur[0] + w * a[0], cur[1] + w * a[1]]);
                }
            }
        }
    }
    Ok((out, region))
}

/// Applies the cut-off resolvent `(E_J - z)^{-1}` to `1_J ψ`.
pub fn resolvent_apply(
    coins: &CoinSequence,
    j: IntervalZ,
    z: Complex64,
    psi: &WalkState,
) -> Result<WalkState> {
    let e = solver::cutoff_matrix(coins, j)?;
    let n = e.dim();
    let mut shifted = e.m.clone();
    for i in 0..n {
        shifted[(i, i)] -= z;
    }
    let rhs = e.state_to_vec(&psi.restrict(&j));
    let lu = shifted.clone().lu();
    let sol = lu.solve(&rhs).ok_or(Error::Pole {
        re: z.re,
        im: z.im,
        what: "cut-off resolvent".into(),
    })?;
    let defect = (&shifted * &sol - &rhs).column(0).norm();
    if !defect.is_finite() || defect > 1e-6 * rhs.column(0).norm().max(1e-300) {
        return Err(Error::Pole {
            re: z.re,
            im: z.im,
            what: "cut-off resolvent".into(),
        });
    }
    Ok(e.vec_to_state(&sol))
}

/// Number of quadrature nodes of the contour projector.
pub const CONTOUR_NODES: usize = 64;

/// Spectral projector of `E_J` at λ₀ by trapezoidal contour quadrature:
/// `P ψ = -(ρ/64) Σ_j e^{iφ_j} (E_J - λ₀ - ρe^{iφ_j})^{-1} 1_J ψ`.
///
/// Independent of the chain basis, so it cross-checks the expansion.
pub fn contour_projector(
    coins: &CoinSequence,
    j: IntervalZ,
    lambda0: Complex64,
    radius: f64,
    psi: &WalkState,
) -> Result<WalkState> {
    if radius <= 0.0 {
        return Err(Error::Domain("contour radius must be positive".into()));
    }
    let mut acc = WalkState::zero(j);
    for node in 0..CONTOUR_NODES {
        let phi = 2.0 * std::f64::consts::PI * node as f64 / CONTOUR_NODES as f64;
        let e = Complex64::from_polar(1.0, phi);
        let z = lambda0 + radius * e;
        let r = resolvent_apply(coins, j, z, psi)?;
        acc = acc.add_scaled(&r, e);
    }
    Ok(acc
        .scale(Complex64::new(-radius / CONTOUR_NODES as f64, 0.0))
        .restrict(&j))
}

/// Half the distance from λ₀ to the nearest other spectral point of `E_J`
/// (other resonances and the origin), a safe projector radius.
pub fn projector_radius(lambda0: Complex64, resonances: &[Resonance]) -> f64 {
    let mut d = lambda0.norm(); // distance to the zero cluster
    for r in resonances {
        let dist = (r.lambda - lambda0).norm();
        if dist > 1e-12 {
            d = d.min(dist);
        }
    }
    0.5 * d
}
