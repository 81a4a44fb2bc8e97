//! Transfer matrices and the resonance polynomial `σ(λ)`.
//!
//! For an eigen-solution `(U - λ)ψ = 0`, the frame vector
//! `Qψ(x) = (ψ^L(x-1), ψ^R(x))` satisfies `Qψ(x+1) = T_λ(x) Qψ(x)` with
//!
//! ```text
//! T_λ(x) = e^{iθ(x)} [[λ p(x), conj(q(x))], [q(x), λ⁻¹ conj(p(x))]]
//!        = (1/c11(x)) [[λ, -c12(x)], [c21(x), det C(x) / λ]]
//! ```
//!
//! where `p = e^{-iφ}/|c11|`, `q = e^{-iφ} c21/|c11|`, `θ = ½ arg(c22/c11)`,
//! `φ = ½ arg(c11 c22)`, so `det T_λ(x) = e^{2iθ(x)}` independent of λ and
//! `|p|² - |q|² = 1`. The whole-window product `𝕋(λ) = T_λ(x⁺)⋯T_λ(x⁻)` is
//! computed exactly in coefficient space as a matrix of Laurent polynomials;
//! the resonance polynomial is `σ(λ) = λ^k · 𝕋₁₁(λ)` with `k = |chs|_ℤ`,
//! and the scattering matrix is assembled from the entries of `𝕋`.

use num_complex::Complex64;

use crate::walk::{Coin, CoinSequence, IntervalZ};
use crate::{Error, Result};

/// Dynamic range of σ coefficients beyond which callers should warn about
/// double-precision headroom.
pub const COEFF_RANGE_WARN: f64 = 1e12;

fn czero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

/// Transfer data `(p, q, θ)` of a coin, with `φ` kept for reference.
#[derive(Debug, Clone, Copy)]
pub struct TransferData {
    /// `p = e^{-iφ}/|c11|`; satisfies `|p|² - |q|² = 1`.
    pub p: Complex64,
    /// `q = e^{-iφ} c21 / |c11|`.
    pub q: Complex64,
    /// Phase `θ = ½ arg(c22/c11)`; `det T_λ = e^{2iθ}`.
    pub theta: f64,
    /// Phase `φ = ½ arg(c11 c22)`; `det C = e^{2iφ}`.
    pub phi: f64,
}

impl TransferData {
    /// Extracts `(p, q, θ, φ)` from a coin.
    ///
    /// The two half-angle branches are tied together so that the defining
    /// relation `e^{iθ} p = 1/c11` holds exactly; taking both principal
    /// branches independently would represent `-T_λ` for some coins.
    pub fn from_coin(c: &Coin) -> Self {
        let theta = (c.c22() / c.c11()).arg() / 2.0;
        let phi = (c.c11() * c.c22()).arg() / 2.0;
        let e = Complex64::from_polar(1.0, -phi);
        let a = c.c11().norm();
        let mut p = e / a;
        let mut q = e * c.c21() / a;
        // `e^{iθ} p c11` is ±1 up to roundoff; flip the sign of (p, q) when
        // the two principal branches land on the -T_λ representative.
        if (Complex64::from_polar(1.0, theta) * p * c.c11()).re < 0.0 {
            p = -p;
            q = -q;
        }
        Self { p, q, theta, phi }
    }

    /// The gauge-equivalent representative `(-p, -q, θ - π)`.
    pub fn flip_branch(&self) -> Self {
        Self {
            p: -self.p,
            q: -self.q,
            theta: self.theta - std::f64::consts::PI,
            phi: self.phi,
        }
    }
}

/// Numeric transfer matrix `T_λ(x)` at a fixed `λ ≠ 0`.
pub fn transfer_at(coin: &Coin, lambda: Complex64) -> Result<[[Complex64; 2]; 2]> {
    if lambda.norm_sqr() == 0.0 {
        return Err(Error::Domain(
            "transfer matrix undefined at lambda = 0".into(),
        ));
    }
    let t = TransferData::from_coin(coin);
    let e = Complex64::from_polar(1.0, t.theta);
    Ok([
        [e * lambda * t.p, e * t.q.conj()],
        [e * t.q, e * t.p.conj() / lambda],
    ])
}

/// Inverse transfer matrix `T_λ(x)⁻¹` (determinant is the constant `e^{2iθ}`).
pub fn transfer_at_inv(coin: &Coin, lambda: Complex64) -> Result<[[Complex64; 2]; 2]> {
    if lambda.norm_sqr() == 0.0 {
        return Err(Error::Domain(
            "transfer matrix undefined at lambda = 0".into(),
        ));
    }
    let t = TransferData::from_coin(coin);
    let e = Complex64::from_polar(1.0, -t.theta);
    Ok([
        [e * t.p.conj() / lambda, -e * t.q.conj()],
        [-e * t.q, e * lambda * t.p],
    ])
}

/// A Laurent polynomial: complex coefficients over integer powers
/// `[lo, lo + coeffs.len() - 1]`.
#[derive(Debug, Clone)]
pub struct LaurentPoly {
    lo: i64,
    coeffs: Vec<Complex64>,
}

impl LaurentPoly {
    /// The zero polynomial.
    pub fn zero() -> Self {
        Self {
            lo: 0,
            coeffs: vec![],
        }
    }

    /// The single term `c · λ^power`.
    pub fn monomial(power: i64, c: Complex64) -> Self {
        if c == czero() {
            return Self::zero();
        }
        Self {
            lo: power,
            coeffs: vec![c],
        }
    }

    /// True when no nonzero coefficient is stored.
    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Lowest stored power (None for the zero polynomial).
    pub fn lo_power(&self) -> Option<i64> {
        (!self.is_zero()).then_some(self.lo)
    }

    /// Highest stored power (None for the zero polynomial).
    pub fn hi_power(&self) -> Option<i64> {
        (!self.is_zero()).then_some(self.lo + self.coeffs.len() as i64 - 1)
    }

    /// Coefficient of `λ^power`.
    pub fn coeff(&self, power: i64) -> Complex64 {
        let i = power - self.lo;
        if i < 0 || i >= self.coeffs.len() as i64 {
            czero()
        } else {
            self.coeffs[i as usize]
        }
    }

    fn trim(mut self) -> Self {
        while self.coeffs.last().is_some_and(|c| *c == czero()) {
            self.coeffs.pop();
        }
        let lead = self.coeffs.iter().take_while(|c| **c == czero()).count();
        if lead > 0 {
            self.coeffs.drain(..lead);
            self.lo += lead as i64;
        }
        if self.coeffs.is_empty() {
            self.lo = 0;
        }
        self
    }

    /// Sum.
    pub fn add(&self, other: &LaurentPoly) -> LaurentPoly {
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        let lo = self.lo.min(other.lo);
        let hi = self.hi_power().unwrap().max(other.hi_power().unwrap());
        let mut coeffs = vec![czero(); (hi - lo + 1) as usize];
        for (i, c) in coeffs.iter_mut().enumerate() {
            let p = lo + i as i64;
            *c = self.coeff(p) + other.coeff(p);
        }
        LaurentPoly { lo, coeffs }.trim()
    }

    /// Product by exact coefficient convolution.
    pub fn mul(&self, other: &LaurentPoly) -> LaurentPoly {
        if self.is_zero() || other.is_zero() {
            return LaurentPoly::zero();
        }
        let lo = self.lo + other.lo;
        let mut coeffs = vec![czero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if *a == czero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        LaurentPoly { lo, coeffs }.trim()
    }

    /// Scalar multiple.
    pub fn scale(&self, c: Complex64) -> LaurentPoly {
        LaurentPoly {
            lo: self.lo,
            coeffs: self.coeffs.iter().map(|a| a * c).collect(),
        }
        .trim()
    }

    /// Evaluation at `λ` (requires `λ ≠ 0` when negative powers are present).
    pub fn eval(&self, lambda: Complex64) -> Complex64 {
        if self.is_zero() {
            return czero();
        }
        // Horner on the ascending coefficients, then the λ^lo prefactor.
        let mut acc = czero();
        for c in self.coeffs.iter().rev() {
            acc = acc * lambda + c;
        }
        acc * lambda.powi(self.lo as i32)
    }

    /// Largest coefficient modulus.
    pub fn max_coeff(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Smallest nonzero coefficient modulus (0 for the zero polynomial).
    pub fn min_nonzero_coeff(&self) -> f64 {
        self.coeffs
            .iter()
            .map(|c| c.norm())
            .filter(|&n| n > 0.0)
            .fold(f64::INFINITY, f64::min)
            .min(f64::INFINITY)
    }

    /// True when all coefficients away from power 0 are below `tol`
    /// (λ-independence test).
    pub fn is_constant_within(&self, tol: f64) -> bool {
        if self.is_zero() {
            return true;
        }
        self.coeffs.iter().enumerate().all(|(i, c)| {
            let p = self.lo + i as i64;
            p == 0 || c.norm() <= tol
        })
    }
}

/// A 2×2 matrix of Laurent polynomials.
#[derive(Debug, Clone)]
pub struct LaurentMatrix {
    /// Row-major entries.
    pub e: [[LaurentPoly; 2]; 2],
}

impl LaurentMatrix {
    /// Identity matrix.
    pub fn identity() -> Self {
        let one = LaurentPoly::monomial(0, Complex64::new(1.0, 0.0));
        Self {
            e: [
                [one.clone(), LaurentPoly::zero()],
                [LaurentPoly::zero(), one],
            ],
        }
    }

    /// The transfer matrix of one coin as a Laurent matrix.
    pub fn from_coin(c: &Coin) -> Self {
        let t = TransferData::from_coin(c);
        let e = Complex64::from_polar(1.0, t.theta);
        Self {
            e: [
                [
                    LaurentPoly::monomial(1, e * t.p),
                    LaurentPoly::monomial(0, e * t.q.conj()),
                ],
                [
                    LaurentPoly::monomial(0, e * t.q),
                    LaurentPoly::monomial(-1, e * t.p.conj()),
                ],
            ],
        }
    }

    /// Matrix product `self · other`.
    pub fn mul(&self, other: &LaurentMatrix) -> LaurentMatrix {
        let mut e = [
            [LaurentPoly::zero(), LaurentPoly::zero()],
            [LaurentPoly::zero(), LaurentPoly::zero()],
        ];
        for (i, row) in e.iter_mut().enumerate() {
            for (j, slot) in row.iter_mut().enumerate() {
                let mut s = LaurentPoly::zero();
                for k in 0..2 {
                    s = s.add(&self.e[i][k].mul(&other.e[k][j]));
                }
                *slot = s;
            }
        }
        LaurentMatrix { e }
    }

    /// Determinant as a Laurent polynomial (constant for transfer products).
    pub fn det(&self) -> LaurentPoly {
        self.e[0][0].mul(&self.e[1][1]).add(
            &self.e[0][1]
                .mul(&self.e[1][0])
                .scale(Complex64::new(-1.0, 0.0)),
        )
    }

    /// Pointwise evaluation.
    pub fn eval(&self, lambda: Complex64) -> [[Complex64; 2]; 2] {
        [
            [self.e[0][0].eval(lambda), self.e[0][1].eval(lambda)],
            [self.e[1][0].eval(lambda), self.e[1][1].eval(lambda)],
        ]
    }
}

/// The transfer product over the support hull, with its site range.
#[derive(Debug, Clone)]
pub struct TransferProduct {
    /// `𝕋(λ) = T_λ(x⁺) ⋯ T_λ(x⁻)` as exact Laurent polynomials.
    pub matrix: LaurentMatrix,
    /// The hull `chs(C - I₂) = [x⁻, x⁺]`.
    pub chs: IntervalZ,
    /// Constant determinant `Δ = Π_x e^{2iθ(x)}`.
    pub delta: Complex64,
}

/// Computes the whole-window transfer product (identity coins inside the
/// hull contribute `diag(λ, λ⁻¹)` factors).
pub fn transfer_poly(coins: &CoinSequence) -> Result<TransferProduct> {
    let chs = coins.chs().ok_or(Error::EmptySupport)?;
    let mut m = LaurentMatrix::identity();
    let mut delta = Complex64::new(1.0, 0.0);
    for x in chs.sites() {
        let coin = coins.coin(x);
        m = LaurentMatrix::from_coin(&coin).mul(&m);
        let t = TransferData::from_coin(&coin);
        delta *= Complex64::from_polar(1.0, 2.0 * t.theta);
    }
    Ok(TransferProduct {
        matrix: m,
        chs,
        delta,
    })
}

/// The resonance polynomial `σ(λ) = λ^k · 𝕋₁₁(λ)`, an ordinary polynomial
/// of degree `2k` with `k = |chs|_ℤ`.
#[derive(Debug, Clone)]
pub struct SigmaPoly {
    /// Ascending coefficients `σ(λ) = Σ_j coeffs[j] λ^j`, length `2k + 1`.
    pub coeffs: Vec<Complex64>,
    /// The hull point count `k = |chs|_ℤ`.
    pub k: i64,
}

impl SigmaPoly {
    /// Degree of the polynomial (= `2k`).
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Evaluation by Horner.
    pub fn eval(&self, lambda: Complex64) -> Complex64 {
        crate::roots::eval_poly(&self.coeffs, lambda)
    }

    /// Largest coefficient modulus (the residual scale).
    pub fn scale(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Ratio of largest to smallest nonzero coefficient modulus.
    pub fn dynamic_range(&self) -> f64 {
        let max = self.scale();
        let min = self
            .coeffs
            .iter()
            .map(|c| c.norm())
            .filter(|&n| n > 0.0)
            .fold(f64::INFINITY, f64::min);
        if min.is_finite() && min > 0.0 {
            max / min
        } else {
            f64::INFINITY
        }
    }
}

/// Builds `σ` from the transfer product of `coins`.
pub fn sigma(coins: &CoinSequence) -> Result<SigmaPoly> {
    let tp = transfer_poly(coins)?;
    sigma_of_product(&tp)
}

/// Builds `σ` from an already-computed transfer product.
pub fn sigma_of_product(tp: &TransferProduct) -> Result<SigmaPoly> {
    let k = tp.chs.card();
    let t11 = &tp.matrix.e[0][0];
    let hi = t11
        .hi_power()
        .ok_or_else(|| Error::Domain("transfer product has identically zero (1,1) entry".into()))?;
    let lo = t11.lo_power().unwrap();
    debug_assert!(hi == k && lo >= -k, "t11 powers escape [-k, k]");
    let mut coeffs = vec![czero(); (2 * k + 1) as usize];
    for (j, c) in coeffs.iter_mut().enumerate() {
        *c = t11.coeff(j as i64 - k);
    }
    Ok(SigmaPoly { coeffs, k })
}

/// The scattering matrix at a fixed `λ`, stored in reduced form plus the
/// position-dependent diagonal phase factors.
#[derive(Debug, Clone)]
pub struct ScatteringMatrix {
    /// Reduced matrix `(1/t11) [[1, -t12], [t21, Δ]]`.
    pub reduced: [[Complex64; 2]; 2],
    /// Left diagonal phase factor `diag(λ^{-(x⁻-1)}, λ^{x⁺+1})`.
    pub phase_left: [Complex64; 2],
    /// Right diagonal phase factor `diag(λ^{x⁺}, λ^{-x⁻})`.
    pub phase_right: [Complex64; 2],
    /// The evaluation point.
    pub lambda: Complex64,
    /// Constant determinant `Δ` of the transfer product.
    pub delta: Complex64,
    /// `t11(λ)` (vanishes exactly at resonances).
    pub t11: Complex64,
}

impl ScatteringMatrix {
    /// Largest entrywise deviation of `S*S` from the identity (reduced form).
    pub fn unitarity_defect(&self) -> f64 {
        let s = &self.reduced;
        let mut defect: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                let mut acc = czero();
                for row in s {
                    acc += row[i].conj() * row[j];
                }
                let target = if i == j { 1.0 } else { 0.0 };
                defect = defect.max((acc - target).norm());
            }
        }
        defect
    }

    /// Trace of the reduced matrix, `(1 + Δ)/t11`; its poles are exactly the
    /// nonzero resonances when `Δ ≠ -1`.
    pub fn trace(&self) -> Complex64 {
        self.reduced[0][0] + self.reduced[1][1]
    }
}

/// Evaluates the scattering matrix; errors with a pole report when
/// `t11(λ)` vanishes to rounding (that λ is a resonance).
pub fn scattering_matrix(coins: &CoinSequence, lambda: Complex64) -> Result<ScatteringMatrix> {
    let tp = transfer_poly(coins)?;
    scattering_of_product(&tp, lambda)
}

/// Scattering matrix from an already-computed transfer product.
pub fn scattering_of_product(tp: &TransferProduct, lambda: Complex64) -> Result<ScatteringMatrix> {
    if lambda.norm_sqr() == 0.0 {
        return Err(Error::Domain(
            "scattering matrix undefined at lambda = 0".into(),
        ));
    }
    let m = tp.matrix.eval(lambda);
    let t11 = m[0][0];
    let scale = tp.matrix.e[0][0].max_coeff().max(1.0);
    if t11.norm() <= 1e-14 * scale {
        return Err(Error::Pole {
            re: lambda.re,
            im: lambda.im,
            what: "t11(lambda) = 0: lambda is a resonance".into(),
        });
    }
    let delta = tp.delta;
    let reduced = [
        [Complex64::new(1.0, 0.0) / t11, -m[0][1] / t11],
        [m[1][0] / t11, delta / t11],
    ];
    let (xm, xp) = (tp.chs.lo(), tp.chs.hi());
    Ok(ScatteringMatrix {
        reduced,
        phase_left: [lambda.powi(-(xm as i32 - 1)), lambda.powi(xp as i32 + 1)],
        phase_right: [lambda.powi(xp as i32), lambda.powi(-(xm as i32))],
        lambda,
        delta,
        t11,
    })
}
