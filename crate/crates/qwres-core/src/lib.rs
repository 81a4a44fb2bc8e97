//! Resonances of finitely perturbed discrete-time quantum walks on the line.
//!
//! A walk is `U = SC` on `ℓ²(ℤ; ℂ²)`: a site-dependent unitary coin `C(x)`
//! followed by the chirality-conditional shift. All coins equal the identity
//! outside a finite window, so the scattering data is a finite product of
//! 2×2 transfer matrices. This crate computes, from that product:
//!
//! * the resonance polynomial `σ(λ)` and its nonzero roots (the resonances),
//!   cross-checked against the eigenvalues of the cut-off evolution matrix,
//! * resonant states and Jordan chains of generalized resonant states,
//! * the resonance expansion of a compactly supported state and the
//!   long-time evolution it predicts,
//! * observables derived from it: survival probability, decay envelopes,
//!   mean survival time, weak limits, pointwise asymptotics,
//! * a gallery of models with closed-form ground truth (double and triple
//!   barriers), symmetry transforms, and a coin-perturbation family that
//!   splits multiple resonances into simple ones.
//!
//! Everything is pure and deterministic; batch sweeps optionally run on
//! rayon behind the `parallel` feature (on by default).

pub mod expansion;
pub mod gallery;
pub mod observables;
mod par;
pub mod roots;
pub mod solver;
pub mod transfer;
pub mod verify;
pub mod walk;

pub use num_complex::Complex64;

/// Errors reported by walk construction, transfer algebra, and solvers.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Coin matrix is not unitary within tolerance.
    #[error("coin is not unitary: max |C*C - I| = {defect:.3e}")]
    NotUnitary {
        /// Largest entrywise deviation of `C*C` from the identity.
        defect: f64,
    },
    /// Coin has a vanishing diagonal entry (walk admissibility assumption).
    #[error(
        "inadmissible coin: |c11| = {c11_abs:.3e}, |c22| = {c22_abs:.3e} (both must exceed 1e-12)"
    )]
    Inadmissible {
        /// Modulus of the upper-left coin entry.
        c11_abs: f64,
        /// Modulus of the lower-right coin entry.
        c22_abs: f64,
    },
    /// Operation requires a nonempty perturbation support.
    #[error("free walk: no transfer product")]
    EmptySupport,
    /// Parameter outside its domain.
    #[error("domain error: {0}")]
    Domain(String),
    /// Evaluation at a pole of the requested object.
    #[error("pole at lambda = {re}{im:+}i: {what}")]
    Pole {
        /// Real part of the offending spectral parameter.
        re: f64,
        /// Imaginary part of the offending spectral parameter.
        im: f64,
        /// Which object is singular there.
        what: String,
    },
    /// Root iteration failed to converge.
    #[error(
        "root finder did not converge after {iterations} iterations (max residual {residual:.3e})"
    )]
    NoConvergence {
        /// Iterations performed.
        iterations: usize,
        /// Largest remaining Newton correction.
        residual: f64,
    },
    /// The given λ is not a resonance of the walk.
    #[error("not a resonance: |sigma({re}{im:+}i)| = {residual:.3e} exceeds tolerance {tol:.3e}")]
    NotAResonance {
        /// Real part of the candidate.
        re: f64,
        /// Imaginary part of the candidate.
        im: f64,
        /// Measured |σ(λ)| scaled residual.
        residual: f64,
        /// Tolerance it had to meet.
        tol: f64,
    },
    /// A constructed chain fails its defining identity.
    #[error("Jordan chain residual {residual:.3e} exceeds tolerance {tol:.3e}")]
    ChainResidual {
        /// Measured worst-site residual.
        residual: f64,
        /// Tolerance it had to meet.
        tol: f64,
    },
    /// Interval J does not satisfy a required inclusion.
    #[error("interval violation: {0}")]
    IntervalViolation(String),
    /// Matrix too large for the dense characteristic-polynomial oracle.
    #[error("matrix size {size} exceeds the eigen-oracle cap {cap}")]
    Oversize {
        /// Requested size.
        size: usize,
        /// Maximum supported size.
        cap: usize,
    },
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
