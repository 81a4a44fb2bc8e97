//! Polynomial rooting: Aberth–Ehrlich simultaneous iteration, root
//! clustering with derivative-confirmed multiplicities, and the
//! Faddeev–LeVerrier characteristic polynomial for the dense eigen-oracle.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::{Error, Result};

/// Maximum Aberth iterations before reporting non-convergence.
pub const MAX_ITER: usize = 200;
/// Relative low-coefficient deflation threshold (treated as roots at 0).
pub const ZERO_COEFF_REL: f64 = 1e-13;
/// Default pairwise clustering distance, scaled by `max(1, |λ|)`.
pub const CLUSTER_TOL: f64 = 1e-6;
/// Default derivative-test threshold relative to the coefficient scale.
pub const DERIV_TOL: f64 = 1e-6;

fn czero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

/// Evaluates `Σ_j coeffs[j] λ^j` by Horner.
pub fn eval_poly(coeffs: &[Complex64], z: Complex64) -> Complex64 {
    let mut acc = czero();
    for c in coeffs.iter().rev() {
        acc = acc * z + c;
    }
    acc
}

/// Ascending-coefficient derivative.
pub fn derivative(coeffs: &[Complex64]) -> Vec<Complex64> {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(j, c)| c * (j as f64))
        .collect()
}

/// Expands `Π_j (λ - roots[j])` to ascending coefficients (test utility and
/// characteristic-polynomial helper).
pub fn poly_from_roots(roots: &[Complex64]) -> Vec<Complex64> {
    let mut coeffs = vec![Complex64::new(1.0, 0.0)];
    for r in roots {
        let mut next = vec![czero(); coeffs.len() + 1];
        for (i, c) in coeffs.iter().enumerate() {
            next[i + 1] += c;
            next[i] -= c * r;
        }
        coeffs = next;
    }
    coeffs
}

/// All roots of the polynomial, with roots at the origin deflated exactly.
#[derive(Debug, Clone)]
pub struct RootSet {
    /// Multiplicity of the root at λ = 0 (from structural low coefficients).
    pub zero_multiplicity: usize,
    /// The remaining roots (unclustered).
    pub nonzero: Vec<Complex64>,
    /// Iterations the Aberth loop used.
    pub iterations: usize,
}

/// Finds all roots of `Σ_j coeffs[j] λ^j` (ascending coefficients).
///
/// Low-order coefficients below `ZERO_COEFF_REL · max|coeff|` are deflated
/// as exact roots at the origin before iterating.
pub fn all_roots(coeffs: &[Complex64]) -> Result<RootSet> {
    let scale = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Err(Error::Domain("cannot root the zero polynomial".into()));
    }
    let mut hi = coeffs.len();
    while hi > 0 && coeffs[hi - 1].norm() <= ZERO_COEFF_REL * scale {
        hi -= 1;
    }
    let mut lo = 0usize;
    while lo < hi && coeffs[lo].norm() <= ZERO_COEFF_REL * scale {
        lo += 1;
    }
    let deflated = &coeffs[lo..hi];
    if deflated.len() <= 1 {
        return Ok(RootSet {
            zero_multiplicity: lo,
            nonzero: vec![],
            iterations: 0,
        });
    }
    let (nonzero, iterations) = aberth(deflated)?;
    Ok(RootSet {
        zero_multiplicity: lo,
        nonzero,
        iterations,
    })
}

/// Aberth–Ehrlich simultaneous iteration on a polynomial with nonzero
/// constant and leading coefficients.
fn aberth(coeffs: &[Complex64]) -> Result<(Vec<Complex64>, usize)> {
    let n = coeffs.len() - 1;
    let deriv = derivative(coeffs);
    // Initial guesses: equispaced on the circle of the geometric-mean root
    // modulus |a0/an|^(1/n), an irrational angle offset breaking symmetry.
    let a0 = coeffs[0].norm();
    let an = coeffs[n].norm();
    let radius = (a0 / an).powf(1.0 / n as f64).max(1e-12);
    // Irrational offset (1/π) avoids aligning guesses with root symmetries.
    let offset = std::f64::consts::FRAC_1_PI;
    let mut z: Vec<Complex64> = (0..n)
        .map(|i| {
            Complex64::from_polar(
                radius,
                2.0 * std::f64::consts::PI * (i as f64 + offset) / n as f64,
            )
        })
        .collect();

    for iter in 0..MAX_ITER {
        let mut max_step = 0.0f64;
        let snapshot = z.clone();
        for i in 0..n {
            let zi = snapshot[i];
            let p = eval_poly(coeffs, zi);
            let dp = eval_poly(&deriv, zi);
            let newton = if dp.norm() > 0.0 {
                p / dp
            } else {
                // Derivative vanished exactly at the iterate: nudge off it.
                z[i] = zi + Complex64::new(1e-8 * (1.0 + zi.norm()), 0.0);
                max_step = f64::INFINITY;
                continue;
            };
            let mut repulsion = czero();
            for (j, zj) in snapshot.iter().enumerate() {
                if j != i {
                    let d = zi - zj;
                    if d.norm_sqr() > 0.0 {
                        repulsion += Complex64::new(1.0, 0.0) / d;
                    }
                }
            }
            let denom = Complex64::new(1.0, 0.0) - newton * repulsion;
            let w = if denom.norm() > 0.0 {
                newton / denom
            } else {
                newton
            };
            z[i] = zi - w;
            max_step = max_step.max(w.norm() / (1e-13 * zi.norm() + 1e-300));
        }
        if max_step <= 1.0 {
            return Ok((z, iter + 1));
        }
    }
    let residual = z
        .iter()
        .map(|&zi| eval_poly(coeffs, zi).norm())
        .fold(0.0, f64::max);
    Err(Error::NoConvergence {
        iterations: MAX_ITER,
        residual,
    })
}

/// A cluster of coincident roots: location, confirmed multiplicity, residual.
#[derive(Debug, Clone, Copy)]
pub struct RootCluster {
    /// Cluster location (derivative-polished center).
    pub z: Complex64,
    /// Algebraic multiplicity.
    pub multiplicity: usize,
    /// `|p^{(m-1)}(z)|/(m-1)!` scaled residual at the reported center.
    pub residual: f64,
}

/// Groups raw roots into clusters by pairwise distance, then confirms each
/// cluster's multiplicity with scaled derivative tests; unconfirmed clusters
/// fall back to their individual members as simple roots.
pub fn cluster_roots(
    roots: &[Complex64],
    coeffs: &[Complex64],
    cluster_tol: f64,
    deriv_tol: f64,
) -> Vec<RootCluster> {
    let n = roots.len();
    let scale = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    // Union-find over the pairwise proximity graph.
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, i: usize) -> usize {
        if parent[i] != i {
            let r = find(parent, parent[i]);
            parent[i] = r;
        }
        parent[i]
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let tol = cluster_tol * roots[i].norm().max(1.0);
            if (roots[i] - roots[j]).norm() < tol {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a] = b;
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<Complex64>> = Default::default();
    for (i, &root) in roots.iter().enumerate() {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(root);
    }

    let mut out = vec![];
    for (_, members) in groups {
        let m = members.len();
        let center = members.iter().sum::<Complex64>() / m as f64;
        if m == 1 {
            out.push(RootCluster {
                z: center,
                multiplicity: 1,
                residual: eval_poly(coeffs, center).norm() / scale.max(1e-300),
            });
            continue;
        }
        if confirm_multiplicity(coeffs, center, m, deriv_tol * scale) {
            let z = polish_multiple(coeffs, center, m);
            let dm1 = nth_derivative_over_factorial(coeffs, z, m - 1);
            out.push(RootCluster {
                z,
                multiplicity: m,
                residual: dm1.norm() / scale.max(1e-300),
            });
        } else {
            // Near-multiple but numerically distinct: keep members simple.
            for z in members {
                out.push(RootCluster {
                    z,
                    multiplicity: 1,
                    residual: eval_poly(coeffs, z).norm() / scale.max(1e-300),
                });
            }
        }
    }
    out.sort_by(|a, b| {
        (a.z.re, a.z.im)
            .partial_cmp(&(b.z.re, b.z.im))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    out
}

/// `p^{(j)}(z) / j!` by repeated synthetic differentiation-free evaluation:
/// evaluates the Taylor coefficient via the shifted-polynomial jet.
pub fn nth_derivative_over_factorial(coeffs: &[Complex64], z: Complex64, j: usize) -> Complex64 {
    // Jet arithmetic: carry coefficients of (λ - z)^0..(λ - z)^j of the
    // polynomial re-centered at z, built by Horner with truncated shifts.
    let mut jet = vec![czero(); j + 1];
    for c in coeffs.iter().rev() {
        // jet <- jet * (z + t) + c, truncated at degree j in t
        let mut next = vec![czero(); j + 1];
        for d in 0..=j {
            next[d] = jet[d] * z + if d > 0 { jet[d - 1] } else { czero() };
        }
        next[0] += c;
        jet = next;
    }
    jet[j]
}

fn confirm_multiplicity(coeffs: &[Complex64], center: Complex64, m: usize, tol: f64) -> bool {
    for j in 0..m {
        if nth_derivative_over_factorial(coeffs, center, j).norm() > tol {
            return false;
        }
    }
    nth_derivative_over_factorial(coeffs, center, m).norm() > tol
}

/// Newton-polishes a multiplicity-m root on the (m-1)-th derivative, where
/// it is simple.
fn polish_multiple(coeffs: &[Complex64], z0: Complex64, m: usize) -> Complex64 {
    let mut d = coeffs.to_vec();
    for _ in 0..(m - 1) {
        d = derivative(&d);
    }
    let dd = derivative(&d);
    let mut z = z0;
    for _ in 0..8 {
        let f = eval_poly(&d, z);
        let df = eval_poly(&dd, z);
        if df.norm() == 0.0 {
            break;
        }
        let step = f / df;
        z -= step;
        if step.norm() <= 1e-15 * z.norm().max(1.0) {
            break;
        }
    }
    z
}

/// Characteristic polynomial `det(λ I - A)` by Faddeev–LeVerrier,
/// ascending coefficients, length `n + 1`, leading coefficient 1.
pub fn char_poly(a: &DMatrix<Complex64>) -> Vec<Complex64> {
    let n = a.nrows();
    debug_assert_eq!(n, a.ncols());
    // p(λ) = λ^n + c[n-1] λ^{n-1} + ... + c[0]
    let mut coeffs = vec![czero(); n + 1];
    coeffs[n] = Complex64::new(1.0, 0.0);
    let mut m = DMatrix::<Complex64>::zeros(n, n);
    let mut c_prev = Complex64::new(1.0, 0.0);
    for k in 1..=n {
        // M_k = A M_{k-1} + c_{n-k+1} I
        let mut am = a * &m;
        for i in 0..n {
            am[(i, i)] += c_prev;
        }
        m = am;
        // tr(A M_k) without forming the product
        let mut tr = czero();
        for i in 0..n {
            for j in 0..n {
                tr += a[(i, j)] * m[(j, i)];
            }
        }
        c_prev = -tr / (k as f64);
        coeffs[n - k] = c_prev;
    }
    coeffs
}
