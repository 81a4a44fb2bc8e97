//! Transfer matrices, Laurent products, σ, and the scattering matrix.

use num_complex::Complex64;
use qwres_core::gallery::DoubleBarrier;
use qwres_core::transfer::{
    scattering_matrix, sigma, transfer_at, transfer_at_inv, transfer_poly, LaurentPoly,
    TransferData,
};
use qwres_core::walk::{q_transform, Coin, CoinSequence, IntervalZ};
use std::f64::consts::FRAC_1_SQRT_2;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
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

fn mat_dist(a: [[Complex64; 2]; 2], b: [[Complex64; 2]; 2]) -> f64 {
    (0..2)
        .flat_map(|i| (0..2).map(move |j| (i, j)))
        .map(|(i, j)| (a[i][j] - b[i][j]).norm())
        .fold(0.0, f64::max)
}

fn test_coins() -> Vec<Coin> {
    vec![
        Coin::rotation(0.3).unwrap(),
        Coin::rotation(0.9).unwrap(),
        Coin::new([[c(0.6, 0.0), c(0.0, 0.8)], [c(0.0, 0.8), c(0.6, 0.0)]]).unwrap(),
        {
            // [[a, b], [-conj(b)δ, conj(a)δ]] with |a|² + |b|² = 1, |δ| = 1.
            let a = c(0.48, 0.36);
            let b = c(0.0, 0.8);
            let d = Complex64::from_polar(1.0, 0.5);
            Coin::new([[a, b], [-b.conj() * d, a.conj() * d]]).unwrap()
        },
    ]
}

#[test]
fn transfer_data_is_hyperbolic_normalized() {
    for coin in test_coins() {
        let d = TransferData::from_coin(&coin);
        assert!((d.p.norm_sqr() - d.q.norm_sqr() - 1.0).abs() <= 1e-12);
        // The other gauge branch represents the same coin.
        let f = d.flip_branch();
        assert!((f.p + d.p).norm() <= 1e-15);
        assert!((f.q + d.q).norm() <= 1e-15);
    }
}

#[test]
fn transfer_matrix_times_its_inverse_is_identity() {
    let id = [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(1.0, 0.0)]];
    for coin in test_coins() {
        for lambda in [c(0.8, 0.1), c(0.0, 0.5), c(-1.2, 0.7)] {
            let t = transfer_at(&coin, lambda).unwrap();
            let ti = transfer_at_inv(&coin, lambda).unwrap();
            assert!(mat_dist(matmul(t, ti), id) <= 1e-12);
            // det T = e^{2iθ}, independent of λ.
            let det = t[0][0] * t[1][1] - t[0][1] * t[1][0];
            let d = TransferData::from_coin(&coin);
            assert!((det - Complex64::from_polar(1.0, 2.0 * d.theta)).norm() <= 1e-12);
        }
    }
    // λ = 0 is a pole of the transfer matrix.
    assert!(transfer_at(&Coin::rotation(0.5).unwrap(), c(0.0, 0.0)).is_err());
}

#[test]
fn rotation_transfer_has_the_closed_form() {
    let r = 0.6;
    let s = (1.0f64 - r * r).sqrt();
    let coin = Coin::rotation(r).unwrap();
    for lambda in [c(0.7, 0.2), c(0.0, 0.9)] {
        let t = transfer_at(&coin, lambda).unwrap();
        let want = [
            [lambda / s, c(-r / s, 0.0)],
            [c(-r / s, 0.0), c(1.0, 0.0) / (lambda * s)],
        ];
        assert!(mat_dist(t, want) <= 1e-13);
    }
}

#[test]
fn unit_circle_pseudo_unitarity() {
    // On |λ| = 1 every transfer factor satisfies T*ηT = η with
    // η = diag(1,-1), so the whole product does: |𝕋₁₁|² - |𝕋₂₁|² = 1.
    let coins = qwres_core::gallery::random_walk(7, 6).unwrap();
    let tp = transfer_poly(&coins).unwrap();
    for i in 0..12 {
        let lambda = Complex64::from_polar(1.0, 0.5 + i as f64);
        let m = tp.matrix.eval(lambda);
        let lhs = m[0][0].norm_sqr() - m[1][0].norm_sqr();
        assert!((lhs - 1.0).abs() <= 1e-10, "λ #{i}: {lhs}");
    }
}

#[test]
fn transfer_product_propagates_eigen_solutions() {
    // For an eigen-solution Uφ = λφ, the Q-frame satisfies
    // Qφ(x+1) = T_λ(x) Qφ(x) site by site.
    let db = DoubleBarrier::new(4, FRAC_1_SQRT_2).unwrap();
    let window = IntervalZ::new(-5, 10).unwrap();
    for lambda in db.exact_resonances().into_iter().take(4) {
        let phi = db.closed_form_state(lambda, window);
        for x in (window.lo() + 1)..window.hi() {
            let t = transfer_at(&db.coins.coin(x), lambda).unwrap();
            let qx = q_transform(&phi, x);
            let qn = q_transform(&phi, x + 1);
            let want = [
                t[0][0] * qx[0] + t[0][1] * qx[1],
                t[1][0] * qx[0] + t[1][1] * qx[1],
            ];
            let d = ((qn[0] - want[0]).norm_sqr() + (qn[1] - want[1]).norm_sqr()).sqrt();
            assert!(d <= 1e-12, "λ={lambda}, x={x}: {d:.2e}");
        }
    }
}

#[test]
fn laurent_poly_arithmetic() {
    // (λ + λ⁻¹)² = λ² + 2 + λ⁻².
    let p = LaurentPoly::monomial(1, c(1.0, 0.0)).add(&LaurentPoly::monomial(-1, c(1.0, 0.0)));
    let sq = p.mul(&p);
    assert!((sq.coeff(2) - c(1.0, 0.0)).norm() <= 1e-15);
    assert!((sq.coeff(0) - c(2.0, 0.0)).norm() <= 1e-15);
    assert!((sq.coeff(-2) - c(1.0, 0.0)).norm() <= 1e-15);
    assert!(sq.coeff(1).norm() <= 1e-15);
    let z = c(0.4, 0.3);
    assert!((sq.eval(z) - (z + z.powi(-1)).powi(2)).norm() <= 1e-13);
}

#[test]
fn minimal_double_barrier_sigma_closed_form() {
    // Barriers at 0 and 1: σ(λ) = λ²(λ² + r²)/(1 - r²).
    let r = 0.45;
    let db = DoubleBarrier::new(1, r).unwrap();
    let s = sigma(&db.coins).unwrap();
    assert_eq!(s.k, 2);
    assert_eq!(s.degree(), 4);
    let denom = 1.0 - r * r;
    let want = [
        c(0.0, 0.0),
        c(0.0, 0.0),
        c(r * r / denom, 0.0),
        c(0.0, 0.0),
        c(1.0 / denom, 0.0),
    ];
    for (got, want) in s.coeffs.iter().zip(want) {
        assert!((got - want).norm() <= 1e-13);
    }
    // Nonzero roots at ±ir.
    assert!(s.eval(c(0.0, r)).norm() <= 1e-14);
    assert!(s.eval(c(0.0, -r)).norm() <= 1e-14);
}

#[test]
fn single_coin_sigma_has_no_nonzero_roots() {
    let coins = CoinSequence::new([(0, Coin::rotation(0.8).unwrap())]);
    let s = sigma(&coins).unwrap();
    assert_eq!(s.k, 1);
    assert_eq!(s.degree(), 2);
    // σ = λ²·c with no lower-order terms: only the structural zero.
    assert!(s.coeffs[0].norm() <= 1e-15);
    assert!(s.coeffs[1].norm() <= 1e-15);
    assert!(s.coeffs[2].norm() > 0.0);
}

#[test]
fn sigma_vanishes_to_second_order_at_the_origin() {
    for coins in [
        DoubleBarrier::new(3, 0.6).unwrap().coins,
        qwres_core::gallery::TripleBarrier::new(0.3, 0.5, 0.7)
            .unwrap()
            .coins,
        qwres_core::gallery::random_walk(11, 5).unwrap(),
    ] {
        let s = sigma(&coins).unwrap();
        assert!(s.coeffs[0].norm() <= 1e-12 * s.scale());
        assert!(s.coeffs[1].norm() <= 1e-12 * s.scale());
        assert_eq!(s.degree() as i64, 2 * s.k);
    }
}

#[test]
fn sigma_needs_a_nonempty_support() {
    assert!(sigma(&CoinSequence::free()).is_err());
}

#[test]
fn delta_is_the_transfer_determinant_product() {
    let coins = qwres_core::gallery::random_walk(3, 4).unwrap();
    let tp = transfer_poly(&coins).unwrap();
    let mut want = c(1.0, 0.0);
    for x in tp.chs.sites() {
        let d = TransferData::from_coin(&coins.coin(x));
        want *= Complex64::from_polar(1.0, 2.0 * d.theta);
    }
    assert!((tp.delta - want).norm() <= 1e-12);
    // The Laurent-matrix determinant is the same constant.
    let det = tp.matrix.det();
    assert!((det.coeff(0) - want).norm() <= 1e-10);
    assert!(det.is_constant_within(1e-10));
}

#[test]
fn diagonal_coin_scatters_without_reflection() {
    let alpha = 0.7;
    let coin = Coin::new([
        [Complex64::from_polar(1.0, alpha), c(0.0, 0.0)],
        [c(0.0, 0.0), Complex64::from_polar(1.0, -alpha)],
    ])
    .unwrap();
    let coins = CoinSequence::new([(0, coin)]);
    for i in 0..6 {
        let lambda = Complex64::from_polar(1.0, 1.1 * i as f64);
        let s = scattering_matrix(&coins, lambda).unwrap();
        assert!(s.reduced[0][1].norm() <= 1e-13, "reflection appeared");
        assert!(s.reduced[1][0].norm() <= 1e-13, "reflection appeared");
        assert!(s.unitarity_defect() <= 1e-12);
    }
}

#[test]
fn scattering_is_unitary_on_the_unit_circle() {
    let coins = qwres_core::gallery::random_walk(21, 6).unwrap();
    for i in 0..32 {
        let lambda = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * i as f64 / 32.0);
        let s = scattering_matrix(&coins, lambda).unwrap();
        assert!(s.unitarity_defect() <= 1e-10);
    }
}

#[test]
fn scattering_pole_at_lambda_zero() {
    let coins = CoinSequence::new([(0, Coin::rotation(0.5).unwrap())]);
    assert!(scattering_matrix(&coins, c(0.0, 0.0)).is_err());
}
