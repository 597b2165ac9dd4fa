//! Independent numerical oracles for the moment machinery.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use nalgebra::{DMatrix, Matrix2, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use onebit_sprt::array_model::{CorrelationMatrix, ScenarioConfig};
use onebit_sprt::binary_model::{mu_phi, natural_difference, orthant4, quad_moment, r_phi, BinaryModel};
use onebit_sprt::quadrature::integrate;

fn phi(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// Bivariate normal CDF `P(X ≤ h, Y ≤ k)` via the integral of the density
/// at `(h, k)` over the correlation parameter.
fn bvn_cdf(h: f64, k: f64, rho: f64) -> f64 {
    let f = |r: f64| {
        let q = 1.0 - r * r;
        (-(h * h - 2.0 * r * h * k + k * k) / (2.0 * q)).exp() / q.sqrt()
    };
    phi(h) * phi(k) + integrate(f, 0.0, rho, 1e-14).value / (2.0 * PI)
}

/// Orthant probability by conditioning `(x1, x2)` on `(x3, x4)` and
/// integrating over the positive quadrant of the conditioning pair,
/// truncated at 8 standard deviations.
fn orthant4_by_conditioning(c: &DMatrix<f64>) -> f64 {
    let a = Matrix2::new(c[(0, 0)], c[(0, 1)], c[(1, 0)], c[(1, 1)]);
    let b = Matrix2::new(c[(0, 2)], c[(0, 3)], c[(1, 2)], c[(1, 3)]);
    let d = Matrix2::new(c[(2, 2)], c[(2, 3)], c[(3, 2)], c[(3, 3)]);
    let d_inv = d.try_inverse().unwrap();
    let gain = b * d_inv;
    let s = a - gain * b.transpose();
    let (s1, s2) = (s[(0, 0)].sqrt(), s[(1, 1)].sqrt());
    let rc = s[(0, 1)] / (s1 * s2);
    let r34 = c[(2, 3)];
    let norm = 1.0 / (2.0 * PI * (1.0 - r34 * r34).sqrt());
    let inner = |x3: f64| {
        let g = |x4: f64| {
            let density = norm * (-(x3 * x3 - 2.0 * r34 * x3 * x4 + x4 * x4) / (2.0 * (1.0 - r34 * r34))).exp();
            let m = gain * Vector2::new(x3, x4);
            density * bvn_cdf(m[0] / s1, m[1] / s2, rc)
        };
        integrate(g, 0.0, 8.0, 1e-12).value
    };
    integrate(inner, 0.0, 8.0, 1e-11).value
}

fn random_correlation(rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let w = DMatrix::<f64>::from_fn(4, 6, |_, _| rng.sample(StandardNormal));
    let c = &w * w.transpose();
    DMatrix::from_fn(4, 4, |i, j| {
        if i == j {
            1.0
        } else {
            c[(i, j)] / (c[(i, i)] * c[(j, j)]).sqrt()
        }
    })
}

#[test]
fn orthant4_matches_conditioning_quadrature() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut mats: Vec<DMatrix<f64>> = (0..8).map(|_| random_correlation(&mut rng)).collect();
    // Equicorrelated and one strongly correlated case.
    mats.push(DMatrix::from_fn(4, 4, |i, j| if i == j { 1.0 } else { 0.5 }));
    mats.push(DMatrix::from_row_slice(
        4,
        4,
        &[
            1.0, 0.9, 0.8, -0.3, 0.9, 1.0, 0.75, -0.25, 0.8, 0.75, 1.0, -0.1, -0.3, -0.25, -0.1, 1.0,
        ],
    ));
    for c in mats {
        let oracle = orthant4_by_conditioning(&c);
        let got = orthant4(&CorrelationMatrix::new(c.clone()).unwrap()).unwrap();
        assert!((got - oracle).abs() < 1e-10, "{got} vs {oracle} for {c}");
    }
}

#[test]
fn equicorrelated_closed_forms() {
    // ρ = 1/2: P = 1/5 and each pair contributes (2/π) asin ½ = 1/3.
    let c = DMatrix::from_fn(4, 4, |i, j| if i == j { 1.0 } else { 0.5 });
    let p = orthant4(&CorrelationMatrix::new(c.clone()).unwrap()).unwrap();
    assert!((p - 0.2).abs() < 1e-12);
    let e4 = quad_moment(&CorrelationMatrix::new(c).unwrap()).unwrap();
    assert!((e4 - (16.0 * 0.2 - 1.0 - 6.0 / 3.0)).abs() < 1e-11);
}

#[test]
fn natural_difference_matches_lu_solve() {
    let sc = ScenarioConfig::gnss(2, 1e-3);
    let (m0, m1) = (mu_phi(sc.gamma0, &sc).unwrap(), mu_phi(sc.gamma1, &sc).unwrap());
    let (c0, c1) = (r_phi(sc.gamma0, &sc).unwrap(), r_phi(sc.gamma1, &sc).unwrap());
    let b = natural_difference(&m0, &c0, &m1, &c1).unwrap();
    let lu = c1.clone().lu().solve(&m1).unwrap() - c0.clone().lu().solve(&m0).unwrap();
    assert!((&b - &lu).amax() < 1e-8, "{b} vs {lu}");
    let model = BinaryModel::build(&sc).unwrap();
    assert!((&model.weights.b - &lu).amax() < 1e-8);
}
