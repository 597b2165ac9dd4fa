//! Covariance of the pairwise sign statistics.
//!
//! For pairs `p = (a, b)` and `q = (c, d)` the entry is
//! `E[z_a z_b z_c z_d] − μ_p μ_q`. Because `z_i² = 1`, pairs sharing an
//! index reduce to a second-order moment of the two remaining indices and
//! identical pairs give `1 − μ_p²`. Only pairs with four distinct indices
//! need the fourth-order orthant moment, and each 4-subset `{a<b<c<d}` feeds
//! exactly three matrix entries (its three pair partitions).

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::orthant::{arcsine, quad_moment_unchecked};
use super::{mu_from_correlation, snapshot_correlation, PairIndexMap, StatisticsMoments};
use crate::array_model::{CorrelationMatrix, ScenarioConfig};
use crate::error::{Error, Result};

/// Mean and covariance of `φ(z)` for `z = sign(y)`, `y ~ N(0, Σ)`.
pub fn statistics_moments(sigma: &CorrelationMatrix, map: &PairIndexMap) -> Result<StatisticsMoments> {
    let m = map.dims();
    if sigma.dims() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: sigma.dims(),
        });
    }
    let mu = mu_from_correlation(sigma, map);
    let second = DMatrix::from_fn(m, m, |i, j| if i == j { 1.0 } else { arcsine(sigma.get(i, j)) });
    let l = map.len();
    let mut cov = DMatrix::zeros(l, l);

    // Pairs sharing at least one index.
    for p in 0..l {
        let (a, b) = map.pair(p);
        cov[(p, p)] = 1.0 - mu[p] * mu[p];
        for q in p + 1..l {
            let (c, d) = map.pair(q);
            let shared = [(a, c, b, d), (a, d, b, c), (b, c, a, d), (b, d, a, c)]
                .into_iter()
                .find(|&(x, y, _, _)| x == y);
            if let Some((_, _, u, v)) = shared {
                let e = second[(u, v)];
                cov[(p, q)] = e - mu[p] * mu[q];
                cov[(q, p)] = cov[(p, q)];
            }
        }
    }

    // Four distinct indices: one quadrature per 4-subset, evaluated in
    // parallel and scattered by this thread.
    let quads: Vec<[usize; 4]> = (0..m)
        .flat_map(|a| (a + 1..m).flat_map(move |b| (b + 1..m).flat_map(move |c| (c + 1..m).map(move |d| [a, b, c, d]))))
        .collect();
    let fourth: Vec<f64> = quads
        .par_iter()
        .map(|idx| {
            let mut c4 = [[0.0; 4]; 4];
            for r in 0..4 {
                for s in 0..4 {
                    c4[r][s] = if r == s { 1.0 } else { sigma.get(idx[r], idx[s]) };
                }
            }
            quad_moment_unchecked(&c4)
        })
        .collect();
    for (&[a, b, c, d], &e4) in quads.iter().zip(&fourth) {
        for ((w, x), (y, z)) in [((a, b), (c, d)), ((a, c), (b, d)), ((a, d), (b, c))] {
            let p = map.index_of(w, x);
            let q = map.index_of(y, z);
            let v = e4 - mu[p] * mu[q];
            cov[(p, q)] = v;
            cov[(q, p)] = v;
        }
    }
    Ok(StatisticsMoments { mu, cov })
}

/// `R_φ(γ) = E[φφᵀ; γ] − μ_φ μ_φᵀ`.
pub fn r_phi(gamma: f64, sc: &ScenarioConfig) -> Result<DMatrix<f64>> {
    let map = PairIndexMap::new(sc.dims())?;
    Ok(statistics_moments(&snapshot_correlation(gamma, sc)?, &map)?.cov)
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    m.clone().symmetric_eigenvalues().min()
}
