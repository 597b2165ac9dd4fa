//! Exponential-family replacement model for sign-quantized snapshots.
//!
//! The sufficient statistics are the pairwise sign products
//! `φ(z) = (z_i z_j)_{i<j}`, ordered lexicographically over the strict upper
//! triangle. Their mean follows from the arcsine law and their covariance
//! from the arcsine law plus fourth-order orthant moments. The approximate
//! LLR is `l̃(z) = bᵀ(φ(z) − μ̃)` with
//! `b ≈ R_φ⁻¹(γ1) μ_φ(γ1) − R_φ⁻¹(γ0) μ_φ(γ0)` and `μ̃ = μ_φ((γ0 + γ1)/2)`.

pub mod cache;
pub mod moments;
pub mod orthant;

use nalgebra::{DMatrix, DVector};

use crate::array_model::{build_covariance, normalize_correlation, BinarySnapshot, CorrelationMatrix, ScenarioConfig};
use crate::error::{Error, Result};

pub use cache::MomentCache;
pub use moments::{r_phi, statistics_moments};
pub use orthant::{arcsine, orthant2, orthant3, orthant4, quad_moment};

/// Bijection between index pairs `(i, j)`, `i < j < M`, and flat statistic
/// indices, in lexicographic order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairIndexMap {
    dims: usize,
    pairs: Vec<(usize, usize)>,
}

impl PairIndexMap {
    pub fn new(dims: usize) -> Result<Self> {
        if dims < 2 {
            return Err(Error::TooFewDimensions(dims));
        }
        let pairs = (0..dims).flat_map(|i| (i + 1..dims).map(move |j| (i, j))).collect();
        Ok(Self { dims, pairs })
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    /// Number of statistics `L = M(M − 1)/2`.
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn pair(&self, k: usize) -> (usize, usize) {
        self.pairs[k]
    }

    /// Flat index of the unordered pair `{i, j}`, `i ≠ j`.
    pub fn index_of(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        debug_assert!(i < j && j < self.dims);
        i * (2 * self.dims - i - 1) / 2 + (j - i - 1)
    }
}

pub fn pair_index_map(dims: usize) -> Result<PairIndexMap> {
    PairIndexMap::new(dims)
}

/// `φ(z)`: pairwise sign products in map order.
pub fn statistics(z: &BinarySnapshot, map: &PairIndexMap) -> Result<DVector<f64>> {
    if z.len() != map.dims() {
        return Err(Error::DimensionMismatch {
            expected: map.dims(),
            found: z.len(),
        });
    }
    let s = z.as_slice();
    Ok(DVector::from_iterator(
        map.len(),
        map.pairs().iter().map(|&(i, j)| f64::from(s[i] * s[j])),
    ))
}

/// Elementwise `(2/π) asin` of a correlation matrix.
pub fn arcsine_correlation(sigma: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = sigma.nrows();
    for i in 0..n {
        for j in 0..sigma.ncols() {
            let v = sigma[(i, j)];
            if !(-1.0..=1.0).contains(&v) {
                return Err(Error::CorrelationOutOfRange {
                    row: i,
                    col: j,
                    value: v,
                });
            }
        }
    }
    Ok(sigma.map(arcsine))
}

/// Normalized snapshot correlation `Σ_y(γ)` for a scenario's geometry.
pub fn snapshot_correlation(gamma: f64, sc: &ScenarioConfig) -> Result<CorrelationMatrix> {
    let a = sc.steering()?;
    normalize_correlation(&build_covariance(&a, gamma))
}

/// Off-diagonal entries of `(2/π) asin Σ` in map order.
pub fn mu_from_correlation(sigma: &CorrelationMatrix, map: &PairIndexMap) -> DVector<f64> {
    DVector::from_iterator(map.len(), map.pairs().iter().map(|&(i, j)| arcsine(sigma.get(i, j))))
}

/// `μ_φ(γ) = E[φ(z); γ]`.
pub fn mu_phi(gamma: f64, sc: &ScenarioConfig) -> Result<DVector<f64>> {
    let map = PairIndexMap::new(sc.dims())?;
    Ok(mu_from_correlation(&snapshot_correlation(gamma, sc)?, &map))
}

/// Mean and covariance of the pairwise sign statistics.
#[derive(Clone, Debug, PartialEq)]
pub struct StatisticsMoments {
    pub mu: DVector<f64>,
    pub cov: DMatrix<f64>,
}

/// Weights of the approximate LLR `l̃(z) = bᵀ(φ(z) − μ̃)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TestStatisticWeights {
    pub b: DVector<f64>,
    pub mu_tilde: DVector<f64>,
    /// `bᵀ μ̃`, the approximate log-normalizer difference.
    pub offset: f64,
}

impl TestStatisticWeights {
    pub fn new(b: DVector<f64>, mu_tilde: DVector<f64>) -> Self {
        let offset = b.dot(&mu_tilde);
        Self { b, mu_tilde, offset }
    }

    pub fn len(&self) -> usize {
        self.b.len()
    }

    pub fn is_empty(&self) -> bool {
        self.b.is_empty()
    }

    /// Approximate LLR of one sign vector given as raw ±1 entries. The pair
    /// order must match the map the weights were built with; no checks.
    #[inline]
    pub fn llr_signs(&self, z: &[i8]) -> f64 {
        let b = self.b.as_slice();
        let mut acc = 0.0;
        let mut k = 0;
        for (i, &zi) in z.iter().enumerate() {
            let rest = &z[i + 1..];
            let row = &b[k..k + rest.len()];
            let dot: f64 = row.iter().zip(rest).map(|(&w, &zj)| w * f64::from(zj)).sum();
            acc += f64::from(zi) * dot;
            k += rest.len();
        }
        acc - self.offset
    }
}

fn solve_spd(c: &DMatrix<f64>, rhs: &DVector<f64>) -> Result<DVector<f64>> {
    if let Some(chol) = nalgebra::Cholesky::new(c.clone()) {
        return Ok(chol.solve(rhs));
    }
    let l = c.nrows();
    let ridge = 1e-10 * c.trace() / l as f64;
    log::warn!("statistics covariance is not numerically positive definite; adding ridge {ridge:e}");
    let regularized = c + DMatrix::identity(l, l) * ridge;
    match nalgebra::Cholesky::new(regularized) {
        Some(chol) => Ok(chol.solve(rhs)),
        None => {
            let eig = c.clone().symmetric_eigenvalues();
            Err(Error::Singular {
                min_eigenvalue: eig.min(),
                max_eigenvalue: eig.max(),
                ridge,
            })
        }
    }
}

/// `b = R_φ⁻¹(γ1) μ_φ(γ1) − R_φ⁻¹(γ0) μ_φ(γ0)`, via two symmetric solves.
pub fn natural_difference(
    m0: &DVector<f64>,
    c0: &DMatrix<f64>,
    m1: &DVector<f64>,
    c1: &DMatrix<f64>,
) -> Result<DVector<f64>> {
    let l = m0.len();
    for (found, what) in [(m1.len(), "m1"), (c0.nrows(), "c0"), (c1.nrows(), "c1")] {
        if found != l {
            log::debug!("natural_difference: {what} has length {found}, expected {l}");
            return Err(Error::DimensionMismatch { expected: l, found });
        }
    }
    Ok(solve_spd(c1, m1)? - solve_spd(c0, m0)?)
}

/// Replacement model for one scenario: statistics moments under both
/// hypotheses and the approximate-LLR weights.
#[derive(Clone, Debug)]
pub struct BinaryModel {
    pub map: PairIndexMap,
    pub h0: StatisticsMoments,
    pub h1: StatisticsMoments,
    pub weights: TestStatisticWeights,
}

impl BinaryModel {
    pub fn build(sc: &ScenarioConfig) -> Result<Self> {
        Self::build_with_cache(sc, None)
    }

    pub fn build_with_cache(sc: &ScenarioConfig, cache: Option<&MomentCache>) -> Result<Self> {
        sc.validate()?;
        let map = PairIndexMap::new(sc.dims())?;
        let moments_at = |gamma: f64| -> Result<StatisticsMoments> {
            match cache {
                Some(c) => c.get_or_compute(sc.sensors, sc.zeta, gamma, || {
                    statistics_moments(&snapshot_correlation(gamma, sc)?, &map)
                }),
                None => statistics_moments(&snapshot_correlation(gamma, sc)?, &map),
            }
        };
        let h0 = moments_at(sc.gamma0)?;
        let h1 = if sc.gamma1 == sc.gamma0 {
            h0.clone()
        } else {
            moments_at(sc.gamma1)?
        };
        let b = natural_difference(&h0.mu, &h0.cov, &h1.mu, &h1.cov)?;
        let mu_tilde = mu_phi(0.5 * (sc.gamma0 + sc.gamma1), sc)?;
        Ok(Self {
            map,
            h0,
            h1,
            weights: TestStatisticWeights::new(b, mu_tilde),
        })
    }

    /// `(E_0[l̃], E_1[l̃])`.
    pub fn expected_llr_pair(&self) -> (f64, f64) {
        let w = &self.weights;
        (
            w.b.dot(&(&self.h0.mu - &w.mu_tilde)),
            w.b.dot(&(&self.h1.mu - &w.mu_tilde)),
        )
    }
}

/// Weights `b` and `μ̃` for a scenario.
pub fn build_weights(sc: &ScenarioConfig) -> Result<TestStatisticWeights> {
    Ok(BinaryModel::build(sc)?.weights)
}

/// `l̃(z) = bᵀ(φ(z) − μ̃)`.
pub fn approx_llr(z: &BinarySnapshot, w: &TestStatisticWeights, map: &PairIndexMap) -> Result<f64> {
    if w.len() != map.len() {
        return Err(Error::DimensionMismatch {
            expected: map.len(),
            found: w.len(),
        });
    }
    let phi = statistics(z, map)?;
    Ok(w.b.dot(&(phi - &w.mu_tilde)))
}

/// `l̃(Z_n) = n bᵀ(φ̂ − μ̃)` with `φ̂` the sample mean of the statistics.
pub fn approx_llr_batch(zs: &[BinarySnapshot], w: &TestStatisticWeights, map: &PairIndexMap) -> Result<f64> {
    if zs.is_empty() {
        return Ok(0.0);
    }
    let mut sum = DVector::zeros(map.len());
    for z in zs {
        sum += statistics(z, map)?;
    }
    let n = zs.len() as f64;
    Ok(n * w.b.dot(&(sum / n - &w.mu_tilde)))
}

/// `E[l̃; γ] = bᵀ(μ_φ(γ) − μ̃)`.
pub fn expected_approx_llr(gamma: f64, w: &TestStatisticWeights, sc: &ScenarioConfig) -> Result<f64> {
    let mu = mu_phi(gamma, sc)?;
    if mu.len() != w.len() {
        return Err(Error::DimensionMismatch {
            expected: w.len(),
            found: mu.len(),
        });
    }
    Ok(w.b.dot(&(mu - &w.mu_tilde)))
}
