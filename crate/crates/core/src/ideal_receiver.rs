//! Exact Gaussian LLR for the unquantized (∞-bit) reference receiver.

use nalgebra::DMatrix;

use crate::array_model::{build_covariance, CovarianceMatrix, ScenarioConfig, Snapshot};
use crate::error::{Error, Result};

/// Two fully specified zero-mean Gaussian hypotheses with cached inverses
/// and log-determinants.
#[derive(Clone, Debug)]
pub struct GaussianPair {
    pub r0: CovarianceMatrix,
    pub r1: CovarianceMatrix,
    pub inv0: DMatrix<f64>,
    pub inv1: DMatrix<f64>,
    pub logdet0: f64,
    pub logdet1: f64,
    /// `inv0 − inv1`, the quadratic-form kernel of the LLR.
    kernel: DMatrix<f64>,
}

fn factor_inverse_logdet(r: &CovarianceMatrix) -> Result<(DMatrix<f64>, f64)> {
    let chol = nalgebra::Cholesky::new(r.matrix().clone())
        .ok_or_else(|| Error::Factorization("hypothesis covariance is not positive definite".into()))?;
    let logdet = 2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    Ok((chol.inverse(), logdet))
}

impl GaussianPair {
    pub fn new(r0: CovarianceMatrix, r1: CovarianceMatrix) -> Result<Self> {
        if r0.dims() != r1.dims() {
            return Err(Error::DimensionMismatch {
                expected: r0.dims(),
                found: r1.dims(),
            });
        }
        let (inv0, logdet0) = factor_inverse_logdet(&r0)?;
        let (inv1, logdet1) = factor_inverse_logdet(&r1)?;
        let mut kernel = &inv0 - &inv1;
        let m = kernel.nrows();
        for i in 0..m {
            for j in 0..i {
                let v = 0.5 * (kernel[(i, j)] + kernel[(j, i)]);
                kernel[(i, j)] = v;
                kernel[(j, i)] = v;
            }
        }
        Ok(Self {
            r0,
            r1,
            inv0,
            inv1,
            logdet0,
            logdet1,
            kernel,
        })
    }

    pub fn for_scenario(sc: &ScenarioConfig) -> Result<Self> {
        let a = sc.steering()?;
        Self::new(build_covariance(&a, sc.gamma0), build_covariance(&a, sc.gamma1))
    }

    pub fn dims(&self) -> usize {
        self.kernel.nrows()
    }

    /// Per-snapshot LLR on a raw slice; no dimension check.
    #[inline]
    pub fn llr_slice(&self, y: &[f64]) -> f64 {
        let m = y.len();
        let k = self.kernel.as_slice();
        let mut quad = 0.0;
        for (i, &yi) in y.iter().enumerate() {
            // Column i above the diagonal equals row i left of it.
            let col = &k[i * m..i * m + i];
            let off: f64 = col.iter().zip(y).map(|(a, b)| a * b).sum();
            quad += yi * (off + 0.5 * k[i * m + i] * yi);
        }
        quad + 0.5 * (self.logdet0 - self.logdet1)
    }
}

/// `ln p(y; γ1) − ln p(y; γ0) = ½ yᵀ(R0⁻¹ − R1⁻¹) y + ½ (ln|R0| − ln|R1|)`.
pub fn exact_llr(y: &Snapshot, pair: &GaussianPair) -> Result<f64> {
    if y.0.len() != pair.dims() {
        return Err(Error::DimensionMismatch {
            expected: pair.dims(),
            found: y.0.len(),
        });
    }
    Ok(pair.llr_slice(y.0.as_slice()))
}

/// Expected exact LLR when snapshots have covariance `r_data`:
/// `½ [ln|R0| − ln|R1| + tr((R0⁻¹ − R1⁻¹) R_data)]`.
pub fn expected_exact_llr(r_data: &CovarianceMatrix, pair: &GaussianPair) -> Result<f64> {
    if r_data.dims() != pair.dims() {
        return Err(Error::DimensionMismatch {
            expected: pair.dims(),
            found: r_data.dims(),
        });
    }
    let trace = pair.kernel.component_mul(r_data.matrix()).sum();
    Ok(0.5 * (pair.logdet0 - pair.logdet1 + trace))
}

/// Expected exact LLR under each hypothesis, `(E_0[l], E_1[l])`.
pub fn expected_exact_llr_pair(pair: &GaussianPair) -> Result<(f64, f64)> {
    Ok((expected_exact_llr(&pair.r0, pair)?, expected_exact_llr(&pair.r1, pair)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array_model::{build_steering, stream_rng, SnapshotSampler};
    use approx::assert_abs_diff_eq;
    use nalgebra::DVector;
    use rand::Rng;

    /// Gaussian log-density evaluated through LU, independent of the
    /// Cholesky path.
    fn log_density_lu(y: &DVector<f64>, r: &DMatrix<f64>) -> f64 {
        let lu = r.clone().lu();
        let x = lu.solve(y).unwrap();
        let m = y.len() as f64;
        -0.5 * y.dot(&x) - 0.5 * (m * (2.0 * std::f64::consts::PI).ln() + lu.determinant().ln())
    }

    fn cov(m: DMatrix<f64>) -> CovarianceMatrix {
        CovarianceMatrix::new(m).unwrap()
    }

    #[test]
    fn identical_models_give_zero() {
        let a = build_steering(3, 0.4).unwrap();
        let r = build_covariance(&a, 0.3);
        let pair = GaussianPair::new(r.clone(), r.clone()).unwrap();
        let mut rng = stream_rng(1, 0);
        for _ in 0..10 {
            let y = Snapshot(DVector::from_fn(6, |_, _| rng.random_range(-3.0..3.0)));
            assert_abs_diff_eq!(exact_llr(&y, &pair).unwrap(), 0.0, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(expected_exact_llr(&r, &pair).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn zero_snapshot_leaves_log_determinant_term() {
        let pair = GaussianPair::new(cov(DMatrix::identity(2, 2)), cov(DMatrix::identity(2, 2) * 2.0)).unwrap();
        let v = exact_llr(&Snapshot(DVector::zeros(2)), &pair).unwrap();
        assert_abs_diff_eq!(v, 0.5 * 0.25f64.ln(), epsilon = 1e-14);
        assert_abs_diff_eq!(v, -std::f64::consts::LN_2, epsilon = 1e-12);
    }

    #[test]
    fn matches_density_ratio() {
        let a = build_steering(2, 0.26).unwrap();
        let r0 = build_covariance(&a, 0.2);
        let r1 = build_covariance(&a, 0.9);
        let pair = GaussianPair::new(r0.clone(), r1.clone()).unwrap();
        let mut rng = stream_rng(5, 0);
        for _ in 0..50 {
            let y = DVector::from_fn(4, |_, _| rng.random_range(-4.0..4.0));
            let oracle = log_density_lu(&y, r1.matrix()) - log_density_lu(&y, r0.matrix());
            assert_abs_diff_eq!(exact_llr(&Snapshot(y), &pair).unwrap(), oracle, epsilon = 1e-11);
        }
    }

    #[test]
    fn cached_inverses_are_inverses() {
        let a = build_steering(6, 0.26).unwrap();
        let pair = GaussianPair::new(build_covariance(&a, 0.1), build_covariance(&a, 2.0)).unwrap();
        let e0 = pair.r0.matrix() * &pair.inv0 - DMatrix::identity(12, 12);
        let e1 = pair.r1.matrix() * &pair.inv1 - DMatrix::identity(12, 12);
        assert!(e0.amax() < 1e-8 && e1.amax() < 1e-8);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let pair = GaussianPair::new(cov(DMatrix::identity(2, 2)), cov(DMatrix::identity(2, 2) * 2.0)).unwrap();
        assert!(matches!(
            exact_llr(&Snapshot(DVector::zeros(3)), &pair),
            Err(Error::DimensionMismatch { expected: 2, found: 3 })
        ));
        assert!(GaussianPair::new(cov(DMatrix::identity(2, 2)), cov(DMatrix::identity(3, 3))).is_err());
    }

    #[test]
    fn expectations_are_signed_kl_divergences() {
        for s in [1usize, 2, 4, 8] {
            let sc = ScenarioConfig::gnss(s, 1e-3);
            let pair = GaussianPair::for_scenario(&sc).unwrap();
            let (e0, e1) = expected_exact_llr_pair(&pair).unwrap();
            assert!(e0 < 0.0 && e1 > 0.0, "S={s}: {e0} {e1}");
        }
    }

    #[test]
    fn expectation_matches_monte_carlo() {
        let sc = ScenarioConfig::gnss(4, 1e-3);
        let pair = GaussianPair::for_scenario(&sc).unwrap();
        for r_data in [&pair.r0, &pair.r1] {
            let sampler = SnapshotSampler::for_covariance(r_data).unwrap();
            let mut rng = stream_rng(99, 0);
            let (mut white, mut y) = (vec![0.0; 8], vec![0.0; 8]);
            let n = 1_000_000;
            let (mut s, mut s2) = (0.0, 0.0);
            for _ in 0..n {
                sampler.sample_into(&mut rng, &mut white, &mut y);
                let l = pair.llr_slice(&y);
                s += l;
                s2 += l * l;
            }
            let mean = s / n as f64;
            let se = ((s2 / n as f64 - mean * mean) / n as f64).sqrt();
            let expected = expected_exact_llr(r_data, &pair).unwrap();
            assert!((mean - expected).abs() < 3.0 * se, "{mean} vs {expected} (se {se})");
        }
    }
}
