//! Uniform linear array signal model.
//!
//! A narrow-band Gaussian source `x ~ N(0, I₂)` arrives at a half-wavelength
//! ULA with `S` sensors. Every sensor delivers an in-phase and a quadrature
//! sample, so one array snapshot is `y = γ A x + η ∈ ℝ^M` with `M = 2S` and
//! unit-power white noise `η`. The snapshot is zero-mean Gaussian with
//! covariance `R_y(γ) = γ² A Aᵀ + I`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Converts an SNR in dB to a linear amplitude, `γ = 10^(dB/20)`, so that
/// `γ²` is the per-element signal power against unit noise.
pub fn db_to_amplitude(db: f64) -> f64 {
    10f64.powf(db / 20.0)
}

pub fn amplitude_to_db(gamma: f64) -> f64 {
    20.0 * gamma.log10()
}

/// Complete description of one detection scenario.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    /// Number of antennas `S`.
    pub sensors: usize,
    /// Arrival angle in radians.
    pub zeta: f64,
    /// Source amplitude under H0 (linear).
    pub gamma0: f64,
    /// Source amplitude under H1 (linear).
    pub gamma1: f64,
    /// Bound on P(decide H0 | H1).
    pub alpha1: f64,
    /// Bound on P(decide H1 | H0).
    pub alpha2: f64,
    /// Two-sided bandwidth in Hz; the sampling rate equals the bandwidth.
    pub bandwidth_hz: f64,
    pub seed: u64,
    /// Hard cap on the test length. `None` selects 100 × the analytic ASN.
    pub max_steps: Option<u64>,
}

impl ScenarioConfig {
    pub const DEFAULT_ZETA_DEG: f64 = 15.0;
    pub const DEFAULT_SNR0_DB: f64 = -24.0;
    pub const DEFAULT_SNR1_DB: f64 = -18.0;
    pub const DEFAULT_BANDWIDTH_HZ: f64 = 2.046e6;

    /// GNSS monitoring scenario: ζ = 15°, γ0 = −24 dB, γ1 = −18 dB,
    /// B = 2.046 MHz, α1 = α2 = `alpha`.
    pub fn gnss(sensors: usize, alpha: f64) -> Self {
        Self {
            sensors,
            zeta: Self::DEFAULT_ZETA_DEG.to_radians(),
            gamma0: db_to_amplitude(Self::DEFAULT_SNR0_DB),
            gamma1: db_to_amplitude(Self::DEFAULT_SNR1_DB),
            alpha1: alpha,
            alpha2: alpha,
            bandwidth_hz: Self::DEFAULT_BANDWIDTH_HZ,
            seed: 0,
            max_steps: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sensors == 0 {
            return Err(Error::ZeroSensors);
        }
        if !self.zeta.is_finite() {
            return Err(Error::InvalidScenario(format!(
                "arrival angle {} is not finite",
                self.zeta
            )));
        }
        if !(self.gamma0 >= 0.0 && self.gamma0.is_finite() && self.gamma1.is_finite()) {
            return Err(Error::InvalidScenario(format!(
                "amplitudes must be finite and non-negative (gamma0 = {}, gamma1 = {})",
                self.gamma0, self.gamma1
            )));
        }
        if self.gamma1 < self.gamma0 {
            return Err(Error::InvalidScenario(format!(
                "gamma1 ({}) must not be smaller than gamma0 ({})",
                self.gamma1, self.gamma0
            )));
        }
        check_alpha(self.alpha1, self.alpha2)?;
        if !(self.bandwidth_hz > 0.0 && self.bandwidth_hz.is_finite()) {
            return Err(Error::NonPositive {
                what: "bandwidth",
                value: self.bandwidth_hz,
            });
        }
        if self.max_steps == Some(0) {
            return Err(Error::InvalidScenario("max_steps must be at least 1".into()));
        }
        Ok(())
    }

    /// Snapshot dimension `M = 2S`.
    pub fn dims(&self) -> usize {
        2 * self.sensors
    }

    /// Sampling period `T_S = 1/B` in seconds.
    pub fn sample_period(&self) -> f64 {
        1.0 / self.bandwidth_hz
    }

    pub fn steering(&self) -> Result<SteeringMatrix> {
        build_steering(self.sensors, self.zeta)
    }
}

pub(crate) fn check_alpha(alpha1: f64, alpha2: f64) -> Result<()> {
    let ok = alpha1 > 0.0 && alpha1 < 1.0 && alpha2 > 0.0 && alpha2 < 1.0 && alpha1 + alpha2 < 1.0;
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidAlpha { alpha1, alpha2 })
    }
}

/// `M × 2` steering matrix stacked as `[A_I; A_Q]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SteeringMatrix(DMatrix<f64>);

impl SteeringMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn sensors(&self) -> usize {
        self.0.nrows() / 2
    }

    pub fn dims(&self) -> usize {
        self.0.nrows()
    }
}

/// Builds the ULA steering matrix for `sensors` antennas and arrival angle
/// `zeta` (radians). Row `k` of `A_I` is `[cos(kπ sin ζ), sin(kπ sin ζ)]`,
/// row `k` of `A_Q` is `[−sin(kπ sin ζ), cos(kπ sin ζ)]`.
pub fn build_steering(sensors: usize, zeta: f64) -> Result<SteeringMatrix> {
    if sensors == 0 {
        return Err(Error::ZeroSensors);
    }
    let spatial = std::f64::consts::PI * zeta.sin();
    let mut a = DMatrix::zeros(2 * sensors, 2);
    for k in 0..sensors {
        let (s, c) = (k as f64 * spatial).sin_cos();
        a[(k, 0)] = c;
        a[(k, 1)] = s;
        a[(sensors + k, 0)] = -s;
        a[(sensors + k, 1)] = c;
    }
    Ok(SteeringMatrix(a))
}

/// Symmetric positive definite snapshot covariance.
#[derive(Clone, Debug, PartialEq)]
pub struct CovarianceMatrix(DMatrix<f64>);

impl CovarianceMatrix {
    /// Wraps a matrix after checking that it is square and symmetric.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        check_symmetric(&m)?;
        Ok(Self(m))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn dims(&self) -> usize {
        self.0.nrows()
    }

    /// Lower-triangular Cholesky factor `L` with `L Lᵀ = R`.
    pub fn cholesky_factor(&self) -> Result<DMatrix<f64>> {
        nalgebra::Cholesky::new(self.0.clone())
            .map(|c| c.l())
            .ok_or_else(|| Error::Factorization("covariance is not positive definite".into()))
    }
}

/// `R_y(γ) = γ² A Aᵀ + I`.
pub fn build_covariance(a: &SteeringMatrix, gamma: f64) -> CovarianceMatrix {
    let m = a.dims();
    let mut r = a.matrix() * a.matrix().transpose() * (gamma * gamma);
    for i in 0..m {
        r[(i, i)] += 1.0;
    }
    // A Aᵀ is symmetric analytically; make it bitwise so.
    for i in 0..m {
        for j in 0..i {
            let v = 0.5 * (r[(i, j)] + r[(j, i)]);
            r[(i, j)] = v;
            r[(j, i)] = v;
        }
    }
    CovarianceMatrix(r)
}

/// Symmetric matrix with unit diagonal and entries in `[−1, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationMatrix(DMatrix<f64>);

impl CorrelationMatrix {
    /// Validates unit diagonal, symmetry and entry range. Positive
    /// semidefiniteness is checked separately where it matters.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        check_symmetric(&m)?;
        let n = m.nrows();
        for i in 0..n {
            if (m[(i, i)] - 1.0).abs() > 1e-12 {
                return Err(Error::NotCorrelation(format!(
                    "diagonal entry {i} is {} instead of 1",
                    m[(i, i)]
                )));
            }
            for j in 0..n {
                let v = m[(i, j)];
                if !(-1.0..=1.0).contains(&v) {
                    return Err(Error::CorrelationOutOfRange {
                        row: i,
                        col: j,
                        value: v,
                    });
                }
            }
        }
        Ok(Self(m))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn dims(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    /// Principal sub-matrix on the given indices.
    pub fn submatrix(&self, idx: &[usize]) -> CorrelationMatrix {
        let n = idx.len();
        CorrelationMatrix(DMatrix::from_fn(n, n, |r, c| self.0[(idx[r], idx[c])]))
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }
}

/// `diag(R)^{−1/2} R diag(R)^{−1/2}`.
pub fn normalize_correlation(r: &CovarianceMatrix) -> Result<CorrelationMatrix> {
    let m = r.matrix();
    let n = m.nrows();
    let mut scale = Vec::with_capacity(n);
    for i in 0..n {
        let d = m[(i, i)];
        if !(d > 0.0) {
            return Err(Error::NonPositiveDiagonal { index: i, value: d });
        }
        scale.push(d.sqrt().recip());
    }
    let mut out = DMatrix::from_fn(n, n, |i, j| (m[(i, j)] * scale[i] * scale[j]).clamp(-1.0, 1.0));
    out.fill_diagonal(1.0);
    Ok(CorrelationMatrix(out))
}

fn check_symmetric(m: &DMatrix<f64>) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            found: m.ncols(),
        });
    }
    let n = m.nrows();
    for i in 0..n {
        for j in 0..i {
            let (a, b) = (m[(i, j)], m[(j, i)]);
            if (a - b).abs() > 1e-12 * (1.0 + a.abs().max(b.abs())) {
                return Err(Error::NotCorrelation(format!("matrix is not symmetric at ({i}, {j})")));
            }
        }
    }
    Ok(())
}

/// Analog array snapshot `y`.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot(pub DVector<f64>);

/// Sign-quantized snapshot `z ∈ {−1, +1}^M`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BinarySnapshot(Vec<i8>);

impl BinarySnapshot {
    /// Builds a binary snapshot from explicit signs; any entry other than ±1
    /// is rejected.
    pub fn from_signs(signs: Vec<i8>) -> Result<Self> {
        if let Some(bad) = signs.iter().find(|&&s| s != 1 && s != -1) {
            return Err(Error::InvalidScenario(format!("binary entry {bad} is not ±1")));
        }
        Ok(Self(signs))
    }

    pub fn as_slice(&self) -> &[i8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn negated(&self) -> Self {
        Self(self.0.iter().map(|&s| -s).collect())
    }
}

/// Sign quantizer: `+1` for `y ≥ 0`, `−1` otherwise.
#[inline]
pub fn sign_bit(y: f64) -> i8 {
    if y >= 0.0 {
        1
    } else {
        -1
    }
}

pub fn quantize_sign(y: &Snapshot) -> BinarySnapshot {
    BinarySnapshot(y.0.iter().map(|&v| sign_bit(v)).collect())
}

/// Independent RNG stream for Monte-Carlo run `run` under master seed `seed`.
pub fn stream_rng(seed: u64, run: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.wrapping_add(run))
}

/// Draws zero-mean Gaussian snapshots `y = L w` with `w ~ N(0, I)`.
#[derive(Clone, Debug)]
pub struct SnapshotSampler {
    factor: DMatrix<f64>,
    /// Lower triangle of `factor`, packed row by row.
    packed: Vec<f64>,
}

impl SnapshotSampler {
    /// `factor` must be lower triangular with `L Lᵀ` equal to the target
    /// covariance.
    pub fn new(factor: DMatrix<f64>) -> Result<Self> {
        if factor.nrows() != factor.ncols() {
            return Err(Error::DimensionMismatch {
                expected: factor.nrows(),
                found: factor.ncols(),
            });
        }
        let m = factor.nrows();
        let packed = (0..m)
            .flat_map(|i| (0..=i).map(move |j| (i, j)))
            .map(|(i, j)| factor[(i, j)])
            .collect();
        Ok(Self { factor, packed })
    }

    pub fn for_covariance(r: &CovarianceMatrix) -> Result<Self> {
        Self::new(r.cholesky_factor()?)
    }

    pub fn dims(&self) -> usize {
        self.factor.nrows()
    }

    /// Writes one snapshot into `out`, using `white` as scratch for the
    /// standard normal draws. Both slices must have length `dims()`.
    #[inline]
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, white: &mut [f64], out: &mut [f64]) {
        for w in white.iter_mut() {
            *w = rng.sample(StandardNormal);
        }
        let mut start = 0;
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.packed[start..start + i + 1];
            *o = row.iter().zip(white.iter()).map(|(l, w)| l * w).sum();
            start += i + 1;
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Snapshot {
        let m = self.dims();
        let mut white = vec![0.0; m];
        let mut out = vec![0.0; m];
        self.sample_into(rng, &mut white, &mut out);
        Snapshot(DVector::from_vec(out))
    }
}

pub fn sample_snapshot<R: Rng + ?Sized>(sampler: &SnapshotSampler, rng: &mut R) -> Snapshot {
    sampler.sample(rng)
}
