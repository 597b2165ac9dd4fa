//! Wald's sequential probability ratio test.
//!
//! The accumulated LLR is compared against `ln(α2/(1−α1))` (decide H0) and
//! `ln((1−α2)/α1)` (decide H1) after every sample. The average sample
//! numbers use Wald's approximation, which ignores threshold overshoot.

use serde::Serialize;

use crate::array_model::check_alpha;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SprtThresholds {
    pub lower: f64,
    pub upper: f64,
}

pub fn thresholds(alpha1: f64, alpha2: f64) -> Result<SprtThresholds> {
    check_alpha(alpha1, alpha2)?;
    Ok(SprtThresholds {
        lower: (alpha2 / (1.0 - alpha1)).ln(),
        upper: ((1.0 - alpha2) / alpha1).ln(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Decision {
    H0,
    H1,
    Truncated,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SprtOutcome {
    pub decision: Decision,
    /// Number of samples consumed when the test stopped.
    pub stop_step: u64,
    pub final_llr: f64,
}

/// Running state of one test.
#[derive(Clone, Copy, Debug)]
pub struct SprtState {
    th: SprtThresholds,
    llr: f64,
    steps: u64,
}

impl SprtState {
    pub fn new(th: SprtThresholds) -> Self {
        Self { th, llr: 0.0, steps: 0 }
    }

    pub fn llr(&self) -> f64 {
        self.llr
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Adds one LLR increment and reports a decision if a boundary is hit.
    #[inline]
    pub fn push(&mut self, increment: f64) -> Option<Decision> {
        self.llr += increment;
        self.steps += 1;
        if self.llr >= self.th.upper {
            Some(Decision::H1)
        } else if self.llr <= self.th.lower {
            Some(Decision::H0)
        } else {
            None
        }
    }

    pub fn outcome(&self, decision: Decision) -> SprtOutcome {
        SprtOutcome {
            decision,
            stop_step: self.steps,
            final_llr: self.llr,
        }
    }
}

/// Runs the test over a stream of per-sample LLR increments. Stops at the
/// first boundary crossing; reports `Truncated` after `max_steps` samples or
/// when the stream ends undecided.
pub fn run_sprt<I>(increments: I, th: SprtThresholds, max_steps: u64) -> SprtOutcome
where
    I: IntoIterator<Item = f64>,
{
    let mut state = SprtState::new(th);
    for inc in increments.into_iter().take(max_steps as usize) {
        if let Some(d) = state.push(inc) {
            return state.outcome(d);
        }
    }
    state.outcome(Decision::Truncated)
}

/// Wald's average sample numbers `(ASN(γ0), ASN(γ1))` given the expected
/// per-sample LLR under each hypothesis.
pub fn asn(mean_increment_h0: f64, mean_increment_h1: f64, alpha1: f64, alpha2: f64) -> Result<(f64, f64)> {
    check_alpha(alpha1, alpha2)?;
    if !(mean_increment_h0 < 0.0 && mean_increment_h1 > 0.0) {
        return Err(Error::WrongSignedIncrement {
            h0: mean_increment_h0,
            h1: mean_increment_h1,
        });
    }
    let (num0, num1) = wald_numerators(alpha1, alpha2);
    Ok((num0 / mean_increment_h0, num1 / mean_increment_h1))
}

/// Numerators of the two ASN ratios; the H0 numerator is negative.
pub fn wald_numerators(alpha1: f64, alpha2: f64) -> (f64, f64) {
    let lower = (alpha2 / (1.0 - alpha1)).ln();
    let upper = ((1.0 - alpha2) / alpha1).ln();
    (
        (1.0 - alpha1) * lower + alpha1 * upper,
        alpha2 * lower + (1.0 - alpha2) * upper,
    )
}

/// `χ = ASN_ideal / ASN_1bit`. Not clamped to 1.
pub fn efficiency(asn_ideal: f64, asn_onebit: f64) -> Result<f64> {
    if !(asn_ideal > 0.0) {
        return Err(Error::NonPositive {
            what: "ideal ASN",
            value: asn_ideal,
        });
    }
    if !(asn_onebit > 0.0) {
        return Err(Error::NonPositive {
            what: "1-bit ASN",
            value: asn_onebit,
        });
    }
    Ok(asn_ideal / asn_onebit)
}

/// Average detection latency in seconds, `T_S · ASN` with `T_S = 1/B`.
pub fn latency(asn: f64, bandwidth_hz: f64) -> f64 {
    asn / bandwidth_hz
}

/// Analytic latency and efficiency of the 1-bit test relative to the ideal
/// receiver with the same array.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AsnReport {
    pub asn0: f64,
    pub asn1: f64,
    /// Seconds.
    pub latency0: f64,
    pub latency1: f64,
    pub efficiency0: f64,
    pub efficiency1: f64,
}

impl AsnReport {
    /// `onebit` and `ideal` are `(E_0[l], E_1[l])` for the respective LLRs.
    pub fn new(onebit: (f64, f64), ideal: (f64, f64), alpha1: f64, alpha2: f64, bandwidth_hz: f64) -> Result<Self> {
        let (asn0, asn1) = asn(onebit.0, onebit.1, alpha1, alpha2)?;
        let (ideal0, ideal1) = asn(ideal.0, ideal.1, alpha1, alpha2)?;
        Ok(Self {
            asn0,
            asn1,
            latency0: latency(asn0, bandwidth_hz),
            latency1: latency(asn1, bandwidth_hz),
            efficiency0: efficiency(ideal0, asn0)?,
            efficiency1: efficiency(ideal1, asn1)?,
        })
    }
}
