//! Seeded Monte-Carlo experiments for the sequential test.
//!
//! Each run draws analog snapshots under the true amplitude. The 1-bit
//! receiver quantizes them and scores the replacement-model LLR; the ideal
//! receiver scores the exact Gaussian LLR. Run `r` uses the RNG stream
//! `seed + r`, so results do not depend on scheduling.
//!
//! Recorded trajectories hold the final LLR value after a run stops, so the
//! mean trajectory flattens once runs start to terminate.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::array_model::{build_covariance, sign_bit, stream_rng, ScenarioConfig, SnapshotSampler};
use crate::binary_model::{BinaryModel, MomentCache, TestStatisticWeights};
use crate::error::{Error, Result};
use crate::ideal_receiver::{expected_exact_llr_pair, GaussianPair};
use crate::sprt::{asn, thresholds, Decision, SprtState, SprtThresholds};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Truth {
    H0,
    H1,
}

impl std::fmt::Display for Truth {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Truth::H0 => "H0",
            Truth::H1 => "H1",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Receiver {
    OneBit,
    Ideal,
}

impl std::fmt::Display for Receiver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Receiver::OneBit => "1bit",
            Receiver::Ideal => "ideal",
        })
    }
}

#[derive(Clone, Debug)]
pub struct ExperimentSpec {
    pub scenario: ScenarioConfig,
    pub runs: u64,
    pub truth: Truth,
    pub receiver: Receiver,
    /// Number of steps of the mean trajectory to record; `None` records none.
    pub horizon: Option<u64>,
}

pub const DEFAULT_RUNS: u64 = 200;

/// Multiplier on the analytic ASN used when `max_steps` is not given.
pub const DEFAULT_MAX_STEPS_FACTOR: f64 = 100.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MeanWithError {
    pub mean: f64,
    pub stderr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub sensors: usize,
    pub receiver: Receiver,
    pub truth: Truth,
    pub runs: u64,
    pub decided_h0: u64,
    pub decided_h1: u64,
    pub truncated: u64,
    pub max_steps: u64,
    pub thresholds: SprtThresholds,
    /// Mean stopping time over runs that reached a decision.
    pub empirical_asn: MeanWithError,
    /// Wrong decisions over decided runs.
    pub error_rate: f64,
    /// 95% Wilson score interval for `error_rate`.
    pub error_ci: (f64, f64),
    pub truncation_rate: f64,
    /// Mean accumulated LLR after steps `1..=horizon`.
    pub trajectory: Vec<f64>,
    /// Expected per-sample LLR under the true hypothesis.
    pub analytic_slope: f64,
    /// Wald's ASN prediction under the true hypothesis.
    pub analytic_asn: f64,
    /// Pooled LLR per active sample, `Σ L_r / Σ n_r` over the trajectory
    /// window (or the full runs when no trajectory is recorded). By Wald's
    /// identity its expectation is the per-sample drift even though runs
    /// stop at random times.
    pub drift: MeanWithError,
    pub sample_period: f64,
}

impl ExperimentReport {
    pub fn wrong_decisions(&self) -> u64 {
        match self.truth {
            Truth::H0 => self.decided_h1,
            Truth::H1 => self.decided_h0,
        }
    }
}

enum Scorer {
    OneBit(TestStatisticWeights),
    Ideal(GaussianPair),
}

/// Everything a run needs, built once per experiment.
struct Pipeline {
    sampler: SnapshotSampler,
    scorer: Scorer,
    th: SprtThresholds,
    max_steps: u64,
    horizon: u64,
    analytic_slope: f64,
    analytic_asn: f64,
}

struct RunResult {
    decision: Decision,
    stop_step: u64,
    final_llr: f64,
    /// LLR at `min(stop, horizon)` and the matching step count.
    window_llr: f64,
    window_steps: u64,
    path: Vec<f64>,
}

impl Pipeline {
    fn build(spec: &ExperimentSpec, cache: Option<&MomentCache>) -> Result<Self> {
        let sc = &spec.scenario;
        sc.validate()?;
        if spec.runs == 0 {
            return Err(Error::InvalidScenario("at least one run is required".into()));
        }
        let (increments, scorer) = match spec.receiver {
            Receiver::OneBit => {
                let model = BinaryModel::build_with_cache(sc, cache)?;
                (model.expected_llr_pair(), Scorer::OneBit(model.weights))
            }
            Receiver::Ideal => {
                let pair = GaussianPair::for_scenario(sc)?;
                (expected_exact_llr_pair(&pair)?, Scorer::Ideal(pair))
            }
        };
        let analytic_slope = match spec.truth {
            Truth::H0 => increments.0,
            Truth::H1 => increments.1,
        };
        let analytic_asn = match asn(increments.0, increments.1, sc.alpha1, sc.alpha2) {
            Ok((a0, a1)) => match spec.truth {
                Truth::H0 => a0,
                Truth::H1 => a1,
            },
            Err(_) => f64::NAN,
        };
        let max_steps = match sc.max_steps {
            Some(n) => n,
            None if analytic_asn.is_finite() => (DEFAULT_MAX_STEPS_FACTOR * analytic_asn).ceil() as u64,
            None => {
                return Err(Error::InvalidScenario(
                    "max_steps must be given when the analytic ASN is undefined".into(),
                ))
            }
        };
        let horizon = spec.horizon.unwrap_or(0);
        if horizon > max_steps {
            return Err(Error::InvalidScenario(format!(
                "trajectory horizon {horizon} exceeds max_steps {max_steps}"
            )));
        }
        let gamma = match spec.truth {
            Truth::H0 => sc.gamma0,
            Truth::H1 => sc.gamma1,
        };
        let sampler = SnapshotSampler::for_covariance(&build_covariance(&sc.steering()?, gamma))?;
        Ok(Self {
            sampler,
            scorer,
            th: thresholds(sc.alpha1, sc.alpha2)?,
            max_steps,
            horizon,
            analytic_slope,
            analytic_asn,
        })
    }

    fn run(&self, seed: u64, run: u64) -> RunResult {
        let m = self.sampler.dims();
        let mut rng = stream_rng(seed, run);
        let mut white = vec![0.0; m];
        let mut y = vec![0.0; m];
        let mut z = vec![0i8; m];
        let mut state = SprtState::new(self.th);
        let mut path = Vec::with_capacity(self.horizon as usize);
        let mut decision = Decision::Truncated;
        let mut window = (0.0, 0);
        while state.steps() < self.max_steps {
            self.sampler.sample_into(&mut rng, &mut white, &mut y);
            let inc = match &self.scorer {
                Scorer::OneBit(w) => {
                    for (zi, &yi) in z.iter_mut().zip(&y) {
                        *zi = sign_bit(yi);
                    }
                    w.llr_signs(&z)
                }
                Scorer::Ideal(pair) => pair.llr_slice(&y),
            };
            let d = state.push(inc);
            if state.steps() <= self.horizon {
                path.push(state.llr());
                window = (state.llr(), state.steps());
            }
            if let Some(d) = d {
                decision = d;
                break;
            }
        }
        if self.horizon == 0 {
            window = (state.llr(), state.steps());
        }
        RunResult {
            decision,
            stop_step: state.steps(),
            final_llr: state.llr(),
            window_llr: window.0,
            window_steps: window.1,
            path,
        }
    }
}

/// Elementwise mean of recorded paths, each extended to `horizon` by holding
/// its last value.
pub fn aggregate_trajectories(paths: &[Vec<f64>], horizon: usize) -> Result<Vec<f64>> {
    if paths.is_empty() {
        return Err(Error::EmptyRunSet);
    }
    let mut sum = vec![0.0; horizon];
    for p in paths {
        let mut last = 0.0;
        for (k, s) in sum.iter_mut().enumerate() {
            if let Some(&v) = p.get(k) {
                last = v;
            }
            *s += last;
        }
    }
    let n = paths.len() as f64;
    Ok(sum.into_iter().map(|s| s / n).collect())
}

/// 95% Wilson score interval for `k` successes in `n` trials.
pub fn wilson_interval(k: u64, n: u64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959963984540054;
    let nf = n as f64;
    let p = k as f64 / nf;
    let denom = 1.0 + z * z / nf;
    let center = (p + z * z / (2.0 * nf)) / denom;
    let half = z * (p * (1.0 - p) / nf + z * z / (4.0 * nf * nf)).sqrt() / denom;
    // The bounds are exactly 0 and 1 at the extremes; avoid rounding residue.
    let lo = if k == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if k >= n { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

fn ratio_estimate(num: &[f64], den: &[f64]) -> MeanWithError {
    let total_den: f64 = den.iter().sum();
    if total_den == 0.0 {
        return MeanWithError {
            mean: f64::NAN,
            stderr: f64::NAN,
        };
    }
    let ratio = num.iter().sum::<f64>() / total_den;
    let n = num.len() as f64;
    let resid: f64 = num.iter().zip(den).map(|(a, b)| (a - ratio * b).powi(2)).sum();
    let stderr = if n > 1.0 {
        (resid * n / (n - 1.0)).sqrt() / total_den
    } else {
        f64::NAN
    };
    MeanWithError { mean: ratio, stderr }
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    run_experiment_with_cache(spec, None)
}

pub fn run_experiment_with_cache(spec: &ExperimentSpec, cache: Option<&MomentCache>) -> Result<ExperimentReport> {
    let pipe = Pipeline::build(spec, cache)?;
    let seed = spec.scenario.seed;
    let results: Vec<RunResult> = (0..spec.runs).into_par_iter().map(|r| pipe.run(seed, r)).collect();

    let count = |d: Decision| results.iter().filter(|r| r.decision == d).count() as u64;
    let (decided_h0, decided_h1, truncated) = (count(Decision::H0), count(Decision::H1), count(Decision::Truncated));
    let decided = decided_h0 + decided_h1;

    let stops: Vec<f64> = results
        .iter()
        .filter(|r| r.decision != Decision::Truncated)
        .map(|r| r.stop_step as f64)
        .collect();
    let empirical_asn = if stops.is_empty() {
        MeanWithError {
            mean: f64::NAN,
            stderr: f64::NAN,
        }
    } else {
        let n = stops.len() as f64;
        let mean = stops.iter().sum::<f64>() / n;
        let var = if n > 1.0 {
            stops.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            f64::NAN
        };
        MeanWithError {
            mean,
            stderr: (var / n).sqrt(),
        }
    };

    let wrong = match spec.truth {
        Truth::H0 => decided_h1,
        Truth::H1 => decided_h0,
    };
    let error_rate = if decided > 0 {
        wrong as f64 / decided as f64
    } else {
        f64::NAN
    };

    let trajectory = if pipe.horizon > 0 {
        let paths: Vec<Vec<f64>> = results.iter().map(|r| r.path.clone()).collect();
        aggregate_trajectories(&paths, pipe.horizon as usize)?
    } else {
        Vec::new()
    };
    let llrs: Vec<f64> = results.iter().map(|r| r.window_llr).collect();
    let steps: Vec<f64> = results.iter().map(|r| r.window_steps as f64).collect();
    let drift = ratio_estimate(&llrs, &steps);
    debug_assert!(results.iter().all(|r| r.final_llr.is_finite()));

    Ok(ExperimentReport {
        sensors: spec.scenario.sensors,
        receiver: spec.receiver,
        truth: spec.truth,
        runs: spec.runs,
        decided_h0,
        decided_h1,
        truncated,
        max_steps: pipe.max_steps,
        thresholds: pipe.th,
        empirical_asn,
        error_rate,
        error_ci: wilson_interval(wrong, decided),
        truncation_rate: truncated as f64 / spec.runs as f64,
        trajectory,
        analytic_slope: pipe.analytic_slope,
        analytic_asn: pipe.analytic_asn,
        drift,
        sample_period: spec.scenario.sample_period(),
    })
}

/// Per-step CSV: `step,time_ms,mean_llr,analytic_llr,lower_threshold,upper_threshold`.
pub fn write_trajectory_csv<W: Write>(report: &ExperimentReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "step",
        "time_ms",
        "mean_llr",
        "analytic_llr",
        "lower_threshold",
        "upper_threshold",
    ])?;
    for (k, &llr) in report.trajectory.iter().enumerate() {
        let step = (k + 1) as f64;
        w.write_record([
            (k + 1).to_string(),
            (step * report.sample_period * 1e3).to_string(),
            llr.to_string(),
            (step * report.analytic_slope).to_string(),
            report.thresholds.lower.to_string(),
            report.thresholds.upper.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub const SUMMARY_HEADER: [&str; 11] = [
    "S",
    "receiver",
    "truth",
    "empirical_asn",
    "stderr",
    "error_rate",
    "truncation_rate",
    "analytic_asn",
    "slope",
    "slope_stderr",
    "analytic_slope",
];

/// Summary CSV with one row per report.
pub fn write_summary_csv<W: Write>(reports: &[ExperimentReport], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SUMMARY_HEADER)?;
    for r in reports {
        w.write_record([
            r.sensors.to_string(),
            r.receiver.to_string(),
            r.truth.to_string(),
            r.empirical_asn.mean.to_string(),
            r.empirical_asn.stderr.to_string(),
            r.error_rate.to_string(),
            r.truncation_rate.to_string(),
            r.analytic_asn.to_string(),
            r.drift.mean.to_string(),
            r.drift.stderr.to_string(),
            r.analytic_slope.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trajectory_file(report: &ExperimentReport, path: &Path) -> Result<()> {
    write_trajectory_csv(report, std::fs::File::create(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn spec(sensors: usize, receiver: Receiver, truth: Truth, runs: u64) -> ExperimentSpec {
        let mut scenario = ScenarioConfig::gnss(sensors, 1e-3);
        scenario.seed = 12345;
        ExperimentSpec {
            scenario,
            runs,
            truth,
            receiver,
            horizon: None,
        }
    }

    #[test]
    fn aggregate_examples() {
        assert_eq!(
            aggregate_trajectories(&[vec![1.0, 2.0, 3.0]], 3).unwrap(),
            vec![1.0, 2.0, 3.0]
        );
        let mirrored = aggregate_trajectories(&[vec![0.5, 1.5], vec![-0.5, -1.5]], 2).unwrap();
        assert_eq!(mirrored, vec![0.0, 0.0]);
        // Stopped path holds its final value.
        assert_eq!(
            aggregate_trajectories(&[vec![1.0], vec![3.0, 5.0, 7.0]], 3).unwrap(),
            vec![2.0, 3.0, 4.0]
        );
        assert!(matches!(aggregate_trajectories(&[], 3), Err(Error::EmptyRunSet)));
    }

    #[test]
    fn wilson_interval_brackets_estimate() {
        let (lo, hi) = wilson_interval(10, 1000);
        assert!(lo < 0.01 && 0.01 < hi);
        let (lo, hi) = wilson_interval(0, 200);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.02);
    }

    #[test]
    fn equal_amplitudes_truncate_every_run() {
        let mut s = spec(2, Receiver::OneBit, Truth::H1, 20);
        s.scenario.gamma1 = s.scenario.gamma0;
        s.scenario.max_steps = Some(300);
        let r = run_experiment(&s).unwrap();
        assert_eq!(r.truncated, 20);
        assert_eq!(r.truncation_rate, 1.0);
        s.scenario.max_steps = None;
        assert!(run_experiment(&s).is_err());
    }

    #[test]
    fn ideal_single_sensor_asn_matches_wald() {
        let s = spec(1, Receiver::Ideal, Truth::H1, 10_000);
        let r = run_experiment(&s).unwrap();
        assert_eq!(r.truncated, 0);
        let rel = r.empirical_asn.mean / r.analytic_asn - 1.0;
        assert!(rel.abs() < 0.10, "{} vs {}", r.empirical_asn.mean, r.analytic_asn);
    }

    #[test]
    fn same_seed_identical_reports() {
        let mut s = spec(3, Receiver::OneBit, Truth::H0, 30);
        s.horizon = Some(500);
        let a = run_experiment(&s).unwrap();
        let b = run_experiment(&s).unwrap();
        assert_eq!(a, b);
        let (mut ca, mut cb) = (Vec::new(), Vec::new());
        write_trajectory_csv(&a, &mut ca).unwrap();
        write_trajectory_csv(&b, &mut cb).unwrap();
        assert_eq!(ca, cb);
        s.scenario.seed += 1;
        assert_ne!(run_experiment(&s).unwrap().trajectory, a.trajectory);
    }

    #[test]
    fn decisions_respect_thresholds_and_horizon() {
        let mut s = spec(2, Receiver::Ideal, Truth::H1, 50);
        s.horizon = Some(100);
        let r = run_experiment(&s).unwrap();
        assert_eq!(r.trajectory.len(), 100);
        assert_eq!(r.decided_h0 + r.decided_h1 + r.truncated, 50);
        assert!(r.error_ci.0 <= r.error_rate && r.error_rate <= r.error_ci.1);
        s.horizon = Some(u64::MAX);
        assert!(run_experiment(&s).is_err());
    }

    #[test]
    fn csv_layout() {
        let mut s = spec(2, Receiver::Ideal, Truth::H1, 4);
        s.horizon = Some(3);
        let r = run_experiment(&s).unwrap();
        let mut buf = Vec::new();
        write_trajectory_csv(&r, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(
            lines[0],
            "step,time_ms,mean_llr,analytic_llr,lower_threshold,upper_threshold"
        );
        assert_eq!(lines.len(), 4);
        let first: Vec<f64> = lines[1].split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(first[0], 1.0);
        assert_abs_diff_eq!(first[1], 1e3 / 2.046e6, epsilon = 1e-15);
        assert_abs_diff_eq!(first[5], 999f64.ln(), epsilon = 1e-12);
        let mut buf = Vec::new();
        write_summary_csv(&[r], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with(
            "S,receiver,truth,empirical_asn,stderr,error_rate,truncation_rate,analytic_asn,\
             slope,slope_stderr,analytic_slope\n2,ideal,H1,"
        ));
        assert_eq!(text.lines().nth(1).unwrap().split(',').count(), SUMMARY_HEADER.len());
    }
}
