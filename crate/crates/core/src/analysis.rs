//! Analytic latency and efficiency of the 1-bit test against the ideal
//! receiver for one scenario.

use serde::Serialize;

use crate::array_model::ScenarioConfig;
use crate::binary_model::{BinaryModel, MomentCache};
use crate::error::Result;
use crate::ideal_receiver::{expected_exact_llr_pair, GaussianPair};
use crate::sprt::{asn, AsnReport};

#[derive(Clone, Debug, Serialize)]
pub struct ScenarioAnalysis {
    pub sensors: usize,
    /// `(E_0[l̃], E_1[l̃])` of the approximate 1-bit LLR.
    pub onebit_increments: (f64, f64),
    /// `(E_0[l], E_1[l])` of the exact Gaussian LLR.
    pub ideal_increments: (f64, f64),
    pub onebit_asn: (f64, f64),
    pub ideal_asn: (f64, f64),
    pub report: AsnReport,
}

impl ScenarioAnalysis {
    pub fn ideal_latency(&self, bandwidth_hz: f64) -> (f64, f64) {
        (self.ideal_asn.0 / bandwidth_hz, self.ideal_asn.1 / bandwidth_hz)
    }
}

pub fn analyze(sc: &ScenarioConfig, cache: Option<&MomentCache>) -> Result<ScenarioAnalysis> {
    let model = BinaryModel::build_with_cache(sc, cache)?;
    analyze_with_model(sc, &model)
}

pub fn analyze_with_model(sc: &ScenarioConfig, model: &BinaryModel) -> Result<ScenarioAnalysis> {
    let pair = GaussianPair::for_scenario(sc)?;
    let ideal_increments = expected_exact_llr_pair(&pair)?;
    let onebit_increments = model.expected_llr_pair();
    let report = AsnReport::new(
        onebit_increments,
        ideal_increments,
        sc.alpha1,
        sc.alpha2,
        sc.bandwidth_hz,
    )?;
    Ok(ScenarioAnalysis {
        sensors: sc.sensors,
        onebit_increments,
        ideal_increments,
        onebit_asn: asn(onebit_increments.0, onebit_increments.1, sc.alpha1, sc.alpha2)?,
        ideal_asn: asn(ideal_increments.0, ideal_increments.1, sc.alpha1, sc.alpha2)?,
        report,
    })
}
