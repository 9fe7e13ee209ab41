//! Experiment reports, verdicts and run timing.

use std::path::Path;

use serde::{Deserialize, Serialize};
use stochconv::campanato::SeminormReport;
use stochconv::conditions::{ConditionReport, ConditionValue};
use stochconv::kernels::BoundReport;
use stochconv::moments::{LagFit, MomentField};
use stochconv::noise::NoiseSpec;
use stochconv::{KernelSpec, PowerFit, SpectralGrid};

use crate::config::ExperimentConfig;
use crate::error::CliResult;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub stage: String,
    pub claim: String,
    pub predicted: f64,
    pub fitted: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Verdict {
    /// Passes when `|fitted - predicted| ≤ tolerance`.
    pub fn within(stage: &str, claim: impl Into<String>, predicted: f64, fitted: f64, tolerance: f64) -> Self {
        Self {
            stage: stage.to_string(),
            claim: claim.into(),
            predicted,
            fitted,
            tolerance,
            pass: (fitted - predicted).abs() <= tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelCheck {
    pub t: f64,
    pub mass: f64,
    /// Largest relative deviation from the closed form where it exceeds the tail floor.
    pub closed_form_deviation: Option<f64>,
    pub aliasing_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelStage {
    pub kernel: KernelSpec,
    pub grid: SpectralGrid,
    pub checks: Vec<KernelCheck>,
    pub bounds: Option<BoundReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassSeries {
    pub kernel: KernelSpec,
    pub values: Vec<ConditionValue>,
    pub fit: Option<PowerFit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionsStage {
    pub reports: Vec<ConditionReport>,
    pub mass: Vec<MassSeries>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationStage {
    pub noise: NoiseSpec,
    pub realizations: usize,
    pub times: Vec<f64>,
    pub space_points: usize,
    pub spacing: f64,
    pub ensemble_file: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagRow {
    pub lag: f64,
    /// Mean Monte Carlo estimate over the pairs at this lag.
    pub moment: f64,
    pub stderr: f64,
    pub pairs: usize,
    /// Exact second moment of the simulated (discrete) field.
    pub discrete_oracle: Option<f64>,
    /// Second moment of the continuous field by quadrature.
    pub continuous_oracle: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentsStage {
    pub field: MomentField,
    pub lags: Vec<LagRow>,
    pub fit: LagFit,
    pub max_lag_rounding: f64,
    pub pair_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleStage {
    /// `γ` from the quadrature second moments.
    pub gamma: f64,
    pub fit: PowerFit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeminormStage {
    pub theta: f64,
    pub campanato: SeminormReport,
    /// `(d+2)(θ̂-1)/p` from the fitted Campanato exponent.
    pub embedding: Option<f64>,
    pub holder: Option<SeminormReport>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageReports {
    pub kernel: Option<KernelStage>,
    pub conditions: Option<ConditionsStage>,
    pub simulation: Option<SimulationStage>,
    pub moments: Option<MomentsStage>,
    pub oracle: Option<OracleStage>,
    pub seminorm: Option<SeminormStage>,
}

/// `γ = min{γ1, γ2, β}` and where each input came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub gamma1: f64,
    pub gamma2: f64,
    pub beta: f64,
    pub gamma: f64,
    pub source: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunProvenance {
    pub version: String,
    pub rng: String,
    pub seed: u64,
    pub pair_seed: u64,
    pub seminorm_seed: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

/// Wall-clock record, kept out of the report so reports stay byte-stable.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub stages: Vec<StageTiming>,
    pub total_seconds: f64,
    pub threads: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub prediction: Option<Prediction>,
    pub stages: StageReports,
    pub verdicts: Vec<Verdict>,
    /// Every verdict passed.
    pub pass: bool,
    pub provenance: RunProvenance,
    #[serde(skip)]
    pub timing: Timing,
}

impl ExperimentReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| crate::error::CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| crate::error::CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn failed(&self) -> Vec<&Verdict> {
        self.verdicts.iter().filter(|v| !v.pass).collect()
    }
}
