//! Experiment configuration: preset defaults merged with a TOML file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use stochconv::campanato::{embedding_exponent, DomainSpec, ParabolicCylinder, SamplingBudget, SpaceTimePoint};
use stochconv::conditions::{QuadratureOptions, ScaledResolution};
use stochconv::convolution::{Family, MarkFactor, OutputWindow, TestFunctionSpec};
use stochconv::moments::{LagDirection, PairRule};
use stochconv::noise::{JumpMeasure, MarkLaw, NoiseKind, NoiseSpec};
use stochconv::{KernelSpec, Method, SpectralGrid};

use crate::error::{CliError, CliResult};

/// Environment variable consulted for the seed when neither the flag nor the file sets one.
pub const SEED_ENV: &str = "STOCHCONV_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    KernelAudit,
    BrownianRegularity,
    PoissonRegularity,
    FractionalSweep,
    EmbeddingCheck,
}

impl Preset {
    pub const ALL: [Preset; 5] = [
        Preset::KernelAudit,
        Preset::BrownianRegularity,
        Preset::PoissonRegularity,
        Preset::FractionalSweep,
        Preset::EmbeddingCheck,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Preset::KernelAudit => "kernel-audit",
            Preset::BrownianRegularity => "brownian-regularity",
            Preset::PoissonRegularity => "poisson-regularity",
            Preset::FractionalSweep => "fractional-sweep",
            Preset::EmbeddingCheck => "embedding-check",
        }
    }

    pub fn simulates(&self) -> bool {
        matches!(self, Preset::BrownianRegularity | Preset::PoissonRegularity)
    }
}

/// Noise settings; the seed comes from [`ExperimentConfig::seed`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    pub kind: NoiseKind,
    pub horizon: f64,
    pub steps: usize,
    #[serde(default)]
    pub jump: Option<JumpMeasure>,
    #[serde(default = "default_p0")]
    pub p0: f64,
}

fn default_p0() -> f64 {
    4.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CylinderSpec {
    pub t: f64,
    pub x: [f64; 1],
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentsSection {
    pub p: f64,
    pub rule: PairRule,
    pub pairs_per_cylinder: usize,
    pub cylinders: Vec<CylinderSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelCase {
    pub alpha: f64,
    pub epsilon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConditionsSection {
    /// Left endpoint `s` of every probed interval.
    pub s: f64,
    /// Lags `t - s`.
    pub lags: Vec<f64>,
    pub power: f64,
    /// Weight orders probed for each kernel.
    pub betas: Vec<f64>,
    /// Kernels probed by the sweep preset; the audit preset uses `[kernel]`.
    pub cases: Vec<KernelCase>,
    /// Endpoints `s` of the mass series.
    pub mass_times: Vec<f64>,
    /// Times at which the audit checks kernel mass and closed forms.
    pub kernel_times: Vec<f64>,
    pub resolution: ScaledResolution,
    pub quadrature: QuadratureOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeminormSection {
    pub domain: DomainSpec,
    pub budget: SamplingBudget,
    pub p: f64,
    /// Campanato exponent; defaults to the one matching the predicted exponent.
    #[serde(default)]
    pub theta: Option<f64>,
}

/// Overrides for the kernel exponents entering the prediction `min{γ1, γ2, β}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct PredictionSection {
    #[serde(default)]
    pub gamma1: Option<f64>,
    #[serde(default)]
    pub gamma2: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Absolute tolerance on fitted exponents.
    pub exponent: f64,
    /// Agreement between the Monte Carlo and quadrature exponents.
    pub oracle: f64,
    /// Moment checks pass within this many standard errors.
    pub moment_sigmas: f64,
    pub kernel_mass: f64,
    /// Relative spectral-vs-closed-form agreement.
    pub closed_form: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            exponent: 0.15,
            oracle: 0.05,
            moment_sigmas: 3.0,
            kernel_mass: 1e-6,
            closed_form: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Preset,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub kernel: KernelSpec,
    pub grid: SpectralGrid,
    pub noise: NoiseSection,
    pub test_function: TestFunctionSpec,
    pub window: OutputWindow,
    pub ensemble_size: usize,
    pub moments: MomentsSection,
    pub conditions: ConditionsSection,
    pub seminorm: SeminormSection,
    pub prediction: PredictionSection,
    pub tolerances: Tolerances,
}

fn dyadic(from: i32, to: i32) -> Vec<f64> {
    (from..=to).map(|k| 2f64.powi(-k)).collect()
}

impl ExperimentConfig {
    /// Built-in defaults of a preset.
    pub fn preset(preset: Preset) -> Self {
        let anchor_time = 2f64.powi(-14);
        let unit_square = DomainSpec::single((0.0, 1.0), vec![(0.0, 1.0)]).expect("valid box");
        let mut config = Self {
            experiment: preset,
            seed: 0,
            output_dir: PathBuf::from(format!("stochconv-out/{}", preset.name())),
            kernel: KernelSpec {
                alpha: 2.0,
                epsilon: 0.0,
                dim: 1,
                method: Method::Spectral,
            },
            grid: SpectralGrid {
                length: 8.0,
                points_per_axis: 1024,
                aliasing_tolerance: 1e-12,
            },
            noise: NoiseSection {
                kind: NoiseKind::Brownian,
                horizon: anchor_time,
                steps: 8,
                jump: None,
                p0: default_p0(),
            },
            test_function: TestFunctionSpec {
                family: Family::Parabolic,
                beta: 0.5,
                amplitude: 1.0,
                mark_factor: MarkFactor::Unit,
            },
            window: OutputWindow {
                steps: vec![8],
                half_width: Some(1.0),
                space_stride: 16,
            },
            ensemble_size: 2000,
            moments: MomentsSection {
                p: 2.0,
                rule: PairRule::DyadicLag {
                    lags: dyadic(1, 6),
                    direction: LagDirection::Space,
                    offset: 1.0,
                },
                pairs_per_cylinder: 1,
                cylinders: vec![CylinderSpec {
                    t: anchor_time,
                    x: [0.0],
                    radius: 0.5,
                }],
            },
            conditions: ConditionsSection {
                s: 0.5,
                lags: dyadic(2, 9),
                power: 2.0,
                betas: vec![0.0, 0.3, 0.5],
                cases: Vec::new(),
                mass_times: dyadic(0, 4),
                kernel_times: vec![0.01, 0.1, 1.0],
                resolution: ScaledResolution::default(),
                quadrature: QuadratureOptions::default(),
            },
            seminorm: SeminormSection {
                domain: unit_square,
                budget: SamplingBudget::default(),
                p: 2.0,
                theta: None,
            },
            prediction: PredictionSection::default(),
            tolerances: Tolerances::default(),
        };
        match preset {
            Preset::KernelAudit | Preset::EmbeddingCheck => {}
            Preset::BrownianRegularity => {
                config.grid.points_per_axis = 16384;
            }
            Preset::PoissonRegularity => {
                config.kernel.alpha = 1.5;
                config.grid = SpectralGrid {
                    length: 2.0,
                    points_per_axis: 65536,
                    aliasing_tolerance: 1e-12,
                };
                config.noise.kind = NoiseKind::CompensatedPoisson;
                config.noise.jump = Some(JumpMeasure::Finite {
                    intensity: 16.0 / anchor_time,
                    marks: MarkLaw::TwoSidedExponential { rate: 1.0 },
                });
                config.test_function.mark_factor = MarkFactor::Abs;
                config.window.space_stride = 256;
            }
            Preset::FractionalSweep => {
                config.conditions.betas = vec![0.0];
                config.conditions.cases = [(1.0, 0.0), (1.0, 0.25), (1.5, 0.0), (1.5, 0.3), (2.0, 0.5)]
                    .iter()
                    .map(|&(alpha, epsilon)| KernelCase { alpha, epsilon })
                    .collect();
            }
        }
        config
    }

    /// Parses a TOML document over the defaults of the preset it names.
    /// Tables merge key by key; arrays and scalars replace.
    pub fn from_toml_str(text: &str) -> CliResult<Self> {
        Self::from_toml_with_seed(text, None)
    }

    /// As [`Self::from_toml_str`], taking `fallback_seed` when the document sets no seed.
    pub fn from_toml_with_seed(text: &str, fallback_seed: Option<u64>) -> CliResult<Self> {
        let doc: toml::Table = text.parse().map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
        let overrides = serde_json::to_value(&doc).map_err(|e| CliError::Config(e.to_string()))?;
        let preset = match overrides.get("experiment") {
            Some(v) => serde_json::from_value::<Preset>(v.clone())
                .map_err(|e| CliError::Config(format!("experiment: {e}")))?,
            None => return Err(CliError::Config("missing key `experiment`".into())),
        };
        let mut defaults = Self::preset(preset);
        if let Some(seed) = fallback_seed {
            defaults.seed = seed;
        }
        let mut merged = serde_json::to_value(defaults).expect("config serializes");
        merge(&mut merged, overrides);
        let config: Self = serde_json::from_value(merged).map_err(|e| CliError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_path(path: &Path, fallback_seed: Option<u64>) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_with_seed(&text, fallback_seed)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes as TOML")
    }

    pub fn noise_spec(&self) -> NoiseSpec {
        NoiseSpec {
            kind: self.noise.kind,
            horizon: self.noise.horizon,
            steps: self.noise.steps,
            jump: self.noise.jump,
            seed: self.seed,
            p0: self.noise.p0,
        }
    }

    pub fn cylinders(&self) -> CliResult<Vec<ParabolicCylinder>> {
        self.moments
            .cylinders
            .iter()
            .map(|c| ParabolicCylinder::new(SpaceTimePoint::new(c.t, c.x.to_vec()), c.radius))
            .collect::<Result<_, _>>()
            .map_err(|e| CliError::Config(format!("moments.cylinders: {e}")))
    }

    /// `(α - 2ε)/α` for the configured kernel.
    pub fn kernel_exponent(&self) -> f64 {
        (self.kernel.alpha - 2.0 * self.kernel.epsilon) / self.kernel.alpha
    }

    /// Campanato exponent used by the seminorm stage.
    pub fn theta(&self, gamma: f64) -> f64 {
        let d = self.kernel.dim as f64;
        self.seminorm
            .theta
            .unwrap_or(1.0 + gamma * self.seminorm.p / (d + 2.0))
    }

    pub fn validate(&self) -> CliResult<()> {
        let cfg = |section: &str, e: stochconv::Error| CliError::Config(format!("{section}: {e}"));
        if self.kernel.dim != 1 && self.experiment != Preset::FractionalSweep && self.experiment != Preset::KernelAudit {
            return Err(CliError::Config(format!(
                "{} supports dim = 1 only",
                self.experiment.name()
            )));
        }
        let tol = &self.tolerances;
        if [tol.exponent, tol.oracle, tol.moment_sigmas, tol.kernel_mass, tol.closed_form]
            .iter()
            .any(|v| !(*v > 0.0))
        {
            return Err(CliError::Config("tolerances must be positive".into()));
        }
        match self.experiment {
            Preset::KernelAudit | Preset::FractionalSweep => {
                let c = &self.conditions;
                if c.lags.len() < 4 || c.lags.iter().any(|l| !(*l > 0.0)) {
                    return Err(CliError::Config("conditions.lags needs at least 4 positive lags".into()));
                }
                if c.betas.is_empty() {
                    return Err(CliError::Config("conditions.betas must not be empty".into()));
                }
                if c.mass_times.len() < 4 || c.mass_times.iter().any(|s| !(*s > 0.0)) {
                    return Err(CliError::Config("conditions.mass_times needs at least 4 positive times".into()));
                }
                if !(c.s > 0.0) {
                    return Err(CliError::Config("conditions.s must be positive".into()));
                }
                let kernels: Vec<KernelSpec> = if self.experiment == Preset::KernelAudit {
                    if c.kernel_times.iter().any(|t| !(*t > 0.0)) {
                        return Err(CliError::Config("conditions.kernel_times must be positive".into()));
                    }
                    self.grid.validate().map_err(|e| cfg("grid", e))?;
                    vec![self.kernel]
                } else {
                    if c.cases.is_empty() {
                        return Err(CliError::Config("conditions.cases must not be empty".into()));
                    }
                    c.cases
                        .iter()
                        .map(|k| KernelSpec {
                            alpha: k.alpha,
                            epsilon: k.epsilon,
                            dim: self.kernel.dim,
                            method: Method::Spectral,
                        })
                        .collect()
                };
                for k in kernels {
                    k.validate_for_conditions().map_err(|e| cfg("kernel", e))?;
                }
            }
            Preset::BrownianRegularity | Preset::PoissonRegularity => {
                let wanted = if self.experiment == Preset::BrownianRegularity {
                    NoiseKind::Brownian
                } else {
                    NoiseKind::CompensatedPoisson
                };
                if self.noise.kind != wanted {
                    return Err(CliError::Config(format!(
                        "{} needs {:?} noise, got {:?}",
                        self.experiment.name(),
                        wanted,
                        self.noise.kind
                    )));
                }
                self.kernel.validate().map_err(|e| cfg("kernel", e))?;
                self.grid.validate().map_err(|e| cfg("grid", e))?;
                self.noise_spec().validate().map_err(|e| cfg("noise", e))?;
                self.test_function.validate().map_err(|e| cfg("test_function", e))?;
                if self.ensemble_size < stochconv::moments::MIN_REALIZATIONS {
                    return Err(CliError::Config(format!(
                        "ensemble_size must be at least {}",
                        stochconv::moments::MIN_REALIZATIONS
                    )));
                }
                if !(self.moments.p >= 1.0) || self.moments.pairs_per_cylinder == 0 {
                    return Err(CliError::Config("moments needs p >= 1 and pairs_per_cylinder >= 1".into()));
                }
                if self.cylinders()?.is_empty() {
                    return Err(CliError::Config("moments.cylinders must not be empty".into()));
                }
                if let PairRule::DyadicLag { lags, .. } = &self.moments.rule {
                    if lags.len() < 4 || lags.iter().any(|l| !(*l > 0.0)) {
                        return Err(CliError::Config("moments.rule.lags needs at least 4 positive lags".into()));
                    }
                } else {
                    return Err(CliError::Config("regularity presets fit over dyadic lags".into()));
                }
                for g in [self.prediction.gamma1, self.prediction.gamma2].into_iter().flatten() {
                    if !(g > 0.0) {
                        return Err(CliError::Config("prediction exponents must be positive".into()));
                    }
                }
                if self.seminorm.budget.radii.len() < 4 {
                    return Err(CliError::Config("seminorm.budget.radii needs at least 4 radii".into()));
                }
            }
            Preset::EmbeddingCheck => {
                self.test_function.validate().map_err(|e| cfg("test_function", e))?;
                if self.test_function.family == Family::Constant {
                    return Err(CliError::Config("embedding-check needs a non-constant field".into()));
                }
                let domain = DomainSpec::new(self.seminorm.domain.boxes.clone()).map_err(|e| cfg("seminorm.domain", e))?;
                if domain.dim() != 1 {
                    return Err(CliError::Config("embedding-check runs on a one-dimensional domain".into()));
                }
                let theta = self.theta(self.test_function.beta);
                embedding_exponent(self.seminorm.p, theta, domain.dim()).map_err(|e| cfg("seminorm.theta", e))?;
            }
        }
        Ok(())
    }
}

/// Internally tagged enums in the config and their tag keys.
const TAGGED: [(&str, &str); 3] = [("noise.jump", "kind"), ("noise.jump.marks", "law"), ("moments.rule", "rule")];

fn merge(base: &mut Value, overrides: Value) {
    merge_at(base, overrides, "");
}

fn merge_at(base: &mut Value, overrides: Value, path: &str) {
    match (base, overrides) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                let child = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
                match b.get_mut(&k) {
                    Some(slot) if slot.is_object() && v.is_object() && !retagged(&child, slot, &v) => {
                        merge_at(slot, v, &child)
                    }
                    Some(slot) => *slot = v,
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// An override naming a different enum variant replaces the default wholesale.
fn retagged(path: &str, base: &Value, overrides: &Value) -> bool {
    TAGGED
        .iter()
        .filter(|(p, _)| *p == path)
        .any(|(_, tag)| matches!((base.get(tag), overrides.get(tag)), (Some(a), Some(b)) if a != b))
}
