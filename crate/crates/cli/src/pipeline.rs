//! Preset pipelines: kernel audit, simulation, moments, oracles, seminorms, verdicts.

use std::path::{Path, PathBuf};
use std::time::Instant;

use stochconv::campanato::{
    campanato_from_moments, campanato_seminorm, embedding_exponent, holder_seminorm, DomainSpec, ParabolicCylinder,
};
use stochconv::conditions::{condition_mass, run_conditions, ConditionProbe};
use stochconv::convolution::{brownian_from_weights, poisson_from_weights, ConvolutionWeights, FieldEnsemble};
use stochconv::isometry::gaussian_increment_moment;
use stochconv::kernels::{check_sharp_bounds, TAIL_FLOOR};
use stochconv::moments::{estimate_pair_moments, sample_pairs, MomentField, PairRule};
use stochconv::noise::NoiseKind;
use stochconv::{eval_kernel, fit_exponent, KernelSpec, Method};

use crate::config::{ExperimentConfig, Preset};
use crate::error::{CliError, CliResult};
use crate::plots::emit_plot_data;
use crate::report::*;

const PAIR_SALT: u64 = 0x7061_6972_7300_0001;
const SEMINORM_SALT: u64 = 0x7365_6d69_6e6f_726d;
/// Constant in the two-sided kernel bound check.
const BOUND_CONSTANT: f64 = 10.0;

pub const ENSEMBLE_STEM: &str = "ensemble";
pub const FAILED_MARKER: &str = "FAILED";
pub const REPORT_FILE: &str = "report.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Kernel,
    Conditions,
    Simulation,
    Moments,
    Oracle,
    Seminorm,
}

impl Stage {
    pub fn name(&self) -> &'static str {
        match self {
            Stage::Kernel => "kernel",
            Stage::Conditions => "conditions",
            Stage::Simulation => "simulation",
            Stage::Moments => "moments",
            Stage::Oracle => "oracle",
            Stage::Seminorm => "seminorm",
        }
    }

    /// Stages of a full preset run, in order.
    pub fn for_preset(preset: Preset) -> Vec<Stage> {
        match preset {
            Preset::KernelAudit => vec![Stage::Kernel, Stage::Conditions],
            Preset::FractionalSweep => vec![Stage::Conditions],
            Preset::BrownianRegularity => vec![
                Stage::Kernel,
                Stage::Simulation,
                Stage::Moments,
                Stage::Oracle,
                Stage::Seminorm,
            ],
            Preset::PoissonRegularity => vec![Stage::Kernel, Stage::Simulation, Stage::Moments, Stage::Seminorm],
            Preset::EmbeddingCheck => vec![Stage::Seminorm],
        }
    }
}

struct Runner<'a> {
    config: &'a ExperimentConfig,
    out: Option<PathBuf>,
    report: ExperimentReport,
    ensemble: Option<FieldEnsemble>,
    weights: Option<ConvolutionWeights>,
}

/// Runs the full pipeline of the configured preset without touching the filesystem.
pub fn run_experiment(config: &ExperimentConfig) -> CliResult<ExperimentReport> {
    run_stages(config, &Stage::for_preset(config.experiment), None, REPORT_FILE)
}

/// Runs the full pipeline, writing artifacts to `out` after each stage. On failure the
/// partial report and a `FAILED` marker naming the stage are left behind.
pub fn run_and_persist(config: &ExperimentConfig, out: &Path) -> CliResult<ExperimentReport> {
    run_stages(config, &Stage::for_preset(config.experiment), Some(out), REPORT_FILE)
}

/// Runs `stages` in order; with `out` set, the report is written to `out/report_file`.
pub fn run_stages(
    config: &ExperimentConfig,
    stages: &[Stage],
    out: Option<&Path>,
    report_file: &str,
) -> CliResult<ExperimentReport> {
    config.validate()?;
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
        let marker = dir.join(FAILED_MARKER);
        if marker.exists() {
            std::fs::remove_file(marker)?;
        }
        std::fs::write(dir.join("config.toml"), config.to_toml())?;
    }
    let mut runner = Runner::new(config, out.map(Path::to_path_buf));
    let started = Instant::now();
    for &stage in stages {
        let t0 = Instant::now();
        let result = runner.stage(stage);
        runner.report.timing.stages.push(StageTiming {
            stage: stage.name().into(),
            seconds: t0.elapsed().as_secs_f64(),
        });
        if let Err(e) = result {
            runner.report.timing.total_seconds = started.elapsed().as_secs_f64();
            runner.finish();
            if let Some(dir) = &runner.out {
                std::fs::write(dir.join(partial_name(report_file)), runner.report.to_json())?;
                write_timing(dir, &runner.report.timing)?;
                std::fs::write(dir.join(FAILED_MARKER), format!("stage: {}\nerror: {e}\n", stage.name()))?;
            }
            return Err(e);
        }
    }
    runner.report.timing.total_seconds = started.elapsed().as_secs_f64();
    runner.finish();
    if let Some(dir) = &runner.out {
        std::fs::write(dir.join(report_file), runner.report.to_json())?;
        write_timing(dir, &runner.report.timing)?;
        emit_plot_data(&runner.report).write_to(&dir.join("plots"))?;
    }
    Ok(runner.report)
}

fn partial_name(report_file: &str) -> String {
    match report_file.strip_suffix(".json") {
        Some(stem) => format!("{stem}.partial.json"),
        None => format!("{report_file}.partial"),
    }
}

fn write_timing(dir: &Path, timing: &Timing) -> CliResult<()> {
    std::fs::write(
        dir.join("timing.json"),
        serde_json::to_string_pretty(timing).expect("timing serializes"),
    )?;
    Ok(())
}

fn numerical(stage: Stage) -> impl Fn(stochconv::Error) -> CliError {
    move |source| CliError::Stage {
        stage: stage.name().into(),
        source,
    }
}

impl<'a> Runner<'a> {
    fn new(config: &'a ExperimentConfig, out: Option<PathBuf>) -> Self {
        let report = ExperimentReport {
            config: config.clone(),
            prediction: None,
            stages: StageReports::default(),
            verdicts: Vec::new(),
            pass: false,
            provenance: RunProvenance {
                version: env!("CARGO_PKG_VERSION").into(),
                rng: "ChaCha8; realization m of the ensemble reads stream m of the seed".into(),
                seed: config.seed,
                pair_seed: config.seed ^ PAIR_SALT,
                seminorm_seed: config.seed ^ SEMINORM_SALT,
            },
            timing: Timing {
                threads: rayon::current_num_threads(),
                ..Default::default()
            },
        };
        Self {
            config,
            out,
            report,
            ensemble: None,
            weights: None,
        }
    }

    fn finish(&mut self) {
        self.report.pass = self.report.verdicts.iter().all(|v| v.pass);
    }

    fn verdict(&mut self, v: Verdict) {
        self.report.verdicts.push(v);
    }

    fn stage(&mut self, stage: Stage) -> CliResult<()> {
        match stage {
            Stage::Kernel => self.kernel_stage(),
            Stage::Conditions => self.conditions_stage(),
            Stage::Simulation => self.simulation_stage(),
            Stage::Moments => self.moments_stage(),
            Stage::Oracle => self.oracle_stage(),
            Stage::Seminorm => self.seminorm_stage(),
        }
    }

    fn persist(&self, name: &str, write: impl FnOnce(&mut Vec<u8>) -> stochconv::Result<()>, stage: Stage) -> CliResult<()> {
        if let Some(dir) = &self.out {
            let mut buf = Vec::new();
            write(&mut buf).map_err(numerical(stage))?;
            std::fs::write(dir.join(name), buf)?;
        }
        Ok(())
    }

    fn kernel_stage(&mut self) -> CliResult<()> {
        let cfg = self.config;
        let err = numerical(Stage::Kernel);
        let kernel = cfg.kernel;
        let times = if cfg.experiment.simulates() {
            let dt = cfg.noise.horizon / cfg.noise.steps as f64;
            vec![0.5 * dt, cfg.noise.horizon]
        } else {
            cfg.conditions.kernel_times.clone()
        };
        let closed = KernelSpec {
            method: Method::ClosedForm,
            ..kernel
        };
        let mut checks = Vec::new();
        for &t in &times {
            let field = eval_kernel(&kernel, &cfg.grid, t).map_err(&err)?;
            let deviation = if kernel.has_closed_form() && kernel.method == Method::Spectral {
                let exact = eval_kernel(&closed, &cfg.grid, t).map_err(&err)?;
                Some(
                    field
                        .values
                        .iter()
                        .zip(&exact.values)
                        .filter(|(_, e)| **e > TAIL_FLOOR)
                        .map(|(v, e)| (v - e).abs() / e)
                        .fold(0.0, f64::max),
                )
            } else {
                None
            };
            checks.push(KernelCheck {
                t,
                mass: field.integral(),
                closed_form_deviation: deviation,
                aliasing_residual: cfg.grid.aliasing_residual(&kernel, t),
            });
        }
        let bounds = if kernel.alpha < 2.0 && (kernel.epsilon == 0.0 || kernel.epsilon == 1.0) {
            let t = *times.last().expect("at least one kernel time");
            Some(check_sharp_bounds(&kernel, &cfg.grid, t, BOUND_CONSTANT).map_err(&err)?)
        } else {
            None
        };
        let tol = cfg.tolerances;
        for c in &checks {
            self.verdict(Verdict::within("kernel", format!("kernel mass at t = {}", c.t), 1.0, c.mass, tol.kernel_mass));
            if let Some(d) = c.closed_form_deviation {
                self.verdict(Verdict::within(
                    "kernel",
                    format!("spectral kernel matches closed form at t = {}", c.t),
                    0.0,
                    d,
                    tol.closed_form,
                ));
            }
        }
        if let Some(b) = &bounds {
            let spread = b.max_ratio.max(1.0 / b.min_ratio);
            self.verdict(Verdict {
                stage: "kernel".into(),
                claim: format!("kernel within a factor {BOUND_CONSTANT} of its two-sided bound at t = {}", b.t),
                predicted: 1.0,
                fitted: spread,
                tolerance: BOUND_CONSTANT,
                pass: b.pass,
            });
        }
        self.report.stages.kernel = Some(KernelStage {
            kernel,
            grid: cfg.grid,
            checks,
            bounds,
        });
        Ok(())
    }

    fn condition_kernels(&self) -> Vec<KernelSpec> {
        let cfg = self.config;
        if cfg.experiment == Preset::FractionalSweep {
            cfg.conditions
                .cases
                .iter()
                .map(|c| KernelSpec {
                    alpha: c.alpha,
                    epsilon: c.epsilon,
                    dim: cfg.kernel.dim,
                    method: Method::Spectral,
                })
                .collect()
        } else {
            vec![cfg.kernel]
        }
    }

    fn conditions_stage(&mut self) -> CliResult<()> {
        let cfg = self.config;
        let c = &cfg.conditions;
        let err = numerical(Stage::Conditions);
        let pairs: Vec<(f64, f64)> = c.lags.iter().map(|&l| (c.s, c.s + l)).collect();
        let mut reports = Vec::new();
        let mut mass = Vec::new();
        for kernel in self.condition_kernels() {
            for &beta in &c.betas {
                let mut probe = ConditionProbe::new(kernel, beta, c.power, pairs.clone()).map_err(&err)?;
                probe.resolution = c.resolution;
                probe.quadrature = c.quadrature;
                reports.push(run_conditions(&probe).map_err(&err)?);
            }
            let mut probe = ConditionProbe::new(kernel, 0.0, c.power, Vec::new()).map_err(&err)?;
            probe.resolution = c.resolution;
            probe.quadrature = c.quadrature;
            let values = c
                .mass_times
                .iter()
                .map(|&s| condition_mass(&probe, s))
                .collect::<stochconv::Result<Vec<_>>>()
                .map_err(&err)?;
            let fit = fit_exponent(&values.iter().map(|v| (v.s, v.lhs)).collect::<Vec<_>>()).ok();
            mass.push(MassSeries { kernel, values, fit });
        }
        let tol = cfg.tolerances.exponent;
        for r in &reports {
            let k = r.kernel;
            let predicted = (k.alpha - 2.0 * k.epsilon) / k.alpha;
            let label = format!("alpha = {}, epsilon = {}, beta = {}", k.alpha, k.epsilon, r.beta);
            let g1 = r.fitted_gamma1.map_or(f64::NAN, |e| e.gamma);
            let g2 = r.fitted_gamma2.map_or(f64::NAN, |e| e.gamma);
            self.verdict(Verdict::within("conditions", format!("increment exponent gamma1 ({label})"), predicted, g1, tol));
            self.verdict(Verdict::within("conditions", format!("tail exponent gamma2 ({label})"), predicted, g2, tol));
        }
        for m in &mass {
            let k = m.kernel;
            let predicted = 1.0 - c.power * k.epsilon / k.alpha;
            self.verdict(Verdict::within(
                "conditions",
                format!("mass growth exponent (alpha = {}, epsilon = {})", k.alpha, k.epsilon),
                predicted,
                m.fit.map_or(f64::NAN, |f| f.slope),
                tol,
            ));
        }
        let stage = ConditionsStage { reports, mass };
        for (i, r) in stage.reports.iter().enumerate() {
            self.persist(&format!("conditions-{i}.csv"), |b| r.write_csv(b), Stage::Conditions)?;
            self.persist(
                &format!("conditions-{i}.json"),
                |b| {
                    b.extend_from_slice(r.to_json()?.as_bytes());
                    Ok(())
                },
                Stage::Conditions,
            )?;
        }
        self.report.stages.conditions = Some(stage);
        Ok(())
    }

    fn prediction(&mut self) -> Prediction {
        let cfg = self.config;
        let formula = cfg.kernel_exponent();
        let (g1, g2) = (
            cfg.prediction.gamma1.unwrap_or(formula),
            cfg.prediction.gamma2.unwrap_or(formula),
        );
        let source = match (cfg.prediction.gamma1, cfg.prediction.gamma2) {
            (None, None) => "kernel exponents (alpha - 2 epsilon)/alpha",
            (Some(_), Some(_)) => "configured kernel exponents",
            _ => "configured and formula kernel exponents",
        };
        let beta = cfg.test_function.beta;
        let p = Prediction {
            gamma1: g1,
            gamma2: g2,
            beta,
            gamma: g1.min(g2).min(beta),
            source: source.into(),
        };
        self.report.prediction = Some(p.clone());
        p
    }

    fn build_weights(&self) -> CliResult<ConvolutionWeights> {
        let cfg = self.config;
        ConvolutionWeights::new(&cfg.kernel, &cfg.grid, &cfg.test_function, &cfg.noise_spec(), &cfg.window)
            .map_err(numerical(Stage::Simulation))
    }

    fn simulation_stage(&mut self) -> CliResult<()> {
        let cfg = self.config;
        let err = numerical(Stage::Simulation);
        let noise = cfg.noise_spec();
        let weights = self.build_weights()?;
        let ensemble = match noise.kind {
            NoiseKind::Brownian => {
                brownian_from_weights(&weights, &cfg.kernel, &cfg.grid, &cfg.test_function, &noise, cfg.ensemble_size)
            }
            NoiseKind::CompensatedPoisson => {
                poisson_from_weights(&weights, &cfg.kernel, &cfg.grid, &cfg.test_function, &noise, cfg.ensemble_size)
            }
        }
        .map_err(&err)?;
        if let Some(dir) = &self.out {
            ensemble.save(dir, ENSEMBLE_STEM).map_err(&err)?;
        }
        let lattice = &ensemble.lattice;
        self.report.stages.simulation = Some(SimulationStage {
            noise,
            realizations: ensemble.realizations,
            times: lattice.times.clone(),
            space_points: lattice.space_len(),
            spacing: if lattice.axis.len() > 1 {
                lattice.axis[1] - lattice.axis[0]
            } else {
                0.0
            },
            ensemble_file: format!("{ENSEMBLE_STEM}.json"),
        });
        self.weights = Some(weights);
        self.ensemble = Some(ensemble);
        Ok(())
    }

    /// The in-memory ensemble, or the one saved in the output directory.
    fn ensure_ensemble(&mut self, stage: Stage) -> CliResult<()> {
        if self.ensemble.is_some() {
            return Ok(());
        }
        let path = self
            .out
            .as_ref()
            .map(|d| d.join(format!("{ENSEMBLE_STEM}.json")))
            .filter(|p| p.exists())
            .ok_or_else(|| CliError::Config("no ensemble found; run `simulate` first".into()))?;
        let ensemble = FieldEnsemble::load(&path).map_err(numerical(stage))?;
        let cfg = self.config;
        let prov = &ensemble.provenance;
        if prov.kernel != cfg.kernel
            || prov.grid != cfg.grid
            || prov.test_function != cfg.test_function
            || prov.noise != cfg.noise_spec()
            || ensemble.realizations != cfg.ensemble_size
        {
            return Err(CliError::Config(format!(
                "{} was simulated under a different configuration",
                path.display()
            )));
        }
        self.ensemble = Some(ensemble);
        Ok(())
    }

    fn moments_stage(&mut self) -> CliResult<()> {
        self.ensure_ensemble(Stage::Moments)?;
        let cfg = self.config;
        let err = numerical(Stage::Moments);
        let prediction = self.prediction();
        let ensemble = self.ensemble.as_ref().expect("ensemble loaded");
        let cylinders = cfg.cylinders()?;
        let pair_seed = self.report.provenance.pair_seed;
        let pairs = sample_pairs(
            &ensemble.lattice,
            &cylinders,
            cfg.moments.pairs_per_cylinder,
            &cfg.moments.rule,
            pair_seed,
        )
        .map_err(&err)?;
        let field = estimate_pair_moments(ensemble, &pairs, cfg.moments.p).map_err(&err)?;
        let fit = field.fit_lag_exponent().map_err(&err)?;
        let lags = lag_rows(&field);
        self.verdict(Verdict::within(
            "moments",
            format!("moment-field Hölder exponent (p = {})", cfg.moments.p),
            prediction.gamma,
            fit.gamma,
            cfg.tolerances.exponent,
        ));
        self.persist("moments.csv", |b| field.write_csv(b), Stage::Moments)?;
        self.report.stages.moments = Some(MomentsStage {
            field,
            lags,
            fit,
            max_lag_rounding: pairs.max_lag_rounding,
            pair_seed,
        });
        Ok(())
    }

    fn oracle_stage(&mut self) -> CliResult<()> {
        let cfg = self.config;
        let err = numerical(Stage::Oracle);
        if cfg.noise.kind != NoiseKind::Brownian || cfg.moments.p != 2.0 {
            return Ok(());
        }
        if self.weights.is_none() {
            self.weights = Some(self.build_weights()?);
        }
        let ensemble = self.ensemble.as_ref().expect("moments ran first");
        let weights = self.weights.as_ref().expect("built above");
        let moments = self.report.stages.moments.as_mut().expect("moments ran first");
        let gaussian = cfg.kernel.alpha == 2.0 && cfg.kernel.epsilon == 0.0;
        for row in &mut moments.lags {
            let mut discrete = 0.0;
            let mut continuous = 0.0;
            let mut n = 0.0;
            for pair in moments.field.pairs.iter().filter(|p| p.requested_lag == Some(row.lag)) {
                let x = ensemble.lattice.locate(pair.x.t, &pair.x.x).map_err(&err)?;
                let y = ensemble.lattice.locate(pair.y.t, &pair.y.x).map_err(&err)?;
                discrete += weights.increment_variance(x, y);
                if gaussian {
                    continuous += gaussian_increment_moment(
                        &cfg.test_function,
                        cfg.kernel.dim,
                        (pair.x.t, &pair.x.x),
                        (pair.y.t, &pair.y.x),
                    )
                    .map_err(&err)?;
                }
                n += 1.0;
            }
            row.discrete_oracle = Some(discrete / n);
            row.continuous_oracle = gaussian.then_some(continuous / n);
        }
        let sigmas = cfg.tolerances.moment_sigmas;
        let rows = moments.lags.clone();
        let mc_gamma = moments.fit.gamma;
        for row in &rows {
            let exact = row.discrete_oracle.expect("set above");
            self.verdict(Verdict::within(
                "oracle",
                format!("second moment at lag {} matches the discrete isometry", row.lag),
                exact,
                row.moment,
                sigmas * row.stderr,
            ));
        }
        if gaussian {
            let points: Vec<(f64, f64)> = rows
                .iter()
                .map(|r| (r.lag, r.continuous_oracle.expect("gaussian")))
                .collect();
            let fit = fit_exponent(&points).map_err(&err)?;
            let gamma = fit.slope / 2.0;
            self.verdict(Verdict::within(
                "oracle",
                "Monte Carlo exponent matches the quadrature exponent",
                gamma,
                mc_gamma,
                cfg.tolerances.oracle,
            ));
            self.report.stages.oracle = Some(OracleStage { gamma, fit });
        }
        Ok(())
    }

    fn seminorm_stage(&mut self) -> CliResult<()> {
        if self.config.experiment == Preset::EmbeddingCheck {
            self.deterministic_seminorm()
        } else {
            self.stochastic_seminorm()
        }
    }

    fn deterministic_seminorm(&mut self) -> CliResult<()> {
        let cfg = self.config;
        let err = numerical(Stage::Seminorm);
        let s = &cfg.seminorm;
        let g = cfg.test_function;
        let field = move |t: f64, x: &[f64]| g.eval(t, x);
        let domain = DomainSpec::new(s.domain.boxes.clone()).map_err(&err)?;
        let mut budget = s.budget.clone();
        budget.seed = self.report.provenance.seminorm_seed;
        let theta = cfg.theta(g.beta);
        let dim = domain.dim();
        let predicted = embedding_exponent(s.p, theta, dim).map_err(&err)?;
        let campanato = campanato_seminorm(&field, &domain, s.p, theta, &budget).map_err(&err)?;
        let theta_hat = campanato
            .fitted
            .ok_or_else(|| err(stochconv::Error::EmptyRequest("too few scales to fit theta".into())))?
            .value;
        let embedding = embedding_exponent(s.p, theta_hat, dim).map_err(&err)?;
        let holder = holder_seminorm(&field, &domain, g.beta, &budget).map_err(&err)?;
        let holder_gamma = holder.fitted.map_or(f64::NAN, |f| f.value);
        let tol = cfg.tolerances.exponent;
        self.verdict(Verdict::within(
            "seminorm",
            format!("Hölder exponent from the fitted Campanato exponent (p = {}, theta = {theta})", s.p),
            predicted,
            embedding,
            tol,
        ));
        self.verdict(Verdict::within("seminorm", "sampled Hölder exponent", g.beta, holder_gamma, tol));
        self.persist("seminorm.csv", |b| campanato.write_csv(b), Stage::Seminorm)?;
        self.persist("holder.csv", |b| holder.write_csv(b), Stage::Seminorm)?;
        self.report.stages.seminorm = Some(SeminormStage {
            theta,
            campanato,
            embedding: Some(embedding),
            holder: Some(holder),
        });
        Ok(())
    }

    /// Campanato form of the moment field over cylinders centred at the moment anchors.
    fn stochastic_seminorm(&mut self) -> CliResult<()> {
        self.ensure_ensemble(Stage::Seminorm)?;
        let cfg = self.config;
        let err = numerical(Stage::Seminorm);
        let gamma = match &self.report.prediction {
            Some(p) => p.gamma,
            None => self.prediction().gamma,
        };
        let theta = cfg.theta(gamma);
        let ensemble = self.ensemble.as_ref().expect("ensemble loaded");
        let mut cylinders = Vec::new();
        for anchor in cfg.cylinders()? {
            for &radius in &cfg.seminorm.budget.radii {
                cylinders.push(ParabolicCylinder::new(anchor.center.clone(), radius).map_err(&err)?);
            }
        }
        let pairs = sample_pairs(
            &ensemble.lattice,
            &cylinders,
            cfg.seminorm.budget.points_per_cylinder,
            &PairRule::WithinCylinder,
            self.report.provenance.seminorm_seed,
        )
        .map_err(&err)?;
        let field = estimate_pair_moments(ensemble, &pairs, cfg.seminorm.p).map_err(&err)?;
        let campanato = campanato_from_moments(&field, theta).map_err(&err)?;
        self.persist("seminorm.csv", |b| campanato.write_csv(b), Stage::Seminorm)?;
        self.report.stages.seminorm = Some(SeminormStage {
            theta,
            campanato,
            embedding: None,
            holder: None,
        });
        Ok(())
    }
}

/// Mean estimate and combined standard error per requested lag.
fn lag_rows(field: &MomentField) -> Vec<LagRow> {
    field
        .by_lag()
        .into_iter()
        .map(|(lag, moment)| {
            let se: Vec<f64> = field
                .pairs
                .iter()
                .zip(&field.stderr)
                .filter(|(p, _)| p.requested_lag == Some(lag))
                .map(|(_, s)| *s)
                .collect();
            let n = se.len() as f64;
            LagRow {
                lag,
                moment,
                stderr: se.iter().map(|s| s * s).sum::<f64>().sqrt() / n,
                pairs: se.len(),
                discrete_oracle: None,
                continuous_oracle: None,
            }
        })
        .collect()
}
