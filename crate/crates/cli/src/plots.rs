//! Plot-ready CSV tables derived from a finished report.

use std::fmt::Write as _;
use std::path::Path;

use stochconv::campanato::SeminormReport;
use stochconv::conditions::ConditionValue;
use stochconv::PowerFit;

use crate::config::Preset;
use crate::report::ExperimentReport;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PlotBundle {
    /// `(file name, contents)` in emission order.
    pub files: Vec<(String, String)>,
}

impl PlotBundle {
    pub fn get(&self, name: &str) -> Option<&str> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, c)| c.as_str())
    }

    pub fn write_to(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        for (name, contents) in &self.files {
            std::fs::write(dir.join(name), contents)?;
        }
        Ok(())
    }
}

const CONDITION_HEADER: &str = "alpha,epsilon,beta,lag,log_lag,lhs,log_lhs,fit_log_lhs";
const MASS_HEADER: &str = "alpha,epsilon,beta,s,log_s,lhs,log_lhs,fit_log_lhs";
const LAG_HEADER: &str = "lag,log_lag,moment,log_moment,stderr,pairs,fit_log_moment,discrete_oracle,continuous_oracle";
const SCALE_HEADER: &str = "radius,log_radius,value,log_value,stderr,fit_log_value";

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

fn fitted(fit: Option<&PowerFit>, scale: f64) -> String {
    opt(fit.map(|f| f.intercept + f.slope * scale.ln()))
}

fn condition_rows(
    out: &mut String,
    (alpha, epsilon, beta): (f64, f64, f64),
    values: &[ConditionValue],
    scale: impl Fn(&ConditionValue) -> f64,
    fit: Option<&PowerFit>,
) {
    for v in values {
        let x = scale(v);
        let _ = writeln!(
            out,
            "{alpha},{epsilon},{beta},{x:e},{:e},{:e},{:e},{}",
            x.ln(),
            v.lhs,
            v.lhs.ln(),
            fitted(fit, x)
        );
    }
}

fn scale_rows(report: &SeminormReport) -> String {
    let mut out = format!("{SCALE_HEADER}\n");
    let fit = report.fitted.as_ref().map(|f| &f.fit);
    for s in &report.scales {
        let _ = writeln!(
            out,
            "{:e},{:e},{:e},{:e},{:e},{}",
            s.radius,
            s.radius.ln(),
            s.value,
            s.value.ln(),
            s.stderr,
            fitted(fit, s.radius)
        );
    }
    out
}

/// Tables for the preset of `report`; stages that did not run yield header-only files.
pub fn emit_plot_data(report: &ExperimentReport) -> PlotBundle {
    let mut files = Vec::new();
    match report.config.experiment {
        Preset::KernelAudit | Preset::FractionalSweep => {
            let mut increment = format!("{CONDITION_HEADER}\n");
            let mut tail = format!("{CONDITION_HEADER}\n");
            let mut mass = format!("{MASS_HEADER}\n");
            if let Some(c) = &report.stages.conditions {
                for r in &c.reports {
                    let key = (r.kernel.alpha, r.kernel.epsilon, r.beta);
                    let lag = |v: &ConditionValue| v.t - v.s;
                    condition_rows(&mut increment, key, &r.increment, lag, r.fitted_gamma1.as_ref().map(|e| &e.fit));
                    condition_rows(&mut tail, key, &r.tail, lag, r.fitted_gamma2.as_ref().map(|e| &e.fit));
                }
                for m in &c.mass {
                    let key = (m.kernel.alpha, m.kernel.epsilon, 0.0);
                    condition_rows(&mut mass, key, &m.values, |v| v.s, m.fit.as_ref());
                }
            }
            files.push(("condition-increment.csv".into(), increment));
            files.push(("condition-mass.csv".into(), mass));
            files.push(("condition-tail.csv".into(), tail));
        }
        Preset::BrownianRegularity | Preset::PoissonRegularity => {
            let mut lag = format!("{LAG_HEADER}\n");
            if let Some(m) = &report.stages.moments {
                for row in &m.lags {
                    let _ = writeln!(
                        lag,
                        "{:e},{:e},{:e},{:e},{:e},{},{},{},{}",
                        row.lag,
                        row.lag.ln(),
                        row.moment,
                        row.moment.ln(),
                        row.stderr,
                        row.pairs,
                        fitted(Some(&m.fit.fit), row.lag),
                        opt(row.discrete_oracle),
                        opt(row.continuous_oracle)
                    );
                }
            }
            files.push(("lag-moment.csv".into(), lag));
            let seminorm = match &report.stages.seminorm {
                Some(s) => scale_rows(&s.campanato),
                None => format!("{SCALE_HEADER}\n"),
            };
            files.push(("seminorm.csv".into(), seminorm));
        }
        Preset::EmbeddingCheck => {
            let (campanato, holder) = match &report.stages.seminorm {
                Some(s) => (
                    scale_rows(&s.campanato),
                    s.holder.as_ref().map(scale_rows).unwrap_or_else(|| format!("{SCALE_HEADER}\n")),
                ),
                None => (format!("{SCALE_HEADER}\n"), format!("{SCALE_HEADER}\n")),
            };
            files.push(("campanato-scales.csv".into(), campanato));
            files.push(("holder-scales.csv".into(), holder));
        }
    }
    PlotBundle { files }
}
