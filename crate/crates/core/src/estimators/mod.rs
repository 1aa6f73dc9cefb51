//! Censored-moment estimators and goodness-of-fit tests.
//!
//! Each family lives in its own module and is exposed to the rest of the
//! crate (the Monte Carlo harness, the CLI) through the [`Family`] trait and
//! the name-keyed [`FamilyRegistry`].

pub mod jacobi;
pub mod ps;
pub mod registry;
pub mod tweedie;

use std::f64::consts::E;

use nalgebra::DMatrix;
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::laplace_core::{censored_moments, CensoredMomentSet, Sample};
use crate::numeric::normal;

pub use registry::{default_registry, Family, FamilyRegistry};

/// Non-fatal conditions attached to a fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Diagnostic {
    GammaOutOfRange,
    ThetaNegative,
    NearSingularPsi,
    ZerosPresent,
    DegenerateSample,
    NegativeVarianceEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GofOutcome {
    pub statistic: f64,
    pub sigma_hat: f64,
    pub z: f64,
    pub p_value: f64,
    pub reject: bool,
    pub alpha: f64,
}

impl GofOutcome {
    /// Standardizes `statistic` by `sigma_hat` and applies the two-sided
    /// normal rejection rule `|z| > z_{1-α/2}`.
    pub fn two_sided(statistic: f64, sigma_hat: f64, alpha: f64) -> Result<Self> {
        if !statistic.is_finite() {
            return Err(Error::NonFiniteEstimate("test statistic".into()));
        }
        if !(sigma_hat.is_finite()) {
            return Err(Error::NonFiniteEstimate("statistic variance".into()));
        }
        if sigma_hat <= 0.0 {
            return Err(Error::DegenerateSample(
                "estimated variance of the test statistic is zero".into(),
            ));
        }
        let z = statistic / sigma_hat;
        Ok(Self {
            statistic,
            sigma_hat,
            z,
            p_value: normal::two_sided_p(z),
            reject: z.abs() > critical_value(alpha),
            alpha,
        })
    }
}

/// `z_{1-α/2}`.
pub fn critical_value(alpha: f64) -> f64 {
    normal::quantile(1.0 - alpha / 2.0)
}

pub fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "alpha must lie in ]0,1[, got {alpha}"
        )))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParamEstimate {
    pub name: &'static str,
    pub estimate: f64,
    pub se: f64,
    pub ci: [f64; 2],
}

/// Family-independent view of a fit, used by the harness and the CLI.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitSummary {
    pub family: &'static str,
    pub n: usize,
    pub a: f64,
    pub alpha: f64,
    pub params: Vec<ParamEstimate>,
    pub cov: Vec<Vec<f64>>,
    pub diagnostics: Vec<Diagnostic>,
}

impl FitSummary {
    pub fn estimates(&self) -> Vec<f64> {
        self.params.iter().map(|p| p.estimate).collect()
    }

    /// Flat JSON object: `<p>_hat`, `se_<p>`, `ci_<p>` per parameter plus the
    /// censoring point and, when given, the goodness-of-fit fields.
    pub fn to_json(&self, gof: Option<&GofOutcome>) -> Value {
        let mut obj = Map::new();
        obj.insert("family".into(), json!(self.family));
        obj.insert("n".into(), json!(self.n));
        for p in &self.params {
            obj.insert(format!("{}_hat", p.name), json_f64(p.estimate));
            obj.insert(format!("se_{}", p.name), json_f64(p.se));
            obj.insert(
                format!("ci_{}", p.name),
                Value::Array(vec![json_f64(p.ci[0]), json_f64(p.ci[1])]),
            );
        }
        obj.insert("a".into(), json_f64(self.a));
        obj.insert("alpha".into(), json!(self.alpha));
        obj.insert(
            "cov".into(),
            Value::Array(
                self.cov
                    .iter()
                    .map(|r| Value::Array(r.iter().map(|&v| json_f64(v)).collect()))
                    .collect(),
            ),
        );
        obj.insert("diagnostics".into(), json!(self.diagnostics));
        let (t, s, z, p, r) = match gof {
            Some(g) => (
                json_f64(g.statistic),
                json_f64(g.sigma_hat),
                json_f64(g.z),
                json_f64(g.p_value),
                json!(g.reject),
            ),
            None => (Value::Null, Value::Null, Value::Null, Value::Null, Value::Null),
        };
        obj.insert("t_stat".into(), t);
        obj.insert("sigma_hat".into(), s);
        obj.insert("z".into(), z);
        obj.insert("p_value".into(), p);
        obj.insert("reject".into(), r);
        Value::Object(obj)
    }
}

/// Finite floats as numbers, anything else as `null`.
pub(crate) fn json_f64(v: f64) -> Value {
    serde_json::Number::from_f64(v).map_or(Value::Null, Value::Number)
}

/// Standard errors `√(Σ_jj/n)` and normal intervals at level `1-α`.
pub(crate) fn interval_estimates(
    names: &'static [&'static str],
    estimates: &[f64],
    cov: &DMatrix<f64>,
    n: usize,
    alpha: f64,
) -> Vec<ParamEstimate> {
    let z = critical_value(alpha);
    names
        .iter()
        .zip(estimates)
        .enumerate()
        .map(|(j, (&name, &estimate))| {
            let se = (cov[(j, j)].max(0.0) / n as f64).sqrt();
            ParamEstimate {
                name,
                estimate,
                se,
                ci: [estimate - z * se, estimate + z * se],
            }
        })
        .collect()
}

pub(crate) fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

/// Shared preconditions: a positive observation exists, the sample is large
/// enough, and the zero fraction is below `1/e`.
pub(crate) fn prepare(sample: &Sample, min_n: usize, r_max: usize) -> Result<CensoredMomentSet> {
    let moments = censored_moments(sample, r_max)?;
    if sample.len() < min_n {
        return Err(Error::SampleTooSmall {
            needed: min_n,
            got: sample.len(),
        });
    }
    if moments.p_hat >= 1.0 / E {
        return Err(Error::Regime {
            p_hat: moments.p_hat,
        });
    }
    Ok(moments)
}

