//! Seeded, parallel Monte Carlo runs: RRMSE, interval coverage and GOF
//! rejection rates.
//!
//! A plan is a list of configs; every `(config, n)` pair is a cell, numbered
//! in plan order. Replicate `r` of cell `c` draws from
//! `RngStream::substream(base_seed, c, r)`, and results are reduced in
//! `(cell, replicate)` order, so a report depends only on the plan.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::distributions::{tw0_to_tw, DistributionSpec, Tw0Params, TweedieParams};
use crate::error::{Error, Result};
use crate::estimators::{check_alpha, default_registry, Family};
use crate::laplace_core::Sample;
use crate::rng::RngStream;

pub const DEFAULT_REPLICATIONS: usize = 3500;
pub const DESK_SCALE_REPLICATIONS: usize = 1000;
/// Tolerance multiplier that goes with [`DESK_SCALE_REPLICATIONS`].
pub const DESK_SCALE_TOLERANCE_FACTOR: f64 = 1.9;
/// Cells whose failure rate exceeds this are flagged.
pub const FAILURE_RATE_LIMIT: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Rrmse,
    Coverage,
    Size,
    Power,
}

impl Metric {
    fn needs_fit(self) -> bool {
        matches!(self, Metric::Rrmse | Metric::Coverage)
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Rrmse => "rrmse",
            Metric::Coverage => "coverage",
            Metric::Size => "size",
            Metric::Power => "power",
        })
    }
}

fn default_replications() -> usize {
    DEFAULT_REPLICATIONS
}

fn default_alpha() -> f64 {
    0.05
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub generator: DistributionSpec,
    pub fit_target: String,
    pub n_grid: Vec<usize>,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub base_seed: u64,
    pub metrics: Vec<Metric>,
}

impl ExperimentConfig {
    pub fn new(generator: DistributionSpec, fit_target: &str, n_grid: &[usize], metrics: &[Metric]) -> Self {
        Self {
            generator,
            fit_target: fit_target.to_string(),
            n_grid: n_grid.to_vec(),
            replications: DEFAULT_REPLICATIONS,
            alpha: 0.05,
            base_seed: 0,
            metrics: metrics.to_vec(),
        }
    }

    fn config_error(&self, path: &str, field: &str, message: String) -> Error {
        Error::Config {
            path: format!("{path}.{field}"),
            message,
        }
    }

    /// Checks the invariants and resolves the target family. `path` prefixes
    /// error locations.
    pub fn validate(&self, path: &str) -> Result<&'static dyn Family> {
        let family = default_registry()
            .get(&self.fit_target)
            .map_err(|e| self.config_error(path, "fit_target", e.to_string()))?;
        if self.n_grid.is_empty() {
            return Err(self.config_error(path, "n_grid", "must not be empty".into()));
        }
        if let Some(&n) = self.n_grid.iter().find(|&&n| n == 0) {
            return Err(self.config_error(path, "n_grid", format!("sample size {n} is not positive")));
        }
        if self.replications == 0 {
            return Err(self.config_error(path, "replications", "must be at least 1".into()));
        }
        check_alpha(self.alpha).map_err(|e| self.config_error(path, "alpha", e.to_string()))?;
        if self.metrics.is_empty() {
            return Err(self.config_error(path, "metrics", "must not be empty".into()));
        }
        self.generator
            .validate()
            .map_err(|e| self.config_error(path, "generator", e.to_string()))?;
        if matches!(self.generator, DistributionSpec::Jacobi { .. }) {
            return Err(self.config_error(
                path,
                "generator",
                "the generalized Jacobi law has no sampler".into(),
            ));
        }
        let needs_truth = self.metrics.iter().any(|m| m.needs_fit());
        if needs_truth && family.true_parameters(&self.generator).is_none() {
            return Err(self.config_error(
                path,
                "generator",
                format!(
                    "{} is not a {} law with nonzero parameters; rrmse and coverage need the truth",
                    self.generator,
                    family.name()
                ),
            ));
        }
        Ok(family)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentPlan {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub cells: Vec<ExperimentConfig>,
}

impl ExperimentPlan {
    pub fn single(config: ExperimentConfig) -> Self {
        Self {
            name: None,
            cells: vec![config],
        }
    }

    /// Accepts either a plan `{"cells": [...]}` or a bare config object.
    pub fn from_json(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text).map_err(|e| Error::Config {
            path: "$".into(),
            message: e.to_string(),
        })?;
        let obj = value.as_object().ok_or_else(|| Error::Config {
            path: "$".into(),
            message: "expected a JSON object".into(),
        })?;
        let plan = if obj.contains_key("cells") {
            let name = match obj.get("name") {
                None | Some(Value::Null) => None,
                Some(Value::String(s)) => Some(s.clone()),
                Some(_) => {
                    return Err(Error::Config {
                        path: "$.name".into(),
                        message: "expected a string".into(),
                    })
                }
            };
            if let Some(k) = obj.keys().find(|k| *k != "cells" && *k != "name") {
                return Err(Error::Config {
                    path: format!("$.{k}"),
                    message: "unknown field".into(),
                });
            }
            let cells = obj["cells"].as_array().ok_or_else(|| Error::Config {
                path: "$.cells".into(),
                message: "expected an array".into(),
            })?;
            let cells = cells
                .iter()
                .enumerate()
                .map(|(i, c)| parse_config(c, &format!("$.cells[{i}]")))
                .collect::<Result<Vec<_>>>()?;
            Self { name, cells }
        } else {
            Self::single(parse_config(&value, "$")?)
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<Vec<&'static dyn Family>> {
        if self.cells.is_empty() {
            return Err(Error::Config {
                path: "$.cells".into(),
                message: "plan has no cells".into(),
            });
        }
        self.cells
            .iter()
            .enumerate()
            .map(|(i, c)| c.validate(&format!("$.cells[{i}]")))
            .collect()
    }

    pub fn with_replications(mut self, replications: usize) -> Self {
        for c in &mut self.cells {
            c.replications = replications;
        }
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        for c in &mut self.cells {
            c.base_seed = seed;
        }
        self
    }

    pub fn desk_scale(self) -> Self {
        self.with_replications(DESK_SCALE_REPLICATIONS)
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("plan serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

fn parse_config(value: &Value, path: &str) -> Result<ExperimentConfig> {
    serde_json::from_value(value.clone()).map_err(|e| Error::Config {
        path: path.to_string(),
        message: e.to_string(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellRecord {
    pub spec: String,
    pub family: String,
    pub n: usize,
    pub metric: Metric,
    /// Parameter name for rrmse/coverage; `None` for rejection rates.
    pub parameter: Option<String>,
    /// RRMSE and rejection rates in percent, coverage as a proportion.
    pub value: f64,
    pub mc_se: f64,
    pub replications: usize,
    pub successes: usize,
    pub failures: BTreeMap<String, usize>,
    pub failure_rate: f64,
    pub flagged: bool,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub config_hash: String,
    pub version: String,
    pub plan: ExperimentPlan,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub provenance: Provenance,
    pub records: Vec<CellRecord>,
}

const CSV_HEADER: [&str; 15] = [
    "spec",
    "family",
    "n",
    "metric",
    "parameter",
    "value",
    "mc_se",
    "replications",
    "successes",
    "failures",
    "failure_rate",
    "flagged",
    "seed",
    "config_hash",
    "version",
];

impl ExperimentReport {
    pub fn find(&self, spec: &str, n: usize, metric: Metric, parameter: Option<&str>) -> Option<&CellRecord> {
        self.records.iter().find(|r| {
            r.spec == spec && r.n == n && r.metric == metric && r.parameter.as_deref() == parameter
        })
    }

    pub fn flagged(&self) -> impl Iterator<Item = &CellRecord> {
        self.records.iter().filter(|r| r.flagged)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Io(e.to_string());
        w.write_record(CSV_HEADER).map_err(io)?;
        for r in &self.records {
            let failures = r
                .failures
                .iter()
                .map(|(k, v)| format!("{k}={v}"))
                .collect::<Vec<_>>()
                .join(";");
            w.write_record([
                r.spec.clone(),
                r.family.clone(),
                r.n.to_string(),
                r.metric.to_string(),
                r.parameter.clone().unwrap_or_default(),
                r.value.to_string(),
                r.mc_se.to_string(),
                r.replications.to_string(),
                r.successes.to_string(),
                failures,
                r.failure_rate.to_string(),
                r.flagged.to_string(),
                r.seed.to_string(),
                self.provenance.config_hash.clone(),
                self.provenance.version.clone(),
            ])
            .map_err(io)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }
}

struct Cell<'a> {
    config: &'a ExperimentConfig,
    family: &'static dyn Family,
    n: usize,
    index: u64,
    fit: bool,
    gof: bool,
}

#[derive(Debug, Clone)]
struct Replicate {
    fit: Option<std::result::Result<Vec<(f64, [f64; 2])>, &'static str>>,
    gof: Option<std::result::Result<bool, &'static str>>,
}

fn run_replicate(cell: &Cell<'_>, replicate: u64) -> Replicate {
    let mut rng = RngStream::substream(cell.config.base_seed, cell.index, replicate);
    let sample = cell
        .config
        .generator
        .sample_n(cell.n, &mut rng)
        .and_then(Sample::new);
    let sample = match sample {
        Ok(s) => s,
        Err(e) => {
            let k = e.kind();
            return Replicate {
                fit: cell.fit.then_some(Err(k)),
                gof: cell.gof.then_some(Err(k)),
            };
        }
    };
    let alpha = cell.config.alpha;
    let fit = cell.fit.then(|| {
        cell.family
            .fit(&sample, alpha)
            .map(|f| f.params.iter().map(|p| (p.estimate, p.ci)).collect())
            .map_err(|e| e.kind())
    });
    let gof = cell.gof.then(|| {
        cell.family
            .gof(&sample, alpha)
            .map(|g| g.reject)
            .map_err(|e| e.kind())
    });
    Replicate { fit, gof }
}

fn tally<T>(results: &[&std::result::Result<T, &'static str>]) -> BTreeMap<String, usize> {
    let mut failures = BTreeMap::new();
    for r in results {
        if let Err(k) = r {
            *failures.entry(k.to_string()).or_insert(0) += 1;
        }
    }
    failures
}

fn proportion(hits: usize, total: usize) -> (f64, f64) {
    if total == 0 {
        return (f64::NAN, f64::NAN);
    }
    let p = hits as f64 / total as f64;
    (p, (p * (1.0 - p) / total as f64).sqrt())
}

/// `100 √mean(d²)/|t|` with a delta-method standard error.
fn rrmse(errors: &[f64], truth: f64) -> (f64, f64) {
    let r = errors.len();
    if r == 0 {
        return (f64::NAN, f64::NAN);
    }
    let sq: Vec<f64> = errors.iter().map(|d| d * d).collect();
    let mse = crate::numeric::compensated_mean(&sq);
    let value = 100.0 * mse.sqrt() / truth.abs();
    let var_sq = crate::numeric::sample_variance(&sq);
    let se_mse = (var_sq / r as f64).sqrt();
    let se = if mse > 0.0 {
        100.0 * se_mse / (2.0 * mse.sqrt() * truth.abs())
    } else {
        0.0
    };
    (value, se)
}

fn record(cell: &Cell<'_>, metric: Metric, parameter: Option<&str>) -> CellRecord {
    CellRecord {
        spec: cell.config.generator.to_string(),
        family: cell.family.name().to_string(),
        n: cell.n,
        metric,
        parameter: parameter.map(str::to_string),
        value: f64::NAN,
        mc_se: f64::NAN,
        replications: cell.config.replications,
        successes: 0,
        failures: BTreeMap::new(),
        failure_rate: 0.0,
        flagged: false,
        seed: cell.config.base_seed,
    }
}

fn finish(mut rec: CellRecord, failures: BTreeMap<String, usize>) -> CellRecord {
    let failed: usize = failures.values().sum();
    rec.successes = rec.replications - failed;
    rec.failure_rate = failed as f64 / rec.replications as f64;
    rec.flagged = rec.failure_rate > FAILURE_RATE_LIMIT;
    rec.failures = failures;
    rec
}

fn summarize(cell: &Cell<'_>, reps: &[Replicate], metrics: &[Metric]) -> Vec<CellRecord> {
    let mut out = Vec::new();
    let names = cell.family.parameter_names();
    let truth = cell.family.true_parameters(&cell.config.generator);

    let fits: Vec<_> = reps.iter().filter_map(|r| r.fit.as_ref()).collect();
    let fit_failures = tally(&fits);
    let ok_fits: Vec<&Vec<(f64, [f64; 2])>> = fits.iter().filter_map(|r| r.as_ref().ok()).collect();

    let mut wanted: Vec<Metric> = metrics.to_vec();
    wanted.sort();
    wanted.dedup();
    for metric in wanted {
        match metric {
            Metric::Rrmse | Metric::Coverage => {
                let truth = truth.as_ref().expect("validated: truth exists");
                for (j, name) in names.iter().enumerate() {
                    let mut rec = record(cell, metric, Some(name));
                    let (value, se) = if metric == Metric::Rrmse {
                        let d: Vec<f64> = ok_fits.iter().map(|f| f[j].0 - truth[j]).collect();
                        rrmse(&d, truth[j])
                    } else {
                        let hits = ok_fits
                            .iter()
                            .filter(|f| f[j].1[0] <= truth[j] && truth[j] <= f[j].1[1])
                            .count();
                        proportion(hits, ok_fits.len())
                    };
                    rec.value = value;
                    rec.mc_se = se;
                    out.push(finish(rec, fit_failures.clone()));
                }
            }
            Metric::Size | Metric::Power => {
                // the label follows the generator, whichever of the two was asked for
                let label = if cell.family.contains(&cell.config.generator) {
                    Metric::Size
                } else {
                    Metric::Power
                };
                if out.iter().any(|r: &CellRecord| r.metric == label) {
                    continue;
                }
                let tests: Vec<_> = reps.iter().filter_map(|r| r.gof.as_ref()).collect();
                let failures = tally(&tests);
                let ok: Vec<bool> = tests.iter().filter_map(|r| r.as_ref().ok().copied()).collect();
                let (p, se) = proportion(ok.iter().filter(|&&b| b).count(), ok.len());
                let mut rec = record(cell, label, None);
                rec.value = 100.0 * p;
                rec.mc_se = 100.0 * se;
                out.push(finish(rec, failures));
            }
        }
    }
    out
}

fn run_filtered(plan: &ExperimentPlan, keep: &[Metric]) -> Result<ExperimentReport> {
    let families = plan.validate()?;
    let mut cells = Vec::new();
    let mut index = 0u64;
    for (config, family) in plan.cells.iter().zip(families) {
        let metrics: Vec<Metric> = config.metrics.iter().copied().filter(|m| keep.contains(m)).collect();
        for &n in &config.n_grid {
            // cell numbering ignores the metric filter so seeds stay fixed
            let this = index;
            index += 1;
            if metrics.is_empty() {
                continue;
            }
            cells.push((
                Cell {
                    config,
                    family,
                    n,
                    index: this,
                    fit: metrics.iter().any(|m| m.needs_fit()),
                    gof: metrics.iter().any(|m| !m.needs_fit()),
                },
                metrics.clone(),
            ));
        }
    }

    let tasks: Vec<(usize, u64)> = cells
        .iter()
        .enumerate()
        .flat_map(|(c, (cell, _))| (0..cell.config.replications as u64).map(move |r| (c, r)))
        .collect();
    let results: Vec<Replicate> = tasks
        .par_iter()
        .map(|&(c, r)| run_replicate(&cells[c].0, r))
        .collect();

    let mut records = Vec::new();
    let mut offset = 0;
    for (cell, metrics) in &cells {
        let reps = &results[offset..offset + cell.config.replications];
        offset += cell.config.replications;
        records.extend(summarize(cell, reps, metrics));
    }
    Ok(ExperimentReport {
        provenance: Provenance {
            config_hash: plan.hash(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            plan: plan.clone(),
        },
        records,
    })
}

/// Runs every metric requested by every config.
pub fn run_experiment(plan: &ExperimentPlan) -> Result<ExperimentReport> {
    run_filtered(plan, &[Metric::Rrmse, Metric::Coverage, Metric::Size, Metric::Power])
}

pub fn run_rrmse(config: &ExperimentConfig) -> Result<ExperimentReport> {
    run_filtered(&ExperimentPlan::single(config.clone()), &[Metric::Rrmse])
}

pub fn run_coverage(config: &ExperimentConfig) -> Result<ExperimentReport> {
    run_filtered(&ExperimentPlan::single(config.clone()), &[Metric::Coverage])
}

pub fn run_size_power(config: &ExperimentConfig) -> Result<ExperimentReport> {
    run_filtered(&ExperimentPlan::single(config.clone()), &[Metric::Size, Metric::Power])
}

/// One row of the mean/dispersion/zero-probability conversion table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConversionRow {
    pub model: String,
    pub gamma: f64,
    pub lambda: f64,
    pub theta: f64,
}

pub const CONVERSION_MODELS: [(f64, f64, f64); 3] = [(0.75, 0.5, 0.1), (1.0, 1.0, 0.1), (1.0, 1.25, 0.2)];

pub fn conversion_table() -> Result<Vec<ConversionRow>> {
    CONVERSION_MODELS
        .iter()
        .map(|&(mu, w, p)| {
            let TweedieParams { gamma, lambda, theta } = tw0_to_tw(Tw0Params::new(mu, w, p)?)?;
            Ok(ConversionRow {
                model: format!("tw0:{mu},{w},{p}"),
                gamma,
                lambda,
                theta,
            })
        })
        .collect()
}

/// Formats to `digits` significant digits, trimming nothing.
pub fn format_significant(v: f64, digits: usize) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let magnitude = v.abs().log10().floor() as i32;
    let decimals = (digits as i32 - 1 - magnitude).max(0) as usize;
    format!("{v:.decimals$}")
}

/// A bundled table: either a Monte Carlo plan or the deterministic
/// conversion rows.
#[derive(Debug, Clone, PartialEq)]
pub enum BundledTable {
    Plan(ExperimentPlan),
    Conversions(Vec<ConversionRow>),
}

pub const PS_MODELS: [(f64, f64); 4] = [(0.3, 2.0), (0.4, 5.0), (0.5, 15.0), (0.6, 20.0)];
pub const PS_SIZES: [usize; 3] = [100, 200, 300];
pub const TW_RRMSE_SIZES: [usize; 3] = [500, 1000, 1500];
pub const TW_TEST_SIZES: [usize; 4] = [300, 500, 1000, 1500];
pub const COVERAGE_GAMMAS: [f64; 4] = [0.3, 0.5, 0.7, 0.8];
pub const COVERAGE_SIZES: [usize; 2] = [100, 200];

/// `0.5, 1.0, …, 12.0`.
pub fn coverage_lambdas() -> Vec<f64> {
    (1..=24).map(|k| k as f64 * 0.5).collect()
}

fn specs(list: &[&str]) -> Vec<DistributionSpec> {
    list.iter().map(|s| s.parse().expect("bundled spec parses")).collect()
}

fn ps_specs() -> Vec<DistributionSpec> {
    PS_MODELS
        .iter()
        .map(|&(g, l)| format!("ps:{g},{l}").parse().expect("bundled spec parses"))
        .collect()
}

fn plan(name: &str, generators: Vec<DistributionSpec>, target: &str, n: &[usize], metric: Metric) -> ExperimentPlan {
    ExperimentPlan {
        name: Some(name.to_string()),
        cells: generators
            .into_iter()
            .map(|g| ExperimentConfig::new(g, target, n, &[metric]))
            .collect(),
    }
}

/// Bundled configurations: `"1"`–`"7"` and `"coverage"`.
///
/// 1, 2: RRMSE for the stable and Tweedie models; 3, 4: empirical sizes;
/// 5: power against the stable null; 6: parameter conversions;
/// 7: power against the Tweedie null.
pub fn bundled_table(id: &str) -> Result<BundledTable> {
    let tw_models = || specs(&["tw0:1,1,0.1", "tw0:1,1.25,0.2", "tw:0.5,2,0.5", "tw:0.6,2.5,0.6"]);
    let t = match id.trim() {
        "1" => plan("table-1", ps_specs(), "ps", &PS_SIZES, Metric::Rrmse),
        "2" => plan("table-2", tw_models(), "tweedie", &TW_RRMSE_SIZES, Metric::Rrmse),
        "3" => plan("table-3", ps_specs(), "ps", &PS_SIZES, Metric::Size),
        "4" => {
            let mut g = specs(&["tw0:0.75,0.5,0.1"]);
            g.extend(tw_models());
            plan("table-4", g, "tweedie", &TW_TEST_SIZES, Metric::Size)
        }
        "5" => plan(
            "table-5",
            specs(&[
                "ln:0,1.5",
                "pa:5,2",
                "pa:10,2",
                "li:0.5,2,0.5",
                "li:0.5,2,0.75",
                "lnsqrt:0,1.5",
                "lnsqrt:0,3",
            ]),
            "ps",
            &PS_SIZES,
            Metric::Power,
        ),
        "6" => return conversion_table().map(BundledTable::Conversions),
        "7" => plan(
            "table-7",
            specs(&[
                "ln:0,1",
                "we:5,1",
                "pa:10,2",
                "ln0:1,0.75,0.1",
                "ln0:1,0.75,0.2",
                "ln0:5,1,0.1",
                "ln0:5,1,0.2",
                "we0:3,1,0.1",
                "we0:3,1,0.2",
                "we0:5,1,0.1",
                "we0:5,1,0.2",
                "pa0:5,2,0.1",
                "pa0:5,2,0.2",
                "pa0:10,2,0.1",
            ]),
            "tweedie",
            &TW_TEST_SIZES,
            Metric::Power,
        ),
        "coverage" => {
            let mut g = Vec::new();
            for gamma in COVERAGE_GAMMAS {
                for lambda in coverage_lambdas() {
                    g.push(format!("ps:{gamma},{lambda}").parse().expect("bundled spec parses"));
                }
            }
            plan("coverage", g, "ps", &COVERAGE_SIZES, Metric::Coverage)
        }
        other => {
            return Err(Error::Config {
                path: "--table".into(),
                message: format!("unknown table {other:?}; expected 1-7 or coverage"),
            })
        }
    };
    Ok(BundledTable::Plan(t))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(spec: &str, target: &str, metrics: &[Metric]) -> ExperimentConfig {
        let mut c = ExperimentConfig::new(spec.parse().unwrap(), target, &[60, 80], metrics);
        c.replications = 40;
        c.base_seed = 11;
        c
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let plan = ExperimentPlan::single(small("ps:0.5,2", "ps", &[Metric::Rrmse, Metric::Size]));
        let a = run_experiment(&plan).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| run_experiment(&plan).unwrap());
        assert_eq!(a.to_csv(), b.to_csv());
        assert_eq!(a.to_json(), b.to_json());
    }

    #[test]
    fn record_shape() {
        let plan = ExperimentPlan::single(small("ps:0.5,2", "ps", &[Metric::Rrmse, Metric::Coverage, Metric::Size]));
        let r = run_experiment(&plan).unwrap();
        // per n: 2 rrmse + 2 coverage + 1 size
        assert_eq!(r.records.len(), 10);
        let size = r.find("ps:0.5,2", 60, Metric::Size, None).unwrap();
        assert!(size.value >= 0.0 && size.value <= 100.0);
        assert_eq!(r.to_csv().lines().count(), 11);
    }

    #[test]
    fn power_label_for_alternatives() {
        let r = run_size_power(&small("pa:5,2", "ps", &[Metric::Size])).unwrap();
        assert!(r.records.iter().all(|rec| rec.metric == Metric::Power));
    }

    #[test]
    fn single_replicate_coverage_is_binary() {
        let mut c = small("ps:0.5,2", "ps", &[Metric::Coverage]);
        c.replications = 1;
        let r = run_coverage(&c).unwrap();
        for rec in &r.records {
            assert!(rec.value == 0.0 || rec.value == 1.0 || rec.successes == 0);
        }
    }

    #[test]
    fn mismatched_target_is_config_error() {
        let c = small("pa:5,2", "ps", &[Metric::Rrmse]);
        let e = run_rrmse(&c).unwrap_err();
        assert_eq!(e.kind(), "config_error");
        let c = small("ps:0.5,2", "nope", &[Metric::Size]);
        assert_eq!(run_size_power(&c).unwrap_err().kind(), "config_error");
    }

    #[test]
    fn plan_parsing_reports_paths() {
        let ok = r#"{"generator":"ps:0.5,2","fit_target":"ps","n_grid":[100],"metrics":["rrmse"]}"#;
        let p = ExperimentPlan::from_json(ok).unwrap();
        assert_eq!(p.cells[0].replications, DEFAULT_REPLICATIONS);
        let bad = r#"{"cells":[{"generator":"ps:0.5,2","fit_target":"ps","n_grid":[],"metrics":["size"]}]}"#;
        match ExperimentPlan::from_json(bad).unwrap_err() {
            Error::Config { path, .. } => assert_eq!(path, "$.cells[0].n_grid"),
            e => panic!("{e:?}"),
        }
        let bad = r#"{"cells":[{"generator":"ps:0.5,2","n_grid":[1],"metrics":["size"]}]}"#;
        match ExperimentPlan::from_json(bad).unwrap_err() {
            Error::Config { path, message } => {
                assert_eq!(path, "$.cells[0]");
                assert!(message.contains("fit_target"));
            }
            e => panic!("{e:?}"),
        }
    }

    #[test]
    fn rrmse_delta_method() {
        let (v, se) = rrmse(&[1.0, -1.0, 1.0, -1.0], 2.0);
        assert_eq!(v, 50.0);
        assert_eq!(se, 0.0);
    }

    #[test]
    fn conversions_to_seven_digits() {
        let rows = conversion_table().unwrap();
        let got: Vec<[String; 3]> = rows
            .iter()
            .map(|r| {
                [
                    format_significant(r.gamma, 7),
                    format_significant(r.lambda, 7),
                    format_significant(r.theta, 7),
                ]
            })
            .collect();
        assert_eq!(got[0], ["-1.868961", "60.29735", "5.737921"]);
        assert_eq!(got[1], ["-0.7677042", "3.565768", "1.767704"]);
        assert_eq!(got[2], ["-0.9883402", "2.546270", "1.590672"]);
    }

    #[test]
    fn bundled_tables_validate() {
        for id in ["1", "2", "3", "4", "5", "7", "coverage"] {
            match bundled_table(id).unwrap() {
                BundledTable::Plan(p) => {
                    p.validate().unwrap();
                }
                BundledTable::Conversions(_) => panic!("{id}"),
            }
        }
        assert!(matches!(bundled_table("6").unwrap(), BundledTable::Conversions(_)));
        assert_eq!(bundled_table("8").unwrap_err().kind(), "config_error");
    }
}
