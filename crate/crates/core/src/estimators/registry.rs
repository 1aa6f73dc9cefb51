//! Estimator families behind a common trait, looked up by name at runtime.

use std::fmt;
use std::sync::OnceLock;

use super::jacobi::{fit_jacobi, gof_jacobi};
use super::ps::{fit_ps, gof_ps};
use super::tweedie::{fit_tweedie, gof_tweedie};
use super::{FitSummary, GofOutcome};
use crate::distributions::{tw0_to_tw, DistributionSpec};
use crate::error::{Error, Result};
use crate::laplace_core::Sample;

pub trait Family: Send + Sync + fmt::Debug {
    /// Canonical registry key.
    fn name(&self) -> &'static str;

    fn aliases(&self) -> &'static [&'static str] {
        &[]
    }

    fn parameter_names(&self) -> &'static [&'static str];

    fn min_sample_size(&self) -> usize;

    fn fit(&self, sample: &Sample, alpha: f64) -> Result<FitSummary>;

    fn gof(&self, sample: &Sample, alpha: f64) -> Result<GofOutcome>;

    /// True parameter vector when `spec` is a member of this family with
    /// every parameter nonzero (so relative errors are defined).
    fn true_parameters(&self, spec: &DistributionSpec) -> Option<Vec<f64>>;

    /// Whether data from `spec` satisfy the null hypothesis of the GOF test.
    fn contains(&self, spec: &DistributionSpec) -> bool;
}

#[derive(Debug)]
pub struct PositiveStable;

impl Family for PositiveStable {
    fn name(&self) -> &'static str {
        "ps"
    }

    fn aliases(&self) -> &'static [&'static str] {
        &["stable", "positive-stable"]
    }

    fn parameter_names(&self) -> &'static [&'static str] {
        super::ps::PARAMETER_NAMES
    }

    fn min_sample_size(&self) -> usize {
        super::ps::MIN_SAMPLE_SIZE
    }

    fn fit(&self, sample: &Sample, alpha: f64) -> Result<FitSummary> {
        fit_ps(sample, alpha).map(|f| FitSummary::from(&f))
    }

    fn gof(&self, sample: &Sample, alpha: f64) -> Result<GofOutcome> {
        gof_ps(sample, alpha)
    }

    fn true_parameters(&self, spec: &DistributionSpec) -> Option<Vec<f64>> {
        match spec {
            DistributionSpec::Ps(p) => Some(vec![p.gamma, p.lambda]),
            _ => None,
        }
    }

    fn contains(&self, spec: &DistributionSpec) -> bool {
        matches!(spec, DistributionSpec::Ps(_))
    }
}

#[derive(Debug)]
pub struct Tweedie;

impl Family for Tweedie {
    fn name(&self) -> &'static str {
        "tweedie"
    }

    fn aliases(&self) -> &'static [&'static str] {
        &["tw"]
    }

    fn parameter_names(&self) -> &'static [&'static str] {
        super::tweedie::PARAMETER_NAMES
    }

    fn min_sample_size(&self) -> usize {
        super::tweedie::MIN_SAMPLE_SIZE
    }

    fn fit(&self, sample: &Sample, alpha: f64) -> Result<FitSummary> {
        fit_tweedie(sample, alpha).map(|f| FitSummary::from(&f))
    }

    fn gof(&self, sample: &Sample, alpha: f64) -> Result<GofOutcome> {
        gof_tweedie(sample, alpha)
    }

    fn true_parameters(&self, spec: &DistributionSpec) -> Option<Vec<f64>> {
        let p = match spec {
            DistributionSpec::Tweedie(p) => *p,
            DistributionSpec::Tw0(p) => tw0_to_tw(*p).ok()?,
            _ => return None,
        };
        (p.theta > 0.0).then(|| vec![p.gamma, p.lambda, p.theta])
    }

    fn contains(&self, spec: &DistributionSpec) -> bool {
        matches!(
            spec,
            DistributionSpec::Tweedie(_) | DistributionSpec::Tw0(_) | DistributionSpec::Ps(_)
        )
    }
}

#[derive(Debug)]
pub struct GeneralizedJacobi;

impl Family for GeneralizedJacobi {
    fn name(&self) -> &'static str {
        "jacobi"
    }

    fn parameter_names(&self) -> &'static [&'static str] {
        &["gamma"]
    }

    fn min_sample_size(&self) -> usize {
        super::jacobi::MIN_SAMPLE_SIZE
    }

    fn fit(&self, sample: &Sample, alpha: f64) -> Result<FitSummary> {
        fit_jacobi(sample, alpha).map(|f| FitSummary::from(&f))
    }

    fn gof(&self, sample: &Sample, alpha: f64) -> Result<GofOutcome> {
        gof_jacobi(sample, alpha)
    }

    fn true_parameters(&self, spec: &DistributionSpec) -> Option<Vec<f64>> {
        match spec {
            DistributionSpec::Jacobi { gamma } => Some(vec![*gamma]),
            _ => None,
        }
    }

    fn contains(&self, spec: &DistributionSpec) -> bool {
        matches!(spec, DistributionSpec::Jacobi { .. })
    }
}

#[derive(Debug, Default)]
pub struct FamilyRegistry {
    families: Vec<Box<dyn Family>>,
}

impl FamilyRegistry {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn with_defaults() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(PositiveStable));
        r.register(Box::new(Tweedie));
        r.register(Box::new(GeneralizedJacobi));
        r
    }

    /// Adds a family; a later registration shadows an earlier one with the
    /// same name or alias.
    pub fn register(&mut self, family: Box<dyn Family>) {
        self.families.insert(0, family);
    }

    pub fn get(&self, name: &str) -> Result<&dyn Family> {
        let key = name.trim().to_ascii_lowercase();
        self.families
            .iter()
            .find(|f| f.name() == key || f.aliases().contains(&key.as_str()))
            .map(|f| f.as_ref())
            .ok_or_else(|| {
                Error::Unsupported(format!(
                    "unknown family {name:?}; known: {}",
                    self.names().join(", ")
                ))
            })
    }

    pub fn names(&self) -> Vec<&'static str> {
        let mut names: Vec<_> = self.families.iter().map(|f| f.name()).collect();
        names.sort_unstable();
        names.dedup();
        names
    }
}

/// Process-wide registry with the built-in families.
pub fn default_registry() -> &'static FamilyRegistry {
    static REGISTRY: OnceLock<FamilyRegistry> = OnceLock::new();
    REGISTRY.get_or_init(FamilyRegistry::with_defaults)
}
