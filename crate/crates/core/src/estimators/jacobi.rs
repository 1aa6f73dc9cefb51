//! Cosh-type generalized Jacobi law, `L(s) = 1/cosh(s^γ)`, `γ ∈ ]0, 1/2]`.
//!
//! With `c = log(e + √(e² - 1))`, i.e. `cosh(c) = e`, the censoring point is
//! `a* = c^{1/γ}`, so `γ = log(c)/log(a*)` depends on `a*` alone. The first
//! censored moment is `m_1 = c sinh(c) γ / (e² a*)`.
//!
//! Variances come from the joint limit of `(m̂_1, A)`:
//!
//! * `√n(A - a*)` has variance `(L(2a*) - e^{-2})/m_1²`, estimated with the
//!   empirical transform; `γ̂` inherits it through
//!   `dγ/da = -log(c)/(a log²a)`.
//! * `T_n = √n G(m̂_1, A)` with `G(m, a) = m - e^{-2} c sinh(c) log(c)/(a log a)`.
//!   Its variance is the sample variance of `V_1 + (∂G/∂a) W`, where
//!   `∂G/∂m = 1` and `∂G/∂a = e^{-2} c sinh(c) log(c) (1 + log a)/(a log a)²`.

use std::f64::consts::E;

use serde::Serialize;

use super::{check_alpha, critical_value, prepare, Diagnostic, FitSummary, GofOutcome, ParamEstimate};
use crate::error::{Error, Result};
use crate::laplace_core::{empirical_laplace, influence_rows, CensoredMomentSet, Sample};
use crate::numeric::sample_variance;

pub const MIN_SAMPLE_SIZE: usize = 10;
const LOG_DOMAIN_TOLERANCE: f64 = 1e-10;

/// `c = log(e + √(e² - 1))`.
pub fn jacobi_constant() -> f64 {
    (E + (E * E - 1.0).sqrt()).ln()
}

pub fn jacobi_gamma(a: f64) -> f64 {
    jacobi_constant().ln() / a.ln()
}

/// `dγ/da`.
pub fn jacobi_gamma_derivative(a: f64) -> f64 {
    let la = a.ln();
    -jacobi_constant().ln() / (a * la * la)
}

/// `m_1` implied by the fitted law at censoring point `a`.
pub fn jacobi_implied_m1(a: f64) -> f64 {
    let c = jacobi_constant();
    c * c.sinh() * jacobi_gamma(a) / (E * E * a)
}

/// `G(m_1, a) = m_1 - e^{-2} c sinh(c) γ(a)/a`.
pub fn jacobi_gof_map(m1: f64, a: f64) -> f64 {
    m1 - jacobi_implied_m1(a)
}

/// Analytic `(∂G/∂m_1, ∂G/∂a)`.
pub fn jacobi_gof_gradient(_m1: f64, a: f64) -> [f64; 2] {
    let c = jacobi_constant();
    let la = a.ln();
    let k = c * c.sinh() * c.ln() / (E * E);
    [1.0, k * (1.0 + la) / (a * la).powi(2)]
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JacobiFit {
    pub gamma_hat: f64,
    pub se: f64,
    pub ci: [f64; 2],
    pub a: f64,
    pub c: f64,
    pub n: usize,
    pub alpha: f64,
    pub diagnostics: Vec<Diagnostic>,
}

fn check_log_domain(a: f64) -> Result<()> {
    if (a - 1.0).abs() <= LOG_DOMAIN_TOLERANCE {
        Err(Error::LogDomain(a))
    } else {
        Ok(())
    }
}

pub fn fit_jacobi(sample: &Sample, alpha: f64) -> Result<JacobiFit> {
    check_alpha(alpha)?;
    let moments = prepare(sample, MIN_SAMPLE_SIZE, 1)?;
    fit_from_moments(sample, &moments, alpha)
}

fn fit_from_moments(sample: &Sample, moments: &CensoredMomentSet, alpha: f64) -> Result<JacobiFit> {
    let a = moments.a;
    check_log_domain(a)?;
    let c = jacobi_constant();
    let gamma_hat = c.ln() / a.ln();

    let mut diagnostics = Vec::new();
    let m1 = moments.m(1);
    let mut var_a = (empirical_laplace(sample, 2.0 * a) - moments.c_target.powi(2)) / (m1 * m1);
    if var_a < 0.0 {
        diagnostics.push(Diagnostic::NegativeVarianceEstimate);
        var_a = 0.0;
    }
    let n = sample.len();
    let se = jacobi_gamma_derivative(a).abs() * (var_a / n as f64).sqrt();
    let z = critical_value(alpha);

    if !(gamma_hat > 0.0 && gamma_hat <= 0.5) {
        diagnostics.push(Diagnostic::GammaOutOfRange);
    }
    if sample.zero_count() > 0 {
        diagnostics.push(Diagnostic::ZerosPresent);
    }
    if sample.is_constant() {
        diagnostics.push(Diagnostic::DegenerateSample);
    }
    Ok(JacobiFit {
        gamma_hat,
        se,
        ci: [gamma_hat - z * se, gamma_hat + z * se],
        a,
        c,
        n,
        alpha,
        diagnostics,
    })
}

/// `T_n = √n {m̂_1 - e^{-2} c sinh(c) A^{-1} γ̂}`.
pub fn gof_jacobi(sample: &Sample, alpha: f64) -> Result<GofOutcome> {
    check_alpha(alpha)?;
    let moments = prepare(sample, MIN_SAMPLE_SIZE, 2)?;
    let fit = fit_from_moments(sample, &moments, alpha)?;
    let a = moments.a;
    let c = fit.c;
    let m1 = moments.m(1);
    let n = sample.len() as f64;
    let statistic = n.sqrt() * (m1 - c * c.sinh() * fit.gamma_hat / (E * E * a));

    let grad = jacobi_gof_gradient(m1, a);
    let rows = influence_rows(sample, &moments, 1)?;
    let z = rows.combine(&grad);
    GofOutcome::two_sided(statistic, sample_variance(&z).sqrt(), alpha)
}

impl From<&JacobiFit> for FitSummary {
    fn from(fit: &JacobiFit) -> Self {
        FitSummary {
            family: "jacobi",
            n: fit.n,
            a: fit.a,
            alpha: fit.alpha,
            params: vec![ParamEstimate {
                name: "gamma",
                estimate: fit.gamma_hat,
                se: fit.se,
                ci: fit.ci,
            }],
            cov: vec![vec![fit.se * fit.se * fit.n as f64]],
            diagnostics: fit.diagnostics.clone(),
        }
    }
}
