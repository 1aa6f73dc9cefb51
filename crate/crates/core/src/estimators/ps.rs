//! Positive stable `PS(γ, λ)`.
//!
//! With `L(a) = exp(-λ a^γ)` one has `E(X e^{-aX}) = -(γ/a) L(a) log L(a)`,
//! so at the point `a*` where `L = 1/e`:
//!
//! * `a* = λ^{-1/γ}`,
//! * `γ = e · m_1 · a*` and `λ = a*^{-γ}`,
//! * `m_1 = a* · m_2`, which is what the goodness-of-fit statistic
//!   `T_n = √n (A m̂_2 - m̂_1)` checks.

use std::f64::consts::E;

use nalgebra::DMatrix;
use serde::Serialize;

use super::{
    check_alpha, interval_estimates, matrix_rows, prepare, Diagnostic, FitSummary, GofOutcome,
    ParamEstimate,
};
use crate::error::{Error, Result};
use crate::laplace_core::{sample_covariance, CensoredMomentSet, Sample};
use crate::numeric::sample_variance;

pub const MIN_SAMPLE_SIZE: usize = 10;
pub const PARAMETER_NAMES: &[&str] = &["gamma", "lambda"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PsFit {
    pub gamma_hat: f64,
    pub lambda_hat: f64,
    #[serde(serialize_with = "serialize_matrix")]
    pub cov_hat: DMatrix<f64>,
    pub se: [f64; 2],
    pub ci: [[f64; 2]; 2],
    pub a: f64,
    pub n: usize,
    pub alpha: f64,
    pub diagnostics: Vec<Diagnostic>,
}

fn serialize_matrix<S: serde::Serializer>(
    m: &DMatrix<f64>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    use serde::Serialize;
    matrix_rows(m).serialize(s)
}

/// `(γ, λ) = (e m_1 a, a^{-γ})`.
pub fn ps_parameter_map(m1: f64, a: f64) -> (f64, f64) {
    let gamma = E * m1 * a;
    (gamma, a.powf(-gamma))
}

pub fn fit_ps(sample: &Sample, alpha: f64) -> Result<PsFit> {
    check_alpha(alpha)?;
    let moments = prepare(sample, MIN_SAMPLE_SIZE, 1)?;
    Ok(fit_from_moments(sample, &moments, alpha))
}

fn fit_from_moments(sample: &Sample, moments: &CensoredMomentSet, alpha: f64) -> PsFit {
    let a = moments.a;
    let (gamma_hat, lambda_hat) = ps_parameter_map(moments.m(1), a);

    let log_a = a.ln();
    let n = sample.len();
    let mut gamma_rows = Vec::with_capacity(n);
    let mut lambda_rows = Vec::with_capacity(n);
    for &x in sample.values() {
        let e = (1.0 - a * x).exp();
        gamma_rows.push(a * x * e);
        lambda_rows.push(-lambda_hat * e * (x * a * log_a + 1.0));
    }
    let cov_hat = sample_covariance(&[gamma_rows, lambda_rows]);

    let mut diagnostics = Vec::new();
    if !(gamma_hat > 0.0 && gamma_hat <= 1.0) {
        diagnostics.push(Diagnostic::GammaOutOfRange);
    }
    if sample.zero_count() > 0 {
        diagnostics.push(Diagnostic::ZerosPresent);
    }
    if sample.is_constant() {
        diagnostics.push(Diagnostic::DegenerateSample);
    }

    let est = interval_estimates(PARAMETER_NAMES, &[gamma_hat, lambda_hat], &cov_hat, n, alpha);
    PsFit {
        gamma_hat,
        lambda_hat,
        se: [est[0].se, est[1].se],
        ci: [est[0].ci, est[1].ci],
        cov_hat,
        a,
        n,
        alpha,
        diagnostics,
    }
}

/// `T_n = √n (A m̂_2 - m̂_1)` standardized by the sample standard deviation of
/// `Z_i = e^{-A x_i} {(A m̂_3 - 2 m̂_2)/m̂_1 + x_i (1 - A x_i)}`.
pub fn gof_ps(sample: &Sample, alpha: f64) -> Result<GofOutcome> {
    check_alpha(alpha)?;
    let moments = prepare(sample, MIN_SAMPLE_SIZE, 3)?;
    if sample.is_constant() {
        return Err(Error::DegenerateSample(
            "constant sample: the statistic has no variance".into(),
        ));
    }
    let a = moments.a;
    let (m1, m2, m3) = (moments.m(1), moments.m(2), moments.m(3));
    let n = sample.len() as f64;
    let statistic = n.sqrt() * (a * m2 - m1);
    let shift = (a * m3 - 2.0 * m2) / m1;
    let z: Vec<f64> = sample
        .values()
        .iter()
        .map(|&x| (-a * x).exp() * (shift + x * (1.0 - a * x)))
        .collect();
    GofOutcome::two_sided(statistic, sample_variance(&z).sqrt(), alpha)
}

impl From<&PsFit> for FitSummary {
    fn from(fit: &PsFit) -> Self {
        FitSummary {
            family: "ps",
            n: fit.n,
            a: fit.a,
            alpha: fit.alpha,
            params: vec![
                ParamEstimate {
                    name: "gamma",
                    estimate: fit.gamma_hat,
                    se: fit.se[0],
                    ci: fit.ci[0],
                },
                ParamEstimate {
                    name: "lambda",
                    estimate: fit.lambda_hat,
                    se: fit.se[1],
                    ci: fit.ci[1],
                },
            ],
            cov: matrix_rows(&fit.cov_hat),
            diagnostics: fit.diagnostics.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{DistributionSpec, PsParams};
    use crate::rng::RngStream;
    use approx::assert_relative_eq;

    #[test]
    fn constant_sample_is_degenerate_stable() {
        let k = 4.0;
        let s = Sample::new(vec![k; 20]).unwrap();
        let fit = fit_ps(&s, 0.05).unwrap();
        assert_relative_eq!(fit.gamma_hat, 1.0, max_relative = 1e-11);
        assert_relative_eq!(fit.lambda_hat, k, max_relative = 1e-10);
        assert!(fit.diagnostics.contains(&Diagnostic::DegenerateSample));
        assert!(fit.cov_hat.iter().all(|v| v.abs() < 1e-20));
        assert_eq!(gof_ps(&s, 0.05).unwrap_err().kind(), "degenerate_sample");
    }

    #[test]
    fn construction_identities_hold_bitwise() {
        let spec = DistributionSpec::Ps(PsParams::new(0.4, 5.0).unwrap());
        let s = Sample::new(spec.sample_n(500, &mut RngStream::from_seed(5)).unwrap()).unwrap();
        let fit = fit_ps(&s, 0.05).unwrap();
        let m = crate::laplace_core::censored_moments(&s, 1).unwrap();
        assert_eq!(fit.a.to_bits(), m.a.to_bits());
        assert_eq!(fit.gamma_hat.to_bits(), (E * m.m(1) * m.a).to_bits());
        assert_eq!(fit.lambda_hat.to_bits(), m.a.powf(-fit.gamma_hat).to_bits());
    }

    #[test]
    fn population_round_trip() {
        for &(g, l) in &[(0.3, 2.0), (0.5, 15.0), (0.8, 0.7), (1.0, 3.0)] {
            let p = PsParams::new(g, l).unwrap();
            let a = p.censoring_point();
            let m1 = g / (E * a);
            let (gh, lh) = ps_parameter_map(m1, a);
            assert_relative_eq!(gh, g, max_relative = 1e-12);
            assert_relative_eq!(lh, l, max_relative = 1e-12);
        }
    }

    #[test]
    fn regime_and_size_errors() {
        let mut v = vec![0.0; 4];
        v.extend([1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let s = Sample::new(v).unwrap();
        assert_eq!(fit_ps(&s, 0.05).unwrap_err().kind(), "regime_error");
        let small = Sample::new(vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(fit_ps(&small, 0.05).unwrap_err().kind(), "sample_too_small");
        let ok = Sample::new((1..=20).map(f64::from).collect()).unwrap();
        assert_eq!(fit_ps(&ok, 1.5).unwrap_err().kind(), "invalid_parameter");
    }

    #[test]
    fn zeros_are_flagged_but_fit() {
        let mut v: Vec<f64> = (1..=20).map(f64::from).collect();
        v[0] = 0.0;
        let fit = fit_ps(&Sample::new(v).unwrap(), 0.05).unwrap();
        assert!(fit.diagnostics.contains(&Diagnostic::ZerosPresent));
    }
}
