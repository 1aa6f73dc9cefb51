//! Tweedie `TW(γ, λ, θ)`.
//!
//! The censored moments of a Tweedie law follow from the cumulants of
//! `log L(s) = sgn(γ) λ {θ^γ - (θ + s)^γ}`. Writing
//! `κ_j(s) = |γ| λ (1-γ)_{j-1} (θ + s)^{γ-j}` with the rising factorial
//! `(1-γ)_{j-1}`, the raw censored moments at `a` are
//!
//! * `m_1 = L κ_1`
//! * `m_2 = L (κ_1² + κ_2)`
//! * `m_3 = L (κ_1³ + 3κ_1κ_2 + κ_3)`
//! * `m_4 = L (κ_1⁴ + 6κ_1²κ_2 + 3κ_2² + 4κ_1κ_3 + κ_4)`
//!
//! Inverting the first three at the point where `L = 1/e` gives the
//! parameter map `h(m_1, m_2, m_3, a)`:
//!
//! * `ψ = (m_3 - e² m_1³)/(m_1 m_2 - e m_1³) - 2e - m_2/m_1²`, which equals
//!   `1/(m_1 (θ + a))` at the population;
//! * `γ = 1 - (m_2/m_1² - e)/ψ`;
//! * `θ = -a + 1/(m_1 ψ)`;
//! * `λ = e m_1 |γ|^{-1} (θ + a)^{1-γ}`.
//!
//! The goodness-of-fit statistic is `√n G(m̂_1, m̂_2, m̂_3, A)` with
//! `G = -(1 - a m_1 ψ)^φ - e^{-1}(ψ - m_2/m_1²)`, `φ = γ`, which vanishes at
//! the population. Both Jacobians come from central differences.

use std::f64::consts::E;

use nalgebra::DMatrix;
use serde::Serialize;

use super::{
    check_alpha, interval_estimates, matrix_rows, prepare, Diagnostic, FitSummary, GofOutcome,
};
use crate::distributions::{tweedie_laplace, TweedieParams};
use crate::error::{Error, Result};
use crate::laplace_core::{influence_rows, sample_covariance, CensoredMomentSet, Sample};
use crate::numdiff::{central_gradient, central_jacobian};
use crate::numeric::sample_variance;

pub const MIN_SAMPLE_SIZE: usize = 50;
pub const PARAMETER_NAMES: &[&str] = &["gamma", "lambda", "theta"];
/// Relative size under which a denominator of the parameter map counts as zero.
pub const SINGULAR_TOLERANCE: f64 = 1e-8;
/// Relative size under which `ψ` is flagged as nearly singular.
const NEAR_SINGULAR_FLAG: f64 = 1e-4;

/// Population censoring point `a*` with `L(a*) = 1/e`.
///
/// Requires `λ θ^γ > -sgn(γ)`, i.e. `P(X = 0) < 1/e`.
pub fn tw_censoring_point(params: TweedieParams) -> Result<f64> {
    params.validate()?;
    let TweedieParams {
        gamma,
        lambda,
        theta,
    } = params;
    let sign = params.sign();
    let theta_pow = theta.powf(gamma);
    if !(lambda * theta_pow > -sign) {
        return Err(Error::Regime {
            p_hat: params.zero_probability(),
        });
    }
    if gamma == 1.0 {
        return Ok(1.0 / lambda);
    }
    Ok((1.0 / (sign * lambda) + theta_pow).powf(1.0 / gamma) - theta)
}

/// Exact censored moments `E(X^r e^{-aX})`, `r = 1..4`, and `L(a)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TweedieMoments {
    pub laplace: f64,
    pub m: [f64; 4],
}

impl TweedieMoments {
    pub fn m1(&self) -> f64 {
        self.m[0]
    }
    pub fn m2(&self) -> f64 {
        self.m[1]
    }
    pub fn m3(&self) -> f64 {
        self.m[2]
    }
    pub fn m4(&self) -> f64 {
        self.m[3]
    }
}

pub fn tw_theoretical_censored_moments(params: TweedieParams, a: f64) -> Result<TweedieMoments> {
    params.validate()?;
    if !(a > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "censoring point must be positive, got {a}"
        )));
    }
    let TweedieParams {
        gamma,
        lambda,
        theta,
    } = params;
    let base = theta + a;
    let lead = gamma.abs() * lambda * base.powf(gamma);
    // κ_j = lead · (1-γ)(2-γ)…(j-1-γ) / base^j
    let k1 = lead / base;
    let k2 = k1 * (1.0 - gamma) / base;
    let k3 = k2 * (2.0 - gamma) / base;
    let k4 = k3 * (3.0 - gamma) / base;
    let l = tweedie_laplace(&params, a);
    Ok(TweedieMoments {
        laplace: l,
        m: [
            l * k1,
            l * (k1 * k1 + k2),
            l * (k1.powi(3) + 3.0 * k1 * k2 + k3),
            l * (k1.powi(4) + 6.0 * k1 * k1 * k2 + 3.0 * k2 * k2 + 4.0 * k1 * k3 + k4),
        ],
    })
}

/// `ψ` and its two reciprocal-type companions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PsiPhi {
    pub psi_raw: f64,
    /// `1/ψ`, the aggregate entering the estimators.
    pub phi_inv: f64,
    /// `1 - (m_2/m_1² - e)/ψ`, the exponent of the test statistic (equals `γ̂`).
    pub phi_exp: f64,
}

impl PsiPhi {
    pub fn new(m1: f64, m2: f64, m3: f64) -> Self {
        let psi_raw = psi(m1, m2, m3);
        PsiPhi {
            psi_raw,
            phi_inv: 1.0 / psi_raw,
            phi_exp: 1.0 - (m2 / (m1 * m1) - E) / psi_raw,
        }
    }
}

pub fn psi(m1: f64, m2: f64, m3: f64) -> f64 {
    let m1_cubed = m1 * m1 * m1;
    (m3 - E * E * m1_cubed) / (m1 * m2 - E * m1_cubed) - 2.0 * E - m2 / (m1 * m1)
}

/// Fails when a denominator of the parameter map is numerically zero.
fn check_singularity(m1: f64, m2: f64, m3: f64) -> Result<f64> {
    let m1_cubed = m1 * m1 * m1;
    let denom = m1 * m2 - E * m1_cubed;
    let denom_scale = (m1 * m2).abs().max(E * m1_cubed.abs());
    if !(denom.abs() > SINGULAR_TOLERANCE * denom_scale) {
        return Err(Error::NearSingular(format!(
            "m1 m2 - e m1^3 = {denom:.3e} is numerically zero"
        )));
    }
    let ratio = (m3 - E * E * m1_cubed) / denom;
    let p = ratio - 2.0 * E - m2 / (m1 * m1);
    let psi_scale = ratio.abs().max(2.0 * E).max((m2 / (m1 * m1)).abs());
    if !(p.abs() > SINGULAR_TOLERANCE * psi_scale) {
        return Err(Error::NearSingular(format!("psi = {p:.3e} is numerically zero")));
    }
    Ok(psi_scale)
}

/// `h(m_1, m_2, m_3, a) = (γ, λ, θ)`. Returns NaN components when undefined.
pub fn tweedie_parameter_map(m1: f64, m2: f64, m3: f64, a: f64) -> [f64; 3] {
    let pp = PsiPhi::new(m1, m2, m3);
    let gamma = 1.0 - (m2 / (m1 * m1) - E) * pp.phi_inv;
    let theta = -a + pp.phi_inv / m1;
    let lambda = E * m1 / gamma.abs() * (theta + a).powf(1.0 - gamma);
    [gamma, lambda, theta]
}

/// `G(m_1, m_2, m_3, a) = -(1 - a m_1 ψ)^φ - e^{-1}(ψ - m_2/m_1²)`.
pub fn tweedie_gof_map(m1: f64, m2: f64, m3: f64, a: f64) -> f64 {
    let pp = PsiPhi::new(m1, m2, m3);
    -(1.0 - a * m1 * pp.psi_raw).powf(pp.phi_exp) - (pp.psi_raw - m2 / (m1 * m1)) / E
}

/// 3×4 Jacobian of the parameter map by central differences.
pub fn tweedie_jacobian(m1: f64, m2: f64, m3: f64, a: f64) -> Vec<Vec<f64>> {
    central_jacobian(
        |p| tweedie_parameter_map(p[0], p[1], p[2], p[3]).to_vec(),
        &[m1, m2, m3, a],
    )
}

/// Gradient `(β_1, …, β_4)` of the goodness-of-fit map.
pub fn tweedie_gof_gradient(m1: f64, m2: f64, m3: f64, a: f64) -> Vec<f64> {
    central_gradient(|p| tweedie_gof_map(p[0], p[1], p[2], p[3]), &[m1, m2, m3, a])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TweedieFit {
    pub gamma_hat: f64,
    pub lambda_hat: f64,
    pub theta_hat: f64,
    #[serde(serialize_with = "serialize_matrix")]
    pub cov_hat: DMatrix<f64>,
    pub se: [f64; 3],
    pub ci: [[f64; 2]; 3],
    pub a: f64,
    pub n: usize,
    pub alpha: f64,
    pub psi: PsiPhi,
    pub diagnostics: Vec<Diagnostic>,
}

fn serialize_matrix<S: serde::Serializer>(
    m: &DMatrix<f64>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    matrix_rows(m).serialize(s)
}

pub fn fit_tweedie(sample: &Sample, alpha: f64) -> Result<TweedieFit> {
    check_alpha(alpha)?;
    let moments = prepare(sample, MIN_SAMPLE_SIZE, 4)?;
    fit_from_moments(sample, &moments, alpha)
}

fn fit_from_moments(sample: &Sample, moments: &CensoredMomentSet, alpha: f64) -> Result<TweedieFit> {
    let a = moments.a;
    let (m1, m2, m3) = (moments.m(1), moments.m(2), moments.m(3));
    if sample.is_constant() {
        return Err(Error::DegenerateSample(
            "constant sample: the three-moment map is singular".into(),
        ));
    }
    let psi_scale = check_singularity(m1, m2, m3)?;
    let pp = PsiPhi::new(m1, m2, m3);
    let [gamma_hat, lambda_hat, theta_hat] = tweedie_parameter_map(m1, m2, m3, a);
    for (name, v) in PARAMETER_NAMES.iter().zip([gamma_hat, lambda_hat, theta_hat]) {
        if !v.is_finite() {
            return Err(Error::NonFiniteEstimate(format!("{name} estimate is {v}")));
        }
    }

    let jac = tweedie_jacobian(m1, m2, m3, a);
    let rows = influence_rows(sample, moments, 3)?;
    let components: Vec<Vec<f64>> = jac.iter().map(|j| rows.combine(j)).collect();
    let cov_hat = sample_covariance(&components);
    if cov_hat.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteEstimate("covariance estimate".into()));
    }

    let mut diagnostics = Vec::new();
    if gamma_hat > 1.0 || gamma_hat == 0.0 {
        diagnostics.push(Diagnostic::GammaOutOfRange);
    }
    if theta_hat < 0.0 {
        diagnostics.push(Diagnostic::ThetaNegative);
    }
    if pp.psi_raw.abs() < NEAR_SINGULAR_FLAG * psi_scale {
        diagnostics.push(Diagnostic::NearSingularPsi);
    }
    if sample.zero_count() > 0 {
        diagnostics.push(Diagnostic::ZerosPresent);
    }

    let n = sample.len();
    let est = interval_estimates(
        PARAMETER_NAMES,
        &[gamma_hat, lambda_hat, theta_hat],
        &cov_hat,
        n,
        alpha,
    );
    Ok(TweedieFit {
        gamma_hat,
        lambda_hat,
        theta_hat,
        se: [est[0].se, est[1].se, est[2].se],
        ci: [est[0].ci, est[1].ci, est[2].ci],
        cov_hat,
        a,
        n,
        alpha,
        psi: pp,
        diagnostics,
    })
}

/// `T̃'_n = √n {1 - (θ̂/(θ̂+A))^γ̂ - γ̂/(e m̂_1 (θ̂+A))}` with variance from the
/// gradient of the goodness-of-fit map applied to the influence rows.
pub fn gof_tweedie(sample: &Sample, alpha: f64) -> Result<GofOutcome> {
    check_alpha(alpha)?;
    let moments = prepare(sample, MIN_SAMPLE_SIZE, 4)?;
    if sample.is_constant() {
        return Err(Error::DegenerateSample(
            "constant sample: the three-moment map is singular".into(),
        ));
    }
    let a = moments.a;
    let (m1, m2, m3) = (moments.m(1), moments.m(2), moments.m(3));
    check_singularity(m1, m2, m3)?;
    let pp = PsiPhi::new(m1, m2, m3);
    // λ̂ does not enter the statistic, so it may be undefined here
    let [gamma_hat, _, theta_hat] = tweedie_parameter_map(m1, m2, m3, a);
    for (name, v) in [("gamma", gamma_hat), ("theta", theta_hat)] {
        if !v.is_finite() {
            return Err(Error::NonFiniteEstimate(format!("{name} estimate is {v}")));
        }
    }

    let base = 1.0 - a * m1 * pp.psi_raw;
    let exponent = pp.phi_exp;
    if base < 0.0 && exponent.fract() != 0.0 {
        return Err(Error::ComplexPower { base, exponent });
    }
    let shifted = theta_hat + a;
    let n = sample.len() as f64;
    let statistic = n.sqrt()
        * (1.0 - (theta_hat / shifted).powf(gamma_hat) - gamma_hat / (E * m1 * shifted));

    let beta = tweedie_gof_gradient(m1, m2, m3, a);
    let rows = influence_rows(sample, &moments, 3)?;
    let z = rows.combine(&beta);
    GofOutcome::two_sided(statistic, sample_variance(&z).sqrt(), alpha)
}

impl From<&TweedieFit> for FitSummary {
    fn from(fit: &TweedieFit) -> Self {
        let est = [fit.gamma_hat, fit.lambda_hat, fit.theta_hat];
        FitSummary {
            family: "tweedie",
            n: fit.n,
            a: fit.a,
            alpha: fit.alpha,
            params: PARAMETER_NAMES
                .iter()
                .enumerate()
                .map(|(j, &name)| super::ParamEstimate {
                    name,
                    estimate: est[j],
                    se: fit.se[j],
                    ci: fit.ci[j],
                })
                .collect(),
            cov: matrix_rows(&fit.cov_hat),
            diagnostics: fit.diagnostics.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{laplace_exact, DistributionSpec};
    use approx::assert_relative_eq;

    fn tw(g: f64, l: f64, t: f64) -> TweedieParams {
        TweedieParams::new(g, l, t).unwrap()
    }

    #[test]
    fn censoring_point_examples() {
        let a = tw_censoring_point(tw(0.5, 2.0, 0.5)).unwrap();
        assert_relative_eq!(a, (0.5 + 0.5f64.sqrt()).powi(2) - 0.5, max_relative = 1e-14);
        assert_relative_eq!(a, 0.9571068, max_relative = 1e-7);
        assert_relative_eq!(tw_censoring_point(tw(0.5, 2.0, 0.0)).unwrap(), 0.25, max_relative = 1e-15);

        let p = tw(-0.7677042, 3.565768, 1.767704);
        let a = tw_censoring_point(p).unwrap();
        let l = laplace_exact(&DistributionSpec::Tweedie(p), a).unwrap();
        assert!((l - (-1.0f64).exp()).abs() < 1e-10);
    }

    #[test]
    fn censoring_point_regime() {
        // P(X = 0) = exp(-λθ^γ) = exp(-0.5) > 1/e
        let p = tw(-1.0, 0.5, 1.0);
        assert_eq!(tw_censoring_point(p).unwrap_err().kind(), "regime_error");
        // boundary λθ^γ = 1 is excluded
        assert!(tw_censoring_point(tw(-1.0, 1.0, 1.0)).is_err());
    }

    #[test]
    fn first_censored_moment_example() {
        let p = tw(0.5, 2.0, 0.5);
        let a = tw_censoring_point(p).unwrap();
        let m = tw_theoretical_censored_moments(p, a).unwrap();
        let expected = 0.5 * 2.0 * (-1.0f64).exp() * (0.5 + a).powf(-0.5);
        assert_relative_eq!(m.m1(), expected, max_relative = 1e-12);
        assert_relative_eq!(m.m1(), 0.3047613, max_relative = 1e-6);
    }

    #[test]
    fn degenerate_index_one() {
        let p = tw(1.0, 3.0, 0.0);
        let a = tw_censoring_point(p).unwrap();
        let m = tw_theoretical_censored_moments(p, a).unwrap();
        assert_relative_eq!(m.m2(), m.m1() * 3.0, max_relative = 1e-14);
    }

    #[test]
    fn three_moment_display_agrees_with_cumulants() {
        for p in [tw(0.5, 2.0, 0.5), tw(-0.7677042, 3.565768, 1.767704), tw(0.3, 1.0, 2.0)] {
            for a in [0.2, 0.9, 3.0] {
                let m = tw_theoretical_censored_moments(p, a).unwrap();
                let l = m.laplace;
                let (m1, g, b) = (m.m1(), p.gamma, p.theta + a);
                let m2 = m1 * m1 / l + m1 * (1.0 - g) / b;
                let m3 = m1.powi(3) / (l * l) + m1 * (1.0 - g) / b * (3.0 * m1 / l + (2.0 - g) / b);
                // the equivalent form with E(Y²) inside the brace
                let m3_alt = m1.powi(3) / (l * l) + (1.0 - g) / b * (3.0 * m2 + m1 * (2.0 * g - 1.0) / b);
                assert_relative_eq!(m.m2(), m2, max_relative = 1e-12);
                assert_relative_eq!(m.m3(), m3, max_relative = 1e-12);
                assert_relative_eq!(m.m3(), m3_alt, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn population_round_trip() {
        let p = tw(0.5, 2.0, 0.5);
        let a = tw_censoring_point(p).unwrap();
        let m = tw_theoretical_censored_moments(p, a).unwrap();
        let [g, l, t] = tweedie_parameter_map(m.m1(), m.m2(), m.m3(), a);
        assert_relative_eq!(g, 0.5, max_relative = 1e-9);
        assert_relative_eq!(l, 2.0, max_relative = 1e-9);
        assert_relative_eq!(t, 0.5, max_relative = 1e-9);
        assert!(tweedie_gof_map(m.m1(), m.m2(), m.m3(), a).abs() < 1e-9);
    }

    #[test]
    fn psi_phi_consistency() {
        let pp = PsiPhi::new(0.3, 0.4, 0.9);
        assert!((pp.phi_inv * pp.psi_raw - 1.0).abs() < 1e-10);
        let g1 = tweedie_parameter_map(0.3, 0.4, 0.9, 0.7)[0];
        assert!((g1 - pp.phi_exp).abs() < 1e-10);
    }

    #[test]
    fn all_zero_input_reports_all_zero() {
        let s = Sample::new(vec![0.0; 60]).unwrap();
        assert_eq!(fit_tweedie(&s, 0.05).unwrap_err().kind(), "all_zero_sample");
    }

    #[test]
    fn constant_sample_is_degenerate() {
        let s = Sample::new(vec![2.0; 60]).unwrap();
        assert_eq!(fit_tweedie(&s, 0.05).unwrap_err().kind(), "degenerate_sample");
    }
}
