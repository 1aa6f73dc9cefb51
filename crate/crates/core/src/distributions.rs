//! Target and alternative laws: exact samplers, closed-form Laplace
//! transforms, and the Tweedie mean/zero-probability reparametrization.
//!
//! Conventions:
//!
//! * `PS(γ, λ)` has `L(s) = exp(-λ s^γ)`, `γ ∈ ]0, 1]`, `λ > 0`.
//! * `TW(γ, λ, θ)` has `L(s) = exp(sgn(γ) λ {θ^γ - (θ + s)^γ})`. For
//!   `γ ∈ ]0, 1]` it is an exponentially tilted positive stable law, for
//!   `γ < 0` a compound Poisson sum of Gamma(-γ, rate θ) jumps.
//! * `TW0(μ, w, p)` is the same Tweedie law (γ < 0 only) indexed by its mean,
//!   `w = (1 - γ)/θ` and the zero probability `p`.
//! * `LI(γ, λ, δ)` is the positive Linnik law `V^{1/γ} Z` with
//!   `V ~ Gamma(shape 1/δ, scale λ)` and `Z ~ PS(γ, 1)`, so that
//!   `L(s) = (1 + λ s^γ)^{-1/δ}`. The statistics here are scale invariant,
//!   so only `γ` and `δ` affect power.
//! * `Jacobi(γ)` is the cosh-type generalized Jacobi law, `L(s) = 1/cosh(s^γ)`.
//!   No sampler is provided for it.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma, Normal, Open01, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Below this acceptance rate tilted rejection sampling is refused.
pub const MIN_TILTED_ACCEPTANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsParams {
    pub gamma: f64,
    pub lambda: f64,
}

impl PsParams {
    pub fn new(gamma: f64, lambda: f64) -> Result<Self> {
        let p = Self { gamma, lambda };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "positive stable index must lie in ]0, 1], got {}",
                self.gamma
            )));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "positive stable scale must be positive, got {}",
                self.lambda
            )));
        }
        Ok(())
    }

    /// The population censoring point `λ^{-1/γ}` where `L = 1/e`.
    pub fn censoring_point(&self) -> f64 {
        self.lambda.powf(-1.0 / self.gamma)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TweedieParams {
    pub gamma: f64,
    pub lambda: f64,
    pub theta: f64,
}

impl TweedieParams {
    pub fn new(gamma: f64, lambda: f64, theta: f64) -> Result<Self> {
        let p = Self {
            gamma,
            lambda,
            theta,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let Self {
            gamma,
            lambda,
            theta,
        } = *self;
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "Tweedie lambda must be positive, got {lambda}"
            )));
        }
        let stable_branch = gamma > 0.0 && gamma <= 1.0 && theta >= 0.0 && theta.is_finite();
        let poisson_branch = gamma < 0.0 && gamma.is_finite() && theta > 0.0 && theta.is_finite();
        if !(stable_branch || poisson_branch) {
            return Err(Error::InvalidParameter(format!(
                "Tweedie parameters need gamma in ]0,1] with theta >= 0, or gamma < 0 with theta > 0; got gamma={gamma}, theta={theta}"
            )));
        }
        Ok(())
    }

    pub fn sign(&self) -> f64 {
        self.gamma.signum()
    }

    /// `P(X = 0)`: `exp(-λ θ^γ)` on the compound Poisson branch, zero otherwise.
    pub fn zero_probability(&self) -> f64 {
        if self.gamma < 0.0 {
            (-self.lambda * self.theta.powf(self.gamma)).exp()
        } else {
            0.0
        }
    }

    /// Mean `|γ| λ θ^{γ-1}`; infinite for the untilted stable case.
    pub fn mean(&self) -> f64 {
        if self.gamma == 1.0 {
            return self.lambda;
        }
        if self.theta == 0.0 {
            return f64::INFINITY;
        }
        self.gamma.abs() * self.lambda * self.theta.powf(self.gamma - 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tw0Params {
    pub mu: f64,
    pub w: f64,
    pub p: f64,
}

impl Tw0Params {
    pub fn new(mu: f64, w: f64, p: f64) -> Result<Self> {
        let params = Self { mu, w, p };
        tw0_to_tw(params)?;
        Ok(params)
    }
}

/// `TW0(μ, w, p) → TW(γ, λ, θ)`.
///
/// Inverting `μ = |γ| λ θ^{γ-1}`, `w = (1-γ)/θ`, `p = exp(-λ θ^γ)` gives the
/// linear equation `μ (1 - γ) = γ w log p`, hence `γ = μ / (μ + w log p)`.
pub fn tw0_to_tw(p3: Tw0Params) -> Result<TweedieParams> {
    let Tw0Params { mu, w, p } = p3;
    if !(mu > 0.0 && mu.is_finite() && w > 0.0 && w.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "TW0 needs mu > 0 and w > 0, got mu={mu}, w={w}"
        )));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "TW0 zero probability must lie in ]0,1[, got {p}"
        )));
    }
    let denom = mu + w * p.ln();
    if denom >= 0.0 {
        return Err(Error::InvalidRegime(format!(
            "mu + w log p = {denom} >= 0 gives a non-negative Tweedie index"
        )));
    }
    let gamma = mu / denom;
    let theta = (1.0 - gamma) / w;
    let lambda = -p.ln() / theta.powf(gamma);
    TweedieParams::new(gamma, lambda, theta)
}

/// `TW(γ, λ, θ) → TW0(μ, w, p)`; only defined on the compound Poisson branch.
pub fn tw_to_tw0(params: TweedieParams) -> Result<Tw0Params> {
    params.validate()?;
    if params.gamma >= 0.0 {
        return Err(Error::InvalidRegime(format!(
            "TW0 parametrization requires gamma < 0, got {}",
            params.gamma
        )));
    }
    let TweedieParams {
        gamma,
        lambda,
        theta,
    } = params;
    Ok(Tw0Params {
        mu: gamma.abs() * lambda * theta.powf(gamma - 1.0),
        w: (1.0 - gamma) / theta,
        p: (-lambda * theta.powf(gamma)).exp(),
    })
}

/// A generating law, in the canonical text form `tag:f1,f2,...`.
///
/// A trailing `0` on an alternative's tag marks zero inflation with the zero
/// probability as last field (`pa0:5,2,0.1`). `tw0` is the exception: it is
/// the Tweedie mean/zero-probability parametrization.
#[derive(Debug, Clone, PartialEq)]
pub enum DistributionSpec {
    Ps(PsParams),
    Tweedie(TweedieParams),
    Tw0(Tw0Params),
    Jacobi { gamma: f64 },
    Linnik { gamma: f64, lambda: f64, delta: f64 },
    Pareto { alpha: f64, beta: f64 },
    Weibull { k: f64, lambda: f64 },
    LogNormal { mu: f64, sigma: f64 },
    LogNormalSqrt { mu: f64, sigma: f64 },
    ZeroInflated { inner: Box<DistributionSpec>, p: f64 },
}

impl DistributionSpec {
    pub fn tag(&self) -> String {
        match self {
            DistributionSpec::Ps(_) => "ps".into(),
            DistributionSpec::Tweedie(_) => "tw".into(),
            DistributionSpec::Tw0(_) => "tw0".into(),
            DistributionSpec::Jacobi { .. } => "jacobi".into(),
            DistributionSpec::Linnik { .. } => "li".into(),
            DistributionSpec::Pareto { .. } => "pa".into(),
            DistributionSpec::Weibull { .. } => "we".into(),
            DistributionSpec::LogNormal { .. } => "ln".into(),
            DistributionSpec::LogNormalSqrt { .. } => "lnsqrt".into(),
            DistributionSpec::ZeroInflated { inner, .. } => format!("{}0", inner.tag()),
        }
    }

    fn fields(&self) -> Vec<f64> {
        match self {
            DistributionSpec::Ps(p) => vec![p.gamma, p.lambda],
            DistributionSpec::Tweedie(p) => vec![p.gamma, p.lambda, p.theta],
            DistributionSpec::Tw0(p) => vec![p.mu, p.w, p.p],
            DistributionSpec::Jacobi { gamma } => vec![*gamma],
            DistributionSpec::Linnik {
                gamma,
                lambda,
                delta,
            } => vec![*gamma, *lambda, *delta],
            DistributionSpec::Pareto { alpha, beta } => vec![*alpha, *beta],
            DistributionSpec::Weibull { k, lambda } => vec![*k, *lambda],
            DistributionSpec::LogNormal { mu, sigma } => vec![*mu, *sigma],
            DistributionSpec::LogNormalSqrt { mu, sigma } => vec![*mu, *sigma],
            DistributionSpec::ZeroInflated { inner, p } => {
                let mut f = inner.fields();
                f.push(*p);
                f
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        fn positive(name: &str, v: f64) -> Result<()> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!(
                    "{name} must be positive and finite, got {v}"
                )))
            }
        }
        match self {
            DistributionSpec::Ps(p) => p.validate(),
            DistributionSpec::Tweedie(p) => p.validate(),
            DistributionSpec::Tw0(p) => tw0_to_tw(*p).map(|_| ()),
            DistributionSpec::Jacobi { gamma } => {
                if *gamma > 0.0 && *gamma <= 0.5 {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(format!(
                        "Jacobi index must lie in ]0, 1/2], got {gamma}"
                    )))
                }
            }
            DistributionSpec::Linnik {
                gamma,
                lambda,
                delta,
            } => {
                PsParams::new(*gamma, 1.0)?;
                positive("Linnik lambda", *lambda)?;
                positive("Linnik delta", *delta)
            }
            DistributionSpec::Pareto { alpha, beta } => {
                positive("Pareto alpha", *alpha)?;
                positive("Pareto beta", *beta)
            }
            DistributionSpec::Weibull { k, lambda } => {
                positive("Weibull k", *k)?;
                positive("Weibull lambda", *lambda)
            }
            DistributionSpec::LogNormal { mu, sigma }
            | DistributionSpec::LogNormalSqrt { mu, sigma } => {
                if !mu.is_finite() {
                    return Err(Error::InvalidParameter(format!("mu must be finite, got {mu}")));
                }
                positive("sigma", *sigma)
            }
            DistributionSpec::ZeroInflated { inner, p } => {
                if matches!(**inner, DistributionSpec::ZeroInflated { .. }) {
                    return Err(Error::InvalidParameter("nested zero inflation".into()));
                }
                if !(*p >= 0.0 && *p < 1.0) {
                    return Err(Error::InvalidParameter(format!(
                        "zero-inflation probability must lie in [0,1[, got {p}"
                    )));
                }
                inner.validate()
            }
        }
    }

    /// Resolves TW0 to its TW triple; other specs pass through.
    pub fn normalized(&self) -> Result<DistributionSpec> {
        match self {
            DistributionSpec::Tw0(p) => Ok(DistributionSpec::Tweedie(tw0_to_tw(*p)?)),
            other => Ok(other.clone()),
        }
    }

    pub fn sample(&self, rng: &mut RngStream) -> Result<f64> {
        match self {
            DistributionSpec::Ps(p) => Ok(sample_positive_stable(*p, rng)),
            DistributionSpec::Tweedie(p) => sample_tweedie(*p, rng),
            DistributionSpec::Tw0(p) => sample_tweedie(tw0_to_tw(*p)?, rng),
            DistributionSpec::Jacobi { .. } => Err(Error::Unsupported(
                "no sampler is available for the generalized Jacobi law".into(),
            )),
            _ => sample_alternative(self, rng),
        }
    }

    /// `n` independent draws. Tweedie specs are resolved and checked once.
    pub fn sample_n(&self, n: usize, rng: &mut RngStream) -> Result<Vec<f64>> {
        let spec = self.normalized()?;
        if let DistributionSpec::Tweedie(p) = &spec {
            check_tilted_feasible(p)?;
        }
        (0..n).map(|_| spec.sample(rng)).collect()
    }
}

impl fmt::Display for DistributionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let fields: Vec<String> = self.fields().iter().map(|v| format!("{v}")).collect();
        write!(f, "{}:{}", self.tag(), fields.join(","))
    }
}

impl FromStr for DistributionSpec {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let bad = |msg: &str| Error::SpecParse(text.to_string(), msg.to_string());
        let (tag, rest) = text
            .trim()
            .split_once(':')
            .ok_or_else(|| bad("expected tag:values"))?;
        let tag = tag.trim().to_ascii_lowercase();
        let values = rest
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<f64>, _>>()
            .map_err(|e| bad(&format!("bad number: {e}")))?;

        let base = |tag: &str, v: &[f64]| -> Result<DistributionSpec> {
            let arity = |k: usize| {
                if v.len() == k {
                    Ok(())
                } else {
                    Err(bad(&format!("{tag} takes {k} values, got {}", v.len())))
                }
            };
            Ok(match tag {
                "ps" => {
                    arity(2)?;
                    DistributionSpec::Ps(PsParams {
                        gamma: v[0],
                        lambda: v[1],
                    })
                }
                "tw" => {
                    arity(3)?;
                    DistributionSpec::Tweedie(TweedieParams {
                        gamma: v[0],
                        lambda: v[1],
                        theta: v[2],
                    })
                }
                "tw0" => {
                    arity(3)?;
                    DistributionSpec::Tw0(Tw0Params {
                        mu: v[0],
                        w: v[1],
                        p: v[2],
                    })
                }
                "jacobi" => {
                    arity(1)?;
                    DistributionSpec::Jacobi { gamma: v[0] }
                }
                "li" => {
                    arity(3)?;
                    DistributionSpec::Linnik {
                        gamma: v[0],
                        lambda: v[1],
                        delta: v[2],
                    }
                }
                "pa" => {
                    arity(2)?;
                    DistributionSpec::Pareto {
                        alpha: v[0],
                        beta: v[1],
                    }
                }
                "we" => {
                    arity(2)?;
                    DistributionSpec::Weibull {
                        k: v[0],
                        lambda: v[1],
                    }
                }
                "ln" => {
                    arity(2)?;
                    DistributionSpec::LogNormal {
                        mu: v[0],
                        sigma: v[1],
                    }
                }
                "lnsqrt" => {
                    arity(2)?;
                    DistributionSpec::LogNormalSqrt {
                        mu: v[0],
                        sigma: v[1],
                    }
                }
                other => return Err(bad(&format!("unknown tag {other:?}"))),
            })
        };

        let spec = match tag.strip_suffix('0') {
            Some(inner_tag) if tag != "tw0" => {
                let (p, inner_values) = values
                    .split_last()
                    .ok_or_else(|| bad("missing zero probability"))?;
                DistributionSpec::ZeroInflated {
                    inner: Box::new(base(inner_tag, inner_values)?),
                    p: *p,
                }
            }
            _ => base(&tag, &values)?,
        };
        spec.validate()
            .map_err(|e| Error::SpecParse(text.to_string(), e.to_string()))?;
        Ok(spec)
    }
}

impl Serialize for DistributionSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for DistributionSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

/// Kanter's representation of `PS(γ, 1)`:
/// `Z = (K(U)/W)^{(1-γ)/γ}` with `U ~ U(0, π)`, `W ~ Exp(1)` and
/// `K(u) = sin(γu)^{γ/(1-γ)} sin((1-γ)u) / sin(u)^{1/(1-γ)}`.
/// The draw is rescaled by `λ^{1/γ}`. `γ = 1` is the point mass at `λ`.
pub fn sample_positive_stable(params: PsParams, rng: &mut RngStream) -> f64 {
    let PsParams { gamma, lambda } = params;
    if gamma == 1.0 {
        return lambda;
    }
    let u = PI * rng.sample::<f64, _>(Open01);
    let w: f64 = rng.sample(Exp1);
    let one_minus = 1.0 - gamma;
    let log_k = (gamma / one_minus) * (gamma * u).sin().ln() + (one_minus * u).sin().ln()
        - u.sin().ln() / one_minus;
    ((lambda.ln() + one_minus * (log_k - w.ln())) / gamma).exp()
}

fn check_tilted_feasible(params: &TweedieParams) -> Result<()> {
    if params.gamma > 0.0 && params.gamma < 1.0 && params.theta > 0.0 {
        let rate = (-params.lambda * params.theta.powf(params.gamma)).exp();
        if rate < MIN_TILTED_ACCEPTANCE {
            return Err(Error::TiltedRejectionInfeasible { rate });
        }
    }
    Ok(())
}

/// One Tweedie draw.
///
/// * `γ ∈ ]0,1[`, `θ > 0`: propose `Z ~ PS(γ, λ)` and accept with probability
///   `exp(-θZ)`; the acceptance rate is `exp(-λθ^γ)`.
/// * `γ < 0`: `N ~ Poisson(λθ^γ)` jumps of law Gamma(-γ, rate θ). The sum is
///   drawn directly as Gamma(-γN, rate θ).
/// * `θ = 0` uses the positive stable sampler verbatim (same stream usage).
pub fn sample_tweedie(params: TweedieParams, rng: &mut RngStream) -> Result<f64> {
    let TweedieParams {
        gamma,
        lambda,
        theta,
    } = params;
    if gamma == 1.0 {
        return Ok(lambda);
    }
    let stable = PsParams { gamma, lambda };
    if gamma > 0.0 {
        if theta == 0.0 {
            return Ok(sample_positive_stable(stable, rng));
        }
        check_tilted_feasible(&params)?;
        loop {
            let z = sample_positive_stable(stable, rng);
            let u: f64 = rng.random();
            if u < (-theta * z).exp() {
                return Ok(z);
            }
        }
    }
    let rate = lambda * theta.powf(gamma);
    let jumps: f64 = Poisson::new(rate)
        .map_err(|e| Error::InvalidParameter(format!("Poisson rate {rate}: {e}")))?
        .sample(rng);
    if jumps == 0.0 {
        return Ok(0.0);
    }
    let total = Gamma::new(-gamma * jumps, 1.0 / theta)
        .map_err(|e| Error::InvalidParameter(format!("Gamma jump law: {e}")))?;
    Ok(total.sample(rng))
}

/// Draws from the alternative laws (LI, PA, WE, LN, LN^{1/2}) and from
/// zero-inflated wrappers around any sampleable spec.
pub fn sample_alternative(spec: &DistributionSpec, rng: &mut RngStream) -> Result<f64> {
    match spec {
        DistributionSpec::Linnik {
            gamma,
            lambda,
            delta,
        } => {
            let mixing = Gamma::new(1.0 / *delta, *lambda)
                .map_err(|e| Error::InvalidParameter(format!("Linnik mixing law: {e}")))?;
            let v: f64 = mixing.sample(rng);
            let z = sample_positive_stable(
                PsParams {
                    gamma: *gamma,
                    lambda: 1.0,
                },
                rng,
            );
            Ok(v.powf(1.0 / gamma) * z)
        }
        DistributionSpec::Pareto { alpha, beta } => {
            let u: f64 = rng.sample(Open01);
            Ok(beta * u.powf(-1.0 / alpha))
        }
        DistributionSpec::Weibull { k, lambda } => {
            let e: f64 = rng.sample(Exp1);
            Ok(lambda * e.powf(1.0 / k))
        }
        DistributionSpec::LogNormal { mu, sigma } => {
            let x = Normal::new(*mu, *sigma)
                .map_err(|e| Error::InvalidParameter(e.to_string()))?
                .sample(rng);
            Ok(x.exp())
        }
        DistributionSpec::LogNormalSqrt { mu, sigma } => {
            let x = Normal::new(*mu, *sigma)
                .map_err(|e| Error::InvalidParameter(e.to_string()))?
                .sample(rng);
            Ok((x * x).exp())
        }
        DistributionSpec::ZeroInflated { inner, p } => {
            let u: f64 = rng.random();
            if u < *p {
                Ok(0.0)
            } else {
                inner.sample(rng)
            }
        }
        other => Err(Error::Unsupported(format!(
            "{} is not an alternative law",
            other.tag()
        ))),
    }
}

/// Closed-form Laplace transform `E exp(-sX)`.
pub fn laplace_exact(spec: &DistributionSpec, s: f64) -> Result<f64> {
    if !(s >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "Laplace argument must be non-negative, got {s}"
        )));
    }
    match spec {
        DistributionSpec::Ps(p) => Ok((-p.lambda * s.powf(p.gamma)).exp()),
        DistributionSpec::Tweedie(p) => Ok(tweedie_laplace(p, s)),
        DistributionSpec::Tw0(p) => Ok(tweedie_laplace(&tw0_to_tw(*p)?, s)),
        DistributionSpec::Jacobi { gamma } => Ok(1.0 / s.powf(*gamma).cosh()),
        DistributionSpec::Linnik {
            gamma,
            lambda,
            delta,
        } => Ok((1.0 + lambda * s.powf(*gamma)).powf(-1.0 / delta)),
        DistributionSpec::ZeroInflated { inner, p } => {
            Ok(p + (1.0 - p) * laplace_exact(inner, s)?)
        }
        other => Err(Error::Unsupported(format!(
            "no closed-form Laplace transform for {}",
            other.tag()
        ))),
    }
}

pub(crate) fn tweedie_laplace(p: &TweedieParams, s: f64) -> f64 {
    if p.gamma == 1.0 {
        return (-p.lambda * s).exp();
    }
    (p.sign() * p.lambda * (p.theta.powf(p.gamma) - (p.theta + s).powf(p.gamma))).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn degenerate_stable_is_its_scale() {
        let mut rng = RngStream::from_seed(1);
        for _ in 0..10 {
            assert_eq!(sample_positive_stable(PsParams::new(1.0, 3.0).unwrap(), &mut rng), 3.0);
        }
    }

    #[test]
    fn untilted_tweedie_matches_stable_stream() {
        let mut a = RngStream::from_seed(9);
        let mut b = RngStream::from_seed(9);
        let tw = TweedieParams::new(0.5, 2.0, 0.0).unwrap();
        let ps = PsParams::new(0.5, 2.0).unwrap();
        for _ in 0..100 {
            assert_eq!(
                sample_tweedie(tw, &mut a).unwrap().to_bits(),
                sample_positive_stable(ps, &mut b).to_bits()
            );
        }
    }

    #[test]
    fn table_six_conversions() {
        let cases = [
            ((1.0, 1.0, 0.1), (-0.7677042, 3.565768, 1.767704)),
            ((0.75, 0.5, 0.1), (-1.8689607, 60.297348, 5.737921)),
            ((1.0, 1.25, 0.2), (-0.9883402, 2.546270, 1.590672)),
        ];
        for ((mu, w, p), (g, l, t)) in cases {
            let tw = tw0_to_tw(Tw0Params { mu, w, p }).unwrap();
            assert_relative_eq!(tw.gamma, g, max_relative = 5e-7);
            assert_relative_eq!(tw.lambda, l, max_relative = 5e-7);
            assert_relative_eq!(tw.theta, t, max_relative = 5e-7);
        }
    }

    #[test]
    fn tw0_rejects_nonnegative_index() {
        let err = tw0_to_tw(Tw0Params {
            mu: 5.0,
            w: 1.0,
            p: 0.5,
        })
        .unwrap_err();
        assert_eq!(err.kind(), "invalid_regime");
    }

    #[test]
    fn closed_form_transforms() {
        let ps: DistributionSpec = "ps:0.5,2".parse().unwrap();
        assert_relative_eq!(laplace_exact(&ps, 1.0).unwrap(), (-2.0f64).exp(), max_relative = 1e-15);
        assert_eq!(laplace_exact(&ps, 0.0).unwrap(), 1.0);

        let tw: DistributionSpec = "tw:0.5,2,0.5".parse().unwrap();
        let a_star = (0.5 + 0.5f64.sqrt()).powi(2) - 0.5;
        assert_relative_eq!(a_star, 0.9571068, max_relative = 1e-7);
        assert!((laplace_exact(&tw, a_star).unwrap() - (-1.0f64).exp()).abs() < 1e-6);

        let jac = DistributionSpec::Jacobi { gamma: 0.5 };
        let c = (std::f64::consts::E + (std::f64::consts::E.powi(2) - 1.0).sqrt()).ln();
        assert_relative_eq!(c, 1.657454, max_relative = 1e-6);
        assert!((laplace_exact(&jac, c * c).unwrap() - (-1.0f64).exp()).abs() < 1e-6);

        let li: DistributionSpec = "li:0.5,2,0.5".parse().unwrap();
        assert_relative_eq!(laplace_exact(&li, 1.0).unwrap(), 1.0 / 9.0, max_relative = 1e-15);
    }

    #[test]
    fn transforms_without_closed_form_are_unsupported() {
        for text in ["pa:5,2", "we:1,1", "ln:0,1", "lnsqrt:0,1"] {
            let spec: DistributionSpec = text.parse().unwrap();
            assert_eq!(laplace_exact(&spec, 1.0).unwrap_err().kind(), "unsupported");
        }
    }

    #[test]
    fn spec_text_round_trip() {
        for text in [
            "ps:0.5,15",
            "tw:0.5,2,0.5",
            "tw0:1,1,0.1",
            "pa0:5,2,0.1",
            "li:0.5,2,0.75",
            "lnsqrt:0,3",
            "we0:5,1,0.2",
            "jacobi:0.25",
        ] {
            let spec: DistributionSpec = text.parse().unwrap();
            assert_eq!(spec.to_string(), text);
        }
        let zi: DistributionSpec = "pa0:5,2,0.1".parse().unwrap();
        assert!(matches!(zi, DistributionSpec::ZeroInflated { p, .. } if p == 0.1));
    }

    #[test]
    fn bad_specs_are_rejected() {
        for text in ["ps:1.5,2", "ps:0.5", "tw:-0.5,1,0", "foo:1", "pa0:5,2,1.0", "ln:0,-1", "ps"] {
            assert!(text.parse::<DistributionSpec>().is_err(), "{text}");
        }
    }

    #[test]
    fn pareto_support() {
        let spec: DistributionSpec = "pa:5,2".parse().unwrap();
        let mut rng = RngStream::from_seed(3);
        assert!(spec.sample_n(10_000, &mut rng).unwrap().iter().all(|&x| x >= 2.0));
    }

    #[test]
    fn infeasible_tilt_is_refused() {
        let spec = DistributionSpec::Tweedie(TweedieParams::new(0.5, 20.0, 1.0).unwrap());
        let mut rng = RngStream::from_seed(3);
        assert_eq!(
            spec.sample(&mut rng).unwrap_err().kind(),
            "tilted_rejection_infeasible"
        );
    }

    #[test]
    fn jacobi_has_no_sampler() {
        let mut rng = RngStream::from_seed(3);
        assert!(DistributionSpec::Jacobi { gamma: 0.5 }.sample(&mut rng).is_err());
    }
}
