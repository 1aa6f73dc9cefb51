//! Empirical Laplace transform, the data-driven censoring point `A`,
//! censored empirical moments and the influence rows whose sample covariance
//! estimates the joint limit law of `(m̂_1, …, m̂_k, A)`.
//!
//! For a sample `x_1..x_n` the censored moments at `a` are
//! `m̂_r = (1/n) Σ x_i^r e^{-a x_i}`; they estimate `E(X^r e^{-aX})`, which is
//! finite for every `r` even when `X` has no mean. `A` solves
//! `L_n(A) = c` with `c = 1/e`, or `c = (1 + (e-1) p̂)/e` when the zero
//! fraction `p̂` reaches `1/e`.
//!
//! The influence rows are
//! `V_{r,i} = e^{-A x_i} (x_i^r - m̂_{r+1}/m̂_1)` and `W_i = e^{-A x_i}/m̂_1`.

use std::f64::consts::E;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;

/// Relative tolerance on `|L_n(A) - c| / c`.
pub const SOLVER_TOLERANCE: f64 = 1e-12;
const SOLVER_MAX_ITER: usize = 80;
const MAX_DOUBLINGS: usize = 2100;

/// A validated vector of non-negative observations.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    values: Vec<f64>,
    zero_count: usize,
    max: f64,
    positive_median: Option<f64>,
}

impl Sample {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySample);
        }
        for (i, &x) in values.iter().enumerate() {
            let reason = if x.is_nan() {
                Some("not a number")
            } else if x.is_infinite() {
                Some("infinite")
            } else if x < 0.0 {
                Some("negative")
            } else {
                None
            };
            if let Some(reason) = reason {
                return Err(Error::InvalidValue {
                    row: i + 1,
                    value: x.to_string(),
                    reason,
                });
            }
        }
        let zero_count = values.iter().filter(|&&x| x == 0.0).count();
        let max = values.iter().copied().fold(0.0, f64::max);
        let mut positive: Vec<f64> = values.iter().copied().filter(|&x| x > 0.0).collect();
        let positive_median = if positive.is_empty() {
            None
        } else {
            let mid = positive.len() / 2;
            let (_, m, _) = positive.select_nth_unstable_by(mid, f64::total_cmp);
            Some(*m)
        };
        Ok(Self {
            values,
            zero_count,
            max,
            positive_median,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn zero_count(&self) -> usize {
        self.zero_count
    }

    /// Fraction of exact zeros.
    pub fn zero_fraction(&self) -> f64 {
        self.zero_count as f64 / self.len() as f64
    }

    pub fn max(&self) -> f64 {
        self.max
    }

    pub fn is_constant(&self) -> bool {
        let first = self.values[0];
        self.values.iter().all(|&x| x == first)
    }

    /// Multiplies every observation by `k > 0`.
    pub fn scaled(&self, k: f64) -> Result<Self> {
        Sample::new(self.values.iter().map(|x| x * k).collect())
    }
}

/// `L_n(s) = (1/n) Σ e^{-s x_i}`.
pub fn empirical_laplace(sample: &Sample, s: f64) -> f64 {
    let mut acc = CompensatedSum::new();
    for &x in sample.values() {
        acc.add((-s * x).exp());
    }
    acc.value() / sample.len() as f64
}

/// `(L_n(s), L_n'(s))` in one pass.
fn laplace_and_slope(sample: &Sample, s: f64) -> (f64, f64) {
    let mut value = CompensatedSum::new();
    let mut slope = CompensatedSum::new();
    for &x in sample.values() {
        let e = (-s * x).exp();
        value.add(e);
        slope.add(-x * e);
    }
    let n = sample.len() as f64;
    (value.value() / n, slope.value() / n)
}

/// Target level for `L_n(A)` given the zero fraction.
pub fn censoring_target(p_hat: f64) -> f64 {
    if p_hat < 1.0 / E {
        1.0 / E
    } else {
        (1.0 + (E - 1.0) * p_hat) / E
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CensoringPoint {
    pub a: f64,
    pub c_target: f64,
    pub p_hat: f64,
    /// `|L_n(A) - c_target|`.
    pub residual: f64,
    pub iterations: usize,
}

/// Solves `L_n(A) = c_target`.
///
/// `L_n` is strictly decreasing from 1 towards `p̂` as soon as one observation
/// is positive, so the root is bracketed by doubling from `1/median(x > 0)`
/// and then refined by Newton steps that fall back to bisection whenever they
/// leave the bracket.
pub fn solve_censoring_point(sample: &Sample) -> Result<CensoringPoint> {
    let median = sample.positive_median.ok_or(Error::AllZeroSample)?;
    let p_hat = sample.zero_fraction();
    let c = censoring_target(p_hat);
    let tol = SOLVER_TOLERANCE * c;

    let mut lo = 0.0;
    let mut hi = 1.0 / median;
    let mut doublings = 0;
    loop {
        let (l, _) = laplace_and_slope(sample, hi);
        if l < c {
            break;
        }
        if (l - c).abs() <= tol {
            return Ok(CensoringPoint {
                a: hi,
                c_target: c,
                p_hat,
                residual: (l - c).abs(),
                iterations: 0,
            });
        }
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if doublings > MAX_DOUBLINGS || !hi.is_finite() {
            return Err(Error::DegenerateSample(
                "could not bracket the censoring point".into(),
            ));
        }
    }

    // Start from the left end: L_n is convex, so Newton from the left
    // approaches the root monotonically.
    let mut s = lo;
    let mut best = (f64::INFINITY, s);
    for iter in 1..=SOLVER_MAX_ITER {
        let (l, slope) = laplace_and_slope(sample, s);
        let f = l - c;
        if f.abs() < best.0 {
            best = (f.abs(), s);
        }
        if f.abs() <= tol {
            return Ok(CensoringPoint {
                a: s,
                c_target: c,
                p_hat,
                residual: f.abs(),
                iterations: iter,
            });
        }
        if f > 0.0 {
            lo = s;
        } else {
            hi = s;
        }
        let newton = if slope < 0.0 { s - f / slope } else { f64::NAN };
        let next = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if next == s {
            break;
        }
        s = next;
    }
    Ok(CensoringPoint {
        a: best.1,
        c_target: c,
        p_hat,
        residual: best.0,
        iterations: SOLVER_MAX_ITER,
    })
}

/// Censored empirical moments `m̂_0..m̂_{r_max}` at the solved `A`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CensoredMomentSet {
    pub a: f64,
    pub c_target: f64,
    pub p_hat: f64,
    pub m_hat: Vec<f64>,
}

impl CensoredMomentSet {
    /// `m̂_r`; panics if `r` exceeds the computed order.
    pub fn m(&self, r: usize) -> f64 {
        self.m_hat[r]
    }

    pub fn r_max(&self) -> usize {
        self.m_hat.len() - 1
    }
}

pub const MAX_MOMENT_ORDER: usize = 4;

pub fn censored_moments(sample: &Sample, r_max: usize) -> Result<CensoredMomentSet> {
    let point = solve_censoring_point(sample)?;
    let m_hat = censored_moments_at(sample, point.a, r_max)?;
    Ok(CensoredMomentSet {
        a: point.a,
        c_target: point.c_target,
        p_hat: point.p_hat,
        m_hat,
    })
}

/// `m̂_0..m̂_{r_max}` at a fixed censoring point, computed in one pass.
pub fn censored_moments_at(sample: &Sample, a: f64, r_max: usize) -> Result<Vec<f64>> {
    if r_max > MAX_MOMENT_ORDER {
        return Err(Error::InvalidParameter(format!(
            "censored moments are computed up to order {MAX_MOMENT_ORDER}, requested {r_max}"
        )));
    }
    let mut acc = vec![CompensatedSum::new(); r_max + 1];
    for &x in sample.values() {
        let mut term = (-a * x).exp();
        for slot in acc.iter_mut() {
            slot.add(term);
            term *= x;
        }
    }
    let n = sample.len() as f64;
    Ok(acc.iter().map(|s| s.value() / n).collect())
}

/// Per-observation influence vectors `(V_1, …, V_k, W)`.
#[derive(Debug, Clone, PartialEq)]
pub struct InfluenceRows {
    k: usize,
    /// Column-major: `columns[r-1]` holds `V_r`, `columns[k]` holds `W`.
    columns: Vec<Vec<f64>>,
}

impl InfluenceRows {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.columns[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `V_r` for `r` in `1..=k`.
    pub fn v(&self, r: usize) -> &[f64] {
        assert!(r >= 1 && r <= self.k, "V index {r} out of 1..={}", self.k);
        &self.columns[r - 1]
    }

    pub fn w(&self) -> &[f64] {
        &self.columns[self.k]
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    /// `Σ_j coef_j column_j` for each observation.
    pub fn combine(&self, coef: &[f64]) -> Vec<f64> {
        assert_eq!(coef.len(), self.k + 1);
        (0..self.len())
            .map(|i| {
                coef.iter()
                    .zip(&self.columns)
                    .map(|(c, col)| c * col[i])
                    .sum()
            })
            .collect()
    }

    /// Sample covariance of the rows, `(k+1) × (k+1)`.
    pub fn covariance(&self) -> DMatrix<f64> {
        sample_covariance(&self.columns)
    }
}

pub const MAX_INFLUENCE_ORDER: usize = 3;

pub fn influence_rows(
    sample: &Sample,
    moments: &CensoredMomentSet,
    k: usize,
) -> Result<InfluenceRows> {
    if k == 0 || k > MAX_INFLUENCE_ORDER {
        return Err(Error::InvalidParameter(format!(
            "influence order must lie in 1..={MAX_INFLUENCE_ORDER}, got {k}"
        )));
    }
    if moments.r_max() < k + 1 {
        return Err(Error::InvalidParameter(format!(
            "influence rows of order {k} need censored moments through {}",
            k + 1
        )));
    }
    let m1 = moments.m(1);
    if m1 == 0.0 {
        return Err(Error::DegenerateMoments);
    }
    let a = moments.a;
    let ratios: Vec<f64> = (1..=k).map(|r| moments.m(r + 1) / m1).collect();
    let n = sample.len();
    let mut columns = vec![Vec::with_capacity(n); k + 1];
    for &x in sample.values() {
        let e = (-a * x).exp();
        let mut xr = x;
        for r in 0..k {
            columns[r].push(e * (xr - ratios[r]));
            xr *= x;
        }
        columns[k].push(e / m1);
    }
    Ok(InfluenceRows { k, columns })
}

/// Unbiased (`1/(n-1)`) sample covariance of equally long columns.
pub fn sample_covariance(columns: &[Vec<f64>]) -> DMatrix<f64> {
    let d = columns.len();
    let n = columns.first().map_or(0, Vec::len);
    let mut out = DMatrix::zeros(d, d);
    if n < 2 {
        return out;
    }
    let means: Vec<f64> = columns
        .iter()
        .map(|c| crate::numeric::compensated_mean(c))
        .collect();
    for j in 0..d {
        for l in j..d {
            let mut acc = CompensatedSum::new();
            for i in 0..n {
                acc.add((columns[j][i] - means[j]) * (columns[l][i] - means[l]));
            }
            let v = acc.value() / (n - 1) as f64;
            out[(j, l)] = v;
            out[(l, j)] = v;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sample(v: &[f64]) -> Sample {
        Sample::new(v.to_vec()).unwrap()
    }

    #[test]
    fn sample_validation_reports_rows() {
        let err = Sample::new(vec![1.0, 2.0, -3.0]).unwrap_err();
        assert_eq!(
            err,
            Error::InvalidValue {
                row: 3,
                value: "-3".into(),
                reason: "negative"
            }
        );
        assert!(Sample::new(vec![f64::NAN]).is_err());
        assert!(Sample::new(vec![f64::INFINITY]).is_err());
        assert_eq!(Sample::new(vec![]).unwrap_err(), Error::EmptySample);
        assert_eq!(sample(&[0.0, 1.0, 0.0]).zero_count(), 2);
    }

    #[test]
    fn empirical_laplace_examples() {
        let s = sample(&[3.0, 0.5, 7.0]);
        assert_eq!(empirical_laplace(&s, 0.0), 1.0);
        assert_relative_eq!(
            empirical_laplace(&sample(&[1.0; 4]), 1.0),
            (-1.0f64).exp(),
            max_relative = 1e-15
        );
        assert_relative_eq!(
            empirical_laplace(&sample(&[0.0, 2.0]), 2f64.ln()),
            0.625,
            max_relative = 1e-15
        );
    }

    #[test]
    fn constant_sample_solves_to_reciprocal() {
        let k = 2.5;
        let point = solve_censoring_point(&sample(&[k; 7])).unwrap();
        assert_relative_eq!(point.a, 1.0 / k, max_relative = 1e-12);
        assert_eq!(point.c_target, 1.0 / E);
    }

    #[test]
    fn heavy_zero_inflation_uses_adjusted_target() {
        let mut v = vec![0.0; 9];
        v.push(1.0);
        let point = solve_censoring_point(&sample(&v)).unwrap();
        let c = (1.0 + (E - 1.0) * 0.9) / E;
        assert_relative_eq!(point.c_target, c, max_relative = 1e-15);
        assert_relative_eq!(point.c_target, 0.9367879, max_relative = 1e-7);
        // c - 0.9 = 0.1/e, so the two-atom transform 0.9 + 0.1 e^{-A} hits c at A = 1
        let a = -(10.0 * (c - 0.9)).ln();
        assert_relative_eq!(a, 1.0, max_relative = 1e-14);
        assert_relative_eq!(point.a, a, max_relative = 1e-9);
    }

    #[test]
    fn all_zero_sample_has_no_censoring_point() {
        assert_eq!(
            solve_censoring_point(&sample(&[0.0; 5])).unwrap_err(),
            Error::AllZeroSample
        );
        assert_eq!(
            censored_moments(&sample(&[0.0; 5]), 2).unwrap_err(),
            Error::AllZeroSample
        );
    }

    #[test]
    fn constant_sample_moments() {
        let k = 3.0;
        let m = censored_moments(&sample(&[k; 5]), 4).unwrap();
        for r in 0..=4 {
            assert_relative_eq!(m.m(r), k.powi(r as i32) / E, max_relative = 1e-11);
        }
    }

    #[test]
    fn influence_rows_two_point_example() {
        let s = sample(&[0.0, 2.0]);
        let a = 2f64.ln();
        let m_hat = censored_moments_at(&s, a, 3).unwrap();
        assert_relative_eq!(m_hat[1], 0.25, max_relative = 1e-15);
        assert_relative_eq!(m_hat[2], 0.5, max_relative = 1e-15);
        let moments = CensoredMomentSet {
            a,
            c_target: 0.625,
            p_hat: 0.5,
            m_hat,
        };
        let rows = influence_rows(&s, &moments, 1).unwrap();
        assert_relative_eq!(rows.v(1)[0], -2.0, max_relative = 1e-14);
        assert!(rows.v(1)[1].abs() < 1e-15);
        let mean_w = crate::numeric::compensated_mean(rows.w());
        assert_relative_eq!(mean_w, moments.m(0) / moments.m(1), max_relative = 1e-12);

        // 2x2 covariance of {(-2, w1), (0, w2)} by hand
        let (w1, w2) = (rows.w()[0], rows.w()[1]);
        let cov = rows.covariance();
        let dv = [-1.0, 1.0];
        let dw = [(w1 - w2) / 2.0, (w2 - w1) / 2.0];
        assert_relative_eq!(cov[(0, 0)], dv[0] * dv[0] + dv[1] * dv[1], max_relative = 1e-14);
        assert_relative_eq!(cov[(0, 1)], dv[0] * dw[0] + dv[1] * dw[1], max_relative = 1e-14);
        assert_relative_eq!(cov[(1, 1)], dw[0] * dw[0] + dw[1] * dw[1], max_relative = 1e-14);
    }

    #[test]
    fn constant_rows_give_zero_covariance() {
        let s = sample(&[4.0; 6]);
        let m = censored_moments(&s, 4).unwrap();
        let rows = influence_rows(&s, &m, 3).unwrap();
        for r in 1..=3 {
            assert!(rows.v(r).iter().all(|v| v.abs() < 1e-12));
        }
        assert!(rows.covariance().iter().all(|v| v.abs() < 1e-20));
    }

    #[test]
    fn influence_requires_enough_moments() {
        let s = sample(&[1.0, 2.0, 3.0]);
        let m = censored_moments(&s, 2).unwrap();
        assert!(influence_rows(&s, &m, 2).is_err());
        assert!(influence_rows(&s, &m, 1).is_ok());
        let zero = CensoredMomentSet {
            a: 1.0,
            c_target: 1.0 / E,
            p_hat: 0.0,
            m_hat: vec![1.0, 0.0, 0.0],
        };
        assert_eq!(influence_rows(&s, &zero, 1).unwrap_err(), Error::DegenerateMoments);
    }
}
