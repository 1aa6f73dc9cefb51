//! Small numerical helpers shared across modules.

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

pub fn compensated_mean(xs: &[f64]) -> f64 {
    let mut acc = CompensatedSum::new();
    for &x in xs {
        acc.add(x);
    }
    acc.value() / xs.len() as f64
}

/// Unbiased sample variance; zero for fewer than two points.
pub fn sample_variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let mean = compensated_mean(xs);
    let mut acc = CompensatedSum::new();
    for &x in xs {
        let d = x - mean;
        acc.add(d * d);
    }
    acc.value() / (xs.len() - 1) as f64
}

/// Standard normal distribution helpers.
pub mod normal {
    use statrs::distribution::{ContinuousCDF, Normal};

    fn standard() -> Normal {
        Normal::new(0.0, 1.0).expect("unit normal")
    }

    pub fn cdf(x: f64) -> f64 {
        standard().cdf(x)
    }

    /// Upper tail `P(Z > x)`, accurate far in the tail.
    pub fn sf(x: f64) -> f64 {
        standard().sf(x)
    }

    pub fn quantile(p: f64) -> f64 {
        standard().inverse_cdf(p)
    }

    /// Two-sided p-value `2 P(Z > |z|)`, clamped into [0, 1].
    pub fn two_sided_p(z: f64) -> f64 {
        (2.0 * sf(z.abs())).clamp(0.0, 1.0)
    }
}
