//! Finite-difference Jacobians.
//!
//! [`central_jacobian`] is what the estimators use. [`richardson_jacobian`]
//! is a slower, higher-order reference used to check it.

/// Step used for coordinate `x`: `|x| · ε^{1/3}`, or `ε^{1/3}` at zero.
/// Censored moments carry the units of the data, so the step stays relative.
pub fn central_step(x: f64) -> f64 {
    relative_scale(x) * f64::EPSILON.cbrt()
}

fn relative_scale(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        x.abs()
    }
}

/// Central-difference Jacobian of `f: R^d → R^m`, returned row-major as
/// `m` rows of length `d`.
pub fn central_jacobian<F>(f: F, x: &[f64]) -> Vec<Vec<f64>>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let d = x.len();
    let mut columns = Vec::with_capacity(d);
    let mut probe = x.to_vec();
    for j in 0..d {
        let h = central_step(x[j]);
        probe[j] = x[j] + h;
        let up = f(&probe);
        probe[j] = x[j] - h;
        let down = f(&probe);
        probe[j] = x[j];
        // (x+h) - (x-h) in floating point, not 2h
        let span = (x[j] + h) - (x[j] - h);
        columns.push(
            up.iter()
                .zip(&down)
                .map(|(u, d)| (u - d) / span)
                .collect::<Vec<f64>>(),
        );
    }
    transpose(columns)
}

pub fn central_gradient<F>(f: F, x: &[f64]) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64,
{
    central_jacobian(|p| vec![f(p)], x).remove(0)
}

/// Richardson-extrapolated central differences (Ridders' tableau).
///
/// Starts from step `|x_j| · 1e-3` and shrinks by 2 per level,
/// extrapolating until the error estimate stops improving.
pub fn richardson_jacobian<F>(f: F, x: &[f64]) -> Vec<Vec<f64>>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    const LEVELS: usize = 10;
    const SHRINK: f64 = 2.0;
    let d = x.len();
    let mut columns = Vec::with_capacity(d);
    let mut probe = x.to_vec();
    for j in 0..d {
        let mut diff = |h: f64| -> Vec<f64> {
            probe[j] = x[j] + h;
            let up = f(&probe);
            probe[j] = x[j] - h;
            let down = f(&probe);
            probe[j] = x[j];
            up.iter().zip(&down).map(|(u, d)| (u - d) / (2.0 * h)).collect()
        };
        let m = diff(1.0).len();
        let mut best = vec![f64::NAN; m];
        let mut best_err = vec![f64::INFINITY; m];
        let mut h = relative_scale(x[j]) * 1e-3;
        let mut prev_row: Vec<Vec<f64>> = vec![diff(h)];
        for _ in 1..LEVELS {
            h /= SHRINK;
            let mut row = vec![diff(h)];
            let mut factor = SHRINK * SHRINK;
            for k in 1..=prev_row.len() {
                let next: Vec<f64> = row[k - 1]
                    .iter()
                    .zip(&prev_row[k - 1])
                    .map(|(a, b)| (factor * a - b) / (factor - 1.0))
                    .collect();
                for i in 0..m {
                    let err = (next[i] - row[k - 1][i])
                        .abs()
                        .max((next[i] - prev_row[k - 1][i]).abs());
                    if err <= best_err[i] {
                        best_err[i] = err;
                        best[i] = next[i];
                    }
                }
                row.push(next);
                factor *= SHRINK * SHRINK;
            }
            prev_row = row;
        }
        columns.push(best);
    }
    transpose(columns)
}

fn transpose(columns: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let d = columns.len();
    let m = columns.first().map_or(0, Vec::len);
    (0..m)
        .map(|i| (0..d).map(|j| columns[j][i]).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly(x: &[f64]) -> Vec<f64> {
        vec![x[0] * x[0] * x[1], (x[0] + 3.0 * x[1]).sin(), x[1].exp()]
    }

    fn exact(x: &[f64]) -> Vec<Vec<f64>> {
        let c = (x[0] + 3.0 * x[1]).cos();
        vec![
            vec![2.0 * x[0] * x[1], x[0] * x[0]],
            vec![c, 3.0 * c],
            vec![0.0, x[1].exp()],
        ]
    }

    #[test]
    fn central_matches_analytic() {
        let x = [0.7, -1.3];
        let j = central_jacobian(poly, &x);
        let e = exact(&x);
        for (r, er) in j.iter().zip(&e) {
            for (a, b) in r.iter().zip(er) {
                assert!((a - b).abs() < 1e-9 * (1.0 + b.abs()), "{a} vs {b}");
            }
        }
    }

    #[test]
    fn richardson_is_tighter() {
        let x = [1.9, 0.4];
        let j = richardson_jacobian(poly, &x);
        let e = exact(&x);
        for (r, er) in j.iter().zip(&e) {
            for (a, b) in r.iter().zip(er) {
                assert!((a - b).abs() < 1e-11 * (1.0 + b.abs()), "{a} vs {b}");
            }
        }
    }

    #[test]
    fn gradient_of_scalar() {
        let g = central_gradient(|p| p[0].ln() * p[1], &[2.0, 5.0]);
        assert!((g[0] - 2.5).abs() < 1e-9);
        assert!((g[1] - 2f64.ln()).abs() < 1e-9);
    }
}
