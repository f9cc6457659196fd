//! Small numerical kernels: double-exponential quadrature, running moments and
//! the two-sample Kolmogorov-Smirnov test.

use std::f64::consts::FRAC_PI_2;

const MAX_LEVEL: u32 = 10;
const T_MAX: f64 = 4.5;
// x = exp(pi/2 sinh t) stays below e^700 up to t = 6.79
const T_MAX_HALF_LINE: f64 = 6.5;

/// Tanh-sinh quadrature of `f` over `[a, b]`.
///
/// The integrand receives `(x, x - a, b - x)` with both endpoint distances
/// computed without cancellation, so integrable endpoint singularities can be
/// evaluated accurately.
pub fn tanh_sinh<F>(f: F, a: f64, b: f64, rel_tol: f64) -> f64
where
    F: Fn(f64, f64, f64) -> f64,
{
    let half = 0.5 * (b - a);
    let eval = |t: f64| -> f64 {
        let u = FRAC_PI_2 * t.sinh();
        let cosh_u = u.cosh();
        let w = half * FRAC_PI_2 * t.cosh() / (cosh_u * cosh_u);
        // distance from the nearer endpoint: half * (1 - tanh|u|)
        let delta = half * 2.0 / ((2.0 * u.abs()).exp() + 1.0);
        if delta <= 0.0 || w == 0.0 {
            return 0.0;
        }
        let (x, left, right) = if u >= 0.0 {
            (b - delta, (b - a) - delta, delta)
        } else {
            (a + delta, delta, (b - a) - delta)
        };
        let v = f(x, left, right);
        if v.is_finite() {
            v * w
        } else {
            0.0
        }
    };
    double_exponential_sum(eval, T_MAX, rel_tol)
}

/// Exp-sinh quadrature of `f` over `[0, inf)`.
pub fn exp_sinh<F>(f: F, rel_tol: f64) -> f64
where
    F: Fn(f64) -> f64,
{
    let eval = |t: f64| -> f64 {
        let u = FRAC_PI_2 * t.sinh();
        if u > 700.0 {
            return 0.0;
        }
        let x = u.exp();
        if x == 0.0 {
            return 0.0;
        }
        let w = x * FRAC_PI_2 * t.cosh();
        let v = f(x);
        if v.is_finite() {
            v * w
        } else {
            0.0
        }
    };
    double_exponential_sum(eval, T_MAX_HALF_LINE, rel_tol)
}

fn double_exponential_sum<G: Fn(f64) -> f64>(g: G, t_max: f64, rel_tol: f64) -> f64 {
    let mut h = 1.0;
    let mut sum = g(0.0);
    let mut k = 1;
    while (k as f64) * h <= t_max {
        let t = k as f64 * h;
        sum += g(t) + g(-t);
        k += 1;
    }
    let mut estimate = sum * h;
    for _ in 1..=MAX_LEVEL {
        h *= 0.5;
        let mut k = 1;
        while (k as f64) * h <= t_max {
            let t = k as f64 * h;
            sum += g(t) + g(-t);
            k += 2;
        }
        let next = sum * h;
        let change = (next - estimate).abs();
        estimate = next;
        if change <= rel_tol * next.abs() {
            break;
        }
    }
    estimate
}

/// Welford accumulator for a stream of `f64` samples.
#[derive(Clone, Copy, Debug, Default)]
pub struct Moments {
    pub n: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    /// Chan et al. merge; merging in a fixed order keeps results bit-stable.
    pub fn merge(&mut self, other: &Moments) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        self.mean += d * other.n as f64 / n as f64;
        self.m2 += other.m2 + d * d * (self.n as f64) * (other.n as f64) / n as f64;
        self.n = n;
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    /// Standard error of the mean.
    pub fn se(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            (self.variance() / self.n as f64).sqrt()
        }
    }
}

/// Two-sample Kolmogorov-Smirnov statistic and asymptotic p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> (f64, f64) {
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (n, m) = (x.len(), y.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let v = x[i].min(y[j]);
        while i < n && x[i] <= v {
            i += 1;
        }
        while j < m && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let ne = (n * m) as f64 / (n + m) as f64;
    let lambda = (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * d;
    (d, kolmogorov_q(lambda))
}

/// Survival function of the Kolmogorov distribution.
fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let term = sign * (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        sum += term;
        if term.abs() < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Ordinary least-squares slope of `y` against `x`.
pub fn ols_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// `n` points log-spaced from `hi` down to `lo` (inclusive).
pub fn log_grid_desc(hi: f64, lo: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![hi];
    }
    let (lh, ll) = (hi.ln(), lo.ln());
    (0..n)
        .map(|k| {
            let t = (lh + (ll - lh) * k as f64 / (n - 1) as f64).exp();
            // rounded to 15 significant digits
            format!("{t:.14e}").parse().unwrap()
        })
        .collect()
}
