//! Jump laws of the subordinators behind the catalogue.
//!
//! Every pure-jump catalogue exponent is `psi(b) = phi(b^2)` for a Bernstein
//! function `phi`, so each spatial jump is `sqrt(2 s) Z` where `s` is a jump of
//! the subordinator with Lévy density `m(s)`. The compound-Poisson sampler in
//! [`crate::sampling`] needs three things from `m`: the tail `int_s^inf m`, the
//! small-jump mean `int_0^eps s m(s) ds`, and draws from `m` restricted to
//! `(eps, inf)`.
//!
//! For the two logarithmic exponents there is no closed-form density; the tail
//! is recovered from the boundary values of `phi` on the negative axis
//! (Stieltjes inversion of a complete Bernstein function):
//!
//! ```text
//! m(s)      = (1/pi) int_0^inf e^{-s x} Im phi(-x + i0) dx
//! tail(s)   = (1/pi) int_0^inf e^{-s x} Im phi(-x + i0) / x dx
//! mean(eps) = (1/pi) int_0^inf Im phi(-x + i0) (1 - e^{-eps x}(1 + eps x)) / x^2 dx
//! ```

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use rand::Rng;
use statrs::function::gamma::{gamma, gamma_lr};

use crate::error::{Error, Result};
use crate::levy::Process;
use crate::numerics::{exp_sinh, tanh_sinh};

const QUAD_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub enum JumpLaw {
    /// `m(s) = a / Gamma(1-a) s^{-1-a}`, Laplace exponent `lambda^a`.
    Stable { a: f64 },
    /// Sum of two stable densities.
    Mixed { a1: f64, a2: f64 },
    /// Exponentially tempered stable density, `e^{-lambda s}` thinning.
    Tempered { a: f64, lambda: f64 },
    /// Numerically tabulated tail of `lambda^a log(1+lambda)^b`.
    Tabulated(Arc<LogTable>),
}

/// Subordinator jump law and Gaussian coefficient of a catalogue process.
/// Returns `None` for the jump law of Brownian motion.
pub fn decompose(process: &Process) -> Result<(Option<JumpLaw>, f64)> {
    Ok(match process {
        Process::Brownian => (None, 1.0),
        Process::Stable { alpha } if *alpha >= 2.0 => (None, 1.0),
        Process::Stable { alpha } => (Some(JumpLaw::Stable { a: alpha / 2.0 }), 0.0),
        Process::MixedStable { alpha, beta } => (
            Some(JumpLaw::Mixed {
                a1: alpha / 2.0,
                a2: beta / 2.0,
            }),
            0.0,
        ),
        Process::Relativistic { alpha, mass } => (
            Some(JumpLaw::Tempered {
                a: alpha / 2.0,
                lambda: mass.powf(2.0 / alpha),
            }),
            0.0,
        ),
        Process::LogUp { alpha, beta } => (
            Some(JumpLaw::Tabulated(LogTable::shared(alpha / 2.0, beta / 2.0)?)),
            0.0,
        ),
        Process::LogDown { alpha, beta } => (
            Some(JumpLaw::Tabulated(LogTable::shared(alpha / 2.0, -beta / 2.0)?)),
            0.0,
        ),
        Process::JumpDiffusion {
            gaussian_coefficient,
            jumps,
        } => {
            let (law, g) = decompose(jumps)?;
            (law, g + gaussian_coefficient)
        }
        Process::Truncated(spec) => decompose(&spec.base)?,
    })
}

fn stable_tail(a: f64, s: f64) -> f64 {
    s.powf(-a) / gamma(1.0 - a)
}

fn stable_small_mean(a: f64, eps: f64) -> f64 {
    a * eps.powf(1.0 - a) / gamma(2.0 - a)
}

impl JumpLaw {
    /// Rate of proposals above `eps`; equals the true tail except for the
    /// tempered law, whose proposals are thinned.
    pub fn proposal_tail(&self, s: f64) -> f64 {
        match self {
            JumpLaw::Stable { a } | JumpLaw::Tempered { a, .. } => stable_tail(*a, s),
            JumpLaw::Mixed { a1, a2 } => stable_tail(*a1, s) + stable_tail(*a2, s),
            JumpLaw::Tabulated(t) => t.tail(s),
        }
    }

    /// `int_0^eps s m(s) ds`.
    pub fn small_mean(&self, eps: f64) -> f64 {
        match self {
            JumpLaw::Stable { a } => stable_small_mean(*a, eps),
            JumpLaw::Mixed { a1, a2 } => stable_small_mean(*a1, eps) + stable_small_mean(*a2, eps),
            JumpLaw::Tempered { a, lambda } => {
                // a / Gamma(1-a) int_0^eps s^{-a} e^{-lambda s} ds
                let x = lambda * eps;
                let integral = if x < 1.0 {
                    let mut sum = 0.0;
                    let mut term = 1.0; // (-x)^k / k!
                    for k in 0..60 {
                        let kf = k as f64;
                        sum += term / (kf + 1.0 - a);
                        term *= -x / (kf + 1.0);
                        if term.abs() < 1e-18 {
                            break;
                        }
                    }
                    eps.powf(1.0 - a) * sum
                } else {
                    lambda.powf(a - 1.0) * gamma_lr(1.0 - a, x) * gamma(1.0 - a)
                };
                a / gamma(1.0 - a) * integral
            }
            JumpLaw::Tabulated(t) => t.small_mean(eps),
        }
    }

    /// Threshold at which the proposal rate per unit time equals `rate`.
    pub fn threshold_for_rate(&self, rate: f64) -> f64 {
        match self {
            JumpLaw::Stable { a } | JumpLaw::Tempered { a, .. } => (rate * gamma(1.0 - a)).powf(-1.0 / a),
            _ => {
                let (mut lo, mut hi) = (-700.0_f64, 700.0_f64);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if self.proposal_tail(mid.exp()) > rate {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                    if hi - lo < 1e-12 {
                        break;
                    }
                }
                (0.5 * (lo + hi)).exp()
            }
        }
    }

    /// One proposal from `m` restricted to `(eps, inf)`, normalized by the
    /// proposal tail. `None` when a tempered proposal is thinned away.
    #[inline]
    pub fn sample_above<R: Rng + ?Sized>(&self, eps: f64, rng: &mut R) -> Option<f64> {
        match self {
            JumpLaw::Stable { a } => Some(eps * open01(rng).powf(-1.0 / a)),
            JumpLaw::Mixed { a1, a2 } => {
                let w1 = stable_tail(*a1, eps);
                let w2 = stable_tail(*a2, eps);
                let a = if rng.random::<f64>() * (w1 + w2) < w1 { a1 } else { a2 };
                Some(eps * open01(rng).powf(-1.0 / a))
            }
            JumpLaw::Tempered { a, lambda } => {
                let s = eps * open01(rng).powf(-1.0 / a);
                if rng.random::<f64>() < (-lambda * s).exp() {
                    Some(s)
                } else {
                    None
                }
            }
            JumpLaw::Tabulated(t) => Some(t.sample_above(eps, open01(rng))),
        }
    }
}

/// Uniform on `(0, 1]`.
#[inline]
pub(crate) fn open01<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    1.0 - rng.random::<f64>()
}

/// Tail table of the subordinator with Laplace exponent
/// `lambda^a log(1 + lambda)^b`, log-log interpolated.
#[derive(Debug)]
pub struct LogTable {
    pub a: f64,
    pub b: f64,
    ln_s: Vec<f64>,
    ln_tail: Vec<f64>,
}

const TABLE_LN_S_MIN: f64 = -64.0; // ~1.6e-28
const TABLE_LN_S_MAX: f64 = 32.0; // ~7.9e13
const TABLE_POINTS: usize = 769;

type TableCache = Mutex<HashMap<(u64, u64), Arc<LogTable>>>;

impl LogTable {
    /// Process-wide cache; building a table costs a few hundred milliseconds.
    pub fn shared(a: f64, b: f64) -> Result<Arc<LogTable>> {
        static CACHE: OnceLock<TableCache> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let key = (a.to_bits(), b.to_bits());
        if let Some(t) = cache.lock().expect("table cache poisoned").get(&key) {
            return Ok(t.clone());
        }
        let table = Arc::new(LogTable::build(a, b)?);
        cache.lock().expect("table cache poisoned").insert(key, table.clone());
        Ok(table)
    }

    pub fn build(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && a < 1.0 && a + b > 0.0 && a + b <= 1.0) {
            return Err(Error::InvalidSpec(format!(
                "no complete Bernstein representation for a = {a}, b = {b}"
            )));
        }
        let mut ln_s = Vec::with_capacity(TABLE_POINTS);
        let mut ln_tail = Vec::with_capacity(TABLE_POINTS);
        for k in 0..TABLE_POINTS {
            let l = TABLE_LN_S_MIN + (TABLE_LN_S_MAX - TABLE_LN_S_MIN) * k as f64 / (TABLE_POINTS - 1) as f64;
            let tail = tail_by_inversion(a, b, l.exp());
            if !(tail > 0.0) || !tail.is_finite() {
                return Err(Error::SamplerFailure(format!(
                    "Lévy tail inversion failed at s = {:e} (value {tail})",
                    l.exp()
                )));
            }
            ln_s.push(l);
            ln_tail.push(tail.ln());
        }
        if ln_tail.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::SamplerFailure(
                "recovered Lévy tail is not strictly decreasing".into(),
            ));
        }
        Ok(Self { a, b, ln_s, ln_tail })
    }

    fn slope(&self, i: usize) -> f64 {
        (self.ln_tail[i + 1] - self.ln_tail[i]) / (self.ln_s[i + 1] - self.ln_s[i])
    }

    pub fn tail(&self, s: f64) -> f64 {
        let l = s.ln();
        let n = self.ln_s.len();
        let i = if l <= self.ln_s[0] {
            0
        } else if l >= self.ln_s[n - 1] {
            n - 2
        } else {
            self.ln_s.partition_point(|&x| x <= l) - 1
        };
        (self.ln_tail[i] + self.slope(i) * (l - self.ln_s[i])).exp()
    }

    /// Inverts the tail at `tail(eps) * u`.
    pub fn sample_above(&self, eps: f64, u: f64) -> f64 {
        let target = self.tail(eps).ln() + u.ln();
        let n = self.ln_tail.len();
        // ln_tail is decreasing
        let i = if target >= self.ln_tail[0] {
            0
        } else if target <= self.ln_tail[n - 1] {
            n - 2
        } else {
            self.ln_tail.partition_point(|&y| y > target) - 1
        };
        let l = self.ln_s[i] + (target - self.ln_tail[i]) / self.slope(i);
        l.exp().max(eps)
    }

    pub fn small_mean(&self, eps: f64) -> f64 {
        small_mean_by_inversion(self.a, self.b, eps)
    }
}

/// `Im phi(-x + i0)` for `phi(lambda) = lambda^a log(1+lambda)^b`, with
/// `one_minus_x = 1 - x` passed separately for accuracy near `x = 1`.
fn boundary_im(a: f64, b: f64, x: f64, one_minus_x: f64) -> f64 {
    if b == 0.0 {
        return x.powf(a) * (PI * a).sin();
    }
    if one_minus_x > 0.0 {
        let log_mag = if x < 0.5 { -(-x).ln_1p() } else { -one_minus_x.ln() };
        x.powf(a) * log_mag.powf(b) * (PI * (a + b)).sin()
    } else {
        let re = (-one_minus_x).ln();
        let rho = re.hypot(PI);
        let theta = PI.atan2(re);
        x.powf(a) * rho.powf(b) * (PI * a + b * theta).sin()
    }
}

/// Integrates `k(x) Im phi(-x+i0)` over `(0, inf)`, split at the
/// branch point `x = 1`.
fn integrate_boundary<K: Fn(f64) -> f64>(a: f64, b: f64, kernel: K) -> f64 {
    let near = tanh_sinh(
        |x, _, right| kernel(x) * boundary_im(a, b, x, right),
        0.0,
        1.0,
        QUAD_TOL,
    );
    let far = exp_sinh(
        |v| {
            let x = 1.0 + v;
            kernel(x) * boundary_im(a, b, x, -v)
        },
        QUAD_TOL,
    );
    (near + far) / PI
}

fn tail_by_inversion(a: f64, b: f64, s: f64) -> f64 {
    integrate_boundary(a, b, |x| (-s * x).exp() / x)
}

fn small_mean_by_inversion(a: f64, b: f64, eps: f64) -> f64 {
    integrate_boundary(a, b, |x| {
        let y = eps * x;
        let num = if y < 1e-3 {
            y * y * (0.5 - y / 3.0 + y * y / 8.0)
        } else {
            1.0 - (-y).exp() * (1.0 + y)
        };
        num / (x * x)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::exp_sinh;

    #[test]
    fn inversion_reproduces_stable_tail() {
        // b = 0 is the stable case with a closed form
        for a in [0.6, 0.75, 0.95] {
            for s in [1e-12, 1e-6, 1e-2, 1.0, 1e3] {
                let num = tail_by_inversion(a, 0.0, s);
                let exact = stable_tail(a, s);
                assert!((num / exact - 1.0).abs() < 1e-7, "a={a} s={s}: {num} vs {exact}");
            }
            for eps in [1e-10, 1e-4, 0.1] {
                let num = small_mean_by_inversion(a, 0.0, eps);
                let exact = stable_small_mean(a, eps);
                assert!((num / exact - 1.0).abs() < 1e-7, "a={a} eps={eps}");
            }
        }
    }

    #[test]
    fn table_reconstructs_laplace_exponent() {
        // phi(lambda) = lambda int_0^inf e^{-lambda s} tail(s) ds
        for (a, b) in [(0.75, 0.15), (0.75, -0.25)] {
            let table = LogTable::build(a, b).unwrap();
            for lambda in [0.5_f64, 2.0, 30.0] {
                let recon = lambda * exp_sinh(|s| (-lambda * s).exp() * table.tail(s), 1e-9);
                let exact = lambda.powf(a) * lambda.ln_1p().powf(b);
                assert!(
                    (recon / exact - 1.0).abs() < 2e-4,
                    "a={a} b={b} lambda={lambda}: {recon} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn table_sampling_inverts_tail() {
        let table = LogTable::build(0.75, 0.15).unwrap();
        let eps = 1e-6;
        for u in [1.0, 0.5, 1e-3, 1e-9] {
            let s = table.sample_above(eps, u);
            let ratio = table.tail(s) / table.tail(eps);
            assert!((ratio / u - 1.0).abs() < 1e-9, "u={u}: {ratio}");
        }
    }

    #[test]
    fn tempered_small_mean_limits() {
        let stable = JumpLaw::Stable { a: 0.75 };
        let tempered = JumpLaw::Tempered { a: 0.75, lambda: 1.0 };
        let eps = 1e-8;
        let r = tempered.small_mean(eps) / stable.small_mean(eps);
        assert!((r - 1.0).abs() < 1e-6);
        // continuity across the series / incomplete-gamma switch
        let below = tempered.small_mean(0.999_999);
        let above = tempered.small_mean(1.000_001);
        assert!((below / above - 1.0).abs() < 1e-5);
    }

    #[test]
    fn threshold_matches_tail() {
        let laws = [
            JumpLaw::Stable { a: 0.75 },
            JumpLaw::Mixed { a1: 0.75, a2: 0.4 },
            JumpLaw::Tabulated(LogTable::shared(0.75, -0.25).unwrap()),
        ];
        for law in laws {
            let eps = law.threshold_for_rate(1e5);
            assert!((law.proposal_tail(eps) / 1e5 - 1.0).abs() < 1e-8, "{law:?}");
        }
    }
}
