//! Catalogue of isotropic Lévy processes with closed-form radial exponents.

use crate::error::{Error, Result};

/// Radial characteristic exponents with closed forms.
#[derive(Clone, Debug, PartialEq)]
pub enum Process {
    /// `psi(b) = b^2`, coordinate variance `2t`.
    Brownian,
    /// `psi(b) = b^alpha`.
    Stable { alpha: f64 },
    /// `psi(b) = b^alpha + b^beta`.
    MixedStable { alpha: f64, beta: f64 },
    /// `psi(b) = (b^2 + m^{2/alpha})^{alpha/2} - m`.
    Relativistic { alpha: f64, mass: f64 },
    /// `psi(b) = b^alpha log(1 + b^2)^{beta/2}`.
    LogUp { alpha: f64, beta: f64 },
    /// `psi(b) = b^alpha log(1 + b^2)^{-beta/2}`.
    LogDown { alpha: f64, beta: f64 },
    /// `psi(b) = a b^2 + psi_jumps(b)`.
    JumpDiffusion {
        gaussian_coefficient: f64,
        jumps: Box<Process>,
    },
    /// Base process with every jump larger than `cutoff` removed.
    Truncated(TruncationSpec),
}

#[derive(Clone, Debug, PartialEq)]
pub struct TruncationSpec {
    pub base: Box<Process>,
    pub cutoff: f64,
}

impl TruncationSpec {
    pub const DEFAULT_CUTOFF: f64 = 1.0;

    pub fn new(base: Process, cutoff: f64) -> Self {
        Self {
            base: Box::new(base),
            cutoff,
        }
    }
}

/// A catalogue process living in `R^dimension`.
#[derive(Clone, Debug, PartialEq)]
pub struct LevyProcessSpec {
    pub process: Process,
    pub dimension: usize,
}

fn in_open(x: f64, lo: f64, hi: f64) -> bool {
    x > lo && x < hi
}

impl Process {
    pub fn name(&self) -> &'static str {
        match self {
            Process::Brownian => "brownian",
            Process::Stable { .. } => "stable",
            Process::MixedStable { .. } => "mixed_stable",
            Process::Relativistic { .. } => "relativistic_stable",
            Process::LogUp { .. } => "log_up",
            Process::LogDown { .. } => "log_down",
            Process::JumpDiffusion { .. } => "jump_diffusion",
            Process::Truncated(_) => "truncated",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSpec(msg));
        match self {
            Process::Brownian => Ok(()),
            Process::Stable { alpha } => {
                if *alpha > 1.0 && *alpha <= 2.0 {
                    Ok(())
                } else {
                    bad(format!(
                        "stable alpha = {alpha} outside (1, 2]; the supremum mean is finite only there"
                    ))
                }
            }
            Process::MixedStable { alpha, beta } => {
                if !in_open(*alpha, 1.0, 2.0) {
                    bad(format!("mixed_stable alpha = {alpha} outside (1, 2)"))
                } else if !in_open(*beta, 0.0, *alpha) {
                    bad(format!("mixed_stable requires 0 < beta < alpha, got beta = {beta}"))
                } else {
                    Ok(())
                }
            }
            Process::Relativistic { alpha, mass } => {
                if !in_open(*alpha, 1.0, 2.0) {
                    bad(format!("relativistic alpha = {alpha} outside (1, 2)"))
                } else if !(*mass > 0.0 && mass.is_finite()) {
                    bad(format!("relativistic mass must be > 0, got {mass}"))
                } else {
                    Ok(())
                }
            }
            Process::LogUp { alpha, beta } => {
                if !in_open(*alpha, 1.0, 2.0) {
                    bad(format!("log_up alpha = {alpha} outside (1, 2)"))
                } else if !in_open(*beta, 0.0, 2.0 - alpha) {
                    bad(format!("log_up requires 0 < beta < 2 - alpha, got beta = {beta}"))
                } else {
                    Ok(())
                }
            }
            Process::LogDown { alpha, beta } => {
                if !in_open(*alpha, 1.0, 2.0) {
                    bad(format!("log_down alpha = {alpha} outside (1, 2)"))
                } else if !in_open(*beta, 0.0, *alpha) {
                    bad(format!("log_down requires 0 < beta < alpha, got beta = {beta}"))
                } else {
                    Ok(())
                }
            }
            Process::JumpDiffusion {
                gaussian_coefficient,
                jumps,
            } => {
                if !(*gaussian_coefficient >= 0.0 && gaussian_coefficient.is_finite()) {
                    return bad(format!("gaussian_coefficient must be >= 0, got {gaussian_coefficient}"));
                }
                match jumps.as_ref() {
                    Process::Stable { alpha } if *alpha >= 2.0 => {
                        bad("jump part of a jump diffusion must be pure jump".into())
                    }
                    Process::Stable { .. }
                    | Process::MixedStable { .. }
                    | Process::Relativistic { .. }
                    | Process::LogUp { .. }
                    | Process::LogDown { .. } => jumps.validate(),
                    other => bad(format!(
                        "jump part of a jump diffusion must be a pure jump kind, got {}",
                        other.name()
                    )),
                }
            }
            Process::Truncated(spec) => {
                if !(spec.cutoff > 0.0) {
                    return bad(format!("truncation cutoff must be > 0, got {}", spec.cutoff));
                }
                if let Process::Truncated(_) = spec.base.as_ref() {
                    return bad("nested truncation".into());
                }
                spec.base.validate()
            }
        }
    }

    /// Index of regular variation at infinity.
    pub fn alpha(&self) -> f64 {
        match self {
            Process::Brownian => 2.0,
            Process::Stable { alpha }
            | Process::MixedStable { alpha, .. }
            | Process::Relativistic { alpha, .. }
            | Process::LogUp { alpha, .. }
            | Process::LogDown { alpha, .. } => *alpha,
            Process::JumpDiffusion {
                gaussian_coefficient,
                jumps,
            } => {
                if *gaussian_coefficient > 0.0 {
                    2.0
                } else {
                    jumps.alpha()
                }
            }
            // scaling uses the base exponent
            Process::Truncated(spec) => spec.base.alpha(),
        }
    }

    /// Radial exponent `psi(b)`. Truncated processes report their base.
    pub fn psi(&self, b: f64) -> f64 {
        match self {
            Process::Brownian => b * b,
            Process::Stable { alpha } => b.powf(*alpha),
            Process::MixedStable { alpha, beta } => b.powf(*alpha) + b.powf(*beta),
            Process::Relativistic { alpha, mass } => {
                // m ((1 + b^2 / m^{2/alpha})^{alpha/2} - 1) without cancellation
                let scale = mass.powf(2.0 / alpha);
                mass * (0.5 * alpha * (b * b / scale).ln_1p()).exp_m1()
            }
            Process::LogUp { alpha, beta } => {
                if b == 0.0 {
                    0.0
                } else {
                    b.powf(*alpha) * (b * b).ln_1p().powf(0.5 * beta)
                }
            }
            Process::LogDown { alpha, beta } => {
                if b == 0.0 {
                    0.0
                } else {
                    b.powf(*alpha) * (b * b).ln_1p().powf(-0.5 * beta)
                }
            }
            Process::JumpDiffusion {
                gaussian_coefficient,
                jumps,
            } => gaussian_coefficient * b * b + jumps.psi(b),
            Process::Truncated(spec) => spec.base.psi(b),
        }
    }

    /// Laplace exponent of the subordinator when the process is a subordinate
    /// Brownian motion, `psi(b) = phi(b^2)`.
    pub fn laplace_exponent(&self, lambda: f64) -> Option<f64> {
        match self {
            Process::Brownian
            | Process::Stable { .. }
            | Process::MixedStable { .. }
            | Process::Relativistic { .. }
            | Process::LogUp { .. }
            | Process::LogDown { .. } => Some(self.psi(lambda.sqrt())),
            _ => None,
        }
    }

    pub fn is_truncated(&self) -> bool {
        matches!(self, Process::Truncated(_))
    }
}

/// Bracket cap for the inverse exponent.
pub const INVERSE_BRACKET_CAP: f64 = 1e300;
/// Bisection iteration limit for the inverse exponent.
pub const INVERSE_MAX_ITER: usize = 200;

impl LevyProcessSpec {
    pub fn new(process: Process, dimension: usize) -> Result<Self> {
        let spec = Self { process, dimension };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dimension < 1 {
            return Err(Error::InvalidSpec("dimension must be >= 1".into()));
        }
        self.process.validate()
    }

    pub fn alpha(&self) -> f64 {
        self.process.alpha()
    }

    /// Same process in another dimension.
    pub fn with_dimension(&self, dimension: usize) -> Self {
        Self {
            process: self.process.clone(),
            dimension,
        }
    }

    pub fn eval_psi(&self, b: f64) -> Result<f64> {
        self.validate()?;
        if !(b >= 0.0) {
            return Err(Error::Domain(format!("radial frequency must be >= 0, got {b}")));
        }
        Ok(self.process.psi(b))
    }

    /// Solves `psi(b) = y` by bisection after geometric bracket growth.
    pub fn inverse_psi(&self, y: f64) -> Result<f64> {
        self.validate()?;
        if !(y > 0.0) || !y.is_finite() {
            return Err(Error::Domain(format!("inverse_psi needs y > 0, got {y}")));
        }
        let psi = |b: f64| self.process.psi(b);
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        while psi(hi) <= y {
            lo = hi;
            hi *= 2.0;
            if hi > INVERSE_BRACKET_CAP {
                return Err(Error::Divergence(format!(
                    "psi stays below {y} up to b = {INVERSE_BRACKET_CAP:e}"
                )));
            }
        }
        for _ in 0..INVERSE_MAX_ITER {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let v = psi(mid);
            if v == y {
                return Ok(mid);
            }
            if v < y {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let b = if (psi(lo) - y).abs() <= (psi(hi) - y).abs() {
            lo
        } else {
            hi
        };
        let err = (psi(b) - y).abs();
        if err > 1e-10 * y.max(1.0) {
            return Err(Error::Divergence(format!(
                "inverse_psi({y}) stalled at b = {b} with residual {err:e}"
            )));
        }
        Ok(b)
    }

    /// Local regular-variation index `log(psi(xy)/psi(y)) / log(x)`.
    pub fn rv_index_probe(&self, y: f64, x: f64) -> Result<f64> {
        if !(y >= 1e3) {
            return Err(Error::Domain(format!("probe scale must be >= 1e3, got {y}")));
        }
        if !(x > 0.0) || x == 1.0 {
            return Err(Error::Domain(format!("probe ratio must be > 0 and != 1, got {x}")));
        }
        let num = self.eval_psi(x * y)?;
        let den = self.eval_psi(y)?;
        Ok((num / den).ln() / x.ln())
    }

    /// Characteristic length `1 / psi^{-1}(1/t)`.
    pub fn length_scale(&self, t: f64) -> Result<f64> {
        Ok(1.0 / self.inverse_psi(1.0 / t)?)
    }
}

/// Representative members of every catalogue family, used by sweeps.
pub fn catalogue() -> Vec<Process> {
    vec![
        Process::Brownian,
        Process::Stable { alpha: 1.5 },
        Process::Stable { alpha: 1.2 },
        Process::MixedStable { alpha: 1.5, beta: 0.8 },
        Process::Relativistic { alpha: 1.5, mass: 1.0 },
        Process::LogUp { alpha: 1.5, beta: 0.3 },
        Process::LogDown { alpha: 1.5, beta: 0.5 },
        Process::JumpDiffusion {
            gaussian_coefficient: 1.0,
            jumps: Box::new(Process::Stable { alpha: 1.5 }),
        },
        Process::Truncated(TruncationSpec::new(
            Process::Stable { alpha: 1.5 },
            TruncationSpec::DEFAULT_CUTOFF,
        )),
    ]
}
