//! Increment, skeleton and running-supremum samplers for the catalogue.
//!
//! Isotropy is obtained by subordination: an increment over `dt` is
//! `sqrt(2 S) Z` with `Z` a standard normal vector and `S` the subordinator
//! increment, so `E exp(i xi . X) = E exp(-|xi|^2 S) = exp(-dt psi(|xi|))`.
//! Exceptions are the one-dimensional stable case (Chambers-Mallows-Stuck) and
//! the processes without an exact marginal sampler (the logarithmic exponents
//! and every truncated process), which go through a compound-Poisson scheme
//! with the small subordinator jumps replaced by their mean.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Exp1, Poisson, StandardNormal};

use crate::error::{Error, Result};
use crate::levy::{LevyProcessSpec, Process};
use crate::rng::RngStream;
use crate::subordinator::{decompose, JumpLaw};

/// Largest supported dimension (scratch buffers are stack allocated).
pub const MAX_DIM: usize = 16;
/// Rejection attempts per tempered increment before the step is halved.
pub const TEMPERED_RETRY_CAP: u64 = 1_000_000;
const MAX_HALVINGS: u32 = 40;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SamplerOptions {
    /// Expected number of compound-Poisson proposals per step; sets the
    /// small-jump threshold of the compound route.
    pub jumps_per_step: f64,
}

impl Default for SamplerOptions {
    fn default() -> Self {
        Self { jumps_per_step: 8.0 }
    }
}

#[derive(Clone, Debug)]
enum Subordinator {
    Stable { a: f64, scale: f64 },
    Mixed { a1: f64, scale1: f64, a2: f64, scale2: f64 },
    Tempered { a: f64, lambda: f64, dt: f64 },
}

#[derive(Clone, Debug)]
struct CompoundPlan {
    law: JumpLaw,
    eps: f64,
    gauss_sd: f64,
    poisson: Poisson<f64>,
    cutoff_sq: Option<f64>,
}

#[derive(Clone, Debug)]
enum Kind {
    Gaussian { sd: f64 },
    Cms { alpha: f64, scale: f64 },
    Subordinated { drift: f64, sub: Subordinator },
    Compound(CompoundPlan),
}

/// Increment sampler for one process and one step size.
#[derive(Clone, Debug)]
pub struct IncrementSampler {
    dim: usize,
    dt: f64,
    kind: Kind,
}

fn exact_subordinator(process: &Process, dt: f64) -> Option<Subordinator> {
    match process {
        Process::Stable { alpha } if *alpha < 2.0 => {
            let a = alpha / 2.0;
            Some(Subordinator::Stable {
                a,
                scale: dt.powf(1.0 / a),
            })
        }
        Process::MixedStable { alpha, beta } => {
            let (a1, a2) = (alpha / 2.0, beta / 2.0);
            Some(Subordinator::Mixed {
                a1,
                scale1: dt.powf(1.0 / a1),
                a2,
                scale2: dt.powf(1.0 / a2),
            })
        }
        Process::Relativistic { alpha, mass } => Some(Subordinator::Tempered {
            a: alpha / 2.0,
            lambda: mass.powf(2.0 / alpha),
            dt,
        }),
        _ => None,
    }
}

impl IncrementSampler {
    pub fn new(spec: &LevyProcessSpec, dt: f64) -> Result<Self> {
        Self::with_options(spec, dt, &SamplerOptions::default())
    }

    pub fn with_options(spec: &LevyProcessSpec, dt: f64, opts: &SamplerOptions) -> Result<Self> {
        Self::check(spec, dt)?;
        let dim = spec.dimension;
        let kind = match &spec.process {
            Process::Brownian | Process::Stable { alpha: 2.0 } => Kind::Gaussian { sd: (2.0 * dt).sqrt() },
            Process::Stable { alpha } if dim == 1 => Kind::Cms {
                alpha: *alpha,
                scale: dt.powf(1.0 / alpha),
            },
            Process::JumpDiffusion {
                gaussian_coefficient,
                jumps,
            } => match exact_subordinator(jumps, dt) {
                Some(sub) => Kind::Subordinated {
                    drift: gaussian_coefficient * dt,
                    sub,
                },
                None => return Self::compound(spec, dt, None, opts),
            },
            Process::Truncated(t) => return Self::compound(spec, dt, Some(t.cutoff), opts),
            p => match exact_subordinator(p, dt) {
                Some(sub) => Kind::Subordinated { drift: 0.0, sub },
                None => return Self::compound(spec, dt, None, opts),
            },
        };
        Ok(Self { dim, dt, kind })
    }

    /// Compound-Poisson route: subordinator jumps above a threshold are drawn
    /// one by one, jumps below it contribute their mean, and spatial jumps
    /// longer than `cutoff` are discarded.
    pub fn compound(spec: &LevyProcessSpec, dt: f64, cutoff: Option<f64>, opts: &SamplerOptions) -> Result<Self> {
        Self::check(spec, dt)?;
        let (law, gaussian_coefficient) = decompose(&spec.process)?;
        let Some(law) = law else {
            return Ok(Self {
                dim: spec.dimension,
                dt,
                kind: Kind::Gaussian {
                    sd: (2.0 * gaussian_coefficient * dt).sqrt(),
                },
            });
        };
        if !(opts.jumps_per_step > 0.0) {
            return Err(Error::InvalidSpec("jumps_per_step must be > 0".into()));
        }
        let mut eps = law.threshold_for_rate(opts.jumps_per_step / dt);
        if let Some(c) = cutoff {
            // small-jump Gaussian part stays well inside the cutoff
            eps = eps.min(0.5 * (0.1 * c) * (0.1 * c));
        }
        let gauss_time = gaussian_coefficient * dt + law.small_mean(eps) * dt;
        let rate = law.proposal_tail(eps) * dt;
        let poisson = Poisson::new(rate).map_err(|e| Error::SamplerFailure(format!("Poisson rate {rate}: {e}")))?;
        Ok(Self {
            dim: spec.dimension,
            dt,
            kind: Kind::Compound(CompoundPlan {
                law,
                eps,
                gauss_sd: (2.0 * gauss_time).sqrt(),
                poisson,
                cutoff_sq: cutoff.filter(|c| c.is_finite()).map(|c| c * c),
            }),
        })
    }

    fn check(spec: &LevyProcessSpec, dt: f64) -> Result<()> {
        spec.validate()?;
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::Domain(format!("step must be > 0, got {dt}")));
        }
        if spec.dimension > MAX_DIM {
            return Err(Error::InvalidSpec(format!(
                "dimension {} exceeds {MAX_DIM}",
                spec.dimension
            )));
        }
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Small-jump threshold of the compound route, if used.
    pub fn jump_threshold(&self) -> Option<f64> {
        match &self.kind {
            Kind::Compound(p) => Some(p.eps),
            _ => None,
        }
    }

    /// Writes one increment into `out[..dim]`.
    #[inline]
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) -> Result<()> {
        let out = &mut out[..self.dim];
        match &self.kind {
            Kind::Gaussian { sd } => {
                for o in out.iter_mut() {
                    *o = sd * rng.sample::<f64, _>(StandardNormal);
                }
            }
            Kind::Cms { alpha, scale } => out[0] = scale * symmetric_stable(*alpha, rng),
            Kind::Subordinated { drift, sub } => {
                let s = drift + sub.sample(rng)?;
                let sd = (2.0 * s).sqrt();
                for o in out.iter_mut() {
                    *o = sd * rng.sample::<f64, _>(StandardNormal);
                }
            }
            Kind::Compound(plan) => plan.sample_into(rng, out),
        }
        Ok(())
    }

    pub fn sample_increment<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<f64>> {
        let mut v = vec![0.0; self.dim];
        self.sample_into(rng, &mut v)?;
        Ok(v)
    }

    /// Skeleton of `n_steps` increments appended to `start`.
    pub fn skeleton<R: Rng + ?Sized>(&self, start: &[f64], n_steps: usize, rng: &mut R) -> Result<PathGrid> {
        if start.len() != self.dim {
            return Err(Error::Domain(format!(
                "start has {} coordinates, process lives in dimension {}",
                start.len(),
                self.dim
            )));
        }
        let mut positions = Vec::with_capacity((n_steps + 1) * self.dim);
        positions.extend_from_slice(start);
        let mut x = start.to_vec();
        let mut inc = [0.0; MAX_DIM];
        for _ in 0..n_steps {
            self.sample_into(rng, &mut inc)?;
            for (xi, di) in x.iter_mut().zip(&inc) {
                *xi += di;
            }
            positions.extend_from_slice(&x);
        }
        Ok(PathGrid {
            t_end: self.dt * n_steps as f64,
            n_steps,
            dimension: self.dim,
            positions,
        })
    }

    /// Running maxima of a one-dimensional path started at 0, observed on the
    /// nested grids `{k * stride}`; `out[j]` receives the maximum over grid
    /// `strides[j]`. Every stride must divide `n_steps`.
    pub fn nested_sups<R: Rng + ?Sized>(
        &self,
        n_steps: usize,
        strides: &[usize],
        rng: &mut R,
        out: &mut [f64],
    ) -> Result<()> {
        if self.dim != 1 {
            return Err(Error::Domain("running supremum needs a 1-d process".into()));
        }
        out[..strides.len()].iter_mut().for_each(|m| *m = 0.0);
        let mut x = 0.0;
        let mut inc = [0.0; 1];
        for k in 1..=n_steps {
            self.sample_into(rng, &mut inc)?;
            x += inc[0];
            for (m, &s) in out.iter_mut().zip(strides) {
                if k % s == 0 && x > *m {
                    *m = x;
                }
            }
        }
        Ok(())
    }
}

impl Subordinator {
    #[inline]
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        Ok(match self {
            Subordinator::Stable { a, scale } => scale * positive_stable(*a, rng),
            Subordinator::Mixed { a1, scale1, a2, scale2 } => {
                scale1 * positive_stable(*a1, rng) + scale2 * positive_stable(*a2, rng)
            }
            Subordinator::Tempered { a, lambda, dt } => tempered_stable(*a, *lambda, *dt, rng, 0)?,
        })
    }
}

impl CompoundPlan {
    #[inline]
    fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        for o in out.iter_mut() {
            *o = self.gauss_sd * rng.sample::<f64, _>(StandardNormal);
        }
        let n = self.poisson.sample(rng) as u64;
        let mut y = [0.0; MAX_DIM];
        let y = &mut y[..out.len()];
        for _ in 0..n {
            let Some(s) = self.law.sample_above(self.eps, rng) else {
                continue;
            };
            let sd = (2.0 * s).sqrt();
            let mut r2 = 0.0;
            for yi in y.iter_mut() {
                *yi = sd * rng.sample::<f64, _>(StandardNormal);
                r2 += *yi * *yi;
            }
            if self.cutoff_sq.is_some_and(|c2| r2 > c2) {
                continue;
            }
            for (o, yi) in out.iter_mut().zip(y.iter()) {
                *o += yi;
            }
        }
    }
}

/// Uniform on the open interval `(0, 1)`.
#[inline]
fn open_open<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

/// Positive `a`-stable variable with `E exp(-lambda S) = exp(-lambda^a)`,
/// `a` in `(0, 1)`, by Kanter's representation.
#[inline]
pub fn positive_stable<R: Rng + ?Sized>(a: f64, rng: &mut R) -> f64 {
    let u = open_open(rng);
    let e: f64 = rng.sample(Exp1);
    let ln_a =
        (a / (1.0 - a)) * (a * PI * u).sin().ln() + ((1.0 - a) * PI * u).sin().ln() - (PI * u).sin().ln() / (1.0 - a);
    ((1.0 - a) / a * (ln_a - e.ln())).exp()
}

/// Symmetric stable variable with `E exp(i xi Y) = exp(-|xi|^alpha)`,
/// `alpha` in `(1, 2)`, by Chambers-Mallows-Stuck.
#[inline]
pub fn symmetric_stable<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    let v = PI * (open_open(rng) - 0.5);
    let w: f64 = rng.sample(Exp1);
    let ln_mag = -v.cos().ln() / alpha + (1.0 - alpha) / alpha * (((1.0 - alpha) * v).cos().ln() - w.ln());
    (alpha * v).sin() * ln_mag.exp()
}

/// Tempered positive stable increment over `dt` by rejection from the stable
/// one; falls back to two half steps after [`TEMPERED_RETRY_CAP`] rejections.
fn tempered_stable<R: Rng + ?Sized>(a: f64, lambda: f64, dt: f64, rng: &mut R, depth: u32) -> Result<f64> {
    let scale = dt.powf(1.0 / a);
    for _ in 0..TEMPERED_RETRY_CAP {
        let s = scale * positive_stable(a, rng);
        if rng.random::<f64>() < (-lambda * s).exp() {
            return Ok(s);
        }
    }
    if depth >= MAX_HALVINGS {
        return Err(Error::SamplerFailure(format!(
            "tempered rejection exhausted: a = {a}, lambda = {lambda}, dt = {dt:e}, \
             {MAX_HALVINGS} halvings of {TEMPERED_RETRY_CAP} attempts"
        )));
    }
    Ok(tempered_stable(a, lambda, 0.5 * dt, rng, depth + 1)? + tempered_stable(a, lambda, 0.5 * dt, rng, depth + 1)?)
}

/// Sampled skeleton of one path.
#[derive(Clone, Debug, PartialEq)]
pub struct PathGrid {
    pub t_end: f64,
    pub n_steps: usize,
    pub dimension: usize,
    positions: Vec<f64>,
}

impl PathGrid {
    pub fn dt(&self) -> f64 {
        self.t_end / self.n_steps as f64
    }

    pub fn position(&self, k: usize) -> &[f64] {
        &self.positions[k * self.dimension..(k + 1) * self.dimension]
    }

    pub fn positions(&self) -> impl Iterator<Item = &[f64]> {
        self.positions.chunks_exact(self.dimension)
    }
}

pub fn sample_increment(spec: &LevyProcessSpec, dt: f64, stream: &RngStream) -> Result<Vec<f64>> {
    IncrementSampler::new(spec, dt)?.sample_increment(&mut stream.rng())
}

pub fn sample_path_skeleton(
    spec: &LevyProcessSpec,
    start: &[f64],
    t_end: f64,
    n_steps: usize,
    stream: &RngStream,
) -> Result<PathGrid> {
    if n_steps == 0 {
        return Err(Error::Domain("n_steps must be >= 1".into()));
    }
    let sampler = IncrementSampler::new(spec, t_end / n_steps as f64)?;
    sampler.skeleton(start, n_steps, &mut stream.rng())
}

/// Grid supremum of a 1-d path from 0 over `[0, t_end]`. Biased low: the
/// skeleton misses excursions between grid points.
pub fn sample_sup_1d(spec: &LevyProcessSpec, t_end: f64, n_steps: usize, stream: &RngStream) -> Result<f64> {
    if spec.dimension != 1 {
        return Err(Error::Domain("sample_sup_1d needs dimension 1".into()));
    }
    if n_steps == 0 {
        return Err(Error::Domain("n_steps must be >= 1".into()));
    }
    let sampler = IncrementSampler::new(spec, t_end / n_steps as f64)?;
    let mut out = [0.0];
    sampler.nested_sups(n_steps, &[1], &mut stream.rng(), &mut out)?;
    Ok(out[0])
}

/// Real part of the empirical characteristic function at `xi` and its
/// standard error.
pub fn empirical_cf(samples: &[f64], xi: f64) -> (f64, f64) {
    let mut m = crate::numerics::Moments::default();
    for &x in samples {
        m.push((xi * x).cos());
    }
    (m.mean(), m.se())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy::TruncationSpec;
    use crate::numerics::Moments;

    fn spec(p: Process, d: usize) -> LevyProcessSpec {
        LevyProcessSpec::new(p, d).unwrap()
    }

    #[test]
    fn kanter_laplace_transform() {
        let mut rng = RngStream::new(1, 1).rng();
        for a in [0.6, 0.75, 0.95] {
            let mut m = Moments::default();
            for _ in 0..200_000 {
                m.push((-positive_stable(a, &mut rng)).exp());
            }
            let target = (-1.0f64).exp();
            assert!((m.mean() - target).abs() < 4.0 * m.se(), "a={a}: {}", m.mean());
        }
    }

    #[test]
    fn single_step_skeleton_is_start_plus_increment() {
        let s = spec(Process::Stable { alpha: 1.5 }, 2);
        let stream = RngStream::new(3, 9);
        let path = sample_path_skeleton(&s, &[0.25, -0.5], 0.1, 1, &stream).unwrap();
        let inc = sample_increment(&s, 0.1, &stream).unwrap();
        assert_eq!(path.position(0), &[0.25, -0.5]);
        assert_eq!(path.position(1), &[0.25 + inc[0], -0.5 + inc[1]]);
    }

    #[test]
    fn one_step_sup_is_positive_part() {
        let s = spec(Process::Stable { alpha: 1.5 }, 1);
        for k in 0..20 {
            let stream = RngStream::new(5, k);
            let sup = sample_sup_1d(&s, 1.0, 1, &stream).unwrap();
            let inc = sample_increment(&s, 1.0, &stream).unwrap()[0];
            assert_eq!(sup, inc.max(0.0));
        }
    }

    #[test]
    fn nested_sups_are_monotone() {
        let s = spec(Process::Stable { alpha: 1.3 }, 1);
        let sampler = IncrementSampler::new(&s, 1.0 / 1024.0).unwrap();
        for k in 0..200 {
            let mut rng = RngStream::new(11, k).rng();
            let mut out = [0.0; 4];
            sampler.nested_sups(1024, &[64, 16, 4, 1], &mut rng, &mut out).unwrap();
            assert!(out.windows(2).all(|w| w[0] <= w[1]), "{out:?}");
        }
    }

    #[test]
    fn increments_are_deterministic() {
        for p in crate::levy::catalogue() {
            let s = spec(p.clone(), 2);
            let stream = RngStream::for_path(17, 3, 99);
            let a = sample_increment(&s, 0.01, &stream).unwrap();
            let b = sample_increment(&s, 0.01, &stream).unwrap();
            assert_eq!(a, b, "{p:?}");
        }
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let s = spec(Process::Brownian, 2);
        let stream = RngStream::new(0, 0);
        assert!(sample_path_skeleton(&s, &[0.0], 1.0, 4, &stream).is_err());
        assert!(sample_sup_1d(&s, 1.0, 4, &stream).is_err());
        assert!(sample_path_skeleton(&s, &[0.0, 0.0], 1.0, 0, &stream).is_err());
    }

    #[test]
    fn compound_route_matches_base_when_cutoff_inactive() {
        let base = spec(Process::Stable { alpha: 1.5 }, 2);
        let trunc = spec(
            Process::Truncated(TruncationSpec::new(Process::Stable { alpha: 1.5 }, 1e6)),
            2,
        );
        let opts = SamplerOptions::default();
        let dt = 1e-6;
        let a = IncrementSampler::compound(&base, dt, None, &opts).unwrap();
        let b = IncrementSampler::with_options(&trunc, dt, &opts).unwrap();
        assert_eq!(a.jump_threshold(), b.jump_threshold());
        let mut r1 = RngStream::new(2, 2).rng();
        let mut r2 = RngStream::new(2, 2).rng();
        let pa = a.skeleton(&[0.0, 0.0], 500, &mut r1).unwrap();
        let pb = b.skeleton(&[0.0, 0.0], 500, &mut r2).unwrap();
        assert_eq!(pa, pb);
    }

    #[test]
    fn truncated_jumps_never_exceed_cutoff() {
        // with a tiny Gaussian part every large excursion must come from jumps
        let trunc = spec(
            Process::Truncated(TruncationSpec::new(Process::Stable { alpha: 1.2 }, 0.5)),
            1,
        );
        let sampler = IncrementSampler::new(&trunc, 1e-6).unwrap();
        let mut rng = RngStream::new(4, 4).rng();
        let mut max_abs: f64 = 0.0;
        for _ in 0..200_000 {
            let v = sampler.sample_increment(&mut rng).unwrap()[0];
            max_abs = max_abs.max(v.abs());
        }
        assert!(max_abs < 0.5 + 0.01, "{max_abs}");
    }

    #[test]
    fn tempered_rejection_acceptance_rate() {
        // acceptance probability is exp(-m dt)
        let mut rng = RngStream::new(8, 8).rng();
        let (a, lambda) = (0.75, 1.0);
        let n = 20_000;
        let mut m = Moments::default();
        for _ in 0..n {
            let s = tempered_stable(a, lambda, 1.0, &mut rng, 0).unwrap();
            m.push((-s).exp());
        }
        // E exp(-S) = exp(-((1 + lambda)^a - lambda^a))
        let target = (-(2f64.powf(a) - 1.0)).exp();
        assert!((m.mean() - target).abs() < 4.0 * m.se());
    }
}
