//! Monte Carlo spectral heat content: stratified survival estimator,
//! boundary-frame experiments, theorem scans and the truncation comparison.

mod frame;
mod scan;

pub use frame::{
    ball_experiment, cancellation_gap, canonical_frame, geometric_nodes, halfspace_crossing_prob,
    halfspace_crossing_probs, halfspace_limit_experiment, outer_ball_experiment, CrossingEstimate, FrameConfig,
    FrameRow, IntegralEstimate,
};
pub use scan::{
    corollary_experiment, run_theorem_scan, run_theorem_scan_with, AsymptoticReport, CorollaryReport, CorollaryRow,
    ReportRow, ScanConfig,
};

use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::{sample_in_shells, Domain, Shell};
use crate::levy::LevyProcessSpec;
use crate::parallel::map_chunks;
use crate::rng::{experiment_id, RngStream};
use crate::sampling::{IncrementSampler, SamplerOptions, MAX_DIM};

/// Default step-schedule constants: `n = ceil(K t^{-gamma})`.
pub const DEFAULT_K: f64 = 64.0;
pub const DEFAULT_GAMMA: f64 = 0.5;

/// Step count `ceil(k t^{-gamma})`, rounded up to an even number so the
/// half-resolution grid of the refinement check covers `[0, t]`.
pub fn step_count(t: f64, k: f64, gamma: f64) -> Result<u64> {
    if !(t > 0.0 && k > 0.0 && gamma >= 0.0) {
        return Err(Error::Domain(format!(
            "step schedule needs t > 0, K > 0, gamma >= 0 (t = {t}, K = {k}, gamma = {gamma})"
        )));
    }
    let n = (k * t.powf(-gamma)).ceil();
    if !(n < 1e12) {
        return Err(Error::Domain(format!("step schedule gives {n} steps at t = {t}")));
    }
    let n = (n as u64).max(2);
    Ok(n + n % 2)
}

/// Boundary-layer stratification.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LayerPlan {
    pub depth: f64,
    pub boundary_fraction: f64,
}

impl LayerPlan {
    pub const DEFAULT_BOUNDARY_FRACTION: f64 = 0.8;
    /// Default depth in units of the process length scale at the smallest t.
    pub const DEFAULT_DEPTH_SCALES: f64 = 8.0;

    pub fn new(domain: &Domain, depth: f64, boundary_fraction: f64) -> Result<Self> {
        domain.inner_shell(depth)?;
        if !(boundary_fraction > 0.0 && boundary_fraction < 1.0) {
            return Err(Error::Domain(format!(
                "boundary fraction must lie in (0, 1), got {boundary_fraction}"
            )));
        }
        Ok(Self {
            depth,
            boundary_fraction,
        })
    }

    /// `a = min(R/2, 8 / psi^{-1}(1/t_min))` with 80% of paths near the boundary.
    pub fn default_for(spec: &LevyProcessSpec, domain: &Domain, t_min: f64) -> Result<Self> {
        let scale = 1.0 / spec.inverse_psi(1.0 / t_min)?;
        let depth = (0.5 * domain.ball_radius()).min(Self::DEFAULT_DEPTH_SCALES * scale);
        Self::new(domain, depth, Self::DEFAULT_BOUNDARY_FRACTION)
    }

    pub fn interior_fraction(&self) -> f64 {
        1.0 - self.boundary_fraction
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HeatContentEstimate {
    pub t: f64,
    pub q_hat: f64,
    pub q_se: f64,
    pub loss: f64,
    pub loss_se: f64,
    pub n_paths: u64,
    pub n_steps: u64,
    /// Same paths monitored on the even-indexed grid points only.
    pub q_hat_coarse: f64,
    /// Loss from starting points in `D_a` (zero when unstratified).
    pub interior_loss: f64,
    pub interior_loss_se: f64,
}

#[derive(Clone, Debug)]
pub(crate) struct Stratum {
    pub shells: Vec<Shell>,
    pub volume: f64,
    pub n_paths: u64,
    pub first_index: u64,
}

/// Survival counts of one stratum for up to two coupled arms.
#[derive(Clone, Debug, Default, PartialEq)]
pub(crate) struct Tally {
    pub n: u64,
    pub fine: [u64; 2],
    pub coarse: [u64; 2],
    /// Paths surviving (fine grid) in arm 0 but not arm 1, and vice versa.
    pub only_first: u64,
    pub only_second: u64,
}

impl Tally {
    fn add(&mut self, o: &Tally) {
        self.n += o.n;
        for i in 0..2 {
            self.fine[i] += o.fine[i];
            self.coarse[i] += o.coarse[i];
        }
        self.only_first += o.only_first;
        self.only_second += o.only_second;
    }
}

pub(crate) fn strata_for(domain: &Domain, plan: Option<&LayerPlan>, n_paths: u64) -> Result<Vec<Stratum>> {
    let d = domain.dimension();
    let Some(plan) = plan else {
        return Ok(vec![Stratum {
            shells: vec![domain.shell()],
            volume: domain.volume(),
            n_paths,
            first_index: 0,
        }]);
    };
    if n_paths < 2 {
        return Err(Error::Domain("a stratified estimate needs at least 2 paths".into()));
    }
    let boundary = domain.boundary_shells(plan.depth)?;
    let interior = vec![domain.inner_shell(plan.depth)?];
    let n_b = ((plan.boundary_fraction * n_paths as f64).round() as u64).clamp(1, n_paths - 1);
    let vol = |s: &[Shell]| s.iter().map(|s| s.volume(d)).sum::<f64>();
    Ok(vec![
        Stratum {
            volume: vol(&boundary),
            shells: boundary,
            n_paths: n_b,
            first_index: 0,
        },
        Stratum {
            volume: vol(&interior),
            shells: interior,
            n_paths: n_paths - n_b,
            first_index: n_b,
        },
    ])
}

/// Runs one path from `start`; returns survival on the full and the
/// even-indexed grid.
#[inline]
fn survive<R: Rng>(
    sampler: &IncrementSampler,
    domain: &Domain,
    start: &[f64],
    n_steps: u64,
    rng: &mut R,
) -> Result<(bool, bool)> {
    let d = start.len();
    let mut x = [0.0; MAX_DIM];
    x[..d].copy_from_slice(start);
    let mut inc = [0.0; MAX_DIM];
    let mut fine = true;
    for k in 1..=n_steps {
        sampler.sample_into(rng, &mut inc)?;
        let mut q = 0.0;
        for i in 0..d {
            x[i] += inc[i];
            q += x[i] * x[i];
        }
        if !domain.contains_norm_sq(q) {
            fine = false;
            if k % 2 == 0 {
                return Ok((false, false));
            }
        }
    }
    Ok((fine, true))
}

/// Survival tallies per stratum; every arm replays the same stream after the
/// start point is drawn.
pub(crate) fn tally(
    arms: &[IncrementSampler],
    domain: &Domain,
    strata: &[Stratum],
    n_steps: u64,
    seed: u64,
    label: &str,
    workers: usize,
) -> Result<Vec<Tally>> {
    assert!(!arms.is_empty() && arms.len() <= 2);
    let d = domain.dimension();
    if arms.iter().any(|a| a.dimension() != d) {
        return Err(Error::Domain(format!(
            "process dimension {} does not match domain dimension {d}",
            arms[0].dimension()
        )));
    }
    let exp = experiment_id(label);
    strata
        .iter()
        .map(|s| {
            let parts = map_chunks(s.n_paths, workers, |range| {
                let mut t = Tally::default();
                let mut start = [0.0; MAX_DIM];
                for i in range {
                    let mut rng = RngStream::for_path(seed, exp, s.first_index + i).rng();
                    sample_in_shells(&s.shells, d, &mut rng, &mut start);
                    let mut fine = [false; 2];
                    for (j, arm) in arms.iter().enumerate() {
                        let mut r = rng.clone();
                        let (f, c) = survive(arm, domain, &start[..d], n_steps, &mut r)?;
                        fine[j] = f;
                        t.fine[j] += f as u64;
                        t.coarse[j] += c as u64;
                    }
                    t.n += 1;
                    if arms.len() == 2 {
                        t.only_first += (fine[0] && !fine[1]) as u64;
                        t.only_second += (!fine[0] && fine[1]) as u64;
                    }
                }
                Ok(t)
            })?;
            let mut total = Tally::default();
            parts.iter().for_each(|p| total.add(p));
            Ok(total)
        })
        .collect()
}

/// `sum V_k S_k / n_k` and its binomial standard error.
pub(crate) fn stratified_mean(strata: &[Stratum], tallies: &[Tally], counts: impl Fn(&Tally) -> u64) -> (f64, f64) {
    let mut q = 0.0;
    let mut var = 0.0;
    for (s, t) in strata.iter().zip(tallies) {
        let p = counts(t) as f64 / t.n as f64;
        q += s.volume * p;
        var += s.volume * s.volume * p * (1.0 - p) / t.n as f64;
    }
    (q, var.sqrt())
}

pub(crate) fn estimate_from(
    t: f64,
    n_steps: u64,
    strata: &[Stratum],
    tallies: &[Tally],
    arm: usize,
    total_volume: f64,
) -> HeatContentEstimate {
    let (q_hat, q_se) = stratified_mean(strata, tallies, |x| x.fine[arm]);
    let (q_hat_coarse, _) = stratified_mean(strata, tallies, |x| x.coarse[arm]);
    let (interior_loss, interior_loss_se) = if strata.len() == 2 {
        let (q, se) = stratified_mean(&strata[1..], &tallies[1..], |x| x.fine[arm]);
        (strata[1].volume - q, se)
    } else {
        (0.0, 0.0)
    };
    let q_hat = q_hat.clamp(0.0, total_volume);
    HeatContentEstimate {
        t,
        q_hat,
        q_se,
        loss: total_volume - q_hat,
        loss_se: q_se,
        n_paths: tallies.iter().map(|x| x.n).sum(),
        n_steps,
        q_hat_coarse: q_hat_coarse.clamp(0.0, total_volume),
        interior_loss,
        interior_loss_se,
    }
}

/// Stratified estimate of `Q_D(t)`: starting points uniform within each
/// stratum, survival means the whole skeleton stays in `D`. Grid monitoring
/// misses excursions, so `q_hat` is biased upward.
/// `layer_plan = None` gives the plain (unstratified) estimator.
#[allow(non_snake_case, clippy::too_many_arguments)]
pub fn estimate_Q(
    spec: &LevyProcessSpec,
    domain: &Domain,
    t: f64,
    n_paths: u64,
    n_steps: u64,
    layer_plan: Option<&LayerPlan>,
    seed: u64,
    workers: usize,
) -> Result<HeatContentEstimate> {
    estimate_q_with(
        spec,
        domain,
        t,
        n_paths,
        n_steps,
        layer_plan,
        seed,
        workers,
        &SamplerOptions::default(),
    )
}

#[allow(clippy::too_many_arguments)]
pub fn estimate_q_with(
    spec: &LevyProcessSpec,
    domain: &Domain,
    t: f64,
    n_paths: u64,
    n_steps: u64,
    layer_plan: Option<&LayerPlan>,
    seed: u64,
    workers: usize,
    opts: &SamplerOptions,
) -> Result<HeatContentEstimate> {
    check_run(t, n_paths, n_steps)?;
    let sampler = IncrementSampler::with_options(spec, t / n_steps as f64, opts)?;
    let strata = strata_for(domain, layer_plan, n_paths)?;
    let tallies = tally(&[sampler], domain, &strata, n_steps, seed, "heat-content", workers)?;
    Ok(estimate_from(t, n_steps, &strata, &tallies, 0, domain.volume()))
}

pub(crate) fn check_run(t: f64, n_paths: u64, n_steps: u64) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!("t must be > 0, got {t}")));
    }
    if n_paths == 0 || n_steps == 0 {
        return Err(Error::Domain("n_paths and n_steps must be >= 1".into()));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct InteriorRow {
    pub t: f64,
    pub loss: f64,
    pub loss_se: f64,
    pub ratio: f64,
    pub ratio_se: f64,
    pub exits: u64,
    pub n_paths: u64,
    pub n_steps: u64,
}

/// `int_{D_a} P_x(tau_D <= t) dx` and its ratio to `t` over `t_grid`.
#[allow(clippy::too_many_arguments)]
pub fn interior_loss_experiment(
    spec: &LevyProcessSpec,
    domain: &Domain,
    a: f64,
    t_grid: &[f64],
    n_paths: u64,
    k: f64,
    gamma: f64,
    seed: u64,
    workers: usize,
) -> Result<Vec<InteriorRow>> {
    let core = domain.inner_shell(a)?;
    let strata = vec![Stratum {
        shells: vec![core],
        volume: core.volume(domain.dimension()),
        n_paths,
        first_index: 0,
    }];
    t_grid
        .iter()
        .map(|&t| {
            let n_steps = step_count(t, k, gamma)?;
            check_run(t, n_paths, n_steps)?;
            let sampler = IncrementSampler::new(spec, t / n_steps as f64)?;
            let tallies = tally(&[sampler], domain, &strata, n_steps, seed, "interior", workers)?;
            let (q, se) = stratified_mean(&strata, &tallies, |x| x.fine[0]);
            let loss = strata[0].volume - q;
            Ok(InteriorRow {
                t,
                loss,
                loss_se: se,
                ratio: loss / t,
                ratio_se: se / t,
                exits: tallies[0].n - tallies[0].fine[0],
                n_paths,
                n_steps,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy::Process;

    fn disk() -> Domain {
        Domain::ball(2, 1.0).unwrap()
    }

    #[test]
    fn schedule_defaults() {
        assert_eq!(step_count(1e-4, 64.0, 0.5).unwrap(), 6400);
        assert_eq!(step_count(1e-2, 64.0, 0.5).unwrap(), 640);
        assert_eq!(step_count(1e-3, 64.0, 0.5).unwrap(), 2024);
        assert!(step_count(0.0, 64.0, 0.5).is_err());
    }

    #[test]
    fn default_layer_depth() {
        let bm = LevyProcessSpec::new(Process::Brownian, 2).unwrap();
        let plan = LayerPlan::default_for(&bm, &disk(), 1e-4).unwrap();
        assert!((plan.depth - 0.08).abs() < 1e-12);
        assert!((plan.boundary_fraction + plan.interior_fraction() - 1.0).abs() < 1e-15);
        let plan = LayerPlan::default_for(&bm, &disk(), 1.0).unwrap();
        assert_eq!(plan.depth, 0.5);
        assert!(LayerPlan::new(&disk(), 0.6, 0.8).is_err());
        assert!(LayerPlan::new(&disk(), 0.1, 1.0).is_err());
    }

    #[test]
    fn tiny_time_keeps_all_heat() {
        let s = LevyProcessSpec::new(Process::Stable { alpha: 1.5 }, 2).unwrap();
        let plan = LayerPlan::new(&disk(), 0.1, 0.8).unwrap();
        let e = estimate_Q(&s, &disk(), 1e-12, 4000, 1, Some(&plan), 1, 1).unwrap();
        assert!((e.q_hat - disk().volume()).abs() <= 3.0 * e.q_se + 1e-3, "{e:?}");
        assert_eq!(e.loss, disk().volume() - e.q_hat);
    }

    #[test]
    fn estimate_is_in_range_and_deterministic() {
        let s = LevyProcessSpec::new(Process::Brownian, 2).unwrap();
        let plan = LayerPlan::new(&disk(), 0.2, 0.8).unwrap();
        let a = estimate_Q(&s, &disk(), 1e-2, 3000, 64, Some(&plan), 9, 1).unwrap();
        let b = estimate_Q(&s, &disk(), 1e-2, 3000, 64, Some(&plan), 9, 3).unwrap();
        assert_eq!(a, b);
        assert!(a.q_hat >= 0.0 && a.q_hat <= disk().volume());
        assert!(a.q_hat <= a.q_hat_coarse);
    }

    #[test]
    fn survival_is_monotone_in_time_on_shared_paths() {
        let s = LevyProcessSpec::new(Process::Stable { alpha: 1.5 }, 2).unwrap();
        let plan = LayerPlan::new(&disk(), 0.1, 0.8).unwrap();
        let dt = 2f64.powi(-17);
        let mut prev = f64::INFINITY;
        for n in [128u64, 256, 512] {
            let e = estimate_Q(&s, &disk(), dt * n as f64, 2000, n, Some(&plan), 3, 1).unwrap();
            assert!(e.q_hat <= prev, "{n}: {} > {prev}", e.q_hat);
            prev = e.q_hat;
        }
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let s = LevyProcessSpec::new(Process::Brownian, 3).unwrap();
        assert!(estimate_Q(&s, &disk(), 1e-2, 10, 4, None, 0, 1).is_err());
    }
}
