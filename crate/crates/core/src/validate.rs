//! Invariant checks shared by the `validate` command and the test suite.
//! Each check returns a [`CheckResult`]; `run_suite` runs them all.

use std::f64::consts::PI;
use std::fmt;

use statrs::function::erf::erfc;
use statrs::function::gamma::gamma;

use crate::asymptotics::{brownian_mean_sup, mean_sup_stable, predicted_heat_loss};
use crate::error::{Error, Result};
use crate::geometry::Domain;
use crate::heat_content::{
    canonical_frame, estimate_Q, halfspace_crossing_probs, run_theorem_scan, FrameConfig, LayerPlan, ScanConfig,
};
use crate::levy::{catalogue, LevyProcessSpec, Process};
use crate::numerics::{ks_two_sample, tanh_sinh, Moments};
use crate::parallel::map_chunks;
use crate::report::scan_row;
use crate::rng::{experiment_id, RngStream};
use crate::sampling::{IncrementSampler, MAX_DIM};

#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{status} {} {}", self.name, self.detail)
    }
}

fn err_result(name: &str, e: Error) -> CheckResult {
    CheckResult::new(name, false, format!("error: {e}"))
}

/// `n` increments of step `dt`, flattened as `n * d` coordinates.
pub fn draw_increments(
    spec: &LevyProcessSpec,
    dt: f64,
    n: u64,
    seed: u64,
    label: &str,
    workers: usize,
) -> Result<Vec<f64>> {
    let sampler = IncrementSampler::new(spec, dt)?;
    let d = spec.dimension;
    let exp = experiment_id(label);
    let parts = map_chunks(n, workers, |range| {
        let mut out = Vec::with_capacity(d * (range.end - range.start) as usize);
        let mut inc = [0.0; MAX_DIM];
        for i in range {
            let mut rng = RngStream::for_path(seed, exp, i).rng();
            sampler.sample_into(&mut rng, &mut inc)?;
            out.extend_from_slice(&inc[..d]);
        }
        Ok(out)
    })?;
    Ok(parts.concat())
}

/// `int_y^inf cos(v) v^{-beta} dv` by repeated integration by parts.
fn cos_tail(beta: f64, y: f64, depth: u32) -> f64 {
    let lead = -y.sin() * y.powf(-beta) + beta * y.cos() * y.powf(-beta - 1.0);
    if depth == 0 {
        lead
    } else {
        lead - beta * (beta + 1.0) * cos_tail(beta + 2.0, y, depth - 1)
    }
}

/// `int_0^x (1 - cos v) v^{-1-alpha} dv`, one period at a time up to a
/// split point and asymptotically beyond it.
fn one_minus_cos_moment(alpha: f64, x: f64) -> f64 {
    const SPLIT: f64 = 2000.0;
    let f = |v: f64, _: f64, _: f64| 2.0 * (0.5 * v).sin().powi(2) * v.powf(-1.0 - alpha);
    let cap = x.min(SPLIT);
    let period = 2.0 * PI;
    let mut sum = 0.0;
    let mut lo = 0.0;
    while lo < cap {
        let hi = (lo + period).min(cap);
        sum += tanh_sinh(f, lo, hi, 1e-13);
        lo = hi;
    }
    if x > cap {
        let tail = |y: f64| y.powf(-alpha) / alpha - cos_tail(1.0 + alpha, y, 3);
        sum += tail(cap) - tail(x);
    }
    sum
}

/// Exponent of the one-dimensional stable law with `psi = |xi|^alpha` after
/// removing jumps longer than `cutoff`.
pub fn truncated_stable_exponent(alpha: f64, cutoff: f64, xi: f64) -> f64 {
    if xi == 0.0 {
        return 0.0;
    }
    let xi = xi.abs();
    // int_0^inf (1 - cos v) v^{-1-alpha} dv
    let full = -gamma(-alpha) * (0.5 * PI * alpha).cos();
    xi.powf(alpha) * one_minus_cos_moment(alpha, xi * cutoff) / full
}

/// `psi(|xi|)` of a one-dimensional spec, with truncation applied. The
/// cutoff is radial, so in higher dimensions the marginal differs.
pub fn marginal_exponent(process: &Process, xi: f64) -> Result<f64> {
    match process {
        Process::Truncated(t) => match *t.base {
            Process::Stable { alpha } => Ok(truncated_stable_exponent(alpha, t.cutoff, xi)),
            Process::Brownian => Ok(xi * xi),
            _ => Err(Error::InvalidSpec(format!(
                "no reference exponent for truncated {}",
                t.base.name()
            ))),
        },
        p => Ok(p.psi(xi.abs())),
    }
}

/// Empirical characteristic function of unit-time increments of the first
/// coordinate against `exp(-psi)` at each frequency, within `3 se`.
pub fn check_ecf(spec: &LevyProcessSpec, freqs: &[f64], n: u64, seed: u64, workers: usize) -> CheckResult {
    let name = format!("ecf[{},d={}]", spec.process.name(), spec.dimension);
    let run = || -> Result<CheckResult> {
        let xs = draw_increments(spec, 1.0, n, seed, "validate-ecf", workers)?;
        let d = spec.dimension;
        let mut worst: f64 = 0.0;
        let mut detail = Vec::new();
        for &xi in freqs {
            let mut m = Moments::default();
            for x in xs.iter().step_by(d) {
                m.push((xi * x).cos());
            }
            let exact = (-marginal_exponent(&spec.process, xi)?).exp();
            let z = (m.mean() - exact).abs() / m.se().max(1e-300);
            worst = worst.max(z);
            detail.push(format!("xi={xi}:z={z:.2}"));
        }
        Ok(CheckResult::new(&name, worst <= 3.0, detail.join(" ")))
    };
    run().unwrap_or_else(|e| err_result(&name, e))
}

/// `X_t` against `t^{1/alpha} X_1` by a two-sample KS test.
pub fn check_self_similarity(alpha: f64, dimension: usize, n: u64, seed: u64, workers: usize) -> CheckResult {
    let name = format!("self-similarity[alpha={alpha},d={dimension}]");
    let run = || -> Result<CheckResult> {
        let spec = LevyProcessSpec::new(Process::Stable { alpha }, dimension)?;
        let t = 1e-2;
        let small = draw_increments(&spec, t, n, seed, "validate-ss-small", workers)?;
        let unit = draw_increments(&spec, 1.0, n, seed, "validate-ss-unit", workers)?;
        let scale = t.powf(-1.0 / alpha);
        let a: Vec<f64> = small.iter().step_by(dimension).map(|x| x * scale).collect();
        let b: Vec<f64> = unit.iter().step_by(dimension).copied().collect();
        let (stat, p) = ks_two_sample(&a, &b);
        Ok(CheckResult::new(&name, p > 1e-3, format!("ks={stat:.4} p={p:.4}")))
    };
    run().unwrap_or_else(|e| err_result(&name, e))
}

/// Isotropy through bounded odd statistics: `tanh` of each coordinate,
/// products of pairs and `cos 2theta`, `sin 2theta` of the first two
/// coordinates all have mean 0.
pub fn check_isotropy(spec: &LevyProcessSpec, n: u64, seed: u64, workers: usize) -> CheckResult {
    let name = format!("isotropy[{},d={}]", spec.process.name(), spec.dimension);
    let run = || -> Result<CheckResult> {
        let d = spec.dimension;
        if d < 2 {
            return Err(Error::Domain("isotropy needs d >= 2".into()));
        }
        let xs = draw_increments(spec, 1.0, n, seed, "validate-isotropy", workers)?;
        let mut stats = vec![Moments::default(); d + d * (d - 1) / 2 + 2];
        for x in xs.chunks(d) {
            let th: Vec<f64> = x.iter().map(|v| v.tanh()).collect();
            let mut k = 0;
            for v in &th {
                stats[k].push(*v);
                k += 1;
            }
            for i in 0..d {
                for j in i + 1..d {
                    stats[k].push(th[i] * th[j]);
                    k += 1;
                }
            }
            let r2 = x[0] * x[0] + x[1] * x[1];
            if r2 > 0.0 {
                stats[k].push((x[0] * x[0] - x[1] * x[1]) / r2);
                stats[k + 1].push(2.0 * x[0] * x[1] / r2);
            }
        }
        let worst = stats
            .iter()
            .map(|m| m.mean().abs() / m.se().max(1e-300))
            .fold(0.0, f64::max);
        Ok(CheckResult::new(&name, worst <= 3.0, format!("max_z={worst:.2}")))
    };
    run().unwrap_or_else(|e| err_result(&name, e))
}

/// Grid suprema on nested grids never decrease under refinement.
pub fn check_grid_sup_monotone(alpha: f64, n_paths: u64, seed: u64) -> CheckResult {
    let name = format!("grid-sup-monotone[alpha={alpha}]");
    let run = || -> Result<CheckResult> {
        let spec = LevyProcessSpec::new(Process::Stable { alpha }, 1)?;
        let sampler = IncrementSampler::new(&spec, 1.0 / 1024.0)?;
        let exp = experiment_id("validate-nested");
        let mut bad = 0;
        let mut out = [0.0; 4];
        for i in 0..n_paths {
            let mut rng = RngStream::for_path(seed, exp, i).rng();
            sampler.nested_sups(1024, &[64, 16, 4, 1], &mut rng, &mut out)?;
            bad += out.windows(2).any(|w| w[1] < w[0]) as u64;
        }
        Ok(CheckResult::new(&name, bad == 0, format!("violations={bad}/{n_paths}")))
    };
    run().unwrap_or_else(|e| err_result(&name, e))
}

pub fn check_sampler_determinism(spec: &LevyProcessSpec, seed: u64) -> CheckResult {
    let name = format!("sampler-determinism[{}]", spec.process.name());
    let run = || -> Result<CheckResult> {
        let a = draw_increments(spec, 0.1, 1000, seed, "validate-det", 1)?;
        let b = draw_increments(spec, 0.1, 1000, seed, "validate-det", 3)?;
        let same = a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()) && a.len() == b.len();
        Ok(CheckResult::new(&name, same, format!("n={}", a.len())))
    };
    run().unwrap_or_else(|e| err_result(&name, e))
}

/// Extrapolated Brownian crossing probabilities against
/// `erfc(u / (2 sqrt t))` on the grid `us x ts`.
pub fn check_brownian_erfc(
    us: &[f64],
    ts: &[f64],
    n_steps: u64,
    n_paths: u64,
    seed: u64,
    workers: usize,
) -> CheckResult {
    let name = "brownian-erfc";
    let run = || -> Result<CheckResult> {
        let spec = LevyProcessSpec::new(Process::Brownian, 1)?;
        let mut worst: f64 = 0.0;
        for &t in ts {
            for e in halfspace_crossing_probs(&spec, us, t, n_steps, n_paths, seed, workers)? {
                let exact = erfc(e.u / (2.0 * t.sqrt()));
                worst = worst.max((e.p_extrapolated - exact).abs() / e.se_extrapolated.max(1e-300));
            }
        }
        Ok(CheckResult::new(
            name,
            worst <= 3.0,
            format!("grid={}x{} max_z={worst:.2}", us.len(), ts.len()),
        ))
    };
    run().unwrap_or_else(|e| err_result(name, e))
}

/// Distance from `x` to a polygonal mesh of each boundary circle (d = 2).
fn mesh_distance(domain: &Domain, x: &[f64], segments: usize) -> f64 {
    let radii: Vec<f64> = match *domain {
        Domain::Ball { radius, .. } => vec![radius],
        Domain::Annulus { inner, outer, .. } => vec![inner, outer],
    };
    let mut best = f64::INFINITY;
    for r in radii {
        let mut prev = [r, 0.0];
        for k in 1..=segments {
            let th = 2.0 * PI * k as f64 / segments as f64;
            let cur = [r * th.cos(), r * th.sin()];
            let (ex, ey) = (cur[0] - prev[0], cur[1] - prev[1]);
            let s = (((x[0] - prev[0]) * ex + (x[1] - prev[1]) * ey) / (ex * ex + ey * ey)).clamp(0.0, 1.0);
            let (dx, dy) = (x[0] - prev[0] - s * ex, x[1] - prev[1] - s * ey);
            best = best.min(dx.hypot(dy));
            prev = cur;
        }
    }
    best
}

/// `dist_to_boundary` against a dense polygonal boundary mesh at points
/// within 0.1 of the boundary (d = 2).
pub fn check_distance_mesh(domain: &Domain, n_points: u64, seed: u64) -> CheckResult {
    let name = format!("distance-mesh[{domain:?}]");
    if domain.dimension() != 2 {
        return err_result(&name, Error::Domain("mesh check is two-dimensional".into()));
    }
    let segments = 8192;
    let mut rng = RngStream::new(seed, experiment_id("validate-mesh")).rng();
    let mut worst: f64 = 0.0;
    let mut tested = 0;
    while tested < n_points {
        let x = domain.sample_uniform(&mut rng);
        if domain.dist_to_boundary(&x) > 0.1 {
            continue;
        }
        tested += 1;
        worst = worst.max((domain.dist_to_boundary(&x) - mesh_distance(domain, &x, segments)).abs());
    }
    CheckResult::new(&name, worst <= 1e-6, format!("n={n_points} max_err={worst:.2e}"))
}

/// `|dD| ((R-a)/R)^{d-1} <= |dD_a| <= |dD| (R/(R-a))^{d-1}` on a grid of depths.
pub fn check_perimeter_inequality(domain: &Domain) -> CheckResult {
    let name = format!("perimeter-inequality[{domain:?}]");
    let r = domain.ball_radius();
    let p = domain.perimeter();
    let e = domain.dimension() as i32 - 1;
    let mut bad = Vec::new();
    for k in 1..=50 {
        let a = 0.5 * r * k as f64 / 50.0;
        match domain.layer_bounds(a) {
            Ok(b) => {
                let lo = p * ((r - a) / r).powi(e);
                let hi = p * (r / (r - a)).powi(e);
                let tol = 1e-12 * p;
                if b.perimeter < lo - tol || b.perimeter > hi + tol {
                    bad.push(a);
                }
            }
            Err(e) => return err_result(&name, e),
        }
    }
    CheckResult::new(&name, bad.is_empty(), format!("violations={bad:?}"))
}

pub fn check_uniform_sampling(domain: &Domain, n: u64, seed: u64) -> CheckResult {
    let name = format!("uniform-sampling[{domain:?}]");
    let mut rng = RngStream::new(seed, experiment_id("validate-uniform")).rng();
    let outside = (0..n)
        .filter(|_| !domain.contains(&domain.sample_uniform(&mut rng)))
        .count();
    CheckResult::new(&name, outside == 0, format!("outside={outside}/{n}"))
}

/// Roundtrip, monotonicity, `psi(0) = 0` and the regular-variation probe for
/// one catalogue process.
pub fn check_exponent(process: &Process) -> CheckResult {
    let name = format!("exponent[{}]", process.name());
    let run = || -> Result<CheckResult> {
        let spec = LevyProcessSpec::new(process.clone(), 1)?;
        let mut worst_rt: f64 = 0.0;
        for k in 0..=36 {
            let b = 10f64.powf(-3.0 + k as f64 / 4.0);
            let y = spec.eval_psi(b)?;
            let back = spec.eval_psi(spec.inverse_psi(y)?)?;
            worst_rt = worst_rt.max((back - y).abs() / y);
        }
        let mut prev = 0.0;
        let mut monotone = spec.eval_psi(0.0)? == 0.0;
        for k in 0..10_000 {
            let v = spec.eval_psi(10f64.powf(-6.0 + 12.0 * k as f64 / 9999.0))?;
            monotone &= v >= prev;
            prev = v;
        }
        let mut worst_rv: f64 = 0.0;
        for x in [2.0, 4.0] {
            let a = spec.rv_index_probe(1e8, x)?;
            worst_rv = worst_rv.max((a / spec.alpha() - 1.0).abs());
        }
        Ok(CheckResult::new(
            &name,
            worst_rt <= 1e-9 && monotone && worst_rv <= 0.03,
            format!("roundtrip={worst_rt:.1e} monotone={monotone} rv_rel={worst_rv:.3}"),
        ))
    };
    run().unwrap_or_else(|e| err_result(&name, e))
}

/// Stratified and plain estimators on the same configuration agree within
/// three combined standard errors.
pub fn check_stratification(n_paths: u64, seed: u64, workers: usize) -> CheckResult {
    let name = "stratification-consistency";
    let run = || -> Result<CheckResult> {
        let spec = LevyProcessSpec::new(Process::Stable { alpha: 1.5 }, 2)?;
        let disk = Domain::ball(2, 1.0)?;
        let plan = LayerPlan::new(&disk, 0.2, 0.8)?;
        let t = 1e-2;
        let a = estimate_Q(&spec, &disk, t, n_paths, 64, Some(&plan), seed, workers)?;
        let b = estimate_Q(&spec, &disk, t, n_paths, 64, None, seed.wrapping_add(1), workers)?;
        let z = (a.q_hat - b.q_hat).abs() / a.q_se.hypot(b.q_se);
        Ok(CheckResult::new(
            name,
            z <= 3.0 && (0.0..=disk.volume()).contains(&a.q_hat),
            format!("stratified={:.5} plain={:.5} z={z:.2}", a.q_hat, b.q_hat),
        ))
    };
    run().unwrap_or_else(|e| err_result(name, e))
}

/// Survival on shared paths is nonincreasing in the horizon.
pub fn check_time_monotonicity(n_paths: u64, seed: u64, workers: usize) -> CheckResult {
    let name = "time-monotonicity";
    let run = || -> Result<CheckResult> {
        let spec = LevyProcessSpec::new(Process::Stable { alpha: 1.5 }, 2)?;
        let disk = Domain::ball(2, 1.0)?;
        let plan = LayerPlan::new(&disk, 0.1, 0.8)?;
        let dt = 2f64.powi(-16);
        let qs = [64u64, 128, 256]
            .iter()
            .map(|&n| Ok(estimate_Q(&spec, &disk, dt * n as f64, n_paths, n, Some(&plan), seed, workers)?.q_hat))
            .collect::<Result<Vec<_>>>()?;
        Ok(CheckResult::new(
            name,
            qs.windows(2).all(|w| w[1] <= w[0]),
            format!("q={qs:?}"),
        ))
    };
    run().unwrap_or_else(|e| err_result(name, e))
}

/// Ball, half-space and outer-ball exits are ordered on every path.
pub fn check_frame_ordering(alpha: f64, n_paths: u64, seed: u64, workers: usize) -> CheckResult {
    let name = format!("frame-ordering[alpha={alpha}]");
    let run = || -> Result<CheckResult> {
        let process = if alpha == 2.0 {
            Process::Brownian
        } else {
            Process::Stable { alpha }
        };
        let spec = LevyProcessSpec::new(process, 2)?;
        let mut cfg = FrameConfig::new(1.0, 0.5, n_paths);
        cfg.seed = seed;
        cfg.workers = workers;
        let row = canonical_frame(&spec, 1e-2, &cfg)?;
        let (b, o) = (row.ball.unwrap().value, row.outer.unwrap().value);
        let h = row.halfspace.value;
        Ok(CheckResult::new(
            &name,
            row.ordered && b >= h && h >= o,
            format!("ball={b:.4} half={h:.4} outer={o:.4}"),
        ))
    };
    run().unwrap_or_else(|e| err_result(&name, e))
}

pub fn check_mean_sup_closed_form() -> CheckResult {
    let name = "mean-sup-closed-form";
    match mean_sup_stable(2.0, 1, 0, 1) {
        Ok(v) => CheckResult::new(
            name,
            v.value == brownian_mean_sup() && v.se == 0.0,
            format!("value={:.16e}", v.value),
        ),
        Err(e) => err_result(name, e),
    }
}

/// Level means of the extrapolated estimator increase with the grid size.
pub fn check_mean_sup_levels(alpha: f64, n_paths: u64, seed: u64, workers: usize) -> CheckResult {
    let name = format!("mean-sup-levels[alpha={alpha}]");
    match mean_sup_stable(alpha, n_paths, seed, workers) {
        Ok(v) => {
            let means: Vec<f64> = v.level_means.iter().map(|l| l.1).collect();
            CheckResult::new(
                &name,
                means.windows(2).all(|w| w[0] <= w[1]),
                format!("levels={means:?} value={:.4}", v.value),
            )
        }
        Err(e) => err_result(&name, e),
    }
}

/// Doubling the perimeter doubles the prediction.
pub fn check_prediction_homogeneity() -> CheckResult {
    let name = "prediction-homogeneity";
    let run = || -> Result<CheckResult> {
        let spec = LevyProcessSpec::new(Process::Brownian, 2)?;
        let small = predicted_heat_loss(&spec, &Domain::ball(2, 1.0)?, 1e-4)?;
        let large = predicted_heat_loss(&spec, &Domain::ball(2, 2.0)?, 1e-4)?;
        Ok(CheckResult::new(
            name,
            large == 2.0 * small,
            format!("{small} -> {large}"),
        ))
    };
    run().unwrap_or_else(|e| err_result(name, e))
}

/// The scan CSV does not depend on the worker count.
pub fn check_csv_determinism(n_paths: u64, seed: u64) -> CheckResult {
    let name = "csv-determinism";
    let run = || -> Result<CheckResult> {
        let spec = LevyProcessSpec::new(Process::Brownian, 2)?;
        let disk = Domain::ball(2, 1.0)?;
        let csv = |workers| -> Result<String> {
            let mut cfg = ScanConfig::new(vec![1e-2, 5e-3, 2.5e-3], n_paths);
            cfg.seed = seed;
            cfg.workers = workers;
            let r = run_theorem_scan(&spec, &disk, &cfg)?;
            Ok(r.rows.iter().map(scan_row).collect::<Vec<_>>().join("\n"))
        };
        Ok(CheckResult::new(name, csv(1)? == csv(4)?, "workers 1 vs 4"))
    };
    run().unwrap_or_else(|e| err_result(name, e))
}

/// Every invariant check at a budget scaled by `budget`.
pub fn run_suite(budget: f64, seed: u64, workers: usize) -> Vec<CheckResult> {
    let n = |base: f64| ((base * budget).round() as u64).max(100);
    let mut out = Vec::new();
    for p in catalogue() {
        out.push(check_exponent(&p));
    }
    for p in catalogue() {
        let spec = LevyProcessSpec::new(p, 1).expect("catalogue specs are valid");
        out.push(check_ecf(&spec, &[0.5, 1.0, 2.0], n(2e5), seed, workers));
        out.push(check_sampler_determinism(&spec, seed));
    }
    for alpha in [1.2, 1.5, 1.9] {
        out.push(check_self_similarity(alpha, 1, n(2e4), seed, workers));
        out.push(check_self_similarity(alpha, 2, n(2e4), seed, workers));
    }
    for p in [
        Process::Brownian,
        Process::Stable { alpha: 1.5 },
        Process::Relativistic { alpha: 1.5, mass: 1.0 },
    ] {
        let spec = LevyProcessSpec::new(p, 2).expect("valid");
        out.push(check_isotropy(&spec, n(1e5), seed, workers));
    }
    out.push(check_grid_sup_monotone(1.5, n(500.0), seed));
    out.push(check_brownian_erfc(
        &[0.5, 1.0, 2.0],
        &[0.25, 0.5, 1.0],
        256,
        n(4e4),
        seed,
        workers,
    ));
    let domains = [
        Domain::ball(2, 1.0).expect("valid"),
        Domain::annulus(2, 1.0, 2.0).expect("valid"),
        Domain::ball(3, 1.0).expect("valid"),
        Domain::annulus(3, 1.0, 2.0).expect("valid"),
    ];
    for d in &domains {
        if d.dimension() == 2 {
            out.push(check_distance_mesh(d, n(2e3), seed));
        }
        out.push(check_perimeter_inequality(d));
        out.push(check_uniform_sampling(d, n(1e4), seed));
    }
    out.push(check_stratification(n(2e4), seed, workers));
    out.push(check_time_monotonicity(n(2e3), seed, workers));
    out.push(check_frame_ordering(1.5, n(2e3), seed, workers));
    out.push(check_frame_ordering(2.0, n(2e3), seed, workers));
    out.push(check_mean_sup_closed_form());
    out.push(check_mean_sup_levels(1.5, n(500.0), seed, workers));
    out.push(check_prediction_homogeneity());
    out.push(check_csv_determinism(n(2e3), seed));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn truncated_exponent_limits() {
        // huge cutoff recovers |xi|^alpha
        let v = truncated_stable_exponent(1.5, 1e8, 1.3);
        assert!((v / 1.3f64.powf(1.5) - 1.0).abs() < 1e-8, "{v}");
        // small cutoff: only small jumps, psi ~ xi^2 * int_0^c y^2 nu(dy) / 2
        let a = truncated_stable_exponent(1.5, 1e-3, 1.0);
        let b = truncated_stable_exponent(1.5, 1e-3, 2.0);
        assert!((b / a - 4.0).abs() < 1e-3, "{a} {b}");
        assert_eq!(truncated_stable_exponent(1.5, 1.0, 0.0), 0.0);
    }

    #[test]
    fn cheap_checks_pass() {
        for c in [
            check_perimeter_inequality(&Domain::ball(2, 1.0).unwrap()),
            check_perimeter_inequality(&Domain::annulus(3, 1.0, 2.0).unwrap()),
            check_mean_sup_closed_form(),
            check_prediction_homogeneity(),
            check_exponent(&Process::Stable { alpha: 1.5 }),
            check_grid_sup_monotone(1.3, 50, 1),
        ] {
            assert!(c.passed, "{c}");
        }
    }

    #[test]
    fn display_is_one_line() {
        let c = CheckResult::new("x", false, "detail");
        assert_eq!(c.to_string(), "FAIL x detail");
    }
}
