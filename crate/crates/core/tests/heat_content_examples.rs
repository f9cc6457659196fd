use std::f64::consts::PI;

use shc::geometry::Domain;
use shc::heat_content::{
    estimate_Q, halfspace_crossing_prob, halfspace_crossing_probs, halfspace_limit_experiment,
    interior_loss_experiment, step_count, FrameConfig, LayerPlan,
};
use shc::levy::{LevyProcessSpec, Process};
use statrs::function::erf::erfc;

fn brownian(d: usize) -> LevyProcessSpec {
    LevyProcessSpec::new(Process::Brownian, d).unwrap()
}

fn stable(alpha: f64, d: usize) -> LevyProcessSpec {
    LevyProcessSpec::new(Process::Stable { alpha }, d).unwrap()
}

#[test]
fn no_time_no_loss() {
    let disk = Domain::ball(2, 1.0).unwrap();
    for spec in [brownian(2), stable(1.5, 2)] {
        let plan = LayerPlan::new(&disk, 0.25, 0.8).unwrap();
        let e = estimate_Q(&spec, &disk, 1e-12, 20_000, 1, Some(&plan), 3, 1).unwrap();
        assert!((e.q_hat - PI).abs() <= 3.0 * e.q_se, "{e:?}");
        assert_eq!(e.loss, disk.volume() - e.q_hat);
    }
}

#[test]
fn brownian_disk_loss_at_small_time() {
    let disk = Domain::ball(2, 1.0).unwrap();
    let spec = brownian(2);
    let t = 1e-4;
    let plan = LayerPlan::new(&disk, 0.08, 0.95).unwrap();
    let n_steps = step_count(t, 64.0, 0.5).unwrap();
    let e = estimate_Q(&spec, &disk, t, 20_000, n_steps, Some(&plan), 4, 1).unwrap();
    // 2 pi * (2 / sqrt pi) * sqrt t
    let first_order = 4.0 * (PI * t).sqrt();
    assert!((first_order - 0.070898).abs() < 1e-6);
    assert!((e.loss / first_order - 1.0).abs() < 0.10, "{} vs {first_order}", e.loss);
    assert!(e.q_hat >= 0.0 && e.q_hat <= disk.volume());
}

#[test]
fn interior_loss_vanishes_far_from_the_boundary() {
    let disk = Domain::ball(2, 1.0).unwrap();
    let rows = interior_loss_experiment(&brownian(2), &disk, 0.5, &[1e-4], 20_000, 64.0, 0.5, 5, 1).unwrap();
    // 2 pi erfc(a / (2 sqrt t)) bounds the loss and is below 1e-300
    assert!(rows[0].loss <= 1e-6, "{:?}", rows[0]);
    let rows = interior_loss_experiment(&stable(1.5, 2), &disk, 0.5, &[1e-12], 1_000_000, 1.0, 0.0, 6, 1).unwrap();
    assert_eq!(rows[0].exits, 0);
    assert_eq!(rows[0].loss, 0.0);
}

#[test]
fn crossing_from_the_boundary_is_certain() {
    let e = halfspace_crossing_prob(&brownian(1), 1e-12, 0.1, 64, 20_000, 7, 1).unwrap();
    assert!(
        (e.p_extrapolated - 1.0).abs() <= 3.0 * e.se_extrapolated.max(1e-12),
        "{e:?}"
    );
}

#[test]
fn brownian_crossing_matches_reflection_principle() {
    let e = halfspace_crossing_prob(&brownian(1), 1.0, 0.25, 512, 100_000, 8, 1).unwrap();
    let exact = erfc(1.0);
    assert!((exact - 0.157299).abs() < 1e-6);
    assert!((e.p_extrapolated - exact).abs() <= 3.0 * e.se_extrapolated, "{e:?}");
    // grid monitoring undercounts crossings
    assert!(e.p < exact);
}

#[test]
fn stable_crossing_tail_slope() {
    let us = [10.0, 20.0, 50.0];
    let est = halfspace_crossing_probs(&stable(1.5, 1), &us, 1.0, 256, 200_000, 9, 1).unwrap();
    let x: Vec<f64> = us.iter().map(|u| u.ln()).collect();
    let y: Vec<f64> = est.iter().map(|e| e.p.ln()).collect();
    let slope = shc::numerics::ols_slope(&x, &y);
    assert!((slope + 1.5).abs() < 0.2, "slope {slope}, {est:?}");
}

#[test]
fn halfspace_rows_ignore_the_upper_limit() {
    let cfg = FrameConfig {
        seed: 10,
        ..FrameConfig::new(1.0, 0.5, 20_000)
    };
    let spec = brownian(2);
    let t = [1e-3];
    let wide = halfspace_limit_experiment(&spec, 0.2, &t, &cfg).unwrap();
    let narrow = halfspace_limit_experiment(&spec, 0.1, &t, &cfg).unwrap();
    // both limits exceed 50 length scales sqrt(t)
    let (w, n) = (wide[0].halfspace.value, narrow[0].halfspace.value);
    assert!((w / n - 1.0).abs() < 0.01, "{w} vs {n}");
    assert!((w / (2.0 / PI.sqrt()) - 1.0).abs() < 0.05, "{w}");
}
