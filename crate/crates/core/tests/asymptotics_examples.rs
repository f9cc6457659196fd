use std::f64::consts::PI;

use shc::asymptotics::{
    brute_force_mean_sup, convergence_diagnostics, fixture_value, mean_sup_stable, outside_regime, predicted_heat_loss,
    MeanSupMethod,
};
use shc::geometry::Domain;
use shc::levy::{LevyProcessSpec, Process};

#[test]
#[allow(clippy::approx_constant)]
fn brownian_constant_is_closed_form() {
    let v = mean_sup_stable(2.0, 10, 1, 1).unwrap();
    assert_eq!(v.method, MeanSupMethod::ClosedForm);
    assert_eq!(v.se, 0.0);
    assert!((v.value - 1.1283791671).abs() < 1e-10);
    assert!((v.value - 2.0 / PI.sqrt()).abs() <= 1e-12);
}

#[test]
fn finite_mean_criterion() {
    for alpha in [0.5, 1.0, 2.1] {
        let e = mean_sup_stable(alpha, 100, 0, 1).unwrap_err().to_string();
        assert!(e.contains("(1, 2]"), "{e}");
    }
}

#[test]
fn near_one_alpha_converges_under_enlarged_budget() {
    let v = mean_sup_stable(1.05, 24_000, 3, 1).unwrap();
    assert!(v.value > 0.0 && v.value.is_finite());
    assert!(v.se / v.value <= 0.05, "{v:?}");
    let oracle = fixture_value(1.05).expect("fixture row for 1.05");
    let z = (v.value - oracle.value) / (v.se.hypot(oracle.se));
    assert!(z.abs() < 3.0, "{v:?} vs {oracle:?}");
}

#[test]
fn refinement_raises_grid_suprema() {
    let v = mean_sup_stable(1.5, 200, 4, 1).unwrap();
    let means: Vec<f64> = v.level_means.iter().map(|m| m.1).collect();
    assert!(means.windows(2).all(|w| w[1] >= w[0]), "{means:?}");
    let b = brute_force_mean_sup(1.5, 50, 1 << 12, 4, 1).unwrap();
    assert_eq!(b.method, MeanSupMethod::BruteForceMc);
    assert!(brute_force_mean_sup(1.5, 50, 1000, 4, 1).is_err());
}

#[test]
fn heat_loss_predictions() {
    let disk = Domain::ball(2, 1.0).unwrap();
    let bm = LevyProcessSpec::new(Process::Brownian, 2).unwrap();
    let p = predicted_heat_loss(&bm, &disk, 1e-4).unwrap();
    assert!((p - 4.0 * PI.sqrt() * 1e-2).abs() < 1e-15);
    assert!((p - 0.0708982).abs() < 1e-7);

    let st = LevyProcessSpec::new(Process::Stable { alpha: 1.5 }, 2).unwrap();
    let oracle = fixture_value(1.5).expect("fixture row for 1.5").value;
    let p = predicted_heat_loss(&st, &disk, 1e-6).unwrap();
    assert!((p / (2.0 * PI * oracle * 1e-4) - 1.0).abs() < 1e-9, "{p}");

    assert!(predicted_heat_loss(&bm, &disk, 1.0).unwrap() > 0.0);
    assert!(outside_regime(&bm, &disk, 1.0).unwrap());
    assert!(!outside_regime(&bm, &disk, 1e-4).unwrap());
    assert!(predicted_heat_loss(&bm, &disk, 0.0).is_err());
}

#[test]
fn diagnostics_on_synthetic_rows() {
    let rows: Vec<(f64, f64)> = [1e-2, 1e-3, 1e-4, 1e-5]
        .iter()
        .map(|&t| (t, 0.3 * f64::sqrt(t)))
        .collect();
    let d = convergence_diagnostics(&rows).unwrap();
    assert!((d.slope.unwrap() - 0.5).abs() < 1e-6);
    assert!(d.gap_shrinking);
    assert!(!d.converged);

    let d = convergence_diagnostics(&[(1e-2, 0.0), (1e-3, 0.0), (1e-4, 0.0)]).unwrap();
    assert_eq!(d.slope, None);
    assert!(d.converged);
    assert!(convergence_diagnostics(&[(1e-2, 0.1), (1e-3, 0.05)]).is_err());
}
