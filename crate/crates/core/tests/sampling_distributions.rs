use rand::Rng;
use shc::levy::{catalogue, LevyProcessSpec, Process};
use shc::rng::RngStream;
use shc::sampling::{
    positive_stable, sample_increment, sample_path_skeleton, sample_sup_1d, symmetric_stable, IncrementSampler,
};
use statrs::function::erf::erfc;

/// Radial exponent written out per variant, independent of the library.
fn oracle_psi(p: &Process, b: f64) -> Option<f64> {
    Some(match p {
        Process::Brownian => b * b,
        Process::Stable { alpha } => b.powf(*alpha),
        Process::MixedStable { alpha, beta } => b.powf(*alpha) + b.powf(*beta),
        Process::Relativistic { alpha, mass } => (b * b + mass.powf(2.0 / alpha)).powf(alpha / 2.0) - mass,
        Process::LogUp { alpha, beta } => b.powf(*alpha) * (1.0 + b * b).ln().powf(beta / 2.0),
        Process::LogDown { alpha, beta } => {
            if b == 0.0 {
                0.0
            } else {
                b.powf(*alpha) * (1.0 + b * b).ln().powf(-beta / 2.0)
            }
        }
        Process::JumpDiffusion {
            gaussian_coefficient,
            jumps,
        } => gaussian_coefficient * b * b + oracle_psi(jumps, b)?,
        Process::Truncated(_) => return None,
    })
}

fn mean_se(xs: impl Iterator<Item = f64>) -> (f64, f64) {
    let v: Vec<f64> = xs.collect();
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

fn ks_statistic(mut xs: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

#[test]
fn catalogue_marginals_match_exponent() {
    let dt = 0.05;
    let n = 100_000;
    for (k, p) in catalogue().iter().enumerate() {
        let Some(_) = oracle_psi(p, 1.0) else { continue };
        let spec = LevyProcessSpec::new(p.clone(), 2).unwrap();
        let sampler = IncrementSampler::new(&spec, dt).unwrap();
        let mut rng = RngStream::new(100 + k as u64, 5).rng();
        let mut buf = [0.0; 2];
        let xs: Vec<f64> = (0..n)
            .map(|_| {
                sampler.sample_into(&mut rng, &mut buf).unwrap();
                buf[0]
            })
            .collect();
        for xi in [1.0, 4.0, 10.0] {
            let target = (-dt * oracle_psi(p, xi).unwrap()).exp();
            let (m, se) = mean_se(xs.iter().map(|x| (xi * x).cos()));
            assert!(
                (m - target).abs() < 4.0 * se + 1e-3,
                "{p:?} xi={xi}: {m} vs {target} (se {se})"
            );
        }
    }
}

#[test]
fn half_stable_subordinator_cdf() {
    // a = 1/2 gives the Levy law: P(S <= x) = erfc(1 / (2 sqrt x))
    let mut rng = RngStream::new(7, 7).rng();
    let n = 100_000;
    let xs: Vec<f64> = (0..n).map(|_| positive_stable(0.5, &mut rng)).collect();
    let d = ks_statistic(xs, |x| erfc(0.5 / x.sqrt()));
    assert!(d < 1.63 / (n as f64).sqrt(), "D = {d}");
}

#[test]
fn cms_characteristic_function() {
    let mut rng = RngStream::new(8, 8).rng();
    for alpha in [1.1, 1.5, 1.9] {
        let xs: Vec<f64> = (0..200_000).map(|_| symmetric_stable(alpha, &mut rng)).collect();
        for xi in [0.5, 1.0, 2.0] {
            let (m, se) = mean_se(xs.iter().map(|x| (xi * x).cos()));
            let target = (-f64::powf(xi, alpha)).exp();
            assert!((m - target).abs() < 4.0 * se, "alpha={alpha} xi={xi}: {m} vs {target}");
        }
    }
}

#[test]
fn brownian_increment_is_gaussian() {
    let spec = LevyProcessSpec::new(Process::Brownian, 1).unwrap();
    let sampler = IncrementSampler::new(&spec, 0.5).unwrap();
    let mut rng = RngStream::new(9, 1).rng();
    let xs: Vec<f64> = (0..100_000)
        .map(|_| sampler.sample_increment(&mut rng).unwrap()[0])
        .collect();
    // N(0, 2 dt) with dt = 1/2 is the standard normal
    let d = ks_statistic(xs, |x| 0.5 * erfc(-x / std::f64::consts::SQRT_2));
    assert!(d < 1.63 / 100_000f64.sqrt(), "D = {d}");
}

#[test]
fn skeleton_endpoint_variance() {
    let spec = LevyProcessSpec::new(Process::Brownian, 3).unwrap();
    let t = 0.3;
    let ends: Vec<Vec<f64>> = (0..20_000)
        .map(|i| {
            let g = sample_path_skeleton(&spec, &[1.0, -2.0, 0.5], t, 16, &RngStream::new(10, i)).unwrap();
            assert_eq!(g.n_steps, 16);
            assert_eq!(g.position(0), [1.0, -2.0, 0.5]);
            g.position(16).to_vec()
        })
        .collect();
    for (c, x0) in [1.0, -2.0, 0.5].into_iter().enumerate() {
        let (m, se) = mean_se(ends.iter().map(|e| (e[c] - x0).powi(2)));
        assert!((m - 2.0 * t).abs() < 4.0 * se, "coordinate {c}: {m}");
    }
}

#[test]
fn grid_sup_of_brownian_sits_below_continuous_mean() {
    let spec = LevyProcessSpec::new(Process::Brownian, 1).unwrap();
    let t: f64 = 0.25;
    let exact = 2.0 * f64::sqrt(t) / std::f64::consts::PI.sqrt();
    let (m, se) = mean_se((0..20_000).map(|i| sample_sup_1d(&spec, t, 1024, &RngStream::new(11, i)).unwrap()));
    // discrete monitoring loses about 0.5826 sqrt(2 dt)
    let gap = 0.5826 * (2.0 * t / 1024.0).sqrt();
    assert!((m - (exact - gap)).abs() < 4.0 * se, "{m} vs {}", exact - gap);
}

#[test]
fn streams_are_reproducible_and_distinct() {
    let spec = LevyProcessSpec::new(Process::Stable { alpha: 1.5 }, 2).unwrap();
    let a = sample_increment(&spec, 0.1, &RngStream::for_path(1, 2, 3)).unwrap();
    let b = sample_increment(&spec, 0.1, &RngStream::for_path(1, 2, 3)).unwrap();
    let c = sample_increment(&spec, 0.1, &RngStream::for_path(1, 2, 4)).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
    let mut r1 = RngStream::new(5, 0).rng();
    let mut r2 = RngStream::new(5, 1).rng();
    assert_ne!(r1.random::<u64>(), r2.random::<u64>());
}

#[test]
fn invalid_inputs_rejected() {
    let spec = LevyProcessSpec::new(Process::Brownian, 2).unwrap();
    assert!(IncrementSampler::new(&spec, 0.0).is_err());
    assert!(IncrementSampler::new(&spec, -1.0).is_err());
    assert!(sample_sup_1d(&spec, 1.0, 8, &RngStream::new(0, 0)).is_err());
    assert!(sample_path_skeleton(&spec, &[0.0, 0.0], 1.0, 0, &RngStream::new(0, 0)).is_err());
}
