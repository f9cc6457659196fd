//! Balls and annuli: the two shipped C^{1,1} domains.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};

/// Volume of the unit ball in `R^d`.
pub fn unit_ball_volume(d: usize) -> f64 {
    PI.powf(d as f64 / 2.0) / gamma(d as f64 / 2.0 + 1.0)
}

#[derive(Clone, Debug, PartialEq)]
pub enum Domain {
    Ball { dimension: usize, radius: f64 },
    Annulus { dimension: usize, inner: f64, outer: f64 },
}

/// Spherical shell `{inner < |x| < outer}` (`inner = 0` gives a ball).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Shell {
    pub inner: f64,
    pub outer: f64,
}

/// Volume and perimeter of the inner parallel set `D_a`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LayerBounds {
    pub volume: f64,
    pub perimeter: f64,
}

impl Domain {
    pub fn ball(dimension: usize, radius: f64) -> Result<Self> {
        if dimension < 2 {
            return Err(Error::InvalidSpec(format!(
                "domains need dimension >= 2, got {dimension}"
            )));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidSpec(format!("ball radius must be > 0, got {radius}")));
        }
        Ok(Domain::Ball { dimension, radius })
    }

    pub fn annulus(dimension: usize, inner: f64, outer: f64) -> Result<Self> {
        if dimension < 2 {
            return Err(Error::InvalidSpec(format!(
                "domains need dimension >= 2, got {dimension}"
            )));
        }
        if !(inner > 0.0 && outer.is_finite() && inner < outer) {
            return Err(Error::InvalidSpec(format!(
                "annulus needs 0 < r1 < r2, got r1 = {inner}, r2 = {outer}"
            )));
        }
        Ok(Domain::Annulus {
            dimension,
            inner,
            outer,
        })
    }

    pub fn dimension(&self) -> usize {
        match *self {
            Domain::Ball { dimension, .. } | Domain::Annulus { dimension, .. } => dimension,
        }
    }

    pub fn shell(&self) -> Shell {
        match *self {
            Domain::Ball { radius, .. } => Shell {
                inner: 0.0,
                outer: radius,
            },
            Domain::Annulus { inner, outer, .. } => Shell { inner, outer },
        }
    }

    pub fn volume(&self) -> f64 {
        self.shell().volume(self.dimension())
    }

    pub fn perimeter(&self) -> f64 {
        let d = self.dimension();
        let s = self.shell();
        let area = |r: f64| d as f64 * unit_ball_volume(d) * r.powi(d as i32 - 1);
        match self {
            Domain::Ball { .. } => area(s.outer),
            Domain::Annulus { .. } => area(s.outer) + area(s.inner),
        }
    }

    /// Radius `R` of the uniform interior and exterior ball condition.
    pub fn ball_radius(&self) -> f64 {
        match *self {
            Domain::Ball { radius, .. } => radius,
            Domain::Annulus { inner, outer, .. } => inner.min(0.5 * (outer - inner)),
        }
    }

    /// Membership test on the squared norm.
    #[inline]
    pub fn contains_norm_sq(&self, q: f64) -> bool {
        match *self {
            Domain::Ball { radius, .. } => q < radius * radius,
            Domain::Annulus { inner, outer, .. } => q > inner * inner && q < outer * outer,
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.contains_norm_sq(x.iter().map(|v| v * v).sum())
    }

    /// Distance to the boundary, defined on all of `R^d`.
    pub fn dist_to_boundary(&self, x: &[f64]) -> f64 {
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        match *self {
            Domain::Ball { radius, .. } => (radius - r).abs(),
            Domain::Annulus { inner, outer, .. } => (r - inner).abs().min((outer - r).abs()),
        }
    }

    fn check_depth(&self, a: f64) -> Result<()> {
        let half = 0.5 * self.ball_radius();
        if !(a > 0.0 && a <= half) {
            return Err(Error::Domain(format!(
                "layer depth must lie in (0, R/2] = (0, {half}], got {a}"
            )));
        }
        Ok(())
    }

    /// The inner parallel set `D_a = {x in D : dist(x, dD) > a}` as a shell.
    pub fn inner_shell(&self, a: f64) -> Result<Shell> {
        self.check_depth(a)?;
        let s = self.shell();
        Ok(match self {
            Domain::Ball { .. } => Shell {
                inner: 0.0,
                outer: s.outer - a,
            },
            Domain::Annulus { .. } => Shell {
                inner: s.inner + a,
                outer: s.outer - a,
            },
        })
    }

    /// Shells whose union is the boundary layer `D \ D_a`.
    pub fn boundary_shells(&self, a: f64) -> Result<Vec<Shell>> {
        let core = self.inner_shell(a)?;
        let s = self.shell();
        let mut out = vec![Shell {
            inner: core.outer,
            outer: s.outer,
        }];
        if s.inner > 0.0 {
            out.push(Shell {
                inner: s.inner,
                outer: core.inner,
            });
        }
        Ok(out)
    }

    pub fn layer_bounds(&self, a: f64) -> Result<LayerBounds> {
        let core = self.inner_shell(a)?;
        let d = self.dimension();
        let area = |r: f64| d as f64 * unit_ball_volume(d) * r.powi(d as i32 - 1);
        let perimeter = match self {
            Domain::Ball { .. } => area(core.outer),
            Domain::Annulus { .. } => area(core.outer) + area(core.inner),
        };
        Ok(LayerBounds {
            volume: core.volume(d),
            perimeter,
        })
    }

    /// Uniform point of `D`: rejection from the bounding box for balls,
    /// radial inversion for annuli.
    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let d = self.dimension();
        match *self {
            Domain::Ball { radius, .. } => loop {
                let x: Vec<f64> = (0..d).map(|_| radius * (2.0 * rng.random::<f64>() - 1.0)).collect();
                if self.contains(&x) {
                    return x;
                }
            },
            Domain::Annulus { .. } => loop {
                let mut x = vec![0.0; d];
                sample_in_shells(&[self.shell()], d, rng, &mut x);
                // radial inversion can round onto the boundary
                if self.contains(&x) {
                    return x;
                }
            },
        }
    }
}

impl Shell {
    pub fn volume(&self, d: usize) -> f64 {
        unit_ball_volume(d) * (self.outer.powi(d as i32) - self.inner.powi(d as i32))
    }
}

/// Writes a uniform point of the union of disjoint `shells` into `out`.
pub fn sample_in_shells<R: Rng + ?Sized>(shells: &[Shell], d: usize, rng: &mut R, out: &mut [f64]) {
    let di = d as i32;
    let mut shell = shells[0];
    if shells.len() > 1 {
        let total: f64 = shells.iter().map(|s| s.volume(d)).sum();
        let mut u = rng.random::<f64>() * total;
        for s in shells {
            shell = *s;
            u -= s.volume(d);
            if u < 0.0 {
                break;
            }
        }
    }
    let (lo, hi) = (shell.inner.powi(di), shell.outer.powi(di));
    let r = (lo + rng.random::<f64>() * (hi - lo)).powf(1.0 / d as f64);
    let mut norm = 0.0;
    for v in out[..d].iter_mut() {
        *v = rng.sample(StandardNormal);
        norm += *v * *v;
    }
    let scale = r / norm.sqrt();
    out[..d].iter_mut().for_each(|v| *v *= scale);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    #[test]
    fn contains_examples() {
        let disk = Domain::ball(2, 1.0).unwrap();
        assert!(disk.contains(&[0.0, 0.0]));
        assert!(!disk.contains(&[1.0, 0.0]));
        let ann = Domain::annulus(2, 1.0, 2.0).unwrap();
        assert!(ann.contains(&[1.5, 0.0]));
        assert!(!ann.contains(&[0.5, 0.0]));
    }

    #[test]
    fn distance_examples() {
        let disk = Domain::ball(2, 1.0).unwrap();
        assert!((disk.dist_to_boundary(&[0.25, 0.0]) - 0.75).abs() < 1e-15);
        assert_eq!(disk.dist_to_boundary(&[1.0, 0.0]), 0.0);
        assert!((disk.dist_to_boundary(&[3.0, 0.0]) - 2.0).abs() < 1e-15);
        let ann = Domain::annulus(2, 1.0, 2.0).unwrap();
        assert!((ann.dist_to_boundary(&[1.2, 0.0]) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn volumes_and_perimeters() {
        let disk = Domain::ball(2, 1.0).unwrap();
        assert!((disk.volume() - PI).abs() < 1e-14);
        assert!((disk.perimeter() - 2.0 * PI).abs() < 1e-14);
        let b3 = Domain::ball(3, 2.0).unwrap();
        assert!((b3.volume() - 4.0 / 3.0 * PI * 8.0).abs() < 1e-12);
        assert!((b3.perimeter() - 4.0 * PI * 4.0).abs() < 1e-12);
        let ann = Domain::annulus(2, 1.0, 2.0).unwrap();
        assert!((ann.volume() - 3.0 * PI).abs() < 1e-14);
        assert!((ann.perimeter() - 6.0 * PI).abs() < 1e-14);
        assert_eq!(ann.ball_radius(), 0.5);
        assert_eq!(Domain::annulus(2, 0.2, 2.0).unwrap().ball_radius(), 0.2);
    }

    #[test]
    fn layer_examples() {
        let disk = Domain::ball(2, 1.0).unwrap();
        let lb = disk.layer_bounds(0.25).unwrap();
        assert!((lb.perimeter - 2.0 * PI * 0.75).abs() < 1e-12);
        assert!((lb.perimeter - 4.712389).abs() < 1e-6);
        let ann = Domain::annulus(2, 1.0, 2.0).unwrap();
        let lb = ann.layer_bounds(0.25).unwrap();
        assert!((lb.perimeter - 6.0 * PI).abs() < 1e-12);
        assert!((lb.volume - PI * (1.75f64.powi(2) - 1.25f64.powi(2))).abs() < 1e-12);
    }

    #[test]
    fn layer_depth_outside_range_rejected() {
        let disk = Domain::ball(2, 1.0).unwrap();
        for a in [0.0, -0.1, 0.5000001, f64::NAN] {
            assert!(matches!(disk.layer_bounds(a), Err(Error::Domain(_))), "{a}");
        }
        assert!(disk.layer_bounds(0.5).is_ok());
    }

    #[test]
    fn invalid_domains_rejected() {
        assert!(Domain::annulus(2, 2.0, 1.0).is_err());
        assert!(Domain::annulus(2, 1.0, 1.0).is_err());
        assert!(Domain::ball(1, 1.0).is_err());
        assert!(Domain::ball(2, 0.0).is_err());
    }

    #[test]
    fn boundary_shells_partition_the_layer() {
        let ann = Domain::annulus(3, 1.0, 2.0).unwrap();
        let a = 0.2;
        let layer: f64 = ann.boundary_shells(a).unwrap().iter().map(|s| s.volume(3)).sum();
        let core = ann.layer_bounds(a).unwrap().volume;
        assert!((layer + core - ann.volume()).abs() < 1e-12);
    }

    #[test]
    fn shell_sampling_stays_in_shells() {
        let ann = Domain::annulus(2, 1.0, 2.0).unwrap();
        let shells = ann.boundary_shells(0.1).unwrap();
        let mut rng = RngStream::new(1, 2).rng();
        let mut x = [0.0; 2];
        let mut inner_hits = 0;
        let n = 20_000;
        for _ in 0..n {
            sample_in_shells(&shells, 2, &mut rng, &mut x);
            let r = x[0].hypot(x[1]);
            assert!((1.0..=1.1).contains(&r) || (1.9..=2.0).contains(&r), "{r}");
            if r < 1.5 {
                inner_hits += 1;
            }
        }
        // inner shell carries 2.1 / (2.1 + 3.9) of the layer area
        let p = 2.1 / 6.0;
        let se = (p * (1.0 - p) / n as f64).sqrt();
        assert!((inner_hits as f64 / n as f64 - p).abs() < 4.0 * se);
    }
}
