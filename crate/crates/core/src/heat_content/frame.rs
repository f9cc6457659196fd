//! Boundary-frame experiments from starting points `(0, u)`: the half-space
//! `{x_d > 0}`, the interior ball `B((0, R), R)` and the exterior-ball
//! complement `B((0, -R), R)^c`, all evaluated on one skeleton per path.

use crate::error::{Error, Result};
use crate::levy::LevyProcessSpec;
use crate::numerics::Moments;
use crate::parallel::map_chunks;
use crate::rng::{experiment_id, RngStream};
use crate::sampling::{IncrementSampler, MAX_DIM};

use super::{check_run, step_count, DEFAULT_GAMMA, DEFAULT_K};

#[derive(Clone, Debug, PartialEq)]
pub struct FrameConfig {
    /// Radius `R` of the touching balls.
    pub radius: f64,
    /// Upper limit of the `u` integral.
    pub a: f64,
    pub n_paths: u64,
    /// Quadrature cells on `(0, a]`.
    pub nodes: usize,
    pub k: f64,
    pub gamma: f64,
    pub seed: u64,
    pub workers: usize,
}

impl FrameConfig {
    pub const DEFAULT_NODES: usize = 64;
    /// Relative change under node doubling above which a row is flagged.
    pub const QUADRATURE_TOLERANCE: f64 = 5e-3;
    /// Smallest quadrature cell in units of the process length scale.
    pub const H_MIN_SCALES: f64 = 1e-3;

    pub fn new(radius: f64, a: f64, n_paths: u64) -> Self {
        Self {
            radius,
            a,
            n_paths,
            nodes: Self::DEFAULT_NODES,
            k: DEFAULT_K,
            gamma: DEFAULT_GAMMA,
            seed: 0,
            workers: 1,
        }
    }
}

/// Midpoints and widths of `n` cells on `[0, a]`: one cell `[0, h_min]`
/// followed by geometrically growing cells up to `a`.
pub fn geometric_nodes(h_min: f64, a: f64, n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(h_min > 0.0 && h_min < a && n >= 2) {
        return Err(Error::Domain(format!(
            "quadrature needs 0 < h_min < a and >= 2 cells (h_min = {h_min}, a = {a}, n = {n})"
        )));
    }
    let ratio = (a / h_min).powf(1.0 / (n - 1) as f64);
    let mut edges = vec![0.0];
    edges.extend((0..n).map(|j| h_min * ratio.powi(j as i32)));
    edges[n] = a;
    let mid = edges.windows(2).map(|e| 0.5 * (e[0] + e[1])).collect();
    let w = edges.windows(2).map(|e| e[1] - e[0]).collect();
    Ok((mid, w))
}

/// One scaled integral `psi^{-1}(1/t) int_0^a P_{(0,u)}(exit by t) du`.
#[derive(Clone, Debug, PartialEq)]
pub struct IntegralEstimate {
    /// Full grid, default nodes.
    pub value: f64,
    pub se: f64,
    /// Half-resolution grid (even steps).
    pub coarse: f64,
    /// Two-level extrapolation in `n^{-1/alpha}`.
    pub extrapolated: f64,
    pub extrapolated_se: f64,
    /// Full grid with doubled nodes.
    pub refined_nodes: f64,
}

impl IntegralEstimate {
    pub fn quadrature_change(&self) -> f64 {
        if self.value == 0.0 {
            0.0
        } else {
            (self.refined_nodes / self.value - 1.0).abs()
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FrameRow {
    pub t: f64,
    pub psi_inv: f64,
    pub a: f64,
    pub n_paths: u64,
    pub n_steps: u64,
    pub halfspace: IntegralEstimate,
    pub ball: Option<IntegralEstimate>,
    pub outer: Option<IntegralEstimate>,
    /// Ball minus half-space.
    pub gap_inner: Option<IntegralEstimate>,
    /// Half-space minus exterior-ball complement.
    pub gap_outer: Option<IntegralEstimate>,
    /// Exit indicators were ordered ball >= half-space >= outer at every node
    /// of every path.
    pub ordered: bool,
    /// Some estimate moved by more than the quadrature tolerance when the
    /// nodes were doubled.
    pub flagged: bool,
}

struct Quadrature {
    nodes: Vec<f64>,
    /// `cum[j]` = total weight of the first `j` nodes.
    cum: Vec<f64>,
}

impl Quadrature {
    fn new(h_min: f64, a: f64, n: usize) -> Result<Self> {
        let (nodes, w) = geometric_nodes(h_min, a, n)?;
        let mut cum = vec![0.0];
        for x in &w {
            cum.push(cum.last().unwrap() + x);
        }
        Ok(Self { nodes, cum })
    }

    fn total(&self) -> f64 {
        *self.cum.last().unwrap()
    }

    /// Weight of nodes `<= v`.
    fn below(&self, v: f64) -> f64 {
        self.cum[self.nodes.partition_point(|&m| m <= v)]
    }

    /// Weight of nodes `>= v`.
    fn above(&self, v: f64) -> f64 {
        self.total() - self.cum[self.nodes.partition_point(|&m| m < v)]
    }

    fn mark(&self, lo: f64, hi: f64, diff: &mut [i32]) {
        if hi < self.nodes[0] || lo > *self.nodes.last().unwrap() {
            return;
        }
        let s = self.nodes.partition_point(|&m| m < lo);
        let e = self.nodes.partition_point(|&m| m <= hi);
        if s < e {
            diff[s] += 1;
            diff[e] -= 1;
        }
    }

    fn covered(&self, diff: &[i32]) -> f64 {
        let mut c = 0;
        let mut sum = 0.0;
        for (d, w) in diff.iter().zip(self.cum.windows(2)) {
            c += d;
            if c > 0 {
                sum += w[1] - w[0];
            }
        }
        sum
    }
}

/// Per-level path functionals in the canonical frame.
struct LevelState {
    /// `max(-X_d)`.
    m: f64,
    /// Ball: survival interval `(lo, hi)` in `u`; `dead` if `|X~| >= R`.
    lo: f64,
    hi: f64,
    dead: bool,
}

impl LevelState {
    fn new() -> Self {
        Self {
            m: 0.0,
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
            dead: false,
        }
    }

    fn ball_exit(&self, q: &Quadrature) -> f64 {
        if self.dead || self.lo >= self.hi {
            q.total()
        } else {
            q.below(self.lo) + q.above(self.hi)
        }
    }
}

const SHAPES: usize = 3;

struct PathValues {
    /// `[shape][fine64, coarse64, fine128]`
    v: [[f64; 3]; SHAPES],
    ordered: bool,
}

#[allow(clippy::too_many_arguments)]
fn frame_path(
    sampler: &IncrementSampler,
    n_steps: u64,
    radius: f64,
    balls: bool,
    q64: &Quadrature,
    q128: &Quadrature,
    rng: &mut rand_chacha::ChaCha8Rng,
    diff: &mut [Vec<i32>; 3],
) -> Result<PathValues> {
    let d = sampler.dimension();
    let mut x = [0.0; MAX_DIM];
    let mut inc = [0.0; MAX_DIM];
    let mut fine = LevelState::new();
    let mut coarse = LevelState::new();
    diff.iter_mut().for_each(|v| v.iter_mut().for_each(|c| *c = 0));
    let r2 = radius * radius;
    for k in 1..=n_steps {
        sampler.sample_into(rng, &mut inc)?;
        let mut q = 0.0;
        for i in 0..d - 1 {
            x[i] += inc[i];
            q += x[i] * x[i];
        }
        x[d - 1] += inc[d - 1];
        let neg = -x[d - 1];
        let even = k % 2 == 0;
        fine.m = fine.m.max(neg);
        if even {
            coarse.m = coarse.m.max(neg);
        }
        if !balls {
            continue;
        }
        if q >= r2 {
            fine.dead = true;
            coarse.dead |= even;
            continue;
        }
        let root = (r2 - q).sqrt();
        // R - root without cancellation
        let sag = q / (radius + root);
        let lo = neg + sag;
        let hi = neg + radius + root;
        fine.lo = fine.lo.max(lo);
        fine.hi = fine.hi.min(hi);
        // exterior ball centred at (0, -R): closed exit interval in u
        let olo = neg - radius - root;
        let ohi = neg - sag;
        q64.mark(olo, ohi, &mut diff[0]);
        q128.mark(olo, ohi, &mut diff[2]);
        if even {
            coarse.lo = coarse.lo.max(lo);
            coarse.hi = coarse.hi.min(hi);
            q64.mark(olo, ohi, &mut diff[1]);
        }
    }
    let mut v = [[0.0; 3]; SHAPES];
    v[0] = [q64.below(fine.m), q64.below(coarse.m), q128.below(fine.m)];
    let mut ordered = true;
    if balls {
        v[1] = [fine.ball_exit(q64), coarse.ball_exit(q64), fine.ball_exit(q128)];
        v[2] = [q64.covered(&diff[0]), q64.covered(&diff[1]), q128.covered(&diff[2])];
        for (level, st) in [(0, &fine), (1, &coarse)] {
            let mut c = 0;
            for (j, &u) in q64.nodes.iter().enumerate() {
                c += diff[level][j];
                let outer = c > 0;
                let half = u <= st.m;
                let ball = st.dead || st.lo >= st.hi || u <= st.lo || u >= st.hi;
                if (outer && !half) || (half && !ball) {
                    ordered = false;
                }
            }
        }
    }
    Ok(PathValues { v, ordered })
}

#[derive(Clone, Default)]
struct Acc {
    /// `[shape][fine64, coarse64, fine128, extrapolated]`
    shape: [[Moments; 4]; SHAPES],
    /// `[inner, outer][fine64, extrapolated]`
    gap: [[Moments; 2]; 2],
    ordered: bool,
}

impl Acc {
    fn merge(&mut self, o: &Acc) {
        for (a, b) in self.shape.iter_mut().zip(&o.shape) {
            for (x, y) in a.iter_mut().zip(b) {
                x.merge(y);
            }
        }
        for (a, b) in self.gap.iter_mut().zip(&o.gap) {
            for (x, y) in a.iter_mut().zip(b) {
                x.merge(y);
            }
        }
        self.ordered &= o.ordered;
    }
}

fn integral(m: &[Moments; 4], scale: f64) -> IntegralEstimate {
    IntegralEstimate {
        value: scale * m[0].mean(),
        se: scale * m[0].se(),
        coarse: scale * m[1].mean(),
        refined_nodes: scale * m[2].mean(),
        extrapolated: scale * m[3].mean(),
        extrapolated_se: scale * m[3].se(),
    }
}

fn gap(m: &[Moments; 2], scale: f64) -> IntegralEstimate {
    IntegralEstimate {
        value: scale * m[0].mean(),
        se: scale * m[0].se(),
        coarse: f64::NAN,
        refined_nodes: f64::NAN,
        extrapolated: scale * m[1].mean(),
        extrapolated_se: scale * m[1].se(),
    }
}

/// All canonical-frame integrals at one `t` on shared skeletons. Ball shapes
/// need `d >= 2`; with `d = 1` only the half-space is evaluated.
pub fn canonical_frame(spec: &LevyProcessSpec, t: f64, cfg: &FrameConfig) -> Result<FrameRow> {
    let n_steps = step_count(t, cfg.k, cfg.gamma)?;
    check_run(t, cfg.n_paths, n_steps)?;
    if !(cfg.a > 0.0) {
        return Err(Error::Domain(format!("integration limit a must be > 0, got {}", cfg.a)));
    }
    let d = spec.dimension;
    let balls = d >= 2;
    if balls && !(cfg.radius > 0.0 && cfg.a <= 0.5 * cfg.radius) {
        return Err(Error::Domain(format!(
            "ball experiments need 0 < a <= R/2 (a = {}, R = {})",
            cfg.a, cfg.radius
        )));
    }
    let psi_inv = spec.inverse_psi(1.0 / t)?;
    let h_min = FrameConfig::H_MIN_SCALES / psi_inv;
    let q64 = Quadrature::new(h_min, cfg.a, cfg.nodes)?;
    let q128 = Quadrature::new(h_min, cfg.a, 2 * cfg.nodes)?;
    let sampler = IncrementSampler::new(spec, t / n_steps as f64)?;
    let c = 2f64.powf(1.0 / spec.alpha());
    let exp = experiment_id("frame");
    let parts = map_chunks(cfg.n_paths, cfg.workers, |range| {
        let mut acc = Acc {
            ordered: true,
            ..Default::default()
        };
        let mut diff = [
            vec![0; cfg.nodes + 1],
            vec![0; cfg.nodes + 1],
            vec![0; 2 * cfg.nodes + 1],
        ];
        for i in range {
            let mut rng = RngStream::for_path(cfg.seed, exp, i).rng();
            let p = frame_path(&sampler, n_steps, cfg.radius, balls, &q64, &q128, &mut rng, &mut diff)?;
            let mut ext = [0.0; SHAPES];
            for ((e, v), m) in ext.iter_mut().zip(&p.v).zip(acc.shape.iter_mut()) {
                let [f, co, r] = *v;
                *e = (c * f - co) / (c - 1.0);
                m[0].push(f);
                m[1].push(co);
                m[2].push(r);
                m[3].push(*e);
            }
            acc.gap[0][0].push(p.v[1][0] - p.v[0][0]);
            acc.gap[0][1].push(ext[1] - ext[0]);
            acc.gap[1][0].push(p.v[0][0] - p.v[2][0]);
            acc.gap[1][1].push(ext[0] - ext[2]);
            acc.ordered &= p.ordered;
        }
        Ok(acc)
    })?;
    let mut acc = Acc {
        ordered: true,
        ..Default::default()
    };
    parts.iter().for_each(|p| acc.merge(p));
    let halfspace = integral(&acc.shape[0], psi_inv);
    let (ball, outer, gap_inner, gap_outer) = if balls {
        (
            Some(integral(&acc.shape[1], psi_inv)),
            Some(integral(&acc.shape[2], psi_inv)),
            Some(gap(&acc.gap[0], psi_inv)),
            Some(gap(&acc.gap[1], psi_inv)),
        )
    } else {
        (None, None, None, None)
    };
    let flagged = [Some(&halfspace), ball.as_ref(), outer.as_ref()]
        .into_iter()
        .flatten()
        .any(|e| e.quadrature_change() > FrameConfig::QUADRATURE_TOLERANCE);
    Ok(FrameRow {
        t,
        psi_inv,
        a: cfg.a,
        n_paths: cfg.n_paths,
        n_steps,
        halfspace,
        ball,
        outer,
        gap_inner,
        gap_outer,
        ordered: acc.ordered,
        flagged,
    })
}

fn frame_table(spec: &LevyProcessSpec, t_grid: &[f64], cfg: &FrameConfig) -> Result<Vec<FrameRow>> {
    t_grid.iter().map(|&t| canonical_frame(spec, t, cfg)).collect()
}

/// Half-space rows from the one-dimensional projection of `spec`.
pub fn halfspace_limit_experiment(
    spec: &LevyProcessSpec,
    a: f64,
    t_grid: &[f64],
    cfg: &FrameConfig,
) -> Result<Vec<FrameRow>> {
    let cfg = FrameConfig { a, ..cfg.clone() };
    frame_table(&spec.with_dimension(1), t_grid, &cfg)
}

fn require_balls(spec: &LevyProcessSpec) -> Result<()> {
    if spec.dimension < 2 {
        return Err(Error::Domain("ball experiments need dimension >= 2".into()));
    }
    Ok(())
}

pub fn ball_experiment(spec: &LevyProcessSpec, t_grid: &[f64], cfg: &FrameConfig) -> Result<Vec<FrameRow>> {
    require_balls(spec)?;
    frame_table(spec, t_grid, cfg)
}

pub fn outer_ball_experiment(spec: &LevyProcessSpec, t_grid: &[f64], cfg: &FrameConfig) -> Result<Vec<FrameRow>> {
    require_balls(spec)?;
    frame_table(spec, t_grid, cfg)
}

pub fn cancellation_gap(spec: &LevyProcessSpec, t_grid: &[f64], cfg: &FrameConfig) -> Result<Vec<FrameRow>> {
    require_balls(spec)?;
    frame_table(spec, t_grid, cfg)
}

/// `P(max_k X_{k dt} >= u)` for a one-dimensional process started at 0.
#[derive(Clone, Debug, PartialEq)]
pub struct CrossingEstimate {
    pub u: f64,
    pub t: f64,
    pub p: f64,
    pub se: f64,
    /// Half-resolution grid.
    pub p_coarse: f64,
    /// Two-level extrapolation in `n^{-1/alpha}`.
    pub p_extrapolated: f64,
    pub se_extrapolated: f64,
    pub n_paths: u64,
    pub n_steps: u64,
}

/// Crossing probabilities for several levels on shared paths.
pub fn halfspace_crossing_probs(
    spec: &LevyProcessSpec,
    us: &[f64],
    t: f64,
    n_steps: u64,
    n_paths: u64,
    seed: u64,
    workers: usize,
) -> Result<Vec<CrossingEstimate>> {
    if spec.dimension != 1 {
        return Err(Error::Domain("half-space crossing needs the 1-d projection".into()));
    }
    if let Some(u) = us.iter().find(|&&u| !(u > 0.0)) {
        return Err(Error::Domain(format!("start height must be > 0, got {u}")));
    }
    if n_steps < 2 || !n_steps.is_multiple_of(2) {
        return Err(Error::Domain(format!("n_steps must be even and >= 2, got {n_steps}")));
    }
    check_run(t, n_paths, n_steps)?;
    let sampler = IncrementSampler::new(spec, t / n_steps as f64)?;
    let c = 2f64.powf(1.0 / spec.alpha());
    let exp = experiment_id("halfspace-crossing");
    let k = us.len();
    let parts = map_chunks(n_paths, workers, |range| {
        let mut m = vec![[Moments::default(); 3]; k];
        let mut sups = [0.0; 2];
        for i in range {
            let mut rng = RngStream::for_path(seed, exp, i).rng();
            sampler.nested_sups(n_steps as usize, &[2, 1], &mut rng, &mut sups)?;
            for (j, &u) in us.iter().enumerate() {
                let coarse = (sups[0] >= u) as u8 as f64;
                let fine = (sups[1] >= u) as u8 as f64;
                m[j][0].push(fine);
                m[j][1].push(coarse);
                m[j][2].push((c * fine - coarse) / (c - 1.0));
            }
        }
        Ok(m)
    })?;
    let mut m = vec![[Moments::default(); 3]; k];
    for p in &parts {
        for (a, b) in m.iter_mut().zip(p) {
            for (x, y) in a.iter_mut().zip(b) {
                x.merge(y);
            }
        }
    }
    Ok(us
        .iter()
        .zip(&m)
        .map(|(&u, m)| CrossingEstimate {
            u,
            t,
            p: m[0].mean(),
            se: m[0].se(),
            p_coarse: m[1].mean(),
            p_extrapolated: m[2].mean(),
            se_extrapolated: m[2].se(),
            n_paths,
            n_steps,
        })
        .collect())
}

pub fn halfspace_crossing_prob(
    spec: &LevyProcessSpec,
    u: f64,
    t: f64,
    n_steps: u64,
    n_paths: u64,
    seed: u64,
    workers: usize,
) -> Result<CrossingEstimate> {
    Ok(halfspace_crossing_probs(spec, &[u], t, n_steps, n_paths, seed, workers)?.remove(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy::Process;

    #[test]
    fn nodes_cover_the_interval() {
        let (m, w) = geometric_nodes(1e-6, 0.5, 64).unwrap();
        assert_eq!(m.len(), 64);
        assert!((w.iter().sum::<f64>() - 0.5).abs() < 1e-15);
        assert!((w[0] - 1e-6).abs() < 1e-20);
        assert!(m.windows(2).all(|p| p[0] < p[1]));
        assert!(geometric_nodes(1.0, 0.5, 64).is_err());
    }

    #[test]
    fn quadrature_weights_of_sets() {
        let q = Quadrature::new(0.01, 1.0, 16).unwrap();
        assert_eq!(q.below(-1.0), 0.0);
        assert!((q.below(2.0) - 1.0).abs() < 1e-15);
        assert!((q.above(-1.0) - 1.0).abs() < 1e-15);
        let mut diff = vec![0; 17];
        q.mark(-1.0, 2.0, &mut diff);
        assert!((q.covered(&diff) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn frame_integrals_are_ordered_pathwise() {
        for p in [Process::Brownian, Process::Stable { alpha: 1.5 }] {
            let spec = LevyProcessSpec::new(p, 2).unwrap();
            let mut cfg = FrameConfig::new(1.0, 0.5, 600);
            cfg.k = 16.0;
            let row = canonical_frame(&spec, 1e-2, &cfg).unwrap();
            assert!(row.ordered);
            assert!(row.gap_inner.as_ref().unwrap().value >= 0.0);
            assert!(row.gap_outer.as_ref().unwrap().value >= 0.0);
            assert!(row.ball.as_ref().unwrap().value >= row.halfspace.value);
            assert!(row.halfspace.value >= row.outer.as_ref().unwrap().value);
        }
    }

    #[test]
    fn ball_experiments_check_depth() {
        let spec = LevyProcessSpec::new(Process::Brownian, 2).unwrap();
        let cfg = FrameConfig::new(1.0, 0.6, 10);
        assert!(ball_experiment(&spec, &[1e-2], &cfg).is_err());
        let one = LevyProcessSpec::new(Process::Brownian, 1).unwrap();
        assert!(ball_experiment(&one, &[1e-2], &FrameConfig::new(1.0, 0.5, 10)).is_err());
    }

    #[test]
    fn crossing_at_the_boundary_is_certain_after_extrapolation() {
        let bm = LevyProcessSpec::new(Process::Brownian, 1).unwrap();
        let e = halfspace_crossing_prob(&bm, 1e-12, 1.0, 1024, 20_000, 2, 1).unwrap();
        assert!(e.p < 1.0);
        assert!(
            (e.p_extrapolated - 1.0).abs() <= 3.0 * e.se_extrapolated + 1e-3,
            "{e:?}"
        );
        assert!(halfspace_crossing_prob(&bm, 0.0, 1.0, 16, 10, 0, 1).is_err());
        assert!(halfspace_crossing_prob(&bm, 1.0, 1.0, 15, 10, 0, 1).is_err());
    }
}
