//! Scaled heat-loss scans against the limit `|dD| E[sup Y_1]`.

use crate::asymptotics::{
    convergence_diagnostics, limit_constant, outside_regime, ConvergenceDiagnostics, MeanSupValue,
};
use crate::error::{Error, Result};
use crate::geometry::Domain;
use crate::levy::{LevyProcessSpec, Process, TruncationSpec};
use crate::sampling::{IncrementSampler, SamplerOptions};

use super::{
    check_run, estimate_from, step_count, strata_for, tally, HeatContentEstimate, LayerPlan, DEFAULT_GAMMA, DEFAULT_K,
};

#[derive(Clone, Debug, PartialEq)]
pub struct ScanConfig {
    /// Strictly decreasing times.
    pub t_grid: Vec<f64>,
    /// Paths per row (both strata).
    pub n_paths: u64,
    pub k: f64,
    pub gamma: f64,
    /// Layer depth override; default `min(R/2, 8 / psi^{-1}(1/t_min))`.
    pub layer_depth: Option<f64>,
    pub boundary_fraction: f64,
    /// Relative accuracy target used for row flags.
    pub tolerance: f64,
    pub seed: u64,
    pub workers: usize,
    pub sampler: SamplerOptions,
}

impl ScanConfig {
    pub const DEFAULT_TOLERANCE: f64 = 0.05;

    pub fn new(t_grid: Vec<f64>, n_paths: u64) -> Self {
        Self {
            t_grid,
            n_paths,
            k: DEFAULT_K,
            gamma: DEFAULT_GAMMA,
            layer_depth: None,
            boundary_fraction: LayerPlan::DEFAULT_BOUNDARY_FRACTION,
            tolerance: Self::DEFAULT_TOLERANCE,
            seed: 0,
            workers: 1,
            sampler: SamplerOptions::default(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.t_grid.is_empty() {
            return Err(Error::Domain("t_grid is empty".into()));
        }
        if self.t_grid.iter().any(|&t| !(t > 0.0)) || self.t_grid.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::Domain(format!(
                "t_grid must be positive and strictly decreasing, got {:?}",
                self.t_grid
            )));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::Domain(format!("tolerance must be > 0, got {}", self.tolerance)));
        }
        Ok(())
    }

    fn layer_plan(&self, spec: &LevyProcessSpec, domain: &Domain) -> Result<LayerPlan> {
        let t_min = *self.t_grid.last().unwrap();
        match self.layer_depth {
            Some(a) => LayerPlan::new(domain, a, self.boundary_fraction),
            None => {
                let mut p = LayerPlan::default_for(spec, domain, t_min)?;
                p.boundary_fraction = self.boundary_fraction;
                LayerPlan::new(domain, p.depth, p.boundary_fraction)
            }
        }
    }
}

/// One CSV row of a scan.
#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub t: f64,
    pub psi_inv: f64,
    pub q_hat: f64,
    pub q_se: f64,
    pub loss: f64,
    pub loss_se: f64,
    pub scaled_loss: f64,
    pub scaled_se: f64,
    pub target: f64,
    pub rel_gap: f64,
    pub n_paths: u64,
    pub n_steps: u64,
    pub flagged: bool,
    /// Estimated scaled-loss change from the two-level extrapolation.
    pub refinement_shift: f64,
    pub outside_regime: bool,
    pub estimate: HeatContentEstimate,
}

impl ReportRow {
    pub const CSV_HEADER: &'static str =
        "t,psi_inv,q_hat,q_se,loss,loss_se,scaled_loss,scaled_se,target,rel_gap,n_paths,n_steps,flagged";
}

#[derive(Clone, Debug, PartialEq)]
pub struct AsymptoticReport {
    pub process: String,
    pub layer: LayerPlan,
    pub limit: MeanSupValue,
    pub rows: Vec<ReportRow>,
    /// Present when there are at least three rows.
    pub diagnostics: Option<ConvergenceDiagnostics>,
}

impl AsymptoticReport {
    pub fn any_flagged(&self) -> bool {
        self.rows.iter().any(|r| r.flagged)
    }
}

fn report_row(
    spec: &LevyProcessSpec,
    domain: &Domain,
    est: HeatContentEstimate,
    limit: &MeanSupValue,
    tolerance: f64,
) -> Result<ReportRow> {
    let psi_inv = spec.inverse_psi(1.0 / est.t)?;
    let target = domain.perimeter() * limit.value;
    let scaled_loss = psi_inv * est.loss;
    let scaled_se = psi_inv * est.loss_se;
    let c = 2f64.powf(1.0 / spec.alpha());
    // q_fine - q_coarse is the last refinement step; the remaining shift is
    // that step over (c - 1)
    let refinement_shift = psi_inv * (est.q_hat_coarse - est.q_hat) / (c - 1.0);
    let outside = outside_regime(spec, domain, est.t)?;
    let flagged = refinement_shift.abs() > 0.5 * tolerance * target || 2.0 * scaled_se > tolerance * target || outside;
    Ok(ReportRow {
        t: est.t,
        psi_inv,
        q_hat: est.q_hat,
        q_se: est.q_se,
        loss: est.loss,
        loss_se: est.loss_se,
        scaled_loss,
        scaled_se,
        target,
        rel_gap: (scaled_loss - target) / target,
        n_paths: est.n_paths,
        n_steps: est.n_steps,
        flagged,
        refinement_shift,
        outside_regime: outside,
        estimate: est,
    })
}

fn assemble(
    spec: &LevyProcessSpec,
    layer: LayerPlan,
    limit: MeanSupValue,
    rows: Vec<ReportRow>,
) -> Result<AsymptoticReport> {
    let diagnostics = if rows.len() >= 3 {
        Some(convergence_diagnostics(
            &rows.iter().map(|r| (r.t, r.rel_gap)).collect::<Vec<_>>(),
        )?)
    } else {
        None
    };
    Ok(AsymptoticReport {
        process: spec.process.name().to_string(),
        layer,
        limit,
        rows,
        diagnostics,
    })
}

/// Scaled heat loss `psi^{-1}(1/t) (|D| - Q_D(t))` over the grid, with
/// `n = ceil(K t^{-gamma})` steps per row.
pub fn run_theorem_scan(spec: &LevyProcessSpec, domain: &Domain, cfg: &ScanConfig) -> Result<AsymptoticReport> {
    run_theorem_scan_with(spec, domain, cfg, |_| Ok(()))
}

/// As [`run_theorem_scan`], handing each row to `on_row` as soon as it is done.
pub fn run_theorem_scan_with<F>(
    spec: &LevyProcessSpec,
    domain: &Domain,
    cfg: &ScanConfig,
    mut on_row: F,
) -> Result<AsymptoticReport>
where
    F: FnMut(&ReportRow) -> Result<()>,
{
    cfg.validate()?;
    let layer = cfg.layer_plan(spec, domain)?;
    let limit = limit_constant(spec.alpha())?;
    let mut rows = Vec::with_capacity(cfg.t_grid.len());
    for &t in &cfg.t_grid {
        let n_steps = step_count(t, cfg.k, cfg.gamma)?;
        check_run(t, cfg.n_paths, n_steps)?;
        let sampler = IncrementSampler::with_options(spec, t / n_steps as f64, &cfg.sampler)?;
        let strata = strata_for(domain, Some(&layer), cfg.n_paths)?;
        let tallies = tally(
            &[sampler],
            domain,
            &strata,
            n_steps,
            cfg.seed,
            "heat-content",
            cfg.workers,
        )?;
        let est = estimate_from(t, n_steps, &strata, &tallies, 0, domain.volume());
        let row = report_row(spec, domain, est, &limit, cfg.tolerance)?;
        on_row(&row)?;
        rows.push(row);
    }
    assemble(spec, layer, limit, rows)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CorollaryRow {
    pub t: f64,
    pub psi_inv: f64,
    pub base_scaled: f64,
    pub base_se: f64,
    pub truncated_scaled: f64,
    pub truncated_se: f64,
    /// Base minus truncated scaled loss.
    pub difference: f64,
    /// `sqrt(se_base^2 + se_truncated^2)`.
    pub combined_se: f64,
    /// Standard error of the path-paired difference.
    pub paired_se: f64,
    pub n_paths: u64,
    pub n_steps: u64,
}

impl CorollaryRow {
    pub const CSV_HEADER: &'static str =
        "t,psi_inv,base_scaled,base_se,truncated_scaled,truncated_se,difference,combined_se,paired_se,n_paths,n_steps";
}

#[derive(Clone, Debug, PartialEq)]
pub struct CorollaryReport {
    pub cutoff: f64,
    pub base: AsymptoticReport,
    pub truncated: AsymptoticReport,
    pub rows: Vec<CorollaryRow>,
}

/// Base process against its truncation at `cutoff`, path by path. Both arms
/// use the compound-Poisson sampler on the same streams, so they differ only
/// through discarded jumps longer than `cutoff`.
pub fn corollary_experiment(
    base: &LevyProcessSpec,
    cutoff: f64,
    domain: &Domain,
    cfg: &ScanConfig,
) -> Result<CorollaryReport> {
    cfg.validate()?;
    if base.process.is_truncated() {
        return Err(Error::InvalidSpec("corollary base must not be truncated".into()));
    }
    let truncated = LevyProcessSpec::new(
        Process::Truncated(TruncationSpec::new(base.process.clone(), cutoff)),
        base.dimension,
    )?;
    let layer = cfg.layer_plan(base, domain)?;
    let limit = limit_constant(base.alpha())?;
    let (mut base_rows, mut trunc_rows, mut rows) = (Vec::new(), Vec::new(), Vec::new());
    for &t in &cfg.t_grid {
        let n_steps = step_count(t, cfg.k, cfg.gamma)?;
        check_run(t, cfg.n_paths, n_steps)?;
        let dt = t / n_steps as f64;
        let arms = [
            IncrementSampler::compound(base, dt, None, &cfg.sampler)?,
            IncrementSampler::compound(&truncated, dt, Some(cutoff), &cfg.sampler)?,
        ];
        let strata = strata_for(domain, Some(&layer), cfg.n_paths)?;
        let tallies = tally(&arms, domain, &strata, n_steps, cfg.seed, "heat-content", cfg.workers)?;
        let b = report_row(
            base,
            domain,
            estimate_from(t, n_steps, &strata, &tallies, 0, domain.volume()),
            &limit,
            cfg.tolerance,
        )?;
        let tr = report_row(
            &truncated,
            domain,
            estimate_from(t, n_steps, &strata, &tallies, 1, domain.volume()),
            &limit,
            cfg.tolerance,
        )?;
        let mut paired_var = 0.0;
        for (s, x) in strata.iter().zip(&tallies) {
            let n = x.n as f64;
            let mean = (x.only_first as f64 - x.only_second as f64) / n;
            let second = (x.only_first + x.only_second) as f64 / n;
            paired_var += s.volume * s.volume * (second - mean * mean) / n;
        }
        rows.push(CorollaryRow {
            t,
            psi_inv: b.psi_inv,
            base_scaled: b.scaled_loss,
            base_se: b.scaled_se,
            truncated_scaled: tr.scaled_loss,
            truncated_se: tr.scaled_se,
            difference: b.scaled_loss - tr.scaled_loss,
            combined_se: b.scaled_se.hypot(tr.scaled_se),
            paired_se: b.psi_inv * paired_var.max(0.0).sqrt(),
            n_paths: cfg.n_paths,
            n_steps,
        });
        base_rows.push(b);
        trunc_rows.push(tr);
    }
    Ok(CorollaryReport {
        cutoff,
        base: assemble(base, layer, limit.clone(), base_rows)?,
        truncated: assemble(&truncated, layer, limit, trunc_rows)?,
        rows,
    })
}
