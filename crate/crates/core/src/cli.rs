//! Command-line front end: argument types and command dispatch.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::asymptotics::{
    brute_force_mean_sup, mean_sup_stable, FixtureRow, DEFAULT_MEAN_SUP_PATHS, ORACLE_LOG2_STEPS,
};
use crate::config::{parse_config, ExperimentConfig, FlushPolicy};
use crate::error::{Error, Result};
use crate::geometry::Domain;
use crate::heat_content::{
    ball_experiment, cancellation_gap, corollary_experiment, halfspace_limit_experiment, interior_loss_experiment,
    outer_ball_experiment, run_theorem_scan_with, FrameConfig, FrameRow, ReportRow, ScanConfig,
};
use crate::plot::{render_svg, series_from_csv, Series};
use crate::report::{self, CsvSink, FrameShape};
use crate::sampling::SamplerOptions;
use crate::validate::run_suite;

#[derive(Debug, Parser)]
#[command(
    name = "shc",
    version,
    about = "Small-time spectral heat content of isotropic Levy processes"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args, Clone, Default)]
pub struct CommonArgs {
    /// Experiment configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// CSV output path (default: config `csv`, else stdout).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// SVG output path.
    #[arg(long, global = true)]
    pub svg: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; 0 uses all cores. Results do not depend on it.
    #[arg(long, global = true, default_value_t = 1)]
    pub workers: usize,
    /// Scales every path budget.
    #[arg(long, global = true, default_value_t = 1.0)]
    pub budget_multiplier: f64,
}

#[derive(Debug, Subcommand, Clone)]
pub enum Command {
    /// Scaled heat loss over the time grid.
    Scan,
    /// Scaled half-space integral at `a` and `a/2`.
    Halfspace,
    /// Scaled interior-ball integral.
    Ball,
    /// Scaled exterior-ball-complement integral.
    OuterBall,
    /// Ball minus half-space and half-space minus outer-ball gaps.
    Gaps,
    /// Loss from starting points deeper than the layer depth.
    Interior,
    /// Limit constant E[sup Y_1].
    MeanSup {
        /// Brute-force run on 2^16 steps in fixture format.
        #[arg(long)]
        oracle: bool,
        /// Stability indices (default: config `alphas`, else the process alpha).
        #[arg(long = "alpha")]
        alphas: Vec<f64>,
    },
    /// Base process against its truncation on shared paths.
    Corollary,
    /// Runs the invariant suite.
    Validate,
    /// Renders CSV tables to an SVG chart.
    Plot {
        /// CSV files, one series each.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// Target rule (default: the `target` column of the first file).
        #[arg(long)]
        target: Option<f64>,
    },
}

/// Whether any row missed its accuracy target.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Ok,
    Flagged,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Ok => 0,
            Outcome::Flagged => 1,
        }
    }

    fn from_flag(flagged: bool) -> Self {
        if flagged {
            Outcome::Flagged
        } else {
            Outcome::Ok
        }
    }
}

pub fn exit_code(result: &Result<Outcome>) -> i32 {
    match result {
        Ok(o) => o.exit_code(),
        Err(_) => 2,
    }
}

struct Context {
    cfg: ExperimentConfig,
    common: CommonArgs,
}

impl Context {
    fn load(common: &CommonArgs) -> Result<Self> {
        let path = common
            .config
            .as_ref()
            .ok_or_else(|| Error::ConfigSemantic("this command needs --config".into()))?;
        let text = fs::read_to_string(path)
            .map_err(|e| Error::ConfigSemantic(format!("cannot read {}: {e}", path.display())))?;
        Ok(Self {
            cfg: parse_config(&text)?,
            common: common.clone(),
        })
    }

    fn seed(&self) -> u64 {
        self.common.seed.unwrap_or(self.cfg.experiment.seed)
    }

    fn n_paths(&self) -> Result<u64> {
        scaled(self.cfg.experiment.n_paths, self.common.budget_multiplier)
    }

    fn domain(&self) -> Result<&Domain> {
        self.cfg
            .domain
            .as_ref()
            .ok_or_else(|| Error::ConfigSemantic("this command needs a `[domain]` section".into()))
    }

    fn t_grid(&self) -> Result<Vec<f64>> {
        let g = &self.cfg.experiment.t_grid;
        if g.is_empty() {
            return Err(Error::ConfigSemantic("this command needs a time grid".into()));
        }
        Ok(g.clone())
    }

    fn csv_path(&self) -> Option<PathBuf> {
        self.common.out.clone().or_else(|| self.cfg.output.csv.clone())
    }

    fn svg_path(&self) -> Option<PathBuf> {
        self.common.svg.clone().or_else(|| self.cfg.output.svg.clone())
    }

    fn sink(&self, header: &str) -> Result<CsvSink> {
        CsvSink::create(
            self.csv_path().as_deref(),
            header,
            self.cfg.output.flush == FlushPolicy::Row,
        )
    }

    fn scan_config(&self) -> Result<ScanConfig> {
        let e = &self.cfg.experiment;
        let mut c = ScanConfig::new(self.t_grid()?, self.n_paths()?);
        c.k = e.k;
        c.gamma = e.gamma;
        c.layer_depth = e.layer_depth;
        c.boundary_fraction = e.boundary_fraction;
        c.tolerance = e.tolerance;
        c.seed = self.seed();
        c.workers = self.common.workers;
        c.sampler = SamplerOptions {
            jumps_per_step: e.jumps_per_step,
        };
        Ok(c)
    }

    fn frame_config(&self) -> Result<FrameConfig> {
        let e = &self.cfg.experiment;
        let mut c = FrameConfig::new(e.radius, e.a.unwrap_or(0.5 * e.radius), self.n_paths()?);
        c.nodes = e.nodes;
        c.k = e.k;
        c.gamma = e.gamma;
        c.seed = self.seed();
        c.workers = self.common.workers;
        Ok(c)
    }
}

fn scaled(n: u64, multiplier: f64) -> Result<u64> {
    if !(multiplier > 0.0 && multiplier.is_finite()) {
        return Err(Error::ConfigSemantic(format!(
            "--budget-multiplier must be > 0, got {multiplier}"
        )));
    }
    Ok(((n as f64 * multiplier).round() as u64).max(2))
}

fn write_svg(path: &Path, svg: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, svg)?;
    Ok(())
}

fn scan_svg(rows: &[ReportRow], name: &str) -> Result<String> {
    let series = Series {
        name: name.to_string(),
        points: rows.iter().map(|r| (r.t, r.scaled_loss)).collect(),
    };
    render_svg(&[series], rows[0].target, &format!("{name}: scaled heat loss"))
}

fn cmd_scan(ctx: &Context) -> Result<Outcome> {
    let spec = &ctx.cfg.process;
    let domain = ctx.domain()?;
    let cfg = ctx.scan_config()?;
    let mut sink = ctx.sink(ReportRow::CSV_HEADER)?;
    let report = run_theorem_scan_with(spec, domain, &cfg, |row| sink.row(&report::scan_row(row)))?;
    sink.finish()?;
    if let Some(path) = ctx.svg_path() {
        write_svg(&path, &scan_svg(&report.rows, &report.process)?)?;
    }
    if let Some(d) = &report.diagnostics {
        eprintln!(
            "limit {} ({}), gap slope {:?}, shrinking {}",
            report.limit.value,
            report.limit.method.tag(),
            d.slope,
            d.gap_shrinking
        );
    }
    Ok(Outcome::from_flag(report.any_flagged()))
}

fn emit_frame(ctx: &Context, rows: &[FrameRow], shape: FrameShape) -> Result<Outcome> {
    let mut sink = ctx.sink(report::FRAME_HEADER)?;
    for r in rows {
        sink.row(&report::frame_row(r, shape)?)?;
    }
    sink.finish()?;
    if let Some(path) = ctx.svg_path() {
        let series = Series {
            name: format!("{shape:?}"),
            points: rows.iter().map(|r| shape_point(r, shape)).collect(),
        };
        let target = crate::asymptotics::limit_constant(ctx.cfg.process.alpha())?.value;
        write_svg(&path, &render_svg(&[series], target, "scaled boundary integral")?)?;
    }
    Ok(Outcome::from_flag(rows.iter().any(|r| r.flagged)))
}

fn shape_point(r: &FrameRow, shape: FrameShape) -> (f64, f64) {
    let v = match shape {
        FrameShape::Halfspace => Some(&r.halfspace),
        FrameShape::Ball => r.ball.as_ref(),
        FrameShape::Outer => r.outer.as_ref(),
    };
    (r.t, v.map_or(f64::NAN, |e| e.value))
}

fn cmd_halfspace(ctx: &Context) -> Result<Outcome> {
    let cfg = ctx.frame_config()?;
    let grid = ctx.t_grid()?;
    let mut rows = halfspace_limit_experiment(&ctx.cfg.process, cfg.a, &grid, &cfg)?;
    rows.extend(halfspace_limit_experiment(&ctx.cfg.process, 0.5 * cfg.a, &grid, &cfg)?);
    emit_frame(ctx, &rows, FrameShape::Halfspace)
}

fn cmd_gaps(ctx: &Context) -> Result<Outcome> {
    let rows = cancellation_gap(&ctx.cfg.process, &ctx.t_grid()?, &ctx.frame_config()?)?;
    let mut sink = ctx.sink(report::GAPS_HEADER)?;
    for r in &rows {
        sink.row(&report::gaps_row(r)?)?;
    }
    sink.finish()?;
    Ok(Outcome::from_flag(rows.iter().any(|r| r.flagged || !r.ordered)))
}

fn cmd_interior(ctx: &Context) -> Result<Outcome> {
    let domain = ctx.domain()?;
    let e = &ctx.cfg.experiment;
    let a = e.layer_depth.unwrap_or(0.5 * domain.ball_radius());
    let rows = interior_loss_experiment(
        &ctx.cfg.process,
        domain,
        a,
        &ctx.t_grid()?,
        ctx.n_paths()?,
        e.k,
        e.gamma,
        ctx.seed(),
        ctx.common.workers,
    )?;
    let mut sink = ctx.sink(report::INTERIOR_HEADER)?;
    for r in &rows {
        sink.row(&report::interior_row(r))?;
    }
    sink.finish()?;
    Ok(Outcome::Ok)
}

fn cmd_mean_sup(common: &CommonArgs, oracle: bool, alphas: &[f64]) -> Result<Outcome> {
    let ctx = common.config.as_ref().map(|_| Context::load(common)).transpose()?;
    let alphas = if !alphas.is_empty() {
        alphas.to_vec()
    } else if let Some(c) = &ctx {
        if c.cfg.experiment.alphas.is_empty() {
            vec![c.cfg.process.alpha()]
        } else {
            c.cfg.experiment.alphas.clone()
        }
    } else {
        return Err(Error::ConfigSemantic("mean-sup needs --alpha or --config".into()));
    };
    let seed = common.seed.or(ctx.as_ref().map(|c| c.cfg.experiment.seed)).unwrap_or(0);
    let base = ctx
        .as_ref()
        .map_or(DEFAULT_MEAN_SUP_PATHS, |c| c.cfg.experiment.n_paths);
    let n_paths = scaled(base, common.budget_multiplier)?;
    let out = common
        .out
        .clone()
        .or_else(|| ctx.as_ref().and_then(|c| c.cfg.output.csv.clone()));
    if oracle {
        let mut sink = CsvSink::create(out.as_deref(), report::fixture_header(), true)?;
        let n_steps = 1u64 << ORACLE_LOG2_STEPS;
        for &alpha in &alphas {
            let v = brute_force_mean_sup(alpha, n_paths, n_steps, seed, common.workers)?;
            sink.row(&report::fixture_row(&FixtureRow {
                alpha,
                value: v.value,
                se: v.se,
                n_paths,
                n_steps,
                seed,
            }))?;
        }
        sink.finish()?;
    } else {
        let mut sink = CsvSink::create(out.as_deref(), report::MEAN_SUP_HEADER, true)?;
        for &alpha in &alphas {
            sink.row(&report::mean_sup_row(&mean_sup_stable(
                alpha,
                n_paths,
                seed,
                common.workers,
            )?))?;
        }
        sink.finish()?;
    }
    Ok(Outcome::Ok)
}

fn cmd_corollary(ctx: &Context) -> Result<Outcome> {
    let r = corollary_experiment(
        &ctx.cfg.process,
        ctx.cfg.experiment.cutoff,
        ctx.domain()?,
        &ctx.scan_config()?,
    )?;
    let mut sink = ctx.sink(crate::heat_content::CorollaryRow::CSV_HEADER)?;
    for row in &r.rows {
        sink.row(&report::corollary_row(row))?;
    }
    sink.finish()?;
    if let Some(path) = ctx.svg_path() {
        let series = |rep: &crate::heat_content::AsymptoticReport, name: &str| Series {
            name: name.to_string(),
            points: rep.rows.iter().map(|x| (x.t, x.scaled_loss)).collect(),
        };
        let svg = render_svg(
            &[series(&r.base, "base"), series(&r.truncated, "truncated")],
            r.base.rows[0].target,
            "base and truncated scaled heat loss",
        )?;
        write_svg(&path, &svg)?;
    }
    Ok(Outcome::from_flag(r.base.any_flagged() || r.truncated.any_flagged()))
}

fn cmd_validate(common: &CommonArgs) -> Result<Outcome> {
    let seed = common.seed.unwrap_or(0);
    scaled(1, common.budget_multiplier)?;
    let results = run_suite(common.budget_multiplier, seed, common.workers);
    let mut text = String::new();
    for r in &results {
        text.push_str(&r.to_string());
        text.push('\n');
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    text.push_str(&format!(
        "SUMMARY {}/{} passed\n",
        results.len() - failed,
        results.len()
    ));
    match &common.out {
        Some(p) => fs::write(p, &text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(Outcome::from_flag(failed > 0))
}

fn cmd_plot(common: &CommonArgs, inputs: &[PathBuf], target: Option<f64>) -> Result<Outcome> {
    let mut series = Vec::new();
    let mut found = None;
    for p in inputs {
        let text = fs::read_to_string(p)?;
        let name = p
            .file_stem()
            .map_or("series".into(), |s| s.to_string_lossy().into_owned());
        let (s, t) = series_from_csv(&name, &text)?;
        found = found.or(t);
        series.push(s);
    }
    let target = target
        .or(found)
        .ok_or_else(|| Error::Csv("no `target` column; pass --target".into()))?;
    let svg = render_svg(&series, target, "scaled heat loss")?;
    match common.svg.as_ref().or(common.out.as_ref()) {
        Some(p) => write_svg(p, &svg)?,
        None => std::io::stdout().write_all(svg.as_bytes())?,
    }
    Ok(Outcome::Ok)
}

pub fn run(cli: &Cli) -> Result<Outcome> {
    let common = &cli.common;
    match &cli.command {
        Command::MeanSup { oracle, alphas } => cmd_mean_sup(common, *oracle, alphas),
        Command::Validate => cmd_validate(common),
        Command::Plot { inputs, target } => cmd_plot(common, inputs, *target),
        cmd => {
            let ctx = Context::load(common)?;
            match cmd {
                Command::Scan => cmd_scan(&ctx),
                Command::Halfspace => cmd_halfspace(&ctx),
                Command::Ball => emit_frame(
                    &ctx,
                    &ball_experiment(&ctx.cfg.process, &ctx.t_grid()?, &ctx.frame_config()?)?,
                    FrameShape::Ball,
                ),
                Command::OuterBall => emit_frame(
                    &ctx,
                    &outer_ball_experiment(&ctx.cfg.process, &ctx.t_grid()?, &ctx.frame_config()?)?,
                    FrameShape::Outer,
                ),
                Command::Gaps => cmd_gaps(&ctx),
                Command::Interior => cmd_interior(&ctx),
                Command::Corollary => cmd_corollary(&ctx),
                Command::MeanSup { .. } | Command::Validate | Command::Plot { .. } => unreachable!(),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arguments_parse() {
        let cli = Cli::try_parse_from(["shc", "scan", "--config", "x.conf", "--workers", "8"]).unwrap();
        assert!(matches!(cli.command, Command::Scan));
        assert_eq!(cli.common.workers, 8);
        let cli = Cli::try_parse_from(["shc", "mean-sup", "--oracle", "--alpha", "1.5", "--alpha", "1.2"]).unwrap();
        match cli.command {
            Command::MeanSup { oracle, alphas } => {
                assert!(oracle);
                assert_eq!(alphas, [1.5, 1.2]);
            }
            other => panic!("{other:?}"),
        }
        assert!(Cli::try_parse_from(["shc", "outer-ball", "--budget-multiplier", "0.5"]).is_ok());
        assert!(Cli::try_parse_from(["shc", "plot"]).is_err());
    }

    #[test]
    fn missing_config_is_an_error() {
        let cli = Cli::try_parse_from(["shc", "scan"]).unwrap();
        assert_eq!(exit_code(&run(&cli)), 2);
    }

    #[test]
    fn budget_multiplier_must_be_positive() {
        assert!(scaled(10, 0.0).is_err());
        assert_eq!(scaled(10, 0.5).unwrap(), 5);
    }
}
