//! Experiment configuration: a line-oriented `[section]` / `key = value`
//! dialect. `#` starts a comment; unknown sections and keys are rejected.
//!
//! ```text
//! [process]
//! kind = stable            # brownian | stable | mixed_stable | relativistic_stable
//!                          # | log_up | log_down | jump_diffusion | truncated
//! alpha = 1.5
//! dimension = 2
//!
//! [domain]
//! kind = ball              # ball | annulus
//! radius = 1
//!
//! [experiment]
//! t_max = 1e-2
//! t_min = 1e-4
//! t_count = 3
//! n_paths = 100000
//!
//! [output]
//! csv = out/scan.csv
//! ```
//!
//! `jump_diffusion` and `truncated` take the inner process through `base`
//! (plus its parameters), with `gaussian_coefficient` or `cutoff`.

use std::collections::HashMap;
use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::geometry::Domain;
use crate::heat_content::{LayerPlan, DEFAULT_GAMMA, DEFAULT_K};
use crate::levy::{LevyProcessSpec, Process, TruncationSpec};
use crate::numerics::log_grid_desc;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FlushPolicy {
    /// Write each row as soon as it is computed.
    Row,
    /// Write the file once at the end.
    End,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentSettings {
    pub t_grid: Vec<f64>,
    pub n_paths: u64,
    pub k: f64,
    pub gamma: f64,
    pub layer_depth: Option<f64>,
    pub boundary_fraction: f64,
    pub tolerance: f64,
    pub seed: u64,
    /// Upper limit of the boundary-frame `u` integrals.
    pub a: Option<f64>,
    /// Radius of the touching balls in the boundary frame.
    pub radius: f64,
    pub nodes: usize,
    pub jumps_per_step: f64,
    /// Truncation radius for `corollary`.
    pub cutoff: f64,
    /// Stability indices for `mean-sup`.
    pub alphas: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OutputSettings {
    pub csv: Option<PathBuf>,
    pub svg: Option<PathBuf>,
    pub flush: FlushPolicy,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub process: LevyProcessSpec,
    pub domain: Option<Domain>,
    pub experiment: ExperimentSettings,
    pub output: OutputSettings,
}

const SECTIONS: [(&str, &[&str]); 4] = [
    (
        "process",
        &[
            "kind",
            "alpha",
            "beta",
            "mass",
            "gaussian_coefficient",
            "base",
            "cutoff",
            "dimension",
        ],
    ),
    ("domain", &["kind", "radius", "inner", "outer"]),
    (
        "experiment",
        &[
            "t_max",
            "t_min",
            "t_count",
            "t_grid",
            "n_paths",
            "k",
            "gamma",
            "layer_depth",
            "boundary_fraction",
            "tolerance",
            "seed",
            "a",
            "radius",
            "nodes",
            "jumps_per_step",
            "cutoff",
            "alphas",
        ],
    ),
    ("output", &["csv", "svg", "flush"]),
];

struct Entry {
    value: String,
    line: usize,
}

type Sections = HashMap<&'static str, HashMap<&'static str, Entry>>;

fn lex(text: &str) -> Result<Sections> {
    let mut out: Sections = HashMap::new();
    let mut current: Option<(&'static str, &'static [&'static str])> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let err = |message: String| Error::ConfigParse { line, message };
        let body = raw.split('#').next().unwrap().trim();
        if body.is_empty() {
            continue;
        }
        if let Some(name) = body.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| err(format!("malformed section header `{body}`")))?
                .trim();
            let sec = SECTIONS
                .iter()
                .find(|(s, _)| *s == name)
                .ok_or_else(|| err(format!("unknown section `[{name}]`")))?;
            if out.contains_key(sec.0) {
                return Err(err(format!("section `[{name}]` appears twice")));
            }
            out.insert(sec.0, HashMap::new());
            current = Some(*sec);
            continue;
        }
        let (key, value) = body
            .split_once('=')
            .ok_or_else(|| err(format!("expected `key = value`, got `{body}`")))?;
        let (key, value) = (key.trim(), value.trim());
        let (sec, keys) = current.ok_or_else(|| err(format!("key `{key}` outside any section")))?;
        let key = *keys
            .iter()
            .find(|k| **k == key)
            .ok_or_else(|| err(format!("unknown key `{key}` in section `[{sec}]`")))?;
        if value.is_empty() {
            return Err(err(format!("key `{key}` has an empty value")));
        }
        let entries = out.get_mut(sec).unwrap();
        if entries.contains_key(key) {
            return Err(err(format!("key `{key}` repeated in `[{sec}]`")));
        }
        entries.insert(
            key,
            Entry {
                value: value.to_string(),
                line,
            },
        );
    }
    Ok(out)
}

struct Section<'a> {
    name: &'static str,
    entries: Option<&'a HashMap<&'static str, Entry>>,
}

impl Section<'_> {
    fn raw(&self, key: &str) -> Option<&Entry> {
        self.entries.and_then(|e| e.get(key))
    }

    fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        self.raw(key)
            .map(|e| {
                e.value.parse::<T>().map_err(|err| Error::ConfigParse {
                    line: e.line,
                    message: format!("`{key}`: cannot parse `{}`: {err}", e.value),
                })
            })
            .transpose()
    }

    fn list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        self.raw(key)
            .map(|e| {
                e.value
                    .split(',')
                    .map(|s| {
                        s.trim().parse::<f64>().map_err(|err| Error::ConfigParse {
                            line: e.line,
                            message: format!("`{key}`: cannot parse `{}`: {err}", s.trim()),
                        })
                    })
                    .collect()
            })
            .transpose()
    }

    fn require<T: std::str::FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        self.parse(key)?
            .ok_or_else(|| Error::ConfigSemantic(format!("missing required key `{key}` in `[{}]`", self.name)))
    }
}

fn simple_process(kind: &str, s: &Section) -> Result<Process> {
    Ok(match kind {
        "brownian" => Process::Brownian,
        "stable" => Process::Stable {
            alpha: s.require("alpha")?,
        },
        "mixed_stable" => Process::MixedStable {
            alpha: s.require("alpha")?,
            beta: s.require("beta")?,
        },
        "relativistic_stable" => Process::Relativistic {
            alpha: s.require("alpha")?,
            mass: s.require("mass")?,
        },
        "log_up" => Process::LogUp {
            alpha: s.require("alpha")?,
            beta: s.require("beta")?,
        },
        "log_down" => Process::LogDown {
            alpha: s.require("alpha")?,
            beta: s.require("beta")?,
        },
        other => {
            return Err(Error::ConfigSemantic(format!("unknown process kind `{other}`")));
        }
    })
}

fn process_spec(s: &Section) -> Result<LevyProcessSpec> {
    let kind: String = s.require("kind")?;
    let process = match kind.as_str() {
        "jump_diffusion" => Process::JumpDiffusion {
            gaussian_coefficient: s.require("gaussian_coefficient")?,
            jumps: Box::new(simple_process(&s.require::<String>("base")?, s)?),
        },
        "truncated" => Process::Truncated(TruncationSpec::new(
            simple_process(&s.require::<String>("base")?, s)?,
            s.parse("cutoff")?.unwrap_or(TruncationSpec::DEFAULT_CUTOFF),
        )),
        k => simple_process(k, s)?,
    };
    let dimension = s.parse("dimension")?.unwrap_or(2);
    LevyProcessSpec::new(process, dimension).map_err(|e| Error::ConfigSemantic(format!("[process]: {e}")))
}

fn domain(s: &Section, dimension: usize) -> Result<Option<Domain>> {
    if s.entries.is_none() {
        return Ok(None);
    }
    let kind: String = s.require("kind")?;
    let d = match kind.as_str() {
        "ball" => Domain::ball(dimension, s.require("radius")?),
        "annulus" => Domain::annulus(dimension, s.require("inner")?, s.require("outer")?),
        other => return Err(Error::ConfigSemantic(format!("unknown domain kind `{other}`"))),
    };
    d.map(Some).map_err(|e| Error::ConfigSemantic(format!("[domain]: {e}")))
}

fn experiment(s: &Section, domain: Option<&Domain>) -> Result<ExperimentSettings> {
    let t_grid = match s.list("t_grid")? {
        Some(g) => g,
        None => match (s.parse::<f64>("t_max")?, s.parse::<f64>("t_min")?) {
            (Some(hi), Some(lo)) => {
                if !(hi > 0.0 && lo > 0.0) {
                    return Err(Error::ConfigSemantic("t_max and t_min must be > 0".into()));
                }
                log_grid_desc(hi, lo, s.parse("t_count")?.unwrap_or(3))
            }
            (None, None) => Vec::new(),
            _ => return Err(Error::ConfigSemantic("t_max and t_min must be given together".into())),
        },
    };
    if t_grid.iter().any(|&t| !(t > 0.0)) || t_grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::ConfigSemantic(format!(
            "t_grid must be positive and strictly decreasing toward 0, got {t_grid:?}"
        )));
    }
    let settings = ExperimentSettings {
        t_grid,
        n_paths: s.parse("n_paths")?.unwrap_or(10_000),
        k: s.parse("k")?.unwrap_or(DEFAULT_K),
        gamma: s.parse("gamma")?.unwrap_or(DEFAULT_GAMMA),
        layer_depth: s.parse("layer_depth")?,
        boundary_fraction: s
            .parse("boundary_fraction")?
            .unwrap_or(LayerPlan::DEFAULT_BOUNDARY_FRACTION),
        tolerance: s.parse("tolerance")?.unwrap_or(0.05),
        seed: s.parse("seed")?.unwrap_or(0),
        a: s.parse("a")?,
        radius: s
            .parse("radius")?
            .unwrap_or_else(|| domain.map_or(1.0, Domain::ball_radius)),
        nodes: s.parse("nodes")?.unwrap_or(64),
        jumps_per_step: s.parse("jumps_per_step")?.unwrap_or(8.0),
        cutoff: s.parse("cutoff")?.unwrap_or(TruncationSpec::DEFAULT_CUTOFF),
        alphas: s.list("alphas")?.unwrap_or_default(),
    };
    if settings.n_paths == 0 {
        return Err(Error::ConfigSemantic("n_paths must be >= 1".into()));
    }
    if !(settings.k > 0.0 && settings.gamma >= 0.0) {
        return Err(Error::ConfigSemantic("step schedule needs k > 0 and gamma >= 0".into()));
    }
    if !(settings.tolerance > 0.0) {
        return Err(Error::ConfigSemantic("tolerance must be > 0".into()));
    }
    if !(settings.boundary_fraction > 0.0 && settings.boundary_fraction < 1.0) {
        return Err(Error::ConfigSemantic("boundary_fraction must lie in (0, 1)".into()));
    }
    if let (Some(a), Some(d)) = (settings.layer_depth, domain) {
        d.inner_shell(a)
            .map_err(|e| Error::ConfigSemantic(format!("layer_depth: {e}")))?;
    }
    if !(settings.cutoff > 0.0) {
        return Err(Error::ConfigSemantic("cutoff must be > 0".into()));
    }
    if settings.nodes < 2 {
        return Err(Error::ConfigSemantic("nodes must be >= 2".into()));
    }
    if !(settings.jumps_per_step > 0.0) {
        return Err(Error::ConfigSemantic("jumps_per_step must be > 0".into()));
    }
    Ok(settings)
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let sections = lex(text)?;
    let section = |name: &'static str| Section {
        name,
        entries: sections.get(name),
    };
    if !sections.contains_key("process") {
        return Err(Error::ConfigSemantic("missing `[process]` section".into()));
    }
    let process = process_spec(&section("process"))?;
    let domain = domain(&section("domain"), process.dimension)?;
    let experiment = experiment(&section("experiment"), domain.as_ref())?;
    let out = section("output");
    let flush = match out.parse::<String>("flush")?.as_deref() {
        None | Some("end") => FlushPolicy::End,
        Some("row") => FlushPolicy::Row,
        Some(other) => {
            return Err(Error::ConfigSemantic(format!(
                "flush must be `row` or `end`, got `{other}`"
            )))
        }
    };
    Ok(ExperimentConfig {
        process,
        domain,
        experiment,
        output: OutputSettings {
            csv: out.parse("csv")?,
            svg: out.parse("svg")?,
            flush,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "
[process]
kind = stable
alpha = 1.5

[domain]
kind = ball
radius = 1

[experiment]
t_max = 1e-2
t_min = 1e-4
t_count = 3
";

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.experiment.seed, 0);
        assert_eq!(c.experiment.k, 64.0);
        assert_eq!(c.experiment.gamma, 0.5);
        assert_eq!(c.experiment.t_grid.len(), 3);
        assert!((c.experiment.t_grid[1] - 1e-3).abs() < 1e-15);
        assert_eq!(c.process.dimension, 2);
        assert_eq!(c.domain, Some(Domain::ball(2, 1.0).unwrap()));
        assert_eq!(c.output.flush, FlushPolicy::End);
    }

    #[test]
    fn alpha_below_one_rejected() {
        let text = MINIMAL.replace("alpha = 1.5", "alpha = 0.9");
        match parse_config(&text) {
            Err(Error::ConfigSemantic(m)) => assert!(m.contains("(1, 2]"), "{m}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn annulus_radii_checked() {
        let text = MINIMAL.replace("kind = ball\nradius = 1", "kind = annulus\ninner = 2\nouter = 1");
        assert!(matches!(parse_config(&text), Err(Error::ConfigSemantic(_))));
    }

    #[test]
    fn unknown_key_reports_line() {
        let text = MINIMAL.replace("t_count = 3", "t_count = 3\nsamples = 4");
        match parse_config(&text) {
            Err(Error::ConfigParse { line, message }) => {
                assert_eq!(line, 14);
                assert!(message.contains("samples"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn malformed_lines_report_line() {
        for (text, line) in [
            ("[process]\nkind stable", 2),
            ("[nope]", 1),
            ("kind = stable", 1),
            ("[process]\nkind = stable\nalpha = x", 3),
            ("[process]\nkind = brownian\nkind = stable", 3),
        ] {
            match parse_config(text) {
                Err(Error::ConfigParse { line: l, .. }) => assert_eq!(l, line, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn grid_must_decrease() {
        let text = MINIMAL.replace("t_max = 1e-2\nt_min = 1e-4\nt_count = 3", "t_grid = 1e-4, 1e-2");
        assert!(matches!(parse_config(&text), Err(Error::ConfigSemantic(_))));
    }

    #[test]
    fn nested_kinds() {
        let c = parse_config(
            "[process]\nkind = truncated\nbase = stable\nalpha = 1.5\ncutoff = 0.5\n\
             [experiment]\nt_grid = 1e-2, 1e-3, 1e-4\n",
        )
        .unwrap();
        assert!(c.process.process.is_truncated());
        assert_eq!(c.process.alpha(), 1.5);
        let c = parse_config(
            "[process]\nkind = jump_diffusion\nbase = relativistic_stable\nalpha = 1.5\nmass = 1\n\
             gaussian_coefficient = 0.5\n",
        )
        .unwrap();
        assert_eq!(c.process.alpha(), 2.0);
        assert!(c.domain.is_none());
    }
}
