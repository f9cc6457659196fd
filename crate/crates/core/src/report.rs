//! CSV emission. Floats are written as `{:.16e}` (17 significant digits,
//! round-trippable), booleans as `true`/`false`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::asymptotics::{FixtureRow, MeanSupValue, FIXTURE_HEADER};
use crate::error::{Error, Result};
use crate::heat_content::{CorollaryRow, FrameRow, IntegralEstimate, InteriorRow, ReportRow};

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn join(fields: &[String]) -> String {
    fields.join(",")
}

pub fn scan_row(r: &ReportRow) -> String {
    join(&[
        fmt_f64(r.t),
        fmt_f64(r.psi_inv),
        fmt_f64(r.q_hat),
        fmt_f64(r.q_se),
        fmt_f64(r.loss),
        fmt_f64(r.loss_se),
        fmt_f64(r.scaled_loss),
        fmt_f64(r.scaled_se),
        fmt_f64(r.target),
        fmt_f64(r.rel_gap),
        r.n_paths.to_string(),
        r.n_steps.to_string(),
        r.flagged.to_string(),
    ])
}

/// Which integral of a [`FrameRow`] a table reports.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FrameShape {
    Halfspace,
    Ball,
    Outer,
}

pub const FRAME_HEADER: &str =
    "t,psi_inv,a,value,se,coarse,extrapolated,extrapolated_se,refined_nodes,n_paths,n_steps,flagged";

pub fn frame_row(r: &FrameRow, shape: FrameShape) -> Result<String> {
    let e = match shape {
        FrameShape::Halfspace => Some(&r.halfspace),
        FrameShape::Ball => r.ball.as_ref(),
        FrameShape::Outer => r.outer.as_ref(),
    }
    .ok_or_else(|| Error::Domain(format!("{shape:?} integral missing from frame row")))?;
    Ok(join(&[
        fmt_f64(r.t),
        fmt_f64(r.psi_inv),
        fmt_f64(r.a),
        fmt_f64(e.value),
        fmt_f64(e.se),
        fmt_f64(e.coarse),
        fmt_f64(e.extrapolated),
        fmt_f64(e.extrapolated_se),
        fmt_f64(e.refined_nodes),
        r.n_paths.to_string(),
        r.n_steps.to_string(),
        r.flagged.to_string(),
    ]))
}

pub const GAPS_HEADER: &str = "t,psi_inv,a,ball,halfspace,outer,gap_inner,gap_inner_se,gap_outer,gap_outer_se,gap_inner_extrapolated,gap_outer_extrapolated,ordered,n_paths,n_steps,flagged";

pub fn gaps_row(r: &FrameRow) -> Result<String> {
    let need = |e: &Option<IntegralEstimate>| {
        e.clone()
            .ok_or_else(|| Error::Domain("gap table needs dimension >= 2".into()))
    };
    let (ball, outer, gi, go) = (
        need(&r.ball)?,
        need(&r.outer)?,
        need(&r.gap_inner)?,
        need(&r.gap_outer)?,
    );
    Ok(join(&[
        fmt_f64(r.t),
        fmt_f64(r.psi_inv),
        fmt_f64(r.a),
        fmt_f64(ball.value),
        fmt_f64(r.halfspace.value),
        fmt_f64(outer.value),
        fmt_f64(gi.value),
        fmt_f64(gi.se),
        fmt_f64(go.value),
        fmt_f64(go.se),
        fmt_f64(gi.extrapolated),
        fmt_f64(go.extrapolated),
        r.ordered.to_string(),
        r.n_paths.to_string(),
        r.n_steps.to_string(),
        r.flagged.to_string(),
    ]))
}

pub const INTERIOR_HEADER: &str = "t,loss,loss_se,ratio,ratio_se,exits,n_paths,n_steps";

pub fn interior_row(r: &InteriorRow) -> String {
    join(&[
        fmt_f64(r.t),
        fmt_f64(r.loss),
        fmt_f64(r.loss_se),
        fmt_f64(r.ratio),
        fmt_f64(r.ratio_se),
        r.exits.to_string(),
        r.n_paths.to_string(),
        r.n_steps.to_string(),
    ])
}

pub const MEAN_SUP_HEADER: &str = "alpha,value,se,method";

pub fn mean_sup_row(v: &MeanSupValue) -> String {
    join(&[
        fmt_f64(v.alpha),
        fmt_f64(v.value),
        fmt_f64(v.se),
        v.method.tag().to_string(),
    ])
}

pub fn fixture_header() -> &'static str {
    FIXTURE_HEADER
}

pub fn fixture_row(r: &FixtureRow) -> String {
    crate::asymptotics::fixture_row_to_csv(r)
}

pub fn corollary_row(r: &CorollaryRow) -> String {
    join(&[
        fmt_f64(r.t),
        fmt_f64(r.psi_inv),
        fmt_f64(r.base_scaled),
        fmt_f64(r.base_se),
        fmt_f64(r.truncated_scaled),
        fmt_f64(r.truncated_se),
        fmt_f64(r.difference),
        fmt_f64(r.combined_se),
        fmt_f64(r.paired_se),
        r.n_paths.to_string(),
        r.n_steps.to_string(),
    ])
}

/// Line sink for one CSV table, either to a file or to stdout.
pub struct CsvSink {
    out: Box<dyn Write>,
    flush_each_row: bool,
}

impl CsvSink {
    pub fn create(path: Option<&Path>, header: &str, flush_each_row: bool) -> Result<Self> {
        let out: Box<dyn Write> = match path {
            Some(p) => {
                if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                    std::fs::create_dir_all(dir)?;
                }
                Box::new(BufWriter::new(File::create(p)?))
            }
            None => Box::new(BufWriter::new(std::io::stdout())),
        };
        let mut sink = Self { out, flush_each_row };
        writeln!(sink.out, "{header}")?;
        if flush_each_row {
            sink.out.flush()?;
        }
        Ok(sink)
    }

    pub fn row(&mut self, line: &str) -> Result<()> {
        writeln!(self.out, "{line}")?;
        if self.flush_each_row {
            self.out.flush()?;
        }
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.out.flush()?;
        Ok(())
    }
}

/// Splits CSV text into a header and rows of fields.
pub fn read_table(text: &str) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| Error::Csv("empty CSV".into()))?
        .split(',')
        .map(|s| s.trim().to_string())
        .collect();
    let mut rows = Vec::new();
    for (i, l) in lines.enumerate() {
        let row: Vec<String> = l.split(',').map(|s| s.trim().to_string()).collect();
        if row.len() != header.len() {
            return Err(Error::Csv(format!(
                "row {} has {} fields, header has {}",
                i + 2,
                row.len(),
                header.len()
            )));
        }
        rows.push(row);
    }
    Ok((header, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_roundtrip() {
        for x in [std::f64::consts::PI, 1e-300, -2.5e7, 0.1 + 0.2, f64::MIN_POSITIVE] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_f64(1.0), "1.0000000000000000e0");
    }

    #[test]
    fn table_reader_checks_widths() {
        let (h, r) = read_table("a,b\n1,2\n\n3,4\n").unwrap();
        assert_eq!(h, ["a", "b"]);
        assert_eq!(r.len(), 2);
        assert!(read_table("a,b\n1\n").is_err());
        assert!(read_table("").is_err());
    }
}
