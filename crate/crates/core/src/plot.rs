//! Self-contained SVG line chart: scaled loss against `log10 t`, one
//! polyline per series, the target as a horizontal rule.

use crate::error::{Error, Result};
use crate::report::read_table;

#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub name: String,
    /// `(t, y)` with `t > 0`.
    pub points: Vec<(f64, f64)>,
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 60.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn escape(s: &str) -> String {
    s.chars()
        .map(|c| match c {
            '&' => "&amp;".to_string(),
            '<' => "&lt;".to_string(),
            '>' => "&gt;".to_string(),
            '"' => "&quot;".to_string(),
            '\'' => "&apos;".to_string(),
            c => c.to_string(),
        })
        .collect()
}

fn column(header: &[String], names: &[&str]) -> Option<usize> {
    names.iter().find_map(|n| header.iter().position(|h| h == n))
}

/// Reads `t` and `scaled_loss` (or `value` for boundary-frame tables) from
/// CSV text; also returns the `target` column's first value if present.
pub fn series_from_csv(name: &str, text: &str) -> Result<(Series, Option<f64>)> {
    let (header, rows) = read_table(text)?;
    let ti = column(&header, &["t"]).ok_or_else(|| Error::Csv(format!("{name}: no `t` column")))?;
    let yi = column(&header, &["scaled_loss", "value", "base_scaled"])
        .ok_or_else(|| Error::Csv(format!("{name}: no `scaled_loss` or `value` column")))?;
    let num = |s: &str| {
        s.parse::<f64>()
            .map_err(|e| Error::Csv(format!("{name}: cannot parse `{s}`: {e}")))
    };
    let mut points = Vec::with_capacity(rows.len());
    for r in &rows {
        points.push((num(&r[ti])?, num(&r[yi])?));
    }
    let target = match (column(&header, &["target"]), rows.first()) {
        (Some(i), Some(r)) => Some(num(&r[i])?),
        _ => None,
    };
    Ok((
        Series {
            name: name.to_string(),
            points,
        },
        target,
    ))
}

pub fn render_svg(series: &[Series], target: f64, title: &str) -> Result<String> {
    if series.is_empty() || series.iter().any(|s| s.points.is_empty()) {
        return Err(Error::Csv("nothing to plot".into()));
    }
    let pts = series.iter().flat_map(|s| s.points.iter());
    if pts.clone().any(|&(t, y)| !(t > 0.0 && t.is_finite() && y.is_finite())) || !target.is_finite() {
        return Err(Error::Csv("plot needs t > 0 and finite values".into()));
    }
    let (mut x0, mut x1) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y0, mut y1) = (target, target);
    for &(t, y) in pts {
        let lt = t.log10();
        x0 = x0.min(lt);
        x1 = x1.max(lt);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if x1 - x0 < 1e-9 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    let pad = 0.05 * (y1 - y0).max(1e-9 * y1.abs().max(1.0));
    y0 -= pad;
    y1 += pad;
    let px = |lt: f64| MARGIN + (lt - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let py = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    svg.push_str(&format!("<title>{}</title>\n", escape(title)));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    svg.push_str(&format!(
        "<g id=\"axes\" stroke=\"black\" fill=\"none\"><path d=\"M {l} {t} V {b} H {r}\"/></g>\n",
        l = MARGIN,
        t = MARGIN,
        b = HEIGHT - MARGIN,
        r = WIDTH - MARGIN
    ));
    svg.push_str("<g id=\"labels\" font-family=\"sans-serif\" font-size=\"12\">\n");
    for (x, anchor, label) in [(x0, "start", x0), (x1, "end", x1)] {
        svg.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"{anchor}\">{:.2}</text>\n",
            px(x),
            HEIGHT - MARGIN + 18.0,
            label
        ));
    }
    for y in [y0, y1] {
        svg.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{:.4}</text>\n",
            MARGIN - 6.0,
            py(y) + 4.0,
            y
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">log10 t</text>\n",
        WIDTH / 2.0,
        HEIGHT - 16.0
    ));
    svg.push_str(&format!(
        "<text x=\"16\" y=\"{:.2}\" transform=\"rotate(-90 16 {:.2})\" text-anchor=\"middle\">scaled loss</text>\n",
        HEIGHT / 2.0,
        HEIGHT / 2.0
    ));
    svg.push_str("</g>\n");
    svg.push_str(&format!(
        "<line id=\"target\" x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"gray\" stroke-dasharray=\"6 4\"/>\n",
        MARGIN,
        py(target),
        WIDTH - MARGIN,
        py(target)
    ));
    for (i, s) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let mut p: Vec<_> = s.points.clone();
        p.sort_by(|a, b| a.0.total_cmp(&b.0));
        let coords: Vec<String> = p
            .iter()
            .map(|&(t, y)| format!("{:.2},{:.2}", px(t.log10()), py(y)))
            .collect();
        svg.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"2\" points=\"{}\"><title>{}</title></polyline>\n",
            coords.join(" "),
            escape(&s.name)
        ));
        svg.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" fill=\"{color}\" font-family=\"sans-serif\" font-size=\"12\">{}</text>\n",
            WIDTH - MARGIN + 4.0 - 120.0,
            MARGIN + 16.0 * (i as f64 + 1.0),
            escape(&s.name)
        ));
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_columns_are_found() {
        let (s, target) = series_from_csv("x", "t,scaled_loss,target\n1e-2,7.0,7.09\n1e-3,7.05,7.09\n").unwrap();
        assert_eq!(s.points, vec![(1e-2, 7.0), (1e-3, 7.05)]);
        assert_eq!(target, Some(7.09));
        let (s, target) = series_from_csv("h", "t,psi_inv,a,value\n1e-3,31.6,0.5,1.12\n").unwrap();
        assert_eq!(s.points, vec![(1e-3, 1.12)]);
        assert_eq!(target, None);
        assert!(series_from_csv("bad", "x,y\n1,2\n").is_err());
    }

    #[test]
    fn names_are_escaped() {
        let s = Series {
            name: "a<b & c".into(),
            points: vec![(1e-2, 1.0), (1e-3, 2.0)],
        };
        let svg = render_svg(&[s], 1.5, "t").unwrap();
        assert!(svg.contains("a&lt;b &amp; c"));
        assert_eq!(svg.matches("<polyline").count(), 1);
        assert!(render_svg(&[], 1.0, "t").is_err());
    }
}
