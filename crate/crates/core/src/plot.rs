//! Graph samples of `f` over the first branches, as CSV or a self-contained SVG.
//!
//! The SVG carries its raw samples in a `<metadata>` block so the drawing can
//! be checked numerically without rasterising it.

use std::fmt::Write as _;
use std::io::Write;

use crate::error::{Error, Result};
use crate::map::FullBranchMap;
use crate::rational;

pub const CSV_HEADER: &str = "x,fx,branch,in_L";
const METADATA_ID: &str = "wildmap-samples";

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlotSample {
    pub x: f64,
    pub fx: f64,
    pub branch: u32,
    pub in_l: bool,
}

/// `per_branch` uniform points on each `(a_{n+1}, a_n]`, `n = 1..=branches`.
/// The open left end is skipped and the right end `a_n` is included.
pub fn sample_graph(map: &FullBranchMap, branches: u32, per_branch: usize) -> Result<Vec<PlotSample>> {
    if branches == 0 {
        return Err(Error::Domain("at least one branch is required".into()));
    }
    if per_branch < 2 {
        return Err(Error::Domain("at least two samples per branch are required".into()));
    }
    let profile = map.profile();
    let mut out = Vec::with_capacity(branches as usize * per_branch);
    for n in 1..=branches {
        let fb = map.float_branch(n)?;
        let width = fb.a_hi - fb.a_lo;
        for i in 1..=per_branch {
            let x = if i == per_branch {
                fb.a_hi
            } else {
                fb.a_lo + width * i as f64 / per_branch as f64
            };
            out.push(PlotSample {
                x,
                fx: fb.eval(x, profile),
                branch: n,
                in_l: x <= fb.junction,
            });
        }
    }
    Ok(out)
}

fn csv_body(samples: &[PlotSample]) -> String {
    let mut s = String::with_capacity(samples.len() * 48);
    s.push_str(CSV_HEADER);
    s.push('\n');
    for p in samples {
        let _ = writeln!(
            s,
            "{},{},{},{}",
            rational::decimal(p.x),
            rational::decimal(p.fx),
            p.branch,
            p.in_l as u8
        );
    }
    s
}

pub fn write_csv(samples: &[PlotSample], out: &mut impl Write) -> std::io::Result<()> {
    out.write_all(csv_body(samples).as_bytes())
}

/// Parses the CSV layout written by [`write_csv`].
pub fn parse_csv(text: &str) -> Result<Vec<PlotSample>> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
    match lines.next() {
        Some(CSV_HEADER) => {}
        other => return Err(Error::Parse(format!("expected header {CSV_HEADER}, got {other:?}"))),
    }
    lines
        .map(|line| {
            let cols: Vec<&str> = line.split(',').collect();
            let bad = || Error::Parse(format!("malformed sample row: {line}"));
            if cols.len() != 4 {
                return Err(bad());
            }
            Ok(PlotSample {
                x: cols[0].parse().map_err(|_| bad())?,
                fx: cols[1].parse().map_err(|_| bad())?,
                branch: cols[2].parse().map_err(|_| bad())?,
                in_l: match cols[3] {
                    "1" => true,
                    "0" => false,
                    _ => return Err(bad()),
                },
            })
        })
        .collect()
}

/// Extracts the samples embedded by [`render_svg`].
pub fn parse_svg_samples(svg: &str) -> Result<Vec<PlotSample>> {
    let open = format!("<metadata id=\"{METADATA_ID}\">");
    let start = svg
        .find(&open)
        .ok_or_else(|| Error::Parse("no sample metadata in SVG".into()))?
        + open.len();
    let end = svg[start..]
        .find("</metadata>")
        .ok_or_else(|| Error::Parse("unterminated sample metadata".into()))?;
    parse_csv(&svg[start..start + end])
}

pub fn render_svg(map: &FullBranchMap, branches: u32, samples: &[PlotSample]) -> Result<String> {
    const SIZE: f64 = 640.0;
    const MARGIN: f64 = 48.0;
    let x_min = rational::to_f64(&map.breakpoint(branches + 1));
    let px = |x: f64| MARGIN + (x - x_min) / (1.0 - x_min) * SIZE;
    let py = |y: f64| MARGIN + (1.0 - y) * SIZE;
    let total = SIZE + 2.0 * MARGIN;

    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{total}\" height=\"{total}\" viewBox=\"0 0 {total} {total}\">"
    );
    let _ = writeln!(
        s,
        "<title>f on [a_{}, 1], c = {}, lambda = {}</title>",
        branches + 1,
        rational::to_string(map.c()),
        rational::to_string(map.lambda())
    );
    let _ = writeln!(s, "<metadata id=\"{METADATA_ID}\">\n{}</metadata>", csv_body(samples));
    let _ = writeln!(s, "<rect x=\"0\" y=\"0\" width=\"{total}\" height=\"{total}\" fill=\"white\"/>");
    let _ = writeln!(
        s,
        "<rect x=\"{MARGIN}\" y=\"{MARGIN}\" width=\"{SIZE}\" height=\"{SIZE}\" fill=\"none\" stroke=\"black\" stroke-width=\"1\"/>"
    );

    // diagonal y = x over the plotted domain
    let _ = writeln!(
        s,
        "<line class=\"diagonal\" x1=\"{:.3}\" y1=\"{:.3}\" x2=\"{:.3}\" y2=\"{:.3}\" stroke=\"#999\" stroke-dasharray=\"4 4\"/>",
        px(x_min),
        py(x_min),
        px(1.0),
        py(1.0)
    );

    for n in 1..=branches + 1 {
        let a = rational::to_f64(&map.breakpoint(n));
        let _ = writeln!(
            s,
            "<line class=\"breakpoint\" x1=\"{0:.3}\" y1=\"{1:.3}\" x2=\"{0:.3}\" y2=\"{2:.3}\" stroke=\"#bbb\" stroke-width=\"0.8\"/>",
            px(a),
            py(0.0),
            py(1.0)
        );
    }

    for n in 1..=branches {
        let pts: Vec<&PlotSample> = samples.iter().filter(|p| p.branch == n).collect();
        if pts.is_empty() {
            continue;
        }
        let mut path = String::new();
        for p in &pts {
            let _ = write!(path, "{:.3},{:.3} ", px(p.x), py(p.fx));
        }
        let _ = writeln!(
            s,
            "<polyline class=\"branch\" data-branch=\"{n}\" points=\"{}\" fill=\"none\" stroke=\"#1f4e9c\" stroke-width=\"1.5\"/>",
            path.trim_end()
        );
        let b = map.branch(n)?;
        let jx = rational::to_f64(&b.junction);
        let jy = rational::to_f64(&b.a_lo);
        let _ = writeln!(
            s,
            "<circle class=\"junction\" data-branch=\"{n}\" cx=\"{:.3}\" cy=\"{:.3}\" r=\"3\" fill=\"#c0392b\"/>",
            px(jx),
            py(jy)
        );
    }

    let _ = writeln!(
        s,
        "<text x=\"{MARGIN}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"12\">{:.4}</text>",
        MARGIN + SIZE + 16.0,
        x_min
    );
    let _ = writeln!(
        s,
        "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"end\">1</text>",
        MARGIN + SIZE,
        MARGIN + SIZE + 16.0
    );
    s.push_str("</svg>\n");
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_branch_covers_first_interval() {
        let map = FullBranchMap::reference();
        let samples = sample_graph(&map, 1, 50).unwrap();
        assert_eq!(samples.len(), 50);
        assert!(samples.iter().all(|p| p.x > 2.0 / 3.0 && p.x <= 1.0));
        assert_eq!(samples.last().unwrap().x, 1.0);
        assert!((samples.last().unwrap().fx - 1.0).abs() < 1e-12);
        assert!(samples.iter().any(|p| p.in_l) && samples.iter().any(|p| !p.in_l));
    }

    #[test]
    fn csv_round_trip() {
        let map = FullBranchMap::reference();
        let samples = sample_graph(&map, 3, 20).unwrap();
        let mut buf = Vec::new();
        write_csv(&samples, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("x,fx,branch,in_L\n"));
        assert_eq!(parse_csv(&text).unwrap(), samples);
    }

    #[test]
    fn svg_embeds_samples() {
        let map = FullBranchMap::reference();
        let samples = sample_graph(&map, 6, 40).unwrap();
        let svg = render_svg(&map, 6, &samples).unwrap();
        assert!(svg.starts_with("<svg"));
        assert!(!svg.contains("href"));
        assert_eq!(svg.matches("class=\"junction\"").count(), 6);
        assert_eq!(svg.matches("class=\"breakpoint\"").count(), 7);
        assert_eq!(parse_svg_samples(&svg).unwrap(), samples);
    }

    #[test]
    fn rejects_degenerate_requests() {
        let map = FullBranchMap::reference();
        assert!(sample_graph(&map, 0, 10).is_err());
        assert!(sample_graph(&map, 2, 1).is_err());
    }
}
