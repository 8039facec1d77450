use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::SweepRow;
use crate::error::{Error, Result};

pub const WIDTH: f64 = 800.0;
pub const HEIGHT: f64 = 600.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 50.0;
const BOTTOM: f64 = 70.0;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// Success frequency of `d_m` below its threshold.
    Divergence,
    /// Success frequency of the weight error below its threshold.
    WeightError,
}

impl Metric {
    fn value(self, row: &SweepRow) -> f64 {
        match self {
            Metric::Divergence => row.success_dm,
            Metric::WeightError => row.success_w,
        }
    }

    fn title(self) -> &'static str {
        match self {
            Metric::Divergence => "P(d_m(h, h*) below threshold)",
            Metric::WeightError => "P(|w - w*| below threshold)",
        }
    }
}

struct XAxis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl XAxis {
    fn new(rows: &[SweepRow]) -> XAxis {
        let lo = rows.iter().map(|r| r.budget).fold(f64::INFINITY, f64::min);
        let hi = rows.iter().map(|r| r.budget).fold(f64::NEG_INFINITY, f64::max);
        XAxis {
            lo,
            hi,
            log: lo > 0.0 && hi / lo >= 10.0,
        }
    }

    fn px(&self, c: f64) -> f64 {
        let span = WIDTH - LEFT - RIGHT;
        if self.hi <= self.lo {
            return LEFT + span / 2.0;
        }
        let t = if self.log {
            (c.ln() - self.lo.ln()) / (self.hi.ln() - self.lo.ln())
        } else {
            (c - self.lo) / (self.hi - self.lo)
        };
        LEFT + t * span
    }
}

fn py(p: f64) -> f64 {
    TOP + (1.0 - p.clamp(0.0, 1.0)) * (HEIGHT - TOP - BOTTOM)
}

/// Success probability against budget, one line per `m`.
pub fn render_svg(rows: &[SweepRow], metric: Metric) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::invalid("nothing to plot"));
    }
    let x = XAxis::new(rows);
    let mut by_m: BTreeMap<usize, Vec<&SweepRow>> = BTreeMap::new();
    for r in rows {
        by_m.entry(r.m).or_default().push(r);
    }

    let mut s = String::new();
    let bottom = HEIGHT - BOTTOM;
    let right = WIDTH - RIGHT;
    // write! into a String cannot fail
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        s,
        r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="25" text-anchor="middle" font-size="15">{}</text>"#,
        (LEFT + right) / 2.0,
        metric.title()
    );

    let _ = writeln!(s, r#"<g id="axes" stroke="black" stroke-width="1">"#);
    let _ = writeln!(s, r#"<line x1="{LEFT}" y1="{bottom}" x2="{right}" y2="{bottom}"/>"#);
    let _ = writeln!(s, r#"<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{bottom}"/>"#);
    let _ = writeln!(s, "</g>");

    let _ = writeln!(s, r#"<g id="y-ticks">"#);
    for k in 0..=4 {
        let p = k as f64 / 4.0;
        let y = py(p);
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT}" y1="{y:.2}" x2="{right}" y2="{y:.2}" stroke="#dddddd"/>"##
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{p}</text>"#,
            LEFT - 8.0,
            y + 4.0
        );
    }
    let _ = writeln!(s, "</g>");

    let mut budgets: Vec<f64> = rows.iter().map(|r| r.budget).collect();
    budgets.sort_by(f64::total_cmp);
    budgets.dedup();
    let _ = writeln!(s, r#"<g id="x-ticks">"#);
    for c in &budgets {
        let xp = x.px(*c);
        let _ = writeln!(
            s,
            r#"<line x1="{xp:.2}" y1="{bottom}" x2="{xp:.2}" y2="{:.2}" stroke="black"/>"#,
            bottom + 5.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{xp:.2}" y="{:.2}" text-anchor="middle">{c}</text>"#,
            bottom + 20.0
        );
    }
    let _ = writeln!(s, "</g>");

    let scale = if x.log {
        "total cost C (log scale)"
    } else {
        "total cost C"
    };
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{scale}</text>"#,
        (LEFT + right) / 2.0,
        HEIGHT - 20.0
    );
    let _ = writeln!(
        s,
        r#"<text x="20" y="{:.2}" text-anchor="middle" transform="rotate(-90 20 {:.2})">success probability</text>"#,
        (TOP + bottom) / 2.0,
        (TOP + bottom) / 2.0
    );

    for (i, (m, series)) in by_m.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut pts: Vec<(f64, f64)> = series.iter().map(|r| (x.px(r.budget), py(metric.value(r)))).collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let _ = writeln!(s, r#"<g class="series" data-m="{m}">"#);
        if pts.len() > 1 {
            let joined: Vec<String> = pts.iter().map(|(a, b)| format!("{a:.2},{b:.2}")).collect();
            let _ = writeln!(
                s,
                r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
                joined.join(" ")
            );
        }
        for (a, b) in &pts {
            let _ = writeln!(s, r#"<circle cx="{a:.2}" cy="{b:.2}" r="4" fill="{color}"/>"#);
        }
        let _ = writeln!(s, "</g>");

        let ly = TOP + 20.0 * i as f64;
        let lx = right + 20.0;
        let _ = writeln!(
            s,
            r#"<g class="legend"><line x1="{lx}" y1="{ly}" x2="{:.2}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{:.2}" y="{:.2}">m = {m}</text></g>"#,
            lx + 25.0,
            lx + 32.0,
            ly + 4.0
        );
    }
    let _ = writeln!(s, "</svg>");
    Ok(s)
}

pub fn emit_svg(rows: &[SweepRow], metric: Metric, path: &Path) -> Result<()> {
    let text = render_svg(rows, metric)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(budget: f64, m: usize, p: f64) -> SweepRow {
        SweepRow {
            budget,
            m,
            success_dm: p,
            success_w: p,
            reps: 10,
            seed: 0,
        }
    }

    fn parse(svg: &str) -> roxmltree::Document<'_> {
        roxmltree::Document::parse(svg).unwrap()
    }

    #[test]
    fn well_formed_with_legend_and_series() {
        let rows: Vec<SweepRow> = [50.0, 100.0, 200.0]
            .iter()
            .flat_map(|&c| (1..=3).map(move |m| row(c, m, c / 400.0)))
            .collect();
        let svg = render_svg(&rows, Metric::Divergence).unwrap();
        let doc = parse(&svg);
        let root = doc.root_element();
        assert_eq!(root.attribute("viewBox"), Some("0 0 800 600"));
        let polylines = root.descendants().filter(|n| n.has_tag_name("polyline")).count();
        assert_eq!(polylines, 3);
        let legend: Vec<&str> = root
            .descendants()
            .filter(|n| n.has_tag_name("text"))
            .filter_map(|n| n.text())
            .filter(|t| t.starts_with("m = "))
            .collect();
        assert_eq!(legend, vec!["m = 1", "m = 2", "m = 3"]);
    }

    #[test]
    fn monotone_input_gives_monotone_line() {
        let rows = vec![
            row(50.0, 2, 0.1),
            row(500.0, 2, 0.6),
            row(100.0, 2, 0.3),
            row(1000.0, 2, 0.9),
        ];
        let svg = render_svg(&rows, Metric::WeightError).unwrap();
        let doc = parse(&svg);
        let points = doc
            .descendants()
            .find(|n| n.has_tag_name("polyline"))
            .and_then(|n| n.attribute("points"))
            .unwrap();
        let xy: Vec<(f64, f64)> = points
            .split_whitespace()
            .map(|p| {
                let (a, b) = p.split_once(',').unwrap();
                (a.parse().unwrap(), b.parse().unwrap())
            })
            .collect();
        assert_eq!(xy.len(), 4);
        assert!(xy.windows(2).all(|w| w[1].0 > w[0].0 && w[1].1 < w[0].1));
    }

    #[test]
    fn single_point_gets_marker() {
        let svg = render_svg(&[row(100.0, 1, 0.5)], Metric::Divergence).unwrap();
        let doc = parse(&svg);
        assert_eq!(doc.descendants().filter(|n| n.has_tag_name("polyline")).count(), 0);
        let c = doc.descendants().find(|n| n.has_tag_name("circle")).unwrap();
        assert_eq!(c.attribute("cx"), Some("365.00"));
    }

    #[test]
    fn empty_rejected() {
        assert!(render_svg(&[], Metric::Divergence).is_err());
    }
}
