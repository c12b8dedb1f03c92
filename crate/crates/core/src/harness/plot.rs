//! Minimal SVG line charts of sweep results.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::sweep::ResultRecord;
use crate::error::{Error, Result};

const W: f64 = 640.0;
const H: f64 = 420.0;
const MARGIN: f64 = 60.0;
const COLORS: &[&str] = &["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

/// One line: x values with the mean, min and max of y across seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64, f64, f64)>,
}

/// Groups rows by P_nav and averages `metric` over seeds at each E_max.
pub fn series_by_p_nav(rows: &[ResultRecord], metric: impl Fn(&ResultRecord) -> f64) -> Vec<Series> {
    let mut groups: BTreeMap<u64, BTreeMap<u64, Vec<f64>>> = BTreeMap::new();
    for r in rows {
        groups
            .entry(r.p_nav.to_bits())
            .or_default()
            .entry(r.e_max_kwh.to_bits())
            .or_default()
            .push(metric(r));
    }
    let mut out: Vec<Series> = groups
        .into_iter()
        .map(|(p, cells)| {
            let mut points: Vec<(f64, f64, f64, f64)> = cells
                .into_iter()
                .map(|(x, ys)| {
                    let mean = ys.iter().sum::<f64>() / ys.len() as f64;
                    let lo = ys.iter().copied().fold(f64::INFINITY, f64::min);
                    let hi = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    (f64::from_bits(x), mean, lo, hi)
                })
                .collect();
            points.sort_by(|a, b| a.0.total_cmp(&b.0));
            Series {
                label: format!("P_nav = {}", f64::from_bits(p)),
                points,
            }
        })
        .collect();
    out.sort_by(|a, b| a.label.cmp(&b.label));
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn line_chart_svg(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let all = series.iter().flat_map(|s| s.points.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, _, lo, hi) in all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(lo);
        y1 = y1.max(hi);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 - x0 < 1e-12 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    let pad = ((y1 - y0) * 0.08).max(1e-3);
    y0 -= pad;
    y1 += pad;
    let px = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (W - 2.0 * MARGIN);
    let py = |y: f64| H - MARGIN - (y - y0) / (y1 - y0) * (H - 2.0 * MARGIN);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#, W / 2.0, escape(title));
    let (l, r, t, b) = (MARGIN, W - MARGIN, MARGIN, H - MARGIN);
    let _ = writeln!(s, r#"<path d="M{l} {t} L{l} {b} L{r} {b}" stroke="black" fill="none"/>"#);
    for k in 0..=4 {
        let f = k as f64 / 4.0;
        let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{:.4}</text>"#, px(xv), b + 18.0, xv);
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{:.3}</text>"#, l - 6.0, py(yv) + 4.0, yv);
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, W / 2.0, H - 16.0, escape(x_label));
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
        H / 2.0,
        H / 2.0,
        escape(y_label)
    );
    for (i, ser) in series.iter().enumerate() {
        let c = COLORS[i % COLORS.len()];
        let d: Vec<String> = ser
            .points
            .iter()
            .enumerate()
            .map(|(j, &(x, y, _, _))| format!("{}{:.1} {:.1}", if j == 0 { 'M' } else { 'L' }, px(x), py(y)))
            .collect();
        let _ = writeln!(s, r#"<path d="{}" stroke="{c}" stroke-width="2" fill="none"/>"#, d.join(" "));
        for &(x, y, lo, hi) in &ser.points {
            let _ = writeln!(
                s,
                r#"<line x1="{0:.1}" y1="{1:.1}" x2="{0:.1}" y2="{2:.1}" stroke="{c}"/><circle cx="{0:.1}" cy="{3:.1}" r="3" fill="{c}"/>"#,
                px(x),
                py(lo),
                py(hi),
                py(y)
            );
        }
        let ly = t + 16.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{c}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
            r - 150.0,
            r - 130.0,
            r - 124.0,
            ly + 4.0,
            escape(&ser.label)
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Writes the standard figures for a results table; returns the files written.
pub fn plot_results(rows: &[ResultRecord], out_dir: &Path) -> Result<Vec<PathBuf>> {
    if rows.is_empty() {
        return Err(Error::config("no result rows to plot"));
    }
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let figs = [
        (
            "max_p_dest.svg",
            line_chart_svg(
                "Max rolling fraction reaching destination",
                "E_max (kWh)",
                "max P_dest",
                &series_by_p_nav(rows, |r| r.max_p_dest),
            ),
        ),
        (
            "mean_reward.svg",
            line_chart_svg(
                "Mean reward per flight",
                "E_max (kWh)",
                "mean reward",
                &series_by_p_nav(rows, |r| r.mean_reward),
            ),
        ),
    ];
    let mut written = vec![];
    for (name, svg) in figs {
        let path = out_dir.join(name);
        std::fs::write(&path, svg).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(p: f64, e: f64, seed: u64, y: f64) -> ResultRecord {
        ResultRecord {
            p_nav: p,
            e_max_kwh: e,
            seed,
            max_p_dest: y,
            mean_reward: -y,
            arrivals: 1,
            departures: 2,
        }
    }

    #[test]
    fn grouping_averages_over_seeds() {
        let rows = [rec(0.0, 150.0, 0, 0.8), rec(0.0, 150.0, 1, 0.6), rec(0.0, 50.0, 0, 0.3), rec(1e-5, 50.0, 0, 0.2)];
        let s = series_by_p_nav(&rows, |r| r.max_p_dest);
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].points.len(), 2);
        assert_eq!(s[0].points[0].0, 50.0);
        let (_, mean, lo, hi) = s[0].points[1];
        assert!((mean - 0.7).abs() < 1e-12);
        assert_eq!((lo, hi), (0.6, 0.8));
    }

    #[test]
    fn svg_is_well_formed_enough() {
        let rows = [rec(0.0, 50.0, 0, 0.3), rec(0.0, 150.0, 0, 0.8)];
        let svg = line_chart_svg("t <x>", "x", "y", &series_by_p_nav(&rows, |r| r.max_p_dest));
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("t &lt;x&gt;"));
    }

    #[test]
    fn writes_files() {
        let dir = tempfile::tempdir().unwrap();
        let files = plot_results(&[rec(0.0, 50.0, 0, 0.3)], &dir.path().join("figs")).unwrap();
        assert_eq!(files.len(), 2);
        assert!(files.iter().all(|f| f.exists()));
        assert!(plot_results(&[], dir.path()).is_err());
    }
}
