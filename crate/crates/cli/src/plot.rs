//! Log-log regret plots as standalone SVG.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};
use eiconv::harness::{fit_slope, REGRET_FLOOR};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 50.0;

/// `(n, regret)` pairs from a CSV with `n` and `regret` columns; regret is
/// floored at [`REGRET_FLOOR`].
pub fn read_series(path: &Path) -> Result<Vec<(f64, f64)>> {
    let mut reader = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    let headers = reader.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .with_context(|| format!("{} has no `{name}` column", path.display()))
    };
    let (n_col, r_col) = (col("n")?, col("regret")?);
    let mut series = Vec::new();
    for record in reader.records() {
        let record = record?;
        let n: f64 = record[n_col].parse().with_context(|| format!("bad n {:?}", &record[n_col]))?;
        let r: f64 = record[r_col]
            .parse()
            .with_context(|| format!("bad regret {:?}", &record[r_col]))?;
        if n > 0.0 && r.is_finite() {
            series.push((n, r.max(REGRET_FLOOR)));
        }
    }
    if series.len() < 2 {
        bail!("{} needs at least two plottable rows", path.display());
    }
    Ok(series)
}

struct Axis {
    lo: f64,
    hi: f64,
    start: f64,
    end: f64,
}

impl Axis {
    fn new(values: impl Iterator<Item = f64>, start: f64, end: f64) -> Self {
        let (mut lo, mut hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
            (a.min(v.log10()), b.max(v.log10()))
        });
        lo = lo.floor();
        hi = hi.ceil();
        if hi <= lo {
            hi = lo + 1.0;
        }
        Axis { lo, hi, start, end }
    }

    fn map(&self, v: f64) -> f64 {
        self.start + (v.log10() - self.lo) / (self.hi - self.lo) * (self.end - self.start)
    }

    fn decades(&self) -> impl Iterator<Item = i32> {
        (self.lo as i32)..=(self.hi as i32)
    }
}

pub fn render(series: &[(f64, f64)], window: Option<(usize, usize)>, title: &str) -> Result<String> {
    let (lo, hi) = window.map_or((series[0].0, series[series.len() - 1].0), |(a, b)| (a as f64, b as f64));
    let fit: Vec<(f64, f64)> = series.iter().copied().filter(|(n, _)| *n >= lo && *n <= hi).collect();
    let (ns, rs): (Vec<f64>, Vec<f64>) = fit.iter().copied().unzip();
    let slope = fit_slope(&ns, &rs)?;
    let log_mean = |v: &[f64]| v.iter().map(|x| x.ln()).sum::<f64>() / v.len() as f64;
    let intercept = log_mean(&rs) - slope * log_mean(&ns);

    let x = Axis::new(series.iter().map(|p| p.0), MARGIN_LEFT, WIDTH - MARGIN_RIGHT);
    let y = Axis::new(series.iter().map(|p| p.1), HEIGHT - MARGIN_BOTTOM, MARGIN_TOP);

    let mut svg = String::new();
    writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    )?;
    writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#)?;
    writeln!(svg, r#"<text x="{}" y="20" text-anchor="middle">{}</text>"#, WIDTH / 2.0, escape(title))?;
    for e in x.decades() {
        let px = x.map(10f64.powi(e));
        writeln!(
            svg,
            r##"<line x1="{px:.1}" y1="{MARGIN_TOP}" x2="{px:.1}" y2="{:.1}" stroke="#ddd"/><text x="{px:.1}" y="{:.1}" text-anchor="middle">1e{e}</text>"##,
            HEIGHT - MARGIN_BOTTOM,
            HEIGHT - MARGIN_BOTTOM + 16.0
        )?;
    }
    for e in y.decades() {
        let py = y.map(10f64.powi(e));
        writeln!(
            svg,
            r##"<line x1="{MARGIN_LEFT}" y1="{py:.1}" x2="{:.1}" y2="{py:.1}" stroke="#ddd"/><text x="{:.1}" y="{:.1}" text-anchor="end">1e{e}</text>"##,
            WIDTH - MARGIN_RIGHT,
            MARGIN_LEFT - 6.0,
            py + 4.0
        )?;
    }
    writeln!(
        svg,
        r#"<rect x="{MARGIN_LEFT}" y="{MARGIN_TOP}" width="{:.1}" height="{:.1}" fill="none" stroke="black"/>"#,
        WIDTH - MARGIN_LEFT - MARGIN_RIGHT,
        HEIGHT - MARGIN_TOP - MARGIN_BOTTOM
    )?;
    writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">n</text>"#,
        (MARGIN_LEFT + WIDTH - MARGIN_RIGHT) / 2.0,
        HEIGHT - 10.0
    )?;
    writeln!(
        svg,
        r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">regret</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0
    )?;

    let points: Vec<String> = series
        .iter()
        .map(|(n, r)| format!("{:.2},{:.2}", x.map(*n), y.map(*r)))
        .collect();
    writeln!(
        svg,
        r##"<polyline fill="none" stroke="#1f77b4" stroke-width="1.5" points="{}"/>"##,
        points.join(" ")
    )?;
    let line = |n: f64| (intercept + slope * n.ln()).exp();
    writeln!(
        svg,
        r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#d62728" stroke-width="1.5" stroke-dasharray="6 4"/>"##,
        x.map(lo),
        y.map(line(lo)),
        x.map(hi),
        y.map(line(hi))
    )?;
    writeln!(
        svg,
        r##"<text x="{:.1}" y="{:.1}" text-anchor="end" fill="#d62728">fitted slope {slope:.3} on n in [{lo}, {hi}]</text>"##,
        WIDTH - MARGIN_RIGHT - 8.0,
        MARGIN_TOP + 18.0
    )?;
    writeln!(svg, "</svg>")?;
    Ok(svg)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
