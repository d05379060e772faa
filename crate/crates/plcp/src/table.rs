//! Result tables, their CSV form and SVG line charts drawn from the CSV.

use anyhow::{bail, Context, Result};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{Read, Write};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Text(String),
    Empty,
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(v) if *v != 0.0 && (v.abs() < 1e-4 || v.abs() >= 1e15) => format!("{v:e}"),
            Cell::Num(v) => format!("{v}"),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: Vec<String>) -> Self {
        Table { columns, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width must match the header");
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Numeric values of a column; empty or text cells give `None`.
    pub fn numbers(&self, name: &str) -> Option<Vec<Option<f64>>> {
        let k = self.column(name)?;
        Some(self.rows.iter().map(|r| if let Cell::Num(v) = r[k] { Some(v) } else { None }).collect())
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render))?;
        }
        w.flush()?;
        Ok(())
    }

    /// Read a table back; cells that parse as numbers become numbers.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let columns: Vec<String> = r.headers()?.iter().map(String::from).collect();
        let mut table = Table::new(columns);
        for record in r.records() {
            let record = record?;
            let row = record
                .iter()
                .map(|s| match s {
                    "" => Cell::Empty,
                    s => s.parse::<f64>().map(Cell::Num).unwrap_or_else(|_| Cell::Text(s.to_string())),
                })
                .collect::<Vec<_>>();
            if row.len() != table.columns.len() {
                bail!("CSV row has {} cells, header has {}", row.len(), table.columns.len());
            }
            table.rows.push(row);
        }
        Ok(table)
    }
}

/// What to draw: `y` columns against `x`, one line per value of `group`.
#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    pub title: String,
    pub x: String,
    pub y: Vec<String>,
    pub group: Option<String>,
    pub log_x: bool,
    pub y_label: String,
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 200.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn ticks(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let span = (hi - lo).max(1e-12);
    let raw = span / count as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| span / s <= count as f64).unwrap_or(10.0 * mag);
    let start = (lo / step).ceil() as i64;
    let end = (hi / step).floor() as i64;
    (start..=end).map(|k| k as f64 * step).collect()
}

fn label(v: f64) -> String {
    let s = format!("{v:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

/// Render a line chart of `table` as SVG 1.1.
pub fn render_svg(table: &Table, chart: &Chart) -> Result<String> {
    let xs = table.numbers(&chart.x).with_context(|| format!("chart column `{}` missing", chart.x))?;
    let group_col = chart
        .group
        .as_ref()
        .map(|g| table.column(g).with_context(|| format!("chart column `{g}` missing")))
        .transpose()?;
    let mut series: BTreeMap<(String, usize), Vec<(f64, f64)>> = BTreeMap::new();
    let mut order: Vec<(String, usize)> = Vec::new();
    for (yi, y) in chart.y.iter().enumerate() {
        let ys = table.numbers(y).with_context(|| format!("chart column `{y}` missing"))?;
        for (r, (x, v)) in xs.iter().zip(&ys).enumerate() {
            let (Some(x), Some(v)) = (x, v) else { continue };
            if chart.log_x && *x <= 0.0 {
                continue;
            }
            let g = group_col.map(|k| table.rows[r][k].render()).unwrap_or_default();
            let key = (g, yi);
            if !series.contains_key(&key) {
                order.push(key.clone());
            }
            series.entry(key).or_default().push((*x, *v));
        }
    }
    let tx = |x: f64| if chart.log_x { x.log10() } else { x };
    let points = series.values().flatten();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in points {
        x0 = x0.min(tx(x));
        x1 = x1.max(tx(x));
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    y0 = y0.min(0.0);
    y1 = if y1 <= 1.0 && y0 >= 0.0 { 1.0 } else { y1 + 0.05 * (y1 - y0).max(1e-12) };
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let px = |x: f64| LEFT + (tx(x) - x0) / (x1 - x0) * pw;
    let py = |y: f64| TOP + (1.0 - (y - y0) / (y1 - y0)) * ph;

    let mut s = String::new();
    writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#)?;
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    )?;
    writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#)?;
    writeln!(
        s,
        r#"<text x="{}" y="22" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        escape(&chart.title)
    )?;
    writeln!(s, r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#)?;
    for t in ticks(y0, y1, 6) {
        let y = py(t);
        writeln!(s, r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#dddddd"/>"##, LEFT + pw)?;
        writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11" text-anchor="end">{}</text>"#,
            LEFT - 6.0,
            y + 4.0,
            label(t)
        )?;
    }
    for t in ticks(x0, x1, 8) {
        let x = LEFT + (t - x0) / (x1 - x0) * pw;
        let text = if chart.log_x { label(10f64.powf(t)) } else { label(t) };
        writeln!(s, r##"<line x1="{x:.2}" y1="{TOP}" x2="{x:.2}" y2="{:.2}" stroke="#dddddd"/>"##, TOP + ph)?;
        writeln!(
            s,
            r#"<text x="{x:.2}" y="{:.2}" font-family="sans-serif" font-size="11" text-anchor="middle">{text}</text>"#,
            TOP + ph + 16.0
        )?;
    }
    let x_title = if chart.log_x { format!("{} (log scale)", chart.x) } else { chart.x.clone() };
    writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="12" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 10.0,
        escape(&x_title)
    )?;
    writeln!(
        s,
        r#"<text x="16" y="{:.2}" font-family="sans-serif" font-size="12" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        escape(&chart.y_label)
    )?;
    let groups: Vec<&String> = {
        let mut g: Vec<&String> = Vec::new();
        for (name, _) in &order {
            if !g.contains(&name) {
                g.push(name);
            }
        }
        g
    };
    for (i, key) in order.iter().enumerate() {
        let color = PALETTE[groups.iter().position(|g| *g == &key.0).unwrap_or(0) % PALETTE.len()];
        let dash = if key.1 == 0 { "" } else { r#" stroke-dasharray="6 4""# };
        let pts: Vec<String> = series[key].iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
        writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash} points="{}"/>"#, pts.join(" "))?;
        if key.1 > 0 {
            for &(x, y) in &series[key] {
                writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{color}"/>"#, px(x), py(y))?;
            }
        }
        let ly = TOP + 14.0 + 16.0 * i as f64;
        let lx = LEFT + pw + 12.0;
        let name = match &chart.group {
            Some(g) => format!("{g}={} {}", key.0, chart.y[key.1]),
            None => chart.y[key.1].clone(),
        };
        writeln!(
            s,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="1.5"{dash}/>"#,
            lx + 24.0
        )?;
        writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11">{}</text>"#,
            lx + 30.0,
            ly + 4.0,
            escape(&name)
        )?;
    }
    writeln!(s, "</svg>")?;
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Table {
        let mut t = Table::new(vec!["g".into(), "x".into(), "y".into()]);
        t.push(vec![Cell::Text("a".into()), Cell::Num(1.0), Cell::Num(0.25)]);
        t.push(vec![Cell::Text("a".into()), Cell::Num(2.0), Cell::Empty]);
        t.push(vec![Cell::Text("b, c".into()), Cell::Num(0.1), Cell::Num(1e-300)]);
        t
    }

    #[test]
    fn csv_round_trip() {
        let t = sample();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("g,x,y\n"));
        assert!(text.contains("\"b, c\""));
        assert_eq!(Table::read_csv(&buf[..]).unwrap(), t);
    }

    #[test]
    fn svg_has_one_polyline_per_series() {
        let chart = Chart {
            title: "t".into(),
            x: "x".into(),
            y: vec!["y".into()],
            group: Some("g".into()),
            log_x: true,
            y_label: "p".into(),
        };
        let svg = render_svg(&sample(), &chart).unwrap();
        assert!(svg.starts_with("<?xml"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn tick_steps_are_round() {
        let labels = |v: Vec<f64>| v.into_iter().map(label).collect::<Vec<_>>();
        assert_eq!(labels(ticks(0.0, 1.0, 5)), ["0", "0.2", "0.4", "0.6", "0.8", "1"]);
        assert_eq!(labels(ticks(-20.0, 30.0, 8)), ["-20", "-10", "0", "10", "20", "30"]);
    }
}
