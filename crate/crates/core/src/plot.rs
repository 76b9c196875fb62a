//! Self-contained SVG heatmaps and line charts from CSV tables.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::{Error, Result};

/// A parsed CSV table with a header row.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header: Vec<String> = lines
            .next()
            .ok_or_else(|| Error::Malformed("CSV is empty".into()))?
            .split(',')
            .map(|s| s.trim().to_string())
            .collect();
        let mut rows = Vec::new();
        for (n, line) in lines.enumerate() {
            let row: Vec<String> = line.split(',').map(|s| s.trim().to_string()).collect();
            if row.len() != header.len() {
                return Err(Error::Malformed(format!(
                    "CSV row {} has {} fields, header has {}",
                    n + 2,
                    row.len(),
                    header.len()
                )));
            }
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(Error::Malformed("CSV has a header but no rows".into()));
        }
        Ok(Table { header, rows })
    }

    pub fn column(&self, name: &str) -> Result<usize> {
        self.header.iter().position(|h| h == name).ok_or_else(|| {
            Error::Malformed(format!(
                "CSV has no column `{name}` (columns: {})",
                self.header.join(", ")
            ))
        })
    }

    fn number(&self, row: usize, col: usize) -> Result<f64> {
        let s = &self.rows[row][col];
        s.parse().map_err(|_| {
            Error::Malformed(format!(
                "CSV row {}: `{s}` in column `{}` is not a number",
                row + 2,
                self.header[col]
            ))
        })
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Diverging blue-white-red for `v` in `[-1, 1]`.
fn diverging(v: f64) -> String {
    let v = v.clamp(-1.0, 1.0);
    let (r, g, b) = if v < 0.0 {
        let t = -v;
        (
            255.0 * (1.0 - t) + 33.0 * t,
            255.0 * (1.0 - t) + 102.0 * t,
            255.0 * (1.0 - t) + 172.0 * t,
        )
    } else {
        (
            255.0 * (1.0 - v) + 178.0 * v,
            255.0 * (1.0 - v) + 24.0 * v,
            255.0 * (1.0 - v) + 43.0 * v,
        )
    };
    format!(
        "#{:02x}{:02x}{:02x}",
        r.round() as u8,
        g.round() as u8,
        b.round() as u8
    )
}

const PALETTE: &[&str] = &[
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

/// Heatmap of `value` over `(row, col)`; cells are coloured on a scale
/// symmetric around zero.
pub fn heatmap(table: &Table, row: &str, col: &str, value: &str, title: &str) -> Result<String> {
    let (ri, ci, vi) = (table.column(row)?, table.column(col)?, table.column(value)?);
    let mut cells: BTreeMap<(String, String), f64> = BTreeMap::new();
    let mut rows: Vec<String> = Vec::new();
    let mut cols: Vec<String> = Vec::new();
    for r in 0..table.rows.len() {
        let (a, b) = (table.rows[r][ri].clone(), table.rows[r][ci].clone());
        if !rows.contains(&a) {
            rows.push(a.clone());
        }
        if !cols.contains(&b) {
            cols.push(b.clone());
        }
        cells.insert((a, b), table.number(r, vi)?);
    }
    let scale = cells
        .values()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(1e-12);
    let (cw, ch, left, top) = (56.0, 40.0, 70.0, 50.0);
    let width = left + cw * cols.len() as f64 + 20.0;
    let height = top + ch * rows.len() as f64 + 50.0;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="20" text-anchor="middle" font-size="13">{}</text>"#,
        width / 2.0,
        escape(title)
    );
    for (i, r) in rows.iter().enumerate() {
        let y = top + ch * i as f64;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
            left - 6.0,
            y + ch / 2.0 + 4.0,
            escape(r)
        );
        for (j, c) in cols.iter().enumerate() {
            let x = left + cw * j as f64;
            match cells.get(&(r.clone(), c.clone())) {
                Some(&v) => {
                    let _ = writeln!(
                        s,
                        r##"<rect class="cell" x="{x}" y="{y}" width="{cw}" height="{ch}" fill="{}" stroke="#ffffff"/><text x="{}" y="{}" text-anchor="middle">{v:.3}</text>"##,
                        diverging(v / scale),
                        x + cw / 2.0,
                        y + ch / 2.0 + 4.0
                    );
                }
                None => {
                    let _ = writeln!(
                        s,
                        r##"<rect x="{x}" y="{y}" width="{cw}" height="{ch}" fill="#eeeeee" stroke="#ffffff"/>"##
                    );
                }
            }
        }
    }
    let base = top + ch * rows.len() as f64;
    for (j, c) in cols.iter().enumerate() {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            left + cw * (j as f64 + 0.5),
            base + 16.0,
            escape(c)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        left + cw * cols.len() as f64 / 2.0,
        base + 36.0,
        escape(col)
    );
    let _ = writeln!(
        s,
        r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">{}</text>"#,
        top + ch * rows.len() as f64 / 2.0,
        top + ch * rows.len() as f64 / 2.0,
        escape(row)
    );
    s.push_str("</svg>\n");
    Ok(s)
}

/// Line chart of `y` against `x`, one polyline per distinct `series` value.
pub fn line_chart(
    table: &Table,
    x: &str,
    y: &str,
    series: Option<&str>,
    title: &str,
) -> Result<String> {
    let (xi, yi) = (table.column(x)?, table.column(y)?);
    let si = series.map(|s| table.column(s)).transpose()?;
    let mut lines: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for r in 0..table.rows.len() {
        let key = si.map_or_else(|| y.to_string(), |i| table.rows[r][i].clone());
        lines
            .entry(key)
            .or_default()
            .push((table.number(r, xi)?, table.number(r, yi)?));
    }
    for pts in lines.values_mut() {
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    let all = lines.values().flatten();
    let (mut x0, mut x1, mut y0, mut y1) = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for &(a, b) in all {
        x0 = x0.min(a);
        x1 = x1.max(a);
        y0 = y0.min(b);
        y1 = y1.max(b);
    }
    if x1 == x0 {
        x1 = x0 + 1.0;
    }
    if y1 == y0 {
        y1 = y0 + 1.0;
    }
    let (w, h, left, top) = (480.0, 300.0, 60.0, 40.0);
    let px = |v: f64| left + (v - x0) / (x1 - x0) * w;
    let py = |v: f64| top + h - (v - y0) / (y1 - y0) * h;
    let (width, height) = (left + w + 140.0, top + h + 50.0);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="20" text-anchor="middle" font-size="13">{}</text>"#,
        left + w / 2.0,
        escape(title)
    );
    let _ = writeln!(
        s,
        r##"<rect x="{left}" y="{top}" width="{w}" height="{h}" fill="none" stroke="#444444"/>"##
    );
    for k in 0..=4 {
        let fx = x0 + (x1 - x0) * k as f64 / 4.0;
        let fy = y0 + (y1 - y0) * k as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            px(fx),
            top + h + 16.0,
            tick(fx)
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
            left - 6.0,
            py(fy) + 4.0,
            tick(fy)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        left + w / 2.0,
        top + h + 36.0,
        escape(x)
    );
    for (k, (name, pts)) in lines.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let path: Vec<String> = pts
            .iter()
            .map(|&(a, b)| format!("{:.2},{:.2}", px(a), py(b)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline class="series" fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            path.join(" ")
        );
        for &(a, b) in pts {
            let _ = writeln!(
                s,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#,
                px(a),
                py(b)
            );
        }
        let ly = top + 14.0 * k as f64 + 6.0;
        let _ = writeln!(
            s,
            r#"<rect x="{}" y="{}" width="10" height="10" fill="{color}"/><text x="{}" y="{}">{}</text>"#,
            left + w + 12.0,
            ly,
            left + w + 26.0,
            ly + 9.0,
            escape(name)
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn tick(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e6 {
        format!("{v:.0}")
    } else {
        format!("{v:.3}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heatmap_has_one_rect_per_cell() {
        let mut csv = String::from("t,tau,p_hat\n");
        for t in 0..3 {
            for tau in 0..3 {
                csv.push_str(&format!("{t},{tau},{}\n", t as f64 - tau as f64));
            }
        }
        let svg = heatmap(&Table::parse(&csv).unwrap(), "t", "tau", "p_hat", "P").unwrap();
        assert_eq!(svg.matches(r#"class="cell""#).count(), 9);
        assert_eq!(
            svg,
            heatmap(&Table::parse(&csv).unwrap(), "t", "tau", "p_hat", "P").unwrap()
        );
    }

    #[test]
    fn malformed_inputs() {
        assert!(matches!(Table::parse(""), Err(Error::Malformed(_))));
        assert!(matches!(Table::parse("a,b\n"), Err(Error::Malformed(_))));
        assert!(matches!(Table::parse("a,b\n1\n"), Err(Error::Malformed(_))));
        let t = Table::parse("year,p\n2010,x\n").unwrap();
        assert!(line_chart(&t, "year", "p", None, "").is_err());
        assert!(line_chart(&t, "year", "q", None, "").is_err());
    }

    #[test]
    fn line_chart_series() {
        let t = Table::parse(
            "year,token,probability\n2010,a,0.1\n2011,a,0.2\n2010,b,0.5\n2011,b,0.4\n",
        )
        .unwrap();
        let svg = line_chart(&t, "year", "probability", Some("token"), "tokens").unwrap();
        assert_eq!(svg.matches(r#"class="series""#).count(), 2);
    }
}
