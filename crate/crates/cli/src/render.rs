use std::fmt::Write;

use clap::ValueEnum;

use emoxfer::experiments::{AblationReport, EvalReport, MatrixReport, RunRecord};

use crate::report::{ReportBody, ReportDocument};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Style {
    #[default]
    Markdown,
    Text,
}

/// Three decimals without the leading zero: `.121`, `−.518`, `1.000`.
pub fn fmt3(x: f64) -> String {
    let s = format!("{:.3}", x.abs());
    let s = s.strip_prefix('0').map(str::to_string).unwrap_or(s);
    if x < 0.0 && s != ".000" {
        format!("\u{2212}{s}")
    } else {
        s
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt3).unwrap_or_else(|| "n/a".into())
}

struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: Vec<String>) -> Self {
        Table { header, rows: Vec::new() }
    }

    fn render(&self, style: Style, out: &mut String) {
        match style {
            Style::Markdown => {
                let line = |cells: &[String]| format!("| {} |\n", cells.join(" | "));
                out.push_str(&line(&self.header));
                let rule: Vec<String> = self.header.iter().map(|_| "---".to_string()).collect();
                out.push_str(&line(&rule));
                for r in &self.rows {
                    out.push_str(&line(r));
                }
            }
            Style::Text => {
                let mut widths: Vec<usize> = self.header.iter().map(|h| h.chars().count()).collect();
                for r in &self.rows {
                    for (w, c) in widths.iter_mut().zip(r) {
                        *w = (*w).max(c.chars().count());
                    }
                }
                let line = |cells: &[String]| {
                    let padded: Vec<String> = cells
                        .iter()
                        .zip(&widths)
                        .map(|(c, &w)| format!("{c}{}", " ".repeat(w - c.chars().count())))
                        .collect();
                    format!("{}\n", padded.join("  ").trim_end())
                };
                out.push_str(&line(&self.header));
                let rule: Vec<String> = widths.iter().map(|&w| "-".repeat(w)).collect();
                out.push_str(&line(&rule));
                for r in &self.rows {
                    out.push_str(&line(r));
                }
            }
        }
    }
}

fn emphasize(s: String, style: Style) -> String {
    match style {
        Style::Markdown => format!("**{s}**"),
        Style::Text => format!("{s}*"),
    }
}

/// Gains of one row, with every maximum emphasized.
fn gain_cells(cells: &[&EvalReport], style: Style) -> Vec<String> {
    let best = cells
        .iter()
        .filter_map(|c| c.gain)
        .fold(f64::NEG_INFINITY, f64::max);
    cells
        .iter()
        .map(|c| match c.gain {
            Some(g) if g == best => emphasize(fmt3(g), style),
            g => fmt_opt(g),
        })
        .collect()
}

fn render_tt(records: &[RunRecord], style: Style, out: &mut String) {
    let folds = records.iter().map(|r| r.fold_uars.len()).max().unwrap_or(0);
    let mut header = vec!["Target".to_string(), "TT".to_string()];
    header.extend((0..folds).map(|f| format!("fold {f}")));
    let mut t = Table::new(header);
    for r in records {
        let mut row = vec![r.target.clone(), fmt3(r.mean_uar)];
        row.extend(r.fold_uars.iter().map(|&u| fmt3(u)));
        row.resize(folds + 2, String::new());
        t.rows.push(row);
    }
    t.render(style, out);
}

fn render_transfer(reports: &[EvalReport], style: Style, out: &mut String) {
    let mut t = Table::new(
        ["Target", "Cell", "TT", "UAR", "Gain", "p", "Mark"]
            .map(String::from)
            .to_vec(),
    );
    for r in reports {
        let gain = gain_cells(&[r], style).remove(0);
        t.rows.push(vec![
            r.record.target.clone(),
            r.record.cell.clone(),
            fmt3(r.baseline_mean_uar),
            fmt3(r.record.mean_uar),
            gain,
            format!("{:.4}", r.p),
            r.mark.symbol().to_string(),
        ]);
    }
    t.render(style, out);
}

fn render_matrix(m: &MatrixReport, style: Style, out: &mut String) {
    let cells: Vec<String> = m.summary.iter().map(|s| s.cell.clone()).collect();
    let mut header = vec!["Target".to_string(), "TT".to_string()];
    header.extend(cells.iter().cloned());
    let mut t = Table::new(header);
    for target in &m.targets {
        let row_cells: Vec<&EvalReport> = cells
            .iter()
            .filter_map(|c| target.cells.iter().find(|e| &e.record.cell == c))
            .collect();
        let mut row = vec![target.target.clone(), fmt3(target.tt.mean_uar)];
        row.extend(gain_cells(&row_cells, style));
        t.rows.push(row);
    }
    let mut mean = vec!["Mean".to_string(), String::new()];
    mean.extend(m.summary.iter().map(|s| fmt_opt(s.mean_gain)));
    let mut std = vec!["Std".to_string(), String::new()];
    std.extend(m.summary.iter().map(|s| fmt_opt(s.std_gain)));
    t.rows.push(mean);
    t.rows.push(std);
    t.render(style, out);
}

fn render_ablation(a: &AblationReport, style: Style, out: &mut String) {
    for (i, target) in a.targets.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let _ = writeln!(out, "Target: {}\n", target.target);
        let Some(first) = target.rows.first() else {
            continue;
        };
        let mut header = vec!["Sources".to_string()];
        header.extend(first.cells.iter().map(|c| c.record.cell.clone()));
        let mut t = Table::new(header);
        for row in &target.rows {
            let mut r = vec![row.label.clone()];
            r.extend(row.cells.iter().map(|c| {
                if row.excluded.is_none() {
                    fmt3(c.record.mean_uar)
                } else {
                    format!("{} {}", fmt3(c.record.mean_uar), c.mark.symbol())
                }
            }));
            t.rows.push(r);
        }
        t.render(style, out);
    }
}

/// Human-readable tables for a report; a pure function of the document.
pub fn render(doc: &ReportDocument, style: Style) -> String {
    let mut out = String::new();
    match &doc.body {
        ReportBody::Tt(r) => render_tt(r, style, &mut out),
        ReportBody::Transfer(r) => render_transfer(r, style, &mut out),
        ReportBody::Matrix(m) => render_matrix(m, style, &mut out),
        ReportBody::Ablation(a) => render_ablation(a, style, &mut out),
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_decimals() {
        assert_eq!(fmt3(0.121), ".121");
        assert_eq!(fmt3(-0.518), "\u{2212}.518");
        assert_eq!(fmt3(-0.0001), ".000");
        assert_eq!(fmt3(1.0), "1.000");
        assert_eq!(fmt3(-1.25), "\u{2212}1.250");
        assert_eq!(fmt3(0.0), ".000");
    }

    #[test]
    fn text_columns_align_by_characters() {
        let mut t = Table::new(vec!["a".into(), "b".into()]);
        t.rows.push(vec!["\u{2212}.5".into(), "x".into()]);
        t.rows.push(vec!["long".into(), "y".into()]);
        let mut s = String::new();
        t.render(Style::Text, &mut s);
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], "a     b");
        assert_eq!(lines[2], "\u{2212}.5   x");
        assert_eq!(lines[3], "long  y");
    }
}
