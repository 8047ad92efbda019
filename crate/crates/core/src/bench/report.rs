use std::collections::BTreeMap;
use std::fmt::Write;

/// One (dataset, lookback, model) cell; metrics are `None` when the cell failed.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub dataset: String,
    pub lookback: usize,
    pub model: String,
    pub mse: Option<f64>,
    pub mae: Option<f64>,
    pub params: Option<usize>,
    pub wall_time: f64,
    /// Display metrics multiplied by 100.
    pub scale100: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BenchmarkReport {
    pub rows: Vec<ReportRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum TableFormat {
    Markdown,
    Csv,
}

fn cell(value: Option<f64>, scale100: bool) -> String {
    match value {
        Some(v) => format!("{:.2}", if scale100 { v * 100.0 } else { v }),
        None => "N/A".into(),
    }
}

/// Indices (into `rows`) of the minimal raw values; all ties are marked.
fn best(rows: &[&ReportRow], metric: fn(&ReportRow) -> Option<f64>) -> Vec<bool> {
    let min = rows.iter().filter_map(|r| metric(r)).min_by(f64::total_cmp);
    rows.iter().map(|r| min.is_some() && metric(r) == min).collect()
}

impl BenchmarkReport {
    /// Models in first-appearance order.
    pub fn models(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.model) {
                out.push(r.model.clone());
            }
        }
        out
    }

    /// Rows grouped by (dataset, lookback) in first-appearance order.
    fn groups(&self) -> Vec<((String, usize), Vec<&ReportRow>)> {
        let mut out: Vec<((String, usize), Vec<&ReportRow>)> = Vec::new();
        for r in &self.rows {
            let key = (r.dataset.clone(), r.lookback);
            match out.iter_mut().find(|(k, _)| *k == key) {
                Some((_, v)) => v.push(r),
                None => out.push((key, vec![r])),
            }
        }
        out
    }
}

/// Two-decimal table with the best MSE and MAE of each (dataset, lookback)
/// row marked: bold in markdown, a `best_*` flag in CSV. Wall time is left
/// out so identical runs render identical bytes.
pub fn render_table(report: &BenchmarkReport, format: TableFormat) -> String {
    let models = report.models();
    let mut out = String::new();
    match format {
        TableFormat::Markdown => {
            out.push_str("| dataset | L |");
            for m in &models {
                let _ = write!(out, " {m} MSE | {m} MAE |");
            }
            out.push_str("\n|---|---|");
            out.push_str(&"---|---|".repeat(models.len()));
            out.push('\n');
            for ((dataset, lookback), rows) in report.groups() {
                let scaled = rows.iter().any(|r| r.scale100);
                let label = if scaled { format!("{dataset} (x100)") } else { dataset.clone() };
                let _ = write!(out, "| {label} | {lookback} |");
                let best_mse = best(&rows, |r| r.mse);
                let best_mae = best(&rows, |r| r.mae);
                for m in &models {
                    match rows.iter().position(|r| &r.model == m) {
                        Some(i) => {
                            let mark = |s: String, b: bool| if b { format!("**{s}**") } else { s };
                            let _ = write!(
                                out,
                                " {} | {} |",
                                mark(cell(rows[i].mse, scaled), best_mse[i]),
                                mark(cell(rows[i].mae, scaled), best_mae[i])
                            );
                        }
                        None => out.push_str(" N/A | N/A |"),
                    }
                }
                out.push('\n');
            }
        }
        TableFormat::Csv => {
            out.push_str("dataset,lookback,model,mse,mae,params,best_mse,best_mae\n");
            for ((dataset, lookback), rows) in report.groups() {
                let best_mse = best(&rows, |r| r.mse);
                let best_mae = best(&rows, |r| r.mae);
                for (i, r) in rows.iter().enumerate() {
                    let _ = writeln!(
                        out,
                        "{},{lookback},{},{},{},{},{},{}",
                        csv_field(&dataset),
                        csv_field(&r.model),
                        cell(r.mse, r.scale100),
                        cell(r.mae, r.scale100),
                        r.params.map_or("N/A".into(), |p| p.to_string()),
                        best_mse[i],
                        best_mae[i]
                    );
                }
            }
        }
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Per-model mean MSE over each group of datasets, drawn as clustered bars.
///
/// `groups` maps a group label to dataset names; an empty slice puts every
/// dataset in one group called `all`. Bar heights are linear in the mean.
pub fn render_bar_svg(report: &BenchmarkReport, groups: &[(String, Vec<String>)]) -> String {
    let models = report.models();
    let all: Vec<(String, Vec<String>)>;
    let groups = if groups.is_empty() {
        let mut names: Vec<String> = report.rows.iter().map(|r| r.dataset.clone()).collect();
        names.dedup();
        all = vec![("all".to_string(), names)];
        &all[..]
    } else {
        groups
    };
    let mut means: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for (g, (_, datasets)) in groups.iter().enumerate() {
        for (m, model) in models.iter().enumerate() {
            let vals: Vec<f64> = report
                .rows
                .iter()
                .filter(|r| &r.model == model && datasets.contains(&r.dataset))
                .filter_map(|r| r.mse)
                .collect();
            if !vals.is_empty() {
                means.insert((g, m), vals.iter().sum::<f64>() / vals.len() as f64);
            }
        }
    }
    let max = means.values().copied().fold(0.0f64, f64::max);
    let (bar_w, gap, plot_h, top, left) = (30.0, 20.0, 200.0, 20.0, 50.0);
    let cluster_w = bar_w * models.len().max(1) as f64 + gap;
    let width = left + cluster_w * groups.len() as f64 + gap;
    let height = top + plot_h + 60.0 + 16.0 * models.len() as f64;
    let palette = ["#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3", "#937860", "#da8bc3", "#8c8c8c"];

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">"#
    );
    let base = top + plot_h;
    let _ = writeln!(svg, r#"<line x1="{left}" y1="{base}" x2="{width}" y2="{base}" stroke="black"/>"#);
    let _ = writeln!(svg, r#"<text x="4" y="{top}">{:.3}</text>"#, max);
    for (g, (label, _)) in groups.iter().enumerate() {
        let x0 = left + gap / 2.0 + g as f64 * cluster_w;
        for (m, model) in models.iter().enumerate() {
            if let Some(v) = means.get(&(g, m)) {
                let h = if max > 0.0 { v / max * plot_h } else { 0.0 };
                let x = x0 + m as f64 * bar_w;
                let _ = writeln!(
                    svg,
                    r#"<rect x="{x}" y="{}" width="{}" height="{h}" fill="{}"><title>{}: {v}</title></rect>"#,
                    base - h,
                    bar_w - 2.0,
                    palette[m % palette.len()],
                    xml_escape(model)
                );
            }
        }
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            x0 + bar_w * models.len() as f64 / 2.0,
            base + 16.0,
            xml_escape(label)
        );
    }
    for (m, model) in models.iter().enumerate() {
        let y = base + 36.0 + 16.0 * m as f64;
        let _ = writeln!(
            svg,
            r#"<rect x="{left}" y="{}" width="10" height="10" fill="{}"/><text x="{}" y="{y}">{}</text>"#,
            y - 9.0,
            palette[m % palette.len()],
            left + 14.0,
            xml_escape(model)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(dataset: &str, model: &str, mse: Option<f64>, scale100: bool) -> ReportRow {
        ReportRow {
            dataset: dataset.into(),
            lookback: 96,
            model: model.into(),
            mse,
            mae: mse,
            params: mse.map(|_| 10),
            wall_time: 1.0,
            scale100,
        }
    }

    #[test]
    fn rounding_and_scaling() {
        assert_eq!(cell(Some(0.0049), true), "0.49");
        assert_eq!(cell(Some(0.004), false), "0.00");
        assert_eq!(cell(None, false), "N/A");
    }

    #[test]
    fn best_marking_and_ties() {
        let report = BenchmarkReport {
            rows: vec![
                row("s", "a", Some(0.5), false),
                row("s", "b", Some(0.2), false),
                row("s", "c", Some(0.2), false),
                row("s", "d", None, false),
            ],
        };
        let csv = render_table(&report, TableFormat::Csv);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[1], "s,96,a,0.50,0.50,10,false,false");
        assert!(lines[2].ends_with("true,true") && lines[3].ends_with("true,true"));
        assert_eq!(lines[4], "s,96,d,N/A,N/A,N/A,false,false");
        let md = render_table(&report, TableFormat::Markdown);
        assert!(md.contains("| s | 96 | 0.50 | 0.50 | **0.20** | **0.20** | **0.20** | **0.20** | N/A | N/A |"));
    }

    #[test]
    fn bar_heights_follow_means() {
        let report = BenchmarkReport {
            rows: vec![
                row("x", "m1", Some(1.0), false),
                row("x", "m2", Some(2.0), false),
                row("y", "m1", Some(0.8), false),
                row("z", "m1", Some(0.6), false),
            ],
        };
        let svg = render_bar_svg(&report, &[]);
        assert!(svg.contains(r#"height="200""#));
        let groups = vec![("yz".to_string(), vec!["y".to_string(), "z".to_string()])];
        let svg = render_bar_svg(&report, &groups);
        assert!(svg.contains("m1: 0.7"));
        let two = BenchmarkReport {
            rows: report.rows[..2].to_vec(),
        };
        let heights = bar_heights(&render_bar_svg(&two, &[]));
        assert_eq!(heights.len(), 2);
        assert!((heights[1] / heights[0] - 2.0).abs() < 1e-12);
    }

    fn bar_heights(svg: &str) -> Vec<f64> {
        svg.lines()
            .filter(|l| l.contains("<title>"))
            .map(|l| {
                let start = l.find(" height=\"").unwrap() + 9;
                let end = start + l[start..].find('"').unwrap();
                l[start..end].parse().unwrap()
            })
            .collect()
    }
}
