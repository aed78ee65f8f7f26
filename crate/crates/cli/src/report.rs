//! Side-by-side comparison of result documents.

use focal_core::data::INCOME;
use focal_core::report::CompensatingDifferential;

use crate::document::{LoadedDocument, SummaryRow};

fn is_wellbeing_slope(name: &str) -> bool {
    !name.contains(':') && !name.contains('|') && name != "constant"
}

fn cell(row: Option<&SummaryRow>) -> String {
    match row {
        None => "-".into(),
        Some(r) => match r.se {
            Some(se) => format!("{:.4} ({:.4})", r.estimate, se),
            None => format!("{:.4}", r.estimate),
        },
    }
}

fn headers(docs: &[LoadedDocument]) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for d in docs {
        let base = d.meta.model.clone();
        let mut label = base.clone();
        let mut k = 2;
        while out.contains(&label) {
            label = format!("{base}#{k}");
            k += 1;
        }
        out.push(label);
    }
    out
}

/// Markdown table: one row per parameter in first-seen order, one column
/// per document, then compensating differentials of every well-being slope
/// relative to that document's ln-income coefficient.
pub fn comparison_table(docs: &[LoadedDocument]) -> String {
    let cols = headers(docs);
    let mut names: Vec<String> = Vec::new();
    for d in docs {
        for r in &d.summary {
            if !names.contains(&r.name) {
                names.push(r.name.clone());
            }
        }
    }
    let mut rows: Vec<Vec<String>> = names
        .iter()
        .map(|n| {
            let mut row = vec![n.clone()];
            row.extend(docs.iter().map(|d| cell(d.summary.iter().find(|r| &r.name == n))));
            row
        })
        .collect();
    for n in names.iter().filter(|n| is_wellbeing_slope(n) && n.as_str() != INCOME) {
        let cds: Vec<Option<CompensatingDifferential>> = docs
            .iter()
            .map(|d| {
                let get = |k: &str| d.summary.iter().find(|r| r.name == k).map(|r| r.estimate);
                CompensatingDifferential::new(get(n)?, get(INCOME)?).ok()
            })
            .collect();
        let fmt = |f: fn(&CompensatingDifferential) -> f64| {
            cds.iter().map(|c| c.as_ref().map_or("-".into(), |c| format!("{:.2}%", f(c)))).collect::<Vec<_>>()
        };
        let mut exp_row = vec![format!("cd_exp:{n}")];
        exp_row.extend(fmt(|c| c.exp_pct));
        let mut lin_row = vec![format!("cd_linear:{n}")];
        lin_row.extend(fmt(|c| c.linear_pct));
        rows.push(exp_row);
        rows.push(lin_row);
    }

    let mut header = vec!["parameter".to_string()];
    header.extend(cols.iter().cloned());
    let widths: Vec<usize> = (0..header.len())
        .map(|c| rows.iter().map(|r| r[c].len()).chain([header[c].len()]).max().unwrap_or(0))
        .collect();
    let line = |r: &[String]| {
        let cells: Vec<String> = r.iter().zip(&widths).map(|(s, w)| format!("{s:<w$}")).collect();
        format!("| {} |\n", cells.join(" | "))
    };
    let mut out = format!("{}\n\n", cols.join(" vs "));
    out.push_str(&line(&header));
    let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
    out.push_str(&format!("|-{}-|\n", rule.join("-|-")));
    for r in &rows {
        out.push_str(&line(r));
    }
    out
}
