//! KPI comparison of result files against a baseline.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Result};
use serde::Serialize;
use tdt_core::objective::{bps_diff, bps_raw};

use crate::result::ResultDoc;

#[derive(Serialize, Debug, Clone, PartialEq)]
pub struct Column {
    pub label: String,
    pub file: String,
    pub tdt_placed: usize,
    pub kpi: [f64; 4],
    /// Differences to the baseline rounded to the nearest 10 bps.
    pub bps: [i64; 4],
    pub bps_raw: [i64; 4],
}

#[derive(Serialize, Debug, Clone, PartialEq)]
pub struct Report {
    pub baseline: Column,
    pub results: Vec<Column>,
}

fn column(path: &Path, doc: &ResultDoc, base: Option<&[f64; 4]>) -> Result<Column> {
    let Some(k) = &doc.kpis else {
        bail!("{} has no KPIs (status {})", path.display(), doc.status);
    };
    let b = base.unwrap_or(&k.kpi);
    Ok(Column {
        label: doc.solver.clone(),
        file: path.display().to_string(),
        tdt_placed: k.tdt_placed,
        kpi: k.kpi,
        bps: std::array::from_fn(|t| bps_diff(k.kpi[t], b[t])),
        bps_raw: std::array::from_fn(|t| bps_raw(k.kpi[t], b[t])),
    })
}

/// Loads every file before comparing, so all unreadable paths are reported together.
pub fn build(baseline: &Path, results: &[PathBuf]) -> Result<Report> {
    let mut loaded = Vec::new();
    let mut errors = Vec::new();
    for p in std::iter::once(&baseline.to_path_buf()).chain(results) {
        match ResultDoc::load(p) {
            Ok(d) => loaded.push((p.clone(), d)),
            Err(e) => errors.push(format!("{e:#}")),
        }
    }
    if !errors.is_empty() {
        bail!("{}", errors.join("\n"));
    }
    let (bp, bd) = &loaded[0];
    let baseline = column(bp, bd, None)?;
    let results = loaded[1..]
        .iter()
        .map(|(p, d)| column(p, d, Some(&baseline.kpi)))
        .collect::<Result<Vec<_>>>()?;
    Ok(Report { baseline, results })
}

impl Report {
    pub fn render_table(&self) -> String {
        let cols: Vec<&Column> = std::iter::once(&self.baseline).chain(&self.results).collect();
        let mut rows: Vec<(String, Vec<String>)> = Vec::new();
        rows.push(("".into(), cols.iter().map(|c| c.label.clone()).collect()));
        rows.push(("#TDT placed".into(), cols.iter().map(|c| c.tdt_placed.to_string()).collect()));
        for t in 0..4 {
            rows.push((format!("{t}D KPI"), cols.iter().map(|c| format!("{:.3}", c.kpi[t])).collect()));
        }
        for t in 0..4 {
            let cells = cols
                .iter()
                .enumerate()
                .map(|(i, c)| if i == 0 { "-".into() } else { format!("{:+}", c.bps[t]) })
                .collect();
            rows.push((format!("{t}D KPI \u{b1} (bps)"), cells));
        }
        let head = rows.iter().map(|r| r.0.chars().count()).max().unwrap_or(0);
        let widths: Vec<usize> =
            (0..cols.len()).map(|j| rows.iter().map(|r| r.1[j].chars().count()).max().unwrap_or(0)).collect();
        let mut out = String::new();
        for (name, cells) in &rows {
            write!(out, "{name:<head$}").unwrap();
            for (c, w) in cells.iter().zip(&widths) {
                write!(out, "  {c:>w$}").unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn render_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}
