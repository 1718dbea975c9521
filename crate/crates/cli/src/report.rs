use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use anyhow::{Context, Result};
use patlcheck::patl::VerificationResult;
use serde::{Deserialize, Serialize};

/// Written by `check`: one model, one formula template, a threshold sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResultsFile {
    pub model: String,
    pub variant: Option<String>,
    pub k: Option<f64>,
    pub states: usize,
    pub model_gen_time_s: Option<f64>,
    pub formula: String,
    pub mode: String,
    pub results: Vec<ThresholdResult>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThresholdResult {
    /// Substituted threshold, or absent for a formula without a placeholder.
    pub p: Option<String>,
    pub result: VerificationResult,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Markdown,
    Csv,
}

struct Table {
    title: String,
    columns: Vec<Option<String>>,
    rows: Vec<Row>,
}

struct Row {
    k: Option<f64>,
    states: usize,
    gen_time: Option<f64>,
    cells: BTreeMap<Option<String>, (f64, String)>,
}

fn p_key(p: &Option<String>) -> (u8, f64, String) {
    match p {
        None => (0, 0.0, String::new()),
        Some(s) => (1, s.parse().unwrap_or(f64::NAN), s.clone()),
    }
}

pub fn load_dir(dir: &Path) -> Result<Vec<ResultsFile>> {
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    paths.sort();
    let mut out = Vec::new();
    for p in paths {
        let text =
            std::fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?;
        // other JSON (models, stats) is skipped
        if let Ok(r) = serde_json::from_str::<ResultsFile>(&text) {
            out.push(r);
        }
    }
    Ok(out)
}

fn tables(files: &[ResultsFile]) -> Vec<Table> {
    let mut groups: BTreeMap<(String, String, String), Vec<&ResultsFile>> = BTreeMap::new();
    for f in files {
        let variant = f.variant.clone().unwrap_or_else(|| "?".into());
        groups
            .entry((variant, f.formula.clone(), f.mode.clone()))
            .or_default()
            .push(f);
    }
    let mut out = Vec::new();
    for ((variant, formula, mode), fs) in groups {
        let mut columns: Vec<Option<String>> = fs
            .iter()
            .flat_map(|f| f.results.iter().map(|r| r.p.clone()))
            .collect();
        columns.sort_by(|a, b| {
            p_key(a)
                .partial_cmp(&p_key(b))
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        columns.dedup();
        let mut rows: Vec<Row> = fs
            .iter()
            .map(|f| Row {
                k: f.k,
                states: f.states,
                gen_time: f.model_gen_time_s,
                cells: f
                    .results
                    .iter()
                    .map(|r| {
                        (
                            r.p.clone(),
                            (r.result.wall_time_s, r.result.truth.as_str().to_string()),
                        )
                    })
                    .collect(),
            })
            .collect();
        rows.sort_by(|a, b| {
            b.k.unwrap_or(f64::NEG_INFINITY)
                .total_cmp(&a.k.unwrap_or(f64::NEG_INFINITY))
        });
        out.push(Table {
            title: format!("Model {variant}: {formula} ({mode})"),
            columns,
            rows,
        });
    }
    out
}

fn header(t: &Table) -> Vec<String> {
    let mut h = vec![
        "time precision".to_string(),
        "#states".into(),
        "model gen. time".into(),
    ];
    for c in &t.columns {
        let suffix = c.as_ref().map(|p| format!(" (p={p})")).unwrap_or_default();
        h.push(format!("v. time{suffix}"));
        h.push(format!("v. result{suffix}"));
    }
    h
}

fn cells(t: &Table, row: &Row) -> Vec<String> {
    let mut c = vec![
        row.k.map(|k| k.to_string()).unwrap_or_else(|| "-".into()),
        row.states.to_string(),
        row.gen_time
            .map(|s| format!("{s:.3}"))
            .unwrap_or_else(|| "-".into()),
    ];
    for col in &t.columns {
        match row.cells.get(col) {
            Some((time, verdict)) => {
                c.push(format!("{time:.3}"));
                c.push(verdict.clone());
            }
            None => c.extend(["-".to_string(), "-".to_string()]),
        }
    }
    c
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn render(files: &[ResultsFile], format: Format) -> String {
    let mut out = String::new();
    let tables = tables(files);
    match format {
        Format::Markdown => {
            for (i, t) in tables.iter().enumerate() {
                if i > 0 {
                    out.push('\n');
                }
                let h = header(t);
                let _ = writeln!(out, "### {}\n", t.title.replace('|', "\\|"));
                let _ = writeln!(out, "| {} |", h.join(" | "));
                let _ = writeln!(out, "|{}", "---|".repeat(h.len()));
                for r in &t.rows {
                    let _ = writeln!(out, "| {} |", cells(t, r).join(" | "));
                }
            }
        }
        Format::Csv => {
            for (i, t) in tables.iter().enumerate() {
                if i > 0 {
                    out.push('\n');
                }
                let mut h = vec!["property".to_string()];
                h.extend(header(t));
                let _ = writeln!(
                    out,
                    "{}",
                    h.iter().map(|s| csv_field(s)).collect::<Vec<_>>().join(",")
                );
                for r in &t.rows {
                    let mut c = vec![t.title.clone()];
                    c.extend(cells(t, r));
                    let _ = writeln!(
                        out,
                        "{}",
                        c.iter().map(|s| csv_field(s)).collect::<Vec<_>>().join(",")
                    );
                }
            }
        }
    }
    out
}
