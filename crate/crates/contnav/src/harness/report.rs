//! Aggregated experiment tables.
//!
//! Four views over a directory of matrix files: the strategy comparison
//! (mean and population standard deviation of the final-row averages
//! across curriculum seeds), the memory-size sweep, the two ablation
//! tables, and the stability/plasticity summary. Every view is emitted
//! both as aligned plain text and as a machine-readable TSV.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::harness::config::ExperimentConfig;
use crate::harness::io::MatrixFile;
use crate::metrics::Metric;
use crate::sim::Flavor;
use crate::strategies::StrategyKind;

#[derive(Debug, Clone)]
pub struct Report {
    pub text: String,
    /// `(file stem, tsv body)` pairs.
    pub tables: Vec<(String, String)>,
    pub warnings: Vec<String>,
}

fn mean_std(values: &[f64]) -> (f64, Option<f64>) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, None);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, Some(var.sqrt()))
}

fn fmt_mean_std(values: &[f64]) -> String {
    if values.is_empty() {
        return "—".into();
    }
    let (mean, std) = mean_std(values);
    match std {
        Some(s) => format!("{mean:.1} ± {s:.1}"),
        None => format!("{mean:.1} ± —"),
    }
}

/// Runs grouped by (label, capacity), seeds sorted.
type Grouped = BTreeMap<(String, usize), Vec<MatrixFile>>;

fn group(files: &[MatrixFile]) -> Result<Grouped> {
    let mut hash = None::<&str>;
    for f in files {
        match hash {
            None => hash = Some(&f.benchmark_hash),
            Some(h) if h != f.benchmark_hash => {
                return Err(Error::Config(format!(
                    "mixed benchmark hashes in one report: {} vs {}",
                    h, f.benchmark_hash
                )));
            }
            _ => {}
        }
    }
    let mut grouped: Grouped = BTreeMap::new();
    for f in files {
        grouped
            .entry((f.label.clone(), f.capacity))
            .or_default()
            .push(f.clone());
    }
    for runs in grouped.values_mut() {
        runs.sort_by_key(|f| f.matrix.curriculum_seed);
    }
    Ok(grouped)
}

/// Final-row averages for one metric across a group's seeds; cells that
/// cannot be computed are skipped with a warning.
fn averages(runs: &[MatrixFile], metric: Metric, warnings: &mut Vec<String>) -> Vec<f64> {
    let mut out = Vec::new();
    for run in runs {
        match run.matrix.average_metric(metric) {
            Ok(v) => out.push(v),
            Err(e) => warnings.push(format!(
                "{} seed {}: {}",
                run.label, run.matrix.curriculum_seed, e
            )),
        }
    }
    out
}

fn render_text_table(title: &str, header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (i, cell) in row.iter().enumerate() {
            widths[i] = widths[i].max(cell.chars().count());
        }
    }
    let fmt_row = |cells: &[String]| -> String {
        cells
            .iter()
            .enumerate()
            .map(|(i, c)| format!("{:<width$}", c, width = widths[i]))
            .collect::<Vec<_>>()
            .join("  ")
            .trim_end()
            .to_string()
    };
    let mut out = format!("== {title} ==\n");
    out.push_str(&fmt_row(&header.iter().map(|s| s.to_string()).collect::<Vec<_>>()));
    out.push('\n');
    out.push_str(&"-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1)));
    out.push('\n');
    for row in rows {
        out.push_str(&fmt_row(row));
        out.push('\n');
    }
    out.push('\n');
    out
}

fn render_tsv(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = header.join("\t");
    out.push('\n');
    for row in rows {
        out.push_str(&row.join("\t"));
        out.push('\n');
    }
    out
}

/// Build the full report from matrix files (typically one directory).
pub fn build_report(files: &[MatrixFile], cfg: &ExperimentConfig) -> Result<Report> {
    if files.is_empty() {
        return Err(Error::Config("no matrix files to report on".into()));
    }
    let grouped = group(files)?;
    let flavor = cfg.flavor()?;
    let default_cap = cfg.experiment.memory_capacity;
    let mut warnings = Vec::new();
    let mut text = String::new();
    let mut tables = Vec::new();

    let hash = &files[0].benchmark_hash;
    text.push_str(&format!(
        "experiment report  flavor={} domains={} benchmark_hash={}\n",
        cfg.flavor, cfg.generation.num_domains, hash
    ));
    text.push_str(
        "curricula vary domain order only; domain contents are fixed by the benchmark seed\n\n",
    );

    let metric_columns: &[(&str, Metric)] = match flavor {
        Flavor::InitialInstruction => &[
            ("AvgSPL", Metric::Spl),
            ("AvgSR", Metric::Sr),
            ("AvgNE", Metric::Ne),
        ],
        Flavor::Dialogue => &[("AvgGP", Metric::Gp)],
    };

    // (a) strategy comparison at the default capacity.
    {
        let mut header = vec!["Method"];
        header.extend(metric_columns.iter().map(|(name, _)| *name));
        header.push("seeds");
        let mut rows = Vec::new();
        let mut tsv_rows = Vec::new();
        for kind in StrategyKind::TABLE_ORDER {
            if kind == StrategyKind::PerpRRev {
                continue; // ablation table material
            }
            let label = kind.label().to_string();
            let Some(runs) = grouped.get(&(label.clone(), default_cap)) else {
                continue;
            };
            let mut row = vec![label.clone()];
            let mut tsv_row = vec![label.clone()];
            for &(_, metric) in metric_columns {
                let vals = averages(runs, metric, &mut warnings);
                row.push(fmt_mean_std(&vals));
                let (mean, std) = mean_std(&vals);
                tsv_row.push(format!("{mean}"));
                tsv_row.push(std.map_or("".into(), |s| format!("{s}")));
            }
            row.push(runs.len().to_string());
            tsv_row.push(runs.len().to_string());
            rows.push(row);
            tsv_rows.push(tsv_row);
        }
        if rows.is_empty() {
            warnings.push("comparison table: no runs at the default capacity".into());
        } else {
            text.push_str(&render_text_table(
                "strategy comparison",
                &header,
                &rows,
            ));
            let mut tsv_header = vec!["method".to_string()];
            for (name, _) in metric_columns {
                tsv_header.push(format!("{}_mean", name.to_lowercase()));
                tsv_header.push(format!("{}_std", name.to_lowercase()));
            }
            tsv_header.push("seeds".into());
            let tsv_header_refs: Vec<&str> = tsv_header.iter().map(|s| s.as_str()).collect();
            tables.push((
                "report_comparison".to_string(),
                render_tsv(&tsv_header_refs, &tsv_rows),
            ));
        }
    }

    // (b) memory-size sweep for the rehearsal methods.
    {
        let mut header = vec!["Method", "Memory"];
        header.extend(metric_columns.iter().map(|(name, _)| *name));
        let mut rows = Vec::new();
        let mut tsv_rows = Vec::new();
        for kind in [StrategyKind::PerpR, StrategyKind::Esr] {
            let label = kind.label().to_string();
            let caps: Vec<usize> = grouped
                .keys()
                .filter(|(l, _)| *l == label)
                .map(|&(_, c)| c)
                .collect();
            for cap in caps {
                let runs = &grouped[&(label.clone(), cap)];
                let mut row = vec![label.clone(), cap.to_string()];
                let mut tsv_row = vec![label.clone(), cap.to_string()];
                for &(_, metric) in metric_columns {
                    let vals = averages(runs, metric, &mut warnings);
                    row.push(fmt_mean_std(&vals));
                    let (mean, _) = mean_std(&vals);
                    tsv_row.push(format!("{mean}"));
                }
                rows.push(row);
                tsv_rows.push(tsv_row);
            }
        }
        if !rows.is_empty() {
            text.push_str(&render_text_table("memory-size sweep", &header, &rows));
            let mut tsv_header = vec!["method".to_string(), "capacity".to_string()];
            for (name, _) in metric_columns {
                tsv_header.push(name.to_lowercase());
            }
            let tsv_header_refs: Vec<&str> = tsv_header.iter().map(|s| s.as_str()).collect();
            tables.push(("report_sweep".to_string(), render_tsv(&tsv_header_refs, &tsv_rows)));
        }
    }

    // (c) ablations: reversed perplexity update; loss-term removal.
    {
        let mut header = vec!["Ablation"];
        header.extend(metric_columns.iter().map(|(name, _)| *name));
        let mut rows = Vec::new();
        let mut tsv_rows = Vec::new();
        for label in ["PerpR", "PerpR-Rev.", "ESR", "ESR-noLM", "ESR-noLESR"] {
            let Some(runs) = grouped.get(&(label.to_string(), default_cap)) else {
                continue;
            };
            let mut row = vec![label.to_string()];
            let mut tsv_row = vec![label.to_string()];
            for &(_, metric) in metric_columns {
                let vals = averages(runs, metric, &mut warnings);
                row.push(fmt_mean_std(&vals));
                let (mean, _) = mean_std(&vals);
                tsv_row.push(format!("{mean}"));
            }
            rows.push(row);
            tsv_rows.push(tsv_row);
        }
        if !rows.is_empty() {
            text.push_str(&render_text_table("ablations", &header, &rows));
            let mut tsv_header = vec!["ablation".to_string()];
            for (name, _) in metric_columns {
                tsv_header.push(name.to_lowercase());
            }
            let tsv_header_refs: Vec<&str> = tsv_header.iter().map(|s| s.as_str()).collect();
            tables.push((
                "report_ablation".to_string(),
                render_tsv(&tsv_header_refs, &tsv_rows),
            ));
        }
    }

    // (d) stability / plasticity at the end of the curriculum.
    {
        let sp_metric = match flavor {
            Flavor::InitialInstruction => Metric::Sr,
            Flavor::Dialogue => Metric::Gp,
        };
        let header = vec!["Method", "Stability", "Plasticity", "Harmonic"];
        let mut rows = Vec::new();
        let mut tsv_rows = Vec::new();
        for kind in StrategyKind::TABLE_ORDER {
            let label = kind.label().to_string();
            let Some(runs) = grouped.get(&(label.clone(), default_cap)) else {
                continue;
            };
            let k = cfg.generation.num_domains;
            let mut s_vals = Vec::new();
            let mut p_vals = Vec::new();
            let mut h_vals = Vec::new();
            for run in runs {
                match run.matrix.stability_plasticity(k, sp_metric) {
                    Ok((s, p, h)) => {
                        s_vals.push(s);
                        p_vals.push(p);
                        h_vals.push(h);
                    }
                    Err(_) => {
                        // Joint has no diagonal; leave the row blank.
                    }
                }
            }
            let cells = if s_vals.is_empty() {
                ["—".to_string(), "—".to_string(), "—".to_string()]
            } else {
                [
                    fmt_mean_std(&s_vals),
                    fmt_mean_std(&p_vals),
                    fmt_mean_std(&h_vals),
                ]
            };
            rows.push(vec![
                label.clone(),
                cells[0].clone(),
                cells[1].clone(),
                cells[2].clone(),
            ]);
            let tsv_cell = |vals: &[f64]| {
                if vals.is_empty() {
                    "".to_string()
                } else {
                    format!("{}", mean_std(vals).0)
                }
            };
            tsv_rows.push(vec![
                label,
                tsv_cell(&s_vals),
                tsv_cell(&p_vals),
                tsv_cell(&h_vals),
            ]);
        }
        if !rows.is_empty() {
            text.push_str(&render_text_table(
                "stability / plasticity",
                &header,
                &rows,
            ));
            tables.push((
                "report_stability".to_string(),
                render_tsv(&["method", "stability", "plasticity", "harmonic"], &tsv_rows),
            ));
        }
    }

    if !warnings.is_empty() {
        text.push_str("warnings:\n");
        for w in &warnings {
            text.push_str(&format!("  - {w}\n"));
        }
    }

    Ok(Report {
        text,
        tables,
        warnings,
    })
}

/// Write `report.txt` and the per-table TSV files.
pub fn write_report(dir: &Path, report: &Report) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
    let txt = dir.join("report.txt");
    std::fs::write(&txt, &report.text).map_err(|e| Error::io(txt.display().to_string(), e))?;
    for (stem, body) in &report.tables {
        let path = dir.join(format!("{stem}.tsv"));
        std::fs::write(&path, body).map_err(|e| Error::io(path.display().to_string(), e))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{DomainMeans, ResultMatrix};

    fn fake_run(label: &str, seed: u64, cap: usize, sr: f64) -> MatrixFile {
        let mut matrix = ResultMatrix::new(label.to_lowercase(), seed, "I", vec![0, 1]);
        for s in 1..=2 {
            for i in 1..=s {
                matrix.set(
                    s,
                    i,
                    DomainMeans {
                        sr,
                        spl: sr - 2.0,
                        ne: 8.0,
                        gp: 4.0,
                    },
                );
            }
        }
        MatrixFile {
            benchmark_hash: "h".into(),
            label: label.into(),
            capacity: cap,
            matrix,
        }
    }

    fn base_cfg() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::default();
        cfg.generation.num_domains = 2;
        cfg
    }

    #[test]
    fn mean_std_formatting_matches_convention() {
        assert_eq!(fmt_mean_std(&[30.0, 32.0, 34.0]), "32.0 ± 1.6");
        assert_eq!(fmt_mean_std(&[30.0]), "30.0 ± —");
        assert_eq!(fmt_mean_std(&[]), "—");
    }

    #[test]
    fn mixed_hashes_are_rejected() {
        let mut a = fake_run("Vanilla", 1, 20, 30.0);
        let b = fake_run("Vanilla", 2, 20, 30.0);
        a.benchmark_hash = "other".into();
        let err = build_report(&[a, b], &base_cfg()).unwrap_err();
        assert!(err.to_string().contains("mixed benchmark hashes"));
    }

    #[test]
    fn comparison_rows_follow_table_order() {
        let files = vec![
            fake_run("ESR", 1, 20, 40.0),
            fake_run("Vanilla", 1, 20, 20.0),
            fake_run("Joint", 1, 20, 50.0),
        ];
        let report = build_report(&files, &base_cfg()).unwrap();
        let vanilla = report.text.find("Vanilla").unwrap();
        let joint = report.text.find("Joint").unwrap();
        let esr = report.text.find("ESR").unwrap();
        assert!(vanilla < joint && joint < esr);
    }

    #[test]
    fn partial_reports_carry_warnings() {
        // A matrix without its final row still reports, with a warning.
        let mut broken = fake_run("Vanilla", 1, 20, 30.0);
        broken.matrix.cells.retain(|c| c.after != 2);
        let report = build_report(&[broken, fake_run("ESR", 1, 20, 40.0)], &base_cfg()).unwrap();
        assert!(!report.warnings.is_empty());
        assert!(report.text.contains("warnings:"));
    }
}
