use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use super::{ExperimentReport, RankWindow};
use crate::error::Result;
use crate::regeval::{Mean, RegScores};

/// Paths written by [`write_report`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportFiles {
    pub json: PathBuf,
    pub summary_csv: PathBuf,
    pub windows_csv: PathBuf,
    /// Per-slice F1 table, augmentation only.
    pub slices_csv: Option<PathBuf>,
}

/// Writes `report.json`, `summary.csv`, `windows.csv` and, for the
/// augmentation protocol, `slices.csv` into `dir`. Each CSV starts with
/// `#` comment lines carrying the version, seed and configuration.
pub fn write_report(report: &ExperimentReport, dir: &Path) -> Result<ReportFiles> {
    fs::create_dir_all(dir)?;
    let json = dir.join("report.json");
    fs::write(&json, report.to_json()? + "\n")?;

    let summary_csv = dir.join("summary.csv");
    write_csv(&summary_csv, report, &["protocol", "system", "metric", "value", "n_defined", "n_dropped"], summary_rows(report))?;

    let windows_csv = dir.join("windows.csv");
    write_csv(
        &windows_csv,
        report,
        &["window", "train_start", "train_end", "test_start", "test_end", "system", "metric", "value"],
        window_rows(report),
    )?;

    let slices_csv = match &report.augmentation {
        Some(aug) => {
            let path = dir.join("slices.csv");
            let rows = aug.systems.iter().flat_map(|s| {
                s.per_slice.iter().enumerate().map(move |(t, m)| {
                    vec![s.system.clone(), (t + 1).to_string(), fmt(m.value), m.n_defined.to_string(), m.n_dropped.to_string()]
                })
            });
            write_csv(&path, report, &["system", "slice", "f1", "n_defined", "n_dropped"], rows)?;
            Some(path)
        }
        None => None,
    };
    Ok(ReportFiles {
        json,
        summary_csv,
        windows_csv,
        slices_csv,
    })
}

fn fmt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn write_csv<I>(path: &Path, report: &ExperimentReport, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut file = fs::File::create(path)?;
    writeln!(file, "# version: {}", report.version)?;
    writeln!(file, "# seed: {}", report.seed)?;
    writeln!(file, "# config: {}", serde_json::to_string(&report.config)?)?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn reg_metrics(s: &RegScores) -> [(&'static str, Option<f64>); 3] {
    [("precision", s.precision), ("recall", s.recall), ("f1", s.f1)]
}

fn rank_metrics(w: &RankWindow) -> [(&'static str, Option<f64>); 6] {
    [
        ("map", w.map),
        ("mrp", w.mrp),
        ("mrr", w.mrr),
        ("ndcg@10", w.ndcg_at_10),
        ("p@10", w.p_at_10),
        ("f1_top10", w.f1_top10),
    ]
}

fn summary_rows(report: &ExperimentReport) -> Vec<Vec<String>> {
    let protocol = report.protocol.label().to_string();
    let row = |system: &str, metric: &str, m: &Mean| {
        vec![
            protocol.clone(),
            system.to_string(),
            metric.to_string(),
            fmt(m.value),
            m.n_defined.to_string(),
            m.n_dropped.to_string(),
        ]
    };
    let mut rows = Vec::new();
    for c in &report.results {
        let name = c.name();
        if let Some(r) = &c.regression {
            let a = &r.aggregate;
            for (metric, m) in [("precision", &a.precision), ("recall", &a.recall), ("f1", &a.f1)] {
                rows.push(row(&name, metric, m));
            }
        }
        if let Some(r) = &c.ranking {
            let a = &r.aggregate;
            for (metric, m) in [
                ("map", &a.map),
                ("mrp", &a.mrp),
                ("mrr", &a.mrr),
                ("ndcg@10", &a.ndcg_at_10),
                ("p@10", &a.p_at_10),
                ("f1_top10", &a.f1_top10),
            ] {
                rows.push(row(&name, metric, m));
            }
        }
    }
    if let Some(aug) = &report.augmentation {
        for s in &aug.systems {
            let m = Mean::of(s.per_slice.iter().map(|m| m.value));
            rows.push(row(&s.system, "mean_f1", &m));
        }
    }
    rows
}

fn window_rows(report: &ExperimentReport) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    let mut push = |w: usize, system: &str, metric: String, v: Option<f64>| {
        let win = &report.windows[w];
        rows.push(vec![
            w.to_string(),
            win.train.start.to_string(),
            win.train.end.to_string(),
            win.test.start.to_string(),
            win.test.end.to_string(),
            system.to_string(),
            metric,
            fmt(v),
        ]);
    };
    for c in &report.results {
        let name = c.name();
        if let Some(r) = &c.regression {
            for (w, s) in r.per_window.iter().enumerate() {
                for (metric, v) in reg_metrics(s) {
                    push(w, &name, metric.into(), v);
                }
            }
        }
        if let Some(r) = &c.ranking {
            for rw in &r.per_window {
                for (metric, v) in rank_metrics(rw) {
                    push(rw.window, &name, metric.into(), v);
                }
            }
        }
    }
    if let Some(aug) = &report.augmentation {
        for s in &aug.systems {
            for (w, slices) in s.per_window.iter().enumerate() {
                for (t, v) in slices.iter().enumerate() {
                    push(w, &s.system, format!("f1_t{}", t + 1), *v);
                }
            }
        }
    }
    rows
}
