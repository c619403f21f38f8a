//! Long-format plot data from a directory of metrics CSVs.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::metrics::{aggregate_by_step, fmt_value, MetricsSeries};

/// Figure shapes the exporter understands.
pub const FIGURE_IDS: &[&str] = &[
    "diversity-vs-pd",
    "selection-convergence",
    "utility-loss",
    "noise-vs-pd",
];

fn echo_value<'a>(series: &'a MetricsSeries, key: &str) -> Option<&'a str> {
    series
        .config_echo
        .iter()
        .find(|(k, _)| k == key)
        .map(|(_, v)| v.as_str())
}

/// Read every metrics CSV in `dir` and group repetitions of the same sweep
/// cell (via their `sweep_cell` echo, falling back to the file stem).
fn read_cells(dir: &Path) -> Result<Vec<(String, MetricsSeries)>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            let name = p.file_name().and_then(|n| n.to_str()).unwrap_or("");
            name.ends_with(".csv") && name != "aggregate.csv" && !name.starts_with("plot_")
        })
        .collect();
    files.sort();
    let mut groups: Vec<(String, Vec<MetricsSeries>)> = Vec::new();
    for path in files {
        let stem = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("cell")
            .trim_start_matches("cell_")
            .to_string();
        let text = std::fs::read_to_string(&path)?;
        let series = MetricsSeries::parse_csv(&text, &path.to_string_lossy())?;
        let id = echo_value(&series, "sweep_cell")
            .unwrap_or(&stem)
            .to_string();
        match groups.iter_mut().find(|(name, _)| *name == id) {
            Some((_, members)) => members.push(series),
            None => groups.push((id, vec![series])),
        }
    }
    if groups.is_empty() {
        return Err(Error::EmptyMetrics(dir.to_string_lossy().into_owned()));
    }
    Ok(groups
        .into_iter()
        .map(|(id, members)| (id, MetricsSeries::merge(members).expect("non-empty group")))
        .collect())
}

type Row = (String, String, f64, f64);

fn step_rows(
    cells: &[(String, MetricsSeries)],
    metric: &str,
    label: impl Fn(&str, &MetricsSeries) -> String,
) -> Vec<Row> {
    let mut rows = Vec::new();
    for (stem, series) in cells {
        let name = label(stem, series);
        for (step, metrics) in aggregate_by_step(series) {
            if let Some(m) = metrics.get(metric) {
                rows.push((step.to_string(), name.clone(), m.mean, m.stderr));
            }
        }
    }
    rows
}

/// Deniability metric columns present in a series.
fn pd_metrics(series: &MetricsSeries) -> Vec<String> {
    let mut names = vec![
        "deniability_direct_global".to_string(),
        "deniability_direct_proxy".to_string(),
    ];
    for alpha in &series.alpha_sweep {
        names.push(format!("deniability_published_{alpha}"));
    }
    names
}

/// Write `plot_<figure>.csv` (columns `x,series,mean,stderr`) from the cell
/// metrics in `dir`.
pub fn emit_plotdata(dir: &Path, figure: &str, out: Option<&Path>) -> Result<PathBuf> {
    if !FIGURE_IDS.contains(&figure) {
        return Err(Error::UnknownFigure {
            id: figure.to_string(),
            valid: FIGURE_IDS.join(", "),
        });
    }
    let cells = read_cells(dir)?;
    let rows: Vec<Row> = match figure {
        "selection-convergence" => {
            step_rows(&cells, "selection_accuracy", |stem, _| stem.to_string())
        }
        "utility-loss" => step_rows(&cells, "utility_loss", |stem, _| stem.to_string()),
        "noise-vs-pd" => step_rows(&cells, "deniability_direct_proxy", |stem, series| {
            echo_value(series, "noise_ratio_pct")
                .map(|v| format!("noise-{v}pct"))
                .unwrap_or_else(|| stem.to_string())
        }),
        "diversity-vs-pd" => {
            // Final-step deniability against user diversity, one series per
            // estimator.
            let mut rows = Vec::new();
            for (stem, series) in &cells {
                let x = echo_value(series, "user_diversity_pct")
                    .unwrap_or(stem)
                    .to_string();
                let aggregated = aggregate_by_step(series);
                let Some((_, metrics)) = aggregated.into_iter().next_back() else {
                    continue;
                };
                for name in pd_metrics(series) {
                    if let Some(m) = metrics.get(&name) {
                        rows.push((x.clone(), name, m.mean, m.stderr));
                    }
                }
            }
            rows
        }
        _ => unreachable!("figure id validated above"),
    };

    let mut csv = String::from("x,series,mean,stderr\n");
    for (x, series, mean, stderr) in rows {
        csv.push_str(&format!(
            "{x},{series},{},{}\n",
            fmt_value(mean),
            fmt_value(stderr)
        ));
    }
    let out_dir = out.unwrap_or(dir);
    std::fs::create_dir_all(out_dir)?;
    let path = out_dir.join(format!("plot_{figure}.csv"));
    std::fs::write(&path, csv)?;
    Ok(path)
}
