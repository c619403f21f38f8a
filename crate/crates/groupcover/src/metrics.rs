//! Per-step metric records and their CSV serialization.
//!
//! One record per (run, step). Missing values are written as explicit `NA`.
//! Numbers are formatted to 12 significant digits with LF line endings so a
//! run re-executed with the same config and seed produces byte-identical
//! output.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Format a value to 12 significant digits.
pub fn fmt_value(x: f64) -> String {
    format!("{x:.11e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    match x {
        Some(v) => fmt_value(v),
        None => "NA".to_string(),
    }
}

/// Metrics for one simulation step of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRecord {
    pub run_id: String,
    pub seed: u64,
    pub step: usize,
    /// Share of sensitive users whose chosen proxy carries their topic,
    /// among those that selected a proxy this step.
    pub selection_accuracy: Option<f64>,
    /// Mean total-variation distance between user and chosen-proxy topic
    /// distributions.
    pub utility_loss: Option<f64>,
    pub deniability_direct_global: Option<f64>,
    pub deniability_direct_proxy: Option<f64>,
    /// Published-estimator deniability, one value per sweep alpha.
    pub deniability_published: Vec<Option<f64>>,
    pub abstain_count: usize,
    pub noise_queries: usize,
    pub drop_tally: u64,
}

/// A full metric series for one or more runs of a single configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsSeries {
    /// Config echo written into the CSV header block, in order.
    pub config_echo: Vec<(String, String)>,
    pub alpha_sweep: Vec<f64>,
    pub records: Vec<MetricsRecord>,
}

impl MetricsSeries {
    pub fn column_names(&self) -> Vec<String> {
        let mut names = vec![
            "run_id".to_string(),
            "seed".to_string(),
            "step".to_string(),
            "selection_accuracy".to_string(),
            "utility_loss".to_string(),
            "deniability_direct_global".to_string(),
            "deniability_direct_proxy".to_string(),
        ];
        for alpha in &self.alpha_sweep {
            names.push(format!("deniability_published_{alpha}"));
        }
        names.extend(["abstain_count", "noise_queries", "drop_tally"].map(str::to_string));
        names
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (key, value) in &self.config_echo {
            out.push_str(&format!("# {key} = {value}\n"));
        }
        out.push_str(&self.column_names().join(","));
        out.push('\n');
        for r in &self.records {
            let mut fields = vec![
                r.run_id.clone(),
                r.seed.to_string(),
                r.step.to_string(),
                fmt_opt(r.selection_accuracy),
                fmt_opt(r.utility_loss),
                fmt_opt(r.deniability_direct_global),
                fmt_opt(r.deniability_direct_proxy),
            ];
            for v in &r.deniability_published {
                fields.push(fmt_opt(*v));
            }
            fields.push(r.abstain_count.to_string());
            fields.push(r.noise_queries.to_string());
            fields.push(r.drop_tally.to_string());
            out.push_str(&fields.join(","));
            out.push('\n');
        }
        out
    }

    /// Parse a CSV produced by [`MetricsSeries::to_csv`].
    pub fn parse_csv(text: &str, path_for_errors: &str) -> Result<MetricsSeries> {
        let fail = |message: String| Error::MetricsFormat {
            path: path_for_errors.to_string(),
            message,
        };
        let mut config_echo = Vec::new();
        let mut lines = text.lines().peekable();
        while let Some(line) = lines.peek() {
            if let Some(rest) = line.strip_prefix("# ") {
                let (key, value) = rest
                    .split_once(" = ")
                    .ok_or_else(|| fail(format!("bad config echo line `{line}`")))?;
                config_echo.push((key.to_string(), value.to_string()));
                lines.next();
            } else {
                break;
            }
        }
        let header = lines
            .next()
            .ok_or_else(|| fail("missing column header".into()))?;
        let columns: Vec<&str> = header.split(',').collect();
        let alpha_sweep: Vec<f64> = columns
            .iter()
            .filter_map(|c| c.strip_prefix("deniability_published_"))
            .map(|a| {
                a.parse::<f64>()
                    .map_err(|_| fail(format!("bad alpha column `{a}`")))
            })
            .collect::<Result<_>>()?;
        let expected_cols = 10 + alpha_sweep.len();
        if columns.len() != expected_cols {
            return Err(fail(format!(
                "expected {expected_cols} columns, found {}",
                columns.len()
            )));
        }
        let parse_opt = |field: &str| -> Result<Option<f64>> {
            if field == "NA" {
                Ok(None)
            } else {
                field
                    .parse::<f64>()
                    .map(Some)
                    .map_err(|_| fail(format!("bad numeric field `{field}`")))
            }
        };
        let mut records = Vec::new();
        for line in lines {
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != expected_cols {
                return Err(fail(format!(
                    "row has {} fields, expected {expected_cols}",
                    fields.len()
                )));
            }
            let mut published = Vec::with_capacity(alpha_sweep.len());
            for k in 0..alpha_sweep.len() {
                published.push(parse_opt(fields[7 + k])?);
            }
            let tail = 7 + alpha_sweep.len();
            records.push(MetricsRecord {
                run_id: fields[0].to_string(),
                seed: fields[1]
                    .parse()
                    .map_err(|_| fail(format!("bad seed `{}`", fields[1])))?,
                step: fields[2]
                    .parse()
                    .map_err(|_| fail(format!("bad step `{}`", fields[2])))?,
                selection_accuracy: parse_opt(fields[3])?,
                utility_loss: parse_opt(fields[4])?,
                deniability_direct_global: parse_opt(fields[5])?,
                deniability_direct_proxy: parse_opt(fields[6])?,
                deniability_published: published,
                abstain_count: fields[tail]
                    .parse()
                    .map_err(|_| fail(format!("bad abstain count `{}`", fields[tail])))?,
                noise_queries: fields[tail + 1]
                    .parse()
                    .map_err(|_| fail(format!("bad noise count `{}`", fields[tail + 1])))?,
                drop_tally: fields[tail + 2]
                    .parse()
                    .map_err(|_| fail(format!("bad drop tally `{}`", fields[tail + 2])))?,
            });
        }
        Ok(MetricsSeries {
            config_echo,
            alpha_sweep,
            records,
        })
    }

    /// Merge several runs of the same configuration into one series.
    pub fn merge(mut series: Vec<MetricsSeries>) -> Option<MetricsSeries> {
        let mut iter = series.drain(..);
        let mut base = iter.next()?;
        for s in iter {
            base.records.extend(s.records);
        }
        Some(base)
    }
}

/// Mean and standard error of one metric at one step across runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanStderr {
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
}

fn mean_stderr(values: &[f64]) -> Option<MeanStderr> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let stderr = if values.len() < 2 {
        0.0
    } else {
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    };
    Some(MeanStderr {
        mean,
        stderr,
        n: values.len(),
    })
}

/// Per-step aggregation of the numeric metric columns across runs, skipping
/// `NA` entries.
pub fn aggregate_by_step(series: &MetricsSeries) -> BTreeMap<usize, BTreeMap<String, MeanStderr>> {
    let mut collected: BTreeMap<usize, BTreeMap<String, Vec<f64>>> = BTreeMap::new();
    for r in &series.records {
        let by_metric = collected.entry(r.step).or_default();
        let mut push = |name: &str, value: Option<f64>| {
            if let Some(v) = value {
                by_metric.entry(name.to_string()).or_default().push(v);
            }
        };
        push("selection_accuracy", r.selection_accuracy);
        push("utility_loss", r.utility_loss);
        push("deniability_direct_global", r.deniability_direct_global);
        push("deniability_direct_proxy", r.deniability_direct_proxy);
        for (alpha, value) in series.alpha_sweep.iter().zip(&r.deniability_published) {
            push(&format!("deniability_published_{alpha}"), *value);
        }
        push("abstain_count", Some(r.abstain_count as f64));
        push("noise_queries", Some(r.noise_queries as f64));
    }
    collected
        .into_iter()
        .map(|(step, metrics)| {
            let aggregated = metrics
                .into_iter()
                .filter_map(|(name, values)| mean_stderr(&values).map(|m| (name, m)))
                .collect();
            (step, aggregated)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(step: usize, value: f64) -> MetricsRecord {
        MetricsRecord {
            run_id: "run-1".into(),
            seed: 1,
            step,
            selection_accuracy: Some(value),
            utility_loss: None,
            deniability_direct_global: Some(0.5),
            deniability_direct_proxy: None,
            deniability_published: vec![Some(0.1), None],
            abstain_count: 0,
            noise_queries: 2,
            drop_tally: 0,
        }
    }

    fn series() -> MetricsSeries {
        MetricsSeries {
            config_echo: vec![("pool_size".into(), "5".into())],
            alpha_sweep: vec![0.25, 0.75],
            records: vec![record(0, 0.5), record(1, 0.75)],
        }
    }

    #[test]
    fn csv_round_trips() {
        let s = series();
        let csv = s.to_csv();
        let parsed = MetricsSeries::parse_csv(&csv, "test").unwrap();
        assert_eq!(parsed, s);
    }

    #[test]
    fn csv_is_deterministic() {
        assert_eq!(series().to_csv(), series().to_csv());
    }

    #[test]
    fn values_use_twelve_significant_digits() {
        assert_eq!(fmt_value(1.0 / 3.0), "3.33333333333e-1");
        assert_eq!(fmt_value(0.25), "2.50000000000e-1");
    }

    #[test]
    fn aggregation_skips_missing_values() {
        let mut s = series();
        s.records.push(MetricsRecord {
            run_id: "run-2".into(),
            seed: 2,
            ..record(1, 0.25)
        });
        let agg = aggregate_by_step(&s);
        let step1 = &agg[&1];
        let acc = step1["selection_accuracy"];
        assert_eq!(acc.n, 2);
        assert!((acc.mean - 0.5).abs() < 1e-12);
        assert!(!step1.contains_key("utility_loss"));
    }
}
