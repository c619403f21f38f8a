//! Scenario runner, sweep engine and plot-data export.
//!
//! `run` executes one configuration (with optional repetitions over
//! consecutive seeds) and writes a single metrics CSV. `sweep` expands axis
//! lines into a cartesian grid of cells, runs every cell, writes one CSV per
//! cell plus an aggregate table of means and standard errors. `plotdata`
//! reduces a metrics directory into long-format series ready for plotting.

mod config;
mod plotdata;

pub use config::{apply_key, parse_config, Axis, ParsedConfig, RunSettings, AXIS_KEYS};
pub use plotdata::{emit_plotdata, FIGURE_IDS};

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::corpus::{load_corpus, Corpus};
use crate::error::{Error, Result};
use crate::metrics::{aggregate_by_step, fmt_value, MetricsSeries};
use crate::simulation::{run_scenario, run_scenario_with_corpus, ScenarioConfig};

/// Environment variable overriding the scenario seed.
pub const ENV_SEED: &str = "GROUPCOVER_SEED";
/// Environment variable overriding the output directory.
pub const ENV_OUT: &str = "GROUPCOVER_OUT";

/// Seed precedence: CLI flag, then environment, then config file.
pub fn effective_seed(cli: Option<u64>) -> Result<Option<u64>> {
    if cli.is_some() {
        return Ok(cli);
    }
    match std::env::var(ENV_SEED) {
        Ok(raw) => raw
            .parse::<u64>()
            .map(Some)
            .map_err(|_| Error::InvalidConfig(format!("{ENV_SEED}=`{raw}` is not a seed"))),
        Err(_) => Ok(None),
    }
}

/// Output directory precedence: CLI flag, then environment, then `./out`.
pub fn effective_out(cli: Option<PathBuf>) -> PathBuf {
    cli.or_else(|| std::env::var(ENV_OUT).ok().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

/// Result of a `run` invocation.
#[derive(Debug)]
pub struct RunOutput {
    pub csv_path: PathBuf,
    pub summary: String,
}

fn load_settings_corpus(settings: &RunSettings) -> Result<Option<Corpus>> {
    settings.corpus_file.as_deref().map(load_corpus).transpose()
}

/// Execute one scenario once per repetition, seeds consecutive from the
/// base seed.
fn run_repetitions(
    scenario: &ScenarioConfig,
    settings: &RunSettings,
    corpus: Option<&Corpus>,
) -> Result<Vec<MetricsSeries>> {
    let mut all = Vec::with_capacity(settings.repetitions);
    for rep in 0..settings.repetitions {
        let mut cfg = scenario.clone();
        cfg.seed = scenario.seed.wrapping_add(rep as u64);
        let series = match corpus {
            Some(c) => run_scenario_with_corpus(c.clone(), &cfg)?,
            None => run_scenario(&cfg)?,
        };
        all.push(series);
    }
    Ok(all)
}

/// Execute one scenario with repetitions and merge the records.
fn run_with_settings(
    scenario: &ScenarioConfig,
    settings: &RunSettings,
    corpus: Option<&Corpus>,
) -> Result<MetricsSeries> {
    let all = run_repetitions(scenario, settings, corpus)?;
    let mut merged = MetricsSeries::merge(all).expect("repetitions >= 1");
    merged.config_echo = scenario.echo();
    merged
        .config_echo
        .push(("repetitions".into(), settings.repetitions.to_string()));
    Ok(merged)
}

/// Final-step summary: mean and standard error of every metric across runs.
fn final_step_summary(series: &MetricsSeries) -> String {
    let aggregated = aggregate_by_step(series);
    let Some((step, metrics)) = aggregated.into_iter().next_back() else {
        return "no records".to_string();
    };
    let mut out = format!("final step {step}:\n");
    for (name, m) in metrics {
        out.push_str(&format!(
            "  {name} = {} ± {} (n={})\n",
            fmt_value(m.mean),
            fmt_value(m.stderr),
            m.n
        ));
    }
    out
}

/// Run a single configuration file and write `metrics.csv` into `out`.
pub fn run(config_path: &Path, seed: Option<u64>, out: &Path) -> Result<RunOutput> {
    let parsed = parse_config(&std::fs::read_to_string(config_path)?)?;
    if !parsed.axes.is_empty() {
        return Err(Error::InvalidConfig(
            "config declares sweep axes; use the `sweep` command".into(),
        ));
    }
    let mut scenario = parsed.scenario;
    if let Some(seed) = seed {
        scenario.seed = seed;
    }
    scenario.validate()?;
    let corpus = load_settings_corpus(&parsed.settings)?;
    let series = run_with_settings(&scenario, &parsed.settings, corpus.as_ref())?;
    std::fs::create_dir_all(out)?;
    let csv_path = out.join("metrics.csv");
    std::fs::write(&csv_path, series.to_csv())?;
    Ok(RunOutput {
        csv_path,
        summary: final_step_summary(&series),
    })
}

/// One sweep cell: the axis assignments that define it.
#[derive(Debug, Clone)]
pub struct SweepCell {
    pub assignments: Vec<(String, String)>,
}

impl SweepCell {
    pub fn id(&self) -> String {
        if self.assignments.is_empty() {
            return "base".to_string();
        }
        self.assignments
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join("__")
    }

    pub fn file_name(&self, repetition: usize) -> String {
        format!("cell_{}__run{repetition}.csv", self.id())
    }
}

fn expand_cells(axes: &[Axis]) -> Vec<SweepCell> {
    let mut cells = vec![SweepCell {
        assignments: Vec::new(),
    }];
    for axis in axes {
        let mut next = Vec::with_capacity(cells.len() * axis.values.len());
        for cell in &cells {
            for value in &axis.values {
                let mut assignments = cell.assignments.clone();
                assignments.push((axis.key.clone(), value.clone()));
                next.push(SweepCell { assignments });
            }
        }
        cells = next;
    }
    cells
}

/// Result of a `sweep` invocation.
#[derive(Debug)]
pub struct SweepOutput {
    pub out_dir: PathBuf,
    pub cell_files: Vec<PathBuf>,
    pub aggregate_path: PathBuf,
    /// `(cell id, error)` for cells that failed; the sweep continues past
    /// them.
    pub failures: Vec<(String, String)>,
    pub expansion: usize,
    pub summary: String,
}

/// Run a sweep spec: one metrics CSV per cell plus `aggregate.csv`.
pub fn sweep(
    spec_path: &Path,
    seed: Option<u64>,
    out: &Path,
    workers: usize,
) -> Result<SweepOutput> {
    let parsed = parse_config(&std::fs::read_to_string(spec_path)?)?;
    let mut base = parsed.scenario;
    if let Some(seed) = seed {
        base.seed = seed;
    }
    let corpus = load_settings_corpus(&parsed.settings)?;
    let cells = expand_cells(&parsed.axes);
    let expansion = cells.len();
    println!(
        "sweep: {} cells x {} repetitions = {} runs",
        expansion,
        parsed.settings.repetitions,
        expansion * parsed.settings.repetitions
    );
    std::fs::create_dir_all(out)?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidConfig(format!("cannot build worker pool: {e}")))?;
    // One metrics CSV per (cell, repetition); the aggregate is recomputed
    // from the serialized values so it can be rebuilt exactly from disk.
    type CellResult = (SweepCell, Result<(Vec<PathBuf>, MetricsSeries)>);
    let results: Vec<CellResult> = pool.install(|| {
        cells
            .into_par_iter()
            .map(|cell| {
                let result = (|| -> Result<(Vec<PathBuf>, MetricsSeries)> {
                    let mut scenario = base.clone();
                    let mut settings = parsed.settings.clone();
                    for (key, value) in &cell.assignments {
                        apply_key(&mut scenario, &mut settings, key, value, 0)?;
                    }
                    scenario.validate()?;
                    let runs = run_repetitions(&scenario, &settings, corpus.as_ref())?;
                    let mut files = Vec::with_capacity(runs.len());
                    let mut parsed_back = Vec::with_capacity(runs.len());
                    for (rep, mut series) in runs.into_iter().enumerate() {
                        series.config_echo.push(("sweep_cell".into(), cell.id()));
                        let name = cell.file_name(rep);
                        let csv = series.to_csv();
                        std::fs::write(out.join(&name), &csv)?;
                        parsed_back.push(MetricsSeries::parse_csv(&csv, &name)?);
                        files.push(out.join(name));
                    }
                    let merged = MetricsSeries::merge(parsed_back).expect("repetitions >= 1");
                    Ok((files, merged))
                })();
                (cell, result)
            })
            .collect()
    });

    let mut cell_files = Vec::new();
    let mut failures = Vec::new();
    let mut aggregate = String::from("cell,step,metric,mean,stderr,n\n");
    for (cell, result) in &results {
        match result {
            Ok((files, merged)) => {
                cell_files.extend(files.iter().cloned());
                for (step, metrics) in aggregate_by_step(merged) {
                    for (metric, m) in metrics {
                        aggregate.push_str(&format!(
                            "{},{},{},{},{},{}\n",
                            cell.id(),
                            step,
                            metric,
                            fmt_value(m.mean),
                            fmt_value(m.stderr),
                            m.n
                        ));
                    }
                }
            }
            Err(e) => failures.push((cell.id(), e.to_string())),
        }
    }
    if cell_files.is_empty() {
        let detail = failures
            .first()
            .map(|(id, e)| format!("{id}: {e}"))
            .unwrap_or_default();
        return Err(Error::InvalidConfig(format!(
            "every sweep cell failed; first failure: {detail}"
        )));
    }
    let aggregate_path = out.join("aggregate.csv");
    std::fs::write(&aggregate_path, aggregate)?;

    let mut summary = format!(
        "{} of {} cells completed, {} repetitions each, {} metrics files\n",
        expansion - failures.len(),
        expansion,
        parsed.settings.repetitions,
        cell_files.len()
    );
    for (id, error) in &failures {
        summary.push_str(&format!("  failed {id}: {error}\n"));
    }
    Ok(SweepOutput {
        out_dir: out.to_path_buf(),
        cell_files,
        aggregate_path,
        failures,
        expansion,
        summary,
    })
}
