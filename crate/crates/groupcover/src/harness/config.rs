//! Line-oriented scenario configuration files.
//!
//! One `key = value` assignment per line; `#` starts a comment; blank lines
//! are ignored. Sweep specs use the same keys plus `axis.<key> = v1,v2,...`
//! lines expanding into a cartesian grid, and `repetitions = n` to repeat
//! every cell with consecutive seeds. The metrics CSV header block echoes
//! the same keys, so a header is itself a loadable config.

use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::estimators::ConditionalMode;
use crate::simulation::ScenarioConfig;

/// Settings beyond the scenario itself.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunSettings {
    pub repetitions: usize,
    /// Load this corpus TSV instead of generating a synthetic one.
    pub corpus_file: Option<PathBuf>,
}

/// One sweep axis: a config key and the values it takes.
#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub key: String,
    pub values: Vec<String>,
}

/// A parsed config file: base scenario, run settings and any sweep axes.
#[derive(Debug, Clone)]
pub struct ParsedConfig {
    pub scenario: ScenarioConfig,
    pub settings: RunSettings,
    pub axes: Vec<Axis>,
}

fn config_err(line: usize, message: impl Into<String>) -> Error {
    Error::ConfigFormat {
        line,
        message: message.into(),
    }
}

fn parse_num<T: std::str::FromStr>(line: usize, key: &str, value: &str) -> Result<T> {
    value
        .parse::<T>()
        .map_err(|_| config_err(line, format!("invalid value `{value}` for `{key}`")))
}

/// Assign one key. Shared between base lines and sweep axis expansion.
pub fn apply_key(
    scenario: &mut ScenarioConfig,
    settings: &mut RunSettings,
    key: &str,
    value: &str,
    line: usize,
) -> Result<()> {
    match key {
        "pool_size" => scenario.pool_size = parse_num(line, key, value)?,
        "user_count" => scenario.user_count = parse_num(line, key, value)?,
        "user_diversity_pct" => scenario.user_diversity_pct = parse_num(line, key, value)?,
        "proxy_diversity_pct" => scenario.proxy_diversity_pct = parse_num(line, key, value)?,
        "sensitive_topics" => scenario.sensitive_topics = parse_num(line, key, value)?,
        "steps" => scenario.steps = parse_num(line, key, value)?,
        "noise_ratio_pct" => scenario.noise_ratio_pct = parse_num(line, key, value)?,
        "lambda" => scenario.lambda = parse_num(line, key, value)?,
        "delta" => scenario.delta = parse_num(line, key, value)?,
        "alpha_sweep" => {
            scenario.alpha_sweep = value
                .split(',')
                .map(|v| parse_num(line, key, v.trim()))
                .collect::<Result<_>>()?;
        }
        "select_alpha" => scenario.select_alpha = parse_num(line, key, value)?,
        "background_pairs" => scenario.background_pairs = parse_num(line, key, value)?,
        "proxy_background_mix_pct" => {
            scenario.proxy_background_mix_pct = parse_num(line, key, value)?
        }
        "require_tokens" => scenario.require_tokens = parse_num(line, key, value)?,
        "seed" => scenario.seed = parse_num(line, key, value)?,
        "estimator_mode" => {
            scenario.mode = ConditionalMode::parse(value).ok_or_else(|| {
                config_err(
                    line,
                    format!("`{value}` is not an estimator mode (bayes | topic-mass)"),
                )
            })?;
        }
        "input_features" => scenario.input_features = parse_num(line, key, value)?,
        "output_features" => scenario.output_features = parse_num(line, key, value)?,
        "pairs_per_topic" => scenario.pairs_per_topic = parse_num(line, key, value)?,
        "profile_core_per_side" => scenario.profile.core_per_side = parse_num(line, key, value)?,
        "profile_aux_per_side" => scenario.profile.aux_per_side = parse_num(line, key, value)?,
        "profile_revealing_weight" => {
            scenario.profile.revealing_weight = parse_num(line, key, value)?
        }
        "profile_shared_weight" => scenario.profile.shared_weight = parse_num(line, key, value)?,
        "profile_shared_pool" => scenario.profile.shared_pool = parse_num(line, key, value)?,
        "repetitions" => settings.repetitions = parse_num(line, key, value)?,
        "corpus_file" => settings.corpus_file = Some(PathBuf::from(value)),
        _ => return Err(config_err(line, format!("unknown key `{key}`"))),
    }
    Ok(())
}

/// Keys a sweep may use as axes.
pub const AXIS_KEYS: &[&str] = &[
    "user_diversity_pct",
    "proxy_diversity_pct",
    "pool_size",
    "user_count",
    "noise_ratio_pct",
    "select_alpha",
    "estimator_mode",
];

/// Parse a config or sweep spec from text.
pub fn parse_config(text: &str) -> Result<ParsedConfig> {
    let mut scenario = ScenarioConfig::default();
    let mut settings = RunSettings {
        repetitions: 1,
        corpus_file: None,
    };
    let mut axes: Vec<Axis> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| config_err(line, format!("expected `key = value`, got `{content}`")))?;
        let key = key.trim();
        let value = value.trim();
        if let Some(axis_key) = key.strip_prefix("axis.") {
            if !AXIS_KEYS.contains(&axis_key) {
                return Err(config_err(
                    line,
                    format!(
                        "`{axis_key}` cannot be swept; valid axes: {}",
                        AXIS_KEYS.join(", ")
                    ),
                ));
            }
            let values: Vec<String> = value
                .split(',')
                .map(|v| v.trim().to_string())
                .filter(|v| !v.is_empty())
                .collect();
            if values.is_empty() {
                return Err(config_err(line, format!("axis `{axis_key}` has no values")));
            }
            axes.push(Axis {
                key: axis_key.to_string(),
                values,
            });
        } else {
            apply_key(&mut scenario, &mut settings, key, value, line)?;
        }
    }
    if settings.repetitions == 0 {
        return Err(Error::InvalidConfig("repetitions must be >= 1".into()));
    }
    Ok(ParsedConfig {
        scenario,
        settings,
        axes,
    })
}
