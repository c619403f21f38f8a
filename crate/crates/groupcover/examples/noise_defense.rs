//! Decoy-query injection: how the topic-to-noise ratio drives down what a
//! proxy observer can pin on a user.
//!
//! The worst case is a pool with no topic diversity: without decoys every
//! proxy log stays pure and deniability is stuck at 1.0. Injecting decoy
//! queries about other topics into the rest of the pool dilutes every log,
//! and more noise dilutes faster, at the price of utility.

use groupcover::estimators::ConditionalMode;
use groupcover::metrics::MetricsSeries;
use groupcover::simulation::{run_scenario, ScenarioConfig};

fn trajectory(noise_ratio_pct: u16) -> groupcover::Result<MetricsSeries> {
    run_scenario(&ScenarioConfig {
        noise_ratio_pct,
        sensitive_topics: 5,
        steps: 20,
        delta: 1.0,
        lambda: 0.001,
        mode: ConditionalMode::Bayes,
        seed: 5,
        ..Default::default()
    })
}

fn main() -> groupcover::Result<()> {
    println!("proxy-observer deniability by step (lower is better for the user):");
    println!("step      0%     50%    100%    200%");
    let runs: Vec<MetricsSeries> = [0u16, 50, 100, 200]
        .into_iter()
        .map(trajectory)
        .collect::<groupcover::Result<_>>()?;
    for step in [1, 2, 4, 6, 8, 10, 14, 20] {
        let mut row = format!("{step:>4}");
        for series in &runs {
            let value = series.records[step]
                .deniability_direct_proxy
                .unwrap_or(f64::NAN);
            row.push_str(&format!("  {value:.4}"));
        }
        println!("{row}");
    }
    println!();
    println!("utility loss paid at step 20:");
    for (ratio, series) in [0u16, 50, 100, 200].into_iter().zip(&runs) {
        println!(
            "  noise {ratio:>3}%: {:.4}",
            series.records[20].utility_loss.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
