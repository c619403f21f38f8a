//! Run one full simulation scenario and print the metric trajectory.

use groupcover::estimators::ConditionalMode;
use groupcover::simulation::{run_scenario, ScenarioConfig};

fn main() -> groupcover::Result<()> {
    let config = ScenarioConfig {
        pool_size: 5,
        user_count: 10,
        sensitive_topics: 5,
        steps: 15,
        delta: 1.0,
        lambda: 0.001,
        background_pairs: 8,
        proxy_background_mix_pct: 25,
        mode: ConditionalMode::Bayes,
        seed: 99,
        ..Default::default()
    };
    let series = run_scenario(&config)?;
    println!("step  accuracy  utility  pd_global  pd_proxy  abstain");
    for record in &series.records {
        let fmt = |v: Option<f64>| match v {
            Some(v) => format!("{v:.4}"),
            None => "  -   ".to_string(),
        };
        println!(
            "{:>4}  {:>8}  {:>7}  {:>9}  {:>8}  {:>7}",
            record.step,
            fmt(record.selection_accuracy),
            fmt(record.utility_loss),
            fmt(record.deniability_direct_global),
            fmt(record.deniability_direct_proxy),
            record.abstain_count
        );
    }
    Ok(())
}
