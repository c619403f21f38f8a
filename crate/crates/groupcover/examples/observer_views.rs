//! Global versus proxy observers: the same world, different views, different
//! deniability.

use std::collections::BTreeSet;

use groupcover::estimators::ConditionalMode;
use groupcover::privacy::{deniability_direct, ObserverKind};
use groupcover::simulation::{init_world, ScenarioConfig};

fn main() -> groupcover::Result<()> {
    let config = ScenarioConfig {
        pool_size: 4,
        user_count: 8,
        sensitive_topics: 4,
        steps: 0,
        delta: 1.0,
        lambda: 0.001,
        mode: ConditionalMode::Bayes,
        seed: 12,
        ..Default::default()
    };
    let mut world = init_world(&config)?;
    for _ in 0..10 {
        for user in 0..world.users.len() {
            world.user_step(user)?;
        }
    }

    let global = world.observer_view(ObserverKind::Global)?;
    println!(
        "global observer sees {} interactions ({} background)",
        global.view.len(),
        global.view.background_len()
    );

    // A proxy observer watching only the proxies user 0 actually used sees a
    // far more concentrated log.
    let user = &world.users[0];
    let kind = ObserverKind::Proxy(user.used_proxies.clone());
    let local = world.observer_view(kind.clone())?;
    println!(
        "proxy observer of user 0 (proxies {:?}) sees {} interactions",
        user.used_proxies,
        local.view.len()
    );
    for topic in world.corpus.topics.sensitive() {
        let g = deniability_direct(
            &global.view,
            &world.corpus.rule,
            topic,
            ObserverKind::Global,
        )?;
        let p = deniability_direct(&local.view, &world.corpus.rule, topic, kind.clone())?;
        println!(
            "  topic {}: global {:.3}, proxy {:.3}",
            world.corpus.topics.label(topic).unwrap(),
            g.value,
            p.value
        );
    }

    // Untouched proxies expose only their background knowledge.
    let idle: Vec<usize> = (0..world.proxies.len())
        .filter(|p| !user.used_proxies.contains(p))
        .collect();
    if let Some(&p) = idle.first() {
        let view = world.observer_view(ObserverKind::Proxy(BTreeSet::from([p])))?;
        println!(
            "idle proxy {p}: {} of {} interactions are background",
            view.view.background_len(),
            view.view.len()
        );
    }
    Ok(())
}
