//! Estimate deniability from an observed log and from published
//! distributions only, then relate the bound to re-identification and
//! differential privacy.

use groupcover::corpus::{generate_corpus, SessionSequence, SyntheticCorpusSpec};
use groupcover::estimators::{
    build_counts, laplace_smooth, topic_given_pair, ConditionalMode, PublishedDistribution,
};
use groupcover::privacy::{
    build_sensitive_set, deniability_check, deniability_direct, deniability_published,
    dp_gamma_bound, locality_adjusted_bound, reidentification_bound, ObserverKind,
};

fn main() -> groupcover::Result<()> {
    let corpus = generate_corpus(&SyntheticCorpusSpec {
        sensitive_topics: 2,
        seed: 3,
        ..Default::default()
    })?;
    let delta = 0.6;

    // An observer sees a mixed log: items of both sensitive topics plus
    // catch-all traffic.
    let view = SessionSequence::from_background(corpus.items.clone());
    for topic in corpus.topics.sensitive() {
        let estimate = deniability_direct(&view, &corpus.rule, topic, ObserverKind::Global)?;
        println!(
            "direct estimate for {}: {:.4} -> {} at delta {delta}",
            corpus.topics.label(topic).unwrap(),
            estimate.value,
            if deniability_check(&estimate, delta)? {
                "pass"
            } else {
                "fail"
            },
        );
    }

    // The published-estimator route: no raw logs, only the sensitive keyword
    // sets and a proxy's published distribution.
    let counts = build_counts(
        &view,
        &corpus.rule,
        &corpus.topics,
        &corpus.dict_x,
        &corpus.dict_y,
    )?;
    let table = topic_given_pair(&counts, ConditionalMode::Bayes);
    let theta: Vec<_> = corpus
        .topics
        .sensitive()
        .map(|c| build_sensitive_set(&table, c, 0.5))
        .collect::<groupcover::Result<_>>()?;
    println!(
        "sensitive keyword sets at alpha 0.5: {:?} pairs",
        theta.iter().map(|s| s.pairs.len()).collect::<Vec<_>>()
    );
    let published = PublishedDistribution::from_counts(&laplace_smooth(&counts, 0.01)?, 0, 0)?;
    for topic in corpus.topics.sensitive() {
        let estimate = deniability_published(&theta, &published, topic)?;
        println!(
            "published estimate for {}: {:.4}",
            corpus.topics.label(topic).unwrap(),
            estimate.value
        );
    }

    // Closed-form companions of the deniability bound.
    println!(
        "re-identification prevented with probability >= {:.2}",
        reidentification_bound(delta)?
    );
    println!(
        "observer covering half the log needs the bound {:.2}",
        locality_adjusted_bound(delta, 0.5)?
    );
    for epsilon in [0.0, 0.5, 1.0] {
        println!(
            "(epsilon = {epsilon}, gamma >= {:.4}) differential privacy",
            dp_gamma_bound(delta, epsilon)?
        );
    }
    Ok(())
}
