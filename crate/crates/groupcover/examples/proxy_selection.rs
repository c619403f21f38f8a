//! Score a pool of proxies against one user's private estimates and select
//! the best feasible match.

use groupcover::corpus::{generate_corpus, SessionSequence, SyntheticCorpusSpec};
use groupcover::estimators::{
    build_counts, laplace_smooth, pair_given_sequence, topic_given_pair, ConditionalMode,
    PublishedDistribution,
};
use groupcover::personalisation::select_proxy;
use groupcover::privacy::build_sensitive_set;

fn main() -> groupcover::Result<()> {
    let corpus = generate_corpus(&SyntheticCorpusSpec {
        sensitive_topics: 3,
        seed: 21,
        ..Default::default()
    })?;

    // The user's history: all items of topic c1.
    let mine: Vec<_> = corpus
        .items_labelled(1)
        .into_iter()
        .map(|idx| corpus.items[idx].clone())
        .collect();
    let user_seq = SessionSequence::from_background(mine);
    let counts = build_counts(
        &user_seq,
        &corpus.rule,
        &corpus.topics,
        &corpus.dict_x,
        &corpus.dict_y,
    )?;
    let smoothed = laplace_smooth(&counts, 0.01)?;
    let pair_dist = pair_given_sequence(&smoothed)?;
    let table = topic_given_pair(&counts, ConditionalMode::Bayes);
    let theta: Vec<_> = corpus
        .topics
        .sensitive()
        .map(|c| build_sensitive_set(&table, c, 0.5))
        .collect::<groupcover::Result<_>>()?;

    // One proxy per topic, each publishing the distribution of its own log.
    let mut pool = Vec::new();
    for topic in corpus.topics.sensitive() {
        let items: Vec<_> = corpus
            .items_labelled(topic)
            .into_iter()
            .map(|idx| corpus.items[idx].clone())
            .collect();
        let seq = SessionSequence::from_background(items);
        let proxy_counts = build_counts(
            &seq,
            &corpus.rule,
            &corpus.topics,
            &corpus.dict_x,
            &corpus.dict_y,
        )?;
        pool.push(PublishedDistribution::from_counts(
            &laplace_smooth(&proxy_counts, 0.01)?,
            topic - 1,
            0,
        )?);
    }

    // With the constraint wide open, the matching proxy wins on the
    // objective alone.
    let outcome = select_proxy(&table, &pair_dist, &theta, &pool, 1.0)?;
    for score in &outcome.scores {
        println!(
            "proxy {}: objective {:.5}, feasible: {}, deniability {:?}",
            score.proxy,
            score.objective,
            score.feasible,
            score
                .deniability
                .iter()
                .map(|(c, v)| format!("c{c}={v:.2}"))
                .collect::<Vec<_>>()
        );
    }
    println!("chosen with delta = 1.0: proxy {:?}", outcome.chosen);

    // Tightening delta below the published estimate rejects the whole pool.
    let strict = select_proxy(&table, &pair_dist, &theta, &pool, 0.2)?;
    println!("chosen with delta = 0.2: {:?}", strict.chosen);
    Ok(())
}
