//! Build co-occurrence counts for a short session and derive every
//! probability estimator from them.

use groupcover::corpus::{generate_corpus, SessionSequence, SyntheticCorpusSpec};
use groupcover::estimators::{
    build_counts, laplace_smooth, pair_given_sequence, pair_given_topic, topic_given_pair,
    topic_prior, ConditionalMode,
};

fn main() -> groupcover::Result<()> {
    let corpus = generate_corpus(&SyntheticCorpusSpec {
        sensitive_topics: 3,
        pairs_per_topic: 30,
        seed: 7,
        ..Default::default()
    })?;

    // A session made of the first 40 corpus items.
    let session = SessionSequence::from_background(corpus.items[..40].to_vec());
    let counts = build_counts(
        &session,
        &corpus.rule,
        &corpus.topics,
        &corpus.dict_x,
        &corpus.dict_y,
    )?;
    println!(
        "raw counts: N = {}, presence mass O = {}",
        counts.n_total(),
        counts.o_total()
    );

    let smoothed = laplace_smooth(&counts, 0.01)?;
    let prior = topic_prior(&smoothed)?;
    for topic in corpus.topics.all() {
        println!(
            "P(labelled {}) = {:.4}",
            corpus.topics.label(topic).unwrap(),
            prior[topic]
        );
    }

    // The joint keyword-pair distribution of the whole session and the
    // strongest cell of one topic-conditional distribution.
    let joint = pair_given_sequence(&smoothed)?;
    println!("joint distribution sums to {:.9}", joint.sum());
    let per_topic = pair_given_topic(&smoothed, 1)?;
    let ((i, j), top) = per_topic
        .indexed_iter()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap();
    println!(
        "most likely keyword pair given topic c1: ({}, {}) with {:.4}",
        corpus.dict_x.feature(i).unwrap(),
        corpus.dict_y.feature(j).unwrap(),
        top
    );

    // Topic-given-pair conditionals in both normalization modes.
    for mode in [ConditionalMode::TopicMass, ConditionalMode::Bayes] {
        let table = topic_given_pair(&counts, mode);
        println!(
            "{} mode: P(c1 | strongest pair) = {:.4}",
            mode.name(),
            table.entry(1, i, j)
        );
    }
    Ok(())
}
