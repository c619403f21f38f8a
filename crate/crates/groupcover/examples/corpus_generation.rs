//! Generate a synthetic labelled corpus, inspect its keyword-pair frequency
//! shape, and round-trip it through the TSV format.

use std::collections::BTreeMap;

use groupcover::corpus::{generate_corpus, load_corpus, save_corpus, SyntheticCorpusSpec};

fn main() -> groupcover::Result<()> {
    let spec = SyntheticCorpusSpec {
        sensitive_topics: 5,
        seed: 42,
        ..Default::default()
    };
    let corpus = generate_corpus(&spec)?;
    println!(
        "corpus: |D_X| = {}, |D_Y| = {}, {} topics, {} items",
        corpus.dict_x.len(),
        corpus.dict_y.len(),
        corpus.topics.len(),
        corpus.items.len()
    );

    // Per-topic keyword-pair co-occurrence frequencies: a few pairs reveal
    // the topic strongly (frequency above 0.5), most are weak.
    for topic in corpus.topics.sensitive() {
        let ids = corpus.items_labelled(topic);
        let mut pair_counts: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for &idx in &ids {
            let pair = &corpus.items[idx].pair;
            let mut seen = std::collections::BTreeSet::new();
            for &i in &pair.input {
                for &j in &pair.output {
                    seen.insert((i, j));
                }
            }
            for key in seen {
                *pair_counts.entry(key).or_default() += 1;
            }
        }
        let n = ids.len() as f64;
        let strong = pair_counts
            .values()
            .filter(|&&c| c as f64 / n > 0.5)
            .count();
        let weak = pair_counts
            .values()
            .filter(|&&c| (c as f64 / n) < 0.3)
            .count();
        println!(
            "topic {}: {} items, {} distinct pairs, {} strong (>0.5), {} weak (<0.3)",
            corpus.topics.label(topic).unwrap(),
            ids.len(),
            pair_counts.len(),
            strong,
            weak
        );
    }

    let dir = std::env::temp_dir().join("groupcover_corpus_example");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("corpus.tsv");
    save_corpus(&corpus, &path)?;
    let loaded = load_corpus(&path)?;
    println!(
        "round trip through {}: {} items preserved, labels intact: {}",
        path.display(),
        loaded.items.len(),
        loaded.items == corpus.items
    );
    Ok(())
}
