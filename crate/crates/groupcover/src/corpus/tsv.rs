//! Corpus TSV ingestion and serialization.
//!
//! Layout: three header lines declaring the dictionaries and topics, then one
//! row per pair. UTF-8, LF line endings.
//!
//! ```text
//! #dictionary_x<TAB>f1,f2,...
//! #dictionary_y<TAB>f1,f2,...
//! #topics<TAB>c0,c1,...
//! topic-labels(comma-sep)<TAB>input features(space-sep)<TAB>output features(space-sep)
//! ```
//!
//! The keyword-pair rule is not part of the file format. Loading induces the
//! tightest rule consistent with the declared labels: a pair of keywords is
//! revealing for topic `c` when it co-occurs in at least one `c`-labelled row
//! and in no row lacking the `c` label.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use super::{
    Corpus, Dictionary, DictionaryKind, FeatureId, InputOutputPair, LabelledPair, LabellingRule,
    TopicId, TopicSet, CATCH_ALL,
};
use crate::error::{Error, Result};

/// Serialize a corpus to the TSV layout above.
pub fn save_corpus(corpus: &Corpus, path: &Path) -> Result<()> {
    let mut out = String::new();
    let _ = writeln!(out, "#dictionary_x\t{}", corpus.dict_x.features().join(","));
    let _ = writeln!(out, "#dictionary_y\t{}", corpus.dict_y.features().join(","));
    let _ = writeln!(out, "#topics\t{}", corpus.topics.labels().join(","));
    for item in &corpus.items {
        let labels: Vec<&str> = item
            .labels
            .iter()
            .map(|&c| corpus.topics.label(c).expect("label in topic set"))
            .collect();
        let inputs: Vec<&str> = item
            .pair
            .input
            .iter()
            .map(|&i| corpus.dict_x.feature(i).expect("feature in dictionary"))
            .collect();
        let outputs: Vec<&str> = item
            .pair
            .output
            .iter()
            .map(|&j| corpus.dict_y.feature(j).expect("feature in dictionary"))
            .collect();
        let _ = writeln!(
            out,
            "{}\t{}\t{}",
            labels.join(","),
            inputs.join(" "),
            outputs.join(" ")
        );
    }
    std::fs::write(path, out)?;
    Ok(())
}

fn format_err(line: usize, message: impl Into<String>) -> Error {
    Error::CorpusFormat {
        line,
        message: message.into(),
    }
}

fn header_payload<'a>(
    lines: &mut impl Iterator<Item = (usize, &'a str)>,
    tag: &str,
) -> Result<(usize, String)> {
    let (line_no, line) = lines
        .next()
        .ok_or_else(|| format_err(0, format!("missing `{tag}` header line")))?;
    let mut fields = line.splitn(2, '\t');
    let head = fields.next().unwrap_or_default();
    if head != tag {
        return Err(format_err(line_no, format!("expected `{tag}` header")));
    }
    let payload = fields
        .next()
        .ok_or_else(|| format_err(line_no, format!("`{tag}` header has no payload")))?;
    Ok((line_no, payload.to_string()))
}

fn parse_dictionary(kind: DictionaryKind, line_no: usize, payload: &str) -> Result<Dictionary> {
    let features: Vec<String> = payload.split(',').map(str::to_string).collect();
    Dictionary::new(kind, features).map_err(|e| format_err(line_no, e.to_string()))
}

/// Parse a corpus from the TSV layout. Malformed rows are reported with
/// their 1-based line number.
pub fn load_corpus(path: &Path) -> Result<Corpus> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));

    let (lx, px) = header_payload(&mut lines, "#dictionary_x")?;
    let dict_x = parse_dictionary(DictionaryKind::Input, lx, &px)?;
    let (ly, py) = header_payload(&mut lines, "#dictionary_y")?;
    let dict_y = parse_dictionary(DictionaryKind::Output, ly, &py)?;
    let (lt, pt) = header_payload(&mut lines, "#topics")?;
    let topics = TopicSet::new(pt.split(',').map(str::to_string).collect())
        .map_err(|e| format_err(lt, e.to_string()))?;

    let mut items = Vec::new();
    for (line_no, line) in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(format_err(
                line_no,
                format!("expected 3 tab-separated fields, got {}", fields.len()),
            ));
        }
        let mut labels = Vec::new();
        for label in fields[0].split(',') {
            let topic = topics
                .lookup(label)
                .ok_or_else(|| format_err(line_no, format!("unknown topic label `{label}`")))?;
            labels.push(topic);
        }
        labels.sort_unstable();
        labels.dedup();
        let input = parse_features(fields[1], &dict_x, line_no, "input")?;
        let output = parse_features(fields[2], &dict_y, line_no, "output")?;
        items.push(LabelledPair {
            pair: InputOutputPair::new(input, output),
            labels,
        });
    }

    let rule = induce_rule(&topics, &items);
    Ok(Corpus {
        dict_x,
        dict_y,
        topics,
        items,
        rule,
    })
}

fn parse_features(
    field: &str,
    dict: &Dictionary,
    line_no: usize,
    side: &str,
) -> Result<Vec<FeatureId>> {
    let mut ids = Vec::new();
    for token in field.split(' ').filter(|t| !t.is_empty()) {
        let id = dict
            .lookup(token)
            .ok_or_else(|| format_err(line_no, format!("unknown {side} feature `{token}`")))?;
        ids.push(id);
    }
    if ids.is_empty() {
        return Err(format_err(line_no, format!("empty {side} multiset")));
    }
    Ok(ids)
}

/// Tightest keyword-pair rule consistent with the declared labels.
fn induce_rule(topics: &TopicSet, items: &[LabelledPair]) -> LabellingRule {
    // For every co-occurring keyword pair, collect the intersection of label
    // sets over the items it occurs in.
    let mut common: BTreeMap<(FeatureId, FeatureId), BTreeSet<TopicId>> = BTreeMap::new();
    for item in items {
        let labels: BTreeSet<TopicId> = item.labels.iter().copied().collect();
        let ins: BTreeSet<FeatureId> = item.pair.input.iter().copied().collect();
        let outs: BTreeSet<FeatureId> = item.pair.output.iter().copied().collect();
        for &i in &ins {
            for &j in &outs {
                common
                    .entry((i, j))
                    .and_modify(|set| set.retain(|c| labels.contains(c)))
                    .or_insert_with(|| labels.clone());
            }
        }
    }
    let mut rule = LabellingRule::new();
    for ((i, j), label_set) in common {
        for topic in label_set {
            if topic != CATCH_ALL && topics.is_sensitive(topic) {
                rule.insert(topic, i, j);
            }
        }
    }
    rule
}
