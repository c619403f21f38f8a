//! Dictionaries, input-output interactions, sessions and labelling.
//!
//! Everything downstream (estimators, privacy metrics, the simulation) counts
//! over the vocabulary fixed here: an input dictionary, an output dictionary,
//! a topic set with a catch-all non-sensitive topic at index 0, and a
//! keyword-pair labelling rule that deterministically assigns topics to
//! interactions.

mod synthetic;
mod tsv;

pub use synthetic::{generate_corpus, KeywordProfile, SyntheticCorpusSpec};
pub use tsv::{load_corpus, save_corpus};

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::error::{Error, Result};

/// Index into a [`Dictionary`].
pub type FeatureId = usize;
/// Index into a [`TopicSet`]; 0 is always the catch-all topic.
pub type TopicId = usize;
pub type UserId = usize;
pub type ProxyId = usize;

/// The catch-all, non-sensitive topic.
pub const CATCH_ALL: TopicId = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DictionaryKind {
    Input,
    Output,
}

/// An ordered list of unique keyword features.
///
/// Order is fixed at construction and stable for the rest of the run; all
/// matrices are indexed by position in this list.
#[derive(Debug, Clone)]
pub struct Dictionary {
    kind: DictionaryKind,
    features: Vec<String>,
    index: HashMap<String, FeatureId>,
}

impl Dictionary {
    pub fn new(kind: DictionaryKind, features: Vec<String>) -> Result<Self> {
        if features.is_empty() {
            return Err(Error::EmptyDictionary);
        }
        let mut index = HashMap::with_capacity(features.len());
        for (id, feature) in features.iter().enumerate() {
            if index.insert(feature.clone(), id).is_some() {
                return Err(Error::DuplicateFeature(feature.clone()));
            }
        }
        Ok(Self {
            kind,
            features,
            index,
        })
    }

    pub fn kind(&self) -> DictionaryKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn feature(&self, id: FeatureId) -> Option<&str> {
        self.features.get(id).map(String::as_str)
    }

    pub fn features(&self) -> &[String] {
        &self.features
    }

    pub fn lookup(&self, feature: &str) -> Option<FeatureId> {
        self.index.get(feature).copied()
    }
}

/// Ordered topic labels; index 0 is the catch-all non-sensitive topic and
/// every other label denotes a sensitive topic.
#[derive(Debug, Clone)]
pub struct TopicSet {
    labels: Vec<String>,
}

impl TopicSet {
    pub fn new(labels: Vec<String>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::InvalidTopicSet("no topics given".into()));
        }
        let mut seen = BTreeSet::new();
        for label in &labels {
            if !seen.insert(label.as_str()) {
                return Err(Error::InvalidTopicSet(format!(
                    "duplicate topic label `{label}`"
                )));
            }
        }
        Ok(Self { labels })
    }

    /// `c0, c1, .. cK` for `sensitive` sensitive topics.
    pub fn with_default_labels(sensitive: usize) -> Self {
        let labels = (0..=sensitive).map(|c| format!("c{c}")).collect();
        Self { labels }
    }

    /// Total number of topics, catch-all included.
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn sensitive_count(&self) -> usize {
        self.labels.len() - 1
    }

    pub fn is_sensitive(&self, topic: TopicId) -> bool {
        topic != CATCH_ALL && topic < self.labels.len()
    }

    pub fn sensitive(&self) -> impl Iterator<Item = TopicId> + '_ {
        1..self.labels.len()
    }

    pub fn all(&self) -> impl Iterator<Item = TopicId> + '_ {
        0..self.labels.len()
    }

    pub fn label(&self, topic: TopicId) -> Option<&str> {
        self.labels.get(topic).map(String::as_str)
    }

    pub fn lookup(&self, label: &str) -> Option<TopicId> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }
}

/// One query/response interaction. Input and output are feature multisets
/// (duplicates allowed, order irrelevant).
///
/// `step_index` is the position in the global interaction log; corpus items
/// and other pairs that have not yet entered a session carry 0 and are
/// stamped with a real index (>= 1) when appended to a log.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InputOutputPair {
    pub input: Vec<FeatureId>,
    pub output: Vec<FeatureId>,
    pub origin_user: Option<UserId>,
    pub via_proxy: Option<ProxyId>,
    pub step_index: usize,
}

impl InputOutputPair {
    pub fn new(input: Vec<FeatureId>, output: Vec<FeatureId>) -> Self {
        Self {
            input,
            output,
            origin_user: None,
            via_proxy: None,
            step_index: 0,
        }
    }

    /// True when feature `i` occurs in the input and `j` in the output.
    pub fn contains_pair(&self, i: FeatureId, j: FeatureId) -> bool {
        self.input.contains(&i) && self.output.contains(&j)
    }
}

/// An interaction together with its topic labels (sorted, non-empty).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelledPair {
    pub pair: InputOutputPair,
    pub labels: Vec<TopicId>,
}

/// An ordered session of interactions; the first `background_len` entries are
/// background knowledge available before the first live step.
#[derive(Debug, Clone, Default)]
pub struct SessionSequence {
    pairs: Vec<LabelledPair>,
    background_len: usize,
}

impl SessionSequence {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_background(pairs: Vec<LabelledPair>) -> Self {
        let background_len = pairs.len();
        Self {
            pairs,
            background_len,
        }
    }

    /// Assemble a sequence whose first `background_len` entries are treated
    /// as background knowledge.
    pub fn from_parts(pairs: Vec<LabelledPair>, background_len: usize) -> Self {
        debug_assert!(background_len <= pairs.len());
        Self {
            pairs,
            background_len,
        }
    }

    /// Append a live interaction. Step indices must be strictly increasing
    /// past the background prefix.
    pub fn push(&mut self, item: LabelledPair) {
        if let Some(last) = self.pairs.get(self.background_len..).and_then(|s| s.last()) {
            debug_assert!(
                item.pair.step_index > last.pair.step_index,
                "step indices must increase after the background prefix"
            );
        }
        self.pairs.push(item);
    }

    pub fn pairs(&self) -> &[LabelledPair] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn background_len(&self) -> usize {
        self.background_len
    }

    pub fn iter(&self) -> std::slice::Iter<'_, LabelledPair> {
        self.pairs.iter()
    }
}

/// Keyword-pair labelling rule: an interaction is labelled with sensitive
/// topic `c` when any of the rule's (input, output) feature pairs for `c`
/// co-occur in it, and with the catch-all topic when no sensitive topic
/// matched.
#[derive(Debug, Clone, Default)]
pub struct LabellingRule {
    revealing: BTreeMap<TopicId, BTreeSet<(FeatureId, FeatureId)>>,
}

impl LabellingRule {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, topic: TopicId, input: FeatureId, output: FeatureId) {
        debug_assert_ne!(topic, CATCH_ALL, "catch-all topic has no revealing pairs");
        self.revealing
            .entry(topic)
            .or_default()
            .insert((input, output));
    }

    pub fn pairs_for(&self, topic: TopicId) -> Option<&BTreeSet<(FeatureId, FeatureId)>> {
        self.revealing.get(&topic)
    }

    pub fn topics(&self) -> impl Iterator<Item = TopicId> + '_ {
        self.revealing.keys().copied()
    }

    /// Distinct input keywords appearing in the rule for `topic`, sorted.
    pub fn input_keywords(&self, topic: TopicId) -> Vec<FeatureId> {
        match self.revealing.get(&topic) {
            Some(pairs) => {
                let set: BTreeSet<FeatureId> = pairs.iter().map(|&(i, _)| i).collect();
                set.into_iter().collect()
            }
            None => Vec::new(),
        }
    }
}

/// Assign topic labels to a pair: all sensitive topics whose revealing pairs
/// co-occur in it, or the catch-all topic when none do. Always non-empty,
/// always sorted, deterministic.
pub fn label_pair(rule: &LabellingRule, pair: &InputOutputPair) -> Vec<TopicId> {
    let input_set: BTreeSet<FeatureId> = pair.input.iter().copied().collect();
    let output_set: BTreeSet<FeatureId> = pair.output.iter().copied().collect();
    let mut labels = Vec::new();
    for (&topic, pairs) in &rule.revealing {
        if pairs
            .iter()
            .any(|&(i, j)| input_set.contains(&i) && output_set.contains(&j))
        {
            labels.push(topic);
        }
    }
    if labels.is_empty() {
        labels.push(CATCH_ALL);
    }
    labels
}

/// A complete corpus: both dictionaries, the topic set, the labelled items
/// and the keyword-pair rule consistent with those labels.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub dict_x: Dictionary,
    pub dict_y: Dictionary,
    pub topics: TopicSet,
    pub items: Vec<LabelledPair>,
    pub rule: LabellingRule,
}

impl Corpus {
    /// Indices of items carrying the given label.
    pub fn items_labelled(&self, topic: TopicId) -> Vec<usize> {
        self.items
            .iter()
            .enumerate()
            .filter(|(_, item)| item.labels.contains(&topic))
            .map(|(idx, _)| idx)
            .collect()
    }
}

/// A count vector over a dictionary plus the number of tokens that fell
/// outside it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountVector {
    pub counts: Vec<u32>,
    pub dropped: usize,
}

impl CountVector {
    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&c| u64::from(c)).sum()
    }
}

/// Count occurrences of each dictionary feature in a token multiset.
/// Out-of-dictionary tokens are not errors; they are dropped and tallied.
pub fn count_vectorize<'a, I>(tokens: I, dictionary: &Dictionary) -> CountVector
where
    I: IntoIterator<Item = &'a str>,
{
    let mut counts = vec![0u32; dictionary.len()];
    let mut dropped = 0usize;
    for token in tokens {
        match dictionary.lookup(token) {
            Some(id) => counts[id] += 1,
            None => dropped += 1,
        }
    }
    CountVector { counts, dropped }
}

/// Count occurrences of already-resolved feature ids.
pub fn count_vector_ids(ids: &[FeatureId], dictionary_len: usize) -> Vec<u32> {
    let mut counts = vec![0u32; dictionary_len];
    for &id in ids {
        debug_assert!(id < dictionary_len, "feature id out of range");
        counts[id] += 1;
    }
    counts
}

/// Lowercase and split on non-alphanumeric runs. No stemming.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|ch: char| !ch.is_alphanumeric())
        .filter(|tok| !tok.is_empty())
        .map(str::to_string)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dict(kind: DictionaryKind, features: &[&str]) -> Dictionary {
        Dictionary::new(kind, features.iter().map(|s| s.to_string()).collect()).unwrap()
    }

    #[test]
    fn count_vectorize_counts_occurrences() {
        let d = dict(DictionaryKind::Input, &["a", "b", "c"]);
        let v = count_vectorize(["a", "a", "b"], &d);
        assert_eq!(v.counts, vec![2, 1, 0]);
        assert_eq!(v.dropped, 0);
    }

    #[test]
    fn count_vectorize_empty_multiset() {
        let d = dict(DictionaryKind::Input, &["a", "b", "c"]);
        let v = count_vectorize([], &d);
        assert_eq!(v.counts, vec![0, 0, 0]);
        assert_eq!(v.dropped, 0);
    }

    #[test]
    fn count_vectorize_drops_unknown_tokens() {
        // Hand count: of {a, z} only `a` resolves against [a, b].
        let d = dict(DictionaryKind::Input, &["a", "b"]);
        let v = count_vectorize(["a", "z"], &d);
        assert_eq!(v.counts, vec![1, 0]);
        assert_eq!(v.dropped, 1);
    }

    #[test]
    fn dictionary_rejects_duplicates_and_empty() {
        assert!(matches!(
            Dictionary::new(DictionaryKind::Input, vec![]),
            Err(Error::EmptyDictionary)
        ));
        let dup = Dictionary::new(
            DictionaryKind::Input,
            vec!["a".into(), "b".into(), "a".into()],
        );
        assert!(matches!(dup, Err(Error::DuplicateFeature(f)) if f == "a"));
    }

    #[test]
    fn label_pair_requires_co_occurrence() {
        let mut rule = LabellingRule::new();
        rule.insert(1, 0, 0);
        let both = InputOutputPair::new(vec![0], vec![0]);
        assert_eq!(label_pair(&rule, &both), vec![1]);
        // Input feature alone does not trigger the topic.
        let input_only = InputOutputPair::new(vec![0], vec![1]);
        assert_eq!(label_pair(&rule, &input_only), vec![CATCH_ALL]);
    }

    #[test]
    fn label_pair_overlapping_rules_yield_both_topics() {
        let mut rule = LabellingRule::new();
        rule.insert(1, 0, 0);
        rule.insert(1, 1, 1);
        rule.insert(2, 0, 0);
        rule.insert(2, 2, 2);
        let pair = InputOutputPair::new(vec![0, 5], vec![0, 4]);
        // Exhaustive check over the rule: (0,0) co-occurs, so both topics
        // that list it must label the pair and nothing else may.
        let labels = label_pair(&rule, &pair);
        assert_eq!(labels, vec![1, 2]);
    }

    #[test]
    fn label_pair_is_deterministic_and_non_empty() {
        let mut rule = LabellingRule::new();
        rule.insert(1, 3, 2);
        let pair = InputOutputPair::new(vec![1, 2], vec![2, 3]);
        let first = label_pair(&rule, &pair);
        assert!(!first.is_empty());
        for _ in 0..5 {
            assert_eq!(label_pair(&rule, &pair), first);
        }
    }

    #[test]
    fn tokenize_lowercases_and_splits() {
        assert_eq!(
            tokenize(" Hello, WORLD!  42-ok "),
            vec!["hello", "world", "42", "ok"]
        );
    }

    #[test]
    fn session_sequence_tracks_background_prefix() {
        let bg = vec![LabelledPair {
            pair: InputOutputPair::new(vec![0], vec![0]),
            labels: vec![CATCH_ALL],
        }];
        let mut seq = SessionSequence::from_background(bg);
        assert_eq!(seq.background_len(), 1);
        let mut live = InputOutputPair::new(vec![1], vec![1]);
        live.step_index = 1;
        seq.push(LabelledPair {
            pair: live,
            labels: vec![CATCH_ALL],
        });
        assert_eq!(seq.len(), 2);
    }
}
