//! Seeded synthetic corpus generation.
//!
//! Each sensitive topic owns a small block of revealing keywords per side:
//! `core` keywords present in every item of the topic, `aux` keywords present
//! occasionally. Topic items keep their inputs purely topical (queries are
//! short and on point) but mix shared "common word" keywords into their
//! outputs (responses carry general vocabulary); catch-all items are built
//! from the shared pools alone. The result mirrors the keyword-pair
//! frequency shape of real query corpora: a small fraction of strongly
//! revealing pairs (conditional co-occurrence frequency above 0.5) and a
//! large majority of weak pairs (below 0.3).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    label_pair, Corpus, Dictionary, DictionaryKind, FeatureId, InputOutputPair, LabelledPair,
    LabellingRule, TopicId, TopicSet, CATCH_ALL,
};
use crate::error::{Error, Result};

/// Probability that an aux keyword joins an item of its topic.
const AUX_PRESENCE: f64 = 0.25;
/// Shared keyword draws per side of a catch-all item.
const CATCH_ALL_DRAWS: usize = 2;

/// Per-topic keyword-pair weight profile: how item keyword mass is split
/// between topic-revealing keywords and the shared pool.
#[derive(Debug, Clone, PartialEq)]
pub struct KeywordProfile {
    /// Revealing keywords per topic per side that occur in every item.
    pub core_per_side: usize,
    /// Revealing keywords per topic per side that occur occasionally.
    pub aux_per_side: usize,
    /// Weight of topic-revealing keywords in an item's output. Non-negative;
    /// `revealing_weight + shared_weight` must sum to 1.
    pub revealing_weight: f64,
    /// Weight of shared-pool keywords in an item's output.
    pub shared_weight: f64,
    /// Size of the shared "common word" pool actually drawn from.
    pub shared_pool: usize,
}

impl Default for KeywordProfile {
    fn default() -> Self {
        Self {
            core_per_side: 2,
            aux_per_side: 1,
            revealing_weight: 0.82,
            shared_weight: 0.18,
            shared_pool: 8,
        }
    }
}

impl KeywordProfile {
    fn validate(&self) -> Result<()> {
        if self.core_per_side == 0 {
            return Err(Error::InfeasibleSpec(
                "profile needs at least one core keyword per side".into(),
            ));
        }
        if self.revealing_weight < 0.0 || self.shared_weight < 0.0 {
            return Err(Error::InfeasibleSpec(
                "profile weights must be non-negative".into(),
            ));
        }
        let sum = self.revealing_weight + self.shared_weight;
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InfeasibleSpec(format!(
                "profile weights must sum to 1, got {sum}"
            )));
        }
        if self.shared_presence() > 1.0 {
            return Err(Error::InfeasibleSpec(
                "shared weight too large for the revealing keyword counts".into(),
            ));
        }
        Ok(())
    }

    /// Keywords per topic per side reserved in each dictionary.
    pub fn keywords_per_topic(&self) -> usize {
        self.core_per_side + self.aux_per_side
    }

    /// Probability that an item draws one shared keyword on a side, chosen so
    /// the expected shared keyword mass matches `shared_weight`.
    fn shared_presence(&self) -> f64 {
        if self.revealing_weight <= 0.0 {
            return 1.0;
        }
        let expected_revealing =
            self.core_per_side as f64 + self.aux_per_side as f64 * AUX_PRESENCE;
        expected_revealing * self.shared_weight / self.revealing_weight
    }
}

/// Parameters for [`generate_corpus`]. Deterministic given the seed.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpusSpec {
    /// Input dictionary size, exact.
    pub input_features: usize,
    /// Output dictionary size, exact.
    pub output_features: usize,
    /// Number of sensitive topics; the catch-all topic is added on top.
    pub sensitive_topics: usize,
    /// Items generated per topic, catch-all included.
    pub pairs_per_topic: usize,
    pub profile: KeywordProfile,
    pub seed: u64,
}

impl Default for SyntheticCorpusSpec {
    fn default() -> Self {
        Self {
            input_features: 30,
            output_features: 30,
            sensitive_topics: 5,
            pairs_per_topic: 40,
            profile: KeywordProfile::default(),
            seed: 0,
        }
    }
}

impl SyntheticCorpusSpec {
    pub fn validate(&self) -> Result<()> {
        self.profile.validate()?;
        if self.sensitive_topics == 0 {
            return Err(Error::InfeasibleSpec(
                "at least one sensitive topic required".into(),
            ));
        }
        if self.pairs_per_topic == 0 {
            return Err(Error::InfeasibleSpec("pairs_per_topic must be >= 1".into()));
        }
        let reserved = self.sensitive_topics * self.profile.keywords_per_topic();
        for (side, size) in [
            ("input", self.input_features),
            ("output", self.output_features),
        ] {
            // Two shared slots minimum so catch-all items exist.
            if reserved + 2 > size {
                return Err(Error::InfeasibleSpec(format!(
                    "{side} dictionary of {size} features cannot hold {reserved} \
                     revealing keywords plus a shared pool"
                )));
            }
        }
        Ok(())
    }
}

struct SideLayout {
    per_topic: usize,
    shared_start: usize,
    shared_len: usize,
}

impl SideLayout {
    fn new(size: usize, topics: usize, profile: &KeywordProfile) -> Self {
        let per_topic = profile.keywords_per_topic();
        let shared_start = topics * per_topic;
        let shared_len = (size - shared_start).min(profile.shared_pool);
        Self {
            per_topic,
            shared_start,
            shared_len,
        }
    }

    fn core(&self, topic: TopicId, profile: &KeywordProfile) -> std::ops::Range<FeatureId> {
        let base = (topic - 1) * self.per_topic;
        base..base + profile.core_per_side
    }

    fn aux(&self, topic: TopicId, profile: &KeywordProfile) -> std::ops::Range<FeatureId> {
        let base = (topic - 1) * self.per_topic + profile.core_per_side;
        base..base + profile.aux_per_side
    }

    fn shared(&self, rng: &mut ChaCha8Rng) -> FeatureId {
        self.shared_start + rng.gen_range(0..self.shared_len)
    }
}

fn side_features(
    layout: &SideLayout,
    topic: TopicId,
    profile: &KeywordProfile,
    with_shared: bool,
    rng: &mut ChaCha8Rng,
) -> Vec<FeatureId> {
    let mut features: Vec<FeatureId> = layout.core(topic, profile).collect();
    for aux in layout.aux(topic, profile) {
        if rng.gen_bool(AUX_PRESENCE) {
            features.push(aux);
        }
    }
    if with_shared && rng.gen_bool(profile.shared_presence().min(1.0)) {
        features.push(layout.shared(rng));
    }
    features
}

/// Generate a labelled corpus. Bit-identical across runs with equal specs.
pub fn generate_corpus(spec: &SyntheticCorpusSpec) -> Result<Corpus> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let profile = &spec.profile;
    let topics = TopicSet::with_default_labels(spec.sensitive_topics);

    let dict_x = Dictionary::new(
        DictionaryKind::Input,
        (0..spec.input_features).map(|i| format!("x{i}")).collect(),
    )?;
    let dict_y = Dictionary::new(
        DictionaryKind::Output,
        (0..spec.output_features).map(|j| format!("y{j}")).collect(),
    )?;

    let in_layout = SideLayout::new(spec.input_features, spec.sensitive_topics, profile);
    let out_layout = SideLayout::new(spec.output_features, spec.sensitive_topics, profile);

    let mut rule = LabellingRule::new();
    for topic in topics.sensitive() {
        for i in in_layout
            .core(topic, profile)
            .chain(in_layout.aux(topic, profile))
        {
            for j in out_layout
                .core(topic, profile)
                .chain(out_layout.aux(topic, profile))
            {
                rule.insert(topic, i, j);
            }
        }
    }

    let mut items = Vec::with_capacity((spec.sensitive_topics + 1) * spec.pairs_per_topic);
    for topic in topics.all() {
        for _ in 0..spec.pairs_per_topic {
            let (input, output) = if topic == CATCH_ALL {
                let input = (0..CATCH_ALL_DRAWS)
                    .map(|_| in_layout.shared(&mut rng))
                    .collect();
                let output = (0..CATCH_ALL_DRAWS)
                    .map(|_| out_layout.shared(&mut rng))
                    .collect();
                (input, output)
            } else {
                (
                    side_features(&in_layout, topic, profile, false, &mut rng),
                    side_features(&out_layout, topic, profile, true, &mut rng),
                )
            };
            let pair = InputOutputPair::new(input, output);
            let labels = label_pair(&rule, &pair);
            items.push(LabelledPair { pair, labels });
        }
    }

    Ok(Corpus {
        dict_x,
        dict_y,
        topics,
        items,
        rule,
    })
}
