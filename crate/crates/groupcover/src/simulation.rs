//! The multi-agent world: users, proxy agents, a black-box backend and
//! observers, plus the session loop that drives them.
//!
//! Each round, every user (in id order) re-selects a proxy from the
//! published distributions, issues one true query drawn from its sensitive
//! keyword set, and receives a personalised response routed through the
//! chosen proxy. The interaction lands in the proxy's log (visible to
//! observers) and the user's own log; the backend updates its per-proxy
//! profile; the touched proxy republishes. Decoy queries about other topics
//! are then injected to the rest of the pool according to the configured
//! topic-to-noise ratio.
//!
//! Everything is driven by ChaCha streams derived from the scenario seed, so
//! a scenario re-run with the same config is bit-identical.

use std::collections::BTreeSet;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{
    generate_corpus, label_pair, Corpus, FeatureId, InputOutputPair, KeywordProfile, LabelledPair,
    ProxyId, SessionSequence, SyntheticCorpusSpec, TopicId, UserId, CATCH_ALL,
};
use crate::error::{Error, Result};
use crate::estimators::{
    laplace_smooth, pair_given_sequence, topic_given_pair, CoOccurrenceCounts, ConditionalMode,
    PublishedDistribution, TopicConditionalTable,
};
use crate::metrics::{MetricsRecord, MetricsSeries};
use crate::personalisation::{
    select_proxy, topic_distribution, utility_loss, DistributionSource, TopicDistribution,
};
use crate::privacy::{build_sensitive_set, SensitiveKeywordSet};
use crate::tokens::{
    generate_issuer_key, mint_and_blind, sign_blinded, IssuerPublicKey, SignedToken, SpentRegistry,
};

/// True queries are drawn from the user's sensitive keyword set at this
/// threshold.
pub const QUERY_ALPHA: f64 = 0.5;

/// Smoothing the backend applies to its per-proxy topic profile.
const BACKEND_LAMBDA: f64 = 1.0;

/// Scenario parameters. Ranges follow the experimental envelope the
/// simulator is calibrated for; [`ScenarioConfig::validate`] enforces them
/// for harness runs, while [`init_world`] only requires structural
/// feasibility so that smaller worlds can be built directly in tests and
/// examples.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub pool_size: usize,
    pub user_count: usize,
    /// Percentage of users allocated the catch-all topic.
    pub user_diversity_pct: u8,
    /// Percentage of proxies allocated the catch-all topic.
    pub proxy_diversity_pct: u8,
    pub sensitive_topics: usize,
    pub steps: usize,
    /// Average decoy rounds per true query, in percent.
    pub noise_ratio_pct: u16,
    pub lambda: f64,
    pub delta: f64,
    /// Thresholds at which published-estimator deniability is reported.
    pub alpha_sweep: Vec<f64>,
    /// Threshold for the sensitive sets backing the selection constraint.
    pub select_alpha: f64,
    /// Background interactions seeded into every agent.
    pub background_pairs: usize,
    /// Percentage of each proxy's background drawn from the whole corpus
    /// instead of its allocated topic. 0 keeps proxy backgrounds purely
    /// topical; higher values blur the initial internal state of the pool so
    /// that no proxy is an automatic best match at step 1.
    pub proxy_background_mix_pct: u8,
    /// Gate true queries on blind session tokens: each user is issued a
    /// wallet at initialization and redeems one token per step; a user with
    /// an empty wallet abstains.
    pub require_tokens: bool,
    pub seed: u64,
    pub mode: ConditionalMode,
    pub input_features: usize,
    pub output_features: usize,
    pub pairs_per_topic: usize,
    pub profile: KeywordProfile,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            pool_size: 5,
            user_count: 10,
            user_diversity_pct: 0,
            proxy_diversity_pct: 0,
            sensitive_topics: 5,
            steps: 20,
            noise_ratio_pct: 0,
            lambda: 1.0,
            delta: 0.2,
            alpha_sweep: vec![0.25, 0.5, 0.75],
            select_alpha: 0.5,
            background_pairs: 20,
            proxy_background_mix_pct: 0,
            require_tokens: false,
            seed: 0,
            mode: ConditionalMode::Bayes,
            input_features: 30,
            output_features: 30,
            pairs_per_topic: 40,
            profile: KeywordProfile::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn corpus_spec(&self) -> SyntheticCorpusSpec {
        SyntheticCorpusSpec {
            input_features: self.input_features,
            output_features: self.output_features,
            sensitive_topics: self.sensitive_topics,
            pairs_per_topic: self.pairs_per_topic,
            profile: self.profile.clone(),
            seed: derive_seed(self.seed, 0),
        }
    }

    /// Enforce the calibrated experimental ranges.
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidConfig(msg));
        if !(3..=30).contains(&self.pool_size) {
            return fail(format!("pool_size {} outside 3..=30", self.pool_size));
        }
        if !(10..=120).contains(&self.user_count) {
            return fail(format!("user_count {} outside 10..=120", self.user_count));
        }
        for (name, pct) in [
            ("user_diversity_pct", self.user_diversity_pct),
            ("proxy_diversity_pct", self.proxy_diversity_pct),
        ] {
            if ![0, 25, 50, 75, 100].contains(&pct) {
                return fail(format!("{name} {pct} not one of 0, 25, 50, 75, 100"));
            }
        }
        if ![0, 50, 100, 200].contains(&self.noise_ratio_pct) {
            return fail(format!(
                "noise_ratio_pct {} not one of 0, 50, 100, 200",
                self.noise_ratio_pct
            ));
        }
        self.validate_structural()
    }

    /// Feasibility checks only, with no range constraints.
    pub fn validate_structural(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidConfig(msg));
        if self.pool_size == 0 || self.user_count == 0 {
            return fail("pool and user counts must be positive".into());
        }
        if self.sensitive_topics == 0 {
            return fail("at least one sensitive topic required".into());
        }
        if self.lambda.is_nan() || self.lambda <= 0.0 {
            return fail(format!("lambda must be positive, got {}", self.lambda));
        }
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return fail(format!("delta must lie in (0, 1], got {}", self.delta));
        }
        for alpha in self.alpha_sweep.iter().chain([&self.select_alpha]) {
            if !(*alpha > 0.0 && *alpha <= 1.0) {
                return fail(format!("alpha must lie in (0, 1], got {alpha}"));
            }
        }
        if self.background_pairs == 0 {
            return fail("background_pairs must be >= 1".into());
        }
        if self.proxy_background_mix_pct > 100 {
            return fail(format!(
                "proxy_background_mix_pct {} exceeds 100",
                self.proxy_background_mix_pct
            ));
        }
        self.corpus_spec().validate()
    }

    /// Config echo for metrics headers, in stable order.
    pub fn echo(&self) -> Vec<(String, String)> {
        let alpha_sweep = self
            .alpha_sweep
            .iter()
            .map(|a| a.to_string())
            .collect::<Vec<_>>()
            .join(",");
        vec![
            ("pool_size".into(), self.pool_size.to_string()),
            ("user_count".into(), self.user_count.to_string()),
            (
                "user_diversity_pct".into(),
                self.user_diversity_pct.to_string(),
            ),
            (
                "proxy_diversity_pct".into(),
                self.proxy_diversity_pct.to_string(),
            ),
            ("sensitive_topics".into(), self.sensitive_topics.to_string()),
            ("steps".into(), self.steps.to_string()),
            ("noise_ratio_pct".into(), self.noise_ratio_pct.to_string()),
            ("lambda".into(), self.lambda.to_string()),
            ("delta".into(), self.delta.to_string()),
            ("alpha_sweep".into(), alpha_sweep),
            ("select_alpha".into(), self.select_alpha.to_string()),
            ("background_pairs".into(), self.background_pairs.to_string()),
            (
                "proxy_background_mix_pct".into(),
                self.proxy_background_mix_pct.to_string(),
            ),
            ("require_tokens".into(), self.require_tokens.to_string()),
            ("seed".into(), self.seed.to_string()),
            ("estimator_mode".into(), self.mode.name().to_string()),
            ("input_features".into(), self.input_features.to_string()),
            ("output_features".into(), self.output_features.to_string()),
            ("pairs_per_topic".into(), self.pairs_per_topic.to_string()),
            (
                "profile_core_per_side".into(),
                self.profile.core_per_side.to_string(),
            ),
            (
                "profile_aux_per_side".into(),
                self.profile.aux_per_side.to_string(),
            ),
            (
                "profile_revealing_weight".into(),
                self.profile.revealing_weight.to_string(),
            ),
            (
                "profile_shared_weight".into(),
                self.profile.shared_weight.to_string(),
            ),
            (
                "profile_shared_pool".into(),
                self.profile.shared_pool.to_string(),
            ),
        ]
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn derive_seed(seed: u64, stream: u64) -> u64 {
    splitmix64(seed ^ splitmix64(stream))
}

fn derive_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, stream))
}

/// The personalising backend. Black box: the simulation only calls
/// [`BackendSystem::respond`]; internal counts never leave this struct.
#[derive(Debug, Clone)]
pub struct BackendSystem {
    /// Corpus item indices by topic label; the response inventory.
    items_by_topic: Vec<Vec<usize>>,
    /// Per proxy identity: (topic, input feature) presence counts over the
    /// interactions seen via that proxy.
    presence: Vec<Array2<f64>>,
    rng: ChaCha8Rng,
    fallback_count: usize,
}

impl BackendSystem {
    fn new(corpus: &Corpus, pool_size: usize, rng: ChaCha8Rng) -> Result<Self> {
        let items_by_topic: Vec<Vec<usize>> = corpus
            .topics
            .all()
            .map(|c| corpus.items_labelled(c))
            .collect();
        if items_by_topic[CATCH_ALL].is_empty() {
            return Err(Error::CorpusTooSmall(
                "no catch-all items to fall back on".into(),
            ));
        }
        let shape = (corpus.topics.len(), corpus.dict_x.len());
        Ok(Self {
            items_by_topic,
            presence: (0..pool_size).map(|_| Array2::zeros(shape)).collect(),
            rng,
            fallback_count: 0,
        })
    }

    /// Record an interaction observed via a proxy identity.
    fn observe(&mut self, proxy: ProxyId, labels: &[TopicId], input: &[FeatureId]) {
        let distinct: BTreeSet<FeatureId> = input.iter().copied().collect();
        for &c in labels {
            for &i in &distinct {
                self.presence[proxy][[c, i]] += 1.0;
            }
        }
    }

    /// Infer the topic of maximum likely interest for this proxy identity
    /// given the input, then sample an output labelled with it. Ties break
    /// to the lowest topic index; an empty inventory falls back to the
    /// catch-all topic (flagged).
    pub fn respond(
        &mut self,
        corpus: &Corpus,
        proxy: ProxyId,
        input: &[FeatureId],
    ) -> Result<(Vec<FeatureId>, TopicId, bool)> {
        if input.is_empty() {
            return Err(Error::EmptySequence);
        }
        if proxy >= self.presence.len() {
            return Err(Error::UnknownProxy(proxy));
        }
        let distinct: BTreeSet<FeatureId> = input.iter().copied().collect();
        let topic_count = corpus.topics.len();
        let mut best = CATCH_ALL;
        let mut best_score = f64::NEG_INFINITY;
        for c in 0..topic_count {
            let score: f64 = distinct
                .iter()
                .map(|&i| (self.presence[proxy][[c, i]] + BACKEND_LAMBDA).ln())
                .sum();
            if score > best_score {
                best_score = score;
                best = c;
            }
        }
        let mut fallback = false;
        let mut topic = best;
        if self.items_by_topic[topic].is_empty() {
            topic = CATCH_ALL;
            fallback = true;
            self.fallback_count += 1;
        }
        let inventory = &self.items_by_topic[topic];
        let item = &corpus.items[inventory[self.rng.gen_range(0..inventory.len())]];
        Ok((item.pair.output.clone(), best, fallback))
    }

    pub fn fallback_count(&self) -> usize {
        self.fallback_count
    }
}

/// A shared group identity routing traffic to the backend.
#[derive(Debug, Clone)]
pub struct ProxyAgent {
    pub id: ProxyId,
    pub topic: TopicId,
    pub sequence: SessionSequence,
    pub counts: CoOccurrenceCounts,
    /// Pairs carrying each label, for observer views.
    pub label_counts: Vec<u64>,
}

/// A simulated user.
#[derive(Debug, Clone)]
pub struct UserAgent {
    pub id: UserId,
    pub topic: TopicId,
    /// Background plus own true traffic; decoy responses are excluded.
    pub sequence: SessionSequence,
    pub counts: CoOccurrenceCounts,
    pub chosen: Option<ProxyId>,
    /// Proxies this user has routed true queries through.
    pub used_proxies: BTreeSet<ProxyId>,
    pub abstained_steps: usize,
    noise_budget: f64,
    rng: ChaCha8Rng,
}

/// What one user step did.
#[derive(Debug, Clone, Copy)]
pub struct StepOutcome {
    pub user: UserId,
    pub selected: Option<ProxyId>,
    /// For sensitive users that selected: did the chosen proxy carry the
    /// user's topic.
    pub correct: Option<bool>,
    pub abstained: bool,
    pub backend_fallback: bool,
}

/// An observer's materialized view of the interaction log.
#[derive(Debug, Clone)]
pub struct ObserverView {
    pub kind: crate::privacy::ObserverKind,
    pub view: SessionSequence,
}

/// Session-token accounting when `require_tokens` is on: the issuer's
/// public key, the spent-serial registry and each user's remaining wallet.
#[derive(Debug, Clone)]
pub struct TokenGate {
    pub issuer: IssuerPublicKey,
    pub registry: SpentRegistry,
    pub wallets: Vec<Vec<SignedToken>>,
}

/// One simulation instance.
#[derive(Debug, Clone)]
pub struct World {
    pub config: ScenarioConfig,
    pub corpus: Corpus,
    pub users: Vec<UserAgent>,
    pub proxies: Vec<ProxyAgent>,
    pub published: Vec<PublishedDistribution>,
    pub backend: BackendSystem,
    /// Proxy background plus all routed traffic, in arrival order.
    global_log: Vec<LabelledPair>,
    global_background_len: usize,
    global_label_counts: Vec<u64>,
    next_step_index: usize,
    round: usize,
    drop_tally: u64,
    /// Set when noise injection was requested but the pool has no other
    /// member to send decoys to.
    pub noise_skipped_single_pool: bool,
    pub token_gate: Option<TokenGate>,
}

/// Build a world from a freshly generated synthetic corpus.
pub fn init_world(config: &ScenarioConfig) -> Result<World> {
    config.validate_structural()?;
    let corpus = generate_corpus(&config.corpus_spec())?;
    init_world_with_corpus(corpus, config)
}

/// Build a world over an existing corpus (for example one loaded from TSV).
pub fn init_world_with_corpus(corpus: Corpus, config: &ScenarioConfig) -> Result<World> {
    if corpus.topics.sensitive_count() != config.sensitive_topics {
        return Err(Error::InvalidConfig(format!(
            "corpus has {} sensitive topics, config wants {}",
            corpus.topics.sensitive_count(),
            config.sensitive_topics
        )));
    }
    let topic_count = corpus.topics.len();
    let mut init_rng = derive_rng(config.seed, 1);
    let backend_rng = derive_rng(config.seed, 2);
    let mut backend = BackendSystem::new(&corpus, config.pool_size, backend_rng)?;

    let all_items: Vec<usize> = (0..corpus.items.len()).collect();
    let by_topic: Vec<Vec<usize>> = corpus
        .topics
        .all()
        .map(|c| corpus.items_labelled(c))
        .collect();
    let sample_background =
        |topic: TopicId, mixed: usize, rng: &mut ChaCha8Rng| -> Result<Vec<usize>> {
            let candidates = if topic == CATCH_ALL {
                &all_items
            } else {
                &by_topic[topic]
            };
            if candidates.is_empty() {
                return Err(Error::CorpusTooSmall(format!(
                    "no corpus items labelled for topic {topic}"
                )));
            }
            let topical = config.background_pairs - mixed.min(config.background_pairs);
            let mut picks: Vec<usize> = (0..topical)
                .map(|_| candidates[rng.gen_range(0..candidates.len())])
                .collect();
            picks.extend(
                (topical..config.background_pairs)
                    .map(|_| all_items[rng.gen_range(0..all_items.len())]),
            );
            Ok(picks)
        };

    let allocate = |index: usize, total_diverse: usize| -> TopicId {
        if index < total_diverse {
            CATCH_ALL
        } else {
            1 + (index - total_diverse) % config.sensitive_topics
        }
    };
    let diverse_proxies = config.pool_size * usize::from(config.proxy_diversity_pct) / 100;
    let diverse_users = config.user_count * usize::from(config.user_diversity_pct) / 100;

    let mut next_step_index = 0usize;
    let mut global_log = Vec::new();
    let mut global_label_counts = vec![0u64; topic_count];

    let proxy_mixed = config.background_pairs * usize::from(config.proxy_background_mix_pct) / 100;
    let mut proxies = Vec::with_capacity(config.pool_size);
    for id in 0..config.pool_size {
        let topic = allocate(id, diverse_proxies);
        let mut counts =
            CoOccurrenceCounts::empty(topic_count, corpus.dict_x.len(), corpus.dict_y.len());
        let mut label_counts = vec![0u64; topic_count];
        let mut background = Vec::with_capacity(config.background_pairs);
        for item_idx in sample_background(topic, proxy_mixed, &mut init_rng)? {
            let source = &corpus.items[item_idx];
            next_step_index += 1;
            let mut pair = source.pair.clone();
            pair.step_index = next_step_index;
            pair.via_proxy = Some(id);
            let item = LabelledPair {
                pair,
                labels: source.labels.clone(),
            };
            counts.add_pair(&item);
            for &c in &item.labels {
                label_counts[c] += 1;
                global_label_counts[c] += 1;
            }
            backend.observe(id, &item.labels, &item.pair.input);
            global_log.push(item.clone());
            background.push(item);
        }
        proxies.push(ProxyAgent {
            id,
            topic,
            sequence: SessionSequence::from_background(background),
            counts,
            label_counts,
        });
    }
    let global_background_len = global_log.len();

    let mut users = Vec::with_capacity(config.user_count);
    for id in 0..config.user_count {
        let topic = allocate(id, diverse_users);
        let mut counts =
            CoOccurrenceCounts::empty(topic_count, corpus.dict_x.len(), corpus.dict_y.len());
        let mut background = Vec::with_capacity(config.background_pairs);
        for item_idx in sample_background(topic, 0, &mut init_rng)? {
            let source = &corpus.items[item_idx];
            next_step_index += 1;
            let mut pair = source.pair.clone();
            pair.step_index = next_step_index;
            pair.origin_user = Some(id);
            let item = LabelledPair {
                pair,
                labels: source.labels.clone(),
            };
            counts.add_pair(&item);
            background.push(item);
        }
        users.push(UserAgent {
            id,
            topic,
            sequence: SessionSequence::from_background(background),
            counts,
            chosen: None,
            used_proxies: BTreeSet::new(),
            abstained_steps: 0,
            noise_budget: 0.0,
            rng: derive_rng(config.seed, 100 + id as u64),
        });
    }

    let published = proxies
        .iter()
        .map(|p| {
            let smoothed = laplace_smooth(&p.counts, config.lambda)?;
            PublishedDistribution::from_counts(&smoothed, p.id, 0)
        })
        .collect::<Result<Vec<_>>>()?;

    let token_gate = if config.require_tokens {
        let mut token_rng = derive_rng(config.seed, 3);
        let key = generate_issuer_key(&mut token_rng);
        let mut registry = SpentRegistry::default();
        let budget = config.steps.clamp(1, registry.window_limit() as usize);
        let mut wallets = Vec::with_capacity(config.user_count);
        for user in 0..config.user_count {
            let mut wallet = Vec::with_capacity(budget);
            for (mut token, blinded) in
                mint_and_blind(&mut registry, user, budget, key.public(), &mut token_rng)?
            {
                let signature = sign_blinded(&key, &blinded)?;
                wallet.push(token.unblind(key.public(), &signature)?);
            }
            wallets.push(wallet);
        }
        Some(TokenGate {
            issuer: key.public().clone(),
            registry,
            wallets,
        })
    } else {
        None
    };

    Ok(World {
        config: config.clone(),
        corpus,
        users,
        proxies,
        published,
        backend,
        global_log,
        global_background_len,
        global_label_counts,
        next_step_index,
        round: 0,
        drop_tally: 0,
        noise_skipped_single_pool: false,
        token_gate,
    })
}

impl World {
    pub fn round(&self) -> usize {
        self.round
    }

    pub fn global_log(&self) -> &[LabelledPair] {
        &self.global_log
    }

    pub fn drop_tally(&self) -> u64 {
        self.drop_tally
    }

    fn topic_count(&self) -> usize {
        self.corpus.topics.len()
    }

    /// The user's private estimates: smoothed pair distribution plus the
    /// topic-given-pair conditional in the configured mode.
    fn user_estimates(&self, user: UserId) -> Result<(TopicConditionalTable, Array2<f64>)> {
        let counts = &self.users[user].counts;
        let smoothed = laplace_smooth(counts, self.config.lambda)?;
        let pair_dist = pair_given_sequence(&smoothed)?;
        let table = topic_given_pair(counts, self.config.mode);
        Ok((table, pair_dist))
    }

    fn sensitive_sets(
        &self,
        table: &TopicConditionalTable,
        alpha: f64,
    ) -> Result<Vec<SensitiveKeywordSet>> {
        self.corpus
            .topics
            .sensitive()
            .map(|c| build_sensitive_set(table, c, alpha))
            .collect()
    }

    /// Input keywords the user draws true queries from.
    fn query_keywords(
        &self,
        user: UserId,
        table: &TopicConditionalTable,
    ) -> Result<Vec<FeatureId>> {
        let topic = self.users[user].topic;
        let mut keywords = BTreeSet::new();
        if topic == CATCH_ALL {
            for c in self.corpus.topics.sensitive() {
                let set = build_sensitive_set(table, c, QUERY_ALPHA)?;
                keywords.extend(set.pairs.iter().map(|&(i, _)| i));
            }
        } else {
            let set = build_sensitive_set(table, topic, QUERY_ALPHA)?;
            keywords.extend(set.pairs.iter().map(|&(i, _)| i));
        }
        Ok(keywords.into_iter().collect())
    }

    /// Append a routed interaction to the proxy, global and backend state,
    /// and republish the touched proxy.
    fn append_routed(&mut self, proxy: ProxyId, item: LabelledPair) -> Result<()> {
        self.backend.observe(proxy, &item.labels, &item.pair.input);
        let agent = &mut self.proxies[proxy];
        agent.counts.add_pair(&item);
        for &c in &item.labels {
            agent.label_counts[c] += 1;
            self.global_label_counts[c] += 1;
        }
        agent.sequence.push(item.clone());
        self.global_log.push(item);
        let smoothed = laplace_smooth(&agent.counts, self.config.lambda)?;
        self.published[proxy] = PublishedDistribution::from_counts(&smoothed, proxy, self.round)?;
        Ok(())
    }

    /// One user turn: re-select a proxy, issue a true query, route the
    /// response, update internal states.
    pub fn user_step(&mut self, user: UserId) -> Result<StepOutcome> {
        if let Some(gate) = &mut self.token_gate {
            let redeemed = gate.wallets[user]
                .pop()
                .map(|token| gate.registry.redeem(&gate.issuer, &token).is_accepted())
                .unwrap_or(false);
            if !redeemed {
                self.users[user].chosen = None;
                self.users[user].abstained_steps += 1;
                return Ok(StepOutcome {
                    user,
                    selected: None,
                    correct: None,
                    abstained: true,
                    backend_fallback: false,
                });
            }
        }
        let (table, pair_dist) = self.user_estimates(user)?;
        let theta = self.sensitive_sets(&table, self.config.select_alpha)?;
        let outcome = select_proxy(
            &table,
            &pair_dist,
            &theta,
            &self.published,
            self.config.delta,
        )?;

        let Some(chosen) = outcome.chosen else {
            self.users[user].chosen = None;
            self.users[user].abstained_steps += 1;
            return Ok(StepOutcome {
                user,
                selected: None,
                correct: None,
                abstained: true,
                backend_fallback: false,
            });
        };

        let keywords = self.query_keywords(user, &table)?;
        if keywords.is_empty() {
            self.users[user].chosen = None;
            self.users[user].abstained_steps += 1;
            return Ok(StepOutcome {
                user,
                selected: None,
                correct: None,
                abstained: true,
                backend_fallback: false,
            });
        }
        let keyword = {
            let agent = &mut self.users[user];
            agent.chosen = Some(chosen);
            agent.used_proxies.insert(chosen);
            keywords[agent.rng.gen_range(0..keywords.len())]
        };

        let (output, _, fallback) = self.backend.respond(&self.corpus, chosen, &[keyword])?;
        self.next_step_index += 1;
        let pair = InputOutputPair {
            input: vec![keyword],
            output,
            origin_user: Some(user),
            via_proxy: Some(chosen),
            step_index: self.next_step_index,
        };
        let labels = label_pair(&self.corpus.rule, &pair);
        let item = LabelledPair { pair, labels };
        self.append_routed(chosen, item.clone())?;
        let agent = &mut self.users[user];
        agent.counts.add_pair(&item);
        agent.sequence.push(item);

        let correct = if self.users[user].topic == CATCH_ALL {
            None
        } else {
            Some(self.proxies[chosen].topic == self.users[user].topic)
        };
        Ok(StepOutcome {
            user,
            selected: Some(chosen),
            correct,
            abstained: false,
            backend_fallback: fallback,
        })
    }

    /// Issue decoy queries about other topics to every pool member except
    /// the user's chosen proxy. Decoy traffic lands in proxy logs and the
    /// observer views but never in the user's own session. Returns the
    /// number of decoy queries sent.
    pub fn inject_noise(&mut self, user: UserId) -> Result<usize> {
        let ratio = f64::from(self.config.noise_ratio_pct) / 100.0;
        if ratio <= 0.0 {
            return Ok(0);
        }
        if self.config.pool_size == 1 {
            self.noise_skipped_single_pool = true;
            return Ok(0);
        }
        let Some(chosen) = self.users[user].chosen else {
            return Ok(0);
        };
        let own_topic = self.users[user].topic;
        let noise_topics: Vec<TopicId> = self
            .corpus
            .topics
            .sensitive()
            .filter(|&c| c != own_topic)
            .collect();
        if noise_topics.is_empty() {
            return Ok(0);
        }

        // Deterministic fractional accumulator: ratio 0.5 fires one decoy
        // round every second true query.
        self.users[user].noise_budget += ratio;
        let mut sent = 0;
        while self.users[user].noise_budget >= 1.0 {
            self.users[user].noise_budget -= 1.0;
            for proxy in 0..self.config.pool_size {
                if proxy == chosen {
                    continue;
                }
                let keyword = {
                    let agent = &mut self.users[user];
                    let topic = noise_topics[agent.rng.gen_range(0..noise_topics.len())];
                    let keywords = self.corpus.rule.input_keywords(topic);
                    if keywords.is_empty() {
                        continue;
                    }
                    keywords[agent.rng.gen_range(0..keywords.len())]
                };
                let (output, _, _) = self.backend.respond(&self.corpus, proxy, &[keyword])?;
                self.next_step_index += 1;
                let pair = InputOutputPair {
                    input: vec![keyword],
                    output,
                    origin_user: Some(user),
                    via_proxy: Some(proxy),
                    step_index: self.next_step_index,
                };
                let labels = label_pair(&self.corpus.rule, &pair);
                self.append_routed(proxy, LabelledPair { pair, labels })?;
                sent += 1;
            }
        }
        Ok(sent)
    }

    /// Materialize an observer's view of the log.
    pub fn observer_view(&self, kind: crate::privacy::ObserverKind) -> Result<ObserverView> {
        let view = match &kind {
            crate::privacy::ObserverKind::Global => {
                SessionSequence::from_parts(self.global_log.clone(), self.global_background_len)
            }
            crate::privacy::ObserverKind::Proxy(ids) => {
                for &p in ids {
                    if p >= self.proxies.len() {
                        return Err(Error::UnknownProxy(p));
                    }
                }
                let mut pairs = Vec::new();
                let mut background = 0usize;
                for (idx, item) in self.global_log.iter().enumerate() {
                    let via = item.pair.via_proxy.expect("routed pairs carry a proxy");
                    if ids.contains(&via) {
                        if idx < self.global_background_len {
                            background += 1;
                        }
                        pairs.push(item.clone());
                    }
                }
                SessionSequence::from_parts(pairs, background)
            }
        };
        Ok(ObserverView { kind, view })
    }

    /// Deniability of one user against the summed label counts of a view:
    /// the share of the view labelled with the user's topic, or the
    /// worst-case sensitive topic for catch-all users.
    fn deniability_from_counts(&self, user: &UserAgent, counts: &[u64], total: u64) -> Option<f64> {
        if total == 0 {
            return None;
        }
        let share = |c: TopicId| counts[c] as f64 / total as f64;
        if user.topic != CATCH_ALL {
            return Some(share(user.topic));
        }
        self.corpus
            .topics
            .sensitive()
            .map(share)
            .fold(None, |acc: Option<f64>, v| {
                Some(acc.map_or(v, |a| a.max(v)))
            })
    }

    fn mean(values: &[f64]) -> Option<f64> {
        if values.is_empty() {
            None
        } else {
            Some(values.iter().sum::<f64>() / values.len() as f64)
        }
    }

    /// Compute the metric row for the current state.
    fn metrics_row(
        &self,
        run_id: &str,
        accuracy: Option<f64>,
        abstain_count: usize,
        noise_queries: usize,
    ) -> Result<MetricsRecord> {
        let topic_count = self.topic_count();
        // Topic distribution of every proxy log, shared across users.
        let proxy_dists: Vec<Option<TopicDistribution>> = self
            .proxies
            .iter()
            .map(|p| {
                topic_distribution(
                    &p.sequence,
                    &self.corpus.rule,
                    topic_count,
                    DistributionSource::ViaProxy(p.id),
                )
                .ok()
            })
            .collect();

        let mut utilities = Vec::new();
        let mut pd_global = Vec::new();
        let mut pd_proxy = Vec::new();
        let mut published: Vec<Vec<f64>> = vec![Vec::new(); self.config.alpha_sweep.len()];
        let global_total: u64 = self.global_log.len() as u64;

        for user in &self.users {
            if let Some(v) =
                self.deniability_from_counts(user, &self.global_label_counts, global_total)
            {
                pd_global.push(v);
            }
            if !user.used_proxies.is_empty() {
                let mut counts = vec![0u64; topic_count];
                let mut total = 0u64;
                for &p in &user.used_proxies {
                    let agent = &self.proxies[p];
                    total += agent.sequence.len() as u64;
                    for (c, n) in agent.label_counts.iter().enumerate() {
                        counts[c] += n;
                    }
                }
                if let Some(v) = self.deniability_from_counts(user, &counts, total) {
                    pd_proxy.push(v);
                }
            }
            let Some(chosen) = user.chosen else { continue };
            if let (Ok(user_dist), Some(proxy_dist)) = (
                topic_distribution(
                    &user.sequence,
                    &self.corpus.rule,
                    topic_count,
                    DistributionSource::UserDirect,
                ),
                proxy_dists[chosen].as_ref(),
            ) {
                utilities.push(utility_loss(&user_dist, proxy_dist)?);
            }
            let table = topic_given_pair(&user.counts, self.config.mode);
            for (slot, &alpha) in self.config.alpha_sweep.iter().enumerate() {
                let theta = self.sensitive_sets(&table, alpha)?;
                let estimate_for = |c: TopicId| -> Result<f64> {
                    Ok(
                        crate::privacy::deniability_published(&theta, &self.published[chosen], c)?
                            .value,
                    )
                };
                let value = if user.topic != CATCH_ALL {
                    estimate_for(user.topic)?
                } else {
                    let mut worst = 0.0f64;
                    for c in self.corpus.topics.sensitive() {
                        worst = worst.max(estimate_for(c)?);
                    }
                    worst
                };
                published[slot].push(value);
            }
        }

        Ok(MetricsRecord {
            run_id: run_id.to_string(),
            seed: self.config.seed,
            step: self.round,
            selection_accuracy: accuracy,
            utility_loss: Self::mean(&utilities),
            deniability_direct_global: Self::mean(&pd_global),
            deniability_direct_proxy: Self::mean(&pd_proxy),
            deniability_published: published.iter().map(|values| Self::mean(values)).collect(),
            abstain_count,
            noise_queries,
            drop_tally: self.drop_tally,
        })
    }

    /// Advance the world by one full round: every user steps in id order,
    /// decoys included, then metrics are recorded.
    pub fn run_round(&mut self, run_id: &str) -> Result<MetricsRecord> {
        self.round += 1;
        let mut abstains = 0usize;
        let mut noise = 0usize;
        let mut selected_sensitive = 0usize;
        let mut correct = 0usize;
        for user in 0..self.users.len() {
            let outcome = self.user_step(user)?;
            if outcome.abstained {
                abstains += 1;
            }
            if let Some(is_correct) = outcome.correct {
                selected_sensitive += 1;
                if is_correct {
                    correct += 1;
                }
            }
            noise += self.inject_noise(user)?;
        }
        let accuracy = if selected_sensitive > 0 {
            Some(correct as f64 / selected_sensitive as f64)
        } else {
            None
        };
        self.metrics_row(run_id, accuracy, abstains, noise)
    }

    /// Initialization metrics row (step 0).
    pub fn initial_metrics(&self, run_id: &str) -> Result<MetricsRecord> {
        self.metrics_row(run_id, None, 0, 0)
    }
}

fn drive(mut world: World) -> Result<MetricsSeries> {
    let config = world.config.clone();
    let run_id = format!("run-{}", config.seed);
    let mut records = vec![world.initial_metrics(&run_id)?];
    for _ in 0..config.steps {
        records.push(world.run_round(&run_id)?);
    }
    Ok(MetricsSeries {
        config_echo: config.echo(),
        alpha_sweep: config.alpha_sweep,
        records,
    })
}

/// Run a full scenario: build the world, run `steps` rounds, return the
/// per-step metric series (step 0 is the initialization row).
pub fn run_scenario(config: &ScenarioConfig) -> Result<MetricsSeries> {
    config.validate()?;
    run_scenario_unchecked(config)
}

/// Run a scenario over an existing corpus instead of a generated one.
pub fn run_scenario_with_corpus(corpus: Corpus, config: &ScenarioConfig) -> Result<MetricsSeries> {
    config.validate()?;
    drive(init_world_with_corpus(corpus, config)?)
}

/// [`run_scenario`] without the range validation, for worlds outside the
/// calibrated envelope.
pub fn run_scenario_unchecked(config: &ScenarioConfig) -> Result<MetricsSeries> {
    drive(init_world(config)?)
}
