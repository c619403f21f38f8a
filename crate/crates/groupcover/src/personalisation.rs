//! User-side proxy selection and utility accounting.
//!
//! A user compares its private topic-conditional and keyword-pair estimates
//! against each proxy's published distribution, scores every proxy with the
//! absolute per-topic mixture differences, filters out proxies whose
//! published deniability estimate exceeds the user's bound for any sensitive
//! topic, and picks the feasible proxy with the smallest objective. Ties
//! break toward the lowest proxy id; an empty feasible set is a valid
//! outcome, not an error.

use ndarray::Array2;

use crate::corpus::{label_pair, LabellingRule, ProxyId, SessionSequence, TopicId};
use crate::error::{Error, Result};
use crate::estimators::{PublishedDistribution, TopicConditionalTable};
use crate::privacy::{deniability_check, deniability_published, SensitiveKeywordSet};

/// Where a topic distribution was measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistributionSource {
    UserDirect,
    ViaProxy(ProxyId),
}

/// Per-topic probabilities of observing an interaction labelled with each
/// topic in a session.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicDistribution {
    pub probs: Vec<f64>,
    pub source: DistributionSource,
    pub step: usize,
}

/// Label-count ratios over a session. Multi-label pairs contribute
/// fractionally, `1 / (number of labels)` to each of their topics.
pub fn topic_distribution(
    sequence: &SessionSequence,
    rule: &LabellingRule,
    topic_count: usize,
    source: DistributionSource,
) -> Result<TopicDistribution> {
    if sequence.is_empty() {
        return Err(Error::EmptySequence);
    }
    let mut probs = vec![0.0; topic_count];
    let mut step = 0;
    for item in sequence.iter() {
        let labels = label_pair(rule, &item.pair);
        let weight = 1.0 / labels.len() as f64;
        for &c in &labels {
            probs[c] += weight;
        }
        step = step.max(item.pair.step_index);
    }
    let total = sequence.len() as f64;
    for p in &mut probs {
        *p /= total;
    }
    Ok(TopicDistribution {
        probs,
        source,
        step,
    })
}

/// Total variation distance between two topic distributions:
/// `(1/2) * sum_c |user_c - proxy_c|`, in `[0, 1]`.
pub fn utility_loss(user: &TopicDistribution, proxy: &TopicDistribution) -> Result<f64> {
    if user.probs.len() != proxy.probs.len() {
        return Err(Error::TopicMismatch(user.probs.len(), proxy.probs.len()));
    }
    Ok(user
        .probs
        .iter()
        .zip(proxy.probs.iter())
        .map(|(a, b)| (a - b).abs())
        .sum::<f64>()
        / 2.0)
}

/// A proxy's evaluation against one user's state.
#[derive(Debug, Clone)]
pub struct ProxyScore {
    pub proxy: ProxyId,
    /// Sum over topics of absolute mixture differences; non-negative.
    pub objective: f64,
    pub per_topic: Vec<f64>,
    pub feasible: bool,
    /// Published deniability estimate per sensitive topic used for the
    /// constraint, as `(topic, value)`.
    pub deniability: Vec<(TopicId, f64)>,
}

/// Evaluate the selection objective of one proxy from the user's private
/// estimates and the proxy's published distribution only.
///
/// Per topic `c` the contribution is `sum_ij a_c(i,j) * (b(i,j) - m(i,j))`
/// where `a_c` is the user's topic-given-pair conditional, `b` the user's own
/// pair distribution and `m` the published one; the objective is the sum of
/// absolute per-topic contributions.
pub fn proxy_objective(
    user_conditionals: &TopicConditionalTable,
    user_pair_dist: &Array2<f64>,
    published: &PublishedDistribution,
) -> Result<(Vec<f64>, f64)> {
    if user_pair_dist.dim() != published.matrix.dim() {
        return Err(Error::ShapeMismatch {
            expected: user_pair_dist.dim(),
            got: published.matrix.dim(),
        });
    }
    let difference = user_pair_dist - &published.matrix;
    let mut per_topic = Vec::with_capacity(user_conditionals.topic_count());
    for c in 0..user_conditionals.topic_count() {
        let membership = user_conditionals.table(c)?;
        let contribution: f64 = membership
            .iter()
            .zip(difference.iter())
            .map(|(&a, &d)| a * d)
            .sum();
        per_topic.push(contribution);
    }
    let total = per_topic.iter().map(|v| v.abs()).sum();
    Ok((per_topic, total))
}

/// Outcome of a selection pass over the pool.
#[derive(Debug, Clone)]
pub struct SelectionOutcome {
    pub chosen: Option<ProxyId>,
    pub scores: Vec<ProxyScore>,
}

/// Enumerate the pool, keep proxies whose published deniability estimate is
/// within `delta` for every sensitive topic, and return the feasible proxy
/// with the smallest objective (lowest id on ties). `None` when no proxy
/// satisfies the constraint.
pub fn select_proxy(
    user_conditionals: &TopicConditionalTable,
    user_pair_dist: &Array2<f64>,
    theta: &[SensitiveKeywordSet],
    pool: &[PublishedDistribution],
    delta: f64,
) -> Result<SelectionOutcome> {
    if pool.is_empty() {
        return Err(Error::EmptyPool);
    }
    let mut scores = Vec::with_capacity(pool.len());
    for published in pool {
        let (per_topic, objective) = proxy_objective(user_conditionals, user_pair_dist, published)?;
        let mut feasible = true;
        let mut deniability = Vec::with_capacity(theta.len());
        for set in theta {
            let estimate = deniability_published(theta, published, set.topic)?;
            if !deniability_check(&estimate, delta)? {
                feasible = false;
            }
            deniability.push((set.topic, estimate.value));
        }
        scores.push(ProxyScore {
            proxy: published.proxy,
            objective,
            per_topic,
            feasible,
            deniability,
        });
    }
    let chosen = scores
        .iter()
        .filter(|s| s.feasible)
        .min_by(|a, b| {
            a.objective
                .partial_cmp(&b.objective)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.proxy.cmp(&b.proxy))
        })
        .map(|s| s.proxy);
    Ok(SelectionOutcome { chosen, scores })
}
