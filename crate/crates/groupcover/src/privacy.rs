//! Plausible deniability: an observer holding a view of the interaction log
//! should not be able to associate a user's traffic with a sensitive topic
//! with probability above the user-chosen bound `delta`.
//!
//! Two estimators are provided. The direct estimator counts topic labels in
//! an observed sequence. The published estimator needs no access to raw
//! logs: it combines a user's private sensitive keyword sets with the joint
//! keyword-pair distribution each proxy publishes.

use std::collections::BTreeSet;

use crate::corpus::{FeatureId, LabellingRule, ProxyId, SessionSequence, TopicId};
use crate::error::{Error, Result};
use crate::estimators::{PublishedDistribution, TopicConditionalTable};

/// The keyword pairs a user treats as revealing for one sensitive topic:
/// those whose topic-conditional estimate strictly exceeds `alpha`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SensitiveKeywordSet {
    pub topic: TopicId,
    pub pairs: BTreeSet<(FeatureId, FeatureId)>,
    alpha_key: u64,
}

impl SensitiveKeywordSet {
    pub fn alpha(&self) -> f64 {
        f64::from_bits(self.alpha_key)
    }
}

/// Who is looking at the log.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ObserverKind {
    /// Sees every interaction in the system.
    Global,
    /// Sees the logs of a specific set of proxy agents.
    Proxy(BTreeSet<ProxyId>),
}

/// How a deniability value was estimated.
#[derive(Debug, Clone, PartialEq)]
pub enum EstimatorKind {
    /// Label counting over an observed sequence.
    Direct,
    /// Sensitive keyword mass under a published distribution.
    Published { alpha: f64 },
}

/// An estimated deniability level for one topic under one observer.
#[derive(Debug, Clone, PartialEq)]
pub struct DeniabilityEstimate {
    pub topic: TopicId,
    pub value: f64,
    pub observer: ObserverKind,
    pub estimator: EstimatorKind,
    pub step: usize,
    /// Set when the published estimator saw no sensitive keyword mass at
    /// all; the value is then reported as 0.
    pub no_sensitive_mass: bool,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidAlpha(alpha));
    }
    Ok(())
}

/// Select the keyword pairs whose conditional for `topic` strictly exceeds
/// `alpha`. Monotone: a lower threshold yields a superset.
pub fn build_sensitive_set(
    table: &TopicConditionalTable,
    topic: TopicId,
    alpha: f64,
) -> Result<SensitiveKeywordSet> {
    check_alpha(alpha)?;
    let matrix = table.table(topic)?;
    let mut pairs = BTreeSet::new();
    for ((i, j), &value) in matrix.indexed_iter() {
        if value > alpha {
            pairs.insert((i, j));
        }
    }
    Ok(SensitiveKeywordSet {
        topic,
        pairs,
        alpha_key: alpha.to_bits(),
    })
}

/// Fraction of the observed sequence labelled with `topic`: the observer's
/// best direct estimate of how strongly the view ties to that topic.
pub fn deniability_direct(
    view: &SessionSequence,
    rule: &LabellingRule,
    topic: TopicId,
    observer: ObserverKind,
) -> Result<DeniabilityEstimate> {
    if view.is_empty() {
        return Err(Error::EmptySequence);
    }
    let matching = view
        .iter()
        .filter(|item| crate::corpus::label_pair(rule, &item.pair).contains(&topic))
        .count();
    let step = view
        .iter()
        .map(|item| item.pair.step_index)
        .max()
        .unwrap_or(0);
    Ok(DeniabilityEstimate {
        topic,
        value: matching as f64 / view.len() as f64,
        observer,
        estimator: EstimatorKind::Direct,
        step,
        no_sensitive_mass: false,
    })
}

/// Estimate deniability for `topic` from a proxy's published distribution:
/// the share of published sensitive keyword mass that falls on this topic's
/// keyword pairs. Returns 0 (flagged) when no sensitive mass was observed.
pub fn deniability_published(
    theta: &[SensitiveKeywordSet],
    published: &PublishedDistribution,
    topic: TopicId,
) -> Result<DeniabilityEstimate> {
    let set = theta
        .iter()
        .find(|set| set.topic == topic)
        .ok_or(Error::UnknownTopic(topic))?;
    let mass = |pairs: &BTreeSet<(FeatureId, FeatureId)>| -> f64 {
        pairs.iter().map(|&(i, j)| published.matrix[[i, j]]).sum()
    };
    let numerator = mass(&set.pairs);
    let denominator: f64 = theta.iter().map(|s| mass(&s.pairs)).sum();
    // An empty keyword set sums to IEEE -0.0; `+ 0.0` restores the sign.
    let (value, no_sensitive_mass) = if denominator > 0.0 {
        (numerator / denominator + 0.0, false)
    } else {
        (0.0, true)
    };
    Ok(DeniabilityEstimate {
        topic,
        value,
        observer: ObserverKind::Proxy(BTreeSet::from([published.proxy])),
        estimator: EstimatorKind::Published { alpha: set.alpha() },
        step: published.step,
        no_sensitive_mass,
    })
}

/// Pass iff the estimated value is at most `delta` (boundary inclusive).
pub fn deniability_check(estimate: &DeniabilityEstimate, delta: f64) -> Result<bool> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::InvalidDelta(delta));
    }
    Ok(estimate.value <= delta)
}

/// Bound required of the full-system conditional when the observer only
/// covers a `pi` fraction of the log: an observer with more localised data
/// is the stronger threat, so the bound tightens to `delta * pi`.
pub fn locality_adjusted_bound(delta: f64, pi: f64) -> Result<f64> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::InvalidDelta(delta));
    }
    if !(pi > 0.0 && pi <= 1.0) {
        return Err(Error::InvalidCoverage(pi));
    }
    Ok(delta * pi)
}

/// Smallest additive slack `gamma` for which a deniability level `delta`
/// implies (epsilon, gamma)-differential privacy of the sensitive-labelling
/// query: `max(delta, 1 - e^epsilon * (1 - delta))`.
pub fn dp_gamma_bound(delta: f64, epsilon: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&delta) {
        return Err(Error::InvalidDelta(delta));
    }
    if epsilon < 0.0 {
        return Err(Error::InvalidEpsilon(epsilon));
    }
    Ok(delta.max(1.0 - epsilon.exp() * (1.0 - delta)))
}

/// Probability with which deniability level `delta` prevents
/// re-identification of sensitive interactions: `1 - delta`.
pub fn reidentification_bound(delta: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&delta) {
        return Err(Error::InvalidDelta(delta));
    }
    Ok(1.0 - delta)
}
