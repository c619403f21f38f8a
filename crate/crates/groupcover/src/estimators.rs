//! Co-occurrence count statistics and the probability estimators built on
//! them.
//!
//! For a labelled session, `N_c[i][j]` accumulates the product of input and
//! output occurrence counts of features `(i, j)` over pairs labelled `c`
//! (equivalently the entry of `A_c^T B_c` for the per-topic count-vector
//! matrices), and `O_c[i][j]` counts the pairs labelled `c` in which both
//! features occur at least once. All estimators are ratios over these two
//! families of matrices; Laplace smoothing adds a constant to every `N` cell
//! so that downstream ratios are defined on sparse data.

use ndarray::Array2;

use crate::corpus::{
    label_pair, Dictionary, LabelledPair, LabellingRule, ProxyId, SessionSequence, TopicId,
    TopicSet,
};
use crate::error::{Error, Result};

/// Normalization of the topic-given-pair conditional.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ConditionalMode {
    /// Divide `O_c[i][j]` by the total presence mass of topic `c`.
    #[default]
    TopicMass,
    /// Divide `O_c[i][j]` by the presence mass of the pair `(i, j)` across
    /// all topics, so the entries for a pair sum to 1 where observed.
    Bayes,
}

impl ConditionalMode {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "topic-mass" => Some(Self::TopicMass),
            "bayes" => Some(Self::Bayes),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::TopicMass => "topic-mass",
            Self::Bayes => "bayes",
        }
    }
}

/// Per-topic count and presence co-occurrence matrices.
#[derive(Debug, Clone)]
pub struct CoOccurrenceCounts {
    topic_count: usize,
    input_len: usize,
    output_len: usize,
    n: Vec<Array2<f64>>,
    o: Vec<Array2<u32>>,
    n_topic_totals: Vec<f64>,
    o_topic_totals: Vec<u64>,
    smoothing: Option<f64>,
}

impl CoOccurrenceCounts {
    pub fn empty(topic_count: usize, input_len: usize, output_len: usize) -> Self {
        Self {
            topic_count,
            input_len,
            output_len,
            n: (0..topic_count)
                .map(|_| Array2::zeros((input_len, output_len)))
                .collect(),
            o: (0..topic_count)
                .map(|_| Array2::zeros((input_len, output_len)))
                .collect(),
            n_topic_totals: vec![0.0; topic_count],
            o_topic_totals: vec![0; topic_count],
            smoothing: None,
        }
    }

    /// Single-writer incremental update: fold one labelled pair in.
    pub fn add_pair(&mut self, item: &LabelledPair) {
        debug_assert!(self.smoothing.is_none(), "cannot update smoothed counts");
        let in_counts = sparse_counts(&item.pair.input);
        let out_counts = sparse_counts(&item.pair.output);
        for &c in &item.labels {
            debug_assert!(c < self.topic_count);
            for &(i, ci) in &in_counts {
                for &(j, cj) in &out_counts {
                    let product = f64::from(ci) * f64::from(cj);
                    self.n[c][[i, j]] += product;
                    self.n_topic_totals[c] += product;
                    self.o[c][[i, j]] += 1;
                    self.o_topic_totals[c] += 1;
                }
            }
        }
    }

    pub fn topic_count(&self) -> usize {
        self.topic_count
    }

    pub fn input_len(&self) -> usize {
        self.input_len
    }

    pub fn output_len(&self) -> usize {
        self.output_len
    }

    pub fn n(&self, topic: TopicId) -> Result<&Array2<f64>> {
        self.n.get(topic).ok_or(Error::UnknownTopic(topic))
    }

    pub fn o(&self, topic: TopicId) -> Result<&Array2<u32>> {
        self.o.get(topic).ok_or(Error::UnknownTopic(topic))
    }

    pub fn n_topic_total(&self, topic: TopicId) -> Result<f64> {
        self.n_topic_totals
            .get(topic)
            .copied()
            .ok_or(Error::UnknownTopic(topic))
    }

    pub fn n_total(&self) -> f64 {
        self.n_topic_totals.iter().sum()
    }

    pub fn o_topic_total(&self, topic: TopicId) -> Result<u64> {
        self.o_topic_totals
            .get(topic)
            .copied()
            .ok_or(Error::UnknownTopic(topic))
    }

    pub fn o_total(&self) -> u64 {
        self.o_topic_totals.iter().sum()
    }

    pub fn smoothing(&self) -> Option<f64> {
        self.smoothing
    }

    pub fn is_smoothed(&self) -> bool {
        self.smoothing.is_some()
    }

    fn cells(&self) -> f64 {
        self.input_len as f64 * self.output_len as f64
    }
}

fn sparse_counts(features: &[usize]) -> Vec<(usize, u32)> {
    let mut sorted = features.to_vec();
    sorted.sort_unstable();
    let mut counts = Vec::new();
    for id in sorted {
        match counts.last_mut() {
            Some(&mut (last, ref mut c)) if last == id => *c += 1,
            _ => counts.push((id, 1)),
        }
    }
    counts
}

/// Build counts for a whole session, labelling every pair with the rule.
pub fn build_counts(
    sequence: &SessionSequence,
    rule: &LabellingRule,
    topics: &TopicSet,
    dict_x: &Dictionary,
    dict_y: &Dictionary,
) -> Result<CoOccurrenceCounts> {
    if sequence.is_empty() {
        return Err(Error::EmptySequence);
    }
    let mut counts = CoOccurrenceCounts::empty(topics.len(), dict_x.len(), dict_y.len());
    for item in sequence.iter() {
        let labels = label_pair(rule, &item.pair);
        counts.add_pair(&LabelledPair {
            pair: item.pair.clone(),
            labels,
        });
    }
    Ok(counts)
}

/// Add `lambda` to every `N` cell of every topic. Presence matrices are left
/// untouched; their zero cells are meaningful to the conditionals.
pub fn laplace_smooth(counts: &CoOccurrenceCounts, lambda: f64) -> Result<CoOccurrenceCounts> {
    if lambda.is_nan() || lambda <= 0.0 {
        return Err(Error::InvalidSmoothing(lambda));
    }
    if counts.is_smoothed() {
        return Err(Error::AlreadySmoothed);
    }
    let mut smoothed = counts.clone();
    for c in 0..smoothed.topic_count {
        smoothed.n[c] += lambda;
        smoothed.n_topic_totals[c] += lambda * smoothed.cells();
    }
    smoothed.smoothing = Some(lambda);
    Ok(smoothed)
}

fn require_mass(total: f64, counts: &CoOccurrenceCounts) -> Result<()> {
    if total <= 0.0 && !counts.is_smoothed() {
        return Err(Error::UnsmoothedZeroCounts);
    }
    Ok(())
}

/// Estimated probability of each keyword pair co-occurring in an interaction
/// labelled `topic`: `N_c[i][j] / N_c`.
pub fn pair_given_topic(counts: &CoOccurrenceCounts, topic: TopicId) -> Result<Array2<f64>> {
    let total = counts.n_topic_total(topic)?;
    require_mass(total, counts)?;
    Ok(counts.n(topic)? / total)
}

/// Estimated probability of each keyword pair co-occurring in any interaction
/// of the sequence: `sum_c N_c[i][j] / N`. For a proxy's session this matrix
/// is exactly the distribution the proxy publishes.
pub fn pair_given_sequence(counts: &CoOccurrenceCounts) -> Result<Array2<f64>> {
    let total = counts.n_total();
    require_mass(total, counts)?;
    let mut joint = Array2::zeros((counts.input_len, counts.output_len));
    for c in 0..counts.topic_count {
        joint += counts.n(c)?;
    }
    Ok(joint / total)
}

/// Estimated probability of an interaction being labelled with each topic:
/// `N_c / N`.
pub fn topic_prior(counts: &CoOccurrenceCounts) -> Result<Vec<f64>> {
    let total = counts.n_total();
    require_mass(total, counts)?;
    Ok(counts
        .n_topic_totals
        .iter()
        .map(|&mass| mass / total)
        .collect())
}

/// The topic-given-pair conditional for every topic, in the requested
/// normalization mode.
#[derive(Debug, Clone)]
pub struct TopicConditionalTable {
    mode: ConditionalMode,
    tables: Vec<Array2<f64>>,
}

impl TopicConditionalTable {
    pub fn mode(&self) -> ConditionalMode {
        self.mode
    }

    pub fn topic_count(&self) -> usize {
        self.tables.len()
    }

    pub fn table(&self, topic: TopicId) -> Result<&Array2<f64>> {
        self.tables.get(topic).ok_or(Error::UnknownTopic(topic))
    }

    pub fn entry(&self, topic: TopicId, i: usize, j: usize) -> f64 {
        self.tables[topic][[i, j]]
    }
}

/// Estimate `P(interaction labelled c | pair (i, j) present)` for every topic
/// and pair from the presence matrices.
pub fn topic_given_pair(
    counts: &CoOccurrenceCounts,
    mode: ConditionalMode,
) -> TopicConditionalTable {
    let shape = (counts.input_len, counts.output_len);
    let tables = match mode {
        ConditionalMode::TopicMass => (0..counts.topic_count)
            .map(|c| {
                let total = counts.o_topic_totals[c];
                if total == 0 {
                    Array2::zeros(shape)
                } else {
                    counts.o[c].mapv(|v| f64::from(v) / total as f64)
                }
            })
            .collect(),
        ConditionalMode::Bayes => {
            let mut denom: Array2<f64> = Array2::zeros(shape);
            for c in 0..counts.topic_count {
                denom += &counts.o[c].mapv(f64::from);
            }
            (0..counts.topic_count)
                .map(|c| {
                    let mut table = counts.o[c].mapv(f64::from);
                    ndarray::Zip::from(&mut table)
                        .and(&denom)
                        .for_each(|t, &d| {
                            *t = if d > 0.0 { *t / d } else { 0.0 };
                        });
                    table
                })
                .collect()
        }
    };
    TopicConditionalTable { mode, tables }
}

/// The joint keyword-pair distribution a proxy agent releases publicly; the
/// only information a proxy reveals about its session.
#[derive(Debug, Clone)]
pub struct PublishedDistribution {
    pub matrix: Array2<f64>,
    pub proxy: ProxyId,
    pub step: usize,
}

impl PublishedDistribution {
    /// Derive the publication from a proxy's current (smoothed) counts.
    pub fn from_counts(counts: &CoOccurrenceCounts, proxy: ProxyId, step: usize) -> Result<Self> {
        let matrix = pair_given_sequence(counts)?;
        Ok(Self {
            matrix,
            proxy,
            step,
        })
    }

    pub fn shape(&self) -> (usize, usize) {
        self.matrix.dim()
    }
}

/// Serialize a distribution matrix to CSV: one row per input feature, one
/// column per output feature, values to 12 significant digits, LF endings.
pub fn matrix_to_csv(matrix: &Array2<f64>) -> String {
    let mut out = String::new();
    for row in matrix.rows() {
        let fields: Vec<String> = row.iter().map(|&v| crate::metrics::fmt_value(v)).collect();
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

impl PublishedDistribution {
    pub fn to_csv(&self) -> String {
        matrix_to_csv(&self.matrix)
    }
}

/// Bag-of-words mixture: `P(z in A | z in B) = sum_ij P(z in A | pair ij) *
/// P(pair ij | z in B)`, evaluated as an exact double sum.
pub fn mixture_probability(membership: &Array2<f64>, conditioning: &Array2<f64>) -> Result<f64> {
    if membership.dim() != conditioning.dim() {
        return Err(Error::ShapeMismatch {
            expected: membership.dim(),
            got: conditioning.dim(),
        });
    }
    Ok(membership
        .iter()
        .zip(conditioning.iter())
        .map(|(&m, &c)| m * c)
        .sum())
}
