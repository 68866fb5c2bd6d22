//! Seeded synthetic datasets with a skewed label distribution and planted
//! fingerprint and graph signal.
//!
//! Label `l` (0-based) has inclusion probability `min(1, c / (l + 1)^s)` with
//! `c` chosen so that the expected cardinality, boost included, meets the
//! target. Per-label counts are fixed by largest-remainder rounding and the
//! positive instances drawn without replacement. The first `max(1, L / 20)`
//! labels form the majority set; each other label `m` is paired with majority
//! label `m mod |majority|`, which joins an instance carrying `m` with
//! probability `cooccurrence_boost`.
//!
//! Label `l` owns fingerprint bits `[l*b, (l+1)*b)`, which are set when the
//! label is present before every bit is flipped with `noise_flip_prob`. Each
//! label also has a random node-feature offset added to every node of the
//! instance's graph.

use rand::distr::{Distribution, Uniform};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{
    DatasetShape, Fingerprint, Instance, LabelId, LabelVocabulary, MolecularGraph,
    MultiLabelDataset,
};
use crate::error::{Error, Result};

/// Standard deviation of the additive noise on regression targets.
const REGRESSION_NOISE: f64 = 0.1;
/// Fingerprint bits feeding each regression output.
const REGRESSION_SUPPORT: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    pub n_instances: usize,
    pub n_labels: usize,
    pub zipf_exponent: f64,
    pub target_card: f64,
    pub fingerprint_width: usize,
    pub signal_bits_per_label: usize,
    pub noise_flip_prob: f64,
    /// Inclusive node-count range; `None` generates no graphs.
    pub graph_nodes_range: Option<(usize, usize)>,
    pub node_feature_dim: usize,
    /// Scale of the per-label node-feature offsets; node noise has unit variance.
    pub graph_signal: f64,
    pub regression_width: usize,
    pub cooccurrence_boost: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_instances: 1000,
            n_labels: 100,
            zipf_exponent: 1.1,
            target_card: 1.5,
            fingerprint_width: 1024,
            signal_bits_per_label: 4,
            noise_flip_prob: 0.02,
            graph_nodes_range: Some((6, 16)),
            node_feature_dim: 9,
            graph_signal: 1.0,
            regression_width: 0,
            cooccurrence_boost: 0.0,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.n_instances == 0
            || self.n_labels == 0
            || self.fingerprint_width == 0
            || self.node_feature_dim == 0
        {
            return bad(
                "instance, label, fingerprint and node-feature counts must be positive".into(),
            );
        }
        if !(self.zipf_exponent.is_finite() && self.zipf_exponent > 0.0) {
            return bad(format!(
                "zipf exponent must be positive, got {}",
                self.zipf_exponent
            ));
        }
        if !(self.target_card.is_finite() && self.target_card > 0.0) {
            return bad(format!(
                "target cardinality must be positive, got {}",
                self.target_card
            ));
        }
        if self.target_card > self.n_labels as f64 {
            return bad(format!(
                "target cardinality {} exceeds the label count {}",
                self.target_card, self.n_labels
            ));
        }
        if !(0.0..=1.0).contains(&self.noise_flip_prob) {
            return bad(format!(
                "noise flip probability must be in [0, 1], got {}",
                self.noise_flip_prob
            ));
        }
        if !(self.cooccurrence_boost.is_finite() && self.cooccurrence_boost >= 0.0) {
            return bad("cooccurrence boost must be non-negative".into());
        }
        if !(self.graph_signal.is_finite() && self.graph_signal >= 0.0) {
            return bad("graph signal must be non-negative".into());
        }
        if let Some((lo, hi)) = self.graph_nodes_range {
            if lo == 0 || lo > hi {
                return bad(format!("invalid graph node range {lo}..={hi}"));
            }
        }
        match self.n_labels.checked_mul(self.signal_bits_per_label) {
            Some(need) if need <= self.fingerprint_width => Ok(()),
            _ => bad(format!(
                "{} labels x {} signal bits do not fit in {} fingerprint bits",
                self.n_labels, self.signal_bits_per_label, self.fingerprint_width
            )),
        }
    }

    fn majority_count(&self) -> usize {
        (self.n_labels / 20).max(1)
    }

    fn partner(&self, label: usize) -> Option<usize> {
        let maj = self.majority_count();
        (label >= maj).then_some(label % maj)
    }
}

fn inclusion(c: f64, config: &SynthConfig) -> Vec<f64> {
    (0..config.n_labels)
        .map(|l| (c * ((l + 1) as f64).powf(-config.zipf_exponent)).min(1.0))
        .collect()
}

fn expected_card(c: f64, config: &SynthConfig) -> f64 {
    let pi = inclusion(c, config);
    let boost = config.cooccurrence_boost.min(1.0);
    let base: f64 = pi.iter().sum();
    let extra: f64 = (0..config.n_labels)
        .filter_map(|m| config.partner(m).map(|p| pi[m] * (1.0 - pi[p])))
        .sum();
    base + boost * extra
}

/// Per-label positive counts, non-increasing in label index.
fn label_counts(config: &SynthConfig) -> Result<Vec<usize>> {
    let n = config.n_instances as f64;
    let (mut lo, mut hi) = (0.0, (config.n_labels as f64).powf(config.zipf_exponent));
    if expected_card(hi, config) < config.target_card * (1.0 - 1e-9) {
        return Err(Error::InvalidArgument(format!(
            "target cardinality {} is unreachable with {} labels",
            config.target_card, config.n_labels
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if expected_card(mid, config) < config.target_card {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let exact: Vec<f64> = inclusion(hi, config).iter().map(|p| p * n).collect();
    let mut counts: Vec<usize> = exact.iter().map(|x| x.floor() as usize).collect();
    let total = exact.iter().sum::<f64>().round() as usize;
    let assigned: usize = counts.iter().sum();
    let mut by_remainder: Vec<usize> = (0..counts.len()).collect();
    // stable sort keeps lower labels first on equal remainders, preserving monotonicity
    by_remainder
        .sort_by(|&a, &b| (exact[b] - exact[b].floor()).total_cmp(&(exact[a] - exact[a].floor())));
    for &l in by_remainder.iter().take(total.saturating_sub(assigned)) {
        counts[l] += 1;
    }
    Ok(counts)
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

const STREAM_LABELS: u64 = 0;
const STREAM_BOOST: u64 = 1;
const STREAM_OFFSETS: u64 = 2;
const STREAM_REGRESSION: u64 = 3;
const STREAM_INSTANCE_BASE: u64 = 1 << 32;

fn assign_labels(config: &SynthConfig) -> Result<Vec<Vec<LabelId>>> {
    let n = config.n_instances;
    let counts = label_counts(config)?;
    let mut rng = stream(config.seed, STREAM_LABELS);
    let mut sets: Vec<Vec<LabelId>> = vec![Vec::new(); n];
    for (l, &k) in counts.iter().enumerate() {
        for i in index::sample(&mut rng, n, k.min(n)) {
            sets[i].push(l as LabelId);
        }
    }
    let boost = config.cooccurrence_boost.min(1.0);
    if boost > 0.0 {
        let mut rng = stream(config.seed, STREAM_BOOST);
        for set in &mut sets {
            let mut added = Vec::new();
            for &m in set.iter() {
                if let Some(p) = config.partner(m as usize) {
                    if rng.random_bool(boost) {
                        added.push(p as LabelId);
                    }
                }
            }
            set.extend(added);
        }
    }
    for set in &mut sets {
        set.sort_unstable();
        set.dedup();
    }
    Ok(sets)
}

fn random_graph(
    labels: &[LabelId],
    offsets: &[Vec<f64>],
    (lo, hi): (usize, usize),
    d: usize,
    rng: &mut ChaCha8Rng,
) -> MolecularGraph {
    let nodes = rng.random_range(lo..=hi);
    let mut mean = vec![0.0; d];
    for &l in labels {
        for (m, o) in mean.iter_mut().zip(&offsets[l as usize]) {
            *m += o;
        }
    }
    let node_features = (0..nodes)
        .map(|_| {
            mean.iter()
                .map(|m| m + rng.sample::<f64, _>(StandardNormal))
                .collect()
        })
        .collect();
    let mut edges: Vec<(usize, usize)> = (1..nodes).map(|v| (rng.random_range(0..v), v)).collect();
    if nodes >= 3 {
        for _ in 0..nodes / 4 {
            let u = rng.random_range(0..nodes);
            let v = rng.random_range(0..nodes);
            let e = (u.min(v), u.max(v));
            if u != v && !edges.contains(&e) {
                edges.push(e);
            }
        }
    }
    MolecularGraph {
        node_features,
        edges,
    }
}

pub fn generate(config: &SynthConfig) -> Result<MultiLabelDataset> {
    config.validate()?;
    let label_sets = assign_labels(config)?;
    let b = config.signal_bits_per_label;
    let d = config.node_feature_dim;

    let mut rng = stream(config.seed, STREAM_OFFSETS);
    let offsets: Vec<Vec<f64>> = (0..config.n_labels)
        .map(|_| {
            (0..d)
                .map(|_| config.graph_signal * rng.sample::<f64, _>(StandardNormal))
                .collect()
        })
        .collect();

    let mut rng = stream(config.seed, STREAM_REGRESSION);
    let support = REGRESSION_SUPPORT.min(config.fingerprint_width);
    let weight = Uniform::new_inclusive(-1.0, 1.0).expect("finite bounds");
    let beta: Vec<Vec<(usize, f64)>> = (0..config.regression_width)
        .map(|_| {
            index::sample(&mut rng, config.fingerprint_width, support)
                .into_iter()
                .map(|bit| (bit, weight.sample(&mut rng)))
                .collect()
        })
        .collect();

    let instances: Vec<Instance> = label_sets
        .into_par_iter()
        .enumerate()
        .map(|(i, labels)| {
            let mut rng = stream(config.seed, STREAM_INSTANCE_BASE + i as u64);
            let mut fp = Fingerprint::zeros(config.fingerprint_width);
            for &l in &labels {
                for bit in l as usize * b..(l as usize + 1) * b {
                    fp.set(bit, true);
                }
            }
            if config.noise_flip_prob > 0.0 {
                for bit in 0..config.fingerprint_width {
                    if rng.random_bool(config.noise_flip_prob) {
                        fp.flip(bit);
                    }
                }
            }
            let graph = config
                .graph_nodes_range
                .map(|range| random_graph(&labels, &offsets, range, d, &mut rng));
            let regression = (config.regression_width > 0).then(|| {
                beta.iter()
                    .map(|terms| {
                        let signal: f64 = terms
                            .iter()
                            .filter(|(bit, _)| fp.get(*bit))
                            .map(|(_, w)| w)
                            .sum();
                        signal + REGRESSION_NOISE * rng.sample::<f64, _>(StandardNormal)
                    })
                    .collect()
            });
            Instance {
                id: format!("s{i}"),
                fingerprint: fp,
                graph,
                labels,
                regression_targets: regression,
                origin: None,
            }
        })
        .collect();

    let shape = DatasetShape {
        fingerprint_width: config.fingerprint_width,
        node_feature_dim: d,
        regression_width: (config.regression_width > 0).then_some(config.regression_width),
    };
    let ds = MultiLabelDataset::new(
        LabelVocabulary::numbered("c", config.n_labels),
        shape,
        instances,
    )?;
    Ok(ds.with_metadata(serde_json::json!({ "synth": config })))
}
