#![allow(dead_code)]

use std::path::PathBuf;

use mlbalance::dataset::{
    DatasetShape, Fingerprint, Instance, LabelId, LabelVocabulary, MolecularGraph,
    MultiLabelDataset,
};
use proptest::prelude::*;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

#[derive(Debug, Clone, Copy)]
pub struct Limits {
    pub max_instances: usize,
    pub max_labels: usize,
    pub graphs: bool,
    pub regression: bool,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_instances: 50,
            max_labels: 20,
            graphs: false,
            regression: false,
        }
    }
}

fn label_set(n_labels: usize) -> impl Strategy<Value = Vec<LabelId>> {
    // skew towards low labels so imbalance is common
    proptest::collection::vec((0..n_labels as u32, 0..n_labels as u32), 0..=4).prop_map(|pairs| {
        let mut ls: Vec<LabelId> = pairs.into_iter().map(|(a, b)| a.min(b)).collect();
        ls.sort_unstable();
        ls.dedup();
        ls
    })
}

fn graph(d: usize) -> impl Strategy<Value = MolecularGraph> {
    (1usize..=6).prop_flat_map(move |n| {
        let feats = proptest::collection::vec(proptest::collection::vec(-10.0f64..10.0, d), n);
        let edges = proptest::collection::vec((0..n, 0..n), 0..=2 * n);
        (feats, edges).prop_map(|(node_features, raw)| {
            let mut edges: Vec<(usize, usize)> = raw.into_iter().filter(|(u, v)| u != v).collect();
            edges.sort_unstable();
            edges.dedup();
            MolecularGraph {
                node_features,
                edges,
            }
        })
    })
}

pub fn dataset(limits: Limits) -> impl Strategy<Value = MultiLabelDataset> {
    (
        1..=limits.max_instances,
        1..=limits.max_labels,
        1usize..=70,
        1usize..=3,
        1usize..=3,
    )
        .prop_flat_map(move |(n, n_labels, width, d, reg)| {
            let row = (
                proptest::collection::vec(any::<bool>(), width),
                label_set(n_labels),
                if limits.graphs {
                    proptest::option::weighted(0.8, graph(d)).boxed()
                } else {
                    Just(None).boxed()
                },
                proptest::collection::vec(-1e3f64..1e3, reg),
            );
            proptest::collection::vec(row, n).prop_map(move |rows| {
                let instances = rows
                    .into_iter()
                    .enumerate()
                    .map(|(i, (bits, labels, g, r))| {
                        let mut inst =
                            Instance::new(format!("x{i}"), Fingerprint::from_bits(&bits), labels);
                        inst.graph = g;
                        if limits.regression {
                            inst.regression_targets = Some(r);
                        }
                        inst
                    })
                    .collect();
                MultiLabelDataset::new(
                    LabelVocabulary::numbered("lab", n_labels),
                    DatasetShape {
                        fingerprint_width: width,
                        node_feature_dim: d,
                        regression_width: limits.regression.then_some(reg),
                    },
                    instances,
                )
                .unwrap()
            })
        })
}
