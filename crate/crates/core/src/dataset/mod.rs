//! Dataset data model: label vocabulary, instances with fingerprints, optional
//! molecular graphs, sparse label sets and optional regression targets.

mod fingerprint;
mod io;
mod split;

use std::collections::HashSet;

pub use fingerprint::Fingerprint;
pub use io::{
    parse_dataset, parse_vocabulary, read_dataset, vocabulary_path_for, write_dataset,
    write_dataset_files, write_vocabulary,
};
pub use split::split_dataset;

use crate::error::{Error, Result};

/// Label index into a [`LabelVocabulary`].
pub type LabelId = u32;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelVocabulary {
    names: Vec<String>,
}

impl LabelVocabulary {
    pub fn new(names: Vec<String>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(names.len());
        for (i, name) in names.iter().enumerate() {
            if name.is_empty() {
                return Err(Error::Vocabulary {
                    line: i + 1,
                    message: format!("empty name for label {i}"),
                });
            }
            if !seen.insert(name.as_str()) {
                return Err(Error::Vocabulary {
                    line: i + 1,
                    message: format!("duplicate label name {name:?}"),
                });
            }
        }
        Ok(LabelVocabulary { names })
    }

    /// Vocabulary `prefix0, prefix1, ...`.
    pub fn numbered(prefix: &str, count: usize) -> Self {
        LabelVocabulary {
            names: (0..count).map(|i| format!("{prefix}{i}")).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, label: LabelId) -> &str {
        &self.names[label as usize]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn index_of(&self, name: &str) -> Option<LabelId> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| i as LabelId)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MolecularGraph {
    /// One row of `d` features per node.
    pub node_features: Vec<Vec<f64>>,
    /// Undirected edges `(u, v)`, stored as given.
    pub edges: Vec<(usize, usize)>,
}

impl MolecularGraph {
    pub fn node_count(&self) -> usize {
        self.node_features.len()
    }

    /// Copy of the graph with nodes relabelled so that old node `i` becomes
    /// `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> MolecularGraph {
        assert_eq!(perm.len(), self.node_count());
        let mut node_features = vec![Vec::new(); perm.len()];
        for (old, &new) in perm.iter().enumerate() {
            node_features[new] = self.node_features[old].clone();
        }
        let edges = self
            .edges
            .iter()
            .map(|&(u, v)| (perm[u], perm[v]))
            .collect();
        MolecularGraph {
            node_features,
            edges,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub id: String,
    pub fingerprint: Fingerprint,
    pub graph: Option<MolecularGraph>,
    /// Sorted ascending, no duplicates.
    pub labels: Vec<LabelId>,
    pub regression_targets: Option<Vec<f64>>,
    /// Id of the source instance for resampled or synthetic rows.
    pub origin: Option<String>,
}

impl Instance {
    pub fn new(id: impl Into<String>, fingerprint: Fingerprint, labels: Vec<LabelId>) -> Self {
        Instance {
            id: id.into(),
            fingerprint,
            graph: None,
            labels,
            regression_targets: None,
            origin: None,
        }
    }

    pub fn with_graph(mut self, graph: MolecularGraph) -> Self {
        self.graph = Some(graph);
        self
    }

    pub fn with_regression(mut self, targets: Vec<f64>) -> Self {
        self.regression_targets = Some(targets);
        self
    }

    pub fn has_label(&self, label: LabelId) -> bool {
        self.labels.binary_search(&label).is_ok()
    }
}

/// Dataset-level shape declarations shared by every instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DatasetShape {
    pub fingerprint_width: usize,
    pub node_feature_dim: usize,
    pub regression_width: Option<usize>,
}

/// Validated, immutable multilabel dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiLabelDataset {
    vocabulary: LabelVocabulary,
    shape: DatasetShape,
    instances: Vec<Instance>,
    metadata: Option<serde_json::Value>,
}

impl MultiLabelDataset {
    pub fn new(
        vocabulary: LabelVocabulary,
        shape: DatasetShape,
        instances: Vec<Instance>,
    ) -> Result<Self> {
        if shape.fingerprint_width == 0 {
            return Err(Error::InvalidArgument(
                "fingerprint_width must be positive".into(),
            ));
        }
        if shape.node_feature_dim == 0 {
            return Err(Error::InvalidArgument(
                "node_feature_dim must be positive".into(),
            ));
        }
        let mut ids = HashSet::with_capacity(instances.len());
        for inst in &instances {
            validate_instance(inst, &shape, vocabulary.len())?;
            if !ids.insert(inst.id.as_str()) {
                return Err(Error::DuplicateId(inst.id.clone()));
            }
        }
        Ok(MultiLabelDataset {
            vocabulary,
            shape,
            instances,
            metadata: None,
        })
    }

    pub fn with_metadata(mut self, metadata: serde_json::Value) -> Self {
        self.metadata = Some(metadata);
        self
    }

    /// Appends rows derived from this dataset's own rows (same shape, fresh
    /// ids) without revalidating them.
    pub(crate) fn extended(&self, added: Vec<Instance>) -> Self {
        let mut instances = Vec::with_capacity(self.instances.len() + added.len());
        instances.extend_from_slice(&self.instances);
        instances.extend(added);
        MultiLabelDataset {
            vocabulary: self.vocabulary.clone(),
            shape: self.shape,
            instances,
            metadata: self.metadata.clone(),
        }
    }

    /// Same vocabulary and shape, different rows. Rows are validated.
    pub fn with_instances(&self, instances: Vec<Instance>) -> Result<Self> {
        let mut out = MultiLabelDataset::new(self.vocabulary.clone(), self.shape, instances)?;
        out.metadata = self.metadata.clone();
        Ok(out)
    }

    pub fn vocabulary(&self) -> &LabelVocabulary {
        &self.vocabulary
    }

    pub fn shape(&self) -> DatasetShape {
        self.shape
    }

    pub fn fingerprint_width(&self) -> usize {
        self.shape.fingerprint_width
    }

    pub fn node_feature_dim(&self) -> usize {
        self.shape.node_feature_dim
    }

    pub fn regression_width(&self) -> Option<usize> {
        self.shape.regression_width
    }

    pub fn metadata(&self) -> Option<&serde_json::Value> {
        self.metadata.as_ref()
    }

    pub fn instances(&self) -> &[Instance] {
        &self.instances
    }

    pub fn into_instances(self) -> Vec<Instance> {
        self.instances
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn label_count(&self) -> usize {
        self.vocabulary.len()
    }

    /// Total number of positive (instance, label) pairs.
    pub fn positive_pairs(&self) -> usize {
        self.instances.iter().map(|i| i.labels.len()).sum()
    }
}

/// Allocates ids of the form `{base}~{tag}{n}` that do not collide with `used`.
/// Hands out `base~{tag}{n}` ids that collide neither with the rows the
/// allocator was built from nor with ids it issued earlier.
pub(crate) struct FreshIds<'a> {
    taken: HashSet<&'a str>,
    issued: HashSet<String>,
}

impl<'a> FreshIds<'a> {
    pub(crate) fn new(instances: &'a [Instance]) -> Self {
        FreshIds {
            // generated ids always contain '~', so only such ids can collide
            taken: instances
                .iter()
                .map(|i| i.id.as_str())
                .filter(|id| id.contains('~'))
                .collect(),
            issued: HashSet::new(),
        }
    }

    pub(crate) fn next(&mut self, base: &str, tag: &str) -> String {
        let mut n = 1usize;
        loop {
            let candidate = format!("{base}~{tag}{n}");
            if !self.taken.contains(candidate.as_str()) && !self.issued.contains(&candidate) {
                self.issued.insert(candidate.clone());
                return candidate;
            }
            n += 1;
        }
    }
}

pub(crate) fn validate_instance(
    inst: &Instance,
    shape: &DatasetShape,
    label_count: usize,
) -> Result<()> {
    let id = || inst.id.clone();
    if inst.fingerprint.width() != shape.fingerprint_width {
        return Err(Error::FingerprintWidth {
            id: id(),
            message: format!(
                "width {}, dataset declares {}",
                inst.fingerprint.width(),
                shape.fingerprint_width
            ),
        });
    }
    for w in inst.labels.windows(2) {
        if w[0] == w[1] {
            return Err(Error::DuplicateLabel {
                id: id(),
                label: w[0],
            });
        }
        if w[0] > w[1] {
            return Err(Error::InvalidArgument(format!(
                "instance {}: labels not sorted ascending",
                inst.id
            )));
        }
    }
    if let Some(&last) = inst.labels.last() {
        if last as usize >= label_count {
            return Err(Error::LabelOutOfRange {
                id: id(),
                label: last as u64,
                count: label_count,
            });
        }
    }
    if let Some(graph) = &inst.graph {
        let n = graph.node_count();
        for row in &graph.node_features {
            if row.len() != shape.node_feature_dim {
                return Err(Error::NodeFeatureDim {
                    id: id(),
                    expected: shape.node_feature_dim,
                    found: row.len(),
                });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite {
                    id: id(),
                    field: "graph.nodes",
                });
            }
        }
        for &(u, v) in &graph.edges {
            if u >= n || v >= n {
                return Err(Error::EdgeOutOfRange {
                    id: id(),
                    u,
                    v,
                    nodes: n,
                });
            }
            if u == v {
                return Err(Error::SelfEdge { id: id(), node: u });
            }
        }
    }
    if let Some(reg) = &inst.regression_targets {
        match shape.regression_width {
            Some(w) if w == reg.len() => {}
            Some(w) => {
                return Err(Error::RegressionWidth {
                    id: id(),
                    expected: w,
                    found: reg.len(),
                })
            }
            None => {
                return Err(Error::RegressionWidth {
                    id: id(),
                    expected: 0,
                    found: reg.len(),
                })
            }
        }
        if reg.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                id: id(),
                field: "reg",
            });
        }
    }
    Ok(())
}
