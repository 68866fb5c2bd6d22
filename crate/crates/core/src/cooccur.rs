//! Joint label occurrence for chord-diagram export, and per-label SCUMBLE
//! comparison across dataset snapshots.

use std::collections::HashMap;
use std::io::Write;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{LabelId, MultiLabelDataset};
use crate::error::{Error, Result};
use crate::metrics::{irlbl, label_counts, scumble_per_label};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Link {
    pub a: LabelId,
    pub b: LabelId,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CooccurrenceSummary {
    pub snapshot_name: String,
    pub labels: Vec<LabelId>,
    /// Instance count per entry of `labels`.
    pub arc_sizes: Vec<usize>,
    /// One entry per unordered pair with `a < b`, zero counts included.
    pub links: Vec<Link>,
}

impl CooccurrenceSummary {
    pub fn joint_count(&self, a: LabelId, b: LabelId) -> Option<usize> {
        let (a, b) = if a < b { (a, b) } else { (b, a) };
        self.links
            .iter()
            .find(|l| l.a == a && l.b == b)
            .map(|l| l.count)
    }

    pub fn arc_size(&self, label: LabelId) -> Option<usize> {
        self.labels
            .iter()
            .position(|&l| l == label)
            .map(|p| self.arc_sizes[p])
    }
}

/// Arc sizes and pairwise joint counts restricted to `label_subset`.
pub fn cooccurrence(
    dataset: &MultiLabelDataset,
    name: &str,
    label_subset: &[LabelId],
) -> Result<CooccurrenceSummary> {
    if label_subset.is_empty() {
        return Err(Error::InvalidArgument("label subset is empty".into()));
    }
    let mut labels = label_subset.to_vec();
    labels.sort_unstable();
    labels.dedup();
    if let Some(&bad) = labels
        .iter()
        .find(|&&l| l as usize >= dataset.label_count())
    {
        return Err(Error::InvalidArgument(format!("unknown label index {bad}")));
    }
    let slot: HashMap<LabelId, usize> = labels.iter().enumerate().map(|(i, &l)| (l, i)).collect();
    let m = labels.len();
    let mut arcs = vec![0usize; m];
    let mut joint = vec![0usize; m * m];
    let mut present = Vec::new();
    for inst in dataset.instances() {
        present.clear();
        present.extend(inst.labels.iter().filter_map(|l| slot.get(l).copied()));
        for (x, &i) in present.iter().enumerate() {
            arcs[i] += 1;
            for &j in &present[x + 1..] {
                joint[i * m + j] += 1;
            }
        }
    }
    let mut links = Vec::with_capacity(m * (m - 1) / 2);
    for i in 0..m {
        for j in i + 1..m {
            links.push(Link {
                a: labels[i],
                b: labels[j],
                count: joint[i * m + j],
            });
        }
    }
    Ok(CooccurrenceSummary {
        snapshot_name: name.to_string(),
        labels,
        arc_sizes: arcs,
        links,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ChordArc {
    pub label: String,
    pub count: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ChordLink {
    pub a: String,
    pub b: String,
    pub count: usize,
}

/// Chord-diagram document: `{"snapshot", "arcs": [{label, count}], "links": [{a, b, count}]}`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ChordDocument {
    pub snapshot: String,
    pub arcs: Vec<ChordArc>,
    pub links: Vec<ChordLink>,
}

pub fn chord_document(summary: &CooccurrenceSummary, dataset: &MultiLabelDataset) -> ChordDocument {
    let vocab = dataset.vocabulary();
    ChordDocument {
        snapshot: summary.snapshot_name.clone(),
        arcs: summary
            .labels
            .iter()
            .zip(&summary.arc_sizes)
            .map(|(&l, &count)| ChordArc {
                label: vocab.name(l).to_string(),
                count,
            })
            .collect(),
        links: summary
            .links
            .iter()
            .map(|l| ChordLink {
                a: vocab.name(l.a).to_string(),
                b: vocab.name(l.b).to_string(),
                count: l.count,
            })
            .collect(),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SnapshotCell {
    pub count: usize,
    pub scumble: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ComparisonRow {
    pub label: String,
    pub index: LabelId,
    /// One cell per snapshot, in `ComparisonTable::snapshots` order.
    pub cells: Vec<SnapshotCell>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ComparisonTable {
    pub snapshots: Vec<String>,
    pub rows: Vec<ComparisonRow>,
}

/// Per-label count and mean SCUMBLE for `original` followed by each variant.
/// IRLbl is recomputed on each snapshot.
pub fn compare_snapshots(
    original: (&str, &MultiLabelDataset),
    variants: &[(&str, &MultiLabelDataset)],
    label_subset: &[LabelId],
) -> Result<ComparisonTable> {
    let snapshots: Vec<(&str, &MultiLabelDataset)> = std::iter::once(original)
        .chain(variants.iter().copied())
        .collect();
    for (name, ds) in &snapshots[1..] {
        if ds.vocabulary() != original.1.vocabulary() {
            return Err(Error::InvalidArgument(format!(
                "snapshot {name:?} has a different vocabulary from {:?}",
                original.0
            )));
        }
    }
    if let Some(&bad) = label_subset
        .iter()
        .find(|&&l| l as usize >= original.1.label_count())
    {
        return Err(Error::InvalidArgument(format!("unknown label index {bad}")));
    }
    let mut columns = Vec::with_capacity(snapshots.len());
    for (_, ds) in &snapshots {
        let counts = label_counts(ds);
        let scumble = match irlbl(&counts) {
            Ok(irl) => scumble_per_label(ds, &irl)?,
            Err(_) => vec![0.0; counts.len()],
        };
        columns.push((counts, scumble));
    }
    let vocab = original.1.vocabulary();
    let rows = label_subset
        .iter()
        .map(|&l| ComparisonRow {
            label: vocab.name(l).to_string(),
            index: l,
            cells: columns
                .iter()
                .map(|(c, s)| SnapshotCell {
                    count: c[l as usize],
                    scumble: s[l as usize],
                })
                .collect(),
        })
        .collect();
    Ok(ComparisonTable {
        snapshots: snapshots.iter().map(|(n, _)| n.to_string()).collect(),
        rows,
    })
}

/// CSV with columns `label,<snap>_count,<snap>_scumble,...`.
pub fn write_comparison_csv(table: &ComparisonTable, mut out: impl Write) -> Result<()> {
    write!(out, "label")?;
    for s in &table.snapshots {
        write!(out, ",{s}_count,{s}_scumble")?;
    }
    writeln!(out)?;
    for row in &table.rows {
        write!(out, "{}", row.label)?;
        for c in &row.cells {
            write!(out, ",{},{:.4}", c.count, c.scumble)?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// `n` distinct labels drawn uniformly with a fixed seed, ascending.
pub fn random_label_subset(label_count: usize, n: usize, seed: u64) -> Result<Vec<LabelId>> {
    if n == 0 || n > label_count {
        return Err(Error::InvalidArgument(format!(
            "cannot draw {n} labels from a vocabulary of {label_count}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked: Vec<LabelId> = index::sample(&mut rng, label_count, n)
        .into_iter()
        .map(|i| i as LabelId)
        .collect();
    picked.sort_unstable();
    Ok(picked)
}
