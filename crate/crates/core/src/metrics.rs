//! Multilabel imbalance measures: per-label counts, IRLbl, MeanIR, cardinality
//! and SCUMBLE.
//!
//! * `IRLbl(l) = max_l' count(l') / count(l)`, undefined when `count(l) = 0`.
//! * `MeanIR` is the mean of the defined IRLbl values.
//! * `SCUMBLE_i = 1 - GM(IRLbl over Y_i) / AM(IRLbl over Y_i)`, or 0 when the
//!   instance has at most one active label.
//!
//! All reductions run in ascending index order so results are reproducible
//! bit for bit.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::dataset::{LabelId, MultiLabelDataset};
use crate::error::{Error, Result};

pub fn label_counts(dataset: &MultiLabelDataset) -> Vec<usize> {
    let mut counts = vec![0usize; dataset.label_count()];
    for inst in dataset.instances() {
        for &l in &inst.labels {
            counts[l as usize] += 1;
        }
    }
    counts
}

/// Per-label imbalance ratio; `None` for labels that never occur.
pub fn irlbl(counts: &[usize]) -> Result<Vec<Option<f64>>> {
    let max = counts.iter().copied().max().unwrap_or(0);
    if max == 0 {
        return Err(Error::Undefined(
            "IRLbl needs at least one label with a positive count".into(),
        ));
    }
    Ok(counts
        .iter()
        .map(|&c| (c > 0).then(|| max as f64 / c as f64))
        .collect())
}

pub fn mean_ir(irlbl: &[Option<f64>]) -> Result<f64> {
    let mut sum = 0.0;
    let mut n = 0usize;
    for v in irlbl.iter().flatten() {
        sum += v;
        n += 1;
    }
    if n == 0 {
        return Err(Error::Undefined(
            "MeanIR over zero defined IRLbl values".into(),
        ));
    }
    Ok(sum / n as f64)
}

/// Mean number of active labels per instance.
pub fn cardinality(dataset: &MultiLabelDataset) -> Result<f64> {
    if dataset.is_empty() {
        return Err(Error::Undefined("cardinality of an empty dataset".into()));
    }
    Ok(dataset.positive_pairs() as f64 / dataset.len() as f64)
}

pub fn scumble_instance(labels: &[LabelId], irlbl: &[Option<f64>]) -> Result<f64> {
    if labels.len() <= 1 {
        return Ok(0.0);
    }
    let mut first = None;
    let mut all_equal = true;
    let mut sum = 0.0;
    let mut log_sum = 0.0;
    for &l in labels {
        let v = irlbl
            .get(l as usize)
            .copied()
            .flatten()
            .ok_or_else(|| Error::Undefined(format!("IRLbl undefined for active label {l}")))?;
        match first {
            None => first = Some(v),
            Some(f) if f != v => all_equal = false,
            _ => {}
        }
        sum += v;
        log_sum += v.ln();
    }
    if all_equal {
        return Ok(0.0);
    }
    let n = labels.len() as f64;
    let arithmetic = sum / n;
    let geometric = (log_sum / n).exp();
    Ok((1.0 - geometric / arithmetic).max(0.0))
}

/// Mean SCUMBLE over instances containing `label`; 0 if the label never occurs.
pub fn scumble_label(
    dataset: &MultiLabelDataset,
    irlbl: &[Option<f64>],
    label: LabelId,
) -> Result<f64> {
    let mut sum = 0.0;
    let mut n = 0usize;
    for inst in dataset.instances() {
        if inst.has_label(label) {
            sum += scumble_instance(&inst.labels, irlbl)?;
            n += 1;
        }
    }
    Ok(if n == 0 { 0.0 } else { sum / n as f64 })
}

/// Per-instance SCUMBLE values, in instance order.
pub fn scumble_instances(dataset: &MultiLabelDataset, irlbl: &[Option<f64>]) -> Result<Vec<f64>> {
    dataset
        .instances()
        .iter()
        .map(|inst| scumble_instance(&inst.labels, irlbl))
        .collect()
}

/// [`scumble_label`] for every label in one pass over the instances.
pub fn scumble_per_label(dataset: &MultiLabelDataset, irlbl: &[Option<f64>]) -> Result<Vec<f64>> {
    let per_instance = scumble_instances(dataset, irlbl)?;
    let mut sums = vec![0.0; dataset.label_count()];
    let mut counts = vec![0usize; dataset.label_count()];
    for (inst, s) in dataset.instances().iter().zip(per_instance) {
        for &l in &inst.labels {
            sums[l as usize] += s;
            counts[l as usize] += 1;
        }
    }
    Ok(sums
        .into_iter()
        .zip(counts)
        .map(|(s, c)| if c == 0 { 0.0 } else { s / c as f64 })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImbalanceReport {
    pub instance_count: usize,
    pub label_count: usize,
    pub label_counts: Vec<usize>,
    /// `null` for labels with zero count.
    pub irlbl: Vec<Option<f64>>,
    pub mean_ir: f64,
    pub card: f64,
    pub scumble_per_label: Vec<f64>,
    /// Mean of per-instance SCUMBLE over all instances.
    pub scumble_mean: f64,
    /// `100 * count / |D|` per label, sorted descending.
    pub sample_percent_profile: Vec<f64>,
}

pub fn imbalance_report(dataset: &MultiLabelDataset) -> Result<ImbalanceReport> {
    let card = cardinality(dataset)?;
    let counts = label_counts(dataset);
    let irl = irlbl(&counts)?;
    let mean_ir = mean_ir(&irl)?;
    let per_instance = scumble_instances(dataset, &irl)?;
    let scumble_mean = per_instance.iter().sum::<f64>() / dataset.len() as f64;
    let scumble_per_label = scumble_per_label(dataset, &irl)?;
    let n = dataset.len() as f64;
    let mut profile: Vec<f64> = counts.iter().map(|&c| 100.0 * c as f64 / n).collect();
    profile.sort_by(|a, b| b.total_cmp(a));
    Ok(ImbalanceReport {
        instance_count: dataset.len(),
        label_count: dataset.label_count(),
        label_counts: counts,
        irlbl: irl,
        mean_ir,
        card,
        scumble_per_label,
        scumble_mean,
        sample_percent_profile: profile,
    })
}

/// Two-column `rank,percent` CSV of the ordered sample-percentage profile.
pub fn write_profile_csv(report: &ImbalanceReport, mut out: impl Write) -> Result<()> {
    writeln!(out, "rank,percent")?;
    for (rank, pct) in report.sample_percent_profile.iter().enumerate() {
        writeln!(out, "{},{}", rank + 1, pct)?;
    }
    Ok(())
}
