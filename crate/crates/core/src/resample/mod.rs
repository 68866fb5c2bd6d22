//! Oversampling: minority-instance replication and an MLSMOTE baseline,
//! with a shared configuration, outcome type and diagnostics sidecar.

mod knn;
mod mlsmote;
mod proposed;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use knn::knn_hamming;
pub use mlsmote::mlsmote;
pub use proposed::oversample_proposed;

use crate::dataset::{LabelId, MultiLabelDataset};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Proposed,
    Mlsmote,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Proposed => "proposed",
            Method::Mlsmote => "mlsmote",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "proposed" => Ok(Method::Proposed),
            "mlsmote" => Ok(Method::Mlsmote),
            other => Err(Error::InvalidArgument(format!("unknown method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResampleConfig {
    pub method: Method,
    /// Fraction of `|D|` to add.
    pub p: f64,
    /// Copies per selected instance (proposed only).
    pub r: usize,
    /// Neighbour count (MLSMOTE only).
    pub k: usize,
    pub seed: u64,
}

impl ResampleConfig {
    pub fn proposed(p: f64, r: usize) -> Self {
        ResampleConfig {
            method: Method::Proposed,
            p,
            r,
            k: 5,
            seed: 0,
        }
    }

    pub fn mlsmote(p: f64, k: usize, seed: u64) -> Self {
        ResampleConfig {
            method: Method::Mlsmote,
            p,
            r: 1,
            k,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p) {
            return Err(Error::InvalidArgument(format!(
                "p = {} outside [0, 1]",
                self.p
            )));
        }
        if self.r == 0 {
            return Err(Error::InvalidArgument("r must be positive".into()));
        }
        if self.k == 0 {
            return Err(Error::InvalidArgument("k must be positive".into()));
        }
        Ok(())
    }
}

/// Structured sidecar written next to a resampled dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub method: Method,
    pub p: f64,
    pub r: usize,
    pub k: usize,
    pub seed: u64,
    pub added_count: usize,
    pub minority_label_count: usize,
    /// Selected instances whose minority score was 0 or that had no labels.
    pub zero_score_selected: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub selected_ids: Vec<String>,
    /// `(label name, synthetic instances generated from its bag)`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub synthetic_per_label: Vec<(String, usize)>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct ResampleOutcome {
    /// Original instances in order, followed by the added ones.
    pub dataset: MultiLabelDataset,
    pub added_count: usize,
    pub minority_label_count: usize,
    pub diagnostics: Diagnostics,
}

pub fn resample(dataset: &MultiLabelDataset, config: &ResampleConfig) -> Result<ResampleOutcome> {
    match config.method {
        Method::Proposed => oversample_proposed(dataset, config),
        Method::Mlsmote => mlsmote(dataset, config),
    }
}

/// Labels with a defined IRLbl strictly above `mean_ir`, ascending.
pub fn minority_labels(irlbl: &[Option<f64>], mean_ir: f64) -> Vec<LabelId> {
    irlbl
        .iter()
        .enumerate()
        .filter_map(|(l, v)| match v {
            Some(v) if *v > mean_ir => Some(l as LabelId),
            _ => None,
        })
        .collect()
}

/// Fraction of the instance's active labels that are minority labels; `None`
/// for instances without labels.
pub fn minority_score(labels: &[LabelId], is_minority: &[bool]) -> Option<f64> {
    if labels.is_empty() {
        return None;
    }
    let minor = labels.iter().filter(|&&l| is_minority[l as usize]).count();
    Some(minor as f64 / labels.len() as f64)
}

/// `floor(x)` with a tolerance for products such as `0.29 * 100` that land a
/// hair below an integer.
pub(crate) fn floor_count(x: f64) -> usize {
    (x + 1e-9).floor().max(0.0) as usize
}

pub(crate) fn minority_mask(label_count: usize, minority: &[LabelId]) -> Vec<bool> {
    let mut mask = vec![false; label_count];
    for &l in minority {
        mask[l as usize] = true;
    }
    mask
}
