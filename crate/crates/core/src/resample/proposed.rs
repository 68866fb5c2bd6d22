//! Minority-instance replication.
//!
//! Labels whose IRLbl exceeds MeanIR are minority labels. Every labelled
//! instance is scored by the fraction of its labels that are minority labels,
//! instances are ranked by descending score (stable, so ties keep index
//! order), the top `floor(p / r * |D|)` are taken and each is appended `r`
//! times. Unlabelled instances cannot be scored and rank after all scored ones.
//!
//! Scores are fractions with small denominators, so they take few distinct
//! values; ranking buckets instances by score instead of sorting them, and
//! the whole procedure is linear in the number of positive labels. No
//! instance pairs are ever compared.

use std::collections::HashSet;

use super::{
    floor_count, minority_labels, minority_mask, minority_score, Diagnostics, ResampleConfig,
    ResampleOutcome,
};
use crate::dataset::{FreshIds, Instance, MultiLabelDataset};
use crate::error::{Error, Result};
use crate::metrics::{irlbl, label_counts, mean_ir};

/// Descending score, ties in ascending index order.
fn rank_by_score(scored: &[(usize, f64)]) -> Vec<(usize, f64)> {
    let distinct: HashSet<u64> = scored.iter().map(|&(_, s)| s.to_bits()).collect();
    let mut levels: Vec<f64> = distinct.into_iter().map(f64::from_bits).collect();
    levels.sort_by(|a, b| b.total_cmp(a));
    let mut buckets: Vec<Vec<(usize, f64)>> = vec![Vec::new(); levels.len()];
    for &(i, s) in scored {
        let b = levels
            .binary_search_by(|l| s.total_cmp(l))
            .expect("score level present");
        buckets[b].push((i, s));
    }
    buckets.concat()
}

pub fn oversample_proposed(
    dataset: &MultiLabelDataset,
    config: &ResampleConfig,
) -> Result<ResampleOutcome> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(Error::InvalidArgument(
            "cannot oversample an empty dataset".into(),
        ));
    }
    let n = dataset.len();
    let mut warnings = Vec::new();

    let counts = label_counts(dataset);
    let minority = match irlbl(&counts) {
        Ok(irl) => {
            let mir = mean_ir(&irl)?;
            minority_labels(&irl, mir)
        }
        Err(_) => {
            warnings.push("dataset has no positive labels; minority set is empty".to_string());
            Vec::new()
        }
    };
    if minority.is_empty() {
        warnings.push(
            "empty minority set: all scores are 0, selection follows index order".to_string(),
        );
    }
    let is_minority = minority_mask(dataset.label_count(), &minority);

    let mut scored: Vec<(usize, f64)> = Vec::with_capacity(n);
    let mut unscored: Vec<usize> = Vec::new();
    for (i, inst) in dataset.instances().iter().enumerate() {
        match minority_score(&inst.labels, &is_minority) {
            Some(s) => scored.push((i, s)),
            None => unscored.push(i),
        }
    }
    let scored = rank_by_score(&scored);

    let s = floor_count(config.p / config.r as f64 * n as f64).min(n);
    if s == 0 && config.p > 0.0 {
        warnings.push(format!(
            "p = {} with r = {} selects no instances from {} (floor((p/r)|D|) = 0); dataset unchanged",
            config.p, config.r, n
        ));
    }

    let ranked = scored
        .iter()
        .copied()
        .chain(unscored.iter().map(|&i| (i, 0.0)));
    let selected: Vec<(usize, f64)> = ranked.take(s).collect();
    let zero_score_selected = selected.iter().filter(|(_, score)| *score == 0.0).count();
    if zero_score_selected > 0 && s > 0 {
        warnings.push(format!(
            "{zero_score_selected} of {s} selected instances have zero minority score"
        ));
    }

    let originals = dataset.instances();
    let mut ids = FreshIds::new(originals);
    let mut added: Vec<Instance> = Vec::with_capacity(s * config.r);
    for &(i, _) in &selected {
        let src = &originals[i];
        for _ in 0..config.r {
            let mut copy = src.clone();
            copy.id = ids.next(&src.id, "r");
            copy.origin = Some(src.id.clone());
            added.push(copy);
        }
    }

    let added_count = s * config.r;
    let out = dataset.extended(added);
    Ok(ResampleOutcome {
        dataset: out,
        added_count,
        minority_label_count: minority.len(),
        diagnostics: Diagnostics {
            method: config.method,
            p: config.p,
            r: config.r,
            k: config.k,
            seed: config.seed,
            added_count,
            minority_label_count: minority.len(),
            zero_score_selected,
            selected_ids: selected
                .iter()
                .map(|&(i, _)| originals[i].id.clone())
                .collect(),
            synthetic_per_label: Vec::new(),
            warnings,
        },
    })
}
