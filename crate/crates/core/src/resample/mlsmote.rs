//! MLSMOTE adapted to binary fingerprints.
//!
//! Minority labels are visited in descending IRLbl order (ties by index). For
//! each member of a label's bag, the `k` nearest bag members in Hamming
//! distance are found and one of them is drawn as the reference neighbour.
//! The synthetic fingerprint is a per-bit majority vote over the seed and its
//! neighbours, with exact ties resolved by the reference neighbour's bit. The
//! label set keeps every label present in strictly more than half of that
//! group. Regression targets, when seed and reference both carry them, are
//! interpolated on the segment between the two. Bags are revisited
//! round-robin until `floor(p * |D|)` instances exist.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::knn::nearest;
use super::{floor_count, minority_labels, Diagnostics, ResampleConfig, ResampleOutcome};
use crate::dataset::{Fingerprint, FreshIds, Instance, LabelId, MultiLabelDataset};
use crate::error::{Error, Result};
use crate::metrics::{irlbl, label_counts, mean_ir};

pub fn mlsmote(dataset: &MultiLabelDataset, config: &ResampleConfig) -> Result<ResampleOutcome> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(Error::InvalidArgument(
            "cannot oversample an empty dataset".into(),
        ));
    }
    let n = dataset.len();
    let budget = floor_count(config.p * n as f64);
    let mut warnings = Vec::new();

    let counts = label_counts(dataset);
    let (irl, minority) = match irlbl(&counts) {
        Ok(irl) => {
            let mir = mean_ir(&irl)?;
            let minority = minority_labels(&irl, mir);
            (irl, minority)
        }
        Err(_) => (vec![None; counts.len()], Vec::new()),
    };
    let mut order = minority.clone();
    order.sort_by(|&a, &b| {
        let (va, vb) = (irl[a as usize].unwrap(), irl[b as usize].unwrap());
        vb.total_cmp(&va).then(a.cmp(&b))
    });

    let originals = dataset.instances();
    let mut bags: Vec<Vec<usize>> = vec![Vec::new(); order.len()];
    let mut bag_of = vec![usize::MAX; dataset.label_count()];
    for (pos, &l) in order.iter().enumerate() {
        bag_of[l as usize] = pos;
    }
    for (i, inst) in originals.iter().enumerate() {
        for &l in &inst.labels {
            let pos = bag_of[l as usize];
            if pos != usize::MAX {
                bags[pos].push(i);
            }
        }
    }
    // neighbour lists are computed once per (bag, member) and reused on later passes
    let mut neighbour_cache: Vec<Vec<Option<Vec<usize>>>> =
        bags.iter().map(|b| vec![None; b.len()]).collect();

    if order.is_empty() && budget > 0 {
        warnings.push("no minority labels; dataset unchanged".to_string());
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut ids = FreshIds::new(originals);
    let mut synthetic: Vec<Instance> = Vec::with_capacity(budget);
    let mut per_label = vec![0usize; order.len()];

    'passes: while synthetic.len() < budget && !order.is_empty() {
        let mut progressed = false;
        for (pos, bag) in bags.iter().enumerate() {
            if bag.len() < 2 {
                continue;
            }
            let k = config.k.min(bag.len() - 1);
            for (member, &seed_idx) in bag.iter().enumerate() {
                if synthetic.len() >= budget {
                    break 'passes;
                }
                let seed = &originals[seed_idx];
                let neighbours = neighbour_cache[pos][member].get_or_insert_with(|| {
                    nearest(
                        bag.iter()
                            .copied()
                            .filter(|&j| j != seed_idx)
                            .map(|j| (j, &originals[j].fingerprint)),
                        &seed.fingerprint,
                        k,
                    )
                });
                let reference = neighbours[rng.random_range(0..neighbours.len())];
                let group: Vec<&Instance> = std::iter::once(seed)
                    .chain(neighbours.iter().map(|&j| &originals[j]))
                    .collect();
                let mut inst = synthesize(
                    &group,
                    &originals[reference],
                    dataset.label_count(),
                    &mut rng,
                );
                inst.id = ids.next(&seed.id, "s");
                inst.origin = Some(seed.id.clone());
                synthetic.push(inst);
                per_label[pos] += 1;
                progressed = true;
            }
        }
        if !progressed {
            warnings.push(format!(
                "every minority bag has fewer than 2 members; generated {} of {budget}",
                synthetic.len()
            ));
            break;
        }
    }

    let added_count = synthetic.len();
    let out = dataset.extended(synthetic);
    let vocab = dataset.vocabulary();
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
            zero_score_selected: 0,
            selected_ids: Vec::new(),
            synthetic_per_label: order
                .iter()
                .zip(&per_label)
                .filter(|(_, &c)| c > 0)
                .map(|(&l, &c)| (vocab.name(l).to_string(), c))
                .collect(),
            warnings,
        },
    })
}

/// `group[0]` is the seed, the rest its neighbours.
fn synthesize(
    group: &[&Instance],
    reference: &Instance,
    label_count: usize,
    rng: &mut ChaCha8Rng,
) -> Instance {
    let seed = group[0];
    let m = group.len();
    let width = seed.fingerprint.width();

    let mut fingerprint = Fingerprint::zeros(width);
    let mut ones = vec![0usize; width];
    for inst in group {
        for b in inst.fingerprint.ones() {
            ones[b] += 1;
        }
    }
    for (b, &c) in ones.iter().enumerate() {
        let set = match (2 * c).cmp(&m) {
            std::cmp::Ordering::Greater => true,
            std::cmp::Ordering::Less => false,
            std::cmp::Ordering::Equal => reference.fingerprint.get(b),
        };
        if set {
            fingerprint.set(b, true);
        }
    }

    let mut votes = vec![0usize; label_count];
    for inst in group {
        for &l in &inst.labels {
            votes[l as usize] += 1;
        }
    }
    let labels: Vec<LabelId> = votes
        .iter()
        .enumerate()
        .filter(|(_, &v)| 2 * v > m)
        .map(|(l, _)| l as LabelId)
        .collect();

    let regression_targets = match (&seed.regression_targets, &reference.regression_targets) {
        (Some(a), Some(b)) => {
            let t: f64 = rng.random();
            Some(a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect())
        }
        _ => None,
    };

    Instance {
        id: String::new(),
        fingerprint,
        graph: None,
        labels,
        regression_targets,
        origin: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{DatasetShape, LabelVocabulary};

    fn make(rows: &[(&[usize], &[LabelId])], n_labels: usize) -> MultiLabelDataset {
        let instances = rows
            .iter()
            .enumerate()
            .map(|(i, (bits, ls))| {
                Instance::new(
                    format!("i{i}"),
                    Fingerprint::from_ones(8, bits.iter().copied()),
                    ls.to_vec(),
                )
            })
            .collect();
        MultiLabelDataset::new(
            LabelVocabulary::numbered("c", n_labels),
            DatasetShape {
                fingerprint_width: 8,
                node_feature_dim: 1,
                regression_width: None,
            },
            instances,
        )
        .unwrap()
    }

    #[test]
    fn identical_bag_is_fixed_point() {
        let mut rows: Vec<(&[usize], &[LabelId])> = vec![(&[1, 3], &[1]); 3];
        rows.extend(std::iter::repeat_n((&[0usize][..], &[0 as LabelId][..]), 9));
        let ds = make(&rows, 2);
        let out = mlsmote(&ds, &ResampleConfig::mlsmote(0.25, 2, 3)).unwrap();
        assert_eq!(out.added_count, 3);
        for s in &out.dataset.instances()[12..] {
            assert_eq!(s.fingerprint, ds.instances()[0].fingerprint);
            assert_eq!(s.labels, vec![1]);
            assert!(s.graph.is_none());
            assert!(s.origin.is_some());
        }
    }

    #[test]
    fn label_vote_strict_majority() {
        let fp = Instance::new("x", Fingerprint::zeros(4), vec![]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let with = |labels: Vec<LabelId>| Instance {
            labels,
            ..fp.clone()
        };
        // seed {a,b}; neighbours {a},{a},{b},{a,b}: a in 4 of 5, b in 3 of 5
        let group = [
            with(vec![0, 1]),
            with(vec![0]),
            with(vec![0]),
            with(vec![1]),
            with(vec![0, 1]),
        ];
        let refs: Vec<&Instance> = group.iter().collect();
        assert_eq!(synthesize(&refs, refs[1], 2, &mut rng).labels, vec![0, 1]);
        // seed {a,b}; neighbours {a},{a},{b},{a}: b in 2 of 5
        let group = [
            with(vec![0, 1]),
            with(vec![0]),
            with(vec![0]),
            with(vec![1]),
            with(vec![0]),
        ];
        let refs: Vec<&Instance> = group.iter().collect();
        assert_eq!(synthesize(&refs, refs[1], 2, &mut rng).labels, vec![0]);
    }

    #[test]
    fn bit_ties_follow_reference() {
        let a = Instance::new("a", Fingerprint::from_ones(4, [0, 1]), vec![0]);
        let b = Instance::new("b", Fingerprint::from_ones(4, [0, 2]), vec![0]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = synthesize(&[&a, &b], &b, 1, &mut rng);
        assert_eq!(s.fingerprint.ones().collect::<Vec<_>>(), vec![0, 2]);
    }

    #[test]
    fn budget_and_determinism() {
        let rows: Vec<(Vec<usize>, Vec<LabelId>)> = (0..40)
            .map(|i| {
                let labels = if i % 10 == 0 {
                    vec![0, 2]
                } else if i % 3 == 0 {
                    vec![0, 1]
                } else {
                    vec![0]
                };
                (vec![i % 8, (i * 3) % 8], labels)
            })
            .collect();
        let borrowed: Vec<(&[usize], &[LabelId])> =
            rows.iter().map(|(b, l)| (&b[..], &l[..])).collect();
        let ds = make(&borrowed, 3);
        let cfg = ResampleConfig::mlsmote(0.25, 3, 9);
        let a = mlsmote(&ds, &cfg).unwrap();
        let b = mlsmote(&ds, &cfg).unwrap();
        assert_eq!(a.added_count, 10);
        assert_eq!(a.dataset, b.dataset);
        assert_eq!(&a.dataset.instances()[..40], ds.instances());
        for s in &a.dataset.instances()[40..] {
            assert!(s.labels.contains(&2));
        }
    }

    #[test]
    fn singleton_bags_produce_nothing() {
        let ds = make(
            &[(&[0], &[0]), (&[1], &[0]), (&[2], &[0]), (&[3], &[0, 1])],
            2,
        );
        let out = mlsmote(&ds, &ResampleConfig::mlsmote(0.5, 5, 1)).unwrap();
        assert_eq!(out.added_count, 0);
        assert!(!out.diagnostics.warnings.is_empty());
    }

    #[test]
    fn no_minority_warns() {
        let ds = make(&[(&[0], &[0]), (&[1], &[1])], 2);
        let out = mlsmote(&ds, &ResampleConfig::mlsmote(0.5, 5, 1)).unwrap();
        assert_eq!(out.added_count, 0);
        assert_eq!(out.dataset, ds);
        assert!(!out.diagnostics.warnings.is_empty());
    }
}
