use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::MultiLabelDataset;
use crate::error::{Error, Result};

/// Seeded random train/test partition. `|test| = round(test_fraction * |D|)`;
/// both sides keep the original instance order.
pub fn split_dataset(
    dataset: &MultiLabelDataset,
    test_fraction: f64,
    seed: u64,
) -> Result<(MultiLabelDataset, MultiLabelDataset)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "test fraction {test_fraction} outside (0, 1)"
        )));
    }
    let n = dataset.len();
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "split needs at least 2 instances, dataset has {n}"
        )));
    }
    let n_test = (test_fraction * n as f64).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut in_test = vec![false; n];
    for i in index::sample(&mut rng, n, n_test) {
        in_test[i] = true;
    }
    let (mut train, mut test) = (Vec::with_capacity(n - n_test), Vec::with_capacity(n_test));
    for (inst, &t) in dataset.instances().iter().zip(&in_test) {
        if t {
            test.push(inst.clone());
        } else {
            train.push(inst.clone());
        }
    }
    Ok((
        dataset.with_instances(train)?,
        dataset.with_instances(test)?,
    ))
}
