use crate::dataset::Fingerprint;
use crate::error::{Error, Result};

/// Positions of the `k` members of `bag` closest to `query` in Hamming
/// distance, nearest first, ties broken by ascending position. `k` larger than
/// the bag is clamped.
pub fn knn_hamming(bag: &[&Fingerprint], query: &Fingerprint, k: usize) -> Result<Vec<usize>> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be positive".into()));
    }
    Ok(nearest(bag.iter().copied().enumerate(), query, k))
}

/// Shared selection: `candidates` yields `(tie_key, fingerprint)` where the
/// returned values are the tie keys.
pub(crate) fn nearest<'a>(
    candidates: impl Iterator<Item = (usize, &'a Fingerprint)>,
    query: &Fingerprint,
    k: usize,
) -> Vec<usize> {
    let mut scored: Vec<(u32, usize)> = candidates
        .map(|(key, fp)| (fp.hamming(query), key))
        .collect();
    if k < scored.len() {
        scored.select_nth_unstable(k - 1);
        scored.truncate(k);
    }
    scored.sort_unstable();
    scored.into_iter().map(|(_, key)| key).collect()
}
