//! Nearest-neighbor baseline on DTW distances.

use crate::error::{Error, Result};
use crate::geometry::ClosenessParams;
use crate::trajectory::{dtw_distance, Trajectory};

/// Majority label among the `k` nearest training samples. Equal votes go to
/// the class with the smaller mean neighbor distance, then to the lower class
/// index. Equal distances are ordered by training index.
pub fn knn_from_distances(dists: &[f64], labels: &[usize], k: usize) -> Result<usize> {
    if dists.len() != labels.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} distances for {} labels",
            dists.len(),
            labels.len()
        )));
    }
    if k == 0 || k > dists.len() {
        return Err(Error::InvalidParameter(format!(
            "need 1 <= k <= {}, got {k}",
            dists.len()
        )));
    }
    let mut order: Vec<usize> = (0..dists.len()).collect();
    order.sort_by(|&a, &b| dists[a].total_cmp(&dists[b]).then(a.cmp(&b)));
    let n_classes = labels.iter().max().map_or(0, |m| m + 1);
    let mut votes = vec![0usize; n_classes];
    let mut total = vec![0.0; n_classes];
    for &i in &order[..k] {
        votes[labels[i]] += 1;
        total[labels[i]] += dists[i];
    }
    let best = (0..n_classes)
        .filter(|&c| votes[c] > 0)
        .min_by(|&a, &b| {
            votes[b]
                .cmp(&votes[a])
                .then((total[a] / votes[a] as f64).total_cmp(&(total[b] / votes[b] as f64)))
                .then(a.cmp(&b))
        })
        .expect("k >= 1");
    Ok(best)
}

pub fn knn_classify(
    test: &Trajectory,
    train: &[Trajectory],
    labels: &[usize],
    k: usize,
    params: ClosenessParams,
) -> Result<usize> {
    let dists = train
        .iter()
        .map(|t| dtw_distance(test, t, params))
        .collect::<Result<Vec<_>>>()?;
    knn_from_distances(&dists, labels, k)
}
