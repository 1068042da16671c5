//! Selection of the closeness weight `k` by inner cross-validation.

use std::collections::BTreeSet;
use std::sync::Mutex;

use nalgebra::DMatrix;

use super::protocol::stratified;
use crate::classify::{knn_from_distances, train_svm, SvmParams};
use crate::data::{ClassifierConfig, ClassifierKind};
use crate::error::{Error, Result};
use crate::par::{map_indices, Execution};

/// Pairwise distances between samples, one layer per grid value.
pub trait DistanceSource: Sync {
    fn distance(&self, g: usize, i: usize, j: usize) -> f64;
}

/// Precomputed full distance matrices.
#[derive(Debug, Clone)]
pub struct GridTensor {
    mats: Vec<DMatrix<f64>>,
}

impl GridTensor {
    pub fn new(mats: Vec<DMatrix<f64>>) -> Self {
        Self { mats }
    }

    pub fn layer(&self, g: usize) -> &DMatrix<f64> {
        &self.mats[g]
    }
}

impl DistanceSource for GridTensor {
    fn distance(&self, g: usize, i: usize, j: usize) -> f64 {
        self.mats[g][(i, j)]
    }
}

/// Records every sample index whose distances are read.
pub struct AuditedSource<'a, S: DistanceSource> {
    inner: &'a S,
    touched: Mutex<BTreeSet<usize>>,
}

impl<'a, S: DistanceSource> AuditedSource<'a, S> {
    pub fn new(inner: &'a S) -> Self {
        Self {
            inner,
            touched: Mutex::new(BTreeSet::new()),
        }
    }

    pub fn touched(&self) -> BTreeSet<usize> {
        self.touched.lock().expect("audit lock").clone()
    }
}

impl<S: DistanceSource> DistanceSource for AuditedSource<'_, S> {
    fn distance(&self, g: usize, i: usize, j: usize) -> f64 {
        let mut t = self.touched.lock().expect("audit lock");
        t.insert(i);
        t.insert(j);
        drop(t);
        self.inner.distance(g, i, j)
    }
}

/// Solver tolerance for inner fits, which only need the sign of decisions.
const INNER_TOL: f64 = 1e-4;

pub(crate) fn features(
    source: &dyn DistanceSource,
    g: usize,
    rows: &[usize],
    cols: &[usize],
) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |r, c| {
        source.distance(g, rows[r], cols[c])
    })
}

/// Number of correctly classified `test` samples when training on `train`
/// with grid layer `g`. Uses pairwise votes, not calibrated probabilities.
fn correct_count(
    source: &dyn DistanceSource,
    g: usize,
    train: &[usize],
    test: &[usize],
    labels: &[String],
    classifier: &ClassifierConfig,
    seed: u64,
) -> Result<usize> {
    let train_labels: Vec<String> = train.iter().map(|&i| labels[i].clone()).collect();
    let classes: Vec<&String> = train_labels
        .iter()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if classes.len() < 2 {
        return Ok(test.iter().filter(|&&i| &labels[i] == classes[0]).count());
    }
    let predicted: Vec<String> = match classifier.kind {
        ClassifierKind::Ppfsvm => {
            let params = SvmParams {
                c: classifier.c,
                seed,
                probability: false,
                tol: INNER_TOL,
                ..SvmParams::default()
            };
            let model = train_svm(&features(source, g, train, train), &train_labels, &params)?;
            let phi = features(source, g, test, train);
            phi.row_iter()
                .map(|r| {
                    model
                        .predict(&r.iter().copied().collect::<Vec<_>>().into())
                        .map(|p| p.label)
                })
                .collect::<Result<_>>()?
        }
        ClassifierKind::Knn => {
            let idx: Vec<usize> = train_labels
                .iter()
                .map(|l| classes.binary_search(&l).expect("label in class list"))
                .collect();
            let k = classifier.neighbors.min(train.len());
            let phi = features(source, g, test, train);
            phi.row_iter()
                .map(|r| {
                    let d: Vec<f64> = r.iter().copied().collect();
                    knn_from_distances(&d, &idx, k).map(|c| classes[c].clone())
                })
                .collect::<Result<_>>()?
        }
    };
    Ok(test
        .iter()
        .zip(&predicted)
        .filter(|(&i, p)| &labels[i] == *p)
        .count())
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSearch {
    /// Index of the chosen value in the grid.
    pub index: usize,
    pub k: f64,
    /// Inner-CV correct predictions per grid value.
    pub correct: Vec<usize>,
    pub total: usize,
}

/// Picks the `k` of `grid` with the best inner cross-validated accuracy on
/// `train`, breaking ties toward the smaller `k`. Only distances among the
/// `train` samples are read.
#[allow(clippy::too_many_arguments)]
pub fn grid_search_k(
    source: &dyn DistanceSource,
    grid: &[f64],
    train: &[usize],
    labels: &[String],
    inner_folds: usize,
    classifier: &ClassifierConfig,
    seed: u64,
    exec: Execution,
) -> Result<GridSearch> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("empty k grid".into()));
    }
    let pick = |correct: Vec<usize>, total| {
        let best = *correct.iter().max().unwrap_or(&0);
        let index = (0..grid.len())
            .filter(|&g| correct.get(g).is_none_or(|&c| c == best))
            .min_by(|&a, &b| grid[a].total_cmp(&grid[b]))
            .expect("non-empty grid");
        GridSearch {
            index,
            k: grid[index],
            correct,
            total,
        }
    };
    if grid.len() == 1 || train.len() < 2 {
        return Ok(pick(Vec::new(), 0));
    }
    let train_labels: Vec<String> = train.iter().map(|&i| labels[i].clone()).collect();
    let folds: Vec<(Vec<usize>, Vec<usize>)> =
        stratified(&train_labels, inner_folds.min(train.len()), seed)
            .into_iter()
            .map(|test_pos| {
                let set: BTreeSet<usize> = test_pos.iter().copied().collect();
                let tr = (0..train.len())
                    .filter(|p| !set.contains(p))
                    .map(|p| train[p])
                    .collect();
                let te = test_pos.iter().map(|&p| train[p]).collect();
                (tr, te)
            })
            .filter(|(_, te): &(Vec<usize>, Vec<usize>)| !te.is_empty())
            .collect();
    let correct = map_indices(grid.len(), exec, |g| {
        folds.iter().try_fold(0, |acc, (tr, te)| {
            Ok::<_, Error>(acc + correct_count(source, g, tr, te, labels, classifier, seed)?)
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(pick(correct, train.len()))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Layer 0 carries no class information, layer 1 separates the classes.
    fn two_layer(m: usize) -> (GridTensor, Vec<String>) {
        let labels: Vec<String> = (0..m).map(|i| format!("c{}", i % 2)).collect();
        let flat = DMatrix::from_fn(m, m, |i, j| {
            if i == j {
                0.0
            } else {
                1.0 + ((i * 7 + j * 7) % 5) as f64 * 0.01
            }
        });
        let sep = DMatrix::from_fn(m, m, |i, j| {
            if i == j {
                0.0
            } else if i % 2 == j % 2 {
                0.1
            } else {
                3.0
            }
        });
        (GridTensor::new(vec![flat, sep]), labels)
    }

    #[test]
    fn single_value_grid() {
        let (t, l) = two_layer(6);
        let r = grid_search_k(
            &t,
            &[0.0],
            &[0, 1, 2],
            &l,
            5,
            &ClassifierConfig::default(),
            0,
            Execution::Auto,
        )
        .unwrap();
        assert_eq!(r.k, 0.0);
    }

    #[test]
    fn informative_layer_wins() {
        let (t, l) = two_layer(20);
        let train: Vec<usize> = (0..20).collect();
        for kind in [ClassifierKind::Ppfsvm, ClassifierKind::Knn] {
            let cfg = ClassifierConfig {
                kind,
                neighbors: 3,
                ..ClassifierConfig::default()
            };
            let r =
                grid_search_k(&t, &[0.0, 1.0], &train, &l, 5, &cfg, 1, Execution::Auto).unwrap();
            assert_eq!(r.k, 1.0, "{kind:?}: {:?}", r.correct);
            assert_eq!(r.correct[1], 20);
        }
    }

    #[test]
    fn equal_layers_pick_smallest() {
        let (t, l) = two_layer(12);
        let same = GridTensor::new(vec![
            t.layer(1).clone(),
            t.layer(1).clone(),
            t.layer(1).clone(),
        ]);
        let train: Vec<usize> = (0..12).collect();
        let r = grid_search_k(
            &same,
            &[0.5, 0.0, 2.0],
            &train,
            &l,
            4,
            &ClassifierConfig::default(),
            0,
            Execution::Auto,
        )
        .unwrap();
        assert_eq!(r.k, 0.0);
    }

    #[test]
    fn audit_sees_only_training_indices() {
        let (t, l) = two_layer(16);
        let audited = AuditedSource::new(&t);
        let train: Vec<usize> = (0..16).filter(|i| i % 4 != 0).collect();
        grid_search_k(
            &audited,
            &[0.0, 1.0],
            &train,
            &l,
            3,
            &ClassifierConfig::default(),
            0,
            Execution::Auto,
        )
        .unwrap();
        let touched = audited.touched();
        assert!(touched.iter().all(|i| i % 4 != 0), "{touched:?}");
        assert_eq!(touched.len(), train.len());
    }
}
