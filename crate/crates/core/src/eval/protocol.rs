//! Train/test partitions for the evaluation protocols.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::ProtocolKind;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// A protocol instance: kind, fold count for k-fold, seed, and an optional
/// fixed list of training subjects for half-half.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Protocol {
    pub kind: ProtocolKind,
    pub folds: usize,
    pub seed: u64,
    pub train_subjects: Option<Vec<String>>,
}

impl Protocol {
    pub fn new(kind: ProtocolKind) -> Self {
        Self {
            kind,
            folds: 5,
            seed: 0,
            train_subjects: None,
        }
    }

    pub fn name(&self) -> String {
        match self.kind {
            ProtocolKind::Loocv => "loocv".into(),
            ProtocolKind::Loso => "loso".into(),
            ProtocolKind::Kfold => format!("{}-fold", self.folds),
            ProtocolKind::HalfHalf => "half-half".into(),
        }
    }

    /// Partitions samples given their labels and subjects. Every sample is
    /// tested exactly once, except under half-half where only the test half
    /// is.
    pub fn folds(&self, labels: &[String], subjects: &[String]) -> Result<Vec<Fold>> {
        let m = labels.len();
        let infeasible = |m: String| Err(Error::ProtocolInfeasible(m));
        if m < 2 {
            return infeasible(format!("{m} samples"));
        }
        let all: Vec<usize> = (0..m).collect();
        let folds = match self.kind {
            ProtocolKind::Loocv => all.iter().map(|&i| complement(m, vec![i])).collect(),
            ProtocolKind::Kfold => {
                if self.folds < 2 || self.folds > m {
                    return infeasible(format!("{} folds over {m} samples", self.folds));
                }
                stratified(labels, self.folds, self.seed)
                    .into_iter()
                    .map(|t| complement(m, t))
                    .collect()
            }
            ProtocolKind::Loso => {
                let groups = by_subject(subjects);
                if groups.len() < 2 {
                    return infeasible(format!(
                        "leave-one-subject-out needs 2 subjects, found {}",
                        groups.len()
                    ));
                }
                groups.into_values().map(|t| complement(m, t)).collect()
            }
            ProtocolKind::HalfHalf => {
                let groups = by_subject(subjects);
                if groups.len() < 2 {
                    return infeasible(format!(
                        "half-half needs 2 subjects, found {}",
                        groups.len()
                    ));
                }
                let train: BTreeSet<&str> = match &self.train_subjects {
                    Some(list) => {
                        if let Some(s) = list.iter().find(|s| !groups.contains_key(s.as_str())) {
                            return infeasible(format!("split lists unknown subject {s:?}"));
                        }
                        list.iter().map(String::as_str).collect()
                    }
                    None => {
                        let mut names: Vec<&str> = groups.keys().map(String::as_str).collect();
                        names.shuffle(&mut ChaCha8Rng::seed_from_u64(self.seed));
                        names.truncate(groups.len() / 2);
                        names.into_iter().collect()
                    }
                };
                let (tr, te): (Vec<usize>, Vec<usize>) = all
                    .iter()
                    .partition(|&&i| train.contains(subjects[i].as_str()));
                if tr.is_empty() || te.is_empty() {
                    return infeasible("half-half split leaves one side empty".into());
                }
                vec![Fold {
                    train: tr,
                    test: te,
                }]
            }
        };
        Ok(folds)
    }
}

fn complement(m: usize, test: Vec<usize>) -> Fold {
    let set: BTreeSet<usize> = test.iter().copied().collect();
    Fold {
        train: (0..m).filter(|i| !set.contains(i)).collect(),
        test: set.into_iter().collect(),
    }
}

fn by_subject(subjects: &[String]) -> BTreeMap<String, Vec<usize>> {
    let mut groups: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (i, s) in subjects.iter().enumerate() {
        groups.entry(s.clone()).or_default().push(i);
    }
    groups
}

/// Test sets of a stratified `folds`-way split: each class is shuffled and
/// dealt round-robin, continuing where the previous class stopped.
pub(crate) fn stratified(labels: &[String], folds: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut by_class: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, l) in labels.iter().enumerate() {
        by_class.entry(l).or_default().push(i);
    }
    let mut out = vec![Vec::new(); folds];
    let mut next = 0;
    for idx in by_class.values_mut() {
        idx.shuffle(&mut rng);
        for &i in idx.iter() {
            out[next % folds].push(i);
            next += 1;
        }
    }
    for f in &mut out {
        f.sort_unstable();
    }
    out
}
