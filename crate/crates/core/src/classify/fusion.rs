//! Late fusion of per-part classifiers by the product of their
//! probabilities.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::proximity::ProximityVector;
use super::svm::{Prediction, SvmModel};
use crate::error::{Error, Result};
use crate::geometry::ClosenessParams;

/// Lower bound applied to each part probability before the product.
pub const PROB_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartModel {
    pub part: String,
    pub closeness: ClosenessParams,
    pub model: SvmModel,
}

/// Part models trained on the same samples and classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusionEnsemble {
    parts: Vec<PartModel>,
}

impl FusionEnsemble {
    pub fn new(parts: Vec<PartModel>) -> Result<Self> {
        let Some(first) = parts.first() else {
            return Err(Error::InvalidParameter("empty ensemble".into()));
        };
        for p in &parts[1..] {
            if p.model.classes != first.model.classes
                || p.model.n_features() != first.model.n_features()
            {
                return Err(Error::InvalidParameter(format!(
                    "part {:?} was trained on a different sample set than {:?}",
                    p.part, first.part
                )));
            }
        }
        Ok(Self { parts })
    }

    pub fn parts(&self) -> &[PartModel] {
        &self.parts
    }

    pub fn classes(&self) -> &[String] {
        &self.parts[0].model.classes
    }
}

/// Normalized product of floored per-part distributions.
pub fn fuse_probabilities(per_part: &[Vec<f64>]) -> Vec<f64> {
    let k = per_part.first().map_or(0, Vec::len);
    let mut prod = vec![1.0; k];
    for probs in per_part {
        for (acc, p) in prod.iter_mut().zip(probs) {
            *acc *= p.max(PROB_FLOOR);
        }
    }
    let s: f64 = prod.iter().sum();
    prod.iter().map(|v| v / s).collect()
}

/// First index holding the maximum.
pub(crate) fn first_max(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

pub fn fuse_predict(
    ensemble: &FusionEnsemble,
    phis: &BTreeMap<String, ProximityVector>,
) -> Result<Prediction> {
    let mut per_part = Vec::with_capacity(ensemble.parts.len());
    for p in &ensemble.parts {
        let phi = phis
            .get(&p.part)
            .ok_or_else(|| Error::MissingPart(p.part.clone()))?;
        per_part.push(p.model.probabilities(phi)?);
    }
    let probabilities = fuse_probabilities(&per_part);
    let class = first_max(&probabilities);
    Ok(Prediction {
        class,
        label: ensemble.classes()[class].clone(),
        probabilities,
    })
}
