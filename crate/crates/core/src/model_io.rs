//! Trained-pipeline files.
//!
//! Layout, all integers little-endian:
//!
//! | bytes     | content                                      |
//! |-----------|----------------------------------------------|
//! | 8         | magic `GRAMTRJM`                             |
//! | 4         | format version (`u32`)                       |
//! | 8         | header length `h` (`u64`)                    |
//! | h         | UTF-8 JSON header                            |
//! | rest      | payload of `f64` values                      |
//!
//! The header holds classes, preprocessing, the per-part `k`, SVM pair
//! structure with bias and sigmoid parameters, and `{offset, len}` references
//! (in `f64` units) into the payload for feature scaling, pair weights and
//! the training trajectories (`U` then `R²` of every point, column-major).

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::classify::{
    argmax_lowest, first_max, fuse_probabilities, knn_from_distances, proximity_vector, PairModel,
    Prediction, Scaling, SvmModel, SvmParams,
};
use crate::data::{ClassifierConfig, ClassifierKind, PartSchema, SequenceFile};
use crate::error::{Error, Result};
use crate::eval::{sequence_parts, Resampling};
use crate::geometry::{ClosenessParams, GramPoint};
use crate::trajectory::{Trajectory, TrajectoryMeta};

pub const MAGIC: &[u8; 8] = b"GRAMTRJM";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct BundlePart {
    pub name: String,
    pub k: f64,
    /// Absent for nearest-neighbor pipelines.
    pub model: Option<SvmModel>,
    pub trajectories: Vec<Trajectory>,
}

/// Everything needed to classify new sequences.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelBundle {
    pub classes: Vec<String>,
    pub classifier: ClassifierConfig,
    pub resampling: Resampling,
    pub schema: Option<PartSchema>,
    pub train_ids: Vec<String>,
    pub train_labels: Vec<String>,
    pub train_subjects: Vec<String>,
    pub parts: Vec<BundlePart>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct Block {
    offset: u64,
    len: u64,
}

#[derive(Serialize, Deserialize)]
struct PairHeader {
    pos: usize,
    neg: usize,
    bias: f64,
    platt: Option<(f64, f64)>,
    weights: Block,
}

#[derive(Serialize, Deserialize)]
struct SvmHeader {
    classes: Vec<String>,
    params: SvmParams,
    priors: Vec<f64>,
    scaling_mean: Block,
    scaling_scale: Block,
    pairs: Vec<PairHeader>,
}

#[derive(Serialize, Deserialize)]
struct TrajHeader {
    points: usize,
    n: usize,
    d: usize,
    data: Block,
}

#[derive(Serialize, Deserialize)]
struct PartHeader {
    name: String,
    k: f64,
    model: Option<SvmHeader>,
    trajectories: Vec<TrajHeader>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    classes: Vec<String>,
    classifier: ClassifierConfig,
    resampling: Resampling,
    schema: Option<PartSchema>,
    train_ids: Vec<String>,
    train_labels: Vec<String>,
    train_subjects: Vec<String>,
    parts: Vec<PartHeader>,
    payload_len: u64,
}

struct Writer {
    payload: Vec<f64>,
}

impl Writer {
    fn push(&mut self, values: &[f64]) -> Block {
        let offset = self.payload.len() as u64;
        self.payload.extend_from_slice(values);
        Block {
            offset,
            len: values.len() as u64,
        }
    }
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Model(msg.into())
}

fn slice(payload: &[f64], b: Block) -> Result<&[f64]> {
    let start = usize::try_from(b.offset).map_err(|_| bad("block offset overflow"))?;
    let len = usize::try_from(b.len).map_err(|_| bad("block length overflow"))?;
    start
        .checked_add(len)
        .and_then(|end| payload.get(start..end))
        .ok_or_else(|| {
            bad(format!(
                "block {}+{} outside payload of {}",
                b.offset,
                b.len,
                payload.len()
            ))
        })
}

impl ModelBundle {
    pub fn part_names(&self) -> Vec<String> {
        self.parts.iter().map(|p| p.name.clone()).collect()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer {
            payload: Vec::new(),
        };
        let parts = self
            .parts
            .iter()
            .map(|p| PartHeader {
                name: p.name.clone(),
                k: p.k,
                model: p.model.as_ref().map(|m| SvmHeader {
                    classes: m.classes.clone(),
                    params: m.params,
                    priors: m.priors.clone(),
                    scaling_mean: w.push(&m.scaling.mean),
                    scaling_scale: w.push(&m.scaling.scale),
                    pairs: m
                        .pairs
                        .iter()
                        .map(|pm| PairHeader {
                            pos: pm.pos,
                            neg: pm.neg,
                            bias: pm.bias,
                            platt: pm.platt,
                            weights: w.push(&pm.weights),
                        })
                        .collect(),
                }),
                trajectories: p
                    .trajectories
                    .iter()
                    .map(|t| {
                        let mut values =
                            Vec::with_capacity(t.len() * (t.n() * t.dim() + t.dim() * t.dim()));
                        for pt in t.points() {
                            values.extend_from_slice(pt.u().as_slice());
                            values.extend_from_slice(pt.r2().as_slice());
                        }
                        TrajHeader {
                            points: t.len(),
                            n: t.n(),
                            d: t.dim(),
                            data: w.push(&values),
                        }
                    })
                    .collect(),
            })
            .collect();
        let header = Header {
            classes: self.classes.clone(),
            classifier: self.classifier.clone(),
            resampling: self.resampling,
            schema: self.schema.clone(),
            train_ids: self.train_ids.clone(),
            train_labels: self.train_labels.clone(),
            train_subjects: self.train_subjects.clone(),
            parts,
            payload_len: w.payload.len() as u64,
        };
        let json = serde_json::to_vec(&header).expect("header serializes");
        let mut out = Vec::with_capacity(20 + json.len() + 8 * w.payload.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(json.len() as u64).to_le_bytes());
        out.extend_from_slice(&json);
        for v in &w.payload {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 20 || &bytes[..8] != MAGIC {
            return Err(bad("not a model file"));
        }
        let version = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
        if version != VERSION {
            return Err(bad(format!("unsupported version {version}")));
        }
        let hlen = u64::from_le_bytes(bytes[12..20].try_into().expect("8 bytes"));
        let hend = usize::try_from(hlen)
            .ok()
            .and_then(|h| h.checked_add(20))
            .filter(|&e| e <= bytes.len())
            .ok_or_else(|| bad("truncated header"))?;
        let header: Header =
            serde_json::from_slice(&bytes[20..hend]).map_err(|e| bad(format!("header: {e}")))?;
        let rest = &bytes[hend..];
        if !rest.len().is_multiple_of(8) || (rest.len() / 8) as u64 != header.payload_len {
            return Err(bad(format!(
                "payload has {} bytes, header declares {} values",
                rest.len(),
                header.payload_len
            )));
        }
        let payload: Vec<f64> = rest
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        let m = header.train_ids.len();
        if header.train_labels.len() != m || header.train_subjects.len() != m {
            return Err(bad("training ids, labels and subjects differ in length"));
        }
        let mut parts = Vec::with_capacity(header.parts.len());
        for ph in header.parts {
            if ph.trajectories.len() != m {
                return Err(bad(format!(
                    "part {} has {} trajectories for {m} training samples",
                    ph.name,
                    ph.trajectories.len()
                )));
            }
            let model = match ph.model {
                None => None,
                Some(sh) => Some(SvmModel {
                    classes: sh.classes,
                    params: sh.params,
                    priors: sh.priors,
                    scaling: Scaling {
                        mean: slice(&payload, sh.scaling_mean)?.to_vec(),
                        scale: slice(&payload, sh.scaling_scale)?.to_vec(),
                    },
                    pairs: sh
                        .pairs
                        .into_iter()
                        .map(|p| {
                            Ok(PairModel {
                                pos: p.pos,
                                neg: p.neg,
                                bias: p.bias,
                                platt: p.platt,
                                weights: slice(&payload, p.weights)?.to_vec(),
                            })
                        })
                        .collect::<Result<_>>()?,
                }),
            };
            if ph.trajectories.len() != header.train_ids.len() {
                return Err(bad(format!(
                    "part {:?} has the wrong number of trajectories",
                    ph.name
                )));
            }
            let mut trajectories = Vec::with_capacity(ph.trajectories.len());
            for (i, th) in ph.trajectories.into_iter().enumerate() {
                let (n, d) = (th.n, th.d);
                let data = slice(&payload, th.data)?;
                if data.len() != th.points * (n * d + d * d) {
                    return Err(bad("trajectory block has the wrong size"));
                }
                let points = data
                    .chunks_exact(n * d + d * d)
                    .map(|c| {
                        GramPoint::new(
                            DMatrix::from_column_slice(n, d, &c[..n * d]),
                            DMatrix::from_column_slice(d, d, &c[n * d..]),
                        )
                    })
                    .collect::<Result<Vec<_>>>()
                    .map_err(|e| bad(format!("trajectory {i}: {e}")))?;
                let meta = TrajectoryMeta {
                    id: Some(header.train_ids[i].clone()),
                    label: Some(header.train_labels[i].clone()),
                    subject: Some(header.train_subjects[i].clone()),
                    part: ph.name.parse().expect("infallible"),
                };
                trajectories.push(
                    Trajectory::new(points, meta)
                        .map_err(|e| bad(format!("trajectory {i}: {e}")))?,
                );
            }
            parts.push(BundlePart {
                name: ph.name,
                k: ph.k,
                model,
                trajectories,
            });
        }
        if parts.is_empty() {
            return Err(bad("no parts"));
        }
        Ok(Self {
            classes: header.classes,
            classifier: header.classifier,
            resampling: header.resampling,
            schema: header.schema,
            train_ids: header.train_ids,
            train_labels: header.train_labels,
            train_subjects: header.train_subjects,
            parts,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes).map_err(|e| match e {
            Error::Model(m) => Error::Model(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Classifies one landmark sequence.
    pub fn predict(&self, seq: &SequenceFile) -> Result<Prediction> {
        let trajs = sequence_parts(seq, "query", self.schema.as_ref(), &self.resampling)?;
        if trajs.len() != self.parts.len() {
            return Err(Error::DimensionMismatch(format!(
                "sequence yields {} parts, model has {}",
                trajs.len(),
                self.parts.len()
            )));
        }
        let mut per_part = Vec::with_capacity(self.parts.len());
        for (bp, t) in self.parts.iter().zip(&trajs) {
            let phi = proximity_vector(t, &bp.trajectories, ClosenessParams::new(bp.k)?)?;
            match (&bp.model, self.classifier.kind) {
                (Some(model), ClassifierKind::Ppfsvm) => per_part.push(model.probabilities(&phi)?),
                _ => {
                    let idx: Vec<usize> = self
                        .train_labels
                        .iter()
                        .map(|l| {
                            self.classes
                                .binary_search(l)
                                .map_err(|_| bad(format!("unknown label {l:?}")))
                        })
                        .collect::<Result<_>>()?;
                    let c = knn_from_distances(
                        &phi.values,
                        &idx,
                        self.classifier.neighbors.min(idx.len()),
                    )?;
                    let mut one_hot = vec![0.0; self.classes.len()];
                    one_hot[c] = 1.0;
                    per_part.push(one_hot);
                    // nearest neighbors decide on the whole set alone
                    break;
                }
            }
        }
        let (probabilities, class) = if per_part.len() > 1 {
            let fused = fuse_probabilities(&per_part);
            let class = first_max(&fused);
            (fused, class)
        } else {
            let probs = per_part.pop().expect("one part");
            let class = argmax_lowest(&probs);
            (probs, class)
        };
        Ok(Prediction {
            class,
            label: self.classes[class].clone(),
            probabilities,
        })
    }
}
