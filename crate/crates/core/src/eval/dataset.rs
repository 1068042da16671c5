//! Landmark sequences turned into per-part trajectories, ready for
//! evaluation.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::classify::part_frames;
use crate::data::{PartSchema, ResampleConfig, ResampleMode, SequenceFile, WHOLE};
use crate::error::{Error, Result};
use crate::geometry::ClosenessParams;
use crate::par::{map_indices, Execution};
use crate::trajectory::{
    adaptive_resample, resample_to_length, trajectory_from_frames, Trajectory, TrajectoryMeta,
};

/// Re-sampling with every data-dependent choice fixed, so that new
/// sequences are treated exactly like the training set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Resampling {
    None,
    Adaptive { zeta1: f64, zeta2: f64, k: f64 },
    Length { target: usize, k: f64 },
}

impl Resampling {
    /// Resolves a configuration; `median_length` uses the median sequence
    /// length of `lengths`.
    pub fn resolve(cfg: &ResampleConfig, lengths: &[usize]) -> Result<Self> {
        Ok(match cfg.mode {
            ResampleMode::None => Resampling::None,
            ResampleMode::Adaptive => Resampling::Adaptive {
                zeta1: cfg
                    .zeta1
                    .ok_or_else(|| Error::Config("resample.zeta1 missing".into()))?,
                zeta2: cfg
                    .zeta2
                    .ok_or_else(|| Error::Config("resample.zeta2 missing".into()))?,
                k: cfg.k,
            },
            ResampleMode::FixedLength => Resampling::Length {
                target: cfg
                    .target_len
                    .ok_or_else(|| Error::Config("resample.target_len missing".into()))?,
                k: cfg.k,
            },
            ResampleMode::MedianLength => {
                let mut l = lengths.to_vec();
                l.sort_unstable();
                let target = l.get(l.len() / 2).copied().unwrap_or(2).max(2);
                Resampling::Length { target, k: cfg.k }
            }
        })
    }

    pub fn apply(&self, traj: Trajectory) -> Result<Trajectory> {
        match *self {
            Resampling::None => Ok(traj),
            Resampling::Adaptive { zeta1, zeta2, k } => {
                let params = crate::trajectory::ResampleParams::new(zeta1, zeta2)?;
                adaptive_resample(&traj, &params, ClosenessParams::new(k)?)
            }
            Resampling::Length { target, k } => {
                resample_to_length(&traj, target, ClosenessParams::new(k)?)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub id: String,
    pub label: String,
    pub subject: String,
    /// One trajectory per part, in the dataset's part order.
    pub parts: Vec<Trajectory>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    /// `whole` first, then the schema parts.
    pub part_names: Vec<String>,
    pub classes: Vec<String>,
    pub samples: Vec<Sample>,
    pub schema: Option<PartSchema>,
    pub resampling: Resampling,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn labels(&self) -> Vec<String> {
        self.samples.iter().map(|s| s.label.clone()).collect()
    }

    pub fn subjects(&self) -> Vec<String> {
        self.samples.iter().map(|s| s.subject.clone()).collect()
    }

    pub fn class_index(&self, label: &str) -> Option<usize> {
        self.classes
            .binary_search_by(|c| c.as_str().cmp(label))
            .ok()
    }

    /// Trajectories of part `p` for every sample.
    pub fn part(&self, p: usize) -> Vec<Trajectory> {
        self.samples.iter().map(|s| s.parts[p].clone()).collect()
    }
}

/// Per-part trajectories of one sequence.
pub fn sequence_parts(
    seq: &SequenceFile,
    id: &str,
    schema: Option<&PartSchema>,
    resampling: &Resampling,
) -> Result<Vec<Trajectory>> {
    let groups = match schema {
        Some(s) => part_frames(&seq.frames, s)?,
        None => vec![(WHOLE.to_string(), seq.frames.clone())],
    };
    groups
        .into_iter()
        .map(|(name, frames)| {
            let meta = TrajectoryMeta {
                id: Some(id.to_string()),
                label: Some(seq.meta.label.clone()),
                subject: Some(seq.meta.subject.clone()),
                part: name.parse().expect("infallible"),
            };
            resampling.apply(trajectory_from_frames(&frames, meta)?)
        })
        .collect()
}

/// Builds every sample's part trajectories, in parallel over sequences.
pub fn build_dataset(
    seqs: &[(String, SequenceFile)],
    schema: Option<&PartSchema>,
    resample: &ResampleConfig,
    exec: Execution,
) -> Result<Dataset> {
    let lengths: Vec<usize> = seqs.iter().map(|(_, s)| s.len()).collect();
    let resampling = Resampling::resolve(resample, &lengths)?;
    let built = map_indices(seqs.len(), exec, |i| {
        let (id, seq) = &seqs[i];
        sequence_parts(seq, id, schema, &resampling).map_err(|e| e.in_sample(id))
    });
    let mut samples = Vec::with_capacity(seqs.len());
    for ((id, seq), parts) in seqs.iter().zip(built) {
        samples.push(Sample {
            id: id.clone(),
            label: seq.meta.label.clone(),
            subject: seq.meta.subject.clone(),
            parts: parts?,
        });
    }
    let classes = samples
        .iter()
        .map(|s| s.label.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let part_names = match schema {
        Some(s) => s.part_names(),
        None => vec![WHOLE.to_string()],
    };
    Ok(Dataset {
        part_names,
        classes,
        samples,
        schema: schema.cloned(),
        resampling,
    })
}
