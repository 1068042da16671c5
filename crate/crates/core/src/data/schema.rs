//! Named groups of landmark indices (body parts).

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reserved name for the full landmark set; always available, never listed.
pub const WHOLE: &str = "whole";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartSchema {
    pub name: String,
    pub n_landmarks: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub joints: Vec<String>,
    pub parts: BTreeMap<String, Vec<usize>>,
}

const BUILTINS: [(&str, &str); 3] = [
    (
        "kinect20",
        include_str!("../../fixtures/schemas/kinect20.json"),
    ),
    (
        "florence15",
        include_str!("../../fixtures/schemas/florence15.json"),
    ),
    (
        "mocap43",
        include_str!("../../fixtures/schemas/mocap43.json"),
    ),
];

impl PartSchema {
    /// Checks index ranges, duplicates and naming. Part sizes are checked per
    /// dimension by [`PartSchema::check_dim`].
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSchema(m));
        if self.n_landmarks == 0 {
            return bad("n_landmarks must be positive".into());
        }
        if !self.joints.is_empty() && self.joints.len() != self.n_landmarks {
            return bad(format!(
                "{} joint names for {} landmarks",
                self.joints.len(),
                self.n_landmarks
            ));
        }
        if self.parts.is_empty() {
            return bad("no parts defined".into());
        }
        for (name, idx) in &self.parts {
            if name == WHOLE {
                return bad(format!("part name {WHOLE:?} is reserved"));
            }
            if let Some(&i) = idx.iter().find(|&&i| i >= self.n_landmarks) {
                return bad(format!(
                    "part {name:?} has index {i}, outside [0, {})",
                    self.n_landmarks
                ));
            }
            if idx.iter().collect::<BTreeSet<_>>().len() != idx.len() {
                return bad(format!("part {name:?} repeats an index"));
            }
        }
        Ok(())
    }

    /// Every part needs at least `d + 1` landmarks to span `d` dimensions.
    pub fn check_dim(&self, d: usize) -> Result<()> {
        for (name, idx) in &self.parts {
            if idx.len() < d + 1 {
                return Err(Error::PartTooSmall {
                    part: name.clone(),
                    size: idx.len(),
                    required: d + 1,
                });
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let schema: Self =
            serde_json::from_str(text).map_err(|e| Error::InvalidSchema(e.to_string()))?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::InvalidSchema(m) => Error::InvalidSchema(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// One of the shipped layouts: `kinect20`, `florence15`, `mocap43`.
    pub fn builtin(name: &str) -> Option<Self> {
        BUILTINS
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, text)| Self::from_json(text).expect("shipped schema is valid"))
    }

    pub fn builtin_names() -> impl Iterator<Item = &'static str> {
        BUILTINS.iter().map(|(n, _)| *n)
    }

    /// Part names in evaluation order, `whole` first.
    pub fn part_names(&self) -> Vec<String> {
        std::iter::once(WHOLE.to_string())
            .chain(self.parts.keys().cloned())
            .collect()
    }

    /// Landmark indices of `part`; `whole` maps to every landmark.
    pub fn indices(&self, part: &str) -> Option<Vec<usize>> {
        if part == WHOLE {
            return Some((0..self.n_landmarks).collect());
        }
        self.parts.get(part).cloned()
    }
}
