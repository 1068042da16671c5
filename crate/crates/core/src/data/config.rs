//! Run configuration read from TOML.
//!
//! ```toml
//! seed = 7
//!
//! [closeness]
//! k_grid = { start = 0.0, stop = 3.0, step = 0.1 }   # or a list: [0.0, 0.5, 1.0]
//!
//! [resample]
//! mode = "adaptive"        # none | adaptive | median_length | fixed_length
//! zeta1 = 0.001
//! zeta2 = 0.05
//!
//! [classifier]
//! kind = "ppfsvm"          # ppfsvm | knn
//! c = 1.0
//!
//! [protocol]
//! kind = "kfold"           # loocv | loso | kfold | half_half
//! folds = 5
//!
//! [parts]
//! schema = "kinect20"      # shipped layout name or path to a schema file
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::ClosenessParams;

/// Keys without a default. A file lacking one of them is rejected with the
/// key named in the error.
const REQUIRED: [&str; 2] = ["classifier.kind", "protocol.kind"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum KGrid {
    List(Vec<f64>),
    Range { start: f64, stop: f64, step: f64 },
}

impl Default for KGrid {
    fn default() -> Self {
        KGrid::Range {
            start: 0.0,
            stop: 3.0,
            step: 0.1,
        }
    }
}

impl KGrid {
    /// Grid values in ascending order. Range endpoints are inclusive and values
    /// are rounded to 10 decimals so that `0.1 * 3` reads as `0.3`.
    pub fn values(&self) -> Result<Vec<f64>> {
        let mut v = match *self {
            KGrid::List(ref v) => v.clone(),
            KGrid::Range { start, stop, step } => {
                if !(step > 0.0 && stop >= start && start.is_finite() && stop.is_finite()) {
                    return Err(Error::Config(format!(
                        "closeness.k_grid: bad range start={start} stop={stop} step={step}"
                    )));
                }
                let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
                (0..n)
                    .map(|i| ((start + i as f64 * step) * 1e10).round() / 1e10)
                    .collect()
            }
        };
        if v.is_empty() {
            return Err(Error::Config("closeness.k_grid is empty".into()));
        }
        if let Some(k) = v.iter().find(|k| !(k.is_finite() && **k >= 0.0)) {
            return Err(Error::Config(format!("closeness.k_grid: invalid k = {k}")));
        }
        v.sort_by(f64::total_cmp);
        v.dedup();
        Ok(v)
    }

    pub fn params(&self) -> Result<Vec<ClosenessParams>> {
        self.values()?
            .into_iter()
            .map(ClosenessParams::new)
            .collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClosenessConfig {
    #[serde(default)]
    pub k_grid: KGrid,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResampleMode {
    #[default]
    None,
    Adaptive,
    MedianLength,
    FixedLength,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResampleConfig {
    #[serde(default)]
    pub mode: ResampleMode,
    pub zeta1: Option<f64>,
    pub zeta2: Option<f64>,
    pub target_len: Option<usize>,
    /// Closeness weight used while re-sampling.
    #[serde(default = "one")]
    pub k: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for ResampleConfig {
    fn default() -> Self {
        Self {
            mode: ResampleMode::None,
            zeta1: None,
            zeta2: None,
            target_len: None,
            k: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    Ppfsvm,
    Knn,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifierConfig {
    pub kind: ClassifierKind,
    #[serde(default = "one")]
    pub c: f64,
    #[serde(default = "five")]
    pub neighbors: usize,
}

fn five() -> usize {
    5
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            kind: ClassifierKind::Ppfsvm,
            c: 1.0,
            neighbors: 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolKind {
    Loocv,
    Loso,
    Kfold,
    HalfHalf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolConfig {
    pub kind: ProtocolKind,
    #[serde(default = "five")]
    pub folds: usize,
    /// Folds of the grid search run inside each training set.
    #[serde(default = "five")]
    pub inner_folds: usize,
    /// Fixed half-half split: a JSON list of training subjects.
    pub split_file: Option<PathBuf>,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            kind: ProtocolKind::Loocv,
            folds: 5,
            inner_folds: 5,
            split_file: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartsConfig {
    pub schema: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub closeness: ClosenessConfig,
    #[serde(default)]
    pub resample: ResampleConfig,
    #[serde(default)]
    pub classifier: ClassifierConfig,
    #[serde(default)]
    pub protocol: ProtocolConfig,
    pub parts: Option<PartsConfig>,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::Config(e.message().to_string()))?;
        for key in REQUIRED {
            let (section, field) = key.split_once('.').expect("dotted key");
            if table.get(section).and_then(|s| s.get(field)).is_none() {
                return Err(Error::Config(format!("missing key `{key}`")));
            }
        }
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let err = |m: &str| Err(Error::Config(m.into()));
        self.closeness.k_grid.values()?;
        if !(self.classifier.c > 0.0 && self.classifier.c.is_finite()) {
            return err("classifier.c must be positive");
        }
        if self.classifier.neighbors == 0 {
            return err("classifier.neighbors must be at least 1");
        }
        if self.protocol.folds < 2 {
            return err("protocol.folds must be at least 2");
        }
        if self.protocol.inner_folds < 2 {
            return err("protocol.inner_folds must be at least 2");
        }
        let r = &self.resample;
        if !(r.k >= 0.0 && r.k.is_finite()) {
            return err("resample.k must be non-negative");
        }
        match r.mode {
            ResampleMode::Adaptive if r.zeta1.is_none() || r.zeta2.is_none() => {
                return err("resample.mode = \"adaptive\" needs zeta1 and zeta2");
            }
            ResampleMode::FixedLength if r.target_len.is_none() => {
                return err("resample.mode = \"fixed_length\" needs target_len");
            }
            _ => {}
        }
        if r.target_len.is_some_and(|l| l < 2) {
            return err("resample.target_len must be at least 2");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FULL: &str = r#"
seed = 3
[closeness]
k_grid = [1.0, 0.0, 0.5]
[resample]
mode = "adaptive"
zeta1 = 0.01
zeta2 = 0.1
[classifier]
kind = "knn"
neighbors = 3
[protocol]
kind = "kfold"
folds = 4
[parts]
schema = "kinect20"
"#;

    #[test]
    fn full_file() {
        let c = RunConfig::from_toml_str(FULL).unwrap();
        assert_eq!(c.seed, 3);
        assert_eq!(c.closeness.k_grid.values().unwrap(), [0.0, 0.5, 1.0]);
        assert_eq!(c.resample.mode, ResampleMode::Adaptive);
        assert_eq!(c.classifier.kind, ClassifierKind::Knn);
        assert_eq!(c.classifier.c, 1.0);
        assert_eq!(c.protocol.folds, 4);
        assert_eq!(c.protocol.inner_folds, 5);
        assert_eq!(c.parts.unwrap().schema, "kinect20");
    }

    #[test]
    fn default_grid_has_31_values() {
        let v = KGrid::default().values().unwrap();
        assert_eq!(v.len(), 31);
        assert_eq!(v[3], 0.3);
        assert_eq!(v[30], 3.0);
    }

    #[test]
    fn missing_key_is_named() {
        let text = "[classifier]\nkind = \"ppfsvm\"\n";
        let err = RunConfig::from_toml_str(text).unwrap_err();
        assert!(err.to_string().contains("protocol.kind"), "{err}");
    }

    #[test]
    fn rejects_unknown_and_invalid() {
        let base = "[classifier]\nkind = \"ppfsvm\"\n[protocol]\nkind = \"loocv\"\n";
        assert!(RunConfig::from_toml_str(base).is_ok());
        assert!(RunConfig::from_toml_str(&format!("{base}color = 1\n")).is_err());
        let neg = base.replace("\"ppfsvm\"", "\"ppfsvm\"\nc = -1.0");
        assert!(RunConfig::from_toml_str(&neg).is_err());
        let grid = format!("[closeness]\nk_grid = [-0.5]\n{base}");
        assert!(RunConfig::from_toml_str(&grid).is_err());
    }
}
