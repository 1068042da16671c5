//! Body-part decomposition of landmark configurations.

use nalgebra::DMatrix;

use crate::data::{PartSchema, WHOLE};
use crate::error::{Error, Result};
use crate::geometry::LandmarkConfig;

fn check(schema: &PartSchema, n: usize, d: usize) -> Result<()> {
    if n != schema.n_landmarks {
        return Err(Error::DimensionMismatch(format!(
            "schema {:?} expects {} landmarks, configuration has {n}",
            schema.name, schema.n_landmarks
        )));
    }
    schema.validate()?;
    schema.check_dim(d)
}

/// Splits one configuration into its parts, each re-centered on its own. The
/// `whole` part comes first.
pub fn decompose_parts(
    cfg: &LandmarkConfig,
    schema: &PartSchema,
) -> Result<Vec<(String, LandmarkConfig)>> {
    check(schema, cfg.n(), cfg.dim())?;
    let mut out = vec![(WHOLE.to_string(), cfg.clone())];
    for (name, idx) in &schema.parts {
        out.push((name.clone(), cfg.select(idx)?));
    }
    Ok(out)
}

/// Per-part frame sequences of raw `n×d` frames, `whole` first. Frames are
/// not centered here.
pub fn part_frames(
    frames: &[DMatrix<f64>],
    schema: &PartSchema,
) -> Result<Vec<(String, Vec<DMatrix<f64>>)>> {
    let Some(first) = frames.first() else {
        return Err(Error::TooShort(0));
    };
    check(schema, first.nrows(), first.ncols())?;
    let mut out = vec![(WHOLE.to_string(), frames.to_vec())];
    for (name, idx) in &schema.parts {
        let sub = frames.iter().map(|f| f.select_rows(idx.iter())).collect();
        out.push((name.clone(), sub));
    }
    Ok(out)
}
