//! Trajectories of Gram points built from landmark sequences, their
//! alignment, and re-sampling.

mod dtw;
mod resample;

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{self, GramPoint, LandmarkConfig};

pub use dtw::{
    cost_matrix, dtw_align, dtw_distance, dtw_distances_for_grid, dtw_on_costs, WarpingPath,
};
pub use resample::{
    adaptive_resample, resample, resample_to_length, resample_to_length_strict, ResampleParams,
};

/// Body part a trajectory describes.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub enum Part {
    #[default]
    Whole,
    Arms,
    Legs,
    Torso,
    Custom(String),
}

impl fmt::Display for Part {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Part::Whole => f.write_str("whole"),
            Part::Arms => f.write_str("arms"),
            Part::Legs => f.write_str("legs"),
            Part::Torso => f.write_str("torso"),
            Part::Custom(name) => f.write_str(name),
        }
    }
}

impl FromStr for Part {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s {
            "whole" => Part::Whole,
            "arms" => Part::Arms,
            "legs" => Part::Legs,
            "torso" => Part::Torso,
            other => Part::Custom(other.to_string()),
        })
    }
}

impl Serialize for Part {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Part {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Ok(s.parse().expect("infallible"))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    pub id: Option<String>,
    pub label: Option<String>,
    pub subject: Option<String>,
    pub part: Part,
}

/// A time-ordered sequence of points of S⁺(d,n), consecutive points joined
/// by pseudo-geodesics.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    points: Vec<GramPoint>,
    meta: TrajectoryMeta,
}

impl Trajectory {
    pub fn new(points: Vec<GramPoint>, meta: TrajectoryMeta) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::TooShort(points.len()));
        }
        let shape = points[0].u().shape();
        if let Some(i) = points.iter().position(|p| p.u().shape() != shape) {
            return Err(Error::DimensionMismatch(format!(
                "point {i} has (n,d) = {:?}, expected {shape:?}",
                points[i].u().shape()
            )));
        }
        Ok(Self { points, meta })
    }

    pub fn points(&self) -> &[GramPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn n(&self) -> usize {
        self.points[0].n()
    }

    pub fn dim(&self) -> usize {
        self.points[0].dim()
    }

    pub fn meta(&self) -> &TrajectoryMeta {
        &self.meta
    }

    pub fn with_meta(mut self, meta: TrajectoryMeta) -> Self {
        self.meta = meta;
        self
    }

    /// Landmark configurations `U R` reproducing each point's Gram matrix.
    pub fn to_landmarks(&self) -> Vec<DMatrix<f64>> {
        self.points.iter().map(GramPoint::to_landmarks).collect()
    }

    pub(crate) fn same_shape(&self, other: &Trajectory) -> Result<()> {
        if (self.n(), self.dim()) != (other.n(), other.dim()) {
            return Err(Error::DimensionMismatch(format!(
                "trajectories on S⁺({}, {}) and S⁺({}, {})",
                self.dim(),
                self.n(),
                other.dim(),
                other.n()
            )));
        }
        Ok(())
    }
}

/// Maps every frame to its Gram point through the polar factor. Frames whose
/// centered points are rank deficient get the regularized polar factor.
pub fn build_trajectory(frames: &[LandmarkConfig], meta: TrajectoryMeta) -> Result<Trajectory> {
    if frames.len() < 2 {
        return Err(Error::TooShort(frames.len()));
    }
    let shape = (frames[0].n(), frames[0].dim());
    let mut points = Vec::with_capacity(frames.len());
    for (i, frame) in frames.iter().enumerate() {
        if (frame.n(), frame.dim()) != shape {
            return Err(Error::DimensionMismatch(format!(
                "frame {i} has (n,d) = {:?}, expected {shape:?}",
                (frame.n(), frame.dim())
            )));
        }
        let point = match geometry::polar_factor(frame) {
            Err(Error::DegenerateConfig { .. }) => geometry::polar_factor_regularized(frame),
            other => other,
        }
        .map_err(|e| e.at_frame(i))?;
        points.push(point);
    }
    Trajectory::new(points, meta)
}

/// Centers raw `n×d` frames and builds their trajectory.
pub fn trajectory_from_frames(frames: &[DMatrix<f64>], meta: TrajectoryMeta) -> Result<Trajectory> {
    let configs = frames
        .iter()
        .enumerate()
        .map(|(i, f)| LandmarkConfig::center_unchecked(f.clone()).map_err(|e| e.at_frame(i)))
        .collect::<Result<Vec<_>>>()?;
    build_trajectory(&configs, meta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{closeness, ClosenessParams};

    fn square() -> DMatrix<f64> {
        DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 0.0, 2.0, -1.0, 0.0, 0.0, -2.0])
    }

    fn rot(a: f64) -> DMatrix<f64> {
        let (s, c) = a.sin_cos();
        DMatrix::from_row_slice(2, 2, &[c, -s, s, c])
    }

    #[test]
    fn identical_frames_have_zero_motion() {
        let t = trajectory_from_frames(&[square(), square()], TrajectoryMeta::default()).unwrap();
        let c = closeness(
            &t.points()[0],
            &t.points()[1],
            ClosenessParams::new(1.0).unwrap(),
        )
        .unwrap();
        assert_eq!(c, 0.0);
    }

    #[test]
    fn rotated_frames_have_zero_motion() {
        let z = square();
        let t = trajectory_from_frames(
            &[z.clone(), &z * rot(0.7).transpose()],
            TrajectoryMeta::default(),
        )
        .unwrap();
        let c = closeness(
            &t.points()[0],
            &t.points()[1],
            ClosenessParams::new(1.0).unwrap(),
        )
        .unwrap();
        assert!(c < 1e-14, "{c}");
    }

    #[test]
    fn rejects_single_frame_and_mixed_shapes() {
        assert!(matches!(
            trajectory_from_frames(&[square()], TrajectoryMeta::default()),
            Err(Error::TooShort(1))
        ));
        let other = DMatrix::from_row_slice(3, 2, &[0.0, 0.0, 1.0, 0.0, 0.0, 1.0]);
        assert!(matches!(
            trajectory_from_frames(&[square(), other], TrajectoryMeta::default()),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn degenerate_frame_reports_index() {
        let collapsed = DMatrix::from_element(4, 2, 1.0);
        let err =
            trajectory_from_frames(&[square(), square(), collapsed], TrajectoryMeta::default())
                .unwrap_err();
        assert!(matches!(err, Error::Frame { frame: 2, .. }), "{err}");
        assert!(matches!(err.root(), Error::DegenerateConfig { .. }));
    }

    #[test]
    fn planar_frame_is_regularized() {
        let line = DMatrix::from_row_slice(4, 2, &[0.0, 0.0, 1.0, 1.0, 2.0, 2.0, 3.0, 3.0]);
        let t = trajectory_from_frames(&[square(), line], TrajectoryMeta::default()).unwrap();
        assert_eq!(t.len(), 2);
    }

    #[test]
    fn part_names_round_trip() {
        for p in [
            Part::Whole,
            Part::Arms,
            Part::Legs,
            Part::Torso,
            Part::Custom("face".into()),
        ] {
            assert_eq!(p.to_string().parse::<Part>().unwrap(), p);
        }
    }
}
