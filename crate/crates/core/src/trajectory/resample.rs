//! Adaptive re-sampling driven by the closeness between consecutive points.
//!
//! A point closer than `zeta1` to the last kept point is dropped. A gap wider
//! than `zeta2` is split by equally spaced samples of the pseudo-geodesic.
//! Closeness is a squared length, so splitting a gap `c` into `p` pieces
//! leaves pieces of closeness `c / p²`; `p = ⌈√(c/ζ₂)⌉` is the fewest pieces
//! that fit under `zeta2`, and each then exceeds `ζ₂/4`.

use serde::{Deserialize, Serialize};

use super::Trajectory;
use crate::error::{Error, Result};
use crate::geometry::{closeness, pseudo_geodesic, ClosenessParams, GramPoint};

/// Bisection steps allowed before `resample_to_length` gives up on the
/// threshold search.
const MAX_BISECTIONS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResampleParams {
    zeta1: f64,
    zeta2: f64,
    target_len: Option<usize>,
}

impl ResampleParams {
    pub fn new(zeta1: f64, zeta2: f64) -> Result<Self> {
        if !(zeta1 >= 0.0 && zeta1 < zeta2 && zeta2.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "need 0 <= zeta1 < zeta2, got zeta1 = {zeta1}, zeta2 = {zeta2}"
            )));
        }
        Ok(Self {
            zeta1,
            zeta2,
            target_len: None,
        })
    }

    pub fn with_target_len(mut self, len: usize) -> Self {
        self.target_len = Some(len);
        self
    }

    pub fn zeta1(&self) -> f64 {
        self.zeta1
    }

    pub fn zeta2(&self) -> f64 {
        self.zeta2
    }

    pub fn target_len(&self) -> Option<usize> {
        self.target_len
    }
}

/// Drops near-duplicate points and fills wide gaps. The first and last points
/// are always kept; a final point identical to the last kept one is not
/// repeated unless that would leave a single point.
pub fn adaptive_resample(
    traj: &Trajectory,
    params: &ResampleParams,
    closeness_params: ClosenessParams,
) -> Result<Trajectory> {
    let pts = traj.points();
    let mut out = vec![pts[0].clone()];
    let mut prev = &pts[0];
    for (idx, q) in pts.iter().enumerate().skip(1) {
        let last = idx + 1 == pts.len();
        let c = closeness(prev, q, closeness_params)?;
        // an exact repeat of the last kept point is dropped even at the end,
        // since the endpoint is already there
        if c < params.zeta1 && (!last || c == 0.0) {
            continue;
        }
        if c > params.zeta2 {
            let pieces = (c / params.zeta2).sqrt().ceil() as usize;
            for s in 1..pieces {
                out.push(pseudo_geodesic(prev, q, s as f64 / pieces as f64)?);
            }
        }
        out.push(q.clone());
        prev = q;
    }
    if out.len() < 2 {
        out.push(pts[pts.len() - 1].clone());
    }
    Trajectory::new(out, traj.meta().clone())
}

/// Length of the adaptive re-sampling with thresholds `(s, 2s)`.
fn scaled_len(traj: &Trajectory, s: f64, cp: ClosenessParams) -> Result<(usize, Trajectory)> {
    let out = adaptive_resample(traj, &ResampleParams::new(s, 2.0 * s)?, cp)?;
    Ok((out.len(), out))
}

/// Searches a threshold scale `s` (thresholds `s` and `2s`) by bisection so
/// that adaptive re-sampling yields exactly `len` points.
pub fn resample_to_length_strict(
    traj: &Trajectory,
    len: usize,
    cp: ClosenessParams,
) -> Result<Trajectory> {
    if len < 2 {
        return Err(Error::InvalidParameter(format!(
            "target length must be >= 2, got {len}"
        )));
    }
    if traj.len() == len {
        return Ok(traj.clone());
    }
    let pts = traj.points();
    let mut reach = 0.0f64;
    for p in &pts[1..] {
        reach = reach.max(closeness(&pts[0], p, cp)?);
    }
    for w in pts.windows(2) {
        reach = reach.max(closeness(&w[0], &w[1], cp)?);
    }
    let unreachable = |reached| Error::UnreachableLength {
        target: len,
        reached,
    };
    if !(reach > 0.0) {
        return Err(unreachable(traj.len()));
    }
    // At s_hi every interior point is dropped; shrink s_lo until long enough.
    let mut hi = 2.0 * reach;
    let (mut lo, mut lo_len) = (hi, 2);
    let mut closest = 2;
    for _ in 0..200 {
        lo *= 0.5;
        let (l, out) = scaled_len(traj, lo, cp)?;
        if l == len {
            return Ok(out);
        }
        lo_len = l;
        if l > len {
            break;
        }
        closest = l;
        hi = lo;
    }
    if lo_len < len {
        return Err(unreachable(closest));
    }
    for _ in 0..MAX_BISECTIONS {
        let mid = (lo * hi).sqrt();
        let (l, out) = scaled_len(traj, mid, cp)?;
        if l == len {
            return Ok(out);
        }
        if l.abs_diff(len) < closest.abs_diff(len) {
            closest = l;
        }
        if l > len {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(unreachable(closest))
}

/// Exactly `len` points: threshold bisection first, then uniform sampling by
/// pseudo-geodesic arc length when the bisection cannot land on `len`.
pub fn resample_to_length(
    traj: &Trajectory,
    len: usize,
    cp: ClosenessParams,
) -> Result<Trajectory> {
    match resample_to_length_strict(traj, len, cp) {
        Err(Error::UnreachableLength { .. }) => arc_length_resample(traj, len, cp),
        other => other,
    }
}

fn arc_length_resample(traj: &Trajectory, len: usize, cp: ClosenessParams) -> Result<Trajectory> {
    let pts = traj.points();
    let seg: Vec<f64> = pts
        .windows(2)
        .map(|w| closeness(&w[0], &w[1], cp).map(f64::sqrt))
        .collect::<Result<_>>()?;
    let total: f64 = seg.iter().sum();
    let mut out: Vec<GramPoint> = Vec::with_capacity(len);
    if !(total > 0.0) {
        for k in 0..len {
            out.push(pseudo_geodesic(
                &pts[0],
                &pts[pts.len() - 1],
                k as f64 / (len - 1) as f64,
            )?);
        }
        return Trajectory::new(out, traj.meta().clone());
    }
    out.push(pts[0].clone());
    let mut start = 0.0;
    let mut i = 0;
    for k in 1..len - 1 {
        let target = total * k as f64 / (len - 1) as f64;
        while i + 1 < seg.len() && start + seg[i] < target {
            start += seg[i];
            i += 1;
        }
        let t = if seg[i] > 0.0 {
            ((target - start) / seg[i]).clamp(0.0, 1.0)
        } else {
            0.0
        };
        out.push(pseudo_geodesic(&pts[i], &pts[i + 1], t)?);
    }
    out.push(pts[pts.len() - 1].clone());
    Trajectory::new(out, traj.meta().clone())
}

/// Applies `params`: a fixed target length when set, adaptive thresholds
/// otherwise.
pub fn resample(
    traj: &Trajectory,
    params: &ResampleParams,
    cp: ClosenessParams,
) -> Result<Trajectory> {
    match params.target_len {
        Some(len) => resample_to_length(traj, len, cp),
        None => adaptive_resample(traj, params, cp),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectory::{trajectory_from_frames, TrajectoryMeta};
    use nalgebra::DMatrix;

    fn frame(sx: f64) -> DMatrix<f64> {
        DMatrix::from_row_slice(4, 2, &[sx, 0.0, 0.0, 1.0, -sx, 0.0, 0.0, -1.0])
    }

    fn traj(scales: &[f64]) -> Trajectory {
        let frames: Vec<_> = scales.iter().map(|&s| frame(s)).collect();
        trajectory_from_frames(&frames, TrajectoryMeta::default()).unwrap()
    }

    #[test]
    fn constant_collapses_to_endpoints() {
        let t = traj(&[1.0; 6]);
        let p = ResampleParams::new(0.01, 0.1).unwrap();
        let out = adaptive_resample(&t, &p, ClosenessParams::default()).unwrap();
        assert_eq!(out.len(), 2);
    }

    #[test]
    fn wide_gap_is_split_into_pieces_under_zeta2() {
        let t = traj(&[1.0, 3.0]);
        let cp = ClosenessParams::default();
        let c = closeness(&t.points()[0], &t.points()[1], cp).unwrap();
        // 9 ζ₂ needs three pieces
        let p = ResampleParams::new(0.0, c / 9.0 * (1.0 + 1e-9)).unwrap();
        let out = adaptive_resample(&t, &p, cp).unwrap();
        assert_eq!(out.len(), 4);
        for w in out.points().windows(2) {
            let piece = closeness(&w[0], &w[1], cp).unwrap();
            assert!((piece - c / 9.0).abs() < 1e-9 * c, "{piece} vs {}", c / 9.0);
        }
    }

    #[test]
    fn invalid_thresholds() {
        assert!(ResampleParams::new(0.2, 0.1).is_err());
        assert!(ResampleParams::new(-1.0, 0.1).is_err());
        assert!(ResampleParams::new(0.1, 0.1).is_err());
    }

    #[test]
    fn exact_length_is_identity() {
        let t = traj(&[1.0, 1.5, 2.0, 1.2]);
        let out = resample_to_length(&t, 4, ClosenessParams::default()).unwrap();
        assert_eq!(out, t);
    }

    #[test]
    fn two_points_to_five() {
        let t = traj(&[1.0, 2.0]);
        let cp = ClosenessParams::default();
        let out = resample_to_length(&t, 5, cp).unwrap();
        assert_eq!(out.len(), 5);
        assert_eq!(out.points()[0], t.points()[0]);
        assert_eq!(out.points()[4], t.points()[1]);
        let c = closeness(&t.points()[0], &t.points()[1], cp).unwrap();
        for w in out.points().windows(2) {
            let piece = closeness(&w[0], &w[1], cp).unwrap();
            assert!((piece - c / 16.0).abs() < 1e-9 * c);
        }
    }

    #[test]
    fn constant_trajectory_falls_back() {
        let t = traj(&[1.0; 3]);
        let cp = ClosenessParams::default();
        assert!(matches!(
            resample_to_length_strict(&t, 7, cp),
            Err(Error::UnreachableLength { target: 7, .. })
        ));
        assert_eq!(resample_to_length(&t, 7, cp).unwrap().len(), 7);
    }
}
