//! Dynamic time warping with the closeness as local cost.
//!
//! Steps are `(1,0)`, `(0,1)` and `(1,1)` with unit weight, no window. Among
//! paths of minimal accumulated cost the shortest one is selected, so both
//! the path and the length-normalized distance are symmetric in the inputs.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::Trajectory;
use crate::error::Result;
use crate::geometry::{closeness, closeness_terms, ClosenessParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WarpingPath {
    pub pairs: Vec<(usize, usize)>,
    pub cost: f64,
}

impl WarpingPath {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Accumulated cost divided by the number of matched pairs.
    pub fn normalized_cost(&self) -> f64 {
        self.cost / self.pairs.len() as f64
    }
}

#[derive(Clone, Copy)]
struct Cell {
    cost: f64,
    len: u32,
}

impl Cell {
    fn better(self, other: Cell) -> bool {
        self.cost < other.cost || (self.cost == other.cost && self.len < other.len)
    }
}

fn best_predecessor(
    diag: Option<Cell>,
    up: Option<Cell>,
    left: Option<Cell>,
) -> Option<(Cell, u8)> {
    let mut best: Option<(Cell, u8)> = None;
    for (cand, tag) in [(diag, 0u8), (up, 1), (left, 2)] {
        if let Some(c) = cand {
            if best.is_none_or(|(b, _)| c.better(b)) {
                best = Some((c, tag));
            }
        }
    }
    best
}

/// Closeness between every pair of points, `rows × cols`.
pub fn cost_matrix(
    a: &Trajectory,
    b: &Trajectory,
    params: ClosenessParams,
) -> Result<DMatrix<f64>> {
    a.same_shape(b)?;
    let mut costs = DMatrix::zeros(a.len(), b.len());
    for (i, p) in a.points().iter().enumerate() {
        for (j, q) in b.points().iter().enumerate() {
            costs[(i, j)] = closeness(p, q, params)?;
        }
    }
    Ok(costs)
}

/// Optimal monotone path through a precomputed cost grid.
pub fn dtw_on_costs(costs: &DMatrix<f64>) -> WarpingPath {
    let (rows, cols) = costs.shape();
    assert!(rows > 0 && cols > 0, "empty cost grid");
    let mut acc = vec![Cell { cost: 0.0, len: 0 }; rows * cols];
    let mut from = vec![0u8; rows * cols];
    for i in 0..rows {
        for j in 0..cols {
            let diag = (i > 0 && j > 0).then(|| acc[(i - 1) * cols + j - 1]);
            let up = (i > 0).then(|| acc[(i - 1) * cols + j]);
            let left = (j > 0).then(|| acc[i * cols + j - 1]);
            let c = costs[(i, j)];
            acc[i * cols + j] = match best_predecessor(diag, up, left) {
                Some((p, tag)) => {
                    from[i * cols + j] = tag;
                    Cell {
                        cost: c + p.cost,
                        len: p.len + 1,
                    }
                }
                None => Cell { cost: c, len: 1 },
            };
        }
    }
    let mut pairs = Vec::with_capacity(rows + cols);
    let (mut i, mut j) = (rows - 1, cols - 1);
    pairs.push((i, j));
    while i > 0 || j > 0 {
        match from[i * cols + j] {
            0 => {
                i -= 1;
                j -= 1;
            }
            1 => i -= 1,
            _ => j -= 1,
        }
        pairs.push((i, j));
    }
    pairs.reverse();
    WarpingPath {
        pairs,
        cost: acc[rows * cols - 1].cost,
    }
}

/// Length-normalized DTW cost without storing the full grid or the path.
fn dtw_normalized(rows: usize, cols: usize, cost: impl Fn(usize, usize) -> f64) -> f64 {
    let mut prev = vec![Cell { cost: 0.0, len: 0 }; cols];
    let mut cur = prev.clone();
    for i in 0..rows {
        for j in 0..cols {
            let diag = (i > 0 && j > 0).then(|| prev[j - 1]);
            let up = (i > 0).then(|| prev[j]);
            let left = (j > 0).then(|| cur[j - 1]);
            let c = cost(i, j);
            cur[j] = match best_predecessor(diag, up, left) {
                Some((p, _)) => Cell {
                    cost: c + p.cost,
                    len: p.len + 1,
                },
                None => Cell { cost: c, len: 1 },
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    let last = prev[cols - 1];
    last.cost / last.len as f64
}

pub fn dtw_align(a: &Trajectory, b: &Trajectory, params: ClosenessParams) -> Result<WarpingPath> {
    Ok(dtw_on_costs(&cost_matrix(a, b, params)?))
}

/// Rate-invariant distance: cost of the optimal warping path averaged over
/// its length.
pub fn dtw_distance(a: &Trajectory, b: &Trajectory, params: ClosenessParams) -> Result<f64> {
    let costs = cost_matrix(a, b, params)?;
    Ok(dtw_normalized(a.len(), b.len(), |i, j| costs[(i, j)]))
}

/// `dtw_distance` for each entry of `grid`, evaluating the two closeness
/// terms of every frame pair only once.
pub fn dtw_distances_for_grid(
    a: &Trajectory,
    b: &Trajectory,
    grid: &[ClosenessParams],
) -> Result<Vec<f64>> {
    a.same_shape(b)?;
    let (rows, cols) = (a.len(), b.len());
    let need_spd = grid.iter().any(|p| p.k() != 0.0);
    let mut grass = vec![0.0; rows * cols];
    let mut spd = vec![0.0; rows * cols];
    for (i, p) in a.points().iter().enumerate() {
        for (j, q) in b.points().iter().enumerate() {
            if need_spd {
                let t = closeness_terms(p, q)?;
                grass[i * cols + j] = t.grassmann;
                spd[i * cols + j] = t.spd;
            } else {
                grass[i * cols + j] = closeness(p, q, ClosenessParams::grassmann())?;
            }
        }
    }
    Ok(grid
        .iter()
        .map(|&params| {
            let k = params.k();
            dtw_normalized(rows, cols, |i, j| {
                let g = grass[i * cols + j];
                if k == 0.0 {
                    g
                } else {
                    g + k * spd[i * cols + j]
                }
            })
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(rows: usize, cols: usize, v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(rows, cols, v)
    }

    #[test]
    fn zero_diagonal_gives_diagonal_path() {
        let c = grid(3, 3, &[0.0, 1.0, 1.0, 1.0, 0.0, 1.0, 1.0, 1.0, 0.0]);
        let p = dtw_on_costs(&c);
        assert_eq!(p.pairs, vec![(0, 0), (1, 1), (2, 2)]);
        assert_eq!(p.cost, 0.0);
    }

    #[test]
    fn constant_grid_prefers_short_path() {
        let c = DMatrix::from_element(3, 5, 2.0);
        let p = dtw_on_costs(&c);
        assert_eq!(p.len(), 5);
        assert_eq!(p.normalized_cost(), 2.0);
        assert_eq!(dtw_normalized(3, 5, |_, _| 2.0), 2.0);
    }

    #[test]
    fn single_row() {
        let c = grid(1, 3, &[1.0, 2.0, 3.0]);
        let p = dtw_on_costs(&c);
        assert_eq!(p.pairs, vec![(0, 0), (0, 1), (0, 2)]);
        assert_eq!(p.cost, 6.0);
    }

    #[test]
    fn transpose_symmetry() {
        let c = grid(
            3,
            4,
            &[0.3, 0.9, 0.2, 0.5, 0.1, 0.7, 0.4, 0.8, 0.6, 0.2, 0.9, 0.1],
        );
        let a = dtw_on_costs(&c);
        let b = dtw_on_costs(&c.transpose());
        assert_eq!(a.cost, b.cost);
        assert_eq!(a.len(), b.len());
        let flipped: Vec<_> = b.pairs.iter().map(|&(i, j)| (j, i)).collect();
        assert_eq!(a.pairs, flipped);
    }
}
