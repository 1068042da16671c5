//! Pairwise DTW proximities between trajectories.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::geometry::ClosenessParams;
use crate::par::{map_indices, Execution};
use crate::trajectory::{dtw_distance, dtw_distances_for_grid, Trajectory};

/// Symmetric matrix of DTW distances with a zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct ProximityMatrix {
    values: DMatrix<f64>,
    ids: Vec<String>,
}

/// DTW distances from one trajectory to every training trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct ProximityVector {
    pub values: Vec<f64>,
}

impl From<Vec<f64>> for ProximityVector {
    fn from(values: Vec<f64>) -> Self {
        Self { values }
    }
}

impl ProximityMatrix {
    /// Wraps precomputed distances. Rejects non-square, asymmetric or
    /// negative input and a nonzero diagonal.
    pub fn new(values: DMatrix<f64>, ids: Vec<String>) -> Result<Self> {
        let m = values.nrows();
        if !values.is_square() || ids.len() != m {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} proximities for {} ids",
                values.nrows(),
                values.ncols(),
                ids.len()
            )));
        }
        for i in 0..m {
            if values[(i, i)] != 0.0 {
                return Err(Error::InvalidParameter(format!("nonzero diagonal at {i}")));
            }
            for j in 0..i {
                let (a, b) = (values[(i, j)], values[(j, i)]);
                if !(a >= 0.0 && b >= 0.0) || (a - b).abs() > 1e-8 * (1.0 + a.abs()) {
                    return Err(Error::InvalidParameter(format!(
                        "entries ({i},{j}) are not a distance"
                    )));
                }
            }
        }
        Ok(Self { values, ids })
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Row `i` as the feature vector of training sample `i`.
    pub fn row(&self, i: usize) -> ProximityVector {
        ProximityVector {
            values: self.values.row(i).iter().copied().collect(),
        }
    }

    /// Restriction to the samples `idx`, in that order.
    pub fn subset(&self, idx: &[usize]) -> Self {
        Self {
            values: self.values.select_rows(idx).select_columns(idx),
            ids: idx.iter().map(|&i| self.ids[i].clone()).collect(),
        }
    }
}

fn ids_of(trajs: &[Trajectory]) -> Vec<String> {
    trajs
        .iter()
        .enumerate()
        .map(|(i, t)| t.meta().id.clone().unwrap_or_else(|| i.to_string()))
        .collect()
}

fn check_shapes(trajs: &[Trajectory]) -> Result<()> {
    if let Some(first) = trajs.first() {
        for t in &trajs[1..] {
            first.same_shape(t)?;
        }
    }
    Ok(())
}

/// Upper-triangle pair `p` of an `m×m` matrix in row-major order.
fn upper_pair(m: usize, mut p: usize) -> (usize, usize) {
    let mut i = 0;
    while p >= m - 1 - i {
        p -= m - 1 - i;
        i += 1;
    }
    (i, i + 1 + p)
}

fn pair_count(m: usize) -> usize {
    m * (m.saturating_sub(1)) / 2
}

pub fn proximity_matrix(train: &[Trajectory], params: ClosenessParams) -> Result<ProximityMatrix> {
    proximity_matrix_with(train, params, Execution::Auto)
}

/// `P[i][j] = dtw_distance(i, j)`, computing only `i < j`.
pub fn proximity_matrix_with(
    train: &[Trajectory],
    params: ClosenessParams,
    exec: Execution,
) -> Result<ProximityMatrix> {
    if train.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 trajectories, got {}",
            train.len()
        )));
    }
    check_shapes(train)?;
    let m = train.len();
    let upper = map_indices(pair_count(m), exec, |p| {
        let (i, j) = upper_pair(m, p);
        dtw_distance(&train[i], &train[j], params)
    });
    let mut values = DMatrix::zeros(m, m);
    for (p, d) in upper.into_iter().enumerate() {
        let (i, j) = upper_pair(m, p);
        let d = d?;
        values[(i, j)] = d;
        values[(j, i)] = d;
    }
    Ok(ProximityMatrix {
        values,
        ids: ids_of(train),
    })
}

/// Distances from `test` to each training trajectory.
pub fn proximity_vector(
    test: &Trajectory,
    train: &[Trajectory],
    params: ClosenessParams,
) -> Result<ProximityVector> {
    let values = map_indices(train.len(), Execution::Auto, |j| {
        dtw_distance(test, &train[j], params)
    });
    Ok(ProximityVector {
        values: values.into_iter().collect::<Result<_>>()?,
    })
}

/// Full pairwise DTW matrices of `trajs`, one per entry of `grid`. Closeness
/// terms are evaluated once per frame pair for the whole grid.
pub fn proximity_grid(
    trajs: &[Trajectory],
    grid: &[ClosenessParams],
    exec: Execution,
) -> Result<Vec<DMatrix<f64>>> {
    check_shapes(trajs)?;
    let m = trajs.len();
    let upper = map_indices(pair_count(m), exec, |p| {
        let (i, j) = upper_pair(m, p);
        dtw_distances_for_grid(&trajs[i], &trajs[j], grid)
    });
    let mut out = vec![DMatrix::zeros(m, m); grid.len()];
    for (p, ds) in upper.into_iter().enumerate() {
        let (i, j) = upper_pair(m, p);
        for (g, d) in ds?.into_iter().enumerate() {
            out[g][(i, j)] = d;
            out[g][(j, i)] = d;
        }
    }
    Ok(out)
}

/// Distances from every trajectory of `tests` to every one of `train`,
/// `tests.len() × train.len()`, one matrix per grid entry.
pub fn cross_proximity_grid(
    tests: &[Trajectory],
    train: &[Trajectory],
    grid: &[ClosenessParams],
    exec: Execution,
) -> Result<Vec<DMatrix<f64>>> {
    let (r, c) = (tests.len(), train.len());
    let cells = map_indices(r * c, exec, |p| {
        dtw_distances_for_grid(&tests[p / c], &train[p % c], grid)
    });
    let mut out = vec![DMatrix::zeros(r, c); grid.len()];
    for (p, ds) in cells.into_iter().enumerate() {
        for (g, d) in ds?.into_iter().enumerate() {
            out[g][(p / c, p % c)] = d;
        }
    }
    Ok(out)
}
