//! Linear SVM on proximity features.
//!
//! Binary machines minimize `½‖w‖² + C Σ max(0, 1 − yᵢ(w·xᵢ + b))` in the dual
//! by coordinate descent, with the bias treated as an extra constant feature.
//! Classes are handled one-vs-one. Pairwise outputs are mapped to
//! probabilities by a sigmoid fitted on cross-validated decision values and
//! coupled into one distribution over classes.

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::proximity::{ProximityMatrix, ProximityVector};
use crate::error::{Error, Result};

/// Probabilities this close to the maximum count as a tie.
pub const TIE_TOL: f64 = 1e-6;
const PROB_CLIP: f64 = 1e-7;
const PLATT_FOLDS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    pub c: f64,
    pub seed: u64,
    /// Stop when the projected-gradient spread of an epoch drops below this.
    pub tol: f64,
    pub max_epochs: usize,
    /// Calibrated probabilities; without them prediction is by pairwise vote.
    pub probability: bool,
}

impl Default for SvmParams {
    fn default() -> Self {
        Self {
            c: 1.0,
            seed: 0,
            tol: 1e-8,
            max_epochs: 20_000,
            probability: true,
        }
    }
}

impl SvmParams {
    pub fn with_c(c: f64) -> Self {
        Self {
            c,
            ..Self::default()
        }
    }
}

/// Per-feature standardization learned on the training rows. Constant
/// features get scale 0 and drop out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaling {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Scaling {
    fn fit(x: &DMatrix<f64>) -> Self {
        let m = x.nrows() as f64;
        let mut mean = Vec::with_capacity(x.ncols());
        let mut scale = Vec::with_capacity(x.ncols());
        for col in x.column_iter() {
            let mu = col.sum() / m;
            let var = col.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / m;
            let sd = var.sqrt();
            mean.push(mu);
            scale.push(if sd > 1e-12 * (1.0 + mu.abs()) {
                1.0 / sd
            } else {
                0.0
            });
        }
        Self { mean, scale }
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .map(|((v, mu), s)| if *s == 0.0 { 0.0 } else { (v - mu) * s })
            .collect()
    }

    fn is_degenerate(&self) -> bool {
        self.scale.iter().all(|&s| s == 0.0)
    }
}

/// One-vs-one machine separating class `pos` (`+1`) from class `neg`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairModel {
    pub pos: usize,
    pub neg: usize,
    pub weights: Vec<f64>,
    pub bias: f64,
    /// Sigmoid `1 / (1 + exp(A f + B))` giving `P(pos | f)`.
    pub platt: Option<(f64, f64)>,
}

impl PairModel {
    fn decision(&self, x: &[f64]) -> f64 {
        self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.bias
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub classes: Vec<String>,
    pub params: SvmParams,
    pub scaling: Scaling,
    pub pairs: Vec<PairModel>,
    /// Training class frequencies; the prediction when no feature varies.
    pub priors: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub class: usize,
    pub label: String,
    pub probabilities: Vec<f64>,
}

/// Index of the largest value; values within [`TIE_TOL`] of it go to the
/// lowest index.
pub fn argmax_lowest(values: &[f64]) -> usize {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    values
        .iter()
        .position(|&v| v >= max - TIE_TOL)
        .expect("non-empty values")
}

/// Dual coordinate descent for one binary problem. Returns `(w, b)`.
fn train_binary(
    x: &[Vec<f64>],
    y: &[f64],
    c: f64,
    params: &SvmParams,
    rng: &mut ChaCha8Rng,
) -> (Vec<f64>, f64) {
    let dim = x[0].len();
    let mut w = vec![0.0; dim];
    let mut b = 0.0;
    let mut alpha = vec![0.0; x.len()];
    let qd: Vec<f64> = x
        .iter()
        .map(|r| r.iter().map(|v| v * v).sum::<f64>() + 1.0)
        .collect();
    let mut order: Vec<usize> = (0..x.len()).collect();
    for _ in 0..params.max_epochs {
        order.shuffle(rng);
        let (mut pg_max, mut pg_min) = (f64::NEG_INFINITY, f64::INFINITY);
        for &i in &order {
            let g = y[i] * (w.iter().zip(&x[i]).map(|(a, v)| a * v).sum::<f64>() + b) - 1.0;
            let pg = if alpha[i] == 0.0 {
                g.min(0.0)
            } else if alpha[i] == c {
                g.max(0.0)
            } else {
                g
            };
            pg_max = pg_max.max(pg);
            pg_min = pg_min.min(pg);
            if pg != 0.0 {
                let old = alpha[i];
                alpha[i] = (old - g / qd[i]).clamp(0.0, c);
                let step = (alpha[i] - old) * y[i];
                for (a, v) in w.iter_mut().zip(&x[i]) {
                    *a += step * v;
                }
                b += step;
            }
        }
        if pg_max - pg_min < params.tol {
            break;
        }
    }
    (w, b)
}

/// Sigmoid fit by Newton's method with backtracking, on targets smoothed
/// towards the class priors.
fn fit_sigmoid(dec: &[f64], y: &[f64]) -> (f64, f64) {
    let n_pos = y.iter().filter(|&&v| v > 0.0).count() as f64;
    let n_neg = y.len() as f64 - n_pos;
    let hi = (n_pos + 1.0) / (n_pos + 2.0);
    let lo = 1.0 / (n_neg + 2.0);
    let t: Vec<f64> = y.iter().map(|&v| if v > 0.0 { hi } else { lo }).collect();
    let objective = |a: f64, b: f64| -> f64 {
        dec.iter()
            .zip(&t)
            .map(|(f, t)| {
                let z = f * a + b;
                if z >= 0.0 {
                    t * z + (-z).exp().ln_1p()
                } else {
                    (t - 1.0) * z + z.exp().ln_1p()
                }
            })
            .sum()
    };
    let (mut a, mut b) = (0.0, ((n_neg + 1.0) / (n_pos + 1.0)).ln());
    let mut fval = objective(a, b);
    for _ in 0..100 {
        let (mut h11, mut h22, mut h21, mut g1, mut g2) = (1e-12, 1e-12, 0.0, 0.0, 0.0);
        for (f, t) in dec.iter().zip(&t) {
            let z = f * a + b;
            let (p, q) = if z >= 0.0 {
                let e = (-z).exp();
                (e / (1.0 + e), 1.0 / (1.0 + e))
            } else {
                let e = z.exp();
                (1.0 / (1.0 + e), e / (1.0 + e))
            };
            let d2 = p * q;
            h11 += f * f * d2;
            h22 += d2;
            h21 += f * d2;
            let d1 = t - p;
            g1 += f * d1;
            g2 += d1;
        }
        if g1.abs() < 1e-5 && g2.abs() < 1e-5 {
            break;
        }
        let det = h11 * h22 - h21 * h21;
        let da = -(h22 * g1 - h21 * g2) / det;
        let db = -(-h21 * g1 + h11 * g2) / det;
        let gd = g1 * da + g2 * db;
        let mut step = 1.0;
        while step >= 1e-10 {
            let (na, nb) = (a + step * da, b + step * db);
            let nf = objective(na, nb);
            if nf < fval + 1e-4 * step * gd {
                a = na;
                b = nb;
                fval = nf;
                break;
            }
            step /= 2.0;
        }
        if step < 1e-10 {
            break;
        }
    }
    (a, b)
}

fn sigmoid_prob(f: f64, (a, b): (f64, f64)) -> f64 {
    let z = f * a + b;
    if z >= 0.0 {
        let e = (-z).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + z.exp())
    }
}

/// Decision values of each sample from machines trained without its fold.
fn cv_decisions(x: &[Vec<f64>], y: &[f64], params: &SvmParams, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut perm: Vec<usize> = (0..x.len()).collect();
    perm.shuffle(rng);
    let mut dec = vec![0.0; x.len()];
    for fold in 0..PLATT_FOLDS {
        let test: Vec<usize> = perm
            .iter()
            .copied()
            .skip(fold)
            .step_by(PLATT_FOLDS)
            .collect();
        let train: Vec<usize> = perm
            .iter()
            .enumerate()
            .filter(|(p, _)| p % PLATT_FOLDS != fold)
            .map(|(_, &i)| i)
            .collect();
        let ty: Vec<f64> = train.iter().map(|&i| y[i]).collect();
        let has_pos = ty.iter().any(|&v| v > 0.0);
        let has_neg = ty.iter().any(|&v| v < 0.0);
        if !(has_pos && has_neg) {
            let v = if has_pos { 1.0 } else { -1.0 };
            for &i in &test {
                dec[i] = v;
            }
            continue;
        }
        let tx: Vec<Vec<f64>> = train.iter().map(|&i| x[i].clone()).collect();
        let (w, b) = train_binary(&tx, &ty, params.c, params, rng);
        for &i in &test {
            dec[i] = w.iter().zip(&x[i]).map(|(a, v)| a * v).sum::<f64>() + b;
        }
    }
    dec
}

/// Combines pairwise estimates `r[i][j] ≈ P(i | i or j)` into one
/// distribution by the iterative quadratic coupling.
fn couple(r: &DMatrix<f64>) -> Vec<f64> {
    let k = r.nrows();
    if k == 2 {
        return vec![r[(0, 1)], r[(1, 0)]];
    }
    let mut q = DMatrix::zeros(k, k);
    for t in 0..k {
        for j in 0..k {
            if j != t {
                q[(t, t)] += r[(j, t)] * r[(j, t)];
                q[(t, j)] = -r[(j, t)] * r[(t, j)];
            }
        }
    }
    let mut p = vec![1.0 / k as f64; k];
    let mut qp = vec![0.0; k];
    for _ in 0..k.max(100) * 10 {
        let mut pqp = 0.0;
        for t in 0..k {
            qp[t] = (0..k).map(|j| q[(t, j)] * p[j]).sum();
            pqp += p[t] * qp[t];
        }
        let err = qp.iter().map(|v| (v - pqp).abs()).fold(0.0, f64::max);
        if err < 1e-12 {
            break;
        }
        for t in 0..k {
            let diff = (-qp[t] + pqp) / q[(t, t)];
            p[t] += diff;
            pqp = (pqp + diff * (diff * q[(t, t)] + 2.0 * qp[t])) / ((1.0 + diff) * (1.0 + diff));
            for j in 0..k {
                qp[j] = (qp[j] + diff * q[(t, j)]) / (1.0 + diff);
                p[j] /= 1.0 + diff;
            }
        }
    }
    p
}

fn normalize(mut p: Vec<f64>) -> Vec<f64> {
    for v in &mut p {
        *v = v.max(0.0);
    }
    let s: f64 = p.iter().sum();
    if s > 0.0 {
        p.iter_mut().for_each(|v| *v /= s);
    } else {
        let k = p.len() as f64;
        p.iter_mut().for_each(|v| *v = 1.0 / k);
    }
    p
}

/// Trains on the rows of a proximity matrix.
pub fn train_ppfsvm(p: &ProximityMatrix, labels: &[String], c: f64) -> Result<SvmModel> {
    train_svm(p.values(), labels, &SvmParams::with_c(c))
}

/// One-vs-one linear SVM on the rows of `x`.
pub fn train_svm(x: &DMatrix<f64>, labels: &[String], params: &SvmParams) -> Result<SvmModel> {
    if labels.len() != x.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "{} labels for {} samples",
            labels.len(),
            x.nrows()
        )));
    }
    if !(params.c > 0.0 && params.c.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "C must be positive, got {}",
            params.c
        )));
    }
    let classes: Vec<String> = labels
        .iter()
        .cloned()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if classes.len() < 2 {
        return Err(Error::SingleClass);
    }
    let y_idx: Vec<usize> = labels
        .iter()
        .map(|l| classes.binary_search(l).expect("label in class list"))
        .collect();
    let mut priors = vec![0.0; classes.len()];
    for &c in &y_idx {
        priors[c] += 1.0 / labels.len() as f64;
    }
    let scaling = Scaling::fit(x);
    let rows: Vec<Vec<f64>> = x
        .row_iter()
        .map(|r| scaling.apply(&r.iter().copied().collect::<Vec<_>>()))
        .collect();
    let mut pairs = Vec::new();
    for pos in 0..classes.len() {
        for neg in pos + 1..classes.len() {
            let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
            rng.set_stream((pos * classes.len() + neg) as u64);
            let idx: Vec<usize> = (0..labels.len())
                .filter(|&i| y_idx[i] == pos || y_idx[i] == neg)
                .collect();
            let px: Vec<Vec<f64>> = idx.iter().map(|&i| rows[i].clone()).collect();
            let py: Vec<f64> = idx
                .iter()
                .map(|&i| if y_idx[i] == pos { 1.0 } else { -1.0 })
                .collect();
            let (weights, bias) = train_binary(&px, &py, params.c, params, &mut rng);
            let platt = params.probability.then(|| {
                let dec = if px.len() >= PLATT_FOLDS {
                    cv_decisions(&px, &py, params, &mut rng)
                } else {
                    px.iter()
                        .map(|r| weights.iter().zip(r).map(|(a, v)| a * v).sum::<f64>() + bias)
                        .collect()
                };
                fit_sigmoid(&dec, &py)
            });
            pairs.push(PairModel {
                pos,
                neg,
                weights,
                bias,
                platt,
            });
        }
    }
    Ok(SvmModel {
        classes,
        params: *params,
        scaling,
        pairs,
        priors,
    })
}

impl SvmModel {
    pub fn n_features(&self) -> usize {
        self.scaling.mean.len()
    }

    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    /// Per-class probabilities for one feature vector.
    pub fn probabilities(&self, phi: &ProximityVector) -> Result<Vec<f64>> {
        if phi.values.len() != self.n_features() {
            return Err(Error::DimensionMismatch(format!(
                "feature vector has {} entries, model expects {}",
                phi.values.len(),
                self.n_features()
            )));
        }
        if self.scaling.is_degenerate() {
            return Ok(self.priors.clone());
        }
        let x = self.scaling.apply(&phi.values);
        let k = self.n_classes();
        let calibrated = self.pairs.iter().all(|p| p.platt.is_some());
        if !calibrated {
            let mut votes = vec![0.0; k];
            for p in &self.pairs {
                votes[if p.decision(&x) > 0.0 { p.pos } else { p.neg }] += 1.0;
            }
            return Ok(normalize(votes));
        }
        let mut r = DMatrix::zeros(k, k);
        for p in &self.pairs {
            let prob = sigmoid_prob(p.decision(&x), p.platt.expect("calibrated"))
                .clamp(PROB_CLIP, 1.0 - PROB_CLIP);
            r[(p.pos, p.neg)] = prob;
            r[(p.neg, p.pos)] = 1.0 - prob;
        }
        Ok(normalize(couple(&r)))
    }

    pub fn predict(&self, phi: &ProximityVector) -> Result<Prediction> {
        let probabilities = self.probabilities(phi)?;
        let class = argmax_lowest(&probabilities);
        Ok(Prediction {
            class,
            label: self.classes[class].clone(),
            probabilities,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    /// Two tight clusters far apart in distance space.
    fn clustered(per: usize, classes: usize) -> (DMatrix<f64>, Vec<String>) {
        let m = per * classes;
        let x = DMatrix::from_fn(m, m, |i, j| {
            if i == j {
                0.0
            } else if i / per == j / per {
                0.1 + 0.01 * ((i + j) % 3) as f64
            } else {
                5.0 + 0.1 * ((i * j) % 4) as f64
            }
        });
        let l = (0..m).map(|i| format!("c{}", i / per)).collect();
        (x, l)
    }

    #[test]
    fn separable_training_accuracy() {
        for classes in [2, 4] {
            let (x, l) = clustered(6, classes);
            let model = train_svm(&x, &l, &SvmParams::default()).unwrap();
            for (i, row) in x.row_iter().enumerate() {
                let p = model
                    .predict(&row.iter().copied().collect::<Vec<_>>().into())
                    .unwrap();
                assert_eq!(p.label, l[i]);
                assert!((p.probabilities.iter().sum::<f64>() - 1.0).abs() < 1e-9);
                assert!(p.probabilities.iter().all(|&v| (0.0..=1.0).contains(&v)));
            }
        }
    }

    #[test]
    fn single_class_rejected() {
        let x = DMatrix::zeros(3, 3);
        assert!(matches!(
            train_svm(&x, &labels(&["a", "a", "a"]), &SvmParams::default()),
            Err(Error::SingleClass)
        ));
    }

    #[test]
    fn zero_matrix_predicts_first_class() {
        let p = ProximityMatrix::new(DMatrix::zeros(4, 4), labels(&["0", "1", "2", "3"])).unwrap();
        let model = train_ppfsvm(&p, &labels(&["b", "a", "b", "a"]), 1.0).unwrap();
        let pred = model.predict(&vec![0.0; 4].into()).unwrap();
        assert_eq!(pred.label, "a");
        assert_eq!(pred.probabilities, vec![0.5, 0.5]);
        let pred = model.predict(&vec![3.0; 4].into()).unwrap();
        assert_eq!(pred.class, 0);
    }

    #[test]
    fn equidistant_query_breaks_tie_low() {
        let x = DMatrix::from_row_slice(2, 2, &[0.0, 2.0, 2.0, 0.0]);
        let model = train_svm(&x, &labels(&["b", "a"]), &SvmParams::default()).unwrap();
        let pred = model.predict(&vec![1.0, 1.0].into()).unwrap();
        assert!((pred.probabilities[0] - pred.probabilities[1]).abs() < TIE_TOL);
        assert_eq!(pred.class, 0);
        assert_eq!(pred.label, "a");
    }

    #[test]
    fn wrong_feature_length() {
        let (x, l) = clustered(3, 2);
        let model = train_svm(&x, &l, &SvmParams::default()).unwrap();
        assert!(matches!(
            model.predict(&vec![0.0; 2].into()),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn coupling_recovers_consistent_pairs() {
        let p = [0.5, 0.3, 0.2];
        let r = DMatrix::from_fn(3, 3, |i, j| if i == j { 0.0 } else { p[i] / (p[i] + p[j]) });
        let q = couple(&r);
        for (a, b) in q.iter().zip(p) {
            assert!((a - b).abs() < 1e-9, "{q:?}");
        }
    }

    #[test]
    fn sigmoid_is_monotone_decreasing_in_margin_sign() {
        let dec = [-2.0, -1.5, -1.0, 1.0, 1.2, 2.0];
        let y = [-1.0, -1.0, -1.0, 1.0, 1.0, 1.0];
        let ab = fit_sigmoid(&dec, &y);
        assert!(ab.0 < 0.0);
        assert!(sigmoid_prob(2.0, ab) > 0.8 && sigmoid_prob(-2.0, ab) < 0.2);
    }

    #[test]
    fn deterministic_under_seed() {
        let (x, l) = clustered(5, 3);
        let a = train_svm(&x, &l, &SvmParams::default()).unwrap();
        let b = train_svm(&x, &l, &SvmParams::default()).unwrap();
        assert_eq!(a, b);
    }
}
