//! Randomized invariants of the geometry, alignment, re-sampling and
//! evaluation layers, checked against independently computed references.

use std::collections::BTreeSet;
use std::path::Path;

use gramtraj::classify::fuse_probabilities;
use gramtraj::data::{ProtocolKind, SequenceFile, SequenceMeta};
use gramtraj::eval::Protocol;
use gramtraj::geometry::{
    closeness, closeness_terms, polar_factor, principal_angles, spd_dist_sq, ClosenessParams,
    GramPoint, LandmarkConfig,
};
use gramtraj::trajectory::{
    adaptive_resample, dtw_distance, resample_to_length, trajectory_from_frames, ResampleParams,
    Trajectory, TrajectoryMeta,
};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn gaussian(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.sample::<f64, _>(StandardNormal))
}

fn point(z: &DMatrix<f64>) -> GramPoint {
    polar_factor(&LandmarkConfig::center(z.clone()).unwrap()).unwrap()
}

fn pair(seed: u64, n: usize, d: usize) -> (GramPoint, GramPoint) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (
        point(&gaussian(&mut rng, n, d)),
        point(&gaussian(&mut rng, n, d)),
    )
}

fn trajectory(rng: &mut ChaCha8Rng, len: usize, n: usize, d: usize) -> Trajectory {
    // smooth random walk so consecutive closenesses stay moderate
    let mut z = gaussian(rng, n, d);
    let frames: Vec<_> = (0..len)
        .map(|_| {
            z += gaussian(rng, n, d) * 0.15;
            z.clone()
        })
        .collect();
    trajectory_from_frames(&frames, TrajectoryMeta::default()).unwrap()
}

/// Eigenvalues of `L⁻¹ B L⁻ᵀ` with `A = L Lᵀ`, i.e. the generalized
/// eigenvalues of the pencil `(B, A)`.
fn pencil_eigenvalues(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Vec<f64> {
    let l = a.clone().cholesky().unwrap().l();
    let li = l.try_inverse().unwrap();
    let c = &li * b * li.transpose();
    let c = (&c + c.transpose()) * 0.5;
    c.symmetric_eigenvalues().iter().copied().collect()
}

fn spd(rng: &mut ChaCha8Rng, d: usize) -> DMatrix<f64> {
    let a = gaussian(rng, d, d);
    &a * a.transpose() + DMatrix::identity(d, d) * 0.2
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn principal_angles_match_singular_values(seed in any::<u64>(), n in 4usize..20, d in 2usize..4) {
        let (g, h) = pair(seed, n, d);
        let m = g.u().transpose() * h.u();
        let mut cos_sq: Vec<f64> = (m.transpose() * &m).symmetric_eigenvalues().iter().copied().collect();
        cos_sq.sort_by(|a, b| b.total_cmp(a));
        let theta = principal_angles(g.u(), h.u()).unwrap();
        for (t, c2) in theta.as_slice().iter().zip(&cos_sq) {
            prop_assert!((t.cos().powi(2) - c2.clamp(0.0, 1.0)).abs() < 1e-9);
            prop_assert!((0.0..=std::f64::consts::FRAC_PI_2 + 1e-12).contains(t));
        }
    }

    #[test]
    fn spd_distance_matches_pencil(seed in any::<u64>(), d in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, b) = (spd(&mut rng, d), spd(&mut rng, d));
        let expected: f64 = pencil_eigenvalues(&a, &b).iter().map(|l| l.ln().powi(2)).sum();
        let got = spd_dist_sq(&a, &b).unwrap();
        prop_assert!((got - expected).abs() < 1e-8 * (1.0 + expected), "{got} vs {expected}");
        prop_assert!((spd_dist_sq(&b, &a).unwrap() - got).abs() < 1e-8 * (1.0 + got));
    }

    #[test]
    fn closeness_is_symmetric_and_nonnegative(seed in any::<u64>(), n in 4usize..15, d in 2usize..4, k in 0.0f64..3.0) {
        let (g, h) = pair(seed, n, d);
        let p = ClosenessParams::new(k).unwrap();
        let gh = closeness(&g, &h, p).unwrap();
        let hg = closeness(&h, &g, p).unwrap();
        prop_assert!(gh >= 0.0);
        prop_assert!((gh - hg).abs() < 1e-9 * (1.0 + gh));
        prop_assert_eq!(closeness(&g, &g, p).unwrap(), 0.0);
    }

    #[test]
    fn uniform_scaling_only_moves_the_spd_term(seed in any::<u64>(), n in 4usize..15, d in 2usize..4, s in 0.2f64..5.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let z = gaussian(&mut rng, n, d);
        let terms = closeness_terms(&point(&z), &point(&(&z * s))).unwrap();
        // R² scales by s², so every relative eigenvalue equals s²
        let expected = d as f64 * (2.0 * s.ln()).powi(2);
        prop_assert!(terms.grassmann < 1e-12);
        prop_assert!((terms.spd - expected).abs() < 1e-8 * (1.0 + expected));
    }

    #[test]
    fn dtw_is_symmetric_and_rate_invariant(seed in any::<u64>(), la in 2usize..10, lb in 2usize..10) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = trajectory(&mut rng, la, 6, 2);
        let b = trajectory(&mut rng, lb, 6, 2);
        let p = ClosenessParams::default();
        let ab = dtw_distance(&a, &b, p).unwrap();
        prop_assert!((ab - dtw_distance(&b, &a, p).unwrap()).abs() < 1e-12 * (1.0 + ab));
        let mut stretched = Vec::new();
        for q in a.points() {
            for _ in 0..rng.random_range(1..4) {
                stretched.push(q.clone());
            }
        }
        let stretched = Trajectory::new(stretched, TrajectoryMeta::default()).unwrap();
        prop_assert!(dtw_distance(&a, &stretched, p).unwrap() < 1e-10);
    }

    #[test]
    fn resampling_stays_in_band(seed in any::<u64>(), len in 3usize..25, z2 in 0.01f64..1.0, frac in 0.0f64..0.25) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = trajectory(&mut rng, len, 5, 2);
        let p = ClosenessParams::default();
        let params = ResampleParams::new(z2 * frac, z2).unwrap();
        let out = adaptive_resample(&t, &params, p).unwrap();
        prop_assert_eq!(out.points().first(), t.points().first());
        prop_assert_eq!(out.points().last(), t.points().last());
        let steps: Vec<f64> = out.points().windows(2).map(|w| closeness(&w[0], &w[1], p).unwrap()).collect();
        for (i, c) in steps.iter().enumerate() {
            prop_assert!(*c <= z2 * (1.0 + 1e-9));
            if i + 1 < steps.len() {
                prop_assert!(*c >= params.zeta1() * (1.0 - 1e-9));
            }
        }
    }

    #[test]
    fn resample_to_length_is_exact(seed in any::<u64>(), len in 2usize..20, target in 2usize..40) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = trajectory(&mut rng, len, 5, 3);
        let out = resample_to_length(&t, target, ClosenessParams::default()).unwrap();
        prop_assert_eq!(out.len(), target);
    }

    #[test]
    fn sequence_json_round_trip(seed in any::<u64>(), len in 1usize..6, n in 3usize..8, fps in proptest::option::of(1.0f64..120.0)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let seq = SequenceFile::new(
            SequenceMeta { label: "wave".into(), subject: format!("s{seed}"), source: "prop".into(), fps },
            (0..len).map(|_| gaussian(&mut rng, n, 3) * 1e3).collect(),
        );
        let back = SequenceFile::from_json(&seq.to_json(), Path::new("mem.json")).unwrap();
        prop_assert_eq!(back, seq);
    }

    #[test]
    fn folds_partition_the_samples(seed in any::<u64>(), m in 6usize..40, subjects in 2usize..6, kind in 0usize..4) {
        let labels: Vec<String> = (0..m).map(|i| format!("c{}", i % 3)).collect();
        let subj: Vec<String> = (0..m).map(|i| format!("s{}", i % subjects)).collect();
        let kind = [ProtocolKind::Loocv, ProtocolKind::Loso, ProtocolKind::Kfold, ProtocolKind::HalfHalf][kind];
        let mut protocol = Protocol::new(kind);
        protocol.seed = seed;
        let folds = protocol.folds(&labels, &subj).unwrap();
        let mut seen = BTreeSet::new();
        for f in &folds {
            let train: BTreeSet<_> = f.train.iter().copied().collect();
            prop_assert!(f.test.iter().all(|i| !train.contains(i)));
            prop_assert_eq!(train.len() + f.test.len(), m);
            for &i in &f.test {
                prop_assert!(seen.insert(i), "sample {} tested twice", i);
            }
        }
        if kind == ProtocolKind::HalfHalf {
            prop_assert_eq!(folds.len(), 1);
            prop_assert!(!seen.is_empty());
        } else {
            prop_assert_eq!(seen.len(), m);
        }
    }

    #[test]
    fn fused_probabilities_are_a_distribution(raw in proptest::collection::vec(proptest::collection::vec(0.0f64..1.0, 3), 1..5)) {
        let parts: Vec<Vec<f64>> = raw
            .iter()
            .map(|p| {
                let s: f64 = p.iter().sum::<f64>().max(1e-9);
                p.iter().map(|v| v / s).collect()
            })
            .collect();
        let fused = fuse_probabilities(&parts);
        prop_assert_eq!(fused.len(), 3);
        prop_assert!((fused.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(fused.iter().all(|p| *p > 0.0));
    }
}
