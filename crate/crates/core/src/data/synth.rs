//! Deterministic synthetic landmark sequences.
//!
//! Every sample starts from a shared template shape, perturbed per subject
//! and per sample, moved by the class motion at a randomly warped rate, put
//! in a random rigid pose and corrupted by Gaussian landmark noise.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::sequence::{SequenceFile, SequenceMeta};
use crate::error::{Error, Result};

const TEMPLATE_SEED: u64 = 0x5eed_7e3a;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MotionClass {
    /// Global rigid rotation; constant on the quotient.
    Rotation,
    /// Anisotropic scaling along one body axis; keeps the column span.
    Stretch,
    /// Half of the landmarks oscillate against the rest.
    Oscillation,
    /// Stretch, oscillation and rotation at half strength.
    Composite,
    /// Isotropic scaling; keeps the column span.
    Dilation,
}

impl MotionClass {
    /// The four classes of the standard benchmark.
    pub const BENCHMARK: [MotionClass; 4] = [
        MotionClass::Rotation,
        MotionClass::Stretch,
        MotionClass::Oscillation,
        MotionClass::Composite,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MotionClass::Rotation => "rotation",
            MotionClass::Stretch => "stretch",
            MotionClass::Oscillation => "oscillation",
            MotionClass::Composite => "composite",
            MotionClass::Dilation => "dilation",
        }
    }
}

impl fmt::Display for MotionClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MotionClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            MotionClass::Rotation,
            MotionClass::Stretch,
            MotionClass::Oscillation,
            MotionClass::Composite,
            MotionClass::Dilation,
        ]
        .into_iter()
        .find(|c| c.name() == s)
        .ok_or_else(|| Error::InvalidParameter(format!("unknown motion class {s:?}")))
    }
}

/// Shape and nuisance settings of the generic generator.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthOptions {
    pub n_landmarks: usize,
    pub dim: usize,
    /// Std of the per-sample template perturbation, relative to the template
    /// radius.
    pub jitter: f64,
    /// Largest rate-warp exponent; 0 disables warping.
    pub max_warp: f64,
    pub subject: String,
}

impl Default for SynthOptions {
    fn default() -> Self {
        Self {
            n_landmarks: 10,
            dim: 3,
            jitter: 0.03,
            max_warp: 1.5,
            subject: "s00".into(),
        }
    }
}

fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

fn rms_radius(z: &DMatrix<f64>) -> f64 {
    (z.norm_squared() / z.nrows() as f64).sqrt()
}

fn center(z: &mut DMatrix<f64>) {
    for mut col in z.column_iter_mut() {
        let m = col.mean();
        col.add_scalar_mut(-m);
    }
}

/// Shared template: centered, unit RMS radius.
fn template(n: usize, d: usize) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(TEMPLATE_SEED ^ ((n as u64) << 8 | d as u64));
    let mut z = gaussian(&mut rng, n, d);
    center(&mut z);
    let r = rms_radius(&z);
    z / r
}

/// Unit directions used by the oscillation motion, fixed per shape.
fn oscillation_dirs(n: usize, d: usize) -> DMatrix<f64> {
    let mut rng =
        ChaCha8Rng::seed_from_u64(TEMPLATE_SEED.rotate_left(17) ^ ((n as u64) << 8 | d as u64));
    let mut dirs = gaussian(&mut rng, n, d);
    for mut row in dirs.row_iter_mut() {
        let norm = row.norm();
        row /= norm;
    }
    dirs
}

/// Uniformly random rotation (determinant +1).
fn random_rotation(rng: &mut ChaCha8Rng, d: usize) -> DMatrix<f64> {
    let qr = gaussian(rng, d, d).qr();
    let (mut q, r) = qr.unpack();
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    if q.determinant() < 0.0 {
        q.column_mut(0).neg_mut();
    }
    q
}

fn plane_rotation(d: usize, angle: f64) -> DMatrix<f64> {
    let (s, c) = angle.sin_cos();
    let mut r = DMatrix::identity(d, d);
    r[(0, 0)] = c;
    r[(0, 1)] = -s;
    r[(1, 0)] = s;
    r[(1, 1)] = c;
    r
}

/// Monotone rate warp of `[0,1]` onto itself; `b = 0` is the identity.
pub fn rate_warp(u: f64, b: f64) -> f64 {
    if b.abs() < 1e-9 {
        u
    } else {
        (b * u).exp_m1() / b.exp_m1()
    }
}

fn sample_len(rng: &mut ChaCha8Rng, lengths: (usize, usize)) -> usize {
    rng.random_range(lengths.0..=lengths.1)
}

/// Per-motion amplitudes drawn once per sample.
struct Amplitudes {
    rotation: f64,
    stretch: f64,
    oscillation: f64,
}

fn motion_frame(
    class: MotionClass,
    z0: &DMatrix<f64>,
    dirs: &DMatrix<f64>,
    amp: &Amplitudes,
    v: f64,
) -> DMatrix<f64> {
    let (n, d) = z0.shape();
    let stretch = |z: &DMatrix<f64>, a: f64| {
        let mut out = z.clone();
        out.column_mut(0).scale_mut(1.0 + a * v);
        out
    };
    let oscillate = |z: &DMatrix<f64>, a: f64| {
        let mut out = z.clone();
        let s = a * (2.0 * std::f64::consts::TAU * v).sin();
        for i in 0..n / 2 {
            for j in 0..d {
                out[(i, j)] += s * dirs[(i, j)];
            }
        }
        out
    };
    let rotate = |z: &DMatrix<f64>, a: f64| z * plane_rotation(d, a * v).transpose();
    match class {
        MotionClass::Rotation => rotate(z0, amp.rotation),
        MotionClass::Stretch => stretch(z0, amp.stretch),
        MotionClass::Dilation => z0 * (1.0 + amp.stretch * v),
        MotionClass::Oscillation => oscillate(z0, amp.oscillation),
        MotionClass::Composite => rotate(
            &oscillate(&stretch(z0, 0.5 * amp.stretch), 0.5 * amp.oscillation),
            amp.rotation,
        ),
    }
}

/// Poses frames rigidly, warps time and adds noise. `shape(v)` gives the
/// body-frame configuration at motion phase `v ∈ [0,1]`.
fn render(
    rng: &mut ChaCha8Rng,
    length: usize,
    noise: f64,
    max_warp: f64,
    shape: impl Fn(f64) -> DMatrix<f64>,
) -> Vec<DMatrix<f64>> {
    let b = if max_warp > 0.0 {
        rng.random_range(-max_warp..=max_warp)
    } else {
        0.0
    };
    let probe = shape(0.0);
    let d = probe.ncols();
    let rot = random_rotation(rng, d);
    let shift = DVector::from_fn(d, |_, _| 2.0 * rng.sample::<f64, _>(StandardNormal));
    let scale = rms_radius(&probe);
    (0..length)
        .map(|i| {
            let u = if length > 1 {
                i as f64 / (length - 1) as f64
            } else {
                0.0
            };
            let mut z = shape(rate_warp(u, b)) * rot.transpose();
            for mut row in z.row_iter_mut() {
                row += shift.transpose();
            }
            if noise > 0.0 {
                z += gaussian(rng, z.nrows(), d) * (noise * scale);
            }
            z
        })
        .collect()
}

/// One sample of `class` with the default shape (10 landmarks in 3D).
pub fn synth_trajectory(class: MotionClass, length: usize, noise: f64, seed: u64) -> SequenceFile {
    synth_trajectory_with(class, length, noise, seed, &SynthOptions::default())
}

pub fn synth_trajectory_with(
    class: MotionClass,
    length: usize,
    noise: f64,
    seed: u64,
    opts: &SynthOptions,
) -> SequenceFile {
    assert!(length >= 2, "synthetic sequences need at least 2 frames");
    assert!(
        opts.dim >= 2 && opts.n_landmarks > opts.dim,
        "need n > d >= 2"
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (n, d) = (opts.n_landmarks, opts.dim);
    let mut z0 = template(n, d) + gaussian(&mut rng, n, d) * opts.jitter;
    center(&mut z0);
    let dirs = oscillation_dirs(n, d);
    let amp = Amplitudes {
        rotation: rng.random_range(0.5..1.0) * std::f64::consts::PI,
        stretch: rng.random_range(0.8..1.2),
        oscillation: rng.random_range(0.25..0.35),
    };
    let frames = render(&mut rng, length, noise, opts.max_warp, |v| {
        motion_frame(class, &z0, &dirs, &amp, v)
    });
    SequenceFile::new(
        SequenceMeta {
            label: class.name().into(),
            subject: opts.subject.clone(),
            source: "synth".into(),
            fps: None,
        },
        frames,
    )
}

/// Settings for a synthetic data set.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSpec {
    pub per_class: usize,
    /// Inclusive range of sequence lengths.
    pub lengths: (usize, usize),
    pub noise: f64,
    pub subjects: usize,
    pub seed: u64,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        Self {
            per_class: 20,
            lengths: (20, 40),
            noise: 0.02,
            subjects: 5,
            seed: 0,
        }
    }
}

fn sample_rng(seed: u64, class: usize, i: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((class as u64) << 32) | i as u64);
    rng
}

/// Subject-specific template perturbation, shared by all of its samples.
fn subject_offset(seed: u64, subject: usize, n: usize, d: usize, sd: f64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x00b0_d1e5);
    rng.set_stream(u64::MAX - subject as u64);
    gaussian(&mut rng, n, d) * sd
}

/// `spec.per_class` samples of each class, ordered class by class. Sample `i`
/// of a class belongs to subject `i mod subjects`.
pub fn synth_dataset(
    classes: &[MotionClass],
    spec: &DatasetSpec,
    opts: &SynthOptions,
) -> Vec<SequenceFile> {
    let (n, d) = (opts.n_landmarks, opts.dim);
    let subjects = spec.subjects.max(1);
    let offsets: Vec<_> = (0..subjects)
        .map(|s| subject_offset(spec.seed, s, n, d, opts.jitter))
        .collect();
    let dirs = oscillation_dirs(n, d);
    let mut out = Vec::with_capacity(classes.len() * spec.per_class);
    for (ci, &class) in classes.iter().enumerate() {
        for i in 0..spec.per_class {
            let mut rng = sample_rng(spec.seed, ci, i);
            let subject = i % subjects;
            let mut z0 =
                template(n, d) + &offsets[subject] + gaussian(&mut rng, n, d) * (0.5 * opts.jitter);
            center(&mut z0);
            let amp = Amplitudes {
                rotation: rng.random_range(0.5..1.0) * std::f64::consts::PI,
                stretch: rng.random_range(0.8..1.2),
                oscillation: rng.random_range(0.25..0.35),
            };
            let length = sample_len(&mut rng, spec.lengths);
            let frames = render(&mut rng, length, spec.noise, opts.max_warp, |v| {
                motion_frame(class, &z0, &dirs, &amp, v)
            });
            out.push(SequenceFile::new(
                SequenceMeta {
                    label: class.name().into(),
                    subject: format!("s{subject:02}"),
                    source: "synth".into(),
                    fps: None,
                },
                frames,
            ));
        }
    }
    out
}

/// Arm gestures of the synthetic skeleton set. Legs and torso move the same
/// way, at random, for every gesture.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArmAction {
    Wave,
    Raise,
    Punch,
    Clap,
}

impl ArmAction {
    pub const ALL: [ArmAction; 4] = [
        ArmAction::Wave,
        ArmAction::Raise,
        ArmAction::Punch,
        ArmAction::Clap,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ArmAction::Wave => "wave",
            ArmAction::Raise => "raise",
            ArmAction::Punch => "punch",
            ArmAction::Clap => "clap",
        }
    }
}

/// Standing Kinect-20 skeleton in meters: x right, y up, z forward.
const KINECT_REST: [[f64; 3]; 20] = [
    [0.0, 0.90, 0.0],
    [0.0, 1.10, 0.0],
    [0.0, 1.40, 0.0],
    [0.0, 1.60, 0.02],
    [-0.20, 1.40, 0.0],
    [-0.24, 1.14, 0.0],
    [-0.26, 0.90, 0.0],
    [-0.27, 0.83, 0.01],
    [0.20, 1.40, 0.0],
    [0.24, 1.14, 0.0],
    [0.26, 0.90, 0.0],
    [0.27, 0.83, 0.01],
    [-0.10, 0.85, 0.0],
    [-0.11, 0.47, 0.01],
    [-0.11, 0.08, 0.0],
    [-0.11, 0.03, 0.10],
    [0.10, 0.85, 0.0],
    [0.11, 0.47, 0.01],
    [0.11, 0.08, 0.0],
    [0.11, 0.03, 0.10],
];

const UPPER_ARM: f64 = 0.26;
const FOREARM: f64 = 0.24;
const HAND: f64 = 0.07;

fn unit(x: f64, y: f64, z: f64) -> Vector3<f64> {
    Vector3::new(x, y, z).normalize()
}

/// Upper-arm and forearm directions of the (left, right) arms.
type ArmPose = [(Vector3<f64>, Vector3<f64>); 2];

fn smooth_ramp(v: f64, end: f64) -> f64 {
    let x = (v / end).clamp(0.0, 1.0);
    x * x * (3.0 - 2.0 * x)
}

fn arm_pose(action: ArmAction, v: f64, amp: f64) -> ArmPose {
    use std::f64::consts::{PI, TAU};
    let down = |side: f64| unit(0.08 * side, -1.0, 0.0);
    let rest = |side: f64| (down(side), down(side));
    match action {
        ArmAction::Wave => {
            let up = smooth_ramp(v, 0.2);
            let swing = up * amp * 0.6 * (3.0 * TAU * v).sin();
            let upper = unit(1.0, -1.0 + 1.3 * up, 0.0);
            let fore = unit(
                up * swing.sin() + (1.0 - up) * 0.08,
                -1.0 + 2.0 * up * swing.cos(),
                0.0,
            );
            [rest(-1.0), (upper, fore)]
        }
        ArmAction::Raise => {
            let a = PI * amp * (PI * v).sin().powi(2).min(1.0);
            let dir = unit(0.0, -a.cos(), a.sin());
            [(dir, dir), (dir, dir)]
        }
        ArmAction::Punch => {
            let s = (TAU * v).sin().powi(2) * amp;
            let upper = unit(0.0, -1.0 + s, 0.3 + s);
            let fore = unit(0.0, 1.0 - 2.0 * s, 0.6 + 0.4 * s);
            [rest(-1.0), (upper, fore)]
        }
        ArmAction::Clap => {
            let reach = smooth_ramp(v, 0.2);
            let inward = amp * 0.5 * (1.0 - (3.0 * TAU * v).cos());
            let side = |sgn: f64| {
                let upper = unit(sgn * 0.3, -1.0 + reach, reach);
                let fore = unit(
                    -sgn * (0.3 + 0.7 * inward) * reach + sgn * 0.08 * (1.0 - reach),
                    -1.0 + reach,
                    reach,
                );
                (upper, fore)
            };
            [side(-1.0), side(1.0)]
        }
    }
}

fn rot_x(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}

/// Random leg and torso motion shared by all gestures.
struct Nuisance {
    stride: f64,
    freq: f64,
    phase: f64,
    bend: f64,
    bend_freq: f64,
}

impl Nuisance {
    fn draw(rng: &mut ChaCha8Rng) -> Self {
        Self {
            stride: rng.random_range(0.0..0.7),
            freq: rng.random_range(1.0..3.0),
            phase: rng.random_range(0.0..std::f64::consts::TAU),
            bend: rng.random_range(0.0..0.5),
            bend_freq: rng.random_range(0.5..2.0),
        }
    }
}

fn skeleton_frame(
    rest: &[Vector3<f64>; 20],
    action: ArmAction,
    amp: f64,
    nz: &Nuisance,
    v: f64,
) -> DMatrix<f64> {
    use std::f64::consts::TAU;
    let mut p = *rest;
    let scale = (rest[2] - rest[0]).norm() / 0.5;
    // arms
    for (k, (upper, fore)) in arm_pose(action, v, amp).into_iter().enumerate() {
        let base = 4 + 4 * k;
        p[base + 1] = p[base] + upper * UPPER_ARM * scale;
        p[base + 2] = p[base + 1] + fore * FOREARM * scale;
        p[base + 3] = p[base + 2] + fore * HAND * scale;
    }
    // legs swing about the hips, in opposition
    let swing = nz.stride * (TAU * nz.freq * v + nz.phase).sin();
    for (k, sgn) in [(0usize, 1.0), (1, -1.0)] {
        let hip = 12 + 4 * k;
        let r = rot_x(sgn * swing);
        let knee_bend = rot_x(-0.5 * (sgn * swing).max(0.0));
        let h = p[hip];
        let knee = h + r * (p[hip + 1] - h);
        let ankle = knee + r * knee_bend * (p[hip + 2] - p[hip + 1]);
        let foot = ankle + r * knee_bend * (p[hip + 3] - p[hip + 2]);
        p[hip + 1] = knee;
        p[hip + 2] = ankle;
        p[hip + 3] = foot;
    }
    // upper body bends forward about the hip center
    let bend = rot_x(nz.bend * (0.5 - 0.5 * (TAU * nz.bend_freq * v).cos()));
    let pivot = p[0];
    for q in p.iter_mut().take(12).skip(1) {
        *q = pivot + bend * (*q - pivot);
    }
    DMatrix::from_fn(20, 3, |i, j| p[i][j])
}

fn skeleton_rest(rng: &mut ChaCha8Rng, subject_scale: f64, jitter: f64) -> [Vector3<f64>; 20] {
    let mut rest = [Vector3::zeros(); 20];
    for (r, q) in rest.iter_mut().zip(KINECT_REST) {
        *r = Vector3::from(q) * subject_scale
            + Vector3::from_fn(|_, _| jitter * rng.sample::<f64, _>(StandardNormal));
    }
    rest
}

/// `spec.per_class` skeleton samples of every [`ArmAction`] on the Kinect-20
/// layout. Noise is relative to the skeleton's RMS radius.
pub fn synth_skeleton_dataset(spec: &DatasetSpec) -> Vec<SequenceFile> {
    let subjects = spec.subjects.max(1);
    let scales: Vec<f64> = (0..subjects)
        .map(|s| {
            let mut rng = sample_rng(spec.seed ^ 0x5ce1, usize::MAX >> 32, s);
            rng.random_range(0.9..1.1)
        })
        .collect();
    let mut out = Vec::with_capacity(4 * spec.per_class);
    for (ci, action) in ArmAction::ALL.into_iter().enumerate() {
        for i in 0..spec.per_class {
            let mut rng = sample_rng(spec.seed, ci, i);
            let subject = i % subjects;
            let rest = skeleton_rest(&mut rng, scales[subject], 0.01);
            let amp = rng.random_range(0.8..1.2);
            let nz = Nuisance::draw(&mut rng);
            let length = sample_len(&mut rng, spec.lengths);
            let frames = render(&mut rng, length, spec.noise, 1.5, |v| {
                skeleton_frame(&rest, action, amp, &nz, v)
            });
            out.push(SequenceFile::new(
                SequenceMeta {
                    label: action.name().into(),
                    subject: format!("s{subject:02}"),
                    source: "synth-kinect20".into(),
                    fps: Some(30.0),
                },
                frames,
            ));
        }
    }
    out
}
