//! Geometry of the manifold S⁺(d,n) of n×n positive semidefinite matrices
//! of rank d.
//!
//! A centered landmark configuration `Z` (n×d) is represented by its Gram
//! matrix `G = ZZᵀ`. Through the polar decomposition `Z = UR` every such
//! matrix factors as `G = U R² Uᵀ` with `U` on the Stiefel manifold and `R²`
//! a d×d SPD matrix. Points are compared with the closeness
//!
//! ```text
//! d(G₁, G₂) = ‖Θ‖²_F + k · ‖log(R₁'^{-1} R₂'² R₁'^{-1})‖²_F
//! ```
//!
//! where `Θ` are the principal angles between `span(U₁)` and `span(U₂)`, and
//! the primed factors are the representatives of each fiber expressed in the
//! principal-vector bases of the two subspaces.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{self, symmetrize};

/// Relative singular-value cutoff below which a configuration is rank deficient.
pub const RANK_TOL: f64 = 1e-10;

/// Relative isotropic jitter added to `ZᵀZ` by the regularized polar factor.
pub const JITTER_REL: f64 = 1e-8;

/// Below this, `sin θ` is treated as zero in the Grassmann geodesic.
const SIN_ZERO: f64 = 1e-12;

/// One centered frame of `n` landmarks in `d` dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct LandmarkConfig {
    points: DMatrix<f64>,
}

impl LandmarkConfig {
    /// Subtracts the center of mass. Fails if the centered points do not span
    /// `d` dimensions.
    pub fn center(points: DMatrix<f64>) -> Result<Self> {
        let cfg = Self::center_unchecked(points)?;
        let rank = numerical_rank(&cfg.points);
        if rank < cfg.dim() {
            return Err(Error::DegenerateConfig {
                rank,
                expected: cfg.dim(),
            });
        }
        Ok(cfg)
    }

    /// Centers without the rank check. Used for frames that will go through
    /// [`polar_factor_regularized`].
    pub fn center_unchecked(mut points: DMatrix<f64>) -> Result<Self> {
        let (n, d) = points.shape();
        if d == 0 || n < d + 1 {
            return Err(Error::InvalidParameter(format!(
                "need at least d+1 = {} landmarks in {d} dimensions, got {n}",
                d + 1
            )));
        }
        if points.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter(
                "non-finite landmark coordinate".into(),
            ));
        }
        for mut col in points.column_iter_mut() {
            let mean = col.mean();
            col.add_scalar_mut(-mean);
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &DMatrix<f64> {
        &self.points
    }

    pub fn n(&self) -> usize {
        self.points.nrows()
    }

    pub fn dim(&self) -> usize {
        self.points.ncols()
    }

    /// Rows of this configuration selected by `indices`, re-centered.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let rows: Vec<_> = indices.iter().map(|&i| self.points.row(i)).collect();
        Self::center_unchecked(DMatrix::from_rows(&rows))
    }
}

fn numerical_rank(z: &DMatrix<f64>) -> usize {
    let (_, sigma, _) = linalg::thin_svd(z);
    let max = sigma.first().copied().unwrap_or(0.0);
    if max <= 0.0 {
        return 0;
    }
    sigma.iter().filter(|&&s| s > RANK_TOL * max).count()
}

/// `G = ZZᵀ`.
pub fn gram(cfg: &LandmarkConfig) -> DMatrix<f64> {
    let z = cfg.points();
    z * z.transpose()
}

/// A point of S⁺(d,n) in factored form `(U, R²)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GramPoint {
    u: DMatrix<f64>,
    r2: DMatrix<f64>,
}

impl GramPoint {
    /// Builds a point from its factors, checking `UᵀU = I` and `R²` SPD.
    pub fn new(u: DMatrix<f64>, r2: DMatrix<f64>) -> Result<Self> {
        let d = u.ncols();
        if r2.shape() != (d, d) || u.nrows() <= d {
            return Err(Error::DimensionMismatch(format!(
                "U is {:?}, R² is {:?}",
                u.shape(),
                r2.shape()
            )));
        }
        let ortho = (u.transpose() * &u - DMatrix::identity(d, d)).norm();
        if !(ortho < 1e-8) {
            return Err(Error::InvalidParameter(format!(
                "U columns are not orthonormal (‖UᵀU − I‖ = {ortho:e})"
            )));
        }
        if (&r2 - r2.transpose()).norm() > 1e-10 * r2.norm().max(1.0) {
            return Err(Error::InvalidParameter("R² is not symmetric".into()));
        }
        linalg::spd_eigen(&r2)?;
        Ok(Self {
            u,
            r2: symmetrize(&r2),
        })
    }

    pub(crate) fn from_parts_unchecked(u: DMatrix<f64>, r2: DMatrix<f64>) -> Self {
        Self { u, r2 }
    }

    /// Stiefel factor, n×d.
    pub fn u(&self) -> &DMatrix<f64> {
        &self.u
    }

    /// Squared polar factor, d×d SPD.
    pub fn r2(&self) -> &DMatrix<f64> {
        &self.r2
    }

    pub fn n(&self) -> usize {
        self.u.nrows()
    }

    pub fn dim(&self) -> usize {
        self.u.ncols()
    }

    /// The full n×n Gram matrix `U R² Uᵀ`.
    pub fn gram(&self) -> DMatrix<f64> {
        symmetrize(&(&self.u * &self.r2 * self.u.transpose()))
    }

    /// A landmark configuration `U R` with this Gram matrix.
    pub fn to_landmarks(&self) -> DMatrix<f64> {
        let r = linalg::spd_sqrt(&self.r2).expect("R² is SPD by construction");
        &self.u * r
    }
}

/// Polar factor `Z = U R` through the SVD `Z = W Σ Vᵀ`: `U = W Vᵀ`,
/// `R² = V Σ² Vᵀ`.
pub fn polar_factor(cfg: &LandmarkConfig) -> Result<GramPoint> {
    let (w, sigma, v) = linalg::thin_svd(cfg.points());
    let d = cfg.dim();
    let max = sigma[0];
    let rank = sigma.iter().filter(|&&s| s > RANK_TOL * max).count();
    if max <= 0.0 || rank < d {
        return Err(Error::DegenerateConfig { rank, expected: d });
    }
    let sq: Vec<f64> = sigma.iter().map(|s| s * s).collect();
    Ok(assemble_polar(&w, &v, &sq))
}

/// Polar factor with `λ I` added to `ZᵀZ`, `λ = 1e-8 · tr(ZᵀZ)/d`. Succeeds
/// for momentarily planar (or collinear) frames; fails only when every
/// landmark coincides.
pub fn polar_factor_regularized(cfg: &LandmarkConfig) -> Result<GramPoint> {
    let (w, sigma, v) = linalg::thin_svd(cfg.points());
    let d = cfg.dim();
    let trace: f64 = sigma.iter().map(|s| s * s).sum();
    if !(trace > 0.0) {
        return Err(Error::DegenerateConfig {
            rank: 0,
            expected: d,
        });
    }
    let lambda = JITTER_REL * trace / d as f64;
    let sq: Vec<f64> = sigma.iter().map(|s| s * s + lambda).collect();
    let w = complete_orthonormal(w, &sigma);
    Ok(assemble_polar(&w, &v, &sq))
}

fn assemble_polar(w: &DMatrix<f64>, v: &DMatrix<f64>, sq: &[f64]) -> GramPoint {
    let u = w * v.transpose();
    let mut vs = v.clone();
    for (j, &s) in sq.iter().enumerate() {
        vs.column_mut(j).scale_mut(s);
    }
    let r2 = symmetrize(&(vs * v.transpose()));
    GramPoint::from_parts_unchecked(u, r2)
}

/// Replaces left singular vectors belonging to (numerically) zero singular
/// values by an orthonormal completion of the others.
fn complete_orthonormal(mut w: DMatrix<f64>, sigma: &[f64]) -> DMatrix<f64> {
    let n = w.nrows();
    let max = sigma[0];
    for j in 0..w.ncols() {
        if sigma[j] > RANK_TOL * max {
            continue;
        }
        // Gram-Schmidt the canonical basis against the columns fixed so far.
        let mut best = None;
        for e in 0..n {
            let mut cand = nalgebra::DVector::<f64>::zeros(n);
            cand[e] = 1.0;
            for k in 0..w.ncols() {
                if k == j {
                    continue;
                }
                if k > j && sigma[k] <= RANK_TOL * max {
                    continue;
                }
                let proj = w.column(k).dot(&cand);
                cand.axpy(-proj, &w.column(k).into_owned(), 1.0);
            }
            let norm = cand.norm();
            if norm > 0.5 {
                best = Some(cand / norm);
                break;
            }
        }
        if let Some(col) = best {
            w.set_column(j, &col);
        }
    }
    w
}

/// Principal angles between two subspaces, ascending, each in `[0, π/2]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrincipalAngles {
    theta: Vec<f64>,
}

impl PrincipalAngles {
    pub fn as_slice(&self) -> &[f64] {
        &self.theta
    }

    pub fn norm_sq(&self) -> f64 {
        self.theta.iter().map(|t| t * t).sum()
    }
}

/// `U₁ᵀU₂ = A cos(Θ) Bᵀ` with columns ordered by ascending angle.
struct PrincipalPair {
    theta: Vec<f64>,
    a: DMatrix<f64>,
    b: DMatrix<f64>,
}

fn check_stiefel_pair(u1: &DMatrix<f64>, u2: &DMatrix<f64>) -> Result<()> {
    if u1.shape() != u2.shape() {
        return Err(Error::DimensionMismatch(format!(
            "subspace bases {:?} and {:?}",
            u1.shape(),
            u2.shape()
        )));
    }
    Ok(())
}

fn leading_sign(v: &[f64]) -> f64 {
    v.iter()
        .copied()
        .fold(0.0f64, |best, x| {
            if x.abs() > best.abs() + 1e-12 {
                x
            } else {
                best
            }
        })
        .signum()
}

fn principal_pair(u1: &DMatrix<f64>, u2: &DMatrix<f64>) -> Result<PrincipalPair> {
    check_stiefel_pair(u1, u2)?;
    let (mut a, sigma, mut b) = linalg::thin_svd(&(u1.transpose() * u2));
    // Canonical signs: the largest entry of each principal vector in U₁ is
    // positive. Orthogonal directions (σ = 0) are decoupled, so the U₂ vector
    // gets the same treatment independently; this fixes which of the two
    // equal-length geodesics through a right angle is taken.
    for j in 0..sigma.len() {
        if leading_sign((u1 * a.column(j)).as_slice()) < 0.0 {
            a.column_mut(j).neg_mut();
            b.column_mut(j).neg_mut();
        }
        if sigma[j] <= SIN_ZERO && leading_sign((u2 * b.column(j)).as_slice()) < 0.0 {
            b.column_mut(j).neg_mut();
        }
    }
    let theta = sigma.iter().map(|s| s.clamp(0.0, 1.0).acos()).collect();
    Ok(PrincipalPair { theta, a, b })
}

pub fn principal_angles(u1: &DMatrix<f64>, u2: &DMatrix<f64>) -> Result<PrincipalAngles> {
    let pair = principal_pair(u1, u2)?;
    Ok(PrincipalAngles { theta: pair.theta })
}

/// Squared geodesic distance on the Grassmannian, `‖Θ‖²`.
pub fn grassmann_dist_sq(u1: &DMatrix<f64>, u2: &DMatrix<f64>) -> Result<f64> {
    Ok(principal_angles(u1, u2)?.norm_sq())
}

fn grassmann_geodesic_aligned(
    u1: &DMatrix<f64>,
    u2: &DMatrix<f64>,
    pair: &PrincipalPair,
    t: f64,
) -> DMatrix<f64> {
    let u1a = u1 * &pair.a;
    let u2b = u2 * &pair.b;
    // M = (I − U₁U₁ᵀ) U₂ F with F the pseudoinverse of diag(sin θ)
    let mut m = &u2b - u1 * (u1.transpose() * &u2b);
    for (j, &th) in pair.theta.iter().enumerate() {
        let s = th.sin();
        if s > SIN_ZERO {
            m.column_mut(j).scale_mut(1.0 / s);
        } else {
            m.column_mut(j).fill(0.0);
        }
    }
    let mut out = u1a;
    for (j, &th) in pair.theta.iter().enumerate() {
        let (s, c) = (th * t).sin_cos();
        let mut col = out.column(j) * c;
        col.axpy(s, &m.column(j), 1.0);
        out.set_column(j, &col);
    }
    out
}

/// Point at time `t` on the Grassmann geodesic from `span(U₁)` to `span(U₂)`,
/// returned as an orthonormal basis.
pub fn grassmann_geodesic(u1: &DMatrix<f64>, u2: &DMatrix<f64>, t: f64) -> Result<DMatrix<f64>> {
    let pair = principal_pair(u1, u2)?;
    Ok(grassmann_geodesic_aligned(u1, u2, &pair, t))
}

/// Squared affine-invariant distance `‖log(A^{-1/2} B A^{-1/2})‖²_F`.
pub fn spd_dist_sq(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64> {
    let lambdas = linalg::relative_eigenvalues(a, b)?;
    Ok(lambdas.iter().map(|l| l.ln().powi(2)).sum())
}

/// Affine-invariant geodesic `A^{1/2} exp(t log(A^{-1/2} B A^{-1/2})) A^{1/2}`.
pub fn spd_geodesic(a: &DMatrix<f64>, b: &DMatrix<f64>, t: f64) -> Result<DMatrix<f64>> {
    if a.shape() != b.shape() {
        return Err(Error::DimensionMismatch(format!(
            "{:?} vs {:?}",
            a.shape(),
            b.shape()
        )));
    }
    linalg::spd_eigen(b)?;
    let half = linalg::spd_sqrt(a)?;
    let inv_half = linalg::spd_inv_sqrt(a)?;
    let log = linalg::spd_log(&(&inv_half * b * &inv_half))?;
    Ok(symmetrize(&(&half * linalg::sym_exp(&(log * t)) * &half)))
}

/// Weight of the SPD term in the closeness.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ClosenessParams {
    k: f64,
}

impl ClosenessParams {
    pub fn new(k: f64) -> Result<Self> {
        if !(k >= 0.0 && k.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "k must be finite and >= 0, got {k}"
            )));
        }
        Ok(Self { k })
    }

    /// Grassmann-only closeness.
    pub fn grassmann() -> Self {
        Self { k: 0.0 }
    }

    pub fn k(&self) -> f64 {
        self.k
    }
}

impl Default for ClosenessParams {
    fn default() -> Self {
        Self { k: 1.0 }
    }
}

/// The two terms of the closeness, kept apart so a single evaluation can
/// serve every `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosenessTerms {
    pub grassmann: f64,
    pub spd: f64,
}

impl ClosenessTerms {
    pub fn combine(&self, params: ClosenessParams) -> f64 {
        if params.k == 0.0 {
            self.grassmann
        } else {
            self.grassmann + params.k * self.spd
        }
    }
}

fn check_points(g1: &GramPoint, g2: &GramPoint) -> Result<()> {
    if g1.u.shape() != g2.u.shape() {
        return Err(Error::DimensionMismatch(format!(
            "S⁺(d,n) points with (n,d) = {:?} and {:?}",
            g1.u.shape(),
            g2.u.shape()
        )));
    }
    Ok(())
}

/// Squared Grassmann distance and squared SPD distance between the aligned
/// `R²` factors.
pub fn closeness_terms(g1: &GramPoint, g2: &GramPoint) -> Result<ClosenessTerms> {
    check_points(g1, g2)?;
    if g1 == g2 {
        return Ok(ClosenessTerms {
            grassmann: 0.0,
            spd: 0.0,
        });
    }
    let pair = principal_pair(&g1.u, &g2.u)?;
    let grassmann = pair.theta.iter().map(|t| t * t).sum();
    let r1 = pair.a.transpose() * &g1.r2 * &pair.a;
    let r2 = pair.b.transpose() * &g2.r2 * &pair.b;
    let spd = spd_dist_sq(&r1, &r2)?;
    Ok(ClosenessTerms { grassmann, spd })
}

/// Squared length of the pseudo-geodesic between two points:
/// `‖Θ‖² + k · d²_P(R₁², R₂²)`. With `k = 0` this is exactly the squared
/// Grassmann distance.
pub fn closeness(g1: &GramPoint, g2: &GramPoint, params: ClosenessParams) -> Result<f64> {
    check_points(g1, g2)?;
    if g1 == g2 {
        return Ok(0.0);
    }
    if params.k == 0.0 {
        return grassmann_dist_sq(&g1.u, &g2.u);
    }
    Ok(closeness_terms(g1, g2)?.combine(params))
}

/// Pseudo-geodesic `U(t) R²(t) U(t)ᵀ`: Grassmann geodesic on the span paired
/// with the SPD geodesic on the aligned `R²` factors.
pub fn pseudo_geodesic(g1: &GramPoint, g2: &GramPoint, t: f64) -> Result<GramPoint> {
    check_points(g1, g2)?;
    let pair = principal_pair(&g1.u, &g2.u)?;
    let u = grassmann_geodesic_aligned(&g1.u, &g2.u, &pair, t);
    let r1 = pair.a.transpose() * &g1.r2 * &pair.a;
    let r2 = pair.b.transpose() * &g2.r2 * &pair.b;
    let r2t = spd_geodesic(&r1, &r2, t)?;
    Ok(GramPoint::from_parts_unchecked(u, r2t))
}

/// Spatial covariance `ZᵀZ/(n−1) = R²/(n−1)`.
pub fn spatial_covariance(cfg: &LandmarkConfig) -> Result<DMatrix<f64>> {
    let p = polar_factor(cfg)?;
    Ok(p.r2 / (cfg.n() - 1) as f64)
}

/// Flat baseline `‖G₁ − G₂‖_F` on full Gram matrices.
pub fn flat_dist(g1: &DMatrix<f64>, g2: &DMatrix<f64>) -> Result<f64> {
    if g1.shape() != g2.shape() {
        return Err(Error::DimensionMismatch(format!(
            "{:?} vs {:?}",
            g1.shape(),
            g2.shape()
        )));
    }
    Ok((g1 - g2).norm())
}

/// Affine-invariant distance between `G₁ + εI` and `G₂ + εI`.
pub fn regularized_pn_dist(g1: &DMatrix<f64>, g2: &DMatrix<f64>, eps: f64) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "eps must be > 0, got {eps}"
        )));
    }
    if g1.shape() != g2.shape() || !g1.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "{:?} vs {:?}",
            g1.shape(),
            g2.shape()
        )));
    }
    let n = g1.nrows();
    let reg = DMatrix::<f64>::identity(n, n) * eps;
    Ok(spd_dist_sq(&(g1 + &reg), &(g2 + &reg))?.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{E, FRAC_PI_2, FRAC_PI_4};

    fn m(r: usize, c: usize, v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(r, c, v)
    }

    fn e12_e13() -> (DMatrix<f64>, DMatrix<f64>) {
        let u1 = m(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        let u2 = m(3, 2, &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        (u1, u2)
    }

    #[test]
    fn center_example() {
        let cfg = LandmarkConfig::center(m(3, 2, &[1.0, 1.0, 3.0, 1.0, 2.0, 4.0])).unwrap();
        assert_eq!(cfg.points(), &m(3, 2, &[-1.0, -1.0, 1.0, -1.0, 0.0, 2.0]));
        let again = LandmarkConfig::center(cfg.points().clone()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn collinear_is_degenerate() {
        let pts = m(4, 2, &[0.0, 0.0, 1.0, 1.0, 2.0, 2.0, 3.0, 3.0]);
        assert!(matches!(
            LandmarkConfig::center(pts),
            Err(Error::DegenerateConfig {
                rank: 1,
                expected: 2
            })
        ));
    }

    #[test]
    fn too_few_landmarks() {
        assert!(LandmarkConfig::center(m(2, 2, &[0.0, 1.0, 1.0, 0.0])).is_err());
    }

    #[test]
    fn gram_example() {
        let cfg = LandmarkConfig::center(m(3, 2, &[-1.0, -1.0, 1.0, -1.0, 0.0, 2.0])).unwrap();
        assert_eq!(
            gram(&cfg),
            m(3, 3, &[2.0, 0.0, -2.0, 0.0, 2.0, -2.0, -2.0, -2.0, 4.0])
        );
    }

    #[test]
    fn polar_of_orthonormal_and_scaled() {
        // centered, orthonormal columns
        let s = 0.5;
        let u0 = m(4, 2, &[s, s, -s, s, s, -s, -s, -s]);
        let cfg = LandmarkConfig::center(u0.clone()).unwrap();
        let p = polar_factor(&cfg).unwrap();
        assert!((p.u() - &u0).norm() < 1e-12);
        assert!((p.r2() - DMatrix::identity(2, 2)).norm() < 1e-12);

        let cfg3 = LandmarkConfig::center(&u0 * 3.0).unwrap();
        let p3 = polar_factor(&cfg3).unwrap();
        assert!((p3.r2() - DMatrix::identity(2, 2) * 9.0).norm() < 1e-10);
        let cov = spatial_covariance(&cfg).unwrap();
        assert!((cov - DMatrix::identity(2, 2) / 3.0).norm() < 1e-12);
    }

    #[test]
    fn regularized_polar_handles_collinear() {
        let pts = m(4, 2, &[0.0, 0.0, 1.0, 1.0, 2.0, 2.0, 3.0, 3.0]);
        let cfg = LandmarkConfig::center_unchecked(pts).unwrap();
        assert!(polar_factor(&cfg).is_err());
        let p = polar_factor_regularized(&cfg).unwrap();
        let ortho = (p.u().transpose() * p.u() - DMatrix::identity(2, 2)).norm();
        assert!(ortho < 1e-10, "{ortho}");
        assert!((p.gram() - gram(&cfg)).norm() < 1e-6);
        GramPoint::new(p.u().clone(), p.r2().clone()).unwrap();
    }

    #[test]
    fn all_coincident_fails_even_regularized() {
        let cfg = LandmarkConfig::center_unchecked(DMatrix::from_element(4, 2, 3.0)).unwrap();
        assert!(matches!(
            polar_factor_regularized(&cfg),
            Err(Error::DegenerateConfig { rank: 0, .. })
        ));
    }

    #[test]
    fn angles_between_coordinate_planes() {
        let (u1, u2) = e12_e13();
        let th = principal_angles(&u1, &u2).unwrap();
        assert!(th.as_slice()[0].abs() < 1e-15);
        assert!((th.as_slice()[1] - FRAC_PI_2).abs() < 1e-15);
        let d = grassmann_dist_sq(&u1, &u2).unwrap();
        assert!((d - FRAC_PI_2 * FRAC_PI_2).abs() < 1e-12);
        assert_eq!(grassmann_dist_sq(&u1, &u1).unwrap(), 0.0);
    }

    #[test]
    fn angle_dimension_mismatch() {
        let (u1, _) = e12_e13();
        let u3 = m(4, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        assert!(matches!(
            principal_angles(&u1, &u3),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn geodesic_midpoint_rotates_by_quarter_pi() {
        let (u1, u2) = e12_e13();
        let mid = grassmann_geodesic(&u1, &u2, 0.5).unwrap();
        let (s, c) = FRAC_PI_4.sin_cos();
        let expect = m(3, 2, &[1.0, 0.0, 0.0, c, 0.0, s]);
        let proj = |u: &DMatrix<f64>| u * u.transpose();
        assert!((proj(&mid) - proj(&expect)).norm() < 1e-14, "{mid}");
        assert!((proj(&grassmann_geodesic(&u1, &u2, 0.0).unwrap()) - proj(&u1)).norm() < 1e-14);
        assert!((proj(&grassmann_geodesic(&u1, &u2, 1.0).unwrap()) - proj(&u2)).norm() < 1e-14);
    }

    #[test]
    fn spd_diagonal_cases() {
        let i = DMatrix::<f64>::identity(2, 2);
        let b = &i * (E * E);
        assert!((spd_dist_sq(&i, &b).unwrap() - 8.0).abs() < 1e-12);
        assert!(spd_dist_sq(&b, &b).unwrap().abs() < 1e-24);
        let end = m(2, 2, &[E.powi(4), 0.0, 0.0, 1.0]);
        let mid = spd_geodesic(&i, &end, 0.5).unwrap();
        assert!((mid - m(2, 2, &[E * E, 0.0, 0.0, 1.0])).norm() < 1e-12);
        assert!(matches!(
            spd_dist_sq(&i, &DMatrix::zeros(2, 2)),
            Err(Error::NotSpd { .. })
        ));
    }

    #[test]
    fn closeness_composes_terms() {
        let s = 0.5;
        let u0 = m(4, 2, &[s, s, -s, s, s, -s, -s, -s]);
        let g1 = GramPoint::new(u0.clone(), DMatrix::identity(2, 2)).unwrap();
        let g2 = GramPoint::new(u0, DMatrix::identity(2, 2) * (E * E)).unwrap();
        let c = closeness(&g1, &g2, ClosenessParams::new(0.5).unwrap()).unwrap();
        assert!((c - 4.0).abs() < 1e-12);
        assert_eq!(
            closeness(&g1, &g2, ClosenessParams::grassmann()).unwrap(),
            0.0
        );
        assert_eq!(
            closeness(&g1, &g1, ClosenessParams::new(2.0).unwrap()).unwrap(),
            0.0
        );
    }

    #[test]
    fn negative_k_rejected() {
        assert!(ClosenessParams::new(-0.1).is_err());
        assert!(ClosenessParams::new(f64::NAN).is_err());
    }

    #[test]
    fn flat_and_regularized_baselines() {
        let i = DMatrix::<f64>::identity(2, 2);
        let z = DMatrix::<f64>::zeros(2, 2);
        assert!((flat_dist(&i, &z).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(flat_dist(&i, &i).unwrap(), 0.0);
        let eps = 1e-3;
        // εI vs e²εI: shift the second so that G₂ + εI = e²εI
        let g2 = &i * (E * E * eps - eps);
        let d = regularized_pn_dist(&z, &g2, eps).unwrap();
        assert!((d - 8f64.sqrt()).abs() < 1e-9);
        assert!(regularized_pn_dist(&z, &z, 0.0).is_err());
    }
}
