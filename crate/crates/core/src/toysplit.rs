//! Toy models, whose `ε` does not depend on `z`: the skew-product structure of
//! their renormalization, the block form of the derivative, cone-field
//! certificates for dominated splitting, the strong stable foliation, the
//! stable line field near the tip and the minimum expansion of the projected
//! two-dimensional map.
//!
//! Blocks follow the splitting `R³ = R² × R`: `DF = [[A, B], [C, D]]` with `A`
//! acting on `(x, y)` and `D` on `z`. Toy models have `B = 0`.

use std::f64::consts::PI;

use nalgebra::{Matrix2, Matrix3, RowVector2, Vector2};
use rayon::prelude::*;
use serde::Serialize;

use crate::cantor::{build_pieces, level_samples, psi_word, tip_seeds, Letter, Word};
use crate::error::{Error, Result};
use crate::funcrep::{Box3, ScalarField1D, ScalarField3D};
use crate::henon::{renorm_tower, HenonMap3D, RenormOptions, RenormTower, STANDING_BOX};
use crate::universality::average_jacobian;

/// Default bound on `sup |∂_z ε|` for a map to count as a toy model.
pub const TOY_TOL: f64 = 1e-12;

/// Boundary directions sampled per cone.
pub const CONE_DIRECTIONS: usize = 64;

/// Longest block product used to check `‖C_N A_N⁻¹‖ ≤ κ`.
pub const KAPPA_STEPS: usize = 64;

/// Default separation `b₂ ≤ b₁ / SEPARATION` for the strong stable probe.
pub const SEPARATION: f64 = 100.0;

/// Deepest level of the minimum expansion scaling, `2^20` orbit steps.
pub const MAX_SCALING_LEVEL: usize = 20;

/// Probe points per axis for sup-norm comparisons.
const PROBES: usize = 9;

/// `sup |∂_z ε|` over the norm probe grid.
pub fn dz_eps_norm(map: &HenonMap3D) -> f64 {
    map.eps.derivative(2).c0_norm()
}

/// True when `sup |∂_z ε| ≤ tol`.
pub fn is_toy_model(map: &HenonMap3D, tol: f64) -> bool {
    dz_eps_norm(map) <= tol
}

fn require_toy(map: &HenonMap3D) -> Result<()> {
    let dz_norm = dz_eps_norm(map);
    if dz_norm > TOY_TOL {
        return Err(Error::NotToyModel { dz_norm });
    }
    Ok(())
}

/// Largest singular value of a 2×2 matrix.
fn norm2(m: &Matrix2<f64>) -> f64 {
    m.singular_values().max()
}

/// Smallest singular value of a 2×2 matrix, `m(M) = 1 / ‖M⁻¹‖`.
fn min_expansion(m: &Matrix2<f64>) -> f64 {
    m.singular_values().min()
}

/// Blocks of `DF` (or of `DF^N`) at a point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlockDerivative {
    pub a: Matrix2<f64>,
    pub b: Vector2<f64>,
    pub c: RowVector2<f64>,
    pub d: f64,
    pub point: [f64; 3],
}

/// The blocks `ζ₁₁`, `ζ₁₂`, `ζ₂₂` of the inverse
/// `DF⁻¹ = [[A⁻¹ + ζ₁₁, ζ₁₂], [−D⁻¹C(A⁻¹ + ζ₁₁), D⁻¹ζ₂₂]]`.
#[derive(Clone, Copy, Debug)]
pub struct ZetaBlocks {
    pub z11: Matrix2<f64>,
    pub z12: Vector2<f64>,
    pub z22: f64,
}

impl BlockDerivative {
    pub fn from_matrix(m: &Matrix3<f64>, point: [f64; 3]) -> Self {
        Self {
            a: m.fixed_view::<2, 2>(0, 0).into_owned(),
            b: m.fixed_view::<2, 1>(0, 2).into_owned(),
            c: m.fixed_view::<1, 2>(2, 0).into_owned(),
            d: m[(2, 2)],
            point,
        }
    }

    pub fn assemble(&self) -> Matrix3<f64> {
        let mut m = Matrix3::zeros();
        m.fixed_view_mut::<2, 2>(0, 0).copy_from(&self.a);
        m.fixed_view_mut::<2, 1>(0, 2).copy_from(&self.b);
        m.fixed_view_mut::<1, 2>(2, 0).copy_from(&self.c);
        m[(2, 2)] = self.d;
        m
    }

    /// Block product `self · inner`, keeping the point of `inner`. With
    /// `B = 0` on both sides this is `A = A₁A`, `C = C₁A + D₁C`, `D = D₁D`.
    pub fn compose(&self, inner: &BlockDerivative) -> Self {
        Self {
            a: self.a * inner.a + self.b * inner.c,
            b: self.a * inner.b + self.b * inner.d,
            c: self.c * inner.a + self.d * inner.c,
            d: (self.c * inner.b)[0] + self.d * inner.d,
            point: inner.point,
        }
    }

    pub fn zeta(&self) -> Result<ZetaBlocks> {
        let singular = || Error::SingularJacobian {
            point: self.point.to_vec(),
        };
        if self.d == 0.0 {
            return Err(singular());
        }
        let a_inv = self.a.try_inverse().ok_or_else(singular)?;
        let schur = (self.a - self.b * self.c / self.d)
            .try_inverse()
            .ok_or_else(singular)?;
        let z12 = -schur * self.b / self.d;
        let z11 = -z12 * self.c * a_inv;
        let z22 = 1.0 - (self.c * z12)[0];
        Ok(ZetaBlocks { z11, z12, z22 })
    }

    /// `DF⁻¹` assembled from the `ζ` blocks.
    pub fn inverse(&self) -> Result<Matrix3<f64>> {
        let z = self.zeta()?;
        let a_inv = self
            .a
            .try_inverse()
            .ok_or_else(|| Error::SingularJacobian {
                point: self.point.to_vec(),
            })?;
        let top_left = a_inv + z.z11;
        let bottom_left = -self.c * top_left / self.d;
        let mut m = Matrix3::zeros();
        m.fixed_view_mut::<2, 2>(0, 0).copy_from(&top_left);
        m.fixed_view_mut::<2, 1>(0, 2).copy_from(&z.z12);
        m.fixed_view_mut::<1, 2>(2, 0).copy_from(&bottom_left);
        m[(2, 2)] = z.z22 / self.d;
        Ok(m)
    }
}

fn check_point(map: &HenonMap3D, w: [f64; 3]) -> Result<()> {
    if !map.domain.contains_with(w, 1e-9) {
        return Err(Error::OutOfDomain { point: w.to_vec() });
    }
    Ok(())
}

/// Blocks of `DF(w)`.
pub fn block_derivative(map: &HenonMap3D, w: [f64; 3]) -> Result<BlockDerivative> {
    check_point(map, w)?;
    Ok(BlockDerivative::from_matrix(&map.jacobian(w), w))
}

/// Blocks of `DF^N(w)` by the block recursion along the orbit.
pub fn block_power(map: &HenonMap3D, w: [f64; 3], n: usize) -> Result<BlockDerivative> {
    if n == 0 {
        return Err(Error::Invalid("block power needs N >= 1".into()));
    }
    let mut acc = block_derivative(map, w)?;
    let mut p = w;
    for _ in 1..n {
        p = map.apply(p);
        acc = block_derivative(map, p)?.compose(&acc);
    }
    Ok(acc)
}

/// `DF^N(w)` as a plain product of 3×3 derivatives.
pub fn direct_power(map: &HenonMap3D, w: [f64; 3], n: usize) -> Result<Matrix3<f64>> {
    let mut m = Matrix3::identity();
    let mut p = w;
    for _ in 0..n {
        check_point(map, p)?;
        m = map.jacobian(p) * m;
        p = map.apply(p);
    }
    Ok(m)
}

/// `‖C_N A_N⁻¹‖` for `N = 1..=n` along the orbit of `w`, for maps with
/// `B = 0`. The products are formed through
/// `X_N = (C₁(w_{N-1}) + D₁(w_{N-1}) X_{N-1}) A₁(w_{N-1})⁻¹`, since `A_N⁻¹`
/// itself has norm near `b₁^(-N)` and the direct product loses every digit
/// to cancellation after a dozen steps.
pub fn ca_inverse_norms(map: &HenonMap3D, w: [f64; 3], n: usize) -> Result<Vec<f64>> {
    let mut x = RowVector2::zeros();
    let mut p = w;
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let blk = block_derivative(map, p)?;
        let a_inv = blk
            .a
            .try_inverse()
            .ok_or(Error::SingularJacobian { point: p.to_vec() })?;
        x = (blk.c + blk.d * x) * a_inv;
        out.push(x.norm());
        p = map.apply(p);
    }
    Ok(out)
}

/// Sup and inf of the block norms over a set of orbit samples.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct BlockBounds {
    /// `sup ‖B‖`.
    #[serde(serialize_with = "crate::io::ser_f64")]
    pub b: f64,
    /// `sup ‖C‖`.
    #[serde(serialize_with = "crate::io::ser_f64")]
    pub c: f64,
    /// `inf m(A)`.
    #[serde(serialize_with = "crate::io::ser_f64")]
    pub m_a: f64,
    /// `sup |D|`.
    #[serde(serialize_with = "crate::io::ser_f64")]
    pub d: f64,
    /// `sup |D(w)| / m(A(w))`, sampled pointwise.
    #[serde(serialize_with = "crate::io::ser_f64")]
    pub d_over_m: f64,
}

pub fn block_bounds(map: &HenonMap3D, orbit: &[[f64; 3]]) -> Result<BlockBounds> {
    if orbit.is_empty() {
        return Err(Error::Invalid("empty orbit".into()));
    }
    let mut out = BlockBounds {
        b: 0.0,
        c: 0.0,
        m_a: f64::INFINITY,
        d: 0.0,
        d_over_m: 0.0,
    };
    for &w in orbit {
        let blk = block_derivative(map, w)?;
        let m = min_expansion(&blk.a);
        out.b = out.b.max(blk.b.norm());
        out.c = out.c.max(blk.c.norm());
        out.m_a = out.m_a.min(m);
        out.d = out.d.max(blk.d.abs());
        out.d_over_m = out.d_over_m.max(blk.d.abs() / m);
    }
    Ok(out)
}

/// `‖C₁‖ m(A₁) / (m(A₁) − ‖D₁‖)`, the closed form of the geometric series
/// `‖C₁‖ Σ (‖D₁‖/m(A₁))^i`.
pub fn kappa_closed_form(c: f64, m_a: f64, d: f64) -> f64 {
    c * m_a / (m_a - d)
}

/// `‖C₁‖ / (m(A₁) − ‖D₁‖)`. The `i`-th term of `C_N A_N⁻¹` carries `i + 1`
/// factors of `A₁⁻¹` against `i` factors of `D₁`, which adds one factor
/// `1/m(A₁)` to the closed form above.
pub fn kappa_sharp(c: f64, m_a: f64, d: f64) -> f64 {
    c / (m_a - d)
}

/// Outcome of the bound `‖C_N A_N⁻¹‖ < κ` on an orbit.
#[derive(Clone, Debug, Serialize)]
pub struct KappaReport {
    pub bounds: BlockBounds,
    /// `kappa_closed_form` of the bounds.
    #[serde(serialize_with = "crate::io::ser_f64")]
    pub kappa: f64,
    /// `kappa_sharp` of the bounds.
    #[serde(serialize_with = "crate::io::ser_f64")]
    pub kappa_sharp: f64,
    /// Largest `‖C_N A_N⁻¹‖` seen for `N ≤ steps`.
    #[serde(serialize_with = "crate::io::ser_f64")]
    pub observed: f64,
    pub worst_start: usize,
    pub worst_n: usize,
    pub steps: usize,
}

impl KappaReport {
    pub fn closed_form_holds(&self) -> bool {
        self.observed <= self.kappa
    }

    pub fn sharp_holds(&self) -> bool {
        self.observed <= self.kappa_sharp
    }
}

/// Block norms over `orbit`, both forms of `κ`, and the largest
/// `‖C_N A_N⁻¹‖` for `N ≤ KAPPA_STEPS` starting from every orbit sample.
pub fn kappa_bound(map: &HenonMap3D, orbit: &[[f64; 3]]) -> Result<KappaReport> {
    let bounds = block_bounds(map, orbit)?;
    if bounds.d >= bounds.m_a {
        return Err(Error::HypothesisFailed(format!(
            "sup |D| = {:.6e} is not below inf m(A) = {:.6e}",
            bounds.d, bounds.m_a
        )));
    }
    let runs = orbit
        .par_iter()
        .map(|&w| ca_inverse_norms(map, w, KAPPA_STEPS))
        .collect::<Result<Vec<_>>>()?;
    let (mut observed, mut worst_start, mut worst_n) = (0.0, 0, 0);
    for (i, run) in runs.iter().enumerate() {
        for (k, &v) in run.iter().enumerate() {
            if v > observed {
                (observed, worst_start, worst_n) = (v, i, k + 1);
            }
        }
    }
    Ok(KappaReport {
        kappa: kappa_closed_form(bounds.c, bounds.m_a, bounds.d),
        kappa_sharp: kappa_sharp(bounds.c, bounds.m_a, bounds.d),
        bounds,
        observed,
        worst_start,
        worst_n,
        steps: KAPPA_STEPS,
    })
}

/// Parameters of the cone field `C(γ) = {‖u‖ < γ|v|}` around the `z` axis.
/// Its complement `{‖u‖/γ > |v|}` holds the invariant plane field.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ConeParams {
    #[serde(serialize_with = "crate::io::ser_f64")]
    pub gamma: f64,
    /// `kappa_sharp` over the orbit.
    #[serde(serialize_with = "crate::io::ser_f64")]
    pub kappa: f64,
    /// `ρ = 2 sup |D|/m(A)`, so that `‖D₁‖ ≤ (ρ/2) m(A₁)`.
    #[serde(serialize_with = "crate::io::ser_f64")]
    pub rho: f64,
    /// Coupling constant of the perturbed check.
    #[serde(serialize_with = "crate::io::ser_opt_f64")]
    pub rho0: Option<f64>,
}

/// Margins of one orbit sample.
#[derive(Clone, Debug, Serialize)]
pub struct SampleMargin {
    pub index: usize,
    #[serde(serialize_with = "crate::io::ser_arr3")]
    pub point: [f64; 3],
    /// `max ‖u'‖ / (γ|v'|)` over the images of the cone boundary.
    #[serde(serialize_with = "crate::io::ser_f64")]
    pub contraction: f64,
    /// Bound on `contraction` from the block norms at this sample.
    #[serde(serialize_with = "crate::io::ser_f64")]
    pub predicted: f64,
    /// `1 − contraction`.
    #[serde(serialize_with = "crate::io::ser_f64")]
    pub margin: f64,
    /// `1 − ‖B‖‖C‖ / (ρ₀ m(A) m(D))`, for the perturbed check.
    #[serde(serialize_with = "crate::io::ser_opt_f64")]
    pub coupling_margin: Option<f64>,
}

/// Per-sample certification of `DF⁻¹ C(γ) ⊂ C(γ)`.
#[derive(Clone, Debug, Serialize)]
pub struct SplittingCertificate {
    pub params: ConeParams,
    pub directions: usize,
    pub samples: Vec<SampleMargin>,
    /// Bound on the contraction from the sup/inf block norms.
    #[serde(serialize_with = "crate::io::ser_f64")]
    pub predicted_rate: f64,
    #[serde(serialize_with = "crate::io::ser_f64")]
    pub worst_contraction: f64,
    pub worst_sample: usize,
    pub pass: bool,
}

impl SplittingCertificate {
    fn from_samples(params: ConeParams, samples: Vec<SampleMargin>, predicted_rate: f64) -> Self {
        let (worst_sample, worst_contraction) =
            samples.iter().map(|s| (s.index, s.contraction)).fold(
                (0, f64::NEG_INFINITY),
                |acc, s| if s.1 > acc.1 { s } else { acc },
            );
        let pass = samples
            .iter()
            .all(|s| s.margin > 0.0 && s.coupling_margin.map_or(true, |c| c > 0.0));
        Self {
            params,
            directions: CONE_DIRECTIONS,
            samples,
            predicted_rate,
            worst_contraction,
            worst_sample,
            pass,
        }
    }

    /// The certificate as an error when it does not pass.
    pub fn into_result(self) -> Result<Self> {
        if self.pass {
            return Ok(self);
        }
        let s = &self.samples[self.worst_sample];
        Err(Error::NotInvariant {
            sample: s.index,
            ratio: s.contraction,
        })
    }
}

/// Largest `‖u'‖ / (γ|v'|)` over the images `(u', v') = M (u, 1)` of the
/// boundary vectors `u = γ(cos θ, sin θ)`.
fn boundary_contraction(inv: &Matrix3<f64>, gamma: f64) -> f64 {
    let mut worst: f64 = 0.0;
    for k in 0..CONE_DIRECTIONS {
        let th = 2.0 * PI * k as f64 / CONE_DIRECTIONS as f64;
        let v = inv * nalgebra::Vector3::new(gamma * th.cos(), gamma * th.sin(), 1.0);
        let ratio = (v[0].hypot(v[1])) / (gamma * v[2].abs());
        worst = worst.max(if ratio.is_nan() { f64::INFINITY } else { ratio });
    }
    worst
}

fn cone_params(bounds: &BlockBounds, gamma: f64, rho0: Option<f64>) -> Result<ConeParams> {
    if !(gamma > 0.0) {
        return Err(Error::Invalid(format!(
            "cone aperture {gamma} must be positive"
        )));
    }
    let rho = 2.0 * bounds.d_over_m;
    if rho >= 1.0 {
        return Err(Error::HypothesisFailed(format!(
            "sup |D|/m(A) = {:.6e} is not below 1/2",
            bounds.d_over_m
        )));
    }
    let kappa = kappa_sharp(bounds.c, bounds.m_a, bounds.d);
    if kappa * gamma >= 1.0 {
        return Err(Error::HypothesisFailed(format!(
            "kappa * gamma = {:.6e} is not below 1",
            kappa * gamma
        )));
    }
    Ok(ConeParams {
        gamma,
        kappa,
        rho,
        rho0,
    })
}

/// Certificate for a toy model: pushes the cone boundary at every orbit
/// sample through `DF⁻¹ = [[A⁻¹, 0], [−D⁻¹CA⁻¹, D⁻¹]]`. The predicted rate is
/// `‖D₁‖ / ((1 − κγ) m(A₁))`.
pub fn cone_certificate(
    map: &HenonMap3D,
    orbit: &[[f64; 3]],
    gamma: f64,
) -> Result<SplittingCertificate> {
    let dz_norm = dz_eps_norm(map);
    if dz_norm > TOY_TOL {
        return Err(Error::HypothesisFailed(format!(
            "sup |dε/dz| = {dz_norm:.3e}; the toy-model check needs B = 0"
        )));
    }
    let bounds = block_bounds(map, orbit)?;
    let params = cone_params(&bounds, gamma, None)?;
    let shrink = 1.0 / (1.0 - params.kappa * gamma);
    let samples = orbit
        .par_iter()
        .enumerate()
        .map(|(index, &w)| {
            let blk = block_derivative(map, w)?;
            let singular = || Error::SingularJacobian { point: w.to_vec() };
            let a_inv = blk.a.try_inverse().ok_or_else(singular)?;
            if blk.d == 0.0 {
                return Err(singular());
            }
            let inv = BlockDerivative {
                a: a_inv,
                b: Vector2::zeros(),
                c: -blk.c * a_inv / blk.d,
                d: 1.0 / blk.d,
                point: w,
            }
            .assemble();
            let contraction = boundary_contraction(&inv, gamma);
            Ok(SampleMargin {
                index,
                point: w,
                contraction,
                predicted: shrink * blk.d.abs() / min_expansion(&blk.a),
                margin: 1.0 - contraction,
                coupling_margin: None,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SplittingCertificate::from_samples(
        params,
        samples,
        shrink * bounds.d / bounds.m_a,
    ))
}

/// `cone_certificate`, failing with `NotInvariant` at the worst sample.
pub fn cone_invariance_check(
    map: &HenonMap3D,
    orbit: &[[f64; 3]],
    gamma: f64,
) -> Result<SplittingCertificate> {
    cone_certificate(map, orbit, gamma)?.into_result()
}

/// Certificate for a perturbed toy model with `B ≠ 0`, pushing the cone
/// boundary through `DF⁻¹` assembled from the `ζ` blocks. Requires
/// `ρ₀ < κγ/2` and `‖B‖‖C‖ ≤ ρ₀ m(A) m(D)` at every sample.
pub fn perturbed_cone_certificate(
    map: &HenonMap3D,
    orbit: &[[f64; 3]],
    gamma: f64,
    rho0: f64,
) -> Result<SplittingCertificate> {
    let bounds = block_bounds(map, orbit)?;
    let params = cone_params(&bounds, gamma, Some(rho0))?;
    let kg = params.kappa * gamma;
    if !(rho0 > 0.0 && rho0 < 0.5 * kg) {
        return Err(Error::HypothesisFailed(format!(
            "rho0 = {rho0:.6e} is not in (0, kappa*gamma/2 = {:.6e})",
            0.5 * kg
        )));
    }
    let samples = orbit
        .par_iter()
        .enumerate()
        .map(|(index, &w)| {
            let blk = block_derivative(map, w)?;
            let m_a = min_expansion(&blk.a);
            let coupling = blk.b.norm() * blk.c.norm() / (rho0 * m_a * blk.d.abs());
            let inv = blk.inverse()?;
            let contraction = boundary_contraction(&inv, gamma);
            let factor = (1.0 + 2.0 * (1.0 + kg) * gamma * m_a / (2.0 - kg)) / (1.0 - kg).powi(2);
            Ok(SampleMargin {
                index,
                point: w,
                contraction,
                predicted: factor * blk.d.abs() / m_a,
                margin: 1.0 - contraction,
                coupling_margin: Some(1.0 - coupling),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if let Some(s) = samples
        .iter()
        .find(|s| s.coupling_margin.is_some_and(|c| c <= 0.0))
    {
        return Err(Error::HypothesisFailed(format!(
            "|B||C| exceeds rho0 m(A) m(D) at sample {} (margin {:.6e})",
            s.index,
            s.coupling_margin.unwrap_or(f64::NAN)
        )));
    }
    let factor = (1.0 + 2.0 * (1.0 + kg) * gamma * bounds.m_a / (2.0 - kg)) / (1.0 - kg).powi(2);
    Ok(SplittingCertificate::from_samples(
        params,
        samples,
        factor * bounds.d / bounds.m_a,
    ))
}

/// `perturbed_cone_certificate`, failing with `NotInvariant` at the worst sample.
pub fn perturbed_cone_check(
    map: &HenonMap3D,
    orbit: &[[f64; 3]],
    gamma: f64,
    rho0: f64,
) -> Result<SplittingCertificate> {
    perturbed_cone_certificate(map, orbit, gamma, rho0)?.into_result()
}

/// True when the toy-model certificate passes at `gamma`, counting a failed
/// hypothesis as a failure.
fn certifies(map: &HenonMap3D, orbit: &[[f64; 3]], gamma: f64) -> Result<bool> {
    match cone_certificate(map, orbit, gamma) {
        Ok(c) => Ok(c.pass),
        Err(Error::HypothesisFailed(_)) => Ok(false),
        Err(e) => Err(e),
    }
}

/// Bisects the smallest aperture in `[lo, hi]` at which certification fails.
/// `None` when it still certifies at `hi`.
pub fn first_failing_gamma(
    map: &HenonMap3D,
    orbit: &[[f64; 3]],
    lo: f64,
    hi: f64,
) -> Result<Option<f64>> {
    if !certifies(map, orbit, lo)? {
        return Err(Error::HypothesisFailed(format!(
            "no certificate at gamma = {lo}"
        )));
    }
    if certifies(map, orbit, hi)? {
        return Ok(None);
    }
    let (mut a, mut b) = (lo, hi);
    for _ in 0..60 {
        let mid = (a * b).sqrt();
        if certifies(map, orbit, mid)? {
            a = mid;
        } else {
            b = mid;
        }
        if b / a - 1.0 < 1e-10 {
            break;
        }
    }
    Ok(Some(b))
}

/// `count` points of the orbit of `start` after `settle` iterates.
pub fn attractor_orbit(
    map: &HenonMap3D,
    start: [f64; 3],
    settle: usize,
    count: usize,
) -> Vec<[f64; 3]> {
    let mut p = map.iterate(start, settle);
    (0..count)
        .map(|_| {
            let q = p;
            p = map.apply(p);
            q
        })
        .collect()
}

/// The orbit set of the certificates: one Cantor-set sample per level-`n`
/// piece followed by `tip_steps` points of the orbit of the tip.
pub fn splitting_orbit(tower: &RenormTower, n: usize, tip_steps: usize) -> Result<Vec<[f64; 3]>> {
    let mut orbit = level_samples(tower, n)?;
    let tip = tip_seeds(tower)?[0];
    orbit.extend(attractor_orbit(&tower.maps[0], tip, 0, tip_steps));
    Ok(orbit)
}

/// The projection `(x, y, z) ↦ (x, y)` of a toy model as a map with `δ ≡ 0`
/// and `ε` restricted to `z = 0`.
pub fn projected_map(map: &HenonMap3D) -> Result<HenonMap3D> {
    require_toy(map)?;
    let [dx, dy, _] = map.eps.degrees();
    let eps =
        ScalarField3D::interpolate(|p| map.eps.eval([p[0], p[1], 0.0]), map.domain, [dx, dy, 0])?;
    HenonMap3D::new(
        map.f.clone(),
        eps,
        ScalarField3D::zero(map.domain),
        map.domain,
    )
}

/// `b₁`: the exponential of the mean of `ln |∂_y ε|` over the level-`n`
/// Cantor-set samples, the average Jacobian of the projected map.
pub fn average_jacobian_2d(tower: &RenormTower, n: usize) -> Result<f64> {
    let map = &tower.maps[0];
    let samples = level_samples(tower, n)?;
    let mut sum = 0.0;
    for &p in &samples {
        let j = map.partials(p).eps_grad[1].abs();
        if !(j > 0.0) {
            return Err(Error::SingularJacobian { point: p.to_vec() });
        }
        sum += j.ln();
    }
    Ok((sum / samples.len() as f64).exp())
}

/// One level of the skew-product comparison.
#[derive(Clone, Debug, Serialize)]
pub struct SkewLevel {
    pub level: usize,
    /// `sup |f_n − f_n^2d|`.
    #[serde(serialize_with = "crate::io::ser_f64")]
    pub f_gap: f64,
    /// `sup |ε_n(x, y, z) − ε_n^2d(x, y)|`.
    #[serde(serialize_with = "crate::io::ser_f64")]
    pub eps_gap: f64,
    /// `sup |∂_z δ_n|`.
    #[serde(serialize_with = "crate::io::ser_f64")]
    pub dz_delta: f64,
    /// `ln‖∂_z δ_n‖ / ln‖∂_z δ_(n-1)‖`, from level 2 on.
    #[serde(serialize_with = "crate::io::ser_opt_f64")]
    pub dz_log_ratio: Option<f64>,
    /// `max |∂_y ε_n / (b₁^(2ⁿ) a(x)) − 1|` over a probe grid of `I³`.
    #[serde(serialize_with = "crate::io::ser_f64")]
    pub eps_y_deviation: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SkewProductReport {
    #[serde(serialize_with = "crate::io::ser_f64")]
    pub b1: f64,
    #[serde(serialize_with = "crate::io::ser_f64")]
    pub b2: f64,
    pub levels: Vec<SkewLevel>,
}

impl SkewProductReport {
    pub fn max_projection_gap(&self) -> f64 {
        self.levels
            .iter()
            .map(|l| l.f_gap.max(l.eps_gap))
            .fold(0.0, f64::max)
    }
}

/// Renormalizes the projected map on its own and compares it level by level
/// with the projection of the tower of the toy model. Also reports the decay
/// of `∂_z δ_n` and of `∂_y ε_n` against `b₁^(2ⁿ) a(x)`.
pub fn skew_product_check(
    tower: &RenormTower,
    a: &ScalarField1D,
    opts: &RenormOptions,
) -> Result<SkewProductReport> {
    for m in &tower.maps {
        require_toy(m)?;
    }
    let depth = tower.depth();
    let flat = renorm_tower(&projected_map(&tower.maps[0])?, depth, opts)?;
    let b1 = average_jacobian_2d(tower, depth.min(6))?;
    let b = average_jacobian(tower, depth.min(6))?;
    let grid = Box3::cube(1.0).grid(PROBES);
    let xs = STANDING_BOX.axes[0].grid(4 * PROBES);
    let mut levels = Vec::with_capacity(depth);
    let mut prev_dz: Option<f64> = None;
    for n in 1..=depth {
        let (m3, m2) = (&tower.maps[n], &flat.maps[n]);
        let f_gap = xs
            .iter()
            .map(|&x| (m3.f.eval(x) - m2.f.eval(x)).abs())
            .fold(0.0, f64::max);
        let eps_gap = STANDING_BOX
            .grid(PROBES)
            .iter()
            .map(|&w| (m3.eps.eval(w) - m2.eps.eval([w[0], w[1], 0.0])).abs())
            .fold(0.0, f64::max);
        let dz_delta = m3.delta.derivative(2).c0_norm();
        let dz_log_ratio = prev_dz.map(|p| dz_delta.ln() / p.ln());
        prev_dz = Some(dz_delta);
        let scale = 2f64.powi(n as i32) * b1.ln();
        let eps_y = m3.eps.derivative(1);
        let mut dev: f64 = 0.0;
        for &w in &grid {
            let ey = eps_y.eval(w).abs();
            let ax = a.eval(w[0]);
            if !(ey > 0.0 && ax > 0.0) {
                return Err(Error::UnderflowFrozen { level: n });
            }
            dev = dev.max((ey.ln() - scale - ax.ln()).exp_m1().abs());
        }
        levels.push(SkewLevel {
            level: n,
            f_gap,
            eps_gap,
            dz_delta,
            dz_log_ratio,
            eps_y_deviation: dev,
        });
    }
    Ok(SkewProductReport {
        b1,
        b2: b / b1,
        levels,
    })
}

/// Structure of the strong stable foliation of a toy model.
#[derive(Clone, Debug, Serialize)]
pub struct StrongStableReport {
    pub level: usize,
    /// Largest spread of `π_xy F` along a vertical segment.
    #[serde(serialize_with = "crate::io::ser_f64")]
    pub vertical_spread: f64,
    /// Smallest gap between the `(x, y)` projections of two piece hulls.
    #[serde(serialize_with = "crate::io::ser_f64")]
    pub min_projected_gap: f64,
    pub closest_pair: (String, String),
    /// Largest `|z-extent of F(segment) / (|∂_z δ| · length) − 1|`.
    #[serde(serialize_with = "crate::io::ser_f64")]
    pub z_contraction_error: f64,
    #[serde(serialize_with = "crate::io::ser_f64")]
    pub b1: f64,
    #[serde(serialize_with = "crate::io::ser_f64")]
    pub b2: f64,
}

impl StrongStableReport {
    /// `π_xy` is injective on the level-`n` hulls.
    pub fn projection_injective(&self) -> bool {
        self.min_projected_gap > 0.0
    }
}

/// Gap between the `(x, y)` shadows of two boxes (negative when they overlap).
fn projected_gap(a: &Box3, b: &Box3) -> f64 {
    (0..2)
        .map(|k| (a.axes[k].lo - b.axes[k].hi).max(b.axes[k].lo - a.axes[k].hi))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Checks that vertical segments through the level-`n` samples map into
/// vertical segments, contracted by `∂_z δ`, and that the `(x, y)`
/// projections of the level-`n` hulls are pairwise disjoint. Requires
/// `b₂ ≤ b₁ / separation`.
pub fn strong_stable_probe(
    tower: &RenormTower,
    n: usize,
    separation: f64,
) -> Result<StrongStableReport> {
    let map = &tower.maps[0];
    require_toy(map)?;
    let b1 = average_jacobian_2d(tower, n)?;
    let b2 = average_jacobian(tower, n)? / b1;
    // The default separation is met with equality by the reference toy map.
    if b2 > b1 / separation * (1.0 + 1e-9) {
        return Err(Error::HypothesisFailed(format!(
            "b2 = {b2:.6e} is not below b1/{separation} = {:.6e}",
            b1 / separation
        )));
    }
    let zs = STANDING_BOX.axes[2].grid(PROBES);
    let len = STANDING_BOX.axes[2].len();
    let mut spread: f64 = 0.0;
    let mut z_err: f64 = 0.0;
    for p in level_samples(tower, n)? {
        let images: Vec<[f64; 3]> = zs.iter().map(|&z| map.apply([p[0], p[1], z])).collect();
        for q in &images {
            spread = spread.max((q[0] - images[0][0]).abs().max((q[1] - images[0][1]).abs()));
        }
        let lo = images.iter().map(|q| q[2]).fold(f64::INFINITY, f64::min);
        let hi = images
            .iter()
            .map(|q| q[2])
            .fold(f64::NEG_INFINITY, f64::max);
        let dz = map.partials([p[0], p[1], 0.0]).delta_grad[2].abs();
        z_err = z_err.max(((hi - lo) / (dz * len) - 1.0).abs());
    }
    let pieces = build_pieces(tower, n)?;
    let mut best = (f64::INFINITY, 0, 0);
    for i in 0..pieces.len() {
        for j in i + 1..pieces.len() {
            let g = projected_gap(&pieces[i].hull, &pieces[j].hull);
            if g < best.0 {
                best = (g, i, j);
            }
        }
    }
    Ok(StrongStableReport {
        level: n,
        vertical_spread: spread,
        min_projected_gap: best.0,
        closest_pair: (
            pieces[best.1].word.to_string(),
            pieces[best.2].word.to_string(),
        ),
        z_contraction_error: z_err,
        b1,
        b2,
    })
}

/// `(ln s₁, ln s₂)` of the `(x, y)` block of `DF^N(w)`, accumulated with a
/// running scale so that neither leaves the range of `f64`.
pub fn log_singular_values_2d(map: &HenonMap3D, w: [f64; 3], n: usize) -> Result<(f64, f64)> {
    let mut m = Matrix2::identity();
    let mut log_scale = 0.0;
    let mut log_det = 0.0;
    let mut p = w;
    for _ in 0..n {
        let a = block_derivative(map, p)?.a;
        log_det += a.determinant().abs().ln();
        m = a * m;
        let s = m.abs().max();
        m /= s;
        log_scale += s.ln();
        p = map.apply(p);
    }
    let log_s1 = norm2(&m).ln() + log_scale;
    Ok((log_s1, log_det - log_s1))
}

/// Direction in the `(x, y)` plane contracted most by `DF_2d^N(w)`, as an
/// angle in `[0, π)`, and `ln(s₁/s₂)`. The top right singular vector comes
/// from power iteration with `A_N` and its transpose applied factor by factor;
/// the contracted direction is its normal.
pub fn contracted_direction(map: &HenonMap3D, w: [f64; 3], n: usize) -> Result<(f64, f64)> {
    let mut factors = Vec::with_capacity(n);
    let mut p = w;
    for _ in 0..n {
        factors.push(block_derivative(map, p)?.a);
        p = map.apply(p);
    }
    let mut x = Vector2::new(1.0, 0.3).normalize();
    for _ in 0..6 {
        for a in &factors {
            x = (a * x).normalize();
        }
        for a in factors.iter().rev() {
            x = (a.transpose() * x).normalize();
        }
    }
    let (log_s1, log_s2) = log_singular_values_2d(map, w, n)?;
    Ok((wrap_angle((-x[0]).atan2(x[1])), log_s1 - log_s2))
}

fn wrap_angle(th: f64) -> f64 {
    th.rem_euclid(PI)
}

/// Distance between two line directions given as angles.
pub fn angle_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(PI);
    d.min(PI - d)
}

/// One depth of the line-field probe.
#[derive(Clone, Debug, Serialize)]
pub struct LineFieldRow {
    pub depth: usize,
    /// Angle between the contracted directions at the samples of `vⁿ` and of
    /// its sibling `vⁿ⁻¹c`.
    #[serde(serialize_with = "crate::io::ser_f64")]
    pub gap: f64,
    /// Distance between the two samples.
    #[serde(serialize_with = "crate::io::ser_f64")]
    pub distance: f64,
    /// Smaller of the two `ln(s₁/s₂)`.
    #[serde(serialize_with = "crate::io::ser_f64")]
    pub log_sv_ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct LineFieldReport {
    pub orbit_len: usize,
    pub rows: Vec<LineFieldRow>,
    /// Largest angle between `DF_2d · E(w)` and `E(F w)` over the tested samples.
    #[serde(serialize_with = "crate::io::ser_f64")]
    pub pushforward_error: f64,
    /// Worst contraction of the certificate the probe runs under.
    #[serde(serialize_with = "crate::io::ser_f64")]
    pub certificate_contraction: f64,
}

impl LineFieldReport {
    /// One row per depth: `depth,gap,distance,log_sv_ratio`.
    pub fn csv(&self) -> String {
        let rows: Vec<Vec<f64>> = self
            .rows
            .iter()
            .map(|r| vec![r.depth as f64, r.gap, r.distance, r.log_sv_ratio])
            .collect();
        crate::io::csv_table(&["depth", "gap", "distance", "log_sv_ratio"], &rows)
    }
}

/// Exploratory probe of the stable line field of the projected map near the
/// tip. The contracted direction after `orbit_len` steps is evaluated at the
/// Cantor-set samples of `vⁿ` and `vⁿ⁻¹c`, which both converge to the tip; a
/// gap that does not shrink with `n` is the signature of a discontinuity.
pub fn line_field_discontinuity_probe(
    tower: &RenormTower,
    depth: usize,
    orbit_len: usize,
) -> Result<LineFieldReport> {
    let map = &tower.maps[0];
    require_toy(map)?;
    let cert_level = depth.min(tower.depth()).min(6);
    let cert = cone_invariance_check(map, &level_samples(tower, cert_level)?, 0.1)?;
    let tau = tip_seeds(tower)?;
    let mut rows = Vec::with_capacity(depth);
    let mut pushforward_error: f64 = 0.0;
    for n in 1..=depth {
        let tip_word = Word::repeated(Letter::V, n);
        let mut letters = tip_word.letters().to_vec();
        letters[n - 1] = Letter::C;
        let sibling = Word::new(letters)?;
        let p = psi_word(tower, &tip_word, tau[n])?;
        let q = psi_word(tower, &sibling, tau[n])?;
        let (ep, rp) = contracted_direction(map, p, orbit_len)?;
        let (eq, rq) = contracted_direction(map, q, orbit_len)?;
        let (ef, _) = contracted_direction(map, map.apply(p), orbit_len)?;
        let a = block_derivative(map, p)?.a;
        let pushed = a * Vector2::new(ep.cos(), ep.sin());
        pushforward_error =
            pushforward_error.max(angle_gap(wrap_angle(pushed[1].atan2(pushed[0])), ef));
        let distance = (0..3).map(|k| (p[k] - q[k]).powi(2)).sum::<f64>().sqrt();
        rows.push(LineFieldRow {
            depth: n,
            gap: angle_gap(ep, eq),
            distance,
            log_sv_ratio: rp.min(rq),
        });
    }
    Ok(LineFieldReport {
        orbit_len,
        rows,
        pushforward_error,
        certificate_contraction: cert.worst_contraction,
    })
}

/// One level of the minimum expansion scaling at the tip.
#[derive(Clone, Debug, Serialize)]
pub struct ExpansionRow {
    pub n: usize,
    pub steps: usize,
    /// `ln m(DF_2d^(2ⁿ))` at the tip.
    #[serde(serialize_with = "crate::io::ser_f64")]
    pub log_m: f64,
    /// `ln m − 2ⁿ ln b₁ − n ln σ`.
    #[serde(serialize_with = "crate::io::ser_f64")]
    pub deviation: f64,
}

/// `m(DF^N) ≥ m(DF^k(F^(N−k) w)) m(DF^(N−k)(w))` for one split of `N`.
#[derive(Clone, Debug, Serialize)]
pub struct SplitCheck {
    pub steps: usize,
    pub split: usize,
    #[serde(serialize_with = "crate::io::ser_f64")]
    pub log_m: f64,
    /// `ln` of the product of the two factors' minimum expansions.
    #[serde(serialize_with = "crate::io::ser_f64")]
    pub log_bound: f64,
    /// `ln m(DF^N) − N ln b₁`, whose growth in `N` bounds the exponent `α`.
    #[serde(serialize_with = "crate::io::ser_f64")]
    pub log_scaled: f64,
}

impl SplitCheck {
    pub fn holds(&self) -> bool {
        self.log_m >= self.log_bound - 1e-9
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ExpansionReport {
    #[serde(serialize_with = "crate::io::ser_f64")]
    pub b1: f64,
    #[serde(serialize_with = "crate::io::ser_f64")]
    pub sigma: f64,
    pub rows: Vec<ExpansionRow>,
    /// `m(DF_2d)` and `∂_y ε` at the tip.
    #[serde(serialize_with = "crate::io::ser_vec")]
    pub base: [f64; 2],
    pub splits: Vec<SplitCheck>,
}

impl ExpansionReport {
    pub fn max_deviation(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| r.deviation.abs())
            .fold(0.0, f64::max)
    }
}

/// `m(DF_2d^(2ⁿ))` at the tip for `n ≤ n_max` against `σⁿ b₁^(2ⁿ)`, with the
/// splits `3 = 2 + 1`, `5 = 4 + 1`, `7 = 4 + 3` checked against
/// `m(AB) ≥ m(A) m(B)`.
pub fn min_expansion_scaling(
    tower: &RenormTower,
    sigma: f64,
    n_max: usize,
) -> Result<ExpansionReport> {
    let map = &tower.maps[0];
    require_toy(map)?;
    if n_max > MAX_SCALING_LEVEL {
        return Err(Error::UnderflowFrozen { level: n_max });
    }
    let b1 = average_jacobian_2d(tower, tower.depth().min(6))?;
    let tip = tip_seeds(tower)?[0];
    let rows = (0..=n_max)
        .map(|n| {
            let steps = 1usize << n;
            let (_, log_m) = log_singular_values_2d(map, tip, steps)?;
            Ok(ExpansionRow {
                n,
                steps,
                log_m,
                deviation: log_m - steps as f64 * b1.ln() - n as f64 * sigma.ln(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let base = [rows[0].log_m.exp(), map.partials(tip).eps_grad[1].abs()];
    let splits = [(3, 2), (5, 4), (7, 4)]
        .into_iter()
        .map(|(steps, split)| {
            let (_, log_m) = log_singular_values_2d(map, tip, steps)?;
            let (_, inner) = log_singular_values_2d(map, tip, split)?;
            let (_, outer) = log_singular_values_2d(map, map.iterate(tip, split), steps - split)?;
            Ok(SplitCheck {
                steps,
                split,
                log_m,
                log_bound: inner + outer,
                log_scaled: log_m - steps as f64 * b1.ln(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ExpansionReport {
        b1,
        sigma,
        rows,
        base,
        splits,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testkit::{toy_map, toy_tower, universal_functions, TOY_B1, TOY_B2, TOY_MU};
    use crate::unimodal::FIELD_DOMAIN;
    use proptest::prelude::*;

    /// Toy model with `δ = b₂z + 0.01xy`, plus `eps_z · z` in `ε`.
    fn coupled(eps_z: f64) -> HenonMap3D {
        let f = ScalarField1D::fit(|x| 1.0 - TOY_MU * x * x, FIELD_DOMAIN, 2);
        HenonMap3D::from_fns(
            f,
            move |p| TOY_B1 * p[1] + eps_z * p[2],
            [1, 1, 1],
            |p| TOY_B2 * p[2] + 0.01 * p[0] * p[1],
            [1, 1, 1],
        )
        .unwrap()
    }

    fn tip() -> [f64; 3] {
        tip_seeds(toy_tower()).unwrap()[0]
    }

    fn orbit_of(map: &HenonMap3D) -> Vec<[f64; 3]> {
        attractor_orbit(map, tip(), 16, 512)
    }

    /// The first `depth` levels of the toy tower.
    fn truncated(depth: usize) -> RenormTower {
        let t = toy_tower();
        RenormTower {
            maps: t.maps[..=depth].to_vec(),
            steps: t.steps[..depth].to_vec(),
        }
    }

    fn rel_gap(a: &Matrix3<f64>, b: &Matrix3<f64>) -> f64 {
        (a - b).amax() / b.amax()
    }

    #[test]
    fn toy_model_detection() {
        assert!(is_toy_model(&toy_map(), 1e-6));
        let f = ScalarField1D::fit(|x| 1.0 - TOY_MU * x * x, FIELD_DOMAIN, 2);
        let tilted = HenonMap3D::from_fns(
            f.clone(),
            |p| TOY_B1 * p[1] + 1e-3 * p[2],
            [1, 1, 1],
            |p| TOY_B2 * p[2],
            [1, 1, 1],
        )
        .unwrap();
        assert!(!is_toy_model(&tilted, 1e-6));
        assert!(is_toy_model(&HenonMap3D::degenerate(f), 1e-6));
    }

    #[test]
    fn single_step_blocks_of_toy_map() {
        let map = toy_map();
        let w = [0.3, -0.2, 0.5];
        let blk = block_derivative(&map, w).unwrap();
        assert!((blk.d - TOY_B2).abs() < 1e-15);
        let expected = Matrix2::new(-2.0 * TOY_MU * w[0], -TOY_B1, 1.0, 0.0);
        assert!((blk.a - expected).amax() < 1e-13);
        assert!(blk.b.amax() < 1e-15 && blk.c.amax() < 1e-15);
        assert_eq!(blk.assemble(), map.jacobian(w));
    }

    #[test]
    fn two_step_recursion_matches_formula_and_product() {
        let map = coupled(0.0);
        let w0 = orbit_of(&map)[7];
        let w1 = map.apply(w0);
        let (b0, b1) = (
            block_derivative(&map, w0).unwrap(),
            block_derivative(&map, w1).unwrap(),
        );
        let two = block_power(&map, w0, 2).unwrap();
        let c2 = b1.c * b0.a + b1.d * b0.c;
        assert!((two.c - c2).amax() < 1e-15);
        assert!((two.a - b1.a * b0.a).amax() < 1e-15);
        assert!(rel_gap(&two.assemble(), &direct_power(&map, w0, 2).unwrap()) < 1e-15);
    }

    #[test]
    fn toy_powers_stay_block_triangular() {
        let map = coupled(0.0);
        let w = orbit_of(&map)[0];
        for n in [1, 2, 5, 17, 64] {
            assert_eq!(block_power(&map, w, n).unwrap().b, Vector2::zeros());
        }
    }

    #[test]
    fn block_power_rejects_escaping_orbit() {
        let map = toy_map();
        assert!(matches!(
            block_power(&map, [3.0, 0.0, 0.0], 2),
            Err(Error::OutOfDomain { .. })
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn block_recursion_equals_direct_product(start in 0usize..512, n in 1usize..=64) {
            let map = HenonMap3D::perturbed_toy(TOY_B1, TOY_B2, TOY_MU, 0.003);
            let w = orbit_of(&map)[start];
            let blocks = block_power(&map, w, n).unwrap().assemble();
            let direct = direct_power(&map, w, n).unwrap();
            prop_assert!(rel_gap(&blocks, &direct) < 1e-9);
        }

        #[test]
        fn zeta_assembly_inverts(start in 0usize..512, eps_z in -1e-2f64..1e-2) {
            let map = coupled(eps_z);
            let w = orbit_of(&map)[start];
            let blk = block_derivative(&map, w).unwrap();
            let inv = blk.inverse().unwrap();
            let direct = map.jacobian(w).try_inverse().unwrap();
            prop_assert!(rel_gap(&inv, &direct) < 1e-10);
        }
    }

    #[test]
    fn kappa_closed_forms() {
        assert!((kappa_closed_form(0.01, 0.2, 0.001) - 0.01 * 0.2 / 0.199).abs() < 1e-18);
        assert!((kappa_closed_form(0.01, 0.2, 0.001) - 0.010_050_25).abs() < 1e-8);
        assert!((kappa_sharp(0.01, 0.2, 0.001) - 0.01 / 0.199).abs() < 1e-18);
    }

    #[test]
    fn kappa_vanishes_for_affine_toy() {
        let map = toy_map();
        let r = kappa_bound(&map, &orbit_of(&map)).unwrap();
        assert_eq!(r.bounds.c, 0.0);
        assert_eq!(r.kappa, 0.0);
        assert_eq!(r.observed, 0.0);
        assert!((r.bounds.d - TOY_B2).abs() < 1e-15);
    }

    #[test]
    fn coupled_toy_obeys_sharp_kappa() {
        let map = coupled(0.0);
        let orbit = orbit_of(&map);
        let r = kappa_bound(&map, &orbit).unwrap();
        assert!(r.sharp_holds(), "{r:?}");
        // The closed form drops a factor 1/m(A₁) and is exceeded here.
        assert!(!r.closed_form_holds(), "{r:?}");
        // The recursion agrees with the direct block product while A_N is
        // still well conditioned.
        for &w in orbit.iter().step_by(64) {
            let stable = ca_inverse_norms(&map, w, 6).unwrap();
            for n in 1..=6 {
                let blk = block_power(&map, w, n).unwrap();
                let direct = (blk.c * blk.a.try_inverse().unwrap()).norm();
                assert!((stable[n - 1] - direct).abs() < 1e-8 * direct, "{n}");
            }
        }
    }

    #[test]
    fn kappa_hypothesis_checked() {
        let map = HenonMap3D::toy_affine(TOY_B1, 0.5, TOY_MU);
        let orbit = attractor_orbit(&map, tip(), 16, 256);
        assert!(matches!(
            kappa_bound(&map, &orbit),
            Err(Error::HypothesisFailed(_))
        ));
    }

    #[test]
    fn toy_cone_contracts_at_predicted_rate() {
        let map = toy_map();
        let orbit = splitting_orbit(toy_tower(), 6, 256).unwrap();
        let cert = cone_invariance_check(&map, &orbit, 0.1).unwrap();
        assert!(cert.pass);
        assert_eq!(cert.samples.len(), 64 + 256);
        assert_eq!(cert.params.kappa, 0.0);
        let bounds = block_bounds(&map, &orbit).unwrap();
        assert!((cert.predicted_rate - TOY_B2 / bounds.m_a).abs() < 1e-15);
        assert!(cert.worst_contraction <= cert.predicted_rate * (1.0 + 1e-12));
        assert!(cert.worst_contraction >= 0.5 * cert.predicted_rate);
        for s in &cert.samples {
            assert!(s.contraction <= s.predicted * (1.0 + 1e-12));
        }
    }

    #[test]
    fn affine_toy_has_no_failing_aperture() {
        let map = toy_map();
        let orbit = splitting_orbit(toy_tower(), 4, 64).unwrap();
        assert_eq!(first_failing_gamma(&map, &orbit, 0.01, 1e3).unwrap(), None);
    }

    #[test]
    fn coupled_toy_failure_boundary_is_monotone() {
        let map = coupled(0.0);
        let orbit = orbit_of(&map);
        let g = first_failing_gamma(&map, &orbit, 0.01, 1e3)
            .unwrap()
            .expect("fails eventually");
        for k in 1..=20 {
            let t = 0.01 * (g / 0.01).powf(k as f64 / 21.0);
            assert!(certifies(&map, &orbit, t).unwrap(), "{t}");
        }
        for t in [g * 1.01, g * 2.0, g * 10.0] {
            assert!(!certifies(&map, &orbit, t).unwrap(), "{t}");
        }
    }

    #[test]
    fn flipped_contraction_fails_hypothesis() {
        let map = HenonMap3D::toy_affine(TOY_B1, 0.5, TOY_MU);
        let orbit = attractor_orbit(&map, tip(), 16, 256);
        assert!(matches!(
            cone_invariance_check(&map, &orbit, 0.1),
            Err(Error::HypothesisFailed(_))
        ));
    }

    #[test]
    fn perturbed_cone_holds_for_small_coupling() {
        let base = coupled(0.0);
        let orbit = orbit_of(&base);
        let kappa = kappa_sharp_of(&base, &orbit);
        let rho0 = 0.9 * 0.5 * kappa * 0.1;
        let map = coupled(1e-6);
        let cert = perturbed_cone_check(&map, &orbit, 0.1, rho0).unwrap();
        assert!(cert.pass);
        assert!(cert.worst_contraction <= cert.predicted_rate);
        let strong = coupled(1e-3);
        assert!(matches!(
            perturbed_cone_check(&strong, &orbit, 0.1, rho0),
            Err(Error::HypothesisFailed(_))
        ));
    }

    fn kappa_sharp_of(map: &HenonMap3D, orbit: &[[f64; 3]]) -> f64 {
        let b = block_bounds(map, orbit).unwrap();
        kappa_sharp(b.c, b.m_a, b.d)
    }

    #[test]
    fn toy_certificate_rejects_tilted_map() {
        let map = coupled(1e-6);
        assert!(matches!(
            cone_certificate(&map, &orbit_of(&map), 0.1),
            Err(Error::HypothesisFailed(_))
        ));
    }

    #[test]
    fn renormalization_is_a_skew_product() {
        let tower = truncated(4);
        let (_, a) = universal_functions();
        let r = skew_product_check(&tower, a, &RenormOptions::default()).unwrap();
        assert!((r.b1 - TOY_B1).abs() < 1e-12);
        assert!((r.b2 - TOY_B2).abs() < 1e-12);
        assert!(r.max_projection_gap() < 1e-8, "{r:?}");
        for l in &r.levels {
            if let Some(q) = l.dz_log_ratio {
                assert!((1.8..=2.2).contains(&q), "{l:?}");
            }
        }
        let devs: Vec<f64> = r.levels.iter().map(|l| l.eps_y_deviation).collect();
        assert!(devs.windows(2).all(|w| w[1] < w[0]), "{devs:?}");
    }

    #[test]
    fn skew_product_needs_toy_model() {
        let (_, a) = universal_functions();
        let tower = crate::testkit::perturbed_tower();
        assert!(matches!(
            skew_product_check(tower, a, &RenormOptions::default()),
            Err(Error::NotToyModel { .. })
        ));
    }

    #[test]
    fn vertical_lines_are_strong_stable() {
        let r = strong_stable_probe(toy_tower(), 4, SEPARATION).unwrap();
        assert!(r.vertical_spread < 1e-15, "{r:?}");
        assert!(r.projection_injective(), "{r:?}");
        assert!(r.z_contraction_error < 1e-10, "{r:?}");
    }

    #[test]
    fn line_field_probe_is_well_posed() {
        let r = line_field_discontinuity_probe(toy_tower(), 5, 32).unwrap();
        assert!(r.pushforward_error < 1e-6, "{r:?}");
        for row in &r.rows {
            assert!(row.log_sv_ratio > 20.0, "{row:?}");
            assert!(row.gap.is_finite());
        }
        assert_eq!(r.csv().lines().count(), 6);
    }

    #[test]
    fn min_expansion_scales_with_sigma() {
        let sigma = crate::testkit::fixed_point().sigma;
        let r = min_expansion_scaling(toy_tower(), sigma, 5).unwrap();
        assert!((r.b1 - TOY_B1).abs() < 1e-12);
        assert!(r.max_deviation() <= 10f64.ln(), "{r:?}");
        assert!(r.base[0] <= r.base[1]);
        assert!(r.splits.iter().all(SplitCheck::holds), "{:?}", r.splits);
        assert!(matches!(
            min_expansion_scaling(toy_tower(), sigma, MAX_SCALING_LEVEL + 1),
            Err(Error::UnderflowFrozen { .. })
        ));
    }
}
