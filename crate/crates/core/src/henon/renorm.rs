use serde::Serialize;

use super::hdiffeo::HorizontalDiffeo;
use super::map::{HenonMap3D, STANDING_BOX};
use crate::error::{Error, Result};
use crate::funcrep::{
    critical_point, Box3, GaussLegendre, Interval, ScalarField1D, ScalarField3D, TAIL_TOL,
};
use crate::unimodal::{is_renormalizable, UnimodalMap};

/// Perturbation fields whose largest coefficient falls below this are replaced
/// by exact zeros, since their next renormalization would underflow.
pub const FREEZE_THRESHOLD: f64 = 1e-280;
/// Largest sup norm of `ε` or `δ` accepted by the renormalizability diagnostic.
pub const PERTURBATION_BOUND: f64 = 0.25;
/// Coefficients of the new perturbation fields below this fraction of the
/// largest are rounding noise and are dropped. Left in place, noise in a
/// partial that should vanish (such as `∂_y δ` of a toy map) is amplified at
/// every level, because `ε_n / δ_n` grows super-exponentially.
pub const CHOP_TOL: f64 = 1e-14;
/// Offsets of the diagnostic sections from the tip section `(y, z) = (c, 0)`.
pub const SECTION_SPREAD: f64 = 0.1;

/// Numerical settings of one renormalization step.
#[derive(Clone, Debug, Serialize)]
pub struct RenormOptions {
    /// Starting degree of the one-dimensional fields.
    pub degree_1d: usize,
    pub max_degree_1d: usize,
    /// Starting degrees of the perturbation fields.
    pub degrees_3d: [usize; 3],
    pub max_degrees_3d: [usize; 3],
    /// Relative resolution tolerance of the perturbation fields.
    pub tol_3d: f64,
    /// Relative padding of the invariant interval `V`.
    pub padding: f64,
    /// Nodes of the path-integral rule.
    pub quad_nodes: usize,
}

impl Default for RenormOptions {
    fn default() -> Self {
        Self {
            degree_1d: 32,
            max_degree_1d: 256,
            degrees_3d: [16, 8, 8],
            max_degrees_3d: [64, 36, 36],
            tol_3d: TAIL_TOL,
            padding: 0.05,
            quad_nodes: 12,
        }
    }
}

/// Outcome of the renormalizability diagnostic.
#[derive(Clone, Debug, Serialize)]
pub struct RenormDiagnostic {
    #[serde(serialize_with = "crate::io::ser_f64")]
    pub eps_norm: f64,
    #[serde(serialize_with = "crate::io::ser_f64")]
    pub delta_norm: f64,
    /// Sections `x ↦ f(x) - ε(x, y0, z0)` of the map that fail the unimodal test.
    pub section_failures: Vec<String>,
    /// Failing sections of the renormalized map, tested when the map's own
    /// sections fail.
    pub result_section_failures: Vec<String>,
    /// Which map passed the section test: `"map"` or `"renormalization"`.
    pub sections_checked_on: String,
    /// The critical point of the section of the first return lies inside `V`.
    pub critical_interior: bool,
    /// Largest distance by which the first return section leaves `V`, relative
    /// to `|V|`.
    #[serde(serialize_with = "crate::io::ser_f64")]
    pub invariance_excess: f64,
    /// `sup_V |f₁ - f̃₁|` for the first-order formula
    /// `f̃₁(x) = f²(x) - v(f(x)) - [f'(f(x)) - ∂_x ε(f(x), x, 0)] v(x)`, `v(x) = ε(x, ψ(x), 0)`.
    #[serde(serialize_with = "crate::io::ser_f64")]
    pub formula_f1_gap: f64,
    pub renormalizable: bool,
}

/// One period-doubling renormalization `RF = Λ ∘ H ∘ F² ∘ H⁻¹ ∘ Λ⁻¹`.
#[derive(Clone, Debug)]
pub struct RenormStep {
    pub level: usize,
    pub hdiffeo: HorizontalDiffeo,
    /// `(y, z)` of the section that defines `f₁` and `ε₁ = f₁ - P₁`.
    pub anchor: [f64; 2],
    /// Critical point of `f₁`, a minimum.
    pub c1: f64,
    /// Interval `[f₁(c₁), f₁²(c₁)]` invariant under `f₁`.
    pub v: Interval,
    /// `V` padded, the first-coordinate range of `Λ⁻¹(B)`.
    pub v_pad: Interval,
    /// Slope `a < -1` of `s(x) = a (x - f₁(c₁)) + 1`.
    pub scale: f64,
    /// `f₁(c₁)`, sent to 1 by `s`.
    pub offset: f64,
    /// `x ↦ P₁(x, anchor)` on `v_pad`.
    pub f1: ScalarField1D,
    /// The renormalized map.
    pub result: HenonMap3D,
    /// Hull of `ψ_v(B)` sampled on a grid.
    pub b1_v: Box3,
    pub frozen_eps: bool,
    pub frozen_delta: bool,
    pub diagnostic: RenormDiagnostic,
}

impl RenormStep {
    pub fn source(&self) -> &HenonMap3D {
        &self.hdiffeo.map
    }

    /// `σ = 1/|a|`.
    pub fn sigma(&self) -> f64 {
        1.0 / self.scale.abs()
    }

    #[inline]
    pub fn s(&self, x: f64) -> f64 {
        self.scale * (x - self.offset) + 1.0
    }

    #[inline]
    pub fn s_inv(&self, u: f64) -> f64 {
        self.offset + (u - 1.0) / self.scale
    }

    /// `Λ(x, y, z) = (s(x), s(y), a z)`.
    pub fn lambda(&self, w: [f64; 3]) -> [f64; 3] {
        [self.s(w[0]), self.s(w[1]), self.scale * w[2]]
    }

    pub fn lambda_inv(&self, u: [f64; 3]) -> [f64; 3] {
        [self.s_inv(u[0]), self.s_inv(u[1]), u[2] / self.scale]
    }

    /// `Λ⁻¹(B)`.
    pub fn prf_box(&self) -> Box3 {
        let r = STANDING_BOX.axes[2].hi / self.scale.abs();
        Box3::new(self.v_pad, self.v_pad, Interval::symmetric(r))
    }

    /// Pre-renormalization `H F² H⁻¹` on `Λ⁻¹(B)`, as fields.
    pub fn prf(&self) -> HenonMap3D {
        let target = self.prf_box();
        let inv = 1.0 / self.scale;
        let r = &self.result;
        HenonMap3D {
            f: self.f1.clone(),
            eps: r.eps.affine_rescale(target, [true; 3]).map_values(inv, 0.0),
            delta: r
                .delta
                .affine_rescale(target, [true; 3])
                .map_values(inv, 0.0),
            domain: target,
        }
    }

    /// One-line summary of the step for reports.
    pub fn summary(&self) -> StepSummary {
        StepSummary {
            level: self.level,
            scale: self.scale,
            sigma: self.sigma(),
            c1: self.c1,
            v: self.v,
            b1_v: self.b1_v,
            eps_norm: self.result.eps.c0_norm(),
            delta_norm: self.result.delta.c0_norm(),
            frozen_eps: self.frozen_eps,
            frozen_delta: self.frozen_delta,
            degrees_eps: self.result.eps.degrees(),
            degrees_delta: self.result.delta.degrees(),
            diagnostic: self.diagnostic.clone(),
        }
    }

    /// `ψ_v = H⁻¹ ∘ Λ⁻¹`, which conjugates `RF` to `F²` on its image.
    pub fn psi_v(&self, u: [f64; 3]) -> Result<[f64; 3]> {
        self.hdiffeo.inverse(self.lambda_inv(u))
    }

    /// `ψ_c = F ∘ ψ_v`.
    pub fn psi_c(&self, u: [f64; 3]) -> Result<[f64; 3]> {
        Ok(self.source().apply(self.psi_v(u)?))
    }

    /// `Λ H F² H⁻¹ Λ⁻¹(u)` by direct composition.
    pub fn direct(&self, u: [f64; 3]) -> Result<[f64; 3]> {
        Ok(self.lambda(self.hdiffeo.first_return(self.lambda_inv(u))?))
    }
}

/// Serializable digest of a [`RenormStep`]; the norms are those of the
/// renormalized map.
#[derive(Clone, Debug, Serialize)]
pub struct StepSummary {
    pub level: usize,
    #[serde(serialize_with = "crate::io::ser_f64")]
    pub scale: f64,
    #[serde(serialize_with = "crate::io::ser_f64")]
    pub sigma: f64,
    #[serde(serialize_with = "crate::io::ser_f64")]
    pub c1: f64,
    pub v: Interval,
    pub b1_v: Box3,
    #[serde(serialize_with = "crate::io::ser_f64")]
    pub eps_norm: f64,
    #[serde(serialize_with = "crate::io::ser_f64")]
    pub delta_norm: f64,
    pub frozen_eps: bool,
    pub frozen_delta: bool,
    pub degrees_eps: [usize; 3],
    pub degrees_delta: [usize; 3],
    pub diagnostic: RenormDiagnostic,
}

/// Sections `x ↦ f(x) - ε(x, y0, z0)` over a 3 × 3 grid of `(y0, z0)` around
/// the tip section `(c, 0)` that fail the unimodal renormalizability test.
fn section_failures(map: &HenonMap3D, c: f64) -> Vec<String> {
    let mut failures = Vec::new();
    let (ys, zs) = if map.eps.is_zero() {
        (vec![c], vec![0.0])
    } else {
        let r = SECTION_SPREAD;
        (vec![c - r, c, c + r], vec![-r, 0.0, r])
    };
    for &y0 in &ys {
        for &z0 in &zs {
            let outcome = map
                .section(y0, z0)
                .and_then(UnimodalMap::from_field)
                .map(|u| is_renormalizable(&u));
            match outcome {
                Ok(r) if r.renormalizable => {}
                Ok(r) => failures.push(format!(
                    "section ({y0:.3}, {z0:.3}): {}",
                    r.reason.unwrap_or_default()
                )),
                Err(e) => failures.push(format!("section ({y0:.3}, {z0:.3}): {e}")),
            }
        }
    }
    failures
}

fn not_renormalizable(level: usize, reason: impl Into<String>) -> Error {
    Error::NotRenormalizable {
        level,
        reason: reason.into(),
    }
}

/// Domain of `ψ`: a neighbourhood of `hull(f² c, f⁴ c)` kept inside the image
/// of the decreasing branch and away from the critical value.
fn initial_psi_domain(f: &ScalarField1D, c: f64, around: Interval) -> Result<Interval> {
    let top = f.eval(c);
    let bottom = f.eval(f.domain().hi);
    let wide = around.padded(0.3);
    let hi = wide.hi.min(top - 0.25 * (top - around.hi));
    let lo = wide.lo.max(bottom + 1e-9 * (top - bottom));
    Interval::new(lo, hi)
}

/// x-range of the attractor piece around the critical point. Orbit points
/// alternate between that piece and the one around the critical value; the
/// 1D estimate `hull(f² c, f⁴ c)` is used if the orbit leaves the box.
fn critical_piece_estimate(map: &HenonMap3D, c: f64) -> Result<Interval> {
    let f = &map.f;
    let f2c = f.eval(f.eval(c));
    let fallback = Interval::hull(f2c, f.eval(f.eval(f2c)));
    let mut w = map.iterate([c, c, 0.0], 4096);
    let mut even = Vec::with_capacity(512);
    let mut odd = Vec::with_capacity(512);
    for k in 0..1024 {
        if !map.domain.contains(w) {
            return fallback;
        }
        if k % 2 == 0 {
            even.push(w[0])
        } else {
            odd.push(w[0])
        }
        w = map.apply(w);
    }
    let a = Interval::enclosing(even)?;
    let b = Interval::enclosing(odd)?;
    let piece = if (a.lo - c) * (a.hi - c) < (b.lo - c) * (b.hi - c) {
        a
    } else {
        b
    };
    if piece.len() > 0.0 {
        Ok(piece)
    } else {
        fallback
    }
}

/// Period-doubling renormalization of `map`, which sits at depth `level` of a tower.
pub fn renormalize(map: &HenonMap3D, level: usize, opts: &RenormOptions) -> Result<RenormStep> {
    let f = &map.f;
    let c = critical_point(f, f.domain())?;
    let (eps_norm, delta_norm) = map.perturbation_norms();
    if eps_norm > PERTURBATION_BOUND || delta_norm > PERTURBATION_BOUND {
        return Err(not_renormalizable(
            level,
            format!("perturbation too large: |ε| = {eps_norm:.3e}, |δ| = {delta_norm:.3e}"),
        ));
    }
    let failures = section_failures(map, c);
    let mut diagnostic = RenormDiagnostic {
        eps_norm,
        delta_norm,
        sections_checked_on: if failures.is_empty() {
            "map"
        } else {
            "renormalization"
        }
        .into(),
        section_failures: failures,
        result_section_failures: Vec::new(),
        critical_interior: false,
        invariance_excess: 0.0,
        formula_f1_gap: 0.0,
        renormalizable: false,
    };
    let q = GaussLegendre::new(opts.quad_nodes);

    let mut around = critical_piece_estimate(map, c)?;
    let mut attempt = 0;
    let (hd, anchor, c1, v, v_pad) = loop {
        attempt += 1;
        let dom = initial_psi_domain(f, c, around)
            .map_err(|e| not_renormalizable(level, format!("no domain for ψ: {e}")))?;
        let hd = HorizontalDiffeo::new(map, dom)?;
        let section = |y0: f64| {
            ScalarField1D::interpolate_adaptive(
                |x| Ok(hd.first_return([x, y0, 0.0])?[0]),
                dom,
                opts.degree_1d,
                opts.max_degree_1d,
                TAIL_TOL,
            )
        };
        let mut anchor = c;
        let mut c1 = c;
        for pass in 0..2 {
            if pass > 0 {
                anchor = c1;
            }
            let f1 = section(anchor)?;
            c1 = critical_point(&f1, dom).map_err(|e| {
                not_renormalizable(level, format!("no critical point of the first return: {e}"))
            })?;
        }
        let p1 = |x: f64| -> Result<f64> { Ok(hd.first_return([x, anchor, 0.0])?[0]) };
        let v1 = p1(c1)?;
        let v2 = p1(v1)?;
        let v = Interval::hull(v1, v2)?;
        let v_pad = v.padded(opts.padding);
        if dom.contains_interval(&v_pad.padded(0.05)) {
            break (hd, anchor, c1, v, v_pad);
        }
        if attempt >= 3 {
            return Err(not_renormalizable(
                level,
                "invariant interval escapes the domain of ψ",
            ));
        }
        around = Interval::hull(around.lo.min(v.lo), around.hi.max(v.hi))?;
    };

    let p1 = |x: f64| -> Result<f64> { Ok(hd.first_return([x, anchor, 0.0])?[0]) };
    let f1 = ScalarField1D::interpolate_adaptive(
        p1,
        v_pad,
        opts.degree_1d,
        opts.max_degree_1d,
        TAIL_TOL,
    )?;
    let offset = p1(c1)?;
    let f1_2 = p1(offset)?;
    let scale = 2.0 / (offset - f1_2);
    if !(scale < -1.0) {
        return Err(not_renormalizable(
            level,
            format!("rescaling slope {scale:.6} is not below -1"),
        ));
    }

    diagnostic.critical_interior = v.lo < c1 && c1 < v.hi;
    let excess = v
        .grid(257)
        .into_iter()
        .map(|x| {
            let y = f1.eval(x);
            (v.lo - y).max(y - v.hi).max(0.0)
        })
        .fold(0.0f64, f64::max)
        / v.len();
    diagnostic.invariance_excess = excess;
    if !diagnostic.critical_interior || excess > 1e-9 {
        return Err(not_renormalizable(
            level,
            format!(
                "first return section: critical point inside V = {}, excess {excess:.3e}",
                diagnostic.critical_interior
            ),
        ));
    }

    diagnostic.formula_f1_gap = v
        .grid(65)
        .into_iter()
        .map(|x| {
            let fx = f.eval(x);
            let (e, eg) = map.eps.eval_grad([fx, x, 0.0]);
            let vx = map.eps.eval([x, hd.psi.eval(x), 0.0]);
            let approx = f.eval(fx) - e - (f.eval_d(fx).1 - eg[0]) * vx;
            (f1.eval(x) - approx).abs()
        })
        .fold(0.0f64, f64::max);

    let f_r = f1
        .affine_rescale(STANDING_BOX.axes[0], true)
        .map_values(scale, 1.0 - scale * offset);

    let lambda_inv = |u: [f64; 3]| {
        [
            offset + (u[0] - 1.0) / scale,
            offset + (u[1] - 1.0) / scale,
            u[2] / scale,
        ]
    };
    let anchor_yz = [anchor, 0.0];
    let mut eps_r = if map.eps.is_zero() {
        ScalarField3D::zero(STANDING_BOX)
    } else {
        ScalarField3D::interpolate_adaptive(
            |u| Ok(scale * hd.first_return_defect(lambda_inv(u), anchor_yz, &q)?),
            STANDING_BOX,
            opts.degrees_3d,
            opts.max_degrees_3d,
            opts.tol_3d,
        )?
    };
    let mut delta_r = if map.delta.is_zero() {
        ScalarField3D::zero(STANDING_BOX)
    } else {
        ScalarField3D::interpolate_adaptive(
            |u| Ok(scale * hd.first_return_third(lambda_inv(u), &q)?),
            STANDING_BOX,
            opts.degrees_3d,
            opts.max_degrees_3d,
            opts.tol_3d,
        )?
    };
    eps_r.chop(CHOP_TOL);
    delta_r.chop(CHOP_TOL);
    let frozen_eps = !eps_r.is_zero() && eps_r.max_abs_coeff() < FREEZE_THRESHOLD;
    if frozen_eps {
        eps_r = ScalarField3D::zero(STANDING_BOX);
    }
    let frozen_delta = !delta_r.is_zero() && delta_r.max_abs_coeff() < FREEZE_THRESHOLD;
    if frozen_delta {
        delta_r = ScalarField3D::zero(STANDING_BOX);
    }

    let result = HenonMap3D {
        f: f_r,
        eps: eps_r,
        delta: delta_r,
        domain: STANDING_BOX,
    };
    if !diagnostic.section_failures.is_empty() {
        let c_r = critical_point(&result.f, result.f.domain())?;
        diagnostic.result_section_failures = section_failures(&result, c_r);
        if !diagnostic.result_section_failures.is_empty() {
            return Err(not_renormalizable(
                level,
                format!(
                    "sections of the map and of its renormalization fail: {}",
                    diagnostic.result_section_failures.join("; ")
                ),
            ));
        }
    }
    diagnostic.renormalizable = true;

    let grid = STANDING_BOX.grid(7);
    let mut images = Vec::with_capacity(grid.len());
    for u in grid {
        let w = [
            offset + (u[0] - 1.0) / scale,
            offset + (u[1] - 1.0) / scale,
            u[2] / scale,
        ];
        images.push(hd.inverse(w)?);
    }
    let b1_v = Box3::enclosing(&images)?;

    Ok(RenormStep {
        level,
        hdiffeo: hd,
        anchor: anchor_yz,
        c1,
        v,
        v_pad,
        scale,
        offset,
        f1,
        result,
        b1_v,
        frozen_eps,
        frozen_delta,
        diagnostic,
    })
}

/// The maps `F_0, …, F_N` with `F_{n+1} = R F_n`, and the steps between them.
#[derive(Clone, Debug)]
pub struct RenormTower {
    pub maps: Vec<HenonMap3D>,
    pub steps: Vec<RenormStep>,
}

impl RenormTower {
    pub fn depth(&self) -> usize {
        self.steps.len()
    }

    /// `sup |ε_n|` for every level.
    pub fn eps_norms(&self) -> Vec<f64> {
        self.maps.iter().map(|m| m.eps.c0_norm()).collect()
    }

    /// `sup |δ_n|` for every level.
    pub fn delta_norms(&self) -> Vec<f64> {
        self.maps.iter().map(|m| m.delta.c0_norm()).collect()
    }

    /// Scaling factors `σ_n = 1/|a_n|` of the steps.
    pub fn sigmas(&self) -> Vec<f64> {
        self.steps.iter().map(RenormStep::sigma).collect()
    }
}

/// Renormalizes `map` `depth` times.
pub fn renorm_tower(map: &HenonMap3D, depth: usize, opts: &RenormOptions) -> Result<RenormTower> {
    let mut maps = vec![map.clone()];
    let mut steps = Vec::with_capacity(depth);
    for level in 0..depth {
        let step = renormalize(&maps[level], level, opts)?;
        maps.push(step.result.clone());
        steps.push(step);
    }
    Ok(RenormTower { maps, steps })
}
