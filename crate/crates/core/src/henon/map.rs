use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::funcrep::{Box3, Interval, ScalarField1D, ScalarField3D};
use crate::unimodal::FIELD_DOMAIN;

/// Standing box on which every map of a renormalization tower is defined.
pub const STANDING_BOX: Box3 = Box3::cube(1.1);

/// A three-dimensional Hénon-like map `F(x, y, z) = (f(x) - ε(x, y, z), x, δ(x, y, z))`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HenonMap3D {
    pub f: ScalarField1D,
    pub eps: ScalarField3D,
    pub delta: ScalarField3D,
    #[serde(rename = "box")]
    pub domain: Box3,
}

/// Partial derivatives of `ε` and `δ` at a point.
#[derive(Clone, Copy, Debug)]
pub struct Partials {
    pub eps: f64,
    pub eps_grad: [f64; 3],
    pub delta: f64,
    pub delta_grad: [f64; 3],
}

impl HenonMap3D {
    pub fn new(
        f: ScalarField1D,
        eps: ScalarField3D,
        delta: ScalarField3D,
        domain: Box3,
    ) -> Result<Self> {
        if !f.domain().contains_interval(&domain.axes[0]) && f.domain() != domain.axes[0] {
            return Err(Error::DomainError(
                "f must be defined on the x-range of the box".into(),
            ));
        }
        Ok(Self {
            f,
            eps,
            delta,
            domain,
        })
    }

    /// The degenerate map `(f(x), x, 0)`.
    pub fn degenerate(f: ScalarField1D) -> Self {
        Self {
            f,
            eps: ScalarField3D::zero(STANDING_BOX),
            delta: ScalarField3D::zero(STANDING_BOX),
            domain: STANDING_BOX,
        }
    }

    /// Builds a map from closures for `ε` and `δ` with the given field degrees.
    pub fn from_fns(
        f: ScalarField1D,
        eps: impl Fn([f64; 3]) -> f64 + Sync,
        eps_degrees: [usize; 3],
        delta: impl Fn([f64; 3]) -> f64 + Sync,
        delta_degrees: [usize; 3],
    ) -> Result<Self> {
        let eps = ScalarField3D::interpolate(eps, STANDING_BOX, eps_degrees)?;
        let delta = ScalarField3D::interpolate(delta, STANDING_BOX, delta_degrees)?;
        Self::new(f, eps, delta, STANDING_BOX)
    }

    /// `F(x, y, z) = (1 - mu x^2 - b1 y, x, b2 z)`.
    pub fn toy_affine(b1: f64, b2: f64, mu: f64) -> Self {
        Self::perturbed_toy(b1, b2, mu, 0.0)
    }

    /// `toy_affine` with `η z` added to `ε` and `η x y` added to `δ`.
    pub fn perturbed_toy(b1: f64, b2: f64, mu: f64, eta: f64) -> Self {
        let f = ScalarField1D::fit(|x| 1.0 - mu * x * x, FIELD_DOMAIN, 2);
        let eps = ScalarField3D::fit(|p| b1 * p[1] + eta * p[2], STANDING_BOX, [1, 1, 1])
            .expect("low-degree fit");
        let delta = ScalarField3D::fit(|p| b2 * p[2] + eta * p[0] * p[1], STANDING_BOX, [1, 1, 1])
            .expect("low-degree fit");
        Self {
            f,
            eps,
            delta,
            domain: STANDING_BOX,
        }
    }

    /// True when both perturbation fields vanish identically.
    pub fn is_degenerate(&self) -> bool {
        self.eps.is_zero() && self.delta.is_zero()
    }

    #[inline]
    pub fn apply(&self, w: [f64; 3]) -> [f64; 3] {
        [
            self.f.eval(w[0]) - self.eps.eval(w),
            w[0],
            self.delta.eval(w),
        ]
    }

    /// `F(w)` for `w` inside the box (with a small slack).
    pub fn apply_checked(&self, w: [f64; 3]) -> Result<[f64; 3]> {
        if !self.domain.contains_with(w, 1e-9) {
            return Err(Error::OutOfDomain { point: w.to_vec() });
        }
        Ok(self.apply(w))
    }

    /// `F^n(w)` without domain checks.
    pub fn iterate(&self, w: [f64; 3], n: usize) -> [f64; 3] {
        (0..n).fold(w, |p, _| self.apply(p))
    }

    #[inline]
    pub fn partials(&self, w: [f64; 3]) -> Partials {
        let (eps, eps_grad) = self.eps.eval_grad(w);
        let (delta, delta_grad) = self.delta.eval_grad(w);
        Partials {
            eps,
            eps_grad,
            delta,
            delta_grad,
        }
    }

    /// Derivative matrix `DF(w)`.
    pub fn jacobian(&self, w: [f64; 3]) -> Matrix3<f64> {
        let p = self.partials(w);
        let df = self.f.eval_d(w[0]).1;
        Matrix3::new(
            df - p.eps_grad[0],
            -p.eps_grad[1],
            -p.eps_grad[2],
            1.0,
            0.0,
            0.0,
            p.delta_grad[0],
            p.delta_grad[1],
            p.delta_grad[2],
        )
    }

    /// `Jac F = ε_y δ_z - ε_z δ_y`.
    #[inline]
    pub fn jac_det(&self, w: [f64; 3]) -> f64 {
        let p = self.partials(w);
        p.eps_grad[1] * p.delta_grad[2] - p.eps_grad[2] * p.delta_grad[1]
    }

    /// The one-dimensional section `x ↦ f(x) - ε(x, y0, z0)`.
    pub fn section(&self, y0: f64, z0: f64) -> Result<ScalarField1D> {
        let dom = self.f.domain();
        ScalarField1D::interpolate_adaptive(
            |x| Ok(self.f.eval(x) - self.eps.eval([x, y0, z0])),
            dom,
            self.f.degree().max(self.eps.degrees()[0]).max(2),
            256,
            crate::funcrep::TAIL_TOL,
        )
    }

    /// `sup |ε|` and `sup |δ|` over the norm probe grid.
    pub fn perturbation_norms(&self) -> (f64, f64) {
        (self.eps.c0_norm(), self.delta.c0_norm())
    }

    /// Fixed points seeded from the fixed points of `f` and refined by Newton.
    pub fn fixed_points(&self) -> Result<SaddlePair> {
        let seeds = fixed_point_seeds(&self.f)?;
        let mut found = Vec::new();
        for x in seeds {
            let w = self.newton_fixed_point([x, x, 0.0])?;
            found.push(SaddlePoint::at(self, w));
        }
        let beta0 = found
            .iter()
            .find(|s| s.unstable > 1.0)
            .cloned()
            .ok_or_else(|| Error::NotFound("saddle with unstable eigenvalue > 1".into()))?;
        let beta1 = found
            .iter()
            .find(|s| s.unstable < -1.0)
            .cloned()
            .ok_or_else(|| Error::NotFound("saddle with unstable eigenvalue < -1".into()))?;
        Ok(SaddlePair { beta0, beta1 })
    }

    fn newton_fixed_point(&self, seed: [f64; 3]) -> Result<[f64; 3]> {
        let mut w = Vector3::from(seed);
        for _ in 0..60 {
            let p = [w[0], w[1], w[2]];
            let g = Vector3::from(self.apply(p)) - w;
            if g.amax() < 1e-15 {
                return Ok(p);
            }
            let m = self.jacobian(p) - Matrix3::identity();
            let step = m
                .lu()
                .solve(&g)
                .ok_or_else(|| Error::SingularJacobian { point: p.to_vec() })?;
            w -= step;
            if step.amax() < 1e-16 * (1.0 + w.amax()) {
                break;
            }
        }
        let p = [w[0], w[1], w[2]];
        let g = (Vector3::from(self.apply(p)) - w).amax();
        if g < 1e-10 {
            Ok(p)
        } else {
            Err(Error::NotFound(format!(
                "fixed point near {seed:?} (residual {g:.3e})"
            )))
        }
    }
}

/// Fixed points of `f` located on a wide grid; the polynomial extension is used
/// outside the field domain, since one of them may lie outside `[-1.1, 1.1]`.
pub(crate) fn fixed_point_seeds(f: &ScalarField1D) -> Result<Vec<f64>> {
    let dom = f.domain();
    let wide = Interval::new(dom.lo - dom.len(), dom.hi + dom.len())?;
    let g = |x: f64| {
        let (v, d) = f.eval_d(x);
        (v - x, d - 1.0)
    };
    let grid = wide.grid(801);
    let mut roots = Vec::new();
    for pair in grid.windows(2) {
        if g(pair[0]).0.signum() != g(pair[1]).0.signum() {
            roots.push(crate::funcrep::bracketed_root(
                g, pair[0], pair[1], pair[0],
            )?);
        }
    }
    if roots.is_empty() {
        return Err(Error::NotFound("f has no fixed points".into()));
    }
    Ok(roots)
}

/// A hyperbolic fixed point and its linear data.
#[derive(Clone, Debug, Serialize)]
pub struct SaddlePoint {
    #[serde(serialize_with = "crate::io::ser_arr3")]
    pub point: [f64; 3],
    /// Real parts of the eigenvalues of `DF`, sorted by decreasing modulus.
    #[serde(serialize_with = "crate::io::ser_vec")]
    pub eigenvalues: Vec<f64>,
    /// Imaginary parts matching `eigenvalues`.
    #[serde(serialize_with = "crate::io::ser_vec")]
    pub eigenvalues_im: Vec<f64>,
    /// The eigenvalue of largest modulus (real for these saddles).
    #[serde(serialize_with = "crate::io::ser_f64")]
    pub unstable: f64,
    /// Unit eigenvector of the unstable eigenvalue.
    #[serde(serialize_with = "crate::io::ser_arr3")]
    pub unstable_direction: [f64; 3],
    /// True when the point lies inside the map's box.
    pub inside_box: bool,
}

impl SaddlePoint {
    fn at(map: &HenonMap3D, w: [f64; 3]) -> Self {
        let j = map.jacobian(w);
        let mut ev: Vec<(f64, f64)> = j
            .complex_eigenvalues()
            .iter()
            .map(|c| (c.re, c.im))
            .collect();
        ev.sort_by(|a, b| b.0.hypot(b.1).total_cmp(&a.0.hypot(a.1)));
        let unstable = ev[0].0;
        let svd = (j - Matrix3::identity() * unstable).svd(false, true);
        let v_t = svd.v_t.expect("requested V^T");
        let k = svd
            .singular_values
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap_or(2);
        let row = v_t.row(k);
        Self {
            point: w,
            eigenvalues: ev.iter().map(|e| e.0).collect(),
            eigenvalues_im: ev.iter().map(|e| e.1).collect(),
            unstable,
            unstable_direction: [row[0], row[1], row[2]],
            inside_box: map.domain.contains_with(w, 1e-12),
        }
    }
}

/// The two saddle fixed points of a Hénon-like map.
#[derive(Clone, Debug, Serialize)]
pub struct SaddlePair {
    /// Unstable eigenvalue greater than 1.
    pub beta0: SaddlePoint,
    /// Unstable eigenvalue less than -1.
    pub beta1: SaddlePoint,
}
