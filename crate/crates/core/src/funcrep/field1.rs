use serde::{Deserialize, Serialize};

use super::cheb;
use super::domain::Interval;
use crate::error::{Error, Result};

/// Default relative tolerance of the off-node resolution check.
pub const TAIL_TOL: f64 = 1e-12;

/// A smooth function on an interval held as a Chebyshev interpolant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalarField1D {
    domain: Interval,
    #[serde(serialize_with = "crate::io::ser_vec")]
    coeffs: Vec<f64>,
}

/// Off-node probe points used by the resolution check.
fn probe_points(domain: &Interval, degree: usize) -> Vec<f64> {
    let m = 4 * (degree + 1);
    (0..m)
        .map(|i| domain.lo + domain.len() * (i as f64 + 0.37) / m as f64)
        .collect()
}

impl ScalarField1D {
    pub fn from_coeffs(domain: Interval, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::Invalid("empty coefficient vector".into()));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::Invalid("non-finite coefficient".into()));
        }
        Ok(Self { domain, coeffs })
    }

    pub fn constant(domain: Interval, value: f64) -> Self {
        Self {
            domain,
            coeffs: vec![value],
        }
    }

    /// The identity map `x -> x` on `domain`.
    pub fn identity(domain: Interval) -> Self {
        Self {
            domain,
            coeffs: vec![domain.mid(), domain.radius()],
        }
    }

    /// Interpolates at the Lobatto nodes without checking resolution.
    pub fn fit(sampler: impl Fn(f64) -> f64, domain: Interval, degree: usize) -> Self {
        let vals: Vec<f64> = cheb::lobatto_nodes(degree)
            .into_iter()
            .map(|t| sampler(domain.from_unit(t)))
            .collect();
        Self {
            domain,
            coeffs: cheb::values_to_coeffs(&vals),
        }
    }

    /// Interpolates and verifies the result on off-node probes at the default tolerance.
    pub fn interpolate(
        sampler: impl Fn(f64) -> f64,
        domain: Interval,
        degree: usize,
    ) -> Result<Self> {
        Self::try_interpolate(|x| Ok(sampler(x)), domain, degree, TAIL_TOL)
    }

    /// Interpolates a fallible sampler; the off-node error must stay below
    /// `tol` times the largest sampled magnitude.
    pub fn try_interpolate(
        sampler: impl Fn(f64) -> Result<f64>,
        domain: Interval,
        degree: usize,
        tol: f64,
    ) -> Result<Self> {
        let vals = cheb::lobatto_nodes(degree)
            .into_iter()
            .map(|t| sampler(domain.from_unit(t)))
            .collect::<Result<Vec<f64>>>()?;
        if let Some(bad) = vals.iter().position(|v| !v.is_finite()) {
            return Err(Error::DomainError(format!(
                "sampler returned a non-finite value at node {bad}"
            )));
        }
        let field = Self {
            domain,
            coeffs: cheb::values_to_coeffs(&vals),
        };
        let mut scale = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut err = 0.0f64;
        for x in probe_points(&domain, degree) {
            let exact = sampler(x)?;
            scale = scale.max(exact.abs());
            err = err.max((field.eval(x) - exact).abs());
        }
        if scale > 0.0 && err > tol * scale {
            return Err(Error::NotResolved {
                degrees: vec![degree],
                error: err / scale,
                tol,
            });
        }
        Ok(field)
    }

    /// Retries [`Self::try_interpolate`] with the degree raised by half until
    /// resolved or `max_degree` is exceeded.
    pub fn interpolate_adaptive(
        sampler: impl Fn(f64) -> Result<f64>,
        domain: Interval,
        degree: usize,
        max_degree: usize,
        tol: f64,
    ) -> Result<Self> {
        let mut d = degree.max(1);
        loop {
            match Self::try_interpolate(&sampler, domain, d, tol) {
                Err(Error::NotResolved { .. }) if d < max_degree => {
                    d = (d + d / 2).min(max_degree);
                }
                other => return other,
            }
        }
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Evaluates anywhere; outside the domain this is the polynomial extension.
    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        cheb::clenshaw(&self.coeffs, self.domain.to_unit(x))
    }

    /// Evaluates with a domain check.
    pub fn eval_checked(&self, x: f64) -> Result<f64> {
        if self.domain.contains_with(x, 1e-12 * self.domain.len()) {
            Ok(self.eval(x))
        } else {
            Err(Error::OutOfDomain { point: vec![x] })
        }
    }

    /// Value and first derivative.
    #[inline]
    pub fn eval_d(&self, x: f64) -> (f64, f64) {
        let t = self.domain.to_unit(x);
        // Clenshaw for p and p' together.
        let n = self.coeffs.len();
        if n == 1 {
            return (self.coeffs[0], 0.0);
        }
        let (mut b1, mut b2) = (0.0, 0.0);
        let (mut d1, mut d2) = (0.0, 0.0);
        for k in (1..n).rev() {
            let b0 = 2.0 * t * b1 - b2 + self.coeffs[k];
            let d0 = 2.0 * b1 + 2.0 * t * d1 - d2;
            b2 = b1;
            b1 = b0;
            d2 = d1;
            d1 = d0;
        }
        let value = t * b1 - b2 + self.coeffs[0];
        let deriv = b1 + t * d1 - d2;
        (value, deriv * 2.0 / self.domain.len())
    }

    pub fn derivative(&self) -> Self {
        let scale = 2.0 / self.domain.len();
        Self {
            domain: self.domain,
            coeffs: cheb::deriv_coeffs(&self.coeffs)
                .into_iter()
                .map(|c| c * scale)
                .collect(),
        }
    }

    /// Antiderivative vanishing at the left end of the domain.
    pub fn antiderivative(&self) -> Self {
        let scale = 0.5 * self.domain.len();
        Self {
            domain: self.domain,
            coeffs: cheb::integ_coeffs(&self.coeffs)
                .into_iter()
                .map(|c| c * scale)
                .collect(),
        }
    }

    /// Integral over the whole domain.
    pub fn integral(&self) -> f64 {
        self.antiderivative().eval(self.domain.hi)
    }

    /// Divided difference `(f(v) - f(u)) / (v - u)` computed as the mean of `f'`
    /// along the segment, accurate even when `v - u` is tiny.
    pub fn divided_difference(&self, u: f64, v: f64, q: &super::GaussLegendre) -> f64 {
        if u == v {
            return self.eval_d(u).1;
        }
        let h = v - u;
        q.integrate(|t| self.eval_d(u + t * h).1)
    }

    /// Difference `self - other` of two fields on the same domain.
    pub fn sub(&self, other: &ScalarField1D) -> Result<Self> {
        if self.domain != other.domain {
            return Err(Error::DomainError(
                "fields live on different domains".into(),
            ));
        }
        let n = self.coeffs.len().max(other.coeffs.len());
        let get = |c: &[f64], k: usize| c.get(k).copied().unwrap_or(0.0);
        Ok(Self {
            domain: self.domain,
            coeffs: (0..n)
                .map(|k| get(&self.coeffs, k) - get(&other.coeffs, k))
                .collect(),
        })
    }

    /// `a * self + b`.
    pub fn map_values(&self, a: f64, b: f64) -> Self {
        let mut coeffs: Vec<f64> = self.coeffs.iter().map(|c| a * c).collect();
        coeffs[0] += b;
        Self {
            domain: self.domain,
            coeffs,
        }
    }

    /// The same function of the reference variable on a new domain: the result
    /// `g` satisfies `g(A(x)) = self(x)` with `A` the affine map from the old
    /// domain onto `target`, increasing unless `reverse` is set.
    pub fn affine_rescale(&self, target: Interval, reverse: bool) -> Self {
        let coeffs = if reverse {
            self.coeffs
                .iter()
                .enumerate()
                .map(|(k, c)| if k % 2 == 1 { -c } else { *c })
                .collect()
        } else {
            self.coeffs.clone()
        };
        Self {
            domain: target,
            coeffs,
        }
    }

    /// `self ∘ inner` re-interpolated on the domain of `inner`.
    pub fn compose(&self, inner: &ScalarField1D, degree: usize) -> Result<Self> {
        Self::interpolate_adaptive(
            |x| Ok(self.eval(inner.eval(x))),
            inner.domain,
            degree,
            4 * degree.max(16),
            TAIL_TOL,
        )
    }

    /// Dense probe grid: four times oversampled relative to the degree.
    pub fn probe_grid(&self) -> Vec<f64> {
        self.domain.grid(4 * (self.degree() + 1) + 1)
    }

    pub fn c0_norm(&self) -> f64 {
        self.probe_grid()
            .into_iter()
            .fold(0.0, |m, x| m.max(self.eval(x).abs()))
    }

    /// `max(|h|, |h'|, ..., |h^(r)|)` over the probe grid.
    pub fn cr_norm(&self, r: usize) -> f64 {
        let mut f = self.clone();
        let mut best = f.c0_norm();
        for _ in 0..r {
            f = f.derivative();
            best = best.max(f.c0_norm());
        }
        best
    }

    pub fn c1_norm(&self) -> f64 {
        self.cr_norm(1)
    }

    pub fn c2_norm(&self) -> f64 {
        self.cr_norm(2)
    }

    /// Largest magnitude among the last few coefficients, relative to the largest overall.
    pub fn relative_tail(&self) -> f64 {
        let top = self.coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        if top == 0.0 {
            return 0.0;
        }
        let k = (self.coeffs.len() / 8).max(1);
        self.coeffs[self.coeffs.len() - k..]
            .iter()
            .fold(0.0f64, |m, c| m.max(c.abs()))
            / top
    }
}
