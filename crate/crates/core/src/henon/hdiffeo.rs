use serde::Serialize;

use super::map::HenonMap3D;
use crate::error::{Error, Result};
use crate::funcrep::{
    critical_point, invert_point, GaussLegendre, Interval, ScalarField1D, TAIL_TOL,
};

const MAX_PSI_DEGREE: usize = 512;
/// Nodes of the rule used for divided differences of `f`.
const DD_NODES: usize = 12;
const MAX_SHIFT_ITER: usize = 60;

/// The horizontal diffeomorphism `H(x, y, z) = (f(x) - ε(x, y, z), y, z - δ(y, ψ(y), 0))`
/// of a Hénon-like map, where `ψ` is the decreasing inverse branch of `f`.
///
/// `H` straightens the first return to the critical-point piece:
/// `F ∘ H⁻¹ = (x, φ, δ ∘ H⁻¹)` with `φ` the first component of `H⁻¹`.
#[derive(Clone, Debug, Serialize)]
pub struct HorizontalDiffeo {
    pub map: HenonMap3D,
    /// Critical point of `f`.
    pub c: f64,
    /// Inverse branch of `f` with values right of `c`, as a field on the
    /// interval of first coordinates where `H⁻¹` is used.
    pub psi: ScalarField1D,
    #[serde(skip)]
    dd: GaussLegendre,
}

/// Intermediate quantities of `H⁻¹(x, y, z)`.
#[derive(Clone, Copy, Debug)]
pub struct InverseData {
    /// `ψ(x)`.
    pub base: f64,
    /// `φ - ψ(x)`, obtained without cancellation.
    pub shift: f64,
    /// First component `φ` of `H⁻¹`.
    pub phi: f64,
    /// Third component `z + δ(y, ψ(y), 0)` of `H⁻¹`.
    pub z_prime: f64,
    /// `ψ(y)`.
    pub psi_y: f64,
}

/// Value and `(y, z)` partials of the first component of `H F² H⁻¹`.
#[derive(Clone, Copy, Debug)]
pub struct FirstReturn {
    pub value: f64,
    pub grad_yz: [f64; 2],
}

impl HorizontalDiffeo {
    /// Builds `H` for `map` with `ψ` resolved on `domain`.
    pub fn new(map: &HenonMap3D, domain: Interval) -> Result<Self> {
        let f = &map.f;
        let c = critical_point(f, f.domain())?;
        let branch = Interval::new(c, f.domain().hi)?;
        let image = Interval::hull(f.eval(branch.lo), f.eval(branch.hi))?;
        if !image.contains_interval(&domain) || domain.hi >= f.eval(c) {
            return Err(Error::DomainError(format!(
                "inverse branch is not defined on [{}, {}]",
                domain.lo, domain.hi
            )));
        }
        let psi = ScalarField1D::interpolate_adaptive(
            |y| invert_point(f, y, branch),
            domain,
            f.degree().max(16),
            MAX_PSI_DEGREE,
            TAIL_TOL,
        )?;
        Ok(Self {
            map: map.clone(),
            c,
            psi,
            dd: GaussLegendre::new(DD_NODES),
        })
    }

    /// `H(w)`.
    pub fn forward(&self, w: [f64; 3]) -> [f64; 3] {
        let m = &self.map;
        let [x, y, z] = w;
        let py = self.psi.eval(y);
        [
            m.f.eval(x) - m.eps.eval(w),
            y,
            z - m.delta.eval([y, py, 0.0]),
        ]
    }

    /// `H⁻¹(w)`.
    pub fn inverse(&self, w: [f64; 3]) -> Result<[f64; 3]> {
        let d = self.inverse_data(w)?;
        Ok([d.phi, w[1], d.z_prime])
    }

    /// Solves `f(φ) - ε(φ, y, z') = x` as `φ = ψ(x) + Δ`, where
    /// `Δ = (ε(ψ(x) + Δ, y, z') + x - f(ψ(x))) / f[ψ(x), ψ(x) + Δ]`.
    pub fn inverse_data(&self, w: [f64; 3]) -> Result<InverseData> {
        let m = &self.map;
        let [x, y, z] = w;
        let psi_y = self.psi.eval(y);
        let z_prime = if m.delta.is_zero() {
            z
        } else {
            z + m.delta.eval([y, psi_y, 0.0])
        };
        let base = self.psi.eval(x);
        let (fb, dfb) = m.f.eval_d(base);
        let r = x - fb;
        let shift = if m.eps.is_zero() {
            r / dfb
        } else {
            self.solve_shift(base, r, y, z_prime)?
        };
        Ok(InverseData {
            base,
            shift,
            phi: base + shift,
            z_prime,
            psi_y,
        })
    }

    /// Newton's method on `G(Δ) = f[b, b + Δ] Δ - ε(b + Δ, y, z') - r`, where the
    /// divided difference stands in for `f(b + Δ) - f(b)` without cancellation.
    fn solve_shift(&self, base: f64, r: f64, y: f64, z_prime: f64) -> Result<f64> {
        let m = &self.map;
        let mut d = (m.eps.eval([base, y, z_prime]) + r) / m.f.eval_d(base).1;
        let mut last = f64::INFINITY;
        for _ in 0..MAX_SHIFT_ITER {
            let p = [base + d, y, z_prime];
            let (e, eg) = m.eps.eval_grad(p);
            let g = m.f.divided_difference(base, base + d, &self.dd) * d - e - r;
            let slope = m.f.eval_d(base + d).1 - eg[0];
            let step = g / slope;
            if !step.is_finite() {
                break;
            }
            d -= step;
            let size = step.abs();
            if size <= 4.0 * f64::EPSILON * d.abs()
                || size == 0.0
                || (size >= last && size <= 1e-13 * d.abs().max(1e-300))
            {
                return Ok(d);
            }
            last = size;
        }
        Err(Error::NoConvergence {
            iterations: MAX_SHIFT_ITER,
            residual: last,
        })
    }

    /// `H F² H⁻¹(w)` by direct composition; its first coordinate is accurate to
    /// rounding and the perturbation terms are not separated.
    pub fn first_return(&self, w: [f64; 3]) -> Result<[f64; 3]> {
        let p = self.inverse(w)?;
        let q = self.map.apply(self.map.apply(p));
        Ok(self.forward(q))
    }

    /// First component of `H F² H⁻¹` with its `(y, z)` partials from the chain
    /// rule. Each partial is a product of derivatives of `ε` and `δ`, so it keeps
    /// relative precision however small the perturbation is.
    pub fn first_return_partials(&self, w: [f64; 3]) -> Result<FirstReturn> {
        let m = &self.map;
        let [x, y, _] = w;
        let inv = self.inverse_data(w)?;
        let (phi, zp) = (inv.phi, inv.z_prime);

        let (zp_y, zp_z) = if m.delta.is_zero() {
            (0.0, 1.0)
        } else {
            let (_, g) = m.delta.eval_grad([y, inv.psi_y, 0.0]);
            let dpsi = 1.0 / m.f.eval_d(inv.psi_y).1;
            (g[0] + g[1] * dpsi, 1.0)
        };
        let p1 = m.partials([phi, y, zp]);
        let d_phi = m.f.eval_d(phi).1 - p1.eps_grad[0];
        let phi_y = (p1.eps_grad[1] + p1.eps_grad[2] * zp_y) / d_phi;
        let phi_z = p1.eps_grad[2] * zp_z / d_phi;
        let zeta = p1.delta;
        let zeta_y = p1.delta_grad[0] * phi_y + p1.delta_grad[1] + p1.delta_grad[2] * zp_y;
        let zeta_z = p1.delta_grad[0] * phi_z + p1.delta_grad[2] * zp_z;

        let p2 = m.partials([x, phi, zeta]);
        let big_x = m.f.eval(x) - p2.eps;
        let big_z = p2.delta;
        let x_y = -(p2.eps_grad[1] * phi_y + p2.eps_grad[2] * zeta_y);
        let x_z = -(p2.eps_grad[1] * phi_z + p2.eps_grad[2] * zeta_z);
        let z_y = p2.delta_grad[1] * phi_y + p2.delta_grad[2] * zeta_y;
        let z_z = p2.delta_grad[1] * phi_z + p2.delta_grad[2] * zeta_z;

        let p3 = m.partials([big_x, x, big_z]);
        let slope = m.f.eval_d(big_x).1 - p3.eps_grad[0];
        Ok(FirstReturn {
            value: m.f.eval(big_x) - p3.eps,
            grad_yz: [
                slope * x_y - p3.eps_grad[2] * z_y,
                slope * x_z - p3.eps_grad[2] * z_z,
            ],
        })
    }

    /// `P₁(x, y0, z0) - P₁(x, y, z)` for the first component `P₁` of `H F² H⁻¹`,
    /// as a path integral of its `(y, z)` partials.
    pub fn first_return_defect(
        &self,
        w: [f64; 3],
        anchor: [f64; 2],
        q: &GaussLegendre,
    ) -> Result<f64> {
        if self.map.eps.is_zero() {
            return Ok(0.0);
        }
        let dy = w[1] - anchor[0];
        let dz = w[2] - anchor[1];
        let mut acc = 0.0;
        for (&t, &wt) in q.nodes.iter().zip(&q.weights) {
            let p = [w[0], anchor[0] + t * dy, anchor[1] + t * dz];
            let g = self.first_return_partials(p)?.grad_yz;
            acc += wt * (g[0] * dy + g[1] * dz);
        }
        Ok(-acc)
    }

    /// Third component `δ(x, φ, ζ) - δ(x, ψ(x), 0)` of `H F² H⁻¹`, as a path
    /// integral of the partials of `δ`.
    ///
    /// The `y`-displacement of the path is the part of the shift driven by `ε`
    /// alone. The rest, `(x - f(ψ(x))) / f'`, is rounding noise of the inverse
    /// branch and would otherwise swamp `δ` once it is tiny.
    pub fn first_return_third(&self, w: [f64; 3], q: &GaussLegendre) -> Result<f64> {
        let m = &self.map;
        if m.delta.is_zero() {
            return Ok(0.0);
        }
        let inv = self.inverse_data(w)?;
        let zeta = m.delta.eval([inv.phi, w[1], inv.z_prime]);
        let shift = if m.eps.is_zero() {
            0.0
        } else {
            self.solve_shift(inv.base, 0.0, w[1], inv.z_prime)?
        };
        let mut acc = 0.0;
        for (&t, &wt) in q.nodes.iter().zip(&q.weights) {
            let (_, g) = m.delta.eval_grad([w[0], inv.base + t * shift, t * zeta]);
            acc += wt * (g[1] * shift + g[2] * zeta);
        }
        Ok(acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn domain() -> Interval {
        Interval::new(-0.6, 0.4).unwrap()
    }

    fn sample(rng: &mut ChaCha8Rng) -> [f64; 3] {
        let d = domain();
        [
            rng.random_range(d.lo..d.hi),
            rng.random_range(d.lo..d.hi),
            rng.random_range(-0.4..0.4),
        ]
    }

    #[test]
    fn round_trip_small_perturbation() {
        let m = HenonMap3D::perturbed_toy(1e-3, 1e-3, 1.4, 1e-3);
        let h = HorizontalDiffeo::new(&m, domain()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let w = sample(&mut rng);
            let back = h.forward(h.inverse(w).unwrap());
            for k in 0..3 {
                assert!((back[k] - w[k]).abs() < 1e-10, "{w:?} -> {back:?}");
            }
        }
    }

    #[test]
    fn f_after_inverse_is_straight() {
        let m = HenonMap3D::perturbed_toy(0.05, 0.02, 1.4, 0.01);
        let h = HorizontalDiffeo::new(&m, domain()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let w = sample(&mut rng);
            let p = h.inverse(w).unwrap();
            let q = m.apply(p);
            assert!((q[0] - w[0]).abs() < 1e-13);
            assert_eq!(q[1], p[0]);
        }
    }

    #[test]
    fn partials_match_finite_differences() {
        let m = HenonMap3D::perturbed_toy(0.05, 0.02, 1.4, 0.01);
        let h = HorizontalDiffeo::new(&m, domain()).unwrap();
        let w = [-0.2, 0.1, 0.15];
        let fr = h.first_return_partials(w).unwrap();
        let direct = h.first_return(w).unwrap()[0];
        assert!((fr.value - direct).abs() < 1e-14);
        let e = 1e-6;
        for (k, axis) in [1usize, 2].into_iter().enumerate() {
            let mut wp = w;
            let mut wm = w;
            wp[axis] += e;
            wm[axis] -= e;
            let fd = (h.first_return(wp).unwrap()[0] - h.first_return(wm).unwrap()[0]) / (2.0 * e);
            assert!(
                (fd - fr.grad_yz[k]).abs() < 1e-8,
                "axis {axis}: {fd} vs {}",
                fr.grad_yz[k]
            );
        }
    }

    #[test]
    fn path_integrals_match_direct_composition() {
        let m = HenonMap3D::perturbed_toy(0.05, 0.02, 1.4, 0.01);
        let h = HorizontalDiffeo::new(&m, domain()).unwrap();
        let q = GaussLegendre::new(12);
        let anchor = [-0.1, 0.0];
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..30 {
            let w = sample(&mut rng);
            let direct = h.first_return(w).unwrap();
            let at_anchor = h.first_return([w[0], anchor[0], anchor[1]]).unwrap()[0];
            let defect = h.first_return_defect(w, anchor, &q).unwrap();
            assert!((at_anchor - direct[0] - defect).abs() < 1e-13);
            let third = h.first_return_third(w, &q).unwrap();
            assert!((direct[2] - third).abs() < 1e-14);
        }
    }

    #[test]
    fn tiny_perturbation_keeps_relative_precision() {
        // ε = b y: the defect is quadratic in b, far below rounding of P₁.
        let b = 1e-12;
        let m = HenonMap3D::toy_affine(b, 0.0, 1.4);
        let h = HorizontalDiffeo::new(&m, domain()).unwrap();
        let q = GaussLegendre::new(12);
        let w = [-0.3, 0.2, 0.0];
        let d1 = h.first_return_defect(w, [0.0, 0.0], &q).unwrap();
        let m2 = HenonMap3D::toy_affine(2.0 * b, 0.0, 1.4);
        let h2 = HorizontalDiffeo::new(&m2, domain()).unwrap();
        let d2 = h2.first_return_defect(w, [0.0, 0.0], &q).unwrap();
        assert!(d1 != 0.0);
        assert!((d2 / d1 - 4.0).abs() < 1e-6, "ratio {}", d2 / d1);
    }
}
