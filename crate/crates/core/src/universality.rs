//! Average Jacobian, distortion, the universal Jacobian law, the derivative of
//! the branch maps at the tip, their nonlinear part, and Lyapunov exponents.
//!
//! Jacobians of long compositions are accumulated as sums of logarithms, since
//! `b^(2^n)` leaves the range of `f64` after a handful of levels.

use nalgebra::{DMatrix, DVector, Matrix3};
use serde::Serialize;

use crate::cantor::{
    build_pieces, level_samples, psi_word, psi_word_jacobian, tip_seeds, Letter, Word,
};
use crate::error::{Error, Result};
use crate::funcrep::{Box3, Interval, ScalarField1D};
use crate::henon::{HenonMap3D, RenormTower, STANDING_BOX};

/// Relative step of the central differences used on the branch maps.
pub const DIFF_STEP: f64 = 1e-6;

/// Probe points per axis for sup-norm checks on the unit cube.
const PROBES: usize = 9;

/// Jacobians below this magnitude are treated as having underflowed.
const TINY_JAC: f64 = 1e-300;

/// `ln |Jac F(w)|`.
pub fn log_jac(map: &HenonMap3D, w: [f64; 3]) -> Result<f64> {
    let j = map.jac_det(w).abs();
    if !(j > 0.0) || !j.is_finite() {
        return Err(Error::SingularJacobian { point: w.to_vec() });
    }
    Ok(j.ln())
}

/// `b_F`: the exponential of the mean of `ln |Jac F|` over one Cantor-set
/// sample per level-`n` piece of the base map.
pub fn average_jacobian(tower: &RenormTower, n: usize) -> Result<f64> {
    let map = &tower.maps[0];
    let samples = level_samples(tower, n)?;
    let mut sum = 0.0;
    for &p in &samples {
        sum += log_jac(map, p)?;
    }
    Ok((sum / samples.len() as f64).exp())
}

/// Birkhoff average of `ln |Jac F|` along `steps` iterates from `start`,
/// exponentiated.
pub fn birkhoff_jacobian(map: &HenonMap3D, start: [f64; 3], steps: usize) -> Result<f64> {
    let mut p = start;
    let mut sum = 0.0;
    for _ in 0..steps {
        sum += log_jac(map, p)?;
        p = map.apply(p);
    }
    Ok((sum / steps as f64).exp())
}

/// Least-squares slope and intercept of `ys` against `xs`.
fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Fit of `E_n ≤ C ρⁿ` for the universal Jacobian law.
#[derive(Clone, Debug, Serialize)]
pub struct JacobianFit {
    /// Average Jacobian of the base map.
    #[serde(serialize_with = "crate::io::ser_f64")]
    pub b: f64,
    pub route: JacobianRoute,
    /// Fitted decay rate.
    #[serde(serialize_with = "crate::io::ser_f64")]
    pub rho: f64,
    #[serde(serialize_with = "crate::io::ser_f64")]
    pub prefactor: f64,
    pub levels: Vec<usize>,
    /// `E_n` for every fitted level.
    #[serde(rename = "E", serialize_with = "crate::io::ser_vec")]
    pub residuals: Vec<f64>,
    /// Levels left out because `Jac F_n` underflowed or the fields froze.
    pub excluded: Vec<usize>,
}

impl JacobianFit {
    pub fn strictly_decreasing(&self) -> bool {
        self.residuals.windows(2).all(|w| w[1] < w[0])
    }
}

/// How `Jac F_n` is evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum JacobianRoute {
    /// `ε_y δ_z − ε_z δ_y` from the fields of `F_n`. Exact for toy models; for
    /// other maps the two products cancel to far below their size and the
    /// result loses all digits after a few levels.
    Fields,
    /// `Jac F^(2ⁿ)(Ψ w) · Jac Ψ(w) / Jac Ψ(F_n w)` with `Ψ = Ψⁿ_(vⁿ)`, the
    /// product taken in log space along the orbit of the base map.
    Conjugacy,
}

/// `ln |Jac F_n(w)|` by the chosen route.
pub fn log_jac_renormalized(
    tower: &RenormTower,
    n: usize,
    w: [f64; 3],
    route: JacobianRoute,
) -> Result<f64> {
    let map_n = tower.maps.get(n).ok_or(Error::TowerTooShallow {
        needed: n,
        have: tower.depth(),
    })?;
    match route {
        JacobianRoute::Fields => {
            let j = map_n.jac_det(w).abs();
            if !(j > TINY_JAC) {
                return Err(Error::UnderflowFrozen { level: n });
            }
            Ok(j.ln())
        }
        JacobianRoute::Conjugacy => {
            let word = Word::repeated(Letter::V, n);
            let h = DIFF_STEP * STANDING_BOX.diagonal();
            let det = |u: [f64; 3]| -> Result<f64> {
                let d = psi_word_jacobian(tower, &word, u, h)?.determinant().abs();
                if !(d > 0.0) {
                    return Err(Error::DegenerateDerivative { level: n });
                }
                Ok(d.ln())
            };
            let base = log_jac_power(&tower.maps[0], psi_word(tower, &word, w)?, 1 << n)?;
            Ok(base + det(w)? - det(map_n.apply(w))?)
        }
    }
}

/// `E_n = max |Jac F_n(w) / (b^(2ⁿ) a(x)) − 1|` over a probe grid of `I³`.
pub fn universality_residual(
    tower: &RenormTower,
    n: usize,
    log_b: f64,
    a: &ScalarField1D,
    route: JacobianRoute,
) -> Result<f64> {
    let scale = 2f64.powi(n as i32) * log_b;
    let mut worst: f64 = 0.0;
    for w in Box3::cube(1.0).grid(PROBES) {
        let lj = log_jac_renormalized(tower, n, w, route)?;
        let ax = a.eval(w[0]);
        if !(ax > 0.0) {
            return Err(Error::DomainError(format!(
                "a({}) = {ax} is not positive",
                w[0]
            )));
        }
        worst = worst.max((lj - scale - ax.ln()).exp_m1().abs());
    }
    Ok(worst)
}

/// Computes `E_n` on `levels` and fits `E_n ≈ C ρⁿ`. `b` is the average
/// Jacobian at the deepest level of the tower.
pub fn jacobian_universality_fit(
    tower: &RenormTower,
    a: &ScalarField1D,
    levels: &[usize],
    route: JacobianRoute,
) -> Result<JacobianFit> {
    let b = average_jacobian(tower, tower.depth())?;
    let log_b = b.ln();
    let mut used = Vec::new();
    let mut residuals = Vec::new();
    let mut excluded = Vec::new();
    for &n in levels {
        match universality_residual(tower, n, log_b, a, route) {
            Ok(e) => {
                used.push(n);
                residuals.push(e);
            }
            Err(Error::UnderflowFrozen { .. }) => excluded.push(n),
            Err(e) => return Err(e),
        }
    }
    if used.len() < 3 {
        return Err(Error::Invalid(format!(
            "need at least three levels for the fit, have {}",
            used.len()
        )));
    }
    let xs: Vec<f64> = used.iter().map(|&n| n as f64).collect();
    let ys: Vec<f64> = residuals
        .iter()
        .map(|e| e.max(f64::MIN_POSITIVE).ln())
        .collect();
    let (slope, icpt) = linear_fit(&xs, &ys);
    Ok(JacobianFit {
        b,
        route,
        rho: slope.exp(),
        prefactor: icpt.exp(),
        levels: used,
        residuals,
        excluded,
    })
}

/// `ln |Jac F^N(w)|` as a sum along the orbit.
pub fn log_jac_power(map: &HenonMap3D, w: [f64; 3], n_steps: usize) -> Result<f64> {
    let mut p = w;
    let mut sum = 0.0;
    for _ in 0..n_steps {
        sum += log_jac(map, p)?;
        p = map.apply(p);
    }
    Ok(sum)
}

/// Per-level report of `Jac F^(2ⁿ) ≈ b^(2ⁿ)` over the pieces.
#[derive(Clone, Debug, Serialize)]
pub struct PowerLawReport {
    pub level: usize,
    #[serde(serialize_with = "crate::io::ser_f64")]
    pub b: f64,
    /// `max |Jac F^(2ⁿ)(sample) / b^(2ⁿ) − 1|` over the pieces.
    #[serde(serialize_with = "crate::io::ser_f64")]
    pub worst_deviation: f64,
    pub worst_word: String,
    /// Largest `|ln Jac F^(2ⁿ)(y) − ln Jac F^(2ⁿ)(z)|` between two points of
    /// one piece.
    #[serde(serialize_with = "crate::io::ser_f64")]
    pub distortion: f64,
}

/// Checks the power law of the Jacobian on every level-`n` piece of the base map.
pub fn jac_power_law_check(tower: &RenormTower, n: usize) -> Result<PowerLawReport> {
    let map = &tower.maps[0];
    let b = average_jacobian(tower, tower.depth())?;
    let period = 1usize << n;
    let scale = period as f64 * b.ln();
    let pieces = build_pieces(tower, n)?;
    let mut report = PowerLawReport {
        level: n,
        b,
        worst_deviation: 0.0,
        worst_word: String::new(),
        distortion: 0.0,
    };
    for piece in &pieces {
        let at_sample = log_jac_power(map, piece.sample, period)?;
        let dev = (at_sample - scale).exp_m1().abs();
        if dev >= report.worst_deviation {
            report.worst_deviation = dev;
            report.worst_word = piece.word.to_string();
        }
        for corner in [piece.probes[0], piece.probes[piece.probes.len() - 1]] {
            let d = (log_jac_power(map, corner, period)? - at_sample).abs();
            report.distortion = report.distortion.max(d);
        }
    }
    Ok(report)
}

/// `ψ^(k+1)_v ∘ ⋯ ∘ ψⁿ_v(u)`, from the coordinates of `F_n` to those of `F_k`.
fn psi_v_chain(tower: &RenormTower, k: usize, n: usize, u: [f64; 3]) -> Result<[f64; 3]> {
    let mut p = u;
    for j in (k + 1..=n).rev() {
        p = tower.steps[j - 1].psi_v(p)?;
    }
    Ok(p)
}

/// Translated branch composition `Ψⁿ_k(w) = ψ^(k+1)_v ∘ ⋯ ∘ ψⁿ_v(w + τ_n) − τ_k`,
/// which fixes the origin.
struct TipChain<'a> {
    tower: &'a RenormTower,
    tips: Vec<[f64; 3]>,
    k: usize,
    n: usize,
}

impl<'a> TipChain<'a> {
    fn new(tower: &'a RenormTower, k: usize, n: usize) -> Result<Self> {
        if n > tower.depth() || k > n {
            return Err(Error::TowerTooShallow {
                needed: n,
                have: tower.depth(),
            });
        }
        Ok(Self {
            tower,
            tips: tip_seeds(tower)?,
            k,
            n,
        })
    }

    fn eval(&self, w: [f64; 3]) -> Result<[f64; 3]> {
        let t = self.tips[self.n];
        let p = psi_v_chain(
            self.tower,
            self.k,
            self.n,
            [w[0] + t[0], w[1] + t[1], w[2] + t[2]],
        )?;
        let s = self.tips[self.k];
        Ok([p[0] - s[0], p[1] - s[1], p[2] - s[2]])
    }

    fn jacobian(&self, w: [f64; 3]) -> Result<Matrix3<f64>> {
        let h = DIFF_STEP * STANDING_BOX.diagonal();
        let mut m = Matrix3::zeros();
        for j in 0..3 {
            let mut up = w;
            let mut dn = w;
            up[j] += h;
            dn[j] -= h;
            let a = self.eval(up)?;
            let b = self.eval(dn)?;
            for i in 0..3 {
                m[(i, j)] = (a[i] - b[i]) / (2.0 * h);
            }
        }
        Ok(m)
    }

    /// The box `B − τ_n` on which the chain is defined.
    fn domain(&self) -> Box3 {
        let t = self.tips[self.n];
        let mut b = STANDING_BOX;
        for a in 0..3 {
            b.axes[a] = Interval {
                lo: b.axes[a].lo - t[a],
                hi: b.axes[a].hi - t[a],
            };
        }
        b
    }
}

/// Factors of `D_k = DΨ_k(0)` as a unipotent matrix times `diag(α, σ, σ)`.
#[derive(Clone, Debug, Serialize)]
pub struct TipLevel {
    pub k: usize,
    #[serde(serialize_with = "crate::io::ser_f64")]
    pub alpha: f64,
    #[serde(serialize_with = "crate::io::ser_f64")]
    pub sigma: f64,
    #[serde(serialize_with = "crate::io::ser_f64")]
    pub t: f64,
    #[serde(serialize_with = "crate::io::ser_f64")]
    pub u: f64,
    #[serde(serialize_with = "crate::io::ser_f64")]
    pub d: f64,
    /// Max-norm distance between the reassembled factors and `D_k`.
    #[serde(serialize_with = "crate::io::ser_f64")]
    pub reassembly_error: f64,
}

impl TipLevel {
    /// `[[1, t, u], [0, 1, 0], [0, d, 1]] · diag(α, σ, σ)`.
    pub fn assemble(&self) -> Matrix3<f64> {
        let unipotent = Matrix3::new(1.0, self.t, self.u, 0.0, 1.0, 0.0, 0.0, self.d, 1.0);
        unipotent
            * Matrix3::from_diagonal(&nalgebra::Vector3::new(self.alpha, self.sigma, self.sigma))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TipDerivativeDecomposition {
    pub levels: Vec<TipLevel>,
}

/// Differentiates the translated branch `Ψ_k` at the origin for
/// `k = 0, …, k_max` and factors the derivative.
pub fn tip_decomposition(tower: &RenormTower, k_max: usize) -> Result<TipDerivativeDecomposition> {
    let mut levels = Vec::with_capacity(k_max + 1);
    for k in 0..=k_max {
        let chain = TipChain::new(tower, k, k + 1)?;
        let dk = chain.jacobian([0.0; 3])?;
        let sigma = dk[(1, 1)];
        if sigma == 0.0 || !sigma.is_finite() {
            return Err(Error::DegenerateDerivative { level: k });
        }
        let mut level = TipLevel {
            k,
            alpha: dk[(0, 0)],
            sigma,
            t: dk[(0, 1)] / sigma,
            u: dk[(0, 2)] / sigma,
            d: dk[(2, 1)] / sigma,
            reassembly_error: 0.0,
        };
        level.reassembly_error = (level.assemble() - dk).amax();
        levels.push(level);
    }
    Ok(TipDerivativeDecomposition { levels })
}

/// Nonlinear part of `Ψⁿ_k = Dⁿ_k ∘ (id + Sⁿ_k)` against its universal limit.
#[derive(Clone, Debug, Serialize)]
pub struct NonlinearityReport {
    pub n: usize,
    pub k: usize,
    /// `a_{F,1..3}` of the fit `x + S_x ≈ v*(x) + a₁y² + a₂yz + a₃z²`, made on
    /// `x + S_x(x, y, z) − (x + S_x(x, 0, 0))`.
    #[serde(serialize_with = "crate::io::ser_arr3")]
    pub coeffs: [f64; 3],
    /// Sup of the fit residual on the probe grid.
    #[serde(serialize_with = "crate::io::ser_f64")]
    pub residual: f64,
    /// Sup of `|x + S_x(x, 0, 0) − v*(x)|` on the `x`-axis.
    #[serde(serialize_with = "crate::io::ser_f64")]
    pub axis_residual: f64,
    /// Sup of `|1 + ∂_x S_x − v*'|`.
    #[serde(serialize_with = "crate::io::ser_f64")]
    pub derivative_gap: f64,
    /// Sup of `|S_z|`, the third-coordinate part.
    #[serde(serialize_with = "crate::io::ser_f64")]
    pub third_component: f64,
    /// Box of translated coordinates the fit was made on.
    pub fit_box: Box3,
    /// Diameter of the image of the fit box, a piece of level `n − k`.
    #[serde(serialize_with = "crate::io::ser_f64")]
    pub piece_diameter: f64,
}

/// Compares the nonlinear part of `Ψⁿ_k` with `v*` on a probe grid of the
/// translated standing box, with `x` limited to the domain of `v*`.
pub fn nonlinearity_asymptotics(
    tower: &RenormTower,
    vstar: &ScalarField1D,
    n: usize,
    k: usize,
) -> Result<NonlinearityReport> {
    let chain = TipChain::new(tower, k, n)?;
    let d = chain.jacobian([0.0; 3])?;
    let d_inv = d
        .try_inverse()
        .ok_or(Error::DegenerateDerivative { level: k })?;
    let mut fit_box = chain.domain();
    let vx = vstar.domain();
    fit_box.axes[0] = Interval {
        lo: fit_box.axes[0].lo.max(vx.lo),
        hi: fit_box.axes[0].hi.min(vx.hi),
    };
    let grid = fit_box.grid(PROBES);
    let dv = vstar.derivative();
    let h = DIFF_STEP * STANDING_BOX.diagonal();
    let normal = |w: [f64; 3]| -> Result<nalgebra::Vector3<f64>> {
        Ok(d_inv * nalgebra::Vector3::from(chain.eval(w)?))
    };
    let mut rows = Vec::with_capacity(grid.len());
    let mut rhs = Vec::with_capacity(grid.len());
    let mut derivative_gap: f64 = 0.0;
    let mut third_component: f64 = 0.0;
    let mut images = Vec::with_capacity(grid.len());
    for &w in &grid {
        let p = normal(w)?;
        images.push(chain.eval(w)?);
        rows.push([w[1] * w[1], w[1] * w[2], w[2] * w[2]]);
        rhs.push(p[0] - vstar.eval(w[0]));
        third_component = third_component.max((p[2] - w[2]).abs());
        let xl = (w[0] - h).max(fit_box.axes[0].lo);
        let xr = (w[0] + h).min(fit_box.axes[0].hi);
        let dx = (normal([xr, w[1], w[2]])?[0] - normal([xl, w[1], w[2]])?[0]) / (xr - xl);
        derivative_gap = derivative_gap.max((dx - dv.eval(w[0])).abs());
    }
    let mut axis_residual: f64 = 0.0;
    for x in fit_box.axes[0].grid(4 * PROBES) {
        axis_residual = axis_residual.max((normal([x, 0.0, 0.0])?[0] - vstar.eval(x)).abs());
    }
    // The quadratic form is fitted to the part that vanishes on the x-axis, so
    // that an x-dependent residual does not leak into its coefficients.
    let mut off_axis = Vec::with_capacity(grid.len());
    for (&w, r) in grid.iter().zip(&rhs) {
        off_axis.push(r - (normal([w[0], 0.0, 0.0])?[0] - vstar.eval(w[0])));
    }
    let a = DMatrix::from_fn(rows.len(), 3, |i, j| rows[i][j]);
    let b = DVector::from_vec(off_axis);
    let sol = a
        .clone()
        .svd(true, true)
        .solve(&b, 1e-14)
        .map_err(|e| Error::Invalid(e.to_string()))?;
    let fitted = &a * &sol;
    let residual = (0..rhs.len())
        .map(|i| (rhs[i] - fitted[i]).abs())
        .fold(0.0, f64::max);
    Ok(NonlinearityReport {
        n,
        k,
        coeffs: [sol[0], sol[1], sol[2]],
        residual,
        axis_residual,
        derivative_gap,
        third_component,
        fit_box,
        piece_diameter: Box3::enclosing(&images)?.diagonal(),
    })
}

/// Lyapunov exponents along an orbit, largest first.
#[derive(Clone, Debug, Serialize)]
pub struct LyapunovEstimate {
    #[serde(serialize_with = "crate::io::ser_arr3")]
    pub chi: [f64; 3],
    /// `3 · spread / √steps`, where the spread is the standard deviation of
    /// the one-step log-stretch factors.
    #[serde(serialize_with = "crate::io::ser_arr3")]
    pub errors: [f64; 3],
    /// `ln b` from the Birkhoff average of `ln |Jac F|` on the same orbit.
    #[serde(serialize_with = "crate::io::ser_f64")]
    pub log_b: f64,
    pub steps: usize,
}

impl LyapunovEstimate {
    /// `χ₁ + χ₂ − ln b`.
    pub fn sum_gap(&self) -> f64 {
        self.chi[1] + self.chi[2] - self.log_b
    }
}

/// QR extraction of the exponents along `steps` iterates of `map` from `start`
/// (normally the tip).
pub fn lyapunov_exponents(
    map: &HenonMap3D,
    start: [f64; 3],
    steps: usize,
) -> Result<LyapunovEstimate> {
    if steps == 0 {
        return Err(Error::Invalid("need at least one step".into()));
    }
    let mut q = Matrix3::<f64>::identity();
    let mut p = start;
    let mut sums = [0.0; 3];
    let mut squares = [0.0; 3];
    let mut log_jac_sum = 0.0;
    for _ in 0..steps {
        log_jac_sum += log_jac(map, p)?;
        let m = map.jacobian(p) * q;
        let qr = m.qr();
        let r = qr.r();
        q = qr.q();
        for i in 0..3 {
            let l = r[(i, i)].abs().ln();
            if !l.is_finite() {
                return Err(Error::SingularJacobian { point: p.to_vec() });
            }
            sums[i] += l;
            squares[i] += l * l;
        }
        p = map.apply(p);
    }
    let n = steps as f64;
    let mut chi = [0.0; 3];
    let mut errors = [0.0; 3];
    for i in 0..3 {
        chi[i] = sums[i] / n;
        let var = (squares[i] / n - chi[i] * chi[i]).max(0.0);
        errors[i] = 3.0 * var.sqrt() / n.sqrt();
    }
    Ok(LyapunovEstimate {
        chi,
        errors,
        log_b: log_jac_sum / n,
        steps,
    })
}
