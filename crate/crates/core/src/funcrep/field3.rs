use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cheb;
use super::domain::{Box3, Interval};
use super::field1::TAIL_TOL;
use crate::error::{Error, Result};

/// Largest degree per axis; keeps the evaluation scratch on the stack.
pub const MAX_DEGREE_3D: usize = 95;
const SCRATCH: usize = MAX_DEGREE_3D + 1;

/// A smooth function on a box held as a tensor Chebyshev interpolant.
///
/// Coefficients are stored row-major with `x` slowest: index `(i * ny + j) * nz + k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalarField3D {
    domain: Box3,
    degrees: [usize; 3],
    #[serde(serialize_with = "crate::io::ser_vec")]
    coeffs: Vec<f64>,
}

/// Lobatto-to-coefficient matrix for one axis (row `k`, column `j`).
fn dct_matrix(d: usize) -> Vec<f64> {
    let n = d + 1;
    let mut m = vec![0.0; n * n];
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        let c = cheb::values_to_coeffs(&e);
        for k in 0..n {
            m[k * n + j] = c[k];
        }
    }
    m
}

/// Applies `n_out x n_in` matrices along each axis of a row-major tensor.
fn tensor_apply(
    data: &[f64],
    dims: [usize; 3],
    mats: [&[f64]; 3],
    out_dims: [usize; 3],
) -> Vec<f64> {
    let [nx, ny, nz] = dims;
    let [px, py, pz] = out_dims;
    // Along z.
    let mut a1 = vec![0.0; nx * ny * pz];
    for ij in 0..nx * ny {
        let src = &data[ij * nz..(ij + 1) * nz];
        let dst = &mut a1[ij * pz..(ij + 1) * pz];
        for (r, o) in dst.iter_mut().enumerate() {
            let row = &mats[2][r * nz..(r + 1) * nz];
            *o = row.iter().zip(src).map(|(a, b)| a * b).sum();
        }
    }
    // Along y.
    let mut a2 = vec![0.0; nx * py * pz];
    for i in 0..nx {
        for r in 0..py {
            let row = &mats[1][r * ny..(r + 1) * ny];
            let dst = &mut a2[(i * py + r) * pz..(i * py + r + 1) * pz];
            for (j, w) in row.iter().enumerate() {
                if *w == 0.0 {
                    continue;
                }
                let src = &a1[(i * ny + j) * pz..(i * ny + j + 1) * pz];
                for (o, s) in dst.iter_mut().zip(src) {
                    *o += w * s;
                }
            }
        }
    }
    // Along x.
    let mut out = vec![0.0; px * py * pz];
    let plane = py * pz;
    for r in 0..px {
        let row = &mats[0][r * nx..(r + 1) * nx];
        let dst = &mut out[r * plane..(r + 1) * plane];
        for (i, w) in row.iter().enumerate() {
            if *w == 0.0 {
                continue;
            }
            let src = &a2[i * plane..(i + 1) * plane];
            for (o, s) in dst.iter_mut().zip(src) {
                *o += w * s;
            }
        }
    }
    out
}

fn basis_matrix(domain: &Interval, n: usize, points: &[f64]) -> Vec<f64> {
    let mut m = vec![0.0; points.len() * n];
    for (r, &x) in points.iter().enumerate() {
        cheb::basis_values(domain.to_unit(x), &mut m[r * n..(r + 1) * n]);
    }
    m
}

fn probe_axis(i: &Interval, d: usize) -> Vec<f64> {
    let m = (d / 2 + 2).max(3);
    (0..m)
        .map(|j| i.lo + i.len() * (j as f64 + 0.37) / m as f64)
        .collect()
}

impl ScalarField3D {
    pub fn from_coeffs(domain: Box3, degrees: [usize; 3], coeffs: Vec<f64>) -> Result<Self> {
        let n: usize = degrees.iter().map(|d| d + 1).product();
        if coeffs.len() != n {
            return Err(Error::Invalid(format!(
                "expected {n} coefficients for degrees {degrees:?}, got {}",
                coeffs.len()
            )));
        }
        if degrees.iter().any(|&d| d > MAX_DEGREE_3D) {
            return Err(Error::Invalid(format!("degree above {MAX_DEGREE_3D}")));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::Invalid("non-finite coefficient".into()));
        }
        Ok(Self {
            domain,
            degrees,
            coeffs,
        })
    }

    pub fn constant(domain: Box3, value: f64) -> Self {
        Self {
            domain,
            degrees: [0, 0, 0],
            coeffs: vec![value],
        }
    }

    pub fn zero(domain: Box3) -> Self {
        Self::constant(domain, 0.0)
    }

    /// Interpolates at the tensor Lobatto nodes without a resolution check.
    pub fn fit(
        sampler: impl Fn([f64; 3]) -> f64 + Sync,
        domain: Box3,
        degrees: [usize; 3],
    ) -> Result<Self> {
        let vals = Self::sample_nodes(&|p| Ok(sampler(p)), &domain, degrees)?;
        Ok(Self::from_node_values(domain, degrees, &vals))
    }

    /// Interpolates and verifies on off-node probes at the default tolerance.
    pub fn interpolate(
        sampler: impl Fn([f64; 3]) -> f64 + Sync,
        domain: Box3,
        degrees: [usize; 3],
    ) -> Result<Self> {
        Self::try_interpolate(|p| Ok(sampler(p)), domain, degrees, TAIL_TOL)
    }

    /// Interpolates a fallible sampler; the off-node error must stay below
    /// `tol` times the largest sampled magnitude.
    pub fn try_interpolate(
        sampler: impl Fn([f64; 3]) -> Result<f64> + Sync,
        domain: Box3,
        degrees: [usize; 3],
        tol: f64,
    ) -> Result<Self> {
        let (field, err) = Self::fit_and_probe(&sampler, domain, degrees)?;
        if !err.is_finite() || err > tol {
            return Err(Error::NotResolved {
                degrees: degrees.to_vec(),
                error: err,
                tol,
            });
        }
        Ok(field)
    }

    /// Retries [`Self::try_interpolate`] until resolved or `max_degrees` is
    /// reached. Each retry raises by half the degrees of the axes whose trailing
    /// coefficients are not below `tol`, or every degree when none is flagged.
    pub fn interpolate_adaptive(
        sampler: impl Fn([f64; 3]) -> Result<f64> + Sync,
        domain: Box3,
        degrees: [usize; 3],
        max_degrees: [usize; 3],
        tol: f64,
    ) -> Result<Self> {
        let mut d = degrees;
        loop {
            if d.iter().any(|&k| k > MAX_DEGREE_3D) {
                return Err(Error::Invalid(format!("degree above {MAX_DEGREE_3D}")));
            }
            let (field, err) = Self::fit_and_probe(&sampler, domain, d)?;
            if err.is_finite() && err <= tol {
                return Ok(field);
            }
            let open: Vec<usize> = (0..3).filter(|&a| d[a] < max_degrees[a]).collect();
            if open.is_empty() {
                return Err(Error::NotResolved {
                    degrees: d.to_vec(),
                    error: err,
                    tol,
                });
            }
            let tails = field.axis_tails();
            let mut flagged: Vec<usize> =
                open.iter().copied().filter(|&a| tails[a] > tol).collect();
            if flagged.is_empty() {
                flagged = open;
            }
            for a in flagged {
                d[a] = (d[a] + d[a].div_ceil(2).max(2)).min(max_degrees[a]);
            }
        }
    }

    /// Relative size of the trailing two coefficient slices along each axis.
    fn axis_tails(&self) -> [f64; 3] {
        let scale = self.max_abs_coeff();
        if scale == 0.0 {
            return [0.0; 3];
        }
        let [nx, ny, nz] = self.degrees.map(|d| d + 1);
        let mut tails = [0.0f64; 3];
        for i in 0..nx {
            for j in 0..ny {
                for k in 0..nz {
                    let c = self.coeffs[(i * ny + j) * nz + k].abs();
                    for (a, (idx, n)) in [(i, nx), (j, ny), (k, nz)].into_iter().enumerate() {
                        if n > 2 && idx + 2 >= n {
                            tails[a] = tails[a].max(c);
                        }
                    }
                }
            }
        }
        tails.map(|t| t / scale)
    }

    /// Fits at the nodes and returns the relative off-node error.
    fn fit_and_probe(
        sampler: &(impl Fn([f64; 3]) -> Result<f64> + Sync),
        domain: Box3,
        degrees: [usize; 3],
    ) -> Result<(Self, f64)> {
        if degrees.iter().any(|&d| d > MAX_DEGREE_3D) {
            return Err(Error::Invalid(format!("degree above {MAX_DEGREE_3D}")));
        }
        let vals = Self::sample_nodes(sampler, &domain, degrees)?;
        let field = Self::from_node_values(domain, degrees, &vals);
        let axes: Vec<Vec<f64>> = (0..3)
            .map(|a| probe_axis(&domain.axes[a], degrees[a]))
            .collect();
        let mut probes = Vec::with_capacity(axes[0].len() * axes[1].len() * axes[2].len());
        for &x in &axes[0] {
            for &y in &axes[1] {
                for &z in &axes[2] {
                    probes.push([x, y, z]);
                }
            }
        }
        let exact = probes
            .par_iter()
            .map(|&p| sampler(p))
            .collect::<Result<Vec<f64>>>()?;
        let approx = field.eval_grid(&axes[0], &axes[1], &axes[2]);
        let scale = vals
            .iter()
            .chain(&exact)
            .fold(0.0f64, |m, v| m.max(v.abs()));
        let err = exact
            .iter()
            .zip(&approx)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        let rel = if scale > 0.0 { err / scale } else { err };
        Ok((field, rel))
    }

    fn sample_nodes(
        sampler: &(impl Fn([f64; 3]) -> Result<f64> + Sync),
        domain: &Box3,
        degrees: [usize; 3],
    ) -> Result<Vec<f64>> {
        let nodes: Vec<Vec<f64>> = (0..3)
            .map(|a| {
                cheb::lobatto_nodes(degrees[a])
                    .into_iter()
                    .map(|t| domain.axes[a].from_unit(t))
                    .collect()
            })
            .collect();
        let [nx, ny, nz] = [nodes[0].len(), nodes[1].len(), nodes[2].len()];
        let vals = (0..nx * ny * nz)
            .into_par_iter()
            .map(|idx| {
                let (i, j, k) = (idx / (ny * nz), (idx / nz) % ny, idx % nz);
                sampler([nodes[0][i], nodes[1][j], nodes[2][k]])
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(bad) = vals.iter().position(|v| !v.is_finite()) {
            return Err(Error::DomainError(format!(
                "sampler returned a non-finite value at node {bad}"
            )));
        }
        Ok(vals)
    }

    fn from_node_values(domain: Box3, degrees: [usize; 3], vals: &[f64]) -> Self {
        let dims = degrees.map(|d| d + 1);
        let mx = dct_matrix(degrees[0]);
        let my = dct_matrix(degrees[1]);
        let mz = dct_matrix(degrees[2]);
        let coeffs = tensor_apply(vals, dims, [&mx, &my, &mz], dims);
        Self {
            domain,
            degrees,
            coeffs,
        }
    }

    pub fn domain(&self) -> Box3 {
        self.domain
    }

    pub fn degrees(&self) -> [usize; 3] {
        self.degrees
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == 0.0)
    }

    /// Evaluates anywhere; outside the domain this is the polynomial extension.
    #[inline]
    pub fn eval(&self, p: [f64; 3]) -> f64 {
        if self.coeffs.len() == 1 {
            return self.coeffs[0];
        }
        let t = self.domain.to_unit(p);
        let [nx, ny, nz] = self.degrees.map(|d| d + 1);
        let mut bx = [0.0; SCRATCH];
        let mut by = [0.0; SCRATCH];
        let mut bz = [0.0; SCRATCH];
        cheb::basis_values(t[0], &mut bx[..nx]);
        cheb::basis_values(t[1], &mut by[..ny]);
        cheb::basis_values(t[2], &mut bz[..nz]);
        let mut total = 0.0;
        for i in 0..nx {
            let mut sy = 0.0;
            for j in 0..ny {
                let row = &self.coeffs[(i * ny + j) * nz..(i * ny + j + 1) * nz];
                let sz: f64 = row.iter().zip(&bz[..nz]).map(|(c, b)| c * b).sum();
                sy += by[j] * sz;
            }
            total += bx[i] * sy;
        }
        total
    }

    /// Evaluates with a domain check.
    pub fn eval_checked(&self, p: [f64; 3]) -> Result<f64> {
        let slack = 1e-12 * self.domain.diagonal();
        if self.domain.contains_with(p, slack) {
            Ok(self.eval(p))
        } else {
            Err(Error::OutOfDomain { point: p.to_vec() })
        }
    }

    /// Value and gradient.
    #[inline]
    pub fn eval_grad(&self, p: [f64; 3]) -> (f64, [f64; 3]) {
        if self.coeffs.len() == 1 {
            return (self.coeffs[0], [0.0; 3]);
        }
        let t = self.domain.to_unit(p);
        let [nx, ny, nz] = self.degrees.map(|d| d + 1);
        let mut bx = [0.0; SCRATCH];
        let mut by = [0.0; SCRATCH];
        let mut bz = [0.0; SCRATCH];
        let mut dx = [0.0; SCRATCH];
        let mut dy = [0.0; SCRATCH];
        let mut dz = [0.0; SCRATCH];
        cheb::basis(t[0], &mut bx[..nx], &mut dx[..nx]);
        cheb::basis(t[1], &mut by[..ny], &mut dy[..ny]);
        cheb::basis(t[2], &mut bz[..nz], &mut dz[..nz]);
        let (mut v, mut gx, mut gy, mut gz) = (0.0, 0.0, 0.0, 0.0);
        for i in 0..nx {
            let (mut sy, mut sdy, mut sdz) = (0.0, 0.0, 0.0);
            for j in 0..ny {
                let row = &self.coeffs[(i * ny + j) * nz..(i * ny + j + 1) * nz];
                let mut s = 0.0;
                let mut sd = 0.0;
                for k in 0..nz {
                    s += row[k] * bz[k];
                    sd += row[k] * dz[k];
                }
                sy += by[j] * s;
                sdy += dy[j] * s;
                sdz += by[j] * sd;
            }
            v += bx[i] * sy;
            gx += dx[i] * sy;
            gy += bx[i] * sdy;
            gz += bx[i] * sdz;
        }
        let sc = self.domain.axes.map(|i| 2.0 / i.len());
        (v, [gx * sc[0], gy * sc[1], gz * sc[2]])
    }

    /// Values on the tensor grid `xs × ys × zs`, row-major with `x` slowest.
    pub fn eval_grid(&self, xs: &[f64], ys: &[f64], zs: &[f64]) -> Vec<f64> {
        let dims = self.degrees.map(|d| d + 1);
        let mx = basis_matrix(&self.domain.axes[0], dims[0], xs);
        let my = basis_matrix(&self.domain.axes[1], dims[1], ys);
        let mz = basis_matrix(&self.domain.axes[2], dims[2], zs);
        tensor_apply(
            &self.coeffs,
            dims,
            [&mx, &my, &mz],
            [xs.len(), ys.len(), zs.len()],
        )
    }

    /// Partial derivative along `axis` (0, 1 or 2).
    pub fn derivative(&self, axis: usize) -> Self {
        assert!(axis < 3, "axis out of range");
        let dims = self.degrees.map(|d| d + 1);
        let mut new_deg = self.degrees;
        new_deg[axis] = self.degrees[axis].saturating_sub(1);
        let new_dims = new_deg.map(|d| d + 1);
        let scale = 2.0 / self.domain.axes[axis].len();
        let mut out = vec![0.0; new_dims.iter().product()];
        let idx = |d: [usize; 3], i: usize, j: usize, k: usize| (i * d[1] + j) * d[2] + k;
        let lines = |a: usize| (0..3).filter(move |&b| b != a);
        let others: Vec<usize> = lines(axis).collect();
        for u in 0..dims[others[0]] {
            for w in 0..dims[others[1]] {
                let line: Vec<f64> = (0..dims[axis])
                    .map(|m| {
                        let mut pos = [0; 3];
                        pos[axis] = m;
                        pos[others[0]] = u;
                        pos[others[1]] = w;
                        self.coeffs[idx(dims, pos[0], pos[1], pos[2])]
                    })
                    .collect();
                let d = cheb::deriv_coeffs(&line);
                for (m, v) in d.iter().enumerate().take(new_dims[axis]) {
                    let mut pos = [0; 3];
                    pos[axis] = m;
                    pos[others[0]] = u;
                    pos[others[1]] = w;
                    out[idx(new_dims, pos[0], pos[1], pos[2])] = v * scale;
                }
            }
        }
        Self {
            domain: self.domain,
            degrees: new_deg,
            coeffs: out,
        }
    }

    /// `a * self + b`.
    pub fn map_values(&self, a: f64, b: f64) -> Self {
        let mut coeffs: Vec<f64> = self.coeffs.iter().map(|c| a * c).collect();
        coeffs[0] += b;
        Self {
            domain: self.domain,
            degrees: self.degrees,
            coeffs,
        }
    }

    /// Relabels the domain: the result `g` satisfies `g(A(p)) = self(p)` for the
    /// axis-wise affine map `A` onto `target`, reversing the axes flagged in `reverse`.
    pub fn affine_rescale(&self, target: Box3, reverse: [bool; 3]) -> Self {
        let [_, ny, nz] = self.degrees.map(|d| d + 1);
        let mut coeffs = self.coeffs.clone();
        for (idx, c) in coeffs.iter_mut().enumerate() {
            let ijk = [idx / (ny * nz), (idx / nz) % ny, idx % nz];
            let flips = (0..3).filter(|&a| reverse[a] && ijk[a] % 2 == 1).count();
            if flips % 2 == 1 {
                *c = -*c;
            }
        }
        Self {
            domain: target,
            degrees: self.degrees,
            coeffs,
        }
    }

    fn probe_axes(&self) -> [Vec<f64>; 3] {
        [0, 1, 2].map(|a| self.domain.axes[a].grid(4 * (self.degrees[a] + 1) + 1))
    }

    pub fn c0_norm(&self) -> f64 {
        if self.coeffs.len() == 1 {
            return self.coeffs[0].abs();
        }
        let [xs, ys, zs] = self.probe_axes();
        self.eval_grid(&xs, &ys, &zs)
            .into_iter()
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Maximum over all partial derivatives of order at most `r` of the sup norm.
    pub fn cr_norm(&self, r: usize) -> f64 {
        let mut best = self.c0_norm();
        let mut layer = vec![(self.clone(), 0usize)];
        for _ in 0..r {
            let mut next = Vec::new();
            for (f, first) in &layer {
                // Only non-decreasing axis sequences, so each mixed partial appears once.
                for a in *first..3 {
                    let g = f.derivative(a);
                    best = best.max(g.c0_norm());
                    next.push((g, a));
                }
            }
            layer = next;
        }
        best
    }

    pub fn c1_norm(&self) -> f64 {
        self.cr_norm(1)
    }

    pub fn c2_norm(&self) -> f64 {
        self.cr_norm(2)
    }

    /// Largest absolute coefficient.
    /// Sets coefficients below `rel` times the largest one to zero, removing the
    /// rounding plateau of sampled data.
    pub fn chop(&mut self, rel: f64) {
        let cut = rel * self.max_abs_coeff();
        for c in &mut self.coeffs {
            if c.abs() < cut {
                *c = 0.0;
            }
        }
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }
}
