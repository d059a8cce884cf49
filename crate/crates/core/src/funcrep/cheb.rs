//! Chebyshev kernels on the reference interval `[-1, 1]`.

use std::f64::consts::PI;

/// Chebyshev–Lobatto points `cos(pi j / d)`, `j = 0..=d`. Degree 0 gives the single point 0.
pub fn lobatto_nodes(d: usize) -> Vec<f64> {
    if d == 0 {
        return vec![0.0];
    }
    (0..=d)
        .map(|j| {
            // Symmetric evaluation keeps the nodes exactly antisymmetric.
            let k = 2 * j;
            if k == d {
                0.0
            } else if k < d {
                (PI * j as f64 / d as f64).cos()
            } else {
                -(PI * (d - j) as f64 / d as f64).cos()
            }
        })
        .collect()
}

/// Chebyshev coefficients of the interpolant through values at the Lobatto nodes (DCT-I).
pub fn values_to_coeffs(vals: &[f64]) -> Vec<f64> {
    let n = vals.len();
    if n == 1 {
        return vec![vals[0]];
    }
    let d = n - 1;
    // cos(pi j k / d) only depends on (j k) mod 2d.
    let table: Vec<f64> = (0..2 * d)
        .map(|m| (PI * m as f64 / d as f64).cos())
        .collect();
    let mut c = vec![0.0; n];
    for (k, ck) in c.iter_mut().enumerate() {
        let mut s = 0.5 * (vals[0] + if k % 2 == 0 { vals[d] } else { -vals[d] });
        for (j, v) in vals.iter().enumerate().take(d).skip(1) {
            s += v * table[(j * k) % (2 * d)];
        }
        *ck = 2.0 * s / d as f64;
    }
    c[0] *= 0.5;
    c[d] *= 0.5;
    c
}

/// Clenshaw evaluation of `sum c_k T_k(t)`.
#[inline]
pub fn clenshaw(c: &[f64], t: f64) -> f64 {
    let mut b1 = 0.0;
    let mut b2 = 0.0;
    for &ck in c.iter().skip(1).rev() {
        let b0 = 2.0 * t * b1 - b2 + ck;
        b2 = b1;
        b1 = b0;
    }
    t * b1 - b2 + c.first().copied().unwrap_or(0.0)
}

/// Values `T_k(t)` and derivatives `T_k'(t)` for `k = 0..out_t.len()`.
#[inline]
pub fn basis(t: f64, out_t: &mut [f64], out_dt: &mut [f64]) {
    let n = out_t.len();
    if n == 0 {
        return;
    }
    out_t[0] = 1.0;
    out_dt[0] = 0.0;
    if n == 1 {
        return;
    }
    out_t[1] = t;
    out_dt[1] = 1.0;
    for k in 2..n {
        out_t[k] = 2.0 * t * out_t[k - 1] - out_t[k - 2];
        out_dt[k] = 2.0 * out_t[k - 1] + 2.0 * t * out_dt[k - 1] - out_dt[k - 2];
    }
}

/// Values `T_k(t)` only.
#[inline]
pub fn basis_values(t: f64, out_t: &mut [f64]) {
    let n = out_t.len();
    if n == 0 {
        return;
    }
    out_t[0] = 1.0;
    if n == 1 {
        return;
    }
    out_t[1] = t;
    for k in 2..n {
        out_t[k] = 2.0 * t * out_t[k - 1] - out_t[k - 2];
    }
}

/// Coefficients of the derivative with respect to `t`, one degree lower (at least one entry).
pub fn deriv_coeffs(c: &[f64]) -> Vec<f64> {
    let n = c.len();
    if n <= 1 {
        return vec![0.0];
    }
    let mut d = vec![0.0; n + 1];
    for k in (1..n).rev() {
        d[k - 1] = d[k + 1] + 2.0 * k as f64 * c[k];
    }
    d[0] *= 0.5;
    d.truncate(n - 1);
    d
}

/// Coefficients of an antiderivative with respect to `t` that vanishes at `t = -1`.
pub fn integ_coeffs(c: &[f64]) -> Vec<f64> {
    let n = c.len();
    let get = |k: usize| if k < n { c[k] } else { 0.0 };
    let mut out = vec![0.0; n + 1];
    for (k, ok) in out.iter_mut().enumerate().skip(1) {
        let prev = if k == 1 { 2.0 * get(0) } else { get(k - 1) };
        *ok = (prev - get(k + 1)) / (2.0 * k as f64);
    }
    // T_k(-1) = (-1)^k.
    let at_minus_one: f64 = out
        .iter()
        .enumerate()
        .map(|(k, v)| if k % 2 == 0 { *v } else { -*v })
        .sum();
    out[0] = -at_minus_one;
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn direct(c: &[f64], t: f64) -> f64 {
        let th = t.clamp(-1.0, 1.0).acos();
        c.iter()
            .enumerate()
            .map(|(k, v)| v * (k as f64 * th).cos())
            .sum()
    }

    #[test]
    fn transform_recovers_coefficients() {
        let c = [0.3, -1.2, 0.5, 0.25, -0.125, 0.01];
        let nodes = lobatto_nodes(c.len() - 1);
        let vals: Vec<f64> = nodes.iter().map(|&t| direct(&c, t)).collect();
        let back = values_to_coeffs(&vals);
        for (a, b) in c.iter().zip(&back) {
            assert!((a - b).abs() < 1e-14, "{a} vs {b}");
        }
    }

    #[test]
    fn clenshaw_matches_trig_definition() {
        let c = [1.0, 0.5, -0.25, 0.125, 2.0];
        for i in 0..=20 {
            let t = -1.0 + 0.1 * i as f64;
            assert!((clenshaw(&c, t) - direct(&c, t)).abs() < 1e-13);
        }
    }

    #[test]
    fn derivative_and_integral_are_inverse() {
        let c = [0.7, -0.3, 0.2, 0.05, -0.01];
        let i = integ_coeffs(&c);
        assert!(clenshaw(&i, -1.0).abs() < 1e-15);
        let back = deriv_coeffs(&i);
        for (a, b) in c.iter().zip(&back) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn derivative_of_t3() {
        // T_3 = 4t^3 - 3t, T_3' = 12t^2 - 3 = 3 T_0 + 6 T_2.
        let d = deriv_coeffs(&[0.0, 0.0, 0.0, 1.0]);
        assert_eq!(d, vec![3.0, 0.0, 6.0]);
    }

    #[test]
    fn basis_derivative_matches_coefficients() {
        let mut t = [0.0; 6];
        let mut dt = [0.0; 6];
        basis(0.37, &mut t, &mut dt);
        let e5 = [0.0, 0.0, 0.0, 0.0, 0.0, 1.0];
        assert!((dt[5] - clenshaw(&deriv_coeffs(&e5), 0.37)).abs() < 1e-13);
        assert!((t[5] - clenshaw(&e5, 0.37)).abs() < 1e-15);
    }
}
