use nalgebra::{Matrix3, Vector3};
use serde::Serialize;

use super::map::{fixed_point_seeds, HenonMap3D};
use crate::error::{Error, Result};

/// Period-doubling cascade of a one-parameter family of Hénon-like maps.
#[derive(Clone, Debug, Serialize)]
pub struct FeigenbaumLocation {
    /// Parameters where the orbit of period `2^(k-1)` flips, `k = 1, 2, …`.
    #[serde(serialize_with = "crate::io::ser_vec")]
    pub bifurcations: Vec<f64>,
    /// Ratios of consecutive gaps between bifurcations.
    #[serde(serialize_with = "crate::io::ser_vec")]
    pub ratios: Vec<f64>,
    /// Accumulation point extrapolated from the last two gaps.
    #[serde(serialize_with = "crate::io::ser_f64")]
    pub mu_inf: f64,
}

/// A periodic point found by single shooting, with the monodromy matrix.
#[derive(Clone, Debug)]
pub struct PeriodicPoint {
    pub point: [f64; 3],
    pub period: usize,
    pub monodromy: Matrix3<f64>,
}

fn monodromy(map: &HenonMap3D, w: [f64; 3], p: usize) -> ([f64; 3], Matrix3<f64>) {
    let mut m = Matrix3::identity();
    let mut x = w;
    for _ in 0..p {
        m = map.jacobian(x) * m;
        x = map.apply(x);
    }
    (x, m)
}

/// Newton's method on `F^p(w) = w` from `seed`.
pub fn periodic_point(map: &HenonMap3D, seed: [f64; 3], p: usize) -> Result<PeriodicPoint> {
    let mut w = Vector3::from(seed);
    let mut last = f64::INFINITY;
    for _ in 0..80 {
        let (img, m) = monodromy(map, [w[0], w[1], w[2]], p);
        let g = Vector3::from(img) - w;
        let res = g.amax();
        if !res.is_finite() {
            break;
        }
        // Rounding along long orbits floors the residual near p * 1e-16.
        if res < 1e-15 || (res >= 0.5 * last && res < 1e-9) {
            return Ok(PeriodicPoint {
                point: [w[0], w[1], w[2]],
                period: p,
                monodromy: m,
            });
        }
        last = res;
        let step =
            (m - Matrix3::identity())
                .lu()
                .solve(&g)
                .ok_or_else(|| Error::SingularJacobian {
                    point: vec![w[0], w[1], w[2]],
                })?;
        w -= step;
    }
    Err(Error::NoConvergence {
        iterations: 80,
        residual: last,
    })
}

/// Iterates of the map used to settle onto the attractor before Newton, per
/// unit of period.
const SETTLE: usize = 200;

/// `det(I + DF^p)` at the period-`p` orbit next to the attractor reached from
/// `seed`; it changes sign where the orbit has a multiplier `-1`. Settling on
/// the attractor first keeps Newton on the orbit being followed, also past the
/// flip where the attractor is the doubled orbit around it.
fn flip_indicator(map: &HenonMap3D, seed: [f64; 3], p: usize) -> Result<(f64, PeriodicPoint)> {
    let start = map.iterate(seed, SETTLE * p);
    let orbit = periodic_point(map, start, p)?;
    let d = (Matrix3::identity() + orbit.monodromy).determinant();
    Ok((d, orbit))
}

/// Bisects the flip parameter of the period-`p` orbit on `[lo, hi]`, where the
/// indicator is positive at `lo` and negative at `hi`.
fn bisect_flip(
    family: &dyn Fn(f64) -> HenonMap3D,
    mut lo: f64,
    mut hi: f64,
    mut seed: [f64; 3],
    p: usize,
) -> Result<(f64, [f64; 3])> {
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let (d, orbit) = flip_indicator(&family(mid), seed, p)?;
        seed = orbit.point;
        if d > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((0.5 * (lo + hi), seed))
}

/// Locates the accumulation of the period-doubling cascade of `family`.
///
/// The fixed point on the decreasing branch is followed from `mu_start`
/// until it flips. Each new orbit of period `2p` is found by iterating the map
/// midway towards the predicted next flip, where that orbit is strongly
/// attracting, and its own flip is then bracketed and bisected.
pub fn locate_feigenbaum(
    family: &dyn Fn(f64) -> HenonMap3D,
    mu_start: f64,
    k_max: usize,
) -> Result<FeigenbaumLocation> {
    if k_max < 3 {
        return Err(Error::Invalid("need at least three bifurcations".into()));
    }
    let seed_at = |mu: f64| -> Result<[f64; 3]> {
        let m = family(mu);
        let x = fixed_point_seeds(&m.f)?
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max);
        Ok([x, x, 0.0])
    };
    // First flip: scan upward for a sign change of the indicator.
    let step = 0.02;
    let mut mu = mu_start;
    let mut seed = seed_at(mu)?;
    let (d0, o0) = flip_indicator(&family(mu), seed, 1)?;
    if d0 <= 0.0 {
        return Err(Error::Invalid(format!(
            "fixed point already flipped at mu_start = {mu_start}"
        )));
    }
    seed = o0.point;
    let mut hi = None;
    for _ in 0..200 {
        let next = mu + step;
        let (d, o) = flip_indicator(&family(next), seed, 1)?;
        if d <= 0.0 {
            hi = Some(next);
            break;
        }
        mu = next;
        seed = o.point;
    }
    let hi = hi.ok_or_else(|| Error::NotFound("no flip of the fixed point".into()))?;
    let (mu1, w1) = bisect_flip(family, mu, hi, seed, 1)?;
    let mut bifurcations = vec![mu1];
    let mut orbit_point = w1;
    // The first gap of the quadratic family is 1/2.
    let mut gap = 0.5;
    let mut ratio: f64 = 1.0;
    for k in 2..=k_max {
        let p = 1usize << (k - 1);
        let prev = *bifurcations.last().expect("non-empty");
        let predicted = gap / ratio;
        let mid = prev + 0.5 * predicted;
        let mut w = orbit_point;
        w[0] += 1e-3 * predicted.sqrt().min(0.1);
        let (d_mid, start) = flip_indicator(&family(mid), w, p)?;
        if d_mid <= 0.0 {
            return Err(Error::NotFound(format!(
                "period-{p} orbit is not attracting at {mid}"
            )));
        }
        // Walk upward to bracket the flip, staying below the next flip, which
        // follows about a fifth of a gap later.
        let (mut lo, mut seed) = (mid, start.point);
        let mut hi = None;
        let mut probe = prev + 1.08 * predicted;
        for _ in 0..40 {
            let (d, o) = flip_indicator(&family(probe), seed, p)?;
            if d <= 0.0 {
                hi = Some(probe);
                break;
            }
            lo = probe;
            seed = o.point;
            probe = lo + 0.05 * predicted;
        }
        let hi = hi.ok_or_else(|| Error::NotFound(format!("no flip of period {p}")))?;
        let (mu_k, wk) = bisect_flip(family, lo, hi, seed, p)?;
        let new_gap = mu_k - prev;
        ratio = if bifurcations.len() >= 2 {
            gap / new_gap
        } else {
            4.0
        };
        gap = new_gap;
        bifurcations.push(mu_k);
        orbit_point = wk;
    }
    let n = bifurcations.len();
    let ratios: Vec<f64> = (2..n)
        .map(|i| {
            (bifurcations[i - 1] - bifurcations[i - 2]) / (bifurcations[i] - bifurcations[i - 1])
        })
        .collect();
    let last_ratio = *ratios.last().expect("k_max >= 3");
    let mu_inf =
        bifurcations[n - 1] + (bifurcations[n - 1] - bifurcations[n - 2]) / (last_ratio - 1.0);
    Ok(FeigenbaumLocation {
        bifurcations,
        ratios,
        mu_inf,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_quadratic_cascade() {
        let fam = |mu: f64| HenonMap3D::toy_affine(0.0, 0.0, mu);
        let loc = locate_feigenbaum(&fam, 0.3, 11).unwrap();
        // Oracle: the first two flips of 1 - mu x^2 are at 3/4 and 5/4.
        assert!((loc.bifurcations[0] - 0.75).abs() < 1e-12);
        assert!((loc.bifurcations[1] - 1.25).abs() < 1e-12);
        assert!(
            (loc.mu_inf - 1.401_155_189_092).abs() < 1e-9,
            "{}",
            loc.mu_inf
        );
        assert!((loc.ratios.last().unwrap() - 4.669).abs() < 0.01);
    }

    #[test]
    fn toy_cascade_accumulates_above_quadratic() {
        let fam = |mu: f64| HenonMap3D::toy_affine(0.1, 0.001, mu);
        let loc = locate_feigenbaum(&fam, 0.3, 12).unwrap();
        assert!(
            (loc.mu_inf - 1.561_509_064_467_65).abs() < 1e-9,
            "{}",
            loc.mu_inf
        );
        assert!((loc.ratios.last().unwrap() - 4.6692).abs() < 1e-3);
    }
}
