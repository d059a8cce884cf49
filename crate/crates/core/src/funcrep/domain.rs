use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Closed interval `[lo, hi]` with `lo < hi`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    #[serde(serialize_with = "crate::io::ser_f64")]
    pub lo: f64,
    #[serde(serialize_with = "crate::io::ser_f64")]
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::DomainError(format!("invalid interval [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }

    /// Smallest interval containing both points, in either order.
    pub fn hull(a: f64, b: f64) -> Result<Self> {
        Self::new(a.min(b), a.max(b))
    }

    /// The interval `[-1, 1]`.
    pub const fn unit() -> Self {
        Self { lo: -1.0, hi: 1.0 }
    }

    pub const fn symmetric(r: f64) -> Self {
        Self { lo: -r, hi: r }
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn radius(&self) -> f64 {
        0.5 * (self.hi - self.lo)
    }

    /// Maps `x` in the interval to `t` in `[-1, 1]`.
    #[inline]
    pub fn to_unit(&self, x: f64) -> f64 {
        (2.0 * x - (self.lo + self.hi)) / (self.hi - self.lo)
    }

    /// Maps `t` in `[-1, 1]` to the interval.
    #[inline]
    pub fn from_unit(&self, t: f64) -> f64 {
        self.mid() + self.radius() * t
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    /// Membership with an absolute slack on both ends.
    pub fn contains_with(&self, x: f64, slack: f64) -> bool {
        x >= self.lo - slack && x <= self.hi + slack
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        other.lo >= self.lo && other.hi <= self.hi
    }

    /// True when `other` lies strictly inside.
    pub fn contains_interior(&self, other: &Interval) -> bool {
        other.lo > self.lo && other.hi < self.hi
    }

    pub fn intersects(&self, other: &Interval) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    /// Grows each end by `frac` of the length.
    pub fn padded(&self, frac: f64) -> Self {
        let p = frac * self.len();
        Self {
            lo: self.lo - p,
            hi: self.hi + p,
        }
    }

    /// `n >= 2` equispaced points including both endpoints.
    pub fn grid(&self, n: usize) -> Vec<f64> {
        let n = n.max(2);
        (0..n)
            .map(|i| self.lo + self.len() * i as f64 / (n - 1) as f64)
            .collect()
    }

    /// Smallest interval containing all the points.
    pub fn enclosing(points: impl IntoIterator<Item = f64>) -> Result<Self> {
        let (lo, hi) = points
            .into_iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| {
                (lo.min(x), hi.max(x))
            });
        Self::new(lo, hi)
    }
}

/// Axis-aligned box, the product of three intervals.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Box3 {
    pub axes: [Interval; 3],
}

impl Box3 {
    pub const fn new(x: Interval, y: Interval, z: Interval) -> Self {
        Self { axes: [x, y, z] }
    }

    /// The cube `[-r, r]^3`.
    pub const fn cube(r: f64) -> Self {
        let i = Interval::symmetric(r);
        Self { axes: [i, i, i] }
    }

    pub fn contains(&self, p: [f64; 3]) -> bool {
        (0..3).all(|a| self.axes[a].contains(p[a]))
    }

    pub fn contains_box(&self, other: &Box3) -> bool {
        (0..3).all(|a| self.axes[a].contains_interval(&other.axes[a]))
    }

    pub fn contains_with(&self, p: [f64; 3], slack: f64) -> bool {
        (0..3).all(|a| self.axes[a].contains_with(p[a], slack))
    }

    pub fn center(&self) -> [f64; 3] {
        [self.axes[0].mid(), self.axes[1].mid(), self.axes[2].mid()]
    }

    /// Euclidean length of the diagonal.
    pub fn diagonal(&self) -> f64 {
        self.axes
            .iter()
            .map(|i| i.len() * i.len())
            .sum::<f64>()
            .sqrt()
    }

    /// Maps a point of the box to `[-1, 1]^3`.
    #[inline]
    pub fn to_unit(&self, p: [f64; 3]) -> [f64; 3] {
        [
            self.axes[0].to_unit(p[0]),
            self.axes[1].to_unit(p[1]),
            self.axes[2].to_unit(p[2]),
        ]
    }

    #[inline]
    pub fn from_unit(&self, t: [f64; 3]) -> [f64; 3] {
        [
            self.axes[0].from_unit(t[0]),
            self.axes[1].from_unit(t[1]),
            self.axes[2].from_unit(t[2]),
        ]
    }

    /// Tensor grid with `n` equispaced points per axis.
    pub fn grid(&self, n: usize) -> Vec<[f64; 3]> {
        let gx = self.axes[0].grid(n);
        let gy = self.axes[1].grid(n);
        let gz = self.axes[2].grid(n);
        let mut out = Vec::with_capacity(gx.len() * gy.len() * gz.len());
        for &x in &gx {
            for &y in &gy {
                for &z in &gz {
                    out.push([x, y, z]);
                }
            }
        }
        out
    }

    /// Bounding box of a non-empty point cloud. Degenerate axes are widened by `1e-300`.
    pub fn enclosing(points: &[[f64; 3]]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::DomainError("empty point cloud".into()));
        }
        let mut axes = [Interval::unit(); 3];
        for (a, axis) in axes.iter_mut().enumerate() {
            let lo = points.iter().map(|p| p[a]).fold(f64::INFINITY, f64::min);
            let hi = points
                .iter()
                .map(|p| p[a])
                .fold(f64::NEG_INFINITY, f64::max);
            if !(lo.is_finite() && hi.is_finite()) {
                return Err(Error::DomainError("non-finite point in cloud".into()));
            }
            *axis = if hi > lo {
                Interval { lo, hi }
            } else {
                Interval {
                    lo: lo - 1e-300,
                    hi: hi + 1e-300,
                }
            };
        }
        Ok(Self { axes })
    }

    /// Distance from `p` to the box (zero inside).
    pub fn distance(&self, p: [f64; 3]) -> f64 {
        (0..3)
            .map(|a| {
                let i = self.axes[a];
                let d = (i.lo - p[a]).max(p[a] - i.hi).max(0.0);
                d * d
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Smallest box containing both boxes.
    pub fn union(&self, other: &Box3) -> Self {
        let mut axes = self.axes;
        for a in 0..3 {
            axes[a] = Interval {
                lo: self.axes[a].lo.min(other.axes[a].lo),
                hi: self.axes[a].hi.max(other.axes[a].hi),
            };
        }
        Self { axes }
    }

    pub fn intersects(&self, other: &Box3) -> bool {
        (0..3).all(|a| self.axes[a].intersects(&other.axes[a]))
    }
}
