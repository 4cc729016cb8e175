//! Points, vectors and the axis-aligned domain Ω.

use std::ops::{Add, Index, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A point of ℝ^N, N ∈ {2, 3}.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(pub Vec<f64>);

/// Vectors share the representation of points.
pub type Vector = Point;

impl Point {
    pub fn new(coords: impl Into<Vec<f64>>) -> Self {
        Point(coords.into())
    }

    pub fn zeros(dim: usize) -> Self {
        Point(vec![0.0; dim])
    }

    /// Unit vector along `axis`.
    pub fn unit(dim: usize, axis: usize) -> Self {
        let mut c = vec![0.0; dim];
        c[axis] = 1.0;
        Point(c)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }

    pub fn dot(&self, other: &Point) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn dist(&self, other: &Point) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    pub fn scale(&self, s: f64) -> Point {
        Point(self.0.iter().map(|c| c * s).collect())
    }

    /// `self + s * dir`
    pub fn offset(&self, dir: &Point, s: f64) -> Point {
        Point(self.0.iter().zip(&dir.0).map(|(a, d)| a + s * d).collect())
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|c| *c == 0.0)
    }
}

impl Index<usize> for Point {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl Add for &Point {
    type Output = Point;
    fn add(self, rhs: &Point) -> Point {
        Point(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl Sub for &Point {
    type Output = Point;
    fn sub(self, rhs: &Point) -> Point {
        Point(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}

impl Mul<f64> for &Point {
    type Output = Point;
    fn mul(self, s: f64) -> Point {
        self.scale(s)
    }
}

impl Neg for &Point {
    type Output = Point;
    fn neg(self) -> Point {
        self.scale(-1.0)
    }
}

impl From<[f64; 2]> for Point {
    fn from(c: [f64; 2]) -> Self {
        Point(c.to_vec())
    }
}

impl From<[f64; 3]> for Point {
    fn from(c: [f64; 3]) -> Self {
        Point(c.to_vec())
    }
}

/// Distance from `x` to the closed segment `[a, b]`, together with the
/// closest point on it.
pub fn point_segment_distance(x: &Point, a: &Point, b: &Point) -> (f64, Point) {
    let ab = b - a;
    let len2 = ab.dot(&ab);
    if len2 == 0.0 {
        return (x.dist(a), a.clone());
    }
    let s = ((x - a).dot(&ab) / len2).clamp(0.0, 1.0);
    let c = a.offset(&ab, s);
    (x.dist(&c), c)
}

/// Minimum distance between the closed segments `[a, b]` and `[c, d]` in any
/// dimension.
pub fn segment_segment_distance(a: &Point, b: &Point, c: &Point, d: &Point) -> f64 {
    let u = b - a;
    let v = d - c;
    let w = a - c;
    let uu = u.dot(&u);
    let vv = v.dot(&v);
    if uu == 0.0 {
        return point_segment_distance(a, c, d).0;
    }
    if vv == 0.0 {
        return point_segment_distance(c, a, b).0;
    }
    let uv = u.dot(&v);
    let uw = u.dot(&w);
    let vw = v.dot(&w);
    let den = uu * vv - uv * uv;
    // Closest points of the infinite lines, clamped; then re-project each
    // endpoint candidate so that every clamped configuration is covered.
    let mut best = f64::INFINITY;
    if den > 1e-14 * uu * vv {
        let s = ((uv * vw - vv * uw) / den).clamp(0.0, 1.0);
        let t = ((uu * vw - uv * uw) / den).clamp(0.0, 1.0);
        let p = a.offset(&u, s);
        let q = c.offset(&v, t);
        best = best.min(p.dist(&q));
    }
    best = best
        .min(point_segment_distance(a, c, d).0)
        .min(point_segment_distance(b, c, d).0)
        .min(point_segment_distance(c, a, b).0)
        .min(point_segment_distance(d, a, b).0);
    best
}

/// Axis-aligned box Ω = [lower, upper].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub lower: Point,
    pub upper: Point,
}

impl Domain {
    pub fn new(lower: Point, upper: Point) -> Result<Self> {
        let d = Domain { lower, upper };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.lower.dim();
        if !(2..=3).contains(&n) || self.upper.dim() != n {
            return Err(Error::Invalid(format!(
                "domain corners must share dimension 2 or 3 (got {} and {})",
                n,
                self.upper.dim()
            )));
        }
        if !self.lower.is_finite() || !self.upper.is_finite() {
            return Err(Error::Invalid("domain corners must be finite".into()));
        }
        for k in 0..n {
            if self.lower[k] >= self.upper[k] {
                return Err(Error::Invalid(format!(
                    "domain lower corner must be below upper corner on axis {k}"
                )));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.lower.dim()
    }

    pub fn extent(&self, axis: usize) -> f64 {
        self.upper[axis] - self.lower[axis]
    }

    pub fn diameter(&self) -> f64 {
        self.lower.dist(&self.upper)
    }

    /// Membership with an absolute slack of `1e-12 · diameter`.
    pub fn contains(&self, p: &Point) -> bool {
        if p.dim() != self.dim() {
            return false;
        }
        let slack = 1e-12 * self.diameter();
        (0..self.dim()).all(|k| p[k] >= self.lower[k] - slack && p[k] <= self.upper[k] + slack)
    }

    pub fn check_contains(&self, p: &Point) -> Result<()> {
        if self.contains(p) {
            Ok(())
        } else {
            Err(Error::OutsideDomain { point: p.0.clone() })
        }
    }

    /// Bounding box of `points` padded by 5% of the extent on every side.
    ///
    /// Degenerate axes (zero extent) are padded by 5% of the overall
    /// diameter, or by 0.05 when all points coincide.
    pub fn bounding<'a>(points: impl IntoIterator<Item = &'a Point>) -> Result<Self> {
        let mut it = points.into_iter();
        let first = it
            .next()
            .ok_or_else(|| Error::Invalid("cannot bound an empty point set".into()))?;
        let mut lo = first.clone();
        let mut hi = first.clone();
        for p in it {
            if p.dim() != lo.dim() {
                return Err(Error::Invalid("points of mixed dimension".into()));
            }
            for k in 0..p.dim() {
                lo.0[k] = lo[k].min(p[k]);
                hi.0[k] = hi[k].max(p[k]);
            }
        }
        let diam = lo.dist(&hi);
        let fallback = if diam > 0.0 { 0.05 * diam } else { 0.05 };
        for k in 0..lo.dim() {
            let ext = hi[k] - lo[k];
            let pad = if ext > 0.0 { 0.05 * ext } else { fallback };
            lo.0[k] -= pad;
            hi.0[k] += pad;
        }
        Domain::new(lo, hi)
    }

    pub fn unit_box(dim: usize) -> Self {
        Domain {
            lower: Point::zeros(dim),
            upper: Point(vec![1.0; dim]),
        }
    }
}
