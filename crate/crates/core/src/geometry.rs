//! Numeric subroutines for distance-based positioning.
//!
//! Everything here is a pure function of its arguments. Points carry their
//! dimension at runtime; small dimensions stay inline without allocating.

use std::fmt;
use std::ops::{Index, IndexMut};

use smallvec::SmallVec;
use thiserror::Error;

/// Condition number above which a linear system is treated as degenerate.
pub const CONDITION_LIMIT: f64 = 1e10;

/// Default relative tolerance for geometric equality tests.
pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("degenerate anchor geometry (condition estimate {condition:.3e})")]
    Degenerate { condition: f64 },
    #[error("anchors are mutually inconsistent (residual {residual:.3e})")]
    InconsistentAnchors { residual: f64 },
    #[error("expected {expected} anchors, got {actual}")]
    AnchorCount { expected: usize, actual: usize },
}

/// A point in k-dimensional Euclidean space.
#[derive(Clone, PartialEq, Default)]
pub struct Point(SmallVec<[f64; 3]>);

impl Point {
    pub fn new(coords: impl IntoIterator<Item = f64>) -> Self {
        Point(coords.into_iter().collect())
    }

    pub fn from_slice(coords: &[f64]) -> Self {
        Point(SmallVec::from_slice(coords))
    }

    pub fn origin(k: usize) -> Self {
        Point(SmallVec::from_elem(0.0, k))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn coords_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }

    /// Largest absolute coordinate.
    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, c| m.max(c.abs()))
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.0.iter()).finish()
    }
}

impl Index<usize> for Point {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for Point {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}

impl From<Vec<f64>> for Point {
    fn from(v: Vec<f64>) -> Self {
        Point(SmallVec::from_vec(v))
    }
}

impl<const N: usize> From<[f64; N]> for Point {
    fn from(v: [f64; N]) -> Self {
        Point::from_slice(&v)
    }
}

/// A known position together with a measured distance to it.
#[derive(Debug, Clone, PartialEq)]
pub struct Anchor {
    pub position: Point,
    pub distance: f64,
}

impl Anchor {
    pub fn new(position: impl Into<Point>, distance: f64) -> Self {
        Anchor {
            position: position.into(),
            distance,
        }
    }
}

/// Ordered list of anchors. Positions are kept pairwise distinct by callers
/// that use [`AnchorSet::contains_position`] before pushing.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AnchorSet(SmallVec<[Anchor; 4]>);

impl AnchorSet {
    pub fn new() -> Self {
        AnchorSet(SmallVec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn push(&mut self, anchor: Anchor) {
        self.0.push(anchor);
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Anchor> {
        self.0.iter()
    }

    pub fn as_slice(&self) -> &[Anchor] {
        &self.0
    }

    /// True if some anchor sits at `p` within the relative tolerance.
    pub fn contains_position(&self, p: &Point, tol: f64) -> bool {
        self.0.iter().any(|a| same_position(&a.position, p, tol))
    }

    /// Set equality of anchor positions (order and distances ignored).
    pub fn same_positions(&self, other: &AnchorSet, tol: f64) -> bool {
        self.len() == other.len()
            && self
                .0
                .iter()
                .all(|a| other.contains_position(&a.position, tol))
    }
}

impl FromIterator<Anchor> for AnchorSet {
    fn from_iter<I: IntoIterator<Item = Anchor>>(iter: I) -> Self {
        AnchorSet(iter.into_iter().collect())
    }
}

impl<'a> IntoIterator for &'a AnchorSet {
    type Item = &'a Anchor;
    type IntoIter = std::slice::Iter<'a, Anchor>;
    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

fn dist_slices(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

/// Euclidean distance between two points of equal dimension.
pub fn distance(p: &Point, q: &Point) -> Result<f64, GeometryError> {
    if p.dim() != q.dim() {
        return Err(GeometryError::DimensionMismatch {
            expected: p.dim(),
            actual: q.dim(),
        });
    }
    Ok(dist_slices(p.coords(), q.coords()))
}

/// Position identity: distance within `tol` scaled by the coordinates' size.
pub fn same_position(p: &Point, q: &Point, tol: f64) -> bool {
    if p.dim() != q.dim() {
        return false;
    }
    let scale = 1.0 + p.max_abs().max(q.max_abs());
    dist_slices(p.coords(), q.coords()) <= tol * scale
}

/// True iff the label distance matches the measured distance `d_uv`.
pub fn consistent(x_u: &Point, x_v: &Point, d_uv: f64, tol: f64) -> bool {
    match distance(x_u, x_v) {
        Ok(d) => (d - d_uv).abs() <= tol * (1.0 + d_uv),
        Err(_) => false,
    }
}

/// Dense square solve by Gaussian elimination with partial pivoting.
///
/// `a` is row-major `m x m`. Returns the solution or `Degenerate` when the
/// infinity-norm condition estimate exceeds [`CONDITION_LIMIT`].
pub fn solve_linear(a: &[f64], b: &[f64]) -> Result<Vec<f64>, GeometryError> {
    let m = b.len();
    debug_assert_eq!(a.len(), m * m);
    if m == 0 {
        return Ok(Vec::new());
    }
    let a_norm = (0..m)
        .map(|r| a[r * m..(r + 1) * m].iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    if a_norm == 0.0 || !a_norm.is_finite() {
        return Err(GeometryError::Degenerate {
            condition: f64::INFINITY,
        });
    }

    // Augmented with the identity so the inverse norm comes out of the same
    // elimination.
    let w = m + 1 + m;
    let mut aug = vec![0.0; m * w];
    for r in 0..m {
        aug[r * w..r * w + m].copy_from_slice(&a[r * m..(r + 1) * m]);
        aug[r * w + m] = b[r];
        aug[r * w + m + 1 + r] = 1.0;
    }
    for col in 0..m {
        let pivot = (col..m)
            .max_by(|&x, &y| aug[x * w + col].abs().total_cmp(&aug[y * w + col].abs()))
            .unwrap_or(col);
        if aug[pivot * w + col] == 0.0 {
            return Err(GeometryError::Degenerate {
                condition: f64::INFINITY,
            });
        }
        if pivot != col {
            for c in 0..w {
                aug.swap(pivot * w + c, col * w + c);
            }
        }
        let p = aug[col * w + col];
        for r in 0..m {
            if r == col {
                continue;
            }
            let f = aug[r * w + col] / p;
            if f == 0.0 {
                continue;
            }
            for c in col..w {
                aug[r * w + c] -= f * aug[col * w + c];
            }
        }
    }
    let mut x = vec![0.0; m];
    let mut inv_norm: f64 = 0.0;
    for r in 0..m {
        let p = aug[r * w + r];
        x[r] = aug[r * w + m] / p;
        let row: f64 = (0..m).map(|c| (aug[r * w + m + 1 + c] / p).abs()).sum();
        inv_norm = inv_norm.max(row);
    }
    let condition = a_norm * inv_norm;
    if !condition.is_finite() || condition > CONDITION_LIMIT {
        return Err(GeometryError::Degenerate { condition });
    }
    Ok(x)
}

fn max_residual(x: &[f64], anchors: &[Anchor]) -> f64 {
    anchors
        .iter()
        .map(|a| (dist_slices(x, a.position.coords()) - a.distance).abs() / (1.0 + a.distance))
        .fold(0.0, f64::max)
}

/// Gauss-Newton polish on the distance residuals. Only accepted when it
/// lowers the worst residual.
fn refine(x: &mut [f64], anchors: &[Anchor]) {
    let k = x.len();
    for _ in 0..2 {
        let before = max_residual(x, anchors);
        if before == 0.0 {
            return;
        }
        let mut jtj = vec![0.0; k * k];
        let mut jtr = vec![0.0; k];
        for a in anchors {
            let r = dist_slices(x, a.position.coords());
            if r == 0.0 {
                return;
            }
            let res = r - a.distance;
            for p in 0..k {
                let jp = (x[p] - a.position[p]) / r;
                jtr[p] -= jp * res;
                for q in 0..k {
                    jtj[p * k + q] += jp * (x[q] - a.position[q]) / r;
                }
            }
        }
        let Ok(step) = solve_linear(&jtj, &jtr) else {
            return;
        };
        let candidate: Vec<f64> = x.iter().zip(&step).map(|(a, s)| a + s).collect();
        if max_residual(&candidate, anchors) < before {
            x.copy_from_slice(&candidate);
        } else {
            return;
        }
    }
}

/// Locates the unique point at the given distances from `k + 1` anchors.
///
/// The first sphere equation is subtracted from the others, leaving a `k x k`
/// linear system; the solution is then polished and checked against every
/// anchor distance.
pub fn multilaterate(anchors: &AnchorSet, k: usize, tol: f64) -> Result<Point, GeometryError> {
    if anchors.len() != k + 1 {
        return Err(GeometryError::AnchorCount {
            expected: k + 1,
            actual: anchors.len(),
        });
    }
    for a in anchors {
        if a.position.dim() != k {
            return Err(GeometryError::DimensionMismatch {
                expected: k,
                actual: a.position.dim(),
            });
        }
    }
    let base = &anchors.as_slice()[0];
    let b0 = base.position.coords();
    let b0_sq: f64 = b0.iter().map(|c| c * c).sum();
    let mut a = Vec::with_capacity(k * k);
    let mut rhs = Vec::with_capacity(k);
    for anchor in &anchors.as_slice()[1..] {
        let aj = anchor.position.coords();
        for c in 0..k {
            a.push(2.0 * (aj[c] - b0[c]));
        }
        let aj_sq: f64 = aj.iter().map(|c| c * c).sum();
        rhs.push(base.distance * base.distance - anchor.distance * anchor.distance + aj_sq - b0_sq);
    }
    let mut x = solve_linear(&a, &rhs)?;
    refine(&mut x, anchors.as_slice());
    let residual = max_residual(&x, anchors.as_slice());
    if !(residual <= tol) {
        return Err(GeometryError::InconsistentAnchors { residual });
    }
    Ok(Point::from(x))
}

/// Places a point relative to an incrementally built frame.
///
/// `anchors[0]` must be the origin; the remaining `i` anchors have non-zero
/// coordinates only in the first `i` dimensions. The first `i` coordinates of
/// the result are the projection onto their span, coordinate `i + 1` is the
/// (non-negative) distance from that span, and the rest are zero.
pub fn position_in_subspace(
    anchors: &AnchorSet,
    i: usize,
    k: usize,
    tol: f64,
) -> Result<Point, GeometryError> {
    if anchors.len() != i + 1 {
        return Err(GeometryError::AnchorCount {
            expected: i + 1,
            actual: anchors.len(),
        });
    }
    if i >= k {
        return Err(GeometryError::DimensionMismatch {
            expected: k,
            actual: i + 1,
        });
    }
    for a in anchors {
        if a.position.dim() != k {
            return Err(GeometryError::DimensionMismatch {
                expected: k,
                actual: a.position.dim(),
            });
        }
    }
    let origin = &anchors.as_slice()[0];
    if origin.position.max_abs() > tol {
        return Err(GeometryError::InconsistentAnchors {
            residual: origin.position.max_abs(),
        });
    }
    let d0 = origin.distance;
    let rest = &anchors.as_slice()[1..];

    // |y - a_j|^2 - |y|^2 = d_j^2 - d0^2  =>  -2 a_j . y = d_j^2 - d0^2 - |a_j|^2
    let mut a = Vec::with_capacity(i * i);
    let mut rhs = Vec::with_capacity(i);
    for anchor in rest {
        let aj = &anchor.position.coords()[..i];
        for c in 0..i {
            a.push(-2.0 * aj[c]);
        }
        let aj_sq: f64 = anchor.position.coords().iter().map(|c| c * c).sum();
        rhs.push(anchor.distance * anchor.distance - d0 * d0 - aj_sq);
    }
    let y = solve_linear(&a, &rhs)?;
    let y_sq: f64 = y.iter().map(|c| c * c).sum();
    let radicand = d0 * d0 - y_sq;
    let scale = 1.0 + d0 * d0;
    if radicand < -tol * scale {
        return Err(GeometryError::InconsistentAnchors {
            residual: -radicand / scale,
        });
    }
    let mut out = Point::origin(k);
    out.coords_mut()[..i].copy_from_slice(&y);
    out[i] = radicand.max(0.0).sqrt();
    Ok(out)
}
