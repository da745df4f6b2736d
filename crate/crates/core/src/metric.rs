//! Finite metric spaces, power-of-two scales, and the matching product metric.
//!
//! Points are identified by index. A [`FiniteMetric`] is either an explicit
//! distance table or a set of Euclidean coordinates; both are immutable after
//! construction.

use std::fmt;

use crate::error::{Error, Result};

/// Relative tolerance shared by every threshold comparison.
pub const TAU: f64 = 1e-9;
/// Absolute fallback used near zero.
pub const ABS_TOL: f64 = 1e-12;

#[inline]
fn slack(a: f64, b: f64) -> f64 {
    (TAU * a.abs().max(b.abs())).max(ABS_TOL)
}

/// `a <= b` up to the shared tolerance.
#[inline]
pub fn le_tol(a: f64, b: f64) -> bool {
    a <= b + slack(a, b)
}

/// `a < b` by more than the shared tolerance.
#[inline]
pub fn lt_tol(a: f64, b: f64) -> bool {
    a < b - slack(a, b)
}

#[derive(Clone, Debug, PartialEq)]
enum Repr {
    Matrix { n: usize, d: Vec<f64> },
    Euclidean { dim: usize, coords: Vec<f64> },
}

/// A finite point set with a symmetric, positive distance oracle.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteMetric {
    repr: Repr,
}

/// Which storage form backs a [`FiniteMetric`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MetricForm {
    Matrix,
    Euclidean,
}

/// A probe for distance queries: an index of the host space, or, for
/// Euclidean hosts only, an external coordinate tuple.
#[derive(Clone, Copy, Debug)]
pub enum Probe<'a> {
    Index(usize),
    Coords(&'a [f64]),
}

impl FiniteMetric {
    /// Builds an explicit metric from a square table and validates it.
    pub fn from_matrix(rows: Vec<Vec<f64>>) -> Result<Self> {
        let metric = Self::from_matrix_unchecked(rows)?;
        let report = metric.validate();
        if !report.is_valid() {
            return Err(Error::InvalidMetric(report.summary()));
        }
        Ok(metric)
    }

    /// Builds an explicit metric, checking only the shape of the table.
    /// Intended for large inputs that are known to be valid.
    pub fn from_matrix_unchecked(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        let mut d = Vec::with_capacity(n * n);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidMetric(format!(
                    "row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            d.extend(row);
        }
        if let Some(bad) = d.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidMetric(format!(
                "non-finite entry at ({}, {})",
                bad / n.max(1),
                bad % n.max(1)
            )));
        }
        Ok(Self {
            repr: Repr::Matrix { n, d },
        })
    }

    /// Builds a Euclidean metric. Points must share one dimension and be
    /// pairwise distinct.
    pub fn from_points(points: Vec<Vec<f64>>) -> Result<Self> {
        let dim = points.first().map_or(0, Vec::len);
        let mut coords = Vec::with_capacity(points.len() * dim);
        for (i, p) in points.into_iter().enumerate() {
            if p.len() != dim {
                return Err(Error::InvalidMetric(format!(
                    "point {i} has dimension {}, expected {dim}",
                    p.len()
                )));
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidMetric(format!("point {i} is not finite")));
            }
            coords.extend(p);
        }
        Self::from_flat_points(dim, coords)
    }

    /// Builds a Euclidean metric from a row-major coordinate buffer.
    pub fn from_flat_points(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 && !coords.is_empty() {
            return Err(Error::InvalidMetric("dimension must be positive".into()));
        }
        if dim > 0 && !coords.len().is_multiple_of(dim) {
            return Err(Error::InvalidMetric(
                "coordinate buffer is not a multiple of the dimension".into(),
            ));
        }
        let n = coords.len().checked_div(dim).unwrap_or(0);
        if n > 1 && dim == 0 {
            return Err(Error::InvalidMetric("zero-dimensional points coincide".into()));
        }
        // Duplicate coordinates would give distance zero between distinct points.
        let mut order: Vec<usize> = (0..n).collect();
        let row = |i: usize| &coords[i * dim..(i + 1) * dim];
        order.sort_by(|&a, &b| {
            row(a)
                .iter()
                .zip(row(b))
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        for w in order.windows(2) {
            if row(w[0]) == row(w[1]) {
                let (a, b) = (w[0].min(w[1]), w[0].max(w[1]));
                return Err(Error::InvalidMetric(format!(
                    "points {a} and {b} have identical coordinates"
                )));
            }
        }
        Ok(Self {
            repr: Repr::Euclidean { dim, coords },
        })
    }

    pub fn len(&self) -> usize {
        match &self.repr {
            Repr::Matrix { n, .. } => *n,
            Repr::Euclidean { dim, coords } => {
                if *dim == 0 {
                    0
                } else {
                    coords.len() / dim
                }
            }
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn form(&self) -> MetricForm {
        match self.repr {
            Repr::Matrix { .. } => MetricForm::Matrix,
            Repr::Euclidean { .. } => MetricForm::Euclidean,
        }
    }

    /// Coordinate dimension for Euclidean metrics.
    pub fn dimension(&self) -> Option<usize> {
        match self.repr {
            Repr::Euclidean { dim, .. } => Some(dim),
            Repr::Matrix { .. } => None,
        }
    }

    pub fn coords(&self, i: usize) -> Option<&[f64]> {
        match &self.repr {
            Repr::Euclidean { dim, coords } => coords.get(i * dim..(i + 1) * dim),
            Repr::Matrix { .. } => None,
        }
    }

    /// Checked distance lookup.
    pub fn distance(&self, i: usize, j: usize) -> Result<f64> {
        let n = self.len();
        for index in [i, j] {
            if index >= n {
                return Err(Error::IndexOutOfRange { index, size: n });
            }
        }
        Ok(self.d(i, j))
    }

    /// Unchecked distance lookup; panics when an index is out of range.
    #[inline]
    pub fn d(&self, i: usize, j: usize) -> f64 {
        match &self.repr {
            Repr::Matrix { n, d } => d[i * n + j],
            Repr::Euclidean { dim, coords } => {
                if i == j {
                    return 0.0;
                }
                l2(&coords[i * dim..(i + 1) * dim], &coords[j * dim..(j + 1) * dim])
            }
        }
    }

    /// Distance from a probe to point `j`.
    pub fn probe_distance(&self, probe: Probe<'_>, j: usize) -> Result<f64> {
        match probe {
            Probe::Index(i) => self.distance(i, j),
            Probe::Coords(q) => match &self.repr {
                Repr::Euclidean { dim, .. } => {
                    if q.len() != *dim {
                        return Err(Error::ForeignQuery(format!(
                            "query has dimension {}, space has {dim}",
                            q.len()
                        )));
                    }
                    let p = self.coords(j).ok_or(Error::IndexOutOfRange {
                        index: j,
                        size: self.len(),
                    })?;
                    Ok(l2(q, p))
                }
                Repr::Matrix { .. } => Err(Error::ForeignQuery(
                    "explicit matrices only accept index queries".into(),
                )),
            },
        }
    }

    /// Full distance table (row-major rows).
    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        let n = self.len();
        (0..n).map(|i| (0..n).map(|j| self.d(i, j)).collect()).collect()
    }

    /// Checks symmetry, positivity and the triangle inequality. Symmetry and
    /// the triangle inequality are checked up to the shared tolerance.
    pub fn validate(&self) -> ValidationReport {
        let n = self.len();
        let mut violations = Vec::new();
        for i in 0..n {
            let dii = self.d(i, i);
            if dii != 0.0 {
                violations.push(Violation::NonZeroDiagonal { i, value: dii });
            }
        }
        for i in 0..n {
            for j in i + 1..n {
                let (a, b) = (self.d(i, j), self.d(j, i));
                if !(le_tol(a, b) && le_tol(b, a)) {
                    violations.push(Violation::Asymmetric {
                        i,
                        j,
                        forward: a,
                        backward: b,
                    });
                }
                if a.is_nan() || a <= 0.0 {
                    violations.push(Violation::NonPositive { i, j, value: a });
                }
            }
        }
        // Euclidean adapters satisfy the triangle inequality by construction.
        if self.form() == MetricForm::Matrix {
            for i in 0..n {
                for j in i + 1..n {
                    let dij = self.d(i, j);
                    for via in 0..n {
                        if via == i || via == j {
                            continue;
                        }
                        let detour = self.d(i, via) + self.d(via, j);
                        if !le_tol(dij, detour) {
                            violations.push(Violation::Triangle {
                                i,
                                j,
                                via,
                                direct: dij,
                                detour,
                            });
                        }
                    }
                }
            }
        }
        ValidationReport { violations }
    }

    /// Restriction to the given points, reindexed in the given order.
    pub fn submetric(&self, points: &[usize]) -> Result<Self> {
        let n = self.len();
        if let Some(&index) = points.iter().find(|&&p| p >= n) {
            return Err(Error::IndexOutOfRange { index, size: n });
        }
        match &self.repr {
            Repr::Euclidean { dim, .. } => {
                let mut coords = Vec::with_capacity(points.len() * dim);
                for &p in points {
                    coords.extend_from_slice(self.coords(p).unwrap());
                }
                Self::from_flat_points(*dim, coords)
            }
            Repr::Matrix { .. } => {
                let rows = points
                    .iter()
                    .map(|&a| points.iter().map(|&b| self.d(a, b)).collect())
                    .collect();
                let m = Self::from_matrix_unchecked(rows)?;
                if let Some(v) = m.validate().violations.first() {
                    return Err(Error::InvalidMetric(v.to_string()));
                }
                Ok(m)
            }
        }
    }

    /// Every distance multiplied by `factor`.
    pub fn rescale(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "rescale factor must be positive, got {factor}"
            )));
        }
        let repr = match &self.repr {
            Repr::Matrix { n, d } => Repr::Matrix {
                n: *n,
                d: d.iter().map(|v| v * factor).collect(),
            },
            Repr::Euclidean { dim, coords } => Repr::Euclidean {
                dim: *dim,
                coords: coords.iter().map(|v| v * factor).collect(),
            },
        };
        Ok(Self { repr })
    }

    fn check_subset(&self, subset: &[usize]) -> Result<()> {
        if subset.is_empty() {
            return Err(Error::EmptySubset);
        }
        let n = self.len();
        match subset.iter().find(|&&p| p >= n) {
            Some(&index) => Err(Error::IndexOutOfRange { index, size: n }),
            None => Ok(()),
        }
    }

    /// Largest pairwise distance in `subset`.
    pub fn diam(&self, subset: &[usize]) -> Result<f64> {
        self.check_subset(subset)?;
        let mut best = 0.0f64;
        for (a, &p) in subset.iter().enumerate() {
            for &q in &subset[a + 1..] {
                best = best.max(self.d(p, q));
            }
        }
        Ok(best)
    }

    /// Smallest pairwise distance in `subset`.
    pub fn dmin(&self, subset: &[usize]) -> Result<f64> {
        self.check_subset(subset)?;
        if subset.len() < 2 {
            return Err(Error::TooFewPoints(subset.len()));
        }
        let mut best = f64::INFINITY;
        for (a, &p) in subset.iter().enumerate() {
            for &q in &subset[a + 1..] {
                best = best.min(self.d(p, q));
            }
        }
        Ok(best)
    }

    /// `diam / dmin` over `subset`.
    pub fn spread(&self, subset: &[usize]) -> Result<f64> {
        let lo = self.dmin(subset)?;
        Ok(self.diam(subset)? / lo)
    }

    /// Diameter of the whole space (quadratic).
    pub fn diameter(&self) -> f64 {
        let all: Vec<usize> = (0..self.len()).collect();
        if all.is_empty() {
            0.0
        } else {
            self.diam(&all).unwrap()
        }
    }
}

#[inline]
fn l2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// A single defect found by [`FiniteMetric::validate`].
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    NonZeroDiagonal {
        i: usize,
        value: f64,
    },
    Asymmetric {
        i: usize,
        j: usize,
        forward: f64,
        backward: f64,
    },
    NonPositive {
        i: usize,
        j: usize,
        value: f64,
    },
    /// `d(i, j) > d(i, via) + d(via, j)`.
    Triangle {
        i: usize,
        j: usize,
        via: usize,
        direct: f64,
        detour: f64,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Violation::NonZeroDiagonal { i, value } => write!(f, "d({i},{i}) = {value}"),
            Violation::Asymmetric {
                i,
                j,
                forward,
                backward,
            } => {
                write!(f, "d({i},{j}) = {forward} but d({j},{i}) = {backward}")
            }
            Violation::NonPositive { i, j, value } => write!(f, "d({i},{j}) = {value} is not positive"),
            Violation::Triangle {
                i,
                j,
                via,
                direct,
                detour,
            } => write!(f, "triangle ({i},{j}) via {via}: {direct} > {detour}"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    fn summary(&self) -> String {
        match self.violations.as_slice() {
            [] => "valid".into(),
            [only] => only.to_string(),
            [first, rest @ ..] => format!("{first} (and {} more)", rest.len()),
        }
    }
}

/// A power-of-two radius `2^exp`, stored by its integer exponent.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Scale {
    exp: i32,
}

impl Scale {
    pub const fn from_exp(exp: i32) -> Self {
        Self { exp }
    }

    pub const fn exp(self) -> i32 {
        self.exp
    }

    pub fn value(self) -> f64 {
        2f64.powi(self.exp)
    }

    /// The smallest power of two that is at least `v`.
    pub fn at_least(v: f64) -> Result<Self> {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "scale needs a positive finite length, got {v}"
            )));
        }
        Ok(Self { exp: ceil_log2(v) })
    }

    /// `Some` when `v` is exactly a power of two.
    pub fn exact(v: f64) -> Option<Self> {
        let s = Self::at_least(v).ok()?;
        (s.value() == v).then_some(s)
    }

    pub fn doubled(self) -> Self {
        Self { exp: self.exp + 1 }
    }

    pub fn halved(self) -> Self {
        Self { exp: self.exp - 1 }
    }
}

/// `ceil(log2 v)` for positive finite `v`, read off the IEEE representation.
pub(crate) fn ceil_log2(v: f64) -> i32 {
    debug_assert!(v > 0.0 && v.is_finite());
    let bits = v.to_bits();
    let biased = ((bits >> 52) & 0x7ff) as i32;
    let mantissa = bits & ((1u64 << 52) - 1);
    if biased == 0 {
        // Subnormal: v = mantissa * 2^-1074.
        let top = 63 - mantissa.leading_zeros() as i32;
        let exact = mantissa.is_power_of_two();
        return top - 1074 + i32::from(!exact);
    }
    let e = biased - 1023;
    if mantissa == 0 {
        e
    } else {
        e + 1
    }
}

/// An injective assignment of pattern points to space points, by pattern index.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Matching {
    targets: Vec<usize>,
}

impl Matching {
    pub fn new(targets: Vec<usize>) -> Result<Self> {
        let mut seen = targets.clone();
        seen.sort_unstable();
        if let Some(w) = seen.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::NotInjective(w[0]));
        }
        Ok(Self { targets })
    }

    pub(crate) fn from_vec_unchecked(targets: Vec<usize>) -> Self {
        Self { targets }
    }

    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn into_targets(self) -> Vec<usize> {
        self.targets
    }

    fn check_in(&self, y: &FiniteMetric) -> Result<()> {
        let n = y.len();
        match self.targets.iter().find(|&&t| t >= n) {
            Some(&index) => Err(Error::IndexOutOfRange { index, size: n }),
            None => Ok(()),
        }
    }
}

/// Max-coordinate distance between two target sequences.
#[inline]
pub(crate) fn product_distance(a: &[usize], b: &[usize], y: &FiniteMetric) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&p, &q)| if p == q { 0.0 } else { y.d(p, q) })
        .fold(0.0, f64::max)
}

/// `d_M(a, b) = max_x d_Y(a(x), b(x))`.
pub fn matching_distance(a: &Matching, b: &Matching, y: &FiniteMetric) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    a.check_in(y)?;
    b.check_in(y)?;
    Ok(product_distance(&a.targets, &b.targets, y))
}

fn check_pair_domain(sigma: &Matching, x: &FiniteMetric, y: &FiniteMetric) -> Result<()> {
    if sigma.len() != x.len() {
        return Err(Error::LengthMismatch(sigma.len(), x.len()));
    }
    if x.len() < 2 {
        return Err(Error::TooFewPoints(x.len()));
    }
    sigma.check_in(y)
}

/// Largest stretch `d_Y(σx, σx') / d_X(x, x')`.
pub fn expansion(sigma: &Matching, x: &FiniteMetric, y: &FiniteMetric) -> Result<f64> {
    check_pair_domain(sigma, x, y)?;
    Ok(ratio_extremes(sigma.targets(), x, y).0)
}

/// Largest shrink `d_X(x, x') / d_Y(σx, σx')`, the expansion of the inverse.
pub fn inverse_expansion(sigma: &Matching, x: &FiniteMetric, y: &FiniteMetric) -> Result<f64> {
    check_pair_domain(sigma, x, y)?;
    Ok(ratio_extremes(sigma.targets(), x, y).1)
}

/// Product of the expansions of `σ` and `σ⁻¹`.
pub fn distortion(sigma: &Matching, x: &FiniteMetric, y: &FiniteMetric) -> Result<f64> {
    check_pair_domain(sigma, x, y)?;
    let (e, inv) = ratio_extremes(sigma.targets(), x, y);
    Ok(e * inv)
}

/// Smallest `ρ` for which `σ` is a ρ-matching; 1 for a single point.
pub fn achieved_rho(sigma: &Matching, x: &FiniteMetric, y: &FiniteMetric) -> Result<f64> {
    if sigma.len() != x.len() {
        return Err(Error::LengthMismatch(sigma.len(), x.len()));
    }
    sigma.check_in(y)?;
    if x.len() < 2 {
        return Ok(1.0);
    }
    let (e, inv) = ratio_extremes(sigma.targets(), x, y);
    Ok(e.max(inv).max(1.0))
}

pub(crate) fn ratio_extremes(targets: &[usize], x: &FiniteMetric, y: &FiniteMetric) -> (f64, f64) {
    let mut stretch = 0.0f64;
    let mut shrink = 0.0f64;
    for a in 0..targets.len() {
        for b in a + 1..targets.len() {
            let dx = x.d(a, b);
            let dy = if targets[a] == targets[b] {
                0.0
            } else {
                y.d(targets[a], targets[b])
            };
            stretch = stretch.max(dy / dx);
            shrink = shrink.max(if dy > 0.0 { dx / dy } else { f64::INFINITY });
        }
    }
    (stretch, shrink)
}

/// `(1/ρ)·d_X ≤ d_Y∘σ ≤ ρ·d_X` on every pair, up to the shared tolerance.
///
/// Returns `false` for malformed input (length mismatch, out-of-range
/// target) and for non-injective σ.
pub fn verify_matching(sigma: &Matching, x: &FiniteMetric, y: &FiniteMetric, rho: f64) -> bool {
    if sigma.len() != x.len() || sigma.check_in(y).is_err() {
        return false;
    }
    targets_within(sigma.targets(), x, y, rho)
}

pub(crate) fn targets_within(targets: &[usize], x: &FiniteMetric, y: &FiniteMetric, rho: f64) -> bool {
    for a in 0..targets.len() {
        for b in a + 1..targets.len() {
            if targets[a] == targets[b] {
                return false;
            }
            let dx = x.d(a, b);
            let dy = y.d(targets[a], targets[b]);
            if !le_tol(dy, rho * dx) || !le_tol(dx, rho * dy) {
                return false;
            }
        }
    }
    true
}
