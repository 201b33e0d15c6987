//! Uniform grids and grid functions with an explicit far-field extension.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{max_or_zero, Real};

/// How a grid function is continued outside the computational window.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Extension {
    /// Period `2 * half_width` along every axis. The right end point is
    /// excluded, so `h = 2R / points`.
    Periodic,
    /// Values beyond the window equal the nearest boundary value. Both end
    /// points are grid points, so `h = 2R / (points - 1)`.
    ConstantTail,
}

impl Extension {
    pub fn as_str(self) -> &'static str {
        match self {
            Extension::Periodic => "periodic",
            Extension::ConstantTail => "constant_tail",
        }
    }
}

/// Minimum number of points per axis.
pub const MIN_POINTS: usize = 8;

/// Tensor grid on `[-R, R]^n`, `n` in {1, 2}.
#[derive(Clone, Debug, PartialEq)]
pub struct DomainGeometry<T> {
    dimension: usize,
    half_width: T,
    points: usize,
    extension: Extension,
}

impl<T: Real> DomainGeometry<T> {
    pub fn new(
        dimension: usize,
        half_width: T,
        points: usize,
        extension: Extension,
    ) -> Result<Self> {
        if !(1..=2).contains(&dimension) {
            return Err(Error::UnsupportedDimension(dimension));
        }
        if !(half_width > T::zero()) || !half_width.is_finite() {
            return Err(Error::InvalidGeometry(format!(
                "half width must be positive and finite, got {half_width}"
            )));
        }
        if points < MIN_POINTS {
            return Err(Error::InvalidGeometry(format!(
                "need at least {MIN_POINTS} points per axis, got {points}"
            )));
        }
        Ok(Self {
            dimension,
            half_width,
            points,
            extension,
        })
    }

    /// Periodic grid on `[-pi, pi)`.
    pub fn periodic_pi(dimension: usize, points: usize) -> Result<Self> {
        Self::new(dimension, T::PI(), points, Extension::Periodic)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn half_width(&self) -> T {
        self.half_width
    }

    pub fn points_per_axis(&self) -> usize {
        self.points
    }

    pub fn extension(&self) -> Extension {
        self.extension
    }

    /// Total number of grid points.
    pub fn len(&self) -> usize {
        self.points.pow(self.dimension as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> T {
        let two_r = self.half_width + self.half_width;
        match self.extension {
            Extension::Periodic => two_r / T::from_usize_lossy(self.points),
            Extension::ConstantTail => two_r / T::from_usize_lossy(self.points - 1),
        }
    }

    /// Period length for periodic grids (`2R`).
    pub fn period(&self) -> T {
        self.half_width + self.half_width
    }

    /// Coordinate of the `k`-th point along any axis.
    pub fn axis_coord(&self, k: usize) -> T {
        -self.half_width + T::from_usize_lossy(k) * self.spacing()
    }

    pub fn multi_index(&self, idx: usize) -> [usize; 2] {
        if self.dimension == 1 {
            [idx, 0]
        } else {
            [idx % self.points, idx / self.points]
        }
    }

    pub fn flat_index(&self, mi: [usize; 2]) -> usize {
        if self.dimension == 1 {
            mi[0]
        } else {
            mi[1] * self.points + mi[0]
        }
    }

    /// Physical coordinates of a grid point; the second entry is zero in 1D.
    pub fn point(&self, idx: usize) -> [T; 2] {
        let mi = self.multi_index(idx);
        if self.dimension == 1 {
            [self.axis_coord(mi[0]), T::zero()]
        } else {
            [self.axis_coord(mi[0]), self.axis_coord(mi[1])]
        }
    }

    /// Euclidean norm of a point (uses only the active coordinates).
    pub fn norm_of_point(&self, idx: usize) -> T {
        let p = self.point(idx);
        (p[0] * p[0] + p[1] * p[1]).sqrt()
    }

    /// Index reached from `idx` by an integer offset, resolved through the
    /// extension model (wrap or clamp).
    pub fn shifted(&self, idx: usize, offset: [isize; 2]) -> usize {
        let mi = self.multi_index(idx);
        let n = self.points as isize;
        let resolve = |k: usize, d: isize| -> usize {
            let j = k as isize + d;
            match self.extension {
                Extension::Periodic => j.rem_euclid(n) as usize,
                Extension::ConstantTail => j.clamp(0, n - 1) as usize,
            }
        };
        if self.dimension == 1 {
            resolve(mi[0], offset[0])
        } else {
            self.flat_index([resolve(mi[0], offset[0]), resolve(mi[1], offset[1])])
        }
    }

    /// Grid index closest to a physical point (clamped to the window).
    pub fn nearest_index(&self, x: [T; 2]) -> usize {
        let h = self.spacing();
        let k = |c: T| -> usize {
            let raw = ((c + self.half_width) / h).round();
            let raw = raw.max(T::zero()).min(T::from_usize_lossy(self.points - 1));
            raw.to_usize().unwrap_or(0)
        };
        if self.dimension == 1 {
            k(x[0])
        } else {
            self.flat_index([k(x[0]), k(x[1])])
        }
    }

    /// Index of the origin if it is a grid point.
    pub fn origin_index(&self) -> Option<usize> {
        let idx = self.nearest_index([T::zero(), T::zero()]);
        let tol = self.spacing() * T::lit(1e-9);
        (self.norm_of_point(idx) <= tol).then_some(idx)
    }

    /// Distance between two grid points, using the minimal image on periodic grids.
    pub fn distance(&self, i: usize, j: usize) -> T {
        let (p, q) = (self.point(i), self.point(j));
        let per = self.period();
        let mut s = T::zero();
        for k in 0..self.dimension {
            let mut d = (p[k] - q[k]).abs();
            if self.extension == Extension::Periodic && d > per / T::lit(2.0) {
                d = per - d;
            }
            s += d * d;
        }
        s.sqrt()
    }

    pub fn check_same(&self, other: &Self) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GeometryMismatch(format!(
                "{}D/{} points/{:?} vs {}D/{} points/{:?}",
                self.dimension,
                self.points,
                self.extension,
                other.dimension,
                other.points,
                other.extension
            )))
        }
    }

    pub fn check_index(&self, idx: usize) -> Result<()> {
        if idx < self.len() {
            Ok(())
        } else {
            Err(Error::OutsideGrid {
                index: idx,
                len: self.len(),
            })
        }
    }
}

/// Real values on a [`DomainGeometry`].
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction<T> {
    geometry: DomainGeometry<T>,
    values: Vec<T>,
}

impl<T: Real> GridFunction<T> {
    pub fn new(geometry: DomainGeometry<T>, values: Vec<T>) -> Result<Self> {
        if values.len() != geometry.len() {
            return Err(Error::GeometryMismatch(format!(
                "{} values for a grid of {} points",
                values.len(),
                geometry.len()
            )));
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                field: "grid function".into(),
                index,
            });
        }
        Ok(Self { geometry, values })
    }

    /// Samples a function of the physical coordinates.
    pub fn from_fn(geometry: &DomainGeometry<T>, f: impl Fn([T; 2]) -> T) -> Self {
        let values = (0..geometry.len()).map(|i| f(geometry.point(i))).collect();
        Self {
            geometry: geometry.clone(),
            values,
        }
    }

    pub fn constant(geometry: &DomainGeometry<T>, value: T) -> Self {
        Self {
            geometry: geometry.clone(),
            values: vec![value; geometry.len()],
        }
    }

    pub(crate) fn from_parts_unchecked(geometry: DomainGeometry<T>, values: Vec<T>) -> Self {
        debug_assert_eq!(values.len(), geometry.len());
        Self { geometry, values }
    }

    pub fn geometry(&self) -> &DomainGeometry<T> {
        &self.geometry
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, idx: usize) -> T {
        self.values[idx]
    }

    /// Value at an integer offset from `idx`, through the extension model.
    pub fn at_offset(&self, idx: usize, offset: [isize; 2]) -> T {
        self.values[self.geometry.shifted(idx, offset)]
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self::from_parts_unchecked(
            self.geometry.clone(),
            self.values.iter().map(|&v| f(v)).collect(),
        )
    }

    /// `self + scale * other`.
    pub fn axpy(&self, scale: T, other: &Self) -> Result<Self> {
        self.geometry.check_same(&other.geometry)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| a + scale * b)
            .collect();
        Ok(Self::from_parts_unchecked(self.geometry.clone(), values))
    }

    pub fn sup_norm(&self) -> T {
        max_or_zero(self.values.iter().map(|v| v.abs()))
    }

    pub fn max(&self) -> T {
        self.values.iter().copied().fold(T::neg_infinity(), T::max)
    }

    pub fn min(&self) -> T {
        self.values.iter().copied().fold(T::infinity(), T::min)
    }

    pub fn mean(&self) -> T {
        self.values.iter().copied().sum::<T>() / T::from_usize_lossy(self.values.len())
    }

    /// Sup-norm distance to another function on the same grid.
    pub fn sup_distance(&self, other: &Self) -> Result<T> {
        self.geometry.check_same(&other.geometry)?;
        Ok(max_or_zero(
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| (a - b).abs()),
        ))
    }

    /// Discrete Lipschitz seminorm, see [`lipschitz_seminorm`].
    pub fn lipschitz_seminorm(&self) -> T {
        lipschitz_seminorm(&self.geometry, &[&self.values])
    }

    /// Brute-force Lipschitz constant `max |u(x) - u(y)| / |x - y|` over all
    /// pairs of grid points (minimal-image distance on periodic grids).
    pub fn pairwise_lipschitz(&self) -> T {
        let g = &self.geometry;
        let mut best = T::zero();
        for i in 0..g.len() {
            for j in (i + 1)..g.len() {
                let d = g.distance(i, j);
                if d > T::zero() {
                    let s = (self.values[i] - self.values[j]).abs() / d;
                    if s > best {
                        best = s;
                    }
                }
            }
        }
        best
    }
}

/// Discrete Lipschitz seminorm of a (possibly vector-valued) field: the
/// largest forward-difference slope.
///
/// Each component slice holds one value per grid point. At every point the
/// slope is the Frobenius norm of the forward-difference Jacobian, which is
/// `|u(x+h) - u(x)| / h` for a scalar field in 1D. Periodic grids include the
/// wrap-around pair; constant-tail grids only use pairs inside the window.
pub fn lipschitz_seminorm<T: Real>(geometry: &DomainGeometry<T>, components: &[&[T]]) -> T {
    let h = geometry.spacing();
    let n = geometry.points_per_axis();
    let periodic = geometry.extension() == Extension::Periodic;
    max_or_zero((0..geometry.len()).map(|i| {
        let mi = geometry.multi_index(i);
        let mut s = T::zero();
        for axis in 0..geometry.dimension() {
            if !periodic && mi[axis] + 1 >= n {
                continue;
            }
            let mut off = [0isize; 2];
            off[axis] = 1;
            let j = geometry.shifted(i, off);
            for comp in components {
                let d = (comp[j] - comp[i]) / h;
                s += d * d;
            }
        }
        s.sqrt()
    }))
}
