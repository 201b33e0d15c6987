//! Time lift and the diminishing-oscillation cascade on nested cylinders
//! `Q_s = [-s, 0] x B_s` centred at the origin.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{DomainGeometry, GridFunction};
use crate::regularity::holder::{holder_fit, HolderFit};
use crate::scalar::Real;

/// Values on a list of time levels sharing one spatial grid.
#[derive(Clone, Debug, PartialEq)]
pub struct SpaceTimeField<T> {
    geometry: DomainGeometry<T>,
    times: Vec<T>,
    slices: Vec<GridFunction<T>>,
}

impl<T: Real> SpaceTimeField<T> {
    pub fn new(times: Vec<T>, slices: Vec<GridFunction<T>>) -> Result<Self> {
        if times.is_empty() || times.len() != slices.len() {
            return Err(Error::InvalidArgument(format!(
                "{} times for {} slices",
                times.len(),
                slices.len()
            )));
        }
        let geometry = slices[0].geometry().clone();
        for s in &slices[1..] {
            geometry.check_same(s.geometry())?;
        }
        if let Some(t) = times.iter().find(|t| !t.is_finite() || **t > T::zero()) {
            return Err(Error::InvalidArgument(format!(
                "times must lie in [-T, 0], got {t}"
            )));
        }
        Ok(Self {
            geometry,
            times,
            slices,
        })
    }

    /// Time-independent field: the same slice at every time.
    pub fn stationary(u: &GridFunction<T>, times: Vec<T>) -> Result<Self> {
        let slices = vec![u.clone(); times.len()];
        Self::new(times, slices)
    }

    pub fn geometry(&self) -> &DomainGeometry<T> {
        &self.geometry
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn slices(&self) -> &[GridFunction<T>] {
        &self.slices
    }

    pub fn slice(&self, k: usize) -> &GridFunction<T> {
        &self.slices[k]
    }

    pub fn sup_norm(&self) -> T {
        self.slices
            .iter()
            .map(|s| s.sup_norm())
            .fold(T::zero(), T::max)
    }

    fn scaled(&self, factor: T) -> Self {
        Self {
            geometry: self.geometry.clone(),
            times: self.times.clone(),
            slices: self.slices.iter().map(|s| s.map(|v| v * factor)).collect(),
        }
    }
}

/// `v(t, x) = e^{lambda t} u(x)` on the given time levels.
pub fn time_lift<T: Real>(
    u: &GridFunction<T>,
    lambda: T,
    t_grid: &[T],
) -> Result<SpaceTimeField<T>> {
    if !(lambda >= T::zero()) {
        return Err(Error::InvalidArgument(format!(
            "lambda must be non-negative, got {lambda}"
        )));
    }
    let slices = t_grid
        .iter()
        .map(|&t| {
            let w = (lambda * t).exp();
            if t == T::zero() {
                u.clone()
            } else {
                u.map(|v| v * w)
            }
        })
        .collect();
    SpaceTimeField::new(t_grid.to_vec(), slices)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RowStatus {
    Pass,
    Fail,
    Unresolved,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CascadeRow<T> {
    pub k: usize,
    pub radius: T,
    pub oscillation: T,
    pub envelope: T,
    pub status: RowStatus,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CascadeTable<T> {
    pub r: T,
    pub sigma: T,
    pub slack: T,
    pub rows: Vec<CascadeRow<T>>,
    /// Largest exponent for which every resolved row passes.
    pub sigma_max: Option<T>,
    /// `1 - r^{sigma_max}`.
    pub theta_fit: Option<T>,
    /// Log-log fit over the resolved rows with positive oscillation.
    pub fit: Option<HolderFit<T>>,
    /// Fraction of grid cells of `[-2, -1] x B_1` where the field is `<= 0`.
    pub measure_fraction: Option<T>,
}

impl<T: Real> CascadeTable<T> {
    pub fn all_resolved_pass(&self) -> bool {
        self.rows.iter().all(|r| r.status != RowStatus::Fail)
    }

    pub fn resolved_rows(&self) -> impl Iterator<Item = &CascadeRow<T>> {
        self.rows
            .iter()
            .filter(|r| r.status != RowStatus::Unresolved)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CascadeOptions<T> {
    pub slack: T,
    /// Rescale to `v / (2 |v|_inf + 2)` so the oscillation starts below one.
    pub normalize: bool,
}

impl<T: Real> Default for CascadeOptions<T> {
    fn default() -> Self {
        Self {
            slack: T::lit(0.1),
            normalize: false,
        }
    }
}

/// Scale ratio `1 / (4 + 4A)`.
pub fn scale_ratio<T: Real>(a: T) -> T {
    T::one() / (T::lit(4.0) + T::lit(4.0) * a)
}

/// Oscillation of `v` over `Q_s`, or `None` when the cylinder holds no
/// time level or its ball is narrower than one grid cell.
pub fn cylinder_oscillation<T: Real>(v: &SpaceTimeField<T>, s: T) -> Option<T> {
    let g = v.geometry();
    if s < g.spacing() {
        return None;
    }
    let tol = g.spacing() * T::lit(1e-9);
    let ball: Vec<usize> = (0..g.len())
        .filter(|&i| g.norm_of_point(i) <= s + tol)
        .collect();
    let mut hi = T::neg_infinity();
    let mut lo = T::infinity();
    let mut any = false;
    for (t, slice) in v.times.iter().zip(&v.slices) {
        if *t < -s - tol {
            continue;
        }
        any = true;
        for &i in &ball {
            hi = hi.max(slice.get(i));
            lo = lo.min(slice.get(i));
        }
    }
    (any && !ball.is_empty()).then(|| hi - lo)
}

pub fn oscillation_cascade<T: Real>(
    v: &SpaceTimeField<T>,
    a: T,
    sigma: T,
    k_max: usize,
) -> Result<CascadeTable<T>> {
    oscillation_cascade_with(v, a, sigma, k_max, &CascadeOptions::default())
}

pub fn oscillation_cascade_with<T: Real>(
    v: &SpaceTimeField<T>,
    a: T,
    sigma: T,
    k_max: usize,
    opts: &CascadeOptions<T>,
) -> Result<CascadeTable<T>> {
    if !(a >= T::zero()) || !a.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "A must be non-negative, got {a}"
        )));
    }
    if !(sigma > T::zero() && sigma < T::one()) {
        return Err(Error::InvalidArgument(format!(
            "sigma must lie in (0, 1), got {sigma}"
        )));
    }
    if !(opts.slack >= T::zero()) {
        return Err(Error::InvalidArgument(format!(
            "slack must be non-negative, got {}",
            opts.slack
        )));
    }
    let scaled;
    let field = if opts.normalize {
        scaled = v.scaled(T::one() / (T::lit(2.0) * v.sup_norm() + T::lit(2.0)));
        &scaled
    } else {
        v
    };
    let r = scale_ratio(a);
    let two = T::lit(2.0);
    let factor = T::one() + opts.slack;
    let mut rows = Vec::with_capacity(k_max + 1);
    for k in 0..=k_max {
        let radius = r.powi(k as i32);
        let envelope = two * r.powf(sigma * T::from_usize_lossy(k));
        let row = match cylinder_oscillation(field, radius) {
            Some(osc) => CascadeRow {
                k,
                radius,
                oscillation: osc,
                envelope,
                status: if osc <= envelope * factor {
                    RowStatus::Pass
                } else {
                    RowStatus::Fail
                },
            },
            None => CascadeRow {
                k,
                radius,
                oscillation: T::nan(),
                envelope,
                status: RowStatus::Unresolved,
            },
        };
        rows.push(row);
    }

    let resolved: Vec<&CascadeRow<T>> = rows
        .iter()
        .filter(|r| r.status != RowStatus::Unresolved)
        .collect();
    let passes = |s: T| {
        resolved
            .iter()
            .all(|row| row.oscillation <= two * r.powf(s * T::from_usize_lossy(row.k)) * factor)
    };
    let sigma_max = if resolved.is_empty() || !passes(T::zero()) {
        None
    } else if passes(T::one()) {
        Some(T::one())
    } else {
        let (mut lo, mut hi) = (T::zero(), T::one());
        for _ in 0..60 {
            let mid = (lo + hi) / two;
            if passes(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some(lo)
    };
    let theta_fit = sigma_max.map(|s| T::one() - r.powf(s));

    let (radii, oscs): (Vec<T>, Vec<T>) =
        resolved.iter().map(|r| (r.radius, r.oscillation)).unzip();
    let fit = holder_fit(&radii, &oscs).ok();

    Ok(CascadeTable {
        r,
        sigma,
        slack: opts.slack,
        rows,
        sigma_max,
        theta_fit,
        fit,
        measure_fraction: measure_fraction(field),
    })
}

fn measure_fraction<T: Real>(v: &SpaceTimeField<T>) -> Option<T> {
    let g = v.geometry();
    let tol = g.spacing() * T::lit(1e-9);
    let one = T::one();
    let two = T::lit(2.0);
    let ball: Vec<usize> = (0..g.len())
        .filter(|&i| g.norm_of_point(i) <= one + tol)
        .collect();
    let mut total = 0usize;
    let mut below = 0usize;
    for (t, slice) in v.times.iter().zip(&v.slices) {
        if *t < -two - tol || *t > -one + tol {
            continue;
        }
        for &i in &ball {
            total += 1;
            if slice.get(i) <= T::zero() {
                below += 1;
            }
        }
    }
    (total > 0).then(|| T::from_usize_lossy(below) / T::from_usize_lossy(total))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Extension;

    fn line(points: usize, half: f64) -> DomainGeometry<f64> {
        DomainGeometry::new(1, half, points, Extension::ConstantTail).unwrap()
    }

    #[test]
    fn lift_examples() {
        let g = line(21, 1.0);
        let u = GridFunction::from_fn(&g, |x| x[0].sin());
        let v = time_lift(&u, 0.0, &[-1.0, -0.5, 0.0]).unwrap();
        assert!(v.slices().iter().all(|s| s == &u));
        let one = GridFunction::constant(&g, 1.0);
        let v = time_lift(&one, 1.0, &[-1.0, 0.0]).unwrap();
        assert!(v
            .slice(0)
            .values()
            .iter()
            .all(|&x| (x - (-1.0f64).exp()).abs() < 1e-15));
        assert_eq!(v.slice(1), &one);
        assert!(time_lift(&one, -1.0, &[0.0]).is_err());
        assert!(time_lift(&one, 1.0, &[0.5]).is_err());
    }

    #[test]
    fn ratio_for_zero_drift() {
        assert_eq!(scale_ratio(0.0f64), 0.25);
        assert_eq!(scale_ratio(1.0f64), 0.125);
    }

    #[test]
    fn constant_field_passes_everything() {
        let g = line(401, 2.0);
        let v =
            SpaceTimeField::stationary(&GridFunction::constant(&g, 3.0), vec![-1.0, 0.0]).unwrap();
        let table = oscillation_cascade(&v, 0.0, 0.9, 4).unwrap();
        assert!(table.all_resolved_pass());
        assert_eq!(table.sigma_max, Some(1.0));
        for row in &table.rows {
            assert_eq!(row.envelope, 2.0 * 0.25f64.powf(0.9 * row.k as f64));
        }
    }

    #[test]
    fn square_root_profile() {
        let g = line(8193, 1.0);
        let u = GridFunction::from_fn(&g, |x| x[0].abs().sqrt());
        let v = SpaceTimeField::stationary(&u, vec![0.0]).unwrap();
        let table = oscillation_cascade(&v, 0.0, 0.5, 8).unwrap();
        let fit = table.fit.unwrap();
        assert!((fit.sigma - 0.5).abs() < 0.05, "{}", fit.sigma);
        assert!(table.all_resolved_pass());
        // closed form: sigma_max = min over rows k >= 1 of 1/2 + ln(2.2) / (k ln 4)
        let deepest = table.resolved_rows().map(|r| r.k).max().unwrap();
        let closed = 0.5 + 2.2f64.ln() / (deepest as f64 * 4f64.ln());
        assert!((table.sigma_max.unwrap() - closed).abs() < 1e-6);
        assert!(table.rows.iter().any(|r| r.status == RowStatus::Unresolved));
    }
}
