//! Difference quotients and the residuals of the inequalities they satisfy.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fraclap::KernelQuadrature;
use crate::grid::GridFunction;
use crate::scalar::Real;

/// `(u(x + h ell) - u(x)) / h` on the grid.
#[derive(Clone, Debug, PartialEq)]
pub struct DiffQuotient<T> {
    pub h: T,
    pub ell: [T; 2],
    pub values: GridFunction<T>,
}

pub fn diff_quotient<T: Real>(u: &GridFunction<T>, h: T, ell: &[T]) -> Result<DiffQuotient<T>> {
    let g = u.geometry();
    let dim = g.dimension();
    if ell.len() != dim {
        return Err(Error::InvalidArgument(format!(
            "direction has {} components, grid has dimension {dim}",
            ell.len()
        )));
    }
    if !(h > T::zero()) || !h.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "step must be positive, got {h}"
        )));
    }
    let norm = ell.iter().map(|&e| e * e).sum::<T>().sqrt();
    if (norm - T::one()).abs() > T::lit(1e-6) {
        return Err(Error::InvalidArgument(format!(
            "direction must be a unit vector, |ell| = {norm}"
        )));
    }
    let spacing = g.spacing();
    let mut offset = [0isize; 2];
    let mut unit = [T::zero(); 2];
    for k in 0..dim {
        unit[k] = ell[k];
        let steps = h * ell[k] / spacing;
        let rounded = steps.round();
        if (steps - rounded).abs() > T::lit(1e-6) * (T::one() + steps.abs()) {
            return Err(Error::NotGridAligned {
                step: h.to_f64_lossy(),
                direction: ell.iter().map(|e| e.to_f64_lossy()).collect(),
                spacing: spacing.to_f64_lossy(),
            });
        }
        offset[k] = rounded.to_isize().unwrap_or(0);
    }
    let values = (0..u.len())
        .map(|i| (u.at_offset(i, offset) - u.get(i)) / h)
        .collect();
    Ok(DiffQuotient {
        h,
        ell: unit,
        values: GridFunction::from_parts_unchecked(g.clone(), values),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DqResiduals<T> {
    /// `max (-A|grad v| - B + lambda v + (-Lap)^{1/2} v)^+`.
    pub sub_violation: T,
    /// `max (-(A|grad v| + B + lambda v + (-Lap)^{1/2} v))^+`.
    pub super_violation: T,
}

/// Worst violations of the pair of inequalities satisfied by difference
/// quotients of a solution. `|grad v|` uses central differences.
pub fn dq_residuals<T: Real>(v: &GridFunction<T>, a: T, b: T, lambda: T) -> Result<DqResiduals<T>> {
    if !(a >= T::zero()) || !(b >= T::zero()) || !(lambda > T::zero()) {
        return Err(Error::InvalidArgument(format!(
            "need A, B >= 0 and lambda > 0, got A = {a}, B = {b}, lambda = {lambda}"
        )));
    }
    let g = v.geometry();
    let lap = KernelQuadrature::standard(g)?.apply(v)?;
    let two_h = g.spacing() + g.spacing();
    let dim = g.dimension();
    let pairs: Vec<(T, T)> = (0..v.len())
        .into_par_iter()
        .map(|i| {
            let mut grad2 = T::zero();
            for axis in 0..dim {
                let mut e = [0isize; 2];
                e[axis] = 1;
                let fwd = v.at_offset(i, e);
                e[axis] = -1;
                let bwd = v.at_offset(i, e);
                let d = (fwd - bwd) / two_h;
                grad2 += d * d;
            }
            let grad = grad2.sqrt();
            let base = lambda * v.get(i) + lap.get(i);
            let sub = base - a * grad - b;
            let sup = base + a * grad + b;
            (sub, sup)
        })
        .collect();
    let mut out = DqResiduals {
        sub_violation: T::zero(),
        super_violation: T::zero(),
    };
    for (sub, sup) in pairs {
        out.sub_violation = out.sub_violation.max(sub);
        out.super_violation = out.super_violation.max(-sup);
    }
    Ok(out)
}
