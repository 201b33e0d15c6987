//! Log-log least-squares fit of oscillation against radius.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HolderFit<T> {
    pub sigma: T,
    pub constant: T,
    /// Root-mean-square of the residuals in log space.
    pub residual: T,
    pub rows_used: usize,
}

/// Fits `osc = constant * radius^sigma`. Rows with non-positive radius or
/// oscillation are skipped; at least three must remain.
pub fn holder_fit<T: Real>(radii: &[T], oscillations: &[T]) -> Result<HolderFit<T>> {
    if radii.len() != oscillations.len() {
        return Err(Error::InvalidArgument(format!(
            "{} radii but {} oscillations",
            radii.len(),
            oscillations.len()
        )));
    }
    let pts: Vec<(T, T)> = radii
        .iter()
        .zip(oscillations)
        .filter(|(r, o)| **r > T::zero() && **o > T::zero() && r.is_finite() && o.is_finite())
        .map(|(r, o)| (r.ln(), o.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::TooFewRows {
            needed: 3,
            got: pts.len(),
        });
    }
    let n = T::from_usize_lossy(pts.len());
    let mx = pts.iter().map(|p| p.0).sum::<T>() / n;
    let my = pts.iter().map(|p| p.1).sum::<T>() / n;
    let sxx: T = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: T = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if !(sxx > T::zero()) {
        return Err(Error::InvalidArgument("radii must not all coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: T = pts
        .iter()
        .map(|p| {
            let e = p.1 - (intercept + slope * p.0);
            e * e
        })
        .sum();
    Ok(HolderFit {
        sigma: slope,
        constant: intercept.exp(),
        residual: (sse / n).sqrt(),
        rows_used: pts.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_laws() {
        let r = [1.0, 0.25, 1.0 / 16.0];
        let osc: Vec<f64> = r.iter().map(|x: &f64| 2.0 * x.sqrt()).collect();
        let fit = holder_fit(&r, &osc).unwrap();
        assert!((fit.sigma - 0.5).abs() < 1e-12);
        assert!((fit.constant - 2.0).abs() < 1e-12);
        assert!(fit.residual < 1e-12);

        let osc: Vec<f64> = r.iter().map(|x| 3.0 * x).collect();
        assert!((holder_fit(&r, &osc).unwrap().sigma - 1.0).abs() < 1e-12);
    }

    #[test]
    fn too_few_rows() {
        let err = holder_fit(&[1.0, 0.5, 0.25], &[1.0, 0.0, 0.5]).unwrap_err();
        assert_eq!(err, Error::TooFewRows { needed: 3, got: 2 });
        assert!(holder_fit(&[1.0], &[1.0, 2.0]).is_err());
    }
}
