//! Brute-force doubling of variables on a grid.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fraclap::KernelQuadrature;
use crate::grid::GridFunction;
use crate::scalar::Real;

/// Largest grid accepted by [`doubling_max`]; the search visits every ordered pair.
pub const DOUBLING_POINT_CAP: usize = 8192;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DoublingMax<T> {
    pub x0: usize,
    pub y0: usize,
    pub m_eps: T,
}

/// Maximises `u(x) - u(y) - gamma/2 |x-y|^2 - eps/2 (|x|^2 + |y|^2)` over all
/// pairs of grid points. Ties go to the lowest `(x, y)` in lexicographic order.
pub fn doubling_max<T: Real>(u: &GridFunction<T>, gamma: T, epsilon: T) -> Result<DoublingMax<T>> {
    if !(gamma > T::zero()) || !(epsilon > T::zero()) {
        return Err(Error::InvalidArgument(format!(
            "gamma and epsilon must be positive, got {gamma} and {epsilon}"
        )));
    }
    let g = u.geometry();
    let n = g.len();
    if n > DOUBLING_POINT_CAP {
        return Err(Error::GridTooLarge {
            points: n,
            cap: DOUBLING_POINT_CAP,
        });
    }
    let half = T::lit(0.5);
    let pts: Vec<[T; 2]> = (0..n).map(|i| g.point(i)).collect();
    let sq: Vec<T> = pts.iter().map(|p| p[0] * p[0] + p[1] * p[1]).collect();
    let vals = u.values();
    let per_x: Vec<(usize, T)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut best = (0usize, T::neg_infinity());
            for j in 0..n {
                let dx = pts[i][0] - pts[j][0];
                let dy = pts[i][1] - pts[j][1];
                let psi = vals[i]
                    - vals[j]
                    - half * gamma * (dx * dx + dy * dy)
                    - half * epsilon * (sq[i] + sq[j]);
                if psi > best.1 {
                    best = (j, psi);
                }
            }
            best
        })
        .collect();
    let mut out = DoublingMax {
        x0: 0,
        y0: per_x[0].0,
        m_eps: per_x[0].1,
    };
    for (i, &(j, v)) in per_x.iter().enumerate().skip(1) {
        if v > out.m_eps {
            out = DoublingMax {
                x0: i,
                y0: j,
                m_eps: v,
            };
        }
    }
    Ok(out)
}

/// Measured constant of the nonlocal-term estimate:
/// `max over gamma of gamma * ((-Lap)^{1/2} u (y0) - (-Lap)^{1/2} u (x0))^+`
/// at the doubling maximisers.
pub fn measured_nonlocal_bound<T: Real>(
    u: &GridFunction<T>,
    gammas: &[T],
    epsilon: T,
) -> Result<T> {
    let lap = KernelQuadrature::standard(u.geometry())?.apply(u)?;
    let mut c = T::zero();
    for &gamma in gammas {
        let d = doubling_max(u, gamma, epsilon)?;
        let gap = lap.get(d.y0) - lap.get(d.x0);
        c = c.max(gamma * gap.max(T::zero()));
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{DomainGeometry, Extension};

    fn line(points: usize) -> DomainGeometry<f64> {
        DomainGeometry::new(1, 1.0, points, Extension::ConstantTail).unwrap()
    }

    #[test]
    fn zero_function_peaks_at_origin() {
        let g = line(41);
        let u = GridFunction::constant(&g, 0.0);
        let d = doubling_max(&u, 1.0, 0.1).unwrap();
        assert_eq!(d.m_eps, 0.0);
        let o = g.origin_index().unwrap();
        assert_eq!((d.x0, d.y0), (o, o));
    }

    #[test]
    fn linear_gain_vanishes_for_large_gamma() {
        let g = line(201);
        let u = GridFunction::from_fn(&g, |x| x[0]);
        let mut prev = f64::INFINITY;
        for gamma in [1.0, 10.0, 100.0, 1000.0] {
            let m = doubling_max(&u, gamma, 0.01).unwrap().m_eps;
            assert!(m >= 0.0 && m <= prev);
            prev = m;
        }
        assert!(prev < 1e-3);
    }

    #[test]
    fn rejects_bad_parameters_and_big_grids() {
        let g = line(41);
        let u = GridFunction::constant(&g, 0.0);
        assert!(doubling_max(&u, 0.0, 1.0).is_err());
        let big =
            DomainGeometry::new(1, 1.0, DOUBLING_POINT_CAP + 1, Extension::ConstantTail).unwrap();
        let u = GridFunction::constant(&big, 0.0);
        assert!(matches!(
            doubling_max(&u, 1.0, 1.0),
            Err(Error::GridTooLarge { .. })
        ));
    }
}
