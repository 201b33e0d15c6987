//! Sup- and inf-convolutions over grid offsets.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq)]
pub struct EnvelopeResult<T> {
    pub envelope: GridFunction<T>,
    /// Physical offset `y` attaining the extremum at each point.
    pub argmax_offsets: Vec<[T; 2]>,
    pub epsilon: T,
}

/// Search radius `sqrt(2 |u|_inf eps)`; no offset outside it can beat `y = 0`.
pub fn search_radius<T: Real>(u: &GridFunction<T>, epsilon: T) -> T {
    (T::lit(2.0) * u.sup_norm() * epsilon).sqrt()
}

/// `u^eps(x) = max_y [u(x + y) - |y|^2 / eps]` over grid offsets within the search radius.
pub fn sup_convolution<T: Real>(u: &GridFunction<T>, epsilon: T) -> Result<EnvelopeResult<T>> {
    sup_convolution_within(u, epsilon, search_radius(u, epsilon))
}

/// Same as [`sup_convolution`] with an explicit search radius.
pub fn sup_convolution_within<T: Real>(
    u: &GridFunction<T>,
    epsilon: T,
    radius: T,
) -> Result<EnvelopeResult<T>> {
    if !(epsilon > T::zero()) || !epsilon.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    let g = u.geometry();
    let h = g.spacing();
    let reach = (radius / h).floor().to_isize().unwrap_or(0);
    let tol = h * T::lit(1e-9);
    let ys = if g.dimension() == 1 {
        0..=0
    } else {
        -reach..=reach
    };
    let mut offsets: Vec<([isize; 2], [T; 2], T)> = Vec::new();
    for oy in ys {
        for ox in -reach..=reach {
            let y = [
                T::from_isize(ox).unwrap() * h,
                T::from_isize(oy).unwrap() * h,
            ];
            let n2 = y[0] * y[0] + y[1] * y[1];
            if n2.sqrt() <= radius + tol {
                offsets.push(([ox, oy], y, n2 / epsilon));
            }
        }
    }
    // nearest offsets first, so ties resolve to the smallest |y|
    offsets.sort_by(|a, b| {
        a.2.partial_cmp(&b.2)
            .unwrap()
            .then((a.0[1], a.0[0]).cmp(&(b.0[1], b.0[0])))
    });
    let results: Vec<(T, [T; 2])> = (0..u.len())
        .into_par_iter()
        .map(|i| {
            let mut best = (u.get(i), [T::zero(); 2]);
            for (off, y, pen) in &offsets {
                let v = u.at_offset(i, *off) - *pen;
                if v > best.0 {
                    best = (v, *y);
                }
            }
            best
        })
        .collect();
    let (values, argmax_offsets): (Vec<T>, Vec<[T; 2]>) = results.into_iter().unzip();
    Ok(EnvelopeResult {
        envelope: GridFunction::from_parts_unchecked(g.clone(), values),
        argmax_offsets,
        epsilon,
    })
}

/// `v_eps = -((-u)^eps)`.
pub fn inf_convolution<T: Real>(u: &GridFunction<T>, epsilon: T) -> Result<EnvelopeResult<T>> {
    let neg = u.map(|v| -v);
    let mut res = sup_convolution(&neg, epsilon)?;
    res.envelope = res.envelope.map(|v| -v);
    Ok(res)
}

/// `|u^eps - u|_inf` for each epsilon.
pub fn gamma_gap<T: Real>(u: &GridFunction<T>, epsilons: &[T]) -> Result<Vec<T>> {
    epsilons
        .iter()
        .map(|&eps| sup_convolution(u, eps)?.envelope.sup_distance(u))
        .collect()
}

/// Smallest discrete second difference of `v` over interior points, along every axis.
pub fn min_second_difference<T: Real>(v: &GridFunction<T>) -> T {
    let g = v.geometry();
    let n = g.points_per_axis();
    let mut worst = T::infinity();
    for i in 0..v.len() {
        let mi = g.multi_index(i);
        for axis in 0..g.dimension() {
            if mi[axis] == 0 || mi[axis] + 1 == n {
                continue;
            }
            let mut e = [0isize; 2];
            e[axis] = 1;
            let fwd = v.at_offset(i, e);
            e[axis] = -1;
            let bwd = v.at_offset(i, e);
            worst = worst.min(fwd + bwd - v.get(i) - v.get(i));
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{DomainGeometry, Extension};

    fn line() -> DomainGeometry<f64> {
        DomainGeometry::new(1, 1.0, 2001, Extension::ConstantTail).unwrap()
    }

    #[test]
    fn constant_is_fixed() {
        let u = GridFunction::constant(&line(), 1.5);
        let s = sup_convolution(&u, 0.3).unwrap();
        assert_eq!(s.envelope, u);
        assert!(s.argmax_offsets.iter().all(|y| y == &[0.0, 0.0]));
        assert_eq!(inf_convolution(&u, 0.3).unwrap().envelope, u);
        assert!(gamma_gap(&u, &[0.4, 0.2])
            .unwrap()
            .iter()
            .all(|&g| g == 0.0));
    }

    #[test]
    fn absolute_value_kink() {
        let g = line();
        let u = GridFunction::from_fn(&g, |x| x[0].abs());
        let o = g.origin_index().unwrap();
        let eps = 0.2;
        let s = sup_convolution(&u, eps).unwrap();
        assert!((s.envelope.get(o) - eps / 4.0).abs() <= g.spacing());
        assert!((s.argmax_offsets[o][0].abs() - eps / 2.0).abs() <= g.spacing());
        let i = inf_convolution(&u, eps).unwrap();
        assert_eq!(i.envelope.get(o), 0.0);
    }

    #[test]
    fn duality_and_semiconvexity() {
        let g = line();
        let u = GridFunction::from_fn(&g, |x| (3.0 * x[0]).sin() * x[0].abs());
        let eps = 0.05;
        let neg = u.map(|v| -v);
        let lhs = inf_convolution(&u, eps).unwrap().envelope;
        let rhs = sup_convolution(&neg, eps).unwrap().envelope.map(|v| -v);
        assert_eq!(lhs, rhs);
        let s = sup_convolution(&u, eps).unwrap().envelope;
        let h = g.spacing();
        assert!(min_second_difference(&s) >= -2.0 * h * h / eps - 1e-14);
    }

    #[test]
    fn rejects_nonpositive_epsilon() {
        let u = GridFunction::constant(&line(), 0.0);
        assert!(sup_convolution(&u, 0.0).is_err());
        assert!(inf_convolution(&u, -1.0).is_err());
    }
}
