//! Quadrature for the half-Laplacian
//!
//! ```text
//! (-Lap)^{1/2} u(x) = c_n PV int (u(x) - u(x+z)) / |z|^{n+1} dz
//! ```
//!
//! split at radius `kappa` into a near part, evaluated by a second-order
//! Taylor correction, and a far part, evaluated by integrating the kernel
//! exactly over each grid cell (clipped to `|z| >= kappa`) and sampling `u`
//! at the cell node. Every far weight is positive, so the discrete operator
//! is monotone.
//!
//! Beyond the window, periodic grids use the exact image sum in 1D and a
//! truncated image sum with a mean-value tail in 2D; constant-tail grids
//! integrate the clamped extension in closed form in 1D and use a
//! boundary-mean tail beyond the truncation disc in 2D.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{DomainGeometry, Extension, GridFunction};
use crate::scalar::Real;

/// `c(n, 1/2)` normalised so that the Fourier symbol is `|xi|`.
pub fn normalization_constant<T: Real>(n: usize) -> Result<T> {
    match n {
        1 => Ok(T::FRAC_1_PI()),
        2 => Ok(T::FRAC_1_PI() / T::lit(2.0)),
        _ => Err(Error::UnsupportedDimension(n)),
    }
}

fn c_norm_f64(n: usize) -> f64 {
    if n == 1 {
        std::f64::consts::FRAC_1_PI
    } else {
        0.5 * std::f64::consts::FRAC_1_PI
    }
}

/// Coefficient `nu` of the near-field correction `I_kappa(phi) = -nu * Lap_h phi`.
fn near_coefficient(n: usize, kappa: f64) -> f64 {
    if n == 1 {
        // -c * phi'' * int_{-k}^{k} z^2/z^2 dz / 2
        c_norm_f64(1) * kappa
    } else {
        // -c/2 * Lap phi * int_{B_k} z_1^2 / |z|^3 dz = -c/2 * Lap phi * pi * k
        c_norm_f64(2) * std::f64::consts::PI * kappa / 2.0
    }
}

#[derive(Clone, Debug)]
enum FarField<T> {
    /// Folded circulant weights, `far_i = sum_m w[m] (u_i - u_{i+m mod N})`.
    Periodic1D { weights: Vec<T> },
    /// `weights[j]` for an interior offset `j`, `tail[j]` for the last
    /// in-window point at offset `j`, which also carries the clamped half-line.
    Clamped1D { weights: Vec<T>, tail: Vec<T> },
    /// Folded weights indexed `my * N + mx`, summed over a square of whole
    /// periods; `mean_tail` is the kernel mass outside that square and
    /// multiplies `u_i - mean(u)`.
    Periodic2D { weights: Vec<T>, mean_tail: T },
    /// In-window weights by offset, a `(2N-1)^2` table centred at zero offset,
    /// plus per-point weights of the exterior strips and corner quadrants,
    /// attached to the boundary values they are clamped to.
    Clamped2D {
        window: Vec<T>,
        exterior: Vec<Vec<(usize, T)>>,
    },
}

/// Precomputed near/far quadrature for one geometry and cutoff radius.
#[derive(Clone, Debug)]
pub struct KernelQuadrature<T> {
    geometry: DomainGeometry<T>,
    kappa: T,
    c_norm: T,
    near: T,
    tail_radius: T,
    far: FarField<T>,
}

impl<T: Real> KernelQuadrature<T> {
    /// Quadrature with the default cutoff `kappa = h`.
    pub fn standard(geometry: &DomainGeometry<T>) -> Result<Self> {
        Self::new(geometry, geometry.spacing())
    }

    pub fn new(geometry: &DomainGeometry<T>, kappa: T) -> Result<Self> {
        let n = geometry.dimension();
        let c_norm = normalization_constant::<T>(n)?;
        let h = geometry.spacing().to_f64_lossy();
        let k = kappa.to_f64_lossy();
        let r = geometry.half_width().to_f64_lossy();
        if !(k > 0.0) || !k.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "kappa must be positive, got {k}"
            )));
        }
        if k >= r - h {
            return Err(Error::InvalidArgument(format!(
                "kappa = {k} must be smaller than the half width minus one cell ({})",
                r - h
            )));
        }
        let npts = geometry.points_per_axis();
        let (far, tail_radius) = match (n, geometry.extension()) {
            (1, Extension::Periodic) => (periodic_1d(npts, h, k), f64::INFINITY),
            (1, Extension::ConstantTail) => (clamped_1d(npts, h, k), f64::INFINITY),
            (_, Extension::Periodic) => {
                let half_side = (PERIOD_LAYERS as f64 + 0.5) * npts as f64 * h;
                (periodic_2d(npts, h, k, half_side), half_side)
            }
            (_, Extension::ConstantTail) => (clamped_2d(npts, h, k), f64::INFINITY),
        };
        Ok(Self {
            geometry: geometry.clone(),
            kappa,
            c_norm,
            near: T::lit(near_coefficient(n, k)),
            tail_radius: T::lit(tail_radius),
            far,
        })
    }

    pub fn geometry(&self) -> &DomainGeometry<T> {
        &self.geometry
    }

    pub fn kappa(&self) -> T {
        self.kappa
    }

    pub fn c_norm(&self) -> T {
        self.c_norm
    }

    /// Truncation radius of the explicit offset sum (infinite when the tail is exact).
    pub fn tail_radius(&self) -> T {
        self.tail_radius
    }

    /// Near-field part `I_kappa(phi)` at grid point `idx`.
    pub fn near_at(&self, phi: &GridFunction<T>, idx: usize) -> T {
        let h = self.geometry.spacing();
        let mut lap = T::zero();
        for axis in 0..self.geometry.dimension() {
            let mut e = [0isize; 2];
            e[axis] = 1;
            let fwd = phi.at_offset(idx, e);
            e[axis] = -1;
            let bwd = phi.at_offset(idx, e);
            lap += fwd + bwd - phi.get(idx) - phi.get(idx);
        }
        -self.near * lap / (h * h)
    }

    /// Far-field part `I^kappa(u)` at grid point `idx`.
    pub fn far_at(&self, u: &GridFunction<T>, idx: usize) -> T {
        let vals = u.values();
        let ui = vals[idx];
        match &self.far {
            FarField::Periodic1D { weights } => {
                let n = vals.len();
                let mut s = T::zero();
                for (m, &w) in weights.iter().enumerate().skip(1) {
                    s += w * (ui - vals[(idx + m) % n]);
                }
                s
            }
            FarField::Clamped1D { weights, tail } => {
                let n = vals.len();
                let mut s = T::zero();
                let right = n - 1 - idx;
                for j in 1..right {
                    s += weights[j] * (ui - vals[idx + j]);
                }
                if right >= 1 {
                    s += tail[right] * (ui - vals[n - 1]);
                }
                let left = idx;
                for j in 1..left {
                    s += weights[j] * (ui - vals[idx - j]);
                }
                if left >= 1 {
                    s += tail[left] * (ui - vals[0]);
                }
                s
            }
            FarField::Periodic2D { weights, mean_tail } => {
                let n = self.geometry.points_per_axis();
                let [ix, iy] = self.geometry.multi_index(idx);
                let mut s = T::zero();
                for my in 0..n {
                    let row = ((iy + my) % n) * n;
                    for mx in 0..n {
                        let w = weights[my * n + mx];
                        if w != T::zero() {
                            s += w * (ui - vals[row + (ix + mx) % n]);
                        }
                    }
                }
                s + *mean_tail * (ui - u.mean())
            }
            FarField::Clamped2D { window, exterior } => {
                let n = self.geometry.points_per_axis();
                let span = 2 * n - 1;
                let [ix, iy] = self.geometry.multi_index(idx);
                let mut s = T::zero();
                for jy in 0..n {
                    let row = (jy + n - 1 - iy) * span + n - 1 - ix;
                    for jx in 0..n {
                        s += window[row + jx] * (ui - vals[jy * n + jx]);
                    }
                }
                for &(j, w) in &exterior[idx] {
                    s += w * (ui - vals[j]);
                }
                s
            }
        }
    }

    /// Sum of all stencil weights at `idx`, i.e. the diagonal entry of the
    /// discrete operator. Tail terms are included.
    pub fn diagonal_at(&self, idx: usize) -> T {
        let h = self.geometry.spacing();
        let near =
            self.near * T::lit(2.0) * T::from_usize_lossy(self.geometry.dimension()) / (h * h);
        let far = match &self.far {
            FarField::Periodic1D { weights } => weights.iter().copied().sum(),
            FarField::Clamped1D { weights, tail } => {
                let n = self.geometry.points_per_axis();
                let right = n - 1 - idx;
                let left = idx;
                let side = |len: usize| -> T {
                    if len == 0 {
                        T::zero()
                    } else {
                        weights[1..len].iter().copied().sum::<T>() + tail[len]
                    }
                };
                side(right) + side(left)
            }
            FarField::Periodic2D { weights, mean_tail } => {
                weights.iter().copied().sum::<T>() + *mean_tail
            }
            FarField::Clamped2D { window, exterior } => {
                let n = self.geometry.points_per_axis();
                let span = 2 * n - 1;
                let [ix, iy] = self.geometry.multi_index(idx);
                let mut s = T::zero();
                for jy in 0..n {
                    let row = (jy + n - 1 - iy) * span + n - 1 - ix;
                    s += window[row..row + n].iter().copied().sum::<T>();
                }
                s + exterior[idx].iter().map(|e| e.1).sum::<T>()
            }
        };
        near + far
    }

    /// Largest diagonal entry over the grid.
    pub fn max_diagonal(&self) -> T {
        (0..self.geometry.len())
            .map(|i| self.diagonal_at(i))
            .fold(T::zero(), T::max)
    }

    /// `(I_kappa + I^kappa)(u)` at one point.
    pub fn eval_at(&self, u: &GridFunction<T>, idx: usize) -> T {
        self.near_at(u, idx) + self.far_at(u, idx)
    }

    /// The discrete operator applied at every grid point.
    pub fn apply(&self, u: &GridFunction<T>) -> Result<GridFunction<T>> {
        self.geometry.check_same(u.geometry())?;
        let values: Vec<T> = (0..u.len())
            .into_par_iter()
            .map(|i| self.eval_at(u, i))
            .collect();
        Ok(GridFunction::from_parts_unchecked(
            self.geometry.clone(),
            values,
        ))
    }
}

/// `c * int over [lo, hi] intersected with [kappa, inf) of dz / z^2`.
fn clipped_cell_1d(lo: f64, hi: f64, kappa: f64) -> f64 {
    let c = c_norm_f64(1);
    let lo = lo.max(kappa);
    if hi.is_infinite() {
        return c / lo;
    }
    let hi = hi.max(kappa);
    c * (1.0 / lo - 1.0 / hi)
}

fn periodic_1d<T: Real>(n: usize, h: f64, kappa: f64) -> FarField<T> {
    use std::f64::consts::PI;
    let c = c_norm_f64(1);
    // g(j) = (c/h) / (j^2 - 1/4) is the full-cell weight; folded over all
    // periodic images it has the closed form below.
    let nf = n as f64;
    let mut w = vec![0.0f64; n];
    for (m, wm) in w.iter_mut().enumerate().skip(1) {
        let mf = m as f64;
        let cot = |x: f64| 1.0 / x.tan();
        *wm = (c / h) * (PI / nf) * (cot(PI * (mf - 0.5) / nf) - cot(PI * (mf + 0.5) / nf));
    }
    // Cells that reach inside the cutoff get their clipped weight instead.
    let jc = (kappa / h + 0.5).ceil() as usize;
    for j in 1..=jc.min(n - 1) {
        let jf = j as f64;
        let full = (c / h) / (jf * jf - 0.25);
        let clipped = clipped_cell_1d((jf - 0.5) * h, (jf + 0.5) * h, kappa);
        w[j] += clipped - full;
        w[n - j] += clipped - full;
    }
    FarField::Periodic1D {
        weights: w.into_iter().map(T::lit).collect(),
    }
}

fn clamped_1d<T: Real>(n: usize, h: f64, kappa: f64) -> FarField<T> {
    let mut weights = vec![T::zero(); n + 1];
    let mut tail = vec![T::zero(); n + 1];
    for j in 1..=n {
        let jf = j as f64;
        weights[j] = T::lit(clipped_cell_1d((jf - 0.5) * h, (jf + 0.5) * h, kappa));
        tail[j] = T::lit(clipped_cell_1d((jf - 0.5) * h, f64::INFINITY, kappa));
    }
    FarField::Clamped1D { weights, tail }
}

/// Whole periods on each side of the central period in the 2D periodic sum.
const PERIOD_LAYERS: usize = 3;

/// Subdivision depth for cells cut by the circle `|z| = kappa`.
const CUT_DEPTH: u32 = 10;

const GAUSS3: [(f64, f64); 3] = [
    (-0.774_596_669_241_483_4, 5.0 / 9.0),
    (0.0, 8.0 / 9.0),
    (0.774_596_669_241_483_4, 5.0 / 9.0),
];

/// `y / (x (sqrt(x^2 + y^2) + x))`: antiderivative in `y` of
/// `int_x^inf (s^2 + y^2)^{-3/2} ds`, stable for `x > 0` and any `y`.
fn strip_primitive(x: f64, y: f64) -> f64 {
    if y.is_infinite() {
        return y.signum() / x;
    }
    y / (x * ((x * x + y * y).sqrt() + x))
}

/// `int over [x0, x1] x [y0, y1] of |z|^{-3}` for a rectangle, possibly
/// unbounded, whose closure avoids the origin.
fn rect_mass(x0: f64, x1: f64, y0: f64, y1: f64) -> f64 {
    if x0 > 0.0 {
        let strip = |x: f64| {
            if x.is_infinite() {
                0.0
            } else {
                strip_primitive(x, y1) - strip_primitive(x, y0)
            }
        };
        strip(x0) - strip(x1)
    } else if x1 < 0.0 {
        rect_mass(-x1, -x0, y0, y1)
    } else if y0 > 0.0 {
        rect_mass(y0, y1, x0, x1)
    } else if y1 < 0.0 {
        rect_mass(-y1, -y0, x0, x1)
    } else {
        f64::INFINITY
    }
}

fn axis_gap(a: f64, b: f64) -> f64 {
    if a > 0.0 {
        a
    } else if b < 0.0 {
        -b
    } else {
        0.0
    }
}

/// Mass of `|z|^{-3}` over a bounded rectangle minus the disc `|z| < kappa`.
fn clipped_mass(x0: f64, x1: f64, y0: f64, y1: f64, kappa: f64, depth: u32) -> f64 {
    let rmin = axis_gap(x0, x1).hypot(axis_gap(y0, y1));
    if rmin >= kappa {
        return rect_mass(x0, x1, y0, y1);
    }
    let rmax = x0.abs().max(x1.abs()).hypot(y0.abs().max(y1.abs()));
    if rmax <= kappa {
        return 0.0;
    }
    let (xm, ym) = ((x0 + x1) / 2.0, (y0 + y1) / 2.0);
    if depth == 0 {
        let (hx, hy) = ((x1 - x0) / 2.0, (y1 - y0) / 2.0);
        let mut s = 0.0;
        for &(gx, wx) in &GAUSS3 {
            for &(gy, wy) in &GAUSS3 {
                let r = (xm + gx * hx).hypot(ym + gy * hy);
                if r >= kappa {
                    s += wx * wy / (r * r * r);
                }
            }
        }
        return s * hx * hy;
    }
    clipped_mass(x0, xm, y0, ym, kappa, depth - 1)
        + clipped_mass(xm, x1, y0, ym, kappa, depth - 1)
        + clipped_mass(x0, xm, ym, y1, kappa, depth - 1)
        + clipped_mass(xm, x1, ym, y1, kappa, depth - 1)
}

/// Kernel mass of a rectangle outside the disc of radius `kappa`. Unbounded
/// rectangles must not contain the origin.
fn region_mass(x0: f64, x1: f64, y0: f64, y1: f64, kappa: f64) -> f64 {
    let (bx0, bx1) = (x0.max(-kappa), x1.min(kappa));
    let (by0, by1) = (y0.max(-kappa), y1.min(kappa));
    if bx0 >= bx1 || by0 >= by1 {
        return rect_mass(x0, x1, y0, y1);
    }
    if [x0, x1, y0, y1].iter().all(|v| v.is_finite()) {
        return clipped_mass(x0, x1, y0, y1, kappa, CUT_DEPTH);
    }
    rect_mass(x0, x1, y0, y1) - rect_mass(bx0, bx1, by0, by1)
        + clipped_mass(bx0, bx1, by0, by1, kappa, CUT_DEPTH)
}

fn cell_mass(ox: isize, oy: isize, h: f64, kappa: f64) -> f64 {
    if ox == 0 && oy == 0 {
        return 0.0;
    }
    let (cx, cy) = (ox as f64 * h, oy as f64 * h);
    region_mass(
        cx - h / 2.0,
        cx + h / 2.0,
        cy - h / 2.0,
        cy + h / 2.0,
        kappa,
    )
}

fn periodic_2d<T: Real>(n: usize, h: f64, kappa: f64, half_side: f64) -> FarField<T> {
    let c = c_norm_f64(2);
    let reach = (half_side / h + 0.5).ceil() as isize;
    let ni = n as isize;
    let clip = |o: isize| {
        let mid = o as f64 * h;
        (
            (mid - h / 2.0).max(-half_side),
            (mid + h / 2.0).min(half_side),
        )
    };
    let mut w = vec![0.0f64; n * n];
    for oy in -reach..=reach {
        let (y0, y1) = clip(oy);
        if y0 >= y1 {
            continue;
        }
        for ox in -reach..=reach {
            let (x0, x1) = clip(ox);
            let (mx, my) = (ox.rem_euclid(ni) as usize, oy.rem_euclid(ni) as usize);
            if x0 >= x1 || (mx == 0 && my == 0) {
                continue;
            }
            w[my * n + mx] += c * region_mass(x0, x1, y0, y1, kappa);
        }
    }
    // mass of |z|^{-3} outside the square [-a, a]^2 is 4 sqrt(2) / a
    let mean_tail = c * 4.0 * std::f64::consts::SQRT_2 / half_side;
    FarField::Periodic2D {
        weights: w.into_iter().map(T::lit).collect(),
        mean_tail: T::lit(mean_tail),
    }
}

fn clamped_2d<T: Real>(n: usize, h: f64, kappa: f64) -> FarField<T> {
    let c = c_norm_f64(2);
    let ni = n as isize;
    let mut window = Vec::with_capacity((2 * n - 1) * (2 * n - 1));
    for oy in (1 - ni)..ni {
        for ox in (1 - ni)..ni {
            window.push(T::lit(c * cell_mass(ox, oy, h, kappa)));
        }
    }
    let half = h / 2.0;
    let inf = f64::INFINITY;
    let exterior = (0..n * n)
        .into_par_iter()
        .map(|i| {
            let (ix, iy) = (i % n, i / n);
            let right = (n - 1 - ix) as f64 * h + half;
            let left = ix as f64 * h + half;
            let top = (n - 1 - iy) as f64 * h + half;
            let bottom = iy as f64 * h + half;
            let mut ext = Vec::with_capacity(4 * n + 4);
            let mut push = |j: usize, mass: f64| ext.push((j, T::lit(c * mass)));
            for j in 0..n {
                let ylo = (j as f64 - iy as f64) * h - half;
                let xlo = (j as f64 - ix as f64) * h - half;
                push(j * n + n - 1, region_mass(right, inf, ylo, ylo + h, kappa));
                push(j * n, region_mass(left, inf, ylo, ylo + h, kappa));
                push((n - 1) * n + j, region_mass(top, inf, xlo, xlo + h, kappa));
                push(j, region_mass(bottom, inf, xlo, xlo + h, kappa));
            }
            push(n * n - 1, region_mass(right, inf, top, inf, kappa));
            push((n - 1) * n, region_mass(left, inf, top, inf, kappa));
            push(n - 1, region_mass(right, inf, bottom, inf, kappa));
            push(0, region_mass(left, inf, bottom, inf, kappa));
            ext
        })
        .collect();
    FarField::Clamped2D { window, exterior }
}

/// Near-field part `I_kappa(phi)` at a grid point.
pub fn eval_i_kappa<T: Real>(phi: &GridFunction<T>, idx: usize, kappa: T) -> Result<T> {
    let g = phi.geometry();
    g.check_index(idx)?;
    if !(kappa > T::zero()) {
        return Err(Error::InvalidArgument(format!(
            "kappa must be positive, got {kappa}"
        )));
    }
    let h = g.spacing();
    let nu = T::lit(near_coefficient(g.dimension(), kappa.to_f64_lossy()));
    let mut lap = T::zero();
    for axis in 0..g.dimension() {
        let mut e = [0isize; 2];
        e[axis] = 1;
        let fwd = phi.at_offset(idx, e);
        e[axis] = -1;
        let bwd = phi.at_offset(idx, e);
        lap += fwd + bwd - phi.get(idx) - phi.get(idx);
    }
    Ok(-nu * lap / (h * h))
}

/// Far-field part `I^kappa(u)` at a grid point.
pub fn eval_i_sup_kappa<T: Real>(u: &GridFunction<T>, idx: usize, kappa: T) -> Result<T> {
    u.geometry().check_index(idx)?;
    let q = KernelQuadrature::new(u.geometry(), kappa)?;
    Ok(q.far_at(u, idx))
}

/// `(-Lap)^{1/2} u` on the whole grid with `kappa = h`.
pub fn fraclap<T: Real>(u: &GridFunction<T>) -> Result<GridFunction<T>> {
    KernelQuadrature::standard(u.geometry())?.apply(u)
}
