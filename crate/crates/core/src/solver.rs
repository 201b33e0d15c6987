//! Monotone upwind discretisation of the max-min equation and its damped
//! pseudo-time iteration.
//!
//! The discrete operator at a grid point is
//!
//! ```text
//! F(u)_i = max_alpha min_beta [ f + c u_i + b . D_up u_i + a (-Lap)^{1/2}_h u_i ]
//! ```
//!
//! where `D_up` takes the backward difference along axes with `b > 0` and
//! the forward difference where `b < 0`. Every off-diagonal coefficient is
//! non-positive, so `u - dt F(u)` is order preserving once `dt` is below the
//! inverse diagonal.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fraclap::KernelQuadrature;
use crate::grid::{DomainGeometry, GridFunction};
use crate::problem::{bracket_bounds, validate_assumptions, ControlGrid, ProblemSpec};
use crate::scalar::{max_or_zero, Real};

/// Saddle control pair `(alpha, beta)` chosen at each grid point.
pub type Policy = Vec<(usize, usize)>;

/// How the pseudo-time step is chosen.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StepRule {
    /// One step for the whole grid, limited by the largest diagonal.
    #[default]
    Global,
    /// Per-point step limited by the local diagonal.
    Local,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SchemeConfig<T> {
    pub tolerance: T,
    pub max_iters: usize,
    pub cfl_safety: T,
    pub damping: StepRule,
}

impl<T: Real> Default for SchemeConfig<T> {
    fn default() -> Self {
        Self {
            tolerance: T::lit(1e-8),
            max_iters: 200_000,
            cfl_safety: T::lit(0.9),
            damping: StepRule::Global,
        }
    }
}

impl<T: Real> SchemeConfig<T> {
    pub fn new(tolerance: T, max_iters: usize) -> Result<Self> {
        let cfg = Self {
            tolerance,
            max_iters,
            ..Self::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > T::zero()) || !self.tolerance.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if !(self.cfl_safety > T::zero() && self.cfl_safety < T::one()) {
            return Err(Error::InvalidArgument(format!(
                "cfl_safety must lie in (0, 1), got {}",
                self.cfl_safety
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidArgument(
                "max_iters must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverReport<T> {
    pub solution: GridFunction<T>,
    /// Sup-norm residual before each sweep, followed by the final residual.
    pub residual_history: Vec<T>,
    pub policy_alpha: Vec<usize>,
    pub policy_beta: Vec<usize>,
    pub controls: ControlGrid,
    pub bracket: (T, T),
    pub bracket_ok: bool,
    pub converged: bool,
    pub iterations: usize,
    pub final_residual: T,
    /// Smallest pseudo-time step used.
    pub time_step: T,
}

impl<T: Real> SolverReport<T> {
    pub fn alpha_label(&self, i: usize) -> &str {
        &self.controls.alphas()[self.policy_alpha[i]]
    }

    pub fn beta_label(&self, i: usize) -> &str {
        &self.controls.betas()[self.policy_beta[i]]
    }
}

/// Discrete operator for one problem, with its quadrature and step sizes.
#[derive(Clone, Debug)]
pub struct Scheme<'a, T> {
    spec: &'a ProblemSpec<T>,
    quadrature: KernelQuadrature<T>,
    steps: Vec<T>,
}

impl<'a, T: Real> Scheme<'a, T> {
    pub fn new(spec: &'a ProblemSpec<T>, cfl_safety: T, rule: StepRule) -> Result<Self> {
        let quadrature = KernelQuadrature::standard(&spec.geometry)?;
        Self::with_quadrature(spec, quadrature, cfl_safety, rule)
    }

    pub fn with_quadrature(
        spec: &'a ProblemSpec<T>,
        quadrature: KernelQuadrature<T>,
        cfl_safety: T,
        rule: StepRule,
    ) -> Result<Self> {
        spec.geometry.check_same(quadrature.geometry())?;
        let g = &spec.geometry;
        let h = g.spacing();
        let coef = &spec.coefficients;
        let pairs = coef.n_pairs();
        let diagonals: Vec<T> = (0..g.len())
            .into_par_iter()
            .map(|i| {
                let d = quadrature.diagonal_at(i);
                max_or_zero((0..pairs).map(|p| {
                    let pc = coef.at(p, i);
                    let drift = pc.b.iter().map(|b| b.abs()).sum::<T>() / h;
                    pc.c.max(T::zero()) + drift + pc.a.max(T::zero()) * d
                }))
            })
            .collect();
        let steps = match rule {
            StepRule::Global => {
                let worst = max_or_zero(diagonals.iter().copied());
                vec![cfl_safety / worst; g.len()]
            }
            StepRule::Local => diagonals.iter().map(|&d| cfl_safety / d).collect(),
        };
        if let Some(k) = steps.iter().position(|s| !s.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "scheme has a zero diagonal at point {k}; no admissible time step"
            )));
        }
        Ok(Self {
            spec,
            quadrature,
            steps,
        })
    }

    pub fn quadrature(&self) -> &KernelQuadrature<T> {
        &self.quadrature
    }

    pub fn time_step(&self) -> T {
        self.steps.iter().copied().fold(T::infinity(), T::min)
    }

    /// Residual and the saddle policy at every point.
    pub fn evaluate(&self, u: &GridFunction<T>) -> Result<(Vec<T>, Policy)> {
        self.spec.geometry.check_same(u.geometry())?;
        let lap = self.quadrature.apply(u)?;
        let g = &self.spec.geometry;
        let h = g.spacing();
        let dim = g.dimension();
        let coef = &self.spec.coefficients;
        let na = self.spec.controls.n_alpha();
        let nb = self.spec.controls.n_beta();
        let out: Vec<(T, (usize, usize))> = (0..u.len())
            .into_par_iter()
            .map(|i| {
                let ui = u.get(i);
                let mut back = [T::zero(); 2];
                let mut fwd = [T::zero(); 2];
                for axis in 0..dim {
                    let mut e = [0isize; 2];
                    e[axis] = 1;
                    fwd[axis] = (u.at_offset(i, e) - ui) / h;
                    e[axis] = -1;
                    back[axis] = (ui - u.at_offset(i, e)) / h;
                }
                let li = lap.get(i);
                let mut best = (T::neg_infinity(), (0, 0));
                for alpha in 0..na {
                    let mut inner = (T::infinity(), 0);
                    for beta in 0..nb {
                        let pc = coef.at(alpha * nb + beta, i);
                        let mut drift = T::zero();
                        for axis in 0..dim {
                            let b = pc.b[axis];
                            if b > T::zero() {
                                drift += b * back[axis];
                            } else if b < T::zero() {
                                drift += b * fwd[axis];
                            }
                        }
                        let hval = pc.f + pc.c * ui + drift + pc.a * li;
                        if hval < inner.0 {
                            inner = (hval, beta);
                        }
                    }
                    if inner.0 > best.0 {
                        best = (inner.0, (alpha, inner.1));
                    }
                }
                best
            })
            .collect();
        Ok(out.into_iter().unzip())
    }

    pub fn residual(&self, u: &GridFunction<T>) -> Result<GridFunction<T>> {
        let (r, _) = self.evaluate(u)?;
        Ok(GridFunction::from_parts_unchecked(u.geometry().clone(), r))
    }

    /// One damped sweep `u - dt F(u)`; also returns the sup-norm of `F(u)`.
    pub fn sweep(&self, u: &GridFunction<T>) -> Result<(GridFunction<T>, T)> {
        let (r, _) = self.evaluate(u)?;
        let sup = max_or_zero(r.iter().map(|v| v.abs()));
        let next = u
            .values()
            .iter()
            .zip(&r)
            .zip(&self.steps)
            .map(|((&v, &res), &dt)| v - dt * res)
            .collect();
        Ok((
            GridFunction::from_parts_unchecked(u.geometry().clone(), next),
            sup,
        ))
    }
}

/// `max_alpha min_beta [f + c u + b . D_up u + a (-Lap)^{1/2} u]` at every point.
pub fn residual<T: Real>(u: &GridFunction<T>, spec: &ProblemSpec<T>) -> Result<GridFunction<T>> {
    spec.geometry.check_same(u.geometry())?;
    Scheme::new(spec, T::lit(0.5), StepRule::Global)?.residual(u)
}

pub fn solve<T: Real>(spec: &ProblemSpec<T>, config: &SchemeConfig<T>) -> Result<SolverReport<T>> {
    config.validate()?;
    let report = validate_assumptions(spec)?;
    if !report.pass {
        return Err(Error::AssumptionViolated(report.reasons.join("; ")));
    }
    let bracket = bracket_bounds(&report)?;
    let scheme = Scheme::new(spec, config.cfl_safety, config.damping)?;
    let start = T::zero().max(bracket.0).min(bracket.1);
    let u0 = GridFunction::constant(&spec.geometry, start);
    solve_from(&scheme, u0, config, bracket)
}

/// Iterates the scheme from a given start until the residual drops below tolerance.
pub fn solve_from<T: Real>(
    scheme: &Scheme<'_, T>,
    mut u: GridFunction<T>,
    config: &SchemeConfig<T>,
    bracket: (T, T),
) -> Result<SolverReport<T>> {
    config.validate()?;
    let mut history = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    loop {
        let (next, res) = scheme.sweep(&u)?;
        history.push(res);
        if !res.is_finite() {
            return Err(Error::NonFinite {
                field: "residual".into(),
                index: iterations,
            });
        }
        if res <= config.tolerance {
            converged = true;
            break;
        }
        if iterations >= config.max_iters {
            break;
        }
        u = next;
        iterations += 1;
    }
    let (r, policy) = scheme.evaluate(&u)?;
    let final_residual = max_or_zero(r.iter().map(|v| v.abs()));
    let tol = config.tolerance;
    let bracket_ok = u.min() >= bracket.0 - tol && u.max() <= bracket.1 + tol;
    let (policy_alpha, policy_beta) = policy.into_iter().unzip();
    Ok(SolverReport {
        solution: u,
        residual_history: history,
        policy_alpha,
        policy_beta,
        controls: scheme.spec.controls.clone(),
        bracket,
        bracket_ok,
        converged,
        iterations,
        final_residual,
        time_step: scheme.time_step(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComparisonOutcome<T> {
    /// `u_sub <= u_super + slack` at every point.
    pub ordered: bool,
    /// `max (u_sub - u_super)`.
    pub worst_gap: T,
    pub slack: T,
}

/// Checks the discrete comparison principle for a sub/super pair.
///
/// Both inputs must satisfy their inequalities within `tol`; the allowed
/// slack is `2 tol / lambda`.
pub fn comparison_check<T: Real>(
    spec: &ProblemSpec<T>,
    u_sub: &GridFunction<T>,
    u_super: &GridFunction<T>,
    tol: T,
) -> Result<ComparisonOutcome<T>> {
    spec.geometry.check_same(u_sub.geometry())?;
    spec.geometry.check_same(u_super.geometry())?;
    let report = validate_assumptions(spec)?;
    if !(report.lambda > T::zero()) {
        return Err(Error::AssumptionViolated(format!(
            "A3 violated: lambda = {} is not positive",
            report.lambda
        )));
    }
    let scheme = Scheme::new(spec, T::lit(0.5), StepRule::Global)?;
    let r_sub = scheme.residual(u_sub)?;
    let r_sup = scheme.residual(u_super)?;
    let mut offending = Vec::new();
    let mut worst = T::zero();
    for i in 0..u_sub.len() {
        let excess = (r_sub.get(i) - tol).max(-tol - r_sup.get(i));
        if excess > T::zero() {
            offending.push(i);
            worst = worst.max(excess);
        }
    }
    if !offending.is_empty() {
        return Err(Error::PreconditionViolated {
            points: offending,
            worst: worst.to_f64_lossy(),
        });
    }
    let worst_gap = u_sub
        .values()
        .iter()
        .zip(u_super.values())
        .map(|(&a, &b)| a - b)
        .fold(T::neg_infinity(), T::max);
    let slack = T::lit(2.0) * tol / report.lambda;
    Ok(ComparisonOutcome {
        ordered: worst_gap <= slack,
        worst_gap,
        slack,
    })
}

/// Manufactured periodic problem on `[-pi, pi)` with exact solution `cos x`:
/// `a = 1`, `b = 1`, `c = 2`, `f = sin x - 3 cos x`.
pub fn manufactured_cosine<T: Real>(points: usize) -> Result<ProblemSpec<T>> {
    let g = DomainGeometry::periodic_pi(1, points)?;
    ProblemSpec::from_fn(g, ControlGrid::single(), |_, _, x| {
        crate::problem::PointCoefficients {
            a: T::one(),
            b: [T::one(), T::zero()],
            c: T::lit(2.0),
            f: x[0].sin() - T::lit(3.0) * x[0].cos(),
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Extension;
    use crate::problem::PointCoefficients;

    fn line(points: usize) -> DomainGeometry<f64> {
        DomainGeometry::new(1, 2.0, points, Extension::ConstantTail).unwrap()
    }

    #[test]
    fn residual_of_constant_solution_vanishes() {
        let spec = ProblemSpec::constant(line(33), 1.0, [0.0, 0.0], 1.0, -2.0).unwrap();
        let u = GridFunction::constant(&spec.geometry, 2.0);
        assert!(residual(&u, &spec).unwrap().sup_norm() < 1e-14);
    }

    #[test]
    fn residual_at_zero_is_maxmin_of_f() {
        let g = line(17);
        let controls = ControlGrid::indexed(2, 2);
        // rows alpha, columns beta: min over beta = (-1, -3); max over alpha = -1
        let table = [[-1.0, 1.0], [3.0, -3.0]];
        let spec = ProblemSpec::from_fn(g.clone(), controls, |a, b, _| PointCoefficients {
            a: 1.0,
            b: [0.0, 0.0],
            c: 1.0,
            f: table[a][b],
        })
        .unwrap();
        let u = GridFunction::constant(&g, 0.0);
        let r = residual(&u, &spec).unwrap();
        assert!(r.values().iter().all(|&v| v == -1.0));
    }

    #[test]
    fn constant_problem_solves_exactly() {
        let spec = ProblemSpec::constant(line(33), 1.0, [0.0, 0.0], 1.0, -2.0).unwrap();
        let cfg = SchemeConfig::new(1e-10, 10_000).unwrap();
        let rep = solve(&spec, &cfg).unwrap();
        assert!(rep.converged && rep.bracket_ok);
        assert!(rep
            .solution
            .values()
            .iter()
            .all(|&v| (v - 2.0).abs() < 1e-8));
        assert!(rep.policy_alpha.iter().all(|&a| a == 0));
    }

    #[test]
    fn rejects_bad_config() {
        assert!(SchemeConfig::<f64>::new(0.0, 10).is_err());
        let cfg = SchemeConfig {
            cfl_safety: 1.0,
            ..SchemeConfig::<f64>::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn solve_refuses_failed_assumptions() {
        let spec = ProblemSpec::constant(line(17), 1.0, [0.0, 0.0], 0.0, 1.0).unwrap();
        assert!(matches!(
            solve(&spec, &SchemeConfig::default()),
            Err(Error::AssumptionViolated(_))
        ));
    }

    #[test]
    fn comparison_examples() {
        let spec = ProblemSpec::constant(line(33), 1.0, [0.0, 0.0], 1.0, -2.0).unwrap();
        let g = &spec.geometry;
        let tol = 1e-9;
        let lo = GridFunction::constant(g, -2.0);
        let hi = GridFunction::constant(g, 2.0);
        let out = comparison_check(&spec, &lo, &hi, tol).unwrap();
        assert!(out.ordered);
        let exact = GridFunction::constant(g, 2.0);
        let out = comparison_check(&spec, &exact, &exact, tol).unwrap();
        assert!(out.ordered && out.worst_gap == 0.0);
        let err = comparison_check(&spec, &hi.map(|v| v + 1.0), &hi, tol).unwrap_err();
        assert!(matches!(err, Error::PreconditionViolated { .. }));
    }

    #[test]
    fn tables_with_wrong_geometry_are_rejected() {
        let spec = ProblemSpec::constant(line(33), 1.0, [0.0, 0.0], 1.0, -2.0).unwrap();
        let other = GridFunction::constant(&line(17), 0.0);
        assert!(residual(&other, &spec).is_err());
    }
}
