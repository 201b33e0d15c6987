//! Equation data: control sets, tabulated coefficients, assumption checks
//! and the normalisation by the diffusion coefficient.
//!
//! The equation is
//!
//! ```text
//! max_a min_b { f(x) + c(x) u(x) + b(x) . grad u(x) + a(x) (-Lap)^{1/2} u(x) } = 0
//! ```
//!
//! with every coefficient tabulated per control pair and grid point.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{lipschitz_seminorm, DomainGeometry, GridFunction};
use crate::regularity::certificate::lipschitz_certificate;
use crate::scalar::{max_or_zero, Real};

/// Finite control sets for the maximising (`alphas`) and minimising
/// (`betas`) players.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ControlGrid {
    alphas: Vec<String>,
    betas: Vec<String>,
}

impl ControlGrid {
    pub fn new(alphas: Vec<String>, betas: Vec<String>) -> Result<Self> {
        for (name, labels) in [("alphas", &alphas), ("betas", &betas)] {
            if labels.is_empty() {
                return Err(Error::Config(format!("control list `{name}` is empty")));
            }
            let mut sorted: Vec<&String> = labels.iter().collect();
            sorted.sort();
            if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
                return Err(Error::Config(format!(
                    "duplicate control label `{}` in `{name}`",
                    w[0]
                )));
            }
        }
        Ok(Self { alphas, betas })
    }

    /// One maximising and one minimising control, labelled `a0` / `b0`.
    pub fn single() -> Self {
        Self::indexed(1, 1)
    }

    /// `na` x `nb` controls labelled `a0..`, `b0..`.
    pub fn indexed(na: usize, nb: usize) -> Self {
        let alphas = (0..na).map(|i| format!("a{i}")).collect();
        let betas = (0..nb).map(|i| format!("b{i}")).collect();
        Self::new(alphas, betas).expect("indexed labels are unique and non-empty")
    }

    pub fn alphas(&self) -> &[String] {
        &self.alphas
    }

    pub fn betas(&self) -> &[String] {
        &self.betas
    }

    pub fn n_alpha(&self) -> usize {
        self.alphas.len()
    }

    pub fn n_beta(&self) -> usize {
        self.betas.len()
    }

    pub fn n_pairs(&self) -> usize {
        self.alphas.len() * self.betas.len()
    }

    /// Flat index of the pair `(alpha, beta)`.
    #[inline]
    pub fn pair(&self, alpha: usize, beta: usize) -> usize {
        alpha * self.betas.len() + beta
    }
}

/// Coefficient values at one grid point for one control pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointCoefficients<T> {
    pub a: T,
    pub b: [T; 2],
    pub c: T,
    pub f: T,
}

/// Coefficient tables indexed by control pair and grid point.
///
/// Scalar tables are laid out `[pair * len + point]`; the drift is stored
/// per component with the same layout.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientField<T> {
    len: usize,
    n_pairs: usize,
    a: Vec<T>,
    b: Vec<Vec<T>>,
    c: Vec<T>,
    f: Vec<T>,
}

impl<T: Real> CoefficientField<T> {
    /// Builds the tables from flat arrays, checking completeness and finiteness.
    pub fn new(
        controls: &ControlGrid,
        geometry: &DomainGeometry<T>,
        a: Vec<T>,
        b: Vec<Vec<T>>,
        c: Vec<T>,
        f: Vec<T>,
    ) -> Result<Self> {
        let len = geometry.len();
        let n_pairs = controls.n_pairs();
        let expected = len * n_pairs;
        if b.len() != geometry.dimension() {
            return Err(Error::IncompleteTable {
                field: "b (components)".into(),
                expected: geometry.dimension(),
                found: b.len(),
            });
        }
        let mut tables: Vec<(String, &Vec<T>)> =
            vec![("a".into(), &a), ("c".into(), &c), ("f".into(), &f)];
        for (k, comp) in b.iter().enumerate() {
            tables.push((format!("b[{k}]"), comp));
        }
        for (name, table) in tables {
            if table.len() != expected {
                return Err(Error::IncompleteTable {
                    field: name,
                    expected,
                    found: table.len(),
                });
            }
            if let Some(index) = table.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite { field: name, index });
            }
        }
        Ok(Self {
            len,
            n_pairs,
            a,
            b,
            c,
            f,
        })
    }

    /// Tabulates closed-form coefficients `coef(alpha, beta, x)`.
    pub fn from_fn(
        controls: &ControlGrid,
        geometry: &DomainGeometry<T>,
        coef: impl Fn(usize, usize, [T; 2]) -> PointCoefficients<T>,
    ) -> Result<Self> {
        let len = geometry.len();
        let dim = geometry.dimension();
        let total = len * controls.n_pairs();
        let (mut a, mut c, mut f) = (
            Vec::with_capacity(total),
            Vec::with_capacity(total),
            Vec::with_capacity(total),
        );
        let mut b = vec![Vec::with_capacity(total); dim];
        for alpha in 0..controls.n_alpha() {
            for beta in 0..controls.n_beta() {
                for i in 0..len {
                    let p = coef(alpha, beta, geometry.point(i));
                    a.push(p.a);
                    c.push(p.c);
                    f.push(p.f);
                    for (k, comp) in b.iter_mut().enumerate() {
                        comp.push(p.b[k]);
                    }
                }
            }
        }
        Self::new(controls, geometry, a, b, c, f)
    }

    pub fn n_pairs(&self) -> usize {
        self.n_pairs
    }

    #[inline]
    pub fn at(&self, pair: usize, i: usize) -> PointCoefficients<T> {
        let k = pair * self.len + i;
        let mut b = [T::zero(); 2];
        for (d, comp) in self.b.iter().enumerate() {
            b[d] = comp[k];
        }
        PointCoefficients {
            a: self.a[k],
            b,
            c: self.c[k],
            f: self.f[k],
        }
    }

    pub fn a_slice(&self, pair: usize) -> &[T] {
        &self.a[pair * self.len..(pair + 1) * self.len]
    }

    pub fn c_slice(&self, pair: usize) -> &[T] {
        &self.c[pair * self.len..(pair + 1) * self.len]
    }

    pub fn f_slice(&self, pair: usize) -> &[T] {
        &self.f[pair * self.len..(pair + 1) * self.len]
    }

    pub fn b_slices(&self, pair: usize) -> Vec<&[T]> {
        self.b
            .iter()
            .map(|comp| &comp[pair * self.len..(pair + 1) * self.len])
            .collect()
    }

    pub fn a_table(&self) -> &[T] {
        &self.a
    }

    pub fn c_table(&self) -> &[T] {
        &self.c
    }

    pub fn f_table(&self) -> &[T] {
        &self.f
    }

    pub fn b_tables(&self) -> &[Vec<T>] {
        &self.b
    }

    fn drift_norm(&self, k: usize) -> T {
        self.b
            .iter()
            .map(|comp| comp[k] * comp[k])
            .sum::<T>()
            .sqrt()
    }
}

/// Complete description of a discretised problem.
#[derive(Clone, Debug, PartialEq)]
pub struct ProblemSpec<T> {
    pub geometry: DomainGeometry<T>,
    pub controls: ControlGrid,
    pub coefficients: CoefficientField<T>,
}

impl<T: Real> ProblemSpec<T> {
    pub fn new(
        geometry: DomainGeometry<T>,
        controls: ControlGrid,
        coefficients: CoefficientField<T>,
    ) -> Result<Self> {
        if coefficients.len != geometry.len() || coefficients.n_pairs != controls.n_pairs() {
            return Err(Error::IncompleteTable {
                field: "coefficients".into(),
                expected: geometry.len() * controls.n_pairs(),
                found: coefficients.len * coefficients.n_pairs,
            });
        }
        Ok(Self {
            geometry,
            controls,
            coefficients,
        })
    }

    /// Tabulates closed-form coefficients on a geometry.
    pub fn from_fn(
        geometry: DomainGeometry<T>,
        controls: ControlGrid,
        coef: impl Fn(usize, usize, [T; 2]) -> PointCoefficients<T>,
    ) -> Result<Self> {
        let coefficients = CoefficientField::from_fn(&controls, &geometry, coef)?;
        Self::new(geometry, controls, coefficients)
    }

    /// Single-control problem with constant coefficients.
    pub fn constant(geometry: DomainGeometry<T>, a: T, b: [T; 2], c: T, f: T) -> Result<Self> {
        Self::from_fn(geometry, ControlGrid::single(), move |_, _, _| {
            PointCoefficients { a, b, c, f }
        })
    }
}

/// Measured bounds for the structural assumptions.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AssumptionReport<T> {
    /// Largest `C^{0,1}` norm (sup + discrete seminorm) over all fields and control pairs.
    pub k: T,
    /// Largest sum of the four `C^{0,1}` norms over control pairs.
    pub k_sum: T,
    /// `min c`.
    pub lambda: T,
    /// `min a`.
    pub lambda1: T,
    /// Largest discrete Lipschitz seminorm of the drift.
    pub k1: T,
    /// `2 * k1`.
    pub lambda0: T,
    /// `max |f|`.
    pub m: T,
    /// `sup |b / a|`, available when `a > 0`.
    pub a_eff: Option<T>,
    /// Drift/zeroth-order bound evaluated with the a-priori Lipschitz
    /// certificate of the normalised problem, when one exists.
    pub b_eff: Option<T>,
    pub pass: bool,
    pub reasons: Vec<String>,
}

/// Measures the assumption constants and decides whether they hold.
///
/// `pass` requires `lambda > 0`, `lambda1 > 0` and `lambda > lambda0`.
pub fn validate_assumptions<T: Real>(spec: &ProblemSpec<T>) -> Result<AssumptionReport<T>> {
    let g = &spec.geometry;
    let coef = &spec.coefficients;
    let len = g.len();
    let expected = len * spec.controls.n_pairs();
    for (name, found) in [
        ("a", coef.a.len()),
        ("c", coef.c.len()),
        ("f", coef.f.len()),
    ] {
        if found != expected {
            return Err(Error::IncompleteTable {
                field: name.into(),
                expected,
                found,
            });
        }
    }
    for (field, table) in [("a", &coef.a), ("c", &coef.c), ("f", &coef.f)]
        .into_iter()
        .chain(coef.b.iter().map(|t| ("b", t)))
    {
        if let Some(index) = table.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                field: field.into(),
                index,
            });
        }
    }

    let sup = |s: &[T]| max_or_zero(s.iter().map(|v| v.abs()));
    let mut k = T::zero();
    let mut k_sum = T::zero();
    let mut k1 = T::zero();
    for p in 0..coef.n_pairs() {
        let b = coef.b_slices(p);
        let b_sup = max_or_zero((0..len).map(|i| coef.drift_norm(p * len + i)));
        let norms = [
            sup(coef.a_slice(p)) + lipschitz_seminorm(g, &[coef.a_slice(p)]),
            b_sup + lipschitz_seminorm(g, &b),
            sup(coef.c_slice(p)) + lipschitz_seminorm(g, &[coef.c_slice(p)]),
            sup(coef.f_slice(p)) + lipschitz_seminorm(g, &[coef.f_slice(p)]),
        ];
        k = norms.iter().copied().fold(k, T::max);
        k_sum = k_sum.max(norms.iter().copied().sum());
        k1 = k1.max(lipschitz_seminorm(g, &b));
    }
    let lambda = coef.c.iter().copied().fold(T::infinity(), T::min);
    let lambda1 = coef.a.iter().copied().fold(T::infinity(), T::min);
    let m = sup(&coef.f);
    let lambda0 = k1 + k1;

    let mut reasons = Vec::new();
    if !(lambda > T::zero()) {
        reasons.push(format!("A3 violated: min c = {lambda} is not positive"));
    }
    if !(lambda1 > T::zero()) {
        reasons.push(format!("A4 violated: min a = {lambda1} is not positive"));
    }
    if !(lambda > lambda0) {
        reasons.push(format!(
            "lambda = {lambda} does not exceed the threshold lambda0 = 2*K1 = {lambda0}"
        ));
    }
    let pass = reasons.is_empty();

    let (a_eff, b_eff) = if lambda1 > T::zero() {
        let reduced = reduce_by_diffusion(spec)?;
        let a_eff = reduced.drift_sup();
        let b_eff = reduced
            .a_priori_lipschitz()
            .and_then(|(l, u_sup)| effective_constants(&reduced, l, u_sup).ok().map(|(_, b)| b));
        (Some(a_eff), b_eff)
    } else {
        (None, None)
    };

    Ok(AssumptionReport {
        k,
        k_sum,
        lambda,
        lambda1,
        k1,
        lambda0,
        m,
        a_eff,
        b_eff,
        pass,
        reasons,
    })
}

/// Constant barriers `(-M/lambda, M/lambda)` bracketing every solution.
pub fn bracket_bounds<T: Real>(report: &AssumptionReport<T>) -> Result<(T, T)> {
    if !(report.lambda > T::zero()) {
        return Err(Error::AssumptionViolated(format!(
            "A3 violated: lambda = {} is not positive",
            report.lambda
        )));
    }
    let upper = report.m / report.lambda;
    Ok((-upper, upper))
}

/// Zeroth-order term `g = (c~ - lambda) u + f~` frozen at a solution.
#[derive(Clone, Debug, PartialEq)]
pub struct FrozenZerothOrder<T> {
    pub lambda: T,
    /// Laid out like the scalar coefficient tables.
    pub g: Vec<T>,
    /// Largest `sup |g|` over control pairs.
    pub g_sup: T,
    /// Largest discrete seminorm of `g` over control pairs.
    pub g_lip: T,
}

/// Coefficients divided by the diffusion coefficient, so that `a == 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct ReducedProblem<T> {
    pub geometry: DomainGeometry<T>,
    pub controls: ControlGrid,
    pub f: Vec<T>,
    pub c: Vec<T>,
    pub b: Vec<Vec<T>>,
    pub frozen: Option<FrozenZerothOrder<T>>,
}

/// Divides `f`, `c`, `b` by `a` pointwise.
pub fn reduce_by_diffusion<T: Real>(spec: &ProblemSpec<T>) -> Result<ReducedProblem<T>> {
    let coef = &spec.coefficients;
    if let Some(k) = coef.a.iter().position(|&a| !(a > T::zero())) {
        return Err(Error::AssumptionViolated(format!(
            "A4 violated: cannot normalize (a = {} at entry {k})",
            coef.a[k]
        )));
    }
    let div = |t: &[T]| -> Vec<T> { t.iter().zip(&coef.a).map(|(&v, &a)| v / a).collect() };
    Ok(ReducedProblem {
        geometry: spec.geometry.clone(),
        controls: spec.controls.clone(),
        f: div(&coef.f),
        c: div(&coef.c),
        b: coef.b.iter().map(|comp| div(comp)).collect(),
        frozen: None,
    })
}

/// Inputs of the closed-form Lipschitz certificate measured on a normalised problem.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CertificateInputs<T> {
    /// `max (Lip f~ + Lip c~ * |u|_inf)`.
    pub k: T,
    /// `max Lip b~`.
    pub k1: T,
    /// `min c~`.
    pub lambda: T,
}

impl<T: Real> ReducedProblem<T> {
    fn len(&self) -> usize {
        self.geometry.len()
    }

    fn slice<'a>(&self, table: &'a [T], pair: usize) -> &'a [T] {
        &table[pair * self.len()..(pair + 1) * self.len()]
    }

    fn pairs(&self) -> usize {
        self.controls.n_pairs()
    }

    /// `min c~`, the zeroth-order constant of the normalised equation.
    pub fn lambda(&self) -> T {
        self.c.iter().copied().fold(T::infinity(), T::min)
    }

    /// `max |f~|`.
    pub fn forcing_sup(&self) -> T {
        max_or_zero(self.f.iter().map(|v| v.abs()))
    }

    /// `sup |b~|` over controls and points.
    pub fn drift_sup(&self) -> T {
        max_or_zero((0..self.f.len()).map(|k| {
            self.b
                .iter()
                .map(|comp| comp[k] * comp[k])
                .sum::<T>()
                .sqrt()
        }))
    }

    pub fn seminorm_f(&self, pair: usize) -> T {
        lipschitz_seminorm(&self.geometry, &[self.slice(&self.f, pair)])
    }

    pub fn seminorm_c(&self, pair: usize) -> T {
        lipschitz_seminorm(&self.geometry, &[self.slice(&self.c, pair)])
    }

    pub fn seminorm_b(&self, pair: usize) -> T {
        let comps: Vec<&[T]> = self.b.iter().map(|t| self.slice(t, pair)).collect();
        lipschitz_seminorm(&self.geometry, &comps)
    }

    /// Constants for the Lipschitz certificate given a bound on `|u|_inf`.
    pub fn certificate_inputs(&self, u_sup: T) -> CertificateInputs<T> {
        let mut k = T::zero();
        let mut k1 = T::zero();
        for p in 0..self.pairs() {
            k = k.max(self.seminorm_f(p) + self.seminorm_c(p) * u_sup);
            k1 = k1.max(self.seminorm_b(p));
        }
        CertificateInputs {
            k,
            k1,
            lambda: self.lambda(),
        }
    }

    /// A-priori `(L, |u|_inf)` from the barrier `|u| <= max|f~| / min c~` and
    /// the certificate with `C = 0`. `None` below the threshold.
    pub fn a_priori_lipschitz(&self) -> Option<(T, T)> {
        let lambda = self.lambda();
        if !(lambda > T::zero()) {
            return None;
        }
        let u_sup = self.forcing_sup() / lambda;
        let inputs = self.certificate_inputs(u_sup);
        lipschitz_certificate(inputs.k, inputs.k1, T::zero(), inputs.lambda)
            .ok()
            .map(|cert| (cert.k_tilde, u_sup))
    }

    /// Freezes `g = (c~ - lambda) u + f~` at a solution `u`.
    pub fn freeze_zeroth_order(&self, u: &GridFunction<T>, lambda: T) -> Result<Self> {
        self.geometry.check_same(u.geometry())?;
        let len = self.len();
        let g: Vec<T> = (0..self.f.len())
            .map(|k| (self.c[k] - lambda) * u.get(k % len) + self.f[k])
            .collect();
        let mut g_sup = T::zero();
        let mut g_lip = T::zero();
        for p in 0..self.pairs() {
            let s = &g[p * len..(p + 1) * len];
            g_sup = g_sup.max(max_or_zero(s.iter().map(|v| v.abs())));
            g_lip = g_lip.max(lipschitz_seminorm(&self.geometry, &[s]));
        }
        let mut out = self.clone();
        out.frozen = Some(FrozenZerothOrder {
            lambda,
            g,
            g_sup,
            g_lip,
        });
        Ok(out)
    }

    /// The normalised problem as a full spec with `a == 1`.
    pub fn to_spec(&self) -> Result<ProblemSpec<T>> {
        let coefficients = CoefficientField::new(
            &self.controls,
            &self.geometry,
            vec![T::one(); self.f.len()],
            self.b.clone(),
            self.c.clone(),
            self.f.clone(),
        )?;
        ProblemSpec::new(self.geometry.clone(), self.controls.clone(), coefficients)
    }
}

/// Effective constants `(A, B)` of the linearised difference-quotient
/// inequalities for a solution with Lipschitz bound `lipschitz` and sup norm
/// `u_sup`.
///
/// `A = sup |b~|`. `B` bounds the x-derivative of
/// `H(x, p) = max min { (c~ - lambda) u + f~ + b~ . p }` for `|p| <= L`:
/// the worst control pair of `Lip(c~) |u|_inf + (sup c~ - lambda) L + Lip(f~) + Lip(b~) L`
/// with `lambda = min c~`.
pub fn effective_constants<T: Real>(
    reduced: &ReducedProblem<T>,
    lipschitz: T,
    u_sup: T,
) -> Result<(T, T)> {
    for (name, v) in [("lipschitz", lipschitz), ("u_sup", u_sup)] {
        if !v.is_finite() || v < T::zero() {
            return Err(Error::InvalidArgument(format!(
                "{name} must be finite and non-negative, got {v}"
            )));
        }
    }
    let lambda = reduced.lambda();
    let len = reduced.len();
    let a_eff = reduced.drift_sup();
    let mut b_eff = T::zero();
    for p in 0..reduced.pairs() {
        let c_sup = reduced.c[p * len..(p + 1) * len]
            .iter()
            .copied()
            .fold(T::neg_infinity(), T::max);
        let b = reduced.seminorm_c(p) * u_sup
            + (c_sup - lambda).max(T::zero()) * lipschitz
            + reduced.seminorm_f(p)
            + reduced.seminorm_b(p) * lipschitz;
        b_eff = b_eff.max(b);
    }
    if !a_eff.is_finite() || !b_eff.is_finite() {
        return Err(Error::NonFinite {
            field: "effective constants".into(),
            index: 0,
        });
    }
    Ok((a_eff, b_eff))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Extension;

    fn line(points: usize) -> DomainGeometry<f64> {
        DomainGeometry::new(1, std::f64::consts::PI, points, Extension::ConstantTail).unwrap()
    }

    #[test]
    fn constant_fields_report() {
        let spec = ProblemSpec::constant(line(33), 1.0, [0.0, 0.0], 1.0, -2.0).unwrap();
        let r = validate_assumptions(&spec).unwrap();
        assert_eq!(r.k, 2.0);
        assert_eq!(r.lambda, 1.0);
        assert_eq!(r.lambda1, 1.0);
        assert_eq!(r.m, 2.0);
        assert_eq!(r.lambda0, 0.0);
        assert!(r.pass, "{:?}", r.reasons);
        assert_eq!(bracket_bounds(&r).unwrap(), (-2.0, 2.0));
    }

    #[test]
    fn zero_discount_fails_a3() {
        let spec = ProblemSpec::constant(line(16), 1.0, [0.0, 0.0], 0.0, 1.0).unwrap();
        let r = validate_assumptions(&spec).unwrap();
        assert!(!r.pass);
        assert!(r.reasons.iter().any(|s| s.contains("A3 violated")));
        assert!(matches!(
            bracket_bounds(&r),
            Err(Error::AssumptionViolated(_))
        ));
    }

    #[test]
    fn sine_forcing_seminorm() {
        let g = DomainGeometry::new(1, std::f64::consts::PI, 257, Extension::ConstantTail).unwrap();
        let spec = ProblemSpec::from_fn(g, ControlGrid::single(), |_, _, x| PointCoefficients {
            a: 1.0,
            b: [0.0, 0.0],
            c: 1.0,
            f: x[0].sin(),
        })
        .unwrap();
        let lip = lipschitz_seminorm(&spec.geometry, &[spec.coefficients.f_slice(0)]);
        assert!((lip - 1.0).abs() < 1e-3, "{lip}");
    }

    #[test]
    fn incomplete_table_is_rejected() {
        let g = line(16);
        let controls = ControlGrid::single();
        let err = CoefficientField::new(
            &controls,
            &g,
            vec![1.0; 16],
            vec![vec![0.0; 15]],
            vec![1.0; 16],
            vec![0.0; 16],
        )
        .unwrap_err();
        assert!(matches!(err, Error::IncompleteTable { .. }));
        let err = CoefficientField::new(
            &controls,
            &g,
            vec![1.0; 16],
            vec![vec![0.0; 16]],
            vec![1.0; 16],
            {
                let mut f = vec![0.0; 16];
                f[3] = f64::NAN;
                f
            },
        )
        .unwrap_err();
        assert_eq!(
            err,
            Error::NonFinite {
                field: "f".into(),
                index: 3
            }
        );
    }

    #[test]
    fn reduction_divides_componentwise() {
        let spec = ProblemSpec::constant(line(16), 2.0, [2.0, 0.0], 2.0, 4.0).unwrap();
        let red = reduce_by_diffusion(&spec).unwrap();
        assert!(red.f.iter().all(|&v| v == 2.0));
        assert!(red.c.iter().all(|&v| v == 1.0));
        assert!(red.b[0].iter().all(|&v| v == 1.0));
    }

    #[test]
    fn reduction_of_unit_diffusion_is_identity() {
        let spec = ProblemSpec::from_fn(line(20), ControlGrid::indexed(2, 2), |a, b, x| {
            PointCoefficients {
                a: 1.0,
                b: [x[0].cos() * a as f64, 0.0],
                c: 1.5 + b as f64,
                f: x[0].sin(),
            }
        })
        .unwrap();
        let red = reduce_by_diffusion(&spec).unwrap();
        assert_eq!(red.to_spec().unwrap(), spec);
        let again = reduce_by_diffusion(&red.to_spec().unwrap()).unwrap();
        assert_eq!(again, red);
    }

    #[test]
    fn reduction_requires_positive_diffusion() {
        let spec = ProblemSpec::constant(line(16), 0.0, [0.0, 0.0], 1.0, 1.0).unwrap();
        let err = reduce_by_diffusion(&spec).unwrap_err();
        assert!(err.to_string().contains("A4 violated: cannot normalize"));
    }

    #[test]
    fn effective_constants_examples() {
        let spec = ProblemSpec::constant(line(16), 1.0, [2.0, 0.0], 3.0, 1.0).unwrap();
        let red = reduce_by_diffusion(&spec).unwrap();
        assert_eq!(effective_constants(&red, 1.0, 1.0).unwrap(), (2.0, 0.0));

        let spec = ProblemSpec::from_fn(line(16), ControlGrid::indexed(2, 1), |a, _, _| {
            PointCoefficients {
                a: 1.0,
                b: [if a == 0 { 1.0 } else { -3.0 }, 0.0],
                c: 1.0,
                f: 0.0,
            }
        })
        .unwrap();
        let red = reduce_by_diffusion(&spec).unwrap();
        assert_eq!(effective_constants(&red, 0.0, 0.0).unwrap().0, 3.0);

        let spec = ProblemSpec::from_fn(line(101), ControlGrid::single(), |_, _, x| {
            PointCoefficients {
                a: 1.0,
                b: [0.0, 0.0],
                c: 1.0,
                f: x[0],
            }
        })
        .unwrap();
        let red = reduce_by_diffusion(&spec).unwrap();
        let (_, b) = effective_constants(&red, 0.0, 5.0).unwrap();
        assert!((b - 1.0).abs() < 1e-3, "{b}");
        assert!(effective_constants(&red, f64::NAN, 0.0).is_err());
    }

    #[test]
    fn bracket_examples() {
        let mut r = validate_assumptions(
            &ProblemSpec::constant(line(16), 1.0, [0.0, 0.0], 2.0, 3.0).unwrap(),
        )
        .unwrap();
        assert_eq!(bracket_bounds(&r).unwrap(), (-1.5, 1.5));
        r.m = 0.0;
        let (lo, hi) = bracket_bounds(&r).unwrap();
        assert_eq!((lo, hi), (0.0, 0.0));
    }

    #[test]
    fn duplicate_labels_rejected() {
        assert!(ControlGrid::new(vec!["x".into(), "x".into()], vec!["y".into()]).is_err());
        assert!(ControlGrid::new(vec![], vec!["y".into()]).is_err());
    }
}
