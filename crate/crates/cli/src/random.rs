//! Seeded random games for comparison experiments.

use fracisaacs::problem::PointCoefficients;
use fracisaacs::{CoefficientField, ControlGrid, DomainGeometry, Extension, ProblemSpec};
use rand::Rng;

use crate::error::CliResult;

/// Two-by-two game on `[-pi, pi]` with smooth coefficients, random
/// extension and `c >= 0.7`, so the structural checks pass and
/// `lambda > 2 K1` holds with room to spare.
pub fn random_game(rng: &mut impl Rng, points: usize) -> CliResult<ProblemSpec<f64>> {
    let ext = if rng.gen_bool(0.5) {
        Extension::Periodic
    } else {
        Extension::ConstantTail
    };
    let g = DomainGeometry::new(1, std::f64::consts::PI, points, ext)?;
    let params: Vec<[f64; 6]> = (0..4)
        .map(|_| {
            [
                rng.gen_range(0.5..1.5),
                rng.gen_range(-0.3..0.3),
                rng.gen_range(-0.4..0.4),
                rng.gen_range(1.0..3.0),
                rng.gen_range(-2.0..2.0),
                rng.gen_range(0.0..6.0),
            ]
        })
        .collect();
    Ok(ProblemSpec::from_fn(
        g,
        ControlGrid::indexed(2, 2),
        move |a, b, x| {
            let [a0, a1, b0, c0, f0, phase] = params[2 * a + b];
            let s = (x[0] + phase).sin();
            PointCoefficients {
                a: a0 + a1 * s,
                b: [b0 * (1.0 + 0.2 * s), 0.0],
                c: c0 + 0.3 * s,
                f: f0 * (x[0] - phase).cos(),
            }
        },
    )?)
}

/// Same game with `f + delta`. Raising `f` lowers the solution.
pub fn shift_forcing(spec: &ProblemSpec<f64>, delta: f64) -> CliResult<ProblemSpec<f64>> {
    let coef = &spec.coefficients;
    let shifted = CoefficientField::new(
        &spec.controls,
        &spec.geometry,
        coef.a_table().to_vec(),
        coef.b_tables().to_vec(),
        coef.c_table().to_vec(),
        coef.f_table().iter().map(|v| v + delta).collect(),
    )?;
    Ok(ProblemSpec::new(
        spec.geometry.clone(),
        spec.controls.clone(),
        shifted,
    )?)
}
