use fracisaacs::regularity::{
    diff_quotient, doubling_max, dq_residuals, holder_fit, lipschitz_certificate,
    oscillation_cascade, scale_ratio, time_lift, RowStatus, SpaceTimeField,
};
use fracisaacs::{DomainGeometry, Error, Extension, GridFunction};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Golden-section minimum of `P / gamma + gamma / 2` over `log gamma`,
/// independent of the closed form.
fn golden_min(p: f64) -> f64 {
    let f = |s: f64| {
        let g = s.exp();
        p / g + g / 2.0
    };
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (-40.0f64, 40.0f64);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    for _ in 0..200 {
        if f(c) < f(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - phi * (b - a);
        d = a + phi * (b - a);
    }
    f((a + b) / 2.0)
}

#[test]
fn certificate_matches_golden_section_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..100 {
        let k = rng.gen_range(0.0..5.0);
        let k1 = rng.gen_range(0.0..2.0);
        let c = rng.gen_range(0.0..3.0);
        let lambda = 2.0 * k1 + 0.1 + rng.gen_range(0.0..5.0);
        let cert = lipschitz_certificate(k, k1, c, lambda).unwrap();
        let p = k * k / (2.0 * lambda * (lambda - 2.0 * k1)) + c / lambda;
        let oracle = golden_min(p);
        assert!(
            (cert.k_tilde - oracle).abs() <= 1e-6 * oracle.max(1e-300),
            "{cert:?} vs {oracle}"
        );
        assert!(
            (cert.bound_at(cert.gamma_star, 1.0) - cert.k_tilde).abs()
                <= 1e-12 * cert.k_tilde.max(1.0)
        );
    }
}

#[test]
fn certificate_examples() {
    assert_eq!(
        lipschitz_certificate(0.0, 0.0, 0.0, 1.0).unwrap().k_tilde,
        0.0
    );
    let unit = lipschitz_certificate(1.0f64, 0.0, 0.0, 1.0).unwrap();
    assert!((unit.k_tilde - 1.0).abs() < 1e-15);
    assert!(matches!(
        lipschitz_certificate(1.0, 0.5, 0.0, 1.0),
        Err(Error::BelowThreshold { .. })
    ));
}

#[test]
fn difference_quotient_of_cosine_converges_at_first_order() {
    let g = DomainGeometry::<f64>::periodic_pi(1, 1024).unwrap();
    let u = GridFunction::from_fn(&g, |x| x[0].cos());
    let target = GridFunction::from_fn(&g, |x| -x[0].sin());
    let errs: Vec<f64> = [16, 8, 4, 2]
        .iter()
        .map(|&m| {
            let dq = diff_quotient(&u, m as f64 * g.spacing(), &[1.0]).unwrap();
            dq.values.sup_distance(&target).unwrap()
        })
        .collect();
    for w in errs.windows(2) {
        let ratio = w[0] / w[1];
        assert!((1.8..2.2).contains(&ratio), "{errs:?}");
    }
}

#[test]
fn difference_quotient_examples() {
    let g = DomainGeometry::<f64>::new(2, 1.0, 21, Extension::Periodic).unwrap();
    let h = g.spacing();
    let c = GridFunction::constant(&g, 4.0);
    assert_eq!(
        diff_quotient(&c, 3.0 * h, &[0.0, 1.0])
            .unwrap()
            .values
            .sup_norm(),
        0.0
    );
    assert!(matches!(
        diff_quotient(&c, 0.5 * h, &[1.0, 0.0]),
        Err(Error::NotGridAligned { .. })
    ));
    assert!(diff_quotient(&c, h, &[1.0, 1.0]).is_err());
    let diag = std::f64::consts::FRAC_1_SQRT_2;
    assert!(diff_quotient(&c, 2f64.sqrt() * h, &[diag, diag]).is_ok());

    let line = DomainGeometry::<f64>::new(1, 1.0, 41, Extension::ConstantTail).unwrap();
    let affine = GridFunction::from_fn(&line, |x| 2.5 * x[0] - 1.0);
    let dq = diff_quotient(&affine, 2.0 * line.spacing(), &[-1.0]).unwrap();
    // interior points see the exact slope; the last two clamp against the left edge
    for i in 2..line.len() {
        assert!((dq.values.get(i) + 2.5).abs() < 1e-12);
    }
}

#[test]
fn dq_residual_identities() {
    let g = DomainGeometry::<f64>::periodic_pi(1, 64).unwrap();
    let zero = GridFunction::constant(&g, 0.0);
    let r = dq_residuals(&zero, 1.0, 0.0, 2.0).unwrap();
    assert_eq!((r.sub_violation, r.super_violation), (0.0, 0.0));
    let (b, lambda) = (3.0, 2.0);
    let flat = GridFunction::constant(&g, b / lambda);
    let r = dq_residuals(&flat, 1.0, b, lambda).unwrap();
    assert!(r.sub_violation.abs() < 1e-12);
}

#[test]
fn square_root_cascade_fits_one_half() {
    let g = DomainGeometry::<f64>::new(1, 1.0, 8193, Extension::ConstantTail).unwrap();
    let u = GridFunction::from_fn(&g, |x| x[0].abs().sqrt());
    let v = SpaceTimeField::stationary(&u, vec![-1.0, -0.5, 0.0]).unwrap();
    let table = oscillation_cascade(&v, 0.0, 0.5, 10).unwrap();
    assert_eq!(table.r, 0.25);
    let fit = table.fit.unwrap();
    assert!((fit.sigma - 0.5).abs() <= 0.05);
    assert!(table.sigma_max.unwrap() >= 0.5);
    let radii: Vec<f64> = table.rows.iter().map(|r| r.radius).collect();
    assert!(radii.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn lifted_constant_has_the_exponential_time_derivative() {
    let g = DomainGeometry::<f64>::new(1, 1.0, 17, Extension::ConstantTail).unwrap();
    let u = GridFunction::from_fn(&g, |x| 1.0 + x[0] * x[0]);
    let lambda = 1.3;
    let mut prev = f64::INFINITY;
    for steps in [10, 20, 40, 80] {
        let dt = 1.0 / steps as f64;
        let times: Vec<f64> = (0..=steps).map(|k| -1.0 + k as f64 * dt).collect();
        let v = time_lift(&u, lambda, &times).unwrap();
        let mut worst = 0.0f64;
        for k in 0..steps {
            for i in 0..g.len() {
                let dv = (v.slice(k + 1).get(i) - v.slice(k).get(i)) / dt;
                worst = worst.max((dv - lambda * v.slice(k).get(i)).abs());
            }
        }
        assert!(
            worst < prev && worst <= 2.0 * lambda * lambda * 2.0 * dt,
            "{worst}"
        );
        prev = worst;
    }
}

#[test]
fn doubling_examples() {
    let g = DomainGeometry::<f64>::new(1, 1.0, 81, Extension::ConstantTail).unwrap();
    let zero = GridFunction::constant(&g, 0.0);
    let d = doubling_max(&zero, 1.0, 0.1).unwrap();
    assert_eq!(d.m_eps, 0.0);
    assert_eq!((d.x0, d.y0), (40, 40));

    let slope = GridFunction::from_fn(&g, |x| x[0]);
    let m: Vec<f64> = [1.0, 10.0, 100.0, 1000.0]
        .iter()
        .map(|&gamma| doubling_max(&slope, gamma, 1e-3).unwrap().m_eps)
        .collect();
    assert!(m.windows(2).all(|w| w[1] <= w[0]) && m[1] < m[0], "{m:?}");
    assert_eq!(m[3], 0.0);
}

#[test]
fn doubling_refuses_large_grids() {
    let g = DomainGeometry::<f64>::new(2, 1.0, 100, Extension::Periodic).unwrap();
    let u = GridFunction::constant(&g, 0.0);
    assert!(matches!(
        doubling_max(&u, 1.0, 1.0),
        Err(Error::GridTooLarge { .. })
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn quotient_never_exceeds_lipschitz_constant(
        vals in prop::collection::vec(-3.0f64..3.0, 30),
        periodic in any::<bool>(),
        m in 1usize..8,
        backwards in any::<bool>(),
    ) {
        let ext = if periodic { Extension::Periodic } else { Extension::ConstantTail };
        let g = DomainGeometry::new(1, 1.0, 30, ext).unwrap();
        let u = GridFunction::new(g.clone(), vals).unwrap();
        let ell = if backwards { -1.0 } else { 1.0 };
        let dq = diff_quotient(&u, m as f64 * g.spacing(), &[ell]).unwrap();
        prop_assert!(dq.values.sup_norm() <= u.pairwise_lipschitz() * (1.0 + 1e-12));
    }

    #[test]
    fn quotient_bound_in_two_dimensions(vals in prop::collection::vec(-3.0f64..3.0, 100), m in 1usize..4, axis in 0usize..3) {
        let g = DomainGeometry::new(2, 1.0, 10, Extension::Periodic).unwrap();
        let u = GridFunction::new(g.clone(), vals).unwrap();
        let d = std::f64::consts::FRAC_1_SQRT_2;
        let (ell, h) = match axis {
            0 => ([1.0, 0.0], m as f64 * g.spacing()),
            1 => ([0.0, -1.0], m as f64 * g.spacing()),
            _ => ([d, d], m as f64 * g.spacing() * 2f64.sqrt()),
        };
        let dq = diff_quotient(&u, h, &ell).unwrap();
        prop_assert!(dq.values.sup_norm() <= u.pairwise_lipschitz() * (1.0 + 1e-12));
    }

    #[test]
    fn holder_fit_is_scale_equivariant(
        osc in prop::collection::vec(0.01f64..10.0, 5),
        scale in 0.01f64..100.0,
    ) {
        let radii = [1.0, 0.5, 0.25, 0.125, 0.0625];
        let base = holder_fit(&radii, &osc).unwrap();
        let scaled: Vec<f64> = osc.iter().map(|o| o * scale).collect();
        let fit = holder_fit(&radii, &scaled).unwrap();
        prop_assert!((fit.sigma - base.sigma).abs() <= 1e-9);
        prop_assert!((fit.constant / base.constant / scale - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn cascade_pass_flags_are_monotone_in_sigma(
        vals in prop::collection::vec(-1.0f64..1.0, 65),
        s1 in 0.01f64..0.99,
        s2 in 0.01f64..0.99,
        a in 0.0f64..2.0,
    ) {
        let g = DomainGeometry::new(1, 1.0, 65, Extension::ConstantTail).unwrap();
        let u = GridFunction::new(g, vals).unwrap();
        let v = SpaceTimeField::stationary(&u, vec![-1.0, 0.0]).unwrap();
        let (lo, hi) = if s1 < s2 { (s1, s2) } else { (s2, s1) };
        let at_lo = oscillation_cascade(&v, a, lo, 4).unwrap();
        let at_hi = oscillation_cascade(&v, a, hi, 4).unwrap();
        let r = scale_ratio(a);
        for (x, y) in at_lo.rows.iter().zip(&at_hi.rows) {
            prop_assert_eq!(x.envelope, 2.0 * r.powf(lo * x.k as f64));
            if y.status == RowStatus::Pass {
                prop_assert_eq!(x.status, RowStatus::Pass);
            }
        }
        if at_hi.all_resolved_pass() {
            prop_assert!(at_lo.all_resolved_pass());
        }
    }

    #[test]
    fn doubling_value_is_nonnegative_and_grows_as_epsilon_shrinks(
        vals in prop::collection::vec(-2.0f64..2.0, 40),
        gamma in 0.1f64..50.0,
        eps in 0.001f64..1.0,
    ) {
        let g = DomainGeometry::new(1, 1.0, 40, Extension::ConstantTail).unwrap();
        let u = GridFunction::new(g, vals).unwrap();
        let coarse = doubling_max(&u, gamma, eps).unwrap();
        let fine = doubling_max(&u, gamma, eps / 2.0).unwrap();
        prop_assert!(coarse.m_eps >= 0.0);
        prop_assert!(fine.m_eps >= coarse.m_eps);
    }
}

#[test]
fn noisy_power_law_fits() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let radii: Vec<f64> = (0..8).map(|k| 0.25f64.powi(k)).collect();
    for _ in 0..100 {
        let osc: Vec<f64> = radii
            .iter()
            .map(|r| 2.0 * r.powf(0.3) * (1.0 + rng.gen_range(-0.05..=0.05)))
            .collect();
        let fit = holder_fit(&radii, &osc).unwrap();
        assert!((0.25..=0.35).contains(&fit.sigma), "{}", fit.sigma);
    }
}
