use fracisaacs::envelopes::{min_second_difference, search_radius, sup_convolution_within};
use fracisaacs::{
    gamma_gap, inf_convolution, sup_convolution, DomainGeometry, Extension, GridFunction,
};
use proptest::prelude::*;

fn abs_on(points: usize) -> GridFunction<f64> {
    let g = DomainGeometry::new(1, 1.0, points, Extension::ConstantTail).unwrap();
    GridFunction::from_fn(&g, |x| x[0].abs())
}

#[test]
fn kink_gap_is_a_quarter_epsilon() {
    let u = abs_on(2001);
    let h = u.geometry().spacing();
    let origin = u.geometry().origin_index().unwrap();
    for eps in [0.4, 0.2, 0.1, 0.05] {
        let sup = sup_convolution(&u, eps).unwrap();
        assert!((sup.envelope.get(origin) - eps / 4.0).abs() <= h);
        assert!((sup.argmax_offsets[origin][0].abs() - eps / 2.0).abs() <= h);
        let inf = inf_convolution(&u, eps).unwrap();
        assert_eq!(inf.envelope.get(origin), 0.0);
    }
    let eps = [0.4, 0.2, 0.1, 0.05];
    let gaps = gamma_gap(&u, &eps).unwrap();
    for (g, e) in gaps.iter().zip(eps) {
        assert!(*g <= e / 4.0 + 1e-12);
    }
    for w in gaps.windows(2) {
        let ratio = w[1] / w[0];
        assert!((0.4..=0.6).contains(&ratio), "{gaps:?}");
    }
}

#[test]
fn two_dimensional_cone() {
    let g = DomainGeometry::<f64>::new(2, 1.0, 41, Extension::ConstantTail).unwrap();
    let u = GridFunction::from_fn(&g, |x| (x[0] * x[0] + x[1] * x[1]).sqrt());
    let eps = 0.2f64;
    let sup = sup_convolution(&u, eps).unwrap();
    let origin = g.origin_index().unwrap();
    assert!((sup.envelope.get(origin) - eps / 4.0).abs() <= g.spacing());
    assert!(min_second_difference(&sup.envelope) >= -2.0 / eps * g.spacing().powi(2) - 1e-12);
}

#[test]
fn envelopes_fix_constants() {
    for ext in [Extension::Periodic, Extension::ConstantTail] {
        let g = DomainGeometry::new(1, 2.0, 32, ext).unwrap();
        let u = GridFunction::constant(&g, -3.5);
        let sup = sup_convolution(&u, 0.3).unwrap();
        assert_eq!(sup.envelope, u);
        assert!(sup.argmax_offsets.iter().all(|y| *y == [0.0, 0.0]));
        assert_eq!(inf_convolution(&u, 0.3).unwrap().envelope, u);
    }
}

#[test]
fn rejects_non_positive_epsilon() {
    let u = abs_on(33);
    assert!(sup_convolution(&u, 0.0).is_err());
    assert!(inf_convolution(&u, -1.0).is_err());
}

fn field(values: Vec<f64>, periodic: bool) -> GridFunction<f64> {
    let ext = if periodic {
        Extension::Periodic
    } else {
        Extension::ConstantTail
    };
    let g = DomainGeometry::new(1, 1.5, values.len(), ext).unwrap();
    GridFunction::new(g, values).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn ordering_and_semiconvexity(vals in prop::collection::vec(-2.0f64..2.0, 40), periodic in any::<bool>(), eps in 0.01f64..1.0) {
        let u = field(vals, periodic);
        let sup = sup_convolution(&u, eps).unwrap().envelope;
        let inf = inf_convolution(&u, eps).unwrap().envelope;
        for i in 0..u.len() {
            prop_assert!(inf.get(i) <= u.get(i) && u.get(i) <= sup.get(i));
        }
        let h2 = u.geometry().spacing().powi(2);
        prop_assert!(min_second_difference(&sup) >= -2.0 / eps * h2 - 1e-12);
        prop_assert!(-min_second_difference(&inf.map(|v| -v)) <= 2.0 / eps * h2 + 1e-12);
    }

    #[test]
    fn duality_is_exact(vals in prop::collection::vec(-5.0f64..5.0, 24), periodic in any::<bool>(), eps in 0.01f64..2.0) {
        let u = field(vals, periodic);
        let inf = inf_convolution(&u, eps).unwrap().envelope;
        let dual = sup_convolution(&u.map(|v| -v), eps).unwrap().envelope.map(|v| -v);
        prop_assert_eq!(inf, dual);
    }

    #[test]
    fn monotone_in_epsilon(vals in prop::collection::vec(-2.0f64..2.0, 32), periodic in any::<bool>(), e1 in 0.01f64..1.0, scale in 1.0f64..4.0) {
        let u = field(vals, periodic);
        let small = sup_convolution(&u, e1).unwrap().envelope;
        let large = sup_convolution(&u, e1 * scale).unwrap().envelope;
        for i in 0..u.len() {
            prop_assert!(small.get(i) <= large.get(i));
        }
    }

    #[test]
    fn wider_search_changes_nothing(vals in prop::collection::vec(-2.0f64..2.0, 32), periodic in any::<bool>(), eps in 0.01f64..1.0) {
        let u = field(vals, periodic);
        let base = sup_convolution(&u, eps).unwrap();
        let wide = sup_convolution_within(&u, eps, 3.0 * search_radius(&u, eps) + 1.0).unwrap();
        prop_assert_eq!(base.envelope, wide.envelope);
        let bound = search_radius(&u, eps) + 1e-12;
        prop_assert!(base.argmax_offsets.iter().all(|y| y[0].abs() <= bound));
    }

    #[test]
    fn lipschitz_gap_law(slope in 0.1f64..3.0, eps in 0.01f64..0.5) {
        let g = DomainGeometry::<f64>::new(1, 1.0, 201, Extension::ConstantTail).unwrap();
        let u = GridFunction::from_fn(&g, |x| slope * (x[0] - 0.1).abs());
        let gap = gamma_gap(&u, &[eps]).unwrap()[0];
        prop_assert!(gap <= slope * slope * eps / 4.0 + 1e-12);
    }
}
