use fbreg::barriers::{
    exp_cusp_barrier, heat_tail_supersolution, power_regularized_barriers, regularized_samples, search_descending,
    verify_inequality, HeatTailOptions, MovingDomain, Sense, VerifyOptions,
};
use fbreg::operator::KernelSpec;
use fbreg::profiles::gamma_critical;
use proptest::prelude::*;

const HS: [f64; 3] = [1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0];

fn cusp_samples(e: &[f64]) -> Vec<(Vec<f64>, f64)> {
    (-10..=10)
        .map(|i| i as f64 * 0.1 + 0.05)
        .filter(|z| z.abs() >= 0.14)
        .map(|z| (e.iter().map(|c| c * z).collect(), 0.0))
        .collect()
}

#[test]
fn cusp_barriers_hold_in_one_and_two_dimensions() {
    for (dim, e) in [(1, vec![1.0]), (2, vec![0.6, 0.8])] {
        let k = KernelSpec::fractional_laplacian(dim, 0.5).unwrap();
        for (v, parabolic) in [(0.0, false), (0.5, true)] {
            let b = exp_cusp_barrier(&e, 0.2, v, parabolic).unwrap();
            let r = verify_inequality(&k, &b, &cusp_samples(&e), &HS, &VerifyOptions::default()).unwrap();
            assert!(r.pass && r.stable, "dim {dim} v {v}: {:?}", r.levels);
            assert_eq!(r.levels.len(), 3);
        }
    }
}

#[test]
fn search_stops_at_the_first_certified_value() {
    let k = KernelSpec::fractional_laplacian(1, 0.5).unwrap();
    let mut calls = 0;
    let s = search_descending("theta", &[0.2, 0.1, 0.05], |th| {
        calls += 1;
        let b = exp_cusp_barrier(&[1.0], th, 0.0, false)?;
        verify_inequality(&k, &b, &cusp_samples(&[1.0]), &HS, &VerifyOptions::default())
    })
    .unwrap();
    assert_eq!(s.found, Some(0.2));
    assert_eq!(calls, 1);
    assert_eq!(s.tried.len(), 1);
}

#[test]
fn regularized_pair_is_ordered_and_rejects_bad_exponents() {
    let k = KernelSpec::fractional_laplacian(1, 0.5).unwrap();
    let d = MovingDomain::flat(&[1.0], 0.5).unwrap();
    let g0 = gamma_critical(&k, &[1.0], 0.5).unwrap();
    let pair = power_regularized_barriers(&k, &d, g0, 0.2, 2.0, 1.0).unwrap();
    let samples = regularized_samples(&d, 1.0, 8, 0.1);
    assert!(!samples.is_empty());
    for (x, t) in &samples {
        assert!(pair.sub.eval(x, *t) >= pair.sup.eval(x, *t));
        assert!(d.distance(x, *t) > 0.0);
    }
    assert!(pair.sandwich_constant(&d, &samples).is_finite());
    assert!(power_regularized_barriers(&k, &d, g0, 0.4, 2.0, 1.0).is_err());
    let k75 = KernelSpec::fractional_laplacian(1, 0.75).unwrap();
    assert!(power_regularized_barriers(&k75, &d, 0.5, 0.2, 2.0, 1.0).is_err());
}

#[test]
fn heat_tail_constants_stay_bounded() {
    let k = KernelSpec::fractional_laplacian(1, 0.5).unwrap();
    let opts = HeatTailOptions { radii: vec![2.0, 4.0], nodes_per_unit: 8, steps: 32, ..HeatTailOptions::default() };
    let r = heat_tail_supersolution(&k, 0.5, &|x: &[f64], _| x[0] <= 0.0, &opts).unwrap();
    assert_eq!(r.rows.len(), 2);
    assert!(r.c_obs.is_finite() && r.c_obs > 0.0);
    assert!(r.rows.iter().all(|row| row.c_lower > 0.0 && row.c_lower <= row.c_upper));
}

proptest! {
    #[test]
    fn sense_margins_are_consistent(bound in -5.0f64..5.0, worst in -10.0f64..10.0) {
        for sense in [Sense::AtMost(bound), Sense::AtLeast(bound)] {
            let m = sense.margin(worst);
            prop_assert_eq!(sense.holds(m), if sense.upper() { worst <= bound } else { worst >= bound });
        }
    }

    #[test]
    fn flat_front_distance_is_signed_and_translation_covariant(x in -2.0f64..2.0, t in -0.9f64..0.9, v in 0.0f64..1.0) {
        let d = MovingDomain::flat(&[1.0], v).unwrap();
        let a = d.position(t);
        prop_assert!((d.speed(t) + v).abs() < 1e-12 || (d.speed(t) - v).abs() < 1e-12);
        prop_assert_eq!(d.distance(&[x], t) > 0.0, x > a);
        prop_assert!(d.regularized_distance(&[a + 0.3], t) > 0.0);
    }
}
