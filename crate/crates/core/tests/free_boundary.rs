use fbreg::free_boundary::{
    analyze_point, blow_up_rescale, extract_boundary, fit_1d_profile, fit_growth_exponent, BoundaryPoint,
    Classification, ClassifyThresholds, NormMode,
};
use fbreg::operator::{GridFunction, KernelSpec};
use proptest::prelude::*;

fn planted(x0: f64, beta: f64) -> GridFunction {
    GridFunction::from_fn(&[513], 1.0 / 128.0, &[-2.0], 0.5, move |x| (x[0] - x0).max(0.0).powf(beta))
}

fn mask_of(w: &GridFunction) -> Vec<bool> {
    w.values.iter().map(|v| *v <= 0.0).collect()
}

#[test]
fn traveling_power_profile_is_regular_with_the_predicted_exponent() {
    let k = KernelSpec::fractional_laplacian(1, 0.5).unwrap();
    let v = 0.6;
    let gamma = fbreg::profiles::gamma_critical(&k, &[1.0], v).unwrap();
    let w = GridFunction::from_space_time_fn(&[257], 1.0 / 128.0, &[-1.0], 129, 1.0 / 128.0, 0.0, 0.5, move |x, t| {
        (x[0] + v * t - 0.5).max(0.0).powf(1.0 + gamma)
    });
    let cloud = extract_boundary(&mask_of(&w), &w, 1.0 + gamma).unwrap();
    let pt = cloud.iter().find(|p| (p.t - 0.5).abs() < 1e-9).unwrap();
    assert!((pt.x[0] - 0.2).abs() < 1e-6, "{pt:?}");
    let fp = analyze_point(&w, &cloud, pt, &k, 0.15, 4.0 / 128.0, 0.25, &ClassifyThresholds::default()).unwrap();
    assert!((fp.speed - v).abs() < 0.02, "{}", fp.speed);
    assert!(matches!(fp.classification, Classification::Regular { .. }), "{fp:?}");

    let blown = blow_up_rescale(&w, pt, 0.2, NormMode::Gradient, 33).unwrap();
    let fit = fit_1d_profile(&blown, &k, Some((&[1.0], fp.speed))).unwrap();
    assert!(fit.lip_distance < 0.05, "{}", fit.lip_distance);
    assert!((fit.profile.v - v).abs() < 0.05);
}

#[test]
fn interior_contact_points_are_rejected() {
    let w = planted(0.3, 1.5);
    let inside = BoundaryPoint { x: vec![-0.5], t: 0.0 };
    assert!(fit_growth_exponent(&w, &inside, 4.0 / 128.0, 0.25, None).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn planted_fronts_are_located_and_their_growth_recovered(x0 in -0.5f64..0.5, beta in 1.2f64..1.95) {
        let w = planted(x0, beta);
        let pts = extract_boundary(&mask_of(&w), &w, beta).unwrap();
        prop_assert_eq!(pts.len(), 1);
        prop_assert!((pts[0].x[0] - x0).abs() < 1e-9);
        // the smallest radii carry an O(h/r) bias from the one-sided sup
        let fit = fit_growth_exponent(&w, &pts[0], 8.0 / 128.0, 0.5, None).unwrap();
        prop_assert!((fit.beta - beta).abs() < 0.03, "beta {} fitted {}", beta, fit.beta);
        prop_assert!(fit.fit.r2 > 0.999);
    }

    #[test]
    fn growth_fit_is_invariant_under_amplitude(a in 0.01f64..100.0) {
        let w = planted(0.1, 1.6);
        let mut scaled = w.clone();
        scaled.values.iter_mut().for_each(|v| *v *= a);
        let pt = BoundaryPoint { x: vec![0.1], t: 0.0 };
        let f1 = fit_growth_exponent(&w, &pt, 4.0 / 128.0, 0.5, None).unwrap();
        let f2 = fit_growth_exponent(&scaled, &pt, 4.0 / 128.0, 0.5, None).unwrap();
        prop_assert!((f1.beta - f2.beta).abs() < 1e-9);
    }
}
