use fbreg::metrics::{
    convergence_order, fit_time_regularity, linear_fit, parabolic_holder_seminorm, predicted_time_exponent,
    HolderMode, Region, SearchOptions, GOLDEN_THRESHOLD,
};
use fbreg::operator::GridFunction;
use proptest::prelude::*;

fn field(seed: f64) -> GridFunction {
    GridFunction::from_space_time_fn(&[15, 15], 0.1, &[-0.7, -0.7], 10, 0.02, 0.0, 0.5, move |x, t| {
        (seed * x[0]).sin() + (x[1] * x[1] + 0.1).sqrt() * (1.0 + t)
    })
}

#[test]
fn sampled_search_never_overshoots_and_is_reproducible() {
    let w = field(2.3);
    let exact = parabolic_holder_seminorm(&w, 0.5, HolderMode::Parabolic, &Region::all(), &SearchOptions::default()).unwrap();
    let opts = SearchOptions { pair_budget: 20_000, seed: 5, force_sampled: true };
    let a = parabolic_holder_seminorm(&w, 0.5, HolderMode::Parabolic, &Region::all(), &opts).unwrap();
    let b = parabolic_holder_seminorm(&w, 0.5, HolderMode::Parabolic, &Region::all(), &opts).unwrap();
    assert!(exact.exact && !a.exact);
    assert!(a.value <= exact.value);
    assert!(a.value >= 0.9 * exact.value, "{} vs {}", a.value, exact.value);
    assert_eq!(a, b);
}

#[test]
fn spatial_mode_ignores_time_jumps() {
    let w = GridFunction::from_space_time_fn(&[8], 0.1, &[0.0], 6, 0.01, 0.0, 0.5, |_, t| 100.0 * t);
    let r = parabolic_holder_seminorm(&w, 0.5, HolderMode::Spatial, &Region::all(), &SearchOptions::default()).unwrap();
    assert_eq!(r.value, 0.0);
}

#[test]
fn time_modulus_of_a_known_power() {
    // ∂_t u = sign(t - 1)|t - 1|^{0.3}; the singular time sits inside the window
    let w = GridFunction::from_space_time_fn(&[3], 0.5, &[0.0], 513, 1.0 / 256.0, 0.0, 0.5, |_, t| {
        (t - 1.0).abs().powf(1.3) / 1.3
    });
    let r = fit_time_regularity(&w, 0.0, 0.25, 2.0).unwrap();
    assert!((r.measured - 0.3).abs() < 0.05, "{}", r.measured);
    assert!(predicted_time_exponent(0.55, 0.0) == 0.55);
    assert!((predicted_time_exponent(0.75, 0.0) - 1.0 / 3.0).abs() < 1e-15);
    assert!((GOLDEN_THRESHOLD - (5f64.sqrt() - 1.0) / 2.0).abs() < 1e-15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn seminorm_scales_and_ignores_constants(a in -5.0f64..5.0, c in -10.0f64..10.0, beta in 0.1f64..0.95) {
        let w = field(1.7);
        let mut v = w.clone();
        v.values.iter_mut().for_each(|x| *x = a * *x + c);
        let o = SearchOptions::default();
        let s1 = parabolic_holder_seminorm(&w, beta, HolderMode::Parabolic, &Region::all(), &o).unwrap().value;
        let s2 = parabolic_holder_seminorm(&v, beta, HolderMode::Parabolic, &Region::all(), &o).unwrap().value;
        prop_assert!((s2 - a.abs() * s1).abs() <= 1e-9 * (1.0 + s2));
    }

    #[test]
    fn sub_regions_have_smaller_seminorms(lo in -0.7f64..0.0, hi in 0.0f64..0.7) {
        let w = field(3.1);
        let o = SearchOptions::default();
        let all = parabolic_holder_seminorm(&w, 0.5, HolderMode::Parabolic, &Region::all(), &o).unwrap().value;
        let part = parabolic_holder_seminorm(&w, 0.5, HolderMode::Parabolic, &Region::boxed(vec![lo, lo], vec![hi, hi]), &o).unwrap().value;
        prop_assert!(part <= all);
    }

    #[test]
    fn fits_recover_lines_and_orders(m in -3.0f64..3.0, b in -2.0f64..2.0, p in 0.5f64..3.0, c in 0.1f64..10.0) {
        let x: Vec<f64> = (0..6).map(|i| i as f64 * 0.7).collect();
        let y: Vec<f64> = x.iter().map(|x| m * x + b).collect();
        let f = linear_fit(&x, &y).unwrap();
        prop_assert!((f.slope - m).abs() < 1e-10 && (f.intercept - b).abs() < 1e-10);
        let hs = [0.1f64, 0.05, 0.025, 0.0125];
        let errs: Vec<f64> = hs.iter().map(|h| c * h.powf(p)).collect();
        prop_assert!((convergence_order(&errs, &hs).unwrap().order - p).abs() < 1e-9);
    }
}
