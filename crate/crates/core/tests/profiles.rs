use std::f64::consts::PI;

use fbreg::operator::{make_kernel, symbol, KernelSpec, SphericalDensity};
use fbreg::profiles::{eval_profile, gamma_critical, gamma_drift, gamma_elliptic, Profile1D};
use proptest::prelude::*;

#[test]
fn elliptic_exponent_is_the_order_for_symmetric_kernels() {
    for s in [0.3, 0.5, 0.75, 0.9] {
        let k = KernelSpec::fractional_laplacian(2, s).unwrap();
        assert_eq!(gamma_elliptic(&k, &[0.6, 0.8]).unwrap(), s);
    }
}

#[test]
fn drift_lowers_the_exponent_against_the_flow() {
    let k = KernelSpec::half_laplacian_with_drift(vec![1.0]).unwrap();
    let up = gamma_critical(&k, &[1.0], 0.0).unwrap();
    let down = gamma_critical(&k, &[-1.0], 0.0).unwrap();
    assert!((up.min(down) - gamma_drift(1.0).unwrap()).abs() < 1e-9, "{up} {down}");
    assert!((up + down - 1.0).abs() < 1e-9);
}

#[test]
fn off_law_profiles_are_rejected() {
    let k = KernelSpec::fractional_laplacian(1, 0.75).unwrap();
    assert!(Profile1D::for_kernel(&k, 1.0, vec![1.0], 0.5).is_err());
    assert!(Profile1D::new(1.0, vec![1.0], 0.0, 0.4, 0.75).is_err());
    assert!(Profile1D::new(1.0, vec![0.5], 0.0, 0.6, 0.75).is_err());
    assert!(gamma_critical(&k, &[1.0], 0.0).is_err());
}

proptest! {
    #[test]
    fn critical_exponent_matches_arctan_law(v in 0.0f64..20.0, phi in 0.0f64..(2.0 * PI)) {
        let k = KernelSpec::fractional_laplacian(2, 0.5).unwrap();
        let g = gamma_critical(&k, &[phi.cos(), phi.sin()], v).unwrap();
        prop_assert!((g - (0.5 + v.atan() / PI)).abs() < 1e-10);
        prop_assert!((0.5..1.0).contains(&g));
    }

    #[test]
    fn critical_exponent_increases_with_speed(v in 0.0f64..5.0, dv in 0.01f64..1.0) {
        let k = KernelSpec::fractional_laplacian(1, 0.5).unwrap();
        prop_assert!(gamma_critical(&k, &[1.0], v + dv).unwrap() > gamma_critical(&k, &[1.0], v).unwrap());
    }

    #[test]
    fn speed_is_measured_in_units_of_the_symbol(c in 0.5f64..2.0, v in 0.0f64..3.0) {
        let k1 = KernelSpec::fractional_laplacian(1, 0.5).unwrap();
        let kc = make_kernel(0.5, 0.4, 2.5, SphericalDensity::isotropic(c), vec![], 1).unwrap();
        let ratio = symbol(&kc, &[1.0], 1.0).unwrap().a / symbol(&k1, &[1.0], 1.0).unwrap().a;
        prop_assert!((ratio - c).abs() < 1e-9);
        let a = gamma_critical(&kc, &[1.0], c * v).unwrap();
        let b = gamma_critical(&k1, &[1.0], v).unwrap();
        prop_assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn drift_exponent_decreases(b in 0.0f64..10.0, db in 0.01f64..1.0) {
        let g = gamma_drift(b).unwrap();
        prop_assert!(g > 0.0 && g <= 0.5);
        prop_assert!(gamma_drift(b + db).unwrap() < g);
    }

    #[test]
    fn profiles_are_parabolically_homogeneous(
        v in 0.0f64..2.0, x in -1.0f64..2.0, t in -1.0f64..1.0, lam in 0.1f64..4.0,
    ) {
        let k = KernelSpec::fractional_laplacian(1, 0.5).unwrap();
        let p = Profile1D::for_kernel(&k, 0.7, vec![1.0], v).unwrap();
        let a = eval_profile(&p, &[lam * x], lam * t);
        let b = lam.powf(1.0 + p.gamma) * eval_profile(&p, &[x], t);
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
    }
}
