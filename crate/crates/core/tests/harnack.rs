use fbreg::harnack::{run_harnack, HarnackScenario};
use fbreg::operator::KernelSpec;

fn coarse(omega: f64) -> HarnackScenario {
    let mut sc = HarnackScenario::one_dimensional(0.5, omega, 0.01).unwrap();
    sc.h = 1.0 / 32.0;
    sc.steps = 48;
    sc.radii = vec![0.5, 0.25, 0.125];
    sc.solver.tol = 1e-13;
    sc
}

#[test]
fn quotient_is_invariant_under_rescaling_either_solution() {
    let base = coarse(0.0);
    let r0 = run_harnack(&base).unwrap();
    for a in [0.25, 7.0] {
        let mut sc = base.clone();
        sc.data = [sc.data[0].clone(), sc.data[1].scaled(a)];
        let r = run_harnack(&sc).unwrap();
        for (x, y) in r0.rows.iter().zip(&r.rows) {
            assert!((y.osc - x.osc / a).abs() <= 1e-6 * x.osc / a, "a={a}: {} vs {}", y.osc, x.osc / a);
        }
        assert!((r.comparability.0 - r0.comparability.0).abs() < 1e-6);
        assert!((r.comparability.1 - r0.comparability.1).abs() < 1e-6);
        assert_eq!(r.alpha.is_some(), r0.alpha.is_some());
        if let (Some(p), Some(q)) = (r.alpha, r0.alpha) {
            assert!((p - q).abs() < 1e-6);
        }
    }
}

#[test]
fn identical_solutions_have_constant_quotient() {
    let mut sc = coarse(0.5);
    sc.data = [sc.data[0].clone(), sc.data[0].scaled(2.0)];
    let r = run_harnack(&sc).unwrap();
    assert!(r.rows.iter().all(|row| row.osc < 1e-12), "{:?}", r.rows);
    assert!(r.alpha.is_none());
}

#[test]
fn the_vanishing_set_travels_with_the_cone() {
    let sc = coarse(0.5);
    let t_end = sc.horizon;
    assert!(sc.in_vanishing_set(&[-0.1], t_end));
    assert!(!sc.in_vanishing_set(&[0.1], t_end));
    // one unit of time earlier the apex sat at ω = 0.5
    assert!(sc.in_vanishing_set(&[0.3], t_end - 1.0));
    assert!(!sc.in_vanishing_set(&[0.6], t_end - 1.0));
}

#[test]
fn orders_below_one_half_are_rejected() {
    assert!(HarnackScenario::one_dimensional(0.4, 0.0, 0.01).is_err());
    let k = KernelSpec::fractional_laplacian(1, 0.3).unwrap();
    let data = HarnackScenario::one_dimensional(0.5, 0.0, 0.01).unwrap().data;
    assert!(HarnackScenario::new(k, &[1.0], 1.0, 0.0, 0.01, data).is_err());
}
