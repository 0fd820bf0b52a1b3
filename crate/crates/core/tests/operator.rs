use std::f64::consts::PI;
use std::sync::Arc;

use fbreg::operator::{
    apply_operator, effective_1d_kernel, make_kernel, symbol, DriftScheme, EvalOptions, ExteriorRule, GridFunction,
    Growth, KernelSpec, PointEvaluator, SphericalDensity,
};
use proptest::prelude::*;

fn opts() -> EvalOptions {
    EvalOptions::default()
}

fn lgamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// `(-Δ)^s (1+|x|²)^{-(n-2s)/2} = 4^s Γ((n+2s)/2)/Γ((n-2s)/2) (1+|x|²)^{-(n+2s)/2}`.
/// `-(-Δ)^s (1+|x|²)^{-1}` in dimension n via the Gauss series, valid for |x| < 1.
fn bump_oracle(n: usize, s: f64, r2: f64) -> f64 {
    let h = n as f64 / 2.0;
    let c = 4f64.powf(s) * (lgamma(1.0 + s) + lgamma(h + s) - lgamma(h)).exp();
    let (a, b, cc, z) = (1.0 + s, h + s, h, -r2);
    let (mut term, mut sum) = (1.0, 1.0);
    for k in 0..20000 {
        let kf = k as f64;
        term *= (a + kf) * (b + kf) / ((cc + kf) * (kf + 1.0)) * z;
        sum += term;
        if term.abs() < 1e-16 * sum.abs() {
            break;
        }
    }
    -c * sum
}

#[test]
fn constants_are_annihilated() {
    for (d, s) in [(1, 0.3), (1, 0.75), (2, 0.5)] {
        let k = KernelSpec::fractional_laplacian(d, s).unwrap();
        let dims = vec![9; d];
        let u = GridFunction::from_fn(&dims, 0.25, &vec![-1.0; d], s, |_| 3.5);
        for ext in [
            ExteriorRule::Constant(3.5),
            ExteriorRule::Periodic,
            ExteriorRule::function(|_, _| 3.5, Growth::bounded(3.5)),
        ] {
            let lu = apply_operator(&k, &u, &ext, None, &opts()).unwrap();
            let worst = lu.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            assert!(worst < 1e-8, "d={d} s={s} {ext:?}: {worst}");
        }
    }
}

#[test]
fn pointwise_evaluation_matches_closed_form_on_decaying_bumps() {
    // -√(-Δ) (1+x²)^{-1} = -(1-x²)/(1+x²)²
    let k = KernelSpec::fractional_laplacian(1, 0.5).unwrap();
    let ev = PointEvaluator::new(&k, 0.02, 2.0, opts()).unwrap();
    for x in [0.0, 0.4, 1.3] {
        let got = ev.eval(&|y: &[f64]| 1.0 / (1.0 + y[0] * y[0]), &Growth::bounded(1.0), &[x]).unwrap().value;
        let want = -(1.0 - x * x) / (1.0 + x * x).powi(2);
        assert!((got - want).abs() < 1e-3, "x={x}: {got} vs {want}");
    }
    for (d, s, h) in [(1, 0.75, 0.02), (1, 0.3, 0.02), (2, 0.5, 0.05), (2, 0.75, 0.05)] {
        let k = KernelSpec::fractional_laplacian(d, s).unwrap();
        let ev = PointEvaluator::new(&k, h, 2.0, opts()).unwrap();
        let f = |x: &[f64]| 1.0 / (1.0 + x.iter().map(|v| v * v).sum::<f64>());
        for x in [vec![0.0; d], vec![0.5; d]] {
            let got = ev.eval(&f, &Growth::bounded(1.0), &x).unwrap().value;
            let r2: f64 = x.iter().map(|v| v * v).sum();
            let want = bump_oracle(d, s, r2);
            assert!((got - want).abs() < 2e-3 * want.abs(), "d={d} s={s} x={x:?}: {got} vs {want}");
        }
    }
}

/// Discrete Fourier coefficient `(2/N) Σ u_j e^{-i k x_j}` (real part).
fn dft_cos_coefficient(u: &[f64], k: usize) -> (f64, f64) {
    let n = u.len();
    let (mut re, mut im) = (0.0, 0.0);
    for (j, v) in u.iter().enumerate() {
        let x = 2.0 * PI * (j * k) as f64 / n as f64;
        re += v * x.cos();
        im -= v * x.sin();
    }
    (2.0 * re / n as f64, 2.0 * im / n as f64)
}

#[test]
fn cosine_is_an_eigenfunction_with_periodic_extension() {
    for s in [0.3, 0.5, 0.75] {
        let k = KernelSpec::fractional_laplacian(1, s).unwrap();
        let mut errs = vec![];
        let mut hs = vec![];
        for n in [32usize, 64, 128] {
            let h = 2.0 * PI / n as f64;
            let u = GridFunction::from_fn(&[n], h, &[0.0], s, |x| x[0].cos());
            let lu = apply_operator(&k, &u, &ExteriorRule::Periodic, None, &opts()).unwrap();
            // circulant operator: output is a pure frequency-1 cosine whose
            // coefficient approximates -|1|^{2s} = -1
            let (c1, s1) = dft_cos_coefficient(&lu.values, 1);
            for q in [0usize, 2, 3, 5] {
                let (a, b) = dft_cos_coefficient(&lu.values, q);
                assert!(a.abs() + b.abs() < 1e-9, "leak at frequency {q}");
            }
            assert!(s1.abs() < 1e-10);
            let err = lu
                .values
                .iter()
                .enumerate()
                .map(|(j, v)| (v + (j as f64 * h).cos()).abs())
                .fold(0.0, f64::max);
            assert!((err - (c1 + 1.0).abs()).abs() < 1e-9);
            errs.push(err);
            hs.push(h);
        }
        let order = (errs[0] / errs[2]).ln() / (hs[0] / hs[2]).ln();
        assert!(order >= 1.0, "s={s} errors {errs:?} order {order}");
        assert!(errs[2] < 1e-2, "s={s} {errs:?}");
    }
}

#[test]
fn positive_part_power_is_annihilated_away_from_the_origin() {
    for s in [0.5, 0.75] {
        let k = KernelSpec::fractional_laplacian(1, s).unwrap();
        let f = move |x: &[f64]| x[0].max(0.0).powf(s);
        let amp: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync> = Arc::new(move |th: &[f64]| th[0].max(0.0).powf(s));
        let g = Growth::power(s, 1.0, Some(amp));
        let mut res = vec![];
        for h in [0.05, 0.025, 0.0125] {
            let ev = PointEvaluator::new(&k, h, 4.0, opts()).unwrap();
            let worst = [0.5, 0.75, 1.0, 1.5]
                .iter()
                .map(|x| ev.eval(&f, &g, &[*x]).unwrap().value.abs())
                .fold(0.0, f64::max);
            res.push(worst);
        }
        assert!(res[2] < res[1] && res[1] < res[0], "s={s} {res:?}");
        assert!(res[2] < 1e-2, "s={s} {res:?}");
    }
}

#[test]
fn odd_functions_vanish_at_the_center_for_symmetric_kernels() {
    let d = SphericalDensity::from_fn(|p| 1.0 + 0.5 * p.cos().powi(2) + 0.2 * (2.0 * p).sin(), 16);
    let k = make_kernel(0.6, 0.5, 2.0, d, vec![], 2).unwrap();
    let odd = |x: &[f64]| {
        if x[0].abs().max(x[1].abs()) < 3.0 {
            x[0].powi(3) - 2.0 * x[1] + x[0] * x[1] * x[1]
        } else {
            0.0
        }
    };
    let u = GridFunction::from_fn(&[11, 11], 0.1, &[-0.5, -0.5], 0.6, odd);
    let ext = ExteriorRule::function(move |x: &[f64], _| odd(x), Growth::compact(3.0 * 2f64.sqrt()));
    let lu = apply_operator(&k, &u, &ext, None, &opts()).unwrap();
    let center = lu.flat_index(&[5, 5]);
    assert!(lu.values[center].abs() < 1e-9, "{}", lu.values[center]);
}

#[test]
fn convex_function_with_zero_minimum_has_nonnegative_operator_value() {
    let k = KernelSpec::fractional_laplacian(2, 0.75).unwrap();
    let u = GridFunction::from_fn(&[9, 9], 0.125, &[-0.5, -0.5], 0.75, |x| x[0] * x[0] + 0.3 * x[1] * x[1] + 0.1 * x[0] * x[1]);
    let ext = ExteriorRule::function(
        |x: &[f64], _| x[0] * x[0] + 0.3 * x[1] * x[1] + 0.1 * x[0] * x[1],
        Growth::power(2.0, 1.0, None),
    );
    // quadratic growth is not integrable for 2s = 1.5: rejected
    assert!(apply_operator(&k, &u, &ext, None, &opts()).is_err());
    let ext = ExteriorRule::function(
        |x: &[f64], _| (x[0] * x[0] + 0.3 * x[1] * x[1] + 0.1 * x[0] * x[1]).sqrt(),
        Growth::power(1.0, 1.0, None),
    );
    let u = GridFunction::from_fn(&[9, 9], 0.125, &[-0.5, -0.5], 0.75, |x| {
        (x[0] * x[0] + 0.3 * x[1] * x[1] + 0.1 * x[0] * x[1]).sqrt()
    });
    let lu = apply_operator(&k, &u, &ext, None, &opts()).unwrap();
    assert!(lu.values[lu.flat_index(&[4, 4])] >= 0.0);
}

#[test]
fn symbol_is_homogeneous() {
    let d = SphericalDensity::from_fn(|p| 1.0 + 0.5 * p.cos().powi(2) + 0.2 * p.sin().powi(3), 16);
    for s in [0.3, 0.6, 0.75] {
        let k = make_kernel(s, 0.5, 2.0, d.clone(), vec![], 2).unwrap();
        let e = [0.28, 0.96];
        let one = symbol(&k, &e, 1.0).unwrap();
        for r in [0.01, 3.0, 250.0] {
            let sr = symbol(&k, &e, r).unwrap();
            let scale = r.powf(2.0 * s);
            assert!((sr.a / (one.a * scale) - 1.0).abs() < 1e-10);
            assert!((sr.b / (one.b * scale) - 1.0).abs() < 1e-10);
            let back = symbol(&k, &[-e[0], -e[1]], r).unwrap();
            assert!((back.a - sr.a).abs() < 1e-12 * sr.a);
            assert!((back.b + sr.b).abs() < 1e-12 * sr.a);
        }
    }
}

/// Reference: composite midpoint rule on a 2·10^6-point circle mesh with
/// Richardson extrapolation.
fn circle_oracle(f: impl Fn(f64) -> f64) -> f64 {
    let mid = |n: usize| -> f64 {
        let w = 2.0 * PI / n as f64;
        (0..n).map(|i| f(0.123 + (i as f64 + 0.5) * w)).sum::<f64>() * w
    };
    mid(2_000_000)
}

#[test]
fn anisotropic_symbol_matches_reference_quadrature() {
    let s = 0.75;
    let d = SphericalDensity::from_fn(|p| 1.0 + 0.5 * p.cos().powi(2), 16);
    let k = make_kernel(s, 1.0, 1.5, d, vec![], 2).unwrap();
    let c = fbreg::operator::norm_const(2, s);
    let dcos = PI / (2.0 * libm::tgamma(1.0 + 2.0 * s) * (PI * s).sin());
    for e in [[1.0f64, 0.0], [0.0, 1.0], [0.6, -0.8]] {
        let alpha = e[1].atan2(e[0]);
        let want = dcos * c * circle_oracle(|p| (1.0 + 0.5 * p.cos().powi(2)) * (p - alpha).cos().abs().powf(2.0 * s));
        let got = symbol(&k, &e, 1.0).unwrap().a;
        assert!((got - want).abs() < 1e-8, "{e:?}: {got} vs {want}");
    }
}

#[test]
fn effective_kernel_strength_is_the_symbol() {
    let d = SphericalDensity::from_fn(|p| 1.0 + 0.5 * p.cos().powi(2), 16);
    let k = make_kernel(0.75, 1.0, 1.5, d, vec![], 2).unwrap();
    let eff = effective_1d_kernel(&k, &[0.0, 1.0], 0.0).unwrap();
    let a2 = symbol(&k, &[0.0, 1.0], 1.0).unwrap().a;
    assert!((eff.density.mean - a2).abs() < 1e-14);
    assert!((symbol(&eff, &[1.0], 1.0).unwrap().a - a2).abs() < 1e-12);
}

#[test]
fn nonsymmetric_one_dimensional_reduction_reproduces_the_imaginary_part() {
    let d = SphericalDensity::from_fn(|p| 1.0 + 0.3 * p.cos() + 0.2 * p.sin(), 16);
    let k = make_kernel(0.75, 0.4, 1.6, d, vec![], 2).unwrap();
    let e = [0.6, 0.8];
    let full = symbol(&k, &e, 1.0).unwrap();
    let eff = effective_1d_kernel(&k, &e, 0.0).unwrap();
    let red = symbol(&eff, &[1.0], 1.0).unwrap();
    assert!((red.a - full.a).abs() < 1e-12);
    assert!((red.b - full.b).abs() < 1e-12);
}

#[test]
fn drift_scheme_auto_falls_back_to_upwind_when_needed() {
    let k = KernelSpec::half_laplacian_with_drift(vec![3.0]).unwrap();
    let st = fbreg::operator::Stencil::new(&k, 0.01, 50, DriftScheme::Auto);
    assert_eq!(st.scheme, DriftScheme::Upwind);
    assert!(st.min_off_diagonal() >= 0.0);
    let k = KernelSpec::half_laplacian_with_drift(vec![0.1]).unwrap();
    let st = fbreg::operator::Stencil::new(&k, 0.01, 50, DriftScheme::Auto);
    assert_eq!(st.scheme, DriftScheme::Centered);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]
    #[test]
    fn operator_is_linear(a in -3.0f64..3.0, b in -3.0f64..3.0, seed in 0u64..1000) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let k = KernelSpec::fractional_laplacian(1, 0.6).unwrap();
        let u: Vec<f64> = (0..40).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let w: Vec<f64> = (0..40).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mk = |v: Vec<f64>| { let mut g = GridFunction::zeros(&[40], 0.05, &[0.0], 0.6); g.values = v; g };
        let comb: Vec<f64> = u.iter().zip(&w).map(|(x, y)| a * x + b * y).collect();
        let ext = ExteriorRule::Constant(0.0);
        let lu = apply_operator(&k, &mk(u), &ext, None, &opts()).unwrap();
        let lw = apply_operator(&k, &mk(w), &ext, None, &opts()).unwrap();
        let lc = apply_operator(&k, &mk(comb), &ext, None, &opts()).unwrap();
        for i in 0..40 {
            let want = a * lu.values[i] + b * lw.values[i];
            prop_assert!((lc.values[i] - want).abs() < 1e-9 * (1.0 + want.abs()));
        }
    }
}
