//! Certifies barrier inequalities on refining lattices: a cone
//! supersolution with a searched decay exponent and the regularized pair
//! around a flat moving boundary.

use fbreg::barriers::{
    cone_samples, cone_supersolution, search_descending, search_regularized, verify_inequality, MovingDomain,
    VerifyOptions,
};
use fbreg::operator::KernelSpec;
use fbreg::profiles::gamma_critical;

fn main() -> fbreg::Result<()> {
    let hs = [1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0];
    let opts = VerifyOptions::default();
    let k = KernelSpec::fractional_laplacian(1, 0.5)?;
    let radii: Vec<f64> = (0..20).map(|i| 0.1 + 0.09 * i as f64).collect();
    let search = search_descending("theta", &[0.9, 0.4, 0.2], |th| {
        let b = cone_supersolution(&[1.0], 0.5, th)?;
        verify_inequality(&k, &b, &cone_samples(&b, &radii, 1, opts.collar * hs[0]), &hs, &opts)
    })?;
    for (th, pass, margin) in &search.tried {
        println!("cone θ = {th}: {} (margin {margin:.3e})", if *pass { "certified" } else { "fails" });
    }

    let domain = MovingDomain::flat(&[1.0], 0.5)?;
    let g0 = gamma_critical(&k, &[1.0], 0.5)?;
    let pair = search_regularized(&k, &domain, g0, 0.2, &hs, 12, 10, &opts)?;
    println!("regularized pair at γ₀ = {g0:.4}: M = {:?}, δ₀ = {:?}, sandwich {:?}", pair.m, pair.delta0, pair.sandwich);
    Ok(())
}
