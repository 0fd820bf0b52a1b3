//! Applies `-(-Δ)^s` to a grid function and compares with a closed form,
//! then prints the symbol of an anisotropic kernel.

use fbreg::operator::{
    apply_operator, make_kernel, symbol, EvalOptions, ExteriorRule, GridFunction, Growth, KernelSpec, SphericalDensity,
};

fn main() -> fbreg::Result<()> {
    let k = KernelSpec::fractional_laplacian(1, 0.5)?;
    let h = 1.0 / 64.0;
    let u = GridFunction::from_fn(&[257], h, &[-2.0], 0.5, |x| 1.0 / (1.0 + x[0] * x[0]));
    let ext = ExteriorRule::function(|x, _| 1.0 / (1.0 + x[0] * x[0]), Growth::bounded(1.0));
    let lu = apply_operator(&k, &u, &ext, None, &EvalOptions::default())?;
    let worst = (0..u.values.len())
        .map(|i| {
            let x = u.coords(i)[0];
            (lu.values[i] + (1.0 - x * x) / (1.0 + x * x).powi(2)).abs()
        })
        .fold(0.0, f64::max);
    println!("max error of -√(-Δ) (1+x²)⁻¹ at h = {h}: {worst:.3e}");

    let density = SphericalDensity::from_fn(|phi| 1.0 + 0.5 * (2.0 * phi).cos(), 32);
    let aniso = make_kernel(0.75, 0.5, 1.5, density, vec![], 2)?;
    for deg in [0.0f64, 45.0, 90.0] {
        let a = deg.to_radians();
        let sym = symbol(&aniso, &[a.cos(), a.sin()], 1.0)?;
        println!("direction {deg:>4}°: A = {:.6}, B = {:.6}", sym.a, sym.b);
    }
    Ok(())
}
