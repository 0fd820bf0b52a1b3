//! Critical exponents and the residual of traveling power profiles.

use fbreg::operator::KernelSpec;
use fbreg::profiles::{gamma_critical, gamma_drift, profile_residual, Profile1D};

fn main() -> fbreg::Result<()> {
    let k = KernelSpec::fractional_laplacian(1, 0.5)?;
    for v in [0.0, 0.5, 1.0, 3f64.sqrt()] {
        println!("v = {v:.4}: γ = {:.6}", gamma_critical(&k, &[1.0], v)?);
    }
    println!("drift |b| = 1: γ = {}", gamma_drift(1.0)?);

    let p = Profile1D::for_kernel(&k, 1.0, vec![1.0], 1.0)?;
    let hs = [1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0];
    let r = profile_residual(&k, &p, &[0.25, 0.5, 1.0], &hs)?;
    for l in &r.levels {
        println!("h = {:.5}: residual {:.3e}", l.h, l.residual);
    }
    if let Some(o) = r.order {
        println!("observed order {:.2}", o.order);
    }
    Ok(())
}
